use serde::{Deserialize, Serialize};

use super::SimplexVector;
use crate::error::{Error, Result};

/// Prior pseudo-counts `v` and observed outcome counts `x` for one arm.
///
/// The posterior is `Dir(x + v + 1)`; its mode is `(x + v) / (n + β)` with
/// `β = Σ v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    prior: Vec<f64>,
    counts: Vec<u64>,
}

impl ArmState {
    pub fn new(prior: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if prior.len() < 2 {
            return Err(Error::invalid("an arm needs at least 2 outcome categories"));
        }
        if prior.len() != counts.len() {
            return Err(Error::invalid(format!(
                "prior has {} categories but counts has {}",
                prior.len(),
                counts.len()
            )));
        }
        if let Some(v) = prior.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("prior pseudo-count {v} must be positive")));
        }
        Ok(ArmState { prior, counts })
    }

    /// Arm with no observations and prior pseudo-counts `v = beta * mode`.
    pub fn from_prior_mode(mode: &SimplexVector, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("prior beta {beta} must be positive")));
        }
        let prior = mode.as_slice().iter().map(|m| m * beta).collect::<Vec<_>>();
        let d = prior.len();
        ArmState::new(prior, vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.prior.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of observations on this arm.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Prior concentration β = Σ v.
    pub fn beta(&self) -> f64 {
        self.prior.iter().sum()
    }

    /// Returns the state after observing `outcome`.
    pub fn posterior_update(&self, outcome: usize) -> Result<ArmState> {
        let mut next = self.clone();
        next.record(outcome)?;
        Ok(next)
    }

    /// In-place form of [`ArmState::posterior_update`].
    pub fn record(&mut self, outcome: usize) -> Result<()> {
        match self.counts.get_mut(outcome) {
            Some(c) => {
                *c += 1;
                Ok(())
            }
            None => Err(Error::invalid(format!(
                "outcome index {outcome} out of range for {} categories",
                self.prior.len()
            ))),
        }
    }

    /// Mode of the Dirichlet posterior, `(x_i + v_i) / (n + β)`.
    pub fn posterior_mode(&self) -> SimplexVector {
        let denom = self.n() as f64 + self.beta();
        let mode = self
            .counts
            .iter()
            .zip(&self.prior)
            .map(|(&x, &v)| (x as f64 + v) / denom)
            .collect();
        // Positive pseudo-counts keep every component strictly inside (0, 1).
        SimplexVector::new(mode).expect("posterior mode lies inside the simplex")
    }

    /// Posterior Dirichlet parameters `x + v + 1`.
    pub fn dirichlet_params(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.prior)
            .map(|(&x, &v)| x as f64 + v + 1.0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(v: &[f64], x: &[u64]) -> ArmState {
        ArmState::new(v.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn update_increments_one_count() {
        let s = state(&[0.25, 0.75], &[0, 0]).posterior_update(0).unwrap();
        assert_eq!(s.counts(), &[1, 0]);
        assert_eq!(s.n(), 1);

        let s = state(&[0.25, 0.75], &[2, 8]).posterior_update(1).unwrap();
        assert_eq!(s.counts(), &[2, 9]);
        assert_eq!(s.n(), 11);
    }

    #[test]
    fn update_every_category_once() {
        let mut s = state(&[0.5, 1.0, 2.0], &[3, 0, 5]);
        let before = s.clone();
        for k in 0..3 {
            s = s.posterior_update(k).unwrap();
        }
        assert_eq!(s.n(), before.n() + 3);
        for k in 0..3 {
            assert_eq!(s.counts()[k], before.counts()[k] + 1);
        }
    }

    #[test]
    fn out_of_range_outcome_is_rejected() {
        let s = state(&[0.25, 0.75], &[0, 0]);
        assert!(matches!(s.posterior_update(2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_priors_are_rejected() {
        assert!(ArmState::new(vec![0.0, 1.0], vec![0, 0]).is_err());
        assert!(ArmState::new(vec![1.0, 1.0], vec![0]).is_err());
        assert!(ArmState::new(vec![1.0], vec![0]).is_err());
    }

    #[test]
    fn posterior_mode_values() {
        let prior_only = state(&[0.25, 0.75], &[0, 0]).posterior_mode();
        assert_eq!(prior_only.as_slice(), &[0.25, 0.75]);

        let m = state(&[0.25, 0.75], &[2, 8]).posterior_mode();
        assert!((m[0] - 2.25 / 11.0).abs() < 1e-15);
        assert!((m[1] - 8.75 / 11.0).abs() < 1e-15);
        assert!((m[0] - 0.20455).abs() < 1e-5);

        let mode = SimplexVector::new(vec![0.99, 0.01]).unwrap();
        let s = ArmState::from_prior_mode(&mode, 2.0).unwrap();
        assert!((s.prior()[0] - 1.98).abs() < 1e-15);
        assert!((s.prior()[1] - 0.02).abs() < 1e-15);
        let m = s.posterior_mode();
        assert!((m[0] - 0.99).abs() < 1e-15 && (m[1] - 0.01).abs() < 1e-15);
    }
}
