//! One-sided Fisher exact tests of each experimental arm against control,
//! combined with a Bonferroni correction.

use super::config::HypothesisTestConfig;
use super::trial::TrialRecord;
use crate::special::ln_gamma;

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// One-sided Fisher exact p-value for the 2×2 table
///
/// ```text
///             success  failure
///   arm          a        b
///   control      c        d
/// ```
///
/// against the alternative that the arm's success probability exceeds the
/// control's: `P(X ≥ a)` for `X` hypergeometric with the observed margins.
pub fn fisher_exact_pvalue(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let row = a + b;
    let successes = a + c;
    let total = a + b + c + d;
    if total == 0 || row == 0 || successes == 0 {
        return 1.0;
    }
    let hi = row.min(successes);
    let lo = row.saturating_sub(total - successes);
    if a <= lo {
        return 1.0;
    }
    // log P(X = a), then successive ratios P(x+1)/P(x).
    let ln_first = ln_choose(successes, a) + ln_choose(total - successes, row - a) - ln_choose(total, row);
    // N − K − n may be negative; the ratio stays positive for x ≥ lo.
    let offset = (total - successes) as f64 - row as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for x in a..hi {
        let xf = x as f64;
        term *= (successes as f64 - xf) * (row as f64 - xf) / ((xf + 1.0) * (offset + xf + 1.0));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (ln_first + sum.ln()).exp().min(1.0)
}

/// Smallest one-sided p-value over the experimental-vs-control comparisons.
pub fn min_pvalue(record: &TrialRecord, test: &HypothesisTestConfig, success_outcome: usize) -> f64 {
    let counts = |arm: usize| {
        let c = record.per_arm_counts[arm].counts();
        let s = c[success_outcome];
        (s, c.iter().sum::<u64>() - s)
    };
    let (cs, cf) = counts(test.control_index);
    (0..record.per_arm_counts.len())
        .filter(|&j| j != test.control_index)
        .map(|j| {
            let (s, f) = counts(j);
            fisher_exact_pvalue(s, f, cs, cf)
        })
        .fold(1.0, f64::min)
}

/// Whether a minimum p-value rejects H0 at `cutoff` split over
/// `comparisons` tests.
pub fn rejects(min_p: f64, cutoff: f64, comparisons: usize) -> bool {
    cutoff > 0.0 && min_p <= cutoff / comparisons.max(1) as f64
}

/// Rejects H0 iff any experimental-vs-control p-value is at most
/// `cutoff / (m − 1)`.
pub fn evaluate_hypotheses(record: &TrialRecord, test: &HypothesisTestConfig, success_outcome: usize) -> bool {
    let m = record.per_arm_counts.len();
    rejects(min_pvalue(record, test, success_outcome), test.cutoff, m - 1)
}

/// Family-level cutoff whose empirical rejection rate over `min_pvalues` is
/// as close to `alpha_target` as possible without exceeding it.
pub fn cutoff_from_null(min_pvalues: &[f64], alpha_target: f64, comparisons: usize) -> f64 {
    if min_pvalues.is_empty() || alpha_target <= 0.0 {
        return 0.0;
    }
    let mut sorted = min_pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let allowed = (alpha_target * sorted.len() as f64 + 1e-9).floor() as usize;
    if allowed == 0 {
        return 0.0;
    }
    // Largest threshold t with #{p ≤ t} ≤ allowed.
    let t = if allowed >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        let next = sorted[allowed];
        match sorted[..allowed].iter().rposition(|&p| p < next) {
            Some(i) => sorted[i],
            None => return 0.0,
        }
    };
    (t * comparisons.max(1) as f64).min(1.0)
}
