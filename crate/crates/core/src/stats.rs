//! Small statistical helpers shared by the estimators and test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square goodness of fit against the uniform distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn chi_square_uniform(counts: &[usize]) -> ChiSquare {
    let k = counts.len();
    let total: usize = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    chi_square_from(statistic, k - 1)
}

/// Chi-square of observed counts against expected probabilities. Cells with
/// zero expected probability must have zero counts and are skipped.
pub fn chi_square_expected(counts: &[usize], probs: &[f64]) -> ChiSquare {
    let total: usize = counts.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 1e-12 {
            if c > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        let e = total as f64 * p;
        statistic += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    chi_square_from(statistic, cells.saturating_sub(1).max(1))
}

fn chi_square_from(statistic: f64, dof: usize) -> ChiSquare {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let p_value = if statistic.is_finite() {
        1.0 - dist.cdf(statistic)
    } else {
        0.0
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// `sqrt(p (1 - p) / n)`.
pub fn binomial_std_error(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Plug-in mutual information, in bits, of paired samples over `Z_d`.
pub fn mutual_information(pairs: &[(usize, usize)], d: usize) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mut joint = vec![0usize; d * d];
    let mut left = vec![0usize; d];
    let mut right = vec![0usize; d];
    for &(a, b) in pairs {
        joint[a * d + b] += 1;
        left[a] += 1;
        right[b] += 1;
    }
    let mut mi = 0.0;
    for a in 0..d {
        for b in 0..d {
            let c = joint[a * d + b];
            if c == 0 {
                continue;
            }
            let pab = c as f64 / n;
            let pa = left[a] as f64 / n;
            let pb = right[b] as f64 / n;
            mi += pab * (pab / (pa * pb)).log2();
        }
    }
    mi
}
