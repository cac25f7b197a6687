//! Two-sample Kolmogorov–Smirnov test.
//!
//! Used by the distributional identity checks (infinite divisibility,
//! stable scaling). The p-value is the asymptotic Kolmogorov distribution
//! with the Stephens small-sample correction, which is accurate far beyond
//! the 1e5-sample regime exercised here.

/// Result of a two-sample KS test.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    /// Supremum distance between the two empirical cdfs.
    pub statistic: f64,
    /// Asymptotic two-sided p-value.
    pub p_value: f64,
}

impl KsResult {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-sample KS statistic and p-value. Ties (e.g. atoms at zero) are
/// handled by evaluating the cdf gap only after consuming every equal value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    assert!(!xs.is_empty() && !ys.is_empty(), "ks: empty sample");
    let mut a: Vec<f64> = xs.to_vec();
    let mut b: Vec<f64> = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).expect("ks: NaN in sample"));
    b.sort_by(|p, q| p.partial_cmp(q).expect("ks: NaN in sample"));

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }

    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
