//! Elementary lattice facts: the fractional triangle inequality and counting of
//! integer points on conics.

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use serde::Serialize;
use std::collections::{HashMap, HashSet};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FracPowerCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

fn weighted_norm(k: &[i64], periods: &[f64]) -> f64 {
    2.0 * std::f64::consts::PI * k.iter().zip(periods).map(|(&ki, &p)| (ki as f64 / p).powi(2)).sum::<f64>().sqrt()
}

/// `||k|^ε - |k₃|^ε| ≤ |k - k₃|^ε` for the θ-weighted norm.
pub fn frac_power_triangle(eps: f64, k: &[i64], k3: &[i64], periods: &[f64]) -> Result<FracPowerCheck> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("ε must lie in [0, 1], got {eps}")));
    }
    if k.len() != k3.len() || k.len() != periods.len() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let diff: Vec<i64> = k.iter().zip(k3).map(|(a, b)| a - b).collect();
    let a = weighted_norm(k, periods);
    let b = weighted_norm(k3, periods);
    let lhs = (a.powf(eps) - b.powf(eps)).abs();
    let rhs = weighted_norm(&diff, periods).powf(eps);
    Ok(FracPowerCheck { lhs, rhs, ok: lhs <= rhs + 1e-12 })
}

fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Number of `(k₁, k₂) ∈ [N, 2N] × {0, 1, 2, …}` with `k₁² + σk₂² = M`, by testing,
/// for every `k₁`, whether `σ(M - k₁²)` is a perfect square.
pub fn gauss_count(m: i64, n: u64, sigma: i8) -> Result<u64> {
    check(n, sigma)?;
    let mut count = 0;
    for k1 in n..=2 * n {
        let rest = sigma as i64 * (m - (k1 * k1) as i64);
        if rest < 0 {
            continue;
        }
        let r = isqrt(rest as u64);
        if r * r == rest as u64 {
            count += 1;
        }
    }
    Ok(count)
}

/// Same count from a precomputed set of squares.
pub fn gauss_count_hashed(m: i64, n: u64, sigma: i8) -> Result<u64> {
    check(n, sigma)?;
    let hi = (2 * n) as i64;
    let bound = (hi * hi + m.abs()) as u64;
    let squares: HashSet<u64> = (0..=isqrt(bound) + 1).map(|k| k * k).collect();
    Ok((n..=2 * n)
        .filter(|&k1| {
            let rest = sigma as i64 * (m - (k1 * k1) as i64);
            rest >= 0 && squares.contains(&(rest as u64))
        })
        .count() as u64)
}

fn check(n: u64, sigma: i8) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if sigma != 1 && sigma != -1 {
        return Err(Error::InvalidArgument(format!("σ must be ±1, got {sigma}")));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussGrowth {
    pub n: Vec<u64>,
    /// `max_{1 ≤ M ≤ M_max} gauss_count(M, N, σ)`.
    pub max_count: Vec<u64>,
    pub fit: LineFit,
}

/// Largest count over `1 ≤ M ≤ m_max` for each `N`, and the fitted growth exponent.
/// `M = 0` is excluded: for `σ = -1` it carries the `N + 1` diagonal solutions.
pub fn gauss_growth(ns: &[u64], m_max: i64, sigma: i8) -> Result<GaussGrowth> {
    let mut max_count = Vec::with_capacity(ns.len());
    for &n in ns {
        check(n, sigma)?;
        let mut hist: HashMap<i64, u64> = HashMap::new();
        for k1 in n..=2 * n {
            let a = (k1 * k1) as i64;
            if sigma == 1 {
                let mut k2 = 0i64;
                while a + k2 * k2 <= m_max {
                    *hist.entry(a + k2 * k2).or_default() += 1;
                    k2 += 1;
                }
            } else {
                // k₂² = k₁² - M with 1 ≤ M ≤ m_max
                let lo = (a - m_max).max(0);
                let mut k2 = isqrt(lo as u64) as i64;
                while k2 * k2 < a {
                    let mm = a - k2 * k2;
                    if mm >= 1 && mm <= m_max {
                        *hist.entry(mm).or_default() += 1;
                    }
                    k2 += 1;
                }
            }
        }
        max_count.push(hist.values().cloned().max().unwrap_or(0));
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = max_count.iter().map(|&c| c as f64).collect();
    let fit = loglog_fit(&x, &y)?;
    Ok(GaussGrowth { n: ns.to_vec(), max_count, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_examples() {
        let p = [1.0, 2.0_f64.sqrt()];
        let c = frac_power_triangle(0.5, &[3, -1], &[3, -1], &p).unwrap();
        assert!(c.ok && c.lhs == 0.0 && c.rhs == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let k: Vec<i64> = (0..2).map(|_| rng.gen_range(-20..=20)).collect();
            let k3: Vec<i64> = (0..2).map(|_| rng.gen_range(-20..=20)).collect();
            assert!(frac_power_triangle(1.0, &k, &k3, &p).unwrap().ok);
            assert!(frac_power_triangle(0.3, &k, &k3, &p).unwrap().ok);
        }
    }

    #[test]
    fn gauss_examples() {
        // k₁ = k₂ for k₁ = 4..8
        assert_eq!(gauss_count(0, 4, -1).unwrap(), 5);
        // k₁ ∈ [3, 6]: (3, 4), (4, 3), (5, 0)
        assert_eq!(gauss_count(25, 3, 1).unwrap(), 3);
        assert_eq!(gauss_count(-5, 2, 1).unwrap(), 0);
        assert!(gauss_count(1, 0, 1).is_err());
    }

    #[test]
    fn methods_agree() {
        for n in [1u64, 3, 8, 17] {
            for m in -300..=1200 {
                for s in [1i8, -1] {
                    assert_eq!(gauss_count(m, n, s).unwrap(), gauss_count_hashed(m, n, s).unwrap());
                }
            }
        }
    }

    #[test]
    fn growth_histogram_matches_direct_count() {
        let g = gauss_growth(&[4, 8], 400, 1).unwrap();
        for (i, &n) in g.n.iter().enumerate() {
            let direct = (1..=400).map(|m| gauss_count(m, n, 1).unwrap()).max().unwrap();
            assert_eq!(g.max_count[i], direct);
        }
        let g = gauss_growth(&[4, 8], 400, -1).unwrap();
        for (i, &n) in g.n.iter().enumerate() {
            let direct = (1..=400).map(|m| gauss_count(m, n, -1).unwrap()).max().unwrap();
            assert_eq!(g.max_count[i], direct);
        }
    }
}
