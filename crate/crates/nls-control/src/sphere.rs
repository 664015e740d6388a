//! Concentrating eigenfunctions `Φ_n = c_n(x₁+ix₂)^n` on the unit sphere `S³ ⊂ R⁴`
//! and the loss of observability from a band missing the great circle
//! `{x₃ = x₄ = 0}`.
//!
//! All integrands depend on `ρ = x₃² + x₄²` only, and the pushforward of the
//! surface measure is `2π² dρ` on `[0, 1]` (`|x₁+ix₂|² = 1 - ρ`), so
//! `‖(x₁+ix₂)^n‖²_{L²} = 2π²/(n+1)`. The `H¹` norm is `(1+λ_n)^{1/2}‖·‖_{L²}`.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_fit, LineFit};
use crate::quadrature::integrate;
use crate::torus::planck_step;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub fn eigenvalue(n: u64) -> u64 {
    n * (n + 2)
}

/// `vol(S³) = 2π²`.
pub const VOLUME: f64 = 2.0 * PI * PI;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HarmonicNorms {
    pub n: u64,
    pub lambda: u64,
    pub c_n: f64,
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
    /// `‖(x₁+ix₂)^n‖²_{L²}` from the closed form and by adaptive quadrature in `ρ`.
    pub l2_sq_unscaled: f64,
    pub l2_sq_quadrature: f64,
}

/// Norms of `Φ_n` with `c_n` chosen so that `‖Φ_n‖_{H¹} = r0`.
pub fn harmonic_norms(n: u64, r0: f64) -> Result<HarmonicNorms> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument("R0 must be positive".into()));
    }
    let lambda = eigenvalue(n);
    let l2_sq_unscaled = VOLUME / (n + 1) as f64;
    let nf = n as f64;
    let q = integrate(|rho: f64| (1.0 - rho).powf(nf), 0.0, 1.0, 0.0, 1e-13)?;
    let l2_sq_quadrature = VOLUME * q.value;
    let h1_unscaled = ((1 + lambda) as f64 * l2_sq_unscaled).sqrt();
    let c_n = r0 / h1_unscaled;
    Ok(HarmonicNorms {
        n,
        lambda,
        c_n,
        l2: c_n * l2_sq_unscaled.sqrt(),
        h1: r0,
        linf: c_n,
        l2_sq_unscaled,
        l2_sq_quadrature,
    })
}

/// `‖(x₁+ix₂)^n‖²_{L²(S³)}` by nested adaptive quadrature in hyperspherical
/// coordinates `x = (cos ψ, sin ψ cos ϑ, sin ψ sin ϑ cos φ, sin ψ sin ϑ sin φ)`,
/// measure `sin²ψ sin ϑ dψ dϑ dφ`.
pub fn l2_sq_hyperspherical(n: u64, tol: f64) -> Result<f64> {
    let nf = n as f64;
    let inner = |psi: f64| -> f64 {
        let (s, c) = psi.sin_cos();
        integrate(
            |th: f64| (c * c + s * s * th.cos().powi(2)).powf(nf) * th.sin(),
            0.0,
            PI,
            0.0,
            0.1 * tol,
        )
        .map(|r| r.value * s * s)
        .unwrap_or(f64::NAN)
    };
    let outer = integrate(inner, 0.0, PI, 0.0, tol)?;
    Ok(2.0 * PI * outer.value)
}

/// Cutoff `a = amplitude·S((ρ - δ)/ramp)` with `S` the Planck step, so
/// `a = 0` on `ρ ≤ δ`; `delta = 0, ramp = 0` denotes `a ≡ amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    pub delta: f64,
    pub ramp: f64,
    pub amplitude: f64,
}

impl BandProfile {
    pub fn new(delta: f64, ramp: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("δ must lie in (0, 1), got {delta}")));
        }
        if !(ramp > 0.0 && delta + ramp < 1.0) {
            return Err(Error::InvalidArgument(format!("ramp must be positive with δ + ramp < 1, got {ramp}")));
        }
        Ok(BandProfile { delta, ramp, amplitude: 1.0 })
    }

    pub fn uniform() -> Self {
        BandProfile { delta: 0.0, ramp: 0.0, amplitude: 1.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        BandProfile { amplitude: self.amplitude * c, ..self }
    }

    fn is_uniform(&self) -> bool {
        self.ramp == 0.0
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if self.is_uniform() {
            self.amplitude
        } else {
            self.amplitude * planck_step((rho - self.delta) / self.ramp)
        }
    }

    /// `max_ρ log(a(ρ)(1-ρ)^{n/2})`, by a grid search on the ramp refined by
    /// golden sections (beyond the ramp the expression decreases).
    pub fn log_sup(&self, n: u64) -> f64 {
        let nf = n as f64;
        if self.is_uniform() {
            return self.amplitude.ln();
        }
        let g = |rho: f64| {
            let a = self.eval(rho);
            if a <= 0.0 || rho >= 1.0 {
                f64::NEG_INFINITY
            } else {
                a.ln() + 0.5 * nf * (1.0 - rho).ln()
            }
        };
        let (lo, hi) = (self.delta, self.delta + self.ramp);
        let m = 2000;
        let h = (hi - lo) / m as f64;
        let best = (1..=m).max_by(|&i, &j| g(lo + i as f64 * h).total_cmp(&g(lo + j as f64 * h))).expect("grid");
        let (mut a, mut b) = (lo + (best - 1) as f64 * h, (lo + (best + 1) as f64 * h).min(hi));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - r * (b - a);
            let x2 = a + r * (b - a);
            if g(x1) < g(x2) {
                a = x1;
            } else {
                b = x2;
            }
        }
        g(0.5 * (a + b)).max(g(lo + best as f64 * h))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub n: u64,
    pub lambda: u64,
    pub c_n: f64,
    /// `log ‖aΦ_n‖_{L∞}`.
    pub log_sup: f64,
    pub sup: f64,
    /// `‖aΦ_n‖_∞` below double precision relative to `‖Φ_n‖_∞`.
    pub underflow: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub band: BandProfile,
    pub rows: Vec<ConcentrationRow>,
    /// Fit of `log ‖aΦ_n‖_∞` against `n`.
    pub fit: LineFit,
    /// `½ log(1-δ)`.
    pub predicted_slope: f64,
}

pub fn concentration_decay(band: BandProfile, n_list: &[u64], r0: f64) -> Result<ConcentrationReport> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("degrees must increase".into()));
    }
    let rows: Vec<ConcentrationRow> = n_list
        .iter()
        .map(|&n| {
            let h = harmonic_norms(n, r0)?;
            let log_sup = h.c_n.ln() + band.log_sup(n);
            Ok(ConcentrationRow {
                n,
                lambda: h.lambda,
                c_n: h.c_n,
                log_sup,
                sup: log_sup.exp(),
                underflow: log_sup - h.c_n.ln() < f64::EPSILON.ln(),
            })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.log_sup).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(ConcentrationReport { band, rows, fit, predicted_slope: 0.5 * (1.0 - band.delta).ln() })
}

/// Fit of `log c_n` against `log n`.
pub fn normalization_exponent(n_list: &[u64], r0: f64) -> Result<LineFit> {
    let c: Vec<f64> = n_list.iter().map(|&n| harmonic_norms(n, r0).map(|h| h.c_n)).collect::<Result<_>>()?;
    let x: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    loglog_fit(&x, &c)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DefectRow {
    pub n: u64,
    /// `‖aΦ_n‖²_{L²} / ‖Φ_n‖²_{L²}`.
    pub localized_fraction: f64,
    /// `T(λ_n+1)²‖aΦ_n‖²_{L²} / ‖Φ_n‖²_{H¹}`.
    pub ratio: f64,
}

/// Dissipation proxy of the explicit linear solution `e^{-i(λ_n+1)t}Φ_n` over
/// `[0, T]`, relative to its energy; `‖(1-Δ)^{-1/2}aΦ_n‖` is bounded by `‖aΦ_n‖`.
pub fn observability_defect(band: BandProfile, n: u64, t: f64) -> Result<DefectRow> {
    if n == 0 || !(t > 0.0) {
        return Err(Error::InvalidArgument("need n ≥ 1 and T > 0".into()));
    }
    let nf = n as f64;
    let lam = eigenvalue(n) as f64;
    let lo = if band.is_uniform() { 0.0 } else { band.delta };
    let q = integrate(|rho: f64| band.eval(rho).powi(2) * (1.0 - rho).powf(nf), lo, 1.0, 0.0, 1e-12)?;
    let localized_fraction = q.value * (nf + 1.0);
    // ‖Φ‖²_{H¹} = (1+λ)‖Φ‖²
    let ratio = t * (lam + 1.0) * localized_fraction;
    Ok(DefectRow { n, localized_fraction, ratio })
}

impl ConcentrationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,lambda_n,c_n,sup_a_phi,log_sup\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.12e},{:.12e},{:.12e}\n", r.n, r.lambda, r.c_n, r.sup, r.log_sup));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(5), 35);
        for n in 0..1000u64 {
            assert_eq!(eigenvalue(n), (n + 1) * (n + 1) - 1);
        }
    }

    #[test]
    fn constant_harmonic() {
        let h = harmonic_norms(0, 1.0).unwrap();
        assert!((h.linf / h.l2 - VOLUME.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_quadratures() {
        for n in [0u64, 1, 2, 7, 16, 33, 64] {
            let h = harmonic_norms(n, 1.0).unwrap();
            assert!((h.l2_sq_quadrature - h.l2_sq_unscaled).abs() < 1e-12 * h.l2_sq_unscaled);
            let q = l2_sq_hyperspherical(n, 1e-12).unwrap();
            assert!((q - h.l2_sq_unscaled).abs() < 1e-10 * h.l2_sq_unscaled, "n = {n}: {q} vs {}", h.l2_sq_unscaled);
        }
    }

    #[test]
    fn normalization_decays_like_inverse_sqrt() {
        let ns: Vec<u64> = (4..=8).map(|k| 1u64 << k).collect();
        let f = normalization_exponent(&ns, 2.0).unwrap();
        assert!((f.slope + 0.5).abs() < 0.1);
    }

    #[test]
    fn concentration_slopes() {
        let ns: Vec<u64> = (32..=256).step_by(16).collect();
        let r = concentration_decay(BandProfile::new(0.5, 0.02).unwrap(), &ns, 1.0).unwrap();
        assert!((r.fit.slope - r.predicted_slope).abs() < 0.05, "{}", r.fit.slope);
        let flat = concentration_decay(BandProfile::uniform(), &ns, 1.0).unwrap();
        assert!(flat.fit.slope.abs() < 0.01);
        let mut prev = 0.0;
        for d in [0.1, 0.3, 0.5, 0.7] {
            let s = concentration_decay(BandProfile::new(d, 0.02).unwrap(), &ns, 1.0).unwrap().fit.slope;
            assert!(s < prev);
            prev = s;
        }
        let steep = concentration_decay(BandProfile::new(0.99, 0.005).unwrap(), &[4, 20, 40], 1.0).unwrap();
        assert!(!steep.rows[0].underflow && steep.rows[1].underflow);
    }

    #[test]
    fn defect_decays_and_scales() {
        let band = BandProfile::new(0.3, 0.02).unwrap();
        let r16 = observability_defect(band, 16, 1.0).unwrap();
        let r128 = observability_defect(band, 128, 1.0).unwrap();
        assert!(r16.ratio / r128.ratio > 1e3);
        let r = observability_defect(band.scaled(3.0), 16, 1.0).unwrap();
        assert!((r.ratio / r16.ratio - 9.0).abs() < 1e-9);
        let u16 = observability_defect(BandProfile::uniform(), 16, 1.0).unwrap();
        let u128 = observability_defect(BandProfile::uniform(), 128, 1.0).unwrap();
        assert!(u128.ratio >= u16.ratio);
        assert!((u16.localized_fraction - 1.0).abs() < 1e-10);
    }
}
