//! Seeded random fields.

use super::{japanese, SpectralField, Torus, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian coefficients on the modes accepted by `band` (all modes when `None`),
/// normalized to unit L² norm.
pub fn gaussian_field<R: Rng + ?Sized>(
    torus: &Arc<Torus>,
    rng: &mut R,
    band: Option<&dyn Fn(&[i64], f64) -> bool>,
) -> SpectralField {
    let mut coeffs = vec![C64::new(0.0, 0.0); torus.len()];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let keep = match band {
            Some(b) => b(&torus.lattice(idx), torus.lambda(idx)),
            None => true,
        };
        if keep {
            *c = complex_normal(rng);
        }
    }
    let mut f = SpectralField::from_parts(torus.clone(), coeffs);
    let n = f.l2_norm();
    if n > 0.0 {
        f.scale(C64::new(1.0 / n, 0.0));
    }
    f
}

/// Random field on modes with `max|k_i| ≤ max_mode`, coefficients damped by
/// `⟨λ_k⟩^{-decay/2}` and scaled to `‖u‖_{H^s} = norm`.
pub fn smooth_field<R: Rng + ?Sized>(
    torus: &Arc<Torus>,
    rng: &mut R,
    max_mode: i64,
    decay: f64,
    s: f64,
    norm: f64,
) -> SpectralField {
    let mut coeffs = vec![C64::new(0.0, 0.0); torus.len()];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k = torus.lattice(idx);
        if k.iter().all(|ki| ki.abs() <= max_mode) {
            *c = complex_normal(rng) * japanese(torus.lambda(idx)).powf(-decay / 2.0);
        }
    }
    let mut f = SpectralField::from_parts(torus.clone(), coeffs);
    let cur = f.sobolev_norm(s);
    if cur > 0.0 {
        f.scale(C64::new(norm / cur, 0.0));
    }
    f
}
