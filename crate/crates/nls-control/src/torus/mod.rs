//! Spectral discretization of flat tori `R^d / (θ_1 Z × … × θ_d Z)`.
//!
//! Fields are stored as coefficients in the orthonormal basis
//! `e_k(x) = exp(2πi k·x/θ) / sqrt(vol)`, so `Σ|c_k|²` is the L² norm squared.
//! The Laplacian eigenvalue of mode `k` is `λ_k = 4π² Σ (k_i/θ_i)²`.
//! The discrete space is the full FFT grid, including the Nyquist index `-N/2`.

mod cutoff;
mod field;
pub mod random;

pub use cutoff::{build_cutoff, planck_step, DampingProfile, OmegaDesc, Slab};
pub use field::SpectralField;

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

pub type C64 = Complex64;

/// `⟨x⟩ = sqrt(1 + x²)`.
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub periods: Vec<f64>,
    pub resolution: Vec<usize>,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

impl TorusSpec {
    pub fn new(periods: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let spec = TorusSpec { periods, resolution, dealias_fraction: default_dealias() };
        spec.validate()?;
        Ok(spec)
    }

    /// Cube torus with equal periods and resolutions.
    pub fn cube(dim: usize, period: f64, n: usize) -> Result<Self> {
        Self::new(vec![period; dim], vec![n; dim])
    }

    pub fn with_dealias(mut self, fraction: f64) -> Result<Self> {
        self.dealias_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.periods.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidSpec(format!("dimension {d} not in 1..=3")));
        }
        if self.resolution.len() != d {
            return Err(Error::InvalidSpec(format!(
                "{} periods but {} resolutions",
                d,
                self.resolution.len()
            )));
        }
        if self.periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidSpec("periods must be finite and positive".into()));
        }
        if self.resolution.iter().any(|&n| n < 4 || n % 2 != 0) {
            return Err(Error::InvalidSpec("resolutions must be even and at least 4".into()));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidSpec("dealias fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Signed wavenumber of FFT index `i` on an axis with `n` points.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// `|k|_θ = 2π sqrt(Σ (k_i/θ_i)²)`; errors when `k` lies outside the grid lattice.
pub fn weighted_wavenumber(spec: &TorusSpec, k: &[i64]) -> Result<f64> {
    check_lattice(spec, k)?;
    Ok(weighted_unchecked(&spec.periods, k))
}

fn weighted_unchecked(periods: &[f64], k: &[i64]) -> f64 {
    let s: f64 = k.iter().zip(periods).map(|(&ki, &t)| (ki as f64 / t).powi(2)).sum();
    2.0 * PI * s.sqrt()
}

fn check_lattice(spec: &TorusSpec, k: &[i64]) -> Result<()> {
    let ok = k.len() == spec.dim()
        && k.iter().zip(&spec.resolution).all(|(&ki, &n)| {
            let h = (n / 2) as i64;
            ki >= -h && ki < h
        });
    if ok {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: k.to_vec(), resolution: spec.resolution.clone() })
    }
}

/// A torus discretization with cached eigenvalues and FFT plans.
pub struct Torus {
    spec: TorusSpec,
    lambda: Vec<f64>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    dealias: Vec<bool>,
    padded: OnceLock<Arc<Torus>>,
}

impl std::fmt::Debug for Torus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Torus").field("spec", &self.spec).finish()
    }
}

impl Torus {
    pub fn new(spec: TorusSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let fwd = spec.resolution.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inv = spec.resolution.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let total = spec.len();
        let mut lambda = Vec::with_capacity(total);
        let mut dealias = Vec::with_capacity(total);
        let mut k = vec![0i64; spec.dim()];
        for idx in 0..total {
            lattice_into(&spec.resolution, idx, &mut k);
            let w = weighted_unchecked(&spec.periods, &k);
            lambda.push(w * w);
            let keep = k.iter().zip(&spec.resolution).all(|(&ki, &n)| {
                (ki.unsigned_abs() as f64) <= spec.dealias_fraction * (n / 2) as f64
            });
            dealias.push(keep);
        }
        Ok(Arc::new(Torus { spec, lambda, fwd, inv, dealias, padded: OnceLock::new() }))
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.spec.volume()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Laplacian eigenvalues in flat FFT order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda(&self, idx: usize) -> f64 {
        self.lambda[idx]
    }

    /// Modes kept by the dealiasing rule.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    /// Lattice vector of flat index `idx`.
    pub fn lattice(&self, idx: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim()];
        lattice_into(&self.spec.resolution, idx, &mut k);
        k
    }

    /// Flat index of lattice vector `k`.
    pub fn index_of(&self, k: &[i64]) -> Result<usize> {
        check_lattice(&self.spec, k)?;
        let mut idx = 0usize;
        for (&ki, &n) in k.iter().zip(&self.spec.resolution) {
            let i = if ki >= 0 { ki as usize } else { (ki + n as i64) as usize };
            idx = idx * n + i;
        }
        Ok(idx)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let d = self.dim();
        let mut x = vec![0.0; d];
        for axis in (0..d).rev() {
            let n = self.spec.resolution[axis];
            x[axis] = (rem % n) as f64 * self.spec.periods[axis] / n as f64;
            rem /= n;
        }
        x
    }

    /// Lattice twice as fine per axis, used for alias-free quartic quadrature.
    pub fn padded(&self) -> Arc<Torus> {
        self.padded
            .get_or_init(|| {
                let spec = TorusSpec {
                    periods: self.spec.periods.clone(),
                    resolution: self.spec.resolution.iter().map(|n| 2 * n).collect(),
                    dealias_fraction: self.spec.dealias_fraction,
                };
                Torus::new(spec).expect("doubling a valid spec stays valid")
            })
            .clone()
    }

    /// In-place unnormalized multidimensional transform.
    fn transform(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        let res = &self.spec.resolution;
        let d = res.len();
        let total = data.len();
        let mut line = Vec::new();
        for axis in 0..d {
            let n = res[axis];
            let inner: usize = res[axis + 1..].iter().product();
            let plan = &plans[axis];
            if inner == 1 {
                plan.process(data);
                continue;
            }
            let outer = total / (n * inner);
            line.resize(total, C64::new(0.0, 0.0));
            // gather lines contiguously, transform in one batch, scatter back
            let mut pos = 0;
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for j in 0..n {
                        line[pos + j] = data[base + j * inner];
                    }
                    pos += n;
                }
            }
            plan.process(&mut line);
            let mut pos = 0;
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for j in 0..n {
                        data[base + j * inner] = line[pos + j];
                    }
                    pos += n;
                }
            }
        }
    }

    /// Physical grid values to orthonormal coefficients.
    pub fn forward(&self, values: &mut [C64]) {
        self.transform(values, &self.fwd);
        let scale = self.volume().sqrt() / self.len() as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }

    /// Orthonormal coefficients to physical grid values.
    pub fn inverse(&self, coeffs: &mut [C64]) {
        self.transform(coeffs, &self.inv);
        let scale = 1.0 / self.volume().sqrt();
        coeffs.iter_mut().for_each(|v| *v *= scale);
    }

    /// Copies coefficients into the padded lattice (zero elsewhere).
    pub fn embed_padded(&self, coeffs: &[C64], padded: &Torus) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); padded.len()];
        let mut k = vec![0i64; self.dim()];
        for (idx, c) in coeffs.iter().enumerate() {
            lattice_into(&self.spec.resolution, idx, &mut k);
            let j = padded.index_of(&k).expect("coarse lattice fits in padded lattice");
            out[j] = *c;
        }
        out
    }
}

fn lattice_into(res: &[usize], idx: usize, k: &mut [i64]) {
    let mut rem = idx;
    for axis in (0..res.len()).rev() {
        let n = res[axis];
        k[axis] = signed_index(rem % n, n);
        rem /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_conventions() {
        let s1 = TorusSpec::cube(1, 1.0, 8).unwrap();
        assert_eq!(weighted_wavenumber(&s1, &[0]).unwrap(), 0.0);
        assert!((weighted_wavenumber(&s1, &[1]).unwrap() - 2.0 * PI).abs() < 1e-15);
        let s3 = TorusSpec::new(vec![1.0, 2f64.sqrt(), 3f64.sqrt()], vec![8, 8, 8]).unwrap();
        let got = weighted_wavenumber(&s3, &[1, 1, 1]).unwrap();
        let want = 2.0 * PI * (1.0 + 0.5 + 1.0 / 3.0f64).sqrt();
        assert!((got - want).abs() < 1e-14);
        assert!(weighted_wavenumber(&s1, &[4]).is_err());
        assert!(weighted_wavenumber(&s1, &[-4]).is_ok());
    }

    #[test]
    fn spec_validation() {
        assert!(TorusSpec::new(vec![1.0], vec![6]).is_ok());
        assert!(TorusSpec::new(vec![1.0], vec![5]).is_err());
        assert!(TorusSpec::new(vec![1.0], vec![2]).is_err());
        assert!(TorusSpec::new(vec![1.0, 1.0], vec![8]).is_err());
        assert!(TorusSpec::new(vec![-1.0], vec![8]).is_err());
        assert!(TorusSpec::new(vec![1.0; 4], vec![8; 4]).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let t = Torus::new(TorusSpec::new(vec![1.0, 2.0, 3.0], vec![4, 6, 8]).unwrap()).unwrap();
        for idx in 0..t.len() {
            assert_eq!(t.index_of(&t.lattice(idx)).unwrap(), idx);
        }
    }

    #[test]
    fn single_mode_transform() {
        let t = Torus::new(TorusSpec::new(vec![1.0, 2.0], vec![8, 4]).unwrap()).unwrap();
        let k = [2i64, -1];
        let mut v: Vec<C64> = (0..t.len())
            .map(|i| {
                let x = t.point(i);
                let ph = 2.0 * PI * (k[0] as f64 * x[0] / 1.0 + k[1] as f64 * x[1] / 2.0);
                C64::from_polar(1.0, ph)
            })
            .collect();
        t.forward(&mut v);
        let j = t.index_of(&k).unwrap();
        for (i, c) in v.iter().enumerate() {
            let want = if i == j { t.volume().sqrt() } else { 0.0 };
            assert!((c - C64::new(want, 0.0)).norm() < 1e-12, "{i} {c}");
        }
    }
}
