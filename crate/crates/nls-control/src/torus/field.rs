use super::{japanese, Torus, C64};
use crate::error::{Error, Result};
use std::sync::Arc;

/// One time slice of a complex field, held as orthonormal Fourier coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    torus: Arc<Torus>,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(torus: &Arc<Torus>) -> Self {
        SpectralField { torus: torus.clone(), coeffs: vec![C64::new(0.0, 0.0); torus.len()] }
    }

    pub fn from_coeffs(torus: &Arc<Torus>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != torus.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                torus.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(SpectralField { torus: torus.clone(), coeffs })
    }

    pub fn from_physical(torus: &Arc<Torus>, mut values: Vec<C64>) -> Result<Self> {
        if values.len() != torus.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {}",
                values.len(),
                torus.len()
            )));
        }
        torus.forward(&mut values);
        Self::from_coeffs(torus, values)
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(torus: &Arc<Torus>, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let values = (0..torus.len()).map(|i| f(&torus.point(i))).collect();
        Self::from_physical(torus, values)
    }

    /// Single mode `k` with coefficient `c`.
    pub fn mode(torus: &Arc<Torus>, k: &[i64], c: C64) -> Result<Self> {
        let mut f = Self::zeros(torus);
        let idx = torus.index_of(k)?;
        f.coeffs[idx] = c;
        Ok(f)
    }

    pub(crate) fn from_parts(torus: Arc<Torus>, coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), torus.len());
        SpectralField { torus, coeffs }
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Result<C64> {
        Ok(self.coeffs[self.torus.index_of(k)?])
    }

    pub fn to_physical(&self) -> Vec<C64> {
        let mut v = self.coeffs.clone();
        self.torus.inverse(&mut v);
        v
    }

    pub fn same_grid(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.torus, &other.torus) || self.torus.spec() == other.torus.spec()
    }

    /// `sqrt(Σ ⟨λ_k⟩^s |c_k|²)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.torus.eigenvalues())
            .map(|(c, &l)| japanese(l).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies coefficient `k` by `(1+λ_k)^{-σ}`.
    pub fn smoothing(&self, sigma: f64) -> SpectralField {
        let mut out = self.clone();
        out.apply_multiplier(|l| (1.0 + l).powf(-sigma));
        out
    }

    /// Multiplies coefficient `k` by `m(λ_k)`.
    pub fn apply_multiplier(&mut self, m: impl Fn(f64) -> f64) {
        for (c, &l) in self.coeffs.iter_mut().zip(self.torus.eigenvalues()) {
            *c *= m(l);
        }
    }

    /// Real L² pairing `Re Σ c_k conj(d_k)`.
    pub fn re_inner(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    /// Complex L² pairing `Σ c_k conj(d_k)`.
    pub fn inner(&self, other: &SpectralField) -> C64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scale(&mut self, a: C64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    pub fn scaled(&self, a: C64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: C64, x: &SpectralField) {
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * d;
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    /// Complex conjugate of the physical field (`c_k ↦ conj(c_{-k})`).
    pub fn conj(&self) -> SpectralField {
        let mut v = self.to_physical();
        v.iter_mut().for_each(|z| *z = z.conj());
        self.torus.forward(&mut v);
        SpectralField::from_parts(self.torus.clone(), v)
    }

    /// Pointwise product with a real function on the grid.
    pub fn mul_real(&self, a: &[f64]) -> SpectralField {
        let mut v = self.to_physical();
        v.iter_mut().zip(a).for_each(|(z, &ai)| *z *= ai);
        self.torus.forward(&mut v);
        SpectralField::from_parts(self.torus.clone(), v)
    }

    /// Zeroes all modes outside `keep`.
    pub fn project(&self, keep: impl Fn(&[i64], f64) -> bool) -> SpectralField {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let k = self.torus.lattice(idx);
            if !keep(&k, self.torus.lambda(idx)) {
                *c = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `∫ |u|^4` on the doubled grid, exact for the stored band.
    pub fn quartic_integral(&self) -> f64 {
        let padded = self.torus.padded();
        let mut v = self.torus.embed_padded(&self.coeffs, &padded);
        padded.inverse(&mut v);
        v.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * padded.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{random, TorusSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus(d: usize, n: usize) -> Arc<Torus> {
        let periods = [1.0, 1.3, 0.7];
        Torus::new(TorusSpec::new(periods[..d].to_vec(), vec![n; d]).unwrap()).unwrap()
    }

    #[test]
    fn parseval_every_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=3 {
            for n in [4usize, 8, 16] {
                let t = torus(d, n);
                let f = random::gaussian_field(&t, &mut rng, None);
                let v = f.to_physical();
                let mean = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64;
                let lhs = f.l2_norm().powi(2);
                assert!(((mean * t.volume()) - lhs).abs() <= 1e-12 * lhs);
            }
        }
    }

    #[test]
    fn sobolev_examples() {
        let t = torus(1, 8);
        assert_eq!(SpectralField::zeros(&t).sobolev_norm(1.3), 0.0);
        let f0 = SpectralField::mode(&t, &[0], C64::new(1.0, 0.0)).unwrap();
        for s in [-2.0, 0.0, 1.5] {
            assert!((f0.sobolev_norm(s) - 1.0).abs() < 1e-15);
        }
        let f1 = SpectralField::mode(&t, &[1], C64::new(1.0, 0.0)).unwrap();
        let want = (1.0 + 16.0 * PI.powi(4)).powf(0.25);
        assert!((f1.sobolev_norm(1.0) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn smoothing_roundtrip() {
        let t = torus(2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random::gaussian_field(&t, &mut rng, None);
        let g = f.smoothing(0.7).smoothing(-0.7);
        assert!(g.sub(&f).l2_norm() < 1e-14 * f.l2_norm().max(1.0));
        let id = f.smoothing(0.0);
        assert_eq!(id.coeffs(), f.coeffs());
        let z = SpectralField::mode(&t, &[0, 0], C64::new(2.0, 1.0)).unwrap();
        assert_eq!(z.smoothing(3.0).coeffs(), z.coeffs());
    }

    #[test]
    fn conj_of_mode() {
        let t = torus(1, 8);
        let f = SpectralField::mode(&t, &[2], C64::new(0.0, 1.0)).unwrap();
        let g = f.conj();
        assert!((g.coeff(&[-2]).unwrap() - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!(g.conj().sub(&f).l2_norm() < 1e-14);
    }

    #[test]
    fn quartic_of_constant() {
        let t = torus(2, 8);
        let c = 0.8;
        let f = SpectralField::from_fn(&t, |_| C64::new(c, 0.0)).unwrap();
        let want = t.volume() * c.powi(4);
        assert!((f.quartic_integral() - want).abs() < 1e-12);
    }
}
