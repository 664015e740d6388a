use super::{Torus, TorusSpec};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Open slab `{x : dist(x_axis, center) < half_width}` (periodic distance).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub axis: usize,
    pub center: f64,
    pub half_width: f64,
}

impl Slab {
    pub fn new(axis: usize, center: f64, half_width: f64) -> Self {
        Slab { axis, center, half_width }
    }

    /// Covers the whole axis.
    pub fn is_full(&self, period: f64) -> bool {
        2.0 * self.half_width >= period
    }

    /// Signed periodic offset of `x` from the center, in `[-θ/2, θ/2)`.
    pub fn offset(&self, x: f64, period: f64) -> f64 {
        (x - self.center + 0.5 * period).rem_euclid(period) - 0.5 * period
    }

    pub fn contains(&self, x: f64, period: f64) -> bool {
        self.is_full(period) || self.offset(x, period).abs() < self.half_width
    }

    /// Plateau bump: 1 on the inner half, Planck taper to 0 at the slab edge.
    pub fn bump(&self, x: f64, period: f64) -> f64 {
        if self.is_full(period) {
            return 1.0;
        }
        let d = self.offset(x, period).abs();
        let e = self.half_width;
        if d <= 0.5 * e {
            1.0
        } else if d >= e {
            0.0
        } else {
            planck_step((e - d) / (0.5 * e))
        }
    }
}

/// C^∞ step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `S(x) + S(1-x) = 1`.
pub fn planck_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let z = 1.0 / x - 1.0 / (1.0 - x);
        if z > 700.0 {
            0.0
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaDesc {
    Slabs { slabs: Vec<Slab> },
    Mask,
    Empty,
    Whole,
}

impl OmegaDesc {
    pub fn contains(&self, spec: &TorusSpec, x: &[f64]) -> Option<bool> {
        match self {
            OmegaDesc::Slabs { slabs } => {
                Some(slabs.iter().any(|s| s.contains(x[s.axis], spec.periods[s.axis])))
            }
            OmegaDesc::Empty => Some(false),
            OmegaDesc::Whole => Some(true),
            OmegaDesc::Mask => None,
        }
    }
}

/// Real cutoff `a(x)` sampled on the physical grid.
#[derive(Clone, Debug)]
pub struct DampingProfile {
    torus: Arc<Torus>,
    values: Vec<f64>,
    omega: OmegaDesc,
}

/// Union of plateau bumps, one per slab, combined by pointwise maximum.
pub fn build_cutoff(torus: &Arc<Torus>, slabs: &[Slab]) -> Result<DampingProfile> {
    if slabs.is_empty() {
        return Err(Error::EmptySlabs);
    }
    let spec = torus.spec();
    for s in slabs {
        if s.axis >= spec.dim() {
            return Err(Error::InvalidArgument(format!("slab axis {} out of range", s.axis)));
        }
        if !(s.half_width > 0.0 && s.half_width.is_finite() && s.center.is_finite()) {
            return Err(Error::InvalidArgument("slab half-width must be positive".into()));
        }
    }
    let values = (0..torus.len())
        .map(|i| {
            let x = torus.point(i);
            slabs
                .iter()
                .map(|s| s.bump(x[s.axis], spec.periods[s.axis]))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(DampingProfile {
        torus: torus.clone(),
        values,
        omega: OmegaDesc::Slabs { slabs: slabs.to_vec() },
    })
}

impl DampingProfile {
    /// `a ≡ 0`.
    pub fn zero(torus: &Arc<Torus>) -> Self {
        DampingProfile { torus: torus.clone(), values: vec![0.0; torus.len()], omega: OmegaDesc::Empty }
    }

    /// `a ≡ c` with `0 < c ≤ 1`.
    pub fn constant(torus: &Arc<Torus>, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidArgument("constant profile must lie in (0, 1]".into()));
        }
        Ok(DampingProfile { torus: torus.clone(), values: vec![c; torus.len()], omega: OmegaDesc::Whole })
    }

    /// Explicit grid samples; normalized so that `sup |a| ≤ 1`.
    pub fn from_values(torus: &Arc<Torus>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != torus.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("profile values must be finite grid samples".into()));
        }
        let m = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m > 1.0 {
            values.iter_mut().for_each(|v| *v /= m);
        }
        Ok(DampingProfile { torus: torus.clone(), values, omega: OmegaDesc::Mask })
    }

    /// Same profile multiplied by `c`; values may exceed 1 (used for scaling studies).
    pub fn scaled(&self, c: f64) -> Self {
        DampingProfile {
            torus: self.torus.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            omega: self.omega.clone(),
        }
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn omega(&self) -> &OmegaDesc {
        &self.omega
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `a` is a nonzero constant on the grid.
    pub fn constant_value(&self) -> Option<f64> {
        let first = *self.values.first()?;
        if first != 0.0 && self.values.iter().all(|&v| v == first) {
            Some(first)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus3() -> Arc<Torus> {
        Torus::new(TorusSpec::cube(3, 1.0, 16).unwrap()).unwrap()
    }

    #[test]
    fn full_slab_is_one() {
        let t = torus3();
        let slabs: Vec<_> = (0..3).map(|a| Slab::new(a, 0.0, 0.5)).collect();
        let p = build_cutoff(&t, &slabs).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_slab_depends_on_one_axis() {
        let t = torus3();
        let p = build_cutoff(&t, &[Slab::new(0, 0.0, 0.2)]).unwrap();
        assert_eq!(p.values()[0], 1.0);
        for i in 0..t.len() {
            let j = (i / 256) * 256;
            assert_eq!(p.values()[i], p.values()[j]);
        }
    }

    #[test]
    fn faces_support_is_slab_union() {
        let t = torus3();
        let slabs: Vec<_> = (0..3).map(|a| Slab::new(a, 0.0, 0.15)).collect();
        let p = build_cutoff(&t, &slabs).unwrap();
        let desc = p.omega().clone();
        for i in 0..t.len() {
            let inside = desc.contains(t.spec(), &t.point(i)).unwrap();
            assert_eq!(p.values()[i] > 0.0, inside, "point {:?}", t.point(i));
            assert!((0.0..=1.0).contains(&p.values()[i]));
        }
    }

    #[test]
    fn bump_is_even() {
        let s = Slab::new(0, 0.3, 0.1);
        for j in 0..200 {
            let d = j as f64 * 0.0007;
            assert!((s.bump(0.3 + d, 1.0) - s.bump(0.3 - d, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_slabs_rejected() {
        assert!(matches!(build_cutoff(&torus3(), &[]), Err(Error::EmptySlabs)));
    }

    #[test]
    fn planck_step_symmetry() {
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            assert!((planck_step(x) + planck_step(1.0 - x) - 1.0).abs() < 1e-15);
        }
    }
}
