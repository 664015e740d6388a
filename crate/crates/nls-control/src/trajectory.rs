use crate::error::{Error, Result};
use crate::torus::{SpectralField, Torus, C64};
use std::sync::Arc;

/// Uniformly sampled fields `u(t0 + j·dt)`.
///
/// Solver output is nodal (`t0 = 0`, one slice per step boundary); controls
/// produced by the split-step integrators are sampled at step midpoints
/// (`t0 = dt/2`, one slice per step).
#[derive(Clone, Debug)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    slices: Vec<SpectralField>,
}

impl Trajectory {
    /// Nodal trajectory starting at `t = 0`; at least two samples.
    pub fn new(dt: f64, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.len() < 2 {
            return Err(Error::TooShort { len: slices.len(), needed: 2 });
        }
        Self::with_origin(0.0, dt, slices)
    }

    /// Trajectory sampled at `t0 + j·dt`; at least one sample.
    pub fn with_origin(t0: f64, dt: f64, slices: Vec<SpectralField>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let first = slices.first().ok_or(Error::TooShort { len: 0, needed: 1 })?;
        if slices.iter().any(|s| !s.same_grid(first)) {
            return Err(Error::InvalidArgument("trajectory slices live on different grids".into()));
        }
        Ok(Trajectory { t0, dt, slices })
    }

    /// Zero field sampled at `steps + 1` nodes.
    pub fn zeros(torus: &Arc<Torus>, dt: f64, steps: usize) -> Self {
        Trajectory { t0: 0.0, dt, slices: vec![SpectralField::zeros(torus); steps + 1] }
    }

    /// Zero field sampled at `steps` step midpoints.
    pub fn zero_midpoints(torus: &Arc<Torus>, dt: f64, steps: usize) -> Self {
        Trajectory { t0: 0.5 * dt, dt, slices: vec![SpectralField::zeros(torus); steps] }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn torus(&self) -> &Arc<Torus> {
        self.slices[0].torus()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    /// Last sample time.
    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn slice(&self, j: usize) -> &SpectralField {
        &self.slices[j]
    }

    pub fn first(&self) -> &SpectralField {
        &self.slices[0]
    }

    pub fn last(&self) -> &SpectralField {
        &self.slices[self.len() - 1]
    }

    pub fn into_slices(self) -> Vec<SpectralField> {
        self.slices
    }

    /// Linear interpolation in time, clamped to the sampled range.
    pub fn sample(&self, t: f64) -> SpectralField {
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 || self.len() == 1 {
            return self.slices[0].clone();
        }
        let j = x.floor() as usize;
        if j + 1 >= self.len() {
            return self.last().clone();
        }
        let w = x - j as f64;
        if w < 1e-12 {
            return self.slices[j].clone();
        }
        if w > 1.0 - 1e-12 {
            return self.slices[j + 1].clone();
        }
        let mut out = self.slices[j].scaled(C64::new(1.0 - w, 0.0));
        out.axpy(C64::new(w, 0.0), &self.slices[j + 1]);
        out
    }

    /// Time reflection `t ↦ T - t` combined with complex conjugation, where `T` is
    /// the end of the interval the samples tile (`t0 + end` is preserved).
    pub fn reflect_conj(&self) -> Trajectory {
        let slices = self.slices.iter().rev().map(|s| s.conj()).collect();
        Trajectory { t0: self.t0, dt: self.dt, slices }
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Trajectory {
        Trajectory { t0: self.t0, dt: self.dt, slices: self.slices.iter().map(f).collect() }
    }

    /// `Σ_j dt·‖u_j‖²_{H^s}` with trapezoid weights for nodal data and midpoint
    /// weights otherwise, square-rooted.
    pub fn l2_hs(&self, s: f64) -> f64 {
        let nodal = self.t0 == 0.0 && self.len() >= 2;
        let n = self.len();
        let mut acc = 0.0;
        for (j, u) in self.slices.iter().enumerate() {
            let w = if nodal && (j == 0 || j == n - 1) { 0.5 } else { 1.0 };
            acc += w * u.sobolev_norm(s).powi(2);
        }
        (acc * self.dt).sqrt()
    }

    /// `Σ_j dt·‖u_j‖_{H^s}` (midpoint or trapezoid weights as in [`Self::l2_hs`]).
    pub fn l1_hs(&self, s: f64) -> f64 {
        let nodal = self.t0 == 0.0 && self.len() >= 2;
        let n = self.len();
        let mut acc = 0.0;
        for (j, u) in self.slices.iter().enumerate() {
            let w = if nodal && (j == 0 || j == n - 1) { 0.5 } else { 1.0 };
            acc += w * u.sobolev_norm(s);
        }
        acc * self.dt
    }

    /// Concatenates `other` after `self`; both must share `dt` and the
    /// sampling phase.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        if (self.dt - other.dt).abs() > 1e-12 * self.dt || (self.t0 - other.t0).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidArgument("trajectories sampled incompatibly".into()));
        }
        let mut slices = self.slices.clone();
        slices.extend(other.slices.iter().cloned());
        Ok(Trajectory { t0: self.t0, dt: self.dt, slices })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusSpec;

    #[test]
    fn interpolation_and_reflection() {
        let t = Torus::new(TorusSpec::cube(1, 1.0, 8).unwrap()).unwrap();
        let a = SpectralField::mode(&t, &[1], C64::new(1.0, 0.0)).unwrap();
        let b = SpectralField::mode(&t, &[1], C64::new(3.0, 0.0)).unwrap();
        let tr = Trajectory::new(0.5, vec![a.clone(), b.clone()]).unwrap();
        let m = tr.sample(0.25);
        assert!((m.coeff(&[1]).unwrap() - C64::new(2.0, 0.0)).norm() < 1e-15);
        let r = tr.reflect_conj();
        assert!((r.slice(0).coeff(&[-1]).unwrap() - C64::new(3.0, 0.0)).norm() < 1e-14);
        assert!(Trajectory::new(0.5, vec![a]).is_err());
    }
}
