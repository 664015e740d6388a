//! Bourgain restriction norms, empirical multilinear estimates and the
//! elementary lattice lemmas behind them.
//!
//! `‖u‖²_{X^{s,b}} ≈ Σ_k ⟨λ_k⟩^s ∫ ⟨τ⟩^{2b} |F_t[χ·û^#_k](τ)|² dτ` with
//! `û^#_k(t) = e^{iλ_k t} û_k(t)` (the interaction picture) and `χ` a fixed
//! temporal window. The restriction norm is an infimum over extensions; the
//! fixed window gives an upper proxy.

mod duhamel;
mod lemmas;
mod multilinear;

pub use duhamel::{duhamel_gain_fit, duhamel_ratio, DuhamelReport};
pub use lemmas::{
    frac_power_triangle, gauss_count, gauss_count_hashed, gauss_growth, FracPowerCheck, GaussGrowth,
};
pub use multilinear::{
    bilinear_sweep, brute_quadrilinear, commutator_quadrilinear_sweep, quadrilinear_transform, quadrilinear_value, BilinearOptions,
    BilinearReport, BilinearRow, BlockData, QuadOptions, QuadReport, QuadRow,
};

use crate::error::{Error, Result};
use crate::torus::{japanese, planck_step, Torus, C64};
use crate::trajectory::Trajectory;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Temporal taper applied before the time transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeWindow {
    /// Indicator of the sampled interval (extension by zero).
    Unit,
    /// Planck taper rising over the first `ramp` fraction of the interval and
    /// falling over the last.
    Planck { ramp: f64 },
}

impl TimeWindow {
    /// Value at `t ∈ [a, b]`.
    pub fn eval(&self, t: f64, a: f64, b: f64) -> f64 {
        match *self {
            TimeWindow::Unit => {
                if t < a || t > b {
                    0.0
                } else {
                    1.0
                }
            }
            TimeWindow::Planck { ramp } => {
                let w = ramp * (b - a);
                planck_step((t - a) / w) * planck_step((b - t) / w)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TimeWindow::Planck { ramp } if !(ramp > 0.0 && ramp <= 0.5) => {
                Err(Error::InvalidArgument(format!("window ramp must lie in (0, 1/2], got {ramp}")))
            }
            _ => Ok(()),
        }
    }
}

/// Spectral block `√(1+λ_k) ∈ [N, 2N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicBlock {
    pub n: u32,
}

impl DyadicBlock {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("block size must be a power of two, got {n}")));
        }
        Ok(DyadicBlock { n })
    }

    pub fn contains(&self, lambda: f64) -> bool {
        let r = (1.0 + lambda).sqrt();
        let n = self.n as f64;
        r >= n && r < 2.0 * n
    }

    /// Block containing `λ`.
    pub fn of(lambda: f64) -> Self {
        let r = (1.0 + lambda).sqrt();
        let mut n = 1u32;
        while (2 * n) as f64 <= r {
            n *= 2;
        }
        DyadicBlock { n }
    }
}

/// Zero padding factor of the time transform.
pub const TIME_PADDING: usize = 4;

/// Windowed-extension proxy for `‖u‖_{X^{s,b}}` on the sampled interval.
///
/// Nodal trajectories carry trapezoid weights, midpoint-sampled ones unit weights, so
/// that `b = 0` with the unit window reproduces [`Trajectory::l2_hs`].
pub fn xsb_norm(traj: &Trajectory, s: f64, b: f64, window: TimeWindow) -> Result<f64> {
    if traj.len() < 8 {
        return Err(Error::TooShort { len: traj.len(), needed: 8 });
    }
    if !(-1.0..=1.0).contains(&b) {
        return Err(Error::InvalidArgument(format!("b must lie in [-1, 1], got {b}")));
    }
    window.validate()?;
    let torus: &Torus = traj.torus();
    let m = traj.len();
    let dt = traj.dt();
    let nodal = traj.t0() == 0.0;
    let (a, e) = if nodal {
        (0.0, traj.end_time())
    } else {
        (traj.t0() - 0.5 * dt, traj.end_time() + 0.5 * dt)
    };
    let times = traj.times();
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let q: f64 = if nodal && (j == 0 || j == m - 1) { 0.5 } else { 1.0 };
            window.eval(times[j], a, e) * q.sqrt()
        })
        .collect();
    let p = (TIME_PADDING * m).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(p);
    let tau_weight: Vec<f64> = (0..p)
        .map(|j| {
            let ms = if j < p / 2 { j as f64 } else { j as f64 - p as f64 };
            let tau = 2.0 * std::f64::consts::PI * ms / (p as f64 * dt);
            japanese(tau).powf(2.0 * b)
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); p];
    let mut total = 0.0;
    for idx in 0..torus.len() {
        if traj.slices().iter().all(|u| u.coeffs()[idx] == C64::new(0.0, 0.0)) {
            continue;
        }
        let lam = torus.lambda(idx);
        buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for j in 0..m {
            let c = traj.slice(j).coeffs()[idx];
            buf[j] = c * C64::from_polar(weights[j], lam * times[j]);
        }
        fft.process(&mut buf);
        let sum: f64 = buf.iter().zip(&tau_weight).map(|(f, w)| w * f.norm_sqr()).sum();
        total += japanese(lam).powf(s) * sum * dt / p as f64;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::step_free;
    use crate::torus::{random, SpectralField, TorusSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn free_traj(u0: &SpectralField, dt: f64, steps: usize, shift: f64) -> Trajectory {
        let slices = (0..=steps)
            .map(|j| {
                let t = j as f64 * dt;
                step_free(u0, t).scaled(C64::from_polar(1.0, -shift * t))
            })
            .collect();
        Trajectory::new(dt, slices).unwrap()
    }

    #[test]
    fn zero_and_stationary() {
        let t = Torus::new(TorusSpec::cube(1, 1.0, 16).unwrap()).unwrap();
        let z = Trajectory::zeros(&t, 0.1, 10);
        assert_eq!(xsb_norm(&z, 1.0, 0.5, TimeWindow::Unit).unwrap(), 0.0);
        let u0 = SpectralField::mode(&t, &[3], C64::new(1.0, 0.0)).unwrap();
        let tr = free_traj(&u0, 0.01, 100, 0.0);
        let v = xsb_norm(&tr, 0.0, 0.0, TimeWindow::Unit).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn b_zero_is_l2_hs() {
        let t = Torus::new(TorusSpec::cube(2, 1.0, 8).unwrap()).unwrap();
        let u0 = random::smooth_field(&t, &mut ChaCha8Rng::seed_from_u64(1), 2, 0.0, 0.0, 1.0);
        let tr = free_traj(&u0, 0.003, 40, 2.0);
        for s in [-1.0, 0.0, 0.7] {
            let a = xsb_norm(&tr, s, 0.0, TimeWindow::Unit).unwrap();
            assert!((a - tr.l2_hs(s)).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn mismatched_phase_is_larger() {
        let t = Torus::new(TorusSpec::cube(1, 1.0, 16).unwrap()).unwrap();
        let u0 = SpectralField::mode(&t, &[2], C64::new(1.0, 0.0)).unwrap();
        let good = free_traj(&u0, 0.01, 200, 0.0);
        let bad = free_traj(&u0, 0.01, 200, 1.0);
        for w in [TimeWindow::Unit, TimeWindow::Planck { ramp: 0.25 }] {
            assert!(xsb_norm(&good, 1.0, 0.5, w).unwrap() < xsb_norm(&bad, 1.0, 0.5, w).unwrap());
        }
    }

    #[test]
    fn monotone_in_s_and_b() {
        let t = Torus::new(TorusSpec::cube(1, 1.0, 16).unwrap()).unwrap();
        let u0 = random::smooth_field(&t, &mut ChaCha8Rng::seed_from_u64(2), 5, 0.0, 0.0, 1.0);
        let tr = free_traj(&u0, 0.002, 60, 3.0);
        let w = TimeWindow::Planck { ramp: 0.3 };
        let grid = [-0.5, 0.0, 0.5, 1.0];
        for &s1 in &grid {
            for &s2 in grid.iter().filter(|&&x| x >= s1) {
                for &b1 in &grid {
                    for &b2 in grid.iter().filter(|&&x| x >= b1) {
                        let lo = xsb_norm(&tr, s1, b1, w).unwrap();
                        let hi = xsb_norm(&tr, s2, b2, w).unwrap();
                        assert!(lo <= hi * (1.0 + 1e-14));
                    }
                }
            }
        }
    }

    #[test]
    fn short_trajectory_rejected() {
        let t = Torus::new(TorusSpec::cube(1, 1.0, 8).unwrap()).unwrap();
        let z = Trajectory::zeros(&t, 0.1, 5);
        assert!(matches!(xsb_norm(&z, 0.0, 0.0, TimeWindow::Unit), Err(Error::TooShort { .. })));
    }

    #[test]
    fn dyadic_blocks_partition() {
        for lam in [0.0, 2.9, 3.0, 14.99, 15.0, 1000.0] {
            let b = DyadicBlock::of(lam);
            assert!(b.contains(lam));
            for n in [1u32, 2, 4, 8, 16, 32, 64] {
                if n != b.n {
                    assert!(!DyadicBlock::new(n).unwrap().contains(lam));
                }
            }
        }
    }
}
