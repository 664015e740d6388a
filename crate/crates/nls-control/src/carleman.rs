//! Carleman weights, pseudoconvexity margins and an empirical falsification
//! harness for the weighted space-time inequality in one space dimension.
//!
//! The weights `θ = e^{λΨ}/((T-t)(T+t))` and `φ = (e^{λC_Ψ} - e^{λΨ})/((T-t)(T+t))`
//! make `e^{-2sφ}` underflow long before `s` is interesting, so every integral
//! is accumulated relative to the largest log-weight on the grid.

use crate::error::{Error, Result};
use crate::torus::planck_step;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Weight functions with their working compact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    /// `‖x‖² + c` on the ball of the given radius in `R^d`.
    Quadratic { dim: usize, c: f64, radius: f64 },
    /// `x₄ + c` on `S³ ⊂ R⁴`.
    SphereHeight { c: f64 },
    /// `x₃ + y² + c` on `S² × (-radius, radius)`, points as `(x₁,x₂,x₃,y)`.
    Product { c: f64, radius: f64 },
    Constant { c: f64 },
}

impl Psi {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Psi::Quadratic { c, .. } => x.iter().map(|v| v * v).sum::<f64>() + c,
            Psi::SphereHeight { c } => x[3] + c,
            Psi::Product { c, .. } => x[2] + x[3] * x[3] + c,
            Psi::Constant { c } => c,
        }
    }

    /// `sup |Ψ|` over the working compact.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Psi::Quadratic { c, radius, .. } => (radius * radius + c).abs().max(c.abs()),
            Psi::SphereHeight { c } => (1.0 + c).abs().max((c - 1.0).abs()),
            Psi::Product { c, radius } => (1.0 + radius * radius + c).abs().max((c - 1.0).abs()),
            Psi::Constant { c } => c.abs(),
        }
    }

    pub fn inf(&self) -> f64 {
        match *self {
            Psi::Quadratic { c, .. } | Psi::Constant { c } => c,
            Psi::SphereHeight { c } | Psi::Product { c, .. } => c - 1.0,
        }
    }

    /// Minimal value of `Hess Ψ(ξ,ξ) + |∇Ψ·ξ|²` over unit tangent `ξ` at `x`.
    pub fn margin_at(&self, x: &[f64]) -> f64 {
        match *self {
            Psi::Quadratic { dim, .. } => {
                // 2I + g gᵀ: eigenvalues 2 and 2 + |g|²
                if dim == 1 {
                    2.0 + 4.0 * x[0] * x[0]
                } else {
                    2.0
                }
            }
            Psi::Constant { .. } => 0.0,
            Psi::SphereHeight { .. } => {
                // Hess h = -h g for the restriction of a linear function
                let basis = tangent_basis(&x[..4]);
                let g: Vec<f64> = basis.iter().map(|e| e[3]).collect();
                min_eig(-x[3], &g)
            }
            Psi::Product { .. } => {
                let p = [x[0], x[1], x[2]];
                let basis = tangent_basis(&p);
                let mut h = DMatrix::zeros(3, 3);
                h[(0, 0)] = -x[2];
                h[(1, 1)] = -x[2];
                h[(2, 2)] = 2.0;
                let g = DVector::from_vec(vec![basis[0][2], basis[1][2], 2.0 * x[3]]);
                let m = h + &g * g.transpose();
                m.symmetric_eigenvalues().min()
            }
        }
    }
}

fn min_eig(diag: f64, g: &[f64]) -> f64 {
    let n = g.len();
    let gv = DVector::from_row_slice(g);
    let m = DMatrix::identity(n, n) * diag + &gv * gv.transpose();
    m.symmetric_eigenvalues().min()
}

/// Orthonormal basis of the tangent space at the unit vector `p`.
fn tangent_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut frame = vec![p.to_vec()];
    for j in 0..n {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        for f in &frame {
            let c: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= c * b);
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-6 {
            v.iter_mut().for_each(|a| *a /= nv);
            frame.push(v.clone());
            out.push(v);
        }
        if out.len() == n - 1 {
            break;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MarginReport {
    pub margin: f64,
    pub points: usize,
    pub argmin: usize,
}

pub fn pseudoconvexity_margin(psi: &Psi, points: &[Vec<f64>]) -> Result<MarginReport> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (argmin, margin) = points
        .par_iter()
        .map(|x| psi.margin_at(x))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    Ok(MarginReport { margin, points: points.len(), argmin })
}

/// Tensor grid on `[-radius, radius]^d` with the ball `|x| < exclude` removed.
pub fn euclidean_region(dim: usize, radius: f64, per_axis: usize, exclude: f64) -> Vec<Vec<f64>> {
    let h = if per_axis > 1 { 2.0 * radius / (per_axis - 1) as f64 } else { 0.0 };
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    -radius + h * i as f64
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() >= exclude)
        .collect()
}

/// Points of `S³` with `x₄ ≤ x4_max` on a hyperspherical grid.
pub fn sphere_region(x4_max: f64, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..=n {
        let a = PI * i as f64 / n as f64;
        for j in 0..=n {
            let b = PI * j as f64 / n as f64;
            for k in 0..2 * n {
                let c = PI * k as f64 / n as f64;
                let x4 = a.cos();
                if x4 > x4_max {
                    continue;
                }
                let (sa, sb) = (a.sin(), b.sin());
                out.push(vec![sa * sb * c.cos(), sa * sb * c.sin(), sa * b.cos(), x4]);
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarlemanWeights {
    pub psi: Psi,
    pub lambda: f64,
    pub t_final: f64,
    pub c_psi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightValues {
    pub theta: f64,
    pub phi: f64,
}

impl CarlemanWeights {
    pub fn new(psi: Psi, lambda: f64, t_final: f64) -> Result<Self> {
        if !(lambda > 0.0 && t_final > 0.0) {
            return Err(Error::InvalidArgument("λ and T must be positive".into()));
        }
        let sup = psi.sup_abs();
        if psi.inf() < 2.0 / 3.0 * sup {
            return Err(Error::InvalidSpec(format!(
                "Ψ must stay above 2/3 of its sup on the compact (inf {}, sup {sup})",
                psi.inf()
            )));
        }
        Ok(CarlemanWeights { psi, lambda, t_final, c_psi: 2.0 * sup })
    }

    /// Quadratic weight on `[-radius, radius]^dim` with the smallest admissible constant.
    pub fn quadratic(dim: usize, radius: f64, lambda: f64, t_final: f64) -> Result<Self> {
        Self::new(Psi::Quadratic { dim, c: 2.0 * radius * radius, radius }, lambda, t_final)
    }

    fn denom(&self, t: f64) -> Result<f64> {
        if t.abs() >= self.t_final {
            return Err(Error::InvalidArgument(format!("|t| = {} must be below T = {}", t.abs(), self.t_final)));
        }
        Ok((self.t_final - t) * (self.t_final + t))
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<WeightValues> {
        let d = self.denom(t)?;
        let e = (self.lambda * self.psi.eval(x)).exp();
        Ok(WeightValues { theta: e / d, phi: ((self.lambda * self.c_psi).exp() - e) / d })
    }
}

pub fn weights_eval(w: &CarlemanWeights, t: f64, x: &[f64]) -> Result<WeightValues> {
    w.eval(t, x)
}

/// Space-time grid: `t ∈ [-T, T)` and `x ∈ [-half_length, half_length)`, both periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub t_final: f64,
    pub nt: usize,
    pub half_length: f64,
    pub nx: usize,
}

impl SpaceTimeGrid {
    pub fn t(&self, i: usize) -> f64 {
        -self.t_final + 2.0 * self.t_final * i as f64 / self.nt as f64
    }
    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + 2.0 * self.half_length * j as f64 / self.nx as f64
    }
    fn cell(&self) -> f64 {
        4.0 * self.t_final * self.half_length / (self.nt * self.nx) as f64
    }
}

#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    pub grid: SpaceTimeGrid,
    /// Row-major, `values[i * nx + j] = q(t_i, x_j)`.
    pub values: Vec<C64>,
}

impl SpaceTimeField {
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let values = (0..grid.nt * grid.nx).into_par_iter().map(|k| f(grid.t(k / grid.nx), grid.x(k % grid.nx))).collect();
        SpaceTimeField { grid, values }
    }

    /// Random smooth `q`: bump in time on `|t| < 0.8T`, bump in space on `|x| < radius`,
    /// times a trigonometric polynomial.
    pub fn random(grid: SpaceTimeGrid, radius: f64, modes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64, C64)> = (0..modes)
            .map(|_| {
                let kx = rng.gen_range(-3i32..=3) as f64 * PI / radius;
                let kt = rng.gen_range(-3i32..=3) as f64 * PI / grid.t_final;
                (kx, kt, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let tcut = 0.8 * grid.t_final;
        SpaceTimeField::from_fn(grid, move |t, x| {
            let env = bump(t / tcut) * bump(x / radius);
            if env == 0.0 {
                return C64::new(0.0, 0.0);
            }
            env * terms.iter().map(|&(kx, kt, c)| c * C64::from_polar(1.0, kx * x + kt * t)).sum::<C64>()
        })
    }

    fn spectral_derivative(&self, axis_t: bool, order: u32) -> Vec<C64> {
        let g = self.grid;
        let (n, stride, count, period) =
            if axis_t { (g.nt, g.nx, g.nx, 2.0 * g.t_final) } else { (g.nx, 1, g.nt, 2.0 * g.half_length) };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mult: Vec<C64> = (0..n)
            .map(|m| {
                let mi = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                if order % 2 == 1 && 2 * m == n {
                    return C64::new(0.0, 0.0);
                }
                C64::new(0.0, 2.0 * PI * mi as f64 / period).powu(order) / n as f64
            })
            .collect();
        let lines: Vec<Vec<C64>> = (0..count)
            .into_par_iter()
            .map(|l| {
                let base = if axis_t { l } else { l * g.nx };
                let mut buf: Vec<C64> = (0..n).map(|i| self.values[base + i * stride]).collect();
                fwd.process(&mut buf);
                buf.iter_mut().zip(&mult).for_each(|(b, m)| *b *= m);
                inv.process(&mut buf);
                buf
            })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); self.values.len()];
        for (l, line) in lines.iter().enumerate() {
            let base = if axis_t { l } else { l * g.nx };
            for (i, v) in line.iter().enumerate() {
                out[base + i * stride] = *v;
            }
        }
        out
    }
}

fn bump(r: f64) -> f64 {
    let a = r.abs();
    if a >= 1.0 {
        0.0
    } else {
        planck_step(2.0 * (1.0 - a)).min(1.0)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ResidualOptions {
    /// Directional-gradient left side `sλ²θ|∇Ψ·∇q|²` instead of `sλθ|∇q|²`.
    pub weak: bool,
    /// Potentials `(V₁, V₂)` on the space grid, adding `|V₁q|² + |V₂q̄|²` to the equation side.
    pub potential: Option<(Vec<f64>, Vec<f64>)>,
    /// Width of the time margin (fraction of `T`) where `q` must vanish.
    pub time_margin: Option<f64>,
}

/// Integrals scaled by `e^{-log_scale}`; the ratio is scale free.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CarlemanResidual {
    pub s: f64,
    pub lhs: f64,
    pub rhs_equation: f64,
    pub rhs_local: f64,
    pub ratio: f64,
    pub log_scale: f64,
}

/// Evaluates both sides of the weighted inequality for `q` in one space
/// dimension with `ω = (-omega_radius, omega_radius)`.
pub fn carleman_residual(
    q: &SpaceTimeField,
    w: &CarlemanWeights,
    s: f64,
    omega_radius: f64,
    opts: &ResidualOptions,
) -> Result<CarlemanResidual> {
    let g = q.grid;
    if (g.t_final - w.t_final).abs() > 1e-12 * w.t_final {
        return Err(Error::InvalidArgument("grid and weight horizons differ".into()));
    }
    if !matches!(w.psi, Psi::Quadratic { dim: 1, .. } | Psi::Constant { .. }) {
        return Err(Error::InvalidArgument("the residual harness is one dimensional".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument("s must be positive".into()));
    }
    let radius = match w.psi {
        Psi::Quadratic { radius, .. } => radius,
        _ => g.half_length,
    };
    let margin = opts.time_margin.unwrap_or(0.05) * g.t_final;
    for (k, v) in q.values.iter().enumerate() {
        let (t, x) = (g.t(k / g.nx), g.x(k % g.nx));
        if v.norm() > 1e-12 && (t.abs() >= g.t_final - margin || x.abs() > radius) {
            return Err(Error::SupportViolation(format!("|q| = {:.3e} at t = {t}, x = {x}", v.norm())));
        }
    }
    if let Some((v1, v2)) = &opts.potential {
        if v1.len() != g.nx || v2.len() != g.nx {
            return Err(Error::InvalidArgument("potentials must live on the space grid".into()));
        }
    }
    let mut qt = q.spectral_derivative(true, 1);
    let mut qx = q.spectral_derivative(false, 1);
    let mut qxx = q.spectral_derivative(false, 2);
    // q vanishes identically around these nodes; drop FFT roundoff there, since
    // the weight can be exponentially larger than anywhere on the support
    let zero = |i: usize, j: usize| q.values[i * g.nx + j] == C64::new(0.0, 0.0);
    for i in 0..g.nt {
        for j in 0..g.nx {
            let k = i * g.nx + j;
            let (ip, im) = ((i + 1) % g.nt, (i + g.nt - 1) % g.nt);
            let (jp, jm) = ((j + 1) % g.nx, (j + g.nx - 1) % g.nx);
            if zero(i, j) && zero(ip, j) && zero(im, j) {
                qt[k] = C64::new(0.0, 0.0);
            }
            if zero(i, j) && zero(i, jp) && zero(i, jm) {
                qx[k] = C64::new(0.0, 0.0);
                qxx[k] = C64::new(0.0, 0.0);
            }
        }
    }
    let lambda = w.lambda;

    // per node: (log weight, lhs density, equation density, inside ω)
    let nodes: Vec<(f64, f64, f64, bool)> = (0..q.values.len())
        .into_par_iter()
        .filter_map(|k| {
            let (i, j) = (k / g.nx, k % g.nx);
            let (t, x) = (g.t(i), g.x(j));
            if t.abs() >= g.t_final {
                return None;
            }
            let wv = w.eval(t, &[x]).ok()?;
            let grad_psi = match w.psi {
                Psi::Quadratic { .. } => 2.0 * x,
                _ => 0.0,
            };
            let grad = if opts.weak {
                s * lambda * lambda * wv.theta * (grad_psi * qx[k]).norm_sqr()
            } else {
                s * lambda * wv.theta * qx[k].norm_sqr()
            };
            let lhs = s.powi(3) * lambda.powi(4) * wv.theta.powi(3) * q.values[k].norm_sqr() + grad;
            let lq = C64::new(0.0, 1.0) * qt[k] + qxx[k];
            let mut eq = lq.norm_sqr();
            if let Some((v1, v2)) = &opts.potential {
                eq += (v1[j] * v1[j] + v2[j] * v2[j]) * q.values[k].norm_sqr();
            }
            Some((-2.0 * s * wv.phi, lhs, eq, x.abs() < omega_radius))
        })
        .collect();
    let log_scale = nodes
        .iter()
        .filter(|n| n.1 > 0.0 || n.2 > 0.0)
        .map(|n| n.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if log_scale == f64::NEG_INFINITY {
        return Ok(CarlemanResidual { s, lhs: 0.0, rhs_equation: 0.0, rhs_local: 0.0, ratio: 0.0, log_scale: 0.0 });
    }
    let cell = g.cell();
    let (mut lhs, mut rhs_eq, mut rhs_loc) = (0.0, 0.0, 0.0);
    for &(lw, l, e, inside) in nodes.iter().filter(|n| n.1 > 0.0 || n.2 > 0.0) {
        let f = (lw - log_scale).exp() * cell;
        lhs += f * l;
        rhs_eq += f * e;
        if inside {
            rhs_loc += f * l;
        }
    }
    let den = rhs_eq + rhs_loc;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / den };
    Ok(CarlemanResidual { s, lhs, rhs_equation: rhs_eq, rhs_local: rhs_loc, ratio, log_scale })
}

/// The working configuration of the falsification harness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Harness {
    pub grid: SpaceTimeGrid,
    pub radius: f64,
    pub omega_radius: f64,
    pub lambda: f64,
    pub modes: usize,
}

impl Default for Harness {
    fn default() -> Self {
        Harness {
            grid: SpaceTimeGrid { t_final: 1.0, nt: 256, half_length: 1.0, nx: 512 },
            radius: 0.5,
            omega_radius: 0.1,
            lambda: 2.0,
            modes: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub s_list: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `ratios[i][j]`: sample `i`, parameter `s_list[j]`.
    pub ratios: Vec<Vec<f64>>,
    /// Largest ratio for each `s`.
    pub max_by_s: Vec<f64>,
    pub c_fit: f64,
}

impl Harness {
    pub fn weights(&self) -> Result<CarlemanWeights> {
        CarlemanWeights::quadratic(1, self.radius, self.lambda, self.grid.t_final)
    }

    pub fn sample(&self, seed: u64) -> SpaceTimeField {
        SpaceTimeField::random(self.grid, self.radius, self.modes, seed)
    }

    pub fn ratios(&self, seeds: &[u64], s_list: &[f64]) -> Result<Vec<Vec<f64>>> {
        let w = self.weights()?;
        seeds
            .par_iter()
            .map(|&seed| {
                let q = self.sample(seed);
                s_list
                    .iter()
                    .map(|&s| Ok(carleman_residual(&q, &w, s, self.omega_radius, &ResidualOptions::default())?.ratio))
                    .collect()
            })
            .collect()
    }

    pub fn calibrate(&self, seeds: &[u64], s_list: &[f64]) -> Result<Calibration> {
        if seeds.is_empty() || s_list.is_empty() {
            return Err(Error::InvalidArgument("calibration needs samples and s values".into()));
        }
        let ratios = self.ratios(seeds, s_list)?;
        let max_by_s: Vec<f64> =
            (0..s_list.len()).map(|j| ratios.iter().map(|r| r[j]).fold(0.0, f64::max)).collect();
        let c_fit = max_by_s.iter().cloned().fold(0.0, f64::max);
        Ok(Calibration { s_list: s_list.to_vec(), seeds: seeds.to_vec(), ratios, max_by_s, c_fit })
    }

    /// Largest held-out ratio relative to the calibrated constant.
    pub fn held_out(&self, cal: &Calibration, seeds: &[u64]) -> Result<f64> {
        let r = self.ratios(seeds, &cal.s_list)?;
        Ok(r.iter().flatten().cloned().fold(0.0, f64::max) / cal.c_fit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_margin_is_two() {
        let psi = Psi::Quadratic { dim: 3, c: 2.0, radius: 1.0 };
        let pts = euclidean_region(3, 1.0, 21, 0.1);
        let r = pseudoconvexity_margin(&psi, &pts).unwrap();
        assert!(r.margin >= 2.0);
        assert_eq!(r.margin, 2.0);
        let one = pseudoconvexity_margin(&Psi::Quadratic { dim: 1, c: 2.0, radius: 1.0 }, &euclidean_region(1, 1.0, 11, 0.1));
        assert!(one.unwrap().margin >= 2.0);
        assert!(matches!(pseudoconvexity_margin(&psi, &[]), Err(Error::EmptyRegion)));
    }

    #[test]
    fn sphere_height_margin() {
        let psi = Psi::SphereHeight { c: 3.0 };
        let x = [0.5f64.sqrt() * 0.75f64.sqrt(), 0.0, 0.5f64.sqrt() * 0.75f64.sqrt(), -0.5];
        assert!((psi.margin_at(&x) - 0.5).abs() < 1e-12);
        let r = pseudoconvexity_margin(&psi, &sphere_region(-0.2, 12)).unwrap();
        assert!(r.margin >= 0.2 - 1e-12 && r.margin < 0.3);
        // upper hemisphere fails
        assert!(psi.margin_at(&[0.0, 0.0, 0.6, 0.8]) < 0.0);
        let c = pseudoconvexity_margin(&Psi::Constant { c: 1.0 }, &sphere_region(0.0, 4)).unwrap();
        assert_eq!(c.margin, 0.0);
        let p = Psi::Product { c: 5.0, radius: 0.5 };
        assert!(p.margin_at(&[0.0, 0.6, -0.8, 0.3]) > 0.0);
    }

    #[test]
    fn weights_identities() {
        let w = CarlemanWeights::quadratic(1, 0.5, 2.0, 1.0).unwrap();
        assert_eq!(w.c_psi, 2.0 * 0.75);
        for &t in &[-0.9, -0.3, 0.0, 0.4] {
            for &x in &[-0.5, 0.0, 0.2] {
                let v = w.eval(t, &[x]).unwrap();
                assert!(v.theta > 0.0 && v.phi > 0.0);
                let back = v.theta * (1.0 - t * t);
                assert!((back - (2.0 * w.psi.eval(&[x])).exp()).abs() < 1e-12 * back);
                assert_eq!(v, w.eval(-t, &[x]).unwrap());
            }
        }
        assert!(w.eval(1.0, &[0.0]).is_err());
        let v = w.eval(0.999_999, &[0.0]).unwrap();
        assert!(v.theta > 1e6 && v.phi > 1e6);
        assert!(CarlemanWeights::new(Psi::Quadratic { dim: 1, c: 0.1, radius: 1.0 }, 2.0, 1.0).is_err());
    }

    fn small() -> Harness {
        Harness { grid: SpaceTimeGrid { t_final: 1.0, nt: 128, half_length: 1.0, nx: 256 }, ..Harness::default() }
    }

    #[test]
    fn zero_and_support() {
        let h = small();
        let w = h.weights().unwrap();
        let z = SpaceTimeField::from_fn(h.grid, |_, _| C64::new(0.0, 0.0));
        let r = carleman_residual(&z, &w, 4.0, 0.1, &ResidualOptions::default()).unwrap();
        assert_eq!((r.lhs, r.rhs_equation, r.ratio), (0.0, 0.0, 0.0));
        let bad = SpaceTimeField::from_fn(h.grid, |_, x| C64::new(bump(x / 0.9), 0.0));
        assert!(matches!(
            carleman_residual(&bad, &w, 4.0, 0.1, &ResidualOptions::default()),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn derivatives_are_spectral() {
        let g = SpaceTimeGrid { t_final: 1.0, nt: 64, half_length: 1.0, nx: 64 };
        let q = SpaceTimeField::from_fn(g, |t, x| C64::from_polar(1.0, PI * (2.0 * x + 3.0 * t)));
        let qt = q.spectral_derivative(true, 1);
        let qxx = q.spectral_derivative(false, 2);
        for k in 0..q.values.len() {
            assert!((qt[k] - C64::new(0.0, 3.0 * PI) * q.values[k]).norm() < 1e-10);
            assert!((qxx[k] + 4.0 * PI * PI * q.values[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn localized_sample_is_dominated_by_local_term() {
        let h = small();
        let w = h.weights().unwrap();
        let q = SpaceTimeField::from_fn(h.grid, |t, x| C64::new(bump(t / 0.5) * bump(x / 0.08), 0.0));
        let r = carleman_residual(&q, &w, 8.0, 0.1, &ResidualOptions::default()).unwrap();
        assert_eq!(r.lhs, r.rhs_local);
        assert!(r.ratio <= 1.0);
    }

    #[test]
    fn weak_variant_and_potential() {
        let h = small();
        let w = h.weights().unwrap();
        let q = h.sample(3);
        let strong = carleman_residual(&q, &w, 4.0, 0.1, &ResidualOptions::default()).unwrap();
        let weak = carleman_residual(&q, &w, 4.0, 0.1, &ResidualOptions { weak: true, ..Default::default() }).unwrap();
        assert!(weak.lhs > 0.0 && weak.lhs != strong.lhs);
        let v = vec![1.0; h.grid.nx];
        let pot = ResidualOptions { potential: Some((v.clone(), v)), ..Default::default() };
        let with = carleman_residual(&q, &w, 4.0, 0.1, &pot).unwrap();
        assert!(with.rhs_equation > strong.rhs_equation);
    }

    #[test]
    fn no_growth_in_s() {
        let h = Harness::default();
        let cal = h.calibrate(&[1, 2], &[4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(cal.max_by_s.windows(2).all(|p| p[1] <= p[0]), "{:?}", cal.max_by_s);
        assert!(h.held_out(&cal, &[11, 12]).unwrap() <= 1.5);
    }
}
