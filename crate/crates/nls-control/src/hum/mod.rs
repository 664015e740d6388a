//! Observability and HUM control synthesis for the linear(ized) equation.
//!
//! With `A = -i a(1-Δ)^{-s}a`, the dual trajectory `Φ` starting from `Φ₀` and the
//! controlled solution `u` of `i u_t + Δu = L_w u + AΦ`, `u(T) = 0`, the Gramian is
//! `SΦ₀ = u(0)`. In the split-step discretization the control enters at step
//! midpoints and the per-step maps preserve the real pairing, so
//!
//! `Re⟨SΦ₀, Φ₀⟩ = dt Σ_n ‖(1-Δ)^{-s/2} a Φ(t_{n+1/2})‖²`
//!
//! holds exactly and `S` is exactly self-adjoint for `Re⟨·,·⟩`.

mod lanczos;

pub use lanczos::{observability_constant, GramianReport, LanczosOptions};

use crate::error::{Error, Result};
use crate::evolution::{integrate, integrate_backward, EvolutionProblem, Kind, PotentialSigns, SolveOptions};
use crate::torus::{DampingProfile, SpectralField, Torus, C64};
use crate::trajectory::Trajectory;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Reference trajectory `w` of the linearization and the sign of the cubic term.
#[derive(Clone, Debug)]
pub struct Potential {
    pub w: Trajectory,
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct ControlSetup {
    pub profile: DampingProfile,
    pub s: f64,
    pub t_final: f64,
    pub dt: f64,
    pub potential: Option<Potential>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-8, max_iter: 500 }
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub(crate) fn re_dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

impl ControlSetup {
    pub fn new(profile: DampingProfile, s: f64, t_final: f64, dt: f64) -> Result<Self> {
        let setup = ControlSetup { profile, s, t_final, dt, potential: None };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_potential(mut self, w: Trajectory, sign: f64) -> Result<Self> {
        self.potential = Some(Potential { w, sign });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.s) {
            return Err(Error::InvalidArgument(format!("s must lie in [-1, 1], got {}", self.s)));
        }
        self.problem(SpectralField::zeros(self.torus()), false).steps()?;
        if let Some(p) = &self.potential {
            if p.sign.abs() != 1.0 {
                return Err(Error::InvalidArgument("potential sign must be ±1".into()));
            }
            if p.w.torus().spec() != self.torus().spec() {
                return Err(Error::InvalidArgument("potential lives on a different grid".into()));
            }
        }
        Ok(())
    }

    pub fn torus(&self) -> &Arc<Torus> {
        self.profile.torus()
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// `(1 + λ)^{-s}`.
    pub fn weight(&self, lambda: f64) -> f64 {
        (1.0 + lambda).powf(-self.s)
    }

    fn problem(&self, u0: SpectralField, dual: bool) -> EvolutionProblem {
        let kind = match &self.potential {
            None => Kind::Free,
            Some(p) => Kind::LinearPotential {
                w: p.w.clone(),
                signs: if dual { PotentialSigns::dual(p.sign) } else { PotentialSigns::linearized(p.sign) },
            },
        };
        EvolutionProblem::new(kind, u0, self.t_final, self.dt)
    }

    /// `a(1-Δ)^{-s}a f` as coefficients.
    fn observe(&self, f: &[C64]) -> Vec<C64> {
        let torus = self.torus();
        let a = self.profile.values();
        let mut x = f.to_vec();
        torus.inverse(&mut x);
        x.iter_mut().zip(a).for_each(|(z, &ai)| *z *= ai);
        torus.forward(&mut x);
        x.iter_mut().zip(torus.eigenvalues()).for_each(|(z, &l)| *z *= self.weight(l));
        torus.inverse(&mut x);
        x.iter_mut().zip(a).for_each(|(z, &ai)| *z *= ai);
        torus.forward(&mut x);
        x
    }

    /// `AΦ = -i a(1-Δ)^{-s}aΦ`.
    pub fn apply_control_operator(&self, phi: &SpectralField) -> SpectralField {
        let mut g = self.observe(phi.coeffs());
        g.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
        SpectralField::from_parts(self.torus().clone(), g)
    }

    /// Dual trajectory `Φ` at the time nodes.
    pub fn adjoint_solve(&self, phi0: &SpectralField) -> Result<Trajectory> {
        let sol = integrate(&self.problem(phi0.clone(), true), SolveOptions::default())?;
        Ok(sol.nodes.expect("nodes requested"))
    }

    fn adjoint_midpoints(&self, phi0: &SpectralField) -> Result<Trajectory> {
        let opts = SolveOptions { final_only: true, record_midpoints: true };
        let sol = integrate(&self.problem(phi0.clone(), true), opts)?;
        Ok(sol.midpoints.expect("midpoints requested"))
    }

    /// Control `g = AΦ` sampled at the step midpoints.
    pub fn control(&self, phi0: &SpectralField) -> Result<Trajectory> {
        Ok(self.adjoint_midpoints(phi0)?.map(|p| self.apply_control_operator(p)))
    }

    /// `dt Σ ‖(1-Δ)^{-s/2} aΦ_mid‖²`.
    pub fn observation_energy(&self, phi0: &SpectralField) -> Result<f64> {
        let mids = self.adjoint_midpoints(phi0)?;
        Ok(mids.slices().iter().map(|p| re_dot(&self.observe(p.coeffs()), p.coeffs())).sum::<f64>() * self.dt)
    }

    /// Controlled solve of the linear system with source `g` from `u0` at time 0.
    pub fn forward(&self, u0: &SpectralField, g: &Trajectory) -> Result<SpectralField> {
        let opts = SolveOptions { final_only: true, record_midpoints: false };
        Ok(integrate(&self.problem(u0.clone(), false).with_source(g.clone()), opts)?.final_state)
    }

    /// Controlled solve backward from `u(T) = uT`; returns `u(0)`.
    pub fn backward(&self, u_t: &SpectralField, g: &Trajectory) -> Result<SpectralField> {
        let opts = SolveOptions { final_only: true, record_midpoints: false };
        Ok(integrate_backward(&self.problem(u_t.clone(), false).with_source(g.clone()), opts)?.final_state)
    }

    /// `SΦ₀`.
    pub fn gramian_apply(&self, phi0: &SpectralField) -> Result<SpectralField> {
        let g = self.control(phi0)?;
        self.backward(&SpectralField::zeros(self.torus()), &g)
    }

    /// `SΦ₀` together with both sides of the quadratic-form identity, which is
    /// checked to a relative `1e-6`.
    pub fn gramian_apply_checked(&self, phi0: &SpectralField) -> Result<(SpectralField, f64, f64)> {
        let mids = self.adjoint_midpoints(phi0)?;
        let form = mids.slices().iter().map(|p| re_dot(&self.observe(p.coeffs()), p.coeffs())).sum::<f64>() * self.dt;
        let g = mids.map(|p| self.apply_control_operator(p));
        let s_phi = self.backward(&SpectralField::zeros(self.torus()), &g)?;
        let pairing = s_phi.re_inner(phi0);
        let scale = form.abs().max(1e-300);
        if (pairing - form).abs() > 1e-6 * scale && (pairing - form).abs() > 1e-14 * phi0.l2_norm().powi(2) {
            return Err(Error::Invariant(format!("quadratic form identity: {pairing:e} vs {form:e}")));
        }
        Ok((s_phi, pairing, form))
    }
}

#[derive(Clone, Debug)]
pub struct HumSolution {
    pub phi0: SpectralField,
    /// Control at the step midpoints.
    pub control: Trajectory,
    /// `SΦ₀`.
    pub achieved: SpectralField,
    /// State at `T` of the forward solve from the target with the control.
    pub terminal: SpectralField,
    /// `‖u(T)‖_{H^s} / ‖u₀‖_{H^s}`.
    pub terminal_miss: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Preconditioned CG for `SΦ₀ = b` in the real pairing, preconditioner `(1+λ)^s`.
pub fn gramian_cg(setup: &ControlSetup, b: &SpectralField, opts: CgOptions) -> Result<(SpectralField, usize, Vec<f64>)> {
    let torus = setup.torus().clone();
    let precond: Vec<f64> = torus.eigenvalues().iter().map(|&l| 1.0 / setup.weight(l)).collect();
    let apply_p = |r: &[C64]| -> Vec<C64> { r.iter().zip(&precond).map(|(z, p)| z * p).collect() };
    let bnorm = re_dot(b.coeffs(), b.coeffs()).sqrt();
    let mut x = vec![zero(); torus.len()];
    if bnorm == 0.0 {
        return Ok((SpectralField::zeros(&torus), 0, vec![0.0]));
    }
    let mut r = b.coeffs().to_vec();
    let mut z = apply_p(&r);
    let mut p = z.clone();
    let mut rz = re_dot(&r, &z);
    let mut residuals = vec![1.0];
    for it in 1..=opts.max_iter {
        let q = setup.gramian_apply(&SpectralField::from_parts(torus.clone(), p.clone()))?;
        let q = q.coeffs();
        let pq = re_dot(&p, q);
        if !(pq > 0.0) {
            let res = *residuals.last().unwrap();
            return Err(Error::CgStalled { iterations: it, residual: res });
        }
        let alpha = rz / pq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= alpha * qi);
        let res = re_dot(&r, &r).sqrt() / bnorm;
        residuals.push(res);
        if res <= opts.tol {
            return Ok((SpectralField::from_parts(torus, x), it, residuals));
        }
        z = apply_p(&r);
        let rz_new = re_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::CgStalled { iterations: opts.max_iter, residual: *residuals.last().unwrap() })
}

/// Solves `SΦ₀ = u₀` and verifies by a forward solve that the control drives `u₀`
/// to `‖u(T)‖_{H^s} ≤ tol·‖u₀‖_{H^s}`.
pub fn hum_solve(setup: &ControlSetup, target: &SpectralField, tol: f64, opts: CgOptions) -> Result<HumSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let torus = setup.torus();
    if target.l2_norm() == 0.0 {
        let zeros = SpectralField::zeros(torus);
        return Ok(HumSolution {
            phi0: zeros.clone(),
            control: Trajectory::zero_midpoints(torus, setup.dt, setup.steps()),
            achieved: zeros.clone(),
            terminal: zeros,
            terminal_miss: 0.0,
            iterations: 0,
            residuals: vec![0.0],
        });
    }
    let (phi0, iterations, residuals) = gramian_cg(setup, target, opts)?;
    let control = setup.control(&phi0)?;
    let achieved = setup.backward(&SpectralField::zeros(torus), &control)?;
    let terminal = setup.forward(target, &control)?;
    let terminal_miss = terminal.sobolev_norm(setup.s) / target.sobolev_norm(setup.s);
    if !(terminal_miss <= tol) {
        return Err(Error::Invariant(format!("terminal miss {terminal_miss:e} exceeds {tol:e}")));
    }
    Ok(HumSolution { phi0, control, achieved, terminal, terminal_miss, iterations, residuals })
}

/// Modes with `max_i |k_i| ≤ cutoff` (all modes when `None`).
pub fn truncated_modes(torus: &Torus, cutoff: Option<usize>) -> Result<Vec<usize>> {
    if let Some(n) = cutoff {
        if torus.spec().resolution.iter().any(|&r| n + 1 > r / 2) {
            return Err(Error::InvalidArgument(format!("cutoff {n} outside the resolution")));
        }
    }
    Ok((0..torus.len())
        .filter(|&idx| match cutoff {
            None => true,
            Some(n) => torus.lattice(idx).iter().all(|k| k.unsigned_abs() as usize <= n),
        })
        .collect())
}

/// The Gramian as a real matrix over the basis `{e_k, i e_k}` of the chosen modes.
#[derive(Clone, Debug)]
pub struct DenseGramian {
    pub modes: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

fn basis_vector(torus: &Arc<Torus>, modes: &[usize], j: usize) -> SpectralField {
    let mut f = SpectralField::zeros(torus);
    f.coeffs_mut()[modes[j / 2]] = if j.is_multiple_of(2) { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
    f
}

fn to_real(modes: &[usize], f: &SpectralField) -> DVector<f64> {
    DVector::from_iterator(2 * modes.len(), modes.iter().flat_map(|&i| [f.coeffs()[i].re, f.coeffs()[i].im]))
}

fn from_real(torus: &Arc<Torus>, modes: &[usize], v: &DVector<f64>) -> SpectralField {
    let mut f = SpectralField::zeros(torus);
    for (j, &i) in modes.iter().enumerate() {
        f.coeffs_mut()[i] = C64::new(v[2 * j], v[2 * j + 1]);
    }
    f
}

impl DenseGramian {
    pub fn assemble(setup: &ControlSetup, cutoff: Option<usize>) -> Result<Self> {
        let torus = setup.torus().clone();
        let modes = truncated_modes(&torus, cutoff)?;
        let n = 2 * modes.len();
        let cols: Vec<DVector<f64>> = (0..n)
            .into_par_iter()
            .map(|j| setup.gramian_apply(&basis_vector(&torus, &modes, j)).map(|c| to_real(&modes, &c)))
            .collect::<Result<_>>()?;
        Ok(DenseGramian { modes, matrix: DMatrix::from_columns(&cols) })
    }

    /// `max |M - Mᵀ| / max |M|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.amax().max(1e-300);
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }

    pub fn solve(&self, torus: &Arc<Torus>, target: &SpectralField) -> Result<SpectralField> {
        let lu = self.matrix.clone().lu();
        let x = lu
            .solve(&to_real(&self.modes, target))
            .ok_or_else(|| Error::Invariant("dense Gramian is singular".into()))?;
        Ok(from_real(torus, &self.modes, &x))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub pairs: usize,
    /// `max |Re⟨SΦ,Ψ⟩ - Re⟨Φ,SΨ⟩| / (‖SΦ‖‖Ψ‖ + ‖Φ‖‖SΨ‖)`.
    pub max_asymmetry: f64,
    /// `min Re⟨SΦ,Φ⟩ / (‖SΦ‖‖Φ‖)` (nonnegative up to rounding).
    pub min_form: f64,
    /// Largest relative defect of the quadratic-form identity.
    pub max_identity_defect: f64,
}

/// Self-adjointness and positivity of `S` on random pairs.
pub fn gramian_symmetry_check(setup: &ControlSetup, pairs: usize, seed: u64, max_mode: i64) -> Result<SymmetryReport> {
    let torus = setup.torus();
    let rows: Vec<(f64, f64, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let phi = crate::torus::random::smooth_field(torus, &mut rng, max_mode, 0.0, 0.0, 1.0);
            let psi = crate::torus::random::smooth_field(torus, &mut rng, max_mode, 0.0, 0.0, 1.0);
            let (s_phi, pairing, form) = setup.gramian_apply_checked(&phi)?;
            let s_psi = setup.gramian_apply(&psi)?;
            let denom = s_phi.l2_norm() * psi.l2_norm() + phi.l2_norm() * s_psi.l2_norm();
            let asym = if denom == 0.0 { 0.0 } else { (s_phi.re_inner(&psi) - phi.re_inner(&s_psi)).abs() / denom };
            let nrm = s_phi.l2_norm() * phi.l2_norm();
            let pos = if nrm == 0.0 { 0.0 } else { pairing / nrm };
            let defect = if form == 0.0 { (pairing - form).abs() } else { (pairing - form).abs() / form.abs() };
            Ok((asym, pos, defect))
        })
        .collect::<Result<_>>()?;
    Ok(SymmetryReport {
        pairs,
        max_asymmetry: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        min_form: rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        max_identity_defect: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub s: f64,
    /// `ε = 1 - s`.
    pub eps: f64,
    pub target_h1: Vec<f64>,
    /// `‖Φ₀‖_{H^{-s+ε}}`.
    pub phi_norms: Vec<f64>,
    /// `‖Φ₀‖_{H^{-s+ε}} / ‖u₀‖_{H¹}`.
    pub ratios: Vec<f64>,
    /// `‖g‖_{L²H¹} / ‖u₀‖_{H¹}`.
    pub control_ratios: Vec<f64>,
    /// `max ratio / first ratio`.
    pub spread: f64,
}

/// Solves the HUM problem for every target and tracks the extra regularity of `Φ₀`.
pub fn control_regularity_check(
    setup: &ControlSetup,
    targets: &[SpectralField],
    tol: f64,
    opts: CgOptions,
) -> Result<RegularityReport> {
    if !(setup.s < 1.0) {
        return Err(Error::InvalidArgument("the regularity gain needs s < 1".into()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no targets".into()));
    }
    let eps = 1.0 - setup.s;
    let sols: Vec<HumSolution> = targets.iter().map(|t| hum_solve(setup, t, tol, opts)).collect::<Result<_>>()?;
    let target_h1: Vec<f64> = targets.iter().map(|t| t.sobolev_norm(1.0)).collect();
    let phi_norms: Vec<f64> = sols.iter().map(|s| s.phi0.sobolev_norm(-setup.s + eps)).collect();
    let ratios: Vec<f64> = phi_norms.iter().zip(&target_h1).map(|(p, t)| p / t).collect();
    let control_ratios = sols.iter().zip(&target_h1).map(|(s, t)| s.control.l2_hs(1.0) / t).collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios[0];
    Ok(RegularityReport { s: setup.s, eps, target_h1, phi_norms, ratios, control_ratios, spread })
}
