//! Nonlinear control near a reference trajectory by a Picard iteration on the
//! HUM adjoint data, its low-frequency variant, two-point control by time
//! reversal and the leg-by-leg drive to zero.
//!
//! The controlled equation is `i u_t + Δu = σ|u|²u + g`. With `w` the reference
//! (source `g₁`) and `u_T` the desired terminal state, one Picard step maps `Φ₀` to
//! `Φ₀ + S_w^{-1}(u₀ - u_Φ(0))`, where `u_Φ` is the full nonlinear solution
//! integrated backward from `u_T` with source `g₁ + AΦ` and `S_w` the Gramian of
//! the linearization around `w`. A fixed point is an exact control.

use crate::error::{Error, Result};
use crate::evolution::{energy, integrate, integrate_backward, solve, EvolutionProblem, Kind, SolveOptions};
use crate::hum::{gramian_cg, CgOptions, ControlSetup};
use crate::torus::{japanese, SpectralField, C64};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SteeringOptions {
    /// `‖u(T) - u_T‖_{H^s}` at which the iteration stops.
    pub tol_terminal: f64,
    pub max_picard: usize,
    /// Admissible `H^s` distance from the reference, at both ends.
    pub picard_ball: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl SteeringOptions {
    fn cg(&self) -> CgOptions {
        CgOptions { tol: self.cg_tol, max_iter: self.cg_max_iter }
    }
}

#[derive(Clone, Debug)]
pub struct SteeringProblem {
    /// Cutoff, `s`, horizon and step; any potential in it is ignored.
    pub setup: ControlSetup,
    /// Reference solution at the time nodes.
    pub w: Trajectory,
    /// Source of the reference (midpoint samples); `None` for a free solution.
    pub g1: Option<Trajectory>,
    pub u0: SpectralField,
    /// Terminal state; `w(T)` when `None`.
    pub target: Option<SpectralField>,
    pub sign: f64,
    pub opts: SteeringOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct SteeringResult {
    #[serde(skip)]
    pub control: Trajectory,
    #[serde(skip)]
    pub phi0: SpectralField,
    #[serde(skip)]
    pub final_state: SpectralField,
    pub iterations: usize,
    pub terminal_miss: f64,
    /// `‖Φ^{(n)}‖_{H^{-s}}` per iterate.
    pub phi_norms: Vec<f64>,
    /// `‖Φ^{(n)} - Φ^{(n-1)}‖_{H^{-s}}`.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub contraction: Vec<f64>,
    pub cg_iterations: Vec<usize>,
}

fn nls(sign: f64) -> Kind {
    Kind::Nonlinear { sign, alpha: 0.0, beta: 1.0 }
}

fn add(a: &Trajectory, b: &Trajectory) -> Trajectory {
    let slices = a.slices().iter().zip(b.slices()).map(|(x, y)| x.add(y)).collect();
    Trajectory::with_origin(a.t0(), a.dt(), slices).expect("same sampling")
}

impl SteeringProblem {
    pub fn new(setup: ControlSetup, w: Trajectory, u0: SpectralField, sign: f64, opts: SteeringOptions) -> Self {
        SteeringProblem { setup, w, g1: None, u0, target: None, sign, opts }
    }

    /// Steering of `u0` to zero around the zero solution.
    pub fn to_zero(setup: ControlSetup, u0: SpectralField, sign: f64, opts: SteeringOptions) -> Self {
        let w = Trajectory::zeros(setup.torus(), setup.dt, setup.steps());
        Self::new(setup, w, u0, sign, opts)
    }

    fn terminal_target(&self) -> SpectralField {
        self.target.clone().unwrap_or_else(|| self.w.last().clone())
    }

    fn source(&self, extra: Option<&Trajectory>) -> Trajectory {
        let zero = || Trajectory::zero_midpoints(self.setup.torus(), self.setup.dt, self.setup.steps());
        match (&self.g1, extra) {
            (Some(g), Some(e)) => add(g, e),
            (Some(g), None) => g.clone(),
            (None, Some(e)) => e.clone(),
            (None, None) => zero(),
        }
    }

    fn problem(&self, start: SpectralField, g: Trajectory) -> EvolutionProblem {
        EvolutionProblem::new(nls(self.sign), start, self.setup.t_final, self.setup.dt).with_source(g)
    }

    fn forward(&self, g: Trajectory) -> Result<SpectralField> {
        let opts = SolveOptions { final_only: true, record_midpoints: false };
        Ok(integrate(&self.problem(self.u0.clone(), g), opts)?.final_state)
    }

    fn backward(&self, g: Trajectory) -> Result<SpectralField> {
        let opts = SolveOptions { final_only: true, record_midpoints: false };
        Ok(integrate_backward(&self.problem(self.terminal_target(), g), opts)?.final_state)
    }

    /// Grid and time consistency, and that `w` solves its equation.
    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        if self.sign.abs() != 1.0 {
            return Err(Error::InvalidArgument("sign must be ±1".into()));
        }
        let steps = self.setup.steps();
        if self.w.len() != steps + 1 || (self.w.dt() - self.setup.dt).abs() > 1e-12 * self.setup.dt || self.w.t0() != 0.0 {
            return Err(Error::InvalidArgument("reference must be sampled at the time nodes".into()));
        }
        if let Some(g) = &self.g1 {
            if g.len() != steps || (g.t0() - 0.5 * self.setup.dt).abs() > 1e-12 * self.setup.dt {
                return Err(Error::InvalidArgument("reference source must be sampled at the step midpoints".into()));
            }
        }
        let opts = SolveOptions { final_only: true, record_midpoints: false };
        let end = integrate(&self.problem(self.w.first().clone(), self.source(None)), opts)?.final_state;
        let defect = end.sub(self.w.last()).l2_norm();
        if defect > 1e-8 * self.w.last().l2_norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("reference does not solve its equation (defect {defect:e})")));
        }
        Ok(())
    }

    /// Larger of the `H^s` distances to the reference at both ends.
    pub fn distance(&self) -> f64 {
        let s = self.setup.s;
        let d0 = self.u0.sub(self.w.first()).sobolev_norm(s);
        let d1 = self.terminal_target().sub(self.w.last()).sobolev_norm(s);
        d0.max(d1)
    }
}

fn check_ball(distance: f64, ball: f64) -> Result<()> {
    if distance > ball {
        Err(Error::BallExceeded { distance, ball })
    } else {
        Ok(())
    }
}

/// Picard iteration on `Φ₀`; see the module documentation.
pub fn fixed_point_control(problem: &SteeringProblem) -> Result<SteeringResult> {
    problem.validate()?;
    check_ball(problem.distance(), problem.opts.picard_ball)?;
    picard(problem)
}

fn picard(problem: &SteeringProblem) -> Result<SteeringResult> {
    let setup = &problem.setup;
    let s = setup.s;
    let torus = setup.torus().clone();
    let target = problem.terminal_target();
    let mut phi = SpectralField::zeros(&torus);
    let base = problem.source(None);
    if problem.u0.sub(problem.w.first()).l2_norm() == 0.0 && target.sub(problem.w.last()).l2_norm() == 0.0 {
        return Ok(SteeringResult {
            control: base,
            phi0: phi,
            final_state: problem.w.last().clone(),
            iterations: 0,
            terminal_miss: 0.0,
            phi_norms: vec![],
            increments: vec![],
            contraction: vec![],
            cg_iterations: vec![],
        });
    }
    let lin = ControlSetup { potential: None, ..setup.clone() }.with_potential(problem.w.clone(), problem.sign)?;
    let mut res = SteeringResult {
        control: base.clone(),
        phi0: phi.clone(),
        final_state: problem.forward(base.clone())?,
        iterations: 0,
        terminal_miss: f64::INFINITY,
        phi_norms: vec![],
        increments: vec![],
        contraction: vec![],
        cg_iterations: vec![],
    };
    let mut control = base;
    let mut ctrl_part: Option<Trajectory> = None;
    for it in 1..=problem.opts.max_picard {
        let back = problem.backward(control.clone())?;
        let mismatch = problem.u0.sub(&back);
        let (delta, cg_it, _) = gramian_cg(&lin, &mismatch, problem.opts.cg())?;
        phi = phi.add(&delta);
        let inc = delta.sobolev_norm(-s);
        if let Some(&prev) = res.increments.last() {
            let factor = if prev > 0.0 { inc / prev } else { 0.0 };
            res.contraction.push(factor);
            if it >= 3 && factor >= 1.0 {
                return Err(Error::PicardDiverged { iteration: it, factor });
            }
        }
        res.increments.push(inc);
        res.phi_norms.push(phi.sobolev_norm(-s));
        res.cg_iterations.push(cg_it);
        let g = lin.control(&phi)?;
        control = problem.source(Some(&g));
        ctrl_part = Some(g);
        let end = problem.forward(control.clone())?;
        let miss = end.sub(&target).sobolev_norm(s);
        if !miss.is_finite() {
            return Err(Error::PicardDiverged { iteration: it, factor: f64::INFINITY });
        }
        res.iterations = it;
        res.terminal_miss = miss;
        res.final_state = end;
        if miss <= problem.opts.tol_terminal {
            break;
        }
    }
    if !(res.terminal_miss <= problem.opts.tol_terminal) {
        let factor = res.contraction.last().cloned().unwrap_or(f64::NAN);
        return Err(Error::PicardDiverged { iteration: res.iterations, factor });
    }
    // AΦ = -i a(...)aΦ vanishes wherever a does
    if let Some(g) = &ctrl_part {
        check_support(&lin, g)?;
    }
    res.control = control;
    res.phi0 = phi;
    Ok(res)
}

fn check_support(setup: &ControlSetup, g: &Trajectory) -> Result<()> {
    let a = setup.profile.values();
    for slice in g.slices() {
        let worst = slice
            .to_physical()
            .iter()
            .zip(a)
            .filter(|(_, &ai)| ai == 0.0)
            .map(|(z, _)| z.norm())
            .fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(Error::SupportViolation(format!("control of size {worst:e} outside the cutoff support")));
        }
    }
    Ok(())
}

/// Two-sided bound on `‖u₀ - w₀‖_{H^s}` from low-mode closeness and an `H¹` bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LowModeBound {
    pub n: usize,
    /// `Λ = (2πN / max θ_i)²`: modes with `λ_k ≤ Λ` are "low".
    pub lambda_cut: f64,
    /// Measured `Σ_{λ_k ≤ Λ} |û₀(k) - ŵ₀(k)|²`.
    pub low_sq: f64,
    /// `⟨Λ⟩^{s/2}√ε`.
    pub low_part: f64,
    /// `⟨Λ⟩^{(s-1)/2}·2E₀`.
    pub tail_part: f64,
    pub bound: f64,
    /// `‖u₀ - w₀‖_{H^s}` itself, for comparison.
    pub actual: f64,
}

pub fn low_mode_bound(u0: &SpectralField, w0: &SpectralField, s: f64, n: usize, e0: f64, eps: f64) -> Result<LowModeBound> {
    if !(s < 1.0) {
        return Err(Error::InvalidArgument("the low-mode bound needs s < 1".into()));
    }
    if !(eps >= 0.0 && e0 > 0.0) {
        return Err(Error::InvalidArgument("need ε ≥ 0 and E₀ > 0".into()));
    }
    for (name, f) in [("u0", u0), ("w0", w0)] {
        let h1 = f.sobolev_norm(1.0);
        if h1 > e0 {
            return Err(Error::InvalidArgument(format!("‖{name}‖_H1 = {h1} exceeds E0 = {e0}")));
        }
    }
    let torus = u0.torus();
    let pmax = torus.spec().periods.iter().cloned().fold(0.0, f64::max);
    let lambda_cut = (2.0 * std::f64::consts::PI * n as f64 / pmax).powi(2);
    let diff = u0.sub(w0);
    let low_sq: f64 = diff
        .coeffs()
        .iter()
        .zip(torus.eigenvalues())
        .filter(|(_, &l)| l <= lambda_cut)
        .map(|(c, _)| c.norm_sqr())
        .sum();
    if low_sq > eps {
        return Err(Error::InvalidArgument(format!("low-mode distance² {low_sq:e} exceeds ε = {eps:e}")));
    }
    let jl = japanese(lambda_cut);
    let low_part = jl.powf(s / 2.0) * eps.sqrt();
    let tail_part = jl.powf((s - 1.0) / 2.0) * 2.0 * e0;
    Ok(LowModeBound { n, lambda_cut, low_sq, low_part, tail_part, bound: low_part + tail_part, actual: diff.sobolev_norm(s) })
}

#[derive(Clone, Debug, Serialize)]
pub struct LowModeReport {
    pub bound: LowModeBound,
    pub result: SteeringResult,
}

/// Validates the hypothesis pair through [`low_mode_bound`], admits the problem
/// when the computed bound lies in the Picard ball, and steers.
pub fn low_mode_control(problem: &SteeringProblem, n: usize, e0: f64, eps: f64) -> Result<LowModeReport> {
    problem.validate()?;
    if problem.target.is_some() {
        return Err(Error::InvalidArgument("low-mode control steers onto the reference".into()));
    }
    let bound = low_mode_bound(&problem.u0, problem.w.first(), problem.setup.s, n, e0, eps)?;
    check_ball(bound.bound, problem.opts.picard_ball)?;
    let result = picard(problem)?;
    Ok(LowModeReport { bound, result })
}

/// Admission by the `H¹` distance alone, for comparison with [`low_mode_control`].
pub fn raw_ball_check(problem: &SteeringProblem) -> Result<f64> {
    let d = problem.u0.sub(problem.w.first()).sobolev_norm(1.0);
    check_ball(d, problem.opts.picard_ball)?;
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoPointResult {
    #[serde(skip)]
    pub control: Trajectory,
    pub first: SteeringResult,
    pub second: SteeringResult,
    /// `‖u(T) - u₁‖_{H^s}` of the forward verification.
    pub terminal_miss: f64,
}

/// Steers `u0` at time 0 to `u1` at `setup.t_final`: both are driven to zero over
/// half the horizon, the second through the time-reversed conjugated equation, and
/// the second control is reversed back.
pub fn two_point_control(
    setup: &ControlSetup,
    sign: f64,
    u0: &SpectralField,
    u1: &SpectralField,
    opts: SteeringOptions,
) -> Result<TwoPointResult> {
    let half_t = 0.5 * setup.t_final;
    let half = ControlSetup { t_final: half_t, potential: None, ..setup.clone() };
    half.validate()?;
    let run = |name: &'static str, start: &SpectralField| -> Result<SteeringResult> {
        let p = SteeringProblem::to_zero(half.clone(), start.clone(), sign, opts);
        fixed_point_control(&p).map_err(|e| Error::HalfFailed { half: name, reason: e.to_string() })
    };
    let first = run("first", u0)?;
    let second = run("second", &u1.conj())?;
    let reversed = second.control.reflect_conj();
    let control = first.control.concat(&reversed)?;
    let p = EvolutionProblem::new(nls(sign), u0.clone(), setup.t_final, setup.dt).with_source(control.clone());
    let end = integrate(&p, SolveOptions { final_only: true, record_midpoints: false })?.final_state;
    let terminal_miss = end.sub(u1).sobolev_norm(setup.s);
    let tol = 10.0 * opts.tol_terminal;
    if !(terminal_miss <= tol) {
        return Err(Error::Invariant(format!("two-point verification missed by {terminal_miss:e}")));
    }
    Ok(TwoPointResult { control, first, second, terminal_miss })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GlobalOptions {
    /// Shrink factor of each leg's endpoint, `(1-η)w(T)`.
    pub eta: f64,
    pub max_legs: usize,
    /// `‖u‖_{H¹}` below which the final steer to zero is attempted.
    pub local_threshold: f64,
    pub steering: SteeringOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegReport {
    pub energy_before: f64,
    pub energy_after: f64,
    pub ratio: f64,
    pub h1_after: f64,
    pub iterations: usize,
    pub terminal_miss: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalReport {
    pub legs: Vec<LegReport>,
    /// Energy at the start and after every leg.
    pub energies: Vec<f64>,
    pub final_steer: Option<SteeringResult>,
    /// `‖u(end)‖_{H^s}` after the final steer.
    pub final_norm: f64,
    #[serde(skip)]
    pub controls: Vec<Trajectory>,
}

/// Repeatedly follows the free flow for one leg and steers to the shrunk endpoint,
/// then steers to zero once inside the local threshold. Defocusing only.
pub fn global_drive_to_zero(setup: &ControlSetup, u0: &SpectralField, opts: GlobalOptions) -> Result<GlobalReport> {
    if !(opts.eta > 0.0 && opts.eta < 1.0) {
        return Err(Error::InvalidArgument("η must lie in (0, 1)".into()));
    }
    let setup = ControlSetup { potential: None, ..setup.clone() };
    setup.validate()?;
    let e = |f: &SpectralField| energy(f, 0.0, 1.0);
    let mut report = GlobalReport { legs: vec![], energies: vec![e(u0)], final_steer: None, final_norm: 0.0, controls: vec![] };
    if u0.l2_norm() == 0.0 {
        return Ok(report);
    }
    let allowed = (1.0 - opts.eta).powi(2) + 0.1;
    let mut u = u0.clone();
    while u.sobolev_norm(1.0) > opts.local_threshold {
        let leg = report.legs.len();
        let before = e(&u);
        let fail = |reason: String| Error::LegFailed { leg, energy: before, reason };
        if leg >= opts.max_legs {
            return Err(fail(format!("leg budget of {} exhausted", opts.max_legs)));
        }
        let w = solve(&EvolutionProblem::new(nls(1.0), u.clone(), setup.t_final, setup.dt)).map_err(|x| fail(x.to_string()))?;
        let target = w.last().scaled(C64::new(1.0 - opts.eta, 0.0));
        let mut p = SteeringProblem::new(setup.clone(), w, u.clone(), 1.0, opts.steering);
        p.target = Some(target);
        let r = fixed_point_control(&p).map_err(|x| fail(x.to_string()))?;
        let after = e(&r.final_state);
        let ratio = after / before;
        if ratio > allowed {
            return Err(fail(format!("energy ratio {ratio} above {allowed}")));
        }
        report.legs.push(LegReport {
            energy_before: before,
            energy_after: after,
            ratio,
            h1_after: r.final_state.sobolev_norm(1.0),
            iterations: r.iterations,
            terminal_miss: r.terminal_miss,
        });
        report.energies.push(after);
        report.controls.push(r.control.clone());
        u = r.final_state;
    }
    let p = SteeringProblem::to_zero(setup.clone(), u, 1.0, opts.steering);
    let leg = report.legs.len();
    let r = fixed_point_control(&p).map_err(|x| Error::LegFailed { leg, energy: e(&p.u0), reason: x.to_string() })?;
    report.final_norm = r.final_state.sobolev_norm(setup.s);
    report.controls.push(r.control.clone());
    report.final_steer = Some(r);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{build_cutoff, random, Slab, Torus, TorusSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn opts() -> SteeringOptions {
        SteeringOptions { tol_terminal: 1e-8, max_picard: 12, picard_ball: 1.0, cg_tol: 1e-10, cg_max_iter: 500 }
    }

    fn setup(n: usize, s: f64, t: f64, dt: f64) -> ControlSetup {
        let tor = Torus::new(TorusSpec::cube(1, 1.0, n).unwrap()).unwrap();
        let a = build_cutoff(&tor, &[Slab::new(0, 0.15, 0.15)]).unwrap();
        ControlSetup::new(a, s, t, dt).unwrap()
    }

    fn small(tor: &Arc<Torus>, seed: u64, s: f64, norm: f64) -> SpectralField {
        random::smooth_field(tor, &mut ChaCha8Rng::seed_from_u64(seed), 4, 0.0, s, norm)
    }

    #[test]
    fn trivial_cases() {
        let st = setup(32, 0.0, 0.5, 5e-3);
        let z = SpectralField::zeros(st.torus());
        let r = fixed_point_control(&SteeringProblem::to_zero(st.clone(), z.clone(), 1.0, opts())).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.control.l2_hs(0.0), 0.0);
        let tp = two_point_control(&st, 1.0, &z, &z, opts()).unwrap();
        assert_eq!(tp.control.l2_hs(0.0), 0.0);
        let g = global_drive_to_zero(&st, &z, GlobalOptions { eta: 0.1, max_legs: 3, local_threshold: 0.1, steering: opts() })
            .unwrap();
        assert!(g.legs.is_empty());
    }

    #[test]
    fn small_data_both_signs() {
        let st = setup(32, 0.0, 0.5, 5e-3);
        let u0 = small(st.torus(), 1, 0.0, 1e-2);
        for sign in [1.0, -1.0] {
            let r = fixed_point_control(&SteeringProblem::to_zero(st.clone(), u0.clone(), sign, opts())).unwrap();
            assert!(r.iterations <= 10);
            assert!(r.terminal_miss <= 1e-8);
            assert!(r.contraction.iter().skip(1).all(|&c| c < 1.0), "{:?}", r.contraction);
        }
    }

    #[test]
    fn ball_and_lipschitz() {
        let st = setup(32, 0.0, 0.5, 5e-3);
        let u0 = small(st.torus(), 2, 0.0, 2e-2);
        let mut o = opts();
        o.picard_ball = 1e-2;
        let p = SteeringProblem::to_zero(st.clone(), u0.clone(), 1.0, o);
        assert!(matches!(fixed_point_control(&p), Err(Error::BallExceeded { .. })));
        let big = fixed_point_control(&SteeringProblem::to_zero(st.clone(), u0.clone(), 1.0, opts())).unwrap();
        let half = u0.scaled(C64::new(0.5, 0.0));
        let little = fixed_point_control(&SteeringProblem::to_zero(st, half, 1.0, opts())).unwrap();
        let ratio = big.control.l2_hs(0.0) / little.control.l2_hs(0.0);
        assert!(ratio > 1.0 && ratio <= 4.0, "{ratio}");
    }

    #[test]
    fn controlled_reference() {
        // w driven by its own control; steering onto it from a nearby state
        let st = setup(32, 0.0, 0.5, 5e-3);
        let tor = st.torus().clone();
        let w0 = small(&tor, 3, 0.0, 0.3);
        let g1 = st.control(&small(&tor, 4, 0.0, 1.0)).unwrap();
        let p = EvolutionProblem::new(nls(1.0), w0.clone(), 0.5, 5e-3).with_source(g1.clone());
        let w = solve(&p).unwrap();
        let u0 = w0.add(&small(&tor, 5, 0.0, 1e-2));
        let mut prob = SteeringProblem::new(st.clone(), w.clone(), u0, 1.0, opts());
        prob.g1 = Some(g1.clone());
        let r = fixed_point_control(&prob).unwrap();
        assert!(r.terminal_miss <= 1e-8);
        // a reference that does not solve its equation is rejected
        prob.g1 = None;
        assert!(fixed_point_control(&prob).is_err());
    }

    #[test]
    fn two_point_rotation() {
        let st = setup(32, 0.0, 1.0, 5e-3);
        let u0 = small(st.torus(), 6, 0.0, 1e-2);
        let u1 = u0.scaled(C64::from_polar(1.0, 0.7));
        let r = two_point_control(&st, 1.0, &u0, &u1, opts()).unwrap();
        assert!(r.terminal_miss < 1e-5);
        // reversing twice restores the half control
        let back = r.control.reflect_conj().reflect_conj();
        assert!(back.slices().iter().zip(r.control.slices()).all(|(a, b)| a.sub(b).l2_norm() <= 1e-15 * b.l2_norm().max(1e-300)));
    }

    #[test]
    fn low_mode_bound_arithmetic() {
        let tor = Torus::new(TorusSpec::cube(1, 1.0, 128).unwrap()).unwrap();
        let z = SpectralField::zeros(&tor);
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 16, 32] {
            let b = low_mode_bound(&z, &z, 0.6, n, 1.0, 0.0).unwrap();
            assert_eq!(b.low_part, 0.0);
            let lam = (2.0 * std::f64::consts::PI * n as f64).powi(2);
            assert!((b.tail_part - 2.0 * japanese(lam).powf(-0.2)).abs() < 1e-14);
            assert!(b.bound < prev);
            prev = b.bound;
        }
        assert!(low_mode_bound(&z, &z, 1.0, 4, 1.0, 0.0).is_err());
    }

    #[test]
    fn energy_scaling() {
        let tor = Torus::new(TorusSpec::cube(1, 1.0, 32).unwrap()).unwrap();
        let u = small(&tor, 7, 1.0, 2.0);
        for eta in [0.05, 0.1, 0.5] {
            let scaled = u.scaled(C64::new(1.0 - eta, 0.0));
            assert!(energy(&scaled, 0.0, 1.0) <= (1.0 - eta).powi(2) * energy(&u, 0.0, 1.0) * (1.0 + 1e-14));
        }
    }
}
