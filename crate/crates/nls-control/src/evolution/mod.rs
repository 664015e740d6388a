//! Time integration of the free, linearized, cubic and damped Schrödinger equations.
//!
//! Equations are written as `i u_t + Δu = N(u) + g`:
//!
//! * `Free`: `N = 0`;
//! * `LinearPotential`: `N = s₁·2|w|²u + s₂·w²ū`;
//! * `Nonlinear`: `N = αu + σβ|u|²u` (`σ = +1` defocusing);
//! * `Damped`: `N = αu + β|u|²u + A u_t` with `A = a(1-Δ)^{-1}a`.
//!
//! The first three use Strang splitting: exact half steps of the free flow around
//! the exact pointwise flow of `N`, with the source injected at the step midpoint.
//! The damped equation is integrated in the variable `v = Ju`, `J = I + iA`.

mod damped;
mod split;

pub use damped::{decay_ledger, fit_decay_rate, solve_j, EnergyLedger, JOperator};

use crate::error::{Error, Result};
use crate::torus::{DampingProfile, SpectralField, C64};
use crate::trajectory::Trajectory;

/// Above this H¹ norm a run is aborted as a blow-up.
pub const BLOWUP_H1: f64 = 1e6;

/// Signs of the potential terms `s₁·2|w|²u + s₂·w²ū`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSigns {
    pub modulus: f64,
    pub conjugate: f64,
}

impl PotentialSigns {
    /// Linearization of the cubic equation with nonlinearity sign `sign` around `w`.
    pub fn linearized(sign: f64) -> Self {
        PotentialSigns { modulus: sign, conjugate: sign }
    }

    /// Equation dual to [`Self::linearized`] for the real L² pairing.
    pub fn dual(sign: f64) -> Self {
        PotentialSigns { modulus: sign, conjugate: -sign }
    }

    /// The sign pattern dual to `self`.
    pub fn flipped(self) -> Self {
        PotentialSigns { modulus: self.modulus, conjugate: -self.conjugate }
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    Free,
    LinearPotential { w: Trajectory, signs: PotentialSigns },
    Nonlinear { sign: f64, alpha: f64, beta: f64 },
    Damped { alpha: f64, beta: f64, profile: DampingProfile },
}

#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    pub kind: Kind,
    pub source: Option<Trajectory>,
    pub u0: SpectralField,
    pub t_final: f64,
    pub dt: f64,
}

impl EvolutionProblem {
    pub fn new(kind: Kind, u0: SpectralField, t_final: f64, dt: f64) -> Self {
        EvolutionProblem { kind, source: None, u0, t_final, dt }
    }

    pub fn with_source(mut self, g: Trajectory) -> Self {
        self.source = Some(g);
        self
    }

    /// Number of steps; `t_final` must be an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("T must be positive, got {}", self.t_final)));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::InvalidArgument(format!(
                "T = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }

    fn validate(&self) -> Result<usize> {
        let steps = self.steps()?;
        if let Some(g) = &self.source {
            if !g.first().same_grid(&self.u0) {
                return Err(Error::InvalidArgument("source lives on a different grid".into()));
            }
            let tol = 1e-9 * self.dt;
            if g.t0() > 0.5 * self.dt + tol || g.end_time() < self.t_final - 0.5 * self.dt - tol {
                return Err(Error::InvalidArgument("source does not cover the time interval".into()));
            }
        }
        match &self.kind {
            Kind::Damped { alpha, beta, profile } => {
                if *alpha < 0.0 || *beta < 0.0 {
                    return Err(Error::InvalidArgument("damped equation needs α, β ≥ 0".into()));
                }
                if profile.torus().spec() != self.u0.torus().spec() {
                    return Err(Error::InvalidArgument("profile lives on a different grid".into()));
                }
            }
            Kind::Nonlinear { sign, alpha, beta } => {
                if sign.abs() != 1.0 || *alpha < 0.0 || *beta < 0.0 {
                    return Err(Error::InvalidArgument("nonlinear kind needs sign ±1 and α, β ≥ 0".into()));
                }
            }
            Kind::LinearPotential { w, .. } => {
                if !w.first().same_grid(&self.u0) {
                    return Err(Error::InvalidArgument("potential lives on a different grid".into()));
                }
                let tol = 1e-9 * self.dt;
                if w.t0() > 0.5 * self.dt + tol || w.end_time() < self.t_final - 0.5 * self.dt - tol {
                    return Err(Error::InvalidArgument("potential does not cover the time interval".into()));
                }
            }
            Kind::Free => {}
        }
        Ok(steps)
    }
}

/// What an integration run keeps.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Keep only the final state instead of every node.
    pub final_only: bool,
    /// Record the split-step midpoint states (state after the first half of each step).
    pub record_midpoints: bool,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub nodes: Option<Trajectory>,
    pub final_state: SpectralField,
    pub midpoints: Option<Trajectory>,
}

/// Full trajectory sampled at every step.
pub fn solve(problem: &EvolutionProblem) -> Result<Trajectory> {
    let sol = integrate(problem, SolveOptions::default())?;
    Ok(sol.nodes.expect("nodes requested"))
}

/// Linear solve with a potential; identical to [`solve`] but checks the kind.
pub fn solve_linearized(problem: &EvolutionProblem) -> Result<Trajectory> {
    match problem.kind {
        Kind::LinearPotential { .. } | Kind::Free => solve(problem),
        _ => Err(Error::InvalidArgument("solve_linearized needs a linear kind".into())),
    }
}

pub fn integrate(problem: &EvolutionProblem, opts: SolveOptions) -> Result<Solution> {
    let steps = problem.validate()?;
    match &problem.kind {
        Kind::Damped { alpha, beta, profile } => {
            if opts.record_midpoints {
                return Err(Error::InvalidArgument("damped runs have no split midpoints".into()));
            }
            damped::integrate(problem, *alpha, *beta, profile, steps, opts)
        }
        _ => split::integrate(problem, steps, opts),
    }
}

/// Solves backward from the terminal state `u(T) = u_t` by integrating the
/// time-reflected, conjugated problem forward. Returned trajectories are in
/// original time; the initial state is `final_state`.
pub fn integrate_backward(problem: &EvolutionProblem, opts: SolveOptions) -> Result<Solution> {
    let kind = match &problem.kind {
        Kind::Free => Kind::Free,
        Kind::LinearPotential { w, signs } => Kind::LinearPotential { w: reflect_within(w, problem.t_final), signs: *signs },
        Kind::Nonlinear { sign, alpha, beta } => Kind::Nonlinear { sign: *sign, alpha: *alpha, beta: *beta },
        Kind::Damped { .. } => {
            return Err(Error::InvalidArgument("the damped equation is not time reversible".into()))
        }
    };
    let reflected = EvolutionProblem {
        kind,
        source: problem.source.as_ref().map(|g| reflect_within(g, problem.t_final)),
        u0: problem.u0.conj(),
        t_final: problem.t_final,
        dt: problem.dt,
    };
    let sol = integrate(&reflected, opts)?;
    Ok(Solution {
        nodes: sol.nodes.map(|n| n.reflect_conj()),
        final_state: sol.final_state.conj(),
        midpoints: sol.midpoints.map(|m| m.reflect_conj()),
    })
}

/// Reflects samples about the midpoint of `[0, t_final]`, conjugating each slice.
fn reflect_within(tr: &Trajectory, t_final: f64) -> Trajectory {
    let r = tr.reflect_conj();
    let t0 = t_final - tr.end_time();
    Trajectory::with_origin(t0, tr.dt(), r.into_slices()).expect("reflection keeps validity")
}

/// Exact free propagator: coefficient `k` times `exp(-iλ_k dt)`.
pub fn step_free(field: &SpectralField, dt: f64) -> SpectralField {
    let mut out = field.clone();
    let lam = field.torus().eigenvalues();
    for (c, &l) in out.coeffs_mut().iter_mut().zip(lam) {
        *c *= C64::from_polar(1.0, -l * dt);
    }
    out
}

/// `½∫|∇u|² + ½α∫|u|² + ¼β∫|u|⁴`; the quartic term on the doubled grid.
pub fn energy(field: &SpectralField, alpha: f64, beta: f64) -> f64 {
    let lam = field.torus().eigenvalues();
    let quad: f64 = field
        .coeffs()
        .iter()
        .zip(lam)
        .map(|(c, &l)| (l + alpha) * c.norm_sqr())
        .sum::<f64>()
        * 0.5;
    if beta == 0.0 {
        quad
    } else {
        quad + 0.25 * beta * field.quartic_integral()
    }
}

#[cfg(test)]
mod tests;
