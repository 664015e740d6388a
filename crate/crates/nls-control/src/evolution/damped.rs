use super::{energy, EvolutionProblem, Solution, SolveOptions, BLOWUP_H1};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::torus::{DampingProfile, SpectralField, Torus, C64};
use crate::trajectory::Trajectory;
use serde::Serialize;
use std::sync::Arc;

const J_TOL: f64 = 1e-12;
const J_MAX_ITER: usize = 300;
const CORRECTOR_TOL: f64 = 1e-13;
const CORRECTOR_MAX_ITER: usize = 60;

/// `J = I + iA`, `A = a(1-Δ)^{-1}a`.
pub struct JOperator {
    torus: Arc<Torus>,
    a: Vec<f64>,
    resolvent: Vec<f64>,
    zero: bool,
}

impl JOperator {
    pub fn new(profile: &DampingProfile) -> Self {
        let torus = profile.torus().clone();
        let resolvent = torus.eigenvalues().iter().map(|l| 1.0 / (1.0 + l)).collect();
        JOperator { a: profile.values().to_vec(), resolvent, zero: profile.is_zero(), torus }
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    /// `A x` for physical values.
    pub fn apply_a_phys(&self, x: &[C64]) -> Vec<C64> {
        if self.zero {
            return vec![C64::new(0.0, 0.0); x.len()];
        }
        let mut y: Vec<C64> = x.iter().zip(&self.a).map(|(z, a)| z * a).collect();
        self.torus.forward(&mut y);
        y.iter_mut().zip(&self.resolvent).for_each(|(c, r)| *c *= r);
        self.torus.inverse(&mut y);
        y.iter_mut().zip(&self.a).for_each(|(z, a)| *z *= a);
        y
    }

    /// `A c` for Fourier coefficients.
    fn apply_a_coeffs(&self, c: &[C64]) -> Vec<C64> {
        if self.zero {
            return vec![C64::new(0.0, 0.0); c.len()];
        }
        let mut x = c.to_vec();
        self.torus.inverse(&mut x);
        let mut y = self.apply_a_phys(&x);
        self.torus.forward(&mut y);
        y
    }

    /// `J u`.
    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        let au = self.apply_a_coeffs(u.coeffs());
        let y = u.coeffs().iter().zip(&au).map(|(z, w)| z + C64::i() * w).collect();
        SpectralField::from_parts(self.torus.clone(), y)
    }

    /// Solves `(I + i(A + D)) x = b` in coefficients, `D` a real Fourier multiplier
    /// (absent means zero), by preconditioned CG on `I + (A + D)²`.
    fn solve_shifted(&self, b: &[C64], shift: Option<&[f64]>, guess: Option<&[C64]>) -> Result<Vec<C64>> {
        let h = |x: &[C64]| -> Vec<C64> {
            let mut y = self.apply_a_coeffs(x);
            if let Some(d) = shift {
                y.iter_mut().zip(x).zip(d).for_each(|((yi, xi), di)| *yi += xi * di);
            }
            y
        };
        if self.zero && shift.is_none() {
            return Ok(b.to_vec());
        }
        // normal equations: (I + H²) x = (I - iH) b
        let hb = h(b);
        let rhs: Vec<C64> = b.iter().zip(&hb).map(|(r, a)| r - C64::i() * a).collect();
        let bnorm = norm(&rhs);
        if bnorm == 0.0 {
            return Ok(vec![C64::new(0.0, 0.0); b.len()]);
        }
        let normal = |x: &[C64]| -> Vec<C64> {
            let hx = h(x);
            let hhx = h(&hx);
            x.iter().zip(&hhx).map(|(u, v)| u + v).collect()
        };
        let precond = |r: &[C64]| -> Vec<C64> {
            match shift {
                Some(d) => r.iter().zip(d).map(|(ri, di)| ri / (1.0 + di * di)).collect(),
                None => r.to_vec(),
            }
        };
        let mut x = match guess {
            Some(g) => g.to_vec(),
            None => precond(&rhs),
        };
        let nx = normal(&x);
        let mut r: Vec<C64> = rhs.iter().zip(&nx).map(|(bi, ni)| bi - ni).collect();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 0..J_MAX_ITER {
            if norm(&r) <= J_TOL * bnorm {
                return Ok(x);
            }
            let np = normal(&p);
            let alpha = rz / dot(&p, &np);
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&np).for_each(|(ri, ni)| *ri -= alpha * ni);
            z = precond(&r);
            let rz_new = dot(&r, &z);
            if !rz_new.is_finite() {
                return Err(Error::JInversionFailed { iterations: it + 1, residual: f64::NAN });
            }
            let beta = rz_new / rz;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
            rz = rz_new;
        }
        let res = norm(&r) / bnorm;
        if res <= J_TOL {
            Ok(x)
        } else {
            Err(Error::JInversionFailed { iterations: J_MAX_ITER, residual: res })
        }
    }

    pub fn solve(&self, rhs: &SpectralField) -> Result<SpectralField> {
        let x = self.solve_shifted(rhs.coeffs(), None, None)?;
        Ok(SpectralField::from_parts(self.torus.clone(), x))
    }

    /// `‖(1-Δ)^{-1/2} a f‖²` for `f` given by coefficients.
    pub fn dissipation_density(&self, f: &[C64]) -> f64 {
        let mut y = f.to_vec();
        self.torus.inverse(&mut y);
        y.iter_mut().zip(&self.a).for_each(|(z, a)| *z *= a);
        self.torus.forward(&mut y);
        y.iter().zip(&self.resolvent).map(|(c, r)| c.norm_sqr() * r).sum()
    }
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[C64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `J out = rhs` for the profile `a`.
pub fn solve_j(rhs: &SpectralField, profile: &DampingProfile) -> Result<SpectralField> {
    JOperator::new(profile).solve(rhs)
}

/// Pointwise product `f(x₁, …, x_m)` of fields given by coefficients, evaluated on
/// the doubled grid and truncated back. Alias-free for cubic expressions.
pub(crate) fn padded_product(torus: &Torus, inputs: &[&[C64]], f: impl Fn(&[C64]) -> C64) -> Vec<C64> {
    let padded = torus.padded();
    let phys: Vec<Vec<C64>> = inputs
        .iter()
        .map(|c| {
            let mut v = torus.embed_padded(c, &padded);
            padded.inverse(&mut v);
            v
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); inputs.len()];
    let mut out: Vec<C64> = (0..padded.len())
        .map(|i| {
            for (b, p) in buf.iter_mut().zip(&phys) {
                *b = p[i];
            }
            f(&buf)
        })
        .collect();
    padded.forward(&mut out);
    (0..torus.len()).map(|idx| out[padded.index_of(&torus.lattice(idx)).expect("coarse lattice fits")]).collect()
}

/// `|u|²u` evaluated alias-free on the doubled grid and truncated back.
pub(crate) fn cubic_dealiased(u: &SpectralField) -> Vec<C64> {
    padded_product(u.torus(), &[u.coeffs()], |z| z[0] * z[0].norm_sqr())
}

/// `J u_t = iΔu - iαu - iβ|u|²u` at a node (no source).
fn time_derivative(j: &JOperator, u: &SpectralField, alpha: f64, beta: f64) -> Result<Vec<C64>> {
    let lam = u.torus().eigenvalues();
    let mut f: Vec<C64> = u.coeffs().iter().zip(lam).map(|(c, &l)| C64::new(0.0, -(l + alpha)) * c).collect();
    if beta != 0.0 {
        let cub = cubic_dealiased(u);
        f.iter_mut().zip(&cub).for_each(|(fi, ci)| *fi -= C64::new(0.0, beta) * ci);
    }
    j.solve_shifted(&f, None, None)
}

/// Trapezoid rule for `v = Ju`, `v_t = iΔv + R₀v - iβ|u|²u - ig`, written in `u`:
///
/// `J(u₁ - u₀) = dt·[iΔ'u_m - iβ·½(|u₁|² + |u₀|²)u_m - ig(t_m)]`, `u_m = ½(u₀ + u₁)`,
/// `Δ' = Δ - α`. The cubic term is iterated to convergence; each iterate solves
/// `(J + i·dt/2·(λ + α)) δ = b` by preconditioned CG. For `g = 0` this gives the
/// discrete identity `E(u₁) - E(u₀) = -⟨Aδ, δ⟩/dt` exactly.
pub(super) fn integrate(
    problem: &EvolutionProblem,
    alpha: f64,
    beta: f64,
    profile: &DampingProfile,
    steps: usize,
    opts: SolveOptions,
) -> Result<Solution> {
    let torus = problem.u0.torus().clone();
    let dt = problem.dt;
    let j = JOperator::new(profile);
    let lam_a: Vec<f64> = torus.eigenvalues().iter().map(|&l| l + alpha).collect();
    let shift: Vec<f64> = lam_a.iter().map(|l| 0.5 * dt * l).collect();

    let mut u = problem.u0.coeffs().to_vec();
    let mut nodes = if opts.final_only { Vec::new() } else { vec![problem.u0.clone()] };
    let mut delta = vec![C64::new(0.0, 0.0); u.len()];

    for n in 0..steps {
        let t_mid = (n as f64 + 0.5) * dt;
        // linear part of the right-hand side: dt·iΔ'u₀ - i·dt·g
        let mut lin: Vec<C64> = u.iter().zip(&lam_a).map(|(c, l)| C64::new(0.0, -dt * l) * c).collect();
        if let Some(g) = &problem.source {
            let gm = g.sample(t_mid);
            lin.iter_mut().zip(gm.coeffs()).for_each(|(b, gi)| *b -= C64::new(0.0, dt) * gi);
        }
        let scale = norm(&u).max(norm(&lin)).max(1e-300);
        let mut converged = false;
        for _ in 0..CORRECTOR_MAX_ITER {
            let b = if beta == 0.0 {
                lin.clone()
            } else {
                let u1: Vec<C64> = u.iter().zip(&delta).map(|(a, d)| a + d).collect();
                let cub = padded_product(&torus, &[&u, &u1], |z| {
                    0.25 * (z[0].norm_sqr() + z[1].norm_sqr()) * (z[0] + z[1])
                });
                lin.iter().zip(&cub).map(|(l, c)| l - C64::new(0.0, dt * beta) * c).collect()
            };
            let next = j.solve_shifted(&b, Some(&shift), Some(&delta))?;
            let diff = next.iter().zip(&delta).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            delta = next;
            if !diff.is_finite() {
                break;
            }
            if beta == 0.0 || diff <= CORRECTOR_TOL * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::CorrectorDiverged { step: n });
        }
        u.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        let field = SpectralField::from_parts(torus.clone(), u.clone());
        let h1 = field.sobolev_norm(1.0);
        if !(h1 <= BLOWUP_H1) {
            return Err(Error::BlowupDetected { t: (n + 1) as f64 * dt, norm: h1 });
        }
        if !opts.final_only {
            nodes.push(field);
        }
    }
    let final_state = SpectralField::from_parts(torus.clone(), u);
    Ok(Solution {
        nodes: if opts.final_only { None } else { Some(Trajectory::new(dt, nodes)?) },
        final_state,
        midpoints: None,
    })
}

/// Energy, cumulative dissipation and their balance along a damped run.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub residual: Vec<f64>,
    /// Decay rate from a least-squares fit of `log E(t) ≈ c - 2γt`.
    pub gamma: Option<f64>,
}

impl EnergyLedger {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0f64, |a, r| a.max(r.abs()))
    }

    /// Largest increase of `E` between consecutive nodes.
    pub fn max_increase(&self) -> f64 {
        self.energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,E,dissipation,residual\n");
        for j in 0..self.times.len() {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.times[j], self.energy[j], self.dissipation[j], self.residual[j]
            ));
        }
        s
    }
}

/// Rebuilds `u_t` from the equation at every node and accumulates the dissipation
/// `∫‖(1-Δ)^{-1/2} a u_t‖²` by the trapezoid rule.
pub fn decay_ledger(traj: &Trajectory, profile: &DampingProfile, alpha: f64, beta: f64) -> Result<EnergyLedger> {
    let j = JOperator::new(profile);
    let times = traj.times();
    let mut e = Vec::with_capacity(traj.len());
    let mut density = Vec::with_capacity(traj.len());
    for u in traj.slices() {
        e.push(energy(u, alpha, beta));
        if profile.is_zero() {
            density.push(0.0);
        } else {
            let ut = time_derivative(&j, u, alpha, beta)?;
            density.push(j.dissipation_density(&ut));
        }
    }
    let mut dissipation = vec![0.0; traj.len()];
    for j in 1..traj.len() {
        dissipation[j] = dissipation[j - 1] + 0.5 * traj.dt() * (density[j - 1] + density[j]);
    }
    let residual = e.iter().zip(&dissipation).map(|(ej, dj)| ej - e[0] + dj).collect();
    let gamma = fit_decay_rate(&times, &e);
    Ok(EnergyLedger { times, energy: e, dissipation, residual, gamma })
}

/// `γ̂` with `log E ≈ c - 2γ̂ t`; `None` when fewer than two positive energies exist.
pub fn fit_decay_rate(times: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times.iter().zip(e).filter(|(_, &v)| v > 0.0).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&x, &y).ok().map(|f| -0.5 * f.slope)
}
