use super::{EvolutionProblem, Kind, PotentialSigns, Solution, SolveOptions, BLOWUP_H1};
use crate::error::{Error, Result};
use crate::torus::{SpectralField, Torus, C64};
use crate::trajectory::Trajectory;
use std::sync::Arc;

enum Flow<'a> {
    None,
    Phase { sigma: f64, alpha: f64, beta: f64 },
    Potential { w: &'a Trajectory, signs: PotentialSigns },
}

/// Exact flow of `z' = -i(p z + q z̄)` over time `h` (real 2×2 linear map).
#[inline]
pub(crate) fn potential_flow(z: C64, p: f64, q: C64, h: f64) -> C64 {
    // z = x + iy, G = [[qi, p-qr], [-(p+qr), -qi]], G² = (|q|²-p²) I
    let delta = q.norm_sqr() - p * p;
    let mu = delta * h * h;
    let (c, s) = if mu.abs() < 1e-4 {
        (
            1.0 + mu / 2.0 + mu * mu / 24.0 + mu * mu * mu / 720.0,
            h * (1.0 + mu / 6.0 + mu * mu / 120.0 + mu * mu * mu / 5040.0),
        )
    } else if delta > 0.0 {
        let r = delta.sqrt();
        ((r * h).cosh(), (r * h).sinh() / r)
    } else {
        let r = (-delta).sqrt();
        ((r * h).cos(), (r * h).sin() / r)
    };
    let (x, y) = (z.re, z.im);
    let gx = q.im * x + (p - q.re) * y;
    let gy = -(p + q.re) * x - q.im * y;
    C64::new(c * x + s * gx, c * y + s * gy)
}

struct Split<'a> {
    torus: Arc<Torus>,
    half: Vec<C64>,
    full: Vec<C64>,
    flow: Flow<'a>,
    source: Option<&'a Trajectory>,
    dt: f64,
}

impl<'a> Split<'a> {
    fn pointwise(&self, x: &mut [C64], w: Option<&[C64]>) {
        let h = 0.5 * self.dt;
        match &self.flow {
            Flow::None => {}
            Flow::Phase { sigma, alpha, beta } => {
                for z in x.iter_mut() {
                    let phase = -(alpha + sigma * beta * z.norm_sqr()) * h;
                    *z *= C64::from_polar(1.0, phase);
                }
            }
            Flow::Potential { signs, .. } => {
                let w = w.expect("potential values");
                for (z, wi) in x.iter_mut().zip(w) {
                    let p = signs.modulus * 2.0 * wi.norm_sqr();
                    let q = signs.conjugate * wi * wi;
                    *z = potential_flow(*z, p, q, h);
                }
            }
        }
    }

    /// One step; returns the midpoint state in coefficient space when requested.
    fn step(&self, n: usize, u: &mut [C64], want_mid: bool) -> Option<Vec<C64>> {
        let t_mid = (n as f64 + 0.5) * self.dt;
        if matches!(self.flow, Flow::None) && self.source.is_none() {
            let mid = if want_mid {
                Some(u.iter().zip(&self.half).map(|(c, e)| c * e).collect())
            } else {
                None
            };
            u.iter_mut().zip(&self.full).for_each(|(c, e)| *c *= e);
            return mid;
        }
        let w_phys = match &self.flow {
            Flow::Potential { w, .. } => Some(w.sample(t_mid).to_physical()),
            _ => None,
        };
        u.iter_mut().zip(&self.half).for_each(|(c, e)| *c *= e);
        self.torus.inverse(u);
        self.pointwise(u, w_phys.as_deref());
        let mid = if want_mid {
            let mut m = u.to_vec();
            self.torus.forward(&mut m);
            Some(m)
        } else {
            None
        };
        if let Some(g) = self.source {
            let gp = g.sample(t_mid).to_physical();
            let f = C64::new(0.0, -self.dt);
            u.iter_mut().zip(&gp).for_each(|(z, gi)| *z += f * gi);
        }
        self.pointwise(u, w_phys.as_deref());
        self.torus.forward(u);
        u.iter_mut().zip(&self.half).for_each(|(c, e)| *c *= e);
        mid
    }
}

pub(super) fn integrate(problem: &EvolutionProblem, steps: usize, opts: SolveOptions) -> Result<Solution> {
    let torus = problem.u0.torus().clone();
    let dt = problem.dt;
    let flow = match &problem.kind {
        Kind::Free => Flow::None,
        Kind::Nonlinear { sign, alpha, beta } => {
            if *alpha == 0.0 && *beta == 0.0 {
                Flow::None
            } else {
                Flow::Phase { sigma: *sign, alpha: *alpha, beta: *beta }
            }
        }
        Kind::LinearPotential { w, signs } => Flow::Potential { w, signs: *signs },
        Kind::Damped { .. } => unreachable!("damped kind handled elsewhere"),
    };
    let lam = torus.eigenvalues();
    let split = Split {
        half: lam.iter().map(|&l| C64::from_polar(1.0, -l * 0.5 * dt)).collect(),
        full: lam.iter().map(|&l| C64::from_polar(1.0, -l * dt)).collect(),
        torus: torus.clone(),
        flow,
        source: problem.source.as_ref(),
        dt,
    };
    let nonlinear = matches!(split.flow, Flow::Phase { .. });
    let mut u = problem.u0.coeffs().to_vec();
    let mut nodes = if opts.final_only { Vec::new() } else { vec![problem.u0.clone()] };
    let mut mids = Vec::new();
    for n in 0..steps {
        let mid = split.step(n, &mut u, opts.record_midpoints);
        if let Some(m) = mid {
            mids.push(SpectralField::from_parts(torus.clone(), m));
        }
        let field = SpectralField::from_parts(torus.clone(), u.clone());
        if nonlinear || split.source.is_some() {
            let h1 = field.sobolev_norm(1.0);
            if !(h1 <= BLOWUP_H1) {
                return Err(Error::BlowupDetected { t: (n + 1) as f64 * dt, norm: h1 });
            }
        }
        if !opts.final_only {
            nodes.push(field);
        }
    }
    let final_state = SpectralField::from_parts(torus.clone(), u);
    Ok(Solution {
        nodes: if opts.final_only { None } else { Some(Trajectory::new(dt, nodes)?) },
        final_state,
        midpoints: if opts.record_midpoints { Some(Trajectory::with_origin(0.5 * dt, dt, mids)?) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_flow_matches_fine_rk4() {
        let cases = [(2.0, C64::new(1.0, 0.3)), (-0.4, C64::new(1.5, -0.8)), (0.7, C64::new(0.7, 0.0))];
        for (p, q) in cases {
            let z0 = C64::new(0.3, -1.1);
            let h = 0.37;
            let f = |z: C64| -C64::i() * (p * z + q * z.conj());
            let mut z = z0;
            let m = 20000;
            let dt = h / m as f64;
            for _ in 0..m {
                let k1 = f(z);
                let k2 = f(z + k1 * (dt / 2.0));
                let k3 = f(z + k2 * (dt / 2.0));
                let k4 = f(z + k3 * dt);
                z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            }
            assert!((potential_flow(z0, p, q, h) - z).norm() < 1e-11, "{}", (potential_flow(z0, p, q, h) - z).norm());
        }
    }

    #[test]
    fn potential_flow_duality() {
        // forward and dual flows preserve the real pairing
        let (p, q) = (1.3, C64::new(0.4, -0.9));
        let (a, b) = (C64::new(0.2, 0.7), C64::new(-1.0, 0.5));
        let fa = potential_flow(a, p, q, 0.8);
        let fb = potential_flow(b, p, -q, 0.8);
        let lhs = fa.re * fb.re + fa.im * fb.im;
        let rhs = a.re * b.re + a.im * b.im;
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
