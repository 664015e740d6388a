//! Geometric control checks: straight-line flow on a flat torus against a union
//! of open slabs, and great circles of `S³` against a band around `{x₄ = 0}`.
//!
//! First-entry times are computed in closed form per ray. Sampling cannot
//! certify the condition for all rays; axis-parallel rays are handled
//! exhaustively, everything else by a seeded sample.

use crate::error::{Error, Result};
use crate::torus::{OmegaDesc, Slab, TorusSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub position: Vec<f64>,
    /// Unit direction.
    pub direction: Vec<f64>,
    /// First entry time into ω (infinite when the ray never enters).
    pub entry_time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GccVerdict {
    pub satisfied: bool,
    /// Largest first-entry time found (when satisfied).
    pub t0_estimate: f64,
    /// The slowest ray, or a ray that misses ω within the horizon.
    pub witness: Option<Ray>,
    pub rays_checked: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GccSampling {
    pub directions: usize,
    pub offsets: usize,
    pub seed: u64,
}

/// First time `t ≥ 0` (infimum) at which `x + t·v` lies in the open slab.
pub fn slab_entry_time(slab: &Slab, period: f64, x: f64, v: f64) -> f64 {
    if slab.contains(x, period) {
        return 0.0;
    }
    if v == 0.0 {
        return f64::INFINITY;
    }
    let (lo, hi) = (slab.center - slab.half_width, slab.center + slab.half_width);
    let dist = if v > 0.0 { (lo - x).rem_euclid(period) } else { (x - hi).rem_euclid(period) };
    dist / v.abs()
}

fn slabs(omega: &OmegaDesc) -> Result<Option<&[Slab]>> {
    match omega {
        OmegaDesc::Slabs { slabs } => Ok(Some(slabs)),
        OmegaDesc::Whole => Ok(None),
        OmegaDesc::Empty => Ok(Some(&[])),
        OmegaDesc::Mask => Err(Error::InvalidArgument("geometric checks need a slab description of ω".into())),
    }
}

/// First entry time of a ray; 0 for the whole torus.
pub fn ray_entry_time(spec: &TorusSpec, omega: &OmegaDesc, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(match slabs(omega)? {
        None => 0.0,
        Some(list) => list
            .iter()
            .map(|s| slab_entry_time(s, spec.periods[s.axis], x[s.axis], v[s.axis]))
            .fold(f64::INFINITY, f64::min),
    })
}

/// Closed complement arcs `(start, length)` of the slabs on one axis;
/// `None` when the slabs cover the circle.
fn free_arcs(list: &[Slab], axis: usize, period: f64) -> Option<Vec<(f64, f64)>> {
    let mut iv: Vec<(f64, f64)> = list
        .iter()
        .filter(|s| s.axis == axis)
        .map(|s| {
            let a = (s.center - s.half_width).rem_euclid(period);
            (a, a + 2.0 * s.half_width)
        })
        .collect();
    if iv.is_empty() {
        return Some(vec![(0.0, period)]);
    }
    if iv.iter().any(|&(a, b)| b - a >= period) {
        return None;
    }
    iv.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    // intervals wrapping past the period
    let first_a = merged[0].0;
    let mut arcs = Vec::new();
    let m = merged.len();
    for i in 0..m {
        let end = merged[i].1;
        let next_start = if i + 1 < m { merged[i + 1].0 } else { first_a + period };
        let len = next_start - end;
        if len >= 0.0 {
            arcs.push((end.rem_euclid(period), len));
        }
    }
    if arcs.is_empty() {
        return None;
    }
    let cover_end = merged.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if cover_end - first_a >= period {
        return None;
    }
    Some(arcs)
}

/// Exhaustive treatment of the rays along `±e_j`: the slowest entry over all
/// starting points, with a witness.
fn axis_family(spec: &TorusSpec, list: &[Slab]) -> Vec<Ray> {
    let d = spec.periods.len();
    let arcs: Vec<Option<Vec<(f64, f64)>>> = (0..d).map(|i| free_arcs(list, i, spec.periods[i])).collect();
    let mut out = Vec::new();
    for j in 0..d {
        // every other coordinate must avoid its slabs for entry to be delayed
        let mut x = vec![0.0; d];
        let mut blocked = false;
        for i in (0..d).filter(|&i| i != j) {
            match &arcs[i] {
                None => blocked = true,
                Some(a) => {
                    let (start, len) = a.iter().cloned().fold((0.0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
                    x[i] = (start + 0.5 * len).rem_euclid(spec.periods[i]);
                }
            }
        }
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[j] = sign;
            let mut pos = x.clone();
            let t = if blocked {
                0.0
            } else {
                match &arcs[j] {
                    None => 0.0,
                    Some(a) => {
                        let (start, len) = a.iter().cloned().fold((0.0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
                        pos[j] = if sign > 0.0 { start } else { (start + len).rem_euclid(spec.periods[j]) };
                        if list.iter().any(|s| s.axis == j) {
                            len
                        } else {
                            f64::INFINITY
                        }
                    }
                }
            };
            out.push(Ray { position: pos, direction: v, entry_time: t });
        }
    }
    out
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn torus_gcc_check(spec: &TorusSpec, omega: &OmegaDesc, horizon: f64, sampling: GccSampling) -> Result<GccVerdict> {
    spec.validate()?;
    if !(horizon > 0.0) || sampling.directions == 0 || sampling.offsets == 0 {
        return Err(Error::InvalidArgument("need a positive horizon and nonempty sampling".into()));
    }
    let d = spec.periods.len();
    let list = match slabs(omega)? {
        None => {
            return Ok(GccVerdict { satisfied: true, t0_estimate: 0.0, witness: None, rays_checked: 0 });
        }
        Some(l) => l,
    };
    if let Some(s) = list.iter().find(|s| s.axis >= d) {
        return Err(Error::InvalidArgument(format!("slab axis {} outside dimension {d}", s.axis)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut starts = Vec::with_capacity(sampling.directions * sampling.offsets);
    for _ in 0..sampling.directions {
        let v = if d == 1 { vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }] } else { random_direction(&mut rng, d) };
        for _ in 0..sampling.offsets {
            let x: Vec<f64> = spec.periods.iter().map(|&p| rng.gen::<f64>() * p).collect();
            starts.push((x, v.clone()));
        }
    }
    let mut rays: Vec<Ray> = starts
        .into_par_iter()
        .map(|(x, v)| {
            let t = ray_entry_time(spec, omega, &x, &v).expect("slab description");
            Ray { position: x, direction: v, entry_time: t }
        })
        .collect();
    rays.extend(axis_family(spec, list));
    let rays_checked = rays.len();
    let worst = rays.into_iter().max_by(|a, b| a.entry_time.total_cmp(&b.entry_time)).expect("nonempty");
    let satisfied = worst.entry_time < horizon;
    Ok(GccVerdict {
        satisfied,
        t0_estimate: if satisfied { worst.entry_time } else { f64::INFINITY },
        witness: Some(worst),
        rays_checked,
    })
}

/// Marches the ray in steps of `step` up to `horizon` and returns the first
/// sampled time inside ω, if any.
pub fn simulate_entry(spec: &TorusSpec, omega: &OmegaDesc, ray: &Ray, horizon: f64, step: f64) -> Result<Option<f64>> {
    let list = match slabs(omega)? {
        None => return Ok(Some(0.0)),
        Some(l) => l,
    };
    let n = (horizon / step).ceil() as usize;
    for k in 0..=n {
        let t = k as f64 * step;
        let inside = list.iter().any(|s| {
            let p = spec.periods[s.axis];
            s.contains((ray.position[s.axis] + t * ray.direction[s.axis]).rem_euclid(p), p)
        });
        if inside {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereVerdict {
    pub satisfied: bool,
    /// Sharp uniform entry time `π - 2ε`: a circle that has just left the band
    /// needs half a turn minus the band width to come back (0 when ε ≥ π/2).
    pub t0: f64,
    /// Largest entry time over the sampled great circles.
    pub t0_sampled: f64,
    pub circles: usize,
    /// Circles entering within `π`.
    pub entered_within_pi: usize,
}

/// Entry time of `t ↦ p cos t + q sin t` into `{|x₄| < sin ε}`.
pub fn great_circle_entry(p: &[f64; 4], q: &[f64; 4], eps: f64) -> f64 {
    let s = eps.min(0.5 * PI).sin();
    if p[3].abs() < s {
        return 0.0;
    }
    // x₄(t) = A cos(t - φ)
    let amp = p[3].hypot(q[3]);
    let phi = q[3].atan2(p[3]);
    let beta = (s / amp).min(1.0).asin();
    (0.5 * PI - beta + phi).rem_euclid(PI)
}

fn random_circle(rng: &mut ChaCha8Rng) -> ([f64; 4], [f64; 4]) {
    let g = |rng: &mut ChaCha8Rng| -> [f64; 4] { std::array::from_fn(|_| rng.sample(StandardNormal)) };
    let norm = |v: &[f64; 4]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut p = g(rng);
    let np = norm(&p);
    p.iter_mut().for_each(|x| *x /= np);
    loop {
        let mut q = g(rng);
        let c: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        q.iter_mut().zip(&p).for_each(|(x, y)| *x -= c * y);
        let nq = norm(&q);
        if nq > 1e-8 {
            q.iter_mut().for_each(|x| *x /= nq);
            return (p, q);
        }
    }
}

/// The band `{dist(x, {x₄ = 0}) < ε}` meets every great circle, since a 2-plane
/// through the origin meets the hyperplane `x₄ = 0` in a line; the slowest circle
/// is one that has just left the band. Checked on `circles` random great circles.
pub fn sphere_band_check(eps: f64, circles: usize, seed: u64) -> Result<SphereVerdict> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let t0 = (PI - 2.0 * eps).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..circles)
        .map(|_| {
            let (p, q) = random_circle(&mut rng);
            great_circle_entry(&p, &q, eps)
        })
        .collect();
    let t0_sampled = times.iter().cloned().fold(0.0, f64::max);
    let entered_within_pi = times.iter().filter(|&&t| t < PI).count();
    Ok(SphereVerdict {
        satisfied: entered_within_pi == circles && t0_sampled <= t0 + 1e-12,
        t0,
        t0_sampled,
        circles,
        entered_within_pi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn faces(d: usize, eps: f64) -> OmegaDesc {
        OmegaDesc::Slabs { slabs: (0..d).map(|i| Slab::new(i, 0.0, eps)).collect() }
    }

    fn sampling() -> GccSampling {
        GccSampling { directions: 200, offsets: 20, seed: 3 }
    }

    #[test]
    fn faces_satisfied() {
        for d in [1usize, 2, 3] {
            let spec = TorusSpec::cube(d, 1.0, 8).unwrap();
            let v = torus_gcc_check(&spec, &faces(d, 0.1), 10.0, sampling()).unwrap();
            assert!(v.satisfied);
            assert!(v.t0_estimate > 0.0 && v.t0_estimate <= 3f64.sqrt() * 0.8 + 1e-12, "{}", v.t0_estimate);
        }
    }

    #[test]
    fn single_slab_violated() {
        let spec = TorusSpec::cube(3, 1.0, 8).unwrap();
        let omega = OmegaDesc::Slabs { slabs: vec![Slab::new(0, 0.0, 0.1)] };
        let v = torus_gcc_check(&spec, &omega, 10.0, sampling()).unwrap();
        assert!(!v.satisfied);
        let w = v.witness.unwrap();
        assert!(w.entry_time.is_infinite());
        assert_eq!(w.direction[0], 0.0);
        assert_eq!(simulate_entry(&spec, &omega, &w, 10.0, 0.01).unwrap(), None);
        // the explicit ray of the example
        let ray = Ray { position: vec![0.5, 0.2, 0.7], direction: vec![0.0, 1.0, 0.0], entry_time: 0.0 };
        assert!(ray_entry_time(&spec, &omega, &ray.position, &ray.direction).unwrap().is_infinite());
    }

    #[test]
    fn whole_and_empty() {
        let spec = TorusSpec::cube(2, 1.0, 8).unwrap();
        let v = torus_gcc_check(&spec, &OmegaDesc::Whole, 1.0, sampling()).unwrap();
        assert!(v.satisfied && v.t0_estimate == 0.0);
        assert!(!torus_gcc_check(&spec, &OmegaDesc::Empty, 1.0, sampling()).unwrap().satisfied);
    }

    #[test]
    fn entry_times_match_marching() {
        let spec = TorusSpec::new(vec![1.0, 2.0], vec![8, 8]).unwrap();
        let omega = OmegaDesc::Slabs { slabs: vec![Slab::new(0, 0.3, 0.05), Slab::new(1, 1.5, 0.2)] };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v = random_direction(&mut rng, 2);
            let x = vec![rng.gen::<f64>(), 2.0 * rng.gen::<f64>()];
            let t = ray_entry_time(&spec, &omega, &x, &v).unwrap();
            let ray = Ray { position: x, direction: v, entry_time: t };
            let h = 1e-4;
            match simulate_entry(&spec, &omega, &ray, 50.0, h).unwrap() {
                Some(s) => assert!(s >= t - 1e-12 && s <= t + h + 1e-12, "{s} vs {t}"),
                None => assert!(t > 50.0 - h),
            }
        }
    }

    #[test]
    fn monotone_in_omega() {
        let spec = TorusSpec::cube(3, 1.0, 8).unwrap();
        let a = torus_gcc_check(&spec, &faces(3, 0.05), 10.0, sampling()).unwrap();
        let b = torus_gcc_check(&spec, &faces(3, 0.1), 10.0, sampling()).unwrap();
        assert!(b.t0_estimate <= a.t0_estimate);
    }

    #[test]
    fn axis_family_gap() {
        // gaps of length 0.3 and 0.5 on a unit circle
        let spec = TorusSpec::cube(1, 1.0, 8).unwrap();
        let omega = OmegaDesc::Slabs { slabs: vec![Slab::new(0, 0.1, 0.1), Slab::new(0, 0.6, 0.1)] };
        let v = torus_gcc_check(&spec, &omega, 10.0, GccSampling { directions: 1, offsets: 1, seed: 0 }).unwrap();
        assert!((v.t0_estimate - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sphere_band() {
        let v = sphere_band_check(0.1, 10_000, 7).unwrap();
        assert!(v.satisfied && v.entered_within_pi == 10_000);
        assert!(v.t0_sampled <= PI - 0.2 + 1e-12 && v.t0_sampled > 0.5 * PI);
        assert_eq!(sphere_band_check(0.5 * PI, 10, 1).unwrap().t0, 0.0);
        let eq = great_circle_entry(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 0.1);
        assert_eq!(eq, 0.0);
        // from the pole: entry at π/2 - ε
        let t = great_circle_entry(&[0.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 0.0], 0.1);
        assert!((t - (0.5 * PI - 0.1)).abs() < 1e-12);
        // just after leaving the band: π - 2ε
        let u: f64 = 0.5 * PI + 0.1 + 1e-9;
        let t = great_circle_entry(&[0.0, 0.0, u.sin(), u.cos()], &[0.0, 0.0, u.cos(), -u.sin()], 0.1);
        assert!((t - (PI - 0.2)).abs() < 1e-8, "{t}");
        // closed form against marching
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (p, q) = random_circle(&mut rng);
            let t = great_circle_entry(&p, &q, 0.2);
            let s = (0..40_000)
                .map(|k| k as f64 * 1e-4)
                .find(|&t| (p[3] * t.cos() + q[3] * t.sin()).abs() < 0.2f64.sin())
                .unwrap();
            assert!(s >= t - 1e-12 && s <= t + 1e-4 + 1e-12);
        }
        let mut prev = f64::INFINITY;
        for e in [0.05, 0.1, 0.4] {
            let v = sphere_band_check(e, 100, 1).unwrap();
            assert!(v.t0 < prev);
            prev = v.t0;
        }
    }
}
