use super::*;
use crate::torus::{build_cutoff, random, Slab, Torus, TorusSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn torus1(n: usize, period: f64) -> Arc<Torus> {
    Torus::new(TorusSpec::cube(1, period, n).unwrap()).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn step_free_group_and_unitarity() {
    let t = Torus::new(TorusSpec::new(vec![1.0, 1.7], vec![8, 8]).unwrap()).unwrap();
    let f = random::gaussian_field(&t, &mut rng(1), None);
    assert_eq!(step_free(&f, 0.0).coeffs(), f.coeffs());
    for s in [-1.0, 0.0, 1.0, 2.0] {
        let g = step_free(&f, 0.37);
        assert!((g.sobolev_norm(s) - f.sobolev_norm(s)).abs() < 1e-14 * f.sobolev_norm(s));
    }
    let two = step_free(&step_free(&f, 0.01), 0.01);
    let one = step_free(&f, 0.02);
    assert!(two.sub(&one).l2_norm() < 1e-13);
}

#[test]
fn free_solve_is_step_composition() {
    let t = torus1(32, 1.0);
    let u0 = random::smooth_field(&t, &mut rng(2), 6, 1.0, 1.0, 1.0);
    let p = EvolutionProblem::new(Kind::Free, u0.clone(), 0.1, 0.01);
    let tr = solve(&p).unwrap();
    let mut u = u0.clone();
    for j in 0..tr.len() {
        assert_eq!(tr.slice(j).coeffs(), u.coeffs());
        assert!((tr.slice(j).sobolev_norm(1.0) - u0.sobolev_norm(1.0)).abs() < 1e-12 * u0.sobolev_norm(1.0));
        u = step_free(&u, 0.01);
    }
}

#[test]
fn energy_examples() {
    let t = Torus::new(TorusSpec::new(vec![1.0, 2.0], vec![8, 8]).unwrap()).unwrap();
    assert_eq!(energy(&SpectralField::zeros(&t), 1.0, 1.0), 0.0);
    let c = C64::new(0.6, -0.3);
    let f = SpectralField::from_fn(&t, |_| c).unwrap();
    let want = t.volume() * (c.norm_sqr() / 2.0 + c.norm_sqr().powi(2) / 4.0);
    assert!((energy(&f, 1.0, 1.0) - want).abs() < 1e-12);
    // e^{ik·x} with amplitude 1
    let k = [1i64, -2];
    let m = SpectralField::from_fn(&t, |x| C64::from_polar(1.0, 2.0 * PI * (x[0] * 1.0 - 2.0 * x[1] / 2.0))).unwrap();
    let lam = 4.0 * PI * PI * (1.0 + 1.0);
    let _ = k;
    assert!((energy(&m, 0.0, 0.0) - t.volume() * lam / 2.0).abs() < 1e-10);
}

#[test]
fn nonlinear_conservation_and_reversibility() {
    let t = torus1(64, 2.0 * PI);
    let u0 = random::smooth_field(&t, &mut rng(3), 4, 2.0, 0.0, 1.0);
    let p = EvolutionProblem::new(Kind::Nonlinear { sign: 1.0, alpha: 0.0, beta: 1.0 }, u0.clone(), 1.0, 1e-3);
    let tr = solve(&p).unwrap();
    let m0 = u0.l2_norm();
    let e0 = energy(&u0, 0.0, 1.0);
    let m1 = tr.last().l2_norm();
    let e1 = energy(tr.last(), 0.0, 1.0);
    assert!((m1 - m0).abs() <= 1e-10 * m0);
    assert!((e1 - e0).abs() <= 1e-6 * e0);
    // time reversal
    let back = EvolutionProblem::new(p.kind.clone(), tr.last().conj(), 1.0, 1e-3);
    let u = solve(&back).unwrap().last().conj();
    assert!(u.sub(&u0).l2_norm() < 1e-11 * m0);
}

#[test]
fn damped_constant_data_matches_ode() {
    // a ≡ 1 and constant data: (i - 1) u_t = |u|²u, hence |u|² = |u0|²/(1 + |u0|² t)
    let t = torus1(8, 1.0);
    let profile = DampingProfile::constant(&t, 1.0).unwrap();
    let c0 = C64::new(0.5, 0.2);
    let u0 = SpectralField::from_fn(&t, |_| c0).unwrap();
    let p = EvolutionProblem::new(Kind::Damped { alpha: 0.0, beta: 1.0, profile }, u0, 2.0, 1e-3);
    let tr = solve(&p).unwrap();
    // independent oracle: RK4 on the scalar ODE u' = |u|²u/(i - 1)
    let f = |z: C64| z * z.norm_sqr() / C64::new(-1.0, 1.0);
    let mut z = c0;
    let h = 1e-4;
    let mut ode = vec![z];
    for step in 1..=20000 {
        let k1 = f(z);
        let k2 = f(z + k1 * (h / 2.0));
        let k3 = f(z + k2 * (h / 2.0));
        let k4 = f(z + k3 * h);
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if step % 10 == 0 {
            ode.push(z);
        }
    }
    let m0 = c0.norm_sqr();
    for (j, u) in tr.slices().iter().enumerate() {
        let val = u.to_physical()[3];
        assert!((val - ode[j]).norm() < 1e-7, "node {j}: {val} vs {}", ode[j]);
        let tj = j as f64 * 1e-3;
        let closed = m0 / (1.0 + m0 * tj);
        assert!((val.norm_sqr() - closed).abs() < 1e-7);
    }
    // the alternative formula |u0|/(1 + |u0| t) disagrees once |u0| ≠ 1
    let tj = 2.0;
    let alt = c0.norm() / (1.0 + c0.norm() * tj);
    let got = tr.last().to_physical()[0].norm_sqr();
    assert!((got - alt).abs() > 1e-2);
}

#[test]
fn solve_j_closed_forms() {
    let t = torus1(16, 1.0);
    let rhs = random::gaussian_field(&t, &mut rng(4), None);
    let zero = DampingProfile::zero(&t);
    assert!(solve_j(&rhs, &zero).unwrap().sub(&rhs).l2_norm() < 1e-15);
    let one = DampingProfile::constant(&t, 1.0).unwrap();
    let out = solve_j(&rhs, &one).unwrap();
    for (idx, (o, r)) in out.coeffs().iter().zip(rhs.coeffs()).enumerate() {
        let l = t.lambda(idx);
        let want = r / C64::new(1.0, 1.0 / (1.0 + l));
        assert!((o - want).norm() < 1e-11);
    }
}

#[test]
fn solve_j_dense_oracle() {
    let t = torus1(16, 1.0);
    let mut r = rng(5);
    let a: Vec<f64> = (0..16).map(|_| r.gen_range(0.0..1.0)).collect();
    let profile = DampingProfile::from_values(&t, a).unwrap();
    let j = JOperator::new(&profile);
    let n = t.len();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for col in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[col] = C64::new(1.0, 0.0);
        let je = j.apply(&SpectralField::from_coeffs(&t, e).unwrap());
        for row in 0..n {
            m[(row, col)] = je.coeffs()[row];
        }
    }
    let rhs = random::gaussian_field(&t, &mut r, None);
    let dense = m.lu().solve(&DVector::from_column_slice(rhs.coeffs())).unwrap();
    let out = j.solve(&rhs).unwrap();
    for i in 0..n {
        assert!((out.coeffs()[i] - dense[i]).norm() < 1e-9);
    }
    let back = j.apply(&out);
    assert!(back.sub(&rhs).l2_norm() <= 1e-10 * rhs.l2_norm());
}

#[test]
fn linearized_superposition() {
    let t = torus1(32, 1.0);
    let mut r = rng(6);
    let w0 = random::smooth_field(&t, &mut r, 4, 0.0, 0.0, 1.0);
    let w = solve(&EvolutionProblem::new(Kind::Nonlinear { sign: 1.0, alpha: 0.0, beta: 1.0 }, w0, 0.2, 0.01)).unwrap();
    let u0 = random::smooth_field(&t, &mut r, 6, 0.0, 0.0, 1.0);
    let g = Trajectory::new(0.01, (0..21).map(|_| random::smooth_field(&t, &mut r, 6, 0.0, 0.0, 1.0)).collect()).unwrap();
    let kind = Kind::LinearPotential { w, signs: PotentialSigns::linearized(1.0) };
    let both = solve_linearized(&EvolutionProblem::new(kind.clone(), u0.clone(), 0.2, 0.01).with_source(g.clone())).unwrap();
    let only_u = solve_linearized(&EvolutionProblem::new(kind.clone(), u0.clone(), 0.2, 0.01)).unwrap();
    let only_g =
        solve_linearized(&EvolutionProblem::new(kind.clone(), SpectralField::zeros(&t), 0.2, 0.01).with_source(g.clone()))
            .unwrap();
    for j in 0..both.len() {
        let s = only_u.slice(j).add(only_g.slice(j));
        assert!(both.slice(j).sub(&s).l2_norm() < 1e-10);
    }
    // real-linearity
    let lam = -2.5;
    let scaled = solve_linearized(
        &EvolutionProblem::new(kind, u0.scaled(C64::new(lam, 0.0)), 0.2, 0.01).with_source(g.map(|s| s.scaled(C64::new(lam, 0.0)))),
    )
    .unwrap();
    assert!(scaled.last().sub(&both.last().scaled(C64::new(lam, 0.0))).l2_norm() < 1e-10);
}

#[test]
fn backward_solve_inverts_forward() {
    let t = torus1(32, 1.0);
    let mut r = rng(7);
    let u0 = random::smooth_field(&t, &mut r, 6, 0.0, 0.0, 0.5);
    let g = Trajectory::with_origin(
        0.005,
        0.01,
        (0..30).map(|_| random::smooth_field(&t, &mut r, 6, 0.0, 0.0, 1.0)).collect(),
    )
    .unwrap();
    for sign in [1.0, -1.0] {
        let kind = Kind::Nonlinear { sign, alpha: 0.0, beta: 1.0 };
        let fwd = integrate(&EvolutionProblem::new(kind.clone(), u0.clone(), 0.3, 0.01).with_source(g.clone()), SolveOptions::default())
            .unwrap();
        let back = integrate_backward(
            &EvolutionProblem::new(kind, fwd.final_state.clone(), 0.3, 0.01).with_source(g.clone()),
            SolveOptions::default(),
        )
        .unwrap();
        assert!(back.final_state.sub(&u0).l2_norm() < 1e-12);
        let nodes = back.nodes.unwrap();
        let fnodes = fwd.nodes.unwrap();
        for j in 0..nodes.len() {
            assert!(nodes.slice(j).sub(fnodes.slice(j)).l2_norm() < 1e-12);
        }
    }
}

#[test]
fn ledger_without_damping_is_conservation() {
    let t = torus1(32, 2.0 * PI);
    let u0 = random::smooth_field(&t, &mut rng(8), 3, 0.0, 1.0, 0.5);
    let profile = DampingProfile::zero(&t);
    let p = EvolutionProblem::new(Kind::Damped { alpha: 1.0, beta: 1.0, profile: profile.clone() }, u0, 0.5, 0.01);
    let tr = solve(&p).unwrap();
    let ledger = decay_ledger(&tr, &profile, 1.0, 1.0).unwrap();
    assert!(ledger.dissipation.iter().all(|&d| d == 0.0));
    assert!(ledger.max_abs_residual() < 1e-5 * ledger.energy[0], "{} {}", ledger.max_abs_residual(), ledger.energy[0]);
}

#[test]
fn damped_energy_decreases() {
    // steep cutoff, coarse step: the discrete identity still forces monotone decay
    let t = torus1(32, 1.0);
    let profile = build_cutoff(&t, &[Slab::new(0, 0.25, 0.2)]).unwrap();
    let u0 = random::smooth_field(&t, &mut rng(9), 4, 0.0, 1.0, 1.0);
    let p = EvolutionProblem::new(Kind::Damped { alpha: 1.0, beta: 1.0, profile: profile.clone() }, u0, 0.5, 2e-3);
    let tr = solve(&p).unwrap();
    let e: Vec<f64> = tr.slices().iter().map(|u| energy(u, 1.0, 1.0)).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-10 * e[0]));
    assert!(e.last().unwrap() < &(0.9 * e[0]));
}

#[test]
fn ledger_residual_is_second_order() {
    let t = torus1(64, 2.0 * PI);
    let profile = build_cutoff(&t, &[Slab::new(0, PI, 1.5)]).unwrap();
    let u0 = random::smooth_field(&t, &mut rng(10), 3, 0.0, 1.0, 1.0);
    let res: Vec<f64> = [2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let p = EvolutionProblem::new(Kind::Damped { alpha: 1.0, beta: 1.0, profile: profile.clone() }, u0.clone(), 0.5, dt);
            decay_ledger(&solve(&p).unwrap(), &profile, 1.0, 1.0).unwrap().max_abs_residual()
        })
        .collect();
    let ratio = res[0] / res[1];
    assert!((3.5..4.5).contains(&ratio), "{res:?}");
}
