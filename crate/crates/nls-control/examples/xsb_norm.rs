//! Restriction norms of a free and of a nonlinear trajectory.

use nls_control::evolution::{solve, EvolutionProblem, Kind};
use nls_control::torus::{random, Torus, TorusSpec};
use nls_control::xsb::{xsb_norm, TimeWindow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nls_control::Result<()> {
    let torus = Torus::new(TorusSpec::cube(1, 1.0, 32)?)?;
    let u0 = random::smooth_field(&torus, &mut ChaCha8Rng::seed_from_u64(2), 4, 0.0, 1.0, 3.0);
    let window = TimeWindow::Planck { ramp: 0.25 };
    for (name, kind) in [("free", Kind::Free), ("cubic", Kind::Nonlinear { sign: 1.0, alpha: 0.0, beta: 1.0 })] {
        let traj = solve(&EvolutionProblem::new(kind, u0.clone(), 1.0, 1e-3))?;
        for b in [0.0, 0.5, 0.75] {
            println!("{name:>5}  b = {b:<4}  X^(1,b) = {:.6e}", xsb_norm(&traj, 1.0, b, window)?);
        }
    }
    Ok(())
}
