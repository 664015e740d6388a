//! Linear control to a target state through the Gramian, checked against a dense solve.

use nls_control::hum::{hum_solve, observability_constant, CgOptions, ControlSetup, DenseGramian, LanczosOptions};
use nls_control::torus::{build_cutoff, random, Slab, Torus, TorusSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nls_control::Result<()> {
    let torus = Torus::new(TorusSpec::cube(1, 1.0, 16)?)?;
    // control region (0, 0.3)
    let setup = ControlSetup::new(build_cutoff(&torus, &[Slab::new(0, 0.15, 0.15)])?, 0.0, 1.0, 2e-3)?;
    let target = random::smooth_field(&torus, &mut ChaCha8Rng::seed_from_u64(3), 4, 0.0, 0.0, 1.0);

    let sol = hum_solve(&setup, &target, 1e-6, CgOptions { tol: 1e-10, max_iter: 500 })?;
    println!("CG iterations {}, terminal miss {:.2e}", sol.iterations, sol.terminal_miss);

    let phi = DenseGramian::assemble(&setup, None)?.solve(&torus, &target)?;
    println!("dense vs CG adjoint datum: {:.2e}", phi.sub(&sol.phi0).l2_norm() / phi.l2_norm());

    for n in [2, 4, 7] {
        let rep = observability_constant(&setup, n, LanczosOptions::default())?;
        println!("cutoff {n}: lambda_min {:.4e}, lambda_max {:.4e}", rep.lambda_min, rep.lambda_max);
    }
    Ok(())
}
