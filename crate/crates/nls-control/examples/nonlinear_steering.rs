//! Steering small data to zero by Picard iteration, then the energy-shrinking
//! global scheme from data of size one.

use nls_control::hum::ControlSetup;
use nls_control::steering::{fixed_point_control, global_drive_to_zero, GlobalOptions, SteeringOptions, SteeringProblem};
use nls_control::torus::{build_cutoff, random, Slab, Torus, TorusSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nls_control::Result<()> {
    let torus = Torus::new(TorusSpec::cube(1, 1.0, 32)?)?;
    let profile = build_cutoff(&torus, &[Slab::new(0, 0.15, 0.15)])?;
    let opts = SteeringOptions { tol_terminal: 1e-10, max_picard: 10, picard_ball: 10.0, cg_tol: 1e-10, cg_max_iter: 500 };
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let local = ControlSetup::new(profile.clone(), 0.0, 0.5, 5e-3)?;
    let u0 = random::smooth_field(&torus, &mut rng, 3, 0.0, 0.0, 1e-2);
    for sign in [1.0, -1.0] {
        let r = fixed_point_control(&SteeringProblem::to_zero(local.clone(), u0.clone(), sign, opts))?;
        println!("sign {sign:+}: {} iterations, miss {:.2e}, increments {:?}", r.iterations, r.terminal_miss, r.increments);
    }

    let global = ControlSetup::new(profile, 1.0, 0.5, 2e-3)?;
    let big = random::smooth_field(&torus, &mut rng, 3, 0.0, 1.0, 1.0);
    let rep = global_drive_to_zero(&global, &big, GlobalOptions { eta: 0.1, max_legs: 40, local_threshold: 0.5, steering: opts })?;
    for (i, leg) in rep.legs.iter().enumerate() {
        println!("leg {i}: energy {:.4e} -> {:.4e} (ratio {:.3})", leg.energy_before, leg.energy_after, leg.ratio);
    }
    println!("final H^s norm {:.2e}", rep.final_norm);
    Ok(())
}
