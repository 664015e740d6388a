//! Writing and reading binary trajectories with JSON sidecars.

use nls_control::evolution::{solve, EvolutionProblem, Kind};
use nls_control::io;
use nls_control::torus::{random, Torus, TorusSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let torus = Torus::new(TorusSpec::new(vec![1.0, 2f64.sqrt()], vec![16, 16])?)?;
    let u0 = random::smooth_field(&torus, &mut ChaCha8Rng::seed_from_u64(4), 3, 0.0, 1.0, 1.0);
    let traj = solve(&EvolutionProblem::new(Kind::Nonlinear { sign: -1.0, alpha: 0.0, beta: 1.0 }, u0, 0.1, 1e-3))?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("focusing.nlst");
    io::write_trajectory(&path, &traj, &serde_json::json!({ "sign": -1.0, "t_final": 0.1 }))?;
    let back = io::read_trajectory(&path)?;
    println!("{} slices, {} bytes", back.len(), std::fs::metadata(&path)?.len());
    println!("sidecar: {}", std::fs::read_to_string(io::sidecar_path(&path))?);
    assert_eq!(back.last().coeffs(), traj.last().coeffs());
    Ok(())
}
