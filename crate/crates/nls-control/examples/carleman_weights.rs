//! Pseudoconvexity margins and the calibrated weighted-inequality ratios.

use nls_control::carleman::{euclidean_region, pseudoconvexity_margin, sphere_region, Harness, Psi};

fn main() -> nls_control::Result<()> {
    let quad = Psi::Quadratic { dim: 3, c: 0.5, radius: 0.5 };
    let m = pseudoconvexity_margin(&quad, &euclidean_region(3, 0.5, 11, 0.0))?;
    println!("|x|^2 + C: margin {} over {} points", m.margin, m.points);
    let m = pseudoconvexity_margin(&Psi::SphereHeight { c: 3.0 }, &sphere_region(-0.5, 12))?;
    println!("sphere height below x4 = -1/2: margin {:.4}", m.margin);

    let h = Harness::default();
    let cal = h.calibrate(&[1, 2], &[4.0, 8.0, 16.0, 32.0])?;
    for (s, r) in cal.s_list.iter().zip(&cal.max_by_s) {
        println!("s = {s:>4}  max ratio {r:.4e}");
    }
    println!("held-out / fitted constant: {:.3}", h.held_out(&cal, &[11, 12])?);
    Ok(())
}
