//! Fractional triangle inequality on a lattice and conic point counts.

use nls_control::xsb::{frac_power_triangle, gauss_count, gauss_count_hashed, gauss_growth};

fn main() -> nls_control::Result<()> {
    let periods = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let c = frac_power_triangle(0.3, &[5, -2, 7], &[1, 4, -3], &periods)?;
    println!("triangle: lhs {:.4} <= rhs {:.4}: {}", c.lhs, c.rhs, c.ok);

    for m in [800, 1105, 1625, 2125] {
        println!("M = {m:>4}: count {} (divisor sum {})", gauss_count(m, 20, 1)?, gauss_count_hashed(m, 20, 1)?);
    }
    let g = gauss_growth(&[8, 16, 32, 64, 128], 5 * 128 * 128, 1)?;
    println!("max counts {:?}, growth exponent {:.3}", g.max_count, g.fit.slope);
    Ok(())
}
