//! Empirical bilinear estimate on dyadic blocks of T¹, with the fitted exponent.

use nls_control::torus::TorusSpec;
use nls_control::xsb::{bilinear_sweep, BilinearOptions};

fn main() -> nls_control::Result<()> {
    let spec = TorusSpec::cube(1, 1.0, 256)?;
    let opts = BilinearOptions {
        blocks: vec![4, 8, 16, 32, 64],
        trials: 8,
        t_chi: 1.0 / (2.0 * std::f64::consts::PI),
        seed: 1,
        refine_rounds: 2,
    };
    let rep = bilinear_sweep(&spec, &opts)?;
    print!("{}", rep.to_csv());
    println!("fitted exponent {:.3}", rep.exponent);
    Ok(())
}
