//! Concentrating harmonics on S³: normalization, decay away from the great
//! circle, and the observability defect of a band.

use nls_control::sphere::{concentration_decay, eigenvalue, harmonic_norms, observability_defect, BandProfile};

fn main() -> nls_control::Result<()> {
    let ns: Vec<u64> = (4..=8).map(|k| 1u64 << k).collect();
    for &n in &ns {
        let h = harmonic_norms(n, 1.0)?;
        println!("n = {n:>3}  lambda = {:>6}  c_n = {:.4e}", eigenvalue(n), h.c_n);
    }
    let rep = concentration_decay(BandProfile::new(0.5, 0.02)?, &ns, 1.0)?;
    println!("concentration slope {:.4} (predicted {:.4})", rep.fit.slope, rep.predicted_slope);
    let band = BandProfile::new(0.3, 0.02)?;
    for n in [16, 32, 64, 128] {
        println!("n = {n:>3}  defect ratio {:.3e}", observability_defect(band, n, 1.0)?.ratio);
    }
    Ok(())
}
