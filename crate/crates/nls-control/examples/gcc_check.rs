//! Geometric control on T³ for slab unions, and the band around the equator of S³.

use nls_control::gcc::{simulate_entry, sphere_band_check, torus_gcc_check, GccSampling};
use nls_control::torus::{OmegaDesc, Slab, TorusSpec};

fn main() -> nls_control::Result<()> {
    let spec = TorusSpec::cube(3, 1.0, 8)?;
    let sampling = GccSampling { directions: 200, offsets: 20, seed: 3 };

    let faces = OmegaDesc::Slabs { slabs: (0..3).map(|i| Slab::new(i, 0.0, 0.1)).collect() };
    let v = torus_gcc_check(&spec, &faces, 10.0, sampling)?;
    println!("faces: satisfied {}, T0 ~ {:.4} over {} rays", v.satisfied, v.t0_estimate, v.rays_checked);

    let single = OmegaDesc::Slabs { slabs: vec![Slab::new(0, 0.0, 0.1)] };
    let v = torus_gcc_check(&spec, &single, 10.0, sampling)?;
    if let Some(w) = &v.witness {
        let hit = simulate_entry(&spec, &single, w, 10.0, 1e-3)?;
        println!("single slab: witness from {:?} along {:?}, marched entry {hit:?}", w.position, w.direction);
    }

    let s = sphere_band_check(0.1, 10_000, 7)?;
    println!("S3 band: {}/{} circles enter, sampled sup {:.4}, sharp T0 {:.4}", s.entered_within_pi, s.circles, s.t0_sampled, s.t0);
    Ok(())
}
