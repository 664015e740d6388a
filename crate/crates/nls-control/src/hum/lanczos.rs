//! Extreme eigenvalues of the truncated Gramian in the `H^{-s}` geometry.

use super::{re_dot, truncated_modes, ControlSetup};
use crate::error::{Error, Result};
use crate::torus::{random::complex_normal, SpectralField, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Ritz residual tolerance relative to the largest Ritz value.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_iter: 400, tol: 1e-10, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GramianReport {
    pub cutoff: usize,
    /// Real dimension of the truncated space.
    pub dimension: usize,
    /// `min Re⟨SΦ,Φ⟩ / ‖Φ‖²_{H^{-s}}` over the truncated space, `‖·‖_{H^{-s}}`
    /// weighted by `(1+λ)^{-s}`; the observability constant is its inverse.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    /// Ritz residual norms of the two extreme pairs.
    pub residuals: [f64; 2],
    /// `|Φ̂(k)|²` of the minimizer, normalized in `H^{-s}`, per retained mode.
    pub minimizer_profile: Vec<(Vec<i64>, f64)>,
    #[serde(skip)]
    pub minimizer: SpectralField,
}

/// Lanczos with full reorthogonalization on `W^{-1/2} P S P W^{-1/2}`,
/// `W = (1+λ)^{-s}`, `P` the projection onto `max|k_i| ≤ cutoff`. Invariant
/// subspaces are handled by restarting orthogonally, so the iteration reaches the
/// full dimension when needed and then is exact.
pub fn observability_constant(setup: &ControlSetup, cutoff: usize, opts: LanczosOptions) -> Result<GramianReport> {
    let torus = setup.torus().clone();
    let modes = truncated_modes(&torus, Some(cutoff))?;
    let dim = 2 * modes.len();
    let scale: Vec<f64> = modes.iter().map(|&i| setup.weight(torus.lambda(i)).powf(-0.5)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // vectors are stored restricted to `modes`
    let apply = |y: &[C64]| -> Result<Vec<C64>> {
        let mut f = SpectralField::zeros(&torus);
        for ((&i, &w), &c) in modes.iter().zip(&scale).zip(y) {
            f.coeffs_mut()[i] = c * w;
        }
        let sf = setup.gramian_apply(&f)?;
        Ok(modes.iter().zip(&scale).map(|(&i, &w)| sf.coeffs()[i] * w).collect())
    };
    let orthogonalize = |v: &mut Vec<C64>, basis: &[Vec<C64>]| {
        for _ in 0..2 {
            for q in basis {
                let c = re_dot(v, q);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
    };
    let random_unit = |rng: &mut ChaCha8Rng, basis: &[Vec<C64>]| -> Option<Vec<C64>> {
        for _ in 0..4 {
            let mut v: Vec<C64> = (0..modes.len()).map(|_| complex_normal(rng)).collect();
            orthogonalize(&mut v, basis);
            let n = re_dot(&v, &v).sqrt();
            if n > 1e-8 {
                v.iter_mut().for_each(|z| *z /= n);
                return Some(v);
            }
        }
        None
    };
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = random_unit(&mut rng, &basis).ok_or(Error::EmptyRegion)?;
    let mut anorm: f64 = 0.0;
    let ritz = |alpha: &[f64], beta: &[f64]| {
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        SymmetricEigen::new(t)
    };
    loop {
        let mut v = apply(&q)?;
        let a = re_dot(&v, &q);
        alpha.push(a);
        basis.push(q.clone());
        orthogonalize(&mut v, &basis);
        let b = re_dot(&v, &v).sqrt();
        anorm = anorm.max(a.abs()).max(b);
        let m = basis.len();
        let eig = ritz(&alpha, &beta);
        let (imin, imax) = extreme_indices(&eig);
        let res = [b * eig.eigenvectors[(m - 1, imin)].abs(), b * eig.eigenvectors[(m - 1, imax)].abs()];
        let lmax = eig.eigenvalues[imax].abs();
        let converged = m >= 2 && res[0] <= opts.tol * lmax.max(1e-300) && res[1] <= opts.tol * lmax.max(1e-300);
        if m == dim || converged || m >= opts.max_iter {
            if m >= opts.max_iter && !converged && m < dim {
                return Err(Error::IterationCap(opts.max_iter));
            }
            let (res_out, lmin_val, lmax_val) = if m == dim {
                ([0.0, 0.0], eig.eigenvalues[imin], eig.eigenvalues[imax])
            } else {
                (res, eig.eigenvalues[imin], eig.eigenvalues[imax])
            };
            let mut y = vec![C64::new(0.0, 0.0); modes.len()];
            for (j, qj) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(j, imin)];
                y.iter_mut().zip(qj).for_each(|(yi, qi)| *yi += c * qi);
            }
            let mut minimizer = SpectralField::zeros(&torus);
            for ((&i, &w), &c) in modes.iter().zip(&scale).zip(&y) {
                minimizer.coeffs_mut()[i] = c * w;
            }
            let minimizer_profile =
                modes.iter().zip(&y).map(|(&i, c)| (torus.lattice(i), c.norm_sqr())).collect();
            return Ok(GramianReport {
                cutoff,
                dimension: dim,
                lambda_min: lmin_val,
                lambda_max: lmax_val,
                iterations: m,
                residuals: res_out,
                minimizer_profile,
                minimizer,
            });
        }
        if b <= 1e-12 * anorm.max(1e-300) {
            // invariant subspace: continue in its orthogonal complement
            beta.push(0.0);
            q = match random_unit(&mut rng, &basis) {
                Some(v) => v,
                None => return Err(Error::Invariant("Lanczos restart failed".into())),
            };
        } else {
            beta.push(b);
            q = v.iter().map(|z| z / b).collect();
        }
    }
}

fn extreme_indices(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> (usize, usize) {
    let ev = &eig.eigenvalues;
    let mut imin = 0;
    let mut imax = 0;
    for i in 0..ev.len() {
        if ev[i] < ev[imin] {
            imin = i;
        }
        if ev[i] > ev[imax] {
            imax = i;
        }
    }
    (imin, imax)
}
