//! Empirical bilinear and commutator-quadrilinear estimates for free waves on
//! dyadic blocks.

use super::DyadicBlock;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::torus::{planck_step, random::complex_normal, Torus, TorusSpec, C64};
use gauss_quad::legendre::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Lattice modes of one dyadic block.
#[derive(Clone, Debug)]
pub struct BlockData {
    pub block: DyadicBlock,
    pub modes: Vec<Vec<i64>>,
    pub lambdas: Vec<f64>,
}

impl BlockData {
    /// All lattice modes of `spec` (inside its resolution) whose eigenvalue lies in `block`.
    pub fn enumerate(spec: &TorusSpec, block: DyadicBlock) -> Result<Self> {
        let torus = Torus::new(spec.clone())?;
        let mut modes = Vec::new();
        let mut lambdas = Vec::new();
        for idx in 0..torus.len() {
            let lam = torus.lambda(idx);
            if block.contains(lam) {
                modes.push(torus.lattice(idx));
                lambdas.push(lam);
            }
        }
        Ok(BlockData { block, modes, lambdas })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn max_abs(&self) -> i64 {
        self.modes.iter().flatten().map(|k| k.abs()).max().unwrap_or(0)
    }

    fn max_lambda(&self) -> f64 {
        self.lambdas.iter().cloned().fold(0.0, f64::max)
    }

    /// Unit-L² complex Gaussian coefficients.
    pub fn random(&self, rng: &mut ChaCha8Rng) -> Vec<C64> {
        let mut c: Vec<C64> = (0..self.len()).map(|_| complex_normal(rng)).collect();
        normalize(&mut c);
        c
    }
}

fn normalize(c: &mut [C64]) -> f64 {
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn l2(c: &[C64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Physical grid on which products of up to four block functions are integrated
/// exactly: each axis has at least `4·max|k_i| + 1` points.
struct EvalGrid {
    torus: Arc<Torus>,
    /// Grid index of every block mode, per block.
    index: Vec<Vec<usize>>,
}

impl EvalGrid {
    fn new(spec: &TorusSpec, blocks: &[&BlockData]) -> Result<Self> {
        let kmax = blocks.iter().map(|b| b.max_abs()).max().unwrap_or(0) as usize;
        let g = (4 * kmax + 1).next_power_of_two().max(8);
        let torus = Torus::new(TorusSpec::new(spec.periods.clone(), vec![g; spec.dim()])?)?;
        let index = blocks
            .iter()
            .map(|b| b.modes.iter().map(|k| torus.index_of(k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalGrid { torus, index })
    }

    /// Physical values of `e^{itΔ}f` (times the multiplier `mult(λ)`), `f` on block `b`.
    fn wave(&self, b: usize, lambdas: &[f64], c: &[C64], t: f64, mult: impl Fn(f64) -> f64) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.torus.len()];
        for ((&idx, &lam), &ci) in self.index[b].iter().zip(lambdas).zip(c) {
            buf[idx] = ci * C64::from_polar(mult(lam), -lam * t);
        }
        self.torus.inverse(&mut buf);
        buf
    }
}

/// Time quadrature on `[0, T]`.
struct TimeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeRule {
    /// Exact midpoint rule when every block eigenvalue is a multiple of `2π/T`
    /// (integrand `T`-periodic with bounded integer frequency), Gauss–Legendre otherwise.
    /// `omega` bounds the angular frequencies of the integrand.
    fn new(t: f64, lambdas: &[f64], omega: f64) -> Self {
        let periodic = lambdas.iter().all(|&l| {
            let x = l * t / (2.0 * PI);
            (x - x.round()).abs() < 1e-9 * x.abs().max(1.0)
        });
        if periodic {
            let m = (omega * t / (2.0 * PI)).round() as usize + 2;
            let h = t / m as f64;
            TimeRule { nodes: (0..m).map(|j| (j as f64 + 0.5) * h).collect(), weights: vec![h; m] }
        } else {
            let n = (0.6 * omega * t).ceil() as usize + 24;
            let rule = GaussLegendre::new(n.try_into().expect("positive degree"));
            let (nodes, weights) = rule
                .as_node_weight_pairs()
                .iter()
                .map(|&(x, w)| (0.5 * t * (x + 1.0), 0.5 * t * w))
                .unzip();
            TimeRule { nodes, weights }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilinearOptions {
    /// Block sizes `N`; each is paired with the largest one, `L`.
    pub blocks: Vec<u32>,
    pub trials: usize,
    pub t_chi: f64,
    pub seed: u64,
    /// Rounds of alternating power iteration applied to each random start
    /// (0 keeps the raw random data).
    pub refine_rounds: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearRow {
    pub n: u32,
    pub l: u32,
    pub modes_n: usize,
    pub modes_l: usize,
    /// `‖u₁u₂‖_{L²([0,T]×M)} / (‖f₁‖‖f₂‖)` per trial; empty when a block has no modes.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearReport {
    pub rows: Vec<BilinearRow>,
    /// Fit of `log max_ratio` against `log N` over rows with nonempty blocks.
    pub fit: LineFit,
    pub exponent: f64,
    pub constant: f64,
}

impl BilinearReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N1,N2,trial,ratio\n");
        for r in &self.rows {
            for (i, v) in r.ratios.iter().enumerate() {
                s.push_str(&format!("{},{},{},{:.12e}\n", r.n, r.l, i, v));
            }
        }
        s
    }
}

struct Bilinear<'a> {
    grid: &'a EvalGrid,
    rule: TimeRule,
    lambdas: [&'a [f64]; 2],
}

impl Bilinear<'_> {
    /// `∫∫|u₁u₂|²`.
    fn value_sq(&self, c: [&[C64]; 2]) -> f64 {
        let dv = self.grid.torus.cell_volume();
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&t, &w)| {
                let a = self.grid.wave(0, self.lambdas[0], c[0], t, |_| 1.0);
                let b = self.grid.wave(1, self.lambdas[1], c[1], t, |_| 1.0);
                w * dv * a.iter().zip(&b).map(|(x, y)| (x * y).norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// `P_j Σ_m w_m U_m^*(|u_other(t_m)|² U_m f)`: the quadratic form of the value in `f_j`.
    fn apply_form(&self, j: usize, f: &[C64], other: &[C64]) -> Vec<C64> {
        let o = 1 - j;
        let torus = &self.grid.torus;
        let mut acc = vec![C64::new(0.0, 0.0); f.len()];
        for (&t, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let a = self.grid.wave(j, self.lambdas[j], f, t, |_| 1.0);
            let b = self.grid.wave(o, self.lambdas[o], other, t, |_| 1.0);
            let mut prod: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y.norm_sqr()).collect();
            torus.forward(&mut prod);
            for ((acc_k, &idx), &lam) in acc.iter_mut().zip(&self.grid.index[j]).zip(self.lambdas[j]) {
                *acc_k += w * prod[idx] * C64::from_polar(1.0, lam * t);
            }
        }
        acc
    }

    /// Alternating power iteration on the two factors.
    fn refine(&self, c: &mut [Vec<C64>; 2], rounds: usize) {
        for _ in 0..rounds {
            for j in 0..2 {
                for _ in 0..3 {
                    let mut next = self.apply_form(j, &c[j], &c[1 - j]);
                    if normalize(&mut next) == 0.0 {
                        return;
                    }
                    c[j] = next;
                }
            }
        }
    }
}

/// Pairs every block size `N` with the largest one `L` and measures the bilinear
/// ratio on random unit data; the exponent is the slope of `log max ratio` against `log N`.
pub fn bilinear_sweep(spec: &TorusSpec, opts: &BilinearOptions) -> Result<BilinearReport> {
    spec.validate()?;
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    if !(opts.t_chi > 0.0) {
        return Err(Error::InvalidArgument("T_chi must be positive".into()));
    }
    let mut sizes: Vec<u32> = opts.blocks.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let l = *sizes.last().ok_or_else(|| Error::DegenerateFit("no block sizes".into()))?;
    let big = BlockData::enumerate(spec, DyadicBlock::new(l)?)?;
    let check_fit = |b: &BlockData| -> Result<()> {
        // the lattice must hold the block with room for the dealiased product
        for k in &b.modes {
            for (ki, &ni) in k.iter().zip(&spec.resolution) {
                if ki.unsigned_abs() as usize >= ni / 2 {
                    return Err(Error::InvalidArgument(format!("block {} touches the grid edge", b.block.n)));
                }
            }
        }
        Ok(())
    };
    check_fit(&big)?;
    let mut rows = Vec::new();
    for (pair_id, &n) in sizes.iter().enumerate() {
        let small = BlockData::enumerate(spec, DyadicBlock::new(n)?)?;
        check_fit(&small)?;
        let ratios = if small.is_empty() || big.is_empty() {
            Vec::new()
        } else {
            let grid = EvalGrid::new(spec, &[&small, &big])?;
            let lams: Vec<f64> = small.lambdas.iter().chain(&big.lambdas).cloned().collect();
            let omega = 2.0 * (small.max_lambda() + big.max_lambda());
            let bl = Bilinear {
                grid: &grid,
                rule: TimeRule::new(opts.t_chi, &lams, omega),
                lambdas: [&small.lambdas, &big.lambdas],
            };
            (0..opts.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = cell_rng(opts.seed, pair_id, trial);
                    let mut c = [small.random(&mut rng), big.random(&mut rng)];
                    bl.refine(&mut c, opts.refine_rounds);
                    bl.value_sq([&c[0], &c[1]]).sqrt() / (l2(&c[0]) * l2(&c[1]))
                })
                .collect()
        };
        let max_ratio = ratios.iter().cloned().reduce(f64::max);
        rows.push(BilinearRow { n, l, modes_n: small.len(), modes_l: big.len(), ratios, max_ratio });
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| r.max_ratio.map(|m| (r.n as f64, m))).unzip();
    let fit = loglog_fit(&x, &y)?;
    Ok(BilinearReport { exponent: fit.slope, constant: fit.intercept.exp(), fit, rows })
}

/// Deterministic per-cell generator, independent of scheduling.
fn cell_rng(seed: u64, cell: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadOptions {
    /// Block quadruples `(N₁, N₂, N₃, N₄)`.
    pub quadruples: Vec<[u32; 4]>,
    pub eps: f64,
    /// Which of `u₁..u₄` enter conjugated.
    pub conj_mask: [bool; 4],
    pub trials: usize,
    /// Support `[0, T_χ]` of the Planck window `χ`.
    pub t_chi: f64,
    /// Ramp fraction of `χ`.
    pub ramp: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadRow {
    pub blocks: [u32; 4],
    /// Product of the two smallest block sizes.
    pub m: f64,
    /// `sup_τ |I(τ)| / ((N₁^ε + N₂^ε) Π‖f_j‖)` per trial.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadReport {
    pub rows: Vec<QuadRow>,
    /// Fit of `log max_ratio` against `log m`; `None` when fewer than two distinct
    /// `m` carry positive ratios.
    pub fit: Option<LineFit>,
}

impl QuadReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N1,N2,N3,N4,trial,ratio\n");
        for r in &self.rows {
            for (i, v) in r.ratios.iter().enumerate() {
                let b = r.blocks;
                s.push_str(&format!("{},{},{},{},{},{:.12e}\n", b[0], b[1], b[2], b[3], i, v));
            }
        }
        s
    }
}

/// The window `χ`.
fn chi(t: f64, t_chi: f64, ramp: f64) -> f64 {
    let w = ramp * t_chi;
    planck_step(t / w) * planck_step((t_chi - t) / w)
}

/// Context for evaluating `I(τ) = ∫∫ χ e^{itτ} v₁v₂((-Δ)^{ε/2}v₃·v₄ - v₃·(-Δ)^{ε/2}v₄)`,
/// `v_j = u_j` or `ū_j`.
struct Quad<'a> {
    grid: EvalGrid,
    blocks: [&'a BlockData; 4],
    eps: f64,
    conj: [bool; 4],
    t_chi: f64,
    ramp: f64,
}

impl Quad<'_> {
    fn samples(&self) -> usize {
        let omega: f64 = self.blocks.iter().map(|b| b.max_lambda()).sum();
        // twice the Nyquist rate of the integrand
        ((2.0 * omega * self.t_chi / PI).ceil() as usize).max(256)
    }

    /// `(τ grid, I(τ))` from the trapezoid rule on uniform samples with zero padding.
    fn transform(&self, c: [&[C64]; 4]) -> (Vec<f64>, Vec<C64>) {
        let m = self.samples();
        let h = self.t_chi / m as f64;
        let dv = self.grid.torus.cell_volume();
        let eps = self.eps;
        let pad = (super::TIME_PADDING * (m + 1)).next_power_of_two();
        let mut buf = vec![C64::new(0.0, 0.0); pad];
        // χ vanishes at both ends, so the trapezoid rule is the plain sum
        for (j, slot) in buf.iter_mut().enumerate().take(m).skip(1) {
            let t = j as f64 * h;
            let w = chi(t, self.t_chi, self.ramp);
            if w == 0.0 {
                continue;
            }
            let mut v: Vec<Vec<C64>> = (0..4)
                .map(|i| self.grid.wave(i, &self.blocks[i].lambdas, c[i], t, |_| 1.0))
                .collect();
            let mut d3 = self.grid.wave(2, &self.blocks[2].lambdas, c[2], t, |l| l.powf(0.5 * eps));
            let mut d4 = self.grid.wave(3, &self.blocks[3].lambdas, c[3], t, |l| l.powf(0.5 * eps));
            for (i, vi) in v.iter_mut().enumerate() {
                if self.conj[i] {
                    vi.iter_mut().for_each(|z| *z = z.conj());
                }
            }
            if self.conj[2] {
                d3.iter_mut().for_each(|z| *z = z.conj());
            }
            if self.conj[3] {
                d4.iter_mut().for_each(|z| *z = z.conj());
            }
            let f: C64 = (0..v[0].len())
                .map(|x| v[0][x] * v[1][x] * (d3[x] * v[3][x] - v[2][x] * d4[x]))
                .sum::<C64>()
                * dv;
            *slot = f * (w * h);
        }
        // I(τ_m) = Σ_j a_j e^{i t_j τ_m}, τ_m = 2πm/(P h)
        FftPlanner::new().plan_fft_inverse(pad).process(&mut buf);
        let taus = (0..pad)
            .map(|j| {
                let ms = if j < pad / 2 { j as f64 } else { j as f64 - pad as f64 };
                2.0 * PI * ms / (pad as f64 * h)
            })
            .collect();
        (taus, buf)
    }

    fn sup(&self, c: [&[C64]; 4]) -> (f64, f64) {
        let (taus, vals) = self.transform(c);
        vals.iter().zip(&taus).fold((0.0, 0.0), |(best, arg), (v, &tau)| {
            if v.norm() > best {
                (v.norm(), tau)
            } else {
                (best, arg)
            }
        })
    }
}

/// `sup_τ |I(τ)|` and its maximizing `τ` on the padded dual grid, for given block
/// coefficients (in the mode order of each `BlockData`).
pub fn quadrilinear_value(
    spec: &TorusSpec,
    blocks: [&BlockData; 4],
    coeffs: [&[C64]; 4],
    eps: f64,
    conj_mask: [bool; 4],
    t_chi: f64,
    ramp: f64,
) -> Result<(f64, f64)> {
    let q = Quad { grid: EvalGrid::new(spec, &blocks)?, blocks, eps, conj: conj_mask, t_chi, ramp };
    Ok(q.sup(coeffs))
}

/// `I(τ)` on the padded dual grid, as `(τ, I(τ))` samples.
pub fn quadrilinear_transform(
    spec: &TorusSpec,
    blocks: [&BlockData; 4],
    coeffs: [&[C64]; 4],
    eps: f64,
    conj_mask: [bool; 4],
    t_chi: f64,
    ramp: f64,
) -> Result<(Vec<f64>, Vec<C64>)> {
    let q = Quad { grid: EvalGrid::new(spec, &blocks)?, blocks, eps, conj: conj_mask, t_chi, ramp };
    Ok(q.transform(coeffs))
}

/// `I(τ)` as an explicit sum over mode quadruples with `Σ ±k_j = 0`; the time factor
/// `∫χ(t)e^{iωt}dt` by high-order Gauss–Legendre quadrature.
pub fn brute_quadrilinear(
    spec: &TorusSpec,
    blocks: [&BlockData; 4],
    coeffs: [&[C64]; 4],
    eps: f64,
    conj_mask: [bool; 4],
    t_chi: f64,
    ramp: f64,
    tau: f64,
) -> C64 {
    let vol = spec.volume();
    let omega: f64 = blocks.iter().map(|b| b.max_lambda()).sum::<f64>() + tau.abs();
    let n = (omega * t_chi).ceil() as usize + 400;
    let rule = GaussLegendre::new(n.try_into().expect("positive degree"));
    let chi_hat = |w: f64| -> C64 {
        rule.as_node_weight_pairs()
            .iter()
            .map(|&(x, q)| {
                let t = 0.5 * t_chi * (x + 1.0);
                C64::from_polar(0.5 * t_chi * q * chi(t, t_chi, ramp), w * t)
            })
            .sum()
    };
    let sign = |j: usize| if conj_mask[j] { -1i64 } else { 1 };
    let value = |j: usize, i: usize| -> (C64, f64) {
        let c = coeffs[j][i];
        let l = blocks[j].lambdas[i];
        // conjugation flips the mode and the sign of the frequency
        if conj_mask[j] {
            (c.conj(), -l)
        } else {
            (c, l)
        }
    };
    let d = spec.dim();
    let mut total = C64::new(0.0, 0.0);
    for i1 in 0..blocks[0].len() {
        for i2 in 0..blocks[1].len() {
            for i3 in 0..blocks[2].len() {
                for i4 in 0..blocks[3].len() {
                    let zero = (0..d).all(|a| {
                        sign(0) * blocks[0].modes[i1][a]
                            + sign(1) * blocks[1].modes[i2][a]
                            + sign(2) * blocks[2].modes[i3][a]
                            + sign(3) * blocks[3].modes[i4][a]
                            == 0
                    });
                    if !zero {
                        continue;
                    }
                    let (c1, l1) = value(0, i1);
                    let (c2, l2) = value(1, i2);
                    let (c3, l3) = value(2, i3);
                    let (c4, l4) = value(3, i4);
                    let comm = blocks[2].lambdas[i3].powf(0.5 * eps) - blocks[3].lambdas[i4].powf(0.5 * eps);
                    if comm == 0.0 {
                        continue;
                    }
                    total += c1 * c2 * c3 * c4 * comm * chi_hat(tau - (l1 + l2 + l3 + l4)) / vol;
                }
            }
        }
    }
    total
}

/// Random-data sweep of the commutator estimate, normalized by `(N₁^ε + N₂^ε)` and the
/// data norms; the exponent is fitted against the product of the two smallest blocks.
pub fn commutator_quadrilinear_sweep(spec: &TorusSpec, opts: &QuadOptions) -> Result<QuadReport> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&opts.eps) {
        return Err(Error::InvalidArgument(format!("ε must lie in [0, 1], got {}", opts.eps)));
    }
    if opts.trials == 0 || opts.quadruples.is_empty() {
        return Err(Error::InvalidArgument("need at least one quadruple and one trial".into()));
    }
    let mut rows = Vec::new();
    for (cell, q) in opts.quadruples.iter().enumerate() {
        let data: Vec<BlockData> =
            q.iter().map(|&n| BlockData::enumerate(spec, DyadicBlock::new(n)?)).collect::<Result<_>>()?;
        let mut sorted = *q;
        sorted.sort_unstable();
        let m = sorted[0] as f64 * sorted[1] as f64;
        let ratios: Vec<f64> = if data.iter().any(|b| b.is_empty()) {
            Vec::new()
        } else {
            let blocks = [&data[0], &data[1], &data[2], &data[3]];
            let quad = Quad {
                grid: EvalGrid::new(spec, &blocks)?,
                blocks,
                eps: opts.eps,
                conj: opts.conj_mask,
                t_chi: opts.t_chi,
                ramp: opts.ramp,
            };
            let norm = (q[0] as f64).powf(opts.eps) + (q[1] as f64).powf(opts.eps);
            (0..opts.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = cell_rng(opts.seed, cell, trial);
                    let c: Vec<Vec<C64>> = blocks.iter().map(|b| b.random(&mut rng)).collect();
                    let (sup, _) = quad.sup([&c[0], &c[1], &c[2], &c[3]]);
                    sup / norm
                })
                .collect()
        };
        let max_ratio = ratios.iter().cloned().reduce(f64::max);
        rows.push(QuadRow { blocks: *q, m, ratios, max_ratio });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.max_ratio.filter(|&v| v > 0.0).map(|v| (r.m, v)))
        .unzip();
    let fit = loglog_fit(&x, &y).ok();
    Ok(QuadReport { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, n: usize) -> TorusSpec {
        TorusSpec::cube(d, 1.0, n).unwrap()
    }

    #[test]
    fn block_enumeration_unit_circle() {
        let s = spec(1, 32);
        let b4 = BlockData::enumerate(&s, DyadicBlock::new(4).unwrap()).unwrap();
        assert_eq!(b4.modes, vec![vec![1], vec![-1]]);
        assert!(BlockData::enumerate(&s, DyadicBlock::new(2).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn bilinear_single_pair_and_phase_invariance() {
        let s = spec(1, 32);
        let opts = BilinearOptions { blocks: vec![4], trials: 1, t_chi: 1.0, seed: 1, refine_rounds: 0 };
        let r = bilinear_sweep(&s, &opts);
        // a single block size cannot be fitted
        assert!(matches!(r, Err(Error::DegenerateFit(_))));
        let small = BlockData::enumerate(&s, DyadicBlock::new(4).unwrap()).unwrap();
        let big = BlockData::enumerate(&s, DyadicBlock::new(16).unwrap()).unwrap();
        let grid = EvalGrid::new(&s, &[&small, &big]).unwrap();
        let lams: Vec<f64> = small.lambdas.iter().chain(&big.lambdas).cloned().collect();
        let bl = Bilinear {
            grid: &grid,
            rule: TimeRule::new(1.0, &lams, 2.0 * (small.max_lambda() + big.max_lambda())),
            lambdas: [&small.lambdas, &big.lambdas],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = small.random(&mut rng);
        let b = big.random(&mut rng);
        let v = bl.value_sq([&a, &b]);
        assert!(v > 0.0 && v.is_finite());
        let rot: Vec<C64> = a.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        assert!((bl.value_sq([&rot, &b]) - v).abs() < 1e-12 * v);
    }

    #[test]
    fn bilinear_matches_mode_sum() {
        // d = 1: ∫∫|u₁u₂|² as an explicit sum with exact time integrals
        let s = TorusSpec::cube(1, 1.3, 32).unwrap();
        let small = BlockData::enumerate(&s, DyadicBlock::new(4).unwrap()).unwrap();
        let big = BlockData::enumerate(&s, DyadicBlock::new(8).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = small.random(&mut rng);
        let b = big.random(&mut rng);
        let t = 0.37;
        let grid = EvalGrid::new(&s, &[&small, &big]).unwrap();
        let lams: Vec<f64> = small.lambdas.iter().chain(&big.lambdas).cloned().collect();
        let bl = Bilinear {
            grid: &grid,
            rule: TimeRule::new(t, &lams, 2.0 * (small.max_lambda() + big.max_lambda())),
            lambdas: [&small.lambdas, &big.lambdas],
        };
        let got = bl.value_sq([&a, &b]);
        // u₁u₂ = Σ a_i b_j e^{-i(λ_i+μ_j)t} e^{2πi(k_i+l_j)x/θ}/vol
        let vol = s.volume();
        let mut groups: std::collections::BTreeMap<i64, Vec<(C64, f64)>> = Default::default();
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                let k = small.modes[i][0] + big.modes[j][0];
                groups.entry(k).or_default().push((ai * bj, small.lambdas[i] + big.lambdas[j]));
            }
        }
        let mut want = 0.0;
        for terms in groups.values() {
            for (c1, w1) in terms {
                for (c2, w2) in terms {
                    let dw = w2 - w1;
                    let time = if dw.abs() < 1e-12 {
                        C64::new(t, 0.0)
                    } else {
                        (C64::from_polar(1.0, dw * t) - 1.0) / C64::new(0.0, dw)
                    };
                    want += (c1 * c2.conj() * time).re / vol;
                }
            }
        }
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn refinement_increases_ratio() {
        let s = spec(1, 64);
        let small = BlockData::enumerate(&s, DyadicBlock::new(8).unwrap()).unwrap();
        let big = BlockData::enumerate(&s, DyadicBlock::new(32).unwrap()).unwrap();
        let grid = EvalGrid::new(&s, &[&small, &big]).unwrap();
        let lams: Vec<f64> = small.lambdas.iter().chain(&big.lambdas).cloned().collect();
        let bl = Bilinear {
            grid: &grid,
            rule: TimeRule::new(1.0 / (2.0 * PI), &lams, 2.0 * (small.max_lambda() + big.max_lambda())),
            lambdas: [&small.lambdas, &big.lambdas],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = [small.random(&mut rng), big.random(&mut rng)];
        let before = bl.value_sq([&c[0], &c[1]]);
        bl.refine(&mut c, 2);
        assert!(bl.value_sq([&c[0], &c[1]]) >= before * (1.0 - 1e-12));
    }

    #[test]
    fn commutator_vanishes_at_eps_zero() {
        let s = spec(1, 32);
        let opts = QuadOptions {
            quadruples: vec![[4, 4, 8, 8], [4, 8, 8, 16]],
            eps: 0.0,
            conj_mask: [false, true, false, true],
            trials: 3,
            t_chi: 0.5,
            ramp: 0.25,
            seed: 2,
        };
        let r = commutator_quadrilinear_sweep(&s, &opts).unwrap();
        assert!(r.rows.iter().all(|row| row.ratios.iter().all(|&v| v == 0.0)));
        assert!(r.fit.is_none());
    }

    #[test]
    fn quadrilinear_matches_brute_force() {
        for (d, masks) in [(1usize, [false, true, false, true]), (3, [false, false, true, true]), (1, [false; 4])] {
            let s = spec(d, 16);
            let b1 = BlockData::enumerate(&s, DyadicBlock::new(1).unwrap()).unwrap();
            let b4 = BlockData::enumerate(&s, DyadicBlock::new(4).unwrap()).unwrap();
            let b8 = BlockData::enumerate(&s, DyadicBlock::new(8).unwrap()).unwrap();
            // the commutator needs |k₃| ≠ |k₄|
            let blocks = [&b4, &b1, &b4, &b8];
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let c: Vec<Vec<C64>> = blocks.iter().map(|b| b.random(&mut rng)).collect();
            let cs = [&c[0][..], &c[1][..], &c[2][..], &c[3][..]];
            let q = Quad { grid: EvalGrid::new(&s, &blocks).unwrap(), blocks, eps: 1.0, conj: masks, t_chi: 1.0, ramp: 0.3 };
            let (taus, vals) = q.transform(cs);
            let (sup, _) = q.sup(cs);
            assert!(sup > 1e-6, "degenerate instance");
            for j in [0usize, 3, 17, taus.len() - 5] {
                let brute = brute_quadrilinear(&s, blocks, cs, 1.0, masks, 1.0, 0.3, taus[j]);
                assert!((brute - vals[j]).norm() < 1e-10 * sup.max(1.0), "d={d} j={j}: {brute} vs {}", vals[j]);
            }
        }
    }
}
