//! Gain of a power of `T` for the truncated time integral `F(t) = Ψ(t/T)∫₀ᵗ f`.
//!
//! Signals are taken at the natural scale of the interval, `f_T(t) = h(t/T)` with
//! `h` a random smooth mean-zero profile supported in `[0, 1]`. Then
//! `F(t) = T·G(t/T)` with `G = Ψ·∫₀^s h`, and both norms reduce to weighted
//! integrals of `|Ĝ(σ)|²`, `|ĥ(σ)|²` with weights `⟨σ/T⟩^{2b}`, `⟨σ/T⟩^{-2b'}`:
//!
//! `‖F‖²_{H^b} / ‖f_T‖²_{H^{-b'}} = T² ∫⟨σ/T⟩^{2b}|Ĝ|² / ∫⟨σ/T⟩^{-2b'}|ĥ|²`.

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::torus::{japanese, planck_step, random::complex_normal, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Length of the periodic box holding the profiles (zero padding for the transform).
const BOX: f64 = 160.0;
const SAMPLES: usize = 1 << 16;
/// Box origin: profiles live in `[-2, 3]`.
const ORIGIN: f64 = -4.0;

/// `Ψ = 1` on `[-1, 2]`, zero outside `[-2, 3]`.
fn psi(s: f64) -> f64 {
    planck_step(s + 2.0) * planck_step(3.0 - s)
}

/// Random profile `h(s) = χ(s)·Σ_j (a_j cos 2πjs + b_j sin 2πjs)` on `[0, 1]`, with the
/// mean removed by a multiple of `χ`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub coeffs: Vec<(f64, f64)>,
}

impl Profile {
    pub fn random(rng: &mut ChaCha8Rng, modes: usize) -> Self {
        Profile { coeffs: (0..modes).map(|_| { let z = complex_normal(rng); (z.re, z.im) }).collect() }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&(a, b)| a == 0.0 && b == 0.0)
    }

    fn raw(&self, s: f64) -> f64 {
        let bump = planck_step(4.0 * s) * planck_step(4.0 * (1.0 - s));
        let osc: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                let w = 2.0 * PI * (j + 1) as f64 * s;
                a * w.cos() + b * w.sin()
            })
            .sum();
        bump * osc
    }
}

struct Spectra {
    sigma: Vec<f64>,
    h2: Vec<f64>,
    g2: Vec<f64>,
}

fn spectra(p: &Profile) -> Spectra {
    let ds = BOX / SAMPLES as f64;
    let s: Vec<f64> = (0..SAMPLES).map(|j| ORIGIN + j as f64 * ds).collect();
    let raw: Vec<f64> = s.iter().map(|&x| p.raw(x)).collect();
    let bump: Vec<f64> = s.iter().map(|&x| planck_step(4.0 * x) * planck_step(4.0 * (1.0 - x))).collect();
    let mean = raw.iter().sum::<f64>() / bump.iter().sum::<f64>();
    let h: Vec<f64> = raw.iter().zip(&bump).map(|(r, b)| r - mean * b).collect();
    // running integral by the trapezoid rule
    let mut acc = 0.0;
    let mut g = Vec::with_capacity(SAMPLES);
    for j in 0..SAMPLES {
        if j > 0 {
            acc += 0.5 * ds * (h[j - 1] + h[j]);
        }
        g.push(psi(s[j]) * acc);
    }
    let fft = FftPlanner::new().plan_fft_forward(SAMPLES);
    let mut hc: Vec<C64> = h.iter().map(|&v| C64::new(v * ds, 0.0)).collect();
    let mut gc: Vec<C64> = g.iter().map(|&v| C64::new(v * ds, 0.0)).collect();
    fft.process(&mut hc);
    fft.process(&mut gc);
    let sigma = (0..SAMPLES)
        .map(|j| {
            let m = if j < SAMPLES / 2 { j as f64 } else { j as f64 - SAMPLES as f64 };
            2.0 * PI * m / BOX
        })
        .collect();
    Spectra { sigma, h2: hc.iter().map(|z| z.norm_sqr()).collect(), g2: gc.iter().map(|z| z.norm_sqr()).collect() }
}

fn ratio_from(sp: &Spectra, b: f64, bp: f64, t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&s, &h2), &g2) in sp.sigma.iter().zip(&sp.h2).zip(&sp.g2) {
        let w = japanese(s / t);
        num += w.powf(2.0 * b) * g2;
        den += w.powf(-2.0 * bp) * h2;
    }
    if den == 0.0 {
        0.0
    } else {
        t * (num / den).sqrt()
    }
}

/// `‖F‖_{H^b} / ‖f_T‖_{H^{-b'}}` for one profile; 0 for the zero profile.
pub fn duhamel_ratio(profile: &Profile, b: f64, b_prime: f64, t: f64) -> f64 {
    if profile.is_zero() {
        return 0.0;
    }
    ratio_from(&spectra(profile), b, b_prime, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct DuhamelReport {
    pub t_list: Vec<f64>,
    /// Ratios per trial, one entry per `T`.
    pub ratios: Vec<Vec<f64>>,
    /// Geometric mean of the ratios over trials, per `T`.
    pub mean_ratio: Vec<f64>,
    pub fit: LineFit,
    /// The exponent `1 - b - b'` of the estimate.
    pub predicted: f64,
}

pub fn duhamel_gain_fit(b: f64, b_prime: f64, t_list: &[f64], trials: usize, seed: u64) -> Result<DuhamelReport> {
    if t_list.is_empty() {
        return Err(Error::InvalidArgument("empty list of intervals".into()));
    }
    if !(0.0 < b_prime && b_prime < 0.5 && 0.5 < b && b + b_prime <= 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < b' < 1/2 < b, b + b' ≤ 1; got b = {b}, b' = {b_prime}")));
    }
    if t_list.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidArgument("interval lengths must lie in (0, 1]".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let p = Profile::random(&mut rng, 6);
        let sp = spectra(&p);
        ratios.push(t_list.iter().map(|&t| ratio_from(&sp, b, b_prime, t)).collect::<Vec<f64>>());
    }
    let mean_ratio: Vec<f64> = (0..t_list.len())
        .map(|i| {
            let logs: Vec<f64> = ratios.iter().map(|r| r[i]).filter(|&v| v > 0.0).map(f64::ln).collect();
            (logs.iter().sum::<f64>() / logs.len() as f64).exp()
        })
        .collect();
    let fit = loglog_fit(t_list, &mean_ratio)?;
    Ok(DuhamelReport { t_list: t_list.to_vec(), ratios, mean_ratio, fit, predicted: 1.0 - b - b_prime })
}
