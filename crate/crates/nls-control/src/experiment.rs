//! Named experiments driven by TOML configs.
//!
//! A config names one experiment, a seed, optional geometry blocks and exactly
//! one parameter section matching the experiment. Every run writes into its
//! own directory: `config.toml` (normalized echo), `schema.json`, `summary.json`
//! and experiment-specific CSV tables and binary checkpoints. Nothing in the
//! artifacts depends on timing or thread count.

use crate::carleman::{self, Harness, Psi, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::evolution::{decay_ledger, energy, solve, EvolutionProblem, Kind};
use crate::gcc::{self, GccSampling};
use crate::hum::{self, CgOptions, ControlSetup, DenseGramian, LanczosOptions};
use crate::io;
use crate::sphere::{self, BandProfile};
use crate::steering::{self, GlobalOptions, SteeringOptions, SteeringProblem};
use crate::torus::{build_cutoff, random, DampingProfile, OmegaDesc, Slab, SpectralField, Torus, TorusSpec};
use crate::xsb::{self, BilinearOptions, QuadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "NLSCTL_OUTPUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Decay,
    Hum,
    Steer,
    GlobalSteer,
    Bilinear,
    Quadrilinear,
    Gcc,
    Sphere,
    Carleman,
    Norms,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Decay,
        ExperimentKind::Hum,
        ExperimentKind::Steer,
        ExperimentKind::GlobalSteer,
        ExperimentKind::Bilinear,
        ExperimentKind::Quadrilinear,
        ExperimentKind::Gcc,
        ExperimentKind::Sphere,
        ExperimentKind::Carleman,
        ExperimentKind::Norms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Decay => "decay",
            ExperimentKind::Hum => "hum",
            ExperimentKind::Steer => "steer",
            ExperimentKind::GlobalSteer => "global_steer",
            ExperimentKind::Bilinear => "bilinear",
            ExperimentKind::Quadrilinear => "quadrilinear",
            ExperimentKind::Gcc => "gcc",
            ExperimentKind::Sphere => "sphere",
            ExperimentKind::Carleman => "carleman",
            ExperimentKind::Norms => "norms",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Decay => "damped cubic NLS: energy ledger and fitted decay rate",
            ExperimentKind::Hum => "linear control by the Gramian: CG solve, dense oracle, observability constants",
            ExperimentKind::Steer => "nonlinear local steering by Picard iteration (local, low_mode, two_point)",
            ExperimentKind::GlobalSteer => "energy-shrinking legs followed by a final steer to zero",
            ExperimentKind::Bilinear => "bilinear Strichartz ratios on dyadic blocks and fitted exponent",
            ExperimentKind::Quadrilinear => "commutator quadrilinear ratios and fitted exponent",
            ExperimentKind::Gcc => "straight-line flow against a slab union, and the S3 band",
            ExperimentKind::Sphere => "concentrating S3 harmonics: norms, concentration decay, observability defect",
            ExperimentKind::Carleman => "pseudoconvexity margins and calibrated weighted-inequality ratios",
            ExperimentKind::Norms => "lattice lemmas: fractional triangle inequality and conic point counts",
        }
    }

    fn section(self) -> &'static str {
        self.name()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusBlock {
    pub periods: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabBlock {
    pub axis: usize,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaBlock {
    /// One slab per axis centered at 0.
    Faces { half_width: f64 },
    Slabs { slabs: Vec<SlabBlock> },
    None,
    Whole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    pub alpha: f64,
    pub beta: f64,
    pub t_final: f64,
    pub dt: f64,
    pub samples: usize,
    pub h1_norm: f64,
    pub max_mode: i64,
    /// Repeat every run at `dt/2` and report the relative change of the rate.
    pub dt_halving: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumParams {
    pub s: f64,
    pub t_final: f64,
    pub dt: f64,
    pub target_modes: i64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub terminal_tol: f64,
    pub dense_check: bool,
    pub symmetry_pairs: usize,
    pub cutoffs: Vec<usize>,
    pub lanczos_tol: f64,
    pub lanczos_max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteerVariant {
    Local,
    LowMode,
    TwoPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerParams {
    pub variant: SteerVariant,
    pub s: f64,
    pub t_final: f64,
    pub dt: f64,
    /// `+1` defocusing, `-1` focusing.
    pub sign: f64,
    /// `H^s` size of the initial datum (of the perturbation for `low_mode`).
    pub u0_norm: f64,
    pub max_mode: i64,
    /// `H¹` size of the reference datum; 0 steers around `w ≡ 0`.
    pub reference_h1: f64,
    pub tol_terminal: f64,
    pub max_picard: usize,
    pub picard_ball: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// `low_mode`: perturbation wavenumber, cutoff `N` and `ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_mode: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_eps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalSteerParams {
    pub s: f64,
    pub t_final: f64,
    pub dt: f64,
    pub u0_h1: f64,
    pub max_mode: i64,
    pub eta: f64,
    pub max_legs: usize,
    pub local_threshold: f64,
    pub tol_terminal: f64,
    pub max_picard: usize,
    pub picard_ball: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearParams {
    pub blocks: Vec<u32>,
    pub trials: usize,
    pub t_chi: f64,
    pub refine_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrilinearParams {
    pub quadruples: Vec<[u32; 4]>,
    pub eps: f64,
    pub conj_mask: [bool; 4],
    pub trials: usize,
    pub t_chi: f64,
    pub ramp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GccParams {
    pub horizon: f64,
    pub directions: usize,
    pub offsets: usize,
    pub sphere_epsilon: f64,
    pub sphere_circles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereParams {
    pub delta: f64,
    pub ramp: f64,
    pub r0: f64,
    pub n_list: Vec<u64>,
    pub defect_delta: f64,
    pub defect_n: Vec<u64>,
    pub defect_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanParams {
    pub radius: f64,
    pub omega_radius: f64,
    pub lambda: f64,
    pub t_final: f64,
    pub nt: usize,
    pub nx: usize,
    pub half_length: f64,
    pub modes: usize,
    pub s_list: Vec<f64>,
    pub calibration_samples: usize,
    pub held_out_samples: usize,
    pub margin_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsParams {
    pub frac_pairs: usize,
    pub frac_eps: Vec<f64>,
    pub frac_max_mode: i64,
    pub gauss_n: Vec<u64>,
    pub gauss_m_max: i64,
    pub gauss_sigma: i8,
    /// Number of sampled `M` per block where exhaustive comparison is too costly.
    pub gauss_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Subdirectory of the output root; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus: Option<TorusBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hum: Option<HumParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steer: Option<SteerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_steer: Option<GlobalSteerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear: Option<BilinearParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrilinear: Option<QuadrilinearParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gcc: Option<GccParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carleman: Option<CarlemanParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<NormsParams>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

fn diag(path: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic { path: path.into(), message: message.into() }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| {
        let path = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "<document>".into());
        Error::Config { path, message: e.message().to_string() }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { path: p, message } => Error::Config { path: format!("{}: {p}", path.display()), message },
        other => other,
    })
}

/// Smallest admissible steering regularity: `1/2+` on three-dimensional tori,
/// any `s ≥ 0` below.
pub fn steering_s0(dim: usize) -> f64 {
    if dim >= 3 {
        0.5
    } else {
        0.0
    }
}

fn positive(out: &mut Vec<Diagnostic>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        out.push(diag(path, format!("must be positive, got {v}")));
    }
}

fn multiple(out: &mut Vec<Diagnostic>, path: &str, t: f64, dt: f64) {
    positive(out, &format!("{path}.dt"), dt);
    positive(out, &format!("{path}.t_final"), t);
    if dt > 0.0 && t > 0.0 {
        let n = (t / dt).round();
        if n < 1.0 || (n * dt - t).abs() > 1e-9 * t {
            out.push(diag(format!("{path}.t_final"), format!("{t} is not a multiple of dt = {dt}")));
        }
    }
}

impl ExperimentConfig {
    fn sections(&self) -> [(ExperimentKind, bool); 10] {
        [
            (ExperimentKind::Decay, self.decay.is_some()),
            (ExperimentKind::Hum, self.hum.is_some()),
            (ExperimentKind::Steer, self.steer.is_some()),
            (ExperimentKind::GlobalSteer, self.global_steer.is_some()),
            (ExperimentKind::Bilinear, self.bilinear.is_some()),
            (ExperimentKind::Quadrilinear, self.quadrilinear.is_some()),
            (ExperimentKind::Gcc, self.gcc.is_some()),
            (ExperimentKind::Sphere, self.sphere.is_some()),
            (ExperimentKind::Carleman, self.carleman.is_some()),
            (ExperimentKind::Norms, self.norms.is_some()),
        ]
    }

    fn needs_torus(&self) -> bool {
        !matches!(self.experiment, ExperimentKind::Sphere | ExperimentKind::Carleman | ExperimentKind::Norms)
    }

    fn needs_omega(&self) -> bool {
        matches!(
            self.experiment,
            ExperimentKind::Decay
                | ExperimentKind::Hum
                | ExperimentKind::Steer
                | ExperimentKind::GlobalSteer
                | ExperimentKind::Gcc
        )
    }

    pub fn run_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    fn torus_spec(&self) -> Result<TorusSpec> {
        let t = self.torus.as_ref().ok_or_else(|| Error::Config { path: "torus".into(), message: "missing".into() })?;
        TorusSpec::new(t.periods.clone(), t.resolution.clone())
    }

    fn slabs(&self, dim: usize) -> Vec<Slab> {
        match &self.omega {
            Some(OmegaBlock::Faces { half_width }) => (0..dim).map(|i| Slab::new(i, 0.0, *half_width)).collect(),
            Some(OmegaBlock::Slabs { slabs }) => slabs.iter().map(|s| Slab::new(s.axis, s.center, s.half_width)).collect(),
            _ => vec![],
        }
    }

    fn profile(&self, torus: &Arc<Torus>) -> Result<DampingProfile> {
        match &self.omega {
            Some(OmegaBlock::None) | None => Ok(DampingProfile::zero(torus)),
            Some(OmegaBlock::Whole) => DampingProfile::constant(torus, 1.0),
            _ => build_cutoff(torus, &self.slabs(torus.dim())),
        }
    }

    fn omega_desc(&self, dim: usize) -> OmegaDesc {
        match &self.omega {
            Some(OmegaBlock::None) | None => OmegaDesc::Empty,
            Some(OmegaBlock::Whole) => OmegaDesc::Whole,
            _ => OmegaDesc::Slabs { slabs: self.slabs(dim) },
        }
    }

    /// Schema and cross-field checks; no computation.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (kind, present) in self.sections() {
            if present && kind != self.experiment {
                out.push(diag(kind.section(), format!("section does not belong to experiment `{}`", self.experiment.name())));
            }
            if !present && kind == self.experiment {
                out.push(diag(kind.section(), "missing parameter section for the selected experiment"));
            }
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                out.push(diag("name", "must be a plain directory name"));
            }
        }
        let mut dim = 0;
        match (&self.torus, self.needs_torus()) {
            (None, true) => out.push(diag("torus", "missing geometry block")),
            (Some(_), false) => out.push(diag("torus", "not used by this experiment")),
            (Some(t), true) => {
                dim = t.periods.len();
                if let Err(e) = TorusSpec::new(t.periods.clone(), t.resolution.clone()) {
                    out.push(diag("torus", e.to_string()));
                }
            }
            (None, false) => {}
        }
        match (&self.omega, self.needs_omega()) {
            (None, true) => out.push(diag("omega", "missing control region")),
            (Some(_), false) => out.push(diag("omega", "not used by this experiment")),
            (Some(OmegaBlock::Faces { half_width }), true) => positive(&mut out, "omega.half_width", *half_width),
            (Some(OmegaBlock::Slabs { slabs }), true) => {
                if slabs.is_empty() {
                    out.push(diag("omega.slabs", "needs at least one slab"));
                }
                for (i, s) in slabs.iter().enumerate() {
                    if dim > 0 && s.axis >= dim {
                        out.push(diag(format!("omega.slabs[{i}].axis"), format!("axis {} outside dimension {dim}", s.axis)));
                    }
                    positive(&mut out, &format!("omega.slabs[{i}].half_width"), s.half_width);
                }
            }
            _ => {}
        }
        if let Some(p) = &self.decay {
            multiple(&mut out, "decay", p.t_final, p.dt);
            if p.alpha < 0.0 || p.beta < 0.0 {
                out.push(diag("decay.alpha", "α and β must be nonnegative"));
            }
            if p.samples == 0 {
                out.push(diag("decay.samples", "must be at least 1"));
            }
            positive(&mut out, "decay.h1_norm", p.h1_norm);
        }
        if let Some(p) = &self.hum {
            multiple(&mut out, "hum", p.t_final, p.dt);
            positive(&mut out, "hum.cg_tol", p.cg_tol);
            positive(&mut out, "hum.terminal_tol", p.terminal_tol);
            positive(&mut out, "hum.lanczos_tol", p.lanczos_tol);
            if p.target_modes < 0 {
                out.push(diag("hum.target_modes", "must be nonnegative"));
            }
        }
        if let Some(p) = &self.steer {
            multiple(&mut out, "steer", p.t_final, p.dt);
            if p.sign.abs() != 1.0 {
                out.push(diag("steer.sign", "must be +1 or -1"));
            }
            let s0 = steering_s0(dim);
            let ok = if dim >= 3 { p.s > s0 } else { p.s >= s0 };
            if dim > 0 && !ok {
                out.push(diag("steer.s", format!("s = {} is below the admissible range: s0 = {s0}+ for dimension {dim}", p.s)));
            }
            positive(&mut out, "steer.u0_norm", p.u0_norm);
            positive(&mut out, "steer.tol_terminal", p.tol_terminal);
            positive(&mut out, "steer.picard_ball", p.picard_ball);
            positive(&mut out, "steer.cg_tol", p.cg_tol);
            if p.variant == SteerVariant::LowMode
                && (p.perturbation_mode.is_none() || p.low_cutoff.is_none() || p.low_eps.is_none())
            {
                out.push(diag("steer.variant", "low_mode needs perturbation_mode, low_cutoff and low_eps"));
            }
        }
        if let Some(p) = &self.global_steer {
            multiple(&mut out, "global_steer", p.t_final, p.dt);
            if !(p.eta > 0.0 && p.eta < 1.0) {
                out.push(diag("global_steer.eta", "must lie in (0, 1)"));
            }
            positive(&mut out, "global_steer.u0_h1", p.u0_h1);
            positive(&mut out, "global_steer.local_threshold", p.local_threshold);
        }
        if let Some(p) = &self.bilinear {
            if p.blocks.len() < 2 {
                out.push(diag("bilinear.blocks", "need at least two block sizes"));
            }
            positive(&mut out, "bilinear.t_chi", p.t_chi);
        }
        if let Some(p) = &self.quadrilinear {
            if p.quadruples.is_empty() {
                out.push(diag("quadrilinear.quadruples", "must not be empty"));
            }
            positive(&mut out, "quadrilinear.t_chi", p.t_chi);
            if !(0.0..=1.0).contains(&p.eps) {
                out.push(diag("quadrilinear.eps", "must lie in [0, 1]"));
            }
        }
        if let Some(p) = &self.gcc {
            positive(&mut out, "gcc.horizon", p.horizon);
            positive(&mut out, "gcc.sphere_epsilon", p.sphere_epsilon);
            if p.directions == 0 || p.offsets == 0 {
                out.push(diag("gcc.directions", "sampling sizes must be at least 1"));
            }
        }
        if let Some(p) = &self.sphere {
            if let Err(e) = BandProfile::new(p.delta, p.ramp) {
                out.push(diag("sphere.delta", e.to_string()));
            }
            if let Err(e) = BandProfile::new(p.defect_delta, p.ramp) {
                out.push(diag("sphere.defect_delta", e.to_string()));
            }
            if p.n_list.len() < 2 || p.n_list.windows(2).any(|w| w[1] <= w[0]) {
                out.push(diag("sphere.n_list", "needs at least two increasing degrees"));
            }
            positive(&mut out, "sphere.r0", p.r0);
            positive(&mut out, "sphere.defect_t", p.defect_t);
        }
        if let Some(p) = &self.carleman {
            positive(&mut out, "carleman.radius", p.radius);
            positive(&mut out, "carleman.lambda", p.lambda);
            positive(&mut out, "carleman.t_final", p.t_final);
            if p.radius >= p.half_length {
                out.push(diag("carleman.radius", "support must fit inside the space box"));
            }
            if p.s_list.is_empty() || p.calibration_samples == 0 || p.held_out_samples == 0 {
                out.push(diag("carleman.s_list", "needs s values and both sample families"));
            }
        }
        if let Some(p) = &self.norms {
            if p.frac_eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
                out.push(diag("norms.frac_eps", "values must lie in [0, 1]"));
            }
            if p.gauss_sigma.abs() != 1 {
                out.push(diag("norms.gauss_sigma", "must be +1 or -1"));
            }
            if p.gauss_n.is_empty() || p.gauss_n.contains(&0) {
                out.push(diag("norms.gauss_n", "needs positive block sizes"));
            }
        }
        out
    }
}

/// Files of one run.
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir, files: vec![] })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        let s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
        self.text(name, &(s + "\n"))
    }

    fn series(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
        let mut s = format!("{header}\n");
        for (x, y) in rows {
            s.push_str(&format!("{x:.12e},{y:.12e}\n"));
        }
        self.text(name, &s)
    }

    fn trajectory(&mut self, name: &str, tr: &crate::trajectory::Trajectory, meta: Value) -> Result<()> {
        io::write_trajectory(&self.dir.join(name), tr, &meta)?;
        self.files.push(name.to_string());
        self.files.push(format!("{name}.json"));
        Ok(())
    }

    fn field(&mut self, name: &str, f: &SpectralField, meta: Value) -> Result<()> {
        io::write_field(&self.dir.join(name), f, &meta)?;
        self.files.push(name.to_string());
        self.files.push(format!("{name}.json"));
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Value,
}

/// Default output root: `$NLSCTL_OUTPUT`, else `./nlsctl-out`.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("nlsctl-out"))
}

pub fn run(cfg: &ExperimentConfig, output_root: &Path) -> Result<RunOutcome> {
    if let Some(d) = cfg.validate().into_iter().next() {
        return Err(Error::Config { path: d.path, message: d.message });
    }
    let mut art = Artifacts::create(output_root.join(cfg.run_name()))?;
    let echo = toml::to_string(cfg).map_err(|e| Error::Format(e.to_string()))?;
    art.text("config.toml", &echo)?;
    art.json(
        "schema.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "experiment": cfg.experiment.name(),
            "crate_version": env!("CARGO_PKG_VERSION"),
        }),
    )?;
    let body = match cfg.experiment {
        ExperimentKind::Decay => run_decay(cfg, &mut art)?,
        ExperimentKind::Hum => run_hum(cfg, &mut art)?,
        ExperimentKind::Steer => run_steer(cfg, &mut art)?,
        ExperimentKind::GlobalSteer => run_global(cfg, &mut art)?,
        ExperimentKind::Bilinear => run_bilinear(cfg, &mut art)?,
        ExperimentKind::Quadrilinear => run_quadrilinear(cfg, &mut art)?,
        ExperimentKind::Gcc => run_gcc(cfg, &mut art)?,
        ExperimentKind::Sphere => run_sphere(cfg, &mut art)?,
        ExperimentKind::Carleman => run_carleman(cfg, &mut art)?,
        ExperimentKind::Norms => run_norms(cfg, &mut art)?,
    };
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment.name(),
        "seed": cfg.seed,
        "result": body,
    });
    art.json("summary.json", &summary)?;
    Ok(RunOutcome { dir: art.dir, files: art.files, summary })
}

fn rng(cfg: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

fn fmt_err<T>(e: impl std::fmt::Display) -> Result<T> {
    Err(Error::Format(e.to_string()))
}

fn run_decay(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.decay.as_ref().expect("validated");
    let torus = Torus::new(cfg.torus_spec()?)?;
    let profile = cfg.profile(&torus)?;
    let run_one = |u0: &SpectralField, dt: f64| -> Result<crate::evolution::EnergyLedger> {
        let kind = Kind::Damped { alpha: p.alpha, beta: p.beta, profile: profile.clone() };
        let tr = solve(&EvolutionProblem::new(kind, u0.clone(), p.t_final, dt))?;
        decay_ledger(&tr, &profile, p.alpha, p.beta)
    };
    let mut runs = Vec::new();
    let mut table = String::from("sample,gamma,gamma_half,E0,ET,max_residual\n");
    for i in 0..p.samples {
        let u0 = random::smooth_field(&torus, &mut rng(cfg, i as u64), p.max_mode, 0.0, 1.0, p.h1_norm);
        let led = run_one(&u0, p.dt)?;
        let half = if p.dt_halving { Some(run_one(&u0, 0.5 * p.dt)?) } else { None };
        let g = led.gamma.unwrap_or(f64::NAN);
        let gh = half.as_ref().and_then(|h| h.gamma).unwrap_or(f64::NAN);
        if i == 0 {
            art.text("energy_ledger.csv", &led.to_csv())?;
            art.series("energy_curve.csv", "t,E", led.times.iter().cloned().zip(led.energy.iter().cloned()))?;
        }
        table.push_str(&format!(
            "{i},{g:.12e},{gh:.12e},{:.12e},{:.12e},{:.12e}\n",
            led.energy[0],
            led.energy[led.energy.len() - 1],
            led.max_abs_residual()
        ));
        runs.push(json!({
            "gamma": led.gamma,
            "gamma_half_dt": half.as_ref().and_then(|h| h.gamma),
            "relative_change": half.as_ref().and_then(|h| h.gamma).map(|gh| ((gh - g) / g).abs()),
            "energy_initial": led.energy[0],
            "energy_final": led.energy[led.energy.len() - 1],
            "max_residual_over_e0": led.max_abs_residual() / led.energy[0],
            "max_increase": led.max_increase(),
        }));
    }
    art.text("decay_rates.csv", &table)?;
    Ok(json!({ "no_damping": profile.is_zero(), "runs": runs }))
}

fn run_hum(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.hum.as_ref().expect("validated");
    let torus = Torus::new(cfg.torus_spec()?)?;
    let setup = ControlSetup::new(cfg.profile(&torus)?, p.s, p.t_final, p.dt)?;
    let target = random::smooth_field(&torus, &mut rng(cfg, 0), p.target_modes, 0.0, 0.0, 1.0);
    let opts = CgOptions { tol: p.cg_tol, max_iter: p.cg_max_iter };
    let sol = hum::hum_solve(&setup, &target, p.terminal_tol, opts)?;
    art.series("cg_residuals.csv", "iteration,relative_residual", sol.residuals.iter().enumerate().map(|(i, r)| (i as f64, *r)))?;
    art.trajectory("control.nlst", &sol.control, json!({"what": "control", "t_final": p.t_final, "s": p.s}))?;
    art.field("phi0.nlsf", &sol.phi0, json!({"what": "adjoint datum"}))?;
    let mut out = json!({
        "cg_iterations": sol.iterations,
        "terminal_miss": sol.terminal_miss,
        "relative_terminal_miss": sol.terminal_miss / target.l2_norm(),
        "control_l2": sol.control.l2_hs(0.0),
    });
    if p.dense_check {
        let dense = DenseGramian::assemble(&setup, None)?;
        let phi = dense.solve(&torus, &target)?;
        out["dense_relative_difference"] = json!(phi.sub(&sol.phi0).l2_norm() / phi.l2_norm());
        out["dense_asymmetry"] = json!(dense.asymmetry());
    }
    if p.symmetry_pairs > 0 {
        let rep = hum::gramian_symmetry_check(&setup, p.symmetry_pairs, cfg.seed, p.target_modes)?;
        out["symmetry"] = serde_json::to_value(rep).or_else(fmt_err)?;
    }
    let mut rows = Vec::new();
    let mut csv = String::from("cutoff,dimension,lambda_min,lambda_max\n");
    for &n in &p.cutoffs {
        let rep = hum::observability_constant(
            &setup,
            n,
            LanczosOptions { max_iter: p.lanczos_max_iter, tol: p.lanczos_tol, seed: cfg.seed },
        )?;
        csv.push_str(&format!("{},{},{:.12e},{:.12e}\n", n, rep.dimension, rep.lambda_min, rep.lambda_max));
        rows.push(json!({"cutoff": n, "dimension": rep.dimension, "lambda_min": rep.lambda_min, "lambda_max": rep.lambda_max}));
    }
    if !rows.is_empty() {
        art.text("observability.csv", &csv)?;
    }
    out["observability"] = Value::Array(rows);
    Ok(out)
}

fn steering_opts(tol: f64, max_picard: usize, ball: f64, cg_tol: f64, cg_max_iter: usize) -> SteeringOptions {
    SteeringOptions { tol_terminal: tol, max_picard, picard_ball: ball, cg_tol, cg_max_iter }
}

fn steering_json(r: &steering::SteeringResult) -> Value {
    json!({
        "iterations": r.iterations,
        "terminal_miss": r.terminal_miss,
        "phi_norms": r.phi_norms,
        "increments": r.increments,
        "contraction": r.contraction,
        "cg_iterations": r.cg_iterations,
    })
}

fn run_steer(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.steer.as_ref().expect("validated");
    let torus = Torus::new(cfg.torus_spec()?)?;
    let setup = ControlSetup::new(cfg.profile(&torus)?, p.s, p.t_final, p.dt)?;
    let opts = steering_opts(p.tol_terminal, p.max_picard, p.picard_ball, p.cg_tol, p.cg_max_iter);
    let reference = |w0: &SpectralField| -> Result<crate::trajectory::Trajectory> {
        solve(&EvolutionProblem::new(Kind::Nonlinear { sign: p.sign, alpha: 0.0, beta: 1.0 }, w0.clone(), p.t_final, p.dt))
    };
    let w0 = if p.reference_h1 > 0.0 {
        random::smooth_field(&torus, &mut rng(cfg, 1), p.max_mode, 0.0, 1.0, p.reference_h1)
    } else {
        SpectralField::zeros(&torus)
    };
    let w = if p.reference_h1 > 0.0 {
        reference(&w0)?
    } else {
        crate::trajectory::Trajectory::zeros(&torus, p.dt, setup.steps())
    };
    let out = match p.variant {
        SteerVariant::Local => {
            let delta = random::smooth_field(&torus, &mut rng(cfg, 0), p.max_mode, 0.0, p.s, p.u0_norm);
            let problem = SteeringProblem::new(setup, w, w0.add(&delta), p.sign, opts);
            let r = steering::fixed_point_control(&problem)?;
            art.series("picard_increments.csv", "iteration,increment", r.increments.iter().enumerate().map(|(i, v)| (i as f64 + 1.0, *v)))?;
            art.trajectory("control.nlst", &r.control, json!({"what": "control"}))?;
            json!({"variant": "local", "steering": steering_json(&r)})
        }
        SteerVariant::LowMode => {
            let k = p.perturbation_mode.expect("validated");
            let mut idx = vec![0i64; torus.dim()];
            idx[0] = k;
            let mut bump = SpectralField::mode(&torus, &idx, crate::torus::C64::new(1.0, 0.0))?;
            let h1 = bump.sobolev_norm(1.0);
            bump.scale(crate::torus::C64::new(p.u0_norm / h1, 0.0));
            let problem = SteeringProblem::new(setup, w, w0.add(&bump), p.sign, opts);
            let raw = match steering::raw_ball_check(&problem) {
                Ok(d) => json!({"admitted": true, "distance": d}),
                Err(e) => json!({"admitted": false, "reason": e.to_string()}),
            };
            let e0 = energy(&w0, 0.0, 1.0).max(energy(&problem.u0, 0.0, 1.0)).sqrt().max(p.u0_norm);
            let rep = steering::low_mode_control(&problem, p.low_cutoff.expect("validated"), e0, p.low_eps.expect("validated"))?;
            art.trajectory("control.nlst", &rep.result.control, json!({"what": "control"}))?;
            json!({
                "variant": "low_mode",
                "h1_distance": p.u0_norm,
                "raw_ball": raw,
                "bound": serde_json::to_value(rep.bound).or_else(fmt_err)?,
                "steering": steering_json(&rep.result),
            })
        }
        SteerVariant::TwoPoint => {
            let u0 = random::smooth_field(&torus, &mut rng(cfg, 0), p.max_mode, 0.0, p.s, p.u0_norm);
            let u1 = random::smooth_field(&torus, &mut rng(cfg, 2), p.max_mode, 0.0, p.s, p.u0_norm);
            let r = steering::two_point_control(&setup, p.sign, &u0, &u1, opts)?;
            art.trajectory("control.nlst", &r.control, json!({"what": "control"}))?;
            json!({
                "variant": "two_point",
                "terminal_miss": r.terminal_miss,
                "first": steering_json(&r.first),
                "second": steering_json(&r.second),
            })
        }
    };
    Ok(out)
}

fn run_global(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.global_steer.as_ref().expect("validated");
    let torus = Torus::new(cfg.torus_spec()?)?;
    let setup = ControlSetup::new(cfg.profile(&torus)?, p.s, p.t_final, p.dt)?;
    let u0 = random::smooth_field(&torus, &mut rng(cfg, 0), p.max_mode, 0.0, 1.0, p.u0_h1);
    let opts = GlobalOptions {
        eta: p.eta,
        max_legs: p.max_legs,
        local_threshold: p.local_threshold,
        steering: steering_opts(p.tol_terminal, p.max_picard, p.picard_ball, p.cg_tol, p.cg_max_iter),
    };
    let rep = steering::global_drive_to_zero(&setup, &u0, opts)?;
    art.series("energies.csv", "leg,energy", rep.energies.iter().enumerate().map(|(i, e)| (i as f64, *e)))?;
    let bound = (1.0 - p.eta).powi(2) + 0.1;
    Ok(json!({
        "legs": serde_json::to_value(&rep.legs).or_else(fmt_err)?,
        "leg_count": rep.legs.len(),
        "max_leg_ratio": rep.legs.iter().map(|l| l.ratio).fold(0.0, f64::max),
        "leg_ratio_bound": bound,
        "final_steer": rep.final_steer.as_ref().map(steering_json),
        "final_norm": rep.final_norm,
    }))
}

fn run_bilinear(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.bilinear.as_ref().expect("validated");
    let spec = cfg.torus_spec()?;
    let opts = BilinearOptions {
        blocks: p.blocks.clone(),
        trials: p.trials,
        t_chi: p.t_chi,
        seed: cfg.seed,
        refine_rounds: p.refine_rounds,
    };
    let rep = xsb::bilinear_sweep(&spec, &opts)?;
    art.text("bilinear.csv", &rep.to_csv())?;
    art.series(
        "bilinear_fit.csv",
        "log_n,log_max_ratio",
        rep.rows.iter().filter_map(|r| r.max_ratio.map(|m| ((r.n as f64).ln(), m.ln()))),
    )?;
    serde_json::to_value(&rep).or_else(fmt_err)
}

fn run_quadrilinear(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.quadrilinear.as_ref().expect("validated");
    let spec = cfg.torus_spec()?;
    let opts = QuadOptions {
        quadruples: p.quadruples.clone(),
        eps: p.eps,
        conj_mask: p.conj_mask,
        trials: p.trials,
        t_chi: p.t_chi,
        ramp: p.ramp,
        seed: cfg.seed,
    };
    let rep = xsb::commutator_quadrilinear_sweep(&spec, &opts)?;
    art.text("quadrilinear.csv", &rep.to_csv())?;
    art.series(
        "quadrilinear_fit.csv",
        "log_m,log_max_ratio",
        rep.rows.iter().filter_map(|r| r.max_ratio.filter(|m| *m > 0.0).map(|m| (r.m.ln(), m.ln()))),
    )?;
    serde_json::to_value(&rep).or_else(fmt_err)
}

fn run_gcc(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.gcc.as_ref().expect("validated");
    let spec = cfg.torus_spec()?;
    let omega = cfg.omega_desc(spec.periods.len());
    let sampling = GccSampling { directions: p.directions, offsets: p.offsets, seed: cfg.seed };
    let torus = gcc::torus_gcc_check(&spec, &omega, p.horizon, sampling)?;
    let reverified = match (&torus.witness, torus.satisfied) {
        (Some(w), false) => {
            let step = 0.25 * spec.periods.iter().cloned().fold(f64::INFINITY, f64::min) / 64.0;
            Some(gcc::simulate_entry(&spec, &omega, w, p.horizon, step)?.is_none())
        }
        _ => None,
    };
    let sphere = gcc::sphere_band_check(p.sphere_epsilon, p.sphere_circles, cfg.seed)?;
    let eps_sweep: Vec<(f64, f64)> = (1..=8).map(|i| {
        let e = p.sphere_epsilon * i as f64 / 4.0;
        (e, (std::f64::consts::PI - 2.0 * e).max(0.0))
    }).collect();
    art.series("sphere_t0.csv", "epsilon,t0", eps_sweep)?;
    Ok(json!({
        "torus": serde_json::to_value(&torus).or_else(fmt_err)?,
        "witness_reverified": reverified,
        "sphere": serde_json::to_value(&sphere).or_else(fmt_err)?,
    }))
}

fn run_sphere(_cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = _cfg.sphere.as_ref().expect("validated");
    let band = BandProfile::new(p.delta, p.ramp)?;
    let conc = sphere::concentration_decay(band, &p.n_list, p.r0)?;
    art.text("concentration.csv", &conc.to_csv())?;
    let norm_fit = sphere::normalization_exponent(&p.n_list, p.r0)?;
    let dband = BandProfile::new(p.defect_delta, p.ramp)?;
    let defect: Vec<sphere::DefectRow> =
        p.defect_n.iter().map(|&n| sphere::observability_defect(dband, n, p.defect_t)).collect::<Result<_>>()?;
    art.series("defect.csv", "n,ratio", defect.iter().map(|d| (d.n as f64, d.ratio)))?;
    let norms: Vec<sphere::HarmonicNorms> = p.n_list.iter().map(|&n| sphere::harmonic_norms(n, p.r0)).collect::<Result<_>>()?;
    Ok(json!({
        "norms": serde_json::to_value(&norms).or_else(fmt_err)?,
        "normalization_exponent": norm_fit.slope,
        "concentration": serde_json::to_value(&conc).or_else(fmt_err)?,
        "defect": serde_json::to_value(&defect).or_else(fmt_err)?,
    }))
}

fn run_carleman(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.carleman.as_ref().expect("validated");
    let h = Harness {
        grid: SpaceTimeGrid { t_final: p.t_final, nt: p.nt, half_length: p.half_length, nx: p.nx },
        radius: p.radius,
        omega_radius: p.omega_radius,
        lambda: p.lambda,
        modes: p.modes,
    };
    let base = cfg.seed.wrapping_mul(1_000_003);
    let cal_seeds: Vec<u64> = (0..p.calibration_samples as u64).map(|i| base + i).collect();
    let held: Vec<u64> = (0..p.held_out_samples as u64).map(|i| base + 500_000 + i).collect();
    let cal = h.calibrate(&cal_seeds, &p.s_list)?;
    let held_ratio = h.held_out(&cal, &held)?;
    let mut csv = String::from("sample,s,ratio\n");
    for (i, row) in cal.ratios.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            csv.push_str(&format!("{},{},{:.12e}\n", cal.seeds[i], cal.s_list[j], r));
        }
    }
    art.text("ratios.csv", &csv)?;
    art.series("max_ratio_by_s.csv", "s,max_ratio", cal.s_list.iter().cloned().zip(cal.max_by_s.iter().cloned()))?;
    let quad = Psi::Quadratic { dim: 3, c: 2.0 * p.radius * p.radius, radius: p.radius };
    let m_quad = carleman::pseudoconvexity_margin(&quad, &carleman::euclidean_region(3, p.radius, p.margin_points, 0.0))?;
    let m_sphere = carleman::pseudoconvexity_margin(
        &Psi::SphereHeight { c: 3.0 },
        &carleman::sphere_region(-0.5, p.margin_points),
    )?;
    art.json("calibration.json", &cal)?;
    Ok(json!({
        "c_fit": cal.c_fit,
        "max_by_s": cal.max_by_s,
        "nonincreasing_in_s": cal.max_by_s.windows(2).all(|w| w[1] <= w[0]),
        "held_out_over_c_fit": held_ratio,
        "margin_quadratic": m_quad.margin,
        "margin_sphere_height_below_minus_half": m_sphere.margin,
    }))
}

fn run_norms(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let p = cfg.norms.as_ref().expect("validated");
    let mut r = rng(cfg, 0);
    let periods = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for &eps in &p.frac_eps {
        for _ in 0..p.frac_pairs {
            let k: Vec<i64> = (0..3).map(|_| r.gen_range(-p.frac_max_mode..=p.frac_max_mode)).collect();
            let k3: Vec<i64> = (0..3).map(|_| r.gen_range(-p.frac_max_mode..=p.frac_max_mode)).collect();
            let c = xsb::frac_power_triangle(eps, &k, &k3, &periods)?;
            if !c.ok {
                failures += 1;
            }
            if c.rhs > 0.0 {
                worst = worst.max(c.lhs / c.rhs);
            }
        }
    }
    // both counting methods on every M up to 4N² for small N, on a sample above
    let mut disagreements = 0usize;
    let mut compared = 0usize;
    for &n in &p.gauss_n {
        let top = 5 * (n as i64) * (n as i64);
        let ms: Vec<i64> = if top <= 20_000 {
            (1..=top).collect()
        } else {
            (0..p.gauss_samples).map(|_| r.gen_range(1..=top)).collect()
        };
        for m in ms {
            compared += 1;
            if xsb::gauss_count(m, n, p.gauss_sigma)? != xsb::gauss_count_hashed(m, n, p.gauss_sigma)? {
                disagreements += 1;
            }
        }
    }
    let growth = xsb::gauss_growth(&p.gauss_n, p.gauss_m_max, p.gauss_sigma)?;
    art.series("gauss_growth.csv", "n,max_count", growth.n.iter().zip(&growth.max_count).map(|(&n, &c)| (n as f64, c as f64)))?;
    Ok(json!({
        "frac_pairs_checked": p.frac_pairs * p.frac_eps.len(),
        "frac_failures": failures,
        "frac_worst_ratio": worst,
        "gauss_counts_compared": compared,
        "gauss_method_disagreements": disagreements,
        "gauss_growth_exponent": growth.fit.slope,
        "gauss_max_counts": growth.max_count,
    }))
}

/// A smallest valid config for each experiment, used by `list-experiments`
/// and as a starting point for new configs.
pub fn template(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Decay => include_str!("../configs/decay.toml"),
        ExperimentKind::Hum => include_str!("../configs/hum.toml"),
        ExperimentKind::Steer => include_str!("../configs/steer.toml"),
        ExperimentKind::GlobalSteer => include_str!("../configs/global_steer.toml"),
        ExperimentKind::Bilinear => include_str!("../configs/bilinear.toml"),
        ExperimentKind::Quadrilinear => include_str!("../configs/quadrilinear.toml"),
        ExperimentKind::Gcc => include_str!("../configs/gcc.toml"),
        ExperimentKind::Sphere => include_str!("../configs/sphere.toml"),
        ExperimentKind::Carleman => include_str!("../configs/carleman.toml"),
        ExperimentKind::Norms => include_str!("../configs/norms.toml"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_parse_and_validate() {
        for kind in ExperimentKind::ALL {
            let cfg = parse_config(template(kind)).unwrap_or_else(|e| panic!("{}: {e}", kind.name()));
            assert_eq!(cfg.experiment, kind);
            assert!(cfg.validate().is_empty(), "{}: {:?}", kind.name(), cfg.validate());
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = template(ExperimentKind::Norms).replace("frac_pairs", "frac_pears");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
        let text = format!("{}\nbogus = 1\n", "experiment = \"norms\"\nseed = 1");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn cross_field_checks() {
        let mut cfg = parse_config(template(ExperimentKind::Steer)).unwrap();
        cfg.torus = Some(TorusBlock { periods: vec![1.0; 3], resolution: vec![8; 3] });
        if let Some(s) = cfg.steer.as_mut() {
            s.s = 0.4;
        }
        let d = cfg.validate();
        assert!(d.iter().any(|d| d.path == "steer.s" && d.message.contains("0.5")), "{d:?}");
        let mut cfg = parse_config(template(ExperimentKind::Hum)).unwrap();
        cfg.hum.as_mut().unwrap().dt = 0.0;
        assert!(cfg.validate().iter().any(|d| d.path == "hum.dt"));
        let mut cfg = parse_config(template(ExperimentKind::Hum)).unwrap();
        cfg.norms = parse_config(template(ExperimentKind::Norms)).unwrap().norms;
        assert!(cfg.validate().iter().any(|d| d.path == "norms"));
    }

    #[test]
    fn echo_round_trips() {
        for kind in ExperimentKind::ALL {
            let cfg = parse_config(template(kind)).unwrap();
            let echo = toml::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&echo).unwrap(), cfg);
        }
    }
}
