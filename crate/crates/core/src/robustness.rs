//! Static and dynamic disorder on top of a nominal control design.
//!
//! The feedback law is always built from the unperturbed chain; disorder
//! only changes the Hamiltonian that actually drives the state, or scales
//! the fields on their way out.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, TridiagonalHamiltonian};
use crate::control::{ControlSetup, Termination};
use crate::dynamics::{run_closed_loop, Disturbance, Integration, StateVector, TrajectoryRecord, TransferDesign, Undisturbed};
use crate::error::{Error, Result};
use crate::spectral::{spectrum_report, SpectrumReport};

/// Identifier recorded with every seeded result.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

/// A single chain or control parameter, 1-indexed.
///
/// Text form is `omega:<site>`, `coupling:<bond>` or `field:<k>`; `Ω`/`D`/`f`
/// are accepted as aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParameterSelector {
    Omega(usize),
    Coupling(usize),
    Field(usize),
}

impl FromStr for ParameterSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownSelector(s.to_string());
        let (name, index) = s.trim().split_once([':', '_']).ok_or_else(unknown)?;
        let index: usize = index.trim().parse().map_err(|_| unknown())?;
        if index == 0 {
            return Err(unknown());
        }
        match name.trim() {
            "omega" | "Omega" | "Ω" => Ok(ParameterSelector::Omega(index)),
            "coupling" | "D" => Ok(ParameterSelector::Coupling(index)),
            "field" | "f" => Ok(ParameterSelector::Field(index)),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for ParameterSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterSelector::Omega(i) => write!(f, "omega:{i}"),
            ParameterSelector::Coupling(i) => write!(f, "coupling:{i}"),
            ParameterSelector::Field(i) => write!(f, "field:{i}"),
        }
    }
}

impl Serialize for ParameterSelector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParameterSelector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scales one chain parameter by `1 + delta` through an override.
pub fn perturb_static(spec: &ChainSpec, selector: ParameterSelector, delta: f64) -> Result<ChainSpec> {
    if !delta.is_finite() {
        return Err(Error::InvalidInput(format!("disorder magnitude must be finite, got {delta}")));
    }
    match selector {
        ParameterSelector::Omega(site) => {
            if site > spec.m() {
                return Err(Error::UnknownSelector(selector.to_string()));
            }
            if delta == 0.0 {
                return Ok(spec.clone());
            }
            spec.clone().with_omega_override(site, (1.0 + delta) * spec.effective_omega(site))
        }
        ParameterSelector::Coupling(bond) => {
            if bond >= spec.m() {
                return Err(Error::UnknownSelector(selector.to_string()));
            }
            if delta == 0.0 {
                return Ok(spec.clone());
            }
            spec.clone().with_coupling_override(bond, (1.0 + delta) * spec.effective_coupling(bond))
        }
        ParameterSelector::Field(_) => Err(Error::UnknownSelector(format!("{selector} is not a chain parameter"))),
    }
}

/// Multiplicative error on the feedback fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldNoise {
    pub scale: Vec<f64>,
}

impl Disturbance for FieldNoise {
    fn scale_fields(&self, fields: &mut [f64]) {
        for (f, s) in fields.iter_mut().zip(&self.scale) {
            *f *= s;
        }
    }
}

/// Couplings redrawn every `stride` steps: `n` bonds chosen uniformly get
/// `D_j (1 + ε)` with `ε` uniform on `epsilon_range`, all others nominal.
pub struct DynamicCouplingDisorder {
    nominal: Vec<f64>,
    n: usize,
    epsilon_range: (f64, f64),
    stride: usize,
    rng: ChaCha8Rng,
}

impl DynamicCouplingDisorder {
    pub fn new(nominal: &TridiagonalHamiltonian, n: usize, epsilon_range: (f64, f64), stride: usize, seed: u64) -> Self {
        DynamicCouplingDisorder {
            nominal: nominal.offdiag().to_vec(),
            n,
            epsilon_range,
            stride: stride.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Disturbance for DynamicCouplingDisorder {
    fn before_step(&mut self, step: usize, h: &mut TridiagonalHamiltonian) {
        if step % self.stride != 0 {
            return;
        }
        let couplings = h.offdiag_mut();
        couplings.copy_from_slice(&self.nominal);
        let (lo, hi) = self.epsilon_range;
        for _ in 0..self.n {
            let bond = self.rng.gen_range(0..couplings.len());
            let eps = if lo < hi { self.rng.gen_range(lo..=hi) } else { lo };
            couplings[bond] = self.nominal[bond] * (1.0 + eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    StaticParameter,
    DynamicCouplings,
    FieldNoise,
}

fn default_epsilon_range() -> [f64; 2] {
    [-0.05, 0.05]
}

/// One disorder scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    /// Parameters hit by static or field disorder.
    #[serde(default)]
    pub targets: Vec<ParameterSelector>,
    /// Relative size `δ` for static and field disorder.
    #[serde(default)]
    pub magnitude: f64,
    /// Number of simultaneous dynamic disorders.
    #[serde(default)]
    pub count: usize,
    #[serde(default = "default_epsilon_range")]
    pub epsilon_range: [f64; 2],
    /// Integration steps between redraws; defaults to the record stride.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_stride: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.magnitude.is_finite() {
            return Err(Error::InvalidInput("disorder magnitude must be finite".into()));
        }
        let [lo, hi] = self.epsilon_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!("bad epsilon range [{lo}, {hi}]")));
        }
        if self.resample_stride == Some(0) {
            return Err(Error::InvalidInput("resample_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Runs the nominal design from site 1 under the given disorder.
pub fn run_disordered(design: &TransferDesign, integration: &Integration, disorder: &DisorderSpec) -> Result<TrajectoryRecord> {
    disorder.validate()?;
    let initial = StateVector::site(design.m(), 1);
    match disorder.kind {
        DisorderKind::StaticParameter => {
            let mut spec = design.spec.clone();
            for &target in &disorder.targets {
                spec = perturb_static(&spec, target, disorder.magnitude)?;
            }
            run_closed_loop(design, spec.hamiltonian(), integration, initial, &mut Undisturbed)
        }
        DisorderKind::FieldNoise => {
            let mut noise = FieldNoise { scale: vec![1.0; design.controls.len()] };
            for &target in &disorder.targets {
                match target {
                    ParameterSelector::Field(k) if k <= noise.scale.len() => noise.scale[k - 1] = 1.0 + disorder.magnitude,
                    other => return Err(Error::UnknownSelector(other.to_string())),
                }
            }
            run_closed_loop(design, design.h0.clone(), integration, initial, &mut noise)
        }
        DisorderKind::DynamicCouplings => {
            let [lo, hi] = disorder.epsilon_range;
            let stride = disorder.resample_stride.unwrap_or(integration.record_stride);
            let mut dynamic = DynamicCouplingDisorder::new(&design.h0, disorder.count, (lo, hi), stride, disorder.seed);
            run_closed_loop(design, design.h0.clone(), integration, initial, &mut dynamic)
        }
    }
}

/// Runs are compared at a fixed horizon, so early stops are switched off.
fn truncated(setup: &ControlSetup, t_max: f64) -> ControlSetup {
    ControlSetup {
        termination: Termination { t_max, fidelity_target: None, field_floor: None },
        ..setup.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub fidelity: f64,
}

/// Fidelity at `t_trunc` for each relative perturbation of one parameter.
pub fn disorder_sweep(
    spec: &ChainSpec,
    setup: &ControlSetup,
    integration: &Integration,
    selector: ParameterSelector,
    deltas: &[f64],
    t_trunc: f64,
) -> Result<Vec<SweepPoint>> {
    let design = TransferDesign::new(spec, &truncated(setup, t_trunc))?;
    deltas
        .par_iter()
        .map(|&delta| {
            let disorder = match selector {
                ParameterSelector::Field(_) => DisorderKind::FieldNoise,
                _ => DisorderKind::StaticParameter,
            };
            let disorder = DisorderSpec {
                kind: disorder,
                targets: vec![selector],
                magnitude: delta,
                count: 0,
                epsilon_range: default_epsilon_range(),
                resample_stride: None,
                seed: 0,
            };
            let rec = run_disordered(&design, integration, &disorder)?;
            Ok(SweepPoint { delta, fidelity: rec.final_fidelity() })
        })
        .collect()
}

/// Mean fidelity trajectory of a dynamic-disorder ensemble with its
/// min/max envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub n: usize,
    pub runs: usize,
    pub stride: usize,
    pub base_seed: u64,
    pub rng: String,
}

impl EnsembleResult {
    pub fn mean_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t + 1e-9);
        self.mean[idx.saturating_sub(1)]
    }
}

/// `runs` independent trajectories; run `r` is seeded with `base_seed + r`,
/// so results do not depend on how runs are scheduled.
#[allow(clippy::too_many_arguments)]
pub fn dynamic_disorder_ensemble(
    spec: &ChainSpec,
    setup: &ControlSetup,
    integration: &Integration,
    n: usize,
    epsilon_range: (f64, f64),
    resample_stride: Option<usize>,
    runs: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(Error::InvalidInput("an ensemble needs at least one run".into()));
    }
    let design = TransferDesign::new(spec, &truncated(setup, setup.termination.t_max))?;
    let stride = resample_stride.unwrap_or(integration.record_stride);
    let records: Vec<TrajectoryRecord> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let disorder = DisorderSpec {
                kind: DisorderKind::DynamicCouplings,
                targets: Vec::new(),
                magnitude: 0.0,
                count: n,
                epsilon_range: [epsilon_range.0, epsilon_range.1],
                resample_stride: Some(stride),
                seed: base_seed.wrapping_add(r),
            };
            run_disordered(&design, integration, &disorder)
        })
        .collect::<Result<_>>()?;

    let times = records[0].times.clone();
    let len = times.len();
    let mut mean = vec![0.0; len];
    let mut min = vec![f64::INFINITY; len];
    let mut max = vec![f64::NEG_INFINITY; len];
    for rec in &records {
        for (j, &f) in rec.fidelity.iter().enumerate().take(len) {
            mean[j] += f;
            min[j] = min[j].min(f);
            max[j] = max[j].max(f);
        }
    }
    mean.iter_mut().for_each(|m| *m /= runs as f64);
    Ok(EnsembleResult { times, mean, min, max, n, runs, stride, base_seed, rng: RNG_ALGORITHM.to_string() })
}

/// Spectra of `draws` chains whose every coupling is scaled by an
/// independent `1 + ε`.
pub fn static_coupling_draws(
    spec: &ChainSpec,
    epsilon_range: (f64, f64),
    draws: usize,
    seed: u64,
) -> Result<Vec<SpectrumReport>> {
    let nominal = spec.hamiltonian();
    (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(d));
            let mut h = nominal.clone();
            let (lo, hi) = epsilon_range;
            for c in h.offdiag_mut() {
                *c *= 1.0 + rng.gen_range(lo..=hi);
            }
            spectrum_report(&h)
        })
        .collect()
}
