//! Closed-loop propagation of the single-excitation Schrödinger equation.
//!
//! Feedback is sample-and-hold: fields are evaluated from the state at the
//! start of each step and held while a classical fourth-order Runge-Kutta
//! step advances `ψ` under `H_0 + Σ_k f_k H_k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, TridiagonalHamiltonian};
use crate::control::{
    build_p_operator, commutator_expectations_sparse, control_hamiltonians, ControlSetup, POperator, SparseSymmetric,
    FIELD_FLOOR_SAMPLES,
};
use crate::error::{Error, Result};
use crate::spectral::{eigendecompose, select_target, SpectralDecomposition, TargetSelection};
use crate::C64;

/// Norm drift tolerated per step before the state is renormalized.
pub const RENORMALIZE_ABOVE: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Transfer fidelity averaged over all input states on the first spin, as a
/// function of `|⟨M|ψ⟩|` with the phase taken as compensated.
pub fn averaged_fidelity(amp_magnitude: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&amp_magnitude) {
        return Err(Error::InvalidAmplitude(amp_magnitude));
    }
    let m = amp_magnitude;
    Ok((m / 3.0 + m * m / 6.0 + 0.5).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        StateVector { amplitudes }
    }

    /// Excitation on 1-indexed `site`.
    pub fn site(m: usize, site: usize) -> Self {
        assert!(site >= 1 && site <= m, "site {site} outside 1..={m}");
        let mut amplitudes = vec![ZERO; m];
        amplitudes[site - 1] = C64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn from_real(v: &[f64]) -> Self {
        StateVector { amplitudes: v.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitude on 1-indexed `site`.
    pub fn amplitude(&self, site: usize) -> C64 {
        self.amplitudes[site - 1]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    fn scale(&mut self, s: f64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub dt: f64,
    /// Integration steps between recorded samples.
    pub record_stride: usize,
}

impl Default for Integration {
    fn default() -> Self {
        Integration { dt: 0.01, record_stride: 50 }
    }
}

impl Integration {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidInput("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Scratch buffers for one RK4 step.
#[derive(Debug, Clone)]
pub struct Stepper {
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
}

/// What happened to the norm during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `|‖ψ‖ − 1|` before any renormalization.
    pub drift: f64,
    pub renormalized: bool,
}

/// `out = −i (H_0 + Σ_k f_k H_k) x`.
fn derivative(h0: &TridiagonalHamiltonian, controls: &[SparseSymmetric], fields: &[f64], x: &[C64], out: &mut [C64]) {
    h0.apply(x, out);
    for (h, &f) in controls.iter().zip(fields) {
        if f != 0.0 {
            h.apply_add(f, x, out);
        }
    }
    for o in out.iter_mut() {
        *o = C64::new(o.im, -o.re);
    }
}

impl Stepper {
    pub fn new(m: usize) -> Self {
        Stepper { k: std::array::from_fn(|_| vec![ZERO; m]), stage: vec![ZERO; m] }
    }

    /// Advances `state` by `dt` with `fields` held constant. Renormalizes only
    /// when the drift exceeds [`RENORMALIZE_ABOVE`].
    pub fn step(
        &mut self,
        state: &mut StateVector,
        h0: &TridiagonalHamiltonian,
        controls: &[SparseSymmetric],
        fields: &[f64],
        dt: f64,
    ) -> StepInfo {
        let psi = &mut state.amplitudes;
        let [k1, k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;

        derivative(h0, controls, fields, psi, k1);
        for ((s, p), k) in stage.iter_mut().zip(psi.iter()).zip(k1.iter()) {
            *s = p + k * (0.5 * dt);
        }
        derivative(h0, controls, fields, stage, k2);
        for ((s, p), k) in stage.iter_mut().zip(psi.iter()).zip(k2.iter()) {
            *s = p + k * (0.5 * dt);
        }
        derivative(h0, controls, fields, stage, k3);
        for ((s, p), k) in stage.iter_mut().zip(psi.iter()).zip(k3.iter()) {
            *s = p + k * dt;
        }
        derivative(h0, controls, fields, stage, k4);
        let w = dt / 6.0;
        for i in 0..psi.len() {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }

        let norm = state.norm();
        let drift = (norm - 1.0).abs();
        let renormalized = drift > RENORMALIZE_ABOVE;
        if renormalized {
            state.scale(1.0 / norm);
        }
        StepInfo { drift, renormalized }
    }
}

/// One held-field step on a fresh copy of `state`.
pub fn step(
    state: &StateVector,
    h0: &TridiagonalHamiltonian,
    controls: &[SparseSymmetric],
    fields: &[f64],
    dt: f64,
) -> Result<StateVector> {
    let mut next = state.clone();
    Stepper::new(state.dim()).step(&mut next, h0, controls, fields, dt);
    if next.amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::BlowUp { time: dt });
    }
    Ok(next)
}

/// `⟨to| e^{−i H_0 t} |from⟩` evaluated exactly in the eigenbasis.
pub fn free_evolution_amplitude(dec: &SpectralDecomposition, t: f64, from_site: usize, to_site: usize) -> C64 {
    dec.eigenvalues()
        .iter()
        .zip(dec.eigenvectors())
        .map(|(&lambda, u)| C64::from_polar(u[to_site - 1] * u[from_site - 1], -lambda * t))
        .sum()
}

/// `V = ⟨ψ|P|ψ⟩`.
pub fn lyapunov_value(state: &StateVector, p: &POperator) -> f64 {
    p.expectation(state.amplitudes())
}

/// Nominal chain, its spectrum, the target and the feedback operator.
#[derive(Debug, Clone)]
pub struct TransferDesign {
    pub spec: ChainSpec,
    pub h0: TridiagonalHamiltonian,
    pub decomposition: Arc<SpectralDecomposition>,
    pub target: TargetSelection,
    pub p: POperator,
    pub controls: Vec<SparseSymmetric>,
    pub setup: ControlSetup,
}

impl TransferDesign {
    pub fn new(spec: &ChainSpec, setup: &ControlSetup) -> Result<Self> {
        setup.validate()?;
        let m = spec.m();
        let h0 = spec.hamiltonian();
        let decomposition = Arc::new(eigendecompose(&h0)?);
        let site = setup.target_site.unwrap_or(m);
        if site == 0 || site > m {
            return Err(Error::IndexOutOfRange { what: "target site", index: site, max: m });
        }
        let target = select_target(&decomposition, site);
        let p = build_p_operator(decomposition.clone(), target.index, &setup.p_rule())?;
        let controls = control_hamiltonians(setup.mode, m)?;
        Ok(TransferDesign { spec: spec.clone(), h0, decomposition, target, p, controls, setup: setup.clone() })
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    /// The target eigenvector as a state.
    pub fn target_state(&self) -> StateVector {
        StateVector::from_real(self.decomposition.eigenvector(self.target.index))
    }
}

/// Hooks for perturbing a run without touching the control design.
pub trait Disturbance {
    /// Called before every integration step with the Hamiltonian that
    /// actually drives the state.
    fn before_step(&mut self, _step: usize, _h: &mut TridiagonalHamiltonian) {}

    /// Applied to the raw feedback fields before pulse shaping.
    fn scale_fields(&self, _fields: &mut [f64]) {}
}

/// No perturbation at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct Undisturbed;

impl Disturbance for Undisturbed {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    TMax,
    FidelityTarget,
    FieldFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub lyapunov: Vec<f64>,
    /// `fields[k][j]`: applied field of control `k` at sample `j`.
    pub fields: Vec<Vec<f64>>,
    /// `⟨M|ψ(t)⟩`.
    pub end_amplitude: Vec<C64>,
    /// Largest pre-renormalization drift since the previous sample.
    pub norm_error: Vec<f64>,
    pub terminated_by: TerminatedBy,
    pub steps: usize,
    pub renormalizations: usize,
    pub target: TargetSelection,
    pub final_state: StateVector,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a record always holds the initial sample")
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("a record always holds the initial sample")
    }

    /// Fidelity at the last sample not later than `t`.
    pub fn fidelity_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t + 1e-9);
        self.fidelity[idx.saturating_sub(1)]
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Closed loop on the nominal chain from the excitation at `initial_site`.
pub fn run_transfer(
    spec: &ChainSpec,
    setup: &ControlSetup,
    integration: &Integration,
    initial_site: usize,
) -> Result<TrajectoryRecord> {
    let design = TransferDesign::new(spec, setup)?;
    if initial_site == 0 || initial_site > spec.m() {
        return Err(Error::IndexOutOfRange { what: "initial site", index: initial_site, max: spec.m() });
    }
    run_closed_loop(
        &design,
        design.h0.clone(),
        integration,
        StateVector::site(spec.m(), initial_site),
        &mut Undisturbed,
    )
}

/// Closed loop with fields from `design` driving the state under `actual`.
pub fn run_closed_loop(
    design: &TransferDesign,
    mut actual: TridiagonalHamiltonian,
    integration: &Integration,
    initial: StateVector,
    disturbance: &mut dyn Disturbance,
) -> Result<TrajectoryRecord> {
    integration.validate()?;
    let m = design.m();
    if actual.dim() != m || initial.dim() != m {
        return Err(Error::DimensionMismatch { what: "state or Hamiltonian", expected: m, found: actual.dim().min(initial.dim()) });
    }
    let setup = &design.setup;
    let term = setup.termination;
    let dt = integration.dt;
    let stride = integration.record_stride;
    let total_steps = (term.t_max / dt).round() as usize;
    let n_controls = design.controls.len();

    let mut state = initial;
    let mut stepper = Stepper::new(m);
    let mut coeffs = vec![ZERO; m];
    let mut weighted = vec![ZERO; m];
    let mut g = vec![0.0; n_controls];
    let mut raw = vec![0.0; n_controls];
    let mut applied = vec![0.0; n_controls];

    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        fidelity: Vec::new(),
        lyapunov: Vec::new(),
        fields: vec![Vec::new(); n_controls],
        end_amplitude: Vec::new(),
        norm_error: Vec::new(),
        terminated_by: TerminatedBy::TMax,
        steps: 0,
        renormalizations: 0,
        target: design.target,
        final_state: state.clone(),
    };

    let mut drift_since_sample = 0.0f64;
    let mut quiet_samples = 0usize;
    let mut step_idx = 0usize;

    loop {
        let t = step_idx as f64 * dt;
        disturbance.before_step(step_idx, &mut actual);

        design.p.coefficients(state.amplitudes(), &mut coeffs);
        for ((w, c), &p) in weighted.iter_mut().zip(&coeffs).zip(design.p.weights()) {
            *w = c * p;
        }
        commutator_expectations_sparse(state.amplitudes(), &weighted, &design.p, &design.controls, &mut g);
        for k in 0..n_controls {
            raw[k] = -setup.gains[k] * g[k];
        }
        disturbance.scale_fields(&mut raw);
        for k in 0..n_controls {
            applied[k] = setup.pulse.shape(raw[k]);
        }

        let end = state.amplitude(m);
        let fidelity = averaged_fidelity(end.norm().min(1.0))?;
        let reached = term.fidelity_target.is_some_and(|target| fidelity >= target);
        let at_end = step_idx >= total_steps;

        if step_idx % stride == 0 || reached || at_end {
            let v: f64 = coeffs.iter().zip(design.p.weights()).map(|(c, w)| c.norm_sqr() * w).sum();
            rec.times.push(t);
            rec.fidelity.push(fidelity);
            rec.lyapunov.push(v);
            for k in 0..n_controls {
                rec.fields[k].push(applied[k]);
            }
            rec.end_amplitude.push(end);
            rec.norm_error.push(drift_since_sample);
            drift_since_sample = 0.0;

            if let Some(floor) = term.field_floor {
                if raw.iter().all(|f| f.abs() < floor) {
                    quiet_samples += 1;
                } else {
                    quiet_samples = 0;
                }
                if quiet_samples >= FIELD_FLOOR_SAMPLES {
                    rec.terminated_by = TerminatedBy::FieldFloor;
                    break;
                }
            }
        }
        if reached {
            rec.terminated_by = TerminatedBy::FidelityTarget;
            break;
        }
        if at_end {
            rec.terminated_by = TerminatedBy::TMax;
            break;
        }

        let info = stepper.step(&mut state, &actual, &design.controls, &applied, dt);
        if !info.drift.is_finite() {
            return Err(Error::BlowUp { time: t + dt });
        }
        drift_since_sample = drift_since_sample.max(info.drift);
        rec.renormalizations += info.renormalized as usize;
        step_idx += 1;
    }

    rec.steps = step_idx;
    rec.final_state = state;
    Ok(rec)
}
