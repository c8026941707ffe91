//! Lyapunov feedback design: the weight operator `P`, the boundary control
//! Hamiltonians and the feedback law `f_k = −A_k ⟨ψ|i[H_k, P]|ψ⟩`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;
use crate::C64;

/// Which pair of boundary terms the feedback drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Hopping on the first and last bond.
    #[default]
    BoundaryCoupling,
    /// On-site energy of the first and last spin.
    BoundaryField,
}

/// Real symmetric matrix stored as its upper-triangle nonzeros, 0-indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn new(dim: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &entries {
            if i > j || j >= dim {
                return Err(Error::InvalidInput(format!("entry ({i}, {j}) outside the upper triangle of a {dim}x{dim} matrix")));
            }
        }
        Ok(SparseSymmetric { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper-triangle entries `(row, col, value)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Number of nonzero entries of the full matrix.
    pub fn nnz(&self) -> usize {
        self.entries.iter().map(|&(i, j, _)| if i == j { 1 } else { 2 }).sum()
    }

    /// `out += scale · H x`.
    pub fn apply_add(&self, scale: f64, x: &[C64], out: &mut [C64]) {
        for &(i, j, v) in &self.entries {
            let w = scale * v;
            out[i] += x[j] * w;
            if i != j {
                out[j] += x[i] * w;
            }
        }
    }

    /// `⟨x|H|y⟩`.
    pub fn sandwich(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(i, j, v) in &self.entries {
            acc += x[i].conj() * y[j] * v;
            if i != j {
                acc += x[j].conj() * y[i] * v;
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.dim]; self.dim];
        for &(i, j, v) in &self.entries {
            rows[i][j] += v;
            if i != j {
                rows[j][i] += v;
            }
        }
        rows
    }
}

/// The two control Hamiltonians for a chain of `m` sites.
pub fn control_hamiltonians(mode: ControlMode, m: usize) -> Result<Vec<SparseSymmetric>> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("boundary controls need at least 3 sites, got {m}")));
    }
    let pair = match mode {
        ControlMode::BoundaryCoupling => [(0, 1, 1.0), (m - 2, m - 1, 1.0)],
        ControlMode::BoundaryField => [(0, 0, 1.0), (m - 1, m - 1, 1.0)],
    };
    pair.into_iter().map(|e| SparseSymmetric::new(m, vec![e])).collect()
}

/// How the weights of `P` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PRule {
    /// `p_i = λ_i` for every non-target level, `p_f` on the target.
    EigenvalueWeights { p_f: f64 },
    /// Explicit weights in ascending-eigenvalue order; the target slot is
    /// overwritten with `p_f`.
    Custom { p_f: f64, weights: Vec<f64> },
}

impl PRule {
    pub fn p_f(&self) -> f64 {
        match *self {
            PRule::EigenvalueWeights { p_f } | PRule::Custom { p_f, .. } => p_f,
        }
    }
}

/// `P = Σ_i p_i |λ_i⟩⟨λ_i|`, kept in the eigenbasis of the free Hamiltonian.
#[derive(Debug, Clone)]
pub struct POperator {
    basis: Arc<SpectralDecomposition>,
    weights: Vec<f64>,
    target_index: usize,
    /// Eigenvectors row-major (`vectors[i * m + s]`) for the two basis changes.
    vectors: Vec<f64>,
    /// The same entries site-major (`columns[s * m + i]`).
    columns: Vec<f64>,
}

pub fn build_p_operator(dec: Arc<SpectralDecomposition>, target_index: usize, rule: &PRule) -> Result<POperator> {
    let m = dec.dim();
    if target_index >= m {
        return Err(Error::IndexOutOfRange { what: "target index", index: target_index, max: m - 1 });
    }
    let mut weights = match rule {
        PRule::EigenvalueWeights { .. } => dec.eigenvalues().to_vec(),
        PRule::Custom { weights, .. } => {
            if weights.len() != m {
                return Err(Error::DimensionMismatch { what: "custom weights", expected: m, found: weights.len() });
            }
            weights.clone()
        }
    };
    let p_f = rule.p_f();
    if !p_f.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("P weights must be finite".into()));
    }
    weights[target_index] = p_f;
    for (index, &weight) in weights.iter().enumerate() {
        if index != target_index && p_f >= weight {
            return Err(Error::OrderingViolation { p_f, index, weight });
        }
    }
    let vectors: Vec<f64> = dec.eigenvectors().iter().flatten().copied().collect();
    let mut columns = vec![0.0; m * m];
    for i in 0..m {
        for s in 0..m {
            columns[s * m + i] = vectors[i * m + s];
        }
    }
    Ok(POperator { basis: dec, weights, target_index, vectors, columns })
}

impl POperator {
    pub fn basis(&self) -> &SpectralDecomposition {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Eigenbasis coefficients `⟨λ_i|ψ⟩`.
    pub fn coefficients(&self, psi: &[C64], out: &mut [C64]) {
        let m = self.dim();
        for (i, c) in out.iter_mut().enumerate() {
            let row = &self.vectors[i * m..(i + 1) * m];
            *c = row.iter().zip(psi).map(|(&u, &x)| x * u).sum();
        }
    }

    /// `out = P ψ`; `scratch` holds the eigenbasis coefficients afterwards.
    pub fn apply(&self, psi: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let m = self.dim();
        self.coefficients(psi, scratch);
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for i in 0..m {
            let c = scratch[i] * self.weights[i];
            let row = &self.vectors[i * m..(i + 1) * m];
            for (o, &u) in out.iter_mut().zip(row) {
                *o += c * u;
            }
        }
    }

    /// `(P ψ)_s` at 0-indexed `site`, from the weighted coefficients
    /// `p_i ⟨λ_i|ψ⟩`.
    pub fn component(&self, weighted: &[C64], site: usize) -> C64 {
        let m = self.dim();
        self.columns[site * m..(site + 1) * m].iter().zip(weighted).map(|(&u, &c)| c * u).sum()
    }

    /// `⟨ψ|P|ψ⟩` for a normalized `ψ`.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let mut coeffs = vec![C64::new(0.0, 0.0); self.dim()];
        self.coefficients(psi, &mut coeffs);
        coeffs.iter().zip(&self.weights).map(|(c, w)| c.norm_sqr() * w).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut rows = vec![vec![0.0; m]; m];
        for (u, &p) in self.basis.eigenvectors().iter().zip(&self.weights) {
            for r in 0..m {
                for c in 0..m {
                    rows[r][c] += p * u[r] * u[c];
                }
            }
        }
        rows
    }
}

/// `g_k = ⟨ψ|i[H_k, P]|ψ⟩ = −2 Im⟨ψ|H_k P|ψ⟩` for each control, given
/// `p_psi = P ψ`.
pub fn commutator_expectations(psi: &[C64], p_psi: &[C64], controls: &[SparseSymmetric]) -> Vec<f64> {
    controls.iter().map(|h| -2.0 * h.sandwich(psi, p_psi).im).collect()
}

/// Same as [`commutator_expectations`] but only touches the entries of `P ψ`
/// the controls need. `weighted[i] = p_i ⟨λ_i|ψ⟩`.
pub fn commutator_expectations_sparse(
    psi: &[C64],
    weighted: &[C64],
    p: &POperator,
    controls: &[SparseSymmetric],
    out: &mut [f64],
) {
    for (h, g) in controls.iter().zip(out.iter_mut()) {
        let mut z = C64::new(0.0, 0.0);
        for &(i, j, v) in h.entries() {
            z += psi[i].conj() * p.component(weighted, j) * v;
            if i != j {
                z += psi[j].conj() * p.component(weighted, i) * v;
            }
        }
        *g = -2.0 * z.im;
    }
}

/// Feedback fields `f_k = −A_k g_k`.
pub fn control_fields(psi: &[C64], p: &POperator, controls: &[SparseSymmetric], gains: &[f64]) -> Vec<f64> {
    let m = p.dim();
    let mut scratch = vec![C64::new(0.0, 0.0); m];
    let mut p_psi = vec![C64::new(0.0, 0.0); m];
    p.apply(psi, &mut scratch, &mut p_psi);
    commutator_expectations(psi, &p_psi, controls)
        .into_iter()
        .zip(gains)
        .map(|(g, a)| -a * g)
        .collect()
}

/// Bang-bang replacement of a continuous field: `±amplitude` by sign, and
/// zero exactly at zero.
pub fn square_wave_shape(field: f64, amplitude: f64) -> f64 {
    if field > 0.0 {
        amplitude
    } else if field < 0.0 {
        -amplitude
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShaping {
    #[default]
    Continuous,
    SquareWave { amplitude: f64 },
}

impl PulseShaping {
    pub fn shape(&self, field: f64) -> f64 {
        match *self {
            PulseShaping::Continuous => field,
            PulseShaping::SquareWave { amplitude } => square_wave_shape(field, amplitude),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Termination {
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_target: Option<f64>,
    /// Stop once every raw feedback field stays below this for
    /// [`FIELD_FLOOR_SAMPLES`] consecutive recorded samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_floor: Option<f64>,
}

pub const FIELD_FLOOR_SAMPLES: usize = 100;

impl Default for Termination {
    fn default() -> Self {
        Termination { t_max: 1000.0, fidelity_target: None, field_floor: None }
    }
}

fn default_gains() -> Vec<f64> {
    vec![1.0, 1.0]
}

fn default_p_f() -> f64 {
    -3.0
}

/// Everything needed to turn a chain into a closed-loop transfer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSetup {
    #[serde(default)]
    pub mode: ControlMode,
    #[serde(default = "default_gains")]
    pub gains: Vec<f64>,
    #[serde(default = "default_p_f")]
    pub p_f: f64,
    /// Explicit P weights; `None` selects the eigenvalue rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_weights: Option<Vec<f64>>,
    /// Site whose occupation selects the target eigenstate; defaults to M.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_site: Option<usize>,
    #[serde(default)]
    pub pulse: PulseShaping,
    #[serde(default)]
    pub termination: Termination,
}

impl Default for ControlSetup {
    fn default() -> Self {
        ControlSetup {
            mode: ControlMode::BoundaryCoupling,
            gains: default_gains(),
            p_f: default_p_f(),
            p_weights: None,
            target_site: None,
            pulse: PulseShaping::Continuous,
            termination: Termination::default(),
        }
    }
}

impl ControlSetup {
    pub fn p_rule(&self) -> PRule {
        match &self.p_weights {
            None => PRule::EigenvalueWeights { p_f: self.p_f },
            Some(w) => PRule::Custom { p_f: self.p_f, weights: w.clone() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.len() != 2 {
            return Err(Error::DimensionMismatch { what: "gains", expected: 2, found: self.gains.len() });
        }
        if let Some(bad) = self.gains.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidInput(format!("control gains must be positive, got {bad}")));
        }
        if let PulseShaping::SquareWave { amplitude } = self.pulse {
            if !(amplitude.is_finite() && amplitude > 0.0) {
                return Err(Error::InvalidInput(format!("square-wave amplitude must be positive, got {amplitude}")));
            }
        }
        let t = &self.termination;
        if !(t.t_max.is_finite() && t.t_max > 0.0) {
            return Err(Error::InvalidInput(format!("t_max must be positive, got {}", t.t_max)));
        }
        if let Some(f) = t.fidelity_target {
            if !(0.5..=1.0).contains(&f) {
                return Err(Error::InvalidInput(format!("fidelity target {f} outside [0.5, 1]")));
            }
        }
        if let Some(floor) = t.field_floor {
            if !(floor.is_finite() && floor > 0.0) {
                return Err(Error::InvalidInput(format!("field floor must be positive, got {floor}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;
    use crate::spectral::{eigendecompose, select_target};

    fn standard_p() -> POperator {
        let dec = Arc::new(eigendecompose(&ChainSpec::standard_period3(29).unwrap().hamiltonian()).unwrap());
        let target = select_target(&dec, 29);
        build_p_operator(dec, target.index, &PRule::EigenvalueWeights { p_f: -3.0 }).unwrap()
    }

    #[test]
    fn boundary_coupling_controls() {
        let hs = control_hamiltonians(ControlMode::BoundaryCoupling, 29).unwrap();
        assert_eq!(hs.len(), 2);
        let d0 = hs[0].to_dense();
        let d1 = hs[1].to_dense();
        assert_eq!(hs[0].nnz(), 2);
        assert_eq!(hs[1].nnz(), 2);
        assert_eq!((d0[0][1], d0[1][0]), (1.0, 1.0));
        assert_eq!((d1[27][28], d1[28][27]), (1.0, 1.0));
    }

    #[test]
    fn boundary_field_controls() {
        let hs = control_hamiltonians(ControlMode::BoundaryField, 29).unwrap();
        assert_eq!(hs[0].entries(), &[(0, 0, 1.0)]);
        assert_eq!(hs[1].entries(), &[(28, 28, 1.0)]);
        assert!(control_hamiltonians(ControlMode::BoundaryField, 2).is_err());
    }

    #[test]
    fn p_weights_follow_eigenvalues() {
        let p = standard_p();
        let dec = p.basis();
        for (i, (&w, &l)) in p.weights().iter().zip(dec.eigenvalues()).enumerate() {
            if i == p.target_index() {
                assert_eq!(w, -3.0);
                assert!((l - 0.7211126).abs() < 1e-6);
            } else {
                assert_eq!(w, l);
            }
        }
    }

    #[test]
    fn ordering_guard() {
        let dec = Arc::new(eigendecompose(&ChainSpec::standard_period3(29).unwrap().hamiltonian()).unwrap());
        let lowest = dec.eigenvalues()[0];
        assert!(lowest < 0.0);
        let target = select_target(&dec, 29).index;
        match build_p_operator(dec, target, &PRule::EigenvalueWeights { p_f: 0.0 }) {
            Err(Error::OrderingViolation { index, weight, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(weight, lowest);
            }
            other => panic!("expected ordering violation, got {other:?}"),
        }
    }

    #[test]
    fn square_wave() {
        assert_eq!(square_wave_shape(0.3, 0.05), 0.05);
        assert_eq!(square_wave_shape(-1e-9, 0.05), -0.05);
        assert_eq!(square_wave_shape(0.0, 0.05), 0.0);
    }

    #[test]
    fn fields_vanish_on_eigenstates() {
        let p = standard_p();
        let hs = control_hamiltonians(ControlMode::BoundaryCoupling, 29).unwrap();
        for u in p.basis().eigenvectors() {
            let psi: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
            for f in control_fields(&psi, &p, &hs, &[1.0, 1.0]) {
                assert!(f.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fields_scale_with_gain() {
        let p = standard_p();
        let hs = control_hamiltonians(ControlMode::BoundaryCoupling, 29).unwrap();
        let psi: Vec<C64> = (0..29).map(|i| C64::from_polar(1.0 / 29f64.sqrt(), 0.37 * i as f64)).collect();
        let f1 = control_fields(&psi, &p, &hs, &[1.0, 1.0]);
        let f2 = control_fields(&psi, &p, &hs, &[2.0, 2.0]);
        assert!(f1[0].abs() > 1e-3);
        for (a, b) in f1.iter().zip(&f2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn setup_validation() {
        let mut setup = ControlSetup::default();
        assert!(setup.validate().is_ok());
        setup.gains = vec![1.0, 0.0];
        assert!(setup.validate().is_err());
        setup = ControlSetup { pulse: PulseShaping::SquareWave { amplitude: -0.05 }, ..Default::default() };
        assert!(setup.validate().is_err());
    }

    #[test]
    fn setup_json_layout() {
        let text = r#"{"mode": "boundary_field", "gains": [1, 1], "p_f": -3,
            "pulse": {"kind": "square_wave", "amplitude": 0.05},
            "termination": {"t_max": 5000, "fidelity_target": 0.96}}"#;
        let setup: ControlSetup = serde_json::from_str(text).unwrap();
        assert_eq!(setup.mode, ControlMode::BoundaryField);
        assert_eq!(setup.pulse, PulseShaping::SquareWave { amplitude: 0.05 });
        assert_eq!(setup.termination.fidelity_target, Some(0.96));
        assert_eq!(setup.termination.field_floor, None);
    }
}
