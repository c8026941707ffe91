//! Periodic chain descriptions and the single-excitation Hamiltonian.
//!
//! Sites and bonds are 1-indexed at every public boundary: site `m` is the
//! basis state with the excitation on spin `m`, bond `m` couples sites `m`
//! and `m + 1`. Internal storage is 0-indexed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// A periodic chain of `m` spins with per-site Larmor frequencies and
/// nearest-neighbour couplings repeating with period `period`.
///
/// Overrides are applied after pattern expansion and replace the pattern
/// value for one site or bond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChainSpec", into = "RawChainSpec")]
pub struct ChainSpec {
    m: usize,
    period: usize,
    omega_pattern: Vec<f64>,
    coupling_pattern: Vec<f64>,
    omega_overrides: BTreeMap<usize, f64>,
    coupling_overrides: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChainSpec {
    m: usize,
    period: usize,
    omega_pattern: Vec<f64>,
    coupling_pattern: Vec<f64>,
    #[serde(default)]
    omega_overrides: BTreeMap<usize, f64>,
    #[serde(default)]
    coupling_overrides: BTreeMap<usize, f64>,
}

impl TryFrom<RawChainSpec> for ChainSpec {
    type Error = Error;

    fn try_from(raw: RawChainSpec) -> Result<Self> {
        let mut spec = ChainSpec::new(raw.m, raw.period, raw.omega_pattern, raw.coupling_pattern)?;
        for (site, value) in raw.omega_overrides {
            spec = spec.with_omega_override(site, value)?;
        }
        for (bond, value) in raw.coupling_overrides {
            spec = spec.with_coupling_override(bond, value)?;
        }
        Ok(spec)
    }
}

impl From<ChainSpec> for RawChainSpec {
    fn from(spec: ChainSpec) -> Self {
        RawChainSpec {
            m: spec.m,
            period: spec.period,
            omega_pattern: spec.omega_pattern,
            coupling_pattern: spec.coupling_pattern,
            omega_overrides: spec.omega_overrides,
            coupling_overrides: spec.coupling_overrides,
        }
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index: index + 1 }),
        None => Ok(()),
    }
}

impl ChainSpec {
    pub fn new(
        m: usize,
        period: usize,
        omega_pattern: Vec<f64>,
        coupling_pattern: Vec<f64>,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::ChainTooShort(m));
        }
        if period == 0 {
            return Err(Error::ZeroPeriod);
        }
        if omega_pattern.len() != period {
            return Err(Error::DimensionMismatch {
                what: "omega_pattern",
                expected: period,
                found: omega_pattern.len(),
            });
        }
        if coupling_pattern.len() != period {
            return Err(Error::DimensionMismatch {
                what: "coupling_pattern",
                expected: period,
                found: coupling_pattern.len(),
            });
        }
        check_finite("omega_pattern", &omega_pattern)?;
        check_finite("coupling_pattern", &coupling_pattern)?;
        let spec = ChainSpec {
            m,
            period,
            omega_pattern,
            coupling_pattern,
            omega_overrides: BTreeMap::new(),
            coupling_overrides: BTreeMap::new(),
        };
        // Only pattern entries that land on an actual bond matter, and the
        // first period of bonds covers all of them.
        for bond in 1..m.min(period + 1) {
            if spec.effective_coupling(bond) == 0.0 {
                return Err(Error::ZeroCoupling { bond });
            }
        }
        Ok(spec)
    }

    /// The period-3 chain used throughout: Ω = (1.5, 0.75, 0.75),
    /// D = (0.15, 1, 1).
    pub fn standard_period3(m: usize) -> Result<Self> {
        Self::new(m, 3, vec![1.5, 0.75, 0.75], vec![0.15, 1.0, 1.0])
    }

    /// The period-5 variant: Ω = (1.5, 0.75, 0.75, 0.75, 1.5),
    /// D = (0.15, 1, 0.5, 1, 1).
    pub fn standard_period5(m: usize) -> Result<Self> {
        Self::new(
            m,
            5,
            vec![1.5, 0.75, 0.75, 0.75, 1.5],
            vec![0.15, 1.0, 0.5, 1.0, 1.0],
        )
    }

    pub fn with_omega_override(mut self, site: usize, value: f64) -> Result<Self> {
        if site == 0 || site > self.m {
            return Err(Error::IndexOutOfRange { what: "site", index: site, max: self.m });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "omega override", index: site });
        }
        self.omega_overrides.insert(site, value);
        Ok(self)
    }

    pub fn with_coupling_override(mut self, bond: usize, value: f64) -> Result<Self> {
        if bond == 0 || bond >= self.m {
            return Err(Error::IndexOutOfRange { what: "bond", index: bond, max: self.m - 1 });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "coupling override", index: bond });
        }
        if value == 0.0 {
            return Err(Error::ZeroCoupling { bond });
        }
        self.coupling_overrides.insert(bond, value);
        Ok(self)
    }

    /// Same pattern and overrides, different length. Overrides that fall
    /// outside the new chain are dropped.
    pub fn with_length(&self, m: usize) -> Result<Self> {
        let mut spec = Self::new(m, self.period, self.omega_pattern.clone(), self.coupling_pattern.clone())?;
        for (&site, &v) in self.omega_overrides.range(..=m) {
            spec = spec.with_omega_override(site, v)?;
        }
        for (&bond, &v) in self.coupling_overrides.range(..m) {
            spec = spec.with_coupling_override(bond, v)?;
        }
        Ok(spec)
    }

    /// Replace the repeating pattern, keeping length and overrides.
    pub fn with_patterns(&self, omega_pattern: Vec<f64>, coupling_pattern: Vec<f64>) -> Result<Self> {
        let mut spec = Self::new(self.m, omega_pattern.len(), omega_pattern, coupling_pattern)?;
        spec.omega_overrides = self.omega_overrides.clone();
        spec.coupling_overrides = self.coupling_overrides.clone();
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn omega_pattern(&self) -> &[f64] {
        &self.omega_pattern
    }

    pub fn coupling_pattern(&self) -> &[f64] {
        &self.coupling_pattern
    }

    pub fn omega_overrides(&self) -> &BTreeMap<usize, f64> {
        &self.omega_overrides
    }

    pub fn coupling_overrides(&self) -> &BTreeMap<usize, f64> {
        &self.coupling_overrides
    }

    pub fn has_overrides(&self) -> bool {
        !self.omega_overrides.is_empty() || !self.coupling_overrides.is_empty()
    }

    /// Number of complete periods, `n` in `M = n·l + d`.
    pub fn cells(&self) -> usize {
        self.m / self.period
    }

    /// Leftover sites, `d` in `M = n·l + d`.
    pub fn remainder(&self) -> usize {
        self.m % self.period
    }

    /// Larmor frequency at 1-indexed `site`.
    pub fn effective_omega(&self, site: usize) -> f64 {
        assert!(site >= 1 && site <= self.m, "site {site} outside 1..={}", self.m);
        self.omega_overrides
            .get(&site)
            .copied()
            .unwrap_or(self.omega_pattern[(site - 1) % self.period])
    }

    /// Coupling on 1-indexed `bond` (between sites `bond` and `bond + 1`).
    pub fn effective_coupling(&self, bond: usize) -> f64 {
        assert!(bond >= 1 && bond < self.m, "bond {bond} outside 1..{}", self.m);
        self.coupling_overrides
            .get(&bond)
            .copied()
            .unwrap_or(self.coupling_pattern[(bond - 1) % self.period])
    }

    pub fn hamiltonian(&self) -> TridiagonalHamiltonian {
        build_hamiltonian(self)
    }
}

/// Real symmetric tridiagonal matrix in the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

pub fn build_hamiltonian(spec: &ChainSpec) -> TridiagonalHamiltonian {
    let diag = (1..=spec.m()).map(|s| spec.effective_omega(s)).collect();
    let offdiag = (1..spec.m()).map(|b| spec.effective_coupling(b)).collect();
    TridiagonalHamiltonian { diag, offdiag }
}

impl TridiagonalHamiltonian {
    /// Any real tridiagonal pair is accepted here, zero couplings included;
    /// chain validation lives in [`ChainSpec`].
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::ChainTooShort(0));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                what: "offdiag",
                expected: diag.len() - 1,
                found: offdiag.len(),
            });
        }
        check_finite("diag", &diag)?;
        check_finite("offdiag", &offdiag)?;
        Ok(TridiagonalHamiltonian { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Mutable access to the couplings, for disorder that is resampled in
    /// place during a run.
    pub fn offdiag_mut(&mut self) -> &mut [f64] {
        &mut self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// `out = H x` for real vectors.
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// `out = H x` for complex vectors.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i > 0 {
                acc += x[i - 1] * self.offdiag[i - 1];
            }
            if i + 1 < n {
                acc += x[i + 1] * self.offdiag[i];
            }
            out[i] = acc;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            rows[i][i] = self.diag[i];
            if i + 1 < n {
                rows[i][i + 1] = self.offdiag[i];
                rows[i + 1][i] = self.offdiag[i];
            }
        }
        rows
    }

    /// Reads the diagonal and first superdiagonal of a square matrix. Rejects
    /// matrices that are not symmetric tridiagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { what: "dense row", expected: n, found: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                let band = i.abs_diff(j) <= 1;
                if !band && v != 0.0 {
                    return Err(Error::InvalidInput(format!("entry ({}, {}) outside the tridiagonal band", i + 1, j + 1)));
                }
                if v != rows[j][i] {
                    return Err(Error::InvalidInput(format!("entry ({}, {}) breaks symmetry", i + 1, j + 1)));
                }
            }
        }
        let diag = (0..n).map(|i| rows[i][i]).collect();
        let offdiag = (0..n.saturating_sub(1)).map(|i| rows[i][i + 1]).collect();
        Self::new(diag, offdiag)
    }
}
