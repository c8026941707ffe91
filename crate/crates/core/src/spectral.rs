//! Eigenpairs of chain Hamiltonians.
//!
//! The numeric path is an implicit-shift QL iteration on the tridiagonal
//! matrix. For period-3 chains with `M = 3n + 2` the spectrum is also known
//! in closed form: `3n` band states from a per-`k` cubic secular equation and
//! two boundary states from a quadratic. The two routes are independent and
//! are cross-checked in the tests.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, TridiagonalHamiltonian};
use crate::dynamics::averaged_fidelity;
use crate::error::{Error, Result};

const QL_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Numeric,
    AnalyticPeriod3,
}

/// Ascending eigenvalues with orthonormal, phase-fixed real eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` is the vector for `eigenvalues[i]`, site-indexed.
    eigenvectors: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl SpectralDecomposition {
    /// Sorts, normalizes and phase-fixes the given pairs.
    pub fn from_pairs(mut pairs: Vec<(f64, Vec<f64>)>, provenance: Provenance) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (eigenvalues, eigenvectors) = pairs
            .into_iter()
            .map(|(value, mut v)| {
                normalize(&mut v);
                fix_phase(&mut v);
                (value, v)
            })
            .unzip();
        SpectralDecomposition { eigenvalues, eigenvectors, provenance }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, index: usize) -> &[f64] {
        &self.eigenvectors[index]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Largest `‖H u_i − λ_i u_i‖_∞ / (1 + |λ_i|)` over all pairs.
    pub fn max_scaled_residual(&self, h: &TridiagonalHamiltonian) -> f64 {
        let mut hu = vec![0.0; self.dim()];
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&lambda, u)| {
                h.apply_real(u, &mut hu);
                let r = hu.iter().zip(u).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
                r / (1.0 + lambda.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|⟨u_i|u_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dot: f64 = self.eigenvectors[i].iter().zip(&self.eigenvectors[j]).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Largest-magnitude component positive. Components within a relative 1e-9
/// of the maximum count as tied and the lowest site wins, so mirror-symmetric
/// vectors get the same sign from either solver.
fn fix_phase(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full eigendecomposition by implicit-shift QL with eigenvector
/// accumulation.
pub fn eigendecompose(h: &TridiagonalHamiltonian) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let mut d = h.diag().to_vec();
    let mut e = h.offdiag().to_vec();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        })
        .collect();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_MAX_SWEEPS {
                return Err(Error::NoConvergence { size: n });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut(i + 1);
                let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                for k in 0..n {
                    let t = zi1[k];
                    zi1[k] = s * zi[k] + c * t;
                    zi[k] = c * zi[k] - s * t;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    Ok(SpectralDecomposition::from_pairs(d.into_iter().zip(z).collect(), Provenance::Numeric))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

struct Period3 {
    n: usize,
    omega: [f64; 3],
    coupling: [f64; 3],
}

impl Period3 {
    fn from_spec(spec: &ChainSpec) -> Result<Self> {
        let m = spec.m();
        if spec.period() != 3 || m % 3 != 2 || m < 5 || spec.has_overrides() {
            return Err(Error::UnsupportedShape { period: spec.period(), m });
        }
        let o = spec.omega_pattern();
        let c = spec.coupling_pattern();
        Ok(Period3 { n: m / 3, omega: [o[0], o[1], o[2]], coupling: [c[0], c[1], c[2]] })
    }

    fn secular(&self, lambda: f64, cos_theta: f64) -> f64 {
        let [o1, o2, o3] = self.omega;
        let [d1, d2, d3] = self.coupling;
        (lambda - o1) * (lambda - o2) * (lambda - o3)
            - (lambda - o2) * d3 * d3
            - (lambda - o1) * d2 * d2
            - (lambda - o3) * d1 * d1
            - 2.0 * d1 * d2 * d3 * cos_theta
    }

    /// The three real roots of the secular cubic, bracketed by its critical
    /// points and refined by bisection.
    fn band_roots(&self, k: usize) -> Result<[f64; 3]> {
        let [o1, o2, o3] = self.omega;
        let [d1, d2, d3] = self.coupling;
        let cos_theta = (PI * k as f64 / (self.n + 1) as f64).cos();
        // monic cubic λ³ + a2 λ² + a1 λ + a0; only a2, a1 matter for the
        // critical points
        let a2 = -(o1 + o2 + o3);
        let a1 = o1 * o2 + o1 * o3 + o2 * o3 - d1 * d1 - d2 * d2 - d3 * d3;
        let disc = a2 * a2 - 3.0 * a1;
        if disc <= 0.0 {
            return Err(Error::RootFinding { k });
        }
        let sq = disc.sqrt();
        let c1 = (-a2 - sq) / 3.0;
        let c2 = (-a2 + sq) / 3.0;
        let reach = 1.0 + d1.abs() + d2.abs() + d3.abs();
        let lo = o1.min(o2).min(o3) - reach;
        let hi = o1.max(o2).max(o3) + reach;
        let f = |x: f64| self.secular(x, cos_theta);
        let scale = 1.0 + hi.abs().max(lo.abs()).powi(3);
        let mut roots = [0.0; 3];
        for (slot, (a, b)) in roots.iter_mut().zip([(lo, c1), (c1, c2), (c2, hi)]) {
            *slot = bisect(&f, a, b, scale).ok_or(Error::RootFinding { k })?;
        }
        Ok(roots)
    }

    fn band_vector(&self, lambda: f64, k: usize) -> Result<Vec<f64>> {
        let [o1, o2, _] = self.omega;
        let [d1, d2, d3] = self.coupling;
        let n = self.n;
        let det = (lambda - o1) * (lambda - o2) - d1 * d1;
        if det.abs() < 1e-12 {
            return Err(Error::Degenerate(format!(
                "band eigenvalue {lambda} for k = {k} coincides with a boundary eigenvalue"
            )));
        }
        // third-sublattice amplitudes c_1..c_n, padded with c_0 = c_{n+1} = 0
        let mut c = vec![0.0; n + 2];
        for i in 1..=n {
            c[i] = (PI * (i * k) as f64 / (n + 1) as f64).sin();
        }
        let mut u = vec![0.0; 3 * n + 2];
        for i in 1..=n + 1 {
            let a = ((lambda - o2) * d3 * c[i - 1] + d1 * d2 * c[i]) / det;
            let b = (d1 * d3 * c[i - 1] + (lambda - o1) * d2 * c[i]) / det;
            u[3 * i - 3] = a;
            u[3 * i - 2] = b;
            if i <= n {
                u[3 * i - 1] = c[i];
            }
        }
        Ok(u)
    }
}

/// Sign-change bisection on `[a, b]`. A root sitting on an endpoint (a
/// double root at a critical point) is accepted when `|f|` there is at
/// rounding level.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, scale: f64) -> Option<f64> {
    let tiny = 64.0 * f64::EPSILON * scale;
    let (mut fa, fb) = (f(a), f(b));
    if fa.abs() <= tiny {
        return Some(a);
    }
    if fb.abs() <= tiny {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Closed-form eigenpairs of an un-overridden period-3 chain with
/// `M = 3n + 2`.
pub fn analytic_eigenpairs_period3(spec: &ChainSpec) -> Result<SpectralDecomposition> {
    let p3 = Period3::from_spec(spec)?;
    let mut pairs = Vec::with_capacity(spec.m());
    for k in 1..=p3.n {
        for lambda in p3.band_roots(k)? {
            pairs.push((lambda, p3.band_vector(lambda, k)?));
        }
    }
    for branch in [Branch::Minus, Branch::Plus] {
        pairs.push(boundary_eigenpair(spec, branch)?);
    }
    Ok(SpectralDecomposition::from_pairs(pairs, Provenance::AnalyticPeriod3))
}

/// One of the two boundary-localized eigenpairs of a period-3 chain, built
/// from the cell-to-cell recursion: the third sublattice is empty and the
/// first two grow (or decay) geometrically.
pub fn boundary_eigenpair(spec: &ChainSpec, branch: Branch) -> Result<(f64, Vec<f64>)> {
    let p3 = Period3::from_spec(spec)?;
    let [o1, o2, _] = p3.omega;
    let [d1, d2, d3] = p3.coupling;
    let root = ((o1 - o2).powi(2) + 4.0 * d1 * d1).sqrt();
    let lambda = match branch {
        Branch::Plus => 0.5 * (o1 + o2 + root),
        Branch::Minus => 0.5 * (o1 + o2 - root),
    };
    let detuning = lambda - o2;
    if detuning.abs() < 1e-12 {
        return Err(Error::Degenerate(format!("λ_v − Ω2 = {detuning:e} for the {branch:?} branch")));
    }
    let within = d1 / detuning;
    let across = -d1 * d2 / (detuning * d3);
    let mut u = vec![0.0; 3 * p3.n + 2];
    let mut a = 1.0;
    for i in 0..=p3.n {
        u[3 * i] = a;
        u[3 * i + 1] = within * a;
        a *= across;
    }
    let (first, last) = (u[0].abs(), u[3 * p3.n].abs());
    // keep the dominant end at order one before normalizing
    if last > first {
        u.iter_mut().for_each(|x| *x /= last);
    }
    normalize(&mut u);
    fix_phase(&mut u);
    Ok((lambda, u))
}

/// The eigenstate chosen as transfer target at a given site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSelection {
    pub index: usize,
    pub eigenvalue: f64,
    /// `|⟨site|λ_f⟩|²`.
    pub end_occupation: f64,
    /// Averaged fidelity reached if the state sat exactly on the target.
    pub fidelity_ceiling: f64,
}

/// Picks the eigenvector with the largest weight on 1-indexed `site`. Exact
/// ties go to the smaller eigenvalue.
pub fn select_target(dec: &SpectralDecomposition, site: usize) -> TargetSelection {
    assert!(site >= 1 && site <= dec.dim(), "site {site} outside 1..={}", dec.dim());
    let mut best = 0;
    let mut best_occ = -1.0;
    for (i, v) in dec.eigenvectors().iter().enumerate() {
        let occ = v[site - 1] * v[site - 1];
        if occ > best_occ {
            best = i;
            best_occ = occ;
        }
    }
    let end_occupation = best_occ.min(1.0);
    TargetSelection {
        index: best,
        eigenvalue: dec.eigenvalues()[best],
        end_occupation,
        fidelity_ceiling: averaged_fidelity(end_occupation.sqrt()).expect("occupation is within [0, 1]"),
    }
}

/// End-site occupation of the target state over a grid of `(D1, D2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationGrid {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// `values[i][j]` for `d1[i]`, `d2[j]`.
    pub values: Vec<Vec<f64>>,
}

pub fn occupation_scan(
    template: &ChainSpec,
    d1_grid: &[f64],
    d2_grid: &[f64],
    site: usize,
) -> Result<OccupationGrid> {
    if d1_grid.is_empty() || d2_grid.is_empty() {
        return Err(Error::InvalidInput("occupation scan grids must be nonempty".into()));
    }
    if template.period() < 2 {
        return Err(Error::InvalidInput("occupation scan needs a period of at least 2".into()));
    }
    if site == 0 || site > template.m() {
        return Err(Error::IndexOutOfRange { what: "site", index: site, max: template.m() });
    }
    let values = d1_grid
        .par_iter()
        .map(|&d1| {
            d2_grid
                .iter()
                .map(|&d2| {
                    let mut couplings = template.coupling_pattern().to_vec();
                    couplings[0] = d1;
                    couplings[1] = d2;
                    let spec = template.with_patterns(template.omega_pattern().to_vec(), couplings)?;
                    let dec = eigendecompose(&spec.hamiltonian())?;
                    Ok(select_target(&dec, site).end_occupation)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OccupationGrid { d1: d1_grid.to_vec(), d2: d2_grid.to_vec(), values })
}

/// Isolation of a boundary-localized level within the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLevel {
    pub site: usize,
    pub index: usize,
    pub eigenvalue: f64,
    pub occupation: f64,
    /// Distance to the nearest other eigenvalue.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// Boundary levels at the first and the last site.
    pub boundary: [BoundaryLevel; 2],
}

impl SpectrumReport {
    pub fn min_gap(&self) -> f64 {
        self.boundary[0].gap.min(self.boundary[1].gap)
    }
}

pub fn spectrum_report(h: &TridiagonalHamiltonian) -> Result<SpectrumReport> {
    let dec = eigendecompose(h)?;
    Ok(spectrum_report_from(&dec))
}

pub fn spectrum_report_from(dec: &SpectralDecomposition) -> SpectrumReport {
    let values = dec.eigenvalues();
    let level = |site: usize| {
        let target = select_target(dec, site);
        let gap = values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != target.index)
            .map(|(_, v)| (v - target.eigenvalue).abs())
            .fold(f64::INFINITY, f64::min);
        BoundaryLevel {
            site,
            index: target.index,
            eigenvalue: target.eigenvalue,
            occupation: target.end_occupation,
            gap,
        }
    };
    SpectrumReport { eigenvalues: values.to_vec(), boundary: [level(1), level(dec.dim())] }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard29() -> ChainSpec {
        ChainSpec::standard_period3(29).unwrap()
    }

    #[test]
    fn two_by_two_closed_form() {
        let (o1, o2, d) = (0.4, -1.1, 0.3);
        let h = TridiagonalHamiltonian::new(vec![o1, o2], vec![d]).unwrap();
        let dec = eigendecompose(&h).unwrap();
        let root = ((o1 - o2) * (o1 - o2) + 4.0 * d * d).sqrt();
        assert!((dec.eigenvalues()[0] - 0.5 * (o1 + o2 - root)).abs() < 1e-14);
        assert!((dec.eigenvalues()[1] - 0.5 * (o1 + o2 + root)).abs() < 1e-14);
        assert_eq!(dec.provenance(), Provenance::Numeric);
    }

    #[test]
    fn diagonal_matrix_gives_coordinate_vectors() {
        let h = TridiagonalHamiltonian::new(vec![3.0, -1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let dec = eigendecompose(&h).unwrap();
        assert_eq!(dec.eigenvalues(), &[-1.0, 2.0, 3.0]);
        assert_eq!(dec.eigenvector(0), &[0.0, 1.0, 0.0]);
        assert_eq!(dec.eigenvector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(dec.eigenvector(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn phase_convention() {
        let dec = eigendecompose(&standard29().hamiltonian()).unwrap();
        for v in dec.eigenvectors() {
            let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let lead = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(v[lead] > 0.0);
        }
    }

    #[test]
    fn boundary_eigenvalues_from_quadratic() {
        let (minus, _) = boundary_eigenpair(&standard29(), Branch::Minus).unwrap();
        let (plus, _) = boundary_eigenpair(&standard29(), Branch::Plus).unwrap();
        let root = 0.6525f64.sqrt();
        assert!((minus - 0.5 * (2.25 - root)).abs() < 1e-15);
        assert!((plus - 0.5 * (2.25 + root)).abs() < 1e-15);
        assert!((minus - 0.7211126).abs() < 1e-7);
        assert!((plus - 1.5288874).abs() < 1e-7);
    }

    #[test]
    fn boundary_localization_direction() {
        let spec = standard29();
        let (_, minus) = boundary_eigenpair(&spec, Branch::Minus).unwrap();
        let (_, plus) = boundary_eigenpair(&spec, Branch::Plus).unwrap();
        assert!(minus[28].abs() > 0.9);
        assert!(plus[0].abs() > 0.9);
        // per-cell growth ratios
        let r_minus = minus[3].abs() / minus[0].abs();
        let r_plus = plus[3].abs() / plus[0].abs();
        assert!((r_minus - 5.1926).abs() < 1e-4, "{r_minus}");
        assert!((r_plus - 0.1926).abs() < 1e-4, "{r_plus}");
    }

    #[test]
    fn boundary_decoupled_limit() {
        // Ω1 ≠ Ω2 with D1 → 0: the upper branch collapses onto site 1
        let spec = ChainSpec::new(8, 3, vec![1.5, 0.75, 0.75], vec![1e-7, 1.0, 1.0]).unwrap();
        let (lambda, u) = boundary_eigenpair(&spec, Branch::Plus).unwrap();
        assert!((lambda - 1.5).abs() < 1e-12);
        assert!((u[0] - 1.0).abs() < 1e-12);
        assert!(u[1..].iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn boundary_degenerate_parameters() {
        // Ω1 = Ω2 with D1 at rounding level makes λ_v − Ω2 vanish
        let spec = ChainSpec::new(5, 3, vec![0.75, 0.75, 0.75], vec![1e-14, 1.0, 1.0]).unwrap();
        assert!(matches!(boundary_eigenpair(&spec, Branch::Minus), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unsupported_shapes() {
        let p5 = ChainSpec::standard_period5(47).unwrap();
        assert!(matches!(analytic_eigenpairs_period3(&p5), Err(Error::UnsupportedShape { .. })));
        let wrong_len = ChainSpec::standard_period3(30).unwrap();
        assert!(matches!(analytic_eigenpairs_period3(&wrong_len), Err(Error::UnsupportedShape { .. })));
        let overridden = standard29().with_coupling_override(4, 1.01).unwrap();
        assert!(matches!(analytic_eigenpairs_period3(&overridden), Err(Error::UnsupportedShape { .. })));
    }

    #[test]
    fn analytic_count_and_distinctness() {
        let dec = analytic_eigenpairs_period3(&standard29()).unwrap();
        assert_eq!(dec.dim(), 29);
        assert_eq!(dec.provenance(), Provenance::AnalyticPeriod3);
        for w in dec.eigenvalues().windows(2) {
            assert!(w[1] - w[0] > 1e-6);
        }
        assert!(dec.max_scaled_residual(&standard29().hamiltonian()) < 1e-8);
    }

    #[test]
    fn target_at_either_end() {
        let dec = eigendecompose(&standard29().hamiltonian()).unwrap();
        let end = select_target(&dec, 29);
        assert!((end.eigenvalue - 0.7211126).abs() < 1e-6);
        assert!((end.end_occupation - 0.9285).abs() < 1e-3);
        assert!((end.fidelity_ceiling - 0.976).abs() < 1e-3);
        let start = select_target(&dec, 1);
        assert!((start.eigenvalue - 1.5288874).abs() < 1e-6);
    }

    #[test]
    fn target_on_coordinate_vector() {
        let h = TridiagonalHamiltonian::new(vec![3.0, -1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let dec = eigendecompose(&h).unwrap();
        let t = select_target(&dec, 3);
        assert_eq!(t.index, 1);
        assert_eq!(t.end_occupation, 1.0);
        assert_eq!(t.fidelity_ceiling, 1.0);
    }

    #[test]
    fn two_site_spectrum_report() {
        let h = TridiagonalHamiltonian::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let report = spectrum_report(&h).unwrap();
        assert_eq!(report.eigenvalues.len(), 2);
        assert!((report.boundary[0].gap - 2.0).abs() < 1e-14);
        assert!((report.boundary[1].gap - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scan_rejects_empty_grid() {
        assert!(occupation_scan(&standard29(), &[], &[1.0], 29).is_err());
    }
}
