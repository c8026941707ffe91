use std::sync::Arc;

use lyapchain::chain::{build_hamiltonian, ChainSpec};
use lyapchain::config::parse_override;
use lyapchain::control::{build_p_operator, control_fields, control_hamiltonians, ControlMode, PRule};
use lyapchain::dynamics::averaged_fidelity;
use lyapchain::output::fmt_f64;
use lyapchain::robustness::{perturb_static, ParameterSelector};
use lyapchain::spectral::{eigendecompose, select_target};
use lyapchain::C64;
use proptest::prelude::*;

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..2.0, -2.0f64..-0.05]
}

prop_compose! {
    fn chain()(m in 3usize..40, period in 1usize..6)
        (m in Just(m), omega in prop::collection::vec(-2.0f64..2.0, period),
         couplings in prop::collection::vec(coupling(), period),
         site_override in prop::option::of((1..=m, -2.0f64..2.0)),
         bond_override in prop::option::of((1..m, coupling())))
        -> ChainSpec
    {
        let period = omega.len();
        let mut spec = ChainSpec::new(m, period, omega, couplings).unwrap();
        if let Some((site, value)) = site_override {
            spec = spec.with_omega_override(site, value).unwrap();
        }
        if let Some((bond, value)) = bond_override {
            spec = spec.with_coupling_override(bond, value).unwrap();
        }
        spec
    }
}

fn scale(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_symmetric_tridiagonal(spec in chain()) {
        let rows = build_hamiltonian(&spec).to_dense();
        let m = spec.m();
        for r in 0..m {
            for c in 0..m {
                prop_assert_eq!(rows[r][c], rows[c][r]);
                if r.abs_diff(c) > 1 {
                    prop_assert_eq!(rows[r][c], 0.0);
                }
            }
            prop_assert_eq!(rows[r][r], spec.effective_omega(r + 1));
        }
    }

    #[test]
    fn decomposition_reconstructs_and_keeps_trace(spec in chain()) {
        let h = spec.hamiltonian();
        let dec = eigendecompose(&h).unwrap();
        let rows = h.to_dense();
        let m = spec.m();
        let tol = 1e-11 * scale(&rows) * m as f64;
        for r in 0..m {
            for c in 0..m {
                let rebuilt: f64 = dec.eigenvalues().iter().zip(dec.eigenvectors()).map(|(l, u)| l * u[r] * u[c]).sum();
                prop_assert!((rebuilt - rows[r][c]).abs() < tol);
            }
        }
        let sum: f64 = dec.eigenvalues().iter().sum();
        prop_assert!((sum - h.trace()).abs() < tol);
        prop_assert!(dec.orthonormality_error() < 1e-12 * m as f64);
        prop_assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        for u in dec.eigenvectors() {
            let big = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let lead = u.iter().find(|x| x.abs() >= big * (1.0 - 1e-9)).unwrap();
            prop_assert!(*lead > 0.0);
        }
    }

    #[test]
    fn p_is_symmetric_and_commutes_with_h(spec in chain(), p_f in -10.0f64..-3.0) {
        let h = spec.hamiltonian();
        let dec = Arc::new(eigendecompose(&h).unwrap());
        let target = select_target(&dec, spec.m());
        let low = dec.eigenvalues()[0];
        let p = build_p_operator(dec, target.index, &PRule::EigenvalueWeights { p_f: low + p_f }).unwrap();
        let (pr, hr) = (p.to_dense(), h.to_dense());
        let m = spec.m();
        let tol = 1e-10 * scale(&pr) * scale(&hr) * m as f64;
        for r in 0..m {
            for c in 0..m {
                prop_assert!((pr[r][c] - pr[c][r]).abs() < tol);
                let ph: f64 = (0..m).map(|k| pr[r][k] * hr[k][c]).sum();
                let hp: f64 = (0..m).map(|k| hr[r][k] * pr[k][c]).sum();
                prop_assert!((ph - hp).abs() < tol);
            }
        }
    }

    #[test]
    fn fields_are_real_finite_and_linear_in_gain(spec in chain(), re in prop::collection::vec(-1.0f64..1.0, 40), im in prop::collection::vec(-1.0f64..1.0, 40), gain in 0.1f64..5.0) {
        let m = spec.m();
        let dec = Arc::new(eigendecompose(&spec.hamiltonian()).unwrap());
        let target = select_target(&dec, m);
        let low = dec.eigenvalues()[0];
        let p = build_p_operator(dec, target.index, &PRule::EigenvalueWeights { p_f: low - 1.0 }).unwrap();
        let mut psi: Vec<C64> = (0..m).map(|i| C64::new(re[i], im[i])).collect();
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        psi.iter_mut().for_each(|a| *a /= norm);
        for mode in [ControlMode::BoundaryCoupling, ControlMode::BoundaryField] {
            let controls = control_hamiltonians(mode, m).unwrap();
            let unit = control_fields(&psi, &p, &controls, &[1.0, 1.0]);
            let scaled = control_fields(&psi, &p, &controls, &[gain, gain]);
            for (u, s) in unit.iter().zip(&scaled) {
                prop_assert!(u.is_finite());
                prop_assert!((s - gain * u).abs() <= 1e-12 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn static_perturbation_commutes_with_densification(spec in chain(), pick in 0usize..1000, delta in -0.5f64..0.5, on_site in any::<bool>()) {
        let m = spec.m();
        let mut expected = spec.hamiltonian().to_dense();
        let selector = if on_site {
            let site = 1 + pick % m;
            expected[site - 1][site - 1] *= 1.0 + delta;
            ParameterSelector::Omega(site)
        } else {
            let bond = 1 + pick % (m - 1);
            expected[bond - 1][bond] *= 1.0 + delta;
            expected[bond][bond - 1] *= 1.0 + delta;
            ParameterSelector::Coupling(bond)
        };
        let perturbed = perturb_static(&spec, selector, delta).unwrap();
        prop_assert_eq!(perturbed.hamiltonian().to_dense(), expected);
    }

    #[test]
    fn averaged_fidelity_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (flo, fhi) = (averaged_fidelity(lo).unwrap(), averaged_fidelity(hi).unwrap());
        prop_assert!(flo <= fhi);
        prop_assert!((0.5..=1.0).contains(&flo));
    }

    #[test]
    fn csv_doubles_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn selector_display_round_trips(kind in 0u8..3, index in 1usize..10_000) {
        let s = match kind {
            0 => ParameterSelector::Omega(index),
            1 => ParameterSelector::Coupling(index),
            _ => ParameterSelector::Field(index),
        };
        prop_assert_eq!(s.to_string().parse::<ParameterSelector>().unwrap(), s);
    }

    #[test]
    fn override_parser_never_panics(text in ".{0,64}") {
        let _ = parse_override(&text);
        let _ = text.parse::<ParameterSelector>();
    }
}

#[test]
fn long_mantissas_survive_a_round_trip() {
    let text = r#"{"m": 10, "period": 5, "omega_pattern": [1.5, 0.75, 5.75, 33333333333336666666740.75, 1.5], "coupling_pattern": [0.15, 1.0, 0.5, 1.8, 1.0]}"#;
    let spec: ChainSpec = serde_json::from_str(text).unwrap();
    let again: ChainSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(again, spec);
}
