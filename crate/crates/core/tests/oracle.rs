mod common;

use common::params;
use lambda4wm_core::oracle::{evolve_to_steady_state, extract_susceptibilities, OracleConfig};
use lambda4wm_core::susceptibility::susceptibilities;
use lambda4wm_core::Complex64;
use proptest::prelude::*;
use serde_json::json;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn steady_state_is_a_density_matrix(
        omega in 10.0f64..100.0,
        delta1 in 50.0f64..300.0,
        gamma_c in 0.02f64..1.0,
        delta in -20.0f64..20.0,
        seed_re in -1.0f64..1.0,
        seed_im in -1.0f64..1.0,
    ) {
        let p = params(json!({"omega_rabi_gamma": omega, "delta1_gamma": delta1, "gamma_c_gamma": gamma_c}));
        let seed = Complex64::new(seed_re, seed_im) * (1e-4 * omega);
        let s = evolve_to_steady_state(&p, delta, seed, seed.conj(), &OracleConfig::default()).unwrap();
        prop_assert!((s.state.trace() - 1.0).norm() < 1e-12);
        prop_assert!(s.state.hermiticity_error() < 1e-12);
        prop_assert!(s.state.min_eigenvalue() > -1e-12);
        prop_assert!(s.max_trace_error < 1e-12);
        prop_assert!(s.residual < 1e-12);
    }

    #[test]
    fn extraction_is_linear_response(
        omega in 10.0f64..100.0,
        delta1 in 50.0f64..300.0,
        gamma_c in 0.02f64..1.0,
        delta in -20.0f64..20.0,
    ) {
        let p = params(json!({"omega_rabi_gamma": omega, "delta1_gamma": delta1, "gamma_c_gamma": gamma_c}));
        let o = extract_susceptibilities(&p, delta, &OracleConfig::default()).unwrap();
        prop_assert!(o.halving_discrepancy < 1e-6);
        prop_assert!(o.min_eigenvalue > -1e-12);
        let closed = susceptibilities(&p, delta).unwrap();
        prop_assert!(o.chi.max_relative_difference(&closed) < 1e-6);
    }
}

#[test]
fn seed_phase_does_not_change_chi() {
    let p = common::light_shift_point();
    let a = extract_susceptibilities(&p, -3.0, &OracleConfig::default()).unwrap();
    let cfg = OracleConfig {
        seed_phase: -1.1,
        ..OracleConfig::default()
    };
    let b = extract_susceptibilities(&p, -3.0, &cfg).unwrap();
    assert!(a.chi.max_relative_difference(&b.chi) < 1e-8);
}

#[test]
fn independent_hyperfine_detuning() {
    let p = params(json!({
        "omega_rabi_gamma": 40.0, "delta1_gamma": 90.0, "delta2_gamma": 300.0, "gamma_c_gamma": 0.1
    }));
    for delta in [-8.0, -2.0, 4.0] {
        let o = extract_susceptibilities(&p, delta, &OracleConfig::default()).unwrap();
        let closed = susceptibilities(&p, delta).unwrap();
        assert!(o.chi.max_relative_difference(&closed) < 1e-6);
    }
}
