//! Coupled-mode propagation of the probe and the conjugate through the medium.
//!
//! With `E_p` the probe envelope and `E_c*` the conjugated conjugate envelope,
//! the pair obeys
//!
//! ```text
//! dE_p /dz =  a_pp E_p  + a_pc e^{+i dk z} E_c*
//! dE_c*/dz = -a_cc E_c* - a_cp e^{-i dk z} E_p
//! ```
//!
//! where `a_pj = i k_p chi_pj / 2` and `a_cj = i k_c conj(chi_cj) / 2`. The
//! boundary condition is a unit probe seed and no input conjugate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::BeamKinematics;
use crate::susceptibility::SusceptibilitySet;
use crate::{Error, Result};

/// Gains are reported through their logarithm once the exponent exceeds this.
pub const LOG_FORM_THRESHOLD: f64 = 300.0;
const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub a_pp: Complex64,
    pub a_pc: Complex64,
    pub a_cp: Complex64,
    pub a_cc: Complex64,
    /// (a_pp - a_cc + i dk) / 2
    pub delta_a: Complex64,
    /// (a_pp + a_cc - i dk) / 2
    pub a_mean: Complex64,
    /// Either root of a_mean^2 - a_pc a_cp.
    pub xi_prop: Complex64,
    /// Phase mismatch along the pump axis [rad/m].
    pub dkz: f64,
}

impl CouplingSet {
    /// Builds the derived coefficients from the four couplings [1/m].
    pub fn from_coefficients(
        a_pp: Complex64,
        a_pc: Complex64,
        a_cp: Complex64,
        a_cc: Complex64,
        dkz: f64,
    ) -> Self {
        let i_dk = Complex64::new(0.0, dkz);
        let delta_a = (a_pp - a_cc + i_dk) / 2.0;
        let a_mean = (a_pp + a_cc - i_dk) / 2.0;
        let xi_prop = (a_mean * a_mean - a_pc * a_cp).sqrt();
        CouplingSet {
            a_pp,
            a_pc,
            a_cp,
            a_cc,
            delta_a,
            a_mean,
            xi_prop,
            dkz,
        }
    }
}

/// Output envelopes relative to a unit probe seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub e_p: Complex64,
    pub e_c_conj: Complex64,
    pub g_p: f64,
    pub g_c: f64,
    /// ln g_p and ln g_c; always valid, and the only finite gain values when
    /// `log_form` is set.
    pub ln_g_p: f64,
    pub ln_g_c: f64,
    pub log_form: bool,
}

impl FieldPair {
    fn from_envelopes(e_p: Complex64, e_c_conj: Complex64) -> Self {
        let g_p = e_p.norm_sqr();
        let g_c = e_c_conj.norm_sqr();
        FieldPair {
            e_p,
            e_c_conj,
            g_p,
            g_c,
            ln_g_p: g_p.ln(),
            ln_g_c: g_c.ln(),
            log_form: false,
        }
    }

    fn from_logs(ln_e_p: Complex64, ln_e_c: Complex64, log_form: bool) -> Self {
        let ln_g_p = 2.0 * ln_e_p.re;
        let ln_g_c = 2.0 * ln_e_c.re;
        FieldPair {
            e_p: ln_e_p.exp(),
            e_c_conj: ln_e_c.exp(),
            g_p: ln_g_p.exp(),
            g_c: ln_g_c.exp(),
            ln_g_p,
            ln_g_c,
            log_form,
        }
    }
}

/// dk_z = 2 n0 k0 - (k_p + k_c) cos(theta).
///
/// Evaluated as 2 k0 (n0 - 1) + (k_p + k_c) * 2 sin^2(theta/2), using
/// k_p + k_c = 2 k0, so the collinear case with n0 = 1 is exactly zero.
pub fn phase_mismatch(kin: &BeamKinematics, n0: f64) -> f64 {
    let half = (kin.theta / 2.0).sin();
    2.0 * kin.k0 * (n0 - 1.0) + (kin.kp + kin.kc) * 2.0 * half * half
}

/// Coupling coefficients with the mismatch taken from the beam geometry.
pub fn coupling(chi: &SusceptibilitySet, kin: &BeamKinematics, n0: f64) -> CouplingSet {
    coupling_with_mismatch(chi, kin, phase_mismatch(kin, n0))
}

/// Coupling coefficients for an externally imposed mismatch `dkz` [rad/m].
pub fn coupling_with_mismatch(
    chi: &SusceptibilitySet,
    kin: &BeamKinematics,
    dkz: f64,
) -> CouplingSet {
    let ip = Complex64::new(0.0, kin.kp / 2.0);
    let ic = Complex64::new(0.0, kin.kc / 2.0);
    CouplingSet::from_coefficients(
        ip * chi.chi_pp,
        ip * chi.chi_pc,
        ic * chi.chi_cp.conj(),
        ic * chi.chi_cc.conj(),
        dkz,
    )
}

/// e^z - 1 without cancellation for small |z|.
fn expm1(z: Complex64) -> Complex64 {
    let s = (z.im / 2.0).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * s * s,
        z.re.exp() * z.im.sin(),
    )
}

/// Exact solution for a unit probe seed after `length` meters.
pub fn solve_closed_form(c: &CouplingSet, length: f64) -> Result<FieldPair> {
    if !(length >= 0.0) || !length.is_finite() {
        return Err(Error::invalid("length", format!("must be >= 0, got {length}")));
    }
    // either root works; fix one so the result does not depend on the caller's choice
    let mut xi = c.xi_prop;
    if xi.re < 0.0 || (xi.re == 0.0 && xi.im < 0.0) {
        xi = -xi;
    }
    let x = xi * length;
    let drift = c.delta_a * length;
    let phase = Complex64::new(0.0, -c.dkz * length);
    let log_form = (xi.re + c.delta_a.re).abs() * length > LOG_FORM_THRESHOLD;

    let (ln_e_p, ln_e_c) = if x.norm() < SERIES_THRESHOLD {
        let x2 = x * x;
        let cosh = 1.0 + x2 / 2.0 + x2 * x2 / 24.0;
        let sinh_over_xi = length * (1.0 + x2 / 6.0 + x2 * x2 / 120.0);
        let p = cosh + c.a_mean * sinh_over_xi;
        let q = -c.a_cp * sinh_over_xi;
        (drift + p.ln(), drift + phase + q.ln())
    } else {
        // cosh X = e^X (1 + e^-2X)/2, sinh X = -e^X expm1(-2X)/2, with |e^-2X| <= 1
        let em = expm1(-2.0 * x);
        let half_sinh = -em / 2.0;
        let half_cosh = 1.0 + em / 2.0;
        let p = half_cosh + c.a_mean / xi * half_sinh;
        let q = -c.a_cp / xi * half_sinh;
        (drift + x + p.ln(), drift + x + phase + q.ln())
    };
    let pair = FieldPair::from_logs(ln_e_p, ln_e_c, log_form);
    if pair.ln_g_p.is_nan() || pair.ln_g_c.is_nan() {
        return Err(Error::Numerical(format!(
            "closed-form propagation produced NaN (xi L = {x})"
        )));
    }
    Ok(pair)
}

/// Fixed-step classical Runge-Kutta integration of the coupled equations from
/// z = 0 to `length`. Independent of the closed form; used to verify it.
pub fn integrate_ode(c: &CouplingSet, length: f64, steps: usize) -> Result<FieldPair> {
    if steps < 2 {
        return Err(Error::invalid("steps", format!("must be >= 2, got {steps}")));
    }
    if !(length >= 0.0) || !length.is_finite() {
        return Err(Error::invalid("length", format!("must be >= 0, got {length}")));
    }
    let rhs = |z: f64, y: [Complex64; 2]| -> [Complex64; 2] {
        let rot = Complex64::from_polar(1.0, c.dkz * z);
        [
            c.a_pp * y[0] + c.a_pc * rot * y[1],
            -c.a_cc * y[1] - c.a_cp * rot.conj() * y[0],
        ]
    };
    let axpy = |y: [Complex64; 2], h: f64, k: [Complex64; 2]| [y[0] + k[0] * h, y[1] + k[1] * h];
    let h = length / steps as f64;
    let mut y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    for n in 0..steps {
        let z = n as f64 * h;
        let k1 = rhs(z, y);
        let k2 = rhs(z + h / 2.0, axpy(y, h / 2.0, k1));
        let k3 = rhs(z + h / 2.0, axpy(y, h / 2.0, k2));
        let k4 = rhs(z + h, axpy(y, h, k3));
        for j in 0..2 {
            y[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Numerical(format!(
                "ODE integration diverged at z = {:.6e} m",
                z + h
            )));
        }
    }
    Ok(FieldPair::from_envelopes(y[0], y[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_params, kinematics};
    use serde_json::json;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kin(theta_deg: f64) -> BeamKinematics {
        let p = build_params(
            json!({"omega_rabi_gamma": 60, "delta1_gamma": 140, "gamma_c_gamma": 0.2})
                .as_object()
                .unwrap(),
        )
        .unwrap();
        kinematics(&p, 0.0, theta_deg.to_radians()).unwrap()
    }

    #[test]
    fn collinear_mismatch_is_exactly_zero() {
        assert_eq!(phase_mismatch(&kin(0.0), 1.0), 0.0);
    }

    #[test]
    fn pump_index_mismatch() {
        let k = kin(0.0);
        let dk = phase_mismatch(&k, 1.0 - 6.5e-6);
        assert!((dk + 102.74).abs() < 0.05, "{dk}");
    }

    #[test]
    fn angular_mismatch() {
        let dk = phase_mismatch(&kin(0.3), 1.0);
        assert!((dk - 216.7).abs() < 0.1, "{dk}");
    }

    #[test]
    fn zero_susceptibility_couplings() {
        let k = kin(0.0);
        let z = coupling_with_mismatch(&SusceptibilitySet::ZERO, &k, 0.0);
        assert_eq!(z.xi_prop, c(0.0, 0.0));
        assert_eq!(z.a_mean, c(0.0, 0.0));
        let d = coupling_with_mismatch(&SusceptibilitySet::ZERO, &k, 40.0);
        assert_eq!(d.a_mean, c(0.0, -20.0));
        assert!((d.xi_prop.norm() - 20.0).abs() < 1e-12 && d.xi_prop.re.abs() < 1e-12);
    }

    #[test]
    fn zero_length_is_identity() {
        let cs = CouplingSet::from_coefficients(c(1.0, 2.0), c(3.0, 0.0), c(-1.0, 1.0), c(0.5, 0.0), 7.0);
        let f = solve_closed_form(&cs, 0.0).unwrap();
        assert_eq!(f.g_p, 1.0);
        assert_eq!(f.g_c, 0.0);
    }

    #[test]
    fn decoupled_probe_grows_exponentially() {
        let cs = CouplingSet::from_coefficients(c(0.3, 1.1), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0), 0.0);
        let ode = integrate_ode(&cs, 2.0, 4000).unwrap();
        let exact = (c(0.3, 1.1) * 2.0).exp();
        assert!((ode.e_p - exact).norm() < 1e-12);
        assert_eq!(ode.e_c_conj, c(0.0, 0.0));
        let cf = solve_closed_form(&cs, 2.0).unwrap();
        assert!((cf.e_p - exact).norm() < 1e-12);
        assert_eq!(cf.g_c, 0.0);
    }

    #[test]
    fn ideal_amplifier_gain_difference() {
        let cs = CouplingSet::from_coefficients(
            c(0.0, 0.0),
            Complex64::from_polar(2.0, 0.7),
            -Complex64::from_polar(2.0, -0.7),
            c(0.0, 0.0),
            0.0,
        );
        for len in [0.1, 1.0, 3.0] {
            let f = solve_closed_form(&cs, len).unwrap();
            assert!((f.g_p - f.g_c - 1.0).abs() < 1e-10 * f.g_p.max(1.0));
            let o = integrate_ode(&cs, len, 20_000).unwrap();
            assert!((o.g_p - o.g_c - 1.0).abs() < 1e-8 * o.g_p.max(1.0));
        }
    }

    #[test]
    fn huge_gain_switches_to_log_form() {
        let cs = CouplingSet::from_coefficients(
            c(0.0, 0.0),
            c(1000.0, 0.0),
            c(-1000.0, 0.0),
            c(0.0, 0.0),
            0.0,
        );
        let f = solve_closed_form(&cs, 1.0).unwrap();
        assert!(f.log_form);
        // cosh^2(1000) ~ e^2000 / 4
        assert!((f.ln_g_p - (2000.0 - 4.0f64.ln())).abs() < 1e-9);
        assert!(f.ln_g_c.is_finite());
    }

    #[test]
    fn step_halving_converges() {
        let cs = CouplingSet::from_coefficients(c(-50.0, 300.0), c(120.0, 80.0), c(-90.0, 40.0), c(-5.0, 10.0), 250.0);
        let a = integrate_ode(&cs, 0.0125, 4000).unwrap();
        let b = integrate_ode(&cs, 0.0125, 8000).unwrap();
        assert!(((a.g_p - b.g_p) / b.g_p).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cs = CouplingSet::from_coefficients(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 0.0);
        assert!(integrate_ode(&cs, 1.0, 1).is_err());
        assert!(solve_closed_form(&cs, -1.0).is_err());
    }

    #[test]
    fn divergence_names_position() {
        let cs = CouplingSet::from_coefficients(c(1e306, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 0.0);
        let err = integrate_ode(&cs, 1.0, 10).unwrap_err();
        assert!(err.is_numerical() && err.to_string().contains("z ="), "{err}");
    }

    fn arb_coef() -> impl proptest::strategy::Strategy<Value = Complex64> {
        use proptest::prelude::*;
        (0.0f64..5.0, -3.2f64..3.2).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    proptest::proptest! {
        #[test]
        fn branch_choice_is_immaterial(
            app in arb_coef(), apc in arb_coef(), acp in arb_coef(), acc in arb_coef(),
            dk in -5.0f64..5.0, len in 0.0f64..2.0
        ) {
            let cs = CouplingSet::from_coefficients(app, apc, acp, acc, dk);
            let flipped = CouplingSet { xi_prop: -cs.xi_prop, ..cs };
            let a = solve_closed_form(&cs, len).unwrap();
            let b = solve_closed_form(&flipped, len).unwrap();
            proptest::prop_assert!((a.g_p - b.g_p).abs() <= 1e-12 * a.g_p.max(1.0));
            proptest::prop_assert!((a.g_c - b.g_c).abs() <= 1e-12 * a.g_c.max(1.0));
        }

        #[test]
        fn gains_are_non_negative_and_conjugate_needs_coupling(
            app in arb_coef(), apc in arb_coef(), acc in arb_coef(),
            dk in -5.0f64..5.0, len in 0.0f64..2.0
        ) {
            let cs = CouplingSet::from_coefficients(app, apc, Complex64::new(0.0, 0.0), acc, dk);
            let f = solve_closed_form(&cs, len).unwrap();
            proptest::prop_assert!(f.g_p >= 0.0);
            proptest::prop_assert_eq!(f.g_c, 0.0);
        }

        #[test]
        fn lossless_gain_difference_is_conserved(
            k in 0.0f64..4.0, phi in -3.2f64..3.2, len in 0.0f64..2.0
        ) {
            let cs = CouplingSet::from_coefficients(
                Complex64::new(0.0, 0.0),
                Complex64::from_polar(k, phi),
                -Complex64::from_polar(k, -phi),
                Complex64::new(0.0, 0.0),
                0.0,
            );
            let f = solve_closed_form(&cs, len).unwrap();
            proptest::prop_assert!((f.g_p - f.g_c - 1.0).abs() <= 1e-10 * f.g_p);
        }
    }
}
