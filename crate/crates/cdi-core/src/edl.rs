//! Modified-Donnan electric-double-layer closure.
//!
//! At each point of an electrode, micropores hold a total ion
//! concentration c_mi,ions and an ionic charge density σ_ionic that are
//! tied to the local macropore salt concentration c_mA and the potential
//! drop between carbon and macropore electrolyte by
//!
//! ```text
//! c_mi,ions² = σ_ionic² + (2 c_mA e^{μ_att})²,      μ_att = E / c_mi,ions
//! φ_1 − φ_mA = Δφ_D + Δφ_S
//!            = −asinh(σ_ionic / (2 c_mA e^{μ_att})) − σ_ionic F/(C_S V_T)
//! ```
//!
//! All three entry points below solve this nonlinear closure exactly (to
//! solver tolerance) with safeguarded Newton iterations in guaranteed
//! brackets: from zero charge, from a prescribed charge, or from a
//! prescribed total potential drop. Concentrations and σ are in mol/m³,
//! potentials are dimensionless (thermal-voltage units).

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::math;
use crate::params::EDLParams;
use crate::roots::{newton_bisect, RootConfig};

/// Self-consistent micropore double-layer state at one spatial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroporeState {
    /// Ionic micropore charge density σ_ionic = c_mi,+ − c_mi,− (mol/m³,
    /// signed; opposite in sign to the electronic charge).
    pub sigma_ionic: f64,
    /// Total micropore ion concentration c_mi,+ + c_mi,− (mol/m³).
    pub c_mi_ions: f64,
    /// Donnan potential drop (dimensionless).
    pub dphi_donnan: f64,
    /// Stern layer potential drop (dimensionless).
    pub dphi_stern: f64,
    /// Attraction term μ_att = E / c_mi,ions (dimensionless).
    pub mu_att: f64,
}

impl MicroporeState {
    /// Total double-layer drop Δφ_D + Δφ_S between carbon and macropore.
    #[inline]
    pub fn dphi_total(&self) -> f64 {
        self.dphi_donnan + self.dphi_stern
    }
}

/// Attraction term μ_att = E / c_mi,ions.
pub fn mu_att_of(c_mi_ions: f64, attraction_energy: f64) -> Result<f64> {
    if !(c_mi_ions > 0.0) {
        return Err(Error::Domain("mu_att requires c_mi_ions > 0"));
    }
    Ok(attraction_energy / c_mi_ions)
}

fn check_c_macro(c_macro: f64) -> Result<()> {
    if !(c_macro > 0.0) || !c_macro.is_finite() {
        return Err(Error::Domain(
            "macropore concentration must be positive and finite",
        ));
    }
    Ok(())
}

/// Solves c_mi,ions for a given (c_mA, σ): the root of
/// h(c) = c² − σ² − (2 c_mA)² e^{2E/c}, which is strictly increasing.
fn solve_c_mi(c_macro: f64, sigma: f64, e_att: f64) -> Result<f64> {
    if e_att == 0.0 {
        return Ok(math::hypot(sigma, 2.0 * c_macro));
    }
    let two_c = 2.0 * c_macro;
    let h = |c: f64| {
        let g = two_c * math::exp(e_att / c);
        let value = c * c - sigma * sigma - g * g;
        let deriv = 2.0 * c + 2.0 * g * g * e_att / (c * c);
        (value, deriv)
    };
    // h(lo) = (2c)²(1 − e^{2E/lo}) ≤ 0; grow hi until h flips sign.
    let lo = math::hypot(sigma, two_c);
    let mut hi = 2.0 * lo.max(e_att);
    let mut grow = 0;
    while h(hi).0 <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::RootFind {
                what: "micropore ion concentration bracket",
                last_residual: h(hi).0,
                iterations: grow,
            });
        }
    }
    let cfg = RootConfig {
        tol_f: 1e-12 * (1.0 + lo * lo),
        ..RootConfig::default()
    };
    newton_bisect(h, lo, hi, &cfg).map_err(|e| Error::RootFind {
        what: "micropore ion concentration",
        last_residual: e.last_residual,
        iterations: e.iterations,
    })
}

/// Stern coefficient β = F / (C_S · V_T); zero for infinite capacitance.
#[inline]
fn stern_beta(edl: &EDLParams, constants: &PhysicalConstants) -> f64 {
    if edl.stern_capacitance.is_infinite() {
        0.0
    } else {
        constants.faraday / (edl.stern_capacitance * constants.thermal_voltage())
    }
}

/// Uncharged self-consistent state: σ = 0, Δφ_D = Δφ_S = 0 and
/// c_mi,ions = 2 c_mA e^{μ_att}, i.e. μ e^{μ} = E / (2 c_mA).
pub fn zero_charge_state(c_macro: f64, edl: &EDLParams) -> Result<MicroporeState> {
    check_c_macro(c_macro)?;
    let e_att = edl.attraction_energy;
    if e_att == 0.0 {
        return Ok(MicroporeState {
            sigma_ionic: 0.0,
            c_mi_ions: 2.0 * c_macro,
            dphi_donnan: 0.0,
            dphi_stern: 0.0,
            mu_att: 0.0,
        });
    }
    let rhs = e_att / (2.0 * c_macro);
    let g = |mu: f64| {
        let e = math::exp(mu);
        (mu * e - rhs, e * (1.0 + mu))
    };
    let hi = math::ln(rhs).max(1.0) + 1.0;
    let cfg = RootConfig {
        tol_f: 1e-12 * (1.0 + rhs),
        ..RootConfig::default()
    };
    let mu = newton_bisect(g, 0.0, hi, &cfg).map_err(|e| Error::RootFind {
        what: "zero-charge attraction term",
        last_residual: e.last_residual,
        iterations: e.iterations,
    })?;
    Ok(MicroporeState {
        sigma_ionic: 0.0,
        c_mi_ions: e_att / mu,
        dphi_donnan: 0.0,
        dphi_stern: 0.0,
        mu_att: mu,
    })
}

/// State with a prescribed ionic micropore charge σ.
pub fn state_from_charge(
    c_macro: f64,
    sigma_ionic: f64,
    edl: &EDLParams,
    constants: &PhysicalConstants,
) -> Result<MicroporeState> {
    check_c_macro(c_macro)?;
    if !sigma_ionic.is_finite() {
        return Err(Error::NonFinite("sigma_ionic"));
    }
    let c_mi = solve_c_mi(c_macro, sigma_ionic, edl.attraction_energy)?;
    let mu = edl.attraction_energy / c_mi;
    let g = 2.0 * c_macro * math::exp(mu);
    Ok(MicroporeState {
        sigma_ionic,
        c_mi_ions: c_mi,
        dphi_donnan: -math::asinh(sigma_ionic / g),
        dphi_stern: -sigma_ionic * stern_beta(edl, constants),
        mu_att: mu,
    })
}

/// State whose total double-layer drop Δφ_D + Δφ_S equals `dphi_total`.
///
/// The map σ ↦ Δφ_D + Δφ_S is strictly monotone decreasing, so the charge
/// is unique. It is found by a safeguarded Newton solve on |σ| inside
/// [0, σ_max], where σ_max is the tighter of the two mechanism bounds
/// |σ| ≤ C_S·V_T·|Δφ|/F (Stern) and |σ| ≤ 2c·e^{E/2c}·sinh|Δφ| (Donnan).
pub fn state_from_potential(
    c_macro: f64,
    dphi_total: f64,
    edl: &EDLParams,
    constants: &PhysicalConstants,
) -> Result<MicroporeState> {
    check_c_macro(c_macro)?;
    if !dphi_total.is_finite() {
        return Err(Error::NonFinite("dphi_total"));
    }
    if dphi_total == 0.0 {
        return state_from_charge(c_macro, 0.0, edl, constants);
    }
    let target = dphi_total.abs();
    let beta = stern_beta(edl, constants);
    let e_att = edl.attraction_energy;

    let stern_bound = if beta > 0.0 {
        target / beta
    } else {
        f64::INFINITY
    };
    let mu_max = e_att / (2.0 * c_macro);
    let donnan_bound = if mu_max < 700.0 {
        2.0 * c_macro * math::exp(mu_max) * math::sinh(target)
    } else {
        f64::INFINITY
    };
    let hi = stern_bound.min(donnan_bound);
    if !hi.is_finite() {
        return Err(Error::Domain(
            "no finite charge bracket: infinite Stern capacitance with overflowing attraction",
        ));
    }
    let hi = hi * (1.0 + 1e-6) + 1e-300;

    // drop(s) = asinh(s / (2c e^{μ})) + βs − target, increasing in s ≥ 0.
    let f = |s: f64| {
        let c_mi = match solve_c_mi(c_macro, s, e_att) {
            Ok(c) => c,
            Err(_) => return (f64::NAN, f64::NAN),
        };
        let mu = e_att / c_mi;
        let e2 = math::exp(2.0 * e_att / c_mi);
        let g = 2.0 * c_macro * math::exp(mu);
        let value = math::asinh(s / g) + beta * s - target;
        // dc_mi/ds by implicit differentiation of the c_mi equation
        let dcm = s / (c_mi + 4.0 * c_macro * c_macro * e_att * e2 / (c_mi * c_mi));
        let dg = -g * e_att * dcm / (c_mi * c_mi);
        let deriv = (g - s * dg) / (g * c_mi) + beta;
        (value, deriv)
    };
    let cfg = RootConfig {
        tol_f: 1e-12 * (1.0 + target),
        ..RootConfig::default()
    };
    let s = newton_bisect(f, 0.0, hi, &cfg).map_err(|e| Error::RootFind {
        what: "charge from potential drop",
        last_residual: e.last_residual,
        iterations: e.iterations,
    })?;
    let sigma = if dphi_total < 0.0 { s } else { -s };
    state_from_charge(c_macro, sigma, edl, constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn edl(e_att: f64, c_s: f64) -> EDLParams {
        EDLParams {
            attraction_energy: e_att,
            stern_capacitance: c_s,
            ..EDLParams::default()
        }
    }

    /// Plain bisection, the independent oracle for the solves under test.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let f_lo = f(lo);
        assert!(
            (f_lo > 0.0) != (f(hi) > 0.0),
            "oracle bracket must straddle the root"
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if (fm > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn mu_att_examples() {
        assert_eq!(mu_att_of(700.0, 700.0).unwrap(), 1.0);
        assert_eq!(mu_att_of(350.0, 0.0).unwrap(), 0.0);
        assert_eq!(mu_att_of(350.0, 700.0).unwrap(), 2.0);
        assert!(mu_att_of(0.0, 700.0).is_err());
        assert!(mu_att_of(-1.0, 700.0).is_err());
    }

    #[test]
    fn zero_charge_without_attraction() {
        let s = zero_charge_state(5.0, &edl(0.0, 1.45e8)).unwrap();
        assert_eq!(s.c_mi_ions, 10.0);
        assert_eq!(s.mu_att, 0.0);
        assert_eq!(s.sigma_ionic, 0.0);
        assert_eq!(s.dphi_total(), 0.0);
    }

    #[test]
    fn zero_charge_matches_bisection_oracle() {
        // mu e^mu = E/(2 c_mA): oracle on (0, 10)
        for (c, rhs) in [(5.0, 70.0), (10.0, 35.0)] {
            let mu_oracle = bisect(|m| m * math::exp(m) - rhs, 1e-12, 10.0);
            let s = zero_charge_state(c, &edl(700.0, 1.45e8)).unwrap();
            assert_relative_eq!(s.mu_att, mu_oracle, max_relative = 1e-11);
            assert_relative_eq!(s.c_mi_ions, 700.0 / mu_oracle, max_relative = 1e-11);
        }
        // coarse anchors from the closure definition
        let s5 = zero_charge_state(5.0, &edl(700.0, 1.45e8)).unwrap();
        assert!((s5.mu_att - 3.11).abs() < 0.01);
        let s10 = zero_charge_state(10.0, &edl(700.0, 1.45e8)).unwrap();
        assert!((s10.mu_att - 2.60).abs() < 0.01);
    }

    #[test]
    fn state_from_charge_closed_forms_without_attraction() {
        let k = PhysicalConstants::default();
        let p = edl(0.0, 1.45e8);
        let s = state_from_charge(5.0, 0.0, &p, &k).unwrap();
        assert_eq!(s.c_mi_ions, 10.0);
        assert_eq!(s.dphi_donnan, 0.0);
        assert_eq!(s.dphi_stern, -0.0);

        let s = state_from_charge(5.0, 30.0, &p, &k).unwrap();
        assert_relative_eq!(s.c_mi_ions, 1000f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(s.dphi_donnan, -3f64.asinh(), max_relative = 1e-14);
    }

    #[test]
    fn state_from_charge_matches_bisection_oracle() {
        let k = PhysicalConstants::default();
        let p = edl(700.0, 1.45e8);
        // c_mi root of g(c) = c² − 900 − 100 e^{1400/c}
        let oracle = bisect(
            |c: f64| c * c - 900.0 - 100.0 * math::exp(1400.0 / c),
            30.0,
            5000.0,
        );
        let s = state_from_charge(5.0, 30.0, &p, &k).unwrap();
        assert_relative_eq!(s.c_mi_ions, oracle, max_relative = 1e-10);
        // invariants
        assert!(s.c_mi_ions >= s.sigma_ionic.abs());
        assert_relative_eq!(s.mu_att * s.c_mi_ions, 700.0, max_relative = 1e-12);
        let g = 2.0 * 5.0 * math::exp(s.mu_att);
        assert_relative_eq!(
            s.c_mi_ions * s.c_mi_ions - s.sigma_ionic * s.sigma_ionic,
            g * g,
            max_relative = 1e-9
        );
    }

    #[test]
    fn potential_inverse_of_charge() {
        let k = PhysicalConstants::default();
        let p = edl(0.0, f64::INFINITY);
        let s = state_from_potential(5.0, -(3f64.asinh()), &p, &k).unwrap();
        assert_relative_eq!(s.sigma_ionic, 30.0, max_relative = 1e-9);

        let zero = state_from_potential(5.0, 0.0, &edl(700.0, 1.45e8), &k).unwrap();
        assert_eq!(zero.sigma_ionic, 0.0);
        assert_eq!(zero.dphi_total(), 0.0);
    }

    #[test]
    fn potential_solve_matches_independent_oracle_chain() {
        let k = PhysicalConstants::default();
        let p = edl(700.0, 1.45e8);
        let beta = k.faraday / (1.45e8 * k.thermal_voltage());
        // fully independent chain: inner bisection for c_mi, outer for sigma
        let drop = |s: f64| {
            let cm = bisect(
                |c: f64| c * c - s * s - 100.0 * math::exp(1400.0 / c),
                (s * s + 100.0).sqrt(),
                1e7,
            );
            let g = 10.0 * math::exp(700.0 / cm);
            -math::asinh(s / g) - beta * s
        };
        let target = -5.0;
        let sigma_oracle = bisect(|s| drop(s) - target, 0.0, 1e6);
        let s = state_from_potential(5.0, target, &p, &k).unwrap();
        assert_relative_eq!(s.sigma_ionic, sigma_oracle, max_relative = 1e-9);
        assert_relative_eq!(s.dphi_total(), target, epsilon = 1e-10);
    }

    #[test]
    fn round_trip_charge_potential_charge() {
        let k = PhysicalConstants::default();
        for &e_att in &[0.0, 700.0, 2000.0] {
            for &c_s in &[1.45e8, 5e7] {
                let p = edl(e_att, c_s);
                for &c in &[0.8, 5.0, 20.0, 150.0] {
                    for &sigma in &[-800.0, -30.0, -0.5, 0.0, 0.5, 30.0, 800.0] {
                        let fwd = state_from_charge(c, sigma, &p, &k).unwrap();
                        let back = state_from_potential(c, fwd.dphi_total(), &p, &k).unwrap();
                        assert_relative_eq!(
                            back.sigma_ionic,
                            sigma,
                            max_relative = 1e-9,
                            epsilon = 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn charge_monotone_in_potential_drop() {
        let k = PhysicalConstants::default();
        let p = edl(700.0, 1.45e8);
        let mut prev = -1.0;
        for i in 0..=60 {
            let dphi = -25.0 * (i as f64) / 60.0;
            let s = state_from_potential(5.0, dphi, &p, &k).unwrap();
            assert!(
                s.sigma_ionic.abs() >= prev,
                "|sigma| must not decrease with |dphi|"
            );
            prev = s.sigma_ionic.abs();
        }
    }

    #[test]
    fn analytic_identities_without_attraction() {
        let k = PhysicalConstants::default();
        let p = edl(0.0, 1.45e8);
        for &c in &[1.0, 5.0, 20.0] {
            for &sigma in &[-200.0, -7.0, 0.25, 90.0] {
                let s = state_from_charge(c, sigma, &p, &k).unwrap();
                assert_relative_eq!(
                    sigma,
                    -2.0 * c * math::sinh(s.dphi_donnan),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    s.c_mi_ions,
                    2.0 * c * math::cosh(s.dphi_donnan),
                    max_relative = 1e-12
                );
                // equilibrium charge-efficiency identity
                let lambda = (s.c_mi_ions - 2.0 * c) / sigma.abs();
                assert_relative_eq!(
                    lambda,
                    math::tanh(s.dphi_donnan.abs() / 2.0),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn sign_conventions() {
        let k = PhysicalConstants::default();
        let p = edl(700.0, 1.45e8);
        let s = state_from_charge(5.0, 40.0, &p, &k).unwrap();
        assert!(s.dphi_donnan < 0.0 && s.dphi_stern < 0.0);
        let s = state_from_charge(5.0, -40.0, &p, &k).unwrap();
        assert!(s.dphi_donnan > 0.0 && s.dphi_stern > 0.0);
        assert!(state_from_charge(0.0, 1.0, &p, &k).is_err());
        assert!(state_from_potential(-5.0, 1.0, &p, &k).is_err());
    }
}
