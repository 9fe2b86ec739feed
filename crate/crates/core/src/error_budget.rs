//! Analytic error estimates and their numeric counterparts.
//!
//! Numeric components are obtained by switching error channels on one at a
//! time: decay with an ideal blockade, finite blockade without decay,
//! control-control shifts with an ideal blockade, and everything together.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{average_reports, gate_fidelity, RunSettings};
use crate::geometry::InteractionSet;
use crate::scenario::{GateParameters, Overrides, IDEAL_BLOCKADE_SCALE};

/// Prefactor of the quadratic blockade-error envelope.
pub const BLOCKADE_ENVELOPE_PREFACTOR: f64 = 0.7;

fn positive(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRabi(omega))
    }
}

fn non_negative(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeRate(gamma))
    }
}

/// Decay error of the two-control gate,
/// `pi G_t / (4 W_t) + 3 pi G_c / W_t + pi G_c / W_c`.
pub fn decay_error(omega_t: f64, omega_c: f64, gamma_t: f64, gamma_c: f64) -> Result<f64> {
    positive(omega_t)?;
    positive(omega_c)?;
    non_negative(gamma_t)?;
    non_negative(gamma_c)?;
    let (target, per_control_t, per_control_c) = decay_terms(omega_t, omega_c, gamma_t, gamma_c);
    Ok(target / 4.0 + per_control_t + per_control_c)
}

// Terms shared by both decay formulas, evaluated identically so that the
// k = 2 case agrees bit for bit.
fn decay_terms(omega_t: f64, omega_c: f64, gamma_t: f64, gamma_c: f64) -> (f64, f64, f64) {
    (
        PI * gamma_t / omega_t,
        3.0 * PI * gamma_c / omega_t,
        PI * gamma_c / omega_c,
    )
}

/// Decay error with `k` controls,
/// `2^-k pi G_t / W_t + k 3 pi G_c / (2 W_t) + k pi G_c / (2 W_c)`.
pub fn k_control_decay_error(
    k: usize,
    omega_t: f64,
    omega_c: f64,
    gamma_t: f64,
    gamma_c: f64,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("need at least one control".into()));
    }
    positive(omega_t)?;
    positive(omega_c)?;
    non_negative(gamma_t)?;
    non_negative(gamma_c)?;
    let (target, per_control_t, per_control_c) = decay_terms(omega_t, omega_c, gamma_t, gamma_c);
    let k_f = k as f64;
    Ok(target / 2f64.powi(k as i32) + k_f * (per_control_t / 2.0) + k_f * (per_control_c / 2.0))
}

/// Upper envelope `0.7 (W_t / U_ct)^2` of the oscillating blockade error.
pub fn blockade_error_envelope(omega_t: f64, u_ct: f64) -> Result<f64> {
    if u_ct == 0.0 || !u_ct.is_finite() {
        return Err(Error::BlockadeZero);
    }
    Ok(BLOCKADE_ENVELOPE_PREFACTOR * (omega_t / u_ct).powi(2))
}

/// Antiblockade error `(U_cc / W_c)^2` of one control pair.
pub fn antiblockade_error(u_cc: f64, omega_c: f64) -> Result<f64> {
    positive(omega_c)?;
    Ok((u_cc / omega_c).powi(2))
}

/// Whether `(U_cc / W_c)^2` is inside its perturbative regime `U_cc < W_c`.
pub fn antiblockade_in_regime(u_cc: f64, omega_c: f64) -> bool {
    u_cc.abs() < omega_c
}

/// Largest pairwise antiblockade error of a register and the pair attaining it.
pub fn max_antiblockade_error(
    interactions: &InteractionSet,
    omega_c: f64,
) -> Result<(f64, Option<(usize, usize)>)> {
    match interactions.max_u_cc() {
        Some((u, i, j)) => Ok((antiblockade_error(u, omega_c)?, Some((i, j)))),
        None => {
            positive(omega_c)?;
            Ok((0.0, None))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetSource {
    Analytic,
    Numeric,
}

/// Error components of a gate. Standard errors are zero for analytic budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub e_sp: f64,
    pub e_bl: f64,
    pub e_abl: f64,
    pub e_tot: f64,
    pub se_sp: f64,
    pub se_bl: f64,
    pub se_abl: f64,
    pub se_tot: f64,
    pub source: BudgetSource,
}

/// Analytic budget of a two-control unit: decay, blockade envelope and the
/// worst antiblockade pair. `e_tot` is `e_sp + e_bl`, plus `e_abl` if requested.
pub fn analytic_budget(params: &GateParameters, include_abl: bool) -> Result<ErrorBudget> {
    let ints = params.interactions()?;
    let rates = params.effective_rates();
    let e_sp = decay_error(params.omega_t, params.omega_c(), rates.gamma_t, rates.gamma_c)?;
    let u_ct = ints
        .u_ct
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    let e_bl = blockade_error_envelope(params.omega_t, u_ct)?;
    let (e_abl, _) = max_antiblockade_error(&ints, params.omega_c())?;
    let e_tot = e_sp + e_bl + if include_abl { e_abl } else { 0.0 };
    Ok(ErrorBudget {
        e_sp,
        e_bl,
        e_abl,
        e_tot,
        se_sp: 0.0,
        se_bl: 0.0,
        se_abl: 0.0,
        se_tot: 0.0,
        source: BudgetSource::Analytic,
    })
}

/// `1 - F` averaged over `units`, with each unit's overrides replaced.
fn infidelity(units: &[GateParameters], overrides: Overrides, settings: &RunSettings) -> Result<(f64, f64)> {
    let reports = units
        .iter()
        .map(|u| gate_fidelity(&u.with_overrides(overrides).build()?, settings))
        .collect::<Result<Vec<_>>>()?;
    let (f, se) = average_reports(&reports);
    Ok(((1.0 - f).max(0.0), se))
}

/// Numeric error decomposition averaged over `units`:
/// * `e_sp`: decay on, `U_cc = 0`, `U_ct` x1000;
/// * `e_bl`: decay off, `U_cc = 0`, actual `U_ct`;
/// * `e_abl`: decay off, actual `U_cc`, `U_ct` x1000;
/// * `e_tot`: everything actual.
pub fn numeric_decomposition(units: &[GateParameters], settings: &RunSettings) -> Result<ErrorBudget> {
    if units.is_empty() {
        return Err(Error::InvalidArgument("decomposition needs at least one unit".into()));
    }
    let (e_sp, se_sp) = infidelity(
        units,
        Overrides {
            zero_ucc: true,
            ct_scale: IDEAL_BLOCKADE_SCALE,
            no_decay: false,
        },
        settings,
    )?;
    let (e_bl, se_bl) = infidelity(
        units,
        Overrides {
            zero_ucc: true,
            ct_scale: 1.0,
            no_decay: true,
        },
        settings,
    )?;
    let (e_abl, se_abl) = infidelity(
        units,
        Overrides {
            zero_ucc: false,
            ct_scale: IDEAL_BLOCKADE_SCALE,
            no_decay: true,
        },
        settings,
    )?;
    let (e_tot, se_tot) = infidelity(units, Overrides::default(), settings)?;
    Ok(ErrorBudget {
        e_sp,
        e_bl,
        e_abl,
        e_tot,
        se_sp,
        se_bl,
        se_abl,
        se_tot,
        source: BudgetSource::Numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mhz, Coefficients, SphericalLayout};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const OT: f64 = 2.0 * PI * 3.784;
    const GC: f64 = 2.0 * PI * 0.002;
    const GT: f64 = 2.0 * PI * 0.004;

    #[test]
    fn decay_error_operating_points() {
        assert_relative_eq!(decay_error(OT, 10.0 * OT, GT, GC).unwrap(), 0.00598, epsilon = 5e-6);
        assert_relative_eq!(decay_error(OT, OT, GT, GC).unwrap(), 0.00747, epsilon = 5e-6);
        assert_eq!(decay_error(OT, OT, 0.0, 0.0).unwrap(), 0.0);
        assert!(decay_error(0.0, OT, GT, GC).is_err());
        assert!(decay_error(OT, OT, -1.0, GC).is_err());
    }

    #[test]
    fn k_control_decay_values() {
        let e6 = k_control_decay_error(6, OT, 10.0 * OT, GT, GC).unwrap();
        assert_relative_eq!(e6, 0.0155, epsilon = 1e-4);
        let e7 = k_control_decay_error(7, OT, 10.0 * OT, GT, GC).unwrap();
        assert_relative_eq!(e7, 0.0180, epsilon = 2e-4);
        assert_eq!(
            k_control_decay_error(2, OT, 10.0 * OT, GT, GC).unwrap(),
            decay_error(OT, 10.0 * OT, GT, GC).unwrap()
        );
        assert!(k_control_decay_error(0, OT, OT, GT, GC).is_err());
    }

    #[test]
    fn blockade_envelope() {
        assert_relative_eq!(blockade_error_envelope(OT, mhz(22.30)).unwrap(), 0.0202, epsilon = 5e-5);
        assert_eq!(blockade_error_envelope(0.0, mhz(22.30)).unwrap(), 0.0);
        assert!(matches!(blockade_error_envelope(OT, 0.0), Err(Error::BlockadeZero)));
    }

    #[test]
    fn antiblockade_values() {
        assert_relative_eq!(antiblockade_error(mhz(0.34), mhz(37.84)).unwrap(), 8.07e-5, epsilon = 1e-7);
        assert_eq!(antiblockade_error(0.0, mhz(37.84)).unwrap(), 0.0);
        assert_eq!(antiblockade_error(mhz(3.0), mhz(3.0)).unwrap(), 1.0);
        assert!(!antiblockade_in_regime(mhz(3.0), mhz(3.0)));
        assert!(antiblockade_error(1.0, 0.0).is_err());
    }

    #[test]
    fn reported_antiblockade_pair_is_the_closest() {
        let layout = SphericalLayout::antiprism(5.0, 1.85).unwrap();
        let ints = InteractionSet::from_layout(&layout, Coefficients::default()).unwrap();
        let (e, pair) = max_antiblockade_error(&ints, 10.0 * OT).unwrap();
        let (i, j) = pair.unwrap();
        let closest = (0..6)
            .flat_map(|a| ((a + 1)..6).map(move |b| (a, b)))
            .map(|(a, b)| {
                layout
                    .pair_geometry(crate::geometry::Site::Control(a), crate::geometry::Site::Control(b))
                    .unwrap()
                    .distance
            })
            .fold(f64::INFINITY, f64::min);
        let d = layout
            .pair_geometry(crate::geometry::Site::Control(i), crate::geometry::Site::Control(j))
            .unwrap()
            .distance;
        assert_relative_eq!(d, closest, max_relative = 1e-12);
        assert_relative_eq!(e, (ints.u_cc[i][j] / (10.0 * OT)).powi(2));
    }

    proptest! {
        #[test]
        fn two_control_identity(
            ot in 0.1f64..100.0, oc in 0.1f64..1000.0, gt in 0.0f64..1.0, gc in 0.0f64..1.0
        ) {
            prop_assert_eq!(
                k_control_decay_error(2, ot, oc, gt, gc).unwrap(),
                decay_error(ot, oc, gt, gc).unwrap()
            );
        }

        #[test]
        fn errors_are_dimensionless(
            ot in 0.1f64..100.0, oc in 0.1f64..1000.0, gt in 0.0f64..1.0, gc in 0.0f64..1.0,
            u_ct in 1.0f64..500.0, u_cc in 0.0f64..10.0, s in 0.01f64..100.0, k in 1usize..10
        ) {
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            prop_assert!(close(
                k_control_decay_error(k, ot, oc, gt, gc).unwrap(),
                k_control_decay_error(k, s * ot, s * oc, s * gt, s * gc).unwrap()
            ));
            prop_assert!(close(
                blockade_error_envelope(ot, u_ct).unwrap(),
                blockade_error_envelope(s * ot, s * u_ct).unwrap()
            ));
            prop_assert!(close(
                antiblockade_error(u_cc, oc).unwrap(),
                antiblockade_error(s * u_cc, s * oc).unwrap()
            ));
        }
    }
}
