//! Physical operating points: a layout, a choice of controls, drive and
//! decay parameters, plus the interaction overrides used to isolate error
//! channels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mhz, Coefficients, InteractionSet, Site, SphericalLayout, UnitType};
use crate::model::{build_system, DecayRates, GateSystem, JumpModel, PulseSchedule};

/// Factor applied to control-target shifts to emulate a perfect blockade.
pub const IDEAL_BLOCKADE_SCALE: f64 = 1e3;

/// Default target Rabi frequency, rad/us (2pi x 3.784 MHz).
pub fn default_omega_t() -> f64 {
    mhz(3.784)
}

/// Default decay rates: 2pi x 2 kHz for controls, 2pi x 4 kHz for the target.
pub fn default_rates() -> DecayRates {
    DecayRates {
        gamma_c: mhz(2.0e-3),
        gamma_t: mhz(4.0e-3),
    }
}

/// Modifications of the physical interactions and decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overrides {
    /// Drop all control-control shifts.
    pub zero_ucc: bool,
    /// Multiplier on every control-target shift.
    pub ct_scale: f64,
    /// Switch off Rydberg decay.
    pub no_decay: bool,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            zero_ucc: false,
            ct_scale: 1.0,
            no_decay: false,
        }
    }
}

impl Overrides {
    /// No decay, no control-control shift, control-target shift x1000.
    pub fn ideal() -> Self {
        Self {
            zero_ucc: true,
            ct_scale: IDEAL_BLOCKADE_SCALE,
            no_decay: true,
        }
    }
}

/// Everything needed to build a [`GateSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParameters {
    pub layout: SphericalLayout,
    pub coefficients: Coefficients,
    /// Indices of the layout controls that take part, in register order.
    pub controls: Vec<usize>,
    /// Target Rabi frequency, rad/us.
    pub omega_t: f64,
    /// Control-to-target Rabi ratio.
    pub chi: f64,
    pub rates: DecayRates,
    pub jump_model: JumpModel,
    pub overrides: Overrides,
}

impl GateParameters {
    /// Operating point with default drive and decay using `controls` of `layout`.
    pub fn new(layout: SphericalLayout, controls: Vec<usize>) -> Self {
        Self {
            layout,
            coefficients: Coefficients::default(),
            controls,
            omega_t: default_omega_t(),
            chi: 1.0,
            rates: default_rates(),
            jump_model: JumpModel::Split,
            overrides: Overrides::default(),
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.chi * self.omega_t
    }

    pub fn with_overrides(&self, overrides: Overrides) -> Self {
        Self {
            overrides,
            ..self.clone()
        }
    }

    /// Shifts of the selected controls with overrides applied.
    pub fn interactions(&self) -> Result<InteractionSet> {
        let mut ints =
            InteractionSet::from_layout(&self.layout, self.coefficients)?.select(&self.controls)?;
        let o = &self.overrides;
        if o.zero_ucc {
            ints.u_cc.iter_mut().flatten().for_each(|u| *u = 0.0);
        }
        ints.u_ct.iter_mut().for_each(|u| *u *= o.ct_scale);
        Ok(ints)
    }

    pub fn effective_rates(&self) -> DecayRates {
        if self.overrides.no_decay {
            DecayRates::NONE
        } else {
            self.rates
        }
    }

    pub fn schedule(&self) -> Result<PulseSchedule> {
        if !(self.chi > 0.0) {
            return Err(Error::InvalidArgument(format!("chi must be positive, got {}", self.chi)));
        }
        PulseSchedule::standard(self.omega_c(), self.omega_t)
    }

    pub fn build(&self) -> Result<GateSystem> {
        build_system(
            &self.interactions()?,
            &self.schedule()?,
            self.effective_rates(),
            self.jump_model,
        )
    }
}

/// The three control pairs that make up the (2+1)-qubit units of a two-ring layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairSelection {
    /// A control and its antipode.
    Antipodal,
    /// First control of ring A with first control of ring B.
    CrossRing,
    /// Two neighbouring controls of ring A.
    SameRing,
}

impl fmt::Display for PairSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairSelection::Antipodal => "antipodal",
            PairSelection::CrossRing => "cross-ring",
            PairSelection::SameRing => "same-ring",
        })
    }
}

/// One (2+1)-qubit unit drawn from a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    pub selection: PairSelection,
    pub controls: [usize; 2],
    pub unit_type: UnitType,
    pub distance: f64,
}

/// Antipodal, cross-ring and same-ring pairs of a two-ring layout, with their
/// geometric classification.
pub fn unit_pairs(layout: &SphericalLayout) -> Result<[UnitPair; 3]> {
    if layout.ring_size() < 2 {
        return Err(Error::InvalidLayout("unit pairs need at least two controls per ring".into()));
    }
    let anti = layout.antipode_of(0).ok_or_else(|| {
        Error::InvalidLayout(format!(
            "twist {} leaves control 0 without an antipode",
            layout.twist()
        ))
    })?;
    let make = |selection, controls: [usize; 2]| -> Result<UnitPair> {
        let g = layout.pair_geometry(Site::Control(controls[0]), Site::Control(controls[1]))?;
        Ok(UnitPair {
            selection,
            controls,
            unit_type: g.unit_type.expect("control pair"),
            distance: g.distance,
        })
    };
    Ok([
        make(PairSelection::Antipodal, [0, anti])?,
        make(PairSelection::CrossRing, [0, layout.ring_size()])?,
        make(PairSelection::SameRing, [0, 1])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_types_swap_across_the_magic_height() {
        let low = unit_pairs(&SphericalLayout::antiprism(5.0, 1.85).unwrap()).unwrap();
        assert_eq!(low[0].unit_type, UnitType::Linear);
        assert_eq!(low[1].unit_type, UnitType::Acute);
        assert_eq!(low[2].unit_type, UnitType::Obtuse);
        let high = unit_pairs(&SphericalLayout::antiprism(5.0, 3.4).unwrap()).unwrap();
        assert_eq!(high[1].unit_type, UnitType::Obtuse);
        assert_eq!(high[2].unit_type, UnitType::Acute);
    }

    #[test]
    fn overrides_apply() {
        let layout = SphericalLayout::antiprism(5.0, 1.85).unwrap();
        let p = GateParameters::new(layout, vec![0, 3]);
        let base = p.interactions().unwrap();
        let ideal = p.with_overrides(Overrides::ideal()).interactions().unwrap();
        assert_eq!(ideal.u_cc[0][1], 0.0);
        assert_relative_eq!(ideal.u_ct[0], 1e3 * base.u_ct[0]);
        assert!(!p.with_overrides(Overrides::ideal()).build().unwrap().has_decay());
        assert!(p.build().unwrap().has_decay());
    }

    #[test]
    fn non_positive_chi_rejected() {
        let layout = SphericalLayout::antiprism(5.0, 1.85).unwrap();
        let mut p = GateParameters::new(layout, vec![0, 3]);
        p.chi = 0.0;
        assert!(p.build().is_err());
    }
}
