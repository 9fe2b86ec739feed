//! Run configuration: a JSON document whose sections all have defaults.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use spheregate_core::geometry::{mhz, Coefficients, SphericalLayout};
use spheregate_core::{DecayRates, JumpModel, Mode, Overrides, RunSettings, SolverOptions};

/// Operating height as a fraction of the control-target distance.
pub const DEFAULT_H_OVER_R: f64 = 0.37;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Control-target distance, um.
    pub radius_um: f64,
    /// Ring height above the target; defaults to 0.37 x radius.
    pub height_um: Option<f64>,
    /// Azimuthal offset of the lower ring, rad.
    pub twist_rad: f64,
    pub ring_size: usize,
    #[serde(rename = "c3_MHz_um3")]
    pub c3_mhz_um3: f64,
    #[serde(rename = "c6_MHz_um6")]
    pub c6_mhz_um6: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            radius_um: 5.0,
            height_um: None,
            twist_rad: PI / 3.0,
            ring_size: 3,
            c3_mhz_um3: 4730.0,
            c6_mhz_um6: 14900.0,
        }
    }
}

impl GeometryConfig {
    pub fn height(&self) -> f64 {
        self.height_um.unwrap_or(DEFAULT_H_OVER_R * self.radius_um)
    }

    pub fn layout_at(&self, height: f64) -> Result<SphericalLayout> {
        Ok(SphericalLayout::new(
            self.radius_um,
            height,
            self.twist_rad,
            self.ring_size,
        )?)
    }

    pub fn layout(&self) -> Result<SphericalLayout> {
        self.layout_at(self.height())
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients::from_mhz(self.c3_mhz_um3, self.c6_mhz_um6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// Target Rabi frequency, MHz (linear).
    #[serde(rename = "omega_t_MHz")]
    pub omega_t_mhz: f64,
    /// Control-to-target Rabi ratio; each command has its own default.
    pub chi: Option<f64>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            omega_t_mhz: 3.784,
            chi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Control Rydberg decay rate, kHz (linear).
    #[serde(rename = "gamma_c_kHz")]
    pub gamma_c_khz: f64,
    /// Target Rydberg decay rate, kHz (linear).
    #[serde(rename = "gamma_t_kHz")]
    pub gamma_t_khz: f64,
    pub jump_model: JumpModel,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            gamma_c_khz: 2.0,
            gamma_t_khz: 4.0,
            jump_model: JumpModel::Split,
        }
    }
}

impl DecayConfig {
    pub fn rates(&self) -> DecayRates {
        DecayRates {
            gamma_c: mhz(self.gamma_c_khz * 1e-3),
            gamma_t: mhz(self.gamma_t_khz * 1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Evolution mode; each command has its own default.
    pub mode: Option<Mode>,
    pub trajectories: usize,
    pub rk4_substeps_per_period: usize,
    pub jump_time_tol_us: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            mode: None,
            trajectories: 500,
            rk4_substeps_per_period: o.substeps,
            jump_time_tol_us: o.jump_time_tol,
        }
    }
}

/// Linear grid over the swept parameter of a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Optional check that the grid is meant for this command's parameter.
    #[serde(default)]
    pub parameter: Option<String>,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepConfig {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            parameter: None,
            start,
            stop,
            points,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match i {
                0 => self.start,
                i if i + 1 == self.points => self.stop,
                i => {
                    let i = i as f64;
                    (self.start * (n - i) + self.stop * i) / n
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub drive: DriveConfig,
    pub decay: DecayConfig,
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    pub overrides: Overrides,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            drive: DriveConfig::default(),
            decay: DecayConfig::default(),
            solver: SolverConfig::default(),
            sweep: None,
            overrides: Overrides::default(),
            output_dir: PathBuf::from("out"),
            master_seed: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.radius_um > 0.0) {
            bail!("geometry.radius_um must be positive, got {}", g.radius_um);
        }
        if let Some(h) = g.height_um {
            if !(h.abs() < g.radius_um) {
                bail!("geometry.height_um must lie inside (-radius, radius), got {h}");
            }
        }
        if g.ring_size == 0 {
            bail!("geometry.ring_size must be at least 1");
        }
        if !(g.c3_mhz_um3 > 0.0) || !(g.c6_mhz_um6 > 0.0) {
            bail!("interaction coefficients must be positive");
        }
        if !(self.drive.omega_t_mhz > 0.0) {
            bail!("drive.omega_t_MHz must be positive, got {}", self.drive.omega_t_mhz);
        }
        if let Some(chi) = self.drive.chi {
            if !(chi > 0.0) {
                bail!("drive.chi must be positive, got {chi}");
            }
        }
        if !(self.decay.gamma_c_khz >= 0.0) || !(self.decay.gamma_t_khz >= 0.0) {
            bail!("decay rates must be non-negative");
        }
        if self.solver.trajectories == 0 {
            bail!("solver.trajectories must be at least 1");
        }
        if self.solver.rk4_substeps_per_period == 0 {
            bail!("solver.rk4_substeps_per_period must be at least 1");
        }
        if !(self.solver.jump_time_tol_us > 0.0) {
            bail!("solver.jump_time_tol_us must be positive");
        }
        if !(self.overrides.ct_scale.is_finite()) {
            bail!("overrides.ct_scale must be finite");
        }
        if let Some(s) = &self.sweep {
            if s.points < 2 {
                bail!("sweep.points must be at least 2, got {}", s.points);
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                bail!("sweep bounds must be finite");
            }
        }
        Ok(())
    }

    /// The configured sweep grid, or `default` when none is given. A sweep
    /// naming a different parameter is rejected.
    pub fn sweep_or(&self, parameter: &str, default: SweepConfig) -> Result<SweepConfig> {
        match &self.sweep {
            Some(s) => {
                if let Some(p) = &s.parameter {
                    if p != parameter {
                        bail!("sweep.parameter is {p:?} but this command sweeps {parameter:?}");
                    }
                }
                Ok(s.clone())
            }
            None => Ok(default),
        }
    }

    /// Copy with the per-command defaults filled in, as recorded in outputs.
    pub fn resolved(&self, chi: f64, mode: Mode) -> Self {
        let mut cfg = self.clone();
        cfg.drive.chi = Some(chi);
        cfg.solver.mode = Some(mode);
        cfg.geometry.height_um = Some(self.geometry.height());
        cfg
    }

    pub fn chi_or(&self, default: f64) -> f64 {
        self.drive.chi.unwrap_or(default)
    }

    pub fn settings(&self, default_mode: Mode) -> RunSettings {
        RunSettings {
            mode: self.solver.mode.unwrap_or(default_mode),
            trajectories: self.solver.trajectories,
            master_seed: self.master_seed,
            solver: SolverOptions {
                substeps: self.solver.rk4_substeps_per_period,
                jump_time_tol: self.solver.jump_time_tol_us,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!((cfg.geometry.height() - 1.85).abs() < 1e-12);
        cfg.validate().unwrap();
    }

    #[test]
    fn unit_suffixed_keys() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"drive": {"omega_t_MHz": 5.0, "chi": 2.0}, "decay": {"gamma_c_kHz": 0.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.drive.omega_t_mhz, 5.0);
        assert_eq!(cfg.decay.gamma_c_khz, 0.0);
        assert_eq!(cfg.decay.gamma_t_khz, 4.0);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.drive.chi = Some(0.0);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.sweep = Some(SweepConfig::new(0.1, 0.9, 1));
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn grid_hits_both_ends() {
        let g = SweepConfig::new(0.1, 0.7, 4).grid();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[3], 0.7);
        assert!((g[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sweep_parameter_must_match() {
        let mut cfg = RunConfig::default();
        let mut s = SweepConfig::new(1.0, 10.0, 5);
        s.parameter = Some("chi".into());
        cfg.sweep = Some(s);
        assert!(cfg.sweep_or("chi", SweepConfig::new(0.0, 1.0, 2)).is_ok());
        assert!(cfg.sweep_or("h_over_r", SweepConfig::new(0.0, 1.0, 2)).is_err());
    }
}
