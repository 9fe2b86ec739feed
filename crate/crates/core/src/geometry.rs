//! Spheroidal atom layouts and the Rydberg interactions they induce.
//!
//! Controls sit on a sphere of radius `R_ct` around a central target atom.
//! The standard layout is two rings of `ring_size` controls at `z = +h` and
//! `z = -h`, the lower ring rotated by `twist` in azimuth. Distances are in
//! micrometres and energies in angular frequency units (rad/us).

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Relative tolerance used for collinearity and on-sphere checks.
pub const GEOMETRY_TOL: f64 = 1e-9;

/// Default cap on rejection-sampling attempts.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1_000_000;

/// Converts a frequency quoted as `f` in MHz (i.e. `value / 2pi`) to rad/us.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Inverse of [`mhz`]: angular frequency in rad/us to linear MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: &Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Dispersion coefficients of the two interaction channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// Control-target resonant dipole-dipole coefficient, rad/us * um^3.
    pub c3: f64,
    /// Control-control van der Waals coefficient, rad/us * um^6.
    pub c6: f64,
}

impl Coefficients {
    pub fn from_mhz(c3_mhz_um3: f64, c6_mhz_um6: f64) -> Self {
        Self {
            c3: mhz(c3_mhz_um3),
            c6: mhz(c6_mhz_um6),
        }
    }
}

impl Default for Coefficients {
    /// 61P_{3/2} / 61S_{1/2} values for rubidium: C3 = 2pi x 4.73 GHz um^3,
    /// C6 = 2pi x 14.9 GHz um^6.
    fn default() -> Self {
        Self::from_mhz(4730.0, 14900.0)
    }
}

/// Dipole-dipole control-target shift `C3 (1 - 3 cos^2 theta) / r^3`.
///
/// `theta` is measured from the quantization axis. The result is negative
/// near the poles and vanishes at `cos(theta) = 1/sqrt(3)`.
pub fn dipole_dipole_energy(theta: f64, r: f64, c3: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveDistance(r));
    }
    let c = theta.cos();
    Ok(c3 * (1.0 - 3.0 * c * c) / (r * r * r))
}

/// Isotropic van der Waals control-control shift `C6 / r^6`.
pub fn van_der_waals_energy(r: f64, c6: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveDistance(r));
    }
    Ok(c6 / r.powi(6))
}

/// Distance at which the van der Waals shift equals `energy`.
pub fn van_der_waals_radius(energy: f64, c6: f64) -> f64 {
    (c6 / energy).powf(1.0 / 6.0)
}

/// Atom addressed within a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    Control(usize),
    Target,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Control(i) => write!(f, "C{}", i + 1),
            Site::Target => f.write_str("T"),
        }
    }
}

/// Shape of the (2+1)-qubit unit formed by two controls and the target,
/// judged by the angle the two controls subtend at the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitType {
    Linear,
    Acute,
    Obtuse,
}

impl fmt::Display for UnitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitType::Linear => "linear",
            UnitType::Acute => "acute",
            UnitType::Obtuse => "obtuse",
        })
    }
}

/// Separation of two atoms of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub distance: f64,
    /// Angle between the quantization axis and the separation vector, in [0, pi].
    pub polar_angle: f64,
    /// Only set for control-control pairs.
    pub unit_type: Option<UnitType>,
}

/// Controls on a sphere around a central target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalLayout {
    radius_ct: f64,
    height: f64,
    twist: f64,
    ring_size: usize,
    control_positions: Vec<Vec3>,
    target_position: Vec3,
}

impl SphericalLayout {
    /// Two rings of `ring_size` controls at `z = +height` and `z = -height`.
    ///
    /// Ring A sits at azimuths `2 pi m / ring_size`, ring B at the same
    /// azimuths shifted by `twist`. With three controls per ring and
    /// `twist = pi/3` this is an antiprism and every control has an
    /// antipodal partner.
    pub fn new(radius_ct: f64, height: f64, twist: f64, ring_size: usize) -> Result<Self> {
        if !(radius_ct > 0.0) || !radius_ct.is_finite() {
            return Err(Error::InvalidLayout(format!(
                "radius must be positive, got {radius_ct}"
            )));
        }
        if !(height >= 0.0 && height < radius_ct) {
            return Err(Error::DegenerateRing {
                height,
                radius: radius_ct,
            });
        }
        if ring_size == 0 {
            return Err(Error::InvalidLayout("ring_size must be at least 1".into()));
        }
        if !twist.is_finite() {
            return Err(Error::InvalidLayout(format!("twist must be finite, got {twist}")));
        }
        let rho = (radius_ct * radius_ct - height * height).sqrt();
        let mut control_positions = Vec::with_capacity(2 * ring_size);
        for (z, offset) in [(height, 0.0), (-height, twist)] {
            for m in 0..ring_size {
                let phi = 2.0 * PI * m as f64 / ring_size as f64 + offset;
                control_positions.push([rho * phi.cos(), rho * phi.sin(), z]);
            }
        }
        Ok(Self {
            radius_ct,
            height,
            twist,
            ring_size,
            control_positions,
            target_position: [0.0; 3],
        })
    }

    /// Default antiprism layout with `twist = pi/3` and three controls per ring.
    pub fn antiprism(radius_ct: f64, height: f64) -> Result<Self> {
        Self::new(radius_ct, height, PI / 3.0, 3)
    }

    /// Copy of the layout with one more control at `position`, which must lie
    /// on the sphere.
    pub fn with_extra_control(&self, position: Vec3) -> Result<Self> {
        let r = norm(&position);
        if (r - self.radius_ct).abs() > GEOMETRY_TOL * self.radius_ct {
            return Err(Error::InvalidLayout(format!(
                "extra control at distance {r} um is off the sphere of radius {}",
                self.radius_ct
            )));
        }
        let mut out = self.clone();
        out.control_positions.push(position);
        Ok(out)
    }

    pub fn radius_ct(&self) -> f64 {
        self.radius_ct
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn twist(&self) -> f64 {
        self.twist
    }

    pub fn ring_size(&self) -> usize {
        self.ring_size
    }

    /// Circumradius of each ring.
    pub fn ring_radius(&self) -> f64 {
        (self.radius_ct * self.radius_ct - self.height * self.height).sqrt()
    }

    pub fn control_count(&self) -> usize {
        self.control_positions.len()
    }

    /// Number of controls that belong to the two rings (extras excluded).
    pub fn ring_control_count(&self) -> usize {
        2 * self.ring_size
    }

    pub fn control_positions(&self) -> &[Vec3] {
        &self.control_positions
    }

    pub fn target_position(&self) -> Vec3 {
        self.target_position
    }

    pub fn position(&self, site: Site) -> Result<Vec3> {
        match site {
            Site::Target => Ok(self.target_position),
            Site::Control(i) => self
                .control_positions
                .get(i)
                .copied()
                .ok_or_else(|| Error::InvalidLayout(format!("no control with index {i}"))),
        }
    }

    /// Distance, polar angle and (for control pairs) unit type of `a - b`.
    pub fn pair_geometry(&self, a: Site, b: Site) -> Result<PairGeometry> {
        if a == b {
            return Err(Error::InvalidPair(a.to_string(), b.to_string()));
        }
        let pa = self.position(a)?;
        let pb = self.position(b)?;
        let d = sub(&pa, &pb);
        let distance = norm(&d);
        if !(distance > 0.0) {
            return Err(Error::NonPositiveDistance(distance));
        }
        let polar_angle = (d[2] / distance).clamp(-1.0, 1.0).acos();
        let unit_type = match (a, b) {
            (Site::Control(_), Site::Control(_)) => Some(classify_pair(distance, self.radius_ct)),
            _ => None,
        };
        Ok(PairGeometry {
            distance,
            polar_angle,
            unit_type,
        })
    }

    /// Index of the control diametrically opposite control `i`, if any.
    pub fn antipode_of(&self, i: usize) -> Option<usize> {
        let p = self.control_positions.get(i)?;
        self.control_positions.iter().enumerate().position(|(j, q)| {
            j != i && {
                let s = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                norm(&s) <= GEOMETRY_TOL * self.radius_ct
            }
        })
    }
}

/// Unit type of a control pair at separation `distance` on a sphere of
/// radius `radius`. Ties at `sqrt(2) R` count as acute.
pub fn classify_pair(distance: f64, radius: f64) -> UnitType {
    if (distance - 2.0 * radius).abs() <= GEOMETRY_TOL * 2.0 * radius {
        UnitType::Linear
    } else if distance <= SQRT_2 * radius {
        UnitType::Acute
    } else {
        UnitType::Obtuse
    }
}

/// All pairwise Rydberg shifts of a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSet {
    /// Control-target dipole-dipole shift per control, rad/us. May be negative.
    pub u_ct: Vec<f64>,
    /// Symmetric control-control van der Waals matrix with zero diagonal, rad/us.
    pub u_cc: Vec<Vec<f64>>,
    pub coefficients: Coefficients,
}

impl InteractionSet {
    /// Evaluates every control-target and control-control shift of `layout`.
    pub fn from_layout(layout: &SphericalLayout, coefficients: Coefficients) -> Result<Self> {
        let k = layout.control_count();
        let mut u_ct = Vec::with_capacity(k);
        for i in 0..k {
            let g = layout.pair_geometry(Site::Control(i), Site::Target)?;
            u_ct.push(dipole_dipole_energy(g.polar_angle, g.distance, coefficients.c3)?);
        }
        let mut u_cc = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in (i + 1)..k {
                let g = layout.pair_geometry(Site::Control(i), Site::Control(j))?;
                let u = van_der_waals_energy(g.distance, coefficients.c6)?;
                u_cc[i][j] = u;
                u_cc[j][i] = u;
            }
        }
        Ok(Self {
            u_ct,
            u_cc,
            coefficients,
        })
    }

    pub fn control_count(&self) -> usize {
        self.u_ct.len()
    }

    /// Restriction to a subset of controls, in the given order.
    pub fn select(&self, controls: &[usize]) -> Result<Self> {
        let k = self.control_count();
        if let Some(&bad) = controls.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidArgument(format!(
                "control index {bad} out of range for {k} controls"
            )));
        }
        for (a, &ca) in controls.iter().enumerate() {
            if controls[..a].contains(&ca) {
                return Err(Error::InvalidArgument(format!("control {ca} selected twice")));
            }
        }
        Ok(Self {
            u_ct: controls.iter().map(|&c| self.u_ct[c]).collect(),
            u_cc: controls
                .iter()
                .map(|&a| controls.iter().map(|&b| self.u_cc[a][b]).collect())
                .collect(),
            coefficients: self.coefficients,
        })
    }

    /// Largest control-control shift and the pair attaining it.
    pub fn max_u_cc(&self) -> Option<(f64, usize, usize)> {
        let k = self.control_count();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..k {
            for j in (i + 1)..k {
                let u = self.u_cc[i][j];
                if best.map_or(true, |(b, _, _)| u > b) {
                    best = Some((u, i, j));
                }
            }
        }
        best
    }

    /// Checks symmetry, zero diagonal and non-negativity of `u_cc`.
    pub fn validate(&self) -> Result<()> {
        let k = self.control_count();
        if self.u_cc.len() != k || self.u_cc.iter().any(|row| row.len() != k) {
            return Err(Error::AtomCountMismatch(format!(
                "u_cc must be {k}x{k} to match {k} control-target shifts"
            )));
        }
        for i in 0..k {
            if self.u_cc[i][i] != 0.0 {
                return Err(Error::InvalidArgument(format!("u_cc[{i}][{i}] must be zero")));
            }
            for j in 0..k {
                let u = self.u_cc[i][j];
                if u < 0.0 || u != self.u_cc[j][i] || !u.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "u_cc must be symmetric, finite and non-negative (entry {i},{j})"
                    )));
                }
            }
        }
        if self.u_ct.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidArgument("u_ct entries must be finite".into()));
        }
        Ok(())
    }
}

/// Draws a point uniformly on the layout's sphere until its van der Waals
/// shift with every existing control is below `max_ucc`.
///
/// Deterministic for a fixed `seed`. Fails after `max_attempts` rejections.
pub fn sample_extra_control(
    layout: &SphericalLayout,
    max_ucc: f64,
    c6: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<Vec3> {
    if !(max_ucc > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max_ucc must be positive, got {max_ucc}"
        )));
    }
    let r = layout.radius_ct();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_attempts {
        // Archimedes: z uniform on [-R, R] with uniform azimuth is uniform on the sphere.
        let z: f64 = rng.gen_range(-r..=r);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let s = (r * r - z * z).max(0.0).sqrt();
        let p = [s * phi.cos(), s * phi.sin(), z];
        let admissible = layout.control_positions().iter().all(|q| {
            let d = norm(&sub(&p, q));
            d > 0.0 && c6 / d.powi(6) < max_ucc
        });
        if admissible {
            return Ok(p);
        }
    }
    Err(Error::SamplerExhausted {
        attempts: max_attempts,
        max_ucc,
    })
}
