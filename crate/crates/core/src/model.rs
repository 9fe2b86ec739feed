//! Composite-basis register: level schemes, the five-pulse schedule,
//! piecewise-constant Hamiltonians and Rydberg decay channels.
//!
//! Every atom has three levels encoded as digits `0 -> |0>`, `1 -> |1>`,
//! `2 -> |r>` (`|c>` for controls, `|t>` for the target). Controls come first
//! and the target is the last, least-significant base-3 digit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::InteractionSet;
use crate::sparse::SparseMatrix;

/// Levels per atom.
pub const LEVELS: usize = 3;
/// Digit of the Rydberg level.
pub const RYDBERG: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Control,
    Target,
}

/// Three-level scheme of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelScheme {
    pub role: Role,
}

impl LevelScheme {
    pub fn labels(&self) -> [&'static str; 3] {
        match self.role {
            Role::Control => ["0", "1", "c"],
            Role::Target => ["0", "1", "t"],
        }
    }

    pub fn label(&self, digit: u8) -> &'static str {
        self.labels()[digit as usize]
    }
}

/// Base-3 index of a per-atom digit configuration, target last.
pub fn basis_index(digits: &[u8]) -> Result<usize> {
    digits.iter().enumerate().try_fold(0usize, |acc, (pos, &d)| {
        if d as usize >= LEVELS {
            Err(Error::InvalidDigit {
                digit: char::from_digit(d as u32, 10).unwrap_or('?'),
                position: pos,
            })
        } else {
            Ok(acc * LEVELS + d as usize)
        }
    })
}

/// Parses a digit string such as `"220"` or `"2 2 0"`; whitespace is ignored.
pub fn parse_digits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .enumerate()
        .map(|(pos, ch)| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            '2' => Ok(2),
            _ => Err(Error::InvalidDigit { digit: ch, position: pos }),
        })
        .collect()
}

/// Inverse of [`basis_index`] for an `n_atoms` register.
pub fn basis_digits(mut index: usize, n_atoms: usize) -> Vec<u8> {
    let mut digits = vec![0u8; n_atoms];
    for d in digits.iter_mut().rev() {
        *d = (index % LEVELS) as u8;
        index /= LEVELS;
    }
    digits
}

pub fn format_digits(digits: &[u8]) -> String {
    digits.iter().map(|d| char::from(b'0' + d)).collect()
}

/// Which atoms a pulse illuminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Addressed {
    /// All controls, globally.
    Controls,
    Target,
}

/// Ground level coupled to the Rydberg level by a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// `|0> <-> |r>`
    Zero,
    /// `|1> <-> |r>`
    One,
}

impl Transition {
    pub fn lower(self) -> u8 {
        match self {
            Transition::Zero => 0,
            Transition::One => 1,
        }
    }
}

/// Square resonant pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub addressed: Addressed,
    pub transition: Transition,
    /// Rabi frequency, rad/us.
    pub rabi: f64,
    pub phase: f64,
    /// Duration, us.
    pub duration: f64,
}

impl Pulse {
    /// Pulse of area pi: `|lower> -> -i e^{i phase} |r>`.
    pub fn pi(addressed: Addressed, transition: Transition, rabi: f64, phase: f64) -> Result<Self> {
        if !(rabi > 0.0) || !rabi.is_finite() {
            return Err(Error::NonPositiveRabi(rabi));
        }
        Ok(Self {
            addressed,
            transition,
            rabi,
            phase,
            duration: PI / rabi,
        })
    }
}

/// Ordered, back-to-back pulses starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pulses: Vec<Pulse>,
    starts: Vec<f64>,
}

impl PulseSchedule {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one pulse".into()));
        }
        let mut starts = Vec::with_capacity(pulses.len());
        let mut t = 0.0;
        for p in &pulses {
            if !(p.duration > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "pulse duration must be positive, got {}",
                    p.duration
                )));
            }
            starts.push(t);
            t += p.duration;
        }
        Ok(Self { pulses, starts })
    }

    /// The Toffoli sequence: controls `|0> -> |c>`, target `|1> <-> |t>`,
    /// `|0> <-> |t>`, `|1> <-> |t>`, then controls back with phase pi.
    pub fn standard(omega_c: f64, omega_t: f64) -> Result<Self> {
        use Addressed::*;
        use Transition::*;
        Self::new(vec![
            Pulse::pi(Controls, Zero, omega_c, 0.0)?,
            Pulse::pi(Target, One, omega_t, 0.0)?,
            Pulse::pi(Target, Zero, omega_t, 0.0)?,
            Pulse::pi(Target, One, omega_t, 0.0)?,
            Pulse::pi(Controls, Zero, omega_c, PI)?,
        ])
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn start(&self, window: usize) -> f64 {
        self.starts[window]
    }

    pub fn end(&self, window: usize) -> f64 {
        self.starts[window] + self.pulses[window].duration
    }

    pub fn total_duration(&self) -> f64 {
        self.end(self.pulses.len() - 1)
    }

    /// Index of the pulse active at `t`. A boundary belongs to the later pulse;
    /// the final instant belongs to the last one.
    pub fn window_at(&self, t: f64) -> Result<usize> {
        let total = self.total_duration();
        if !(t >= 0.0 && t <= total) {
            return Err(Error::TimeOutOfRange { t, total });
        }
        Ok(self.starts.iter().rposition(|&s| s <= t).unwrap_or(0))
    }
}

/// How Rydberg decay is split into jump channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpModel {
    /// Two channels `sqrt(G/2) |g><r|`, g in {0, 1}; total decay rate G.
    #[default]
    Split,
    /// One channel `sqrt(G) (|0><r| + |1><r|)`; total decay rate 2G.
    PaperLiteral,
}

impl fmt::Display for JumpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JumpModel::Split => "split",
            JumpModel::PaperLiteral => "paper-literal",
        })
    }
}

/// Rydberg decay rates in rad/us.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma_c: f64,
    pub gamma_t: f64,
}

impl DecayRates {
    pub const NONE: Self = Self {
        gamma_c: 0.0,
        gamma_t: 0.0,
    };

    fn validate(&self) -> Result<()> {
        for g in [self.gamma_c, self.gamma_t] {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::NegativeRate(g));
            }
        }
        Ok(())
    }
}

/// Decay channel of one atom's Rydberg level into one or more ground levels.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub atom: usize,
    /// Channel label within the atom (0, 1 for split; 0 for paper-literal).
    pub channel: usize,
    /// `(ground digit, amplitude)` pairs.
    pub branches: Vec<(u8, f64)>,
    stride: usize,
}

impl JumpOperator {
    /// Coefficient of `|r><r|` in `L^dagger L`.
    pub fn rate(&self) -> f64 {
        self.branches.iter().map(|(_, c)| c * c).sum()
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `out = L psi` over the full register.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (i, &amp) in psi.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) || digit_of(i, self.stride) != RYDBERG {
                continue;
            }
            for &(g, c) in &self.branches {
                out[i - (RYDBERG - g) as usize * self.stride] += amp * c;
            }
        }
    }

    /// `||L psi||^2`.
    pub fn weight(&self, psi: &[Complex64]) -> f64 {
        let pop: f64 = psi
            .iter()
            .enumerate()
            .filter(|(i, _)| digit_of(*i, self.stride) == RYDBERG)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        self.rate() * pop
    }
}

fn digit_of(index: usize, stride: usize) -> u8 {
    ((index / stride) % LEVELS) as u8
}

/// Register with `k` controls and one target, driven by a pulse schedule.
///
/// Immutable once built; safe to share between solver threads.
#[derive(Debug, Clone)]
pub struct GateSystem {
    n_controls: usize,
    dim: usize,
    strides: Vec<usize>,
    interaction: Vec<f64>,
    decay: Vec<f64>,
    drives: Vec<SparseMatrix>,
    jumps: Vec<JumpOperator>,
    schedule: PulseSchedule,
    interactions: InteractionSet,
    rates: DecayRates,
    jump_model: JumpModel,
}

/// Assembles the Hamiltonian pieces and jump operators of a register whose
/// controls carry the shifts in `interactions`.
pub fn build_system(
    interactions: &InteractionSet,
    schedule: &PulseSchedule,
    rates: DecayRates,
    jump_model: JumpModel,
) -> Result<GateSystem> {
    interactions.validate()?;
    rates.validate()?;
    let k = interactions.control_count();
    if k == 0 {
        return Err(Error::AtomCountMismatch("register needs at least one control".into()));
    }
    let n = k + 1;
    let dim = LEVELS.pow(n as u32);
    let strides: Vec<usize> = (0..n).map(|a| LEVELS.pow((n - 1 - a) as u32)).collect();
    let target = n - 1;

    let mut interaction = vec![0.0; dim];
    for (i, e) in interaction.iter_mut().enumerate() {
        let rydberg: Vec<bool> = strides.iter().map(|&s| digit_of(i, s) == RYDBERG).collect();
        for p in 0..k {
            if !rydberg[p] {
                continue;
            }
            for q in (p + 1)..k {
                if rydberg[q] {
                    *e += interactions.u_cc[p][q];
                }
            }
            if rydberg[target] {
                *e += interactions.u_ct[p];
            }
        }
    }

    let drives = schedule
        .pulses()
        .iter()
        .map(|pulse| {
            let atoms: Vec<usize> = match pulse.addressed {
                Addressed::Controls => (0..k).collect(),
                Addressed::Target => vec![target],
            };
            let lower = pulse.transition.lower();
            let coupling = Complex64::from_polar(pulse.rabi / 2.0, pulse.phase);
            let mut triplets = Vec::new();
            for &a in &atoms {
                let s = strides[a];
                for i in 0..dim {
                    if digit_of(i, s) == lower {
                        let j = i + (RYDBERG - lower) as usize * s;
                        triplets.push((j, i, coupling));
                        triplets.push((i, j, coupling.conj()));
                    }
                }
            }
            SparseMatrix::from_triplets(dim, triplets)
        })
        .collect();

    let mut jumps = Vec::new();
    for atom in 0..n {
        let gamma = if atom == target { rates.gamma_t } else { rates.gamma_c };
        if gamma == 0.0 {
            continue;
        }
        let stride = strides[atom];
        match jump_model {
            JumpModel::Split => {
                for g in 0..2u8 {
                    jumps.push(JumpOperator {
                        atom,
                        channel: g as usize,
                        branches: vec![(g, (gamma / 2.0).sqrt())],
                        stride,
                    });
                }
            }
            JumpModel::PaperLiteral => jumps.push(JumpOperator {
                atom,
                channel: 0,
                branches: vec![(0, gamma.sqrt()), (1, gamma.sqrt())],
                stride,
            }),
        }
    }

    let mut decay = vec![0.0; dim];
    for (i, d) in decay.iter_mut().enumerate() {
        *d = jumps
            .iter()
            .filter(|l| digit_of(i, l.stride) == RYDBERG)
            .map(JumpOperator::rate)
            .sum();
    }

    Ok(GateSystem {
        n_controls: k,
        dim,
        strides,
        interaction,
        decay,
        drives,
        jumps,
        schedule: schedule.clone(),
        interactions: interactions.clone(),
        rates,
        jump_model,
    })
}

impl GateSystem {
    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn n_atoms(&self) -> usize {
        self.n_controls + 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self, atom: usize) -> Role {
        if atom == self.n_controls {
            Role::Target
        } else {
            Role::Control
        }
    }

    pub fn stride(&self, atom: usize) -> usize {
        self.strides[atom]
    }

    /// Level of `atom` in basis state `index`.
    pub fn digit(&self, index: usize, atom: usize) -> u8 {
        digit_of(index, self.strides[atom])
    }

    /// Real diagonal of the interaction Hamiltonian.
    pub fn interaction_diagonal(&self) -> &[f64] {
        &self.interaction
    }

    /// Diagonal of `sum_k L_k^dagger L_k`.
    pub fn decay_diagonal(&self) -> &[f64] {
        &self.decay
    }

    /// Hermitian drive of pulse `window` (without the interaction diagonal).
    pub fn drive(&self, window: usize) -> &SparseMatrix {
        &self.drives[window]
    }

    pub fn jump_operators(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn has_decay(&self) -> bool {
        !self.jumps.is_empty()
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn interactions(&self) -> &InteractionSet {
        &self.interactions
    }

    pub fn rates(&self) -> DecayRates {
        self.rates
    }

    pub fn jump_model(&self) -> JumpModel {
        self.jump_model
    }

    /// Hermitian Hamiltonian (drive of the active pulse plus interactions) at `t`.
    pub fn hamiltonian_at(&self, t: f64) -> Result<SparseMatrix> {
        let w = self.schedule.window_at(t)?;
        Ok(self.hamiltonian_in_window(w))
    }

    pub fn hamiltonian_in_window(&self, window: usize) -> SparseMatrix {
        let diag = SparseMatrix::from_triplets(
            self.dim,
            self.interaction
                .iter()
                .enumerate()
                .map(|(i, &e)| (i, i, Complex64::new(e, 0.0)))
                .collect(),
        );
        diag.add(&self.drives[window])
    }
}
