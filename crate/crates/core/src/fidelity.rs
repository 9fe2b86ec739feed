//! Ideal C_kNOT etalon, computational inputs and gate fidelities.
//!
//! The per-input fidelity is the etalon population `<psi_et|rho|psi_et>` of
//! the final state, averaged uniformly over the `2^n` computational inputs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{basis_index, format_digits, GateSystem};
use crate::solver::{
    evolve_master, evolve_nojump, inner, run_ensemble, DensityMatrix, SolverOptions,
};

/// How a final state is obtained for each input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Trajectory-averaged Monte-Carlo wavefunction.
    #[default]
    Mcwf,
    /// Unnormalized no-jump state; jumped trajectories count as failures.
    Nojump,
    /// Lindblad master equation (small registers only).
    Master,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mcwf => "mcwf",
            Mode::Nojump => "nojump",
            Mode::Master => "master",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcwf" => Ok(Mode::Mcwf),
            "nojump" => Ok(Mode::Nojump),
            "master" => Ok(Mode::Master),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode {other:?} (expected mcwf, nojump or master)"
            ))),
        }
    }
}

/// Every register configuration with all atoms in `{|0>, |1>}`, in binary
/// order with the first control most significant and the target last.
pub fn input_states(k: usize) -> Vec<Vec<u8>> {
    let n = k + 1;
    (0..1usize << n)
        .map(|b| (0..n).map(|a| ((b >> (n - 1 - a)) & 1) as u8).collect())
        .collect()
}

/// Ideal output of a computational input: a single basis state and its amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Etalon {
    pub digits: Vec<u8>,
    pub amplitude: Complex64,
}

/// The ideal C_kNOT image of `input`: the target flips with amplitude -1 when
/// every control is `|1>`, otherwise the input is returned unchanged.
pub fn etalon(input: &[u8]) -> Result<Etalon> {
    if input.len() < 2 || input.iter().any(|&d| d > 1) {
        return Err(Error::NotComputational(format_digits(input)));
    }
    let (controls, target) = input.split_at(input.len() - 1);
    if controls.iter().all(|&d| d == 1) {
        let mut digits = input.to_vec();
        *digits.last_mut().unwrap() = 1 - target[0];
        Ok(Etalon {
            digits,
            amplitude: Complex64::new(-1.0, 0.0),
        })
    } else {
        Ok(Etalon {
            digits: input.to_vec(),
            amplitude: Complex64::new(1.0, 0.0),
        })
    }
}

/// Etalon of `input` as a full register vector.
pub fn etalon_state(input: &[u8]) -> Result<Vec<Complex64>> {
    let e = etalon(input)?;
    let dim = 3usize.pow(input.len() as u32);
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[basis_index(&e.digits)?] = e.amplitude;
    Ok(v)
}

pub fn basis_state(digits: &[u8]) -> Result<Vec<Complex64>> {
    let dim = 3usize.pow(digits.len() as u32);
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[basis_index(digits)?] = Complex64::new(1.0, 0.0);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub mode: Mode,
    pub trajectories: usize,
    pub master_seed: u64,
    pub solver: SolverOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            mode: Mode::Mcwf,
            trajectories: 500,
            master_seed: 1,
            solver: SolverOptions::default(),
        }
    }
}

/// Outcome of one computational input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputOutcome {
    pub input: Vec<u8>,
    pub fidelity: f64,
    pub std_error: f64,
    /// Final basis populations as sparse `(index, population)`.
    pub populations: Vec<(usize, f64)>,
}

impl InputOutcome {
    pub fn input_bits(&self) -> String {
        format_digits(&self.input)
    }

    /// Most populated output basis state.
    pub fn dominant_output(&self) -> Option<(usize, f64)> {
        self.populations
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }
}

/// Simulates one computational input in the requested mode.
pub fn simulate_input(
    system: &GateSystem,
    input: &[u8],
    input_index: u64,
    settings: &RunSettings,
) -> Result<InputOutcome> {
    if input.len() != system.n_atoms() {
        return Err(Error::AtomCountMismatch(format!(
            "input {} has {} atoms, system has {}",
            format_digits(input),
            input.len(),
            system.n_atoms()
        )));
    }
    let psi0 = basis_state(input)?;
    let et = etalon_state(input)?;
    let (fidelity, std_error, populations) = match settings.mode {
        Mode::Nojump => {
            let psi = evolve_nojump(system, &psi0, &settings.solver)?;
            let pops = sparse_populations(psi.iter().map(|a| a.norm_sqr()));
            (inner(&et, &psi).norm_sqr(), 0.0, pops)
        }
        Mode::Mcwf => {
            let stats = run_ensemble(
                system,
                &psi0,
                settings.trajectories,
                settings.master_seed,
                input_index,
                &et,
                &settings.solver,
            )?;
            (stats.mean, stats.std_error, stats.populations)
        }
        Mode::Master => {
            let rho = evolve_master(system, &DensityMatrix::pure(&psi0), &settings.solver)?;
            let pops = sparse_populations(rho.populations().into_iter());
            (rho.expectation(&et), 0.0, pops)
        }
    };
    Ok(InputOutcome {
        input: input.to_vec(),
        fidelity: fidelity.clamp(0.0, 1.0),
        std_error,
        populations,
    })
}

fn sparse_populations(pops: impl Iterator<Item = f64>) -> Vec<(usize, f64)> {
    pops.enumerate().filter(|(_, p)| *p > 1e-300).collect()
}

/// Per-input and averaged fidelities of one gate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub outcomes: Vec<InputOutcome>,
    /// Arithmetic mean of the per-input fidelities.
    pub average: f64,
    pub std_error: f64,
    pub settings: RunSettings,
    pub n_qubits: usize,
}

impl FidelityReport {
    pub fn input_count(&self) -> usize {
        self.outcomes.len()
    }

    fn from_outcomes(outcomes: Vec<InputOutcome>, settings: RunSettings, n_qubits: usize) -> Self {
        let m = outcomes.len() as f64;
        let average = outcomes.iter().map(|o| o.fidelity).sum::<f64>() / m;
        let std_error = outcomes.iter().map(|o| o.std_error.powi(2)).sum::<f64>().sqrt() / m;
        Self {
            outcomes,
            average,
            std_error,
            settings,
            n_qubits,
        }
    }
}

/// Fidelity of the gate over all `2^(k+1)` computational inputs.
///
/// Inputs run in parallel; input `i` always uses trajectory seeds derived from
/// `(master_seed, i)`, so the report does not depend on scheduling.
pub fn gate_fidelity(system: &GateSystem, settings: &RunSettings) -> Result<FidelityReport> {
    let inputs = input_states(system.n_controls());
    let outcomes = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| simulate_input(system, input, i as u64, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityReport::from_outcomes(outcomes, *settings, system.n_atoms()))
}

/// Mean and combined standard error of several averaged fidelities.
pub fn average_reports(reports: &[FidelityReport]) -> (f64, f64) {
    let m = reports.len() as f64;
    let mean = reports.iter().map(|r| r.average).sum::<f64>() / m;
    let se = reports.iter().map(|r| r.std_error.powi(2)).sum::<f64>().sqrt() / m;
    (mean, se)
}
