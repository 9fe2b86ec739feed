//! Time evolution under the piecewise-constant effective Hamiltonian
//! `H_eff = H - (i/2) sum_k L_k^dagger L_k`.
//!
//! Three modes share one fixed-step RK4 stepper:
//! * no-jump evolution (unnormalized; the squared norm is the no-decay probability),
//! * Monte-Carlo wavefunction trajectories with waiting-time jumps,
//! * a dense Lindblad master equation used as an oracle for small registers.
//!
//! State vectors only ever populate basis states connected to their initial
//! support by the pulse drives, so evolution runs on that connected
//! subspace and is re-derived after every quantum jump.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GateSystem;
use crate::sparse::SparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest register the master-equation oracle accepts (four atoms).
pub const MASTER_DIM_LIMIT: usize = 81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// RK4 steps per characteristic time `min(1/Omega, 1/|U|_max)`.
    pub substeps: usize,
    /// Jump-time bisection tolerance, us.
    pub jump_time_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            substeps: 50,
            jump_time_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be at least 1".into()));
        }
        if !(self.jump_time_tol > 0.0) {
            return Err(Error::InvalidArgument("jump_time_tol must be positive".into()));
        }
        Ok(())
    }
}

pub fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum()
}

/// `<a|b>`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Number of RK4 steps used for an interval of length `duration` given the
/// window's Rabi frequency and the largest interaction shift in play.
pub fn step_count(duration: f64, rabi: f64, u_max: f64, substeps: usize) -> usize {
    if duration <= 0.0 {
        return 0;
    }
    let mut period = 1.0 / rabi.abs();
    if u_max > 0.0 {
        period = period.min(1.0 / u_max);
    }
    // Rounded to whole periods so that doubling `substeps` exactly halves dt.
    let periods = (duration / period * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    periods * substeps
}

/// Basis states reachable from `support` through any pulse drive.
fn connected_subspace(system: &GateSystem, support: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let dim = system.dim();
    let mut seen = vec![false; dim];
    let mut stack: Vec<usize> = Vec::new();
    for i in support {
        if !seen[i] {
            seen[i] = true;
            stack.push(i);
        }
    }
    let n_windows = system.schedule().len();
    while let Some(i) = stack.pop() {
        for w in 0..n_windows {
            for (j, _) in system.drive(w).row(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    (0..dim).filter(|&i| seen[i]).collect()
}

fn support_of(psi: &[Complex64]) -> impl Iterator<Item = usize> + '_ {
    psi.iter()
        .enumerate()
        .filter(|(_, a)| **a != ZERO)
        .map(|(i, _)| i)
}

/// `H_eff` restricted to a drive-connected subspace, one matrix per window.
struct LocalGenerator {
    states: Vec<usize>,
    windows: Vec<SparseMatrix>,
    u_max: f64,
}

impl LocalGenerator {
    fn new(system: &GateSystem, states: Vec<usize>) -> Self {
        let mut local = vec![usize::MAX; system.dim()];
        for (l, &i) in states.iter().enumerate() {
            local[i] = l;
        }
        let inter = system.interaction_diagonal();
        let decay = system.decay_diagonal();
        let u_max = states.iter().map(|&i| inter[i].abs()).fold(0.0, f64::max);
        let windows = (0..system.schedule().len())
            .map(|w| {
                let drive = system.drive(w);
                let mut triplets = Vec::new();
                for (l, &i) in states.iter().enumerate() {
                    triplets.push((l, l, Complex64::new(inter[i], -0.5 * decay[i])));
                    for (j, v) in drive.row(i) {
                        debug_assert!(local[j] != usize::MAX, "subspace not closed");
                        triplets.push((l, local[j], v));
                    }
                }
                SparseMatrix::from_triplets(states.len(), triplets)
            })
            .collect();
        Self {
            states,
            windows,
            u_max,
        }
    }

    fn for_support(system: &GateSystem, psi: &[Complex64]) -> Self {
        Self::new(system, connected_subspace(system, support_of(psi)))
    }

    fn restrict(&self, full: &[Complex64]) -> Vec<Complex64> {
        self.states.iter().map(|&i| full[i]).collect()
    }

    fn extend(&self, local: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut full = vec![ZERO; dim];
        for (&i, &a) in self.states.iter().zip(local) {
            full[i] = a;
        }
        full
    }
}

/// Classical RK4 for `psi' = -i H psi` with reusable stage buffers.
struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![ZERO; dim]),
            tmp: vec![ZERO; dim],
        }
    }

    fn resize(&mut self, dim: usize) {
        for k in &mut self.k {
            k.resize(dim, ZERO);
        }
        self.tmp.resize(dim, ZERO);
    }

    fn rhs(h: &SparseMatrix, x: &[Complex64], out: &mut [Complex64]) {
        h.mul_vec_into(x, out);
        for o in out.iter_mut() {
            *o = Complex64::new(o.im, -o.re);
        }
    }

    /// One step of size `dt` from `psi` into `out`.
    fn step(&mut self, h: &SparseMatrix, psi: &[Complex64], dt: f64, out: &mut [Complex64]) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::rhs(h, psi, k1);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k1[i] * (0.5 * dt);
        }
        Self::rhs(h, tmp, k2);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k2[i] * (0.5 * dt);
        }
        Self::rhs(h, tmp, k3);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k3[i] * dt;
        }
        Self::rhs(h, tmp, k4);
        let c = dt / 6.0;
        for i in 0..psi.len() {
            out[i] = psi[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
        }
    }
}

fn check_initial(system: &GateSystem, psi0: &[Complex64]) -> Result<()> {
    if psi0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            got: psi0.len(),
            expected: system.dim(),
        });
    }
    let n = norm_sqr(psi0);
    if !((n - 1.0).abs() <= 1e-9) {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

fn check_finite(psi: &[Complex64], t: f64, window: usize) -> Result<()> {
    if psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t, window })
    }
}

/// Deterministic no-jump evolution over the whole schedule.
///
/// Returns the unnormalized state at the end of the last pulse; its squared
/// norm is the probability that no quantum jump occurred.
pub fn evolve_nojump(
    system: &GateSystem,
    psi0: &[Complex64],
    options: &SolverOptions,
) -> Result<Vec<Complex64>> {
    options.validate()?;
    check_initial(system, psi0)?;
    let gen = LocalGenerator::for_support(system, psi0);
    let mut psi = gen.restrict(psi0);
    let mut next = vec![ZERO; psi.len()];
    let mut rk = Rk4::new(psi.len());
    let schedule = system.schedule();
    for (w, pulse) in schedule.pulses().iter().enumerate() {
        let n = step_count(pulse.duration, pulse.rabi, gen.u_max, options.substeps);
        let dt = pulse.duration / n as f64;
        for _ in 0..n {
            rk.step(&gen.windows[w], &psi, dt, &mut next);
            std::mem::swap(&mut psi, &mut next);
        }
        check_finite(&psi, schedule.end(w), w)?;
    }
    Ok(gen.extend(&psi, system.dim()))
}

/// One recorded quantum jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub atom: usize,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    /// Normalized state at the end of the schedule.
    pub state: Vec<Complex64>,
    pub jumps: Vec<JumpRecord>,
    /// Squared norm accumulated since the last renormalization.
    pub survival_weight: f64,
}

/// Monte-Carlo wavefunction trajectory (waiting-time algorithm).
///
/// A uniform threshold `r` is drawn; the state evolves without jumps until
/// its squared norm falls below `r`, the crossing time is bisected, a decay
/// channel is chosen with probability proportional to `||L_k psi||^2`, the
/// state is renormalized and a new threshold drawn.
pub fn evolve_trajectory(
    system: &GateSystem,
    psi0: &[Complex64],
    seed: u64,
    options: &SolverOptions,
) -> Result<TrajectoryResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trajectory(system, psi0, Some(&mut rng), options).map(|(r, _)| r)
}

/// Shared trajectory loop. Without an RNG no jump is ever taken; the second
/// return value is the smallest squared norm seen at a step boundary.
fn trajectory(
    system: &GateSystem,
    psi0: &[Complex64],
    mut rng: Option<&mut ChaCha8Rng>,
    options: &SolverOptions,
) -> Result<(TrajectoryResult, f64)> {
    options.validate()?;
    check_initial(system, psi0)?;
    let dim = system.dim();
    let schedule = system.schedule();
    let decays = system.has_decay();
    let mut threshold: f64 = match rng.as_deref_mut() {
        Some(r) => r.gen(),
        None => f64::NEG_INFINITY,
    };
    let mut min_norm: f64 = 1.0;

    let mut gen = LocalGenerator::for_support(system, psi0);
    let mut psi = gen.restrict(psi0);
    let mut next = vec![ZERO; psi.len()];
    let mut probe = vec![ZERO; psi.len()];
    let mut rk = Rk4::new(psi.len());
    let mut jumps = Vec::new();
    let mut full_buf = vec![ZERO; dim];

    for (w, pulse) in schedule.pulses().iter().enumerate() {
        let end = schedule.end(w);
        let mut t_from = schedule.start(w);
        'window: loop {
            let remaining = end - t_from;
            let n = step_count(remaining, pulse.rabi, gen.u_max, options.substeps);
            let dt = if n > 0 { remaining / n as f64 } else { 0.0 };
            for j in 0..n {
                let t0 = t_from + j as f64 * dt;
                rk.step(&gen.windows[w], &psi, dt, &mut next);
                if !decays {
                    std::mem::swap(&mut psi, &mut next);
                    continue;
                }
                let norm = norm_sqr(&next);
                min_norm = min_norm.min(norm);
                if norm >= threshold {
                    std::mem::swap(&mut psi, &mut next);
                    continue;
                }
                let rng = rng.as_deref_mut().expect("threshold is finite only with an rng");
                // Bisect the crossing inside [t0, t0 + dt].
                let (mut lo, mut hi) = (0.0, dt);
                while hi - lo > options.jump_time_tol {
                    let mid = 0.5 * (lo + hi);
                    rk.step(&gen.windows[w], &psi, mid, &mut probe);
                    if norm_sqr(&probe) < threshold {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                rk.step(&gen.windows[w], &psi, hi, &mut probe);
                check_finite(&probe, t0 + hi, w)?;
                let t_jump = t0 + hi;

                let pre = gen.extend(&probe, dim);
                let weights: Vec<f64> =
                    system.jump_operators().iter().map(|l| l.weight(&pre)).collect();
                let total: f64 = weights.iter().sum();
                if !(total > 0.0) {
                    // Norm drift without Rydberg population: nothing can decay.
                    psi.copy_from_slice(&probe);
                    threshold = rng.gen();
                    t_from = t_jump;
                    continue 'window;
                }
                let pick = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = weights.len() - 1;
                for (idx, wgt) in weights.iter().enumerate() {
                    acc += wgt;
                    if pick < acc {
                        chosen = idx;
                        break;
                    }
                }
                let op = &system.jump_operators()[chosen];
                op.apply(&pre, &mut full_buf);
                let scale = 1.0 / norm_sqr(&full_buf).sqrt();
                full_buf.iter_mut().for_each(|a| *a *= scale);
                jumps.push(JumpRecord {
                    time: t_jump,
                    atom: op.atom,
                    channel: op.channel,
                });

                gen = LocalGenerator::for_support(system, &full_buf);
                psi = gen.restrict(&full_buf);
                next = vec![ZERO; psi.len()];
                probe = vec![ZERO; psi.len()];
                rk.resize(psi.len());
                threshold = rng.gen();
                t_from = t_jump;
                continue 'window;
            }
            break;
        }
        check_finite(&psi, end, w)?;
    }

    let survival_weight = norm_sqr(&psi);
    let scale = 1.0 / survival_weight.sqrt();
    psi.iter_mut().for_each(|a| *a *= scale);
    let result = TrajectoryResult {
        state: gen.extend(&psi, dim),
        jumps,
        survival_weight,
    };
    Ok((result, min_norm))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trajectory `trajectory` of input `input`, independent of execution order.
pub fn trajectory_seed(master_seed: u64, input: u64, trajectory: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ input) ^ trajectory)
}

/// Overlap statistics of a trajectory ensemble against an etalon state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trajectories: usize,
    /// Mean of `|<etalon|psi_m>|^2`.
    pub mean: f64,
    pub std_error: f64,
    /// Mean number of jumps per trajectory.
    pub mean_jumps: f64,
    /// Trajectory-averaged basis populations, as sparse `(index, population)`.
    pub populations: Vec<(usize, f64)>,
}

/// Runs `trajectories` independent trajectories of input `input_index`.
///
/// Trajectories may execute concurrently; the reduction runs in trajectory
/// order so results do not depend on the thread count. Without decay every
/// trajectory is identical and only one is computed.
pub fn run_ensemble(
    system: &GateSystem,
    psi0: &[Complex64],
    trajectories: usize,
    master_seed: u64,
    input_index: u64,
    etalon: &[Complex64],
    options: &SolverOptions,
) -> Result<EnsembleStats> {
    if trajectories == 0 {
        return Err(Error::InvalidArgument("ensemble needs at least one trajectory".into()));
    }
    if etalon.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            got: etalon.len(),
            expected: system.dim(),
        });
    }
    let summarize = |r: &TrajectoryResult| -> (f64, usize, Vec<(usize, f64)>) {
        let pops = r
            .state
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(i, a)| (i, a.norm_sqr()))
            .collect();
        (inner(etalon, &r.state).norm_sqr(), r.jumps.len(), pops)
    };
    // A trajectory whose first threshold never exceeds the no-jump norm
    // reproduces the no-jump path exactly, so that path is computed once.
    let (baseline, min_norm) = trajectory(system, psi0, None, options)?;
    let baseline = summarize(&baseline);
    let samples: Vec<(f64, usize, Vec<(usize, f64)>)> = if system.has_decay() {
        (0..trajectories)
            .into_par_iter()
            .map(|m| {
                let seed = trajectory_seed(master_seed, input_index, m as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let first: f64 = rng.clone().gen();
                if first <= min_norm {
                    Ok(baseline.clone())
                } else {
                    trajectory(system, psi0, Some(&mut rng), options).map(|(r, _)| summarize(&r))
                }
            })
            .collect::<Result<_>>()?
    } else {
        vec![baseline; trajectories]
    };

    let m = trajectories as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let std_error = if trajectories > 1 {
        let var = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let mean_jumps = samples.iter().map(|s| s.1 as f64).sum::<f64>() / m;
    let mut acc = vec![0.0; system.dim()];
    for (_, _, pops) in &samples {
        for &(i, p) in pops {
            acc[i] += p;
        }
    }
    let populations = acc
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(i, p)| (i, p / m))
        .collect();
    Ok(EnsembleStats {
        trajectories,
        mean,
        std_error,
        mean_jumps,
        populations,
    })
}

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn pure(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = psi[i] * psi[j].conj();
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDensityMatrix("matrix is not square".into()));
        }
        Ok(Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let mut s = ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * self.get(j, i);
            }
        }
        s.re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut s = ZERO;
        for i in 0..self.dim {
            if psi[i] == ZERO {
                continue;
            }
            for j in 0..self.dim {
                s += psi[i].conj() * self.get(i, j) * psi[j];
            }
        }
        s.re
    }

    fn hermiticity_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// Cholesky of `rho + tol I`; succeeds iff `rho` has no eigenvalue below `-tol`.
    fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re + tol;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }

    pub fn validate(&self) -> Result<()> {
        if self.hermiticity_defect() > 1e-10 {
            return Err(Error::InvalidDensityMatrix("not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        if !self.is_positive_semidefinite(1e-10) {
            return Err(Error::InvalidDensityMatrix("not positive semidefinite".into()));
        }
        Ok(())
    }
}

/// Right-hand side of the Lindblad equation using `H_eff`:
/// `-i (H_eff rho - rho H_eff^dagger) + sum_k L_k rho L_k^dagger`.
fn lindblad_rhs(h_eff: &SparseMatrix, system: &GateSystem, rho: &[Complex64], out: &mut [Complex64]) {
    let n = h_eff.dim();
    // A = H_eff rho; for Hermitian rho, rho H_eff^dagger = A^dagger.
    let mut a = vec![ZERO; n * n];
    for r in 0..n {
        let row = &mut a[r * n..(r + 1) * n];
        for (c, v) in h_eff.row(r) {
            let src = &rho[c * n..(c + 1) * n];
            for (x, y) in row.iter_mut().zip(src) {
                *x += v * y;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let comm = a[i * n + j] - a[j * n + i].conj();
            out[i * n + j] = Complex64::new(comm.im, -comm.re);
        }
    }
    for op in system.jump_operators() {
        let s = op.stride();
        let excited: Vec<usize> = (0..n).filter(|&i| system.digit(i, op.atom) == 2).collect();
        for &i in &excited {
            for &j in &excited {
                let x = rho[i * n + j];
                if x == ZERO {
                    continue;
                }
                for &(g1, c1) in &op.branches {
                    for &(g2, c2) in &op.branches {
                        let ii = i - (2 - g1) as usize * s;
                        let jj = j - (2 - g2) as usize * s;
                        out[ii * n + jj] += x * (c1 * c2);
                    }
                }
            }
        }
    }
}

/// Dense Lindblad evolution over the whole schedule (dimension <= 81).
pub fn evolve_master(
    system: &GateSystem,
    rho0: &DensityMatrix,
    options: &SolverOptions,
) -> Result<DensityMatrix> {
    options.validate()?;
    let dim = system.dim();
    if dim > MASTER_DIM_LIMIT {
        return Err(Error::DimensionCap {
            dim,
            limit: MASTER_DIM_LIMIT,
        });
    }
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            got: rho0.dim(),
            expected: dim,
        });
    }
    rho0.validate()?;
    let gen = LocalGenerator::new(system, (0..dim).collect());
    let len = dim * dim;
    let mut rho = rho0.data.clone();
    let mut k: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![ZERO; len]);
    let mut tmp = vec![ZERO; len];
    let schedule = system.schedule();
    for (w, pulse) in schedule.pulses().iter().enumerate() {
        let h = &gen.windows[w];
        let n = step_count(pulse.duration, pulse.rabi, gen.u_max, options.substeps);
        let dt = pulse.duration / n as f64;
        for _ in 0..n {
            let [k1, k2, k3, k4] = &mut k;
            lindblad_rhs(h, system, &rho, k1);
            for i in 0..len {
                tmp[i] = rho[i] + k1[i] * (0.5 * dt);
            }
            lindblad_rhs(h, system, &tmp, k2);
            for i in 0..len {
                tmp[i] = rho[i] + k2[i] * (0.5 * dt);
            }
            lindblad_rhs(h, system, &tmp, k3);
            for i in 0..len {
                tmp[i] = rho[i] + k3[i] * dt;
            }
            lindblad_rhs(h, system, &tmp, k4);
            let c = dt / 6.0;
            for i in 0..len {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
            }
        }
        check_finite(&rho, schedule.end(w), w)?;
    }
    Ok(DensityMatrix { dim, data: rho })
}
