use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use spheregate_core::fidelity::{basis_state, etalon, input_states, simulate_input};
use spheregate_core::geometry::{
    classify_pair, dipole_dipole_energy, mhz, sample_extra_control, van_der_waals_energy,
    Coefficients, InteractionSet, Site, SphericalLayout, UnitType, DEFAULT_MAX_ATTEMPTS,
};
use spheregate_core::model::{basis_index, Addressed, Pulse, PulseSchedule, Transition};
use spheregate_core::scenario::{unit_pairs, Overrides};
use spheregate_core::solver::{
    evolve_master, evolve_nojump, evolve_trajectory, norm_sqr, run_ensemble, trajectory_seed,
    DensityMatrix,
};
use spheregate_core::{
    build_system, gate_fidelity, DecayRates, GateParameters, GateSystem, JumpModel, Mode,
    RunSettings, SolverOptions,
};

fn operating_layout() -> SphericalLayout {
    SphericalLayout::antiprism(5.0, 0.37 * 5.0).unwrap()
}

fn unit(controls: [usize; 2], chi: f64) -> GateParameters {
    let mut p = GateParameters::new(operating_layout(), controls.to_vec());
    p.chi = chi;
    p
}

/// One control excited to Rydberg by a fast pulse, then held there for `hold`
/// while the target (in `|0>`) sees a pulse on its other transition.
fn hold_system(gamma_c: f64, hold: f64) -> GateSystem {
    let ints = InteractionSet {
        u_ct: vec![0.0],
        u_cc: vec![vec![0.0]],
        coefficients: Coefficients::default(),
    };
    let schedule = PulseSchedule::new(vec![
        Pulse::pi(Addressed::Controls, Transition::Zero, 1e4, 0.0).unwrap(),
        Pulse {
            addressed: Addressed::Target,
            transition: Transition::One,
            rabi: 1.0,
            phase: 0.0,
            duration: hold,
        },
    ])
    .unwrap();
    let rates = DecayRates {
        gamma_c,
        gamma_t: 0.0,
    };
    build_system(&ints, &schedule, rates, JumpModel::Split).unwrap()
}

#[test]
fn mcwf_matches_master_equation_under_strong_decay() {
    let mut p = unit([0, 3], 1.0);
    p.rates = DecayRates {
        gamma_c: 0.4,
        gamma_t: 0.8,
    };
    let sys = p.build().unwrap();
    let m = 1000;
    for (i, input) in input_states(2).iter().enumerate().step_by(2) {
        let mc = RunSettings {
            mode: Mode::Mcwf,
            trajectories: m,
            master_seed: 11,
            ..Default::default()
        };
        let me = RunSettings {
            mode: Mode::Master,
            ..mc
        };
        let a = simulate_input(&sys, input, i as u64, &mc).unwrap();
        let b = simulate_input(&sys, input, i as u64, &me).unwrap();
        let tol = 3.0 * a.std_error + 1e-6;
        assert!(
            (a.fidelity - b.fidelity).abs() <= tol,
            "input {}: mcwf {} master {} tol {}",
            a.input_bits(),
            a.fidelity,
            b.fidelity,
            tol
        );
    }
}

#[test]
fn jump_counts_follow_exponential_survival() {
    let gamma = 2.0;
    let hold = 0.5;
    let sys = hold_system(gamma, hold);
    let psi0 = basis_state(&[0, 0]).unwrap();
    let n = 10_000;
    let opts = SolverOptions::default();
    let mut jumped = 0usize;
    for t in 0..n {
        let r = evolve_trajectory(&sys, &psi0, trajectory_seed(5, 0, t), &opts).unwrap();
        assert!(r.jumps.len() <= 1);
        jumped += r.jumps.len();
    }
    let total = sys.schedule().total_duration();
    let p = 1.0 - (-gamma * total).exp();
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let observed = jumped as f64 / n as f64;
    assert!((observed - p).abs() < 4.0 * sigma, "{observed} vs {p}");
}

#[test]
fn master_population_decays_exponentially() {
    let gamma = 1.5;
    let sys = hold_system(gamma, 1.0);
    let rho = evolve_master(
        &sys,
        &DensityMatrix::pure(&basis_state(&[0, 0]).unwrap()),
        &SolverOptions::default(),
    )
    .unwrap();
    let hold_start = sys.schedule().start(1);
    let total = sys.schedule().total_duration();
    let r = basis_index(&[2, 0]).unwrap();
    // Decay during the fast excitation pulse is second order in its length.
    let expected = (-gamma * (total - hold_start)).exp();
    assert_relative_eq!(rho.populations()[r], expected, max_relative = 2e-3);
    assert_relative_eq!(rho.trace().re, 1.0, epsilon = 1e-10);
    rho.validate().unwrap();
}

#[test]
fn rk4_is_fourth_order() {
    let sys = unit([0, 3], 1.0).with_overrides(Overrides {
        no_decay: true,
        ..Default::default()
    });
    let sys = sys.build().unwrap();
    let psi0 = basis_state(&[0, 1, 1]).unwrap();
    let run = |s: usize| {
        evolve_nojump(
            &sys,
            &psi0,
            &SolverOptions {
                substeps: s,
                ..Default::default()
            },
        )
        .unwrap()
    };
    let reference = run(400);
    let err = |s: usize| -> f64 {
        run(s)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let (coarse, fine) = (err(5), err(10));
    let order = (coarse / fine).log2();
    assert!(order >= 3.9, "observed order {order}");
}

#[test]
fn norm_is_conserved_without_decay() {
    for pair in unit_pairs(&operating_layout()).unwrap() {
        let sys = unit(pair.controls, 10.0)
            .with_overrides(Overrides {
                no_decay: true,
                ..Default::default()
            })
            .build()
            .unwrap();
        for input in input_states(2) {
            let psi = evolve_nojump(&sys, &basis_state(&input).unwrap(), &SolverOptions::default())
                .unwrap();
            assert!((norm_sqr(&psi) - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn ideal_limit_realizes_the_toffoli_permutation() {
    let sys = unit([0, 3], 1.0).with_overrides(Overrides::ideal()).build().unwrap();
    let settings = RunSettings {
        mode: Mode::Nojump,
        ..Default::default()
    };
    let report = gate_fidelity(&sys, &settings).unwrap();
    for o in &report.outcomes {
        let et = etalon(&o.input).unwrap();
        let (idx, pop) = o.dominant_output().unwrap();
        assert_eq!(idx, basis_index(&et.digits).unwrap(), "input {}", o.input_bits());
        assert!(pop > 0.999);
        assert!(o.fidelity > 0.999);
    }
    // The flipped branch picks up a minus sign.
    let psi = evolve_nojump(&sys, &basis_state(&[1, 1, 1]).unwrap(), &settings.solver).unwrap();
    let amp = psi[basis_index(&[1, 1, 0]).unwrap()];
    assert!((amp - Complex64::new(-1.0, 0.0)).norm() < 1e-2, "{amp}");
}

#[test]
fn fidelity_decreases_with_control_decay() {
    let settings = RunSettings {
        mode: Mode::Nojump,
        ..Default::default()
    };
    let mut last = f64::INFINITY;
    for gc in [0.0, mhz(2e-3), mhz(2e-2), mhz(2e-1)] {
        let mut p = unit([0, 3], 10.0);
        p.rates.gamma_c = gc;
        let f = gate_fidelity(&p.build().unwrap(), &settings).unwrap().average;
        assert!(f < last, "gamma_c {gc}: {f} not below {last}");
        last = f;
    }
}

#[test]
fn control_order_does_not_matter() {
    let settings = RunSettings {
        mode: Mode::Nojump,
        ..Default::default()
    };
    let a = gate_fidelity(&unit([0, 1], 1.0).build().unwrap(), &settings).unwrap();
    let b = gate_fidelity(&unit([1, 0], 1.0).build().unwrap(), &settings).unwrap();
    assert_relative_eq!(a.average, b.average, max_relative = 1e-10);
    for oa in &a.outcomes {
        let swapped = [oa.input[1], oa.input[0], oa.input[2]];
        let ob = b.outcomes.iter().find(|o| o.input == swapped).unwrap();
        assert_relative_eq!(oa.fidelity, ob.fidelity, max_relative = 1e-10);
    }
}

#[test]
fn trajectory_ensembles_are_reproducible() {
    let sys = unit([0, 3], 1.0).build().unwrap();
    let psi0 = basis_state(&[0, 0, 1]).unwrap();
    let et = psi0.clone();
    let opts = SolverOptions::default();
    let a = run_ensemble(&sys, &psi0, 300, 4, 1, &et, &opts).unwrap();
    let b = run_ensemble(&sys, &psi0, 300, 4, 1, &et, &opts).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&sys, &psi0, 300, 5, 1, &et, &opts).unwrap();
    assert!(a.mean_jumps != c.mean_jumps || a.mean != c.mean || a.populations != c.populations);
}

#[test]
fn sampled_positions_respect_the_constraint() {
    let layout = operating_layout();
    let c6 = Coefficients::default().c6;
    let limit = mhz(1.0);
    for seed in 0..1000 {
        let p = sample_extra_control(&layout, limit, c6, seed, DEFAULT_MAX_ATTEMPTS).unwrap();
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        assert_relative_eq!(r, 5.0, max_relative = 1e-12);
        for q in layout.control_positions() {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            assert!(van_der_waals_energy(d, c6).unwrap() < limit);
        }
    }
}

/// Classification from the angle the pair subtends at the target.
fn classify_by_angle(a: [f64; 3], b: [f64; 3]) -> UnitType {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    let cos = dot / (na * nb);
    if (cos + 1.0).abs() < 1e-9 {
        UnitType::Linear
    } else if cos >= -1e-9 {
        UnitType::Acute
    } else {
        UnitType::Obtuse
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn classification_matches_subtended_angle(
        radius in 2.0f64..10.0,
        h_frac in 0.01f64..0.99,
        twist in 0.0f64..(2.0 * PI),
        ring in 2usize..6,
    ) {
        let layout = SphericalLayout::new(radius, h_frac * radius, twist, ring).unwrap();
        let pos = layout.control_positions().to_vec();
        for i in 0..pos.len() {
            for j in (i + 1)..pos.len() {
                let g = layout.pair_geometry(Site::Control(i), Site::Control(j)).unwrap();
                let by_angle = classify_by_angle(pos[i], pos[j]);
                // Skip pairs within rounding of a class boundary.
                let cos = (pos[i][0] * pos[j][0] + pos[i][1] * pos[j][1] + pos[i][2] * pos[j][2])
                    / (radius * radius);
                if cos.abs() > 1e-6 && (cos + 1.0).abs() > 1e-6 {
                    prop_assert_eq!(g.unit_type, Some(by_angle));
                }
                prop_assert_eq!(classify_pair(g.distance, radius), g.unit_type.unwrap());
            }
        }
    }

    #[test]
    fn dipole_shift_changes_sign_at_the_magic_angle(
        offset in 1e-7f64..0.5,
        r in 1.0f64..20.0,
    ) {
        let magic = (1.0 / 3f64.sqrt()).acos();
        let c3 = Coefficients::default().c3;
        prop_assert!(dipole_dipole_energy(magic - offset, r, c3).unwrap() < 0.0);
        prop_assert!(dipole_dipole_energy(magic + offset, r, c3).unwrap() > 0.0);
        prop_assert!(dipole_dipole_energy(magic, r, c3).unwrap().abs() < 1e-12 * c3 / r.powi(3));
    }
}
