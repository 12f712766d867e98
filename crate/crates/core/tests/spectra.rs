use std::sync::OnceLock;

use proptest::prelude::*;
use rotkick_core::observables::{JSeries, PiecewiseAlignment};
use rotkick_core::ensemble::SnapshotPlan;
use rotkick_core::scenario::Scenario;
use rotkick_core::spectrum::{
    line_area, synth_from_power, synth_spectrum, ProbeSide, ProbeSpec, SpectrumGrid,
};
use rotkick_core::trains::periodic_train;

fn oxygen() -> &'static Scenario {
    static SC: OnceLock<Scenario> = OnceLock::new();
    SC.get_or_init(|| Scenario::oxygen().unwrap())
}

fn wide_grid(side: ProbeSide) -> SpectrumGrid {
    let start = match side {
        ProbeSide::Stokes => -1.0,
        _ => -6.0,
    };
    SpectrumGrid {
        start_nm: start,
        step_nm: 0.005,
        len: ((6.0 - start) / 0.005) as usize + 1,
    }
}

#[test]
fn integrated_spectrum_matches_line_sum() {
    let sc = oxygen();
    let train = periodic_train(3, sc.mol().revival_time(), 1.0).unwrap();
    let cv = sc.coherence_vector(&train, sc.probe_time(&train), 1.0).unwrap();
    let probe = ProbeSpec::default();
    let s = synth_spectrum(&cv, &probe, sc.mol(), &wide_grid(probe.side)).unwrap();
    let expect = cv.power().sum_from(0) * line_area(&probe);
    assert!(
        ((s.area() - expect) / expect).abs() < 1e-6,
        "{} vs {expect}",
        s.area()
    );
}

#[test]
fn weak_kick_thermal_shape() {
    let sc = oxygen();
    let train = periodic_train(1, sc.mol().revival_time(), 0.2).unwrap();
    let cv = sc.coherence_vector(&train, 0.0, 1.0).unwrap();
    let probe = ProbeSpec::default();
    let grid = SpectrumGrid::covering(sc.mol(), &probe, 41);
    let s = synth_spectrum(&cv, &probe, sc.mol(), &grid).unwrap();
    let top = s.tallest_line().unwrap().j;
    assert!([7, 9, 11].contains(&top), "{top}");
    assert!(s.lines.iter().all(|l| l.j % 2 == 1));
}

#[test]
fn after_pulse_alignment_trace_is_continuous_through_kicks() {
    let sc = oxygen();
    let trev = sc.mol().revival_time();
    let train = periodic_train(2, trev, 1.0).unwrap();
    let plan = SnapshotPlan {
        after_each_pulse: true,
        probe_times: vec![],
    };
    let traj = sc.trajectory(&train, &plan, 1.0).unwrap();
    let trace = PiecewiseAlignment::new(sc.initial(), &traj, sc.mol());
    assert!((trace.at(-1e-12) - 1.0 / 3.0).abs() < 1e-12);
    // impulsive kicks leave ⟨cos²θ⟩ unchanged at the kick instant
    assert!((trace.at(1e-18) - 1.0 / 3.0).abs() < 1e-6);
    assert!((trace.at(trev - 1e-18) - trace.at(trev + 1e-18)).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectra_are_non_negative(
        heights in prop::collection::vec(0.0..1.0f64, 1..40),
        side in prop_oneof![Just(ProbeSide::Stokes), Just(ProbeSide::AntiStokes), Just(ProbeSide::Both)],
    ) {
        let mol = rotkick_core::MoleculeSpec::oxygen();
        let probe = ProbeSpec { side, ..ProbeSpec::default() };
        let grid = SpectrumGrid::covering(&mol, &probe, 41);
        let s = synth_from_power(&JSeries(heights), &probe, &mol, &grid).unwrap();
        prop_assert!(s.intensity.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn area_is_additive_over_lines(heights in prop::collection::vec(0.0..1.0f64, 1..36)) {
        let mol = rotkick_core::MoleculeSpec::oxygen();
        let probe = ProbeSpec::default();
        let power = JSeries(heights);
        let s = synth_from_power(&power, &probe, &mol, &wide_grid(ProbeSide::Stokes)).unwrap();
        let allowed: f64 = power.iter().filter(|&(j, _)| j % 2 == 1).map(|(_, h)| h).sum();
        let expect = allowed * line_area(&probe);
        prop_assert!((s.area() - expect).abs() <= 1e-6 * expect.max(1e-12));
    }
}
