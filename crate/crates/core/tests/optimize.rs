use rotkick_core::ensemble::{IntensityProfile, ThermalSpec};
use rotkick_core::molecule::MoleculeSpec;
use rotkick_core::optimize::{
    optimize_delays, scan_delay, Delay, Objective, SearchSpec, Stage,
};
use rotkick_core::scenario::{Scenario, ScenarioSettings};
use rotkick_core::trains::InterleaveTemplate;

fn cold(mol: MoleculeSpec) -> Scenario {
    Scenario::new(
        mol,
        ScenarioSettings {
            thermal: ThermalSpec {
                temperature: 20.0,
                population_cutoff: 1e-2,
            },
            ..ScenarioSettings::default()
        },
    )
    .unwrap()
}

fn coarse_search(trev: f64) -> SearchSpec {
    SearchSpec {
        coarse_step: trev / 50.0,
        fine_step: trev / 500.0,
        half_width: 0.04 * trev,
        ..SearchSpec::for_revival(trev)
    }
}

#[test]
fn trace_is_monotone_and_reproducible() {
    let sc = cold(MoleculeSpec::oxygen());
    let trev = sc.mol().revival_time();
    let tpl = InterleaveTemplate::four_way(2, 0.26 * trev, 0.49 * trev, 1.01 * trev, 1.0);
    let search = coarse_search(trev);
    let a = optimize_delays(&tpl, &Objective::total(), &search, &sc).unwrap();
    assert_eq!(a.trace[0].stage, Stage::Initial);
    for w in a.trace.windows(2) {
        assert!(w[1].objective >= w[0].objective);
        assert!(w[1].evaluations >= w[0].evaluations);
    }
    assert!(a.objective >= a.initial_objective);
    let d = a.delays();
    assert!(d[0] <= d[1] && d[1] <= d[2] && d[2] <= d[3]);
    let b = optimize_delays(&tpl, &Objective::total(), &search, &sc).unwrap();
    assert_eq!(a, b);
}

#[test]
fn averaged_objective_reported() {
    let sc = cold(MoleculeSpec::oxygen())
        .with_profile(IntensityProfile::gaussian_beam(3, 0.3).unwrap())
        .unwrap();
    let trev = sc.mol().revival_time();
    let tpl = InterleaveTemplate::pair(2, 0.5 * trev, trev, 0.8);
    let r = optimize_delays(&tpl, &Objective::total(), &coarse_search(trev), &sc).unwrap();
    let avg = r.averaged_objective.unwrap();
    assert!(avg > 0.0 && avg < r.objective);
}

#[test]
fn scan_rejects_out_of_range() {
    let sc = cold(MoleculeSpec::oxygen());
    let trev = sc.mol().revival_time();
    let tpl = InterleaveTemplate::pair(2, 0.5 * trev, trev, 0.5);
    assert!(scan_delay(&tpl, Delay::T1, &[1.5 * trev], &Objective::total(), &sc, false).is_err());
}
