use std::sync::OnceLock;

use proptest::prelude::*;
use rotkick_core::ensemble::{
    init_ensemble, thermal_weights, thermal_j_bound, SnapshotPlan, ThermalSpec, Truncation,
};
use rotkick_core::molecule::{MoleculeSpec, Parity};
use rotkick_core::observables::{coherences, population_by_j, CoherenceWeighting};
use rotkick_core::scenario::{Scenario, ScenarioSettings};
use rotkick_core::trains::{Pulse, PulseTrain};

fn oxygen() -> &'static Scenario {
    static SC: OnceLock<Scenario> = OnceLock::new();
    SC.get_or_init(|| Scenario::oxygen().unwrap())
}

fn random_train() -> impl Strategy<Value = PulseTrain> {
    prop::collection::vec((0.0..3.0f64, 0.0..2.0f64), 1..6).prop_map(|v| {
        let trev = MoleculeSpec::oxygen().revival_time();
        let pulses = v
            .into_iter()
            .map(|(t, p)| Pulse {
                time: t * trev,
                strength: p,
            })
            .collect();
        PulseTrain::new(pulses, "random").unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn population_parity_and_m_conserved(train in random_train()) {
        let sc = oxygen();
        let plan = SnapshotPlan { after_each_pulse: true, probe_times: vec![] };
        let traj = sc.trajectory(&train, &plan, 1.0).unwrap();
        for snap in &traj.snapshots {
            let ens = &snap.state;
            prop_assert!((ens.total_population() - 1.0).abs() < 1e-10);
            for (member, start) in ens.members.iter().zip(&sc.initial().members) {
                prop_assert_eq!(member.m, start.m);
                prop_assert_eq!(member.state.block.m, start.m);
                prop_assert_eq!(member.state.block.parity, start.state.block.parity);
            }
            let pops = population_by_j(ens);
            for (j, p) in pops.iter() {
                if j % 2 == 0 {
                    prop_assert_eq!(p, 0.0);
                }
            }
        }
    }
}

#[test]
fn thermal_weights_decay_past_peak() {
    let mol = MoleculeSpec::oxygen();
    for t in [30.0, 77.0, 294.0, 600.0] {
        let spec = ThermalSpec {
            temperature: t,
            population_cutoff: 1e-6,
        };
        let weights = thermal_weights(&mol, &spec, thermal_j_bound(&mol, &spec)).unwrap();
        let mut by_j = std::collections::BTreeMap::new();
        for w in &weights {
            *by_j.entry(w.j).or_insert(0.0) += w.weight;
        }
        let series: Vec<f64> = by_j.values().copied().collect();
        let peak = series
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        for w in series[peak..].windows(2) {
            assert!(w[1] < w[0], "T = {t}: {:?}", series);
        }
    }
}

#[test]
fn room_temperature_ensemble_size() {
    let ens = init_ensemble(&MoleculeSpec::oxygen(), &ThermalSpec::default()).unwrap();
    assert_eq!(ens.members.len(), 465);
    assert!(ens.members.iter().all(|m| m.j0 <= 29 && m.j0 % 2 == 1));
    assert!((ens.total_weight() - 1.0).abs() < 1e-12);
}

#[test]
fn doubling_basis_leaves_coherences_unchanged() {
    let mol = MoleculeSpec::oxygen();
    let trev = mol.revival_time();
    let pulses = (0..6)
        .map(|k| Pulse {
            time: k as f64 * 1.002 * trev,
            strength: 3.0,
        })
        .collect();
    let train = PulseTrain::new(pulses, "detuned").unwrap();
    let auto = Scenario::new(mol.clone(), ScenarioSettings::default()).unwrap();
    let t = auto.probe_time(&train) + 0.1 * trev;
    let state = auto.final_state(&train, t, 1.0).unwrap();
    let j_auto = state.basis_j_max();
    let doubled = Scenario::new(
        mol,
        ScenarioSettings {
            truncation: Truncation {
                fixed: Some(2 * j_auto),
                ..Truncation::default()
            },
            ..ScenarioSettings::default()
        },
    )
    .unwrap();
    let reference = doubled.final_state(&train, t, 1.0).unwrap();
    assert!(reference.basis_j_max() + 1 >= 2 * j_auto);
    let a = coherences(&state, CoherenceWeighting::Coupling);
    let b = coherences(&reference, CoherenceWeighting::Coupling);
    for j in a.entries.keys().chain(b.entries.keys()) {
        let d = (a.get(*j).norm() - b.get(*j).norm()).abs();
        assert!(d < 1e-6, "J = {j}: {d}");
    }
}

#[test]
fn both_parities_supported() {
    let mut mol = MoleculeSpec::oxygen();
    mol.parity = Parity::Both;
    mol.name = "N2-like".into();
    let ens = init_ensemble(&mol, &ThermalSpec::default()).unwrap();
    assert!(ens.members.iter().any(|m| m.j0 == 0));
    assert!(ens.members.iter().any(|m| m.j0 == 1));
}
