use rotkick_core::ensemble::IntensityProfile;
use rotkick_core::mpm::{probe_spectra, MediumSpec, MpmGrid, ProbePulse};
use rotkick_core::scenario::Scenario;
use rotkick_core::trains::{amplitude_jitter, interleaved_train, InterleaveTemplate};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn thread_count_does_not_change_results() {
    let sc = Scenario::oxygen()
        .unwrap()
        .with_profile(IntensityProfile::gaussian_beam(3, 0.4).unwrap())
        .unwrap();
    let trev = sc.mol().revival_time();
    let tpl = InterleaveTemplate::four_way(2, 0.242 * trev, 0.519 * trev, 1.004 * trev, 2.0);
    let train = amplitude_jitter(&interleaved_train(&tpl).unwrap(), 0.1, 11).unwrap();
    let run = || {
        let obs = sc.observe_averaged(&train, sc.probe_time(&train)).unwrap();
        let spectra = probe_spectra(
            &sc,
            &train,
            &ProbePulse::default(),
            &MediumSpec::default(),
            &[0.5 * trev, 1.3 * trev],
            &MpmGrid::default(),
            true,
        )
        .unwrap();
        (obs, spectra)
    };
    let one = in_pool(1, run);
    let eight = in_pool(8, run);
    assert_eq!(one, eight);
}
