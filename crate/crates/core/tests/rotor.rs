use proptest::prelude::*;
use rotkick_core::molecule::{JParity, MoleculeSpec};
use rotkick_core::rotor::{cos2_matrix, free_propagator, BasisBlock, KickGenerator, RotorBlockState};
use rotkick_core::tdse::{impulsive_propagate, tdse_reference_propagate, PulseEnvelope, TdseOptions};

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Associated Legendre functions normalized to ∫ P² dx = 1, for l = m..=l_max.
fn normalized_legendre(l_max: u32, m: u32, x: f64) -> Vec<f64> {
    let mut pmm = (0.5f64).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * (1.0 - x * x).sqrt();
    }
    let mut out = vec![pmm];
    if l_max == m {
        return out;
    }
    out.push(x * ((2 * m + 3) as f64).sqrt() * pmm);
    let a = |l: u32| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
    for l in m + 2..=l_max {
        let k = (l - m) as usize;
        let next = a(l) * (x * out[k - 1] - out[k - 2] / a(l - 1));
        out.push(next);
    }
    out
}

#[test]
fn cos2_matches_quadrature() {
    let nodes = gauss_legendre(48);
    for m in 0..=12u32 {
        for parity in [JParity::Even, JParity::Odd] {
            let Ok(block) = BasisBlock::new(m as i32, parity, 12) else {
                continue;
            };
            let mat = cos2_matrix(&block).to_dense();
            let js = block.j_list();
            for (a, &ja) in js.iter().enumerate() {
                for (b, &jb) in js.iter().enumerate() {
                    let oracle: f64 = nodes
                        .iter()
                        .map(|&(x, w)| {
                            let p = normalized_legendre(12, m, x);
                            w * p[(ja - m) as usize] * x * x * p[(jb - m) as usize]
                        })
                        .sum();
                    assert!(
                        (mat[(a, b)] - oracle).abs() < 1e-10,
                        "J={ja} J'={jb} M={m}: {} vs {oracle}",
                        mat[(a, b)]
                    );
                }
            }
        }
    }
}

#[test]
fn cos2_known_value() {
    let block = BasisBlock::new(0, JParity::Even, 2).unwrap();
    let c = cos2_matrix(&block);
    assert!((c.off[0] - 2.0 / (3.0 * 5f64.sqrt())).abs() < 1e-12);
}

#[derive(Clone, Debug)]
enum Op {
    Kick(f64),
    Free(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (-10.0..10.0f64).prop_map(Op::Kick),
        (0.0..3.0f64).prop_map(Op::Free),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn long_compositions_stay_unitary(
        ops in prop::collection::vec(op(), 100..140),
        j0 in 0u32..12,
        m_frac in 0.0..1.0f64,
    ) {
        let mol = MoleculeSpec::oxygen();
        let trev = mol.revival_time();
        let m = (m_frac * j0 as f64).floor() as i32;
        let block = BasisBlock::new(m, JParity::of(j0), 200).unwrap();
        let gen = KickGenerator::new(block);
        let mut psi = RotorBlockState::basis_state(block, j0).unwrap();
        for op in &ops {
            match *op {
                Op::Kick(p) => psi.kick(&gen, p),
                Op::Free(f) => psi.free(&mol, f * trev),
            }
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn free_phases_conjugate_in_time(dt in -1e-9..1e-9f64, m in 0i32..6) {
        let mol = MoleculeSpec::oxygen();
        let block = BasisBlock::new(m, JParity::Odd, 60).unwrap();
        let fwd = free_propagator(dt, &block, &mol);
        let back = free_propagator(-dt, &block, &mol);
        for (a, b) in fwd.iter().zip(&back) {
            prop_assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn resonant_kicks_collapse(n in 1usize..12, p in 0.0..1.5f64, j0 in 0u32..10, m in 0i32..3) {
        let mol = MoleculeSpec::oxygen().rigid();
        let trev = mol.revival_time();
        let m = m.min(j0 as i32);
        let block = BasisBlock::new(m, JParity::of(j0), 90).unwrap();
        let gen = KickGenerator::new(block);
        let mut train = RotorBlockState::basis_state(block, j0).unwrap();
        for k in 0..n {
            if k > 0 {
                train.free(&mol, trev);
            }
            train.kick(&gen, p);
        }
        let mut single = RotorBlockState::basis_state(block, j0).unwrap();
        single.kick(&gen, n as f64 * p);
        for (a, b) in train.amplitudes.iter().zip(&single.amplitudes) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}

fn populations(psi: &RotorBlockState) -> Vec<(u32, f64)> {
    psi.populations().collect()
}

fn tdse_vs_kick(fwhm: f64, j0: u32, m: i32) -> f64 {
    let mol = MoleculeSpec::oxygen();
    let block = BasisBlock::new(m, JParity::of(j0), 40).unwrap();
    let psi = RotorBlockState::basis_state(block, j0).unwrap();
    let pulse = PulseEnvelope::with_kick_strength(0.5, fwhm, 0.0, &mol).unwrap();
    let opts = TdseOptions::default();
    let exact = tdse_reference_propagate(&psi, &pulse, &mol, &opts).unwrap();
    let kicked = impulsive_propagate(&psi, &pulse, &mol, &opts);
    populations(&exact.state)
        .iter()
        .zip(populations(&kicked))
        .filter(|(a, _)| a.0 <= 11)
        .map(|(a, b)| (a.1 - b.1).abs())
        .fold(0.0, f64::max)
}

#[test]
fn short_pulse_is_impulsive() {
    for (j0, m) in [(1, 0), (5, 3), (9, 0)] {
        let d = tdse_vs_kick(10e-15, j0, m);
        assert!(d < 1e-4, "J0={j0} M={m}: {d}");
    }
}

#[test]
fn paper_length_pulse_close_to_impulsive() {
    for (j0, m) in [(1, 1), (7, 0)] {
        let d = tdse_vs_kick(100e-15, j0, m);
        assert!(d < 0.02, "J0={j0} M={m}: {d}");
    }
}
