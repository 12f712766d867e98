//! Ensemble observables: Raman coherences, alignment and angular-momentum
//! statistics, and alignment traces reconstructed from post-pulse snapshots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleState, Incoherent, Trajectory};
use crate::error::{invalid, Result};
use crate::molecule::MoleculeSpec;
use crate::rotor::{coherence_frequency, cos2_diagonal, cos2_offdiagonal};
use crate::C64;

/// How M sublevels are combined into one ρ_{J,J+2}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceWeighting {
    /// Each member weighted by ⟨J,M|cos²θ|J+2,M⟩.
    #[default]
    Coupling,
    Uniform,
}

/// Ensemble-aggregated ρ̃_{J,J+2} keyed by the lower J.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoherenceVector {
    pub entries: BTreeMap<u32, C64>,
    pub time: f64,
}

impl CoherenceVector {
    pub fn get(&self, j: u32) -> C64 {
        self.entries.get(&j).copied().unwrap_or_default()
    }

    pub fn max_norm_diff(&self, other: &CoherenceVector) -> f64 {
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|&j| (self.get(j) - other.get(j)).norm())
            .fold(0.0, f64::max)
    }

    /// |ρ̃|² per J.
    pub fn power(&self) -> JSeries {
        let mut out = JSeries::default();
        for (&j, z) in &self.entries {
            out.set(j, z.norm_sqr());
        }
        out
    }
}

pub fn coherences(ens: &EnsembleState, weighting: CoherenceWeighting) -> CoherenceVector {
    let mut entries: BTreeMap<u32, C64> = BTreeMap::new();
    for member in &ens.members {
        let block = &member.state.block;
        let c = &member.state.amplitudes;
        for k in 0..c.len().saturating_sub(1) {
            let j = block.j_at(k);
            let coupling = match weighting {
                CoherenceWeighting::Coupling => cos2_offdiagonal(j, block.m),
                CoherenceWeighting::Uniform => 1.0,
            };
            *entries.entry(j).or_default() += c[k].conj() * c[k + 1] * (member.weight * coupling);
        }
    }
    CoherenceVector {
        entries,
        time: ens.time,
    }
}

/// Σ_{J ≥ J_min} |ρ̃_{J,J+2}|².
pub fn integrated_coherence(cv: &CoherenceVector, j_min: Option<u32>) -> f64 {
    cv.power().sum_from(j_min.unwrap_or(0))
}

/// ⟨cos²θ⟩ over the ensemble.
pub fn alignment(ens: &EnsembleState) -> f64 {
    ens.members
        .iter()
        .map(|m| {
            let block = &m.state.block;
            let c = &m.state.amplitudes;
            let mut acc = 0.0;
            for (k, ck) in c.iter().enumerate() {
                let j = block.j_at(k);
                acc += cos2_diagonal(j, block.m) * ck.norm_sqr();
                if k + 1 < c.len() {
                    acc += 2.0 * cos2_offdiagonal(j, block.m) * (ck.conj() * c[k + 1]).re;
                }
            }
            m.weight * acc
        })
        .sum()
}

/// Non-negative values indexed by J; missing entries read as zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JSeries(pub Vec<f64>);

impl JSeries {
    pub fn get(&self, j: u32) -> f64 {
        self.0.get(j as usize).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, j: u32, v: f64) {
        let j = j as usize;
        if self.0.len() <= j {
            self.0.resize(j + 1, 0.0);
        }
        self.0[j] = v;
    }

    pub fn add(&mut self, j: u32, v: f64) {
        let cur = self.get(j);
        self.set(j, cur + v);
    }

    /// (J, value) for every stored J, including zeros.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().enumerate().map(|(j, &v)| (j as u32, v))
    }

    pub fn sum_from(&self, j_min: u32) -> f64 {
        self.iter().filter(|&(j, _)| j >= j_min).map(|(_, v)| v).sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// J with the largest value (smallest J on ties).
    pub fn argmax(&self) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for (j, v) in self.iter() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        best.filter(|&(_, v)| v > 0.0).map(|(j, _)| j)
    }

    /// Largest J whose value reaches `threshold` times the maximum.
    pub fn reach(&self, threshold: f64) -> Option<u32> {
        let cut = threshold * self.max();
        if self.max() <= 0.0 {
            return None;
        }
        self.iter().filter(|&(_, v)| v >= cut).map(|(j, _)| j).last()
    }

    /// Σ J·value / Σ value.
    pub fn mean_j(&self) -> f64 {
        let total: f64 = self.0.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        self.iter().map(|(j, v)| j as f64 * v).sum::<f64>() / total
    }
}

impl Incoherent for JSeries {
    fn scale(&mut self, w: f64) {
        self.0.iter_mut().for_each(|x| *x *= w);
    }

    fn add_assign(&mut self, other: &Self) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// Total population per J.
pub fn population_by_j(ens: &EnsembleState) -> JSeries {
    let mut out = JSeries::default();
    for m in &ens.members {
        for (j, p) in m.state.populations() {
            out.add(j, m.weight * p);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularMomentumStats {
    pub mean_j: f64,
    pub max_populated_j: u32,
}

pub fn angular_momentum_stats(
    ens: &EnsembleState,
    threshold: f64,
) -> Result<AngularMomentumStats> {
    stats_from_populations(&population_by_j(ens), threshold)
}

pub fn stats_from_populations(pops: &JSeries, threshold: f64) -> Result<AngularMomentumStats> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    Ok(AngularMomentumStats {
        mean_j: pops.mean_j(),
        max_populated_j: pops.reach(threshold).unwrap_or(0),
    })
}

/// Field-free ⟨cos²θ⟩(t) after a snapshot:
/// `a(t) = a_diag + 2 Re Σ_J ρ̃_J e^{−iω_J (t − t₀)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeAlignment {
    pub start: f64,
    pub diagonal: f64,
    /// (ω_J in rad/s, coupling-weighted ρ̃_J).
    pub terms: Vec<(f64, C64)>,
}

impl FreeAlignment {
    pub fn from_state(ens: &EnsembleState, mol: &MoleculeSpec) -> Self {
        let cv = coherences(ens, CoherenceWeighting::Coupling);
        let mut diagonal = 0.0;
        for m in &ens.members {
            let block = &m.state.block;
            for (k, c) in m.state.amplitudes.iter().enumerate() {
                diagonal += m.weight * cos2_diagonal(block.j_at(k), block.m) * c.norm_sqr();
            }
        }
        FreeAlignment {
            start: ens.time,
            diagonal,
            terms: cv
                .entries
                .iter()
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .map(|(&j, &z)| (coherence_frequency(mol, j), z))
                .collect(),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let dt = t - self.start;
        self.diagonal
            + 2.0
                * self
                    .terms
                    .iter()
                    .map(|&(w, z)| (z * C64::from_polar(1.0, -w * dt)).re)
                    .sum::<f64>()
    }

    /// d⟨cos²θ⟩/dt in 1/s.
    pub fn slope(&self, t: f64) -> f64 {
        let dt = t - self.start;
        2.0 * self
            .terms
            .iter()
            .map(|&(w, z)| (z * C64::new(0.0, -w) * C64::from_polar(1.0, -w * dt)).re)
            .sum::<f64>()
    }
}

/// ⟨cos²θ⟩(t) across a whole train, piecewise between pulses.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAlignment {
    segments: Vec<FreeAlignment>,
}

impl PiecewiseAlignment {
    /// `initial` covers times before the first snapshot.
    pub fn new(initial: &EnsembleState, traj: &Trajectory, mol: &MoleculeSpec) -> Self {
        let mut segments = vec![FreeAlignment::from_state(initial, mol)];
        for s in traj.after_pulses() {
            segments.push(FreeAlignment::from_state(&s.state, mol));
        }
        PiecewiseAlignment { segments }
    }

    fn segment(&self, t: f64) -> &FreeAlignment {
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    pub fn at(&self, t: f64) -> f64 {
        self.segment(t).at(t)
    }

    pub fn slope(&self, t: f64) -> f64 {
        self.segment(t).slope(t)
    }

    /// Samples at `t0 + k·dt` for k < n.
    pub fn sample(&self, t0: f64, dt: f64, n: usize) -> AlignmentSamples {
        AlignmentSamples {
            t0,
            dt,
            values: (0..n).map(|k| self.at(t0 + k as f64 * dt)).collect(),
        }
    }
}

/// Uniformly sampled ⟨cos²θ⟩(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSamples {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl AlignmentSamples {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.t0 + k as f64 * self.dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{init_ensemble, Propagator, SnapshotPlan, ThermalSpec, Truncation};
    use crate::trains::{periodic_train, PulseTrain};

    fn fresh() -> (MoleculeSpec, EnsembleState) {
        let mol = MoleculeSpec::oxygen();
        let ens = init_ensemble(&mol, &ThermalSpec::default()).unwrap();
        (mol, ens)
    }

    #[test]
    fn fresh_ensemble_is_isotropic_and_incoherent() {
        let (_, ens) = fresh();
        let cv = coherences(&ens, CoherenceWeighting::Coupling);
        assert!(cv.entries.values().all(|z| z.norm() == 0.0));
        assert!((alignment(&ens) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(integrated_coherence(&cv, None), 0.0);
    }

    #[test]
    fn fresh_mean_j_matches_weights() {
        let (mol, ens) = fresh();
        let spec = ThermalSpec::default();
        let w = crate::ensemble::thermal_weights(&mol, &spec, 200).unwrap();
        let expect: f64 = w.iter().map(|x| x.j as f64 * x.weight).sum();
        let stats = angular_momentum_stats(&ens, 0.05).unwrap();
        assert!((stats.mean_j - expect).abs() < 1e-12);
        assert!(angular_momentum_stats(&ens, 1.5).is_err());
    }

    #[test]
    fn jseries_helpers() {
        let mut s = JSeries::default();
        s.set(3, 1.0);
        s.set(5, 4.0);
        s.set(9, 0.3);
        assert_eq!(s.argmax(), Some(5));
        assert_eq!(s.reach(0.05), Some(9));
        assert_eq!(s.reach(0.1), Some(5));
        assert_eq!(s.sum_from(4), 4.3);
        assert_eq!(s.sum_from(20), 0.0);
        let mut t = JSeries::default();
        t.set(11, 1.0);
        s.add_assign(&t);
        assert_eq!(s.get(11), 1.0);
        assert_eq!(JSeries::default().reach(0.5), None);
    }

    #[test]
    fn free_alignment_matches_direct_evolution() {
        let (mol, ens) = fresh();
        let prop = Propagator::new(mol.clone(), Truncation::default()).unwrap();
        let train = periodic_train(2, 0.3 * mol.revival_time(), 2.0).unwrap();
        let t_probe = 0.3 * mol.revival_time() + 1.7e-12;
        let plan = SnapshotPlan {
            after_each_pulse: true,
            probe_times: vec![t_probe],
        };
        let traj = prop.evolve(&ens, &train, &plan).unwrap();
        let piecewise = PiecewiseAlignment::new(&ens, &traj, &mol);
        let direct = alignment(traj.probe(0).unwrap());
        assert!((piecewise.at(t_probe) - direct).abs() < 1e-12);
        assert!((piecewise.at(-1e-12) - 1.0 / 3.0).abs() < 1e-12);

        let h = 1e-17;
        let fd = (piecewise.at(t_probe + h) - piecewise.at(t_probe - h)) / (2.0 * h);
        let slope = piecewise.slope(t_probe);
        assert!((fd - slope).abs() < 1e-5 * slope.abs().max(1e10), "{fd} vs {slope}");
    }

    #[test]
    fn hermitian_consistency() {
        let (mol, ens) = fresh();
        let prop = Propagator::new(mol, Truncation::default()).unwrap();
        let train = PulseTrain::new(
            vec![crate::trains::Pulse {
                time: 0.0,
                strength: 1.5,
            }],
            "one",
        )
        .unwrap();
        let out = prop.final_state(&ens, &train, 1e-12).unwrap();
        let cv = coherences(&out, CoherenceWeighting::Uniform);
        // ρ_{J+2,J} built from the conjugate side equals conj(ρ_{J,J+2})
        let mut lower: BTreeMap<u32, C64> = BTreeMap::new();
        for m in &out.members {
            let c = &m.state.amplitudes;
            for k in 0..c.len() - 1 {
                *lower.entry(m.state.block.j_at(k)).or_default() +=
                    c[k + 1].conj() * c[k] * m.weight;
            }
        }
        for (j, z) in &cv.entries {
            assert!((z.conj() - lower[j]).norm() < 1e-15);
        }
    }
}
