//! Thermal mixtures of rotor states, their propagation through pulse trains,
//! and incoherent averaging over the pump's focal intensity distribution.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK, SPEED_OF_LIGHT_CM};
use crate::error::{invalid, Error, Result};
use crate::molecule::{JParity, MoleculeSpec};
use crate::rotor::{free_evolve, BasisBlock, KickGenerator, RotorBlockState};
use crate::trains::PulseTrain;
use crate::C64;

/// Hard ceiling on the thermal J search.
const THERMAL_J_LIMIT: u32 = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// Kelvin.
    pub temperature: f64,
    /// Smallest retained (J, M) weight relative to the largest one.
    pub population_cutoff: f64,
}

impl Default for ThermalSpec {
    fn default() -> Self {
        ThermalSpec {
            temperature: 294.0,
            population_cutoff: 1e-3,
        }
    }
}

impl ThermalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(invalid(
                "temperature",
                format!("must be positive, got {}", self.temperature),
            ));
        }
        if !(self.population_cutoff > 0.0 && self.population_cutoff < 1.0) {
            return Err(invalid(
                "population_cutoff",
                format!("must lie in (0, 1), got {}", self.population_cutoff),
            ));
        }
        Ok(())
    }

    /// k_B T / hc in cm⁻¹.
    pub fn thermal_energy_cm(&self) -> f64 {
        BOLTZMANN * self.temperature / (PLANCK * SPEED_OF_LIGHT_CM)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalWeight {
    pub j: u32,
    pub m: i32,
    pub weight: f64,
}

/// Normalized Boltzmann weights per (J, M) for allowed J ≤ `j_max`, with
/// pairs below the relative cutoff dropped. Ordered by J, then M.
pub fn thermal_weights(
    mol: &MoleculeSpec,
    spec: &ThermalSpec,
    j_max: u32,
) -> Result<Vec<ThermalWeight>> {
    spec.validate()?;
    mol.validate()?;
    let kt = spec.thermal_energy_cm();
    let levels: Vec<(u32, f64)> = mol.allowed_j(j_max).map(|j| (j, mol.energy(j))).collect();
    let e_min = levels
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for (j, e) in levels {
        let w = (-(e - e_min) / kt).exp();
        if w < spec.population_cutoff {
            continue;
        }
        for m in -(j as i32)..=j as i32 {
            out.push(ThermalWeight { j, m, weight: w });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let total: f64 = out.iter().map(|w| w.weight).sum();
    for w in &mut out {
        w.weight /= total;
    }
    Ok(out)
}

/// Largest J worth considering for the thermal distribution: beyond this
/// every level lies below the cutoff.
pub fn thermal_j_bound(mol: &MoleculeSpec, spec: &ThermalSpec) -> u32 {
    let limit = spec.thermal_energy_cm() * (1.0 / spec.population_cutoff).ln();
    let e0 = mol.energy(0).min(mol.energy(1));
    let mut j = 1;
    while j < THERMAL_J_LIMIT && mol.energy(j) - e0 <= limit {
        j += 1;
    }
    j
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMember {
    pub weight: f64,
    pub j0: u32,
    pub m: i32,
    pub state: RotorBlockState,
}

/// Weighted mixture of pure rotor states.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    pub members: Vec<EnsembleMember>,
    /// Seconds.
    pub time: f64,
}

impl EnsembleState {
    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }

    /// Σ members weight · |ψ|².
    pub fn total_population(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.weight * m.state.norm_sqr())
            .sum()
    }

    /// Largest J present in any member's basis.
    pub fn basis_j_max(&self) -> u32 {
        self.members
            .iter()
            .map(|m| m.state.block.last_j())
            .max()
            .unwrap_or(0)
    }
}

pub fn init_ensemble(mol: &MoleculeSpec, spec: &ThermalSpec) -> Result<EnsembleState> {
    let weights = thermal_weights(mol, spec, thermal_j_bound(mol, spec))?;
    let members = weights
        .into_iter()
        .map(|w| {
            let block = BasisBlock::new(w.m, JParity::of(w.j), w.j)?;
            Ok(EnsembleMember {
                weight: w.weight,
                j0: w.j,
                m: w.m,
                state: RotorBlockState::basis_state(block, w.j)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleState { members, time: 0.0 })
}

/// Rules for choosing the basis size during propagation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Allowed population in the two highest J levels after any kick.
    pub tail_threshold: f64,
    /// J_max growth factor on violation.
    pub growth: f64,
    /// Headroom above the largest initial J before any kick is seen.
    pub margin: u32,
    /// Additional headroom per unit of the strongest single kick.
    pub per_kick: f64,
    pub ceiling: u32,
    /// Use this J_max verbatim and skip the tail check.
    pub fixed: Option<u32>,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            tail_threshold: 1e-8,
            growth: 1.5,
            margin: 20,
            per_kick: 4.0,
            ceiling: 800,
            fixed: None,
        }
    }
}

impl Truncation {
    fn ladder(&self, start: u32) -> Vec<u32> {
        if let Some(j) = self.fixed {
            return vec![j];
        }
        let mut out = vec![start.min(self.ceiling)];
        while *out.last().unwrap_or(&0) < self.ceiling {
            let last = *out.last().unwrap_or(&0) as f64;
            let next = ((last * self.growth).ceil() as u32).max(last as u32 + 2);
            out.push(next.min(self.ceiling));
        }
        out
    }
}

/// Shared, lazily filled table of kick generators keyed by block shape.
#[derive(Debug, Default)]
pub struct GeneratorStore {
    map: RwLock<HashMap<(u32, JParity, u32), Arc<KickGenerator>>>,
}

impl GeneratorStore {
    pub fn get(&self, block: &BasisBlock) -> Arc<KickGenerator> {
        let key = (block.m_abs(), block.parity, block.last_j());
        if let Some(g) = self.map.read().expect("generator store poisoned").get(&key) {
            return g.clone();
        }
        let canonical = BasisBlock {
            m: block.m_abs() as i32,
            ..*block
        };
        let g = Arc::new(KickGenerator::new(canonical));
        self.map
            .write()
            .expect("generator store poisoned")
            .entry(key)
            .or_insert(g)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("generator store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Snapshot requests for [`Propagator::evolve`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotPlan {
    pub after_each_pulse: bool,
    /// Seconds, any order.
    pub probe_times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotKind {
    AfterPulse(usize),
    Probe(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub state: EnsembleState,
}

/// Time-ordered snapshots of one propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn after_pulses(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots
            .iter()
            .filter(|s| matches!(s.kind, SnapshotKind::AfterPulse(_)))
    }

    /// Probe snapshot `k` in the order the probe times were requested.
    pub fn probe(&self, k: usize) -> Option<&EnsembleState> {
        self.snapshots
            .iter()
            .find(|s| s.kind == SnapshotKind::Probe(k))
            .map(|s| &s.state)
    }

    pub fn last(&self) -> Option<&EnsembleState> {
        self.snapshots.last().map(|s| &s.state)
    }
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Kick(f64),
    Snap(usize),
}

/// Impulsive propagation engine for one molecule. Holds a generator cache
/// that is reused across runs.
#[derive(Debug)]
pub struct Propagator {
    pub mol: MoleculeSpec,
    pub truncation: Truncation,
    store: GeneratorStore,
}

impl Propagator {
    pub fn new(mol: MoleculeSpec, truncation: Truncation) -> Result<Self> {
        mol.validate()?;
        Ok(Propagator {
            mol,
            truncation,
            store: GeneratorStore::default(),
        })
    }

    pub fn cached_generators(&self) -> usize {
        self.store.len()
    }

    /// Propagates `ens` through `train`, returning the requested snapshots
    /// in time order (a kick precedes a probe at the same instant).
    pub fn evolve(
        &self,
        ens: &EnsembleState,
        train: &PulseTrain,
        plan: &SnapshotPlan,
    ) -> Result<Trajectory> {
        let mut events: Vec<(f64, u8, usize, Event)> = Vec::new();
        for (k, p) in train.pulses().iter().enumerate() {
            if p.time < ens.time {
                return Err(Error::InvalidTrain(format!(
                    "pulse at {} s precedes the ensemble time {} s",
                    p.time, ens.time
                )));
            }
            events.push((p.time, 0, k, Event::Kick(p.strength)));
        }
        let mut kinds = Vec::new();
        if plan.after_each_pulse {
            for (k, p) in train.pulses().iter().enumerate() {
                events.push((p.time, 1, k, Event::Snap(kinds.len())));
                kinds.push(SnapshotKind::AfterPulse(k));
            }
        }
        for (k, &t) in plan.probe_times.iter().enumerate() {
            if !t.is_finite() || t < ens.time {
                return Err(invalid(
                    "probe_time",
                    format!("{t} s is before the ensemble time {} s", ens.time),
                ));
            }
            events.push((t, 2, k, Event::Snap(kinds.len())));
            kinds.push(SnapshotKind::Probe(k));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let events: Vec<(f64, Event)> = events.into_iter().map(|(t, _, _, e)| (t, e)).collect();

        let p_max = train
            .pulses()
            .iter()
            .map(|p| p.strength)
            .fold(0.0, f64::max);
        let start = ens.basis_j_max()
            + self.truncation.margin
            + (self.truncation.per_kick * p_max).ceil() as u32;
        let ladder = self.truncation.ladder(start);

        let per_member: Vec<Vec<RotorBlockState>> = ens
            .members
            .par_iter()
            .map(|m| self.evolve_member(&m.state, ens.time, &events, kinds.len(), &ladder))
            .collect::<Result<_>>()?;

        let times: Vec<f64> = {
            let mut t = vec![0.0; kinds.len()];
            for (time, e) in &events {
                if let Event::Snap(i) = e {
                    t[*i] = *time;
                }
            }
            t
        };
        let mut order: Vec<usize> = (0..kinds.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
        let snapshots = order
            .into_iter()
            .map(|i| Snapshot {
                kind: kinds[i],
                state: EnsembleState {
                    time: times[i],
                    members: ens
                        .members
                        .iter()
                        .zip(&per_member)
                        .map(|(m, states)| EnsembleMember {
                            state: states[i].clone(),
                            ..m.clone()
                        })
                        .collect(),
                },
            })
            .collect();
        Ok(Trajectory { snapshots })
    }

    /// State at `probe_time`, after every pulse at or before it.
    pub fn final_state(
        &self,
        ens: &EnsembleState,
        train: &PulseTrain,
        probe_time: f64,
    ) -> Result<EnsembleState> {
        let plan = SnapshotPlan {
            after_each_pulse: false,
            probe_times: vec![probe_time],
        };
        let traj = self.evolve(ens, &train_until(train, probe_time)?, &plan)?;
        Ok(traj
            .snapshots
            .into_iter()
            .next()
            .map(|s| s.state)
            .unwrap_or_else(|| ens.clone()))
    }

    fn evolve_member(
        &self,
        initial: &RotorBlockState,
        t0: f64,
        events: &[(f64, Event)],
        n_snaps: usize,
        ladder: &[u32],
    ) -> Result<Vec<RotorBlockState>> {
        let check = self.truncation.fixed.is_none();
        for &j_max in ladder {
            let j_max = j_max.max(initial.block.last_j());
            let block = BasisBlock::new(initial.block.m, initial.block.parity, j_max)?;
            let mut amps = vec![C64::new(0.0, 0.0); block.len()];
            for (j, c) in initial.block.j_list().into_iter().zip(&initial.amplitudes) {
                if let Some(k) = block.index_of(j) {
                    amps[k] = *c;
                }
            }
            let energies: Vec<f64> = block.j_list().iter().map(|&j| self.mol.energy(j)).collect();
            let generator = self.store.get(&block);
            let mut out = vec![None; n_snaps];
            let mut t = t0;
            let mut overflow = false;
            for &(time, ev) in events {
                free_evolve(&mut amps, &energies, time - t);
                t = time;
                match ev {
                    Event::Kick(p) => {
                        generator.apply(p, &mut amps);
                        if check && tail_population(&amps) >= self.truncation.tail_threshold {
                            overflow = true;
                            break;
                        }
                    }
                    Event::Snap(i) => {
                        out[i] = Some(RotorBlockState {
                            block,
                            amplitudes: amps.clone(),
                        })
                    }
                }
            }
            if !overflow {
                return Ok(out.into_iter().map(|s| s.expect("every snapshot visited")).collect());
            }
        }
        Err(Error::TruncationFailure(*ladder.last().unwrap_or(&0)))
    }
}

fn tail_population(amps: &[C64]) -> f64 {
    amps.iter().rev().take(2).map(|c| c.norm_sqr()).sum()
}

/// Pulses of `train` at or before `t`.
pub fn train_until(train: &PulseTrain, t: f64) -> Result<PulseTrain> {
    let pulses = train
        .pulses()
        .iter()
        .copied()
        .filter(|p| p.time <= t)
        .collect();
    PulseTrain::new(pulses, train.label.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Delta,
    GaussianBeam,
}

/// Discrete distribution of relative kick scales over the focal volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub kind: ProfileKind,
    /// (scale s ∈ (0, 1], weight).
    pub samples: Vec<(f64, f64)>,
}

impl IntensityProfile {
    pub fn delta() -> Self {
        IntensityProfile {
            kind: ProfileKind::Delta,
            samples: vec![(1.0, 1.0)],
        }
    }

    /// Uniform grid of `points` scales on [s_min, 1] weighted ∝ 1/s: the
    /// annulus area per unit intensity of a transverse Gaussian beam.
    pub fn gaussian_beam(points: usize, s_min: f64) -> Result<Self> {
        if points == 0 {
            return Err(Error::EmptyProfile);
        }
        if !(s_min > 0.0 && s_min <= 1.0) {
            return Err(invalid("s_min", format!("must lie in (0, 1], got {s_min}")));
        }
        let scales: Vec<f64> = if points == 1 {
            vec![1.0]
        } else {
            (0..points)
                .map(|k| 1.0 - (1.0 - s_min) * (points - 1 - k) as f64 / (points - 1) as f64)
                .collect()
        };
        let total: f64 = scales.iter().map(|s| 1.0 / s).sum();
        Ok(IntensityProfile {
            kind: ProfileKind::GaussianBeam,
            samples: scales.iter().map(|&s| (s, 1.0 / s / total)).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyProfile);
        }
        for &(s, w) in &self.samples {
            if !(s > 0.0 && s <= 1.0) {
                return Err(invalid("intensity_profile", format!("scale {s} outside (0, 1]")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid("intensity_profile", format!("negative weight {w}")));
            }
        }
        let total: f64 = self.samples.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(
                "intensity_profile",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(())
    }
}

/// Quantities that add incoherently across focal-volume samples.
pub trait Incoherent: Sized {
    fn scale(&mut self, w: f64);
    fn add_assign(&mut self, other: &Self);
}

impl Incoherent for f64 {
    fn scale(&mut self, w: f64) {
        *self *= w;
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl Incoherent for Vec<f64> {
    fn scale(&mut self, w: f64) {
        self.iter_mut().for_each(|x| *x *= w);
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

/// Runs `run(s)` for every profile sample in parallel and returns the
/// weighted sum, accumulated in sample order.
pub fn intensity_average<T, F>(profile: &IntensityProfile, run: F) -> Result<T>
where
    T: Incoherent + Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    profile.validate()?;
    let results: Vec<T> = profile
        .samples
        .par_iter()
        .map(|&(s, _)| run(s))
        .collect::<Result<_>>()?;
    let mut iter = results.into_iter().zip(&profile.samples);
    let (mut acc, &(_, w0)) = iter.next().ok_or(Error::EmptyProfile)?;
    acc.scale(w0);
    for (mut x, &(_, w)) in iter {
        x.scale(w);
        acc.add_assign(&x);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trains::periodic_train;
    use approx::assert_relative_eq;

    #[test]
    fn cold_limit_is_j1() {
        let mol = MoleculeSpec::oxygen();
        let spec = ThermalSpec {
            temperature: 0.01,
            ..ThermalSpec::default()
        };
        let w = thermal_weights(&mol, &spec, 40).unwrap();
        assert_eq!(w.len(), 3);
        for x in &w {
            assert_eq!(x.j, 1);
            assert_relative_eq!(x.weight, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(init_ensemble(&mol, &spec).unwrap().members.len(), 3);
    }

    #[test]
    fn room_temperature_weights() {
        let mol = MoleculeSpec::oxygen();
        let spec = ThermalSpec::default();
        let w = thermal_weights(&mol, &spec, 100).unwrap();
        let total: f64 = w.iter().map(|x| x.weight).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(w.iter().all(|x| x.j % 2 == 1));
        let mut by_j = std::collections::BTreeMap::new();
        for x in &w {
            *by_j.entry(x.j).or_insert(0.0) += x.weight;
        }
        let peak = by_j
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| *j)
            .unwrap();
        assert!([7, 9, 11].contains(&peak), "peak at J = {peak}");
        let ens = init_ensemble(&mol, &spec).unwrap();
        assert_eq!(ens.members.len(), w.len());
    }

    #[test]
    fn invalid_thermal_specs() {
        let mol = MoleculeSpec::oxygen();
        for (t, c) in [(0.0, 1e-3), (-1.0, 1e-3), (294.0, 0.0), (294.0, 1.0)] {
            let spec = ThermalSpec {
                temperature: t,
                population_cutoff: c,
            };
            assert!(thermal_weights(&mol, &spec, 50).is_err());
        }
    }

    #[test]
    fn empty_train_keeps_populations() {
        let mol = MoleculeSpec::oxygen();
        let ens = init_ensemble(&mol, &ThermalSpec::default()).unwrap();
        let prop = Propagator::new(mol, Truncation::default()).unwrap();
        let out = prop.final_state(&ens, &PulseTrain::empty(), 3e-12).unwrap();
        for (a, b) in ens.members.iter().zip(&out.members) {
            let pa: Vec<f64> = a.state.populations().map(|(_, p)| p).collect();
            let pb: Vec<(u32, f64)> = b.state.populations().filter(|(_, p)| *p > 0.0).collect();
            assert_eq!(pb.len(), 1);
            assert_eq!(pb[0].0, a.j0);
            assert!((pa.iter().sum::<f64>() - pb[0].1).abs() < 1e-15);
        }
    }

    #[test]
    fn snapshots_ordered_and_weights_kept() {
        let mol = MoleculeSpec::oxygen();
        let ens = init_ensemble(&mol, &ThermalSpec::default()).unwrap();
        let prop = Propagator::new(mol.clone(), Truncation::default()).unwrap();
        let train = periodic_train(3, mol.revival_time(), 1.0).unwrap();
        let plan = SnapshotPlan {
            after_each_pulse: true,
            probe_times: vec![30e-12, 1e-12],
        };
        let traj = prop.evolve(&ens, &train, &plan).unwrap();
        assert_eq!(traj.snapshots.len(), 5);
        assert!(traj
            .snapshots
            .windows(2)
            .all(|w| w[0].state.time <= w[1].state.time));
        assert_eq!(traj.probe(1).unwrap().time, 1e-12);
        for s in &traj.snapshots {
            assert!((s.state.total_population() - 1.0).abs() < 1e-10);
            for (a, b) in s.state.members.iter().zip(&ens.members) {
                assert_eq!(a.weight, b.weight);
                assert_eq!(a.state.block.m, b.m);
            }
        }
    }

    #[test]
    fn truncation_grows_for_strong_kicks() {
        let mol = MoleculeSpec::oxygen().rigid();
        let spec = ThermalSpec {
            temperature: 0.01,
            ..ThermalSpec::default()
        };
        let ens = init_ensemble(&mol, &spec).unwrap();
        let trunc = Truncation {
            margin: 2,
            per_kick: 0.0,
            ..Truncation::default()
        };
        let prop = Propagator::new(mol.clone(), trunc).unwrap();
        let train = periodic_train(4, mol.revival_time(), 5.0).unwrap();
        let out = prop.final_state(&ens, &train, 4.0 * mol.revival_time()).unwrap();
        for m in &out.members {
            assert!(m.state.block.j_max > 3);
            assert!(tail_population(&m.state.amplitudes) < 1e-8);
        }
    }

    #[test]
    fn truncation_ceiling_reported() {
        let mol = MoleculeSpec::oxygen().rigid();
        let spec = ThermalSpec {
            temperature: 0.01,
            ..ThermalSpec::default()
        };
        let ens = init_ensemble(&mol, &spec).unwrap();
        let trunc = Truncation {
            margin: 2,
            per_kick: 0.0,
            ceiling: 9,
            ..Truncation::default()
        };
        let prop = Propagator::new(mol.clone(), trunc).unwrap();
        let train = periodic_train(4, mol.revival_time(), 5.0).unwrap();
        assert!(matches!(
            prop.final_state(&ens, &train, 4.0 * mol.revival_time()),
            Err(Error::TruncationFailure(_))
        ));
    }

    #[test]
    fn pulse_before_ensemble_time_rejected() {
        let mol = MoleculeSpec::oxygen();
        let mut ens = init_ensemble(&mol, &ThermalSpec::default()).unwrap();
        ens.time = 1e-12;
        let prop = Propagator::new(mol, Truncation::default()).unwrap();
        let train = periodic_train(2, 1e-12, 1.0).unwrap();
        assert!(prop.evolve(&ens, &train, &SnapshotPlan::default()).is_err());
    }

    #[test]
    fn profiles() {
        let g = IntensityProfile::gaussian_beam(12, 0.2).unwrap();
        assert_eq!(g.samples.len(), 12);
        let total: f64 = g.samples.iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_relative_eq!(g.samples[11].0, 1.0, epsilon = 1e-15);
        assert!(g.samples.windows(2).all(|w| w[0].1 > w[1].1));
        assert!(IntensityProfile::gaussian_beam(0, 0.2).is_err());
        let empty = IntensityProfile {
            kind: ProfileKind::Delta,
            samples: vec![],
        };
        assert!(matches!(
            intensity_average(&empty, Ok),
            Err(Error::EmptyProfile)
        ));
        let d = intensity_average(&IntensityProfile::delta(), |s| Ok(vec![s, 2.0 * s])).unwrap();
        assert_eq!(d, vec![1.0, 2.0]);
        let mean = intensity_average(&g, Ok).unwrap();
        let expect: f64 = g.samples.iter().map(|(s, w)| s * w).sum();
        assert_eq!(mean, expect);
    }
}
