//! A molecule plus everything needed to turn a pulse train into observables.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{
    init_ensemble, intensity_average, EnsembleState, Incoherent, IntensityProfile, Propagator,
    SnapshotPlan, ThermalSpec, Trajectory, Truncation,
};
use crate::error::{invalid, Result};
use crate::molecule::MoleculeSpec;
use crate::observables::{
    alignment, coherences, population_by_j, CoherenceVector, CoherenceWeighting, JSeries,
};
use crate::trains::PulseTrain;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSettings {
    pub thermal: ThermalSpec,
    pub profile: IntensityProfile,
    pub weighting: CoherenceWeighting,
    pub truncation: Truncation,
    /// Probe delay after the last pulse, seconds.
    pub probe_delay: f64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        ScenarioSettings {
            thermal: ThermalSpec::default(),
            profile: IntensityProfile::delta(),
            weighting: CoherenceWeighting::default(),
            truncation: Truncation::default(),
            probe_delay: 0.0,
        }
    }
}

/// Immutable simulation context. Cloning is cheap and shares the operator
/// cache and the initial ensemble.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub settings: ScenarioSettings,
    propagator: Arc<Propagator>,
    initial: Arc<EnsembleState>,
}

/// Observables that combine incoherently across the focal volume.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleObservables {
    /// |ρ̃_{J,J+2}|² by lower J.
    pub coherence_power: JSeries,
    pub populations: JSeries,
    pub alignment: f64,
}

impl Incoherent for SampleObservables {
    fn scale(&mut self, w: f64) {
        self.coherence_power.scale(w);
        self.populations.scale(w);
        self.alignment *= w;
    }

    fn add_assign(&mut self, other: &Self) {
        self.coherence_power.add_assign(&other.coherence_power);
        self.populations.add_assign(&other.populations);
        self.alignment += other.alignment;
    }
}

impl Scenario {
    pub fn new(mol: MoleculeSpec, settings: ScenarioSettings) -> Result<Self> {
        settings.profile.validate()?;
        if !(settings.probe_delay.is_finite() && settings.probe_delay >= 0.0) {
            return Err(invalid(
                "probe_delay",
                format!("must be ≥ 0, got {}", settings.probe_delay),
            ));
        }
        let initial = init_ensemble(&mol, &settings.thermal)?;
        let propagator = Propagator::new(mol, settings.truncation)?;
        Ok(Scenario {
            settings,
            propagator: Arc::new(propagator),
            initial: Arc::new(initial),
        })
    }

    /// Thermal O₂ with default settings.
    pub fn oxygen() -> Result<Self> {
        Scenario::new(MoleculeSpec::oxygen(), ScenarioSettings::default())
    }

    pub fn mol(&self) -> &MoleculeSpec {
        &self.propagator.mol
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn initial(&self) -> &EnsembleState {
        &self.initial
    }

    /// Same settings with a different intensity profile.
    pub fn with_profile(&self, profile: IntensityProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Scenario {
            settings: ScenarioSettings {
                profile,
                ..self.settings.clone()
            },
            ..self.clone()
        })
    }

    pub fn with_weighting(&self, weighting: CoherenceWeighting) -> Self {
        Scenario {
            settings: ScenarioSettings {
                weighting,
                ..self.settings.clone()
            },
            ..self.clone()
        }
    }

    /// Default probe instant: the configured delay after the last pulse.
    pub fn probe_time(&self, train: &PulseTrain) -> f64 {
        train.last_time().unwrap_or(self.initial.time) + self.settings.probe_delay
    }

    pub fn final_state(&self, train: &PulseTrain, probe_time: f64, scale: f64) -> Result<EnsembleState> {
        self.propagator
            .final_state(&self.initial, &train.scaled(scale), probe_time)
    }

    pub fn trajectory(&self, train: &PulseTrain, plan: &SnapshotPlan, scale: f64) -> Result<Trajectory> {
        self.propagator
            .evolve(&self.initial, &train.scaled(scale), plan)
    }

    /// Amplitude-level coherences at one intensity scale.
    pub fn coherence_vector(
        &self,
        train: &PulseTrain,
        probe_time: f64,
        scale: f64,
    ) -> Result<CoherenceVector> {
        let state = self.final_state(train, probe_time, scale)?;
        Ok(coherences(&state, self.settings.weighting))
    }

    pub fn observe(&self, train: &PulseTrain, probe_time: f64, scale: f64) -> Result<SampleObservables> {
        let state = self.final_state(train, probe_time, scale)?;
        Ok(self.observables_of(&state))
    }

    pub fn observables_of(&self, state: &EnsembleState) -> SampleObservables {
        SampleObservables {
            coherence_power: coherences(state, self.settings.weighting).power(),
            populations: population_by_j(state),
            alignment: alignment(state),
        }
    }

    /// Observables averaged over the configured intensity profile.
    pub fn observe_averaged(&self, train: &PulseTrain, probe_time: f64) -> Result<SampleObservables> {
        intensity_average(&self.settings.profile, |s| self.observe(train, probe_time, s))
    }

    /// Either the profile average or the single-intensity run.
    pub fn observe_with(
        &self,
        train: &PulseTrain,
        probe_time: f64,
        averaged: bool,
    ) -> Result<SampleObservables> {
        if averaged {
            self.observe_averaged(train, probe_time)
        } else {
            self.observe(train, probe_time, 1.0)
        }
    }

    /// Population per J right after each pulse.
    pub fn populations_per_pulse(&self, train: &PulseTrain, averaged: bool) -> Result<Vec<JSeries>> {
        let run = |s: f64| -> Result<PerPulse> {
            let plan = SnapshotPlan {
                after_each_pulse: true,
                probe_times: Vec::new(),
            };
            let traj = self.trajectory(train, &plan, s)?;
            Ok(PerPulse(
                traj.after_pulses().map(|snap| population_by_j(&snap.state)).collect(),
            ))
        };
        let out = if averaged {
            intensity_average(&self.settings.profile, run)?
        } else {
            run(1.0)?
        };
        Ok(out.0)
    }
}

struct PerPulse(Vec<JSeries>);

impl Incoherent for PerPulse {
    fn scale(&mut self, w: f64) {
        self.0.iter_mut().for_each(|s| s.scale(w));
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trains::periodic_train;

    #[test]
    fn delta_profile_matches_plain_run() {
        let sc = Scenario::oxygen().unwrap();
        let train = periodic_train(3, sc.mol().revival_time(), 1.0).unwrap();
        let t = sc.probe_time(&train);
        let a = sc.observe(&train, t, 1.0).unwrap();
        let b = sc.observe_averaged(&train, t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaging_conserves_population() {
        let sc = Scenario::oxygen()
            .unwrap()
            .with_profile(IntensityProfile::gaussian_beam(4, 0.2).unwrap())
            .unwrap();
        let train = periodic_train(2, sc.mol().revival_time(), 2.0).unwrap();
        let obs = sc.observe_averaged(&train, sc.probe_time(&train)).unwrap();
        let total: f64 = obs.populations.0.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn negative_probe_delay_rejected() {
        let settings = ScenarioSettings {
            probe_delay: -1.0,
            ..ScenarioSettings::default()
        };
        assert!(Scenario::new(MoleculeSpec::oxygen(), settings).is_err());
    }
}
