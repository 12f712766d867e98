//! Pulse trains: periodic and interleaved constructors, intensity conversion,
//! amplitude jitter, and the resonance-trajectory planner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::molecule::MoleculeSpec;
use crate::tdse::PulseEnvelope;

/// Pulses closer than this are treated as one.
pub const COINCIDENCE_WINDOW: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Seconds.
    pub time: f64,
    /// Kick strength P.
    pub strength: f64,
}

/// Time-ordered pulses with coincident entries merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pulses: Vec<Pulse>,
    pub label: String,
}

impl PulseTrain {
    /// Sorts, validates and merges pulses that fall within
    /// [`COINCIDENCE_WINDOW`] of each other (strengths add, the earliest time
    /// is kept).
    pub fn new(mut pulses: Vec<Pulse>, label: impl Into<String>) -> Result<Self> {
        for p in &pulses {
            if !p.time.is_finite() {
                return Err(Error::InvalidTrain(format!("non-finite pulse time {}", p.time)));
            }
            if !(p.strength.is_finite() && p.strength >= 0.0) {
                return Err(Error::InvalidTrain(format!(
                    "kick strength must be finite and ≥ 0, got {}",
                    p.strength
                )));
            }
        }
        pulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut merged: Vec<Pulse> = Vec::with_capacity(pulses.len());
        for p in pulses {
            match merged.last_mut() {
                Some(last) if p.time - last.time < COINCIDENCE_WINDOW => last.strength += p.strength,
                _ => merged.push(p),
            }
        }
        Ok(PulseTrain {
            pulses: merged,
            label: label.into(),
        })
    }

    pub fn empty() -> Self {
        PulseTrain {
            pulses: Vec::new(),
            label: "empty".into(),
        }
    }

    /// Accepts a pulse list only if it is already strictly ascending.
    pub fn from_sorted(pulses: Vec<Pulse>, label: impl Into<String>) -> Result<Self> {
        if pulses.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidTrain("pulse times must be strictly ascending".into()));
        }
        PulseTrain::new(pulses, label)
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Cumulative kick strength P_N.
    pub fn total_strength(&self) -> f64 {
        self.pulses.iter().map(|p| p.strength).sum()
    }

    pub fn first_time(&self) -> Option<f64> {
        self.pulses.first().map(|p| p.time)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.pulses.last().map(|p| p.time)
    }

    pub fn span(&self) -> f64 {
        match (self.first_time(), self.last_time()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Every strength multiplied by `s`.
    pub fn scaled(&self, s: f64) -> PulseTrain {
        PulseTrain {
            pulses: self
                .pulses
                .iter()
                .map(|p| Pulse {
                    time: p.time,
                    strength: p.strength * s,
                })
                .collect(),
            label: self.label.clone(),
        }
    }
}

/// `n` pulses of strength `strength` at 0, T, …, (n−1)T.
pub fn periodic_train(n: usize, period: f64, strength: f64) -> Result<PulseTrain> {
    if n == 0 {
        return Err(invalid("count", "a periodic train needs at least one pulse"));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(invalid("period", format!("must be positive, got {period}")));
    }
    let pulses = (0..n)
        .map(|k| Pulse {
            time: k as f64 * period,
            strength,
        })
        .collect();
    PulseTrain::new(pulses, format!("periodic N={n}"))
}

/// Copies of a periodic base train offset by 0, T1, T2 and T3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterleaveTemplate {
    pub base_count: usize,
    /// Sub-train period.
    pub t4: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    /// Force T3 = T1 + T2.
    pub constrain_t3: bool,
    pub strength: f64,
}

impl InterleaveTemplate {
    /// Four interleaved copies with T3 tied to T1 + T2.
    pub fn four_way(base_count: usize, t1: f64, t2: f64, t4: f64, strength: f64) -> Self {
        InterleaveTemplate {
            base_count,
            t4,
            t1: Some(t1),
            t2: Some(t2),
            t3: None,
            constrain_t3: true,
            strength,
        }
    }

    /// Two copies offset by `t1`.
    pub fn pair(base_count: usize, t1: f64, t4: f64, strength: f64) -> Self {
        InterleaveTemplate {
            base_count,
            t4,
            t1: Some(t1),
            t2: None,
            t3: None,
            constrain_t3: false,
            strength,
        }
    }

    pub fn effective_t3(&self) -> Option<f64> {
        if self.constrain_t3 {
            match (self.t1, self.t2) {
                (Some(a), Some(b)) => Some(a + b),
                _ => self.t3,
            }
        } else {
            self.t3
        }
    }

    /// Copy offsets in ascending order, starting with 0.
    pub fn offsets(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend(self.t1);
        out.extend(self.t2);
        out.extend(self.effective_t3());
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_count == 0 {
            return Err(invalid("base_count", "must be at least 1"));
        }
        if !(self.t4.is_finite() && self.t4 > 0.0) {
            return Err(invalid("T4", format!("must be positive, got {}", self.t4)));
        }
        if !(self.strength.is_finite() && self.strength >= 0.0) {
            return Err(invalid("P", format!("must be ≥ 0, got {}", self.strength)));
        }
        if self.constrain_t3 && self.t3.is_some() && self.t1.is_some() && self.t2.is_some() {
            let t3 = self.t3.unwrap_or_default();
            let sum = self.t1.unwrap_or_default() + self.t2.unwrap_or_default();
            if (t3 - sum).abs() > COINCIDENCE_WINDOW {
                return Err(invalid("T3", "constrained T3 must equal T1 + T2"));
            }
        }
        let mut prev = 0.0;
        let names = ["T1", "T2", "T3"];
        let delays = [self.t1, self.t2, self.effective_t3()];
        for (name, d) in names.iter().zip(delays) {
            if let Some(d) = d {
                if !d.is_finite() || d < prev {
                    return Err(invalid(
                        name,
                        format!("delays must satisfy 0 ≤ T1 ≤ T2 ≤ T3 ≤ T4, got {name} = {d}"),
                    ));
                }
                prev = d;
            }
        }
        if prev > self.t4 {
            return Err(invalid(
                "T4",
                format!("largest delay {prev} exceeds the sub-train period {}", self.t4),
            ));
        }
        Ok(())
    }
}

pub fn interleaved_train(tpl: &InterleaveTemplate) -> Result<PulseTrain> {
    tpl.validate()?;
    let offsets = tpl.offsets();
    let mut pulses = Vec::with_capacity(offsets.len() * tpl.base_count);
    for &off in &offsets {
        for k in 0..tpl.base_count {
            pulses.push(Pulse {
                time: off + k as f64 * tpl.t4,
                strength: tpl.strength,
            });
        }
    }
    PulseTrain::new(
        pulses,
        format!("interleaved {}x{}", offsets.len(), tpl.base_count),
    )
}

/// Kick strength of a Gaussian pulse with peak intensity in W/cm² and
/// intensity FWHM in seconds.
pub fn kick_strength_from_intensity(
    peak_intensity: f64,
    fwhm: f64,
    mol: &MoleculeSpec,
) -> Result<f64> {
    if !(peak_intensity.is_finite() && peak_intensity > 0.0) {
        return Err(invalid(
            "peak_intensity",
            format!("must be positive, got {peak_intensity}"),
        ));
    }
    Ok(PulseEnvelope::new(fwhm, peak_intensity, 0.0)?.kick_strength(mol))
}

/// Multiplicative factors `max(0, 1 + σ ξ)` with standard normal ξ.
pub fn jitter_factors(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(invalid("sigma", format!("must be ≥ 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let normal = Normal::new(1.0, sigma).map_err(|e| invalid("sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng).max(0.0)).collect())
}

pub fn amplitude_jitter(train: &PulseTrain, sigma: f64, seed: u64) -> Result<PulseTrain> {
    let factors = jitter_factors(train.len(), sigma, seed)?;
    let pulses = train
        .pulses
        .iter()
        .zip(factors)
        .map(|(p, f)| Pulse {
            time: p.time,
            strength: p.strength * f,
        })
        .collect();
    Ok(PulseTrain {
        pulses,
        label: format!("{} (jitter σ={sigma})", train.label),
    })
}

/// Time at which the (J, J+2) packet completes N_J half rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub j: u32,
    pub offset: i32,
    pub n_j: u32,
    /// Seconds.
    pub time: f64,
}

/// T_J = N_J τ_J / 2 with N_J = 2J + 3 + offset, for each allowed J in range.
pub fn resonance_trajectories(
    j_range: std::ops::RangeInclusive<u32>,
    offsets: &[i32],
    mol: &MoleculeSpec,
) -> Vec<TrajectoryPoint> {
    let mut out = Vec::new();
    for j in j_range.filter(|&j| mol.parity.allows(j)) {
        let tau = mol.classical_period(j);
        for &offset in offsets {
            let n = 2 * j as i64 + 3 + offset as i64;
            if n <= 0 {
                continue;
            }
            out.push(TrajectoryPoint {
                j,
                offset,
                n_j: n as u32,
                time: n as f64 * tau / 2.0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{FS, PS};
    use approx::assert_relative_eq;

    #[test]
    fn periodic_basics() {
        let t = periodic_train(1, 1e-12, 0.5).unwrap();
        assert_eq!(t.pulses(), &[Pulse { time: 0.0, strength: 0.5 }]);
        let trev = MoleculeSpec::oxygen().revival_time();
        let t = periodic_train(20, trev, 0.5).unwrap();
        assert_relative_eq!(t.span(), 19.0 * trev, max_relative = 1e-15);
        assert_relative_eq!(t.total_strength(), 10.0, max_relative = 1e-15);
        assert!(periodic_train(0, 1.0, 1.0).is_err());
        assert!(periodic_train(3, -1.0, 1.0).is_err());
    }

    #[test]
    fn detuned_period_value() {
        assert_relative_eq!(1.004 * 11.67, 11.72, epsilon = 5e-3);
    }

    #[test]
    fn full_coincidence_merges() {
        let tpl = InterleaveTemplate {
            base_count: 5,
            t4: 11.6 * PS,
            t1: Some(0.0),
            t2: Some(0.0),
            t3: Some(0.0),
            constrain_t3: false,
            strength: 0.5,
        };
        let t = interleaved_train(&tpl).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.pulses().iter().all(|p| p.strength == 2.0));
    }

    #[test]
    fn four_way_interleave() {
        let trev = 11.67 * PS;
        let tpl = InterleaveTemplate::four_way(5, 0.242 * trev, 0.519 * trev, 1.004 * trev, 7.0);
        assert_relative_eq!(tpl.effective_t3().unwrap(), 0.761 * trev, max_relative = 1e-12);
        let t = interleaved_train(&tpl).unwrap();
        assert_eq!(t.len(), 20);
        assert!(t.pulses().windows(2).all(|w| w[0].time < w[1].time));
        for k in 0..5 {
            let lo = k as f64 * tpl.t4;
            let n = t.pulses().iter().filter(|p| p.time >= lo && p.time < lo + tpl.t4).count();
            assert_eq!(n, 4);
        }
    }

    #[test]
    fn degenerate_single_base() {
        let tpl = InterleaveTemplate::four_way(1, 1.0 * PS, 2.0 * PS, 10.0 * PS, 1.0);
        let t = interleaved_train(&tpl).unwrap();
        let times: Vec<f64> = t.pulses().iter().map(|p| p.time / PS).collect();
        assert_eq!(times.len(), 4);
        assert_relative_eq!(times[3], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn ordering_violation_rejected() {
        let tpl = InterleaveTemplate::four_way(5, 3.0 * PS, 2.0 * PS, 10.0 * PS, 1.0);
        assert!(interleaved_train(&tpl).is_err());
        let tpl = InterleaveTemplate::four_way(5, 3.0 * PS, 5.0 * PS, 7.0 * PS, 1.0);
        assert!(interleaved_train(&tpl).is_err());
    }

    #[test]
    fn merge_within_window() {
        let t = PulseTrain::new(
            vec![
                Pulse { time: 1.0 * PS, strength: 1.0 },
                Pulse { time: 1.0 * PS + 0.5 * FS, strength: 2.0 },
                Pulse { time: 0.0, strength: 0.25 },
            ],
            "x",
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.pulses()[1], Pulse { time: 1.0 * PS, strength: 3.0 });
        assert_eq!(t.total_strength(), 3.25);
        assert!(PulseTrain::new(vec![Pulse { time: 0.0, strength: -1.0 }], "x").is_err());
        assert!(PulseTrain::from_sorted(
            vec![Pulse { time: 1.0, strength: 1.0 }, Pulse { time: 0.0, strength: 1.0 }],
            "x"
        )
        .is_err());
    }

    #[test]
    fn intensity_conversion() {
        let mol = MoleculeSpec::oxygen();
        let p1 = kick_strength_from_intensity(2e12, 100.0 * FS, &mol).unwrap();
        let p2 = kick_strength_from_intensity(4e12, 100.0 * FS, &mol).unwrap();
        assert_eq!(p2, 2.0 * p1);
        assert!((p1 / 0.5 - 1.0).abs() < 0.3, "{p1}");
        let p = kick_strength_from_intensity(3e13, 100.0 * FS, &mol).unwrap();
        assert!((p / 7.0 - 1.0).abs() < 0.3, "{p}");
        assert!(kick_strength_from_intensity(0.0, 100.0 * FS, &mol).is_err());
    }

    #[test]
    fn jitter() {
        let t = periodic_train(10, 1.0 * PS, 2.0).unwrap();
        let same = amplitude_jitter(&t, 0.0, 1).unwrap();
        assert_eq!(same.pulses(), t.pulses());
        let a = amplitude_jitter(&t, 0.2, 42).unwrap();
        let b = amplitude_jitter(&t, 0.2, 42).unwrap();
        assert_eq!(a, b);
        let c = amplitude_jitter(&t, 0.2, 43).unwrap();
        assert_ne!(a.pulses(), c.pulses());
        assert!(amplitude_jitter(&t, -0.1, 1).is_err());
    }

    #[test]
    fn resonance_trajectory_values() {
        let mol = MoleculeSpec::oxygen();
        let rigid = mol.rigid();
        for p in resonance_trajectories(1..=41, &[0], &rigid) {
            assert_relative_eq!(p.time, rigid.revival_time(), max_relative = 1e-13);
        }
        let pts = resonance_trajectories(21..=21, &[0], &mol);
        assert_eq!(pts[0].n_j, 45);
        assert_relative_eq!(pts[0].time / PS, 11.640, epsilon = 1e-3);
        assert_relative_eq!(pts[0].time / mol.revival_time(), 1.0034, epsilon = 5e-4);

        let pts = resonance_trajectories(0..=40, &[-1, 0, 1], &mol);
        assert!(pts.iter().all(|p| p.j % 2 == 1));
        for trio in pts.chunks(3) {
            assert!(trio[0].time < trio[1].time && trio[1].time < trio[2].time);
        }
    }
}
