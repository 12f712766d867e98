//! Scenario configuration files.
//!
//! Every dimensional quantity carries its unit in the key name
//! (`period_ps`, `temperature_k`, `peak_intensity_w_cm2`, ...). Delays may
//! also be given in units of the rigid revival time with a `_trev` suffix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_PULSE_FWHM_FS: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; absent means all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub molecule: MoleculeSection,
    #[serde(default)]
    pub thermal: ThermalSection,
    pub train: TrainSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub intensity_profile: ProfileSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrogram: Option<SpectrogramSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpm: Option<MpmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSection>,
}

/// Constants default to ¹⁶O₂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeSection {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_b")]
    pub b_cm: f64,
    #[serde(default = "default_d")]
    pub d_cm: f64,
    /// Polarizability anisotropy in C·m²/V.
    #[serde(default = "default_delta_alpha")]
    pub delta_alpha_c_m2_per_v: f64,
    #[serde(default = "default_parity")]
    pub parity: rotkick_core::Parity,
}

fn default_name() -> String {
    "O2".into()
}
fn default_b() -> f64 {
    rotkick_core::MoleculeSpec::O2_B
}
fn default_d() -> f64 {
    rotkick_core::MoleculeSpec::O2_D
}
fn default_delta_alpha() -> f64 {
    rotkick_core::MoleculeSpec::O2_DELTA_ALPHA
}
fn default_parity() -> rotkick_core::Parity {
    rotkick_core::Parity::Odd
}

impl Default for MoleculeSection {
    fn default() -> Self {
        MoleculeSection {
            name: default_name(),
            b_cm: default_b(),
            d_cm: default_d(),
            delta_alpha_c_m2_per_v: default_delta_alpha(),
            parity: default_parity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSection {
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    #[serde(default = "default_cutoff")]
    pub population_cutoff: f64,
}

fn default_temperature() -> f64 {
    294.0
}
fn default_cutoff() -> f64 {
    1e-3
}

impl Default for ThermalSection {
    fn default() -> Self {
        ThermalSection {
            temperature_k: default_temperature(),
            population_cutoff: default_cutoff(),
        }
    }
}

/// Exactly one of the three train layouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainSection {
    Periodic(PeriodicTrain),
    Interleaved(InterleavedTrain),
    Explicit(ExplicitTrain),
}

/// Per-pulse strength: either P directly or a peak intensity and duration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Strength {
    pub strength: Option<f64>,
    pub peak_intensity_w_cm2: Option<f64>,
    pub pulse_fwhm_fs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicTrain {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_intensity_w_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_fwhm_fs: Option<f64>,
    /// Relative standard deviation of per-pulse amplitude noise.
    #[serde(default)]
    pub jitter_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterleavedTrain {
    pub base_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t4_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t4_trev: Option<f64>,
    /// Tie T3 to T1 + T2; defaults to true when T3 is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrain_t3: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_intensity_w_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_fwhm_fs: Option<f64>,
    #[serde(default)]
    pub jitter_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTrain {
    pub pulses: Vec<ExplicitPulse>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPulse {
    pub time_ps: f64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_center_nm")]
    pub center_wavelength_nm: f64,
    #[serde(default = "default_probe_fwhm_nm")]
    pub fwhm_nm: f64,
    #[serde(default)]
    pub side: rotkick_core::spectrum::ProbeSide,
    /// Delay after the last pulse.
    #[serde(default)]
    pub delay_ps: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step_nm: f64,
    /// Highest J the spectrum axis must cover.
    #[serde(default = "default_j_top")]
    pub j_top: u32,
    /// Relative height for the top-J annotation and reach statistics.
    #[serde(default = "default_top_threshold")]
    pub top_j_threshold: f64,
}

fn default_center_nm() -> f64 {
    400.8
}
fn default_probe_fwhm_nm() -> f64 {
    0.15
}
fn default_grid_step() -> f64 {
    0.01
}
fn default_j_top() -> u32 {
    45
}
fn default_top_threshold() -> f64 {
    0.05
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            center_wavelength_nm: default_center_nm(),
            fwhm_nm: default_probe_fwhm_nm(),
            side: Default::default(),
            delay_ps: 0.0,
            grid_step_nm: default_grid_step(),
            j_top: default_j_top(),
            top_j_threshold: default_top_threshold(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKindName {
    #[default]
    Delta,
    GaussianBeam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default)]
    pub kind: ProfileKindName,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Smallest sampled intensity relative to the peak.
    #[serde(default = "default_min_scale")]
    pub min_scale: f64,
}

fn default_points() -> usize {
    8
}
fn default_min_scale() -> f64 {
    0.1
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            kind: ProfileKindName::Delta,
            points: default_points(),
            min_scale: default_min_scale(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "default_tail")]
    pub tail_threshold: f64,
    #[serde(default = "default_ceiling")]
    pub j_max_ceiling: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_j_max: Option<u32>,
}

fn default_tail() -> f64 {
    1e-8
}
fn default_ceiling() -> u32 {
    800
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            tail_threshold: default_tail(),
            j_max_ceiling: default_ceiling(),
            fixed_j_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Array formats; reports are always JSON.
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "rotkick-out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveName {
    #[default]
    Total,
    HighJ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayName {
    T1,
    T2,
    T3,
    T4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub delay: DelayName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_trev: Option<f64>,
    pub points: usize,
    #[serde(default)]
    pub objective: ObjectiveName,
    /// Defaults to the first allowed J above 17.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_min: Option<u32>,
    /// Average each point over the intensity profile.
    #[serde(default)]
    pub averaged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default)]
    pub objective: ObjectiveName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_min: Option<u32>,
    #[serde(default = "default_coarse")]
    pub coarse_step_trev: f64,
    #[serde(default = "default_fine")]
    pub fine_step_trev: f64,
    #[serde(default = "default_half_width")]
    pub half_width_trev: f64,
    #[serde(default = "default_true")]
    pub constrain_t3: bool,
    #[serde(default = "default_passes")]
    pub max_passes: usize,
    #[serde(default = "default_true")]
    pub final_average: bool,
}

fn default_coarse() -> f64 {
    1.0 / 200.0
}
fn default_fine() -> f64 {
    1.0 / 2000.0
}
fn default_half_width() -> f64 {
    0.06
}
fn default_true() -> bool {
    true
}
fn default_passes() -> usize {
    50
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            objective: ObjectiveName::default(),
            j_min: None,
            coarse_step_trev: default_coarse(),
            fine_step_trev: default_fine(),
            half_width_trev: default_half_width(),
            constrain_t3: true,
            max_passes: default_passes(),
            final_average: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrogramParameter {
    /// Period of a periodic train.
    Period,
    T1,
    T2,
    T3,
    T4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrogramSection {
    pub parameter: SpectrogramParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_trev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_trev: Option<f64>,
    pub points: usize,
    #[serde(default)]
    pub averaged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpmSection {
    #[serde(default = "default_mpm_fwhm")]
    pub probe_fwhm_fs: f64,
    #[serde(default = "default_center_nm")]
    pub center_wavelength_nm: f64,
    #[serde(default = "default_phi0")]
    pub phi0_rad_per_atm: f64,
    #[serde(default = "default_pressure")]
    pub pressure_atm: f64,
    #[serde(default = "default_sample_step")]
    pub sample_step_fs: f64,
    #[serde(default = "default_window")]
    pub window_fwhm: f64,
    #[serde(default = "default_padding")]
    pub padding: usize,
    /// Probe centers after the first pulse of the train.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_ps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays_trev: Option<Vec<f64>>,
    #[serde(default = "default_cascade_threshold")]
    pub cascade_threshold: f64,
    /// Order spacing; defaults to the thermal-peak Raman shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade_spacing_cm: Option<f64>,
    #[serde(default)]
    pub averaged: bool,
}

fn default_mpm_fwhm() -> f64 {
    120.0
}
fn default_phi0() -> f64 {
    rotkick_core::mpm::MediumSpec::DEFAULT_PHI0_PER_ATM
}
fn default_pressure() -> f64 {
    6.5
}
fn default_sample_step() -> f64 {
    2.0
}
fn default_window() -> f64 {
    10.0
}
fn default_padding() -> usize {
    4
}
fn default_cascade_threshold() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(default = "default_plan_j_min")]
    pub j_min: u32,
    #[serde(default = "default_plan_j_max")]
    pub j_max: u32,
    #[serde(default = "default_offsets")]
    pub offsets: Vec<i32>,
}

fn default_plan_j_min() -> u32 {
    1
}
fn default_plan_j_max() -> u32 {
    41
}
fn default_offsets() -> Vec<i32> {
    vec![-2, 0, 2]
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection {
            j_min: default_plan_j_min(),
            j_max: default_plan_j_max(),
            offsets: default_offsets(),
        }
    }
}

/// A validation failure tied to one dotted key.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub key: String,
    pub message: String,
}

fn issue(key: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue {
        key: key.into(),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), Issue> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(issue(key, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), Issue> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(issue(key, format!("must be ≥ 0, got {v}")))
    }
}

/// Resolves an `_ps` / `_trev` pair to seconds.
pub fn time_of(
    section: &str,
    stem: &str,
    ps: Option<f64>,
    trev: Option<f64>,
    t_rev: f64,
) -> Result<Option<f64>, Issue> {
    match (ps, trev) {
        (Some(_), Some(_)) => Err(issue(
            format!("{section}.{stem}_ps"),
            format!("give either {stem}_ps or {stem}_trev, not both"),
        )),
        (Some(v), None) => {
            non_negative(&format!("{section}.{stem}_ps"), v)?;
            Ok(Some(v * 1e-12))
        }
        (None, Some(v)) => {
            non_negative(&format!("{section}.{stem}_trev"), v)?;
            Ok(Some(v * t_rev))
        }
        (None, None) => Ok(None),
    }
}

pub fn required_time(
    section: &str,
    stem: &str,
    ps: Option<f64>,
    trev: Option<f64>,
    t_rev: f64,
) -> Result<f64, Issue> {
    time_of(section, stem, ps, trev, t_rev)?.ok_or_else(|| {
        issue(
            format!("{section}.{stem}_ps"),
            format!("missing; give {stem}_ps or {stem}_trev"),
        )
    })
}

fn check_strength(section: &str, s: &Strength) -> Result<(), Issue> {
    match (s.strength, s.peak_intensity_w_cm2) {
        (Some(_), Some(_)) => Err(issue(
            format!("{section}.strength"),
            "give either strength or peak_intensity_w_cm2, not both",
        )),
        (None, None) => Err(issue(
            format!("{section}.strength"),
            "missing; give strength (P) or peak_intensity_w_cm2",
        )),
        (Some(p), None) => {
            if s.pulse_fwhm_fs.is_some() {
                return Err(issue(
                    format!("{section}.pulse_fwhm_fs"),
                    "only meaningful together with peak_intensity_w_cm2",
                ));
            }
            non_negative(&format!("{section}.strength"), p)
        }
        (None, Some(i)) => {
            positive(&format!("{section}.peak_intensity_w_cm2"), i)?;
            positive(
                &format!("{section}.pulse_fwhm_fs"),
                s.pulse_fwhm_fs.unwrap_or(DEFAULT_PULSE_FWHM_FS),
            )
        }
    }
}

impl PeriodicTrain {
    pub fn strength_spec(&self) -> Strength {
        Strength {
            strength: self.strength,
            peak_intensity_w_cm2: self.peak_intensity_w_cm2,
            pulse_fwhm_fs: self.pulse_fwhm_fs,
        }
    }
}

impl InterleavedTrain {
    pub fn strength_spec(&self) -> Strength {
        Strength {
            strength: self.strength,
            peak_intensity_w_cm2: self.peak_intensity_w_cm2,
            pulse_fwhm_fs: self.pulse_fwhm_fs,
        }
    }
}

impl ScenarioConfig {
    pub fn rigid_revival_time(&self) -> f64 {
        1.0 / (2.0 * rotkick_core::constants::SPEED_OF_LIGHT_CM * self.molecule.b_cm)
    }

    /// Unit, sign and consistency checks that the type system cannot express.
    pub fn validate(&self) -> Result<(), Issue> {
        let m = &self.molecule;
        positive("molecule.b_cm", m.b_cm)?;
        non_negative("molecule.d_cm", m.d_cm)?;
        non_negative("molecule.delta_alpha_c_m2_per_v", m.delta_alpha_c_m2_per_v)?;
        positive("thermal.temperature_k", self.thermal.temperature_k)?;
        let c = self.thermal.population_cutoff;
        if !(c > 0.0 && c < 1.0) {
            return Err(issue("thermal.population_cutoff", format!("must lie in (0, 1), got {c}")));
        }
        if self.threads == Some(0) {
            return Err(issue("threads", "must be at least 1"));
        }
        let trev = self.rigid_revival_time();
        match &self.train {
            TrainSection::Periodic(p) => {
                if p.count == 0 {
                    return Err(issue("train.periodic.count", "must be at least 1"));
                }
                let period = required_time("train.periodic", "period", p.period_ps, p.period_trev, trev)?;
                if p.count > 1 {
                    positive(
                        if p.period_ps.is_some() {
                            "train.periodic.period_ps"
                        } else {
                            "train.periodic.period_trev"
                        },
                        period,
                    )?;
                }
                check_strength("train.periodic", &p.strength_spec())?;
                non_negative("train.periodic.jitter_sigma", p.jitter_sigma)?;
            }
            TrainSection::Interleaved(t) => {
                let s = "train.interleaved";
                if t.base_count == 0 {
                    return Err(issue(format!("{s}.base_count"), "must be at least 1"));
                }
                let t4 = required_time(s, "t4", t.t4_ps, t.t4_trev, trev)?;
                positive(&format!("{s}.t4"), t4)?;
                required_time(s, "t1", t.t1_ps, t.t1_trev, trev)?;
                time_of(s, "t2", t.t2_ps, t.t2_trev, trev)?;
                let t3 = time_of(s, "t3", t.t3_ps, t.t3_trev, trev)?;
                if t.constrain_t3 == Some(true) && t3.is_some() {
                    return Err(issue(
                        format!("{s}.constrain_t3"),
                        "T3 is derived from T1 + T2 when constrained; drop t3 or set constrain_t3 = false",
                    ));
                }
                check_strength(s, &t.strength_spec())?;
                non_negative(&format!("{s}.jitter_sigma"), t.jitter_sigma)?;
            }
            TrainSection::Explicit(e) => {
                if e.pulses.is_empty() {
                    return Err(issue("train.explicit.pulses", "needs at least one pulse"));
                }
                for (k, p) in e.pulses.iter().enumerate() {
                    if !p.time_ps.is_finite() {
                        return Err(issue(
                            format!("train.explicit.pulses[{k}].time_ps"),
                            "must be finite",
                        ));
                    }
                    non_negative(&format!("train.explicit.pulses[{k}].strength"), p.strength)?;
                }
            }
        }
        let p = &self.probe;
        positive("probe.center_wavelength_nm", p.center_wavelength_nm)?;
        positive("probe.fwhm_nm", p.fwhm_nm)?;
        non_negative("probe.delay_ps", p.delay_ps)?;
        positive("probe.grid_step_nm", p.grid_step_nm)?;
        if !(p.top_j_threshold > 0.0 && p.top_j_threshold < 1.0) {
            return Err(issue("probe.top_j_threshold", "must lie in (0, 1)"));
        }
        let ip = &self.intensity_profile;
        if ip.points == 0 {
            return Err(issue("intensity_profile.points", "must be at least 1"));
        }
        if !(ip.min_scale > 0.0 && ip.min_scale <= 1.0) {
            return Err(issue("intensity_profile.min_scale", "must lie in (0, 1]"));
        }
        positive("truncation.tail_threshold", self.truncation.tail_threshold)?;
        if self.output.formats.is_empty() {
            return Err(issue("output.formats", "needs at least one of \"csv\", \"json\""));
        }
        if let Some(s) = &self.scan {
            let from = required_time("scan", "from", s.from_ps, s.from_trev, trev)?;
            let to = required_time("scan", "to", s.to_ps, s.to_trev, trev)?;
            if s.points < 2 || to <= from {
                return Err(issue("scan.points", "need at least two points over an increasing range"));
            }
        }
        if let Some(o) = &self.optimize {
            positive("optimize.coarse_step_trev", o.coarse_step_trev)?;
            positive("optimize.fine_step_trev", o.fine_step_trev)?;
            positive("optimize.half_width_trev", o.half_width_trev)?;
            if o.fine_step_trev > o.coarse_step_trev {
                return Err(issue("optimize.fine_step_trev", "must not exceed coarse_step_trev"));
            }
        }
        if let Some(s) = &self.spectrogram {
            let from = required_time("spectrogram", "from", s.from_ps, s.from_trev, trev)?;
            let to = required_time("spectrogram", "to", s.to_ps, s.to_trev, trev)?;
            if s.points < 2 || to <= from {
                return Err(issue(
                    "spectrogram.points",
                    "need at least two points over an increasing range",
                ));
            }
        }
        if let Some(m) = &self.mpm {
            positive("mpm.probe_fwhm_fs", m.probe_fwhm_fs)?;
            positive("mpm.center_wavelength_nm", m.center_wavelength_nm)?;
            non_negative("mpm.phi0_rad_per_atm", m.phi0_rad_per_atm)?;
            non_negative("mpm.pressure_atm", m.pressure_atm)?;
            positive("mpm.sample_step_fs", m.sample_step_fs)?;
            if m.sample_step_fs > 5.0 {
                return Err(issue("mpm.sample_step_fs", "must not exceed 5 fs"));
            }
            positive("mpm.window_fwhm", m.window_fwhm)?;
            match (&m.delays_ps, &m.delays_trev) {
                (Some(_), Some(_)) => {
                    return Err(issue("mpm.delays_ps", "give either delays_ps or delays_trev, not both"))
                }
                (None, None) => return Err(issue("mpm.delays_ps", "missing; give delays_ps or delays_trev")),
                _ => {}
            }
            if let Some(d) = m.cascade_spacing_cm {
                positive("mpm.cascade_spacing_cm", d)?;
            }
            if !(m.cascade_threshold > 0.0 && m.cascade_threshold < 1.0) {
                return Err(issue("mpm.cascade_threshold", "must lie in (0, 1)"));
            }
        }
        if let Some(p) = &self.plan {
            if p.j_max < p.j_min {
                return Err(issue("plan.j_max", "must not be below j_min"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Built-in configuration: thermal O₂ and a single resonant P = 0.5 train.
    pub fn builtin() -> Self {
        parse_str(BUILTIN, &[]).expect("built-in configuration is valid")
    }
}

const BUILTIN: &str = "[molecule]\n[train.periodic]\ncount = 1\nperiod_trev = 1.0\nstrength = 0.5\n";

/// Reads, applies `overrides` (`key=value`), deserializes and validates.
pub fn parse_config(path: &Path, overrides: &[String]) -> CliResult<ScenarioConfig> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&src, overrides)
}

pub fn parse_str(src: &str, overrides: &[String]) -> CliResult<ScenarioConfig> {
    let mut table: toml::Table = src.parse().map_err(|e: toml::de::Error| syntax_error(src, &e))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let config: ScenarioConfig = if overrides.is_empty() {
        toml::from_str(src).map_err(|e| syntax_error(src, &e))?
    } else {
        let merged = toml::to_string(&table).expect("table serializes");
        toml::from_str(&merged).map_err(|e| syntax_error(&merged, &e))?
    };
    config.validate().map_err(|i| {
        let (line, context) = locate(src, &i.key)
            .map(|(n, text)| (Some(n), Some(text)))
            .unwrap_or((None, None));
        CliError::Config {
            key: i.key,
            line,
            context,
            message: i.message,
        }
    })?;
    Ok(config)
}

fn syntax_error(src: &str, e: &toml::de::Error) -> CliError {
    let (line, context) = match e.span() {
        Some(span) => {
            let line = src[..span.start.min(src.len())].matches('\n').count() + 1;
            (Some(line), src.lines().nth(line - 1).map(str::to_string))
        }
        None => (None, None),
    };
    let message = e.message().to_string();
    let key = key_in_message(&message)
        .or_else(|| context.as_deref().and_then(key_on_line))
        .unwrap_or_else(|| "<document>".into());
    CliError::Config {
        key,
        line,
        context,
        message,
    }
}

/// The back-quoted name in "unknown field `x`" or "missing field `x`".
fn key_in_message(message: &str) -> Option<String> {
    if !message.contains("field `") {
        return None;
    }
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn key_on_line(line: &str) -> Option<String> {
    let t = line.trim();
    if t.starts_with('[') {
        return Some(t.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    }
    t.split_once('=').map(|(k, _)| k.trim().to_string())
}

/// Line number (1-based) and text of the line that sets dotted `key`.
fn locate(src: &str, key: &str) -> Option<(usize, String)> {
    let clean = |k: &str| k.split('[').next().unwrap_or(k).to_string();
    let parts: Vec<String> = key.split('.').map(clean).collect();
    let (leaf, table) = parts.split_last()?;
    let table = table.join(".");
    let mut current = String::new();
    let mut table_line = None;
    for (n, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table && table_line.is_none() {
                table_line = Some((n + 1, raw.to_string()));
            }
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            let full = if current.is_empty() {
                k.to_string()
            } else {
                format!("{current}.{k}")
            };
            if full == format!("{table}.{leaf}") || (table.is_empty() && k == leaf) {
                return Some((n + 1, raw.to_string()));
            }
            if current == table && k.starts_with(leaf.trim_end_matches("_ps")) && table_line.is_none() {
                table_line = Some((n + 1, raw.to_string()));
            }
        }
    }
    table_line
}

/// Sets a dotted key to a TOML value; bare words become strings.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::Config {
        key: spec.to_string(),
        line: None,
        context: None,
        message: "override must look like key=value".into(),
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (leaf, path) = parts.split_last().ok_or_else(|| CliError::Config {
        key: key.to_string(),
        line: None,
        context: None,
        message: "empty override key".into(),
    })?;
    let mut cursor = table;
    for part in path {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| CliError::Config {
            key: key.to_string(),
            line: None,
            context: None,
            message: format!("`{part}` is not a table"),
        })?;
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[molecule]
name = "O2"

[train.periodic]
count = 20
period_trev = 1.0
strength = 0.5
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_str(MINIMAL, &[]).unwrap();
        assert_eq!(c.molecule.b_cm, rotkick_core::MoleculeSpec::O2_B);
        assert_eq!(c.thermal.temperature_k, 294.0);
        assert_eq!(c.probe.center_wavelength_nm, 400.8);
        assert_eq!(c.output.formats, vec![Format::Csv]);
        assert!(c.scan.is_none());
    }

    #[test]
    fn negative_period_names_the_key() {
        let src = MINIMAL.replace("period_trev = 1.0", "period_ps = -1");
        let err = parse_str(&src, &[]).unwrap_err();
        match &err {
            CliError::Config { key, line, .. } => {
                assert_eq!(key, "train.periodic.period_ps");
                assert_eq!(*line, Some(7));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("period_ps = -1"));
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let src = MINIMAL.replace("strength = 0.5", "strength = 0.5\nstrenght = 1");
        let err = parse_str(&src, &[]).unwrap_err();
        match err {
            CliError::Config { key, line, .. } => {
                assert_eq!(key, "strenght");
                assert_eq!(line, Some(9));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_section_named() {
        let err = parse_str("[molecule]\n", &[]).unwrap_err();
        assert!(err.to_string().contains("train"), "{err}");
    }

    #[test]
    fn two_train_variants_rejected() {
        let src = format!("{MINIMAL}\n[train.explicit]\npulses = []\n");
        assert!(parse_str(&src, &[]).is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = parse_str(MINIMAL, &[]).unwrap();
        let again = parse_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_toml(), again.to_toml());
    }

    #[test]
    fn overrides_apply() {
        let c = parse_str(
            MINIMAL,
            &[
                "train.periodic.strength=7".into(),
                "thermal.temperature_k=77".into(),
                "output.dir=elsewhere".into(),
            ],
        )
        .unwrap();
        match c.train {
            TrainSection::Periodic(p) => assert_eq!(p.strength, Some(7.0)),
            _ => unreachable!(),
        }
        assert_eq!(c.thermal.temperature_k, 77.0);
        assert_eq!(c.output.dir, "elsewhere");
        assert!(parse_str(MINIMAL, &["nonsense".into()]).is_err());
    }

    #[test]
    fn both_units_rejected() {
        let src = MINIMAL.replace("period_trev = 1.0", "period_trev = 1.0\nperiod_ps = 11.6");
        let err = parse_str(&src, &[]).unwrap_err();
        assert!(err.to_string().contains("period_ps"));
    }

    #[test]
    fn strength_or_intensity() {
        let src = MINIMAL.replace("strength = 0.5", "peak_intensity_w_cm2 = 2e12\npulse_fwhm_fs = 100");
        assert!(parse_str(&src, &[]).is_ok());
        let src = MINIMAL.replace("strength = 0.5", "strength = 0.5\npeak_intensity_w_cm2 = 2e12");
        assert!(parse_str(&src, &[]).is_err());
        let src = MINIMAL.replace("strength = 0.5", "");
        assert!(parse_str(&src, &[]).is_err());
    }

    #[test]
    fn builtin_is_valid() {
        let c = ScenarioConfig::builtin();
        assert!(matches!(c.train, TrainSection::Periodic(_)));
    }
}
