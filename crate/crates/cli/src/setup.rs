//! Turns a validated configuration into core simulation objects.

use rotkick_core::ensemble::{IntensityProfile, ThermalSpec, Truncation};
use rotkick_core::mpm::{MediumSpec, MpmGrid, ProbePulse};
use rotkick_core::optimize::{Delay, Objective, SearchSpec};
use rotkick_core::scenario::{Scenario, ScenarioSettings};
use rotkick_core::spectrum::{ProbeSpec, SpectrumGrid};
use rotkick_core::trains::{
    amplitude_jitter, interleaved_train, kick_strength_from_intensity, periodic_train,
    InterleaveTemplate, Pulse, PulseTrain,
};
use rotkick_core::MoleculeSpec;

use crate::config::{
    required_time, time_of, DelayName, Issue, MpmSection, ObjectiveName, OptimizeSection,
    ProfileKindName, ScenarioConfig, Strength, TrainSection, DEFAULT_PULSE_FWHM_FS,
};
use crate::error::{CliError, CliResult, Context};

fn from_issue(i: Issue) -> CliError {
    CliError::Config {
        key: i.key,
        line: None,
        context: None,
        message: i.message,
    }
}

pub fn molecule(cfg: &ScenarioConfig) -> CliResult<MoleculeSpec> {
    let m = &cfg.molecule;
    MoleculeSpec::new(
        m.name.clone(),
        m.b_cm,
        m.d_cm,
        m.delta_alpha_c_m2_per_v,
        m.parity,
    )
    .context(|| "molecule".into())
}

pub fn profile(cfg: &ScenarioConfig) -> CliResult<IntensityProfile> {
    let p = &cfg.intensity_profile;
    match p.kind {
        ProfileKindName::Delta => Ok(IntensityProfile::delta()),
        ProfileKindName::GaussianBeam => IntensityProfile::gaussian_beam(p.points, p.min_scale)
            .context(|| "intensity_profile".into()),
    }
}

/// True when observables should be averaged over a non-trivial profile.
pub fn averaged(cfg: &ScenarioConfig) -> bool {
    cfg.intensity_profile.kind != ProfileKindName::Delta
}

pub fn scenario(cfg: &ScenarioConfig) -> CliResult<Scenario> {
    let settings = ScenarioSettings {
        thermal: ThermalSpec {
            temperature: cfg.thermal.temperature_k,
            population_cutoff: cfg.thermal.population_cutoff,
        },
        profile: profile(cfg)?,
        truncation: Truncation {
            tail_threshold: cfg.truncation.tail_threshold,
            ceiling: cfg.truncation.j_max_ceiling,
            fixed: cfg.truncation.fixed_j_max,
            ..Truncation::default()
        },
        probe_delay: cfg.probe.delay_ps * 1e-12,
        ..ScenarioSettings::default()
    };
    Scenario::new(molecule(cfg)?, settings).context(|| format!("scenario for {}", cfg.molecule.name))
}

fn strength_of(section: &str, s: Strength, mol: &MoleculeSpec) -> CliResult<f64> {
    match (s.strength, s.peak_intensity_w_cm2) {
        (Some(p), _) => Ok(p),
        (None, Some(i)) => {
            let fwhm = s.pulse_fwhm_fs.unwrap_or(DEFAULT_PULSE_FWHM_FS) * 1e-15;
            kick_strength_from_intensity(i, fwhm, mol).context(|| format!("{section}.peak_intensity_w_cm2"))
        }
        (None, None) => Err(from_issue(Issue {
            key: format!("{section}.strength"),
            message: "missing".into(),
        })),
    }
}

/// The interleave template of an interleaved train.
pub fn template(cfg: &ScenarioConfig, mol: &MoleculeSpec) -> CliResult<Option<InterleaveTemplate>> {
    let TrainSection::Interleaved(t) = &cfg.train else {
        return Ok(None);
    };
    let s = "train.interleaved";
    let trev = mol.revival_time();
    let t1 = required_time(s, "t1", t.t1_ps, t.t1_trev, trev).map_err(from_issue)?;
    let t2 = time_of(s, "t2", t.t2_ps, t.t2_trev, trev).map_err(from_issue)?;
    let t3 = time_of(s, "t3", t.t3_ps, t.t3_trev, trev).map_err(from_issue)?;
    let t4 = required_time(s, "t4", t.t4_ps, t.t4_trev, trev).map_err(from_issue)?;
    let constrain = t.constrain_t3.unwrap_or(t3.is_none() && t2.is_some());
    let tpl = InterleaveTemplate {
        base_count: t.base_count,
        t4,
        t1: Some(t1),
        t2,
        t3,
        constrain_t3: constrain,
        strength: strength_of(s, t.strength_spec(), mol)?,
    };
    tpl.validate().context(|| s.into())?;
    Ok(Some(tpl))
}

pub fn train(cfg: &ScenarioConfig, mol: &MoleculeSpec, seed: u64) -> CliResult<PulseTrain> {
    let trev = mol.revival_time();
    let (train, sigma) = match &cfg.train {
        TrainSection::Periodic(p) => {
            let period = required_time("train.periodic", "period", p.period_ps, p.period_trev, trev)
                .map_err(from_issue)?;
            let strength = strength_of("train.periodic", p.strength_spec(), mol)?;
            let train = periodic_train(p.count, period.max(f64::MIN_POSITIVE), strength)
                .context(|| "train.periodic".into())?;
            (train, p.jitter_sigma)
        }
        TrainSection::Interleaved(t) => {
            let tpl = template(cfg, mol)?.expect("interleaved train has a template");
            (
                interleaved_train(&tpl).context(|| "train.interleaved".into())?,
                t.jitter_sigma,
            )
        }
        TrainSection::Explicit(e) => {
            let pulses = e
                .pulses
                .iter()
                .map(|p| Pulse {
                    time: p.time_ps * 1e-12,
                    strength: p.strength,
                })
                .collect();
            (
                PulseTrain::new(pulses, "explicit").context(|| "train.explicit".into())?,
                0.0,
            )
        }
    };
    if sigma > 0.0 {
        amplitude_jitter(&train, sigma, seed).context(|| "train.jitter_sigma".into())
    } else {
        Ok(train)
    }
}

pub fn probe_spec(cfg: &ScenarioConfig) -> ProbeSpec {
    ProbeSpec {
        center_wavelength_nm: cfg.probe.center_wavelength_nm,
        fwhm_wavelength_nm: cfg.probe.fwhm_nm,
        side: cfg.probe.side,
    }
}

pub fn spectrum_grid(cfg: &ScenarioConfig, mol: &MoleculeSpec) -> SpectrumGrid {
    SpectrumGrid::covering(mol, &probe_spec(cfg), cfg.probe.j_top).with_step(cfg.probe.grid_step_nm)
}

pub fn objective(kind: ObjectiveName, j_min: Option<u32>, mol: &MoleculeSpec) -> Objective {
    match kind {
        ObjectiveName::Total => Objective::total(),
        ObjectiveName::HighJ => {
            let mut o = Objective::high_j(mol);
            if let Some(j) = j_min {
                o.j_min = j;
            }
            o
        }
    }
}

pub fn delay(name: DelayName) -> Delay {
    match name {
        DelayName::T1 => Delay::T1,
        DelayName::T2 => Delay::T2,
        DelayName::T3 => Delay::T3,
        DelayName::T4 => Delay::T4,
    }
}

pub fn search_spec(o: &OptimizeSection, mol: &MoleculeSpec) -> SearchSpec {
    let trev = mol.revival_time();
    SearchSpec {
        coarse_step: o.coarse_step_trev * trev,
        fine_step: o.fine_step_trev * trev,
        half_width: o.half_width_trev * trev,
        constrain_t3: o.constrain_t3,
        max_passes: o.max_passes,
        final_average: o.final_average,
    }
}

pub struct MpmSetup {
    pub probe: ProbePulse,
    pub medium: MediumSpec,
    pub grid: MpmGrid,
    /// Seconds after the first pulse.
    pub delays: Vec<f64>,
}

pub fn mpm_setup(m: &MpmSection, mol: &MoleculeSpec) -> MpmSetup {
    let trev = mol.revival_time();
    let delays = match (&m.delays_ps, &m.delays_trev) {
        (Some(d), _) => d.iter().map(|v| v * 1e-12).collect(),
        (None, Some(d)) => d.iter().map(|v| v * trev).collect(),
        (None, None) => Vec::new(),
    };
    MpmSetup {
        probe: ProbePulse {
            center_wavelength_nm: m.center_wavelength_nm,
            fwhm: m.probe_fwhm_fs * 1e-15,
            delay: 0.0,
        },
        medium: MediumSpec {
            phi0_per_atm: m.phi0_rad_per_atm,
            pressure_atm: m.pressure_atm,
        },
        grid: MpmGrid {
            sample_step: m.sample_step_fs * 1e-15,
            window_fwhm: m.window_fwhm,
            padding: m.padding,
        },
        delays,
    }
}
