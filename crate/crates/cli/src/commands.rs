//! Subcommand execution.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rotkick_core::mpm::{cascade_report, probe_spectra, thermal_peak_shift, CascadeReport};
use rotkick_core::observables::stats_from_populations;
use rotkick_core::optimize::{optimize_delays, scan_delay, Stage};
use rotkick_core::spectrum::{spectrogram, synth_from_power};
use rotkick_core::trains::{
    interleaved_train, kick_strength_from_intensity, periodic_train, resonance_trajectories,
    InterleaveTemplate, PulseTrain,
};
use rotkick_core::MoleculeSpec;

use crate::config::{ScenarioConfig, SpectrogramParameter, TrainSection};
use crate::error::{CliError, CliResult, Context};
use crate::output::{Cell, FileEntry, RunDir, Table, SCHEMA_VERSION};
use crate::setup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Simulate,
    Spectrogram,
    Scan,
    Optimize,
    Mpm,
    Plan,
    Convert,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Simulate,
        Subcommand::Spectrogram,
        Subcommand::Scan,
        Subcommand::Optimize,
        Subcommand::Mpm,
        Subcommand::Plan,
        Subcommand::Convert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Spectrogram => "spectrogram",
            Subcommand::Scan => "scan",
            Subcommand::Optimize => "optimize",
            Subcommand::Mpm => "mpm",
            Subcommand::Plan => "plan",
            Subcommand::Convert => "convert",
        }
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown subcommand `{s}`")))
    }
}

/// Command-line settings that take precedence over the configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFlags {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// `convert` input, W/cm².
    pub intensity_w_cm2: Option<f64>,
    /// `convert` input, seconds.
    pub fwhm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub software: String,
    pub software_version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config: ScenarioConfig,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Runs one subcommand in a dedicated worker pool, writes its outputs and
/// the manifest, and returns the manifest.
pub fn run_subcommand(
    name: &str,
    config: &ScenarioConfig,
    flags: &RunFlags,
) -> CliResult<RunManifest> {
    let cmd: Subcommand = name.parse()?;
    let started = Instant::now();
    let threads = flags
        .threads
        .or(config.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let seed = flags.seed.unwrap_or(config.seed);
    if seed > i64::MAX as u64 {
        return Err(CliError::Usage(format!(
            "seed {seed} is above {}, the largest integer a scenario file can hold",
            i64::MAX
        )));
    }
    let effective = ScenarioConfig {
        seed,
        ..config.clone()
    };
    let config = &effective;
    let root = flags
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;

    let mut run = RunDir::create(&root, &config.output.formats)?;
    run.write_bytes("config.toml", config.to_toml().as_bytes())?;
    let ctx = Ctx {
        cfg: config,
        seed,
        flags,
    };
    pool.install(|| match cmd {
        Subcommand::Simulate => simulate(&ctx, &mut run),
        Subcommand::Spectrogram => spectrogram_cmd(&ctx, &mut run),
        Subcommand::Scan => scan(&ctx, &mut run),
        Subcommand::Optimize => optimize(&ctx, &mut run),
        Subcommand::Mpm => mpm(&ctx, &mut run),
        Subcommand::Plan => plan(&ctx, &mut run),
        Subcommand::Convert => convert(&ctx, &mut run),
    })?;

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        software: env!("CARGO_PKG_NAME").into(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        seed,
        threads,
        config: config.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: run.files().to_vec(),
    };
    let mut data = serde_json::to_vec_pretty(&manifest)?;
    data.push(b'\n');
    let path = root.join(MANIFEST_NAME);
    std::fs::write(&path, data).map_err(|source| CliError::Io { path, source })?;
    Ok(manifest)
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    flags: &'a RunFlags,
}

fn missing_section(section: &str, cmd: Subcommand) -> CliError {
    CliError::Config {
        key: section.into(),
        line: None,
        context: None,
        message: format!("section [{section}] is required by `{}`", cmd.name()),
    }
}

fn interleaved_template(ctx: &Ctx, mol: &MoleculeSpec, cmd: Subcommand) -> CliResult<InterleaveTemplate> {
    setup::template(ctx.cfg, mol)?.ok_or_else(|| CliError::Config {
        key: "train".into(),
        line: None,
        context: None,
        message: format!("`{}` needs an interleaved train", cmd.name()),
    })
}

fn ps(t: f64) -> f64 {
    t * 1e12
}

fn train_table(train: &PulseTrain) -> Table {
    let mut t = Table::new(["time_ps", "P"]);
    for p in train.pulses() {
        t.push(vec![ps(p.time).into(), p.strength.into()]);
    }
    t
}

#[derive(Serialize)]
struct SimulateReport {
    molecule: String,
    pulses: usize,
    total_strength: f64,
    probe_time_ps: f64,
    averaged: bool,
    top_j_threshold: f64,
    /// Highest J whose Raman line reaches the threshold.
    top_j: Option<u32>,
    tallest_j: Option<u32>,
    coherence_reach_j: Option<u32>,
    max_populated_j: u32,
    mean_j: f64,
    alignment: f64,
    integrated_coherence: f64,
    spectrum_area: f64,
}

fn simulate(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let sc = setup::scenario(ctx.cfg)?;
    let mol = sc.mol().clone();
    let train = setup::train(ctx.cfg, &mol, ctx.seed)?;
    let t = sc.probe_time(&train);
    let averaged = setup::averaged(ctx.cfg);
    let obs = sc
        .observe_with(&train, t, averaged)
        .context(|| format!("simulate {}", train.label))?;
    let probe = setup::probe_spec(ctx.cfg);
    let grid = setup::spectrum_grid(ctx.cfg, &mol);
    let spectrum = synth_from_power(&obs.coherence_power, &probe, &mol, &grid)
        .context(|| "spectrum synthesis".into())?;
    let threshold = ctx.cfg.probe.top_j_threshold;
    let stats = stats_from_populations(&obs.populations, threshold).context(|| "populations".into())?;

    let mut table = Table::new(["wavelength_shift_nm", "intensity", "nearest_J"]);
    for ((x, y), j) in spectrum
        .shift_nm
        .iter()
        .zip(&spectrum.intensity)
        .zip(&spectrum.nearest_j)
    {
        table.push(vec![(*x).into(), (*y).into(), (*j).into()]);
    }
    run.write_table("spectrum", &table)?;

    let mut lines = Table::new(["J", "coherence_power", "population"]);
    let top = obs.coherence_power.0.len().max(obs.populations.0.len());
    for j in (0..top as u32).filter(|&j| mol.parity.allows(j)) {
        lines.push(vec![
            j.into(),
            obs.coherence_power.get(j).into(),
            obs.populations.get(j).into(),
        ]);
    }
    run.write_table("levels", &lines)?;
    run.write_table("train", &train_table(&train))?;

    let report = SimulateReport {
        molecule: mol.name.clone(),
        pulses: train.len(),
        total_strength: train.total_strength(),
        probe_time_ps: ps(t),
        averaged,
        top_j_threshold: threshold,
        top_j: spectrum.top_j(threshold),
        tallest_j: spectrum.tallest_line().map(|l| l.j),
        coherence_reach_j: obs.coherence_power.reach(threshold),
        max_populated_j: stats.max_populated_j,
        mean_j: stats.mean_j,
        alignment: obs.alignment,
        integrated_coherence: obs.coherence_power.sum_from(0),
        spectrum_area: spectrum.area(),
    };
    run.write_report("report.json", &report)
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| from + (to - from) * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Serialize)]
struct SpectrogramReport {
    parameter: SpectrogramParameter,
    scan_ps: Vec<f64>,
    scan_trev: Vec<f64>,
    integrated_coherence: Vec<f64>,
    coherence_reach_j: Vec<Option<u32>>,
}

fn spectrogram_cmd(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let cmd = Subcommand::Spectrogram;
    let s = ctx
        .cfg
        .spectrogram
        .as_ref()
        .ok_or_else(|| missing_section("spectrogram", cmd))?;
    let sc = setup::scenario(ctx.cfg)?;
    let mol = sc.mol().clone();
    let trev = mol.revival_time();
    let issue = |i: crate::config::Issue| CliError::Config {
        key: i.key,
        line: None,
        context: None,
        message: i.message,
    };
    let from = crate::config::required_time("spectrogram", "from", s.from_ps, s.from_trev, trev).map_err(issue)?;
    let to = crate::config::required_time("spectrogram", "to", s.to_ps, s.to_trev, trev).map_err(issue)?;
    let axis = linspace(from, to, s.points);
    let probe = setup::probe_spec(ctx.cfg);
    let grid = setup::spectrum_grid(ctx.cfg, &mol);

    let result = match s.parameter {
        SpectrogramParameter::Period => {
            let TrainSection::Periodic(p) = &ctx.cfg.train else {
                return Err(CliError::Config {
                    key: "spectrogram.parameter".into(),
                    line: None,
                    context: None,
                    message: "scanning the period needs a periodic train".into(),
                });
            };
            let base = setup::train(ctx.cfg, &mol, ctx.seed)?;
            let strength = base.pulses()[0].strength;
            let count = p.count;
            spectrogram(
                &axis,
                |x| periodic_train(count, x, strength),
                &sc,
                &probe,
                &grid,
                s.averaged,
            )
        }
        param => {
            let tpl = interleaved_template(ctx, &mol, cmd)?;
            let d = setup::delay(match param {
                SpectrogramParameter::T1 => crate::config::DelayName::T1,
                SpectrogramParameter::T2 => crate::config::DelayName::T2,
                SpectrogramParameter::T3 => crate::config::DelayName::T3,
                _ => crate::config::DelayName::T4,
            });
            spectrogram(
                &axis,
                |x| interleaved_train(&d.set(&tpl, x)),
                &sc,
                &probe,
                &grid,
                s.averaged,
            )
        }
    }
    .context(|| "spectrogram".into())?;

    let mut columns = vec!["scan_ps\\wavelength_shift_nm".to_string()];
    columns.extend(result.shift_axis.iter().map(|x| x.to_string()));
    let mut table = Table::new(columns);
    for (x, row) in result.scan_axis.iter().zip(&result.intensity) {
        let mut cells = vec![Cell::Num(ps(*x))];
        cells.extend(row.iter().map(|&v| Cell::Num(v)));
        table.push(cells);
    }
    run.write_table("spectrogram", &table)?;

    let threshold = ctx.cfg.probe.top_j_threshold;
    let report = SpectrogramReport {
        parameter: s.parameter,
        scan_ps: axis.iter().map(|&x| ps(x)).collect(),
        scan_trev: axis.iter().map(|&x| x / trev).collect(),
        integrated_coherence: (0..axis.len()).map(|k| result.integrated(k)).collect(),
        coherence_reach_j: result.line_power.iter().map(|p| p.reach(threshold)).collect(),
    };
    run.write_report("report.json", &report)
}

#[derive(Serialize)]
struct Extremum {
    delay_ps: f64,
    delay_trev: f64,
    objective: f64,
}

#[derive(Serialize)]
struct ScanReport {
    delay: crate::config::DelayName,
    objective: rotkick_core::optimize::Objective,
    maxima: Vec<Extremum>,
    minima: Vec<Extremum>,
}

fn scan(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let cmd = Subcommand::Scan;
    let s = ctx.cfg.scan.as_ref().ok_or_else(|| missing_section("scan", cmd))?;
    let sc = setup::scenario(ctx.cfg)?;
    let mol = sc.mol().clone();
    let trev = mol.revival_time();
    let tpl = interleaved_template(ctx, &mol, cmd)?;
    let issue = |i: crate::config::Issue| CliError::Config {
        key: i.key,
        line: None,
        context: None,
        message: i.message,
    };
    let from = crate::config::required_time("scan", "from", s.from_ps, s.from_trev, trev).map_err(issue)?;
    let to = crate::config::required_time("scan", "to", s.to_ps, s.to_trev, trev).map_err(issue)?;
    let values = linspace(from, to, s.points);
    let obj = setup::objective(s.objective, s.j_min, &mol);
    let curve = scan_delay(&tpl, setup::delay(s.delay), &values, &obj, &sc, s.averaged)
        .context(|| format!("scan of {:?}", s.delay))?;

    let mut table = Table::new(["delay_ps", "delay_trev", "objective"]);
    for (v, o) in curve.values.iter().zip(&curve.objective) {
        table.push(vec![ps(*v).into(), (v / trev).into(), (*o).into()]);
    }
    run.write_table("scan", &table)?;
    let pick = |idx: Vec<usize>| -> Vec<Extremum> {
        idx.into_iter()
            .map(|k| Extremum {
                delay_ps: ps(curve.values[k]),
                delay_trev: curve.values[k] / trev,
                objective: curve.objective[k],
            })
            .collect()
    };
    let report = ScanReport {
        delay: s.delay,
        objective: obj,
        maxima: pick(curve.local_maxima()),
        minima: pick(curve.local_minima()),
    };
    run.write_report("report.json", &report)
}

#[derive(Serialize)]
struct OptimizeReport {
    objective: rotkick_core::optimize::Objective,
    delays_ps: [f64; 4],
    delays_trev: [f64; 4],
    value: f64,
    initial_value: f64,
    averaged_value: Option<f64>,
    evaluations: usize,
    passes: usize,
}

fn optimize(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let cmd = Subcommand::Optimize;
    let default_section = crate::config::OptimizeSection::default();
    let o = ctx.cfg.optimize.as_ref().unwrap_or(&default_section);
    let sc = setup::scenario(ctx.cfg)?;
    let mol = sc.mol().clone();
    let trev = mol.revival_time();
    let tpl = interleaved_template(ctx, &mol, cmd)?;
    let obj = setup::objective(o.objective, o.j_min, &mol);
    let result = optimize_delays(&tpl, &obj, &setup::search_spec(o, &mol), &sc)
        .context(|| "delay optimization".into())?;

    let mut trace = Table::new(["evaluations", "stage", "t1_ps", "t2_ps", "t3_ps", "t4_ps", "objective"]);
    for e in &result.trace {
        let stage = match e.stage {
            Stage::Initial => "initial",
            Stage::Coarse => "coarse",
            Stage::Fine => "fine",
        };
        let mut row = vec![e.evaluations.into(), stage.into()];
        row.extend(e.delays.iter().map(|&d| Cell::Num(ps(d))));
        row.push(e.objective.into());
        trace.push(row);
    }
    run.write_table("trace", &trace)?;
    let best = interleaved_train(&result.template).context(|| "optimized train".into())?;
    run.write_table("train", &train_table(&best))?;
    let d = result.delays();
    let report = OptimizeReport {
        objective: obj,
        delays_ps: d.map(ps),
        delays_trev: d.map(|x| x / trev),
        value: result.objective,
        initial_value: result.initial_objective,
        averaged_value: result.averaged_objective,
        evaluations: result.evaluations,
        passes: result.passes,
    };
    run.write_report("report.json", &report)
}

#[derive(Serialize)]
struct MpmReport {
    phi0_rad: f64,
    order_spacing_cm: f64,
    reference_j: Option<u32>,
    transform_limited_fwhm_nm: f64,
    delays_ps: Vec<f64>,
    cascades: Vec<CascadeReport>,
}

fn mpm(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let cmd = Subcommand::Mpm;
    let m = ctx.cfg.mpm.as_ref().ok_or_else(|| missing_section("mpm", cmd))?;
    let sc = setup::scenario(ctx.cfg)?;
    let mol = sc.mol().clone();
    let train = setup::train(ctx.cfg, &mol, ctx.seed)?;
    let s = setup::mpm_setup(m, &mol);
    let spectra = probe_spectra(&sc, &train, &s.probe, &s.medium, &s.delays, &s.grid, m.averaged)
        .context(|| "probe spectra".into())?;
    let (reference_j, spacing) = match m.cascade_spacing_cm {
        Some(d) => (None, d),
        None => {
            let (j, d) = thermal_peak_shift(&sc).context(|| "cascade spacing".into())?;
            (Some(j), d)
        }
    };

    let mut columns = vec!["offset_cm".to_string(), "wavelength_nm".to_string()];
    columns.extend(s.delays.iter().map(|d| format!("intensity_at_{}ps", ps(*d))));
    let mut table = Table::new(columns);
    if let Some(first) = spectra.first() {
        for (k, &x) in first.offset_cm.iter().enumerate() {
            let mut row = vec![Cell::Num(x), Cell::Num(first.wavelength_nm(x))];
            row.extend(spectra.iter().map(|sp| Cell::Num(sp.intensity[k])));
            table.push(row);
        }
    }
    run.write_table("mpm_spectra", &table)?;

    let mut broadening = Table::new(["delay_ps", "fwhm_nm", "centroid_nm"]);
    for (d, sp) in s.delays.iter().zip(&spectra) {
        broadening.push(vec![
            ps(*d).into(),
            sp.fwhm_nm().into(),
            (sp.center_wavelength_nm + sp.centroid_shift_nm()).into(),
        ]);
    }
    run.write_table("broadening", &broadening)?;

    let cascades = spectra
        .iter()
        .map(|sp| cascade_report(sp, m.cascade_threshold, spacing))
        .collect::<rotkick_core::Result<Vec<_>>>()
        .context(|| "cascade analysis".into())?;
    let lambda = m.center_wavelength_nm * 1e-7;
    let report = MpmReport {
        phi0_rad: s.medium.phi0(),
        order_spacing_cm: spacing,
        reference_j,
        transform_limited_fwhm_nm: lambda * lambda * s.probe.transform_limited_fwhm_cm() * 1e7,
        delays_ps: s.delays.iter().map(|&d| ps(d)).collect(),
        cascades,
    };
    run.write_report("report.json", &report)
}

fn plan(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let mol = setup::molecule(ctx.cfg)?;
    let trev = mol.revival_time();
    let p = ctx.cfg.plan.clone().unwrap_or_default();
    let points = resonance_trajectories(p.j_min..=p.j_max, &p.offsets, &mol);
    let mut table = Table::new(["J", "offset", "N_J", "time_ps", "time_trev"]);
    for pt in &points {
        table.push(vec![
            pt.j.into(),
            pt.offset.into(),
            pt.n_j.into(),
            ps(pt.time).into(),
            (pt.time / trev).into(),
        ]);
    }
    run.write_table("trajectories", &table)
}

#[derive(Serialize)]
struct ConvertReport {
    molecule: String,
    peak_intensity_w_cm2: f64,
    fwhm_fs: f64,
    strength: f64,
}

fn convert(ctx: &Ctx, run: &mut RunDir) -> CliResult<()> {
    let mol = setup::molecule(ctx.cfg)?;
    let intensity = ctx
        .flags
        .intensity_w_cm2
        .ok_or_else(|| CliError::Usage("convert needs --intensity".into()))?;
    let fwhm = ctx
        .flags
        .fwhm
        .unwrap_or(crate::config::DEFAULT_PULSE_FWHM_FS * 1e-15);
    let p = kick_strength_from_intensity(intensity, fwhm, &mol).context(|| "convert".into())?;
    run.write_report(
        "convert.json",
        &ConvertReport {
            molecule: mol.name.clone(),
            peak_intensity_w_cm2: intensity,
            fwhm_fs: fwhm * 1e15,
            strength: p,
        },
    )
}

/// Parses `100fs`, `0.1ps` or a bare number of seconds.
pub fn parse_duration(s: &str) -> CliResult<f64> {
    let s = s.trim();
    let (num, scale) = if let Some(v) = s.strip_suffix("fs") {
        (v, 1e-15)
    } else if let Some(v) = s.strip_suffix("ps") {
        (v, 1e-12)
    } else if let Some(v) = s.strip_suffix("ns") {
        (v, 1e-9)
    } else if let Some(v) = s.strip_suffix('s') {
        (v, 1.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot read duration `{s}`; try e.g. 100fs")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::Usage(format!("duration `{s}` must be positive")));
    }
    Ok(v * scale)
}
