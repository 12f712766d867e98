//! Thin-medium molecular phase modulation: the aligned gas imprints
//! φ(t) = φ₀ (⟨cos²θ⟩(t) − 1/3) on a probe pulse, whose spectrum then shows
//! cascaded Raman sidebands and broadening.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT_CM;
use crate::ensemble::{Incoherent, SnapshotPlan};
use crate::error::{invalid, Error, Result};
use crate::observables::{AlignmentSamples, PiecewiseAlignment};
use crate::scenario::Scenario;
use crate::trains::PulseTrain;
use crate::C64;

/// Coarsest accepted phase sampling step.
pub const MAX_SAMPLE_STEP: f64 = 5e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePulse {
    pub center_wavelength_nm: f64,
    /// Intensity FWHM in seconds.
    pub fwhm: f64,
    /// Seconds after the first pulse of the train.
    pub delay: f64,
}

impl Default for ProbePulse {
    fn default() -> Self {
        ProbePulse {
            center_wavelength_nm: 400.8,
            fwhm: 120e-15,
            delay: 0.0,
        }
    }
}

impl ProbePulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm.is_finite() && self.fwhm > 0.0) {
            return Err(invalid("probe_fwhm", format!("must be positive, got {}", self.fwhm)));
        }
        if !(self.center_wavelength_nm.is_finite() && self.center_wavelength_nm > 0.0) {
            return Err(invalid("center_wavelength_nm", "must be positive"));
        }
        Ok(())
    }

    /// Spectral intensity FWHM of the unmodulated pulse in cm⁻¹.
    pub fn transform_limited_fwhm_cm(&self) -> f64 {
        2.0 * std::f64::consts::LN_2 / (std::f64::consts::PI * self.fwhm * SPEED_OF_LIGHT_CM)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    /// Peak phase per atmosphere, rad/atm.
    pub phi0_per_atm: f64,
    pub pressure_atm: f64,
}

impl MediumSpec {
    /// Calibrated so that the optimized 28-pulse train at 6.5 atm yields a
    /// cascade of more than a hundred sidebands.
    pub const DEFAULT_PHI0_PER_ATM: f64 = 46.0;

    pub fn phi0(&self) -> f64 {
        self.phi0_per_atm * self.pressure_atm
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi0_per_atm.is_finite() && self.phi0_per_atm >= 0.0) {
            return Err(invalid("phi0_per_atm", "must be ≥ 0"));
        }
        if !(self.pressure_atm.is_finite() && self.pressure_atm >= 0.0) {
            return Err(invalid("pressure_atm", "must be ≥ 0"));
        }
        Ok(())
    }
}

impl Default for MediumSpec {
    fn default() -> Self {
        MediumSpec {
            phi0_per_atm: Self::DEFAULT_PHI0_PER_ATM,
            pressure_atm: 6.5,
        }
    }
}

/// Sampling and FFT layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpmGrid {
    pub sample_step: f64,
    /// Half window in probe FWHMs.
    pub window_fwhm: f64,
    /// FFT length is the next power of two ≥ padding × samples.
    pub padding: usize,
}

impl Default for MpmGrid {
    fn default() -> Self {
        MpmGrid {
            sample_step: 2e-15,
            window_fwhm: 10.0,
            padding: 4,
        }
    }
}

/// Uniformly sampled probe phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub t0: f64,
    pub dt: f64,
    pub phi: Vec<f64>,
}

impl PhaseTrace {
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_step(dt)?;
        Ok(PhaseTrace {
            t0,
            dt,
            phi: (0..n).map(|k| f(t0 + k as f64 * dt)).collect(),
        })
    }

    pub fn end(&self) -> f64 {
        self.t0 + (self.phi.len().max(1) - 1) as f64 * self.dt
    }
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_SAMPLE_STEP * (1.0 + 1e-12)) {
        return Err(invalid(
            "sample_step",
            format!("phase trace needs 0 < dt ≤ 5 fs, got {dt} s"),
        ));
    }
    Ok(())
}

pub fn phase_trace(a: &AlignmentSamples, medium: &MediumSpec) -> Result<PhaseTrace> {
    check_step(a.dt)?;
    medium.validate()?;
    let phi0 = medium.phi0();
    Ok(PhaseTrace {
        t0: a.t0,
        dt: a.dt,
        phi: a.values.iter().map(|&x| phi0 * (x - 1.0 / 3.0)).collect(),
    })
}

/// Probe power spectrum against wavenumber offset from the carrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpectrum {
    pub center_wavelength_nm: f64,
    /// Ascending, cm⁻¹; negative is red.
    pub offset_cm: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Incoherent for ProbeSpectrum {
    fn scale(&mut self, w: f64) {
        self.intensity.iter_mut().for_each(|x| *x *= w);
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.intensity.iter_mut().zip(&other.intensity) {
            *a += b;
        }
    }
}

impl ProbeSpectrum {
    pub fn center_wavenumber(&self) -> f64 {
        1e7 / self.center_wavelength_nm
    }

    pub fn wavelength_nm(&self, offset_cm: f64) -> f64 {
        1e7 / (self.center_wavenumber() + offset_cm)
    }

    pub fn wavelengths_nm(&self) -> Vec<f64> {
        self.offset_cm.iter().map(|&o| self.wavelength_nm(o)).collect()
    }

    pub fn energy(&self) -> f64 {
        self.intensity.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Outermost half-maximum crossings, linearly interpolated, in cm⁻¹.
    pub fn half_max_edges(&self) -> Option<(f64, f64)> {
        let half = 0.5 * self.max();
        if half <= 0.0 {
            return None;
        }
        let x = &self.offset_cm;
        let y = &self.intensity;
        let first = y.iter().position(|&v| v >= half)?;
        let last = y.iter().rposition(|&v| v >= half)?;
        let lo = if first == 0 {
            x[0]
        } else {
            let (x0, x1, y0, y1) = (x[first - 1], x[first], y[first - 1], y[first]);
            x0 + (half - y0) / (y1 - y0) * (x1 - x0)
        };
        let hi = if last + 1 == y.len() {
            x[last]
        } else {
            let (x0, x1, y0, y1) = (x[last], x[last + 1], y[last], y[last + 1]);
            x0 + (y0 - half) / (y0 - y1) * (x1 - x0)
        };
        Some((lo, hi))
    }

    pub fn fwhm_cm(&self) -> f64 {
        self.half_max_edges().map(|(a, b)| b - a).unwrap_or(0.0)
    }

    pub fn fwhm_nm(&self) -> f64 {
        self.half_max_edges()
            .map(|(a, b)| self.wavelength_nm(a) - self.wavelength_nm(b))
            .unwrap_or(0.0)
    }

    pub fn centroid_cm(&self) -> f64 {
        let e = self.energy();
        if e == 0.0 {
            return 0.0;
        }
        self.offset_cm
            .iter()
            .zip(&self.intensity)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / e
    }

    /// Intensity-weighted mean wavelength minus the carrier wavelength.
    pub fn centroid_shift_nm(&self) -> f64 {
        let e = self.energy();
        if e == 0.0 {
            return 0.0;
        }
        self.offset_cm
            .iter()
            .zip(&self.intensity)
            .map(|(&x, y)| self.wavelength_nm(x) * y)
            .sum::<f64>()
            / e
            - self.center_wavelength_nm
    }

    /// Energy with offsets in [lo, hi).
    pub fn band_energy(&self, lo_cm: f64, hi_cm: f64) -> f64 {
        self.offset_cm
            .iter()
            .zip(&self.intensity)
            .filter(|(&x, _)| x >= lo_cm && x < hi_cm)
            .map(|(_, y)| y)
            .sum()
    }
}

/// Gaussian probe times exp(iφ), Fourier transformed. The probe is centered
/// at `center`; its window must lie inside the phase trace.
pub fn modulated_probe_spectrum_at(
    probe: &ProbePulse,
    center: f64,
    phase: &PhaseTrace,
    grid: &MpmGrid,
) -> Result<ProbeSpectrum> {
    probe.validate()?;
    check_step(phase.dt)?;
    let half = grid.window_fwhm * probe.fwhm;
    let tol = 0.5 * phase.dt;
    if center - half < phase.t0 - tol || center + half > phase.end() + tol {
        return Err(invalid(
            "probe",
            format!(
                "probe window [{:e}, {:e}] s exceeds the phase trace [{:e}, {:e}] s",
                center - half,
                center + half,
                phase.t0,
                phase.end()
            ),
        ));
    }
    let first = ((center - half - phase.t0) / phase.dt).ceil().max(0.0) as usize;
    let last = (((center + half - phase.t0) / phase.dt).floor() as usize).min(phase.phi.len() - 1);
    let n = last + 1 - first;
    let len = (grid.padding.max(1) * n).next_power_of_two();
    let k = 2.0 * std::f64::consts::LN_2 / (probe.fwhm * probe.fwhm);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for (i, slot) in buf.iter_mut().take(n).enumerate() {
        let t = phase.t0 + (first + i) as f64 * phase.dt - center;
        *slot = C64::from_polar((-k * t * t).exp(), phase.phi[first + i]);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    // FFT bin f ↦ optical offset −f: a rising phase pulls the light red
    let df = 1.0 / (len as f64 * phase.dt * SPEED_OF_LIGHT_CM);
    let mut pairs: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let bin = if i < len / 2 { i as f64 } else { i as f64 - len as f64 };
            (-bin * df, z.norm_sqr())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ProbeSpectrum {
        center_wavelength_nm: probe.center_wavelength_nm,
        offset_cm: pairs.iter().map(|p| p.0).collect(),
        intensity: pairs.iter().map(|p| p.1).collect(),
    })
}

/// As [`modulated_probe_spectrum_at`], centered at `probe.delay`.
pub fn modulated_probe_spectrum(
    probe: &ProbePulse,
    phase: &PhaseTrace,
    grid: &MpmGrid,
) -> Result<ProbeSpectrum> {
    modulated_probe_spectrum_at(probe, probe.delay, phase, grid)
}

/// Sidebands grouped by order m = round(|offset| / Δ), both sides combined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderBand {
    pub order: u32,
    pub peak_count: usize,
    /// Spectral energy in the band relative to the whole spectrum.
    pub magnitude: f64,
    /// Energy-weighted mean |offset| in cm⁻¹.
    pub centroid_cm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub threshold: f64,
    pub delta_cm: f64,
    pub peak_count: usize,
    /// Bands that contain at least one counted peak.
    pub bands: Vec<OrderBand>,
    /// Relative energy of every order from 0 outwards.
    pub order_energy: Vec<f64>,
    /// Slope of band centroid against order.
    pub mean_spacing_cm: Option<f64>,
}

impl CascadeReport {
    pub fn order_magnitude(&self, m: u32) -> f64 {
        self.order_energy.get(m as usize).copied().unwrap_or(0.0)
    }
}

pub fn cascade_report(spectrum: &ProbeSpectrum, threshold: f64, delta_cm: f64) -> Result<CascadeReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    if !(delta_cm > 0.0) {
        return Err(invalid("delta", "order spacing must be positive"));
    }
    let y = &spectrum.intensity;
    let x = &spectrum.offset_cm;
    let cut = threshold * spectrum.max();
    let total = spectrum.energy();
    if total <= 0.0 {
        return Err(Error::Sampling("empty probe spectrum".into()));
    }
    let order_of = |x: f64| (x.abs() / delta_cm).round() as u32;

    let mut peaks = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= cut {
            peaks.push(i);
        }
    }

    let max_order = x.iter().map(|&v| order_of(v)).max().unwrap_or(0) as usize;
    let mut energy = vec![0.0; max_order + 1];
    let mut moment = vec![0.0; max_order + 1];
    for (&xv, &yv) in x.iter().zip(y) {
        let m = order_of(xv) as usize;
        energy[m] += yv;
        moment[m] += xv.abs() * yv;
    }
    let mut bands: Vec<OrderBand> = Vec::new();
    for &i in &peaks {
        let m = order_of(x[i]);
        match bands.iter_mut().find(|b| b.order == m) {
            Some(b) => b.peak_count += 1,
            None => bands.push(OrderBand {
                order: m,
                peak_count: 1,
                magnitude: energy[m as usize] / total,
                centroid_cm: moment[m as usize] / energy[m as usize],
            }),
        }
    }
    bands.sort_by_key(|b| b.order);

    let fit: Vec<(f64, f64)> = bands
        .iter()
        .filter(|b| b.order >= 1)
        .map(|b| (b.order as f64, b.centroid_cm))
        .collect();
    let mean_spacing_cm = match fit.len() {
        0 => None,
        1 => Some(fit[0].1 / fit[0].0),
        n => {
            let n = n as f64;
            let mx = fit.iter().map(|p| p.0).sum::<f64>() / n;
            let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = fit.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        }
    };
    Ok(CascadeReport {
        threshold,
        delta_cm,
        peak_count: peaks.len(),
        bands,
        order_energy: energy.iter().map(|e| e / total).collect(),
        mean_spacing_cm,
    })
}

/// Raman shift in cm⁻¹ of the strongest line of a weakly kicked thermal
/// ensemble, the natural spacing of cascade orders.
pub fn thermal_peak_shift(scenario: &Scenario) -> Result<(u32, f64)> {
    let train = PulseTrain::new(
        vec![crate::trains::Pulse {
            time: 0.0,
            strength: 0.05,
        }],
        "probe kick",
    )?;
    let power = scenario.observe(&train, 0.0, 1.0)?.coherence_power;
    let j = power
        .argmax()
        .ok_or_else(|| Error::Sampling("weak kick left no coherence".into()))?;
    Ok((j, scenario.mol().raman_shift(j)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BroadeningRow {
    /// Seconds after the first pulse.
    pub delay: f64,
    pub fwhm_nm: f64,
    pub fwhm_cm: f64,
    pub centroid_shift_nm: f64,
}

/// Probe spectra at each delay (after the train's first pulse), averaged
/// incoherently over the scenario's intensity profile when `averaged`.
pub fn probe_spectra(
    scenario: &Scenario,
    train: &PulseTrain,
    probe: &ProbePulse,
    medium: &MediumSpec,
    delays: &[f64],
    grid: &MpmGrid,
    averaged: bool,
) -> Result<Vec<ProbeSpectrum>> {
    probe.validate()?;
    medium.validate()?;
    check_step(grid.sample_step)?;
    let origin = train.first_time().unwrap_or(0.0);
    let half_n = (grid.window_fwhm * probe.fwhm / grid.sample_step).ceil() as usize;
    let run = |s: f64| -> Result<SpectraSet> {
        let plan = SnapshotPlan {
            after_each_pulse: true,
            probe_times: Vec::new(),
        };
        let traj = scenario.trajectory(train, &plan, s)?;
        let trace = PiecewiseAlignment::new(scenario.initial(), &traj, scenario.mol());
        let spectra = delays
            .par_iter()
            .map(|&d| {
                let center = origin + d;
                let t0 = center - half_n as f64 * grid.sample_step;
                let samples = trace.sample(t0, grid.sample_step, 2 * half_n + 1);
                let phase = phase_trace(&samples, medium)?;
                modulated_probe_spectrum_at(probe, center, &phase, grid)
            })
            .collect::<Result<_>>()?;
        Ok(SpectraSet(spectra))
    };
    let set = if averaged {
        crate::ensemble::intensity_average(&scenario.settings.profile, run)?
    } else {
        run(1.0)?
    };
    Ok(set.0)
}

struct SpectraSet(Vec<ProbeSpectrum>);

impl Incoherent for SpectraSet {
    fn scale(&mut self, w: f64) {
        self.0.iter_mut().for_each(|s| s.scale(w));
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b);
        }
    }
}

pub fn broadening_scan(
    scenario: &Scenario,
    train: &PulseTrain,
    probe: &ProbePulse,
    medium: &MediumSpec,
    delays: &[f64],
    averaged: bool,
) -> Result<Vec<BroadeningRow>> {
    let spectra = probe_spectra(scenario, train, probe, medium, delays, &MpmGrid::default(), averaged)?;
    Ok(delays
        .iter()
        .zip(spectra)
        .map(|(&delay, s)| BroadeningRow {
            delay,
            fwhm_nm: s.fwhm_nm(),
            fwhm_cm: s.fwhm_cm(),
            centroid_shift_nm: s.centroid_shift_nm(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, dt: f64) -> PhaseTrace {
        PhaseTrace::from_fn(-(n as f64) / 2.0 * dt, dt, n + 1, |_| 0.0).unwrap()
    }

    #[test]
    fn undersampled_trace_rejected() {
        let a = AlignmentSamples {
            t0: 0.0,
            dt: 6e-15,
            values: vec![1.0 / 3.0; 10],
        };
        assert!(phase_trace(&a, &MediumSpec::default()).is_err());
    }

    #[test]
    fn isotropic_gives_zero_phase_and_linear_in_pressure() {
        let a = AlignmentSamples {
            t0: 0.0,
            dt: 2e-15,
            values: vec![1.0 / 3.0, 0.4, 0.3],
        };
        let m1 = MediumSpec {
            phi0_per_atm: 10.0,
            pressure_atm: 1.0,
        };
        let m2 = MediumSpec {
            pressure_atm: 2.0,
            ..m1
        };
        let p1 = phase_trace(&a, &m1).unwrap();
        let p2 = phase_trace(&a, &m2).unwrap();
        assert_eq!(p1.phi[0], 0.0);
        for (x, y) in p1.phi.iter().zip(&p2.phi) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn transform_limited_width() {
        let probe = ProbePulse::default();
        let phase = flat(1300, 2e-15);
        let s = modulated_probe_spectrum(&probe, &phase, &MpmGrid::default()).unwrap();
        let expect = probe.transform_limited_fwhm_cm();
        assert!((s.fwhm_cm() / expect - 1.0).abs() < 0.01, "{} vs {expect}", s.fwhm_cm());
        assert!(s.centroid_cm().abs() < 1e-9 * expect);
    }

    #[test]
    fn window_outside_trace_rejected() {
        let probe = ProbePulse {
            delay: 1e-12,
            ..ProbePulse::default()
        };
        let phase = flat(1300, 2e-15);
        assert!(modulated_probe_spectrum(&probe, &phase, &MpmGrid::default()).is_err());
    }

    #[test]
    fn linear_phase_ramp_shifts_red() {
        let probe = ProbePulse::default();
        let rate = 2.0e13; // rad/s
        let dt = 2e-15;
        let phase = PhaseTrace::from_fn(-1.3e-12, dt, 1301, |t| rate * t).unwrap();
        let s = modulated_probe_spectrum(&probe, &phase, &MpmGrid::default()).unwrap();
        let expect = -rate / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM);
        assert!((s.centroid_cm() - expect).abs() < 0.01 * expect.abs());
        assert!(s.centroid_shift_nm() > 0.0);
    }

    #[test]
    fn oxygen_thermal_peak() {
        let sc = Scenario::oxygen().unwrap();
        let (j, shift) = thermal_peak_shift(&sc).unwrap();
        assert_eq!(j, 11);
        assert!((shift - sc.mol().raman_shift(11)).abs() < 1e-12);
    }

    #[test]
    fn single_gaussian_cascade() {
        let probe = ProbePulse::default();
        let s = modulated_probe_spectrum(&probe, &flat(1300, 2e-15), &MpmGrid::default()).unwrap();
        let r = cascade_report(&s, 0.01, 60.0).unwrap();
        assert_eq!(r.peak_count, 1);
        assert_eq!(r.bands.len(), 1);
        assert_eq!(r.bands[0].order, 0);
        assert!(r.mean_spacing_cm.is_none());
        assert!(cascade_report(&s, 0.0, 60.0).is_err());
    }
}
