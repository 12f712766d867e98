//! State-resolved rotational Raman spectra of a narrowband probe and their
//! two-dimensional extension over a scanned train parameter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::molecule::MoleculeSpec;
use crate::observables::{CoherenceVector, JSeries};
use crate::scenario::Scenario;
use crate::trains::PulseTrain;

const FOUR_LN2: f64 = 4.0 * std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeSide {
    /// Red-shifted lines, positive wavelength shift.
    #[default]
    Stokes,
    AntiStokes,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub center_wavelength_nm: f64,
    pub fwhm_wavelength_nm: f64,
    pub side: ProbeSide,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            center_wavelength_nm: 400.8,
            fwhm_wavelength_nm: 0.15,
            side: ProbeSide::Stokes,
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength_nm.is_finite() && self.center_wavelength_nm > 0.0) {
            return Err(invalid("center_wavelength_nm", "must be positive"));
        }
        if !(self.fwhm_wavelength_nm.is_finite() && self.fwhm_wavelength_nm > 0.0) {
            return Err(invalid("fwhm_wavelength_nm", "must be positive"));
        }
        Ok(())
    }

    /// λ₀² Δν in nm for a shift Δν in cm⁻¹.
    pub fn shift_for_wavenumber(&self, delta_cm: f64) -> f64 {
        let lambda_cm = self.center_wavelength_nm * 1e-7;
        lambda_cm * lambda_cm * delta_cm * 1e7
    }
}

/// Wavelength shift of the J → J+2 line: positive on the Stokes side,
/// negative for an anti-Stokes-only probe.
pub fn wavelength_shift_of(j: u32, probe: &ProbeSpec, mol: &MoleculeSpec) -> f64 {
    let s = probe.shift_for_wavenumber(mol.raman_shift(j));
    match probe.side {
        ProbeSide::AntiStokes => -s,
        _ => s,
    }
}

fn line_positions(j: u32, probe: &ProbeSpec, mol: &MoleculeSpec) -> Vec<f64> {
    let s = probe.shift_for_wavenumber(mol.raman_shift(j));
    match probe.side {
        ProbeSide::Stokes => vec![s],
        ProbeSide::AntiStokes => vec![-s],
        ProbeSide::Both => vec![-s, s],
    }
}

/// Uniform wavelength-shift axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub start_nm: f64,
    pub step_nm: f64,
    pub len: usize,
}

impl SpectrumGrid {
    pub const DEFAULT_STEP_NM: f64 = 0.01;

    /// Covers every line up to J = `j_top` plus a few linewidths.
    pub fn covering(mol: &MoleculeSpec, probe: &ProbeSpec, j_top: u32) -> Self {
        let reach = probe.shift_for_wavenumber(mol.raman_shift(j_top)) + 4.0 * probe.fwhm_wavelength_nm;
        let step = Self::DEFAULT_STEP_NM;
        let half = (reach / step).ceil() as usize;
        let (start_nm, len) = match probe.side {
            ProbeSide::Stokes => (0.0, half + 1),
            ProbeSide::AntiStokes => (-(half as f64) * step, half + 1),
            ProbeSide::Both => (-(half as f64) * step, 2 * half + 1),
        };
        SpectrumGrid {
            start_nm,
            step_nm: step,
            len,
        }
    }

    /// Same span resampled at `step_nm`.
    pub fn with_step(&self, step_nm: f64) -> Self {
        let span = self.step_nm * self.len.saturating_sub(1) as f64;
        SpectrumGrid {
            start_nm: self.start_nm,
            step_nm,
            len: (span / step_nm - 1e-9).ceil() as usize + 1,
        }
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.len)
            .map(|k| self.start_nm + k as f64 * self.step_nm)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanLine {
    pub j: u32,
    pub shift_nm: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanSpectrum {
    pub shift_nm: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Lower J of the closest line at each grid point.
    pub nearest_j: Vec<Option<u32>>,
    pub lines: Vec<RamanLine>,
}

impl RamanSpectrum {
    pub fn tallest_line(&self) -> Option<&RamanLine> {
        self.lines
            .iter()
            .filter(|l| l.height > 0.0)
            .max_by(|a, b| a.height.total_cmp(&b.height).then(b.j.cmp(&a.j)))
    }

    /// Highest J whose line reaches `threshold` times the tallest one.
    pub fn top_j(&self, threshold: f64) -> Option<u32> {
        let max = self.tallest_line()?.height;
        self.lines
            .iter()
            .filter(|l| l.height >= threshold * max)
            .map(|l| l.j)
            .max()
    }

    /// Σ intensity × step.
    pub fn area(&self) -> f64 {
        match self.shift_nm.as_slice() {
            [a, b, ..] => self.intensity.iter().sum::<f64>() * (b - a),
            _ => 0.0,
        }
    }
}

/// Area of a unit-height Gaussian line of the probe's width.
pub fn line_area(probe: &ProbeSpec) -> f64 {
    probe.fwhm_wavelength_nm * (std::f64::consts::PI / FOUR_LN2).sqrt()
}

pub fn synth_spectrum(
    cv: &CoherenceVector,
    probe: &ProbeSpec,
    mol: &MoleculeSpec,
    grid: &SpectrumGrid,
) -> Result<RamanSpectrum> {
    synth_from_power(&cv.power(), probe, mol, grid)
}

/// Gaussian lines of height |ρ̃_J|² at each J's shift.
pub fn synth_from_power(
    power: &JSeries,
    probe: &ProbeSpec,
    mol: &MoleculeSpec,
    grid: &SpectrumGrid,
) -> Result<RamanSpectrum> {
    probe.validate()?;
    if !(grid.step_nm > 0.0) || grid.len == 0 {
        return Err(invalid("grid", "needs a positive step and at least one point"));
    }
    let axis = grid.axis();
    let mut lines = Vec::new();
    for (j, h) in power.iter().filter(|&(j, _)| mol.parity.allows(j)) {
        for pos in line_positions(j, probe, mol) {
            lines.push(RamanLine {
                j,
                shift_nm: pos,
                height: h,
            });
        }
    }
    let w = probe.fwhm_wavelength_nm;
    let intensity = axis
        .iter()
        .map(|&x| {
            lines
                .iter()
                .filter(|l| l.height > 0.0)
                .map(|l| {
                    let d = (x - l.shift_nm) / w;
                    l.height * (-FOUR_LN2 * d * d).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let nearest_j = axis
        .iter()
        .map(|&x| {
            lines
                .iter()
                .min_by(|a, b| (a.shift_nm - x).abs().total_cmp(&(b.shift_nm - x).abs()))
                .map(|l| l.j)
        })
        .collect();
    Ok(RamanSpectrum {
        shift_nm: axis,
        intensity,
        nearest_j,
        lines,
    })
}

/// Rows are scan points, columns the wavelength-shift axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramGrid {
    pub scan_axis: Vec<f64>,
    pub shift_axis: Vec<f64>,
    pub intensity: Vec<Vec<f64>>,
    /// |ρ̃_J|² behind each row.
    pub line_power: Vec<JSeries>,
}

impl SpectrogramGrid {
    pub fn integrated(&self, row: usize) -> f64 {
        self.line_power[row].sum_from(0)
    }

    /// Scan-axis value at which |ρ̃_J|² peaks.
    pub fn argmax_for_j(&self, j: u32) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for (k, p) in self.line_power.iter().enumerate() {
            let v = p.get(j);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| self.scan_axis[k])
    }
}

/// One spectrum per scan value, probed `probe_delay` after the last pulse.
pub fn spectrogram<F>(
    scan_axis: &[f64],
    build: F,
    scenario: &Scenario,
    probe: &ProbeSpec,
    grid: &SpectrumGrid,
    averaged: bool,
) -> Result<SpectrogramGrid>
where
    F: Fn(f64) -> Result<PulseTrain> + Sync,
{
    if scan_axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("scan", "axis must be strictly ascending"));
    }
    let powers: Vec<JSeries> = scan_axis
        .par_iter()
        .map(|&x| {
            let train = build(x)?;
            let obs = scenario.observe_with(&train, scenario.probe_time(&train), averaged)?;
            Ok(obs.coherence_power)
        })
        .collect::<Result<_>>()?;
    let intensity = powers
        .iter()
        .map(|p| Ok(synth_from_power(p, probe, scenario.mol(), grid)?.intensity))
        .collect::<Result<_>>()?;
    Ok(SpectrogramGrid {
        scan_axis: scan_axis.to_vec(),
        shift_axis: grid.axis(),
        intensity,
        line_power: powers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_relative_eq;

    #[test]
    fn shift_values() {
        let mol = MoleculeSpec::oxygen();
        let probe = ProbeSpec::default();
        assert_relative_eq!(wavelength_shift_of(1, &probe, &mol), 0.2310, epsilon = 1e-4);
        assert_relative_eq!(wavelength_shift_of(21, &probe, &mol), 2.072, epsilon = 1e-3);
        assert_eq!(probe.shift_for_wavenumber(0.0), 0.0);
        let anti = ProbeSpec {
            side: ProbeSide::AntiStokes,
            ..probe
        };
        assert!(wavelength_shift_of(1, &anti, &mol) < 0.0);
    }

    #[test]
    fn adjacent_odd_lines_resolved() {
        let mol = MoleculeSpec::oxygen();
        let probe = ProbeSpec::default();
        for j in (1..40).step_by(2) {
            let gap = wavelength_shift_of(j + 2, &probe, &mol) - wavelength_shift_of(j, &probe, &mol);
            assert!(gap > probe.fwhm_wavelength_nm, "J = {j}: {gap}");
        }
    }

    #[test]
    fn single_line_and_area() {
        let mol = MoleculeSpec::oxygen();
        let probe = ProbeSpec::default();
        let mut cv = CoherenceVector::default();
        cv.entries.insert(9, C64::new(0.3, 0.4));
        let grid = SpectrumGrid::covering(&mol, &probe, 41);
        let s = synth_spectrum(&cv, &probe, &mol, &grid).unwrap();
        let (k, &peak) = s
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((s.shift_nm[k] - wavelength_shift_of(9, &probe, &mol)).abs() <= grid.step_nm);
        assert!(peak <= 0.25 + 1e-12 && peak > 0.24);
        assert_relative_eq!(s.area(), 0.25 * line_area(&probe), max_relative = 1e-6);
        assert_eq!(s.nearest_j[k], Some(9));
        assert_eq!(s.tallest_line().unwrap().j, 9);
        assert!(s.intensity.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn both_sides_mirror() {
        let mol = MoleculeSpec::oxygen();
        let probe = ProbeSpec {
            side: ProbeSide::Both,
            ..ProbeSpec::default()
        };
        let mut cv = CoherenceVector::default();
        cv.entries.insert(5, C64::new(1.0, 0.0));
        let grid = SpectrumGrid::covering(&mol, &probe, 21);
        let s = synth_spectrum(&cv, &probe, &mol, &grid).unwrap();
        let n = s.intensity.len();
        for k in 0..n {
            assert!((s.intensity[k] - s.intensity[n - 1 - k]).abs() < 1e-9);
        }
    }

    #[test]
    fn unsorted_scan_rejected() {
        let sc = Scenario::oxygen().unwrap();
        let probe = ProbeSpec::default();
        let grid = SpectrumGrid::covering(sc.mol(), &probe, 21);
        let r = spectrogram(
            &[2.0, 1.0],
            |_| Ok(PulseTrain::empty()),
            &sc,
            &probe,
            &grid,
            false,
        );
        assert!(r.is_err());
    }
}
