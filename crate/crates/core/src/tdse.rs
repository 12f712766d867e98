//! Finite-duration reference propagation.
//!
//! Integrates the time-dependent Schrödinger equation for one basis block
//! through a Gaussian pulse with an adaptive Dormand–Prince 5(4) scheme. The
//! impulsive kick is the production path; this integrator exists to check it.
//!
//! The equation is solved in the interaction picture with respect to the free
//! rotor, `ḃ = i g(t) Ã(t) b`, where `g(t) = Δα ℰ²(t) / 4ħ` and
//! `Ã_{jk}(t) = ⟨j|cos²θ|k⟩ e^{i(ω_j − ω_k)(t − t_c)}`, so outside the pulse the
//! right-hand side vanishes and the step size grows freely.

use serde::{Deserialize, Serialize};

use crate::constants::{angular_frequency, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{invalid, Error, Result};
use crate::molecule::MoleculeSpec;
use crate::rotor::{cos2_matrix, free_phase, RotorBlockState};
use crate::C64;

const FOUR_LN2: f64 = 4.0 * std::f64::consts::LN_2;

/// Gaussian intensity envelope of a single pump pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    /// Intensity FWHM in seconds.
    pub fwhm: f64,
    /// Peak intensity in W/cm².
    pub peak_intensity: f64,
    pub center_time: f64,
}

impl PulseEnvelope {
    pub fn new(fwhm: f64, peak_intensity: f64, center_time: f64) -> Result<Self> {
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(invalid("fwhm", format!("must be positive, got {fwhm}")));
        }
        if !(peak_intensity.is_finite() && peak_intensity >= 0.0) {
            return Err(invalid(
                "peak_intensity",
                format!("must be non-negative, got {peak_intensity}"),
            ));
        }
        Ok(PulseEnvelope {
            fwhm,
            peak_intensity,
            center_time,
        })
    }

    /// Envelope that delivers kick strength `strength` to `mol`.
    pub fn with_kick_strength(
        strength: f64,
        fwhm: f64,
        center_time: f64,
        mol: &MoleculeSpec,
    ) -> Result<Self> {
        let unit = PulseEnvelope::new(fwhm, 1.0, center_time)?.kick_strength(mol);
        if unit == 0.0 {
            return Err(invalid("delta_alpha", "zero anisotropy cannot produce a kick"));
        }
        PulseEnvelope::new(fwhm, strength / unit, center_time)
    }

    /// ℰ²(t) in V²/m² for a linearly polarized field, I = ½ c ε₀ ℰ².
    pub fn field_squared(&self, t: f64) -> f64 {
        let x = (t - self.center_time) / self.fwhm;
        2.0 * self.peak_intensity * 1e4 / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY)
            * (-FOUR_LN2 * x * x).exp()
    }

    /// ∫ℰ²(t) dt over the whole Gaussian.
    pub fn field_squared_integral(&self) -> f64 {
        2.0 * self.peak_intensity * 1e4 / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY)
            * self.fwhm
            * (std::f64::consts::PI / FOUR_LN2).sqrt()
    }

    /// Coupling rate g(t) = Δα ℰ²(t) / 4ħ in rad/s.
    pub fn coupling(&self, t: f64, mol: &MoleculeSpec) -> f64 {
        mol.delta_alpha * self.field_squared(t) / (4.0 * HBAR)
    }

    /// P = Δα/(4ħ) ∫ℰ² dt.
    pub fn kick_strength(&self, mol: &MoleculeSpec) -> f64 {
        mol.delta_alpha * self.field_squared_integral() / (4.0 * HBAR)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdseOptions {
    /// Integration runs over `center ± half_window_fwhm · fwhm`.
    pub half_window_fwhm: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Smallest accepted step as a fraction of the pulse FWHM.
    pub min_step_fwhm: f64,
    pub max_steps: usize,
}

impl Default for TdseOptions {
    fn default() -> Self {
        TdseOptions {
            half_window_fwhm: 6.0,
            rtol: 1e-11,
            atol: 1e-13,
            min_step_fwhm: 1e-9,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TdseOutcome {
    /// Schrödinger-picture state at `t_end`.
    pub state: RotorBlockState,
    pub t_start: f64,
    pub t_end: f64,
    /// ∫ g(t) dt accumulated along the accepted steps.
    pub coupling_integral: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rhs<'a> {
    pulse: &'a PulseEnvelope,
    mol: &'a MoleculeSpec,
    diagonal: Vec<f64>,
    off: Vec<f64>,
    /// ω_{k+1} − ω_k in rad/s.
    gaps: Vec<f64>,
}

impl Rhs<'_> {
    /// Writes ḃ into `out`; the last slot carries the coupling integrand.
    fn eval(&self, t: f64, b: &[C64], out: &mut [C64]) {
        let n = self.diagonal.len();
        let g = self.pulse.coupling(t, self.mol);
        out[n] = C64::new(g, 0.0);
        if g == 0.0 {
            out[..n].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            return;
        }
        let s = t - self.pulse.center_time;
        for k in 0..n {
            out[k] = b[k] * self.diagonal[k];
        }
        for k in 0..n.saturating_sub(1) {
            let phase = C64::from_polar(1.0, -self.gaps[k] * s);
            out[k] += self.off[k] * phase * b[k + 1];
            out[k + 1] += self.off[k] * phase.conj() * b[k];
        }
        let ig = C64::new(0.0, g);
        for z in out[..n].iter_mut() {
            *z *= ig;
        }
    }
}

/// Propagates `state`, given at `center − w`, through `pulse` to `center + w`.
pub fn tdse_reference_propagate(
    state: &RotorBlockState,
    pulse: &PulseEnvelope,
    mol: &MoleculeSpec,
    opts: &TdseOptions,
) -> Result<TdseOutcome> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(invalid("state", format!("must be normalized, |ψ|² = {norm}")));
    }
    let block = state.block;
    let js = block.j_list();
    let energies: Vec<f64> = js.iter().map(|&j| mol.energy(j)).collect();
    let cos2 = cos2_matrix(&block);
    let rhs = Rhs {
        pulse,
        mol,
        gaps: energies
            .windows(2)
            .map(|w| angular_frequency(w[1] - w[0]))
            .collect(),
        diagonal: cos2.diagonal,
        off: cos2.off,
    };

    let half = opts.half_window_fwhm * pulse.fwhm;
    let t_start = pulse.center_time - half;
    let t_end = pulse.center_time + half;
    let n = js.len();

    // interaction picture relative to the pulse center: b = e^{iE(t − t_c)} c
    let mut y: Vec<C64> = state
        .amplitudes
        .iter()
        .zip(&energies)
        .map(|(c, &e)| c * free_phase(e, half))
        .collect();
    y.push(C64::new(0.0, 0.0));

    let mut k = vec![vec![C64::new(0.0, 0.0); n + 1]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n + 1];
    let mut y5 = vec![C64::new(0.0, 0.0); n + 1];
    let h_min = opts.min_step_fwhm * pulse.fwhm;
    let mut h = 0.01 * pulse.fwhm;
    let mut t = t_start;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    rhs.eval(t, &y, &mut k[0]);
    while t < t_end {
        if accepted + rejected > opts.max_steps {
            return Err(Error::IntegrationFailure { time: t, step: h });
        }
        h = h.min(t_end - t);
        for s in 1..7 {
            for i in 0..=n {
                let mut acc = y[i];
                for (r, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += k[r][i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            rhs.eval(t + C[s] * h, &stage, &mut k[s]);
        }
        let mut err_sq = 0.0;
        for i in 0..=n {
            let mut hi = y[i];
            let mut lo = y[i];
            for s in 0..7 {
                hi += k[s][i] * (h * B5[s]);
                lo += k[s][i] * (h * B4[s]);
            }
            y5[i] = hi;
            let scale = opts.atol + opts.rtol * y[i].norm().max(hi.norm());
            err_sq += ((hi - lo).norm() / scale).powi(2);
        }
        let err = (err_sq / (n + 1) as f64).sqrt();
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y5);
            // FSAL: the last stage is f(t + h, y5)
            k.swap(0, 6);
            accepted += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(Error::IntegrationFailure { time: t, step: h });
            }
        }
    }

    let coupling_integral = y[n].re;
    // back to the Schrödinger picture: c(t_end) = e^{−iE(t_end − t_c)} b
    let amplitudes = y[..n]
        .iter()
        .zip(&energies)
        .map(|(b, &e)| b * free_phase(e, half))
        .collect();
    Ok(TdseOutcome {
        state: RotorBlockState { block, amplitudes },
        t_start,
        t_end,
        coupling_integral,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// The impulsive counterpart of [`tdse_reference_propagate`]: free rotation to
/// the pulse center, a kick of the pulse's strength, free rotation to the end.
pub fn impulsive_propagate(
    state: &RotorBlockState,
    pulse: &PulseEnvelope,
    mol: &MoleculeSpec,
    opts: &TdseOptions,
) -> RotorBlockState {
    let half = opts.half_window_fwhm * pulse.fwhm;
    let generator = crate::rotor::KickGenerator::new(state.block);
    let mut out = state.clone();
    out.free(mol, half);
    out.kick(&generator, pulse.kick_strength(mol));
    out.free(mol, half);
    out
}
