//! Molecular constants and rotational level structure.

use serde::{Deserialize, Serialize};

use crate::constants::{PLANCK, SPEED_OF_LIGHT_CM};
use crate::error::{Error, Result};

/// Which rotational quantum numbers are allowed by nuclear spin statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
    Both,
}

/// Parity of a single J ladder. Linearly polarized kicks couple J to J ± 2,
/// so every basis block lives on one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JParity {
    Even,
    Odd,
}

impl JParity {
    pub fn of(j: u32) -> Self {
        if j.is_multiple_of(2) {
            JParity::Even
        } else {
            JParity::Odd
        }
    }

    /// Smallest J of this parity with J ≥ |M|.
    pub fn first_j(self, m_abs: u32) -> u32 {
        if JParity::of(m_abs) == self {
            m_abs
        } else {
            m_abs + 1
        }
    }
}

impl Parity {
    pub fn allows(self, j: u32) -> bool {
        match self {
            Parity::Both => true,
            Parity::Odd => j % 2 == 1,
            Parity::Even => j.is_multiple_of(2),
        }
    }

    pub fn ladders(self) -> &'static [JParity] {
        match self {
            Parity::Odd => &[JParity::Odd],
            Parity::Even => &[JParity::Even],
            Parity::Both => &[JParity::Even, JParity::Odd],
        }
    }
}

/// Rotational constants of a linear molecule.
///
/// `b_cm` and `d_cm` are in cm⁻¹; `delta_alpha` is the polarizability
/// anisotropy in C·m²·V⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub name: String,
    pub b_cm: f64,
    pub d_cm: f64,
    pub delta_alpha: f64,
    pub parity: Parity,
}

impl MoleculeSpec {
    pub const O2_B: f64 = 1.4377;
    pub const O2_D: f64 = 4.84e-6;
    pub const O2_DELTA_ALPHA: f64 = 1.14e-40;

    pub fn new(
        name: impl Into<String>,
        b_cm: f64,
        d_cm: f64,
        delta_alpha: f64,
        parity: Parity,
    ) -> Result<Self> {
        let mol = MoleculeSpec {
            name: name.into(),
            b_cm,
            d_cm,
            delta_alpha,
            parity,
        };
        mol.validate()?;
        Ok(mol)
    }

    /// ¹⁶O₂ in its ground vibrational state: odd J only.
    pub fn oxygen() -> Self {
        MoleculeSpec {
            name: "O2".into(),
            b_cm: Self::O2_B,
            d_cm: Self::O2_D,
            delta_alpha: Self::O2_DELTA_ALPHA,
            parity: Parity::Odd,
        }
    }

    /// Same molecule with the centrifugal constant switched off.
    pub fn rigid(&self) -> Self {
        MoleculeSpec {
            d_cm: 0.0,
            name: format!("{} (rigid)", self.name),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_cm.is_finite() && self.b_cm > 0.0) {
            return Err(Error::InvalidMolecule(format!(
                "rotational constant B must be positive, got {}",
                self.b_cm
            )));
        }
        if !(self.d_cm.is_finite() && self.d_cm >= 0.0) {
            return Err(Error::InvalidMolecule(format!(
                "centrifugal constant D must be non-negative, got {}",
                self.d_cm
            )));
        }
        if !(self.delta_alpha.is_finite() && self.delta_alpha >= 0.0) {
            return Err(Error::InvalidMolecule(format!(
                "polarizability anisotropy must be non-negative, got {}",
                self.delta_alpha
            )));
        }
        if self.d_cm > 1e-3 * self.b_cm {
            log::warn!(
                "{}: D = {} cm⁻¹ is not small compared to B = {} cm⁻¹",
                self.name,
                self.d_cm,
                self.b_cm
            );
        }
        Ok(())
    }

    /// Rigid-rotor revival time 1/(2cB) in seconds.
    pub fn revival_time(&self) -> f64 {
        1.0 / (2.0 * SPEED_OF_LIGHT_CM * self.b_cm)
    }

    /// E_J / hc in cm⁻¹.
    pub fn energy(&self, j: u32) -> f64 {
        let x = j as f64 * (j as f64 + 1.0);
        self.b_cm * x - self.d_cm * x * x
    }

    /// E_J in joules.
    pub fn energy_joule(&self, j: u32) -> f64 {
        PLANCK * SPEED_OF_LIGHT_CM * self.energy(j)
    }

    /// Signed-integer entry point that rejects negative J.
    pub fn rotational_energy(&self, j: i64) -> Result<f64> {
        Ok(self.energy(check_j(j)?))
    }

    /// Spacing (E_{J+2} − E_J)/hc in cm⁻¹ of the S-branch transition out of J.
    pub fn raman_shift(&self, j: u32) -> f64 {
        let jf = j as f64;
        let lo = jf * (jf + 1.0);
        let hi = (jf + 2.0) * (jf + 3.0);
        self.b_cm * (4.0 * jf + 6.0) - self.d_cm * (hi * hi - lo * lo)
    }

    /// Classical rotation period τ_J = 2h / (E_{J+2} − E_J) in seconds.
    pub fn classical_period(&self, j: u32) -> f64 {
        2.0 / (SPEED_OF_LIGHT_CM * self.raman_shift(j))
    }

    /// Allowed J values in `0..=j_max`.
    pub fn allowed_j(&self, j_max: u32) -> impl Iterator<Item = u32> + '_ {
        (0..=j_max).filter(move |&j| self.parity.allows(j))
    }
}

impl Default for MoleculeSpec {
    fn default() -> Self {
        Self::oxygen()
    }
}

pub(crate) fn check_j(j: i64) -> Result<u32> {
    u32::try_from(j).map_err(|_| Error::InvalidQuantumNumber(format!("J must be ≥ 0, got {j}")))
}
