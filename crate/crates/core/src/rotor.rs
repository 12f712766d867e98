//! Angular-momentum basis blocks, cos²θ matrix elements, and the two
//! elementary propagators: the impulsive kick and free rotation.
//!
//! A linearly polarized pulse conserves M and couples J only to J ± 2, so the
//! Hilbert space splits into independent blocks labelled by (M, ladder parity).
//! Each block is truncated at `j_max`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::constants::angular_frequency;
use crate::error::{Error, Result};
use crate::molecule::{JParity, MoleculeSpec};
use crate::C64;

/// One (M, parity) block of the rotor basis truncated at `j_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisBlock {
    pub m: i32,
    pub parity: JParity,
    pub j_max: u32,
}

impl BasisBlock {
    pub fn new(m: i32, parity: JParity, j_max: u32) -> Result<Self> {
        let block = BasisBlock { m, parity, j_max };
        if block.first_j() > j_max {
            return Err(Error::InvalidQuantumNumber(format!(
                "block M = {m} ({parity:?}) is empty below J_max = {j_max}"
            )));
        }
        Ok(block)
    }

    pub fn m_abs(&self) -> u32 {
        self.m.unsigned_abs()
    }

    pub fn first_j(&self) -> u32 {
        self.parity.first_j(self.m_abs())
    }

    /// Largest J actually present (j_max rounded down to the ladder parity).
    pub fn last_j(&self) -> u32 {
        if JParity::of(self.j_max) == self.parity {
            self.j_max
        } else {
            self.j_max - 1
        }
    }

    pub fn len(&self) -> usize {
        ((self.last_j() - self.first_j()) / 2 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn j_list(&self) -> Vec<u32> {
        (self.first_j()..=self.last_j()).step_by(2).collect()
    }

    pub fn j_at(&self, index: usize) -> u32 {
        self.first_j() + 2 * index as u32
    }

    pub fn index_of(&self, j: u32) -> Option<usize> {
        if j < self.first_j() || j > self.last_j() || JParity::of(j) != self.parity {
            None
        } else {
            Some(((j - self.first_j()) / 2) as usize)
        }
    }

    /// Cache key: the cos²θ block only depends on M².
    fn key(&self) -> (u32, JParity, u32) {
        (self.m_abs(), self.parity, self.last_j())
    }
}

/// ⟨J,M|cos²θ|J,M⟩.
pub fn cos2_diagonal(j: u32, m: i32) -> f64 {
    let jf = j as f64;
    let m2 = (m as f64).powi(2);
    1.0 / 3.0 + 2.0 / 3.0 * (jf * (jf + 1.0) - 3.0 * m2) / ((2.0 * jf - 1.0) * (2.0 * jf + 3.0))
}

/// ⟨J+2,M|cos²θ|J,M⟩.
pub fn cos2_offdiagonal(j: u32, m: i32) -> f64 {
    let jf = j as f64;
    let m2 = (m as f64).powi(2);
    let num = (((jf + 1.0).powi(2) - m2) * ((jf + 2.0).powi(2) - m2)).max(0.0);
    num.sqrt() / ((2.0 * jf + 3.0) * ((2.0 * jf + 1.0) * (2.0 * jf + 5.0)).sqrt())
}

/// cos²θ restricted to a block: symmetric tridiagonal in the block index.
#[derive(Clone, Debug, PartialEq)]
pub struct Cos2Block {
    pub diagonal: Vec<f64>,
    /// `off[k]` couples index k and k + 1.
    pub off: Vec<f64>,
}

impl Cos2Block {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diagonal.len();
        let mut a = DMatrix::zeros(n, n);
        for (k, &d) in self.diagonal.iter().enumerate() {
            a[(k, k)] = d;
        }
        for (k, &o) in self.off.iter().enumerate() {
            a[(k, k + 1)] = o;
            a[(k + 1, k)] = o;
        }
        a
    }

    /// ⟨ψ|cos²θ|ψ⟩ for amplitudes aligned with the block.
    pub fn expectation(&self, c: &[C64]) -> f64 {
        let mut acc = 0.0;
        for (k, &d) in self.diagonal.iter().enumerate() {
            acc += d * c[k].norm_sqr();
        }
        for (k, &o) in self.off.iter().enumerate() {
            acc += 2.0 * o * (c[k].conj() * c[k + 1]).re;
        }
        acc
    }
}

pub fn cos2_matrix(block: &BasisBlock) -> Cos2Block {
    let js = block.j_list();
    let diagonal = js.iter().map(|&j| cos2_diagonal(j, block.m)).collect();
    let off = js[..js.len() - 1]
        .iter()
        .map(|&j| cos2_offdiagonal(j, block.m))
        .collect();
    Cos2Block { diagonal, off }
}

/// Spectral factorization of cos²θ on one block. Kicks of any strength are
/// applied as `V · diag(e^{iPλ}) · Vᵀ`.
#[derive(Clone, Debug)]
pub struct KickGenerator {
    pub block: BasisBlock,
    pub cos2: Cos2Block,
    eigenvalues: Vec<f64>,
    /// Row-major `n × n`; column k is the k-th eigenvector.
    vectors: Vec<f64>,
    /// Row-major transpose of `vectors`.
    vectors_t: Vec<f64>,
}

impl KickGenerator {
    pub fn new(block: BasisBlock) -> Self {
        let cos2 = cos2_matrix(&block);
        let n = cos2.diagonal.len();
        let eig = SymmetricEigen::new(cos2.to_dense());
        let mut vectors = vec![0.0; n * n];
        let mut vectors_t = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                vectors[i * n + k] = eig.eigenvectors[(i, k)];
                vectors_t[k * n + i] = eig.eigenvectors[(i, k)];
            }
        }
        KickGenerator {
            block,
            cos2,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            vectors,
            vectors_t,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// In-place `c ← exp(iP cos²θ) c`.
    pub fn apply(&self, strength: f64, c: &mut [C64]) {
        let n = self.dim();
        debug_assert_eq!(c.len(), n);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        for (k, t) in tmp.iter_mut().enumerate() {
            let row = &self.vectors_t[k * n..(k + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for (v, x) in row.iter().zip(c.iter()) {
                acc += x * *v;
            }
            *t = acc * Complex64::from_polar(1.0, strength * self.eigenvalues[k]);
        }
        for (i, ci) in c.iter_mut().enumerate() {
            let row = &self.vectors[i * n..(i + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for (v, t) in row.iter().zip(tmp.iter()) {
                acc += t * *v;
            }
            *ci = acc;
        }
    }

    /// Dense unitary `exp(iP cos²θ)`.
    pub fn unitary(&self, strength: f64) -> DMatrix<C64> {
        let n = self.dim();
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, strength * l))
            .collect();
        DMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| phases[k] * (self.vectors[i * n + k] * self.vectors[j * n + k]))
                .sum()
        })
    }
}

/// `exp(iP cos²θ)` on one block, kept in both dense and factorized form.
#[derive(Clone, Debug)]
pub struct KickOperator {
    pub block: BasisBlock,
    pub strength: f64,
    pub unitary: DMatrix<C64>,
}

pub fn kick_operator(strength: f64, block: &BasisBlock) -> Result<KickOperator> {
    if !strength.is_finite() {
        return Err(Error::NonFiniteKick(strength));
    }
    let generator = KickGenerator::new(*block);
    Ok(KickOperator {
        block: *block,
        strength,
        unitary: generator.unitary(strength),
    })
}

/// Diagonal free-rotation phases `exp(−i 2πc E_J dt)` over the block.
pub fn free_propagator(dt: f64, block: &BasisBlock, mol: &MoleculeSpec) -> Vec<C64> {
    block
        .j_list()
        .iter()
        .map(|&j| free_phase(mol.energy(j), dt))
        .collect()
}

#[inline]
pub(crate) fn free_phase(energy_cm: f64, dt: f64) -> C64 {
    // reduce the number of cycles before multiplying by 2π
    let cycles = crate::constants::SPEED_OF_LIGHT_CM * energy_cm * dt;
    let frac = cycles - cycles.round();
    Complex64::from_polar(1.0, -std::f64::consts::TAU * frac)
}

/// Free rotation applied in place.
pub fn free_evolve(c: &mut [C64], energies: &[f64], dt: f64) {
    if dt == 0.0 {
        return;
    }
    for (ci, &e) in c.iter_mut().zip(energies) {
        *ci *= free_phase(e, dt);
    }
}

/// Angular frequency (rad/s) of the J → J+2 coherence.
pub fn coherence_frequency(mol: &MoleculeSpec, j: u32) -> f64 {
    angular_frequency(mol.raman_shift(j))
}

/// Pure state on one basis block.
#[derive(Clone, Debug, PartialEq)]
pub struct RotorBlockState {
    pub block: BasisBlock,
    pub amplitudes: Vec<C64>,
}

impl RotorBlockState {
    pub fn basis_state(block: BasisBlock, j: u32) -> Result<Self> {
        let idx = block.index_of(j).ok_or_else(|| {
            Error::InvalidQuantumNumber(format!("J = {j} is not in block {block:?}"))
        })?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); block.len()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(RotorBlockState { block, amplitudes })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.block.j_at(k), c.norm_sqr()))
    }

    /// |⟨ψ|φ⟩|² for states on the same block.
    pub fn fidelity(&self, other: &RotorBlockState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }

    pub fn kick(&mut self, generator: &KickGenerator, strength: f64) {
        debug_assert_eq!(generator.block.key(), self.block.key());
        generator.apply(strength, &mut self.amplitudes);
    }

    pub fn free(&mut self, mol: &MoleculeSpec, dt: f64) {
        let phases = free_propagator(dt, &self.block, mol);
        for (c, p) in self.amplitudes.iter_mut().zip(phases) {
            *c *= p;
        }
    }
}

/// Read-only table of kick generators, one per distinct (|M|, parity, J_max).
#[derive(Clone, Debug, Default)]
pub struct OperatorCache {
    generators: HashMap<(u32, JParity, u32), Arc<KickGenerator>>,
}

impl OperatorCache {
    pub fn for_blocks<'a>(blocks: impl IntoIterator<Item = &'a BasisBlock>) -> Self {
        use rayon::prelude::*;
        let mut keys: Vec<BasisBlock> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for b in blocks {
            if seen.insert(b.key()) {
                keys.push(BasisBlock { m: b.m_abs() as i32, ..*b });
            }
        }
        let generators = keys
            .par_iter()
            .map(|b| (b.key(), Arc::new(KickGenerator::new(*b))))
            .collect();
        OperatorCache { generators }
    }

    pub fn get(&self, block: &BasisBlock) -> Option<&Arc<KickGenerator>> {
        self.generators.get(&block.key())
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}
