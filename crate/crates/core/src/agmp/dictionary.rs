//! Adaptive angular grid around the coarse angle estimates.

use crate::beam_training::CoarseADI;
use crate::channel_model::{steering_unchecked, ArrayConfig};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix};

/// Grids and steering dictionaries for the user and IRS axes.
///
/// Column `g = g_ue * irs_len + g_irs` of the Kronecker dictionary
/// `conj(A_U) ⊗ A_I` corresponds to the pair `(ue_grid[g_ue], irs_grid[g_irs])`,
/// which is entry `(g_irs, g_ue)` of the unvectorized angular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveDictionary {
    pub ue_grid: Vec<f64>,
    pub irs_grid: Vec<f64>,
    /// `n_ue × ue_grid.len()` transmit steering columns.
    pub a_ue: CMatrix,
    /// `n_irs × irs_grid.len()` receive steering columns.
    pub a_irs: CMatrix,
    /// Set when an axis holds repeated grid points (zero-width range).
    pub degenerate: bool,
}

impl AdaptiveDictionary {
    /// Builds the dictionary from explicit grids.
    pub fn from_grids(ue_grid: Vec<f64>, irs_grid: Vec<f64>, arrays: &ArrayConfig) -> Result<Self> {
        if ue_grid.is_empty() || irs_grid.is_empty() {
            return Err(Error::TooSmall {
                name: "g_tilde",
                min: 1,
                value: 0,
            });
        }
        for &g in ue_grid.iter().chain(&irs_grid) {
            if !(-1.0..=1.0).contains(&g) {
                return Err(Error::AngleOutOfRange(g));
            }
        }
        let d = arrays.spacing_over_wavelength;
        let a_ue = CMatrix::from_fn(arrays.n_ue, ue_grid.len(), |i, j| {
            steering_unchecked(arrays.n_ue, ue_grid[j], d)[i]
        });
        let a_irs = CMatrix::from_fn(arrays.n_irs, irs_grid.len(), |i, j| {
            steering_unchecked(arrays.n_irs, irs_grid[j], d)[i]
        });
        let degenerate = has_repeats(&ue_grid) || has_repeats(&irs_grid);
        Ok(Self {
            ue_grid,
            irs_grid,
            a_ue,
            a_irs,
            degenerate,
        })
    }

    pub fn ue_len(&self) -> usize {
        self.ue_grid.len()
    }

    pub fn irs_len(&self) -> usize {
        self.irs_grid.len()
    }

    /// Total number of dictionary columns.
    pub fn n_columns(&self) -> usize {
        self.ue_len() * self.irs_len()
    }

    pub fn column_index(&self, g_ue: usize, g_irs: usize) -> usize {
        g_ue * self.irs_len() + g_irs
    }

    /// Inverse of [`Self::column_index`]: `(g_ue, g_irs)`.
    pub fn column_pair(&self, g: usize) -> (usize, usize) {
        (g / self.irs_len(), g % self.irs_len())
    }

    /// Explicit `conj(A_U) ⊗ A_I`, shape `(n_ue n_irs) × n_columns`.
    pub fn dictionary_matrix(&self) -> CMatrix {
        kron(&self.a_ue.conjugate(), &self.a_irs)
    }
}

fn has_repeats(grid: &[f64]) -> bool {
    grid.iter()
        .enumerate()
        .any(|(i, a)| grid[i + 1..].iter().any(|b| a == b))
}

/// `center - width/2 + (width/g_tilde) g` for `g = 0..g_tilde`, clamped to
/// `[-1, 1]`. Points that clamp onto an already present boundary value are
/// dropped.
pub fn grid_points(center: f64, width: f64, g_tilde: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(g_tilde);
    for g in 0..g_tilde {
        let raw = center - width / 2.0 + (width / g_tilde as f64) * g as f64;
        let clamped = raw.clamp(-1.0, 1.0);
        if clamped != raw && out.contains(&clamped) {
            continue;
        }
        out.push(clamped);
    }
    out
}

/// Adaptive grid of `g_tilde` points per axis around the coarse estimates.
pub fn build_adaptive_grid(
    coarse: &CoarseADI,
    g_tilde: usize,
    arrays: &ArrayConfig,
) -> Result<AdaptiveDictionary> {
    if g_tilde == 0 {
        return Err(Error::TooSmall {
            name: "g_tilde",
            min: 1,
            value: 0,
        });
    }
    let ue = grid_points(coarse.omega_hat, coarse.c1, g_tilde);
    let irs = grid_points(coarse.phi_hat, coarse.c2, g_tilde);
    AdaptiveDictionary::from_grids(ue, irs, arrays)
}

/// Uniform `g`-point grid over the whole cosine domain on both axes:
/// `-1 + 2k/g`, `k = 0..g`.
pub fn full_grid(g: usize, arrays: &ArrayConfig) -> Result<AdaptiveDictionary> {
    let coarse = CoarseADI {
        phi_hat: 0.0,
        omega_hat: 0.0,
        c1: 2.0,
        c2: 2.0,
    };
    build_adaptive_grid(&coarse, g, arrays)
}
