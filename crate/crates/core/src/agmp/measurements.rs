//! Pilot probes and the sensing matrix they induce on the dictionary.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use super::dictionary::AdaptiveDictionary;
use crate::beam_training::{quantize_phases, CoarseADI};
use crate::channel_model::{measure, steering_unchecked, CascadeScenario, PhaseResolution};
use crate::error::{Error, Result};
use crate::linalg::{effective_rank, CMatrix, CVector};

/// One pilot: user beamformer `f` and IRS effective combining vector `b_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub f: CVector,
    pub b_s: CVector,
}

/// Hardware phase resolutions applied to every probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeDesign {
    pub irs_resolution: PhaseResolution,
    pub ue_resolution: PhaseResolution,
}

impl Default for ProbeDesign {
    fn default() -> Self {
        Self {
            irs_resolution: PhaseResolution::Continuous,
            ue_resolution: PhaseResolution::Continuous,
        }
    }
}

impl ProbeDesign {
    /// Probe steering the user toward `omega` and the IRS toward `phi`.
    pub fn probe(&self, scenario: &CascadeScenario, omega: f64, phi: f64) -> Result<Probe> {
        let a = scenario.arrays();
        let d = a.spacing_over_wavelength;
        let mut f = steering_unchecked(a.n_ue, omega, d);
        if let PhaseResolution::Levels(r) = self.ue_resolution {
            f = quantize_phases(&f, r.max(2))?;
        }
        let target = steering_unchecked(a.n_irs, phi, d);
        let theta = scenario.phases_toward(&target, self.irs_resolution)?;
        let b_s = scenario.combining(&theta)?;
        Ok(Probe { f, b_s })
    }
}

/// Stacked observations `y` with sensing matrix `q` (`M × n_columns`).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub y: CVector,
    pub q: CMatrix,
    pub probes: Vec<Probe>,
}

impl MeasurementSet {
    /// Observes the scenario through the given probes.
    pub fn from_probes<R: Rng + ?Sized>(
        scenario: &CascadeScenario,
        dict: &AdaptiveDictionary,
        probes: Vec<Probe>,
        rng: &mut R,
    ) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::TooSmall {
                name: "m",
                min: 1,
                value: 0,
            });
        }
        let y = probes
            .iter()
            .map(|p| measure(scenario, &p.f, &p.b_s, rng))
            .collect::<Result<Vec<_>>>()?;
        let q = sensing_matrix(dict, &probes);
        Ok(Self {
            y: CVector::from_vec(y),
            q,
            probes,
        })
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn effective_rank(&self) -> usize {
        effective_rank(&self.q)
    }
}

/// Rows `(f^T ⊗ b_s^H) (conj(A_U) ⊗ A_I) = (f^T conj(A_U)) ⊗ (b_s^H A_I)`.
pub fn sensing_matrix(dict: &AdaptiveDictionary, probes: &[Probe]) -> CMatrix {
    let irs_len = dict.irs_len();
    let mut q = CMatrix::zeros(probes.len(), dict.n_columns());
    for (m, p) in probes.iter().enumerate() {
        let ue: Vec<Complex64> = dict
            .a_ue
            .column_iter()
            .map(|col| p.f.iter().zip(col.iter()).map(|(f, a)| f * a.conj()).sum())
            .collect();
        let irs: Vec<Complex64> = dict
            .a_irs
            .column_iter()
            .map(|col| p.b_s.dotc(&col))
            .collect();
        for (gu, u) in ue.iter().enumerate() {
            for (gi, i) in irs.iter().enumerate() {
                q[(m, gu * irs_len + gi)] = u * i;
            }
        }
    }
    q
}

/// Default probe count `max(4 G̃, 2 ζ)`.
pub fn default_probe_count(g_tilde: usize, zeta: usize) -> usize {
    (4 * g_tilde).max(2 * zeta).max(1)
}

/// Generates `m` probes and observes the scenario through them.
///
/// Probe 0 points both ends at the coarse estimates. Later probes point at
/// the dictionary's own grid pairs `(ue_grid[g_ue], irs_grid[g_irs])`, which
/// all lie inside the coarse sectors. Pairs are visited in a random order,
/// reshuffled after every full pass.
pub fn build_measurements<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    coarse: &CoarseADI,
    dict: &AdaptiveDictionary,
    m: usize,
    design: &ProbeDesign,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if m == 0 {
        return Err(Error::TooSmall {
            name: "m",
            min: 1,
            value: 0,
        });
    }
    let mut probes = Vec::with_capacity(m);
    probes.push(design.probe(scenario, coarse.omega_hat, coarse.phi_hat)?);
    let mut order: Vec<usize> = Vec::new();
    while probes.len() < m {
        if order.is_empty() {
            order = (0..dict.n_columns()).collect();
            order.shuffle(rng);
        }
        let (gu, gi) = dict.column_pair(order.pop().expect("refilled above"));
        probes.push(design.probe(scenario, dict.ue_grid[gu], dict.irs_grid[gi])?);
    }
    MeasurementSet::from_probes(scenario, dict, probes, rng)
}
