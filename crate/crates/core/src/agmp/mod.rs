//! Adaptive-grid matching pursuit.
//!
//! The coarse angles from beam training define a small angular grid; pilot
//! probes inside the coarse sectors produce a sensing matrix over that grid;
//! greedy pursuit with least-squares refit picks the atoms and the channel is
//! rebuilt from them.

pub mod dictionary;
pub mod measurements;
pub mod pursuit;

use rand::Rng;

pub use dictionary::{build_adaptive_grid, full_grid, grid_points, AdaptiveDictionary};
pub use measurements::{
    build_measurements, default_probe_count, sensing_matrix, MeasurementSet, Probe, ProbeDesign,
};
pub use pursuit::{
    matching_pursuit, omp_full_grid, reconstruct, reconstruct_from, PursuitOutcome, SelectionRule,
    SparseEstimate,
};

use crate::beam_training::CoarseADI;
use crate::channel_model::CascadeScenario;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgmpConfig {
    pub g_tilde: usize,
    pub zeta: usize,
    /// Number of pilot probes; `None` uses [`default_probe_count`].
    pub m_probes: Option<usize>,
    pub selection: SelectionRule,
    pub design: ProbeDesign,
}

impl Default for AgmpConfig {
    fn default() -> Self {
        Self {
            g_tilde: 5,
            zeta: 7,
            m_probes: None,
            selection: SelectionRule::Normalized,
            design: ProbeDesign::default(),
        }
    }
}

impl AgmpConfig {
    pub fn probe_count(&self) -> usize {
        self.m_probes
            .unwrap_or_else(|| default_probe_count(self.g_tilde, self.zeta))
    }
}

/// Everything produced by one estimation run.
#[derive(Debug, Clone)]
pub struct AgmpRun {
    pub dictionary: AdaptiveDictionary,
    pub measurements: MeasurementSet,
    pub pursuit: PursuitOutcome,
    pub estimate: SparseEstimate,
}

/// Grid construction, probing, pursuit and reconstruction in one call.
pub fn estimate<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    coarse: &CoarseADI,
    config: &AgmpConfig,
    rng: &mut R,
) -> Result<AgmpRun> {
    let dictionary = build_adaptive_grid(coarse, config.g_tilde, scenario.arrays())?;
    let measurements = build_measurements(
        scenario,
        coarse,
        &dictionary,
        config.probe_count(),
        &config.design,
        rng,
    )?;
    let pursuit = matching_pursuit(
        &measurements.y,
        &measurements.q,
        config.zeta,
        config.selection,
    )?;
    let estimate = reconstruct(&pursuit, &dictionary)?;
    Ok(AgmpRun {
        dictionary,
        measurements,
        pursuit,
        estimate,
    })
}
