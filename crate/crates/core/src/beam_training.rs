//! Hierarchical beam training for coarse angle acquisition.
//!
//! The IRS refines a binary hierarchy of beams over the cosine domain while
//! the user sweeps its narrow beams exhaustively at every IRS level. The
//! centers of the winning deepest beams are the coarse angle estimates.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::channel_model::{measure, steering_unchecked, CascadeScenario, PhaseResolution};
use crate::error::{Error, Result};
use crate::linalg::CVector;

/// Deepest supported hierarchy; 2^20 beams is far beyond any array here.
pub const MAX_DEPTH: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub center_cos: f64,
    pub half_width_cos: f64,
    /// Unit-norm beamforming (or effective combining) vector.
    pub beamformer: CVector,
}

impl Beam {
    /// Closed interval test; shared boundaries belong to both neighbours.
    pub fn covers(&self, cos_angle: f64) -> bool {
        (cos_angle - self.center_cos).abs() <= self.half_width_cos + 1e-12
    }

    pub fn lower(&self) -> f64 {
        self.center_cos - self.half_width_cos
    }

    pub fn upper(&self) -> f64 {
        self.center_cos + self.half_width_cos
    }
}

/// Binary beam hierarchy. `levels[l]` holds the `2^(l+1)` beams of level `l+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub levels: Vec<Vec<Beam>>,
    /// Number of narrow beams at the deepest level.
    pub resolution: usize,
    pub phase_resolution: PhaseResolution,
}

impl Codebook {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn deepest(&self) -> &[Beam] {
        self.levels.last().expect("codebook has at least one level")
    }

    /// Number of phase levels used for the ADI error range: the phase
    /// resolution when quantized, otherwise the narrow-beam count.
    pub fn effective_levels(&self) -> usize {
        match self.phase_resolution {
            PhaseResolution::Levels(r) => r as usize,
            PhaseResolution::Continuous => self.resolution,
        }
    }
}

/// Rounds every element's phase to the nearest multiple of `2π / levels`,
/// keeping its magnitude.
pub fn quantize_phases(v: &CVector, levels: u32) -> Result<CVector> {
    if levels < 2 {
        return Err(Error::TooSmall {
            name: "levels",
            min: 2,
            value: levels as usize,
        });
    }
    let q = PhaseResolution::Levels(levels);
    Ok(v.map(|z| {
        if z == Complex64::new(0.0, 0.0) {
            z
        } else {
            Complex64::from_polar(z.norm(), q.quantize(z.arg()))
        }
    }))
}

/// Builds the hierarchy over `n_elements`.
///
/// Level `l` beam `b` covers `[-1 + 2b/2^l, -1 + 2(b+1)/2^l]`. Wide beams use
/// only the first `min(n_elements, 2^l)` elements so that the mainlobe spans
/// the interval; the inactive elements are zero.
pub fn build_hierarchical_codebook(
    n_elements: usize,
    depth: u32,
    quantization: PhaseResolution,
    spacing: f64,
) -> Result<Codebook> {
    if depth < 1 {
        return Err(Error::TooSmall {
            name: "depth",
            min: 1,
            value: 0,
        });
    }
    if depth > MAX_DEPTH {
        return Err(Error::Invalid(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    if n_elements == 0 {
        return Err(Error::TooSmall {
            name: "n_elements",
            min: 1,
            value: 0,
        });
    }
    if let PhaseResolution::Levels(r) = quantization {
        if r < 2 {
            return Err(Error::TooSmall {
                name: "quantization_levels",
                min: 2,
                value: r as usize,
            });
        }
    }
    let mut levels = Vec::with_capacity(depth as usize);
    for level in 1..=depth {
        let count = 1usize << level;
        let width = 2.0 / count as f64;
        let active = n_elements.min(count);
        let beams = (0..count)
            .map(|b| {
                let center = -1.0 + (2 * b + 1) as f64 / count as f64;
                let sub = steering_unchecked(active, center, spacing);
                let mut w = CVector::zeros(n_elements);
                w.rows_mut(0, active).copy_from(&sub);
                if let PhaseResolution::Levels(r) = quantization {
                    w = quantize_phases(&w, r)?;
                }
                Ok(Beam {
                    center_cos: center,
                    half_width_cos: width / 2.0,
                    beamformer: w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(beams);
    }
    Ok(Codebook {
        levels,
        resolution: 1 << depth,
        phase_resolution: quantization,
    })
}

/// Largest depth whose beam count does not exceed `min(levels, n_elements)`.
pub fn depth_for(levels: usize, n_elements: usize) -> u32 {
    let beams = levels.min(n_elements).max(2);
    (usize::BITS - 1 - beams.leading_zeros()).min(MAX_DEPTH)
}

/// How the coarse-angle error range follows from the phase resolution `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdiErrorModel {
    /// `c = 2π / R`.
    #[default]
    Paper,
    /// `c = 2 / R`, one deepest beam width in the cosine domain.
    Cosine,
}

impl AdiErrorModel {
    pub fn range(self, levels: usize) -> f64 {
        match self {
            AdiErrorModel::Paper => 2.0 * PI / levels as f64,
            AdiErrorModel::Cosine => 2.0 / levels as f64,
        }
    }
}

/// Coarse angle estimates and their error ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseADI {
    /// IRS-side AoA cosine.
    pub phi_hat: f64,
    /// User-side AoD cosine.
    pub omega_hat: f64,
    /// User-side error range.
    pub c1: f64,
    /// IRS-side error range.
    pub c2: f64,
}

impl CoarseADI {
    pub fn from_resolutions(
        phi_hat: f64,
        omega_hat: f64,
        r_ue: usize,
        r_irs: usize,
        model: AdiErrorModel,
    ) -> Self {
        Self {
            phi_hat,
            omega_hat,
            c1: model.range(r_ue),
            c2: model.range(r_irs),
        }
    }
}

/// Result of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub coarse: CoarseADI,
    /// Winning IRS beam index at the deepest level.
    pub irs_beam: usize,
    /// Winning user beam index at the deepest user level.
    pub ue_beam: usize,
    /// Number of pilot measurements spent.
    pub measurements: usize,
    /// Whether both winning bins contain the LOS angles.
    pub aligned: bool,
}

/// Runs the hierarchical search.
///
/// At each IRS level the two children of the current beam are tried against
/// every user narrow beam; the child with the larger best received power
/// wins, ties going to the lower index. Costs `2 · depth · user_beams`
/// measurements.
pub fn run_beam_training<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    irs_codebook: &Codebook,
    ue_codebook: &Codebook,
    model: AdiErrorModel,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    let arrays = scenario.arrays();
    if irs_codebook.deepest()[0].beamformer.len() != arrays.n_irs {
        return Err(Error::Dimension("IRS codebook does not match n_irs".into()));
    }
    if ue_codebook.deepest()[0].beamformer.len() != arrays.n_ue {
        return Err(Error::Dimension("user codebook does not match n_ue".into()));
    }
    let sweep = ue_codebook.deepest();
    let mut current = 0usize;
    let mut best_ue = 0usize;
    let mut measurements = 0usize;
    for level in &irs_codebook.levels {
        let mut winner: Option<(f64, usize, usize)> = None;
        for child in [2 * current, 2 * current + 1] {
            let b = &level[child].beamformer;
            let mut best: Option<(f64, usize)> = None;
            for (k, beam) in sweep.iter().enumerate() {
                let power = measure(scenario, &beam.beamformer, b, rng)?.norm_sqr();
                measurements += 1;
                if best.is_none_or(|(p, _)| power > p) {
                    best = Some((power, k));
                }
            }
            let (power, k) = best.expect("user sweep is non-empty");
            if winner.is_none_or(|(p, _, _)| power > p) {
                winner = Some((power, child, k));
            }
        }
        let (_, child, k) = winner.expect("two children tried");
        current = child;
        best_ue = k;
    }
    let irs_beam = &irs_codebook.deepest()[current];
    let ue_beam = &sweep[best_ue];
    let los = scenario.ue_irs_paths().los();
    let coarse = CoarseADI::from_resolutions(
        irs_beam.center_cos,
        ue_beam.center_cos,
        ue_codebook.effective_levels(),
        irs_codebook.effective_levels(),
        model,
    );
    Ok(TrainingOutcome {
        coarse,
        irs_beam: current,
        ue_beam: best_ue,
        measurements,
        aligned: irs_beam.covers(los.aoa_cos) && ue_beam.covers(los.aod_cos),
    })
}
