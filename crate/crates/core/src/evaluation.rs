//! Metrics, comparison schemes and the seeded Monte-Carlo harness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agmp::{self, AgmpConfig, ProbeDesign, SelectionRule};
use crate::beam_training::{
    build_hierarchical_codebook, depth_for, quantize_phases, run_beam_training, AdiErrorModel,
    TrainingOutcome,
};
use crate::channel_model::{
    assemble_channel, noiseless_observation, sample_path_set, steering_unchecked, ArrayConfig,
    CascadeScenario, ChannelMatrix, PhaseResolution, PhaseShiftConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{dominant_singular_pair, frobenius_sq, outer, CVector};

/// Channel-acquisition scheme evaluated by a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Agmp,
    BeamTrainingCsi,
    PerfectCsi,
    RandomBeamforming,
    NoIrs,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Agmp,
        Scheme::BeamTrainingCsi,
        Scheme::PerfectCsi,
        Scheme::RandomBeamforming,
        Scheme::NoIrs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Agmp => "agmp",
            Scheme::BeamTrainingCsi => "beam_training_csi",
            Scheme::PerfectCsi => "perfect_csi",
            Scheme::RandomBeamforming => "random_beamforming",
            Scheme::NoIrs => "no_irs",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown scheme `{s}`")))
    }
}

/// Parameter swept by [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    GTilde,
    Zeta,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::GTilde => "g_tilde",
            SweepAxis::Zeta => "zeta",
        }
    }

    /// Returns a copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &TrialConfig, value: f64) -> Result<TrialConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Snr => cfg.snr_db = value,
            SweepAxis::GTilde | SweepAxis::Zeta => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Invalid(format!(
                        "{} values must be positive integers, got {value}",
                        self.as_str()
                    )));
                }
                if self == SweepAxis::GTilde {
                    cfg.g_tilde = value as usize;
                } else {
                    cfg.zeta = value as usize;
                }
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepAxis::Snr),
            "g_tilde" => Ok(SweepAxis::GTilde),
            "zeta" => Ok(SweepAxis::Zeta),
            _ => Err(Error::Invalid(format!("unknown sweep axis `{s}`"))),
        }
    }
}

/// Full parameter set of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub arrays: ArrayConfig,
    pub snr_db: f64,
    pub g_tilde: usize,
    pub zeta: usize,
    /// `None` selects `max(4 G̃, 2 ζ)`.
    pub m_probes: Option<usize>,
    /// IRS phase levels.
    pub r_irs: u32,
    /// User phase levels / narrow-beam count.
    pub r_ue: u32,
    pub rician_k_db: f64,
    pub n_paths: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub adi_error_model: AdiErrorModel,
    pub selection: SelectionRule,
    /// Magnitude of the IRS–BS gain β.
    pub beta_magnitude: f64,
    /// Direct BS–UE link power relative to the cascaded link, in dB.
    pub direct_link_db: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            arrays: ArrayConfig::default(),
            snr_db: 10.0,
            g_tilde: 5,
            zeta: 7,
            m_probes: None,
            r_irs: 64,
            r_ue: 16,
            rician_k_db: 20.0,
            n_paths: 3,
            scheme: Scheme::Agmp,
            seed: 1,
            adi_error_model: AdiErrorModel::Paper,
            selection: SelectionRule::Normalized,
            beta_magnitude: 1.0,
            direct_link_db: -20.0,
        }
    }
}

impl TrialConfig {
    /// `σ² = 10^(-SNR/10)` for unit-power pilots.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.arrays.validate()?;
        let checks: [(&'static str, usize, usize); 5] = [
            ("g_tilde", self.g_tilde, 1),
            ("zeta", self.zeta, 1),
            ("n_paths", self.n_paths, 1),
            ("r_irs", self.r_irs as usize, 2),
            ("r_ue", self.r_ue as usize, 2),
        ];
        for (name, value, min) in checks {
            if value < min {
                return Err(Error::TooSmall { name, min, value });
            }
        }
        if self.m_probes == Some(0) {
            return Err(Error::TooSmall {
                name: "m_probes",
                min: 1,
                value: 0,
            });
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Invalid(format!(
                "snr_db must be finite, got {}",
                self.snr_db
            )));
        }
        if self.beta_magnitude.is_nan() || self.beta_magnitude <= 0.0 {
            return Err(Error::Invalid("beta_magnitude must be positive".into()));
        }
        Ok(())
    }

    pub fn agmp_config(&self) -> AgmpConfig {
        AgmpConfig {
            g_tilde: self.g_tilde,
            zeta: self.zeta,
            m_probes: self.m_probes,
            selection: self.selection,
            design: ProbeDesign {
                irs_resolution: PhaseResolution::Levels(self.r_irs),
                ue_resolution: PhaseResolution::Levels(self.r_ue),
            },
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// `-inf` for an exact estimate; 0 dB for schemes that estimate nothing.
    pub nmse_db: f64,
    /// `‖H − Ĥ‖² / ‖H‖²`.
    pub nmse_linear: f64,
    pub se_bits_per_s_per_hz: f64,
    /// Final pursuit residual norm (AGMP only).
    pub residual_norm: Option<f64>,
    /// Whether beam training hit the true bins (training-based schemes only).
    pub aligned: Option<bool>,
    pub scheme: Scheme,
    pub config_echo: TrialConfig,
}

/// `‖H − Ĥ‖²_F / ‖H‖²_F`.
pub fn nmse_ratio(h_true: &ChannelMatrix, h_est: &ChannelMatrix) -> Result<f64> {
    if h_true.shape() != h_est.shape() {
        return Err(Error::Dimension(format!(
            "true channel {:?} vs estimate {:?}",
            h_true.shape(),
            h_est.shape()
        )));
    }
    let denom = frobenius_sq(h_true);
    if denom == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(frobenius_sq(&(h_true - h_est)) / denom)
}

/// Single-trial NMSE in dB; an exact estimate gives `-inf`.
pub fn nmse(h_true: &ChannelMatrix, h_est: &ChannelMatrix) -> Result<f64> {
    Ok(to_db(nmse_ratio(h_true, h_est)?))
}

pub fn to_db(linear: f64) -> f64 {
    if linear == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * linear.log10()
    }
}

/// `log2(1 + |b_s^H H̄ f|² / σ²)`.
pub fn spectral_efficiency(h_true: &ChannelMatrix, f: &CVector, b_s: &CVector, sigma2: f64) -> f64 {
    let gain = noiseless_observation(h_true, f, b_s).norm_sqr();
    (1.0 + gain / sigma2).log2()
}

/// Dominant singular pair of `h`, as `(b_s, f)`.
pub fn matched_beamformers(h: &ChannelMatrix) -> (CVector, CVector) {
    let (_, u, v) = dominant_singular_pair(h);
    (u, v)
}

/// Phase-only projection onto `levels`-level phases, unit norm.
fn constant_modulus(v: &CVector, levels: u32) -> CVector {
    let n = v.len() as f64;
    let flat = v.map(|z| Complex64::from_polar(1.0 / n.sqrt(), z.arg()));
    quantize_phases(&flat, levels.max(2)).expect("levels clamped to >= 2")
}

/// Beamformers realizable by the hardware for a channel estimate: the IRS
/// applies quantized phases toward the dominant left direction, the user an
/// analog quantized-phase beam toward the dominant right direction.
fn realizable_beamformers(
    scenario: &CascadeScenario,
    h_est: &ChannelMatrix,
    r_irs: u32,
    r_ue: u32,
) -> Result<(CVector, CVector)> {
    let (u, v) = matched_beamformers(h_est);
    let theta = scenario.phases_toward(&u, PhaseResolution::Levels(r_irs))?;
    let b_s = scenario.combining(&theta)?;
    let f = constant_modulus(&v, r_ue);
    Ok((b_s, f))
}

fn channel_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn direct_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

/// Channel realization used by every scheme for `config.seed`.
pub fn trial_scenario(config: &TrialConfig) -> Result<CascadeScenario> {
    CascadeScenario::sample(
        &mut channel_rng(config.seed),
        config.arrays,
        config.n_paths,
        config.rician_k_db,
        config.beta_magnitude,
        config.noise_variance(),
    )
}

fn train<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    let a = scenario.arrays();
    let d = a.spacing_over_wavelength;
    let irs = build_hierarchical_codebook(
        a.n_irs,
        depth_for(config.r_irs as usize, a.n_irs),
        PhaseResolution::Levels(config.r_irs),
        d,
    )?;
    let ue = build_hierarchical_codebook(
        a.n_ue,
        depth_for(config.r_ue as usize, a.n_ue),
        PhaseResolution::Levels(config.r_ue),
        d,
    )?;
    run_beam_training(scenario, &irs, &ue, config.adi_error_model, rng)
}

/// Runs one seeded trial of `config.scheme`.
///
/// The channel depends only on `config.seed`, so all schemes with the same
/// seed see the same realization.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    let scenario = trial_scenario(config)?;
    let h_true = scenario.effective_channel();
    let sigma2 = config.noise_variance();
    let mut rng = noise_rng(config.seed);

    let mut residual_norm = None;
    let mut aligned = None;
    let (nmse_linear, se) = match config.scheme {
        Scheme::PerfectCsi => {
            let (b_s, f) = matched_beamformers(h_true);
            (0.0, spectral_efficiency(h_true, &f, &b_s, sigma2))
        }
        Scheme::Agmp => {
            let training = train(&scenario, config, &mut rng)?;
            aligned = Some(training.aligned);
            let run = agmp::estimate(&scenario, &training.coarse, &config.agmp_config(), &mut rng)?;
            residual_norm = Some(run.pursuit.residual_norm());
            let h_hat = &run.estimate.h_hat;
            let (b_s, f) = realizable_beamformers(&scenario, h_hat, config.r_irs, config.r_ue)?;
            (
                nmse_ratio(h_true, h_hat)?,
                spectral_efficiency(h_true, &f, &b_s, sigma2),
            )
        }
        Scheme::BeamTrainingCsi => {
            let training = train(&scenario, config, &mut rng)?;
            aligned = Some(training.aligned);
            let h_hat = beam_training_csi(&scenario, config, &training, &mut rng)?;
            let (b_s, f) = realizable_beamformers(&scenario, &h_hat, config.r_irs, config.r_ue)?;
            (
                nmse_ratio(h_true, &h_hat)?,
                spectral_efficiency(h_true, &f, &b_s, sigma2),
            )
        }
        Scheme::RandomBeamforming => {
            let a = scenario.arrays();
            let phases = (0..a.n_irs)
                .map(|_| rng.random_range(0.0..2.0 * PI))
                .collect();
            let theta = PhaseShiftConfig::new(phases, PhaseResolution::Levels(config.r_irs))?;
            let b_s = scenario.combining(&theta)?;
            let scale = 1.0 / (a.n_ue as f64).sqrt();
            let f = CVector::from_fn(a.n_ue, |_, _| {
                Complex64::from_polar(scale, rng.random_range(0.0..2.0 * PI))
            });
            (1.0, spectral_efficiency(h_true, &f, &b_s, sigma2))
        }
        Scheme::NoIrs => {
            let a = scenario.arrays();
            let paths = sample_path_set(
                &mut direct_rng(config.seed),
                config.n_paths,
                config.rician_k_db,
            )?;
            let amplitude = 10f64.powf(config.direct_link_db / 20.0) * config.beta_magnitude;
            let h_direct = assemble_channel(&paths, a.n_bs, a.n_ue, a.spacing_over_wavelength)
                * Complex64::new(amplitude, 0.0);
            let (b, f) = matched_beamformers(&h_direct);
            (1.0, spectral_efficiency(&h_direct, &f, &b, sigma2))
        }
    };
    Ok(TrialResult {
        nmse_db: to_db(nmse_linear),
        nmse_linear,
        se_bits_per_s_per_hz: se,
        residual_norm,
        aligned,
        scheme: config.scheme,
        config_echo: config.clone(),
    })
}

/// Benchmark estimate: steering outer product at the coarse angles with one
/// complex gain fitted by least squares to the aligned probe.
pub fn beam_training_csi<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    config: &TrialConfig,
    training: &TrainingOutcome,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let a = scenario.arrays();
    let d = a.spacing_over_wavelength;
    let coarse = &training.coarse;
    let design = config.agmp_config().design;
    let probe = design.probe(scenario, coarse.omega_hat, coarse.phi_hat)?;
    let y = crate::channel_model::measure(scenario, &probe.f, &probe.b_s, rng)?;
    let atom = outer(
        &steering_unchecked(a.n_irs, coarse.phi_hat, d),
        &steering_unchecked(a.n_ue, coarse.omega_hat, d),
    );
    let response = noiseless_observation(&atom, &probe.f, &probe.b_s);
    let gain = if response.norm_sqr() > 0.0 {
        y / response
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(atom * gain)
}

/// Aggregated statistics for one (value, scheme) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheme: Scheme,
    /// `10 log10` of the mean linear NMSE.
    pub mean_nmse_db: f64,
    /// Standard error of `mean_nmse_db` (delta method on the linear mean).
    pub nmse_stderr_db: f64,
    pub se_mean: f64,
    pub se_stderr: f64,
    /// Fraction of trials whose beam training hit the true bins.
    pub alignment_rate: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "sweep_axis,sweep_value,scheme,mean_nmse_db,se_mean,se_stderr,nmse_stderr,n_trials,seed";

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.axis,
                r.value,
                r.scheme,
                r.mean_nmse_db,
                r.se_mean,
                r.se_stderr,
                r.nmse_stderr_db,
                r.n_trials,
                r.seed
            ));
        }
        out
    }

    pub fn row(&self, value: f64, scheme: Scheme) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.scheme == scheme)
    }

    /// Fixed-width human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<8} {:>8} {:<20} {:>12} {:>10} {:>10} {:>8}\n",
            "axis", "value", "scheme", "nmse_db", "se", "se_err", "trials"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>8} {:<20} {:>12.3} {:>10.4} {:>10.4} {:>8}\n",
                r.axis.as_str(),
                r.value,
                r.scheme.as_str(),
                r.mean_nmse_db,
                r.se_mean,
                r.se_stderr,
                r.n_trials
            ));
        }
        out
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates trials of one cell: linear NMSE is averaged before the dB
/// conversion.
pub fn aggregate(
    axis: SweepAxis,
    value: f64,
    scheme: Scheme,
    seed: u64,
    trials: &[TrialResult],
) -> SweepRow {
    let lin: Vec<f64> = trials.iter().map(|t| t.nmse_linear).collect();
    let se: Vec<f64> = trials.iter().map(|t| t.se_bits_per_s_per_hz).collect();
    let (lin_mean, lin_err) = mean_and_stderr(&lin);
    let (se_mean, se_stderr) = mean_and_stderr(&se);
    let nmse_stderr_db = if lin_mean > 0.0 {
        10.0 / std::f64::consts::LN_10 * lin_err / lin_mean
    } else {
        0.0
    };
    let flags: Vec<bool> = trials.iter().filter_map(|t| t.aligned).collect();
    let alignment_rate = if flags.is_empty() {
        None
    } else {
        Some(flags.iter().filter(|&&a| a).count() as f64 / flags.len() as f64)
    };
    SweepRow {
        axis,
        value,
        scheme,
        mean_nmse_db: to_db(lin_mean),
        nmse_stderr_db,
        se_mean,
        se_stderr,
        alignment_rate,
        n_trials: trials.len(),
        seed,
    }
}

/// Runs `n_trials` seeded trials (seed `base.seed + t`) for every
/// `value × scheme` cell. Trials run in parallel; the table does not depend
/// on the thread count.
pub fn run_sweep(
    base: &TrialConfig,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[Scheme],
    n_trials: usize,
) -> Result<ResultTable> {
    if n_trials == 0 {
        return Err(Error::TooSmall {
            name: "n_trials",
            min: 1,
            value: 0,
        });
    }
    if values.is_empty() || schemes.is_empty() {
        return Err(Error::Invalid(
            "sweep needs at least one value and one scheme".into(),
        ));
    }
    let mut jobs = Vec::with_capacity(values.len() * schemes.len() * n_trials);
    for &v in values {
        let cfg = axis.apply(base, v)?;
        cfg.validate()?;
        for &scheme in schemes {
            for t in 0..n_trials {
                let mut c = cfg.clone();
                c.scheme = scheme;
                c.seed = base.seed.wrapping_add(t as u64);
                jobs.push(c);
            }
        }
    }
    let results = jobs.par_iter().map(run_trial).collect::<Result<Vec<_>>>()?;
    let rows = results
        .chunks(n_trials)
        .enumerate()
        .map(|(cell, chunk)| {
            let value = values[cell / schemes.len()];
            let scheme = schemes[cell % schemes.len()];
            aggregate(axis, value, scheme, base.seed, chunk)
        })
        .collect();
    Ok(ResultTable { rows })
}
