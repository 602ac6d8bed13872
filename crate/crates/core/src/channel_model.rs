//! Geometric channel synthesis for the UE → IRS → BS uplink.
//!
//! All angles are carried as cosines (`Φ = cos θ`, `Ω = cos φ`). Channels are
//! oriented uplink: the UE–IRS link has shape `(n_irs, n_ue)` and the IRS–BS
//! link has shape `(n_bs, n_irs)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{outer, CMatrix, CVector};

/// Complex channel matrix of shape `(n_rx, n_tx)`.
pub type ChannelMatrix = CMatrix;

/// Antenna and element counts of the three nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub n_bs: usize,
    pub n_irs: usize,
    pub n_ue: usize,
    /// Element spacing in wavelengths (d/λ).
    pub spacing_over_wavelength: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_bs: 64,
            n_irs: 64,
            n_ue: 16,
            spacing_over_wavelength: 0.5,
        }
    }
}

impl ArrayConfig {
    /// Half-wavelength arrays with the given counts.
    pub fn new(n_bs: usize, n_irs: usize, n_ue: usize) -> Result<Self> {
        let cfg = Self {
            n_bs,
            n_irs,
            n_ue,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("n_bs", self.n_bs),
            ("n_irs", self.n_irs),
            ("n_ue", self.n_ue),
        ] {
            if value == 0 {
                return Err(Error::TooSmall {
                    name,
                    min: 1,
                    value,
                });
            }
        }
        if !(self.spacing_over_wavelength > 0.0 && self.spacing_over_wavelength.is_finite()) {
            return Err(Error::Invalid(format!(
                "spacing_over_wavelength must be positive, got {}",
                self.spacing_over_wavelength
            )));
        }
        Ok(())
    }
}

fn check_cos(c: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(c))
    }
}

/// One propagation path: complex gain plus cosine-domain AoA and AoD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aoa_cos: f64,
    pub aod_cos: f64,
}

impl PathComponent {
    pub fn new(gain: Complex64, aoa_cos: f64, aod_cos: f64) -> Result<Self> {
        check_cos(aoa_cos)?;
        check_cos(aod_cos)?;
        Ok(Self {
            gain,
            aoa_cos,
            aod_cos,
        })
    }
}

/// Multipath description of one link. The first path is the LOS path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<PathComponent>,
    pub rician_k_db: f64,
}

impl PathSet {
    pub fn new(paths: Vec<PathComponent>, rician_k_db: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::TooSmall {
                name: "n_paths",
                min: 1,
                value: 0,
            });
        }
        Ok(Self { paths, rician_k_db })
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn los(&self) -> &PathComponent {
        &self.paths[0]
    }
}

/// Unit-norm ULA response: element `k` is `exp(j 2π k (d/λ) cos_angle) / √n`.
pub fn steering_vector(n: usize, cos_angle: f64, spacing_over_wavelength: f64) -> Result<CVector> {
    if n == 0 {
        return Err(Error::TooSmall {
            name: "n",
            min: 1,
            value: 0,
        });
    }
    check_cos(cos_angle)?;
    Ok(steering_unchecked(n, cos_angle, spacing_over_wavelength))
}

pub(crate) fn steering_unchecked(n: usize, cos_angle: f64, spacing: f64) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * spacing * cos_angle;
    CVector::from_fn(n, |k, _| Complex64::from_polar(scale, step * k as f64))
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws a Rician multipath set with unit total expected power.
///
/// The LOS path has fixed magnitude `sqrt(K/(K+1))` and a uniform phase; the
/// `n_paths - 1` NLOS gains are i.i.d. `CN(0, 1/((K+1)(L-1)))`. A single-path
/// set carries the whole unit power on the LOS path. All angle cosines are
/// uniform on `[-1, 1]`.
pub fn sample_path_set<R: Rng + ?Sized>(
    rng: &mut R,
    n_paths: usize,
    rician_k_db: f64,
) -> Result<PathSet> {
    if n_paths == 0 {
        return Err(Error::TooSmall {
            name: "n_paths",
            min: 1,
            value: 0,
        });
    }
    let k = 10f64.powf(rician_k_db / 10.0);
    let (los_power, nlos_power) = if n_paths == 1 {
        (1.0, 0.0)
    } else {
        (k / (k + 1.0), 1.0 / ((k + 1.0) * (n_paths - 1) as f64))
    };
    let mut paths = Vec::with_capacity(n_paths);
    for l in 0..n_paths {
        let gain = if l == 0 {
            Complex64::from_polar(los_power.sqrt(), rng.random_range(0.0..2.0 * PI))
        } else {
            complex_gaussian(rng, nlos_power)
        };
        let aoa_cos = rng.random_range(-1.0..=1.0);
        let aod_cos = rng.random_range(-1.0..=1.0);
        paths.push(PathComponent {
            gain,
            aoa_cos,
            aod_cos,
        });
    }
    PathSet::new(paths, rician_k_db)
}

/// Sum form: `sqrt(n_tx n_rx / L) Σ α_l a_R(Φ_l) a_T(Ω_l)^H`.
pub fn assemble_channel(paths: &PathSet, n_rx: usize, n_tx: usize, spacing: f64) -> ChannelMatrix {
    let norm = ((n_tx * n_rx) as f64 / paths.n_paths() as f64).sqrt();
    let mut h = ChannelMatrix::zeros(n_rx, n_tx);
    for p in &paths.paths {
        let a_r = steering_unchecked(n_rx, p.aoa_cos, spacing);
        let a_t = steering_unchecked(n_tx, p.aod_cos, spacing);
        h += outer(&a_r, &a_t) * (p.gain * norm);
    }
    h
}

/// Factored form `A_R H_a A_T^H` with `H_a = sqrt(n_tx n_rx / L) diag(α)`.
pub fn assemble_channel_factored(
    paths: &PathSet,
    n_rx: usize,
    n_tx: usize,
    spacing: f64,
) -> ChannelMatrix {
    let l = paths.n_paths();
    let norm = ((n_tx * n_rx) as f64 / l as f64).sqrt();
    let a_r = CMatrix::from_fn(n_rx, l, |i, j| {
        steering_unchecked(n_rx, paths.paths[j].aoa_cos, spacing)[i]
    });
    let a_t = CMatrix::from_fn(n_tx, l, |i, j| {
        steering_unchecked(n_tx, paths.paths[j].aod_cos, spacing)[i]
    });
    let h_a = CMatrix::from_diagonal(&CVector::from_fn(l, |j, _| paths.paths[j].gain * norm));
    a_r * h_a * a_t.adjoint()
}

/// Number of IRS phase levels, or continuous phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    Continuous,
    Levels(u32),
}

impl PhaseResolution {
    pub fn quantize(self, phase: f64) -> f64 {
        let wrapped = wrap_phase(phase);
        match self {
            PhaseResolution::Continuous => wrapped,
            PhaseResolution::Levels(r) => {
                let step = 2.0 * PI / r as f64;
                let k = (wrapped / step).round() as u64 % r as u64;
                k as f64 * step
            }
        }
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    // rem_euclid can return exactly 2π for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// IRS reflection configuration. Amplitudes are fixed at one.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftConfig {
    phases: Vec<f64>,
    resolution: PhaseResolution,
}

impl PhaseShiftConfig {
    /// Wraps every phase into `[0, 2π)` and snaps it to the resolution grid.
    pub fn new(phases: Vec<f64>, resolution: PhaseResolution) -> Result<Self> {
        if let PhaseResolution::Levels(r) = resolution {
            if r < 1 {
                return Err(Error::TooSmall {
                    name: "quantization_levels",
                    min: 1,
                    value: r as usize,
                });
            }
        }
        let phases = phases.into_iter().map(|p| resolution.quantize(p)).collect();
        Ok(Self { phases, resolution })
    }

    pub fn identity(n_irs: usize) -> Self {
        Self {
            phases: vec![0.0; n_irs],
            resolution: PhaseResolution::Continuous,
        }
    }

    /// Phases that steer the effective combining vector toward `target`:
    /// `φ_n = arg a_T(Ω^B)[n] − arg target[n]`, then quantized.
    pub fn steering_toward(
        target: &CVector,
        aod_cos_bs: f64,
        spacing: f64,
        resolution: PhaseResolution,
    ) -> Result<Self> {
        let a_t = steering_vector(target.len(), aod_cos_bs, spacing)?;
        let phases = a_t
            .iter()
            .zip(target.iter())
            .map(|(a, t)| a.arg() - t.arg())
            .collect();
        Self::new(phases, resolution)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        vec![1.0; self.phases.len()]
    }

    pub fn resolution(&self) -> PhaseResolution {
        self.resolution
    }

    pub fn n_irs(&self) -> usize {
        self.phases.len()
    }

    /// `Θ = diag(exp(j φ_n))`.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
        ))
    }
}

/// Uplink cascade `H^B Θ H^I` of shape `(n_bs, n_ue)`.
pub fn cascaded_channel(
    h_ue_irs: &ChannelMatrix,
    theta: &PhaseShiftConfig,
    h_irs_bs: &ChannelMatrix,
) -> Result<ChannelMatrix> {
    let n = theta.n_irs();
    if h_ue_irs.nrows() != n || h_irs_bs.ncols() != n {
        return Err(Error::Dimension(format!(
            "UE-IRS link is {:?}, IRS-BS link is {:?}, IRS has {} elements",
            h_ue_irs.shape(),
            h_irs_bs.shape(),
            n
        )));
    }
    let mut scaled = h_ue_irs.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= Complex64::from_polar(1.0, theta.phases[i]);
    }
    Ok(h_irs_bs * scaled)
}

/// `b_s = Θ^H a_T(n_irs, Ω^B)`.
pub fn effective_combining(
    theta: &PhaseShiftConfig,
    aod_cos_bs: f64,
    spacing: f64,
) -> Result<CVector> {
    let a_t = steering_vector(theta.n_irs(), aod_cos_bs, spacing)?;
    Ok(CVector::from_fn(a_t.len(), |n, _| {
        Complex64::from_polar(1.0, -theta.phases[n]) * a_t[n]
    }))
}

/// Everything needed to simulate one uplink pilot exchange.
///
/// The effective cascaded channel is cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeScenario {
    irs_bs_path: PathComponent,
    ue_irs_paths: PathSet,
    arrays: ArrayConfig,
    noise_variance: f64,
    effective: ChannelMatrix,
}

impl CascadeScenario {
    pub fn new(
        irs_bs_path: PathComponent,
        ue_irs_paths: PathSet,
        arrays: ArrayConfig,
        noise_variance: f64,
    ) -> Result<Self> {
        arrays.validate()?;
        if noise_variance.is_nan() || noise_variance < 0.0 {
            return Err(Error::Invalid(format!(
                "noise variance must be non-negative, got {noise_variance}"
            )));
        }
        let effective = assemble_channel(
            &ue_irs_paths,
            arrays.n_irs,
            arrays.n_ue,
            arrays.spacing_over_wavelength,
        ) * irs_bs_path.gain;
        Ok(Self {
            irs_bs_path,
            ue_irs_paths,
            arrays,
            noise_variance,
            effective,
        })
    }

    /// Random scenario: Rician UE–IRS paths and an IRS–BS gain of magnitude
    /// `beta_magnitude` with uniform phase.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        arrays: ArrayConfig,
        n_paths: usize,
        rician_k_db: f64,
        beta_magnitude: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let beta = Complex64::from_polar(beta_magnitude, rng.random_range(0.0..2.0 * PI));
        let aoa = rng.random_range(-1.0..=1.0);
        let aod = rng.random_range(-1.0..=1.0);
        let paths = sample_path_set(rng, n_paths, rician_k_db)?;
        Self::new(
            PathComponent::new(beta, aoa, aod)?,
            paths,
            arrays,
            noise_variance,
        )
    }

    pub fn irs_bs_path(&self) -> &PathComponent {
        &self.irs_bs_path
    }

    pub fn ue_irs_paths(&self) -> &PathSet {
        &self.ue_irs_paths
    }

    pub fn arrays(&self) -> &ArrayConfig {
        &self.arrays
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Same channels, different noise level.
    pub fn with_noise_variance(&self, noise_variance: f64) -> Self {
        Self {
            noise_variance,
            ..self.clone()
        }
    }

    /// `H^I` in uplink orientation, shape `(n_irs, n_ue)`.
    pub fn ue_irs_channel(&self) -> ChannelMatrix {
        assemble_channel(
            &self.ue_irs_paths,
            self.arrays.n_irs,
            self.arrays.n_ue,
            self.arrays.spacing_over_wavelength,
        )
    }

    /// Rank-one `H^B = β a_R(n_bs, Φ^B) a_T(n_irs, Ω^B)^H`, shape `(n_bs, n_irs)`.
    pub fn irs_bs_channel(&self) -> ChannelMatrix {
        let d = self.arrays.spacing_over_wavelength;
        let a_r = steering_unchecked(self.arrays.n_bs, self.irs_bs_path.aoa_cos, d);
        let a_t = steering_unchecked(self.arrays.n_irs, self.irs_bs_path.aod_cos, d);
        outer(&a_r, &a_t) * self.irs_bs_path.gain
    }

    /// BS combiner pointed at the IRS, scaled so that `w^H a_R(Φ^B) = 1`.
    pub fn bs_combiner(&self) -> CVector {
        let a_r = steering_unchecked(
            self.arrays.n_bs,
            self.irs_bs_path.aoa_cos,
            self.arrays.spacing_over_wavelength,
        );
        let gram = a_r.dotc(&a_r);
        &a_r / gram.conj()
    }

    /// `H̄`, shape `(n_irs, n_ue)`.
    pub fn effective_channel(&self) -> &ChannelMatrix {
        &self.effective
    }

    /// Effective combining vector produced by `theta` toward this BS.
    pub fn combining(&self, theta: &PhaseShiftConfig) -> Result<CVector> {
        effective_combining(
            theta,
            self.irs_bs_path.aod_cos,
            self.arrays.spacing_over_wavelength,
        )
    }

    /// IRS phases that make the effective combining vector follow `target`.
    pub fn phases_toward(
        &self,
        target: &CVector,
        resolution: PhaseResolution,
    ) -> Result<PhaseShiftConfig> {
        PhaseShiftConfig::steering_toward(
            target,
            self.irs_bs_path.aod_cos,
            self.arrays.spacing_over_wavelength,
            resolution,
        )
    }
}

/// Effective cascaded channel `H̄ = β H^I`, shape `(n_irs, n_ue)`.
pub fn effective_cascaded_channel(scenario: &CascadeScenario) -> ChannelMatrix {
    scenario.effective_channel().clone()
}

/// Noiseless part of one pilot observation, `b_s^H H̄ f`.
pub fn noiseless_observation(h_bar: &ChannelMatrix, f: &CVector, b_s: &CVector) -> Complex64 {
    b_s.dotc(&(h_bar * f))
}

/// One pilot observation `y = b_s^H H̄ f + ν` with `ν ~ CN(0, σ²)`.
///
/// The noise draw always consumes two normals from `rng`, also when `σ² = 0`,
/// so noise realizations line up across noise levels for a fixed seed.
pub fn measure<R: Rng + ?Sized>(
    scenario: &CascadeScenario,
    f: &CVector,
    b_s: &CVector,
    rng: &mut R,
) -> Result<Complex64> {
    let a = scenario.arrays();
    if f.len() != a.n_ue || b_s.len() != a.n_irs {
        return Err(Error::Dimension(format!(
            "probe lengths ({}, {}) do not match (n_ue, n_irs) = ({}, {})",
            f.len(),
            b_s.len(),
            a.n_ue,
            a.n_irs
        )));
    }
    let signal = noiseless_observation(scenario.effective_channel(), f, b_s);
    Ok(signal + complex_gaussian(rng, scenario.noise_variance()))
}
