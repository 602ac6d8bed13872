// One end-to-end estimate: training, adaptive grid, pursuit, reconstruction.

use std::error::Error;

use irs_chanest::agmp::{self, AgmpConfig};
use irs_chanest::beam_training::{
    build_hierarchical_codebook, depth_for, run_beam_training, AdiErrorModel,
};
use irs_chanest::channel_model::{ArrayConfig, CascadeScenario, PhaseResolution};
use irs_chanest::evaluation::nmse;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let arrays = ArrayConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let scene = CascadeScenario::sample(&mut rng, arrays, 3, 20.0, 1.0, 0.1)?;
    let irs_cb =
        build_hierarchical_codebook(64, depth_for(64, 64), PhaseResolution::Levels(64), 0.5)?;
    let ue_cb =
        build_hierarchical_codebook(16, depth_for(16, 16), PhaseResolution::Levels(16), 0.5)?;
    let training = run_beam_training(&scene, &irs_cb, &ue_cb, AdiErrorModel::Paper, &mut rng)?;
    let c = training.coarse;
    let los = scene.ue_irs_paths().los();
    println!(
        "true (phi, omega) = ({:+.4}, {:+.4})",
        los.aoa_cos, los.aod_cos
    );
    println!(
        "coarse           = ({:+.4}, {:+.4}), ranges c1 {:.4}, c2 {:.4}",
        c.phi_hat, c.omega_hat, c.c1, c.c2
    );

    let config = AgmpConfig::default();
    let run = agmp::estimate(&scene, &c, &config, &mut rng)?;
    println!(
        "{} columns, {} probes, support {:?}",
        run.dictionary.n_columns(),
        run.measurements.m(),
        run.pursuit.support
    );
    let history: Vec<String> = run
        .pursuit
        .residual_history
        .iter()
        .map(|r| format!("{r:.3}"))
        .collect();
    println!("residual norms: {}", history.join(" > "));
    let err = nmse(scene.effective_channel(), &run.estimate.h_hat)?;
    println!("NMSE {err:.2} dB");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
