// Hierarchical beam search at a few SNRs.

use std::error::Error;

use irs_chanest::beam_training::{
    build_hierarchical_codebook, depth_for, run_beam_training, AdiErrorModel,
};
use irs_chanest::channel_model::{ArrayConfig, CascadeScenario, PhaseResolution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let arrays = ArrayConfig::default();
    let (r_irs, r_ue) = (64, 16);
    let irs_cb = build_hierarchical_codebook(
        arrays.n_irs,
        depth_for(r_irs, arrays.n_irs),
        PhaseResolution::Levels(r_irs as u32),
        0.5,
    )?;
    let ue_cb = build_hierarchical_codebook(
        arrays.n_ue,
        depth_for(r_ue, arrays.n_ue),
        PhaseResolution::Levels(r_ue as u32),
        0.5,
    )?;
    println!(
        "IRS codebook: {} levels, narrowest width {}",
        irs_cb.depth(),
        2.0 / irs_cb.resolution as f64
    );
    for (l, level) in irs_cb.levels.iter().take(3).enumerate() {
        let spans: Vec<String> = level
            .iter()
            .map(|b| format!("[{:+.2},{:+.2}]", b.lower(), b.upper()))
            .collect();
        println!("  level {}: {}", l + 1, spans.join(" "));
    }

    for snr_db in [-10.0, 0.0, 10.0] {
        let noise = 10f64.powf(-snr_db / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = 100;
        let mut hits = 0;
        let mut last = None;
        for _ in 0..trials {
            let scene = CascadeScenario::sample(&mut rng, arrays, 3, 20.0, 1.0, noise)?;
            let out = run_beam_training(&scene, &irs_cb, &ue_cb, AdiErrorModel::Paper, &mut rng)?;
            hits += out.aligned as usize;
            last = Some(out);
        }
        let out = last.expect("ran trials");
        println!(
            "SNR {snr_db:+} dB: aligned {hits}/{trials}, {} pilots per search, last estimate (phi {:+.3}, omega {:+.3})",
            out.measurements, out.coarse.phi_hat, out.coarse.omega_hat
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
