// Correlation-scan cost of full-grid OMP against the adaptive grid.

use std::error::Error;

use irs_chanest::agmp::{self, AgmpConfig, ProbeDesign, SelectionRule};
use irs_chanest::beam_training::{AdiErrorModel, CoarseADI};
use irs_chanest::channel_model::{ArrayConfig, CascadeScenario};
use irs_chanest::evaluation::nmse;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let arrays = ArrayConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scene = CascadeScenario::sample(&mut rng, arrays, 3, 20.0, 1.0, 0.01)?;
    let los = scene.ue_irs_paths().los();
    let coarse =
        CoarseADI::from_resolutions(los.aoa_cos, los.aod_cos, 16, 64, AdiErrorModel::Paper);
    let (m, zeta) = (40, 7);

    println!("{:>6} {:>10} {:>12}", "G", "columns", "MACs");
    let mut full64 = 0;
    for g in [8, 16, 32, 64] {
        let dict = agmp::full_grid(g, &arrays)?;
        let meas =
            agmp::build_measurements(&scene, &coarse, &dict, m, &ProbeDesign::default(), &mut rng)?;
        let out = agmp::omp_full_grid(&meas.y, &meas.q, zeta, SelectionRule::Normalized)?;
        println!(
            "{g:>6} {:>10} {:>12}",
            dict.n_columns(),
            out.correlation_macs
        );
        full64 = out.correlation_macs;
    }
    let cfg = AgmpConfig {
        m_probes: Some(m),
        ..AgmpConfig::default()
    };
    let run = agmp::estimate(&scene, &coarse, &cfg, &mut rng)?;
    println!(
        "adaptive G~=5: {} MACs ({:.2}% of G=64), NMSE {:.2} dB",
        run.pursuit.correlation_macs,
        100.0 * run.pursuit.correlation_macs as f64 / full64 as f64,
        nmse(scene.effective_channel(), &run.estimate.h_hat)?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
