// Array responses, a sampled cascaded channel and one noisy pilot.

use std::error::Error;

use irs_chanest::channel_model::{
    effective_cascaded_channel, measure, noiseless_observation, steering_vector, ArrayConfig,
    CascadeScenario,
};
use irs_chanest::linalg::{frobenius_sq, kron, max_abs_diff, vec, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let a = steering_vector(16, 0.3, 0.5)?;
    let b = steering_vector(16, 0.3 + 2.0 / 16.0, 0.5)?;
    println!(
        "|a| = {:.12}, |a^H b| one null apart = {:.2e}",
        a.norm(),
        a.dotc(&b).norm()
    );

    let arrays = ArrayConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scenario = CascadeScenario::sample(&mut rng, arrays, 3, 20.0, 1.0, 0.1)?;
    let h = effective_cascaded_channel(&scenario);
    println!(
        "effective channel {}x{}, |H|_F^2 = {:.1}",
        h.nrows(),
        h.ncols(),
        frobenius_sq(&h)
    );
    for (l, p) in scenario.ue_irs_paths().paths.iter().enumerate() {
        println!(
            "  path {l}: |gain|^2 = {:.4}, IRS cos = {:+.3}, UE cos = {:+.3}",
            p.gain.norm_sqr(),
            p.aoa_cos,
            p.aod_cos
        );
    }

    // vec(A X B) = (B^T kron A) vec(X) on the channel itself
    let u = CMatrix::from_fn(3, arrays.n_irs, |i, j| h[(j, i)]);
    let w = CMatrix::from_fn(arrays.n_ue, 2, |i, j| h[(i + j, i)]);
    let lhs = vec(&(&u * &h * &w));
    let rhs = kron(&w.transpose(), &u) * vec(&h);
    println!("Kronecker identity residual {:.1e}", (lhs - rhs).norm());

    let los = scenario.ue_irs_paths().los();
    let f = steering_vector(arrays.n_ue, los.aod_cos, 0.5)?;
    let target = steering_vector(arrays.n_irs, los.aoa_cos, 0.5)?;
    let theta = scenario.phases_toward(
        &target,
        irs_chanest::channel_model::PhaseResolution::Levels(64),
    )?;
    let b_s = scenario.combining(&theta)?;
    let clean = noiseless_observation(&h, &f, &b_s);
    let noisy = measure(&scenario, &f, &b_s, &mut rng)?;
    println!(
        "aligned pilot: noiseless {:.2}, observed {:.2}",
        clean.norm(),
        noisy.norm()
    );
    let self_diff = max_abs_diff(&h, scenario.effective_channel());
    assert_eq!(self_diff, 0.0);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
