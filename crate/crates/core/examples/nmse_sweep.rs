// Small NMSE-versus-SNR sweep printed as CSV.

use std::error::Error;

use irs_chanest::evaluation::{run_sweep, Scheme, SweepAxis, TrialConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let base = TrialConfig::default();
    let snrs = [0.0, 10.0, 20.0];
    let table = run_sweep(
        &base,
        SweepAxis::Snr,
        &snrs,
        &[Scheme::Agmp, Scheme::BeamTrainingCsi],
        20,
    )?;
    print!("{}", table.to_csv());
    for snr in snrs {
        let a = table.row(snr, Scheme::Agmp).expect("row");
        let b = table.row(snr, Scheme::BeamTrainingCsi).expect("row");
        println!(
            "# SNR {snr:>4}: agmp {:+.2} dB vs training-only {:+.2} dB",
            a.mean_nmse_db, b.mean_nmse_db
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
