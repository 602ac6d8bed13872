// Spectral efficiency of every scheme, and how it varies with grid size.

use std::error::Error;

use irs_chanest::evaluation::{run_sweep, Scheme, SweepAxis, TrialConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let base = TrialConfig {
        snr_db: 10.0,
        seed: 500,
        ..TrialConfig::default()
    };
    let table = run_sweep(&base, SweepAxis::Snr, &[10.0], &Scheme::ALL, 30)?;
    println!("SE at 10 dB (bit/s/Hz):");
    for row in &table.rows {
        println!(
            "  {:<20} {:>6.2} +- {:.2}",
            row.scheme.as_str(),
            row.se_mean,
            row.se_stderr
        );
    }

    let grid = run_sweep(
        &base,
        SweepAxis::GTilde,
        &[3.0, 5.0, 9.0],
        &[Scheme::Agmp],
        30,
    )?;
    for row in &grid.rows {
        println!(
            "  G~={:<2} agmp SE {:.2}, NMSE {:+.2} dB",
            row.value, row.se_mean, row.mean_nmse_db
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
