//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits non-zero if any fail.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use irs_chanest::agmp::{self, AgmpConfig, ProbeDesign, SelectionRule};
use irs_chanest::beam_training::{build_hierarchical_codebook, AdiErrorModel, CoarseADI};
use irs_chanest::channel_model::{
    complex_gaussian, steering_vector, ArrayConfig, CascadeScenario, PathComponent, PathSet,
    PhaseResolution,
};
use irs_chanest::evaluation::{nmse, run_sweep, ResultTable, Scheme, SweepAxis, TrialConfig};
use irs_chanest::linalg::{kron, max_abs_diff, unvec, vec, CMatrix, CVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SNRS: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
const TRIALS: usize = 200;
const HARNESS_SEEDS: [u64; 5] = [1, 10_001, 20_001, 30_001, 40_001];

struct Outcome {
    passed: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn sweep(base: &TrialConfig, axis: SweepAxis, values: &[f64], schemes: &[Scheme]) -> ResultTable {
    run_sweep(base, axis, values, schemes, TRIALS).expect("sweep runs")
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let arrays = ArrayConfig::default();
    let g_tilde = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let coarse = CoarseADI::from_resolutions(
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.8..0.8),
            16,
            64,
            AdiErrorModel::Paper,
        );
        let dict = agmp::build_adaptive_grid(&coarse, g_tilde, &arrays).unwrap();
        let gu = rng.random_range(0..dict.ue_len());
        let gi = rng.random_range(0..dict.irs_len());
        let los = PathComponent::new(
            complex_gaussian(&mut rng, 1.0),
            dict.irs_grid[gi],
            dict.ue_grid[gu],
        )
        .unwrap();
        let beta = PathComponent::new(Complex64::from_polar(1.0, 1.1), -0.3, 0.6).unwrap();
        let scenario =
            CascadeScenario::new(beta, PathSet::new(vec![los], 20.0).unwrap(), arrays, 0.0)
                .unwrap();
        let cfg = AgmpConfig {
            g_tilde,
            zeta: 1,
            m_probes: Some(g_tilde * g_tilde),
            ..AgmpConfig::default()
        };
        let run = agmp::estimate(&scenario, &coarse, &cfg, &mut rng).unwrap();
        worst = worst.max(nmse(scenario.effective_channel(), &run.estimate.h_hat).unwrap());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= -250.0 && elapsed < Duration::from_secs(1),
        format!("worst NMSE {worst:.1} dB over 10 on-grid LOS cases in {elapsed:.2?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (mut tested, mut mismatches) = (0, 0);
    while tested < 100 {
        let cols = rng.random_range(6..=12);
        let zeta = if tested % 3 == 0 { 1 } else { 2 };
        let q = common::gaussian_matrix(&mut rng, 8, cols);
        let a = rng.random_range(0..cols);
        let b = (a + rng.random_range(1..cols)) % cols;
        let y: CVector = q.column(a) * complex_gaussian(&mut rng, 1.0)
            + q.column(b) * complex_gaussian(&mut rng, 1.0);
        if !common::greedy_margin_clear(&q, &y, zeta, 1e-6) {
            continue;
        }
        tested += 1;
        let mut greedy = agmp::matching_pursuit(&y, &q, zeta, SelectionRule::Normalized)
            .unwrap()
            .support;
        greedy.sort_unstable();
        if greedy != common::best_subset(&q, &y, zeta) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatches over {tested} instances in {elapsed:.2?}"),
    )
}

fn beats_benchmark() -> Outcome {
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in HARNESS_SEEDS {
        let base = TrialConfig {
            seed,
            ..TrialConfig::default()
        };
        let table = sweep(
            &base,
            SweepAxis::Snr,
            &SNRS,
            &[Scheme::Agmp, Scheme::BeamTrainingCsi],
        );
        let mut ok = true;
        let mut min_gap = f64::INFINITY;
        for snr in SNRS {
            let a = table.row(snr, Scheme::Agmp).unwrap().mean_nmse_db;
            let b = table
                .row(snr, Scheme::BeamTrainingCsi)
                .unwrap()
                .mean_nmse_db;
            ok &= a < b;
            if snr >= 10.0 {
                min_gap = min_gap.min(b - a);
                ok &= b - a >= 5.0;
            }
        }
        good += ok as usize;
        notes.push(format!(
            "seed {seed}: {} (gap >= {min_gap:.2} dB)",
            if ok { "ok" } else { "miss" }
        ));
    }
    outcome(good >= 4, format!("{good}/5 seeds; {}", notes.join(", ")))
}

fn iterations_help() -> Outcome {
    let run = |zeta| {
        let base = TrialConfig {
            zeta,
            ..TrialConfig::default()
        };
        sweep(&base, SweepAxis::Snr, &SNRS, &[Scheme::Agmp])
    };
    let (t7, t2) = (run(7), run(2));
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for snr in SNRS {
        let a = t7.row(snr, Scheme::Agmp).unwrap();
        let b = t2.row(snr, Scheme::Agmp).unwrap();
        let slack = 2.0 * a.nmse_stderr_db.hypot(b.nmse_stderr_db);
        worst = worst.max(a.mean_nmse_db - b.mean_nmse_db);
        ok &= a.mean_nmse_db <= b.mean_nmse_db + slack;
    }
    outcome(
        ok,
        format!("largest (zeta 7 - zeta 2) difference {worst:+.2} dB"),
    )
}

fn se_ordering() -> Outcome {
    let base = TrialConfig {
        snr_db: 10.0,
        ..TrialConfig::default()
    };
    let table = sweep(&base, SweepAxis::Snr, &[10.0], &Scheme::ALL);
    let se = |s| table.row(10.0, s).unwrap().se_mean;
    let (agmp, perfect) = (se(Scheme::Agmp), se(Scheme::PerfectCsi));
    let (random, no_irs) = (se(Scheme::RandomBeamforming), se(Scheme::NoIrs));
    outcome(
        random < no_irs && no_irs < agmp && agmp >= 0.9 * perfect,
        format!(
            "random {random:.2} < no_irs {no_irs:.2} < agmp {agmp:.2}; agmp/perfect = {:.3}",
            agmp / perfect
        ),
    )
}

fn coarse_grid_converges() -> Outcome {
    let base = TrialConfig {
        snr_db: 10.0,
        ..TrialConfig::default()
    };
    let table = sweep(&base, SweepAxis::GTilde, &[3.0, 9.0], &[Scheme::Agmp]);
    let g3 = table.row(3.0, Scheme::Agmp).unwrap().se_mean;
    let g9 = table.row(9.0, Scheme::Agmp).unwrap().se_mean;
    let rel = (g9 - g3).abs() / g9;
    outcome(
        rel <= 0.05,
        format!(
            "SE {g3:.3} at G=3 vs {g9:.3} at G=9 ({:.1}% apart)",
            100.0 * rel
        ),
    )
}

fn complexity_scaling() -> Outcome {
    let arrays = ArrayConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scenario = CascadeScenario::sample(&mut rng, arrays, 3, 20.0, 1.0, 0.1).unwrap();
    let los = *scenario.ue_irs_paths().los();
    let coarse =
        CoarseADI::from_resolutions(los.aoa_cos, los.aod_cos, 16, 64, AdiErrorModel::Paper);
    let (m, zeta) = (40, 7);
    let design = ProbeDesign::default();
    let sizes = [8usize, 16, 32, 64];
    let mut counts = Vec::new();
    for g in sizes {
        let dict = agmp::full_grid(g, &arrays).unwrap();
        let meas =
            agmp::build_measurements(&scenario, &coarse, &dict, m, &design, &mut rng).unwrap();
        let out = agmp::omp_full_grid(&meas.y, &meas.q, zeta, SelectionRule::Normalized).unwrap();
        counts.push(out.correlation_macs as f64);
    }
    let x: Vec<f64> = sizes.iter().map(|&g| g as f64).collect();
    let slope = common::loglog_slope(&x, &counts);
    let cfg = AgmpConfig {
        g_tilde: 5,
        zeta,
        m_probes: Some(m),
        ..AgmpConfig::default()
    };
    let run = agmp::estimate(&scenario, &coarse, &cfg, &mut rng).unwrap();
    let ratio = run.pursuit.correlation_macs as f64 / counts[3];
    outcome(
        (slope - 2.0).abs() <= 0.1 && ratio < 0.01,
        format!(
            "slope {slope:.3}; adaptive/full(64) = {:.3}%",
            100.0 * ratio
        ),
    )
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();

    let mut worst_norm = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(1..=256);
        let v = steering_vector(n, rng.random_range(-1.0..=1.0), 0.5).unwrap();
        worst_norm = worst_norm.max((v.norm() - 1.0).abs());
    }
    if worst_norm > 1e-12 {
        failures.push(format!("steering norm off by {worst_norm:e}"));
    }

    for depth in 1..=8 {
        let cb = build_hierarchical_codebook(64, depth, PhaseResolution::Levels(64), 0.5).unwrap();
        for level in &cb.levels {
            let tiles = level.first().unwrap().lower() == -1.0
                && level.last().unwrap().upper() == 1.0
                && level.windows(2).all(|w| w[0].upper() == w[1].lower());
            if !tiles {
                failures.push(format!("codebook depth {depth} does not tile"));
            }
        }
    }

    let mut worst_kron = 0.0f64;
    for _ in 0..50 {
        let (p, q, r, s) = (
            rng.random_range(1..6),
            rng.random_range(1..6),
            rng.random_range(1..6),
            rng.random_range(1..6),
        );
        let a = common::gaussian_matrix(&mut rng, p, q);
        let b = common::gaussian_matrix(&mut rng, q, r);
        let c = common::gaussian_matrix(&mut rng, r, s);
        let lhs = vec(&(&a * &b * &c));
        let rhs = kron(&c.transpose(), &a) * vec(&b);
        worst_kron = worst_kron.max((lhs - rhs).camax());
    }
    if worst_kron > 1e-10 {
        failures.push(format!("Kronecker identity off by {worst_kron:e}"));
    }

    let mut worst_orth = 0.0f64;
    for _ in 0..100 {
        let q = common::gaussian_matrix(&mut rng, 12, 20);
        let y = CVector::from_fn(12, |_, _| complex_gaussian(&mut rng, 1.0));
        let out = agmp::matching_pursuit(&y, &q, 5, SelectionRule::Normalized).unwrap();
        if out
            .residual_history
            .windows(2)
            .any(|w| w[1] > w[0] * (1.0 + 1e-12))
        {
            failures.push("residual increased".into());
        }
        let sub = q.select_columns(out.support.iter());
        worst_orth = worst_orth.max((sub.adjoint() * &out.residual).camax());
    }
    if worst_orth > 1e-8 {
        failures.push(format!("post-refit orthogonality off by {worst_orth:e}"));
    }

    for _ in 0..50 {
        let (r, c) = (rng.random_range(1..10), rng.random_range(1..10));
        let m: CMatrix = common::gaussian_matrix(&mut rng, r, c);
        if max_abs_diff(&unvec(&vec(&m), r, c), &m) != 0.0 {
            failures.push("vec/unvec round-trip".into());
        }
    }

    let base = TrialConfig {
        seed: 314,
        ..TrialConfig::default()
    };
    let csv_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_sweep(&base, SweepAxis::Snr, &[0.0, 10.0], &Scheme::ALL, 12)
                    .unwrap()
                    .to_csv()
            })
    };
    let reference = csv_with(1);
    for threads in [2, 4] {
        if csv_with(threads) != reference {
            failures.push(format!("output differs with {threads} threads"));
        }
    }

    let passed = failures.is_empty();
    let detail = if passed {
        format!("all suites hold (steering {worst_norm:.1e}, kron {worst_kron:.1e}, orth {worst_orth:.1e})")
    } else {
        failures.join("; ")
    };
    outcome(passed, detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("exact recovery", exact_recovery),
        ("oracle equivalence", oracle_equivalence),
        ("agmp beats beam-training csi", beats_benchmark),
        ("more iterations help", iterations_help),
        ("spectral efficiency ordering", se_ordering),
        ("coarse grid converges", coarse_grid_converges),
        ("complexity scaling", complexity_scaling),
        ("invariant suites", invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += !o.passed as usize;
        println!(
            "criterion {} {:<30} {}  {} [{:.1?}]",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
