//! Independent oracles shared by the integration and acceptance targets.
//!
//! Least squares here goes through hand-written normal equations (Cramer's
//! rule for one or two columns) so it shares no code with the library solver.
#![allow(dead_code)]

use irs_chanest::channel_model::complex_gaussian;
use irs_chanest::linalg::{CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;

/// Residual norm of the least-squares fit of `y` on the given columns.
pub fn subset_residual(q: &CMatrix, y: &CVector, cols: &[usize]) -> f64 {
    let c: Vec<CVector> = cols.iter().map(|&i| q.column(i).into_owned()).collect();
    match c.len() {
        1 => {
            let g = c[0].dotc(&c[0]);
            let h = c[0].dotc(y) / g;
            (y - &c[0] * h).norm()
        }
        2 => {
            let (g11, g12) = (c[0].dotc(&c[0]), c[0].dotc(&c[1]));
            let (g21, g22) = (c[1].dotc(&c[0]), c[1].dotc(&c[1]));
            let (b1, b2) = (c[0].dotc(y), c[1].dotc(y));
            let det = g11 * g22 - g12 * g21;
            let h1 = (b1 * g22 - g12 * b2) / det;
            let h2 = (g11 * b2 - g21 * b1) / det;
            (y - &c[0] * h1 - &c[1] * h2).norm()
        }
        n => panic!("oracle handles one or two columns, got {n}"),
    }
}

/// Exhaustive search over all `zeta`-subsets; returns the sorted best support.
pub fn best_subset(q: &CMatrix, y: &CVector, zeta: usize) -> Vec<usize> {
    let n = q.ncols();
    let mut best = (f64::INFINITY, Vec::new());
    let mut consider = |cols: Vec<usize>| {
        let r = subset_residual(q, y, &cols);
        if r < best.0 {
            best = (r, cols);
        }
    };
    match zeta {
        1 => (0..n).for_each(|i| consider(vec![i])),
        2 => {
            for i in 0..n {
                for j in i + 1..n {
                    consider(vec![i, j]);
                }
            }
        }
        z => panic!("oracle handles zeta <= 2, got {z}"),
    }
    best.1
}

/// True when every greedy step has a normalized-correlation gap above `gap`.
pub fn greedy_margin_clear(q: &CMatrix, y: &CVector, zeta: usize, gap: f64) -> bool {
    let mut chosen: Vec<usize> = Vec::new();
    let mut r = y.clone();
    for _ in 0..zeta {
        let mut scores: Vec<(f64, usize)> = (0..q.ncols())
            .map(|g| {
                let c = q.column(g);
                (c.dotc(&r).norm() / c.norm(), g)
            })
            .collect();
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        if scores[0].0 - scores[1].0 <= gap {
            return false;
        }
        chosen.push(scores[0].1);
        r = project_out(q, y, &chosen);
    }
    true
}

/// Residual vector of `y` after projecting onto the chosen columns.
fn project_out(q: &CMatrix, y: &CVector, cols: &[usize]) -> CVector {
    // Gram-Schmidt on the (at most two) chosen columns
    let mut basis: Vec<CVector> = Vec::new();
    for &i in cols {
        let mut v: CVector = q.column(i).into_owned();
        for e in &basis {
            let p = e.dotc(&v);
            v -= e * p;
        }
        let n = v.norm();
        basis.push(v / Complex64::new(n, 0.0));
    }
    let mut r = y.clone();
    for e in &basis {
        let p = e.dotc(&r);
        r -= e * p;
    }
    r
}

/// Random `rows × cols` complex Gaussian matrix.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
