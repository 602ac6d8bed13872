//! Greedy matching pursuit with least-squares refit, and reconstruction of
//! the channel from the selected dictionary atoms.

use num_complex::Complex64;

use super::dictionary::AdaptiveDictionary;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, unvec, CMatrix, CVector};

/// Column-selection score used in the greedy step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// `|q_g^H r| / ‖q_g‖`.
    #[default]
    Normalized,
    /// `|q_g^H r|`.
    Unnormalized,
}

/// Support, coefficients and residual trace of a pursuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct PursuitOutcome {
    /// Distinct selected columns, in first-selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients aligned with `support`.
    pub coefficients: CVector,
    /// Column chosen at every iteration, repeats included.
    pub selections: Vec<usize>,
    /// `‖r_t‖` for `t = 0..=ζ`, starting with `‖y‖`.
    pub residual_history: Vec<f64>,
    pub residual: CVector,
    /// Set if any refit hit a rank-deficient support matrix.
    pub rank_deficient: bool,
    /// Complex multiply-accumulates spent in correlation scans.
    pub correlation_macs: u64,
}

impl PursuitOutcome {
    pub fn residual_norm(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("history starts with ‖y‖")
    }
}

/// Pursuit outcome with the angular matrix and channel filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub support: Vec<usize>,
    pub coefficients: CVector,
    pub residual_norm: f64,
    /// `irs_len × ue_len` angular-domain matrix.
    pub h_a: CMatrix,
    /// `n_irs × n_ue` channel `A_I H_a A_U^H`.
    pub h_hat: CMatrix,
}

fn check_inputs(y: &CVector, q: &CMatrix, zeta: usize) -> Result<()> {
    if zeta == 0 {
        return Err(Error::TooSmall {
            name: "zeta",
            min: 1,
            value: 0,
        });
    }
    if q.ncols() == 0 {
        return Err(Error::TooSmall {
            name: "dictionary columns",
            min: 1,
            value: 0,
        });
    }
    if q.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "sensing matrix has {} rows, observation has {}",
            q.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn column_norms(q: &CMatrix, rule: SelectionRule) -> Vec<f64> {
    match rule {
        SelectionRule::Normalized => q.column_iter().map(|c| c.norm()).collect(),
        SelectionRule::Unnormalized => vec![1.0; q.ncols()],
    }
}

/// Index of the best-scoring column; the lowest index wins ties and
/// zero-norm columns never score.
fn select(q: &CMatrix, norms: &[f64], r: &CVector) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (g, col) in q.column_iter().enumerate() {
        let score = if norms[g] > 0.0 {
            col.dotc(r).norm() / norms[g]
        } else {
            0.0
        };
        if score > best.1 {
            best = (g, score);
        }
    }
    best.0
}

/// Runs exactly `zeta` greedy iterations, refitting all selected
/// coefficients by least squares after each selection.
pub fn matching_pursuit(
    y: &CVector,
    q: &CMatrix,
    zeta: usize,
    rule: SelectionRule,
) -> Result<PursuitOutcome> {
    check_inputs(y, q, zeta)?;
    let norms = column_norms(q, rule);
    let mut support: Vec<usize> = Vec::with_capacity(zeta);
    let mut selections = Vec::with_capacity(zeta);
    let mut residual = y.clone();
    let mut history = vec![y.norm()];
    let mut coefficients = CVector::zeros(0);
    let mut rank_deficient = false;
    let mut macs = 0u64;
    for _ in 0..zeta {
        let g = select(q, &norms, &residual);
        macs += (q.nrows() * q.ncols()) as u64;
        selections.push(g);
        if !support.contains(&g) {
            support.push(g);
        }
        let sub = q.select_columns(support.iter());
        let (h, deficient) = lstsq(&sub, y);
        rank_deficient |= deficient;
        residual = y - &sub * &h;
        coefficients = h;
        history.push(residual.norm());
    }
    Ok(PursuitOutcome {
        support,
        coefficients,
        selections,
        residual_history: history,
        residual,
        rank_deficient,
        correlation_macs: macs,
    })
}

/// Places the coefficients in the angular matrix and forms the channel.
pub fn reconstruct(outcome: &PursuitOutcome, dict: &AdaptiveDictionary) -> Result<SparseEstimate> {
    reconstruct_from(
        &outcome.support,
        &outcome.coefficients,
        outcome.residual_norm(),
        dict,
    )
}

pub fn reconstruct_from(
    support: &[usize],
    coefficients: &CVector,
    residual_norm: f64,
    dict: &AdaptiveDictionary,
) -> Result<SparseEstimate> {
    let columns = dict.n_columns();
    if support.len() != coefficients.len() {
        return Err(Error::Dimension(format!(
            "{} support entries but {} coefficients",
            support.len(),
            coefficients.len()
        )));
    }
    let mut h_vec = CVector::zeros(columns);
    for (&g, &c) in support.iter().zip(coefficients.iter()) {
        if g >= columns {
            return Err(Error::SupportOutOfRange { index: g, columns });
        }
        h_vec[g] = c;
    }
    let h_a = unvec(&h_vec, dict.irs_len(), dict.ue_len());
    let h_hat = &dict.a_irs * &h_a * dict.a_ue.adjoint();
    Ok(SparseEstimate {
        support: support.to_vec(),
        coefficients: coefficients.clone(),
        residual_norm,
        h_a,
        h_hat,
    })
}

/// Textbook OMP over an arbitrary (typically full-range) sensing matrix.
///
/// Same contract as [`matching_pursuit`], but the projection is maintained
/// through an incrementally orthonormalized basis of the selected columns
/// (modified Gram-Schmidt with one reorthogonalization pass) and the
/// coefficients come from back substitution on the resulting triangular
/// factor.
pub fn omp_full_grid(
    y: &CVector,
    q_full: &CMatrix,
    zeta: usize,
    rule: SelectionRule,
) -> Result<PursuitOutcome> {
    check_inputs(y, q_full, zeta)?;
    let m = q_full.nrows();
    let norms = column_norms(q_full, rule);
    let mut basis: Vec<CVector> = Vec::new();
    // r_factor[j] holds column j of the upper-triangular factor
    let mut r_factor: Vec<Vec<Complex64>> = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    let mut selections = Vec::new();
    let mut residual = y.clone();
    let mut history = vec![y.norm()];
    let mut rank_deficient = false;
    let mut macs = 0u64;
    let scale = norms.iter().cloned().fold(0.0, f64::max).max(1e-300);
    for _ in 0..zeta {
        let g = select(q_full, &norms, &residual);
        macs += (m * q_full.ncols()) as u64;
        selections.push(g);
        if !support.contains(&g) {
            let mut v: CVector = q_full.column(g).into_owned();
            let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
            for _pass in 0..2 {
                for (k, e) in basis.iter().enumerate() {
                    let p = e.dotc(&v);
                    coeffs[k] += p;
                    v -= e * p;
                }
            }
            let nv = v.norm();
            if nv <= 1e-10 * scale {
                // dependent column: keep it out of the basis
                rank_deficient = true;
                support.push(g);
                coeffs.push(Complex64::new(0.0, 0.0));
                r_factor.push(coeffs);
                basis.push(CVector::zeros(m));
            } else {
                coeffs.push(Complex64::new(nv, 0.0));
                r_factor.push(coeffs);
                basis.push(v / Complex64::new(nv, 0.0));
                support.push(g);
            }
        }
        residual = y.clone();
        for e in &basis {
            let p = e.dotc(&residual);
            residual -= e * p;
        }
        history.push(residual.norm());
    }
    // back substitution R x = E^H y
    let k = support.len();
    let proj: Vec<Complex64> = basis.iter().map(|e| e.dotc(y)).collect();
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let diag = r_factor[i][i];
        if diag.norm() == 0.0 {
            continue;
        }
        let mut acc = proj[i];
        for j in i + 1..k {
            acc -= r_factor[j][i] * x[j];
        }
        x[i] = acc / diag;
    }
    Ok(PursuitOutcome {
        support,
        coefficients: CVector::from_vec(x),
        selections,
        residual_history: history,
        residual,
        rank_deficient,
        correlation_macs: macs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::complex_gaussian;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
    }

    #[test]
    fn one_sparse_exact() {
        let q = random_matrix(6, 9, 1);
        let y = q.column(4) * c(0.3, -1.2);
        let out = matching_pursuit(&y, &q, 1, SelectionRule::Normalized).unwrap();
        assert_eq!(out.support, vec![4]);
        assert!(out.residual_norm() <= 1e-10);
        assert_abs_diff_eq!(
            (out.coefficients[0] - c(0.3, -1.2)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_iteration_leaves_projection_residual() {
        // 3-column toy: y = 2 e1 + e2 with e1 · e2 overlap
        let q = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.6, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.8, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
            ],
        );
        let y = q.column(0) * c(2.0, 0.0) + q.column(2);
        let out = matching_pursuit(&y, &q, 1, SelectionRule::Normalized).unwrap();
        // correlations: |<q0,y>| = 2, |<q1,y>| = 1.2, |<q2,y>| = 1
        assert_eq!(out.support, vec![0]);
        // residual is y minus its projection onto q0: (0, 0, 1)
        assert_abs_diff_eq!(out.residual_norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.residual[2].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_monotone_and_orthogonal() {
        for seed in 0..20 {
            let q = random_matrix(10, 30, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let y = CVector::from_fn(10, |_, _| complex_gaussian(&mut rng, 1.0));
            let out = matching_pursuit(&y, &q, 6, SelectionRule::Normalized).unwrap();
            for w in out.residual_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            let sub = q.select_columns(out.support.iter());
            assert!((sub.adjoint() * &out.residual).norm() <= 1e-8);
        }
    }

    #[test]
    fn reselection_keeps_support_a_set() {
        // y lies in the span of column 0 only; later iterations see a zero
        // residual and fall back to the lowest index
        let q = random_matrix(4, 5, 9);
        let y = q.column(0) * c(1.0, 0.0);
        let out = matching_pursuit(&y, &q, 3, SelectionRule::Normalized).unwrap();
        assert_eq!(out.selections.len(), 3);
        assert!(out.support.len() <= 3);
        let mut uniq = out.support.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), out.support.len());
        assert!(out.residual_norm() < 1e-10);
    }

    #[test]
    fn duplicate_columns_flag_rank_deficiency() {
        let base = random_matrix(4, 1, 3);
        let q = CMatrix::from_fn(4, 2, |i, _| base[(i, 0)]);
        let y = base.column(0) * c(2.0, 0.0) + CVector::from_element(4, c(0.1, 0.0));
        // unnormalized rule on identical columns picks index 0 then 0 again
        let out = matching_pursuit(&y, &q, 2, SelectionRule::Unnormalized).unwrap();
        assert_eq!(out.support, vec![0]);
        let out = omp_full_grid(&y, &q, 1, SelectionRule::Normalized).unwrap();
        assert_eq!(out.support, vec![0]);
        let sub = q.clone();
        let (_, deficient) = lstsq(&sub, &y);
        assert!(deficient);
    }

    #[test]
    fn errors() {
        let q = random_matrix(3, 2, 0);
        let y = CVector::zeros(3);
        assert!(matching_pursuit(&y, &q, 0, SelectionRule::Normalized).is_err());
        assert!(matching_pursuit(&CVector::zeros(2), &q, 1, SelectionRule::Normalized).is_err());
        assert!(omp_full_grid(&y, &CMatrix::zeros(3, 0), 1, SelectionRule::Normalized).is_err());
    }

    #[test]
    fn omp_and_pursuit_agree_on_random_instances() {
        for seed in 0..30 {
            let q = random_matrix(12, 40, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 7 + 1);
            let y = CVector::from_fn(12, |_, _| complex_gaussian(&mut rng, 1.0));
            let a = matching_pursuit(&y, &q, 5, SelectionRule::Normalized).unwrap();
            let b = omp_full_grid(&y, &q, 5, SelectionRule::Normalized).unwrap();
            assert_eq!(a.selections, b.selections);
            assert_abs_diff_eq!(
                (&a.coefficients - &b.coefficients).norm(),
                0.0,
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(a.residual_norm(), b.residual_norm(), epsilon = 1e-9);
        }
    }
}
