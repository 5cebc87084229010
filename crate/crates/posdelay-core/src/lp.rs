//! Strict linear feasibility: find x with G x < 0 componentwise, selected
//! variables strictly positive. Decided by a two-phase dense simplex that
//! maximizes the uniform slack s subject to G x <= -s * ones over the box
//! (positive variables in [delta, 1], free variables in [-1, 1]); the
//! system is declared feasible iff the optimal slack reaches delta.
//!
//! G is normalized by its max-norm first, so verdicts are invariant under
//! positive scaling of G and `delta` reads as a relative margin. A slack
//! landing in [0, delta) is reported as marginal rather than infeasible:
//! the strict system is boundary-degenerate there and callers surface that
//! to the user instead of picking a side.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    /// A positive-variable index is out of range.
    BadIndex { index: usize, vars: usize },
    /// Simplex iteration cap; should not occur with Bland's rule on
    /// well-posed input.
    TooManyIterations,
    /// Internal invariant violated (phase-1 failed on a trivially feasible
    /// system).
    Internal(&'static str),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::BadIndex { index, vars } => {
                write!(f, "positive-variable index {index} out of range for {vars} variables")
            }
            LpError::TooManyIterations => write!(f, "simplex iteration cap exceeded"),
            LpError::Internal(msg) => write!(f, "internal LP error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LpError {}

/// Strict feasibility problem G x < 0 with `positive` listing the variable
/// indices required to be strictly positive; the rest are sign-free.
#[derive(Debug, Clone)]
pub struct StrictLp {
    pub g: Matrix,
    pub positive: Vec<usize>,
}

impl StrictLp {
    /// All variables positive, the common case for Perron-style conditions.
    pub fn all_positive(g: Matrix) -> Self {
        let n = g.cols();
        StrictLp { g, positive: (0..n).collect() }
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    /// A delta-strict point; `slack` is the uniform margin it achieves on
    /// the normalized system.
    Feasible { x: Vec<f64>, slack: f64 },
    /// Optimal slack in [0, delta): boundary case, no strict verdict.
    Marginal { x: Vec<f64>, slack: f64 },
    /// Optimal slack negative: the strict system is infeasible.
    ///
    /// The slack is maximized over the box, so for a homogeneous system it
    /// lands at the tiny positive corner and its absolute value says little;
    /// divide by the infinity norm of `x` for a scale-free infeasibility
    /// measure.
    Infeasible { x: Vec<f64>, slack: f64 },
}

impl LpOutcome {
    pub fn slack(&self) -> f64 {
        match self {
            LpOutcome::Feasible { slack, .. }
            | LpOutcome::Marginal { slack, .. }
            | LpOutcome::Infeasible { slack, .. } => *slack,
        }
    }

    /// Slack per unit of solution size: the scale-free margin that stays
    /// meaningful for infeasible homogeneous systems.
    pub fn relative_slack(&self) -> f64 {
        let (x, slack) = match self {
            LpOutcome::Feasible { x, slack }
            | LpOutcome::Marginal { x, slack }
            | LpOutcome::Infeasible { x, slack } => (x, *slack),
        };
        let norm = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if norm > 0.0 {
            slack / norm
        } else {
            slack
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible { .. })
    }
}

/// Check a strict-feasibility certificate by substitution: every positive
/// variable at least delta, and (G x) <= -delta * ||G||_inf componentwise.
pub fn verify_lp_certificate(g: &Matrix, positive: &[usize], x: &[f64], delta: f64) -> bool {
    if x.len() != g.cols() || x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    if positive.iter().any(|&i| i >= x.len() || x[i] < delta) {
        return false;
    }
    let scale = g.max_abs_entry();
    if scale == 0.0 {
        return false;
    }
    let gx = g.matvec(x);
    gx.iter().all(|&r| r <= -delta * scale)
}

/// Maximize the uniform slack and classify against delta. See module docs
/// for the exact geometry.
pub fn solve_strict_lp(lp: &StrictLp, delta: f64) -> Result<LpOutcome, LpError> {
    let m = lp.g.rows();
    let n = lp.g.cols();
    for &i in &lp.positive {
        if i >= n {
            return Err(LpError::BadIndex { index: i, vars: n });
        }
    }
    let scale = lp.g.max_abs_entry();
    if scale == 0.0 {
        // zero matrix: G x = 0 for every x, never strictly negative
        let x = (0..n)
            .map(|i| if lp.positive.contains(&i) { delta.max(0.0) } else { 0.0 })
            .collect();
        return Ok(LpOutcome::Marginal { x, slack: 0.0 });
    }
    let gh = lp.g.scale(1.0 / scale);

    let mut is_positive = vec![false; n];
    for &i in &lp.positive {
        is_positive[i] = true;
    }
    let lower: Vec<f64> = (0..n).map(|i| if is_positive[i] { delta } else { -1.0 }).collect();
    let upper = vec![1.0; n];

    // columns: x' (n) | s+ | s- | w (m) | v (n) | artificials (m + n)
    let sp = n;
    let sm = n + 1;
    let w0 = n + 2;
    let v0 = w0 + m;
    let a0 = v0 + n;
    let ncols = a0 + m + n;
    let nrows = m + n;

    let mut a = vec![vec![0.0; ncols + 1]; nrows];
    for r in 0..m {
        for j in 0..n {
            a[r][j] = gh[(r, j)];
        }
        a[r][sp] = 1.0;
        a[r][sm] = -1.0;
        a[r][w0 + r] = 1.0;
        let b: f64 = -(0..n).map(|j| gh[(r, j)] * lower[j]).sum::<f64>();
        a[r][ncols] = b;
    }
    for i in 0..n {
        let r = m + i;
        a[r][i] = 1.0;
        a[r][v0 + i] = 1.0;
        a[r][ncols] = upper[i] - lower[i];
    }
    // normalize rhs signs, then give every row an artificial basis column
    let mut basis = vec![0usize; nrows];
    for r in 0..nrows {
        if a[r][ncols] < 0.0 {
            for j in 0..=ncols {
                a[r][j] = -a[r][j];
            }
        }
        a[r][a0 + r] = 1.0;
        basis[r] = a0 + r;
    }

    // phase 1: drive artificials to zero
    let mut cost = vec![0.0; ncols];
    for j in a0..ncols {
        cost[j] = -1.0;
    }
    simplex(&mut a, &mut basis, &cost, a0, usize::MAX)?;
    let art_sum: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= a0)
        .map(|(r, _)| a[r][ncols])
        .sum();
    if art_sum > 1e-7 {
        return Err(LpError::Internal("phase-1 optimum nonzero on a box-feasible system"));
    }

    // phase 2: maximize s = s+ - s-; artificial columns are banned
    let mut cost = vec![0.0; ncols];
    cost[sp] = 1.0;
    cost[sm] = -1.0;
    simplex(&mut a, &mut basis, &cost, a0, a0)?;

    let mut xprime = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            xprime[b] = a[r][ncols];
        }
    }
    let mut x: Vec<f64> = (0..n).map(|i| (xprime[i] + lower[i]).clamp(lower[i], upper[i])).collect();
    for v in x.iter_mut() {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    // recompute the optimal slack from the solution itself
    let gx = gh.matvec(&x);
    let slack = gx.iter().map(|&r| -r).fold(f64::INFINITY, f64::min);

    if slack >= delta {
        Ok(LpOutcome::Feasible { x, slack })
    } else if slack >= 0.0 {
        Ok(LpOutcome::Marginal { x, slack })
    } else {
        Ok(LpOutcome::Infeasible { x, slack })
    }
}

/// Canonical-tableau simplex with Bland's rule. `banned_from` marks the
/// first of a suffix of columns that may never enter (artificials in
/// phase 2); pass `usize::MAX` to allow all.
fn simplex(
    a: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    art0: usize,
    banned_from: usize,
) -> Result<(), LpError> {
    let nrows = a.len();
    let ncols = cost.len();
    let pivot_tol = 1e-10;
    let _ = art0;

    // bring the tableau to canonical form for the current basis
    for r in 0..nrows {
        let b = basis[r];
        let p = a[r][b];
        if (p - 1.0).abs() > 1e-12 {
            for j in 0..=ncols {
                a[r][j] /= p;
            }
        }
        for r2 in 0..nrows {
            if r2 != r && a[r2][b].abs() > 0.0 {
                let f = a[r2][b];
                for j in 0..=ncols {
                    a[r2][j] -= f * a[r][j];
                }
            }
        }
    }

    for _iter in 0..50_000 {
        // reduced costs r_j = cost_j - sum_i cost[basis_i] * a[i][j]
        let mut entering = None;
        for j in 0..ncols {
            if j >= banned_from {
                break;
            }
            if basis.contains(&j) {
                continue;
            }
            let mut rj = cost[j];
            for r in 0..nrows {
                let cb = cost[basis[r]];
                if cb != 0.0 {
                    rj -= cb * a[r][j];
                }
            }
            if rj > pivot_tol {
                entering = Some(j);
                break; // Bland: smallest improving index
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };
        // ratio test, ties by smallest basis index (Bland)
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..nrows {
            if a[r][j] > pivot_tol {
                let ratio = a[r][ncols] / a[r][j];
                let better = match leave {
                    None => true,
                    Some(lr) => {
                        ratio < best - 1e-12 || (ratio < best + 1e-12 && basis[r] < basis[lr])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            return Err(LpError::Internal("unbounded slack on a box-bounded system"));
        };
        // pivot on (r, j)
        let p = a[r][j];
        for col in 0..=ncols {
            a[r][col] /= p;
        }
        for r2 in 0..nrows {
            if r2 != r {
                let f = a[r2][j];
                if f != 0.0 {
                    for col in 0..=ncols {
                        a[r2][col] -= f * a[r][col];
                    }
                }
            }
        }
        basis[r] = j;
    }
    Err(LpError::TooManyIterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DELTA: f64 = 1e-7;

    #[test]
    fn one_dim_feasible() {
        // -x < 0 with x > 0: trivially feasible
        let lp = StrictLp::all_positive(Matrix::from_rows(&[vec![-1.0]]).unwrap());
        let out = solve_strict_lp(&lp, DELTA).unwrap();
        match out {
            LpOutcome::Feasible { x, slack } => {
                assert!(x[0] >= DELTA);
                assert!(slack > 0.5, "slack should push to the box edge, got {slack}");
                assert!(verify_lp_certificate(&lp.g, &lp.positive, &x, DELTA));
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn one_dim_infeasible() {
        // x < 0 with x > 0: impossible
        let lp = StrictLp::all_positive(Matrix::from_rows(&[vec![1.0]]).unwrap());
        assert!(matches!(solve_strict_lp(&lp, DELTA).unwrap(), LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn zero_row_is_marginal() {
        let lp = StrictLp::all_positive(Matrix::from_rows(&[vec![0.0]]).unwrap());
        assert!(matches!(solve_strict_lp(&lp, DELTA).unwrap(), LpOutcome::Marginal { .. }));
    }

    #[test]
    fn scale_invariance_of_verdict() {
        let g = Matrix::from_rows(&[vec![-2.0, 1.0], vec![1.0, -3.0]]).unwrap();
        let lp = StrictLp::all_positive(g.clone());
        let base = solve_strict_lp(&lp, DELTA).unwrap();
        let scaled = StrictLp::all_positive(g.scale(1e-8));
        let out = solve_strict_lp(&scaled, DELTA).unwrap();
        assert_eq!(base.is_feasible(), out.is_feasible());
        assert!((base.slack() - out.slack()).abs() < 1e-9);
    }

    #[test]
    fn free_variables_can_go_negative() {
        // x0 > 0, x1 free; constraints: x1 < 0 and -x0 - x1 < 0 need
        // x1 negative but above -x0
        let g = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let lp = StrictLp { g: g.clone(), positive: vec![0] };
        match solve_strict_lp(&lp, DELTA).unwrap() {
            LpOutcome::Feasible { x, .. } => {
                assert!(x[0] > 0.0 && x[1] < 0.0);
                assert!(verify_lp_certificate(&g, &[0], &x, DELTA));
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn hurwitz_lp_for_metzler_sum() {
        // v^T A < 0 for A = [[-3+1, ...]] stable example: A-bar = A0 + A1
        let abar = Matrix::from_rows(&[vec![-2.0, 1.0], vec![0.5, -1.5]]).unwrap();
        let lp = StrictLp::all_positive(abar.transpose());
        assert!(solve_strict_lp(&lp, DELTA).unwrap().is_feasible());
        // and the unstable flip
        let bad = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let lp = StrictLp::all_positive(bad.transpose());
        assert!(matches!(solve_strict_lp(&lp, DELTA).unwrap(), LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn certificate_rejects_tampering() {
        let g = Matrix::from_rows(&[vec![-1.0, 0.2], vec![0.2, -1.0]]).unwrap();
        let lp = StrictLp::all_positive(g.clone());
        let LpOutcome::Feasible { x, .. } = solve_strict_lp(&lp, DELTA).unwrap() else {
            panic!("feasible system");
        };
        assert!(verify_lp_certificate(&g, &[0, 1], &x, DELTA));
        let mut bad = x.clone();
        bad[0] = -bad[0];
        assert!(!verify_lp_certificate(&g, &[0, 1], &bad, DELTA));
        assert!(!verify_lp_certificate(&g, &[0, 1], &[f64::NAN, 1.0], DELTA));
    }
}
