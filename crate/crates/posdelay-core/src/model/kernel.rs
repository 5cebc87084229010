//! Distributed-delay kernels: piecewise exponential-polynomial matrix
//! functions B(θ) = Σ_k B_k e^{αθ} θ^k on subintervals of [−h̄, 0].
//!
//! The family is closed under the only integral the analyses need,
//! ∫ B(θ) dθ, which is computed in closed form. Constant kernels are the
//! degenerate case power = 0, α = 0, and infinite-support kernels are
//! handled upstream by truncation with `tail_mass` bounding the discarded
//! part.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelError {
    pub detail: String,
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid kernel: {}", self.detail)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for KernelError {}

fn kerr(detail: String) -> KernelError {
    KernelError { detail }
}

/// One summand B_k e^{αθ} θ^k. Coefficient matrices are entrywise
/// nonnegative; sign variation over θ comes only from odd powers on the
/// negative half-line.
#[derive(Debug, Clone)]
pub struct KernelTerm {
    pub coeff: Matrix,
    pub alpha: f64,
    pub power: u32,
}

/// A term collection supported on [a, b] ⊆ [−h̄, 0].
#[derive(Debug, Clone)]
pub struct KernelPiece {
    pub a: f64,
    pub b: f64,
    pub terms: Vec<KernelTerm>,
}

#[derive(Debug, Clone)]
pub struct DelayKernel {
    pub pieces: Vec<KernelPiece>,
}

/// Largest exponent magnitude we integrate before e^{αθ} risks overflow
/// in intermediates.
const MAX_ALPHA_SPAN: f64 = 500.0;
const MAX_POWER: u32 = 20;

impl DelayKernel {
    /// Flat kernel equal to `matrix` on all of [−h_bar, 0].
    pub fn constant(matrix: Matrix, h_bar: f64) -> DelayKernel {
        DelayKernel {
            pieces: alloc::vec![KernelPiece {
                a: -h_bar,
                b: 0.0,
                terms: alloc::vec![KernelTerm { coeff: matrix, alpha: 0.0, power: 0 }],
            }],
        }
    }

    /// Common matrix shape of every coefficient, from the first term.
    pub fn dims(&self) -> Option<(usize, usize)> {
        let t = self.pieces.first()?.terms.first()?;
        Some((t.coeff.rows(), t.coeff.cols()))
    }

    /// Shape, interval, and coefficient-sign validation against the delay
    /// horizon `h_bar` and the expected coefficient shape.
    pub fn validate(&self, h_bar: f64, rows: usize, cols: usize) -> Result<(), KernelError> {
        if !(h_bar.is_finite() && h_bar > 0.0) {
            return Err(kerr(format!("delay horizon must be positive and finite, got {h_bar}")));
        }
        if self.pieces.is_empty() {
            return Err(kerr(String::from("kernel has no pieces; use a constant zero kernel instead")));
        }
        let slop = 1e-12 * h_bar.max(1.0);
        for (pi, piece) in self.pieces.iter().enumerate() {
            if !(piece.a.is_finite() && piece.b.is_finite()) || piece.a >= piece.b {
                return Err(kerr(format!(
                    "piece {pi} interval [{}, {}] is not a proper interval",
                    piece.a, piece.b
                )));
            }
            if piece.a < -h_bar - slop || piece.b > slop {
                return Err(kerr(format!(
                    "piece {pi} interval [{}, {}] leaves the delay window [-{h_bar}, 0]",
                    piece.a, piece.b
                )));
            }
            if piece.terms.is_empty() {
                return Err(kerr(format!("piece {pi} has no terms")));
            }
            for (ti, term) in piece.terms.iter().enumerate() {
                if term.coeff.rows() != rows || term.coeff.cols() != cols {
                    return Err(kerr(format!(
                        "piece {pi} term {ti} coefficient is {}x{}, expected {rows}x{cols}",
                        term.coeff.rows(),
                        term.coeff.cols()
                    )));
                }
                if !term.coeff.is_nonnegative(0.0) {
                    return Err(kerr(format!(
                        "piece {pi} term {ti} has a negative coefficient entry"
                    )));
                }
                if !term.alpha.is_finite() || math::abs(term.alpha) * h_bar > MAX_ALPHA_SPAN {
                    return Err(kerr(format!(
                        "piece {pi} term {ti} exponent {} too stiff for horizon {h_bar}",
                        term.alpha
                    )));
                }
                if term.power > MAX_POWER {
                    return Err(kerr(format!(
                        "piece {pi} term {ti} power {} exceeds the supported maximum {MAX_POWER}",
                        term.power
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pointwise value at θ; pieces are summed where they overlap.
    pub fn eval(&self, theta: f64) -> Option<Matrix> {
        let (r, c) = self.dims()?;
        let mut out = Matrix::zeros(r, c);
        let mut hit = false;
        for piece in &self.pieces {
            if theta < piece.a || theta > piece.b {
                continue;
            }
            hit = true;
            for term in &piece.terms {
                let s = math::exp(term.alpha * theta) * math::ipow(theta, term.power);
                out = out.add(&term.coeff.scale(s));
            }
        }
        if hit {
            Some(out)
        } else {
            None
        }
    }

    /// Exact ∫ B(θ) dθ over all pieces.
    pub fn moment(&self) -> Matrix {
        let (r, c) = self.dims().expect("validated kernel has at least one term");
        let mut out = Matrix::zeros(r, c);
        for piece in &self.pieces {
            for term in &piece.terms {
                let m = scalar_moment(piece.a, piece.b, term.alpha, term.power);
                out = out.add(&term.coeff.scale(m));
            }
        }
        out
    }

    /// First entrywise-negativity violation found by dense sampling, or
    /// None. Pieces whose terms all carry even powers are nonnegative by
    /// construction (coefficients are nonnegative and e^{αθ}θ^{2m} ≥ 0)
    /// and are skipped; others are sampled at 129 points including the
    /// endpoints.
    pub fn nonnegativity_violation(&self, tol: f64) -> Option<(f64, usize, usize, f64)> {
        for piece in &self.pieces {
            if piece.terms.iter().all(|t| t.power % 2 == 0) {
                continue;
            }
            let samples = 129usize;
            for s in 0..samples {
                let frac = s as f64 / (samples - 1) as f64;
                let theta = piece.a + (piece.b - piece.a) * frac;
                let val = self.eval(theta).expect("theta inside piece");
                let scale = 1.0 + val.max_abs_entry();
                for i in 0..val.rows() {
                    for j in 0..val.cols() {
                        if val[(i, j)] < -tol * scale {
                            return Some((theta, i, j, val[(i, j)]));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Exact ∫_a^b θ^k e^{αθ} dθ.
///
/// Substituting θ = a + t and expanding the binomial reduces to
/// J_j = ∫_0^c t^j e^{αt} dt with c = b − a, which is evaluated by a
/// short power series when |α|c ≤ 1 (immune to the subtractive
/// cancellation the parts recursion suffers near α = 0) and by the
/// upward parts recursion seeded with expm1 otherwise.
pub fn scalar_moment(a: f64, b: f64, alpha: f64, power: u32) -> f64 {
    let c = b - a;
    debug_assert!(c >= 0.0);
    let k = power as usize;
    let mut j_vals = alloc::vec![0.0f64; k + 1];
    if math::abs(alpha) * c <= 1.0 {
        for (j, slot) in j_vals.iter_mut().enumerate() {
            let mut term = math::ipow(c, j as u32 + 1) / (j as f64 + 1.0);
            let mut sum = term;
            for m in 1..64 {
                let mf = m as f64;
                term *= alpha * c * (j as f64 + mf) / (mf * (j as f64 + mf + 1.0));
                sum += term;
                if math::abs(term) <= 1e-18 * math::abs(sum) {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        j_vals[0] = math::expm1(alpha * c) / alpha;
        let eac = math::exp(alpha * c);
        for j in 1..=k {
            j_vals[j] = (math::ipow(c, j as u32) * eac - j as f64 * j_vals[j - 1]) / alpha;
        }
    }
    // moment = e^{αa} Σ_j C(k,j) a^{k−j} J_j
    let mut binom = 1.0f64; // C(k, 0)
    let mut sum = 0.0;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        sum += binom * math::ipow(a, (k - j) as u32) * j_vals[j];
    }
    math::exp(alpha * a) * sum
}

/// Truncation bound for kernels on (−∞, 0]: ∫_{−∞}^{−cutoff} |θ|^k e^{αθ} dθ
/// for a decaying term (α > 0). Scale by ‖B_k‖ to bound the mass a finite
/// representation discards.
pub fn tail_mass(alpha: f64, power: u32, cutoff: f64) -> f64 {
    assert!(alpha > 0.0, "tail only converges for decaying terms");
    assert!(cutoff >= 0.0);
    // ∫_cutoff^∞ s^k e^{−αs} ds = e^{−α c} (k!/α^{k+1}) Σ_{m≤k} (αc)^m / m!
    let k = power as usize;
    let mut fact = 1.0;
    for m in 1..=k {
        fact *= m as f64;
    }
    let mut partial = 0.0;
    let mut term = 1.0;
    for m in 0..=k {
        if m > 0 {
            term *= alpha * cutoff / m as f64;
        }
        partial += term;
    }
    math::exp(-alpha * cutoff) * fact / math::ipow(alpha, power + 1) * partial
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar_kernel(alpha: f64, power: u32, a: f64, b: f64) -> DelayKernel {
        DelayKernel {
            pieces: vec![KernelPiece {
                a,
                b,
                terms: vec![KernelTerm {
                    coeff: Matrix::from_rows(&[vec![1.0]]).unwrap(),
                    alpha,
                    power,
                }],
            }],
        }
    }

    #[test]
    fn exponential_on_unit_interval() {
        // ∫_{-1}^0 e^{2θ} dθ = (1 − e^{−2})/2
        let k = scalar_kernel(2.0, 0, -1.0, 0.0);
        let m = k.moment();
        let expect = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((m[(0, 0)] - expect).abs() < 1e-15, "got {}", m[(0, 0)]);
    }

    #[test]
    fn constant_kernel_mass_is_width() {
        let a1 = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let k = DelayKernel::constant(a1.clone(), 1.8);
        let m = k.moment();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - 1.8 * a1[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadratic_times_exponential() {
        // ∫_{-1}^0 θ² e^{−θ} dθ = e − 2
        let k = scalar_kernel(-1.0, 2, -1.0, 0.0);
        let m = k.moment();
        let expect = core::f64::consts::E - 2.0;
        assert!((m[(0, 0)] - expect).abs() < 1e-14, "got {}", m[(0, 0)]);
    }

    #[test]
    fn stiff_exponent_uses_recursion() {
        // ∫_{-1}^0 θ² e^{10θ} dθ = [e^{10θ}(θ²/10 − 2θ/100 + 2/1000)]_{-1}^0
        let k = scalar_kernel(10.0, 2, -1.0, 0.0);
        let m = k.moment();
        let e10 = (-10.0f64).exp();
        let expect = 2.0 / 1000.0 - e10 * (0.1 + 0.02 + 0.002);
        assert!((m[(0, 0)] - expect).abs() < 1e-15 * expect.abs().max(1.0), "got {}", m[(0, 0)]);
    }

    #[test]
    fn moment_additive_over_split() {
        let whole = scalar_kernel(-0.7, 3, -2.0, 0.0).moment()[(0, 0)];
        let left = scalar_kernel(-0.7, 3, -2.0, -0.8).moment()[(0, 0)];
        let right = scalar_kernel(-0.7, 3, -0.8, 0.0).moment()[(0, 0)];
        assert!((whole - (left + right)).abs() < 1e-13 * whole.abs().max(1.0));
    }

    #[test]
    fn odd_power_triggers_sampling() {
        // θ e^{0·θ} is negative on [−1,0); coefficient 1 ≥ 0 but the
        // kernel itself dips below zero
        let k = scalar_kernel(0.0, 1, -1.0, 0.0);
        let v = k.nonnegativity_violation(1e-9);
        assert!(v.is_some());
        // 1 + θ stays nonnegative on [−1, 0]
        let ok = DelayKernel {
            pieces: vec![KernelPiece {
                a: -1.0,
                b: 0.0,
                terms: vec![
                    KernelTerm { coeff: Matrix::from_rows(&[vec![1.0]]).unwrap(), alpha: 0.0, power: 0 },
                    KernelTerm { coeff: Matrix::from_rows(&[vec![1.0]]).unwrap(), alpha: 0.0, power: 1 },
                ],
            }],
        };
        assert!(ok.nonnegativity_violation(1e-9).is_none());
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let k = scalar_kernel(0.0, 0, -1.0, 0.0);
        assert!(k.validate(1.0, 1, 1).is_ok());
        assert!(k.validate(0.5, 1, 1).is_err(), "interval leaves window");
        assert!(k.validate(1.0, 2, 2).is_err(), "shape mismatch");
        let neg = DelayKernel {
            pieces: vec![KernelPiece {
                a: -1.0,
                b: 0.0,
                terms: vec![KernelTerm {
                    coeff: Matrix::from_rows(&[vec![-1.0]]).unwrap(),
                    alpha: 0.0,
                    power: 0,
                }],
            }],
        };
        assert!(neg.validate(1.0, 1, 1).is_err(), "negative coefficient");
    }

    #[test]
    fn tail_mass_matches_hand_value() {
        // ∫_1^∞ s e^{−2s} ds = e^{−2}(1/2 + 1/4)·… = e^{−2}·(2·1+1)/4
        let t = tail_mass(2.0, 1, 1.0);
        let expect = (-2.0f64).exp() * (1.0 / 4.0) * (1.0 + 2.0);
        assert!((t - expect).abs() < 1e-15);
    }
}
