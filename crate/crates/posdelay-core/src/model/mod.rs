//! Typed system classes, shape validation, and internal-positivity checks.
//!
//! Six classes are supported: delay-free LTI, discrete (pointwise) delays,
//! delay-difference equations, coupled differential-difference systems,
//! distributed delays with exponential-polynomial kernels, and neutral
//! systems. Validation is split in two: `validate` enforces structural
//! well-formedness (shapes, delay parameters, kernel family membership)
//! and fails hard; `positivity_violations` reports the entrywise sign
//! conditions that make the system internally positive, as data, so a
//! report can show exactly which entries break positivity.

pub mod kernel;
pub mod lift;

pub use kernel::{DelayKernel, KernelPiece, KernelTerm};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelError {
    pub block: String,
    pub detail: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model block `{}`: {}", self.block, self.detail)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

fn merr(block: impl Into<String>, detail: String) -> ModelError {
    ModelError { block: block.into(), detail }
}

/// How a delay channel evolves in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySpec {
    /// Fixed h ≥ 0.
    Const { h: f64 },
    /// h(t) ∈ [0, h_bar] with derivative bounded above by `rate_bound` < 1.
    TimeVarying { h_bar: f64, rate_bound: f64 },
    /// h(t) ∈ [0, h_bar], no rate information.
    TimeVaryingUnboundedRate { h_bar: f64 },
}

impl DelaySpec {
    /// Worst-case delay horizon.
    pub fn h_max(&self) -> f64 {
        match *self {
            DelaySpec::Const { h } => h,
            DelaySpec::TimeVarying { h_bar, .. } => h_bar,
            DelaySpec::TimeVaryingUnboundedRate { h_bar } => h_bar,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, DelaySpec::Const { .. })
    }

    /// The rate bound η < 1 when one is declared.
    pub fn rate_bound(&self) -> Option<f64> {
        match *self {
            DelaySpec::TimeVarying { rate_bound, .. } => Some(rate_bound),
            _ => None,
        }
    }

    fn validate(&self, index: usize) -> Result<(), ModelError> {
        let block = format!("delays[{index}]");
        match *self {
            DelaySpec::Const { h } => {
                if !(h.is_finite() && h >= 0.0) {
                    return Err(merr(block, format!("constant delay must satisfy h >= 0, got {h}")));
                }
            }
            DelaySpec::TimeVarying { h_bar, rate_bound } => {
                if !(h_bar.is_finite() && h_bar > 0.0) {
                    return Err(merr(block, format!("delay bound must be positive, got {h_bar}")));
                }
                if !(rate_bound.is_finite() && (0.0..1.0).contains(&rate_bound)) {
                    return Err(merr(
                        block,
                        format!("rate bound must lie in [0, 1), got {rate_bound}"),
                    ));
                }
            }
            DelaySpec::TimeVaryingUnboundedRate { h_bar } => {
                if !(h_bar.is_finite() && h_bar > 0.0) {
                    return Err(merr(block, format!("delay bound must be positive, got {h_bar}")));
                }
            }
        }
        Ok(())
    }
}

/// One entrywise positivity failure, addressed by block name and entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub block: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub requirement: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[({},{})] = {} violates: {}",
            self.block, self.row, self.col, self.value, self.requirement
        )
    }
}

fn push_nonneg(out: &mut Vec<Violation>, block: &str, m: &Matrix, tol: f64) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m[(i, j)] < -tol {
                out.push(Violation {
                    block: String::from(block),
                    row: i,
                    col: j,
                    value: m[(i, j)],
                    requirement: "entry must be nonnegative",
                });
            }
        }
    }
}

fn push_metzler(out: &mut Vec<Violation>, block: &str, m: &Matrix) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j && m[(i, j)] < 0.0 {
                out.push(Violation {
                    block: String::from(block),
                    row: i,
                    col: j,
                    value: m[(i, j)],
                    requirement: "off-diagonal entry must be nonnegative (Metzler)",
                });
            }
        }
    }
}

fn expect_shape(block: &str, m: &Matrix, r: usize, c: usize) -> Result<(), ModelError> {
    if m.rows() != r || m.cols() != c {
        return Err(merr(
            block,
            format!("expected {r}x{c}, got {}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

fn expect_count<T>(block: &str, v: &[T], n: usize) -> Result<(), ModelError> {
    if v.len() != n {
        return Err(merr(block, format!("expected {n} entries, got {}", v.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// delay-free LTI
// ---------------------------------------------------------------------------

/// ẋ = A x + E u, y = C x + F u.
#[derive(Debug, Clone)]
pub struct LtiSystem {
    pub a: Matrix,
    pub io: Option<LtiIo>,
}

#[derive(Debug, Clone)]
pub struct LtiIo {
    pub e: Matrix,
    pub c: Matrix,
    pub f: Matrix,
}

impl LtiSystem {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a.is_square() {
            return Err(merr("a", format!("must be square, got {}x{}", self.a.rows(), self.a.cols())));
        }
        if let Some(io) = &self.io {
            let n = self.n();
            let nu = io.e.cols();
            let ny = io.c.rows();
            expect_shape("e", &io.e, n, nu)?;
            expect_shape("c", &io.c, ny, n)?;
            expect_shape("f", &io.f, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        push_metzler(out, "a", &self.a);
        if let Some(io) = &self.io {
            push_nonneg(out, "e", &io.e, 0.0);
            push_nonneg(out, "c", &io.c, 0.0);
            push_nonneg(out, "f", &io.f, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// discrete (pointwise) delays
// ---------------------------------------------------------------------------

/// ẋ = A0 x + Σ A_i x(t−h_i) + E_u u, y = C0 x + Σ C_i x(t−h_i) + F_u u.
#[derive(Debug, Clone)]
pub struct DiscreteDelaySystem {
    pub a0: Matrix,
    pub a: Vec<Matrix>,
    pub delays: Vec<DelaySpec>,
    pub io: Option<DiscreteDelayIo>,
}

#[derive(Debug, Clone)]
pub struct DiscreteDelayIo {
    pub e_u: Matrix,
    pub c0: Matrix,
    pub c: Vec<Matrix>,
    pub f_u: Matrix,
}

impl DiscreteDelaySystem {
    pub fn n(&self) -> usize {
        self.a0.rows()
    }

    /// Σ A_i.
    pub fn a_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.a.iter().collect();
        Matrix::sum(&refs)
    }

    /// A0 + Σ A_i, the delay-free comparison matrix.
    pub fn a_total(&self) -> Matrix {
        self.a0.add(&self.a_sum())
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a0.is_square() {
            return Err(merr("a0", format!("must be square, got {}x{}", self.a0.rows(), self.a0.cols())));
        }
        let n = self.n();
        if self.a.is_empty() {
            return Err(merr("a", String::from("needs at least one delayed term; use class 'lti' otherwise")));
        }
        expect_count("delays", &self.delays, self.a.len())?;
        for (i, ai) in self.a.iter().enumerate() {
            expect_shape(&format!("a[{i}]"), ai, n, n)?;
        }
        for (i, d) in self.delays.iter().enumerate() {
            d.validate(i)?;
        }
        if let Some(io) = &self.io {
            let nu = io.e_u.cols();
            let ny = io.c0.rows();
            expect_shape("e_u", &io.e_u, n, nu)?;
            expect_shape("c0", &io.c0, ny, n)?;
            expect_count("c", &io.c, self.a.len())?;
            for (i, ci) in io.c.iter().enumerate() {
                expect_shape(&format!("c[{i}]"), ci, ny, n)?;
            }
            expect_shape("f_u", &io.f_u, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        push_metzler(out, "a0", &self.a0);
        for (i, ai) in self.a.iter().enumerate() {
            push_nonneg(out, &format!("a[{i}]"), ai, 0.0);
        }
        if let Some(io) = &self.io {
            push_nonneg(out, "e_u", &io.e_u, 0.0);
            push_nonneg(out, "c0", &io.c0, 0.0);
            for (i, ci) in io.c.iter().enumerate() {
                push_nonneg(out, &format!("c[{i}]"), ci, 0.0);
            }
            push_nonneg(out, "f_u", &io.f_u, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// delay-difference equations
// ---------------------------------------------------------------------------

/// x(t) = Σ A_i x(t−h_i) + E_u u, y = Σ C_i x(t−h_i) + F_u u.
/// Delays are constant and strictly positive.
#[derive(Debug, Clone)]
pub struct DifferenceSystem {
    pub a: Vec<Matrix>,
    pub delays: Vec<DelaySpec>,
    pub io: Option<DifferenceIo>,
}

#[derive(Debug, Clone)]
pub struct DifferenceIo {
    pub e_u: Matrix,
    pub c: Vec<Matrix>,
    pub f_u: Matrix,
}

impl DifferenceSystem {
    pub fn n(&self) -> usize {
        self.a[0].rows()
    }

    pub fn a_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.a.iter().collect();
        Matrix::sum(&refs)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.a.is_empty() {
            return Err(merr("a", String::from("needs at least one delayed term")));
        }
        if !self.a[0].is_square() {
            return Err(merr("a[0]", format!("must be square, got {}x{}", self.a[0].rows(), self.a[0].cols())));
        }
        let n = self.n();
        expect_count("delays", &self.delays, self.a.len())?;
        for (i, ai) in self.a.iter().enumerate() {
            expect_shape(&format!("a[{i}]"), ai, n, n)?;
        }
        for (i, d) in self.delays.iter().enumerate() {
            d.validate(i)?;
            match *d {
                DelaySpec::Const { h } if h > 0.0 => {}
                DelaySpec::Const { h } => {
                    return Err(merr(
                        format!("delays[{i}]"),
                        format!("difference equations need strictly positive delays, got {h}"),
                    ));
                }
                _ => {
                    return Err(merr(
                        format!("delays[{i}]"),
                        String::from("difference equations support constant delays only"),
                    ));
                }
            }
        }
        if let Some(io) = &self.io {
            let nu = io.e_u.cols();
            expect_shape("e_u", &io.e_u, n, nu)?;
            expect_count("c", &io.c, self.a.len())?;
            let ny = io.f_u.rows();
            for (i, ci) in io.c.iter().enumerate() {
                expect_shape(&format!("c[{i}]"), ci, ny, n)?;
            }
            expect_shape("f_u", &io.f_u, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        for (i, ai) in self.a.iter().enumerate() {
            push_nonneg(out, &format!("a[{i}]"), ai, 0.0);
        }
        if let Some(io) = &self.io {
            push_nonneg(out, "e_u", &io.e_u, 0.0);
            for (i, ci) in io.c.iter().enumerate() {
                push_nonneg(out, &format!("c[{i}]"), ci, 0.0);
            }
            push_nonneg(out, "f_u", &io.f_u, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// coupled differential-difference systems
// ---------------------------------------------------------------------------

/// ẋ1 = A0 x1 + Σ A_i x2(t−h_i) + E1 u
/// x2  = C0 x1 + Σ C_i x2(t−h_i) + E2 u
/// y   = Cy0 x1 + Σ Cy_i x2(t−h_i) + F_u u
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub a0: Matrix,
    pub a: Vec<Matrix>,
    pub c0: Matrix,
    pub c: Vec<Matrix>,
    pub delays: Vec<DelaySpec>,
    pub io: Option<CoupledIo>,
}

#[derive(Debug, Clone)]
pub struct CoupledIo {
    pub e1: Matrix,
    pub e2: Matrix,
    pub cy0: Matrix,
    pub cy: Vec<Matrix>,
    pub f_u: Matrix,
}

impl CoupledSystem {
    pub fn n1(&self) -> usize {
        self.a0.rows()
    }

    pub fn n2(&self) -> usize {
        self.c0.rows()
    }

    pub fn a_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.a.iter().collect();
        Matrix::sum(&refs)
    }

    pub fn c_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.c.iter().collect();
        Matrix::sum(&refs)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a0.is_square() {
            return Err(merr("a0", format!("must be square, got {}x{}", self.a0.rows(), self.a0.cols())));
        }
        let n1 = self.n1();
        let n2 = self.c0.rows();
        expect_shape("c0", &self.c0, n2, n1)?;
        if self.a.is_empty() {
            return Err(merr("a", String::from("needs at least one delayed term")));
        }
        expect_count("c", &self.c, self.a.len())?;
        expect_count("delays", &self.delays, self.a.len())?;
        for (i, ai) in self.a.iter().enumerate() {
            expect_shape(&format!("a[{i}]"), ai, n1, n2)?;
        }
        for (i, ci) in self.c.iter().enumerate() {
            expect_shape(&format!("c[{i}]"), ci, n2, n2)?;
        }
        for (i, d) in self.delays.iter().enumerate() {
            d.validate(i)?;
        }
        if let Some(io) = &self.io {
            let nu = io.e1.cols();
            let ny = io.cy0.rows();
            expect_shape("e1", &io.e1, n1, nu)?;
            expect_shape("e2", &io.e2, n2, nu)?;
            expect_shape("cy0", &io.cy0, ny, n1)?;
            expect_count("cy", &io.cy, self.a.len())?;
            for (i, ci) in io.cy.iter().enumerate() {
                expect_shape(&format!("cy[{i}]"), ci, ny, n2)?;
            }
            expect_shape("f_u", &io.f_u, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        push_metzler(out, "a0", &self.a0);
        for (i, m) in self.a.iter().enumerate() {
            push_nonneg(out, &format!("a[{i}]"), m, 0.0);
        }
        push_nonneg(out, "c0", &self.c0, 0.0);
        for (i, m) in self.c.iter().enumerate() {
            push_nonneg(out, &format!("c[{i}]"), m, 0.0);
        }
        if let Some(io) = &self.io {
            push_nonneg(out, "e1", &io.e1, 0.0);
            push_nonneg(out, "e2", &io.e2, 0.0);
            push_nonneg(out, "cy0", &io.cy0, 0.0);
            for (i, m) in io.cy.iter().enumerate() {
                push_nonneg(out, &format!("cy[{i}]"), m, 0.0);
            }
            push_nonneg(out, "f_u", &io.f_u, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// distributed delays
// ---------------------------------------------------------------------------

/// Kernel of one distributed term: either an explicit exponential-
/// polynomial kernel or the flat shorthand (constant matrix over the
/// whole window).
#[derive(Debug, Clone)]
pub enum DistKernel {
    Constant(Matrix),
    Explicit(DelayKernel),
}

impl DistKernel {
    /// ∫_{-h_bar}^0 K(θ) dθ.
    pub fn moment(&self, h_bar: f64) -> Matrix {
        match self {
            DistKernel::Constant(m) => m.scale(h_bar),
            DistKernel::Explicit(k) => k.moment(),
        }
    }

    pub fn eval(&self, theta: f64, h_bar: f64) -> Option<Matrix> {
        match self {
            DistKernel::Constant(m) => {
                if (-h_bar..=0.0).contains(&theta) {
                    Some(m.clone())
                } else {
                    None
                }
            }
            DistKernel::Explicit(k) => k.eval(theta),
        }
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        match self {
            DistKernel::Constant(m) => Some((m.rows(), m.cols())),
            DistKernel::Explicit(k) => k.dims(),
        }
    }

    fn validate(&self, block: &str, h_bar: f64, rows: usize, cols: usize) -> Result<(), ModelError> {
        match self {
            DistKernel::Constant(m) => expect_shape(block, m, rows, cols),
            DistKernel::Explicit(k) => k
                .validate(h_bar, rows, cols)
                .map_err(|e| merr(block, e.detail)),
        }
    }

    fn positivity(&self, block: &str, out: &mut Vec<Violation>) {
        match self {
            DistKernel::Constant(m) => push_nonneg(out, block, m, 0.0),
            DistKernel::Explicit(k) => {
                if let Some((theta, row, col, value)) = k.nonnegativity_violation(1e-9) {
                    out.push(Violation {
                        block: format!("{block}(theta={theta})"),
                        row,
                        col,
                        value,
                        requirement: "kernel must be nonnegative on its support",
                    });
                }
            }
        }
    }
}

/// ẋ = A0 x + Σ ∫_{-h_i}^0 K_i(θ) x(t+θ) dθ + E_u u,
/// y  = C0 x + Σ ∫_{-h_i}^0 L_i(θ) x(t+θ) dθ + F_u u.
#[derive(Debug, Clone)]
pub struct DistributedSystem {
    pub a0: Matrix,
    pub kernels: Vec<DistKernel>,
    pub delays: Vec<DelaySpec>,
    pub io: Option<DistributedIo>,
}

#[derive(Debug, Clone)]
pub struct DistributedIo {
    pub e_u: Matrix,
    pub c0: Matrix,
    pub out_kernels: Vec<DistKernel>,
    pub f_u: Matrix,
}

impl DistributedSystem {
    pub fn n(&self) -> usize {
        self.a0.rows()
    }

    /// Integrated state kernels Ā_i.
    pub fn moments(&self) -> Vec<Matrix> {
        self.kernels
            .iter()
            .zip(&self.delays)
            .map(|(k, d)| k.moment(d.h_max()))
            .collect()
    }

    /// Σ Ā_i.
    pub fn moment_sum(&self) -> Matrix {
        let ms = self.moments();
        let refs: Vec<&Matrix> = ms.iter().collect();
        Matrix::sum(&refs)
    }

    /// Integrated output kernels C̄_i (empty when there is no io block).
    pub fn out_moments(&self) -> Vec<Matrix> {
        match &self.io {
            None => Vec::new(),
            Some(io) => io
                .out_kernels
                .iter()
                .zip(&self.delays)
                .map(|(k, d)| k.moment(d.h_max()))
                .collect(),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a0.is_square() {
            return Err(merr("a0", format!("must be square, got {}x{}", self.a0.rows(), self.a0.cols())));
        }
        let n = self.n();
        if self.kernels.is_empty() {
            return Err(merr("kernels", String::from("needs at least one distributed term")));
        }
        expect_count("delays", &self.delays, self.kernels.len())?;
        for (i, d) in self.delays.iter().enumerate() {
            d.validate(i)?;
            if d.h_max() <= 0.0 {
                return Err(merr(
                    format!("delays[{i}]"),
                    String::from("distributed terms need a strictly positive window"),
                ));
            }
        }
        for (i, k) in self.kernels.iter().enumerate() {
            k.validate(&format!("kernels[{i}]"), self.delays[i].h_max(), n, n)?;
        }
        if let Some(io) = &self.io {
            let nu = io.e_u.cols();
            let ny = io.c0.rows();
            expect_shape("e_u", &io.e_u, n, nu)?;
            expect_shape("c0", &io.c0, ny, n)?;
            expect_count("out_kernels", &io.out_kernels, self.kernels.len())?;
            for (i, k) in io.out_kernels.iter().enumerate() {
                k.validate(&format!("out_kernels[{i}]"), self.delays[i].h_max(), ny, n)?;
            }
            expect_shape("f_u", &io.f_u, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        push_metzler(out, "a0", &self.a0);
        for (i, k) in self.kernels.iter().enumerate() {
            k.positivity(&format!("kernels[{i}]"), out);
        }
        if let Some(io) = &self.io {
            push_nonneg(out, "e_u", &io.e_u, 0.0);
            push_nonneg(out, "c0", &io.c0, 0.0);
            for (i, k) in io.out_kernels.iter().enumerate() {
                k.positivity(&format!("out_kernels[{i}]"), out);
            }
            push_nonneg(out, "f_u", &io.f_u, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// neutral systems
// ---------------------------------------------------------------------------

/// d/dt [x − Σ A_n,i x(t−h_i)] = A0 x + Σ A_r,i x(t−h_i) + E_u u,
/// y = C0 x + Σ [C_n,i ẋ(t−h_i) + C_r,i x(t−h_i)] + F_u u.
///
/// Neutral and retarded coefficient lists share the delay list; a term
/// present in only one sum carries a zero matrix in the other.
#[derive(Debug, Clone)]
pub struct NeutralSystem {
    pub a0: Matrix,
    pub a_n: Vec<Matrix>,
    pub a_r: Vec<Matrix>,
    pub delays: Vec<DelaySpec>,
    pub io: Option<NeutralIo>,
}

#[derive(Debug, Clone)]
pub struct NeutralIo {
    pub e_u: Matrix,
    pub c0: Matrix,
    pub c_n: Vec<Matrix>,
    pub c_r: Vec<Matrix>,
    pub f_u: Matrix,
}

impl NeutralSystem {
    pub fn n(&self) -> usize {
        self.a0.rows()
    }

    pub fn an_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.a_n.iter().collect();
        Matrix::sum(&refs)
    }

    pub fn ar_sum(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.a_r.iter().collect();
        Matrix::sum(&refs)
    }

    /// S = I − Σ A_n,i, the difference-operator matrix.
    pub fn s_matrix(&self) -> Matrix {
        Matrix::identity(self.n()).sub(&self.an_sum())
    }

    /// A_n,i A0 + A_r,i, the composite that must be nonnegative.
    pub fn composite(&self, i: usize) -> Matrix {
        self.a_n[i].mul(&self.a0).add(&self.a_r[i])
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !self.a0.is_square() {
            return Err(merr("a0", format!("must be square, got {}x{}", self.a0.rows(), self.a0.cols())));
        }
        let n = self.n();
        if self.a_n.is_empty() {
            return Err(merr("a_n", String::from("needs at least one delayed term")));
        }
        expect_count("a_r", &self.a_r, self.a_n.len())?;
        expect_count("delays", &self.delays, self.a_n.len())?;
        for (i, m) in self.a_n.iter().enumerate() {
            expect_shape(&format!("a_n[{i}]"), m, n, n)?;
        }
        for (i, m) in self.a_r.iter().enumerate() {
            expect_shape(&format!("a_r[{i}]"), m, n, n)?;
        }
        for (i, d) in self.delays.iter().enumerate() {
            d.validate(i)?;
            match *d {
                DelaySpec::Const { h } if h > 0.0 => {}
                DelaySpec::Const { h } => {
                    return Err(merr(
                        format!("delays[{i}]"),
                        format!("neutral systems need strictly positive delays, got {h}"),
                    ));
                }
                _ => {
                    return Err(merr(
                        format!("delays[{i}]"),
                        String::from("neutral systems support constant delays only"),
                    ));
                }
            }
        }
        if let Some(io) = &self.io {
            let nu = io.e_u.cols();
            let ny = io.c0.rows();
            expect_shape("e_u", &io.e_u, n, nu)?;
            expect_shape("c0", &io.c0, ny, n)?;
            expect_count("c_n", &io.c_n, self.a_n.len())?;
            expect_count("c_r", &io.c_r, self.a_n.len())?;
            for (i, m) in io.c_n.iter().enumerate() {
                expect_shape(&format!("c_n[{i}]"), m, ny, n)?;
            }
            for (i, m) in io.c_r.iter().enumerate() {
                expect_shape(&format!("c_r[{i}]"), m, ny, n)?;
            }
            expect_shape("f_u", &io.f_u, ny, nu)?;
        }
        Ok(())
    }

    fn positivity(&self, out: &mut Vec<Violation>) {
        push_metzler(out, "a0", &self.a0);
        // composites pick up rounding from the matrix product, so they get
        // a relative tolerance; raw blocks are judged exactly
        let comp_tol = 1e-12 * (1.0 + self.a0.max_abs_entry());
        for i in 0..self.a_n.len() {
            push_nonneg(out, &format!("a_n[{i}]"), &self.a_n[i], 0.0);
            push_nonneg(out, &format!("a_n[{i}]*a0 + a_r[{i}]"), &self.composite(i), comp_tol);
        }
        if let Some(io) = &self.io {
            push_nonneg(out, "e_u", &io.e_u, 0.0);
            push_nonneg(out, "c0", &io.c0, 0.0);
            for i in 0..io.c_n.len() {
                push_nonneg(out, &format!("c_n[{i}]"), &io.c_n[i], 0.0);
                let comp = io.c_n[i].mul(&self.a0).add(&io.c_r[i]);
                push_nonneg(out, &format!("c_n[{i}]*a0 + c_r[{i}]"), &comp, comp_tol);
            }
            push_nonneg(out, "f_u", &io.f_u, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// the umbrella type
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum SystemModel {
    Lti(LtiSystem),
    DiscreteDelay(DiscreteDelaySystem),
    Difference(DifferenceSystem),
    Coupled(CoupledSystem),
    Distributed(DistributedSystem),
    Neutral(NeutralSystem),
}

impl SystemModel {
    /// The class tag used in model files and reports.
    pub fn class_name(&self) -> &'static str {
        match self {
            SystemModel::Lti(_) => "lti",
            SystemModel::DiscreteDelay(_) => "discrete",
            SystemModel::Difference(_) => "difference",
            SystemModel::Coupled(_) => "coupled",
            SystemModel::Distributed(_) => "distributed",
            SystemModel::Neutral(_) => "neutral",
        }
    }

    /// Structural well-formedness: shapes, delay parameters, kernel
    /// family membership.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            SystemModel::Lti(m) => m.validate(),
            SystemModel::DiscreteDelay(m) => m.validate(),
            SystemModel::Difference(m) => m.validate(),
            SystemModel::Coupled(m) => m.validate(),
            SystemModel::Distributed(m) => m.validate(),
            SystemModel::Neutral(m) => m.validate(),
        }
    }

    /// Entrywise positivity conditions, reported as data. Empty means the
    /// system is internally positive. Call only on validated models.
    pub fn positivity_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            SystemModel::Lti(m) => m.positivity(&mut out),
            SystemModel::DiscreteDelay(m) => m.positivity(&mut out),
            SystemModel::Difference(m) => m.positivity(&mut out),
            SystemModel::Coupled(m) => m.positivity(&mut out),
            SystemModel::Distributed(m) => m.positivity(&mut out),
            SystemModel::Neutral(m) => m.positivity(&mut out),
        }
        out
    }

    pub fn is_internally_positive(&self) -> bool {
        self.positivity_violations().is_empty()
    }

    pub fn delays(&self) -> &[DelaySpec] {
        match self {
            SystemModel::Lti(_) => &[],
            SystemModel::DiscreteDelay(m) => &m.delays,
            SystemModel::Difference(m) => &m.delays,
            SystemModel::Coupled(m) => &m.delays,
            SystemModel::Distributed(m) => &m.delays,
            SystemModel::Neutral(m) => &m.delays,
        }
    }

    pub fn has_io(&self) -> bool {
        match self {
            SystemModel::Lti(m) => m.io.is_some(),
            SystemModel::DiscreteDelay(m) => m.io.is_some(),
            SystemModel::Difference(m) => m.io.is_some(),
            SystemModel::Coupled(m) => m.io.is_some(),
            SystemModel::Distributed(m) => m.io.is_some(),
            SystemModel::Neutral(m) => m.io.is_some(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn scalar_neutral_positivity_boundary() {
        // a_n*a0 + a_r = 0.25*(-2) + 0.5 = 0: positive system
        let ok = SystemModel::Neutral(NeutralSystem {
            a0: m(&[vec![-2.0]]),
            a_n: vec![m(&[vec![0.25]])],
            a_r: vec![m(&[vec![0.5]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        ok.validate().unwrap();
        assert!(ok.is_internally_positive());

        // a_r = 0.3 makes the composite -0.2: violation reported
        let bad = SystemModel::Neutral(NeutralSystem {
            a0: m(&[vec![-2.0]]),
            a_n: vec![m(&[vec![0.25]])],
            a_r: vec![m(&[vec![0.3]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        bad.validate().unwrap();
        let v = bad.positivity_violations();
        assert_eq!(v.len(), 1);
        assert!((v[0].value + 0.2).abs() < 1e-12);
        assert!(v[0].block.contains("a_n[0]"));
    }

    #[test]
    fn discrete_negative_entry_located() {
        let sys = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(&[vec![-1.0, 0.5], vec![0.0, -2.0]]),
            a: vec![m(&[vec![0.0, -0.1], vec![0.0, 0.0]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        sys.validate().unwrap();
        let v = sys.positivity_violations();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].row, v[0].col), (0, 1));
        assert_eq!(v[0].block, "a[0]");
    }

    #[test]
    fn shape_errors_name_the_block() {
        let sys = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(&[vec![-1.0, 0.0], vec![0.0, -1.0]]),
            a: vec![m(&[vec![0.1]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        let err = sys.validate().unwrap_err();
        assert_eq!(err.block, "a[0]");
    }

    #[test]
    fn difference_rejects_time_varying() {
        let sys = SystemModel::Difference(DifferenceSystem {
            a: vec![m(&[vec![0.5]])],
            delays: vec![DelaySpec::TimeVarying { h_bar: 1.0, rate_bound: 0.5 }],
            io: None,
        });
        assert!(sys.validate().is_err());
    }

    #[test]
    fn rate_bound_must_stay_below_one() {
        let sys = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(&[vec![-1.0]]),
            a: vec![m(&[vec![0.1]])],
            delays: vec![DelaySpec::TimeVarying { h_bar: 1.0, rate_bound: 1.0 }],
            io: None,
        });
        assert!(sys.validate().is_err());
    }

    #[test]
    fn distributed_shorthand_and_explicit_agree() {
        let a1 = m(&[vec![0.3, 0.1], vec![0.0, 0.2]]);
        let h = 1.7;
        let short = DistKernel::Constant(a1.clone());
        let expl = DistKernel::Explicit(DelayKernel::constant(a1.clone(), h));
        let ms = short.moment(h);
        let me = expl.moment(h);
        for i in 0..2 {
            for j in 0..2 {
                assert!((ms[(i, j)] - me[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn coupled_dimensions_mixed() {
        let sys = SystemModel::Coupled(CoupledSystem {
            a0: m(&[vec![-3.0, 1.0], vec![0.5, -2.0]]),
            a: vec![m(&[vec![0.2], vec![0.1]])],
            c0: m(&[vec![0.5, 0.0]]),
            c: vec![m(&[vec![0.3]])],
            delays: vec![DelaySpec::Const { h: 2.0 }],
            io: None,
        });
        sys.validate().unwrap();
        assert!(sys.is_internally_positive());
        if let SystemModel::Coupled(c) = &sys {
            assert_eq!((c.n1(), c.n2()), (2, 1));
        }
    }
}
