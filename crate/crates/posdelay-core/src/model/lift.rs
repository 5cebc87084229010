//! Lifting of every class onto the common uncertain form
//!
//!   ẋ = A x + E w,   z = C x + F w,   w = Δ z,
//!
//! where Δ is block-diagonal with one block per delay channel. The lift
//! records the block sizes and operator class per block; analyzers consume
//! the matrices through `m_matrix` or individually.
//!
//! Two classes degenerate: a delay-free LTI system has no Δ channels
//! (`e`/`c`/`f` absent), and a difference system has no differential state
//! (`a`/`e`/`c` absent, the loop is w = Δ(F w)). Distributed channels are
//! normalized to unit static gain, so the kernel mass Ā_i sits in E and
//! each block represents the averaging operator alone.

use alloc::vec::Vec;

use crate::matrix::Matrix;

use super::{DelaySpec, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaKind {
    ConstantDelay { h: f64 },
    TimeVaryingDelay { h_bar: f64, rate_bound: Option<f64> },
    Distributed { h_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBlock {
    pub dim: usize,
    pub kind: DeltaKind,
}

impl DeltaBlock {
    fn from_spec(dim: usize, spec: &DelaySpec) -> DeltaBlock {
        let kind = match *spec {
            DelaySpec::Const { h } => DeltaKind::ConstantDelay { h },
            DelaySpec::TimeVarying { h_bar, rate_bound } => {
                DeltaKind::TimeVaryingDelay { h_bar, rate_bound: Some(rate_bound) }
            }
            DelaySpec::TimeVaryingUnboundedRate { h_bar } => {
                DeltaKind::TimeVaryingDelay { h_bar, rate_bound: None }
            }
        };
        DeltaBlock { dim, kind }
    }
}

/// The lifted (A, E, C, F) with its Δ structure. Absent matrices encode
/// zero-dimensional state or channel spaces.
#[derive(Debug, Clone)]
pub struct Lft {
    pub a: Option<Matrix>,
    pub e: Option<Matrix>,
    pub c: Option<Matrix>,
    pub f: Option<Matrix>,
    pub blocks: Vec<DeltaBlock>,
}

impl Lft {
    pub fn state_dim(&self) -> usize {
        self.a.as_ref().map_or(0, |a| a.rows())
    }

    pub fn channel_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// The delay-free verdict matrix [[A, E], [C, F − I]]; None when the
    /// state or channel space is empty and the block form degenerates.
    pub fn m_matrix(&self) -> Option<Matrix> {
        let (a, e, c, f) = (self.a.as_ref()?, self.e.as_ref()?, self.c.as_ref()?, self.f.as_ref()?);
        let q = f.rows();
        let fm = f.sub(&Matrix::identity(q));
        let top = Matrix::hstack(&[a, e]);
        let bottom = Matrix::hstack(&[c, &fm]);
        Some(Matrix::vstack(&[&top, &bottom]))
    }
}

/// Horizontal concatenation of copies of `m`.
fn repeat_h(m: &Matrix, count: usize) -> Matrix {
    let refs: Vec<&Matrix> = (0..count).map(|_| m).collect();
    Matrix::hstack(&refs)
}

/// Vertical concatenation of copies of `m`.
fn repeat_v(m: &Matrix, count: usize) -> Matrix {
    let refs: Vec<&Matrix> = (0..count).map(|_| m).collect();
    Matrix::vstack(&refs)
}

/// Build the lift for a validated model.
pub fn lift_to_lft(model: &SystemModel) -> Lft {
    match model {
        SystemModel::Lti(sys) => Lft {
            a: Some(sys.a.clone()),
            e: None,
            c: None,
            f: None,
            blocks: Vec::new(),
        },
        SystemModel::DiscreteDelay(sys) => {
            let n = sys.n();
            let nq = n * sys.a.len();
            let refs: Vec<&Matrix> = sys.a.iter().collect();
            Lft {
                a: Some(sys.a0.clone()),
                e: Some(Matrix::hstack(&refs)),
                c: Some(repeat_v(&Matrix::identity(n), sys.a.len())),
                f: Some(Matrix::zeros(nq, nq)),
                blocks: sys.delays.iter().map(|d| DeltaBlock::from_spec(n, d)).collect(),
            }
        }
        SystemModel::Difference(sys) => {
            let n = sys.n();
            let refs: Vec<&Matrix> = sys.a.iter().collect();
            let row = Matrix::hstack(&refs);
            Lft {
                a: None,
                e: None,
                c: None,
                f: Some(repeat_v(&row, sys.a.len())),
                blocks: sys.delays.iter().map(|d| DeltaBlock::from_spec(n, d)).collect(),
            }
        }
        SystemModel::Coupled(sys) => {
            let n2 = sys.n2();
            let arefs: Vec<&Matrix> = sys.a.iter().collect();
            let crefs: Vec<&Matrix> = sys.c.iter().collect();
            let crow = Matrix::hstack(&crefs);
            Lft {
                a: Some(sys.a0.clone()),
                e: Some(Matrix::hstack(&arefs)),
                c: Some(repeat_v(&sys.c0, sys.c.len())),
                f: Some(repeat_v(&crow, sys.c.len())),
                blocks: sys.delays.iter().map(|d| DeltaBlock::from_spec(n2, d)).collect(),
            }
        }
        SystemModel::Distributed(sys) => {
            let n = sys.n();
            let moments = sys.moments();
            let refs: Vec<&Matrix> = moments.iter().collect();
            let nq = n * moments.len();
            Lft {
                a: Some(sys.a0.clone()),
                e: Some(Matrix::hstack(&refs)),
                c: Some(repeat_v(&Matrix::identity(n), moments.len())),
                f: Some(Matrix::zeros(nq, nq)),
                blocks: sys
                    .delays
                    .iter()
                    .map(|d| DeltaBlock {
                        dim: n,
                        kind: DeltaKind::Distributed { h_bar: d.h_max() },
                    })
                    .collect(),
            }
        }
        SystemModel::Neutral(sys) => {
            let n = sys.n();
            let nn = sys.a_n.len();
            let comps: Vec<Matrix> = (0..nn).map(|i| sys.composite(i)).collect();
            let crefs: Vec<&Matrix> = comps.iter().collect();
            let frows: Vec<Matrix> = sys.a_n.iter().map(|ani| repeat_h(ani, nn)).collect();
            let frefs: Vec<&Matrix> = frows.iter().collect();
            Lft {
                a: Some(sys.a0.clone()),
                e: Some(repeat_h(&Matrix::identity(n), nn)),
                c: Some(Matrix::vstack(&crefs)),
                f: Some(Matrix::vstack(&frefs)),
                blocks: sys.delays.iter().map(|d| DeltaBlock::from_spec(n, d)).collect(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        DifferenceSystem, DiscreteDelaySystem, CoupledSystem, NeutralSystem, SystemModel,
    };
    use alloc::vec;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn discrete_two_delays_three_states() {
        let a1 = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 * 0.01);
        let a2 = Matrix::from_fn(3, 3, |i, j| ((i + j) % 2) as f64 * 0.1);
        let sys = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: Matrix::from_fn(3, 3, |i, j| if i == j { -2.0 } else { 0.1 }),
            a: vec![a1.clone(), a2.clone()],
            delays: vec![DelaySpec::Const { h: 0.5 }, DelaySpec::Const { h: 1.5 }],
            io: None,
        });
        let lft = lift_to_lft(&sys);
        let e = lft.e.unwrap();
        assert_eq!((e.rows(), e.cols()), (3, 6));
        assert_eq!(e[(1, 2)], a1[(1, 2)]);
        assert_eq!(e[(1, 5)], a2[(1, 2)]);
        let c = lft.c.unwrap();
        assert_eq!((c.rows(), c.cols()), (6, 3));
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(3, 0)], 1.0);
        assert_eq!(c[(3, 1)], 0.0);
        assert_eq!(lft.f.unwrap().max_abs_entry(), 0.0);
        assert_eq!(lft.blocks.len(), 2);
        assert_eq!(lft.blocks[0].dim, 3);
    }

    #[test]
    fn scalar_neutral_lift_values() {
        // a0=-2, a_r=0.5, a_n=0.25: C = a_n a0 + a_r = 0, F = a_n, E = 1
        let sys = SystemModel::Neutral(NeutralSystem {
            a0: m(&[vec![-2.0]]),
            a_n: vec![m(&[vec![0.25]])],
            a_r: vec![m(&[vec![0.5]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        let lft = lift_to_lft(&sys);
        assert_eq!(lft.e.unwrap()[(0, 0)], 1.0);
        assert!(lft.c.unwrap()[(0, 0)].abs() < 1e-15);
        assert_eq!(lft.f.unwrap()[(0, 0)], 0.25);
    }

    #[test]
    fn coupled_lift_structure() {
        let sys = SystemModel::Coupled(CoupledSystem {
            a0: m(&[vec![-3.0, 1.0], vec![0.5, -2.0]]),
            a: vec![m(&[vec![0.2], vec![0.1]]), m(&[vec![0.0], vec![0.3]])],
            c0: m(&[vec![0.5, 0.25]]),
            c: vec![m(&[vec![0.3]]), m(&[vec![0.1]])],
            delays: vec![DelaySpec::Const { h: 1.0 }, DelaySpec::Const { h: 2.0 }],
            io: None,
        });
        let lft = lift_to_lft(&sys);
        let c = lft.c.unwrap();
        // ones ⊗ C0: both row blocks equal C0
        assert_eq!((c.rows(), c.cols()), (2, 2));
        assert_eq!(c[(0, 0)], 0.5);
        assert_eq!(c[(1, 0)], 0.5);
        let f = lft.f.unwrap();
        // ones ⊗ [C1 C2]
        assert_eq!(f[(0, 0)], 0.3);
        assert_eq!(f[(1, 0)], 0.3);
        assert_eq!(f[(0, 1)], 0.1);
        assert_eq!(f[(1, 1)], 0.1);
    }

    #[test]
    fn difference_is_static() {
        let sys = SystemModel::Difference(DifferenceSystem {
            a: vec![m(&[vec![0.4]]), m(&[vec![0.3]])],
            delays: vec![DelaySpec::Const { h: 1.0 }, DelaySpec::Const { h: 1.4 }],
            io: None,
        });
        let lft = lift_to_lft(&sys);
        assert!(lft.a.is_none());
        assert_eq!(lft.state_dim(), 0);
        assert_eq!(lft.channel_dim(), 2);
        let f = lft.f.unwrap();
        assert_eq!((f.rows(), f.cols()), (2, 2));
        // both row blocks carry [A1 A2]
        assert_eq!(f[(0, 0)], 0.4);
        assert_eq!(f[(1, 0)], 0.4);
        assert_eq!(f[(0, 1)], 0.3);
        assert_eq!(f[(1, 1)], 0.3);
    }

    #[test]
    fn positive_model_lifts_positive() {
        let sys = SystemModel::Neutral(NeutralSystem {
            a0: m(&[vec![-2.0, 0.5], vec![0.25, -3.0]]),
            a_n: vec![m(&[vec![0.2, 0.0], vec![0.0, 0.1]])],
            a_r: vec![m(&[vec![0.5, 0.1], vec![0.05, 0.4]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        assert!(sys.is_internally_positive(), "fixture must be positive");
        let lft = lift_to_lft(&sys);
        assert!(lft.a.unwrap().is_metzler(0.0));
        assert!(lft.e.unwrap().is_nonnegative(0.0));
        assert!(lft.c.unwrap().is_nonnegative(1e-12));
        assert!(lft.f.unwrap().is_nonnegative(0.0));
    }

    #[test]
    fn m_matrix_shape() {
        let sys = SystemModel::DiscreteDelay(DiscreteDelaySystem {
            a0: m(&[vec![-2.0]]),
            a: vec![m(&[vec![1.0]])],
            delays: vec![DelaySpec::Const { h: 1.0 }],
            io: None,
        });
        let lft = lift_to_lft(&sys);
        let mm = lft.m_matrix().unwrap();
        // [[-2, 1], [1, -1]]
        assert_eq!(mm[(0, 0)], -2.0);
        assert_eq!(mm[(0, 1)], 1.0);
        assert_eq!(mm[(1, 0)], 1.0);
        assert_eq!(mm[(1, 1)], -1.0);
    }
}
