//! Seeded random positive instances for cross-validation campaigns. All
//! distribution parameters live here, fixed in code, so a (class, seed,
//! count) triple names the same campaign on every machine.
//!
//! Construction pattern: nonnegative parts are uniform; Metzler blocks
//! are a random nonnegative matrix minus a scaled identity, with the
//! shift chosen against the Perron root of the summed comparison matrix
//! so the sampled spectral abscissa lands on a known target. Stable mode
//! pins the target below zero; mixed mode lets it straddle.

use posdelay_core::model::{
    CoupledIo, CoupledSystem, DelayKernel, DelaySpec, DifferenceIo, DifferenceSystem,
    DiscreteDelayIo, DiscreteDelaySystem, DistKernel, DistributedIo, DistributedSystem,
    KernelPiece, KernelTerm, LtiIo, LtiSystem, NeutralIo, NeutralSystem, SystemModel,
};
use posdelay_core::spectral::spectral_radius_nonneg;
use posdelay_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Verdicts land on both sides of the boundary.
    Mixed,
    /// Instances are stable with a decisive margin, and carry io blocks
    /// suitable for gain computation.
    Stable,
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

const SPECTRAL_TOL: f64 = 1e-12;

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    fn usize_in(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    /// Entries uniform on [0, scale).
    fn nonneg(&mut self, rows: usize, cols: usize, scale: f64) -> Matrix {
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            entries.push(self.uniform(0.0, scale));
        }
        Matrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
    }

    /// Entries uniform on [0.05 scale, scale): strictly positive, hence
    /// irreducible as a nonnegative matrix.
    pub fn positive_matrix(&mut self, rows: usize, cols: usize, scale: f64) -> Matrix {
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            entries.push(self.uniform(0.05 * scale, scale));
        }
        Matrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
    }

    fn rho(m: &Matrix) -> f64 {
        spectral_radius_nonneg(m, SPECTRAL_TOL).map(|r| r.value).unwrap_or(0.0)
    }

    /// Random nonnegative minus scaled identity: Metzler with spectral
    /// abscissa exactly -target once `rest` (the nonnegative terms that
    /// will be added to it) is accounted for.
    fn shifted_metzler(&mut self, nonneg_part: &Matrix, rest: &Matrix, target: f64) -> Matrix {
        let s = Self::rho(&nonneg_part.add(rest)) + target;
        nonneg_part.sub(&Matrix::identity(nonneg_part.rows()).scale(s))
    }

    fn const_delays(&mut self, count: usize) -> Vec<DelaySpec> {
        (0..count).map(|_| DelaySpec::Const { h: self.uniform(0.3, 1.5) }).collect()
    }

    fn sum(ms: &[Matrix]) -> Matrix {
        let refs: Vec<&Matrix> = ms.iter().collect();
        Matrix::sum(&refs)
    }

    /// Scale a family of nonnegative matrices so their sum has the given
    /// spectral radius.
    fn scale_to_radius(&mut self, ms: &mut [Matrix], target: f64) {
        let rho = Self::rho(&Self::sum(ms));
        if rho > 1e-12 {
            let f = target / rho;
            for m in ms.iter_mut() {
                *m = m.scale(f);
            }
        }
    }

    fn abscissa_target(&mut self, mode: Mode, stable_lo: f64, stable_hi: f64, mixed_lo: f64) -> f64 {
        match mode {
            Mode::Stable => self.uniform(stable_lo, stable_hi),
            Mode::Mixed => self.uniform(mixed_lo, stable_hi),
        }
    }

    // -- per-class instances -------------------------------------------------

    pub fn lti(&mut self, mode: Mode) -> LtiSystem {
        let n = self.usize_in(2, 6);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let n0 = self.nonneg(n, n, 0.8 / n as f64);
        let target = self.abscissa_target(mode, 0.3, 1.2, -0.8);
        let a = self.shifted_metzler(&n0, &Matrix::zeros(n, n), target);
        let io = Some(LtiIo {
            e: self.nonneg(n, m, 1.0),
            c: self.nonneg(q, n, 1.0 / n as f64),
            f: self.nonneg(q, m, 0.3),
        });
        LtiSystem { a, io }
    }

    pub fn discrete(&mut self, mode: Mode) -> DiscreteDelaySystem {
        let n = self.usize_in(2, 6);
        let nd = self.usize_in(1, 3);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let a: Vec<Matrix> =
            (0..nd).map(|_| self.nonneg(n, n, 0.6 / (nd * n) as f64)).collect();
        let n0 = self.nonneg(n, n, 0.8 / n as f64);
        let target = self.abscissa_target(mode, 0.3, 1.2, -0.8);
        let a0 = self.shifted_metzler(&n0, &Self::sum(&a), target);
        let io = Some(DiscreteDelayIo {
            e_u: self.nonneg(n, m, 1.0),
            c0: self.nonneg(q, n, 1.0 / n as f64),
            c: (0..nd).map(|_| self.nonneg(q, n, 0.3 / (nd * n) as f64)).collect(),
            f_u: self.nonneg(q, m, 0.3),
        });
        DiscreteDelaySystem { a0, a, delays: self.const_delays(nd), io }
    }

    pub fn difference(&mut self, mode: Mode) -> DifferenceSystem {
        let n = self.usize_in(2, 6);
        let nd = self.usize_in(1, 3);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let mut a: Vec<Matrix> =
            (0..nd).map(|_| self.positive_matrix(n, n, 1.0 / (nd * n) as f64)).collect();
        let radius = match mode {
            Mode::Stable => self.uniform(0.25, 0.85),
            Mode::Mixed => self.uniform(0.3, 1.6),
        };
        self.scale_to_radius(&mut a, radius);
        let io = Some(DifferenceIo {
            e_u: self.nonneg(n, m, 1.0),
            c: (0..nd).map(|_| self.nonneg(q, n, 1.0 / (nd * n) as f64)).collect(),
            f_u: self.nonneg(q, m, 0.3),
        });
        DifferenceSystem { a, delays: self.const_delays(nd), io }
    }

    pub fn coupled(&mut self, mode: Mode) -> CoupledSystem {
        // the x2 difference part stays well inside radius one in both
        // modes; instability comes through the coupling loop instead, so
        // sampled trajectories always have a well-posed x2 equation
        let n1 = self.usize_in(2, 4);
        let n2 = self.usize_in(1, 3);
        let nd = self.usize_in(1, 3);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let mut c: Vec<Matrix> =
            (0..nd).map(|_| self.positive_matrix(n2, n2, 1.0 / (nd * n2) as f64)).collect();
        let cr = self.uniform(0.2, 0.7);
        self.scale_to_radius(&mut c, cr);
        let a: Vec<Matrix> =
            (0..nd).map(|_| self.nonneg(n1, n2, 0.8 / (nd * n2) as f64)).collect();
        let c0 = self.nonneg(n2, n1, 0.8 / n1 as f64);
        let n0 = self.nonneg(n1, n1, 0.8 / n1 as f64);
        let target = self.abscissa_target(mode, 0.3, 1.5, -0.8);
        let a0 = self.shifted_metzler(&n0, &Matrix::zeros(n1, n1), target);
        let io = Some(CoupledIo {
            e1: self.nonneg(n1, m, 1.0),
            e2: self.nonneg(n2, m, 0.3),
            cy0: self.nonneg(q, n1, 1.0 / n1 as f64),
            cy: (0..nd).map(|_| self.nonneg(q, n2, 0.3 / (nd * n2) as f64)).collect(),
            f_u: self.nonneg(q, m, 0.3),
        });
        CoupledSystem { a0, a, c0, c, delays: self.const_delays(nd), io }
    }

    pub fn distributed(&mut self, mode: Mode) -> DistributedSystem {
        let n = self.usize_in(2, 5);
        let nk = self.usize_in(1, 3);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let mut delays = Vec::with_capacity(nk);
        let mut kernels = Vec::with_capacity(nk);
        for _ in 0..nk {
            let h = self.uniform(0.5, 1.5);
            delays.push(DelaySpec::Const { h });
            kernels.push(self.state_kernel(n, nk, h));
        }
        let moments: Vec<Matrix> = kernels
            .iter()
            .zip(&delays)
            .map(|(k, d)| k.moment(d.h_max()))
            .collect();
        let n0 = self.nonneg(n, n, 0.8 / n as f64);
        let target = self.abscissa_target(mode, 0.3, 1.0, -0.6);
        let a0 = self.shifted_metzler(&n0, &Self::sum(&moments), target);
        let io = Some(DistributedIo {
            e_u: self.nonneg(n, m, 1.0),
            c0: self.nonneg(q, n, 1.0 / n as f64),
            out_kernels: (0..nk)
                .map(|_| DistKernel::Constant(self.nonneg(q, n, 0.2 / (nk * n) as f64)))
                .collect(),
            f_u: self.nonneg(q, m, 0.3),
        });
        DistributedSystem { a0, kernels, delays, io }
    }

    /// Either a flat matrix kernel or an explicit exponential-polynomial
    /// one on [-h, 0]. Powers stay even so the kernel is nonnegative on
    /// the negative half-line.
    fn state_kernel(&mut self, n: usize, nk: usize, h: f64) -> DistKernel {
        let scale = 0.4 / ((nk * n) as f64 * h);
        if self.rng.gen_bool(0.5) {
            return DistKernel::Constant(self.nonneg(n, n, scale));
        }
        DistKernel::Explicit(self.explicit_kernel(n, n, h, scale))
    }

    /// Explicit kernel with one or two pieces partitioning [-h, 0].
    pub fn explicit_kernel(&mut self, rows: usize, cols: usize, h: f64, scale: f64) -> DelayKernel {
        let split = self.rng.gen_bool(0.5);
        let cut = -h * self.uniform(0.3, 0.7);
        let intervals: Vec<(f64, f64)> =
            if split { vec![(-h, cut), (cut, 0.0)] } else { vec![(-h, 0.0)] };
        let pieces = intervals
            .into_iter()
            .map(|(a, b)| {
                let nterms = self.usize_in(1, 2);
                let terms = (0..nterms)
                    .map(|_| KernelTerm {
                        coeff: self.nonneg(rows, cols, scale / nterms as f64),
                        alpha: self.uniform(-1.0, 1.0),
                        power: if self.rng.gen_bool(0.5) { 0 } else { 2 },
                    })
                    .collect();
                KernelPiece { a, b, terms }
            })
            .collect();
        DelayKernel { pieces }
    }

    pub fn neutral(&mut self, mode: Mode) -> NeutralSystem {
        let n = self.usize_in(2, 5);
        let nd = self.usize_in(1, 3);
        let (m, q) = (self.usize_in(1, 2), self.usize_in(1, 2));
        let mut a_n: Vec<Matrix> =
            (0..nd).map(|_| self.positive_matrix(n, n, 1.0 / (nd * n) as f64)).collect();
        let rn = match mode {
            Mode::Stable => self.uniform(0.15, 0.7),
            Mode::Mixed => self.uniform(0.2, 1.5),
        };
        self.scale_to_radius(&mut a_n, rn);
        let n0 = self.nonneg(n, n, 0.6 / n as f64);
        let t = match mode {
            Mode::Stable => self.uniform(1.0, 2.5),
            Mode::Mixed => self.uniform(-0.5, 2.0),
        };
        let s = Self::rho(&n0) + t;
        let a0 = n0.sub(&Matrix::identity(n).scale(s));
        // positivity needs a_n a0 + a_r >= 0 entrywise, so a_r gets
        // floored at the negative part of a_n a0
        let a_r: Vec<Matrix> = a_n
            .iter()
            .map(|an| {
                let floor = Self::relu(&an.mul(&a0).scale(-1.0));
                floor.add(&self.nonneg(n, n, 0.2 / (nd * n) as f64))
            })
            .collect();
        let c_n: Vec<Matrix> =
            (0..nd).map(|_| self.nonneg(q, n, 0.1 / (nd * n) as f64)).collect();
        let c_r: Vec<Matrix> = c_n
            .iter()
            .map(|cn| {
                let floor = Self::relu(&cn.mul(&a0).scale(-1.0));
                floor.add(&self.nonneg(q, n, 0.2 / (nd * n) as f64))
            })
            .collect();
        let io = Some(NeutralIo {
            e_u: self.nonneg(n, m, 1.0),
            c0: self.nonneg(q, n, 1.0 / n as f64),
            c_n,
            c_r,
            f_u: self.nonneg(q, m, 0.3),
        });
        NeutralSystem { a0, a_n, a_r, delays: self.const_delays(nd), io }
    }

    /// Neutral instance whose delayed-derivative part has spectral radius
    /// in (1, 2): never stable, whatever the retarded part does.
    pub fn neutral_strong_failure(&mut self) -> NeutralSystem {
        let mut sys = self.neutral(Mode::Mixed);
        let target = self.uniform(1.05, 1.95);
        self.scale_to_radius(&mut sys.a_n, target);
        // restore the composite floor under the rescaled a_n
        let n = sys.a0.rows();
        let nd = sys.a_n.len();
        sys.a_r = sys
            .a_n
            .iter()
            .map(|an| {
                let floor = Self::relu(&an.mul(&sys.a0).scale(-1.0));
                floor.add(&self.nonneg(n, n, 0.2 / (nd * n) as f64))
            })
            .collect();
        sys
    }

    fn relu(m: &Matrix) -> Matrix {
        Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].max(0.0))
    }

    fn decisively_stable(model: &SystemModel) -> bool {
        match posdelay_core::analysis::analyze(model) {
            Ok(r) => {
                r.verdict == posdelay_core::analysis::Verdict::Stable
                    && r.conditions.iter().all(|c| {
                        c.status != posdelay_core::analysis::ConditionStatus::Holds
                            || c.margin >= 1e-3
                    })
            }
            Err(_) => false,
        }
    }

    fn draw(&mut self, class: &str, mode: Mode) -> Option<SystemModel> {
        Some(match class {
            "lti" => SystemModel::Lti(self.lti(mode)),
            "discrete" => SystemModel::DiscreteDelay(self.discrete(mode)),
            "difference" => SystemModel::Difference(self.difference(mode)),
            "coupled" => SystemModel::Coupled(self.coupled(mode)),
            "distributed" => SystemModel::Distributed(self.distributed(mode)),
            "neutral" => SystemModel::Neutral(self.neutral(mode)),
            _ => return None,
        })
    }

    /// One instance of the named class, or None for an unknown class
    /// name. Stable mode redraws until the verdict is stable with every
    /// holding condition clear of the boundary, so downstream gain and
    /// simulation checks are well posed.
    pub fn instance(&mut self, class: &str, mode: Mode) -> Option<SystemModel> {
        for _ in 0..200 {
            let model = self.draw(class, mode)?;
            if mode == Mode::Mixed || Self::decisively_stable(&model) {
                return Some(model);
            }
        }
        panic!("sampler found no decisively stable {class} instance in 200 draws");
    }
}
