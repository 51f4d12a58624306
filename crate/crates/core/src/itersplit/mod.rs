//! Iterative operator splitting for `c' = (M1 + M2) c`.
//!
//! On every step of length `tau` a sequence of iterates is computed, each one
//! solving a sub-problem in which one operator acts implicitly and the other
//! contributes through the previous iterate. See [`Scheme`] for the orders in
//! which the two sub-problems are visited.

mod complex;
mod engine;
mod multi;

use std::fmt;
use std::str::FromStr;

pub use complex::{iterate_complex, ComplexSplitConfig, ComplexSplitPair, CouplingLag};
pub use engine::{Samples, DIVERGENCE_LIMIT};
pub use multi::{solve_multi, step_count, RootScheme, Trajectory};

use crate::error::{Error, Result};
use crate::matkernel::{check_finite, check_square, diag_split, embed, ComplexMatrix, RealMatrix, RealVector};
use engine::{fused_pair, sweep, Op, SourceTerm};

/// Upper bound on sweeps per step.
pub const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Every sweep treats the first operator implicitly.
    OneSideFirst,
    /// Every sweep treats the second operator implicitly.
    OneSideSecond,
    /// Alternates first then second; one sweep is the pair.
    TwoSide,
    /// [`Scheme::TwoSide`] computed in a single pass per pair.
    TwoSideFused,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::OneSideFirst, Scheme::OneSideSecond, Scheme::TwoSide, Scheme::TwoSideFused];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OneSideFirst => "oneside-a",
            Scheme::OneSideSecond => "oneside-b",
            Scheme::TwoSide => "twoside",
            Scheme::TwoSideFused => "twoside-fused",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown scheme '{s}' (expected oneside-a, oneside-b, twoside or twoside-fused)"
            ))
        })
    }
}

/// Iterate that seeds the first sweep of each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// Constant equal to the state at the start of the step.
    #[default]
    StepStart,
    Zero,
}

impl fmt::Display for InitialGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialGuess::StepStart => "step-start",
            InitialGuess::Zero => "zero",
        })
    }
}

impl FromStr for InitialGuess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step-start" => Ok(InitialGuess::StepStart),
            "zero" => Ok(InitialGuess::Zero),
            _ => Err(Error::InvalidConfig(format!("unknown initial guess '{s}' (expected step-start or zero)"))),
        }
    }
}

impl InitialGuess {
    pub(crate) fn samples(self, c_n: &[f64], nodes: usize) -> Samples {
        match self {
            InitialGuess::StepStart => Samples::constant(c_n, nodes),
            InitialGuess::Zero => Samples::zeros(c_n.len(), nodes),
        }
    }
}

/// Which operator is implicit in a sub-problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Active {
    First,
    Second,
}

/// The two real operators of a splitting, with cached kernels.
#[derive(Debug, Clone)]
pub struct SplitPair {
    first: RealMatrix,
    second: RealMatrix,
    ops: [Op; 2],
}

impl SplitPair {
    pub fn new(first: RealMatrix, second: RealMatrix) -> Result<Self> {
        check_square(&first)?;
        check_square(&second)?;
        check_finite(&first)?;
        check_finite(&second)?;
        if first.shape() != second.shape() {
            return Err(Error::Dimension(format!(
                "split operators are {}x{} and {}x{}",
                first.nrows(),
                first.ncols(),
                second.nrows(),
                second.ncols()
            )));
        }
        let ops = [Op::new(&first), Op::new(&second)];
        Ok(Self { first, second, ops })
    }

    /// Diagonal part first, off-diagonal part second.
    pub fn diag_offdiag(m: &RealMatrix) -> Result<Self> {
        let (d, r) = diag_split(m)?;
        Self::new(d, r)
    }

    /// Real form of a complex splitting `first + second`.
    pub fn embedded(first: &ComplexMatrix, second: &ComplexMatrix) -> Result<Self> {
        Self::new(embed(first).into_real(), embed(second).into_real())
    }

    /// Real form of a complex operator `B`, split as the diagonal of
    /// `embed(Re diag B)` against everything else. The first operator is
    /// diagonal, so the implicit sub-problem decouples per component.
    pub fn embedded_diag(m: &ComplexMatrix) -> Result<Self> {
        check_square(m)?;
        let full = embed(m).into_real();
        let n = m.nrows();
        let mut first = RealMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            first[(i, i)] = m[(i, i)].re;
            first[(n + i, n + i)] = m[(i, i)].re;
        }
        let second = &full - &first;
        Self::new(first, second)
    }

    pub fn first(&self) -> &RealMatrix {
        &self.first
    }

    pub fn second(&self) -> &RealMatrix {
        &self.second
    }

    pub fn dim(&self) -> usize {
        self.first.nrows()
    }

    /// `first + second`.
    pub fn operator(&self) -> RealMatrix {
        &self.first + &self.second
    }

    fn ops(&self, active: Active) -> (&Op, &Op) {
        match active {
            Active::First => (&self.ops[0], &self.ops[1]),
            Active::Second => (&self.ops[1], &self.ops[0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub scheme: Scheme,
    pub tau: f64,
    /// Sweeps per step; a two-side pair counts as one.
    pub sweeps: usize,
    /// Stop early once consecutive sweep end values differ by less than this
    /// in max-norm. Zero disables the check.
    pub epsilon: f64,
    /// RK4 substeps per splitting step.
    pub substeps: usize,
    pub initial_guess: InitialGuess,
}

impl SplitConfig {
    pub const DEFAULT_SUBSTEPS: usize = 8;

    pub fn new(scheme: Scheme, tau: f64, sweeps: usize) -> Self {
        Self {
            scheme,
            tau,
            sweeps,
            epsilon: 0.0,
            substeps: Self::DEFAULT_SUBSTEPS,
            initial_guess: InitialGuess::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {}", self.tau)));
        }
        if self.sweeps == 0 || self.sweeps > MAX_SWEEPS {
            return Err(Error::InvalidConfig(format!("sweeps must be in 1..={MAX_SWEEPS}, got {}", self.sweeps)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// End values of every sweep of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub iterates: Vec<RealVector>,
    /// Max-norm change of each end value from the one before it; the first
    /// entry compares against the initial guess.
    pub differences: Vec<f64>,
    pub final_sweep: usize,
    pub early_stop: bool,
}

impl IterationTrace {
    /// Records a sweep end; returns true when the iteration should stop.
    pub(crate) fn record(&mut self, end: &[f64], prev: &[f64], epsilon: f64) -> bool {
        let diff = end.iter().zip(prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        self.iterates.push(RealVector::from_column_slice(end));
        self.differences.push(diff);
        self.final_sweep = self.iterates.len();
        if epsilon > 0.0 && self.iterates.len() >= 2 && diff < epsilon {
            self.early_stop = true;
        }
        self.early_stop
    }

    fn last(&self) -> RealVector {
        self.iterates.last().cloned().expect("at least one sweep")
    }
}

fn check_state(pair: &SplitPair, c: &RealVector) -> Result<()> {
    if c.len() != pair.dim() {
        return Err(Error::Dimension(format!(
            "state has length {}, operators are {}x{}",
            c.len(),
            pair.dim(),
            pair.dim()
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("state contains non-finite entries".into()));
    }
    Ok(())
}

/// One sub-problem: integrates `c' = M_active c + M_other s` over `tau`
/// from `c_start`, where `s` is the lagged iterate sampled on the same grid.
pub fn substep_solve(
    pair: &SplitPair,
    active: Active,
    source: &Samples,
    c_start: &RealVector,
    tau: f64,
    substeps: usize,
) -> Result<(RealVector, Samples)> {
    check_state(pair, c_start)?;
    if substeps == 0 || source.nodes() != substeps + 1 || source.dim() != pair.dim() {
        return Err(Error::Dimension(format!(
            "source has {} nodes of length {}, expected {} of length {}",
            source.nodes(),
            source.dim(),
            substeps + 1,
            pair.dim()
        )));
    }
    let (act, other) = pair.ops(active);
    let out = sweep(act, &[SourceTerm { op: other, samples: source }], c_start.as_slice(), tau, substeps)?;
    Ok((RealVector::from_column_slice(out.end()), out))
}

fn guess_end(cfg: &SplitConfig, c_n: &[f64]) -> Vec<f64> {
    match cfg.initial_guess {
        InitialGuess::StepStart => c_n.to_vec(),
        InitialGuess::Zero => vec![0.0; c_n.len()],
    }
}

/// One step of a one-side scheme.
pub fn step_one_side(
    pair: &SplitPair,
    active: Active,
    cfg: &SplitConfig,
    c_n: &RealVector,
) -> Result<(RealVector, IterationTrace)> {
    cfg.validate()?;
    check_state(pair, c_n)?;
    let c = c_n.as_slice();
    let (act, other) = pair.ops(active);
    let mut src = cfg.initial_guess.samples(c, cfg.substeps + 1);
    let mut prev = guess_end(cfg, c);
    let mut trace = IterationTrace::default();
    for _ in 0..cfg.sweeps {
        let next = sweep(act, &[SourceTerm { op: other, samples: &src }], c, cfg.tau, cfg.substeps)?;
        if trace.record(next.end(), &prev, cfg.epsilon) {
            break;
        }
        prev = next.end().to_vec();
        src = next;
    }
    Ok((trace.last(), trace))
}

/// One step of the alternating scheme.
pub fn step_two_side(pair: &SplitPair, cfg: &SplitConfig, c_n: &RealVector) -> Result<(RealVector, IterationTrace)> {
    cfg.validate()?;
    check_state(pair, c_n)?;
    let c = c_n.as_slice();
    let (a, b) = (&pair.ops[0], &pair.ops[1]);
    let mut src = cfg.initial_guess.samples(c, cfg.substeps + 1);
    let mut prev = guess_end(cfg, c);
    let mut trace = IterationTrace::default();
    for _ in 0..cfg.sweeps {
        let half = sweep(a, &[SourceTerm { op: b, samples: &src }], c, cfg.tau, cfg.substeps)?;
        let next = sweep(b, &[SourceTerm { op: a, samples: &half }], c, cfg.tau, cfg.substeps)?;
        if trace.record(next.end(), &prev, cfg.epsilon) {
            break;
        }
        prev = next.end().to_vec();
        src = next;
    }
    Ok((trace.last(), trace))
}

/// Same iterates as [`step_two_side`], without storing the intermediate half.
pub fn step_two_side_fused(
    pair: &SplitPair,
    cfg: &SplitConfig,
    c_n: &RealVector,
) -> Result<(RealVector, IterationTrace)> {
    cfg.validate()?;
    check_state(pair, c_n)?;
    let c = c_n.as_slice();
    let mut src = cfg.initial_guess.samples(c, cfg.substeps + 1);
    let mut prev = guess_end(cfg, c);
    let mut image: Option<Vec<f64>> = None;
    let mut trace = IterationTrace::default();
    for _ in 0..cfg.sweeps {
        let (next, img) = fused_pair(&pair.ops[0], &pair.ops[1], &src, image.as_deref(), c, cfg.tau, cfg.substeps)?;
        if trace.record(next.end(), &prev, cfg.epsilon) {
            break;
        }
        prev = next.end().to_vec();
        src = next;
        image = Some(img);
    }
    Ok((trace.last(), trace))
}

/// Dispatches on `cfg.scheme`.
pub fn step(pair: &SplitPair, cfg: &SplitConfig, c_n: &RealVector) -> Result<(RealVector, IterationTrace)> {
    match cfg.scheme {
        Scheme::OneSideFirst => step_one_side(pair, Active::First, cfg, c_n),
        Scheme::OneSideSecond => step_one_side(pair, Active::Second, cfg, c_n),
        Scheme::TwoSide => step_two_side(pair, cfg, c_n),
        Scheme::TwoSideFused => step_two_side_fused(pair, cfg, c_n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::mat_exp;
    use nalgebra::dmatrix;

    fn pair() -> SplitPair {
        SplitPair::new(dmatrix![-1.0, 0.0; 0.0, -2.0], dmatrix![0.0, 0.3; 0.2, 0.0]).unwrap()
    }

    fn exact(p: &SplitPair, c: &RealVector, t: f64) -> RealVector {
        mat_exp(&p.operator(), t).unwrap() * c
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("twosided".parse::<Scheme>().is_err());
        assert_eq!("zero".parse::<InitialGuess>().unwrap(), InitialGuess::Zero);
    }

    #[test]
    fn config_validation() {
        assert!(SplitConfig::new(Scheme::TwoSide, 0.1, 0).validate().is_err());
        assert!(SplitConfig::new(Scheme::TwoSide, 0.1, 65).validate().is_err());
        assert!(SplitConfig::new(Scheme::TwoSide, -0.1, 2).validate().is_err());
        let mut c = SplitConfig::new(Scheme::TwoSide, 0.1, 2);
        c.epsilon = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn commuting_split_converges_to_exponential() {
        let p = SplitPair::new(dmatrix![-1.0, 0.0; 0.0, -2.0], dmatrix![0.5, 0.0; 0.0, 0.25]).unwrap();
        let c = RealVector::from_vec(vec![1.0, 1.0]);
        let (got, _) = step(&p, &SplitConfig::new(Scheme::TwoSide, 0.1, 6), &c).unwrap();
        assert!((got - exact(&p, &c, 0.1)).amax() < 1e-9);
    }

    #[test]
    fn every_scheme_converges_with_sweeps() {
        let p = pair();
        let c = RealVector::from_vec(vec![1.0, -0.5]);
        let want = exact(&p, &c, 0.1);
        for s in Scheme::ALL {
            let e2 = (step(&p, &SplitConfig::new(s, 0.1, 2), &c).unwrap().0 - &want).amax();
            let e6 = (step(&p, &SplitConfig::new(s, 0.1, 6), &c).unwrap().0 - &want).amax();
            assert!(e6 < e2, "{s}: {e6} !< {e2}");
            assert!(e6 < 1e-8, "{s}: {e6}");
        }
    }

    #[test]
    fn fused_is_bitwise_identical() {
        let p = pair();
        let c = RealVector::from_vec(vec![0.3, 2.0]);
        for sweeps in 1..5 {
            let a = step_two_side(&p, &SplitConfig::new(Scheme::TwoSide, 0.05, sweeps), &c).unwrap();
            let b = step_two_side_fused(&p, &SplitConfig::new(Scheme::TwoSideFused, 0.05, sweeps), &c).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_guess_also_converges() {
        let p = pair();
        let c = RealVector::from_vec(vec![1.0, 1.0]);
        let mut cfg = SplitConfig::new(Scheme::TwoSide, 0.1, 8);
        cfg.initial_guess = InitialGuess::Zero;
        let (got, _) = step(&p, &cfg, &c).unwrap();
        assert!((got - exact(&p, &c, 0.1)).amax() < 1e-9);
    }

    #[test]
    fn early_stop_respects_epsilon() {
        let p = pair();
        let c = RealVector::from_vec(vec![1.0, 1.0]);
        let mut cfg = SplitConfig::new(Scheme::OneSideFirst, 0.1, 30);
        cfg.epsilon = 1e-8;
        let (_, trace) = step(&p, &cfg, &c).unwrap();
        assert!(trace.early_stop);
        assert!(trace.final_sweep < 30);
        assert!(*trace.differences.last().unwrap() < 1e-8);
    }

    #[test]
    fn substep_solve_checks_shapes() {
        let p = pair();
        let c = RealVector::from_vec(vec![1.0, 1.0]);
        assert!(substep_solve(&p, Active::First, &Samples::zeros(2, 4), &c, 0.1, 8).is_err());
        let (end, s) = substep_solve(&p, Active::Second, &Samples::zeros(2, 9), &c, 0.1, 8).unwrap();
        assert_eq!(s.nodes(), 9);
        assert_eq!(end.as_slice(), s.end());
    }

    #[test]
    fn embedded_diag_reassembles_operator() {
        use num_complex::Complex64;
        let m = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 - j as f64, 0.5 * (i + j) as f64));
        let p = SplitPair::embedded_diag(&m).unwrap();
        assert_eq!(p.operator(), embed(&m).into_real());
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(p.first()[(i, j)], 0.0);
                }
            }
        }
    }
}
