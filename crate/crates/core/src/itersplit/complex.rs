//! Two-level iteration for a complex operator `B1 + B2` acting on a complex
//! state `c = re + i im`.
//!
//! The real parts of `B1`, `B2` are split as usual (inner index `j`). The
//! imaginary parts couple `re` and `im` and are lagged by one outer level
//! (index `k`): at level `k` the coupling is evaluated at the iterates of
//! level `k - 1`. Level `-1` is the initial guess.

use std::fmt;
use std::str::FromStr;

use super::engine::{sweep, Op, Samples, SourceTerm};
use super::{IterationTrace, Scheme, SplitConfig, SplitPair, MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::matkernel::{check_finite, check_square, diag_split, ComplexMatrix, RealMatrix, RealVector};

/// Which iterate feeds the imaginary-part coupling of the second half of a
/// two-side pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingLag {
    /// `Im B2 re` uses the current level's preceding iterate; `Im B1 re` and
    /// the whole `re` row use the previous level.
    #[default]
    AsDisplayed,
    /// All coupling terms use the previous level.
    Symmetric,
}

impl fmt::Display for CouplingLag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingLag::AsDisplayed => "as-displayed",
            CouplingLag::Symmetric => "symmetric",
        })
    }
}

impl FromStr for CouplingLag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-displayed" => Ok(CouplingLag::AsDisplayed),
            "symmetric" => Ok(CouplingLag::Symmetric),
            _ => Err(Error::InvalidConfig(format!("unknown coupling lag '{s}' (expected as-displayed or symmetric)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSplitPair {
    pub first_re: RealMatrix,
    pub first_im: RealMatrix,
    pub second_re: RealMatrix,
    pub second_im: RealMatrix,
}

impl ComplexSplitPair {
    pub fn new(first: &ComplexMatrix, second: &ComplexMatrix) -> Result<Self> {
        check_square(first)?;
        check_square(second)?;
        check_finite(first)?;
        check_finite(second)?;
        if first.shape() != second.shape() {
            return Err(Error::Dimension("split operators differ in shape".into()));
        }
        Ok(Self {
            first_re: first.map(|z| z.re),
            first_im: first.map(|z| z.im),
            second_re: second.map(|z| z.re),
            second_im: second.map(|z| z.im),
        })
    }

    /// Diagonal of `m` first, off-diagonal second.
    pub fn diag_offdiag(m: &ComplexMatrix) -> Result<Self> {
        let (d, r) = diag_split(m)?;
        Self::new(&d, &r)
    }

    pub fn dim(&self) -> usize {
        self.first_re.nrows()
    }

    /// The full complex operator.
    pub fn operator(&self) -> ComplexMatrix {
        let re = &self.first_re + &self.second_re;
        let im = &self.first_im + &self.second_im;
        ComplexMatrix::from_fn(self.dim(), self.dim(), |i, j| num_complex::Complex64::new(re[(i, j)], im[(i, j)]))
    }

    /// Real pair on the stacked state whose first operator is
    /// `blockdiag(Re B1)` and whose second carries everything else.
    pub fn embedded_equivalent(&self) -> Result<SplitPair> {
        let first = blockdiag(&self.first_re);
        let second = crate::matkernel::embed(&self.operator()).into_real() - &first;
        SplitPair::new(first, second)
    }
}

fn blockdiag(m: &RealMatrix) -> RealMatrix {
    let n = m.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out.view_mut((n, n), (n, n)).copy_from(m);
    out
}

/// `[[0, -top], [bottom, 0]]` on the stacked state.
fn coupling(top: &RealMatrix, bottom: &RealMatrix) -> RealMatrix {
    let n = top.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(&(-top));
    out.view_mut((n, 0), (n, n)).copy_from(bottom);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSplitConfig {
    /// Inner sweeps per level (`J`); a two-side pair counts as one.
    pub outer_sweeps: usize,
    /// Coupling levels (`K`).
    pub levels: usize,
    /// Scheme, step size, substeps, tolerance and initial guess.
    /// `base.sweeps` is ignored.
    pub base: SplitConfig,
    pub lag: CouplingLag,
}

impl ComplexSplitConfig {
    pub fn new(base: SplitConfig, outer_sweeps: usize, levels: usize) -> Self {
        Self { outer_sweeps, levels, base, lag: CouplingLag::default() }
    }

    pub fn validate(&self) -> Result<()> {
        SplitConfig { sweeps: 1, ..self.base }.validate()?;
        for (name, v) in [("inner sweeps", self.outer_sweeps), ("levels", self.levels)] {
            if v == 0 || v > MAX_SWEEPS {
                return Err(Error::InvalidConfig(format!("{name} must be in 1..={MAX_SWEEPS}, got {v}")));
            }
        }
        Ok(())
    }
}

struct Kernels {
    act: [Op; 2],
    coupling: Op,
    coupling_prev: Op,
    coupling_same: Op,
}

/// One step of the two-level iteration. Returns the end state as
/// `(re, im)` and a trace whose entries are the stacked end values of each
/// level.
pub fn iterate_complex(
    pair: &ComplexSplitPair,
    cfg: &ComplexSplitConfig,
    c_re: &RealVector,
    c_im: &RealVector,
) -> Result<((RealVector, RealVector), IterationTrace)> {
    cfg.validate()?;
    let m = pair.dim();
    if c_re.len() != m || c_im.len() != m {
        return Err(Error::Dimension(format!(
            "state has lengths {} and {}, operator is {m}x{m}",
            c_re.len(),
            c_im.len()
        )));
    }
    let im_sum = &pair.first_im + &pair.second_im;
    let k = Kernels {
        act: [Op::new(&blockdiag(&pair.first_re)), Op::new(&blockdiag(&pair.second_re))],
        coupling: Op::new(&coupling(&im_sum, &im_sum)),
        coupling_prev: Op::new(&coupling(&im_sum, &pair.first_im)),
        coupling_same: Op::new(&coupling(&RealMatrix::zeros(m, m), &pair.second_im)),
    };
    let mut c = Vec::with_capacity(2 * m);
    c.extend_from_slice(c_re.as_slice());
    c.extend_from_slice(c_im.as_slice());
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("state contains non-finite entries".into()));
    }

    let base = &cfg.base;
    let nodes = base.substeps + 1;
    let guess = base.initial_guess.samples(&c, nodes);
    let mut prev_level: Vec<Samples> = Vec::new();
    let mut prev_end = guess.end().to_vec();
    let mut trace = IterationTrace::default();

    for _ in 0..cfg.levels {
        let level = run_level(&k, cfg, &c, &guess, &prev_level)?;
        let end = level.last().expect("non-empty level").end().to_vec();
        let stop = trace.record(&end, &prev_end, base.epsilon);
        prev_end = end;
        prev_level = level;
        if stop {
            break;
        }
    }
    let (re, im) = prev_end.split_at(m);
    Ok(((RealVector::from_column_slice(re), RealVector::from_column_slice(im)), trace))
}

fn run_level(
    k: &Kernels,
    cfg: &ComplexSplitConfig,
    c: &[f64],
    guess: &Samples,
    prev: &[Samples],
) -> Result<Vec<Samples>> {
    let base = &cfg.base;
    // previous level, clamped to its last iterate if it stopped early
    let lagged = |idx: Option<usize>| -> &Samples {
        match idx {
            Some(i) if !prev.is_empty() => &prev[i.min(prev.len() - 1)],
            _ => guess,
        }
    };
    let mut cur: Vec<Samples> = Vec::new();
    let mut prev_end = guess.end().to_vec();
    let mut inner = IterationTrace::default();

    for j in 0..cfg.outer_sweeps {
        match base.scheme {
            Scheme::OneSideFirst | Scheme::OneSideSecond => {
                let (act, other) =
                    if base.scheme == Scheme::OneSideFirst { (&k.act[0], &k.act[1]) } else { (&k.act[1], &k.act[0]) };
                let before = j.checked_sub(1);
                let same = before.map_or(guess, |i| &cur[i]);
                let next = sweep(
                    act,
                    &[SourceTerm { op: other, samples: same }, SourceTerm { op: &k.coupling, samples: lagged(before) }],
                    c,
                    base.tau,
                    base.substeps,
                )?;
                cur.push(next);
            }
            Scheme::TwoSide | Scheme::TwoSideFused => {
                let before = (2 * j).checked_sub(1);
                let same = before.map_or(guess, |i| &cur[i]);
                let lag = lagged(before);
                let half = sweep(
                    &k.act[0],
                    &[SourceTerm { op: &k.act[1], samples: same }, SourceTerm { op: &k.coupling, samples: lag }],
                    c,
                    base.tau,
                    base.substeps,
                )?;
                let next = match cfg.lag {
                    CouplingLag::Symmetric => sweep(
                        &k.act[1],
                        &[SourceTerm { op: &k.act[0], samples: &half }, SourceTerm { op: &k.coupling, samples: lag }],
                        c,
                        base.tau,
                        base.substeps,
                    )?,
                    CouplingLag::AsDisplayed => sweep(
                        &k.act[1],
                        &[
                            SourceTerm { op: &k.act[0], samples: &half },
                            SourceTerm { op: &k.coupling_prev, samples: lag },
                            SourceTerm { op: &k.coupling_same, samples: same },
                        ],
                        c,
                        base.tau,
                        base.substeps,
                    )?,
                };
                cur.push(half);
                cur.push(next);
            }
        }
        let end = cur.last().expect("pushed").end().to_vec();
        if inner.record(&end, &prev_end, base.epsilon) {
            break;
        }
        prev_end = end;
    }
    Ok(cur)
}
