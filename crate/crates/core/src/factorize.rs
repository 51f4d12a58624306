//! Factorization of higher-order and integro-differential problems into
//! decoupled first-order systems `u_i' = B_i u_i`, plus the block Vandermonde
//! solve for the initial weights `w_i`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matkernel::{
    check_finite, check_square, commutator_norm, lstsq_min_norm, mat_root, to_complex, to_complex_vector,
    ComplexMatrix, ComplexVector, RealMatrix, RealVector,
};

/// `A_0 u^(n) + A_1 u^(n-1) + ... + A_n u = 0` with `A_0 = I`, plus the
/// initial derivative stack `u(0), u'(0), ..., u^(n-1)(0)`.
///
/// Initial derivatives are complex because fractional powers of a real
/// operator (principal branch) generally are.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderProblem {
    coeffs: Vec<RealMatrix>,
    init_derivs: Vec<ComplexVector>,
    horizon: f64,
}

impl HigherOrderProblem {
    pub fn new(coeffs: Vec<RealMatrix>, init_derivs: Vec<ComplexVector>, horizon: f64) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "order must be >= 2 (need A_0..A_n), got {} coefficient(s)",
                coeffs.len()
            )));
        }
        let m = coeffs[0].nrows();
        for (k, a) in coeffs.iter().enumerate() {
            check_square(a)?;
            check_finite(a)?;
            if a.nrows() != m {
                return Err(Error::Dimension(format!("A_{k} is {}x{}, expected {m}x{m}", a.nrows(), a.ncols())));
            }
        }
        let order = coeffs.len() - 1;
        if init_derivs.len() != order {
            return Err(Error::Dimension(format!(
                "order {order} problem needs {order} initial derivatives, got {}",
                init_derivs.len()
            )));
        }
        if let Some(k) = init_derivs.iter().position(|v| v.len() != m) {
            return Err(Error::Dimension(format!("initial derivative {k} has wrong length")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { coeffs, init_derivs, horizon })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn coeffs(&self) -> &[RealMatrix] {
        &self.coeffs
    }

    pub fn init_derivs(&self) -> &[ComplexVector] {
        &self.init_derivs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// `c' - A c = B \int_0^t c`, `c(0) = c0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegroProblem {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c0: RealVector,
    pub horizon: f64,
}

impl IntegroProblem {
    pub fn new(a: RealMatrix, b: RealMatrix, c0: RealVector, horizon: f64) -> Result<Self> {
        let p = Self { a, b, c0, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_square(&self.a)?;
        check_square(&self.b)?;
        check_finite(&self.a)?;
        check_finite(&self.b)?;
        let m = self.a.nrows();
        if self.b.nrows() != m || self.c0.len() != m {
            return Err(Error::Dimension(format!(
                "A is {m}x{m}, B is {}x{}, c0 has length {}",
                self.b.nrows(),
                self.b.ncols(),
                self.c0.len()
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// Root matrices `B_i` and weights `w_i = d_i u_{i,0}` of
/// `u(t) = sum_i exp(B_i t) w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedSystem {
    pub roots: Vec<ComplexMatrix>,
    pub weights: Vec<ComplexVector>,
}

impl FactorizedSystem {
    pub fn new(roots: Vec<ComplexMatrix>, weights: Vec<ComplexVector>) -> Result<Self> {
        if roots.is_empty() || roots.len() != weights.len() {
            return Err(Error::Dimension(format!("{} roots but {} weights", roots.len(), weights.len())));
        }
        let m = roots[0].nrows();
        for (b, w) in roots.iter().zip(&weights) {
            check_square(b)?;
            if b.nrows() != m || w.len() != m {
                return Err(Error::Dimension("roots and weights must share one dimension".into()));
            }
        }
        Ok(Self { roots, weights })
    }

    /// Factors `problem` with the given roots and solves for the weights.
    pub fn from_roots(roots: Vec<ComplexMatrix>, problem: &HigherOrderProblem) -> Result<Self> {
        let weights = solve_vandermonde(&roots, problem.init_derivs())?;
        Self::new(roots, weights)
    }

    pub fn dim(&self) -> usize {
        self.roots[0].nrows()
    }

    /// `sum_i B_i^r w_i` for `r = 0..n-1`, i.e. the derivative stack the
    /// factored solution reproduces at `t = 0`.
    pub fn reconstruct_derivatives(&self) -> Vec<ComplexVector> {
        let n = self.roots.len();
        let mut powered: Vec<ComplexVector> = self.weights.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(powered.iter().fold(ComplexVector::zeros(self.dim()), |acc, v| acc + v));
            for (v, b) in powered.iter_mut().zip(&self.roots) {
                *v = b * &*v;
            }
        }
        out
    }
}

/// Which matrix goes under the square root of the second-order factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorForm {
    /// `A^2/4 + B`, so that `(L - B_1)(L - B_2) = L^2 - A L - B` when `A`, `B` commute.
    #[default]
    Derived,
    /// `A A^T / 4 - B` as printed alongside the integro example.
    PaperLiteral,
}

/// Phase factors multiplying the principal n-th root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootSet {
    /// `exp(2 pi i k / n)`, k = 0..n-1.
    #[default]
    Unity,
    /// `{1, -sqrt2/2 + i sqrt2/2, -sqrt2/2 - i sqrt2/2}`; third order only.
    PaperLiteral,
}

impl fmt::Display for OperatorForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorForm::Derived => "derived",
            OperatorForm::PaperLiteral => "paper-literal",
        })
    }
}

impl FromStr for OperatorForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(OperatorForm::Derived),
            "paper-literal" => Ok(OperatorForm::PaperLiteral),
            _ => Err(Error::InvalidConfig(format!("unknown operator form '{s}'"))),
        }
    }
}

impl fmt::Display for RootSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootSet::Unity => "unity",
            RootSet::PaperLiteral => "paper-literal",
        })
    }
}

impl FromStr for RootSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unity" => Ok(RootSet::Unity),
            "paper-literal" => Ok(RootSet::PaperLiteral),
            _ => Err(Error::InvalidConfig(format!("unknown root set '{s}'"))),
        }
    }
}

/// `c'' = A c' + B c` with `c(0) = c0`, `c'(0) = A c0` (the memory term
/// vanishes at `t = 0`).
pub fn integro_to_second_order(p: &IntegroProblem) -> Result<HigherOrderProblem> {
    p.validate()?;
    let m = p.a.nrows();
    let coeffs = vec![RealMatrix::identity(m, m), -&p.a, -&p.b];
    let derivs = vec![to_complex_vector(&p.c0), to_complex_vector(&(&p.a * &p.c0))];
    HigherOrderProblem::new(coeffs, derivs, p.horizon)
}

/// The pair `B_{1,2} = A/2 +- S` together with the factorization diagnostics.
#[derive(Debug, Clone)]
pub struct SecondOrderFactors {
    pub roots: [ComplexMatrix; 2],
    /// `A / 2`, the shared part of both roots.
    pub half_a: ComplexMatrix,
    /// The square root `S`.
    pub sqrt_term: ComplexMatrix,
    /// `||B_1 + B_2 - A||_F`.
    pub sum_residual: f64,
    /// `||B_1 B_2 + B||_F`; zero only when the factorization is exact.
    pub product_residual: f64,
    /// `||A B - B A||_F`.
    pub commutator: f64,
    /// `product_residual / commutator`, or 0 when `A` and `B` commute.
    pub kappa: f64,
}

pub fn factor_second_order(a: &RealMatrix, b: &RealMatrix, form: OperatorForm) -> Result<SecondOrderFactors> {
    check_square(a)?;
    check_square(b)?;
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("A is {:?}, B is {:?}", a.shape(), b.shape())));
    }
    let radicand = match form {
        OperatorForm::Derived => a * a / 4.0 + b,
        OperatorForm::PaperLiteral => a * a.transpose() / 4.0 - b,
    };
    let s = mat_root(&radicand, 2)?;
    let half_a = to_complex(&(a / 2.0));
    let b1 = &half_a + &s;
    let b2 = &half_a - &s;
    let ac = to_complex(a);
    let sum_residual = (&b1 + &b2 - &ac).norm();
    let product_residual = (&b1 * &b2 + to_complex(b)).norm();
    let commutator = commutator_norm(a, b)?;
    let kappa = if commutator > 0.0 { product_residual / commutator } else { 0.0 };
    Ok(SecondOrderFactors { roots: [b1, b2], half_a, sqrt_term: s, sum_residual, product_residual, commutator, kappa })
}

/// Phase factors for `n` roots of the given set.
pub fn root_phases(n: usize, root_set: RootSet) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("root order must be >= 2, got {n}")));
    }
    match root_set {
        RootSet::Unity => Ok((0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()),
        RootSet::PaperLiteral if n == 3 => Ok(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        ]),
        RootSet::PaperLiteral => {
            Err(Error::InvalidConfig(format!("paper-literal phases are defined for n = 3 only, got {n}")))
        }
    }
}

/// Roots `B_k = phase_k * A^{1/n}` of `c^(n) = A c`.
pub fn factor_nth_root(a: &RealMatrix, n: usize, root_set: RootSet) -> Result<Vec<ComplexMatrix>> {
    let phases = root_phases(n, root_set)?;
    let root = mat_root(a, n as u32)?;
    Ok(phases.into_iter().map(|ph| &root * ph).collect())
}

/// Solves the block Vandermonde system `sum_i B_i^r w_i = u^(r)(0)`,
/// `r = 0..n-1`.
///
/// The system is solved in the minimum-norm least-squares sense. A
/// rank-deficient but consistent system (roots sharing a null space, with
/// derivative data in range) returns the minimum-norm weights; an
/// inconsistent one, such as repeated roots with generic data, is a
/// [`Error::SingularVandermonde`].
pub fn solve_vandermonde(roots: &[ComplexMatrix], init_derivs: &[ComplexVector]) -> Result<Vec<ComplexVector>> {
    let n = roots.len();
    if n == 0 || init_derivs.len() != n {
        return Err(Error::Dimension(format!("{n} roots but {} initial derivatives", init_derivs.len())));
    }
    let m = roots[0].nrows();
    for b in roots {
        check_square(b)?;
        if b.nrows() != m {
            return Err(Error::Dimension("roots must share one dimension".into()));
        }
    }
    if init_derivs.iter().any(|v| v.len() != m) {
        return Err(Error::Dimension("initial derivatives must match the root dimension".into()));
    }

    let dim = n * m;
    let v = vandermonde_matrix(roots);
    let mut rhs = ComplexMatrix::zeros(dim, 1);
    for (r, d) in init_derivs.iter().enumerate() {
        rhs.view_mut((r * m, 0), (m, 1)).copy_from(d);
    }

    let (x, rank) = lstsq_min_norm(&v, &rhs, 1e-10)?;
    let residual = (&v * &x - &rhs).norm() / (v.norm() * x.norm() + rhs.norm()).max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::SingularVandermonde { rank, dim, residual });
    }
    Ok((0..n).map(|i| ComplexVector::from_iterator(m, x.view((i * m, 0), (m, 1)).iter().cloned())).collect())
}

/// Block matrix with block `(r, i) = B_i^r`, `r = 0..n-1`.
pub fn vandermonde_matrix(roots: &[ComplexMatrix]) -> ComplexMatrix {
    let n = roots.len();
    let m = roots.first().map_or(0, |b| b.nrows());
    let mut v = ComplexMatrix::zeros(n * m, n * m);
    for (i, b) in roots.iter().enumerate() {
        let mut power = ComplexMatrix::identity(m, m);
        for r in 0..n {
            v.view_mut((r * m, i * m), (m, m)).copy_from(&power);
            power = b * power;
        }
    }
    v
}

/// Nearest real `c0` to `target` for which the derivative stack
/// `[D_0 c0; D_1 c0; ...]` lies in the range of the block Vandermonde matrix
/// of `roots`. When the roots share null vectors the system is singular and
/// only such data has weights; otherwise `target` is returned unchanged.
pub fn consistent_initial_state(
    roots: &[ComplexMatrix],
    derivative_maps: &[ComplexMatrix],
    target: &RealVector,
) -> Result<RealVector> {
    let n = roots.len();
    let m = target.len();
    if n == 0 || derivative_maps.len() != n || roots.iter().chain(derivative_maps).any(|b| b.shape() != (m, m)) {
        return Err(Error::Dimension(format!(
            "{n} roots, {} derivative maps, state of length {m}",
            derivative_maps.len()
        )));
    }
    let v = vandermonde_matrix(roots);
    let svd = v.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Convergence("SVD did not produce singular vectors".into()))?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut rows: Vec<RealVector> = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * smax {
            continue;
        }
        let mut ell = nalgebra::RowDVector::<Complex64>::zeros(m);
        for (r, d) in derivative_maps.iter().enumerate() {
            let ur = u.view((r * m, k), (m, 1));
            ell += ur.adjoint() * d;
        }
        rows.push(ell.transpose().map(|z| z.re));
        rows.push(ell.transpose().map(|z| z.im));
    }
    if rows.is_empty() {
        return Ok(target.clone());
    }
    let k = RealMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
    let rhs = RealMatrix::from_column_slice(rows.len(), 1, (&k * target).as_slice());
    let (z, _) = lstsq_min_norm(&k, &rhs, 1e-10)?;
    Ok(target - RealVector::from_column_slice(z.as_slice()))
}

/// First-order companion form `y' = C y`, `y = [u; u'; ...; u^(n-1)]`.
pub fn companion_matrix(p: &HigherOrderProblem) -> Result<RealMatrix> {
    let m = p.dim();
    let n = p.order();
    if p.coeffs()[0] != RealMatrix::identity(m, m) {
        return Err(Error::Unsupported("companion form requires A_0 = I".into()));
    }
    let mut c = RealMatrix::zeros(n * m, n * m);
    for r in 0..n - 1 {
        c.view_mut((r * m, (r + 1) * m), (m, m)).copy_from(&RealMatrix::identity(m, m));
    }
    // u^(n) = -(A_1 u^(n-1) + ... + A_n u)
    for k in 1..=n {
        let block_col = n - k;
        c.view_mut(((n - 1) * m, block_col * m), (m, m)).copy_from(&(-&p.coeffs()[k]));
    }
    Ok(c)
}

/// Stacks the initial derivatives into the companion state vector.
pub fn companion_initial_state(p: &HigherOrderProblem) -> ComplexVector {
    let m = p.dim();
    let mut y = ComplexVector::zeros(m * p.order());
    for (r, d) in p.init_derivs().iter().enumerate() {
        y.rows_mut(r * m, m).copy_from(d);
    }
    y
}
