//! Dense real and complex matrix kernel.
//!
//! Everything here is a pure function of its inputs. Tolerances are stated in
//! the Frobenius norm unless a routine says otherwise.

use nalgebra::{ComplexField, DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealVector = DVector<f64>;
pub type ComplexVector = DVector<Complex64>;

/// Scalars the kernel is generic over: `f64` and `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Eigenvector-matrix condition number above which a matrix is treated as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e12;

/// A complex `m x m` matrix `M = Re + i Im` stored as the real block matrix
/// `[[Re, -Im], [Im, Re]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    base: RealMatrix,
}

impl EmbeddedMatrix {
    /// Wraps a real `2m x 2m` matrix, checking the block structure exactly.
    pub fn from_real(base: RealMatrix) -> Result<Self> {
        check_square(&base)?;
        if base.nrows() % 2 != 0 {
            return Err(Error::Dimension(format!("embedded matrix needs even order, got {}", base.nrows())));
        }
        let m = base.nrows() / 2;
        for j in 0..m {
            for i in 0..m {
                let re = base[(i, j)];
                let im = base[(i + m, j)];
                if base[(i + m, j + m)] != re || base[(i, j + m)] != -im {
                    return Err(Error::Dimension(format!("block structure violated at ({i}, {j})")));
                }
            }
        }
        Ok(Self { base })
    }

    pub fn as_real(&self) -> &RealMatrix {
        &self.base
    }

    pub fn into_real(self) -> RealMatrix {
        self.base
    }

    /// Order of the represented complex matrix.
    pub fn complex_dim(&self) -> usize {
        self.base.nrows() / 2
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        let m = self.complex_dim();
        ComplexMatrix::from_fn(m, m, |i, j| Complex64::new(self.base[(i, j)], self.base[(i + m, j)]))
    }
}

pub(crate) fn check_square<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub(crate) fn check_finite<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    if let Some(pos) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::Domain(format!(
            "entry ({}, {}) is not finite",
            pos % m.nrows().max(1),
            pos / m.nrows().max(1)
        )));
    }
    Ok(())
}

fn check_same_shape<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("shape {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn one_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.modulus()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_vector(v: &RealVector) -> ComplexVector {
    v.map(|x| Complex64::new(x, 0.0))
}

// Pade coefficients b_0..b_m of the [m/m] approximant to exp.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bounds below which the [m/m] approximant reaches double precision.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

/// `exp(M t)` by scaling and squaring with a diagonal Pade approximant of
/// degree 3, 5, 7, 9 or 13 picked from the 1-norm of `M t`.
pub fn mat_exp<T: Scalar>(m: &DMatrix<T>, t: f64) -> Result<DMatrix<T>> {
    check_square(m)?;
    check_finite(m)?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    let a = m * T::from_real(t);
    let norm = one_norm(&a);
    for (theta, coeffs) in [(THETA3, &PADE3[..]), (THETA5, &PADE5[..]), (THETA7, &PADE7[..]), (THETA9, &PADE9[..])] {
        if norm <= theta {
            return pade_low(&a, coeffs);
        }
    }
    let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
    let scaled = &a * T::from_real(0.5f64.powi(s));
    let mut r = pade13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low<T: Scalar>(a: &DMatrix<T>, b: &[f64]) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let ident = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    // even powers A^0, A^2, A^4, ...
    let mut evens = vec![ident.clone(), a2.clone()];
    while 2 * evens.len() < b.len() {
        let next = evens.last().unwrap() * &a2;
        evens.push(next);
    }
    let mut u_inner = DMatrix::<T>::zeros(n, n);
    let mut v = DMatrix::<T>::zeros(n, n);
    for (k, &coef) in b.iter().enumerate() {
        let c = T::from_real(coef);
        if k % 2 == 1 {
            u_inner += &evens[k / 2] * c;
        } else {
            v += &evens[k / 2] * c;
        }
    }
    let u = a * u_inner;
    solve_pade(u, v)
}

fn pade13<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let b: Vec<T> = PADE13.iter().map(|&x| T::from_real(x)).collect();
    let ident = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_inner = &a6 * u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = a * u_inner;
    let v_hi = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    solve_pade(u, v)
}

fn solve_pade<T: Scalar>(u: DMatrix<T>, v: DMatrix<T>) -> Result<DMatrix<T>> {
    let q = &v - &u;
    let p = v + u;
    q.lu().solve(&p).ok_or_else(|| Error::Convergence("Pade denominator is singular".into()))
}

/// Principal p-th root of a complex scalar; the closed negative real axis
/// maps to argument `pi / p`.
pub fn principal_root_scalar(z: Complex64, p: u32) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    let r = z.norm().powf(1.0 / p as f64);
    let arg = if z.im == 0.0 && z.re < 0.0 { std::f64::consts::PI } else { z.im.atan2(z.re) };
    Complex64::from_polar(r, arg / p as f64)
}

/// Principal p-th root of a real matrix. See [`mat_root_complex`].
pub fn mat_root(m: &RealMatrix, p: u32) -> Result<ComplexMatrix> {
    check_square(m)?;
    check_finite(m)?;
    mat_root_complex(&to_complex(m), p)
}

/// Principal p-th root `R` (eigenvalues in the sector `(-pi/p, pi/p]`, zero
/// eigenvalues mapped to zero) via the complex Schur form `M = Q U Q^H` and a
/// column recurrence for the triangular root of `U`.
///
/// Eigenvalues within `100 n eps ||M||_F` of zero are snapped to zero, and
/// eigenvalues that close to the negative real axis are put on it, so that
/// roundoff in the Schur form cannot select a non-primary root.
pub fn mat_root_complex(m: &ComplexMatrix, p: u32) -> Result<ComplexMatrix> {
    check_square(m)?;
    check_finite(m)?;
    if p < 2 {
        return Err(Error::InvalidConfig(format!("root order must be >= 2, got {p}")));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let norm = m.norm();
    if norm == 0.0 {
        return Ok(m.clone());
    }
    let snap = 100.0 * n as f64 * f64::EPSILON * norm;

    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n)
        .ok_or_else(|| Error::Convergence("complex Schur iteration did not converge".into()))?;
    let (q, mut u) = schur.unpack();
    for i in 0..n {
        for j in 0..i {
            u[(i, j)] = Complex64::new(0.0, 0.0);
        }
        let z = u[(i, i)];
        if z.norm() <= snap {
            u[(i, i)] = Complex64::new(0.0, 0.0);
        } else if z.re < 0.0 && z.im.abs() <= snap {
            u[(i, i)] = Complex64::new(z.re, 0.0);
        }
    }

    let cond = triangular_eigvec_condition(&u);
    if !(cond <= DEFECTIVE_CONDITION) {
        return Err(Error::NumericalRank(format!(
            "eigenvector matrix condition number {cond:e} exceeds {DEFECTIVE_CONDITION:e}; matrix is numerically defective"
        )));
    }

    let r_tri = triangular_root(&u, p, snap)?;
    let root = &q * r_tri * q.adjoint();

    let mut power = root.clone();
    for _ in 1..p {
        power = &power * &root;
    }
    let residual = (&power - m).norm() / norm.max(1.0);
    if residual > 1e-8 {
        return Err(Error::NumericalRank(format!(
            "root residual {residual:e} too large (eigenvector condition {cond:e})"
        )));
    }
    Ok(root)
}

/// Upper triangular `R` with `R^p = U`. Column entries are solved by
/// superdiagonal, keeping the strictly upper parts of `R^2 .. R^{p-1}` current
/// because entry `(i, j)` of `R^q` is affine in `r_ij`.
fn triangular_root(u: &ComplexMatrix, p: u32, snap: f64) -> Result<ComplexMatrix> {
    let n = u.nrows();
    let p = p as usize;
    let zero = Complex64::new(0.0, 0.0);
    // powers[q] holds R^(q+1), q = 0..p-2
    let mut powers = vec![ComplexMatrix::zeros(n, n); p - 1];
    for i in 0..n {
        let r = principal_root_scalar(u[(i, i)], p as u32);
        let mut acc = r;
        for pw in powers.iter_mut() {
            pw[(i, i)] = acc;
            acc *= r;
        }
    }
    let mut alpha = vec![zero; p + 1];
    let mut beta = vec![zero; p + 1];
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let rii = powers[0][(i, i)];
            alpha[1] = Complex64::new(1.0, 0.0);
            beta[1] = zero;
            for q in 2..=p {
                let prev = &powers[q - 2];
                let mut s = zero;
                for l in i + 1..j {
                    s += powers[0][(i, l)] * prev[(l, j)];
                }
                alpha[q] = rii * alpha[q - 1] + prev[(j, j)];
                beta[q] = rii * beta[q - 1] + s;
            }
            let rhs = u[(i, j)] - beta[p];
            let rij = if alpha[p].norm() == 0.0 {
                if rhs.norm() > snap {
                    return Err(Error::NumericalRank(format!(
                        "no principal root: repeated zero eigenvalue couples entries ({i}, {j})"
                    )));
                }
                zero
            } else {
                rhs / alpha[p]
            };
            powers[0][(i, j)] = rij;
            for q in 2..p {
                powers[q - 1][(i, j)] = alpha[q] * rij + beta[q];
            }
        }
    }
    Ok(powers.swap_remove(0))
}

/// Frobenius condition number of the (column-normalised) eigenvector matrix
/// of an upper triangular matrix. Near-equal eigenvalues use a floored
/// denominator so semisimple repeats stay well conditioned.
fn triangular_eigvec_condition(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    let smin = (f64::EPSILON * u.norm()).max(f64::MIN_POSITIVE);
    let mut x = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        x[(k, k)] = Complex64::new(1.0, 0.0);
        let lambda = u[(k, k)];
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in i + 1..=k {
                s += u[(i, l)] * x[(l, k)];
            }
            let mut den = u[(i, i)] - lambda;
            if den.norm() < smin {
                den = Complex64::new(smin, 0.0);
            }
            x[(i, k)] = -s / den;
        }
        let cn = x.column(k).norm();
        x.column_mut(k).unscale_mut(cn);
    }
    let xinv = match upper_triangular_inverse(&x) {
        Some(v) => v,
        None => return f64::INFINITY,
    };
    x.norm() * xinv.norm()
}

fn upper_triangular_inverse(x: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = x.nrows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        if x[(j, j)].norm() == 0.0 {
            return None;
        }
        inv[(j, j)] = x[(j, j)].inv();
        for i in (0..j).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in i + 1..=j {
                s += x[(i, l)] * inv[(l, j)];
            }
            inv[(i, j)] = -s / x[(i, i)];
        }
    }
    if inv.iter().all(|z| z.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

/// Splits `M` into its diagonal `D` and the off-diagonal remainder `R`.
///
/// Structural zeros are negative zero, which keeps `D + R == M` bitwise,
/// signed zeros included.
pub fn diag_split<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    check_square(m)?;
    let nz = T::from_real(-0.0);
    let d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { m[(i, j)] } else { nz });
    let r = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { nz } else { m[(i, j)] });
    Ok((d, r))
}

/// `[[Re M, -Im M], [Im M, Re M]]`.
pub fn embed(m: &ComplexMatrix) -> EmbeddedMatrix {
    let (r, c) = m.shape();
    let mut base = RealMatrix::zeros(2 * r, 2 * c);
    for j in 0..c {
        for i in 0..r {
            let z = m[(i, j)];
            base[(i, j)] = z.re;
            base[(i + r, j + c)] = z.re;
            base[(i + r, j)] = z.im;
            base[(i, j + c)] = -z.im;
        }
    }
    EmbeddedMatrix { base }
}

/// Stacks a complex vector as `[Re v; Im v]`.
pub fn embed_vector(v: &ComplexVector) -> RealVector {
    let m = v.len();
    RealVector::from_fn(2 * m, |i, _| if i < m { v[i].re } else { v[i - m].im })
}

pub fn unembed_vector(v: &RealVector) -> ComplexVector {
    let m = v.len() / 2;
    ComplexVector::from_fn(m, |i, _| Complex64::new(v[i], v[i + m]))
}

/// Frobenius norm of `M1 M2 - M2 M1`.
pub fn commutator_norm<T: Scalar>(m1: &DMatrix<T>, m2: &DMatrix<T>) -> Result<f64> {
    check_square(m1)?;
    check_same_shape(m1, m2)?;
    Ok((m1 * m2 - m2 * m1).norm())
}

/// Gaussian elimination with partial pivoting. `rhs` holds one right-hand
/// side per column.
pub fn lin_solve<T: Scalar>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(m)?;
    check_finite(m)?;
    check_finite(rhs)?;
    let n = m.nrows();
    if rhs.nrows() != n {
        return Err(Error::Dimension(format!("matrix is {n}x{n} but right-hand side has {} rows", rhs.nrows())));
    }
    let scale = m.iter().map(|x| x.modulus()).fold(0.0, f64::max);
    let threshold = n as f64 * f64::EPSILON * scale;
    let mut a = m.clone();
    let mut x = rhs.clone();
    for k in 0..n {
        let (piv, mag) =
            (k..n)
                .map(|i| (i, a[(i, k)].modulus()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag <= threshold || mag == 0.0 {
            return Err(Error::Singular { pivot: k, magnitude: mag });
        }
        if piv != k {
            a.swap_rows(piv, k);
            x.swap_rows(piv, k);
        }
        let pivot = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
            for j in 0..x.ncols() {
                let xkj = x[(k, j)];
                x[(i, j)] -= f * xkj;
            }
        }
    }
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for l in i + 1..n {
                s -= a[(i, l)] * x[(l, j)];
            }
            x[(i, j)] = s / a[(i, i)];
        }
    }
    Ok(x)
}

/// Minimum-norm least-squares solution through the SVD. Singular values
/// below `rtol * sigma_max` count as zero. Returns the solution and the
/// numerical rank.
pub fn lstsq_min_norm<T: Scalar>(m: &DMatrix<T>, rhs: &DMatrix<T>, rtol: f64) -> Result<(DMatrix<T>, usize)> {
    check_finite(m)?;
    check_finite(rhs)?;
    if rhs.nrows() != m.nrows() {
        return Err(Error::Dimension(format!("matrix has {} rows but right-hand side has {}", m.nrows(), rhs.nrows())));
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Convergence("SVD did not produce singular vectors".into())),
    };
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rtol * smax;
    let mut utb = u.adjoint() * rhs;
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            rank += 1;
            let inv = T::from_real(1.0 / s);
            for j in 0..utb.ncols() {
                utb[(k, j)] *= inv;
            }
        } else {
            utb.row_mut(k).fill(T::zero());
        }
    }
    Ok((vt.adjoint() * utb, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&RealMatrix::zeros(4, 4), 1.0).unwrap();
        assert_eq!(e, RealMatrix::identity(4, 4));
    }

    #[test]
    fn exp_of_nilpotent_terminates() {
        let n = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = mat_exp(&n, 1.0).unwrap();
        let want = RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((e - want).norm() <= 1e-15);
    }

    #[test]
    fn exp_of_large_norm_uses_squaring() {
        // rotation generator scaled well past theta_13
        let g = RealMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = mat_exp(&g, 20.0).unwrap();
        let want = RealMatrix::from_row_slice(2, 2, &[20f64.cos(), -20f64.sin(), 20f64.sin(), 20f64.cos()]);
        assert!((e - want).norm() <= 1e-12);
        let d = RealMatrix::from_diagonal(&RealVector::from_vec(vec![-3.0, 2.5]));
        let e = mat_exp(&d, 4.0).unwrap();
        assert_relative_eq!(e[(0, 0)], (-12.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], 10.0f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn complex_exp_of_scalar() {
        let m = ComplexMatrix::from_element(1, 1, c(0.0, 1.0));
        let e = mat_exp(&m, 0.7).unwrap();
        assert!((e[(0, 0)] - c(0.7f64.cos(), 0.7f64.sin())).norm() < 1e-15);
    }

    #[test]
    fn exp_rejects_bad_input() {
        assert!(matches!(mat_exp(&RealMatrix::zeros(2, 3), 1.0), Err(Error::Dimension(_))));
        let mut m = RealMatrix::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(mat_exp(&m, 1.0), Err(Error::Domain(_))));
        assert!(matches!(mat_exp(&RealMatrix::zeros(2, 2), f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_is_deterministic() {
        let m = RealMatrix::from_fn(6, 6, |i, j| ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.4);
        let a = mat_exp(&m, 1.3).unwrap();
        let b = mat_exp(&m, 1.3).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn scalar_root_branch() {
        let r = principal_root_scalar(c(-8.0, 0.0), 3);
        assert!((r - Complex64::from_polar(2.0, std::f64::consts::PI / 3.0)).norm() < 1e-14);
        let r = principal_root_scalar(c(-8.0, -0.0), 3);
        assert!(r.im > 0.0);
        assert_eq!(principal_root_scalar(c(0.0, 0.0), 5), c(0.0, 0.0));
    }

    #[test]
    fn root_of_identity_and_diagonal() {
        let r = mat_root(&RealMatrix::identity(3, 3), 3).unwrap();
        assert!((r - ComplexMatrix::identity(3, 3)).norm() < 1e-14);
        let d = RealMatrix::from_diagonal(&RealVector::from_vec(vec![8.0, 27.0]));
        let r = mat_root(&d, 3).unwrap();
        assert!((r[(0, 0)] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((r[(1, 1)] - c(3.0, 0.0)).norm() < 1e-14);
        assert!(r[(0, 1)].norm() < 1e-14 && r[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn root_of_zero_matrix_is_zero() {
        let r = mat_root(&RealMatrix::zeros(3, 3), 2).unwrap();
        assert_eq!(r, ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn root_of_jordan_block_is_rejected() {
        let j = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(mat_root(&j, 2), Err(Error::NumericalRank(_))));
        let j = RealMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(mat_root(&j, 3), Err(Error::NumericalRank(_))));
    }

    #[test]
    fn root_rejects_order_one() {
        assert!(mat_root(&RealMatrix::identity(2, 2), 1).is_err());
    }

    #[test]
    fn root_of_negative_scalar_matrix_is_in_principal_sector() {
        let m = RealMatrix::from_element(1, 1, -0.02);
        let r = mat_root(&m, 3).unwrap()[(0, 0)];
        let arg = r.im.atan2(r.re);
        assert_relative_eq!(arg, std::f64::consts::PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn diag_split_examples() {
        let (d, r) = diag_split(&RealMatrix::identity(3, 3)).unwrap();
        assert_eq!(d, RealMatrix::identity(3, 3));
        assert_eq!(r, RealMatrix::zeros(3, 3));
        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let (d, r) = diag_split(&m).unwrap();
        assert_eq!(d, RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]));
        assert_eq!(r, RealMatrix::from_row_slice(2, 2, &[0.0, 2.0, 3.0, 0.0]));
        assert!(diag_split(&RealMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn diag_split_is_bitwise_additive_with_signed_zeros() {
        let m = RealMatrix::from_row_slice(2, 2, &[-0.0, 0.0, -0.0, 1.5]);
        let (d, r) = diag_split(&m).unwrap();
        let s = d + r;
        assert!(s.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn embed_examples() {
        let i_id = ComplexMatrix::identity(3, 3) * c(0.0, 1.0);
        let e = embed(&i_id);
        let sq = e.as_real() * e.as_real();
        assert_eq!(sq, -RealMatrix::identity(6, 6));

        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let e = embed(&to_complex(&m));
        let mut want = RealMatrix::zeros(4, 4);
        want.view_mut((0, 0), (2, 2)).copy_from(&m);
        want.view_mut((2, 2), (2, 2)).copy_from(&m);
        // real input embeds with signed zeros in the off blocks
        assert!((e.as_real() - want).norm() == 0.0);
        assert_eq!(e.to_complex(), to_complex(&m));
    }

    #[test]
    fn embedded_matrix_checks_structure() {
        let e = embed(&ComplexMatrix::from_element(2, 2, c(1.0, -2.0)));
        assert!(EmbeddedMatrix::from_real(e.as_real().clone()).is_ok());
        let mut bad = e.into_real();
        bad[(0, 3)] += 1.0;
        assert!(EmbeddedMatrix::from_real(bad).is_err());
        assert!(EmbeddedMatrix::from_real(RealMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn vector_embedding_round_trips() {
        let v = ComplexVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let e = embed_vector(&v);
        assert_eq!(e.as_slice(), &[1.0, -3.0, 2.0, 0.5]);
        assert_eq!(unembed_vector(&e), v);
    }

    #[test]
    fn commutator_examples() {
        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(commutator_norm(&m, &m).unwrap(), 0.0);
        assert_eq!(commutator_norm(&m, &RealMatrix::identity(2, 2)).unwrap(), 0.0);
        let n = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        // [m, n] = [[-3, -3], [0, 3]]
        assert_relative_eq!(commutator_norm(&m, &n).unwrap(), 27f64.sqrt(), epsilon = 1e-14);
        assert!(commutator_norm(&m, &RealMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn lin_solve_examples() {
        let b = RealMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert_eq!(lin_solve(&RealMatrix::identity(3, 3), &b).unwrap(), b);
        let x = lin_solve(&RealMatrix::from_element(1, 1, 2.0), &RealMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(x[(0, 0)], 2.0);
    }

    #[test]
    fn lin_solve_names_the_singular_pivot() {
        let m = RealMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        let err = lin_solve(&m, &RealMatrix::zeros(3, 1)).unwrap_err();
        assert!(matches!(err, Error::Singular { pivot: 1, .. }), "{err}");
    }

    #[test]
    fn lin_solve_complex_residual() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| {
            c(((i + 2 * j) % 5) as f64 - 1.0, if i == j { 3.0 } else { 0.25 * j as f64 })
        });
        let b = ComplexMatrix::from_fn(4, 2, |i, j| c(i as f64, j as f64 - 0.5));
        let x = lin_solve(&m, &b).unwrap();
        let res = (&m * &x - &b).norm();
        assert!(res <= 1e-10 * (m.norm() * x.norm() + b.norm()));
    }

    #[test]
    fn min_norm_solution_of_rank_deficient_system() {
        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = RealMatrix::from_column_slice(2, 1, &[2.0, 2.0]);
        let (x, rank) = lstsq_min_norm(&m, &b, 1e-10).unwrap();
        assert_eq!(rank, 1);
        assert_relative_eq!(x[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 0)], 1.0, epsilon = 1e-14);
    }
}
