//! Ground-truth solutions.
//!
//! [`exact_solution`] evaluates the factored semigroup sum. The integrators
//! here never touch the matrix exponential: they step the linear system with
//! classical RK4 and double the step count until two successive runs agree.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::factorize::{
    companion_initial_state, companion_matrix, FactorizedSystem, HigherOrderProblem, IntegroProblem,
};
use crate::matkernel::{check_finite, check_square, mat_exp, ComplexVector, RealMatrix, RealVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    /// Initial step; refined by halving.
    pub base_step: f64,
    /// Target for the Richardson estimate `|y_h/2 - y_h| / 15`, relative to `max(1, |y|)`.
    pub tolerance: f64,
    pub max_halvings: u32,
}

impl ReferenceConfig {
    /// Base step `T / 1024`, tolerance 1e-10.
    pub fn for_horizon(horizon: f64) -> Self {
        Self { base_step: horizon / 1024.0, tolerance: 1e-10, max_halvings: 12 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(Error::InvalidConfig(format!("base step must be positive, got {}", self.base_step)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self::for_horizon(1.0)
    }
}

/// `sum_i exp(B_i t) w_i`.
pub fn exact_solution(fs: &FactorizedSystem, t: f64) -> Result<ComplexVector> {
    let mut u = ComplexVector::zeros(fs.dim());
    for (b, w) in fs.roots.iter().zip(&fs.weights) {
        u += mat_exp(b, t)? * w;
    }
    Ok(u)
}

fn rk4_fixed(m: &RealMatrix, y0: &RealVector, t: f64, steps: usize) -> RealVector {
    let h = t / steps as f64;
    let mut y = y0.clone();
    for _ in 0..steps {
        let k1 = m * &y;
        let k2 = m * (&y + &k1 * (h / 2.0));
        let k3 = m * (&y + &k2 * (h / 2.0));
        let k4 = m * (&y + &k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

/// `y(t)` for `y' = M y`, `y(0) = y0`, by step-halving RK4.
pub fn reference_integrate(m: &RealMatrix, y0: &RealVector, t: f64, cfg: &ReferenceConfig) -> Result<RealVector> {
    check_square(m)?;
    check_finite(m)?;
    cfg.validate()?;
    if y0.len() != m.nrows() {
        return Err(Error::Dimension(format!("state has length {}, matrix is {}x{}", y0.len(), m.nrows(), m.ncols())));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidConfig(format!("time must be finite and non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(y0.clone());
    }
    let mut steps = (t / cfg.base_step).ceil().max(1.0) as usize;
    let mut coarse = rk4_fixed(m, y0, t, steps);
    for _ in 0..cfg.max_halvings {
        steps *= 2;
        let fine = rk4_fixed(m, y0, t, steps);
        if !fine.iter().all(|x| x.is_finite()) {
            return Err(Error::Convergence("reference integration overflowed".into()));
        }
        let estimate = (&fine - &coarse).amax() / 15.0;
        if estimate <= cfg.tolerance * fine.amax().max(1.0) {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Convergence(format!(
        "step underflow: tolerance {:e} not met after {} halvings",
        cfg.tolerance, cfg.max_halvings
    )))
}

/// Complex initial data under a real operator: real and imaginary parts are
/// integrated separately.
pub fn reference_integrate_complex(
    m: &RealMatrix,
    y0: &ComplexVector,
    t: f64,
    cfg: &ReferenceConfig,
) -> Result<ComplexVector> {
    let re = reference_integrate(m, &y0.map(|z| z.re), t, cfg)?;
    let im = if y0.iter().any(|z| z.im != 0.0) {
        reference_integrate(m, &y0.map(|z| z.im), t, cfg)?
    } else {
        RealVector::zeros(y0.len())
    };
    Ok(ComplexVector::from_fn(y0.len(), |i, _| Complex64::new(re[i], im[i])))
}

/// `u(t)` of a higher-order problem through its companion form.
pub fn companion_reference(p: &HigherOrderProblem, t: f64, cfg: &ReferenceConfig) -> Result<ComplexVector> {
    let c = companion_matrix(p)?;
    let y = reference_integrate_complex(&c, &companion_initial_state(p), t, cfg)?;
    Ok(y.rows(0, p.dim()).into_owned())
}

/// `c(t)` of the integro-differential problem via the memory variable
/// `q = \int_0^t c`: `c' = A c + B q`, `q' = c`, `q(0) = 0`.
pub fn integro_direct(p: &IntegroProblem, t: f64, cfg: &ReferenceConfig) -> Result<RealVector> {
    p.validate()?;
    let m = p.a.nrows();
    let mut aug = RealMatrix::zeros(2 * m, 2 * m);
    aug.view_mut((0, 0), (m, m)).copy_from(&p.a);
    aug.view_mut((0, m), (m, m)).copy_from(&p.b);
    aug.view_mut((m, 0), (m, m)).copy_from(&RealMatrix::identity(m, m));
    let mut y0 = RealVector::zeros(2 * m);
    y0.rows_mut(0, m).copy_from(&p.c0);
    let y = reference_integrate(&aug, &y0, t, cfg)?;
    Ok(y.rows(0, m).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::integro_to_second_order;
    use crate::matkernel::ComplexMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn zero_operator_returns_initial_state() {
        let y0 = RealVector::from_vec(vec![1.0, -2.0]);
        let y = reference_integrate(&RealMatrix::zeros(2, 2), &y0, 1.0, &ReferenceConfig::default()).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn scalar_decay() {
        let y = reference_integrate(
            &RealMatrix::from_element(1, 1, -1.0),
            &RealVector::from_element(1, 1.0),
            1.0,
            &ReferenceConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(y[0], (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn step_underflow_is_reported() {
        let cfg = ReferenceConfig { base_step: 0.5, tolerance: 1e-300, max_halvings: 2 };
        let err =
            reference_integrate(&RealMatrix::from_element(1, 1, -1.0), &RealVector::from_element(1, 1.0), 1.0, &cfg)
                .unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }

    #[test]
    fn exact_solution_at_zero_and_cosh() {
        let fs = FactorizedSystem::new(
            vec![
                ComplexMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
                ComplexMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0)),
            ],
            vec![
                ComplexVector::from_element(1, Complex64::new(0.5, 0.0)),
                ComplexVector::from_element(1, Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(exact_solution(&fs, 0.0).unwrap()[0], Complex64::new(1.0, 0.0));
        assert_relative_eq!(exact_solution(&fs, 1.0).unwrap()[0].re, 1.0f64.cosh(), epsilon = 1e-14);
    }

    #[test]
    fn integro_memory_free_matches_exponential() {
        let a = RealMatrix::from_row_slice(2, 2, &[-0.3, 0.2, 0.1, -0.5]);
        let c0 = RealVector::from_vec(vec![1.0, 0.5]);
        let p = IntegroProblem::new(a.clone(), RealMatrix::zeros(2, 2), c0.clone(), 1.0).unwrap();
        let got = integro_direct(&p, 1.0, &ReferenceConfig::default()).unwrap();
        let want = mat_exp(&a, 1.0).unwrap() * c0;
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn integro_scalar_is_cosh() {
        let p = IntegroProblem::new(
            RealMatrix::from_element(1, 1, 0.0),
            RealMatrix::from_element(1, 1, 1.0),
            RealVector::from_element(1, 1.0),
            1.0,
        )
        .unwrap();
        let got = integro_direct(&p, 1.0, &ReferenceConfig::default()).unwrap();
        assert_relative_eq!(got[0], 1.0f64.cosh(), epsilon = 1e-10);
        let h = integro_to_second_order(&p).unwrap();
        let comp = companion_reference(&h, 1.0, &ReferenceConfig::default()).unwrap();
        assert!((comp[0].re - got[0]).abs() < 1e-10);
    }
}
