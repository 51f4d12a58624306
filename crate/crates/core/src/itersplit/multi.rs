//! Splitting applied to a factored system `u(t) = sum_i exp(B_i t) w_i`:
//! every component is advanced independently and the results are summed.

use num_complex::Complex64;

use super::complex::{iterate_complex, ComplexSplitConfig, ComplexSplitPair, CouplingLag};
use super::{step, SplitConfig, SplitPair};
use crate::error::{Error, Result};
use crate::factorize::FactorizedSystem;
use crate::matkernel::{embed_vector, unembed_vector, ComplexVector};

/// How one root `B_i` is split.
#[derive(Debug, Clone)]
pub enum RootScheme {
    /// `B_i` is real; the pair acts on `m`-vectors and the real and
    /// imaginary parts of the weight are advanced separately.
    Real(SplitPair),
    /// The pair acts on the stacked `[re; im]` state of size `2m`.
    Embedded(SplitPair),
    /// Two-level iteration with lagged imaginary coupling.
    TwoLevel { pair: ComplexSplitPair, inner_sweeps: usize, levels: usize, lag: CouplingLag },
}

impl RootScheme {
    fn dim(&self) -> usize {
        match self {
            RootScheme::Real(p) => p.dim(),
            RootScheme::Embedded(p) => p.dim() / 2,
            RootScheme::TwoLevel { pair, .. } => pair.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector>,
    /// Largest number of sweeps (or levels) any step used.
    pub max_sweeps_used: usize,
    /// Steps that ended on the tolerance rather than the sweep limit.
    pub early_stops: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &ComplexVector {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Number of steps of size `tau` covering `horizon`; `tau` must divide it.
pub fn step_count(tau: f64, horizon: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
    }
    if !(tau > 0.0 && tau <= horizon * (1.0 + 1e-12)) {
        return Err(Error::InvalidConfig(format!("step size {tau} must lie in (0, {horizon}]")));
    }
    let n = (horizon / tau).round();
    if (n * tau - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidConfig(format!("step size {tau} does not divide the horizon {horizon}")));
    }
    Ok(n as usize)
}

struct Tally {
    max_sweeps: usize,
    early: bool,
}

impl Tally {
    fn add(&mut self, t: &super::IterationTrace) {
        self.max_sweeps = self.max_sweeps.max(t.final_sweep);
        self.early |= t.early_stop;
    }
}

fn advance(scheme: &RootScheme, cfg: &SplitConfig, u: &ComplexVector, tally: &mut Tally) -> Result<ComplexVector> {
    match scheme {
        RootScheme::Real(pair) => {
            let (re, t) = step(pair, cfg, &u.map(|z| z.re))?;
            tally.add(&t);
            let im_in = u.map(|z| z.im);
            let im = if im_in.iter().any(|&x| x != 0.0) {
                let (im, t) = step(pair, cfg, &im_in)?;
                tally.add(&t);
                im
            } else {
                im_in
            };
            Ok(ComplexVector::from_fn(u.len(), |i, _| Complex64::new(re[i], im[i])))
        }
        RootScheme::Embedded(pair) => {
            let (v, t) = step(pair, cfg, &embed_vector(u))?;
            tally.add(&t);
            Ok(unembed_vector(&v))
        }
        RootScheme::TwoLevel { pair, inner_sweeps, levels, lag } => {
            let ccfg = ComplexSplitConfig { outer_sweeps: *inner_sweeps, levels: *levels, base: *cfg, lag: *lag };
            let ((re, im), t) = iterate_complex(pair, &ccfg, &u.map(|z| z.re), &u.map(|z| z.im))?;
            tally.add(&t);
            Ok(ComplexVector::from_fn(u.len(), |i, _| Complex64::new(re[i], im[i])))
        }
    }
}

/// Integrates every component `exp(B_i t) w_i` with its splitting over
/// `[0, horizon]` and returns the summed state at each step.
pub fn solve_multi(
    fs: &FactorizedSystem,
    schemes: &[RootScheme],
    cfg: &SplitConfig,
    horizon: f64,
) -> Result<Trajectory> {
    cfg.validate()?;
    if schemes.len() != fs.roots.len() {
        return Err(Error::Dimension(format!("{} root schemes for {} roots", schemes.len(), fs.roots.len())));
    }
    let m = fs.dim();
    if let Some(s) = schemes.iter().find(|s| s.dim() != m) {
        return Err(Error::Dimension(format!("root scheme of dimension {} for a system of dimension {m}", s.dim())));
    }
    let steps = step_count(cfg.tau, horizon)?;
    let mut comps: Vec<ComplexVector> = fs.weights.clone();
    let sum = |c: &[ComplexVector]| c.iter().fold(ComplexVector::zeros(m), |acc, v| acc + v);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        max_sweeps_used: 0,
        early_stops: 0,
    };
    traj.times.push(0.0);
    traj.states.push(sum(&comps));
    for n in 0..steps {
        let mut tally = Tally { max_sweeps: 0, early: false };
        for (u, scheme) in comps.iter_mut().zip(schemes) {
            *u = advance(scheme, cfg, u, &mut tally)?;
        }
        traj.max_sweeps_used = traj.max_sweeps_used.max(tally.max_sweeps);
        traj.early_stops += tally.early as usize;
        traj.times.push((n + 1) as f64 * cfg.tau);
        traj.states.push(sum(&comps));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itersplit::Scheme;
    use crate::matkernel::{mat_exp, to_complex};
    use crate::oracle::exact_solution;
    use nalgebra::dmatrix;

    fn system() -> (FactorizedSystem, Vec<RootScheme>) {
        let b1 = dmatrix![-1.0, 0.2; 0.1, -0.5];
        let b2 = dmatrix![0.3, -0.1; 0.05, 0.2];
        let fs = FactorizedSystem::new(
            vec![to_complex(&b1), to_complex(&b2)],
            vec![
                ComplexVector::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, 0.0)]),
                ComplexVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(-1.0, 0.0)]),
            ],
        )
        .unwrap();
        let schemes = vec![
            RootScheme::Real(SplitPair::diag_offdiag(&b1).unwrap()),
            RootScheme::Embedded(SplitPair::embedded_diag(&to_complex(&b2)).unwrap()),
        ];
        (fs, schemes)
    }

    #[test]
    fn step_count_requires_divisor() {
        assert_eq!(step_count(0.05, 1.0).unwrap(), 20);
        assert_eq!(step_count(0.0125, 2.0).unwrap(), 160);
        assert!(step_count(0.3, 1.0).is_err());
        assert!(step_count(2.0, 1.0).is_err());
    }

    #[test]
    fn sum_of_components_matches_exact() {
        let (fs, schemes) = system();
        let traj = solve_multi(&fs, &schemes, &SplitConfig::new(Scheme::TwoSide, 0.1, 6), 1.0).unwrap();
        assert_eq!(traj.states.len(), 11);
        let err = (traj.final_state() - exact_solution(&fs, 1.0).unwrap()).camax();
        assert!(err < 1e-8, "{err}");
        assert_eq!(traj.max_sweeps_used, 6);
    }

    #[test]
    fn two_level_component() {
        let b = to_complex(&dmatrix![-1.0, 0.2; 0.1, -0.5]).map(|z| z + Complex64::new(0.0, 0.3));
        let w = ComplexVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let fs = FactorizedSystem::new(vec![b.clone()], vec![w.clone()]).unwrap();
        let schemes = vec![RootScheme::TwoLevel {
            pair: ComplexSplitPair::diag_offdiag(&b).unwrap(),
            inner_sweeps: 6,
            levels: 6,
            lag: CouplingLag::AsDisplayed,
        }];
        let traj = solve_multi(&fs, &schemes, &SplitConfig::new(Scheme::OneSideFirst, 0.1, 1), 0.5).unwrap();
        let want = mat_exp(&b, 0.5).unwrap() * w;
        assert!((traj.final_state() - want).camax() < 1e-8);
    }

    #[test]
    fn mismatched_schemes_are_rejected() {
        let (fs, schemes) = system();
        assert!(solve_multi(&fs, &schemes[..1], &SplitConfig::new(Scheme::TwoSide, 0.1, 2), 1.0).is_err());
    }
}
