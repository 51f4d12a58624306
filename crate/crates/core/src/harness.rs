//! The two benchmark experiments: problem setup, scheme x step x sweep grids
//! against a reference solution, and CSV reports.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::factorize::{
    consistent_initial_state, factor_nth_root, factor_second_order, integro_to_second_order, FactorizedSystem,
    HigherOrderProblem, IntegroProblem, OperatorForm, RootSet,
};
use crate::itersplit::{solve_multi, RootScheme, Scheme, SplitConfig, SplitPair};
use crate::matkernel::{
    commutator_norm, diag_split, mat_root, to_complex, to_complex_vector, ComplexMatrix, ComplexVector, RealMatrix,
    RealVector,
};
use crate::oracle::{companion_reference, exact_solution, integro_direct, ReferenceConfig};

pub const CSV_HEADER: &str = "experiment,scheme,root_set,tau,sweeps,error_l2,error_inf,wall_ms,commutator_norm,oracle";

/// Lower-triangular-coupled generator of the first benchmark matrix, size `m`.
///
/// Row 1 has `-0.01, +0.01`; row `i` (2..m-1) has `+0.01` left of the
/// diagonal and `-0.01 (i-1)` on it; the last row has `+0.01` in columns
/// 1..m-2, zero in column m-1 and `-0.01 (m-2)` on the diagonal. Every row
/// sums to zero.
pub fn build_matrix_a_dim(m: usize) -> Result<RealMatrix> {
    if m < 3 {
        return Err(Error::InvalidConfig(format!("benchmark dimension must be >= 3, got {m}")));
    }
    let mut a = RealMatrix::zeros(m, m);
    a[(0, 0)] = -0.01;
    a[(0, 1)] = 0.01;
    for i in 1..m - 1 {
        for j in 0..i {
            a[(i, j)] = 0.01;
        }
        a[(i, i)] = -0.01 * i as f64;
    }
    for j in 0..m - 2 {
        a[(m - 1, j)] = 0.01;
    }
    a[(m - 1, m - 1)] = -0.01 * (m - 2) as f64;
    Ok(a)
}

/// `J A J` with `J` the index reversal.
pub fn build_matrix_b_dim(m: usize) -> Result<RealMatrix> {
    let a = build_matrix_a_dim(m)?;
    Ok(RealMatrix::from_fn(m, m, |i, j| a[(m - 1 - i, m - 1 - j)]))
}

pub fn build_matrix_a() -> RealMatrix {
    build_matrix_a_dim(10).expect("fixed size")
}

pub fn build_matrix_b() -> RealMatrix {
    build_matrix_b_dim(10).expect("fixed size")
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($name), " '{}' (expected one of: {})"),
                        s,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(
    /// `integro`: `c' = A c + B \int_0^t c`. `third-order`: `c''' = A c`.
    ExperimentId { Integro => "integro", ThirdOrder => "third-order" }
);

named_enum!(
    /// How each root operator is split into two parts.
    Decomposition { DiagOffdiag => "diag-offdiag", Factored => "factored" }
);

named_enum!(
    /// Initial state `c(0)`. `ones` is the all-ones vector; `ramp` has
    /// entries `1, 2, ..., m` scaled by `1/m`; `consistent` is the ramp
    /// projected onto the initial data the factored system can represent.
    InitialState { Ones => "ones", Ramp => "ramp", Consistent => "consistent" }
);

named_enum!(
    OracleKind { IntegroDirect => "integro_direct", CompanionRk4 => "companion_rk4" }
);

impl InitialState {
    /// `roots` and `derivative_maps` are only read for `consistent`.
    pub fn vector(self, m: usize, roots: &[ComplexMatrix], derivative_maps: &[ComplexMatrix]) -> Result<RealVector> {
        let ramp = || RealVector::from_fn(m, |i, _| (i + 1) as f64 / m as f64);
        match self {
            InitialState::Ones => Ok(RealVector::from_element(m, 1.0)),
            InitialState::Ramp => Ok(ramp()),
            InitialState::Consistent => consistent_initial_state(roots, derivative_maps, &ramp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub dim: usize,
    pub horizon: f64,
    pub taus: Vec<f64>,
    pub sweeps: Vec<usize>,
    pub schemes: Vec<Scheme>,
    /// Only used by the third-order experiment.
    pub root_set: RootSet,
    /// Only used by the integro experiment.
    pub operator_form: OperatorForm,
    pub decomposition: Decomposition,
    pub substeps: usize,
    pub epsilon: f64,
    pub initial: InitialState,
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId) -> Self {
        Self {
            id,
            dim: 10,
            horizon: 1.0,
            taus: vec![0.1, 0.05, 0.025, 0.0125],
            sweeps: (1..=6).collect(),
            schemes: vec![Scheme::OneSideFirst, Scheme::OneSideSecond, Scheme::TwoSide],
            root_set: RootSet::default(),
            operator_form: OperatorForm::default(),
            decomposition: Decomposition::DiagOffdiag,
            substeps: SplitConfig::DEFAULT_SUBSTEPS,
            epsilon: 0.0,
            initial: InitialState::Ones,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() || self.sweeps.is_empty() || self.schemes.is_empty() {
            return Err(Error::InvalidConfig("step, sweep and scheme lists must be non-empty".into()));
        }
        if self.decomposition == Decomposition::Factored && self.id != ExperimentId::Integro {
            return Err(Error::InvalidConfig(
                "the factored decomposition exists only for the integro experiment".into(),
            ));
        }
        for &tau in &self.taus {
            crate::itersplit::step_count(tau, self.horizon)?;
        }
        for &sweeps in &self.sweeps {
            SplitConfig {
                epsilon: self.epsilon,
                substeps: self.substeps,
                ..SplitConfig::new(Scheme::TwoSide, 1.0, sweeps)
            }
            .validate()?;
        }
        build_matrix_a_dim(self.dim)?;
        Ok(())
    }

    pub fn split_config(&self, scheme: Scheme, tau: f64, sweeps: usize) -> SplitConfig {
        SplitConfig { epsilon: self.epsilon, substeps: self.substeps, ..SplitConfig::new(scheme, tau, sweeps) }
    }

    /// Root-set column of the report.
    pub fn root_set_label(&self) -> &'static str {
        match self.id {
            ExperimentId::Integro => "n/a",
            ExperimentId::ThirdOrder => match self.root_set {
                RootSet::Unity => "unity",
                RootSet::PaperLiteral => "paper-literal",
            },
        }
    }
}

/// A prepared experiment: factored system, per-root splittings and the
/// reference state at the horizon.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub system: FactorizedSystem,
    pub schemes: Vec<RootScheme>,
    pub reference: ComplexVector,
    pub oracle: OracleKind,
    pub commutator: f64,
    /// `|exact_solution(T) - reference|_inf`: how far the factored semigroup
    /// sum is from the reference.
    pub semigroup_discrepancy: f64,
    /// Problem in higher-order form.
    pub problem: HigherOrderProblem,
}

fn is_real(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn diag_offdiag_scheme(root: &ComplexMatrix) -> Result<RootScheme> {
    if is_real(root) {
        Ok(RootScheme::Real(SplitPair::diag_offdiag(&root.map(|z| z.re))?))
    } else {
        Ok(RootScheme::Embedded(SplitPair::embedded_diag(root)?))
    }
}

/// Linear maps `D_r` with `c^(r)(0) = D_r c(0)` for `c''' = A c` in the
/// benchmark: `I`, `((1 - sqrt 2)/3) R`, `R^2 / 3` with `R` the principal
/// cube root. With the `paper-literal` phases every weight is `c(0)/3`.
pub fn third_order_derivative_maps(a: &RealMatrix) -> Result<Vec<ComplexMatrix>> {
    let m = a.nrows();
    let r = mat_root(a, 3)?;
    let r2 = &r * &r;
    Ok(vec![
        ComplexMatrix::identity(m, m),
        &r * Complex64::new((1.0 - std::f64::consts::SQRT_2) / 3.0, 0.0),
        r2 / Complex64::new(3.0, 0.0),
    ])
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Experiment> {
    spec.validate()?;
    let m = spec.dim;
    let a = build_matrix_a_dim(m)?;
    let cfg = ReferenceConfig::for_horizon(spec.horizon);
    match spec.id {
        ExperimentId::Integro => {
            let b = build_matrix_b_dim(m)?;
            let factors = factor_second_order(&a, &b, spec.operator_form)?;
            let c0 = spec.initial.vector(m, &factors.roots, &[ComplexMatrix::identity(m, m), to_complex(&a)])?;
            let ip = IntegroProblem::new(a.clone(), b.clone(), c0, spec.horizon)?;
            let problem = integro_to_second_order(&ip)?;
            let system = FactorizedSystem::from_roots(factors.roots.to_vec(), &problem)?;
            let schemes = match spec.decomposition {
                Decomposition::DiagOffdiag => system.roots.iter().map(diag_offdiag_scheme).collect::<Result<_>>()?,
                Decomposition::Factored => vec![
                    RootScheme::Embedded(SplitPair::embedded(&factors.half_a, &factors.sqrt_term)?),
                    RootScheme::Embedded(SplitPair::embedded(&factors.half_a, &(-&factors.sqrt_term))?),
                ],
            };
            let reference = integro_direct(&ip, spec.horizon, &cfg)?.map(|x| Complex64::new(x, 0.0));
            let semigroup_discrepancy = (exact_solution(&system, spec.horizon)? - &reference).camax();
            Ok(Experiment {
                spec: spec.clone(),
                system,
                schemes,
                reference,
                oracle: OracleKind::IntegroDirect,
                commutator: commutator_norm(&a, &b)?,
                semigroup_discrepancy,
                problem,
            })
        }
        ExperimentId::ThirdOrder => {
            let zero = RealMatrix::zeros(m, m);
            let roots = factor_nth_root(&a, 3, spec.root_set)?;
            let maps = third_order_derivative_maps(&a)?;
            let c0 = to_complex_vector(&spec.initial.vector(m, &roots, &maps)?);
            let derivs = maps.iter().map(|d| d * &c0).collect();
            let problem = HigherOrderProblem::new(
                vec![RealMatrix::identity(m, m), zero.clone(), zero, -&a],
                derivs,
                spec.horizon,
            )?;
            let system = FactorizedSystem::from_roots(roots, &problem)?;
            let schemes = system.roots.iter().map(diag_offdiag_scheme).collect::<Result<_>>()?;
            let reference = companion_reference(&problem, spec.horizon, &cfg)?;
            let semigroup_discrepancy = (exact_solution(&system, spec.horizon)? - &reference).camax();
            let (d, r) = diag_split(&mat_root(&a, 3)?)?;
            Ok(Experiment {
                spec: spec.clone(),
                system,
                schemes,
                reference,
                oracle: OracleKind::CompanionRk4,
                commutator: commutator_norm(&d, &r)?,
                semigroup_discrepancy,
                problem,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub experiment: ExperimentId,
    pub scheme: Scheme,
    pub root_set: &'static str,
    pub tau: f64,
    pub sweeps: usize,
    /// Infinite when the run diverged.
    pub error_l2: f64,
    pub error_inf: f64,
    pub wall_ms: f64,
    pub commutator_norm: f64,
    pub oracle: OracleKind,
}

impl ErrorRow {
    pub fn diverged(&self) -> bool {
        !self.error_inf.is_finite()
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:.3},{:e},{}",
            self.experiment,
            self.scheme,
            self.root_set,
            self.tau,
            self.sweeps,
            self.error_l2,
            self.error_inf,
            self.wall_ms,
            self.commutator_norm,
            self.oracle
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn find(&self, scheme: Scheme, tau: f64, sweeps: usize) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.tau == tau && r.sweeps == sweeps)
    }
}

pub fn write_csv(report: &ErrorReport, path: &Path) -> Result<()> {
    fs::write(path, report.to_csv()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// `(l2, inf)` norms of `got - want`.
pub fn error_norms(got: &ComplexVector, want: &ComplexVector) -> (f64, f64) {
    let e = got - want;
    (e.norm(), e.camax())
}

/// Solves one grid cell; returns the final state and the elapsed wall time
/// in milliseconds.
pub fn run_cell(exp: &Experiment, cfg: &SplitConfig) -> Result<(ComplexVector, f64)> {
    let start = Instant::now();
    let traj = solve_multi(&exp.system, &exp.schemes, cfg, exp.spec.horizon)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((traj.final_state().clone(), ms))
}

/// Median wall time of `reps` runs of one cell.
pub fn median_wall_ms(exp: &Experiment, cfg: &SplitConfig, reps: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        times.push(run_cell(exp, cfg)?.1);
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

/// Error of the unsplit RK4 substep solver on the grid of step `tau`: every
/// root integrated whole, with a zero second operator.
pub fn substep_floor(exp: &Experiment, tau: f64) -> Result<f64> {
    let schemes = exp
        .schemes
        .iter()
        .map(|s| match s {
            RootScheme::Real(p) => {
                Ok(RootScheme::Real(SplitPair::new(p.operator(), RealMatrix::zeros(p.dim(), p.dim()))?))
            }
            RootScheme::Embedded(p) => {
                Ok(RootScheme::Embedded(SplitPair::new(p.operator(), RealMatrix::zeros(p.dim(), p.dim()))?))
            }
            RootScheme::TwoLevel { .. } => Err(Error::Unsupported("floor of a two-level scheme".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = exp.spec.split_config(Scheme::OneSideFirst, tau, 1);
    let traj = solve_multi(&exp.system, &schemes, &cfg, exp.spec.horizon)?;
    Ok(error_norms(traj.final_state(), &exp.reference).1)
}

pub fn run_prepared(exp: &Experiment) -> Result<ErrorReport> {
    let spec = &exp.spec;
    let mut report = ErrorReport::default();
    for &scheme in &spec.schemes {
        for &tau in &spec.taus {
            for &sweeps in &spec.sweeps {
                let cfg = spec.split_config(scheme, tau, sweeps);
                let (l2, inf, ms) = match run_cell(exp, &cfg) {
                    Ok((state, ms)) => {
                        let (l2, inf) = error_norms(&state, &exp.reference);
                        (l2, inf, ms)
                    }
                    Err(Error::Divergence { .. }) => (f64::INFINITY, f64::INFINITY, 0.0),
                    Err(e) => return Err(e),
                };
                report.rows.push(ErrorRow {
                    experiment: spec.id,
                    scheme,
                    root_set: spec.root_set_label(),
                    tau,
                    sweeps,
                    error_l2: l2,
                    error_inf: inf,
                    wall_ms: ms,
                    commutator_norm: exp.commutator,
                    oracle: exp.oracle,
                });
            }
        }
    }
    Ok(report)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ErrorReport> {
    run_prepared(&prepare(spec)?)
}
