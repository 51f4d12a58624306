//! Sub-problem solver shared by every scheme.
//!
//! One sweep integrates `c' = M c + sum_l L_l s_l(t)` over a single splitting
//! step with classical RK4 on a uniform substep grid. The lagged iterates
//! `s_l` are only known at the grid nodes (value and derivative), so the
//! stage values at substep midpoints use the cubic Hermite interpolant.

use crate::error::{Error, Result};
use crate::matkernel::RealMatrix;

/// Iterates whose max-norm exceeds this abort the step.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    Zero,
    Diagonal,
    Dense,
}

/// Column-major copy of a real operator with a structural fast path.
#[derive(Debug, Clone)]
pub(crate) struct Op {
    n: usize,
    data: Vec<f64>,
    kind: OpKind,
}

impl Op {
    pub(crate) fn new(m: &RealMatrix) -> Self {
        let n = m.nrows();
        let data = m.as_slice().to_vec();
        let mut kind = OpKind::Zero;
        for j in 0..n {
            for i in 0..n {
                if data[j * n + i] != 0.0 {
                    if i != j {
                        kind = OpKind::Dense;
                    } else if kind == OpKind::Zero {
                        kind = OpKind::Diagonal;
                    }
                }
            }
        }
        Self { n, data, kind }
    }

    /// `y += M x`
    #[inline]
    pub(crate) fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        match self.kind {
            OpKind::Zero => {}
            OpKind::Diagonal => {
                for i in 0..n {
                    y[i] += self.data[i * n + i] * x[i];
                }
            }
            OpKind::Dense => {
                for (j, &xj) in x.iter().enumerate().take(n) {
                    let col = &self.data[j * n..(j + 1) * n];
                    for (yi, &mij) in y.iter_mut().zip(col) {
                        *yi += mij * xj;
                    }
                }
            }
        }
    }
}

/// One iterate sampled on the substep grid of a splitting step: values and
/// time derivatives at `substeps + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    nodes: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// Same value at every node, zero derivative.
    constant: bool,
}

impl Samples {
    fn with_capacity(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            nodes: 0,
            values: Vec::with_capacity(dim * nodes),
            derivs: Vec::with_capacity(dim * nodes),
            constant: false,
        }
    }

    /// The same vector at every node, zero derivative.
    pub fn constant(value: &[f64], nodes: usize) -> Self {
        let dim = value.len();
        let mut values = Vec::with_capacity(dim * nodes);
        for _ in 0..nodes {
            values.extend_from_slice(value);
        }
        Self { dim, nodes, values, derivs: vec![0.0; dim * nodes], constant: true }
    }

    pub fn zeros(dim: usize, nodes: usize) -> Self {
        Self { dim, nodes, values: vec![0.0; dim * nodes], derivs: vec![0.0; dim * nodes], constant: true }
    }

    fn push(&mut self, value: &[f64], deriv: &[f64]) {
        self.values.extend_from_slice(value);
        self.derivs.extend_from_slice(deriv);
        self.nodes += 1;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn deriv(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn end(&self) -> &[f64] {
        self.value(self.nodes - 1)
    }
}

pub(crate) struct SourceTerm<'a> {
    pub op: &'a Op,
    pub samples: &'a Samples,
}

fn source_at(sources: &[SourceTerm<'_>], k: usize, g: &mut [f64], gd: &mut [f64]) {
    g.fill(0.0);
    gd.fill(0.0);
    for s in sources {
        s.op.apply_add(s.samples.value(k), g);
        s.op.apply_add(s.samples.deriv(k), gd);
    }
}

fn check_state(c: &[f64], sub_interval: usize) -> Result<()> {
    let norm = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !norm.is_finite() || norm > DIVERGENCE_LIMIT || c.iter().any(|x| x.is_nan()) {
        return Err(Error::Divergence { sub_interval, norm });
    }
    Ok(())
}

/// RK4 work buffers.
struct Stepper {
    gmid: Vec<f64>,
    y: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Self { gmid: vec![0.0; dim], y: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim] }
    }

    /// Advances `c` by `h`; `k1` is the derivative at the left node,
    /// `g*`/`gd*` the source value and derivative at both nodes.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        active: &Op,
        c: &mut [f64],
        k1: &[f64],
        g0: &[f64],
        g1: &[f64],
        gd0: &[f64],
        gd1: &[f64],
        h: f64,
    ) {
        let d = c.len();
        for i in 0..d {
            self.gmid[i] = 0.5 * (g0[i] + g1[i]) + 0.125 * h * (gd0[i] - gd1[i]);
        }
        for i in 0..d {
            self.y[i] = c[i] + 0.5 * h * k1[i];
        }
        self.k2.copy_from_slice(&self.gmid);
        active.apply_add(&self.y, &mut self.k2);
        for i in 0..d {
            self.y[i] = c[i] + 0.5 * h * self.k2[i];
        }
        self.k3.copy_from_slice(&self.gmid);
        active.apply_add(&self.y, &mut self.k3);
        for i in 0..d {
            self.y[i] = c[i] + h * self.k3[i];
        }
        self.k4.copy_from_slice(g1);
        active.apply_add(&self.y, &mut self.k4);
        for i in 0..d {
            c[i] += h / 6.0 * (k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// `deriv = M c + g`, evaluated as `(0 + M c) + g`.
fn derivative(active: &Op, c: &[f64], g: &[f64], tmp: &mut [f64], deriv: &mut [f64]) {
    tmp.fill(0.0);
    active.apply_add(c, tmp);
    for i in 0..c.len() {
        deriv[i] = tmp[i] + g[i];
    }
}

pub(crate) fn sweep(active: &Op, sources: &[SourceTerm<'_>], c0: &[f64], tau: f64, substeps: usize) -> Result<Samples> {
    let d = c0.len();
    let h = tau / substeps as f64;
    let mut out = Samples::with_capacity(d, substeps + 1);
    let mut stepper = Stepper::new(d);
    let (mut g0, mut gd0, mut g1, mut gd1) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    let mut deriv = vec![0.0; d];
    let mut c = c0.to_vec();

    source_at(sources, 0, &mut g0, &mut gd0);
    derivative(active, &c, &g0, &mut tmp, &mut deriv);
    out.push(&c, &deriv);
    for k in 0..substeps {
        source_at(sources, k + 1, &mut g1, &mut gd1);
        stepper.step(active, &mut c, &deriv, &g0, &g1, &gd0, &gd1, h);
        check_state(&c, k)?;
        derivative(active, &c, &g1, &mut tmp, &mut deriv);
        out.push(&c, &deriv);
        std::mem::swap(&mut g0, &mut g1);
        std::mem::swap(&mut gd0, &mut gd1);
    }
    Ok(out)
}

/// Both half-sweeps of a two-side pair in one pass over the grid: the
/// first-active iterate is advanced one substep, then the second-active
/// iterate follows it using the freshly computed node. Only the second
/// iterate is kept. Arithmetic matches two calls to [`sweep`] exactly.
///
/// Products that both halves need are formed once: `first * c_A` from the
/// first derivative is the second half's source, and `second * c_B` from the
/// second derivative is returned per node so the next pair can take it as
/// its source value (`prev_image`). A constant `prev` is applied once.
pub(crate) fn fused_pair(
    first: &Op,
    second: &Op,
    prev: &Samples,
    prev_image: Option<&[f64]>,
    c0: &[f64],
    tau: f64,
    substeps: usize,
) -> Result<(Samples, Vec<f64>)> {
    let d = c0.len();
    let h = tau / substeps as f64;
    let mut out = Samples::with_capacity(d, substeps + 1);
    let mut image = vec![0.0; d * (substeps + 1)];
    let mut stepper = Stepper::new(d);
    let z = || vec![0.0; d];
    let (mut ga0, mut gda0, mut ga1, mut gda1) = (z(), z(), z(), z());
    let (mut gb0, mut gdb0, mut gb1, mut gdb1) = (z(), z(), z(), z());
    let (mut da, mut db) = (z(), z());
    let mut ca = c0.to_vec();
    let mut cb = c0.to_vec();
    // a constant seed has the same image at every node and a zero derivative
    let seed_image = prev.constant.then(|| {
        let mut g = vec![0.0; d];
        second.apply_add(prev.value(0), &mut g);
        g
    });
    let source_a = |k: usize, g: &mut [f64], gd: &mut [f64]| {
        match (&seed_image, prev_image) {
            (Some(img), _) => g.copy_from_slice(img),
            (None, Some(img)) => g.copy_from_slice(&img[k * d..(k + 1) * d]),
            (None, None) => {
                g.fill(0.0);
                second.apply_add(prev.value(k), g);
            }
        }
        gd.fill(0.0);
        if seed_image.is_none() {
            second.apply_add(prev.deriv(k), gd);
        }
    };

    source_a(0, &mut ga0, &mut gda0);
    derivative(first, &ca, &ga0, &mut gb0, &mut da);
    gdb0.fill(0.0);
    first.apply_add(&da, &mut gdb0);
    derivative(second, &cb, &gb0, &mut image[..d], &mut db);
    out.push(&cb, &db);

    for k in 0..substeps {
        source_a(k + 1, &mut ga1, &mut gda1);
        stepper.step(first, &mut ca, &da, &ga0, &ga1, &gda0, &gda1, h);
        check_state(&ca, k)?;
        derivative(first, &ca, &ga1, &mut gb1, &mut da);
        gdb1.fill(0.0);
        first.apply_add(&da, &mut gdb1);

        stepper.step(second, &mut cb, &db, &gb0, &gb1, &gdb0, &gdb1, h);
        check_state(&cb, k)?;
        derivative(second, &cb, &gb1, &mut image[(k + 1) * d..(k + 2) * d], &mut db);
        out.push(&cb, &db);

        std::mem::swap(&mut ga0, &mut ga1);
        std::mem::swap(&mut gda0, &mut gda1);
        std::mem::swap(&mut gb0, &mut gb1);
        std::mem::swap(&mut gdb0, &mut gdb1);
    }
    Ok((out, image))
}
