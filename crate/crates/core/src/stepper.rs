//! Time marching for the linearized L1 / five-point scheme
//!
//! ```text
//! i D_τ^α Uⁿ + Δ_h Uⁿ + f(|U^{n-1}|²) U^{n-1} = gⁿ,   1 ≤ n ≤ N,
//! ```
//!
//! rearranged so each step is one solve with `σ = i a₀/μ`:
//!
//! ```text
//! (σI + Δ_h) Uⁿ = (i/μ) ( Σ_{i=1}^{n-1} (a_{n-i-1} − a_{n-i}) Uⁱ + a_{n-1} U⁰ )
//!                 − f(|U^{n-1}|²) U^{n-1} + gⁿ.
//! ```

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::caputo::L1Kernel;
use crate::grid::{ComplexField, MeshSpec};
use crate::linsolve::{Backend, ShiftedLaplacian, Solver};
use crate::{Error, Result};

/// Default cap on stored history, 4 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

/// Nodes per block in the history sum; keeps the accumulator in L1 cache.
const SUM_BLOCK: usize = 512;

/// Real coefficient function `f` of the nonlinear term `f(|u|²) u`.
#[derive(Clone)]
pub struct Nonlinearity {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: &'static str,
}

impl Nonlinearity {
    /// `f(s) = s`, the cubic term `|u|² u`.
    pub fn cubic() -> Self {
        Self { f: Arc::new(|s| s), label: "cubic" }
    }

    pub fn zero() -> Self {
        Self { f: Arc::new(|_| 0.0), label: "zero" }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), label: "custom" }
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Self::cubic()
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.label)
    }
}

/// Source term `g(x, y, t)` added to the right-hand side.
pub type Forcing = Arc<dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct SchrodingerProblem {
    mesh: MeshSpec,
    u0: ComplexField,
    nonlinearity: Nonlinearity,
    forcing: Option<Forcing>,
}

impl SchrodingerProblem {
    pub fn new(mesh: MeshSpec, u0: ComplexField, nonlinearity: Nonlinearity) -> Result<Self> {
        if u0.m() != mesh.m() || u0.h() != mesh.h() {
            return Err(Error::MeshMismatch(format!(
                "initial data on M = {}, mesh has M = {}",
                u0.m(),
                mesh.m()
            )));
        }
        if !u0.is_homogeneous() {
            return Err(Error::Domain("initial data must vanish on the boundary".into()));
        }
        Ok(Self { mesh, u0, nonlinearity, forcing: None })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }
    pub fn u0(&self) -> &ComplexField {
        &self.u0
    }
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }
    pub fn forcing(&self) -> Option<&Forcing> {
        self.forcing.as_ref()
    }

    /// The same problem on a mesh with a different number of time steps.
    pub fn with_steps(&self, n: usize) -> Result<Self> {
        Ok(Self { mesh: self.mesh.with_steps(n)?, ..self.clone() })
    }

    /// Same problem with initial data replaced.
    pub fn with_initial(&self, u0: ComplexField) -> Result<Self> {
        let mut p = Self::new(self.mesh, u0, self.nonlinearity.clone())?;
        p.forcing = self.forcing.clone();
        Ok(p)
    }
}

impl fmt::Debug for SchrodingerProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchrodingerProblem")
            .field("mesh", &self.mesh)
            .field("nonlinearity", &self.nonlinearity)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

/// Time levels `U⁰ … Uⁿ`, interior blocks stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    m: usize,
    h: f64,
    tau: f64,
    data: Vec<Complex64>,
}

impl History {
    pub fn new(mesh: &MeshSpec, u0: &ComplexField) -> Self {
        let mut data = Vec::new();
        data.extend_from_slice(&u0.interior());
        Self { m: mesh.m(), h: mesh.h(), tau: mesh.tau(), data }
    }

    fn with_capacity(mesh: &MeshSpec, u0: &ComplexField, levels: usize) -> Self {
        let mut data = Vec::with_capacity(levels * mesh.interior_len());
        data.extend_from_slice(&u0.interior());
        Self { m: mesh.m(), h: mesh.h(), tau: mesh.tau(), data }
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn dim(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }

    /// Number of stored levels.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Interior block of level `n`.
    pub fn level(&self, n: usize) -> &[Complex64] {
        let d = self.dim();
        &self.data[n * d..(n + 1) * d]
    }

    pub fn last(&self) -> &[Complex64] {
        self.level(self.len() - 1)
    }

    pub fn field(&self, n: usize) -> ComplexField {
        ComplexField::from_interior(self.m, self.h, self.level(n))
    }

    pub fn push(&mut self, level: &ComplexField) -> Result<()> {
        if level.m() != self.m {
            return Err(Error::MeshMismatch("level on a different mesh".into()));
        }
        if !level.is_homogeneous() {
            return Err(Error::Domain("history levels must vanish on the boundary".into()));
        }
        self.data.extend_from_slice(&level.interior());
        Ok(())
    }

    fn push_interior(&mut self, block: &[Complex64]) {
        debug_assert_eq!(block.len(), self.dim());
        self.data.extend_from_slice(block);
    }
}

/// `acc = a_{n-1} U⁰ + Σ_{i=1}^{n-1} (a_{n-i-1} − a_{n-i}) Uⁱ` over levels
/// `0..n`, summed per node from `i = n-1` down to `0`.
fn history_sum(levels: &History, n: usize, a: &[f64], acc: &mut [Complex64]) {
    let d = levels.dim();
    let weights: Vec<f64> = (1..n).map(|i| a[n - i - 1] - a[n - i]).collect();
    for start in (0..d).step_by(SUM_BLOCK) {
        let end = (start + SUM_BLOCK).min(d);
        let block = &mut acc[start..end];
        block.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for i in (1..n).rev() {
            let w = weights[i - 1];
            let src = &levels.level(i)[start..end];
            for (dst, u) in block.iter_mut().zip(src) {
                *dst += u * w;
            }
        }
        let w = a[n - 1];
        for (dst, u) in block.iter_mut().zip(&levels.level(0)[start..end]) {
            *dst += u * w;
        }
    }
}

fn sample_forcing(g: &Forcing, m: usize, h: f64, t: f64, out: &mut [Complex64]) {
    let n = m - 1;
    for j in 0..n {
        let x = (j + 1) as f64 * h;
        for k in 0..n {
            out[j * n + k] = g(x, (k + 1) as f64 * h, t);
        }
    }
}

/// Interior right-hand side of step `n`; `forcing` is `gⁿ` already sampled.
fn assemble_rhs_into(
    n: usize,
    history: &History,
    kernel: &L1Kernel,
    nl: &Nonlinearity,
    forcing: Option<&[Complex64]>,
    out: &mut [Complex64],
) {
    history_sum(history, n, kernel.a(), out);
    let coef = Complex64::new(0.0, 1.0 / kernel.mu());
    let prev = history.level(n - 1);
    for (o, p) in out.iter_mut().zip(prev) {
        let s = p.re * p.re + p.im * p.im;
        *o = *o * coef - p * nl.eval(s);
    }
    if let Some(g) = forcing {
        for (o, gv) in out.iter_mut().zip(g) {
            *o += gv;
        }
    }
}

fn check_step(n: usize, history: &History) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("steps are numbered from 1".into()));
    }
    if history.len() < n {
        return Err(Error::HistoryIncomplete { step: n, got: history.len() });
    }
    Ok(())
}

/// Right-hand side of the step-`n` system, built from levels `0..n` of
/// `history`; the forcing (if any) is sampled at `t_n`.
pub fn assemble_rhs(
    n: usize,
    history: &History,
    kernel: &L1Kernel,
    nl: &Nonlinearity,
    forcing: Option<&Forcing>,
    mesh: &MeshSpec,
) -> Result<ComplexField> {
    check_step(n, history)?;
    if n > kernel.steps() {
        return Err(Error::Domain(format!("step {n} beyond kernel length {}", kernel.steps())));
    }
    let d = mesh.interior_len();
    let g = forcing.map(|g| {
        let mut buf = vec![Complex64::new(0.0, 0.0); d];
        sample_forcing(g, mesh.m(), mesh.h(), mesh.t(n), &mut buf);
        buf
    });
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    assemble_rhs_into(n, history, kernel, nl, g.as_deref(), &mut out);
    Ok(ComplexField::from_interior(mesh.m(), mesh.h(), &out))
}

/// `σ = i a₀ / μ`.
pub fn scheme_shift(kernel: &L1Kernel) -> Complex64 {
    Complex64::new(0.0, kernel.a()[0] / kernel.mu())
}

/// Computes `Uⁿ` from levels `0..n`. The caller owns the history.
pub fn step(
    n: usize,
    history: &History,
    kernel: &L1Kernel,
    nl: &Nonlinearity,
    forcing: Option<&Forcing>,
    solver: &Solver,
) -> Result<ComplexField> {
    check_step(n, history)?;
    if n > kernel.steps() {
        return Err(Error::Domain(format!("step {n} beyond kernel length {}", kernel.steps())));
    }
    let op = solver.operator();
    if op.m() != history.m() {
        return Err(Error::MeshMismatch("solver and history use different meshes".into()));
    }
    let d = history.dim();
    let g = forcing.map(|g| {
        let mut buf = vec![Complex64::new(0.0, 0.0); d];
        sample_forcing(g, history.m(), history.h(), n as f64 * history.tau(), &mut buf);
        buf
    });
    let mut rhs = vec![Complex64::new(0.0, 0.0); d];
    assemble_rhs_into(n, history, kernel, nl, g.as_deref(), &mut rhs);
    let u = solver.solve_interior(&rhs);
    Ok(ComplexField::from_interior(history.m(), history.h(), &u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub backend: Backend,
    pub memory_cap_bytes: u64,
    /// Sample every `gⁿ` up front instead of once per step.
    pub precompute_forcing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { backend: Backend::Dst, memory_cap_bytes: DEFAULT_MEMORY_CAP, precompute_forcing: false }
    }
}

impl RunOptions {
    pub fn with_backend(backend: Backend) -> Self {
        Self { backend, ..Self::default() }
    }
}

/// Bytes needed to hold `levels` interior blocks of `mesh`.
pub fn history_bytes(mesh: &MeshSpec, levels: usize) -> u64 {
    levels as u64 * mesh.interior_len() as u64 * std::mem::size_of::<Complex64>() as u64
}

pub fn run(problem: &SchrodingerProblem, backend: Backend) -> Result<History> {
    run_with(problem, &RunOptions::with_backend(backend))
}

/// Marches all `N` steps and returns the `N + 1` levels.
pub fn run_with(problem: &SchrodingerProblem, opts: &RunOptions) -> Result<History> {
    let mesh = problem.mesh();
    let n_steps = mesh.n();
    let needed = history_bytes(mesh, n_steps + 1);
    if needed > opts.memory_cap_bytes {
        return Err(Error::MemoryBudgetExceeded { needed, cap: opts.memory_cap_bytes });
    }

    let kernel = L1Kernel::new(mesh.alpha(), mesh.tau(), n_steps)?;
    let op = ShiftedLaplacian::new(scheme_shift(&kernel), mesh);
    let solver = Solver::new(opts.backend, op)?;

    let d = mesh.interior_len();
    let (m, h) = (mesh.m(), mesh.h());
    let forcing_table: Option<Vec<Complex64>> = match (problem.forcing(), opts.precompute_forcing) {
        (Some(g), true) => {
            let mut table = vec![Complex64::new(0.0, 0.0); n_steps * d];
            for (i, chunk) in table.chunks_mut(d).enumerate() {
                sample_forcing(g, m, h, mesh.t(i + 1), chunk);
            }
            Some(table)
        }
        _ => None,
    };

    let mut history = History::with_capacity(mesh, problem.u0(), n_steps + 1);
    let mut rhs = vec![Complex64::new(0.0, 0.0); d];
    let mut g_buf = vec![Complex64::new(0.0, 0.0); d];
    for n in 1..=n_steps {
        let g: Option<&[Complex64]> = match (&forcing_table, problem.forcing()) {
            (Some(table), _) => Some(&table[(n - 1) * d..n * d]),
            (None, Some(g)) => {
                sample_forcing(g, m, h, mesh.t(n), &mut g_buf);
                Some(&g_buf)
            }
            (None, None) => None,
        };
        assemble_rhs_into(n, &history, &kernel, problem.nonlinearity(), g, &mut rhs);
        let u = solver.solve_interior(&rhs);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("solution at step {n}")));
        }
        history.push_interior(&u);
    }
    Ok(history)
}

/// `D_τ^α Uⁿ` of a stored history, as an interior block.
pub fn l1_derivative(history: &History, kernel: &L1Kernel, n: usize) -> Result<Vec<Complex64>> {
    if n == 0 || n >= history.len() {
        return Err(Error::HistoryTooShort { needed: n + 1, got: history.len() });
    }
    if n > kernel.steps() {
        return Err(Error::Domain(format!("level {n} beyond kernel length {}", kernel.steps())));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); history.dim()];
    history_sum(history, n, kernel.a(), &mut acc);
    let a0 = kernel.a()[0];
    let inv_mu = 1.0 / kernel.mu();
    for (o, u) in acc.iter_mut().zip(history.level(n)) {
        *o = (u * a0 - *o) * inv_mu;
    }
    Ok(acc)
}
