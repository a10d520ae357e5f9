//! Numerical experiments on the unit square with `T = 1`:
//!
//! * manufactured solution `u = (t^α − 1)(1 + i) sin(πx) sin(πy)` with local
//!   and global L² errors ([`convergence_table`], [`grid_ratio_study`]);
//! * two-mesh error estimates for problems without a closed-form solution
//!   ([`two_mesh`], [`two_mesh_table`]);
//! * sensitivity to perturbed initial data ([`stability_experiment`]).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::caputo::gamma;
use crate::grid::{interior_l2_distance, interior_l2_norm, sample, MeshSpec};
use crate::rates::log2_rate;
use crate::stepper::{run_with, Forcing, History, Nonlinearity, RunOptions, SchrodingerProblem};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sin_sin(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

/// Exact solution `(t^α − 1)(1 + i) sin(πx) sin(πy)` of the manufactured
/// problem.
pub fn manufactured_exact(alpha: f64) -> impl Fn(f64, f64, f64) -> Complex64 + Send + Sync + Clone {
    move |x, y, t| c(1.0, 1.0) * ((t.powf(alpha) - 1.0) * sin_sin(x, y))
}

/// Source term that makes [`manufactured_exact`] solve
/// `i D_t^α u + Δu + |u|²u = g`; uses `D_t^α (t^α − 1) = Γ(1+α)`.
pub fn manufactured_forcing(alpha: f64) -> impl Fn(f64, f64, f64) -> Complex64 + Send + Sync + Clone {
    let g_alpha = gamma(1.0 + alpha);
    move |x, y, t| {
        let s = sin_sin(x, y);
        let w = t.powf(alpha) - 1.0;
        c(-1.0, 1.0) * (g_alpha * s) - c(1.0, 1.0) * (2.0 * PI * PI * w * s)
            + c(1.0, 1.0) * (2.0 * w * w * w * s * s * s)
    }
}

/// The three test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Manufactured weakly singular solution with forcing.
    Manufactured,
    /// Unforced, `u₀ = sin(πx) sin(πy)`.
    SmoothInitial,
    /// Unforced, `u₀ = x sin(πy)` for `x ≤ 1/2` and zero beyond.
    KinkedInitial,
}

impl Example {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Example::Manufactured),
            2 => Some(Example::SmoothInitial),
            3 => Some(Example::KinkedInitial),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Example::Manufactured => 1,
            Example::SmoothInitial => 2,
            Example::KinkedInitial => 3,
        }
    }

    pub fn initial(self, alpha: f64) -> Box<dyn Fn(f64, f64) -> Complex64> {
        match self {
            Example::Manufactured => {
                let u = manufactured_exact(alpha);
                Box::new(move |x, y| u(x, y, 0.0))
            }
            Example::SmoothInitial => Box::new(|x, y| c(sin_sin(x, y), 0.0)),
            // x = 1/2 belongs to the left branch
            Example::KinkedInitial => Box::new(|x, y| {
                if x <= 0.5 {
                    c(x * (PI * y).sin(), 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
        }
    }

    /// Problem on the unit square, `T = 1`.
    pub fn problem(self, alpha: f64, m: usize, n: usize) -> Result<SchrodingerProblem> {
        self.problem_on(MeshSpec::unit(alpha, m, n)?)
    }

    pub fn problem_on(self, mesh: MeshSpec) -> Result<SchrodingerProblem> {
        let u0 = sample(self.initial(mesh.alpha()), &mesh)?;
        let p = SchrodingerProblem::new(mesh, u0, Nonlinearity::cubic())?;
        Ok(match self {
            Example::Manufactured => {
                let g: Forcing = Arc::new(manufactured_forcing(mesh.alpha()));
                p.with_forcing(g)
            }
            _ => p,
        })
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl FromStr for Example {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(Example::from_id)
            .ok_or_else(|| format!("example must be 1, 2 or 3, got '{s}'"))
    }
}

/// Errors of one manufactured-solution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    /// `‖u(t_N) − U^N‖`
    pub local_error: f64,
    /// `max_{1≤n≤N} ‖u(t_n) − Uⁿ‖`
    pub global_error: f64,
    pub local_rate: Option<f64>,
    pub global_rate: Option<f64>,
}

/// `‖u(t_n) − Uⁿ‖` for every stored level against the manufactured solution.
pub fn error_profile(history: &History, mesh: &MeshSpec) -> Vec<f64> {
    let exact = manufactured_exact(mesh.alpha());
    let m = mesh.m();
    let d = mesh.interior_len();
    let mut buf = vec![c(0.0, 0.0); d];
    (0..history.len())
        .map(|n| {
            let t = mesh.t(n);
            for j in 1..m {
                for k in 1..m {
                    buf[(j - 1) * (m - 1) + (k - 1)] = exact(mesh.x(j), mesh.x(k), t);
                }
            }
            interior_l2_distance(history.level(n), &buf, mesh.h())
        })
        .collect()
}

/// Runs the manufactured problem on `mesh` and measures local and global
/// errors.
pub fn manufactured_errors(mesh: MeshSpec, opts: &RunOptions) -> Result<ErrorReport> {
    let problem = Example::Manufactured.problem_on(mesh)?;
    let history = run_with(&problem, opts)?;
    let profile = error_profile(&history, &mesh);
    let local_error = *profile.last().unwrap();
    let global_error = profile[1..].iter().copied().fold(0.0, f64::max);
    Ok(ErrorReport {
        alpha: mesh.alpha(),
        n: mesh.n(),
        m: mesh.m(),
        local_error,
        global_error,
        local_rate: None,
        global_rate: None,
    })
}

/// `M = ⌈√N⌉`, which keeps the spatial error below the temporal one.
pub fn default_space_steps(n: usize) -> usize {
    let mut m = (n as f64).sqrt().ceil() as usize;
    // guard the float rounding of perfect squares
    while m > 1 && (m - 1) * (m - 1) >= n {
        m -= 1;
    }
    while m * m < n {
        m += 1;
    }
    m.max(2)
}

/// Manufactured-solution errors for every `(α, N)`, grouped by `α` in input
/// order. Rates compare consecutive rows of the same `α`.
pub fn convergence_table(
    alphas: &[f64],
    ns: &[usize],
    m_override: Option<usize>,
    opts: &RunOptions,
) -> Result<Vec<ErrorReport>> {
    let mut rows = Vec::with_capacity(alphas.len() * ns.len());
    for &alpha in alphas {
        let mut prev: Option<ErrorReport> = None;
        for &n in ns {
            let m = m_override.unwrap_or_else(|| default_space_steps(n));
            let mut row = manufactured_errors(MeshSpec::unit(alpha, m, n)?, opts)?;
            if let Some(p) = prev {
                row.local_rate = log2_rate(p.local_error, row.local_error);
                row.global_rate = log2_rate(p.global_error, row.global_error);
            }
            prev = Some(row);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRatioCell {
    pub alpha: f64,
    pub tau: f64,
    pub h: f64,
    pub n: usize,
    pub m: usize,
    pub local_error: f64,
}

/// Manufactured-solution local errors for explicit `(τ, h)` pairs.
pub fn grid_ratio_study(alpha: f64, pairs: &[(f64, f64)], opts: &RunOptions) -> Result<Vec<GridRatioCell>> {
    pairs
        .iter()
        .map(|&(tau, h)| {
            let mesh = MeshSpec::from_steps(alpha, 1.0, 1.0, h, tau)?;
            let report = manufactured_errors(mesh, opts)?;
            Ok(GridRatioCell { alpha, tau, h, n: mesh.n(), m: mesh.m(), local_error: report.local_error })
        })
        .collect()
}

/// Two-mesh estimate: `e_L = ‖U^N − W^{2N}‖` at `T`, where `W` uses twice as
/// many steps on the same spatial mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoMeshReport {
    pub alpha: f64,
    /// Steps of the coarse run; the fine run uses `2n`.
    pub n: usize,
    pub m: usize,
    pub e_l: f64,
    pub rate: Option<f64>,
}

fn final_level(example: Example, alpha: f64, m: usize, n: usize, opts: &RunOptions) -> Result<(Vec<Complex64>, f64)> {
    let problem = example.problem(alpha, m, n)?;
    let history = run_with(&problem, opts)?;
    Ok((history.last().to_vec(), problem.mesh().h()))
}

pub fn two_mesh(example: Example, alpha: f64, n: usize, m: usize, opts: &RunOptions) -> Result<TwoMeshReport> {
    let (coarse, h) = final_level(example, alpha, m, n, opts)?;
    let (fine, _) = final_level(example, alpha, m, 2 * n, opts)?;
    Ok(TwoMeshReport { alpha, n, m, e_l: interior_l2_distance(&coarse, &fine, h), rate: None })
}

/// Two-mesh errors for a ladder of coarse step counts; runs shared between
/// neighbouring rows are computed once. Rates are `log₂` of consecutive
/// ratios.
pub fn two_mesh_table(
    example: Example,
    alphas: &[f64],
    coarse_ns: &[usize],
    m: usize,
    opts: &RunOptions,
) -> Result<Vec<TwoMeshReport>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        let mut cache: Vec<(usize, Vec<Complex64>)> = Vec::new();
        let mut level = |n: usize| -> Result<(Vec<Complex64>, f64)> {
            if let Some((_, v)) = cache.iter().find(|(k, _)| *k == n) {
                return Ok((v.clone(), 1.0 / m as f64));
            }
            let (v, h) = final_level(example, alpha, m, n, opts)?;
            cache.push((n, v.clone()));
            Ok((v, h))
        };
        let mut prev: Option<f64> = None;
        for &n in coarse_ns {
            let (coarse, h) = level(n)?;
            let (fine, _) = level(2 * n)?;
            let e_l = interior_l2_distance(&coarse, &fine, h);
            let rate = prev.and_then(|p| log2_rate(p, e_l));
            prev = Some(e_l);
            rows.push(TwoMeshReport { alpha, n, m, e_l, rate });
        }
    }
    Ok(rows)
}

/// `max_n ‖Uⁿ − Ũⁿ‖ / ‖u₀ − ũ₀‖` for the smooth-initial-data problem with
/// `ũ₀ = (1 + ε) u₀`. Returns 0 when `ε = 0`.
pub fn stability_experiment(alpha: f64, n: usize, m: usize, epsilon: f64, opts: &RunOptions) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let base = Example::SmoothInitial.problem(alpha, m, n)?;
    let perturbed_u0 = base.u0().scale(c(1.0 + epsilon, 0.0));
    let initial_gap = base.u0().sub(&perturbed_u0)?.l2_norm();
    let perturbed = base.with_initial(perturbed_u0)?;
    let a = run_with(&base, opts)?;
    let b = run_with(&perturbed, opts)?;
    let h = base.mesh().h();
    let max_gap = (1..a.len()).map(|k| interior_l2_distance(a.level(k), b.level(k), h)).fold(0.0, f64::max);
    Ok(max_gap / initial_gap)
}

/// `max_n ‖Uⁿ‖_∞` over a history.
pub fn max_linf(history: &History) -> f64 {
    (0..history.len())
        .map(|n| history.level(n).iter().map(|v| v.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// `‖Uⁿ‖` for every stored level.
pub fn l2_profile(history: &History) -> Vec<f64> {
    (0..history.len()).map(|n| interior_l2_norm(history.level(n), history.h())).collect()
}
