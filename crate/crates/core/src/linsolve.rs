//! Solvers for the complex shifted Laplacian `(σI + Δ_h) U = b` with zero
//! Dirichlet data.
//!
//! The production path diagonalizes Δ_h with the type-I discrete sine
//! transform: sine modes are exact eigenvectors, so
//! `Û_{pq} = b̂_{pq} / (σ + λ_{pq})`. A dense Gaussian-elimination solver is
//! kept as an independent reference for small meshes.

use num_complex::Complex64;

use crate::grid::{add_laplacian_interior, laplacian_eigenvalue, ComplexField, MeshSpec};
use crate::{Error, Result};

/// Largest `M` the dense reference accepts (interior dimension 529).
pub const DENSE_MAX_M: usize = 24;

/// `σI + Δ_h` on the interior of an `M × M` mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedLaplacian {
    sigma: Complex64,
    m: usize,
    h: f64,
}

impl ShiftedLaplacian {
    pub fn new(sigma: Complex64, mesh: &MeshSpec) -> Self {
        Self { sigma, m: mesh.m(), h: mesh.h() }
    }

    pub fn with_grid(sigma: Complex64, m: usize, h: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("M must be at least 2, got {m}")));
        }
        Ok(Self { sigma, m, h })
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    /// `σu + Δ_h u`.
    pub fn apply(&self, u: &ComplexField) -> Result<ComplexField> {
        self.check_field(u)?;
        let out = self.apply_interior(&u.interior());
        Ok(ComplexField::from_interior(self.m, self.h, &out))
    }

    pub fn apply_interior(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = u.iter().map(|v| self.sigma * v).collect();
        add_laplacian_interior(u, self.m, self.h, &mut out);
        out
    }

    /// Eigenvalues `σ + λ_{pq}`, row-major in `(p-1, q-1)`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let n = self.m - 1;
        let mut out = Vec::with_capacity(n * n);
        for p in 1..self.m {
            for q in 1..self.m {
                out.push(self.sigma + laplacian_eigenvalue(p, q, self.m, self.h));
            }
        }
        out
    }

    fn check_field(&self, u: &ComplexField) -> Result<()> {
        if u.m() != self.m || u.h() != self.h {
            return Err(Error::MeshMismatch(format!(
                "operator on M = {}, field on M = {}",
                self.m,
                u.m()
            )));
        }
        if !u.is_homogeneous() {
            return Err(Error::Domain("right-hand side must vanish on the boundary".into()));
        }
        Ok(())
    }
}

/// Type-I sine transform on `(M-1) × (M-1)` interior blocks, applied as a row
/// pass and a column pass with a precomputed sine matrix.
#[derive(Debug, Clone)]
pub struct SineTransform {
    m: usize,
    sines: Vec<f64>,
}

impl SineTransform {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "M must be at least 2");
        let n = m - 1;
        let mut sines = vec![0.0; n * n];
        for p in 1..m {
            for j in 1..m {
                // reduce the angle argument so large M keeps full accuracy
                let r = (p * j) % (2 * m);
                sines[(p - 1) * n + (j - 1)] = (std::f64::consts::PI * r as f64 / m as f64).sin();
            }
        }
        Self { m, sines }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ŭ_{pq} = Σ_{j,k} u_{jk} sin(jpπ/M) sin(kqπ/M)`.
    pub fn forward(&self, block: &[Complex64]) -> Vec<Complex64> {
        let n = self.m - 1;
        assert_eq!(block.len(), n * n, "block has the wrong size");
        let zero = Complex64::new(0.0, 0.0);
        let s = &self.sines;

        // rows: t[j][q] = Σ_k u[j][k] S[k][q]
        let mut t = vec![zero; n * n];
        for j in 0..n {
            let row = &mut t[j * n..(j + 1) * n];
            for k in 0..n {
                let u = block[j * n + k];
                for (dst, sk) in row.iter_mut().zip(&s[k * n..(k + 1) * n]) {
                    *dst += u * *sk;
                }
            }
        }
        // columns: out[p][q] = Σ_j S[p][j] t[j][q]
        let mut out = vec![zero; n * n];
        for p in 0..n {
            let row = &mut out[p * n..(p + 1) * n];
            for j in 0..n {
                let w = s[p * n + j];
                for (dst, tv) in row.iter_mut().zip(&t[j * n..(j + 1) * n]) {
                    *dst += tv * w;
                }
            }
        }
        out
    }

    /// Inverse transform: the forward transform scaled by `(2/M)²`.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let scale = (2.0 / self.m as f64).powi(2);
        let mut out = self.forward(coeffs);
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

pub fn dst1_forward(block: &[Complex64], m: usize) -> Vec<Complex64> {
    SineTransform::new(m).forward(block)
}

pub fn dst1_inverse(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    SineTransform::new(m).inverse(coeffs)
}

/// `num / den` by Smith's scaled algorithm.
fn smith_div(num: Complex64, den: Complex64) -> Complex64 {
    let (a, b, c, d) = (num.re, num.im, den.re, den.im);
    if c.abs() >= d.abs() {
        let r = d / c;
        let t = c + d * r;
        Complex64::new((a + b * r) / t, (b - a * r) / t)
    } else {
        let r = c / d;
        let t = c * r + d;
        Complex64::new((a * r + b) / t, (b * r - a) / t)
    }
}

/// Fast-diagonalization solver; the transform and eigenvalue table are built
/// once and reused for every right-hand side.
#[derive(Debug, Clone)]
pub struct DstSolver {
    op: ShiftedLaplacian,
    transform: SineTransform,
    denom: Vec<Complex64>,
}

impl DstSolver {
    pub fn new(op: ShiftedLaplacian) -> Result<Self> {
        let denom = op.spectrum();
        let min = denom.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        // relative to the operator scale, so rounding in sin² still counts as singular
        let scale = op.sigma().norm() + 8.0 / (op.h() * op.h());
        if !(min > 64.0 * f64::EPSILON * scale) {
            return Err(Error::SingularShift(min));
        }
        Ok(Self { op, transform: SineTransform::new(op.m()), denom })
    }

    pub fn operator(&self) -> &ShiftedLaplacian {
        &self.op
    }

    pub fn solve_interior(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut coeffs = self.transform.forward(b);
        for (c, d) in coeffs.iter_mut().zip(&self.denom) {
            *c = smith_div(*c, *d);
        }
        self.transform.inverse(&coeffs)
    }
}

/// Dense LU factorization (partial pivoting) of the assembled operator.
#[derive(Debug, Clone)]
pub struct DenseSolver {
    op: ShiftedLaplacian,
    dim: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl DenseSolver {
    pub fn new(op: ShiftedLaplacian) -> Result<Self> {
        if op.m() > DENSE_MAX_M {
            return Err(Error::TooLarge { m: op.m(), max: DENSE_MAX_M });
        }
        let n = op.m() - 1;
        let dim = n * n;
        let zero = Complex64::new(0.0, 0.0);
        let inv_h2 = 1.0 / (op.h() * op.h());

        let mut a = vec![zero; dim * dim];
        for j in 0..n {
            for k in 0..n {
                let r = j * n + k;
                a[r * dim + r] = op.sigma() - 4.0 * inv_h2;
                if j > 0 {
                    a[r * dim + r - n] += inv_h2;
                }
                if j + 1 < n {
                    a[r * dim + r + n] += inv_h2;
                }
                if k > 0 {
                    a[r * dim + r - 1] += inv_h2;
                }
                if k + 1 < n {
                    a[r * dim + r + 1] += inv_h2;
                }
            }
        }

        let mut pivots = vec![0; dim];
        for col in 0..dim {
            let (prow, pmag) = (col..dim)
                .map(|r| (r, a[r * dim + col].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag < 1e-250 {
                return Err(Error::NearSingular(pmag));
            }
            pivots[col] = prow;
            if prow != col {
                for c in 0..dim {
                    a.swap(col * dim + c, prow * dim + c);
                }
            }
            let pivot = a[col * dim + col];
            for r in col + 1..dim {
                let factor = smith_div(a[r * dim + col], pivot);
                if factor == zero {
                    continue;
                }
                a[r * dim + col] = factor;
                for c in col + 1..dim {
                    let v = a[col * dim + c];
                    a[r * dim + c] -= factor * v;
                }
            }
        }
        Ok(Self { op, dim, lu: a, pivots })
    }

    pub fn operator(&self) -> &ShiftedLaplacian {
        &self.op
    }

    pub fn solve_interior(&self, b: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim;
        assert_eq!(b.len(), dim, "right-hand side has the wrong size");
        let mut x = b.to_vec();
        for col in 0..dim {
            x.swap(col, self.pivots[col]);
        }
        for r in 0..dim {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * dim + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..dim).rev() {
            let mut s = x[r];
            for c in r + 1..dim {
                s -= self.lu[r * dim + c] * x[c];
            }
            x[r] = smith_div(s, self.lu[r * dim + r]);
        }
        x
    }
}

/// Solves `(σI + Δ_h) U = b` by sine-transform diagonalization.
pub fn solve_dst(op: &ShiftedLaplacian, b: &ComplexField) -> Result<ComplexField> {
    op.check_field(b)?;
    let solver = DstSolver::new(*op)?;
    Ok(ComplexField::from_interior(op.m(), op.h(), &solver.solve_interior(&b.interior())))
}

/// Solves `(σI + Δ_h) U = b` by dense elimination; `M ≤ 24` only.
pub fn solve_dense_reference(op: &ShiftedLaplacian, b: &ComplexField) -> Result<ComplexField> {
    op.check_field(b)?;
    let solver = DenseSolver::new(*op)?;
    Ok(ComplexField::from_interior(op.m(), op.h(), &solver.solve_interior(&b.interior())))
}

/// Which linear solver a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Dst,
    Dense,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dst" => Ok(Backend::Dst),
            "dense" => Ok(Backend::Dense),
            other => Err(format!("unknown backend '{other}' (expected dst or dense)")),
        }
    }
}

/// A factored solver for one operator, reused across time steps.
#[derive(Debug, Clone)]
pub enum Solver {
    Dst(DstSolver),
    Dense(DenseSolver),
}

impl Solver {
    pub fn new(backend: Backend, op: ShiftedLaplacian) -> Result<Self> {
        Ok(match backend {
            Backend::Dst => Solver::Dst(DstSolver::new(op)?),
            Backend::Dense => Solver::Dense(DenseSolver::new(op)?),
        })
    }

    pub fn operator(&self) -> &ShiftedLaplacian {
        match self {
            Solver::Dst(s) => s.operator(),
            Solver::Dense(s) => s.operator(),
        }
    }

    pub fn solve_interior(&self, b: &[Complex64]) -> Vec<Complex64> {
        match self {
            Solver::Dst(s) => s.solve_interior(b),
            Solver::Dense(s) => s.solve_interior(b),
        }
    }
}
