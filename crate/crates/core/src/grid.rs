//! Uniform space-time mesh, complex grid functions on `[0, L]²` and the
//! discrete operators that act on them.

use num_complex::Complex64;

use crate::{Error, Result};

/// Boundary samples below this modulus are snapped to exact zero.
pub const BOUNDARY_TOL: f64 = 1e-14;

/// Uniform discretization of `(0, L)² × (0, T]` with `M` cells per axis and
/// `N` time steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    alpha: f64,
    length: f64,
    final_time: f64,
    m: usize,
    n: usize,
}

impl MeshSpec {
    pub fn new(alpha: f64, length: f64, final_time: f64, m: usize, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("L must be positive, got {length}")));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::Domain(format!("T must be positive, got {final_time}")));
        }
        if m < 2 {
            return Err(Error::Domain(format!("M must be at least 2, got {m}")));
        }
        if n < 1 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        Ok(Self { alpha, length, final_time, m, n })
    }

    /// Unit square and unit final time.
    pub fn unit(alpha: f64, m: usize, n: usize) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0, m, n)
    }

    /// Builds a mesh from step sizes; both must divide their interval into a
    /// whole number of steps.
    pub fn from_steps(alpha: f64, length: f64, final_time: f64, h: f64, tau: f64) -> Result<Self> {
        let m = whole_steps(length, h, "h")?;
        let n = whole_steps(final_time, tau, "tau")?;
        Self::new(alpha, length, final_time, m, n)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn final_time(&self) -> f64 {
        self.final_time
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.length / self.m as f64
    }
    pub fn tau(&self) -> f64 {
        self.final_time / self.n as f64
    }
    /// Spatial coordinate of node index `j` (same for both axes).
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }

    /// Same spatial mesh with a different number of time steps.
    pub fn with_steps(&self, n: usize) -> Result<Self> {
        Self::new(self.alpha, self.length, self.final_time, self.m, n)
    }

    /// Number of interior unknowns `(M-1)²`.
    pub fn interior_len(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }
}

fn whole_steps(interval: f64, step: f64, name: &str) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive, got {step}")));
    }
    let ratio = interval / step;
    let count = ratio.round();
    if count < 1.0 || (ratio - count).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Domain(format!(
            "{name} = {step} does not divide {interval} into whole steps"
        )));
    }
    Ok(count as usize)
}

/// Complex grid function on the `(M+1)²` lattice of a square mesh.
///
/// Storage is row-major in `(j, k)`: node `(x_j, y_k)` lives at
/// `j * (M + 1) + k`. Boundary nodes are stored explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    m: usize,
    h: f64,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(m: usize, h: f64) -> Self {
        Self { m, h, values: vec![Complex64::new(0.0, 0.0); (m + 1) * (m + 1)] }
    }

    pub fn zeros_like(mesh: &MeshSpec) -> Self {
        Self::zeros(mesh.m(), mesh.h())
    }

    /// Wraps a full lattice; rejects wrong lengths and non-finite entries.
    pub fn from_values(m: usize, h: f64, values: Vec<Complex64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("M must be at least 2, got {m}")));
        }
        if values.len() != (m + 1) * (m + 1) {
            return Err(Error::MeshMismatch(format!(
                "expected {} values for M = {m}, got {}",
                (m + 1) * (m + 1),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field entry {i}")));
        }
        Ok(Self { m, h, values })
    }

    /// Builds a field in W_h⁰ from its interior block, stored row-major in
    /// `(j-1, k-1)`.
    pub fn from_interior(m: usize, h: f64, interior: &[Complex64]) -> Self {
        let n = m - 1;
        assert_eq!(interior.len(), n * n, "interior block has the wrong size");
        let mut field = Self::zeros(m, h);
        for j in 1..m {
            let row = &interior[(j - 1) * n..j * n];
            field.values[j * (m + 1) + 1..j * (m + 1) + m].copy_from_slice(row);
        }
        field
    }

    pub fn interior(&self) -> Vec<Complex64> {
        let m = self.m;
        let mut out = Vec::with_capacity((m - 1) * (m - 1));
        for j in 1..m {
            out.extend_from_slice(&self.values[j * (m + 1) + 1..j * (m + 1) + m]);
        }
        out
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * (self.m + 1) + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: Complex64) {
        let m = self.m;
        self.values[j * (m + 1) + k] = value;
    }

    /// True if every boundary entry is exactly zero.
    pub fn is_homogeneous(&self) -> bool {
        let m = self.m;
        (0..=m).all(|i| {
            [self.get(0, i), self.get(m, i), self.get(i, 0), self.get(i, m)]
                .iter()
                .all(|v| v.re == 0.0 && v.im == 0.0)
        })
    }

    fn check_same_mesh(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.h != other.h {
            return Err(Error::MeshMismatch(format!(
                "(M = {}, h = {}) vs (M = {}, h = {})",
                self.m, self.h, other.m, other.h
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`, nodewise.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        self.check_same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(u, v)| a * u + b * v).collect();
        Ok(Self { m: self.m, h: self.h, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self { m: self.m, h: self.h, values: self.values.iter().map(|v| a * v).collect() }
    }

    /// Five-point Laplacian Δ_h = δ_x² + δ_y² on interior nodes; boundary
    /// output is zero.
    pub fn laplacian_5pt(&self) -> Self {
        let m = self.m;
        let stride = m + 1;
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = Self::zeros(m, self.h);
        let u = &self.values;
        for j in 1..m {
            for k in 1..m {
                let c = j * stride + k;
                out.values[c] =
                    (u[c - stride] + u[c + stride] + u[c - 1] + u[c + 1] - u[c] * 4.0) * inv_h2;
            }
        }
        out
    }

    /// Discrete inner product `h² Σ u_{jk} conj(v_{jk})` over interior nodes.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        self.check_same_mesh(other)?;
        let m = self.m;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..m {
            for k in 1..m {
                let c = j * (m + 1) + k;
                acc += self.values[c] * other.values[c].conj();
            }
        }
        Ok(acc * (self.h * self.h))
    }

    pub fn l2_norm(&self) -> f64 {
        interior_l2_norm(&self.interior(), self.h)
    }

    /// Largest interior modulus.
    pub fn linf_norm(&self) -> f64 {
        let m = self.m;
        let mut max = 0.0f64;
        for j in 1..m {
            for k in 1..m {
                max = max.max(self.get(j, k).norm());
            }
        }
        max
    }

    /// `|u|₂ = ‖Δ_h u‖`.
    pub fn seminorm_h2(&self) -> f64 {
        self.laplacian_5pt().l2_norm()
    }
}

/// Samples `f` at every node of the mesh. The target is W_h⁰: boundary
/// samples with modulus at most [`BOUNDARY_TOL`] are snapped to zero, larger
/// ones are rejected.
pub fn sample<F>(f: F, mesh: &MeshSpec) -> Result<ComplexField>
where
    F: Fn(f64, f64) -> Complex64,
{
    let m = mesh.m();
    let mut field = ComplexField::zeros_like(mesh);
    for j in 0..=m {
        for k in 0..=m {
            let v = f(mesh.x(j), mesh.x(k));
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("sample at node ({j}, {k})")));
            }
            let on_boundary = j == 0 || j == m || k == 0 || k == m;
            if on_boundary {
                if v.norm() > BOUNDARY_TOL {
                    return Err(Error::NonVanishingBoundary { j, k, value: v.norm() });
                }
            } else {
                field.set(j, k, v);
            }
        }
    }
    Ok(field)
}

/// Discrete L² norm of an interior block.
pub fn interior_l2_norm(block: &[Complex64], h: f64) -> f64 {
    let sum: f64 = block.iter().map(|v| v.norm_sqr()).sum();
    h * sum.sqrt()
}

/// Discrete L² norm of the difference of two interior blocks.
pub fn interior_l2_distance(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    h * sum.sqrt()
}

/// Δ_h applied to an interior block with zero Dirichlet data, accumulated
/// into `out` as `out += Δ_h u`.
pub(crate) fn add_laplacian_interior(u: &[Complex64], m: usize, h: f64, out: &mut [Complex64]) {
    let n = m - 1;
    let inv_h2 = 1.0 / (h * h);
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let c = j * n + k;
            let west = if j > 0 { u[c - n] } else { zero };
            let east = if j + 1 < n { u[c + n] } else { zero };
            let south = if k > 0 { u[c - 1] } else { zero };
            let north = if k + 1 < n { u[c + 1] } else { zero };
            out[c] += (west + east + south + north - u[c] * 4.0) * inv_h2;
        }
    }
}

/// Eigenvalue of Δ_h for sine mode `(p, q)`.
pub fn laplacian_eigenvalue(p: usize, q: usize, m: usize, h: f64) -> f64 {
    let s = |r: usize| (r as f64 * std::f64::consts::PI / (2.0 * m as f64)).sin().powi(2);
    -(4.0 / (h * h)) * (s(p) + s(q))
}

/// Sine mode `sin(pπj/M) sin(qπk/M)` as a field.
pub fn sine_mode(p: usize, q: usize, m: usize, h: f64) -> ComplexField {
    use std::f64::consts::PI;
    let mut field = ComplexField::zeros(m, h);
    let mf = m as f64;
    for j in 1..m {
        for k in 1..m {
            let v = (p as f64 * PI * j as f64 / mf).sin() * (q as f64 * PI * k as f64 / mf).sin();
            field.set(j, k, Complex64::new(v, 0.0));
        }
    }
    field
}
