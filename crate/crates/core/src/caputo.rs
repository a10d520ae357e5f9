//! L1 discretization of the Caputo derivative on a uniform time mesh.
//!
//! For `0 < α < 1` and step `τ` the L1 formula reads
//!
//! ```text
//! D_τ^α uⁿ = μ⁻¹ ( a₀uⁿ − Σ_{i=1}^{n-1} (a_{n-i-1} − a_{n-i}) uⁱ − a_{n-1}u⁰ ),
//! μ = τ^α Γ(2−α),   a_i = (i+1)^{1−α} − i^{1−α}.
//! ```
//!
//! The complementary multipliers `θₙ` define `E(vⁿ) = Σ_{i=1}^{n} θ_{n-i} vⁱ`,
//! which inverts the L1 operator: `E(D_τ^α uⁿ) = uⁿ − u⁰`.

use num_complex::Complex64;

use crate::grid::ComplexField;
use crate::{Error, Result};

/// Gamma function, backed by `libm::tgamma` (the musl/FreeBSD routine).
/// Relative error on `(1, 3)` is within a few ulp.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Values the L1 and summation operators can act on: scalars, or whole grid
/// functions acted on nodewise.
pub trait Accumulate: Clone {
    fn zeroed(&self) -> Self;
    /// `self += w · other`
    fn add_scaled(&mut self, w: f64, other: &Self);
}

impl Accumulate for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
}

impl Accumulate for Complex64 {
    fn zeroed(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += other * w;
    }
}

impl Accumulate for ComplexField {
    fn zeroed(&self) -> Self {
        ComplexField::zeros(self.m(), self.h())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        assert_eq!(self.m(), other.m(), "fields on different meshes");
        let m = self.m();
        for j in 0..=m {
            for k in 0..=m {
                let v = self.get(j, k) + other.get(j, k) * w;
                self.set(j, k, v);
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// L1 weights `a_0 … a_{N-1}` and the scale `μ = τ^α Γ(2−α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Kernel {
    alpha: f64,
    tau: f64,
    mu: f64,
    a: Vec<f64>,
}

impl L1Kernel {
    pub fn new(alpha: f64, tau: f64, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        if n < 1 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        let p = 1.0 - alpha;
        let a = (0..n).map(|i| ((i + 1) as f64).powf(p) - (i as f64).powf(p)).collect();
        let mu = tau.powf(alpha) * gamma(2.0 - alpha);
        Ok(Self { alpha, tau, mu, a })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    /// Number of time steps the kernel covers.
    pub fn steps(&self) -> usize {
        self.a.len()
    }

    /// `D_τ^α uⁿ` from the history `u⁰ … uⁿ`.
    pub fn apply<T: Accumulate>(&self, history: &[T]) -> Result<T> {
        if history.len() < 2 {
            return Err(Error::HistoryTooShort { needed: 2, got: history.len() });
        }
        let n = history.len() - 1;
        if n > self.a.len() {
            return Err(Error::Domain(format!(
                "history reaches level {n} but the kernel only covers {} steps",
                self.a.len()
            )));
        }
        let a = &self.a;
        let mut acc = history[n].zeroed();
        acc.add_scaled(a[0], &history[n]);
        for i in (1..n).rev() {
            acc.add_scaled(-(a[n - i - 1] - a[n - i]), &history[i]);
        }
        acc.add_scaled(-a[n - 1], &history[0]);
        let mut out = acc.zeroed();
        out.add_scaled(1.0 / self.mu, &acc);
        Ok(out)
    }

    /// Complementary multipliers `θ₀ … θ_{N-1}`.
    pub fn theta(&self) -> ThetaKernel {
        ThetaKernel::new(self)
    }
}

/// Complementary multipliers `θ₀ = μ/a₀`,
/// `θₙ = a₀⁻¹ Σ_{i=1}^{n} (a_{i-1} − a_i) θ_{n-i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaKernel {
    theta: Vec<f64>,
}

impl ThetaKernel {
    pub fn new(kernel: &L1Kernel) -> Self {
        let a = kernel.a();
        let n_total = a.len();
        let diffs: Vec<f64> = (1..n_total).map(|i| a[i - 1] - a[i]).collect();
        let mut theta = Vec::with_capacity(n_total);
        theta.push(kernel.mu() / a[0]);
        for n in 1..n_total {
            let mut s = 0.0;
            for i in 1..=n {
                s += diffs[i - 1] * theta[n - i];
            }
            theta.push(s / a[0]);
        }
        Self { theta }
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    /// `E(vⁿ) = Σ_{i=1}^{n} θ_{n-i} vⁱ` for `history = v⁰ … vⁿ`; `v⁰` is
    /// never read and `E(v⁰) = 0`.
    pub fn apply<T: Accumulate>(&self, history: &[T]) -> Result<T> {
        let Some(first) = history.first() else {
            return Err(Error::HistoryTooShort { needed: 1, got: 0 });
        };
        let n = history.len() - 1;
        if n > self.theta.len() {
            return Err(Error::Domain(format!(
                "history reaches level {n} but only {} multipliers are stored",
                self.theta.len()
            )));
        }
        let mut acc = first.zeroed();
        for i in 1..=n {
            acc.add_scaled(self.theta[n - i], &history[i]);
        }
        Ok(acc)
    }
}

/// `|D_τ^α u(t_N) − D_t^α u(t_N)|` for `u(t) = t^γ` on `[0, T]` with `N`
/// steps, using `D_t^α t^γ = Γ(γ+1)/Γ(γ+1−α) t^{γ−α}`.
pub fn truncation_probe(alpha: f64, gamma_exp: f64, final_time: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if !(gamma_exp > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma_exp}")));
    }
    let tau = final_time / n as f64;
    let kernel = L1Kernel::new(alpha, tau, n)?;
    let history: Vec<f64> = (0..=n).map(|i| (i as f64 * tau).powf(gamma_exp)).collect();
    let discrete = kernel.apply(&history)?;
    let exact = gamma(gamma_exp + 1.0) / gamma(gamma_exp + 1.0 - alpha)
        * final_time.powf(gamma_exp - alpha);
    Ok((discrete - exact).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::fitted_order;
    use rand::{Rng, SeedableRng};

    // mpmath, 40 digits
    const GAMMA_REF: [(f64, f64); 9] = [
        (1.1, 0.951_350_769_866_873_2),
        (1.3, 0.897_470_696_306_277_2),
        (1.5, 0.886_226_925_452_758_0),
        (1.7, 0.908_638_732_853_290_4),
        (1.9, 0.961_765_831_907_387_4),
        (2.5, 1.329_340_388_179_137),
        (2.9, 1.827_355_080_624_036),
        (0.7, 1.298_055_332_647_557_8),
        (0.3, 2.991_568_987_687_590_6),
    ];

    #[test]
    fn gamma_accuracy() {
        for (x, g) in GAMMA_REF {
            assert!(((gamma(x) - g) / g).abs() < 1e-14, "Γ({x})");
        }
    }

    #[test]
    fn l1_weights_closed_form() {
        let k = L1Kernel::new(0.5, 1.0, 4).unwrap();
        assert_eq!(k.a()[0], 1.0);
        assert!((k.a()[1] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((k.a()[2] - (3f64.sqrt() - 2f64.sqrt())).abs() < 1e-15);
        assert!((k.mu() - 0.886_226_925_452_758).abs() < 1e-15);
    }

    #[test]
    fn l1_weights_telescope_and_decrease() {
        for i in 1..10 {
            let alpha = i as f64 / 10.0;
            let n = 1000;
            let k = L1Kernel::new(alpha, 1.0 / n as f64, n).unwrap();
            let sum: f64 = k.a().iter().sum();
            assert!((sum - (n as f64).powf(1.0 - alpha)).abs() < 1e-11);
            assert!(k.a().windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
            assert!(k.mu() > 0.0);
        }
    }

    #[test]
    fn l1_rejects_bad_alpha() {
        assert!(matches!(L1Kernel::new(1.0, 0.1, 4), Err(Error::Domain(_))));
        assert!(matches!(L1Kernel::new(-0.2, 0.1, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn apply_constant_is_zero() {
        let k = L1Kernel::new(0.4, 0.1, 10).unwrap();
        let hist = vec![Complex64::new(2.5, -1.0); 9];
        assert!(k.apply(&hist).unwrap().norm() < 1e-13);
        assert!(matches!(
            k.apply(&hist[..1]),
            Err(Error::HistoryTooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn apply_unit_impulse_at_last_slot() {
        let k = L1Kernel::new(0.3, 0.05, 8).unwrap();
        let mut hist = vec![0.0; 8];
        hist[7] = 1.0;
        assert_eq!(k.mu() * k.apply(&hist).unwrap(), 1.0);
    }

    #[test]
    fn apply_exact_on_linear_data() {
        for alpha in [0.3, 0.5, 0.7] {
            let tau = 0.125;
            let k = L1Kernel::new(alpha, tau, 8).unwrap();
            for n in 1..=8 {
                let hist: Vec<f64> = (0..=n).map(|i| i as f64 * tau).collect();
                let t = n as f64 * tau;
                let exact = t.powf(1.0 - alpha) / gamma(2.0 - alpha);
                assert!((k.apply(&hist).unwrap() - exact).abs() < 1e-13, "α={alpha} n={n}");
            }
        }
    }

    #[test]
    fn apply_power_alpha_converges() {
        let alpha = 0.5;
        let target = gamma(1.0 + alpha);
        let mut prev = f64::INFINITY;
        for n in [64, 256, 1024] {
            let k = L1Kernel::new(alpha, 1.0 / n as f64, n).unwrap();
            let hist: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).powf(alpha)).collect();
            let err = (k.apply(&hist).unwrap() - target).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn theta_first_terms() {
        // mpmath, 40 digits
        let th = L1Kernel::new(0.5, 1.0, 3).unwrap().theta();
        assert!((th.values()[0] - 0.886_226_925_452_758_0).abs() < 1e-15);
        assert!((th.values()[1] - 0.519_139_713_590_015_8).abs() < 1e-15);
        assert!((th.values()[2] - 0.389_516_290_713_056_8).abs() < 1e-15);
    }

    #[test]
    fn e_alpha_edge_cases() {
        let k = L1Kernel::new(0.5, 0.1, 10).unwrap();
        let th = k.theta();
        assert_eq!(th.apply(&[Complex64::new(3.0, 1.0)]).unwrap(), Complex64::new(0.0, 0.0));
        let ones = vec![1.0; 11];
        let t_n = 1.0f64;
        let s = th.apply(&ones).unwrap();
        assert!(s <= t_n.powf(0.5) / gamma(1.5));
    }

    #[test]
    fn e_inverts_l1() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let alpha = rng.gen_range(0.05..0.95);
            let n = rng.gen_range(1..=64usize);
            let k = L1Kernel::new(alpha, 1.0 / n as f64, n).unwrap();
            let th = k.theta();
            let u: Vec<Complex64> =
                (0..=n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut d = vec![Complex64::new(0.0, 0.0)];
            for m in 1..=n {
                d.push(k.apply(&u[..=m]).unwrap());
            }
            let back = th.apply(&d).unwrap();
            let want = u[n] - u[0];
            assert!((back - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn field_application_matches_nodewise() {
        let m = 3;
        let fields: Vec<ComplexField> = (0..4)
            .map(|i| {
                let mut f = ComplexField::zeros(m, 1.0 / 3.0);
                f.set(1, 2, Complex64::new(i as f64 * 0.7, 1.0 - i as f64));
                f.set(2, 1, Complex64::new((i * i) as f64, 0.5));
                f
            })
            .collect();
        let k = L1Kernel::new(0.6, 0.2, 5).unwrap();
        let df = k.apply(&fields).unwrap();
        let scalar: Vec<Complex64> = fields.iter().map(|f| f.get(1, 2)).collect();
        assert!((df.get(1, 2) - k.apply(&scalar).unwrap()).norm() < 1e-14);
        assert_eq!(df.get(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn probe_linear_is_exact() {
        assert!(truncation_probe(0.5, 1.0, 1.0, 64).unwrap() < 1e-14);
        assert!(matches!(truncation_probe(0.5, 0.0, 1.0, 8), Err(Error::Domain(_))));
    }

    #[test]
    fn probe_orders() {
        let ns = [64, 128, 256, 512, 1024];
        let errs: Vec<f64> = ns.iter().map(|&n| truncation_probe(0.5, 0.5, 1.0, n).unwrap()).collect();
        let p = fitted_order(&ns, &errs).unwrap();
        assert!((1.4..=1.6).contains(&p), "order {p}");
        let errs: Vec<f64> = ns.iter().map(|&n| truncation_probe(0.5, 2.0, 1.0, n).unwrap()).collect();
        let p = fitted_order(&ns, &errs).unwrap();
        assert!((p - 1.5).abs() <= 0.1, "order {p}");
    }
}
