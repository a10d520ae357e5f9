//! Convergence-rate arithmetic shared by the kernel probe and the tables.

/// `log₂(coarse / fine)` for errors on a doubling ladder. `None` unless both
/// errors are positive and finite.
pub fn log2_rate(coarse: f64, fine: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
        Some((coarse / fine).log2())
    } else {
        None
    }
}

/// Observed order `p` in `error ≈ C N^{-p}`: minus the least-squares slope of
/// `log₂(error)` against `log₂(N)`.
pub fn fitted_order(ns: &[usize], errors: &[f64]) -> Option<f64> {
    if ns.len() != errors.len() || ns.len() < 2 {
        return None;
    }
    if errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let ns = [64, 128, 256, 512];
        let errs: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-1.5)).collect();
        assert!((fitted_order(&ns, &errs).unwrap() - 1.5).abs() < 1e-12);
        assert!((log2_rate(errs[0], errs[1]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(log2_rate(0.0, 1.0), None);
        assert_eq!(fitted_order(&[8], &[1.0]), None);
        assert_eq!(fitted_order(&[8, 16], &[1.0, 0.0]), None);
    }
}
