use tfse_core::experiments::{
    convergence_table, error_profile, stability_experiment, two_mesh, two_mesh_table, Example,
};
use tfse_core::grid::MeshSpec;
use tfse_core::rates::fitted_order;
use tfse_core::stepper::{run_with, RunOptions};

fn profile_band(alpha: f64, n: usize, m: usize) -> f64 {
    let mesh = MeshSpec::unit(alpha, m, n).unwrap();
    let history = run_with(&Example::Manufactured.problem_on(mesh).unwrap(), &RunOptions::default()).unwrap();
    let profile = error_profile(&history, &mesh);
    let ratios: Vec<f64> = (n / 4..=n)
        .map(|k| profile[k] / (mesh.tau() * mesh.t(k).powf(alpha - 1.0) + mesh.h() * mesh.h()))
        .collect();
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0);
    max / min
}

#[test]
fn pointwise_profile_band_does_not_grow_with_n() {
    // error / (τ t_n^{α−1} + h²) over n ∈ [N/4, N], on M = ⌈√N⌉ meshes
    for &alpha in &[0.3, 0.5, 0.7] {
        let coarse = profile_band(alpha, 64, 8);
        let fine = profile_band(alpha, 256, 16);
        assert!(fine < 1.1 * coarse, "alpha {alpha}: {coarse} -> {fine}");
    }
}

#[test]
fn small_ladder_orders() {
    let rows = convergence_table(&[0.5], &[64, 128, 256], None, &RunOptions::default()).unwrap();
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let local: Vec<f64> = rows.iter().map(|r| r.local_error).collect();
    let global: Vec<f64> = rows.iter().map(|r| r.global_error).collect();
    assert!(rows[0].local_rate.is_none() && rows[1].local_rate.is_some());
    let p = fitted_order(&ns, &local).unwrap();
    assert!((p - 1.0).abs() < 0.15, "local order {p}");
    let q = fitted_order(&ns, &global).unwrap();
    assert!((q - 0.5).abs() < 0.1, "global order {q}");
}

#[test]
fn stability_response_is_linear_in_epsilon() {
    let opts = RunOptions::default();
    for &n in &[64, 128] {
        let big = stability_experiment(0.5, n, 16, 1e-3, &opts).unwrap();
        let small = stability_experiment(0.5, n, 16, 1e-6, &opts).unwrap();
        assert!(big > 0.0 && big <= 50.0);
        assert!((big - small).abs() / small < 0.1, "N {n}: {big} vs {small}");
    }
    assert!(stability_experiment(0.5, 8, 8, -1.0, &opts).is_err());
}

#[test]
fn two_mesh_first_order_and_table_consistent() {
    let opts = RunOptions::default();
    for example in [Example::SmoothInitial, Example::KinkedInitial] {
        let rows = two_mesh_table(example, &[0.5], &[16, 32, 64], 12, &opts).unwrap();
        for r in &rows[1..] {
            let rate = r.rate.unwrap();
            assert!((rate - 1.0).abs() < 0.15, "{example}: rate {rate}");
        }
        let single = two_mesh(example, 0.5, 32, 12, &opts).unwrap();
        assert_eq!(single.e_l, rows[1].e_l);
    }
}

