use doa_anm::array_model::{analytic_ccm, manifold, simulate, ArrayGeometry, Axis, SourceConfig};
use doa_anm::covariance::{chi2_quantile, estimate_error_model, sample_ccm, whiten};
use doa_anm::linalg::{vec_col_major, CMatrix};
use num_complex::Complex64;

fn two_sources(seed: u64) -> SourceConfig {
    SourceConfig::new(vec![-25.0, 30.0], vec![-35.0, 0.0], Some(10.0), seed).unwrap()
}

#[test]
fn noiseless_single_source_is_rank_one() {
    let g = ArrayGeometry::uniform(5, 4).unwrap();
    let src = SourceConfig::new(vec![40.0], vec![-70.0], None, 9).unwrap();
    for l in [1, 7, 64] {
        let snaps = simulate(&g, &src, l).unwrap();
        let ccm = sample_ccm(&snaps).unwrap();
        let ax = manifold(Axis::X, &[40.0], &g).unwrap();
        let ay = manifold(Axis::Y, &[-70.0], &g).unwrap();
        // recover the source sequence from the first x sensor (a_x[0] = 1)
        let p_hat: f64 = (0..l).map(|t| snaps.x[(0, t)].norm_sqr()).sum::<f64>() / l as f64;
        let want = (&ay * ax.adjoint()).scale(p_hat);
        assert!((ccm.r_hat_mat - want).norm() < 1e-12);
    }
}

#[test]
fn sample_ccm_is_unbiased() {
    let g = ArrayGeometry::new(vec![1, 2, 3, 5], vec![1, 2, 3, 5]).unwrap();
    let trials = 3000;
    let mut mean = CMatrix::zeros(4, 4);
    for seed in 0..trials {
        let snaps = simulate(&g, &two_sources(seed), 10).unwrap();
        mean += sample_ccm(&snaps).unwrap().r_hat_mat;
    }
    mean.unscale_mut(trials as f64);
    let truth = analytic_ccm(&g, &two_sources(0)).unwrap();
    let rel = (&mean - &truth).norm() / truth.norm();
    assert!(rel < 0.03, "relative bias {rel}");
}

#[test]
fn beta_is_chi_square_radius() {
    let g = ArrayGeometry::uniform(5, 5).unwrap();
    let snaps = simulate(&g, &two_sources(1), 50).unwrap();
    let m = estimate_error_model(&snaps, 1e-4).unwrap();
    let q = chi2_quantile(0.9999, 25).unwrap();
    assert!((m.beta_bound * m.beta_bound - q).abs() < 1e-9 * q);
    assert_eq!(m.dim(), 25);
}

#[test]
fn whitened_error_coverage() {
    let g = ArrayGeometry::uniform(5, 5).unwrap();
    let kappa = 1e-4;
    let truth = vec_col_major(&analytic_ccm(&g, &two_sources(0)).unwrap());
    let trials = 2000;
    let mut inside = 0;
    let mut sum_sq = 0.0;
    for seed in 0..trials {
        let snaps = simulate(&g, &two_sources(1000 + seed), 200).unwrap();
        let ccm = sample_ccm(&snaps).unwrap();
        let model = estimate_error_model(&snaps, kappa).unwrap();
        let w = whiten(&model, &(&ccm.r_hat - &truth)).unwrap();
        sum_sq += w.norm_squared();
        if w.norm() <= model.beta_bound {
            inside += 1;
        }
    }
    let coverage = inside as f64 / trials as f64;
    assert!(coverage >= 1.0 - kappa - 0.005, "coverage {coverage}");
    // whitened squared norm has mean equal to the dimension
    let mean = sum_sq / trials as f64;
    assert!((mean - 25.0).abs() < 2.5, "mean whitened norm² {mean}");
}

#[test]
fn whiten_rejects_wrong_length() {
    let g = ArrayGeometry::uniform(3, 3).unwrap();
    let snaps = simulate(&g, &two_sources(2), 20).unwrap();
    let m = estimate_error_model(&snaps, 0.01).unwrap();
    let v = doa_anm::linalg::CVector::from_element(4, Complex64::new(1.0, 0.0));
    assert!(whiten(&m, &v).is_err());
}
