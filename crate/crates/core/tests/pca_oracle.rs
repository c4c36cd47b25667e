mod oracles;

use emgait_core::linalg::Matrix;
use emgait_core::pca::fit_pca;
use emgait_core::rng::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

fn correlated(seed: u64, n: usize, d: usize) -> Matrix {
    let mut rng = rng_from_seed(seed);
    let z = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect());
    let mix = Matrix::from_vec(d, d, (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect());
    let mut x = z.matmul(&mix);
    for v in x.as_mut_slice() {
        *v += 3.0;
    }
    x
}

#[test]
fn matches_jacobi_eigensolve() {
    for seed in 0..20 {
        let x = correlated(seed, 200, 20);
        let model = fit_pca(&x).unwrap();
        let (values, vectors) = oracles::jacobi_eigen(&oracles::naive_covariance(&x));
        let total: f64 = values.iter().sum();
        for k in 0..20 {
            assert!((model.explained_variance_ratio[k] - values[k] / total).abs() < 1e-8);
        }
        for k in 1..20 {
            assert!(model.explained_variance_ratio[k] <= model.explained_variance_ratio[k - 1]);
        }
        let gram = model.components.matmul(&model.components.transpose());
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - e).abs() < 1e-9);
            }
        }
        let scores = model.transform(&x, 20).unwrap();
        let means = x.column_means();
        for k in 0..20 {
            let v = &vectors[k];
            let sign = if emgait_core::linalg::dot(v, model.components.row(k)) < 0.0 { -1.0 } else { 1.0 };
            for i in 0..200 {
                let brute: f64 = (0..20).map(|j| (x[(i, j)] - means[j]) * v[j]).sum::<f64>() * sign;
                assert!((scores[(i, k)] - brute).abs() < 1e-8, "seed {seed} pc {k} row {i}");
            }
        }
    }
}

#[test]
fn full_rank_reconstruction() {
    let x = correlated(77, 50, 6);
    let model = fit_pca(&x).unwrap();
    let back = model.inverse_transform(&model.transform(&x, 6).unwrap()).unwrap();
    for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
        assert!((a - b).abs() < 1e-9);
    }
}
