use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nhssh_core::dissipation::{build_liouvillian, ThreeLevelModel};
use nhssh_core::numerics::{
    conj_transpose, eig_general, eig_pair, integrate_linear, vectorize_superoperator, IntegratorContract,
    JumpOperator,
};

/// Scaling and squaring with a 30-term Taylor series.
fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z / 2f64.powi(s));
    let mut term = Array2::<C64>::eye(n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> Array2<C64> {
    let a = random_matrix(rng, d);
    let rho = a.dot(&conj_transpose(&a));
    let tr: C64 = (0..d).map(|i| rho[[i, i]]).sum();
    rho.mapv(|z| z / tr)
}

fn three_level_vs_expm(rtol: f64) -> f64 {
    let gamma = 1.0 / 0.118;
    let l = build_liouvillian(&ThreeLevelModel::new(0.3 * gamma, gamma).unwrap());
    let mut rho0 = Array1::zeros(9);
    rho0[4] = C64::new(1.0, 0.0); // |p⟩⟨p|
    let t = 5.0 / gamma;
    let contract = IntegratorContract { rtol, atol: rtol * 1e-2, ..Default::default() };
    let got = integrate_linear(&l, rho0.as_slice().unwrap(), &[0.0, t], &contract).unwrap();
    let want = expm(&l.mapv(|z| z * t)).dot(&rho0);
    (&got[1] - &want).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn liouvillian_evolution_matches_matrix_exponential() {
    assert!(three_level_vs_expm(1e-10) <= 1e-7);
}

#[test]
fn error_falls_with_tolerance() {
    let tols = [1e-4, 5e-5, 2.5e-5, 1.25e-5, 6.25e-6, 3.125e-6];
    let errs: Vec<f64> = tols.iter().map(|&t| three_level_vs_expm(t)).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= 4.0 * w[0], "{errs:?}");
    }
    assert!(errs[errs.len() - 1] < errs[0], "{errs:?}");
}

#[test]
fn superoperator_matches_master_equation_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 4;
    let h0 = random_matrix(&mut rng, d);
    let h = (&h0 + &conj_transpose(&h0)).mapv(|z| z * 0.5);
    let jumps = vec![
        JumpOperator::new(0.7, random_matrix(&mut rng, d)),
        JumpOperator::new(1.3, random_matrix(&mut rng, d)),
    ];
    let l = vectorize_superoperator(&h, &jumps).unwrap();
    let i = C64::new(0.0, 1.0);
    for _ in 0..5 {
        let rho = random_density(&mut rng, d);
        let mut rhs = (h.dot(&rho) - rho.dot(&h)).mapv(|z| -i * z);
        for j in &jumps {
            let a = &j.op;
            let ad = conj_transpose(a);
            let ada = ad.dot(a);
            let term = a.dot(&rho).dot(&ad) - (ada.dot(&rho) + rho.dot(&ada)).mapv(|z| 0.5 * z);
            rhs = rhs + term.mapv(|z| z * j.rate);
        }
        let v: Array1<C64> = rho.iter().copied().collect();
        let got = l.dot(&v);
        for (a, b) in got.iter().zip(rhs.iter()) {
            assert!((a - b).norm() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn closed_system_spectrum_is_imaginary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h0 = random_matrix(&mut rng, 3);
    let h = (&h0 + &conj_transpose(&h0)).mapv(|z| z * 0.5);
    let l = vectorize_superoperator(&h, &[]).unwrap();
    for v in eig_general(&l).unwrap().values {
        assert!(v.re.abs() < 1e-10, "{v}");
    }
}

#[test]
fn random_forty_biorthonormal_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let m = random_matrix(&mut rng, 40);
    let e = eig_pair(&m).unwrap();
    let gram = conj_transpose(&e.left).dot(&e.right);
    for ((r, c), z) in gram.indexed_iter() {
        let want = if r == c { 1.0 } else { 0.0 };
        assert!((z - C64::new(want, 0.0)).norm() < 1e-8);
    }
    let lam = Array2::from_diag(&Array1::from(e.values.clone()));
    let rec = e.right.dot(&lam).dot(&conj_transpose(&e.left));
    let fro = |a: &Array2<C64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!(fro(&(&m - &rec)) <= 1e-7 * fro(&m));
    let norm = fro(&m);
    for k in 0..40 {
        let v = e.right.column(k);
        let r = m.dot(&v) - v.mapv(|z| z * e.values[k]);
        assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-9 * norm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_liouvillians_annihilate_the_trace(seed in any::<u64>(), d in 2usize..5, rate in 0.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_matrix(&mut rng, d);
        let h = (&h0 + &conj_transpose(&h0)).mapv(|z| z * 0.5);
        let l = vectorize_superoperator(&h, &[JumpOperator::new(rate, random_matrix(&mut rng, d))]).unwrap();
        for col in 0..d * d {
            let s: C64 = (0..d).map(|i| l[[i * d + i, col]]).sum();
            prop_assert!(s.norm() <= 1e-12 * (1.0 + rate) * d as f64);
        }
    }

    #[test]
    fn superoperator_is_linear(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_matrix(&mut rng, 3);
        let h = (&h0 + &conj_transpose(&h0)).mapv(|z| z * 0.5);
        let l = vectorize_superoperator(&h, &[JumpOperator::new(1.0, random_matrix(&mut rng, 3))]).unwrap();
        let x: Array1<C64> = random_matrix(&mut rng, 3).iter().copied().collect();
        let y: Array1<C64> = random_matrix(&mut rng, 3).iter().copied().collect();
        let lhs = l.dot(&(x.mapv(|z| z * a) + y.mapv(|z| z * b)));
        let rhs = l.dot(&x).mapv(|z| z * a) + l.dot(&y).mapv(|z| z * b);
        for (p, q) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((p - q).norm() < 1e-11);
        }
    }
}
