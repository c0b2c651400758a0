use super::*;
use crate::rng::StreamRng;
use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

pub(crate) fn random_hermitian(rng: &mut StreamRng, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(random_matrix(rng, n, n))
}

/// Random Hermitian PD matrix `B B^H + eps I`.
pub(crate) fn random_pd(rng: &mut StreamRng, n: usize) -> HermitianMatrix {
    let b = random_matrix(rng, n, n);
    let g = b.mul(&b.adjoint());
    HermitianMatrix::symmetrized(g.add(&CMatrix::identity(n).scale(Complex64::new(0.1, 0.0))))
}

/// Independent inverse oracle: Gauss-Jordan with partial pivoting.
fn gauss_jordan_inverse(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut aug = CMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
        aug[(i, n + i)] = Complex64::ONE;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                aug[(p, col)]
                    .norm()
                    .partial_cmp(&aug[(q, col)].norm())
                    .unwrap()
            })
            .unwrap();
        if pivot_row != col {
            for j in 0..2 * n {
                let tmp = aug[(col, j)];
                aug[(col, j)] = aug[(pivot_row, j)];
                aug[(pivot_row, j)] = tmp;
            }
        }
        let p = aug[(col, col)];
        for j in 0..2 * n {
            aug[(col, j)] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = aug[(i, col)];
            if f == Complex64::ZERO {
                continue;
            }
            for j in 0..2 * n {
                let sub = f * aug[(col, j)];
                aug[(i, j)] -= sub;
            }
        }
    }
    CMatrix::from_fn(n, n, |i, j| aug[(i, n + j)])
}

#[test]
fn herm_eig_identity() {
    let eig = herm_eig(&HermitianMatrix::identity(3)).unwrap();
    for v in &eig.values {
        assert_relative_eq!(*v, 1.0, max_relative = 1e-14);
    }
}

#[test]
fn herm_eig_diagonal_sorts_ascending() {
    let a = HermitianMatrix::from_real_diag(&[2.0, -1.0]);
    let eig = herm_eig(&a).unwrap();
    assert_relative_eq!(eig.values[0], -1.0, max_relative = 1e-14);
    assert_relative_eq!(eig.values[1], 2.0, max_relative = 1e-14);
    // Eigenvectors are the permuted identity.
    assert_relative_eq!(eig.vectors[(1, 0)].re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(eig.vectors[(0, 1)].re, 1.0, epsilon = 1e-14);
    assert!(eig.vectors[(0, 0)].norm() < 1e-14);
    assert!(eig.vectors[(1, 1)].norm() < 1e-14);
}

#[test]
fn herm_eig_reconstructs_random_matrix() {
    let mut rng = StreamRng::new(1001);
    for _ in 0..20 {
        let a = random_hermitian(&mut rng, 5);
        let eig = herm_eig(&a).unwrap();
        let n = a.dim();
        let lam = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(eig.values[i], 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let recon = eig.vectors.mul(&lam).mul(&eig.vectors.adjoint());
        let scale = a.as_matrix().fro_norm();
        assert!(
            recon.sub(a.as_matrix()).fro_norm() < 1e-10 * scale,
            "reconstruction residual too large"
        );
        // Unitarity.
        let vhv = eig.vectors.adjoint().mul(&eig.vectors);
        assert!(vhv.sub(&CMatrix::identity(n)).fro_norm() < 1e-10);
    }
}

#[test]
fn herm_eig_degenerate_spectrum() {
    // Repeated eigenvalues exercise the pair-extraction path.
    let mut rng = StreamRng::new(1002);
    let b = random_matrix(&mut rng, 4, 4);
    // Unitary from QR-free route: eigenvectors of a random Hermitian.
    let u = herm_eig(&HermitianMatrix::symmetrized(b.mul(&b.adjoint()))).unwrap();
    let lam = CMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            c([1.0, 1.0, 3.0, 3.0][i], 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let a = HermitianMatrix::symmetrized(u.vectors.mul(&lam).mul(&u.vectors.adjoint()));
    let eig = herm_eig(&a).unwrap();
    let recon = {
        let d = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(eig.values[i], 0.0)
            } else {
                Complex64::ZERO
            }
        });
        eig.vectors.mul(&d).mul(&eig.vectors.adjoint())
    };
    assert!(recon.sub(a.as_matrix()).fro_norm() < 1e-10 * a.as_matrix().fro_norm());
    let vhv = eig.vectors.adjoint().mul(&eig.vectors);
    assert!(vhv.sub(&CMatrix::identity(4)).fro_norm() < 1e-10);
}

#[test]
fn solve_psd_identity_returns_rhs() {
    let mut rng = StreamRng::new(1003);
    let b = random_matrix(&mut rng, 4, 2);
    let x = solve_psd(&HermitianMatrix::identity(4), &b).unwrap();
    assert!(x.sub(&b).fro_norm() < 1e-14);
}

#[test]
fn solve_psd_scalar_case() {
    let a = HermitianMatrix::from_real_diag(&[2.0, 2.0, 2.0]);
    let x = solve_psd(&a, &CMatrix::identity(3)).unwrap();
    let expected = CMatrix::identity(3).scale(c(0.5, 0.0));
    assert!(x.sub(&expected).fro_norm() < 1e-14);
}

#[test]
fn solve_psd_residual_on_random_pd() {
    let mut rng = StreamRng::new(1004);
    for _ in 0..10 {
        let a = random_pd(&mut rng, 6);
        let b = random_matrix(&mut rng, 6, 3);
        let x = solve_psd(&a, &b).unwrap();
        let resid = a.as_matrix().mul(&x).sub(&b).fro_norm();
        assert!(resid < 1e-10 * b.fro_norm().max(1.0), "residual {resid}");
    }
}

#[test]
fn solve_psd_rejects_indefinite_with_pivot() {
    let a = HermitianMatrix::from_real_diag(&[1.0, -2.0, 3.0]);
    match solve_psd(&a, &CMatrix::identity(3)) {
        Err(LinalgError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
        other => panic!("expected NotPositiveDefinite, got {other:?}"),
    }
}

#[test]
fn trace_inv_identity() {
    assert_relative_eq!(
        trace_inv(&HermitianMatrix::identity(4)).unwrap(),
        4.0,
        max_relative = 1e-12
    );
}

#[test]
fn trace_inv_diagonal() {
    let a = HermitianMatrix::from_real_diag(&[1.0, 2.0, 4.0]);
    assert_relative_eq!(trace_inv(&a).unwrap(), 1.75, max_relative = 1e-12);
}

#[test]
fn trace_inv_matches_explicit_inverse() {
    let mut rng = StreamRng::new(1005);
    for _ in 0..10 {
        let a = random_pd(&mut rng, 5);
        let inv = gauss_jordan_inverse(a.as_matrix());
        let oracle = inv.trace().re;
        assert_relative_eq!(trace_inv(&a).unwrap(), oracle, max_relative = 1e-10);
    }
}

#[test]
fn trace_inv_rejects_near_singular() {
    let a = HermitianMatrix::from_real_diag(&[1.0, 1e-15]);
    assert!(matches!(
        trace_inv(&a),
        Err(LinalgError::NearSingular { .. })
    ));
}

#[test]
fn hermitian_new_rejects_asymmetric() {
    let mut m = CMatrix::identity(2);
    m[(0, 1)] = c(1.0, 0.0);
    assert!(matches!(
        HermitianMatrix::new(m),
        Err(LinalgError::NotHermitian { .. })
    ));
}

#[test]
fn hermitian_symmetrize_zeroes_diagonal_imag() {
    let mut m = CMatrix::identity(2);
    m[(0, 0)] = c(1.0, 0.5);
    m[(0, 1)] = c(0.25, 0.75);
    let h = HermitianMatrix::symmetrized(m);
    assert_eq!(h[(0, 0)].im, 0.0);
    assert_eq!(h[(1, 1)].im, 0.0);
    assert_eq!(h[(0, 1)], h[(1, 0)].conj());
}

#[test]
fn psd_factor_reconstructs() {
    let mut rng = StreamRng::new(1006);
    let a = random_pd(&mut rng, 5);
    let f = psd_factor(&a).unwrap();
    assert!(f.mul(&f.adjoint()).sub(a.as_matrix()).fro_norm() < 1e-10 * a.as_matrix().fro_norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_inv_scaling_law(seed in 0u64..1000, scale in 1e-3f64..1e3) {
        let mut rng = StreamRng::new(seed);
        let a = random_pd(&mut rng, 4);
        let t = trace_inv(&a).unwrap();
        let t_scaled = trace_inv(&a.scale(scale)).unwrap();
        prop_assert!((t_scaled - t / scale).abs() <= 1e-9 * t.max(t / scale));
    }

    #[test]
    fn trace_inv_cauchy_schwarz_bound(seed in 0u64..1000) {
        let mut rng = StreamRng::new(seed);
        let a = random_pd(&mut rng, 4);
        let n = a.dim() as f64;
        let bound = n * n / a.trace();
        prop_assert!(trace_inv(&a).unwrap() >= bound * (1.0 - 1e-12));
    }

    #[test]
    fn psd_eigenvalues_nonnegative(seed in 0u64..1000) {
        let mut rng = StreamRng::new(seed);
        let b = random_matrix(&mut rng, 5, 5);
        let a = HermitianMatrix::symmetrized(b.mul(&b.adjoint()));
        let eig = herm_eig(&a).unwrap();
        let scale = a.as_matrix().fro_norm();
        prop_assert!(eig.values[0] >= -1e-12 * scale);
    }

    #[test]
    fn trace_inv_equality_iff_scaled_identity(scale in 0.1f64..10.0) {
        let a = HermitianMatrix::identity(4).scale(scale);
        let n = 4.0;
        let bound = n * n / a.trace();
        let t = trace_inv(&a).unwrap();
        prop_assert!((t - bound).abs() <= 1e-12 * bound);
    }
}
