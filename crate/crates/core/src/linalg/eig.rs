//! Symmetric and Hermitian eigendecomposition.
//!
//! The real symmetric kernel is the classic Householder tridiagonalization
//! followed by implicit-shift QL iteration (the EISPACK `tred2`/`tql2` pair,
//! by way of its Jama translation). Hermitian matrices are handled through
//! their real embedding `[[Re, -Im], [Im, Re]]`, whose spectrum doubles that
//! of the complex matrix.

use num_complex::Complex64;

use super::{cdot, vec_norm, CMatrix, HermitianMatrix, LinalgError};

const MAX_QL_SWEEPS: usize = 60;

/// Eigendecomposition `A = V diag(values) V^H` with ascending eigenvalues
/// and unitary `V` (eigenvectors in columns).
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Eigendecomposition of a dense real symmetric matrix (row-major, `n x n`).
///
/// Returns ascending eigenvalues and the orthogonal eigenvector matrix
/// (row-major, eigenvectors in columns).
pub fn sym_eig(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    assert_eq!(a.len(), n * n, "entry count != n * n");
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return Ok((d, v));
    }
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    sort_ascending(n, &mut v, &mut d);
    Ok((d, v))
}

/// Householder reduction to tridiagonal form, accumulating transformations.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on the tridiagonal form.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(LinalgError::NoConvergence("sym_eig QL iteration"));
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0_f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0_f64;
                let mut s2 = 0.0_f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_ascending(n: usize, v: &mut [f64], d: &mut [f64]) {
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                v.swap(row * n + i, row * n + k);
            }
        }
    }
}

/// Real embedding `[[Re A, -Im A], [Im A, Re A]]` of a Hermitian matrix.
fn embed(a: &HermitianMatrix) -> Vec<f64> {
    let n = a.dim();
    let m = 2 * n;
    let mut e = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            e[i * m + j] = z.re;
            e[(i + n) * m + j + n] = z.re;
            e[i * m + j + n] = -z.im;
            e[(i + n) * m + j] = z.im;
        }
    }
    e
}

/// Hermitian eigendecomposition via the real embedding.
///
/// Each eigenvalue of `A` appears twice in the embedding; one complex
/// eigenvector per pair is recovered by Gram-Schmidt screening (the mate of
/// an accepted vector is its multiple by `i` and is rejected). Eigenvector
/// phases are fixed so the largest-magnitude component is real positive.
pub fn herm_eig(a: &HermitianMatrix) -> Result<HermEig, LinalgError> {
    let n = a.dim();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let m = 2 * n;
    let (vals, vecs) = sym_eig(m, &embed(a))?;

    let mut values = Vec::with_capacity(n);
    let mut kept: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for idx in 0..m {
        let mut z: Vec<Complex64> = (0..n)
            .map(|r| Complex64::new(vecs[r * m + idx], vecs[(r + n) * m + idx]))
            .collect();
        // Two Gram-Schmidt passes keep accepted vectors orthonormal to
        // working precision.
        for _ in 0..2 {
            for w in &kept {
                let c = cdot(w, &z);
                for (zi, wi) in z.iter_mut().zip(w) {
                    *zi -= c * wi;
                }
            }
        }
        let nrm = vec_norm(&z);
        if nrm > 0.1 {
            let inv = 1.0 / nrm;
            for zi in &mut z {
                *zi *= inv;
            }
            phase_normalize(&mut z);
            values.push(vals[idx]);
            kept.push(z);
            if kept.len() == n {
                break;
            }
        }
    }
    if kept.len() != n {
        return Err(LinalgError::NoConvergence("herm_eig eigenvector extraction"));
    }

    let vectors = CMatrix::from_fn(n, n, |i, j| kept[j][i]);
    Ok(HermEig { values, vectors })
}

/// Rotates so the largest-magnitude component is real positive.
fn phase_normalize(z: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let mag = zi.norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag == 0.0 {
        return;
    }
    let phase = z[best] / z[best].norm();
    let rot = phase.conj();
    for zi in z.iter_mut() {
        *zi *= rot;
    }
}
