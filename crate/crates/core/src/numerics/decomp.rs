use num_complex::Complex;

use super::{CMatrix, Scalar};
use crate::error::{Error, Result};

/// Condition-estimate ceiling on linear solves. Beyond this the system is
/// treated as singular rather than returning numerical garbage.
pub const COND_LIMIT: f64 = 1e12;

/// Thin singular value decomposition `a == u · diag(s) · vᴴ`.
///
/// Singular values are sorted descending and non-negative; `u` and `v` have
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: CMatrix<T>,
    pub s: Vec<T>,
    pub v: CMatrix<T>,
}

/// One-sided Jacobi SVD. Always defined for finite input.
pub fn svd<T: Scalar>(a: &CMatrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = svd(&a.hermitian());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let m = a.rows();
    let n = a.cols();
    let mut work = a.clone();
    let mut v = CMatrix::<T>::identity(n);
    let tol = T::epsilon() * T::real(8.0);

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = Complex::new(T::zero(), T::zero());
                for i in 0..m {
                    let ap = work[(i, p)];
                    let aq = work[(i, q)];
                    alpha = alpha + ap.norm_sqr();
                    beta = beta + aq.norm_sqr();
                    gamma = gamma + ap.conj() * aq;
                }
                let gmag = gamma.norm();
                if gmag <= tol * (alpha * beta).sqrt() || gmag == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::real(2.0) * gmag);
                let sign = if zeta < T::zero() { -T::one() } else { T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let phase = gamma / gmag;
                for i in 0..m {
                    let ap = work[(i, p)];
                    let aq = work[(i, q)];
                    work[(i, p)] = ap * c - aq * phase.conj() * s;
                    work[(i, q)] = ap * phase * s + aq * c;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * c - vq * phase.conj() * s;
                    v[(i, q)] = vp * phase * s + vq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<T> = (0..n)
        .map(|j| {
            (0..m)
                .fold(T::zero(), |acc, i| acc + work[(i, j)].norm_sqr())
                .sqrt()
        })
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let s: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or_else(T::zero);
    let rank_tol = smax * T::real(m.max(n) as f64) * T::epsilon();

    let mut u = CMatrix::<T>::zeros(m, n);
    let v_sorted = CMatrix::<T>::from_fn(n, n, |i, j| v[(i, order[j])]);
    for (jj, &j) in order.iter().enumerate() {
        if s[jj] > rank_tol && s[jj] > T::zero() {
            let inv = T::one() / s[jj];
            for i in 0..m {
                u[(i, jj)] = work[(i, j)] * inv;
            }
        } else {
            fill_orthonormal_column(&mut u, jj);
        }
    }
    Svd { u, s, v: v_sorted }
}

// Replaces column `j` with a unit vector orthogonal to columns 0..j.
fn fill_orthonormal_column<T: Scalar>(u: &mut CMatrix<T>, jcol: usize) {
    let m = u.rows();
    let mut best: Option<(T, Vec<Complex<T>>)> = None;
    for seed in 0..m {
        let mut cand = vec![Complex::new(T::zero(), T::zero()); m];
        cand[seed] = Complex::new(T::one(), T::zero());
        for _ in 0..2 {
            for k in 0..jcol {
                let mut proj = Complex::new(T::zero(), T::zero());
                for i in 0..m {
                    proj = proj + u[(i, k)].conj() * cand[i];
                }
                for i in 0..m {
                    cand[i] = cand[i] - u[(i, k)] * proj;
                }
            }
        }
        let norm = cand
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            .sqrt();
        if best.as_ref().map_or(true, |(b, _)| norm > *b) {
            best = Some((norm, cand));
        }
        if norm > T::real(0.5) {
            break;
        }
    }
    let (norm, cand) = best.expect("nonzero dimension");
    let inv = T::one() / norm;
    for i in 0..m {
        u[(i, jcol)] = cand[i] * inv;
    }
}

// Σ x_k conj(y_k) with four independent accumulators to break the complex
// multiply-add dependency chain.
fn dot_conj<T: Scalar>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(x.len(), y.len());
    let zero = Complex::new(T::zero(), T::zero());
    let mut acc = [zero; 4];
    let mut i = 0;
    while i + 4 <= x.len() {
        acc[0] = acc[0] + x[i] * y[i].conj();
        acc[1] = acc[1] + x[i + 1] * y[i + 1].conj();
        acc[2] = acc[2] + x[i + 2] * y[i + 2].conj();
        acc[3] = acc[3] + x[i + 3] * y[i + 3].conj();
        i += 4;
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    while i < x.len() {
        total = total + x[i] * y[i].conj();
        i += 1;
    }
    total
}

// Panel width of the blocked factorization. Tiles of this size keep the
// trailing update compute-bound instead of memory-bound.
const CHOL_BLOCK: usize = 32;

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
///
/// Blocked right-looking factorization: each panel is factored with the
/// scalar algorithm, rows below are triangular-solved, and the trailing
/// Hermitian matrix takes a tiled rank-B downdate.
pub fn cholesky<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let n = a.rows();
    let zero = Complex::new(T::zero(), T::zero());
    let bw = CHOL_BLOCK;

    // lower triangle of `a`, updated in place
    let mut l = vec![zero; n * n];
    for i in 0..n {
        for j in 0..=i {
            l[i * n + j] = a[(i, j)];
        }
    }

    let mut scratch_rows = vec![zero; bw * bw];
    let mut row_buf = vec![zero; bw];

    let mut j0 = 0;
    while j0 < n {
        let j1 = (j0 + bw).min(n);
        let w = j1 - j0;

        // factor the diagonal block in place
        for j in j0..j1 {
            row_buf[..j - j0].copy_from_slice(&l[j * n + j0..j * n + j]);
            let prefix = &row_buf[..j - j0];
            let diag = l[j * n + j].re - dot_conj(prefix, prefix).re;
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::SingularSystem {
                    cond: f64::INFINITY,
                    limit: COND_LIMIT,
                });
            }
            let pivot = diag.sqrt();
            l[j * n + j] = Complex::new(pivot, T::zero());
            for i in (j + 1)..n {
                let acc = l[i * n + j] - dot_conj(&l[i * n + j0..i * n + j], prefix);
                l[i * n + j] = acc / pivot;
            }
        }

        // trailing update: A22 -= L21 L21ᴴ, tiled over the conjugate side
        let mut jt0 = j1;
        while jt0 < n {
            let jt1 = (jt0 + bw).min(n);
            for (r, j) in (jt0..jt1).enumerate() {
                scratch_rows[r * bw..r * bw + w].copy_from_slice(&l[j * n + j0..j * n + j1]);
            }
            for i in jt0..n {
                row_buf[..w].copy_from_slice(&l[i * n + j0..i * n + j1]);
                let x = &row_buf[..w];
                let hi = jt1.min(i + 1);
                for j in jt0..hi {
                    let y = &scratch_rows[(j - jt0) * bw..(j - jt0) * bw + w];
                    let d = dot_conj(x, y);
                    l[i * n + j] = l[i * n + j] - d;
                }
            }
            jt0 = jt1;
        }
        j0 = j1;
    }
    Ok(CMatrix::from_fn(n, n, |i, j| if j <= i { l[i * n + j] } else { zero }))
}

fn pivot_cond<T: Scalar>(l: &CMatrix<T>) -> f64 {
    let n = l.rows();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..n {
        let p = l[(i, i)].re.as_f64();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let r = hi / lo;
    r * r
}

/// Solves `a · x == b` for Hermitian positive-definite `a` with a guard that
/// turns ill-conditioned systems into an explicit error.
pub fn hermitian_solve<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    assert_eq!(a.rows(), b.rows(), "rhs row count mismatch");
    let l = cholesky(a)?;
    let cond = pivot_cond(&l);
    if cond > COND_LIMIT {
        return Err(Error::SingularSystem { cond, limit: COND_LIMIT });
    }
    Ok(cholesky_solve_factored(&l, b))
}

/// Back-substitution against a precomputed Cholesky factor.
pub fn cholesky_solve_factored<T: Scalar>(l: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let n = l.rows();
    let nrhs = b.cols();
    let mut x = b.clone();
    for col in 0..nrhs {
        // L y = b
        for i in 0..n {
            let mut acc = x[(i, col)];
            for k in 0..i {
                acc = acc - l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)].re;
        }
        // Lᴴ x = y
        for i in (0..n).rev() {
            let mut acc = x[(i, col)];
            for k in (i + 1)..n {
                acc = acc - l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)].re;
        }
    }
    x
}

/// Solves `L z = b` for one vector (forward substitution), used to whiten
/// residuals against a Cholesky factor.
pub fn forward_substitute<T: Scalar>(l: &CMatrix<T>, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut z = b.to_vec();
    for i in 0..n {
        let mut acc = z[i];
        for k in 0..i {
            acc = acc - l[(i, k)] * z[k];
        }
        z[i] = acc / l[(i, i)].re;
    }
    z
}

/// Allocation-free Gaussian elimination with partial pivoting on a row-major
/// scratch (`n x n`) and right-hand side, both overwritten. Returns the
/// pivot-ratio condition estimate, or `None` on an exactly singular pivot.
pub fn solve_in_place<T: Scalar>(
    a: &mut [Complex<T>],
    b: &mut [Complex<T>],
    n: usize,
) -> Option<f64> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut pmin = f64::INFINITY;
    let mut pmax = 0.0f64;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[col * n + col].norm_sqr();
        for row in (col + 1)..n {
            let mag = a[row * n + col].norm_sqr();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best != col {
            for j in col..n {
                a.swap(col * n + j, best * n + j);
            }
            b.swap(col, best);
        }
        let pivot = a[col * n + col];
        let mag = pivot.norm().as_f64();
        if !(mag > 0.0) || !mag.is_finite() {
            return None;
        }
        pmin = pmin.min(mag);
        pmax = pmax.max(mag);
        for row in (col + 1)..n {
            let f = a[row * n + col] / pivot;
            if f.re == T::zero() && f.im == T::zero() {
                continue;
            }
            for j in (col + 1)..n {
                let delta = f * a[col * n + j];
                a[row * n + j] = a[row * n + j] - delta;
            }
            let delta = f * b[col];
            b[row] = b[row] - delta;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc = acc - a[row * n + j] * b[j];
        }
        b[row] = acc / a[row * n + row];
    }
    Some(pmax / pmin)
}

/// LU factorization with partial pivoting for small square systems (the
/// per-bin zero-forcing solves). The condition estimate is the pivot-magnitude
/// ratio, a cheap proxy that flags the deep-fade failure mode.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    piv: Vec<usize>,
    pub cond_estimate: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &CMatrix<T>) -> Result<Self> {
        assert_eq!(a.rows(), a.cols(), "lu needs a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut piv = vec![0usize; n];
        let mut pmin = f64::INFINITY;
        let mut pmax = 0.0f64;
        for k in 0..n {
            let mut best = k;
            let mut best_mag = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let mag = lu[(i, k)].norm();
                if mag > best_mag {
                    best = i;
                    best_mag = mag;
                }
            }
            piv[k] = best;
            if best != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            let pk = lu[(k, k)];
            let mag = pk.norm().as_f64();
            if !(mag > 0.0) || !mag.is_finite() {
                return Err(Error::SingularSystem {
                    cond: f64::INFINITY,
                    limit: COND_LIMIT,
                });
            }
            pmin = pmin.min(mag);
            pmax = pmax.max(mag);
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pk;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let delta = f * lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - delta;
                }
            }
        }
        Ok(Self {
            lu,
            piv,
            cond_estimate: pmax / pmin,
        })
    }

    pub fn solve_vec(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for i in 0..n {
            for k in 0..i {
                let delta = self.lu[(i, k)] * x[k];
                x[i] = x[i] - delta;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let delta = self.lu[(i, k)] * x[k];
                x[i] = x[i] - delta;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.lu.rows();
        let mut out = CMatrix::<T>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex::new(T::zero(), T::zero()); n];
            e[j] = Complex::new(T::one(), T::zero());
            out.set_col(j, &self.solve_vec(&e));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = CMatrix<f64>;
    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_matrix(rng: &mut impl Rng, m: usize, n: usize) -> M {
        M::from_fn(m, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn reconstruct(d: &Svd<f64>) -> M {
        let k = d.s.len();
        let us = M::from_fn(d.u.rows(), k, |i, j| d.u[(i, j)] * d.s[j]);
        us.mul(&d.v.hermitian())
    }

    #[test]
    fn svd_identity_has_unit_singular_values() {
        let d = svd(&M::identity(2));
        assert!((d.s[0] - 1.0).abs() < 1e-12);
        assert!((d.s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_diagonal_is_sorted_with_canonical_vectors() {
        let mut a = M::zeros(2, 2);
        a[(0, 0)] = c(3.0, 0.0);
        a[(1, 1)] = c(1.0, 0.0);
        let d = svd(&a);
        assert!((d.s[0] - 3.0).abs() < 1e-12);
        assert!((d.s[1] - 1.0).abs() < 1e-12);
        assert!((d.u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((d.v[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_4x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 4, 3);
        let d = svd(&a);
        let err = reconstruct(&d).sub(&a).frobenius_norm();
        assert!(err <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn svd_properties_hold_over_random_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &(m, n) in &[(1usize, 1usize), (2, 5), (5, 2), (8, 8), (17, 9), (32, 32)] {
            let a = random_matrix(&mut rng, m, n);
            let d = svd(&a);
            let err = reconstruct(&d).sub(&a).frobenius_norm();
            assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "{m}x{n}: {err:.2e}");
            for w in d.s.windows(2) {
                assert!(w[0] >= w[1]);
            }
            for g in [d.u.hermitian().mul(&d.u), d.v.hermitian().mul(&d.v)] {
                let k = g.rows();
                let eye_err = g.sub(&M::identity(k)).frobenius_norm();
                assert!(eye_err < 1e-10 * (k as f64).sqrt().max(1.0));
            }
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        let mut a = M::zeros(3, 3);
        a[(0, 0)] = c(2.0, 0.0); // rank 1
        let d = svd(&a);
        assert!((d.s[0] - 2.0).abs() < 1e-12);
        assert!(d.s[1].abs() < 1e-12);
        let g = d.u.hermitian().mul(&d.u);
        assert!(g.sub(&M::identity(3)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn hermitian_solve_identity_returns_rhs() {
        let b = M::from_fn(3, 2, |i, j| c(i as f64, j as f64));
        let x = hermitian_solve(&M::identity(3), &b).unwrap();
        assert!(x.sub(&b).frobenius_norm() < 1e-12);
    }

    #[test]
    fn hermitian_solve_scaled_identity() {
        let a = M::identity(3).scale_real(2.0);
        let x = hermitian_solve(&a, &M::identity(3)).unwrap();
        assert!(x.sub(&M::identity(3).scale_real(0.5)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn hermitian_solve_random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_matrix(&mut rng, 6, 6);
        let a = g.hermitian().mul(&g).add(&M::identity(6).scale_real(0.1));
        let b = random_matrix(&mut rng, 6, 2);
        let x = hermitian_solve(&a, &b).unwrap();
        let resid = a.mul(&x).sub(&b).frobenius_norm();
        assert!(resid <= 1e-9 * b.frobenius_norm());
    }

    #[test]
    fn hermitian_solve_rejects_indefinite() {
        let mut a = M::identity(2);
        a[(1, 1)] = c(-1.0, 0.0);
        assert!(matches!(
            hermitian_solve(&a, &M::identity(2)),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn hermitian_solve_rejects_huge_condition() {
        let mut a = M::identity(2);
        a[(1, 1)] = c(1e-13, 0.0);
        assert!(matches!(
            hermitian_solve(&a, &M::identity(2)),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn lu_solves_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = random_matrix(&mut rng, 4, 4);
        let lu = Lu::factor(&a).unwrap();
        let b: Vec<_> = (0..4).map(|i| c(i as f64, 1.0)).collect();
        let x = lu.solve_vec(&b);
        let back = a.mul_vec(&x);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).norm() < 1e-10);
        }
        let eye = a.mul(&lu.inverse());
        assert!(eye.sub(&M::identity(4)).frobenius_norm() < 1e-10);
    }
}
