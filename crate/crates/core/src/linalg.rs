//! Dense linear algebra kernels: singular value decomposition, symmetric
//! eigenvalues and pivoted Cholesky factorization.
//!
//! The SVD is one-sided Jacobi and the eigensolver is Householder reduction
//! with implicit QL. Both are accurate to a few ulps relative to the largest
//! singular value / eigenvalue and are meant for the small dense matrices
//! this crate works with.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{count, dot, lit, Real};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `X = U · diag(s) · Vᵀ`.
///
/// `U` is `n x r`, `V` is `m x r` with `r = min(n, m)`; singular values are
/// sorted descending. Columns that belong to an exactly zero singular value
/// are left as zero vectors.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub s: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `rel * s[0]`.
    pub fn rank(&self, rel: T) -> usize {
        match self.s.first() {
            Some(&top) if top > T::zero() => self.s.iter().take_while(|&&x| x > rel * top).count(),
            _ => 0,
        }
    }

    /// Default truncation threshold relative to the top singular value.
    pub fn default_rank_tol(rows: usize, cols: usize) -> T {
        T::epsilon() * count::<T>(rows.max(cols)) * lit(16.0)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Real>(x: &Matrix<T>) -> Result<Svd<T>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    if x.rows() >= x.cols() {
        svd_tall(x)
    } else {
        let t = svd_tall(&x.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(x: &Matrix<T>) -> Result<T> {
    Ok(svd(x)?.s.into_iter().sum())
}

fn svd_tall<T: Real>(x: &Matrix<T>) -> Result<Svd<T>> {
    let (n, m) = (x.rows(), x.cols());
    // Columns of X stored as rows for contiguous rotations.
    let mut w = x.transpose();
    let mut vt = Matrix::<T>::identity(m);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = sq_norm(w.row(p));
                let beta = sq_norm(w.row(q));
                let gamma = dot(w.row(p), w.row(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, T)> = (0..m).map(|j| (j, sq_norm(w.row(j)).sqrt())).collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut u = Matrix::zeros(n, m);
    let mut v = Matrix::zeros(m, m);
    let mut s = Vec::with_capacity(m);
    for (k, &(j, sigma)) in order.iter().enumerate() {
        s.push(sigma);
        if sigma > T::zero() {
            for i in 0..n {
                u[(i, k)] = w[(j, i)] / sigma;
            }
        }
        for i in 0..m {
            v[(i, k)] = vt[(j, i)];
        }
    }
    Ok(Svd { u, s, v })
}

fn sq_norm<T: Real>(x: &[T]) -> T {
    x.iter().map(|&a| a * a).sum()
}

fn rotate_rows<T: Real>(w: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let cols = w.cols();
    for k in 0..cols {
        let a = w[(p, k)];
        let b = w[(q, k)];
        w[(p, k)] = c * a - s * b;
        w[(q, k)] = s * a + c * b;
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: Matrix<T>,
}

/// Eigen-decomposition of a symmetric matrix by Householder reduction to
/// tridiagonal form followed by implicit QL iterations.
pub fn sym_eigen<T: Real>(a: &Matrix<T>) -> Result<SymEigen<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigen input".into()));
    }
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let mut v = Matrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)]) * lit(0.5));
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Ok(SymEigen { values, vectors })
}

/// Householder reduction of the symmetric `v` in place. On return `d` holds
/// the diagonal, `e[1..]` the subdiagonal and `v` the orthogonal transform.
fn tridiagonalize<T: Real>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let scale = d[..i].iter().fold(T::zero(), |acc, x| acc + x.abs());
        let mut h = T::zero();
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for x in d[..i].iter_mut() {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = T::zero());
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL iterations on the tridiagonal `(d, e)`, accumulating the
/// rotations into `v`. Eigenvalues are left in `d`, unsorted.
fn tridiagonal_ql<T: Real>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = lit::<T>(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS * 10 {
                    return Err(Error::NotPsd(
                        "eigenvalue iteration did not converge".into(),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d[l + 2..].iter_mut() {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Diagonally pivoted Cholesky factorization of a positive semidefinite
/// matrix: returns `F` with `F Fᵀ = M` up to the rank tolerance.
///
/// Elimination stops once every remaining diagonal entry is below
/// `tol = N · 16ε · max_i M_ii`; the residual Schur complement is then
/// bounded entrywise by `tol`, so the reconstruction error is too.
pub fn pivoted_cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("cholesky input".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = a[(i, j)].abs().max(a[(j, i)].abs()).max(T::one());
            if (a[(i, j)] - a[(j, i)]).abs() > lit::<T>(1e-9) * scale {
                return Err(Error::NotPsd(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut s = a.clone();
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(a[(i, i)]));
    let tol = (count::<T>(n) * T::epsilon() * lit(16.0) * max_diag).max(T::min_positive_value());

    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let mut pivot = None;
        let mut best = T::neg_infinity();
        for i in 0..n {
            if !used[i] && s[(i, i)] > best {
                best = s[(i, i)];
                pivot = Some(i);
            }
        }
        let Some(p) = pivot else { break };
        if best < -tol {
            return Err(Error::NotPsd(format!("negative pivot {best:?}")));
        }
        if best <= tol {
            break;
        }
        used[p] = true;
        let root = best.sqrt();
        let col: Vec<T> = (0..n)
            .map(|i| {
                if used[i] && i != p {
                    T::zero()
                } else {
                    s[(i, p)] / root
                }
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] -= col[i] * col[j];
            }
        }
        cols.push(col);
    }
    for i in 0..n {
        if s[(i, i)] < -tol {
            return Err(Error::NotPsd(format!("negative residual diagonal at {i}")));
        }
        for j in 0..n {
            if s[(i, j)].abs() > tol * lit(10.0) {
                return Err(Error::NotPsd(format!(
                    "residual entry ({i}, {j}) = {:?} above tolerance",
                    s[(i, j)]
                )));
            }
        }
    }
    let r = cols.len().max(1);
    Ok(Matrix::from_fn(n, r, |i, k| {
        cols.get(k).map_or(T::zero(), |c| c[i])
    }))
}
