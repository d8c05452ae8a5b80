//! Exact evaluation of local max norms.
//!
//! For weight sets `R ⊆ Δ_n`, `C ⊆ Δ_m` the norm is
//!
//! ```text
//! ‖X‖_(R,C) = sup_{r ∈ R, c ∈ C} ‖diag(r)^½ X diag(c)^½‖_tr
//! ```
//!
//! The objective `f(r, c)` is concave: it is the infimum over factorizations
//! `X = ABᵀ` of `½(Σ r_i‖A_i‖² + Σ c_j‖B_j‖²)`, a family of functions linear in
//! `(r, c)`. At any point the optimal factorization supplies a supergradient
//! `(½‖A_i‖², ½‖B_j‖²)`, and the factorized penalty
//! `½(sup_R Σ r_i‖A_i‖² + sup_C Σ c_j‖B_j‖²)` is an upper bound on the norm.
//! [`local_max_norm`] runs conditional-gradient ascent on `f`, and the gap
//! between those two bounds is both the Frank–Wolfe gap and a certificate of
//! accuracy.

use crate::error::{invalid, Error, Result};
use crate::linalg::{svd, Svd};
use crate::matrix::Matrix;
use crate::scalar::{count, dot, lit, Real};
use crate::weights::{MarginalDist, WeightDomain, WeightSet};

/// Options for [`local_max_norm`].
#[derive(Debug, Clone, Copy)]
pub struct NormOptions<T> {
    /// Relative target for the certificate gap.
    pub tol: T,
    pub max_iter: usize,
    /// Weights below this level are raised to it before factorizing.
    pub floor: T,
}

impl<T: Real> Default for NormOptions<T> {
    fn default() -> Self {
        NormOptions {
            tol: lit(1e-6),
            max_iter: 500,
            floor: lit(1e-10),
        }
    }
}

impl<T: Real> NormOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        NormOptions {
            tol,
            ..Self::default()
        }
    }
}

/// Value of a local max norm with the weights attaining it and a
/// factorization certifying it.
#[derive(Debug, Clone)]
pub struct NormCertificate<T> {
    /// `f(r_star, c_star)`, a lower bound on the norm.
    pub value: T,
    pub r_star: Vec<T>,
    pub c_star: Vec<T>,
    /// Factors with `ABᵀ = X` whose factorized penalty is `value + gap`.
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    /// Upper bound minus lower bound; the norm lies in `[value, value + gap]`.
    pub gap: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> NormCertificate<T> {
    pub fn upper_bound(&self) -> T {
        self.value + self.gap
    }
}

fn check_weights<T: Real>(x: &Matrix<T>, r: &[T], c: &[T]) -> Result<()> {
    if r.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: r.len(),
        });
    }
    if c.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: c.len(),
        });
    }
    if r.iter().chain(c).any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(invalid("weights", "must be finite and nonnegative"));
    }
    Ok(())
}

fn sqrt_all<T: Real>(w: &[T]) -> Vec<T> {
    w.iter().map(|x| x.sqrt()).collect()
}

/// Trace norm of `diag(r)^½ · X · diag(c)^½`.
pub fn weighted_trace_norm<T: Real>(x: &Matrix<T>, r: &[T], c: &[T]) -> Result<T> {
    check_weights(x, r, c)?;
    let m = x.scale_rows_cols(&sqrt_all(r), &sqrt_all(c));
    Ok(svd(&m)?.s.into_iter().sum())
}

/// Weighted trace norm at `(r, c)` together with its optimal factorization.
struct Evaluation<T> {
    value: T,
    a: Matrix<T>,
    b: Matrix<T>,
}

/// With `M = diag(r)^½ X diag(c)^½ = U D Vᵀ`, the optimal factors are
/// `A = diag(r)^{-½} U D^½ = X diag(c)^½ V D^{-½}` and the analogous `B`.
/// The second form avoids dividing by small weights.
fn evaluate<T: Real>(x: &Matrix<T>, r: &[T], c: &[T]) -> Result<Evaluation<T>> {
    let sr = sqrt_all(r);
    let sc = sqrt_all(c);
    let m = x.scale_rows_cols(&sr, &sc);
    let d = svd(&m)?;
    let value: T = d.s.iter().copied().sum();
    let (a, b) = factors_from_svd(x, &sr, &sc, &d);
    Ok(Evaluation { value, a, b })
}

fn factors_from_svd<T: Real>(
    x: &Matrix<T>,
    sr: &[T],
    sc: &[T],
    d: &Svd<T>,
) -> (Matrix<T>, Matrix<T>) {
    let (n, m) = (x.rows(), x.cols());
    let k = d.rank(Svd::<T>::default_rank_tol(n, m));
    if k == 0 {
        return (Matrix::zeros(n, 1), Matrix::zeros(m, 1));
    }
    let inv_root: Vec<T> = d.s[..k].iter().map(|s| T::one() / s.sqrt()).collect();
    // A = X · diag(sc) · V_k · D_k^{-½}
    let xs = Matrix::from_fn(n, m, |i, j| x[(i, j)] * sc[j]);
    let vk = Matrix::from_fn(m, k, |j, l| d.v[(j, l)] * inv_root[l]);
    let a = xs.matmul(&vk).expect("conforming shapes");
    // B = Xᵀ · diag(sr) · U_k · D_k^{-½}
    let xt = Matrix::from_fn(m, n, |j, i| x[(i, j)] * sr[i]);
    let uk = Matrix::from_fn(n, k, |i, l| d.u[(i, l)] * inv_root[l]);
    let b = xt.matmul(&uk).expect("conforming shapes");
    (a, b)
}

/// Factorization `X = ABᵀ` minimizing `Σ r_i‖A_i‖² + Σ c_j‖B_j‖²`.
///
/// Weights below `floor` are raised to `floor` first, so the product always
/// reproduces `X`. For weights at or above the floor,
/// `A = diag(r)^{-½} U D^½` and `B = diag(c)^{-½} V D^½` where `UDVᵀ` is the
/// SVD of `diag(r)^½ X diag(c)^½`; zero singular values are dropped, so the
/// number of columns equals the numerical rank (at least one).
pub fn optimal_factorization<T: Real>(
    x: &Matrix<T>,
    r: &[T],
    c: &[T],
    floor: T,
) -> Result<(Matrix<T>, Matrix<T>)> {
    check_weights(x, r, c)?;
    if !(floor > T::zero()) {
        return Err(invalid("floor", "must be positive"));
    }
    let rf: Vec<T> = r.iter().map(|&w| w.max(floor)).collect();
    let cf: Vec<T> = c.iter().map(|&w| w.max(floor)).collect();
    let e = evaluate(x, &rf, &cf)?;
    Ok((e.a, e.b))
}

/// `½(sup_R Σ r_i‖A_i‖² + sup_C Σ c_j‖B_j‖²)`, the factorized penalty.
pub fn factorized_penalty<T, R, C>(a: &Matrix<T>, b: &Matrix<T>, rset: &R, cset: &C) -> Result<T>
where
    T: Real,
    R: WeightDomain<T> + ?Sized,
    C: WeightDomain<T> + ?Sized,
{
    let half = lit::<T>(0.5);
    let ra = rset.linmax(&a.row_sq_norms())?;
    let cb = cset.linmax(&b.row_sq_norms())?;
    Ok(half * (ra.value + cb.value))
}

/// Evaluates `‖X‖_(R,C)` by conditional-gradient ascent on the weights.
///
/// Starts at the sets' centers and alternates pairwise conditional-gradient
/// steps on `r` and `c`: weight moves from the active atom with the smallest
/// linearized value to the `linmax` vertex, with an exact line search. Stops
/// once the best upper bound is within `tol · value` of the best lower bound.
/// When `max_iter` is exhausted the best bounds found so far are returned
/// with `converged = false`.
pub fn local_max_norm<T, R, C>(
    x: &Matrix<T>,
    rset: &R,
    cset: &C,
    opts: NormOptions<T>,
) -> Result<NormCertificate<T>>
where
    T: Real,
    R: WeightDomain<T> + ?Sized,
    C: WeightDomain<T> + ?Sized,
{
    if rset.dim() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: rset.dim(),
        });
    }
    if cset.dim() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: cset.dim(),
        });
    }
    if !(opts.tol > T::zero()) {
        return Err(invalid("tol", "must be positive"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("matrix".into()));
    }

    let half = lit::<T>(0.5);
    let center_r = rset.center();
    let center_c = cset.center();
    let mut r = center_r.clone();
    let mut c = center_c.clone();
    let mut atoms_r = Atoms::new(center_r);
    let mut atoms_c = Atoms::new(center_c);

    let mut best_lower = T::neg_infinity();
    let mut best_rc = (r.clone(), c.clone());
    let mut best_upper = T::infinity();
    let mut best_factors = (Matrix::zeros(x.rows(), 1), Matrix::zeros(x.cols(), 1));
    let mut iterations = 0;
    let mut converged = false;

    let mut eval = evaluate(x, &r, &c)?;
    loop {
        iterations += 1;
        let (a, b) = factors_for_bound(x, &r, &c, &eval, opts.floor)?;
        let ra = rset.linmax(&a.row_sq_norms())?;
        let cb = cset.linmax(&b.row_sq_norms())?;
        let upper = half * (ra.value + cb.value);

        if eval.value > best_lower {
            best_lower = eval.value;
            best_rc = (r.clone(), c.clone());
        }
        if upper < best_upper {
            best_upper = upper;
            best_factors = (a, b);
        }
        if best_upper - best_lower <= opts.tol * best_lower.max(T::zero())
            || best_upper <= T::min_positive_value()
        {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        eval = pairwise_step(x, Block::Rows, &mut r, &c, &mut atoms_r, &ra.argmax, eval)?;
        let cb = cset.linmax(&eval.b.row_sq_norms())?;
        eval = pairwise_step(x, Block::Cols, &mut c, &r, &mut atoms_c, &cb.argmax, eval)?;
    }

    let (r_star, c_star) = best_rc;
    let (a, b) = best_factors;
    Ok(NormCertificate {
        value: best_lower,
        r_star,
        c_star,
        a,
        b,
        gap: (best_upper - best_lower).max(T::zero()),
        iterations,
        converged,
    })
}

/// Factors valid for the upper bound: when every weight is above the floor the
/// evaluation's own factors already satisfy `ABᵀ = X`; otherwise refactor with
/// floored weights.
fn factors_for_bound<T: Real>(
    x: &Matrix<T>,
    r: &[T],
    c: &[T],
    eval: &Evaluation<T>,
    floor: T,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if r.iter().chain(c).all(|&w| w >= floor) {
        Ok((eval.a.clone(), eval.b.clone()))
    } else {
        optimal_factorization(x, r, c, floor)
    }
}

/// Iterate written as a convex combination of points of the set. Atom 0 is
/// the center and keeps at least `ANCHOR` weight, so iterates stay in the
/// relative interior where `f` is differentiable.
struct Atoms<T> {
    points: Vec<Vec<T>>,
    weights: Vec<T>,
}

const ANCHOR: f64 = 1e-7;

impl<T: Real> Atoms<T> {
    fn new(center: Vec<T>) -> Self {
        Atoms {
            points: vec![center],
            weights: vec![T::one()],
        }
    }

    fn available(&self, k: usize) -> T {
        if k == 0 {
            (self.weights[0] - lit(ANCHOR)).max(T::zero())
        } else {
            self.weights[k]
        }
    }

    /// Active atom minimizing `⟨g, a⟩`, with the weight it can give up.
    fn away(&self, g: &[T]) -> Option<(usize, T)> {
        let mut best: Option<(usize, T, T)> = None;
        for (k, p) in self.points.iter().enumerate() {
            let avail = self.available(k);
            if avail <= T::zero() {
                continue;
            }
            let v = dot(g, p);
            if best.is_none_or(|(_, bv, _)| v < bv) {
                best = Some((k, v, avail));
            }
        }
        best.map(|(k, _, avail)| (k, avail))
    }

    fn index_of(&mut self, s: &[T]) -> usize {
        let tol = T::epsilon() * lit(16.0);
        let found = self
            .points
            .iter()
            .position(|p| p.iter().zip(s).all(|(&a, &b)| (a - b).abs() <= tol));
        found.unwrap_or_else(|| {
            self.points.push(s.to_vec());
            self.weights.push(T::zero());
            self.points.len() - 1
        })
    }

    fn shift(&mut self, from: usize, to: usize, eta: T) {
        self.weights[from] -= eta;
        self.weights[to] += eta;
        let mut k = 1;
        while k < self.points.len() {
            if self.weights[k] <= T::zero() {
                self.points.swap_remove(k);
                self.weights.swap_remove(k);
            } else {
                k += 1;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Block {
    Rows,
    Cols,
}

/// One pairwise conditional-gradient step on a single block: moves weight
/// from the worst active atom to the linear maximizer `s`, with an exact
/// line search on the concave restriction.
fn pairwise_step<T: Real>(
    x: &Matrix<T>,
    block: Block,
    w: &mut [T],
    other: &[T],
    atoms: &mut Atoms<T>,
    s: &[T],
    eval: Evaluation<T>,
) -> Result<Evaluation<T>> {
    let half = lit::<T>(0.5);
    let grad = match block {
        Block::Rows => eval.a.row_sq_norms(),
        Block::Cols => eval.b.row_sq_norms(),
    };
    let Some((away, eta_max)) = atoms.away(&grad) else {
        return Ok(eval);
    };
    let dir: Vec<T> = s
        .iter()
        .zip(&atoms.points[away])
        .map(|(&p, &q)| p - q)
        .collect();
    let slope0 = half * dot(&grad, &dir);
    if !(slope0 > T::zero()) {
        return Ok(eval);
    }

    let at = |eta: T| -> Result<(Evaluation<T>, T)> {
        let moved: Vec<T> = w
            .iter()
            .zip(&dir)
            .map(|(&v, &d)| (v + eta * d).max(T::zero()))
            .collect();
        let e = match block {
            Block::Rows => evaluate(x, &moved, other)?,
            Block::Cols => evaluate(x, other, &moved)?,
        };
        let g = match block {
            Block::Rows => e.a.row_sq_norms(),
            Block::Cols => e.b.row_sq_norms(),
        };
        let slope = half * dot(&g, &dir);
        Ok((e, slope))
    };

    let (end, end_slope) = at(eta_max)?;
    let (eta, next) = if end_slope >= T::zero() {
        (eta_max, end)
    } else {
        regula_falsi(&at, eta_max, slope0, end_slope, end)?
    };
    let target = atoms.index_of(s);
    atoms.shift(away, target, eta);
    for (v, d) in w.iter_mut().zip(&dir) {
        *v = (*v + eta * *d).max(T::zero());
    }
    Ok(next)
}

/// Root of the decreasing slope `φ'` on `[0, hi]` by the Illinois variant of
/// regula falsi. Returns the step with the largest `φ` seen.
fn regula_falsi<T: Real>(
    at: &impl Fn(T) -> Result<(Evaluation<T>, T)>,
    hi: T,
    slope_lo: T,
    slope_hi: T,
    end: Evaluation<T>,
) -> Result<(T, Evaluation<T>)> {
    let (mut lo, mut hi) = (T::zero(), hi);
    let (mut flo, mut fhi) = (slope_lo, slope_hi);
    let mut best = (hi, end);
    let mut side = 0i8;
    let stop = slope_lo * lit(1e-10);
    for _ in 0..60 {
        let mut eta = (lo * fhi - hi * flo) / (fhi - flo);
        if !(eta > lo && eta < hi) {
            eta = lit::<T>(0.5) * (lo + hi);
        }
        let (e, slope) = at(eta)?;
        let done = slope.abs() <= stop || hi - lo <= T::epsilon() * hi;
        if e.value > best.1.value {
            best = (eta, e);
        }
        if done {
            break;
        }
        if slope > T::zero() {
            lo = eta;
            flo = slope;
            if side == 1 {
                fhi *= lit(0.5);
            }
            side = 1;
        } else {
            hi = eta;
            fhi = slope;
            if side == -1 {
                flo *= lit(0.5);
            }
            side = -1;
        }
    }
    Ok(best)
}

/// `ω_t = 1 / sqrt((1 + (n − 1)t)(1 + (m − 1)t))`.
pub fn omega<T: Real>(n: usize, m: usize, t: T) -> T {
    let a = T::one() + count::<T>(n - 1) * t;
    let b = T::one() + count::<T>(m - 1) * t;
    T::one() / (a * b).sqrt()
}

/// Objective of the α-scan: `(α + α⁻¹)·‖X‖_(R_t, C_t) / ω_t` with
/// `t = α⁻¹ / (α + α⁻¹)` and lower-bounded sets `R_t`, `C_t`.
pub fn beta_tau_scan<T: Real>(
    x: &Matrix<T>,
    alpha: T,
    opts: NormOptions<T>,
) -> Result<ScanPoint<T>> {
    if !(alpha > T::zero()) {
        return Err(invalid("alpha", "must be positive"));
    }
    let (n, m) = (x.rows(), x.cols());
    let inv = T::one() / alpha;
    let t = inv / (alpha + inv);
    let rset = WeightSet::lower_bounded(n, t)?;
    let cset = WeightSet::lower_bounded(m, t)?;
    let cert = local_max_norm(x, &rset, &cset, opts)?;
    Ok(ScanPoint {
        alpha,
        value: (alpha + inv) * cert.value / omega(n, m, t),
        converged: cert.converged,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ScanPoint<T> {
    pub alpha: T,
    pub value: T,
    pub converged: bool,
}

/// Result of [`penalty_beta_tau`].
#[derive(Debug, Clone, Copy)]
pub struct BetaTauPenalty<T> {
    pub value: T,
    /// Minimizing α in `[1, sqrt(max(n, m))]`.
    pub alpha: T,
    /// Every inner norm evaluation converged.
    pub converged: bool,
    /// The coarse scan was not unimodal and the dense grid was used.
    pub dense_fallback: bool,
}

const COARSE_POINTS: usize = 17;

/// `min_{X = ABᵀ} sqrt(max_i‖A_i‖² + max_j‖B_j‖²) · sqrt(Σ‖A_i‖² + Σ‖B_j‖²)`.
///
/// Computed through the α-scan identity with lower-bounded local max norms:
/// a coarse scan brackets the minimum, then golden-section search refines it.
/// If the coarse scan has more than one local minimum, a dense grid with
/// step `1e-3` picks the bracket instead.
pub fn penalty_beta_tau<T: Real>(x: &Matrix<T>, tol: T) -> Result<BetaTauPenalty<T>> {
    if !(tol > T::zero()) {
        return Err(invalid("tol", "must be positive"));
    }
    let opts = NormOptions::with_tol(tol);
    let lo = T::one();
    let hi = count::<T>(x.rows().max(x.cols())).sqrt();
    let mut converged = true;
    let mut eval = |alpha: T| -> Result<T> {
        let p = beta_tau_scan(x, alpha, opts)?;
        converged &= p.converged;
        Ok(p.value)
    };

    if hi - lo <= T::epsilon() {
        let value = eval(lo)?;
        return Ok(BetaTauPenalty {
            value,
            alpha: lo,
            converged,
            dense_fallback: false,
        });
    }

    let coarse = grid(lo, hi, COARSE_POINTS);
    let values = coarse
        .iter()
        .map(|&a| eval(a))
        .collect::<Result<Vec<T>>>()?;
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let flat = tol * scale;
    let minima = local_minima(&values, flat);

    let (grid_pts, grid_vals, dense_fallback) = if minima > 1 {
        let steps = ((hi - lo) / lit(1e-3))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let pts = grid(lo, hi, steps + 1);
        let vals = pts.iter().map(|&a| eval(a)).collect::<Result<Vec<T>>>()?;
        (pts, vals, true)
    } else {
        (coarse, values, false)
    };

    let best = argmin(&grid_vals);
    let a = grid_pts[best.saturating_sub(1)];
    let b = grid_pts[(best + 1).min(grid_pts.len() - 1)];
    let (alpha, value) = golden_section(&mut eval, a, b, grid_pts[best], grid_vals[best])?;
    Ok(BetaTauPenalty {
        value,
        alpha,
        converged,
        dense_fallback,
    })
}

fn grid<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    let last = count::<T>(points - 1);
    (0..points)
        .map(|k| lo + (hi - lo) * count::<T>(k) / last)
        .collect()
}

fn argmin<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Counts strict local minima after merging differences below `flat`.
fn local_minima<T: Real>(v: &[T], flat: T) -> usize {
    let mut dirs = Vec::new();
    for w in v.windows(2) {
        let d = w[1] - w[0];
        if d > flat {
            dirs.push(1);
        } else if d < -flat {
            dirs.push(-1);
        }
    }
    let mut minima = 0;
    if dirs.first() == Some(&1) {
        minima += 1;
    }
    for w in dirs.windows(2) {
        if w[0] == -1 && w[1] == 1 {
            minima += 1;
        }
    }
    if dirs.last() == Some(&-1) {
        minima += 1;
    }
    minima.max(1)
}

/// Golden-section minimization on `[a, b]`, seeded with a known point.
fn golden_section<T: Real>(
    f: &mut impl FnMut(T) -> Result<T>,
    mut a: T,
    mut b: T,
    seed_x: T,
    seed_v: T,
) -> Result<(T, T)> {
    let inv_phi = lit::<T>(0.618_033_988_749_894_8);
    let xtol = lit::<T>(1e-7);
    let mut best = (seed_x, seed_v);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Split `u = u' + u''` of a unit vector in the `R^×_{½,γ}` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    /// Remainder, bounded in ℓ∞ by the unit norm.
    pub u_prime: Vec<T>,
    /// Heavy part: the `N − 1` largest-magnitude entries plus `√t` times the
    /// `N`-th.
    pub u_doubleprime: Vec<T>,
    /// 1-based count `N` of entries touched by the heavy part.
    pub pivot_count: usize,
    pub t: T,
    /// Half-smoothed marginals `p̃ = p/2 + 1/(2n)`.
    pub smoothed: Vec<T>,
}

/// Decomposes `u` against the half-smoothed marginals of `p`.
///
/// With entries sorted by decreasing magnitude, finds `N` and `t ∈ (0, 1]`
/// such that `Σ_{i<N} p̃_i + t·p̃_N = 1/γ`. If `u` has unit norm in
/// `capped_multiplicative(p, ½, γ)`, then `‖u'‖_∞ ≤ 1` and
/// `Σ p̃_i u''_i² ≤ 1/γ`.
pub fn decompose_vector<T: Real>(
    u: &[T],
    p: &MarginalDist<T>,
    gamma: T,
) -> Result<Decomposition<T>> {
    if u.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: u.len(),
        });
    }
    if !(gamma >= T::one()) || gamma.is_infinite() {
        return Err(invalid("gamma", "must be finite and at least 1"));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector".into()));
    }
    let smoothed = p.smoothed(lit(0.5))?.into_vec();
    let target = T::one() / gamma;
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[b].abs().partial_cmp(&u[a].abs()).unwrap().then(a.cmp(&b)));

    let slack = T::validation_tol();
    let mut cum = T::zero();
    let mut pivot = order.len() - 1;
    let mut t = T::one();
    for (k, &i) in order.iter().enumerate() {
        let w = smoothed[i];
        if cum + w >= target - slack || k == order.len() - 1 {
            pivot = k;
            t = ((target - cum) / w)
                .min(T::one())
                .max(T::min_positive_value());
            break;
        }
        cum += w;
    }

    let mut heavy = vec![T::zero(); u.len()];
    for &i in &order[..pivot] {
        heavy[i] = u[i];
    }
    let pi = order[pivot];
    heavy[pi] = t.sqrt() * u[pi];
    let rest = u.iter().zip(&heavy).map(|(&a, &b)| a - b).collect();
    Ok(Decomposition {
        u_prime: rest,
        u_doubleprime: heavy,
        pivot_count: pivot + 1,
        t,
        smoothed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::SmoothingSegment;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_uniform_weights() {
        let x = Matrix::<f64>::identity(3);
        let u = vec![1.0 / 3.0; 3];
        assert_relative_eq!(
            weighted_trace_norm(&x, &u, &u).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rank_one_weighted_norm() {
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0];
        let r = [0.2, 0.3, 0.5];
        let c = [0.6, 0.4];
        let x = Matrix::outer(&u, &v);
        let ru: f64 = u.iter().zip(&r).map(|(a, w)| w * a * a).sum::<f64>().sqrt();
        let cv: f64 = v.iter().zip(&c).map(|(a, w)| w * a * a).sum::<f64>().sqrt();
        assert_relative_eq!(
            weighted_trace_norm(&x, &r, &c).unwrap(),
            ru * cv,
            epsilon = 1e-13
        );
        let (a, b) = optimal_factorization(&x, &r, &c, 1e-10).unwrap();
        assert_eq!(a.cols(), 1);
        assert_eq!(b.cols(), 1);
    }

    #[test]
    fn factorization_of_identity() {
        let x = Matrix::<f64>::identity(2);
        let u = [0.5, 0.5];
        let (a, b) = optimal_factorization(&x, &u, &u, 1e-10).unwrap();
        let rs = a.row_sq_norms();
        // SVD of I/2: D = ½ I, A = √2 · U · √½ → unit rows.
        for v in rs.iter().chain(b.row_sq_norms().iter()) {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let weighted: f64 = rs.iter().map(|v| 0.5 * v).sum();
        assert_relative_eq!(weighted, 1.0, epsilon = 1e-14);
        let back = a.matmul_transpose(&b).unwrap();
        assert!(back.sub(&x).unwrap().frobenius() < 1e-14);
    }

    #[test]
    fn singleton_sets_converge_immediately() {
        let x = m(&[&[1.0, 2.0], &[-0.5, 3.0], &[0.0, 1.0]]);
        let r = MarginalDist::new(vec![0.5, 0.3, 0.2]).unwrap();
        let c = MarginalDist::new(vec![0.4, 0.6]).unwrap();
        let cert = local_max_norm(
            &x,
            &WeightSet::singleton(&r),
            &WeightSet::singleton(&c),
            NormOptions::default(),
        )
        .unwrap();
        assert!(cert.converged);
        assert_eq!(cert.iterations, 1);
        assert_eq!(
            cert.value,
            weighted_trace_norm(&x, r.weights(), c.weights()).unwrap()
        );
        assert!(cert.gap <= 1e-14);
    }

    #[test]
    fn max_norm_of_identity() {
        let x = Matrix::<f64>::identity(2);
        let s = WeightSet::full_simplex(2);
        let cert = local_max_norm(&x, &s, &s, NormOptions::default()).unwrap();
        assert!(cert.converged);
        assert_relative_eq!(cert.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let x = Matrix::<f64>::zeros(3, 2);
        let cert = local_max_norm(
            &x,
            &WeightSet::full_simplex(3),
            &WeightSet::full_simplex(2),
            NormOptions::default(),
        )
        .unwrap();
        assert_eq!(cert.value, 0.0);
        assert!(cert.converged);
        assert_eq!(penalty_beta_tau(&x, 1e-6).unwrap().value, 0.0);
    }

    #[test]
    fn segment_sets_are_supported() {
        let x = m(&[&[2.0, 0.0], &[1.0, 1.0]]);
        let p = MarginalDist::new(vec![0.8, 0.2]).unwrap();
        let seg = SmoothingSegment::new(&p);
        let cert = local_max_norm(&x, &seg, &seg, NormOptions::default()).unwrap();
        assert!(cert.converged);
        let lower = weighted_trace_norm(&x, p.weights(), p.weights()).unwrap();
        assert!(cert.value + cert.gap >= lower);
        assert!(cert.value <= lower * (1.0 + 1e-6));
    }

    #[test]
    fn dimension_checks() {
        let x = Matrix::<f64>::identity(2);
        let s3 = WeightSet::full_simplex(3);
        let s2 = WeightSet::full_simplex(2);
        assert!(local_max_norm(&x, &s3, &s2, NormOptions::default()).is_err());
        assert!(local_max_norm(&x, &s2, &s2, NormOptions::with_tol(0.0)).is_err());
        assert!(weighted_trace_norm(&x, &[0.5, 0.5, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn beta_tau_of_identity() {
        // A = B = I is optimal: sqrt(1 + 1) · sqrt(2 + 2).
        let x = Matrix::<f64>::identity(2);
        let p = penalty_beta_tau(&x, 1e-7).unwrap();
        assert_relative_eq!(p.value, 8f64.sqrt(), epsilon = 1e-6);
        assert_relative_eq!(p.alpha, 2f64.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn decomposition_full_mass_when_gamma_is_one() {
        let p = MarginalDist::new(vec![0.5, 0.25, 0.25]).unwrap();
        let u = [0.3, -1.2, 0.7];
        let d = decompose_vector::<f64>(&u, &p, 1.0).unwrap();
        assert_eq!(d.pivot_count, 3);
        assert_relative_eq!(d.t, 1.0, epsilon = 1e-12);
        for (a, b) in d.u_doubleprime.iter().zip(&u) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
        assert!(d.u_prime.iter().all(|x: &f64| x.abs() < 1e-12));
    }

    #[test]
    fn decomposition_uniform_gamma_four() {
        let p = MarginalDist::<f64>::uniform(4);
        let u = [0.1, -0.9, 0.5, 0.2];
        let d = decompose_vector(&u, &p, 4.0).unwrap();
        assert_eq!(d.pivot_count, 1);
        assert_relative_eq!(d.t, 1.0, epsilon = 1e-12);
        assert_eq!(d.u_doubleprime, vec![0.0, -0.9, 0.0, 0.0]);
        assert_eq!(d.u_prime, vec![0.1, 0.0, 0.5, 0.2]);
        assert!(decompose_vector(&u, &p, 0.5).is_err());
    }
}
