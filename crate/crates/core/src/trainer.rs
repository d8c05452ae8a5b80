//! Factorized matrix completion regularized by a local max norm.
//!
//! Minimizes
//!
//! ```text
//! Σ_{(i,j) ∈ S} loss(Y_ij, ⟨A_i, B_j⟩) + λ · ½(sup_R Σ r_i‖A_i‖² + sup_C Σ c_j‖B_j‖²)
//! ```
//!
//! over rank-`k` factors. The penalty is the factorized form of the norm, so
//! at the optimum of the full-rank problem it equals `λ‖X‖_(R,C)`.

use std::cell::OnceCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::SampleSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::sym_eigen;
use crate::matrix::Matrix;
use crate::scalar::{count, dot, lit, Real};
use crate::weights::{WeightDomain, WeightSet};

/// Rank-`k` factors with the hinge offsets of the penalty's dual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub row_offset: T,
    pub col_offset: T,
}

impl<T: Real> FactorModel<T> {
    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.b.rows()
    }

    /// `⟨A_i, B_j⟩`.
    pub fn predict(&self, i: usize, j: usize) -> Result<T> {
        if i >= self.rows() || j >= self.cols() {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        Ok(dot(self.a.row(i), self.b.row(j)))
    }

    /// The full `n x m` prediction `ABᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        self.a
            .matmul_transpose(&self.b)
            .expect("factors share rank")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    Squared,
    Absolute,
}

impl Loss {
    fn value<T: Real>(self, residual: T) -> T {
        match self {
            Loss::Squared => residual * residual,
            Loss::Absolute => residual.abs(),
        }
    }

    /// Derivative with respect to the prediction; `residual = pred − y`.
    fn slope<T: Real>(self, residual: T) -> T {
        match self {
            Loss::Squared => residual + residual,
            Loss::Absolute => {
                if residual > T::zero() {
                    T::one()
                } else if residual < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Mse,
    Rmse,
    Mae,
}

/// Step-size decay across epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decay {
    Constant,
    /// `η_t = η₀ / √t`.
    InvSqrt,
}

#[derive(Debug, Clone)]
pub struct TrainConfig<T> {
    pub rank: usize,
    pub lambda: T,
    pub rows: WeightSet<T>,
    pub cols: WeightSet<T>,
    pub loss: Loss,
    pub epochs: usize,
    /// Initial step of the absolute-loss subgradient method, relative to the
    /// per-row curvature. The squared loss is minimized blockwise exactly.
    pub step0: T,
    pub decay: Decay,
    pub seed: u64,
    /// Return the best-objective iterate instead of the last one.
    pub track_best: bool,
    /// Squared loss only: stop once an epoch lowers the objective by less
    /// than `rel_tol · objective`. Zero runs every epoch.
    pub rel_tol: T,
}

impl<T: Real> TrainConfig<T> {
    /// Squared loss, 500 epochs, `η₀ = 0.5` with inverse-square-root decay.
    pub fn new(rank: usize, lambda: T, rows: WeightSet<T>, cols: WeightSet<T>) -> Self {
        TrainConfig {
            rank,
            lambda,
            rows,
            cols,
            loss: Loss::Squared,
            epochs: 500,
            step0: lit(0.5),
            decay: Decay::InvSqrt,
            seed: 0,
            track_best: true,
            rel_tol: lit(1e-6),
        }
    }

    fn validate(&self, data: &SampleSet<T>) -> Result<()> {
        if self.rank == 0 {
            return Err(invalid("rank", "must be at least 1"));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if !(self.rel_tol >= T::zero()) {
            return Err(invalid("rel_tol", "must be nonnegative"));
        }
        if !(self.step0 > T::zero()) || !self.step0.is_finite() {
            return Err(invalid("step0", "must be positive"));
        }
        if self.rows.dim() != data.n {
            return Err(Error::DimensionMismatch {
                expected: data.n,
                got: self.rows.dim(),
            });
        }
        if self.cols.dim() != data.m {
            return Err(Error::DimensionMismatch {
                expected: data.m,
                got: self.cols.dim(),
            });
        }
        Ok(())
    }
}

/// `½(linmax_R(rowsq A) + linmax_C(rowsq B))`.
pub fn penalty_value<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    rows: &WeightSet<T>,
    cols: &WeightSet<T>,
) -> Result<T> {
    let half = lit::<T>(0.5);
    Ok(half * (rows.linmax(&a.row_sq_norms())?.value + cols.linmax(&b.row_sq_norms())?.value))
}

/// The same penalty through the hinge form
/// `⟨base, v⟩ + scale · (a + Σ caps_i (v_i − a)_+)` at the optimal offsets.
pub fn penalty_value_dual<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    rows: &WeightSet<T>,
    cols: &WeightSet<T>,
) -> Result<T> {
    let side = |set: &WeightSet<T>, v: &[T]| -> Result<T> {
        if set.dim() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: v.len(),
            });
        }
        let base = dot(set.base(), v);
        if set.scale() == T::zero() {
            return Ok(base);
        }
        Ok(base + set.scale() * set.dual_offset(v)?.value)
    };
    let half = lit::<T>(0.5);
    Ok(half * (side(rows, &a.row_sq_norms())? + side(cols, &b.row_sq_norms())?))
}

/// Minimizing offsets `(a, b)` of the hinge form for the current factors.
/// Singleton sides have no hinge and get offset zero.
pub fn optimal_offsets<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    rows: &WeightSet<T>,
    cols: &WeightSet<T>,
) -> Result<(T, T)> {
    let side = |set: &WeightSet<T>, v: &[T]| -> Result<T> {
        if set.scale() == T::zero() {
            if set.dim() != v.len() {
                return Err(Error::DimensionMismatch {
                    expected: set.dim(),
                    got: v.len(),
                });
            }
            return Ok(T::zero());
        }
        Ok(set.dual_offset(v)?.offset)
    };
    Ok((
        side(rows, &a.row_sq_norms())?,
        side(cols, &b.row_sq_norms())?,
    ))
}

/// Penalty subgradient selection `(ρ_i A_i, σ_j B_j)` with `ρ`, `σ` the
/// `linmax` maximizers, i.e. `∂/∂A` and `∂/∂B` of [`penalty_value`] wherever
/// it is differentiable.
pub fn penalty_subgradient<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    rows: &WeightSet<T>,
    cols: &WeightSet<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let rho = rows.linmax(&a.row_sq_norms())?.argmax;
    let sigma = cols.linmax(&b.row_sq_norms())?.argmax;
    let one = vec![T::one(); a.cols()];
    Ok((
        a.scale_rows_cols(&rho, &one),
        b.scale_rows_cols(&sigma, &one),
    ))
}

/// Per-epoch record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats<T> {
    pub epoch: usize,
    pub loss: T,
    pub penalty: T,
    pub objective: T,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: FactorModel<T>,
    /// Entry 0 is the initialization, entry `t` the state after epoch `t`.
    pub history: Vec<EpochStats<T>>,
    pub best_epoch: usize,
}

/// Total loss of the factors on `data`.
pub fn data_loss<T: Real>(a: &Matrix<T>, b: &Matrix<T>, data: &SampleSet<T>, loss: Loss) -> T {
    data.triples
        .iter()
        .map(|&(i, j, y)| loss.value(dot(a.row(i), b.row(j)) - y))
        .sum()
}

/// Fits factors by alternating over the blocks `A` and `B`.
///
/// With `B` fixed the objective in `(A, a)`, `a` the row offset of the hinge
/// form, is jointly convex and separates over rows once `a` is fixed. For the
/// squared loss each row then solves a ridge problem with a kinked penalty
/// in closed form, and `a` is found by bisection on the monotone derivative,
/// so every block update is an exact minimization and the objective never
/// increases. The absolute loss uses preconditioned subgradient steps
/// `η_t · g_i / L_i` instead, with `L_i = 2Σ_{j ∈ S_i}‖B_j‖² + λρ_i`.
///
/// The run is sequential and deterministic for a fixed seed.
pub fn train<T: Real>(data: &SampleSet<T>, config: &TrainConfig<T>) -> Result<TrainOutcome<T>> {
    if data.is_empty() {
        return Err(Error::EmptySamples);
    }
    config.validate(data)?;
    let (n, m, k) = (data.n, data.m, config.rank);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std = 1.0 / (k as f64).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| invalid("rank", e.to_string()))?;
    let mut draw = |rows: usize| {
        Matrix::from_fn(rows, k, |_, _| {
            T::from_f64(normal.sample(&mut rng)).unwrap()
        })
    };
    let mut a = draw(n);
    let mut b = draw(m);

    let mut by_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    let mut by_col: Vec<Vec<(usize, T)>> = vec![Vec::new(); m];
    for &(i, j, y) in &data.triples {
        by_row[i].push((j, y));
        by_col[j].push((i, y));
    }

    let stats = |epoch: usize, a: &Matrix<T>, b: &Matrix<T>| -> Result<EpochStats<T>> {
        let loss = data_loss(a, b, data, config.loss);
        let penalty = penalty_value(a, b, &config.rows, &config.cols)?;
        let objective = loss + config.lambda * penalty;
        if !objective.is_finite() {
            return Err(Error::Diverged {
                epoch,
                objective: objective.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(EpochStats {
            epoch,
            loss,
            penalty,
            objective,
        })
    };

    let mut history = vec![stats(0, &a, &b)?];
    let mut best = (a.clone(), b.clone(), 0usize, history[0].objective);
    for epoch in 1..=config.epochs {
        let eta = match config.decay {
            Decay::Constant => config.step0,
            Decay::InvSqrt => config.step0 / count::<T>(epoch).sqrt(),
        };
        match config.loss {
            Loss::Squared => {
                exact_block(&mut a, &b, &by_row, &config.rows, config.lambda)?;
                exact_block(&mut b, &a, &by_col, &config.cols, config.lambda)?;
            }
            Loss::Absolute => {
                let rho = config.rows.linmax(&a.row_sq_norms())?.argmax;
                block_step(&mut a, &b, &by_row, &rho, config, eta);
                let sigma = config.cols.linmax(&b.row_sq_norms())?.argmax;
                block_step(&mut b, &a, &by_col, &sigma, config, eta);
            }
        }

        let s = stats(epoch, &a, &b)?;
        let prev = history[history.len() - 1].objective;
        if s.objective < best.3 {
            best = (a.clone(), b.clone(), epoch, s.objective);
        }
        history.push(s);
        if config.loss == Loss::Squared && prev - s.objective <= config.rel_tol * s.objective {
            break;
        }
    }

    let (a, b, best_epoch) = if config.track_best {
        (best.0, best.1, best.2)
    } else {
        (a, b, history.len() - 1)
    };
    let (row_offset, col_offset) = optimal_offsets(&a, &b, &config.rows, &config.cols)?;
    Ok(TrainOutcome {
        model: FactorModel {
            a,
            b,
            row_offset,
            col_offset,
        },
        history,
        best_epoch,
    })
}

/// One row's squared-loss problem `‖Mx − y‖² + μ_lo‖x‖² + span·(‖x‖² − a)_+`.
///
/// The two ridge endpoints `μ_lo` and `μ_lo + span` are solved by Cholesky up
/// front. The eigenbasis of `MᵀM` is only built for rows whose solution lands
/// on the sphere `‖x‖² = a` in between.
struct RowProblem<T> {
    /// Rows of the fixed factor at the observed entries.
    design: Matrix<T>,
    y: Vec<T>,
    gram: Matrix<T>,
    rhs: Vec<T>,
    mu_lo: T,
    span: T,
    lo: Vec<T>,
    hi: Vec<T>,
    norm_lo: T,
    norm_hi: T,
    eigen: OnceCell<Eigenbasis<T>>,
}

/// Eigenpairs of `MᵀM` spanning the row space of `M`, which is all the
/// ridge solutions ever use.
struct Eigenbasis<T> {
    values: Vec<T>,
    /// `k x r`, one eigenvector per column.
    vectors: Matrix<T>,
    /// `Vᵀ Mᵀ y`.
    z: Vec<T>,
}

impl<T: Real> Eigenbasis<T> {
    fn new(problem: &RowProblem<T>) -> Self {
        let (d, k) = (problem.design.rows(), problem.design.cols());
        if d >= k {
            let eig = sym_eigen(&problem.gram).expect("gram matrix is finite");
            let rhs = &problem.rhs;
            let z = (0..k)
                .map(|l| (0..k).map(|p| eig.vectors[(p, l)] * rhs[p]).sum())
                .collect();
            return Eigenbasis {
                values: eig.values,
                vectors: eig.vectors,
                z,
            };
        }
        // Fewer observations than factors: diagonalize M Mᵀ instead and map
        // its eigenvectors w to v = Mᵀw / √λ.
        let m = &problem.design;
        let kernel = m.matmul_transpose(m).expect("design shape");
        let eig = sym_eigen(&kernel).expect("kernel matrix is finite");
        let top = eig
            .values
            .last()
            .copied()
            .unwrap_or(T::zero())
            .max(T::zero());
        let cut = T::epsilon() * lit(64.0) * (top + T::one());
        let mut vectors = Matrix::zeros(k, d);
        let mut z = vec![T::zero(); d];
        for l in 0..d {
            let lam = eig.values[l];
            if !(lam > cut) {
                continue;
            }
            let root = lam.sqrt();
            for p in 0..k {
                vectors[(p, l)] = (0..d).map(|t| m[(t, p)] * eig.vectors[(t, l)]).sum::<T>() / root;
            }
            z[l] = root
                * (0..d)
                    .map(|t| eig.vectors[(t, l)] * problem.y[t])
                    .sum::<T>();
        }
        Eigenbasis {
            values: eig.values,
            vectors,
            z,
        }
    }

    /// Coordinates of the ridge solution with penalty `μ`; directions with
    /// no curvature and no penalty get zero (minimum-norm solution).
    fn coords(&self, mu: T) -> Vec<T> {
        let tiny = self.tiny();
        self.values
            .iter()
            .zip(&self.z)
            .map(|(&l, &z)| {
                let d = l.max(T::zero()) + mu;
                if d <= tiny {
                    T::zero()
                } else {
                    z / d
                }
            })
            .collect()
    }

    fn tiny(&self) -> T {
        let top = self
            .values
            .last()
            .copied()
            .unwrap_or(T::zero())
            .max(T::zero());
        T::epsilon() * lit(64.0) * (top + T::one())
    }

    /// `(‖x(μ)‖², d‖x(μ)‖²/dμ)`.
    fn norm_sq_slope(&self, mu: T) -> (T, T) {
        let tiny = self.tiny();
        let mut value = T::zero();
        let mut slope = T::zero();
        for (&l, &z) in self.values.iter().zip(&self.z) {
            let d = l.max(T::zero()) + mu;
            if d > tiny {
                let w = z / d;
                value += w * w;
                slope -= lit::<T>(2.0) * w * w / d;
            }
        }
        (value, slope)
    }

    fn solution(&self, mu: T) -> Vec<T> {
        let w = self.coords(mu);
        (0..self.vectors.rows())
            .map(|p| (0..w.len()).map(|l| self.vectors[(p, l)] * w[l]).sum())
            .collect()
    }
}

impl<T: Real> RowProblem<T> {
    fn new(other: &Matrix<T>, obs: &[(usize, T)], mu_lo: T, span: T) -> Result<Self> {
        let k = other.cols();
        let design = Matrix::from_fn(obs.len(), k, |t, p| other[(obs[t].0, p)]);
        let y: Vec<T> = obs.iter().map(|o| o.1).collect();
        let mut gram = Matrix::zeros(k, k);
        let mut rhs = vec![T::zero(); k];
        for (t, &yt) in y.iter().enumerate() {
            let o = design.row(t);
            for p in 0..k {
                rhs[p] += o[p] * yt;
                for q in 0..=p {
                    gram[(p, q)] += o[p] * o[q];
                }
            }
        }
        for p in 0..k {
            for q in 0..p {
                gram[(q, p)] = gram[(p, q)];
            }
        }
        if !gram.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("normal equations".into()));
        }
        let mut problem = RowProblem {
            design,
            y,
            gram,
            rhs,
            mu_lo,
            span,
            lo: Vec::new(),
            hi: Vec::new(),
            norm_lo: T::zero(),
            norm_hi: T::zero(),
            eigen: OnceCell::new(),
        };
        let solve = |p: &RowProblem<T>, mu: T| match ridge_cholesky(&p.gram, &p.rhs, mu) {
            Some(x) => x,
            None => p.eigen().solution(mu),
        };
        let lo = solve(&problem, mu_lo);
        let hi = if span > T::zero() {
            solve(&problem, mu_lo + span)
        } else {
            lo.clone()
        };
        problem.norm_lo = dot(&lo, &lo);
        problem.norm_hi = dot(&hi, &hi);
        problem.lo = lo;
        problem.hi = hi;
        Ok(problem)
    }

    fn eigen(&self) -> &Eigenbasis<T> {
        self.eigen.get_or_init(|| Eigenbasis::new(self))
    }

    /// Ridge penalty of the minimizer for offset `a`: `μ_lo` when the kink is
    /// inactive, `μ_lo + span` when the row stays outside the ball, otherwise
    /// the `μ` with `‖x(μ)‖² = a`, found by safeguarded Newton steps on
    /// `1/‖x(μ)‖`, which is nearly linear in `μ`.
    fn solve(&self, a: T) -> T {
        let hi = self.mu_lo + self.span;
        if self.span == T::zero() || self.norm_lo <= a {
            return self.mu_lo;
        }
        if self.norm_hi >= a {
            return hi;
        }
        let eig = self.eigen();
        let (mut lo, mut up) = (self.mu_lo, hi);
        let target = T::one() / a.sqrt();
        let mut mu = lo;
        for _ in 0..100 {
            let (v, dv) = eig.norm_sq_slope(mu);
            if (v - a).abs() <= lit::<T>(1e-13) * a {
                return mu;
            }
            if v > a {
                lo = mu;
            } else {
                up = mu;
            }
            let psi = v.sqrt();
            // g(μ) = 1/ψ − 1/√a, g' = −ψ'/ψ² with ψ' = dv / (2ψ).
            let g = T::one() / psi - target;
            let dg = -dv / (lit::<T>(2.0) * psi * v);
            let mut next = mu - g / dg;
            if !(next > lo && next < up) {
                next = lit::<T>(0.5) * (lo + up);
            }
            if next == mu || up - lo <= T::epsilon() * up {
                return next;
            }
            mu = next;
        }
        mu
    }

    fn row(&self, mu: T) -> Vec<T> {
        if mu == self.mu_lo {
            self.lo.clone()
        } else if mu == self.mu_lo + self.span {
            self.hi.clone()
        } else {
            self.eigen().solution(mu)
        }
    }
}

/// Solves `(G + μI) x = b` by Cholesky; `None` when the system is not
/// numerically positive definite.
fn ridge_cholesky<T: Real>(gram: &Matrix<T>, rhs: &[T], mu: T) -> Option<Vec<T>> {
    let k = rhs.len();
    let scale = (0..k).map(|p| gram[(p, p)]).fold(T::zero(), T::max) + mu;
    let tiny = T::epsilon() * lit(1e4) * scale;
    let mut l = Matrix::<T>::zeros(k, k);
    for p in 0..k {
        for q in 0..=p {
            let mut v = gram[(p, q)] + if p == q { mu } else { T::zero() };
            for r in 0..q {
                v -= l[(p, r)] * l[(q, r)];
            }
            if p == q {
                if !(v > tiny) {
                    return None;
                }
                l[(p, p)] = v.sqrt();
            } else {
                l[(p, q)] = v / l[(q, q)];
            }
        }
    }
    let mut y = rhs.to_vec();
    for p in 0..k {
        for r in 0..p {
            y[p] = y[p] - l[(p, r)] * y[r];
        }
        y[p] /= l[(p, p)];
    }
    for p in (0..k).rev() {
        for r in p + 1..k {
            y[p] = y[p] - l[(r, p)] * y[r];
        }
        y[p] /= l[(p, p)];
    }
    Some(y)
}

/// Exact minimization of the squared-loss objective over the rows of `x`
/// with `other` fixed.
fn exact_block<T: Real>(
    x: &mut Matrix<T>,
    other: &Matrix<T>,
    observed: &[Vec<(usize, T)>],
    set: &WeightSet<T>,
    lambda: T,
) -> Result<()> {
    let half_lambda = lit::<T>(0.5) * lambda;
    let problems = observed
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            RowProblem::new(
                other,
                obs,
                half_lambda * set.base()[i],
                half_lambda * set.scale() * set.caps()[i],
            )
        })
        .collect::<Result<Vec<_>>>()?;

    // Φ'(a) = λ·scale/2 − Σ_i (μ_i(a) − μ_lo,i), nondecreasing in a.
    let target = half_lambda * set.scale();
    let slope = |a: T| -> T {
        let pull: T = problems.iter().map(|p| p.solve(a) - p.mu_lo).sum();
        target - pull
    };
    let offset = if target == T::zero() {
        T::zero()
    } else {
        let s0 = slope(T::zero());
        if s0 >= T::zero() {
            T::zero()
        } else {
            let top = problems.iter().map(|p| p.norm_lo).fold(T::zero(), T::max);
            root_increasing(&slope, T::zero(), s0, top, target, target * lit(1e-12))
        }
    };
    for (i, p) in problems.iter().enumerate() {
        let row = p.row(p.solve(offset));
        x.row_mut(i).copy_from_slice(&row);
    }
    Ok(())
}

/// Root of a continuous nondecreasing `f` on `[lo, hi]` with `f(lo) < 0 <
/// f(hi)`, by the Illinois variant of regula falsi.
fn root_increasing<T: Real>(
    f: &impl Fn(T) -> T,
    mut lo: T,
    mut flo: T,
    mut hi: T,
    mut fhi: T,
    tol: T,
) -> T {
    let mut side = 0i8;
    for _ in 0..200 {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = lit::<T>(0.5) * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= tol || hi - lo <= T::epsilon() * hi {
            return x;
        }
        if fx < T::zero() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= lit(0.5);
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= lit(0.5);
            }
            side = 1;
        }
    }
    lit::<T>(0.5) * (lo + hi)
}

/// Updates every row of `x` against the fixed factor `other`.
fn block_step<T: Real>(
    x: &mut Matrix<T>,
    other: &Matrix<T>,
    observed: &[Vec<(usize, T)>],
    weight: &[T],
    config: &TrainConfig<T>,
    eta: T,
) {
    let k = x.cols();
    let mut grad = vec![T::zero(); k];
    for (i, obs) in observed.iter().enumerate() {
        let reg = config.lambda * weight[i];
        let row = x.row(i).to_vec();
        grad.iter_mut().zip(&row).for_each(|(g, &v)| *g = reg * v);
        let mut curvature = reg;
        for &(j, y) in obs {
            let o = other.row(j);
            let slope = config.loss.slope(dot(&row, o) - y);
            grad.iter_mut().zip(o).for_each(|(g, &v)| *g += slope * v);
            curvature += lit::<T>(2.0) * dot(o, o);
        }
        if !(curvature > T::zero()) {
            continue;
        }
        let scale = eta / curvature;
        x.row_mut(i)
            .iter_mut()
            .zip(&grad)
            .for_each(|(v, &g)| *v -= scale * g);
    }
}

/// Averages a metric over `samples`.
pub fn evaluate<T: Real>(
    model: &FactorModel<T>,
    samples: &SampleSet<T>,
    metric: Metric,
) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut total = T::zero();
    for &(i, j, y) in &samples.triples {
        let r = model.predict(i, j)? - y;
        total += match metric {
            Metric::Mae => r.abs(),
            Metric::Mse | Metric::Rmse => r * r,
        };
    }
    let mean = total / count::<T>(samples.len());
    Ok(match metric {
        Metric::Rmse => mean.sqrt(),
        _ => mean,
    })
}
