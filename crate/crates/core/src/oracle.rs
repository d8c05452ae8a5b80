//! Brute-force references and structural witnesses.
//!
//! Nothing here shares maximization code with [`crate::weights`] or
//! [`crate::normcore`]: linear maximization is done by lattice enumeration,
//! norms by exhaustive search over weight pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{pivoted_cholesky, sym_eigen, trace_norm};
use crate::matrix::Matrix;
use crate::normcore::{local_max_norm, weighted_trace_norm, NormOptions};
use crate::scalar::{dot, lit, Real};
use crate::weights::{WeightDomain, WeightSet};

/// Grothendieck's constant, as the upper bound `K_G ≤ 1.79`.
pub const GROTHENDIECK_BOUND: f64 = 1.79;

/// Lattice used for exhaustive enumeration of a capped simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Lattice spacing; the simplex is cut into `round(1/step)` parts.
    pub step: f64,
    pub max_dim: usize,
    /// Largest number of lattice points enumerated.
    pub guard: f64,
}

impl GridSpec {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.5) {
            return Err(invalid("step", "must lie in (0, 0.5]"));
        }
        Ok(GridSpec {
            step,
            max_dim: 4,
            guard: 1e7,
        })
    }

    fn parts(&self) -> usize {
        (1.0 / self.step).round() as usize
    }

    /// `C(K + n − 1, n − 1)` lattice points of the simplex.
    fn size(&self, n: usize) -> f64 {
        let k = self.parts() as f64;
        (1..n).fold(1.0, |acc, i| acc * (k + i as f64) / i as f64)
    }
}

/// Members of `set` whose capped-simplex part lies on the lattice.
///
/// Singletons yield their single member regardless of the lattice.
pub fn lattice_members<T: Real>(set: &WeightSet<T>, grid: &GridSpec) -> Result<Vec<Vec<T>>> {
    let n = set.dim();
    if set.scale() == T::zero() {
        return Ok(vec![set.base().to_vec()]);
    }
    if n > grid.max_dim {
        return Err(invalid(
            "grid",
            format!("dimension {n} exceeds cap {}", grid.max_dim),
        ));
    }
    let points = grid.size(n);
    if points > grid.guard {
        return Err(Error::GridTooLarge {
            points,
            guard: grid.guard,
        });
    }
    let parts = grid.parts();
    let slack = 1e-9;
    let mut out = Vec::new();
    let mut s = vec![0usize; n];
    compositions(parts, 0, &mut s, &mut |s| {
        let frac: Vec<f64> = s.iter().map(|&x| x as f64 / parts as f64).collect();
        let fits = frac
            .iter()
            .zip(set.caps())
            .all(|(&f, &c)| f <= c.to_f64().unwrap() + slack);
        if fits {
            out.push(
                frac.iter()
                    .zip(set.base())
                    .map(|(&f, &b)| b + set.scale() * T::from_f64(f).unwrap())
                    .collect(),
            );
        }
    });
    if out.is_empty() {
        return Err(Error::EmptySet(
            "no lattice point satisfies the caps".into(),
        ));
    }
    Ok(out)
}

fn compositions(left: usize, at: usize, s: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if at + 1 == s.len() {
        s[at] = left;
        visit(s);
        return;
    }
    for x in 0..=left {
        s[at] = x;
        compositions(left - x, at + 1, s, visit);
    }
}

/// `max ⟨r, v⟩` over the lattice members of `set`.
pub fn brute_linmax<T: Real>(set: &WeightSet<T>, v: &[T], grid: &GridSpec) -> Result<T> {
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: v.len(),
        });
    }
    Ok(lattice_members(set, grid)?
        .iter()
        .map(|r| dot(r, v))
        .fold(T::neg_infinity(), T::max))
}

/// Largest weighted trace norm over the product lattice, with a bound on
/// how far below the true supremum it can be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteNorm<T> {
    pub value: T,
    /// `(√(scale_R·step) + √(scale_C·step))·‖X‖_tr`: moving each weight by at
    /// most `δ` changes its square root by at most `√δ`.
    pub tolerance: T,
    pub points: usize,
}

pub fn brute_local_max_norm<T: Real>(
    x: &Matrix<T>,
    rows: &WeightSet<T>,
    cols: &WeightSet<T>,
    grid: &GridSpec,
) -> Result<BruteNorm<T>> {
    if rows.dim() != x.rows() || cols.dim() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.rows() * x.cols(),
            got: rows.dim() * cols.dim(),
        });
    }
    let rm = lattice_members(rows, grid)?;
    let cm = lattice_members(cols, grid)?;
    let total = rm.len() as f64 * cm.len() as f64;
    if total > grid.guard {
        return Err(Error::GridTooLarge {
            points: total,
            guard: grid.guard,
        });
    }
    let mut value = T::neg_infinity();
    for r in &rm {
        for c in &cm {
            value = value.max(weighted_trace_norm(x, r, c)?);
        }
    }
    let step = lit::<T>(grid.step);
    let tolerance = ((rows.scale() * step).sqrt() + (cols.scale() * step).sqrt()) * trace_norm(x)?;
    Ok(BruteNorm {
        value,
        tolerance,
        points: rm.len() * cm.len(),
    })
}

/// Block Gram matrix `[[AAᵀ, ABᵀ], [BAᵀ, BBᵀ]]` and its smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct PsdWitness<T> {
    pub block: Matrix<T>,
    pub min_eigenvalue: T,
}

pub fn psd_witness<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<PsdWitness<T>> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: b.cols(),
        });
    }
    let (n, m, k) = (a.rows(), b.rows(), a.cols());
    let stacked = Matrix::from_fn(
        n + m,
        k,
        |i, l| if i < n { a[(i, l)] } else { b[(i - n, l)] },
    );
    let block = stacked.matmul_transpose(&stacked)?;
    let min_eigenvalue = sym_eigen(&block)?
        .values
        .first()
        .copied()
        .unwrap_or(T::zero());
    Ok(PsdWitness {
        block,
        min_eigenvalue,
    })
}

/// Reverse direction: factors `(A, B)` of a PSD block matrix whose first `n`
/// rows belong to `A`, so that `ABᵀ` is the off-diagonal block and the
/// diagonal holds the squared row norms.
pub fn psd_factor<T: Real>(block: &Matrix<T>, n: usize) -> Result<(Matrix<T>, Matrix<T>)> {
    let size = block.rows();
    if n > size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: n,
        });
    }
    let f = pivoted_cholesky(block)?;
    let k = f.cols().max(1);
    let pick = |from: usize, to: usize| {
        Matrix::from_fn(to - from, k, |i, l| {
            if l < f.cols() {
                f[(from + i, l)]
            } else {
                T::zero()
            }
        })
    };
    Ok((pick(0, n), pick(n, size)))
}

/// Outcome of [`hull_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullReport<T> {
    pub trials: usize,
    /// Largest certified upper bound on `‖uvᵀ‖_(R,C)` seen.
    pub max_norm: T,
    pub violations: usize,
    pub unconverged: usize,
}

/// Draws Gaussian `u`, `v`, rescales them to unit vector norm under `R` and
/// `C`, and checks that `‖uvᵀ‖_(R,C) ≤ 1 + tol` using the certified upper
/// bound `value + gap`.
pub fn hull_check<T, R, C>(
    rows: &R,
    cols: &C,
    trials: usize,
    seed: u64,
    tol: T,
) -> Result<HullReport<T>>
where
    T: Real,
    R: WeightDomain<T> + ?Sized,
    C: WeightDomain<T> + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |len: usize| -> Vec<T> {
        (0..len)
            .map(|_| T::from_f64(StandardNormal.sample(&mut rng)).unwrap())
            .collect()
    };
    let opts = NormOptions::with_tol(tol * lit(0.1));
    let mut report = HullReport {
        trials,
        max_norm: T::zero(),
        violations: 0,
        unconverged: 0,
    };
    for _ in 0..trials {
        let mut u = gauss(rows.dim());
        let mut v = gauss(cols.dim());
        let nu = rows.vec_norm(&u)?;
        let nv = cols.vec_norm(&v)?;
        u.iter_mut().for_each(|x| *x /= nu);
        v.iter_mut().for_each(|x| *x /= nv);
        let cert = local_max_norm(&Matrix::outer(&u, &v), rows, cols, opts)?;
        let upper = cert.upper_bound();
        report.max_norm = report.max_norm.max(upper);
        if upper > T::one() + tol {
            report.violations += 1;
        }
        if !cert.converged {
            report.unconverged += 1;
        }
    }
    Ok(report)
}

/// Both sides of Grothendieck's inequality for a `2 x 2` matrix `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrothendieckCheck<T> {
    /// `sup Σ Y_ij ⟨x_i, y_j⟩` over unit vectors, the max-norm dual of `Y`.
    pub vector_sup: T,
    /// `sup Σ Y_ij s_i t_j` over `|s_i|, |t_j| ≤ 1`, estimated by multi-start
    /// alternating maximization.
    pub scalar_sup: T,
}

impl<T: Real> GrothendieckCheck<T> {
    /// `vector_sup ≤ K_G · scalar_sup + tol`.
    pub fn holds(&self, tol: T) -> bool {
        self.vector_sup <= lit::<T>(GROTHENDIECK_BOUND) * self.scalar_sup + tol
    }
}

/// For `2 x 2` inputs the optimal unit vectors span a plane, so the vector
/// supremum is a one-dimensional search over the angle `θ` between `x_1` and
/// `x_2`: `Σ_j ‖Y_1j x_1 + Y_2j x_2‖`. It is scanned densely and refined.
pub fn grothendieck_2x2<T: Real>(
    y: &Matrix<T>,
    starts: usize,
    seed: u64,
) -> Result<GrothendieckCheck<T>> {
    if y.rows() != 2 || y.cols() != 2 {
        return Err(invalid("y", "must be 2 x 2"));
    }
    let yf: Vec<f64> = y.as_slice().iter().map(|v| v.to_f64().unwrap()).collect();
    let at = |theta: f64| -> f64 {
        (0..2)
            .map(|j| {
                let (p, q) = (yf[j], yf[2 + j]);
                (p * p + q * q + 2.0 * p * q * theta.cos()).max(0.0).sqrt()
            })
            .sum()
    };
    let steps = 20_000;
    let mut best = (0.0, at(0.0));
    for s in 1..=steps {
        let theta = std::f64::consts::PI * s as f64 / steps as f64;
        let v = at(theta);
        if v > best.1 {
            best = (theta, v);
        }
    }
    let h = std::f64::consts::PI / steps as f64;
    let (mut lo, mut hi) = (
        (best.0 - h).max(0.0),
        (best.0 + h).min(std::f64::consts::PI),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if at(a) < at(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let vector_sup = best.1.max(at(0.5 * (lo + hi)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scalar_sup = f64::NEG_INFINITY;
    for _ in 0..starts.max(1) {
        let mut s: [f64; 2] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let mut t = [0.0; 2];
        for _ in 0..20 {
            for j in 0..2 {
                t[j] = (yf[j] * s[0] + yf[2 + j] * s[1]).signum();
            }
            for i in 0..2 {
                s[i] = (yf[2 * i] * t[0] + yf[2 * i + 1] * t[1]).signum();
            }
        }
        let val: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| yf[2 * i + j] * s[i] * t[j])
            .sum();
        scalar_sup = scalar_sup.max(val);
    }
    Ok(GrothendieckCheck {
        vector_sup: T::from_f64(vector_sup).unwrap(),
        scalar_sup: T::from_f64(scalar_sup).unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::MarginalDist;
    use approx::assert_relative_eq;

    fn capped(caps: &[f64]) -> WeightSet<f64> {
        WeightSet::new(vec![0.0; caps.len()], 1.0, caps.to_vec()).unwrap()
    }

    #[test]
    fn brute_linmax_examples() {
        let g = GridSpec::new(0.01).unwrap();
        assert_relative_eq!(
            brute_linmax(&capped(&[0.6; 3]), &[3.0, 2.0, 1.0], &g).unwrap(),
            2.6,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            brute_linmax(&capped(&[0.5; 2]), &[4.0, 2.0], &g).unwrap(),
            3.0,
            epsilon = 1e-12
        );
        let cap = WeightSet::uniform_cap(4, 0.5).unwrap();
        assert_relative_eq!(
            brute_linmax(&cap, &[4.0, 1.0, 0.0, 0.0], &g).unwrap(),
            2.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn singleton_is_exact_at_any_step() {
        let p = MarginalDist::new(vec![0.3, 0.7]).unwrap();
        let s = WeightSet::singleton(&p);
        let g = GridSpec::new(0.5).unwrap();
        assert_eq!(brute_linmax(&s, &[1.0, 2.0], &g).unwrap(), 0.3 + 1.4);
    }

    #[test]
    fn coarse_simplex_enumeration() {
        let g = GridSpec::new(0.25).unwrap();
        let pts = lattice_members(&WeightSet::<f64>::full_simplex(2), &g).unwrap();
        assert_eq!(pts.len(), 5);
    }

    #[test]
    fn guard_and_bad_step() {
        assert!(GridSpec::new(0.0).is_err());
        assert!(GridSpec::new(0.7).is_err());
        let mut g = GridSpec::new(0.01).unwrap();
        g.guard = 10.0;
        assert!(matches!(
            lattice_members(&WeightSet::<f64>::full_simplex(3), &g),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn brute_norm_of_identity() {
        let g = GridSpec::new(0.01).unwrap();
        let s = WeightSet::full_simplex(2);
        let b = brute_local_max_norm(&Matrix::<f64>::identity(2), &s, &s, &g).unwrap();
        assert!((b.value - 1.0).abs() <= 0.01);
    }

    #[test]
    fn refinement_is_monotone() {
        let x = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 1.5]]).unwrap();
        let s = WeightSet::full_simplex(2);
        let coarse = brute_local_max_norm(&x, &s, &s, &GridSpec::new(0.05).unwrap()).unwrap();
        let fine = brute_local_max_norm(&x, &s, &s, &GridSpec::new(0.01).unwrap()).unwrap();
        assert!(coarse.value <= fine.value + 1e-12);
    }

    #[test]
    fn psd_reverse_of_ones() {
        let block = Matrix::<f64>::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (a, b) = psd_factor(&block, 1).unwrap();
        assert_relative_eq!(
            a.matmul_transpose(&b).unwrap()[(0, 0)],
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(a[(0, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_rejects_indefinite() {
        let block = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(psd_factor(&block, 1), Err(Error::NotPsd(_))));
    }

    #[test]
    fn singleton_hull_is_tight() {
        let p = MarginalDist::<f64>::new(vec![0.2, 0.3, 0.5]).unwrap();
        let s = WeightSet::singleton(&p);
        let r = hull_check(&s, &s, 10, 1, 1e-8).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.max_norm - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn grothendieck_on_hadamard() {
        let y = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let g = grothendieck_2x2(&y, 8, 3).unwrap();
        assert_relative_eq!(g.scalar_sup, 2.0, epsilon = 1e-12);
        assert_relative_eq!(g.vector_sup, 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert!(g.holds(1e-9));
    }
}
