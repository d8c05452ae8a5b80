//! Row and column weight sets.
//!
//! Every set used by the local max norms lives inside the probability simplex.
//! All of the families here except the smoothing segment share one canonical
//! form,
//!
//! ```text
//! { base + scale · s : s ∈ Δ_n, s_i ≤ caps_i }
//! ```
//!
//! with `sum(base) + scale = 1`. Singletons have `scale = 0`; the capped
//! families (uniform cap, multiplicative, exponent) have `base = 0`; the
//! lower-bounded family shifts the full simplex by a constant floor.
//!
//! Linear maximization over a capped simplex is solved exactly by a greedy
//! fill in decreasing order of the objective. Its LP dual, minimizing
//! `a + Σ caps_i (v_i − a)_+` over a scalar `a`, is solved in closed form by
//! [`dual_offset`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, count, dot, Real};

/// A probability vector over rows or columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDist<T> {
    weights: Vec<T>,
}

impl<T: Real> MarginalDist<T> {
    /// Validates nonnegativity and unit sum (within [`Real::validation_tol`]).
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMarginals("empty".into()));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| !w.is_finite() || *w < T::zero())
        {
            return Err(Error::InvalidMarginals(format!(
                "entry {i} is {:?}",
                weights[i]
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - T::one()).abs() > T::validation_tol() {
            return Err(Error::InvalidMarginals(format!(
                "sum is {total:?}, expected 1"
            )));
        }
        Ok(MarginalDist { weights })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform marginals need n >= 1");
        MarginalDist {
            weights: vec![T::one() / count::<T>(n); n],
        }
    }

    /// Normalizes nonnegative counts.
    pub fn from_counts(counts: &[T]) -> Result<Self> {
        let total = compensated_sum(counts.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::EmptySamples);
        }
        MarginalDist::new(counts.iter().map(|&c| c / total).collect())
    }

    /// `(1 − ζ)·p + ζ/n`.
    pub fn smoothed(&self, zeta: T) -> Result<Self> {
        check_unit_interval("zeta", zeta)?;
        let uni = T::one() / count::<T>(self.len());
        Ok(MarginalDist {
            weights: self
                .weights
                .iter()
                .map(|&p| (T::one() - zeta) * p + zeta * uni)
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<T> {
        self.weights
    }
}

/// Result of a linear maximization over a weight set.
#[derive(Debug, Clone, PartialEq)]
pub struct LinMax<T> {
    /// `sup_{r ∈ set} ⟨r, v⟩`, computed as `⟨argmax, v⟩`.
    pub value: T,
    pub argmax: Vec<T>,
}

/// Minimizer of `a + Σ caps_i (v_i − a)_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOffset<T> {
    /// Smallest minimizing offset.
    pub offset: T,
    pub value: T,
}

/// Convex subset of the simplex supporting exact linear maximization.
pub trait WeightDomain<T: Real> {
    fn dim(&self) -> usize;

    /// `sup_{r ∈ set} ⟨r, v⟩` together with a maximizer.
    fn linmax(&self, v: &[T]) -> Result<LinMax<T>>;

    /// A deterministic member with every coordinate that can be positive
    /// strictly positive.
    fn center(&self) -> Vec<T>;

    fn contains(&self, r: &[T], tol: T) -> bool;

    /// `sqrt(sup_{r ∈ set} Σ r_i u_i²)`.
    fn vec_norm(&self, u: &[T]) -> Result<T> {
        let sq: Vec<T> = u.iter().map(|&x| x * x).collect();
        Ok(self.linmax(&sq)?.value.max(T::zero()).sqrt())
    }
}

/// Weight set in canonical `base + scale · (capped simplex)` form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet<T> {
    base: Vec<T>,
    scale: T,
    caps: Vec<T>,
}

impl<T: Real> WeightSet<T> {
    /// Validates the canonical form. Coordinates that are zero in every
    /// member are allowed here; see [`WeightSet::check_nontrivial`].
    ///
    /// Caps summing to exactly 1 (within tolerance) admit a single point;
    /// such sets are stored as singletons.
    pub fn new(base: Vec<T>, scale: T, caps: Vec<T>) -> Result<Self> {
        let n = base.len();
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if caps.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: caps.len(),
            });
        }
        let tol = T::validation_tol();
        if base.iter().any(|b| !b.is_finite() || *b < T::zero()) {
            return Err(invalid("base", "entries must be finite and nonnegative"));
        }
        if !scale.is_finite() || scale < T::zero() {
            return Err(invalid("scale", "must be finite and nonnegative"));
        }
        if caps
            .iter()
            .any(|c| !c.is_finite() || *c < T::zero() || *c > T::one() + tol)
        {
            return Err(invalid("caps", "entries must lie in [0, 1]"));
        }
        let mass = compensated_sum(base.iter().copied()) + scale;
        if (mass - T::one()).abs() > tol {
            return Err(invalid(
                "base",
                format!("sum(base) + scale = {mass:?}, expected 1"),
            ));
        }
        if scale > T::zero() {
            let cap_mass = compensated_sum(caps.iter().copied());
            if cap_mass < T::one() - tol {
                return Err(Error::EmptySet(format!("caps sum to {cap_mass:?} < 1")));
            }
            if cap_mass <= T::one() + tol {
                let base = base
                    .iter()
                    .zip(&caps)
                    .map(|(&b, &c)| b + scale * c / cap_mass)
                    .collect();
                return Ok(WeightSet {
                    base,
                    scale: T::zero(),
                    caps: vec![T::one(); n],
                });
            }
        }
        let caps = caps.into_iter().map(|c| c.min(T::one())).collect();
        Ok(WeightSet { base, scale, caps })
    }

    /// The single point `{r}`.
    pub fn singleton(r: &MarginalDist<T>) -> Self {
        let n = r.len();
        WeightSet {
            base: r.weights().to_vec(),
            scale: T::zero(),
            caps: vec![T::one(); n],
        }
    }

    /// Singleton of the smoothed marginals `(1 − ζ)·p + ζ/n`.
    pub fn smoothed(p: &MarginalDist<T>, zeta: T) -> Result<Self> {
        Ok(Self::singleton(&p.smoothed(zeta)?))
    }

    /// The whole simplex (max norm).
    pub fn full_simplex(n: usize) -> Self {
        assert!(n > 0, "simplex dimension must be at least 1");
        WeightSet {
            base: vec![T::zero(); n],
            scale: T::one(),
            caps: vec![T::one(); n],
        }
    }

    /// `{r ∈ Δ_n : r_i ≤ ε}` for `ε ∈ [1/n, 1]`.
    pub fn uniform_cap(n: usize, eps: T) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        let lower = T::one() / count::<T>(n);
        let tol = T::validation_tol();
        if !eps.is_finite() || eps < lower - tol {
            return Err(Error::EmptySet(format!("cap {eps:?} below 1/n")));
        }
        if eps > T::one() + tol {
            return Err(invalid("eps", "must not exceed 1"));
        }
        Self::new(
            vec![T::zero(); n],
            T::one(),
            vec![eps.min(T::one()).max(lower); n],
        )
    }

    /// `{r ∈ Δ_n : r_i ≤ γ·p̃_i}` with `p̃` the ζ-smoothed marginals.
    /// `γ = ∞` gives the full simplex.
    pub fn capped_multiplicative(p: &MarginalDist<T>, zeta: T, gamma: T) -> Result<Self> {
        if gamma.is_nan() || gamma <= T::zero() {
            return Err(invalid("gamma", "must be positive"));
        }
        let smooth = p.smoothed(zeta)?;
        let caps = smooth
            .weights()
            .iter()
            .map(|&w| {
                if gamma.is_infinite() {
                    T::one()
                } else {
                    (gamma * w).min(T::one())
                }
            })
            .collect();
        Self::new(vec![T::zero(); p.len()], T::one(), caps)
    }

    /// `{r ∈ Δ_n : r_i ≤ p̃_i^{1−τ}}` with `p̃` the ζ-smoothed marginals.
    pub fn capped_exponent(p: &MarginalDist<T>, zeta: T, tau: T) -> Result<Self> {
        check_unit_interval("tau", tau)?;
        let smooth = p.smoothed(zeta)?;
        let power = T::one() - tau;
        let caps = smooth
            .weights()
            .iter()
            .map(|&w| w.powf(power).min(T::one()).max(T::zero()))
            .collect();
        Self::new(vec![T::zero(); p.len()], T::one(), caps)
    }

    /// `{r ∈ Δ_n : r_i ≥ t / (1 + (n − 1)t)}`.
    pub fn lower_bounded(n: usize, t: T) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        check_unit_interval("t", t)?;
        let denom = T::one() + count::<T>(n - 1) * t;
        let floor = t / denom;
        let scale = (T::one() - t) / denom;
        Self::new(vec![floor; n], scale, vec![T::one(); n])
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[T] {
        &self.base
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn caps(&self) -> &[T] {
        &self.caps
    }

    pub fn is_singleton(&self) -> bool {
        self.scale == T::zero()
    }

    /// Every index must carry positive weight in some member, otherwise the
    /// induced matrix functional is only a seminorm.
    pub fn check_nontrivial(&self) -> Result<()> {
        let z = T::zero_weight();
        for i in 0..self.dim() {
            let reachable = self.base[i] > z || (self.scale > z && self.caps[i] > z);
            if !reachable {
                return Err(Error::Degenerate(i));
            }
        }
        Ok(())
    }

    /// Scale part of the linear maximization: `sup_{s} ⟨s, v⟩` over the
    /// capped simplex alone, with its maximizer.
    pub fn capped_linmax(&self, v: &[T]) -> Result<LinMax<T>> {
        self.check_dim(v.len())?;
        check_finite(v)?;
        let s = greedy_fill(&self.caps, v);
        Ok(LinMax {
            value: dot(&s, v),
            argmax: s,
        })
    }

    /// Closed-form LP dual of the capped part, see [`dual_offset`].
    pub fn dual_offset(&self, v: &[T]) -> Result<DualOffset<T>> {
        self.check_dim(v.len())?;
        dual_offset(&self.caps, v)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

impl<T: Real> WeightDomain<T> for WeightSet<T> {
    fn dim(&self) -> usize {
        self.base.len()
    }

    fn linmax(&self, v: &[T]) -> Result<LinMax<T>> {
        self.check_dim(v.len())?;
        check_finite(v)?;
        let argmax: Vec<T> = if self.scale == T::zero() {
            self.base.clone()
        } else {
            let s = greedy_fill(&self.caps, v);
            self.base
                .iter()
                .zip(&s)
                .map(|(&b, &si)| b + self.scale * si)
                .collect()
        };
        Ok(LinMax {
            value: dot(&argmax, v),
            argmax,
        })
    }

    /// `base + scale · caps / Σcaps`.
    fn center(&self) -> Vec<T> {
        if self.scale == T::zero() {
            return self.base.clone();
        }
        let cap_mass = compensated_sum(self.caps.iter().copied());
        self.base
            .iter()
            .zip(&self.caps)
            .map(|(&b, &c)| b + self.scale * c / cap_mass)
            .collect()
    }

    fn contains(&self, r: &[T], tol: T) -> bool {
        if r.len() != self.dim() || r.iter().any(|x| !x.is_finite()) {
            return false;
        }
        if (compensated_sum(r.iter().copied()) - T::one()).abs() > tol {
            return false;
        }
        r.iter().enumerate().all(|(i, &ri)| {
            let excess = ri - self.base[i];
            excess >= -tol && excess <= self.scale * self.caps[i] + tol
        })
    }
}

/// Greedy maximizer of `⟨s, v⟩` over `{s ∈ Δ : s ≤ caps}`: fill indices in
/// decreasing `v` (ties by index) up to their caps until unit mass is placed.
fn greedy_fill<T: Real>(caps: &[T], v: &[T]) -> Vec<T> {
    let mut s = vec![T::zero(); v.len()];
    let mut remaining = T::one();
    for i in descending_order(v) {
        if remaining <= T::zero() {
            break;
        }
        let take = caps[i].min(remaining);
        s[i] = take;
        remaining -= take;
    }
    s
}

/// Indices sorted by decreasing value, ties broken by index.
fn descending_order<T: Real>(v: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Minimizes `φ(a) = a + Σ caps_i (v_i − a)_+` over scalar `a`.
///
/// The minimum equals `sup { ⟨s, v⟩ : s ∈ Δ, s ≤ caps }` by LP duality. The
/// returned offset is the smallest entry of `v` at which the caps of entries
/// strictly above it total at most one; minimizers form an interval and this
/// is its left end (or the smallest entry of `v` when the interval is
/// unbounded below, which happens exactly when the caps sum to one).
pub fn dual_offset<T: Real>(caps: &[T], v: &[T]) -> Result<DualOffset<T>> {
    if caps.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: caps.len(),
            got: v.len(),
        });
    }
    if v.is_empty() {
        return Err(invalid("v", "must be nonempty"));
    }
    check_finite(v)?;
    let tol = T::validation_tol();
    let cap_mass = compensated_sum(caps.iter().copied());
    if cap_mass < T::one() - tol {
        return Err(Error::EmptySet(format!(
            "caps sum to {cap_mass:?} < 1; the dual is unbounded below"
        )));
    }

    let order = descending_order(v);
    let mut offset = v[order[0]];
    let mut above = T::zero();
    let mut k = 0;
    while k < order.len() {
        let level = v[order[k]];
        // `above` holds the caps of entries strictly greater than `level`.
        if above > T::one() + tol {
            break;
        }
        offset = level;
        while k < order.len() && v[order[k]] == level {
            above += caps[order[k]];
            k += 1;
        }
    }
    let value = offset
        + caps
            .iter()
            .zip(v)
            .map(|(&c, &x)| c * (x - offset).max(T::zero()))
            .sum::<T>();
    Ok(DualOffset { offset, value })
}

/// The segment `{(1 − ζ)·p + ζ/n : ζ ∈ [0, 1]}` between marginals and uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSegment<T> {
    marginal: Vec<T>,
}

impl<T: Real> SmoothingSegment<T> {
    pub fn new(p: &MarginalDist<T>) -> Self {
        SmoothingSegment {
            marginal: p.weights().to_vec(),
        }
    }

    /// Returns the two endpoints `(p, uniform)`.
    pub fn endpoints(&self) -> (Vec<T>, Vec<T>) {
        let n = self.marginal.len();
        (self.marginal.clone(), vec![T::one() / count::<T>(n); n])
    }

    pub fn is_point(&self) -> bool {
        let uni = T::one() / count::<T>(self.marginal.len());
        self.marginal
            .iter()
            .all(|&p| (p - uni).abs() <= T::validation_tol())
    }
}

impl<T: Real> WeightDomain<T> for SmoothingSegment<T> {
    fn dim(&self) -> usize {
        self.marginal.len()
    }

    fn linmax(&self, v: &[T]) -> Result<LinMax<T>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        check_finite(v)?;
        let (p, uni) = self.endpoints();
        let at_p = dot(&p, v);
        let at_uni = dot(&uni, v);
        Ok(if at_uni > at_p {
            LinMax {
                value: at_uni,
                argmax: uni,
            }
        } else {
            LinMax {
                value: at_p,
                argmax: p,
            }
        })
    }

    fn center(&self) -> Vec<T> {
        let (p, uni) = self.endpoints();
        let half = T::one() / (T::one() + T::one());
        p.iter().zip(&uni).map(|(&a, &b)| half * (a + b)).collect()
    }

    fn contains(&self, r: &[T], tol: T) -> bool {
        if r.len() != self.dim() {
            return false;
        }
        let (p, uni) = self.endpoints();
        let d: Vec<T> = uni.iter().zip(&p).map(|(&u, &q)| u - q).collect();
        let dd = dot(&d, &d);
        let zeta = if dd > T::zero() {
            let rp: Vec<T> = r.iter().zip(&p).map(|(&a, &b)| a - b).collect();
            (dot(&rp, &d) / dd).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        r.iter()
            .zip(p.iter().zip(&d))
            .all(|(&ri, (&pi, &di))| (ri - (pi + zeta * di)).abs() <= tol)
    }
}

/// Any of the supported weight sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Weights<T> {
    Capped(WeightSet<T>),
    Segment(SmoothingSegment<T>),
}

impl<T: Real> Weights<T> {
    pub fn as_capped(&self) -> Option<&WeightSet<T>> {
        match self {
            Weights::Capped(w) => Some(w),
            Weights::Segment(_) => None,
        }
    }
}

impl<T: Real> From<WeightSet<T>> for Weights<T> {
    fn from(w: WeightSet<T>) -> Self {
        Weights::Capped(w)
    }
}

impl<T: Real> From<SmoothingSegment<T>> for Weights<T> {
    fn from(s: SmoothingSegment<T>) -> Self {
        Weights::Segment(s)
    }
}

impl<T: Real> WeightDomain<T> for Weights<T> {
    fn dim(&self) -> usize {
        match self {
            Weights::Capped(w) => w.dim(),
            Weights::Segment(s) => s.dim(),
        }
    }

    fn linmax(&self, v: &[T]) -> Result<LinMax<T>> {
        match self {
            Weights::Capped(w) => w.linmax(v),
            Weights::Segment(s) => s.linmax(v),
        }
    }

    fn center(&self) -> Vec<T> {
        match self {
            Weights::Capped(w) => w.center(),
            Weights::Segment(s) => s.center(),
        }
    }

    fn contains(&self, r: &[T], tol: T) -> bool {
        match self {
            Weights::Capped(w) => w.contains(r, tol),
            Weights::Segment(s) => s.contains(r, tol),
        }
    }
}

fn check_unit_interval<T: Real>(name: &'static str, x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(invalid(name, format!("{x:?} outside [0, 1]")));
    }
    Ok(())
}

fn check_finite<T: Real>(v: &[T]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("objective vector".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn marg(w: &[f64]) -> MarginalDist<f64> {
        MarginalDist::new(w.to_vec()).unwrap()
    }

    fn capped(caps: &[f64]) -> WeightSet<f64> {
        WeightSet::new(vec![0.0; caps.len()], 1.0, caps.to_vec()).unwrap()
    }

    #[test]
    fn singleton_linmax_is_evaluation() {
        let r = marg(&[0.2, 0.5, 0.3]);
        let set = WeightSet::singleton(&r);
        let v = [1.5, -2.0, 4.0];
        let lm = set.linmax(&v).unwrap();
        assert_eq!(lm.value, dot(r.weights(), &v));
        assert_eq!(lm.argmax, r.weights());
    }

    #[test]
    fn smoothed_examples() {
        let p = marg(&[0.5, 0.3, 0.2]);
        let s = WeightSet::smoothed(&p, 0.5).unwrap();
        assert_abs_diff_eq!(s.base()[0], 0.416_666_666_666_666_7, epsilon = 1e-15);
        assert_abs_diff_eq!(s.base()[1], 0.316_666_666_666_666_7, epsilon = 1e-15);
        assert_abs_diff_eq!(s.base()[2], 0.266_666_666_666_666_7, epsilon = 1e-15);
        let full = WeightSet::smoothed(&p, 1.0).unwrap();
        for &b in full.base() {
            assert_abs_diff_eq!(b, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(WeightSet::smoothed(&p, 0.0).unwrap().base(), p.weights());
        assert!(WeightSet::smoothed(&p, 1.5).is_err());
        assert!(WeightSet::smoothed(&p, -0.1).is_err());
    }

    #[test]
    fn full_simplex_examples() {
        let s = WeightSet::<f64>::full_simplex(3);
        let lm = s.linmax(&[2.0, 5.0, 3.0]).unwrap();
        assert_eq!(lm.value, 5.0);
        assert_eq!(lm.argmax, vec![0.0, 1.0, 0.0]);
        assert_eq!(s.vec_norm(&[1.0, -7.0, 2.0]).unwrap(), 7.0);
        let one = WeightSet::<f64>::full_simplex(1);
        assert_eq!(one.linmax(&[3.0]).unwrap().argmax, vec![1.0]);
    }

    #[test]
    fn uniform_cap_endpoints() {
        let tight = WeightSet::<f64>::uniform_cap(4, 0.25).unwrap();
        let uni = WeightSet::singleton(&MarginalDist::uniform(4));
        let v = [4.0, 1.0, 0.0, 2.5];
        assert_abs_diff_eq!(
            tight.linmax(&v).unwrap().value,
            uni.linmax(&v).unwrap().value,
            epsilon = 1e-15
        );
        let loose = WeightSet::<f64>::uniform_cap(4, 1.0).unwrap();
        assert_eq!(loose, WeightSet::full_simplex(4));
        let half = WeightSet::<f64>::uniform_cap(4, 0.5).unwrap();
        assert_abs_diff_eq!(half.linmax(&[4.0, 1.0, 0.0, 0.0]).unwrap().value, 2.5);
        assert!(matches!(
            WeightSet::<f64>::uniform_cap(4, 0.2),
            Err(Error::EmptySet(_))
        ));
        assert!(WeightSet::<f64>::uniform_cap(4, 1.1).is_err());
    }

    #[test]
    fn multiplicative_family() {
        let p = marg(&[0.6, 0.3, 0.1]);
        let one = WeightSet::capped_multiplicative(&p, 0.2, 1.0).unwrap();
        let smooth = p.smoothed(0.2).unwrap();
        // caps equal the smoothed marginals and sum to one: a single point.
        let v = [0.3, 2.0, 1.0];
        assert_abs_diff_eq!(
            one.linmax(&v).unwrap().value,
            dot(smooth.weights(), &v),
            epsilon = 1e-15
        );
        let inf = WeightSet::capped_multiplicative(&p, 0.0, f64::INFINITY).unwrap();
        assert_eq!(inf.caps(), &[1.0, 1.0, 1.0]);
        let big = WeightSet::capped_multiplicative(&p, 0.5, 1e9).unwrap();
        assert_eq!(big.caps(), &[1.0, 1.0, 1.0]);
        let uni = MarginalDist::uniform(4);
        let two = WeightSet::capped_multiplicative(&uni, 0.3, 2.0).unwrap();
        assert_eq!(two, WeightSet::uniform_cap(4, 0.5).unwrap());
        assert!(matches!(
            WeightSet::capped_multiplicative(&p, 0.0, 0.5),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn exponent_family() {
        let p = marg(&[0.64, 0.36]);
        let half = WeightSet::capped_exponent(&p, 0.0, 0.5).unwrap();
        assert_abs_diff_eq!(half.caps()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(half.caps()[1], 0.6, epsilon = 1e-15);
        let zero = WeightSet::capped_exponent(&p, 0.0, 0.0).unwrap();
        assert!(zero.is_singleton());
        assert_abs_diff_eq!(zero.base()[0], 0.64, epsilon = 1e-15);
        let one = WeightSet::capped_exponent(&p, 0.3, 1.0).unwrap();
        assert_eq!(one, WeightSet::full_simplex(2));
        assert!(WeightSet::capped_exponent(&p, 0.0, 1.2).is_err());
    }

    #[test]
    fn lower_bounded_family() {
        let t1 = WeightSet::<f64>::lower_bounded(3, 1.0).unwrap();
        assert!(t1.is_singleton());
        for &b in t1.base() {
            assert_abs_diff_eq!(b, 1.0 / 3.0, epsilon = 1e-15);
        }
        let t0 = WeightSet::<f64>::lower_bounded(3, 0.0).unwrap();
        assert_eq!(t0, WeightSet::full_simplex(3));
        let half = WeightSet::<f64>::lower_bounded(3, 0.5).unwrap();
        assert_abs_diff_eq!(half.base()[0], 0.25);
        assert_abs_diff_eq!(half.scale(), 0.25);
        assert!(WeightSet::<f64>::lower_bounded(3, -0.5).is_err());
    }

    #[test]
    fn linmax_derived_examples() {
        let set = capped(&[0.6, 0.6, 0.6]);
        let lm = set.linmax(&[3.0, 2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(lm.value, 2.6, epsilon = 1e-15);
        assert_abs_diff_eq!(lm.argmax[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(lm.argmax[1], 0.4, epsilon = 1e-15);
        assert_eq!(lm.argmax[2], 0.0);

        let set = capped(&[0.5, 0.5]);
        let lm = set.linmax(&[4.0, 2.0]).unwrap();
        assert_eq!(lm.value, 3.0);
        assert_eq!(lm.argmax, vec![0.5, 0.5]);
    }

    #[test]
    fn linmax_ties_prefer_lower_index() {
        let set = WeightSet::<f64>::full_simplex(3);
        assert_eq!(
            set.linmax(&[1.0, 2.0, 2.0]).unwrap().argmax,
            vec![0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn linmax_rejects_bad_input() {
        let set = WeightSet::<f64>::full_simplex(3);
        assert!(matches!(
            set.linmax(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(set.linmax(&[1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn dual_offset_examples() {
        let d = dual_offset(&[1.0, 1.0, 1.0], &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.value, 3.0);
        // Minimizers form [2, 3]; the left end is returned.
        assert_eq!(d.offset, 2.0);

        let d = dual_offset(&[0.6, 0.6, 0.6], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(d.offset, 2.0);
        assert_abs_diff_eq!(d.value, 2.6, epsilon = 1e-15);

        let d = dual_offset(&[0.5, 0.7, 0.9], &[1.25; 3]).unwrap();
        assert_eq!(d.offset, 1.25);
        assert_eq!(d.value, 1.25);

        assert!(matches!(
            dual_offset(&[0.3, 0.3], &[1.0, 2.0]),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn dual_offset_is_smallest_minimizer() {
        let caps = [0.6, 0.6, 0.6];
        let v = [3.0, 2.0, 1.0];
        let phi = |a: f64| {
            a + caps
                .iter()
                .zip(&v)
                .map(|(c, x)| c * (x - a).max(0.0))
                .sum::<f64>()
        };
        let d = dual_offset(&caps, &v).unwrap();
        assert!(phi(d.offset - 1e-6) > d.value);
        for k in 0..=400 {
            let a = -1.0 + 0.01 * k as f64;
            assert!(phi(a) >= d.value - 1e-12);
        }
    }

    #[test]
    fn vec_norm_examples() {
        let set = WeightSet::<f64>::uniform_cap(4, 0.5).unwrap();
        assert_abs_diff_eq!(
            set.vec_norm(&[3.0, 4.0, 0.0, 0.0]).unwrap(),
            12.5f64.sqrt(),
            epsilon = 1e-14
        );
        let uni = WeightSet::singleton(&MarginalDist::uniform(2));
        assert_abs_diff_eq!(
            uni.vec_norm(&[3.0, 4.0]).unwrap(),
            12.5f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn segment_examples() {
        let p = marg(&[0.9, 0.1]);
        let seg = SmoothingSegment::new(&p);
        let lm = seg.linmax(&[1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(lm.value, 2.0);
        assert_eq!(lm.argmax, vec![0.5, 0.5]);
        // Dense scan over the smoothing parameter agrees.
        let scan = (0..=1000)
            .map(|k| {
                let z = k as f64 / 1000.0;
                let r = p.smoothed(z).unwrap();
                dot(r.weights(), &[1.0, 3.0])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(scan, 2.0, epsilon = 1e-12);
        assert!(seg.contains(&seg.center(), 1e-12));
        assert!(!seg.contains(&[0.95, 0.05], 1e-9));
        assert!(SmoothingSegment::new(&MarginalDist::<f64>::uniform(3)).is_point());
    }

    #[test]
    fn membership_and_center() {
        let set = WeightSet::<f64>::lower_bounded(3, 0.5).unwrap();
        let c = set.center();
        assert!(set.contains(&c, 1e-12));
        assert!(!set.contains(&[0.6, 0.2, 0.2], 1e-12));
        assert!(set.contains(&[0.5, 0.25, 0.25], 1e-12));
    }

    #[test]
    fn canonical_form_validation() {
        assert!(WeightSet::new(vec![0.5, 0.5], 0.1, vec![1.0, 1.0]).is_err());
        assert!(WeightSet::new(vec![-0.1, 0.1], 1.0, vec![1.0, 1.0]).is_err());
        assert!(WeightSet::new(vec![0.0, 0.0], 1.0, vec![0.4, 0.4]).is_err());
        assert!(WeightSet::new(vec![0.0, 0.0], 1.0, vec![0.4, 1.5]).is_err());
        let degenerate = WeightSet::new(vec![0.0, 0.0], 1.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(degenerate.check_nontrivial(), Err(Error::Degenerate(1)));
        assert!(WeightSet::<f64>::full_simplex(2).check_nontrivial().is_ok());
    }

    #[test]
    fn marginal_validation() {
        assert!(MarginalDist::new(vec![0.5, 0.6]).is_err());
        assert!(MarginalDist::new(vec![1.5, -0.5]).is_err());
        assert!(MarginalDist::<f64>::new(vec![]).is_err());
        let m = MarginalDist::from_counts(&[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn works_in_single_precision() {
        let p = MarginalDist::<f32>::new(vec![0.5, 0.3, 0.2]).unwrap();
        let set = WeightSet::capped_exponent(&p, 0.1, 0.4).unwrap();
        let lm = set.linmax(&[1.0, 2.0, 3.0]).unwrap();
        let d = set.dual_offset(&[1.0, 2.0, 3.0]).unwrap();
        assert!((lm.value - d.value).abs() < 1e-5);
    }
}
