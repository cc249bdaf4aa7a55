//! Ornstein–Uhlenbeck semigroup `P_t`, covariance identities and a
//! deviation inequality for functionals of the walk.

use rayon::prelude::*;

use crate::chaos::{chaos_parts, spectral_multiplier};
use crate::error::{Error, Result};
use crate::malliavin::{gradient, GradientField};
use crate::omega::{conditional_expectation, expectation, Measure, PathSpace, PathTable};
use crate::walk::Walk;

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "semigroup time must be finite and ≥ 0, got {t}"
        )));
    }
    Ok(())
}

/// `P_t F = Σ_n e^{-nt} I^n(f_n)`.
pub fn ou_apply_chaos(walk: &Walk, f: &PathTable, t: f64) -> Result<PathTable> {
    check_t(t)?;
    spectral_multiplier(walk, f, |n| (-(n as f64) * t).exp())
}

/// Per-step factors `1 + e^{-t} ⟨Y_n(i), Y_n(i')⟩`, indexed `[n][i][i']`.
fn step_factors(walk: &Walk, t: f64) -> Vec<Vec<Vec<f64>>> {
    let space = walk.space();
    let e = (-t).exp();
    (0..space.steps())
        .map(|n| {
            (0..space.outcomes())
                .map(|a| {
                    (0..space.outcomes())
                        .map(|b| {
                            let dot: f64 = walk
                                .vector(n, a)
                                .iter()
                                .zip(walk.vector(n, b))
                                .map(|(x, y)| x * y)
                                .sum();
                            1.0 + e * dot
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn kernel_entry(space: PathSpace, factors: &[Vec<Vec<f64>>], row: usize, col: usize) -> f64 {
    factors
        .iter()
        .enumerate()
        .map(|(n, fac)| fac[space.outcome(row, n)][space.outcome(col, n)])
        .product()
}

/// `P_t F(ω̃) = Σ_ω P(ω) q_t^N(ω̃, ω) F(ω)`.
pub fn ou_apply_kernel(walk: &Walk, f: &PathTable, t: f64) -> Result<PathTable> {
    check_t(t)?;
    let space = walk.space();
    if f.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let factors = step_factors(walk, t);
    let probs = walk.path_probabilities();
    let values = (0..space.len())
        .into_par_iter()
        .map(|row| {
            (0..space.len())
                .map(|col| probs[col] * kernel_entry(space, &factors, row, col) * f.get(col))
                .sum()
        })
        .collect();
    PathTable::new(space, values)
}

/// Dense `q_t^N(ω̃, ω)`, rows indexed by `ω̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct OUKernelMatrix {
    space: PathSpace,
    t: f64,
    entries: Vec<f64>,
}

impl OUKernelMatrix {
    pub fn new(walk: &Walk, t: f64) -> Result<Self> {
        check_t(t)?;
        let space = walk.space();
        let m = space.len();
        m.checked_mul(m).ok_or(Error::Size {
            count: (m as u128) * (m as u128),
            cap: u64::MAX,
        })?;
        let factors = step_factors(walk, t);
        let entries = (0..m * m)
            .into_par_iter()
            .map(|e| kernel_entry(space, &factors, e / m, e % m))
            .collect();
        Ok(OUKernelMatrix { space, t, entries })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn space(&self) -> PathSpace {
        self.space
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.space.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.space.len();
        &self.entries[row * m..(row + 1) * m]
    }

    /// `max_ω̃ |Σ_ω P(ω) q(ω̃, ω) − 1|`.
    pub fn row_stochastic_residual<M: Measure>(&self, measure: &M) -> f64 {
        let probs = measure.path_probabilities();
        (0..self.space.len())
            .map(|r| {
                (self
                    .row(r)
                    .iter()
                    .zip(probs)
                    .map(|(q, p)| q * p)
                    .sum::<f64>()
                    - 1.0)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest entry; negative values mean `Q_t` is a signed kernel.
    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rows `(row, col, value)` in row-major order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let m = self.space.len();
        self.entries
            .iter()
            .enumerate()
            .map(move |(e, &v)| (e / m, e % m, v))
    }
}

/// `E[Σ_k ⟨E[D_k F | F_{k-1}], D_k G⟩]`.
pub fn cov_gradient(walk: &Walk, f: &PathTable, g: &PathTable) -> Result<f64> {
    let df = gradient(walk, f)?;
    let dg = gradient(walk, g)?;
    let mut total = 0.0;
    for k in 0..walk.space().steps() {
        for (a, b) in df.at(k).iter().zip(dg.at(k)) {
            let xi = conditional_expectation(walk, a, k as isize - 1)?;
            total += expectation(walk, &(&xi * b))?;
        }
    }
    Ok(total)
}

/// `E[Σ_k ∫_0^∞ e^{-t} ⟨D_k F, P_t D_k G⟩ dt]`, integrating each chaos
/// order exactly: order `r` contributes with weight `1/(1+r)`.
pub fn cov_semigroup(walk: &Walk, f: &PathTable, g: &PathTable) -> Result<f64> {
    let df = gradient(walk, f)?;
    let dg = gradient(walk, g)?;
    let mut total = 0.0;
    for k in 0..walk.space().steps() {
        for (a, b) in df.at(k).iter().zip(dg.at(k)) {
            for (r, part) in chaos_parts(walk, b)?.iter().enumerate() {
                total += expectation(walk, &(a * part))? / (1.0 + r as f64);
            }
        }
    }
    Ok(total)
}

/// `max_ω Σ_k max_j |u_k^j(ω)|`.
pub fn l1_max_norm(field: &GradientField) -> f64 {
    let space = field.space();
    (0..space.len())
        .map(|idx| {
            field
                .tables()
                .iter()
                .map(|comps| comps.iter().map(|t| t.get(idx).abs()).fold(0.0, f64::max))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `g(u) = (1+u) ln(1+u) − u`.
pub fn g(u: f64) -> f64 {
    (1.0 + u) * u.ln_1p() - u
}

/// Constants and bounds for `P(F − E[F] ≥ x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationBound {
    pub k: f64,
    pub c: f64,
    pub dfnorm: f64,
    pub m: f64,
    pub bound_g: f64,
    pub bound_log: f64,
}

/// Smallest `K` with `|F(ω_i^k) − F(ω_{i'}^k)| ≤ K` everywhere.
pub fn fiber_range(f: &PathTable) -> f64 {
    let space = f.space();
    let mut k_max: f64 = 0.0;
    for k in 0..space.steps() {
        for idx in (0..space.len()).filter(|&idx| space.outcome(idx, k) == 0) {
            let (lo, hi) = (0..space.outcomes())
                .map(|i| f.get(space.mutate_index(idx, k, i)))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            k_max = k_max.max(hi - lo);
        }
    }
    k_max
}

/// `max_{k,i,j} |c_i^j(k)|`.
pub fn max_c(walk: &Walk) -> f64 {
    let space = walk.space();
    let mut out: f64 = 0.0;
    for n in 0..space.steps() {
        for i in 0..space.outcomes() {
            for j in 1..=space.dim() {
                out = out.max(walk.c(n, i, j).abs());
            }
        }
    }
    out
}

/// Deviation bound with the minimal constants, or user overrides that
/// must not undercut them.
pub fn deviation_bound(
    walk: &Walk,
    f: &PathTable,
    x: f64,
    k_override: Option<f64>,
    c_override: Option<f64>,
) -> Result<DeviationBound> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "deviation level must be finite and > 0, got {x}"
        )));
    }
    if f.space() != walk.space() {
        return Err(Error::SpaceMismatch);
    }
    let k_min = fiber_range(f);
    let c_min = max_c(walk);
    let pick = |name: &str, min: f64, over: Option<f64>| -> Result<f64> {
        match over {
            Some(v) if !(v >= min) => Err(Error::Domain(format!(
                "{name} override {v} is below the computed minimum {min}"
            ))),
            Some(v) => Ok(v),
            None => Ok(min),
        }
    };
    let k = pick("K", k_min, k_override)?;
    let c = pick("C", c_min, c_override)?;
    if k == 0.0 {
        return Err(Error::Domain(
            "F is constant along every fiber (K = 0); the bound degenerates".into(),
        ));
    }
    let dfnorm = l1_max_norm(&gradient(walk, f)?);
    let m = walk.dim() as f64 * c * dfnorm;
    Ok(DeviationBound {
        k,
        c,
        dfnorm,
        m,
        bound_g: (-(m / k) * g(x / m)).exp(),
        bound_log: (-(x / (2.0 * k)) * (x / m).ln_1p()).exp(),
    })
}

/// `P(F − E[F] ≥ x)` by enumeration.
pub fn tail_probability(walk: &Walk, f: &PathTable, x: f64) -> Result<f64> {
    let mean = expectation(walk, f)?;
    Ok(walk
        .path_probabilities()
        .iter()
        .zip(f.values())
        .filter(|(_, &v)| v - mean >= x)
        .map(|(p, _)| p)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::increment_rv;

    #[test]
    fn chaos_form_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let y0 = increment_rv(&b, 0, 1).unwrap();
        let y1 = increment_rv(&b, 1, 1).unwrap();
        let c = PathTable::constant(b.space(), 4.0);
        assert!(ou_apply_chaos(&b, &c, 1.7).unwrap().max_abs_diff(&c) < 1e-14);
        let half = ou_apply_chaos(&b, &y0, 2f64.ln()).unwrap();
        assert!(half.max_abs_diff(&y0.scale(0.5)) < 1e-15);
        let p = &y0 * &y1;
        let t = 0.4;
        assert!(
            ou_apply_chaos(&b, &p, t)
                .unwrap()
                .max_abs_diff(&p.scale((-2.0 * t).exp()))
                < 1e-15
        );
        assert!(ou_apply_chaos(&b, &p, -0.1).is_err());
        assert!(ou_apply_kernel(&b, &p, -0.1).is_err());
    }

    #[test]
    fn kernel_form_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let one = PathTable::constant(b.space(), 1.0);
        assert!(ou_apply_kernel(&b, &one, 0.7).unwrap().max_abs_diff(&one) < 1e-15);
        let y0 = increment_rv(&b, 0, 1).unwrap();
        let t = 0.3;
        let out = ou_apply_kernel(&b, &y0, t).unwrap();
        assert!(out.max_abs_diff(&y0.scale((-t).exp())) < 1e-15);
        let q = OUKernelMatrix::new(&b, t).unwrap();
        assert!(q.row_stochastic_residual(&b) < 1e-12);
        assert!(q.min_entry() >= 0.0);
    }

    #[test]
    fn covariance_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let y0 = increment_rv(&b, 0, 1).unwrap();
        let y1 = increment_rv(&b, 1, 1).unwrap();
        let p = &y0 * &y1;
        assert!((cov_gradient(&b, &y0, &y0).unwrap() - 1.0).abs() < 1e-15);
        assert!(cov_gradient(&b, &y0, &p).unwrap().abs() < 1e-15);
        assert!((cov_semigroup(&b, &y0, &y0).unwrap() - 1.0).abs() < 1e-15);
        assert!((cov_semigroup(&b, &p, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deviation_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let y0 = increment_rv(&b, 0, 1).unwrap();
        let r = deviation_bound(&b, &y0, 1.0, None, None).unwrap();
        assert_eq!((r.k, r.c, r.dfnorm, r.m), (2.0, 0.5, 1.0, 0.5));
        assert!((r.bound_log - 3f64.powf(-0.25)).abs() < 1e-12);
        assert!((r.bound_g - (-0.25 * (3.0 * 3f64.ln() - 2.0)).exp()).abs() < 1e-12);
        assert!((r.bound_g - 0.7233).abs() < 1e-4);
        assert_eq!(tail_probability(&b, &y0, 1.0).unwrap(), 0.5);

        let y1 = increment_rv(&b, 1, 1).unwrap();
        let s = &y0 + &y1;
        let r = deviation_bound(&b, &s, 2.0, None, None).unwrap();
        assert_eq!((r.k, r.c, r.dfnorm, r.m), (2.0, 0.5, 2.0, 1.0));
        assert!(tail_probability(&b, &s, 2.0).unwrap() <= r.bound_g);
        assert_eq!(tail_probability(&b, &s, 2.0).unwrap(), 0.25);

        let c = PathTable::constant(b.space(), 1.0);
        assert!(matches!(
            deviation_bound(&b, &c, 1.0, None, None),
            Err(Error::Domain(_))
        ));
        assert!(deviation_bound(&b, &y0, 0.0, None, None).is_err());
        assert!(deviation_bound(&b, &y0, 1.0, Some(1.0), None).is_err());
        let r = deviation_bound(&b, &y0, 1.0, Some(3.0), Some(1.0)).unwrap();
        assert_eq!((r.k, r.c), (3.0, 1.0));
    }
}
