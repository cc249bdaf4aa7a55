//! Exact chaos decomposition `F = E[F] + Σ_r I^r(f_r)` on the finite path
//! space, and its inverse.
//!
//! The monomials `Y_{s_1}^{k_1} ⋯ Y_{s_r}^{k_r}` (`s_1 < … < s_r`) form an
//! orthonormal basis, and because increments are independent that basis is
//! the tensor product over steps of `{1, Y_n^1, …, Y_n^d}`. Basis
//! coefficients are therefore computed one step axis at a time. A
//! coefficient index uses the same base-`(d+1)` layout as path indices,
//! with digit `0` meaning "no factor at this step" and digit `k ≥ 1` meaning
//! a factor `Y_n^k`.
//!
//! Convention: the stored kernel component equals `E[F · monomial] / r!`,
//! so that `I^r` (with its `r!` over increasing tuples) reproduces the
//! coefficient exactly. This is the only place the convention lives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{factorial, Kernel, KernelJson};
use crate::omega::{PathSpace, PathTable};
use crate::walk::Walk;

/// Order of the monomial with coefficient index `index`.
pub(crate) fn monomial_order(space: PathSpace, index: usize) -> usize {
    (0..space.steps())
        .filter(|&n| space.outcome(index, n) != 0)
        .count()
}

fn transform_axis(space: PathSpace, data: &mut [f64], n: usize, matrix: &[Vec<f64>]) {
    let b = space.outcomes();
    let stride = space.stride(n);
    let mut x = vec![0.0; b];
    for base in 0..space.len() {
        if space.outcome(base, n) != 0 {
            continue;
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = data[base + i * stride];
        }
        for (a, row) in matrix.iter().enumerate() {
            data[base + a * stride] = row.iter().zip(&x).map(|(m, xi)| m * xi).sum();
        }
    }
}

/// `c[a] = E[F · monomial_a]` for every multi-index `a`.
pub(crate) fn basis_coefficients(walk: &Walk, table: &PathTable) -> Result<Vec<f64>> {
    let space = walk.space();
    if table.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let d = space.dim();
    let mut data = table.values().to_vec();
    for n in 0..space.steps() {
        let matrix: Vec<Vec<f64>> = (0..=d)
            .map(|a| {
                (0..=d)
                    .map(|i| {
                        let p = walk.probability(n, i);
                        if a == 0 {
                            p
                        } else {
                            p * walk.value(n, i, a)
                        }
                    })
                    .collect()
            })
            .collect();
        transform_axis(space, &mut data, n, &matrix);
    }
    Ok(data)
}

/// Inverse of [`basis_coefficients`]: `F = Σ_a c[a] · monomial_a`.
pub(crate) fn synthesize(walk: &Walk, mut data: Vec<f64>) -> Result<PathTable> {
    let space = walk.space();
    let d = space.dim();
    for n in 0..space.steps() {
        // rows indexed by outcome i, columns by basis digit a
        let matrix: Vec<Vec<f64>> = (0..=d)
            .map(|i| {
                (0..=d)
                    .map(|a| if a == 0 { 1.0 } else { walk.value(n, i, a) })
                    .collect()
            })
            .collect();
        transform_axis(space, &mut data, n, &matrix);
    }
    PathTable::new(space, data)
}

/// Apply `F ↦ Σ_r weight(r) · (order-r chaos of F)`.
pub fn spectral_multiplier(
    walk: &Walk,
    table: &PathTable,
    weight: impl Fn(usize) -> f64,
) -> Result<PathTable> {
    let space = walk.space();
    let weights: Vec<f64> = (0..=space.steps()).map(&weight).collect();
    let mut coeffs = basis_coefficients(walk, table)?;
    for (a, c) in coeffs.iter_mut().enumerate() {
        *c *= weights[monomial_order(space, a)];
    }
    synthesize(walk, coeffs)
}

/// Orthogonal projections of `F` onto each chaos, orders `0..=N+1`.
pub fn chaos_parts(walk: &Walk, table: &PathTable) -> Result<Vec<PathTable>> {
    (0..=walk.space().steps())
        .map(|r| spectral_multiplier(walk, table, |s| if s == r { 1.0 } else { 0.0 }))
        .collect()
}

/// Kernels `f_0, f_1, …, f_{N+1}` of a chaos expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosCoefficients {
    dim: usize,
    horizon: usize,
    mean: f64,
    kernels: Vec<Kernel>,
}

impl ChaosCoefficients {
    pub fn zeros(dim: usize, horizon: usize) -> Self {
        ChaosCoefficients {
            dim,
            horizon,
            mean: 0.0,
            kernels: (1..=horizon + 1)
                .map(|r| Kernel::zeros(dim, horizon, r))
                .collect(),
        }
    }

    /// Assemble from `f_0` and any subset of higher-order kernels; missing
    /// orders are zero, repeated orders add.
    pub fn from_kernels(dim: usize, horizon: usize, mean: f64, kernels: &[Kernel]) -> Result<Self> {
        let mut out = Self::zeros(dim, horizon);
        out.mean = mean;
        for k in kernels {
            if k.dim() != dim || k.horizon() > horizon {
                return Err(Error::Domain(format!(
                    "kernel (d={}, N={}) does not fit coefficients (d={dim}, N={horizon})",
                    k.dim(),
                    k.horizon()
                )));
            }
            match k.order() {
                0 => out.mean += k.values()[0],
                r if r > horizon + 1 => {
                    if !k.is_zero(0.0) {
                        return Err(Error::Domain(format!("order {r} exceeds N+1")));
                    }
                }
                r => {
                    let k = k.with_horizon(horizon)?;
                    out.kernels[r - 1] = out.kernels[r - 1].add(&k)?;
                }
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `f_0 = E[F]`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Kernel of order `r ≥ 1`, or `None` beyond `N+1`.
    pub fn kernel(&self, r: usize) -> Option<&Kernel> {
        r.checked_sub(1).and_then(|i| self.kernels.get(i))
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// `f_0² + Σ_r r! ⟨f_r, f_r⟩`, which equals `E[F²]` for the represented `F`.
    pub fn energy(&self) -> f64 {
        self.mean * self.mean
            + self
                .kernels
                .iter()
                .map(|k| factorial(k.order()) * k.inner(k).expect("same shape"))
                .sum::<f64>()
    }

    /// Multiply every order-`r` kernel by `weight(r)` (`r = 0` is the mean).
    pub fn scale_orders(&self, weight: impl Fn(usize) -> f64) -> Self {
        ChaosCoefficients {
            dim: self.dim,
            horizon: self.horizon,
            mean: self.mean * weight(0),
            kernels: self
                .kernels
                .iter()
                .map(|k| k.scale(weight(k.order())))
                .collect(),
        }
    }

    /// Largest time index carrying a component above `tol`, or `-1`.
    pub fn last_active_time(&self, tol: f64) -> isize {
        let mut last = -1isize;
        for k in &self.kernels {
            for (t, times) in k.tuples().iter().enumerate() {
                if k.components(t).iter().any(|x| x.abs() > tol) {
                    last = last.max(*times.last().expect("order ≥ 1") as isize);
                }
            }
        }
        last
    }

    pub fn max_abs_diff(&self, other: &ChaosCoefficients) -> f64 {
        if self.dim != other.dim || self.horizon != other.horizon {
            return f64::INFINITY;
        }
        self.kernels
            .iter()
            .zip(&other.kernels)
            .fold((self.mean - other.mean).abs(), |m, (a, b)| {
                m.max(a.max_abs_diff(b))
            })
    }

    fn to_basis(&self, space: PathSpace) -> Vec<f64> {
        let mut data = vec![0.0; space.len()];
        for (a, slot) in data.iter_mut().enumerate() {
            let mut times = Vec::new();
            let mut coords = Vec::new();
            for n in 0..space.steps() {
                let k = space.outcome(a, n);
                if k != 0 {
                    times.push(n);
                    coords.push(k);
                }
            }
            *slot = match times.len() {
                0 => self.mean,
                r => {
                    let f = &self.kernels[r - 1];
                    factorial(r) * f.get(&times, &coords).expect("index within shape")
                }
            };
        }
        data
    }

    fn from_basis(space: PathSpace, data: &[f64]) -> Self {
        let mut out = Self::zeros(space.dim(), space.horizon());
        for (a, &c) in data.iter().enumerate() {
            let mut times = Vec::new();
            let mut coords = Vec::new();
            for n in 0..space.steps() {
                let k = space.outcome(a, n);
                if k != 0 {
                    times.push(n);
                    coords.push(k);
                }
            }
            match times.len() {
                0 => out.mean = c,
                r => out.kernels[r - 1]
                    .set(&times, &coords, c / factorial(r))
                    .expect("index within shape"),
            }
        }
        out
    }

    pub fn to_json(&self) -> ChaosJson {
        let mut orders = BTreeMap::new();
        orders.insert(
            "0".to_string(),
            Kernel::scalar(self.dim, self.horizon, self.mean).to_json(),
        );
        for k in &self.kernels {
            orders.insert(k.order().to_string(), k.to_json());
        }
        ChaosJson {
            d: self.dim,
            horizon: self.horizon,
            orders,
        }
    }

    pub fn from_json(json: &ChaosJson) -> Result<Self> {
        let kernels = json
            .orders
            .iter()
            .map(|(key, k)| {
                let order: usize = key
                    .parse()
                    .map_err(|_| Error::Domain(format!("order key {key:?} is not an integer")))?;
                if order != k.order {
                    return Err(Error::Domain(format!(
                        "key {key} holds a kernel of order {}",
                        k.order
                    )));
                }
                Kernel::from_json(k, json.d, json.horizon)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_kernels(json.d, json.horizon, 0.0, &kernels)
    }
}

/// Chaos coefficients on disk: kernels in the kernel JSON format, keyed by order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub orders: BTreeMap<String, KernelJson>,
}

/// Coefficients of `F` in the monomial basis, as kernels.
pub fn decompose(walk: &Walk, table: &PathTable) -> Result<ChaosCoefficients> {
    let coeffs = basis_coefficients(walk, table)?;
    Ok(ChaosCoefficients::from_basis(walk.space(), &coeffs))
}

/// `f_0 + Σ_r I^r(f_r)`.
pub fn reconstruct(walk: &Walk, coeffs: &ChaosCoefficients) -> Result<PathTable> {
    let space = walk.space();
    if coeffs.dim() != space.dim() {
        return Err(Error::Domain(format!(
            "coefficient dimension {} differs from walk dimension {}",
            coeffs.dim(),
            space.dim()
        )));
    }
    if coeffs.horizon() > space.horizon() {
        return Err(Error::range(
            "coefficient horizon",
            coeffs.horizon() as i64,
            0,
            space.horizon() as i64,
        ));
    }
    let coeffs = if coeffs.horizon() < space.horizon() {
        ChaosCoefficients::from_kernels(
            space.dim(),
            space.horizon(),
            coeffs.mean(),
            coeffs.kernels(),
        )?
    } else {
        coeffs.clone()
    };
    synthesize(walk, coeffs.to_basis(space))
}

/// Zero every kernel entry with a time index beyond `max_time ∈ [-1, N]`.
pub fn project_horizon(coeffs: &ChaosCoefficients, max_time: isize) -> Result<ChaosCoefficients> {
    if max_time < -1 || max_time > coeffs.horizon() as isize {
        return Err(Error::range(
            "horizon",
            max_time as i64,
            -1,
            coeffs.horizon() as i64,
        ));
    }
    Ok(ChaosCoefficients {
        dim: coeffs.dim,
        horizon: coeffs.horizon,
        mean: coeffs.mean,
        kernels: coeffs
            .kernels
            .iter()
            .map(|k| k.restrict(max_time))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::monomial_kernel;
    use crate::omega::{conditional_expectation, Path};
    use crate::walk::increment_rv;

    #[test]
    fn constant_and_increment() {
        let w = Walk::iid_from_probabilities(&[0.25, 0.25, 0.5], 1).unwrap();
        let c = decompose(&w, &PathTable::constant(w.space(), 2.5)).unwrap();
        assert!((c.mean() - 2.5).abs() < 1e-15);
        assert!(c.kernels().iter().all(|k| k.is_zero(1e-14)));

        let c = decompose(&w, &increment_rv(&w, 0, 1).unwrap()).unwrap();
        assert!(c.mean().abs() < 1e-15);
        assert!((c.kernel(1).unwrap().get(&[0], &[1]).unwrap() - 1.0).abs() < 1e-14);
        let mut others = c.kernel(1).unwrap().clone();
        others.set(&[0], &[1], 0.0).unwrap();
        assert!(others.is_zero(1e-14));
        assert!(c.kernel(2).unwrap().is_zero(1e-14));
    }

    #[test]
    fn indicator_expansion() {
        let w = Walk::symmetric_bernoulli(1);
        let f = PathTable::indicator(w.space(), &Path(vec![0, 0])).unwrap();
        let c = decompose(&w, &f).unwrap();
        assert_eq!(c.mean(), 0.25);
        assert_eq!(c.kernel(1).unwrap().get(&[0], &[1]).unwrap(), 0.25);
        assert_eq!(c.kernel(1).unwrap().get(&[1], &[1]).unwrap(), 0.25);
        assert_eq!(c.kernel(2).unwrap().get(&[0, 1], &[1, 1]).unwrap(), 0.125);
        assert_eq!(reconstruct(&w, &c).unwrap(), f);
    }

    #[test]
    fn only_mean() {
        let w = Walk::symmetric_bernoulli(2);
        let c = ChaosCoefficients::from_kernels(1, 2, 5.0, &[]).unwrap();
        assert_eq!(reconstruct(&w, &c).unwrap().values(), &[5.0; 8]);
    }

    #[test]
    fn projection() {
        let w = Walk::symmetric_bernoulli(1);
        let m = monomial_kernel(w.space(), &[0, 1], &[1, 1]).unwrap();
        let c = ChaosCoefficients::from_kernels(1, 1, 0.0, &[m]).unwrap();
        assert_eq!(project_horizon(&c, 1).unwrap(), c);
        let p = project_horizon(&c, 0).unwrap();
        assert!(p.kernels().iter().all(|k| k.is_zero(0.0)));
        let table = reconstruct(&w, &c).unwrap();
        let cond = conditional_expectation(&w, &table, 0).unwrap();
        assert!(reconstruct(&w, &p).unwrap().max_abs_diff(&cond) < 1e-15);
        let p = project_horizon(&c, -1).unwrap();
        assert_eq!(p.mean(), 0.0);
        assert!(project_horizon(&c, 2).is_err());
        assert!(project_horizon(&c, -2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let w = Walk::iid_from_probabilities(&[0.2, 0.3, 0.5], 1).unwrap();
        let f = PathTable::from_fn(w.space(), |i| (i as f64).sin());
        let c = decompose(&w, &f).unwrap();
        let back = ChaosCoefficients::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn smaller_horizon_embeds() {
        let w = Walk::symmetric_bernoulli(2);
        let small = Walk::symmetric_bernoulli(1);
        let f = PathTable::from_fn(small.space(), |i| i as f64);
        let c = decompose(&small, &f).unwrap();
        let big = reconstruct(&w, &c).unwrap();
        // the same functional of (ω_0, ω_1), ignoring ω_2
        for idx in 0..w.space().len() {
            assert!((big.get(idx) - f.get(idx / 2)).abs() < 1e-12);
        }
    }
}
