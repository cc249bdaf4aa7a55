//! Single stochastic integrals of predictable processes and multiple
//! stochastic integrals of symmetric kernels.
//!
//! A [`Kernel`] of order `r` is stored only on strictly increasing time
//! tuples `i_1 < … < i_r`, each carrying `d^r` components indexed by
//! `(k_1,…,k_r)`. Its value on any other tuple of distinct times is the
//! symmetric extension: sorting the times permutes the component indices
//! along with them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::omega::{PathSpace, PathTable};
use crate::walk::Walk;

/// Atom-constancy tolerance used when classifying a process as predictable.
pub const PREDICTABLE_TOL: f64 = 1e-10;

/// All strictly increasing `order`-tuples drawn from `0..=horizon`, in
/// lexicographic order.
pub fn increasing_tuples(horizon: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, end: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for t in start..=end {
            if end + 1 - t < left {
                break;
            }
            cur.push(t);
            rec(t + 1, end, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if order <= horizon + 1 {
        rec(0, horizon, order, &mut Vec::with_capacity(order), &mut out);
    }
    out
}

pub(crate) fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Symmetric kernel `f_r : Δ_r → R^{d^r}` on times `0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    dim: usize,
    horizon: usize,
    order: usize,
    tuples: Vec<Vec<usize>>,
    values: Vec<f64>,
}

impl Kernel {
    pub fn zeros(dim: usize, horizon: usize, order: usize) -> Self {
        let tuples = increasing_tuples(horizon, order);
        let width = dim.pow(order as u32);
        let values = vec![0.0; tuples.len() * width];
        Kernel {
            dim,
            horizon,
            order,
            tuples,
            values,
        }
    }

    /// Order-0 kernel holding the scalar `f_0`.
    pub fn scalar(dim: usize, horizon: usize, f0: f64) -> Self {
        let mut k = Self::zeros(dim, horizon, 0);
        k.values[0] = f0;
        k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of components per tuple, `d^r`.
    pub fn width(&self) -> usize {
        self.dim.pow(self.order as u32)
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn components(&self, tuple: usize) -> &[f64] {
        let w = self.width();
        &self.values[tuple * w..(tuple + 1) * w]
    }

    pub fn components_mut(&mut self, tuple: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.values[tuple * w..(tuple + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tuple_index(&self, times: &[usize]) -> Option<usize> {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(times))
            .ok()
    }

    /// Flat offset of 1-based coordinates `(k_1,…,k_r)` within a tuple.
    pub fn component_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.order {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.order,
                coords.len()
            )));
        }
        coords.iter().try_fold(0usize, |acc, &k| {
            if k == 0 || k > self.dim {
                return Err(Error::range("coordinate", k as i64, 1, self.dim as i64));
            }
            Ok(acc * self.dim + (k - 1))
        })
    }

    fn coords_of(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.order];
        for slot in out.iter_mut().rev() {
            *slot = flat % self.dim + 1;
            flat /= self.dim;
        }
        out
    }

    fn check_increasing(&self, times: &[usize]) -> Result<()> {
        if times.len() != self.order {
            return Err(Error::Domain(format!(
                "expected {} times, got {}",
                self.order,
                times.len()
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "times {times:?} are not strictly increasing"
            )));
        }
        if let Some(&t) = times.last() {
            if t > self.horizon {
                return Err(Error::range("time", t as i64, 0, self.horizon as i64));
            }
        }
        Ok(())
    }

    /// Stored component at an increasing tuple.
    pub fn get(&self, times: &[usize], coords: &[usize]) -> Result<f64> {
        self.check_increasing(times)?;
        let t = self
            .tuple_index(times)
            .expect("increasing tuple within horizon");
        Ok(self.components(t)[self.component_index(coords)?])
    }

    pub fn set(&mut self, times: &[usize], coords: &[usize], value: f64) -> Result<()> {
        self.check_increasing(times)?;
        let t = self
            .tuple_index(times)
            .expect("increasing tuple within horizon");
        let c = self.component_index(coords)?;
        self.components_mut(t)[c] = value;
        Ok(())
    }

    /// Value of the symmetric extension at any tuple of distinct times.
    /// Times beyond the kernel horizon carry zero.
    pub fn value_at(&self, times: &[usize], coords: &[usize]) -> Result<f64> {
        let (sorted_times, sorted_coords) = sort_pairs(times, coords)?;
        if sorted_times.last().is_some_and(|&t| t > self.horizon) {
            return Ok(0.0);
        }
        self.get(&sorted_times, &sorted_coords)
    }

    /// `⟨f, g⟩` over `Δ_r`, summed over all component indices.
    pub fn inner(&self, other: &Kernel) -> Result<f64> {
        self.check_compatible(other)?;
        let stored: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(factorial(self.order) * stored)
    }

    fn check_compatible(&self, other: &Kernel) -> Result<()> {
        if self.dim != other.dim || self.horizon != other.horizon || self.order != other.order {
            return Err(Error::Domain(format!(
                "kernels differ in shape: (d={}, N={}, r={}) vs (d={}, N={}, r={})",
                self.dim, self.horizon, self.order, other.dim, other.horizon, other.order
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        if self.check_compatible(other).is_err() {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, c: f64) -> Kernel {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn add(&self, other: &Kernel) -> Result<Kernel> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.values.iter().all(|x| x.abs() <= tol)
    }

    /// Keep entries whose times satisfy `keep`, zero the rest.
    pub fn retain_tuples(&self, keep: impl Fn(&[usize]) -> bool) -> Kernel {
        let mut out = self.clone();
        let w = self.width();
        for (t, times) in self.tuples.iter().enumerate() {
            if !keep(times) {
                out.values[t * w..(t + 1) * w]
                    .iter_mut()
                    .for_each(|x| *x = 0.0);
            }
        }
        out
    }

    /// `f · 1_{[0,max_time]^r}`; `max_time = -1` kills every order `r ≥ 1`.
    pub fn restrict(&self, max_time: isize) -> Kernel {
        self.retain_tuples(|times| times.iter().all(|&t| t as isize <= max_time))
    }

    /// The same kernel viewed on the larger horizon `horizon`.
    pub fn with_horizon(&self, horizon: usize) -> Result<Kernel> {
        if horizon < self.horizon {
            return Err(Error::range(
                "kernel horizon",
                self.horizon as i64,
                0,
                horizon as i64,
            ));
        }
        let mut out = Kernel::zeros(self.dim, horizon, self.order);
        for (t, times) in self.tuples.iter().enumerate() {
            let dst = out
                .tuple_index(times)
                .expect("tuple exists on larger horizon");
            out.components_mut(dst).copy_from_slice(self.components(t));
        }
        Ok(out)
    }

    /// `f_r^j(*, k) · 1_{Δ_r}(*, k)`: the order `r-1` kernel obtained by
    /// pinning the last slot to time `k` and coordinate `j`.
    pub fn pin_last(&self, k: usize, j: usize) -> Result<Kernel> {
        if self.order == 0 {
            return Err(Error::Domain(
                "cannot pin a slot of an order-0 kernel".into(),
            ));
        }
        if j == 0 || j > self.dim {
            return Err(Error::range("coordinate", j as i64, 1, self.dim as i64));
        }
        let mut out = Kernel::zeros(self.dim, self.horizon, self.order - 1);
        if k > self.horizon {
            return Ok(out);
        }
        let w = out.width();
        for t in 0..out.tuples.len() {
            let times = out.tuples[t].clone();
            if times.contains(&k) {
                continue;
            }
            let mut full_times = times.clone();
            full_times.push(k);
            for c in 0..w {
                let mut coords = out.coords_of(c);
                coords.push(j);
                out.values[t * w + c] = self.value_at(&full_times, &coords)?;
            }
        }
        Ok(out)
    }

    /// Every stored component as `(times, coords, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, f64)> + '_ {
        let w = self.width();
        self.tuples.iter().enumerate().flat_map(move |(t, times)| {
            (0..w).map(move |c| (times.clone(), self.coords_of(c), self.values[t * w + c]))
        })
    }

    pub fn to_json(&self) -> KernelJson {
        KernelJson {
            order: self.order,
            symmetric: true,
            entries: self
                .entries()
                .filter(|(_, _, v)| *v != 0.0)
                .map(|(times, coords, value)| RawEntry {
                    times,
                    coords,
                    value,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &KernelJson, dim: usize, horizon: usize) -> Result<Kernel> {
        if json.symmetric {
            let mut k = Kernel::zeros(dim, horizon, json.order);
            for e in &json.entries {
                let cur = k.get(&e.times, &e.coords)?;
                k.set(&e.times, &e.coords, cur + e.value)?;
            }
            Ok(k)
        } else {
            symmetrize(dim, horizon, json.order, &json.entries)
        }
    }
}

fn sort_pairs(times: &[usize], coords: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if times.len() != coords.len() {
        return Err(Error::Domain(format!(
            "{} times but {} coordinates",
            times.len(),
            coords.len()
        )));
    }
    let mut pairs: Vec<(usize, usize)> =
        times.iter().copied().zip(coords.iter().copied()).collect();
    pairs.sort_unstable();
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Domain(format!(
            "times {times:?} repeat an index (off the diagonal-free set)"
        )));
    }
    Ok(pairs.into_iter().unzip())
}

/// One value of a raw (not necessarily symmetric) kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEntry {
    pub times: Vec<usize>,
    pub coords: Vec<usize>,
    pub value: f64,
}

/// Kernel file format. With `symmetric: true` the entries are the stored
/// components on increasing tuples; otherwise they are a raw assignment on
/// distinct tuples and get symmetrized on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub order: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetric: bool,
    pub entries: Vec<RawEntry>,
}

/// Symmetrization `f̃(t) = (1/r!) Σ_σ f^{k_σ}(t_σ)` of a raw assignment.
/// Repeated entries at the same point add up.
pub fn symmetrize(dim: usize, horizon: usize, order: usize, raw: &[RawEntry]) -> Result<Kernel> {
    let mut k = Kernel::zeros(dim, horizon, order);
    let weight = 1.0 / factorial(order);
    for e in raw {
        if e.times.len() != order {
            return Err(Error::Domain(format!(
                "entry {:?} does not have order {order}",
                e.times
            )));
        }
        let (times, coords) = sort_pairs(&e.times, &e.coords)?;
        let cur = k.get(&times, &coords)?;
        k.set(&times, &coords, cur + weight * e.value)?;
    }
    Ok(k)
}

/// Kernel `1̃_{(s_1,…,s_r)}^{i_1,…,i_r}` whose multiple integral is the
/// monomial `Y_{s_1}^{i_1} ⋯ Y_{s_r}^{i_r}`.
pub fn monomial_kernel(space: PathSpace, times: &[usize], coords: &[usize]) -> Result<Kernel> {
    let mut k = Kernel::zeros(space.dim(), space.horizon(), times.len());
    k.set(times, coords, 1.0 / factorial(times.len()))?;
    Ok(k)
}

/// `I^r(f_r) = r! Σ_{i_1<…<i_r} Σ_k f^{k}(i) Y_{i_1}^{k_1} ⋯ Y_{i_r}^{k_r}`.
pub fn multiple_integral(walk: &Walk, f: &Kernel) -> Result<PathTable> {
    let space = walk.space();
    if f.dim() != space.dim() {
        return Err(Error::Domain(format!(
            "kernel dimension {} differs from walk dimension {}",
            f.dim(),
            space.dim()
        )));
    }
    if f.horizon() > space.horizon() {
        return Err(Error::range(
            "kernel horizon",
            f.horizon() as i64,
            0,
            space.horizon() as i64,
        ));
    }
    let r = f.order();
    if r == 0 {
        return Ok(PathTable::constant(space, f.values()[0]));
    }
    let d = space.dim();
    let scale = factorial(r);
    let values: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|idx| {
            let mut total = 0.0;
            let mut buf = Vec::with_capacity(f.width());
            for (t, times) in f.tuples().iter().enumerate() {
                buf.clear();
                buf.extend_from_slice(f.components(t));
                // contract the last axis first: flat index has k_r fastest
                for &s in times.iter().rev() {
                    let y = walk.vector(s, space.outcome(idx, s));
                    let len = buf.len() / d;
                    for a in 0..len {
                        buf[a] = (0..d).map(|k| buf[a * d + k] * y[k]).sum();
                    }
                    buf.truncate(len);
                }
                total += buf[0];
            }
            scale * total
        })
        .collect();
    PathTable::new(space, values)
}

/// Time-indexed family `(U_0,…,U_N)` of `R^d`-valued tables.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorProcess {
    space: PathSpace,
    components: Vec<Vec<PathTable>>,
    predictable: bool,
}

impl VectorProcess {
    /// `components[n][j-1]` is `U_n^j`.
    pub fn new(space: PathSpace, components: Vec<Vec<PathTable>>) -> Result<Self> {
        if components.len() != space.steps() {
            return Err(Error::Domain(format!(
                "process has {} times, expected N+1 = {}",
                components.len(),
                space.steps()
            )));
        }
        for (n, comps) in components.iter().enumerate() {
            if comps.len() != space.dim() {
                return Err(Error::Domain(format!(
                    "time {n}: {} components, expected d = {}",
                    comps.len(),
                    space.dim()
                )));
            }
            if comps.iter().any(|c| c.space() != space) {
                return Err(Error::SpaceMismatch);
            }
        }
        let mut out = VectorProcess {
            space,
            components,
            predictable: false,
        };
        out.predictable = out.predictability_residual() <= PREDICTABLE_TOL;
        Ok(out)
    }

    pub fn zeros(space: PathSpace) -> Self {
        Self::new(
            space,
            vec![vec![PathTable::zeros(space); space.dim()]; space.steps()],
        )
        .expect("well-formed")
    }

    /// Deterministic process with `U_n = vectors[n]`.
    pub fn deterministic(space: PathSpace, vectors: &[Vec<f64>]) -> Result<Self> {
        let components = vectors
            .iter()
            .map(|v| v.iter().map(|&x| PathTable::constant(space, x)).collect())
            .collect();
        Self::new(space, components)
    }

    pub fn space(&self) -> PathSpace {
        self.space
    }

    /// `U_n^j`, `j` 1-based.
    pub fn get(&self, n: usize, j: usize) -> &PathTable {
        &self.components[n][j - 1]
    }

    pub fn at(&self, n: usize) -> &[PathTable] {
        &self.components[n]
    }

    pub fn components(&self) -> &[Vec<PathTable>] {
        &self.components
    }

    pub fn is_predictable(&self) -> bool {
        self.predictable
    }

    /// Worst deviation of any `U_n` from `F_{n-1}`-measurability.
    pub fn predictability_residual(&self) -> f64 {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(n, comps)| {
                comps.iter().map(move |c| {
                    c.measurability_residual(n as isize - 1)
                        .expect("valid time")
                })
            })
            .fold(0.0, f64::max)
    }

    /// `1_{[n,∞)} U`.
    pub fn tail_from(&self, n: usize) -> VectorProcess {
        let mut out = self.clone();
        for comps in out.components.iter_mut().take(n) {
            comps
                .iter_mut()
                .for_each(|c| *c = PathTable::zeros(self.space));
        }
        out.predictable = out.predictability_residual() <= PREDICTABLE_TOL;
        out
    }

    /// `Σ_n ⟨U_n, U_n⟩` pointwise.
    pub fn squared_norm(&self) -> PathTable {
        let mut out = vec![0.0; self.space.len()];
        for comps in &self.components {
            for c in comps {
                out.iter_mut()
                    .zip(c.values())
                    .for_each(|(o, x)| *o += x * x);
            }
        }
        PathTable::new(self.space, out).expect("same space")
    }

    pub fn max_abs_diff(&self, other: &VectorProcess) -> f64 {
        if self.space != other.space {
            return f64::INFINITY;
        }
        self.components
            .iter()
            .flatten()
            .zip(other.components.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

/// `Σ_n ⟨U_n, Y_n⟩` without any predictability requirement.
pub(crate) fn pair_with_increments(walk: &Walk, u: &VectorProcess) -> Result<PathTable> {
    let space = walk.space();
    if u.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let mut out = vec![0.0; space.len()];
    for (n, comps) in u.components().iter().enumerate() {
        for (idx, o) in out.iter_mut().enumerate() {
            let y = walk.vector(n, space.outcome(idx, n));
            *o += comps
                .iter()
                .zip(y)
                .map(|(c, yj)| c.get(idx) * yj)
                .sum::<f64>();
        }
    }
    PathTable::new(space, out)
}

/// `I(U) = Σ_n ⟨U_n, Y_n⟩` for a predictable process `U`.
pub fn integrate_predictable(walk: &Walk, u: &VectorProcess) -> Result<PathTable> {
    if !u.is_predictable() {
        return Err(Error::Contract(format!(
            "stochastic integral needs a predictable integrand (residual {:.3e})",
            u.predictability_residual()
        )));
    }
    pair_with_increments(walk, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::increment_rv;

    fn fixture_d2(horizon: usize) -> Walk {
        Walk::iid_from_probabilities(&[0.25, 0.25, 0.5], horizon).unwrap()
    }

    #[test]
    fn tuples_enumeration() {
        assert_eq!(increasing_tuples(2, 0), vec![Vec::<usize>::new()]);
        assert_eq!(
            increasing_tuples(2, 2),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert!(increasing_tuples(1, 3).is_empty());
        assert_eq!(increasing_tuples(5, 3).len(), 20);
    }

    #[test]
    fn symmetrize_examples() {
        let raw = [RawEntry {
            times: vec![0, 1],
            coords: vec![1, 2],
            value: 3.0,
        }];
        let k = symmetrize(2, 1, 2, &raw).unwrap();
        assert_eq!(k.get(&[0, 1], &[1, 2]).unwrap(), 1.5);
        assert_eq!(k.value_at(&[1, 0], &[2, 1]).unwrap(), 1.5);
        assert_eq!(k.get(&[0, 1], &[2, 1]).unwrap(), 0.0);

        // a symmetric function given on both orderings is a fixed point
        let both = [
            RawEntry {
                times: vec![0, 1],
                coords: vec![1, 2],
                value: 0.5,
            },
            RawEntry {
                times: vec![1, 0],
                coords: vec![2, 1],
                value: 0.5,
            },
        ];
        let again = symmetrize(2, 1, 2, &both).unwrap();
        assert_eq!(
            again,
            Kernel::from_json(
                &KernelJson {
                    order: 2,
                    symmetric: false,
                    entries: both.to_vec()
                },
                2,
                1
            )
            .unwrap()
        );
        assert_eq!(again.get(&[0, 1], &[1, 2]).unwrap(), 0.5);

        let indicator = [RawEntry {
            times: vec![0, 1],
            coords: vec![1, 2],
            value: 1.0,
        }];
        assert_eq!(
            symmetrize(2, 1, 2, &indicator)
                .unwrap()
                .get(&[0, 1], &[1, 2])
                .unwrap(),
            0.5
        );
    }

    #[test]
    fn symmetrize_rejects_diagonal() {
        let raw = [RawEntry {
            times: vec![1, 1],
            coords: vec![1, 1],
            value: 1.0,
        }];
        assert!(matches!(symmetrize(1, 2, 2, &raw), Err(Error::Domain(_))));
    }

    #[test]
    fn order_zero_and_monomials() {
        let w = Walk::symmetric_bernoulli(1);
        let f0 = Kernel::scalar(1, 1, 3.0);
        assert_eq!(multiple_integral(&w, &f0).unwrap().values(), &[3.0; 4]);

        let m = monomial_kernel(w.space(), &[0], &[1]).unwrap();
        assert_eq!(
            multiple_integral(&w, &m).unwrap(),
            increment_rv(&w, 0, 1).unwrap()
        );

        let m = monomial_kernel(w.space(), &[0, 1], &[1, 1]).unwrap();
        assert_eq!(
            multiple_integral(&w, &m).unwrap().values(),
            &[1.0, -1.0, -1.0, 1.0]
        );
        assert!(monomial_kernel(w.space(), &[1, 0], &[1, 1]).is_err());
        assert!(monomial_kernel(w.space(), &[0, 0], &[1, 1]).is_err());

        let w = fixture_d2(1);
        let m = monomial_kernel(w.space(), &[0, 1], &[1, 2]).unwrap();
        let expected = &increment_rv(&w, 0, 1).unwrap() * &increment_rv(&w, 1, 2).unwrap();
        assert!(multiple_integral(&w, &m).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn order_beyond_horizon_is_zero() {
        let w = Walk::symmetric_bernoulli(1);
        let k = Kernel::zeros(1, 1, 3);
        assert_eq!(multiple_integral(&w, &k).unwrap().max_abs(), 0.0);
        let too_long = Kernel::zeros(1, 2, 1);
        assert!(matches!(
            multiple_integral(&w, &too_long),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn pin_last_matches_definition() {
        let raw = [
            RawEntry {
                times: vec![0, 2],
                coords: vec![1, 2],
                value: 2.0,
            },
            RawEntry {
                times: vec![1, 2],
                coords: vec![2, 2],
                value: 4.0,
            },
        ];
        let f = symmetrize(2, 2, 2, &raw).unwrap();
        let g = f.pin_last(2, 2).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.get(&[0], &[1]).unwrap(), 1.0);
        assert_eq!(g.get(&[1], &[2]).unwrap(), 2.0);
        assert_eq!(g.get(&[2], &[1]).unwrap(), 0.0);
        let h = f.pin_last(0, 1).unwrap();
        assert_eq!(h.get(&[2], &[2]).unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let raw = [RawEntry {
            times: vec![2, 0],
            coords: vec![1, 2],
            value: 3.0,
        }];
        let f = symmetrize(2, 2, 2, &raw).unwrap();
        let back = Kernel::from_json(&f.to_json(), 2, 2).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn predictable_integrals() {
        let w = Walk::symmetric_bernoulli(1);
        let space = w.space();
        let u = VectorProcess::deterministic(space, &[vec![1.0], vec![0.0]]).unwrap();
        assert!(u.is_predictable());
        assert_eq!(
            integrate_predictable(&w, &u).unwrap(),
            increment_rv(&w, 0, 1).unwrap()
        );

        let y0 = increment_rv(&w, 0, 1).unwrap();
        let u = VectorProcess::new(space, vec![vec![PathTable::zeros(space)], vec![y0.clone()]])
            .unwrap();
        assert!(u.is_predictable());
        let y1 = increment_rv(&w, 1, 1).unwrap();
        assert_eq!(integrate_predictable(&w, &u).unwrap(), &y0 * &y1);

        let bad = VectorProcess::new(space, vec![vec![y0], vec![PathTable::zeros(space)]]).unwrap();
        assert!(!bad.is_predictable());
        assert!(matches!(
            integrate_predictable(&w, &bad),
            Err(Error::Contract(_))
        ));
    }
}
