//! The finite path space `{0,…,d}^(N+1)`, dense tables over it, and the exact
//! expectation machinery every other module is checked against.
//!
//! Paths are enumerated lexicographically with `ω_0` as the most significant
//! digit in base `d+1`. An atom of `F_n` (a fixed prefix of length `n+1`) is
//! therefore a contiguous block of `(d+1)^(N-n)` consecutive paths, and all
//! conditioning is done by block averaging.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of enumerated paths.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Absolute/relative comparison thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Tolerance { rel: 0.0, abs }
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        let diff = (a - b).abs();
        diff <= self.abs || diff <= self.rel * a.abs().max(b.abs())
    }
}

/// Shape of the path space: dimension `d` and last time index `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PathSpace {
    dim: usize,
    horizon: usize,
    len: usize,
}

impl PathSpace {
    pub fn new(dim: usize, horizon: usize) -> Result<Self> {
        Self::with_cap(dim, horizon, DEFAULT_CAP)
    }

    pub fn with_cap(dim: usize, horizon: usize, cap: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension d must be at least 1".into()));
        }
        let base = dim as u128 + 1;
        let count = (0..=horizon).fold(1u128, |c, _| c.saturating_mul(base));
        if count > cap as u128 {
            return Err(Error::Size { count, cap });
        }
        Ok(PathSpace {
            dim,
            horizon,
            len: count as usize,
        })
    }

    /// Ambient dimension `d`; each step has `d+1` outcomes.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last time index `N`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.horizon + 1
    }

    pub fn outcomes(&self) -> usize {
        self.dim + 1
    }

    /// Number of paths, `(d+1)^(N+1)`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in the canonical order between paths differing by one at step `n`.
    pub fn stride(&self, n: usize) -> usize {
        self.outcomes().pow((self.horizon - n) as u32)
    }

    /// Number of paths in one atom of `F_n`, for `n ∈ [-1, N]`.
    pub fn atom_size(&self, n: isize) -> Result<usize> {
        self.check_time(n)?;
        Ok(self.outcomes().pow((self.horizon as isize - n) as u32))
    }

    pub(crate) fn check_time(&self, n: isize) -> Result<()> {
        if n < -1 || n > self.horizon as isize {
            return Err(Error::range(
                "time index",
                n as i64,
                -1,
                self.horizon as i64,
            ));
        }
        Ok(())
    }

    pub(crate) fn check_step(&self, n: usize) -> Result<()> {
        if n > self.horizon {
            return Err(Error::range("step", n as i64, 0, self.horizon as i64));
        }
        Ok(())
    }

    pub(crate) fn check_coord(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.dim {
            return Err(Error::range("coordinate", j as i64, 1, self.dim as i64));
        }
        Ok(())
    }

    /// Outcome at step `n` of the path with canonical index `index`.
    pub fn outcome(&self, index: usize, n: usize) -> usize {
        (index / self.stride(n)) % self.outcomes()
    }

    pub fn path(&self, index: usize) -> Path {
        Path((0..self.steps()).map(|n| self.outcome(index, n)).collect())
    }

    pub fn index_of(&self, path: &Path) -> Result<usize> {
        self.check_path(path)?;
        Ok(path
            .0
            .iter()
            .fold(0usize, |acc, &w| acc * self.outcomes() + w))
    }

    pub fn check_path(&self, path: &Path) -> Result<()> {
        if path.len() != self.steps() {
            return Err(Error::Domain(format!(
                "path has length {}, expected {}",
                path.len(),
                self.steps()
            )));
        }
        if let Some(&w) = path.0.iter().find(|&&w| w > self.dim) {
            return Err(Error::range("outcome", w as i64, 0, self.dim as i64));
        }
        Ok(())
    }

    /// Canonical index of `ω_i^k`, the path `index` with step `k` set to `i`.
    pub fn mutate_index(&self, index: usize, k: usize, i: usize) -> usize {
        let stride = self.stride(k);
        index - self.outcome(index, k) * stride + i * stride
    }

    /// Outcomes of the first `n+1` steps of `index`, i.e. its `F_n`-atom label.
    pub fn prefix(&self, index: usize, n: isize) -> Vec<usize> {
        (0..(n + 1).max(0) as usize)
            .map(|m| self.outcome(index, m))
            .collect()
    }
}

/// A single path `ω = (ω_0, …, ω_N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn outcome(&self, n: usize) -> usize {
        self.0[n]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, w) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// All paths of `{0,…,d}^(N+1)` in canonical order.
pub fn enumerate_paths(dim: usize, horizon: usize) -> Result<Vec<Path>> {
    let space = PathSpace::new(dim, horizon)?;
    Ok((0..space.len()).map(|i| space.path(i)).collect())
}

/// Copy of `path` with coordinate `k` replaced by `i`.
pub fn mutate_path(path: &Path, k: usize, i: usize, dim: usize) -> Result<Path> {
    if k >= path.len() {
        return Err(Error::range("step", k as i64, 0, path.len() as i64 - 1));
    }
    if i > dim {
        return Err(Error::range("outcome", i as i64, 0, dim as i64));
    }
    let mut out = path.clone();
    out.0[k] = i;
    Ok(out)
}

/// A product probability measure on a path space.
pub trait Measure {
    fn space(&self) -> PathSpace;

    /// Probability of outcome `i` at step `n`.
    fn step_probability(&self, n: usize, i: usize) -> f64;

    /// `P(ω)` for every path, in canonical order.
    fn path_probabilities(&self) -> &[f64];
}

/// Probability of a single path, `∏_n p_{ω_n}(n)`.
pub fn path_probability<M: Measure>(measure: &M, path: &Path) -> Result<f64> {
    measure.space().check_path(path)?;
    Ok(path
        .0
        .iter()
        .enumerate()
        .map(|(n, &i)| measure.step_probability(n, i))
        .product())
}

pub(crate) fn product_probabilities(space: PathSpace, probs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for step in probs.iter().take(space.steps()) {
        out = out
            .iter()
            .flat_map(|&w| step.iter().map(move |&p| w * p))
            .collect();
    }
    out
}

/// Real-valued random variable on a finite path space, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    space: PathSpace,
    values: Vec<f64>,
}

impl PathTable {
    pub fn new(space: PathSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Domain(format!(
                "table has {} entries, path space has {}",
                values.len(),
                space.len()
            )));
        }
        Ok(PathTable { space, values })
    }

    pub fn constant(space: PathSpace, c: f64) -> Self {
        PathTable {
            space,
            values: vec![c; space.len()],
        }
    }

    pub fn zeros(space: PathSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn from_fn(space: PathSpace, f: impl Fn(usize) -> f64) -> Self {
        PathTable {
            space,
            values: (0..space.len()).map(f).collect(),
        }
    }

    /// Table of a function of the path.
    pub fn from_path_fn(space: PathSpace, f: impl Fn(&Path) -> f64) -> Self {
        Self::from_fn(space, |i| f(&space.path(i)))
    }

    /// Indicator of a single path.
    pub fn indicator(space: PathSpace, path: &Path) -> Result<Self> {
        let at = space.index_of(path)?;
        Ok(Self::from_fn(space, |i| if i == at { 1.0 } else { 0.0 }))
    }

    pub fn space(&self) -> PathSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn at(&self, path: &Path) -> Result<f64> {
        Ok(self.values[self.space.index_of(path)?])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PathTable {
            space: self.space,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_with(&self, other: &PathTable, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(PathTable {
            space: self.space,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| x * c)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max_ω |self(ω) − other(ω)|`; infinite on mismatched spaces.
    pub fn max_abs_diff(&self, other: &PathTable) -> f64 {
        if self.space != other.space {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Whether the table is constant on every `F_n`-atom, within `tol`.
    pub fn is_measurable(&self, n: isize, tol: f64) -> Result<bool> {
        let block = self.space.atom_size(n)?;
        Ok(self.values.chunks(block).all(|chunk| {
            let first = chunk[0];
            chunk.iter().all(|&x| (x - first).abs() <= tol)
        }))
    }

    /// Largest deviation from atom-constancy at level `n`.
    pub fn measurability_residual(&self, n: isize) -> Result<f64> {
        let block = self.space.atom_size(n)?;
        Ok(self.values.chunks(block).fold(0.0, |m, chunk| {
            let first = chunk[0];
            chunk.iter().fold(m, |m, &x| m.max((x - first).abs()))
        }))
    }
}

impl Add for &PathTable {
    type Output = PathTable;
    fn add(self, rhs: &PathTable) -> PathTable {
        self.zip_with(rhs, |a, b| a + b)
            .expect("tables on the same space")
    }
}

impl Sub for &PathTable {
    type Output = PathTable;
    fn sub(self, rhs: &PathTable) -> PathTable {
        self.zip_with(rhs, |a, b| a - b)
            .expect("tables on the same space")
    }
}

impl Mul for &PathTable {
    type Output = PathTable;
    fn mul(self, rhs: &PathTable) -> PathTable {
        self.zip_with(rhs, |a, b| a * b)
            .expect("tables on the same space")
    }
}

impl Neg for &PathTable {
    type Output = PathTable;
    fn neg(self) -> PathTable {
        self.map(|x| -x)
    }
}

fn check_space<M: Measure>(measure: &M, table: &PathTable) -> Result<()> {
    if measure.space() != table.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `E[F] = Σ_ω P(ω) F(ω)`, summed in canonical order.
pub fn expectation<M: Measure>(measure: &M, table: &PathTable) -> Result<f64> {
    check_space(measure, table)?;
    Ok(measure
        .path_probabilities()
        .iter()
        .zip(table.values())
        .map(|(p, x)| p * x)
        .sum())
}

/// `E[F | F_n]` for `n ∈ [-1, N]`.
pub fn conditional_expectation<M: Measure>(
    measure: &M,
    table: &PathTable,
    n: isize,
) -> Result<PathTable> {
    check_space(measure, table)?;
    let space = table.space();
    let block = space.atom_size(n)?;
    if block == 1 {
        return Ok(table.clone());
    }
    let probs = measure.path_probabilities();
    let mut out = Vec::with_capacity(space.len());
    for (vals, ps) in table.values().chunks(block).zip(probs.chunks(block)) {
        let mass: f64 = ps.iter().sum();
        let weighted: f64 = vals.iter().zip(ps).map(|(x, p)| x * p).sum();
        let avg = weighted / mass;
        out.extend(std::iter::repeat_n(avg, block));
    }
    Ok(PathTable { space, values: out })
}

/// `Cov(F, G) = E[FG] − E[F]E[G]`.
pub fn covariance<M: Measure>(measure: &M, f: &PathTable, g: &PathTable) -> Result<f64> {
    let fg = f.zip_with(g, |a, b| a * b)?;
    Ok(expectation(measure, &fg)? - expectation(measure, f)? * expectation(measure, g)?)
}

pub fn variance<M: Measure>(measure: &M, f: &PathTable) -> Result<f64> {
    covariance(measure, f, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Uniform {
        space: PathSpace,
        probs: Vec<f64>,
    }

    impl Uniform {
        fn new(dim: usize, horizon: usize) -> Self {
            let space = PathSpace::new(dim, horizon).unwrap();
            let p = 1.0 / space.outcomes() as f64;
            let probs = product_probabilities(space, &vec![vec![p; dim + 1]; horizon + 1]);
            Uniform { space, probs }
        }
    }

    impl Measure for Uniform {
        fn space(&self) -> PathSpace {
            self.space
        }
        fn step_probability(&self, _n: usize, _i: usize) -> f64 {
            1.0 / self.space.outcomes() as f64
        }
        fn path_probabilities(&self) -> &[f64] {
            &self.probs
        }
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(
            enumerate_paths(1, 0).unwrap(),
            vec![Path(vec![0]), Path(vec![1])]
        );
        assert_eq!(
            enumerate_paths(1, 1).unwrap(),
            vec![
                Path(vec![0, 0]),
                Path(vec![0, 1]),
                Path(vec![1, 0]),
                Path(vec![1, 1])
            ]
        );
        let paths = enumerate_paths(2, 1).unwrap();
        assert_eq!(paths.len(), 9);
        assert_eq!(paths[0], Path(vec![0, 0]));
        assert_eq!(paths[8], Path(vec![2, 2]));
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let space = PathSpace::new(2, 3).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.index_of(&space.path(i)).unwrap(), i);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = PathSpace::with_cap(3, 6, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Size {
                count: 16384,
                cap: 1000
            }
        );
        assert!(PathSpace::new(1, 30).is_err());
    }

    #[test]
    fn mutate() {
        let w = Path(vec![0, 1]);
        assert_eq!(mutate_path(&w, 0, 1, 1).unwrap(), Path(vec![1, 1]));
        assert_eq!(mutate_path(&w, 1, 1, 1).unwrap(), w);
        assert_eq!(
            mutate_path(&Path(vec![2, 0]), 1, 2, 2).unwrap(),
            Path(vec![2, 2])
        );
        assert!(mutate_path(&w, 2, 0, 1).is_err());
        assert!(mutate_path(&w, 0, 2, 1).is_err());

        let space = PathSpace::new(2, 2).unwrap();
        for idx in 0..space.len() {
            let path = space.path(idx);
            for k in 0..3 {
                for i in 0..3 {
                    let m = mutate_path(&path, k, i, 2).unwrap();
                    assert_eq!(space.index_of(&m).unwrap(), space.mutate_index(idx, k, i));
                    let back = mutate_path(&m, k, path.outcome(k), 2).unwrap();
                    assert_eq!(back, path);
                }
            }
        }
    }

    #[test]
    fn conditional_expectation_basics() {
        let m = Uniform::new(1, 1);
        let space = m.space();
        let f = PathTable::new(space, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(conditional_expectation(&m, &f, 1).unwrap(), f);
        let c0 = conditional_expectation(&m, &f, 0).unwrap();
        assert_eq!(c0.values(), &[1.5, 1.5, 4.0, 4.0]);
        let c = conditional_expectation(&m, &f, -1).unwrap();
        assert_eq!(c.values(), &[2.75; 4]);
        assert!(conditional_expectation(&m, &f, 2).is_err());
        assert!(conditional_expectation(&m, &f, -2).is_err());
        assert!(c0.is_measurable(0, 0.0).unwrap());
        assert!(!c0.is_measurable(-1, 1e-9).unwrap());
    }

    #[test]
    fn indicator_expectation() {
        let m = Uniform::new(1, 1);
        let f = PathTable::indicator(m.space(), &Path(vec![0, 0])).unwrap();
        assert_eq!(expectation(&m, &f).unwrap(), 0.25);
        assert_eq!(
            covariance(&m, &f, &PathTable::constant(m.space(), 3.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn mismatched_spaces() {
        let m = Uniform::new(1, 1);
        let other = PathTable::zeros(PathSpace::new(1, 2).unwrap());
        assert_eq!(expectation(&m, &other), Err(Error::SpaceMismatch));
    }
}
