//! Discrete complete market `S_n = (I + M_n^{X_n}) S_{n-1}`, `B_n = Π (1+r_k)`,
//! with martingale-measure pricing and two hedging constructions.
//!
//! Strategy convention: `(β_n, γ_n)` is held over period `n`, chosen at
//! `n-1`, so `V_n = β_n B_n + ⟨γ_n, S_n⟩` and self-financing reads
//! `B_n (β_{n+1} − β_n) + ⟨S_n, γ_{n+1} − γ_n⟩ = 0` for `n = -1..N-1`,
//! with `B_{-1} = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::malliavin::clark_ocone;
use crate::omega::{conditional_expectation, expectation, Path, PathSpace, PathTable, DEFAULT_CAP};
use crate::walk::{construct_obtuse, Walk, WalkSpec, DEFAULT_WALK_TOL};

/// Relative singular-value threshold below which a system is singular.
const SINGULAR_TOL: f64 = 1e-12;
/// Agreement required between per-atom EMM solutions and hedge ratios.
pub const MODEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerStep(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scenario {
    /// `M = diag(λ)`.
    Diagonal { lambda: Vec<f64> },
    Matrix {
        #[serde(rename = "M")]
        m: Vec<Vec<f64>>,
    },
}

/// Market description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub d: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(rename = "S0")]
    pub s0: Vec<f64>,
    pub r: Rates,
    /// `scenarios[k][i]` is `M_k^i`.
    pub scenarios: Vec<Vec<Scenario>>,
}

/// Validated market.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    space: PathSpace,
    s0: Vec<f64>,
    rates: Vec<f64>,
    // [k][i] row-major d×d
    matrices: Vec<Vec<DMatrix<f64>>>,
    diagonal: bool,
}

impl Market {
    pub fn new(spec: &MarketSpec) -> Result<Self> {
        Self::with_cap(spec, DEFAULT_CAP)
    }

    pub fn with_cap(spec: &MarketSpec, cap: u64) -> Result<Self> {
        let d = spec.d;
        if d == 0 {
            return Err(Error::InvalidMarket("d must be at least 1".into()));
        }
        let space = PathSpace::with_cap(d, spec.horizon, cap)?;
        if spec.s0.len() != d {
            return Err(Error::InvalidMarket(format!(
                "S0 has {} entries, expected {d}",
                spec.s0.len()
            )));
        }
        if let Some(s) = spec.s0.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "initial price {s} is not positive"
            )));
        }
        let rates = match &spec.r {
            Rates::Uniform(r) => vec![*r; space.steps()],
            Rates::PerStep(rs) => rs.clone(),
        };
        if rates.len() != space.steps() {
            return Err(Error::InvalidMarket(format!(
                "{} rates given, expected N+1 = {}",
                rates.len(),
                space.steps()
            )));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > -1.0) || !r.is_finite()) {
            return Err(Error::InvalidMarket(format!("rate {r} must exceed -1")));
        }
        if spec.scenarios.len() != space.steps() {
            return Err(Error::InvalidMarket(format!(
                "{} scenario steps given, expected N+1 = {}",
                spec.scenarios.len(),
                space.steps()
            )));
        }
        let mut matrices = Vec::with_capacity(space.steps());
        for (k, step) in spec.scenarios.iter().enumerate() {
            if step.len() != d + 1 {
                return Err(Error::InvalidMarket(format!(
                    "step {k} has {} scenarios; a complete model needs exactly d+1 = {}",
                    step.len(),
                    d + 1
                )));
            }
            let mut row = Vec::with_capacity(d + 1);
            for (i, sc) in step.iter().enumerate() {
                let m = match sc {
                    Scenario::Diagonal { lambda } => {
                        if lambda.len() != d {
                            return Err(Error::InvalidMarket(format!(
                                "step {k} scenario {i}: lambda has {} entries, expected {d}",
                                lambda.len()
                            )));
                        }
                        if let Some(l) = lambda.iter().find(|l| !(**l > -1.0)) {
                            return Err(Error::InvalidMarket(format!(
                                "step {k} scenario {i}: lambda {l} must exceed -1"
                            )));
                        }
                        DMatrix::from_diagonal(&DVector::from_column_slice(lambda))
                    }
                    Scenario::Matrix { m } => {
                        if m.len() != d || m.iter().any(|r| r.len() != d) {
                            return Err(Error::InvalidMarket(format!(
                                "step {k} scenario {i}: M must be {d}×{d}"
                            )));
                        }
                        DMatrix::from_fn(d, d, |a, b| m[a][b])
                    }
                };
                let shifted = &m + DMatrix::identity(d, d);
                if let Some(x) = shifted.iter().find(|x| !(**x >= 0.0)) {
                    return Err(Error::InvalidMarket(format!(
                        "step {k} scenario {i}: I + M has negative entry {x}"
                    )));
                }
                row.push(m);
            }
            matrices.push(row);
        }
        let diagonal = matrices
            .iter()
            .flatten()
            .all(|m| (0..d).all(|a| (0..d).all(|b| a == b || m[(a, b)] == 0.0)));
        Ok(Market {
            space,
            s0: spec.s0.clone(),
            rates,
            matrices,
            diagonal,
        })
    }

    pub fn space(&self) -> PathSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn horizon(&self) -> usize {
        self.space.horizon()
    }

    pub fn initial_prices(&self) -> &[f64] {
        &self.s0
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `M_k^i`.
    pub fn matrix(&self, k: usize, i: usize) -> &DMatrix<f64> {
        &self.matrices[k][i]
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// The common rate, if all steps share one.
    pub fn uniform_rate(&self) -> Option<f64> {
        let r = self.rates[0];
        self.rates.iter().all(|&x| x == r).then_some(r)
    }

    /// `B_n` for `n ∈ [-1, N]`.
    pub fn bond(&self, n: isize) -> f64 {
        self.rates
            .iter()
            .take((n + 1).max(0) as usize)
            .map(|r| 1.0 + r)
            .product()
    }
}

/// Price paths: `stocks[n][j-1]` is `S_n^j`, `bond[n]` is `B_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prices {
    pub initial: Vec<f64>,
    pub stocks: Vec<Vec<PathTable>>,
    pub bond: Vec<f64>,
}

impl Prices {
    /// `S_n^j(ω)` for `n ∈ [-1, N]`.
    pub fn stock(&self, n: isize, j: usize, idx: usize) -> f64 {
        if n < 0 {
            self.initial[j - 1]
        } else {
            self.stocks[n as usize][j - 1].get(idx)
        }
    }

    pub fn stock_vector(&self, n: isize, idx: usize) -> Vec<f64> {
        (1..=self.initial.len())
            .map(|j| self.stock(n, j, idx))
            .collect()
    }

    pub fn bond(&self, n: isize) -> f64 {
        if n < 0 {
            1.0
        } else {
            self.bond[n as usize]
        }
    }
}

pub fn build_prices(market: &Market) -> Prices {
    let space = market.space;
    let d = space.dim();
    let mut stocks: Vec<Vec<Vec<f64>>> = Vec::with_capacity(space.steps());
    for n in 0..space.steps() {
        let mut comps = vec![vec![0.0; space.len()]; d];
        for idx in 0..space.len() {
            let prev = if n == 0 {
                DVector::from_column_slice(&market.s0)
            } else {
                DVector::from_fn(d, |j, _| stocks[n - 1][j][idx])
            };
            let next = &prev + market.matrix(n, space.outcome(idx, n)) * &prev;
            for j in 0..d {
                comps[j][idx] = next[j];
            }
        }
        stocks.push(comps);
    }
    Prices {
        initial: market.s0.clone(),
        stocks: stocks
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|v| PathTable::new(space, v).expect("sized to space"))
                    .collect()
            })
            .collect(),
        bond: (0..space.steps())
            .map(|n| market.bond(n as isize))
            .collect(),
    }
}

/// Equivalent martingale measure as one outcome law per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emm {
    /// `q[k][i] = Q(X_k = i)`.
    pub q: Vec<Vec<f64>>,
}

fn is_singular(m: &DMatrix<f64>) -> bool {
    let sv = m.singular_values();
    let max = sv.max();
    max == 0.0 || sv.min() <= SINGULAR_TOL * max
}

fn solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    if is_singular(&m) {
        return None;
    }
    m.lu().solve(&rhs)
}

/// `[M^0 S ⋯ M^d S ; 1 ⋯ 1]`.
fn emm_matrix(market: &Market, k: usize, s: &DVector<f64>) -> DMatrix<f64> {
    let d = market.dim();
    let mut a = DMatrix::from_element(d + 1, d + 1, 1.0);
    for i in 0..=d {
        let ms = market.matrix(k, i) * s;
        for j in 0..d {
            a[(j, i)] = ms[j];
        }
    }
    a
}

fn atom_label(space: PathSpace, idx: usize, n: isize) -> String {
    Path(space.prefix(idx, n)).to_string()
}

/// Representative path index of every `F_n`-atom.
fn atom_starts(space: PathSpace, n: isize) -> impl Iterator<Item = usize> {
    let size = space.atom_size(n).expect("valid time");
    (0..space.len()).step_by(size)
}

pub fn find_emm(market: &Market) -> Result<Emm> {
    let space = market.space;
    let d = space.dim();
    let prices = build_prices(market);
    let mut q = Vec::with_capacity(space.steps());
    for k in 0..space.steps() {
        let r = market.rates[k];
        let mut step_q: Option<DVector<f64>> = None;
        for idx in atom_starts(space, k as isize - 1) {
            let s = if market.diagonal {
                DVector::from_element(d, 1.0)
            } else {
                DVector::from_vec(prices.stock_vector(k as isize - 1, idx))
            };
            let mut rhs = s.scale(r).resize_vertically(d + 1, 1.0);
            rhs[d] = 1.0;
            let sol =
                solve(emm_matrix(market, k, &s), rhs).ok_or_else(|| Error::IncompleteMarket {
                    step: k,
                    atom: atom_label(space, idx, k as isize - 1),
                })?;
            if sol.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Arbitrage {
                    step: k,
                    q: sol.iter().copied().collect(),
                });
            }
            match &step_q {
                None => step_q = Some(sol),
                Some(prev) if (prev - &sol).amax() > MODEL_TOL => {
                    return Err(Error::StateDependentEmm { step: k })
                }
                Some(_) => {}
            }
            if market.diagonal {
                break;
            }
        }
        q.push(step_q.expect("at least one atom").iter().copied().collect());
    }
    Ok(Emm { q })
}

fn check_emm(market: &Market, emm: &Emm) -> Result<()> {
    let space = market.space;
    if emm.q.len() != space.steps() || emm.q.iter().any(|q| q.len() != space.outcomes()) {
        return Err(Error::InvalidMarket(
            "EMM shape does not match the market".into(),
        ));
    }
    Ok(())
}

/// Obtuse walk with step laws `q_k`, outcome `i` ↔ scenario `i`.
pub fn emm_walk(market: &Market, emm: &Emm) -> Result<WalkSpec> {
    check_emm(market, emm)?;
    construct_obtuse(&emm.q)
}

fn q_walk(market: &Market, emm: &Emm) -> Result<Walk> {
    Walk::with_options(&emm_walk(market, emm)?, DEFAULT_WALK_TOL, u64::MAX)
}

/// `V_{-1} = E_Q[F] / B_N`.
pub fn price_claim(market: &Market, emm: &Emm, f: &PathTable) -> Result<f64> {
    let w = q_walk(market, emm)?;
    if f.space() != market.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(expectation(&w, f)? / market.bond(market.horizon() as isize))
}

/// `(β_n, γ_n)` for `n ∈ [-1, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    space: PathSpace,
    // index n+1
    beta: Vec<PathTable>,
    gamma: Vec<Vec<PathTable>>,
}

impl Strategy {
    /// `beta[n+1] = β_n`, `gamma[n+1][j-1] = γ_n^j`.
    pub fn new(space: PathSpace, beta: Vec<PathTable>, gamma: Vec<Vec<PathTable>>) -> Result<Self> {
        let len = space.steps() + 1;
        if beta.len() != len || gamma.len() != len {
            return Err(Error::Domain(format!(
                "strategy needs {len} times (-1..=N)"
            )));
        }
        if gamma.iter().any(|g| g.len() != space.dim())
            || beta
                .iter()
                .chain(gamma.iter().flatten())
                .any(|t| t.space() != space)
        {
            return Err(Error::SpaceMismatch);
        }
        Ok(Strategy { space, beta, gamma })
    }

    pub fn space(&self) -> PathSpace {
        self.space
    }

    pub fn beta(&self, n: isize) -> &PathTable {
        &self.beta[(n + 1) as usize]
    }

    pub fn gamma(&self, n: isize, j: usize) -> &PathTable {
        &self.gamma[(n + 1) as usize][j - 1]
    }

    pub fn gamma_mut(&mut self, n: isize, j: usize) -> &mut PathTable {
        &mut self.gamma[(n + 1) as usize][j - 1]
    }

    /// `V_n = β_n B_n + ⟨γ_n, S_n⟩`.
    pub fn value(&self, prices: &Prices, n: isize) -> PathTable {
        let d = self.space.dim();
        PathTable::from_fn(self.space, |idx| {
            self.beta(n).get(idx) * prices.bond(n)
                + (1..=d)
                    .map(|j| self.gamma(n, j).get(idx) * prices.stock(n, j, idx))
                    .sum::<f64>()
        })
    }

    /// Rows `(n, F_n-atom label, β_n, γ_n, V_n)`, one per time and atom.
    pub fn rows(&self, prices: &Prices) -> Vec<StrategyRow> {
        let space = self.space;
        let mut out = Vec::new();
        for n in -1..=space.horizon() as isize {
            let v = self.value(prices, n);
            for idx in atom_starts(space, n) {
                out.push(StrategyRow {
                    time: n,
                    atom: atom_label(space, idx, n),
                    beta: self.beta(n).get(idx),
                    gamma: (1..=space.dim())
                        .map(|j| self.gamma(n, j).get(idx))
                        .collect(),
                    value: v.get(idx),
                });
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Strategy) -> f64 {
        if self.space != other.space {
            return f64::INFINITY;
        }
        self.beta
            .iter()
            .chain(self.gamma.iter().flatten())
            .zip(other.beta.iter().chain(other.gamma.iter().flatten()))
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRow {
    pub time: isize,
    pub atom: String,
    pub beta: f64,
    pub gamma: Vec<f64>,
    pub value: f64,
}

fn check_claim(market: &Market, f: &PathTable) -> Result<()> {
    if f.space() != market.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// Backward atom-wise replication: on each `F_{n-1}`-atom solve
/// `β_n B_n + ⟨γ_n, S_n(i)⟩ = V_n(i)` over the `d+1` scenarios.
pub fn hedge_replicate(market: &Market, emm: &Emm, f: &PathTable) -> Result<Strategy> {
    check_claim(market, f)?;
    let w = q_walk(market, emm)?;
    let space = market.space;
    let d = space.dim();
    let prices = build_prices(market);
    let b_n = market.bond(space.horizon() as isize);
    let mut beta = vec![PathTable::zeros(space); space.steps() + 1];
    let mut gamma = vec![vec![PathTable::zeros(space); d]; space.steps() + 1];
    for n in 0..space.steps() {
        let scale = prices.bond(n as isize) / b_n;
        let v = conditional_expectation(&w, f, n as isize)?.scale(scale);
        let block = space.atom_size(n as isize - 1)?;
        let mut bvals = vec![0.0; space.len()];
        let mut gvals = vec![vec![0.0; space.len()]; d];
        for start in atom_starts(space, n as isize - 1) {
            let scenario = |i: usize| space.mutate_index(start, n, i);
            let a = DMatrix::from_fn(d + 1, d + 1, |i, c| {
                if c == 0 {
                    prices.bond(n as isize)
                } else {
                    prices.stock(n as isize, c, scenario(i))
                }
            });
            let rhs = DVector::from_fn(d + 1, |i, _| v.get(scenario(i)));
            let sol = solve(a, rhs).ok_or_else(|| Error::IncompleteMarket {
                step: n,
                atom: atom_label(space, start, n as isize - 1),
            })?;
            for idx in start..start + block {
                bvals[idx] = sol[0];
                for j in 0..d {
                    gvals[j][idx] = sol[j + 1];
                }
            }
        }
        beta[n + 1] = PathTable::new(space, bvals)?;
        gamma[n + 1] = gvals
            .into_iter()
            .map(|g| PathTable::new(space, g))
            .collect::<Result<_>>()?;
    }
    beta[0] = PathTable::constant(space, expectation(&w, f)? / b_n);
    Strategy::new(space, beta, gamma)
}

/// Clark–Ocone hedge for diagonal models with a uniform rate:
/// `γ_n^j = (1+r)^{n-N} E_Q[D_n^j F | F_{n-1}] · Y_n^j / (S_n^j − (1+r) S_{n-1}^j)`,
/// `β_n = (1+r)^{-N-1} E_Q[F | F_n] − (1+r)^{-n-1} ⟨γ_n, S_n⟩`.
pub fn hedge_clark_ocone(market: &Market, emm: &Emm, f: &PathTable) -> Result<Strategy> {
    check_claim(market, f)?;
    if !market.is_diagonal() {
        return Err(Error::Model(
            "Clark–Ocone hedging needs diagonal scenario matrices; use hedge_replicate".into(),
        ));
    }
    let r = market.uniform_rate().ok_or_else(|| {
        Error::Model("Clark–Ocone hedging needs a uniform rate; use hedge_replicate".into())
    })?;
    let w = q_walk(market, emm)?;
    let space = market.space;
    let d = space.dim();
    let big_n = space.horizon() as i32;
    let prices = build_prices(market);
    let (mean, xi) = clark_ocone(&w, f)?;
    let mut beta = vec![PathTable::zeros(space); space.steps() + 1];
    let mut gamma = vec![vec![PathTable::zeros(space); d]; space.steps() + 1];
    for n in 0..space.steps() {
        let ni = n as isize;
        let block = space.atom_size(ni - 1)?;
        for j in 1..=d {
            let mut vals = vec![0.0; space.len()];
            for start in atom_starts(space, ni - 1) {
                let ratio = predictable_ratio(&w, &prices, r, n, j, start)?;
                let g = (1.0 + r).powi(n as i32 - big_n) * xi.get(n, j).get(start) * ratio;
                vals[start..start + block].iter_mut().for_each(|v| *v = g);
            }
            gamma[n + 1][j - 1] = PathTable::new(space, vals)?;
        }
        let head = conditional_expectation(&w, f, ni)?;
        let disc_head = (1.0 + r).powi(-big_n - 1);
        let disc_n = (1.0 + r).powi(-(n as i32) - 1);
        let b = PathTable::from_fn(space, |idx| {
            let gs: f64 = (1..=d)
                .map(|j| gamma[n + 1][j - 1].get(idx) * prices.stock(ni, j, idx))
                .sum();
            disc_head * head.get(idx) - disc_n * gs
        });
        beta[n + 1] = b;
    }
    beta[0] = PathTable::constant(space, mean * (1.0 + r).powi(-big_n - 1));
    Strategy::new(space, beta, gamma)
}

/// `Y_n^j / (S_n^j − (1+r) S_{n-1}^j)` on the `F_{n-1}`-atom at `start`,
/// required to be the same on every scenario.
fn predictable_ratio(
    w: &Walk,
    prices: &Prices,
    r: f64,
    n: usize,
    j: usize,
    start: usize,
) -> Result<f64> {
    let space = w.space();
    let mut ratios = Vec::with_capacity(space.outcomes());
    for i in 0..space.outcomes() {
        let idx = space.mutate_index(start, n, i);
        let y = w.value(n, i, j);
        let ds =
            prices.stock(n as isize, j, idx) - (1.0 + r) * prices.stock(n as isize - 1, j, idx);
        let scale = prices.stock(n as isize - 1, j, idx).abs().max(1.0);
        if ds.abs() <= MODEL_TOL * scale {
            if y.abs() > MODEL_TOL {
                return Err(Error::Model(format!(
                    "asset {j} does not move in scenario {i} at step {n} while Y_{n}^{j} ≠ 0; use hedge_replicate"
                )));
            }
            continue;
        }
        ratios.push(y / ds);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if ratios.is_empty() {
        return Ok(0.0);
    }
    if hi - lo > MODEL_TOL * lo.abs().max(hi.abs()).max(1.0) {
        return Err(Error::Model(format!(
            "hedge ratio for asset {j} at step {n} depends on the scenario (range [{lo}, {hi}]); use hedge_replicate"
        )));
    }
    Ok(ratios[0])
}

/// Worst residual of each structural identity of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    pub predictability: f64,
    pub self_financing: f64,
    pub telescoping: f64,
    pub discounted: f64,
    pub decomposition: f64,
    pub terminal: f64,
}

impl VerifyReport {
    pub fn checks(&self) -> [(&'static str, f64); 6] {
        [
            ("predictability", self.predictability),
            ("self_financing", self.self_financing),
            ("telescoping", self.telescoping),
            ("discounted", self.discounted),
            ("decomposition", self.decomposition),
            ("terminal", self.terminal),
        ]
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.checks().iter().all(|(_, r)| *r <= tol)
    }
}

pub fn verify_strategy(
    market: &Market,
    strategy: &Strategy,
    f: &PathTable,
) -> Result<VerifyReport> {
    check_claim(market, f)?;
    let space = market.space;
    if strategy.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let d = space.dim();
    let horizon = space.horizon() as isize;
    let prices = build_prices(market);
    let max_over = |g: &dyn Fn(usize) -> f64| (0..space.len()).map(g).fold(0.0, f64::max);

    let mut predictability: f64 = 0.0;
    for n in -1..=horizon {
        let atom = (n - 1).max(-1);
        predictability = predictability.max(strategy.beta(n).measurability_residual(atom)?);
        for j in 1..=d {
            predictability = predictability.max(strategy.gamma(n, j).measurability_residual(atom)?);
        }
    }

    let mut self_financing: f64 = 0.0;
    for n in -1..horizon {
        let r = max_over(&|idx| {
            let db = strategy.beta(n + 1).get(idx) - strategy.beta(n).get(idx);
            let dg: f64 = (1..=d)
                .map(|j| {
                    (strategy.gamma(n + 1, j).get(idx) - strategy.gamma(n, j).get(idx))
                        * prices.stock(n, j, idx)
                })
                .sum();
            (prices.bond(n) * db + dg).abs()
        });
        self_financing = self_financing.max(r);
    }

    let values: Vec<PathTable> = (-1..=horizon).map(|n| strategy.value(&prices, n)).collect();
    let v = |n: isize| &values[(n + 1) as usize];

    let mut telescoping: f64 = 0.0;
    let mut acc = v(-1).clone();
    for n in 0..=horizon {
        acc = PathTable::from_fn(space, |idx| {
            let gains: f64 = (1..=d)
                .map(|j| {
                    strategy.gamma(n, j).get(idx)
                        * (prices.stock(n, j, idx) - prices.stock(n - 1, j, idx))
                })
                .sum();
            acc.get(idx) + strategy.beta(n).get(idx) * (prices.bond(n) - prices.bond(n - 1)) + gains
        });
        telescoping = telescoping.max(acc.max_abs_diff(v(n)));
    }

    let mut discounted: f64 = 0.0;
    for n in -1..horizon {
        let r = max_over(&|idx| {
            let (b0, b1) = (prices.bond(n), prices.bond(n + 1));
            let dv = v(n + 1).get(idx) / b1 - v(n).get(idx) / b0;
            let ds: f64 = (1..=d)
                .map(|j| {
                    strategy.gamma(n + 1, j).get(idx)
                        * (prices.stock(n + 1, j, idx) / b1 - prices.stock(n, j, idx) / b0)
                })
                .sum();
            (dv - ds).abs()
        });
        discounted = discounted.max(r);
    }

    // V_n = (1+r_n) V_{n-1} + ⟨γ_n, (M_n^{X_n} − r_n I) S_{n-1}⟩, unrolled
    let mut decomposition: f64 = 0.0;
    let mut acc = v(-1).clone();
    for n in 0..=horizon {
        let nu = n as usize;
        let r = market.rates[nu];
        acc = PathTable::from_fn(space, |idx| {
            let s_prev = DVector::from_vec(prices.stock_vector(n - 1, idx));
            let excess = market.matrix(nu, space.outcome(idx, nu)) * &s_prev - s_prev.scale(r);
            let gains: f64 = (1..=d)
                .map(|j| strategy.gamma(n, j).get(idx) * excess[j - 1])
                .sum();
            (1.0 + r) * acc.get(idx) + gains
        });
        decomposition = decomposition.max(acc.max_abs_diff(v(n)));
    }

    Ok(VerifyReport {
        predictability,
        self_financing,
        telescoping,
        discounted,
        decomposition,
        terminal: v(horizon).max_abs_diff(f),
    })
}

/// One-period completeness at step `k` on the `F_{k-1}`-atom containing
/// `idx`: `(augmented vectors ((I+M^i)S, 1) independent, EMM matrix nonsingular)`.
pub fn one_period_completeness(market: &Market, k: usize, idx: usize) -> Result<(bool, bool)> {
    market.space.check_step(k)?;
    if idx >= market.space.len() {
        return Err(Error::range(
            "path index",
            idx as i64,
            0,
            market.space.len() as i64 - 1,
        ));
    }
    let d = market.dim();
    let prices = build_prices(market);
    let s = DVector::from_vec(prices.stock_vector(k as isize - 1, idx));
    let mut aug = DMatrix::from_element(d + 1, d + 1, 1.0);
    for i in 0..=d {
        let next = &s + market.matrix(k, i) * &s;
        for j in 0..d {
            aug[(j, i)] = next[j];
        }
    }
    Ok((!is_singular(&aug), !is_singular(&emm_matrix(market, k, &s))))
}
