//! Obtuse random walks: per-step outcome vectors `v_i(n) ∈ R^d` with
//! probabilities `p_i(n)`, validated against the normality identities
//! `Σ_i c_i^j(n) = 0` and `Σ_i c_i^j(n) v_i^l(n) = δ^{jl}` where
//! `c_i^j(n) = p_i(n) v_i^j(n)`.
//!
//! Increments are independent across steps; values and probabilities may
//! vary with the step but never with the past of the path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::omega::{product_probabilities, Measure, PathSpace, PathTable, DEFAULT_CAP};

pub const DEFAULT_WALK_TOL: f64 = 1e-10;

/// One step of a walk as read from JSON. `v` may be omitted, in which case
/// the step is completed by [`construct_obtuse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Vec<f64>>>,
}

/// Unvalidated walk description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub d: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub steps: Vec<StepSpec>,
}

impl WalkSpec {
    /// The same step law repeated over `horizon + 1` steps.
    pub fn iid(p: Vec<f64>, v: Vec<Vec<f64>>, horizon: usize) -> Self {
        WalkSpec {
            d: p.len().saturating_sub(1),
            horizon,
            steps: vec![StepSpec { p, v: Some(v) }; horizon + 1],
        }
    }

    /// Fill in every step given only by probabilities.
    pub fn resolve(&self) -> Result<WalkSpec> {
        let mut out = self.clone();
        for step in out.steps.iter_mut() {
            if step.v.is_none() {
                step.v = Some(obtuse_vectors(&step.p)?);
            }
        }
        Ok(out)
    }
}

/// Location and size of the worst residual of one identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub step: usize,
    pub j: usize,
    pub l: usize,
}

impl Residual {
    fn zero() -> Self {
        Residual {
            value: 0.0,
            step: 0,
            j: 0,
            l: 0,
        }
    }

    fn update(&mut self, value: f64, step: usize, j: usize, l: usize) {
        if value > self.value {
            *self = Residual { value, step, j, l };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    /// Worst `|Σ_i c_i^j(n)|` (`l` unused).
    pub mean: Residual,
    /// Worst `|Σ_i c_i^j(n) v_i^l(n) − δ^{jl}|`.
    pub moment: Residual,
    pub errors: Vec<String>,
}

/// Check a walk spec structurally and against both normality identities.
pub fn validate(spec: &WalkSpec, tol: f64) -> ValidationReport {
    let mut errors = Vec::new();
    let mut mean = Residual::zero();
    let mut moment = Residual::zero();
    let d = spec.d;

    if d == 0 {
        errors.push("dimension d must be at least 1".to_string());
    }
    if spec.steps.len() != spec.horizon + 1 {
        errors.push(format!(
            "expected N+1 = {} steps, found {}",
            spec.horizon + 1,
            spec.steps.len()
        ));
    }
    for (n, step) in spec.steps.iter().enumerate() {
        if step.p.len() != d + 1 {
            errors.push(format!(
                "step {n}: {} probabilities, expected d+1 = {}",
                step.p.len(),
                d + 1
            ));
            continue;
        }
        if let Some(i) = step.p.iter().position(|&p| !(p > 0.0)) {
            errors.push(format!(
                "step {n}: probability p_{i} = {} is not positive",
                step.p[i]
            ));
        }
        let total: f64 = step.p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            errors.push(format!("step {n}: probabilities sum to {total}, not 1"));
        }
        let Some(v) = &step.v else {
            errors.push(format!("step {n}: outcome vectors missing"));
            continue;
        };
        if v.len() != d + 1 || v.iter().any(|vi| vi.len() != d) {
            errors.push(format!(
                "step {n}: expected d+1 = {} vectors of length d = {d}",
                d + 1
            ));
            continue;
        }
        for j in 0..d {
            let m: f64 = (0..=d).map(|i| step.p[i] * v[i][j]).sum();
            mean.update(m.abs(), n, j + 1, 0);
            for l in 0..d {
                let s: f64 = (0..=d).map(|i| step.p[i] * v[i][j] * v[i][l]).sum();
                let target = if j == l { 1.0 } else { 0.0 };
                moment.update((s - target).abs(), n, j + 1, l + 1);
            }
        }
    }
    let pass = errors.is_empty() && mean.value <= tol && moment.value <= tol;
    ValidationReport {
        pass,
        mean,
        moment,
        errors,
    }
}

/// Outcome vectors for one step with probabilities `p`.
///
/// Rows `1..=d` of an orthogonal matrix whose row 0 is `(√p_0,…,√p_d)` are
/// obtained by Gram–Schmidt on `e_d, e_{d-1}, …, e_1`, each row signed so its
/// first nonzero entry is positive; `v_i^j = U_{j,i}/√p_i`. This completion
/// has the closed form used below (`P_j = p_0 + … + p_j`).
fn obtuse_vectors(p: &[f64]) -> Result<Vec<Vec<f64>>> {
    if p.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least two outcome probabilities, got {}",
            p.len()
        )));
    }
    if let Some(i) = p.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "degenerate probability vector: p_{i} = {} is not positive",
            p[i]
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    let d = p.len() - 1;
    let mut cumulative = Vec::with_capacity(d + 1);
    let mut acc = 0.0;
    for &x in p {
        acc += x;
        cumulative.push(acc);
    }
    let mut v = vec![vec![0.0; d]; d + 1];
    for j in 1..=d {
        let (prev, cur, pj) = (cumulative[j - 1], cumulative[j], p[j]);
        for (i, vi) in v.iter_mut().enumerate() {
            vi[j - 1] = if i < j {
                (pj / (prev * cur)).sqrt()
            } else if i == j {
                -(prev / (pj * cur)).sqrt()
            } else {
                0.0
            };
        }
    }
    Ok(v)
}

/// Build an obtuse walk from one probability vector per step.
pub fn construct_obtuse(probabilities: &[Vec<f64>]) -> Result<WalkSpec> {
    let first = probabilities
        .first()
        .ok_or_else(|| Error::Domain("at least one step is required".into()))?;
    let d = first.len().saturating_sub(1);
    let steps = probabilities
        .iter()
        .map(|p| {
            if p.len() != d + 1 {
                return Err(Error::Domain(format!(
                    "all steps need d+1 = {} probabilities, got {}",
                    d + 1,
                    p.len()
                )));
            }
            Ok(StepSpec {
                p: p.clone(),
                v: Some(obtuse_vectors(p)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WalkSpec {
        d,
        horizon: probabilities.len() - 1,
        steps,
    })
}

/// A validated obtuse walk together with its path-space measure.
#[derive(Debug, Clone)]
pub struct Walk {
    space: PathSpace,
    probs: Vec<Vec<f64>>,
    vectors: Vec<Vec<Vec<f64>>>,
    path_probs: Vec<f64>,
}

impl Walk {
    pub fn new(spec: &WalkSpec) -> Result<Self> {
        Self::with_options(spec, DEFAULT_WALK_TOL, DEFAULT_CAP)
    }

    pub fn with_options(spec: &WalkSpec, tol: f64, cap: u64) -> Result<Self> {
        let spec = spec.resolve()?;
        let report = validate(&spec, tol);
        if !report.pass {
            let mut reasons = report.errors.clone();
            if reasons.is_empty() {
                reasons.push(format!(
                    "mean residual {:.3e} at step {}, moment residual {:.3e} at step {}",
                    report.mean.value, report.mean.step, report.moment.value, report.moment.step
                ));
            }
            return Err(Error::InvalidWalk(reasons.join("; ")));
        }
        let space = PathSpace::with_cap(spec.d, spec.horizon, cap)?;
        let probs: Vec<Vec<f64>> = spec.steps.iter().map(|s| s.p.clone()).collect();
        let vectors = spec
            .steps
            .iter()
            .map(|s| s.v.clone().expect("resolved"))
            .collect();
        let path_probs = product_probabilities(space, &probs);
        Ok(Walk {
            space,
            probs,
            vectors,
            path_probs,
        })
    }

    pub fn from_probabilities(probabilities: &[Vec<f64>]) -> Result<Self> {
        Self::new(&construct_obtuse(probabilities)?)
    }

    /// `horizon + 1` identical steps with probabilities `p`.
    pub fn iid_from_probabilities(p: &[f64], horizon: usize) -> Result<Self> {
        Self::from_probabilities(&vec![p.to_vec(); horizon + 1])
    }

    /// The walk with `v_0 = +1`, `v_1 = −1`, each with probability 1/2.
    pub fn symmetric_bernoulli(horizon: usize) -> Self {
        Self::new(&WalkSpec::iid(
            vec![0.5, 0.5],
            vec![vec![1.0], vec![-1.0]],
            horizon,
        ))
        .expect("symmetric Bernoulli walk is valid")
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

    /// `v_i^j(n)` with `j` 1-based.
    pub fn value(&self, n: usize, i: usize, j: usize) -> f64 {
        self.vectors[n][i][j - 1]
    }

    /// `v_i(n)` as a slice of length `d`.
    pub fn vector(&self, n: usize, i: usize) -> &[f64] {
        &self.vectors[n][i]
    }

    pub fn probability(&self, n: usize, i: usize) -> f64 {
        self.probs[n][i]
    }

    /// `c_i^j(n) = p_i(n) v_i^j(n)`.
    pub fn c(&self, n: usize, i: usize, j: usize) -> f64 {
        self.probs[n][i] * self.vectors[n][i][j - 1]
    }

    pub fn spec(&self) -> WalkSpec {
        WalkSpec {
            d: self.dim(),
            horizon: self.horizon(),
            steps: self
                .probs
                .iter()
                .zip(&self.vectors)
                .map(|(p, v)| StepSpec {
                    p: p.clone(),
                    v: Some(v.clone()),
                })
                .collect(),
        }
    }
}

impl Measure for Walk {
    fn space(&self) -> PathSpace {
        self.space
    }

    fn step_probability(&self, n: usize, i: usize) -> f64 {
        self.probs[n][i]
    }

    fn path_probabilities(&self) -> &[f64] {
        &self.path_probs
    }
}

/// Coefficients `Φ_{ij}^k(n)` of the structure equation
/// `Y_n^i Y_n^j = δ^{ij} + Σ_k Φ_{ij}^k(n) Y_n^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    dim: usize,
    values: Vec<f64>,
}

impl StructureTensor {
    /// `Φ_{ij}^k`, all indices 1-based.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.values[((i - 1) * d + (j - 1)) * d + (k - 1)]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `Φ_{ij}^k(n) = Σ_m p_m(n) v_m^i(n) v_m^j(n) v_m^k(n)`.
pub fn structure_tensor(walk: &Walk, n: usize) -> Result<StructureTensor> {
    walk.space.check_step(n)?;
    let d = walk.dim();
    let mut values = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                values[(i * d + j) * d + k] = (0..=d)
                    .map(|m| {
                        let v = &walk.vectors[n][m];
                        walk.probs[n][m] * v[i] * v[j] * v[k]
                    })
                    .sum();
            }
        }
    }
    Ok(StructureTensor { dim: d, values })
}

/// Worst pointwise residual of the structure equation at step `n`.
pub fn structure_equation_residual(walk: &Walk, n: usize) -> Result<f64> {
    let phi = structure_tensor(walk, n)?;
    let d = walk.dim();
    let mut worst: f64 = 0.0;
    for m in 0..=d {
        let v = walk.vector(n, m);
        for i in 1..=d {
            for j in 1..=d {
                let delta = if i == j { 1.0 } else { 0.0 };
                let rhs: f64 = delta + (1..=d).map(|k| phi.get(i, j, k) * v[k - 1]).sum::<f64>();
                worst = worst.max((v[i - 1] * v[j - 1] - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// The table `ω ↦ Y_n^j(ω) = v_{ω_n}^j(n)`.
pub fn increment_rv(walk: &Walk, n: usize, j: usize) -> Result<PathTable> {
    walk.space.check_step(n)?;
    walk.space.check_coord(j)?;
    let space = walk.space;
    Ok(PathTable::from_fn(space, |idx| {
        walk.value(n, space.outcome(idx, n), j)
    }))
}
