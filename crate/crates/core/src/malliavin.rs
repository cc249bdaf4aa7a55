//! Gradient `D`, divergence `δ` and the Clark–Ocone representation.
//!
//! `D` is computed as the finite difference
//! `D_k^j F(ω) = Σ_i c_i^j(k) F(ω_i^k)`, defined for every table. The
//! chaos-lowering form is kept as an independent cross-check.

use rayon::prelude::*;

use crate::chaos::ChaosCoefficients;
use crate::error::{Error, Result};
use crate::integrals::{
    integrate_predictable, multiple_integral, pair_with_increments, VectorProcess,
};
use crate::omega::{conditional_expectation, expectation, variance, PathSpace, PathTable};
use crate::walk::Walk;

/// Default absolute tolerance for martingale validation, scaled by `max(1, ‖M‖_∞)`.
pub const MARTINGALE_TOL: f64 = 1e-10;

/// `D_k^j F` for every `k ∈ [0,N]` and `j ∈ [1,d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    space: PathSpace,
    // [k][j-1]
    tables: Vec<Vec<PathTable>>,
}

impl GradientField {
    pub fn space(&self) -> PathSpace {
        self.space
    }

    /// `D_k^j F`, `j` 1-based.
    pub fn get(&self, k: usize, j: usize) -> &PathTable {
        &self.tables[k][j - 1]
    }

    pub fn at(&self, k: usize) -> &[PathTable] {
        &self.tables[k]
    }

    pub fn tables(&self) -> &[Vec<PathTable>] {
        &self.tables
    }

    /// The field as a (generally anticipating) vector process.
    pub fn to_process(&self) -> VectorProcess {
        VectorProcess::new(self.space, self.tables.clone()).expect("well-formed")
    }

    /// `Σ_k ‖D_k F‖²` pointwise.
    pub fn squared_norm(&self) -> PathTable {
        self.to_process().squared_norm()
    }

    /// Rows `(k, j, path index, value)` in `k`, `j`, path order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.tables.iter().enumerate().flat_map(|(k, comps)| {
            comps.iter().enumerate().flat_map(move |(j, t)| {
                t.values()
                    .iter()
                    .enumerate()
                    .map(move |(idx, &v)| (k, j + 1, idx, v))
            })
        })
    }

    pub fn max_abs_diff(&self, other: &GradientField) -> f64 {
        if self.space != other.space {
            return f64::INFINITY;
        }
        self.tables
            .iter()
            .flatten()
            .zip(other.tables.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

fn check_space(walk: &Walk, table: &PathTable) -> Result<()> {
    if table.space() != walk.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `D_k^j F` for a single `(k, j)`, in the centered form
/// `Σ_i c_i^j(k) (F(ω_i^k) − F(ω))`, which equals the plain sum because
/// `Σ_i c_i^j(k) = 0` and vanishes exactly when `F` does not depend on `X_k`.
pub fn gradient_at(walk: &Walk, f: &PathTable, k: usize, j: usize) -> Result<PathTable> {
    check_space(walk, f)?;
    let space = walk.space();
    space.check_step(k)?;
    space.check_coord(j)?;
    let c: Vec<f64> = (0..space.outcomes()).map(|i| walk.c(k, i, j)).collect();
    let values = (0..space.len())
        .map(|idx| {
            let here = f.get(idx);
            c.iter()
                .enumerate()
                .map(|(i, ci)| ci * (f.get(space.mutate_index(idx, k, i)) - here))
                .sum()
        })
        .collect();
    PathTable::new(space, values)
}

pub fn gradient(walk: &Walk, f: &PathTable) -> Result<GradientField> {
    check_space(walk, f)?;
    let space = walk.space();
    let tables = (0..space.steps())
        .into_par_iter()
        .map(|k| {
            (1..=space.dim())
                .map(|j| gradient_at(walk, f, k, j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientField { space, tables })
}

/// `Σ_r r · I^{r-1}(f_r^j(*,k) 1_{Δ_r}(*,k))`.
pub fn gradient_chaos(
    walk: &Walk,
    coeffs: &ChaosCoefficients,
    k: usize,
    j: usize,
) -> Result<PathTable> {
    let space = walk.space();
    space.check_step(k)?;
    space.check_coord(j)?;
    if coeffs.dim() != space.dim() || coeffs.horizon() > space.horizon() {
        return Err(Error::Domain("coefficients do not fit the walk".into()));
    }
    let mut out = PathTable::zeros(space);
    for f in coeffs.kernels() {
        let lowered = f.pin_last(k, j)?.scale(f.order() as f64);
        out = &out + &multiple_integral(walk, &lowered)?;
    }
    Ok(out)
}

/// `δ(X) = Σ_k ⟨X_k, Y_k⟩ − Σ_k Σ_{s,t} D_k^s(X_k^t) Y_k^s Y_k^t`.
pub fn divergence(walk: &Walk, x: &VectorProcess) -> Result<PathTable> {
    let space = walk.space();
    if x.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let d = space.dim();
    let mut out = pair_with_increments(walk, x)?.into_values();
    for k in 0..space.steps() {
        for t in 1..=d {
            let xt = x.get(k, t);
            for s in 1..=d {
                let dx = gradient_at(walk, xt, k, s)?;
                for (idx, o) in out.iter_mut().enumerate() {
                    let y = walk.vector(k, space.outcome(idx, k));
                    *o -= dx.get(idx) * y[s - 1] * y[t - 1];
                }
            }
        }
    }
    PathTable::new(space, out)
}

/// `ξ_k = E[D_k F | F_{k-1}]` for `k > n`, zero for `k ≤ n`.
fn predictable_gradient(walk: &Walk, f: &PathTable, n: isize) -> Result<VectorProcess> {
    let space = walk.space();
    let components = (0..space.steps())
        .into_par_iter()
        .map(|k| {
            (1..=space.dim())
                .map(|j| {
                    if (k as isize) <= n {
                        Ok(PathTable::zeros(space))
                    } else {
                        conditional_expectation(walk, &gradient_at(walk, f, k, j)?, k as isize - 1)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    VectorProcess::new(space, components)
}

/// `F = E[F] + Σ_k ⟨ξ_k, Y_k⟩` with `ξ` predictable.
pub fn clark_ocone(walk: &Walk, f: &PathTable) -> Result<(f64, VectorProcess)> {
    check_space(walk, f)?;
    Ok((expectation(walk, f)?, predictable_gradient(walk, f, -1)?))
}

/// `F = E[F | F_n] + Σ_{k>n} ⟨ξ_k, Y_k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClarkOconeFrom {
    pub n: isize,
    pub head: PathTable,
    /// Zero at times `k ≤ n`.
    pub tail: VectorProcess,
}

impl ClarkOconeFrom {
    pub fn reconstruct(&self, walk: &Walk) -> Result<PathTable> {
        Ok(&self.head + &integrate_predictable(walk, &self.tail)?)
    }
}

pub fn clark_ocone_from(walk: &Walk, f: &PathTable, n: isize) -> Result<ClarkOconeFrom> {
    check_space(walk, f)?;
    walk.space().check_time(n)?;
    Ok(ClarkOconeFrom {
        n,
        head: conditional_expectation(walk, f, n)?,
        tail: predictable_gradient(walk, f, n)?,
    })
}

/// Predictable integrands `γ^i` with `M_n^i = M_{-1}^i + Σ_{k≤n} ⟨γ_k^i, Y_k⟩`,
/// where `M_{-1} = E[M_0]`. `m.get(n, i)` is `M_n^i`.
pub fn predictable_representation(
    walk: &Walk,
    m: &VectorProcess,
    tol: f64,
) -> Result<Vec<VectorProcess>> {
    let space = walk.space();
    if m.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let scale = m
        .components()
        .iter()
        .flatten()
        .fold(1.0f64, |s, t| s.max(t.max_abs()));
    let limit = tol * scale;
    for n in 0..space.steps() {
        for i in 1..=space.dim() {
            let mn = m.get(n, i);
            let adapted = mn.measurability_residual(n as isize)?;
            if adapted > limit {
                return Err(Error::Contract(format!(
                    "M_{n}^{i} is not F_{n}-measurable (residual {adapted:.3e})"
                )));
            }
            if n > 0 {
                let drift = conditional_expectation(walk, mn, n as isize - 1)?
                    .max_abs_diff(m.get(n - 1, i));
                if drift > limit {
                    return Err(Error::Contract(format!(
                        "martingale property fails at n = {n}, coordinate {i} (residual {drift:.3e})"
                    )));
                }
            }
        }
    }
    (1..=space.dim())
        .map(|i| {
            let components = (0..space.steps())
                .map(|k| {
                    (1..=space.dim())
                        .map(|j| {
                            let g = gradient_at(walk, m.get(k, i), k, j)?;
                            conditional_expectation(walk, &g, k as isize - 1)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            VectorProcess::new(space, components)
        })
        .collect()
}

/// `(Var F, E[Σ_k ‖D_k F‖²])`; the first never exceeds the second.
pub fn poincare_check(walk: &Walk, f: &PathTable) -> Result<(f64, f64)> {
    let var = variance(walk, f)?;
    let bound = expectation(walk, &gradient(walk, f)?.squared_norm())?;
    Ok((var, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::Path;
    use crate::walk::increment_rv;

    fn y(w: &Walk, n: usize) -> PathTable {
        increment_rv(w, n, 1).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let w = Walk::iid_from_probabilities(&[0.25, 0.25, 0.5], 1).unwrap();
        let g = gradient(&w, &increment_rv(&w, 0, 1).unwrap()).unwrap();
        assert!(
            g.get(0, 1)
                .max_abs_diff(&PathTable::constant(w.space(), 1.0))
                < 1e-14
        );
        assert!(g.get(0, 2).max_abs() < 1e-14);
        assert!(g.at(1).iter().all(|t| t.max_abs() < 1e-14));

        let g = gradient(&w, &PathTable::constant(w.space(), 3.0)).unwrap();
        assert!(g.tables().iter().flatten().all(|t| t.max_abs() < 1e-14));

        let b = Walk::symmetric_bernoulli(1);
        let f = &y(&b, 0) * &y(&b, 1);
        let g = gradient(&b, &f).unwrap();
        assert!(g.get(0, 1).max_abs_diff(&y(&b, 1)) < 1e-15);
        assert!(g.get(1, 1).max_abs_diff(&y(&b, 0)) < 1e-15);
    }

    #[test]
    fn range_errors() {
        let b = Walk::symmetric_bernoulli(1);
        let f = PathTable::zeros(b.space());
        assert!(matches!(
            gradient_at(&b, &f, 2, 1),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            gradient_at(&b, &f, 0, 0),
            Err(Error::Range { .. })
        ));
        assert!(clark_ocone_from(&b, &f, -2).is_err());
        assert!(clark_ocone_from(&b, &f, 2).is_err());
    }

    #[test]
    fn divergence_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let x = VectorProcess::deterministic(b.space(), &[vec![1.0], vec![0.0]]).unwrap();
        assert!(divergence(&b, &x).unwrap().max_abs_diff(&y(&b, 0)) < 1e-15);

        let x = VectorProcess::new(
            b.space(),
            vec![vec![y(&b, 0)], vec![PathTable::zeros(b.space())]],
        )
        .unwrap();
        assert!(!x.is_predictable());
        assert!(divergence(&b, &x).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn clark_ocone_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let f = &y(&b, 0) * &y(&b, 1);
        let (mean, xi) = clark_ocone(&b, &f).unwrap();
        assert_eq!(mean, 0.0);
        assert!(xi.get(0, 1).max_abs() < 1e-15);
        assert!(xi.get(1, 1).max_abs_diff(&y(&b, 0)) < 1e-15);

        let f = PathTable::indicator(b.space(), &Path(vec![0, 0])).unwrap();
        let (mean, xi) = clark_ocone(&b, &f).unwrap();
        assert!((mean - 0.25).abs() < 1e-15);
        assert!(
            xi.get(0, 1)
                .max_abs_diff(&PathTable::constant(b.space(), 0.25))
                < 1e-15
        );
        let expect = y(&b, 0).map(|v| (1.0 + v) / 4.0);
        assert!(xi.get(1, 1).max_abs_diff(&expect) < 1e-15);
        let back = integrate_predictable(&b, &xi).unwrap().map(|v| v + mean);
        assert!(back.max_abs_diff(&f) < 1e-15);

        let from = clark_ocone_from(&b, &f, 1).unwrap();
        assert_eq!(from.head, f);
        assert!(from.tail.max_abs_diff(&VectorProcess::zeros(b.space())) == 0.0);
    }

    #[test]
    fn martingales() {
        let b = Walk::symmetric_bernoulli(2);
        let s = b.space();
        let walk_sum = |n: usize| (0..=n).fold(PathTable::zeros(s), |acc, k| &acc + &y(&b, k));
        let m = VectorProcess::new(s, (0..3).map(|n| vec![walk_sum(n)]).collect()).unwrap();
        let g = predictable_representation(&b, &m, MARTINGALE_TOL).unwrap();
        let ones = VectorProcess::deterministic(s, &vec![vec![1.0]; 3]).unwrap();
        assert!(g[0].max_abs_diff(&ones) < 1e-14);

        let not_mart = VectorProcess::new(
            s,
            (0..3).map(|n| vec![walk_sum(n).map(|v| v * v)]).collect(),
        )
        .unwrap();
        assert!(matches!(
            predictable_representation(&b, &not_mart, MARTINGALE_TOL),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn poincare_examples() {
        let b = Walk::symmetric_bernoulli(1);
        let (v, bd) = poincare_check(&b, &y(&b, 0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15 && (bd - 1.0).abs() < 1e-15);
        let (v, bd) = poincare_check(&b, &(&y(&b, 0) * &y(&b, 1))).unwrap();
        assert!((v - 1.0).abs() < 1e-15 && (bd - 2.0).abs() < 1e-15);
        assert_eq!(
            poincare_check(&b, &PathTable::constant(b.space(), 2.0)).unwrap(),
            (0.0, 0.0)
        );
    }
}
