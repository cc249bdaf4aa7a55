//! Brute-force oracles and random generators shared by the integration tests.
//!
//! The oracle deliberately avoids the library's index arithmetic: it works on
//! explicit `Path` vectors and groups atoms through a hash map of prefixes.
#![allow(dead_code)]

use std::collections::HashMap;

use obtuse_core::integrals::{Kernel, VectorProcess};
use obtuse_core::omega::{enumerate_paths, Path, PathTable};
use obtuse_core::walk::Walk;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Oracle<'a> {
    pub walk: &'a Walk,
    pub paths: Vec<Path>,
    pub probs: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(walk: &'a Walk) -> Self {
        let paths = enumerate_paths(walk.dim(), walk.horizon()).unwrap();
        let probs = paths
            .iter()
            .map(|p| {
                p.0.iter()
                    .enumerate()
                    .map(|(n, &i)| walk.probability(n, i))
                    .product()
            })
            .collect();
        Oracle { walk, paths, probs }
    }

    pub fn y(&self, path: &Path, n: usize, j: usize) -> f64 {
        self.walk.vector(n, path.0[n])[j - 1]
    }

    pub fn table(&self, f: impl Fn(&Path) -> f64) -> PathTable {
        PathTable::new(self.walk.space(), self.paths.iter().map(f).collect()).unwrap()
    }

    pub fn e(&self, f: &PathTable) -> f64 {
        self.probs.iter().zip(f.values()).map(|(p, x)| p * x).sum()
    }

    pub fn e_prod(&self, f: &PathTable, g: &PathTable) -> f64 {
        self.probs
            .iter()
            .zip(f.values().iter().zip(g.values()))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }

    /// `E[F | F_n]` by grouping paths on their first `n+1` outcomes.
    pub fn cond(&self, f: &PathTable, n: isize) -> PathTable {
        let key = |p: &Path| p.0[..(n + 1) as usize].to_vec();
        let mut acc: HashMap<Vec<usize>, (f64, f64)> = HashMap::new();
        for ((p, pr), x) in self.paths.iter().zip(&self.probs).zip(f.values()) {
            let e = acc.entry(key(p)).or_insert((0.0, 0.0));
            e.0 += pr * x;
            e.1 += pr;
        }
        self.table(|p| {
            let (s, m) = acc[&key(p)];
            s / m
        })
    }

    /// `D_k^j F` by enumerating the `d+1` modifications of each path.
    pub fn grad(&self, f: &PathTable, k: usize, j: usize) -> PathTable {
        let index: HashMap<&Path, usize> =
            self.paths.iter().enumerate().map(|(i, p)| (p, i)).collect();
        self.table(|p| {
            (0..=self.walk.dim())
                .map(|i| {
                    let mut q = p.clone();
                    q.0[k] = i;
                    self.walk.probability(k, i) * self.walk.vector(k, i)[j - 1] * f.get(index[&q])
                })
                .sum()
        })
    }

    /// `I^r(f) = Σ over ordered distinct tuples`, using the symmetric extension.
    pub fn multiple_integral(&self, f: &Kernel) -> PathTable {
        let r = f.order();
        let d = self.walk.dim();
        let steps = self.walk.horizon() + 1;
        if r == 0 {
            return self.table(|_| f.values()[0]);
        }
        let mut tuples = Vec::new();
        ordered_distinct(steps, r, &mut Vec::new(), &mut tuples);
        let coords = all_coords(d, r);
        self.table(|p| {
            let mut total = 0.0;
            for t in &tuples {
                for c in &coords {
                    let prod: f64 = t.iter().zip(c).map(|(&s, &k)| self.y(p, s, k)).product();
                    total += f.value_at(t, c).unwrap() * prod;
                }
            }
            total
        })
    }
}

fn ordered_distinct(steps: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == r {
        out.push(cur.clone());
        return;
    }
    for s in 0..steps {
        if !cur.contains(&s) {
            cur.push(s);
            ordered_distinct(steps, r, cur, out);
            cur.pop();
        }
    }
}

pub fn all_coords(d: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|c| {
                (1..=d).map(move |k| {
                    let mut c = c.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    out
}

/// Probability vector with entries bounded away from zero.
pub fn random_probs(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..=d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_walk(rng: &mut impl Rng, d: usize, horizon: usize) -> Walk {
    let probs: Vec<Vec<f64>> = (0..=horizon).map(|_| random_probs(rng, d)).collect();
    Walk::from_probabilities(&probs).unwrap()
}

pub fn random_table(rng: &mut impl Rng, walk: &Walk) -> PathTable {
    let values = (0..walk.space().len())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    PathTable::new(walk.space(), values).unwrap()
}

pub fn random_kernel(rng: &mut impl Rng, walk: &Walk, order: usize) -> Kernel {
    let mut k = Kernel::zeros(walk.dim(), walk.horizon(), order);
    for t in 0..k.tuples().len() {
        k.components_mut(t)
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
    k
}

/// `U_n` built from a random `F_{n-1}`-measurable table per coordinate.
pub fn random_predictable(rng: &mut impl Rng, walk: &Walk) -> VectorProcess {
    let o = Oracle::new(walk);
    let components = (0..=walk.horizon())
        .map(|n| {
            (0..walk.dim())
                .map(|_| o.cond(&random_table(rng, walk), n as isize - 1))
                .collect()
        })
        .collect();
    VectorProcess::new(walk.space(), components).unwrap()
}

pub fn random_process(rng: &mut impl Rng, walk: &Walk) -> VectorProcess {
    let components = (0..=walk.horizon())
        .map(|_| (0..walk.dim()).map(|_| random_table(rng, walk)).collect())
        .collect();
    VectorProcess::new(walk.space(), components).unwrap()
}

pub fn fixture_d2(horizon: usize) -> Walk {
    Walk::iid_from_probabilities(&[0.25, 0.25, 0.5], horizon).unwrap()
}
