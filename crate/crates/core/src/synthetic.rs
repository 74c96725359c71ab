//! Synthetic ontologies for scaling measurements.
//!
//! Every generator produces full-rank bases by construction: each description
//! owns at least one coordinate that no other column of its basis touches.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoder::{EncodeError, Encoder};
use crate::ontology::{build_ontology, Declaration, ElementKind, OntologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `d_i = {d_{i-1}, r_i}`: composition depth grows linearly.
    Chain,
    /// Binary trees of roles and descriptions; `d_i = {r_i, d_{2i+1}, d_{2i+2}}`.
    Tree,
    /// Random subsumption DAG (edge probability 0.2) with descriptions mixing
    /// a private role, a few shared roles and an earlier description.
    Dense,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Chain => "chain",
            Shape::Tree => "tree",
            Shape::Dense => "dense",
        })
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chain" => Ok(Shape::Chain),
            "tree" => Ok(Shape::Tree),
            "dense" => Ok(Shape::Dense),
            other => Err(format!("unknown shape `{other}` (expected chain, tree or dense)")),
        }
    }
}

const EDGE_PROBABILITY: f64 = 0.2;

/// An ontology with `n` descriptions of the given shape.
pub fn generate(shape: Shape, n: usize, seed: u64) -> Vec<Declaration> {
    match shape {
        Shape::Chain => chain(n),
        Shape::Tree => tree(n),
        Shape::Dense => dense(n, seed),
    }
}

fn chain(n: usize) -> Vec<Declaration> {
    let mut out: Vec<Declaration> = (0..n).map(|i| Declaration::role(format!("r{i}"), &[])).collect();
    for i in 0..n {
        let role = format!("r{i}");
        let comps = if i == 0 { vec![role] } else { vec![format!("d{}", i - 1), role] };
        out.push(description(format!("d{i}"), Vec::new(), comps));
    }
    out
}

fn tree(n: usize) -> Vec<Declaration> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let parents = if i == 0 { Vec::new() } else { vec![format!("r{}", (i - 1) / 2)] };
        out.push(Declaration { parents, ..Declaration::role(format!("r{i}"), &[]) });
    }
    for i in 0..n {
        let mut comps = vec![format!("r{i}")];
        comps.extend([2 * i + 1, 2 * i + 2].into_iter().filter(|&c| c < n).map(|c| format!("d{c}")));
        out.push(description(format!("d{i}"), Vec::new(), comps));
    }
    out
}

fn dense(n: usize, seed: u64) -> Vec<Declaration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * n);
    // Base roles: b_j ⊆ b_i for i < j with fixed probability, so the DAG is acyclic.
    for j in 0..n {
        let parents: Vec<String> = (0..j).filter(|_| rng.gen_bool(EDGE_PROBABILITY)).map(|i| format!("b{i}")).collect();
        out.push(Declaration { parents, ..Declaration::role(format!("b{j}"), &[]) });
    }
    for i in 0..n {
        out.push(Declaration::role(format!("p{i}"), &[]));
    }
    let base: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let mut comps = vec![format!("p{i}")];
        let shared = 3.min(n);
        comps.extend(base.choose_multiple(&mut rng, shared).map(|b| format!("b{b}")));
        if i > 0 && rng.gen_bool(0.5) {
            comps.push(format!("d{}", rng.gen_range(0..i)));
        }
        let parents: Vec<String> =
            (0..i).filter(|_| rng.gen_bool(EDGE_PROBABILITY / 4.0)).map(|j| format!("d{j}")).collect();
        out.push(description(format!("d{i}"), parents, comps));
    }
    out
}

fn description(name: String, parents: Vec<String>, components: Vec<String>) -> Declaration {
    Declaration { kind: ElementKind::Description, name, parents, components, spans: None }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchPoint {
    pub descriptions: usize,
    pub dim: usize,
    /// Minimum over trials, seconds.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub shape: Shape,
    pub points: Vec<BenchPoint>,
    /// Slope of `log t` against `log |D|`; needs at least two sizes.
    pub exponent: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Time to build every basis (vector memo included) from a built ontology.
pub fn time_all_bases(decls: &[Declaration]) -> Result<(Duration, usize), BenchError> {
    let o = build_ontology(decls)?;
    let start = Instant::now();
    let enc = Encoder::<f64>::new(&o);
    let bases = enc.build_all_bases()?;
    let elapsed = start.elapsed();
    std::hint::black_box(bases);
    Ok((elapsed, o.dim()))
}

/// Times basis construction at each size and fits the scaling exponent.
pub fn bench(shape: Shape, sizes: &[usize], trials: usize, seed: u64) -> Result<BenchReport, BenchError> {
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let decls = generate(shape, n, seed);
        // One untimed warm-up run.
        let (_, dim) = time_all_bases(&decls)?;
        let mut best = f64::INFINITY;
        for _ in 0..trials.max(1) {
            best = best.min(time_all_bases(&decls)?.0.as_secs_f64());
        }
        points.push(BenchPoint { descriptions: n, dim, seconds: best });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.descriptions as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds.max(1e-9).ln()).collect();
    let exponent = (points.len() >= 2).then(|| slope(&xs, &ys));
    Ok(BenchReport { shape, points, exponent })
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
