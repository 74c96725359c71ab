//! Satisfaction inference over compiled bases.
//!
//! Given a situation vector `v`, each description `d` gets coefficients
//! `x = A_d⁺ v`. The Heaviside probability is the fraction of strictly
//! positive coefficients; the ReLU variant sums the positive parts instead,
//! which makes the deduction map piecewise linear in `v` with a closed-form
//! Jacobian.
//!
//! [`symbolic_satisfies`] evaluates the same question by structural recursion
//! over the situation tree, with no vectors involved. [`verify_theorems`]
//! compares the two on a set of situations and reports every disagreement.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::encoder::{Bases, Basis, EncodeError, Encoder, Vector};
use crate::numerics::{Matrix, NumericsError};
use crate::ontology::{ElementId, ElementKind, Ontology, OntologyError};
use crate::parser::Situation;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("no basis for description `{0}`")]
    MissingBasis(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Exact inference: a coefficient counts when it is strictly positive.
    #[default]
    Heaviside,
    /// Differentiable relaxation: positive parts of the coefficients are summed.
    Relu,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Heaviside => "heaviside",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heaviside" => Ok(Activation::Heaviside),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown mode `{other}` (expected heaviside or relu)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionReport<T> {
    pub description: ElementId,
    /// `x = A_d⁺ v`, one entry per component in declaration order.
    pub coefficients: Vec<T>,
    /// `x_i > POSITIVE_EPS`
    pub active_mask: Vec<bool>,
    pub probability: T,
    /// `||A_d x - v||`, reported but never used to gate the probability.
    pub residual_norm: T,
}

impl<T: Scalar> SatisfactionReport<T> {
    pub fn active_count(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    pub fn is_satisfied(&self) -> bool {
        self.active_count() == self.active_mask.len()
    }

    pub fn is_nearly_satisfied(&self) -> bool {
        self.active_count() > 0
    }
}

/// Satisfaction probability of one description for the situation vector `v`.
///
/// ReLU mode sums `x_i` over the active components (the same mask as
/// Heaviside), so values within `POSITIVE_EPS` of zero contribute nothing in
/// either mode. The result is not clamped to 1.
pub fn satisfaction<T: Scalar>(
    basis: &Basis<T>,
    v: &Vector<T>,
    mode: Activation,
) -> Result<SatisfactionReport<T>, ReasonerError> {
    let ls = basis.solve(v)?;
    let eps = T::of(T::POSITIVE_EPS);
    let active_mask: Vec<bool> = ls.coefficients.iter().map(|&x| x > eps).collect();
    let n = T::from_usize(basis.len()).expect("component count fits the scalar");
    let numerator = match mode {
        Activation::Heaviside => T::from_usize(active_mask.iter().filter(|&&a| a).count()).expect("count fits"),
        Activation::Relu => {
            ls.coefficients.iter().zip(&active_mask).filter(|(_, &a)| a).fold(T::zero(), |acc, (&x, _)| acc + x)
        }
    };
    Ok(SatisfactionReport {
        description: basis.description(),
        coefficients: ls.coefficients,
        active_mask,
        probability: numerator / n,
        residual_norm: ls.residual_norm,
    })
}

/// One probability per description, in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeductionVector<T> {
    pub descriptions: Vec<ElementId>,
    pub values: Vec<T>,
}

impl<T: Scalar> DeductionVector<T> {
    pub fn get(&self, d: ElementId) -> Option<T> {
        self.descriptions.iter().position(|&x| x == d).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn basis_for<'b, T>(o: &Ontology, bases: &'b Bases<T>, d: ElementId) -> Result<&'b Basis<T>, ReasonerError> {
    bases.get(&d).ok_or_else(|| ReasonerError::MissingBasis(o.name(d).to_string()))
}

/// Full satisfaction reports for every description, in index order.
pub fn deduce_reports<T: Scalar>(
    o: &Ontology,
    bases: &Bases<T>,
    v: &Vector<T>,
    mode: Activation,
) -> Result<Vec<SatisfactionReport<T>>, ReasonerError> {
    o.descriptions().iter().map(|&d| satisfaction(basis_for(o, bases, d)?, v, mode)).collect()
}

/// The deduction map `v ↦ [p(d_1), ..., p(d_n)]`.
pub fn deduce<T: Scalar>(
    o: &Ontology,
    bases: &Bases<T>,
    v: &Vector<T>,
    mode: Activation,
) -> Result<DeductionVector<T>, ReasonerError> {
    let reports = deduce_reports(o, bases, v, mode)?;
    Ok(DeductionVector {
        descriptions: reports.iter().map(|r| r.description).collect(),
        values: reports.into_iter().map(|r| r.probability).collect(),
    })
}

/// A coefficient close enough to zero that the ReLU derivative is undefined there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Kink {
    pub description: ElementId,
    /// Position in the description's component list.
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian<T> {
    /// `|D| x dim`, row order as in [`deduce`].
    pub matrix: Matrix<T>,
    /// Coefficients with `|x_i| <= KINK_EPS`; their subgradient is taken as 0.
    pub kinks: Vec<Kink>,
}

/// Derivative of the ReLU deduction map with respect to `v`.
///
/// Row `d` is `(1/|d|) Σ_{i : x_i > 0} row_i(A_d⁺)`.
pub fn jacobian<T: Scalar>(o: &Ontology, bases: &Bases<T>, v: &Vector<T>) -> Result<Jacobian<T>, ReasonerError> {
    let dim = o.dim();
    let mut matrix = Matrix::zeros(o.descriptions().len(), dim);
    let mut kinks = Vec::new();
    let kink_eps = T::of(T::KINK_EPS);
    for (row, &d) in o.descriptions().iter().enumerate() {
        let basis = basis_for(o, bases, d)?;
        let ls = basis.solve(v)?;
        let scale = T::one() / T::from_usize(basis.len()).expect("count fits");
        for (i, &x) in ls.coefficients.iter().enumerate() {
            if x.abs() <= kink_eps {
                kinks.push(Kink { description: d, component: i });
                continue;
            }
            if x > T::zero() {
                for (j, &p) in basis.pinv().row(i).iter().enumerate() {
                    matrix[(row, j)] = matrix[(row, j)] + scale * p;
                }
            }
        }
    }
    Ok(Jacobian { matrix, kinks })
}

/// Where a component found its match in a situation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentWitness {
    pub component: ElementId,
    /// Entities (anywhere in the situation tree) classified under the role.
    pub entities: Vec<String>,
    /// Nested situations that satisfy the description component.
    pub situations: Vec<String>,
}

impl ComponentWitness {
    pub fn is_matched(&self) -> bool {
        !self.entities.is_empty() || !self.situations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleVerdict {
    pub satisfied: bool,
    pub nearly_satisfied: bool,
    /// Matched components, declaration order.
    pub matched_components: Vec<ElementId>,
    /// One entry per component, declaration order.
    pub witnesses: Vec<ComponentWitness>,
}

/// Symbolic satisfaction check by direct clause evaluation.
///
/// A role component `r` matches when some entity of `s` or of any situation
/// nested in it carries a classification `c` with `c ⊆ r`. A description
/// component matches when some nested situation, at any depth, satisfies it.
pub fn symbolic_satisfies(o: &Ontology, s: &Situation, d: ElementId) -> Result<OracleVerdict, ReasonerError> {
    o.expect_kind(d, ElementKind::Description)?;
    // Resolve all classifications up front so errors don't depend on evaluation order.
    for e in s.all_entities() {
        for name in &e.roles {
            resolve_role(o, &e.id, name)?;
        }
    }
    Ok(evaluate(o, s, d))
}

fn resolve_role(o: &Ontology, entity: &str, name: &str) -> Result<ElementId, ReasonerError> {
    o.id(name)
        .filter(|&r| o.kind(r) == ElementKind::Role)
        .ok_or_else(|| EncodeError::UnknownRole { entity: entity.to_string(), name: name.to_string() }.into())
}

fn evaluate(o: &Ontology, s: &Situation, d: ElementId) -> OracleVerdict {
    let entities = s.all_entities();
    let descendants = s.descendants();
    let witnesses: Vec<ComponentWitness> = o
        .components(d)
        .iter()
        .map(|&r| {
            let mut w = ComponentWitness { component: r, entities: Vec::new(), situations: Vec::new() };
            match o.kind(r) {
                ElementKind::Role => {
                    for e in &entities {
                        let classified = e.roles.iter().any(|name| {
                            o.id(name).is_some_and(|c| o.kind(c) == ElementKind::Role && o.is_subsumed(c, r))
                        });
                        if classified {
                            w.entities.push(e.id.clone());
                        }
                    }
                }
                ElementKind::Description => {
                    for n in &descendants {
                        if evaluate(o, n, r).satisfied {
                            w.situations.push(n.id.clone());
                        }
                    }
                }
            }
            w
        })
        .collect();
    let matched_components: Vec<ElementId> = witnesses.iter().filter(|w| w.is_matched()).map(|w| w.component).collect();
    OracleVerdict {
        satisfied: matched_components.len() == witnesses.len(),
        nearly_satisfied: !matched_components.is_empty(),
        matched_components,
        witnesses,
    }
}

/// Which equivalence a counterexample breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    /// `p = 1 ⇔ d ⊨ s`
    FullIffSatisfied,
    /// `p > 0 ⇔ d nearly-satisfies s`
    PositiveIffNearly,
    /// `p = 0 ⇔ not nearly-satisfied`
    ZeroIffNotNearly,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::FullIffSatisfied => "p=1 <=> satisfied",
            Property::PositiveIffNearly => "p>0 <=> nearly-satisfied",
            Property::ZeroIffNotNearly => "p=0 <=> not nearly-satisfied",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub situation: Situation,
    pub description: String,
    pub coefficients: Vec<f64>,
    pub active_mask: Vec<bool>,
    pub probability: f64,
    pub oracle: OracleVerdict,
    pub violated: Vec<Property>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TheoremReport {
    pub situations: usize,
    pub pairs_checked: usize,
    /// Total number of disagreeing (situation, description) pairs.
    pub counterexample_count: usize,
    /// Disagreements per description name.
    pub by_description: BTreeMap<String, usize>,
    /// Disagreements per violated property.
    pub by_property: BTreeMap<String, usize>,
    /// The first counterexamples in input order, up to the requested limit.
    pub counterexamples: Vec<Counterexample>,
}

impl TheoremReport {
    pub fn is_clean(&self) -> bool {
        self.counterexample_count == 0
    }
}

// Bounds the memory held by in-flight counterexamples.
const CHUNK: usize = 4096;

fn check_pair<T: Scalar>(
    o: &Ontology,
    s: &Situation,
    report: SatisfactionReport<T>,
) -> Result<Option<Counterexample>, ReasonerError> {
    let verdict = symbolic_satisfies(o, s, report.description)?;
    let mut violated = Vec::new();
    if report.is_satisfied() != verdict.satisfied {
        violated.push(Property::FullIffSatisfied);
    }
    if report.is_nearly_satisfied() != verdict.nearly_satisfied {
        violated.push(Property::PositiveIffNearly);
        violated.push(Property::ZeroIffNotNearly);
    }
    if violated.is_empty() {
        return Ok(None);
    }
    Ok(Some(Counterexample {
        situation: s.clone(),
        description: o.name(report.description).to_string(),
        coefficients: report.coefficients.iter().map(|x| x.to_f64_lossy()).collect(),
        active_mask: report.active_mask,
        probability: report.probability.to_f64_lossy(),
        oracle: verdict,
        violated,
    }))
}

/// Compares Heaviside inference against [`symbolic_satisfies`] for every
/// (situation, description) pair. Counts every disagreement and keeps the
/// first `keep` in full. Runs in parallel; the result does not depend on
/// thread scheduling.
pub fn verify_theorems<T: Scalar>(
    encoder: &Encoder<'_, T>,
    bases: &Bases<T>,
    situations: &[Situation],
    keep: usize,
) -> Result<TheoremReport, ReasonerError> {
    let o = encoder.ontology();
    for &d in o.descriptions() {
        basis_for(o, bases, d)?;
    }
    let mut report = TheoremReport {
        situations: situations.len(),
        pairs_checked: situations.len() * o.descriptions().len(),
        ..TheoremReport::default()
    };
    for chunk in situations.chunks(CHUNK) {
        let found: Vec<Result<Vec<Counterexample>, ReasonerError>> = chunk
            .par_iter()
            .map(|s| {
                let v = encoder.encode_situation(s)?;
                let mut found = Vec::new();
                for r in deduce_reports(o, bases, &v, Activation::Heaviside)? {
                    found.extend(check_pair(o, s, r)?);
                }
                Ok(found)
            })
            .collect();
        for per_situation in found {
            for c in per_situation? {
                report.counterexample_count += 1;
                *report.by_description.entry(c.description.clone()).or_default() += 1;
                for p in &c.violated {
                    *report.by_property.entry(p.to_string()).or_default() += 1;
                }
                if report.counterexamples.len() < keep {
                    report.counterexamples.push(c);
                }
            }
        }
    }
    Ok(report)
}
