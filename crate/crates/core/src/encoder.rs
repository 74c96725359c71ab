//! Maps ontology elements and situations into `V = R^{|R ∪ D|}`.
//!
//! * A role `r` becomes its subsumption-indicator row: coordinate `x` is 1
//!   exactly when `r ⊆ x`.
//! * A description becomes the sum of the vectors of its components,
//!   recursively.
//! * A situation becomes the sum of the role vectors of every classification
//!   of every entity it contains, nested situations included.
//!
//! The [`Encoder`] memoizes element vectors in `OnceLock` cells, so a single
//! encoder can be shared by reference across threads.

use std::collections::BTreeMap;
use std::ops::{Add, Index};
use std::sync::OnceLock;

use thiserror::Error;

use crate::numerics::{self, LeastSquares, Matrix, NumericsError, PinvRoute};
use crate::ontology::{ElementId, ElementKind, Ontology, OntologyError};
use crate::parser::Situation;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("description `{description}` has rank {rank}, expected {expected}: its component vectors are linearly dependent")]
    RankDeficient { description: String, rank: usize, expected: usize },
    #[error("entity `{entity}`: `{name}` is not a role of this ontology")]
    UnknownRole { entity: String, name: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl EncodeError {
    pub fn code(&self) -> &'static str {
        match self {
            EncodeError::Ontology(e) => e.code(),
            EncodeError::RankDeficient { .. } => "RankDeficient",
            EncodeError::UnknownRole { .. } => "UnknownRole",
            EncodeError::Numerics(_) => "Numerics",
        }
    }
}

/// Dense vector indexed by ontology element index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    values: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![T::zero(); dim] }
    }

    pub fn from_vec(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self { values: self.values.iter().map(|&v| v * alpha).collect() }
    }

    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + alpha * b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

impl<T: Scalar> Add<&Vector<T>> for &Vector<T> {
    type Output = Vector<T>;

    fn add(self, rhs: &Vector<T>) -> Vector<T> {
        let mut out = self.clone();
        out.add_scaled(T::one(), rhs);
        out
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Column basis of one description's subspace together with its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<T> {
    description: ElementId,
    components: Vec<ElementId>,
    a: Matrix<T>,
    a_pinv: Matrix<T>,
    rank: usize,
    route: PinvRoute,
}

impl<T: Scalar> Basis<T> {
    pub fn description(&self) -> ElementId {
        self.description
    }

    /// Components in declaration order; column `i` of [`Basis::matrix`] belongs to `components()[i]`.
    pub fn components(&self) -> &[ElementId] {
        &self.components
    }

    /// `dim x |d|` matrix whose columns are the component vectors.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }

    /// `|d| x dim` Moore-Penrose pseudo-inverse of [`Basis::matrix`].
    pub fn pinv(&self) -> &Matrix<T> {
        &self.a_pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pinv_route(&self) -> PinvRoute {
        self.route
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Least-squares coefficients of `v` over the basis columns.
    pub fn solve(&self, v: &Vector<T>) -> Result<LeastSquares<T>, NumericsError> {
        numerics::solve_coefficients(&self.a, &self.a_pinv, v.as_slice())
    }
}

/// One basis per description, in index order.
pub type Bases<T> = BTreeMap<ElementId, Basis<T>>;

pub struct Encoder<'o, T> {
    ontology: &'o Ontology,
    memo: Vec<OnceLock<Vector<T>>>,
}

impl<'o, T: Scalar> Encoder<'o, T> {
    pub fn new(ontology: &'o Ontology) -> Self {
        Self { ontology, memo: (0..ontology.dim()).map(|_| OnceLock::new()).collect() }
    }

    pub fn ontology(&self) -> &'o Ontology {
        self.ontology
    }

    pub fn dim(&self) -> usize {
        self.ontology.dim()
    }

    /// Subsumption-indicator vector of a role.
    pub fn role_vector(&self, r: ElementId) -> Result<&Vector<T>, EncodeError> {
        self.ontology.expect_kind(r, ElementKind::Role)?;
        Ok(self.memo[r.index()].get_or_init(|| self.indicator_row(r)))
    }

    /// Recursive component sum of a description.
    pub fn describe(&self, d: ElementId) -> Result<&Vector<T>, EncodeError> {
        self.ontology.expect_kind(d, ElementKind::Description)?;
        self.fill_descriptions(d);
        Ok(self.memo[d.index()].get().expect("filled above"))
    }

    /// Role vector or description vector, whichever `x` is.
    pub fn element_vector(&self, x: ElementId) -> &Vector<T> {
        match self.ontology.kind(x) {
            ElementKind::Role => self.memo[x.index()].get_or_init(|| self.indicator_row(x)),
            ElementKind::Description => {
                self.fill_descriptions(x);
                self.memo[x.index()].get().expect("filled above")
            }
        }
    }

    fn indicator_row(&self, r: ElementId) -> Vector<T> {
        let mut v = Vector::zeros(self.dim());
        for a in self.ontology.ancestors(r) {
            v.values[a.index()] = T::one();
        }
        v
    }

    /// Computes every missing description vector under `root`, children first,
    /// without recursion.
    fn fill_descriptions(&self, root: ElementId) {
        if self.memo[root.index()].get().is_some() {
            return;
        }
        let o = self.ontology;
        let mut stack = vec![(root, false)];
        while let Some((d, expanded)) = stack.pop() {
            if self.memo[d.index()].get().is_some() {
                continue;
            }
            if !expanded {
                stack.push((d, true));
                for &c in o.components(d) {
                    if o.kind(c) == ElementKind::Description && self.memo[c.index()].get().is_none() {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let mut parts: Vec<ElementId> = o.components(d).to_vec();
            parts.sort();
            let mut sum = Vector::zeros(self.dim());
            for c in parts {
                let v = match o.kind(c) {
                    ElementKind::Role => self.memo[c.index()].get_or_init(|| self.indicator_row(c)),
                    ElementKind::Description => self.memo[c.index()].get().expect("children first"),
                };
                sum.add_scaled(T::one(), v);
            }
            // Another thread may have won the race; both results are identical.
            let _ = self.memo[d.index()].set(sum);
        }
    }

    /// Assembles `A_d` column by column in declaration order and checks it has full column rank.
    pub fn build_basis(&self, d: ElementId) -> Result<Basis<T>, EncodeError> {
        self.ontology.expect_kind(d, ElementKind::Description)?;
        let components = self.ontology.components(d).to_vec();
        let columns: Vec<&[T]> = components.iter().map(|&c| self.element_vector(c).as_slice()).collect();
        let a = Matrix::from_columns(self.dim(), &columns);
        let rank = numerics::rank_of(&a)?;
        if rank != components.len() {
            return Err(EncodeError::RankDeficient {
                description: self.ontology.name(d).to_string(),
                rank,
                expected: components.len(),
            });
        }
        let (a_pinv, route) = numerics::pseudo_inverse_with_route(&a)?;
        Ok(Basis { description: d, components, a, a_pinv, rank, route })
    }

    /// One basis per description; fails on the first rank-deficient one.
    pub fn build_all_bases(&self) -> Result<Bases<T>, EncodeError> {
        self.ontology.descriptions().iter().map(|&d| Ok((d, self.build_basis(d)?))).collect()
    }

    /// Like [`Encoder::build_all_bases`] but reports every description's outcome.
    pub fn try_all_bases(&self) -> Vec<(ElementId, Result<Basis<T>, EncodeError>)> {
        self.ontology.descriptions().iter().map(|&d| (d, self.build_basis(d))).collect()
    }

    /// Sum of the role vectors of every classification in `s` and its nested situations.
    pub fn encode_situation(&self, s: &Situation) -> Result<Vector<T>, EncodeError> {
        let mut counts: BTreeMap<ElementId, u64> = BTreeMap::new();
        for e in s.all_entities() {
            for name in &e.roles {
                let r = self
                    .ontology
                    .id(name)
                    .filter(|&r| self.ontology.kind(r) == ElementKind::Role)
                    .ok_or_else(|| EncodeError::UnknownRole { entity: e.id.clone(), name: name.clone() })?;
                *counts.entry(r).or_default() += 1;
            }
        }
        let mut v = Vector::zeros(self.dim());
        for (r, n) in counts {
            let scale = T::from_u64(n).expect("entity count fits the scalar");
            v.add_scaled(scale, self.role_vector(r)?);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{build_ontology, Declaration};

    fn fig() -> Ontology {
        build_ontology(&[
            Declaration::role("Shape", &[]),
            Declaration::role("Circle", &["Shape"]),
            Declaration::role("Color", &[]),
            Declaration::role("Red", &["Color"]),
            Declaration::description("Fig", &[], &["Shape", "Color"]),
        ])
        .unwrap()
    }

    fn v(values: &[f64]) -> Vector<f64> {
        Vector::from_vec(values.to_vec())
    }

    #[test]
    fn role_vectors() {
        let o = fig();
        let enc = Encoder::<f64>::new(&o);
        assert_eq!(enc.role_vector(o.id("Shape").unwrap()).unwrap(), &v(&[0., 0., 0., 0., 1.]));
        assert_eq!(enc.role_vector(o.id("Circle").unwrap()).unwrap(), &v(&[1., 0., 0., 0., 1.]));
        assert!(matches!(
            enc.role_vector(o.id("Fig").unwrap()),
            Err(EncodeError::Ontology(OntologyError::KindMismatch { .. }))
        ));

        let single = build_ontology(&[Declaration::role("Only", &[])]).unwrap();
        let enc = Encoder::<f64>::new(&single);
        assert_eq!(enc.role_vector(single.id("Only").unwrap()).unwrap(), &v(&[1.]));
    }

    #[test]
    fn describe_fig() {
        let o = fig();
        let enc = Encoder::<f64>::new(&o);
        assert_eq!(enc.describe(o.id("Fig").unwrap()).unwrap(), &v(&[0., 1., 0., 0., 1.]));
        assert!(enc.describe(o.id("Red").unwrap()).is_err());
    }

    #[test]
    fn fig_basis_is_orthonormal() {
        let o = fig();
        let enc = Encoder::<f64>::new(&o);
        let b = enc.build_basis(o.id("Fig").unwrap()).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.pinv(), &b.matrix().transpose());
        assert_eq!(b.matrix().column(0), vec![0., 0., 0., 0., 1.]);
        assert_eq!(b.matrix().column(1), vec![0., 1., 0., 0., 0.]);
    }

    #[test]
    fn single_component_basis() {
        let o = build_ontology(&[
            Declaration::role("a", &[]),
            Declaration::role("b", &["a"]),
            Declaration::description("d", &[], &["b"]),
        ])
        .unwrap();
        let enc = Encoder::<f64>::new(&o);
        let b = enc.build_basis(o.id("d").unwrap()).unwrap();
        // column [1, 1], pinv = col^T / 2
        assert_eq!(b.pinv(), &Matrix::from_rows(&[vec![0.5, 0.5, 0.]]));
    }

    #[test]
    fn rank_deficient_is_reported() {
        let o = build_ontology(&[
            Declaration::role("a", &[]),
            Declaration::role("b", &[]),
            Declaration::description("ab", &[], &["a", "b"]),
            Declaration::description("bad", &[], &["ab", "a", "b"]),
        ])
        .unwrap();
        let enc = Encoder::<f64>::new(&o);
        let err = enc.build_basis(o.id("bad").unwrap()).unwrap_err();
        assert_eq!(err, EncodeError::RankDeficient { description: "bad".into(), rank: 2, expected: 3 });
        assert!(enc.build_all_bases().is_err());
    }

    #[test]
    fn encode_fixtures() {
        let o = fig();
        let enc = Encoder::<f64>::new(&o);
        let s1 = Situation::new("s1").with_entity("e1", &["Circle"]).with_entity("e2", &["Red"]);
        assert_eq!(enc.encode_situation(&s1).unwrap(), v(&[1., 1., 0., 1., 1.]));
        assert!(enc.encode_situation(&Situation::new("s0")).unwrap().is_zero());

        let bad = Situation::new("s").with_entity("e", &["Nope"]);
        assert_eq!(
            enc.encode_situation(&bad).unwrap_err(),
            EncodeError::UnknownRole { entity: "e".into(), name: "Nope".into() }
        );
        let desc_as_role = Situation::new("s").with_entity("e", &["Fig"]);
        assert!(matches!(enc.encode_situation(&desc_as_role), Err(EncodeError::UnknownRole { .. })));
    }

    #[test]
    fn multi_role_entity_adds_each_classification() {
        let o = fig();
        let enc = Encoder::<f64>::new(&o);
        let both = Situation::new("s").with_entity("e", &["Circle", "Red"]);
        let split = Situation::new("s").with_entity("e1", &["Circle"]).with_entity("e2", &["Red"]);
        assert_eq!(enc.encode_situation(&both).unwrap(), enc.encode_situation(&split).unwrap());
    }

    #[test]
    fn deep_chain_does_not_recurse() {
        let mut decls = vec![Declaration::role("r", &[])];
        decls.push(Declaration::description("d00000", &[], &["r"]));
        for i in 1..5000 {
            let prev = format!("d{:05}", i - 1);
            decls.push(Declaration::description(format!("d{i:05}"), &[], &[&prev]));
        }
        let o = build_ontology(&decls).unwrap();
        let enc = Encoder::<f64>::new(&o);
        let last = enc.describe(o.id("d04999").unwrap()).unwrap();
        assert_eq!(last[o.id("r").unwrap().index()], 1.0);
    }
}
