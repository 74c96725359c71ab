//! In-memory Descriptions-and-Situations ontology: roles, descriptions,
//! composition (`r ∈ d`) and the subsumption DAG (`x ⊆ y`).
//!
//! An [`Ontology`] is validated once at build time and immutable afterwards.
//! Elements are indexed by ascending lexicographic order of their names, which
//! makes the index (and every vector built against it) independent of
//! declaration order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::parser::{DeclSpans, SourceSpan};

/// Position of an element in the ontology index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ElementId(usize);

impl ElementId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Role,
    Description,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Role => "role",
            ElementKind::Description => "description",
        })
    }
}

/// One parsed statement. `spans` locates it in the DSL source when there is one
/// and is ignored by equality.
#[derive(Debug, Clone, Eq)]
pub struct Declaration {
    pub kind: ElementKind,
    pub name: String,
    /// Subsumption parents, in source order.
    pub parents: Vec<String>,
    /// Components in source order; always empty for roles.
    pub components: Vec<String>,
    pub spans: Option<DeclSpans>,
}

impl PartialEq for Declaration {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.name == other.name
            && self.parents == other.parents
            && self.components == other.components
    }
}

impl Declaration {
    pub fn role(name: impl Into<String>, parents: &[&str]) -> Self {
        Self {
            kind: ElementKind::Role,
            name: name.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            components: Vec::new(),
            spans: None,
        }
    }

    pub fn description(name: impl Into<String>, parents: &[&str], components: &[&str]) -> Self {
        Self {
            kind: ElementKind::Description,
            name: name.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            components: components.iter().map(|s| s.to_string()).collect(),
            spans: None,
        }
    }

    pub fn with_spans(mut self, spans: DeclSpans) -> Self {
        self.spans = Some(spans);
        self
    }

    pub fn name_span(&self) -> Option<SourceSpan> {
        self.spans.as_ref().map(|s| s.name)
    }

    fn parent_span(&self, i: usize) -> Option<SourceSpan> {
        self.spans.as_ref().and_then(|s| s.parents.get(i).copied()).or(self.name_span())
    }

    fn component_span(&self, i: usize) -> Option<SourceSpan> {
        self.spans.as_ref().and_then(|s| s.components.get(i).copied()).or(self.name_span())
    }
}

fn by(referrer: &Option<String>) -> String {
    referrer.as_ref().map(|r| format!(" in `{r}`")).unwrap_or_default()
}

fn at(span: &Option<SourceSpan>) -> String {
    span.map(|s| format!(" at {s}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("duplicate name `{name}`{}", at(.span))]
    DuplicateName { name: String, span: Option<SourceSpan>, first: Option<SourceSpan> },
    #[error("unknown reference `{name}`{}{}", by(.referenced_by), at(.span))]
    UnknownReference { name: String, referenced_by: Option<String>, span: Option<SourceSpan> },
    #[error("description `{name}` has no components{}", at(.span))]
    EmptyDescription { name: String, span: Option<SourceSpan> },
    #[error("composition cycle: {}{}", .cycle.join(" -> "), at(.span))]
    CompositionCycle { cycle: Vec<String>, span: Option<SourceSpan> },
    #[error("subsumption cycle: {}{}", .cycle.join(" < "), at(.span))]
    SubsumptionCycle { cycle: Vec<String>, span: Option<SourceSpan> },
    #[error("`{child}` ({child_kind}) cannot be subsumed by `{parent}` ({parent_kind}){}", at(.span))]
    CrossKindSubsumption {
        child: String,
        child_kind: ElementKind,
        parent: String,
        parent_kind: ElementKind,
        span: Option<SourceSpan>,
    },
    #[error("`{name}` is a {found}, expected a {expected}")]
    KindMismatch { name: String, expected: ElementKind, found: ElementKind },
}

impl OntologyError {
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            OntologyError::DuplicateName { span, .. }
            | OntologyError::UnknownReference { span, .. }
            | OntologyError::EmptyDescription { span, .. }
            | OntologyError::CrossKindSubsumption { span, .. }
            | OntologyError::CompositionCycle { span, .. }
            | OntologyError::SubsumptionCycle { span, .. } => *span,
            _ => None,
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            OntologyError::DuplicateName { .. } => "DuplicateName",
            OntologyError::UnknownReference { .. } => "UnknownReference",
            OntologyError::EmptyDescription { .. } => "EmptyDescription",
            OntologyError::CompositionCycle { .. } => "CompositionCycle",
            OntologyError::SubsumptionCycle { .. } => "SubsumptionCycle",
            OntologyError::CrossKindSubsumption { .. } => "CrossKindSubsumption",
            OntologyError::KindMismatch { .. } => "KindMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning")]
pub enum OntologyWarning {
    /// Two descriptions with the same component set get the same vector.
    IdenticalComponents { first: String, second: String },
    /// A component listed more than once; only the first occurrence is kept.
    DuplicateComponent { description: String, component: String },
}

impl fmt::Display for OntologyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OntologyWarning::IdenticalComponents { first, second } => {
                write!(f, "descriptions `{first}` and `{second}` have identical components")
            }
            OntologyWarning::DuplicateComponent { description, component } => {
                write!(f, "component `{component}` repeated in `{description}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    names: Vec<String>,
    kinds: Vec<ElementKind>,
    by_name: HashMap<String, ElementId>,
    /// Per element, declaration order, deduplicated. Empty for roles.
    components: Vec<Vec<ElementId>>,
    /// Direct subsumption parents, ascending index.
    parents: Vec<Vec<ElementId>>,
    /// Reflexive-transitive subsumption ancestors.
    ancestors: Vec<FixedBitSet>,
    roles: Vec<ElementId>,
    descriptions: Vec<ElementId>,
    topo: Vec<ElementId>,
    warnings: Vec<OntologyWarning>,
}

/// Validates declarations and builds the indexed ontology.
pub fn build_ontology(decls: &[Declaration]) -> Result<Ontology, OntologyError> {
    let mut first_seen: HashMap<&str, &Declaration> = HashMap::new();
    for d in decls {
        if let Some(prev) = first_seen.insert(&d.name, d) {
            return Err(OntologyError::DuplicateName {
                name: d.name.clone(),
                span: d.name_span(),
                first: prev.name_span(),
            });
        }
        if d.kind == ElementKind::Description && d.components.is_empty() {
            return Err(OntologyError::EmptyDescription { name: d.name.clone(), span: d.name_span() });
        }
    }

    let mut sorted: Vec<&Declaration> = decls.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let n = sorted.len();
    let names: Vec<String> = sorted.iter().map(|d| d.name.clone()).collect();
    let kinds: Vec<ElementKind> = sorted.iter().map(|d| d.kind).collect();
    let by_name: HashMap<String, ElementId> =
        names.iter().enumerate().map(|(i, s)| (s.clone(), ElementId(i))).collect();

    let spans: Vec<Option<SourceSpan>> = sorted.iter().map(|d| d.name_span()).collect();
    let resolve = |name: &str, d: &Declaration, span: Option<SourceSpan>| {
        by_name.get(name).copied().ok_or_else(|| OntologyError::UnknownReference {
            name: name.to_string(),
            referenced_by: Some(d.name.clone()),
            span,
        })
    };

    // Resolve in declaration order so the first reported error is the first in the source.
    let mut components = vec![Vec::new(); n];
    let mut parents = vec![Vec::new(); n];
    let mut warnings = Vec::new();
    for d in decls {
        let id = by_name[&d.name];
        for (i, p) in d.parents.iter().enumerate() {
            let pid = resolve(p, d, d.parent_span(i))?;
            if kinds[pid.0] != d.kind {
                return Err(OntologyError::CrossKindSubsumption {
                    child: d.name.clone(),
                    child_kind: d.kind,
                    parent: p.clone(),
                    parent_kind: kinds[pid.0],
                    span: d.parent_span(i),
                });
            }
            parents[id.0].push(pid);
        }
        parents[id.0].sort();
        parents[id.0].dedup();
        for (i, c) in d.components.iter().enumerate() {
            let cid = resolve(c, d, d.component_span(i))?;
            if components[id.0].contains(&cid) {
                warnings
                    .push(OntologyWarning::DuplicateComponent { description: d.name.clone(), component: c.clone() });
            } else {
                components[id.0].push(cid);
            }
        }
    }

    let composition: Vec<Vec<ElementId>> = components
        .iter()
        .map(|cs| {
            let mut ds: Vec<ElementId> =
                cs.iter().copied().filter(|c| kinds[c.0] == ElementKind::Description).collect();
            ds.sort();
            ds
        })
        .collect();
    if let Some(cycle) = find_cycle(&composition) {
        return Err(OntologyError::CompositionCycle {
            cycle: cycle.iter().map(|i| names[i.0].clone()).collect(),
            span: spans[cycle[0].0],
        });
    }
    if let Some(cycle) = find_cycle(&parents) {
        return Err(OntologyError::SubsumptionCycle {
            cycle: cycle.iter().map(|i| names[i.0].clone()).collect(),
            span: spans[cycle[0].0],
        });
    }

    let topo = subsumption_topo(&parents);
    let mut ancestors = vec![FixedBitSet::with_capacity(n); n];
    // Parents come after children in `topo`, so walk it backwards.
    for &x in topo.iter().rev() {
        let mut set = FixedBitSet::with_capacity(n);
        set.insert(x.0);
        for p in &parents[x.0] {
            set.union_with(&ancestors[p.0]);
        }
        ancestors[x.0] = set;
    }

    let roles: Vec<ElementId> = (0..n).filter(|&i| kinds[i] == ElementKind::Role).map(ElementId).collect();
    let descriptions: Vec<ElementId> =
        (0..n).filter(|&i| kinds[i] == ElementKind::Description).map(ElementId).collect();

    let mut by_set: BTreeMap<Vec<ElementId>, ElementId> = BTreeMap::new();
    for &d in &descriptions {
        let mut key = components[d.0].clone();
        key.sort();
        if let Some(&first) = by_set.get(&key) {
            warnings.push(OntologyWarning::IdenticalComponents {
                first: names[first.0].clone(),
                second: names[d.0].clone(),
            });
        } else {
            by_set.insert(key, d);
        }
    }

    Ok(Ontology { names, kinds, by_name, components, parents, ancestors, roles, descriptions, topo, warnings })
}

/// Returns one directed cycle, if any, following `edges` (node -> successors).
fn find_cycle(edges: &[Vec<ElementId>]) -> Option<Vec<ElementId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = edges.len();
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // Iterative DFS; `path` mirrors the open nodes.
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        let mut path: Vec<usize> = vec![root];
        mark[root] = Mark::Open;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < edges[node].len() {
                let succ = edges[node][*next].0;
                *next += 1;
                match mark[succ] {
                    Mark::New => {
                        mark[succ] = Mark::Open;
                        stack.push((succ, 0));
                        path.push(succ);
                    }
                    Mark::Open => {
                        let start = path.iter().position(|&p| p == succ).expect("open node on path");
                        let mut cycle: Vec<ElementId> = path[start..].iter().map(|&i| ElementId(i)).collect();
                        cycle.push(ElementId(succ));
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

/// Kahn's algorithm with a min-heap: children before parents, ties by index.
fn subsumption_topo(parents: &[Vec<ElementId>]) -> Vec<ElementId> {
    let n = parents.len();
    let mut pending_children = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for p in ps {
            pending_children[p.0] += 1;
            children[p.0].push(c);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| pending_children[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(x)) = ready.pop() {
        order.push(ElementId(x));
        for p in &parents[x] {
            pending_children[p.0] -= 1;
            if pending_children[p.0] == 0 {
                ready.push(Reverse(p.0));
            }
        }
    }
    debug_assert_eq!(order.len(), n, "subsumption graph validated acyclic");
    order
}

impl Ontology {
    /// `|R ∪ D|`, the dimension of the vector space.
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn id(&self, name: &str) -> Option<ElementId> {
        self.by_name.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<ElementId, OntologyError> {
        self.id(name).ok_or_else(|| OntologyError::UnknownReference {
            name: name.to_string(),
            referenced_by: None,
            span: None,
        })
    }

    /// Resolves `name` and checks it has the given kind.
    pub fn resolve_kind(&self, name: &str, kind: ElementKind) -> Result<ElementId, OntologyError> {
        let id = self.resolve(name)?;
        self.expect_kind(id, kind)?;
        Ok(id)
    }

    pub fn expect_kind(&self, id: ElementId, kind: ElementKind) -> Result<(), OntologyError> {
        if self.kind(id) == kind {
            Ok(())
        } else {
            Err(OntologyError::KindMismatch { name: self.name(id).to_string(), expected: kind, found: self.kind(id) })
        }
    }

    pub fn name(&self, id: ElementId) -> &str {
        &self.names[id.0]
    }

    pub fn kind(&self, id: ElementId) -> ElementKind {
        self.kinds[id.0]
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl ExactSizeIterator<Item = ElementId> + '_ {
        (0..self.names.len()).map(ElementId)
    }

    pub fn roles(&self) -> &[ElementId] {
        &self.roles
    }

    pub fn descriptions(&self) -> &[ElementId] {
        &self.descriptions
    }

    /// Components of a description in declaration order (empty for roles).
    pub fn components(&self, d: ElementId) -> &[ElementId] {
        &self.components[d.0]
    }

    pub fn parents(&self, x: ElementId) -> &[ElementId] {
        &self.parents[x.0]
    }

    /// All `(child, parent)` subsumption edges, ascending.
    pub fn subsumption_edges(&self) -> Vec<(ElementId, ElementId)> {
        self.elements().flat_map(|c| self.parents(c).iter().map(move |&p| (c, p))).collect()
    }

    /// Reflexive-transitive subsumption: `x ⊆ y`.
    pub fn is_subsumed(&self, x: ElementId, y: ElementId) -> bool {
        self.ancestors[x.0].contains(y.0)
    }

    pub fn is_subsumed_by_name(&self, x: &str, y: &str) -> Result<bool, OntologyError> {
        Ok(self.is_subsumed(self.resolve(x)?, self.resolve(y)?))
    }

    /// Every `y` with `x ⊆ y`, ascending, including `x` itself.
    pub fn ancestors(&self, x: ElementId) -> impl Iterator<Item = ElementId> + '_ {
        self.ancestors[x.0].ones().map(ElementId)
    }

    /// Children precede their subsumption parents; ties broken by name.
    pub fn topological_order(&self) -> &[ElementId] {
        &self.topo
    }

    pub fn warnings(&self) -> &[OntologyWarning] {
        &self.warnings
    }

    /// Length of the longest composition chain below `d` (0 for roles).
    pub fn composition_depth(&self, d: ElementId) -> usize {
        let mut memo: Vec<Option<usize>> = vec![None; self.dim()];
        let mut stack = vec![d];
        while let Some(&x) = stack.last() {
            let pending: Vec<ElementId> = self
                .components(x)
                .iter()
                .copied()
                .filter(|&c| self.kind(c) == ElementKind::Description && memo[c.0].is_none())
                .collect();
            if pending.is_empty() {
                stack.pop();
                let depth = self
                    .components(x)
                    .iter()
                    .map(|&c| match self.kind(c) {
                        ElementKind::Role => 1,
                        ElementKind::Description => 1 + memo[c.0].expect("visited"),
                    })
                    .max()
                    .unwrap_or(0);
                memo[x.0] = Some(depth);
            } else {
                stack.extend(pending);
            }
        }
        memo[d.0].expect("visited")
    }

    /// Reconstructs declarations in index order; rebuilding from them yields an equal ontology.
    pub fn to_declarations(&self) -> Vec<Declaration> {
        self.elements()
            .map(|x| Declaration {
                kind: self.kind(x),
                name: self.name(x).to_string(),
                parents: self.parents(x).iter().map(|&p| self.name(p).to_string()).collect(),
                components: self.components(x).iter().map(|&c| self.name(c).to_string()).collect(),
                spans: None,
            })
            .collect()
    }
}
