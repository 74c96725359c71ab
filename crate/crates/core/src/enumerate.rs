//! Exhaustive enumeration of small situations.
//!
//! Every entity carries exactly one role. Two situations that differ only in
//! entity order or in the order of their nested situations are the same, so
//! only one canonical representative is produced: roles within a situation are
//! a sorted multiset, nested situations a sorted multiset of non-empty
//! subtrees.

use std::collections::HashMap;

use crate::ontology::Ontology;
use crate::parser::Situation;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    roles: Vec<usize>,
    children: Vec<Node>,
}

struct Enumerator {
    roles: usize,
    memo: HashMap<(usize, usize), Vec<Node>>,
}

impl Enumerator {
    /// All canonical trees holding exactly `k` entities with at most `depth`
    /// levels of nesting below the root.
    fn exact(&mut self, k: usize, depth: usize) -> Vec<Node> {
        if let Some(v) = self.memo.get(&(k, depth)) {
            return v.clone();
        }
        let mut out = Vec::new();
        let max_nested = if depth == 0 { 0 } else { k };
        for nested_total in 0..=max_nested {
            let own = k - nested_total;
            let role_sets = multisets(self.roles, own);
            let child_sets = if nested_total == 0 { vec![Vec::new()] } else { self.forests(nested_total, depth - 1) };
            for roles in &role_sets {
                for children in &child_sets {
                    out.push(Node { roles: roles.clone(), children: children.clone() });
                }
            }
        }
        self.memo.insert((k, depth), out.clone());
        out
    }

    /// Sorted multisets of non-empty trees whose entity counts sum to `total`.
    fn forests(&mut self, total: usize, depth: usize) -> Vec<Vec<Node>> {
        let mut out = Vec::new();
        for parts in partitions(total, total) {
            let pools: Vec<Vec<Node>> = parts.iter().map(|&p| self.exact(p, depth)).collect();
            let mut current = Vec::new();
            forest_rec(&parts, &pools, 0, 0, &mut current, &mut out);
        }
        out
    }
}

// `parts` is non-increasing; equal consecutive sizes pick non-decreasing pool indices.
fn forest_rec(
    parts: &[usize],
    pools: &[Vec<Node>],
    i: usize,
    min_index: usize,
    current: &mut Vec<Node>,
    out: &mut Vec<Vec<Node>>,
) {
    if i == parts.len() {
        let mut f = current.clone();
        f.sort();
        out.push(f);
        return;
    }
    let start = if i > 0 && parts[i] == parts[i - 1] { min_index } else { 0 };
    for (j, node) in pools[i].iter().enumerate().skip(start) {
        current.push(node.clone());
        forest_rec(parts, pools, i + 1, j, current, out);
        current.pop();
    }
}

/// Partitions of `n` into positive parts no larger than `max`, non-increasing.
fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in (1..=max.min(n)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Sorted multisets of size `k` drawn from `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for r in from..n {
            cur.push(r);
            rec(n, k, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Every canonical situation with at most `max_entities` entities in total
/// and at most `max_depth` levels of nesting, ordered by entity count.
///
/// Situation ids are paths (`s3`, `s3.0`, `s3.0.1`); entity ids are unique per
/// top-level situation.
pub fn enumerate_situations(o: &Ontology, max_entities: usize, max_depth: usize) -> Vec<Situation> {
    let roles: Vec<&str> = o.roles().iter().map(|&r| o.name(r)).collect();
    let mut en = Enumerator { roles: roles.len(), memo: HashMap::new() };
    let mut out = Vec::new();
    for k in 0..=max_entities {
        for node in en.exact(k, max_depth) {
            let id = format!("s{}", out.len());
            let mut next_entity = 0;
            out.push(to_situation(&node, id, &roles, &mut next_entity));
        }
    }
    out
}

/// Number of situations [`enumerate_situations`] would produce.
pub fn count_situations(o: &Ontology, max_entities: usize, max_depth: usize) -> usize {
    let mut en = Enumerator { roles: o.roles().len(), memo: HashMap::new() };
    (0..=max_entities).map(|k| en.exact(k, max_depth).len()).sum()
}

fn to_situation(node: &Node, id: String, roles: &[&str], next_entity: &mut usize) -> Situation {
    let mut s = Situation::new(id.clone());
    for &r in &node.roles {
        s = s.with_entity(format!("e{next_entity}"), &[roles[r]]);
        *next_entity += 1;
    }
    for (i, child) in node.children.iter().enumerate() {
        s = s.with_nested(to_situation(child, format!("{id}.{i}"), roles, next_entity));
    }
    s
}
