#![allow(dead_code)]

use std::path::PathBuf;

use dnspace::encoder::Bases;
use dnspace::ontology::Declaration;
use dnspace::parser::Situation;
use dnspace::{build_ontology, parse_ontology, Encoder, Ontology};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    let path = fixtures_dir().join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> Ontology {
    build_ontology(&parse_ontology(&read_fixture(&format!("{name}.sandra"))).unwrap()).unwrap()
}

/// The bundled ontologies whose bases are all full rank.
pub fn sound_fixtures() -> Vec<(&'static str, Ontology)> {
    ["fig", "panel", "mini_iraven", "mini_fmnist", "iraven"].into_iter().map(|n| (n, load(n))).collect()
}

pub fn bases(o: &Ontology) -> Bases<f64> {
    Encoder::<f64>::new(o).build_all_bases().unwrap()
}

const PREFIXES: [&str; 6] = ["Shape", "col_", "t-shirt", "Größe", "x", "Role"];

fn name(rng: &mut impl Rng, kind: char, i: usize) -> String {
    format!("{}{kind}{i}", PREFIXES[rng.gen_range(0..PREFIXES.len())])
}

/// A random well-formed ontology: acyclic subsumption among roles and among
/// descriptions, descriptions composed of roles and earlier descriptions.
/// Bases may be rank deficient.
pub fn random_decls(rng: &mut impl Rng, n_roles: usize, n_desc: usize) -> Vec<Declaration> {
    let roles: Vec<String> = (0..n_roles).map(|i| name(rng, 'r', i)).collect();
    let descs: Vec<String> = (0..n_desc).map(|i| name(rng, 'd', i)).collect();
    let mut out = Vec::new();
    for (i, r) in roles.iter().enumerate() {
        let parents: Vec<&str> = roles[..i].iter().filter(|_| rng.gen_bool(0.3)).map(String::as_str).collect();
        out.push(Declaration::role(r.clone(), &parents));
    }
    for (i, d) in descs.iter().enumerate() {
        let mut pool: Vec<&str> = roles.iter().chain(&descs[..i]).map(String::as_str).collect();
        pool.shuffle(rng);
        let k = rng.gen_range(1..=pool.len().min(4));
        let parents: Vec<&str> = descs[..i].iter().filter(|_| rng.gen_bool(0.2)).map(String::as_str).collect();
        out.push(Declaration::description(d.clone(), &parents, &pool[..k]));
    }
    out.shuffle(rng);
    out
}

/// A random situation over the ontology's roles, entity ids prefixed by `tag`.
pub fn random_situation(rng: &mut impl Rng, o: &Ontology, tag: &str, depth: usize) -> Situation {
    let roles: Vec<&str> = o.roles().iter().map(|&r| o.name(r)).collect();
    let mut counter = 0;
    random_situation_rec(rng, &roles, tag, depth, &mut counter)
}

fn random_situation_rec(rng: &mut impl Rng, roles: &[&str], tag: &str, depth: usize, counter: &mut usize) -> Situation {
    let mut s = Situation::new(format!("{tag}s{counter}"));
    *counter += 1;
    for _ in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(1..=2.min(roles.len()));
        let chosen: Vec<&str> = roles.choose_multiple(rng, k).copied().collect();
        s = s.with_entity(format!("{tag}e{counter}"), &chosen);
        *counter += 1;
    }
    if depth > 0 {
        for _ in 0..rng.gen_range(0..3) {
            s = s.with_nested(random_situation_rec(rng, roles, tag, depth - 1, counter));
        }
    }
    s
}
