//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the test harness so the lines always print.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dnspace::enumerate::enumerate_situations;
use dnspace::gradcheck::{gradcheck, GradcheckConfig};
use dnspace::numerics::{penrose_residuals, pseudo_inverse, rank_of};
use dnspace::parser::{parse_ontology_structured, parse_ontology_text, situation_to_json, to_dsl, to_structured};
use dnspace::reasoner::{deduce, satisfaction, verify_theorems};
use dnspace::synthetic::{bench, Shape};
use dnspace::{
    build_ontology, parse_ontology, parse_situation, Activation, Declaration, ElementId, ElementKind, Encoder, Matrix,
    Ontology, Situation, Vector,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THEOREM_FIXTURES: [&str; 4] = ["fig", "panel", "mini_iraven", "mini_fmnist"];
const SOUND_FIXTURES: [&str; 5] = ["fig", "panel", "mini_iraven", "mini_fmnist", "iraven"];
const THEOREM_BUDGET: Duration = Duration::from_secs(60);
const GRADCHECK_BUDGET: Duration = Duration::from_secs(10);
const BENCH_BUDGET: Duration = Duration::from_secs(120);
const BENCH_SIZES: [usize; 4] = [32, 64, 128, 256];
const MAX_EXPONENT: f64 = 2.3;
const PENROSE_TOL: f64 = 1e-9;
const LEFT_INVERSE_TOL: f64 = 1e-10;
const GRADCHECK_TOL: f64 = 1e-5;
const WORKED_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap()
}

fn load(name: &str) -> Ontology {
    build_ontology(&parse_ontology(&read(&format!("{name}.sandra"))).unwrap()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn theorem_equivalence() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let mut parts = Vec::new();
    for name in THEOREM_FIXTURES {
        let o = load(name);
        let enc = Encoder::<f64>::new(&o);
        let bases = enc.build_all_bases().unwrap();
        let situations = enumerate_situations(&o, 4, 2);
        let report = verify_theorems(&enc, &bases, &situations, 0).unwrap();
        total += report.counterexample_count;
        let by: Vec<String> = report.by_description.iter().map(|(d, n)| format!("{d} {n}")).collect();
        parts.push(format!(
            "{name} {} situations, {} counterexamples{}",
            report.situations,
            report.counterexample_count,
            if by.is_empty() { String::new() } else { format!(" ({})", by.join(", ")) }
        ));
    }
    let elapsed = start.elapsed();
    check(
        total == 0 && elapsed <= THEOREM_BUDGET,
        format!("{}; {:.1}s (budget {}s)", parts.join("; "), elapsed.as_secs_f64(), THEOREM_BUDGET.as_secs()),
    )
}

fn random_full_rank(rng: &mut impl Rng) -> Matrix<f64> {
    loop {
        let cols = rng.gen_range(1..=16);
        let rows = rng.gen_range(cols..=64);
        let a =
            Matrix::from_row_major(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        if rank_of(&a).unwrap() == cols {
            return a;
        }
    }
}

fn basis_soundness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    let mut count = 0;
    for name in SOUND_FIXTURES {
        let o = load(name);
        for (d, basis) in Encoder::<f64>::new(&o).try_all_bases() {
            count += 1;
            let Ok(basis) = basis else {
                bad.push(format!("{name}/{}", o.name(d)));
                continue;
            };
            let n = o.components(d).len();
            let err = basis.pinv().matmul(basis.matrix()).sub(&Matrix::identity(n)).max_abs();
            worst = worst.max(err);
            if rank_of(basis.matrix()).unwrap() != n || err > LEFT_INVERSE_TOL {
                bad.push(format!("{name}/{}", o.name(d)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut penrose: f64 = 0.0;
    for _ in 0..200 {
        let a = random_full_rank(&mut rng);
        let p = pseudo_inverse(&a).unwrap();
        penrose = penrose_residuals(&a, &p).into_iter().fold(penrose, f64::max);
    }
    check(
        bad.is_empty() && penrose <= PENROSE_TOL,
        format!(
            "{count} bases full rank, max |A+A - I| {worst:.1e} (tol {LEFT_INVERSE_TOL:.0e}){}; \
             200 random matrices, max Penrose residual {penrose:.1e} (tol {PENROSE_TOL:.0e})",
            if bad.is_empty() { String::new() } else { format!(", failing: {}", bad.join(", ")) }
        ),
    )
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for name in SOUND_FIXTURES {
        let o = load(name);
        let bases = Encoder::<f64>::new(&o).build_all_bases().unwrap();
        let report = gradcheck(&o, &bases, &GradcheckConfig::default()).unwrap();
        trials += report.trials;
        worst = worst.max(report.max_relative_error);
    }
    let elapsed = start.elapsed();
    check(
        trials == 100 * SOUND_FIXTURES.len() && worst <= GRADCHECK_TOL && elapsed <= GRADCHECK_BUDGET,
        format!(
            "{trials} points over {} fixtures, max relative error {worst:.2e} (tol {GRADCHECK_TOL:.0e}); {:.2}s (budget {}s)",
            SOUND_FIXTURES.len(),
            elapsed.as_secs_f64(),
            GRADCHECK_BUDGET.as_secs()
        ),
    )
}

/// Roles an element expands to with nested descriptions flattened.
fn flattened(o: &Ontology, x: ElementId) -> BTreeMap<ElementId, usize> {
    let mut out = BTreeMap::new();
    let mut stack = vec![x];
    while let Some(n) = stack.pop() {
        match o.kind(n) {
            ElementKind::Role => *out.entry(n).or_default() += 1,
            ElementKind::Description => stack.extend(o.components(n)),
        }
    }
    out
}

fn random_situation(rng: &mut impl Rng, roles: &[&str], tag: &str, depth: usize, counter: &mut usize) -> Situation {
    let mut s = Situation::new(format!("{tag}s{counter}"));
    *counter += 1;
    for _ in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(1..=roles.len().min(2));
        let chosen: Vec<&str> = roles.choose_multiple(rng, k).copied().collect();
        s = s.with_entity(format!("{tag}e{counter}"), &chosen);
        *counter += 1;
    }
    if depth > 0 {
        for _ in 0..rng.gen_range(0..3) {
            s = s.with_nested(random_situation(rng, roles, tag, depth - 1, counter));
        }
    }
    s
}

fn shuffled(rng: &mut impl Rng, s: &Situation) -> Situation {
    let mut out = s.clone();
    out.entities.shuffle(rng);
    out.nested = s.nested.iter().map(|n| shuffled(rng, n)).collect();
    out.nested.shuffle(rng);
    out
}

fn encoder_properties() -> Outcome {
    let mut failures = Vec::new();
    let (mut distinct_pairs, mut aliased) = (0, 0);
    let mut pairs = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for name in SOUND_FIXTURES {
        let o = load(name);
        let enc = Encoder::<f64>::new(&o);
        let all: Vec<ElementId> = o.elements().collect();
        for (i, &x) in all.iter().enumerate() {
            for &y in &all[i + 1..] {
                let same_vector = enc.element_vector(x) == enc.element_vector(y);
                if flattened(&o, x) != flattened(&o, y) {
                    distinct_pairs += 1;
                    if same_vector {
                        failures.push(format!("{name}: {} and {} collide", o.name(x), o.name(y)));
                    }
                } else {
                    aliased += 1;
                }
            }
        }
        for &d in o.descriptions() {
            for alpha in [-2.0, 0.5, 3.0] {
                let mut comps = o.components(d).to_vec();
                comps.sort();
                let rhs = comps.iter().fold(Vector::zeros(o.dim()), |mut acc, &c| {
                    acc.add_scaled(1.0, &enc.element_vector(c).scaled(alpha));
                    acc
                });
                if enc.describe(d).unwrap().scaled(alpha) != rhs {
                    failures.push(format!("{name}: homogeneity of {} at {alpha}", o.name(d)));
                }
            }
        }
        let roles: Vec<&str> = o.roles().iter().map(|&r| o.name(r)).collect();
        for _ in 0..500 {
            let a = random_situation(&mut rng, &roles, "a", 2, &mut 0);
            let b = random_situation(&mut rng, &roles, "b", 2, &mut 0);
            let va = enc.encode_situation(&a).unwrap();
            let vb = enc.encode_situation(&b).unwrap();
            let mut union = a.clone();
            union.entities.extend(b.entities.iter().cloned());
            union.nested.extend(b.nested.iter().cloned());
            pairs += 1;
            if enc.encode_situation(&shuffled(&mut rng, &a)).unwrap() != va {
                failures.push(format!("{name}: order dependence"));
            }
            if enc.encode_situation(&union).unwrap() != &va + &vb {
                failures.push(format!("{name}: additivity"));
            }
            if va.as_slice().iter().chain(vb.as_slice()).any(|&x| x < 0.0) {
                failures.push(format!("{name}: negative coordinate"));
            }
        }
    }
    failures.dedup();
    check(
        failures.is_empty(),
        format!(
            "{distinct_pairs} element pairs with distinct flattened components, all separated \
             ({aliased} pairs have identical flattened roles and alias); homogeneity exact; {pairs} situation pairs order-invariant, \
             additive, nonnegative{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn complexity() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for shape in [Shape::Chain, Shape::Dense] {
        let report = bench(shape, &BENCH_SIZES, 5, 42).unwrap();
        let e = report.exponent.unwrap_or(f64::INFINITY);
        ok &= e <= MAX_EXPONENT;
        parts.push(format!("{shape} exponent {e:.2}"));
    }
    let o = load("iraven");
    let t = Instant::now();
    let bases = Encoder::<f64>::new(&o).build_all_bases().unwrap();
    let iraven = t.elapsed();
    ok &= iraven < Duration::from_secs(1) && o.dim() == 144 && bases.len() == o.descriptions().len();
    let elapsed = start.elapsed();
    ok &= elapsed <= BENCH_BUDGET;
    check(
        ok,
        format!(
            "{} (max {MAX_EXPONENT}); 144-class fixture bases in {:.4}s (limit 1s); {:.1}s (budget {}s)",
            parts.join(", "),
            iraven.as_secs_f64(),
            elapsed.as_secs_f64(),
            BENCH_BUDGET.as_secs()
        ),
    )
}

fn random_decls(rng: &mut impl Rng) -> Vec<Declaration> {
    const PREFIXES: [&str; 5] = ["Shape", "col_", "t-shirt", "Größe", "x"];
    let (nr, nd) = (rng.gen_range(1..12), rng.gen_range(0..8));
    let mut name = |kind: char, i: usize| format!("{}{kind}{i}", PREFIXES[rng.gen_range(0..PREFIXES.len())]);
    let roles: Vec<String> = (0..nr).map(|i| name('r', i)).collect();
    let descs: Vec<String> = (0..nd).map(|i| name('d', i)).collect();
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

fn sorted(decls: &[Declaration]) -> Vec<Declaration> {
    let mut out = decls.to_vec();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// The CLI binary next to this test's `deps` directory, built on demand.
fn cli_binary() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().and_then(Path::parent).unwrap();
    let bin = dir.join(format!("dnspace{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let status = Command::new(option_env!("CARGO").unwrap_or("cargo"))
            .args(["build", "-p", "dnspace-cli", "--bin", "dnspace"])
            .status()
            .unwrap();
        assert!(status.success(), "building the CLI failed");
    }
    bin
}

fn parser_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let decls = random_decls(&mut rng);
        let text = to_dsl(&decls);
        if parse_ontology_text(&text).ok().as_deref() != Some(&decls[..]) {
            failures.push(format!("dsl #{i}"));
        }
        let json = to_structured(&decls);
        if parse_ontology_structured(&json).map(|d| sorted(&d)).ok() != Some(sorted(&decls)) {
            failures.push(format!("structured #{i}"));
        }
        let o = build_ontology(&decls).unwrap();
        let roles: Vec<&str> = o.roles().iter().map(|&r| o.name(r)).collect();
        let s = random_situation(&mut rng, &roles, "", 3, &mut 0);
        if parse_situation(&situation_to_json(&s)).ok().as_ref() != Some(&s) {
            failures.push(format!("situation #{i}"));
        }
    }

    let bin = cli_binary();
    let mut corpus: Vec<PathBuf> =
        std::fs::read_dir(fixtures().join("malformed")).unwrap().map(|e| e.unwrap().path()).collect();
    corpus.sort();
    for path in &corpus {
        let p = path.to_string_lossy();
        let fig = fixtures().join("fig.sandra");
        let args: Vec<&str> = if p.ends_with(".situation.json") {
            vec!["--format", "machine", "infer", fig.to_str().unwrap(), &p]
        } else {
            vec!["--format", "machine", "validate", &p]
        };
        let out = Command::new(&bin).args(&args).output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
        let d = &v["diagnostics"][0];
        let positioned = d["line"].is_u64() || d["path"].is_string();
        if out.status.success() || !positioned {
            failures.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    check(
        failures.is_empty(),
        format!(
            "1000 ontologies (DSL and structured) and 1000 situations round-trip; {} malformed files rejected with positions{}",
            corpus.len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn worked_examples() -> Outcome {
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= WORKED_TOL);
    let fig = load("fig");
    let enc = Encoder::<f64>::new(&fig);
    let bases = enc.build_all_bases().unwrap();
    let basis = &bases[&fig.id("Fig").unwrap()];
    let s1 = parse_situation(&read("situations/s1.json")).unwrap();
    let circle = parse_situation(&read("situations/circle.json")).unwrap();

    let r1 = satisfaction(basis, &enc.encode_situation(&s1).unwrap(), Activation::Heaviside).unwrap();
    let rc = satisfaction(basis, &enc.encode_situation(&circle).unwrap(), Activation::Heaviside).unwrap();
    let rc_relu = satisfaction(basis, &enc.encode_situation(&circle).unwrap(), Activation::Relu).unwrap();

    let panel = load("panel");
    let penc = Encoder::<f64>::new(&panel);
    let pbases = penc.build_all_bases().unwrap();
    let d = deduce(&panel, &pbases, &penc.encode_situation(&s1).unwrap(), Activation::Heaviside).unwrap();
    let by_name: BTreeMap<&str, f64> =
        d.descriptions.iter().map(|&i| panel.name(i)).zip(d.values.iter().copied()).collect();

    let ok = close(&r1.coefficients, &[1.0, 1.0])
        && close(&[r1.probability], &[1.0])
        && close(&rc.coefficients, &[1.0, 0.0])
        && close(&[rc.probability, rc_relu.probability], &[0.5, 0.5])
        && by_name.len() == 2
        && close(&[by_name["Fig"], by_name["Panel"]], &[1.0, 0.5]);
    check(
        ok,
        format!(
            "s1: x = {:?}, p = {}; circle: x = {:?}, p = {} (relu {}); panel s1: Fig {}, Panel {} (tol {WORKED_TOL:.0e})",
            r1.coefficients,
            r1.probability,
            rc.coefficients,
            rc.probability,
            rc_relu.probability,
            by_name["Fig"],
            by_name["Panel"]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("theorem equivalence", theorem_equivalence),
        ("basis soundness", basis_soundness),
        ("gradient check", gradient_check),
        ("encoder properties", encoder_properties),
        ("complexity", complexity),
        ("parser round-trips", parser_round_trips),
        ("worked examples", worked_examples),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
