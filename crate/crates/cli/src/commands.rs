use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use dnspace::encoder::Bases;
use dnspace::enumerate::enumerate_situations;
use dnspace::gradcheck::{gradcheck as run_gradcheck, GradcheckConfig};
use dnspace::reasoner::{deduce_reports, symbolic_satisfies, verify_theorems};
use dnspace::synthetic::{bench as run_bench, Shape};
use dnspace::{
    build_ontology, parse_ontology, parse_situation, Activation, ElementKind, EncodeError, Encoder, Ontology, Situation,
};
use serde_json::{json, Value};

use crate::diag::{Diagnostic, Failure};

const GRADCHECK_TOLERANCE: f64 = 1e-5;
/// Counterexamples kept in full for machine output; all are counted.
const MACHINE_KEEP: usize = 100;

pub struct Report {
    pub human: String,
    pub machine: Value,
    pub success: bool,
}

fn label(path: &Path) -> String {
    if path == Path::new("-") {
        "<stdin>".into()
    } else {
        path.display().to_string()
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut src = String::new();
    let result = if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut src).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|s| src = s)
    };
    result.map_err(|e| Failure::Usage(Diagnostic::new("Io", format!("cannot read {}: {e}", label(path)))))?;
    Ok(src)
}

fn check_stdin_once(paths: &[&Path]) -> Result<(), Failure> {
    if paths.iter().filter(|p| **p == Path::new("-")).count() > 1 {
        return Err(Failure::Usage(Diagnostic::new("Usage", "only one input can be read from stdin")));
    }
    Ok(())
}

fn load_ontology(path: &Path) -> Result<Ontology, Failure> {
    let file = label(path);
    let src = read_input(path)?;
    let decls = parse_ontology(&src).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;
    build_ontology(&decls).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))
}

fn load_situation(path: &Path) -> Result<Situation, Failure> {
    let file = label(path);
    let src = read_input(path)?;
    parse_situation(&src).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))
}

/// All bases, or one diagnostic per rank-deficient description.
fn compile(enc: &Encoder<'_, f64>, file: &str) -> Result<Bases<f64>, Failure> {
    let mut bases = Bases::new();
    let mut errors = Vec::new();
    for (d, result) in enc.try_all_bases() {
        match result {
            Ok(b) => {
                bases.insert(d, b);
            }
            Err(e) => errors.push(Diagnostic::from(&e).in_file(file)),
        }
    }
    if errors.is_empty() {
        Ok(bases)
    } else {
        Err(Failure::Invalid(errors))
    }
}

fn encode_error(e: &EncodeError, file: &str) -> Failure {
    Failure::invalid(Diagnostic::from(e).in_file(file))
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

pub fn validate(path: &Path) -> Result<Report, Failure> {
    let file = label(path);
    let o = load_ontology(path)?;
    let enc = Encoder::<f64>::new(&o);
    compile(&enc, &file)?;
    let mut human = String::new();
    for w in o.warnings() {
        writeln!(human, "warning: {w}").unwrap();
    }
    let (nd, nr) = (o.descriptions().len(), o.roles().len());
    writeln!(human, "{}, {}, dim {}", plural(nd, "description"), plural(nr, "role"), o.dim()).unwrap();
    let machine = json!({
        "ok": true,
        "descriptions": nd,
        "roles": nr,
        "dim": o.dim(),
        "warnings": o.warnings(),
    });
    Ok(Report { human, machine, success: true })
}

pub fn encode(path: &Path, situation: Option<&Path>, element: Option<&str>) -> Result<Report, Failure> {
    let file = label(path);
    if let Some(s) = situation {
        check_stdin_once(&[path, s])?;
    }
    let o = load_ontology(path)?;
    let enc = Encoder::<f64>::new(&o);
    let (subject, v) = match (situation, element) {
        (Some(s), _) => {
            let sit = load_situation(s)?;
            let v = enc.encode_situation(&sit).map_err(|e| encode_error(&e, &label(s)))?;
            (json!({ "situation": sit.id }), v)
        }
        (None, Some(name)) => {
            let id = o.resolve(name).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;
            (json!({ "element": name }), enc.element_vector(id).clone())
        }
        (None, None) => {
            return Err(Failure::Usage(Diagnostic::new("Usage", "encode needs a situation file or --element NAME")))
        }
    };
    let names: Vec<&str> = o.elements().map(|x| o.name(x)).collect();
    let width = names.iter().map(|n| n.chars().count()).max().unwrap_or(0);
    let mut human = String::new();
    for (n, x) in names.iter().zip(v.as_slice()) {
        writeln!(human, "{n:<width$} {x}").unwrap();
    }
    let mut machine = subject;
    machine["coordinates"] = json!(names);
    machine["vector"] = json!(v.as_slice());
    Ok(Report { human, machine, success: true })
}

pub fn infer(path: &Path, situation: &Path, mode: Activation, clamp: bool) -> Result<Report, Failure> {
    check_stdin_once(&[path, situation])?;
    let file = label(path);
    let o = load_ontology(path)?;
    let sit = load_situation(situation)?;
    let enc = Encoder::<f64>::new(&o);
    let bases = compile(&enc, &file)?;
    let v = enc.encode_situation(&sit).map_err(|e| encode_error(&e, &label(situation)))?;
    let reports =
        deduce_reports(&o, &bases, &v, mode).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;
    let shown = |p: f64| if clamp { p.min(1.0) } else { p };

    let mut rows: Vec<(&str, f64)> = reports.iter().map(|r| (o.name(r.description), shown(r.probability))).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut human = String::new();
    for (name, p) in rows {
        writeln!(human, "{name} {p:.3}").unwrap();
    }
    let descriptions: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "name": o.name(r.description),
                "probability": shown(r.probability),
                "coefficients": r.coefficients,
                "active_mask": r.active_mask,
                "residual_norm": r.residual_norm,
            })
        })
        .collect();
    let machine = json!({
        "situation": sit.id,
        "mode": mode,
        "clamp": clamp,
        "descriptions": descriptions,
    });
    Ok(Report { human, machine, success: true })
}

pub fn explain(path: &Path, situation: &Path, description: &str, mode: Activation) -> Result<Report, Failure> {
    check_stdin_once(&[path, situation])?;
    let file = label(path);
    let o = load_ontology(path)?;
    let sit = load_situation(situation)?;
    let d = match o.id(description).filter(|&d| o.kind(d) == ElementKind::Description) {
        Some(d) => d,
        None => {
            let available: Vec<&str> = o.descriptions().iter().map(|&d| o.name(d)).collect();
            let msg = format!("unknown description `{description}`; available: {}", available.join(", "));
            return Err(Failure::invalid(Diagnostic::new("UnknownDescription", msg)));
        }
    };
    let enc = Encoder::<f64>::new(&o);
    let basis = enc.build_basis(d).map_err(|e| encode_error(&e, &file))?;
    let v = enc.encode_situation(&sit).map_err(|e| encode_error(&e, &label(situation)))?;
    let report = dnspace::reasoner::satisfaction(&basis, &v, mode)
        .map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;
    let verdict = symbolic_satisfies(&o, &sit, d).map_err(|e| Failure::invalid(Diagnostic::from(&e)))?;

    let mut human = String::new();
    writeln!(human, "{description}: p = {:.3} ({mode})", report.probability).unwrap();
    let mut components = Vec::new();
    for (i, w) in verdict.witnesses.iter().enumerate() {
        let name = o.name(w.component);
        let x = report.coefficients[i];
        let active = report.active_mask[i];
        let mut by: Vec<String> = w.entities.clone();
        by.extend(w.situations.iter().map(|s| format!("situation {s}")));
        let matched = if by.is_empty() { "unmatched".to_string() } else { format!("matched by {}", by.join(", ")) };
        let flag = if active { "active" } else { "inactive" };
        writeln!(human, "  {name}: coeff {x:.3} {flag}, {matched}").unwrap();
        components.push(json!({
            "name": name,
            "coefficient": x,
            "active": active,
            "matched_entities": w.entities,
            "matched_situations": w.situations,
        }));
    }
    let oracle = if verdict.satisfied {
        "satisfied"
    } else if verdict.nearly_satisfied {
        "nearly satisfied"
    } else {
        "not satisfied"
    };
    writeln!(human, "  oracle: {oracle}").unwrap();
    let machine = json!({
        "description": description,
        "situation": sit.id,
        "mode": mode,
        "probability": report.probability,
        "residual_norm": report.residual_norm,
        "components": components,
        "oracle": { "satisfied": verdict.satisfied, "nearly_satisfied": verdict.nearly_satisfied },
    });
    Ok(Report { human, machine, success: true })
}

pub fn verify(path: &Path, max_entities: usize, max_depth: usize, show: usize) -> Result<Report, Failure> {
    let file = label(path);
    let o = load_ontology(path)?;
    let enc = Encoder::<f64>::new(&o);
    let bases = compile(&enc, &file)?;
    let situations = enumerate_situations(&o, max_entities, max_depth);
    let report = verify_theorems(&enc, &bases, &situations, show.max(MACHINE_KEEP))
        .map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;

    let mut human = String::new();
    writeln!(
        human,
        "{} x {} ({} pairs; up to {} entities, depth {})",
        plural(report.situations, "situation"),
        plural(o.descriptions().len(), "description"),
        report.pairs_checked,
        max_entities,
        max_depth
    )
    .unwrap();
    writeln!(human, "{}", plural(report.counterexample_count, "counterexample")).unwrap();
    for (d, n) in &report.by_description {
        writeln!(human, "  {d}: {n}").unwrap();
    }
    for (i, c) in report.counterexamples.iter().take(show).enumerate() {
        let matched: Vec<&str> = c.oracle.matched_components.iter().map(|&m| o.name(m)).collect();
        let violated: Vec<String> = c.violated.iter().map(|p| p.to_string()).collect();
        writeln!(human, "#{}: {} on situation {}", i + 1, c.description, c.situation.id).unwrap();
        writeln!(human, "  situation {}", serde_json::to_string(&c.situation).expect("json")).unwrap();
        writeln!(human, "  x = {:?}, active = {:?}, p = {:.3}", c.coefficients, c.active_mask, c.probability).unwrap();
        writeln!(
            human,
            "  oracle: satisfied = {}, nearly = {}, matched = [{}]",
            c.oracle.satisfied,
            c.oracle.nearly_satisfied,
            matched.join(", ")
        )
        .unwrap();
        writeln!(human, "  violates: {}", violated.join("; ")).unwrap();
    }
    if report.counterexample_count > show {
        writeln!(human, "... {} more", report.counterexample_count - show).unwrap();
    }
    let success = report.is_clean();
    let machine = json!({
        "ok": success,
        "max_entities": max_entities,
        "max_depth": max_depth,
        "report": report,
    });
    Ok(Report { human, machine, success })
}

pub fn gradcheck(path: &Path, trials: usize, seed: u64) -> Result<Report, Failure> {
    let file = label(path);
    let o = load_ontology(path)?;
    let enc = Encoder::<f64>::new(&o);
    let bases = compile(&enc, &file)?;
    let config = GradcheckConfig { trials, seed, ..GradcheckConfig::default() };
    let report =
        run_gradcheck(&o, &bases, &config).map_err(|e| Failure::invalid(Diagnostic::from(&e).in_file(&file)))?;
    let complete = report.trials == trials;
    let success = complete && report.max_relative_error <= GRADCHECK_TOLERANCE;
    let human = if trials == 0 {
        "0 points: vacuous pass\n".to_string()
    } else if !complete {
        format!(
            "only {} of {trials} points found away from kinks ({} rejected): fail\n",
            report.trials, report.rejected
        )
    } else {
        format!(
            "{} points, max relative error {:.3e} (tolerance {GRADCHECK_TOLERANCE:e}): {}\n",
            report.trials,
            report.max_relative_error,
            if success { "pass" } else { "fail" }
        )
    };
    let machine = json!({
        "ok": success,
        "vacuous": trials == 0,
        "seed": seed,
        "step": config.step,
        "tolerance": GRADCHECK_TOLERANCE,
        "report": report,
    });
    Ok(Report { human, machine, success })
}

pub fn bench(sizes: &[usize], shape: Shape, seed: u64, trials: usize) -> Result<Report, Failure> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Failure::Usage(Diagnostic::new("Usage", "sizes must be positive")));
    }
    let report =
        run_bench(shape, sizes, trials, seed).map_err(|e| Failure::invalid(Diagnostic::new("Bench", e.to_string())))?;
    let mut human = String::new();
    writeln!(human, "shape {shape}, seed {seed}, best of {}", trials.max(1)).unwrap();
    writeln!(human, "{:>8} {:>8} {:>12}", "|D|", "dim", "seconds").unwrap();
    for p in &report.points {
        writeln!(human, "{:>8} {:>8} {:>12.6}", p.descriptions, p.dim, p.seconds).unwrap();
    }
    if let Some(k) = report.exponent {
        writeln!(human, "fitted exponent {k:.3}").unwrap();
    }
    Ok(Report { human, machine: json!(report), success: true })
}
