//! Finite-difference check of the ReLU Jacobian.
//!
//! The numeric side only ever calls [`deduce`], so it shares no code with
//! [`jacobian`] beyond the per-description solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoder::{Bases, Vector};
use crate::ontology::Ontology;
use crate::reasoner::{deduce, jacobian, Activation, ReasonerError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    pub trials: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
    /// Points with any `|x_i|` at or below this are resampled, so the
    /// difference stencil never straddles a kink.
    pub kink_margin: f64,
    /// Sampling range for each coordinate of `v`.
    pub range: (f64, f64),
    /// Give up after this many rejected samples per accepted one.
    pub max_rejections: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 42, step: 1e-5, kink_margin: 1e-4, range: (-1.0, 3.0), max_rejections: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub trials: usize,
    pub rejected: usize,
    /// Largest elementwise relative error over all accepted points.
    pub max_relative_error: f64,
}

/// `|a - n| / max(|a|, |n|)`, or the absolute difference when both are below 1e-8.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale > 1e-8 {
        diff / scale
    } else {
        diff
    }
}

fn far_from_kinks(o: &Ontology, bases: &Bases<f64>, v: &Vector<f64>, margin: f64) -> Result<bool, ReasonerError> {
    for &d in o.descriptions() {
        let basis = bases.get(&d).ok_or_else(|| ReasonerError::MissingBasis(o.name(d).to_string()))?;
        if basis.solve(v)?.coefficients.iter().any(|x| x.abs() <= margin) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares [`jacobian`] against central differences of the ReLU [`deduce`]
/// map at `trials` random points.
pub fn gradcheck(o: &Ontology, bases: &Bases<f64>, config: &GradcheckConfig) -> Result<GradcheckReport, ReasonerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = o.dim();
    let h = config.step;
    let mut report = GradcheckReport { trials: 0, rejected: 0, max_relative_error: 0.0 };
    let budget = config.trials.saturating_mul(config.max_rejections.max(1));
    while report.trials < config.trials && report.rejected < budget {
        let v = Vector::from_vec((0..dim).map(|_| rng.gen_range(config.range.0..config.range.1)).collect());
        if !far_from_kinks(o, bases, &v, config.kink_margin)? {
            report.rejected += 1;
            continue;
        }
        let analytic = jacobian(o, bases, &v)?.matrix;
        for j in 0..dim {
            let mut plus = v.clone().into_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = deduce(o, bases, &Vector::from_vec(plus), Activation::Relu)?.values;
            let fm = deduce(o, bases, &Vector::from_vec(minus), Activation::Relu)?.values;
            for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
                let numeric = (a - b) / (2.0 * h);
                let err = relative_error(analytic[(row, j)], numeric);
                report.max_relative_error = report.max_relative_error.max(err);
            }
        }
        report.trials += 1;
    }
    Ok(report)
}
