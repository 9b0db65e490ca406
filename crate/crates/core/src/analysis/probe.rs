//! Levi-form sampling on the boundary, with a disc witness when a negative
//! eigenvalue is found.

use serde::Serialize;

use crate::analysis::fit::{fit_blowup_exponent, log_grid, PowerFit};
use crate::cvector::CVector;
use crate::distance::{boundary_projection, boundary_samples_base};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::levi::levi_form;
use crate::par;
use crate::upper::disc_upper_bound_nonpsc;

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub samples: usize,
    pub seed: u64,
    /// Eigenvalues below `-tolerance max(|dr|, 1)` count as negative.
    pub tolerance: f64,
    /// Depths for the witness sweep.
    pub deltas: Vec<f64>,
    /// Witness candidates tried, most negative first.
    pub attempts: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            samples: 200,
            seed: 1,
            tolerance: 1e-8,
            deltas: log_grid(1e-3, 1e-6, 7),
            attempts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LeviNonnegative,
    NotPseudoconvex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSample {
    pub delta: f64,
    pub upper: f64,
    /// `|<dr(p_delta), X_delta>|`.
    pub normal_pairing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSweep {
    pub point: CVector,
    /// Least restricted Levi eigenvalue of `r / |grad r|` is `-2a`.
    pub a: f64,
    pub samples: Vec<WitnessSample>,
    pub failures: Vec<String>,
    pub fit: Option<PowerFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub domain: String,
    pub verdict: Verdict,
    pub message: String,
    pub sampled: usize,
    /// Samples skipped for a vanishing gradient or a singular jet.
    pub skipped: usize,
    /// Least restricted Levi eigenvalue over the samples, divided by `|dr|`.
    pub min_eigenvalue: f64,
    pub min_point: CVector,
    pub witness: Option<WitnessSweep>,
}

fn witness_sweep(dom: &DomainSpec, p: &CVector, deltas: &[f64]) -> WitnessSweep {
    let runs = par::map(deltas, |&d| (d, disc_upper_bound_nonpsc(dom, p, d)));
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut a = f64::NAN;
    for (d, r) in runs {
        match r {
            Ok(w) => {
                a = w.a;
                samples.push(WitnessSample {
                    delta: d,
                    upper: w.upper.value,
                    normal_pairing: w.normal_pairing,
                });
            }
            Err(e) => failures.push(format!("delta {d:e}: {e}")),
        }
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.delta, s.upper)).collect();
    WitnessSweep {
        point: p.clone(),
        a,
        fit: fit_blowup_exponent(&pts).ok(),
        samples,
        failures,
    }
}

/// Samples the restricted Levi form over boundary points (seeded random
/// rays from the witness point, plus the projection of the witness point).
/// A negative eigenvalue triggers a sweep of witness discs at that point;
/// otherwise the verdict only states nonnegativity on the samples.
pub fn pseudoconvexity_probe(dom: &DomainSpec, opts: &ProbeOptions) -> Result<ProbeReport> {
    let mut points: Vec<CVector> = boundary_samples_base(dom, opts.samples, opts.seed)
        .into_iter()
        .map(|b| dom.frame.from_base(&b))
        .collect();
    if let Ok(proj) = boundary_projection(dom, &dom.frame.from_base(&dom.witness_point)) {
        points.insert(0, proj.point);
    }
    let evals = par::map(&points, |p| {
        let levi = levi_form(&dom.field, &dom.frame.to_base(p)).ok()?;
        let g = levi.gradient.norm();
        if g <= 1e-12 {
            return None;
        }
        let e = levi.min_restricted()?;
        Some((e / g, e < -opts.tolerance * g.max(1.0)))
    });
    let mut scored: Vec<(f64, bool, CVector)> = evals
        .iter()
        .zip(&points)
        .filter_map(|(e, p)| e.map(|(v, neg)| (v, neg, p.clone())))
        .collect();
    let skipped = points.len() - scored.len();
    if scored.is_empty() {
        return Err(Error::Degenerate("no usable boundary samples".into()));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (min_eigenvalue, _, min_point) = scored[0].clone();
    let mut report = ProbeReport {
        domain: dom.name.clone(),
        verdict: Verdict::LeviNonnegative,
        message: format!(
            "Levi-nonnegative on sample set ({} points; not a proof of pseudoconvexity)",
            scored.len()
        ),
        sampled: scored.len(),
        skipped,
        min_eigenvalue,
        min_point,
        witness: None,
    };
    let negative: Vec<&CVector> = scored.iter().filter(|s| s.1).map(|s| &s.2).collect();
    if negative.is_empty() {
        return Ok(report);
    }
    report.verdict = Verdict::NotPseudoconvex;
    let mut best: Option<WitnessSweep> = None;
    for p in negative.into_iter().take(opts.attempts.max(1)) {
        let w = witness_sweep(dom, p, &opts.deltas);
        let good = w.fit.is_some();
        if best.as_ref().is_none_or(|b| w.samples.len() > b.samples.len()) {
            best = Some(w);
        }
        if good {
            break;
        }
    }
    let w = best.expect("at least one attempt");
    report.message = match w.fit {
        Some(f) => format!(
            "NOT pseudoconvex: normal-direction upper bound with exponent <= 1/2 witnessed at {:?} (fitted slope {:.4})",
            w.point.to_real(),
            f.slope
        ),
        None => format!(
            "NOT pseudoconvex: restricted Levi eigenvalue {:.4e} at {:?}; witness discs not certified",
            min_eigenvalue,
            w.point.to_real()
        ),
    };
    report.witness = Some(w);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{quartic, saddle, unit_ball};

    fn quick() -> ProbeOptions {
        ProbeOptions {
            samples: 40,
            deltas: log_grid(1e-3, 1e-5, 4),
            ..ProbeOptions::default()
        }
    }

    #[test]
    fn ball_and_quartic_are_levi_nonnegative() {
        let r = pseudoconvexity_probe(&unit_ball(2).unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::LeviNonnegative);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-6, "{}", r.min_eigenvalue);
        let r = pseudoconvexity_probe(&quartic().unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::LeviNonnegative);
        assert!(r.message.starts_with("Levi-nonnegative on sample set"));
    }

    #[test]
    fn saddle_has_a_witness() {
        let r = pseudoconvexity_probe(&saddle().unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::NotPseudoconvex);
        let w = r.witness.unwrap();
        let slope = w.fit.unwrap().slope;
        assert!((slope + 0.5).abs() < 0.05, "{slope}");
        assert!(r.message.starts_with("NOT pseudoconvex"));
    }
}
