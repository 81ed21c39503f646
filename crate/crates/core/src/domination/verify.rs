//! End-to-end pipelines: the equivalence of flow partial domination and LPF
//! domination, and the contraction-implies-domination coarsening check.

use std::collections::BTreeMap;

use serde::Serialize;

use super::prepare::{analytic_splitting, prepare, AnalysisBundle};
use super::{
    extract_poincare_splitting, reconstruct_flow_splitting, test_dominated,
    test_partially_dominated, test_uniform_contraction, ContractionVerdict, DominationConfig,
    DominationError, DominationReport, Fiber, PointBundles, Splitting, SplittingKind, Verdict,
};
use crate::linalg::Subspace;
use crate::systems::System;

/// Projects a three-bundle tangent splitting to the normal fiber through the
/// per-point frames: the forward direction of the equivalence.
pub fn project_to_normal(
    splitting: &Splitting,
    bundle: &AnalysisBundle,
) -> Result<Splitting, DominationError> {
    if splitting.kind != SplittingKind::ThreeBundleWithFlow {
        return Err(DominationError::WrongKind { expected: "three_bundle_with_flow" });
    }
    let mut out = Vec::new();
    for (ti, pts) in splitting.bundles.iter().enumerate() {
        let mut npts = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            let frame = &bundle.frames[ti][i];
            let e = Subspace::from_cols(&(frame.transpose() * p.e.basis()))?;
            let f = Subspace::from_cols(&(frame.transpose() * p.f.basis()))?;
            npts.push(PointBundles { e, x: None, f });
        }
        out.push(npts);
    }
    Ok(Splitting { kind: SplittingKind::TwoBundle, fiber: Fiber::Normal, bundles: out })
}

fn staged(stage: &str, e: DominationError) -> DominationError {
    DominationError::ReconstructionFailed(format!("stage {stage}: {e}"))
}

/// Both directions of the equivalence on one system, with the verdicts and
/// their agreement.
#[derive(Debug, Serialize)]
pub struct EquivalenceReport {
    pub system: String,
    /// Domination test of the extracted LPF splitting.
    pub extracted_lpf: Option<DominationReport>,
    /// Partial-domination test of the reconstructed flow splitting.
    pub reconstructed_flow: Option<DominationReport>,
    /// Partial-domination test of the declared analytic splitting.
    pub analytic_flow: Option<DominationReport>,
    /// Domination test of the analytic splitting projected to the normal
    /// fiber (the forward direction).
    pub analytic_projection_lpf: Option<DominationReport>,
    pub lpf_dominated: bool,
    pub flow_partially_dominated: bool,
    pub agree: bool,
    /// Non-fatal findings per pipeline stage (e.g. no singular-value gap).
    pub notes: BTreeMap<String, String>,
}

/// Runs the full pipeline: extract an LPF splitting, test it, reconstruct the
/// flow splitting and test it, and independently project the declared
/// analytic splitting (when present) down to the normal fiber.
pub fn verify_equivalence(
    system: &System,
    cfg: &DominationConfig,
) -> Result<EquivalenceReport, DominationError> {
    let bundle = prepare(system, cfg).map_err(|e| staged("prepare", e))?;
    let mut notes = BTreeMap::new();
    let mut extracted_lpf = None;
    let mut reconstructed_flow = None;

    match extract_poincare_splitting(&bundle.normal, bundle.n_window, cfg.gap_min, cfg.dim_hint) {
        Ok(lpf_split) => {
            let rep = test_dominated(&lpf_split, &bundle.normal, cfg.horizon, cfg)
                .map_err(|e| staged("lpf-test", e))?;
            let dominated = rep.verdict == Verdict::Dominated;
            extracted_lpf = Some(rep);
            if dominated {
                match reconstruct_flow_splitting(&lpf_split, &bundle, cfg) {
                    Ok(flow_split) => {
                        let rep =
                            test_partially_dominated(&flow_split, &bundle.tangent, cfg.horizon, cfg)
                                .map_err(|e| staged("flow-test", e))?;
                        reconstructed_flow = Some(rep);
                    }
                    Err(DominationError::ReconstructionFailed(msg)) => {
                        notes.insert("reconstruct".into(), msg);
                    }
                    Err(e) => return Err(staged("reconstruct", e)),
                }
            }
        }
        Err(DominationError::NoGap { best_ratio }) => {
            notes.insert(
                "extract".into(),
                format!("no singular-value gap (best ratio {best_ratio:.4})"),
            );
        }
        Err(e) => return Err(staged("extract", e)),
    }

    let mut analytic_flow = None;
    let mut analytic_projection_lpf = None;
    if let Some(analytic) = system_analytic(system) {
        let flow_split =
            analytic_splitting(&analytic, &bundle).map_err(|e| staged("analytic", e))?;
        analytic_flow = Some(
            test_partially_dominated(&flow_split, &bundle.tangent, cfg.horizon, cfg)
                .map_err(|e| staged("analytic-flow-test", e))?,
        );
        let projected =
            project_to_normal(&flow_split, &bundle).map_err(|e| staged("project", e))?;
        analytic_projection_lpf = Some(
            test_dominated(&projected, &bundle.normal, cfg.horizon, cfg)
                .map_err(|e| staged("projection-test", e))?,
        );
    }

    let is_dom = |r: &Option<DominationReport>| {
        r.as_ref().map(|r| r.verdict == Verdict::Dominated).unwrap_or(false)
    };
    let lpf_dominated = is_dom(&extracted_lpf) || is_dom(&analytic_projection_lpf);
    let flow_partially_dominated = is_dom(&reconstructed_flow) || is_dom(&analytic_flow);
    Ok(EquivalenceReport {
        system: system.name().to_string(),
        extracted_lpf,
        reconstructed_flow,
        analytic_flow,
        analytic_projection_lpf,
        lpf_dominated,
        flow_partially_dominated,
        agree: lpf_dominated == flow_partially_dominated,
        notes,
    })
}

fn system_analytic(system: &System) -> Option<crate::systems::AnalyticSplitting> {
    // Catalog systems carry their analytic splitting; file systems may share
    // a catalog name and inherit it.
    crate::systems::catalog_entry(system.name()).ok().and_then(|e| e.analytic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarsenSide {
    /// (E, <X> + F)
    KeepE,
    /// (E + <X>, F)
    KeepF,
}

/// Coarsens a three-bundle splitting to a two-bundle one by absorbing the
/// flow line into one side.
pub fn coarsen(splitting: &Splitting, side: CoarsenSide) -> Result<Splitting, DominationError> {
    if splitting.kind != SplittingKind::ThreeBundleWithFlow {
        return Err(DominationError::WrongKind { expected: "three_bundle_with_flow" });
    }
    let mut out = Vec::new();
    for pts in &splitting.bundles {
        let mut npts = Vec::new();
        for p in pts {
            let x = p.x.as_ref().ok_or(DominationError::WrongKind {
                expected: "three_bundle_with_flow (middle bundle present)",
            })?;
            let (e, f) = match side {
                CoarsenSide::KeepE => (p.e.clone(), Subspace::direct_sum(&[x, &p.f])?),
                CoarsenSide::KeepF => (Subspace::direct_sum(&[&p.e, x])?, p.f.clone()),
            };
            npts.push(PointBundles { e, x: None, f });
        }
        out.push(npts);
    }
    Ok(Splitting { kind: SplittingKind::TwoBundle, fiber: splitting.fiber, bundles: out })
}

/// Outcome of the coarsening check: for each uniform side, the domination
/// report of the corresponding two-bundle coarsening.
#[derive(Debug, Serialize)]
pub struct ContractionImpliesDomination {
    pub system: String,
    pub applicable: bool,
    /// Present when E is uniformly contracting: report on (E, <X> + F).
    pub e_side: Option<DominationReport>,
    /// Present when F is uniformly expanding: report on (E + <X>, F).
    pub f_side: Option<DominationReport>,
    /// True when applicable and every tested coarsening is dominated.
    pub holds: bool,
}

/// Checks that a certified uniform bundle of a partially dominated splitting
/// also dominates (or is dominated by) the flow direction: the coarsened
/// two-bundle splittings must test dominated. Systems with no uniform side
/// are reported not applicable.
pub fn verify_contraction_implies_domination(
    system: &System,
    cfg: &DominationConfig,
) -> Result<ContractionImpliesDomination, DominationError> {
    let bundle = prepare(system, cfg).map_err(|e| staged("prepare", e))?;
    let splitting = match system_analytic(system) {
        Some(a) => analytic_splitting(&a, &bundle).map_err(|e| staged("analytic", e))?,
        None => {
            let lpf = extract_poincare_splitting(
                &bundle.normal,
                bundle.n_window,
                cfg.gap_min,
                cfg.dim_hint,
            )?;
            reconstruct_flow_splitting(&lpf, &bundle, cfg)?
        }
    };
    let partial = test_partially_dominated(&splitting, &bundle.tangent, cfg.horizon, cfg)?;
    if partial.verdict != Verdict::Dominated {
        return Ok(ContractionImpliesDomination {
            system: system.name().to_string(),
            applicable: false,
            e_side: None,
            f_side: None,
            holds: false,
        });
    }
    let e_rep = test_uniform_contraction(&splitting, &bundle.tangent, cfg.horizon, cfg, |p| &p.e)?;
    let f_rep = test_uniform_contraction(&splitting, &bundle.tangent, cfg.horizon, cfg, |p| &p.f)?;
    let mut e_side = None;
    let mut f_side = None;
    if e_rep.verdict == ContractionVerdict::Contracting {
        let c = coarsen(&splitting, CoarsenSide::KeepE)?;
        e_side = Some(test_dominated(&c, &bundle.tangent, cfg.horizon, cfg)?);
    }
    if f_rep.verdict == ContractionVerdict::Expanding {
        let c = coarsen(&splitting, CoarsenSide::KeepF)?;
        f_side = Some(test_dominated(&c, &bundle.tangent, cfg.horizon, cfg)?);
    }
    let applicable = e_side.is_some() || f_side.is_some();
    let holds = applicable
        && e_side.as_ref().map(|r| r.verdict == Verdict::Dominated).unwrap_or(true)
        && f_side.as_ref().map(|r| r.verdict == Verdict::Dominated).unwrap_or(true);
    Ok(ContractionImpliesDomination {
        system: system.name().to_string(),
        applicable,
        e_side,
        f_side,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::catalog_entry;

    #[test]
    fn equivalence_cat_agrees_dominated() {
        let entry = catalog_entry("cat-suspension").unwrap();
        let cfg = DominationConfig::default();
        let rep = verify_equivalence(&entry.system, &cfg).unwrap();
        assert!(rep.lpf_dominated);
        assert!(rep.flow_partially_dominated);
        assert!(rep.agree);
        let lpf = rep.extracted_lpf.unwrap();
        let expected = 2.0 * ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((lpf.fitted_lambda - expected).abs() < 0.01 * expected);
    }

    #[test]
    fn equivalence_rotation_agrees_vacuously() {
        let entry = catalog_entry("rotation-suspension").unwrap();
        let cfg = DominationConfig::default();
        let rep = verify_equivalence(&entry.system, &cfg).unwrap();
        assert!(!rep.lpf_dominated);
        assert!(!rep.flow_partially_dominated);
        assert!(rep.agree);
        assert!(rep.notes.contains_key("extract"));
    }

    #[test]
    fn equivalence_mixed_saddles() {
        let entry = catalog_entry("mixed-saddles").unwrap();
        let cfg = DominationConfig::default();
        let rep = verify_equivalence(&entry.system, &cfg).unwrap();
        assert!(rep.agree);
        let ln2 = 2.0f64.ln();
        let lpf = rep.extracted_lpf.unwrap();
        assert!((lpf.fitted_lambda - ln2).abs() < 0.01 * ln2);
    }

    #[test]
    fn prop_2_2_ph_suspension() {
        let entry = catalog_entry("ph-suspension").unwrap();
        let cfg = DominationConfig::default();
        let rep = verify_contraction_implies_domination(&entry.system, &cfg).unwrap();
        assert!(rep.applicable);
        assert!(rep.holds);
        let e = rep.e_side.unwrap();
        let ln3 = 3.0f64.ln();
        assert!((e.fitted_lambda - ln3).abs() < 0.01 * ln3, "lambda {}", e.fitted_lambda);
        assert!(rep.f_side.is_none());
    }

    #[test]
    fn prop_2_2_not_applicable_for_mixed_saddles() {
        let entry = catalog_entry("mixed-saddles").unwrap();
        let cfg = DominationConfig::default();
        let rep = verify_contraction_implies_domination(&entry.system, &cfg).unwrap();
        assert!(!rep.applicable || (rep.e_side.is_none() && rep.f_side.is_none()));
        assert!(!rep.holds);
    }
}
