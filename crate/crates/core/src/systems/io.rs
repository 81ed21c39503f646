//! JSON system-definition files. Suspension cocycles round-trip completely;
//! flow systems are referenced by the name of a built-in field family (their
//! right-hand sides cannot live in a data file).

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::catalog::{saddle_cycle_system, SADDLE_A, SADDLE_B};
use super::{SuspensionCocycle, SuspensionOrbit, System, SystemsError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitDef {
    pub period: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub roof: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub kind: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<Vec<OrbitDef>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<Vec<f64>>>,
}

/// Parses a system-definition JSON document.
pub fn parse_system(json: &str) -> Result<System, SystemsError> {
    let file: SystemFile =
        serde_json::from_str(json).map_err(|e| SystemsError::Definition(e.to_string()))?;
    match file.kind.as_str() {
        "suspension" => {
            let fiber_dim = file
                .fiber_dim
                .ok_or_else(|| SystemsError::Definition("suspension needs fiber_dim".into()))?;
            let orbit_defs = file
                .orbits
                .ok_or_else(|| SystemsError::Definition("suspension needs orbits".into()))?;
            let mut orbits = Vec::new();
            for def in orbit_defs {
                let mut matrices = Vec::new();
                for rows in &def.matrices {
                    if rows.len() != fiber_dim || rows.iter().any(|r| r.len() != fiber_dim) {
                        return Err(SystemsError::Definition(format!(
                            "fiber matrix is not {fiber_dim}x{fiber_dim}"
                        )));
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    matrices.push(DMatrix::from_row_slice(fiber_dim, fiber_dim, &flat));
                }
                orbits.push(SuspensionOrbit { period: def.period, matrices, roof: def.roof });
            }
            Ok(System::Suspension(SuspensionCocycle::new(file.name, fiber_dim, orbits)?))
        }
        "flow" => {
            // Flow right-hand sides are code; files select a built-in family.
            match file.name.as_str() {
                "saddle-cycle" => {
                    let params = file.params.unwrap_or_default();
                    let a = params.get("a").copied().unwrap_or(SADDLE_A);
                    let b = params.get("b").copied().unwrap_or(SADDLE_B);
                    let mut sys = saddle_cycle_system(a, b);
                    if let Some(seeds) = file.seeds {
                        sys.seeds = seeds.into_iter().map(DVector::from_vec).collect();
                    }
                    Ok(System::Flow(sys))
                }
                other => Err(SystemsError::Definition(format!(
                    "unknown flow field family '{other}' (flow files must name a built-in field)"
                ))),
            }
        }
        other => Err(SystemsError::Definition(format!("unknown system kind '{other}'"))),
    }
}

/// Loads a system-definition JSON file from disk.
pub fn load_system(path: &Path) -> Result<System, SystemsError> {
    let text = std::fs::read_to_string(path)?;
    parse_system(&text)
}

/// Emits a system in the definition-file schema.
pub fn emit_system(system: &System) -> SystemFile {
    match system {
        System::Suspension(cos) => SystemFile {
            kind: "suspension".into(),
            name: cos.name.clone(),
            fiber_dim: Some(cos.fiber_dim),
            dim: None,
            orbits: Some(
                cos.orbits
                    .iter()
                    .map(|o| OrbitDef {
                        period: o.period,
                        matrices: o
                            .matrices
                            .iter()
                            .map(|m| {
                                (0..m.nrows())
                                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                                    .collect()
                            })
                            .collect(),
                        roof: o.roof.clone(),
                    })
                    .collect(),
            ),
            params: None,
            seeds: None,
        },
        System::Flow(flow) => {
            let mut params = BTreeMap::new();
            if flow.name == "saddle-cycle" {
                params.insert("a".to_string(), SADDLE_A);
                params.insert("b".to_string(), SADDLE_B);
            }
            SystemFile {
                kind: "flow".into(),
                name: flow.name.clone(),
                fiber_dim: None,
                dim: Some(flow.dim),
                orbits: None,
                params: Some(params),
                seeds: Some(flow.seeds.iter().map(|s| s.iter().copied().collect()).collect()),
            }
        }
    }
}

/// Serializes a system definition to pretty JSON.
pub fn system_to_json(system: &System) -> String {
    serde_json::to_string_pretty(&emit_system(system)).expect("system file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::catalog_entry;

    #[test]
    fn suspension_round_trip() {
        let entry = catalog_entry("mixed-saddles").unwrap();
        let json = system_to_json(&entry.system);
        let parsed = parse_system(&json).unwrap();
        match (entry.system, parsed) {
            (System::Suspension(a), System::Suspension(b)) => {
                assert_eq!(a.fiber_dim, b.fiber_dim);
                assert_eq!(a.orbits.len(), b.orbits.len());
                for (oa, ob) in a.orbits.iter().zip(&b.orbits) {
                    assert_eq!(oa.period, ob.period);
                    for (ma, mb) in oa.matrices.iter().zip(&ob.matrices) {
                        assert!((ma - mb).abs().max() < 1e-15);
                    }
                }
            }
            _ => panic!("kind changed in round trip"),
        }
    }

    #[test]
    fn flow_file_selects_builtin_family() {
        let entry = catalog_entry("saddle-cycle").unwrap();
        let json = system_to_json(&entry.system);
        match parse_system(&json).unwrap() {
            System::Flow(f) => assert_eq!(f.dim, 3),
            _ => panic!("expected flow"),
        }
    }

    #[test]
    fn zero_matrix_file_is_rejected() {
        let json = r#"{
            "kind": "suspension", "name": "bad", "fiber_dim": 2,
            "orbits": [{ "period": 1, "matrices": [[[0.0,0.0],[0.0,0.0]]], "roof": [1.0] }]
        }"#;
        assert!(matches!(parse_system(json), Err(SystemsError::InvertibilityError { .. })));
    }
}
