//! Scenarios shipped with the crate.

use serde::Deserialize;

/// A bundled scenario: its name and JSON text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundledScenario {
    pub name: &'static str,
    pub json: &'static str,
}

#[derive(Deserialize)]
struct Header {
    #[serde(default)]
    description: String,
    #[serde(default)]
    budget_seconds: Option<f64>,
    pipeline: PipelineHeader,
}

#[derive(Deserialize)]
struct PipelineHeader {
    name: String,
}

impl BundledScenario {
    /// One-line description, as written in the file.
    pub fn description(&self) -> String {
        self.header().map(|h| h.description).unwrap_or_default()
    }

    pub fn pipeline(&self) -> String {
        self.header().map(|h| h.pipeline.name).unwrap_or_default()
    }

    pub fn budget_seconds(&self) -> Option<f64> {
        self.header().and_then(|h| h.budget_seconds)
    }

    fn header(&self) -> Option<Header> {
        serde_json::from_str(self.json).ok()
    }
}

macro_rules! entry {
    ($name:literal) => {
        BundledScenario {
            name: $name,
            json: include_str!(concat!("../../../../scenarios/", $name, ".json")),
        }
    };
}

/// Sorted by name.
static CATALOG: &[BundledScenario] = &[
    entry!("catmap_bump_holonomy"),
    entry!("catmap_coboundary_reconstruct"),
    entry!("catmap_conjugate_poc_violation"),
    entry!("catmap_conjugate_reconstruct"),
    entry!("catmap_livsic_poc"),
    entry!("catmap_livsic_regularity"),
    entry!("catmap_nondominated_bump"),
    entry!("catmap_rotation_livsic"),
    entry!("sft_bump_holonomy"),
    entry!("sft_half_turn_witness_failure"),
    entry!("sft_no_fixed_point_period2"),
];

pub fn bundled() -> &'static [BundledScenario] {
    CATALOG
}

pub fn find_bundled(name: &str) -> Option<&'static BundledScenario> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    CATALOG.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_str;

    #[test]
    fn every_bundled_scenario_loads_and_prepares() {
        assert!(CATALOG.windows(2).all(|w| w[0].name < w[1].name));
        for b in CATALOG {
            let s = load_str(b.json, &[]).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(s.name, b.name);
            assert!(!b.description().is_empty());
            s.prepare().unwrap_or_else(|e| panic!("{}: {e}", b.name));
        }
        assert!(find_bundled("catmap_rotation_livsic.json").is_some());
        assert!(find_bundled("nope").is_none());
    }
}
