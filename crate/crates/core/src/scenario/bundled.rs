//! Scenarios shipped with the binary.

use crate::error::{Error, Result};

pub struct BundledScenario {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(BundledScenario {
            name: $name,
            json: include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/", $name, ".json")),
        }),*]
    };
}

const BUNDLED: &[BundledScenario] = bundle!(
    "dipole_causality",
    "cherenkov_water",
    "single_mode_superposition",
    "thermal_variance",
    "hydrogen_2p_decay",
);

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.name).collect()
}

/// JSON text of a bundled scenario; the `.json` suffix is optional.
pub fn bundled(name: &str) -> Result<&'static str> {
    let key = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED
        .iter()
        .find(|b| b.name == key)
        .map(|b| b.json)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn every_bundled_scenario_validates() {
        for b in BUNDLED {
            let s = Scenario::from_json(b.json).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(s.name, b.name);
            assert!(!s.description.is_empty() && !s.topic.is_empty());
        }
        assert!(matches!(bundled("nope"), Err(Error::UnknownScenario(_))));
        assert!(bundled("thermal_variance.json").is_ok());
    }
}
