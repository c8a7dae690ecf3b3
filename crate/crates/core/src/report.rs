//! Schema-versioned run reports: config echo, per-module sections and named
//! property verdicts, serialized as pretty JSON. serde_json prints floats in
//! the shortest form that round-trips, so every numeric field retains full
//! (up to 17 significant digits) precision.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::Path;

pub const SCHEMA_VERSION: &str = "coconvex-report-v1";

/// One named pass/fail property with human-readable detail.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub subcommand: String,
    pub seed: u64,
    /// Echo of the resolved configuration.
    pub config: Value,
    pub sections: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
}

impl RunReport {
    pub fn new(subcommand: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)
            .map_err(|e| Error::InvalidConfig(format!("config echo: {e}")))?;
        Ok(RunReport {
            schema: SCHEMA_VERSION,
            subcommand: subcommand.into(),
            seed,
            config,
            sections: Map::new(),
            verdicts: Vec::new(),
        })
    }

    pub fn add_section(&mut self, name: &str, payload: &impl Serialize) -> Result<()> {
        let value = serde_json::to_value(payload)
            .map_err(|e| Error::InvalidConfig(format!("section {name}: {e}")))?;
        self.sections.insert(name.into(), value);
        Ok(())
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: String) {
        self.verdicts.push(Verdict { name: name.into(), pass, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!(self)).expect("report serializes")
    }

    /// Writes report.json into `dir`, creating the directory if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_and_tracks_verdicts() {
        let mut report = RunReport::new("solve", 42, &serde_json::json!({"grid": 65})).unwrap();
        report.add_section("numbers", &serde_json::json!({"pi_over_12": 0.261_799_387_799_149_44f64})).unwrap();
        report.verdict("converged", true, "residual 1e-12".into());
        assert!(report.all_pass());
        report.verdict("band", false, "slope out of band".into());
        assert!(!report.all_pass());
        let text = report.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["schema"], SCHEMA_VERSION);
        // 17-significant-digit float survives the round trip bit-exactly.
        assert_eq!(parsed["sections"]["numbers"]["pi_over_12"].as_f64().unwrap(), 0.261_799_387_799_149_44);
    }
}
