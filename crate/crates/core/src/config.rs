//! Workbench configuration: one JSON document capturing every parameter
//! and gain a run depends on. Unknown keys are rejected; missing keys
//! fall back to the documented defaults.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::control::{PdGains, SmcGains};
use crate::dynamics::ManipulatorParams;
use crate::netapprox::NetConfig;
use crate::sim::{paper_scenarios, ControllerSetup, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkbenchConfig {
    pub params: ManipulatorParams,
    pub gains: SmcGains,
    pub pd: PdGains,
    pub net: NetConfig,
    /// User scenarios; an entry with a built-in name overrides it.
    pub scenarios: Vec<ScenarioSpec>,
    pub output_dir: String,
    /// Governs neural-compensator center placement only.
    pub seed: u64,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            params: ManipulatorParams::default(),
            gains: SmcGains::default(),
            pd: PdGains::default(),
            net: NetConfig::default(),
            scenarios: Vec::new(),
            output_dir: "out".into(),
            seed: 0,
        }
    }
}

impl WorkbenchConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: WorkbenchConfig =
            serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params.validate()?;
        self.gains.validate()?;
        self.pd.validate()?;
        self.net.validate()?;
        for sc in &self.scenarios {
            if sc.name.is_empty() {
                return Err("scenario.name: must be non-empty".into());
            }
            sc.validate()?;
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.scenarios.len() {
            return Err("scenarios: duplicate names".into());
        }
        Ok(())
    }

    /// Built-in scenarios with user overrides applied, then user-defined
    /// extras in declaration order.
    pub fn all_scenarios(&self) -> Vec<ScenarioSpec> {
        let mut out = paper_scenarios();
        for user in &self.scenarios {
            if let Some(slot) = out.iter_mut().find(|s| s.name == user.name) {
                *slot = user.clone();
            } else {
                out.push(user.clone());
            }
        }
        out
    }

    pub fn scenario(&self, name: &str) -> Option<ScenarioSpec> {
        self.all_scenarios().into_iter().find(|s| s.name == name)
    }

    pub fn scenario_names(&self) -> Vec<String> {
        self.all_scenarios().into_iter().map(|s| s.name).collect()
    }

    /// Controller bundle with the placement seed applied.
    pub fn controller_setup(&self) -> ControllerSetup {
        let mut net = self.net.clone();
        net.seed = self.seed;
        ControllerSetup {
            gains: self.gains.clone(),
            pd: self.pd.clone(),
            net,
        }
    }
}
