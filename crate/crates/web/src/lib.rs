//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every method returns JSON text so the page needs no generated
//! TypeScript types.

use ransleep::env::{EnvConfig, ScenarioKind};
use ransleep::oracle::enumerate_shutdowns;
use ransleep::ScenarioState;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    config: EnvConfig,
    state: ScenarioState,
}

#[wasm_bindgen]
impl Demo {
    /// A fresh scenario. `planted` selects the layout with one obvious
    /// shutdown candidate.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, planted: bool) -> Result<Demo, JsError> {
        let config = if planted { EnvConfig::planted() } else { EnvConfig::default() };
        let state = ScenarioState::reset(&config, seed).map_err(js)?;
        Ok(Demo { config, state })
    }

    /// Redraws the scenario with a new seed, keeping the scenario family.
    pub fn reset(&mut self, seed: u64) -> Result<(), JsError> {
        self.state = ScenarioState::reset(&self.config, seed).map_err(js)?;
        Ok(())
    }

    pub fn planted(&self) -> bool {
        self.config.scenario == ScenarioKind::PlantedEmpty
    }

    /// Sites, UEs and network totals.
    pub fn snapshot(&self) -> Result<String, JsError> {
        Ok(self.snapshot_value().map_err(js)?.to_string())
    }

    /// Scores of every possible single-cell shutdown, without changing the
    /// scenario.
    pub fn oracle(&self) -> Result<String, JsError> {
        let report = enumerate_shutdowns(&self.state).map_err(js)?;
        let entries: Vec<Value> = report
            .entries
            .iter()
            .map(|e| {
                json!({
                    "cell": e.cell,
                    "value": e.value,
                    "g_perf": e.outcome.g_perf,
                    "p_gain": e.outcome.p_gain,
                    "violations": e.violations.to_string(),
                })
            })
            .collect();
        Ok(json!({ "best": report.best_cell, "entries": entries }).to_string())
    }

    /// Switches `cell` off, hands its UEs over and returns the outcome.
    pub fn shutdown(&mut self, cell: usize) -> Result<String, JsError> {
        let out = self.state.apply_shutdown(cell).map_err(js)?;
        Ok(json!({
            "cell": out.shut_cell,
            "reward": out.reward,
            "g_perf": out.g_perf,
            "p_gain": out.p_gain,
            "violations": out.violations.to_string(),
            "handovers": out.handovers.len(),
            "power_before": out.before.p_avrg,
            "power_after": out.after.p_avrg,
        })
        .to_string())
    }
}

impl Demo {
    fn snapshot_value(&self) -> ransleep::Result<Value> {
        let s = &self.state;
        let (width, height) = s.layout().area();
        let sites: Vec<Value> = s
            .layout()
            .sites()
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "x": c.position.x,
                    "y": c.position.y,
                    "active": s.active()[c.id],
                })
            })
            .collect();
        let ues: Vec<Value> = s
            .ues()
            .iter()
            .map(|u| {
                json!({
                    "x": u.position.x,
                    "y": u.position.y,
                    "cell": u.serving_cell,
                    "thp": u.throughput,
                })
            })
            .collect();
        let summary = s.network_summary()?;
        Ok(json!({
            "width": width,
            "height": height,
            "sites": sites,
            "ues": ues,
            "power_w": s.power_total(),
            "avg_cell_throughput": summary.r_avrg,
            "done": s.is_done(),
        }))
    }
}

fn js(e: ransleep::Error) -> JsError {
    JsError::new(&e.to_string())
}
