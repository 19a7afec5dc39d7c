use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluation::{run_evaluation, DensityConfig, EvaluationSummary};
use crate::mdp_env::ACTION_COUNT;
use crate::mdp_env::OBS_DIM;
use crate::rl_core::{Checkpoint, Policy};
use crate::{Error, Result};

/// One column of a comparison table: a summary, or the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepColumn {
    pub label: String,
    pub phi: f64,
    pub density: DensityConfig,
    pub summary: Option<EvaluationSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub n: usize,
    pub seed0: u64,
    pub columns: Vec<SweepColumn>,
}

const ROWS: [&str; 6] = [
    "collisions (%)",
    "conflicts (%)",
    "mean merge velocity (m/s)",
    "TTC_L1 < 10 s (%)",
    "TTC_T1 < 10 s (%)",
    "G_c/G_0 > 0.5 (%)",
];

fn row_values(s: &EvaluationSummary) -> [f64; 6] {
    [
        s.collision_pct,
        s.conflict_pct,
        s.mean_merge_velocity,
        s.pct_ttc_l1_below_10s,
        s.pct_ttc_t1_below_10s,
        s.pct_gap_ratio_above_half,
    ]
}

impl SweepTable {
    /// Metrics as rows, one column per entry; missing columns show `n/a`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| metric |");
        for c in &self.columns {
            let _ = write!(out, " {} |", c.label);
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.columns.len()));
        out.push('\n');
        for (k, name) in ROWS.iter().enumerate() {
            let _ = write!(out, "| {name} |");
            for c in &self.columns {
                match &c.summary {
                    Some(s) => {
                        let _ = write!(out, " {:.1} |", row_values(s)[k]);
                    }
                    None => out.push_str(" n/a |"),
                }
            }
            out.push('\n');
        }
        for c in self.columns.iter().filter(|c| c.error.is_some()) {
            let _ = writeln!(
                out,
                "\n{}: {}",
                c.label,
                c.error.as_deref().unwrap_or_default()
            );
        }
        out
    }

    /// Long format: one line per (column, metric).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,phi,density,metric,value\n");
        for c in &self.columns {
            for (k, name) in ROWS.iter().enumerate() {
                let value = c
                    .summary
                    .map(|s| row_values(&s)[k].to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},\"{}\",{}",
                    c.label, c.phi, c.density.name, name, value
                );
            }
        }
        out
    }
}

fn load_policy(path: &Path) -> Result<Box<dyn Policy + Send>> {
    let ckpt = Checkpoint::load(path)?;
    if ckpt.observation_dim() != OBS_DIM || ckpt.n_actions != ACTION_COUNT {
        return Err(Error::Config(format!(
            "{}: network has {} inputs and {} actions, expected {OBS_DIM} and {ACTION_COUNT}",
            path.display(),
            ckpt.observation_dim(),
            ckpt.n_actions
        )));
    }
    Ok(ckpt.policy())
}

/// Evaluate one checkpoint per SVO angle at a fixed density. A checkpoint
/// that is missing or unreadable yields a column with an error message;
/// simulator faults abort the sweep.
pub fn svo_sweep(
    checkpoints: &[(f64, Option<PathBuf>)],
    density: DensityConfig,
    n: usize,
    seed0: u64,
    parallel: bool,
) -> Result<SweepTable> {
    let mut columns = Vec::new();
    for (phi, path) in checkpoints {
        let label = format!("phi={phi:.4}");
        let policy = match path {
            None => Err(format!("no checkpoint given for phi={phi}")),
            Some(p) => load_policy(p).map_err(|e| e.to_string()),
        };
        let (summary, error) = match policy {
            Ok(policy) => (
                Some(run_evaluation(policy.as_ref(), density, *phi, n, seed0, parallel)?.summary),
                None,
            ),
            Err(e) => (None, Some(e)),
        };
        columns.push(SweepColumn {
            label,
            phi: *phi,
            density,
            summary,
            error,
        });
    }
    Ok(SweepTable { n, seed0, columns })
}

/// Evaluate one policy across several densities.
pub fn density_sweep(
    policy: &dyn Policy,
    phi: f64,
    densities: &[DensityConfig],
    n: usize,
    seed0: u64,
    parallel: bool,
) -> Result<SweepTable> {
    let mut columns = Vec::new();
    for &density in densities {
        let eval = run_evaluation(policy, density, phi, n, seed0, parallel)?;
        columns.push(SweepColumn {
            label: density.name.to_string(),
            phi,
            density,
            summary: Some(eval.summary),
            error: None,
        });
    }
    Ok(SweepTable { n, seed0, columns })
}
