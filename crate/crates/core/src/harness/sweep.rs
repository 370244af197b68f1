use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::objectives::norm::euclidean;
use crate::sa::run;
use crate::stochastics::rng::mix;

/// Scalar recorded per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    FinalNorm,
    #[default]
    LogFinalNorm,
    Residual,
}

/// How each cell's run seed is derived from an entry of `seeds`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// Seed mixed with a hash of the cell's parameter assignment, kept to 63 bits.
    #[default]
    PerCell,
    /// The seed itself, giving common random numbers across the grid.
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParameter {
    /// Dotted path into the base configuration, e.g. `error.epsilon`.
    pub path: String,
    pub values: Vec<toml::Value>,
}

/// A base run configuration, a parameter grid and a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: toml::Table,
    #[serde(default)]
    pub parameters: Vec<SweepParameter>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub aggregate: Aggregate,
    #[serde(default)]
    pub seed_mode: SeedMode,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub base_seed: u64,
    pub run_seed: u64,
    pub assignment: Vec<(String, toml::Value)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub seed: u64,
    pub values: Vec<String>,
    /// `ok` or the failure kind.
    pub status: String,
    pub final_norm: f64,
    pub final_residual: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub paths: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub spec: serde_json::Value,
}

/// 64-bit FNV-1a, used for seed derivation because it is stable across
/// toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn canonical(assignment: &[(String, toml::Value)]) -> String {
    let mut parts: Vec<String> = assignment.iter().map(|(p, v)| format!("{p}={v}")).collect();
    parts.sort();
    parts.join(";")
}

pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut keys = path.split('.').peekable();
    let mut current = table;
    while let Some(key) = keys.next() {
        if key.is_empty() {
            return Err(Error::Config(format!("bad parameter path `{path}`")));
        }
        if keys.peek().is_none() {
            current.insert(key.to_string(), value);
            return Ok(());
        }
        let entry = current.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` in `{path}` is not a table")))?;
    }
    Err(Error::Config(format!("bad parameter path `{path}`")))
}

impl SweepSpec {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec: SweepSpec = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        spec.base_dir = base_dir.to_path_buf();
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        SweepSpec::from_toml_str(&text, &path.parent().map(Path::to_path_buf).unwrap_or_default())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        for p in &self.parameters {
            if p.values.is_empty() {
                return Err(Error::Config(format!("parameter `{}` has no values", p.path)));
            }
        }
        Ok(())
    }

    /// Cells in grid order: seeds outermost, the last parameter fastest.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut combos: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
        for p in &self.parameters {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    p.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((p.path.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        let mut cells = Vec::with_capacity(self.seeds.len() * combos.len());
        for &seed in &self.seeds {
            for assignment in &combos {
                let run_seed = match self.seed_mode {
                    SeedMode::Common => seed,
                    SeedMode::PerCell => mix(seed ^ fnv1a(canonical(assignment).as_bytes())) >> 1,
                };
                cells.push(SweepCell { index: cells.len(), base_seed: seed, run_seed, assignment: assignment.clone() });
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: &SweepCell) -> Result<RunConfig> {
        let mut table = self.base.clone();
        for (path, value) in &cell.assignment {
            set_path(&mut table, path, value.clone())?;
        }
        table.insert("seed".into(), toml::Value::Integer(cell.run_seed as i64));
        RunConfig::from_toml_value(toml::Value::Table(table), &self.base_dir)
    }

    fn run_cell(&self, cell: &SweepCell) -> Result<SweepRow> {
        let cfg = self.cell_config(cell)?;
        let spec = cfg.run_spec()?;
        let values = cell.assignment.iter().map(|(_, v)| v.to_string()).collect();
        let (status, final_norm, final_residual) = match run(&spec) {
            Ok(trace) => {
                let last = trace.rows.last().expect("runs record at least two rows");
                ("ok".to_string(), euclidean(&last.x), last.residual)
            }
            Err(failure) => match failure.error {
                Error::Divergence { .. } => ("diverged".to_string(), f64::INFINITY, f64::INFINITY),
                e => return Err(e),
            },
        };
        let value = match self.aggregate {
            Aggregate::FinalNorm => final_norm,
            Aggregate::LogFinalNorm => final_norm.ln(),
            Aggregate::Residual => final_residual,
        };
        Ok(SweepRow { cell: cell.index, seed: cell.run_seed, values, status, final_norm, final_residual, value })
    }
}

/// Runs every cell, in parallel on `jobs` threads, and returns the rows in
/// cell order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepTable> {
    spec.validate()?;
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rows = pool.install(|| cells.par_iter().map(|c| spec.run_cell(c)).collect::<Result<Vec<_>>>())?;
    rows.sort_by_key(|r| r.cell);
    Ok(SweepTable {
        paths: spec.parameters.iter().map(|p| p.path.clone()).collect(),
        rows,
        spec: serde_json::to_value(spec).expect("sweep specs serialize"),
    })
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# sweep={}", self.spec)?;
        let mut header = vec!["cell".to_string(), "seed".to_string()];
        header.extend(self.paths.iter().cloned());
        header.extend(["status", "final_norm", "final_residual", "value"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut f = vec![r.cell.to_string(), r.seed.to_string()];
            f.extend(r.values.iter().map(|v| if v.contains(',') { format!("\"{v}\"") } else { v.clone() }));
            f.push(r.status.clone());
            f.extend([r.final_norm, r.final_residual, r.value].map(|v| format!("{v:?}")));
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }
}
