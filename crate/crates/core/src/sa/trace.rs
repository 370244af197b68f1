use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TRACE_VERSION: &str = "asyncsa-trace v1";

/// Reproducibility header of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: u64,
    pub dim: usize,
    /// Fully resolved configuration the run was started from.
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Row `n`: the iterate `x_n` with its residual, and the inputs of tick `n`
/// (the transition to `x_{n+1}`). The last row has no active agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u64,
    pub active: Vec<bool>,
    pub x: Vec<f64>,
    /// `a(ν(n,i))` per agent.
    pub step: Vec<f64>,
    pub error_norm: f64,
    pub max_delay: u64,
    /// `x_n` was produced by the projection branch.
    pub projected: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new(meta: TraceMeta) -> Self {
        RunTrace { meta, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_iterate(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.x.as_slice())
    }

    pub fn iterates(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|r| r.x.as_slice())
    }

    /// Active sets of every completed tick.
    pub fn active_sets(&self) -> Vec<Vec<bool>> {
        let done = self.rows.len().saturating_sub(1);
        self.rows[..done].iter().map(|r| r.active.clone()).collect()
    }

    pub fn csv_header(dim: usize) -> String {
        let mut cols = vec!["n".to_string()];
        cols.extend((0..dim).map(|i| format!("active_{i}")));
        cols.extend((0..dim).map(|i| format!("x_{i}")));
        cols.extend((0..dim).map(|i| format!("step_{i}")));
        cols.extend(["error_norm", "max_delay", "projected", "residual"].map(String::from));
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {TRACE_VERSION}")?;
        writeln!(w, "# seed={}", self.meta.seed)?;
        writeln!(w, "# config={}", serde_json::to_string(&self.meta.config).map_err(|e| Error::Parse(e.to_string()))?)?;
        writeln!(w, "{}", Self::csv_header(self.meta.dim))?;
        for r in &self.rows {
            let mut fields = vec![r.n.to_string()];
            fields.extend(r.active.iter().map(|a| (*a as u8).to_string()));
            fields.extend(r.x.iter().map(|v| format!("{v:?}")));
            fields.extend(r.step.iter().map(|v| format!("{v:?}")));
            fields.push(format!("{:?}", r.error_norm));
            fields.push(r.max_delay.to_string());
            fields.push((r.projected as u8).to_string());
            fields.push(format!("{:?}", r.residual));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut seed = None;
        let mut config = serde_json::Value::Null;
        let mut dim = None;
        let mut rows = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |what: &str| Error::Parse(format!("trace line {}: {what}", lineno + 1));
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some(v) = meta.strip_prefix("seed=") {
                    seed = Some(v.parse().map_err(|_| bad("bad seed"))?);
                } else if let Some(v) = meta.strip_prefix("config=") {
                    config = serde_json::from_str(v).map_err(|e| bad(&e.to_string()))?;
                }
                continue;
            }
            if line.starts_with("n,") {
                let cols = line.split(',').count();
                if cols < 5 || (cols - 5) % 3 != 0 {
                    return Err(bad("malformed header"));
                }
                dim = Some((cols - 5) / 3);
                continue;
            }
            let d = dim.ok_or_else(|| bad("row before header"))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 * d + 5 {
                return Err(bad("wrong field count"));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad("bad flag")),
            };
            rows.push(TraceRow {
                n: f[0].parse().map_err(|_| bad("bad tick"))?,
                active: f[1..=d].iter().map(|s| flag(s)).collect::<Result<_>>()?,
                x: f[d + 1..=2 * d].iter().map(|s| float(s)).collect::<Result<_>>()?,
                step: f[2 * d + 1..=3 * d].iter().map(|s| float(s)).collect::<Result<_>>()?,
                error_norm: float(f[3 * d + 1])?,
                max_delay: f[3 * d + 2].parse().map_err(|_| bad("bad delay"))?,
                projected: flag(f[3 * d + 3])?,
                residual: float(f[3 * d + 4])?,
            });
        }
        let dim = dim.ok_or_else(|| Error::Parse("trace has no header".into()))?;
        let seed = seed.ok_or_else(|| Error::Parse("trace has no seed".into()))?;
        Ok(RunTrace { meta: TraceMeta { seed, dim, config }, rows })
    }

    /// JSON lines: the metadata object first, then one object per row.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let json = |e: serde_json::Error| Error::Parse(e.to_string());
        writeln!(w, "{}", serde_json::to_string(&serde_json::json!({ "meta": &self.meta })).map_err(json)?)?;
        for r in &self.rows {
            writeln!(w, "{}", serde_json::to_string(r).map_err(json)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Head {
            meta: TraceMeta,
        }
        let json = |e: serde_json::Error| Error::Parse(e.to_string());
        let mut lines = r.lines();
        let head = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))??;
        let meta = serde_json::from_str::<Head>(&head).map_err(json)?.meta;
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                rows.push(serde_json::from_str(&line).map_err(json)?);
            }
        }
        Ok(RunTrace { meta, rows })
    }

    /// Writes CSV, or JSON lines when the extension is `jsonl`/`json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => self.write_jsonl(file),
            _ => self.write_csv(file),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Self::read_jsonl(file),
            _ => Self::read_csv(file),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        let meta = TraceMeta { seed: 42, dim: 2, config: serde_json::json!({"horizon": 1}) };
        let mut t = RunTrace::new(meta);
        t.rows.push(TraceRow {
            n: 0,
            active: vec![true, false],
            x: vec![0.1, -1e-300],
            step: vec![1.0 / 3.0, 0.1],
            error_norm: 0.25,
            max_delay: 0,
            projected: false,
            residual: 1.5e7,
        });
        t.rows.push(TraceRow {
            n: 1,
            active: vec![false, false],
            x: vec![0.2, 3.0],
            step: vec![0.25, 0.1],
            error_norm: 0.0,
            max_delay: 0,
            projected: true,
            residual: 0.0,
        });
        t
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("n,active_0,active_1,x_0,x_1,step_0,step_1,error_norm,max_delay,projected,residual"));
        assert_eq!(RunTrace::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        assert_eq!(RunTrace::read_jsonl(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(RunTrace::read_csv("# seed=1\n0,1,2\n".as_bytes()).is_err());
        assert!(RunTrace::read_csv("# seed=1\nn,active_0,x_0,step_0,error_norm,max_delay,projected,residual\n0,2,0.1,0.1,0,0,0,0\n".as_bytes()).is_err());
    }
}
