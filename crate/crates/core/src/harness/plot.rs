use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentTable;
use crate::error::{Error, Result};

/// Layout of the emitted plot data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlotStyle {
    /// One row per point: `series,x,y`.
    #[default]
    Long,
    /// One row per `x`, one column per series.
    Wide,
}

impl std::str::FromStr for PlotStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long" => Ok(PlotStyle::Long),
            "wide" => Ok(PlotStyle::Wide),
            other => Err(Error::Config(format!("unknown plot style `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: usize,
    pub x: f64,
    pub y: f64,
}

/// Points with `x` the error bound `ε` and `y = log ‖x_N‖`, one series per sample run.
pub fn plot_points(table: &ExperimentTable) -> Vec<PlotPoint> {
    table.rows.iter().map(|r| PlotPoint { series: r.run_id, x: r.epsilon, y: r.log_final_norm }).collect()
}

pub fn emit_plot_data<W: Write>(table: &ExperimentTable, style: PlotStyle, w: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    write_points(&plot_points(table), &table.config, style, w)
}

pub fn write_points<W: Write>(points: &[PlotPoint], config: &serde_json::Value, style: PlotStyle, mut w: W) -> Result<()> {
    writeln!(w, "# config={config}")?;
    writeln!(w, "# x=epsilon y=log_final_norm")?;
    match style {
        PlotStyle::Long => {
            writeln!(w, "series,x,y")?;
            for p in points {
                writeln!(w, "{},{:?},{:?}", p.series, p.x, p.y)?;
            }
        }
        PlotStyle::Wide => {
            let mut series: Vec<usize> = points.iter().map(|p| p.series).collect();
            series.sort_unstable();
            series.dedup();
            let mut xs: Vec<f64> = Vec::new();
            for p in points {
                if !xs.iter().any(|x| x.to_bits() == p.x.to_bits()) {
                    xs.push(p.x);
                }
            }
            let cols: Vec<String> = series.iter().map(|s| format!("series_{s}")).collect();
            writeln!(w, "x,{}", cols.join(","))?;
            for x in xs {
                let cells: Vec<String> = series
                    .iter()
                    .map(|s| {
                        points
                            .iter()
                            .find(|p| p.series == *s && p.x.to_bits() == x.to_bits())
                            .map_or(String::new(), |p| format!("{:?}", p.y))
                    })
                    .collect();
                writeln!(w, "{x:?},{}", cells.join(","))?;
            }
        }
    }
    Ok(())
}

/// Parses either layout back into points, ordered by series then file order.
pub fn parse_plot_data<R: BufRead>(r: R) -> Result<Vec<PlotPoint>> {
    let mut header: Option<Vec<String>> = None;
    let mut points = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("plot line {}: {what}", k + 1));
        let fields: Vec<&str> = line.split(',').collect();
        let Some(cols) = &header else {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != cols.len() {
            return Err(bad("wrong field count"));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        if cols[0] == "series" {
            points.push(PlotPoint {
                series: fields[0].parse().map_err(|_| bad("bad series"))?,
                x: float(fields[1])?,
                y: float(fields[2])?,
            });
        } else {
            let x = float(fields[0])?;
            for (col, cell) in cols[1..].iter().zip(&fields[1..]) {
                if cell.is_empty() {
                    continue;
                }
                let series = col
                    .strip_prefix("series_")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("bad series column"))?;
                points.push(PlotPoint { series, x, y: float(cell)? });
            }
        }
    }
    if header.is_none() {
        return Err(Error::Parse("plot data has no header".into()));
    }
    points.sort_by_key(|p| p.series);
    Ok(points)
}
