//! Tidy long-format plot data: one row per `(analysis, series, x, y)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub analysis: String,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

impl PlotRow {
    pub fn new(analysis: &str, series: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            analysis: analysis.to_string(),
            series: series.into(),
            x,
            y,
        }
    }
}

pub fn plot_csv(rows: &[PlotRow]) -> Vec<u8> {
    let mut out = String::from("analysis,series,x,y\n");
    for r in rows {
        out.push_str(&format!("{},{},{:e},{:e}\n", r.analysis, r.series, r.x, r.y));
    }
    out.into_bytes()
}
