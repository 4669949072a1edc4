//! Draws as single-column CSV, summaries as JSON.

use std::io::{self, Write};

use serde::Serialize;

use super::{Horizon, MomentEstimates, SearchCostSample};
use crate::model::Model;

pub fn write_draws_csv<W: Write>(mut out: W, draws: &[u64]) -> io::Result<()> {
    let mut buf = String::with_capacity(8 * draws.len() + 8);
    buf.push_str("draw\n");
    for d in draws {
        buf.push_str(&d.to_string());
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    model: &'a Model,
    horizon: &'a Horizon,
    #[serde(flatten)]
    estimates: &'a MomentEstimates,
}

/// Pretty-printed JSON summary (no draws), newline terminated.
pub fn summary_json(sample: &SearchCostSample) -> String {
    let summary = Summary {
        model: &sample.model,
        horizon: &sample.horizon,
        estimates: &sample.summary,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}
