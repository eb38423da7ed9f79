//! Per-step record of every intermediate encoding's scale, width and error.

use serde::Serialize;

use crate::encoding::BlockEncoding;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub label: String,
    pub alpha: f64,
    pub ancillas: usize,
    pub eps: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NormLedger {
    pub entries: Vec<LedgerEntry>,
    /// Step that new entries are filed under.
    step: usize,
}

impl NormLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<LedgerEntry>) -> Self {
        let step = entries.last().map_or(0, |e| e.step);
        NormLedger { entries, step }
    }

    pub fn begin_step(&mut self, step: usize) {
        self.step = step;
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn record(&mut self, label: &str, be: &BlockEncoding) {
        self.entries.push(LedgerEntry {
            step: self.step,
            label: label.to_string(),
            alpha: be.alpha(),
            ancillas: be.ancillas(),
            eps: be.eps(),
        });
    }

    /// Latest entry with `label` at `step`.
    pub fn get(&self, step: usize, label: &str) -> Option<&LedgerEntry> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.step == step && e.label == label)
    }

    pub fn alpha(&self, step: usize, label: &str) -> Option<f64> {
        self.get(step, label).map(|e| e.alpha)
    }

    /// `step,label,alpha,ancillas,eps` with a header row.
    pub fn to_csv(&self) -> crate::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| crate::Error::Io(std::io::Error::other(e));
        w.write_record(["step", "label", "alpha", "ancillas", "eps"])
            .map_err(io)?;
        for e in &self.entries {
            w.write_record([
                e.step.to_string(),
                e.label.clone(),
                format!("{:.12}", e.alpha),
                e.ancillas.to_string(),
                format!("{:e}", e.eps),
            ])
            .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
