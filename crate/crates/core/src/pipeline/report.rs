use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{Artifacts, RunConfig};
use crate::error::Result;
use crate::io_util::write_file;

/// Wall-clock timings. Reported in the text report only, so the structured
/// report stays byte-identical across repeated runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub train_secs: Option<f64>,
    pub encode_secs: f64,
    pub kmeans_raw_secs: f64,
    pub kmeans_dac_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub dataset: String,
    pub test_samples: usize,
    pub k: usize,
    pub ari_raw: f64,
    pub ari_dac: f64,
    /// `100 · (ari_dac - ari_raw) / ari_raw`, defined when `ari_raw > 0`.
    pub improvement_pct: Option<f64>,
    pub wcss_raw: f64,
    pub wcss_dac: f64,
    pub loss_trace: Vec<f64>,
    #[serde(skip)]
    pub timings: Timings,
    pub config: BTreeMap<String, String>,
}

pub(crate) fn improvement(ari_raw: f64, ari_dac: f64) -> Option<f64> {
    (ari_raw > 0.0).then(|| 100.0 * (ari_dac - ari_raw) / ari_raw)
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        config: &RunConfig,
        test_samples: usize,
        ari_raw: f64,
        ari_dac: f64,
        wcss_raw: f64,
        wcss_dac: f64,
        loss_trace: Vec<f64>,
        timings: Timings,
    ) -> Self {
        Self {
            dataset: config.dataset_name.clone(),
            test_samples,
            k: config.k,
            ari_raw,
            ari_dac,
            improvement_pct: improvement(ari_raw, ari_dac),
            wcss_raw,
            wcss_dac,
            loss_trace,
            timings,
            config: config.to_map(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        let in_range = |v: f64| (-1.0..=1.0).contains(&v);
        in_range(self.ari_raw)
            && in_range(self.ari_dac)
            && self.improvement_pct == improvement(self.ari_raw, self.ari_dac)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "Clustering results on {} testing dataset",
            self.dataset
        )
        .unwrap();
        writeln!(out, "samples: {}   k: {}", self.test_samples, self.k).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "        {:>10}  {:>10}", "K-Means", "DAC").unwrap();
        writeln!(
            out,
            "ARI     {:>10.4}  {:>10.4}",
            self.ari_raw, self.ari_dac
        )
        .unwrap();
        writeln!(
            out,
            "WCSS    {:>10.4}  {:>10.4}",
            self.wcss_raw, self.wcss_dac
        )
        .unwrap();
        match self.improvement_pct {
            Some(p) => writeln!(out, "improvement: {p:.2}%").unwrap(),
            None => writeln!(out, "improvement: undefined (raw ARI <= 0)").unwrap(),
        }
        writeln!(out).unwrap();
        if let (Some(first), Some(last)) = (self.loss_trace.first(), self.loss_trace.last()) {
            writeln!(
                out,
                "training loss: {first:.6e} (epoch 1) -> {last:.6e} (epoch {})",
                self.loss_trace.len()
            )
            .unwrap();
        }
        let t = &self.timings;
        if let Some(train) = t.train_secs {
            writeln!(out, "train: {train:.1}s").unwrap();
        }
        writeln!(
            out,
            "encode: {:.2}s   k-means raw: {:.2}s   k-means codes: {:.2}s",
            t.encode_secs, t.kmeans_raw_secs, t.kmeans_dac_secs
        )
        .unwrap();
        out
    }

    pub fn write(&self, art: &Artifacts) -> Result<()> {
        write_file(&art.report_text(), self.to_text().as_bytes())?;
        write_file(&art.report_json(), self.to_json().as_bytes())
    }
}
