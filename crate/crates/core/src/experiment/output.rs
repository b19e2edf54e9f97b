use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::LinkDirection;
use super::runner::ResultRecord;
use super::stats::{mean, percentile};
use crate::combining::Scheme;
use crate::error::Result;
use crate::scenario::ChannelModel;

pub const CSV_HEADER: &str = "setup,sweep_value,scheme,model,link,ue,se_bits_per_s_per_hz,flags";

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_decimal(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    format!("{}", round12(x))
}

fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn write_results_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.name()).collect();
        let ue = r.ue.map(|u| u.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.setup,
            r.sweep_value,
            r.scheme.name(),
            r.model.name(),
            r.link.name(),
            ue,
            format_decimal(r.se),
            flags.join(";"),
        )
        .expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Aggregates of one (scheme, model, link, sweep value) curve point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub scheme: Scheme,
    pub model: ChannelModel,
    pub link: LinkDirection,
    pub sweep_value: usize,
    /// Mean over all UEs and setups; NaN when every cell failed.
    pub mean_se: f64,
    /// Per-setup sum over UEs, averaged over setups.
    pub sum_se: f64,
    /// 10th percentile over all UEs and setups.
    pub p10_se: f64,
    /// Mean over setups for each UE index.
    pub per_ue_mean_se: Vec<f64>,
    pub setups: usize,
    pub failed_setups: usize,
}

type Key = (usize, Scheme, ChannelModel, LinkDirection);

/// Aggregates successful records; failure rows only count toward `failed_setups`.
/// Groups without successful records get NaN aggregates (`null` in JSON).
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryEntry> {
    #[derive(Default)]
    struct Group {
        all: Vec<f64>,
        per_setup: BTreeMap<u64, f64>,
        per_ue: BTreeMap<usize, Vec<f64>>,
        failed: usize,
    }
    let mut groups: BTreeMap<Key, Group> = BTreeMap::new();
    for r in records {
        let g = groups
            .entry((r.sweep_value, r.scheme, r.model, r.link))
            .or_default();
        match r.ue {
            Some(ue) if !r.failed() => {
                g.all.push(r.se);
                *g.per_setup.entry(r.setup).or_default() += r.se;
                g.per_ue.entry(ue).or_default().push(r.se);
            }
            _ => g.failed += 1,
        }
    }
    groups
        .into_iter()
        .map(|((sweep_value, scheme, model, link), g)| {
            let sums: Vec<f64> = g.per_setup.values().copied().collect();
            SummaryEntry {
                scheme,
                model,
                link,
                sweep_value,
                mean_se: round12(mean(&g.all)),
                sum_se: round12(mean(&sums)),
                p10_se: if g.all.is_empty() {
                    f64::NAN
                } else {
                    round12(percentile(&g.all, 0.1))
                },
                per_ue_mean_se: g.per_ue.values().map(|v| round12(mean(v))).collect(),
                setups: g.per_setup.len(),
                failed_setups: g.failed,
            }
        })
        .collect()
}

/// Writes `(figure, curve, x, y)` rows: average and sum SE against the swept
/// parameter, one curve per scheme, model and link.
pub fn write_plot_data(summary: &[SummaryEntry], path: &Path) -> Result<()> {
    let mut out = String::from("figure,curve,x,y\n");
    for (figure, pick) in [
        (
            "average_se",
            (|e: &SummaryEntry| e.mean_se) as fn(&SummaryEntry) -> f64,
        ),
        ("sum_se", |e| e.sum_se),
        ("p10_se", |e| e.p10_se),
    ] {
        let mut rows: Vec<&SummaryEntry> = summary.iter().filter(|e| e.setups > 0).collect();
        rows.sort_by_key(|e| (e.link, e.model, e.scheme, e.sweep_value));
        for e in rows {
            writeln!(
                out,
                "{figure},{}/{}/{},{},{}",
                e.link.name(),
                e.model.name(),
                e.scheme.name(),
                e.sweep_value,
                format_decimal(pick(e)),
            )
            .expect("writing to a String");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub plot_data: PathBuf,
}

/// Writes `results.csv`, `summary.json` and `plot_data.csv` into `dir`.
pub fn emit_results(records: &[ResultRecord], dir: &Path) -> Result<OutputPaths> {
    fs::create_dir_all(dir)?;
    let paths = OutputPaths {
        results: dir.join("results.csv"),
        summary: dir.join("summary.json"),
        plot_data: dir.join("plot_data.csv"),
    };
    write_results_csv(records, &paths.results)?;
    let summary = summarize(records);
    let mut json = serde_json::to_string_pretty(&summary)
        .map_err(|e| crate::error::Error::Parse(e.to_string()))?;
    json.push('\n');
    fs::write(&paths.summary, json)?;
    write_plot_data(&summary, &paths.plot_data)?;
    Ok(paths)
}
