//! Report tables and plots under `<dir>/report/`.
//!
//! Absent values (metrics undefined for an outcome, degenerate contrast
//! factors) are written as empty cells and left out of the plots.

use std::path::{Path, PathBuf};

use super::store::{sig9, write_atomic, Store};
use super::summary::{build, load, Loaded, Summary};
use super::svg;
use super::CampaignError;
use crate::metrics::TrialMetrics;

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub dir: PathBuf,
    /// Every file written, in a fixed order.
    pub files: Vec<PathBuf>,
}

fn cell(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Missions of every algorithm ordered by map traversability, then map and
/// trial index.
fn missions(loaded: &Loaded) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = loaded.maps.iter().flat_map(|m| m.trials.iter().map(move |t| (m.index, t.index))).collect();
    order.sort_by(|a, b| loaded.maps[a.0].env.trav.total_cmp(&loaded.maps[b.0].env.trav).then(a.cmp(b)));
    order
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CampaignError> {
        let p = self.dir.join(name);
        write_atomic(&p, bytes)?;
        self.files.push(p);
        Ok(())
    }
}

fn sr_by_bin(s: &Summary) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for a in &s.algorithms {
        for b in &a.bins {
            rows.push(vec![
                a.name.clone(),
                b.index.to_string(),
                sig9(b.trav_lo),
                sig9(b.trav_hi),
                b.maps.to_string(),
                b.trials.to_string(),
                b.finished.to_string(),
                cell(b.sr),
                cell(b.po.mean),
                cell(b.eo.mean),
                cell(b.agv.mean),
                cell(b.mp.mean),
            ]);
        }
    }
    rows
}

const METRICS: [(&str, &str, fn(&TrialMetrics) -> Option<f64>); 4] = [
    ("po", "path optimality (%)", |m| m.po),
    ("eo", "energy optimality (m/s^2)", |m| m.eo),
    ("agv", "average goal velocity (m/s)", |m| m.agv),
    ("mp", "mission progress (%)", |m| Some(m.mp)),
];

/// Writes the report of a complete results directory.
pub fn emit_report(dir: &Path) -> Result<ReportFiles, CampaignError> {
    let loaded = load(dir)?;
    let summary = build(&loaded)?;
    let mut w = Writer { dir: Store::new(dir).report_dir(), files: Vec::new() };
    let names: Vec<String> = summary.algorithms.iter().map(|a| a.name.clone()).collect();

    w.put(
        "sr_by_bin.csv",
        &table(
            &["algorithm", "bin", "trav_lo_m", "trav_hi_m", "maps", "trials", "finished", "sr", "po_mean_percent", "eo_mean_m_per_s2", "agv_mean_m_per_s", "mp_mean_percent"],
            sr_by_bin(&summary),
        ),
    )?;

    let order = missions(&loaded);
    let per_map = loaded.cfg.trials_per_map;
    let mut rows = Vec::new();
    for (a, runs) in loaded.runs.iter().enumerate() {
        for (rank, &(m, t)) in order.iter().enumerate() {
            let r = &runs[m * per_map + t];
            rows.push(vec![
                names[a].clone(),
                rank.to_string(),
                r.doc.id.clone(),
                sig9(loaded.maps[m].env.trav),
                r.metrics.outcome.as_str().to_string(),
                cell(r.metrics.po),
                cell(r.metrics.eo),
                cell(r.metrics.agv),
                sig9(r.metrics.mp),
            ]);
        }
    }
    w.put("missions.csv", &table(&["algorithm", "mission", "id", "trav_m", "outcome", "po_percent", "eo_m_per_s2", "agv_m_per_s", "mp_percent"], rows))?;

    let rows = summary.contrast.iter().map(|c| vec![c.a.clone(), c.b.clone(), cell(c.cf)]).collect();
    w.put("contrast_factor.csv", &table(&["a", "b", "cf"], rows))?;

    let rows = summary
        .map_summaries
        .iter()
        .map(|m| vec![m.index.to_string(), sig9(m.r_poisson), m.cylinders.to_string(), sig9(m.trav), sig9(m.p_tau), sig9(m.rgs), m.bin.to_string(), m.unreachable.to_string()])
        .collect();
    w.put("maps.csv", &table(&["map", "r_poisson_m", "cylinders", "trav_m", "p_tau", "rgs", "bin", "unreachable"], rows))?;

    let bins = summary.algorithms.first().map(|a| a.bins.as_slice()).unwrap_or(&[]);
    let categories: Vec<String> = bins.iter().map(|b| format!("{}-{}", svg_label(b.trav_lo), svg_label(b.trav_hi))).collect();
    let series: Vec<(String, Vec<Option<f64>>)> = summary.algorithms.iter().map(|a| (a.name.clone(), a.bins.iter().map(|b| b.sr).collect())).collect();
    w.put("sr_by_bin.svg", svg::bar_chart("Success rate by traversability", "traversability bin (m)", "success rate", &categories, &series, Some(1.0)).as_bytes())?;

    for (key, title, get) in METRICS {
        let series: Vec<(String, Vec<(f64, f64)>)> = loaded
            .runs
            .iter()
            .enumerate()
            .map(|(a, runs)| {
                let pts = order.iter().enumerate().filter_map(|(rank, &(m, t))| get(&runs[m * per_map + t].metrics).map(|v| (rank as f64, v))).collect();
                (names[a].clone(), pts)
            })
            .collect();
        w.put(&format!("missions_{key}.svg"), svg::xy_chart(title, "mission (sorted by traversability)", title, &series, false).as_bytes())?;
    }

    let cells: Vec<Vec<Option<f64>>> = names.iter().map(|a| names.iter().map(|b| summary.contrast.iter().find(|c| &c.a == a && &c.b == b).and_then(|c| c.cf)).collect()).collect();
    w.put("contrast_factor.svg", svg::heatmap("Contrast factor CF(row, column)", &names, &cells).as_bytes())?;

    let pts = summary.map_summaries.iter().map(|m| (m.rgs, m.trav)).collect();
    w.put("trav_vs_rgs.svg", svg::xy_chart("Traversability against relative gap size", "relative gap size", "traversability (m)", &[("maps".into(), pts)], false).as_bytes())?;

    Ok(ReportFiles { dir: w.dir, files: w.files })
}

fn svg_label(x: f64) -> String {
    format!("{x:.1}")
}
