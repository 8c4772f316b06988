//! Report rendering. Columns mirror the result-table layout: spatial
//! categories get T/Acc plus per-threshold entity-IoU pass rates and Acc;
//! the temporal category gets A/Acc, MAD, and per-window Time Acc / Acc.
//! Percentages and MAD carry one decimal place.

use serde_json::{json, Value};

use crate::datamodel::ScenarioCategory;
use crate::metrics::CategoryReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
    Structured,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "md",
            OutputFormat::Structured => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "markdown" => Some(OutputFormat::Markdown),
            "structured" => Some(OutputFormat::Structured),
            _ => None,
        }
    }
}

fn fmt1(v: f64) -> String {
    format!("{v:.1}")
}

/// Round to one decimal for structured output.
fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Shortest decimal form for threshold values in headers (0.25, 2, 6).
fn fmt_thresh(v: f64) -> String {
    format!("{v}")
}

/// Thresholds shown for a category: everything configured, except that the
/// hand-object table keeps only the lowest threshold unless full output is
/// requested.
fn visible_taus(report: &CategoryReport, full: bool) -> Vec<f64> {
    let taus: Vec<f64> = report.acc.iter().map(|(t, _)| *t).collect();
    if !full && report.category == ScenarioCategory::HandObjectCoGr && !taus.is_empty() {
        vec![taus[0]]
    } else {
        taus
    }
}

fn spatial_columns(report: &CategoryReport, full: bool) -> (Vec<String>, Vec<String>) {
    let mut headers = vec!["category".into(), "T/Acc".into()];
    let mut values = vec![
        report.category.label().to_string(),
        fmt1(report.t_acc.unwrap_or(0.0)),
    ];
    for tau in visible_taus(report, full) {
        let idx = report
            .per_entity_rate
            .iter()
            .position(|(t, _)| *t == tau)
            .expect("threshold present");
        for (kind, rate) in &report.per_entity_rate[idx].1 {
            headers.push(format!("{}IoU@{}", kind.label(), fmt_thresh(tau)));
            values.push(fmt1(*rate));
        }
        headers.push(format!("Acc@{}", fmt_thresh(tau)));
        values.push(fmt1(report.acc_at(tau).unwrap_or(0.0)));
    }
    (headers, values)
}

fn temporal_columns(report: &CategoryReport) -> (Vec<String>, Vec<String>) {
    let mut headers = vec!["category".into(), "A/Acc".into(), "MAD".into()];
    let mut values = vec![
        report.category.label().to_string(),
        fmt1(report.action_acc.unwrap_or(0.0)),
        report.mad.map(fmt1).unwrap_or_else(|| "-".into()),
    ];
    for (delta, row) in &report.acc_by_window {
        headers.push(format!("TimeAcc@{}s", fmt_thresh(*delta)));
        values.push(fmt1(row.time_acc));
        headers.push(format!("Acc@{}s", fmt_thresh(*delta)));
        values.push(fmt1(row.acc));
    }
    (headers, values)
}

fn columns(report: &CategoryReport, full: bool) -> (Vec<String>, Vec<String>) {
    if report.category.is_spatial() {
        spatial_columns(report, full)
    } else {
        temporal_columns(report)
    }
}

pub fn render_report(report: &CategoryReport, format: OutputFormat, full: bool) -> String {
    match format {
        OutputFormat::Csv => render_csv(report, full),
        OutputFormat::Markdown => render_markdown(report, full),
        OutputFormat::Structured => render_structured(report),
    }
}

fn render_csv(report: &CategoryReport, full: bool) -> String {
    let (headers, values) = columns(report, full);
    format!("{}\n{}\n", headers.join(","), values.join(","))
}

fn render_markdown(report: &CategoryReport, full: bool) -> String {
    let (headers, values) = columns(report, full);
    let mut s = format!(
        "### {} (scored {}, missing {})\n\n",
        report.category.label(),
        report.n_scored,
        report.n_missing
    );
    s.push_str(&format!("| {} |\n", headers.join(" | ")));
    s.push_str(&format!("|{}\n", "---|".repeat(headers.len())));
    s.push_str(&format!("| {} |\n", values.join(" | ")));
    s
}

/// Structured form keeps every configured threshold regardless of the
/// table-layout default; percentages are rounded to one decimal.
fn render_structured(report: &CategoryReport) -> String {
    let value = if report.category.is_spatial() {
        let thresholds: Vec<Value> = report
            .acc
            .iter()
            .map(|(tau, acc)| {
                let idx = report
                    .per_entity_rate
                    .iter()
                    .position(|(t, _)| t == tau)
                    .expect("threshold present");
                let rates: serde_json::Map<String, Value> = report.per_entity_rate[idx]
                    .1
                    .iter()
                    .map(|(k, v)| (k.label().to_string(), json!(round1(*v))))
                    .collect();
                json!({
                    "tau": tau,
                    "entity_rates": rates,
                    "acc": round1(*acc),
                })
            })
            .collect();
        json!({
            "category": report.category.label(),
            "n_scored": report.n_scored,
            "n_missing": report.n_missing,
            "t_acc": round1(report.t_acc.unwrap_or(0.0)),
            "thresholds": thresholds,
        })
    } else {
        let windows: Vec<Value> = report
            .acc_by_window
            .iter()
            .map(|(delta, row)| {
                json!({
                    "delta": delta,
                    "time_acc": round1(row.time_acc),
                    "acc": round1(row.acc),
                })
            })
            .collect();
        json!({
            "category": report.category.label(),
            "n_scored": report.n_scored,
            "n_missing": report.n_missing,
            "action_acc": round1(report.action_acc.unwrap_or(0.0)),
            "mad": report.mad.map(round1),
            "windows": windows,
        })
    };
    let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::datamodel::EntityKind;
    use crate::metrics::WindowRow;

    fn spatial_report() -> CategoryReport {
        let rates = |v: f64| {
            let mut m = BTreeMap::new();
            m.insert(EntityKind::Person, v);
            m
        };
        CategoryReport {
            category: ScenarioCategory::PersonGr,
            n_scored: 10,
            n_missing: 0,
            t_acc: Some(60.0),
            per_entity_rate: vec![(0.25, rates(40.0)), (0.5, rates(20.0))],
            acc: vec![(0.25, 40.0), (0.5, 20.0)],
            action_acc: None,
            mad: None,
            acc_by_window: vec![],
        }
    }

    fn temporal_report() -> CategoryReport {
        CategoryReport {
            category: ScenarioCategory::TemporalGr,
            n_scored: 3,
            n_missing: 0,
            t_acc: None,
            per_entity_rate: vec![],
            acc: vec![],
            action_acc: Some(100.0),
            mad: Some(4.0 / 3.0),
            acc_by_window: vec![
                (
                    2.0,
                    WindowRow {
                        time_acc: 100.0,
                        acc: 100.0,
                    },
                ),
                (
                    4.0,
                    WindowRow {
                        time_acc: 100.0,
                        acc: 100.0,
                    },
                ),
                (
                    6.0,
                    WindowRow {
                        time_acc: 100.0,
                        acc: 100.0,
                    },
                ),
            ],
        }
    }

    #[test]
    fn csv_spatial_layout() {
        let csv = render_csv(&spatial_report(), false);
        assert_eq!(
            csv,
            "category,T/Acc,PIoU@0.25,Acc@0.25,PIoU@0.5,Acc@0.5\n\
             person_gr,60.0,40.0,40.0,20.0,20.0\n"
        );
    }

    #[test]
    fn csv_temporal_prints_mad_to_one_decimal() {
        let csv = render_csv(&temporal_report(), false);
        assert!(csv.contains(",1.3,"), "{csv}");
        assert!(csv.starts_with("category,A/Acc,MAD,TimeAcc@2s,Acc@2s"));
    }

    #[test]
    fn hand_object_defaults_to_lowest_threshold() {
        let mut report = spatial_report();
        report.category = ScenarioCategory::HandObjectCoGr;
        let csv = render_csv(&report, false);
        assert!(csv.contains("@0.25"));
        assert!(!csv.contains("@0.5"));
        let full = render_csv(&report, true);
        assert!(full.contains("@0.5"));
    }

    #[test]
    fn structured_rounds_to_one_decimal() {
        let mut report = temporal_report();
        report.action_acc = Some(200.0 / 3.0);
        let text = render_structured(&report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["action_acc"], json!(66.7));
        assert_eq!(v["mad"], json!(1.3));
    }

    #[test]
    fn markdown_has_one_row_per_category() {
        let md = render_markdown(&spatial_report(), false);
        assert!(md.starts_with("### person_gr"));
        assert_eq!(md.matches('\n').count(), 5);
    }
}
