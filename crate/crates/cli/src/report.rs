//! Report layout. Field names here are the stable output format documented in
//! `docs/report-format.md`.

use std::collections::BTreeMap;

use groupperm_core::estimation::CurvePoint;
use groupperm_core::sim::SimReport;
use groupperm_core::{ConfidenceInterval, Exposure, TestResult};
use serde::Serialize;

use crate::table::ExperimentTable;

pub const TOOL: &str = "groupperm";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<ConfidenceInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimReport>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Report {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            data: None,
            test: None,
            interval: None,
            oracle: None,
            simulation: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Inputs as seen by the analysis: sizes, attribute tallies, the `n_A`
/// table of group compositions, and observed exposure counts.
#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub units: usize,
    pub groups: usize,
    pub attribute_counts: BTreeMap<String, usize>,
    pub group_compositions: Vec<CompositionCount>,
    pub exposure_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompositionCount {
    /// Sorted attribute codes of a group's members.
    pub composition: String,
    pub groups: usize,
}

impl DataSummary {
    pub fn new(table: &ExperimentTable, exposures: &[Exposure]) -> Self {
        let mut attribute_counts = BTreeMap::new();
        for a in table.attributes.values() {
            *attribute_counts.entry(a.to_string()).or_insert(0) += 1;
        }
        let mut compositions: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for members in table.labels.members() {
            let mut codes: Vec<u32> = members
                .iter()
                .map(|&i| table.attributes.values()[i])
                .collect();
            codes.sort_unstable();
            *compositions.entry(codes).or_insert(0) += 1;
        }
        let mut exposure_counts = BTreeMap::new();
        for w in exposures {
            *exposure_counts.entry(w.to_string()).or_insert(0) += 1;
        }
        DataSummary {
            units: table.len(),
            groups: table.num_groups(),
            attribute_counts,
            group_compositions: compositions
                .into_iter()
                .map(|(codes, groups)| CompositionCount {
                    composition: Exposure::Multiset(codes).to_string(),
                    groups,
                })
                .collect(),
            exposure_counts,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OracleOutput {
    Enumerate {
        support_size: usize,
        /// Group labels `1..K` per unit, one row per assignment.
        assignments: Vec<Vec<usize>>,
        exposure_distribution: Vec<ExposureAtom>,
    },
    ExactP {
        null: String,
        statistic_name: String,
        /// Exact rational p-value, `numerator/denominator`.
        p_value: String,
        p_value_f64: f64,
    },
    Feasibility {
        column: String,
        feasible: bool,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExposureAtom {
    pub exposures: Vec<String>,
    pub probability: String,
}

/// Flat CSV of `(replicate, statistic)` null draws.
pub fn draws_csv(draws: &[f64]) -> String {
    let mut out = String::from("replicate,statistic\n");
    for (l, t) in draws.iter().enumerate() {
        out.push_str(&format!("{},{t}\n", l + 1));
    }
    out
}

/// Flat CSV of a `p(c)` curve.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("shift,p_value\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", p.shift, p.p_value));
    }
    out
}

/// Plot-ready CSV of simulation rows or timing rows.
pub fn simulation_csv(report: &SimReport) -> String {
    let mut out = String::new();
    if !report.rows.is_empty() {
        out.push_str(
            "tau,arm,tau_star,replicates,undefined,rejection_rate,rejection_se,coverage,coverage_se,mean_length,length_se\n",
        );
        for r in &report.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.tau,
                r.arm.as_deref().unwrap_or(""),
                opt(r.tau_star),
                r.replicates,
                r.undefined,
                r.rejection_rate,
                r.rejection_se,
                opt(r.coverage),
                opt(r.coverage_se),
                opt(r.mean_length),
                opt(r.length_se),
            ));
        }
    }
    if !report.timing.is_empty() {
        out.push_str("groups,units,draws,mean_attempts,acceptance_rate,timed_out,rejection_seconds_per_draw,permutation_seconds_per_draw\n");
        for t in &report.timing {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                t.groups,
                t.units,
                t.draws,
                t.mean_attempts,
                t.acceptance_rate,
                t.timed_out,
                t.rejection_seconds_per_draw,
                t.permutation_seconds_per_draw,
            ));
        }
    }
    out
}
