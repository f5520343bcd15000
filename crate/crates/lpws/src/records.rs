//! Row types of the experiment CSV files and their summaries.

use std::fmt::Write as _;

use crate::config::Method;

/// One method fitted on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep_index: usize,
    pub method: Method,
    pub scale: f64,
    pub converged: bool,
    pub l1_error: f64,
    pub l2_error: f64,
    /// Every coordinate of the true support is selected.
    pub support_recovered: bool,
    /// `NaN` when no lambda could be chosen (cross-validation failed throughout).
    pub lambda_used: f64,
    pub wall_time_s: f64,
}

impl ReplicationRecord {
    pub const HEADER: &'static str =
        "rep_index,method,scale,converged,l1_error,l2_error,support_recovered,lambda_used,wall_time_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.rep_index,
            self.method,
            self.scale,
            self.converged,
            self.l1_error,
            self.l2_error,
            self.support_recovered,
            self.lambda_used,
            self.wall_time_s
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub rep_index: usize,
    pub method: Method,
    pub lambda: f64,
    pub coverage: f64,
    pub trials: usize,
}

impl CoverageRow {
    pub const HEADER: &'static str = "rep_index,method,lambda,coverage,trials";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.rep_index, self.method, self.lambda, self.coverage, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub rep_index: usize,
    pub lambda: f64,
    pub sup_score: f64,
    pub kappa: f64,
    pub covered: bool,
    pub smallness_condition: bool,
    pub converged: bool,
    pub l1_error: f64,
    pub l1_bound: f64,
    pub objective_gap: f64,
    pub objective_bound: f64,
    pub cone_off_support: f64,
    pub cone_on_support: f64,
    pub cone_holds: bool,
    pub l1_holds: bool,
    pub objective_holds: bool,
}

impl BoundRow {
    pub const HEADER: &'static str = "rep_index,lambda,sup_score,kappa,covered,smallness_condition,converged,\
l1_error,l1_bound,objective_gap,objective_bound,cone_off_support,cone_on_support,cone_holds,l1_holds,objective_holds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.rep_index,
            self.lambda,
            self.sup_score,
            self.kappa,
            self.covered,
            self.smallness_condition,
            self.converged,
            self.l1_error,
            self.l1_bound,
            self.objective_gap,
            self.objective_bound,
            self.cone_off_support,
            self.cone_on_support,
            self.cone_holds,
            self.l1_holds,
            self.objective_holds
        )
    }

    /// Whether the cone, l1 and objective bounds all hold, for covered replications.
    pub fn all_hold(&self) -> bool {
        self.converged && self.cone_holds && self.l1_holds && self.objective_holds
    }
}

/// Linearly interpolated quantile of sorted data (the usual "type 7").
pub fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-(method, scale) summary of replication records.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSummary {
    pub method: Method,
    pub scale: f64,
    pub reps: usize,
    pub converged: usize,
    /// Non-converged replications, left out of the error quantiles.
    pub excluded: usize,
    pub median_l1_error: f64,
    pub q1_l1_error: f64,
    pub q3_l1_error: f64,
    pub median_l2_error: f64,
    pub support_recovered: usize,
}

impl RecordSummary {
    pub const HEADER: &'static str = "method,scale,reps,converged,excluded,median_l1_error,q1_l1_error,\
q3_l1_error,median_l2_error,support_recovered";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.scale,
            self.reps,
            self.converged,
            self.excluded,
            self.median_l1_error,
            self.q1_l1_error,
            self.q3_l1_error,
            self.median_l2_error,
            self.support_recovered
        )
    }
}

/// Groups in order of first appearance of scale, then method order.
pub fn summarize_records(records: &[ReplicationRecord]) -> Vec<RecordSummary> {
    let mut keys: Vec<(f64, Method)> = Vec::new();
    for r in records {
        if !keys.iter().any(|&(s, m)| s == r.scale && m == r.method) {
            keys.push((r.scale, r.method));
        }
    }
    keys.sort_by(|a, b| {
        let sa = records.iter().position(|r| r.scale == a.0).unwrap();
        let sb = records.iter().position(|r| r.scale == b.0).unwrap();
        sa.cmp(&sb).then(a.1.cmp(&b.1))
    });
    keys.into_iter()
        .map(|(scale, method)| {
            let group: Vec<&ReplicationRecord> =
                records.iter().filter(|r| r.scale == scale && r.method == method).collect();
            let ok: Vec<&&ReplicationRecord> = group.iter().filter(|r| r.converged).collect();
            let mut l1: Vec<f64> = ok.iter().map(|r| r.l1_error).collect();
            let mut l2: Vec<f64> = ok.iter().map(|r| r.l2_error).collect();
            l1.sort_by(f64::total_cmp);
            l2.sort_by(f64::total_cmp);
            RecordSummary {
                method,
                scale,
                reps: group.len(),
                converged: ok.len(),
                excluded: group.len() - ok.len(),
                median_l1_error: interpolated_quantile(&l1, 0.5),
                q1_l1_error: interpolated_quantile(&l1, 0.25),
                q3_l1_error: interpolated_quantile(&l1, 0.75),
                median_l2_error: interpolated_quantile(&l2, 0.5),
                support_recovered: ok.iter().filter(|r| r.support_recovered).count(),
            }
        })
        .collect()
}

pub fn records_csv(records: &[ReplicationRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", ReplicationRecord::HEADER);
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn summary_csv(summaries: &[RecordSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", RecordSummary::HEADER);
    for r in summaries {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn coverage_summary_csv(rows: &[CoverageRow]) -> String {
    let mut s = String::from("method,reps,mean_coverage,min_coverage,mean_lambda\n");
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    for m in methods {
        let g: Vec<&CoverageRow> = rows.iter().filter(|r| r.method == m).collect();
        let k = g.len() as f64;
        let mean = g.iter().map(|r| r.coverage).sum::<f64>() / k;
        let min = g.iter().map(|r| r.coverage).fold(f64::INFINITY, f64::min);
        let lam = g.iter().map(|r| r.lambda).sum::<f64>() / k;
        let _ = writeln!(s, "{m},{},{mean},{min},{lam}", g.len());
    }
    s
}

pub fn bound_summary_csv(rows: &[BoundRow]) -> String {
    let covered: Vec<&BoundRow> = rows.iter().filter(|r| r.covered).collect();
    let count = |f: fn(&BoundRow) -> bool| covered.iter().filter(|r| f(r)).count();
    format!(
        "reps_run,covered,smallness_condition,converged,cone_holds,l1_holds,objective_holds,all_hold\n{},{},{},{},{},{},{},{}\n",
        rows.len(),
        covered.len(),
        count(|r| r.smallness_condition),
        count(|r| r.converged),
        count(|r| r.cone_holds),
        count(|r| r.l1_holds),
        count(|r| r.objective_holds),
        count(BoundRow::all_hold),
    )
}
