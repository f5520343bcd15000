//! Self-contained SVG figures from experiment CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};
use crate::records::interpolated_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SuccessRates,
    ErrorBox,
    SolutionScatter,
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "success_rates" => Ok(Self::SuccessRates),
            "error_box" => Ok(Self::ErrorBox),
            "solution_scatter" => Ok(Self::SolutionScatter),
            _ => Err(CliError::Input(format!("unknown plot kind '{s}'"))),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A loaded CSV: header names and string cells.
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::csv(path, e))?;
        let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::csv(path, e))?;
        if rows.is_empty() {
            return Err(CliError::Input(format!("{}: no data rows", path.display())));
        }
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("missing column '{name}'")))
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| {
            CliError::Input(format!("row {}, column '{}': '{cell}' is not a number", row + 1, self.headers[col]))
        })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    s
}

/// Axes box with `ticks` labelled y values mapped through `ymap`.
fn axes(s: &mut String, y_lo: f64, y_hi: f64, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##, x0 - 4.0, x0 - 6.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(ylabel));
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.2e}")
    }
}

fn legend(s: &mut String, names: &[String]) {
    for (k, name) in names.iter().enumerate() {
        let x = LEFT + 10.0 + 150.0 * k as f64;
        let y = H - 12.0;
        let _ = writeln!(s, r#"<g class="legend"><rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{y}">{}</text></g>"#, y - 9.0, COLORS[k % COLORS.len()], x + 14.0, escape(name));
    }
}

fn ymap(v: f64, lo: f64, hi: f64) -> f64 {
    let span = if hi > lo { hi - lo } else { 1.0 };
    (H - BOTTOM) - (H - BOTTOM - TOP) * (v - lo) / span
}

fn order_of_appearance(t: &Table, col: usize) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for r in &t.rows {
        if !seen.contains(&r[col]) {
            seen.push(r[col].clone());
        }
    }
    seen
}

/// Converged counts per scale (x groups) and method (bars).
fn success_rates(t: &Table) -> Result<String> {
    let (mc, sc, cc) = (t.column("method")?, t.column("scale")?, t.column("converged")?);
    let methods = order_of_appearance(t, mc);
    let scales = order_of_appearance(t, sc);
    let mut counts: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for r in &t.rows {
        let key = (
            scales.iter().position(|s| *s == r[sc]).unwrap(),
            methods.iter().position(|m| *m == r[mc]).unwrap(),
        );
        let e = counts.entry(key).or_default();
        e.1 += 1;
        if r[cc] == "true" {
            e.0 += 1;
        }
    }
    let top = counts.values().map(|c| c.1).max().unwrap_or(1) as f64;
    let mut s = open("Converged replications by coefficient scale");
    axes(&mut s, 0.0, top, "converged");
    let group_w = (W - LEFT - RIGHT) / scales.len() as f64;
    let bar_w = group_w * 0.8 / methods.len() as f64;
    for (si, scale) in scales.iter().enumerate() {
        let gx = LEFT + group_w * si as f64 + group_w * 0.1;
        for (mi, method) in methods.iter().enumerate() {
            let (ok, _) = counts.get(&(si, mi)).copied().unwrap_or((0, 0));
            let y = ymap(ok as f64, 0.0, top);
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-method="{}" data-scale="{}" data-count="{ok}" x="{:.2}" y="{y:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"/>"#,
                escape(method), escape(scale), gx + bar_w * mi as f64, H - BOTTOM - y, COLORS[mi % COLORS.len()]
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, gx + group_w * 0.4, H - BOTTOM + 14.0, escape(scale));
    }
    legend(&mut s, &methods);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Box plot of l1 error per method over converged replications.
fn error_box(t: &Table) -> Result<String> {
    let (mc, ec, cc) = (t.column("method")?, t.column("l1_error")?, t.column("converged")?);
    let methods = order_of_appearance(t, mc);
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    for (i, r) in t.rows.iter().enumerate() {
        if r[cc] != "true" {
            continue;
        }
        let v = t.number(i, ec)?;
        if v.is_finite() {
            groups[methods.iter().position(|m| *m == r[mc]).unwrap()].push(v);
        }
    }
    for g in groups.iter_mut() {
        g.sort_by(f64::total_cmp);
    }
    let hi = groups.iter().flatten().fold(0.0f64, |m, &v| m.max(v)) * 1.05;
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let mut s = open("l1 estimation error by method");
    axes(&mut s, 0.0, hi, "l1 error");
    let slot = (W - LEFT - RIGHT) / methods.len() as f64;
    for (k, (name, g)) in methods.iter().zip(&groups).enumerate() {
        let cx = LEFT + slot * (k as f64 + 0.5);
        let half = slot * 0.25;
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g class="box" data-method="{}" data-n="{}">"#, escape(name), g.len());
        if !g.is_empty() {
            let q = |p| ymap(interpolated_quantile(g, p), 0.0, hi);
            let (q1, med, q3) = (q(0.25), q(0.5), q(0.75));
            let (lo, top) = (ymap(g[0], 0.0, hi), ymap(g[g.len() - 1], 0.0, hi));
            let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{top:.2}" stroke="{color}"/>"#);
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{q3:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="{color}"/>"#, cx - half, 2.0 * half, q1 - q3);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{med:.2}" x2="{:.2}" y2="{med:.2}" stroke="{color}" stroke-width="2"/>"#, cx - half, cx + half);
        }
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text></g>"#, H - BOTTOM + 14.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// True against estimated coefficients, one series per `beta_*` column.
fn solution_scatter(t: &Table) -> Result<String> {
    let jc = t.column("j")?;
    let bc = t.column("beta_star")?;
    let series: Vec<usize> = (0..t.headers.len())
        .filter(|&c| c != bc && t.headers[c].starts_with("beta_"))
        .collect();
    if series.is_empty() {
        return Err(CliError::Input("missing column 'beta_<method>'".into()));
    }
    let mut pts = Vec::new();
    for i in 0..t.rows.len() {
        t.number(i, jc)?;
        let x = t.number(i, bc)?;
        for &c in &series {
            pts.push((c, x, t.number(i, c)?));
        }
    }
    let finite = pts.iter().flat_map(|p| [p.1, p.2]).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo < hi { (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo)) } else { (lo - 1.0, lo + 1.0) };
    let xmap = |v: f64| LEFT + (W - LEFT - RIGHT) * (v - lo) / (hi - lo);
    let mut s = open("Estimated against true coefficients");
    axes(&mut s, lo, hi, "estimate");
    let _ = writeln!(s, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##, xmap(lo), ymap(lo, lo, hi), xmap(hi), ymap(hi, lo, hi));
    for (k, &c) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g class="series" data-column="{}">"#, escape(&t.headers[c]));
        for &(pc, x, y) in &pts {
            if pc == c && x.is_finite() && y.is_finite() {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#, xmap(x), ymap(y, lo, hi));
            }
        }
        s.push_str("</g>\n");
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">true coefficient</text>"#, W / 2.0, H - BOTTOM + 28.0);
    let names: Vec<String> = series.iter().map(|&c| t.headers[c].clone()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render(input: &Path, kind: PlotKind) -> Result<String> {
    let table = Table::load(input)?;
    match kind {
        PlotKind::SuccessRates => success_rates(&table),
        PlotKind::ErrorBox => error_box(&table),
        PlotKind::SolutionScatter => solution_scatter(&table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;
    use crate::records::{records_csv, ReplicationRecord};

    fn sample(dir: &Path) -> std::path::PathBuf {
        let mut recs = Vec::new();
        for (scale, fail) in [(0.5, false), (3.0, true)] {
            for rep in 0..3 {
                for m in [Method::LpwsAsymptotic, Method::LoglikCv] {
                    let conv = !(fail && m == Method::LoglikCv && rep == 0);
                    recs.push(ReplicationRecord {
                        rep_index: rep,
                        method: m,
                        scale,
                        converged: conv,
                        l1_error: if conv { 0.1 * (rep + 1) as f64 } else { f64::NAN },
                        l2_error: 0.0,
                        support_recovered: conv,
                        lambda_used: 0.1,
                        wall_time_s: 0.0,
                    });
                }
            }
        }
        let path = dir.join("records.csv");
        std::fs::write(&path, records_csv(&recs)).unwrap();
        path
    }

    #[test]
    fn success_and_box_structure() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample(dir.path());
        let svg = render(&path, PlotKind::SuccessRates).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="bar""#).count(), 4);
        assert!(svg.contains(r#"data-method="loglik_cv" data-scale="3" data-count="2""#));
        let svg = render(&path, PlotKind::ErrorBox).unwrap();
        assert_eq!(svg.matches(r#"class="box""#).count(), 2);
    }

    #[test]
    fn missing_columns_and_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "method,scale\nloglik_cv,1\n").unwrap();
        let err = render(&path, PlotKind::SuccessRates).unwrap_err().to_string();
        assert!(err.contains("'converged'"), "{err}");
        std::fs::write(&path, super::super::records::ReplicationRecord::HEADER.to_string() + "\n").unwrap();
        let err = render(&path, PlotKind::ErrorBox).unwrap_err().to_string();
        assert!(err.contains("no data rows"));
    }

    #[test]
    fn scatter_has_one_series_per_estimate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "j,beta_star,beta_lpws,beta_loglik\n1,0.5,0.4,0.45\n2,0,0,0.01\n").unwrap();
        let svg = render(&path, PlotKind::SolutionScatter).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
    }
}
