//! Plain CSV tables for run artifacts.

use std::io::Write;

use crate::lifetime::LifetimeDistribution;
use crate::montecarlo::{CampaignSummary, MetricSummary};
use crate::Result;

/// Quantile levels used for every distribution table.
pub const QUANTILES: [f64; 11] = [0.01, 0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| (*c).to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes `# ` comment lines, the header, then the rows.
    pub fn write_csv<W: Write>(&self, out: &mut W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, comments: &[String]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comments).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Shortest round-trip decimal form, so equal values always print identically.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn metrics(s: &crate::montecarlo::SchemeSummary) -> [(&'static str, &MetricSummary); 6] {
    [
        ("ue_dl_rate_bps", &s.ue_dl_rate),
        ("ue_ul_rate_bps", &s.ue_ul_rate),
        ("iot_rate_bps", &s.iot_rate),
        ("iot_ee_bit_per_j", &s.iot_ee),
        ("iot_sinr_db", &s.iot_sinr),
        ("isr_db", &s.isr),
    ]
}

fn in_db(name: &str) -> bool {
    name.ends_with("_db")
}

/// Per-scheme mean, CI, and median of every metric, with UE rates relative to the benchmark.
pub fn campaign_summary_table(summary: &CampaignSummary) -> Table {
    let mut t = Table::new(&["scheme", "metric", "samples", "mean", "ci95", "median", "mean_rel_benchmark"]);
    let bench = summary.get("benchmark");
    for s in &summary.schemes {
        for (name, m) in metrics(s) {
            let rel = match (bench, name) {
                (Some(b), "ue_dl_rate_bps") => num(m.mean / b.ue_dl_rate.mean),
                (Some(b), "ue_ul_rate_bps") => num(m.mean / b.ue_ul_rate.mean),
                _ => String::new(),
            };
            let (mean, ci, median) = if in_db(name) {
                // SINR and ISR are summarized in dB through their median only.
                (String::new(), String::new(), num(10.0 * m.median().log10()))
            } else {
                (num(m.mean), num(m.ci95), num(m.median()))
            };
            t.push(vec![s.name().into(), name.into(), m.len().to_string(), mean, ci, median, rel]);
        }
    }
    t
}

/// Empirical quantiles of every metric per scheme.
pub fn campaign_cdf_table(summary: &CampaignSummary) -> Table {
    let mut t = Table::new(&["scheme", "metric", "quantile", "value"]);
    for s in &summary.schemes {
        for (name, m) in metrics(s) {
            if m.is_empty() {
                continue;
            }
            for q in QUANTILES {
                let v = m.quantile(q);
                let v = if in_db(name) { 10.0 * v.log10() } else { v };
                t.push(vec![s.name().into(), name.into(), num(q), num(v)]);
            }
        }
    }
    t
}

/// Lifetime quantiles per scheme, with censored counts.
pub fn lifetime_table(rows: &[(&str, &LifetimeDistribution)]) -> Table {
    let mut t = Table::new(&["scheme", "quantile", "years", "devices", "censored"]);
    for (name, d) in rows {
        for q in QUANTILES {
            t.push(vec![
                (*name).to_string(),
                num(q),
                num(d.quantile(q)),
                d.total().to_string(),
                d.censored.to_string(),
            ]);
        }
    }
    t
}

/// One row per point of a realization: `kind, cluster, x_m, y_m, z_m`.
pub fn realization_table(real: &crate::montecarlo::NetworkRealization) -> Table {
    let mut t = Table::new(&["kind", "cluster", "x_m", "y_m", "z_m"]);
    let mut row = |kind: &str, cluster: Option<usize>, x: f64, y: f64, z: f64| {
        t.push(vec![kind.into(), cluster.map(|c| c.to_string()).unwrap_or_default(), num(x), num(y), num(z)]);
    };
    for p in &real.bs.points {
        row("bs", None, p.x, p.y, 0.0);
    }
    for p in &real.ue.points {
        row("ue", None, p.x, p.y, 0.0);
    }
    for (c, p) in real.clusters.parents.points.iter().enumerate() {
        row("cluster_center", Some(c), p.x, p.y, 0.0);
    }
    for (c, devs) in real.clusters.daughters.iter().enumerate() {
        for p in devs {
            row("iot", Some(c), p.x, p.y, 0.0);
        }
    }
    for (p, &c) in real.drones.stop_points.iter().zip(&real.drones.cluster_index) {
        row("aggregator", Some(c), p.x, p.y, p.z);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), num(0.0)]);
        t.push(vec!["x".into(), num(-2e-7)]);
        let s = t.to_csv_string(&["config_sha256: abc".into()]);
        assert_eq!(s, "# config_sha256: abc\na,b\n1.5e0,0e0\nx,-2e-7\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
