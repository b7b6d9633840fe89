//! Plots derived from the CSV tables, so every marker maps back to a row.

use std::collections::BTreeMap;

use anyhow::Result;
use halfspace_core::stats::loglog_slope;

use crate::svg::{render, Plot, Point, Series};
use crate::table::Table;

pub const SWEEP_ERROR_SVG: &str = "sweep_error_vs_n.svg";
pub const SWEEP_MIN_N_SVG: &str = "sweep_min_n_vs_d.svg";
pub const SPECTRAL_SVG: &str = "spectral.svg";

/// Log-log error against instance calls, one series per dimension.
pub fn sweep_error_plot(table: &Table) -> Result<String> {
    let (cd, cn, ce, ceps) = (
        table.column("d")?,
        table.column("medianInstanceCalls")?,
        table.column("medianErr")?,
        table.column("epsilon")?,
    );
    let mut by_d: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    let mut eps: Vec<f64> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if let Ok(e) = row[ceps].parse::<f64>() {
            if !eps.contains(&e) {
                eps.push(e);
            }
        }
        let Some(p) = Point::from_raw(&row[cn], &row[ce], i + 1) else {
            continue;
        };
        by_d.entry(row[cd].parse().unwrap_or(0)).or_default().push(p);
    }
    eps.sort_by(f64::total_cmp);
    Ok(render(&Plot {
        title: "median error against sample size".into(),
        x_label: "instance oracle calls".into(),
        y_label: "error".into(),
        log_x: true,
        log_y: true,
        series: by_d
            .into_iter()
            .map(|(d, points)| Series {
                name: format!("d={d}"),
                points,
            })
            .collect(),
        hlines: eps.into_iter().map(|e| (e, format!("eps={e}"))).collect(),
    }))
}

/// Per `(eta, epsilon, strategy)` group and dimension, the cheapest cell whose
/// median error is at most epsilon.
pub struct MinimalN {
    pub group: String,
    /// `(d, data row)` pairs, sorted by `d`.
    pub rows: Vec<(usize, usize)>,
    pub slope: Option<f64>,
}

pub fn minimal_n(table: &Table) -> Result<Vec<MinimalN>> {
    let (cd, ceta, ceps, cs, cn, ce) = (
        table.column("d")?,
        table.column("eta")?,
        table.column("epsilon")?,
        table.column("strategy")?,
        table.column("medianInstanceCalls")?,
        table.column("medianErr")?,
    );
    let mut groups: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let (Ok(err), Ok(eps), Ok(n), Ok(d)) = (
            row[ce].parse::<f64>(),
            row[ceps].parse::<f64>(),
            row[cn].parse::<f64>(),
            row[cd].parse::<usize>(),
        ) else {
            continue;
        };
        if err > eps {
            continue;
        }
        let key = format!("eta={} eps={} {}", row[ceta], row[ceps], row[cs]);
        let best = groups.entry(key).or_default().entry(d).or_insert((n, i));
        if n < best.0 {
            *best = (n, i);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, per_d)| {
            let pts: Vec<(f64, f64)> = per_d.iter().map(|(d, (n, _))| (*d as f64, *n)).collect();
            MinimalN {
                group,
                rows: per_d.into_iter().map(|(d, (_, i))| (d, i)).collect(),
                slope: loglog_slope(&pts),
            }
        })
        .collect())
}

pub fn sweep_min_n_plot(table: &Table) -> Result<String> {
    let (cd, cn) = (table.column("d")?, table.column("medianInstanceCalls")?);
    let series = minimal_n(table)?
        .into_iter()
        .map(|m| Series {
            name: match m.slope {
                Some(s) => format!("{} (slope {s:.2})", m.group),
                None => m.group.clone(),
            },
            points: m
                .rows
                .iter()
                .filter_map(|&(_, i)| Point::from_raw(&table.rows[i][cd], &table.rows[i][cn], i + 1))
                .collect(),
        })
        .collect();
    Ok(render(&Plot {
        title: "minimal sample size reaching eps".into(),
        x_label: "dimension d".into(),
        y_label: "instance oracle calls".into(),
        log_x: true,
        log_y: true,
        series,
        hlines: Vec::new(),
    }))
}

/// Per-trial `lambdaMax` and the population estimate against `n`.
pub fn spectral_plot(table: &Table) -> Result<String> {
    let (cd, cn, cl, cp) = (
        table.column("d")?,
        table.column("n")?,
        table.column("lambdaMax")?,
        table.column("population")?,
    );
    let mut sample: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    let mut population: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let d: usize = row[cd].parse().unwrap_or(0);
        if let Some(p) = Point::from_raw(&row[cn], &row[cl], i + 1) {
            sample.entry(d).or_default().push(p);
        }
        if let Some(p) = Point::from_raw(&row[cn], &row[cp], i + 1) {
            population.entry(d).or_default().push(p);
        }
    }
    let mut series = Vec::new();
    for (d, points) in sample {
        series.push(Series {
            name: format!("sample d={d}"),
            points,
        });
    }
    for (d, points) in population {
        series.push(Series {
            name: format!("population d={d}"),
            points,
        });
    }
    Ok(render(&Plot {
        title: "top eigenvalue of the banded second moment".into(),
        x_label: "samples n".into(),
        y_label: "lambda max".into(),
        log_x: true,
        log_y: false,
        series,
        hlines: Vec::new(),
    }))
}
