use std::fmt::Write as _;
use std::fs;

use anyhow::{anyhow, Context, Result};
use halfspace_core::stats::median;
use halfspace_core::AttackStrategy;
use rayon::prelude::*;

use crate::args::SweepArgs;
use crate::plots::{minimal_n, sweep_error_plot, sweep_min_n_plot, SWEEP_ERROR_SVG, SWEEP_MIN_N_SVG};
use crate::run::{check, execute, write};
use crate::settings::{parse_list, render_echo, usage, FileLayer, LearnerSettings, Output};
use crate::table::Table;

pub const SWEEP_HEADER: &str =
    "d,eta,epsilon,strategy,nScale,seeds,failures,medianErr,medianInstanceCalls,medianLabelCalls,successRate";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Axes {
    pub d: Vec<usize>,
    pub eta: Vec<f64>,
    pub eps: Vec<f64>,
    pub strategy: Vec<AttackStrategy>,
    pub seed: Vec<u64>,
    pub n_scale: Vec<f64>,
}

impl Axes {
    fn is_empty(&self) -> bool {
        self.d.is_empty()
            && self.eta.is_empty()
            && self.eps.is_empty()
            && self.strategy.is_empty()
            && self.seed.is_empty()
            && self.n_scale.is_empty()
    }

    /// Unset axes collapse to the base value.
    fn fill(mut self, base: &LearnerSettings) -> Self {
        if self.d.is_empty() {
            self.d.push(base.d);
        }
        if self.eta.is_empty() {
            self.eta.push(base.eta);
        }
        if self.eps.is_empty() {
            self.eps.push(base.epsilon);
        }
        if self.strategy.is_empty() {
            self.strategy.push(base.strategy);
        }
        if self.seed.is_empty() {
            self.seed.push(base.seed);
        }
        if self.n_scale.is_empty() {
            self.n_scale.push(base.profile.n_scale);
        }
        self
    }
}

/// `a..b` (half-open) or a comma list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad seed range `{text}`")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad seed range `{text}`")))?;
        if b <= a {
            return Err(usage(format!("empty seed range `{text}`")));
        }
        return Ok((a..b).collect());
    }
    parse_list(text, ',').map_err(|e| usage(format!("seeds: {e}")))
}

fn parse_strategies(items: &[String]) -> Result<Vec<AttackStrategy>> {
    items
        .iter()
        .map(|s| s.parse().map_err(|e| usage(format!("strategy: {e}"))))
        .collect()
}

fn resolve_axes(args: &SweepArgs, file: &mut FileLayer) -> Result<Axes> {
    let file_d = file.take_list("sweep.d", ',')?;
    let file_eta = file.take_list("sweep.eta", ',')?;
    let file_eps = file.take_list("sweep.eps", ',')?;
    let file_strategy: Vec<String> = file.take_list("sweep.strategy", ';')?;
    let file_seed = file.take("sweep.seed");
    let file_n_scale = file.take_list("sweep.n_scale", ',')?;
    let strategies = if args.sweep_strategy.is_empty() {
        file_strategy
    } else {
        args.sweep_strategy.clone()
    };
    let seeds = match args.sweep_seed.clone().or(file_seed) {
        Some(s) => parse_seeds(&s)?,
        None => Vec::new(),
    };
    Ok(Axes {
        d: if args.sweep_d.is_empty() {
            file_d
        } else {
            args.sweep_d.clone()
        },
        eta: if args.sweep_eta.is_empty() {
            file_eta
        } else {
            args.sweep_eta.clone()
        },
        eps: if args.sweep_eps.is_empty() {
            file_eps
        } else {
            args.sweep_eps.clone()
        },
        strategy: parse_strategies(&strategies)?,
        seed: seeds,
        n_scale: if args.sweep_n_scale.is_empty() {
            file_n_scale
        } else {
            args.sweep_n_scale.clone()
        },
    })
}

#[derive(Clone, Debug)]
struct Cell {
    d: usize,
    eta: f64,
    eps: f64,
    strategy: AttackStrategy,
    n_scale: f64,
}

impl Cell {
    fn settings(&self, base: &LearnerSettings, seed: u64) -> LearnerSettings {
        let mut s = base.clone();
        s.d = self.d;
        s.eta = self.eta;
        s.epsilon = self.eps;
        s.strategy = self.strategy;
        s.seed = seed;
        s.diagnostics = false;
        s.profile.n_scale = self.n_scale;
        s
    }
}

struct RunResult {
    error: f64,
    instance_calls: u64,
    label_calls: u64,
}

fn cells(axes: &Axes) -> Vec<Cell> {
    let mut out = Vec::new();
    for &d in &axes.d {
        for &eta in &axes.eta {
            for &eps in &axes.eps {
                for &strategy in &axes.strategy {
                    for &n_scale in &axes.n_scale {
                        out.push(Cell {
                            d,
                            eta,
                            eps,
                            strategy,
                            n_scale,
                        });
                    }
                }
            }
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut file = FileLayer::load(args.common.config.as_deref())?;
    let output = Output::resolve(&args.common, &mut file)?;
    let base = LearnerSettings::resolve(&args.learner, &mut file)?;
    let axes = resolve_axes(args, &mut file)?;
    let file_jobs = file.take_parsed::<usize>("jobs")?;
    let config_path = file.path().map(|p| p.display().to_string());
    file.finish()?;
    if axes.is_empty() {
        return Err(usage("sweep needs at least one axis (--sweep-d, --sweep-eta, --sweep-eps, --sweep-strategy, --sweep-seed, --sweep-n-scale)"));
    }
    let axes = axes.fill(&base);
    let cells = cells(&axes);
    for cell in &cells {
        for &seed in &axes.seed {
            check(&cell.settings(&base, seed)).map_err(|e| {
                usage(format!(
                    "sweep cell d={} eta={} eps={} {}: {e}",
                    cell.d, cell.eta, cell.eps, cell.strategy
                ))
            })?;
        }
    }

    let jobs = args.jobs.or(file_jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Vec<std::result::Result<RunResult, String>>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                axes.seed
                    .par_iter()
                    .map(|&seed| {
                        execute(&cell.settings(&base, seed))
                            .map(|o| RunResult {
                                error: o.error,
                                instance_calls: o.output.report.instance_calls,
                                label_calls: o.output.report.label_calls,
                            })
                            .map_err(|e| e.to_string())
                    })
                    .collect()
            })
            .collect()
    });

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut failures = Vec::new();
    let mut successes = 0usize;
    for (ci, (cell, runs)) in cells.iter().zip(&results).enumerate() {
        let ok: Vec<&RunResult> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
        successes += ok.len();
        for (seed, r) in axes.seed.iter().zip(runs) {
            if let Err(msg) = r {
                failures.push(format!("cell {} seed {seed}: {msg}", ci + 1));
            }
        }
        let errs: Vec<f64> = ok.iter().map(|r| r.error).collect();
        let calls: Vec<f64> = ok.iter().map(|r| r.instance_calls as f64).collect();
        let labels: Vec<f64> = ok.iter().map(|r| r.label_calls as f64).collect();
        let good = ok.iter().filter(|r| r.error <= cell.eps).count();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            cell.d,
            cell.eta,
            cell.eps,
            cell.strategy,
            cell.n_scale,
            runs.len(),
            runs.len() - ok.len(),
            fmt_opt(median(&errs)),
            fmt_opt(median(&calls)),
            fmt_opt(median(&labels)),
            good as f64 / runs.len() as f64
        );
    }

    let table = Table::parse(&csv)?;
    let mut echo = vec![("command".to_string(), "sweep".to_string())];
    echo.push(("config".into(), config_path.unwrap_or_else(|| "none".into())));
    output.echo(&mut echo);
    base.echo(&mut echo);
    let join = |v: Vec<String>, sep: &str| v.join(sep);
    echo.push((
        "sweep.d".into(),
        join(axes.d.iter().map(|x| x.to_string()).collect(), ","),
    ));
    echo.push((
        "sweep.eta".into(),
        join(axes.eta.iter().map(|x| x.to_string()).collect(), ","),
    ));
    echo.push((
        "sweep.eps".into(),
        join(axes.eps.iter().map(|x| x.to_string()).collect(), ","),
    ));
    echo.push((
        "sweep.strategy".into(),
        join(axes.strategy.iter().map(|x| x.to_string()).collect(), ";"),
    ));
    echo.push((
        "sweep.seed".into(),
        join(axes.seed.iter().map(|x| x.to_string()).collect(), ","),
    ));
    echo.push((
        "sweep.n_scale".into(),
        join(axes.n_scale.iter().map(|x| x.to_string()).collect(), ","),
    ));
    let mut summary = render_echo(&echo);
    summary.push_str("# result\n");
    let _ = writeln!(summary, "cells={}", cells.len());
    let _ = writeln!(summary, "runs={}", cells.len() * axes.seed.len());
    let _ = writeln!(summary, "failures={}", failures.len());
    for m in minimal_n(&table)? {
        let _ = writeln!(summary, "minimalNSlope[{}]={}", m.group, fmt_opt(m.slope));
    }
    for f in &failures {
        let _ = writeln!(summary, "failure={f}");
    }

    fs::create_dir_all(&output.dir).with_context(|| format!("creating {}", output.dir.display()))?;
    if output.format.csv() {
        write(&output.dir.join("sweep.csv"), &csv)?;
    }
    if output.format.svg() {
        write(&output.dir.join(SWEEP_ERROR_SVG), &sweep_error_plot(&table)?)?;
        write(&output.dir.join(SWEEP_MIN_N_SVG), &sweep_min_n_plot(&table)?)?;
    }
    write(&output.dir.join("summary.txt"), &summary)?;
    println!("{} cells, {} failed runs", cells.len(), failures.len());
    if successes == 0 {
        return Err(anyhow!(
            "every sweep run failed; first: {}",
            failures.first().map(String::as_str).unwrap_or("")
        ));
    }
    Ok(())
}
