use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use halfspace_core::dist::{err_rate_mc, err_rate_rotational};
use halfspace_core::learner::diagnostics_csv;
use halfspace_core::rng::{stream, StreamTag};
use halfspace_core::{
    phase_diagnostics, run_malicious, run_nasty, Audit, LearnerOutput, MaliciousOracle, Mode, NastyOracle, UnitVec,
};

use crate::args::RunArgs;
use crate::settings::{render_echo, FileLayer, LearnerSettings, Output};

/// Monte-Carlo sample size for the final error when no closed form applies.
pub const EVAL_SAMPLES: usize = 1_000_000;

pub struct RunOutcome {
    pub output: LearnerOutput,
    pub error: f64,
    pub error_method: &'static str,
    pub diagnostics: Option<String>,
}

/// The target halfspace for a seed.
pub fn target_for(d: usize, seed: u64) -> UnitVec {
    UnitVec::random(d, &mut stream(seed, StreamTag::Target, 0))
}

/// Checks everything a run would reject before doing any work.
pub fn check(settings: &LearnerSettings) -> halfspace_core::Result<()> {
    let cfg = settings.learner_config()?;
    cfg.validate()?;
    let spec = cfg.dist;
    let target = target_for(settings.d, settings.seed);
    match settings.mode {
        Mode::Malicious => {
            MaliciousOracle::new(spec, target, settings.eta, settings.strategy, settings.seed).map(|_| ())
        }
        Mode::Nasty => NastyOracle::new(spec, target, settings.eta, settings.strategy, settings.seed).map(|_| ()),
    }
}

pub fn execute(settings: &LearnerSettings) -> halfspace_core::Result<RunOutcome> {
    let cfg = settings.learner_config()?;
    cfg.validate()?;
    let target = target_for(settings.d, settings.seed);
    match settings.mode {
        Mode::Malicious => {
            let mut o = MaliciousOracle::new(cfg.dist, target, settings.eta, settings.strategy, settings.seed)?;
            let out = run_malicious(&cfg, &mut o)?;
            finish(out, &o, settings)
        }
        Mode::Nasty => {
            let mut o = NastyOracle::new(cfg.dist, target, settings.eta, settings.strategy, settings.seed)?;
            let out = run_nasty(&cfg, &mut o)?;
            finish(out, &o, settings)
        }
    }
}

fn finish<A: Audit>(
    output: LearnerOutput,
    audit: &A,
    settings: &LearnerSettings,
) -> halfspace_core::Result<RunOutcome> {
    let dist = audit.distribution();
    let (error, error_method) = if dist.is_rotation_invariant() {
        (err_rate_rotational(&output.w_tilde, audit.target())?, "exact")
    } else {
        (
            err_rate_mc(dist, &output.w_tilde, audit.target(), EVAL_SAMPLES, settings.seed)?,
            "montecarlo",
        )
    };
    let diagnostics = if settings.diagnostics {
        Some(diagnostics_csv(&phase_diagnostics(&output, audit, settings.seed)?))
    } else {
        None
    };
    Ok(RunOutcome {
        output,
        error,
        error_method,
        diagnostics,
    })
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut file = FileLayer::load(args.common.config.as_deref())?;
    let output = Output::resolve(&args.common, &mut file)?;
    let settings = LearnerSettings::resolve(&args.learner, &mut file)?;
    let config_path = file.path().map(|p| p.display().to_string());
    file.finish()?;

    let mut echo = vec![("command".to_string(), "run".to_string())];
    echo.push(("config".into(), config_path.unwrap_or_else(|| "none".into())));
    output.echo(&mut echo);
    settings.echo(&mut echo);
    let mut summary = render_echo(&echo);
    summary.push_str("# result\n");

    fs::create_dir_all(&output.dir).with_context(|| format!("creating {}", output.dir.display()))?;
    match execute(&settings) {
        Ok(outcome) => {
            summary.push_str("status=ok\n");
            summary.push_str(&format!("finalErrEstimate={}\n", outcome.error));
            summary.push_str(&format!("finalErrMethod={}\n", outcome.error_method));
            summary.push_str(&outcome.output.report.summary());
            write(&output.dir.join("run_report.csv"), &outcome.output.report.to_csv())?;
            if let Some(diag) = &outcome.diagnostics {
                write(&output.dir.join("diagnostics.csv"), diag)?;
            }
            write(&output.dir.join("summary.txt"), &summary)?;
            println!("finalErrEstimate={} ({})", outcome.error, outcome.error_method);
            Ok(())
        }
        Err(e) => {
            summary.push_str("status=failed\n");
            summary.push_str(&format!("error={e}\n"));
            write(&output.dir.join("summary.txt"), &summary)?;
            Err(e.into())
        }
    }
}
