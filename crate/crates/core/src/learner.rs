//! Phase drivers for the malicious-noise and nasty-noise learners.

use std::fmt;
use std::str::FromStr;

use crate::adversary::{Audit, BatchOracle, InstanceOracle, LabelToken, LearnerStateView};
use crate::dist::{band_err_rate_mc, DistributionSpec};
use crate::error::{Error, Result};
use crate::geometry::angle;
use crate::hinge::{iteration_budget, minimize_hinge, HingeProblem, DEFAULT_ITER_CAP};
use crate::linalg::{distance, norm};
use crate::outlier::{default_max_cuts, soft_outlier_removal, RemovalProblem, DEFAULT_RESTARTS, DEFAULT_SLACK};
use crate::profile::ConstantsProfile;
use crate::report::{PhaseReport, RunReport};
use crate::rng::child_seed;
use crate::schedule::{build_schedule, radius, Phase, PhaseSchedule};
use crate::types::{BandSpec, Label, Provenance, SearchBall, UnitVec};

/// `v_k` shorter than this is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Malicious,
    Nasty,
}

impl Mode {
    pub fn token(self) -> &'static str {
        match self {
            Mode::Malicious => "malicious",
            Mode::Nasty => "nasty",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "malicious" => Ok(Mode::Malicious),
            "nasty" => Ok(Mode::Nasty),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub dist: DistributionSpec,
    pub profile: ConstantsProfile,
    pub mode: Mode,
    pub seed: u64,
    pub diagnostics: bool,
    /// Cut budget for soft outlier removal; `None` means `50 d`.
    pub max_cuts: Option<usize>,
    pub restarts: usize,
    pub slack: f64,
    pub hinge_iter_cap: usize,
}

impl LearnerConfig {
    pub fn new(
        epsilon: f64,
        delta: f64,
        dist: DistributionSpec,
        profile: ConstantsProfile,
        mode: Mode,
        seed: u64,
    ) -> Self {
        LearnerConfig {
            epsilon,
            delta,
            dist,
            profile,
            mode,
            seed,
            diagnostics: false,
            max_cuts: None,
            restarts: DEFAULT_RESTARTS,
            slack: DEFAULT_SLACK,
            hinge_iter_cap: DEFAULT_ITER_CAP,
        }
    }

    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.diagnostics = on;
        self
    }

    pub fn schedule(&self) -> Result<PhaseSchedule> {
        build_schedule(self.epsilon, self.delta, self.dist.dim, &self.profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "must be at least 1"));
        }
        if !(self.slack.is_finite() && self.slack >= 1.0) {
            return Err(Error::invalid("slack", format!("{} must be at least 1", self.slack)));
        }
        if self.hinge_iter_cap == 0 {
            return Err(Error::invalid("hinge iteration cap", "must be at least 1"));
        }
        self.schedule().map(|_| ())
    }

    fn soft_constant(&self) -> f64 {
        match self.mode {
            Mode::Malicious => self.profile.c_soft,
            Mode::Nasty => self.profile.nasty_soft_constant(),
        }
    }
}

/// Everything needed to audit a run after the fact.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTrace {
    pub k: usize,
    /// `w_{k-1}`; zero in the first phase.
    pub center: UnitVec,
    pub b: f64,
    pub r: f64,
    pub tokens: Vec<LabelToken>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub w: UnitVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub phases: Vec<PhaseTrace>,
    /// `r_{K+1}`
    pub final_radius: f64,
}

#[derive(Clone, Debug)]
pub struct LearnerOutput {
    pub w_tilde: UnitVec,
    pub report: RunReport,
    pub trace: Option<RunTrace>,
}

enum Source<'a, I, B> {
    Instance(&'a mut I),
    Batch(&'a mut B),
}

impl<I: InstanceOracle, B: BatchOracle> Source<'_, I, B> {
    fn draw(&mut self, n: usize, view: &LearnerStateView) -> Result<Vec<(Vec<f64>, LabelToken)>> {
        match self {
            Source::Instance(o) => Ok((0..n).map(|_| o.draw(view)).collect()),
            Source::Batch(o) => o.batch(n, view),
        }
    }

    fn reveal(&mut self, token: &LabelToken) -> Result<Label> {
        match self {
            Source::Instance(o) => o.reveal(token),
            Source::Batch(o) => o.reveal(token),
        }
    }

    fn counters(&self) -> crate::adversary::OracleCounters {
        match self {
            Source::Instance(o) => o.counters(),
            Source::Batch(o) => o.counters(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Source::Instance(o) => o.dim(),
            Source::Batch(o) => o.dim(),
        }
    }
}

/// Per-request learner: `N_k` oracle calls per phase.
pub fn run_malicious<O: InstanceOracle>(config: &LearnerConfig, oracle: &mut O) -> Result<LearnerOutput> {
    if config.mode != Mode::Malicious {
        return Err(Error::invalid("mode", "run_malicious needs mode malicious"));
    }
    drive::<O, NoBatch>(config, Source::Instance(oracle))
}

/// Batch learner: one oracle call of size `N_k` per phase.
pub fn run_nasty<O: BatchOracle>(config: &LearnerConfig, oracle: &mut O) -> Result<LearnerOutput> {
    if config.mode != Mode::Nasty {
        return Err(Error::invalid("mode", "run_nasty needs mode nasty"));
    }
    drive::<NoInstance, O>(config, Source::Batch(oracle))
}

enum NoBatch {}
enum NoInstance {}

impl BatchOracle for NoBatch {
    fn dim(&self) -> usize {
        match *self {}
    }
    fn batch(&mut self, _: usize, _: &LearnerStateView) -> Result<Vec<(Vec<f64>, LabelToken)>> {
        match *self {}
    }
    fn reveal(&mut self, _: &LabelToken) -> Result<Label> {
        match *self {}
    }
    fn counters(&self) -> crate::adversary::OracleCounters {
        match *self {}
    }
}

impl InstanceOracle for NoInstance {
    fn dim(&self) -> usize {
        match *self {}
    }
    fn draw(&mut self, _: &LearnerStateView) -> (Vec<f64>, LabelToken) {
        match *self {}
    }
    fn reveal(&mut self, _: &LabelToken) -> Result<Label> {
        match *self {}
    }
    fn counters(&self) -> crate::adversary::OracleCounters {
        match *self {}
    }
}

fn drive<I: InstanceOracle, B: BatchOracle>(
    config: &LearnerConfig,
    mut source: Source<'_, I, B>,
) -> Result<LearnerOutput> {
    config.validate()?;
    let schedule = config.schedule()?;
    let d = config.dist.dim;
    if source.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: source.dim(),
        });
    }
    let mut w_prev = UnitVec::zero(d);
    let mut phase_reports = Vec::with_capacity(schedule.num_phases());
    let mut traces = Vec::new();
    for phase in &schedule.phases {
        let (report, trace) = run_phase(config, phase, &w_prev, &mut source).map_err(|e| Error::Phase {
            phase: phase.k,
            source: Box::new(e),
        })?;
        w_prev = trace.w.clone();
        phase_reports.push(report);
        if config.diagnostics {
            traces.push(trace);
        }
    }
    let counters = source.counters();
    let report = RunReport {
        mode: config.mode,
        dim: d,
        epsilon: config.epsilon,
        delta: config.delta,
        profile: config.profile.name.clone(),
        seed: config.seed,
        phases: phase_reports,
        instance_calls: counters.instance_calls,
        label_calls: counters.label_calls,
        batch_calls: counters.batch_calls,
        w_tilde: w_prev.as_slice().to_vec(),
    };
    let trace = config.diagnostics.then(|| RunTrace {
        phases: traces,
        final_radius: radius(&config.profile, schedule.num_phases() + 1),
    });
    Ok(LearnerOutput {
        w_tilde: w_prev,
        report,
        trace,
    })
}

fn run_phase<I: InstanceOracle, B: BatchOracle>(
    config: &LearnerConfig,
    phase: &Phase,
    w_prev: &UnitVec,
    source: &mut Source<'_, I, B>,
) -> Result<(PhaseReport, PhaseTrace)> {
    let view = LearnerStateView {
        center: w_prev.clone(),
        bandwidth: phase.b,
        phase: phase.k,
    };
    let drawn = source.draw(phase.n, &view)?;
    let band: Vec<(Vec<f64>, LabelToken)> = if phase.k == 1 {
        drawn
    } else {
        drawn
            .into_iter()
            .filter(|(x, _)| w_prev.dot(x).abs() <= phase.b)
            .collect()
    };
    if band.is_empty() {
        return Err(Error::RejectionExhausted {
            attempts: phase.n as u64,
            accepted: 0,
            requested: 1,
        });
    }
    let (xs, tokens): (Vec<Vec<f64>>, Vec<LabelToken>) = band.into_iter().unzip();

    let ball = SearchBall::new(w_prev.as_slice().to_vec(), phase.r)?;
    let removal =
        RemovalProblem::new(xs, ball.clone(), phase.b, phase.xi, config.soft_constant())?.with_slack(config.slack)?;
    let max_cuts = config.max_cuts.unwrap_or_else(|| default_max_cuts(removal.dim()));
    let phase_seed = child_seed(config.seed, phase.k as u64);
    let removed = soft_outlier_removal(&removal, max_cuts, config.restarts, phase_seed)?;
    let p = removed.q.normalized()?;

    let mut samples = Vec::with_capacity(tokens.len());
    for (x, t) in removal.instances().iter().zip(&tokens) {
        samples.push((x.clone(), source.reveal(t)?));
    }
    let hinge = HingeProblem::new(samples, p, phase.tau, ball, config.profile.kappa)?;
    let budget = iteration_budget(&hinge, config.hinge_iter_cap);
    let sol = minimize_hinge(&hinge, budget, phase_seed, false)?;

    let v_norm = norm(&sol.v);
    let degenerate = v_norm < DEGENERATE_NORM;
    let w = if degenerate {
        if w_prev.is_zero() {
            return Err(Error::ZeroVector);
        }
        w_prev.clone()
    } else {
        UnitVec::normalize(&sol.v)?
    };

    let report = PhaseReport {
        k: phase.k,
        b: phase.b,
        r: phase.r,
        tau: phase.tau,
        xi: phase.xi,
        requested: phase.n,
        band_size: tokens.len(),
        labels_revealed: tokens.len(),
        cuts: removed.cuts_used,
        mass_fraction: removed.mass_fraction(),
        certified_bound: removed.certified_bound,
        hinge_loss: sol.loss,
        hinge_iterations: sol.iterations,
        v_norm,
        degenerate,
    };
    let trace = PhaseTrace {
        k: phase.k,
        center: w_prev.clone(),
        b: phase.b,
        r: phase.r,
        tokens: if config.diagnostics { tokens } else { Vec::new() },
        q: if config.diagnostics {
            removed.q.as_slice().to_vec()
        } else {
            Vec::new()
        },
        v: sol.v,
        w,
    };
    Ok((report, trace))
}

/// Number of draws behind each in-band error estimate.
pub const DIAGNOSTIC_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagnostics {
    pub k: usize,
    /// `theta(w_k, w*)`
    pub angle: f64,
    /// `theta(v_k, w*)`; NaN when `v_k` is zero.
    pub angle_v: f64,
    /// Error of `v_k` under `D` conditioned on the phase band.
    pub band_error: f64,
    /// `|T_D| / |T|`
    pub dirty_fraction: f64,
    /// `sum_{x in T_D} q(x) / |T|`
    pub dirty_weight: f64,
    pub mass_fraction: f64,
    /// `|w_k - w*|`
    pub distance: f64,
    /// `r_{k+1}`
    pub next_radius: f64,
}

impl PhaseDiagnostics {
    pub const CSV_HEADER: &'static str =
        "phase,angle,angleV,bandError,dirtyFraction,dirtyWeight,massFraction,distance,nextRadius";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.k,
            self.angle,
            self.angle_v,
            self.band_error,
            self.dirty_fraction,
            self.dirty_weight,
            self.mass_fraction,
            self.distance,
            self.next_radius
        )
    }
}

pub fn diagnostics_csv(rows: &[PhaseDiagnostics]) -> String {
    let mut out = String::from(PhaseDiagnostics::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Per-phase angles, in-band errors and dirty fractions, using the hidden
/// target and provenance exposed by `audit`.
pub fn phase_diagnostics<A: Audit + ?Sized>(
    output: &LearnerOutput,
    audit: &A,
    seed: u64,
) -> Result<Vec<PhaseDiagnostics>> {
    let trace = output.trace.as_ref().ok_or(Error::DiagnosticsDisabled)?;
    let target = audit.target();
    let spec = *audit.distribution();
    let profile_radius = |i: usize| trace.phases.get(i).map(|p| p.r).unwrap_or(trace.final_radius);
    trace
        .phases
        .iter()
        .enumerate()
        .map(|(i, ph)| {
            let n = ph.tokens.len().max(1) as f64;
            let mut dirty = 0usize;
            let mut dirty_weight = 0.0;
            for (t, q) in ph.tokens.iter().zip(&ph.q) {
                if audit.provenance(t)? != Provenance::Clean {
                    dirty += 1;
                    dirty_weight += q;
                }
            }
            let band = BandSpec::new(ph.center.clone(), ph.b)?;
            let v_norm = norm(&ph.v);
            let band_error = if v_norm > 0.0 {
                band_err_rate_mc(
                    &spec,
                    &band,
                    target,
                    &ph.v,
                    DIAGNOSTIC_SAMPLES,
                    child_seed(seed, ph.k as u64),
                )?
            } else {
                1.0
            };
            let angle_v = match UnitVec::normalize(&ph.v) {
                Ok(v) => angle(&v, target)?,
                Err(_) => f64::NAN,
            };
            Ok(PhaseDiagnostics {
                k: ph.k,
                angle: angle(&ph.w, target)?,
                angle_v,
                band_error,
                dirty_fraction: dirty as f64 / n,
                dirty_weight: dirty_weight / n,
                mass_fraction: ph.q.iter().sum::<f64>() / n,
                distance: distance(ph.w.as_slice(), target.as_slice()),
                next_radius: profile_radius(i + 1),
            })
        })
        .collect()
}
