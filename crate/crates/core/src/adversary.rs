//! Simulated example oracles: the per-request malicious oracle, the batch
//! nasty oracle, and the corruption strategies that drive them.
//!
//! Learners see oracles only through [`InstanceOracle`] / [`BatchOracle`],
//! which hand out instances and opaque label tokens. Provenance and the target
//! are reachable only through [`Audit`], which test and diagnostic code use.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dist::{DistributionSpec, DEFAULT_MAX_ATTEMPTS};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::rng::{stream, StreamRng, StreamTag};
use crate::types::{BandSpec, Label, LabeledSample, Provenance, UnitVec};

/// What the adversary may observe about the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerStateView {
    /// `w_{k-1}`; the zero vector in the first phase.
    pub center: UnitVec,
    pub bandwidth: f64,
    pub phase: usize,
}

impl LearnerStateView {
    pub fn initial(dim: usize, bandwidth: f64) -> Self {
        LearnerStateView {
            center: UnitVec::zero(dim),
            bandwidth,
            phase: 1,
        }
    }

    fn band(&self) -> Option<BandSpec> {
        if self.center.is_zero() {
            None
        } else {
            BandSpec::new(self.center.clone(), self.bandwidth).ok()
        }
    }

    fn in_band(&self, x: &[f64]) -> bool {
        self.center.is_zero() || self.center.dot(x).abs() <= self.bandwidth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackKind {
    RandomFlip,
    BandFlip,
    FarOutlier,
    BoundaryErase,
}

impl AttackKind {
    pub fn token(self) -> &'static str {
        match self {
            AttackKind::RandomFlip => "randomflip",
            AttackKind::BandFlip => "bandflip",
            AttackKind::FarOutlier => "faroutlier",
            AttackKind::BoundaryErase => "boundaryerase",
        }
    }
}

pub const DEFAULT_OUTLIER_MAGNITUDE: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    /// Outlier norm `R`; only read by `FarOutlier`.
    pub magnitude: f64,
    pub seed: u64,
}

impl AttackStrategy {
    pub fn new(kind: AttackKind) -> Self {
        AttackStrategy {
            kind,
            magnitude: DEFAULT_OUTLIER_MAGNITUDE,
            seed: 0,
        }
    }

    pub fn far_outlier(magnitude: f64) -> Self {
        AttackStrategy {
            magnitude,
            ..AttackStrategy::new(AttackKind::FarOutlier)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AttackKind::FarOutlier && !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::invalid(
                "strategy",
                format!("outlier magnitude {} must be positive", self.magnitude),
            ));
        }
        Ok(())
    }

    /// One corrupted pair chosen with knowledge of the learner state.
    fn forge(
        &self,
        dist: &DistributionSpec,
        target: &UnitVec,
        view: &LearnerStateView,
        rng: &mut StreamRng,
    ) -> (Vec<f64>, Label) {
        let x = match self.kind {
            AttackKind::RandomFlip => dist.draw(rng),
            AttackKind::BandFlip | AttackKind::BoundaryErase => banded_draw(dist, view, rng),
            AttackKind::FarOutlier => {
                let g = banded_draw(dist, view, rng);
                far_point(&g, &view.center, self.magnitude)
            }
        };
        let y = Label::of(target.dot(&x)).flipped();
        (x, y)
    }
}

/// A draw from `D` restricted to the learner's band, or from `D` itself in
/// the first phase. If rejection runs dry the along-band component is pulled
/// inside instead.
fn banded_draw(dist: &DistributionSpec, view: &LearnerStateView, rng: &mut StreamRng) -> Vec<f64> {
    match view.band() {
        None => dist.draw(rng),
        Some(band) => match dist.draw_in_band(&band, rng, DEFAULT_MAX_ATTEMPTS) {
            Ok((x, _)) => x,
            Err(_) => {
                let mut x = dist.draw(rng);
                let u = band.direction();
                let along = u.dot(&x);
                let inside = along.clamp(-band.halfwidth(), band.halfwidth());
                for (xi, ui) in x.iter_mut().zip(u.as_slice()) {
                    *xi += (inside - along) * ui;
                }
                x
            }
        },
    }
}

/// Keeps the along-center coordinate of `g` and pushes the orthogonal part
/// out to norm `magnitude`.
fn far_point(g: &[f64], center: &UnitVec, magnitude: f64) -> Vec<f64> {
    if center.is_zero() {
        let n = norm(g);
        return if n > 0.0 {
            g.iter().map(|v| magnitude * v / n).collect()
        } else {
            let mut x = vec![0.0; g.len()];
            x[0] = magnitude;
            x
        };
    }
    let along = center.dot(g);
    let mut perp: Vec<f64> = g
        .iter()
        .zip(center.as_slice())
        .map(|(gi, ci)| gi - along * ci)
        .collect();
    let pn = norm(&perp);
    if pn == 0.0 {
        // any direction orthogonal to the center
        let i = (0..g.len())
            .min_by(|&a, &b| center.as_slice()[a].abs().total_cmp(&center.as_slice()[b].abs()))
            .unwrap_or(0);
        perp = vec![0.0; g.len()];
        perp[i] = 1.0;
        let c = center.as_slice()[i];
        for (p, ci) in perp.iter_mut().zip(center.as_slice()) {
            *p -= c * ci;
        }
        let pn = norm(&perp);
        perp.iter_mut().for_each(|p| *p /= pn);
    } else {
        perp.iter_mut().for_each(|p| *p /= pn);
    }
    perp.iter()
        .zip(center.as_slice())
        .map(|(p, c)| along * c + magnitude * p)
        .collect()
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AttackKind::FarOutlier => write!(f, "faroutlier:R={}", self.magnitude),
            k => f.write_str(k.token()),
        }
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "randomflip" => Ok(AttackKind::RandomFlip),
            "bandflip" => Ok(AttackKind::BandFlip),
            "faroutlier" => Ok(AttackKind::FarOutlier),
            "boundaryerase" => Ok(AttackKind::BoundaryErase),
            other => Err(Error::Parse(format!("unknown strategy `{other}`"))),
        }
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    /// `kind[:key=value,...]` with keys `R` and `seed`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (s, None),
        };
        let mut strategy = AttackStrategy::new(kind.parse()?);
        for item in params.into_iter().flat_map(|p| p.split(',')) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("`{item}`: expected key=value")))?;
            let value = value.trim();
            match key.trim() {
                "R" | "r" => {
                    strategy.magnitude = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("`{value}` is not a magnitude")))?
                }
                "seed" => {
                    strategy.seed = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("`{value}` is not a seed")))?
                }
                other => return Err(Error::Parse(format!("unknown strategy parameter `{other}`"))),
            }
        }
        strategy.validate()?;
        Ok(strategy)
    }
}

static NEXT_ORACLE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle for a label committed by an oracle but not yet shown to the learner.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelToken {
    oracle: u64,
    serial: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleCounters {
    pub instance_calls: u64,
    pub label_calls: u64,
    pub batch_calls: u64,
}

/// Per-request instance access, as seen by the learner.
pub trait InstanceOracle {
    fn dim(&self) -> usize;
    fn draw(&mut self, view: &LearnerStateView) -> (Vec<f64>, LabelToken);
    fn reveal(&mut self, token: &LabelToken) -> Result<Label>;
    fn counters(&self) -> OracleCounters;
}

/// Batch instance access, as seen by the learner.
pub trait BatchOracle {
    fn dim(&self) -> usize;
    fn batch(&mut self, n: usize, view: &LearnerStateView) -> Result<Vec<(Vec<f64>, LabelToken)>>;
    fn reveal(&mut self, token: &LabelToken) -> Result<Label>;
    fn counters(&self) -> OracleCounters;
}

/// Hidden ground truth, for tests and post-hoc diagnostics only.
pub trait Audit {
    fn provenance(&self, token: &LabelToken) -> Result<Provenance>;
    fn target(&self) -> &UnitVec;
    fn distribution(&self) -> &DistributionSpec;
}

#[derive(Clone, Debug)]
struct Committed {
    label: Label,
    provenance: Provenance,
    revealed: bool,
}

#[derive(Clone, Debug)]
struct TokenTable {
    oracle: u64,
    entries: Vec<Committed>,
}

impl TokenTable {
    fn new() -> Self {
        TokenTable {
            oracle: NEXT_ORACLE_ID.fetch_add(1, Ordering::Relaxed),
            entries: Vec::new(),
        }
    }

    fn issue(&mut self, label: Label, provenance: Provenance) -> LabelToken {
        self.entries.push(Committed {
            label,
            provenance,
            revealed: false,
        });
        LabelToken {
            oracle: self.oracle,
            serial: self.entries.len() - 1,
        }
    }

    fn entry(&self, token: &LabelToken) -> Result<&Committed> {
        if token.oracle != self.oracle {
            return Err(Error::UnknownToken);
        }
        self.entries.get(token.serial).ok_or(Error::UnknownToken)
    }

    fn reveal(&mut self, token: &LabelToken) -> Result<Label> {
        if token.oracle != self.oracle {
            return Err(Error::UnknownToken);
        }
        let e = self.entries.get_mut(token.serial).ok_or(Error::UnknownToken)?;
        if e.revealed {
            return Err(Error::TokenAlreadyRevealed);
        }
        e.revealed = true;
        Ok(e.label)
    }
}

fn check_common(dist: &DistributionSpec, target: &UnitVec, eta: f64, strategy: &AttackStrategy) -> Result<()> {
    if target.dim() != dist.dim {
        return Err(Error::DimensionMismatch {
            expected: dist.dim,
            found: target.dim(),
        });
    }
    if target.is_zero() {
        return Err(Error::ZeroVector);
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::invalid("eta", format!("{eta} is outside [0, 1/2)")));
    }
    strategy.validate()
}

/// Per-request oracle: each call is independently corrupted with probability `eta`.
#[derive(Debug)]
pub struct MaliciousOracle {
    dist: DistributionSpec,
    target: UnitVec,
    eta: f64,
    strategy: AttackStrategy,
    seed: u64,
    phase: usize,
    clean_rng: StreamRng,
    coin_rng: StreamRng,
    adversary_rng: StreamRng,
    tokens: TokenTable,
    counters: OracleCounters,
}

impl MaliciousOracle {
    pub fn new(dist: DistributionSpec, target: UnitVec, eta: f64, strategy: AttackStrategy, seed: u64) -> Result<Self> {
        check_common(&dist, &target, eta, &strategy)?;
        if strategy.kind == AttackKind::BoundaryErase {
            return Err(Error::invalid("strategy", "boundaryerase needs the batch oracle"));
        }
        Ok(MaliciousOracle {
            dist,
            target,
            eta,
            strategy,
            seed,
            phase: 1,
            clean_rng: stream(seed, StreamTag::Clean, 1),
            coin_rng: stream(seed, StreamTag::Corruption, 0),
            adversary_rng: stream(seed ^ strategy.seed, StreamTag::Adversary, 0),
            tokens: TokenTable::new(),
            counters: OracleCounters::default(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn strategy(&self) -> &AttackStrategy {
        &self.strategy
    }

    fn enter_phase(&mut self, phase: usize) {
        if phase != self.phase {
            self.phase = phase;
            self.clean_rng = stream(self.seed, StreamTag::Clean, phase as u64);
        }
    }
}

impl InstanceOracle for MaliciousOracle {
    fn dim(&self) -> usize {
        self.dist.dim
    }

    fn draw(&mut self, view: &LearnerStateView) -> (Vec<f64>, LabelToken) {
        self.enter_phase(view.phase);
        self.counters.instance_calls += 1;
        // the clean draw is always consumed so clean streams line up across noise rates
        let clean = self.dist.draw(&mut self.clean_rng);
        let corrupt = self.eta > 0.0 && self.coin_rng.random::<f64>() < self.eta;
        if corrupt {
            let (x, y) = self
                .strategy
                .forge(&self.dist, &self.target, view, &mut self.adversary_rng);
            let token = self.tokens.issue(y, Provenance::Dirty);
            (x, token)
        } else {
            let y = Label::of(self.target.dot(&clean));
            let token = self.tokens.issue(y, Provenance::Clean);
            (clean, token)
        }
    }

    fn reveal(&mut self, token: &LabelToken) -> Result<Label> {
        let y = self.tokens.reveal(token)?;
        self.counters.label_calls += 1;
        Ok(y)
    }

    fn counters(&self) -> OracleCounters {
        self.counters
    }
}

impl Audit for MaliciousOracle {
    fn provenance(&self, token: &LabelToken) -> Result<Provenance> {
        Ok(self.tokens.entry(token)?.provenance)
    }

    fn target(&self) -> &UnitVec {
        &self.target
    }

    fn distribution(&self) -> &DistributionSpec {
        &self.dist
    }
}

/// Everything the nasty adversary did to one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord {
    pub phase: usize,
    pub requested: usize,
    /// The clean draw before corruption, in draw order.
    pub clean: Vec<LabeledSample>,
    /// Indices into `clean` that were erased.
    pub erased_indices: Vec<usize>,
    /// Substituted pairs.
    pub replacements: Vec<LabeledSample>,
}

impl BatchRecord {
    pub fn erased(&self) -> Vec<&LabeledSample> {
        self.erased_indices.iter().map(|&i| &self.clean[i]).collect()
    }
}

/// Batch oracle: draws `N` clean pairs and replaces exactly `floor(eta N)` of them.
#[derive(Debug)]
pub struct NastyOracle {
    dist: DistributionSpec,
    target: UnitVec,
    eta: f64,
    strategy: AttackStrategy,
    seed: u64,
    tokens: TokenTable,
    counters: OracleCounters,
    records: Vec<BatchRecord>,
}

impl NastyOracle {
    pub fn new(dist: DistributionSpec, target: UnitVec, eta: f64, strategy: AttackStrategy, seed: u64) -> Result<Self> {
        check_common(&dist, &target, eta, &strategy)?;
        Ok(NastyOracle {
            dist,
            target,
            eta,
            strategy,
            seed,
            tokens: TokenTable::new(),
            counters: OracleCounters::default(),
            records: Vec::new(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn strategy(&self) -> &AttackStrategy {
        &self.strategy
    }

    /// `floor(eta * n)`, robust to representation error in `eta`.
    pub fn replacement_count(&self, n: usize) -> usize {
        (self.eta * n as f64 + 1e-9).floor() as usize
    }

    /// Per-batch history, including the erased clean samples.
    pub fn records(&self) -> &[BatchRecord] {
        &self.records
    }

    fn choose_erased(
        &self,
        clean: &[LabeledSample],
        m: usize,
        view: &LearnerStateView,
        rng: &mut StreamRng,
    ) -> Vec<usize> {
        let (mut inside, mut outside): (Vec<usize>, Vec<usize>) =
            (0..clean.len()).partition(|&i| view.in_band(&clean[i].x));
        let mut chosen = Vec::with_capacity(m);
        if self.strategy.kind == AttackKind::BoundaryErase {
            let margin = |i: &usize| self.target.dot(&clean[*i].x).abs();
            inside.sort_by(|a, b| margin(a).total_cmp(&margin(b)).then(a.cmp(b)));
            outside.sort_by(|a, b| margin(a).total_cmp(&margin(b)).then(a.cmp(b)));
        } else {
            inside.shuffle(rng);
            outside.shuffle(rng);
        }
        chosen.extend(inside.iter().take(m));
        let rest = m - chosen.len();
        chosen.extend(outside.iter().take(rest));
        chosen.sort_unstable();
        chosen
    }
}

impl BatchOracle for NastyOracle {
    fn dim(&self) -> usize {
        self.dist.dim
    }

    fn batch(&mut self, n: usize, view: &LearnerStateView) -> Result<Vec<(Vec<f64>, LabelToken)>> {
        if n == 0 {
            return Err(Error::invalid("batch size", "must be at least 1"));
        }
        self.counters.batch_calls += 1;
        self.counters.instance_calls += n as u64;
        let phase = view.phase as u64;
        let mut clean_rng = stream(self.seed, StreamTag::Clean, phase);
        let clean: Vec<LabeledSample> = (0..n)
            .map(|_| {
                let x = self.dist.draw(&mut clean_rng);
                let y = Label::of(self.target.dot(&x));
                LabeledSample {
                    x,
                    y,
                    provenance: Provenance::Clean,
                }
            })
            .collect();

        let m = self.replacement_count(n);
        let mut adversary_rng = stream(self.seed ^ self.strategy.seed, StreamTag::Adversary, phase);
        let erased = self.choose_erased(&clean, m, view, &mut adversary_rng);
        let replacements: Vec<LabeledSample> = (0..m)
            .map(|_| {
                let (x, y) = self.strategy.forge(&self.dist, &self.target, view, &mut adversary_rng);
                LabeledSample {
                    x,
                    y,
                    provenance: Provenance::Replacement,
                }
            })
            .collect();

        let mut out: Vec<LabeledSample> = clean.clone();
        for (&i, rep) in erased.iter().zip(&replacements) {
            out[i] = rep.clone();
        }
        if m > 0 {
            out.shuffle(&mut stream(self.seed, StreamTag::Shuffle, phase));
        }
        self.records.push(BatchRecord {
            phase: view.phase,
            requested: n,
            clean,
            erased_indices: erased,
            replacements,
        });
        Ok(out
            .into_iter()
            .map(|s| {
                let token = self.tokens.issue(s.y, s.provenance);
                (s.x, token)
            })
            .collect())
    }

    fn reveal(&mut self, token: &LabelToken) -> Result<Label> {
        let y = self.tokens.reveal(token)?;
        self.counters.label_calls += 1;
        Ok(y)
    }

    fn counters(&self) -> OracleCounters {
        self.counters
    }
}

impl Audit for NastyOracle {
    fn provenance(&self, token: &LabelToken) -> Result<Provenance> {
        Ok(self.tokens.entry(token)?.provenance)
    }

    fn target(&self) -> &UnitVec {
        &self.target
    }

    fn distribution(&self) -> &DistributionSpec {
        &self.dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(eta: f64, strategy: &str) -> MaliciousOracle {
        MaliciousOracle::new(
            DistributionSpec::gaussian(3),
            UnitVec::basis(3, 0),
            eta,
            strategy.parse().unwrap(),
            5,
        )
        .unwrap()
    }

    #[test]
    fn strategy_tokens() {
        let s: AttackStrategy = "faroutlier:R=42".parse().unwrap();
        assert_eq!(s.kind, AttackKind::FarOutlier);
        assert_eq!(s.magnitude, 42.0);
        assert_eq!(s.to_string(), "faroutlier:R=42");
        assert_eq!(
            "faroutlier".parse::<AttackStrategy>().unwrap().magnitude,
            DEFAULT_OUTLIER_MAGNITUDE
        );
        assert!("faroutlier:R=-1".parse::<AttackStrategy>().is_err());
        assert!("bandflip:Q=1".parse::<AttackStrategy>().is_err());
        assert!("nope".parse::<AttackStrategy>().is_err());
    }

    #[test]
    fn tokens_are_single_use_and_oracle_bound() {
        let mut a = oracle(0.0, "randomflip");
        let mut b = oracle(0.0, "randomflip");
        let view = LearnerStateView::initial(3, 1.0);
        let (_, t) = a.draw(&view);
        assert!(matches!(b.reveal(&t), Err(Error::UnknownToken)));
        a.reveal(&t).unwrap();
        assert!(matches!(a.reveal(&t), Err(Error::TokenAlreadyRevealed)));
        assert_eq!(a.counters().label_calls, 1);
    }

    #[test]
    fn malicious_rejects_erasure_and_large_eta() {
        let d = DistributionSpec::gaussian(2);
        let w = UnitVec::basis(2, 0);
        assert!(MaliciousOracle::new(d, w.clone(), 0.1, AttackStrategy::new(AttackKind::BoundaryErase), 0).is_err());
        assert!(MaliciousOracle::new(d, w.clone(), 0.5, AttackStrategy::new(AttackKind::RandomFlip), 0).is_err());
        assert!(NastyOracle::new(d, w, -0.1, AttackStrategy::new(AttackKind::RandomFlip), 0).is_err());
    }

    #[test]
    fn far_point_keeps_band_coordinate() {
        let c = UnitVec::basis(3, 0);
        let x = far_point(&[0.05, 1.0, 2.0], &c, 100.0);
        assert!((x[0] - 0.05).abs() < 1e-12);
        assert!((norm(&x[1..]) - 100.0).abs() < 1e-9);
        let y = far_point(&[0.3, 0.0, 0.0], &c, 10.0);
        assert!((y[0] - 0.3).abs() < 1e-12);
        assert!((norm(&y[1..]) - 10.0).abs() < 1e-9);
    }
}
