//! Top-eigenvalue estimation for empirical second-moment matrices and the
//! matrix-Chernoff concentration study built on it.

use rand::Rng;
use rayon::prelude::*;

use crate::dist::{sample_band, DistributionKind, DistributionSpec, DEFAULT_MAX_ATTEMPTS};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, SymMatrix};
use crate::rng::{child_seed, stream, StreamTag};
use crate::stats::loglog_slope;
use crate::types::{BandSpec, UnitVec};

pub const POWER_ITERATION_CAP: usize = 1000;
const RAYLEIGH_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct TopEigen {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration from `start`; stops once the Rayleigh quotient settles.
pub fn power_iteration(m: &SymMatrix, start: &[f64]) -> TopEigen {
    let d = m.dim();
    let mut v = start.to_vec();
    let n0 = norm(&v);
    if n0 == 0.0 || !n0.is_finite() {
        v = vec![1.0 / (d as f64).sqrt(); d];
    } else {
        v.iter_mut().for_each(|x| *x /= n0);
    }
    let mut mv = vec![0.0; d];
    let mut rayleigh = m.quad_form(&v);
    let mut iterations = 0;
    while iterations < POWER_ITERATION_CAP {
        iterations += 1;
        m.mul_vec_into(&v, &mut mv);
        let n = norm(&mv);
        if n == 0.0 {
            return TopEigen {
                value: 0.0,
                vector: v,
                iterations,
            };
        }
        for (vi, mi) in v.iter_mut().zip(&mv) {
            *vi = mi / n;
        }
        let next = m.quad_form(&v);
        let settled = (next - rayleigh).abs() <= RAYLEIGH_TOL * next.abs().max(f64::MIN_POSITIVE);
        rayleigh = next;
        if settled {
            break;
        }
    }
    TopEigen {
        value: rayleigh,
        vector: v,
        iterations,
    }
}

/// Start vector: the normalized mean of `xs` plus a small seeded perturbation.
fn start_vector(xs: &[Vec<f64>]) -> Vec<f64> {
    let d = xs[0].len();
    let mut mean = vec![0.0; d];
    for x in xs {
        for (m, xi) in mean.iter_mut().zip(x) {
            *m += xi;
        }
    }
    let mn = norm(&mean);
    if mn > 0.0 {
        mean.iter_mut().for_each(|m| *m /= mn);
    }
    let mut rng = stream(0x5eed, StreamTag::Study, d as u64);
    for m in mean.iter_mut() {
        *m += 0.5 * rng.random_range(-1.0..1.0);
    }
    mean
}

/// Top eigenvalue of `(1/n) sum x x^T`.
pub fn lambda_max(xs: &[Vec<f64>]) -> Result<f64> {
    Ok(top_eigen(xs)?.value)
}

pub fn top_eigen(xs: &[Vec<f64>]) -> Result<TopEigen> {
    check_points(xs)?;
    let m = SymMatrix::weighted_second_moment(xs, None);
    Ok(power_iteration(&m, &start_vector(xs)))
}

fn check_points(xs: &[Vec<f64>]) -> Result<()> {
    let first = xs
        .first()
        .ok_or_else(|| Error::invalid("point set", "must be nonempty"))?;
    if first.is_empty() {
        return Err(Error::invalid("point set", "zero-dimensional points"));
    }
    if let Some(bad) = xs.iter().find(|x| x.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            found: bad.len(),
        });
    }
    Ok(())
}

/// Top eigenvalue of an explicit matrix, started from a seeded direction.
pub fn matrix_lambda_max(m: &SymMatrix) -> f64 {
    let mut rng = stream(0x5eed, StreamTag::Study, m.dim() as u64);
    let start: Vec<f64> = (0..m.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    power_iteration(m, &start).value
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralStudy {
    pub kind: DistributionKind,
    pub dims: Vec<usize>,
    pub n_factors: Vec<f64>,
    pub b: f64,
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    /// `C2` in the rescaled population bound `4 C2 (b^2 + r^2) / r^2`.
    pub big_c2: f64,
}

impl SpectralStudy {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid("dims", "need at least one dimension, each >= 2"));
        }
        if self.n_factors.is_empty() || self.n_factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid("n_factors", "need positive finite multipliers"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::invalid("b", format!("{} must be positive and finite", self.b)));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid("r", format!("{} must be positive and finite", self.r)));
        }
        if !(self.big_c2.is_finite() && self.big_c2 > 0.0) {
            return Err(Error::invalid("C2", "must be positive"));
        }
        Ok(())
    }

    /// `nFactor * d * ceil(ln(d/b)^2)`
    pub fn sample_size(&self, d: usize, n_factor: f64) -> usize {
        study_sample_size(d, self.b, n_factor)
    }

    pub fn rescaled_bound(&self) -> f64 {
        4.0 * self.big_c2 * (self.b * self.b + self.r * self.r) / (self.r * self.r)
    }
}

pub fn study_sample_size(d: usize, b: f64, n_factor: f64) -> usize {
    let l = (d as f64 / b).ln();
    let polylog = (l * l).ceil().max(1.0);
    (n_factor * d as f64 * polylog).ceil().max(1.0) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRow {
    pub d: usize,
    pub n_factor: f64,
    pub n: usize,
    pub trial: usize,
    pub lambda_max: f64,
    pub population: f64,
    pub exceeded: bool,
    /// `(b^2 + r^2 lambda_max) / r^2`
    pub rescaled: f64,
}

impl SpectralRow {
    pub const CSV_HEADER: &'static str = "d,n,trial,lambdaMax,exceeded,nFactor,population,rescaled";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.10},{},{},{:.10},{:.10}",
            self.d,
            self.n,
            self.trial,
            self.lambda_max,
            u8::from(self.exceeded),
            self.n_factor,
            self.population,
            self.rescaled
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub d: usize,
    pub n_factor: f64,
    pub n: usize,
    pub population: f64,
    pub exceedance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<SpectralRow>,
    pub cells: Vec<CellSummary>,
    pub rescaled_bound: f64,
}

impl StudyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(SpectralRow::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, d: usize, n_factor: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.d == d && c.n_factor == n_factor)
    }
}

fn band_direction(seed: u64, d: usize) -> UnitVec {
    let mut rng = stream(seed, StreamTag::Study, d as u64);
    UnitVec::random(d, &mut rng)
}

/// Estimate of the banded population `lambda_max(E[x x^T])` from `n` draws.
pub fn population_lambda(spec: &DistributionSpec, band: &BandSpec, n: usize, seed: u64) -> Result<f64> {
    let draws = sample_band(spec, band, n, seed, DEFAULT_MAX_ATTEMPTS.saturating_mul(100))?;
    lambda_max(&draws.points)
}

fn run_cell(
    study: &SpectralStudy,
    cell_index: u64,
    d: usize,
    n_factor: f64,
) -> Result<(CellSummary, Vec<SpectralRow>)> {
    let spec = DistributionSpec::new(study.kind, d)?;
    let cell_seed = child_seed(study.seed, cell_index);
    let band = BandSpec::new(band_direction(cell_seed, d), study.b)?;
    let n = study.sample_size(d, n_factor);
    let population = population_lambda(&spec, &band, 10 * n, child_seed(cell_seed, u64::MAX))?;
    let rows = (0..study.trials)
        .into_par_iter()
        .map(|trial| {
            let draws = sample_band(
                &spec,
                &band,
                n,
                child_seed(cell_seed, trial as u64),
                DEFAULT_MAX_ATTEMPTS.saturating_mul(10),
            )?;
            let lm = lambda_max(&draws.points)?;
            Ok(SpectralRow {
                d,
                n_factor,
                n,
                trial,
                lambda_max: lm,
                population,
                exceeded: lm > 2.0 * population,
                rescaled: (study.b * study.b + study.r * study.r * lm) / (study.r * study.r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exceedance = rows.iter().filter(|r| r.exceeded).count() as f64 / rows.len() as f64;
    Ok((
        CellSummary {
            d,
            n_factor,
            n,
            population,
            exceedance,
        },
        rows,
    ))
}

/// For each `(d, nFactor)` cell, draws `trials` banded sample sets and counts
/// how often the empirical top eigenvalue exceeds twice the population one.
pub fn chernoff_study(study: &SpectralStudy) -> Result<StudyTable> {
    study.validate()?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut index = 0u64;
    for &d in &study.dims {
        for &f in &study.n_factors {
            let (cell, mut r) = run_cell(study, index, d, f)?;
            index += 1;
            cells.push(cell);
            rows.append(&mut r);
        }
    }
    Ok(StudyTable {
        rows,
        cells,
        rescaled_bound: study.rescaled_bound(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub d: usize,
    /// Smallest candidate multiplier meeting the exceedance target.
    pub n_factor: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    /// Slope of `ln n*` against `ln d`; `None` when fewer than two dims succeed.
    pub slope: Option<f64>,
}

/// Minimal `nFactor` (from the ascending `candidates`) whose exceedance
/// frequency is at most `target`, per dimension.
pub fn scaling_study(study: &SpectralStudy, candidates: &[f64], target: f64) -> Result<ScalingResult> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let probe = SpectralStudy {
        n_factors: sorted.clone(),
        ..study.clone()
    };
    probe.validate()?;
    let mut points = Vec::new();
    for (di, &d) in study.dims.iter().enumerate() {
        let mut found = None;
        for (fi, &f) in sorted.iter().enumerate() {
            let (cell, _) = run_cell(&probe, (di * sorted.len() + fi) as u64, d, f)?;
            if cell.exceedance <= target {
                found = Some((f, cell.n));
                break;
            }
        }
        points.push(ScalingPoint {
            d,
            n_factor: found.map(|f| f.0),
            n: found.map(|f| f.1),
        });
    }
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.n.map(|n| (p.d as f64, n as f64)))
        .collect();
    Ok(ScalingResult {
        slope: loglog_slope(&pairs),
        points,
    })
}

/// Largest Euclidean norm among `n` banded draws.
pub fn max_norm_check(spec: &DistributionSpec, band: &BandSpec, n: usize, seed: u64) -> Result<f64> {
    let draws = sample_band(spec, band, n, seed, DEFAULT_MAX_ATTEMPTS)?;
    Ok(draws.points.iter().map(|x| norm(x)).fold(0.0, f64::max))
}

/// Rayleigh quotient `v^T M v / v^T v`.
pub fn rayleigh(m: &SymMatrix, v: &[f64]) -> f64 {
    m.quad_form(v) / dot(v, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_and_diagonal() {
        assert!((lambda_max(&[vec![1.0, 0.0]]).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambda_max(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(lambda_max(&[]).is_err());
    }

    #[test]
    fn study_rejects_bad_band() {
        let study = SpectralStudy {
            kind: DistributionKind::StandardGaussian,
            dims: vec![5],
            n_factors: vec![1.0],
            b: f64::INFINITY,
            r: 0.1,
            trials: 2,
            seed: 0,
            big_c2: 1.0,
        };
        assert!(chernoff_study(&study).is_err());
    }

    #[test]
    fn sample_size_formula() {
        // ln(100)^2 = 21.2 -> 22
        assert_eq!(study_sample_size(10, 0.1, 20.0), 20 * 10 * 22);
    }
}
