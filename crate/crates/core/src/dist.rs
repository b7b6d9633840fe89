//! Isotropic log-concave product distributions, band-conditioned rejection
//! sampling, and Monte-Carlo oracles for band masses and error rates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::angle;
use crate::linalg::dot;
use crate::rng::{stream, StreamTag};
use crate::stats::binomial_stderr;
use crate::types::{BandSpec, Label, UnitVec};

/// Default cap on rejection-sampling attempts.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    StandardGaussian,
    /// Coordinates `E - 1` with `E ~ Exp(1)`.
    IsotropicExponentialProduct,
    /// Logistic coordinates with scale `sqrt(3)/pi`.
    IsotropicLogisticProduct,
    /// Uniform on `[-sqrt(3), sqrt(3)]^d`.
    IsotropicCubeUniform,
}

impl DistributionKind {
    pub fn token(self) -> &'static str {
        match self {
            DistributionKind::StandardGaussian => "gaussian",
            DistributionKind::IsotropicExponentialProduct => "exponential",
            DistributionKind::IsotropicLogisticProduct => "logistic",
            DistributionKind::IsotropicCubeUniform => "cube",
        }
    }

    pub const ALL: [DistributionKind; 4] = [
        DistributionKind::StandardGaussian,
        DistributionKind::IsotropicExponentialProduct,
        DistributionKind::IsotropicLogisticProduct,
        DistributionKind::IsotropicCubeUniform,
    ];

    fn draw_coord<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DistributionKind::StandardGaussian => rng.sample(StandardNormal),
            DistributionKind::IsotropicExponentialProduct => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            DistributionKind::IsotropicLogisticProduct => {
                let u: f64 = rng.random::<f64>();
                // u in [0, 1); reflect the zero endpoint away
                let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
                3f64.sqrt() / PI * (u / (1.0 - u)).ln()
            }
            DistributionKind::IsotropicCubeUniform => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub dim: usize,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be positive"));
        }
        Ok(DistributionSpec { kind, dim })
    }

    pub fn gaussian(dim: usize) -> Self {
        DistributionSpec {
            kind: DistributionKind::StandardGaussian,
            dim,
        }
    }

    pub fn is_rotation_invariant(&self) -> bool {
        self.kind == DistributionKind::StandardGaussian
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| self.kind.draw_coord(rng)).collect()
    }

    /// One draw from `D` conditioned on `band`, returning the number of attempts used.
    ///
    /// Rejection runs on the scalar `u . x` whenever the conditional law can be
    /// completed exactly afterwards: for the Gaussian (the orthogonal part is
    /// independent of `u . x`) and for product laws with an axis-aligned `u`.
    pub fn draw_in_band<R: Rng + ?Sized>(
        &self,
        band: &BandSpec,
        rng: &mut R,
        max_attempts: u64,
    ) -> Result<(Vec<f64>, u64)> {
        let u = band.direction();
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.dim(),
            });
        }
        let b = band.halfwidth();
        if u.is_zero() {
            return Ok((self.draw(rng), 1));
        }
        let axis = axis_of(u);
        let mut attempts = 0u64;
        match (self.kind, axis) {
            (DistributionKind::StandardGaussian, _) => {
                let z = loop {
                    if attempts >= max_attempts {
                        return Err(exhausted(attempts));
                    }
                    attempts += 1;
                    let z: f64 = rng.sample(StandardNormal);
                    if z.abs() <= b {
                        break z;
                    }
                };
                let mut x = self.draw(rng);
                let along = u.dot(&x);
                for (xi, ui) in x.iter_mut().zip(u.as_slice()) {
                    *xi += (z - along) * ui;
                }
                Ok((x, attempts))
            }
            (kind, Some((i, sgn))) => {
                let t = loop {
                    if attempts >= max_attempts {
                        return Err(exhausted(attempts));
                    }
                    attempts += 1;
                    let t = kind.draw_coord(rng);
                    if t.abs() <= b {
                        break t;
                    }
                };
                let mut x = self.draw(rng);
                x[i] = t;
                let _ = sgn;
                Ok((x, attempts))
            }
            (_, None) => loop {
                if attempts >= max_attempts {
                    return Err(exhausted(attempts));
                }
                attempts += 1;
                let x = self.draw(rng);
                if band.contains(&x) {
                    return Ok((x, attempts));
                }
            },
        }
    }
}

fn exhausted(attempts: u64) -> Error {
    Error::RejectionExhausted {
        attempts,
        accepted: 0,
        requested: 1,
    }
}

/// `Some((i, sign))` when `u = sign * e_i`.
fn axis_of(u: &UnitVec) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, &c) in u.as_slice().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if found.is_some() || (c.abs() - 1.0).abs() > 1e-15 {
            return None;
        }
        found = Some((i, c.signum()));
    }
    found
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:d={}", self.kind.token(), self.dim)
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "gauss" => Ok(DistributionKind::StandardGaussian),
            "exponential" | "exp" | "explog" => Ok(DistributionKind::IsotropicExponentialProduct),
            "logistic" => Ok(DistributionKind::IsotropicLogisticProduct),
            "cube" | "uniform" => Ok(DistributionKind::IsotropicCubeUniform),
            other => Err(Error::Parse(format!("unknown distribution `{other}`"))),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `"gaussian:d=20"`; the dimension may be omitted only through
    /// [`DistributionSpec::parse_with_dim`].
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("`{s}`: expected kind:d=<dim>")))?;
        let kind: DistributionKind = kind.parse()?;
        let dim = parse_dim(rest)?;
        DistributionSpec::new(kind, dim)
    }
}

impl DistributionSpec {
    /// Accepts either `"kind:d=N"` or a bare `"kind"` completed with `dim`.
    pub fn parse_with_dim(s: &str, dim: usize) -> Result<Self> {
        match s.split_once(':') {
            Some(_) => s.parse(),
            None => DistributionSpec::new(s.parse()?, dim),
        }
    }
}

fn parse_dim(rest: &str) -> Result<usize> {
    let v = rest
        .trim()
        .strip_prefix("d=")
        .ok_or_else(|| Error::Parse(format!("`{rest}`: expected d=<dim>")))?;
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{v}` is not a dimension")))
}

/// `n` i.i.d. draws from `D`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("sample count", "must be at least 1"));
    }
    let mut rng = stream(seed, StreamTag::Sample, 0);
    Ok((0..n).map(|_| spec.draw(&mut rng)).collect())
}

#[derive(Clone, Debug)]
pub struct BandDraws {
    pub points: Vec<Vec<f64>>,
    pub attempts: u64,
}

impl BandDraws {
    pub fn acceptance_rate(&self) -> f64 {
        self.points.len() as f64 / self.attempts as f64
    }
}

/// `n` i.i.d. draws from `D` conditioned on `band`.
pub fn sample_band(
    spec: &DistributionSpec,
    band: &BandSpec,
    n: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<BandDraws> {
    if n == 0 {
        return Err(Error::invalid("sample count", "must be at least 1"));
    }
    let mut rng = stream(seed, StreamTag::Sample, 1);
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0u64;
    while points.len() < n {
        let budget = max_attempts.saturating_sub(attempts);
        match spec.draw_in_band(band, &mut rng, budget) {
            Ok((x, used)) => {
                attempts += used;
                points.push(x);
            }
            Err(Error::RejectionExhausted { attempts: used, .. }) => {
                return Err(Error::RejectionExhausted {
                    attempts: attempts + used,
                    accepted: points.len(),
                    requested: n,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BandDraws { points, attempts })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of `Pr(|u . x| <= b)`.
pub fn band_mass(spec: &DistributionSpec, band: &BandSpec, n: usize, seed: u64) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::invalid("sample count", "must be at least 1"));
    }
    let mut rng = stream(seed, StreamTag::Sample, 2);
    let hits = (0..n).filter(|_| band.contains(&spec.draw(&mut rng))).count();
    let p = hits as f64 / n as f64;
    Ok(Estimate {
        value: p,
        stderr: binomial_stderr(p, n),
    })
}

/// Fraction of `n` draws on which `sign(u . x) != sign(v . x)`.
pub fn err_rate_mc(spec: &DistributionSpec, u: &UnitVec, v: &UnitVec, n: usize, seed: u64) -> Result<f64> {
    if u.is_zero() || v.is_zero() {
        return Err(Error::ZeroVector);
    }
    if n == 0 {
        return Err(Error::invalid("sample count", "must be at least 1"));
    }
    let mut rng = stream(seed, StreamTag::Evaluation, 0);
    let mut x = vec![0.0; spec.dim];
    let mut wrong = 0usize;
    for _ in 0..n {
        for xi in x.iter_mut() {
            *xi = spec.kind.draw_coord(&mut rng);
        }
        if Label::of(dot(u.as_slice(), &x)) != Label::of(dot(v.as_slice(), &x)) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / n as f64)
}

/// Exact disagreement `angle(u, v) / pi`, valid for rotation-invariant `D`.
pub fn err_rate_rotational(u: &UnitVec, v: &UnitVec) -> Result<f64> {
    Ok(angle(u, v)? / PI)
}

/// Disagreement between `sign(v . x)` and `sign(target . x)` over `D`
/// conditioned on `band`, by Monte Carlo.
pub fn band_err_rate_mc(
    spec: &DistributionSpec,
    band: &BandSpec,
    target: &UnitVec,
    v: &[f64],
    n: usize,
    seed: u64,
) -> Result<f64> {
    let draws = sample_band(spec, band, n, seed, DEFAULT_MAX_ATTEMPTS.saturating_mul(10))?;
    let wrong = draws
        .points
        .iter()
        .filter(|x| Label::of(target.dot(x)) != Label::of(dot(v, x)))
        .count();
    Ok(wrong as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_tokens() {
        let s: DistributionSpec = "gaussian:d=20".parse().unwrap();
        assert_eq!(s, DistributionSpec::gaussian(20));
        let s: DistributionSpec = "explog:d=50".parse().unwrap();
        assert_eq!(s.kind, DistributionKind::IsotropicExponentialProduct);
        assert_eq!(s.to_string(), "exponential:d=50");
        assert!("weird:d=3".parse::<DistributionSpec>().is_err());
        assert!("gaussian:k=3".parse::<DistributionSpec>().is_err());
        assert_eq!(
            DistributionSpec::parse_with_dim("logistic", 4).unwrap(),
            DistributionSpec::new(DistributionKind::IsotropicLogisticProduct, 4).unwrap()
        );
    }

    #[test]
    fn same_seed_same_draws() {
        for kind in DistributionKind::ALL {
            let spec = DistributionSpec::new(kind, 3).unwrap();
            assert_eq!(sample(&spec, 50, 9).unwrap(), sample(&spec, 50, 9).unwrap());
            assert_ne!(sample(&spec, 50, 9).unwrap(), sample(&spec, 50, 10).unwrap());
        }
    }

    #[test]
    fn band_draws_satisfy_predicate() {
        let mut rng = stream(3, StreamTag::Sample, 0);
        for kind in DistributionKind::ALL {
            let spec = DistributionSpec::new(kind, 4).unwrap();
            for dir in [
                UnitVec::basis(4, 2),
                UnitVec::random(4, &mut rng),
                UnitVec::basis(4, 1).neg(),
            ] {
                let band = BandSpec::new(dir, 0.05).unwrap();
                let draws = sample_band(&spec, &band, 500, 1, DEFAULT_MAX_ATTEMPTS).unwrap();
                assert!(draws.points.iter().all(|x| band.contains(x)));
            }
        }
    }

    #[test]
    fn rejection_cap_reports_failure() {
        let spec = DistributionSpec::gaussian(2);
        let band = BandSpec::new(UnitVec::basis(2, 0), 1e-9).unwrap();
        match sample_band(&spec, &band, 10, 0, 1000) {
            Err(Error::RejectionExhausted {
                attempts, requested, ..
            }) => {
                assert!(attempts <= 1000);
                assert_eq!(requested, 10);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn identical_predictors_never_disagree() {
        let spec = DistributionSpec::gaussian(5);
        let u = UnitVec::basis(5, 3);
        assert_eq!(err_rate_mc(&spec, &u, &u, 10_000, 1).unwrap(), 0.0);
        assert_eq!(err_rate_rotational(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn rotational_error_of_orthogonal_pair() {
        let e = err_rate_rotational(&UnitVec::basis(3, 0), &UnitVec::basis(3, 1)).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }
}
