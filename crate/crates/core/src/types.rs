//! Domain types shared by every stage of the learner.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};

/// Tolerance used for unit-norm and ball-membership checks.
pub const GEOM_TOL: f64 = 1e-9;

/// A direction in R^d with Euclidean norm one, or the distinguished zero
/// vector used as the first-phase center.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVec {
    coords: Vec<f64>,
}

impl UnitVec {
    /// Wraps `coords`, which must already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !n.is_finite() {
            return Err(Error::invalid("unit vector", "non-finite coordinates"));
        }
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        if (n - 1.0).abs() > GEOM_TOL {
            return Err(Error::invalid("unit vector", format!("norm {n} is not 1")));
        }
        Ok(UnitVec { coords })
    }

    /// Rescales `v` to unit length.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        let n = norm(v);
        if !n.is_finite() {
            return Err(Error::invalid("unit vector", "non-finite coordinates"));
        }
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(UnitVec {
            coords: v.iter().map(|x| x / n).collect(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        UnitVec { coords: vec![0.0; dim] }
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[axis] = 1.0;
        UnitVec { coords }
    }

    /// Uniform draw from the unit sphere.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            if let Ok(u) = UnitVec::normalize(&g) {
                return u;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        dot(&self.coords, x)
    }

    pub fn neg(&self) -> UnitVec {
        UnitVec {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

/// `W = { w : |w| <= 1, |w - center| <= radius }`.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBall {
    center: Vec<f64>,
    radius: f64,
}

impl SearchBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "radius",
                format!("{radius} must be positive and finite"),
            ));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center", "non-finite coordinates"));
        }
        Ok(SearchBall { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_nonempty(&self) -> bool {
        norm(&self.center) <= 1.0 + self.radius + GEOM_TOL
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        norm(w) <= 1.0 + GEOM_TOL && distance(w, &self.center) <= self.radius + GEOM_TOL
    }

    /// Upper bound on the diameter of W.
    pub fn diameter(&self) -> f64 {
        (2.0 * self.radius).min(2.0)
    }
}

/// The slab `{ x : |direction . x| <= halfwidth }`. A zero direction selects all of R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSpec {
    direction: UnitVec,
    halfwidth: f64,
}

impl BandSpec {
    pub fn new(direction: UnitVec, halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(Error::invalid(
                "band halfwidth",
                format!("{halfwidth} must be positive and finite"),
            ));
        }
        Ok(BandSpec { direction, halfwidth })
    }

    pub fn direction(&self) -> &UnitVec {
        &self.direction
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.direction.dot(x).abs() <= self.halfwidth
    }
}

/// A binary label in {-1, +1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    /// `sign(value)` with `sign(0) = +1`.
    pub fn of(value: f64) -> Label {
        if value < 0.0 {
            Label::Neg
        } else {
            Label::Pos
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }
}

/// Where a sample came from. Only test harnesses and diagnostics read this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Clean,
    Dirty,
    Replacement,
}

impl Provenance {
    pub fn is_clean(self) -> bool {
        self == Provenance::Clean
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Label,
    pub provenance: Provenance,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vec_rejects_wrong_norm() {
        assert!(UnitVec::new(vec![1.0, 1.0]).is_err());
        assert!(matches!(UnitVec::new(vec![0.0, 0.0]), Err(Error::ZeroVector)));
        assert!(UnitVec::new(vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn normalize_scales_to_one() {
        let u = UnitVec::normalize(&[3.0, 4.0]).unwrap();
        assert!((norm(u.as_slice()) - 1.0).abs() < 1e-15);
        assert!(matches!(UnitVec::normalize(&[0.0; 3]), Err(Error::ZeroVector)));
    }

    #[test]
    fn zero_vector_is_distinguished() {
        let z = UnitVec::zero(4);
        assert!(z.is_zero());
        assert_eq!(z.dim(), 4);
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(Label::of(0.0), Label::Pos);
        assert_eq!(Label::of(-0.0), Label::Pos);
        assert_eq!(Label::of(-1e-300), Label::Neg);
    }

    #[test]
    fn ball_membership_uses_both_constraints() {
        let w = SearchBall::new(vec![1.0, 0.0], 0.5).unwrap();
        assert!(w.contains(&[1.0, 0.0]));
        assert!(w.contains(&[0.7, 0.0]));
        assert!(!w.contains(&[1.2, 0.0]));
        assert!(!w.contains(&[0.0, 0.0]));
        assert!(SearchBall::new(vec![0.0], 0.0).is_err());
        assert!(!SearchBall::new(vec![3.0, 0.0], 0.5).unwrap().is_nonempty());
    }

    #[test]
    fn band_with_zero_direction_is_everything() {
        let band = BandSpec::new(UnitVec::zero(2), 0.1).unwrap();
        assert!(band.contains(&[100.0, -100.0]));
        let band = BandSpec::new(UnitVec::basis(2, 0), 0.1).unwrap();
        assert!(band.contains(&[0.1, 50.0]));
        assert!(!band.contains(&[0.11, 0.0]));
    }
}
