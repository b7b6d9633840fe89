//! Angles between directions and Euclidean projection onto a search ball.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::types::{SearchBall, UnitVec, GEOM_TOL};

/// Angle in `[0, pi]` between two unit directions.
pub fn angle(u: &UnitVec, v: &UnitVec) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    if u.is_zero() || v.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(dot(u.as_slice(), v.as_slice()).clamp(-1.0, 1.0).acos())
}

fn project_ball(p: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let diff: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
    let dist = norm(&diff);
    if dist <= radius {
        return p.to_vec();
    }
    let s = radius / dist;
    center.iter().zip(&diff).map(|(c, d)| c + s * d).collect()
}

fn in_unit(w: &[f64]) -> bool {
    norm(w) <= 1.0 + GEOM_TOL
}

fn in_local(w: &[f64], ball: &SearchBall) -> bool {
    crate::linalg::distance(w, ball.center()) <= ball.radius() + GEOM_TOL
}

/// Euclidean projection of `p` onto `{|w| <= 1} ∩ {|w - center| <= radius}`.
///
/// The single-ball projections are tried first. When neither is feasible both
/// constraints are active at the solution, which then lies on the
/// intersection of the two spheres: a (d-2)-sphere centered on the line
/// through the origin and `center`.
pub fn project_to_ball_pair(p: &[f64], ball: &SearchBall) -> Result<Vec<f64>> {
    if p.len() != ball.dim() {
        return Err(Error::DimensionMismatch {
            expected: ball.dim(),
            found: p.len(),
        });
    }
    let c = ball.center();
    let r = ball.radius();
    let c_norm = norm(c);
    if c_norm > 1.0 + r + GEOM_TOL {
        return Err(Error::EmptyIntersection {
            center_norm: c_norm,
            radius: r,
        });
    }
    if in_unit(p) && in_local(p, ball) {
        return Ok(p.to_vec());
    }
    let onto_unit = project_ball(p, &vec![0.0; p.len()], 1.0);
    if in_local(&onto_unit, ball) {
        return Ok(onto_unit);
    }
    let onto_local = project_ball(p, c, r);
    if in_unit(&onto_local) {
        return Ok(onto_local);
    }

    // Both spheres active: |w| = 1 and |w - c| = r give c.w = (1 + |c|^2 - r^2) / 2.
    let c_sq = c_norm * c_norm;
    let alpha = ((1.0 + c_sq - r * r) / (2.0 * c_sq)).clamp(-1.0 / c_norm, 1.0 / c_norm);
    let rho = (1.0 - alpha * alpha * c_sq).max(0.0).sqrt();
    let along = dot(p, c) / c_sq;
    let mut perp: Vec<f64> = p.iter().zip(c).map(|(pi, ci)| pi - along * ci).collect();
    let perp_norm = norm(&perp);
    if perp_norm <= 1e-300 {
        // p lies on the axis: every point of the circle is equidistant.
        perp = orthogonal_to(c);
    } else {
        perp.iter_mut().for_each(|v| *v /= perp_norm);
    }
    Ok(c.iter().zip(&perp).map(|(ci, ei)| alpha * ci + rho * ei).collect())
}

/// Some unit vector orthogonal to nonzero `c`.
fn orthogonal_to(c: &[f64]) -> Vec<f64> {
    let axis = c
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut e = vec![0.0; c.len()];
    e[axis] = 1.0;
    let proj = dot(&e, c) / dot(c, c);
    for (ei, ci) in e.iter_mut().zip(c) {
        *ei -= proj * ci;
    }
    let n = norm(&e);
    e.iter_mut().for_each(|v| *v /= n);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(d: usize, i: usize) -> UnitVec {
        UnitVec::basis(d, i)
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle(&e(3, 0), &e(3, 0)).unwrap(), 0.0);
        assert!((angle(&e(3, 0), &e(3, 0).neg()).unwrap() - PI).abs() < 1e-15);
        assert!((angle(&e(3, 0), &e(3, 1)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(angle(&UnitVec::zero(3), &e(3, 0)), Err(Error::ZeroVector)));
    }

    #[test]
    fn projection_examples() {
        let w = SearchBall::new(vec![1.0, 0.0], 0.5).unwrap();
        let a = project_to_ball_pair(&[2.0, 0.0], &w).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12 && a[1].abs() < 1e-12);

        let inside = [0.8, 0.1];
        assert_eq!(project_to_ball_pair(&inside, &w).unwrap(), inside.to_vec());

        // Only the local ball is active: e1 + 0.5 * (-1, 2)/sqrt(5).
        let b = project_to_ball_pair(&[0.0, 2.0], &w).unwrap();
        let s5 = 5f64.sqrt();
        assert!((b[0] - (1.0 - 0.5 / s5)).abs() < 1e-12);
        assert!((b[1] - 1.0 / s5).abs() < 1e-12);
        assert!((b[0] - 0.77639).abs() < 1e-5 && (b[1] - 0.44721).abs() < 1e-5);
        assert!((norm(&b) - 0.896).abs() < 1e-3);
    }

    #[test]
    fn projection_with_both_constraints_active() {
        // Point far along e2 with a thin lens around e1: both spheres bind.
        let w = SearchBall::new(vec![1.0, 0.0], 0.3).unwrap();
        let q = project_to_ball_pair(&[0.9, 5.0], &w).unwrap();
        assert!((norm(&q) - 1.0).abs() < 1e-9);
        assert!((crate::linalg::distance(&q, &[1.0, 0.0]) - 0.3).abs() < 1e-9);
        assert!(q[1] > 0.0);
    }

    #[test]
    fn empty_intersection_rejected() {
        let w = SearchBall::new(vec![2.0, 0.0], 0.5).unwrap();
        assert!(matches!(
            project_to_ball_pair(&[0.0, 0.0], &w),
            Err(Error::EmptyIntersection { .. })
        ));
    }

    #[test]
    fn zero_center_is_concentric() {
        let w = SearchBall::new(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let q = project_to_ball_pair(&[3.0, 4.0, 0.0], &w).unwrap();
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);
    }
}
