//! Per-phase hyper-parameters: band widths, radii, hinge scales, noise
//! budgets, confidence splits and sample counts.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::profile::ConstantsProfile;

#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    /// 1-based phase index.
    pub k: usize,
    pub b: f64,
    pub r: f64,
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
    pub n: usize,
    /// `sqrt(b^2 + r^2)`
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSchedule {
    pub phases: Vec<Phase>,
    pub profile: ConstantsProfile,
    pub epsilon: f64,
    pub delta: f64,
    pub dim: usize,
}

impl PhaseSchedule {
    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn phase(&self, k: usize) -> &Phase {
        &self.phases[k - 1]
    }

    /// Radius of the ball that follows the last phase, `r_{K+1}`.
    pub fn radius_after(&self, k: usize) -> f64 {
        radius(&self.profile, k + 1)
    }

    pub fn total_samples(&self) -> usize {
        self.phases.iter().map(|p| p.n).sum()
    }
}

/// `ceil(log2(pi / (32 c1 eps)))`, at least one phase.
pub fn num_phases(epsilon: f64, c1: f64) -> Result<usize> {
    let raw = (PI / (32.0 * c1 * epsilon)).log2().ceil();
    if !raw.is_finite() {
        return Err(Error::invalid(
            "phase count",
            format!("log2 argument not finite for epsilon = {epsilon}"),
        ));
    }
    Ok(raw.max(1.0) as usize)
}

pub fn radius(profile: &ConstantsProfile, k: usize) -> f64 {
    if k <= 1 {
        1.0
    } else {
        profile.r_scale * (-(k as f64) - profile.r_shift).exp2()
    }
}

pub fn build_schedule(epsilon: f64, delta: f64, dim: usize, profile: &ConstantsProfile) -> Result<PhaseSchedule> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} is outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("{delta} is outside (0, 1)")));
    }
    if dim < 2 {
        return Err(Error::invalid("dimension", format!("{dim} must be at least 2")));
    }
    profile.validate()?;

    let k_total = num_phases(epsilon, profile.c1)?;
    let d = dim as f64;
    let phases = (1..=k_total)
        .map(|k| {
            let r = radius(profile, k);
            let b = profile.cbar * r;
            let tau = profile.c0 * profile.kappa * b.min(1.0 / 9.0);
            let delta_k = delta / ((k + 1) * (k + 2)) as f64;
            let z = (b * b + r * r).sqrt();
            let xi_raw = (profile.kappa * profile.kappa / 16.0
                * (1.0 + 4.0 * profile.big_c2.sqrt() * z / tau).powi(-2))
            .min(0.5);
            let xi = profile.clamp_xi(xi_raw);
            let log_term = (d * (k + 2) as f64 / (b * delta_k)).ln();
            let n = ((d / b) * log_term * log_term * profile.n_scale).ceil().max(1.0) as usize;
            Phase {
                k,
                b,
                r,
                tau,
                xi,
                delta: delta_k,
                n,
                z,
            }
        })
        .collect();

    Ok(PhaseSchedule {
        phases,
        profile: profile.clone(),
        epsilon,
        delta,
        dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_count_examples() {
        // pi / 0.32 = 9.817..., ceil(log2) = 4
        assert_eq!(num_phases(0.01, 1.0).unwrap(), 4);
        // pi / 3.2 < 1, clamped to a single phase
        assert_eq!(num_phases(0.1, 1.0).unwrap(), 1);
    }

    #[test]
    fn theory_radii_and_confidence_split() {
        let p = ConstantsProfile::theory();
        let s = build_schedule(0.01, 0.1, 10, &p).unwrap();
        assert_eq!(s.phase(1).r, 1.0);
        assert_eq!(s.phase(2).r, 0.00390625);
        assert!((s.phase(1).delta - 0.1 / 6.0).abs() < 1e-15);
        assert!((s.phase(1).delta - 0.016667).abs() < 1e-6);
        for ph in &s.phases {
            assert_eq!(ph.b / ph.r, p.cbar);
            assert!(ph.xi <= 0.5);
            if ph.b <= 1.0 / 9.0 {
                assert!(ph.xi >= p.c6 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn practical_radii() {
        let p = ConstantsProfile::practical();
        let s = build_schedule(0.01, 0.1, 5, &p).unwrap();
        assert_eq!(s.num_phases(), 4);
        assert_eq!(s.phase(1).r, 1.0);
        assert!((s.phase(3).r - PI / 8.0).abs() < 1e-15);
        assert!((s.phase(2).tau - 0.05 / 9.0).abs() < 1e-15);
        assert_eq!(s.phase(2).xi, 0.2);
    }

    #[test]
    fn sample_count_formula() {
        let p = ConstantsProfile::practical();
        let s = build_schedule(0.1, 0.1, 10, &p).unwrap();
        let ph = s.phase(1);
        let log_term: f64 = (10.0_f64 * 3.0 / (0.1 / 6.0)).ln();
        assert_eq!(ph.n, (10.0_f64 * log_term * log_term).ceil() as usize);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ConstantsProfile::practical();
        assert!(build_schedule(0.0, 0.1, 4, &p).is_err());
        assert!(build_schedule(1.5, 0.1, 4, &p).is_err());
        assert!(build_schedule(0.1, 1.0, 4, &p).is_err());
        assert!(build_schedule(0.1, 0.1, 1, &p).is_err());
    }
}
