//! Absolute constants that drive the phase schedule.
//!
//! The constants of the analysis are only known to exist, so two profiles are
//! provided: `theory`, which follows the closed-form schedule with a `cbar`
//! solved from the angle-halving condition, and `practical`, a runnable
//! desk-scale setting. Any constant can be overridden from a flat
//! `key = value` text block.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsProfile {
    pub name: String,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub big_c1: f64,
    pub big_c2: f64,
    pub cbar: f64,
    pub kappa: f64,
    /// Second-moment constant handed to soft outlier removal by the malicious
    /// learner. Must be `2*C2` or `4*C2`; the nasty learner always uses `4*C2`.
    pub c_soft: f64,
    /// `r_k = r_scale * 2^(-k - r_shift)` for `k >= 2`; `r_1 = 1`.
    pub r_scale: f64,
    pub r_shift: f64,
    /// Multiplier on the per-phase sample count.
    pub n_scale: f64,
    /// Clamp applied to the closed-form `xi_k`.
    pub xi_min: f64,
    pub xi_max: f64,
}

const KEYS: &[&str] = &[
    "profile", "c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "C1", "C2", "cbar", "kappa", "c_soft", "r_scale",
    "r_shift", "n_scale", "xi_min", "xi_max",
];

impl Default for ConstantsProfile {
    fn default() -> Self {
        ConstantsProfile::practical()
    }
}

impl ConstantsProfile {
    pub fn practical() -> Self {
        let mut p = ConstantsProfile {
            name: "practical".to_string(),
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 0.0,
            c6: 0.0,
            c7: 3.0,
            c8: 0.0,
            big_c1: 1.0,
            big_c2: 1.0,
            cbar: 1.0,
            kappa: 0.05,
            c_soft: 2.0,
            r_scale: PI,
            r_shift: 0.0,
            n_scale: 1.0,
            xi_min: 0.2,
            xi_max: 0.5,
        };
        p.refresh_derived(&[]);
        p
    }

    pub fn theory() -> Self {
        let mut p = ConstantsProfile {
            name: "theory".to_string(),
            c0: 0.1,
            c1: 1.0,
            c2: 4.0,
            c3: 1.0,
            c4: 1.0,
            c5: 0.0,
            c6: 0.0,
            c7: 3.0,
            c8: 0.0,
            big_c1: 0.0,
            big_c2: 2.0,
            cbar: 0.0,
            kappa: 0.0,
            c_soft: 4.0,
            r_scale: 1.0,
            r_shift: 6.0,
            n_scale: 1.0,
            xi_min: 0.0,
            xi_max: 0.5,
        };
        p.cbar = p.solve_cbar();
        p.kappa = (-p.cbar).exp();
        p.big_c1 = p.cbar / 16.0;
        p.refresh_derived(&[]);
        p
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "practical" => Ok(Self::practical()),
            "theory" => Ok(Self::theory()),
            other => Err(Error::Parse(format!("unknown profile `{other}`"))),
        }
    }

    pub fn is_theory(&self) -> bool {
        self.name == "theory"
    }

    /// The angle-contraction function whose root defines `cbar`.
    pub fn contraction_margin(&self, t: f64) -> f64 {
        self.c2 * (2.0 * t * (-t).exp() + self.c3 * PI / 4.0 * (-self.c4 * t / (4.0 * PI)).exp() + 16.0 * (-t).exp())
    }

    /// Smallest `t >= 8*pi/c4` with `contraction_margin(t) <= 2^-8 * pi`.
    fn solve_cbar(&self) -> f64 {
        let target = PI / 256.0;
        let mut lo = 8.0 * PI / self.c4;
        if self.contraction_margin(lo) <= target {
            return lo;
        }
        let mut hi = lo * 2.0;
        while self.contraction_margin(hi) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.contraction_margin(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Closed-form lower bound on every `xi_k` before clamping.
    pub fn xi_lower_closed_form(&self) -> f64 {
        let inner =
            1.0 + 4.0 / (self.c0 * self.kappa * self.cbar) * (self.big_c2 * self.cbar * self.cbar + self.big_c2).sqrt();
        (self.kappa * self.kappa / 16.0 * inner.powi(-2)).min(0.5)
    }

    pub fn clamp_xi(&self, xi: f64) -> f64 {
        xi.max(self.xi_min).min(self.xi_max)
    }

    fn refresh_derived(&mut self, explicit: &[&str]) {
        if !explicit.contains(&"c8") {
            self.c8 = (2.0 * self.c0)
                .min(2.0 * self.c0 / (9.0 * self.big_c1))
                .min(1.0 / self.big_c1);
        }
        if !explicit.contains(&"c6") {
            self.c6 = self.clamp_xi(self.xi_lower_closed_form());
        }
        if !explicit.contains(&"c5") {
            self.c5 = self.c8 / (2.0 * PI) * self.cbar * self.c1 * self.c6;
        }
    }

    /// The second-moment constant used by the nasty learner.
    pub fn nasty_soft_constant(&self) -> f64 {
        4.0 * self.big_c2
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c7", self.c7),
            ("c8", self.c8),
            ("C1", self.big_c1),
            ("C2", self.big_c2),
            ("cbar", self.cbar),
            ("kappa", self.kappa),
            ("c_soft", self.c_soft),
            ("r_scale", self.r_scale),
            ("n_scale", self.n_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "profile constant",
                    reason: format!("{name} = {v} must be positive and finite"),
                });
            }
        }
        if self.kappa > 1.0 {
            return Err(Error::invalid(
                "profile constant",
                format!("kappa = {} exceeds 1", self.kappa),
            ));
        }
        if !(0.0..0.5).contains(&self.xi_min) || !(0.0..=0.5).contains(&self.xi_max) || self.xi_min > self.xi_max {
            return Err(Error::invalid(
                "profile constant",
                format!(
                    "xi clamp [{}, {}] must satisfy 0 <= xi_min <= xi_max <= 1/2",
                    self.xi_min, self.xi_max
                ),
            ));
        }
        if !self.r_shift.is_finite() {
            return Err(Error::invalid("profile constant", "r_shift must be finite"));
        }
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !rel(self.c_soft, 2.0 * self.big_c2) && !rel(self.c_soft, 4.0 * self.big_c2) {
            return Err(Error::invalid(
                "profile constant",
                format!(
                    "c_soft = {} must equal 2*C2 or 4*C2 (C2 = {})",
                    self.c_soft, self.big_c2
                ),
            ));
        }
        if self.is_theory() && !rel(self.kappa, (-self.cbar).exp()) {
            return Err(Error::invalid(
                "profile constant",
                format!("theory profile requires kappa = exp(-cbar), got kappa = {}", self.kappa),
            ));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "c0" => self.c0,
            "c1" => self.c1,
            "c2" => self.c2,
            "c3" => self.c3,
            "c4" => self.c4,
            "c5" => self.c5,
            "c6" => self.c6,
            "c7" => self.c7,
            "c8" => self.c8,
            "C1" => self.big_c1,
            "C2" => self.big_c2,
            "cbar" => self.cbar,
            "kappa" => self.kappa,
            "c_soft" => self.c_soft,
            "r_scale" => self.r_scale,
            "r_shift" => self.r_shift,
            "n_scale" => self.n_scale,
            "xi_min" => self.xi_min,
            "xi_max" => self.xi_max,
            _ => return None,
        })
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c0" => &mut self.c0,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "c3" => &mut self.c3,
            "c4" => &mut self.c4,
            "c5" => &mut self.c5,
            "c6" => &mut self.c6,
            "c7" => &mut self.c7,
            "c8" => &mut self.c8,
            "C1" => &mut self.big_c1,
            "C2" => &mut self.big_c2,
            "cbar" => &mut self.cbar,
            "kappa" => &mut self.kappa,
            "c_soft" => &mut self.c_soft,
            "r_scale" => &mut self.r_scale,
            "r_shift" => &mut self.r_shift,
            "n_scale" => &mut self.n_scale,
            "xi_min" => &mut self.xi_min,
            "xi_max" => &mut self.xi_max,
            _ => return None,
        })
    }

    pub fn is_key(key: &str) -> bool {
        KEYS.contains(&key)
    }

    /// Applies `(key, value)` overrides. Derived constants (`c5`, `c6`, `c8`)
    /// are recomputed unless they are overridden themselves; under the theory
    /// profile `kappa` follows `cbar` unless set explicitly.
    pub fn with_overrides<'a, I>(mut self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut explicit: Vec<&str> = Vec::new();
        let mut rename: Option<String> = None;
        for (key, value) in pairs {
            let key = key.trim();
            let value = value.trim();
            if key == "profile" {
                rename = Some(value.to_string());
                continue;
            }
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("profile key `{key}`: `{value}` is not a number")))?;
            let known = KEYS.iter().copied().find(|k| *k == key);
            match (known, self.slot(key)) {
                (Some(k), Some(slot)) => {
                    *slot = v;
                    explicit.push(k);
                }
                _ => return Err(Error::Parse(format!("unknown profile key `{key}`"))),
            }
        }
        if let Some(name) = rename {
            self.name = name;
        }
        if self.is_theory() && explicit.contains(&"cbar") && !explicit.contains(&"kappa") {
            self.kappa = (-self.cbar).exp();
        }
        self.refresh_derived(&explicit);
        Ok(self)
    }

    /// Parses a `key = value` block (one per line, `#` comments) on top of
    /// the profile named by its `profile` key, or `practical` when absent.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let base = match pairs.iter().find(|(k, _)| k == "profile") {
            Some((_, name)) => Self::by_name(name)?,
            None => Self::practical(),
        };
        let base_name = base.name.clone();
        let p = base.with_overrides(
            pairs
                .iter()
                .filter(|(k, v)| !(k == "profile" && v.eq_ignore_ascii_case(&base_name)))
                .map(|(k, v)| (k.as_str(), v.as_str())),
        )?;
        Ok(p)
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "profile = {}", self.name);
        for key in &KEYS[1..] {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or(f64::NAN));
        }
        out
    }
}

/// Splits a flat `key = value` block into trimmed pairs.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn practical_defaults() {
        let p = ConstantsProfile::practical();
        assert_eq!(p.kappa, 0.05);
        assert_eq!(p.cbar, 1.0);
        assert_eq!(p.c_soft, 2.0 * p.big_c2);
        assert!((p.c8 - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(p.c6, 0.2);
        p.validate().unwrap();
    }

    #[test]
    fn theory_kappa_follows_cbar() {
        let p = ConstantsProfile::theory();
        p.validate().unwrap();
        assert!((p.kappa - (-p.cbar).exp()).abs() <= 1e-12 * p.kappa);
        assert!(p.cbar >= 8.0 * PI / p.c4);
        assert!(p.contraction_margin(p.cbar) <= PI / 256.0 * (1.0 + 1e-12));
        assert!(p.contraction_margin(p.cbar * 0.999) > PI / 256.0);
        assert!((p.big_c1 - p.cbar / 16.0).abs() < 1e-12);
    }

    #[test]
    fn c_soft_must_be_two_or_four_c2() {
        let p = ConstantsProfile::practical().with_overrides([("c_soft", "3")]).unwrap();
        assert!(p.validate().is_err());
        let p = ConstantsProfile::practical().with_overrides([("c_soft", "4")]).unwrap();
        p.validate().unwrap();
    }

    #[test]
    fn theory_rejects_inconsistent_kappa() {
        let p = ConstantsProfile::theory().with_overrides([("kappa", "0.5")]).unwrap();
        assert!(p.validate().is_err());
        let p = ConstantsProfile::theory().with_overrides([("cbar", "30")]).unwrap();
        p.validate().unwrap();
        assert_eq!(p.kappa, (-30.0f64).exp());
    }

    #[test]
    fn kv_block_with_comments() {
        let text = "# tuned\nprofile = practical\nkappa = 0.1 # looser\n\nn_scale=2\n";
        let p = ConstantsProfile::from_kv_str(text).unwrap();
        assert_eq!(p.kappa, 0.1);
        assert_eq!(p.n_scale, 2.0);
        assert!(ConstantsProfile::from_kv_str("bogus = 1").is_err());
        assert!(ConstantsProfile::from_kv_str("kappa = abc").is_err());
        assert!(ConstantsProfile::from_kv_str("kappa 0.1").is_err());
    }

    #[test]
    fn kv_round_trip() {
        for p in [ConstantsProfile::practical(), ConstantsProfile::theory()] {
            let back = ConstantsProfile::from_kv_str(&p.to_kv_string()).unwrap();
            assert_eq!(back, p);
        }
    }
}
