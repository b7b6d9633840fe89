//! Per-run accounting and its CSV / key=value renderings.

use std::fmt::Write as _;

use crate::learner::Mode;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    pub k: usize,
    pub b: f64,
    pub r: f64,
    pub tau: f64,
    pub xi: f64,
    /// `N_k`
    pub requested: usize,
    /// `|T_k|`
    pub band_size: usize,
    pub labels_revealed: usize,
    pub cuts: usize,
    /// `sum q / |T|`
    pub mass_fraction: f64,
    pub certified_bound: f64,
    pub hinge_loss: f64,
    pub hinge_iterations: usize,
    pub v_norm: f64,
    /// `v_k` was numerically zero and `w_{k-1}` was kept.
    pub degenerate: bool,
}

impl PhaseReport {
    pub const CSV_HEADER: &'static str =
        "phase,b,r,tau,xi,requested,bandSize,labels,cuts,massFraction,certifiedBound,hingeLoss,hingeIterations,vNorm,degenerate";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.b,
            self.r,
            self.tau,
            self.xi,
            self.requested,
            self.band_size,
            self.labels_revealed,
            self.cuts,
            self.mass_fraction,
            self.certified_bound,
            self.hinge_loss,
            self.hinge_iterations,
            self.v_norm,
            u8::from(self.degenerate)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub profile: String,
    pub seed: u64,
    pub phases: Vec<PhaseReport>,
    pub instance_calls: u64,
    pub label_calls: u64,
    pub batch_calls: u64,
    pub w_tilde: Vec<f64>,
}

impl RunReport {
    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn total_band_size(&self) -> usize {
        self.phases.iter().map(|p| p.band_size).sum()
    }

    pub fn any_degenerate(&self) -> bool {
        self.phases.iter().any(|p| p.degenerate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(PhaseReport::CSV_HEADER);
        out.push('\n');
        for p in &self.phases {
            out.push_str(&p.csv_line());
            out.push('\n');
        }
        out
    }

    /// Flat `key=value` lines.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode={}", self.mode.token());
        let _ = writeln!(out, "dim={}", self.dim);
        let _ = writeln!(out, "epsilon={}", self.epsilon);
        let _ = writeln!(out, "delta={}", self.delta);
        let _ = writeln!(out, "profile={}", self.profile);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "phases={}", self.phases.len());
        let _ = writeln!(out, "instanceCalls={}", self.instance_calls);
        let _ = writeln!(out, "labelCalls={}", self.label_calls);
        let _ = writeln!(out, "batchCalls={}", self.batch_calls);
        let _ = writeln!(out, "degenerate={}", self.any_degenerate());
        let coords: Vec<String> = self.w_tilde.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "wTilde={}", coords.join(" "));
        out
    }
}
