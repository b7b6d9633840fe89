use std::fs;
use std::io;

use anyhow::{Context, Result};

use crate::args::ReportArgs;
use crate::plots::{spectral_plot, sweep_error_plot, sweep_min_n_plot, SPECTRAL_SVG, SWEEP_ERROR_SVG, SWEEP_MIN_N_SVG};
use crate::run::write;
use crate::table::Table;

/// Re-renders plots from whichever tables exist in the input directory.
pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| args.input.clone());
    let sweep = args.input.join("sweep.csv");
    let spectral = args.input.join("spectral.csv");
    if !sweep.exists() && !spectral.exists() {
        return Err(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no sweep.csv or spectral.csv in {}", args.input.display()),
        )
        .into());
    }
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if sweep.exists() {
        let text = fs::read_to_string(&sweep).with_context(|| format!("reading {}", sweep.display()))?;
        let table = Table::parse(&text).with_context(|| format!("parsing {}", sweep.display()))?;
        write(&out.join(SWEEP_ERROR_SVG), &sweep_error_plot(&table)?)?;
        write(&out.join(SWEEP_MIN_N_SVG), &sweep_min_n_plot(&table)?)?;
        println!("wrote {SWEEP_ERROR_SVG} and {SWEEP_MIN_N_SVG}");
    }
    if spectral.exists() {
        let text = fs::read_to_string(&spectral).with_context(|| format!("reading {}", spectral.display()))?;
        let table = Table::parse(&text).with_context(|| format!("parsing {}", spectral.display()))?;
        write(&out.join(SPECTRAL_SVG), &spectral_plot(&table)?)?;
        println!("wrote {SPECTRAL_SVG}");
    }
    Ok(())
}
