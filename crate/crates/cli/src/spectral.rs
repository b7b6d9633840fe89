use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use halfspace_core::dist::DistributionKind;
use halfspace_core::spectral::{chernoff_study, SpectralStudy};

use crate::args::SpectralArgs;
use crate::plots::{spectral_plot, SPECTRAL_SVG};
use crate::run::write;
use crate::settings::{render_echo, usage, FileLayer, Output};
use crate::table::Table;

pub fn resolve_study(args: &SpectralArgs, file: &mut FileLayer) -> Result<SpectralStudy> {
    let file_dist = file.take("dist");
    let file_dims: Vec<usize> = file.take_list("dims", ',')?;
    let file_factors: Vec<f64> = file.take_list("n_factors", ',')?;
    let file_b = file.take_parsed("b")?;
    let file_r = file.take_parsed("r")?;
    let file_trials = file.take_parsed("trials")?;
    let file_seed = file.take_parsed("seed")?;
    let big_c2 = file.take_parsed("C2")?.unwrap_or(1.0);
    let kind: DistributionKind = match args.dist.clone().or(file_dist) {
        Some(s) => s.parse().map_err(|e| usage(format!("dist: {e}")))?,
        None => DistributionKind::StandardGaussian,
    };
    let or_default = |flag: &Vec<usize>, from_file: Vec<usize>, default: &[usize]| {
        if !flag.is_empty() {
            flag.clone()
        } else if !from_file.is_empty() {
            from_file
        } else {
            default.to_vec()
        }
    };
    let n_factors = if !args.n_factors.is_empty() {
        args.n_factors.clone()
    } else if !file_factors.is_empty() {
        file_factors
    } else {
        vec![20.0]
    };
    Ok(SpectralStudy {
        kind,
        dims: or_default(&args.dims, file_dims, &[10, 50]),
        n_factors,
        b: args.b.or(file_b).unwrap_or(0.1),
        r: args.r.or(file_r).unwrap_or(0.1),
        trials: args.trials.or(file_trials).unwrap_or(40),
        seed: args.seed.or(file_seed).unwrap_or(0),
        big_c2,
    })
}

pub fn cmd_spectral(args: &SpectralArgs) -> Result<()> {
    let mut file = FileLayer::load(args.common.config.as_deref())?;
    let output = Output::resolve(&args.common, &mut file)?;
    let study = resolve_study(args, &mut file)?;
    let config_path = file.path().map(|p| p.display().to_string());
    file.finish()?;
    study.validate()?;

    let table = chernoff_study(&study)?;
    let csv = table.to_csv();

    let list = |v: Vec<String>| v.join(",");
    let echo = vec![
        ("command".to_string(), "spectral".to_string()),
        ("config".into(), config_path.unwrap_or_else(|| "none".into())),
        ("out".into(), output.dir.display().to_string()),
        ("format".into(), output.format.token().into()),
        ("dist".into(), study.kind.token().into()),
        ("dims".into(), list(study.dims.iter().map(|d| d.to_string()).collect())),
        (
            "n_factors".into(),
            list(study.n_factors.iter().map(|f| f.to_string()).collect()),
        ),
        ("b".into(), study.b.to_string()),
        ("r".into(), study.r.to_string()),
        ("trials".into(), study.trials.to_string()),
        ("seed".into(), study.seed.to_string()),
        ("C2".into(), study.big_c2.to_string()),
    ];
    let mut summary = render_echo(&echo);
    summary.push_str("# result\n");
    let _ = writeln!(summary, "rescaledBound={}", table.rescaled_bound);
    for c in &table.cells {
        let _ = writeln!(summary, "exceedance[d={},nFactor={}]={}", c.d, c.n_factor, c.exceedance);
        let _ = writeln!(summary, "population[d={},nFactor={}]={}", c.d, c.n_factor, c.population);
        let _ = writeln!(summary, "n[d={},nFactor={}]={}", c.d, c.n_factor, c.n);
    }

    fs::create_dir_all(&output.dir).with_context(|| format!("creating {}", output.dir.display()))?;
    if output.format.csv() {
        write(&output.dir.join("spectral.csv"), &csv)?;
    }
    if output.format.svg() {
        write(&output.dir.join(SPECTRAL_SVG), &spectral_plot(&Table::parse(&csv)?)?)?;
    }
    write(&output.dir.join("summary.txt"), &summary)?;
    for c in &table.cells {
        println!("d={} nFactor={} n={} exceedance={}", c.d, c.n_factor, c.n, c.exceedance);
    }
    Ok(())
}
