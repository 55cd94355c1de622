use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cvrp_core::diagnosis::{difference_trace, discrimination_matrix};
use cvrp_core::experiment::{
    emit_figure_data, ingest_pattern, load_results, run_matrix, write_figure_csv, write_pattern,
    FigureId, MatrixConfig, ResultRow, RotationMode, Scenario,
};
use cvrp_core::metrics::{cvrp_trace, trp_mw};
use cvrp_core::pattern::EirpPattern;
use cvrp_core::uncertainty::{monte_carlo_cvrp, CiPoint, CvrpCI, RippleSpec, DEFAULT_DRAWS};
use cvrp_core::units::{mw_to_dbm, mw_to_dbm_floored, DEFAULT_DBM_FLOOR};

mod format;

use format::sig6;

/// Constrained-View Radiated Power toolkit for phased-array failure diagnosis.
#[derive(Parser)]
#[command(name = "cvrp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the EIRP pattern of one scenario and write it as a pattern file.
    Synth {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output pattern file.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the CVRP sweep of a pattern file or a scenario, with CIs when sigma > 0.
    Cvrp {
        /// Read the pattern from this file instead of synthesizing it.
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run a scenario matrix and write one CSV per scenario plus a manifest.
    RunMatrix {
        /// TOML config; the full study matrix when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo draws (overrides the config).
        #[arg(long)]
        draws: Option<usize>,
        #[command(flatten)]
        filter: MatrixFilter,
    },
    /// Report which failure cases have disjoint CVRP CIs, from a results directory.
    Diagnose {
        #[arg(short, long)]
        results: PathBuf,
        #[arg(long)]
        res: f64,
        #[arg(long, default_value_t = 0.0)]
        steer: f64,
        #[arg(long, value_enum)]
        rotation: Option<RotationArg>,
        #[arg(long, default_value_t = 0.0)]
        dep: f64,
        #[arg(long)]
        sigma: f64,
    },
    /// Write long-format plot data for one study figure (4 to 8).
    FigureData {
        #[arg(short, long)]
        results: PathBuf,
        #[arg(short, long)]
        figure: u8,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Validate an external pattern file and evaluate it, optionally against a reference pattern.
    Ingest {
        pattern: PathBuf,
        /// Golden-device pattern on the same grid.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationArg {
    Physical,
    Postproc,
}

impl From<RotationArg> for RotationMode {
    fn from(r: RotationArg) -> Self {
        match r {
            RotationArg::Physical => RotationMode::Physical,
            RotationArg::Postproc => RotationMode::Postproc,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Angular grid step in degrees.
    #[arg(long, default_value_t = 5.0)]
    res: f64,
    /// Failed element indices, e.g. 7,9.
    #[arg(long, value_delimiter = ',')]
    fe: Vec<usize>,
    /// Steering angle from +z; 0 is broadside.
    #[arg(long, default_value_t = 0.0)]
    steer: f64,
    /// Alignment of a steered beam onto +z.
    #[arg(long, value_enum)]
    rotation: Option<RotationArg>,
    #[arg(long, default_value_t = 0.0)]
    dep: f64,
    /// Ripple severity in dB.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    /// Accept values outside the study sets.
    #[arg(long)]
    extension: bool,
}

impl ScenarioArgs {
    fn scenario(&self) -> Scenario {
        Scenario {
            failed: self.fe.clone(),
            res_deg: self.res,
            steer_deg: self.steer,
            rotation: self.rotation.map(Into::into),
            depointing_deg: self.dep,
            sigma_db: self.sigma,
            seed: self.seed,
            draws: self.draws,
            extension: self.extension,
        }
    }
}

/// Restricts the study matrix axes. Each flag takes a comma-separated list.
#[derive(Args)]
struct MatrixFilter {
    #[arg(long, value_delimiter = ',')]
    res: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    steer: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    dep: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    /// Failure sets separated by ';', elements by ',', e.g. "0;15;7,9".
    #[arg(long)]
    fe: Option<String>,
    /// Skip the physical-rotation comparison runs.
    #[arg(long)]
    no_physical: bool,
}

impl MatrixFilter {
    fn apply(&self, cfg: &mut MatrixConfig) -> Result<()> {
        let m = &mut cfg.matrix;
        for (axis, values) in [
            (&mut m.res_deg, &self.res),
            (&mut m.steer_deg, &self.steer),
            (&mut m.depointing_deg, &self.dep),
            (&mut m.sigma_db, &self.sigma),
        ] {
            if !values.is_empty() {
                *axis = values.clone();
            }
        }
        if let Some(fe) = &self.fe {
            m.failed = fe.split(';').map(parse_failure_set).collect::<Result<_>>()?;
        }
        if self.no_physical {
            m.physical_rotation = false;
        }
        Ok(())
    }

    fn is_empty(&self) -> bool {
        self.res.is_empty()
            && self.steer.is_empty()
            && self.dep.is_empty()
            && self.sigma.is_empty()
            && self.fe.is_none()
            && !self.no_physical
    }
}

fn parse_failure_set(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() || s == "0" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|i| i.trim().parse::<usize>().with_context(|| format!("bad element index '{i}'")))
        .collect()
}

fn dbm(mw: f64) -> String {
    sig6(mw_to_dbm_floored(mw, DEFAULT_DBM_FLOOR))
}

fn print_trace(p: &EirpPattern, ripple: Option<RippleSpec>) {
    match ripple {
        None => {
            println!("theta_fov_deg,cvrp_mw,cvrp_dbm");
            for (t, v) in cvrp_trace(p).iter() {
                println!("{},{},{}", sig6(t), sig6(v), dbm(v));
            }
        }
        Some(spec) => {
            println!("theta_fov_deg,cvrp_mean_mw,sigma_hat_mw,ci_lower_dbm,cvrp_mean_dbm,ci_upper_dbm");
            for pt in &monte_carlo_cvrp(p, &spec).points {
                println!(
                    "{},{},{},{},{},{}",
                    sig6(pt.theta_fov_deg),
                    sig6(pt.mean_mw),
                    sig6(pt.sigma_hat_mw),
                    dbm(pt.lower_mw),
                    dbm(pt.mean_mw),
                    dbm(pt.upper_mw)
                );
            }
        }
    }
}

fn synth(args: &ScenarioArgs, out: &Path) -> Result<()> {
    let s = args.scenario();
    let p = s.pattern()?;
    write_pattern(&p, out)?;
    let (theta, phi) = p.argmax();
    println!("scenario {}", s.id());
    println!("trp_dbm {}", sig6(p.trp_dbm()));
    println!("peak_eirp_dbm {} at theta {} phi {}", dbm(p.values().fold(0.0, |a, &b| f64::max(a, b))), sig6(theta), sig6(phi));
    println!("wrote {}", out.display());
    Ok(())
}

fn cvrp(pattern: Option<&Path>, args: &ScenarioArgs) -> Result<()> {
    let p = match pattern {
        Some(path) => ingest_pattern(path)?,
        None => args.scenario().pattern()?,
    };
    let ripple = (args.sigma > 0.0)
        .then(|| RippleSpec::new(args.sigma, args.draws, args.seed))
        .transpose()?;
    print_trace(&p, ripple);
    Ok(())
}

fn run(config: Option<&Path>, out: &Path, seed: Option<u64>, draws: Option<usize>, filter: &MatrixFilter) -> Result<()> {
    let mut cfg = match config {
        Some(path) => MatrixConfig::load(path)?,
        None => MatrixConfig::default(),
    };
    if !filter.is_empty() {
        if cfg.scenarios.is_some() {
            bail!("matrix filters cannot be combined with an explicit scenario list");
        }
        filter.apply(&mut cfg)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(draws) = draws {
        cfg.draws = draws;
    }
    let manifest = run_matrix(&cfg, out)?;
    println!(
        "{} scenarios written to {} in {} s",
        manifest.files.len(),
        out.display(),
        sig6(manifest.wall_time_s)
    );
    Ok(())
}

fn ci_from_rows(rows: &[ResultRow]) -> CvrpCI {
    CvrpCI {
        points: rows
            .iter()
            .map(|r| CiPoint::new(r.theta_fov_deg, r.cvrp_mean_mw, r.sigma_hat_mw))
            .collect(),
    }
}

fn fe_label(failed: &[usize]) -> String {
    if failed.is_empty() {
        "FE 0".into()
    } else {
        format!("FE {}", failed.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
    }
}

fn diagnose(results: &Path, res: f64, steer: f64, rotation: Option<RotationArg>, dep: f64, sigma: f64) -> Result<()> {
    let set = load_results(results)?;
    let wanted_rotation = (steer != 0.0).then(|| rotation.map(Into::into).unwrap_or(RotationMode::Postproc));
    let mut cases: BTreeMap<Vec<usize>, &[ResultRow]> = BTreeMap::new();
    for (s, rows) in &set.entries {
        if s.res_deg == res
            && s.steer_deg == steer
            && s.rotation_mode() == wanted_rotation
            && s.depointing_deg == dep
            && s.sigma_db == sigma
        {
            let mut key = s.failed.clone();
            key.sort_unstable();
            cases.insert(key, rows);
        }
    }
    if cases.len() < 2 {
        bail!("found {} matching failure cases in {}; need at least two", cases.len(), results.display());
    }
    let labelled: Vec<(String, CvrpCI)> = cases.iter().map(|(fe, rows)| (fe_label(fe), ci_from_rows(rows))).collect();
    let m = discrimination_matrix(&labelled)?;

    println!("case,theta_fov_deg,mean_diff_db,lower_diff_db,upper_diff_db");
    for (fe, rows) in &cases {
        for r in rows.iter() {
            let lower = if r.ci_lower_dbm > DEFAULT_DBM_FLOOR {
                sig6(r.ci_lower_dbm - r.reference_dbm)
            } else {
                "below_floor".into()
            };
            println!(
                "{},{},{},{},{}",
                fe_label(fe),
                sig6(r.theta_fov_deg),
                sig6(r.reference_diff_db),
                lower,
                sig6(r.ci_upper_dbm - r.reference_dbm)
            );
        }
    }
    println!();
    println!("pair,distinguishable_theta_fov_deg");
    for (a, b) in m.pairs() {
        let at: Vec<String> = m
            .theta_fov_deg
            .iter()
            .zip(m.pair(a, b))
            .filter(|(_, d)| **d)
            .map(|(t, _)| sig6(*t))
            .collect();
        let list = if at.is_empty() { "none".to_string() } else { at.join(" ") };
        println!("{} vs {},{}", m.labels[a], m.labels[b], list);
    }
    Ok(())
}

fn figure(results: &Path, figure: u8, out: &Path) -> Result<()> {
    let fig = FigureId::from_number(figure)?;
    let rows = emit_figure_data(&load_results(results)?, fig)?;
    write_figure_csv(&rows, out)?;
    println!("figure {fig}: {} rows written to {}", rows.len(), out.display());
    Ok(())
}

fn ingest(pattern: &Path, reference: Option<&Path>, sigma: f64, draws: usize, seed: u64) -> Result<()> {
    let p = ingest_pattern(pattern)?;
    let g = p.grid();
    println!(
        "grid {} x {} deg, {} nodes; trp_dbm {}; quadrature trp_dbm {}",
        sig6(g.dtheta_deg()),
        sig6(g.dphi_deg()),
        g.len(),
        sig6(p.trp_dbm()),
        dbm(trp_mw(&p))
    );
    let ripple = (sigma > 0.0).then(|| RippleSpec::new(sigma, draws, seed)).transpose()?;
    let Some(reference) = reference else {
        print_trace(&p, ripple);
        return Ok(());
    };
    let r = ingest_pattern(reference)?;
    if r.grid() != p.grid() {
        bail!("reference {} is on a different grid", reference.display());
    }
    let ci = match ripple {
        Some(spec) => monte_carlo_cvrp(&p, &spec),
        None => CvrpCI::exact(&cvrp_trace(&p)),
    };
    let d = difference_trace(&ci, &cvrp_trace(&r))?;
    println!("theta_fov_deg,mean_diff_db,lower_diff_db,upper_diff_db");
    for pt in &d.points {
        let lower = if pt.lower_below_floor { "below_floor".into() } else { sig6(pt.lower_diff_db) };
        println!("{},{},{},{}", sig6(pt.theta_fov_deg), sig6(pt.mean_diff_db), lower, sig6(pt.upper_diff_db));
    }
    let below = ci.points.iter().filter(|pt| mw_to_dbm(pt.lower_mw).is_none()).count();
    if below > 0 {
        eprintln!("note: {below} CI lower bounds are not positive");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth { scenario, out } => synth(scenario, out),
        Command::Cvrp { pattern, scenario } => cvrp(pattern.as_deref(), scenario),
        Command::RunMatrix {
            config,
            out,
            seed,
            draws,
            filter,
        } => run(config.as_deref(), out, *seed, *draws, filter),
        Command::Diagnose {
            results,
            res,
            steer,
            rotation,
            dep,
            sigma,
        } => diagnose(results, *res, *steer, *rotation, *dep, *sigma),
        Command::FigureData { results, figure: f, out } => figure(results, *f, out),
        Command::Ingest {
            pattern,
            reference,
            sigma,
            draws,
            seed,
        } => ingest(pattern, reference.as_deref(), *sigma, *draws, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
