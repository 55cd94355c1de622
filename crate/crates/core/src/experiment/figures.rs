//! Long-format plot data for the study figures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::{write_atomic, ResultRow, ResultSet};
use super::scenario::{RotationMode, Scenario, STUDY_FAILURE_SETS, STUDY_RESOLUTIONS_DEG};
use crate::error::{Error, Result};
use crate::units::DEFAULT_DBM_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Post-processing minus physical rotation, steered, no ripple.
    RotationError,
    /// FE 0 / FE 15 with and without 3° depointing, σ = 1 dB, 5° grid.
    Depointing,
    /// Same data as [`FigureId::Depointing`] from θ_FoV = 10°.
    DepointingZoom,
    /// All failure cases, steered, σ = 2 dB, 5° grid.
    SteeredCoarse,
    /// All failure cases, broadside, σ = 2 dB, 1.5° grid.
    BroadsideFine,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::RotationError,
        FigureId::Depointing,
        FigureId::DepointingZoom,
        FigureId::SteeredCoarse,
        FigureId::BroadsideFine,
    ];

    pub fn number(self) -> u8 {
        match self {
            FigureId::RotationError => 4,
            FigureId::Depointing => 5,
            FigureId::DepointingZoom => 6,
            FigureId::SteeredCoarse => 7,
            FigureId::BroadsideFine => 8,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.number() == n)
            .ok_or_else(|| Error::validation(format!("unknown figure {n}; expected 4 to 8")))
    }

    fn min_theta_fov_deg(self) -> f64 {
        match self {
            FigureId::RotationError | FigureId::Depointing => 0.0,
            _ => 10.0,
        }
    }

    /// Scenarios whose rows the figure is drawn from.
    pub fn scenarios(self) -> Vec<Scenario> {
        let case = |failed: &[usize], res: f64, steered: bool, dep: f64, sigma: f64, mode: RotationMode| Scenario {
            failed: failed.to_vec(),
            steer_deg: if steered { 45.0 } else { 0.0 },
            rotation: steered.then_some(mode),
            depointing_deg: dep,
            sigma_db: sigma,
            ..Scenario::healthy(res)
        };
        let post = RotationMode::Postproc;
        match self {
            FigureId::RotationError => STUDY_RESOLUTIONS_DEG
                .iter()
                .flat_map(|&res| {
                    STUDY_FAILURE_SETS.iter().flat_map(move |fe| {
                        [post, RotationMode::Physical].map(|m| case(fe, res, true, 0.0, 0.0, m))
                    })
                })
                .collect(),
            FigureId::Depointing | FigureId::DepointingZoom => [&[][..], &[15]]
                .iter()
                .flat_map(|fe| [0.0, 3.0].map(|dep| case(fe, 5.0, false, dep, 1.0, post)))
                .collect(),
            FigureId::SteeredCoarse => STUDY_FAILURE_SETS
                .iter()
                .map(|fe| case(fe, 5.0, true, 0.0, 2.0, post))
                .collect(),
            FigureId::BroadsideFine => STUDY_FAILURE_SETS
                .iter()
                .map(|fe| case(fe, 1.5, false, 0.0, 2.0, post))
                .collect(),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .trim()
            .trim_start_matches("fig")
            .parse::<u8>()
            .map_err(|_| Error::validation(format!("unknown figure '{s}'")))?;
        Self::from_number(n)
    }
}

/// One plotted point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub trace: String,
    /// `mean`, `upper` or `lower` for CI traces; `diff` for the rotation error.
    pub bound: String,
    pub theta_fov_deg: f64,
    pub value_db: f64,
}

fn label(s: &Scenario) -> String {
    let fe = if s.failed.is_empty() {
        "0".to_string()
    } else {
        s.failed.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
    };
    format!("FE: {fe}, RES: {}, DEP: {}", s.res_deg, s.depointing_deg)
}

fn rows_for<'a>(results: &'a ResultSet, s: &Scenario) -> Result<&'a [ResultRow]> {
    let id = s.id();
    results.get(&id).ok_or(Error::MissingScenario(id))
}

/// Builds the plot data for `fig` from previously computed results.
pub fn emit_figure_data(results: &ResultSet, fig: FigureId) -> Result<Vec<FigureRow>> {
    let scenarios = fig.scenarios();
    let keep = |t: f64| t >= fig.min_theta_fov_deg();
    let mut out = Vec::new();
    if fig == FigureId::RotationError {
        for pair in scenarios.chunks(2) {
            let post = rows_for(results, &pair[0])?;
            let phys = rows_for(results, &pair[1])?;
            for (a, b) in post.iter().zip(phys).filter(|(a, _)| keep(a.theta_fov_deg)) {
                out.push(FigureRow {
                    trace: label(&pair[0]),
                    bound: "diff".into(),
                    theta_fov_deg: a.theta_fov_deg,
                    value_db: a.cvrp_mean_dbm - b.cvrp_mean_dbm,
                });
            }
        }
        return Ok(out);
    }
    for s in &scenarios {
        let trace = label(s);
        for r in rows_for(results, s)?.iter().filter(|r| keep(r.theta_fov_deg)) {
            let mut push = |bound: &str, dbm: f64| {
                out.push(FigureRow {
                    trace: trace.clone(),
                    bound: bound.into(),
                    theta_fov_deg: r.theta_fov_deg,
                    value_db: dbm - r.reference_dbm,
                })
            };
            push("upper", r.ci_upper_dbm);
            if r.ci_lower_dbm > DEFAULT_DBM_FLOOR {
                push("lower", r.ci_lower_dbm);
            }
            push("mean", r.cvrp_mean_dbm);
        }
    }
    Ok(out)
}

/// Writes figure rows as CSV (`trace,bound,theta_fov_deg,value_db`).
pub fn write_figure_csv(rows: &[FigureRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trace", "bound", "theta_fov_deg", "value_db"])?;
    for r in rows {
        w.write_record([
            r.trace.clone(),
            r.bound.clone(),
            r.theta_fov_deg.to_string(),
            r.value_db.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Validation(format!("csv buffer: {e}")))?;
    write_atomic(path, &bytes)
}
