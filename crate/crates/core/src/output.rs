//! CSV trajectories, the JSON run summary, and the `run` driver behind the
//! command line.
//!
//! CSV files carry a header row and one row per node `k = 1..=n`; node 0 is
//! left out because the state is singular there. Floats are written in the
//! shorter of plain and exponent notation, both of which are the shortest
//! digit string that parses back to the same `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjoint::{terminal_condition_residual, CostateTrajectory};
use crate::error::{Error, Result};
use crate::forward::{solve_uncontrolled, ControlSignal, StateTrajectory};
use crate::scenario::Scenario;
use crate::sweep::{pmp_pointwise_check, sweep, zero_control_cost, OptimalSolution};

/// Header plus numeric rows, the in-memory form of every CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn block_header(
    prefix: &str,
    first: usize,
    blocks: usize,
    dim: usize,
) -> impl Iterator<Item = String> + '_ {
    (first..first + blocks).flat_map(move |i| (1..=dim).map(move |r| format!("{prefix}_{i}_{r}")))
}

impl Table {
    /// `t,x_0_1..x_N_d`, or `t,x_1_1..` for a leaderless trajectory.
    pub fn from_state(traj: &StateTrajectory) -> Result<Self> {
        let d = traj.dim();
        let blocks = traj.width() / d;
        let first = usize::from(!traj.with_leader());
        let header = std::iter::once("t".to_string())
            .chain(block_header("x", first, blocks, d))
            .collect();
        let grid = traj.grid();
        let rows = (1..=grid.intervals())
            .map(|k| {
                let mut row = vec![grid.node(k)];
                row.extend(traj.sample(k)?);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    /// `t,u_1..u_d`.
    pub fn from_control(control: &ControlSignal) -> Self {
        let header = std::iter::once("t".to_string())
            .chain((1..=control.dim()).map(|r| format!("u_{r}")))
            .collect();
        let grid = control.grid();
        let rows = (1..=grid.intervals())
            .map(|k| {
                std::iter::once(grid.node(k))
                    .chain(control.at(k).iter().copied())
                    .collect()
            })
            .collect();
        Self { header, rows }
    }

    /// `t,lambda_0_1..lambda_N_d`.
    pub fn from_costate(costate: &CostateTrajectory) -> Self {
        let d = costate.dim();
        let header = std::iter::once("t".to_string())
            .chain(block_header("lambda", 0, costate.width() / d, d))
            .collect();
        let grid = costate.grid();
        let rows = (1..=grid.intervals())
            .map(|k| {
                std::iter::once(grid.node(k))
                    .chain(costate.at(k).iter().copied())
                    .collect()
            })
            .collect();
        Self { header, rows }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Shortest round-trip text for `v`.
pub fn format_float(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV text of a table.
pub fn csv_string(table: &Table) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header).expect("writing to memory");
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_float(*v)))
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV text is ASCII")
}

/// Writes `contents` through a temporary file in the same directory and
/// renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(contents).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), csv_string(table).as_bytes())
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Table> {
    let parse_error = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_error(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| parse_error(format!("row {}: {field:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_csv(&text, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Controlled,
    Uncontrolled,
    Compare,
}

impl Mode {
    fn controlled(self) -> bool {
        matches!(self, Mode::Controlled | Mode::Compare)
    }

    fn uncontrolled(self) -> bool {
        matches!(self, Mode::Uncontrolled | Mode::Compare)
    }
}

/// Coefficients of the `t^{α-1}` mode of each leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularCoefficients {
    pub controlled: Option<Vec<f64>>,
    pub uncontrolled: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub alpha: f64,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub terminal_diameter_controlled: Option<f64>,
    pub terminal_diameter_uncontrolled: Option<f64>,
    /// Controlled over uncontrolled terminal diameter.
    pub diameter_ratio: Option<f64>,
    pub cost: Option<f64>,
    pub cost_zero_control: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub stalled: Option<bool>,
    pub final_change: Option<f64>,
    pub pmp_violation: Option<f64>,
    pub terminal_condition_residual: Option<f64>,
    pub singular_coefficients: SingularCoefficients,
}

/// Paths written by [`run`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunArtifacts {
    pub state: Option<PathBuf>,
    pub costate: Option<PathBuf>,
    pub control: Option<PathBuf>,
    pub uncontrolled_state: Option<PathBuf>,
    pub summary: PathBuf,
}

impl RunArtifacts {
    fn planned(out_dir: &Path, mode: Mode) -> Self {
        let file = |name: &str| Some(out_dir.join(name));
        Self {
            state: mode.controlled().then(|| file("state.csv")).flatten(),
            costate: mode.controlled().then(|| file("costate.csv")).flatten(),
            control: mode.controlled().then(|| file("control.csv")).flatten(),
            uncontrolled_state: mode
                .uncontrolled()
                .then(|| file("uncontrolled_state.csv"))
                .flatten(),
            summary: out_dir.join("summary.json"),
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.state,
            &self.costate,
            &self.control,
            &self.uncontrolled_state,
        ]
        .into_iter()
        .flatten()
        .chain(std::iter::once(&self.summary))
    }
}

/// Result of the in-memory part of a run, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub controlled: Option<OptimalSolution>,
    pub uncontrolled: Option<StateTrajectory>,
    pub summary: Summary,
}

/// Number of nodes the pointwise minimum-condition check samples.
const PMP_SAMPLES: usize = 256;

/// Solves the requested legs and builds the summary.
pub fn solve(scenario: &Scenario, mode: Mode) -> Result<RunOutcome> {
    let (controlled, uncontrolled) = std::thread::scope(|scope| {
        let leg = mode
            .uncontrolled()
            .then(|| scope.spawn(|| solve_uncontrolled(scenario)));
        let controlled = mode
            .controlled()
            .then(|| -> Result<_> {
                let solution = sweep(scenario, scenario.sweep())?;
                let zero = zero_control_cost(scenario)?;
                Ok((solution, zero))
            })
            .transpose();
        let uncontrolled = leg
            .map(|h| h.join().expect("uncontrolled leg does not panic"))
            .transpose();
        (controlled, uncontrolled)
    });
    let controlled = controlled?;
    let uncontrolled = uncontrolled?;

    let n = scenario.grid().intervals();
    let d_ctrl = controlled
        .as_ref()
        .map(|(s, _)| s.state.agent_diameter(n))
        .transpose()?;
    let d_free = uncontrolled
        .as_ref()
        .map(|u| u.agent_diameter(n))
        .transpose()?;
    let summary = Summary {
        mode,
        alpha: scenario.alpha().value(),
        n,
        horizon: scenario.grid().horizon(),
        terminal_diameter_controlled: d_ctrl,
        terminal_diameter_uncontrolled: d_free,
        diameter_ratio: match (d_ctrl, d_free) {
            (Some(c), Some(u)) if u > 0.0 => Some(c / u),
            _ => None,
        },
        cost: controlled.as_ref().map(|(s, _)| s.cost),
        cost_zero_control: controlled.as_ref().map(|(_, z)| *z),
        iterations: controlled.as_ref().map(|(s, _)| s.report.iterations),
        converged: controlled.as_ref().map(|(s, _)| s.report.converged),
        stalled: controlled.as_ref().map(|(s, _)| s.report.stalled),
        final_change: controlled.as_ref().map(|(s, _)| s.report.final_change),
        pmp_violation: controlled
            .as_ref()
            .map(|(s, _)| pmp_pointwise_check(s, scenario.network(), scenario.cost(), PMP_SAMPLES)),
        terminal_condition_residual: controlled
            .as_ref()
            .map(|(s, _)| terminal_condition_residual(&s.costate)),
        singular_coefficients: SingularCoefficients {
            controlled: controlled
                .as_ref()
                .map(|(s, _)| s.state.singular_coeff().to_vec()),
            uncontrolled: uncontrolled.as_ref().map(|u| u.singular_coeff().to_vec()),
        },
    };
    Ok(RunOutcome {
        controlled: controlled.map(|(s, _)| s),
        uncontrolled,
        summary,
    })
}

/// Solves and writes every artifact of `mode` into `out_dir`.
///
/// Existing files are refused unless `force` is set; the check covers every
/// planned file before anything is solved or written.
pub fn run(
    scenario: &Scenario,
    mode: Mode,
    out_dir: impl AsRef<Path>,
    force: bool,
) -> Result<(RunArtifacts, Summary)> {
    let out_dir = out_dir.as_ref();
    let artifacts = RunArtifacts::planned(out_dir, mode);
    if !force {
        if let Some(existing) = artifacts.paths().find(|p| p.exists()) {
            return Err(Error::Collision {
                path: existing.clone(),
            });
        }
    }
    let outcome = solve(scenario, mode)?;
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;

    if let Some(solution) = &outcome.controlled {
        let write = |table: &Table, path: &Option<PathBuf>| {
            emit_csv(table, path.as_ref().expect("planned for this mode"))
        };
        write(&Table::from_state(&solution.state)?, &artifacts.state)?;
        write(&Table::from_costate(&solution.costate), &artifacts.costate)?;
        write(&Table::from_control(&solution.control), &artifacts.control)?;
    }
    if let Some(traj) = &outcome.uncontrolled {
        let path = artifacts
            .uncontrolled_state
            .as_ref()
            .expect("planned for this mode");
        emit_csv(&Table::from_state(traj)?, path)?;
    }
    let mut json = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    json.push('\n');
    write_atomic(&artifacts.summary, json.as_bytes())?;
    Ok((artifacts, outcome.summary))
}
