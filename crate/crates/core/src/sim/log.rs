//! Per-step episode records and their CSV form.
//!
//! Column order: `t`, the twelve outer-state fields, the six inputs,
//! end-effector and reference positions, `h_<barrier>` and `res_<barrier>`
//! for every barrier, `s_<wall>_<point>` clearances, `deviation`, solver
//! `status`, `iterations` and `kkt`, and the held disturbance.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::ConfigError;
use crate::mpc::SolverStatus;

pub const STATE_COLUMNS: [&str; 12] =
    ["px", "py", "pz", "vx", "vy", "vz", "psi", "psi_dot", "theta1", "theta2", "theta1_dot", "theta2_dot"];
pub const INPUT_COLUMNS: [&str; 6] = ["ax", "ay", "az", "psi_ddot", "theta1_ddot", "theta2_ddot"];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub state: [f64; 12],
    pub input: [f64; 6],
    pub end_effector: [f64; 3],
    pub reference: [f64; 3],
    /// Barrier values at the measured state.
    pub barrier_h: Vec<f64>,
    /// Smallest invariance residual of each barrier over the solved horizon;
    /// NaN when the variant has no barrier constraints.
    pub barrier_residual: Vec<f64>,
    /// Signed wall distances of the critical points.
    pub clearances: Vec<f64>,
    /// Distance from the workspace center; NaN without a workspace.
    pub deviation: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    pub kkt: f64,
    pub disturbance: [f64; 3],
}

/// Why an episode stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    Infeasible { step: usize },
    Plant { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub barrier_names: Vec<String>,
    pub clearance_names: Vec<String>,
    pub rows: Vec<LogRow>,
    pub abort: Option<AbortReason>,
    /// Wall-clock solve time of each outer step (s). Not persisted.
    pub solve_times: Vec<f64>,
}

impl EpisodeLog {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = std::iter::once("t").chain(STATE_COLUMNS).chain(INPUT_COLUMNS).map(String::from).collect();
        h.extend(["pe_x", "pe_y", "pe_z", "pd_x", "pd_y", "pd_z"].map(String::from));
        for b in &self.barrier_names {
            h.push(format!("h_{b}"));
            h.push(format!("res_{b}"));
        }
        h.extend(self.clearance_names.iter().map(|c| format!("s_{c}")));
        h.extend(["deviation", "status", "iterations", "kkt", "dist_x", "dist_y", "dist_z"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ConfigError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec: Vec<String> = Vec::with_capacity(64);
            let num = |v: &f64| v.to_string();
            rec.push(num(&r.t));
            rec.extend(r.state.iter().chain(&r.input).chain(&r.end_effector).chain(&r.reference).map(num));
            for (h, res) in r.barrier_h.iter().zip(&r.barrier_residual) {
                rec.push(num(h));
                rec.push(num(res));
            }
            rec.extend(r.clearances.iter().map(num));
            rec.push(num(&r.deviation));
            rec.push(r.status.name().to_string());
            rec.push(r.iterations.to_string());
            rec.push(num(&r.kkt));
            rec.extend(r.disturbance.iter().map(num));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a CSV written by [`EpisodeLog::write_csv`]. Abort reasons and
    /// solve times are not persisted and come back empty.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, ConfigError> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let bad = |msg: String| ConfigError::Parse(format!("episode CSV: {msg}"));
        let fixed_head = 1 + 12 + 6 + 6;
        let barrier_names: Vec<String> = header.iter().filter_map(|h| h.strip_prefix("h_")).map(String::from).collect();
        let clearance_names: Vec<String> = header.iter().filter_map(|h| h.strip_prefix("s_")).map(String::from).collect();
        let log = EpisodeLog { barrier_names, clearance_names, ..Default::default() };
        if header != log.header() {
            return Err(bad("unexpected column layout".into()));
        }
        let nb = log.barrier_names.len();
        let nc = log.clearance_names.len();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64, ConfigError> {
                rec[i].parse::<f64>().map_err(|e| bad(format!("row {line}, column {}: {e}", header[i])))
            };
            let arr = |start: usize, len: usize| -> Result<Vec<f64>, ConfigError> { (start..start + len).map(f).collect() };
            let state = arr(1, 12)?;
            let input = arr(13, 6)?;
            let ee = arr(19, 3)?;
            let reference = arr(22, 3)?;
            let pairs = arr(fixed_head, 2 * nb)?;
            let mut i = fixed_head + 2 * nb;
            let clearances = arr(i, nc)?;
            i += nc;
            let deviation = f(i)?;
            let status = SolverStatus::parse(&rec[i + 1]).ok_or_else(|| bad(format!("row {line}: unknown status '{}'", &rec[i + 1])))?;
            let iterations = rec[i + 2].parse().map_err(|e| bad(format!("row {line}: {e}")))?;
            let kkt = f(i + 3)?;
            let dist = arr(i + 4, 3)?;
            rows.push(LogRow {
                t: f(0)?,
                state: state.try_into().expect("length checked"),
                input: input.try_into().expect("length checked"),
                end_effector: ee.try_into().expect("length checked"),
                reference: reference.try_into().expect("length checked"),
                barrier_h: pairs.iter().step_by(2).copied().collect(),
                barrier_residual: pairs.iter().skip(1).step_by(2).copied().collect(),
                clearances,
                deviation,
                status,
                iterations,
                kkt,
                disturbance: dist.try_into().expect("length checked"),
            });
        }
        Ok(EpisodeLog { rows, ..log })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
