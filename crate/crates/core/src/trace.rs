//! Per-iteration traces and their CSV form.
//!
//! CSV columns, in order: `t, r, F, dist, alpha, mu, step_norm, inner_iters,
//! subres, unit_step`. Missing optional values are empty fields. The final row
//! of a run records the terminal iterate only, so its step columns are empty.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_real, Real};

pub const CSV_HEADER: [&str; 10] = [
    "t",
    "r",
    "F",
    "dist",
    "alpha",
    "mu",
    "step_norm",
    "inner_iters",
    "subres",
    "unit_step",
];

/// Outer algorithm that produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Local,
    Alg1,
    Alg2,
    Alg3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Local => "local",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
        }
    }

    /// Whether the algorithm needs an objective for its line search.
    pub fn needs_objective(self) -> bool {
        !matches!(self, Algorithm::Local)
    }
}

bitflags! {
    /// Runtime invariant observations attached to a row.
    #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
    pub struct InvariantFlags: u8 {
        /// Symmetric part of J_t failed the PSD check.
        const METRIC_NOT_PSD = 1;
        /// The inexactness tolerance was raised to the precision floor.
        const TOL_FLOORED = 1 << 1;
        /// Direction came from a non-default provider.
        const EXTERNAL_DIRECTION = 1 << 2;
    }
}

/// One outer iteration: the state at x_t and the step taken from it.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<T: Real> {
    pub t: usize,
    pub r: T,
    /// F(x_t), optimization mode only.
    pub objective: Option<T>,
    pub dist: Option<T>,
    pub alpha: Option<T>,
    pub mu: Option<T>,
    /// ‖p̃_t‖.
    pub step_norm: Option<T>,
    pub inner_iters: Option<usize>,
    /// ĥr_t(x̃_{t+1}).
    pub subres: Option<T>,
    pub unit_step: Option<bool>,
    // Audit-only fields, not serialized.
    /// ‖H_t‖ (operator 2-norm).
    pub h_norm: Option<T>,
    /// Tolerance the subproblem was solved to.
    pub tol: Option<T>,
    pub flags: InvariantFlags,
}

impl<T: Real> TraceRow<T> {
    /// Row holding only the state at x_t.
    pub fn state(t: usize, r: T, objective: Option<T>, dist: Option<T>) -> Self {
        Self {
            t,
            r,
            objective,
            dist,
            alpha: None,
            mu: None,
            step_norm: None,
            inner_iters: None,
            subres: None,
            unit_step: None,
            h_norm: None,
            tol: None,
            flags: InvariantFlags::empty(),
        }
    }

    pub fn has_step(&self) -> bool {
        self.alpha.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateTrace<T: Real> {
    pub algorithm: Option<Algorithm>,
    rows: Vec<TraceRow<T>>,
}

impl<T: Real> Default for IterateTrace<T> {
    fn default() -> Self {
        Self::new(None)
    }
}

impl<T: Real> IterateTrace<T> {
    pub fn new(algorithm: Option<Algorithm>) -> Self {
        Self {
            algorithm,
            rows: Vec::new(),
        }
    }

    /// Builds a trace from rows, checking that `t` is strictly increasing.
    pub fn from_rows(algorithm: Option<Algorithm>, rows: Vec<TraceRow<T>>) -> Result<Self> {
        let mut trace = Self::new(algorithm);
        for row in rows {
            trace.push(row)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, row: TraceRow<T>) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::Trace(format!("row index {} does not follow {}", row.t, last.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow<T>] {
        &self.rows
    }

    /// Mutable access for fault injection and post-processing.
    pub fn rows_mut(&mut self) -> &mut [TraceRow<T>] {
        &mut self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn residuals(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.r).collect()
    }

    /// Rows that carry a step, i.e. all but the terminal row.
    pub fn steps(&self) -> impl Iterator<Item = &TraceRow<T>> {
        self.rows.iter().filter(|r| r.has_step())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record([
                row.t.to_string(),
                format_real(row.r),
                opt_real(row.objective),
                opt_real(row.dist),
                opt_real(row.alpha),
                opt_real(row.mu),
                opt_real(row.step_norm),
                opt(row.inner_iters),
                opt_real(row.subres),
                opt(row.unit_step),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Trace(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut records = rdr.records();
        let header = records.next().ok_or_else(|| Error::Trace("missing header row".into()))??;
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Trace(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let mut trace = Self::new(None);
        for (line, record) in records.enumerate() {
            let record = record?;
            let ctx = |col: &str| format!("row {} column {col}", line + 1);
            let field = |i: usize| record.get(i).unwrap_or("");
            let row = TraceRow {
                t: req(field(0), &ctx("t"))?,
                r: req(field(1), &ctx("r"))?,
                objective: parse_opt(field(2), &ctx("F"))?,
                dist: parse_opt(field(3), &ctx("dist"))?,
                alpha: parse_opt(field(4), &ctx("alpha"))?,
                mu: parse_opt(field(5), &ctx("mu"))?,
                step_norm: parse_opt(field(6), &ctx("step_norm"))?,
                inner_iters: parse_opt(field(7), &ctx("inner_iters"))?,
                subres: parse_opt(field(8), &ctx("subres"))?,
                unit_step: parse_opt(field(9), &ctx("unit_step"))?,
                h_norm: None,
                tol: None,
                flags: InvariantFlags::empty(),
            };
            trace.push(row)?;
        }
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        Self::read_csv(BufReader::new(file))
    }
}

fn opt_real<T: Real>(v: Option<T>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn opt<V: ToString>(v: Option<V>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn req<V: std::str::FromStr>(s: &str, ctx: &str) -> Result<V> {
    parse_opt(s, ctx)?.ok_or_else(|| Error::Trace(format!("{ctx}: value required")))
}

fn parse_opt<V: std::str::FromStr>(s: &str, ctx: &str) -> Result<Option<V>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Trace(format!("{ctx}: cannot parse `{s}`")))
}
