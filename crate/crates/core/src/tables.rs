//! CSV tables for cone leaves and engagement trajectories.
//!
//! Floats are written with 17 significant digits so values re-read exactly.

use std::io::{Read, Write};

use thiserror::Error;

use crate::cones::FutureCone;
use crate::engagement::EngagementResult;
use crate::vector::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("header must be `{expected}`, got `{got}`")]
    Header { expected: String, got: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("table is empty")]
    Empty,
}

impl From<csv::Error> for TableError {
    fn from(e: csv::Error) -> Self {
        TableError::Csv(e.to_string())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn leaves_header(dim: usize) -> Vec<String> {
    let mut h = vec!["time".to_string(), "point_index".to_string()];
    h.extend(AXES[..dim].iter().map(|a| format!("p{a}")));
    h
}

pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    h.extend(AXES[..dim].iter().map(|a| format!("xp_{a}")));
    h.extend(AXES[..dim].iter().map(|a| format!("xe_{a}")));
    h.push("separation".into());
    h
}

/// One exported leaf point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafRow {
    pub time: f64,
    pub point_index: usize,
    pub point: Vector,
}

/// One trajectory sample of both players.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub pursuer: Vector,
    pub evader: Vector,
    pub separation: f64,
}

/// Writes every leaf of `cone`; balls contribute `ball_points` boundary samples.
pub fn write_leaves<W: Write>(out: W, cone: &FutureCone, ball_points: usize) -> Result<(), TableError> {
    let dim = cone.vertex.dim();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(leaves_header(dim))?;
    for leaf in &cone.leaves {
        for (i, p) in leaf.export_points(ball_points).iter().enumerate() {
            let mut rec = vec![fmt(leaf.time), i.to_string()];
            rec.extend(p.as_slice().iter().map(|x| fmt(*x)));
            w.write_record(rec)?;
        }
    }
    w.flush().map_err(|e| TableError::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_trajectory<W: Write>(out: W, result: &EngagementResult) -> Result<(), TableError> {
    let dim = result
        .trajectory_x
        .first()
        .map(|(_, p)| p.dim())
        .ok_or(TableError::Empty)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(dim))?;
    for ((t, x), (_, y)) in result.trajectory_x.iter().zip(&result.trajectory_y) {
        let mut rec = vec![fmt(*t)];
        rec.extend(x.as_slice().iter().map(|v| fmt(*v)));
        rec.extend(y.as_slice().iter().map(|v| fmt(*v)));
        rec.push(fmt(x.distance(y)));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| TableError::Csv(e.to_string()))?;
    Ok(())
}

/// Reads the header, infers the dimension from its width and returns the
/// records with their line numbers.
fn read_table<R: Read>(
    input: R,
    header_for: fn(usize) -> Vec<String>,
) -> Result<(usize, Vec<(u64, Vec<f64>)>), TableError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = [2, 3]
        .into_iter()
        .find(|&d| header_for(d) == got)
        .ok_or_else(|| TableError::Header {
            expected: format!("{} (or the 3-D form)", header_for(2).join(",")),
            got: got.join(","),
        })?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let values = rec
            .iter()
            .map(|f| match f.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(TableError::Row {
                    line,
                    message: format!("`{f}` is not a finite number"),
                }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((line, values));
    }
    Ok((dim, rows))
}

pub fn read_leaves<R: Read>(input: R) -> Result<Vec<LeafRow>, TableError> {
    let (dim, rows) = read_table(input, leaves_header)?;
    rows.into_iter()
        .map(|(line, v)| {
            let idx = v[1];
            if idx < 0.0 || idx.fract() != 0.0 || idx > u32::MAX as f64 {
                return Err(TableError::Row {
                    line,
                    message: format!("point_index `{idx}` is not a nonnegative integer"),
                });
            }
            Ok(LeafRow {
                time: v[0],
                point_index: idx as usize,
                point: Vector::from_slice(&v[2..2 + dim]).expect("width checked"),
            })
        })
        .collect()
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, TableError> {
    let (dim, rows) = read_table(input, trajectory_header)?;
    Ok(rows
        .into_iter()
        .map(|(_, v)| TrajectoryRow {
            time: v[0],
            pursuer: Vector::from_slice(&v[1..1 + dim]).expect("width checked"),
            evader: Vector::from_slice(&v[1 + dim..1 + 2 * dim]).expect("width checked"),
            separation: v[1 + 2 * dim],
        })
        .collect())
}
