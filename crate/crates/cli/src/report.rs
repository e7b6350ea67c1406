//! Report rows and their CSV / JSON encodings.

use std::io::{self, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes every float with 17 significant digits; non-finite values
/// become `null`.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize, W: Write + ?Sized>(out: &mut W, command: &str, body: &T) -> serde_json::Result<()> {
    let env = Envelope {
        schema: SCHEMA_VERSION,
        command,
        body,
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, Sig17);
    env.serialize(&mut ser)?;
    writeln!(out).map_err(serde_json::Error::io)
}

pub fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Singular values as `a;b;c` for a single CSV cell.
pub fn join_values(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n: usize,
    pub k: usize,
    pub spectrum: String,
    pub normalization: String,
    pub method: String,
    pub value: f64,
    pub error: f64,
    pub error_kind: String,
    pub samples_or_nodes: u64,
    pub total_mass: f64,
    pub trail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: String,
    pub status: String,
    pub value: f64,
    pub error: f64,
    pub error_kind: String,
    /// Largest deviation from another method, in combined-error units.
    pub worst_units: f64,
    pub worst_against: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub a: String,
    pub b: String,
    pub delta: f64,
    pub combined_error: f64,
    pub units: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub exact: f64,
    pub leading: f64,
    pub abs_err: f64,
    /// `abs_err · tau^((n−k+2)/2)`.
    pub scaled_err: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: u32,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCheckRow {
    pub n: usize,
    pub tau: f64,
    pub exact: f64,
    pub plus: f64,
    pub minus: f64,
    pub rel_plus: f64,
    pub rel_minus: f64,
}
