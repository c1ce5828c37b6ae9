//! CSV and JSON export of protocol traces.
//!
//! CSV layout, one row per iteration:
//!
//! ```text
//! n,p_n,theta,re_A_1,...,re_A_N,im_A_1,...,im_A_N[,C_n]
//! ```
//!
//! Floats are written with 17 significant digits so a re-read trace is
//! bit-identical to the in-memory one.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::TransferRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub p: f64,
    pub theta: f64,
    /// `A_1 .. A_N`.
    pub sites: Vec<Complex64>,
    pub coherence: Option<f64>,
}

impl TransferRecord {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.trace
            .iter()
            .map(|pt| TraceRow {
                n: pt.n,
                p: pt.p,
                theta: self.theta,
                sites: pt.amplitudes[1..].to_vec(),
                coherence: pt.coherence,
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(n_spins: usize, with_coherence: bool) -> Vec<String> {
    let mut cols = vec!["n".to_string(), "p_n".to_string(), "theta".to_string()];
    cols.extend((1..=n_spins).map(|k| format!("re_A_{k}")));
    cols.extend((1..=n_spins).map(|k| format!("im_A_{k}")));
    if with_coherence {
        cols.push("C_n".to_string());
    }
    cols
}

/// Writes `rows`; the `C_n` column appears when every row carries a coherence.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], n_spins: usize, writer: W) -> Result<()> {
    let with_coherence = !rows.is_empty() && rows.iter().all(|r| r.coherence.is_some());
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(header(n_spins, with_coherence))?;
    for row in rows {
        if row.sites.len() != n_spins {
            return Err(Error::Shape {
                expected: n_spins,
                found: row.sites.len(),
            });
        }
        let mut fields = vec![row.n.to_string(), fmt(row.p), fmt(row.theta)];
        fields.extend(row.sites.iter().map(|z| fmt(z.re)));
        fields.extend(row.sites.iter().map(|z| fmt(z.im)));
        if with_coherence {
            fields.push(fmt(row.coherence.unwrap_or(f64::NAN)));
        }
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<(usize, Vec<TraceRow>)> {
    let mut input = csv::Reader::from_reader(reader);
    let headers = input.headers()?.clone();
    let with_coherence = headers.iter().next_back() == Some("C_n");
    let fixed = 3 + usize::from(with_coherence);
    if headers.len() < fixed + 4 || (headers.len() - fixed) % 2 != 0 {
        return Err(Error::parse("header", "malformed trace header"));
    }
    let n_spins = (headers.len() - fixed) / 2;
    if headers.iter().map(str::to_string).collect::<Vec<_>>() != header(n_spins, with_coherence) {
        return Err(Error::parse("header", "unexpected trace columns"));
    }
    let num = |s: &str, col: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(col.to_string(), format!("\"{s}\" is not a number")))
    };
    let mut rows = Vec::new();
    for record in input.records() {
        let record = record?;
        let n = record[0]
            .parse::<usize>()
            .map_err(|_| Error::parse("n", format!("\"{}\" is not an iteration index", &record[0])))?;
        let sites = (0..n_spins)
            .map(|k| {
                Ok(Complex64::new(
                    num(&record[3 + k], &headers[3 + k])?,
                    num(&record[3 + n_spins + k], &headers[3 + n_spins + k])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let coherence = if with_coherence {
            Some(num(&record[3 + 2 * n_spins], "C_n")?)
        } else {
            None
        };
        rows.push(TraceRow {
            n,
            p: num(&record[1], "p_n")?,
            theta: num(&record[2], "theta")?,
            sites,
            coherence,
        });
    }
    Ok((n_spins, rows))
}
