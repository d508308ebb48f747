//! File formats: increment CSV (`delta,z`), posterior draws CSV (`nu_1..nu_m`),
//! summary CSV (`k,mean,lo,hi`), long-format draws CSV (`draw,k,nu`) and
//! JSON sidecars.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::CoordinateSummary;
use crate::error::{Error, Result};
use crate::gibbs::PosteriorSamples;
use crate::model::{Increment, IncrementData};

#[derive(Debug, Deserialize)]
struct RawIncrement {
    delta: f64,
    z: f64,
}

/// Reads increments from CSV with header `delta,z`.
pub fn read_increments<R: Read>(reader: R) -> Result<IncrementData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for (line, row) in rdr.deserialize::<RawIncrement>().enumerate() {
        let row = row?;
        if !(row.z >= 0.0 && row.z.fract() == 0.0 && row.z <= u32::MAX as f64) {
            return Err(Error::Input(format!(
                "row {}: increment must be a nonnegative integer, got {}",
                line + 1,
                row.z
            )));
        }
        records.push(Increment {
            delta: row.delta,
            z: row.z as u32,
        });
    }
    IncrementData::new(records)
}

pub fn read_increments_file(path: &Path) -> Result<IncrementData> {
    read_increments(File::open(path)?)
}

pub fn write_increments<W: Write>(data: &IncrementData, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["delta", "z"])?;
    for r in data.records() {
        wtr.write_record([r.delta.to_string(), r.z.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_increments_file(data: &IncrementData, path: &Path) -> Result<()> {
    write_increments(data, BufWriter::new(File::create(path)?))
}

/// SHA-256 of the canonical CSV encoding of the dataset, hex encoded.
pub fn dataset_digest(data: &IncrementData) -> String {
    let mut buf = Vec::new();
    write_increments(data, &mut buf).expect("writing to memory cannot fail");
    hex::encode(Sha256::digest(&buf))
}

/// Writes one row per draw under the header `nu_1..nu_m`.
pub fn write_draws<W: Write>(samples: &PosteriorSamples, writer: W) -> Result<()> {
    write_rows(samples.m(), samples.iter_rows(), writer)
}

/// Writes arbitrary rows of length `m` under the header `nu_1..nu_m`.
pub fn write_rows<'a, W: Write>(
    m: usize,
    rows: impl Iterator<Item = &'a [f64]>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record((1..=m).map(|k| format!("nu_{k}")))?;
    for row in rows {
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads draws written by [`write_draws`].
pub fn read_draws<R: Read>(reader: R) -> Result<PosteriorSamples> {
    let mut rdr = csv::Reader::from_reader(reader);
    let m = rdr.headers()?.len();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("bad draw `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != m {
            return Err(Error::Input("ragged draws file".into()));
        }
        rows.push(row);
    }
    PosteriorSamples::from_rows(rows)
}

pub fn write_summary<W: Write>(summary: &[CoordinateSummary], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["k", "mean", "lo", "hi"])?;
    for s in summary {
        wtr.write_record([
            s.k.to_string(),
            s.mean.to_string(),
            s.lo.to_string(),
            s.hi.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Long-format draws (`draw,k,nu`) keeping every `stride`-th row.
pub fn write_long<W: Write>(samples: &PosteriorSamples, stride: usize, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["draw", "k", "nu"])?;
    for (r, row) in samples.iter_rows().enumerate().step_by(stride.max(1)) {
        for (k, v) in row.iter().enumerate() {
            wtr.write_record([r.to_string(), (k + 1).to_string(), v.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_roundtrip() {
        let data = IncrementData::from_parts(&[1.0, 0.25, 1.7], &[0, 3, 12]).unwrap();
        let mut buf = Vec::new();
        write_increments(&data, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("delta,z\n"));
        assert_eq!(read_increments(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn rejects_bad_increments() {
        assert!(read_increments("delta,z\n1.0,-1\n".as_bytes()).is_err());
        assert!(read_increments("delta,z\n1.0,2.5\n".as_bytes()).is_err());
        assert!(read_increments("delta,z\n0.0,2\n".as_bytes()).is_err());
        assert!(read_increments("delta,z\n".as_bytes()).is_err());
    }

    #[test]
    fn digest_is_stable() {
        let a = IncrementData::from_parts(&[1.0, 1.0], &[0, 3]).unwrap();
        let b = IncrementData::from_parts(&[1.0, 1.0], &[0, 3]).unwrap();
        let c = IncrementData::from_parts(&[1.0, 1.0], &[3, 0]).unwrap();
        assert_eq!(dataset_digest(&a), dataset_digest(&b));
        assert_ne!(dataset_digest(&a), dataset_digest(&c));
        assert_eq!(dataset_digest(&a).len(), 64);
    }

    #[test]
    fn draws_roundtrip() {
        let s = PosteriorSamples::from_rows(vec![vec![0.1, 0.2], vec![0.3, 1e-300]]).unwrap();
        let mut buf = Vec::new();
        write_draws(&s, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("nu_1,nu_2\n"));
        let back = read_draws(buf.as_slice()).unwrap();
        assert_eq!(
            back.iter_rows().collect::<Vec<_>>(),
            s.iter_rows().collect::<Vec<_>>()
        );
    }
}
