//! CSV and plot-data emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::BerRecord;
use crate::scalar::Scalar;

pub const CSV_HEADER: &str =
    "detector,K,N,snr_db,bits_total,bit_errors,ber,avg_flops_per_symbol,avg_restarts,avg_las_iterations";

/// Writes records as CSV: the fixed header, one newline-terminated row per
/// record, `.` decimal points (Rust's shortest round-trip float formatting).
pub fn write_csv_to<T: Scalar, W: Write>(records: &[BerRecord<T>], mut w: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.detector,
            r.k,
            r.n,
            r.snr_db,
            r.bits_total,
            r.bit_errors,
            r.ber,
            r.avg_flops_per_symbol,
            r.avg_restarts,
            r.avg_las_iterations
        )?;
    }
    Ok(())
}

pub fn write_csv<T: Scalar>(records: &[BerRecord<T>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv_to(records, &mut w)?;
    w.flush()?;
    Ok(())
}

/// CSV content as a string (used for determinism checks).
pub fn csv_string<T: Scalar>(records: &[BerRecord<T>]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

/// Writes per-detector blocks of `(snr_db, ber)` pairs, each headed by a
/// `# detector` comment and separated by blank lines, for external plotting
/// tools.
pub fn write_plotdata_to<T: Scalar, W: Write>(records: &[BerRecord<T>], mut w: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let mut order = Vec::new();
    for r in records {
        if !order.contains(&r.detector) {
            order.push(r.detector);
        }
    }
    for (i, det) in order.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        writeln!(w, "# {det}")?;
        for r in records.iter().filter(|r| r.detector == *det) {
            writeln!(w, "{} {}", r.snr_db, r.ber)?;
        }
    }
    Ok(())
}

pub fn write_plotdata<T: Scalar>(records: &[BerRecord<T>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_plotdata_to(records, &mut w)?;
    w.flush()?;
    Ok(())
}
