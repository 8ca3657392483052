//! Bit-exact sample batch files for offline detection.
//!
//! Format: a small textual header, then raw little-endian `f32` I/Q pairs.
//!
//! ```text
//! iqbatch v1
//! fs <hertz>
//! t_start <seconds>
//! count <samples>
//! data
//! <count * 2 little-endian f32 values>
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::SampleBatch;
use crate::error::{Error, Result};

const MAGIC: &str = "iqbatch v1";

pub fn write_batch(path: &Path, batch: &SampleBatch) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(
        w,
        "{MAGIC}\nfs {}\nt_start {}\ncount {}\ndata\n",
        batch.fs,
        batch.t_start,
        batch.len()
    )?;
    for s in &batch.samples {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut header = Vec::new();
    // Read byte-wise up to and including the "data\n" line so the sample
    // payload stays untouched.
    let mut line = String::new();
    let mut fs = None;
    let mut t_start = None;
    let mut count = None;
    let mut magic_seen = false;
    loop {
        line.clear();
        let mut byte = [0u8; 1];
        loop {
            if r.read(&mut byte)? == 0 {
                return Err(Error::Parse("batch file: truncated header".into()));
            }
            header.push(byte[0]);
            if byte[0] == b'\n' {
                break;
            }
            line.push(byte[0] as char);
        }
        let line = line.trim();
        if !magic_seen {
            if line != MAGIC {
                return Err(Error::Parse(format!(
                    "batch file: expected {MAGIC:?} header, got {line:?}"
                )));
            }
            magic_seen = true;
            continue;
        }
        if line == "data" {
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| Error::Parse(format!("batch file: malformed header line {line:?}")))?;
        let parsed: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("batch file: bad number in {line:?}")))?;
        match key {
            "fs" => fs = Some(parsed),
            "t_start" => t_start = Some(parsed),
            "count" => count = Some(parsed as usize),
            _ => return Err(Error::Parse(format!("batch file: unknown header key {key:?}"))),
        }
    }
    let fs = fs.ok_or_else(|| Error::Parse("batch file: missing fs".into()))?;
    let t_start = t_start.ok_or_else(|| Error::Parse("batch file: missing t_start".into()))?;
    let count = count.ok_or_else(|| Error::Parse("batch file: missing count".into()))?;
    if !(fs > 0.0) {
        return Err(Error::Parse(format!("batch file: fs must be > 0, got {fs}")));
    }
    let mut payload = vec![0u8; count * 8];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Parse(format!("batch file: expected {count} samples, payload short")))?;
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
            Complex64::new(re, im)
        })
        .collect();
    Ok(SampleBatch {
        t_start,
        fs,
        samples,
        e1_sample_anchor: 0,
    })
}
