//! File formats: sample CSV and binary, coefficient and observable tables,
//! JSON reports and the plotting CSV of a validation.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use stablediff_core::asymptotics::LimitLaw;
use stablediff_core::coeffs::TableCoefficients;
use stablediff_core::pathsim::{FunctionalSample, Rescaling, Scheme};
use stablediff_core::validate::ValidationReport;

use crate::error::{CliError, Result};

pub const SCHEMA: u32 = 1;
pub const BINARY_MAGIC: &[u8; 8] = b"SDFSAMP1";
const META_PREFIX: &str = "# meta: ";

/// Everything in a sample file except the values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub schema: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub dt: f64,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub rescaling: Rescaling,
    pub law: Option<LimitLaw>,
    pub exploded: usize,
    pub clipped: u64,
    pub label: String,
}

impl SampleMeta {
    pub fn of(s: &FunctionalSample) -> Self {
        SampleMeta {
            schema: SCHEMA,
            scheme: s.scheme,
            seed: s.seed,
            dt: s.dt,
            epsilon: s.epsilon,
            times: s.times.clone(),
            n_paths: s.values.len(),
            rescaling: s.rescaling,
            law: s.law.clone(),
            exploded: s.exploded,
            clipped: s.clipped,
            label: s.label.clone(),
        }
    }

    fn into_sample(self, values: Vec<Vec<f64>>) -> FunctionalSample {
        FunctionalSample {
            times: self.times,
            values,
            scheme: self.scheme,
            seed: self.seed,
            dt: self.dt,
            epsilon: self.epsilon,
            rescaling: self.rescaling,
            law: self.law,
            exploded: self.exploded,
            clipped: self.clipped,
            label: self.label,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| CliError::io(path, e))?))
}

/// CSV: a `# meta: {json}` line, a header `path,t=<t1>,…`, one row per path.
pub fn write_sample_csv(path: &Path, s: &FunctionalSample) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "{META_PREFIX}{}", serde_json::to_string(&SampleMeta::of(s))?).map_err(io)?;
    let header: Vec<String> = s.times.iter().map(|t| format!("t={t}")).collect();
    writeln!(w, "path,{}", header.join(",")).map_err(io)?;
    for (i, row) in s.values.iter().enumerate() {
        write!(w, "{i}").map_err(io)?;
        for v in row {
            write!(w, ",{v:?}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_sample_csv(path: &Path) -> Result<FunctionalSample> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let bad = |m: &str| CliError::format(path, m);
    let meta_line = lines.next().ok_or_else(|| bad("empty sample file"))?;
    let meta: SampleMeta = serde_json::from_str(
        meta_line.strip_prefix(META_PREFIX).ok_or_else(|| bad("missing `# meta:` line"))?,
    )
    .map_err(|e| bad(&format!("metadata: {e}")))?;
    let header = lines.next().ok_or_else(|| bad("missing header row"))?;
    if header.split(',').count() != meta.times.len() + 1 {
        return Err(bad("header does not match the time list"));
    }
    let mut values = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').skip(1).map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| bad(&format!("row {}: {e}", k + 1)))?;
        if row.len() != meta.times.len() {
            return Err(bad(&format!("row {} has {} values", k + 1, row.len())));
        }
        values.push(row);
    }
    Ok(meta.into_sample(values))
}

/// Binary: magic, u32 metadata length, metadata JSON, u64 paths, u64 times,
/// the times, then the values row by row; all little-endian.
pub fn write_sample_bin(path: &Path, s: &FunctionalSample) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    let meta = serde_json::to_vec(&SampleMeta::of(s))?;
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_all(&(meta.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&meta).map_err(io)?;
    w.write_all(&(s.values.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(s.times.len() as u64).to_le_bytes()).map_err(io)?;
    for t in &s.times {
        w.write_all(&t.to_le_bytes()).map_err(io)?;
    }
    for row in &s.values {
        for v in row {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_sample_bin(path: &Path) -> Result<FunctionalSample> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |m: &str| CliError::format(path, m);
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated file"))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != BINARY_MAGIC {
        return Err(bad("not a sample file (bad magic)"));
    }
    let meta_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let meta: SampleMeta =
        serde_json::from_slice(take(meta_len)?).map_err(|e| bad(&format!("metadata: {e}")))?;
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    if m != meta.times.len() {
        return Err(bad("time count does not match metadata"));
    }
    let mut f64s = |k: usize| -> Result<Vec<f64>> {
        let raw = take(k.checked_mul(8).ok_or_else(|| bad("size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let _times = f64s(m)?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64s(m)?);
    }
    Ok(meta.into_sample(values))
}

/// Reads either format, by magic.
pub fn read_sample(path: &Path) -> Result<FunctionalSample> {
    let mut head = [0u8; 8];
    let n = {
        use std::io::Read;
        let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        f.read(&mut head).map_err(|e| CliError::io(path, e))?
    };
    if n == 8 && &head == BINARY_MAGIC {
        read_sample_bin(path)
    } else {
        read_sample_csv(path)
    }
}

/// Numeric CSV with a mandatory header row; returns rows of `cols` values.
pub fn read_numeric_csv(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| CliError::format(path, "empty table"))?;
    if header.split(',').count() != cols {
        return Err(CliError::format(path, format!("expected {cols} columns in header")));
    }
    lines
        .enumerate()
        .map(|(k, l)| {
            let row: std::result::Result<Vec<f64>, _> = l.split(',').map(|c| c.trim().parse()).collect();
            match row {
                Ok(r) if r.len() == cols => Ok(r),
                _ => Err(CliError::format(path, format!("bad row {}", k + 1))),
            }
        })
        .collect()
}

/// `x,b,sigma` table.
pub fn read_coefficient_table(path: &Path) -> Result<TableCoefficients> {
    let rows = read_numeric_csv(path, 3)?;
    Ok(TableCoefficients::new(rows.into_iter().map(|r| (r[0], r[1], r[2])).collect())?)
}

/// `x,f` table.
pub fn read_observable_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rows: Vec<(f64, f64)> = read_numeric_csv(path, 2)?.into_iter().map(|r| (r[0], r[1])).collect();
    if rows.len() < 2 {
        return Err(CliError::format(path, "observable table needs at least two rows"));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// `xi,ecf_re,ecf_im,se_re,se_im,target_re,target_im`
pub fn write_cf_csv(path: &Path, r: &ValidationReport) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "xi,ecf_re,ecf_im,se_re,se_im,target_re,target_im").map_err(io)?;
    for (p, t) in r.ecf.iter().zip(&r.target_cf) {
        writeln!(w, "{:?},{:?},{:?},{:?},{:?},{:?},{:?}", p.xi, p.re, p.im, p.se_re, p.se_im, t.0, t.1)
            .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FunctionalSample {
        FunctionalSample {
            times: vec![0.5, 1.0],
            values: vec![vec![1.0, -2.5e-300], vec![f64::MAX, 0.1 + 0.2]],
            scheme: Scheme::Cms,
            seed: 7,
            dt: 1e-3,
            epsilon: 0.01,
            rescaling: Rescaling::identity(),
            law: None,
            exploded: 0,
            clipped: 0,
            label: "a, \"quoted\" label".into(),
        }
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        let c = dir.path().join("s.csv");
        let b = dir.path().join("s.bin");
        write_sample_csv(&c, &s).unwrap();
        write_sample_bin(&b, &s).unwrap();
        assert_eq!(read_sample(&c).unwrap(), s);
        assert_eq!(read_sample(&b).unwrap(), s);
        assert_eq!(&fs::read(&b).unwrap()[..8], BINARY_MAGIC);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "").unwrap();
        assert!(matches!(read_sample(&p), Err(CliError::Format { .. })));
        fs::write(&p, "x,b\n1,2\n").unwrap();
        assert!(read_coefficient_table(&p).is_err());
        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend_from_slice(&100u32.to_le_bytes());
        let q = dir.path().join("bad.bin");
        fs::write(&q, bytes).unwrap();
        assert!(read_sample(&q).is_err());
    }
}
