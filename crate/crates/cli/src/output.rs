//! Output files: atomic writes and the small CSV tables the commands emit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use weakval::csv_float;
use weakval::readout::CalibrationResult;

/// Writes `path` via a temporary sibling and a rename, so readers never
/// see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut out)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e).with_context(|| format!("cannot write {}", path.display()));
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move output into {}", path.display()))
}

pub const CALIBRATION_HEADER: &str = "delta_x_px,sigma_x_px,sigma_y_px,origin_x_px,origin_y_px";

pub fn write_calibration(out: &mut dyn Write, c: &CalibrationResult) -> std::io::Result<()> {
    writeln!(out, "{CALIBRATION_HEADER}")?;
    let f = [c.delta_x, c.sigma_x, c.sigma_y, c.origin.0, c.origin.1].map(csv_float);
    writeln!(out, "{}", f.join(","))
}

/// Records of a headed CSV table with its expected header checked.
fn records(text: &str, header: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    if reader.headers()?.iter().ne(header.split(',')) {
        bail!("line 1: expected header `{header}`");
    }
    reader
        .records()
        .map(|r| {
            let r = r?;
            Ok((r.position().map_or(0, |p| p.line() as usize), r))
        })
        .collect()
}

fn number(s: &str, lineno: usize) -> Result<f64> {
    s.parse().with_context(|| format!("line {lineno}: `{s}` is not a number"))
}

pub fn read_calibration(text: &str) -> Result<CalibrationResult> {
    let rows = records(text, CALIBRATION_HEADER)?;
    let [(n, row)] = &rows[..] else {
        bail!("expected exactly one calibration row, got {}", rows.len());
    };
    let v: Vec<f64> = row.iter().map(|s| number(s, *n)).collect::<Result<_>>()?;
    Ok(CalibrationResult {
        delta_x: v[0],
        sigma_x: v[1],
        sigma_y: v[2],
        origin: (v[3], v[4]),
    })
}

pub const METHODS_HEADER: &str = "theta_deg,method,re_w,se_re,im_w,se_im,n_used";

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub theta_deg: f64,
    pub method: char,
    pub re_w: f64,
    pub se_re: f64,
    pub im_w: f64,
    pub se_im: f64,
    pub n_used: u64,
}

pub fn write_methods(out: &mut dyn Write, rows: &[MethodRow]) -> std::io::Result<()> {
    writeln!(out, "{METHODS_HEADER}")?;
    for r in rows {
        let f = [r.re_w, r.se_re, r.im_w, r.se_im].map(csv_float);
        writeln!(out, "{},{},{},{}", csv_float(r.theta_deg), r.method, f.join(","), r.n_used)?;
    }
    Ok(())
}

pub fn read_methods(text: &str) -> Result<Vec<MethodRow>> {
    records(text, METHODS_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            let method = match &f[1] {
                "A" => 'A',
                "B" => 'B',
                "C" => 'C',
                other => bail!("line {n}: unknown method `{other}`"),
            };
            Ok(MethodRow {
                theta_deg: number(&f[0], n)?,
                method,
                re_w: number(&f[2], n)?,
                se_re: number(&f[3], n)?,
                im_w: number(&f[4], n)?,
                se_im: number(&f[5], n)?,
                n_used: f[6].parse().with_context(|| format!("line {n}: bad n_used"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_only_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, |w| w.write_all(b"hello")).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
        let failed = write_atomic(&path, |_| Err(std::io::Error::other("boom")));
        assert!(failed.is_err());
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn calibration_round_trip() {
        let c = CalibrationResult {
            delta_x: 62.868,
            sigma_x: 166.91,
            sigma_y: 299.3,
            origin: (1279.5, 959.5),
        };
        let mut buf = Vec::new();
        write_calibration(&mut buf, &c).unwrap();
        assert_eq!(read_calibration(std::str::from_utf8(&buf).unwrap()).unwrap(), c);
        assert!(read_calibration("x\n1,2\n").is_err());
    }

    #[test]
    fn methods_round_trip() {
        let rows = vec![
            MethodRow { theta_deg: 0.0, method: 'A', re_w: 0.5, se_re: 1e-3, im_w: -0.5, se_im: 2e-3, n_used: 500 },
            MethodRow { theta_deg: 3.0, method: 'C', re_w: 0.25, se_re: 0.0, im_w: 0.1, se_im: 0.0, n_used: 7 },
        ];
        let mut buf = Vec::new();
        write_methods(&mut buf, &rows).unwrap();
        assert_eq!(read_methods(std::str::from_utf8(&buf).unwrap()).unwrap(), rows);
        let bad = format!("{METHODS_HEADER}\n0,D,0,0,0,0,1\n");
        assert!(read_methods(&bad).unwrap_err().to_string().contains("line 2"));
    }
}
