//! File formats: matrix and configuration JSON, signal and distribution CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohen::{CmcdConfig, KernelSpec};
use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::gmconv::GmcMatrices;
use crate::signals::{SampledSignal, UniformGrid};
use crate::symplectic::SymplecticMatrix;
use crate::wigner::MwdConfig;
use crate::C64;

/// Tolerance for matrices read from files.
pub const FILE_TOL: f64 = 1e-9;

/// A number or a string holding a decimal or `p/q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

impl Entry {
    pub fn value(&self) -> Result<f64> {
        match self {
            Entry::Number(v) => Ok(*v),
            Entry::Text(s) => parse_rational(s),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<f64> {
    let bad = || MtfaError::Parse(format!("bad matrix entry '{s}'"));
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            p / q
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub rows: Vec<Vec<Entry>>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<SymplecticMatrix> {
        if self.rows.len() != 2 * self.n {
            return Err(MtfaError::DimensionMismatch(format!("n = {} needs {} rows, got {}", self.n, 2 * self.n, self.rows.len())));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(Entry::value).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        SymplecticMatrix::from_rows(&rows, FILE_TOL)
    }

    pub fn from_matrix(m: &SymplecticMatrix) -> Self {
        let d = 2 * m.n();
        Self {
            n: m.n(),
            rows: (0..d).map(|i| (0..d).map(|j| Entry::Number(m.entry(i, j))).collect()).collect(),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut s)?;
    Ok(s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<SymplecticMatrix> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

/// Configuration of a distribution: the seven matrices (classical when
/// omitted) and the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcdFile {
    #[serde(default)]
    pub m: Option<MatrixFile>,
    #[serde(default)]
    pub m1: Option<MatrixFile>,
    #[serde(default)]
    pub m2: Option<MatrixFile>,
    #[serde(default)]
    pub m3: Option<MatrixFile>,
    #[serde(default)]
    pub m4: Option<MatrixFile>,
    #[serde(default)]
    pub m5: Option<MatrixFile>,
    #[serde(default)]
    pub m6: Option<MatrixFile>,
    pub kernel: KernelSpec,
}

impl CmcdFile {
    pub fn to_config(&self, signal: &UniformGrid) -> Result<CmcdConfig> {
        let mwd0 = MwdConfig::classical();
        let gmc0 = GmcMatrices::classical();
        let pick = |f: &Option<MatrixFile>, d: &SymplecticMatrix| f.as_ref().map_or(Ok(d.clone()), MatrixFile::to_matrix);
        let mwd = MwdConfig::new(pick(&self.m, &mwd0.m)?, pick(&self.m1, &mwd0.m1)?, pick(&self.m2, &mwd0.m2)?, pick(&self.m3, &mwd0.m3)?)?;
        let gmc = GmcMatrices::new(pick(&self.m4, &gmc0.m4)?, pick(&self.m5, &gmc0.m5)?, pick(&self.m6, &gmc0.m6)?)?;
        self.kernel.validate()?;
        CmcdConfig::new(mwd, gmc, signal, &self.kernel)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRow {
    t: f64,
    re: f64,
    im: f64,
}

pub fn read_signal<R: Read>(input: R) -> Result<SampledSignal> {
    let mut rd = csv::Reader::from_reader(input);
    let rows = rd.deserialize::<SignalRow>().collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.len() < 2 {
        return Err(MtfaError::InvalidGrid("a signal needs at least two samples".into()));
    }
    let step = rows[1].t - rows[0].t;
    for (k, r) in rows.iter().enumerate() {
        let want = rows[0].t + k as f64 * step;
        if (r.t - want).abs() > 1e-6 * step.abs().max(1e-300) {
            return Err(MtfaError::NonconformingGrid(format!("sample {k} at t = {} breaks the uniform step", r.t)));
        }
    }
    let grid = UniformGrid::new(rows[0].t, step, rows.len())?;
    SampledSignal::new(grid, rows.iter().map(|r| C64::new(r.re, r.im)).collect())
}

pub fn write_signal<W: Write>(f: &SampledSignal, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (k, v) in f.values.iter().enumerate() {
        w.serialize(SignalRow { t: f.grid.point(k), re: v.re, im: v.im })?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_signal(path: &Path) -> Result<SampledSignal> {
    read_signal(File::open(path)?)
}

pub fn save_signal(path: &Path, f: &SampledSignal) -> Result<()> {
    write_signal(f, BufWriter::new(File::create(path)?))
}

#[derive(Debug, Serialize)]
struct FieldRow {
    x: f64,
    u: f64,
    re: f64,
    im: f64,
}

pub fn write_tfd<W: Write>(w: &TfDistribution, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for i in 0..w.xgrid.count {
        for j in 0..w.ugrid.count {
            let v = w.at(i, j);
            wr.serialize(FieldRow { x: w.xgrid.point(i), u: w.ugrid.point(j), re: v.re, im: v.im })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn save_tfd(path: &Path, w: &TfDistribution) -> Result<()> {
    write_tfd(w, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_entries() {
        assert_eq!(parse_rational("10/21").unwrap(), 10.0 / 21.0);
        assert_eq!(parse_rational("-0.5").unwrap(), -0.5);
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn matrix_json_round_trip() {
        let text = r#"{"n": 1, "rows": [[0, "10/21"], ["-21/10", "10/7"]]}"#;
        let m = serde_json::from_str::<MatrixFile>(text).unwrap().to_matrix().unwrap();
        assert!((m.entry(0, 1) - 10.0 / 21.0).abs() < 1e-15);
        let back = MatrixFile::from_matrix(&m).to_matrix().unwrap();
        assert_eq!(back, m);
        let bad = r#"{"n": 1, "rows": [[1, 1], [1, 1]]}"#;
        assert!(matches!(
            serde_json::from_str::<MatrixFile>(bad).unwrap().to_matrix(),
            Err(MtfaError::NotSymplectic { .. })
        ));
    }

    #[test]
    fn signal_csv_round_trip() {
        let g = UniformGrid::symmetric(16, 0.25).unwrap();
        let f = SampledSignal::from_fn(g, |x| C64::new(x, -x * x));
        let mut buf = Vec::new();
        write_signal(&f, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,re,im\n"));
        let back = read_signal(buf.as_slice()).unwrap();
        assert_eq!(back.values, f.values);
        assert!(back.grid.same_as(&g));
    }

    #[test]
    fn irregular_signal_is_rejected() {
        let text = "t,re,im\n0,1,0\n1,1,0\n2.5,1,0\n";
        assert!(matches!(read_signal(text.as_bytes()), Err(MtfaError::NonconformingGrid(_))));
    }

    #[test]
    fn cmcd_file_defaults_are_classical() {
        let cfg: CmcdFile = serde_json::from_str(r#"{"kernel": {"kind": "wigner"}}"#).unwrap();
        let g = UniformGrid::symmetric(16, 0.25).unwrap();
        let c = cfg.to_config(&g).unwrap();
        assert_eq!(c.mwd, MwdConfig::classical());
        assert_eq!(c.gmc, GmcMatrices::classical());
    }

    #[test]
    fn tfd_csv_layout() {
        let g = UniformGrid::symmetric(2, 1.0).unwrap();
        let w = TfDistribution::from_fn(g, g, |x, u| C64::new(x, u));
        let mut buf = Vec::new();
        write_tfd(&w, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().next().unwrap(), "x,u,re,im");
    }
}
