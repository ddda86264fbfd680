//! Denoising benchmark: the three example configurations, nine methods,
//! SNR sweeps and CSV/SVG output.
//!
//! Fixed-kernel methods smooth the classical Wigner distribution of the
//! observation with their kernel and invert the result. The Wiener baseline
//! and the adaptive methods are oracle designs that see the clean signal.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohen::{phi_to_pi, KernelSpec};
use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::fft_in_place;
use crate::gmconv::{convolve_direct, from_axes, GmcMatrices};
use crate::lsfilter::{denoise_with_target, target_wigner, Matrices, DEFAULT_EPSILON};
use crate::signals::{add_awgn_stream, generate, metrics, unimodular_alignment, Metrics, SampledSignal, SignalKind, UniformGrid};
use crate::symplectic::{special, Special, SymplecticMatrix};
use crate::wigner::{wd_invert, wigner, Anchor, MwdConfig, TfGrids};

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleConfig {
    pub id: u8,
    pub kind: SignalKind,
    pub fs: f64,
    pub interval: (f64, f64),
    pub matrices: Matrices,
}

impl ExampleConfig {
    pub fn new(id: u8) -> Result<Self> {
        let m2 = |a, b, c, d| SymplecticMatrix::from_2x2(a, b, c, d);
        let pi = special(Special::PI, 1)?;
        let j = SymplecticMatrix::j(1);
        let (kind, fs, mwd, m4) = match id {
            1 => {
                let m1 = m2(0.0, 1.0, -1.0, 2.0)?;
                let m4 = from_axes([-5.0, 1.0, 0.0, -0.2], [5.0, 1.0, 0.0, 0.2])?;
                (SignalKind::Lfm, 30.0, MwdConfig::new(j, m1.clone(), m1, pi)?, m4)
            }
            2 => {
                let m1 = m2(0.0, 1.0, -1.0, 2.5)?;
                let m4 = from_axes([1.0, 4.0, 1.0, 5.0], [1.0, 1.0, 1.0, 2.0])?;
                (SignalKind::GaussLfm, 50.0, MwdConfig::new(j, m1.clone(), m1, pi)?, m4)
            }
            3 => {
                let m = m2(0.0, 10.0 / 21.0, -2.1, 10.0 / 7.0)?;
                let m4 = from_axes([0.0, 1.0, -1.0, 2.0], [3.0, -2.0, -1.0, 1.0])?;
                (SignalKind::CExp, 50.0, MwdConfig::new(m, j.clone(), j, pi)?, m4)
            }
            _ => return Err(MtfaError::UnknownName(format!("example {id}"))),
        };
        let gmc = GmcMatrices::new(m4.clone(), m4.clone(), m4)?;
        Ok(Self { id, kind, fs, interval: (-5.0, 5.0), matrices: Matrices { mwd, gmc } })
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::interval(self.interval.0, self.interval.1, self.fs)
    }

    pub fn clean(&self) -> Result<SampledSignal> {
        Ok(generate(self.kind, self.grid()?))
    }

    /// The seven matrices in the order `M, M₁, M₂, M₃, M₄, M₅, M₆`.
    pub fn all_matrices(&self) -> [&SymplecticMatrix; 7] {
        let (w, g) = (&self.matrices.mwd, &self.matrices.gmc);
        [&w.m, &w.m1, &w.m2, &w.m3, &g.m4, &g.m5, &g.m6]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    MargenauHill,
    KirkwoodRihaczek,
    BornJordan,
    Page,
    Wiener,
    AdaptiveCd,
    AdaptiveMwdCd,
    AdaptiveGmcCd,
    AdaptiveCmcd,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::MargenauHill,
        Method::KirkwoodRihaczek,
        Method::BornJordan,
        Method::Page,
        Method::Wiener,
        Method::AdaptiveCd,
        Method::AdaptiveMwdCd,
        Method::AdaptiveGmcCd,
        Method::AdaptiveCmcd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MargenauHill => "margenau-hill",
            Method::KirkwoodRihaczek => "kirkwood-rihaczek",
            Method::BornJordan => "born-jordan",
            Method::Page => "page",
            Method::Wiener => "wiener",
            Method::AdaptiveCd => "adaptive-cd",
            Method::AdaptiveMwdCd => "adaptive-mwd-cd",
            Method::AdaptiveGmcCd => "adaptive-gmc-cd",
            Method::AdaptiveCmcd => "adaptive-cmcd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or(MtfaError::UnknownMethod(s))
    }

    /// `all` or a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        if s.trim() == "all" {
            return Ok(Method::ALL.to_vec());
        }
        s.split(',').map(Method::parse).collect()
    }

    pub fn kernel(self) -> Option<KernelSpec> {
        match self {
            Method::MargenauHill => Some(KernelSpec::MargenauHill),
            Method::KirkwoodRihaczek => Some(KernelSpec::KirkwoodRihaczek),
            Method::BornJordan => Some(KernelSpec::BornJordan),
            Method::Page => Some(KernelSpec::Page),
            _ => None,
        }
    }

    /// Matrices of the adaptive variants.
    pub fn matrices(self, ex: &ExampleConfig) -> Option<Matrices> {
        let m = &ex.matrices;
        match self {
            Method::AdaptiveCd => Some(Matrices::classical()),
            Method::AdaptiveMwdCd => Some(Matrices { mwd: m.mwd.clone(), gmc: GmcMatrices::classical() }),
            Method::AdaptiveGmcCd => Some(Matrices { mwd: MwdConfig::classical(), gmc: m.gmc.clone() }),
            Method::AdaptiveCmcd => Some(m.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `start:stop:step` (inclusive), a comma list, or a single value;
/// `inf` is the noiseless sentinel.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        match t.trim() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            t => t.parse::<f64>().map_err(|_| MtfaError::Parse(format!("bad SNR value '{t}'"))),
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => {
            let (a, b, c) = (num(a)?, num(b)?, num(c)?);
            if !(c > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(MtfaError::Parse(format!("bad SNR range '{s}'")));
            }
            let n = ((b - a) / c + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * c).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(MtfaError::Parse(format!("bad SNR list '{s}'"))),
    }
}

/// Per-example state shared by every trial.
pub struct Bench {
    pub example: ExampleConfig,
    pub clean: SampledSignal,
    grids: TfGrids,
    target: TfDistribution,
    kernels: Vec<(Method, TfDistribution)>,
    pub epsilon: f64,
}

impl Bench {
    pub fn new(example: ExampleConfig) -> Result<Self> {
        let clean = example.clean()?;
        let grids = TfGrids::classical(&clean.grid)?;
        let target = target_wigner(&clean)?;
        let kernels = Method::ALL
            .iter()
            .filter_map(|m| m.kernel().map(|k| (*m, k)))
            .map(|(m, k)| Ok((m, phi_to_pi(&k, &grids)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { example, clean, grids, target, kernels, epsilon: DEFAULT_EPSILON })
    }

    /// Noisy observation of trial `trial` at `snr_db`; shared by all methods.
    pub fn observation(&self, snr_db: f64, seed: u64, trial: u64) -> Result<SampledSignal> {
        add_awgn_stream(&self.clean, snr_db, seed, trial)
    }

    pub fn noise_power(&self, snr_db: f64) -> f64 {
        if snr_db == f64::INFINITY {
            0.0
        } else if snr_db == f64::NEG_INFINITY {
            self.clean.mean_power()
        } else {
            self.clean.mean_power() / 10f64.powf(snr_db / 10.0)
        }
    }

    /// Estimate of the clean signal from `g` by `method`.
    pub fn estimate(&self, method: Method, g: &SampledSignal, snr_db: f64) -> Result<SampledSignal> {
        if method == Method::Wiener {
            return Ok(wiener(g, &self.clean, self.noise_power(snr_db)));
        }
        if let Some(m) = method.matrices(&self.example) {
            return Ok(denoise_with_target(g, &self.clean, &self.target, &m, self.epsilon)?.estimate);
        }
        let pi = &self.kernels.iter().find(|(m, _)| *m == method).expect("fixed-kernel method").1;
        let w = wigner(g, &self.grids)?;
        let smoothed = convolve_direct(&w, pi, &GmcMatrices::classical())?;
        Ok(invert_aligned(&smoothed, &self.clean))
    }

    pub fn evaluate(&self, method: Method, g: &SampledSignal, snr_db: f64) -> Result<Metrics> {
        metrics(&self.estimate(method, g, snr_db)?, &self.clean)
    }
}

/// Wigner inversion followed by the global phase that best matches the
/// reference; a degenerate distribution gives the zero signal.
fn invert_aligned(w: &TfDistribution, reference: &SampledSignal) -> SampledSignal {
    match wd_invert(w, Anchor::MaxEnergy) {
        Ok(f) => {
            let c = unimodular_alignment(&reference.values, &f.values);
            f.scale(c)
        }
        Err(_) => SampledSignal::zeros(reference.grid),
    }
}

/// Oracle Wiener filter `S_ff/(S_ff + S_nn)` on the DFT of `g`, with `S_ff`
/// the periodogram of the clean signal and white noise of mean power `noise_power`.
pub fn wiener(g: &SampledSignal, clean: &SampledSignal, noise_power: f64) -> SampledSignal {
    if noise_power == 0.0 {
        return g.clone();
    }
    let n = g.values.len();
    let mut sf = clean.values.clone();
    fft_in_place(&mut sf, false);
    let mut sg = g.values.clone();
    fft_in_place(&mut sg, false);
    let snn = n as f64 * noise_power;
    for (y, x) in sg.iter_mut().zip(&sf) {
        let p = x.norm_sqr();
        *y *= p / (p + snn);
    }
    fft_in_place(&mut sg, true);
    let values = sg.into_iter().map(|v| v / n as f64).collect();
    SampledSignal { grid: g.grid, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub example: u8,
    pub method: String,
    pub snr_db: f64,
    pub trials: usize,
    /// `log₁₀` of the trial-mean MSE.
    pub log10_mse: f64,
    pub psnr_db: f64,
    pub seed: u64,
    #[serde(skip)]
    pub mean_mse: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub records: Vec<BenchmarkRecord>,
    /// Set when a trial failed; `records` then holds the SNR points finished before it.
    pub aborted: Option<String>,
}

/// Runs `methods` on `trials` noisy observations at each SNR. Every method
/// sees the same observations; trial `t` at SNR index `s` uses noise stream
/// `s·2³² + t` of `seed`.
pub fn run_example(id: u8, snr_list: &[f64], trials: usize, seed: u64, methods: &[Method]) -> Result<BenchOutcome> {
    let bench = Bench::new(ExampleConfig::new(id)?)?;
    run_bench(&bench, snr_list, trials, seed, methods)
}

pub fn run_bench(bench: &Bench, snr_list: &[f64], trials: usize, seed: u64, methods: &[Method]) -> Result<BenchOutcome> {
    if trials == 0 {
        return Err(MtfaError::InvalidGrid("trials must be >= 1".into()));
    }
    if methods.is_empty() {
        return Err(MtfaError::UnknownMethod("empty method list".into()));
    }
    let mut records = Vec::new();
    for (s, &snr) in snr_list.iter().enumerate() {
        let per_trial: Result<Vec<Vec<Metrics>>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let g = bench.observation(snr, seed, ((s as u64) << 32) + t as u64)?;
                methods.iter().map(|&m| bench.evaluate(m, &g, snr)).collect()
            })
            .collect();
        let per_trial = match per_trial {
            Ok(v) => v,
            Err(e) => return Ok(BenchOutcome { records, aborted: Some(format!("snr {snr} dB: {e}")) }),
        };
        for (k, m) in methods.iter().enumerate() {
            let mse = per_trial.iter().map(|r| r[k].mse).sum::<f64>() / trials as f64;
            let psnr = per_trial.iter().map(|r| r[k].psnr_db).sum::<f64>() / trials as f64;
            records.push(BenchmarkRecord {
                example: bench.example.id,
                method: m.name().to_string(),
                snr_db: snr,
                trials,
                log10_mse: mse.log10(),
                psnr_db: psnr,
                seed,
                mean_mse: mse,
            });
        }
    }
    Ok(BenchOutcome { records, aborted: None })
}

pub fn write_csv<W: Write>(records: &[BenchmarkRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const CHART_W: f64 = 480.0;
const CHART_H: f64 = 320.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 9] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];

/// Two line charts side by side: `log₁₀ MSE` and PSNR against SNR, one polyline per method.
pub fn render_svg(records: &[BenchmarkRecord]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        2.0 * CHART_W,
        CHART_H + 20.0 * methods.len().div_ceil(3) as f64 + 10.0
    );
    let charts: [(&str, fn(&BenchmarkRecord) -> f64); 2] = [("log10 MSE", |r| r.log10_mse), ("PSNR (dB)", |r| r.psnr_db)];
    for (c, (label, get)) in charts.iter().enumerate() {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.snr_db, get(r)))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let ox = c as f64 * CHART_W;
        let px = |x: f64| ox + MARGIN + (x - x0) / (x1 - x0) * (CHART_W - 2.0 * MARGIN);
        let py = |y: f64| CHART_H - MARGIN - (y - y0) / (y1 - y0) * (CHART_H - 2.0 * MARGIN);
        s += &format!("<g class=\"chart\">\n<text x=\"{:.1}\" y=\"20\">{label}</text>\n", ox + MARGIN);
        s += &format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#000\"/>\n",
            ox + MARGIN,
            MARGIN,
            CHART_W - 2.0 * MARGIN,
            CHART_H - 2.0 * MARGIN
        );
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\">SNR (dB)</text>\n", ox + CHART_W / 2.0 - 20.0, CHART_H - 15.0);
        for (v, anchor) in [(x0, "start"), (x1, "end")] {
            s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\">{v}</text>\n", px(v), CHART_H - MARGIN + 14.0);
        }
        for v in [y0, y1] {
            s += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>\n", ox + MARGIN - 4.0, py(v) + 4.0);
        }
        for (k, m) in methods.iter().enumerate() {
            let coords: Vec<String> = records
                .iter()
                .filter(|r| r.method == *m && r.snr_db.is_finite() && get(r).is_finite())
                .map(|r| format!("{:.2},{:.2}", px(r.snr_db), py(get(r))))
                .collect();
            s += &format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"><title>{m}</title></polyline>\n",
                COLORS[k % COLORS.len()],
                coords.join(" ")
            );
        }
        s += "</g>\n";
    }
    for (k, m) in methods.iter().enumerate() {
        let (x, y) = (MARGIN + (k % 3) as f64 * 250.0, CHART_H + 10.0 + (k / 3) as f64 * 20.0);
        s += &format!(
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\">{m}</text>\n",
            x + 20.0,
            COLORS[k % COLORS.len()],
            x + 25.0,
            y + 4.0
        );
    }
    s += "</svg>\n";
    s
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

pub fn emit(records: &[BenchmarkRecord], out_csv: &Path, out_svg: Option<&Path>) -> Result<()> {
    if records.is_empty() {
        return Err(MtfaError::InvalidGrid("no records to emit".into()));
    }
    write_csv(records, BufWriter::new(File::create(out_csv)?))?;
    if let Some(p) = out_svg {
        std::fs::write(p, render_svg(records))?;
    }
    Ok(())
}
