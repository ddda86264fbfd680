//! Uniform grids, the test signals, complex white Gaussian noise and error metrics.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MtfaError, Result};
use crate::fourier::Lin;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(MtfaError::InvalidGrid(format!("step {step}, start {start}")));
        }
        if count == 0 {
            return Err(MtfaError::InvalidGrid("empty grid".into()));
        }
        Ok(Self { start, step, count })
    }

    /// `count` nodes spaced `step` apart with node `count/2` at the origin.
    pub fn symmetric(count: usize, step: f64) -> Result<Self> {
        Self::new(-((count / 2) as f64) * step, step, count)
    }

    /// Samples of `[a, b)` at rate `fs`.
    pub fn interval(a: f64, b: f64, fs: f64) -> Result<Self> {
        let count = ((b - a) * fs).round() as usize;
        Self::new(a, 1.0 / fs, count)
    }

    /// Symmetric grid with the same count whose step is `|scale|/(count·step)`.
    pub fn conjugate(&self, scale: f64) -> Result<Self> {
        Self::symmetric(self.count, scale.abs() / (self.count as f64 * self.step))
    }

    #[inline]
    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }

    pub fn end(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn zero_index(&self) -> Option<usize> {
        let t = -self.start / self.step;
        let k = t.round();
        if k >= 0.0 && k < self.count as f64 && (t - k).abs() < 1e-9 {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.zero_index().is_some()
    }

    pub fn lin(&self) -> Lin {
        Lin::new(self.start, self.step, self.count)
    }

    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.count == other.count
            && (self.step - other.step).abs() <= 1e-9 * self.step
            && (self.start - other.start).abs() <= 1e-9 * self.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub grid: UniformGrid,
    pub values: Vec<C64>,
}

impl SampledSignal {
    pub fn new(grid: UniformGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.count {
            return Err(MtfaError::GridMismatch(format!(
                "{} values on a {}-point grid",
                values.len(),
                grid.count
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(MtfaError::PipelineFailure("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.count).map(|k| f(grid.point(k))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.count] }
    }

    /// `Σ|f|²·Δx`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step
    }

    pub fn mean_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Lfm,
    GaussLfm,
    CExp,
}

impl SignalKind {
    pub fn eval(self, x: f64) -> C64 {
        match self {
            SignalKind::Lfm => C64::from_polar(1.0, 2.0 * PI * (x + x * x / 2.0)),
            SignalKind::GaussLfm => {
                C64::from_polar((-(x + 1.0) * (x + 1.0) / 8.0).exp(), 2.0 * PI * x * x)
            }
            SignalKind::CExp => C64::from_polar(1.0, PI * x),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lfm" => Ok(SignalKind::Lfm),
            "gausslfm" | "gauss-lfm" | "gauss_lfm" => Ok(SignalKind::GaussLfm),
            "cexp" => Ok(SignalKind::CExp),
            _ => Err(MtfaError::UnknownName(s.into())),
        }
    }
}

pub fn generate(kind: SignalKind, grid: UniformGrid) -> SampledSignal {
    SampledSignal::from_fn(grid, |x| kind.eval(x))
}

/// Independent ChaCha stream for `(seed, stream)`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circular complex white Gaussian noise with mean power `power`.
pub fn complex_noise(count: usize, power: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let s = (power / 2.0).sqrt();
    (0..count)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(s * re, s * im)
        })
        .collect()
}

/// `f + n` with the noise power set from the mean signal power. `+∞` returns
/// `f` unchanged; `−∞` returns noise alone at the signal's power.
pub fn add_awgn(f: &SampledSignal, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    add_awgn_stream(f, snr_db, seed, 0)
}

pub fn add_awgn_stream(f: &SampledSignal, snr_db: f64, seed: u64, stream: u64) -> Result<SampledSignal> {
    let pf = f.mean_power();
    if !(pf > 0.0) {
        return Err(MtfaError::ZeroSignal);
    }
    if snr_db == f64::INFINITY {
        return Ok(f.clone());
    }
    let mut rng = rng_stream(seed, stream);
    if snr_db == f64::NEG_INFINITY {
        let n = complex_noise(f.grid.count, pf, &mut rng);
        return Ok(SampledSignal { grid: f.grid, values: n });
    }
    let pn = pf / 10f64.powf(snr_db / 10.0);
    let n = complex_noise(f.grid.count, pn, &mut rng);
    let values = f.values.iter().zip(&n).map(|(a, b)| a + b).collect();
    Ok(SampledSignal { grid: f.grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub psnr_db: f64,
}

impl Metrics {
    pub fn log10_mse(&self) -> f64 {
        self.mse.log10()
    }
}

fn part_psnr(est: impl Iterator<Item = f64>, reference: &[f64], fallback_peak: f64) -> f64 {
    let n = reference.len() as f64;
    let mse: f64 = est.zip(reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let mut peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        // A part that is identically zero has no peak of its own.
        peak = fallback_peak;
    }
    10.0 * (peak * peak / mse).log10()
}

pub fn metrics(estimate: &SampledSignal, reference: &SampledSignal) -> Result<Metrics> {
    if !estimate.grid.same_as(&reference.grid) {
        return Err(MtfaError::GridMismatch("estimate and reference grids differ".into()));
    }
    let n = reference.values.len() as f64;
    let mse = estimate
        .values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n;
    let peak = reference.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let re: Vec<f64> = reference.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = reference.values.iter().map(|v| v.im).collect();
    let p_re = part_psnr(estimate.values.iter().map(|v| v.re), &re, peak);
    let p_im = part_psnr(estimate.values.iter().map(|v| v.im), &im, peak);
    Ok(Metrics { mse, psnr_db: 0.5 * (p_re + p_im) })
}

/// `‖a − b‖/‖b‖` over two equally long slices.
pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

/// Unimodular `c` minimizing `‖a − c·b‖`, i.e. the phase of `⟨a, b⟩`.
pub fn unimodular_alignment(a: &[C64], b: &[C64]) -> C64 {
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    if ip.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        ip / ip.norm()
    }
}

/// Relative ℓ₂ distance after unimodular alignment, and the alignment constant.
pub fn aligned_rel_l2(a: &[C64], b: &[C64]) -> (f64, C64) {
    let c = unimodular_alignment(a, b);
    let cb: Vec<C64> = b.iter().map(|v| v * c).collect();
    (rel_l2(a, &cb), c)
}

/// `|⟨a, b⟩| / (‖a‖‖b‖)`.
pub fn normalized_correlation(a: &[C64], b: &[C64]) -> f64 {
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let na: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    ip.norm() / (na * nb).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_at_known_points() {
        let close = |a: C64, b: C64| (a - b).norm() < 1e-12;
        assert!(close(SignalKind::Lfm.eval(0.0), C64::new(1.0, 0.0)));
        assert!(close(SignalKind::CExp.eval(1.0), C64::new(-1.0, 0.0)));
        assert!(close(SignalKind::GaussLfm.eval(-1.0), C64::new(1.0, 0.0)));
    }

    #[test]
    fn grids() {
        let g = UniformGrid::interval(-5.0, 5.0, 30.0).unwrap();
        assert_eq!(g.count, 300);
        assert_eq!(g.zero_index(), Some(150));
        let s = UniformGrid::symmetric(7, 0.5).unwrap();
        assert_eq!(s.zero_index(), Some(3));
        let c = g.conjugate(1.0).unwrap();
        assert!((c.step - 0.1).abs() < 1e-15);
        assert!(UniformGrid::new(0.0, 0.0, 3).is_err());
        assert!(UniformGrid::new(0.25, 1.0, 3).unwrap().zero_index().is_none());
    }

    #[test]
    fn awgn_sentinels_and_determinism() {
        let g = UniformGrid::interval(-5.0, 5.0, 30.0).unwrap();
        let f = generate(SignalKind::Lfm, g);
        assert_eq!(add_awgn(&f, f64::INFINITY, 1).unwrap(), f);
        let a = add_awgn(&f, 0.0, 42).unwrap();
        let b = add_awgn(&f, 0.0, 42).unwrap();
        assert_eq!(a, b);
        let z = SampledSignal::zeros(g);
        assert!(matches!(add_awgn(&z, 0.0, 1), Err(MtfaError::ZeroSignal)));
    }

    #[test]
    fn realized_snr_at_zero_db() {
        let g = UniformGrid::symmetric(10_000, 0.01).unwrap();
        let f = generate(SignalKind::Lfm, g);
        let y = add_awgn(&f, 0.0, 7).unwrap();
        let pn: f64 = y.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / g.count as f64;
        let snr = 10.0 * (f.mean_power() / pn).log10();
        assert!(snr.abs() <= 0.3, "{snr}");
    }

    #[test]
    fn metric_examples() {
        let g = UniformGrid::interval(-5.0, 5.0, 30.0).unwrap();
        let f = generate(SignalKind::Lfm, g);
        let m = metrics(&f, &f).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.psnr_db, f64::INFINITY);
        let z = SampledSignal::zeros(g);
        assert!((metrics(&z, &f).unwrap().mse - 1.0).abs() < 1e-12);
        let shifted = SampledSignal::from_fn(g, |x| SignalKind::Lfm.eval(x) + 1e-2);
        assert!((metrics(&shifted, &f).unwrap().mse - 1e-4).abs() < 1e-15);
        let other = UniformGrid::interval(-5.0, 5.0, 50.0).unwrap();
        assert!(metrics(&generate(SignalKind::Lfm, other), &f).is_err());
    }
}
