//! Executable residual checks for the marginal, energy, reconstruction, Moyal,
//! symmetry, scaling, translation, modulation and invariance properties.
//!
//! Every check evaluates both sides of a property on the discrete grids and
//! returns a relative ℓ₂ residual after unimodular alignment. Recipes from
//! [`build_case`] target [`property_grid`]: shifts and lag strides land on grid
//! nodes there.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cohen::{cmcd, cmcd_spectral, phi_eval, CmcdConfig, KernelSpec};
use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::cis;
use crate::gmconv::{convolve_direct, from_axes, GmcMatrices};
use crate::lsfilter::filter_from_transfer;
use crate::metaplectic::{mt_to, sqrt_real};
use crate::signals::{aligned_rel_l2, rng_stream, SampledSignal, UniformGrid};
use crate::symplectic::{special, Special, SymplecticMatrix};
use crate::wigner::{cmcd_reconstruct, mwd, MwdConfig, TfGrids};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropertyId {
    TimeMarginal,
    FreqMarginal,
    TimeDelayMarginal,
    FreqShiftMarginal,
    EnergyTime,
    EnergyFreq,
    EnergyDelay,
    Reconstruction,
    Moyal,
    ConjSym,
    TimeReversal,
    Scaling,
    TimeTranslation,
    FreqModulation,
    MetaplecticInvariance,
}

impl PropertyId {
    pub const ALL: [PropertyId; 15] = [
        PropertyId::TimeMarginal,
        PropertyId::FreqMarginal,
        PropertyId::TimeDelayMarginal,
        PropertyId::FreqShiftMarginal,
        PropertyId::EnergyTime,
        PropertyId::EnergyFreq,
        PropertyId::EnergyDelay,
        PropertyId::Reconstruction,
        PropertyId::Moyal,
        PropertyId::ConjSym,
        PropertyId::TimeReversal,
        PropertyId::Scaling,
        PropertyId::TimeTranslation,
        PropertyId::FreqModulation,
        PropertyId::MetaplecticInvariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::TimeMarginal => "time-marginal",
            PropertyId::FreqMarginal => "freq-marginal",
            PropertyId::TimeDelayMarginal => "time-delay-marginal",
            PropertyId::FreqShiftMarginal => "freq-shift-marginal",
            PropertyId::EnergyTime => "energy-time",
            PropertyId::EnergyFreq => "energy-freq",
            PropertyId::EnergyDelay => "energy-delay",
            PropertyId::Reconstruction => "reconstruction",
            PropertyId::Moyal => "moyal",
            PropertyId::ConjSym => "conj-sym",
            PropertyId::TimeReversal => "time-reversal",
            PropertyId::Scaling => "scaling",
            PropertyId::TimeTranslation => "time-translation",
            PropertyId::FreqModulation => "freq-modulation",
            PropertyId::MetaplecticInvariance => "metaplectic-invariance",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| MtfaError::UnknownName(s.to_string()))
    }

    /// `"all"` or a comma-separated list of names.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').filter(|t| !t.trim().is_empty()).map(Self::parse).collect()
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel of a case: a named `φ`, or a kernel built in the `μ(M₅)` domain
/// with spectrum `e^{2πi·s·w + πi·q·|w|²}`.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseKernel {
    Phi(KernelSpec),
    Unimodular { shift: [f64; 2], chirp: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCase {
    pub id: PropertyId,
    pub mwd: MwdConfig,
    pub gmc: GmcMatrices,
    pub kernel: CaseKernel,
    /// Scaling factor.
    pub sigma: f64,
    /// Translation.
    pub tau: f64,
    /// Modulation frequency.
    pub w: f64,
    pub m0: SymplecticMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    /// Unimodular constant applied to the right-hand side.
    pub alignment: C64,
}

/// Grid the recipes are built for: 128 points, step 1/8.
pub fn property_grid() -> UniformGrid {
    UniformGrid::symmetric(128, 0.125).expect("valid grid")
}

/// A chirped Gaussian and a modulated, shifted Gaussian.
pub fn test_signals(grid: UniformGrid) -> [SampledSignal; 2] {
    [
        SampledSignal::from_fn(grid, |x| C64::new((-x * x / 2.0).exp(), 0.0) * cis(PI * 0.3 * x * x)),
        SampledSignal::from_fn(grid, |x| C64::new((-(x - 0.5).powi(2) / 3.0).exp(), 0.0) * cis(2.0 * PI * 0.2 * x)),
    ]
}

fn m2(a: f64, b: f64, c: f64, d: f64) -> SymplecticMatrix {
    SymplecticMatrix::from_2x2(a, b, c, d).expect("recipe matrix is symplectic")
}

/// `[[a, b], [c, d]]` with `|b|` in `range`.
fn random_axis_b(rng: &mut ChaCha8Rng, s: f64, range: std::ops::Range<f64>) -> [f64; 4] {
    let b = rng.random_range(range) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let a = rng.random_range(-s..s);
    let d = rng.random_range(-s..s);
    [a, b, (a * d - 1.0) / b, d]
}

fn random_axis(rng: &mut ChaCha8Rng, s: f64) -> [f64; 4] {
    random_axis_b(rng, s, 0.7..1.4)
}

/// `b` in `[1.5, 2]` and `a, d` in `[0.45, 0.7]`: products of two such
/// matrices keep `b` above 1.5.
fn random_pos(rng: &mut ChaCha8Rng) -> SymplecticMatrix {
    let b = rng.random_range(1.5..2.0);
    let (a, d) = (rng.random_range(0.45..0.7), rng.random_range(0.45..0.7));
    m2(a, b, (a * d - 1.0) / b, d)
}

/// One-dimensional transform that stays well sampled on [`property_grid`],
/// where `N·h² = 2`.
fn random_m(rng: &mut ChaCha8Rng) -> SymplecticMatrix {
    let [a, b, c, d] = random_axis_b(rng, 0.2, 1.8..2.2);
    m2(a, b, c, d)
}

fn random_gmc(rng: &mut ChaCha8Rng) -> GmcMatrices {
    let mut m = || from_axes(random_axis(rng, 0.2), random_axis(rng, 0.2)).expect("diagonal blocks");
    GmcMatrices::new(m(), m(), m()).expect("B blocks invertible")
}

fn pi3() -> SymplecticMatrix {
    special(Special::PI, 1).expect("PI")
}

fn cw(rng: &mut ChaCha8Rng) -> KernelSpec {
    KernelSpec::ChoiWilliams { sigma: rng.random_range(1.0..10.0) }
}

/// Axis-diagonal `M` with axes `[[f, 1], [−1, 0]]`, so `F = diag(f₀, f₁)`.
fn f_diag(f0: f64, f1: f64) -> SymplecticMatrix {
    from_axes([f0, 1.0, -1.0, 0.0], [f1, 1.0, -1.0, 0.0]).expect("diagonal blocks")
}

/// Concrete matrices and kernel satisfying the constraints of `id`.
pub fn build_case(id: PropertyId, seed: u64) -> PropertyCase {
    let mut rng = rng_stream(seed, 1000 + id as u64);
    let rng = &mut rng;
    let h = property_grid().step;
    let id_m = SymplecticMatrix::identity(1);
    let mut case = PropertyCase {
        id,
        mwd: MwdConfig::classical(),
        gmc: GmcMatrices::classical(),
        kernel: CaseKernel::Phi(KernelSpec::Wigner),
        sigma: 1.0,
        tau: 0.0,
        w: 0.0,
        m0: id_m.clone(),
    };
    let cfg = |m, m1, m2, m3| MwdConfig::new(m, m1, m2, m3).expect("det B(M) != 0");
    match id {
        PropertyId::TimeMarginal | PropertyId::EnergyTime => {
            let m = random_m(rng);
            let (_, b, _, d) = m.abcd();
            let m1 = random_m(rng);
            let m2_ = if id == PropertyId::EnergyTime { m1.clone() } else { random_m(rng) };
            case.mwd = cfg(m, m1, m2_, pi3());
            let (a4, a5) = (rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
            case.gmc = GmcMatrices::new(f_diag(a4, -d / b), f_diag(a5, 0.0), random_gmc(rng).m6).expect("recipe");
        }
        PropertyId::FreqMarginal | PropertyId::EnergyFreq => {
            // A₃ = B₃ = 1, D₃ = 1/2, |b| = A₃²·|D₃|.
            let b = if rng.random::<bool>() { 0.5 } else { -0.5 };
            let d = rng.random_range(-0.5..0.5);
            let m1 = random_m(rng);
            case.mwd = cfg(m2(0.0, b, -1.0 / b, d), m1.clone(), m1, pi3());
            let f44 = rng.random_range(-0.2..0.2);
            case.gmc = GmcMatrices::new(f_diag(0.0, f44), SymplecticMatrix::j(2), random_gmc(rng).m6).expect("recipe");
        }
        PropertyId::TimeDelayMarginal | PropertyId::FreqShiftMarginal => {
            case.mwd = cfg(random_m(rng), random_m(rng), random_m(rng), pi3());
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
        }
        PropertyId::EnergyDelay => {
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let d = rng.random_range(-0.5..0.5);
            let c3 = if rng.random::<bool>() { 0.5 } else { 1.0 };
            let b3 = rng.random_range(-1.0..1.0);
            let m1 = random_m(rng);
            case.mwd = cfg(m2(0.0, b, -1.0 / b, d), m1.clone(), m1, m2(b3 + 1.0 / c3, b3, c3, c3));
            case.gmc = random_gmc(rng);
        }
        PropertyId::Reconstruction => {
            let d3 = if rng.random::<bool>() { 0.0 } else { 0.5 };
            case.mwd = cfg(random_m(rng), random_m(rng), random_m(rng), m2(0.0, 1.0, -1.0, d3));
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(KernelSpec::ChoiWilliams { sigma: rng.random_range(10.0..20.0) });
        }
        PropertyId::Moyal => {
            // |B₃·C₃| = 1.
            case.mwd = cfg(random_m(rng), random_m(rng), random_m(rng), m2(1.0, 1.0, -1.0, 0.0));
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Unimodular {
                shift: [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
                chirp: rng.random_range(-0.05..0.05),
            };
        }
        PropertyId::ConjSym | PropertyId::TimeReversal => {
            case.mwd = cfg(random_m(rng), random_m(rng), random_m(rng), pi3());
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
        }
        PropertyId::MetaplecticInvariance => {
            case.mwd = cfg(random_m(rng), random_pos(rng), random_pos(rng), pi3());
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
            case.m0 = random_pos(rng);
        }
        PropertyId::Scaling => {
            case.sigma = if seed % 2 == 0 { 0.5 } else { 2.0 };
            // B₁, B₂, B₁·σ and B₂·σ all stay above 1.5.
            let mut m12 = || {
                let [a, b, _, d] = random_axis_b(rng, 0.2, 1.8..2.2);
                let b = b * (1.0 / case.sigma).max(1.0);
                m2(a, b, (a * d - 1.0) / b, d)
            };
            let (m1, m2_) = (m12(), m12());
            case.mwd = cfg(random_m(rng), m1, m2_, pi3());
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
        }
        PropertyId::TimeTranslation => {
            // M₃ = [[0, 1], [−1, 1]] has D₃ = B₃ and keeps every argument of
            // the distribution on a grid node. With t = τ·A₁ the distribution
            // moves by t·(D₃ − C₃) = 2t in x and by t·(A₃ − B₃)·A = −t·A = j·Δu
            // in u; t is a multiple of the lag step 2h.
            let m3 = m2(0.0, 1.0, -1.0, 1.0);
            let k = rng.random_range(1..3) as f64 * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let t = 2.0 * k * h;
            let delta = -1.0;
            let [_, b, _, d] = random_axis_b(rng, 0.2, 1.8..2.2);
            let du = TfGrids::for_config(&property_grid(), &cfg(m2(0.0, b, -1.0 / b, d), id_m.clone(), id_m.clone(), m3.clone()))
                .expect("grids")
                .u
                .step;
            let j = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let a = j * du / (t * delta);
            // C₁ = 0: the y-linear phase τ·(C₁D₃ − C₂C₃) is not covered by
            // the closed form otherwise.
            let a1 = 1.0;
            let b1 = rng.random_range(1.8..2.2) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let m1 = m2(a1, b1, 0.0, 1.0 / a1);
            case.mwd = cfg(m2(a, b, (a * d - 1.0) / b, d), m1.clone(), m1, m3);
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
            case.tau = t / a1;
        }
        PropertyId::FreqModulation => {
            // M₁ = M₂; x moves by w·B₁ = k·h and u by w·D₁·b = j·Δu. Small |D₁|
            // keeps the chirp of μ(M₁)f resolvable on the lag grid.
            let m = random_m(rng);
            let (_, b, _, _) = m.abcd();
            let grids = TfGrids::for_config(&property_grid(), &cfg(m.clone(), id_m.clone(), id_m.clone(), pi3()))
                .expect("grids");
            let b1 = rng.random_range(1.8..2.2);
            let k = rng.random_range(3..6) as f64;
            let w = k * h / b1;
            let j = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let d1 = j * grids.u.step / (w * b);
            let a1 = rng.random_range(0.8..1.2);
            let m1 = m2(a1, b1, (a1 * d1 - 1.0) / b1, d1);
            case.mwd = cfg(m, m1.clone(), m1, pi3());
            case.gmc = random_gmc(rng);
            case.kernel = CaseKernel::Phi(cw(rng));
            case.w = w;
        }
    }
    case
}

fn quad(f: &[[f64; 2]; 2], z: [f64; 2]) -> f64 {
    z[0] * (f[0][0] * z[0] + f[0][1] * z[1]) + z[1] * (f[1][0] * z[0] + f[1][1] * z[1])
}

fn chirp(f: &[[f64; 2]; 2], z: [f64; 2], sign: f64) -> C64 {
    cis(sign * PI * quad(f, z))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + b.abs())
}

fn violated(what: &str) -> MtfaError {
    MtfaError::ConstraintViolated(what.to_string())
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(violated(what))
    }
}

fn phi_on_axis(k: &CaseKernel, v_axis: bool) -> bool {
    let CaseKernel::Phi(spec) = k else { return false };
    [-3.0, -0.7, 0.0, 0.4, 2.5].iter().all(|&t| {
        let p = if v_axis { phi_eval(spec, t, 0.0) } else { phi_eval(spec, 0.0, t) };
        (p - C64::new(1.0, 0.0)).norm() < TOL
    })
}

/// Numerical check of the constraints attached to `case.id`.
pub fn check_constraints(case: &PropertyCase) -> Result<()> {
    let (a, b, _, d) = case.mwd.m.abcd();
    let (a1, b1, c1, _) = case.mwd.m1.abcd();
    let (a2, b2, c2, _) = case.mwd.m2.abcd();
    let (a3, b3, c3, d3) = case.mwd.m3.abcd();
    let f4 = case.gmc.f_block(4);
    let f5 = case.gmc.f_block(5);
    match case.id {
        PropertyId::TimeMarginal | PropertyId::EnergyTime => {
            require(f4[0][1] == 0.0 && f4[1][0] == 0.0 && f5[0][1] == 0.0 && f5[1][0] == 0.0, "F_j2 = F_j3 = 0")?;
            require(close(f4[1][1], -d / b), "F44 = -D B^-1")?;
            require(f5[1][1] == 0.0, "F54 = 0")?;
            require(phi_on_axis(&case.kernel, true), "phi(v, 0) = 1")?;
            if case.id == PropertyId::EnergyTime {
                require(close(a3, b3) && case.mwd.m1 == case.mwd.m2, "A3 = B3 and M1 = M2")?;
            }
        }
        PropertyId::FreqMarginal | PropertyId::EnergyFreq => {
            require(a == 0.0, "A = 0")?;
            require(f4[0][0] == 0.0 && f4[0][1] == 0.0 && f4[1][0] == 0.0, "F41 = F42 = F43 = 0")?;
            require(a3 != 0.0, "det A3 != 0")?;
            require(case.gmc.m5 == SymplecticMatrix::j(2), "M5 stands in for the zero matrix")?;
            require(phi_on_axis(&case.kernel, false), "phi(0, z) = 1")?;
            if case.id == PropertyId::EnergyFreq {
                let (p1, p2) = freq_marginal_factors(case)?;
                let l = p1.compose(&case.mwd.m1)?;
                let r = p2.compose(&case.mwd.m2)?;
                require((l.matrix() - r.matrix()).amax() < TOL, "P1 M1 = P2 M2")?;
            }
        }
        PropertyId::EnergyDelay => {
            require(a == 0.0 && close(c3, d3) && case.mwd.m1 == case.mwd.m2, "A = 0, C3 = D3, M1 = M2")?;
            require(case.kernel == CaseKernel::Phi(KernelSpec::Wigner), "phi = 1")?;
        }
        PropertyId::Reconstruction => require(a3 == 0.0, "A3 = 0")?,
        PropertyId::Moyal => require(matches!(case.kernel, CaseKernel::Unimodular { .. }), "|mu(M5) Pi| = 1")?,
        PropertyId::ConjSym => {
            let CaseKernel::Phi(spec) = &case.kernel else { return Err(violated("real kernel")) };
            let ok = [(0.3, -1.2), (2.0, 0.7), (-1.5, -0.4)].iter().all(|&(v, z)| {
                let p = phi_eval(spec, v, z);
                p.im.abs() < TOL && (p - phi_eval(spec, -v, -z)).norm() < TOL
            });
            require(ok, "real Pi")?;
        }
        PropertyId::TimeTranslation => {
            require(close(a1, a2) && b1 != 0.0 && b2 != 0.0, "A1 = A2, B1, B2 != 0")?;
            require((c1 * d3 - c2 * b3).abs() < TOL, "B1'C1B1^-1 D3 - B2'C2B2^-1 B3 = 0")?;
        }
        PropertyId::FreqModulation => require(close(b1, b2), "B1 = B2")?,
        _ => {}
    }
    Ok(())
}

fn config(case: &PropertyCase, mwd: &MwdConfig, grid: &UniformGrid) -> Result<CmcdConfig> {
    match &case.kernel {
        CaseKernel::Phi(spec) => CmcdConfig::new(mwd.clone(), case.gmc.clone(), grid, spec),
        CaseKernel::Unimodular { shift, chirp: q } => {
            let grids = TfGrids::for_config(grid, mwd)?;
            let pi = filter_from_transfer(&grids.x, &grids.u, &case.gmc.m5, |p| {
                cis(2.0 * PI * (shift[0] * p[0] + shift[1] * p[1]) + PI * q * (p[0] * p[0] + p[1] * p[1]))
            })?;
            CmcdConfig::with_pi(mwd.clone(), case.gmc.clone(), grids, pi)
        }
    }
}

fn with_m12(cfg: &MwdConfig, m1: SymplecticMatrix, m2: SymplecticMatrix) -> Result<MwdConfig> {
    MwdConfig::new(cfg.m.clone(), m1, m2, cfg.m3.clone())
}

/// `μ(M)f` on the signal grid, the way the distribution computes it.
fn transform(f: &SampledSignal, m: &SymplecticMatrix) -> Result<Vec<C64>> {
    if *m == SymplecticMatrix::identity(1) {
        return Ok(f.values.clone());
    }
    Ok(mt_to(f, m, f.grid)?.values)
}

/// Trigonometric interpolation of `f` at `t`, zero outside the grid span.
fn trig_interp(coef: &[C64], grid: &UniformGrid, t: f64) -> C64 {
    if t < grid.start - 1e-12 || t > grid.end() + 1e-12 {
        return C64::new(0.0, 0.0);
    }
    let n = coef.len();
    let period = n as f64 * grid.step;
    let r = (t - grid.start) / period;
    coef.iter()
        .enumerate()
        .map(|(k, c)| {
            let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            c * cis(2.0 * PI * m * r)
        })
        .sum()
}

/// `f(map(x))` by trigonometric interpolation.
pub fn resample(f: &SampledSignal, map: impl Fn(f64) -> f64) -> SampledSignal {
    let n = f.values.len();
    let coef: Vec<C64> = (0..n)
        .map(|k| {
            let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            f.values.iter().enumerate().map(|(j, v)| v * cis(-2.0 * PI * m * j as f64 / n as f64)).sum::<C64>()
                / n as f64
        })
        .collect();
    SampledSignal::from_fn(f.grid, |x| trig_interp(&coef, &f.grid, map(x)))
}

/// Bilinear sample of a field, zero outside.
fn bilinear(w: &TfDistribution, x: f64, u: f64) -> C64 {
    let tx = (x - w.xgrid.start) / w.xgrid.step;
    let tu = (u - w.ugrid.start) / w.ugrid.step;
    let (nx, nu) = w.shape();
    let snap = |t: f64| if (t - t.round()).abs() < 1e-9 { t.round() } else { t };
    let (tx, tu) = (snap(tx), snap(tu));
    if tx < 0.0 || tu < 0.0 || tx > (nx - 1) as f64 || tu > (nu - 1) as f64 {
        return C64::new(0.0, 0.0);
    }
    let (i, j) = (tx.floor() as usize, tu.floor() as usize);
    let (fx, fu) = (tx - i as f64, tu - j as f64);
    let at = |a: usize, b: usize| if a < nx && b < nu { w.at(a, b) } else { C64::new(0.0, 0.0) };
    at(i, j) * (1.0 - fx) * (1.0 - fu)
        + at(i + 1, j) * fx * (1.0 - fu)
        + at(i, j + 1) * (1.0 - fx) * fu
        + at(i + 1, j + 1) * fx * fu
}

fn aligned(lhs: &[C64], rhs: &[C64]) -> Residual {
    let (value, alignment) = aligned_rel_l2(lhs, rhs);
    Residual { value, alignment }
}

fn scalar(lhs: C64, rhs: C64) -> Residual {
    aligned(&[lhs], &[rhs])
}

fn zero_index(g: &UniformGrid) -> Result<usize> {
    g.zero_index().ok_or_else(|| MtfaError::InvalidGrid("grid lacks 0".into()))
}

/// `u`-marginal of the chirp-compensated distribution, one value per `x`.
fn time_marginal(c: &TfDistribution, gmc: &GmcMatrices) -> Vec<C64> {
    let f6 = gmc.f_block(6);
    (0..c.xgrid.count)
        .map(|i| {
            let x = c.xgrid.point(i);
            (0..c.ugrid.count).map(|j| c.at(i, j) * chirp(&f6, [x, c.ugrid.point(j)], 1.0)).sum::<C64>()
                * c.ugrid.step
        })
        .collect()
}

fn freq_marginal(c: &TfDistribution, gmc: &GmcMatrices) -> Vec<C64> {
    let f6 = gmc.f_block(6);
    (0..c.ugrid.count)
        .map(|j| {
            let u = c.ugrid.point(j);
            (0..c.xgrid.count).map(|i| c.at(i, j) * chirp(&f6, [c.xgrid.point(i), u], 1.0)).sum::<C64>()
                * c.xgrid.step
        })
        .collect()
}

/// The two symplectic factors applied to `M₁` and `M₂` in the frequency marginal.
fn freq_marginal_factors(case: &PropertyCase) -> Result<(SymplecticMatrix, SymplecticMatrix)> {
    let (_, b, _, _) = case.mwd.m.abcd();
    let (a3, b3, _, _) = case.mwd.m3.abcd();
    Ok((
        SymplecticMatrix::from_2x2(0.0, b / a3, -a3 / b, 1.0)?,
        SymplecticMatrix::from_2x2(0.0, b / b3, -b3 / b, a3 / b3)?,
    ))
}

/// The generalized convolution written out at one output point, with `Π`
/// read from the lag grid.
fn gmc_point(w: &TfDistribution, pi: &TfDistribution, gmc: &GmcMatrices, i: usize, j: usize) -> C64 {
    let (f4, f5, f6) = (gmc.f_block(4), gmc.f_block(5), gmc.f_block(6));
    let (nx, nu) = w.shape();
    let (x, u) = (w.xgrid.point(i), w.ugrid.point(j));
    let (ox, ou) = (nx as i64 - 1, nu as i64 - 1);
    let mut s = C64::new(0.0, 0.0);
    for p in 0..nx {
        for q in 0..nu {
            let (pp, qq) = (w.xgrid.point(p), w.ugrid.point(q));
            let li = (i as i64 - p as i64 + ox) as usize;
            let lj = (j as i64 - q as i64 + ou) as usize;
            s += w.at(p, q) * chirp(&f4, [pp, qq], 1.0) * chirp(&f5, [x - pp, u - qq], 1.0) * pi.at(li, lj);
        }
    }
    s * w.cell() * chirp(&f6, [x, u], -1.0)
}

/// Both sides of the property on `f` (and `g` for Moyal).
pub fn check_property(case: &PropertyCase, f: &SampledSignal, g: Option<&SampledSignal>) -> Result<Residual> {
    check_constraints(case)?;
    let grid = f.grid;
    let cfg = config(case, &case.mwd, &grid)?;
    let (_, b, _, d) = case.mwd.m.abcd();
    let (a3, b3, c3, d3) = case.mwd.m3.abcd();
    let sqrt_mb = sqrt_real(-b);
    Ok(match case.id {
        PropertyId::TimeMarginal | PropertyId::EnergyTime => {
            let c = cmcd(f, &cfg)?;
            let lhs = time_marginal(&c, &case.gmc);
            let (g1, g2) = (transform(f, &case.mwd.m1)?, transform(f, &case.mwd.m2)?);
            let lin = grid.lin();
            let f41 = case.gmc.f_block(4)[0][0];
            let rhs: Vec<C64> = grid
                .points()
                .iter()
                .map(|&x| sqrt_mb * cis(PI * f41 * x * x) * lin.interp(&g1, x * b3) * lin.interp(&g2, x * a3).conj())
                .collect();
            if case.id == PropertyId::TimeMarginal {
                aligned(&lhs, &rhs)
            } else {
                let e: C64 = grid.points().iter().zip(&lhs).map(|(&x, v)| v * cis(-PI * f41 * x * x)).sum::<C64>()
                    * grid.step;
                scalar(e, sqrt_mb / b3.abs() * f.energy())
            }
        }
        PropertyId::FreqMarginal | PropertyId::EnergyFreq => {
            let c = cmcd(f, &cfg)?;
            let lhs = freq_marginal(&c, &case.gmc);
            let (p1, p2) = freq_marginal_factors(case)?;
            let h1 = mt_to(&SampledSignal::new(grid, transform(f, &case.mwd.m1)?)?, &p1, c.ugrid)?;
            let h2 = mt_to(&SampledSignal::new(grid, transform(f, &case.mwd.m2)?)?, &p2, c.ugrid)?;
            let f44 = case.gmc.f_block(4)[1][1];
            let k = a3.abs() * d3.abs() / sqrt_mb;
            let us = c.ugrid.points();
            let rhs: Vec<C64> = us
                .iter()
                .enumerate()
                .map(|(j, &u)| k * cis(PI * (d / b + f44) * u * u) * h1.values[j] * h2.values[j].conj())
                .collect();
            if case.id == PropertyId::FreqMarginal {
                aligned(&lhs, &rhs)
            } else {
                let e: C64 = us.iter().zip(&lhs).map(|(&u, v)| v * cis(-PI * (d / b + f44) * u * u)).sum::<C64>()
                    * c.ugrid.step;
                scalar(e, k * f.energy())
            }
        }
        PropertyId::TimeDelayMarginal => {
            let c = cmcd_spectral(f, &cfg)?;
            let w = mwd(f, &cfg.mwd, &cfg.grids)?;
            let i0 = zero_index(&c.xgrid)?;
            let lhs = c.row(i0).to_vec();
            let rhs: Vec<C64> = (0..c.ugrid.count).map(|j| gmc_point(&w, &cfg.pi, &case.gmc, i0, j)).collect();
            aligned(&lhs, &rhs)
        }
        PropertyId::FreqShiftMarginal => {
            let c = cmcd_spectral(f, &cfg)?;
            let w = mwd(f, &cfg.mwd, &cfg.grids)?;
            let j0 = zero_index(&c.ugrid)?;
            let lhs = c.column(j0);
            let rhs: Vec<C64> = (0..c.xgrid.count).map(|i| gmc_point(&w, &cfg.pi, &case.gmc, i, j0)).collect();
            aligned(&lhs, &rhs)
        }
        PropertyId::EnergyDelay => {
            let c = cmcd(f, &cfg)?;
            let v = c.at(zero_index(&c.xgrid)?, zero_index(&c.ugrid)?);
            scalar(v, C64::new(f.energy() / c3.abs(), 0.0))
        }
        PropertyId::Reconstruction => {
            let c = cmcd(f, &cfg)?;
            let back = cmcd_reconstruct(&c, &cfg.pi, &case.mwd, &case.gmc, &grid, 1e-9)?;
            let g2 = transform(f, &case.mwd.m2)?;
            let want = f.scale(g2[zero_index(&grid)?].conj());
            aligned(&back.values, &want.values)
        }
        PropertyId::Moyal => {
            let g = g.ok_or_else(|| MtfaError::DimensionMismatch("Moyal needs a second signal".into()))?;
            let cf = cmcd(f, &cfg)?;
            let cg = cmcd(g, &cfg)?;
            let lhs: C64 = cf.values.iter().zip(&cg.values).map(|(a, b)| a * b.conj()).sum::<C64>() * cf.cell();
            let ip: C64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum::<C64>() * grid.step;
            let k = case.gmc.m5.det_b().abs() / (b3.abs() * c3.abs());
            scalar(lhs, C64::new(k * ip.norm_sqr(), 0.0))
        }
        PropertyId::ConjSym => {
            let fc = SampledSignal::new(grid, f.values.iter().map(|v| v.conj()).collect())?;
            let lhs = cmcd(&fc, &cfg)?;
            let hat2 = |m: &SymplecticMatrix| hat(m);
            let mw = MwdConfig::new(hat2(&case.mwd.m), hat2(&case.mwd.m1), hat2(&case.mwd.m2), case.mwd.m3.clone())?;
            let gm = GmcMatrices::new(hat(&case.gmc.m4), hat(&case.gmc.m5), hat(&case.gmc.m6))?;
            let hcase = PropertyCase { mwd: mw.clone(), gmc: gm, ..case.clone() };
            let rhs = cmcd(f, &config(&hcase, &mw, &grid)?)?;
            let rhs: Vec<C64> = rhs.values.iter().map(|v| v.conj()).collect();
            aligned(&lhs.values, &rhs)
        }
        PropertyId::TimeReversal => {
            let fr = resample(f, |x| -x);
            let lhs = cmcd(&fr, &cfg)?;
            let mw = with_m12(&case.mwd, case.mwd.m1.neg(), case.mwd.m2.neg())?;
            let rhs = cmcd(f, &config(case, &mw, &grid)?)?;
            aligned(&lhs.values, &rhs.values)
        }
        PropertyId::Scaling => scaling_residual(case, f, 2.0)?,
        PropertyId::TimeTranslation => {
            let ft = resample(f, |x| x - case.tau);
            let lhs = cmcd(&ft, &cfg)?;
            let w = mwd(f, &case.mwd, &cfg.grids)?;
            let shifted = translated(&w, case)?;
            let rhs = convolve_direct(&shifted, &cfg.pi, &case.gmc)?;
            aligned(&lhs.values, &rhs.values)
        }
        PropertyId::FreqModulation => {
            let wv = case.w;
            let fm = SampledSignal::from_fn(grid, |x| {
                f.values[grid_index(&grid, x)] * cis(2.0 * PI * x * wv)
            });
            let lhs = cmcd(&fm, &cfg)?;
            let w = mwd(f, &case.mwd, &cfg.grids)?;
            let shifted = modulated(&w, case)?;
            let rhs = convolve_direct(&shifted, &cfg.pi, &case.gmc)?;
            aligned(&lhs.values, &rhs.values)
        }
        PropertyId::MetaplecticInvariance => {
            let f0 = SampledSignal::new(grid, transform(f, &case.m0)?)?;
            let lhs = cmcd(&f0, &cfg)?;
            let mw = with_m12(&case.mwd, case.mwd.m1.compose(&case.m0)?, case.mwd.m2.compose(&case.m0)?)?;
            let rhs = cmcd(f, &config(case, &mw, &grid)?)?;
            aligned(&lhs.values, &rhs.values)
        }
    })
}

fn grid_index(g: &UniformGrid, x: f64) -> usize {
    ((x - g.start) / g.step).round() as usize
}

/// `[[A, −B], [−C, D]]`.
pub fn hat(m: &SymplecticMatrix) -> SymplecticMatrix {
    let n = m.n();
    let mut e = m.matrix().clone();
    for i in 0..2 * n {
        for j in 0..2 * n {
            if (i < n) != (j < n) {
                e[(i, j)] = -e[(i, j)];
            }
        }
    }
    SymplecticMatrix::validate(e, 1e-9).expect("sign flip keeps the symplectic form")
}

/// Scaling check with the right-hand side multiplied by `σ^{−exponent}`.
pub fn scaling_residual(case: &PropertyCase, f: &SampledSignal, exponent: f64) -> Result<Residual> {
    let grid = f.grid;
    let cfg = config(case, &case.mwd, &grid)?;
    let s = case.sigma;
    let fs = resample(f, |x| s * x);
    let lhs = cmcd(&fs, &cfg)?;
    let ss = SymplecticMatrix::from_2x2(1.0 / s, 0.0, 0.0, s)?;
    let mw = with_m12(&case.mwd, case.mwd.m1.compose(&ss)?, case.mwd.m2.compose(&ss)?)?;
    let rhs = cmcd(f, &config(case, &mw, &grid)?)?;
    let k = s.powf(-exponent);
    let rhs: Vec<C64> = rhs.values.iter().map(|v| v * k).collect();
    Ok(aligned(&lhs.values, &rhs))
}

/// Phase-compensated, shifted distribution of the translation property.
fn translated(w: &TfDistribution, case: &PropertyCase) -> Result<TfDistribution> {
    let (a, b, c, _) = case.mwd.m.abcd();
    let (a1, b1, c1, d1) = case.mwd.m1.abcd();
    let (_, b2, c2, d2) = case.mwd.m2.abcd();
    let (a3, b3, c3, d3) = case.mwd.m3.abcd();
    let t = case.tau;
    let _ = b;
    let e = a3 - b3;
    let k0 = PI * t * (1.0 / b1 - 1.0 / b2) * a1 * t
        - PI * t * a1 * (d1 / b1 - d2 / b2) * a1 * t
        - PI * t * a1 * e * c * a * e * a1 * t;
    Ok(w.map(|x, u, _| {
        let ph = k0 + 2.0 * PI * t * c1 * b3 * x - 2.0 * PI * t * c2 * a3 * x + 2.0 * PI * t * a1 * e * c * u;
        cis(ph) * bilinear(w, x - t * a1 * (d3 - c3), u - t * a1 * e * a)
    }))
}

/// Phase-compensated, shifted distribution of the modulation property.
fn modulated(w: &TfDistribution, case: &PropertyCase) -> Result<TfDistribution> {
    let (a, b, c, d) = case.mwd.m.abcd();
    let (_, b1, _, d1) = case.mwd.m1.abcd();
    let (_, b2, _, d2) = case.mwd.m2.abcd();
    let (a3, b3, c3, d3) = case.mwd.m3.abcd();
    let wv = case.w;
    let e = a3 - b3;
    let k = c3 * d2 - d3 * d1;
    let k0 = -PI * wv * (b1 * d1 - b2 * d2) * wv - PI * wv * k * b * d * k * wv - PI * wv * b1 * e * c * a * e * b1 * wv
        + 2.0 * PI * wv * b1 * e * b * c * k * wv;
    Ok(w.map(|x, u, _| {
        let ph = k0 + 2.0 * PI * x * (b3 * d1 - a3 * d2) * wv - 2.0 * PI * u * d * k * wv + 2.0 * PI * wv * b1 * e * c * u;
        let xs = x - wv * b1 * (d3 - c3);
        let us = u + wv * d2 * c3 * b - wv * d1 * d3 * b - wv * b1 * e * a;
        cis(ph) * bilinear(w, xs, us)
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyRow {
    pub property: String,
    pub seed: u64,
    pub signal: usize,
    pub residual: f64,
    /// `arg c` of the unimodular alignment constant.
    pub alignment_phase: f64,
    /// `|c| − 1`.
    pub alignment_modulus_error: f64,
}

/// Every id × seed × test signal on [`property_grid`].
pub fn run_properties(ids: &[PropertyId], seeds: u64) -> Result<Vec<PropertyRow>> {
    let sig = test_signals(property_grid());
    let mut rows = Vec::new();
    for &id in ids {
        for seed in 0..seeds {
            let case = build_case(id, seed);
            for k in 0..2 {
                let r = check_property(&case, &sig[k], Some(&sig[1 - k]))?;
                rows.push(PropertyRow {
                    property: id.name().to_string(),
                    seed,
                    signal: k,
                    residual: r.value,
                    alignment_phase: r.alignment.arg(),
                    alignment_modulus_error: r.alignment.norm() - 1.0,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in PropertyId::ALL {
            assert_eq!(PropertyId::parse(id.name()).unwrap(), id);
        }
        assert_eq!(PropertyId::parse_list("all").unwrap().len(), 15);
        assert!(PropertyId::parse("nope").is_err());
    }

    #[test]
    fn recipes_satisfy_constraints() {
        for id in PropertyId::ALL {
            for seed in 0..5 {
                check_constraints(&build_case(id, seed)).unwrap_or_else(|e| panic!("{id} seed {seed}: {e}"));
            }
        }
    }

    #[test]
    fn time_marginal_recipe_blocks() {
        let c = build_case(PropertyId::TimeMarginal, 3);
        let f4 = c.gmc.f_block(4);
        assert_eq!((f4[0][1], f4[1][0]), (0.0, 0.0));
        let CaseKernel::Phi(spec) = &c.kernel else { panic!() };
        assert_eq!(phi_eval(spec, 1.7, 0.0), C64::new(1.0, 0.0));
    }

    #[test]
    fn invariance_under_identity_is_exact() {
        let mut c = build_case(PropertyId::MetaplecticInvariance, 0);
        c.m0 = SymplecticMatrix::identity(1);
        let f = &test_signals(property_grid())[0];
        assert_eq!(check_property(&c, f, None).unwrap().value, 0.0);
    }

    #[test]
    fn time_reversal_on_even_signal() {
        let mut c = build_case(PropertyId::TimeReversal, 1);
        let m1 = m2(0.0, 1.0, -1.0, 0.0);
        c.mwd = MwdConfig::new(c.mwd.m.clone(), m1.clone(), m1, pi3()).unwrap();
        let f = SampledSignal::from_fn(property_grid(), |x| C64::new((-PI * x * x).exp(), 0.0));
        let r = check_property(&c, &f, None).unwrap();
        assert!(r.value <= 1e-6, "{}", r.value);
    }

    #[test]
    fn scaling_identity_factor() {
        let mut c = build_case(PropertyId::Scaling, 0);
        c.sigma = 1.0;
        let f = &test_signals(property_grid())[1];
        assert!(check_property(&c, f, None).unwrap().value <= 1e-6);
    }

    #[test]
    fn violated_constraint_is_reported() {
        let mut c = build_case(PropertyId::Reconstruction, 0);
        c.mwd = MwdConfig::classical();
        let f = &test_signals(property_grid())[0];
        assert!(matches!(check_property(&c, f, None), Err(MtfaError::ConstraintViolated(_))));
    }

    #[test]
    fn scaling_holds_with_first_power() {
        let sig = test_signals(property_grid());
        for seed in 0..2 {
            let c = build_case(PropertyId::Scaling, seed);
            for f in &sig {
                assert!(scaling_residual(&c, f, 1.0).unwrap().value <= 1e-2);
                assert!(scaling_residual(&c, f, 2.0).unwrap().value >= 0.4);
            }
        }
    }

    #[test]
    fn moyal_gauss_lfm_small_grid() {
        let grid = UniformGrid::symmetric(64, 1.0 / 16.0).unwrap();
        let f = crate::signals::generate(crate::signals::SignalKind::GaussLfm, grid);
        // The chirp fills this window, so a kernel that spreads would push
        // energy off the grid: M₅ = J with a flat unimodular spectrum.
        let mut case = build_case(PropertyId::Moyal, 0);
        let m2_ = m2(0.1, 0.25, (0.02 - 1.0) / 0.25, 0.2);
        case.mwd = MwdConfig::new(case.mwd.m.clone(), SymplecticMatrix::identity(1), m2_, case.mwd.m3.clone()).unwrap();
        case.gmc = GmcMatrices::new(case.gmc.m4.clone(), SymplecticMatrix::j(2), case.gmc.m6.clone()).unwrap();
        case.kernel = CaseKernel::Unimodular { shift: [0.0, 0.0], chirp: 0.0 };
        let cfg = config(&case, &case.mwd, &grid).unwrap();
        let c = cmcd(&f, &cfg).unwrap();
        let lhs: f64 = c.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * c.cell();
        let (_, b3, c3, _) = case.mwd.m3.abcd();
        let rhs = case.gmc.m5.det_b().abs() / (b3.abs() * c3.abs()) * f.energy().powi(2);
        assert!((lhs / rhs - 1.0).abs() <= 1e-2, "{}", lhs / rhs);
    }

    #[test]
    fn resample_is_exact_on_nodes() {
        let f = &test_signals(property_grid())[0];
        let r = resample(f, |x| x);
        assert!(crate::signals::rel_l2(&r.values, &f.values) < 1e-10);
    }
}
