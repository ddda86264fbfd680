//! Metaplectic Wigner distributions, classical Wigner inversion and the
//! reconstruction of a signal from its convolution-type distribution.
//!
//! The distribution of `f` under `(M, M₁, M₂, M₃)` is
//! `μ_{y,2}(M) 𝔗_{M₃ℐ} (μ(M₁)f ⊗ conj μ(M₂)f)`, where the coordinate operator
//! evaluates the tensor field at `(x, y)·M₃ℐ = (x·B₃ + y·D₃, x·A₃ + y·C₃)`.
//! The classical Wigner distribution is the configuration `(J, I, I, PI)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::{fft2, Lin};
use crate::gmconv::GmcMatrices;
use crate::metaplectic::{abcd_of, adjoint_1d, chirp, forward_1d, sqrt_real};
use crate::signals::{SampledSignal, UniformGrid};
use crate::symplectic::{special, Special, SymplecticMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct MwdConfig {
    pub m: SymplecticMatrix,
    pub m1: SymplecticMatrix,
    pub m2: SymplecticMatrix,
    pub m3: SymplecticMatrix,
}

impl MwdConfig {
    pub fn new(m: SymplecticMatrix, m1: SymplecticMatrix, m2: SymplecticMatrix, m3: SymplecticMatrix) -> Result<Self> {
        for (name, mat) in [("M", &m), ("M1", &m1), ("M2", &m2), ("M3", &m3)] {
            if mat.n() != 1 {
                return Err(MtfaError::DimensionMismatch(format!("{name} must be 2x2")));
            }
        }
        if m.det_b() == 0.0 {
            return Err(MtfaError::SingularBBlocks("B of M (frequency axis) is zero".into()));
        }
        Ok(Self { m, m1, m2, m3 })
    }

    /// `(J, I, I, PI)`: the classical Wigner distribution.
    pub fn classical() -> Self {
        Self {
            m: SymplecticMatrix::j(1),
            m1: SymplecticMatrix::identity(1),
            m2: SymplecticMatrix::identity(1),
            m3: special(Special::PI, 1).expect("PI is symplectic"),
        }
    }

    pub fn family(&self) -> MwdFamily {
        let j = SymplecticMatrix::j(1);
        let id = SymplecticMatrix::identity(1);
        let pi = special(Special::PI, 1).expect("PI is symplectic");
        let m3_pi = self.m3 == pi;
        if self.m == j && self.m1 == id && self.m2 == id {
            return if m3_pi { MwdFamily::Wigner } else { MwdFamily::SymplecticWigner };
        }
        if !m3_pi {
            return MwdFamily::General;
        }
        if self.m == j && self.m1 == self.m2 {
            MwdFamily::AffineCharacteristic
        } else if self.m1 == id && self.m2 == id {
            MwdFamily::BasisFunction
        } else if self.m2 == id {
            MwdFamily::CrossCorrelation
        } else {
            MwdFamily::Cicfwd
        }
    }
}

/// Labels of the special cases of the metaplectic Wigner distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwdFamily {
    Wigner,
    SymplecticWigner,
    Cicfwd,
    AffineCharacteristic,
    BasisFunction,
    CrossCorrelation,
    General,
}

/// Time grid, lag grid and frequency grid of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfGrids {
    pub x: UniformGrid,
    pub y: UniformGrid,
    pub u: UniformGrid,
}

impl TfGrids {
    /// Lags on twice the sampling step so `x ± y/2` are signal nodes; `u` is
    /// the FFT-conjugate grid of the lags.
    pub fn classical(signal: &UniformGrid) -> Result<Self> {
        Self::scaled(signal, 1.0)
    }

    /// As [`TfGrids::classical`] with the frequency grid scaled by `|b|`.
    pub fn scaled(signal: &UniformGrid, b: f64) -> Result<Self> {
        let y = UniformGrid::symmetric(signal.count, 2.0 * signal.step)?;
        let u = y.conjugate(b)?;
        Ok(Self { x: *signal, y, u })
    }

    /// Default grids for a configuration: the B-scaled conjugate frequency grid.
    pub fn for_config(signal: &UniformGrid, cfg: &MwdConfig) -> Result<Self> {
        Self::scaled(signal, cfg.m.det_b())
    }

    /// Kernel grids holding every lag between two nodes of `(x, u)`.
    pub fn lag_grids(&self) -> Result<(UniformGrid, UniformGrid)> {
        lag_grids(&self.x, &self.u)
    }
}

pub fn lag_grids(x: &UniformGrid, u: &UniformGrid) -> Result<(UniformGrid, UniformGrid)> {
    Ok((
        UniformGrid::symmetric(2 * x.count - 1, x.step)?,
        UniformGrid::symmetric(2 * u.count - 1, u.step)?,
    ))
}

fn transform_on(f: &SampledSignal, m: &SymplecticMatrix) -> Vec<C64> {
    if *m == SymplecticMatrix::identity(1) {
        return f.values.clone();
    }
    forward_1d(&f.values, f.grid.lin(), abcd_of(m), f.grid.lin())
}

pub fn mwd(f: &SampledSignal, cfg: &MwdConfig, grids: &TfGrids) -> Result<TfDistribution> {
    if grids.y.count < 2 || f.grid.count < 2 {
        return Err(MtfaError::GridTooCoarse("need at least two samples and two lags".into()));
    }
    let (a3, b3, c3, d3) = cfg.m3.abcd();
    let h = f.grid.step;
    let stride = d3.abs().max(c3.abs()) * grids.y.step;
    if stride > 4.0 * h {
        return Err(MtfaError::GridTooCoarse(format!(
            "lag stride {stride:.3e} exceeds four signal steps ({h:.3e})"
        )));
    }
    let g1 = transform_on(f, &cfg.m1);
    let g2 = if cfg.m2 == cfg.m1 { g1.clone() } else { transform_on(f, &cfg.m2) };
    let lin = f.grid.lin();
    // |det(M₃ℐ)| = 1 for a 2×2 symplectic M₃.
    let jac = 1.0;
    let mab = abcd_of(&cfg.m);
    let (nx, ny) = (grids.x.count, grids.y.count);
    let mut values = Vec::with_capacity(nx * grids.u.count);
    let mut row = vec![C64::new(0.0, 0.0); ny];
    for i in 0..nx {
        let x = grids.x.point(i);
        for (k, r) in row.iter_mut().enumerate() {
            let y = grids.y.point(k);
            let p = lin.interp(&g1, x * b3 + y * d3);
            let q = lin.interp(&g2, x * a3 + y * c3);
            *r = p * q.conj() * jac;
        }
        values.extend(forward_1d(&row, grids.y.lin(), mab, grids.u.lin()));
    }
    TfDistribution::new(grids.x, grids.u, values)
}

/// Classical Wigner distribution, `(J, I, I, PI)` configuration.
pub fn wigner(f: &SampledSignal, grids: &TfGrids) -> Result<TfDistribution> {
    mwd(f, &MwdConfig::classical(), grids)
}

/// Classical Wigner distribution by its textbook sum
/// `Σ_y f(x + y/2)·conj f(x − y/2)·e^{−2πi·y·u}·Δy`, times the `−i` carried by
/// `μ(J)`; the labelled fast path for the classical configuration.
pub fn wigner_direct(f: &SampledSignal, grids: &TfGrids) -> Result<TfDistribution> {
    let n = f.grid.count;
    let h = f.grid.step;
    if (grids.y.step - 2.0 * h).abs() > 1e-12 * h || !grids.x.same_as(&f.grid) {
        return Err(MtfaError::GridMismatch("direct Wigner needs classical grids".into()));
    }
    let y0 = grids.y.zero_index().ok_or_else(|| MtfaError::InvalidGrid("lag grid lacks 0".into()))?;
    let c = C64::new(0.0, -1.0);
    let mut values = Vec::with_capacity(n * grids.u.count);
    for i in 0..n {
        let mut row = vec![C64::new(0.0, 0.0); grids.y.count];
        for (k, r) in row.iter_mut().enumerate() {
            let m = k as i64 - y0 as i64;
            let (p, q) = (i as i64 + m, i as i64 - m);
            if p >= 0 && q >= 0 && (p as usize) < n && (q as usize) < n {
                *r = f.values[p as usize] * f.values[q as usize].conj();
            }
        }
        let out = crate::fourier::fourier_sum_direct(&row, grids.y.lin(), grids.u.lin(), 1.0);
        values.extend(out.into_iter().map(|v| v * c * grids.y.step));
    }
    TfDistribution::new(grids.x, grids.u, values)
}

/// Relative band below the maximum diagonal energy treated as a tie.
pub const ANCHOR_TIE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    MaxEnergy,
    Origin,
}

/// `r(x_m + k·h/2 ...)`: the lag correlation `Σ_u W(x_m, u)·e^{2πi·u·lag}·Δu`.
fn correlation(w: &TfDistribution, m: usize, lag: f64) -> C64 {
    let du = w.ugrid.step;
    w.row(m)
        .iter()
        .enumerate()
        .map(|(j, v)| v * crate::fourier::cis(2.0 * PI * w.ugrid.point(j) * lag))
        .sum::<C64>()
        * du
}

/// Recovers `f` on `W.xgrid` up to a global phase from an approximate Wigner
/// distribution sampled with lag step `2·Δx`.
///
/// With that lag step a discrete Wigner distribution only couples samples of
/// equal index parity, so the two parity lattices are recovered from their own
/// anchors and the odd lattice is phase-aligned to the interpolated even one.
/// The result is normalized so `f(anchor)` is real and positive.
pub fn wd_invert(w: &TfDistribution, anchor: Anchor) -> Result<SampledSignal> {
    let n = w.xgrid.count;
    let h = w.xgrid.step;
    // Undo the unimodular −i of μ(J).
    let wc = w.scale(C64::new(0.0, 1.0));
    let diag: Vec<f64> = (0..n).map(|m| correlation(&wc, m, 0.0).re).collect();
    let scale = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let a0 = match anchor {
        Anchor::MaxEnergy => {
            // Near-ties (flat envelopes) go to the most central column, which
            // keeps the lags needed from the anchor short.
            let top = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mid = (n - 1) as f64 / 2.0;
            (0..n)
                .filter(|&i| diag[i] >= (1.0 - ANCHOR_TIE) * top)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if (b as f64 - mid).abs() <= (i as f64 - mid).abs() => Some(b),
                    _ => Some(i),
                })
                .unwrap_or(0)
        }
        Anchor::Origin => w
            .xgrid
            .zero_index()
            .ok_or_else(|| MtfaError::InvalidGrid("time grid lacks 0".into()))?,
    };
    let floor = 1e-12 * scale.max(1e-300);
    if !(diag[a0] > floor) || !(diag[a0] > 1e-300) {
        return Err(MtfaError::DegenerateAnchor(diag[a0]));
    }
    let lattice = |a: usize| -> Vec<C64> {
        let norm = diag[a].sqrt();
        (0..n)
            .map(|j| {
                if (j + a) % 2 != 0 {
                    return C64::new(0.0, 0.0);
                }
                let m = (j + a) / 2;
                let lag = (j as f64 - a as f64) * h;
                correlation(&wc, m, lag) / norm
            })
            .collect()
    };
    let mut f = lattice(a0);
    // Anchor for the other parity: the stronger neighbour.
    let cands = [a0.checked_sub(1), if a0 + 1 < n { Some(a0 + 1) } else { None }];
    let a1 = cands.iter().flatten().copied().fold(None, |best: Option<usize>, c| match best {
        Some(b) if diag[b] >= diag[c] => Some(b),
        _ => Some(c),
    });
    if let Some(a1) = a1 {
        if diag[a1] > floor {
            let g = lattice(a1);
            let mut ip = C64::new(0.0, 0.0);
            for j in 0..n {
                if (j + a1) % 2 != 0 {
                    continue;
                }
                let mut nb = C64::new(0.0, 0.0);
                if j > 0 {
                    nb += f[j - 1];
                }
                if j + 1 < n {
                    nb += f[j + 1];
                }
                ip += nb * g[j].conj();
            }
            let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
            for j in 0..n {
                if (j + a1) % 2 == 0 {
                    f[j] = g[j] * ph;
                }
            }
        }
    }
    SampledSignal::new(w.xgrid, f)
}

/// Reconstruction of `conj(μ(M₂)f(0))·f` from a distribution `C` with `A₃ = 0`.
///
/// The kernel is removed by regularized division, floor `eps·max|Π̂|²`, of the
/// size-`n` DFTs of `C̃⁶` and of one centred period of `Π̃⁵`. Kernels built from
/// `φ` samples on the conjugate grid are periodic on the lag grid, so this
/// division is exact for them. The time marginal of the chirp-compensated
/// distribution then gives `μ(M₁)f(x·B₃)`, and the inverse transform of `M₁`
/// returns the signal on `out`.
pub fn cmcd_reconstruct(
    c: &TfDistribution,
    pi: &TfDistribution,
    cfg: &MwdConfig,
    gmc: &GmcMatrices,
    out: &UniformGrid,
    eps: f64,
) -> Result<SampledSignal> {
    let (a3, b3, _, _) = cfg.m3.abcd();
    if a3.abs() > 1e-12 {
        return Err(MtfaError::ConstraintViolated(format!("A3 = {a3} must be 0")));
    }
    if (pi.xgrid.step - c.xgrid.step).abs() > 1e-9 * c.xgrid.step
        || (pi.ugrid.step - c.ugrid.step).abs() > 1e-9 * c.ugrid.step
    {
        return Err(MtfaError::GridMismatch("kernel steps differ from the distribution".into()));
    }
    let (nx, nu) = c.shape();
    let (ox, ou) = match (pi.xgrid.zero_index(), pi.ugrid.zero_index()) {
        (Some(a), Some(b)) => (a as i64, b as i64),
        _ => return Err(MtfaError::InvalidGrid("kernel grid lacks 0".into())),
    };
    let ct = gmc.chirp_field(c, 6, 1.0);
    let pt = gmc.chirp_field(pi, 5, 1.0);
    let mut num = ct.values.clone();
    let mut den = vec![C64::new(0.0, 0.0); nx * nu];
    let (hx, hu) = ((nx / 2) as i64, (nu / 2) as i64);
    for m in -hx..nx as i64 - hx {
        let pi_i = ox + m;
        if pi_i < 0 || pi_i >= pi.xgrid.count as i64 {
            continue;
        }
        for l in -hu..nu as i64 - hu {
            let pj = ou + l;
            if pj < 0 || pj >= pi.ugrid.count as i64 {
                continue;
            }
            let (ri, rj) = (m.rem_euclid(nx as i64) as usize, l.rem_euclid(nu as i64) as usize);
            den[ri * nu + rj] = pt.at(pi_i as usize, pj as usize);
        }
    }
    fft2(&mut num, nx, nu, false);
    fft2(&mut den, nx, nu, false);
    let cell = c.cell();
    let maxd = den.iter().fold(0.0f64, |a, v| a.max(v.norm_sqr()));
    if !(maxd > 0.0) || !maxd.is_finite() {
        return Err(MtfaError::IllConditionedQuotient("kernel spectrum vanishes".into()));
    }
    for (x, y) in num.iter_mut().zip(&den) {
        *x = *x * y.conj() / ((y.norm_sqr() + eps * maxd) * cell);
    }
    fft2(&mut num, nx, nu, true);
    let norm = 1.0 / (nx * nu) as f64;
    let wt = TfDistribution::new(c.xgrid, c.ugrid, num.into_iter().map(|v| v * norm).collect())?;
    let w = gmc.chirp_field(&wt, 4, -1.0);
    let (_, b, _, d) = cfg.m.abcd();
    let du = c.ugrid.step;
    let s: Vec<C64> = (0..nx)
        .map(|i| {
            w.row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| v * chirp(-d / b, c.ugrid.point(j)))
                .sum::<C64>()
                * du
        })
        .collect();
    // s(x) = (−b)^{−1/2}·|b|·μ(M₁)f(x·B₃)·conj(μ(M₂)f(0)).
    let k = sqrt_real(-b) / b.abs();
    let g: Vec<C64> = s.iter().map(|v| v * k).collect();
    let zlin = Lin::new(c.xgrid.start * b3, c.xgrid.step * b3, nx);
    let values = adjoint_1d(&g, zlin, abcd_of(&cfg.m1), out.lin());
    SampledSignal::new(*out, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{aligned_rel_l2, generate, normalized_correlation, SignalKind};

    fn gauss(n: usize) -> SampledSignal {
        let g = UniformGrid::symmetric(n, 1.0 / (n as f64).sqrt()).unwrap();
        SampledSignal::from_fn(g, |x| C64::new((-PI * x * x).exp(), 0.0))
    }

    #[test]
    fn classical_wigner_of_gaussian() {
        let f = gauss(128);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let w = wigner(&f, &grids).unwrap();
        let want = TfDistribution::from_fn(grids.x, grids.u, |x, u| C64::new(2f64.sqrt() * (-2.0 * PI * (x * x + u * u)).exp(), 0.0));
        let (err, c) = aligned_rel_l2(&w.values, &want.values);
        assert!(err < 1e-2, "{err}");
        assert!((c - C64::new(0.0, -1.0)).norm() < 1e-6);
    }

    #[test]
    fn classical_wigner_is_real_after_alignment() {
        let g = UniformGrid::interval(-5.0, 5.0, 30.0).unwrap();
        let f = generate(SignalKind::Lfm, g);
        let w = wigner(&f, &TfGrids::classical(&g).unwrap()).unwrap().scale(C64::new(0.0, 1.0));
        let m = w.max_abs();
        assert!(w.values.iter().all(|v| v.im.abs() <= 1e-6 * m));
    }

    #[test]
    fn direct_path_matches_generic() {
        let g = UniformGrid::interval(-2.0, 2.0, 16.0).unwrap();
        let f = generate(SignalKind::GaussLfm, g);
        let grids = TfGrids::classical(&g).unwrap();
        let a = wigner(&f, &grids).unwrap();
        let b = wigner_direct(&f, &grids).unwrap();
        assert!(crate::field::field_rel_l2(&a, &b) < 1e-10);
        assert_eq!(MwdConfig::classical().family(), MwdFamily::Wigner);
    }

    #[test]
    fn invert_gauss_lfm_and_cexp() {
        let g = UniformGrid::interval(-5.0, 5.0, 50.0).unwrap();
        let f = generate(SignalKind::GaussLfm, g);
        let grids = TfGrids::classical(&g).unwrap();
        let back = wd_invert(&wigner(&f, &grids).unwrap(), Anchor::MaxEnergy).unwrap();
        let (err, _) = aligned_rel_l2(&back.values, &f.values);
        assert!(err < 1e-2, "{err}");
        let e = generate(SignalKind::CExp, g);
        let back = wd_invert(&wigner(&e, &grids).unwrap(), Anchor::Origin).unwrap();
        assert!(normalized_correlation(&back.values, &e.values) > 0.99);
        let slope = (back.values[260] / back.values[250]).arg() / (2.0 * PI * 10.0 * g.step);
        assert!((slope - 0.5).abs() < 0.01, "{slope}");
    }

    #[test]
    fn invert_zero_is_degenerate() {
        let g = UniformGrid::symmetric(32, 0.1).unwrap();
        let grids = TfGrids::classical(&g).unwrap();
        let z = TfDistribution::zeros(grids.x, grids.u);
        assert!(matches!(wd_invert(&z, Anchor::MaxEnergy), Err(MtfaError::DegenerateAnchor(_))));
    }

    #[test]
    fn sesquilinear_in_the_signal() {
        let f = gauss(64);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let cfg = MwdConfig::new(
            SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap(),
            SymplecticMatrix::from_2x2(0.8, 0.6, -0.6, 0.8).unwrap(),
            SymplecticMatrix::identity(1),
            special(Special::PI, 1).unwrap(),
        )
        .unwrap();
        let alpha = C64::new(1.5, -0.7);
        let a = mwd(&f.scale(alpha), &cfg, &grids).unwrap();
        let b = mwd(&f, &cfg, &grids).unwrap().scale(C64::new(alpha.norm_sqr(), 0.0));
        assert!(crate::field::field_rel_l2(&a, &b) < 1e-10);
    }
}
