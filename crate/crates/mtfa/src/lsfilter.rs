//! Least-squares adaptive filtering in the metaplectic Wigner domain.
//!
//! The filter `H` is designed so that `W_obs Θ H` (the generalized metaplectic
//! convolution with `(M₄, M₅, M₆)`) matches a target distribution. In the
//! `μ(M₅)` domain the transfer is
//!
//! ```text
//! μ(M₅)H(w) = μ(M₆)W_target(w·B₅⁻ᵀB₆ᵀ) / (ε(u)·μ(M₄)W_obs(w·B₅⁻ᵀB₄ᵀ)),  u = w·B₅⁻ᵀB₆ᵀ
//! ```
//!
//! with every division regularized as `X·conj(Y)/(|Y|² + eps·max|Y|²)`.
//! Filters live on the lag grids of the TF grid, `2n − 1` nodes per axis, and
//! the transform domain is sampled on the conjugate grid of the lag grid, where
//! every transform reduces to an exact DFT of that size.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::gmconv::{convolve_direct, EpsilonWeight, GmcMatrices};
use crate::metaplectic::{adjoint_2d_points, direct_2d_points, sep_2d, Kernel2};
use crate::signals::{metrics, unimodular_alignment, SampledSignal, UniformGrid};
use crate::symplectic::SymplecticMatrix;
use crate::wigner::{lag_grids, mwd, wd_invert, wigner, Anchor, MwdConfig, TfGrids};

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Largest TF grid (per axis) for the non-separable design and the dense
/// Wiener–Hopf solve.
pub const DENSE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDesign {
    /// Filter on the lag grids.
    pub h: TfDistribution,
    /// `μ(M₅)H` on the conjugate grid of the lag grid; for diagonal `B₅` the
    /// stored grid is scaled per axis by the diagonal of `B₅`.
    pub transfer: TfDistribution,
    pub epsilon: f64,
    pub gmc: GmcMatrices,
}

/// Transform-domain sample points `w` for a TF grid.
fn w_grids(x: &UniformGrid, u: &UniformGrid) -> Result<(UniformGrid, UniformGrid, UniformGrid, UniformGrid)> {
    let (lx, lu) = lag_grids(x, u)?;
    Ok((lx, lu, lx.conjugate(1.0)?, lu.conjugate(1.0)?))
}

fn diag_b(m: &SymplecticMatrix) -> (f64, f64) {
    (m.axis(0)[0][1], m.axis(1)[0][1])
}

fn bt(m: &SymplecticMatrix) -> [[f64; 2]; 2] {
    let b = m.b().transpose();
    [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]]
}

fn vecmat(v: [f64; 2], m: &[[f64; 2]; 2]) -> [f64; 2] {
    [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
}

/// `μ(M)` of a field sampled at the points `w·Bᵀ`, `w` on the product grid `(wx, wu)`.
fn transform_at_w(field: &TfDistribution, m: &SymplecticMatrix, wx: &UniformGrid, wu: &UniformGrid) -> Result<Vec<C64>> {
    if m.is_axis_separable() {
        let (b0, b1) = diag_b(m);
        return Ok(sep_2d(&field.values, field.xgrid.lin(), field.ugrid.lin(), m, wx.lin().scaled(b0), wu.lin().scaled(b1), false));
    }
    if field.xgrid.count > DENSE_LIMIT || field.ugrid.count > DENSE_LIMIT {
        return Err(MtfaError::GridTooLarge(format!(
            "non-separable matrices are limited to {DENSE_LIMIT}x{DENSE_LIMIT} grids"
        )));
    }
    let b = bt(m);
    let pts: Vec<[f64; 2]> = (0..wx.count)
        .flat_map(|i| (0..wu.count).map(move |j| [wx.point(i), wu.point(j)]))
        .map(|w| vecmat(w, &b))
        .collect();
    Ok(direct_2d_points(&field.values, &field.xgrid, &field.ugrid, &Kernel2::new(m)?, &pts))
}

/// Least-squares design from one `(target, observation)` pair.
pub fn design_lsaf(w_target: &TfDistribution, w_obs: &TfDistribution, gmc: &GmcMatrices, eps: f64) -> Result<FilterDesign> {
    design_lsaf_ensemble(&[(w_target.clone(), w_obs.clone())], gmc, eps)
}

/// Ensemble design: `Σ conj(Y)·X / (Σ|Y|² + eps·max Σ|Y|²)` in the transform domain.
pub fn design_lsaf_ensemble(pairs: &[(TfDistribution, TfDistribution)], gmc: &GmcMatrices, eps: f64) -> Result<FilterDesign> {
    let (t0, _) = pairs.first().ok_or(MtfaError::AllZeroObservation)?;
    if !(eps >= 0.0) {
        return Err(MtfaError::InvalidGrid(format!("epsilon {eps} must be >= 0")));
    }
    for (t, o) in pairs {
        t.check_same_grid(o)?;
        t.check_same_grid(t0)?;
    }
    let (lx, lu, wx, wu) = w_grids(&t0.xgrid, &t0.ugrid)?;
    let b6t = bt(&gmc.m6);
    let ew = EpsilonWeight::new(gmc);
    let eps_u: Vec<C64> = (0..wx.count)
        .flat_map(|i| (0..wu.count).map(move |j| [wx.point(i), wu.point(j)]))
        .map(|w| ew.at(vecmat(w, &b6t)))
        .collect();
    let size = wx.count * wu.count;
    let mut num = vec![C64::new(0.0, 0.0); size];
    let mut den = vec![0.0f64; size];
    for (t, o) in pairs {
        let x = transform_at_w(t, &gmc.m6, &wx, &wu)?;
        let y = transform_at_w(o, &gmc.m4, &wx, &wu)?;
        for k in 0..size {
            let d = eps_u[k] * y[k];
            num[k] += d.conj() * x[k];
            den[k] += d.norm_sqr();
        }
    }
    let maxd = den.iter().cloned().fold(0.0f64, f64::max);
    if !(maxd > 0.0) {
        return Err(MtfaError::AllZeroObservation);
    }
    let floor = eps * maxd;
    let tr: Vec<C64> = num
        .iter()
        .zip(&den)
        .map(|(n, d)| if d + floor > 0.0 { n / (d + floor) } else { C64::new(0.0, 0.0) })
        .collect();
    let (hv, tgx, tgu) = transfer_to_filter(&tr, &lx, &lu, &wx, &wu, &gmc.m5)?;
    Ok(FilterDesign {
        h: TfDistribution::new(lx, lu, hv)?,
        transfer: TfDistribution::new(tgx, tgu, tr)?,
        epsilon: eps,
        gmc: gmc.clone(),
    })
}

/// Inverse `μ(M₅)` of transfer samples taken at `w·B₅ᵀ`, `w` on `(wx, wu)`,
/// onto the lag grids `(lx, lu)`. Also returns the grid the transfer lives on.
fn transfer_to_filter(
    tr: &[C64],
    lx: &UniformGrid,
    lu: &UniformGrid,
    wx: &UniformGrid,
    wu: &UniformGrid,
    m5: &SymplecticMatrix,
) -> Result<(Vec<C64>, UniformGrid, UniformGrid)> {
    if m5.is_axis_separable() {
        let (b0, b1) = diag_b(m5);
        let hv = sep_2d(tr, wx.lin().scaled(b0), wu.lin().scaled(b1), m5, lx.lin(), lu.lin(), true);
        let sx = UniformGrid::symmetric(wx.count, wx.step * b0.abs())?;
        let su = UniformGrid::symmetric(wu.count, wu.step * b1.abs())?;
        return Ok((hv, sx, su));
    }
    if lx.count > 2 * DENSE_LIMIT || lu.count > 2 * DENSE_LIMIT {
        return Err(MtfaError::GridTooLarge(format!("non-separable M5 limited to {DENSE_LIMIT}x{DENSE_LIMIT}")));
    }
    let b5t = bt(m5);
    let pts: Vec<[f64; 2]> = (0..wx.count)
        .flat_map(|i| (0..wu.count).map(move |j| [wx.point(i), wu.point(j)]))
        .map(|w| vecmat(w, &b5t))
        .collect();
    let cell = m5.det_b().abs() * wx.step * wu.step;
    Ok((adjoint_2d_points(tr, &pts, cell, &Kernel2::new(m5)?, lx, lu), *wx, *wu))
}

/// Kernel on the lag grids of `(x, u)` whose `μ(M₅)` transform, sampled at
/// `w·B₅ᵀ`, equals `t(w·B₅ᵀ)`.
pub fn filter_from_transfer(
    x: &UniformGrid,
    u: &UniformGrid,
    m5: &SymplecticMatrix,
    t: impl Fn([f64; 2]) -> C64,
) -> Result<TfDistribution> {
    let (lx, lu, wx, wu) = w_grids(x, u)?;
    let b5t = bt(m5);
    let tr: Vec<C64> = (0..wx.count)
        .flat_map(|i| (0..wu.count).map(move |j| [wx.point(i), wu.point(j)]))
        .map(|w| t(vecmat(w, &b5t)))
        .collect();
    let (hv, _, _) = transfer_to_filter(&tr, &lx, &lu, &wx, &wu, m5)?;
    TfDistribution::new(lx, lu, hv)
}

/// `W_obs Θ H`.
pub fn apply_filter(w_obs: &TfDistribution, d: &FilterDesign) -> Result<TfDistribution> {
    convolve_direct(w_obs, &d.h, &d.gmc)
}

/// Mean of `|W_ref − W_hat|²` over the grid.
pub fn wigner_mse(w_hat: &TfDistribution, w_ref: &TfDistribution) -> Result<f64> {
    w_hat.check_same_grid(w_ref)?;
    Ok(w_hat.values.iter().zip(&w_ref.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / w_ref.values.len() as f64)
}

#[derive(Debug, Clone)]
pub struct WienerHopfSolution {
    /// Filter after chirp removal.
    pub h: TfDistribution,
    /// The chirped unknown `H̃⁵ = H·e^{πi·z·F₅·zᵀ}`.
    pub h_chirped: TfDistribution,
    /// `‖R·h − r‖/‖r‖` for the assembled normal equations.
    pub residual: f64,
    /// Set when the Cholesky factorization failed and the SVD pseudo-inverse was used.
    pub rank_deficient: bool,
}

/// Columns of the dense operator: output `(i, j)` of trial `t` depends on
/// `H̃(i − k, j − l)` with weight `Ỹ_t(k, l)·cell`.
fn assemble(obs_t: &TfDistribution, lx: usize, lu: usize, ox: usize, ou: usize) -> DMatrix<C64> {
    let (nx, nu) = obs_t.shape();
    let cell = obs_t.cell();
    let mut a = DMatrix::<C64>::zeros(nx * nu, lx * lu);
    for i in 0..nx {
        for j in 0..nu {
            let row = i * nu + j;
            for k in 0..nx {
                for l in 0..nu {
                    let col = (i + ox - k) * lu + (j + ou - l);
                    a[(row, col)] = obs_t.at(k, l) * cell;
                }
            }
        }
    }
    a
}

/// Numerical Wiener–Hopf solve for the chirped filter from a trial ensemble.
///
/// The normal equations `Σ_t A_tᴴA_t·h = Σ_t A_tᴴ·x_t` are exactly the
/// discretized orthogonality conditions; no stationarity is assumed.
pub fn wiener_hopf_numeric(targets: &[TfDistribution], observations: &[TfDistribution], gmc: &GmcMatrices) -> Result<WienerHopfSolution> {
    if targets.is_empty() || targets.len() != observations.len() {
        return Err(MtfaError::DimensionMismatch("need matching, nonempty target and observation ensembles".into()));
    }
    let t0 = &targets[0];
    let (nx, nu) = t0.shape();
    if nx > DENSE_LIMIT || nu > DENSE_LIMIT {
        return Err(MtfaError::GridTooLarge(format!("{nx}x{nu} exceeds {DENSE_LIMIT}x{DENSE_LIMIT}")));
    }
    for (t, o) in targets.iter().zip(observations) {
        t.check_same_grid(o)?;
        t.check_same_grid(t0)?;
    }
    let (lgx, lgu) = lag_grids(&t0.xgrid, &t0.ugrid)?;
    let (lx, lu) = (lgx.count, lgu.count);
    let (ox, ou) = (nx - 1, nu - 1);
    let p = lx * lu;
    let mut r = DMatrix::<C64>::zeros(p, p);
    let mut rhs = DVector::<C64>::zeros(p);
    for (t, o) in targets.iter().zip(observations) {
        let a = assemble(&gmc.chirp_field(o, 4, 1.0), lx, lu, ox, ou);
        let x = DVector::from_vec(gmc.chirp_field(t, 6, 1.0).values);
        let ah = a.adjoint();
        r += &ah * &a;
        rhs += &ah * x;
    }
    let (sol, rank_deficient) = match r.clone().cholesky() {
        Some(ch) => (ch.solve(&rhs), false),
        None => {
            let svd = r.clone().svd(true, true);
            let tol = svd.singular_values.max() * 1e-12 * p as f64;
            let s = svd.solve(&rhs, tol).map_err(|e| MtfaError::RankDeficient(e.to_string()))?;
            (s, true)
        }
    };
    let res = (&r * &sol - &rhs).norm() / rhs.norm().max(1e-300);
    let h_chirped = TfDistribution::new(lgx, lgu, sol.iter().cloned().collect())?;
    let h = GmcMatrices::chirp_field(gmc, &h_chirped, 5, -1.0);
    Ok(WienerHopfSolution { h, h_chirped, residual: res, rank_deficient })
}

/// Largest normalized correlation between the chirped estimation error and the
/// shifted chirped observations over all filter lags.
pub fn orthogonality_residual(targets: &[TfDistribution], observations: &[TfDistribution], h: &TfDistribution, gmc: &GmcMatrices) -> Result<f64> {
    let (nx, nu) = targets[0].shape();
    let (lx, lu) = h.shape();
    let (ox, ou) = (nx - 1, nu - 1);
    let hc = DVector::from_vec(gmc.chirp_field(h, 5, 1.0).values);
    let mut corr = DVector::<C64>::zeros(lx * lu);
    let (mut ne, mut nx2, mut ny) = (0.0, 0.0, 0.0);
    for (t, o) in targets.iter().zip(observations) {
        let a = assemble(&gmc.chirp_field(o, 4, 1.0), lx, lu, ox, ou);
        let x = DVector::from_vec(gmc.chirp_field(t, 6, 1.0).values);
        nx2 += x.norm_squared();
        let e = x - &a * &hc;
        corr += a.adjoint() * &e;
        ne += e.norm_squared();
        ny += a.norm_squared() / (lx * lu) as f64;
    }
    let m = corr.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    // An exact fit leaves only rounding in `e`; floor its norm relative to the targets.
    let ne = ne.sqrt().max(1e-12 * nx2.sqrt());
    Ok(m / (ne * ny.sqrt()).max(1e-300))
}

/// The seven matrices of a distribution with a convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrices {
    pub mwd: MwdConfig,
    pub gmc: GmcMatrices,
}

impl Matrices {
    pub fn classical() -> Self {
        Self { mwd: MwdConfig::classical(), gmc: GmcMatrices::classical() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub wigner_mse: f64,
    pub signal_mse: f64,
    pub psnr_db: f64,
    pub epsilon: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub estimate: SampledSignal,
    pub diagnostics: Diagnostics,
}

/// Classical Wigner distribution of the reference on the classical grids of
/// its signal grid; shared by every method that filters toward it.
pub fn target_wigner(reference: &SampledSignal) -> Result<TfDistribution> {
    wigner(reference, &TfGrids::classical(&reference.grid)?)
}

/// Oracle-designed filtering of `g` toward `reference`: observation
/// `mwd(g)`, target classical Wigner distribution of the reference, filtered
/// estimate inverted back to a signal. The estimate carries the reference's
/// global phase, which a Wigner distribution cannot represent.
pub fn denoise(g: &SampledSignal, reference: &SampledSignal, m: &Matrices, eps: f64) -> Result<Denoised> {
    let target = target_wigner(reference)?;
    denoise_with_target(g, reference, &target, m, eps)
}

pub fn denoise_with_target(g: &SampledSignal, reference: &SampledSignal, target: &TfDistribution, m: &Matrices, eps: f64) -> Result<Denoised> {
    if !g.grid.same_as(&reference.grid) {
        return Err(MtfaError::GridMismatch("observation and reference grids differ".into()));
    }
    let grids = TfGrids::classical(&g.grid)?;
    let obs = mwd(g, &m.mwd, &grids)?;
    let design = design_lsaf(target, &obs, &m.gmc, eps)?;
    let est = apply_filter(&obs, &design)?;
    let wmse = wigner_mse(&est, target)?;
    let f = match wd_invert(&est, Anchor::MaxEnergy) {
        Ok(f) => f,
        Err(MtfaError::DegenerateAnchor(_)) => SampledSignal::zeros(g.grid),
        Err(e) => return Err(e),
    };
    let c = unimodular_alignment(&reference.values, &f.values);
    let f = f.scale(c);
    let mt = metrics(&f, reference)?;
    Ok(Denoised {
        estimate: f,
        diagnostics: Diagnostics { wigner_mse: wmse, signal_mse: mt.mse, psnr_db: mt.psnr_db, epsilon: eps, trials: 1 },
    })
}
