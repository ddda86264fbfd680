//! Generalized metaplectic convolution of fields on the time-frequency plane.

use num_complex::Complex64 as C64;

use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::{good_size, linear_convolve, Lin};
use crate::metaplectic::{adjoint_2d_points, direct_2d_points, sep_2d, sqrt_real, Kernel2};
use crate::signals::UniformGrid;
use crate::symplectic::SymplecticMatrix;

type M2 = [[f64; 2]; 2];

fn to2(m: &nalgebra::DMatrix<f64>) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// `z·F·zᵀ` for a 2×2 `F`.
#[inline]
fn quad(f: &M2, z: [f64; 2]) -> f64 {
    z[0] * (f[0][0] * z[0] + f[0][1] * z[1]) + z[1] * (f[1][0] * z[0] + f[1][1] * z[1])
}

#[inline]
fn vecmat(v: [f64; 2], m: &M2) -> [f64; 2] {
    [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmcMatrices {
    pub m4: SymplecticMatrix,
    pub m5: SymplecticMatrix,
    pub m6: SymplecticMatrix,
    f: [M2; 3],
}

impl GmcMatrices {
    pub fn new(m4: SymplecticMatrix, m5: SymplecticMatrix, m6: SymplecticMatrix) -> Result<Self> {
        let mut f = [[[0.0; 2]; 2]; 3];
        for (k, m) in [&m4, &m5, &m6].into_iter().enumerate() {
            if m.n() != 2 {
                return Err(MtfaError::DimensionMismatch(format!("M{} must be 4x4", k + 4)));
            }
            let bia = m
                .b_inv_a()
                .map_err(|_| MtfaError::SingularBBlocks(format!("det B{} = 0", k + 4)))?;
            f[k] = to2(&bia);
        }
        Ok(Self { m4, m5, m6, f })
    }

    /// `M₄ = M₅ = M₆ = J`: ordinary convolution.
    pub fn classical() -> Self {
        let j = SymplecticMatrix::j(2);
        Self::new(j.clone(), j.clone(), j).expect("J has B = I")
    }

    pub fn conventional() -> Self {
        Self::classical()
    }

    pub fn i_type(m4: SymplecticMatrix) -> Result<Self> {
        Self::new(m4.clone(), SymplecticMatrix::j(2), m4)
    }

    pub fn ii_type(m4: SymplecticMatrix) -> Result<Self> {
        Self::new(m4.clone(), m4.clone(), m4)
    }

    pub fn iv_type(m4: SymplecticMatrix) -> Result<Self> {
        let r = std::f64::consts::SQRT_2;
        let mut m6 = m4.matrix().clone();
        for i in 0..4 {
            for j in 0..4 {
                m6[(i, j)] *= if j < 2 { 1.0 / r } else { r };
            }
        }
        let m6 = SymplecticMatrix::validate(m6, 1e-9)?;
        Self::new(m4.clone(), m4, m6)
    }

    /// `B_j⁻¹A_j` for `j` in 4..=6.
    pub fn f_block(&self, j: usize) -> [[f64; 2]; 2] {
        self.f[j - 4]
    }

    pub fn family(&self) -> GmcFamily {
        let j = SymplecticMatrix::j(2);
        if self.m4 == j && self.m5 == j && self.m6 == j {
            GmcFamily::Conventional
        } else if self.m5 == j && self.m6 == self.m4 {
            GmcFamily::IType
        } else if self.m4 == self.m5 && self.m5 == self.m6 {
            GmcFamily::IIType
        } else if self.m4 == self.m5 && Self::iv_type(self.m4.clone()).map(|g| g.m6 == self.m6).unwrap_or(false) {
            GmcFamily::IVType
        } else {
            GmcFamily::General
        }
    }

    fn all_diagonal(&self) -> bool {
        [&self.m4, &self.m5, &self.m6].iter().all(|m| m.is_axis_separable())
    }

    /// Multiplies a field by `e^{sign·πi·z·F_j·zᵀ}`.
    pub fn chirp_field(&self, w: &TfDistribution, j: usize, sign: f64) -> TfDistribution {
        let f = self.f_block(j);
        w.map(|x, u, v| v * cis_half_turns(sign * quad(&f, [x, u])))
    }
}

/// `e^{πi·t}` with `t` reduced mod 2 first.
#[inline]
fn cis_half_turns(t: f64) -> C64 {
    crate::fourier::cis(std::f64::consts::PI * t.rem_euclid(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmcFamily {
    Conventional,
    IType,
    IIType,
    IVType,
    General,
}

/// Weight of the convolution theorem at a point `u` of the `μ(M₆)` domain.
///
/// The constant is `√(−det B₄)·√(−det B₅)/√(−det B₆)`, each root principal;
/// this is `√(−det B₄·det B₅/det B₆)` except for sign patterns where the
/// principal branches of the two forms disagree.
pub fn epsilon_factor(m: &GmcMatrices, u: [f64; 2]) -> C64 {
    EpsilonWeight::new(m).at(u)
}

/// [`epsilon_factor`] with the matrix blocks precomputed.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonWeight {
    k: C64,
    b6i: M2,
    d6b6i: M2,
    sides: [(M2, M2); 2],
}

impl EpsilonWeight {
    pub fn new(m: &GmcMatrices) -> Self {
        let (b4, b5, b6) = (m.m4.det_b(), m.m5.det_b(), m.m6.det_b());
        let inv = |mm: &SymplecticMatrix| mm.b().try_inverse().expect("checked at construction");
        let side = |mm: &SymplecticMatrix| (to2(&mm.b().transpose()), to2(&(mm.d() * inv(mm))));
        Self {
            k: sqrt_real(-b4) * sqrt_real(-b5) / sqrt_real(-b6),
            b6i: to2(&inv(&m.m6)),
            d6b6i: to2(&(m.m6.d() * inv(&m.m6))),
            sides: [side(&m.m4), side(&m.m5)],
        }
    }

    #[inline]
    pub fn at(&self, u: [f64; 2]) -> C64 {
        let b6i = &self.b6i;
        // ξ = u·B₆⁻ᵀ, so u·B₆⁻ᵀB_jᵀD_jB₆⁻¹uᵀ = (ξB_jᵀ)·D_jB_j⁻¹·(ξB_jᵀ)ᵀ.
        let xi = [u[0] * b6i[0][0] + u[1] * b6i[0][1], u[0] * b6i[1][0] + u[1] * b6i[1][1]];
        let side = |(bt, db): &(M2, M2)| quad(db, vecmat(xi, bt));
        self.k * cis_half_turns(quad(&self.d6b6i, u) - side(&self.sides[0]) - side(&self.sides[1]))
    }
}

fn lag_offset(g: &UniformGrid, step: f64) -> Result<usize> {
    if (g.step - step).abs() > 1e-9 * step.abs() {
        return Err(MtfaError::GridMismatch("kernel step differs from the field step".into()));
    }
    let t = -g.start / g.step;
    if (t - t.round()).abs() > 1e-6 || t.round() < 0.0 || t.round() as usize >= g.count {
        return Err(MtfaError::GridMismatch("kernel grid must contain the origin as a node".into()));
    }
    Ok(t.round() as usize)
}

/// Direct route: `e^{−πi·z·F₆·zᵀ}·[(F·e^{πi·z·F₄·zᵀ}) ∗ (G·e^{πi·z·F₅·zᵀ})](z)` on
/// the grid of `F`, as a zero-extended Riemann sum with cell `Δx·Δu`.
///
/// `G` may live on any grid with the same steps that has the origin as a node.
pub fn convolve_direct(f: &TfDistribution, g: &TfDistribution, m: &GmcMatrices) -> Result<TfDistribution> {
    let ox = lag_offset(&g.xgrid, f.xgrid.step)?;
    let ou = lag_offset(&g.ugrid, f.ugrid.step)?;
    // Node alignment: x_i − x_k must be a node of G's grid.
    let ft = m.chirp_field(f, 4, 1.0);
    let gt = m.chirp_field(g, 5, 1.0);
    let full = linear_convolve(&ft.array(), &gt.array(), (ox, ou), f.shape());
    let cell = f.cell();
    let out = TfDistribution::new(f.xgrid, f.ugrid, full.into_iter().map(|v| v * cell).collect())?;
    Ok(m.chirp_field(&out, 6, -1.0))
}

/// Spectral route: the `μ(M₆)` image of the convolution is
/// `ε(u)·μ(M₄)F(u·B₆⁻ᵀB₄ᵀ)·μ(M₅)G(u·B₆⁻ᵀB₅ᵀ)`, which is brought back with the
/// adjoint of `μ(M₆)`.
///
/// `u = w·B₆ᵀ` with `w` on the conjugate grid of a zero-padded copy of the
/// field grid, so no wrap-around enters the result.
pub fn convolve_spectral(f: &TfDistribution, g: &TfDistribution, m: &GmcMatrices) -> Result<TfDistribution> {
    lag_offset(&g.xgrid, f.xgrid.step)?;
    lag_offset(&g.ugrid, f.ugrid.step)?;
    let px = good_size(f.xgrid.count + g.xgrid.count - 1);
    let pu = good_size(f.ugrid.count + g.ugrid.count - 1);
    let wx = UniformGrid::symmetric(px, 1.0 / (px as f64 * f.xgrid.step))?;
    let wu = UniformGrid::symmetric(pu, 1.0 / (pu as f64 * f.ugrid.step))?;
    let cellw = wx.step * wu.step;
    let ew = EpsilonWeight::new(m);
    let values = if m.all_diagonal() {
        let diag = |mm: &SymplecticMatrix| (mm.axis(0)[0][1], mm.axis(1)[0][1]);
        let (b40, b41) = diag(&m.m4);
        let (b50, b51) = diag(&m.m5);
        let (b60, b61) = diag(&m.m6);
        let sf = sep_2d(&f.values, f.xgrid.lin(), f.ugrid.lin(), &m.m4, wx.lin().scaled(b40), wu.lin().scaled(b41), false);
        let sg = sep_2d(&g.values, g.xgrid.lin(), g.ugrid.lin(), &m.m5, wx.lin().scaled(b50), wu.lin().scaled(b51), false);
        let mut prod = Vec::with_capacity(px * pu);
        for i in 0..px {
            for j in 0..pu {
                let u = [wx.point(i) * b60, wu.point(j) * b61];
                prod.push(ew.at(u) * sf[i * pu + j] * sg[i * pu + j]);
            }
        }
        let (in0, in1): (Lin, Lin) = (wx.lin().scaled(b60), wu.lin().scaled(b61));
        sep_2d(&prod, in0, in1, &m.m6, f.xgrid.lin(), f.ugrid.lin(), true)
    } else {
        let bt = |mm: &SymplecticMatrix| to2(&mm.b().transpose());
        let (b4t, b5t, b6t) = (bt(&m.m4), bt(&m.m5), bt(&m.m6));
        let ws: Vec<[f64; 2]> = (0..px)
            .flat_map(|i| (0..pu).map(move |j| [wx.point(i), wu.point(j)]))
            .collect();
        let p4: Vec<[f64; 2]> = ws.iter().map(|&w| vecmat(w, &b4t)).collect();
        let p5: Vec<[f64; 2]> = ws.iter().map(|&w| vecmat(w, &b5t)).collect();
        let p6: Vec<[f64; 2]> = ws.iter().map(|&w| vecmat(w, &b6t)).collect();
        let sf = direct_2d_points(&f.values, &f.xgrid, &f.ugrid, &Kernel2::new(&m.m4)?, &p4);
        let sg = direct_2d_points(&g.values, &g.xgrid, &g.ugrid, &Kernel2::new(&m.m5)?, &p5);
        let prod: Vec<C64> = (0..ws.len()).map(|k| ew.at(p6[k]) * sf[k] * sg[k]).collect();
        let cell = m.m6.det_b().abs() * cellw;
        adjoint_2d_points(&prod, &p6, cell, &Kernel2::new(&m.m6)?, &f.xgrid, &f.ugrid)
    };
    TfDistribution::new(f.xgrid, f.ugrid, values)
}

/// Brute-force quadruple loop of the direct route; for small grids and tests.
pub fn convolve_brute(f: &TfDistribution, g: &TfDistribution, m: &GmcMatrices) -> Result<TfDistribution> {
    let (nx, nu) = f.shape();
    if nx * nu > 64 * 64 {
        return Err(MtfaError::GridTooLarge(format!("{nx}x{nu} brute-force convolution")));
    }
    let (f4, f5, f6) = (m.f_block(4), m.f_block(5), m.f_block(6));
    let cell = f.cell();
    let mut out = TfDistribution::zeros(f.xgrid, f.ugrid);
    for i in 0..nx {
        for j in 0..nu {
            let z = [f.xgrid.point(i), f.ugrid.point(j)];
            let mut s = C64::new(0.0, 0.0);
            for k in 0..nx {
                for l in 0..nu {
                    let w = [f.xgrid.point(k), f.ugrid.point(l)];
                    let d = [z[0] - w[0], z[1] - w[1]];
                    let gv = sample_at(g, d);
                    if gv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    s += f.at(k, l) * cis_half_turns(quad(&f4, w)) * gv * cis_half_turns(quad(&f5, d));
                }
            }
            out.values[i * nu + j] = s * cell * cis_half_turns(-quad(&f6, z));
        }
    }
    Ok(out)
}

fn sample_at(g: &TfDistribution, p: [f64; 2]) -> C64 {
    let ix = (p[0] - g.xgrid.start) / g.xgrid.step;
    let iu = (p[1] - g.ugrid.start) / g.ugrid.step;
    let (rx, ru) = (ix.round(), iu.round());
    if (ix - rx).abs() > 1e-6 || (iu - ru).abs() > 1e-6 {
        return C64::new(0.0, 0.0);
    }
    if rx < 0.0 || ru < 0.0 || rx as usize >= g.xgrid.count || ru as usize >= g.ugrid.count {
        return C64::new(0.0, 0.0);
    }
    g.at(rx as usize, ru as usize)
}

/// Example matrices used by the demonstrations (diagonal blocks).
pub fn from_axes(a0: [f64; 4], a1: [f64; 4]) -> Result<SymplecticMatrix> {
    SymplecticMatrix::from_axes(&[
        SymplecticMatrix::from_2x2(a0[0], a0[1], a0[2], a0[3])?,
        SymplecticMatrix::from_2x2(a1[0], a1[1], a1[2], a1[3])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_rel_l2;
    use crate::signals::rel_l2;

    fn grid(n: usize) -> UniformGrid {
        UniformGrid::symmetric(n, 4.0 / (n as f64).sqrt()).unwrap()
    }

    fn gaussian(n: usize, cx: f64, cu: f64, chirp: f64) -> TfDistribution {
        let g = grid(n);
        TfDistribution::from_fn(g, g, |x, u| {
            let r = (-std::f64::consts::PI * ((x - cx).powi(2) + (u - cu).powi(2)) / 4.0).exp();
            C64::new(r, 0.0) * cis_half_turns(chirp * x * u)
        })
    }

    fn ex1() -> SymplecticMatrix {
        from_axes([-5.0, 1.0, 0.0, -0.2], [5.0, 1.0, 0.0, 0.2]).unwrap()
    }

    fn ex2() -> SymplecticMatrix {
        from_axes([1.0, 4.0, 1.0, 5.0], [1.0, 1.0, 1.0, 2.0]).unwrap()
    }

    fn ex3() -> SymplecticMatrix {
        from_axes([0.0, 1.0, -1.0, 2.0], [3.0, -2.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn epsilon_of_j_at_origin_is_i() {
        let e = epsilon_factor(&GmcMatrices::classical(), [0.0, 0.0]);
        assert!((e - C64::new(0.0, 1.0)).norm() < 1e-15);
        let m = GmcMatrices::ii_type(ex1()).unwrap();
        let e0 = epsilon_factor(&m, [0.0, 0.0]);
        assert!((e0 - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn epsilon_example_one_scalar_oracle() {
        // B = I, D = diag(−1/5, 1/5): exponent u·D·uᵀ − 2·u·D·uᵀ = −(−1/5 + 1/5) = 0.
        let m = GmcMatrices::ii_type(ex1()).unwrap();
        let e = epsilon_factor(&m, [1.0, 1.0]);
        assert!((e - C64::new(0.0, 1.0)).norm() < 1e-14);
        let e = epsilon_factor(&m, [1.0, 0.0]);
        let want = C64::new(0.0, 1.0) * cis_half_turns(0.2);
        assert!((e - want).norm() < 1e-14);
    }

    #[test]
    fn classical_is_plain_convolution() {
        let f = gaussian(16, 0.5, -0.3, 0.0);
        let g = gaussian(16, -0.2, 0.1, 0.3);
        let m = GmcMatrices::classical();
        let a = convolve_direct(&f, &g, &m).unwrap();
        let b = convolve_brute(&f, &g, &m).unwrap();
        assert!(field_rel_l2(&a, &b) < 1e-8);
    }

    #[test]
    fn delta_is_identity_when_m4_equals_m6() {
        let f = gaussian(32, 0.0, 0.4, 0.5);
        let d = TfDistribution::delta(f.xgrid, f.ugrid).unwrap();
        for m in [GmcMatrices::ii_type(ex1()).unwrap(), GmcMatrices::i_type(ex2()).unwrap()] {
            let a = convolve_direct(&f, &d, &m).unwrap();
            assert!(field_rel_l2(&a, &f) < 1e-10);
            let s = convolve_spectral(&f, &d, &m).unwrap();
            assert!(field_rel_l2(&s, &f) < 1e-2);
        }
    }

    #[test]
    fn direct_matches_brute_force_example_one() {
        let f = gaussian(32, 0.2, 0.0, 0.0);
        let g = gaussian(32, 0.0, -0.3, 0.2);
        let m = GmcMatrices::ii_type(ex1()).unwrap();
        let a = convolve_direct(&f, &g, &m).unwrap();
        let b = convolve_brute(&f, &g, &m).unwrap();
        assert!(field_rel_l2(&a, &b) < 1e-6);
    }

    #[test]
    fn spectral_matches_direct_all_families() {
        let f = gaussian(64, 0.3, -0.2, 0.0);
        let g = gaussian(64, -0.1, 0.2, 0.4);
        let cases = [
            GmcMatrices::conventional(),
            GmcMatrices::i_type(ex3()).unwrap(),
            GmcMatrices::ii_type(ex2()).unwrap(),
            GmcMatrices::iv_type(ex1()).unwrap(),
        ];
        let fams = [GmcFamily::Conventional, GmcFamily::IType, GmcFamily::IIType, GmcFamily::IVType];
        for (m, fam) in cases.iter().zip(fams) {
            assert_eq!(m.family(), fam);
            let a = convolve_direct(&f, &g, m).unwrap();
            let b = convolve_spectral(&f, &g, m).unwrap();
            let e = field_rel_l2(&b, &a);
            assert!(e < 1e-2, "{fam:?}: {e}");
        }
    }

    #[test]
    fn spectral_non_separable_small() {
        // [[0, B], [−B⁻ᵀ, 0]] with a non-diagonal B, dressed with chirps on both sides.
        let s = nalgebra::DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.5, -1.0, 0.0, 0.0],
        );
        let core = SymplecticMatrix::validate(s, 1e-12).unwrap();
        let shear = |p: [f64; 3]| {
            let mut l = nalgebra::DMatrix::identity(4, 4);
            l[(2, 0)] = p[0];
            l[(2, 1)] = p[1];
            l[(3, 0)] = p[1];
            l[(3, 1)] = p[2];
            SymplecticMatrix::validate(l, 1e-12).unwrap()
        };
        let m4 = shear([0.1, 0.05, -0.1]).compose(&core).unwrap().compose(&shear([0.2, 0.0, 0.1])).unwrap();
        assert!(!m4.is_axis_separable());
        let m = GmcMatrices::ii_type(m4).unwrap();
        let f = gaussian(12, 0.2, 0.0, 0.0);
        let g = gaussian(12, 0.0, 0.3, 0.0);
        let a = convolve_direct(&f, &g, &m).unwrap();
        let b = convolve_spectral(&f, &g, &m).unwrap();
        assert!(field_rel_l2(&b, &a) < 1e-2, "{}", field_rel_l2(&b, &a));
    }

    #[test]
    fn i_type_g_side_chirp_vanishes() {
        let m = GmcMatrices::i_type(ex2()).unwrap();
        assert_eq!(m.f_block(5), [[0.0; 2]; 2]);
        let f = gaussian(16, 0.0, 0.0, 0.1);
        let g = gaussian(16, 0.2, 0.2, 0.0);
        let a = convolve_direct(&f, &g, &m).unwrap();
        // Hard-coded: G enters without a chirp.
        let ft = m.chirp_field(&f, 4, 1.0);
        let plain = convolve_direct(&ft, &g, &GmcMatrices::classical()).unwrap();
        let want = m.chirp_field(&plain, 6, -1.0);
        assert!(rel_l2(&a.values, &want.values) < 1e-12);
    }

    #[test]
    fn bilinear() {
        let f = gaussian(16, 0.0, 0.0, 0.1);
        let g = gaussian(16, 0.2, 0.2, 0.0);
        let m = GmcMatrices::ii_type(ex3()).unwrap();
        let al = C64::new(0.3, 2.0);
        for conv in [convolve_direct, convolve_spectral] {
            let a = conv(&f.scale(al), &g, &m).unwrap();
            let b = conv(&f, &g.scale(al), &m).unwrap();
            let c = conv(&f, &g, &m).unwrap().scale(al);
            assert!(field_rel_l2(&a, &c) < 1e-12 && field_rel_l2(&b, &c) < 1e-12);
        }
    }
}
