//! Discrete metaplectic transforms.
//!
//! For `det B ≠ 0` the transform is the Riemann sum of `∫ f(x) K_M(u, x) dx` with
//!
//! ```text
//! K_M(u, x) = (−det B)^{−1/2} · e^{πi(u·DB⁻¹·uᵀ + x·B⁻¹A·xᵀ) − 2πi·x·B⁻¹·uᵀ}
//! ```
//!
//! and the principal square root, so `μ(J)` is `−i` times the Fourier
//! transform. For `det B = 0` the transform is the resampling
//! `√det D · e^{πi·u·C·Dᵀ·uᵀ} f(u·D)` with linear interpolation and zero
//! extension.
//!
//! The adjoint of the `det B ≠ 0` quadrature is the exact discrete inverse on
//! conjugate grids, and the continuum adjoint equals `μ(M⁻¹)` up to a
//! unimodular constant, so inverse transforms are computed as adjoints.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::{cis, Lin, SumPlan};
use crate::signals::{SampledSignal, UniformGrid};
use crate::symplectic::SymplecticMatrix;

/// Principal square root of a real number, as a complex value.
pub fn sqrt_real(x: f64) -> C64 {
    if x >= 0.0 {
        C64::new(x.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-x).sqrt())
    }
}

/// `e^{πi·q·x²}` with the phase reduced mod 2π first.
#[inline]
pub(crate) fn chirp(q: f64, x: f64) -> C64 {
    cis(PI * (q * x * x).rem_euclid(2.0))
}

/// `(−det B)^{−1/2}`.
pub fn kernel_constant(m: &SymplecticMatrix) -> Result<C64> {
    let db = m.det_b();
    if db == 0.0 {
        return Err(MtfaError::SingularB);
    }
    Ok(sqrt_real(-db).inv())
}

pub fn kernel(m: &SymplecticMatrix, natural: &[f64], sharp: &[f64]) -> Result<C64> {
    let n = m.n();
    if natural.len() != n || sharp.len() != n {
        return Err(MtfaError::DimensionMismatch("point dimension".into()));
    }
    let c = kernel_constant(m)?;
    let bi = m.b().try_inverse().ok_or(MtfaError::SingularB)?;
    let dbi = m.d() * &bi;
    let bia = &bi * m.a();
    let quad = |mat: &nalgebra::DMatrix<f64>, p: &[f64], q: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += p[i] * mat[(i, j)] * q[j];
            }
        }
        s
    };
    let phase = 0.5 * (quad(&dbi, natural, natural) + quad(&bia, sharp, sharp)) - quad(&bi, sharp, natural);
    Ok(c * cis(2.0 * PI * phase.rem_euclid(1.0)))
}

/// 2×2 block entries of an N=1 matrix or one axis of a separable matrix.
pub(crate) type Abcd = [[f64; 2]; 2];

pub(crate) fn abcd_of(m: &SymplecticMatrix) -> Abcd {
    let (a, b, c, d) = m.abcd();
    [[a, b], [c, d]]
}

/// Forward transform of samples on `input` evaluated at the points of `output`.
pub(crate) fn forward_1d(values: &[C64], input: Lin, m: Abcd, output: Lin) -> Vec<C64> {
    Line::new(input, m, output, false).apply(values)
}

/// Adjoint of [`forward_1d`] for `det B ≠ 0` (samples on `input` in the
/// transform domain, result on `output`); the exact inverse when `det B = 0`.
pub(crate) fn adjoint_1d(values: &[C64], input: Lin, m: Abcd, output: Lin) -> Vec<C64> {
    Line::new(input, m, output, true).apply(values)
}

/// A 1-D forward or adjoint transform between fixed grids.
enum Line {
    Resample { input: Lin, output: Lin, scale: C64, q: f64, stretch: f64 },
    Sum(SumPlan),
}

impl Line {
    fn new(input: Lin, m: Abcd, output: Lin, adjoint: bool) -> Self {
        let [[a, b], [c, d]] = m;
        if b == 0.0 {
            return if adjoint {
                Line::Resample { input, output, scale: sqrt_real(d).inv(), q: -c * a, stretch: a }
            } else {
                Line::Resample { input, output, scale: sqrt_real(d), q: c * d, stretch: d }
            };
        }
        let (k, kappa, qi, qo) = if adjoint {
            (sqrt_real(-b).inv().conj() * input.step.abs(), -1.0 / b, -d / b, -a / b)
        } else {
            (sqrt_real(-b).inv() * input.step.abs(), 1.0 / b, a / b, d / b)
        };
        let mut plan = SumPlan::new(input, output, kappa);
        plan.scale_pre(|i| chirp(qi, input.at(i)));
        plan.scale_post(|j| k * chirp(qo, output.at(j)));
        Line::Sum(plan)
    }

    fn apply(&self, values: &[C64]) -> Vec<C64> {
        match self {
            Line::Resample { input, output, scale, q, stretch } => (0..output.count)
                .map(|j| {
                    let u = output.at(j);
                    scale * chirp(*q, u) * input.interp(values, u * stretch)
                })
                .collect(),
            Line::Sum(plan) => plan.apply(values),
        }
    }
}

fn direct_1d(values: &[C64], input: &UniformGrid, m: &SymplecticMatrix, output: &UniformGrid) -> Result<Vec<C64>> {
    let dx = input.step;
    (0..output.count)
        .map(|j| {
            let u = [output.point(j)];
            let mut s = C64::new(0.0, 0.0);
            for (k, v) in values.iter().enumerate() {
                s += v * kernel(m, &u, &[input.point(k)])?;
            }
            Ok(s * dx)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMethod {
    DirectQuadrature,
    ChirpFft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformPlan {
    pub method: TransformMethod,
    pub input: UniformGrid,
    pub output: UniformGrid,
    pub matrix: SymplecticMatrix,
    /// Divide out the phase of `(−det B)^{−1/2}` so that `μ(J)` is exactly the Fourier transform.
    pub fourier_normalized: bool,
}

impl TransformPlan {
    pub fn new(
        method: TransformMethod,
        matrix: SymplecticMatrix,
        input: UniformGrid,
        output: UniformGrid,
    ) -> Result<Self> {
        if matrix.n() != 1 {
            return Err(MtfaError::PlanMismatch("1-D plans need a 2x2 matrix".into()));
        }
        if method == TransformMethod::ChirpFft {
            let b = matrix.det_b();
            if b == 0.0 {
                return Err(MtfaError::PlanMismatch("ChirpFFT needs det B != 0".into()));
            }
            let want = input.conjugate(b)?;
            if !want.same_as(&output) {
                return Err(MtfaError::PlanMismatch(
                    "ChirpFFT output must be the B-scaled FFT-conjugate grid".into(),
                ));
            }
        }
        Ok(Self { method, input, output, matrix, fourier_normalized: false })
    }

    /// ChirpFFT plan onto the B-scaled conjugate grid of `input`.
    pub fn chirp_fft(matrix: SymplecticMatrix, input: UniformGrid) -> Result<Self> {
        let b = matrix.det_b();
        if b == 0.0 {
            return Err(MtfaError::PlanMismatch("ChirpFFT needs det B != 0".into()));
        }
        let out = input.conjugate(b)?;
        Self::new(TransformMethod::ChirpFft, matrix, input, out)
    }

    pub fn direct(matrix: SymplecticMatrix, input: UniformGrid, output: UniformGrid) -> Result<Self> {
        Self::new(TransformMethod::DirectQuadrature, matrix, input, output)
    }

    pub fn normalized(mut self) -> Self {
        self.fourier_normalized = true;
        self
    }
}

pub fn mt(f: &SampledSignal, plan: &TransformPlan) -> Result<SampledSignal> {
    if !f.grid.same_as(&plan.input) {
        return Err(MtfaError::NonconformingGrid("signal grid differs from the plan input".into()));
    }
    let m = &plan.matrix;
    let mut values = if m.det_b() == 0.0 {
        forward_1d(&f.values, plan.input.lin(), abcd_of(m), plan.output.lin())
    } else {
        match plan.method {
            TransformMethod::DirectQuadrature => direct_1d(&f.values, &plan.input, m, &plan.output)?,
            TransformMethod::ChirpFft => forward_1d(&f.values, plan.input.lin(), abcd_of(m), plan.output.lin()),
        }
    };
    if plan.fourier_normalized && m.det_b() != 0.0 {
        let c = kernel_constant(m)?;
        let p = c / c.norm();
        values.iter_mut().for_each(|v| *v /= p);
    }
    Ok(SampledSignal { grid: plan.output, values })
}

/// Inverse transform: the adjoint quadrature of `plan` applied to samples on
/// `plan.output`, returning samples on `plan.input`.
pub fn mt_inverse(g: &SampledSignal, plan: &TransformPlan) -> Result<SampledSignal> {
    if !g.grid.same_as(&plan.output) {
        return Err(MtfaError::NonconformingGrid("samples are not on the plan output grid".into()));
    }
    let mut vals = g.values.clone();
    if plan.fourier_normalized && plan.matrix.det_b() != 0.0 {
        let c = kernel_constant(&plan.matrix)?;
        let p = c / c.norm();
        vals.iter_mut().for_each(|v| *v *= p);
    }
    let values = adjoint_1d(&vals, plan.output.lin(), abcd_of(&plan.matrix), plan.input.lin());
    Ok(SampledSignal { grid: plan.input, values })
}

/// Fast transform onto an arbitrary uniform output grid (chirp-z based).
pub fn mt_to(f: &SampledSignal, m: &SymplecticMatrix, output: UniformGrid) -> Result<SampledSignal> {
    if m.n() != 1 {
        return Err(MtfaError::DimensionMismatch("signals need a 2x2 matrix".into()));
    }
    let values = forward_1d(&f.values, f.grid.lin(), abcd_of(m), output.lin());
    Ok(SampledSignal { grid: output, values })
}

/// Constant correcting a product of per-axis kernels to the joint 2-D kernel.
fn separable_correction(m: &SymplecticMatrix) -> C64 {
    let [[_, b0], [_, d0]] = m.axis(0);
    let [[_, b1], [_, d1]] = m.axis(1);
    if b0 != 0.0 && b1 != 0.0 {
        let joint = sqrt_real(-b0 * b1).inv();
        let prod = sqrt_real(-b0).inv() * sqrt_real(-b1).inv();
        joint / prod
    } else if b0 == 0.0 && b1 == 0.0 {
        sqrt_real(d0 * d1) / (sqrt_real(d0) * sqrt_real(d1))
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Separable 2-D transform of a row-major field for an axis-separable 4×4 matrix.
pub(crate) fn sep_2d(
    values: &[C64],
    in0: Lin,
    in1: Lin,
    m: &SymplecticMatrix,
    out0: Lin,
    out1: Lin,
    adjoint: bool,
) -> Vec<C64> {
    let (ax0, ax1) = (m.axis(0), m.axis(1));
    let rows = Line::new(in1, ax1, out1, adjoint);
    let cols = Line::new(in0, ax0, out0, adjoint);
    let mut tmp = Vec::with_capacity(in0.count * out1.count);
    for r in values.chunks(in1.count) {
        tmp.extend(rows.apply(r));
    }
    let mut out = vec![C64::new(0.0, 0.0); out0.count * out1.count];
    let mut col = vec![C64::new(0.0, 0.0); in0.count];
    for j in 0..out1.count {
        for i in 0..in0.count {
            col[i] = tmp[i * out1.count + j];
        }
        let t = cols.apply(&col);
        for (i, v) in t.into_iter().enumerate() {
            out[i * out1.count + j] = v;
        }
    }
    let mut k = separable_correction(m);
    if adjoint {
        k = k.conj();
    }
    if k != C64::new(1.0, 0.0) {
        out.iter_mut().for_each(|v| *v *= k);
    }
    out
}

/// Precomputed pieces of a 4×4 kernel with `det B ≠ 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel2 {
    c: C64,
    p: [[f64; 2]; 2],
    q: [[f64; 2]; 2],
    r: [[f64; 2]; 2],
}

fn to2(m: &nalgebra::DMatrix<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

#[inline]
fn qf(m: &[[f64; 2]; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + a[1] * (m[1][0] * b[0] + m[1][1] * b[1])
}

impl Kernel2 {
    pub fn new(m: &SymplecticMatrix) -> Result<Self> {
        if m.n() != 2 {
            return Err(MtfaError::DimensionMismatch("4x4 matrix expected".into()));
        }
        let c = kernel_constant(m)?;
        let bi = m.b().try_inverse().ok_or(MtfaError::SingularB)?;
        Ok(Self { c, p: to2(&(m.d() * &bi)), q: to2(&(&bi * m.a())), r: to2(&bi) })
    }

    /// `K(u, x)`.
    #[inline]
    pub fn eval(&self, u: [f64; 2], x: [f64; 2]) -> C64 {
        let ph = 0.5 * (qf(&self.p, u, u) + qf(&self.q, x, x)) - qf(&self.r, x, u);
        self.c * cis(2.0 * PI * ph.rem_euclid(1.0))
    }
}

/// Direct 2-D quadrature at arbitrary output points.
pub(crate) fn direct_2d_points(values: &[C64], in0: &UniformGrid, in1: &UniformGrid, k: &Kernel2, points: &[[f64; 2]]) -> Vec<C64> {
    let cell = in0.step * in1.step;
    points
        .iter()
        .map(|&u| {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..in0.count {
                let x0 = in0.point(i);
                for j in 0..in1.count {
                    let v = values[i * in1.count + j];
                    if v != C64::new(0.0, 0.0) {
                        s += v * k.eval(u, [x0, in1.point(j)]);
                    }
                }
            }
            s * cell
        })
        .collect()
}

/// Adjoint quadrature from samples at `points` (each weighted by `cell`) onto a grid.
pub(crate) fn adjoint_2d_points(samples: &[C64], points: &[[f64; 2]], cell: f64, k: &Kernel2, out0: &UniformGrid, out1: &UniformGrid) -> Vec<C64> {
    let mut out = Vec::with_capacity(out0.count * out1.count);
    for i in 0..out0.count {
        let z0 = out0.point(i);
        for j in 0..out1.count {
            let z = [z0, out1.point(j)];
            let mut s = C64::new(0.0, 0.0);
            for (v, &u) in samples.iter().zip(points) {
                s += v * k.eval(u, z).conj();
            }
            out.push(s * cell);
        }
    }
    out
}

/// 2-D transform of a field onto the product grid `(out_x, out_u)`.
///
/// Axis-separable matrices use the per-axis fast path; other matrices fall
/// back to direct quadrature, which is only practical on small grids.
pub fn mt2(field: &TfDistribution, m: &SymplecticMatrix, out_x: UniformGrid, out_u: UniformGrid) -> Result<TfDistribution> {
    if m.n() != 2 {
        return Err(MtfaError::DimensionMismatch("2-D fields need a 4x4 matrix".into()));
    }
    let values = if m.is_axis_separable() {
        sep_2d(&field.values, field.xgrid.lin(), field.ugrid.lin(), m, out_x.lin(), out_u.lin(), false)
    } else {
        let k = Kernel2::new(m)?;
        let pts: Vec<[f64; 2]> = (0..out_x.count)
            .flat_map(|i| (0..out_u.count).map(move |j| [out_x.point(i), out_u.point(j)]))
            .collect();
        direct_2d_points(&field.values, &field.xgrid, &field.ugrid, &k, &pts)
    };
    TfDistribution::new(out_x, out_u, values)
}

/// Transform along the second axis only.
pub fn partial_mt2(h: &TfDistribution, m: &SymplecticMatrix, out_u: UniformGrid) -> Result<TfDistribution> {
    if m.n() != 1 {
        return Err(MtfaError::DimensionMismatch("partial transforms need a 2x2 matrix".into()));
    }
    let ab = abcd_of(m);
    let mut values = Vec::with_capacity(h.xgrid.count * out_u.count);
    for r in h.values.chunks(h.ugrid.count) {
        values.extend(forward_1d(r, h.ugrid.lin(), ab, out_u.lin()));
    }
    TfDistribution::new(h.xgrid, out_u, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{aligned_rel_l2, generate, normalized_correlation, rel_l2, SignalKind};
    use crate::symplectic::{special, Special};

    fn gauss_grid() -> UniformGrid {
        UniformGrid::new(-8.0, 16.0 / 1024.0, 1024).unwrap()
    }

    #[test]
    fn kernel_of_j_at_origin_is_minus_i() {
        let v = kernel(&SymplecticMatrix::j(1), &[0.0], &[0.0]).unwrap();
        assert!((v - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_constant_when_a_is_zero() {
        let m = SymplecticMatrix::from_2x2(0.0, 2.0, -0.5, 3.0).unwrap();
        let v = kernel(&m, &[0.0], &[0.0]).unwrap();
        assert!((v - sqrt_real(-2.0).inv()).norm() < 1e-15);
        assert!(kernel(&SymplecticMatrix::identity(1), &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn kernel_example_one_m1() {
        // M = [[0,1],[-1,2]]: K(1, 0) = (−1)^{−1/2}·e^{πi·2·1} = −i.
        let m = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        let v = kernel(&m, &[1.0], &[0.0]).unwrap();
        assert!((v - C64::new(0.0, -1.0)).norm() < 1e-12);
        let v = kernel(&m, &[0.5], &[0.25]).unwrap();
        // (−i)·e^{πi(2·0.25 + 0) − 2πi·0.125}
        let want = C64::new(0.0, -1.0) * cis(PI * 0.5 - 2.0 * PI * 0.125);
        assert!((v - want).norm() < 1e-12);
    }

    #[test]
    fn identity_transform_is_exact() {
        let g = gauss_grid();
        let f = generate(SignalKind::GaussLfm, g);
        let plan = TransformPlan::direct(SymplecticMatrix::identity(1), g, g).unwrap();
        assert_eq!(mt(&f, &plan).unwrap().values, f.values);
    }

    #[test]
    fn fourier_of_gaussian() {
        let g = gauss_grid();
        let f = SampledSignal::from_fn(g, |x| C64::new((-PI * x * x).exp(), 0.0));
        let plan = TransformPlan::chirp_fft(SymplecticMatrix::j(1), g).unwrap();
        let out = mt(&f, &plan).unwrap();
        let want: Vec<C64> = out.grid.points().iter().map(|u| C64::new((-PI * u * u).exp(), 0.0)).collect();
        let (err, c) = aligned_rel_l2(&out.values, &want);
        assert!(err < 1e-3, "{err}");
        assert!((c - C64::new(0.0, -1.0)).norm() < 1e-6);
        let normed = mt(&f, &plan.clone().normalized()).unwrap();
        assert!(rel_l2(&normed.values, &want) < 1e-3);
    }

    #[test]
    fn chirp_fft_matches_direct() {
        let g = UniformGrid::symmetric(256, 0.04).unwrap();
        let f = generate(SignalKind::GaussLfm, g);
        let m = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        let fast = TransformPlan::chirp_fft(m.clone(), g).unwrap();
        let slow = TransformPlan::direct(m, g, fast.output).unwrap();
        let a = mt(&f, &fast).unwrap();
        let b = mt(&f, &slow).unwrap();
        assert!(rel_l2(&a.values, &b.values) < 1e-6);
    }

    #[test]
    fn chirp_fft_plan_is_strict() {
        let g = UniformGrid::symmetric(64, 0.1).unwrap();
        assert!(TransformPlan::chirp_fft(SymplecticMatrix::identity(1), g).is_err());
        assert!(TransformPlan::new(TransformMethod::ChirpFft, SymplecticMatrix::j(1), g, g).is_err());
    }

    #[test]
    fn parseval_for_example_one_m1() {
        let g = UniformGrid::interval(-5.0, 5.0, 50.0).unwrap();
        let f = generate(SignalKind::GaussLfm, g);
        let m = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        let out = mt(&f, &TransformPlan::chirp_fft(m, g).unwrap()).unwrap();
        let r = (out.energy() / f.energy()).sqrt();
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn inverse_round_trip() {
        let g = UniformGrid::symmetric(256, 0.05).unwrap();
        let f = SampledSignal::from_fn(g, |x| C64::from_polar((-PI * x * x / 2.0).exp(), x));
        let m = SymplecticMatrix::from_2x2(0.6, 0.8, -0.8, 0.6).unwrap();
        let plan = TransformPlan::chirp_fft(m, g).unwrap();
        let back = mt_inverse(&mt(&f, &plan).unwrap(), &plan).unwrap();
        assert!(rel_l2(&back.values, &f.values) < 1e-10);
    }

    #[test]
    fn scaling_branch_and_its_inverse() {
        let g = UniformGrid::symmetric(512, 0.02).unwrap();
        let f = SampledSignal::from_fn(g, |x| C64::new((-PI * x * x).exp(), 0.0));
        let m = SymplecticMatrix::from_2x2(0.5, 0.0, 0.3, 2.0).unwrap();
        let out = mt_to(&f, &m, g).unwrap();
        let want: Vec<C64> = g
            .points()
            .iter()
            .map(|&u| C64::new(2f64.sqrt(), 0.0) * chirp(0.6, u) * (-PI * 4.0 * u * u).exp())
            .collect();
        assert!(rel_l2(&out.values, &want) < 1e-3);
        let back = adjoint_1d(&out.values, g.lin(), abcd_of(&m), g.lin());
        assert!(rel_l2(&back, &f.values) < 1e-2);
    }

    #[test]
    fn partial_transform_of_product() {
        let xg = UniformGrid::symmetric(16, 0.25).unwrap();
        let yg = UniformGrid::symmetric(64, 0.125).unwrap();
        let fx: Vec<C64> = xg.points().iter().map(|&x| C64::new(1.0 + x, 0.5)).collect();
        let gy = SampledSignal::from_fn(yg, |y| C64::new((-PI * y * y).exp(), 0.0));
        let h = TfDistribution::from_fn(xg, yg, |x, y| C64::new(1.0 + x, 0.5) * (-PI * y * y).exp());
        let m = special(Special::PI, 1).unwrap();
        let ug = yg.conjugate(1.0).unwrap();
        let out = partial_mt2(&h, &m, ug).unwrap();
        let gt = mt_to(&gy, &m, ug).unwrap();
        for i in 0..16 {
            for j in 0..64 {
                assert!((out.at(i, j) - fx[i] * gt.values[j]).norm() < 1e-6);
            }
        }
        let same = partial_mt2(&h, &SymplecticMatrix::identity(1), yg).unwrap();
        assert_eq!(same.values, h.values);
    }

    #[test]
    fn cascade_matches_composition() {
        let g = UniformGrid::symmetric(512, 1.0 / 512f64.sqrt()).unwrap();
        let f = SampledSignal::from_fn(g, |x| C64::from_polar((-PI * x * x / 2.0).exp(), 0.5 * x));
        let m1 = SymplecticMatrix::from_2x2(0.8, 0.6, -0.6, 0.8).unwrap();
        let m2 = SymplecticMatrix::from_2x2(1.0, 0.7, 0.2, 1.14).unwrap();
        let step = mt_to(&mt_to(&f, &m2, g).unwrap(), &m1, g).unwrap();
        let direct = mt_to(&f, &m1.compose(&m2).unwrap(), g).unwrap();
        assert!(normalized_correlation(&step.values, &direct.values) > 1.0 - 1e-3);
    }

    #[test]
    fn separable_matches_direct_2d() {
        let xg = UniformGrid::symmetric(12, 0.4).unwrap();
        let ug = UniformGrid::symmetric(10, 0.5).unwrap();
        let field = TfDistribution::from_fn(xg, ug, |x, u| C64::from_polar((-(x * x + u * u) / 2.0).exp(), x * u));
        let ax0 = SymplecticMatrix::from_2x2(1.0, 4.0, 1.0, 5.0).unwrap();
        let ax1 = SymplecticMatrix::from_2x2(1.0, -2.0, 0.0, 1.0).unwrap();
        let m = SymplecticMatrix::from_axes(&[ax0, ax1]).unwrap();
        let fast = mt2(&field, &m, xg, ug).unwrap();
        let k = Kernel2::new(&m).unwrap();
        let pts: Vec<[f64; 2]> = (0..12).flat_map(|i| (0..10).map(move |j| [xg.point(i), ug.point(j)])).collect();
        let slow = direct_2d_points(&field.values, &xg, &ug, &k, &pts);
        assert!(rel_l2(&fast.values, &slow) < 1e-10);
    }
}
