//! Cohen kernels and the convolution-type distribution built from a metaplectic
//! Wigner distribution and a generalized metaplectic convolution.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::fourier::{cis, fourier_sum, linear_convolve, Lin};
use crate::gmconv::{convolve_direct, convolve_spectral, GmcFamily, GmcMatrices};
use crate::signals::{SampledSignal, UniformGrid};
use crate::wigner::{lag_grids, mwd, wigner_direct, MwdConfig, MwdFamily, TfGrids};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum Window {
    /// `g ≡ 1`.
    Rect,
    /// Hann taper of total width `width` centred on zero lag.
    Hann { width: f64 },
}

impl Window {
    fn eval(&self, z: f64) -> f64 {
        match *self {
            Window::Rect => 1.0,
            Window::Hann { width } => {
                if z.abs() >= width / 2.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (2.0 * PI * z / width).cos())
                }
            }
        }
    }
}

/// Kernel samples on a `(v, z)` grid, stored as `[re, im]` pairs row-major in `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiGrid {
    pub v: UniformGrid,
    pub z: UniformGrid,
    pub values: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum KernelSpec {
    Wigner,
    ChoiWilliams { sigma: f64 },
    KirkwoodRihaczek,
    BornJordan,
    ZhaoAtlasMarks {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_window")]
        g: Window,
    },
    MargenauHill,
    Page,
    Delta,
    CustomPhi(PhiGrid),
}

fn default_kappa() -> f64 {
    0.5
}

fn default_window() -> Window {
    Window::Rect
}

impl KernelSpec {
    pub fn zam() -> Self {
        KernelSpec::ZhaoAtlasMarks { kappa: default_kappa(), g: Window::Rect }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MtfaError::InvalidGrid(m.into()));
        match self {
            KernelSpec::ChoiWilliams { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => bad("Choi-Williams sigma must be > 0"),
            KernelSpec::ZhaoAtlasMarks { kappa, g } => {
                if !(*kappa > 0.0 && kappa.is_finite()) {
                    return bad("ZAM kappa must be > 0");
                }
                if let Window::Hann { width } = g {
                    if !(*width > 0.0) {
                        return bad("window width must be > 0");
                    }
                }
                Ok(())
            }
            KernelSpec::CustomPhi(p) => {
                if p.values.len() != p.v.count * p.z.count {
                    return bad("custom kernel size does not match its grid");
                }
                if p.values.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
                    return bad("custom kernel has non-finite values");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Wigner => "wigner",
            KernelSpec::ChoiWilliams { .. } => "choi_williams",
            KernelSpec::KirkwoodRihaczek => "kirkwood_rihaczek",
            KernelSpec::BornJordan => "born_jordan",
            KernelSpec::ZhaoAtlasMarks { .. } => "zhao_atlas_marks",
            KernelSpec::MargenauHill => "margenau_hill",
            KernelSpec::Page => "page",
            KernelSpec::Delta => "delta",
            KernelSpec::CustomPhi(_) => "custom_phi",
        }
    }

    /// Parses a bare kind name with default parameters (`choi_williams` uses σ = 1).
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wigner" | "wd" => KernelSpec::Wigner,
            "choi_williams" | "cw" => KernelSpec::ChoiWilliams { sigma: 1.0 },
            "kirkwood_rihaczek" | "kr" => KernelSpec::KirkwoodRihaczek,
            "born_jordan" | "bj" => KernelSpec::BornJordan,
            "zhao_atlas_marks" | "zam" => KernelSpec::zam(),
            "margenau_hill" | "mh" => KernelSpec::MargenauHill,
            "page" => KernelSpec::Page,
            "delta" => KernelSpec::Delta,
            other => return Err(MtfaError::UnknownName(other.into())),
        })
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - t * t * PI * PI / 6.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// `φ(v, z)` of a kernel at one point. `Delta` has no finite `φ` and returns 1,
/// its `Π` is built directly.
pub fn phi_eval(spec: &KernelSpec, v: f64, z: f64) -> C64 {
    let vz = v * z;
    match spec {
        KernelSpec::Wigner | KernelSpec::Delta => C64::new(1.0, 0.0),
        KernelSpec::ChoiWilliams { sigma } => C64::new((-vz * vz / sigma).exp(), 0.0),
        KernelSpec::KirkwoodRihaczek => cis(PI * vz),
        KernelSpec::BornJordan => C64::new(sinc(vz), 0.0),
        KernelSpec::ZhaoAtlasMarks { kappa, g } => C64::new(g.eval(z) * z.abs() * sinc(2.0 * kappa * vz), 0.0),
        KernelSpec::MargenauHill => C64::new((PI * vz).cos(), 0.0),
        KernelSpec::Page => cis(2.0 * PI * v * z.abs()),
        KernelSpec::CustomPhi(p) => {
            let iv = ((v - p.v.start) / p.v.step).round();
            let iz = ((z - p.z.start) / p.z.step).round();
            if iv < 0.0 || iz < 0.0 || iv as usize >= p.v.count || iz as usize >= p.z.count {
                return C64::new(0.0, 0.0);
            }
            let [re, im] = p.values[iv as usize * p.z.count + iz as usize];
            C64::new(re, im)
        }
    }
}

/// Grid on which `φ` is sampled for a set of TF grids: the FFT-conjugates of
/// the time and frequency grids.
pub fn phi_grids(grids: &TfGrids) -> Result<(UniformGrid, UniformGrid)> {
    Ok((grids.x.conjugate(1.0)?, grids.u.conjugate(1.0)?))
}

pub fn phi_samples(spec: &KernelSpec, grids: &TfGrids) -> Result<PhiGrid> {
    let (v, z) = phi_grids(grids)?;
    let mut values = Vec::with_capacity(v.count * z.count);
    for i in 0..v.count {
        for j in 0..z.count {
            let p = phi_eval(spec, v.point(i), z.point(j));
            values.push([p.re, p.im]);
        }
    }
    Ok(PhiGrid { v, z, values })
}

/// `Π(ξ, η) = ∬ φ(v, z)·e^{−2πi(v·ξ + z·η)} dv dz` on the lag grids of `grids`.
pub fn phi_to_pi(spec: &KernelSpec, grids: &TfGrids) -> Result<TfDistribution> {
    spec.validate()?;
    let (lx, lu) = grids.lag_grids()?;
    if let KernelSpec::Delta = spec {
        return TfDistribution::delta(lx, lu);
    }
    let phi = match spec {
        KernelSpec::CustomPhi(p) => p.clone(),
        _ => phi_samples(spec, grids)?,
    };
    let vals: Vec<C64> = phi.values.iter().map(|v| C64::new(v[0], v[1])).collect();
    let out = sep_fourier(&vals, phi.v.lin(), phi.z.lin(), lx.lin(), lu.lin(), 1.0);
    let cell = phi.v.step * phi.z.step;
    TfDistribution::new(lx, lu, out.into_iter().map(|v| v * cell).collect())
}

/// Inverse of [`phi_to_pi`] on the `φ` grid of `grids`, using one centred
/// period of `Π`.
pub fn pi_to_phi(pi: &TfDistribution, grids: &TfGrids) -> Result<PhiGrid> {
    let (v, z) = phi_grids(grids)?;
    let (nx, nu) = (grids.x.count, grids.u.count);
    let px = UniformGrid::symmetric(nx, pi.xgrid.step)?;
    let pu = UniformGrid::symmetric(nu, pi.ugrid.step)?;
    let period = pi.embed(px, pu)?;
    let out = sep_fourier(&period.values, px.lin(), pu.lin(), v.lin(), z.lin(), -1.0);
    let norm = px.step * pu.step;
    Ok(PhiGrid { v, z, values: out.into_iter().map(|c| [c.re * norm, c.im * norm]).collect() })
}

/// `Σ_{a,b} h[a,b]·e^{−2πiκ(p_a·s_i + q_b·t_j)}` for row-major `h`.
fn sep_fourier(h: &[C64], p: Lin, q: Lin, s: Lin, t: Lin, kappa: f64) -> Vec<C64> {
    let mut tmp = Vec::with_capacity(p.count * t.count);
    for r in h.chunks(q.count) {
        tmp.extend(fourier_sum(r, q, t, kappa));
    }
    let mut out = vec![C64::new(0.0, 0.0); s.count * t.count];
    let mut col = vec![C64::new(0.0, 0.0); p.count];
    for j in 0..t.count {
        for i in 0..p.count {
            col[i] = tmp[i * t.count + j];
        }
        for (i, v) in fourier_sum(&col, p, s, kappa).into_iter().enumerate() {
            out[i * t.count + j] = v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmcdConfig {
    pub mwd: MwdConfig,
    pub gmc: GmcMatrices,
    pub grids: TfGrids,
    pub pi: TfDistribution,
}

impl CmcdConfig {
    /// Grids from the signal grid and `M`, kernel `Π` from `spec` on the lag grids.
    pub fn new(mwd: MwdConfig, gmc: GmcMatrices, signal: &UniformGrid, spec: &KernelSpec) -> Result<Self> {
        let grids = TfGrids::for_config(signal, &mwd)?;
        let pi = phi_to_pi(spec, &grids)?;
        Ok(Self { mwd, gmc, grids, pi })
    }

    pub fn with_pi(mwd: MwdConfig, gmc: GmcMatrices, grids: TfGrids, pi: TfDistribution) -> Result<Self> {
        let (lx, lu) = grids.lag_grids()?;
        if (pi.xgrid.step - lx.step).abs() > 1e-9 * lx.step || (pi.ugrid.step - lu.step).abs() > 1e-9 * lu.step {
            return Err(MtfaError::GridMismatch("kernel steps differ from the TF grid steps".into()));
        }
        Ok(Self { mwd, gmc, grids, pi })
    }

    /// `M = J, M₁ = M₂ = I, M₃ = PI` and `M₄ = M₅ = M₆ = J`.
    pub fn classical(signal: &UniformGrid, spec: &KernelSpec) -> Result<Self> {
        Self::new(MwdConfig::classical(), GmcMatrices::classical(), signal, spec)
    }

    pub fn family(&self) -> CmcdFamily {
        let classical_mwd = self.mwd.family() == MwdFamily::Wigner;
        let gf = self.gmc.family();
        if classical_mwd && gf == GmcFamily::Conventional {
            return CmcdFamily::Cohen;
        }
        if self.gmc.m6 == self.gmc.m4 && is_delta(&self.pi) {
            return CmcdFamily::Mwd;
        }
        if classical_mwd {
            return CmcdFamily::GmcBasedCohen;
        }
        match gf {
            GmcFamily::Conventional => CmcdFamily::MwdBasedCohen,
            GmcFamily::IType => CmcdFamily::JointIType,
            GmcFamily::IIType => CmcdFamily::JointIIType,
            GmcFamily::IVType => CmcdFamily::JointIVType,
            GmcFamily::General => CmcdFamily::General,
        }
    }
}

/// Special cases of the distribution by matrix pattern and kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcdFamily {
    GmcBasedCohen,
    MwdBasedCohen,
    Cohen,
    Mwd,
    JointIType,
    JointIIType,
    JointIVType,
    General,
}

fn is_delta(pi: &TfDistribution) -> bool {
    let (Some(i0), Some(j0)) = (pi.xgrid.zero_index(), pi.ugrid.zero_index()) else {
        return false;
    };
    let want = 1.0 / pi.cell();
    pi.values.iter().enumerate().all(|(k, v)| {
        let (i, j) = (k / pi.ugrid.count, k % pi.ugrid.count);
        if i == i0 && j == j0 {
            (v - C64::new(want, 0.0)).norm() <= 1e-12 * want
        } else {
            *v == C64::new(0.0, 0.0)
        }
    })
}

/// `convolve_direct(mwd(f), Π)` on the configured grids.
pub fn cmcd(f: &SampledSignal, cfg: &CmcdConfig) -> Result<TfDistribution> {
    let w = mwd(f, &cfg.mwd, &cfg.grids)?;
    convolve_direct(&w, &cfg.pi, &cfg.gmc)
}

/// As [`cmcd`] with the convolution taken through the spectral route.
pub fn cmcd_spectral(f: &SampledSignal, cfg: &CmcdConfig) -> Result<TfDistribution> {
    let w = mwd(f, &cfg.mwd, &cfg.grids)?;
    convolve_spectral(&w, &cfg.pi, &cfg.gmc)
}

/// Dispatches on [`CmcdFamily`]: the Cohen row uses the textbook Wigner sum
/// and an unchirped convolution, the delta row returns the Wigner-type
/// distribution unchanged.
pub fn cmcd_dispatch(f: &SampledSignal, cfg: &CmcdConfig) -> Result<(CmcdFamily, TfDistribution)> {
    let fam = cfg.family();
    let out = match fam {
        CmcdFamily::Cohen => {
            let w = wigner_direct(f, &cfg.grids)?;
            let (lx, lu) = (&cfg.pi.xgrid, &cfg.pi.ugrid);
            let off = match (lx.zero_index(), lu.zero_index()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(MtfaError::InvalidGrid("kernel grid lacks 0".into())),
            };
            let full = linear_convolve(&w.array(), &cfg.pi.array(), off, w.shape());
            let cell = w.cell();
            TfDistribution::new(w.xgrid, w.ugrid, full.into_iter().map(|v| v * cell).collect())?
        }
        CmcdFamily::Mwd => mwd(f, &cfg.mwd, &cfg.grids)?,
        _ => cmcd(f, cfg)?,
    };
    Ok((fam, out))
}

/// Classical Cohen distribution by quadrature of
/// `∭ f(y + z/2)·conj f(y − z/2)·φ(v, z)·e^{−2πi(v·x + z·w − y·v)} dy dz dv`,
/// with `φ` sampled on [`phi_grids`]. The inner `y` sum is done once per
/// `(v, z)`.
pub fn classical_cohen_oracle(f: &SampledSignal, spec: &KernelSpec, grids: &TfGrids) -> Result<TfDistribution> {
    let (nx, nu) = (grids.x.count, grids.u.count);
    if nx * nu > 64 * 64 || f.grid.count > 128 {
        return Err(MtfaError::GridTooLarge(format!("oracle limited to 64x64, got {nx}x{nu}")));
    }
    let h = f.grid.step;
    let (vg, zg) = phi_grids(grids)?;
    let n = f.grid.count as i64;
    // amb[v][z] = Σ_y f(y + z/2)·conj f(y − z/2)·e^{2πi·y·v}·Δy with z/2 on signal nodes.
    let mut amb = vec![C64::new(0.0, 0.0); vg.count * zg.count];
    for b in 0..zg.count {
        let half = zg.point(b) / (2.0 * h);
        if (half - half.round()).abs() > 1e-6 {
            return Err(MtfaError::GridMismatch("lag samples must fall on signal nodes".into()));
        }
        let m = half.round() as i64;
        let prod: Vec<(f64, C64)> = (0..n)
            .filter(|i| i + m >= 0 && i - m >= 0 && i + m < n && i - m < n)
            .map(|i| (f.grid.point(i as usize), f.values[(i + m) as usize] * f.values[(i - m) as usize].conj()))
            .collect();
        for a in 0..vg.count {
            let v = vg.point(a);
            let s: C64 = prod.iter().map(|(y, p)| p * cis(2.0 * PI * (y * v).rem_euclid(1.0))).sum();
            amb[a * zg.count + b] = s * h * phi_eval(spec, v, zg.point(b));
        }
    }
    let out = sep_fourier(&amb, vg.lin(), zg.lin(), grids.x.lin(), grids.u.lin(), 1.0);
    let cell = vg.step * zg.step;
    TfDistribution::new(grids.x, grids.u, out.into_iter().map(|v| v * cell).collect())
}

/// The delta kernel on the lag grids of `grids`.
pub fn delta_pi(grids: &TfGrids) -> Result<TfDistribution> {
    let (lx, lu) = lag_grids(&grids.x, &grids.u)?;
    TfDistribution::delta(lx, lu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_rel_l2;
    use crate::signals::{generate, rel_l2, SignalKind};
    use crate::symplectic::{special, Special, SymplecticMatrix};
    use crate::wigner::{cmcd_reconstruct, wigner};

    fn sig(kind: SignalKind, n: usize) -> SampledSignal {
        let g = UniformGrid::symmetric(n, 6.0 / n as f64).unwrap();
        generate(kind, g)
    }

    fn gauss(n: usize) -> SampledSignal {
        let g = UniformGrid::symmetric(n, 1.0 / (n as f64).sqrt() * 1.5).unwrap();
        SampledSignal::from_fn(g, |x| C64::new((-PI * x * x).exp(), 0.0))
    }

    #[test]
    fn table_values() {
        for k in [KernelSpec::Wigner, KernelSpec::ChoiWilliams { sigma: 2.0 }, KernelSpec::BornJordan, KernelSpec::MargenauHill, KernelSpec::Page] {
            assert!((phi_eval(&k, 0.7, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!((phi_eval(&KernelSpec::KirkwoodRihaczek, 1.0, 1.0) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((phi_eval(&KernelSpec::BornJordan, 0.5, 1.0).re - 2.0 / PI).abs() < 1e-15);
        assert_eq!(phi_eval(&KernelSpec::zam(), 0.3, 0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_spec_json() {
        let k: KernelSpec = serde_json::from_str(r#"{"kind":"choi_williams","params":{"sigma":0.5}}"#).unwrap();
        assert_eq!(k, KernelSpec::ChoiWilliams { sigma: 0.5 });
        let k: KernelSpec = serde_json::from_str(r#"{"kind":"zhao_atlas_marks","params":{}}"#).unwrap();
        assert_eq!(k, KernelSpec::zam());
        let s = serde_json::to_string(&KernelSpec::Wigner).unwrap();
        assert_eq!(serde_json::from_str::<KernelSpec>(&s).unwrap(), KernelSpec::Wigner);
        assert!(KernelSpec::ChoiWilliams { sigma: -1.0 }.validate().is_err());
    }

    #[test]
    fn wigner_kernel_is_delta() {
        let f = gauss(32);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let a = phi_to_pi(&KernelSpec::Wigner, &grids).unwrap();
        let b = phi_to_pi(&KernelSpec::Delta, &grids).unwrap();
        assert!(field_rel_l2(&a, &b) < 1e-10);
    }

    #[test]
    fn choi_williams_kernel_shape() {
        let f = gauss(64);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let p = phi_to_pi(&KernelSpec::ChoiWilliams { sigma: 1.0 }, &grids).unwrap();
        let m = p.max_abs();
        assert!(p.values.iter().all(|v| v.im.abs() < 1e-9 * m));
        let (nx, nu) = p.shape();
        for i in 0..nx {
            for j in 0..nu {
                assert!((p.at(i, j) - p.at(nx - 1 - i, nu - 1 - j)).norm() < 1e-9 * m);
            }
        }
        let c = p.at(nx / 2, nu / 2).re;
        assert!(c > 0.0);
        // One period of the lag grid integrates to φ(0, 0).
        let px = UniformGrid::symmetric(grids.x.count, p.xgrid.step).unwrap();
        let pu = UniformGrid::symmetric(grids.u.count, p.ugrid.step).unwrap();
        let total: C64 = p.embed(px, pu).unwrap().values.iter().sum::<C64>() * p.cell();
        assert!((total.re - 1.0).abs() < 1e-2, "{total}");
    }

    #[test]
    fn custom_phi_round_trip() {
        let f = gauss(32);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let mut phi = phi_samples(&KernelSpec::ChoiWilliams { sigma: 0.3 }, &grids).unwrap();
        for (k, v) in phi.values.iter_mut().enumerate() {
            v[1] = 0.1 * ((k % 7) as f64 - 3.0);
        }
        let pi = phi_to_pi(&KernelSpec::CustomPhi(phi.clone()), &grids).unwrap();
        let back = pi_to_phi(&pi, &grids).unwrap();
        let a: Vec<C64> = phi.values.iter().map(|v| C64::new(v[0], v[1])).collect();
        let b: Vec<C64> = back.values.iter().map(|v| C64::new(v[0], v[1])).collect();
        assert!(rel_l2(&b, &a) < 1e-6, "{}", rel_l2(&b, &a));
    }

    #[test]
    fn oracle_wigner_of_gaussian() {
        let f = gauss(64);
        let grids = TfGrids::classical(&f.grid).unwrap();
        let c = classical_cohen_oracle(&f, &KernelSpec::Wigner, &grids).unwrap();
        let want = TfDistribution::from_fn(grids.x, grids.u, |x, u| C64::new(2f64.sqrt() * (-2.0 * PI * (x * x + u * u)).exp(), 0.0));
        assert!(field_rel_l2(&c, &want) < 1e-2, "{}", field_rel_l2(&c, &want));
        let z = SampledSignal::zeros(f.grid);
        assert_eq!(classical_cohen_oracle(&z, &KernelSpec::Wigner, &grids).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn oracle_margenau_hill_ridge() {
        let g = UniformGrid::interval(-2.0, 2.0, 16.0).unwrap();
        let f = generate(SignalKind::CExp, g);
        let grids = TfGrids::classical(&g).unwrap();
        let c = classical_cohen_oracle(&f, &KernelSpec::MargenauHill, &grids).unwrap();
        let target = (0..grids.u.count)
            .min_by(|&a, &b| (grids.u.point(a) - 0.5).abs().total_cmp(&(grids.u.point(b) - 0.5).abs()))
            .unwrap();
        for i in 8..grids.x.count - 8 {
            let best = (0..grids.u.count).max_by(|&a, &b| c.at(i, a).norm().total_cmp(&c.at(i, b).norm())).unwrap();
            assert_eq!(best, target, "row {i}");
        }
    }

    #[test]
    fn classical_cmcd_matches_oracle() {
        let f = sig(SignalKind::GaussLfm, 64);
        for spec in [KernelSpec::MargenauHill, KernelSpec::ChoiWilliams { sigma: 1.0 }, KernelSpec::BornJordan] {
            let cfg = CmcdConfig::classical(&f.grid, &spec).unwrap();
            let c = cmcd(&f, &cfg).unwrap();
            let o = classical_cohen_oracle(&f, &spec, &cfg.grids).unwrap().scale(C64::new(0.0, -1.0));
            assert!(field_rel_l2(&c, &o) < 5e-2, "{}: {}", spec.name(), field_rel_l2(&c, &o));
        }
    }

    #[test]
    fn delta_kernel_gives_mwd_and_dispatch_agrees() {
        let f = sig(SignalKind::Lfm, 48);
        let m1 = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        let mwdc = MwdConfig::new(SymplecticMatrix::j(1), m1.clone(), m1, special(Special::PI, 1).unwrap()).unwrap();
        let m4 = crate::gmconv::from_axes([-5.0, 1.0, 0.0, -0.2], [5.0, 1.0, 0.0, 0.2]).unwrap();
        let cfg = CmcdConfig::new(mwdc.clone(), GmcMatrices::ii_type(m4).unwrap(), &f.grid, &KernelSpec::Delta).unwrap();
        let w = mwd(&f, &mwdc, &cfg.grids).unwrap();
        let c = cmcd(&f, &cfg).unwrap();
        assert!(field_rel_l2(&c, &w) < 1e-10);
        let (fam, fast) = cmcd_dispatch(&f, &cfg).unwrap();
        assert_eq!(fam, CmcdFamily::Mwd);
        assert!(field_rel_l2(&fast, &c) < 1e-8);
    }

    #[test]
    fn cohen_fast_path_and_wigner_row() {
        let f = sig(SignalKind::GaussLfm, 48);
        let cfg = CmcdConfig::classical(&f.grid, &KernelSpec::ChoiWilliams { sigma: 2.0 }).unwrap();
        let (fam, fast) = cmcd_dispatch(&f, &cfg).unwrap();
        assert_eq!(fam, CmcdFamily::Cohen);
        let c = cmcd(&f, &cfg).unwrap();
        assert!(field_rel_l2(&fast, &c) < 1e-8);
        // Convolution of the classical distribution with Π.
        let w = wigner(&f, &cfg.grids).unwrap();
        let conv = convolve_direct(&w, &cfg.pi, &GmcMatrices::classical()).unwrap();
        assert!(field_rel_l2(&conv, &c) < 1e-10);
        let wcfg = CmcdConfig::classical(&f.grid, &KernelSpec::Wigner).unwrap();
        assert!(field_rel_l2(&cmcd(&f, &wcfg).unwrap(), &w) < 1e-9);
    }

    #[test]
    fn family_labels() {
        let g = UniformGrid::symmetric(16, 0.25).unwrap();
        let m4 = crate::gmconv::from_axes([1.0, 4.0, 1.0, 5.0], [1.0, 1.0, 1.0, 2.0]).unwrap();
        let m = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 0.5).unwrap();
        let mw = MwdConfig::new(m, SymplecticMatrix::identity(1), SymplecticMatrix::identity(1), special(Special::PI, 1).unwrap()).unwrap();
        let spec = KernelSpec::BornJordan;
        let cases = [
            (MwdConfig::classical(), GmcMatrices::ii_type(m4.clone()).unwrap(), CmcdFamily::GmcBasedCohen),
            (mw.clone(), GmcMatrices::classical(), CmcdFamily::MwdBasedCohen),
            (mw.clone(), GmcMatrices::i_type(m4.clone()).unwrap(), CmcdFamily::JointIType),
            (mw.clone(), GmcMatrices::ii_type(m4.clone()).unwrap(), CmcdFamily::JointIIType),
            (mw.clone(), GmcMatrices::iv_type(m4.clone()).unwrap(), CmcdFamily::JointIVType),
        ];
        for (a, b, fam) in cases {
            assert_eq!(CmcdConfig::new(a, b, &g, &spec).unwrap().family(), fam);
        }
    }

    #[test]
    fn linear_in_kernel() {
        let f = sig(SignalKind::GaussLfm, 32);
        let cfg1 = CmcdConfig::classical(&f.grid, &KernelSpec::MargenauHill).unwrap();
        let cfg2 = CmcdConfig::classical(&f.grid, &KernelSpec::BornJordan).unwrap();
        let (a, b) = (C64::new(0.5, 1.0), C64::new(-2.0, 0.3));
        let mut mix = cfg1.clone();
        mix.pi.values = cfg1.pi.values.iter().zip(&cfg2.pi.values).map(|(p, q)| a * p + b * q).collect();
        let lhs = cmcd(&f, &mix).unwrap();
        let r1 = cmcd(&f, &cfg1).unwrap();
        let r2 = cmcd(&f, &cfg2).unwrap();
        let rhs: Vec<C64> = r1.values.iter().zip(&r2.values).map(|(p, q)| a * p + b * q).collect();
        assert!(rel_l2(&lhs.values, &rhs) < 1e-12);
    }

    #[test]
    fn reconstruction_when_a3_vanishes() {
        let g = UniformGrid::interval(-5.0, 5.0, 12.0).unwrap();
        let f = SampledSignal::from_fn(g, |x| C64::new((-x * x / 2.0).exp(), 0.0) * cis(0.5 * PI * x * x));
        let m1 = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        let mw = MwdConfig::new(SymplecticMatrix::j(1), m1, SymplecticMatrix::identity(1), SymplecticMatrix::j(1)).unwrap();
        let gmc = GmcMatrices::classical();
        let cfg = CmcdConfig::new(mw.clone(), gmc.clone(), &g, &KernelSpec::ChoiWilliams { sigma: 4.0 }).unwrap();
        let c = cmcd(&f, &cfg).unwrap();
        let back = cmcd_reconstruct(&c, &cfg.pi, &mw, &gmc, &g, 1e-9).unwrap();
        let want = f.scale(f.values[g.zero_index().unwrap()].conj());
        let e = rel_l2(&back.values, &want.values);
        assert!(e < 1e-6, "{e}");
        let bad = MwdConfig::classical();
        assert!(matches!(cmcd_reconstruct(&c, &cfg.pi, &bad, &gmc, &g, 1e-9), Err(MtfaError::ConstraintViolated(_))));
    }
}
