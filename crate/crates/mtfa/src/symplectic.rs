//! Symplectic matrices in the row-vector convention.
//!
//! A point `x` maps to `x·M` and `M = [[A, B], [C, D]]` belongs to Sp(N) when
//! `M·J·Mᵀ = J` with `J = [[0, I], [-I, 0]]`. Every module in the crate uses
//! this convention.

use nalgebra::DMatrix;

use crate::error::{MtfaError, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Parameters above this max-abs entry are refused by [`exp_param`].
pub const PARAM_CAP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: DMatrix<f64>,
}

pub fn j_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `‖M·J·Mᵀ − J‖_∞` as the largest absolute entry.
pub fn residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = j_matrix(n);
    (m * &j * m.transpose() - j).amax()
}

impl SymplecticMatrix {
    pub fn validate(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(MtfaError::DimensionMismatch(format!(
                "{}x{} is not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() % 2 != 0 || entries.nrows() == 0 {
            return Err(MtfaError::OddDimension(entries.nrows()));
        }
        if !(tol > 0.0) {
            return Err(MtfaError::InvalidGrid(format!("tolerance {tol} must be positive")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(MtfaError::NotSymplectic { residual: f64::INFINITY });
        }
        let r = residual(&entries);
        if !(r <= tol) {
            return Err(MtfaError::NotSymplectic { residual: r });
        }
        let det = entries.determinant();
        if (det - 1.0).abs() > 1e-8_f64.max(tol) {
            return Err(MtfaError::NotSymplectic { residual: (det - 1.0).abs() });
        }
        Ok(Self { n: entries.nrows() / 2, m: entries })
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(MtfaError::DimensionMismatch("rows of unequal length".into()));
        }
        let m = DMatrix::from_fn(r, r, |i, j| rows[i][j]);
        Self::validate(m, tol)
    }

    /// 2×2 shorthand `[[a, b], [c, d]]`.
    pub fn from_2x2(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::validate(DMatrix::from_row_slice(2, 2, &[a, b, c, d]), DEFAULT_TOL)
    }

    /// 4×4 matrix whose four blocks are diagonal, built from one 2×2 matrix per axis.
    pub fn from_axes(axes: &[SymplecticMatrix]) -> Result<Self> {
        let n = axes.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for (i, ax) in axes.iter().enumerate() {
            if ax.n != 1 {
                return Err(MtfaError::DimensionMismatch("axis matrices must be 2x2".into()));
            }
            m[(i, i)] = ax.m[(0, 0)];
            m[(i, n + i)] = ax.m[(0, 1)];
            m[(n + i, i)] = ax.m[(1, 0)];
            m[(n + i, n + i)] = ax.m[(1, 1)];
        }
        Self::validate(m, 1e-9)
    }

    pub fn identity(n: usize) -> Self {
        Self { n, m: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn j(n: usize) -> Self {
        Self { n, m: j_matrix(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.m.view((r * self.n, c * self.n), (self.n, self.n)).into_owned()
    }

    pub fn a(&self) -> DMatrix<f64> {
        self.block(0, 0)
    }
    pub fn b(&self) -> DMatrix<f64> {
        self.block(0, 1)
    }
    pub fn c(&self) -> DMatrix<f64> {
        self.block(1, 0)
    }
    pub fn d(&self) -> DMatrix<f64> {
        self.block(1, 1)
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    pub fn det_b(&self) -> f64 {
        self.b().determinant()
    }

    pub fn residual(&self) -> f64 {
        residual(&self.m)
    }

    /// Matrix product `self · other`, revalidated.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(MtfaError::DimensionMismatch(format!(
                "half-dimensions {} and {}",
                self.n, other.n
            )));
        }
        Self::validate(&self.m * &other.m, 1e-9)
    }

    /// `M⁻¹ = [[Dᵀ, −Bᵀ], [−Cᵀ, Aᵀ]]`.
    pub fn inverse(&self) -> Self {
        let n = self.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.d().transpose());
        m.view_mut((0, n), (n, n)).copy_from(&(-self.b().transpose()));
        m.view_mut((n, 0), (n, n)).copy_from(&(-self.c().transpose()));
        m.view_mut((n, n), (n, n)).copy_from(&self.a().transpose());
        Self { n, m }
    }

    pub fn neg(&self) -> Self {
        Self { n: self.n, m: -&self.m }
    }

    pub fn transpose(&self) -> Result<Self> {
        Self::validate(self.m.transpose(), 1e-9)
    }

    /// `B⁻¹A`, the chirp matrix attached to the convolution matrices.
    pub fn b_inv_a(&self) -> Result<DMatrix<f64>> {
        let bi = self.b().try_inverse().ok_or(MtfaError::SingularB)?;
        Ok(bi * self.a())
    }

    /// True when all four blocks are diagonal, so the matrix acts axis by axis.
    pub fn is_axis_separable(&self) -> bool {
        let n = self.n;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i % n != j % n && self.m[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// The 2×2 matrix acting on axis `i` of an axis-separable matrix.
    pub fn axis(&self, i: usize) -> [[f64; 2]; 2] {
        let n = self.n;
        [
            [self.m[(i, i)], self.m[(i, n + i)]],
            [self.m[(n + i, i)], self.m[(n + i, n + i)]],
        ]
    }

    /// For N=1, the scalar blocks `(a, b, c, d)`.
    pub fn abcd(&self) -> (f64, f64, f64, f64) {
        (self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Special {
    J,
    I2N,
    PI,
    TauWigner(f64),
    STFT,
}

impl Special {
    pub fn parse(name: &str) -> Result<Special> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "j" => Ok(Special::J),
            "i" | "i2n" | "identity" => Ok(Special::I2N),
            "pi" => Ok(Special::PI),
            "stft" => Ok(Special::STFT),
            _ => {
                if let Some(t) = lower.strip_prefix("tauwigner(").and_then(|s| s.strip_suffix(')')) {
                    let tau = t.parse::<f64>().map_err(|_| MtfaError::UnknownName(name.into()))?;
                    Ok(Special::TauWigner(tau))
                } else {
                    Err(MtfaError::UnknownName(name.into()))
                }
            }
        }
    }
}

pub fn special(name: Special, n: usize) -> Result<SymplecticMatrix> {
    if n == 0 {
        return Err(MtfaError::DimensionMismatch("n must be positive".into()));
    }
    let blocks = |a: f64, b: f64, c: f64, d: f64| {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, i)] = a;
            m[(i, n + i)] = b;
            m[(n + i, i)] = c;
            m[(n + i, n + i)] = d;
        }
        SymplecticMatrix::validate(m, DEFAULT_TOL)
    };
    match name {
        Special::J => Ok(SymplecticMatrix::j(n)),
        Special::I2N => Ok(SymplecticMatrix::identity(n)),
        Special::PI => blocks(1.0, 1.0, -0.5, 0.5),
        Special::TauWigner(tau) => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(MtfaError::UnknownName(format!("TauWigner({tau}) needs 0 < tau < 1")));
            }
            blocks(1.0, 1.0, -(1.0 - tau), tau)
        }
        Special::STFT => blocks(1.0, 0.0, -1.0, 1.0),
    }
}

pub fn special_by_name(name: &str, n: usize) -> Result<SymplecticMatrix> {
    special(Special::parse(name)?, n)
}

/// Coordinates of a Hamiltonian matrix `H = J·S` with `S` symmetric; the
/// parameters are the upper triangle of `S`, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParams {
    pub n: usize,
    pub params: Vec<f64>,
}

impl HamiltonianParams {
    pub fn len_for(n: usize) -> usize {
        n * (2 * n + 1)
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, params: vec![0.0; Self::len_for(n)] }
    }

    pub fn new(n: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::len_for(n) {
            return Err(MtfaError::DimensionMismatch(format!(
                "expected {} parameters for n={n}, got {}",
                Self::len_for(n),
                params.len()
            )));
        }
        Ok(Self { n, params })
    }

    pub fn symmetric(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        let mut s = DMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                s[(i, j)] = self.params[k];
                s[(j, i)] = self.params[k];
                k += 1;
            }
        }
        s
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        j_matrix(self.n) * self.symmetric()
    }
}

/// Scaling-and-squaring Taylor exponential.
pub fn expm(h: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = h.iter().map(|v| v.abs()).sum::<f64>().max(0.0);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = h / 2f64.powi(s);
    let dim = h.nrows();
    let mut term = DMatrix::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &x / k as f64;
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn exp_param(p: &HamiltonianParams) -> Result<SymplecticMatrix> {
    if p.params.len() != HamiltonianParams::len_for(p.n) {
        return Err(MtfaError::DimensionMismatch("parameter length".into()));
    }
    let cap = p.params.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !cap.is_finite() || cap > PARAM_CAP {
        return Err(MtfaError::Overflow(format!("max |param| = {cap} exceeds {PARAM_CAP}")));
    }
    let m = expm(&p.hamiltonian());
    if m.iter().any(|v| !v.is_finite()) || m.amax() > 1e12 {
        return Err(MtfaError::Overflow("exponential is not representable".into()));
    }
    // Relative tolerance: roundoff in exp grows with the entry size.
    let tol = 1e-8 * (1.0 + m.amax() * m.amax());
    let r = residual(&m);
    if r > tol {
        return Err(MtfaError::NotSymplectic { residual: r });
    }
    Ok(SymplecticMatrix { n: p.n, m })
}
