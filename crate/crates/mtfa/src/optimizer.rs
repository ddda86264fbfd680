//! Derivative-free search over the seven matrices.
//!
//! Free matrices are written `C·exp(J·S)` with `S` symmetric and `C ∈ {I, J}`
//! fixed per restart. Matrices in one tie group share their parameters.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::ExampleConfig;
use crate::error::{MtfaError, Result};
use crate::field::TfDistribution;
use crate::gmconv::GmcMatrices;
use crate::io::MatrixFile;
use crate::lsfilter::{denoise_with_target, target_wigner, Matrices, DEFAULT_EPSILON};
use crate::signals::{add_awgn_stream, generate, rng_stream, SampledSignal, SignalKind, UniformGrid};
use crate::symplectic::{exp_param, HamiltonianParams, SymplecticMatrix};
use crate::wigner::MwdConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    M,
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
}

impl Slot {
    pub const ALL: [Slot; 7] = [Slot::M, Slot::M1, Slot::M2, Slot::M3, Slot::M4, Slot::M5, Slot::M6];

    /// Half the matrix dimension.
    pub fn n(self) -> usize {
        match self {
            Slot::M4 | Slot::M5 | Slot::M6 => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        ["m", "m1", "m2", "m3", "m4", "m5", "m6"][self as usize]
    }

    pub fn get(self, m: &Matrices) -> &SymplecticMatrix {
        match self {
            Slot::M => &m.mwd.m,
            Slot::M1 => &m.mwd.m1,
            Slot::M2 => &m.mwd.m2,
            Slot::M3 => &m.mwd.m3,
            Slot::M4 => &m.gmc.m4,
            Slot::M5 => &m.gmc.m5,
            Slot::M6 => &m.gmc.m6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Mean signal-domain MSE after inversion.
    #[default]
    SignalMse,
    /// Mean Wigner-domain MSE of the filtered distribution.
    WignerMse,
}

fn default_interval() -> [f64; 2] {
    [-5.0, 5.0]
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub signal: SignalKind,
    pub fs: f64,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Frozen matrices come from this example; all classical when absent.
    #[serde(default)]
    pub base_example: Option<u8>,
    /// Groups of free matrices; the matrices of one group are tied.
    pub free: Vec<Vec<Slot>>,
    #[serde(default)]
    pub objective: ObjectiveKind,
    /// Also start restarts from the `J` coset.
    #[serde(default)]
    pub coset_seeds: bool,
}

impl Scenario {
    /// Example 1 with `M₁ = M₂` free, one SNR point and a few trials.
    pub fn example1() -> Self {
        Self {
            signal: SignalKind::Lfm,
            fs: 30.0,
            interval: default_interval(),
            snr_db: vec![0.0],
            trials: 3,
            seed: 2024,
            epsilon: DEFAULT_EPSILON,
            base_example: Some(1),
            free: vec![vec![Slot::M1, Slot::M2]],
            objective: ObjectiveKind::SignalMse,
            coset_seeds: true,
        }
    }

    pub fn param_count(&self) -> usize {
        self.free.iter().map(|g| HamiltonianParams::len_for(g[0].n())).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.free.is_empty() || self.free.iter().any(|g| g.is_empty()) {
            return Err(MtfaError::InvalidGrid("free mask must be nonempty".into()));
        }
        let mut seen = Vec::new();
        for g in &self.free {
            if g.iter().any(|s| s.n() != g[0].n()) {
                return Err(MtfaError::DimensionMismatch("a tie group mixes 2x2 and 4x4 matrices".into()));
            }
            for s in g {
                if seen.contains(s) {
                    return Err(MtfaError::InvalidGrid(format!("{} appears in two groups", s.name())));
                }
                seen.push(*s);
            }
        }
        if self.trials == 0 || self.snr_db.is_empty() {
            return Err(MtfaError::InvalidGrid("scenario needs trials and SNR points".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(MtfaError::InvalidGrid("epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Coset representative left-multiplying a group's exponential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coset {
    I,
    J,
}

/// A scenario with its fixed observations (common random numbers).
pub struct Problem {
    pub scenario: Scenario,
    base: Matrices,
    clean: SampledSignal,
    target: TfDistribution,
    observations: Vec<SampledSignal>,
}

impl Problem {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let grid = UniformGrid::interval(scenario.interval[0], scenario.interval[1], scenario.fs)?;
        let clean = generate(scenario.signal, grid);
        let base = match scenario.base_example {
            Some(id) => ExampleConfig::new(id)?.matrices,
            None => Matrices::classical(),
        };
        let target = target_wigner(&clean)?;
        let mut observations = Vec::new();
        for (s, &snr) in scenario.snr_db.iter().enumerate() {
            for t in 0..scenario.trials {
                observations.push(add_awgn_stream(&clean, snr, scenario.seed, ((s as u64) << 32) + t as u64)?);
            }
        }
        Ok(Self { scenario: scenario.clone(), base, clean, target, observations })
    }

    pub fn param_count(&self) -> usize {
        self.scenario.param_count()
    }

    /// The full matrix set for `params`, one `C·exp(J·S)` per tie group.
    pub fn matrices(&self, params: &[f64], cosets: &[Coset]) -> Result<Matrices> {
        if params.len() != self.param_count() {
            return Err(MtfaError::DimensionMismatch(format!("expected {} parameters, got {}", self.param_count(), params.len())));
        }
        let mut slots: Vec<SymplecticMatrix> = Slot::ALL.iter().map(|s| s.get(&self.base).clone()).collect();
        let mut off = 0;
        for (k, g) in self.scenario.free.iter().enumerate() {
            let n = g[0].n();
            let len = HamiltonianParams::len_for(n);
            let e = exp_param(&HamiltonianParams::new(n, params[off..off + len].to_vec())?)?;
            off += len;
            let m = match cosets.get(k).copied().unwrap_or(Coset::I) {
                Coset::I => e,
                Coset::J => SymplecticMatrix::j(n).compose(&e)?,
            };
            for s in g {
                slots[*s as usize] = m.clone();
            }
        }
        let mut it = slots.into_iter();
        let mut next = || it.next().expect("seven slots");
        let mwd = MwdConfig::new(next(), next(), next(), next())?;
        let gmc = GmcMatrices::new(next(), next(), next())?;
        Ok(Matrices { mwd, gmc })
    }

    /// Mean MSE over the fixed observations; any failure propagates.
    pub fn try_eval(&self, params: &[f64], cosets: &[Coset]) -> Result<f64> {
        let m = self.matrices(params, cosets)?;
        let eps = self.scenario.epsilon;
        let kind = self.scenario.objective;
        let vals = self
            .observations
            .par_iter()
            .map(|g| {
                let d = denoise_with_target(g, &self.clean, &self.target, &m, eps)?;
                Ok(match kind {
                    ObjectiveKind::SignalMse => d.diagnostics.signal_mse,
                    ObjectiveKind::WignerMse => d.diagnostics.wigner_mse,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean.is_finite() {
            Ok(mean)
        } else {
            Err(MtfaError::PipelineFailure("non-finite objective".into()))
        }
    }

    /// [`Problem::try_eval`] with failures mapped to `+∞`.
    pub fn eval(&self, params: &[f64], cosets: &[Coset]) -> f64 {
        self.try_eval(params, cosets).unwrap_or(f64::INFINITY)
    }
}

/// Objective of `params` (identity cosets) for `scenario`.
pub fn objective(params: &[f64], scenario: &Scenario) -> Result<f64> {
    Ok(Problem::new(scenario)?.eval(params, &vec![Coset::I; scenario.free.len()]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eval_index: usize,
    pub restart: usize,
    pub objective: f64,
    pub best_so_far: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Search {
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    /// Restart that produced the best point.
    pub best_restart: usize,
    pub trace: Vec<TraceRow>,
    /// The evaluation budget ran out before the last restart converged.
    pub budget_exhausted: bool,
}

impl Search {
    pub fn initial_objective(&self) -> f64 {
        self.trace.first().map_or(f64::INFINITY, |r| r.objective)
    }
}

/// Nelder–Mead on `f` from `x0` with initial simplex edge `step`, stopping
/// after `budget` evaluations or when the simplex collapses. Evaluations
/// are appended to `trace` with indices continuing from its length.
fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64, budget: usize, restart: usize, trace: &mut Vec<TraceRow>) -> bool {
    let dim = x0.len();
    let start = trace.len();
    let mut best = trace.last().map_or(f64::INFINITY, |r| r.best_so_far);
    let mut call = |x: &[f64], trace: &mut Vec<TraceRow>| -> Option<f64> {
        if trace.len() - start >= budget {
            return None;
        }
        let v = f(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        best = best.min(v);
        trace.push(TraceRow { eval_index: trace.len(), restart, objective: v, best_so_far: best, params: x.to_vec() });
        Some(v)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let Some(v0) = call(x0, trace) else { return true };
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let Some(v) = call(&x, trace) else { return true };
        simplex.push((x, v));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[dim].1);
        let size = simplex.iter().skip(1).map(|(x, _)| dist(x, &simplex[0].0)).fold(0.0f64, f64::max);
        if size < 1e-8 || (hi.is_finite() && (hi - lo).abs() <= 1e-12 * lo.abs().max(1e-300)) {
            return false;
        }
        let centroid: Vec<f64> = (0..dim).map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..dim).map(|i| centroid[i] + t * (simplex[dim].0[i] - centroid[i])).collect() };
        let xr = along(-1.0);
        let Some(fr) = call(&xr, trace) else { return true };
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let Some(fe) = call(&xe, trace) else { return true };
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc_ref) = if fr < simplex[dim].1 { (along(-0.5), fr) } else { (along(0.5), simplex[dim].1) };
        let Some(fc) = call(&xc, trace) else { return true };
        if fc < fc_ref {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for k in 1..=dim {
            let xs: Vec<f64> = (0..dim).map(|i| x_best[i] + 0.5 * (simplex[k].0[i] - x_best[i])).collect();
            let Some(fs) = call(&xs, trace) else { return true };
            simplex[k] = (xs, fs);
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Restarted Nelder–Mead on an arbitrary function of `dim` parameters.
/// Restart 0 starts at the origin, later ones at Gaussian perturbations of
/// scale `spread`. `budget` counts evaluations over all restarts.
pub fn minimize(
    f: &mut dyn FnMut(usize, &[f64]) -> f64,
    dim: usize,
    budget: usize,
    restarts: usize,
    seed: u64,
    spread: f64,
) -> Result<Search> {
    if budget == 0 {
        return Err(MtfaError::BudgetExhausted(0));
    }
    let restarts = restarts.max(1);
    let mut rng = rng_stream(seed, 0x6f70);
    let mut trace = Vec::new();
    let mut exhausted = false;
    for r in 0..restarts {
        let left = budget - trace.len();
        if left == 0 {
            exhausted = true;
            break;
        }
        let share = if r + 1 == restarts { left } else { (left / (restarts - r)).max(1) };
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; dim]
        } else {
            (0..dim).map(|_| spread * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
        };
        let mut g = |x: &[f64]| f(r, x);
        exhausted = nelder_mead(&mut g, &x0, 0.25, share, r, &mut trace);
    }
    let best = trace
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("at least one evaluation");
    Ok(Search {
        best_params: best.params.clone(),
        best_objective: best.objective,
        best_restart: best.restart,
        trace,
        budget_exhausted: exhausted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub search: Search,
    pub cosets: Vec<Coset>,
    pub matrices: Matrices,
}

impl Optimized {
    /// The seven matrices in file form, keyed by slot name.
    pub fn matrix_files(&self) -> Vec<(&'static str, MatrixFile)> {
        Slot::ALL.iter().map(|s| (s.name(), MatrixFile::from_matrix(s.get(&self.matrices)))).collect()
    }
}

/// Cosets of restart `r`: identity first, then (with coset seeds) all `J`,
/// then alternating.
fn restart_cosets(scenario: &Scenario, r: usize) -> Vec<Coset> {
    let c = if scenario.coset_seeds && r % 2 == 1 { Coset::J } else { Coset::I };
    vec![c; scenario.free.len()]
}

pub fn optimize(scenario: &Scenario, budget: usize, restarts: usize, seed: u64) -> Result<Optimized> {
    let problem = Problem::new(scenario)?;
    let mut f = |r: usize, x: &[f64]| problem.eval(x, &restart_cosets(scenario, r));
    let search = minimize(&mut f, problem.param_count(), budget, restarts, seed, 0.5)?;
    let cosets = restart_cosets(scenario, search.best_restart);
    let matrices = problem.matrices(&search.best_params, &cosets)?;
    for s in Slot::ALL {
        SymplecticMatrix::validate(s.get(&matrices).matrix().clone(), 1e-8)?;
    }
    Ok(Optimized { search, cosets, matrices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsfilter::denoise;

    fn small(free: Vec<Vec<Slot>>) -> Scenario {
        Scenario {
            signal: SignalKind::GaussLfm,
            fs: 8.0,
            interval: [-4.0, 4.0],
            snr_db: vec![0.0],
            trials: 2,
            seed: 5,
            epsilon: DEFAULT_EPSILON,
            base_example: None,
            free,
            objective: ObjectiveKind::SignalMse,
            coset_seeds: false,
        }
    }

    #[test]
    fn zero_params_reproduce_classical_row() {
        let sc = small(vec![vec![Slot::M1]]);
        let p = Problem::new(&sc).unwrap();
        let v = objective(&[0.0; 3], &sc).unwrap();
        let want = p
            .observations
            .iter()
            .map(|g| denoise(g, &p.clean, &Matrices::classical(), sc.epsilon).unwrap().diagnostics.signal_mse)
            .sum::<f64>()
            / 2.0;
        assert!((v - want).abs() <= 1e-12 * want, "{v} vs {want}");
        assert_eq!(v, objective(&[0.0; 3], &sc).unwrap());
    }

    #[test]
    fn example1_m1_params_differ_from_zero() {
        // [[0,1],[-1,2]] = exp(N) with N = [[-1,1],[-1,1]] nilpotent, and
        // N = J·S for S = [[1,-1],[-1,1]].
        let s = [1.0, -1.0, 1.0];
        let m = exp_param(&HamiltonianParams::new(1, s.to_vec()).unwrap()).unwrap();
        let want = SymplecticMatrix::from_2x2(0.0, 1.0, -1.0, 2.0).unwrap();
        assert!((m.matrix() - want.matrix()).amax() < 1e-12);
        let mut sc = small(vec![vec![Slot::M1, Slot::M2]]);
        sc.signal = SignalKind::Lfm;
        sc.fs = 12.0;
        sc.interval = [-2.0, 2.0];
        assert_ne!(objective(&s, &sc).unwrap(), objective(&[0.0; 3], &sc).unwrap());
    }

    #[test]
    fn quadratic_surrogate_converges() {
        let target = [0.3, -0.7, 1.1];
        let mut f = |_: usize, x: &[f64]| -> f64 {
            x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b) * (a - b)).sum()
        };
        let s = minimize(&mut f, 3, 600, 1, 0, 0.5).unwrap();
        assert!(dist(&s.best_params, &target) < 1e-3, "{:?}", s.best_params);
        assert!(!s.budget_exhausted);
    }

    #[test]
    fn single_evaluation_returns_seed_point() {
        let mut f = |_: usize, x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
        let s = minimize(&mut f, 2, 1, 3, 0, 0.5).unwrap();
        assert_eq!(s.trace.len(), 1);
        assert_eq!(s.best_params, vec![0.0, 0.0]);
        assert!(s.budget_exhausted);
        assert!(matches!(minimize(&mut f, 2, 0, 1, 0, 0.5), Err(MtfaError::BudgetExhausted(0))));
    }

    #[test]
    fn failures_are_infinite() {
        let sc = small(vec![vec![Slot::M1]]);
        let p = Problem::new(&sc).unwrap();
        assert_eq!(p.eval(&[1e9, 0.0, 0.0], &[Coset::I]), f64::INFINITY);
        let mut f = |_: usize, x: &[f64]| if x[0] > 0.1 { f64::INFINITY } else { x[0].abs() + x[1].abs() };
        let s = minimize(&mut f, 2, 50, 1, 0, 0.5).unwrap();
        assert!(s.best_objective.is_finite());
    }

    #[test]
    fn tied_matrices_are_identical() {
        let mut sc = small(vec![vec![Slot::M1, Slot::M2]]);
        sc.coset_seeds = true;
        let o = optimize(&sc, 12, 2, 1).unwrap();
        assert_eq!(o.matrices.mwd.m1, o.matrices.mwd.m2);
        let t = &o.search.trace;
        assert!(t.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
        assert!(o.search.best_objective <= o.search.initial_objective());
    }

    #[test]
    fn scenario_validation() {
        assert!(Problem::new(&small(vec![])).is_err());
        assert!(Problem::new(&small(vec![vec![Slot::M1, Slot::M4]])).is_err());
        assert!(Problem::new(&small(vec![vec![Slot::M1], vec![Slot::M1]])).is_err());
        let json = serde_json::to_string(&Scenario::example1()).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), Scenario::example1());
    }
}
