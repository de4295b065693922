//! Long-run covariance estimation and simulation of the Gaussian limit.
//!
//! The limit of the sequential process is a centered Gaussian field with
//! covariance `(s /\ t) * Gamma(u, v)`, where `Gamma` sums the indicator
//! cross-covariances over all lags. `Gamma` is estimated by a lag-window
//! estimator on the lattice and repaired to positive semidefinite by
//! eigenvalue clipping; the field is then simulated exactly on the grid by
//! independent Brownian increments in `s` with spatial covariance `Gamma`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::empirical::{eval_sequential, Centering, ProcessField};
use crate::error::{Error, Result};
use crate::generators::{Family, SequenceSpec, StationarySample};
use crate::grid::{EvaluationGrid, ULattice};
use crate::par::map_reps;
use crate::rng::stream;
use crate::stats::ks_two_sample;

/// Lag-window taper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagKernel {
    /// Linear taper `1 - |h| / (L + 1)`.
    Bartlett,
    /// Flat weights up to the bandwidth.
    Truncated,
}

impl LagKernel {
    fn weight(self, lag: usize, bandwidth: usize) -> f64 {
        match self {
            LagKernel::Bartlett => 1.0 - lag as f64 / (bandwidth as f64 + 1.0),
            LagKernel::Truncated => 1.0,
        }
    }
}

/// Estimated (or analytic) spatial covariance kernel on a lattice pair grid.
#[derive(Debug, Clone)]
pub struct CovKernelEstimate {
    pub lattice: ULattice,
    /// Symmetric PSD-projected matrix over flat lattice indices.
    pub gamma: DMatrix<f64>,
    pub bandwidth: usize,
    pub kernel: LagKernel,
}

/// One simulated draw of the limit field on a grid.
#[derive(Debug, Clone)]
pub struct LimitField {
    pub values: DMatrix<f64>,
    pub grid: EvaluationGrid,
    pub seed: u64,
    pub stream: u64,
}

/// Standard lag-window default `floor(n^(1/3))`.
pub fn default_bandwidth(n: usize) -> usize {
    (n as f64).powf(1.0 / 3.0).floor() as usize
}

/// Per-row indicator digits: for observation `i` and dimension `j`, the
/// smallest axis index dominating the coordinate.
fn lattice_digits(lattice: &ULattice) -> Vec<Vec<usize>> {
    let mut digits = Vec::with_capacity(lattice.len());
    for flat in 0..lattice.len() {
        let mut rest = flat;
        let mut row = vec![0usize; lattice.dim()];
        for j in (0..lattice.dim()).rev() {
            let len = lattice.axes()[j].len();
            row[j] = rest % len;
            rest /= len;
        }
        digits.push(row);
    }
    digits
}

/// Lag-window estimate of the long-run covariance kernel
/// `Gamma(u, v) = sum_h w(h) cov_h(u, v)` of centered indicators, followed
/// by eigenvalue clipping to restore positive semidefiniteness.
pub fn estimate_gamma(
    sample: &StationarySample,
    lattice: &ULattice,
    bandwidth: usize,
    kernel: LagKernel,
) -> Result<CovKernelEstimate> {
    if bandwidth >= sample.n {
        return Err(Error::parameter("bandwidth", "must be smaller than the sample size"));
    }
    if lattice.dim() != sample.dim() {
        return Err(Error::parameter("u_points", "lattice dimension does not match sample"));
    }
    let n = sample.n;
    let npts = lattice.len();
    let digits = lattice_digits(lattice);

    // Indicator matrix, then column centering by the empirical CDF.
    let mut z = DMatrix::zeros(n, npts);
    for i in 0..n {
        let cell: Vec<usize> = {
            let row = sample.row(i);
            lattice
                .axes()
                .iter()
                .zip(row)
                .map(|(axis, &x)| axis.partition_point(|&g| g < x))
                .collect()
        };
        for (p, dig) in digits.iter().enumerate() {
            if dig.iter().zip(&cell).all(|(d, c)| d >= c) {
                z[(i, p)] = 1.0;
            }
        }
    }
    for p in 0..npts {
        let mean = z.column(p).sum() / n as f64;
        for i in 0..n {
            z[(i, p)] -= mean;
        }
    }

    let mut gamma = z.transpose() * &z / n as f64;
    for h in 1..=bandwidth {
        let w = kernel.weight(h, bandwidth);
        let lead = z.rows(h, n - h);
        let lagged = z.rows(0, n - h);
        let cov_h = lagged.transpose() * lead / n as f64;
        gamma += (&cov_h + cov_h.transpose()) * w;
    }
    gamma = (&gamma + gamma.transpose()) * 0.5;

    project_psd(&mut gamma);
    Ok(CovKernelEstimate {
        lattice: lattice.clone(),
        gamma,
        bandwidth,
        kernel,
    })
}

/// Analytic kernel for iid rows: only the lag-0 term survives, giving
/// `Gamma(u, v) = C(u /\ v) - C(u) C(v)` (the Brownian-bridge kernel when
/// `d = 1`).
pub fn gamma_analytic_iid(lattice: &ULattice, spec: &SequenceSpec) -> Result<CovKernelEstimate> {
    if !matches!(spec.family, Family::Iid) {
        return Err(Error::parameter("spec", "analytic kernel requires the iid family"));
    }
    if lattice.dim() != spec.dim {
        return Err(Error::parameter("u_points", "lattice dimension does not match spec"));
    }
    let npts = lattice.len();
    let points: Vec<Vec<f64>> = (0..npts).map(|p| lattice.point(p)).collect();
    let cdf: Vec<f64> = points
        .iter()
        .map(|u| spec.true_cdf(u))
        .collect::<Result<_>>()?;
    let mut gamma = DMatrix::zeros(npts, npts);
    for p in 0..npts {
        for q in p..npts {
            let meet: Vec<f64> = points[p]
                .iter()
                .zip(&points[q])
                .map(|(a, b)| a.min(*b))
                .collect();
            let value = spec.true_cdf(&meet)? - cdf[p] * cdf[q];
            gamma[(p, q)] = value;
            gamma[(q, p)] = value;
        }
    }
    Ok(CovKernelEstimate {
        lattice: lattice.clone(),
        gamma,
        bandwidth: 0,
        kernel: LagKernel::Truncated,
    })
}

/// Clip negative eigenvalues to zero on the non-degenerate block, keeping
/// rows with an exactly zero diagonal exactly zero.
fn project_psd(gamma: &mut DMatrix<f64>) {
    let live: Vec<usize> = (0..gamma.nrows()).filter(|&p| gamma[(p, p)] != 0.0).collect();
    if live.is_empty() {
        return;
    }
    let m = live.len();
    let mut sub = DMatrix::zeros(m, m);
    for (a, &p) in live.iter().enumerate() {
        for (b, &q) in live.iter().enumerate() {
            sub[(a, b)] = gamma[(p, q)];
        }
    }
    let eig = SymmetricEigen::new(sub);
    let clipped = DVector::from_iterator(m, eig.eigenvalues.iter().map(|&l| l.max(0.0)));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
    gamma.fill(0.0);
    for (a, &p) in live.iter().enumerate() {
        for (b, &q) in live.iter().enumerate() {
            gamma[(p, q)] = rebuilt[(a, b)];
        }
    }
}

/// Shared factorization for drawing spatial Gaussian vectors with
/// covariance `Gamma`. Degenerate lattice points (zero diagonal) are carried
/// as exact zeros; the live block is factored by Cholesky with diagonal
/// jitter escalation from 1e-12 to 1e-8 if plain Cholesky fails.
pub struct LimitSimulator {
    grid: EvaluationGrid,
    live: Vec<usize>,
    factor: DMatrix<f64>,
}

impl LimitSimulator {
    pub fn new(kernel: &CovKernelEstimate, s_points: &[f64]) -> Result<Self> {
        let grid = EvaluationGrid::new(s_points.to_vec(), kernel.lattice.clone())?;
        let npts = kernel.lattice.len();
        if kernel.gamma.nrows() != npts || kernel.gamma.ncols() != npts {
            return Err(Error::parameter("kernel", "gamma shape does not match lattice"));
        }
        let live: Vec<usize> = (0..npts).filter(|&p| kernel.gamma[(p, p)] > 0.0).collect();
        let m = live.len();
        let mut sub = DMatrix::zeros(m, m);
        for (a, &p) in live.iter().enumerate() {
            for (b, &q) in live.iter().enumerate() {
                sub[(a, b)] = kernel.gamma[(p, q)];
            }
        }
        let factor = factor_with_jitter(sub)?;
        Ok(LimitSimulator { grid, live, factor })
    }

    /// Draw replication `rep` under `seed`: independent spatial Gaussian
    /// vectors per `s`-increment scaled by `sqrt(delta s)`, accumulated over
    /// time. Realizes the covariance `(s /\ t) Gamma(u, v)` exactly on the
    /// grid.
    pub fn draw(&self, seed: u64, rep: u64) -> LimitField {
        let mut rng = stream(seed, rep);
        let npts = self.grid.lattice().len();
        let m = self.live.len();
        let s_points = self.grid.s_points();
        let mut values = DMatrix::zeros(s_points.len(), npts);
        let mut state = vec![0.0f64; npts];
        let mut prev_s = 0.0;
        for (row, &s) in s_points.iter().enumerate() {
            let ds = s - prev_s;
            prev_s = s;
            if ds > 0.0 {
                let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
                let xi = &self.factor * z;
                let scale = ds.sqrt();
                for (a, &p) in self.live.iter().enumerate() {
                    state[p] += scale * xi[a];
                }
            }
            for p in 0..npts {
                values[(row, p)] = state[p];
            }
        }
        LimitField {
            values,
            grid: self.grid.clone(),
            seed,
            stream: rep,
        }
    }
}

fn factor_with_jitter(sub: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if sub.is_empty() {
        return Ok(sub);
    }
    if let Some(chol) = Cholesky::new(sub.clone()) {
        return Ok(chol.l());
    }
    let mut jitter = 1e-12;
    while jitter <= 1e-8 {
        let mut jittered = sub.clone();
        for i in 0..jittered.nrows() {
            jittered[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok(chol.l());
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(
        "covariance factorization failed after maximum jitter 1e-8".into(),
    ))
}

/// Simulate `reps` independent draws of the limit field on the grid.
pub fn simulate_limit(
    kernel: &CovKernelEstimate,
    s_points: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<LimitField>> {
    let sim = LimitSimulator::new(kernel, s_points)?;
    Ok(map_reps(reps as u64, |r| sim.draw(seed, r)))
}

/// Scalar functionals used by the weak-convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// Supremum of `|field|` over the grid.
    SupAbs,
    /// Mean of the squared field over the grid nodes (Cramer-von Mises type).
    CvM,
}

impl Functional {
    pub fn apply(self, values: &DMatrix<f64>) -> f64 {
        match self {
            Functional::SupAbs => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Functional::CvM => values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64,
        }
    }
}

/// Grid resolution and calibration knobs for the diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticOptions {
    pub s_steps: usize,
    pub u_points_per_dim: usize,
    /// Sample size used to estimate `Gamma` for non-iid specs.
    pub gamma_sample_size: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions {
            s_steps: 32,
            u_points_per_dim: 21,
            gamma_sample_size: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnosticEntry {
    pub n: usize,
    /// Two-sample KS distance between the functional of `B_n` and of `B_C`.
    pub ks: f64,
}

#[derive(Debug, Clone)]
pub struct DiagnosticReport {
    pub functional: Functional,
    pub reps: usize,
    pub entries: Vec<DiagnosticEntry>,
    /// Whether the KS distance at the largest `n` improves on the smallest.
    pub improves_with_n: bool,
}

/// Compare the law of a functional of `B_n` against the same functional of
/// the simulated limit, for each `n` in `n_list`.
pub fn weak_convergence_diagnostic(
    spec: &SequenceSpec,
    functional: Functional,
    n_list: &[usize],
    reps: usize,
    seed: u64,
    options: DiagnosticOptions,
) -> Result<DiagnosticReport> {
    if reps < 100 {
        return Err(Error::parameter("reps", "need at least 100 replications"));
    }
    if n_list.is_empty() {
        return Err(Error::parameter("n_list", "must be non-empty"));
    }
    spec.validate()?;
    let grid = EvaluationGrid::regular(options.s_steps, spec.dim, options.u_points_per_dim)?;
    let lattice = grid.lattice();

    // Stream layout: block b holds reps streams for n_list[b]; the block
    // after the last n is used for the limit draws, and one extra stream
    // for the Gamma calibration sample.
    let block = reps as u64;
    let limit_offset = n_list.len() as u64 * block;
    let calib_stream = limit_offset + block;

    let kernel = match spec.family {
        Family::Iid => gamma_analytic_iid(lattice, spec)?,
        _ => {
            let calib = spec.generate_stream(options.gamma_sample_size, seed, calib_stream)?;
            estimate_gamma(
                &calib,
                lattice,
                default_bandwidth(options.gamma_sample_size),
                LagKernel::Bartlett,
            )?
        }
    };
    let sim = LimitSimulator::new(&kernel, grid.s_points())?;
    let limit_vals: Vec<f64> = map_reps(block, |r| {
        functional.apply(&sim.draw(seed, limit_offset + r).values)
    });

    let mut entries = Vec::with_capacity(n_list.len());
    for (b, &n) in n_list.iter().enumerate() {
        let offset = b as u64 * block;
        let emp_vals: Vec<f64> = map_reps(block, |r| {
            let sample = spec
                .generate_stream(n, seed, offset + r)
                .expect("validated spec");
            let field = eval_sequential(&sample, Centering::TrueCdf, &grid)
                .expect("grid validated");
            functional.apply(&field.values)
        });
        entries.push(DiagnosticEntry {
            n,
            ks: ks_two_sample(&emp_vals, &limit_vals),
        });
    }
    let improves_with_n = entries.last().unwrap().ks <= entries.first().unwrap().ks;
    Ok(DiagnosticReport {
        functional,
        reps,
        entries,
        improves_with_n,
    })
}

/// Convenience: evaluate a functional on a [`ProcessField`].
pub fn field_functional(functional: Functional, field: &ProcessField) -> f64 {
    functional.apply(&field.values)
}
