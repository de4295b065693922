//! Statistical applications of the sequential process: a CUSUM-type
//! change-point test calibrated by simulating the tied-down limit field,
//! and self-normalized confidence intervals for the integral of the
//! empirical CDF.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::empirical::{cusum_field, eval_sequential, sup_norm, Centering};
use crate::error::{Error, Result};
use crate::generators::StationarySample;
use crate::grid::{EvaluationGrid, ULattice};
use crate::limit::{default_bandwidth, estimate_gamma, LagKernel, LimitSimulator};
use crate::par::map_reps;
use crate::rng::stream;
use crate::stats::quantile;

/// Calibration knobs for the change-point test.
#[derive(Debug, Clone, Copy)]
pub struct ChangepointCalib {
    /// Simulated tied-down limit fields used for the critical value.
    pub reps: usize,
    pub seed: u64,
    /// Lag-window bandwidth for the covariance estimate; `None` uses
    /// `floor(n^(1/3))`.
    pub bandwidth: Option<usize>,
    /// Spatial resolution shared by the statistic and the calibration.
    pub u_points_per_dim: usize,
    /// Time steps of the simulated limit fields.
    pub limit_s_steps: usize,
}

impl Default for ChangepointCalib {
    fn default() -> Self {
        ChangepointCalib {
            reps: 500,
            seed: 0,
            bandwidth: None,
            u_points_per_dim: 25,
            limit_s_steps: 128,
        }
    }
}

/// Calibration metadata echoed into the test result.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedCalibration {
    pub reps: usize,
    pub seed: u64,
    pub bandwidth: usize,
    pub u_points_per_dim: usize,
    pub limit_s_steps: usize,
}

/// Outcome of the change-point test.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub level: f64,
    pub reject: bool,
    pub calibration: ResolvedCalibration,
}

/// CUSUM change-point test on the sequential empirical process.
///
/// The statistic is the supremum over the grid of
/// `|B_n(s, u) - (floor(s n)/n) B_n(1, u)|` with empirical-CDF centering.
/// The critical value is the `(1 - level)` quantile of the same functional
/// applied to simulated tied-down limit fields `B_C(s, u) - s B_C(1, u)`,
/// with the covariance kernel estimated from the observed sample. A
/// degenerate sample (all rows identical) yields statistic 0 and p-value 1.
pub fn changepoint_test(
    sample: &StationarySample,
    level: f64,
    calib: ChangepointCalib,
) -> Result<TestResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::parameter("level", "must lie in (0, 1)"));
    }
    if sample.n < 32 {
        return Err(Error::parameter("sample", "need at least 32 observations"));
    }
    if calib.reps < 100 {
        return Err(Error::parameter("reps", "need at least 100 calibration draws"));
    }
    let n = sample.n;
    let lattice = ULattice::regular(sample.dim(), calib.u_points_per_dim)?;
    let s_points: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let grid = EvaluationGrid::new(s_points, lattice.clone())?;

    let field = eval_sequential(sample, Centering::EmpiricalCdf, &grid)?;
    let statistic = sup_norm(&cusum_field(&field));

    let bandwidth = calib.bandwidth.unwrap_or_else(|| default_bandwidth(n));
    let kernel = estimate_gamma(sample, &lattice, bandwidth, LagKernel::Bartlett)?;

    let limit_s: Vec<f64> = (0..=calib.limit_s_steps)
        .map(|j| j as f64 / calib.limit_s_steps as f64)
        .collect();
    let sim = LimitSimulator::new(&kernel, &limit_s)?;
    let draws: Vec<f64> = map_reps(calib.reps as u64, |r| {
        let f = sim.draw(calib.seed, r);
        let last = f.grid.s_one_index();
        let mut sup = 0.0f64;
        for (row, &s) in f.grid.s_points().iter().enumerate() {
            for p in 0..lattice.len() {
                sup = sup.max((f.values[(row, p)] - s * f.values[(last, p)]).abs());
            }
        }
        sup
    });

    let critical_value = quantile(&draws, 1.0 - level);
    let exceed = draws.iter().filter(|&&d| d >= statistic).count();
    let p_value = exceed as f64 / draws.len() as f64;
    Ok(TestResult {
        statistic,
        critical_value,
        p_value,
        level,
        reject: statistic > critical_value,
        calibration: ResolvedCalibration {
            reps: calib.reps,
            seed: calib.seed,
            bandwidth,
            u_points_per_dim: calib.u_points_per_dim,
            limit_s_steps: calib.limit_s_steps,
        },
    })
}

/// Running estimates of the integral of the empirical CDF:
/// `theta_k = k^-1 sum_{i <= k} prod_j (1 - U_ij)`, computed through the
/// convex-combination update so that
/// `theta_k = ((k - 1) theta_{k-1} + prod_j (1 - U_kj)) / k` holds exactly.
pub fn integral_functional(sample: &StationarySample) -> Vec<f64> {
    let mut out = Vec::with_capacity(sample.n);
    let mut theta = 0.0f64;
    for i in 0..sample.n {
        let xi: f64 = sample.row(i).iter().map(|u| 1.0 - u).product();
        let k = (i + 1) as f64;
        theta = ((k - 1.0) * theta + xi) / k;
        out.push(theta);
    }
    out
}

/// Calibration of the self-normalized critical value.
#[derive(Debug, Clone, Copy)]
pub struct CriticalValueCalib {
    /// Brownian-motion paths; at least 100 000 for production use.
    pub reps: usize,
    pub seed: u64,
}

impl Default for CriticalValueCalib {
    fn default() -> Self {
        CriticalValueCalib {
            reps: 100_000,
            seed: 0,
        }
    }
}

/// Self-normalized confidence interval.
#[derive(Debug, Clone)]
pub struct SelfNormCI {
    pub theta_hat: f64,
    pub interval: (f64, f64),
    pub level: f64,
    /// Normalizer `V_n = n^-2 sum_k k^2 (theta_k - theta_n)^2`.
    pub v_n: f64,
    /// Critical value of the pivotal Brownian functional used.
    pub c_level: f64,
    /// Set when `V_n = 0` (constant running estimates).
    pub degenerate: bool,
}

/// Grid size of the Brownian paths behind the critical-value simulation.
pub const BROWNIAN_GRID: usize = 10_000;

/// Self-normalized confidence interval for the integral functional:
/// `theta_n +- sqrt(c_level V_n / n)` with `c_level` the `(1 - level)`
/// quantile of `W(1)^2 / int_0^1 (W(s) - s W(1))^2 ds`, simulated once per
/// `(level, reps, seed)` and cached.
pub fn selfnorm_ci(
    sample: &StationarySample,
    level: f64,
    calib: CriticalValueCalib,
) -> Result<SelfNormCI> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::parameter("level", "must lie in (0, 1)"));
    }
    if sample.n < 32 {
        return Err(Error::parameter("sample", "need at least 32 observations"));
    }
    if calib.reps < 100_000 {
        return Err(Error::parameter("reps", "critical-value simulation needs at least 100000 paths"));
    }
    let n = sample.n;
    let thetas = integral_functional(sample);
    let theta_n = *thetas.last().unwrap();
    let v_n = thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let k = (i + 1) as f64;
            k * k * (t - theta_n) * (t - theta_n)
        })
        .sum::<f64>()
        / (n as f64 * n as f64);

    let c_level = selfnorm_critical_value(level, calib.reps, calib.seed)?;
    if v_n == 0.0 {
        return Ok(SelfNormCI {
            theta_hat: theta_n,
            interval: (theta_n, theta_n),
            level,
            v_n,
            c_level,
            degenerate: true,
        });
    }
    let half = (c_level * v_n / n as f64).sqrt();
    Ok(SelfNormCI {
        theta_hat: theta_n,
        interval: (theta_n - half, theta_n + half),
        level,
        v_n,
        c_level,
        degenerate: false,
    })
}

/// `(1 - level)` quantile of `W(1)^2 / int_0^1 (W(s) - s W(1))^2 ds` from
/// `reps` Brownian paths on a [`BROWNIAN_GRID`]-point grid. Results are
/// cached per `(level, reps, seed)`.
pub fn selfnorm_critical_value(level: f64, reps: usize, seed: u64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::parameter("level", "must lie in (0, 1)"));
    }
    if reps < 1000 {
        return Err(Error::parameter("reps", "need at least 1000 paths"));
    }
    static CACHE: Mutex<Option<HashMap<(u64, usize, u64), f64>>> = Mutex::new(None);
    let key = (level.to_bits(), reps, seed);
    if let Some(cache) = CACHE.lock().unwrap().as_ref() {
        if let Some(&c) = cache.get(&key) {
            return Ok(c);
        }
    }

    let m = BROWNIAN_GRID;
    let step = 1.0 / m as f64;
    let scale = step.sqrt();
    // sum_{i=1..m} (i/m)^2, used to expand the bridge integral in one pass.
    let sum_s2 = (m as f64 + 1.0) * (2.0 * m as f64 + 1.0) / (6.0 * m as f64);
    let funcs: Vec<f64> = map_reps(reps as u64, |r| {
        let mut rng = stream(seed, r);
        let mut w = 0.0f64;
        let mut sum_w2 = 0.0f64;
        let mut sum_sw = 0.0f64;
        for i in 1..=m {
            let z: f64 = rng.sample(StandardNormal);
            w += scale * z;
            sum_w2 += w * w;
            sum_sw += (i as f64 * step) * w;
        }
        // Riemann sum of (W(s) - s W(1))^2 at the right endpoints.
        let integral = (sum_w2 - 2.0 * w * sum_sw + w * w * sum_s2) * step;
        w * w / integral
    });
    let c = quantile(&funcs, 1.0 - level);
    CACHE
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(key, c);
    Ok(c)
}
