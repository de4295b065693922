//! Maximal-inequality machinery for partial sums over an index family, and
//! two verifiers for the Ottaviani-type bound under strong mixing:
//!
//! ```text
//! P(max_k ||S_k|| > 3e) * {1 - max_k P(||S_n - S_k|| > e)}
//!     <= P(||S_n|| > e) + P(max_{k-j <= 2l} ||S_k - S_j|| > e) + floor(n/l) * alpha_l
//! ```
//!
//! The Monte Carlo verifier estimates both sides on stationary samples at a
//! 3-combined-standard-error tolerance; the exact verifier enumerates every
//! outcome path of a small finite-alphabet model and checks the inequality
//! with zero tolerance.

use crate::empirical::Centering;
use crate::error::{Error, Result};
use crate::generators::{MixingProfile, SequenceSpec, StationarySample};
use crate::grid::ULattice;
use crate::par::map_reps;
use crate::stats::proportion_se;

/// Blocking scheme used by the tightness argument: `kappa = eta / 8` and
/// `ell_n = floor(n^(1/2 - kappa))`.
#[derive(Debug, Clone, Copy)]
pub struct BlockingPlan {
    pub eta: f64,
    pub kappa: f64,
    pub ell_n: usize,
    pub n: usize,
}

/// Compute the blocking plan for `(n, eta)`.
///
/// `eta` parametrizes the mixing-rate hypothesis `alpha_n = O(n^-(1+eta))`.
/// Values at or above 1 fall outside the range the tightness lemma assumes;
/// a warning is logged and the plan is computed anyway.
pub fn blocking_plan(n: usize, eta: f64) -> Result<BlockingPlan> {
    if n < 4 {
        return Err(Error::parameter("n", "must be at least 4"));
    }
    if !(eta > 0.0) {
        return Err(Error::parameter("eta", "must be positive"));
    }
    if eta >= 1.0 {
        log::warn!("eta = {eta} is outside (0, 1); proceeding with kappa = eta / 8");
    }
    let kappa = eta / 8.0;
    let ell_n = (n as f64).powf(0.5 - kappa).floor() as usize;
    if ell_n < 1 || ell_n >= n {
        return Err(Error::parameter("eta", format!("blocking length {ell_n} not in 1..{n}")));
    }
    Ok(BlockingPlan { eta, kappa, ell_n, n })
}

impl BlockingPlan {
    /// The decay witness `floor(n / ell_n) * alpha_(ell_n)` for a mixing
    /// profile; vanishes as `n` grows whenever the profile satisfies the
    /// rate hypothesis.
    pub fn decay_witness(&self, profile: &MixingProfile) -> f64 {
        (self.n / self.ell_n) as f64 * profile.bound(self.ell_n)
    }
}

/// Index family `T` for the partial sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexFamily {
    /// `T` = lattice points; `Y_i(u) = n^(-1/2) {1(U_i <= u) - c(u)}`.
    Singletons,
    /// `T` = lattice pairs at max-norm distance at most `delta`;
    /// `Y_i(u, v) = n^(-1/2) G_i(u, v)` with
    /// `G_i(u, v) = 1(U_i <= u) - C(u) - 1(U_i <= v) + C(v)`.
    IncrementPairs { delta: f64 },
}

/// Configuration of the partial-sum family: which index set, over which
/// lattice, with which centering.
#[derive(Debug, Clone)]
pub struct PartialSumFamily {
    pub kind: IndexFamily,
    pub lattice: ULattice,
    pub centering: Centering,
}

impl PartialSumFamily {
    pub fn singletons(lattice: ULattice) -> Self {
        PartialSumFamily {
            kind: IndexFamily::Singletons,
            lattice,
            centering: Centering::TrueCdf,
        }
    }

    pub fn increment_pairs(lattice: ULattice, delta: f64) -> Self {
        PartialSumFamily {
            kind: IndexFamily::IncrementPairs { delta },
            lattice,
            centering: Centering::TrueCdf,
        }
    }

    /// Bind the family to a sample, precomputing prefix counts.
    pub fn evaluator<'a>(&self, sample: &'a StationarySample) -> Result<PartialSumEvaluator<'a>> {
        PartialSumEvaluator::new(self, sample)
    }
}

/// Partial sums `S_k(t)` of one sample over the configured family, with
/// `S_0 = 0` and the empirical-process scaling `Y_i = n^(-1/2) * increment`.
pub struct PartialSumEvaluator<'a> {
    sample: &'a StationarySample,
    /// `(n + 1) x L` prefix dominance counts, row k = first k observations.
    counts: Vec<f64>,
    /// Centering values per lattice point.
    c: Vec<f64>,
    npts: usize,
    /// Admissible unordered lattice pairs for `IncrementPairs`.
    pairs: Option<Vec<(u32, u32)>>,
}

impl<'a> PartialSumEvaluator<'a> {
    fn new(family: &PartialSumFamily, sample: &'a StationarySample) -> Result<Self> {
        let lattice = &family.lattice;
        if lattice.dim() != sample.dim() {
            return Err(Error::parameter("family", "lattice dimension does not match sample"));
        }
        let n = sample.n;
        let npts = lattice.len();

        let c: Vec<f64> = match family.centering {
            Centering::TrueCdf => lattice
                .points()
                .map(|(_, u)| sample.spec.true_cdf(&u))
                .collect::<Result<_>>()?,
            Centering::EmpiricalCdf => {
                let mut hist = vec![0.0; npts];
                for i in 0..n {
                    hist[lattice.cell_of(sample.row(i))] += 1.0;
                }
                lattice.prefix_sum_in_place(&mut hist);
                hist.into_iter().map(|h| h / n as f64).collect()
            }
        };

        // Row-by-row indicator accumulation.
        let mut counts = vec![0.0f64; (n + 1) * npts];
        let mut indicator = vec![0.0f64; npts];
        for i in 0..n {
            indicator.fill(0.0);
            indicator[lattice.cell_of(sample.row(i))] = 1.0;
            lattice.prefix_sum_in_place(&mut indicator);
            let (prev, cur) = counts[i * npts..(i + 2) * npts].split_at_mut(npts);
            for p in 0..npts {
                cur[p] = prev[p] + indicator[p];
            }
        }

        let pairs = match family.kind {
            IndexFamily::Singletons => None,
            IndexFamily::IncrementPairs { delta } => {
                if !(delta >= 0.0) {
                    return Err(Error::parameter("delta", "must be non-negative"));
                }
                let pts: Vec<Vec<f64>> = (0..npts).map(|p| lattice.point(p)).collect();
                let mut pairs = Vec::new();
                for p in 0..npts {
                    for q in (p + 1)..npts {
                        if pts[p].iter().zip(&pts[q]).all(|(a, b)| (a - b).abs() <= delta) {
                            pairs.push((p as u32, q as u32));
                        }
                    }
                }
                Some(pairs)
            }
        };

        Ok(PartialSumEvaluator {
            sample,
            counts,
            c,
            npts,
            pairs,
        })
    }

    pub fn n(&self) -> usize {
        self.sample.n
    }

    /// `sup_t |S_k(t) - S_j(t)|` for `0 <= j < k <= n`.
    pub fn sup_partial_sums(&self, j: usize, k: usize) -> Result<f64> {
        if !(j < k && k <= self.sample.n) {
            return Err(Error::Index(format!("require 0 <= j < k <= n, got j = {j}, k = {k}")));
        }
        Ok(self.sup_increment(j, k))
    }

    /// Same as [`Self::sup_partial_sums`] without the bounds check.
    fn sup_increment(&self, j: usize, k: usize) -> f64 {
        let npts = self.npts;
        let row_j = &self.counts[j * npts..(j + 1) * npts];
        let row_k = &self.counts[k * npts..(k + 1) * npts];
        let steps = (k - j) as f64;
        let sqrt_n = (self.sample.n as f64).sqrt();
        match &self.pairs {
            None => {
                let mut m = 0.0f64;
                for p in 0..npts {
                    m = m.max((row_k[p] - row_j[p] - steps * self.c[p]).abs());
                }
                m / sqrt_n
            }
            Some(pairs) => {
                let mut m = 0.0f64;
                for &(p, q) in pairs {
                    let (p, q) = (p as usize, q as usize);
                    let dp = row_k[p] - row_j[p] - steps * self.c[p];
                    let dq = row_k[q] - row_j[q] - steps * self.c[q];
                    m = m.max((dp - dq).abs());
                }
                m / sqrt_n
            }
        }
    }

    /// Per-replication statistics consumed by the Monte Carlo verifier:
    /// running maximum, endpoint, block maxima for each requested window,
    /// and the endpoint differences `||S_n - S_k||` for every `k`.
    fn rep_stats(&self, windows: &[usize]) -> RepStats {
        let n = self.sample.n;
        let mut max_sk = 0.0f64;
        for k in 1..=n {
            max_sk = max_sk.max(self.sup_increment(0, k));
        }
        let s_n = self.sup_increment(0, n);
        let block_max: Vec<f64> = windows
            .iter()
            .map(|&w| {
                let mut m = 0.0f64;
                for j in 0..n {
                    let hi = (j + w).min(n);
                    for k in (j + 1)..=hi {
                        m = m.max(self.sup_increment(j, k));
                    }
                }
                m
            })
            .collect();
        let endpoint: Vec<f64> = (1..=n)
            .map(|k| if k == n { 0.0 } else { self.sup_increment(k, n) })
            .collect();
        RepStats {
            max_sk,
            s_n,
            block_max,
            endpoint,
        }
    }
}

struct RepStats {
    max_sk: f64,
    s_n: f64,
    block_max: Vec<f64>,
    endpoint: Vec<f64>,
}

/// A point estimate with its Monte Carlo standard error (zero for exact
/// computations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }
}

/// Both sides of the inequality for one `(n, ell, epsilon)` cell.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    /// `P(max_k ||S_k|| > 3 eps) * denominator`.
    pub lhs: Estimate,
    /// `P(||S_n|| > eps)`.
    pub rhs_term_sup_s: Estimate,
    /// `P(max_{k-j <= 2 ell} ||S_k - S_j|| > eps)`.
    pub rhs_term_block: Estimate,
    /// `floor(n / ell) * alpha_ell`, exact.
    pub rhs_term_mixing: f64,
    /// `1 - max_k P(||S_n - S_k|| > eps)`.
    pub denominator: Estimate,
    pub epsilon: f64,
    pub ell: usize,
    pub n: usize,
    /// Monte Carlo replications (0 for exact enumeration).
    pub reps: usize,
    /// `lhs <= rhs + 3 * combined SE` (zero tolerance when exact).
    pub pass: bool,
}

impl InequalityReport {
    pub fn rhs_total(&self) -> f64 {
        self.rhs_term_sup_s.value + self.rhs_term_block.value + self.rhs_term_mixing
    }

    /// Combined standard error of the comparison `lhs <= rhs`.
    pub fn combined_se(&self) -> f64 {
        (self.lhs.se.powi(2) + self.rhs_term_sup_s.se.powi(2) + self.rhs_term_block.se.powi(2))
            .sqrt()
    }
}

/// Options for the Monte Carlo verifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct McOptions {
    /// Estimate the denominator factor from an independent replication set
    /// (streams `reps..2*reps`) instead of reusing the primary set.
    pub independent_inner: bool,
}

/// Monte Carlo verification of the inequality on a grid of epsilons,
/// sharing one replication set across the grid.
pub fn verify_inequality_mc_grid(
    spec: &SequenceSpec,
    family: &PartialSumFamily,
    n: usize,
    ell: usize,
    epsilons: &[f64],
    reps: usize,
    seed: u64,
    options: McOptions,
) -> Result<Vec<InequalityReport>> {
    if !(1 <= ell && ell < n) {
        return Err(Error::parameter("ell", format!("must satisfy 1 <= ell < n = {n}")));
    }
    if reps < 100 {
        return Err(Error::parameter("reps", "need at least 100 replications"));
    }
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::parameter("epsilon", "must be positive"));
    }
    spec.validate()?;
    if family.lattice.dim() != spec.dim {
        return Err(Error::parameter("family", "lattice dimension does not match spec"));
    }

    let windows = vec![2 * ell];
    let run_set = |stream_offset: u64| -> Vec<RepStats> {
        map_reps(reps as u64, |r| {
            let sample = spec
                .generate_stream(n, seed, stream_offset + r)
                .expect("validated spec");
            let eval = family.evaluator(&sample).expect("validated family");
            eval.rep_stats(&windows)
        })
    };
    let primary = run_set(0);
    let inner = if options.independent_inner {
        Some(run_set(reps as u64))
    } else {
        None
    };
    let inner_set: &[RepStats] = inner.as_deref().unwrap_or(&primary);

    let alpha = spec.mixing_bound(ell);
    let mixing = (n / ell) as f64 * alpha;
    let reports = epsilons
        .iter()
        .map(|&eps| {
            let frac = |pred: &dyn Fn(&RepStats) -> bool, set: &[RepStats]| -> f64 {
                set.iter().filter(|s| pred(s)).count() as f64 / set.len() as f64
            };
            let p_max = frac(&|s| s.max_sk > 3.0 * eps, &primary);
            let p_sup = frac(&|s| s.s_n > eps, &primary);
            let p_block = frac(&|s| s.block_max[0] > eps, &primary);

            // Inner factor: per-k exceedance estimated across replications,
            // then maximized over k.
            let mut p_inner = 0.0f64;
            for k in 0..n {
                let pk = inner_set.iter().filter(|s| s.endpoint[k] > eps).count() as f64
                    / inner_set.len() as f64;
                p_inner = p_inner.max(pk);
            }
            let denominator = Estimate {
                value: 1.0 - p_inner,
                se: proportion_se(p_inner, inner_set.len()),
            };
            let p_max_est = Estimate {
                value: p_max,
                se: proportion_se(p_max, reps),
            };
            let lhs = Estimate {
                value: p_max * denominator.value,
                se: ((denominator.value * p_max_est.se).powi(2)
                    + (p_max * denominator.se).powi(2))
                .sqrt(),
            };
            let report = InequalityReport {
                lhs,
                rhs_term_sup_s: Estimate {
                    value: p_sup,
                    se: proportion_se(p_sup, reps),
                },
                rhs_term_block: Estimate {
                    value: p_block,
                    se: proportion_se(p_block, reps),
                },
                rhs_term_mixing: mixing,
                denominator,
                epsilon: eps,
                ell,
                n,
                reps,
                pass: false,
            };
            let pass = report.lhs.value <= report.rhs_total() + 3.0 * report.combined_se();
            InequalityReport { pass, ..report }
        })
        .collect();
    Ok(reports)
}

/// Monte Carlo verification at a single epsilon.
#[allow(clippy::too_many_arguments)]
pub fn verify_inequality_mc(
    spec: &SequenceSpec,
    family: &PartialSumFamily,
    n: usize,
    ell: usize,
    epsilon: f64,
    reps: usize,
    seed: u64,
    options: McOptions,
) -> Result<InequalityReport> {
    Ok(
        verify_inequality_mc_grid(spec, family, n, ell, &[epsilon], reps, seed, options)?
            .pop()
            .unwrap(),
    )
}

/// Step law of the finite-alphabet model used by the exact verifier.
#[derive(Debug, Clone)]
pub enum StepLaw {
    /// Independent steps with the given outcome probabilities.
    Iid { probs: Vec<f64> },
    /// Stationary finite-state Markov chain; the initial distribution is
    /// the stationary law of the transition matrix, and the mixing
    /// coefficient is bounded analytically by the beta-mixing coefficient
    /// `beta(l) = sum_x pi(x) * TV(P^l(x, .), pi)` (alpha <= beta).
    Markov { transition: Vec<Vec<f64>> },
}

/// Finite-alphabet model: outcome `a` contributes `values[a][t]` to
/// coordinate `t` of the partial sum at every step.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub values: Vec<Vec<f64>>,
    pub law: StepLaw,
    pub n: usize,
}

const MAX_EXACT_N: usize = 12;
const MAX_ALPHABET: usize = 3;

impl FiniteModel {
    fn validate(&self) -> Result<()> {
        let a = self.values.len();
        if a == 0 || a > MAX_ALPHABET {
            return Err(Error::parameter(
                "values",
                format!("alphabet size must be in 1..={MAX_ALPHABET}"),
            ));
        }
        let t = self.values[0].len();
        if t == 0 || self.values.iter().any(|v| v.len() != t) {
            return Err(Error::parameter("values", "outcome rows must share a positive length"));
        }
        if self.n == 0 || self.n > MAX_EXACT_N {
            return Err(Error::parameter("n", format!("must be in 1..={MAX_EXACT_N}")));
        }
        let check_simplex = |row: &[f64], name: &'static str| -> Result<()> {
            if row.len() != a {
                return Err(Error::parameter(name, "length must equal the alphabet size"));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::parameter(name, "entries must lie in [0, 1]"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::parameter(name, "entries must sum to 1"));
            }
            Ok(())
        };
        match &self.law {
            StepLaw::Iid { probs } => check_simplex(probs, "probs")?,
            StepLaw::Markov { transition } => {
                if transition.len() != a {
                    return Err(Error::parameter("transition", "must be square over the alphabet"));
                }
                for row in transition {
                    check_simplex(row, "transition")?;
                }
            }
        }
        Ok(())
    }

    /// Stationary distribution of the step law.
    fn stationary(&self) -> Vec<f64> {
        match &self.law {
            StepLaw::Iid { probs } => probs.clone(),
            StepLaw::Markov { transition } => stationary_distribution(transition),
        }
    }

    /// Analytic upper bound on `alpha_ell` for the step law.
    pub fn alpha_bound(&self, ell: usize) -> f64 {
        if ell == 0 {
            return 0.5;
        }
        match &self.law {
            StepLaw::Iid { .. } => 0.0,
            StepLaw::Markov { transition } => {
                let pi = stationary_distribution(transition);
                let p_ell = matrix_power(transition, ell);
                let beta: f64 = pi
                    .iter()
                    .enumerate()
                    .map(|(x, &px)| {
                        px * 0.5
                            * p_ell[x]
                                .iter()
                                .zip(&pi)
                                .map(|(p, q)| (p - q).abs())
                                .sum::<f64>()
                    })
                    .sum();
                beta.min(0.25)
            }
        }
    }
}

fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    // Power iteration; finite stochastic matrices converge fast and the
    // alphabet is at most 3.
    let a = transition.len();
    let mut pi = vec![1.0 / a as f64; a];
    for _ in 0..10_000 {
        let mut next = vec![0.0; a];
        for x in 0..a {
            for y in 0..a {
                next[y] += pi[x] * transition[x][y];
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

fn matrix_power(transition: &[Vec<f64>], ell: usize) -> Vec<Vec<f64>> {
    let a = transition.len();
    let mut out: Vec<Vec<f64>> = (0..a)
        .map(|x| (0..a).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..ell {
        let mut next = vec![vec![0.0; a]; a];
        for x in 0..a {
            for y in 0..a {
                for z in 0..a {
                    next[x][z] += out[x][y] * transition[y][z];
                }
            }
        }
        out = next;
    }
    out
}

/// Exact verification by total enumeration of all outcome paths.
///
/// Asserts nothing; reports both sides with zero standard errors and
/// `pass = (lhs <= rhs)` compared exactly.
pub fn verify_inequality_exact(model: &FiniteModel, ell: usize, epsilon: f64) -> Result<InequalityReport> {
    model.validate()?;
    let n = model.n;
    if !(1 <= ell && ell < n) {
        return Err(Error::parameter("ell", format!("must satisfy 1 <= ell < n = {n}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::parameter("epsilon", "must be positive"));
    }
    let a = model.values.len();
    let t = model.values[0].len();
    let pi = model.stationary();

    // DFS over all a^n paths with incremental partial sums.
    let mut path = vec![0usize; n];
    let mut sums = vec![vec![0.0f64; t]; n + 1];
    let mut p_max3 = 0.0f64;
    let mut p_sn = 0.0f64;
    let mut p_block = 0.0f64;
    let mut p_endpoint = vec![0.0f64; n + 1];
    let sup = |diff: &[f64], base: &[f64]| -> f64 {
        diff.iter()
            .zip(base)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max)
    };

    loop {
        // Probability and partial sums of the current path.
        let mut prob = match &model.law {
            StepLaw::Iid { probs } => probs[path[0]],
            StepLaw::Markov { .. } => pi[path[0]],
        };
        if let StepLaw::Markov { transition } = &model.law {
            for i in 1..n {
                prob *= transition[path[i - 1]][path[i]];
            }
        } else if let StepLaw::Iid { probs } = &model.law {
            for i in 1..n {
                prob *= probs[path[i]];
            }
        }
        for i in 0..n {
            for c in 0..t {
                sums[i + 1][c] = sums[i][c] + model.values[path[i]][c];
            }
        }

        if prob > 0.0 {
            let zero = vec![0.0f64; t];
            let norm: Vec<f64> = (0..=n).map(|k| sup(&sums[k], &zero)).collect();
            if (1..=n).any(|k| norm[k] > 3.0 * epsilon) {
                p_max3 += prob;
            }
            if norm[n] > epsilon {
                p_sn += prob;
            }
            let mut block = 0.0f64;
            for j in 0..n {
                for k in (j + 1)..=(j + 2 * ell).min(n) {
                    block = block.max(sup(&sums[k], &sums[j]));
                }
            }
            if block > epsilon {
                p_block += prob;
            }
            for k in 1..=n {
                if sup(&sums[n], &sums[k]) > epsilon {
                    p_endpoint[k] += prob;
                }
            }
        }

        // Next path in odometer order.
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            path[pos - 1] += 1;
            if path[pos - 1] < a {
                break;
            }
            path[pos - 1] = 0;
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
    }

    let p_inner = p_endpoint[1..=n].iter().fold(0.0f64, |m, &p| m.max(p));
    let denominator = Estimate::exact(1.0 - p_inner);
    let lhs = Estimate::exact(p_max3 * denominator.value);
    let mixing = (n / ell) as f64 * model.alpha_bound(ell);
    let rhs = p_sn + p_block + mixing;
    Ok(InequalityReport {
        lhs,
        rhs_term_sup_s: Estimate::exact(p_sn),
        rhs_term_block: Estimate::exact(p_block),
        rhs_term_mixing: mixing,
        denominator,
        epsilon,
        ell,
        n,
        reps: 0,
        pass: lhs.value <= rhs,
    })
}
