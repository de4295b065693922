//! Evaluation of the sequential empirical process on finite grids.
//!
//! For a sample `U_1, ..., U_n` with joint CDF `C`, the sequential process is
//!
//! ```text
//! B_n(s, u) = n^(-1/2) * sum_{i <= floor(s n)} { 1(U_i <= u) - c(u) }
//! ```
//!
//! with `c` either the true CDF or the full-sample empirical CDF. The
//! non-sequential process is the `s = 1` slice, `D_n(u) = B_n(1, u)`.
//!
//! Evaluation sweeps the sample once, accumulating a cell histogram on the
//! lattice and converting it to dominance counts by a multidimensional
//! prefix sum at each requested time point; this is exactly equal to the
//! naive double loop.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generators::StationarySample;
use crate::grid::{prefix_len, EvaluationGrid, ULattice};

/// Which centering function `c(u)` to subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// The exact joint CDF of the generating spec.
    TrueCdf,
    /// The empirical CDF of the full sample (applications with unknown `C`).
    EmpiricalCdf,
}

/// Values of `B_n` (or a derived field) on a finite `(s, u)` grid.
/// Rows index `s_points`, columns index the flat lattice.
#[derive(Debug, Clone)]
pub struct ProcessField {
    pub values: DMatrix<f64>,
    pub grid: EvaluationGrid,
    pub n: usize,
    pub centering: Centering,
}

impl ProcessField {
    /// Field value at time index `s_idx` and flat lattice index `flat`.
    pub fn value(&self, s_idx: usize, flat: usize) -> f64 {
        self.values[(s_idx, flat)]
    }

    /// The `s = 1` slice as a vector over the lattice.
    pub fn terminal_slice(&self) -> Vec<f64> {
        let last = self.grid.s_one_index();
        (0..self.grid.lattice().len()).map(|p| self.values[(last, p)]).collect()
    }
}

/// Dominance counts of the first `k` rows at every lattice point, for each
/// requested `k` (ascending). One pass over the sample.
fn dominance_counts(sample: &StationarySample, lattice: &ULattice, ks: &[usize]) -> Vec<Vec<f64>> {
    let mut hist = vec![0.0f64; lattice.len()];
    let mut out = Vec::with_capacity(ks.len());
    let mut next = 0usize;
    for k in 0..=sample.n {
        while next < ks.len() && ks[next] == k {
            let mut counts = hist.clone();
            lattice.prefix_sum_in_place(&mut counts);
            out.push(counts);
            next += 1;
        }
        if k < sample.n {
            hist[lattice.cell_of(sample.row(k))] += 1.0;
        }
    }
    debug_assert_eq!(out.len(), ks.len());
    out
}

/// Centering values `c(u)` on the lattice.
fn centering_values(
    sample: &StationarySample,
    lattice: &ULattice,
    centering: Centering,
) -> Result<Vec<f64>> {
    match centering {
        Centering::TrueCdf => lattice
            .points()
            .map(|(_, u)| sample.spec.true_cdf(&u))
            .collect(),
        Centering::EmpiricalCdf => {
            let counts = dominance_counts(sample, lattice, &[sample.n]).pop().unwrap();
            let n = sample.n as f64;
            Ok(counts.into_iter().map(|c| c / n).collect())
        }
    }
}

/// Evaluate `B_n` on the grid.
///
/// Exactly equal to the naive double loop; the fast path only reorganizes
/// integer indicator counting.
pub fn eval_sequential(
    sample: &StationarySample,
    centering: Centering,
    grid: &EvaluationGrid,
) -> Result<ProcessField> {
    if grid.lattice().dim() != sample.dim() {
        return Err(Error::parameter("grid", "lattice dimension does not match sample"));
    }
    let n = sample.n;
    let lattice = grid.lattice();
    let c = centering_values(sample, lattice, centering)?;

    // Snapshot prefix lengths for each s, deduplicated while preserving rows.
    let ks: Vec<usize> = grid.s_points().iter().map(|&s| prefix_len(s, n)).collect();
    let mut unique_ks = ks.clone();
    unique_ks.dedup();
    let snapshots = dominance_counts(sample, lattice, &unique_ks);

    let sqrt_n = (n as f64).sqrt();
    let mut values = DMatrix::zeros(ks.len(), lattice.len());
    for (row, &k) in ks.iter().enumerate() {
        let snap = unique_ks.partition_point(|&kk| kk < k);
        let counts = &snapshots[snap];
        for p in 0..lattice.len() {
            values[(row, p)] = (counts[p] - k as f64 * c[p]) / sqrt_n;
        }
    }
    Ok(ProcessField {
        values,
        grid: grid.clone(),
        n,
        centering,
    })
}

/// Evaluate the non-sequential process `D_n` on a lattice: the `s = 1`
/// slice of [`eval_sequential`].
pub fn eval_nonsequential(
    sample: &StationarySample,
    centering: Centering,
    lattice: &ULattice,
) -> Result<Vec<f64>> {
    if lattice.dim() != sample.dim() {
        return Err(Error::parameter("u_points", "lattice dimension does not match sample"));
    }
    let c = centering_values(sample, lattice, centering)?;
    let counts = dominance_counts(sample, lattice, &[sample.n]).pop().unwrap();
    let n = sample.n as f64;
    let sqrt_n = n.sqrt();
    Ok(counts
        .iter()
        .zip(c.iter())
        .map(|(cnt, c)| (cnt - n * c) / sqrt_n)
        .collect())
}

/// Check the rescaling identity `B_n(k/n, u) = sqrt(k/n) * D_k(u)` with
/// `D_k` evaluated on the length-`k` prefix. Returns the pointwise
/// difference of the two routes; exact up to floating-point noise (1e-12).
pub fn rescale_identity_check(
    sample: &StationarySample,
    field: &ProcessField,
    k: usize,
) -> Result<Vec<f64>> {
    if field.centering != Centering::TrueCdf {
        return Err(Error::parameter("field", "rescaling identity requires TrueCdf centering"));
    }
    if k == 0 || k > sample.n {
        return Err(Error::Index(format!("k = {k} not in 1..={}", sample.n)));
    }
    let lattice = field.grid.lattice();

    // Route 1: B_n at s = k/n from the full sample.
    let c = centering_values(sample, lattice, Centering::TrueCdf)?;
    let counts = dominance_counts(sample, lattice, &[k]).pop().unwrap();
    let sqrt_n = (sample.n as f64).sqrt();

    // Route 2: D_k on the prefix, rescaled by sqrt(k/n).
    let prefix = sample.prefix(k)?;
    let d_k = eval_nonsequential(&prefix, Centering::TrueCdf, lattice)?;
    let scale = (k as f64 / sample.n as f64).sqrt();

    Ok((0..lattice.len())
        .map(|p| (counts[p] - k as f64 * c[p]) / sqrt_n - scale * d_k[p])
        .collect())
}

/// Modulus of continuity of the field over the joint `(s, u)` grid in the
/// max-norm: the largest `|f(x) - f(y)|` over grid-point pairs at distance
/// at most `delta`. A lower bound for the continuum supremum.
pub fn modulus_of_continuity(field: &ProcessField, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::parameter("delta", "must be non-negative"));
    }
    let lattice = field.grid.lattice();
    let npts = lattice.len();
    let points: Vec<Vec<f64>> = (0..npts).map(|p| lattice.point(p)).collect();
    let close = |p: usize, q: usize| -> bool {
        points[p]
            .iter()
            .zip(points[q].iter())
            .all(|(a, b)| (a - b).abs() <= delta)
    };
    let s = field.grid.s_points();
    let mut w = 0.0f64;
    for a in 0..s.len() {
        for b in a..s.len() {
            if (s[a] - s[b]).abs() > delta {
                break;
            }
            if a == b {
                for p in 0..npts {
                    for q in (p + 1)..npts {
                        if close(p, q) {
                            w = w.max((field.values[(a, p)] - field.values[(a, q)]).abs());
                        }
                    }
                }
            } else {
                for p in 0..npts {
                    for q in 0..npts {
                        if close(p, q) {
                            w = w.max((field.values[(a, p)] - field.values[(b, q)]).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(w)
}

/// The tied-down CUSUM transform `(s, u) -> B(s, u) - (floor(s n)/n) B(1, u)`.
pub fn cusum_field(field: &ProcessField) -> ProcessField {
    let last = field.grid.s_one_index();
    let n = field.n as f64;
    let mut values = field.values.clone();
    for (row, &s) in field.grid.s_points().iter().enumerate() {
        let frac = prefix_len(s, field.n) as f64 / n;
        for p in 0..values.ncols() {
            values[(row, p)] -= frac * field.values[(last, p)];
        }
    }
    ProcessField {
        values,
        grid: field.grid.clone(),
        n: field.n,
        centering: field.centering,
    }
}

/// Supremum of `|values|` over the grid.
pub fn sup_norm(field: &ProcessField) -> f64 {
    field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{CrossDependence, Family, SequenceSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Naive double-loop oracle, independent of the histogram fast path.
    fn naive_eval(
        sample: &StationarySample,
        centering: Centering,
        grid: &EvaluationGrid,
    ) -> DMatrix<f64> {
        let n = sample.n;
        let lattice = grid.lattice();
        let dominated = |i: usize, u: &[f64]| sample.row(i).iter().zip(u).all(|(x, g)| x <= g);
        let c_of = |u: &[f64]| -> f64 {
            match centering {
                Centering::TrueCdf => sample.spec.true_cdf(u).unwrap(),
                Centering::EmpiricalCdf => {
                    (0..n).filter(|&i| dominated(i, u)).count() as f64 / n as f64
                }
            }
        };
        let mut out = DMatrix::zeros(grid.s_points().len(), lattice.len());
        for (row, &s) in grid.s_points().iter().enumerate() {
            let k = prefix_len(s, n);
            for (p, u) in lattice.points() {
                let c = c_of(&u);
                let mut sum = 0.0;
                for i in 0..k {
                    sum += if dominated(i, &u) { 1.0 } else { 0.0 } - c;
                }
                out[(row, p)] = sum / (n as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn matches_hand_computed_example() {
        // n = 4, U = (0.1, 0.9, 0.4, 0.6), C(u) = u, s = 0.75, u = 0.5:
        // (0.5 - 0.5 + 0.5) / 2 = 0.25.
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = StationarySample::from_rows(spec, vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let grid = EvaluationGrid::new(
            vec![0.0, 0.75, 1.0],
            ULattice::new(vec![vec![0.0, 0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        assert_abs_diff_eq!(field.value(1, 1), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn boundary_rows_and_columns_vanish() {
        let spec = SequenceSpec::iid(2).unwrap();
        let sample = spec.generate(32, 7).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        let lattice = grid.lattice();
        for p in 0..lattice.len() {
            assert_eq!(field.value(0, p), 0.0);
        }
        for (p, u) in lattice.points() {
            if u.iter().all(|&x| x == 1.0) || u.iter().any(|&x| x == 0.0) {
                for row in 0..grid.s_points().len() {
                    assert_eq!(field.value(row, p), 0.0, "u = {u:?}");
                }
            }
        }
    }

    #[test]
    fn nonsequential_is_terminal_slice() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = spec.generate(20, 3).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::EmpiricalCdf, &grid).unwrap();
        let d_n = eval_nonsequential(&sample, Centering::EmpiricalCdf, grid.lattice()).unwrap();
        assert_eq!(field.terminal_slice(), d_n);
    }

    #[test]
    fn one_observation_example() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = StationarySample::from_rows(spec, vec![0.3]).unwrap();
        let lattice = ULattice::new(vec![vec![0.0, 0.5, 1.0]]).unwrap();
        let d = eval_nonsequential(&sample, Centering::TrueCdf, &lattice).unwrap();
        assert_abs_diff_eq!(d[1], 0.5, epsilon = 1e-15);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn monotone_increments() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = spec.generate(16, 9).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        let sqrt_n = (sample.n as f64).sqrt();
        for k in 1..=sample.n {
            for (p, u) in grid.lattice().points() {
                let step = sqrt_n * (field.value(k, p) - field.value(k - 1, p));
                let expected = if sample.row(k - 1)[0] <= u[0] { 1.0 } else { 0.0 }
                    - sample.spec.true_cdf(&u).unwrap();
                assert_abs_diff_eq!(step, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cusum_ties_down_both_ends() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = spec.generate(24, 5).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::EmpiricalCdf, &grid).unwrap();
        let tied = cusum_field(&field);
        let last = grid.s_one_index();
        for p in 0..grid.lattice().len() {
            assert_eq!(tied.value(0, p), 0.0);
            assert_abs_diff_eq!(tied.value(last, p), 0.0, epsilon = 1e-15);
        }
        // Oracle: recompute point by point.
        for (row, &s) in grid.s_points().iter().enumerate() {
            let frac = prefix_len(s, sample.n) as f64 / sample.n as f64;
            for p in 0..grid.lattice().len() {
                assert_abs_diff_eq!(
                    tied.value(row, p),
                    field.value(row, p) - frac * field.value(last, p),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn constant_sample_empirical_centering_is_zero() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = StationarySample::from_rows(spec, vec![0.4; 8]).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::EmpiricalCdf, &grid).unwrap();
        assert_eq!(sup_norm(&field), 0.0);
        assert_eq!(sup_norm(&cusum_field(&field)), 0.0);
    }

    #[test]
    fn modulus_enumerates_pairs() {
        // 1-d field with values (0, 1, 0) at u = (0, 0.5, 1) on a single row.
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = StationarySample::from_rows(spec, vec![0.5]).unwrap();
        let grid = EvaluationGrid::new(
            vec![0.0, 1.0],
            ULattice::new(vec![vec![0.0, 0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let mut field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        field.values[(1, 0)] = 0.0;
        field.values[(1, 1)] = 1.0;
        field.values[(1, 2)] = 0.0;
        field.values[(0, 0)] = 0.0;
        field.values[(0, 1)] = 1.0;
        field.values[(0, 2)] = 0.0;
        assert_eq!(modulus_of_continuity(&field, 0.5).unwrap(), 1.0);
        assert_eq!(modulus_of_continuity(&field, 0.0).unwrap(), 0.0);
        assert_eq!(modulus_of_continuity(&field, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn modulus_of_constant_field_is_zero() {
        let spec = SequenceSpec::iid(1).unwrap();
        let sample = spec.generate(6, 2).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let mut field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        field.values.fill(2.5);
        for delta in [0.0, 0.3, 1.0] {
            assert_eq!(modulus_of_continuity(&field, delta).unwrap(), 0.0);
        }
    }

    #[test]
    fn rescale_identity_holds_for_all_k() {
        let spec = SequenceSpec::new(
            Family::GaussCopulaAr1 { phi: 0.4 },
            2,
            CrossDependence::IndependentCoordinates,
        )
        .unwrap();
        let sample = spec.generate(12, 21).unwrap();
        let grid = EvaluationGrid::from_sample(&sample);
        let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
        for k in 1..=sample.n {
            let diff = rescale_identity_check(&sample, &field, k).unwrap();
            let max = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max < 1e-12, "k = {k}, max = {max:e}");
        }
        assert!(rescale_identity_check(&sample, &field, 0).is_err());
        assert!(rescale_identity_check(&sample, &field, 13).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fast_path_matches_naive_oracle(
            n in 1usize..24,
            d in 1usize..3,
            seed in 0u64..1000,
            empirical in proptest::bool::ANY,
        ) {
            let spec = SequenceSpec::iid(d).unwrap();
            let sample = spec.generate(n, seed).unwrap();
            let grid = EvaluationGrid::from_sample(&sample);
            let centering = if empirical { Centering::EmpiricalCdf } else { Centering::TrueCdf };
            let field = eval_sequential(&sample, centering, &grid).unwrap();
            let oracle = naive_eval(&sample, centering, &grid);
            let max = (&field.values - &oracle).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(max < 1e-12, "max deviation {max:e}");
        }

        #[test]
        fn paper_bound_on_modulus(n in 1usize..20, seed in 0u64..500, delta in 0.0f64..1.0) {
            // w_delta(D_k) <= 2 sup |D_k| <= 4 sqrt(k) on every grid.
            let spec = SequenceSpec::iid(1).unwrap();
            let sample = spec.generate(n, seed).unwrap();
            let grid = EvaluationGrid::from_sample(&sample);
            let field = eval_sequential(&sample, Centering::TrueCdf, &grid).unwrap();
            let w = modulus_of_continuity(&field, delta).unwrap();
            let sup = sup_norm(&field);
            prop_assert!(w <= 2.0 * sup + 1e-12);
            prop_assert!(w <= 4.0 * (n as f64).sqrt() + 1e-12);
        }
    }
}
