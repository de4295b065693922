//! Strictly stationary generators with standard-uniform marginals, exact
//! joint CDFs, and documented strong-mixing upper bounds.
//!
//! Three families are provided:
//!
//! * `Iid` — independent rows.
//! * `MDependent(m)` — each row is the coordinatewise maximum of a moving
//!   window of `m + 1` iid innovation rows, re-uniformized through the exact
//!   marginal CDF `F(x) = x^(m+1)`. Rows at lag greater than `m` are
//!   independent.
//! * `GaussCopulaAr1(phi)` — each coordinate follows a stationary Gaussian
//!   AR(1) with parameter `phi` in latent space, mapped to uniforms by the
//!   standard normal CDF. The marginal transform is exact and the mixing
//!   rate is geometric.
//!
//! Coordinates are coupled either independently or through an
//! equicorrelated Gaussian copula (one-factor structure with correlation
//! `rho`), applied to the innovation rows.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::stats::{norm_cdf, norm_inv_cdf, norm_pdf};

/// Temporal dependence family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Independent rows.
    Iid,
    /// Moving-window maximum of `m + 1` iid innovations; `m`-dependent.
    MDependent { m: usize },
    /// Latent Gaussian AR(1) with parameter `phi`, `|phi| < 1`.
    GaussCopulaAr1 { phi: f64 },
}

/// Cross-sectional coupling of the `d` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossDependence {
    /// Coordinates are mutually independent.
    IndependentCoordinates,
    /// Equicorrelated Gaussian copula with correlation `rho` in [0, 1).
    EquiCorrGaussCopula { rho: f64 },
}

/// Full specification of a stationary sequence: temporal family, dimension,
/// and cross-sectional coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpec {
    pub family: Family,
    pub dim: usize,
    pub cross: CrossDependence,
}

/// A realized sample: `n` rows of `dim` coordinates, each in [0, 1],
/// fully determined by `(spec, n, seed, stream)`.
#[derive(Debug, Clone)]
pub struct StationarySample {
    /// Row-major `n x dim` data.
    data: Vec<f64>,
    pub spec: SequenceSpec,
    pub n: usize,
    pub seed: u64,
    /// Replication stream index the sample was drawn from (0 for direct calls).
    pub stream: u64,
}

/// Documented upper bound on the strong mixing coefficients of a spec.
#[derive(Debug, Clone, Copy)]
pub struct MixingProfile {
    pub spec: SequenceSpec,
}

/// Absolute tolerance of the Gaussian-copula quadrature in `true_cdf`.
pub const COPULA_CDF_TOL: f64 = 1e-10;

// Inner quadrature runs tighter than the documented tolerance so that the
// power transform for the m-dependent family stays within it.
const QUAD_TOL: f64 = 1e-13;
const QUAD_CUTOFF: f64 = 8.5;

impl SequenceSpec {
    pub fn new(family: Family, dim: usize, cross: CrossDependence) -> Result<Self> {
        let spec = SequenceSpec { family, dim, cross };
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor for a one-dimensional iid spec.
    pub fn iid(dim: usize) -> Result<Self> {
        Self::new(Family::Iid, dim, CrossDependence::IndependentCoordinates)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::parameter("dim", "must be at least 1"));
        }
        match self.family {
            Family::Iid => {}
            Family::MDependent { m } => {
                if m == 0 {
                    return Err(Error::parameter("m", "must be at least 1"));
                }
            }
            Family::GaussCopulaAr1 { phi } => {
                if !(phi.is_finite() && phi.abs() < 1.0) {
                    return Err(Error::parameter("phi", "must satisfy |phi| < 1"));
                }
            }
        }
        if let CrossDependence::EquiCorrGaussCopula { rho } = self.cross {
            if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
                return Err(Error::parameter("rho", "must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    /// Draw `n` rows deterministically from `(self, n, seed)`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<StationarySample> {
        self.generate_stream(n, seed, 0)
    }

    /// Draw `n` rows from replication stream `stream_index` under `seed`.
    /// Streams with distinct indices are independent; see [`crate::rng`].
    pub fn generate_stream(&self, n: usize, seed: u64, stream_index: u64) -> Result<StationarySample> {
        self.validate()?;
        if n == 0 {
            return Err(Error::parameter("n", "must be at least 1"));
        }
        let mut rng = stream(seed, stream_index);
        let data = self.sample_rows(n, &mut rng);
        Ok(StationarySample {
            data,
            spec: *self,
            n,
            seed,
            stream: stream_index,
        })
    }

    fn sample_rows(&self, n: usize, rng: &mut Stream) -> Vec<f64> {
        let d = self.dim;
        let mut data = vec![0.0; n * d];
        match self.family {
            Family::Iid => {
                for i in 0..n {
                    self.uniform_innovation_row(rng, &mut data[i * d..(i + 1) * d]);
                }
            }
            Family::GaussCopulaAr1 { phi } => {
                let scale = (1.0 - phi * phi).sqrt();
                let mut latent = vec![0.0; d];
                self.gaussian_innovation_row(rng, &mut latent);
                for (j, z) in latent.iter().enumerate() {
                    data[j] = norm_cdf(*z);
                }
                let mut eps = vec![0.0; d];
                for i in 1..n {
                    self.gaussian_innovation_row(rng, &mut eps);
                    for j in 0..d {
                        latent[j] = phi * latent[j] + scale * eps[j];
                        data[i * d + j] = norm_cdf(latent[j]);
                    }
                }
            }
            Family::MDependent { m } => {
                // Window of m + 1 innovation rows; row i sees innovations
                // i..=i+m, so U_i and U_k are independent when |i - k| > m.
                let total = n + m;
                let mut innov = vec![0.0; total * d];
                for i in 0..total {
                    self.uniform_innovation_row(rng, &mut innov[i * d..(i + 1) * d]);
                }
                let power = (m + 1) as f64;
                for i in 0..n {
                    for j in 0..d {
                        let mut w = 0.0f64;
                        for k in 0..=m {
                            w = w.max(innov[(i + k) * d + j]);
                        }
                        data[i * d + j] = w.powf(power);
                    }
                }
            }
        }
        data
    }

    /// One innovation row with standard-uniform marginals and the configured
    /// cross-dependence.
    fn uniform_innovation_row(&self, rng: &mut Stream, out: &mut [f64]) {
        match self.cross {
            CrossDependence::IndependentCoordinates => {
                for u in out.iter_mut() {
                    *u = rng.random::<f64>();
                }
            }
            CrossDependence::EquiCorrGaussCopula { .. } => {
                let mut z = vec![0.0; out.len()];
                self.gaussian_innovation_row(rng, &mut z);
                for (u, z) in out.iter_mut().zip(z.iter()) {
                    *u = norm_cdf(*z);
                }
            }
        }
    }

    /// One standard Gaussian innovation row with the configured equicorrelation.
    fn gaussian_innovation_row(&self, rng: &mut Stream, out: &mut [f64]) {
        match self.cross {
            CrossDependence::IndependentCoordinates => {
                for z in out.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
            }
            CrossDependence::EquiCorrGaussCopula { rho } => {
                let common: f64 = rng.sample(StandardNormal);
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for z in out.iter_mut() {
                    let own: f64 = rng.sample(StandardNormal);
                    *z = a * common + b * own;
                }
            }
        }
    }

    /// Exact joint CDF `C(u)` of one row.
    ///
    /// Independent coordinates give the product form. The equicorrelated
    /// copula is evaluated by deterministic one-factor quadrature with
    /// absolute tolerance [`COPULA_CDF_TOL`]; the m-dependent family wraps
    /// the same copula through its window construction,
    /// `C(u) = C_rho(u^(1/(m+1)))^(m+1)`.
    pub fn true_cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Domain(format!(
                "point has dimension {}, spec has {}",
                u.len(),
                self.dim
            )));
        }
        if u.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain("point outside the unit cube".into()));
        }
        match self.cross {
            CrossDependence::IndependentCoordinates => Ok(u.iter().product()),
            CrossDependence::EquiCorrGaussCopula { rho } => match self.family {
                Family::Iid | Family::GaussCopulaAr1 { .. } => Ok(gauss_copula_cdf(u, rho)),
                Family::MDependent { m } => {
                    let p = (m + 1) as f64;
                    let root: Vec<f64> = u.iter().map(|x| x.powf(1.0 / p)).collect();
                    Ok(gauss_copula_cdf(&root, rho).powf(p))
                }
            },
        }
    }

    /// Documented upper bound on the strong mixing coefficient at lag `ell`.
    ///
    /// `alpha_0 = 1/2` by convention. The iid family mixes exactly; the
    /// m-dependent family uses the universal bound 1/4 within the window;
    /// the Gaussian AR(1) copula uses the conservative geometric bound
    /// `|phi|^ell`, capped at 1/2 so the profile is non-increasing.
    pub fn mixing_bound(&self, ell: usize) -> f64 {
        if ell == 0 {
            return 0.5;
        }
        match self.family {
            Family::Iid => 0.0,
            Family::MDependent { m } => {
                if ell <= m {
                    0.25
                } else {
                    0.0
                }
            }
            Family::GaussCopulaAr1 { phi } => phi.abs().powi(ell as i32).min(0.5),
        }
    }

    pub fn mixing_profile(&self) -> MixingProfile {
        MixingProfile { spec: *self }
    }
}

impl MixingProfile {
    /// Upper bound on `alpha_ell`; non-increasing, 1/2 at lag 0.
    pub fn bound(&self, ell: usize) -> f64 {
        self.spec.mixing_bound(ell)
    }
}

impl StationarySample {
    /// Row `i` as a slice of length `dim`.
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.dim;
        &self.data[i * d..(i + 1) * d]
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The first `k` rows as a sample in their own right.
    pub fn prefix(&self, k: usize) -> Result<StationarySample> {
        if k == 0 || k > self.n {
            return Err(Error::Index(format!("prefix length {k} not in 1..={}", self.n)));
        }
        Ok(StationarySample {
            data: self.data[..k * self.spec.dim].to_vec(),
            spec: self.spec,
            n: k,
            seed: self.seed,
            stream: self.stream,
        })
    }

    /// Build a sample from explicit rows (used by the applications and tests
    /// to analyse externally constructed data). Entries must lie in [0, 1].
    pub fn from_rows(spec: SequenceSpec, rows: Vec<f64>) -> Result<StationarySample> {
        spec.validate()?;
        if rows.is_empty() || rows.len() % spec.dim != 0 {
            return Err(Error::parameter("rows", "length must be a positive multiple of dim"));
        }
        if rows.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::parameter("rows", "entries must lie in [0, 1]"));
        }
        let n = rows.len() / spec.dim;
        Ok(StationarySample {
            data: rows,
            spec,
            n,
            seed: 0,
            stream: 0,
        })
    }
}

/// Equicorrelated Gaussian copula CDF via the one-factor representation:
/// conditionally on the common factor `w`, coordinates are independent with
/// conditional CDF `Phi((Phi^-1(u_j) - sqrt(rho) w) / sqrt(1 - rho))`.
fn gauss_copula_cdf(u: &[f64], rho: f64) -> f64 {
    if u.iter().any(|&x| x == 0.0) {
        return 0.0;
    }
    let z: Vec<f64> = u.iter().filter(|&&x| x < 1.0).map(|&x| norm_inv_cdf(x)).collect();
    if z.is_empty() {
        return 1.0;
    }
    if rho == 0.0 || z.len() == 1 {
        return z.iter().map(|&zj| norm_cdf(zj)).product();
    }
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let integrand = |w: f64| -> f64 {
        let mut p = norm_pdf(w);
        for &zj in &z {
            p *= norm_cdf((zj - a * w) / b);
        }
        p
    };
    adaptive_simpson(&integrand, -QUAD_CUTOFF, QUAD_CUTOFF, QUAD_TOL).clamp(0.0, 1.0)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fb, fm, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn iid1() -> SequenceSpec {
        SequenceSpec::iid(1).unwrap()
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = iid1();
        let a = spec.generate(3, 99).unwrap();
        let b = spec.generate(3, 99).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.n, 3);
        assert!(a.data().iter().all(|u| (0.0..=1.0).contains(u)));
        let c = spec.generate(3, 100).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn all_families_stay_in_unit_cube() {
        let specs = [
            SequenceSpec::new(Family::MDependent { m: 2 }, 2, CrossDependence::IndependentCoordinates).unwrap(),
            SequenceSpec::new(
                Family::GaussCopulaAr1 { phi: 0.7 },
                3,
                CrossDependence::EquiCorrGaussCopula { rho: 0.4 },
            )
            .unwrap(),
            SequenceSpec::new(Family::Iid, 2, CrossDependence::EquiCorrGaussCopula { rho: 0.0 }).unwrap(),
        ];
        for spec in specs {
            let s = spec.generate(500, 11).unwrap();
            assert!(s.data().iter().all(|u| (0.0..=1.0).contains(u)));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SequenceSpec::new(Family::GaussCopulaAr1 { phi: 1.0 }, 1, CrossDependence::IndependentCoordinates).is_err());
        assert!(SequenceSpec::new(Family::MDependent { m: 0 }, 1, CrossDependence::IndependentCoordinates).is_err());
        assert!(SequenceSpec::new(Family::Iid, 0, CrossDependence::IndependentCoordinates).is_err());
        assert!(SequenceSpec::new(Family::Iid, 1, CrossDependence::EquiCorrGaussCopula { rho: 1.0 }).is_err());
    }

    #[test]
    fn product_cdf_and_boundaries() {
        let spec = SequenceSpec::iid(2).unwrap();
        assert_abs_diff_eq!(spec.true_cdf(&[0.5, 0.5]).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(spec.true_cdf(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(spec.true_cdf(&[0.0, 0.8]).unwrap(), 0.0);
        assert!(spec.true_cdf(&[1.2, 0.5]).is_err());
    }

    #[test]
    fn equicorr_rho_zero_reduces_to_product() {
        let spec =
            SequenceSpec::new(Family::Iid, 2, CrossDependence::EquiCorrGaussCopula { rho: 0.0 }).unwrap();
        assert_abs_diff_eq!(spec.true_cdf(&[0.3, 0.7]).unwrap(), 0.21, epsilon = 1e-12);
    }

    #[test]
    fn equicorr_copula_matches_orthant_formula() {
        // Bivariate normal orthant probability: C_rho(1/2, 1/2) = 1/4 + asin(rho) / (2 pi).
        for rho in [0.2, 0.5, 0.8] {
            let spec =
                SequenceSpec::new(Family::Iid, 2, CrossDependence::EquiCorrGaussCopula { rho }).unwrap();
            let expected = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert_abs_diff_eq!(spec.true_cdf(&[0.5, 0.5]).unwrap(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn equicorr_copula_boundaries() {
        let spec =
            SequenceSpec::new(Family::Iid, 3, CrossDependence::EquiCorrGaussCopula { rho: 0.5 }).unwrap();
        assert_eq!(spec.true_cdf(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(spec.true_cdf(&[0.4, 0.0, 0.9]).unwrap(), 0.0);
        // Dropping a coordinate at 1 reduces dimension.
        let lower = SequenceSpec::new(Family::Iid, 2, CrossDependence::EquiCorrGaussCopula { rho: 0.5 }).unwrap();
        assert_abs_diff_eq!(
            spec.true_cdf(&[0.3, 0.6, 1.0]).unwrap(),
            lower.true_cdf(&[0.3, 0.6]).unwrap(),
            epsilon = 1e-11
        );
    }

    #[test]
    fn mdependent_equicorr_cdf_matches_empirical() {
        // The window construction gives C(u) = C_rho(u^(1/(m+1)))^(m+1);
        // cross-check against a large simulated sample.
        let spec = SequenceSpec::new(
            Family::MDependent { m: 1 },
            2,
            CrossDependence::EquiCorrGaussCopula { rho: 0.5 },
        )
        .unwrap();
        let s = spec.generate(200_000, 5).unwrap();
        let u = [0.4, 0.7];
        let hits = (0..s.n)
            .filter(|&i| s.row(i)[0] <= u[0] && s.row(i)[1] <= u[1])
            .count();
        let emp = hits as f64 / s.n as f64;
        let c = spec.true_cdf(&u).unwrap();
        // 5 sigma of a Bernoulli proportion, inflated for 1-dependence.
        let tol = 5.0 * (2.0 * c * (1.0 - c) / s.n as f64).sqrt();
        assert_abs_diff_eq!(emp, c, epsilon = tol);
    }

    #[test]
    fn mixing_bounds_match_contract() {
        let iid = iid1();
        assert_eq!(iid.mixing_bound(0), 0.5);
        assert_eq!(iid.mixing_bound(1), 0.0);

        let md = SequenceSpec::new(Family::MDependent { m: 3 }, 1, CrossDependence::IndependentCoordinates).unwrap();
        assert_eq!(md.mixing_bound(0), 0.5);
        assert_eq!(md.mixing_bound(2), 0.25);
        assert_eq!(md.mixing_bound(3), 0.25);
        assert_eq!(md.mixing_bound(4), 0.0);

        let ar = SequenceSpec::new(Family::GaussCopulaAr1 { phi: 0.5 }, 1, CrossDependence::IndependentCoordinates).unwrap();
        assert_relative_eq!(ar.mixing_bound(4), 0.0625, epsilon = 1e-15);
        assert_eq!(ar.mixing_bound(0), 0.5);
    }

    #[test]
    fn mixing_bound_is_non_increasing() {
        let specs = [
            iid1(),
            SequenceSpec::new(Family::MDependent { m: 2 }, 1, CrossDependence::IndependentCoordinates).unwrap(),
            SequenceSpec::new(Family::GaussCopulaAr1 { phi: 0.9 }, 1, CrossDependence::IndependentCoordinates).unwrap(),
            SequenceSpec::new(Family::GaussCopulaAr1 { phi: -0.6 }, 1, CrossDependence::IndependentCoordinates).unwrap(),
        ];
        for spec in specs {
            let profile = spec.mixing_profile();
            for ell in 0..40 {
                assert!(profile.bound(ell + 1) <= profile.bound(ell));
                assert!((0.0..=0.5).contains(&profile.bound(ell)));
            }
        }
    }

    #[test]
    fn mdependent_marginals_are_uniform() {
        let spec = SequenceSpec::new(Family::MDependent { m: 2 }, 1, CrossDependence::IndependentCoordinates).unwrap();
        let s = spec.generate(20_000, 3).unwrap();
        let d = crate::stats::ks_uniform(s.data());
        assert!(d < crate::stats::ks_critical_one_sample(s.n, 0.01), "KS = {d}");
    }

    #[test]
    fn prefix_takes_leading_rows() {
        let spec = SequenceSpec::iid(2).unwrap();
        let s = spec.generate(10, 1).unwrap();
        let p = s.prefix(4).unwrap();
        assert_eq!(p.n, 4);
        assert_eq!(p.row(3), s.row(3));
        assert!(s.prefix(11).is_err());
    }
}
