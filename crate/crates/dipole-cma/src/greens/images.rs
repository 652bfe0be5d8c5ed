//! Prony fit of the half-space spectral reflection onto a finite set of
//! complex images.
//!
//! The quasi-static part -K_eps is subtracted first, so the fit target
//! F(k_z0) = Γ(k_z0) + K_eps decays along the sampling path
//! k_z0(t) = k0·[(1 - t/T0) - j·t], t ∈ [0, T0]. Classical Prony linear
//! prediction on uniform samples yields exponentials in t, which map to
//! image amplitudes u_m and displacements v_m such that each term becomes
//! a spherical wave from a source at the complex depth z + z' - j·v_m.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{quasi_static_reflection, tm_reflection, HalfSpace};

/// Default image count; a handful of terms converges for moderately lossy
/// media.
pub const DEFAULT_IMAGE_COUNT: usize = 5;
/// Default sampling-path length. Short paths keep the fit anchored near the
/// propagating spectrum, which the oracle comparison shows matters most.
pub const DEFAULT_PATH_T0: f64 = 2.0;
/// Default number of uniform samples along the path.
pub const DEFAULT_PATH_SAMPLES: usize = 100;

/// One fitted image: amplitude u_m and complex displacement v_m (metres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialTerm {
    pub amplitude: Complex64,
    pub displacement: Complex64,
}

/// Quasi-static coefficient plus the fitted image terms. Immutable after
/// fitting; cheap to clone and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImageSet {
    pub k_eps: Complex64,
    pub terms: Vec<ExponentialTerm>,
    /// Relative sup-norm misfit over the sampling path.
    pub fit_residual: f64,
}

impl ComplexImageSet {
    /// No ground plane: K_eps = 0 and no images, reducing the lossy kernel
    /// to free space.
    pub fn no_ground() -> Self {
        ComplexImageSet {
            k_eps: Complex64::ZERO,
            terms: Vec::new(),
            fit_residual: 0.0,
        }
    }

    /// PEC ground: K_eps = -1 and no images.
    pub fn pec_ground() -> Self {
        ComplexImageSet {
            k_eps: Complex64::new(-1.0, 0.0),
            terms: Vec::new(),
            fit_residual: 0.0,
        }
    }

    pub fn image_count(&self) -> usize {
        self.terms.len()
    }

    pub fn to_json(&self) -> ImageSetJson {
        ImageSetJson {
            k_eps: ComplexPair::from(self.k_eps),
            u: self.terms.iter().map(|t| ComplexPair::from(t.amplitude)).collect(),
            v: self.terms.iter().map(|t| ComplexPair::from(t.displacement)).collect(),
            m: self.terms.len(),
            fit_residual: self.fit_residual,
        }
    }

    pub fn from_json(json: &ImageSetJson) -> Result<Self> {
        if json.u.len() != json.m || json.v.len() != json.m {
            return Err(Error::Config(format!(
                "image set claims m = {} but carries {} amplitudes / {} displacements",
                json.m,
                json.u.len(),
                json.v.len()
            )));
        }
        Ok(ComplexImageSet {
            k_eps: json.k_eps.into(),
            terms: json
                .u
                .iter()
                .zip(json.v.iter())
                .map(|(u, v)| ExponentialTerm {
                    amplitude: (*u).into(),
                    displacement: (*v).into(),
                })
                .collect(),
            fit_residual: json.fit_residual,
        })
    }
}

/// Re/Im pair used by the cacheable JSON layout.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexPair {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexPair {
    fn from(c: Complex64) -> Self {
        ComplexPair { re: c.re, im: c.im }
    }
}

impl From<ComplexPair> for Complex64 {
    fn from(p: ComplexPair) -> Self {
        Complex64::new(p.re, p.im)
    }
}

/// Serializable image-set layout for caching between runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageSetJson {
    pub k_eps: ComplexPair,
    pub u: Vec<ComplexPair>,
    pub v: Vec<ComplexPair>,
    pub m: usize,
    pub fit_residual: f64,
}

/// Fit the spectral reflection of `hs` at wavenumber `k0` with `m` complex
/// images, sampling `ns` uniform points along the one-level path of length
/// `t0`.
pub fn fit_complex_images(
    k0: f64,
    hs: HalfSpace,
    m: usize,
    t0: f64,
    ns: usize,
) -> Result<ComplexImageSet> {
    let eps_r = hs.eps_r();
    let k_eps = quasi_static_reflection(eps_r)?;
    if m == 0 {
        return Ok(ComplexImageSet {
            k_eps,
            terms: Vec::new(),
            fit_residual: 0.0,
        });
    }
    if ns < 2 * m {
        return Err(Error::Config(format!(
            "prony fit needs at least 2M = {} samples, got {ns}",
            2 * m
        )));
    }

    let dt = t0 / (ns - 1) as f64;
    let mut samples = Vec::with_capacity(ns);
    for s in 0..ns {
        let t = dt * s as f64;
        let kz0 = Complex64::new(k0 * (1.0 - t / t0), -k0 * t);
        samples.push(tm_reflection(kz0, eps_r, k0)? + k_eps);
    }

    let peak = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak < 1e-13 {
        // Homogeneous space: the fit target is identically zero.
        return Ok(ComplexImageSet {
            k_eps,
            terms: vec![
                ExponentialTerm {
                    amplitude: Complex64::ZERO,
                    displacement: Complex64::ZERO,
                };
                m
            ],
            fit_residual: 0.0,
        });
    }

    let fitted = prony_exponential_fit(&samples, dt, m)?;

    // Map per-t exponents back onto the spectral variable: a term
    // c·e^{σt} equals u·e^{-k_z0 v} with v = σ/(k0(1/T0 + j)), u = c·e^{k0 v}.
    let path_slope = Complex64::new(1.0 / t0, 1.0);
    let mut terms = Vec::with_capacity(fitted.len());
    for (c, sigma) in &fitted {
        let v = sigma / (k0 * path_slope);
        let u = c * (k0 * v).exp();
        terms.push(ExponentialTerm {
            amplitude: u,
            displacement: v,
        });
    }

    // Residual of the reconstructed fit over the sampling path.
    let mut worst: f64 = 0.0;
    for (s, f) in samples.iter().enumerate() {
        let t = dt * s as f64;
        let recon: Complex64 = fitted.iter().map(|(c, sig)| c * (sig * t).exp()).sum();
        worst = worst.max((recon - f).norm());
    }

    Ok(ComplexImageSet {
        k_eps,
        terms,
        fit_residual: worst / peak,
    })
}

/// Classical Prony fit of uniformly sampled data: returns (c_k, σ_k) pairs
/// with `data[s] ≈ Σ_k c_k·e^{σ_k·s·dt}`.
///
/// The linear-prediction system is solved by least squares over all samples;
/// the prediction polynomial is rooted by Durand-Kerner iteration and the
/// amplitudes follow from a Vandermonde least-squares solve.
pub fn prony_exponential_fit(
    data: &[Complex64],
    dt: f64,
    m: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    let ns = data.len();
    assert!(m >= 1 && ns >= 2 * m, "need at least 2M samples");

    // Linear prediction: data[s] = -Σ_{k=1..m} a_k data[s-k] for s = m..ns.
    let rows = ns - m;
    let mut pred = DMatrix::<Complex64>::zeros(rows, m);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    for r in 0..rows {
        rhs[r] = -data[m + r];
        for k in 0..m {
            pred[(r, k)] = data[m + r - 1 - k];
        }
    }

    let (solution, cond, rank) = lstsq_with_diagnostics(&pred, &rhs);
    if rank < m {
        return Err(Error::RankDeficient {
            recovered: rank,
            requested: m,
        });
    }
    if cond > 1e13 {
        return Err(Error::IllConditionedPrediction { cond });
    }
    let coeffs = solution.ok_or(Error::IllConditionedPrediction { cond })?;

    // Roots of z^m + a_1 z^{m-1} + ... + a_m.
    let poly: Vec<Complex64> = coeffs.iter().copied().collect();
    let roots = polynomial_roots(&poly);

    // Keep roots away from the origin; ln is unusable there.
    let exponents: Vec<Complex64> = roots
        .iter()
        .filter(|z| z.norm() > 1e-12)
        .map(|z| z.ln() / dt)
        .collect();
    if exponents.len() < m {
        return Err(Error::RankDeficient {
            recovered: exponents.len(),
            requested: m,
        });
    }

    // Amplitudes from the Vandermonde system V[s][k] = e^{σ_k·s·dt}.
    let mut vand = DMatrix::<Complex64>::zeros(ns, m);
    for s in 0..ns {
        let t = dt * s as f64;
        for (k, sig) in exponents.iter().enumerate() {
            vand[(s, k)] = (sig * t).exp();
        }
    }
    let rhs = DVector::<Complex64>::from_column_slice(data);
    let (amps, amp_cond, _) = lstsq_with_diagnostics(&vand, &rhs);
    let amps = amps.ok_or(Error::IllConditionedPrediction { cond: amp_cond })?;

    Ok(exponents
        .iter()
        .zip(amps.iter())
        .map(|(sig, c)| (*c, *sig))
        .collect())
}

/// Least squares through the SVD of the real embedding
/// [[Re A, -Im A], [Im A, Re A]], which shares the complex matrix's singular
/// values (doubled) and turns the complex problem into an equivalent real
/// one. Returns the solution, a condition estimate, and the numerical rank.
fn lstsq_with_diagnostics(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> (Option<DVector<Complex64>>, f64, usize) {
    let (r, m) = (a.nrows(), a.ncols());
    let mut embed = DMatrix::<f64>::zeros(2 * r, 2 * m);
    for i in 0..r {
        for j in 0..m {
            let z = a[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i + r, j + m)] = z.re;
            embed[(i, j + m)] = -z.im;
            embed[(i + r, j)] = z.im;
        }
    }
    let mut rhs = DVector::<f64>::zeros(2 * r);
    for i in 0..r {
        rhs[i] = b[i].re;
        rhs[i + r] = b[i].im;
    }

    let svd = embed.svd(true, true);
    let sig_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sig_max == 0.0 {
        return (None, f64::INFINITY, 0);
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * sig_max)
        .count()
        / 2;
    let sig_min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let cond = if sig_min > 0.0 {
        sig_max / sig_min
    } else {
        f64::INFINITY
    };

    let sol = svd.solve(&rhs, 1e-13 * sig_max).ok().map(|x| {
        DVector::from_fn(m, |k, _| Complex64::new(x[k], x[k + m]))
    });
    (sol, cond, rank)
}

/// Roots of the monic polynomial z^m + c[0]·z^{m-1} + ... + c[m-1] by
/// Durand-Kerner iteration. Adequate for the small orders used here.
fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let m = coeffs.len();
    if m == 0 {
        return Vec::new();
    }
    if m == 1 {
        return vec![-coeffs[0]];
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for c in coeffs {
            p = p * z + c;
        }
        p
    };

    let radius = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..m)
        .map(|k| radius * seed.powu(k as u32 + 1))
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..m {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..m {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_exponential_sum() {
        // F(t) = 3e^{-2t} + 5e^{-t} on 20 uniform samples
        let dt = 0.25;
        let data: Vec<Complex64> = (0..20)
            .map(|s| {
                let t = dt * s as f64;
                Complex64::new(3.0 * (-2.0 * t).exp() + 5.0 * (-t).exp(), 0.0)
            })
            .collect();
        let mut fit = prony_exponential_fit(&data, dt, 2).unwrap();
        fit.sort_by(|a, b| a.1.re.total_cmp(&b.1.re));
        assert!((fit[0].1 - Complex64::new(-2.0, 0.0)).norm() < 1e-8);
        assert!((fit[1].1 - Complex64::new(-1.0, 0.0)).norm() < 1e-8);
        assert!((fit[0].0 - Complex64::new(3.0, 0.0)).norm() < 1e-8);
        assert!((fit[1].0 - Complex64::new(5.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn recovers_complex_exponentials_up_to_order_six() {
        let dt = 0.1;
        let truth: Vec<(Complex64, Complex64)> = vec![
            (Complex64::new(1.0, 0.3), Complex64::new(-0.5, 2.0)),
            (Complex64::new(-0.7, 0.2), Complex64::new(-1.1, -3.0)),
            (Complex64::new(0.4, -1.0), Complex64::new(-0.2, 5.0)),
            (Complex64::new(2.0, 0.0), Complex64::new(-2.3, 0.7)),
            (Complex64::new(0.05, 0.8), Complex64::new(-0.8, -1.2)),
            (Complex64::new(-0.3, -0.4), Complex64::new(-1.7, 4.1)),
        ];
        let data: Vec<Complex64> = (0..64)
            .map(|s| {
                let t = dt * s as f64;
                truth.iter().map(|(c, sig)| c * (sig * t).exp()).sum()
            })
            .collect();
        let fit = prony_exponential_fit(&data, dt, 6).unwrap();
        // compare reconstructed samples rather than matching term order
        for (s, sample) in data.iter().enumerate() {
            let t = dt * s as f64;
            let recon: Complex64 = fit.iter().map(|(c, sig)| c * (sig * t).exp()).sum();
            assert!((recon - sample).norm() < 1e-8, "sample {s}");
        }
        // every true exponent has a close recovered partner
        for (_, sig) in &truth {
            let best = fit
                .iter()
                .map(|(_, s)| (s - sig).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7, "exponent {sig} missed by {best}");
        }
    }

    #[test]
    fn rank_deficient_data_is_reported() {
        let dt = 0.2;
        let data: Vec<Complex64> = (0..30)
            .map(|s| {
                let t = dt * s as f64;
                Complex64::new(2.0 * (-t).exp() - 0.5 * (-3.0 * t).exp(), 0.0)
            })
            .collect();
        match prony_exponential_fit(&data, dt, 4) {
            Err(Error::RankDeficient {
                recovered,
                requested: 4,
            }) => assert_eq!(recovered, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_space_fits_zero() {
        let set = fit_complex_images(2.0 * std::f64::consts::PI, HalfSpace::new(Complex64::new(1.0, 0.0)), 5, 5.0, 100)
            .unwrap();
        assert_eq!(set.image_count(), 5);
        assert!(set.terms.iter().all(|t| t.amplitude.norm() < 1e-12));
        assert!(set.k_eps.norm() < 1e-15);
    }

    #[test]
    fn pec_limit_amplitudes_vanish() {
        let set = fit_complex_images(
            2.0 * std::f64::consts::PI,
            HalfSpace::new(Complex64::new(1e8, 0.0)),
            5,
            5.0,
            100,
        )
        .unwrap();
        assert!((set.k_eps - Complex64::new(-1.0, 0.0)).norm() < 1e-7);
        for t in &set.terms {
            assert!(t.amplitude.norm() < 1e-2, "u = {}", t.amplitude);
        }
    }

    #[test]
    fn lossy_fit_has_small_residual_on_path() {
        let set = fit_complex_images(
            2.0 * std::f64::consts::PI,
            HalfSpace::new(Complex64::new(16.0, -16.0)),
            5,
            5.0,
            100,
        )
        .unwrap();
        assert_eq!(set.image_count(), 5);
        assert!(set.fit_residual < 1e-2, "residual {}", set.fit_residual);
    }

    #[test]
    fn json_round_trip() {
        let set = fit_complex_images(
            21.0,
            HalfSpace::new(Complex64::new(10.0, -4.0)),
            3,
            5.0,
            60,
        )
        .unwrap();
        let text = serde_json::to_string(&set.to_json()).unwrap();
        let back = ComplexImageSet::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn durand_kerner_quadratic() {
        // z² - 3z + 2 → roots 1, 2
        let mut roots = polynomial_roots(&[Complex64::new(-3.0, 0.0), Complex64::new(2.0, 0.0)]);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((roots[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
