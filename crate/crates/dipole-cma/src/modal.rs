//! Characteristic-mode solves: the symmetric-definite generalized
//! eigensolver, the four mode formulations, and the modal expansion of a
//! driven current.
//!
//! Radiation operators of electrically small sub-structures have spectra
//! that fall below f64 resolution after a handful of modes, so leading
//! minors of R_o are numerically semidefinite even though the operator is
//! exactly positive definite. The reduction therefore tries a strict
//! Cholesky first and, when that fails, validates the spectrum (genuine
//! indefiniteness beyond rounding stays an error) and factorises through
//! the eigendecomposition with the floor pinned at rounding level. Modes
//! whose weight stands above that floor are counted as `resolved`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mom::{condition_estimate, ImpedanceSystem};

/// Which characteristic equation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// X_o J = λ R_o J: dipole alone in free space.
    Isolated,
    /// X_PG J = λ R_PG J: dipole above a PEC half-space.
    PecGround,
    /// X_LG J = λ R_LG J: lossy ground, weighted by the full resistance.
    LossyConventional,
    /// X_LG J = λ R_o J: lossy ground, weighted by the radiation operator
    /// alone, which keeps the far fields of distinct modes orthogonal.
    LossyRadiation,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            Formulation::Isolated => "isolated",
            Formulation::PecGround => "pec-ground",
            Formulation::LossyConventional => "lossy-conventional",
            Formulation::LossyRadiation => "lossy-radiation",
        };
        write!(f, "{tag}")
    }
}

/// How the pencil reduction obtained its triangular factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionRoute {
    /// Strict Cholesky of B succeeded.
    Cholesky,
    /// B was numerically semidefinite; the factor came from its
    /// eigendecomposition, floored at rounding level.
    SemidefiniteEigen,
}

/// Result of the symmetric-definite generalized eigensolve A u = λ B u.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending in |λ|.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns, B-orthogonal.
    pub vectors: DMatrix<f64>,
    pub route: ReductionRoute,
    /// Leading modes whose B-weight stands above the rounding floor of ‖B‖.
    pub resolved: usize,
}

/// Solve A u = λ B u for symmetric A and symmetric positive-definite B by
/// reduction to a standard symmetric problem with a triangular factor of B.
///
/// When B's conditioning pushes the reduced matrix past what the standard
/// eigensolver resolves, the reduction output only seeds the answer: every
/// resolved eigenpair is polished by Rayleigh-quotient iteration on the
/// original pencil, which restores machine-level residuals independent of
/// the reduction's conditioning.
pub fn gen_eig_sym(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    assert_eq!(b.ncols(), n);

    let b_scale = b.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()));
    if b_scale == 0.0 || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { matrix: "B" });
    }

    let (l, route, resolved) = triangular_factor(b)?;

    // C = L⁻¹ A L⁻ᵀ, symmetrised against rounding.
    let linv_a = l
        .clone()
        .solve_lower_triangular(a)
        .ok_or(Error::NotPositiveDefinite { matrix: "B" })?;
    let c_t = l
        .clone()
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(Error::NotPositiveDefinite { matrix: "B" })?;
    let c = 0.5 * (&c_t + c_t.transpose());

    let se = c.symmetric_eigen();

    // Back-transform U = L⁻ᵀ Q; re-derive each eigenvalue as the Rayleigh
    // quotient of its own vector (the reduced solve can mispair values and
    // vectors once ‖C‖ hits 1/ε).
    let u = l
        .transpose()
        .solve_upper_triangular(&se.eigenvectors)
        .ok_or(Error::NotPositiveDefinite { matrix: "B" })?;

    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| {
            let mut v = u.column(i).into_owned();
            v /= v.norm();
            let quotient = rayleigh_quotient(a, b, &v).unwrap_or(se.eigenvalues[i]);
            (quotient, v)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()));

    // Polish only the eigenpairs whose B-weight stands above the rounding
    // floor; iterating on the noise tail makes seeds jump basins and
    // degrades the basis the tail provides.
    let seed_powers: Vec<f64> = pairs.iter().map(|(_, v)| v.dot(&(b * v))).collect();
    let p_max = seed_powers.iter().cloned().fold(0.0, f64::max);
    let mut polishable = 0;
    for &p in &seed_powers {
        if p > 1e-12 * p_max {
            polishable += 1;
        } else {
            break;
        }
    }
    let polishable = polishable.min(resolved);

    let a_scale = a.norm();
    let b_norm = b.norm();
    for pair in pairs.iter_mut().take(polishable) {
        polish_eigenpair(a, b, &mut pair.0, &mut pair.1, a_scale, b_norm);
    }

    // Seeds that collapsed into the same basin are re-polished from
    // B-deflated starts; with well-separated spectra this rarely triggers.
    // A reseed that lands on a duplicate again reverts to its original seed.
    for i in 1..polishable {
        let original = pairs[i].clone();
        let (head, tail) = pairs.split_at_mut(i);
        let (lam_i, v_i) = &mut tail[0];
        let is_duplicate = |lam: f64, v: &DVector<f64>, head: &[(f64, DVector<f64>)]| {
            head.iter().any(|(lam_j, v_j)| {
                (lam - *lam_j).abs() <= 1e-12 * lam_j.abs().max(1e-300)
                    && v.dot(v_j).abs() > 0.999 * v.norm() * v_j.norm()
            })
        };
        if is_duplicate(*lam_i, v_i, head) {
            let mut seed = v_i.clone();
            for (_, v_j) in head.iter() {
                let bv = b * v_j;
                let denom = v_j.dot(&bv);
                if denom.abs() > 1e-300 {
                    let proj = seed.dot(&bv) / denom;
                    seed -= proj * v_j;
                }
            }
            if seed.norm() > 1e-8 {
                seed /= seed.norm();
                if let Some(q) = rayleigh_quotient(a, b, &seed) {
                    *lam_i = q;
                    *v_i = seed;
                    polish_eigenpair(a, b, lam_i, v_i, a_scale, b_norm);
                }
            }
            if is_duplicate(*lam_i, v_i, head) {
                (*lam_i, *v_i) = original;
            }
        }
    }
    pairs.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()));

    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, (_, v)) in pairs.iter().enumerate() {
        // B-normalise where the weight is meaningful
        let bv = b * v;
        let p = v.dot(&bv);
        if p > 0.0 {
            vectors.set_column(col, &(v / p.sqrt()));
        } else {
            vectors.set_column(col, v);
        }
    }

    Ok(GeneralizedEigen {
        eigenvalues,
        vectors,
        route,
        resolved,
    })
}

fn rayleigh_quotient(a: &DMatrix<f64>, b: &DMatrix<f64>, v: &DVector<f64>) -> Option<f64> {
    let num = v.dot(&(a * v));
    let den = v.dot(&(b * v));
    (den.abs() > 1e-300).then(|| num / den)
}

/// Rayleigh-quotient iterations on the pencil (A, B), run until the
/// residual stops improving; keeps the best iterate. No-op when the seed
/// already sits at machine level.
fn polish_eigenpair(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: &mut f64,
    v: &mut DVector<f64>,
    a_scale: f64,
    b_norm: f64,
) {
    let residual = |lam: f64, vec: &DVector<f64>| -> f64 { (a * vec - lam * (b * vec)).norm() };
    // machine floor of the residual; below this, iterates just bounce
    let floor = |lam: f64| 1e-15 * (a_scale + lam.abs() * b_norm);

    let mut best_res = residual(*lambda, v);
    if best_res <= floor(*lambda) {
        return;
    }
    let mut lam = *lambda;
    let mut vec = v.clone();
    for _ in 0..8 {
        // shift slightly off the eigenvalue so the solve stays nonsingular
        let shift = lam * (1.0 + 1e-13) + 1e-300;
        let m = a - shift * b;
        let rhs = b * &vec;
        let Some(w) = m.lu().solve(&rhs) else { break };
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        vec = w / norm;
        let Some(q) = rayleigh_quotient(a, b, &vec) else { break };
        lam = q;
        let res = residual(lam, &vec);
        let improved = res < 0.5 * best_res;
        if res < best_res {
            best_res = res;
            *lambda = lam;
            *v = vec.clone();
        }
        if res <= floor(lam) || !improved {
            break;
        }
    }
}

/// Lower-triangular L with B ≈ L·Lᵀ. Strict Cholesky when it holds; for a
/// numerically semidefinite B the factor is rebuilt from the spectrum with
/// eigenvalues floored at 1e-14·λ_max (the matrix's own rounding noise).
/// Anything indefinite beyond rounding is refused.
fn triangular_factor(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, ReductionRoute, usize)> {
    let n = b.nrows();
    if let Some(chol) = nalgebra::Cholesky::new(b.clone()) {
        return Ok((chol.unpack(), ReductionRoute::Cholesky, n));
    }
    let se = b.clone().symmetric_eigen();
    let lam_max = se.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lam_max <= 0.0 || se.eigenvalues.iter().any(|&lam| lam < -1e-10 * lam_max) {
        return Err(Error::NotPositiveDefinite { matrix: "B" });
    }
    let floor = 1e-14 * lam_max;
    let resolved = se.eigenvalues.iter().filter(|&&lam| lam > floor).count();
    // G = Λ̂^{1/2} Qᵀ satisfies GᵀG = B up to rounding; QR's upper factor is
    // the triangular root Cholesky would have produced.
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let s = se.eigenvalues[i].max(floor).sqrt();
        for j in 0..n {
            g[(i, j)] = s * se.eigenvectors[(j, i)];
        }
    }
    let mut r = g.qr().unpack_r();
    // fix diagonal signs so L has a positive diagonal
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in 0..n {
                r[(i, j)] = -r[(i, j)];
            }
        }
    }
    Ok((r.transpose(), ReductionRoute::SemidefiniteEigen, resolved))
}

/// A solved set of characteristic modes under one formulation.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub formulation: Formulation,
    /// Ascending in magnitude.
    pub eigenvalues: Vec<f64>,
    /// One column per mode, normalised to max-amplitude 1 with the peak
    /// entry positive.
    pub modes: DMatrix<f64>,
    /// Leading modes resolved above the weight matrix's rounding floor.
    pub resolved: usize,
}

impl ModeSet {
    pub fn n(&self) -> usize {
        self.modes.nrows()
    }

    pub fn mode(&self, i: usize) -> DVector<f64> {
        self.modes.column(i).into_owned()
    }

    /// CSV export: header row of eigenvalues, one column per mode.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = String::new();
        out.push_str("eigenvalue");
        for lam in &self.eigenvalues {
            out.push_str(&format!(",{lam:.8e}"));
        }
        out.push('\n');
        for row in 0..self.n() {
            out.push_str(&format!("{}", row + 1));
            for col in 0..self.eigenvalues.len() {
                out.push_str(&format!(",{:.8e}", self.modes[(row, col)]));
            }
            out.push('\n');
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "formulation": self.formulation.to_string(),
            "eigenvalues": self.eigenvalues,
            "resolved_modes": self.resolved,
            "size": self.n(),
        })
    }
}

/// Solve the characteristic-mode problem of `sys` under `formulation`.
///
/// The weight matrix must be positive definite: R_o always is (up to its
/// rounding floor); R_LG of a strongly lossy ground can fail, which is
/// surfaced rather than silently returning complex modes as real.
pub fn solve_modes(sys: &ImpedanceSystem, formulation: Formulation) -> Result<ModeSet> {
    let (a, b): (DMatrix<f64>, DMatrix<f64>) = match formulation {
        Formulation::Isolated => (sys.x_o.clone(), sys.r_o.clone()),
        Formulation::PecGround | Formulation::LossyConventional => (sys.x_total(), sys.r_total()),
        Formulation::LossyRadiation => (sys.x_total(), sys.r_o.clone()),
    };
    let ge = gen_eig_sym(&a, &b)?;
    let n = ge.vectors.nrows();

    // Mode-wise resolution: the leading run whose B-weight stands clear of
    // the rounding floor of the largest modal power. Powers are taken on
    // unit-norm directions; the solver's B-normalised columns would all
    // report unit weight.
    let powers: Vec<f64> = (0..n)
        .map(|i| {
            let u = ge.vectors.column(i);
            let scale = u.norm();
            if scale == 0.0 {
                return 0.0;
            }
            let un = u / scale;
            un.dot(&(&b * &un))
        })
        .collect();
    let p_max = powers.iter().cloned().fold(0.0, f64::max);
    let mut resolved = 0;
    for &p in &powers {
        if p > 1e-12 * p_max {
            resolved += 1;
        } else {
            break;
        }
    }

    let mut modes = ge.vectors;
    for col in 0..modes.ncols() {
        let mut column = modes.column_mut(col);
        let mut peak = 0.0_f64;
        let mut peak_signed = 0.0_f64;
        for v in column.iter() {
            if v.abs() > peak {
                peak = v.abs();
                peak_signed = *v;
            }
        }
        if peak > 0.0 {
            let scale = 1.0 / peak_signed;
            for v in column.iter_mut() {
                *v *= scale;
            }
        }
    }
    Ok(ModeSet {
        formulation,
        eigenvalues: ge.eigenvalues,
        modes,
        resolved: resolved.min(ge.resolved).min(n),
    })
}

/// Scale a vector so its largest-magnitude entry is exactly +1.
/// Returns (former peak magnitude, its index), or None for a zero vector.
pub fn normalize_max_amplitude(v: &mut [f64]) -> Option<(f64, usize)> {
    let mut peak = 0.0_f64;
    let mut idx = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > peak {
            peak = x.abs();
            idx = i;
        }
    }
    if peak == 0.0 {
        return None;
    }
    let scale = 1.0 / v[idx];
    for x in v.iter_mut() {
        *x *= scale;
    }
    Some((peak, idx))
}

/// Modal expansion of the driven current.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub coefficients: DVector<Complex64>,
    pub p_matrix: DMatrix<Complex64>,
    pub reconstruction: DVector<Complex64>,
}

/// Compute modal weighting coefficients for a radiation-weighted (or
/// isolated) mode set and reconstruct the total current.
///
/// The power matrix couples modes through the ground resistance: diagonal
/// (1 + jλ_n)·J_nᵀR_oJ_n + J_nᵀR_LJ_n, off-diagonal J_mᵀR_LJ_n. For a
/// lossless system it collapses to the diagonal closed form.
pub fn modal_weights(modes: &ModeSet, sys: &ImpedanceSystem) -> Result<ModalExpansion> {
    if !matches!(
        modes.formulation,
        Formulation::Isolated | Formulation::LossyRadiation
    ) {
        return Err(Error::UnsupportedFormulation);
    }
    let n = sys.n();
    if modes.n() != n {
        return Err(Error::MeshMismatch {
            left: modes.n(),
            right: n,
        });
    }

    let mut p = DMatrix::<Complex64>::zeros(n, n);
    for m in 0..n {
        let jm = modes.modes.column(m);
        let rjm_l = &sys.r_l * jm;
        for nn in 0..n {
            let jn = modes.modes.column(nn);
            let p_l = jn.dot(&rjm_l);
            p[(nn, m)] = Complex64::new(p_l, 0.0);
        }
        let rjm_o = &sys.r_o * jm;
        let p_ro = jm.dot(&rjm_o);
        p[(m, m)] += Complex64::new(1.0, modes.eigenvalues[m]) * p_ro;
    }

    let v_modal = DVector::<Complex64>::from_fn(n, |m, _| {
        let jm = modes.modes.column(m);
        (0..n).map(|k| jm[k] * sys.v[k]).sum()
    });

    let lu = p.clone().lu();
    let mut alpha = lu.solve(&v_modal).ok_or_else(|| Error::SingularPMatrix {
        cond: condition_estimate(&p),
    })?;

    // Refine the coefficients against the full system: the power matrix is
    // the modal congruence of Z, so driving the wire-space residual of the
    // reconstruction down removes the digits lost when modal powers span
    // many decades.
    let z = sys.z();
    let reconstruct = |coeffs: &DVector<Complex64>| -> DVector<Complex64> {
        let mut out = DVector::<Complex64>::zeros(n);
        for k in 0..n {
            let jk = modes.modes.column(k);
            for row in 0..n {
                out[row] += coeffs[k] * jk[row];
            }
        }
        out
    };
    let v_norm = sys.v.norm();
    if v_norm > 0.0 {
        for _ in 0..30 {
            let resid = &sys.v - &z * reconstruct(&alpha);
            if resid.norm() <= 1e-13 * v_norm {
                break;
            }
            let resid_modal = DVector::<Complex64>::from_fn(n, |m, _| {
                let jm = modes.modes.column(m);
                (0..n).map(|k| jm[k] * resid[k]).sum()
            });
            let Some(corr) = lu.solve(&resid_modal) else { break };
            alpha += corr;
        }
    }

    let reconstruction = reconstruct(&alpha);

    Ok(ModalExpansion {
        coefficients: alpha,
        p_matrix: p,
        reconstruction,
    })
}

/// Closed-form weighting coefficient of one mode of a lossless system.
pub fn isolated_weight(mode: &DVector<f64>, eigenvalue: f64, sys: &ImpedanceSystem) -> Complex64 {
    let v_n: Complex64 = (0..sys.n()).map(|k| mode[k] * sys.v[k]).sum();
    let p_ro = mode.dot(&(&sys.r_o * mode));
    v_n / (Complex64::new(1.0, eigenvalue) * p_ro)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn diagonal_pencil() {
        let a = dmatrix![2.0, 0.0; 0.0, -3.0];
        let b = DMatrix::identity(2, 2);
        let ge = gen_eig_sym(&a, &b).unwrap();
        // ordered by |λ|: 2 before -3
        assert!((ge.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!((ge.eigenvalues[1] + 3.0).abs() < 1e-12);
        assert_eq!(ge.route, ReductionRoute::Cholesky);
        let v0 = ge.vectors.column(0);
        assert!(v0[0].abs() > 0.999 && v0[1].abs() < 1e-12);
    }

    #[test]
    fn identical_spd_matrices_give_unit_eigenvalues() {
        let m = dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 2.0];
        let ge = gen_eig_sym(&m, &m).unwrap();
        for lam in &ge.eigenvalues {
            assert!((lam - 1.0).abs() < 1e-12);
        }
    }

    /// Brute-force oracle: interpolate det(A - λB) to a degree-n polynomial
    /// and root it with Durand-Kerner.
    fn char_poly_roots(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        let det = |lam: f64| -> f64 { (a - lam * b).lu().determinant() };
        // sample on the scale of the actual spectrum: |λ| <= ‖A‖_F / gersh(B)
        let gersh = (0..n)
            .map(|i| {
                b[(i, i)] - (0..n).filter(|&j| j != i).map(|j| b[(i, j)].abs()).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let radius = 1.5 * a.norm() / gersh.max(1e-12);
        let pts: Vec<f64> = (0..=n)
            .map(|k| radius * (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let mut divided: Vec<f64> = pts.iter().map(|&x| det(x)).collect();
        for j in 1..=n {
            for i in (j..=n).rev() {
                divided[i] = (divided[i] - divided[i - 1]) / (pts[i] - pts[i - j]);
            }
        }
        // Newton form -> monomial coefficients (ascending powers)
        let mut poly = vec![divided[n]];
        for i in (0..n).rev() {
            let mut next = vec![0.0; poly.len() + 1];
            for (k, &c) in poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * pts[i];
            }
            next[0] += divided[i];
            poly = next;
        }
        // monic, descending-ready for Durand-Kerner on complex plane
        let lead = *poly.last().unwrap();
        let coeffs: Vec<f64> = poly.iter().map(|c| c / lead).collect();
        let mut roots: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(0.4, 0.9).powu(k as u32 + 1) * 1.2 * radius)
            .collect();
        let eval = |z: Complex64| -> Complex64 {
            let mut p = Complex64::ZERO;
            for k in (0..=n).rev() {
                p = p * z + Complex64::new(coeffs[k], 0.0);
            }
            p
        };
        for _ in 0..400 {
            let mut step_max = 0.0_f64;
            for i in 0..n {
                let mut denom = Complex64::new(1.0, 0.0);
                for j in 0..n {
                    if i != j {
                        denom *= roots[i] - roots[j];
                    }
                }
                let step = eval(roots[i]) / denom;
                roots[i] -= step;
                step_max = step_max.max(step.norm());
            }
            if step_max < 1e-13 {
                break;
            }
        }
        let mut out: Vec<f64> = roots.iter().map(|r| r.re).collect();
        out.sort_by(|x, y| x.total_cmp(y));
        out
    }

    #[test]
    fn random_pencil_matches_characteristic_polynomial_roots() {
        // deterministic pseudo-random symmetric pair; B diagonally dominant
        let n = 6;
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let va = next();
                a[(i, j)] = va;
                a[(j, i)] = va;
                let vb = next() * 0.3;
                b[(i, j)] = vb;
                b[(j, i)] = vb;
            }
            b[(i, i)] = 2.0 + next().abs();
        }

        let ge = gen_eig_sym(&a, &b).unwrap();
        let mut got = ge.eigenvalues.clone();
        got.sort_by(|x, y| x.total_cmp(y));
        let expect = char_poly_roots(&a, &b);
        for (g, e) in got.iter().zip(expect.iter()) {
            assert!((g - e).abs() < 1e-8, "eigenvalue {g} vs oracle {e}");
        }

        for (i, &lam) in ge.eigenvalues.iter().enumerate() {
            let u = ge.vectors.column(i);
            let r = (&a * u - lam * (&b * u)).norm();
            let bound = 1e-9 * (a.norm() + lam.abs() * b.norm());
            assert!(r <= bound, "mode {i}: residual {r} > {bound}");
        }
    }

    #[test]
    fn rejects_indefinite_b() {
        let a = DMatrix::identity(2, 2);
        let b = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            gen_eig_sym(&a, &b),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn semidefinite_b_takes_eigen_route() {
        // spectrum {1, 0.5, -1e-16}: indefinite only at rounding level
        let (c1, s1) = (0.5_f64.to_radians().cos(), 30.0_f64.to_radians().sin());
        let q1 = dmatrix![c1, -s1, 0.0; s1, c1, 0.0; 0.0, 0.0, 1.0];
        let (c2, s2) = (40.0_f64.to_radians().cos(), 40.0_f64.to_radians().sin());
        let q2 = dmatrix![1.0, 0.0, 0.0; 0.0, c2, -s2; 0.0, s2, c2];
        let q = q1 * q2;
        let d = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.5, -1e-16]);
        let b = &q * d * q.transpose();
        let b = 0.5 * (&b + b.transpose());
        assert!(nalgebra::Cholesky::new(b.clone()).is_none(), "precondition");
        let a = DMatrix::identity(3, 3);
        let ge = gen_eig_sym(&a, &b).unwrap();
        assert_eq!(ge.route, ReductionRoute::SemidefiniteEigen);
        assert_eq!(ge.resolved, 2);
        assert_eq!(ge.eigenvalues.len(), 3);

        // clearly indefinite B is still refused
        let d_bad = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.5, -1e-3]);
        let b_bad = &q * d_bad * q.transpose();
        assert!(matches!(
            gen_eig_sym(&a, &b_bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn factorization_succeeds_up_to_n_101() {
        // the radiation operator is numerically semidefinite from roughly
        // mode nine on any mesh; the reduction must still deliver a factor
        // and accurate dominant modes at every size up to 101
        use crate::mom::{assemble, KernelChoice};
        use crate::wire::{segment_dipole, DipoleSpec};
        let lambda = crate::constants::wavelength(1e9);
        let mut previous: Option<Vec<f64>> = None;
        for n in [21usize, 61, 101] {
            let spec = DipoleSpec::half_wave(1e9, 0.25 * lambda, n);
            let mesh = segment_dipole(&spec).unwrap();
            let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
            let modes = solve_modes(&sys, Formulation::Isolated).unwrap();
            assert!(modes.resolved >= 6, "N = {n}: only {} resolved", modes.resolved);
            for i in 0..4 {
                let u = modes.mode(i);
                let u = &u / u.norm();
                let lam = modes.eigenvalues[i];
                let res = (&sys.x_o * &u - lam * (&sys.r_o * &u)).norm();
                assert!(res <= 1e-9 * (sys.x_o.norm() + lam.abs() * sys.r_o.norm()));
            }
            if let Some(prev) = &previous {
                for (i, p) in prev.iter().enumerate() {
                    let rel = (modes.eigenvalues[i] - p).abs() / p.abs();
                    assert!(rel < 0.12, "N = {n} mode {i}: eigenvalue moved {rel:.3}");
                }
            }
            previous = Some(modes.eigenvalues[..4].to_vec());
        }
    }

    #[test]
    fn five_mode_reconstruction_matches_direct_current_away_from_feed() {
        use crate::greens::{fit_complex_images, HalfSpace};
        use crate::mom::{assemble, solve_direct, KernelChoice};
        use crate::wire::{delta_gap_excitation, segment_dipole, DipoleSpec};
        let lambda = crate::constants::wavelength(1e9);
        let spec = DipoleSpec::half_wave(1e9, 0.25 * lambda, 41);
        let mesh = segment_dipole(&spec).unwrap();
        let images = fit_complex_images(
            spec.wavenumber(),
            HalfSpace::new(Complex64::new(16.0, -16.0)),
            5,
            2.0,
            100,
        )
        .unwrap();
        let mut sys = assemble(&mesh, KernelChoice::LossyGround(&images)).unwrap();
        sys.set_excitation(&delta_gap_excitation(&mesh, Complex64::new(1.0, 0.0)));
        let direct = solve_direct(&sys).unwrap();
        let modes = solve_modes(&sys, Formulation::LossyRadiation).unwrap();
        let expansion = modal_weights(&modes, &sys).unwrap();
        let n = sys.n();
        let mut recon = DVector::<Complex64>::zeros(n);
        for k in 0..5 {
            let jk = modes.mode(k);
            for r in 0..n {
                recon[r] += expansion.coefficients[k] * jk[r];
            }
        }
        // real part, feed segment ±2 excluded
        let feed = mesh.feed_index as i64;
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..n {
            if (r as i64 - feed).abs() <= 2 {
                continue;
            }
            num += (recon[r].re - direct[r].re).powi(2);
            den += direct[r].re.powi(2);
        }
        let rms = (num / den).sqrt();
        assert!(rms < 0.05, "5-mode real-current RMS error {rms:.3e}");
    }

    #[test]
    fn modal_weights_rejects_conventional_sets() {
        use crate::mom::{assemble, KernelChoice};
        use crate::wire::{segment_dipole, DipoleSpec};
        let spec = DipoleSpec::half_wave(1e9, 0.1, 5);
        let mesh = segment_dipole(&spec).unwrap();
        let sys = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let mut modes = solve_modes(&sys, Formulation::Isolated).unwrap();
        modes.formulation = Formulation::LossyConventional;
        assert!(matches!(
            modal_weights(&modes, &sys),
            Err(Error::UnsupportedFormulation)
        ));
    }

    #[test]
    fn max_amplitude_normalization() {
        let mut v = vec![0.3, -0.8, 0.5];
        normalize_max_amplitude(&mut v).unwrap();
        assert!((v[1] - 1.0).abs() < 1e-15); // peak forced positive
        assert!((v[0] + 0.375).abs() < 1e-15);
        assert!(normalize_max_amplitude(&mut [0.0, 0.0]).is_none());
    }
}
