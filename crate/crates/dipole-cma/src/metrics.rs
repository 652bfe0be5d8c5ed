//! Error metrics between reference and perturbed mode sets, and the
//! ground-efficiency figure comparing radiated powers with and without the
//! lossy half-space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modal::{ModalExpansion, ModeSet};
use crate::mom::ImpedanceSystem;

/// Relative eigenvalue error in percent: 100·|(λ_cand - λ_ref)/λ_ref|.
pub fn eigenvalue_error(lambda_cand: f64, lambda_ref: f64) -> Result<f64> {
    if lambda_ref == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * ((lambda_cand - lambda_ref) / lambda_ref).abs())
}

/// Angle between two mode vectors in degrees, sign-invariant:
/// arccos(|J_candᵀ J_ref| / (‖J_cand‖·‖J_ref‖)).
pub fn mode_angle_error(j_cand: &DVector<f64>, j_ref: &DVector<f64>) -> Result<f64> {
    let nc = j_cand.norm();
    let nr = j_ref.norm();
    if nc == 0.0 || nr == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cosine = (j_cand.dot(j_ref).abs() / (nc * nr)).clamp(0.0, 1.0);
    Ok(cosine.acos().to_degrees())
}

/// Largest principal angle (degrees) between the column spans of two
/// equally sized blocks; reduces to `mode_angle_error` for single columns.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let m = qa.transpose() * qb;
    let svd = m.svd(false, false);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0);
    Ok(smin.acos().to_degrees())
}

fn orthonormal_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = a.clone().qr();
    let q = qr.q();
    if (0..a.ncols()).any(|j| q.column(j).norm() < 0.5) {
        return Err(Error::ZeroVector);
    }
    Ok(q)
}

/// Per-mode comparison of a candidate mode set against a reference.
#[derive(Debug, Clone)]
pub struct ModeErrorReport {
    pub reference: String,
    pub candidate: String,
    /// Percent, per mode.
    pub eigenvalue_errors: Vec<f64>,
    /// Degrees, per mode, sign-aligned; degenerate clusters are compared
    /// subspace against subspace.
    pub angle_errors: Vec<f64>,
}

impl ModeErrorReport {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = String::from("mode,eigenvalue_error_pct,mode_angle_deg\n");
        for (i, (dl, da)) in self
            .eigenvalue_errors
            .iter()
            .zip(self.angle_errors.iter())
            .enumerate()
        {
            out.push_str(&format!("{},{:.8e},{:.8e}\n", i + 1, dl, da));
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Compare the first `k` modes of `candidate` against `reference`.
///
/// Eigenvalues within 1e-9·max|λ| of each other are treated as one
/// degenerate cluster: any orthonormal basis of the eigenspace is accepted
/// and each member mode reports the cluster's largest principal angle.
pub fn compare_mode_sets(reference: &ModeSet, candidate: &ModeSet, k: usize) -> Result<ModeErrorReport> {
    let k = k.min(reference.eigenvalues.len()).min(candidate.eigenvalues.len());
    let mut eig_err = Vec::with_capacity(k);
    for i in 0..k {
        eig_err.push(eigenvalue_error(
            candidate.eigenvalues[i],
            reference.eigenvalues[i],
        )?);
    }

    let lam_scale = reference.eigenvalues[..k]
        .iter()
        .fold(0.0_f64, |a, &l| a.max(l.abs()));
    let degeneracy_tol = 1e-9 * lam_scale;

    let mut angle_err = vec![0.0; k];
    let mut i = 0;
    while i < k {
        // degenerate cluster [i, j)
        let mut j = i + 1;
        while j < k
            && (reference.eigenvalues[j] - reference.eigenvalues[j - 1]).abs() < degeneracy_tol
        {
            j += 1;
        }
        if j - i == 1 {
            angle_err[i] =
                mode_angle_error(&candidate.mode(i), &reference.mode(i))?;
        } else {
            let n = reference.n();
            let mut ra = DMatrix::zeros(n, j - i);
            let mut ca = DMatrix::zeros(n, j - i);
            for (col, m) in (i..j).enumerate() {
                ra.set_column(col, &reference.mode(m));
                ca.set_column(col, &candidate.mode(m));
            }
            let angle = subspace_angle(&ca, &ra)?;
            for slot in angle_err.iter_mut().take(j).skip(i) {
                *slot = angle;
            }
        }
        i = j;
    }

    Ok(ModeErrorReport {
        reference: reference.formulation.to_string(),
        candidate: candidate.formulation.to_string(),
        eigenvalue_errors: eig_err,
        angle_errors: angle_err,
    })
}

/// Radiated-power bookkeeping of a driven current with and without the
/// lossy ground.
#[derive(Debug, Clone)]
pub struct EfficiencyReport {
    /// Ground efficiency: the ratio of accepted powers
    /// Re(J_LGᴴ Z_LG J_LG) / Re(J_oᴴ Z_o J_o) under identical excitation.
    pub eta: f64,
    /// Radiated power of the isolated current, J_oᴴ R_o J_o (W).
    pub p_r_iso: f64,
    /// Radiated power of the lossy-ground current, J_LGᴴ R_o J_LG (W).
    pub p_r_lg: f64,
    /// Input (accepted) power of the isolated current, Re(J_oᴴ Z_o J_o).
    pub p_in_iso: f64,
    /// Input power of the lossy-ground current, Re(J_LGᴴ Z_LG J_LG).
    pub p_in_lg: f64,
    /// Radiation resistances referred to the feed current.
    pub r_rad_o: f64,
    pub r_rad_lg: f64,
}

/// Ground efficiency of a pair of solved currents under identical
/// excitation.
pub fn ground_efficiency(
    iso: &ImpedanceSystem,
    j_iso: &DVector<Complex64>,
    lossy: &ImpedanceSystem,
    j_lossy: &DVector<Complex64>,
) -> Result<EfficiencyReport> {
    let p_r_iso = hermitian_form(&iso.r_o, j_iso);
    let p_r_lg = hermitian_form(&lossy.r_o, j_lossy);
    let p_in_iso = hermitian_form(&iso.r_total(), j_iso);
    let p_in_lg = hermitian_form(&lossy.r_total(), j_lossy);
    if p_r_iso == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let i_iso = j_iso[iso.mesh.feed_index].norm_sqr();
    let i_lg = j_lossy[lossy.mesh.feed_index].norm_sqr();
    Ok(EfficiencyReport {
        eta: p_in_lg / p_in_iso,
        p_r_iso,
        p_r_lg,
        p_in_iso,
        p_in_lg,
        r_rad_o: if i_iso > 0.0 { p_r_iso / i_iso } else { f64::NAN },
        r_rad_lg: if i_lg > 0.0 { p_r_lg / i_lg } else { f64::NAN },
    })
}

/// Re(Jᴴ M J) for real symmetric M and complex J.
pub fn hermitian_form(m: &DMatrix<f64>, j: &DVector<Complex64>) -> f64 {
    let mut acc = 0.0;
    for r in 0..m.nrows() {
        let mut row = Complex64::ZERO;
        for c in 0..m.ncols() {
            row += m[(r, c)] * j[c];
        }
        acc += (j[r].conj() * row).re;
    }
    acc
}

/// Modal radiated power Σ |α_n|²·J_nᵀ R_o J_n, the expansion-side
/// counterpart of the quadratic form.
pub fn modal_radiated_power(
    expansion: &ModalExpansion,
    modes: &ModeSet,
    sys: &ImpedanceSystem,
) -> f64 {
    let mut acc = 0.0;
    for n in 0..modes.n() {
        let jn = modes.mode(n);
        let p_ro = jn.dot(&(&sys.r_o * &jn));
        acc += expansion.coefficients[n].norm_sqr() * p_ro;
    }
    acc
}
