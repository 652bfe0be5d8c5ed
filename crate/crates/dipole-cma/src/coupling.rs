//! Ground-coupling perturbation theory: predicts the modes of the dipole
//! above the lossy half-space as linear combinations of the isolated-dipole
//! modes, using only modal interaction powers.
//!
//! The K×K restriction of the projected pencil gives the general form; the
//! K = 2 case collapses to a quadratic in the coefficient ratio whose two
//! roots give the two perturbed modes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::{gen_eig_sym, Formulation, ModeSet};
use crate::mom::ImpedanceSystem;

/// Interaction powers between isolated modes through the lossy ground.
#[derive(Debug, Clone)]
pub struct CouplingSystem {
    /// Radiated modal powers J_oiᵀ R_o J_oi (all positive).
    pub p_ro: DVector<f64>,
    /// Reactive modal powers λ_oi · P_Ro,i.
    pub p_xo: DVector<f64>,
    /// Reactive interaction powers J_oiᵀ X_L J_on (symmetric).
    pub p_xl: DMatrix<f64>,
    /// The isolated modes the powers were built from.
    pub isolated: ModeSet,
}

/// Modes predicted from a subset of isolated modes.
#[derive(Debug, Clone)]
pub struct CoupledPrediction {
    /// 0-based indices of the isolated modes used.
    pub subset: Vec<usize>,
    /// Ascending in |λ|.
    pub eigenvalues: Vec<f64>,
    /// Combination coefficients, one column per predicted mode, normalised
    /// so the largest-magnitude coefficient is 1.
    pub coefficients: DMatrix<f64>,
    /// Predicted modes on the wire (one column each), max-amplitude ±1.
    pub modes: DMatrix<f64>,
}

impl CoupledPrediction {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = String::from("predicted_mode,eigenvalue");
        for &s in &self.subset {
            out.push_str(&format!(",k_from_isolated_{}", s + 1));
        }
        out.push('\n');
        for m in 0..self.eigenvalues.len() {
            out.push_str(&format!("{},{:.8e}", m + 1, self.eigenvalues[m]));
            for i in 0..self.subset.len() {
                out.push_str(&format!(",{:.8e}", self.coefficients[(i, m)]));
            }
            out.push('\n');
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Build the interaction powers of `isolated` modes against the lossy
/// system's ground reactance X_L = X_LG - X_o.
pub fn interaction_powers(
    isolated: &ModeSet,
    sys_lossy: &ImpedanceSystem,
) -> Result<CouplingSystem> {
    if isolated.formulation != Formulation::Isolated {
        return Err(Error::UnsupportedFormulation);
    }
    let n = sys_lossy.n();
    if isolated.n() != n {
        return Err(Error::MeshMismatch {
            left: isolated.n(),
            right: n,
        });
    }

    let mut p_ro = DVector::zeros(n);
    let mut p_xo = DVector::zeros(n);
    let mut p_xl = DMatrix::zeros(n, n);
    for i in 0..n {
        let ji = isolated.mode(i);
        p_ro[i] = ji.dot(&(&sys_lossy.r_o * &ji));
        p_xo[i] = isolated.eigenvalues[i] * p_ro[i];
        let xl_ji = &sys_lossy.x_l * &ji;
        for k in i..n {
            let v = isolated.mode(k).dot(&xl_ji);
            p_xl[(i, k)] = v;
            p_xl[(k, i)] = v;
        }
    }

    Ok(CouplingSystem {
        p_ro,
        p_xo,
        p_xl,
        isolated: isolated.clone(),
    })
}

/// Solve the K×K restriction of the projected pencil on `subset` and
/// reconstruct the predicted modes.
pub fn coupled_modes(cs: &CouplingSystem, subset: &[usize]) -> Result<CoupledPrediction> {
    let k = subset.len();
    assert!(k >= 1 && k <= cs.p_ro.len(), "subset out of range");
    let mut left = DMatrix::zeros(k, k);
    let mut right = DMatrix::zeros(k, k);
    for (i, &si) in subset.iter().enumerate() {
        for (j, &sj) in subset.iter().enumerate() {
            left[(i, j)] = cs.p_xl[(si, sj)];
        }
        left[(i, i)] += cs.p_xo[si];
        // P_Ro > 0 for every resolved mode; beyond the rounding floor of
        // R_o the sign is noise, which the semidefinite reduction absorbs.
        right[(i, i)] = cs.p_ro[si];
    }

    let ge = gen_eig_sym(&left, &right)?;
    finalize_prediction(cs, subset, ge.eigenvalues, ge.vectors)
}

/// Which printed form of the first-order quadratic's b coefficient to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstOrderB {
    /// b = [a(P_Xo,1 + P_XL,11) - c(P_Xo,2 + P_XL,22)] / P_XL,12, the form
    /// consistent with the 2×2 pencil restriction.
    #[default]
    Consistent,
    /// b with P_XL,12 in place of P_XL,11 in the first parenthesis; kept as
    /// a comparison switch.
    Printed,
}

/// Closed-form first-order (two-mode) prediction. Returns the two predicted
/// modes, ascending in |λ|.
pub fn first_order_pair(
    cs: &CouplingSystem,
    n1: usize,
    n2: usize,
    variant: FirstOrderB,
) -> Result<CoupledPrediction> {
    assert!(n1 != n2, "need two distinct mode indices");
    let (a, c) = (cs.p_ro[n2], cs.p_ro[n1]);
    let alpha1 = cs.p_xo[n1] + cs.p_xl[(n1, n1)];
    let alpha2 = cs.p_xo[n2] + cs.p_xl[(n2, n2)];
    let beta = cs.p_xl[(n1, n2)];
    let scale = alpha1.abs().max(alpha2.abs());
    if beta.abs() <= 1e-14 * scale {
        return Err(Error::DegenerateQuadratic { a: beta });
    }
    let b = match variant {
        FirstOrderB::Consistent => (a * alpha1 - c * alpha2) / beta,
        FirstOrderB::Printed => (a * (cs.p_xo[n1] + beta) - c * alpha2) / beta,
    };

    // Quadratic in k = k2/k1. The constant term enters with a minus sign:
    // the B-orthogonality of the two predicted vectors forces the root
    // product to be -c/a.
    let roots = solve_quadratic(a, b, -c)?;

    let mut eigenvalues = Vec::with_capacity(2);
    let mut vectors = DMatrix::zeros(2, 2);
    for (m, &kn) in roots.iter().enumerate() {
        let (k1, k2) = (1.0, kn);
        let num = k1 * k1 * alpha1 + 2.0 * k1 * k2 * beta + k2 * k2 * alpha2;
        let den = k1 * k1 * c + k2 * k2 * a;
        eigenvalues.push(num / den);
        vectors[(0, m)] = k1;
        vectors[(1, m)] = k2;
    }
    if eigenvalues[0].abs() > eigenvalues[1].abs() {
        eigenvalues.swap(0, 1);
        vectors.swap_columns(0, 1);
    }
    finalize_prediction(cs, &[n1, n2], eigenvalues, vectors)
}

/// Real roots of a·k² + b·k + c = 0.
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Result<[f64; 2]> {
    let scale = b.abs().max(c.abs());
    if a.abs() <= 1e-300 * scale.max(1.0) {
        return Err(Error::DegenerateQuadratic { a });
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::ComplexRoots { discriminant: disc });
    }
    // Citardauq form for the small root avoids cancellation.
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { -b / a - r1 };
    Ok([r1, r2])
}

fn finalize_prediction(
    cs: &CouplingSystem,
    subset: &[usize],
    eigenvalues: Vec<f64>,
    mut coeffs: DMatrix<f64>,
) -> Result<CoupledPrediction> {
    let k = subset.len();
    let n = cs.isolated.n();
    let mut modes = DMatrix::zeros(n, k);
    for m in 0..k {
        // reporting convention: largest-magnitude coefficient is 1
        let mut peak = 0.0_f64;
        let mut peak_signed = 1.0_f64;
        for i in 0..k {
            if coeffs[(i, m)].abs() > peak {
                peak = coeffs[(i, m)].abs();
                peak_signed = coeffs[(i, m)];
            }
        }
        if peak > 0.0 {
            for i in 0..k {
                coeffs[(i, m)] /= peak_signed;
            }
        }
        // predicted mode via the linear combination of isolated modes
        let mut vec = DVector::zeros(n);
        for (i, &si) in subset.iter().enumerate() {
            vec += coeffs[(i, m)] * cs.isolated.mode(si);
        }
        let mut slice: Vec<f64> = vec.iter().copied().collect();
        crate::modal::normalize_max_amplitude(&mut slice);
        modes.set_column(m, &DVector::from_vec(slice));
    }
    Ok(CoupledPrediction {
        subset: subset.to_vec(),
        eigenvalues,
        coefficients: coeffs,
        modes,
    })
}

/// Predicted modes as a ModeSet tagged with the radiation-weighted
/// formulation, for reuse of the comparison metrics.
pub fn prediction_as_mode_set(pred: &CoupledPrediction) -> ModeSet {
    ModeSet {
        formulation: Formulation::LossyRadiation,
        eigenvalues: pred.eigenvalues.clone(),
        modes: pred.modes.clone(),
        resolved: pred.eigenvalues.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::wavelength;
    use num_complex::Complex64;
    use crate::greens::{fit_complex_images, HalfSpace};
    use crate::modal::solve_modes;
    use crate::mom::{assemble, KernelChoice};
    use crate::wire::{segment_dipole, DipoleSpec};

    fn systems(height_lambda: f64, n: usize) -> (ImpedanceSystem, ImpedanceSystem) {
        let lambda = wavelength(1e9);
        let spec = DipoleSpec::half_wave(1e9, height_lambda * lambda, n);
        let mesh = segment_dipole(&spec).unwrap();
        let images = fit_complex_images(
            spec.wavenumber(),
            HalfSpace::new(Complex64::new(16.0, -16.0)),
            5,
            5.0,
            100,
        )
        .unwrap();
        let free = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let lossy = assemble(&mesh, KernelChoice::LossyGround(&images)).unwrap();
        (free, lossy)
    }

    #[test]
    fn no_ground_means_no_interaction() {
        let lambda = wavelength(1e9);
        let spec = DipoleSpec::half_wave(1e9, 0.25 * lambda, 15);
        let mesh = segment_dipole(&spec).unwrap();
        let free = assemble(&mesh, KernelChoice::FreeSpace).unwrap();
        let isolated = solve_modes(&free, Formulation::Isolated).unwrap();
        let cs = interaction_powers(&isolated, &free).unwrap();
        assert_eq!(cs.p_xl.iter().fold(0.0_f64, |a, &v| a.max(v.abs())), 0.0);
        for i in 0..isolated.resolved {
            assert!(cs.p_ro[i] > 0.0, "resolved mode {i}: P_Ro = {}", cs.p_ro[i]);
        }
    }

    #[test]
    fn interaction_powers_shrink_with_height() {
        let mut maxima = Vec::new();
        for h in [0.3, 1.0, 10.0] {
            let (free, lossy) = systems(h, 15);
            let isolated = solve_modes(&free, Formulation::Isolated).unwrap();
            let cs = interaction_powers(&isolated, &lossy).unwrap();
            assert_eq!(cs.p_xl, cs.p_xl.transpose(), "P_XL must be symmetric");
            let mut m = 0.0_f64;
            for i in 0..4 {
                for j in 0..4 {
                    m = m.max(cs.p_xl[(i, j)].abs());
                }
            }
            maxima.push(m);
        }
        assert!(
            maxima[0] > maxima[1] && maxima[1] > maxima[2],
            "interaction powers {maxima:?} not decreasing with height"
        );
    }

    #[test]
    fn quadratic_solver_examples() {
        let mut roots = solve_quadratic(1.0, 0.0, -4.0).unwrap();
        roots.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(roots, [-2.0, 2.0]);
        assert!(matches!(
            solve_quadratic(0.0, 1.0, 1.0),
            Err(Error::DegenerateQuadratic { .. })
        ));
        assert!(matches!(
            solve_quadratic(1.0, 0.0, 4.0),
            Err(Error::ComplexRoots { .. })
        ));
    }

    #[test]
    fn first_order_equals_two_by_two_pencil() {
        let (free, lossy) = systems(0.3, 21);
        let isolated = solve_modes(&free, Formulation::Isolated).unwrap();
        let cs = interaction_powers(&isolated, &lossy).unwrap();
        let closed = first_order_pair(&cs, 0, 1, FirstOrderB::Consistent).unwrap();
        let pencil = coupled_modes(&cs, &[0, 1]).unwrap();
        for m in 0..2 {
            let d = (closed.eigenvalues[m] - pencil.eigenvalues[m]).abs();
            assert!(
                d <= 1e-10 * pencil.eigenvalues[m].abs().max(1.0),
                "mode {m}: {d}"
            );
        }
    }

    #[test]
    fn printed_b_variant_differs_but_runs() {
        let (free, lossy) = systems(0.3, 15);
        let isolated = solve_modes(&free, Formulation::Isolated).unwrap();
        let cs = interaction_powers(&isolated, &lossy).unwrap();
        let consistent = first_order_pair(&cs, 0, 1, FirstOrderB::Consistent).unwrap();
        let printed = first_order_pair(&cs, 0, 1, FirstOrderB::Printed).unwrap();
        assert_eq!(consistent.eigenvalues.len(), printed.eigenvalues.len());
    }

    #[test]
    fn coupling_ratio_decays_with_height() {
        let mut ratios = Vec::new();
        for h in [0.3, 1.0, 10.0] {
            let (free, lossy) = systems(h, 15);
            let isolated = solve_modes(&free, Formulation::Isolated).unwrap();
            let cs = interaction_powers(&isolated, &lossy).unwrap();
            let pred = first_order_pair(&cs, 0, 1, FirstOrderB::Consistent).unwrap();
            // mode dominated by isolated mode 1: off-coefficient magnitude
            let k = &pred.coefficients;
            let r = (k[(1, 0)].abs() / k[(0, 0)].abs().max(1e-300))
                .min(k[(0, 0)].abs() / k[(1, 0)].abs().max(1e-300));
            ratios.push(r);
        }
        assert!(
            ratios[0] > ratios[1] && ratios[1] > ratios[2],
            "coupling ratios {ratios:?} not decreasing"
        );
    }
}
