//! Quadrature rules shared by the matrix assembly, field integrals and the
//! Sommerfeld reference integral: fixed Gauss-Legendre rules, an adaptive
//! Gauss-Kronrod scheme for complex-valued integrands, and helpers for the
//! oscillatory Bessel tail.

use num_complex::Complex64;

/// 8-point Gauss-Legendre abscissae on [-1, 1] (positive half; rule is symmetric).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_26,
];

/// Nodes and weights of the 8-point Gauss-Legendre rule mapped to [a, b].
pub fn gl8(a: f64, b: f64) -> [(f64, f64); 8] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for i in 0..4 {
        out[2 * i] = (mid - half * GL8_X[i], half * GL8_W[i]);
        out[2 * i + 1] = (mid + half * GL8_X[i], half * GL8_W[i]);
    }
    out
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1], computed by
/// Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 tables).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod 15(7) panel; returns (kronrod value, error estimate).
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(mid - dx) + f(mid + dx);
        kron += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kron *= half;
    gauss *= half;
    ((kron), (kron - gauss).norm())
}

/// Adaptive Gauss-Kronrod integration of a complex integrand over [a, b]
/// to absolute tolerance `tol`. Returns (value, error estimate).
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> (Complex64, f64) {
    // Worst-first interval refinement on a small stack.
    struct Panel {
        a: f64,
        b: f64,
        val: Complex64,
        err: f64,
    }
    let (val, err) = gk15(f, a, b);
    let mut panels = vec![Panel { a, b, val, err }];
    let max_panels = 2000;
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol || panels.len() >= max_panels {
            let total: Complex64 = panels.iter().map(|p| p.val).sum();
            return (total, total_err);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval exhausted at machine precision; keep as-is.
            let total: Complex64 = panels.iter().map(|q| q.val).sum();
            return (total + p.val, total_err);
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        panels.push(Panel { a: p.a, b: mid, val: v1, err: e1 });
        panels.push(Panel { a: mid, b: p.b, val: v2, err: e2 });
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Approximate s-th positive zero of J0 (s = 1, 2, ...), via McMahon's expansion.
/// Used only to delimit sign-change intervals of the oscillatory tail, so a few
/// digits suffice.
pub fn j0_zero(s: usize) -> f64 {
    let beta = (s as f64 - 0.25) * std::f64::consts::PI;
    let b8 = 8.0 * beta;
    beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120_928.0 / (15.0 * b8.powi(5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_integrates_polynomials_exactly() {
        // degree 15 is exact for the 8-point rule
        let pts = gl8(0.0, 1.0);
        let val: f64 = pts.iter().map(|&(x, w)| w * x.powi(15)).sum();
        assert!((val - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_matches_hardcoded_rule() {
        let (x, w) = gauss_legendre(8);
        // Nodes come out sorted ascending; compare against the tabulated rule.
        assert!((x[7] - 0.960_289_856_497_536_2).abs() < 1e-13);
        assert!((x[4] - 0.183_434_642_495_649_8).abs() < 1e-13);
        assert!((w[0] - 0.101_228_536_290_376_26).abs() < 1e-13);
        assert!((w[3] - 0.362_683_783_378_362).abs() < 1e-13);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_64_weight_sum() {
        let (x, w) = gauss_legendre(64);
        assert_eq!(x.len(), 64);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        // spot-check odd-polynomial exactness
        let v: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(21)).sum();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn adaptive_gk_oscillatory() {
        // ∫0^10 cos(x) dx = sin(10)
        let f = |x: f64| Complex64::new(x.cos(), 0.0);
        let (v, e) = adaptive_gk(&f, 0.0, 10.0, 1e-12);
        assert!((v.re - 10.0_f64.sin()).abs() < 1e-11, "err est {e}");
    }

    #[test]
    fn adaptive_gk_endpoint_sqrt_singularity() {
        // ∫0^1 1/sqrt(x) dx = 2
        let f = |x: f64| Complex64::new(1.0 / x.sqrt().max(1e-300), 0.0);
        let (v, _) = adaptive_gk(&f, 1e-14, 1.0, 1e-9);
        assert!((v.re - 2.0).abs() < 1e-5);
    }

    #[test]
    fn j0_zeros_bracket_sign_changes() {
        for s in 1..40 {
            let z = j0_zero(s);
            assert!(bessel_j0(z - 0.05) * bessel_j0(z + 0.05) < 0.0, "zero {s} at {z}");
        }
    }
}
