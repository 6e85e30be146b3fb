//! Independent numerical oracles for the `pmstfa` test suites.
//!
//! Everything here is deliberately naive: adaptive 15-point Gauss–Kronrod
//! bisection on finite intervals plus change-of-variable wrappers for the
//! half line and the real line. It shares no code with the library it checks.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive bisection: always split the panel with the largest
/// error estimate until the summed estimate meets `tol` or the panel budget
/// runs out.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_panels: usize) -> f64 {
    let (v, e) = kronrod15(f, a, b);
    let mut panels = vec![(a, b, v, e)];
    for _ in 0..max_panels {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (vl, el) = kronrod15(f, lo, mid);
        let (vr, er) = kronrod15(f, mid, hi);
        panels.push((lo, mid, vl, el));
        panels.push((mid, hi, vr, er));
    }
    panels.iter().map(|p| p.2).sum()
}

/// Integral of `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 4000)
}

/// Integral of `f` over `(0, ∞)`. Uses `y = t / (1 - t)` on `[0, 1)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - t;
        let y = t / one_minus;
        let v = f(y) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Split so that the bulk of mass near y ~ 1 gets its own panels.
    integrate(&g, 0.0, 0.5, 0.5 * tol) + integrate(&g, 0.5, 1.0, 0.5 * tol)
}

/// Integral of `f` over `(0, ∞)` via `y = e^t`, the log-scale variant. The
/// `t` range is truncated to `[lo, hi]`.
pub fn integrate_log_scale<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    integrate(
        |t: f64| {
            let y = t.exp();
            let v = f(y) * y;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        lo,
        hi,
        tol,
    )
}

/// Integral of `f` over the whole real line, split at `center`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, center: f64, tol: f64) -> f64 {
    let right = integrate_half_line(|y| f(center + y), 0.5 * tol);
    let left = integrate_half_line(|y| f(center - y), 0.5 * tol);
    left + right
}

/// Modified Bessel function of the third kind from its integral
/// representation `∫₀^∞ exp(-x cosh t) cosh(λ t) dt`.
pub fn bessel_k_integral(order: f64, x: f64) -> f64 {
    // Integrand decays like exp(-x e^t / 2); beyond t_max it is below 1e-300.
    let t_max = (2.0 * (700.0 + order.abs() * 10.0) / x).ln().max(1.0) + 2.0;
    integrate(
        |t: f64| (-x * t.cosh() + order * t).exp() * 0.5 + (-x * t.cosh() - order * t).exp() * 0.5,
        0.0,
        t_max,
        1e-14,
    )
}

/// Free covariance parameter counts as tabulated for the eight models,
/// keyed by the three-letter identifier. Returns `None` for unknown names.
pub fn tabulated_covariance_count(name: &str, p: usize, q: usize, g: usize) -> Option<usize> {
    let l = p * q - q * (q - 1) / 2;
    Some(match name {
        "CCC" => l + g * p + g + 1,
        "CCU" => l + 2 * g * p,
        "CUC" => l + g * p + 2 * g,
        "CUU" => l + g * p,
        "UCC" => g * l + g * p + g + 1,
        "UCU" => g * l + 2 * g * p,
        "UUC" => g * l + g * p + 2 * g,
        "UUU" => g * l + 2 * g * p + g,
        _ => return None,
    })
}
