//! Adaptive Gauss–Kronrod (7, 15) quadrature.

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

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫ₐᵇ f` to absolute tolerance `tol` by recursive bisection.
///
/// Integrable kinks should be placed on interval boundaries by the caller
/// (see [`integrate_pieces`]) for full accuracy.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod(f, a, b);
        if err <= tol || depth == 0 || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(&mut f, a, b, tol, 40)
}

/// Integral over `[a, b]` split at the given interior breakpoints.
pub fn integrate_pieces(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let pieces = (pts.len() - 1) as f64;
    pts.windows(2).map(|w| integrate(&mut f, w[0], w[1], tol / pieces)).sum()
}

/// `∫_ℝ f` via `x = t / (1 − t²)`, split at the images of `breaks`.
pub fn integrate_real_line(mut f: impl FnMut(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let to_t = |x: f64| if x == 0.0 { 0.0 } else { (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x) };
    let tb: Vec<f64> = breaks.iter().map(|&x| to_t(x)).collect();
    integrate_pieces(
        |t| {
            let d = 1.0 - t * t;
            if d <= 0.0 {
                return 0.0;
            }
            let x = t / d;
            let v = f(x) * (1.0 + t * t) / (d * d);
            if v.is_finite() { v } else { 0.0 }
        },
        -1.0,
        1.0,
        &tb,
        tol,
    )
}

/// `∫ₐᵇ ∫_cᵈ f(x, y) dy dx`, with the inner integral split at `x` itself so
/// kernels with a kink on the diagonal are handled exactly.
pub fn integrate_square_diagonal(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, c: f64, d: f64, tol: f64) -> f64 {
    integrate(|x| integrate_pieces(|y| f(x, y), c, d, &[x], tol * 1e-2), a, b, tol)
}
