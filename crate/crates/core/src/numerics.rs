//! Small numerical kernels: compensated sums, log-space fits, adaptive
//! Gauss-Kronrod quadrature and Ridders extrapolated derivatives.

use crate::error::{Error, Result};

/// Neumaier variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Values at or below this are treated as numerical noise in log fits.
pub const FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points used in the fit.
    pub used: usize,
    /// Points dropped for sitting at the floor (or being non-finite).
    pub floored: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::FitFailed("x and y lengths differ".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit { usable: n, floored: 0 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::FitFailed("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(LinearFit { slope, intercept, r_squared, used: n, floored: 0 })
}

/// Fits `log y` against `x` (already transformed), skipping floored `y`.
pub fn fit_log_y(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut floored = 0;
    for (a, b) in x.iter().zip(y) {
        if b.is_finite() && *b > FLOOR {
            xs.push(*a);
            ys.push(b.ln());
        } else {
            floored += 1;
        }
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit { usable: xs.len(), floored });
    }
    let mut fit = ols(&xs, &ys)?;
    fit.floored = floored;
    Ok(fit)
}

/// Fits `log y = slope log x + c`, skipping floored `y`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    fit_log_y(&lx, y)
}

// Kronrod 15-point abscissae and weights on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss 7-point weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_QUAD_TOL: f64 = 1e-11;
const MAX_DEPTH: usize = 40;

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx)? + f(c + dx)?;
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Adaptive Gauss-Kronrod (7/15) quadrature with bisection.
///
/// Each accepted panel satisfies `|K15 - G7| <= tol * len / (b - a)`, so the
/// summed error estimate is at most `tol`. Panels are processed left to
/// right, which keeps the result bitwise reproducible.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(crate::error::invalid("quadrature needs finite limits and tol > 0"));
    }
    if a == b {
        return Ok(0.0);
    }
    let total = (b - a).abs();
    let mut acc = KahanSum::new();
    let mut stack = vec![(a, b, 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, lo, hi)?;
        if !val.is_finite() {
            return Err(Error::QuadratureFailure { a: lo, b: hi, tol });
        }
        let local = tol * (hi - lo).abs() / total;
        if err <= local || err <= 50.0 * f64::EPSILON * val.abs() {
            acc.add(val);
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureFailure { a: lo, b: hi, tol });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(acc.value())
}

/// Derivative by Ridders' polynomial extrapolation of central differences.
pub fn ridders_derivative<F>(mut f: F, x: f64, h0: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const NTAB: usize = 10;
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    let mut a = [[0.0_f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat(1e-16).take(10_000));
        v.push(-1.0);
        assert!((kahan_sum(v) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-14);
        assert!((fit.intercept + 1.0).abs() < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loglog_power_law_and_floor() {
        let x = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 1e-4];
        let y = [1e-4, 2.5e-5, 6.25e-6, 1.5625e-6, 0.0];
        let fit = fit_loglog(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert_eq!(fit.floored, 1);
        assert!(matches!(fit_loglog(&x, &[0.0; 5]), Err(Error::DegenerateFit { usable: 0, floored: 5 })));
    }

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let v = integrate(|x| Ok(x.powi(20) - 3.0 * x.powi(7)), -1.0, 2.0, 1e-13).unwrap();
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate(|x| Ok(1.0 / (1e-4 + x * x)), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0_f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8, "{v} {exact}");
    }

    #[test]
    fn quadrature_reports_failure() {
        let r = integrate(|x| Ok(1.0 / x.abs().sqrt().max(1e-300)), -1.0, 1.0, 1e-14);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(|x| Ok(x.sin()), 0.0, 2.0, 1e-12).unwrap();
        let b = integrate(|x| Ok(x.sin()), 2.0, 0.0, 1e-12).unwrap();
        assert!((a + b).abs() < 1e-15);
        assert!((a - (1.0 - 2f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn ridders_matches_cosine() {
        let d = ridders_derivative(|x| Ok(x.sin()), 0.7, 0.1).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
    }
}
