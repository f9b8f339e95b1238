//! Adaptive quadrature primitives shared by the field and mode-space layers.
//!
//! The workhorse is a 7-15 Gauss-Kronrod rule with bisection refinement,
//! generic over scalar and vector integrands. Radial k-integrals get a
//! smooth high-k taper so truncated oscillatory tails decay with a clean
//! order, which Richardson extrapolation can then remove.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controls for adaptive quadrature and filament discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Maximum bisection depth per segment or interval.
    pub max_subdivision_depth: u32,
    /// Relative tolerance target for adaptive integrals.
    pub rel_tol: f64,
    /// Stacked loops used to discretize a finite solenoid.
    pub solenoid_loops: usize,
    /// Straight segments per discretized circular loop.
    pub loop_segments: usize,
    /// Gaussian smearing length for filament kernels, meters.
    /// Zero keeps the bare 1/|r-r'| kernel; the ground-energy constant of
    /// a filament needs this positive.
    pub regularization_length: f64,
    /// Skip analytic fast paths and force real quadrature (cross-checks).
    pub force_quadrature: bool,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            max_subdivision_depth: 24,
            rel_tol: 1e-9,
            solenoid_loops: 200,
            loop_segments: 256,
            regularization_length: 0.0,
            force_quadrature: false,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "rel_tol must be in (0,1), got {}",
                self.rel_tol
            )));
        }
        if self.max_subdivision_depth < 1 {
            return Err(Error::InvalidInput("max_subdivision_depth must be >= 1".into()));
        }
        if self.solenoid_loops < 1 || self.loop_segments < 3 {
            return Err(Error::InvalidInput(
                "solenoid_loops >= 1 and loop_segments >= 3 required".into(),
            ));
        }
        if self.regularization_length < 0.0 {
            return Err(Error::InvalidInput(
                "regularization_length must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Output alphabet for the generic Gauss-Kronrod driver.
pub trait Integrand: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        nalgebra::base::Matrix::norm(&self)
    }
}

impl Integrand for num_complex::Complex<f64> {
    fn zero() -> Self {
        num_complex::Complex::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        num_complex::Complex::norm(self)
    }
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights. QUADPACK qk15 values.
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
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7-15 pass over [a, b].
/// Returns (kronrod value, error estimate).
pub fn gk15<T: Integrand>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let fc = f(center);
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);

    for i in 0..7 {
        let x = XGK[i] * half;
        let flo = f(center - x);
        let fhi = f(center + x);
        let pair = flo.add(fhi);
        kronrod = kronrod.add(pair.scale(WGK[i]));
        if i % 2 == 1 {
            // odd Kronrod indices are the embedded Gauss nodes
            gauss = gauss.add(pair.scale(WG[i / 2]));
        }
    }
    let kronrod = kronrod.scale(half);
    let gauss = gauss.scale(half);

    let diff = kronrod.add(gauss.scale(-1.0)).norm();
    // QUADPACK-style sharpened estimate.
    let err = if diff == 0.0 {
        0.0
    } else {
        let scaled = (200.0 * diff).powf(1.5);
        diff.min(scaled)
    };
    (kronrod, err)
}

/// Result of an adaptive integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub est_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive Gauss-Kronrod over [a, b] by worst-interval bisection.
///
/// Stops when the summed error estimate drops below
/// max(abs_tol, rel_tol * |integral|).
pub fn adaptive_gk<T: Integrand>(
    f: &mut impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: u32,
) -> QuadResult<T> {
    struct Interval<T> {
        a: f64,
        b: f64,
        value: T,
        err: f64,
        depth: u32,
    }

    let (v0, e0) = gk15(f, a, b);
    let mut evals = 15;
    let mut intervals = vec![Interval {
        a,
        b,
        value: v0,
        err: e0,
        depth: 0,
    }];

    loop {
        let total: T = intervals
            .iter()
            .fold(T::zero(), |acc, iv| acc.add(iv.value));
        let total_err: f64 = intervals.iter().map(|iv| iv.err).sum();
        let tol = abs_tol.max(rel_tol * total.norm());
        if total_err <= tol {
            return QuadResult {
                value: total,
                est_error: total_err,
                evaluations: evals,
                converged: true,
            };
        }

        // split the worst interval that can still be split
        let worst = intervals
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.depth < max_depth)
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            return QuadResult {
                value: total,
                est_error: total_err,
                evaluations: evals,
                converged: false,
            };
        };

        let iv = intervals.swap_remove(idx);
        let mid = 0.5 * (iv.a + iv.b);
        let (vl, el) = gk15(f, iv.a, mid);
        let (vr, er) = gk15(f, mid, iv.b);
        evals += 30;
        intervals.push(Interval {
            a: iv.a,
            b: mid,
            value: vl,
            err: el,
            depth: iv.depth + 1,
        });
        intervals.push(Interval {
            a: mid,
            b: iv.b,
            value: vr,
            err: er,
            depth: iv.depth + 1,
        });
    }
}

/// Convenience wrapper that errors on non-convergence.
pub fn integrate<T: Integrand>(
    f: &mut impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
    what: &'static str,
) -> Result<QuadResult<T>> {
    let r = adaptive_gk(
        f,
        a,
        b,
        settings.rel_tol,
        0.0,
        settings.max_subdivision_depth,
    );
    if r.converged {
        Ok(r)
    } else {
        Err(Error::QuadratureNotConverged {
            what,
            est_error: r.est_error,
            tol: settings.rel_tol,
        })
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // 1 - x^2/6 + x^4/120; at |x| = 1e-4 the truncation is ~1e-26
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Smooth truncation window: 1 on [0, k_max/2], cos^2 roll-off to 0 at k_max.
///
/// The C1 roll-off turns the oscillatory truncation tail of kernel-type
/// integrals into a power-law decay in k_max that extrapolates cleanly.
pub fn taper_window(k: f64, k_max: f64) -> f64 {
    if k <= 0.5 * k_max {
        1.0
    } else if k >= k_max {
        0.0
    } else {
        let u = (k - 0.5 * k_max) / (0.5 * k_max);
        let c = (0.5 * std::f64::consts::PI * u).cos();
        c * c
    }
}

/// A truncated radial k-integral evaluated at doubled cutoffs, with a
/// Richardson-extrapolated limit.
#[derive(Debug, Clone)]
pub struct ExtrapolatedIntegral {
    /// k_max of each level, smallest first (doubling).
    pub k_levels: Vec<f64>,
    /// Integral value at each level.
    pub values: Vec<f64>,
    /// Extrapolated k_max -> infinity limit.
    pub limit: f64,
    /// Error estimate on the limit.
    pub est_error: f64,
    /// Observed convergence order, if it could be measured.
    pub observed_order: Option<f64>,
}

/// Richardson-extrapolate a doubling sequence v(K), v(2K), ... assuming
/// v(K) = L + c K^-p. Falls back to the last value when the sequence has
/// already hit the floor.
pub fn richardson_extrapolate(values: &[f64]) -> (f64, f64, Option<f64>) {
    let n = values.len();
    assert!(n >= 1);
    if n == 1 {
        return (values[0], f64::NAN, None);
    }
    let last = values[n - 1];
    let d1 = values[n - 1] - values[n - 2];
    if n == 2 {
        return (last + d1, d1.abs(), None);
    }
    let d0 = values[n - 2] - values[n - 3];
    let floor = 1e-14 * last.abs().max(1e-300);
    if d1.abs() <= floor {
        return (last, d1.abs().max(floor), None);
    }
    let ratio = d0 / d1;
    if ratio.is_nan() || ratio <= 1.0 {
        // not settling into a power law; report the raw spread
        return (last, d1.abs(), None);
    }
    let p = ratio.log2().clamp(0.25, 12.0);
    let factor = 2f64.powf(p) - 1.0;
    let correction = d1 / factor;
    (last + correction, correction.abs(), Some(p))
}

/// Integrate `f(k)` over [0, k_max_final] with the taper window at a
/// doubling ladder of cutoffs, then extrapolate. `levels >= 1`.
pub fn radial_kspace_integral(
    f: &mut impl FnMut(f64) -> f64,
    k_max_final: f64,
    levels: usize,
    settings: &QuadratureSettings,
    what: &'static str,
) -> Result<ExtrapolatedIntegral> {
    assert!(levels >= 1);
    let mut k_levels = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels);
    for lev in 0..levels {
        let k_max = k_max_final / 2f64.powi((levels - 1 - lev) as i32);
        // Integrate in octave panels so the oscillatory integrand never
        // spans too many periods per adaptive call.
        let mut total = 0.0;
        let mut err = 0.0;
        let mut lo = 0.0;
        let mut hi = (k_max / 64.0).min(k_max);
        loop {
            let mut g = |k: f64| f(k) * taper_window(k, k_max);
            let r = adaptive_gk(
                &mut g,
                lo,
                hi,
                settings.rel_tol,
                0.0,
                settings.max_subdivision_depth,
            );
            if !r.converged {
                return Err(Error::QuadratureNotConverged {
                    what,
                    est_error: r.est_error,
                    tol: settings.rel_tol,
                });
            }
            total += r.value;
            err += r.est_error;
            if hi >= k_max {
                break;
            }
            lo = hi;
            hi = (hi * 2.0).min(k_max);
        }
        let _ = err;
        k_levels.push(k_max);
        values.push(total);
    }
    let (limit, est_error, observed_order) = richardson_extrapolate(&values);
    Ok(ExtrapolatedIntegral {
        k_levels,
        values,
        limit,
        est_error,
        observed_order,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n, p0 = P_{n-1}
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product cubature on the unit sphere: Gauss-Legendre in cos(theta) times
/// a uniform trapezoid in phi. Exact for spherical harmonics up to degree
/// min(2 n_polar - 1, n_azimuthal - 1), and antipodally symmetric for even
/// n_azimuthal.
#[derive(Debug, Clone)]
pub struct SphereRule {
    /// Unit direction of each node.
    pub directions: Vec<Vector3<f64>>,
    /// Cubature weight of each node; weights sum to 4 pi.
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(n_polar: usize, n_azimuthal: usize) -> Self {
        let (ct_nodes, ct_weights) = gauss_legendre(n_polar);
        let dphi = 2.0 * std::f64::consts::PI / n_azimuthal as f64;
        let mut directions = Vec::with_capacity(n_polar * n_azimuthal);
        let mut weights = Vec::with_capacity(n_polar * n_azimuthal);
        for (ct, wt) in ct_nodes.iter().zip(&ct_weights) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_azimuthal {
                let phi = dphi * j as f64;
                directions.push(Vector3::new(st * phi.cos(), st * phi.sin(), *ct));
                weights.push(wt * dphi);
            }
        }
        Self {
            directions,
            weights,
        }
    }

    /// Pick an order adequate for integrands with phase variation up to
    /// `bandwidth` radians across the sphere.
    pub fn for_bandwidth(bandwidth: f64) -> Self {
        let n = ((bandwidth.ceil() as usize) / 2 + 8).clamp(8, 96);
        Self::product(n, 2 * n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gk15_exact_for_low_degree_polynomials() {
        // Kronrod 15 integrates degree <= 22 exactly.
        let mut f = |x: f64| 3.0 * x * x + 2.0 * x + 1.0;
        let (v, e) = gk15(&mut f, -1.0, 2.0);
        let exact = (8.0 + 4.0 + 2.0) - (-1.0 + 1.0 - 1.0);
        assert_relative_eq!(v, exact, max_relative = 1e-14);
        assert!(e < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // integral of 1/(x^2 + a^2) over [-1, 1] = 2 atan(1/a)/a
        let a: f64 = 1e-3;
        let mut f = |x: f64| 1.0 / (x * x + a * a);
        let r = adaptive_gk(&mut f, -1.0, 1.0, 1e-12, 0.0, 40);
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0 * (1.0 / a).atan() / a, max_relative = 1e-10);
    }

    #[test]
    fn adaptive_vector_integrand() {
        let mut f = |x: f64| Vector3::new(x.sin(), x.cos(), 1.0);
        let r = adaptive_gk(&mut f, 0.0, PI, 1e-12, 0.0, 20);
        assert!(r.converged);
        assert_relative_eq!(r.value.x, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.value.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.value.z, PI, max_relative = 1e-12);
    }

    #[test]
    fn sinc_series_matches_ratio() {
        for &x in &[1e-5f64, 5e-5, 9.9e-5, 1.01e-4, 0.5] {
            let exact = if x == 0.0 { 1.0 } else { x.sin() / x };
            assert_relative_eq!(sinc(x), exact, max_relative = 1e-14);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is exact for n = 5
        let value: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (xi.powi(8) + xi.powi(3)))
            .sum();
        assert_relative_eq!(value, 2.0 / 9.0, max_relative = 1e-13);
    }

    #[test]
    fn sphere_rule_integrates_harmonics() {
        let rule = SphereRule::product(12, 24);
        let total: f64 = rule.weights.iter().sum();
        assert_relative_eq!(total, 4.0 * PI, max_relative = 1e-12);
        // integral of z^2 over the sphere = 4 pi / 3
        let z2: f64 = rule
            .directions
            .iter()
            .zip(&rule.weights)
            .map(|(d, w)| w * d.z * d.z)
            .sum();
        assert_relative_eq!(z2, 4.0 * PI / 3.0, max_relative = 1e-12);
        // plane-wave average over directions: sinc(|k| |r|)
        let k = 3.7;
        let r = Vector3::new(0.3, -0.2, 0.9);
        let avg: f64 = rule
            .directions
            .iter()
            .zip(&rule.weights)
            .map(|(d, w)| w * (k * d.dot(&r)).cos())
            .sum::<f64>()
            / (4.0 * PI);
        assert_relative_eq!(avg, sinc(k * r.norm()), max_relative = 1e-10);
    }

    #[test]
    fn richardson_recovers_power_law_limit() {
        // v(K) = 1 + 3 K^-2 sampled at K = 1, 2, 4, 8
        let values: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|k: &f64| 1.0 + 3.0 / (k * k))
            .collect();
        let (limit, err, order) = richardson_extrapolate(&values);
        assert_relative_eq!(limit, 1.0, epsilon = 1e-12);
        assert!(err < 0.05);
        assert_relative_eq!(order.unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn tapered_kernel_integral_converges_to_coulomb_form() {
        // (1/(2 pi^2)) int_0^inf sinc(k d) dk = 1/(4 pi d)
        let d = 1.0;
        let settings = QuadratureSettings::default();
        let mut f = |k: f64| sinc(k * d) / (2.0 * PI * PI);
        let res = radial_kspace_integral(&mut f, 800.0, 4, &settings, "kernel test").unwrap();
        let exact = 1.0 / (4.0 * PI * d);
        assert_relative_eq!(res.limit, exact, max_relative = 1e-5);
        // tapered truncation residual shrinks monotonically level to level
        let errs: Vec<f64> = res.values.iter().map(|v| (v - exact).abs()).collect();
        for pair in errs.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }
}
