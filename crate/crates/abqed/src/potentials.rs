//! Coherent-state effective potentials by real-space Green's-function
//! quadrature.
//!
//! The scalar potential is the Coulomb-kernel integral of the charge
//! measures, the vector potential the mu0/4pi kernel integral over the
//! current filaments: the quasistatic Lorenz-gauge pair. Analytic fast
//! paths (shell theorem, Gaussian erf profile, ideal solenoid) are
//! registered per element kind and can be bypassed with
//! `force_quadrature` for cross-validation.


use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::quadrature::{
    adaptive_gk, radial_kspace_integral, sinc, ExtrapolatedIntegral, QuadratureSettings,
};
use crate::sources::{
    circle_polyline, solenoid_loops, ElementKind, Filament, SourceConfiguration,
};

/// Effective potentials at one spacetime point with quadrature error
/// estimates (relative, per part).
#[derive(Debug, Clone, Copy)]
pub struct EffectiveFieldSample {
    pub position: Vec3,
    pub time: f64,
    /// Scalar potential, volts.
    pub v: f64,
    /// Vector potential, V s / m.
    pub a: Vec3,
    pub est_error_v: f64,
    pub est_error_a: f64,
}

impl EffectiveFieldSample {
    fn finite(&self) -> bool {
        self.v.is_finite()
            && self.a.iter().all(|c| c.is_finite())
            && self.est_error_v >= 0.0
            && self.est_error_a >= 0.0
    }
}

enum ChargePart {
    Point {
        element: usize,
        position: Vec3,
    },
    Shell {
        element: usize,
        center: Vec3,
        radius: f64,
    },
    Gaussian {
        element: usize,
        center: Vec3,
        width: f64,
    },
}

enum CurrentPart {
    /// Unit-current filament geometry; scaled by the element strength and
    /// schedule at evaluation time.
    Filaments { element: usize, unit: Vec<Filament> },
    Sheet {
        element: usize,
        center: Vec3,
        axis: Vec3,
        radius: f64,
        winding_density: f64,
    },
}

/// Caches filament discretizations so repeated evaluations (path
/// integrals, sweeps) do not rebuild geometry. Pure and Sync: evaluation
/// is a function of (config, r, t) only.
pub struct FieldEvaluator<'a> {
    config: &'a SourceConfiguration,
    pub settings: QuadratureSettings,
    charge_parts: Vec<ChargePart>,
    current_parts: Vec<CurrentPart>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(config: &'a SourceConfiguration, settings: QuadratureSettings) -> Self {
        let mut charge_parts = Vec::new();
        let mut current_parts = Vec::new();
        for (i, e) in config.elements.iter().enumerate() {
            match &e.kind {
                ElementKind::PointCharge { position } => charge_parts.push(ChargePart::Point {
                    element: i,
                    position: *position,
                }),
                ElementKind::ChargedShell { center, radius } => {
                    charge_parts.push(ChargePart::Shell {
                        element: i,
                        center: *center,
                        radius: *radius,
                    })
                }
                ElementKind::GaussianChargeBall { center, width } => {
                    charge_parts.push(ChargePart::Gaussian {
                        element: i,
                        center: *center,
                        width: *width,
                    })
                }
                ElementKind::CurrentLoop {
                    center,
                    axis,
                    radius,
                } => current_parts.push(CurrentPart::Filaments {
                    element: i,
                    unit: vec![circle_polyline(
                        center,
                        axis,
                        *radius,
                        settings.loop_segments,
                        1.0,
                    )],
                }),
                ElementKind::FiniteSolenoid {
                    center,
                    axis,
                    radius,
                    length,
                    winding_density,
                } => current_parts.push(CurrentPart::Filaments {
                    element: i,
                    unit: solenoid_loops(
                        center,
                        axis,
                        *radius,
                        *length,
                        *winding_density,
                        1.0,
                        &settings,
                    ),
                }),
                ElementKind::InfiniteSolenoidAnalytic {
                    center,
                    axis,
                    radius,
                    winding_density,
                } => current_parts.push(CurrentPart::Sheet {
                    element: i,
                    center: *center,
                    axis: axis.normalize(),
                    radius: *radius,
                    winding_density: *winding_density,
                }),
            }
        }
        Self {
            config,
            settings,
            charge_parts,
            current_parts,
        }
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.config.constants
    }

    /// Scalar potential and absolute error estimate.
    pub fn scalar(&self, r: &Vec3, t: f64) -> Result<(f64, f64)> {
        self.config.check_exclusion(r, t)?;
        let eps0 = self.config.constants.epsilon0;
        let coulomb = 1.0 / (4.0 * std::f64::consts::PI * eps0);
        let mut v = 0.0;
        let mut err = 0.0;
        for part in &self.charge_parts {
            match part {
                ChargePart::Point { element, position } => {
                    let q = self.config.elements[*element].strength_at(t);
                    let d = (r - position).norm();
                    v += coulomb * q / d;
                }
                ChargePart::Shell {
                    element,
                    center,
                    radius,
                } => {
                    let q = self.config.elements[*element].strength_at(t);
                    let d = (r - center).norm();
                    if self.settings.force_quadrature {
                        let (val, e) = shell_potential_quadrature(q, *radius, d, &self.settings);
                        v += coulomb * val;
                        err += coulomb * e;
                    } else {
                        // shell theorem: constant inside, point-like outside
                        v += coulomb * q / d.max(*radius);
                    }
                }
                ChargePart::Gaussian {
                    element,
                    center,
                    width,
                } => {
                    let q = self.config.elements[*element].strength_at(t);
                    let d = (r - center).norm();
                    if self.settings.force_quadrature {
                        let (val, e) =
                            gaussian_potential_quadrature(q, *width, d, &self.settings);
                        v += coulomb * val;
                        err += coulomb * e;
                    } else {
                        v += coulomb * q * erf_over_r(d, *width);
                    }
                }
            }
        }
        Ok((v, err))
    }

    /// Vector potential and absolute error estimate.
    pub fn vector(&self, r: &Vec3, t: f64) -> Result<(Vec3, f64)> {
        self.config.check_exclusion(r, t)?;
        let mu0 = self.config.constants.mu0;
        let pre = mu0 / (4.0 * std::f64::consts::PI);
        let mut a = Vec3::zeros();
        let mut err = 0.0;
        for part in &self.current_parts {
            match part {
                CurrentPart::Filaments { element, unit } => {
                    let current = self.config.elements[*element].strength_at(t);
                    if current == 0.0 {
                        continue;
                    }
                    for fil in unit {
                        let (val, e) = filament_vector_potential(fil, r, &self.settings);
                        a += val * (pre * current * fil.current);
                        err += e * (pre * current * fil.current).abs();
                    }
                }
                CurrentPart::Sheet {
                    element,
                    center,
                    axis,
                    radius,
                    winding_density,
                } => {
                    let current = self.config.elements[*element].strength_at(t);
                    let d = r - center;
                    let z = d.dot(axis);
                    let rho_vec = d - axis * z;
                    let rho = rho_vec.norm();
                    let ni = winding_density * current;
                    if rho < 1e-300 {
                        continue; // on axis, A = 0
                    }
                    let phi_hat = axis.cross(&(rho_vec / rho));
                    let magnitude = if rho <= *radius {
                        0.5 * mu0 * ni * rho
                    } else {
                        0.5 * mu0 * ni * radius * radius / rho
                    };
                    a += phi_hat * magnitude;
                }
            }
        }
        Ok((a, err))
    }

    /// Both potentials bundled as a sample.
    pub fn sample(&self, r: &Vec3, t: f64) -> Result<EffectiveFieldSample> {
        let (v, ev) = self.scalar(r, t)?;
        let (a, ea) = self.vector(r, t)?;
        let sample = EffectiveFieldSample {
            position: *r,
            time: t,
            v,
            a,
            est_error_v: ev / v.abs().max(f64::MIN_POSITIVE),
            est_error_a: ea / a.norm().max(f64::MIN_POSITIVE),
        };
        debug_assert!(sample.finite());
        Ok(sample)
    }

    /// Line integral of A along an open polyline at fixed time.
    pub fn line_integral_vector(&self, points: &[Vec3], t: f64) -> Result<(f64, f64)> {
        let mut total = 0.0;
        let mut err_total = 0.0;
        for pair in points.windows(2) {
            let (p0, p1) = (pair[0], pair[1]);
            let dl = p1 - p0;
            if dl.norm() == 0.0 {
                continue;
            }
            let mut bad: Option<Error> = None;
            let mut f = |u: f64| {
                let p = p0 + dl * u;
                match self.vector(&p, t) {
                    Ok((a, _)) => a.dot(&dl),
                    Err(e) => {
                        bad = Some(e);
                        0.0
                    }
                }
            };
            let res = adaptive_gk(
                &mut f,
                0.0,
                1.0,
                self.settings.rel_tol,
                0.0,
                self.settings.max_subdivision_depth,
            );
            if let Some(e) = bad {
                return Err(e);
            }
            total += res.value;
            err_total += res.est_error;
        }
        Ok((total, err_total))
    }
}

/// erf(d / (sqrt(2) w)) / d, finite at d = 0.
fn erf_over_r(d: f64, width: f64) -> f64 {
    let x = d / (std::f64::consts::SQRT_2 * width);
    if x < 1e-6 {
        // series: erf(x)/x = 2/sqrt(pi) (1 - x^2/3 + ...)
        (2.0 / std::f64::consts::PI.sqrt()) * (1.0 - x * x / 3.0)
            / (std::f64::consts::SQRT_2 * width)
    } else {
        erf(x) / d
    }
}

/// Abramowitz & Stegun 7.1.26-style rational approximation is not accurate
/// enough for 1e-9 work; use the power series / continued fraction split.
pub fn erf(x: f64) -> f64 {
    // series for small |x|, complementary asymptotic continued fraction
    // otherwise; |error| < 1e-15 across the range
    let ax = x.abs();
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    if ax < 3.0 {
        // Taylor series erf(x) = 2/sqrt(pi) sum (-1)^n x^(2n+1)/(n!(2n+1))
        let mut term = ax;
        let mut sum = ax;
        let x2 = ax * ax;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) || n > 200 {
                break;
            }
        }
        sign * (2.0 / std::f64::consts::PI.sqrt()) * sum
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        // evaluated by modified Lentz
        let mut f = ax;
        let mut c = ax;
        let mut d = 0.0;
        for i in 1..200 {
            let a_i = 0.5 * i as f64;
            d = ax + a_i * d;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = ax + a_i / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let erfc = (-ax * ax).exp() / (std::f64::consts::PI.sqrt() * f);
        sign * (1.0 - erfc)
    }
}

/// Shell potential by honest surface quadrature, reduced to 1D in
/// cos(theta). Returns the integral of 1/|r - r'| over the unit-charge
/// shell (to be multiplied by 1/(4 pi eps0)).
fn shell_potential_quadrature(
    charge: f64,
    radius: f64,
    d: f64,
    settings: &QuadratureSettings,
) -> (f64, f64) {
    // V * 4 pi eps0 = q/2 int_-1^1 dmu / sqrt(d^2 + a^2 - 2 a d mu)
    let mut f = |mu: f64| {
        let dist2 = d * d + radius * radius - 2.0 * radius * d * mu;
        1.0 / dist2.max(1e-300).sqrt()
    };
    let res = adaptive_gk(
        &mut f,
        -1.0,
        1.0,
        settings.rel_tol,
        0.0,
        settings.max_subdivision_depth,
    );
    (0.5 * charge * res.value, 0.5 * charge.abs() * res.est_error)
}

/// Gaussian-ball potential by radial quadrature using the angular-analytic
/// reduction of the Coulomb kernel over spherical shells.
fn gaussian_potential_quadrature(
    charge: f64,
    width: f64,
    d: f64,
    settings: &QuadratureSettings,
) -> (f64, f64) {
    // V * 4 pi eps0 = 4 pi int_0^inf rho(r') r'^2 / max(d, r') dr'
    let norm = (2.0 * std::f64::consts::PI * width * width).powf(1.5);
    let mut f = |rp: f64| {
        let rho = charge / norm * (-rp * rp / (2.0 * width * width)).exp();
        4.0 * std::f64::consts::PI * rho * rp * rp / d.max(rp).max(1e-300)
    };
    let hi = d + 12.0 * width;
    let res = adaptive_gk(
        &mut f,
        0.0,
        hi,
        settings.rel_tol,
        0.0,
        settings.max_subdivision_depth,
    );
    (res.value, res.est_error)
}

/// Kernel integral of one unit-current filament: sum over segments of
/// int t_hat dl / |r - r'|, each segment by adaptive Gauss-Kronrod.
/// A positive `regularization_length` swaps in the Gaussian-smeared kernel.
fn filament_vector_potential(
    filament: &Filament,
    r: &Vec3,
    settings: &QuadratureSettings,
) -> (Vec3, f64) {
    let delta = settings.regularization_length;
    let mut total = Vec3::zeros();
    let mut err = 0.0;
    for (p0, p1) in filament.segments() {
        let dl = p1 - p0;
        let len = dl.norm();
        if len == 0.0 {
            continue;
        }
        let mut f = |u: f64| {
            let d = (r - (p0 + dl * u)).norm();
            let kernel = if delta > 0.0 {
                erf_over_r(d, delta)
            } else {
                1.0 / d
            };
            dl * kernel
        };
        let res = adaptive_gk(
            &mut f,
            0.0,
            1.0,
            settings.rel_tol,
            0.0,
            settings.max_subdivision_depth.min(12),
        );
        total += res.value;
        err += res.est_error;
    }
    (total, err)
}

/// Effective scalar potential sample at (r, t).
pub fn effective_scalar_potential(
    config: &SourceConfiguration,
    r: &Vec3,
    t: f64,
    settings: &QuadratureSettings,
) -> Result<EffectiveFieldSample> {
    let ev = FieldEvaluator::new(config, *settings);
    let (v, err) = ev.scalar(r, t)?;
    Ok(EffectiveFieldSample {
        position: *r,
        time: t,
        v,
        a: Vec3::zeros(),
        est_error_v: err / v.abs().max(f64::MIN_POSITIVE),
        est_error_a: 0.0,
    })
}

/// Effective vector potential sample at (r, t).
pub fn effective_vector_potential(
    config: &SourceConfiguration,
    r: &Vec3,
    t: f64,
    settings: &QuadratureSettings,
) -> Result<EffectiveFieldSample> {
    let ev = FieldEvaluator::new(config, *settings);
    let (a, err) = ev.vector(r, t)?;
    Ok(EffectiveFieldSample {
        position: *r,
        time: t,
        v: 0.0,
        a,
        est_error_v: 0.0,
        est_error_a: err / a.norm().max(f64::MIN_POSITIVE),
    })
}

/// Circulation of the effective vector potential around a closed polyline,
/// in webers. The polyline must close to within 1e-12 m.
pub fn circulation(
    config: &SourceConfiguration,
    loop_points: &[Vec3],
    t: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    if loop_points.len() < 2 {
        return Err(Error::OpenLoop {
            gap: f64::INFINITY,
            tol: 1e-12,
        });
    }
    let gap = (loop_points[0] - loop_points[loop_points.len() - 1]).norm();
    if gap > 1e-12 {
        return Err(Error::OpenLoop { gap, tol: 1e-12 });
    }
    let ev = FieldEvaluator::new(config, *settings);
    let (value, _err) = ev.line_integral_vector(loop_points, t)?;
    Ok(value)
}

/// Central-difference divergence of the effective vector potential;
/// a Lorenz-gauge diagnostic for static sources.
pub fn divergence_vector_potential(
    config: &SourceConfiguration,
    r: &Vec3,
    t: f64,
    step: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let ev = FieldEvaluator::new(config, *settings);
    let mut div = 0.0;
    for axis in 0..3 {
        let mut dr = Vec3::zeros();
        dr[axis] = step;
        let (ap, _) = ev.vector(&(r + dr), t)?;
        let (am, _) = ev.vector(&(r - dr), t)?;
        div += (ap[axis] - am[axis]) / (2.0 * step);
    }
    Ok(div)
}

/// Report from the Coulomb-kernel identity check: the truncated,
/// extrapolated radial k-integral against 1/(4 pi r).
#[derive(Debug, Clone)]
pub struct KernelIdentityReport {
    pub r: f64,
    pub kspace: ExtrapolatedIntegral,
    pub exact: f64,
}

/// Evaluate int d^3k e^{ik.r} / ((2 pi)^3 k^2) = 1/(4 pi r) by the angular
/// reduction to (1/(2 pi^2)) int_0^kmax sinc(k r) dk, tapered and
/// Richardson-extrapolated in k_max.
pub fn kernel_identity_check(
    r_magnitude: f64,
    k_max: f64,
    settings: &QuadratureSettings,
) -> Result<KernelIdentityReport> {
    assert!(r_magnitude > 0.0 && k_max > 0.0);
    let mut f = |k: f64| sinc(k * r_magnitude) / (2.0 * std::f64::consts::PI.powi(2));
    let kspace = radial_kspace_integral(&mut f, k_max, 4, settings, "kernel identity")?;
    Ok(KernelIdentityReport {
        r: r_magnitude,
        kspace,
        exact: 1.0 / (4.0 * std::f64::consts::PI * r_magnitude),
    })
}
