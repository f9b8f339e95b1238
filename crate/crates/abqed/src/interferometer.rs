//! Two-path interferometer scenarios and the dual phase calculators.
//!
//! A path is a C1 piecewise-cubic worldline through user samples; exact
//! dwell segments (consecutive identical positions) carry v = 0. Phases
//! accumulate as -(1/hbar) times the time integral of either the
//! effective Hamiltonian density (which rules the evolution and the
//! interference) or the ground-energy shift. On a closed two-path loop
//! with a gauge that has no explicit time dependence the two deltas
//! coincide and are gauge-invariant; per-path phases are not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{GaugeFunction, GaugedPotentials};
use crate::geometry::Vec3;
use crate::quadrature::{adaptive_gk, QuadratureSettings};
use crate::schedule::TimeSchedule;
use crate::sources::{ElementKind, SourceConfiguration, SourceElement};

/// Default convergence target for accumulated phases, radians.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

/// Endpoint coincidence tolerance for closed scenarios, meters.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// A time-parameterized wave-packet center line with charge and mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePath {
    knots: Vec<(f64, Vec3)>,
    tangents: Vec<Vec3>,
    pub charge: f64,
    pub mass: f64,
}

impl ParticlePath {
    /// Build from (t, r) samples with strictly increasing t. Tangents are
    /// centered differences; knots adjacent to a dwell segment get zero
    /// tangent so velocity stays continuous into the stop.
    pub fn from_samples(samples: Vec<(f64, Vec3)>, charge: f64, mass: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(
                "path needs at least two samples".into(),
            ));
        }
        if mass <= 0.0 {
            return Err(Error::InvalidInput("mass must be positive".into()));
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidInput(format!(
                    "path timestamps must strictly increase: {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        let n = samples.len();
        let dwell_segment: Vec<bool> = samples
            .windows(2)
            .map(|pair| pair[0].1 == pair[1].1)
            .collect();
        let mut tangents = Vec::with_capacity(n);
        for i in 0..n {
            let adjacent_dwell = (i > 0 && dwell_segment[i - 1]) || (i < n - 1 && dwell_segment[i]);
            if adjacent_dwell {
                tangents.push(Vec3::zeros());
                continue;
            }
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let dt = samples[hi].0 - samples[lo].0;
            tangents.push((samples[hi].1 - samples[lo].1) / dt);
        }
        Ok(Self {
            knots: samples,
            tangents,
            charge,
            mass,
        })
    }

    pub fn start(&self) -> (f64, Vec3) {
        self.knots[0]
    }

    pub fn end(&self) -> (f64, Vec3) {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[(f64, Vec3)] {
        &self.knots
    }

    /// Index of the segment containing t (clamped).
    fn segment_of(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self
            .knots
            .binary_search_by(|(tk, _)| tk.total_cmp(&t))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Hermite basis evaluation on segment i at parameter u in [0, 1].
    fn eval_segment(&self, i: usize, u: f64) -> (Vec3, Vec3) {
        let (t0, r0) = self.knots[i];
        let (t1, r1) = self.knots[i + 1];
        let dt = t1 - t0;
        let m0 = self.tangents[i] * dt;
        let m1 = self.tangents[i + 1] * dt;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let position = r0 * h00 + m0 * h10 + r1 * h01 + m1 * h11;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let velocity = (r0 * d00 + m0 * d10 + r1 * d01 + m1 * d11) / dt;
        (position, velocity)
    }

    /// Packet center at time t (clamped to the path's time span).
    pub fn position(&self, t: f64) -> Vec3 {
        let i = self.segment_of(t);
        let (t0, _) = self.knots[i];
        let (t1, _) = self.knots[i + 1];
        let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.eval_segment(i, u).0
    }

    /// Packet velocity at time t.
    pub fn velocity(&self, t: f64) -> Vec3 {
        let i = self.segment_of(t);
        let (t0, _) = self.knots[i];
        let (t1, _) = self.knots[i + 1];
        let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.eval_segment(i, u).1
    }

    /// Largest speed over a dense sampling of the worldline.
    pub fn max_speed(&self) -> f64 {
        let mut vmax: f64 = 0.0;
        for i in 0..self.knots.len() - 1 {
            for s in 0..=8 {
                let u = s as f64 / 8.0;
                vmax = vmax.max(self.eval_segment(i, u).1.norm());
            }
        }
        vmax
    }

    /// Enforce the nonrelativistic invariant |v| < c.
    pub fn validate_speed(&self, c_light: f64) -> Result<()> {
        let vmax = self.max_speed();
        if vmax >= c_light {
            return Err(Error::InvalidInput(format!(
                "path reaches speed {vmax:.3e} >= c = {c_light:.3e}"
            )));
        }
        Ok(())
    }

    /// Truncate the worldline at t_cut (must coincide with a knot time)
    /// for open-path studies.
    pub fn truncated_at(&self, t_cut: f64) -> Result<ParticlePath> {
        let idx = self
            .knots
            .iter()
            .position(|(t, _)| (*t - t_cut).abs() <= 1e-12 * t_cut.abs().max(1.0))
            .ok_or_else(|| {
                Error::InvalidInput(format!("t_cut = {t_cut} does not coincide with a knot"))
            })?;
        if idx < 1 {
            return Err(Error::InvalidInput("truncation leaves no segments".into()));
        }
        ParticlePath::from_samples(
            self.knots[..=idx].to_vec(),
            self.charge,
            self.mass,
        )
    }
}

/// Which integrand a phase came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calculator {
    /// -(1/hbar) int (q V' - (q/m) p.A') dt: rules the evolution.
    Hamiltonian,
    /// -(1/hbar) int (q V - (q/m) p.(A + grad F)) dt: the ground-energy
    /// route.
    Energy,
}

/// Accumulated phase along one path, with the scalar/vector breakdown.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathPhase {
    /// Total phase, radians.
    pub total: f64,
    /// -(q/hbar) integral of the scalar potential term.
    pub scalar_term: f64,
    /// +(q/hbar) integral of the v.A term.
    pub vector_term: f64,
    /// Absolute quadrature error estimate, radians.
    pub est_error: f64,
}

/// Phase pair for a scenario under one calculator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseResult {
    pub calculator: Calculator,
    pub phi_a: PathPhase,
    pub phi_b: PathPhase,
    /// phi_a.total - phi_b.total, exactly as stored.
    pub delta: f64,
}

/// Integrate (scalar_integrand, vector_integrand) over the worldline with
/// per-segment adaptive refinement against an absolute phase tolerance.
fn integrate_phase(
    path: &ParticlePath,
    phase_tol: f64,
    settings: &QuadratureSettings,
    mut terms: impl FnMut(f64, &Vec3, &Vec3) -> Result<(f64, f64)>,
) -> Result<PathPhase> {
    let (t_start, _) = path.start();
    let (t_end, _) = path.end();
    let total_span = t_end - t_start;
    let mut scalar_term = 0.0;
    let mut vector_term = 0.0;
    let mut est_error = 0.0;
    for i in 0..path.knots().len() - 1 {
        let (t0, _) = path.knots()[i];
        let (t1, _) = path.knots()[i + 1];
        let seg_tol = phase_tol * ((t1 - t0) / total_span).max(1e-3);
        let mut bad: Option<Error> = None;
        let mut f = |t: f64| {
            let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let (r, v) = path.eval_segment(i, u);
            match terms(t, &r, &v) {
                Ok((s, w)) => Vec3::new(s, w, 0.0),
                Err(e) => {
                    bad = Some(e);
                    Vec3::zeros()
                }
            }
        };
        let res = adaptive_gk(
            &mut f,
            t0,
            t1,
            settings.rel_tol,
            seg_tol,
            settings.max_subdivision_depth,
        );
        if let Some(e) = bad {
            return Err(e);
        }
        if !res.converged {
            return Err(Error::PhaseNotConverged {
                est_error: res.est_error,
                tol: seg_tol,
            });
        }
        scalar_term += res.value.x;
        vector_term += res.value.y;
        est_error += res.est_error;
    }
    Ok(PathPhase {
        total: scalar_term + vector_term,
        scalar_term,
        vector_term,
        est_error,
    })
}

/// Phase from the effective Hamiltonian:
/// -(q/hbar) int V' dt + (q/hbar) int A'.dx.
pub fn accumulate_phase_hamiltonian(
    path: &ParticlePath,
    gauged: &GaugedPotentials,
    phase_tol: f64,
) -> Result<PathPhase> {
    let hbar = gauged.base.constants().hbar;
    let q = path.charge;
    let settings = gauged.base.settings;
    integrate_phase(path, phase_tol, &settings, |t, r, v| {
        let v_pot = gauged.gauged_scalar(r, t)?;
        let a_pot = gauged.gauged_vector(r, t)?;
        Ok((-(q / hbar) * v_pot, (q / hbar) * v.dot(&a_pot)))
    })
}

/// Phase from the ground-energy shift:
/// -(q/hbar) int V dt + (q/hbar) int (A + grad F).dx.
pub fn accumulate_phase_energy(
    path: &ParticlePath,
    gauged: &GaugedPotentials,
    phase_tol: f64,
) -> Result<PathPhase> {
    let hbar = gauged.base.constants().hbar;
    let q = path.charge;
    let settings = gauged.base.settings;
    integrate_phase(path, phase_tol, &settings, |t, r, v| {
        let (v_pot, _) = gauged.base.scalar(r, t)?;
        let a_pot = gauged.gauged_vector(r, t)?;
        Ok((-(q / hbar) * v_pot, (q / hbar) * v.dot(&a_pot)))
    })
}

/// Independent quadrature of (q/hbar) int dF/dt dt along the worldline;
/// the analytic difference between the two calculators' phases.
pub fn gauge_rate_integral(
    path: &ParticlePath,
    gauge: &GaugeFunction,
    hbar: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let q = path.charge;
    let mut total = 0.0;
    for i in 0..path.knots().len() - 1 {
        let (t0, _) = path.knots()[i];
        let (t1, _) = path.knots()[i + 1];
        let mut f = |t: f64| {
            let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let (r, _) = path.eval_segment(i, u);
            gauge.time_derivative(&r, t)
        };
        let res = adaptive_gk(
            &mut f,
            t0,
            t1,
            settings.rel_tol,
            1e-14,
            settings.max_subdivision_depth,
        );
        total += res.value;
    }
    Ok((q / hbar) * total)
}

/// A two-path scenario: shared spacetime endpoints unless the open-path
/// mode is flagged for the gauge-dependence demonstrations.
#[derive(Debug, Clone)]
pub struct InterferometerScenario {
    pub path_a: ParticlePath,
    pub path_b: ParticlePath,
    pub sources: SourceConfiguration,
    pub gauge: GaugeFunction,
    pub settings: QuadratureSettings,
    pub phase_tol: f64,
    pub open_paths: bool,
    /// Human-readable label for reports.
    pub label: String,
}

impl InterferometerScenario {
    pub fn validate(&self) -> Result<()> {
        self.sources.validate()?;
        for path in [&self.path_a, &self.path_b] {
            path.validate_speed(self.sources.constants.c)?;
        }
        if !self.open_paths {
            let (ta0, ra0) = self.path_a.start();
            let (tb0, rb0) = self.path_b.start();
            let (ta1, ra1) = self.path_a.end();
            let (tb1, rb1) = self.path_b.end();
            let gap0 = (ra0 - rb0).norm();
            let gap1 = (ra1 - rb1).norm();
            let dt0 = (ta0 - tb0).abs();
            let dt1 = (ta1 - tb1).abs();
            if gap0 > ENDPOINT_TOL || gap1 > ENDPOINT_TOL {
                return Err(Error::BadScenarioParameters(format!(
                    "paths do not share endpoints: start gap {gap0:.3e}, end gap {gap1:.3e}"
                )));
            }
            if dt0 > 1e-12 * ta0.abs().max(1.0) || dt1 > 1e-12 * ta1.abs().max(1.0) {
                return Err(Error::BadScenarioParameters(
                    "paths do not share start/end times".into(),
                ));
            }
        }
        Ok(())
    }

    fn gauged(&self) -> GaugedPotentials<'_> {
        GaugedPotentials::new(&self.sources, self.settings, self.gauge.clone())
    }
}

/// Run both calculators on both paths. For closed scenarios, assert that
/// the two deltas agree within 2 x phase_tol.
pub fn phase_difference(scenario: &InterferometerScenario) -> Result<(PhaseResult, PhaseResult)> {
    scenario.validate()?;
    let gauged = scenario.gauged();
    let tol = scenario.phase_tol;
    let ham = PhaseResult {
        calculator: Calculator::Hamiltonian,
        phi_a: accumulate_phase_hamiltonian(&scenario.path_a, &gauged, tol)?,
        phi_b: accumulate_phase_hamiltonian(&scenario.path_b, &gauged, tol)?,
        delta: 0.0,
    };
    let ham = PhaseResult {
        delta: ham.phi_a.total - ham.phi_b.total,
        ..ham
    };
    let energy = PhaseResult {
        calculator: Calculator::Energy,
        phi_a: accumulate_phase_energy(&scenario.path_a, &gauged, tol)?,
        phi_b: accumulate_phase_energy(&scenario.path_b, &gauged, tol)?,
        delta: 0.0,
    };
    let energy = PhaseResult {
        delta: energy.phi_a.total - energy.phi_b.total,
        ..energy
    };
    if !scenario.open_paths {
        let mismatch = (ham.delta - energy.delta).abs();
        if mismatch > 2.0 * tol {
            let hint = if scenario.gauge.is_time_independent() {
                ""
            } else {
                "; the gauge has explicit time dependence, which splits the \
                 energy calculator from the Hamiltonian one by \
                 (q/hbar) [int_a - int_b] dF/dt dt"
            };
            return Err(Error::CalculatorMismatchOnClosedLoop {
                mismatch,
                tol: 2.0 * tol,
                hint,
            });
        }
    }
    Ok((ham, energy))
}

// ---------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------

/// Solenoid realization for the magnetic-type presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolenoidKind {
    /// Ideal infinite solenoid with closed-form potentials.
    Analytic,
    /// Stacked-loop finite solenoid of the given length.
    Finite { length: f64 },
}

/// Parameters for the magnetic AB preset: a rectangle around the solenoid
/// with path a through the lower edge and path b through the upper edge,
/// so that a minus reversed-b winds the axis once counterclockwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MagneticPreset {
    /// Target solenoid flux, webers.
    pub flux: f64,
    pub solenoid_radius: f64,
    pub solenoid: SolenoidKind,
    /// Rectangle half-width (x) and half-height (y).
    pub half_width: f64,
    pub half_height: f64,
    /// Nominal particle speed along the path.
    pub speed: f64,
    /// Extra full counterclockwise circuits inserted into path a.
    pub extra_loops: usize,
    /// Spline samples per rectangle edge.
    pub waypoints_per_edge: usize,
    pub charge: f64,
    pub mass: f64,
}

impl MagneticPreset {
    pub fn reduced_defaults() -> Self {
        Self {
            flux: 1.0,
            solenoid_radius: 0.05,
            solenoid: SolenoidKind::Analytic,
            half_width: 0.1,
            half_height: 0.1,
            speed: 0.01,
            extra_loops: 0,
            waypoints_per_edge: 8,
            charge: 1.0,
            mass: 1.0,
        }
    }
}

/// Winding density times current that realizes the flux for a solenoid of
/// the given radius.
fn amp_turns_for_flux(flux: f64, radius: f64, mu0: f64) -> f64 {
    flux / (mu0 * std::f64::consts::PI * radius * radius)
}

/// Uniform waypoints along a straight run, excluding the start point.
fn sample_edge(from: Vec3, to: Vec3, count: usize, out: &mut Vec<Vec3>) {
    for s in 1..=count {
        let u = s as f64 / count as f64;
        out.push(from + (to - from) * u);
    }
}

/// Knots at constant speed through a point sequence.
fn timed_knots(points: &[Vec3], speed: f64, t0: f64) -> Vec<(f64, Vec3)> {
    let mut knots = Vec::with_capacity(points.len());
    let mut t = t0;
    knots.push((t, points[0]));
    for pair in points.windows(2) {
        t += (pair[1] - pair[0]).norm() / speed;
        knots.push((t, pair[1]));
    }
    knots
}

/// Build the magnetic AB scenario.
pub fn build_magnetic_preset(
    params: &MagneticPreset,
    constants: crate::constants::PhysicalConstants,
    settings: QuadratureSettings,
) -> Result<InterferometerScenario> {
    let MagneticPreset {
        flux,
        solenoid_radius: a,
        half_width: w,
        half_height: h,
        speed,
        ..
    } = *params;
    if a <= 0.0 || w <= a || h <= a || speed <= 0.0 {
        return Err(Error::BadScenarioParameters(format!(
            "need 0 < radius < half_width, half_height and speed > 0; \
             got a = {a}, w = {w}, h = {h}, speed = {speed}"
        )));
    }
    let ni = amp_turns_for_flux(flux, a, constants.mu0);
    let kind = match params.solenoid {
        SolenoidKind::Analytic => ElementKind::InfiniteSolenoidAnalytic {
            center: Vec3::zeros(),
            axis: Vec3::new(0.0, 0.0, 1.0),
            radius: a,
            winding_density: 1.0,
        },
        SolenoidKind::Finite { length } => {
            if length <= 0.0 {
                return Err(Error::BadScenarioParameters(
                    "finite solenoid needs a positive length".into(),
                ));
            }
            ElementKind::FiniteSolenoid {
                center: Vec3::zeros(),
                axis: Vec3::new(0.0, 0.0, 1.0),
                radius: a,
                length,
                winding_density: 1.0,
            }
        }
    };
    let sources = SourceConfiguration::with_elements(
        constants,
        vec![SourceElement::new(kind, ni)],
    );

    let start = Vec3::new(-w, 0.0, 0.0);
    let end = Vec3::new(w, 0.0, 0.0);
    let n = params.waypoints_per_edge.max(2);

    // path a: lower route, with optional extra counterclockwise circuits
    let mut pts_a = vec![start];
    for _ in 0..params.extra_loops {
        sample_edge(start, Vec3::new(-w, -h, 0.0), n / 2 + 1, &mut pts_a);
        sample_edge(Vec3::new(-w, -h, 0.0), Vec3::new(w, -h, 0.0), n, &mut pts_a);
        sample_edge(Vec3::new(w, -h, 0.0), Vec3::new(w, h, 0.0), n, &mut pts_a);
        sample_edge(Vec3::new(w, h, 0.0), Vec3::new(-w, h, 0.0), n, &mut pts_a);
        sample_edge(Vec3::new(-w, h, 0.0), start, n / 2 + 1, &mut pts_a);
    }
    sample_edge(start, Vec3::new(-w, -h, 0.0), n / 2 + 1, &mut pts_a);
    sample_edge(Vec3::new(-w, -h, 0.0), Vec3::new(w, -h, 0.0), n, &mut pts_a);
    sample_edge(Vec3::new(w, -h, 0.0), end, n / 2 + 1, &mut pts_a);

    // path b: upper route
    let mut pts_b = vec![start];
    sample_edge(start, Vec3::new(-w, h, 0.0), n / 2 + 1, &mut pts_b);
    sample_edge(Vec3::new(-w, h, 0.0), Vec3::new(w, h, 0.0), n, &mut pts_b);
    sample_edge(Vec3::new(w, h, 0.0), end, n / 2 + 1, &mut pts_b);

    // equal traversal time: pace path b to finish with path a
    let len_a: f64 = pts_a.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
    let len_b: f64 = pts_b.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
    let knots_a = timed_knots(&pts_a, speed, 0.0);
    let knots_b = timed_knots(&pts_b, speed * len_b / len_a, 0.0);

    let path_a = ParticlePath::from_samples(knots_a, params.charge, params.mass)?;
    let path_b = ParticlePath::from_samples(knots_b, params.charge, params.mass)?;
    Ok(InterferometerScenario {
        path_a,
        path_b,
        sources,
        gauge: GaugeFunction::IDENTITY,
        settings,
        phase_tol: DEFAULT_PHASE_TOL,
        open_paths: false,
        label: "magnetic".into(),
    })
}

/// Parameters for the electric AB preset: each Faraday cage is a spherical
/// capacitor (concentric shells with opposite charges), so the exterior
/// potential vanishes identically and the interior sits at the requested
/// value while the pulse is on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectricPreset {
    /// Cage interior potentials during the pulse, volts.
    pub v_a: f64,
    pub v_b: f64,
    /// Midpoint of the up-ramp.
    pub pulse_start: f64,
    /// Midpoint-to-midpoint pulse duration T; the phase difference is
    /// -q (V_a - V_b) T / hbar exactly.
    pub pulse_duration: f64,
    /// Smoothstep ramp duration.
    pub edge_time: f64,
    pub cage_inner_radius: f64,
    pub cage_outer_radius: f64,
    /// Distance from the interferometer midline to each cage center.
    pub cage_offset: f64,
    /// Half-distance from source to screen along x.
    pub half_width: f64,
    /// Travel time from the splitter to the cage (and cage to screen).
    pub approach_time: f64,
    /// Dwell margin on each side of the pulse (dwell covers the pulse).
    pub dwell_margin: f64,
    pub charge: f64,
    pub mass: f64,
}

impl ElectricPreset {
    pub fn reduced_defaults() -> Self {
        // pulse edges slower than 100 light-crossings of the apparatus,
        // so the quasistatic assumption holds without a warning
        Self {
            v_a: 0.3,
            v_b: 0.1,
            pulse_start: 50.0,
            pulse_duration: 60.0,
            edge_time: 24.0,
            cage_inner_radius: 0.02,
            cage_outer_radius: 0.04,
            cage_offset: 0.1,
            half_width: 0.1,
            approach_time: 20.0,
            dwell_margin: 4.0,
            charge: 1.0,
            mass: 1.0,
        }
    }
}

/// Two elements that realize a unit-amplitude smoothstep pulse when their
/// schedules are summed: an up-ramp to 1 and a later down-ramp to -1.
fn pulse_schedules(start_mid: f64, duration: f64, edge: f64) -> (TimeSchedule, TimeSchedule) {
    let up = TimeSchedule::SmoothstepRamp {
        t_start: start_mid - 0.5 * edge,
        t_end: start_mid + 0.5 * edge,
        amplitude_initial: 0.0,
        amplitude_final: 1.0,
    };
    let down = TimeSchedule::SmoothstepRamp {
        t_start: start_mid + duration - 0.5 * edge,
        t_end: start_mid + duration + 0.5 * edge,
        amplitude_initial: 0.0,
        amplitude_final: -1.0,
    };
    (up, down)
}

/// Spherical-capacitor cage elements holding interior potential `volts`
/// while the pulse is on.
fn cage_elements(
    center: Vec3,
    inner: f64,
    outer: f64,
    volts: f64,
    pulse: (TimeSchedule, TimeSchedule),
    epsilon0: f64,
) -> Vec<SourceElement> {
    let charge = volts * 4.0 * std::f64::consts::PI * epsilon0 / (1.0 / inner - 1.0 / outer);
    let mut elements = Vec::new();
    for schedule in [pulse.0, pulse.1] {
        elements.push(
            SourceElement::new(
                ElementKind::ChargedShell {
                    center,
                    radius: inner,
                },
                charge,
            )
            .with_schedule(schedule),
        );
        elements.push(
            SourceElement::new(
                ElementKind::ChargedShell {
                    center,
                    radius: outer,
                },
                -charge,
            )
            .with_schedule(schedule),
        );
    }
    elements
}

/// Build the electric AB scenario.
pub fn build_electric_preset(
    params: &ElectricPreset,
    constants: crate::constants::PhysicalConstants,
    settings: QuadratureSettings,
) -> Result<InterferometerScenario> {
    let p = params;
    if p.cage_inner_radius <= 0.0 || p.cage_outer_radius <= p.cage_inner_radius {
        return Err(Error::BadScenarioParameters(
            "cage needs 0 < inner radius < outer radius".into(),
        ));
    }
    if p.edge_time <= 0.0 || p.pulse_duration <= p.edge_time {
        return Err(Error::BadScenarioParameters(
            "pulse needs 0 < edge_time < pulse_duration".into(),
        ));
    }
    let dwell_start = p.pulse_start - 0.5 * p.edge_time - p.dwell_margin;
    let dwell_end = p.pulse_start + p.pulse_duration + 0.5 * p.edge_time + p.dwell_margin;
    if dwell_start <= p.approach_time {
        return Err(Error::BadScenarioParameters(format!(
            "pulse (with margin) must start after the approach: dwell would \
             begin at {dwell_start} but the approach ends at {}",
            p.approach_time
        )));
    }

    let c_a = Vec3::new(0.0, -p.cage_offset, 0.0);
    let c_b = Vec3::new(0.0, p.cage_offset, 0.0);
    let pulse = pulse_schedules(p.pulse_start, p.pulse_duration, p.edge_time);
    let mut elements = cage_elements(
        c_a,
        p.cage_inner_radius,
        p.cage_outer_radius,
        p.v_a,
        pulse,
        constants.epsilon0,
    );
    elements.extend(cage_elements(
        c_b,
        p.cage_inner_radius,
        p.cage_outer_radius,
        p.v_b,
        pulse_schedules(p.pulse_start, p.pulse_duration, p.edge_time),
        constants.epsilon0,
    ));
    let sources = SourceConfiguration::with_elements(constants, elements);

    let start = Vec3::new(-p.half_width, 0.0, 0.0);
    let end = Vec3::new(p.half_width, 0.0, 0.0);
    let make_path = |cage: Vec3| -> Result<ParticlePath> {
        let mut knots = vec![(0.0, start)];
        // approach with a few intermediate samples; the dwell rule zeroes
        // the arrival tangent
        for s in 1..=4 {
            let u = s as f64 / 4.0;
            knots.push((p.approach_time * u, start + (cage - start) * u));
        }
        knots.push((dwell_start, cage));
        knots.push((dwell_end, cage));
        for s in 1..=4 {
            let u = s as f64 / 4.0;
            knots.push((dwell_end + p.approach_time * u, cage + (end - cage) * u));
        }
        ParticlePath::from_samples(knots, p.charge, p.mass)
    };
    Ok(InterferometerScenario {
        path_a: make_path(c_a)?,
        path_b: make_path(c_b)?,
        sources,
        gauge: GaugeFunction::IDENTITY,
        settings,
        phase_tol: DEFAULT_PHASE_TOL,
        open_paths: false,
        label: "electric".into(),
    })
}

/// Parameters for the electrodynamic AB preset: the magnetic rectangle
/// with a dwell stop at the middle of each horizontal edge, and the
/// solenoid flux ramped down while (or after) the particle dwells.
/// Cages are geometric by default; the induced-charge contribution can be
/// modeled explicitly with `cage_shell_charge`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectrodynamicPreset {
    pub flux: f64,
    pub solenoid_radius: f64,
    pub solenoid: SolenoidKind,
    pub half_width: f64,
    pub half_height: f64,
    pub speed: f64,
    /// Smoothstep ramp window taking the flux to zero.
    pub ramp_start: f64,
    pub ramp_end: f64,
    /// Dwell window at the cage positions; the ramp must sit strictly
    /// inside it (unless it lies entirely after the traversal).
    pub dwell_start: f64,
    pub dwell_end: f64,
    /// Optional explicit induced-charge shell at each cage (radius,
    /// charge), scheduled like the solenoid ramp.
    pub cage_shell: Option<(f64, f64)>,
    pub waypoints_per_edge: usize,
    pub charge: f64,
    pub mass: f64,
}

impl ElectrodynamicPreset {
    pub fn reduced_defaults() -> Self {
        Self {
            flux: 1.0,
            solenoid_radius: 0.05,
            solenoid: SolenoidKind::Analytic,
            half_width: 0.1,
            half_height: 0.1,
            speed: 0.01,
            ramp_start: 40.0,
            ramp_end: 70.0,
            dwell_start: 35.0,
            dwell_end: 74.0,
            cage_shell: None,
            waypoints_per_edge: 8,
            charge: 1.0,
            mass: 1.0,
        }
    }
}

/// Build the electrodynamic AB scenario.
pub fn build_electrodynamic_preset(
    params: &ElectrodynamicPreset,
    constants: crate::constants::PhysicalConstants,
    settings: QuadratureSettings,
) -> Result<InterferometerScenario> {
    let p = params;
    let (a, w, h) = (p.solenoid_radius, p.half_width, p.half_height);
    if a <= 0.0 || w <= a || h <= a || p.speed <= 0.0 {
        return Err(Error::BadScenarioParameters(
            "need 0 < radius < half_width, half_height and speed > 0".into(),
        ));
    }
    if p.ramp_end <= p.ramp_start {
        return Err(Error::BadScenarioParameters(
            "ramp window must have positive duration".into(),
        ));
    }

    let start = Vec3::new(-w, 0.0, 0.0);
    let end = Vec3::new(w, 0.0, 0.0);
    let c_a = Vec3::new(0.0, -h, 0.0);
    let c_b = Vec3::new(0.0, h, 0.0);
    let n = p.waypoints_per_edge.max(2);

    let make_path = |corner: Vec3, cage: Vec3| -> Result<ParticlePath> {
        // entry: start -> corner -> cage
        let mut entry = vec![start];
        sample_edge(start, corner, n / 2 + 1, &mut entry);
        sample_edge(corner, cage, n / 2 + 1, &mut entry);
        let entry_len: f64 = entry.windows(2).map(|q| (q[1] - q[0]).norm()).sum();
        let entry_time = entry_len / p.speed;
        if entry_time >= p.dwell_start {
            return Err(Error::BadScenarioParameters(format!(
                "dwell_start = {} is inside the entry traversal (ends {entry_time:.3})",
                p.dwell_start
            )));
        }
        // stretch the entry uniformly to land at dwell_start
        let scale = p.dwell_start / entry_time;
        let mut knots = timed_knots(&entry, p.speed * scale, 0.0);
        // dwell
        knots.push((p.dwell_end, cage));
        // exit: cage -> far corner -> end, mirroring the entry pace
        let far_corner = Vec3::new(w, corner.y, 0.0);
        let mut exit = vec![cage];
        sample_edge(cage, far_corner, n / 2 + 1, &mut exit);
        sample_edge(far_corner, end, n / 2 + 1, &mut exit);
        let mut t = p.dwell_end;
        for pair in exit.windows(2) {
            t += (pair[1] - pair[0]).norm() / (p.speed * scale);
            knots.push((t, pair[1]));
        }
        ParticlePath::from_samples(knots, p.charge, p.mass)
    };

    let ramp = TimeSchedule::SmoothstepRamp {
        t_start: p.ramp_start,
        t_end: p.ramp_end,
        amplitude_initial: 1.0,
        amplitude_final: 0.0,
    };
    let ramp_inside_dwell = p.ramp_start >= p.dwell_start && p.ramp_end <= p.dwell_end;
    let path_a = make_path(Vec3::new(-w, -h, 0.0), c_a)?;
    let path_b = make_path(Vec3::new(-w, h, 0.0), c_b)?;
    let traversal_end = path_a.end().0.max(path_b.end().0);
    if !ramp_inside_dwell && p.ramp_start < traversal_end {
        return Err(Error::BadScenarioParameters(format!(
            "ramp window [{}, {}] must lie inside the dwell [{}, {}] or \
             entirely after the traversal (ends {traversal_end:.3})",
            p.ramp_start, p.ramp_end, p.dwell_start, p.dwell_end
        )));
    }

    let ni = amp_turns_for_flux(p.flux, a, constants.mu0);
    let kind = match p.solenoid {
        SolenoidKind::Analytic => ElementKind::InfiniteSolenoidAnalytic {
            center: Vec3::zeros(),
            axis: Vec3::new(0.0, 0.0, 1.0),
            radius: a,
            winding_density: 1.0,
        },
        SolenoidKind::Finite { length } => ElementKind::FiniteSolenoid {
            center: Vec3::zeros(),
            axis: Vec3::new(0.0, 0.0, 1.0),
            radius: a,
            length,
            winding_density: 1.0,
        },
    };
    let mut elements = vec![SourceElement::new(kind, ni).with_schedule(ramp)];
    if let Some((shell_radius, shell_charge)) = p.cage_shell {
        for center in [c_a, c_b] {
            elements.push(
                SourceElement::new(
                    ElementKind::ChargedShell {
                        center,
                        radius: shell_radius,
                    },
                    shell_charge,
                )
                .with_schedule(ramp),
            );
        }
    }
    let sources = SourceConfiguration::with_elements(constants, elements);

    Ok(InterferometerScenario {
        path_a,
        path_b,
        sources,
        gauge: GaugeFunction::IDENTITY,
        settings,
        phase_tol: DEFAULT_PHASE_TOL,
        open_paths: false,
        label: "electrodynamic".into(),
    })
}

/// Line integral of the vector potential along a path's spline geometry
/// between two knot indices, at a frozen time. The independent oracle for
/// the electrodynamic reduced value.
pub fn line_integral_along_path(
    scenario: &InterferometerScenario,
    path: &ParticlePath,
    knot_range: (usize, usize),
    frozen_time: f64,
) -> Result<f64> {
    let evaluator =
        crate::potentials::FieldEvaluator::new(&scenario.sources, scenario.settings);
    let mut total = 0.0;
    for i in knot_range.0..knot_range.1 {
        let mut bad: Option<Error> = None;
        let mut f = |u: f64| {
            let (r, _) = path.eval_segment(i, u);
            // dr/du = velocity * dt
            let (t0, _) = path.knots()[i];
            let (t1, _) = path.knots()[i + 1];
            let (_, v) = path.eval_segment(i, u);
            match evaluator.vector(&r, frozen_time) {
                Ok((a, _)) => a.dot(&(v * (t1 - t0))),
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
            scenario.settings.rel_tol,
            0.0,
            scenario.settings.max_subdivision_depth,
        );
        if let Some(e) = bad {
            return Err(e);
        }
        total += res.value;
    }
    Ok(total)
}

/// Index of the first knot of a path's dwell plateau, with its partner:
/// (dwell_begin_index, dwell_end_index). Errors when the path never
/// dwells.
pub fn dwell_knot_range(path: &ParticlePath) -> Result<(usize, usize)> {
    let knots = path.knots();
    for i in 0..knots.len() - 1 {
        if knots[i].1 == knots[i + 1].1 {
            return Ok((i, i + 1));
        }
    }
    Err(Error::InvalidInput("path has no dwell segment".into()))
}

/// One row of an open-path gauge study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpenPathRow {
    pub gauge_index: usize,
    pub calculator: Calculator,
    pub phi_a: f64,
    pub phi_b: f64,
    pub delta: f64,
}

/// Per-gauge per-path phases from both calculators on an open scenario.
/// No invariance is asserted: that is the point.
pub fn open_path_report(
    scenario: &InterferometerScenario,
    gauges: &[GaugeFunction],
) -> Result<Vec<OpenPathRow>> {
    if !scenario.open_paths {
        return Err(Error::BadScenarioParameters(
            "open_path_report needs a scenario with open_paths flagged".into(),
        ));
    }
    scenario.validate()?;
    let mut rows = Vec::new();
    for (gauge_index, gauge) in gauges.iter().enumerate() {
        let gauged = GaugedPotentials::new(
            &scenario.sources,
            scenario.settings,
            gauge.clone(),
        );
        for calculator in [Calculator::Hamiltonian, Calculator::Energy] {
            let accumulate = match calculator {
                Calculator::Hamiltonian => accumulate_phase_hamiltonian,
                Calculator::Energy => accumulate_phase_energy,
            };
            let phi_a = accumulate(&scenario.path_a, &gauged, scenario.phase_tol)?;
            let phi_b = accumulate(&scenario.path_b, &gauged, scenario.phase_tol)?;
            rows.push(OpenPathRow {
                gauge_index,
                calculator,
                phi_a: phi_a.total,
                phi_b: phi_b.total,
                delta: phi_a.total - phi_b.total,
            });
        }
    }
    Ok(rows)
}

/// Gauge-sweep summary over a closed scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeSweepReport {
    /// Lorenz-gauge results (hamiltonian, energy).
    pub lorenz: (PhaseResult, PhaseResult),
    /// Per-gauge results (hamiltonian, energy).
    pub rows: Vec<(PhaseResult, PhaseResult)>,
    /// max |delta(gauge) - delta(Lorenz)| per calculator.
    pub max_spread: (f64, f64),
    /// Range of per-path Hamiltonian phases across the gauges.
    pub per_path_phase_range: f64,
}

/// Run the closed scenario under every gauge in the family and collect
/// invariance statistics.
pub fn sweep_gauges(
    scenario: &InterferometerScenario,
    gauges: &[GaugeFunction],
) -> Result<GaugeSweepReport> {
    let mut lorenz = scenario.clone();
    lorenz.gauge = GaugeFunction::IDENTITY;
    let (ham0, energy0) = phase_difference(&lorenz)?;
    let mut rows = Vec::with_capacity(gauges.len());
    let mut max_ham: f64 = 0.0;
    let mut max_energy: f64 = 0.0;
    let mut phi_a_min = f64::INFINITY;
    let mut phi_a_max = f64::NEG_INFINITY;
    for gauge in gauges {
        let mut s = scenario.clone();
        s.gauge = gauge.clone();
        let (ham, energy) = phase_difference(&s)?;
        max_ham = max_ham.max((ham.delta - ham0.delta).abs());
        max_energy = max_energy.max((energy.delta - energy0.delta).abs());
        phi_a_min = phi_a_min.min(ham.phi_a.total);
        phi_a_max = phi_a_max.max(ham.phi_a.total);
        rows.push((ham, energy));
    }
    Ok(GaugeSweepReport {
        lorenz: (ham0, energy0),
        rows,
        max_spread: (max_ham, max_energy),
        per_path_phase_range: phi_a_max - phi_a_min,
    })
}
