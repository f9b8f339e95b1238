//! Property tests for the spec invariants that hold over whole parameter
//! families: schedule bounds, superposition, the gauge identity, basis
//! orthonormality, and path interpolation.

use abqed::gauge::{GaugeFunction, GaugedPotentials, TimeProfile};
use abqed::interferometer::ParticlePath;
use abqed::modespace::PolarizationBasis;
use abqed::potentials::{effective_scalar_potential, effective_vector_potential};
use abqed::schedule::TimeSchedule;
use abqed::sources::{ElementKind, SourceConfiguration, SourceElement};
use abqed::{PhysicalConstants, QuadratureSettings, Vec3};
use proptest::prelude::*;

fn reduced() -> PhysicalConstants {
    PhysicalConstants::reduced()
}

prop_compose! {
    fn arb_schedule()(
        kind in 0..3,
        t_start in -5.0..5.0f64,
        width in 0.1..10.0f64,
        a0 in -3.0..3.0f64,
        a1 in -3.0..3.0f64,
    ) -> TimeSchedule {
        match kind {
            0 => TimeSchedule::Constant { amplitude: a0 },
            1 => TimeSchedule::LinearRamp {
                t_start,
                t_end: t_start + width,
                amplitude_initial: a0,
                amplitude_final: a1,
            },
            _ => TimeSchedule::SmoothstepRamp {
                t_start,
                t_end: t_start + width,
                amplitude_initial: a0,
                amplitude_final: a1,
            },
        }
    }
}

proptest! {
    #[test]
    fn schedule_values_bounded_by_extreme_amplitudes(
        schedule in arb_schedule(),
        t in -20.0..20.0f64,
    ) {
        let v = schedule.value(t);
        prop_assert!(v.abs() <= schedule.max_abs() + 1e-15);
        prop_assert!(v.is_finite());
    }
}

prop_compose! {
    fn arb_charge_element()(
        kind in 0..3,
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
        z in -1.0..1.0f64,
        size in 0.05..0.5f64,
        strength in -2.0..2.0f64,
    ) -> SourceElement {
        let center = Vec3::new(x, y, z);
        let kind = match kind {
            0 => ElementKind::PointCharge { position: center },
            1 => ElementKind::GaussianChargeBall { center, width: size },
            _ => ElementKind::ChargedShell { center, radius: size },
        };
        SourceElement::new(kind, strength)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn potentials_superpose_linearly(
        e1 in arb_charge_element(),
        e2 in arb_charge_element(),
    ) {
        let settings = QuadratureSettings::default();
        let probe = Vec3::new(3.0, 0.5, -0.2); // outside every generated source
        let ca = SourceConfiguration::with_elements(reduced(), vec![e1.clone()]);
        let cb = SourceConfiguration::with_elements(reduced(), vec![e2.clone()]);
        let cu = SourceConfiguration::with_elements(reduced(), vec![e1, e2]);
        let va = effective_scalar_potential(&ca, &probe, 0.0, &settings).unwrap().v;
        let vb = effective_scalar_potential(&cb, &probe, 0.0, &settings).unwrap().v;
        let vu = effective_scalar_potential(&cu, &probe, 0.0, &settings).unwrap().v;
        let scale = va.abs().max(vb.abs()).max(1e-12);
        prop_assert!((vu - (va + vb)).abs() <= 1e-12 * scale);
    }
}

prop_compose! {
    fn arb_gauge()(
        kind in 0..4,
        x in -0.5..0.5f64,
        y in -0.5..0.5f64,
        z in -0.5..0.5f64,
        scale in 0.05..1.0f64,
        amplitude in -1.0..1.0f64,
        rate in -0.5..0.5f64,
        phase in 0.0..std::f64::consts::TAU,
    ) -> GaugeFunction {
        let center = Vec3::new(x, y, z);
        match kind {
            0 => GaugeFunction::Linear {
                kappa: center,
                alpha: rate,
                offset: amplitude,
            },
            1 => GaugeFunction::GaussianBump { center, width: scale, amplitude },
            2 => GaugeFunction::Sinusoidal {
                k_vec: center / scale.max(0.1),
                amplitude,
                phase,
            },
            _ => GaugeFunction::TimeModulatedProduct {
                spatial: Box::new(GaugeFunction::GaussianBump {
                    center,
                    width: scale,
                    amplitude,
                }),
                temporal: TimeProfile::Sine {
                    amplitude: 1.0,
                    angular_frequency: rate.abs() + 0.1,
                    phase,
                },
            },
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn hamiltonian_energy_split_is_gauge_rate(
        gauge in arb_gauge(),
        q in -2.0..2.0f64,
        px in -0.5..0.5f64,
        py in -0.5..0.5f64,
        t in -3.0..3.0f64,
    ) {
        let config = SourceConfiguration::with_elements(
            reduced(),
            vec![SourceElement::new(
                ElementKind::PointCharge { position: Vec3::new(0.0, 0.0, 2.0) },
                1.0,
            )],
        );
        let gauged = GaugedPotentials::new(&config, QuadratureSettings::default(), gauge.clone());
        let r = Vec3::new(0.4, -0.3, 0.1);
        let p = Vec3::new(px, py, 0.0);
        let m = 1.0;
        let ham = gauged.hamiltonian_density(&r, t, q, &p, m).unwrap();
        let energy = gauged.energy_shift(&r, t, q, &p, m).unwrap();
        let expected = -q * gauge.time_derivative(&r, t);
        let scale = ham.abs().max(energy.abs()).max(expected.abs()).max(1e-12);
        prop_assert!(((ham - energy) - expected).abs() <= 1e-12 * scale);
    }

    #[test]
    fn polarization_basis_is_orthonormal_for_any_k(
        kx in -5.0..5.0f64,
        ky in -5.0..5.0f64,
        kz in -5.0..5.0f64,
    ) {
        prop_assume!(Vec3::new(kx, ky, kz).norm() > 1e-6);
        let basis = PolarizationBasis::standard(&Vec3::new(kx, ky, kz)).unwrap();
        prop_assert!(basis.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn paths_interpolate_their_samples(
        x1 in -2.0..2.0f64,
        y1 in -2.0..2.0f64,
        x2 in -2.0..2.0f64,
        y2 in -2.0..2.0f64,
        dt in 0.5..5.0f64,
    ) {
        let samples = vec![
            (0.0, Vec3::zeros()),
            (dt, Vec3::new(x1, y1, 0.0)),
            (2.0 * dt, Vec3::new(x2, y2, 0.5)),
        ];
        let path = ParticlePath::from_samples(samples.clone(), 1.0, 1.0).unwrap();
        for (t, r) in &samples {
            prop_assert!((path.position(*t) - r).norm() < 1e-12);
        }
    }

    #[test]
    fn vector_potential_decays_with_distance(
        axis_x in -1.0..1.0f64,
        axis_y in -1.0..1.0f64,
        radius in 0.1..0.5f64,
        current in 0.5..3.0f64,
    ) {
        let config = SourceConfiguration::with_elements(
            reduced(),
            vec![SourceElement::new(
                ElementKind::CurrentLoop {
                    center: Vec3::zeros(),
                    axis: Vec3::new(axis_x, axis_y, 1.0),
                    radius,
                },
                current,
            )],
        );
        let settings = QuadratureSettings {
            loop_segments: 64,
            ..Default::default()
        };
        let near = effective_vector_potential(&config, &Vec3::new(2.0, 0.3, 0.1), 0.0, &settings)
            .unwrap()
            .a
            .norm();
        let far = effective_vector_potential(&config, &Vec3::new(4.0, 0.6, 0.2), 0.0, &settings)
            .unwrap()
            .a
            .norm();
        // at least 1/r decay on a doubling
        prop_assert!(far < near / 1.9);
    }
}
