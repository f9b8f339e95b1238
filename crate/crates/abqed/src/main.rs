//! Command-line front end: scenario runs, gauge sweeps, field probes,
//! mode-space checks, and convergence reports, driven by a TOML
//! configuration with CLI overrides.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use abqed::config::{default_electric, default_electrodynamic, default_magnetic, RunConfiguration};
use abqed::constants::UnitSystem;
use abqed::error::Error;
use abqed::gauge::{random_gauge_family, GaugeFunction};
use abqed::interferometer::{
    phase_difference, sweep_gauges, Calculator, InterferometerScenario, PhaseResult,
};
use abqed::modespace;
use abqed::potentials::{
    circulation, effective_scalar_potential, effective_vector_potential, kernel_identity_check,
};
use abqed::report::{fmt_f64, write_json, CsvTable};
use abqed::sources::{ElementKind, SourceConfiguration, SourceElement};
use abqed::{QuadratureSettings, Vec3};

#[derive(Parser)]
#[command(
    name = "abqed",
    version,
    about = "Aharonov-Bohm phases from coherent-state effective potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and report the phase difference from both calculators
    Run(RunArgs),
    /// Sweep a seeded random gauge family over the scenario
    SweepGauge(SweepArgs),
    /// Evaluate the effective potentials at probe points (CSV)
    FieldProbe(ProbeArgs),
    /// Run the mode-space agreement and energy-constant suites (JSON)
    ModespaceCheck(ModespaceArgs),
    /// Report observed convergence orders across refinement ladders
    Convergence(ConvergenceArgs),
    /// List scenario presets with their default parameters
    Presets(PresetsArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset: magnetic, electric, electrodynamic
    #[arg(long)]
    preset: Option<String>,
    /// Unit system: si or reduced
    #[arg(long)]
    units: Option<String>,
    /// Output directory for artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solenoid flux override, webers
    #[arg(long)]
    flux: Option<f64>,
    /// Electric preset cage potentials
    #[arg(long = "v-a")]
    v_a: Option<f64>,
    #[arg(long = "v-b")]
    v_b: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random gauges
    #[arg(long)]
    count: Option<usize>,
    /// Seed for the gauge family
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Extra probe points as x,y,z[,t] (repeatable)
    #[arg(long = "probe")]
    probes: Vec<String>,
}

#[derive(Args)]
struct ModespaceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Probes per source for the agreement suite
    #[arg(long, default_value_t = 20)]
    probes: usize,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Refinement levels (doublings) per study
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args)]
struct PresetsArgs {
    /// Unit system the defaults are printed for
    #[arg(long, default_value = "reduced")]
    units: String,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match run_command(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("abqed: error: {e}");
            match e {
                Error::ConfigError(_) | Error::InvalidInput(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn run_command(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepGauge(args) => cmd_sweep(args),
        Command::FieldProbe(args) => cmd_field_probe(args),
        Command::ModespaceCheck(args) => cmd_modespace(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Presets(args) => cmd_presets(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfiguration, Error> {
    let mut config = match &common.config {
        Some(path) => RunConfiguration::from_file(path)?,
        None => RunConfiguration::default(),
    };
    if let Some(units) = &common.units {
        config.units = match units.as_str() {
            "si" => UnitSystem::Si,
            "reduced" => UnitSystem::Reduced,
            other => {
                return Err(Error::ConfigError(format!(
                    "unknown units {other:?}; expected si or reduced"
                )))
            }
        };
    }
    if let Some(preset) = &common.preset {
        config.scenario.preset = Some(preset.clone());
    }
    // parameter overrides fill in the preset blocks
    if let Some(flux) = common.flux {
        match config.scenario.preset.as_deref() {
            Some("electrodynamic") => {
                config
                    .scenario
                    .electrodynamic
                    .get_or_insert_with(|| default_electrodynamic(config.units))
                    .flux = flux;
            }
            _ => {
                config
                    .scenario
                    .magnetic
                    .get_or_insert_with(|| default_magnetic(config.units))
                    .flux = flux;
            }
        }
    }
    if common.v_a.is_some() || common.v_b.is_some() {
        let block = config
            .scenario
            .electric
            .get_or_insert_with(|| default_electric(config.units));
        if let Some(v) = common.v_a {
            block.v_a = v;
        }
        if let Some(v) = common.v_b {
            block.v_b = v;
        }
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &RunConfiguration, common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn gauge_label(gauge: &GaugeFunction) -> &'static str {
    match gauge {
        GaugeFunction::Constant { .. } => "lorenz",
        GaugeFunction::Linear { .. } => "linear",
        GaugeFunction::GaussianBump { .. } => "gaussian_bump",
        GaugeFunction::Sinusoidal { .. } => "sinusoidal",
        GaugeFunction::TimeModulatedProduct { .. } => "time_modulated",
        GaugeFunction::Sum { .. } => "sum",
    }
}

/// Warn about the quasistatic assumption and the nonrelativistic regime.
fn print_physics_warnings(scenario: &InterferometerScenario) {
    let c = scenario.sources.constants.c;
    let diameter = scenario
        .path_a
        .knots()
        .iter()
        .chain(scenario.path_b.knots())
        .map(|(_, r)| r.norm())
        .fold(0.0f64, f64::max)
        * 2.0;
    let light_crossing = diameter / c;
    for e in &scenario.sources.elements {
        if let Some((t0, t1)) = e.schedule.ramp_window() {
            let ramp = t1 - t0;
            if ramp < 100.0 * light_crossing {
                eprintln!(
                    "abqed: warning: schedule ramp {ramp:.3e} s is shorter than \
                     100 x light-crossing time {light_crossing:.3e} s; the \
                     quasistatic (no-retardation) assumption is strained"
                );
            }
        }
    }
    let vmax = scenario.path_a.max_speed().max(scenario.path_b.max_speed());
    if vmax > 0.05 * c {
        eprintln!(
            "abqed: warning: peak speed {vmax:.3e} is {:.1}% of c; the \
             nonrelativistic phase formula degrades",
            100.0 * vmax / c
        );
    }
}

#[derive(Serialize)]
struct RunSummary {
    preset: String,
    units: UnitSystem,
    gauge: String,
    delta_hamiltonian: f64,
    delta_energy: f64,
    est_error_hamiltonian: f64,
    est_error_energy: f64,
    phi_a_hamiltonian: f64,
    phi_b_hamiltonian: f64,
    phi_a_energy: f64,
    phi_b_energy: f64,
}

fn phase_rows(table: &mut CsvTable, gauge_index: i64, gauge: &str, result: &PhaseResult) {
    let calc = match result.calculator {
        Calculator::Hamiltonian => "hamiltonian",
        Calculator::Energy => "energy",
    };
    for (path, phi) in [("a", &result.phi_a), ("b", &result.phi_b)] {
        table.push_row(vec![
            gauge_index.to_string(),
            gauge.to_string(),
            calc.to_string(),
            path.to_string(),
            fmt_f64(phi.total),
            fmt_f64(phi.scalar_term),
            fmt_f64(phi.vector_term),
            fmt_f64(result.delta),
            fmt_f64(phi.est_error),
        ]);
    }
}

const PHASE_COLUMNS: &[&str] = &[
    "gauge_index",
    "gauge",
    "calculator",
    "path",
    "phi",
    "scalar_term",
    "vector_term",
    "delta",
    "est_error",
];

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let config = load_config(&args.common)?;
    let scenario = config.scenario()?;
    print_physics_warnings(&scenario);
    let started = Instant::now();
    let (ham, energy) = phase_difference(&scenario)?;
    let wall = started.elapsed();

    let gauge = gauge_label(&scenario.gauge);
    println!(
        "{:<16} {:<14} {:>24} {:>24} {:>12} {:>10}",
        "preset", "gauge", "delta_hamiltonian", "delta_energy", "est_error", "wall"
    );
    println!(
        "{:<16} {:<14} {:>24} {:>24} {:>12} {:>9.2?}",
        scenario.label,
        gauge,
        format!("{:.15e}", ham.delta),
        format!("{:.15e}", energy.delta),
        format!(
            "{:.2e}",
            ham.phi_a.est_error + ham.phi_b.est_error
        ),
        wall
    );

    let dir = out_dir(&config, &args.common);
    let mut table = CsvTable::new("phases", PHASE_COLUMNS);
    phase_rows(&mut table, 0, gauge, &ham);
    phase_rows(&mut table, 0, gauge, &energy);
    let csv_path = table.write_to(&dir, "phases.csv")?;
    let summary = RunSummary {
        preset: scenario.label.clone(),
        units: config.units,
        gauge: gauge.into(),
        delta_hamiltonian: ham.delta,
        delta_energy: energy.delta,
        est_error_hamiltonian: ham.phi_a.est_error + ham.phi_b.est_error,
        est_error_energy: energy.phi_a.est_error + energy.phi_b.est_error,
        phi_a_hamiltonian: ham.phi_a.total,
        phi_b_hamiltonian: ham.phi_b.total,
        phi_a_energy: energy.phi_a.total,
        phi_b_energy: energy.phi_b.total,
    };
    let json_path = write_json(&summary, &dir, "summary.json")?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary {
    preset: String,
    seed: u64,
    count: usize,
    lorenz_delta_hamiltonian: f64,
    lorenz_delta_energy: f64,
    max_delta_spread_hamiltonian: f64,
    max_delta_spread_energy: f64,
    per_path_phase_range: f64,
    spread_tolerance: f64,
    pass: bool,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let mut config = load_config(&args.common)?;
    if let Some(seed) = args.seed {
        config.sweep.seed = seed;
    }
    if let Some(count) = args.count {
        config.sweep.count = count;
    }
    let scenario = config.scenario()?;
    print_physics_warnings(&scenario);
    let feature = config.sweep.feature_size.unwrap_or_else(|| {
        scenario
            .path_a
            .knots()
            .iter()
            .map(|(_, r)| r.norm())
            .fold(0.0f64, f64::max)
    });
    let gauges = random_gauge_family(
        config.sweep.seed,
        config.sweep.count,
        feature,
        config.sweep.amplitude,
    );

    if scenario.open_paths {
        // no invariance to assert on open paths: emit the per-gauge
        // per-path phases that demonstrate the gauge dependence
        let rows = abqed::interferometer::open_path_report(&scenario, &gauges)?;
        let mut table = CsvTable::new(
            "open-path-sweep",
            &["gauge_index", "calculator", "phi_a", "phi_b", "delta"],
        );
        let mut phi_min = f64::INFINITY;
        let mut phi_max = f64::NEG_INFINITY;
        for row in &rows {
            let calc = match row.calculator {
                Calculator::Hamiltonian => "hamiltonian",
                Calculator::Energy => "energy",
            };
            phi_min = phi_min.min(row.phi_a);
            phi_max = phi_max.max(row.phi_a);
            table.push_row(vec![
                row.gauge_index.to_string(),
                calc.to_string(),
                fmt_f64(row.phi_a),
                fmt_f64(row.phi_b),
                fmt_f64(row.delta),
            ]);
        }
        let dir = out_dir(&config, &args.common);
        let csv_path = table.write_to(&dir, "sweep.csv")?;
        println!(
            "open-path sweep: {} gauges, per-path phase range {:.3e} rad (gauge-dependent, \
             as expected for nonclosed paths)",
            gauges.len(),
            phi_max - phi_min
        );
        println!("wrote {}", csv_path.display());
        return Ok(());
    }

    let started = Instant::now();
    let report = sweep_gauges(&scenario, &gauges)?;
    let wall = started.elapsed();

    let tolerance = 1e-9;
    let pass = report.max_spread.0 <= tolerance && report.max_spread.1 <= tolerance;
    println!(
        "sweep: {} gauges, seed {}: max delta spread ham {:.3e}, energy {:.3e}; \
         per-path range {:.3e} rad; wall {wall:.2?}",
        config.sweep.count,
        config.sweep.seed,
        report.max_spread.0,
        report.max_spread.1,
        report.per_path_phase_range
    );

    let dir = out_dir(&config, &args.common);
    // one row per gauge per calculator per path, every number with an
    // error-estimate column
    let mut table = CsvTable::new("sweep", PHASE_COLUMNS);
    phase_rows(&mut table, -1, "lorenz", &report.lorenz.0);
    phase_rows(&mut table, -1, "lorenz", &report.lorenz.1);
    for (i, (ham, energy)) in report.rows.iter().enumerate() {
        phase_rows(&mut table, i as i64, "random", ham);
        phase_rows(&mut table, i as i64, "random", energy);
    }
    let csv_path = table.write_to(&dir, "sweep.csv")?;
    let summary = SweepSummary {
        preset: scenario.label.clone(),
        seed: config.sweep.seed,
        count: config.sweep.count,
        lorenz_delta_hamiltonian: report.lorenz.0.delta,
        lorenz_delta_energy: report.lorenz.1.delta,
        max_delta_spread_hamiltonian: report.max_spread.0,
        max_delta_spread_energy: report.max_spread.1,
        per_path_phase_range: report.per_path_phase_range,
        spread_tolerance: tolerance,
        pass,
    };
    let json_path = write_json(&summary, &dir, "sweep_summary.json")?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    if !pass {
        return Err(Error::InvalidInput(format!(
            "gauge-invariance violation: delta spread ({:.3e}, {:.3e}) exceeds {tolerance:.1e}",
            report.max_spread.0, report.max_spread.1
        )));
    }
    Ok(())
}

fn cmd_field_probe(args: ProbeArgs) -> Result<(), Error> {
    let config = load_config(&args.common)?;
    let sources = if config.sources.is_empty() && config.scenario.preset.is_some() {
        config.scenario()?.sources
    } else {
        config.source_configuration()
    };
    if sources.elements.is_empty() {
        return Err(Error::ConfigError(
            "field-probe needs sources (top-level [[sources]] or a preset)".into(),
        ));
    }
    let settings = config.numerics.quadrature();
    let mut probes: Vec<(Vec3, f64)> = config
        .probes
        .iter()
        .map(|p| (Vec3::new(p.position[0], p.position[1], p.position[2]), p.t))
        .collect();
    for text in &args.probes {
        let parts: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::ConfigError(format!("bad --probe {text:?}: {e}")))?;
        match parts.len() {
            3 => probes.push((Vec3::new(parts[0], parts[1], parts[2]), 0.0)),
            4 => probes.push((Vec3::new(parts[0], parts[1], parts[2]), parts[3])),
            n => {
                return Err(Error::ConfigError(format!(
                    "--probe needs 3 or 4 comma-separated numbers, got {n}"
                )))
            }
        }
    }
    if probes.is_empty() {
        return Err(Error::ConfigError(
            "no probes given ([[probes]] in the config or --probe x,y,z[,t])".into(),
        ));
    }
    let mut table = CsvTable::new(
        "field-probe",
        &["x", "y", "z", "t", "V", "Ax", "Ay", "Az", "est_error"],
    );
    for (r, t) in &probes {
        let v = effective_scalar_potential(&sources, r, *t, &settings)?;
        let a = effective_vector_potential(&sources, r, *t, &settings)?;
        table.push_row(vec![
            fmt_f64(r.x),
            fmt_f64(r.y),
            fmt_f64(r.z),
            fmt_f64(*t),
            fmt_f64(v.v),
            fmt_f64(a.a.x),
            fmt_f64(a.a.y),
            fmt_f64(a.a.z),
            fmt_f64(v.est_error_v.max(a.est_error_a)),
        ]);
    }
    let dir = out_dir(&config, &args.common);
    let path = table.write_to(&dir, "field_probe.csv")?;
    println!("wrote {} ({} probes)", path.display(), probes.len());
    Ok(())
}

#[derive(Serialize)]
struct ModespaceSourceReport {
    source: String,
    probes: usize,
    max_rel_err_v: f64,
    max_rel_err_a: f64,
    pass_agreement: bool,
}

#[derive(Serialize)]
struct ModespaceSummary {
    sources: Vec<ModespaceSourceReport>,
    lambda3_max_relative: f64,
    pass_lambda3: bool,
    reality_residue: f64,
    pass_reality: bool,
    gaussian_c: f64,
    gaussian_c_oracle: f64,
    loop_c: f64,
    loop_c_oracle: f64,
    pass_energy_constant: bool,
    pass: bool,
}

fn cmd_modespace(args: ModespaceArgs) -> Result<(), Error> {
    let config = load_config(&args.common)?;
    let constants = config.constants();
    let settings = QuadratureSettings {
        loop_segments: 64,
        solenoid_loops: 12,
        ..config.numerics.quadrature()
    };

    // compact-source catalog (config sources are not guaranteed compact)
    let catalog: Vec<(&str, SourceConfiguration)> = vec![
        (
            "point_charge",
            SourceConfiguration::with_elements(
                constants,
                vec![SourceElement::new(
                    ElementKind::PointCharge {
                        position: Vec3::new(0.1, -0.05, 0.2),
                    },
                    1.3,
                )],
            ),
        ),
        (
            "gaussian_ball",
            SourceConfiguration::with_elements(
                constants,
                vec![SourceElement::new(
                    ElementKind::GaussianChargeBall {
                        center: Vec3::new(-0.2, 0.1, 0.0),
                        width: 0.25,
                    },
                    -0.8,
                )],
            ),
        ),
        (
            "charged_shell",
            SourceConfiguration::with_elements(
                constants,
                vec![SourceElement::new(
                    ElementKind::ChargedShell {
                        center: Vec3::zeros(),
                        radius: 0.3,
                    },
                    0.9,
                )],
            ),
        ),
        (
            "current_loop",
            SourceConfiguration::with_elements(
                constants,
                vec![SourceElement::new(
                    ElementKind::CurrentLoop {
                        center: Vec3::zeros(),
                        axis: Vec3::new(0.2, 0.1, 1.0),
                        radius: 0.3,
                    },
                    1.7,
                )],
            ),
        ),
        (
            "small_solenoid",
            SourceConfiguration::with_elements(
                constants,
                vec![SourceElement::new(
                    ElementKind::FiniteSolenoid {
                        center: Vec3::zeros(),
                        axis: Vec3::new(0.0, 0.0, 1.0),
                        radius: 0.25,
                        length: 1.0,
                        winding_density: 12.0,
                    },
                    0.9,
                )],
            ),
        ),
    ];

    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    let mut source_reports = Vec::new();
    let mut all_pass = true;
    for (name, source) in &catalog {
        let mut max_v: f64 = 0.0;
        let mut max_a: f64 = 0.0;
        for _ in 0..args.probes {
            let radius = 0.9 + 1.6 * next();
            let dir = loop {
                let v = Vec3::new(2.0 * next() - 1.0, 2.0 * next() - 1.0, 2.0 * next() - 1.0);
                if v.norm() > 0.1 {
                    break v.normalize();
                }
            };
            let r = dir * radius;
            let real_v = effective_scalar_potential(source, &r, 0.0, &settings)?.v;
            let real_a = effective_vector_potential(source, &r, 0.0, &settings)?.a;
            let k_max = 400.0 / radius.min(1.0);
            let rec =
                modespace::reconstruct_potentials_kspace(source, &r, 0.0, k_max, 3, &settings)?;
            max_v = max_v.max((rec.sample.v - real_v).abs() / real_v.abs().max(1e-3));
            max_a = max_a.max((rec.sample.a - real_a).norm() / real_a.norm().max(1e-3));
        }
        let pass = max_v < 1e-3 && max_a < 1e-3;
        all_pass &= pass;
        println!(
            "modespace {name:<14} max rel err V {max_v:.3e} A {max_a:.3e} {}",
            if pass { "PASS" } else { "FAIL" }
        );
        source_reports.push(ModespaceSourceReport {
            source: name.to_string(),
            probes: args.probes,
            max_rel_err_v: max_v,
            max_rel_err_a: max_a,
            pass_agreement: pass,
        });
    }

    // longitudinal silence for the closed loop
    let loop_config = &catalog[3].1;
    let mut lambda3_max: f64 = 0.0;
    for k in [
        Vec3::new(1.3, 0.0, 0.0),
        Vec3::new(0.5, -1.0, 2.0),
        Vec3::new(0.0, 0.3, 3.0),
        Vec3::new(8.0, 4.0, -2.0),
    ] {
        let basis = modespace::PolarizationBasis::standard(&k)?;
        let lj = modespace::lambda_current(loop_config, &k, 0.0, &basis, &settings)?;
        let transverse = lj[0].norm().max(lj[1].norm()).max(1e-300);
        lambda3_max = lambda3_max.max(lj[2].norm() / transverse);
    }
    let pass_lambda3 = lambda3_max <= 1e-10;
    all_pass &= pass_lambda3;
    println!(
        "modespace lambda_3 relative max {lambda3_max:.3e} {}",
        if pass_lambda3 { "PASS" } else { "FAIL" }
    );

    // reality of the literal complex assembly
    let mixed = SourceConfiguration::with_elements(
        constants,
        vec![
            catalog[0].1.elements[0].clone(),
            catalog[3].1.elements[0].clone(),
        ],
    );
    let angular = abqed::quadrature::SphereRule::for_bandwidth(48.0);
    let (v_c, a_c) = modespace::reconstruct_potentials_cubature(
        &mixed,
        &Vec3::new(0.45, 0.2, 0.3),
        0.0,
        40.0,
        &angular,
        &settings,
    )?;
    let reality = (v_c.im.abs() / v_c.re.abs().max(1e-300)).max(
        (a_c[0].im.powi(2) + a_c[1].im.powi(2) + a_c[2].im.powi(2)).sqrt()
            / Vec3::new(a_c[0].re, a_c[1].re, a_c[2].re).norm().max(1e-300),
    );
    let pass_reality = reality <= 1e-12;
    all_pass &= pass_reality;
    println!(
        "modespace reality residue {reality:.3e} {}",
        if pass_reality { "PASS" } else { "FAIL" }
    );

    // energy constants against the real-space oracles
    let gauss_report = modespace::ground_energy_constant(&catalog[1].1, 0.0, 200.0, 4, &settings)?;
    let gauss_oracle = modespace::classical_charge_field_energy(&catalog[1].1, 0.0, &settings)?;
    let loop_settings = QuadratureSettings {
        regularization_length: 0.03,
        ..settings
    };
    let loop_report = modespace::ground_energy_constant(
        &catalog[3].1,
        0.0,
        8.0 / loop_settings.regularization_length,
        4,
        &loop_settings,
    )?;
    let loop_oracle = modespace::filament_interaction_energy(&catalog[3].1, 0.0, &loop_settings)?;
    let pass_energy = (gauss_report.value - gauss_oracle).abs() / gauss_oracle.abs() < 1e-3
        && (loop_report.value + loop_oracle).abs() / loop_oracle.abs() < 1e-3;
    all_pass &= pass_energy;
    println!(
        "modespace energy constants: gaussian {:.6e} vs oracle {:.6e}; \
         loop {:.6e} vs -oracle {:.6e} {}",
        gauss_report.value,
        gauss_oracle,
        loop_report.value,
        -loop_oracle,
        if pass_energy { "PASS" } else { "FAIL" }
    );

    let summary = ModespaceSummary {
        sources: source_reports,
        lambda3_max_relative: lambda3_max,
        pass_lambda3,
        reality_residue: reality,
        pass_reality,
        gaussian_c: gauss_report.value,
        gaussian_c_oracle: gauss_oracle,
        loop_c: loop_report.value,
        loop_c_oracle: -loop_oracle,
        pass_energy_constant: pass_energy,
        pass: all_pass,
    };
    let dir = out_dir(&config, &args.common);
    let path = write_json(&summary, &dir, "modespace_report.json")?;
    println!("wrote {}", path.display());
    if !all_pass {
        return Err(Error::InvalidInput(
            "modespace consistency check failed".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceStudy {
    study: String,
    levels: Vec<f64>,
    errors: Vec<f64>,
    observed_orders: Vec<f64>,
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<(), Error> {
    let config = load_config(&args.common)?;
    let constants = config.constants();
    let levels = args.levels.max(2);
    let mut studies = Vec::new();
    let dir = out_dir(&config, &args.common);
    let mut table = CsvTable::new(
        "convergence",
        &["study", "level", "parameter", "error", "observed_order"],
    );

    // 1. potentials: finite-solenoid circulation against the ideal flux,
    //    discretization doubling; plus the analytic path at machine floor
    {
        let a = 0.05;
        let length = 5.0;
        let n_turns = 40.0;
        let current = 2.0;
        let ideal = constants.mu0 * n_turns * current * std::f64::consts::PI * a * a;
        let w = 1.6 * a;
        let loop_points = vec![
            Vec3::new(w, w, 0.0),
            Vec3::new(-w, w, 0.0),
            Vec3::new(-w, -w, 0.0),
            Vec3::new(w, -w, 0.0),
            Vec3::new(w, w, 0.0),
        ];
        let finite = SourceConfiguration::with_elements(
            constants,
            vec![SourceElement::new(
                ElementKind::FiniteSolenoid {
                    center: Vec3::zeros(),
                    axis: Vec3::new(0.0, 0.0, 1.0),
                    radius: a,
                    length,
                    winding_density: n_turns,
                },
                current,
            )],
        );
        let analytic = SourceConfiguration::with_elements(
            constants,
            vec![SourceElement::new(
                ElementKind::InfiniteSolenoidAnalytic {
                    center: Vec3::zeros(),
                    axis: Vec3::new(0.0, 0.0, 1.0),
                    radius: a,
                    winding_density: n_turns,
                },
                current,
            )],
        );
        let mut errors = Vec::new();
        let mut params = Vec::new();
        for lev in 0..levels {
            let loops = 25 * (1 << lev);
            let segments = 32 * (1 << lev);
            let settings = QuadratureSettings {
                solenoid_loops: loops,
                loop_segments: segments,
                rel_tol: 1e-9,
                ..Default::default()
            };
            let circ = circulation(&finite, &loop_points, 0.0, &settings)?;
            // self-convergence is contaminated by the physical end effect;
            // measure against the richest discretization's own limit via
            // the analytic reference minus the known end-effect plateau
            errors.push((circ - ideal).abs() / ideal);
            params.push(loops as f64);
            let circ_analytic = circulation(&analytic, &loop_points, 0.0, &settings)?;
            println!(
                "convergence potentials level {lev}: loops {loops} segments {segments} \
                 |circ/ideal - 1| = {:.3e} (analytic path residual {:.3e})",
                errors[lev],
                (circ_analytic - ideal).abs() / ideal
            );
        }
        let orders = observed_orders(&errors);
        push_study(&mut table, "finite_solenoid_circulation", &params, &errors, &orders);
        studies.push(ConvergenceStudy {
            study: "finite_solenoid_circulation".into(),
            levels: params,
            errors,
            observed_orders: orders,
        });
    }

    // 2. k-space: kernel-identity residual against 1/(4 pi r)
    {
        let settings = config.numerics.quadrature();
        let r = 1.0;
        let mut errors = Vec::new();
        let mut params = Vec::new();
        for lev in 0..levels {
            let k_max = 50.0 * (1 << lev) as f64;
            let report = kernel_identity_check(r, k_max, &settings)?;
            let value = report.kspace.values.last().copied().unwrap();
            errors.push((value - report.exact).abs() / report.exact);
            params.push(k_max);
        }
        let orders = observed_orders(&errors);
        for (lev, e) in errors.iter().enumerate() {
            println!(
                "convergence kernel level {lev}: k_max {} residual {:.3e}",
                params[lev], e
            );
        }
        push_study(&mut table, "kernel_identity", &params, &errors, &orders);
        studies.push(ConvergenceStudy {
            study: "kernel_identity".into(),
            levels: params,
            errors,
            observed_orders: orders,
        });
    }

    // 3. phases: k-space reconstruction of a point-charge potential, the
    //    building block of the phase integrands, against the Coulomb value
    {
        let settings = config.numerics.quadrature();
        let source = SourceConfiguration::with_elements(
            constants,
            vec![SourceElement::new(
                ElementKind::PointCharge {
                    position: Vec3::zeros(),
                },
                1.0,
            )],
        );
        let r = Vec3::new(0.8, 0.0, 0.0);
        let exact = 1.0 / (4.0 * std::f64::consts::PI * constants.epsilon0 * 0.8);
        let mut errors = Vec::new();
        let mut params = Vec::new();
        for lev in 0..levels {
            let k_max = 50.0 * (1 << lev) as f64;
            let rec =
                modespace::reconstruct_potentials_kspace(&source, &r, 0.0, k_max, 1, &settings)?;
            errors.push((rec.v_levels[0] - exact).abs() / exact);
            params.push(k_max);
        }
        let orders = observed_orders(&errors);
        for (lev, e) in errors.iter().enumerate() {
            println!(
                "convergence kspace-potential level {lev}: k_max {} residual {:.3e}",
                params[lev], e
            );
        }
        push_study(&mut table, "kspace_reconstruction", &params, &errors, &orders);
        studies.push(ConvergenceStudy {
            study: "kspace_reconstruction".into(),
            levels: params,
            errors,
            observed_orders: orders,
        });
    }

    let csv_path = table.write_to(&dir, "convergence.csv")?;
    let json_path = write_json(&studies, &dir, "convergence.json")?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|pair| {
            if pair[1] > 0.0 && pair[0] > 0.0 {
                (pair[0] / pair[1]).log2()
            } else {
                f64::NAN
            }
        })
        .collect()
}

fn push_study(
    table: &mut CsvTable,
    study: &str,
    params: &[f64],
    errors: &[f64],
    orders: &[f64],
) {
    for (lev, (p, e)) in params.iter().zip(errors).enumerate() {
        let order = if lev == 0 { f64::NAN } else { orders[lev - 1] };
        table.push_row(vec![
            study.to_string(),
            lev.to_string(),
            fmt_f64(*p),
            fmt_f64(*e),
            fmt_f64(order),
        ]);
    }
}

fn cmd_presets(args: PresetsArgs) -> Result<(), Error> {
    let units = match args.units.as_str() {
        "si" => UnitSystem::Si,
        "reduced" => UnitSystem::Reduced,
        other => {
            return Err(Error::ConfigError(format!(
                "unknown units {other:?}; expected si or reduced"
            )))
        }
    };
    #[derive(Serialize)]
    struct Presets {
        magnetic: abqed::interferometer::MagneticPreset,
        electric: abqed::interferometer::ElectricPreset,
        electrodynamic: abqed::interferometer::ElectrodynamicPreset,
    }
    let presets = Presets {
        magnetic: default_magnetic(units),
        electric: default_electric(units),
        electrodynamic: default_electrodynamic(units),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&presets).unwrap());
    } else {
        println!("available presets ({:?} units):\n", units);
        println!("magnetic: closed two-path loop around a solenoid");
        println!("{}\n", toml::to_string_pretty(&presets.magnetic).unwrap());
        println!("electric: dwell inside pulsed spherical-capacitor cages");
        println!("{}\n", toml::to_string_pretty(&presets.electric).unwrap());
        println!("electrodynamic: flux ramped while the particle dwells");
        println!(
            "{}",
            toml::to_string_pretty(&presets.electrodynamic).unwrap()
        );
    }
    Ok(())
}
