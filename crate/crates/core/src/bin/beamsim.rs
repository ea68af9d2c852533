//! Command-line front end: pattern synthesis, link simulation, codebook
//! generation, experiment presets and quadrant sweeps.

use beamsim_core::field_sim::fmt_sig9;
use beamsim_core::harness::{degree_grid, voltage_matrix_csv, SETUP1_SCENARIO};
use beamsim_core::{
    compute_phase_profile_with, generate_codebook, pattern_metrics, profile_to_configuration,
    quadrant_sweep, reflected_pattern, run_preset, simulate_link, ArrayGeometry, BeamTarget,
    Error, ExperimentPreset, IncidentWave, PhaseVoltageLaw, ReportFormat, Result, RunOptions,
    ScenarioSpec, Steering,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "beamsim",
    about = "Reflective-surface beamforming simulator and tuner",
    version
)]
struct Cli {
    /// Geometry description file (default: 12x82 grid at 14 mm pitch).
    #[arg(long, global = true)]
    geometry: Option<PathBuf>,
    /// Calibration table CSV (default: synthetic law).
    #[arg(long, global = true)]
    law: Option<PathBuf>,
    /// Scenario description file (default: the setup1 scenario).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// DAC resolution for bias quantization, 1-16 bits.
    #[arg(long, global = true, default_value_t = 8)]
    dac_bits: u32,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Incident wavefront model used by the tuner.
    #[arg(long, global = true, value_enum, default_value_t = IncidentArg::Spherical)]
    incident: IncidentArg,
    /// Focus at an exact point instead of a far-field direction.
    #[arg(long, global = true)]
    near_field: bool,
    /// Focus distance along the target direction used with --near-field.
    #[arg(long, global = true, default_value_t = 3.5)]
    focus_range: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IncidentArg {
    Spherical,
    Planar,
}

impl From<IncidentArg> for IncidentWave {
    fn from(value: IncidentArg) -> Self {
        match value {
            IncidentArg::Spherical => IncidentWave::Spherical,
            IncidentArg::Planar => IncidentWave::Planar,
        }
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Target polar angle from boresight, degrees.
    #[arg(long)]
    theta: f64,
    /// Target azimuth from +x, degrees.
    #[arg(long)]
    phi: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the reflected pattern for one steering target.
    Pattern {
        #[command(flatten)]
        target: TargetArgs,
        /// Sampling step over the front hemisphere, degrees.
        #[arg(long, default_value_t = 0.5)]
        grid_step: f64,
        /// Main-lobe disc radius for the sidelobe metric, degrees.
        #[arg(long, default_value_t = 25.0)]
        mainlobe_radius: f64,
    },
    /// Simulate the link of the scenario under one steering target.
    Link {
        #[command(flatten)]
        target: TargetArgs,
        /// 8-PSK symbols per receiver.
        #[arg(long, default_value_t = 512)]
        symbols: usize,
    },
    /// Generate a steering codebook over a theta x phi grid.
    Codebook {
        /// Polar angles, degrees (comma-separated).
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        /// Azimuth angles, degrees (comma-separated).
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<f64>,
        /// Also write one rows x cols voltage matrix file per entry.
        #[arg(long)]
        voltmaps: bool,
    },
    /// Run a shipped experiment preset end to end.
    Preset {
        /// Preset name: setup1 or setup2.
        name: String,
        /// Pattern sampling step, degrees.
        #[arg(long, default_value_t = 1.0)]
        grid_step: f64,
        /// Main-lobe disc radius for the sidelobe metric, degrees.
        #[arg(long, default_value_t = 25.0)]
        mainlobe_radius: f64,
        /// 8-PSK symbols per receiver.
        #[arg(long, default_value_t = 512)]
        symbols: usize,
        /// Direct-path gain applied to every receiver, dB (default keeps the
        /// scenario's per-receiver settings).
        #[arg(long)]
        leakage_db: Option<f64>,
    },
    /// Trace a quadrant-by-quadrant reconfiguration between two targets.
    Sweep {
        #[arg(long)]
        old_theta: f64,
        #[arg(long)]
        old_phi: f64,
        #[arg(long)]
        new_theta: f64,
        #[arg(long)]
        new_phi: f64,
        /// Quadrant update order, a permutation of 0,1,2,3.
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2, 3])]
        order: Vec<usize>,
        /// 8-PSK symbols per receiver.
        #[arg(long, default_value_t = 512)]
        symbols: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn load_inputs(cli: &Cli) -> Result<(ArrayGeometry, PhaseVoltageLaw, ScenarioSpec)> {
    let geometry = match &cli.geometry {
        Some(path) => ArrayGeometry::load(path)?,
        None => ArrayGeometry::default_prototype(),
    };
    let law = match &cli.law {
        Some(path) => PhaseVoltageLaw::load(path)?,
        None => PhaseVoltageLaw::synthetic_default(),
    };
    let mut scenario = match &cli.scenario {
        Some(path) => ScenarioSpec::load(path)?,
        None => ScenarioSpec::parse(SETUP1_SCENARIO)?,
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    Ok((geometry, law, scenario))
}

fn steering_for(cli: &Cli, theta: f64, phi: f64) -> Result<Steering> {
    let target = BeamTarget::new(theta, phi)?;
    if cli.near_field {
        let v = target.unit_vector();
        Ok(Steering::Focus([
            cli.focus_range * v[0],
            cli.focus_range * v[1],
            cli.focus_range * v[2],
        ]))
    } else {
        Ok(Steering::Direction(target))
    }
}

fn write_file(out_dir: &PathBuf, name: &str, contents: String) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<()> {
    let (geometry, law, scenario) = load_inputs(cli)?;
    let incident: IncidentWave = cli.incident.into();
    match &cli.command {
        Command::Pattern { target, grid_step, mainlobe_radius } => {
            let beam = BeamTarget::new(target.theta, target.phi)?;
            let steering = steering_for(cli, target.theta, target.phi)?;
            let profile = compute_phase_profile_with(
                &geometry,
                &scenario.tx,
                &steering,
                incident,
                scenario.carrier_hz,
            )?;
            let config = profile_to_configuration(&profile, &law, cli.dac_bits)?;
            let pattern = reflected_pattern(
                &geometry,
                &config,
                &scenario.tx,
                scenario.carrier_hz,
                &degree_grid(90.0, *grid_step),
                &degree_grid(360.0, *grid_step),
                incident,
            )?;
            let metrics = pattern_metrics(&pattern, &beam, *mainlobe_radius)?;
            let path = write_file(&cli.out, "pattern.csv", pattern.to_csv())?;
            println!(
                "pattern for ({}, {}) deg: peak ({}, {}) deg, error {:.3} deg, \
                 sidelobe contrast {:.3} dB, saturated {}/{}",
                target.theta,
                target.phi,
                metrics.peak_theta_deg,
                metrics.peak_phi_deg,
                metrics.peak_error_deg,
                metrics.sidelobe_contrast_db,
                config.saturated_count,
                config.cell_count(),
            );
            println!("wrote {}", path.display());
        }
        Command::Link { target, symbols } => {
            let steering = steering_for(cli, target.theta, target.phi)?;
            let profile = compute_phase_profile_with(
                &geometry,
                &scenario.tx,
                &steering,
                incident,
                scenario.carrier_hz,
            )?;
            let config = profile_to_configuration(&profile, &law, cli.dac_bits)?;
            let full = scenario.clone().into_scenario(geometry, law, config)?;
            let report = simulate_link(&full, *symbols)?;
            let psd = write_file(&cli.out, "psd.csv", report.psd_csv())?;
            let con = write_file(&cli.out, "constellation.csv", report.constellation_csv())?;
            println!("link under target ({}, {}) deg:", target.theta, target.phi);
            for rx in &report.rxs {
                println!(
                    "  {:<5} power {:>9.3} dB   EVM {:>7.3} %",
                    rx.name, rx.power_db, rx.evm_pct
                );
            }
            println!("wrote {} and {}", psd.display(), con.display());
        }
        Command::Codebook { theta, phi, voltmaps } => {
            let entries = generate_codebook(
                &geometry,
                &scenario.tx,
                &law,
                theta,
                phi,
                scenario.carrier_hz,
                cli.dac_bits,
            )?;
            let mut csv = String::from("theta_deg,phi_deg");
            for n in 0..geometry.cell_count() {
                let _ = write!(csv, ",v{n}");
            }
            csv.push('\n');
            for e in &entries {
                let _ = write!(csv, "{},{}", fmt_sig9(e.target.theta_deg), fmt_sig9(e.target.phi_deg));
                for v in &e.configuration.voltages {
                    let _ = write!(csv, ",{}", fmt_sig9(*v));
                }
                csv.push('\n');
            }
            let path = write_file(&cli.out, "codebook.csv", csv)?;
            if *voltmaps {
                for (i, e) in entries.iter().enumerate() {
                    write_file(
                        &cli.out,
                        &format!("codebook_{i}_voltmap.csv"),
                        voltage_matrix_csv(&geometry, &e.configuration),
                    )?;
                }
            }
            println!("wrote {} entries to {}", entries.len(), path.display());
        }
        Command::Preset { name, grid_step, mainlobe_radius, symbols, leakage_db } => {
            let preset = ExperimentPreset::by_name(name)?;
            let opts = RunOptions {
                dac_bits: cli.dac_bits,
                incident,
                near_field: cli.near_field,
                grid_step_deg: *grid_step,
                mainlobe_radius_deg: *mainlobe_radius,
                n_symbols: *symbols,
                seed: cli.seed,
                direct_override: leakage_db.map(beamsim_core::DirectPath::GainDb),
            };
            let run = run_preset(&preset, &geometry, &law, &opts)?;
            let (files, table) = beamsim_core::emit_reports(&run, &cli.out, ReportFormat::Both)?;
            print!("{table}");
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { old_theta, old_phi, new_theta, new_phi, order, symbols } => {
            let order: [usize; 4] = order.as_slice().try_into().map_err(|_| {
                Error::InvalidArgument(format!("order needs exactly 4 entries, got {}", order.len()))
            })?;
            let old = steering_for(cli, *old_theta, *old_phi)?;
            let new = steering_for(cli, *new_theta, *new_phi)?;
            let opts = RunOptions {
                dac_bits: cli.dac_bits,
                incident,
                n_symbols: *symbols,
                seed: cli.seed,
                ..Default::default()
            };
            let trace = quadrant_sweep(&geometry, &law, &scenario, &old, &new, order, &opts)?;
            let path = write_file(&cli.out, "sweep.csv", trace.to_csv())?;
            println!("sweep ({old_theta}, {old_phi}) -> ({new_theta}, {new_phi}) deg:");
            for step in &trace.steps {
                let powers: Vec<String> = trace
                    .rx_names
                    .iter()
                    .zip(&step.power_db)
                    .map(|(n, p)| format!("{n} {p:.3} dB"))
                    .collect();
                println!("  step {}: {}", step.step, powers.join(", "));
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
