//! Experiment presets and batch runs: the two shipped indoor set-ups,
//! quadrant-stepped reconfiguration traces, and deterministic result export.

use crate::array::{estimate_bias_power, ArrayGeometry};
use crate::beamformer::{
    compute_phase_profile_with, profile_to_configuration, BeamTarget, IncidentWave,
    RisConfiguration, Steering,
};
use crate::error::{Error, Result};
use crate::field_sim::{
    fmt_sig9, pattern_metrics, reflected_pattern, ris_cell_terms, simulate_link, FieldPattern,
    LinkReport, PatternMetrics,
};
use crate::phase_law::PhaseVoltageLaw;
use crate::scenario::{DirectPath, Scenario, ScenarioSpec};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SETUP1_SCENARIO: &str = include_str!("../presets/setup1.scenario");
pub const SETUP2_SCENARIO: &str = include_str!("../presets/setup2.scenario");

/// Load and validate a scenario description file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    ScenarioSpec::load(path)
}

/// One named steering entry of a preset, tied to the receiver it targets.
#[derive(Debug, Clone)]
pub struct PresetConfiguration {
    pub name: String,
    pub target: BeamTarget,
    /// Index into the preset scenario's receiver list.
    pub target_rx: usize,
}

/// A reconstructed experiment: scenario plus named steering configurations.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: String,
    pub scenario: ScenarioSpec,
    pub configurations: Vec<PresetConfiguration>,
}

impl ExperimentPreset {
    /// Two alternating beams: A at (27, 140) toward RX1/RX2, B at (25, 40)
    /// toward RX3.
    pub fn setup1() -> Self {
        let scenario = ScenarioSpec::parse(SETUP1_SCENARIO).expect("embedded scenario is valid");
        let preset = Self {
            name: "setup1".into(),
            scenario,
            configurations: vec![
                PresetConfiguration {
                    name: "A".into(),
                    target: BeamTarget::new(27.0, 140.0).unwrap(),
                    target_rx: 0,
                },
                PresetConfiguration {
                    name: "B".into(),
                    target: BeamTarget::new(25.0, 40.0).unwrap(),
                    target_rx: 2,
                },
            ],
        };
        preset.validate().expect("embedded preset is valid");
        preset
    }

    /// Three distinct beams, one per receiver. The third steering angle is a
    /// reconstruction chosen inside the 45-degree cone.
    pub fn setup2() -> Self {
        let scenario = ScenarioSpec::parse(SETUP2_SCENARIO).expect("embedded scenario is valid");
        let preset = Self {
            name: "setup2".into(),
            scenario,
            configurations: vec![
                PresetConfiguration {
                    name: "A".into(),
                    target: BeamTarget::new(27.0, 140.0).unwrap(),
                    target_rx: 0,
                },
                PresetConfiguration {
                    name: "B".into(),
                    target: BeamTarget::new(25.0, 40.0).unwrap(),
                    target_rx: 1,
                },
                PresetConfiguration {
                    name: "C".into(),
                    target: BeamTarget::new(30.0, 90.0).unwrap(),
                    target_rx: 2,
                },
            ],
        };
        preset.validate().expect("embedded preset is valid");
        preset
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "setup1" => Ok(Self::setup1()),
            "setup2" => Ok(Self::setup2()),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (expected setup1 or setup2)"
            ))),
        }
    }

    /// All steering targets must stay within 45 degrees of boresight and
    /// point at an existing receiver.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        for cfg in &self.configurations {
            if cfg.target.theta_deg > 45.0 {
                return Err(Error::ConfigInvalid(format!(
                    "preset {} configuration {}: target {} deg outside the 45 deg cone",
                    self.name, cfg.name, cfg.target.theta_deg
                )));
            }
            if cfg.target_rx >= self.scenario.rxs.len() {
                return Err(Error::ConfigInvalid(format!(
                    "preset {} configuration {}: target rx {} out of range",
                    self.name, cfg.name, cfg.target_rx
                )));
            }
        }
        Ok(())
    }
}

/// Knobs shared by preset runs and sweeps.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub dac_bits: u32,
    pub incident: IncidentWave,
    /// Focus each configuration at its target receiver position instead of
    /// the far-field direction.
    pub near_field: bool,
    /// Pattern sampling step in degrees over the full front hemisphere.
    pub grid_step_deg: f64,
    /// Main-lobe disc radius for the sidelobe contrast metric.
    pub mainlobe_radius_deg: f64,
    pub n_symbols: usize,
    /// Overrides the scenario seed when set.
    pub seed: Option<u64>,
    /// Applied to every receiver when set (leakage studies).
    pub direct_override: Option<DirectPath>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dac_bits: 8,
            incident: IncidentWave::Spherical,
            near_field: false,
            grid_step_deg: 1.0,
            mainlobe_radius_deg: 25.0,
            n_symbols: 512,
            seed: None,
            direct_override: None,
        }
    }
}

/// Uniform degree grid `[0, limit)` with the given step.
pub fn degree_grid(limit: f64, step: f64) -> Vec<f64> {
    let n = (limit / step).round() as usize;
    (0..n).map(|i| i as f64 * step).collect()
}

/// Everything computed for one preset configuration.
#[derive(Debug, Clone)]
pub struct ConfigRunResult {
    pub name: String,
    pub target: BeamTarget,
    pub target_rx: usize,
    pub configuration: RisConfiguration,
    pub pattern: FieldPattern,
    pub metrics: PatternMetrics,
    pub report: LinkReport,
}

/// A full preset run.
#[derive(Debug, Clone)]
pub struct PresetRun {
    pub preset: String,
    pub geometry: ArrayGeometry,
    pub rx_names: Vec<String>,
    pub results: Vec<ConfigRunResult>,
    /// Bias power of the all-cells-at-5-V stress configuration, 1 fA leak.
    pub stress_bias_power_w: f64,
}

fn apply_overrides(mut spec: ScenarioSpec, opts: &RunOptions) -> ScenarioSpec {
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(direct) = opts.direct_override {
        for rx in &mut spec.rxs {
            rx.direct = direct;
        }
    }
    spec
}

/// Run every configuration of a preset: tuning profile, bias configuration,
/// reflected pattern with metrics, and a link report.
pub fn run_preset(
    preset: &ExperimentPreset,
    geometry: &ArrayGeometry,
    law: &PhaseVoltageLaw,
    opts: &RunOptions,
) -> Result<PresetRun> {
    preset.validate()?;
    let spec = apply_overrides(preset.scenario.clone(), opts);
    let theta_grid = degree_grid(90.0, opts.grid_step_deg);
    let phi_grid = degree_grid(360.0, opts.grid_step_deg);
    let mut results = Vec::with_capacity(preset.configurations.len());
    for cfg in &preset.configurations {
        let steering = if opts.near_field {
            Steering::Focus(spec.rxs[cfg.target_rx].position)
        } else {
            Steering::Direction(cfg.target)
        };
        let profile =
            compute_phase_profile_with(geometry, &spec.tx, &steering, opts.incident, spec.carrier_hz)?;
        let configuration = profile_to_configuration(&profile, law, opts.dac_bits)?;
        let pattern = reflected_pattern(
            geometry,
            &configuration,
            &spec.tx,
            spec.carrier_hz,
            &theta_grid,
            &phi_grid,
            opts.incident,
        )?;
        let metrics = pattern_metrics(&pattern, &cfg.target, opts.mainlobe_radius_deg)?;
        let scenario = spec
            .clone()
            .into_scenario(geometry.clone(), law.clone(), configuration.clone())?;
        let report = simulate_link(&scenario, opts.n_symbols)?;
        results.push(ConfigRunResult {
            name: cfg.name.clone(),
            target: cfg.target,
            target_rx: cfg.target_rx,
            configuration,
            pattern,
            metrics,
            report,
        });
    }
    let stress_bias_power_w =
        estimate_bias_power(&vec![law.v_max; geometry.cell_count()], 1e-15)?;
    Ok(PresetRun {
        preset: preset.name.clone(),
        geometry: geometry.clone(),
        rx_names: spec.rxs.iter().map(|r| r.name.clone()).collect(),
        results,
        stress_bias_power_w,
    })
}

/// Output selection for [`emit_reports`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    Human,
    #[default]
    Both,
}

/// Write all export files for a preset run and build the human summary.
///
/// File names are deterministic: `<preset>_<config>_pattern.csv` and
/// `_voltages.csv` per configuration, plus shared `<preset>_psd.csv`,
/// `<preset>_constellation.csv` and `<preset>_summary.csv`. Identical runs
/// produce byte-identical files.
pub fn emit_reports(
    run: &PresetRun,
    out_dir: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(Vec<PathBuf>, String)> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let write = |name: String, contents: String| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    };
    if format != ReportFormat::Human {
        for r in &run.results {
            files.push(write(format!("{}_{}_pattern.csv", run.preset, r.name), r.pattern.to_csv())?);
            files.push(write(
                format!("{}_{}_voltages.csv", run.preset, r.name),
                voltage_matrix_csv(&run.geometry, &r.configuration),
            )?);
        }
        files.push(write(format!("{}_psd.csv", run.preset), psd_csv(run))?);
        files.push(write(format!("{}_constellation.csv", run.preset), constellation_csv(run))?);
        files.push(write(format!("{}_summary.csv", run.preset), summary_csv(run))?);
    }
    let table = if format == ReportFormat::Csv { String::new() } else { human_summary(run) };
    Ok((files, table))
}

/// Per-cell bias voltages as a rows x cols matrix for heat-map plotting.
pub fn voltage_matrix_csv(geometry: &ArrayGeometry, config: &RisConfiguration) -> String {
    let mut out = String::new();
    for row in 0..geometry.rows {
        for col in 0..geometry.cols {
            if col > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_sig9(config.voltages[row * geometry.cols + col]));
        }
        out.push('\n');
    }
    out
}

fn psd_csv(run: &PresetRun) -> String {
    let mut out = String::from("frequency_hz");
    for r in &run.results {
        for rx in &r.report.rxs {
            let _ = write!(out, ",{}:{}", r.name, rx.name);
        }
    }
    out.push('\n');
    let freqs = &run.results[0].report.frequencies;
    for (k, f) in freqs.iter().enumerate() {
        let _ = write!(out, "{}", fmt_sig9(*f));
        for r in &run.results {
            for rx in &r.report.rxs {
                let _ = write!(out, ",{}", fmt_sig9(rx.psd_db[k]));
            }
        }
        out.push('\n');
    }
    out
}

fn constellation_csv(run: &PresetRun) -> String {
    let mut out = String::from("config,rx,re,im\n");
    for r in &run.results {
        for rx in &r.report.rxs {
            for p in &rx.constellation {
                let _ = writeln!(out, "{},{},{},{}", r.name, rx.name, fmt_sig9(p.re), fmt_sig9(p.im));
            }
        }
    }
    out
}

fn summary_csv(run: &PresetRun) -> String {
    let mut out = String::from("metric,config,rx,value\n");
    for r in &run.results {
        let _ = writeln!(out, "peak_theta_deg,{},,{}", r.name, fmt_sig9(r.metrics.peak_theta_deg));
        let _ = writeln!(out, "peak_phi_deg,{},,{}", r.name, fmt_sig9(r.metrics.peak_phi_deg));
        let _ = writeln!(out, "peak_error_deg,{},,{}", r.name, fmt_sig9(r.metrics.peak_error_deg));
        let _ = writeln!(
            out,
            "sidelobe_contrast_db,{},,{}",
            r.name,
            fmt_sig9(r.metrics.sidelobe_contrast_db)
        );
        let _ = writeln!(out, "saturated_cells,{},,{}", r.name, r.configuration.saturated_count);
        for rx in &r.report.rxs {
            let _ = writeln!(out, "power_db,{},{},{}", r.name, rx.name, fmt_sig9(rx.power_db));
            let _ = writeln!(out, "evm_pct,{},{},{}", r.name, rx.name, fmt_sig9(rx.evm_pct));
        }
        let target = &r.report.rxs[r.target_rx];
        for (j, rx) in r.report.rxs.iter().enumerate() {
            if j != r.target_rx {
                let _ = writeln!(
                    out,
                    "contrast_db,{},{}:{},{}",
                    r.name,
                    target.name,
                    rx.name,
                    fmt_sig9(target.power_db - rx.power_db)
                );
            }
        }
    }
    let _ = writeln!(out, "bias_power_all_5v_w,,,{}", fmt_sig9(run.stress_bias_power_w));
    out
}

fn human_summary(run: &PresetRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "preset {}", run.preset);
    for r in &run.results {
        let _ = writeln!(
            out,
            "config {} -> target ({:.1}, {:.1}) deg: peak ({:.1}, {:.1}), error {:.2} deg, \
             sidelobe contrast {:.2} dB, saturated {}/{}",
            r.name,
            r.target.theta_deg,
            r.target.phi_deg,
            r.metrics.peak_theta_deg,
            r.metrics.peak_phi_deg,
            r.metrics.peak_error_deg,
            r.metrics.sidelobe_contrast_db,
            r.configuration.saturated_count,
            r.configuration.cell_count(),
        );
        for rx in &r.report.rxs {
            let _ = writeln!(
                out,
                "  {:<5} power {:>9.3} dB   EVM {:>7.3} %",
                rx.name, rx.power_db, rx.evm_pct
            );
        }
        let target = &r.report.rxs[r.target_rx];
        for (j, rx) in r.report.rxs.iter().enumerate() {
            if j != r.target_rx {
                let _ = writeln!(
                    out,
                    "  contrast {} vs {}: {:.3} dB",
                    target.name,
                    rx.name,
                    target.power_db - rx.power_db
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "bias power, all cells at 5 V, 1 fA leak: {} W",
        fmt_sig9(run.stress_bias_power_w)
    );
    out
}

/// One step of a quadrant-by-quadrant reconfiguration.
#[derive(Debug, Clone)]
pub struct SweepStep {
    pub step: usize,
    /// Which quadrants currently hold the new configuration.
    pub quadrant_on_new: [bool; 4],
    /// Magnitude of the coherent sum of the new-configuration cells toward
    /// each receiver, at the carrier.
    pub coherent_new_mag: Vec<f64>,
    /// Mean received power per receiver, dB.
    pub power_db: Vec<f64>,
}

/// Trace of a four-step reconfiguration: step 0 is the old configuration,
/// step k has the first k quadrants (in sweep order) on the new one.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub rx_names: Vec<String>,
    pub steps: Vec<SweepStep>,
}

impl SweepTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,quadrants_on_new");
        for name in &self.rx_names {
            let _ = write!(out, ",coherent_{name}");
        }
        for name in &self.rx_names {
            let _ = write!(out, ",power_db_{name}");
        }
        out.push('\n');
        for s in &self.steps {
            let on: Vec<String> = (0..4)
                .filter(|&q| s.quadrant_on_new[q])
                .map(|q| q.to_string())
                .collect();
            let _ = write!(out, "{},{}", s.step, on.join(";"));
            for v in &s.coherent_new_mag {
                let _ = write!(out, ",{}", fmt_sig9(*v));
            }
            for v in &s.power_db {
                let _ = write!(out, ",{}", fmt_sig9(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Step through a reconfiguration from `old` to `new` steering, updating
/// one quadrant at a time in the given order, and record per-step link
/// powers plus the coherent growth of the new beam.
pub fn quadrant_sweep(
    geometry: &ArrayGeometry,
    law: &PhaseVoltageLaw,
    spec: &ScenarioSpec,
    old: &Steering,
    new: &Steering,
    quadrant_order: [usize; 4],
    opts: &RunOptions,
) -> Result<SweepTrace> {
    let mut seen = [false; 4];
    for &q in &quadrant_order {
        if q > 3 || seen[q] {
            return Err(Error::InvalidArgument(format!(
                "quadrant order must be a permutation of 0..=3, got {quadrant_order:?}"
            )));
        }
        seen[q] = true;
    }
    let spec = apply_overrides(spec.clone(), opts);
    let old_profile =
        compute_phase_profile_with(geometry, &spec.tx, old, opts.incident, spec.carrier_hz)?;
    let new_profile =
        compute_phase_profile_with(geometry, &spec.tx, new, opts.incident, spec.carrier_hz)?;
    let old_cfg = profile_to_configuration(&old_profile, law, opts.dac_bits)?;
    let new_cfg = profile_to_configuration(&new_profile, law, opts.dac_bits)?;
    let mut steps = Vec::with_capacity(5);
    for step in 0..=4 {
        let mut on_new = [false; 4];
        for &q in &quadrant_order[..step] {
            on_new[q] = true;
        }
        let select = |cell: usize| -> bool {
            on_new[geometry.cells()[cell].quadrant as usize]
        };
        let n = geometry.cell_count();
        let mixed = RisConfiguration {
            voltages: (0..n)
                .map(|c| if select(c) { new_cfg.voltages[c] } else { old_cfg.voltages[c] })
                .collect(),
            achieved_phases: (0..n)
                .map(|c| {
                    if select(c) {
                        new_cfg.achieved_phases[c]
                    } else {
                        old_cfg.achieved_phases[c]
                    }
                })
                .collect(),
            achieved_gains: (0..n)
                .map(|c| if select(c) { new_cfg.achieved_gains[c] } else { old_cfg.achieved_gains[c] })
                .collect(),
            saturated_cells: (0..n)
                .map(|c| {
                    if select(c) {
                        new_cfg.saturated_cells[c]
                    } else {
                        old_cfg.saturated_cells[c]
                    }
                })
                .collect(),
            saturated_count: 0,
        };
        let mixed = RisConfiguration {
            saturated_count: mixed.saturated_cells.iter().filter(|s| **s).count(),
            ..mixed
        };
        let scenario: Scenario = spec
            .clone()
            .into_scenario(geometry.clone(), law.clone(), mixed)?;
        let report = simulate_link(&scenario, opts.n_symbols)?;
        let mut coherent = Vec::with_capacity(scenario.rxs.len());
        for rx in 0..scenario.rxs.len() {
            let terms = ris_cell_terms(&scenario, rx, scenario.carrier_hz)?;
            let sum: num_complex::Complex64 = terms
                .iter()
                .enumerate()
                .filter(|(c, _)| select(*c))
                .map(|(_, t)| *t)
                .sum();
            coherent.push(sum.norm());
        }
        steps.push(SweepStep {
            step,
            quadrant_on_new: on_new,
            coherent_new_mag: coherent,
            power_db: report.rxs.iter().map(|r| r.power_db).collect(),
        });
    }
    Ok(SweepTrace {
        rx_names: spec.rxs.iter().map(|r| r.name.clone()).collect(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::build_geometry;

    #[test]
    fn shipped_presets_validate() {
        let p1 = ExperimentPreset::setup1();
        assert_eq!(p1.scenario.rxs.len(), 3);
        assert_eq!(p1.scenario.carrier_hz, 5.25e9);
        assert_eq!(p1.configurations.len(), 2);
        let p2 = ExperimentPreset::setup2();
        assert_eq!(p2.configurations.len(), 3);
        for cfg in &p2.configurations {
            assert!(cfg.target.theta_deg <= 45.0);
        }
        assert!(ExperimentPreset::by_name("setup3").is_err());
    }

    #[test]
    fn cone_violation_rejected() {
        let mut p = ExperimentPreset::setup1();
        p.configurations[0].target = BeamTarget::new(60.0, 10.0).unwrap();
        assert!(matches!(p.validate(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn sweep_with_identical_targets_is_flat() {
        let geometry = build_geometry(4, 4, 0.014).unwrap();
        let law = PhaseVoltageLaw::synthetic_default();
        let preset = ExperimentPreset::setup2();
        let target = Steering::Direction(BeamTarget::new(20.0, 45.0).unwrap());
        let opts = RunOptions { n_symbols: 16, ..Default::default() };
        let trace = quadrant_sweep(
            &geometry,
            &law,
            &preset.scenario,
            &target,
            &target,
            [0, 1, 2, 3],
            &opts,
        )
        .unwrap();
        assert_eq!(trace.steps.len(), 5);
        for step in &trace.steps[1..] {
            assert_eq!(step.power_db, trace.steps[0].power_db);
        }
    }

    #[test]
    fn sweep_rejects_bad_order() {
        let geometry = build_geometry(2, 2, 0.014).unwrap();
        let law = PhaseVoltageLaw::synthetic_default();
        let preset = ExperimentPreset::setup1();
        let t = Steering::Direction(BeamTarget::new(10.0, 0.0).unwrap());
        let err = quadrant_sweep(
            &geometry,
            &law,
            &preset.scenario,
            &t,
            &t,
            [0, 0, 2, 3],
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn degree_grid_covers_hemisphere() {
        let g = degree_grid(90.0, 0.5);
        assert_eq!(g.len(), 180);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 89.5);
    }
}
