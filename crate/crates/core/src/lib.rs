//! Simulation and tuning library for varactor-based reconfigurable
//! reflecting surfaces: per-cell phase compensation and bias voltages for 3D
//! reflective beamforming, reflected radiation pattern synthesis, and indoor
//! link experiments with OFDM/8-PSK signals.
//!
//! The crate is organized around five areas:
//!
//! * [`array`] - the cell grid, quadrant partition and bias power estimate
//! * [`phase_law`] - voltage <-> phase(+amplitude) calibration with inversion
//! * [`beamformer`] - propagation-phase compensation, DAC quantization,
//!   codebooks
//! * [`field_sim`] - reflected patterns and end-to-end link simulation
//! * [`harness`] - experiment presets, quadrant sweeps and result export
//!
//! The `beamsim` binary fronts all of it on the command line.

pub mod array;
pub mod beamformer;
pub mod error;
pub mod field_sim;
pub mod harness;
pub mod phase_law;
pub mod scenario;

pub use array::{build_geometry, estimate_bias_power, ArrayGeometry, UnitCell};
pub use beamformer::{
    compute_phase_profile, compute_phase_profile_with, continuous_configuration,
    generate_codebook, profile_to_configuration, propagation_phase, BeamTarget, CodebookEntry,
    IncidentWave, PhaseProfile, RisConfiguration, Steering, TxPlacement, SPEED_OF_LIGHT,
};
pub use error::{Error, Result};
pub use field_sim::{
    link_gain, pattern_metrics, received_power_contrast, reflected_pattern, simulate_link,
    FieldPattern, LinkReport, PatternMetrics, RxLinkReport,
};
pub use harness::{
    emit_reports, load_scenario, quadrant_sweep, run_preset, ExperimentPreset, PresetRun,
    ReportFormat, RunOptions, SweepTrace,
};
pub use phase_law::{PhaseVoltageLaw, PhaseVoltageSample};
pub use scenario::{DirectPath, MultipathTap, RxSpec, Scenario, ScenarioSpec};
