//! Per-cell reflective-beamforming tuning: two-segment propagation phase,
//! compensation profile, law inversion with DAC quantization, and codebook
//! generation.
//!
//! The propagation phase of cell `n` toward a far-field direction `v` is
//! `2*pi*(||cell_n - tx|| - w_n . v)/lambda`: the exact spherical-wavefront
//! distance from the transmitter plus the far-field reduction of the
//! cell-to-receiver segment (the common range term drops out). The
//! compensation phase is its negation, so every cell's contribution arrives
//! in phase at the target.

use crate::array::ArrayGeometry;
use crate::error::{Error, Result};
use crate::phase_law::PhaseVoltageLaw;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Far-field steering direction: polar angle from boresight (+z) and
/// azimuth from +x in the array plane, both degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamTarget {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl BeamTarget {
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !(0.0..90.0).contains(&theta_deg) {
            return Err(Error::InvalidArgument(format!(
                "theta must be in [0, 90) deg, got {theta_deg}"
            )));
        }
        if !(0.0..360.0).contains(&phi_deg) {
            return Err(Error::InvalidArgument(format!(
                "phi must be in [0, 360) deg, got {phi_deg}"
            )));
        }
        Ok(Self { theta_deg, phi_deg })
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        direction_unit_vector(self.theta_deg, self.phi_deg)
    }
}

/// Unit vector for a (theta, phi) direction in degrees.
pub fn direction_unit_vector(theta_deg: f64, phi_deg: f64) -> [f64; 3] {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    [st * cp, st * sp, ct]
}

/// Transmitter placement in the array frame (must sit in front of the
/// surface, z > 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxPlacement {
    pub position: [f64; 3],
}

impl TxPlacement {
    pub fn new(position: [f64; 3]) -> Result<Self> {
        if !(position[2] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transmitter must be in front of the array (z > 0), got z = {}",
                position[2]
            )));
        }
        Ok(Self { position })
    }

    /// Boresight placement at distance `d`.
    pub fn boresight(d: f64) -> Result<Self> {
        Self::new([0.0, 0.0, d])
    }
}

/// How the incident wavefront is modeled when computing the tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncidentWave {
    /// Exact per-cell distance from the transmitter (default).
    #[default]
    Spherical,
    /// Plane wave arriving from the transmitter direction.
    Planar,
}

/// What the reflected beam is steered at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Steering {
    /// Far-field direction.
    Direction(BeamTarget),
    /// Exact focus point (radiating near field), z > 0.
    Focus([f64; 3]),
}

/// Per-cell compensation phases in radians, wrapped to [0, 2*pi).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub frequency: f64,
    pub phases: Vec<f64>,
}

/// A bias configuration for the whole surface together with the phases and
/// reflection gains it actually achieves through the calibration law.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfiguration {
    pub voltages: Vec<f64>,
    /// Achieved compensation phase per cell, radians in [0, 2*pi).
    pub achieved_phases: Vec<f64>,
    /// Achieved reflection gain per cell, linear in (0, 1].
    pub achieved_gains: Vec<f64>,
    /// Cells whose phase target fell outside the law's span.
    pub saturated_cells: Vec<bool>,
    pub saturated_count: usize,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Unwrapped two-segment propagation phase (radians) of cell `n`.
///
/// Constant offsets common to all cells are dropped where the model allows
/// it (plane-wave incidence, far-field target): beamforming only needs the
/// per-cell differences.
pub fn path_phase_unwrapped(
    geometry: &ArrayGeometry,
    tx: &TxPlacement,
    steering: &Steering,
    incident: IncidentWave,
    wavelength: f64,
    n: usize,
) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be > 0, got {wavelength}"
        )));
    }
    let w = geometry.cell_position_3d(n)?;
    let inbound = match incident {
        IncidentWave::Spherical => distance(w, tx.position),
        IncidentWave::Planar => {
            // Phase of a plane wave from the transmitter direction, relative
            // to the array center.
            let d = distance([0.0; 3], tx.position);
            -(w[0] * tx.position[0] + w[1] * tx.position[1] + w[2] * tx.position[2]) / d
        }
    };
    let outbound = match steering {
        Steering::Direction(target) => {
            let v = target.unit_vector();
            -(w[0] * v[0] + w[1] * v[1] + w[2] * v[2])
        }
        Steering::Focus(p) => distance(w, *p),
    };
    Ok(TAU * (inbound + outbound) / wavelength)
}

/// Propagation phase of cell `n` toward a far-field target with spherical
/// incidence, wrapped to [0, 2*pi).
pub fn propagation_phase(
    geometry: &ArrayGeometry,
    tx: &TxPlacement,
    target: &BeamTarget,
    wavelength: f64,
    n: usize,
) -> Result<f64> {
    path_phase_unwrapped(
        geometry,
        tx,
        &Steering::Direction(*target),
        IncidentWave::Spherical,
        wavelength,
        n,
    )
    .map(|a| a.rem_euclid(TAU))
}

/// Compensation profile for an arbitrary steering/incidence model:
/// `phases[n] = (-alpha_n) mod 2*pi` with `lambda = c / frequency`.
pub fn compute_phase_profile_with(
    geometry: &ArrayGeometry,
    tx: &TxPlacement,
    steering: &Steering,
    incident: IncidentWave,
    frequency: f64,
) -> Result<PhaseProfile> {
    if !(frequency > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be > 0, got {frequency}"
        )));
    }
    let wavelength = SPEED_OF_LIGHT / frequency;
    let phases = (0..geometry.cell_count())
        .map(|n| {
            path_phase_unwrapped(geometry, tx, steering, incident, wavelength, n)
                .map(|a| (-a).rem_euclid(TAU))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseProfile { frequency, phases })
}

/// Compensation profile for a far-field target with spherical incidence.
pub fn compute_phase_profile(
    geometry: &ArrayGeometry,
    tx: &TxPlacement,
    target: &BeamTarget,
    frequency: f64,
) -> Result<PhaseProfile> {
    compute_phase_profile_with(
        geometry,
        tx,
        &Steering::Direction(*target),
        IncidentWave::Spherical,
        frequency,
    )
}

impl RisConfiguration {
    /// Reference configuration that applies the profile exactly with ideal
    /// unit reflection gain, bypassing the calibration law. Used as the
    /// loss-free baseline in pattern and quantization studies.
    pub fn ideal(profile: &PhaseProfile) -> Self {
        let n = profile.phases.len();
        Self {
            voltages: vec![0.0; n],
            achieved_phases: profile.phases.clone(),
            achieved_gains: vec![1.0; n],
            saturated_cells: vec![false; n],
            saturated_count: 0,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.voltages.len()
    }
}

fn configuration_from_voltages(
    profile: &PhaseProfile,
    law: &PhaseVoltageLaw,
    volts: Vec<f64>,
    saturated_cells: Vec<bool>,
) -> Result<RisConfiguration> {
    let mut achieved_phases = Vec::with_capacity(volts.len());
    let mut achieved_gains = Vec::with_capacity(volts.len());
    for &v in &volts {
        achieved_phases.push(law.phase_of_voltage(v)?.to_radians().rem_euclid(TAU));
        achieved_gains.push(law.amplitude_of_voltage(v)?);
    }
    let saturated_count = saturated_cells.iter().filter(|s| **s).count();
    debug_assert_eq!(profile.phases.len(), volts.len());
    Ok(RisConfiguration {
        voltages: volts,
        achieved_phases,
        achieved_gains,
        saturated_cells,
        saturated_count,
    })
}

/// Invert the law for every cell and quantize the bias to the nearest of
/// `2^dac_bits` uniform levels over [0, v_max] (ties round up). Achieved
/// phases and gains are re-derived from the quantized voltage.
pub fn profile_to_configuration(
    profile: &PhaseProfile,
    law: &PhaseVoltageLaw,
    dac_bits: u32,
) -> Result<RisConfiguration> {
    if !(1..=16).contains(&dac_bits) {
        return Err(Error::InvalidArgument(format!(
            "dac_bits must be in [1, 16], got {dac_bits}"
        )));
    }
    let levels = (1u32 << dac_bits) as f64;
    let step = law.v_max / (levels - 1.0);
    let mut volts = Vec::with_capacity(profile.phases.len());
    let mut saturated = Vec::with_capacity(profile.phases.len());
    for &phase in &profile.phases {
        let inv = law.voltage_of_phase(phase.to_degrees());
        // f64::round ties away from zero, which is "up" for voltages >= 0.
        let q = ((inv.volts / step).round() * step).clamp(0.0, law.v_max);
        volts.push(q);
        saturated.push(inv.saturated);
    }
    configuration_from_voltages(profile, law, volts, saturated)
}

/// Law inversion without DAC quantization: the continuous-bias baseline.
pub fn continuous_configuration(
    profile: &PhaseProfile,
    law: &PhaseVoltageLaw,
) -> Result<RisConfiguration> {
    let mut volts = Vec::with_capacity(profile.phases.len());
    let mut saturated = Vec::with_capacity(profile.phases.len());
    for &phase in &profile.phases {
        let inv = law.voltage_of_phase(phase.to_degrees());
        volts.push(inv.volts);
        saturated.push(inv.saturated);
    }
    configuration_from_voltages(profile, law, volts, saturated)
}

/// One steering entry of a pre-computed beam codebook.
#[derive(Debug, Clone)]
pub struct CodebookEntry {
    pub target: BeamTarget,
    pub configuration: RisConfiguration,
}

/// Generate one configuration per (theta, phi) grid point, theta-major
/// order. Grid points are evaluated in parallel; the output order is fixed
/// by the grids alone.
pub fn generate_codebook(
    geometry: &ArrayGeometry,
    tx: &TxPlacement,
    law: &PhaseVoltageLaw,
    theta_grid_deg: &[f64],
    phi_grid_deg: &[f64],
    frequency: f64,
    dac_bits: u32,
) -> Result<Vec<CodebookEntry>> {
    if theta_grid_deg.is_empty() || phi_grid_deg.is_empty() {
        return Err(Error::InvalidArgument("codebook grids must be non-empty".into()));
    }
    let mut targets = Vec::with_capacity(theta_grid_deg.len() * phi_grid_deg.len());
    for &theta in theta_grid_deg {
        for &phi in phi_grid_deg {
            targets.push(BeamTarget::new(theta, phi)?);
        }
    }
    targets
        .into_par_iter()
        .map(|target| {
            let profile = compute_phase_profile(geometry, tx, &target, frequency)?;
            let configuration = profile_to_configuration(&profile, law, dac_bits)?;
            Ok(CodebookEntry { target, configuration })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::build_geometry;
    use crate::phase_law::PhaseVoltageSample;

    const LAMBDA: f64 = SPEED_OF_LIGHT / 5.25e9;

    fn wrap_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    #[test]
    fn center_cell_one_wavelength_tx_wraps_to_zero() {
        let g = build_geometry(1, 1, 0.014).unwrap();
        let tx = TxPlacement::boresight(LAMBDA).unwrap();
        let t = BeamTarget::new(35.0, 10.0).unwrap();
        let a = propagation_phase(&g, &tx, &t, LAMBDA, 0).unwrap();
        assert!(wrap_dist(a, 0.0) < 1e-9, "alpha = {a}");
    }

    #[test]
    fn boresight_target_leaves_only_spherical_term() {
        let g = build_geometry(4, 4, 0.014).unwrap();
        let tx = TxPlacement::boresight(3.2).unwrap();
        let t = BeamTarget::new(0.0, 0.0).unwrap();
        for n in 0..g.cell_count() {
            let a = propagation_phase(&g, &tx, &t, LAMBDA, n).unwrap();
            let p = g.cell_position_3d(n).unwrap();
            let d1 = (p[0] * p[0] + p[1] * p[1] + 3.2 * 3.2).sqrt();
            assert!(wrap_dist(a, (TAU * d1 / LAMBDA).rem_euclid(TAU)) < 1e-9);
        }
    }

    // Regression constant frozen from an extended-precision evaluation:
    // cell at (0.014, 0, 0), boresight TX at 3.2 m, target (25 deg, 0 deg),
    // 5.25 GHz.
    #[test]
    fn propagation_phase_regression_constant() {
        let g = build_geometry(1, 3, 0.014).unwrap();
        // cells at x = -0.014, 0, +0.014; take the +x one
        let tx = TxPlacement::boresight(3.2).unwrap();
        let t = BeamTarget::new(25.0, 0.0).unwrap();
        let a = propagation_phase(&g, &tx, &t, LAMBDA, 2).unwrap();
        assert!(
            wrap_dist(a, 5.879120853364623) < 1e-9,
            "alpha = {a}, expected 5.879120853364623"
        );
    }

    #[test]
    fn profile_negates_propagation_phase() {
        let g = build_geometry(3, 5, 0.014).unwrap();
        let tx = TxPlacement::new([0.3, -0.2, 2.0]).unwrap();
        let t = BeamTarget::new(40.0, 225.0).unwrap();
        let profile = compute_phase_profile(&g, &tx, &t, 5.25e9).unwrap();
        assert_eq!(profile.phases.len(), 15);
        for (n, &beta) in profile.phases.iter().enumerate() {
            let alpha = propagation_phase(&g, &tx, &t, LAMBDA, n).unwrap();
            assert!(wrap_dist(alpha + beta, 0.0) < 1e-9);
            assert!((0.0..TAU).contains(&beta));
        }
    }

    #[test]
    fn single_cell_profile() {
        let g = build_geometry(1, 1, 0.02).unwrap();
        let tx = TxPlacement::boresight(1.7).unwrap();
        let t = BeamTarget::new(10.0, 45.0).unwrap();
        let profile = compute_phase_profile(&g, &tx, &t, 5.25e9).unwrap();
        let alpha = propagation_phase(&g, &tx, &t, LAMBDA, 0).unwrap();
        assert!(wrap_dist(profile.phases[0], -alpha) < 1e-12);
    }

    #[test]
    fn frequency_scaling_doubles_unwrapped_phase() {
        let g = build_geometry(2, 4, 0.014).unwrap();
        let tx = TxPlacement::boresight(2.5).unwrap();
        let s = Steering::Direction(BeamTarget::new(20.0, 300.0).unwrap());
        for n in 0..g.cell_count() {
            let a1 =
                path_phase_unwrapped(&g, &tx, &s, IncidentWave::Spherical, LAMBDA, n).unwrap();
            let a2 =
                path_phase_unwrapped(&g, &tx, &s, IncidentWave::Spherical, LAMBDA / 2.0, n)
                    .unwrap();
            assert!((a2 - 2.0 * a1).abs() < 1e-9 * a1.abs().max(1.0));
        }
    }

    #[test]
    fn planar_incidence_matches_far_transmitter_limit() {
        let g = build_geometry(3, 3, 0.014).unwrap();
        let far = 5.0e4;
        let tx = TxPlacement::new([0.0, 0.0, far]).unwrap();
        let s = Steering::Direction(BeamTarget::new(15.0, 70.0).unwrap());
        for n in 0..g.cell_count() {
            let sph =
                path_phase_unwrapped(&g, &tx, &s, IncidentWave::Spherical, LAMBDA, n).unwrap();
            let pla = path_phase_unwrapped(&g, &tx, &s, IncidentWave::Planar, LAMBDA, n).unwrap();
            // spherical carries the constant TAU * far / lambda offset
            let offset = TAU * far / LAMBDA;
            // boresight tx: planar inbound term is 0 for all cells
            assert!(
                ((sph - offset) - pla).abs() < 2e-4,
                "cell {n}: {sph} vs {pla}"
            );
        }
    }

    fn two_point_law() -> PhaseVoltageLaw {
        PhaseVoltageLaw::new(
            5.25e9,
            vec![
                PhaseVoltageSample { voltage: 0.0, phase_deg: 0.0, amplitude_db: 0.0 },
                PhaseVoltageSample { voltage: 5.0, phase_deg: -330.0, amplitude_db: 0.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_profile_maps_to_zero_bias() {
        let law = two_point_law();
        let profile = PhaseProfile { frequency: 5.25e9, phases: vec![0.0; 6] };
        let cfg = profile_to_configuration(&profile, &law, 8).unwrap();
        assert!(cfg.voltages.iter().all(|&v| v == 0.0));
        assert!(cfg.achieved_phases.iter().all(|&p| p == 0.0));
        assert_eq!(cfg.saturated_count, 0);
    }

    #[test]
    fn one_bit_dac_tie_rounds_up() {
        let law = two_point_law();
        // -165 deg target = 195 deg compensation in [0, 2*pi)
        let profile =
            PhaseProfile { frequency: 5.25e9, phases: vec![(-165.0f64).to_radians().rem_euclid(TAU)] };
        let cfg = profile_to_configuration(&profile, &law, 1).unwrap();
        // inverse is exactly 2.5 V, equidistant from levels {0, 5} -> 5 V
        assert_eq!(cfg.voltages[0], 5.0);
    }

    #[test]
    fn dac_bits_range_enforced() {
        let law = two_point_law();
        let profile = PhaseProfile { frequency: 5.25e9, phases: vec![0.0] };
        assert!(profile_to_configuration(&profile, &law, 0).is_err());
        assert!(profile_to_configuration(&profile, &law, 17).is_err());
    }

    // Exhaustive per-cell check of the 8-bit quantizer against the law:
    // the achieved phase must equal the law at the quantized voltage, the
    // voltage must sit on a DAC level, and the phase error must respect the
    // bound set by the law's steepest segment (plus saturation truncation).
    #[test]
    fn eight_bit_quantization_error_bound() {
        let law = PhaseVoltageLaw::synthetic_default();
        let step = 5.0 / 255.0;
        let max_slope = law
            .samples()
            .windows(2)
            .map(|p| ((p[1].phase_deg - p[0].phase_deg) / (p[1].voltage - p[0].voltage)).abs())
            .fold(0.0, f64::max);
        let phases: Vec<f64> =
            (0..2000).map(|i| (i as f64 * 0.7548776662466927).rem_euclid(1.0) * TAU).collect();
        let profile = PhaseProfile { frequency: 5.25e9, phases: phases.clone() };
        let cfg = profile_to_configuration(&profile, &law, 8).unwrap();
        let bound_deg = max_slope * step / 2.0 + 1e-9;
        for (n, &target) in phases.iter().enumerate() {
            let v = cfg.voltages[n];
            let level = (v / step).round();
            assert!((v - level * step).abs() < 1e-12, "off-level voltage {v}");
            let expect = law.phase_of_voltage(v).unwrap().to_radians().rem_euclid(TAU);
            assert!((cfg.achieved_phases[n] - expect).abs() < 1e-12);
            if !cfg.saturated_cells[n] {
                let err = {
                    let d = (cfg.achieved_phases[n] - target).rem_euclid(TAU);
                    d.min(TAU - d).to_degrees()
                };
                assert!(err <= bound_deg, "cell {n}: err {err} deg > bound {bound_deg} deg");
            } else {
                // saturation error is capped by half the uncovered arc
                let err = {
                    let d = (cfg.achieved_phases[n] - target).rem_euclid(TAU);
                    d.min(TAU - d).to_degrees()
                };
                assert!(err <= (360.0 - law.span_deg()) / 2.0 + bound_deg);
            }
        }
        assert!(cfg.saturated_count > 0, "random targets should hit the 30 deg gap");
    }

    #[test]
    fn codebook_is_theta_major_and_composes() {
        let g = build_geometry(2, 2, 0.014).unwrap();
        let tx = TxPlacement::boresight(3.2).unwrap();
        let law = two_point_law();
        let cb = generate_codebook(&g, &tx, &law, &[10.0, 20.0], &[0.0, 90.0], 5.25e9, 8).unwrap();
        assert_eq!(cb.len(), 4);
        let order: Vec<(f64, f64)> =
            cb.iter().map(|e| (e.target.theta_deg, e.target.phi_deg)).collect();
        assert_eq!(order, vec![(10.0, 0.0), (10.0, 90.0), (20.0, 0.0), (20.0, 90.0)]);
        // each entry equals the direct composition
        let t = BeamTarget::new(20.0, 90.0).unwrap();
        let direct = profile_to_configuration(
            &compute_phase_profile(&g, &tx, &t, 5.25e9).unwrap(),
            &law,
            8,
        )
        .unwrap();
        assert_eq!(cb[3].configuration, direct);
    }

    #[test]
    fn beam_target_validation() {
        assert!(BeamTarget::new(90.0, 0.0).is_err());
        assert!(BeamTarget::new(-1.0, 0.0).is_err());
        assert!(BeamTarget::new(10.0, 360.0).is_err());
        let t = BeamTarget::new(0.0, 0.0).unwrap();
        let v = t.unit_vector();
        assert!((v[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tx_placement_must_be_in_front() {
        assert!(TxPlacement::new([0.0, 0.0, 0.0]).is_err());
        assert!(TxPlacement::new([0.0, 0.0, -1.0]).is_err());
    }
}
