//! Voltage <-> reflection-phase calibration of a varactor-loaded unit cell,
//! with piecewise-linear interpolation, inversion and a per-voltage
//! reflection-amplitude model.
//!
//! Real calibration data loads from a CSV table; a smooth synthetic default
//! stands in when no measurement is available. Laws are immutable after
//! construction and all lookups are pure.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Default maximum bias voltage in volts.
pub const DEFAULT_V_MAX: f64 = 5.0;
/// Carrier frequency the synthetic default law is referenced to.
pub const DEFAULT_LAW_FREQUENCY_HZ: f64 = 5.25e9;

/// One calibration point: bias voltage, reflection phase and reflection
/// amplitude relative to an ideal reflector (<= 0 dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVoltageSample {
    pub voltage: f64,
    pub phase_deg: f64,
    pub amplitude_db: f64,
}

/// Monotone voltage-to-phase calibration table at a single frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVoltageLaw {
    pub frequency: f64,
    pub v_max: f64,
    samples: Vec<PhaseVoltageSample>,
}

/// Result of inverting the law for a phase target.
///
/// When the wrapped target falls outside the achievable span the voltage
/// saturates at the nearer span endpoint and `achieved_deg` reports the
/// endpoint phase, so callers can account for the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawInversion {
    pub volts: f64,
    pub achieved_deg: f64,
    pub saturated: bool,
}

/// Closed form behind the synthetic default law: a monotone S-curve from
/// 0 deg at 0 V to -330 deg at 5 V, steepest at mid-range.
pub fn synthetic_phase_deg(v: f64) -> f64 {
    -165.0 * (1.0 + (1.2 * (v - 2.5)).tanh() / 3.0_f64.tanh())
}

/// Closed form for the synthetic reflection amplitude: a shallow 0.5 dB dip
/// at mid-range, back to ideal at both voltage rails.
pub fn synthetic_amplitude_db(v: f64) -> f64 {
    let s = (std::f64::consts::PI * v / 5.0).sin();
    -0.5 * s * s
}

impl PhaseVoltageLaw {
    /// Validate and build a law from raw samples.
    pub fn new(frequency: f64, samples: Vec<PhaseVoltageSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::CalibrationInvalid(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples[0].voltage != 0.0 {
            return Err(Error::CalibrationInvalid(format!(
                "first sample must be at 0 V, got {} V",
                samples[0].voltage
            )));
        }
        for pair in samples.windows(2) {
            if !(pair[1].voltage > pair[0].voltage) {
                return Err(Error::CalibrationInvalid(format!(
                    "voltages must be strictly increasing ({} V then {} V)",
                    pair[0].voltage, pair[1].voltage
                )));
            }
        }
        let increasing = samples[1].phase_deg > samples[0].phase_deg;
        for pair in samples.windows(2) {
            let step_up = pair[1].phase_deg > pair[0].phase_deg;
            if pair[1].phase_deg == pair[0].phase_deg || step_up != increasing {
                return Err(Error::CalibrationInvalid(format!(
                    "phase must be strictly monotone ({} deg at {} V then {} deg at {} V)",
                    pair[0].phase_deg, pair[0].voltage, pair[1].phase_deg, pair[1].voltage
                )));
            }
        }
        for s in &samples {
            if s.amplitude_db > 0.0 {
                return Err(Error::CalibrationInvalid(format!(
                    "amplitude must be <= 0 dB, got {} dB at {} V",
                    s.amplitude_db, s.voltage
                )));
            }
            if !s.voltage.is_finite() || !s.phase_deg.is_finite() || !s.amplitude_db.is_finite() {
                return Err(Error::CalibrationInvalid("non-finite sample".into()));
            }
        }
        let span = (samples.last().unwrap().phase_deg - samples[0].phase_deg).abs();
        if span > 360.0 {
            return Err(Error::CalibrationInvalid(format!(
                "phase span {span} deg exceeds one full turn"
            )));
        }
        let v_max = samples.last().unwrap().voltage;
        Ok(Self { frequency, v_max, samples })
    }

    /// The synthetic default: 251 knots of the closed-form S-curve over
    /// [0, 5] V at 5.25 GHz, dense enough that interpolation error stays
    /// below ~0.02 deg.
    pub fn synthetic_default() -> Self {
        let samples = (0..=250)
            .map(|i| {
                let v = 5.0 * i as f64 / 250.0;
                PhaseVoltageSample {
                    voltage: v,
                    phase_deg: synthetic_phase_deg(v),
                    amplitude_db: synthetic_amplitude_db(v),
                }
            })
            .collect();
        Self::new(DEFAULT_LAW_FREQUENCY_HZ, samples).expect("synthetic law is valid")
    }

    pub fn samples(&self) -> &[PhaseVoltageSample] {
        &self.samples
    }

    /// Total phase travel |phase(v_max) - phase(0)| in degrees.
    pub fn span_deg(&self) -> f64 {
        (self.samples.last().unwrap().phase_deg - self.samples[0].phase_deg).abs()
    }

    /// Load a calibration table: CSV with header
    /// `voltage_v,phase_deg,amplitude_db` (the amplitude column optional,
    /// default 0), UTF-8, '.' decimal separator.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse_csv(&text, DEFAULT_LAW_FREQUENCY_HZ)
    }

    pub fn parse_csv(text: &str, frequency: f64) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::CalibrationInvalid("empty calibration table".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_amplitude = match columns.as_slice() {
            ["voltage_v", "phase_deg"] => false,
            ["voltage_v", "phase_deg", "amplitude_db"] => true,
            _ => {
                return Err(Error::CalibrationInvalid(format!(
                    "unexpected header `{header}`"
                )))
            }
        };
        let mut samples = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns.len() {
                return Err(Error::CalibrationInvalid(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    columns.len(),
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| {
                    Error::CalibrationInvalid(format!("line {}: bad number `{s}`", lineno + 1))
                })
            };
            samples.push(PhaseVoltageSample {
                voltage: num(fields[0])?,
                phase_deg: num(fields[1])?,
                amplitude_db: if with_amplitude { num(fields[2])? } else { 0.0 },
            });
        }
        Self::new(frequency, samples)
    }

    /// Serialize with full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("voltage_v,phase_deg,amplitude_db\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", s.voltage, s.phase_deg, s.amplitude_db);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv())?;
        Ok(())
    }

    fn check_range(&self, v: f64) -> Result<()> {
        if !(0.0..=self.v_max).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "voltage {v} outside [0, {}]",
                self.v_max
            )));
        }
        Ok(())
    }

    /// Index of the knot interval containing `v` (last interval for v = v_max).
    fn segment_for_voltage(&self, v: f64) -> usize {
        match self.samples.binary_search_by(|s| s.voltage.partial_cmp(&v).unwrap()) {
            Ok(i) => i.min(self.samples.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.samples.len() - 2),
        }
    }

    /// Reflection phase in degrees at bias `v`, piecewise-linear between knots.
    pub fn phase_of_voltage(&self, v: f64) -> Result<f64> {
        self.check_range(v)?;
        let i = self.segment_for_voltage(v);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        if v == a.voltage {
            return Ok(a.phase_deg);
        }
        if v == b.voltage {
            return Ok(b.phase_deg);
        }
        let t = (v - a.voltage) / (b.voltage - a.voltage);
        Ok(a.phase_deg + t * (b.phase_deg - a.phase_deg))
    }

    /// Reflection amplitude as linear gain in (0, 1] at bias `v`.
    pub fn amplitude_of_voltage(&self, v: f64) -> Result<f64> {
        self.check_range(v)?;
        let i = self.segment_for_voltage(v);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let db = if v == a.voltage {
            a.amplitude_db
        } else if v == b.voltage {
            b.amplitude_db
        } else {
            let t = (v - a.voltage) / (b.voltage - a.voltage);
            a.amplitude_db + t * (b.amplitude_db - a.amplitude_db)
        };
        Ok(10f64.powf(db / 20.0))
    }

    /// Invert the law for a phase target (any angle accepted).
    ///
    /// The target is wrapped into the 360-degree window anchored at the low
    /// end of the law's phase range. Inside the achievable span the exact
    /// interpolated inverse is returned; outside it the voltage saturates at
    /// the span endpoint with the smaller circular distance to the target
    /// (ties break toward the endpoint with the larger |phase|).
    pub fn voltage_of_phase(&self, target_deg: f64) -> LawInversion {
        let p0 = self.samples[0].phase_deg;
        let p1 = self.samples.last().unwrap().phase_deg;
        let lo = p0.min(p1);
        let hi = p0.max(p1);
        let wrapped = lo + (target_deg - lo).rem_euclid(360.0);
        if wrapped <= hi {
            return LawInversion {
                volts: self.voltage_at_phase_in_span(wrapped),
                achieved_deg: wrapped,
                saturated: false,
            };
        }
        // Gap between hi and lo + 360: clamp to the circularly nearer endpoint.
        let dist_hi = wrapped - hi;
        let dist_lo = lo + 360.0 - wrapped;
        let endpoint = if dist_hi < dist_lo || (dist_hi == dist_lo && hi.abs() > lo.abs()) {
            hi
        } else {
            lo
        };
        LawInversion {
            volts: self.voltage_at_phase_in_span(endpoint),
            achieved_deg: endpoint,
            saturated: true,
        }
    }

    /// Linear inverse for a phase known to lie within [min(p), max(p)].
    fn voltage_at_phase_in_span(&self, phase_deg: f64) -> f64 {
        let increasing = self.samples.last().unwrap().phase_deg > self.samples[0].phase_deg;
        // Binary search for the knot interval bracketing the phase.
        let (mut lo, mut hi) = (0usize, self.samples.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let above = if increasing {
                self.samples[mid].phase_deg <= phase_deg
            } else {
                self.samples[mid].phase_deg >= phase_deg
            };
            if above {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (&self.samples[lo], &self.samples[hi]);
        if phase_deg == a.phase_deg {
            return a.voltage;
        }
        if phase_deg == b.phase_deg {
            return b.voltage;
        }
        let t = (phase_deg - a.phase_deg) / (b.phase_deg - a.phase_deg);
        (a.voltage + t * (b.voltage - a.voltage)).clamp(0.0, self.v_max)
    }
}
