//! Link-experiment description: transmitter and receiver placements, direct
//! path leakage, signal parameters and multipath taps, plus the structured
//! text format they load from.

use crate::array::ArrayGeometry;
use crate::beamformer::{RisConfiguration, TxPlacement};
use crate::error::{Error, Result};
use crate::phase_law::PhaseVoltageLaw;
use std::fmt::Write as _;
use std::path::Path;

/// Direct transmitter-to-receiver leakage for one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectPath {
    /// Obstructed: no direct component.
    Blocked,
    /// Attenuation applied to the direct ray, dB.
    GainDb(f64),
}

/// A named receiver position with its direct-path condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RxSpec {
    pub name: String,
    pub position: [f64; 3],
    pub direct: DirectPath,
}

/// One extra deterministic multipath ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathTap {
    pub delay_s: f64,
    pub gain_db: f64,
    pub phase_rad: f64,
}

/// File-loadable part of a link experiment (everything except the surface
/// geometry, law and bias configuration, which are supplied separately).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub tx: TxPlacement,
    pub rxs: Vec<RxSpec>,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    pub taps: Vec<MultipathTap>,
    pub seed: u64,
}

/// Fully assembled simulation input.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub law: PhaseVoltageLaw,
    pub config: RisConfiguration,
    pub tx: TxPlacement,
    pub rxs: Vec<RxSpec>,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    pub taps: Vec<MultipathTap>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Parse the `key = value` scenario format.
    ///
    /// Repeatable lines: `rx = name, x, y, z, <gain_db|blocked>` and
    /// `tap = delay_s, gain_db, phase_rad`. Scalar keys: `tx` (x, y, z),
    /// `carrier_hz`, `bandwidth_hz`, `n_subcarriers`, `seed`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tx: Option<TxPlacement> = None;
        let mut rxs = Vec::new();
        let mut taps = Vec::new();
        let mut carrier_hz = 5.25e9;
        let mut bandwidth_hz = 60e6;
        let mut n_subcarriers = 64usize;
        let mut seed = 0u64;
        let mut saw_any = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            saw_any = true;
            let at = |msg: String| Error::ConfigInvalid(format!("scenario line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at("expected key = value".into()))?;
            let value = value.trim();
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| at(format!("bad number `{}`", s.trim())))
            };
            match key.trim() {
                "tx" => {
                    let p = parse_vec3(value).map_err(|m| at(m))?;
                    tx = Some(TxPlacement::new(p).map_err(|e| at(e.to_string()))?);
                }
                "rx" => {
                    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
                    if fields.len() != 5 {
                        return Err(at(format!(
                            "rx needs `name, x, y, z, gain_db|blocked`, got {} fields",
                            fields.len()
                        )));
                    }
                    let position = [num(fields[1])?, num(fields[2])?, num(fields[3])?];
                    if !(position[2] > 0.0) {
                        return Err(at(format!(
                            "receiver {} must be in front of the array (z > 0), got z = {}",
                            fields[0], position[2]
                        )));
                    }
                    let direct = if fields[4].eq_ignore_ascii_case("blocked") {
                        DirectPath::Blocked
                    } else {
                        DirectPath::GainDb(num(fields[4])?)
                    };
                    rxs.push(RxSpec { name: fields[0].to_string(), position, direct });
                }
                "tap" => {
                    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
                    if fields.len() != 3 {
                        return Err(at("tap needs `delay_s, gain_db, phase_rad`".into()));
                    }
                    taps.push(MultipathTap {
                        delay_s: num(fields[0])?,
                        gain_db: num(fields[1])?,
                        phase_rad: num(fields[2])?,
                    });
                }
                "carrier_hz" => carrier_hz = num(value)?,
                "bandwidth_hz" => bandwidth_hz = num(value)?,
                "n_subcarriers" => {
                    n_subcarriers = value
                        .parse()
                        .map_err(|_| at(format!("bad n_subcarriers `{value}`")))?
                }
                "seed" => seed = value.parse().map_err(|_| at(format!("bad seed `{value}`")))?,
                other => return Err(at(format!("unknown key `{other}`"))),
            }
        }
        if !saw_any {
            return Err(Error::ConfigInvalid("scenario file is empty".into()));
        }
        let tx = tx.ok_or_else(|| Error::ConfigInvalid("scenario: missing tx".into()))?;
        if rxs.is_empty() {
            return Err(Error::ConfigInvalid("scenario: needs at least one rx".into()));
        }
        let spec = ScenarioSpec { tx, rxs, carrier_hz, bandwidth_hz, n_subcarriers, taps, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 1 {
            return Err(Error::ConfigInvalid("n_subcarriers must be >= 1".into()));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::ConfigInvalid(format!("carrier must be > 0, got {}", self.carrier_hz)));
        }
        if self.bandwidth_hz < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "bandwidth must be >= 0, got {}",
                self.bandwidth_hz
            )));
        }
        for rx in &self.rxs {
            if !(rx.position[2] > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "receiver {} must be in front of the array (z > 0)",
                    rx.name
                )));
            }
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "carrier_hz = {}", self.carrier_hz);
        let _ = writeln!(out, "bandwidth_hz = {}", self.bandwidth_hz);
        let _ = writeln!(out, "n_subcarriers = {}", self.n_subcarriers);
        let _ = writeln!(out, "seed = {}", self.seed);
        let p = self.tx.position;
        let _ = writeln!(out, "tx = {}, {}, {}", p[0], p[1], p[2]);
        for rx in &self.rxs {
            let direct = match rx.direct {
                DirectPath::Blocked => "blocked".to_string(),
                DirectPath::GainDb(g) => g.to_string(),
            };
            let _ = writeln!(
                out,
                "rx = {}, {}, {}, {}, {}",
                rx.name, rx.position[0], rx.position[1], rx.position[2], direct
            );
        }
        for t in &self.taps {
            let _ = writeln!(out, "tap = {}, {}, {}", t.delay_s, t.gain_db, t.phase_rad);
        }
        out
    }

    /// Assemble a full scenario with the surface parts.
    pub fn into_scenario(
        self,
        geometry: ArrayGeometry,
        law: PhaseVoltageLaw,
        config: RisConfiguration,
    ) -> Result<Scenario> {
        if config.cell_count() != geometry.cell_count() {
            return Err(Error::ConfigInvalid(format!(
                "configuration has {} cells, geometry has {}",
                config.cell_count(),
                geometry.cell_count()
            )));
        }
        Ok(Scenario {
            geometry,
            law,
            config,
            tx: self.tx,
            rxs: self.rxs,
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            n_subcarriers: self.n_subcarriers,
            taps: self.taps,
            seed: self.seed,
        })
    }
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let fields: Vec<&str> = s.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(format!("expected `x, y, z`, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (o, f) in out.iter_mut().zip(&fields) {
        *o = f.parse().map_err(|_| format!("bad number `{f}`"))?;
    }
    Ok(out)
}

impl Scenario {
    /// Subcarrier center frequencies: `carrier + (k - (K-1)/2) * bw / K`.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let k_total = self.n_subcarriers as f64;
        (0..self.n_subcarriers)
            .map(|k| self.carrier_hz + (k as f64 - (k_total - 1.0) / 2.0) * self.bandwidth_hz / k_total)
            .collect()
    }

    pub fn rx_index(&self, name: &str) -> Option<usize> {
        self.rxs.iter().position(|r| r.name == name)
    }
}
