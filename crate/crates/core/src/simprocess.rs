//! Seeded generators for the seven nonlinear benchmark processes.
//!
//! | id  | family | recurrence |
//! |-----|--------|------------|
//! | I   | BILIN  | `0.4 x[t-1] + 0.4 x[t-1] e[t-1] + e[t]` |
//! | II  | BILIN  | `0.4 x[t-1] + 0.6 x[t-1] e[t-1] + e[t]` |
//! | III | BILIN  | `-0.2 x[t-1] + 0.4 x[t-2] + 0.6 x[t-1] e[t-1] + 0.7 x[t-2] e[t-1] + e[t]` |
//! | IV  | SETAR  | two AR(3) regimes split at `x[t-1] <= 0.5` |
//! | V   | SETAR  | two AR(3) regimes split at `x[t-1] <= 3.05` |
//! | VI  | EXPAR  | `0.5 x[t-1] + 1.5 x[t-1] exp(-0.5 x[t-1]^2) + e[t]` |
//! | VII | POLYAR | `0.3452 x[t-1] + 0.1204 x[t-1]^2 - 0.0994 x[t-2] + 0.1162 x[t-1] x[t-2] + e[t]` |
//!
//! Lagged states and the previous innovation start at zero; the first
//! `burn_in` values are discarded.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::rng;
use crate::series::TimeSeries;

pub const DEFAULT_BURN_IN: usize = 200;
/// Innovation sd of the SETAR processes.
pub const SETAR_NOISE_SD: f64 = 0.003;
/// Magnitude beyond which a path counts as diverged. Bounded paths of VII
/// stay below 5 while any that passes it runs off to overflow; the heaviest
/// stationary tail (III) exceeds 1e3 in about one path in 20 000.
pub const DIVERGENCE_BOUND: f64 = 1e3;
/// Attempts per series before a diverged trajectory is reported.
pub const RETRY_BUDGET: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProcessId {
    #[serde(rename = "I")]
    BilinI,
    #[serde(rename = "II")]
    BilinII,
    #[serde(rename = "III")]
    BilinIII,
    #[serde(rename = "IV")]
    SetarIV,
    #[serde(rename = "V")]
    SetarV,
    #[serde(rename = "VI")]
    ExparVI,
    #[serde(rename = "VII")]
    PolyarVII,
}

impl ProcessId {
    pub const ALL: [ProcessId; 7] = [
        ProcessId::BilinI,
        ProcessId::BilinII,
        ProcessId::BilinIII,
        ProcessId::SetarIV,
        ProcessId::SetarV,
        ProcessId::ExparVI,
        ProcessId::PolyarVII,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            ProcessId::BilinI => "I",
            ProcessId::BilinII => "II",
            ProcessId::BilinIII => "III",
            ProcessId::SetarIV => "IV",
            ProcessId::SetarV => "V",
            ProcessId::ExparVI => "VI",
            ProcessId::PolyarVII => "VII",
        }
    }

    pub fn is_setar(self) -> bool {
        matches!(self, ProcessId::SetarIV | ProcessId::SetarV)
    }

    /// Innovation sd used when none is given explicitly.
    pub fn default_noise_sd(self) -> f64 {
        if self.is_setar() {
            SETAR_NOISE_SD
        } else {
            1.0
        }
    }

    /// Regime-switch threshold on `x[t-1]` for the SETAR processes.
    pub fn threshold(self) -> Option<f64> {
        match self {
            ProcessId::SetarIV => Some(0.5),
            ProcessId::SetarV => Some(3.05),
            _ => None,
        }
    }

    /// One step of the recurrence. `lags` holds `x[t-1], x[t-2], x[t-3]`.
    pub fn next_value(self, lags: [f64; 3], eps: f64, eps_prev: f64) -> f64 {
        let [x1, x2, x3] = lags;
        match self {
            ProcessId::BilinI => 0.4 * x1 + 0.4 * x1 * eps_prev + eps,
            ProcessId::BilinII => 0.4 * x1 + 0.6 * x1 * eps_prev + eps,
            ProcessId::BilinIII => {
                -0.2 * x1 + 0.4 * x2 + 0.6 * x1 * eps_prev + 0.7 * x2 * eps_prev + eps
            }
            ProcessId::SetarIV => {
                if x1 <= 0.5 {
                    1.2270 + 1.0516 * x1 - 0.8901 * x2 - 0.2149 * x3 + eps
                } else {
                    1.6734 - 0.8295 * x1 + 0.1309 * x2 - 0.0276 * x3 + eps
                }
            }
            ProcessId::SetarV => {
                if x1 <= 3.05 {
                    0.15 + 0.85 * x1 + 0.22 * x2 - 0.70 * x3 + eps
                } else {
                    0.30 - 0.80 * x1 + 0.2 * x2 + 0.70 * x3 + eps
                }
            }
            ProcessId::ExparVI => 0.5 * x1 + 1.5 * x1 * (-0.5 * x1 * x1).exp() + eps,
            ProcessId::PolyarVII => {
                0.3452 * x1 + 0.1204 * x1 * x1 - 0.0994 * x2 + 0.1162 * x1 * x2 + eps
            }
        }
    }

    /// Runs the recurrence from the zero state over an explicit innovation
    /// sequence, emitting one value per innovation.
    pub fn run_with_innovations(self, innovations: &[f64]) -> Vec<f64> {
        let mut lags = [0.0; 3];
        let mut eps_prev = 0.0;
        innovations
            .iter()
            .map(|&eps| {
                let x = self.next_value(lags, eps, eps_prev);
                lags = [x, lags[0], lags[1]];
                eps_prev = eps;
                x
            })
            .collect()
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for ProcessId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        let id = match t.as_str() {
            "I" | "1" | "BILIN_I" => ProcessId::BilinI,
            "II" | "2" | "BILIN_II" => ProcessId::BilinII,
            "III" | "3" | "BILIN_III" => ProcessId::BilinIII,
            "IV" | "4" | "SETAR_IV" => ProcessId::SetarIV,
            "V" | "5" | "SETAR_V" => ProcessId::SetarV,
            "VI" | "6" | "EXPAR_VI" => ProcessId::ExparVI,
            "VII" | "7" | "POLYAR_VII" => ProcessId::PolyarVII,
            _ => return Err(SimError::InvalidArgument(format!("unknown process '{s}'"))),
        };
        Ok(id)
    }
}

/// Parses `"I,IV"` or `"I:IV"` into a process pair.
pub fn parse_pair(s: &str) -> Result<(ProcessId, ProcessId), SimError> {
    let parts: Vec<&str> = s.split([',', ':']).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse()?, b.parse()?)),
        _ => Err(SimError::InvalidArgument(format!("expected a pair like I,IV, got '{s}'"))),
    }
}

/// All 21 unordered pairs of distinct processes in table order.
pub fn all_pairs() -> Vec<(ProcessId, ProcessId)> {
    let mut pairs = Vec::with_capacity(21);
    for (i, &a) in ProcessId::ALL.iter().enumerate() {
        for &b in &ProcessId::ALL[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sd: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sd: f64, seed: u64) -> Result<Self, SimError> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(SimError::InvalidArgument(format!("noise sd must be positive, got {sd}")));
        }
        Ok(Self { sd, seed })
    }

    pub fn default_for(process: ProcessId, seed: u64) -> Self {
        Self { sd: process.default_noise_sd(), seed }
    }
}

pub fn simulate(
    process: ProcessId,
    length: usize,
    noise: NoiseSpec,
    burn_in: usize,
) -> Result<TimeSeries, SimError> {
    if length == 0 {
        return Err(SimError::InvalidArgument("length must be at least 1".into()));
    }
    let noise = NoiseSpec::new(noise.sd, noise.seed)?;
    let mut rng = rng::from_seed(noise.seed);
    let innovations: Vec<f64> = (0..burn_in + length)
        .map(|_| noise.sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let path = process.run_with_innovations(&innovations);
    let values = path[burn_in..].to_vec();
    if values.iter().any(|v| !(v.abs() <= DIVERGENCE_BOUND)) {
        return Err(SimError::NonFiniteTrajectory {
            process: process.to_string(),
            seed: noise.seed,
        });
    }
    Ok(TimeSeries::new(values).expect("finite and nonempty"))
}

/// Options for [`simulate_dataset_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    pub burn_in: usize,
    /// Innovation sd of the non-SETAR processes.
    pub noise_sd: f64,
    pub setar_noise_sd: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { burn_in: DEFAULT_BURN_IN, noise_sd: 1.0, setar_noise_sd: SETAR_NOISE_SD }
    }
}

impl SimOptions {
    fn sd_for(&self, process: ProcessId) -> f64 {
        if process.is_setar() {
            self.setar_noise_sd
        } else {
            self.noise_sd
        }
    }
}

pub fn simulate_dataset(
    pair: (ProcessId, ProcessId),
    per_class: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<TimeSeries>, SimError> {
    simulate_dataset_with(pair, per_class, length, seed, &SimOptions::default())
}

/// `per_class` series of `pair.0` (label 0) followed by `per_class` series of
/// `pair.1` (label 1). Series `i` of class `c` uses seed
/// `child(child(derive(seed, "simulate/c"), i), attempt)`.
pub fn simulate_dataset_with(
    pair: (ProcessId, ProcessId),
    per_class: usize,
    length: usize,
    seed: u64,
    options: &SimOptions,
) -> Result<Vec<TimeSeries>, SimError> {
    if per_class == 0 {
        return Err(SimError::InvalidArgument("per_class must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(2 * per_class);
    for (label, process) in [pair.0, pair.1].into_iter().enumerate() {
        let class_seed = rng::derive_seed(seed, &format!("simulate/{label}"));
        for i in 0..per_class {
            let series_seed = rng::child_seed(class_seed, i as u64);
            let mut last_err = None;
            let mut produced = None;
            for attempt in 0..RETRY_BUDGET {
                let noise = NoiseSpec::new(options.sd_for(process), rng::child_seed(series_seed, attempt))?;
                match simulate(process, length, noise, options.burn_in) {
                    Ok(s) => {
                        produced = Some(s);
                        break;
                    }
                    Err(e @ SimError::NonFiniteTrajectory { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            match produced {
                Some(s) => out.push(s.with_label(label).with_source(process.roman())),
                None => return Err(last_err.expect("retry loop ran")),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_keeps_bilinear_at_rest() {
        assert_eq!(ProcessId::BilinI.run_with_innovations(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
    }

    #[test]
    fn setar_iv_regime_one_hand_value() {
        let x = ProcessId::SetarIV.next_value([0.4, 0.0, 0.0], 0.0, 0.0);
        assert!((x - 1.64764).abs() < 1e-12);
    }

    #[test]
    fn expar_unit_shock_from_rest() {
        assert_eq!(ProcessId::ExparVI.next_value([0.0; 3], 1.0, 0.0), 1.0);
    }

    #[test]
    fn setar_regimes_follow_previous_value() {
        let noise = NoiseSpec::new(0.003, 11).unwrap();
        let mut rng = rng::from_seed(noise.seed);
        let eps: Vec<f64> =
            (0..400).map(|_| noise.sd * rng.sample::<f64, _>(StandardNormal)).collect();
        for p in [ProcessId::SetarIV, ProcessId::SetarV] {
            let path = p.run_with_innovations(&eps);
            let thr = p.threshold().unwrap();
            for t in 3..path.len() {
                let lags = [path[t - 1], path[t - 2], path[t - 3]];
                let (lo, hi) = match p {
                    ProcessId::SetarIV => (
                        1.2270 + 1.0516 * lags[0] - 0.8901 * lags[1] - 0.2149 * lags[2],
                        1.6734 - 0.8295 * lags[0] + 0.1309 * lags[1] - 0.0276 * lags[2],
                    ),
                    _ => (
                        0.15 + 0.85 * lags[0] + 0.22 * lags[1] - 0.70 * lags[2],
                        0.30 - 0.80 * lags[0] + 0.2 * lags[1] + 0.70 * lags[2],
                    ),
                };
                let expected = if lags[0] <= thr { lo } else { hi } + eps[t];
                assert_eq!(path[t], expected);
            }
        }
    }

    #[test]
    fn simulate_is_deterministic_and_sized() {
        let noise = NoiseSpec::new(1.0, 5).unwrap();
        let a = simulate(ProcessId::BilinII, 50, noise, 10).unwrap();
        let b = simulate(ProcessId::BilinII, 50, noise, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
    }

    #[test]
    fn burn_in_discards_prefix() {
        let noise = NoiseSpec::new(1.0, 9).unwrap();
        let full = simulate(ProcessId::BilinIII, 30, noise, 0).unwrap();
        let mut rng = rng::from_seed(9);
        let eps: Vec<f64> = (0..30).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        assert_eq!(full.values(), ProcessId::BilinIII.run_with_innovations(&eps).as_slice());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(NoiseSpec::new(0.0, 1).is_err());
        let noise = NoiseSpec::new(1.0, 1).unwrap();
        assert!(simulate(ProcessId::BilinI, 0, noise, 0).is_err());
        assert!(simulate_dataset((ProcessId::BilinI, ProcessId::SetarIV), 0, 10, 1).is_err());
    }

    #[test]
    fn dataset_layout() {
        let d = simulate_dataset((ProcessId::BilinI, ProcessId::SetarIV), 200, 100, 3).unwrap();
        assert_eq!(d.len(), 400);
        assert_eq!(d.iter().filter(|s| s.label() == Some(0)).count(), 200);
        assert!(d.iter().all(|s| s.len() == 100));
        let same = simulate_dataset((ProcessId::BilinI, ProcessId::BilinI), 1, 5, 3).unwrap();
        assert_eq!(same.iter().map(|s| s.label().unwrap()).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(same[0].source(), Some("I"));
        assert_eq!(same[1].source(), Some("I"));
    }

    #[test]
    fn dataset_is_deterministic() {
        let pair = (ProcessId::ExparVI, ProcessId::PolyarVII);
        assert_eq!(simulate_dataset(pair, 3, 10, 7).unwrap(), simulate_dataset(pair, 3, 10, 7).unwrap());
    }

    #[test]
    fn parses_pairs() {
        assert_eq!(parse_pair("I,IV").unwrap(), (ProcessId::BilinI, ProcessId::SetarIV));
        assert_eq!(parse_pair("vi:VII").unwrap(), (ProcessId::ExparVI, ProcessId::PolyarVII));
        assert!(parse_pair("I").is_err());
        assert_eq!(all_pairs().len(), 21);
    }
}
