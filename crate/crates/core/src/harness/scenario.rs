//! Simulation parameters and random topologies.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::{Gains, NetworkInstance, UeParams};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// Shortest distance used in path loss, meters.
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub cell_radius: f64,
    pub d2d_max_dist: f64,
    pub n_d2d: usize,
    pub n_cell: usize,
    pub p_max_dbm: f64,
    pub p_cir_dbm: f64,
    pub noise_w: f64,
    pub eta: f64,
    pub r_min_c: f64,
    pub r_min_d: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            cell_radius: 500.0,
            d2d_max_dist: 25.0,
            n_d2d: 5,
            n_cell: 3,
            p_max_dbm: 23.0,
            p_cir_dbm: 10.0,
            noise_w: 1e-7,
            eta: 0.35,
            r_min_c: 0.1,
            r_min_d: 0.5,
            trials: 1000,
            seed: 1,
            max_rounds: 20,
        }
    }
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 13] = [
        "cell_radius",
        "d2d_max_dist",
        "n_d2d",
        "n_cell",
        "p_max_dbm",
        "p_cir_dbm",
        "noise_w",
        "eta",
        "r_min_c",
        "r_min_d",
        "trials",
        "seed",
        "max_rounds",
    ];

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius", self.cell_radius),
            ("d2d_max_dist", self.d2d_max_dist),
            ("noise_w", self.noise_w),
            ("eta", self.eta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("p_max_dbm", self.p_max_dbm), ("p_cir_dbm", self.p_cir_dbm)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("r_min_c", self.r_min_c), ("r_min_d", self.r_min_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.eta > 1.0 {
            return Err(Error::Config(format!("eta must be <= 1, got {}", self.eta)));
        }
        if self.d2d_max_dist >= self.cell_radius {
            return Err(Error::Config("d2d_max_dist must be smaller than cell_radius".into()));
        }
        if self.n_cell == 0 || self.trials == 0 || self.max_rounds == 0 {
            return Err(Error::Config("n_cell, trials and max_rounds must be >= 1".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
        }
        match key {
            "cell_radius" => self.cell_radius = num(key, value)?,
            "d2d_max_dist" => self.d2d_max_dist = num(key, value)?,
            "n_d2d" => self.n_d2d = num(key, value)?,
            "n_cell" => self.n_cell = num(key, value)?,
            "p_max_dbm" => self.p_max_dbm = num(key, value)?,
            "p_cir_dbm" => self.p_cir_dbm = num(key, value)?,
            "noise_w" => self.noise_w = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "r_min_c" => self.r_min_c = num(key, value)?,
            "r_min_d" => self.r_min_d = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "max_rounds" => self.max_rounds = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ScenarioConfig::default();
        cfg.apply_text(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `key = value` form readable by [`ScenarioConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let values = [
            self.cell_radius.to_string(),
            self.d2d_max_dist.to_string(),
            self.n_d2d.to_string(),
            self.n_cell.to_string(),
            self.p_max_dbm.to_string(),
            self.p_cir_dbm.to_string(),
            self.noise_w.to_string(),
            self.eta.to_string(),
            self.r_min_c.to_string(),
            self.r_min_d.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.max_rounds.to_string(),
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn d2d_params(&self) -> Result<UeParams> {
        UeParams::new(dbm_to_watts(self.p_max_dbm), self.r_min_d, dbm_to_watts(self.p_cir_dbm), self.eta)
    }

    pub fn cell_params(&self) -> Result<UeParams> {
        UeParams::new(dbm_to_watts(self.p_max_dbm), self.r_min_c, dbm_to_watts(self.p_cir_dbm), self.eta)
    }

    /// Generator of trial `trial`: the master seed picks the key and the
    /// trial index picks the stream, so trials are independent of
    /// scheduling.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Node positions; the BS sits at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub cellular: Vec<Point>,
    pub d2d_tx: Vec<Point>,
    pub d2d_rx: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: Topology,
    pub instance: NetworkInstance,
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point {
        x: center.x + r * theta.cos(),
        y: center.y + r * theta.sin(),
    }
}

/// `d^-2 |h|^2` with Rayleigh fading, `|h|^2 ~ Exp(1)`.
fn channel_gain<R: Rng + ?Sized>(rng: &mut R, a: Point, b: Point) -> f64 {
    let d = a.dist(b).max(MIN_DISTANCE);
    let fading: f64 = Exp1.sample(rng);
    fading / (d * d)
}

/// Places cellular UEs and D2D transmitters uniformly in the cell, each D2D
/// receiver uniformly within `d2d_max_dist` of its transmitter (redrawn
/// until it lands inside the cell), and draws independent fading for every
/// link and channel.
pub fn generate_topology<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Scenario> {
    cfg.validate()?;
    let (n, k) = (cfg.n_d2d, cfg.n_cell);
    let radius = cfg.cell_radius;
    let cellular: Vec<Point> = (0..k).map(|_| uniform_in_disk(rng, Point::ORIGIN, radius)).collect();
    let d2d_tx: Vec<Point> = (0..n).map(|_| uniform_in_disk(rng, Point::ORIGIN, radius)).collect();
    let d2d_rx: Vec<Point> = d2d_tx
        .iter()
        .map(|&tx| loop {
            let rx = uniform_in_disk(rng, tx, cfg.d2d_max_dist);
            if rx.norm() <= radius {
                break rx;
            }
        })
        .collect();
    let bs = Point::ORIGIN;

    let mut gains = Gains::decoupled(n, k);
    for i in 0..n {
        for c in 0..k {
            gains.d2d[i][c] = channel_gain(rng, d2d_tx[i], d2d_rx[i]);
        }
    }
    for c in 0..k {
        gains.cell[c] = channel_gain(rng, cellular[c], bs);
    }
    for c in 0..k {
        for i in 0..n {
            gains.cell_to_d2d[c][i] = channel_gain(rng, cellular[c], d2d_rx[i]);
        }
    }
    for j in 0..n {
        for i in 0..n {
            if i != j {
                for c in 0..k {
                    gains.d2d_cross[j][i][c] = channel_gain(rng, d2d_tx[j], d2d_rx[i]);
                }
            }
        }
    }
    for i in 0..n {
        for c in 0..k {
            gains.d2d_to_bs[i][c] = channel_gain(rng, d2d_tx[i], bs);
        }
    }

    let instance = NetworkInstance::new(gains, cfg.noise_w, vec![cfg.d2d_params()?; n], vec![cfg.cell_params()?; k])?;
    Ok(Scenario {
        topology: Topology {
            cellular,
            d2d_tx,
            d2d_rx,
        },
        instance,
    })
}

/// Same gains with every player's rate floor replaced.
pub fn with_rate_floors(inst: &NetworkInstance, r_min_d: f64, r_min_c: f64) -> Result<NetworkInstance> {
    let d2d = inst.ue_d2d().iter().map(|ue| UeParams { r_min: r_min_d, ..*ue }).collect();
    let cell = inst.ue_cell().iter().map(|ue| UeParams { r_min: r_min_c, ..*ue }).collect();
    NetworkInstance::new(inst.gains().clone(), inst.noise(), d2d, cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_convert() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_relative_eq!(cfg.d2d_params().unwrap().p_max, 0.19952623149688797, max_relative = 1e-15);
        assert_relative_eq!(cfg.cell_params().unwrap().p_cir, 0.01, max_relative = 1e-12);
        assert_eq!(cfg.cell_params().unwrap().r_min, 0.1);
        assert_eq!(cfg.d2d_params().unwrap().r_min, 0.5);
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_text("# comment\n\nn_d2d = 2\nseed=99\n noise_w = 2e-7 \n").unwrap();
        assert_eq!((cfg.n_d2d, cfg.seed, cfg.noise_w), (2, 99, 2e-7));
        let mut back = ScenarioConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("n_d2d = two").is_err());
        assert!(cfg.apply_text("n_d2d").is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            ScenarioConfig {
                d2d_max_dist: 600.0,
                ..Default::default()
            },
            ScenarioConfig {
                eta: 0.0,
                ..Default::default()
            },
            ScenarioConfig {
                trials: 0,
                ..Default::default()
            },
            ScenarioConfig {
                r_min_d: -1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn topology_geometry() {
        let cfg = ScenarioConfig::default();
        for trial in 0..50 {
            let sc = generate_topology(&cfg, &mut cfg.trial_rng(trial)).unwrap();
            let t = &sc.topology;
            for p in t.cellular.iter().chain(&t.d2d_tx).chain(&t.d2d_rx) {
                assert!(p.norm() <= cfg.cell_radius + 1e-9);
            }
            for (tx, rx) in t.d2d_tx.iter().zip(&t.d2d_rx) {
                assert!(tx.dist(*rx) <= cfg.d2d_max_dist + 1e-9);
            }
            assert_eq!(sc.instance.n_d2d(), 5);
            assert_eq!(sc.instance.n_cell(), 3);
        }
    }

    #[test]
    fn topology_is_seed_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = generate_topology(&cfg, &mut cfg.trial_rng(3)).unwrap();
        let b = generate_topology(&cfg, &mut cfg.trial_rng(3)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = generate_topology(&cfg, &mut cfg.trial_rng(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fading_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let a = Point::ORIGIN;
        let b = Point { x: 1.0, y: 0.0 };
        let mean = (0..n).map(|_| channel_gain(&mut rng, a, b)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn distance_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut sum = 0.0;
        for _ in 0..1000 {
            sum += channel_gain(&mut rng, Point::ORIGIN, Point { x: 0.1, y: 0.0 });
        }
        assert!(sum / 1000.0 < 1.2);
    }

    #[test]
    fn rate_floor_override() {
        let cfg = ScenarioConfig::default();
        let sc = generate_topology(&cfg, &mut cfg.trial_rng(0)).unwrap();
        let inst = with_rate_floors(&sc.instance, 1.0, 0.2).unwrap();
        assert!(inst.ue_d2d().iter().all(|u| u.r_min == 1.0));
        assert!(inst.ue_cell().iter().all(|u| u.r_min == 0.2));
        assert_eq!(inst.gains(), sc.instance.gains());
    }
}
