//! Problem instance: geometry, channel parameters, operating limits and the
//! time grid.
//!
//! Everything inside [`Scenario`] is in linear SI units (watts, meters,
//! seconds, linear gains). Decibel quantities only appear in the JSON file
//! format, where every such field carries a `_db`, `_dbm` or `_dbi` suffix.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};

pub mod units {
    pub fn db_to_linear(db: f64) -> f64 {
        10f64.powf(db / 10.0)
    }

    pub fn linear_to_db(linear: f64) -> f64 {
        10.0 * linear.log10()
    }

    pub fn dbm_to_watts(dbm: f64) -> f64 {
        10f64.powf((dbm - 30.0) / 10.0)
    }

    pub fn watts_to_dbm(watts: f64) -> f64 {
        10.0 * watts.log10() + 30.0
    }
}

use units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm};

/// Log-distance path loss `A0 + 10·exponent·log10(d/d0) + X` with
/// zero-mean Gaussian shadowing `X` of standard deviation `shadow_sigma_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub a0_db: f64,
    pub exponent: f64,
    pub d0: f64,
    pub shadow_sigma_db: f64,
}

/// Linear antenna gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub tbs: f64,
    pub uav: f64,
    pub uav_user: f64,
    pub sat_user: f64,
}

/// Operating limits in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub v_min: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Peak UAV transmit power, W.
    pub p_max: f64,
    /// Communication energy budget over the whole flight, J.
    pub e0: f64,
    /// Interference temperature limit at each protected receiver, W.
    pub i0: f64,
    /// Base-station transmit power on the backhaul link, W.
    pub p_s: f64,
    /// Per-component bound on the velocity update residual, m/s.
    pub delta_v0: f64,
    /// Per-component bound on the position update residual, m.
    pub delta_c0: f64,
}

impl Limits {
    pub fn default_delta_v0(v_max: f64, dt: f64) -> f64 {
        0.01 * v_max * (dt / 60.0)
    }

    pub fn default_delta_c0(v_max: f64, dt: f64) -> f64 {
        0.01 * v_max * dt
    }
}

/// Shadowing realisation in dB, one value per link and slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shadowing {
    pub uav_user: Vec<f64>,
    pub tbs_uav: Vec<f64>,
    pub uav_victim: Vec<Vec<f64>>,
}

impl Shadowing {
    pub fn zeros(victims_per_slot: &[usize]) -> Self {
        let t = victims_per_slot.len();
        Shadowing {
            uav_user: vec![0.0; t],
            tbs_uav: vec![0.0; t],
            uav_victim: victims_per_slot.iter().map(|&m| vec![0.0; m]).collect(),
        }
    }

    /// Draws every entry from N(0, sigma²) with a seeded generator, in the
    /// order user links, backhaul links, victim links (slot-major).
    pub fn sample(sigma_db: f64, victims_per_slot: &[usize], seed: u64) -> Self {
        if sigma_db == 0.0 {
            return Self::zeros(victims_per_slot);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma_db).expect("finite sigma");
        let t = victims_per_slot.len();
        let uav_user = (0..t).map(|_| normal.sample(&mut rng)).collect();
        let tbs_uav = (0..t).map(|_| normal.sample(&mut rng)).collect();
        let uav_victim = victims_per_slot
            .iter()
            .map(|&m| (0..m).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        Shadowing {
            uav_user,
            tbs_uav,
            uav_victim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tbs_position: Vec3,
    pub user_track: Vec<Vec3>,
    pub victim_tracks: Vec<Vec<Vec3>>,
    pub dt: f64,
    pub gains: Gains,
    pub noise_power: f64,
    pub rician_k: f64,
    pub pathloss: PathLoss,
    pub limits: Limits,
    pub shadowing: Shadowing,
    pub seed: u64,
}

impl Scenario {
    pub fn num_slots(&self) -> usize {
        self.user_track.len()
    }

    pub fn victims_per_slot(&self) -> Vec<usize> {
        self.victim_tracks.iter().map(Vec::len).collect()
    }

    /// Interference limit expressed relative to the noise floor, which is the
    /// scale the victim link coefficients live on.
    pub fn interference_limit_snr(&self) -> f64 {
        self.limits.i0 / self.noise_power
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Replaces the shadowing realisation with a fresh draw from `seed`.
    pub fn resample_shadowing(&mut self, seed: u64) {
        self.seed = seed;
        self.shadowing =
            Shadowing::sample(self.pathloss.shadow_sigma_db, &self.victims_per_slot(), seed);
    }

    pub fn with_p_max_dbm(mut self, dbm: f64) -> Result<Self> {
        self.limits.p_max = dbm_to_watts(dbm);
        self.validate()?;
        Ok(self)
    }

    pub fn with_i0_dbm(mut self, dbm: f64) -> Result<Self> {
        self.limits.i0 = dbm_to_watts(dbm);
        self.validate()?;
        Ok(self)
    }

    pub fn with_e0(mut self, joules: f64) -> Result<Self> {
        self.limits.e0 = joules;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rician_k(mut self, k: f64) -> Result<Self> {
        self.rician_k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.user_track.len();
        if t < 1 {
            return Err(Error::invalid("geometry.user_track", "T ≥ 1 violated"));
        }
        if self.victim_tracks.len() != t {
            return Err(Error::invalid(
                "geometry.victim_tracks",
                format!(
                    "track length {} != T = {t}: all tracks must have exactly T entries",
                    self.victim_tracks.len()
                ),
            ));
        }
        if !geometry::is_finite(self.tbs_position) {
            return Err(Error::invalid("geometry.tbs_position", "non-finite coordinate"));
        }
        for (i, p) in self.user_track.iter().enumerate() {
            if !geometry::is_finite(*p) {
                return Err(Error::invalid(
                    format!("geometry.user_track[{i}]"),
                    "non-finite coordinate",
                ));
            }
        }
        for (i, slot) in self.victim_tracks.iter().enumerate() {
            for (j, p) in slot.iter().enumerate() {
                if !geometry::is_finite(*p) {
                    return Err(Error::invalid(
                        format!("geometry.victim_tracks[{i}][{j}]"),
                        "non-finite coordinate",
                    ));
                }
            }
        }
        positive("time.dt", self.dt)?;
        positive("channel.tbs_gain_dbi", self.gains.tbs)?;
        positive("channel.uav_gain_dbi", self.gains.uav)?;
        positive("channel.user_gain_dbi", self.gains.uav_user)?;
        positive("channel.sat_user_gain_dbi", self.gains.sat_user)?;
        positive("channel.noise_power_dbm", self.noise_power)?;
        if !(self.rician_k >= 0.0 && self.rician_k.is_finite()) {
            return Err(Error::invalid("channel.rician_k", "K ≥ 0 violated"));
        }
        let pl = &self.pathloss;
        if !pl.a0_db.is_finite() {
            return Err(Error::invalid("channel.pathloss.a0_db", "non-finite"));
        }
        if !(pl.exponent > 0.0 && pl.exponent.is_finite()) {
            return Err(Error::invalid("channel.pathloss.exponent", "ς > 0 violated"));
        }
        positive("channel.pathloss.d0", pl.d0)?;
        if !(pl.shadow_sigma_db >= 0.0 && pl.shadow_sigma_db.is_finite()) {
            return Err(Error::invalid(
                "channel.pathloss.shadow_sigma_db",
                "σ_X ≥ 0 violated",
            ));
        }

        let l = &self.limits;
        positive("limits.v_min", l.v_min).map_err(|_| {
            Error::invalid("limits.v_min", "0 < v_min violated")
        })?;
        if !(l.v_min < l.v_max) || !l.v_max.is_finite() {
            return Err(Error::invalid("limits.v_min", "v_min < v_max violated"));
        }
        positive("limits.a_max", l.a_max)?;
        if !(l.z_min > 0.0) {
            return Err(Error::invalid("limits.z_min", "0 < z_min violated"));
        }
        if !(l.z_min < l.z_max) || !l.z_max.is_finite() {
            return Err(Error::invalid("limits.z_min", "z_min < z_max violated"));
        }
        positive("limits.p_max_dbm", l.p_max)?;
        positive("limits.e0", l.e0)?;
        positive("limits.i0_dbm", l.i0)?;
        positive("limits.p_s_dbm", l.p_s)?;
        positive("limits.delta_v0", l.delta_v0)?;
        positive("limits.delta_c0", l.delta_c0)?;
        for (i, p) in self.user_track.iter().enumerate() {
            if !(p[2] < l.z_min) {
                return Err(Error::invalid(
                    format!("geometry.user_track[{i}]"),
                    "user altitude < z_min violated",
                ));
            }
        }

        let s = &self.shadowing;
        if s.uav_user.len() != t || s.tbs_uav.len() != t || s.uav_victim.len() != t {
            return Err(Error::invalid(
                "channel.shadowing_db",
                "every shadowing list must have T entries",
            ));
        }
        for (i, (row, victims)) in s.uav_victim.iter().zip(&self.victim_tracks).enumerate() {
            if row.len() != victims.len() {
                return Err(Error::invalid(
                    format!("channel.shadowing_db.uav_victim[{i}]"),
                    "one value per victim required",
                ));
            }
        }
        let all_finite = s
            .uav_user
            .iter()
            .chain(&s.tbs_uav)
            .chain(s.uav_victim.iter().flatten())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::invalid("channel.shadowing_db", "non-finite value"));
        }
        Ok(())
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {value}")))
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json_str(&text)
}

/// Default slot length of the canned instance, s.
pub const PAPER_DT: f64 = 60.0;
/// Default shadowing seed of the canned instance.
pub const PAPER_SEED: u64 = 1;

/// The canned maritime instance: base station at (0, 0, 100) m, a ship
/// sampled at ten points between x = 50 km and x = 68 km, and one satellite
/// user per slot offset laterally by ±8 km in alternating directions.
pub fn paper_scenario() -> Scenario {
    let t = 10;
    let user_track: Vec<Vec3> = (0..t)
        .map(|i| [50_000.0 + 18_000.0 * i as f64 / (t - 1) as f64, 0.0, 10.0])
        .collect();
    // Slots are numbered from one here so the first victim sits at -8 km.
    let victim_tracks = user_track
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            vec![[c[0], c[1] + sign * 8000.0, c[2]]]
        })
        .collect::<Vec<_>>();
    let dt = PAPER_DT;
    let v_max = 60.0;
    let pathloss = PathLoss {
        a0_db: 116.7,
        exponent: 1.5,
        d0: 2600.0,
        shadow_sigma_db: 0.1,
    };
    let victims: Vec<usize> = victim_tracks.iter().map(Vec::len).collect();
    Scenario {
        tbs_position: [0.0, 0.0, 100.0],
        user_track,
        victim_tracks,
        dt,
        gains: Gains {
            tbs: db_to_linear(12.0),
            uav: db_to_linear(8.0),
            uav_user: db_to_linear(8.0),
            sat_user: db_to_linear(30.0),
        },
        noise_power: dbm_to_watts(-107.0),
        rician_k: 31.3,
        pathloss,
        limits: Limits {
            v_min: 10.0,
            v_max,
            a_max: 10.0,
            z_min: 2600.0,
            z_max: 5000.0,
            p_max: dbm_to_watts(40.0),
            e0: 4000.0,
            i0: dbm_to_watts(-55.0),
            p_s: dbm_to_watts(40.0),
            delta_v0: Limits::default_delta_v0(v_max, dt),
            delta_c0: Limits::default_delta_c0(v_max, dt),
        },
        shadowing: Shadowing::sample(pathloss.shadow_sigma_db, &victims, PAPER_SEED),
        seed: PAPER_SEED,
    }
}

/// A two-slot instance small enough for the grid oracle: the user drifts
/// 1 km east at a 2 km lateral offset from the base station's meridian and
/// one satellite user sits 5 km to the south.
pub fn toy_scenario() -> Scenario {
    let mut s = paper_scenario();
    s.user_track = vec![[6000.0, 2000.0, 10.0], [7000.0, 2000.0, 10.0]];
    s.victim_tracks = vec![vec![[6500.0, -3000.0, 10.0]]; 2];
    s.shadowing = Shadowing::sample(s.pathloss.shadow_sigma_db, &s.victims_per_slot(), s.seed);
    s.limits.p_max = units::dbm_to_watts(30.0);
    s.limits.e0 = 100.0;
    s
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub geometry: GeometryFile,
    pub channel: ChannelFile,
    pub limits: LimitsFile,
    pub time: TimeFile,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub tbs_position: Vec3,
    pub user_track: Vec<Vec3>,
    pub victim_tracks: Vec<Vec<Vec3>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub tbs_gain_dbi: f64,
    pub uav_gain_dbi: f64,
    pub user_gain_dbi: f64,
    pub sat_user_gain_dbi: f64,
    pub noise_power_dbm: f64,
    pub rician_k: f64,
    pub pathloss: PathLossFile,
    /// Explicit shadowing realisation. Sampled from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadowing_db: Option<Shadowing>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossFile {
    pub a0_db: f64,
    pub exponent: f64,
    pub d0: f64,
    pub shadow_sigma_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsFile {
    pub v_min: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub p_max_dbm: f64,
    pub e0: f64,
    pub i0_dbm: f64,
    pub p_s_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeFile {
    pub dt: f64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let ScenarioFile {
            geometry,
            channel,
            limits,
            time,
            seed,
        } = self;
        if geometry.user_track.is_empty() {
            return Err(Error::invalid("geometry.user_track", "T ≥ 1 violated"));
        }
        let pathloss = PathLoss {
            a0_db: channel.pathloss.a0_db,
            exponent: channel.pathloss.exponent,
            d0: channel.pathloss.d0,
            shadow_sigma_db: channel.pathloss.shadow_sigma_db,
        };
        let victims: Vec<usize> = geometry.victim_tracks.iter().map(Vec::len).collect();
        let shadowing = match channel.shadowing_db {
            Some(s) => s,
            None if victims.len() == geometry.user_track.len() => {
                Shadowing::sample(pathloss.shadow_sigma_db.max(0.0), &victims, seed)
            }
            None => Shadowing::zeros(&victims),
        };
        let dt = time.dt;
        let scenario = Scenario {
            tbs_position: geometry.tbs_position,
            user_track: geometry.user_track,
            victim_tracks: geometry.victim_tracks,
            dt,
            gains: Gains {
                tbs: db_to_linear(channel.tbs_gain_dbi),
                uav: db_to_linear(channel.uav_gain_dbi),
                uav_user: db_to_linear(channel.user_gain_dbi),
                sat_user: db_to_linear(channel.sat_user_gain_dbi),
            },
            noise_power: dbm_to_watts(channel.noise_power_dbm),
            rician_k: channel.rician_k,
            pathloss,
            limits: Limits {
                v_min: limits.v_min,
                v_max: limits.v_max,
                a_max: limits.a_max,
                z_min: limits.z_min,
                z_max: limits.z_max,
                p_max: dbm_to_watts(limits.p_max_dbm),
                e0: limits.e0,
                i0: dbm_to_watts(limits.i0_dbm),
                p_s: dbm_to_watts(limits.p_s_dbm),
                delta_v0: limits
                    .delta_v0
                    .unwrap_or_else(|| Limits::default_delta_v0(limits.v_max, dt)),
                delta_c0: limits
                    .delta_c0
                    .unwrap_or_else(|| Limits::default_delta_c0(limits.v_max, dt)),
            },
            shadowing,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            geometry: GeometryFile {
                tbs_position: s.tbs_position,
                user_track: s.user_track.clone(),
                victim_tracks: s.victim_tracks.clone(),
            },
            channel: ChannelFile {
                tbs_gain_dbi: linear_to_db(s.gains.tbs),
                uav_gain_dbi: linear_to_db(s.gains.uav),
                user_gain_dbi: linear_to_db(s.gains.uav_user),
                sat_user_gain_dbi: linear_to_db(s.gains.sat_user),
                noise_power_dbm: watts_to_dbm(s.noise_power),
                rician_k: s.rician_k,
                pathloss: PathLossFile {
                    a0_db: s.pathloss.a0_db,
                    exponent: s.pathloss.exponent,
                    d0: s.pathloss.d0,
                    shadow_sigma_db: s.pathloss.shadow_sigma_db,
                },
                shadowing_db: Some(s.shadowing.clone()),
            },
            limits: LimitsFile {
                v_min: s.limits.v_min,
                v_max: s.limits.v_max,
                a_max: s.limits.a_max,
                z_min: s.limits.z_min,
                z_max: s.limits.z_max,
                p_max_dbm: watts_to_dbm(s.limits.p_max),
                e0: s.limits.e0,
                i0_dbm: watts_to_dbm(s.limits.i0),
                p_s_dbm: watts_to_dbm(s.limits.p_s),
                delta_v0: Some(s.limits.delta_v0),
                delta_c0: Some(s.limits.delta_c0),
            },
            time: TimeFile { dt: s.dt },
            seed: s.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn canned_instance_matches_simulation_table() {
        let s = paper_scenario();
        assert_eq!(s.num_slots(), 10);
        assert_eq!(s.limits.v_min, 10.0);
        assert_eq!(s.limits.v_max, 60.0);
        assert_eq!(s.limits.a_max, 10.0);
        assert_eq!(s.limits.z_min, 2600.0);
        assert_eq!(s.limits.z_max, 5000.0);
        // -107 dBm expressed in watts: 10^(-10.7) mW.
        assert!(rel(s.noise_power, 10f64.powf(-10.7) * 1e-3) < 1e-12);
        assert!(rel(s.limits.p_s, 10.0) < 1e-12);
        assert_eq!(s.pathloss.d0, 2600.0);
        assert_eq!(s.pathloss.a0_db, 116.7);
        assert_eq!(10.0 * s.pathloss.exponent, 15.0);
        assert_eq!(s.tbs_position, [0.0, 0.0, 100.0]);
        s.validate().unwrap();
    }

    #[test]
    fn canned_victims_alternate_sides() {
        let s = paper_scenario();
        for (t, (victims, user)) in s.victim_tracks.iter().zip(&s.user_track).enumerate() {
            assert_eq!(victims.len(), 1);
            let expected = if (t + 1) % 2 == 0 { 8000.0 } else { -8000.0 };
            assert_eq!(victims[0][1] - user[1], expected);
            assert_eq!(victims[0][0], user[0]);
            assert_eq!(victims[0][2], user[2]);
        }
    }

    #[test]
    fn canned_user_track_spans_eighteen_km() {
        let s = paper_scenario();
        let first = s.user_track[0];
        let last = s.user_track[s.num_slots() - 1];
        assert_eq!(first, [5.0e4, 0.0, 10.0]);
        assert_eq!(last, [6.8e4, 0.0, 10.0]);
        assert_eq!(last[0] - first[0], 1.8e4);
    }

    #[test]
    fn unit_conversions_round_trip() {
        for &x in &[-107.0, -55.0, 0.0, 12.0, 40.0, 116.7] {
            assert!((watts_to_dbm(dbm_to_watts(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
            assert!((linear_to_db(db_to_linear(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
        assert!(rel(dbm_to_watts(30.0), 1.0) < 1e-15);
        assert!(rel(db_to_linear(30.0), 1000.0) < 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact_to_representation() {
        let s = paper_scenario();
        let back = Scenario::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back.user_track, s.user_track);
        assert_eq!(back.victim_tracks, s.victim_tracks);
        assert_eq!(back.shadowing, s.shadowing);
        assert!(rel(back.noise_power, s.noise_power) < 1e-12);
        assert!(rel(back.gains.sat_user, s.gains.sat_user) < 1e-12);
        assert!(rel(back.limits.i0, s.limits.i0) < 1e-12);
        assert!(rel(back.limits.p_max, s.limits.p_max) < 1e-12);
        assert_eq!(back.limits.delta_c0, s.limits.delta_c0);
    }

    #[test]
    fn rejects_equal_speed_limits() {
        let mut s = paper_scenario();
        s.limits.v_min = s.limits.v_max;
        let err = Scenario::from_json_str(&s.to_json_string()).unwrap_err();
        assert!(err.to_string().contains("v_min < v_max violated"), "{err}");
    }

    #[test]
    fn rejects_empty_user_track() {
        let s = paper_scenario();
        let mut file = ScenarioFile::from(&s);
        file.geometry.user_track.clear();
        file.geometry.victim_tracks.clear();
        file.channel.shadowing_db = None;
        let text = serde_json::to_string(&file).unwrap();
        let err = Scenario::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("T ≥ 1 violated"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_json() {
        let s = paper_scenario();
        let mut value: serde_json::Value = serde_json::from_str(&s.to_json_string()).unwrap();
        value["limits"]["warp_speed"] = serde_json::json!(9.0);
        assert!(matches!(
            Scenario::from_json_str(&value.to_string()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(Scenario::from_json_str("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_bad_limits_naming_the_field() {
        let cases: Vec<(fn(&mut Scenario), &str)> = vec![
            (|s| s.limits.a_max = 0.0, "limits.a_max"),
            (|s| s.limits.z_max = s.limits.z_min, "z_min < z_max violated"),
            (|s| s.limits.e0 = -1.0, "limits.e0"),
            (|s| s.pathloss.exponent = 0.0, "ς > 0 violated"),
            (|s| s.dt = 0.0, "time.dt"),
            (|s| { s.victim_tracks.pop(); }, "geometry.victim_tracks"),
        ];
        for (mutate, needle) in cases {
            let mut s = paper_scenario();
            mutate(&mut s);
            let err = s.validate().unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn missing_shadowing_is_sampled_from_seed() {
        let s = paper_scenario();
        let mut file = ScenarioFile::from(&s);
        file.channel.shadowing_db = None;
        let text = serde_json::to_string(&file).unwrap();
        let a = Scenario::from_json_str(&text).unwrap();
        let b = Scenario::from_json_str(&text).unwrap();
        assert_eq!(a.shadowing, b.shadowing);
        assert_eq!(a.shadowing, s.shadowing);
        assert!(a.shadowing.uav_user.iter().all(|x| x.abs() < 1.0));
    }
}
