//! Problem instances: geometry, budgets, reliability/secrecy targets and the
//! time discretization, plus the flat key/value file format used to store them.
//!
//! All quantities are SI linear internally. Power-like keys in scenario files
//! come in two spellings, `<name>_w` (watts) and `<name>_dbm`, and the channel
//! reference gain as `beta0` (linear) or `beta0_db`; exactly one spelling per
//! quantity may appear. Keys that are absent take the defaults of
//! [`Scenario::default`].

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result, Violation};
use crate::geom::Vec3;

/// Receiver noise power of the shipped configuration (−140 dBW), watts. See
/// the README for how this choice sets the throughput scale.
pub const DEFAULT_NOISE_W: f64 = 1e-14;

/// Immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub alice_pos: Vec3,
    pub bob_pos: Vec3,
    /// Estimated eavesdropper location.
    pub eve_est_pos: Vec3,
    /// Radius of the ball known to contain the eavesdropper, meters.
    pub eve_uncertainty: f64,
    pub uav_start: Vec3,
    pub uav_end: Vec3,
    /// Mission time, seconds.
    pub mission_time: f64,
    /// Slot duration, seconds.
    pub slot_duration: f64,
    /// Number of slots. Derived from `mission_time / slot_duration`.
    pub n_slots: usize,
    /// Channel uses per second. Only used to report packet durations.
    pub bandwidth_hz: f64,
    /// Total energy-like budgets, watts × channel uses summed over slots.
    pub p_tot_alice: f64,
    pub p_tot_uav: f64,
    /// Peak per-channel-use powers, watts.
    pub p_max_alice: f64,
    pub p_max_uav: f64,
    /// Maximum end-to-end blocklength per slot, channel uses.
    pub l_max: u32,
    pub h_min: f64,
    pub h_max: f64,
    pub v_xy_max: f64,
    pub v_z_max: f64,
    /// Channel power gain at 1 m, linear.
    pub beta0: f64,
    /// Terrestrial path-loss exponent of the Alice–Eve link.
    pub alpha: f64,
    pub noise_r: f64,
    pub noise_b: f64,
    pub noise_e: f64,
    pub eps_r: f64,
    pub eps_b: f64,
    pub eta_e: f64,
    /// Absolute EAST change (bits/s) below which the alternating loop stops.
    pub epsilon_conv: f64,
    pub rng_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        default_scenario()
    }
}

/// The published reference configuration (100 slots of 1 s, L^max = 400).
pub fn default_scenario() -> Scenario {
    Scenario {
        alice_pos: Vec3::new(-700.0, 0.0, 0.0),
        bob_pos: Vec3::new(700.0, 0.0, 0.0),
        eve_est_pos: Vec3::new(-500.0, 900.0, 0.0),
        eve_uncertainty: 10.0,
        uav_start: Vec3::new(-500.0, -1000.0, 60.0),
        uav_end: Vec3::new(1000.0, 500.0, 60.0),
        mission_time: 100.0,
        slot_duration: 1.0,
        n_slots: 100,
        bandwidth_hz: 1e6,
        p_tot_alice: 1000.0,
        p_tot_uav: 1000.0,
        p_max_alice: 0.1,
        p_max_uav: 0.1,
        l_max: 400,
        h_min: 60.0,
        h_max: 120.0,
        v_xy_max: 30.0,
        v_z_max: 5.0,
        beta0: 1e-7,
        alpha: 3.0,
        noise_r: DEFAULT_NOISE_W,
        noise_b: DEFAULT_NOISE_W,
        noise_e: DEFAULT_NOISE_W,
        eps_r: 1e-3,
        eps_b: 1e-3,
        eta_e: 1e-2,
        epsilon_conv: 1e-3,
        rng_seed: 1,
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn slot_count(mission_time: f64, slot_duration: f64) -> Option<usize> {
    if !(mission_time > 0.0 && slot_duration > 0.0) {
        return None;
    }
    let ratio = mission_time / slot_duration;
    let n = ratio.round();
    if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) && (1.0..1e7).contains(&n) {
        Some(n as usize)
    } else {
        None
    }
}

impl Scenario {
    /// Replace the discretization, keeping `n_slots` consistent.
    pub fn with_timing(mut self, mission_time: f64, slot_duration: f64) -> Self {
        self.mission_time = mission_time;
        self.slot_duration = slot_duration;
        self.n_slots = slot_count(mission_time, slot_duration).unwrap_or(0);
        self
    }

    /// Normalized gains ρ = β₀/σ² for the relay, Bob and Eve receivers.
    pub fn rho_r(&self) -> f64 {
        self.beta0 / self.noise_r
    }

    pub fn rho_b(&self) -> f64 {
        self.beta0 / self.noise_b
    }

    pub fn rho_e(&self) -> f64 {
        self.beta0 / self.noise_e
    }

    /// Every violated invariant; empty iff the scenario is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// Every violated invariant; empty iff the scenario is valid.
pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |f: &str, m: String| v.push(Violation::new(f, m));

    for (name, p) in [
        ("alice_pos", s.alice_pos),
        ("bob_pos", s.bob_pos),
        ("eve_est_pos", s.eve_est_pos),
        ("uav_start", s.uav_start),
        ("uav_end", s.uav_end),
    ] {
        if !p.is_finite() {
            push(name, "position must be finite".into());
        }
    }
    for (name, p) in [("alice_pos", s.alice_pos), ("bob_pos", s.bob_pos)] {
        if p.z != 0.0 {
            push(name, format!("ground node must have z = 0, got {}", p.z));
        }
    }

    if s.n_slots < 2 {
        push("n_slots", format!("n_slots ≥ 2 required, got {}", s.n_slots));
    }
    if !(s.slot_duration > 0.0 && s.slot_duration.is_finite()) {
        push("slot_duration", "slot_duration must be > 0".into());
    }
    match slot_count(s.mission_time, s.slot_duration) {
        Some(n) if n == s.n_slots => {}
        _ => push(
            "mission_time",
            format!(
                "mission_time = n_slots × slot_duration must hold exactly ({} vs {} × {})",
                s.mission_time, s.n_slots, s.slot_duration
            ),
        ),
    }

    if !(s.h_min > 0.0 && s.h_min <= s.h_max && s.h_max.is_finite()) {
        push("h_min", format!("need 0 < h_min ≤ h_max, got {} / {}", s.h_min, s.h_max));
    }
    for (name, p) in [("uav_start", s.uav_start), ("uav_end", s.uav_end)] {
        if p.z < s.h_min || p.z > s.h_max {
            push(
                name,
                format!("altitude bound violated: z = {} outside [{}, {}]", p.z, s.h_min, s.h_max),
            );
        }
    }

    for (name, x) in [
        ("p_tot_alice", s.p_tot_alice),
        ("p_tot_uav", s.p_tot_uav),
        ("p_max_alice", s.p_max_alice),
        ("p_max_uav", s.p_max_uav),
        ("noise_r", s.noise_r),
        ("noise_b", s.noise_b),
        ("noise_e", s.noise_e),
        ("beta0", s.beta0),
        ("bandwidth_hz", s.bandwidth_hz),
        ("v_xy_max", s.v_xy_max),
        ("v_z_max", s.v_z_max),
        ("epsilon_conv", s.epsilon_conv),
    ] {
        if !(x > 0.0 && x.is_finite()) {
            push(name, format!("must be strictly positive and finite, got {x}"));
        }
    }
    if !(s.eve_uncertainty >= 0.0 && s.eve_uncertainty.is_finite()) {
        push("eve_uncertainty", "must be ≥ 0".into());
    }
    if s.l_max < 2 {
        push("l_max", format!("l_max ≥ 2 required, got {}", s.l_max));
    }
    if !(s.alpha > 2.0 && s.alpha <= 4.0) {
        push("alpha", format!("path-loss exponent must lie in (2, 4], got {}", s.alpha));
    }
    for (name, x) in [("eps_r", s.eps_r), ("eps_b", s.eps_b), ("eta_e", s.eta_e)] {
        if !(x > 0.0 && x < 0.5) {
            push(name, format!("probability must lie in (0, 0.5), got {x}"));
        }
    }

    let d_ae = s.alice_pos.dist(s.eve_est_pos);
    if d_ae < s.eve_uncertainty {
        push(
            "eve_uncertainty",
            format!("Eve uncertainty exceeds Alice–Eve distance ({} > {d_ae:.3} m)", s.eve_uncertainty),
        );
    }
    let d_be = s.bob_pos.dist(s.eve_est_pos);
    if d_be < s.eve_uncertainty {
        push(
            "eve_uncertainty",
            format!("Eve uncertainty exceeds Bob–Eve distance ({} > {d_be:.3} m)", s.eve_uncertainty),
        );
    }
    if d_ae <= s.eve_uncertainty {
        push("alice_pos", "Alice lies inside the Eve uncertainty ball".into());
    }
    for (name, p) in [("uav_start", s.uav_start), ("uav_end", s.uav_end)] {
        if p.dist(s.eve_est_pos) <= s.eve_uncertainty {
            push(name, "waypoint lies inside the Eve uncertainty ball".into());
        }
    }

    if s.n_slots >= 2 && s.slot_duration > 0.0 {
        let hops = (s.n_slots - 1) as f64;
        let d = s.uav_end - s.uav_start;
        if d.norm_xy() / hops > s.v_xy_max * s.slot_duration * (1.0 + 1e-12) {
            push(
                "uav_end",
                "straight-line flight violates the horizontal speed limit within n_slots".into(),
            );
        }
        if d.z.abs() / hops > s.v_z_max * s.slot_duration * (1.0 + 1e-12) {
            push(
                "uav_end",
                "straight-line flight violates the vertical speed limit within n_slots".into(),
            );
        }
    }
    v
}

const POWER_KEYS: [&str; 7] = [
    "p_tot_alice",
    "p_tot_uav",
    "p_max_alice",
    "p_max_uav",
    "noise_r",
    "noise_b",
    "noise_e",
];

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Parse(format!("key `{key}` must be a number"))),
    }
}

fn as_vec3(key: &str, v: &toml::Value) -> Result<Vec3> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| Error::Parse(format!("key `{key}` must be a 3-element array")))?;
    Ok(Vec3::new(
        as_f64(key, &arr[0])?,
        as_f64(key, &arr[1])?,
        as_f64(key, &arr[2])?,
    ))
}

/// Parse scenario text without validating it.
pub fn parse_scenario_unchecked(text: &str) -> Result<Scenario> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let mut s = default_scenario();
    let mut seen_power = std::collections::BTreeSet::new();

    for (key, value) in &table {
        let k = key.as_str();
        if let Some(base) = POWER_KEYS
            .iter()
            .find(|b| k == format!("{b}_w") || k == format!("{b}_dbm"))
        {
            if !seen_power.insert(*base) {
                return Err(Error::Parse(format!(
                    "`{base}` given more than once (use exactly one of `{base}_w` / `{base}_dbm`)"
                )));
            }
            let raw = as_f64(k, value)?;
            let w = if k.ends_with("_dbm") { dbm_to_watts(raw) } else { raw };
            match *base {
                "p_tot_alice" => s.p_tot_alice = w,
                "p_tot_uav" => s.p_tot_uav = w,
                "p_max_alice" => s.p_max_alice = w,
                "p_max_uav" => s.p_max_uav = w,
                "noise_r" => s.noise_r = w,
                "noise_b" => s.noise_b = w,
                _ => s.noise_e = w,
            }
            continue;
        }
        match k {
            "alice_pos" => s.alice_pos = as_vec3(k, value)?,
            "bob_pos" => s.bob_pos = as_vec3(k, value)?,
            "eve_est_pos" => s.eve_est_pos = as_vec3(k, value)?,
            "uav_start" => s.uav_start = as_vec3(k, value)?,
            "uav_end" => s.uav_end = as_vec3(k, value)?,
            "eve_uncertainty" => s.eve_uncertainty = as_f64(k, value)?,
            "mission_time" => s.mission_time = as_f64(k, value)?,
            "slot_duration" => s.slot_duration = as_f64(k, value)?,
            "bandwidth_hz" => s.bandwidth_hz = as_f64(k, value)?,
            "l_max" => {
                let i = value
                    .as_integer()
                    .filter(|i| (0..=u32::MAX as i64).contains(i))
                    .ok_or_else(|| Error::Parse("`l_max` must be a non-negative integer".into()))?;
                s.l_max = i as u32;
            }
            "h_min" => s.h_min = as_f64(k, value)?,
            "h_max" => s.h_max = as_f64(k, value)?,
            "v_xy_max" => s.v_xy_max = as_f64(k, value)?,
            "v_z_max" => s.v_z_max = as_f64(k, value)?,
            "beta0" | "beta0_db" => {
                if table.contains_key("beta0") && table.contains_key("beta0_db") {
                    return Err(Error::Parse("use exactly one of `beta0` / `beta0_db`".into()));
                }
                let raw = as_f64(k, value)?;
                s.beta0 = if k == "beta0_db" { db_to_linear(raw) } else { raw };
            }
            "alpha" => s.alpha = as_f64(k, value)?,
            "eps_r" => s.eps_r = as_f64(k, value)?,
            "eps_b" => s.eps_b = as_f64(k, value)?,
            "eta_e" => s.eta_e = as_f64(k, value)?,
            "epsilon_conv" => s.epsilon_conv = as_f64(k, value)?,
            "rng_seed" => {
                let i = value
                    .as_integer()
                    .filter(|i| *i >= 0)
                    .ok_or_else(|| Error::Parse("`rng_seed` must be a non-negative integer".into()))?;
                s.rng_seed = i as u64;
            }
            "n_slots" => {
                return Err(Error::Parse(
                    "`n_slots` is derived from mission_time / slot_duration and cannot be set".into(),
                ))
            }
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
    }
    s.n_slots = slot_count(s.mission_time, s.slot_duration).unwrap_or(0);
    Ok(s)
}

/// Parse and validate scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s = parse_scenario_unchecked(text)?;
    let v = validate(&s);
    if v.is_empty() {
        Ok(s)
    } else {
        Err(Error::Validation(v))
    }
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

fn fmt_vec(v: Vec3) -> String {
    format!("[{:e}, {:e}, {:e}]", v.x, v.y, v.z)
}

/// Serialize to the scenario file format. Every value is written with
/// shortest round-trip precision so that reparsing yields an identical value.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "alice_pos = {}", fmt_vec(s.alice_pos));
    let _ = writeln!(o, "bob_pos = {}", fmt_vec(s.bob_pos));
    let _ = writeln!(o, "eve_est_pos = {}", fmt_vec(s.eve_est_pos));
    let _ = writeln!(o, "eve_uncertainty = {:e}", s.eve_uncertainty);
    let _ = writeln!(o, "uav_start = {}", fmt_vec(s.uav_start));
    let _ = writeln!(o, "uav_end = {}", fmt_vec(s.uav_end));
    let _ = writeln!(o, "mission_time = {:e}", s.mission_time);
    let _ = writeln!(o, "slot_duration = {:e}", s.slot_duration);
    let _ = writeln!(o, "bandwidth_hz = {:e}", s.bandwidth_hz);
    let _ = writeln!(o, "p_tot_alice_w = {:e}", s.p_tot_alice);
    let _ = writeln!(o, "p_tot_uav_w = {:e}", s.p_tot_uav);
    let _ = writeln!(o, "p_max_alice_w = {:e}", s.p_max_alice);
    let _ = writeln!(o, "p_max_uav_w = {:e}", s.p_max_uav);
    let _ = writeln!(o, "l_max = {}", s.l_max);
    let _ = writeln!(o, "h_min = {:e}", s.h_min);
    let _ = writeln!(o, "h_max = {:e}", s.h_max);
    let _ = writeln!(o, "v_xy_max = {:e}", s.v_xy_max);
    let _ = writeln!(o, "v_z_max = {:e}", s.v_z_max);
    let _ = writeln!(o, "beta0 = {:e}", s.beta0);
    let _ = writeln!(o, "alpha = {:e}", s.alpha);
    let _ = writeln!(o, "noise_r_w = {:e}", s.noise_r);
    let _ = writeln!(o, "noise_b_w = {:e}", s.noise_b);
    let _ = writeln!(o, "noise_e_w = {:e}", s.noise_e);
    let _ = writeln!(o, "eps_r = {:e}", s.eps_r);
    let _ = writeln!(o, "eps_b = {:e}", s.eps_b);
    let _ = writeln!(o, "eta_e = {:e}", s.eta_e);
    let _ = writeln!(o, "epsilon_conv = {:e}", s.epsilon_conv);
    let _ = writeln!(o, "rng_seed = {}", s.rng_seed);
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(v: &[Violation], needle: &str) -> bool {
        v.iter().any(|x| x.message.contains(needle))
    }

    #[test]
    fn defaults_match_reference_table() {
        let s = default_scenario();
        assert_eq!(s.alpha, 3.0);
        assert_eq!(s.p_max_alice, 0.1);
        assert_eq!(s.p_max_uav, 0.1);
        assert_eq!(s.n_slots, 100);
        assert_eq!(s.l_max, 400);
        assert_eq!(s.beta0, 1e-7);
        assert_eq!(s.p_tot_alice, 1000.0);
        assert_eq!((s.v_xy_max, s.v_z_max), (30.0, 5.0));
        assert_eq!((s.h_min, s.h_max), (60.0, 120.0));
        assert_eq!(s.epsilon_conv, 1e-3);
        assert!(validate(&s).is_empty(), "{:?}", validate(&s));
    }

    #[test]
    fn partial_file_takes_defaults() {
        let s = parse_scenario("mission_time = 100").unwrap();
        assert_eq!(s.alice_pos, Vec3::new(-700.0, 0.0, 0.0));
        assert_eq!(s.bob_pos, Vec3::new(700.0, 0.0, 0.0));
        assert_eq!(s.eve_uncertainty, 10.0);
        assert_eq!(s.l_max, 400);
        assert_eq!((s.eps_r, s.eps_b, s.eta_e), (1e-3, 1e-3, 1e-2));
        assert_eq!(s.n_slots, 100);
    }

    #[test]
    fn altitude_violation_is_reported() {
        let err = parse_scenario("h_min = 200\nuav_start = [-500, -1000, 60]").unwrap_err();
        match err {
            Error::Validation(v) => assert!(has(&v, "altitude bound violated")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn slot_count_is_derived() {
        let s = parse_scenario("mission_time = 100\nslot_duration = 1").unwrap();
        assert_eq!(s.n_slots, 100);
        let s = parse_scenario("mission_time = 150\nslot_duration = 1.5").unwrap();
        assert_eq!(s.n_slots, 100);
        assert!(parse_scenario("n_slots = 3").is_err());
    }

    #[test]
    fn large_uncertainty_flags_alice_eve() {
        let s = Scenario {
            eve_uncertainty: 2000.0,
            ..default_scenario()
        };
        assert!(has(&validate(&s), "Eve uncertainty exceeds Alice–Eve distance"));
    }

    #[test]
    fn single_slot_flagged() {
        let s = Scenario {
            n_slots: 1,
            ..default_scenario()
        };
        assert!(has(&validate(&s), "n_slots ≥ 2"));
    }

    #[test]
    fn power_units() {
        let s = parse_scenario("p_max_alice_dbm = 20\nnoise_e_dbm = -140").unwrap();
        assert!((s.p_max_alice - 0.1).abs() < 1e-15);
        assert!((s.noise_e / 1e-17 - 1.0).abs() < 1e-12);
        let s = parse_scenario("beta0_db = -70").unwrap();
        assert!((s.beta0 / 1e-7 - 1.0).abs() < 1e-12);
        assert!(parse_scenario("p_max_alice_dbm = 20\np_max_alice_w = 0.1").is_err());
        assert!(parse_scenario("beta0_db = -70\nbeta0 = 1e-7").is_err());
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(parse_scenario("alice_pos = [1, 2]"), Err(Error::Parse(_))));
        assert!(matches!(parse_scenario("= ="), Err(Error::Parse(_))));
        assert!(matches!(parse_scenario("colour = 3"), Err(Error::Parse(_))));
    }

    #[test]
    fn reachability_of_default() {
        let s = default_scenario();
        let hops = (s.n_slots - 1) as f64;
        let d = s.uav_end - s.uav_start;
        assert!(d.norm_xy() / hops <= s.v_xy_max * s.slot_duration);
        assert!(d.z.abs() / hops <= s.v_z_max * s.slot_duration);
        let slow = Scenario {
            v_xy_max: 10.0,
            ..default_scenario()
        };
        assert!(has(&validate(&slow), "horizontal speed"));
    }

    #[test]
    fn serialize_round_trip_default() {
        let s = default_scenario();
        let back = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(s, back);
    }
}
