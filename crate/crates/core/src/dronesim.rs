//! Kinematic quadcopter in a world NED frame.
//!
//! X points north (forward at yaw 0), Y east (right), Z down. Yaw is in
//! degrees, clockwise-positive when viewed from above, and always kept in
//! `(-180, 180]`. Motion is instantaneous: every movement or rotation skill
//! teleports the drone and appends one [`StateTransition`] to the log.
//! Takeoff and landing change the state but are never logged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TAKEOFF_ALTITUDE_M: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("drone is already airborne")]
    AlreadyAirborne,
    #[error("drone is not airborne")]
    NotAirborne,
    #[error("non-finite argument to {0}")]
    NonFinite(&'static str),
}

/// Normalize an angle in degrees into `(-180, 180]`.
///
/// Values already inside the range are returned untouched, which makes the
/// function exactly idempotent.
pub fn normalize_yaw(deg: f64) -> Result<f64, SimError> {
    if !deg.is_finite() {
        return Err(SimError::NonFinite("normalize_yaw"));
    }
    if deg > -180.0 && deg <= 180.0 {
        return Ok(deg);
    }
    let mut r = deg.rem_euclid(360.0);
    // rem_euclid can round up to the modulus for tiny negative inputs
    if r >= 360.0 {
        r -= 360.0;
    }
    if r > 180.0 {
        // exact for r in (180, 360) by Sterbenz
        r -= 360.0;
    }
    Ok(r)
}

/// Shortest signed angular distance `a - b`, in `(-180, 180]`.
pub fn yaw_difference(a: f64, b: f64) -> Result<f64, SimError> {
    normalize_yaw(a - b)
}

/// Rotate a body-frame displacement into the world frame at the given yaw.
///
/// `dx = f·cos(ψ) − r·sin(ψ)`, `dy = f·sin(ψ) + r·cos(ψ)`, `dz` unchanged.
pub fn body_to_world(forward: f64, right: f64, down: f64, yaw_deg: f64) -> Result<[f64; 3], SimError> {
    if ![forward, right, down, yaw_deg].iter().all(|v| v.is_finite()) {
        return Err(SimError::NonFinite("body_to_world"));
    }
    let (s, c) = yaw_deg.to_radians().sin_cos();
    Ok([forward * c - right * s, forward * s + right * c, down])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub airborne: bool,
}

impl DroneState {
    pub const GROUNDED_AT_ORIGIN: DroneState = DroneState { x: 0.0, y: 0.0, z: 0.0, yaw: 0.0, airborne: false };

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// One `[dX, dY, dZ, dYaw]` delta. Serialized as a four-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct StateTransition {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dyaw: f64,
}

impl StateTransition {
    pub const fn new(dx: f64, dy: f64, dz: f64, dyaw: f64) -> Self {
        StateTransition { dx, dy, dz, dyaw }
    }

    pub const fn movement(dx: f64, dy: f64, dz: f64) -> Self {
        StateTransition::new(dx, dy, dz, 0.0)
    }

    pub const fn rotation(dyaw: f64) -> Self {
        StateTransition::new(0.0, 0.0, 0.0, dyaw)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.dx, self.dy, self.dz, self.dyaw]
    }

    /// Movement and rotation are never combined in a single transition.
    pub fn is_pure(&self) -> bool {
        self.dyaw == 0.0 || (self.dx == 0.0 && self.dy == 0.0 && self.dz == 0.0)
    }
}

impl From<[f64; 4]> for StateTransition {
    fn from(a: [f64; 4]) -> Self {
        StateTransition::new(a[0], a[1], a[2], a[3])
    }
}

impl From<StateTransition> for [f64; 4] {
    fn from(t: StateTransition) -> Self {
        t.as_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub takeoff_altitude_m: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { takeoff_altitude_m: DEFAULT_TAKEOFF_ALTITUDE_M }
    }
}

/// A single simulated drone plus its transition log.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    state: DroneState,
    log: Vec<StateTransition>,
}

impl Default for Simulator {
    fn default() -> Self {
        Simulator::new(SimConfig::default())
    }
}

impl Simulator {
    pub fn new(config: SimConfig) -> Self {
        Simulator { config, state: DroneState::GROUNDED_AT_ORIGIN, log: Vec::new() }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn reset(&mut self) -> DroneState {
        self.state = DroneState::GROUNDED_AT_ORIGIN;
        self.log.clear();
        self.state
    }

    pub fn state(&self) -> &DroneState {
        &self.state
    }

    pub fn log(&self) -> &[StateTransition] {
        &self.log
    }

    pub fn into_log(self) -> Vec<StateTransition> {
        self.log
    }

    pub fn takeoff(&mut self) -> Result<(), SimError> {
        if self.state.airborne {
            return Err(SimError::AlreadyAirborne);
        }
        self.state.z = -self.config.takeoff_altitude_m;
        self.state.airborne = true;
        Ok(())
    }

    pub fn land(&mut self) -> Result<(), SimError> {
        if !self.state.airborne {
            return Err(SimError::NotAirborne);
        }
        self.state.z = 0.0;
        self.state.airborne = false;
        Ok(())
    }

    /// Teleport to an absolute world position. The optional speed argument
    /// of the skill API is accepted by the interpreter and dropped before
    /// reaching here.
    pub fn fly_to(&mut self, x: f64, y: f64, z: f64) -> Result<(), SimError> {
        if !self.state.airborne {
            return Err(SimError::NotAirborne);
        }
        if ![x, y, z].iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite("fly_to"));
        }
        let t = StateTransition::movement(x - self.state.x, y - self.state.y, z - self.state.z);
        self.state.x = x;
        self.state.y = y;
        self.state.z = z;
        self.log.push(t);
        Ok(())
    }

    /// Set the absolute world yaw; the logged delta is the shortest signed
    /// rotation from the previous heading.
    pub fn set_yaw(&mut self, deg: f64) -> Result<(), SimError> {
        if !self.state.airborne {
            return Err(SimError::NotAirborne);
        }
        if !deg.is_finite() {
            return Err(SimError::NonFinite("set_yaw"));
        }
        let target = normalize_yaw(deg)?;
        let delta = yaw_difference(target, self.state.yaw)?;
        self.state.yaw = target;
        self.log.push(StateTransition::rotation(delta));
        Ok(())
    }

    pub fn get_yaw(&self) -> f64 {
        self.state.yaw
    }

    pub fn get_drone_position(&self) -> [f64; 3] {
        self.state.position()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_grounded_origin_and_idempotent() {
        let mut sim = Simulator::default();
        assert_eq!(sim.reset(), DroneState::GROUNDED_AT_ORIGIN);
        sim.takeoff().unwrap();
        sim.fly_to(3.0, 2.0, -4.0).unwrap();
        sim.set_yaw(45.0).unwrap();
        assert_eq!(sim.reset(), DroneState::GROUNDED_AT_ORIGIN);
        assert!(sim.log().is_empty());
    }

    #[test]
    fn takeoff_and_land_are_not_logged() {
        let mut sim = Simulator::default();
        sim.takeoff().unwrap();
        assert_eq!(*sim.state(), DroneState { x: 0.0, y: 0.0, z: -1.5, yaw: 0.0, airborne: true });
        assert!(sim.log().is_empty());
        assert_eq!(sim.takeoff(), Err(SimError::AlreadyAirborne));
        sim.land().unwrap();
        assert_eq!(*sim.state(), DroneState::GROUNDED_AT_ORIGIN);
        assert_eq!(sim.land(), Err(SimError::NotAirborne));
        assert!(sim.log().is_empty());
    }

    #[test]
    fn takeoff_altitude_is_configurable() {
        let mut sim = Simulator::new(SimConfig { takeoff_altitude_m: 3.0 });
        sim.takeoff().unwrap();
        assert_eq!(sim.get_drone_position(), [0.0, 0.0, -3.0]);
    }

    #[test]
    fn fly_down_is_positive_z() {
        let mut sim = Simulator::default();
        sim.takeoff().unwrap();
        sim.fly_to(0.0, 0.0, 3.5).unwrap();
        assert_eq!(sim.log(), &[StateTransition::movement(0.0, 0.0, 5.0)]);
        sim.fly_to(0.0, 0.0, 3.5).unwrap();
        assert_eq!(sim.log()[1], StateTransition::movement(0.0, 0.0, 0.0));
    }

    #[test]
    fn fly_to_requires_airborne_and_finite() {
        let mut sim = Simulator::default();
        assert_eq!(sim.fly_to(1.0, 0.0, 0.0), Err(SimError::NotAirborne));
        sim.takeoff().unwrap();
        assert!(matches!(sim.fly_to(f64::NAN, 0.0, 0.0), Err(SimError::NonFinite(_))));
        assert!(sim.log().is_empty());
    }

    #[test]
    fn set_yaw_logs_shortest_delta() {
        let mut sim = Simulator::default();
        sim.takeoff().unwrap();
        sim.set_yaw(90.0).unwrap();
        assert_eq!(sim.log()[0], StateTransition::rotation(90.0));
        sim.reset();
        sim.takeoff().unwrap();
        sim.set_yaw(270.0).unwrap();
        assert_eq!(sim.log()[0], StateTransition::rotation(-90.0));
        assert_eq!(sim.get_yaw(), -90.0);
        sim.set_yaw(-90.0).unwrap();
        assert_eq!(sim.log()[1], StateTransition::rotation(0.0));
    }

    #[test]
    fn set_yaw_errors() {
        let mut sim = Simulator::default();
        assert_eq!(sim.set_yaw(10.0), Err(SimError::NotAirborne));
        sim.takeoff().unwrap();
        assert!(sim.set_yaw(f64::INFINITY).is_err());
    }

    #[test]
    fn reads_do_not_log() {
        let mut sim = Simulator::default();
        assert_eq!(sim.get_yaw(), 0.0);
        sim.takeoff().unwrap();
        assert_eq!(sim.get_drone_position(), [0.0, 0.0, -1.5]);
        let _ = sim.get_yaw();
        assert!(sim.log().is_empty());
    }

    #[test]
    fn normalize_yaw_examples() {
        assert_eq!(normalize_yaw(90.0).unwrap(), 90.0);
        assert_eq!(normalize_yaw(270.0).unwrap(), -90.0);
        assert_eq!(normalize_yaw(-180.0).unwrap(), 180.0);
        assert_eq!(normalize_yaw(180.0).unwrap(), 180.0);
        assert_eq!(normalize_yaw(540.0).unwrap(), 180.0);
        assert_eq!(normalize_yaw(-1e-20).unwrap(), -1e-20);
        let tiny = normalize_yaw(-360.0 - 1e-13).unwrap();
        assert!(tiny > -180.0 && tiny <= 180.0 && tiny.abs() < 1e-9);
        assert!(normalize_yaw(f64::NAN).is_err());
    }

    #[test]
    fn body_to_world_examples() {
        assert_eq!(body_to_world(1.0, 0.0, 0.0, 0.0).unwrap(), [1.0, 0.0, 0.0]);
        let [dx, dy, dz] = body_to_world(0.0, -4.0, 0.0, 90.0).unwrap();
        assert!((dx - 4.0).abs() < 1e-12 && dy.abs() < 1e-12 && dz == 0.0);
        let a = 30f64.to_radians();
        let [dx, dy, dz] = body_to_world(0.0, 10.0 * a.cos(), -10.0 * a.sin(), 0.0).unwrap();
        assert_eq!(dx, 0.0);
        assert!((dy - 8.6603).abs() < 1e-4);
        assert!((dz + 5.0).abs() < 1e-12);
        assert!(body_to_world(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn transition_serializes_as_array() {
        let t = StateTransition::new(0.0, 8.5, -5.0, 0.0);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[0.0,8.5,-5.0,0.0]");
        let back: StateTransition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
