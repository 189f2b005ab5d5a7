//! Task corpus: natural-language queries paired with ground-truth
//! transition lists, built from structured maneuver specs.
//!
//! Three complexity families are generated:
//! - **A**: axis-aligned moves in the world frame.
//! - **B**: turns combined with moves in the drone's body frame.
//! - **C**: angled moves inside a plane of the body frame, optionally after
//!   a turn.
//!
//! Ground truth comes from a closed-form fold over the maneuvers. The oracle
//! program realizes the same maneuvers in SkillScript and is checked by
//! running it through the simulator, so the two computations cross-validate.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dronesim::{body_to_world, normalize_yaw, Simulator, StateTransition};
use crate::eval::{transitions_match, Tolerance};
use crate::skillscript::{self, Axis, ExecError, Expr, Limits, SkillProgram, Statement};

pub const CORPUS_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNTS: [usize; 3] = [15, 15, 14];

const DEFAULT_CORPUS: &str = include_str!("../assets/corpus_default.json");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus file is not valid: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unsupported corpus version {0} (expected {CORPUS_VERSION})")]
    UnsupportedVersion(u32),
    #[error("duplicate task id `{0}`")]
    DuplicateId(String),
    #[error("task `{0}` has an empty ground truth")]
    EmptyGroundTruth(String),
    #[error("task `{task}`: ground-truth transition {index} mixes movement and rotation")]
    ImpureTransition { task: String, index: usize },
    #[error("task `{task}`: invalid maneuver {index}: {reason}")]
    InvalidManeuver { task: String, index: usize, reason: String },
    #[error("task `{0}` has no maneuvers; it cannot be validated or solved by the oracle")]
    MissingManeuvers(String),
    #[error("task `{task}`: oracle program failed: {error}")]
    Exec { task: String, error: ExecError },
    #[error("task `{task}`: transition {index} differs: expected {expected:?}, oracle produced {actual:?}")]
    Mismatch { task: String, index: usize, expected: Option<[f64; 4]>, actual: Option<[f64; 4]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    World,
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    XY,
    XZ,
    YZ,
}

/// One maneuver of a task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManeuverSpec {
    /// Straight displacement. In the body frame `dx, dy, dz` are
    /// forward, right and down.
    RelativeMove { frame: Frame, dx: f64, dy: f64, dz: f64 },
    /// Rotation in place, clockwise-positive, magnitude at most 180°.
    Turn { degrees: f64 },
    /// Move of `distance` meters inside a body-frame plane at `angle_deg`
    /// from the plane's primary axis (X for XY and XZ, Y for YZ).
    ///
    /// `primary_sign` chooses forward/backward (X) or right/left (Y).
    /// `secondary_sign` chooses right/left in XY and top/bottom in XZ, YZ,
    /// where top (+1) is up, i.e. negative Z.
    PlaneAngleMove { plane: Plane, angle_deg: f64, distance: f64, primary_sign: i8, secondary_sign: i8 },
}

impl ManeuverSpec {
    pub fn world(dx: f64, dy: f64, dz: f64) -> Self {
        ManeuverSpec::RelativeMove { frame: Frame::World, dx, dy, dz }
    }

    pub fn body(forward: f64, right: f64, down: f64) -> Self {
        ManeuverSpec::RelativeMove { frame: Frame::Body, dx: forward, dy: right, dz: down }
    }

    pub fn turn(degrees: f64) -> Self {
        ManeuverSpec::Turn { degrees }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ManeuverSpec::RelativeMove { dx, dy, dz, .. } => {
                if ![dx, dy, dz].iter().all(|v| v.is_finite()) {
                    return Err("non-finite displacement".into());
                }
            }
            ManeuverSpec::Turn { degrees } => {
                if !degrees.is_finite() || degrees.abs() > 180.0 {
                    return Err(format!("turn of {degrees} degrees is outside [-180, 180]"));
                }
            }
            ManeuverSpec::PlaneAngleMove { angle_deg, distance, primary_sign, secondary_sign, .. } => {
                if !(distance.is_finite() && distance > 0.0) {
                    return Err(format!("distance {distance} must be positive"));
                }
                if !(0.0..=90.0).contains(&angle_deg) {
                    return Err(format!("angle {angle_deg} is outside [0, 90]"));
                }
                if primary_sign.abs() != 1 || secondary_sign.abs() != 1 {
                    return Err("quadrant signs must be +1 or -1".into());
                }
            }
        }
        Ok(())
    }

    /// Body-frame `(forward, right, down)` offset of a plane move.
    fn plane_offset(plane: Plane, angle_deg: f64, distance: f64, primary: i8, secondary: i8) -> [f64; 3] {
        let a = angle_deg.to_radians();
        let along = f64::from(primary) * distance * a.cos();
        let across = f64::from(secondary) * distance * a.sin();
        match plane {
            Plane::XY => [along, across, 0.0],
            Plane::XZ => [along, 0.0, -across],
            Plane::YZ => [0.0, along, -across],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub query: String,
    pub family: Family,
    #[serde(default)]
    pub tags: Vec<String>,
    pub ground_truth: Vec<StateTransition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maneuvers: Option<Vec<ManeuverSpec>>,
}

impl Task {
    /// Builds a task whose query and ground truth are derived from the maneuvers.
    pub fn from_maneuvers(id: impl Into<String>, family: Family, maneuvers: Vec<ManeuverSpec>) -> Self {
        let ground_truth = derive_ground_truth(&maneuvers);
        let mut tags = vec![match family {
            Family::A => "world_frame".to_string(),
            Family::B => "body_frame".to_string(),
            Family::C => "plane_angle".to_string(),
        }];
        if maneuvers.iter().any(|m| matches!(m, ManeuverSpec::Turn { .. })) {
            tags.push("turn".into());
        }
        if ground_truth.iter().any(|t| t.dz != 0.0) {
            tags.push("vertical".into());
        }
        Task { id: id.into(), query: render_query(&maneuvers), family, tags, ground_truth, maneuvers: Some(maneuvers) }
    }

    pub fn has_vertical_component(&self) -> bool {
        self.ground_truth.iter().any(|t| t.dz != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: u32,
    pub tasks: Vec<Task>,
}

impl CorpusFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn task_by_query(&self, query: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.query == query)
    }
}

/// Closed-form ground truth: one transition per maneuver, tracking yaw.
pub fn derive_ground_truth(maneuvers: &[ManeuverSpec]) -> Vec<StateTransition> {
    let mut yaw = 0.0;
    maneuvers
        .iter()
        .map(|m| match *m {
            ManeuverSpec::Turn { degrees } => {
                let delta = normalize_yaw(degrees).expect("finite turn");
                yaw = normalize_yaw(yaw + degrees).expect("finite yaw");
                StateTransition::rotation(delta)
            }
            ManeuverSpec::RelativeMove { frame: Frame::World, dx, dy, dz } => StateTransition::movement(dx, dy, dz),
            ManeuverSpec::RelativeMove { frame: Frame::Body, dx, dy, dz } => {
                let [x, y, z] = body_to_world(dx, dy, dz, yaw).expect("finite move");
                StateTransition::movement(x, y, z)
            }
            ManeuverSpec::PlaneAngleMove { plane, angle_deg, distance, primary_sign, secondary_sign } => {
                let [f, r, d] = ManeuverSpec::plane_offset(plane, angle_deg, distance, primary_sign, secondary_sign);
                let [x, y, z] = body_to_world(f, r, d, yaw).expect("finite move");
                StateTransition::movement(x, y, z)
            }
        })
        .collect()
}

/// Deliberate distortions applied when rendering a program, used by the
/// faulty agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProgramDistortion {
    /// Negate every vertical displacement.
    pub flip_z: bool,
    /// Apply body-frame offsets directly as world offsets.
    pub body_as_world: bool,
}

fn lit(v: f64) -> Expr {
    if v.is_sign_negative() && v != 0.0 {
        Expr::neg(Expr::num(-v))
    } else {
        Expr::num(v)
    }
}

/// `base + offset`, dropping a zero offset and folding the sign into `-`.
fn offset(base: Expr, v: f64) -> Expr {
    if v == 0.0 {
        base
    } else if v < 0.0 {
        Expr::sub(base, Expr::num(-v))
    } else {
        Expr::add(base, Expr::num(v))
    }
}

fn scaled(coefficient: f64, e: Expr) -> Expr {
    Expr::mul(lit(coefficient), e)
}

fn position() -> Statement {
    Statement::assign("pos", Expr::call("get_drone_position", vec![]))
}

fn body_fly_to(out: &mut Vec<Statement>, forward: Expr, right: Expr, down: Expr, body_as_world: bool) {
    out.push(Statement::assign("forward", forward));
    out.push(Statement::assign("right", right));
    out.push(Statement::assign("down", down));
    out.push(position());
    let (fx, fy) = if body_as_world {
        (
            Expr::add(Expr::field("pos", Axis::X), Expr::var("forward")),
            Expr::add(Expr::field("pos", Axis::Y), Expr::var("right")),
        )
    } else {
        out.push(Statement::assign("heading", Expr::call("radians", vec![Expr::call("get_yaw", vec![])])));
        let cos = || Expr::call("cos", vec![Expr::var("heading")]);
        let sin = || Expr::call("sin", vec![Expr::var("heading")]);
        (
            Expr::sub(
                Expr::add(Expr::field("pos", Axis::X), Expr::mul(Expr::var("forward"), cos())),
                Expr::mul(Expr::var("right"), sin()),
            ),
            Expr::add(
                Expr::add(Expr::field("pos", Axis::Y), Expr::mul(Expr::var("forward"), sin())),
                Expr::mul(Expr::var("right"), cos()),
            ),
        )
    };
    let fz = Expr::add(Expr::field("pos", Axis::Z), Expr::var("down"));
    out.push(Statement::call("fly_to", vec![fx, fy, fz]));
}

/// SkillScript program realizing `maneuvers`, optionally distorted.
pub fn render_program(maneuvers: &[ManeuverSpec], distortion: ProgramDistortion) -> SkillProgram {
    let z_sign = if distortion.flip_z { -1.0 } else { 1.0 };
    let mut out = vec![Statement::call("takeoff", vec![])];
    for m in maneuvers {
        match *m {
            ManeuverSpec::Turn { degrees } => {
                out.push(Statement::assign("yaw", Expr::call("get_yaw", vec![])));
                out.push(Statement::call("set_yaw", vec![offset(Expr::var("yaw"), degrees)]));
            }
            ManeuverSpec::RelativeMove { frame: Frame::World, dx, dy, dz } => {
                out.push(position());
                out.push(Statement::call(
                    "fly_to",
                    vec![
                        offset(Expr::field("pos", Axis::X), dx),
                        offset(Expr::field("pos", Axis::Y), dy),
                        offset(Expr::field("pos", Axis::Z), z_sign * dz),
                    ],
                ));
            }
            ManeuverSpec::RelativeMove { frame: Frame::Body, dx, dy, dz } => {
                body_fly_to(&mut out, lit(dx), lit(dy), lit(z_sign * dz), distortion.body_as_world);
            }
            ManeuverSpec::PlaneAngleMove { plane, angle_deg, distance, primary_sign, secondary_sign } => {
                out.push(Statement::assign("angle", Expr::call("radians", vec![Expr::num(angle_deg)])));
                let along = scaled(f64::from(primary_sign) * distance, Expr::call("cos", vec![Expr::var("angle")]));
                let across = |coefficient: f64| scaled(coefficient, Expr::call("sin", vec![Expr::var("angle")]));
                let across_amount = f64::from(secondary_sign) * distance;
                let (f, r, d) = match plane {
                    Plane::XY => (along, across(across_amount), lit(0.0)),
                    Plane::XZ => (along, lit(0.0), across(-z_sign * across_amount)),
                    Plane::YZ => (lit(0.0), along, across(-z_sign * across_amount)),
                };
                body_fly_to(&mut out, f, r, d, distortion.body_as_world);
            }
        }
    }
    SkillProgram::new(out)
}

/// A correct SkillScript solution for `maneuvers`.
pub fn oracle_program(maneuvers: &[ManeuverSpec]) -> String {
    skillscript::pretty_print(&render_program(maneuvers, ProgramDistortion::default()))
}

/// Run `source` on a fresh default simulator and return its transition log.
pub fn execute_program(source: &str) -> Result<Vec<StateTransition>, ExecError> {
    let program = skillscript::parse(source)?;
    let mut sim = Simulator::default();
    skillscript::interpret(&program, &mut sim, Limits::default())?;
    Ok(sim.into_log())
}

fn check_shape(task: &Task) -> Result<(), CorpusError> {
    if task.ground_truth.is_empty() {
        return Err(CorpusError::EmptyGroundTruth(task.id.clone()));
    }
    if let Some(index) = task.ground_truth.iter().position(|t| !t.is_pure()) {
        return Err(CorpusError::ImpureTransition { task: task.id.clone(), index });
    }
    Ok(())
}

/// Execute the oracle program for `task` and require its log to match the
/// stored ground truth within `tol`.
pub fn validate_task(task: &Task, tol: &Tolerance) -> Result<(), CorpusError> {
    check_shape(task)?;
    let maneuvers = task.maneuvers.as_ref().ok_or_else(|| CorpusError::MissingManeuvers(task.id.clone()))?;
    for (index, m) in maneuvers.iter().enumerate() {
        m.validate().map_err(|reason| CorpusError::InvalidManeuver { task: task.id.clone(), index, reason })?;
    }
    let log = execute_program(&oracle_program(maneuvers))
        .map_err(|error| CorpusError::Exec { task: task.id.clone(), error })?;
    let n = log.len().max(task.ground_truth.len());
    for index in 0..n {
        let (expected, actual) = (task.ground_truth.get(index), log.get(index));
        let ok = matches!((expected, actual), (Some(e), Some(a)) if transitions_match(a, e, tol));
        if !ok {
            return Err(CorpusError::Mismatch {
                task: task.id.clone(),
                index,
                expected: expected.map(StateTransition::as_array),
                actual: actual.map(StateTransition::as_array),
            });
        }
    }
    Ok(())
}

pub fn parse_corpus(text: &str, tol: &Tolerance) -> Result<CorpusFile, CorpusError> {
    let corpus: CorpusFile = serde_json::from_str(text)?;
    if corpus.version != CORPUS_VERSION {
        return Err(CorpusError::UnsupportedVersion(corpus.version));
    }
    let mut seen = HashSet::new();
    for task in &corpus.tasks {
        if !seen.insert(task.id.as_str()) {
            return Err(CorpusError::DuplicateId(task.id.clone()));
        }
        if task.maneuvers.is_some() {
            validate_task(task, tol)?;
        } else {
            check_shape(task)?;
        }
    }
    Ok(corpus)
}

/// Load a corpus file, re-validating every task that carries maneuvers.
pub fn load_corpus(path: impl AsRef<Path>, tol: &Tolerance) -> Result<CorpusFile, CorpusError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    parse_corpus(&text, tol)
}

/// The frozen 44-task corpus shipped with the crate.
pub fn default_corpus() -> CorpusFile {
    parse_corpus(DEFAULT_CORPUS, &Tolerance::default()).expect("bundled corpus is valid")
}

pub fn default_corpus_json() -> &'static str {
    DEFAULT_CORPUS
}

// ---------------------------------------------------------------------------
// Query rendering

fn meters(v: f64) -> String {
    let v = v.abs();
    if v == 1.0 {
        "1 meter".into()
    } else {
        format!("{v} meters")
    }
}

fn axis_move_phrase(dx: f64, dy: f64, dz: f64) -> String {
    let (amount, dir) = match (dx, dy, dz) {
        (x, 0.0, 0.0) if x > 0.0 => (x, "forward"),
        (x, 0.0, 0.0) if x < 0.0 => (x, "backward"),
        (0.0, y, 0.0) if y > 0.0 => (y, "right"),
        (0.0, y, 0.0) if y < 0.0 => (y, "left"),
        (0.0, 0.0, z) if z > 0.0 => (z, "down"),
        (0.0, 0.0, z) if z < 0.0 => (z, "up"),
        _ => return format!("fly by ({dx}, {dy}, {dz}) meters"),
    };
    format!("fly {} {dir}", meters(amount))
}

fn plane_phrase(plane: Plane, angle_deg: f64, distance: f64, primary: i8, secondary: i8) -> String {
    let (direction, axis_name, plane_name) = match plane {
        Plane::XY => {
            let p = if primary > 0 { "forward" } else { "backward" };
            let s = if secondary > 0 { "right" } else { "left" };
            (format!("{p}-{s}"), "forward axis", "XY")
        }
        Plane::XZ => {
            let p = if primary > 0 { "forward" } else { "backward" };
            let s = if secondary > 0 { "top" } else { "bottom" };
            (format!("{s}-{p}"), "horizontal axis", "XZ")
        }
        Plane::YZ => {
            let p = if primary > 0 { "right" } else { "left" };
            let s = if secondary > 0 { "top" } else { "bottom" };
            (format!("{s}-{p}"), "horizontal axis", "YZ")
        }
    };
    format!(
        "fly the drone in the {direction} direction at an angle of {angle_deg} degrees from the {axis_name}, \
         in the {plane_name} plane of drone's body frame for a distance of {}",
        meters(distance)
    )
}

fn maneuver_phrase(m: &ManeuverSpec) -> String {
    match *m {
        ManeuverSpec::Turn { degrees } => {
            let dir = if degrees < 0.0 { "counterclockwise" } else { "clockwise" };
            format!("turn {} degrees {dir}", degrees.abs())
        }
        ManeuverSpec::RelativeMove { frame: Frame::World, dx, dy, dz } => axis_move_phrase(dx, dy, dz),
        ManeuverSpec::RelativeMove { frame: Frame::Body, dx, dy, dz } => {
            format!("{} in the drone's body frame", axis_move_phrase(dx, dy, dz))
        }
        ManeuverSpec::PlaneAngleMove { plane, angle_deg, distance, primary_sign, secondary_sign } => {
            plane_phrase(plane, angle_deg, distance, primary_sign, secondary_sign)
        }
    }
}

/// Natural-language query for a maneuver list: phrases joined with
/// ", then ", capitalized, ending in a period.
pub fn render_query(maneuvers: &[ManeuverSpec]) -> String {
    let joined = maneuvers.iter().map(maneuver_phrase).collect::<Vec<_>>().join(", then ");
    let mut chars = joined.chars();
    match chars.next() {
        Some(first) => format!("{}{}.", first.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}

// ---------------------------------------------------------------------------
// Generation

/// The three sample tasks with their closed-form ground truths.
pub fn sample_tasks() -> Vec<Task> {
    vec![
        Task::from_maneuvers(
            "sample-1",
            Family::A,
            vec![ManeuverSpec::world(0.0, 0.0, 5.0), ManeuverSpec::world(0.0, 0.0, -4.0)],
        ),
        Task::from_maneuvers("sample-2", Family::B, vec![ManeuverSpec::turn(90.0), ManeuverSpec::body(0.0, -4.0, 0.0)]),
        Task::from_maneuvers(
            "sample-3",
            Family::C,
            vec![ManeuverSpec::PlaneAngleMove {
                plane: Plane::YZ,
                angle_deg: 30.0,
                distance: 10.0,
                primary_sign: 1,
                secondary_sign: 1,
            }],
        ),
    ]
}

const TURN_MAGNITUDES: [f64; 8] = [30.0, 45.0, 60.0, 90.0, 120.0, 135.0, 150.0, 180.0];
const PLANE_ANGLES: [f64; 3] = [30.0, 45.0, 60.0];

/// Magnitude from the half-meter grid 1.0, 1.5, ..., 10.0.
fn grid_meters(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.random_range(2..=20u32)) / 2.0
}

fn axis_move(rng: &mut ChaCha8Rng, avoid_axis: Option<usize>) -> (usize, [f64; 3]) {
    let axis = loop {
        let a = rng.random_range(0..3usize);
        if Some(a) != avoid_axis {
            break a;
        }
    };
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut v = [0.0; 3];
    v[axis] = sign * grid_meters(rng);
    (axis, v)
}

fn random_turn(rng: &mut ChaCha8Rng) -> ManeuverSpec {
    let mag = *TURN_MAGNITUDES.choose(rng).expect("non-empty");
    // 180 is phrased clockwise only; the logged delta is the same either way
    let cw = mag == 180.0 || rng.random_bool(0.5);
    ManeuverSpec::turn(if cw { mag } else { -mag })
}

fn sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

fn family_a(rng: &mut ChaCha8Rng) -> Vec<ManeuverSpec> {
    let n = rng.random_range(1..=3);
    let mut last = None;
    (0..n)
        .map(|_| {
            let (axis, [dx, dy, dz]) = axis_move(rng, last);
            last = Some(axis);
            ManeuverSpec::world(dx, dy, dz)
        })
        .collect()
}

fn family_b(rng: &mut ChaCha8Rng) -> Vec<ManeuverSpec> {
    let n = rng.random_range(2..=4);
    let mut out = vec![random_turn(rng)];
    let mut last_axis = None;
    while out.len() < n {
        let prev_turn = matches!(out.last(), Some(ManeuverSpec::Turn { .. }));
        if !prev_turn && out.len() + 1 < n && rng.random_bool(0.5) {
            out.push(random_turn(rng));
            last_axis = None;
        } else {
            let (axis, [f, r, d]) = axis_move(rng, last_axis);
            last_axis = Some(axis);
            out.push(ManeuverSpec::body(f, r, d));
        }
    }
    out
}

fn family_c(rng: &mut ChaCha8Rng) -> Vec<ManeuverSpec> {
    let mut out = Vec::new();
    if rng.random_bool(0.5) {
        out.push(random_turn(rng));
    }
    let plane = *[Plane::XY, Plane::XZ, Plane::YZ].choose(rng).expect("non-empty");
    out.push(ManeuverSpec::PlaneAngleMove {
        plane,
        angle_deg: *PLANE_ANGLES.choose(rng).expect("non-empty"),
        distance: f64::from(rng.random_range(2..=10u32)),
        primary_sign: sign(rng),
        secondary_sign: sign(rng),
    });
    out
}

/// Deterministically generate `counts[i]` tasks for families A, B and C.
/// Queries are unique within the corpus.
pub fn generate_corpus(seed: u64, counts: [usize; 3]) -> CorpusFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut tasks = Vec::new();
    for (family, count) in [Family::A, Family::B, Family::C].into_iter().zip(counts) {
        for i in 1..=count {
            let task = loop {
                let maneuvers = match family {
                    Family::A => family_a(&mut rng),
                    Family::B => family_b(&mut rng),
                    Family::C => family_c(&mut rng),
                };
                let task = Task::from_maneuvers(format!("{family}{i:03}"), family, maneuvers);
                if seen.insert(task.query.clone()) {
                    break task;
                }
            };
            tasks.push(task);
        }
    }
    CorpusFile { version: CORPUS_VERSION, tasks }
}
