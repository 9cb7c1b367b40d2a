//! Ground-truth world: two bodies, a ball that gets pushed, and each body's
//! noisy egocentric view of what happened.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::perspective::{self, EgoPoint};
use crate::{Error, Result};

/// Wrap an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Position and heading of a body. Used both in the world frame and, for the
/// interlocutor, relative to an observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading: normalize_angle(heading) }
    }

    pub fn position(&self) -> EgoPoint {
        EgoPoint::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// One of the two bodies taking part in a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BodyId(pub u8);

impl BodyId {
    pub const A: BodyId = BodyId(0);
    pub const B: BodyId = BodyId(1);

    pub fn other(self) -> BodyId {
        BodyId(1 - self.0)
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BodyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0 == 0 { "A" } else { "B" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallEvent {
    pub event_id: u64,
    pub start: EgoPoint,
    pub end: EgoPoint,
}

impl BallEvent {
    pub fn length(&self) -> f64 {
        self.start.distance(&self.end)
    }
}

/// A joint observation session: both bodies stand still and watch a short
/// sequence of ball movements. The last event is the topic of the game, the
/// earlier ones form the shared context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub poses: [Pose; 2],
    pub events: Vec<BallEvent>,
}

impl Scene {
    pub fn pose(&self, body: BodyId) -> Pose {
        self.poses[body.index()]
    }

    pub fn topic(&self) -> &BallEvent {
        self.events.last().expect("scene has at least one event")
    }

    /// Check the joint-attention invariants against `config`.
    pub fn satisfies(&self, config: &ArenaConfig) -> bool {
        let tol = 1e-12;
        let [a, b] = self.poses;
        let sep = a.position().distance(&b.position());
        let inside = |p: &EgoPoint| {
            p.x >= -tol && p.x <= config.width + tol && p.y >= -tol && p.y <= config.height + tol
        };
        let visible = |p: &EgoPoint| {
            self.poses
                .iter()
                .all(|pose| pose.position().distance(p) <= config.visibility_range + tol)
        };
        let poses_ok = self.poses.iter().all(|p| inside(&p.position()))
            && sep >= config.min_separation - tol
            && sep <= config.visibility_range + tol;
        let events_ok = !self.events.is_empty()
            && self.events.iter().all(|e| {
                let len = e.length();
                inside(&e.start)
                    && inside(&e.end)
                    && visible(&e.start)
                    && visible(&e.end)
                    && len >= config.min_move - tol
                    && len <= config.max_move + tol
            });
        poses_ok && events_ok
    }
}

/// Gaussian perception noise. All-zero sigmas give exact perception.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub sigma_point: f64,
    pub sigma_pose_pos: f64,
    pub sigma_pose_heading: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { sigma_point: 0.05, sigma_pose_pos: 0.10, sigma_pose_heading: 0.087 }
    }
}

impl NoiseModel {
    pub const EXACT: NoiseModel =
        NoiseModel { sigma_point: 0.0, sigma_pose_pos: 0.0, sigma_pose_heading: 0.0 };

    /// The default model with every sigma multiplied by `factor`.
    pub fn scaled(factor: f64) -> Self {
        let d = NoiseModel::default();
        NoiseModel {
            sigma_point: d.sigma_point * factor,
            sigma_pose_pos: d.sigma_pose_pos * factor,
            sigma_pose_heading: d.sigma_pose_heading * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.sigma_point, self.sigma_pose_pos, self.sigma_pose_heading]
            .iter()
            .all(|s| s.is_finite() && *s >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("noise sigmas must be finite and >= 0: {self:?}")))
        }
    }
}

/// One agent's egocentric description of a single ball event.
///
/// Frame convention: origin at the owner, x forward along its gaze, y to its
/// left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SituationModel {
    pub event_id: u64,
    pub ball_start: EgoPoint,
    pub ball_end: EgoPoint,
    /// Where the interlocutor appears to stand, relative to the owner.
    pub other_pose: Pose,
    pub perspective_owner: BodyId,
    pub interlocutor: BodyId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
    pub min_separation: f64,
    pub visibility_range: f64,
    pub min_move: f64,
    pub max_move: f64,
    /// Bodies look at the ball's resting place, off by up to this many radians.
    pub gaze_jitter: f64,
    pub max_attempts: u32,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            width: 4.0,
            height: 4.0,
            min_separation: 0.8,
            visibility_range: 2.5,
            min_move: 0.3,
            max_move: 1.5,
            gaze_jitter: 0.35,
            max_attempts: 10_000,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Setup(msg));
        let all_finite = [
            self.width,
            self.height,
            self.min_separation,
            self.visibility_range,
            self.min_move,
            self.max_move,
            self.gaze_jitter,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return fail("arena parameters must be finite".into());
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return fail(format!("arena dimensions must be > 0, got {}x{}", self.width, self.height));
        }
        if self.visibility_range <= 0.0 {
            return fail(format!("visibility range must be > 0, got {}", self.visibility_range));
        }
        if self.min_separation < 0.0 {
            return fail("minimum separation must be >= 0".into());
        }
        if self.min_separation > self.visibility_range {
            return fail(format!(
                "minimum separation {} exceeds visibility range {}",
                self.min_separation, self.visibility_range
            ));
        }
        let diagonal = self.width.hypot(self.height);
        if self.min_separation > diagonal {
            return fail(format!(
                "minimum separation {} does not fit in a {}x{} arena",
                self.min_separation, self.width, self.height
            ));
        }
        if self.min_move <= 0.0 || self.min_move > self.max_move {
            return fail(format!(
                "movement length range [{}, {}] is empty or non-positive",
                self.min_move, self.max_move
            ));
        }
        if self.max_attempts == 0 {
            return fail("max_attempts must be >= 1".into());
        }
        Ok(())
    }
}

fn uniform_point(rng: &mut impl Rng, config: &ArenaConfig) -> EgoPoint {
    EgoPoint::new(rng.random::<f64>() * config.width, rng.random::<f64>() * config.height)
}

fn sample_event(
    rng: &mut impl Rng,
    config: &ArenaConfig,
    poses: &[Pose; 2],
    event_id: u64,
) -> Option<BallEvent> {
    let centre = poses[0].position();
    let r = config.visibility_range;
    let inside = |p: &EgoPoint| p.x >= 0.0 && p.x <= config.width && p.y >= 0.0 && p.y <= config.height;
    let visible = |p: &EgoPoint| poses.iter().all(|pose| pose.position().distance(p) <= r);
    for _ in 0..config.max_attempts {
        // Uniform in the bounding square of the first visibility disk, then
        // rejected down to the intersection of both disks and the arena.
        let start = EgoPoint::new(
            centre.x + (2.0 * rng.random::<f64>() - 1.0) * r,
            centre.y + (2.0 * rng.random::<f64>() - 1.0) * r,
        );
        let direction = rng.random::<f64>() * 2.0 * PI;
        let length = config.min_move + rng.random::<f64>() * (config.max_move - config.min_move);
        let end = EgoPoint::new(start.x + length * direction.cos(), start.y + length * direction.sin());
        if inside(&start) && inside(&end) && visible(&start) && visible(&end) {
            return Some(BallEvent { event_id, start, end });
        }
    }
    None
}

/// Place two bodies and generate `event_count` ball movements they both watch.
///
/// Event ids are `first_event_id, first_event_id + 1, ...`; the last one is
/// the topic.
pub fn setup_scene(
    rng: &mut impl Rng,
    config: &ArenaConfig,
    event_count: usize,
    first_event_id: u64,
) -> Result<Scene> {
    config.validate()?;
    if event_count == 0 {
        return Err(Error::Setup("a scene needs at least one event".into()));
    }
    for _ in 0..config.max_attempts {
        let a = uniform_point(rng, config);
        let b = uniform_point(rng, config);
        let sep = a.distance(&b);
        if sep < config.min_separation || sep > config.visibility_range {
            continue;
        }
        let poses = [Pose::new(a.x, a.y, 0.0), Pose::new(b.x, b.y, 0.0)];
        let mut events = Vec::with_capacity(event_count);
        for k in 0..event_count {
            match sample_event(rng, config, &poses, first_event_id + k as u64) {
                Some(e) => events.push(e),
                None => break,
            }
        }
        if events.len() < event_count {
            continue;
        }
        // Both bodies face the ball where it rests before the latest push.
        let focus = events.last().expect("at least one event").start;
        let mut poses = poses;
        for pose in poses.iter_mut() {
            let bearing = (focus.y - pose.y).atan2(focus.x - pose.x);
            let jitter = (2.0 * rng.random::<f64>() - 1.0) * config.gaze_jitter;
            *pose = Pose::new(pose.x, pose.y, bearing + jitter);
        }
        return Ok(Scene { poses, events });
    }
    Err(Error::Setup(format!(
        "no feasible scene after {} attempts",
        config.max_attempts
    )))
}

fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
}

fn jitter_point(rng: &mut impl Rng, p: EgoPoint, sigma: f64) -> EgoPoint {
    let dx = gaussian(rng, sigma);
    let dy = gaussian(rng, sigma);
    EgoPoint::new(p.x + dx, p.y + dy)
}

/// The other body's pose as seen by `body`, with pose noise applied.
pub fn perceive_other(scene: &Scene, body: BodyId, noise: &NoiseModel, rng: &mut impl Rng) -> Pose {
    let own = scene.pose(body);
    let other = scene.pose(body.other());
    let rel = perspective::to_frame(other.position(), &own);
    let rel = jitter_point(rng, rel, noise.sigma_pose_pos);
    let heading = other.heading - own.heading + gaussian(rng, noise.sigma_pose_heading);
    Pose::new(rel.x, rel.y, heading)
}

/// Perceive a single event from `body`'s viewpoint, given an already
/// perceived interlocutor pose.
pub fn perceive_event(
    scene: &Scene,
    event: &BallEvent,
    body: BodyId,
    other_pose: Pose,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> SituationModel {
    let own = scene.pose(body);
    let start = jitter_point(rng, perspective::to_frame(event.start, &own), noise.sigma_point);
    let end = jitter_point(rng, perspective::to_frame(event.end, &own), noise.sigma_point);
    SituationModel {
        event_id: event.event_id,
        ball_start: start,
        ball_end: end,
        other_pose,
        perspective_owner: body,
        interlocutor: body.other(),
    }
}

/// Perceive every event of the scene from `body`'s viewpoint. The
/// interlocutor is located once per scene since nobody moves during it.
pub fn perceive(
    scene: &Scene,
    body: BodyId,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Vec<SituationModel> {
    let other = perceive_other(scene, body, noise, rng);
    scene
        .events
        .iter()
        .map(|e| perceive_event(scene, e, body, other, noise, rng))
        .collect()
}

/// Dump scenes as JSON lines, one scene per line.
pub fn write_scenes_jsonl(path: &Path, scenes: &[Scene]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for scene in scenes {
        serde_json::to_writer(&mut out, scene)
            .map_err(|e| Error::Json { path: path.to_owned(), source: e })?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
