//! Egocentric perspective transform: re-express what one agent sees as it
//! would look from where the interlocutor stands.

use serde::{Deserialize, Serialize};

use crate::arena::{normalize_angle, Pose, SituationModel};

/// A point in a 2D frame. In an egocentric frame x points forward and y to
/// the left, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoPoint {
    pub x: f64,
    pub y: f64,
}

impl EgoPoint {
    pub const ORIGIN: EgoPoint = EgoPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        EgoPoint { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &EgoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn bearing(&self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn rotate(&self, theta: f64) -> EgoPoint {
        let (s, c) = theta.sin_cos();
        EgoPoint::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Express `point` in the frame whose origin and orientation are `frame`
/// (itself given in the current frame): `R(-θ)(p - t)`.
pub fn to_frame(point: EgoPoint, frame: &Pose) -> EgoPoint {
    EgoPoint::new(point.x - frame.x, point.y - frame.y).rotate(-frame.heading)
}

/// Inverse of [`to_frame`]: `R(θ)p + t`.
pub fn from_frame(point: EgoPoint, frame: &Pose) -> EgoPoint {
    let r = point.rotate(frame.heading);
    EgoPoint::new(r.x + frame.x, r.y + frame.y)
}

/// Where the current origin appears when seen from `pose`: `(-R(-θ)t, -θ)`.
pub fn invert_pose(pose: &Pose) -> Pose {
    let t = EgoPoint::new(-pose.x, -pose.y).rotate(-pose.heading);
    Pose { x: t.x, y: t.y, heading: normalize_angle(-pose.heading) }
}

/// Re-express a situation model from the interlocutor's (perceived) viewpoint.
pub fn transform_model(model: &SituationModel) -> SituationModel {
    let frame = model.other_pose;
    SituationModel {
        event_id: model.event_id,
        ball_start: to_frame(model.ball_start, &frame),
        ball_end: to_frame(model.ball_end, &frame),
        other_pose: invert_pose(&frame),
        perspective_owner: model.interlocutor,
        interlocutor: model.perspective_owner,
    }
}
