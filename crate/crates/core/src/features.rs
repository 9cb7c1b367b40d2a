//! Feature channels extracted from a situation model, scaled against each
//! agent's own observation history.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arena::{normalize_angle, SituationModel};
use crate::{Error, Result};

pub const CHANNEL_COUNT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Channel {
    BallX1,
    BallY1,
    BallX2,
    BallY2,
    BallD1,
    BallD2,
    BallA1,
    BallA2,
    DeltaX,
    DeltaY,
    DeltaA,
    RollAngle,
}

impl Channel {
    pub const ALL: [Channel; CHANNEL_COUNT] = [
        Channel::BallX1,
        Channel::BallY1,
        Channel::BallX2,
        Channel::BallY2,
        Channel::BallD1,
        Channel::BallD2,
        Channel::BallA1,
        Channel::BallA2,
        Channel::DeltaX,
        Channel::DeltaY,
        Channel::DeltaA,
        Channel::RollAngle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::BallX1 => "ball-x1",
            Channel::BallY1 => "ball-y1",
            Channel::BallX2 => "ball-x2",
            Channel::BallY2 => "ball-y2",
            Channel::BallD1 => "ball-d1",
            Channel::BallD2 => "ball-d2",
            Channel::BallA1 => "ball-a1",
            Channel::BallA2 => "ball-a2",
            Channel::DeltaX => "delta-x",
            Channel::DeltaY => "delta-y",
            Channel::DeltaA => "delta-a",
            Channel::RollAngle => "roll-angle",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown channel {s:?}"))
    }
}

impl From<Channel> for String {
    fn from(c: Channel) -> String {
        c.name().to_owned()
    }
}

impl TryFrom<String> for Channel {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

/// Unscaled channel values; angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures {
    pub values: [f64; CHANNEL_COUNT],
    /// The ball started exactly at the observer, so `ball-a1` is undefined
    /// and was set to zero.
    pub degenerate: bool,
}

impl Index<Channel> for RawFeatures {
    type Output = f64;

    fn index(&self, c: Channel) -> &f64 {
        &self.values[c.index()]
    }
}

/// Channel values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledFeatures(pub [f64; CHANNEL_COUNT]);

impl Index<Channel> for ScaledFeatures {
    type Output = f64;

    fn index(&self, c: Channel) -> &f64 {
        &self.0[c.index()]
    }
}

pub fn extract(model: &SituationModel) -> RawFeatures {
    let s = model.ball_start;
    let e = model.ball_end;
    let degenerate = s.x == 0.0 && s.y == 0.0;
    let a1 = if degenerate { 0.0 } else { s.bearing() };
    let a2 = if e.x == 0.0 && e.y == 0.0 { 0.0 } else { e.bearing() };
    let dx = e.x - s.x;
    let dy = e.y - s.y;
    let roll = if dx == 0.0 && dy == 0.0 { 0.0 } else { normalize_angle(dy.atan2(dx)) };
    RawFeatures {
        values: [
            s.x,
            s.y,
            e.x,
            e.y,
            s.norm(),
            e.norm(),
            a1,
            a2,
            dx,
            dy,
            normalize_angle(a2 - a1),
            roll,
        ],
        degenerate,
    }
}

/// Running per-channel minimum and maximum of an agent's own observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelScaler {
    bounds: Vec<Option<(f64, f64)>>,
}

impl ChannelScaler {
    pub fn new() -> Self {
        ChannelScaler { bounds: vec![None; CHANNEL_COUNT] }
    }

    pub fn bounds(&self, c: Channel) -> Option<(f64, f64)> {
        self.bounds.get(c.index()).copied().flatten()
    }

    pub fn observe(&mut self, raw: &RawFeatures) {
        if self.bounds.len() != CHANNEL_COUNT {
            self.bounds = vec![None; CHANNEL_COUNT];
        }
        for (slot, &v) in self.bounds.iter_mut().zip(&raw.values) {
            *slot = Some(match *slot {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }

    /// Scale without recording. Values outside the observed range are clamped.
    pub fn scale(&self, raw: &RawFeatures) -> ScaledFeatures {
        let mut out = [0.5; CHANNEL_COUNT];
        for c in Channel::ALL {
            if let Some((lo, hi)) = self.bounds(c) {
                let v = raw[c];
                if hi > lo {
                    out[c.index()] = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                }
            }
        }
        ScaledFeatures(out)
    }

    /// Record `raw` in the running bounds, then scale it.
    pub fn observe_and_scale(&mut self, raw: &RawFeatures) -> ScaledFeatures {
        self.observe(raw);
        self.scale(raw)
    }
}

/// Per-channel distance of the topic from the context mean.
pub fn saliency(topic: &ScaledFeatures, context: &[ScaledFeatures]) -> Result<[f64; CHANNEL_COUNT]> {
    if context.is_empty() {
        return Err(Error::EmptyContext);
    }
    let n = context.len() as f64;
    let mut out = [0.0; CHANNEL_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        let mean = context.iter().map(|f| f.0[i]).sum::<f64>() / n;
        *slot = (topic.0[i] - mean).abs();
    }
    Ok(out)
}
