//! Constant-speed random-direction mobility inside a rectangle.
//!
//! UEs travel in straight lines and bounce specularly off the region walls.
//! Headings are redrawn on a fixed interval. Every UE owns a private random
//! stream, so trajectories depend only on the master seed and never on the
//! evaluation order or on the handover algorithm in use.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::Point;
use crate::rng::{stream_rng, Stream};

/// 60 km/h.
pub const DEFAULT_SPEED_MPS: f64 = 16.6667;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidInput(format!(
                "degenerate region x[{x_min}, {x_max}] y[{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Bounding box of `points` grown by `margin` on every side.
    pub fn enclosing(points: &[Point], margin: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("no points to enclose".into()));
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        Self::new(x0 - margin, x1 + margin, y0 - margin, y1 + margin)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    pub ue_id: usize,
    pub position: Point,
    /// Radians counter-clockwise from east, in `[0, 2π)`.
    pub heading: f64,
    pub speed: f64,
    pub serving_sector: usize,
}

/// Places `count` UEs uniformly in `region` with uniform headings and
/// attaches each to the sector chosen by `attach(ue_id, position)`
/// (normally the strongest RSRP).
pub fn init_ues(
    count: usize,
    region: &Region,
    speed: f64,
    seed: u64,
    mut attach: impl FnMut(usize, &Point) -> usize,
) -> Result<(Vec<UeState>, Vec<ChaCha8Rng>)> {
    if count == 0 {
        return Err(Error::config("ue_count", "must be at least 1"));
    }
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::config(
            "mobility.speed_mps",
            "must be finite and >= 0",
        ));
    }
    let mut ues = Vec::with_capacity(count);
    let mut rngs = Vec::with_capacity(count);
    for ue_id in 0..count {
        let mut rng = stream_rng(seed, Stream::Mobility, ue_id as u64);
        let position = Point::new(
            rng.random_range(region.x_min..region.x_max),
            rng.random_range(region.y_min..region.y_max),
        );
        let heading = rng.random_range(0.0..TAU);
        let serving_sector = attach(ue_id, &position);
        ues.push(UeState {
            ue_id,
            position,
            heading,
            speed,
            serving_sector,
        });
        rngs.push(rng);
    }
    Ok((ues, rngs))
}

/// Reflects `v` into `[lo, hi]`, returning the folded coordinate and
/// whether the direction of travel ended up reversed.
fn fold(mut v: f64, lo: f64, hi: f64) -> (f64, bool) {
    let mut flipped = false;
    while v < lo || v > hi {
        if v > hi {
            v = 2.0 * hi - v;
        } else {
            v = 2.0 * lo - v;
        }
        flipped = !flipped;
    }
    (v, flipped)
}

/// Advances one UE by `speed * dt` along its heading with specular
/// reflection at the region walls.
pub fn step(ue: &UeState, dt: f64, region: &Region) -> UeState {
    let (sin, cos) = ue.heading.sin_cos();
    let dist = ue.speed * dt;
    let (x, flip_x) = fold(ue.position.x + dist * cos, region.x_min, region.x_max);
    let (y, flip_y) = fold(ue.position.y + dist * sin, region.y_min, region.y_max);
    let dx = if flip_x { -cos } else { cos };
    let dy = if flip_y { -sin } else { sin };
    let heading = if flip_x || flip_y {
        dy.atan2(dx).rem_euclid(TAU)
    } else {
        ue.heading
    };
    UeState {
        position: Point::new(x, y),
        heading,
        ..ue.clone()
    }
}

/// Draws a fresh uniform heading from the UE's own stream.
pub fn redraw_heading(ue: &mut UeState, rng: &mut ChaCha8Rng) {
    ue.heading = rng.random_range(0.0..TAU);
}
