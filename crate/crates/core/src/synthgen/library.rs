use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cues::{Hand, HandLandmarks, LandmarkFrame, Point, Pose, Region, HAND_POINTS};

/// Rendered hand size in normalized image units.
pub const HAND_SCALE: f64 = 0.16;
/// Largest movement-anchor offset from the home position.
pub const MOVE_AMPLITUDE: f64 = 0.06;
pub const MIN_DURATION: usize = 5;
pub const MAX_DURATION: usize = 8;
pub const MOVE_ANCHORS: usize = 3;
/// Rejection threshold on [`GlossTemplate::distance`].
pub const MIN_TEMPLATE_DISTANCE: f64 = 0.15;

/// The stationary signer pose shared by every synthetic sentence.
pub fn reference_pose() -> Pose {
    Pose {
        left_eye: Point::new(0.45, 0.3),
        right_eye: Point::new(0.55, 0.3),
        mouth_left: Point::new(0.47, 0.4),
        mouth_right: Point::new(0.53, 0.4),
        left_shoulder: Point::new(0.35, 0.62),
        right_shoulder: Point::new(0.65, 0.62),
    }
}

/// Where a hand rests when signing at `region`.
pub fn home_position(region: Region, hand: Hand) -> Point {
    let pose = reference_pose();
    let anchor = match region {
        Region::Eyes => pose.eyes(),
        Region::Mouth => pose.mouth(),
        Region::Chest => pose.chest(),
    };
    let side = match hand {
        Hand::Left => -0.09,
        Hand::Right => 0.09,
    };
    Point::new(anchor.x + side, anchor.y)
}

/// Parameterized landmark trajectory of one gloss.
#[derive(Clone, Debug, PartialEq)]
pub struct GlossTemplate {
    pub id: u32,
    /// Hand-local landmark offsets inside the unit box `[-0.5, 0.5]²`, per hand.
    pub shapes: [HandLandmarks; 2],
    /// Piecewise-linear movement anchors relative to the home position, per hand.
    pub paths: [Vec<Point>; 2],
    pub region: Region,
    pub duration: usize,
}

fn rms(a: &[Point], b: &[Point]) -> f64 {
    (a.iter().zip(b).map(|(p, q)| p.dist_sq(*q)).sum::<f64>() / a.len() as f64).sqrt()
}

fn lerp(a: Point, b: Point, w: f64) -> Point {
    Point::new(a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w)
}

impl GlossTemplate {
    /// Dissimilarity used for rejection sampling: shape RMS plus scaled path
    /// RMS, averaged over hands, plus a constant when regions differ.
    pub fn distance(&self, other: &GlossTemplate) -> f64 {
        let mut d = 0.0;
        for h in 0..2 {
            d += rms(&self.shapes[h], &other.shapes[h]);
            d += 5.0 * rms(&self.paths[h], &other.paths[h]);
        }
        d / 2.0 + if self.region == other.region { 0.0 } else { 0.5 }
    }

    fn path_offset(&self, hand: usize, s: f64) -> Point {
        let anchors = &self.paths[hand];
        let segs = (anchors.len() - 1) as f64;
        let pos = s.clamp(0.0, 1.0) * segs;
        let i = (pos.floor() as usize).min(anchors.len() - 2);
        lerp(anchors[i], anchors[i + 1], pos - i as f64)
    }

    fn hand_at(&self, hand: Hand, step: usize) -> HandLandmarks {
        let h = hand as usize;
        let s = if self.duration > 1 {
            step as f64 / (self.duration - 1) as f64
        } else {
            0.0
        };
        let home = home_position(self.region, hand);
        let off = self.path_offset(h, s);
        self.shapes[h].map(|p| Point::new(home.x + off.x + p.x * HAND_SCALE, home.y + off.y + p.y * HAND_SCALE))
    }

    /// Noise-free frames of this gloss signed in isolation.
    pub fn trajectory(&self) -> Vec<LandmarkFrame> {
        (0..self.duration)
            .map(|k| LandmarkFrame {
                index: k as u64,
                left: Some(self.hand_at(Hand::Left, k)),
                right: Some(self.hand_at(Hand::Right, k)),
                pose: reference_pose(),
            })
            .collect()
    }
}

/// Random hand shape: a wrist, a thumb, and four fingers with random curl,
/// rotated and scaled to fit the unit box.
fn random_shape(rng: &mut ChaCha8Rng) -> HandLandmarks {
    let mut pts = [Point::default(); HAND_POINTS];
    pts[0] = Point::new(0.0, 0.45);
    let bases = [(-0.22, 0.0), (-0.07, -0.04), (0.08, -0.02), (0.22, 0.04)];
    let seg = 0.16;
    for (f, &(bx, by)) in bases.iter().enumerate() {
        let curl: f64 = rng.random_range(0.0..1.0);
        let mut angle = -PI / 2.0 + (bx * 1.2) + rng.random_range(-0.15..0.15);
        let base = 5 + 4 * f;
        pts[base] = Point::new(bx, by);
        for j in 1..4 {
            angle += curl * PI / 2.5;
            let prev = pts[base + j - 1];
            pts[base + j] = Point::new(prev.x + seg * angle.cos(), prev.y + seg * angle.sin());
        }
    }
    let thumb_curl: f64 = rng.random_range(0.0..1.0);
    let mut angle = -PI * 0.85 + rng.random_range(-0.2..0.2);
    pts[1] = Point::new(-0.18, 0.32);
    for j in 2..5 {
        angle += thumb_curl * PI / 3.0;
        let prev = pts[j - 1];
        pts[j] = Point::new(prev.x + 0.13 * angle.cos(), prev.y + 0.13 * angle.sin());
    }
    let rot: f64 = rng.random_range(-0.6..0.6);
    let (sin, cos) = rot.sin_cos();
    for p in pts.iter_mut() {
        *p = Point::new(p.x * cos - p.y * sin, p.x * sin + p.y * cos);
    }
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / HAND_POINTS as f64;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / HAND_POINTS as f64;
    let extent = pts
        .iter()
        .map(|p| (p.x - cx).abs().max((p.y - cy).abs()))
        .fold(0.0, f64::max);
    let k = 0.5 / extent;
    pts.map(|p| Point::new((p.x - cx) * k, (p.y - cy) * k))
}

fn random_path(rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..MOVE_ANCHORS)
        .map(|_| {
            Point::new(
                rng.random_range(-MOVE_AMPLITUDE..MOVE_AMPLITUDE),
                rng.random_range(-MOVE_AMPLITUDE..MOVE_AMPLITUDE),
            )
        })
        .collect()
}

/// Deterministic library of pairwise-distinct gloss templates.
pub fn build_gloss_library(vocab_size: usize, seed: u64) -> Vec<GlossTemplate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut library: Vec<GlossTemplate> = Vec::with_capacity(vocab_size);
    while library.len() < vocab_size {
        let id = library.len() as u32;
        let candidate = GlossTemplate {
            id,
            shapes: [random_shape(&mut rng), random_shape(&mut rng)],
            paths: [random_path(&mut rng), random_path(&mut rng)],
            region: Region::ALL[rng.random_range(0..3)],
            duration: rng.random_range(MIN_DURATION..=MAX_DURATION),
        };
        if library.iter().all(|t| t.distance(&candidate) > MIN_TEMPLATE_DISTANCE) {
            library.push(candidate);
        }
    }
    library
}
