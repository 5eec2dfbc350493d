use super::landmarks::{Hand, HandLandmarks, LandmarkFrame, Point};
use super::raster::{rasterize_hand, BinaryImage};
use crate::error::{Error, Result};
use crate::nncore::Tensor;

/// Wrist plus the four finger bases.
pub const PALM_POINTS: [usize; 5] = [0, 5, 9, 13, 17];
pub const MIN_SHOULDER_WIDTH: f64 = 1e-3;

/// Head-relative hand location classes, in one-hot order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Eyes,
    Mouth,
    Chest,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Eyes, Region::Mouth, Region::Chest];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn palm_center(points: &HandLandmarks) -> Point {
    let (sx, sy) = PALM_POINTS
        .iter()
        .fold((0.0, 0.0), |(x, y), &i| (x + points[i].x, y + points[i].y));
    Point::new(sx / PALM_POINTS.len() as f64, sy / PALM_POINTS.len() as f64)
}

/// Palm-centre motion between consecutive frames, in shoulder widths.
///
/// Row 0 and any row where the hand is missing at `t` or `t - 1` are zero.
pub fn palm_displacement_seq(frames: &[LandmarkFrame], hand: Hand) -> Tensor<f32> {
    let mut out = Tensor::zeros(&[frames.len(), 2]);
    for t in 1..frames.len() {
        if let (Some(prev), Some(cur)) = (frames[t - 1].hand(hand), frames[t].hand(hand)) {
            let (a, b) = (palm_center(prev), palm_center(cur));
            let width = frames[t].pose.shoulder_width().max(MIN_SHOULDER_WIDTH);
            let row = out.row_mut(t);
            row[0] = ((b.x - a.x) / width) as f32;
            row[1] = ((b.y - a.y) / width) as f32;
        }
    }
    out
}

/// Nearest of eyes, mouth, and chest to the palm centre; ties resolve in that order.
pub fn nearest_region(frame: &LandmarkFrame, palm: Point) -> Region {
    let refs = [frame.pose.eyes(), frame.pose.mouth(), frame.pose.chest()];
    let mut best = 0;
    for i in 1..refs.len() {
        if palm.dist_sq(refs[i]) < palm.dist_sq(refs[best]) {
            best = i;
        }
    }
    Region::ALL[best]
}

/// One-hot `[eyes, mouth, chest]` per frame; all-zero where the hand is missing.
pub fn location_onehot_seq(frames: &[LandmarkFrame], hand: Hand) -> Tensor<f32> {
    let mut out = Tensor::zeros(&[frames.len(), 3]);
    for (t, frame) in frames.iter().enumerate() {
        if let Some(points) = frame.hand(hand) {
            let region = nearest_region(frame, palm_center(points));
            out.row_mut(t)[region.index()] = 1.0;
        }
    }
    out
}

/// The three cue streams of one hand.
#[derive(Clone, Debug, PartialEq)]
pub struct HandCues {
    pub images: Vec<BinaryImage>,
    /// `[T, 2]`
    pub displacement: Tensor<f32>,
    /// `[T, 3]`
    pub location: Tensor<f32>,
}

impl HandCues {
    /// Skeleton images as `[T, 1, S, S]`.
    pub fn image_tensor(&self, side: usize) -> Tensor<f32> {
        let mut data = Vec::with_capacity(self.images.len() * side * side);
        for img in &self.images {
            data.extend(img.bits().iter().map(|&b| b as f32));
        }
        Tensor::from_vec(&[self.images.len(), 1, side, side], data).expect("image sizes agree")
    }
}

/// The six per-sentence input streams of the multi-cue model.
#[derive(Clone, Debug, PartialEq)]
pub struct CueSequences {
    pub side: usize,
    pub left: HandCues,
    pub right: HandCues,
}

impl CueSequences {
    pub fn len(&self) -> usize {
        self.left.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hand(&self, hand: Hand) -> &HandCues {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }
}

fn hand_cues(frames: &[LandmarkFrame], hand: Hand, side: usize) -> Result<HandCues> {
    let images = frames
        .iter()
        .map(|f| match f.hand(hand) {
            Some(points) => rasterize_hand(points, side),
            None => Ok(BinaryImage::blank(side)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HandCues {
        images,
        displacement: palm_displacement_seq(frames, hand),
        location: location_onehot_seq(frames, hand),
    })
}

pub fn build_cue_sequences(frames: &[LandmarkFrame], side: usize) -> Result<CueSequences> {
    if frames.is_empty() {
        return Err(Error::Input("cannot build cues from an empty frame sequence".into()));
    }
    if side == 0 {
        return Err(Error::Input("skeleton image side must be positive".into()));
    }
    Ok(CueSequences {
        side,
        left: hand_cues(frames, Hand::Left, side)?,
        right: hand_cues(frames, Hand::Right, side)?,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::cues::landmarks::tests::pose;
    use crate::cues::landmarks::{Pose, HAND_POINTS};

    fn hand_at(c: Point) -> HandLandmarks {
        let mut h = [c; HAND_POINTS];
        for (i, p) in h.iter_mut().enumerate() {
            if !PALM_POINTS.contains(&i) {
                p.y -= 0.01 * (i % 4 + 1) as f64;
            }
        }
        h
    }

    fn frame(t: u64, left: Option<Point>, right: Option<Point>, pose: Pose) -> LandmarkFrame {
        LandmarkFrame {
            index: t,
            left: left.map(hand_at),
            right: right.map(hand_at),
            pose,
        }
    }

    #[test]
    fn palm_center_is_mean_of_wrist_and_bases() {
        let mut h = [Point::new(9.0, 9.0); HAND_POINTS];
        for (k, &i) in PALM_POINTS.iter().enumerate() {
            h[i] = Point::new(k as f64, 2.0 * k as f64);
        }
        assert_eq!(palm_center(&h), Point::new(2.0, 4.0));
    }

    #[test]
    fn static_hand_has_no_displacement() {
        let frames: Vec<_> = (0..4).map(|t| frame(t, Some(Point::new(0.4, 0.5)), None, pose())).collect();
        let d = palm_displacement_seq(&frames, Hand::Left);
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moving_hand_in_shoulder_widths() {
        // Shoulders 0.2 apart, palm +0.1 in x per frame: 0.5 shoulder widths.
        let mut p = pose();
        p.left_shoulder = Point::new(0.4, 0.6);
        p.right_shoulder = Point::new(0.6, 0.6);
        let frames: Vec<_> = (0..4)
            .map(|t| frame(t, None, Some(Point::new(0.1 + 0.1 * t as f64, 0.5)), p))
            .collect();
        let d = palm_displacement_seq(&frames, Hand::Right);
        assert_eq!(d.row(0), &[0.0, 0.0]);
        for t in 1..4 {
            assert!((d.row(t)[0] - 0.5).abs() < 1e-6);
            assert!(d.row(t)[1].abs() < 1e-6);
        }
    }

    #[test]
    fn displacement_zero_across_missing_hand() {
        let frames = vec![
            frame(0, Some(Point::new(0.1, 0.5)), None, pose()),
            frame(1, None, None, pose()),
            frame(2, Some(Point::new(0.3, 0.5)), None, pose()),
        ];
        let d = palm_displacement_seq(&frames, Hand::Left);
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shoulder_width_clamped() {
        let mut p = pose();
        p.right_shoulder = p.left_shoulder;
        let frames = vec![
            frame(0, Some(Point::new(0.1, 0.5)), None, p),
            frame(1, Some(Point::new(0.1005, 0.5)), None, p),
        ];
        let d = palm_displacement_seq(&frames, Hand::Left);
        assert!((d.row(1)[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn location_classes() {
        // Dyadic coordinates so the eyes/mouth tie below is exact.
        let mut p = pose();
        p.left_eye = Point::new(0.375, 0.25);
        p.right_eye = Point::new(0.625, 0.25);
        p.mouth_left = Point::new(0.4375, 0.375);
        p.mouth_right = Point::new(0.5625, 0.375);
        let frames = vec![
            frame(0, Some(p.mouth()), None, p),
            frame(1, None, None, p),
            frame(2, Some(Point::new(0.5, 0.3125)), None, p),
            frame(3, Some(Point::new(0.5, 0.62)), None, p),
        ];
        let loc = location_onehot_seq(&frames, Hand::Left);
        assert_eq!(loc.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(loc.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(loc.row(2), &[1.0, 0.0, 0.0]);
        assert_eq!(loc.row(3), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn all_streams_have_frame_count() {
        let frames: Vec<_> = (0..6)
            .map(|t| frame(t, Some(Point::new(0.4, 0.5 + 0.01 * t as f64)), None, pose()))
            .collect();
        let cues = build_cue_sequences(&frames, 16).unwrap();
        assert_eq!(cues.len(), 6);
        for h in Hand::BOTH {
            let c = cues.hand(h);
            assert_eq!(c.images.len(), 6);
            assert_eq!(c.displacement.shape(), &[6, 2]);
            assert_eq!(c.location.shape(), &[6, 3]);
            assert_eq!(c.image_tensor(16).shape(), &[6, 1, 16, 16]);
        }
    }

    #[test]
    fn missing_hands_give_zero_cues() {
        let frames: Vec<_> = (0..3).map(|t| frame(t, None, None, pose())).collect();
        let cues = build_cue_sequences(&frames, 8).unwrap();
        for h in Hand::BOTH {
            let c = cues.hand(h);
            assert!(c.images.iter().all(|i| i.count_set() == 0));
            assert!(c.displacement.data().iter().all(|&v| v == 0.0));
            assert!(c.location.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(build_cue_sequences(&[], 8), Err(Error::Input(_))));
    }

    proptest! {
        #[test]
        fn displacement_is_scale_invariant(
            xs in prop::collection::vec(0.2f64..0.8, 2..6),
            scale in 0.25f64..4.0,
        ) {
            let frames: Vec<_> = xs.iter().enumerate()
                .map(|(t, &x)| frame(t as u64, Some(Point::new(x, 0.5)), Some(Point::new(0.5, x)), pose()))
                .collect();
            let scaled: Vec<_> = frames.iter()
                .map(|f| f.map_points(|p| Point::new(p.x * scale, p.y * scale)))
                .collect();
            for h in Hand::BOTH {
                let a = palm_displacement_seq(&frames, h);
                let b = palm_displacement_seq(&scaled, h);
                for (u, v) in a.data().iter().zip(b.data()) {
                    prop_assert!((u - v).abs() <= 1e-5 * (1.0 + u.abs()));
                }
            }
        }

        #[test]
        fn location_rows_are_valid_one_hot(
            pts in prop::collection::vec(prop::option::of((0.0f64..1.0, 0.0f64..1.0)), 1..8),
        ) {
            let frames: Vec<_> = pts.iter().enumerate()
                .map(|(t, p)| frame(t as u64, p.map(|(x, y)| Point::new(x, y)), None, pose()))
                .collect();
            let loc = location_onehot_seq(&frames, Hand::Left);
            for t in 0..frames.len() {
                let row = loc.row(t);
                prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
                let s: f32 = row.iter().sum();
                prop_assert_eq!(s, if pts[t].is_some() { 1.0 } else { 0.0 });
            }
        }
    }
}
