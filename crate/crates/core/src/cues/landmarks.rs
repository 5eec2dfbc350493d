use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HAND_POINTS: usize = 21;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn midpoint(a: Point, b: Point) -> Point {
        Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

pub type HandLandmarks = [Point; HAND_POINTS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }
}

/// Upper-body keypoints used to place the hands relative to the head and chest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub left_eye: Point,
    pub right_eye: Point,
    pub mouth_left: Point,
    pub mouth_right: Point,
    pub left_shoulder: Point,
    pub right_shoulder: Point,
}

impl Pose {
    pub const KEYS: [&'static str; 6] = [
        "left_eye",
        "right_eye",
        "mouth_left",
        "mouth_right",
        "left_shoulder",
        "right_shoulder",
    ];

    pub fn eyes(&self) -> Point {
        Point::midpoint(self.left_eye, self.right_eye)
    }

    pub fn mouth(&self) -> Point {
        Point::midpoint(self.mouth_left, self.mouth_right)
    }

    pub fn chest(&self) -> Point {
        Point::midpoint(self.left_shoulder, self.right_shoulder)
    }

    pub fn shoulder_width(&self) -> f64 {
        self.left_shoulder.dist(self.right_shoulder)
    }

    pub fn points(&self) -> [Point; 6] {
        [
            self.left_eye,
            self.right_eye,
            self.mouth_left,
            self.mouth_right,
            self.left_shoulder,
            self.right_shoulder,
        ]
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Pose {
        Pose {
            left_eye: f(self.left_eye),
            right_eye: f(self.right_eye),
            mouth_left: f(self.mouth_left),
            mouth_right: f(self.mouth_right),
            left_shoulder: f(self.left_shoulder),
            right_shoulder: f(self.right_shoulder),
        }
    }
}

/// One tracked time step.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkFrame {
    pub index: u64,
    pub left: Option<HandLandmarks>,
    pub right: Option<HandLandmarks>,
    pub pose: Pose,
}

impl LandmarkFrame {
    pub fn hand(&self, hand: Hand) -> Option<&HandLandmarks> {
        match hand {
            Hand::Left => self.left.as_ref(),
            Hand::Right => self.right.as_ref(),
        }
    }

    /// Applies `f` to every landmark of the frame.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> LandmarkFrame {
        LandmarkFrame {
            index: self.index,
            left: self.left.map(|h| h.map(&f)),
            right: self.right.map(|h| h.map(&f)),
            pose: self.pose.map(&f),
        }
    }

    /// One JSON Lines record (no trailing newline).
    pub fn to_json_line(&self) -> String {
        let raw = RawFrameOut {
            t: self.index,
            left: self.left.as_ref().map(|h| h.to_vec()),
            right: self.right.as_ref().map(|h| h.to_vec()),
            pose: &self.pose,
        };
        serde_json::to_string(&raw).expect("landmark frames always serialize")
    }
}

#[derive(Serialize)]
struct RawFrameOut<'a> {
    t: u64,
    left: Option<Vec<Point>>,
    right: Option<Vec<Point>>,
    pose: &'a Pose,
}

#[derive(Deserialize)]
struct RawFrame {
    t: u64,
    #[serde(default)]
    left: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    right: Option<Vec<[f64; 2]>>,
    pose: BTreeMap<String, [f64; 2]>,
}

fn hand_from_raw(raw: Option<Vec<[f64; 2]>>, hand: Hand, line: usize) -> Result<Option<HandLandmarks>> {
    let Some(points) = raw else {
        return Ok(None);
    };
    if points.len() != HAND_POINTS {
        return Err(Error::Schema(format!(
            "line {line}: {} hand has {} points, expected {HAND_POINTS}",
            hand.as_str(),
            points.len()
        )));
    }
    let mut out = [Point::default(); HAND_POINTS];
    for (dst, p) in out.iter_mut().zip(points) {
        *dst = p.into();
        if !dst.is_finite() {
            return Err(Error::Schema(format!(
                "line {line}: {} hand has a non-finite coordinate",
                hand.as_str()
            )));
        }
    }
    Ok(Some(out))
}

fn pose_from_raw(mut raw: BTreeMap<String, [f64; 2]>, line: usize) -> Result<Pose> {
    let mut take = |key: &str| -> Result<Point> {
        let p: Point = raw
            .remove(key)
            .ok_or_else(|| Error::Schema(format!("line {line}: pose is missing {key:?}")))?
            .into();
        if !p.is_finite() {
            return Err(Error::Schema(format!("line {line}: pose {key:?} is not finite")));
        }
        Ok(p)
    };
    Ok(Pose {
        left_eye: take("left_eye")?,
        right_eye: take("right_eye")?,
        mouth_left: take("mouth_left")?,
        mouth_right: take("mouth_right")?,
        left_shoulder: take("left_shoulder")?,
        right_shoulder: take("right_shoulder")?,
    })
}

/// Parses a landmark JSON Lines stream. Blank lines are skipped; frames are
/// returned ordered by their `t` index.
pub fn parse_landmark_stream<R: BufRead>(reader: R) -> Result<Vec<LandmarkFrame>> {
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawFrame = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        frames.push(LandmarkFrame {
            index: raw.t,
            left: hand_from_raw(raw.left, Hand::Left, line_no)?,
            right: hand_from_raw(raw.right, Hand::Right, line_no)?,
            pose: pose_from_raw(raw.pose, line_no)?,
        });
    }
    frames.sort_by_key(|f| f.index);
    if let Some(w) = frames.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(Error::Schema(format!("frame index {} appears twice", w[0].index)));
    }
    Ok(frames)
}

pub fn load_landmarks(path: &std::path::Path) -> Result<Vec<LandmarkFrame>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_landmark_stream(std::io::BufReader::new(file))
}

pub fn write_landmark_stream(frames: &[LandmarkFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        out.push_str(&f.to_json_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn pose() -> Pose {
        Pose {
            left_eye: Point::new(0.45, 0.3),
            right_eye: Point::new(0.55, 0.3),
            mouth_left: Point::new(0.47, 0.4),
            mouth_right: Point::new(0.53, 0.4),
            left_shoulder: Point::new(0.35, 0.6),
            right_shoulder: Point::new(0.65, 0.6),
        }
    }

    fn line(points: usize) -> String {
        let hand: Vec<[f64; 2]> = (0..points).map(|i| [0.1 + i as f64 * 0.01, 0.5]).collect();
        format!(
            r#"{{"t": 0, "left": {}, "right": null, "pose": {{"left_eye":[0.45,0.3],"right_eye":[0.55,0.3],"mouth_left":[0.47,0.4],"mouth_right":[0.53,0.4],"left_shoulder":[0.35,0.6],"right_shoulder":[0.65,0.6]}}}}"#,
            serde_json::to_string(&hand).unwrap()
        )
    }

    #[test]
    fn empty_stream() {
        assert!(parse_landmark_stream("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn one_valid_line() {
        let frames = parse_landmark_stream(line(21).as_bytes()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].left.unwrap().len(), 21);
        assert!(frames[0].right.is_none());
        assert_eq!(frames[0].pose, pose());
    }

    #[test]
    fn short_hand_names_hand() {
        let err = parse_landmark_stream(line(20).as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("left") && m.contains("20")));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n{{not json\n", line(21));
        match parse_landmark_stream(text.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_pose_key() {
        let text = line(21).replace(r#""mouth_left":[0.47,0.4],"#, "");
        let err = parse_landmark_stream(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("mouth_left")));
    }

    #[test]
    fn frames_sorted_by_index() {
        let a = line(21).replace(r#""t": 0"#, r#""t": 5"#);
        let b = line(21);
        let frames = parse_landmark_stream(format!("{a}\n{b}\n").as_bytes()).unwrap();
        assert_eq!(frames.iter().map(|f| f.index).collect::<Vec<_>>(), vec![0, 5]);
    }

    #[test]
    fn json_line_round_trip() {
        let frames = parse_landmark_stream(line(21).as_bytes()).unwrap();
        let again = parse_landmark_stream(write_landmark_stream(&frames).as_bytes()).unwrap();
        assert_eq!(frames, again);
    }
}
