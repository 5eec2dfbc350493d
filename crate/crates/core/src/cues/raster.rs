use super::landmarks::{HandLandmarks, LandmarkFrame, Point};
use crate::error::{Error, Result};

/// The 21-landmark hand graph: thumb, four fingers from their bases, the
/// knuckle line, and the wrist-to-little-finger palm edge.
pub const HAND_EDGES: [(usize, usize); 21] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (0, 5),
    (5, 6),
    (6, 7),
    (7, 8),
    (5, 9),
    (9, 10),
    (10, 11),
    (11, 12),
    (9, 13),
    (13, 14),
    (14, 15),
    (15, 16),
    (13, 17),
    (17, 18),
    (18, 19),
    (19, 20),
    (0, 17),
];

const CROP_MARGIN: f64 = 0.1;

/// Square black-and-white image, row-major, values in {0, 1}.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    side: usize,
    bits: Vec<u8>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{}", self.side, self.side)?;
        for row in self.bits.chunks(self.side) {
            let line: String = row.iter().map(|&b| if b == 1 { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BinaryImage {
    pub fn blank(side: usize) -> Self {
        BinaryImage {
            side,
            bits: vec![0; side * side],
        }
    }

    pub fn from_bits(side: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != side * side || bits.iter().any(|&b| b > 1) {
            return Err(Error::Input(format!(
                "binary image needs {} values in {{0, 1}}",
                side * side
            )));
        }
        Ok(BinaryImage { side, bits })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.side + col]
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Sets a pixel if it lies on the canvas.
    pub(crate) fn plot(&mut self, col: i64, row: i64) {
        let s = self.side as i64;
        if (0..s).contains(&col) && (0..s).contains(&row) {
            self.bits[(row * s + col) as usize] = 1;
        }
    }

    fn line(&mut self, from: (i64, i64), to: (i64, i64)) {
        bresenham(from, to, |c, r| self.plot(c, r));
    }
}

/// Integer Bresenham line over all octants, endpoints included.
pub fn bresenham(from: (i64, i64), to: (i64, i64), mut plot: impl FnMut(i64, i64)) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x, y);
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn check_finite(points: &[Point]) -> Result<()> {
    if points.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input("landmark coordinate is not finite".into()))
    }
}

/// Maps coordinates along one axis into `[0, 1)` relative to the padded
/// bounding box. Offsets are taken from the minimum so that translating all
/// points by a representable amount leaves the result bit-identical.
fn axis_mapper(values: impl Iterator<Item = f64> + Clone) -> impl Fn(f64) -> f64 {
    let min = values.clone().fold(f64::INFINITY, f64::min);
    let max = values.fold(f64::NEG_INFINITY, f64::max);
    let extent = max - min;
    move |v| {
        if extent > 0.0 {
            let margin = CROP_MARGIN * extent;
            ((v - min) + margin) / (extent + 2.0 * margin)
        } else {
            // Degenerate extent: unit box centred on the points.
            (v - min) + 0.5
        }
    }
}

fn to_pixel(u: f64, side: usize) -> i64 {
    ((u * side as f64).floor() as i64).clamp(0, side as i64 - 1)
}

/// Draws the hand skeleton cropped to its own bounding box (10% margin per
/// side) on an `side × side` canvas.
pub fn rasterize_hand(points: &HandLandmarks, side: usize) -> Result<BinaryImage> {
    check_finite(points)?;
    let fx = axis_mapper(points.iter().map(|p| p.x));
    let fy = axis_mapper(points.iter().map(|p| p.y));
    let px: Vec<(i64, i64)> = points
        .iter()
        .map(|p| (to_pixel(fx(p.x), side), to_pixel(fy(p.y), side)))
        .collect();
    let mut img = BinaryImage::blank(side);
    for &(a, b) in &HAND_EDGES {
        img.line(px[a], px[b]);
    }
    Ok(img)
}

fn absolute(p: Point, side: usize) -> (i64, i64) {
    let s = side as f64;
    ((p.x * s).floor() as i64, (p.y * s).floor() as i64)
}

/// Midpoint circle outline.
fn circle(img: &mut BinaryImage, center: (i64, i64), radius: i64) {
    let (cx, cy) = center;
    let mut x = radius;
    let mut y = 0;
    let mut err = 1 - radius;
    while x >= y {
        for (dx, dy) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            img.plot(cx + dx, cy + dy);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

/// Full-scene frame in absolute normalized coordinates: both hand skeletons,
/// the shoulder segment, and a head circle centred between the eyes with
/// radius half the eye distance. Off-canvas pixels are clipped.
pub fn render_scene_frame(frame: &LandmarkFrame, side: usize) -> Result<BinaryImage> {
    let mut img = BinaryImage::blank(side);
    let pose = &frame.pose;
    check_finite(&pose.points())?;
    for hand in [&frame.left, &frame.right].into_iter().flatten() {
        check_finite(hand)?;
        let px: Vec<_> = hand.iter().map(|&p| absolute(p, side)).collect();
        for &(a, b) in &HAND_EDGES {
            img.line(px[a], px[b]);
        }
    }
    img.line(absolute(pose.left_shoulder, side), absolute(pose.right_shoulder, side));
    let radius = (0.5 * pose.left_eye.dist(pose.right_eye) * side as f64).round() as i64;
    circle(&mut img, absolute(pose.eyes(), side), radius);
    Ok(img)
}
