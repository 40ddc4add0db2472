//! Facial landmarks and the circular regions of interest built around them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sift::Keypoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    LeftEye,
    RightEye,
    Nose,
    Mouth,
}

impl Region {
    /// Fixed region order; also the tie-break order for overlapping circles.
    pub const ALL: [Region; 4] = [Region::LeftEye, Region::RightEye, Region::Nose, Region::Mouth];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::LeftEye => "left_eye",
            Region::RightEye => "right_eye",
            Region::Nose => "nose",
            Region::Mouth => "mouth",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Point = (f64, f64);

/// Landmarks in working-frame pixels. "Left"/"right" refer to image-left/image-right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkSet {
    pub left_eye: Point,
    pub right_eye: Point,
    pub nose: Point,
    pub mouth: Point,
}

impl LandmarkSet {
    pub fn points(&self) -> [Point; 4] {
        [self.left_eye, self.right_eye, self.nose, self.mouth]
    }

    pub fn point(&self, region: Region) -> Point {
        self.points()[region.index()]
    }

    pub fn inter_ocular_distance(&self) -> f64 {
        (self.right_eye.0 - self.left_eye.0).hypot(self.right_eye.1 - self.left_eye.1)
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        for (region, (x, y)) in Region::ALL.iter().zip(self.points()) {
            if !(x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64) {
                return Err(Error::InvariantViolation(format!(
                    "{region} at ({x}, {y}) is outside the {width}x{height} frame"
                )));
            }
        }
        if self.left_eye.0 >= self.right_eye.0 {
            return Err(Error::InvariantViolation(format!(
                "left_eye.x {} is not left of right_eye.x {}",
                self.left_eye.0, self.right_eye.0
            )));
        }
        Ok(())
    }
}

/// Fixed fractional geometry used when no annotations are available.
pub fn default_landmarks(width: usize, height: usize) -> LandmarkSet {
    let (w, h) = (width as f64, height as f64);
    LandmarkSet {
        left_eye: (0.30 * w, 0.36 * h),
        right_eye: (0.70 * w, 0.36 * h),
        nose: (0.50 * w, 0.55 * h),
        mouth: (0.50 * w, 0.72 * h),
    }
}

/// ROI radii as fractions of the inter-ocular distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiRadii {
    pub eye: f64,
    pub nose: f64,
    pub mouth: f64,
}

impl Default for RoiRadii {
    fn default() -> Self {
        Self {
            eye: 0.35,
            nose: 0.35,
            mouth: 0.50,
        }
    }
}

impl RoiRadii {
    pub fn resolve(&self, landmarks: &LandmarkSet) -> RegionRadii {
        let d = landmarks.inter_ocular_distance();
        RegionRadii([self.eye * d, self.eye * d, self.nose * d, self.mouth * d])
    }

    pub fn validate(&self) -> Result<()> {
        if [self.eye, self.nose, self.mouth].iter().all(|r| *r > 0.0 && r.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("roi radii must be positive: {self:?}")))
        }
    }
}

/// Absolute radii in pixels, indexed by [`Region::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRadii(pub [f64; 4]);

impl RegionRadii {
    pub fn get(&self, region: Region) -> f64 {
        self.0[region.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionFeatures {
    regions: [Vec<Keypoint>; 4],
    radii: [f64; 4],
}

impl RegionFeatures {
    pub fn new(regions: [Vec<Keypoint>; 4], radii: [f64; 4]) -> Self {
        Self { regions, radii }
    }

    pub fn get(&self, region: Region) -> &[Keypoint] {
        &self.regions[region.index()]
    }

    pub fn radius(&self, region: Region) -> f64 {
        self.radii[region.index()]
    }

    pub fn counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.regions[i].len())
    }

    pub fn total(&self) -> usize {
        self.regions.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Region, &[Keypoint])> {
        Region::ALL.into_iter().map(|r| (r, self.get(r)))
    }
}

/// Partitions keypoints into the four ROIs. A keypoint covered by several circles goes to
/// the nearest centre (ties in fixed region order); uncovered keypoints are dropped.
pub fn assign_regions(keypoints: &[Keypoint], landmarks: &LandmarkSet, radii: &RegionRadii) -> RegionFeatures {
    const TIE_EPS: f64 = 1e-12;
    let centres = landmarks.points();
    let mut regions: [Vec<Keypoint>; 4] = Default::default();
    for k in keypoints {
        let mut best: Option<(usize, f64)> = None;
        for (i, (cx, cy)) in centres.iter().enumerate() {
            let d = (k.x - cx).hypot(k.y - cy);
            if d > radii.0[i] {
                continue;
            }
            match best {
                Some((_, bd)) if d >= bd - TIE_EPS => {}
                _ => best = Some((i, d)),
            }
        }
        if let Some((i, _)) = best {
            regions[i].push(k.clone());
        }
    }
    for list in &mut regions {
        list.sort_by(|a, b| {
            a.y.total_cmp(&b.y)
                .then(a.x.total_cmp(&b.x))
                .then(a.scale.total_cmp(&b.scale))
                .then(a.orientation.total_cmp(&b.orientation))
        });
    }
    RegionFeatures::new(regions, radii.0)
}

/// Reads `relative_path x_le y_le x_re y_re x_n y_n x_m y_m` lines, validated against a
/// `width` x `height` frame.
pub fn load_landmarks(path: impl AsRef<Path>, width: usize, height: usize) -> Result<BTreeMap<String, LandmarkSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, path, width, height)
}

pub fn parse_landmarks(text: &str, origin: &Path, width: usize, height: usize) -> Result<BTreeMap<String, LandmarkSet>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let mut fields = trimmed.split_whitespace();
        let name = fields.next().expect("non-empty line");
        let nums: Vec<f64> = fields
            .map(|t| t.parse::<f64>().map_err(|e| err(format!("`{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 8 {
            return Err(err(format!("expected 8 coordinates, found {}", nums.len())));
        }
        let set = LandmarkSet {
            left_eye: (nums[0], nums[1]),
            right_eye: (nums[2], nums[3]),
            nose: (nums[4], nums[5]),
            mouth: (nums[6], nums[7]),
        };
        set.validate(width, height).map_err(|e| match e {
            Error::InvariantViolation(m) => Error::InvariantViolation(format!("{}:{}: {m}", origin.display(), lineno + 1)),
            other => other,
        })?;
        if out.insert(name.to_string(), set).is_some() {
            return Err(err(format!("duplicate annotation for {name}")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sift::{Descriptor, DESCRIPTOR_LEN};
    use proptest::prelude::*;

    fn kp(x: f64, y: f64) -> Keypoint {
        Keypoint {
            x,
            y,
            scale: 2.0,
            orientation: 0.0,
            descriptor: Descriptor::from_values([0.0; DESCRIPTOR_LEN]),
            octave: 0,
            level: 1,
            response: 0.1,
        }
    }

    fn parse(text: &str) -> Result<BTreeMap<String, LandmarkSet>> {
        parse_landmarks(text, Path::new("lm.txt"), 100, 140)
    }

    #[test]
    fn parses_annotation_line() {
        let m = parse("s1/1.pgm 30 50 70 50 50 75 50 105\n").unwrap();
        let set = m["s1/1.pgm"];
        assert_eq!(set.left_eye, (30.0, 50.0));
        assert_eq!(set.right_eye, (70.0, 50.0));
        assert_eq!(set.nose, (50.0, 75.0));
        assert_eq!(set.mouth, (50.0, 105.0));
    }

    #[test]
    fn transposed_eyes_violate_invariant() {
        assert!(matches!(
            parse("a.pgm 70 50 30 50 50 75 50 105"),
            Err(Error::InvariantViolation(_))
        ));
        assert!(matches!(
            parse("a.pgm 30 50 70 50 50 75 50 145"),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn wrong_field_count_is_parse_error() {
        assert!(matches!(
            parse("a.pgm 30 50 70 50 50 75 50"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("a.pgm 30 50 70 50 50 75 50 x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn default_geometry() {
        let a = default_landmarks(100, 140);
        let close = |p: Point, q: Point| (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9;
        assert!(close(a.left_eye, (30.0, 50.4)));
        assert!(close(a.right_eye, (70.0, 50.4)));
        assert!(close(a.nose, (50.0, 77.0)));
        assert!(close(a.mouth, (50.0, 100.8)));
        let b = default_landmarks(200, 280);
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!(close((2.0 * p.0, 2.0 * p.1), q));
        }
        let tiny = default_landmarks(1, 1);
        for (x, y) in tiny.points() {
            assert!((0.0..1.0).contains(&x) && (0.0..1.0).contains(&y));
        }
    }

    #[test]
    fn keypoint_on_landmark_goes_to_that_region() {
        let lm = default_landmarks(100, 140);
        let radii = RoiRadii::default().resolve(&lm);
        let rf = assign_regions(&[kp(50.0, 77.0)], &lm, &radii);
        assert_eq!(rf.counts(), [0, 0, 1, 0]);
    }

    #[test]
    fn far_keypoint_is_dropped() {
        let lm = default_landmarks(100, 140);
        let radii = RoiRadii::default().resolve(&lm);
        let rf = assign_regions(&[kp(2.0, 2.0)], &lm, &radii);
        assert_eq!(rf.total(), 0);
    }

    #[test]
    fn equidistant_overlap_prefers_fixed_order() {
        let lm = LandmarkSet {
            left_eye: (40.0, 50.0),
            right_eye: (80.0, 50.0),
            nose: (40.0, 70.0),
            mouth: (60.0, 110.0),
        };
        let radii = RegionRadii([15.0, 15.0, 15.0, 15.0]);
        let rf = assign_regions(&[kp(40.0, 60.0)], &lm, &radii);
        assert_eq!(rf.counts(), [1, 0, 0, 0]);
        // closer to the nose wins regardless of order
        let rf = assign_regions(&[kp(40.0, 61.0)], &lm, &radii);
        assert_eq!(rf.counts(), [0, 0, 1, 0]);
    }

    #[test]
    fn default_radii_follow_iod() {
        let lm = default_landmarks(100, 140);
        let r = RoiRadii::default().resolve(&lm);
        assert!((r.get(Region::LeftEye) - 14.0).abs() < 1e-9);
        assert!((r.get(Region::Mouth) - 20.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_contained_and_order_free(
            pts in prop::collection::vec((0.0f64..100.0, 0.0f64..140.0), 0..60),
            rot in 0usize..60,
        ) {
            let lm = default_landmarks(100, 140);
            let radii = RoiRadii { eye: 0.6, nose: 0.6, mouth: 0.6 }.resolve(&lm);
            let kps: Vec<Keypoint> = pts.iter().map(|&(x, y)| kp(x, y)).collect();
            let rf = assign_regions(&kps, &lm, &radii);
            prop_assert!(rf.total() <= kps.len());
            for (region, list) in rf.iter() {
                let (cx, cy) = lm.point(region);
                for k in list {
                    prop_assert!((k.x - cx).hypot(k.y - cy) <= rf.radius(region));
                }
            }
            let mut rotated = kps.clone();
            if !rotated.is_empty() {
                let n = rotated.len();
                rotated.rotate_left(rot % n);
            }
            prop_assert_eq!(assign_regions(&rotated, &lm, &radii), rf);
        }
    }
}
