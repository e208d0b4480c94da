//! Domain values shared by every stage: boxes, detections, frames and the
//! class vocabulary.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Floating point type the engine computes in.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("f64 constant representable in scalar type")
}

/// Slack allowed on the `x + w <= 1` style invariants.
pub const GEOMETRY_EPS: f64 = 1e-9;

/// Axis-aligned box in normalized image coordinates: `x`, `y` is the
/// top-left corner, `w`, `h` the extent, all relative to the image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> BoundingBox<T> {
    /// Builds a box and checks the normalized-coordinate invariants.
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        let eps = lit::<T>(GEOMETRY_EPS);
        let finite = [x, y, w, h].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGeometry(format!(
                "non-finite box ({x}, {y}, {w}, {h})"
            )));
        }
        if w <= T::zero() || h <= T::zero() {
            return Err(Error::InvalidGeometry(format!(
                "box extent must be positive, got {w}x{h}"
            )));
        }
        if x < -eps || y < -eps || x + w > T::one() + eps || y + h > T::one() + eps {
            return Err(Error::InvalidGeometry(format!(
                "box ({x}, {y}, {w}, {h}) leaves the unit square"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    /// Box covering the whole image.
    pub fn full() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            w: T::one(),
            h: T::one(),
        }
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn center(&self) -> (T, T) {
        let two = lit::<T>(2.0);
        (self.x + self.w / two, self.y + self.h / two)
    }

    /// Area of the intersection with `other`, zero when disjoint or touching.
    pub fn intersection_area(&self, other: &Self) -> T {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw > T::zero() && ih > T::zero() {
            iw * ih
        } else {
            T::zero()
        }
    }

    pub fn cast<U: Scalar>(&self) -> BoundingBox<U> {
        let conv = |v: T| U::from_f64(v.to_f64().unwrap_or(0.0)).unwrap_or_else(U::zero);
        BoundingBox {
            x: conv(self.x),
            y: conv(self.y),
            w: conv(self.w),
            h: conv(self.h),
        }
    }
}

/// Converts a pixel box `[left, top, width, height]` into normalized
/// coordinates, clamping any part that overhangs the image.
pub fn normalize_bbox<T: Scalar>(px: [T; 4], img_w: T, img_h: T) -> Result<BoundingBox<T>> {
    let [left, top, width, height] = px;
    if !(img_w > T::zero() && img_h > T::zero()) {
        return Err(Error::InvalidGeometry(format!(
            "image dimensions must be positive, got {img_w}x{img_h}"
        )));
    }
    if !(width > T::zero() && height > T::zero()) {
        return Err(Error::InvalidGeometry(format!(
            "box extent must be positive, got {width}x{height}"
        )));
    }
    if !left.is_finite() || !top.is_finite() {
        return Err(Error::InvalidGeometry("non-finite box origin".into()));
    }

    let clamp01 = |v: T| v.max(T::zero()).min(T::one());
    let x0 = clamp01(left / img_w);
    let y0 = clamp01(top / img_h);
    let x1 = clamp01((left + width) / img_w);
    let y1 = clamp01((top + height) / img_h);

    let (w, h) = (x1 - x0, y1 - y0);
    if w <= T::zero() || h <= T::zero() {
        return Err(Error::InvalidGeometry(format!(
            "box [{left}, {top}, {width}, {height}] lies outside the {img_w}x{img_h} image"
        )));
    }
    Ok(BoundingBox { x: x0, y: y0, w, h })
}

/// One pin of the tactile grid, addressed by row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    pub class_id: usize,
    pub confidence: T,
    pub bbox: BoundingBox<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    pub frame_id: u64,
    pub ts_ms: u64,
    pub img_w: u32,
    pub img_h: u32,
    pub detections: Vec<Detection<T>>,
    /// Detector latency carried through from prediction files, if reported.
    pub latency_ms: Option<f64>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(frame_id: u64, ts_ms: u64, img_w: u32, img_h: u32) -> Self {
        Self {
            frame_id,
            ts_ms,
            img_w,
            img_h,
            detections: Vec::new(),
            latency_ms: None,
        }
    }

    pub fn with_detections(mut self, detections: Vec<Detection<T>>) -> Self {
        self.detections = detections;
        self
    }
}

/// Ordered list of class names, each owned by exactly one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassVocabulary {
    names: Vec<String>,
    environment_of: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassVocabulary {
    /// Builds a vocabulary from `(environment, classes)` groups. Class ids are
    /// assigned in iteration order.
    pub fn from_groups<I, E, C, S>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, C)>,
        E: Into<String>,
        C: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            names: Vec::new(),
            environment_of: Vec::new(),
            index: HashMap::new(),
        };
        for (env, classes) in groups {
            let env = env.into();
            if env.is_empty() {
                return Err(Error::Config("empty environment label".into()));
            }
            for class in classes {
                let class = class.into();
                if class.is_empty() {
                    return Err(Error::Config(format!("empty class name in {env}")));
                }
                if let Some(&prev) = vocab.index.get(&class) {
                    return Err(Error::Config(format!(
                        "class {class:?} listed under both {} and {env}",
                        vocab.environment_of[prev]
                    )));
                }
                vocab.index.insert(class.clone(), vocab.names.len());
                vocab.names.push(class);
                vocab.environment_of.push(env.clone());
            }
        }
        if vocab.names.is_empty() {
            return Err(Error::Config("vocabulary has no classes".into()));
        }
        Ok(vocab)
    }

    /// Parses `{"office": ["laptop", ...], "kitchen": [...]}`. Environments
    /// are taken in sorted order, classes in the listed order.
    pub fn from_json(text: &str) -> Result<Self> {
        let groups: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("vocabulary: {e}")))?;
        Self::from_groups(groups)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class_id: usize) -> Option<&str> {
        self.names.get(class_id).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn environment_of(&self, class_id: usize) -> Option<&str> {
        self.environment_of.get(class_id).map(String::as_str)
    }

    /// Environment labels in first-appearance order.
    pub fn environments(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for env in &self.environment_of {
            if !seen.contains(&env.as_str()) {
                seen.push(env);
            }
        }
        seen
    }

    pub fn classes_of(&self, environment: &str) -> Vec<usize> {
        self.environment_of
            .iter()
            .enumerate()
            .filter(|(_, env)| env.as_str() == environment)
            .map(|(id, _)| id)
            .collect()
    }
}
