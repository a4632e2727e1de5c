//! Instances, layouts, their JSON formats and fixture generators.
//!
//! Instance document:
//!
//! ```json
//! {"box": [A, B], "rects": [[w, h], ...], "rotation": true}
//! ```
//!
//! `rotation` defaults to `true`. An optional `"ids"` array assigns ids to
//! the rectangles; when present it must be a permutation of `1..=N`.
//!
//! Layout document:
//!
//! ```json
//! {"placements": [[x_lo, y_lo, x_hi, y_hi], ...]}
//! ```
//!
//! Numbers may be JSON numbers or strings of the form `"p/q"`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PackError, Result};

/// Relative area tolerance used when callers do not pick one.
pub const DEFAULT_AREA_TOL_FACTOR: f64 = 1e-9;

/// Area gaps up to this fraction of the box area are reported as `Near`.
pub const NEAR_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectSpec {
    pub id: usize,
    pub width: f64,
    pub height: f64,
}

impl RectSpec {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub width: f64,
    pub height: f64,
}

impl BoxSpec {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite()) {
            return Err(PackError::NonFinite("box"));
        }
        if width <= 0.0 || height <= 0.0 {
            return Err(PackError::NonPositiveBox);
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Normalization length: the longer box side.
    pub fn scale(&self) -> f64 {
        self.width.max(self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    rects: Vec<RectSpec>,
    bbox: BoxSpec,
    rotation_allowed: bool,
}

impl Instance {
    /// Builds an instance from `(width, height)` pairs, assigning ids `1..=N`.
    pub fn new(sides: &[(f64, f64)], bbox: BoxSpec, rotation_allowed: bool) -> Result<Self> {
        let rects = sides
            .iter()
            .enumerate()
            .map(|(i, &(width, height))| RectSpec {
                id: i + 1,
                width,
                height,
            })
            .collect();
        Self::from_rects(rects, bbox, rotation_allowed)
    }

    pub fn from_rects(rects: Vec<RectSpec>, bbox: BoxSpec, rotation_allowed: bool) -> Result<Self> {
        BoxSpec::new(bbox.width, bbox.height)?;
        let mut seen = vec![false; rects.len()];
        for r in &rects {
            if !(r.width.is_finite() && r.height.is_finite()) {
                return Err(PackError::NonFinite("rectangle side"));
            }
            if r.width <= 0.0 || r.height <= 0.0 {
                return Err(PackError::NonPositiveSide { id: r.id });
            }
            if r.id == 0 || r.id > rects.len() || seen[r.id - 1] {
                return Err(PackError::BadIds(r.id));
            }
            seen[r.id - 1] = true;
        }
        Ok(Self {
            rects,
            bbox,
            rotation_allowed,
        })
    }

    pub fn rects(&self) -> &[RectSpec] {
        &self.rects
    }

    pub fn bbox(&self) -> BoxSpec {
        self.bbox
    }

    pub fn rotation_allowed(&self) -> bool {
        self.rotation_allowed
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn area_sum(&self) -> f64 {
        self.rects.iter().map(RectSpec::area).sum()
    }

    pub fn default_area_tol(&self) -> f64 {
        DEFAULT_AREA_TOL_FACTOR * self.bbox.area()
    }

    /// Same rectangles with a different rotation flag.
    pub fn with_rotation(mut self, rotation_allowed: bool) -> Self {
        self.rotation_allowed = rotation_allowed;
        self
    }
}

/// Serializes as `[x_lo, y_lo, x_hi, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x_lo: f64,
    pub y_lo: f64,
    pub x_hi: f64,
    pub y_hi: f64,
}

impl Placement {
    pub fn new(x_lo: f64, y_lo: f64, x_hi: f64, y_hi: f64) -> Self {
        Self {
            x_lo,
            y_lo,
            x_hi,
            y_hi,
        }
    }

    pub fn dx(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn dy(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn cx(&self) -> f64 {
        0.5 * (self.x_hi + self.x_lo)
    }

    pub fn cy(&self) -> f64 {
        0.5 * (self.y_hi + self.y_lo)
    }

    pub fn area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn is_ordered(&self) -> bool {
        self.x_hi >= self.x_lo && self.y_hi >= self.y_lo
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x_lo, self.y_lo, self.x_hi, self.y_hi]
    }
}

impl Serialize for Placement {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Layout {
    pub placements: Vec<Placement>,
}

impl Layout {
    pub fn new(placements: Vec<Placement>) -> Self {
        Self { placements }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn check_cardinality(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.len() {
            return Err(PackError::CardinalityMismatch {
                expected: inst.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Outcome of the area gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AreaVerdict {
    Exact,
    /// Gap within [`NEAR_FRACTION`] of the box area; `delta = Σwh − AB`.
    Near {
        delta: f64,
    },
    Infeasible {
        delta: f64,
    },
}

impl AreaVerdict {
    pub fn is_exact(&self) -> bool {
        matches!(self, AreaVerdict::Exact)
    }

    pub fn delta(&self) -> f64 {
        match *self {
            AreaVerdict::Exact => 0.0,
            AreaVerdict::Near { delta } | AreaVerdict::Infeasible { delta } => delta,
        }
    }
}

/// Area equality `Σ w·h = A·B`, the moment identity for a constant weight.
pub fn check_area(inst: &Instance, tol_area: f64) -> AreaVerdict {
    let box_area = inst.bbox.area();
    let delta = inst.area_sum() - box_area;
    if delta.abs() <= tol_area {
        AreaVerdict::Exact
    } else if delta.abs() <= NEAR_FRACTION * box_area {
        AreaVerdict::Near { delta }
    } else {
        AreaVerdict::Infeasible { delta }
    }
}

/// Rectangles `(1/n, 1/(n+1))` for `n = 1..=n_max` in the unit square.
pub fn harmonic_prefix(n_max: usize) -> Result<Instance> {
    if n_max < 1 {
        return Err(PackError::InvalidArgument(
            "harmonic prefix needs N >= 1".into(),
        ));
    }
    let sides: Vec<(f64, f64)> = (1..=n_max)
        .map(|n| (1.0 / n as f64, 1.0 / (n as f64 + 1.0)))
        .collect();
    Instance::new(&sides, BoxSpec::new(1.0, 1.0)?, true)
}

/// Random guillotine dissection of `bbox` into `n_cuts + 1` rectangles.
///
/// Each step picks a leaf with probability proportional to its area and cuts
/// it across its longer side at a fraction drawn from `[0.2, 0.8]`.
pub fn gen_guillotine(seed: u64, n_cuts: usize, bbox: BoxSpec) -> (Instance, Layout) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves = vec![Placement::new(0.0, 0.0, bbox.width, bbox.height)];
    for _ in 0..n_cuts {
        let total: f64 = leaves.iter().map(Placement::area).sum();
        let mut pick = rng.random_range(0.0..total);
        let mut idx = leaves.len() - 1;
        for (i, leaf) in leaves.iter().enumerate() {
            if pick < leaf.area() {
                idx = i;
                break;
            }
            pick -= leaf.area();
        }
        let leaf = leaves[idx];
        let frac = rng.random_range(0.2..=0.8);
        let vertical = match leaf.dx().partial_cmp(&leaf.dy()) {
            Some(std::cmp::Ordering::Greater) => true,
            Some(std::cmp::Ordering::Less) => false,
            _ => rng.random_bool(0.5),
        };
        let (a, b) = if vertical {
            let cut = leaf.x_lo + frac * leaf.dx();
            (
                Placement::new(leaf.x_lo, leaf.y_lo, cut, leaf.y_hi),
                Placement::new(cut, leaf.y_lo, leaf.x_hi, leaf.y_hi),
            )
        } else {
            let cut = leaf.y_lo + frac * leaf.dy();
            (
                Placement::new(leaf.x_lo, leaf.y_lo, leaf.x_hi, cut),
                Placement::new(leaf.x_lo, cut, leaf.x_hi, leaf.y_hi),
            )
        };
        leaves[idx] = a;
        leaves.push(b);
    }
    let rects = leaves
        .iter()
        .enumerate()
        .map(|(i, p)| RectSpec {
            id: i + 1,
            width: p.dx(),
            height: p.dy(),
        })
        .collect();
    let inst = Instance {
        rects,
        bbox,
        rotation_allowed: true,
    };
    (inst, Layout::new(leaves))
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// A number as written in a document: a JSON number or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum Scalar {
    Num(serde_json::Number),
    Text(String),
}

impl Scalar {
    /// Decimal text of the value, or `p/q` for strings.
    pub(crate) fn text(&self) -> String {
        match self {
            Scalar::Num(n) => n.to_string(),
            Scalar::Text(s) => s.trim().to_string(),
        }
    }

    pub(crate) fn to_f64(&self) -> Result<f64> {
        let v = match self {
            Scalar::Num(n) => n
                .as_f64()
                .ok_or_else(|| PackError::Malformed(n.to_string()))?,
            Scalar::Text(s) => parse_ratio_f64(s)?,
        };
        if !v.is_finite() {
            return Err(PackError::NonFinite("number"));
        }
        Ok(v)
    }
}

fn parse_ratio_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || PackError::NonRational(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct RawInstance {
    #[serde(rename = "box")]
    pub(crate) bbox: [Scalar; 2],
    pub(crate) rects: Vec<[Scalar; 2]>,
    #[serde(default = "default_rotation")]
    pub(crate) rotation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) ids: Option<Vec<usize>>,
}

fn default_rotation() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct RawLayout {
    pub(crate) placements: Vec<[Scalar; 4]>,
}

pub(crate) fn parse_raw_instance(text: &str) -> Result<RawInstance> {
    let raw: RawInstance =
        serde_json::from_str(text).map_err(|e| PackError::Malformed(e.to_string()))?;
    if let Some(ids) = &raw.ids {
        if ids.len() != raw.rects.len() {
            return Err(PackError::Malformed(format!(
                "{} ids for {} rects",
                ids.len(),
                raw.rects.len()
            )));
        }
    }
    Ok(raw)
}

pub(crate) fn parse_raw_layout(text: &str) -> Result<RawLayout> {
    serde_json::from_str(text).map_err(|e| PackError::Malformed(e.to_string()))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw = parse_raw_instance(text)?;
    let bbox = BoxSpec::new(raw.bbox[0].to_f64()?, raw.bbox[1].to_f64()?)?;
    let rects = raw
        .rects
        .iter()
        .enumerate()
        .map(|(i, [w, h])| {
            let id = raw.ids.as_ref().map_or(i + 1, |ids| ids[i]);
            Ok(RectSpec {
                id,
                width: w.to_f64()?,
                height: h.to_f64()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::from_rects(rects, bbox, raw.rotation)
}

fn num(v: f64) -> Scalar {
    Scalar::Num(serde_json::Number::from_f64(v).expect("finite coordinate"))
}

pub fn serialize_instance(inst: &Instance) -> String {
    let canonical = inst.rects.iter().enumerate().all(|(i, r)| r.id == i + 1);
    let raw = RawInstance {
        bbox: [num(inst.bbox.width), num(inst.bbox.height)],
        rects: inst
            .rects
            .iter()
            .map(|r| [num(r.width), num(r.height)])
            .collect(),
        rotation: inst.rotation_allowed,
        ids: (!canonical).then(|| inst.rects.iter().map(|r| r.id).collect()),
    };
    serde_json::to_string(&raw).expect("instance serializes")
}

pub fn parse_layout(text: &str) -> Result<Layout> {
    let raw = parse_raw_layout(text)?;
    let placements = raw
        .placements
        .iter()
        .map(|[a, b, c, d]| {
            Ok(Placement::new(
                a.to_f64()?,
                b.to_f64()?,
                c.to_f64()?,
                d.to_f64()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Layout::new(placements))
}

/// Non-finite coordinates are not representable in JSON and are written as 0.
pub fn serialize_layout(layout: &Layout) -> String {
    let raw = RawLayout {
        placements: layout
            .placements
            .iter()
            .map(|p| p.coords().map(|v| num(if v.is_finite() { v } else { 0.0 })))
            .collect(),
    };
    serde_json::to_string(&raw).expect("layout serializes")
}
