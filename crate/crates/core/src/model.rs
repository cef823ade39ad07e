//! Domain types shared by every stage of the pipeline, and the taxonomy that
//! fixes the feature space.
//!
//! A [`Taxonomy`] is an ordered list of venue subcategories grouped into
//! classes. The position of a subcategory in the taxonomy file is its feature
//! index everywhere: in user bit vectors, in area count vectors, and (scaled
//! by the number of time slots) in spatio-temporal signatures.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A venue class. `Other` holds every subcategory outside food and drink and
/// only appears in the all-categories taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassId {
    Drink,
    FastFood,
    SlowFood,
    Other,
}

impl ClassId {
    pub const ALL: [ClassId; 4] = [ClassId::Drink, ClassId::FastFood, ClassId::SlowFood, ClassId::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassId::Drink => "Drink",
            ClassId::FastFood => "FastFood",
            ClassId::SlowFood => "SlowFood",
            ClassId::Other => "Other",
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Drink" => Ok(ClassId::Drink),
            "FastFood" => Ok(ClassId::FastFood),
            "SlowFood" => Ok(ClassId::SlowFood),
            "Other" => Ok(ClassId::Other),
            _ => Err(Error::UnknownClass(s.to_string())),
        }
    }
}

/// The class → subcategory universe.
///
/// Invariants established by [`Taxonomy::new`]: subcategory names are unique,
/// every declared class is non-empty, and each class occupies one contiguous
/// index range in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TaxonomyRepr", into = "TaxonomyRepr")]
pub struct Taxonomy {
    names: Vec<String>,
    classes: Vec<(ClassId, Range<usize>)>,
    excluded: BTreeSet<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyRepr {
    classes: Vec<(ClassId, Vec<String>)>,
    excluded: Vec<String>,
}

impl TryFrom<TaxonomyRepr> for Taxonomy {
    type Error = Error;

    fn try_from(repr: TaxonomyRepr) -> Result<Self> {
        Taxonomy::new(repr.classes, repr.excluded)
    }
}

impl From<Taxonomy> for TaxonomyRepr {
    fn from(t: Taxonomy) -> Self {
        TaxonomyRepr {
            classes: t
                .classes
                .iter()
                .map(|(c, r)| (*c, t.names[r.clone()].to_vec()))
                .collect(),
            excluded: t.excluded.iter().cloned().collect(),
        }
    }
}

impl Taxonomy {
    /// Builds a taxonomy from class blocks in feature order. Names listed in
    /// `excluded` are dropped from their class before validation.
    pub fn new<S: Into<String>>(
        blocks: Vec<(ClassId, Vec<String>)>,
        excluded: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let excluded: BTreeSet<String> = excluded.into_iter().map(Into::into).collect();
        let mut names = Vec::new();
        let mut classes: Vec<(ClassId, Range<usize>)> = Vec::new();
        let mut index = HashMap::new();
        for (class, subcats) in blocks {
            if classes.iter().any(|(c, _)| *c == class) {
                return Err(Error::NonContiguousClass(class.to_string()));
            }
            let start = names.len();
            for name in subcats {
                if excluded.contains(&name) {
                    continue;
                }
                if index.insert(name.clone(), names.len()).is_some() {
                    return Err(Error::DuplicateSubcategory(name));
                }
                names.push(name);
            }
            if names.len() == start {
                return Err(Error::EmptyClass(class.to_string()));
            }
            classes.push((class, start..names.len()));
        }
        Ok(Taxonomy {
            names,
            classes,
            excluded,
            index,
        })
    }

    /// Parses the line-oriented taxonomy format:
    ///
    /// ```text
    /// # comment
    /// Drink<TAB>Pub
    /// !exclude<TAB>Restaurant
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks: Vec<(ClassId, Vec<String>)> = Vec::new();
        let mut excluded = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (head, name) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected `class_id<TAB>subcategory_name`".into(),
            })?;
            let (head, name) = (head.trim(), name.trim());
            if name.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty subcategory name".into(),
                });
            }
            if head == "!exclude" {
                excluded.push(name.to_string());
                continue;
            }
            let class: ClassId = head.parse()?;
            match blocks.last_mut() {
                Some((c, names)) if *c == class => names.push(name.to_string()),
                _ => blocks.push((class, vec![name.to_string()])),
            }
        }
        Taxonomy::new(blocks, excluded)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Taxonomy::parse(&std::fs::read_to_string(path)?)
    }

    /// Number of features `m`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn excluded(&self) -> &BTreeSet<String> {
        &self.excluded
    }

    /// Declared classes with their feature ranges, in order.
    pub fn classes(&self) -> impl Iterator<Item = (ClassId, Range<usize>)> + '_ {
        self.classes.iter().map(|(c, r)| (*c, r.clone()))
    }

    pub fn class_range(&self, class: ClassId) -> Result<Range<usize>> {
        self.classes
            .iter()
            .find(|(c, _)| *c == class)
            .map(|(_, r)| r.clone())
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    pub fn class_of(&self, index: usize) -> ClassId {
        self.classes
            .iter()
            .find(|(_, r)| r.contains(&index))
            .map(|(c, _)| *c)
            .expect("feature index out of range")
    }

    /// Projects a feature vector onto one class.
    ///
    /// `values.len()` must be a multiple of `m`; each subcategory then owns a
    /// contiguous block of `values.len() / m` entries (1 for spatial vectors,
    /// 8 for spatio-temporal ones), so the slice is always contiguous.
    pub fn class_slice<'a, T>(&self, values: &'a [T], class: ClassId) -> Result<&'a [T]> {
        let range = self.class_range(class)?;
        let stride = self.stride_of(values.len())?;
        Ok(&values[range.start * stride..range.end * stride])
    }

    pub(crate) fn stride_of(&self, len: usize) -> Result<usize> {
        let m = self.len();
        if m == 0 || !len.is_multiple_of(m) || len == 0 {
            return Err(Error::invalid(format!(
                "vector of length {len} does not match a taxonomy of {m} subcategories"
            )));
        }
        Ok(len / m)
    }
}

/// One timestamped visit to a categorized venue.
///
/// `timestamp` is the venue's local wall-clock time; nothing in the pipeline
/// converts time zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckIn {
    pub user_id: String,
    pub venue_id: String,
    pub lat: f64,
    pub lon: f64,
    pub timestamp: NaiveDateTime,
    /// Feature index into the active taxonomy.
    pub subcategory: usize,
    /// Country the coordinates geocode to; filled in by
    /// [`geocode`](crate::ingest::geocode).
    #[serde(default)]
    pub country: Option<String>,
}

impl CheckIn {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::invalid(format!(
                "coordinates out of range: lat {}, lon {}",
                self.lat, self.lon
            )));
        }
        if self.subcategory >= taxonomy.len() {
            return Err(Error::UnknownSubcategory(format!("#{}", self.subcategory)));
        }
        Ok(())
    }
}

/// Axis-aligned box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        BBox {
            min_lon,
            min_lat,
            max_lon,
            max_lat,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn height(&self) -> f64 {
        self.max_lat - self.min_lat
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.min_lat && lat <= self.max_lat && lon >= self.min_lon && lon <= self.max_lon
    }

    /// Row/column of the grid cell holding a point. Cells are half-open
    /// `[lo, hi)` except the last row and column, which include their upper
    /// edge. Points outside the box map to `None`.
    pub fn cell_of(&self, lat: f64, lon: f64, rows: usize, cols: usize) -> Option<(usize, usize)> {
        if !self.contains(lat, lon) {
            return None;
        }
        let locate = |v: f64, lo: f64, span: f64, n: usize| {
            let i = ((v - lo) / span * n as f64).floor() as usize;
            i.min(n - 1)
        };
        Some((
            locate(lat, self.min_lat, self.height(), rows),
            locate(lon, self.min_lon, self.width(), cols),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaKind {
    Country,
    City,
    GridCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Matches check-ins geocoded to this country code.
    Country(String),
    BoundingBox(BBox),
    /// One cell of a `rows × cols` grid laid over `city_box`.
    GridCell {
        city: String,
        city_box: BBox,
        rows: usize,
        cols: usize,
        row: usize,
        col: usize,
    },
}

/// A country, a city, or a cell of a city grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub id: String,
    pub geometry: Geometry,
    /// Categorical labels such as `country`, `continent` or `western_eastern`.
    pub attributes: BTreeMap<String, String>,
}

impl Area {
    pub fn country(code: impl Into<String>) -> Self {
        let code = code.into();
        let mut attributes = BTreeMap::new();
        attributes.insert("country".to_string(), code.clone());
        Area {
            id: code.clone(),
            geometry: Geometry::Country(code),
            attributes,
        }
    }

    pub fn city(id: impl Into<String>, bbox: BBox) -> Self {
        Area {
            id: id.into(),
            geometry: Geometry::BoundingBox(bbox),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn kind(&self) -> AreaKind {
        match self.geometry {
            Geometry::Country(_) => AreaKind::Country,
            Geometry::BoundingBox(_) => AreaKind::City,
            Geometry::GridCell { .. } => AreaKind::GridCell,
        }
    }

    pub fn bbox(&self) -> Option<BBox> {
        match &self.geometry {
            Geometry::Country(_) => None,
            Geometry::BoundingBox(b) => Some(*b),
            Geometry::GridCell {
                city_box,
                rows,
                cols,
                row,
                col,
                ..
            } => {
                let h = city_box.height() / *rows as f64;
                let w = city_box.width() / *cols as f64;
                Some(BBox::new(
                    city_box.min_lon + w * *col as f64,
                    city_box.min_lat + h * *row as f64,
                    city_box.min_lon + w * (*col + 1) as f64,
                    city_box.min_lat + h * (*row + 1) as f64,
                ))
            }
        }
    }

    /// Whether a check-in at (`lat`, `lon`), geocoded to `country`, falls in
    /// this area.
    pub fn contains(&self, lat: f64, lon: f64, country: Option<&str>) -> bool {
        match &self.geometry {
            Geometry::Country(code) => country == Some(code.as_str()),
            Geometry::BoundingBox(b) => b.contains(lat, lon),
            Geometry::GridCell {
                city_box,
                rows,
                cols,
                row,
                col,
                ..
            } => city_box.cell_of(lat, lon, *rows, *cols) == Some((*row, *col)),
        }
    }

    /// Row-major cell index for grid cells.
    pub fn cell_index(&self) -> Option<usize> {
        match self.geometry {
            Geometry::GridCell { cols, row, col, .. } => Some(row * cols + col),
            _ => None,
        }
    }
}

/// Fixed-length bit vector over the feature space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureBits {
    words: Vec<u64>,
    len: usize,
}

impl FeatureBits {
    pub fn zeros(len: usize) -> Self {
        FeatureBits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = FeatureBits::zeros(len);
        for i in ones {
            bits.set(i);
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersection_count(&self, other: &FeatureBits) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn union_count(&self, other: &FeatureBits) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones())
            .sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn to_dense(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }
}

/// A user's binary preference vector: bit `i` is set iff the user checked in
/// at least once at subcategory `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub home_country: String,
    pub bits: FeatureBits,
    pub checkin_count: u64,
}

impl UserProfile {
    pub fn class_slice(&self, taxonomy: &Taxonomy, class: ClassId) -> Result<Vec<u8>> {
        Ok(taxonomy.class_slice(&self.bits.to_dense(), class)?.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureVariant {
    /// One entry per subcategory.
    Spatial,
    /// One entry per (subcategory, day group, day period).
    Spatiotemporal,
}

/// Max-normalized count vector describing one area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSignature {
    pub area_id: String,
    pub raw_counts: Vec<u64>,
    pub normalized: Vec<f64>,
    pub variant: SignatureVariant,
}

impl AreaSignature {
    pub fn class_slice<'a>(&'a self, taxonomy: &Taxonomy, class: ClassId) -> Result<&'a [f64]> {
        taxonomy.class_slice(&self.normalized, class)
    }
}
