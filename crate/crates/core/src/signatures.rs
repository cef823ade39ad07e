//! Cultural signatures of areas: correlation of spatial signatures, hourly
//! check-in curves, spatio-temporal feature vectors, and how concentrated each
//! subcategory is across areas.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, AreaSignature, CheckIn, ClassId, SignatureVariant, Taxonomy};
use crate::prefs::{max_normalize, region_counts};

/// Pearson product-moment correlation, computed in two passes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("vector lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two observations"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::undefined("correlation with a constant vector"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Which features a correlation is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    All,
    Class(ClassId),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::All => f.write_str("all"),
            Scope::Class(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "All" => Ok(Scope::All),
            "drink" => Ok(Scope::Class(ClassId::Drink)),
            "fastfood" | "ffood" => Ok(Scope::Class(ClassId::FastFood)),
            "slowfood" | "sfood" => Ok(Scope::Class(ClassId::SlowFood)),
            other => other.parse().map(Scope::Class),
        }
    }
}

/// Symmetric area × area matrix of correlations. `None` marks pairs where
/// one of the vectors is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub scope: Scope,
    entries: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.len() + j]
    }

    /// Writes the matrix as CSV with labels in the header and first column.
    /// Undefined entries are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["area".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.len()).map(|j| match self.get(i, j) {
                Some(r) => r.to_string(),
                None => "NA".to_string(),
            }));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise correlation of signatures restricted to `scope`.
pub fn correlation_matrix(signatures: &[AreaSignature], taxonomy: &Taxonomy, scope: Scope) -> Result<CorrelationMatrix> {
    if signatures.len() < 2 {
        return Err(Error::invalid("a correlation matrix needs at least two areas"));
    }
    let vectors: Vec<&[f64]> = signatures
        .iter()
        .map(|s| match scope {
            Scope::All => Ok(s.normalized.as_slice()),
            Scope::Class(c) => s.class_slice(taxonomy, c),
        })
        .collect::<Result<_>>()?;
    let n = signatures.len();
    let mut entries = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let r = match pearson(vectors[i], vectors[j]) {
                Ok(r) => Some(r),
                Err(Error::Undefined(_)) => None,
                Err(e) => return Err(e),
            };
            entries[i * n + j] = r;
            entries[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: signatures.iter().map(|s| s.area_id.clone()).collect(),
        scope,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayGroup {
    Weekday,
    Weekend,
}

impl DayGroup {
    pub const ALL: [DayGroup; 2] = [DayGroup::Weekday, DayGroup::Weekend];

    /// Saturday and Sunday are the weekend.
    pub fn of(t: &NaiveDateTime) -> Self {
        match t.weekday() {
            Weekday::Sat | Weekday::Sun => DayGroup::Weekend,
            _ => DayGroup::Weekday,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayGroup::Weekday => "weekday",
            DayGroup::Weekend => "weekend",
        }
    }
}

/// Split of the day into four consecutive periods
/// `[0, c₀) [c₀, c₁) [c₁, c₂) [c₂, 24)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayPeriods {
    cuts: [u32; 3],
}

impl Default for DayPeriods {
    fn default() -> Self {
        DayPeriods { cuts: [6, 12, 18] }
    }
}

impl DayPeriods {
    pub fn new(cuts: [u32; 3]) -> Result<Self> {
        if !(0 < cuts[0] && cuts[0] < cuts[1] && cuts[1] < cuts[2] && cuts[2] < 24) {
            return Err(Error::invalid(format!("day period cuts {cuts:?} must satisfy 0 < a < b < c < 24")));
        }
        Ok(DayPeriods { cuts })
    }

    pub fn cuts(&self) -> [u32; 3] {
        self.cuts
    }

    pub fn period_of(&self, hour: u32) -> usize {
        self.cuts.iter().filter(|&&c| hour >= c).count()
    }

    pub fn label(&self, period: usize) -> String {
        let bounds = [0, self.cuts[0], self.cuts[1], self.cuts[2], 24];
        format!("{:02}-{:02}", bounds[period], bounds[period + 1])
    }
}

/// Slots per subcategory in a spatio-temporal vector.
pub const SLOTS_PER_SUBCATEGORY: usize = 8;

/// Position of (subcategory, day group, period) in a spatio-temporal vector:
/// subcategory-major, then weekday before weekend, then period.
pub fn spatiotemporal_index(subcategory: usize, day_group: DayGroup, period: usize) -> usize {
    debug_assert!(period < 4);
    subcategory * SLOTS_PER_SUBCATEGORY + (day_group as usize) * 4 + period
}

/// Column labels matching [`spatiotemporal_index`].
pub fn spatiotemporal_labels(taxonomy: &Taxonomy, periods: &DayPeriods) -> Vec<String> {
    let mut labels = Vec::with_capacity(taxonomy.len() * SLOTS_PER_SUBCATEGORY);
    for name in taxonomy.names() {
        for dg in DayGroup::ALL {
            for p in 0..4 {
                labels.push(format!("{name}|{}|{}", dg.as_str(), periods.label(p)));
            }
        }
    }
    labels
}

/// Raw spatio-temporal counts of an area.
pub fn spatiotemporal_counts(checkins: &[CheckIn], area: &Area, taxonomy: &Taxonomy, periods: &DayPeriods) -> Vec<u64> {
    let mut counts = vec![0; taxonomy.len() * SLOTS_PER_SUBCATEGORY];
    for c in checkins.iter().filter(|c| area.contains(c.lat, c.lon, c.country.as_deref())) {
        let i = spatiotemporal_index(c.subcategory, DayGroup::of(&c.timestamp), periods.period_of(c.timestamp.hour()));
        counts[i] += 1;
    }
    counts
}

/// Spatio-temporal signature (`m × 2 × 4` entries), normalized by the single
/// largest entry.
pub fn spatiotemporal_vector(
    checkins: &[CheckIn],
    area: &Area,
    taxonomy: &Taxonomy,
    periods: &DayPeriods,
) -> Result<AreaSignature> {
    let counts = spatiotemporal_counts(checkins, area, taxonomy, periods);
    let normalized = max_normalize(&counts).ok_or_else(|| Error::EmptyArea(area.id.clone()))?;
    Ok(AreaSignature {
        area_id: area.id.clone(),
        raw_counts: counts,
        normalized,
        variant: SignatureVariant::Spatiotemporal,
    })
}

/// Hourly check-in curve of one class in one area for one day group, scaled
/// so that its busiest hour is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSeries {
    pub area_id: String,
    pub class: ClassId,
    pub day_group: DayGroup,
    pub counts: [u64; 24],
    pub bins: [f64; 24],
}

pub fn temporal_series(
    checkins: &[CheckIn],
    area: &Area,
    taxonomy: &Taxonomy,
    class: ClassId,
    day_group: DayGroup,
) -> Result<TemporalSeries> {
    let range = taxonomy.class_range(class)?;
    let mut counts = [0u64; 24];
    for c in checkins {
        if range.contains(&c.subcategory)
            && DayGroup::of(&c.timestamp) == day_group
            && area.contains(c.lat, c.lon, c.country.as_deref())
        {
            counts[c.timestamp.hour() as usize] += 1;
        }
    }
    let mut bins = [0.0; 24];
    if let Some(norm) = max_normalize(&counts) {
        bins.copy_from_slice(&norm);
    }
    Ok(TemporalSeries {
        area_id: area.id.clone(),
        class,
        day_group,
        counts,
        bins,
    })
}

/// Writes series as CSV: `area,class,day_group,h00,…,h23`.
pub fn write_temporal_csv<W: Write>(out: W, series: &[TemporalSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["area".to_string(), "class".into(), "day_group".into()];
    header.extend((0..24).map(|h| format!("h{h:02}")));
    w.write_record(&header)?;
    for s in series {
        let mut row = vec![s.area_id.clone(), s.class.to_string(), s.day_group.as_str().to_string()];
        row.extend(s.bins.iter().map(|b| b.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shannon entropy in bits of the distribution given by `counts`.
pub fn entropy_bits(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::undefined("entropy of an empty distribution"));
    }
    let total = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Entropy of one subcategory's check-ins across `areas`.
pub fn subcategory_entropy(checkins: &[CheckIn], subcategory: usize, areas: &[Area]) -> Result<f64> {
    let counts: Vec<u64> = areas
        .iter()
        .map(|a| {
            checkins
                .iter()
                .filter(|c| c.subcategory == subcategory && a.contains(c.lat, c.lon, c.country.as_deref()))
                .count() as u64
        })
        .collect();
    entropy_bits(&counts)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub class: ClassId,
    pub level: String,
    pub mean: f64,
    pub std: f64,
    /// Subcategories with at least one check-in in the areas.
    pub subcategories: usize,
}

/// Per-subcategory entropies (None where a subcategory has no check-ins)
/// and their per-class mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub level: String,
    pub per_subcategory: Vec<Option<f64>>,
    pub per_class: Vec<EntropyRow>,
}

pub fn entropy_summary(checkins: &[CheckIn], taxonomy: &Taxonomy, areas: &[Area], level: &str) -> EntropyReport {
    let per_area: Vec<Vec<u64>> = areas.iter().map(|a| region_counts(checkins, a, taxonomy)).collect();
    let per_subcategory: Vec<Option<f64>> = (0..taxonomy.len())
        .map(|i| {
            let column: Vec<u64> = per_area.iter().map(|c| c[i]).collect();
            entropy_bits(&column).ok()
        })
        .collect();
    let per_class = taxonomy
        .classes()
        .filter_map(|(class, range)| {
            let hs: Vec<f64> = per_subcategory[range].iter().flatten().copied().collect();
            mean_std(&hs).map(|(mean, std)| EntropyRow {
                class,
                level: level.to_string(),
                mean,
                std,
                subcategories: hs.len(),
            })
        })
        .collect();
    EntropyReport {
        level: level.to_string(),
        per_subcategory,
        per_class,
    }
}

impl EntropyReport {
    /// `class,level,mean,std,subcategories`
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.per_class {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `subcategory,class,entropy` with an empty entropy where undefined.
    pub fn write_subcategories_csv<W: Write>(&self, out: W, taxonomy: &Taxonomy) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["subcategory", "class", "entropy"])?;
        for (i, h) in self.per_subcategory.iter().enumerate() {
            w.write_record([
                taxonomy.name(i).to_string(),
                taxonomy.class_of(i).to_string(),
                h.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
