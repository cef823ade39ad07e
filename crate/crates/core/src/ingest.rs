//! Check-in corpora: parsing, offline reverse geocoding, home-country
//! assignment, activity filtering and city grids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, BBox, CheckIn, ClassId, Geometry, Taxonomy};

/// Fraction of malformed lines tolerated before parsing aborts.
pub const DEFAULT_ERROR_BUDGET: f64 = 0.001;

/// Minimum check-ins for a user to enter a similarity network.
pub const DEFAULT_MIN_CHECKINS: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    JsonLines,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, falling back to the first
    /// non-blank character of the content.
    pub fn detect(path: Option<&Path>, text: &str) -> Self {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => return CorpusFormat::Csv,
            Some("jsonl" | "json" | "ndjson") => return CorpusFormat::JsonLines,
            _ => {}
        }
        if text.trim_start().starts_with('{') {
            CorpusFormat::JsonLines
        } else {
            CorpusFormat::Csv
        }
    }
}

/// Parsed, validated check-ins plus the bookkeeping of what was dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckInCorpus {
    pub checkins: Vec<CheckIn>,
    /// Data lines seen (headers and blank lines excluded).
    pub lines: usize,
    pub skipped_unknown_subcategory: usize,
    pub malformed: usize,
}

impl CheckInCorpus {
    pub fn len(&self) -> usize {
        self.checkins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkins.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Text(String),
    Int(i64),
}

impl From<IdField> for String {
    fn from(id: IdField) -> String {
        match id {
            IdField::Text(s) => s,
            IdField::Int(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    user: IdField,
    venue: IdField,
    lat: f64,
    lon: f64,
    ts: String,
    subcat: String,
}

enum LineOutcome {
    Ok(CheckIn),
    Unknown,
    Malformed(String),
}

fn parse_timestamp(ts: &str) -> std::result::Result<NaiveDateTime, String> {
    let ts = ts.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(ts, fmt) {
            return Ok(t);
        }
    }
    Err(format!("invalid timestamp `{ts}` (expected ISO-8601 local time without offset)"))
}

fn validate_record(rec: RawRecord, taxonomy: &Taxonomy) -> LineOutcome {
    let Some(subcategory) = taxonomy.index_of(rec.subcat.trim()) else {
        return LineOutcome::Unknown;
    };
    let timestamp = match parse_timestamp(&rec.ts) {
        Ok(t) => t,
        Err(e) => return LineOutcome::Malformed(e),
    };
    let checkin = CheckIn {
        user_id: rec.user.into(),
        venue_id: rec.venue.into(),
        lat: rec.lat,
        lon: rec.lon,
        timestamp,
        subcategory,
        country: None,
    };
    match checkin.validate(taxonomy) {
        Ok(()) => LineOutcome::Ok(checkin),
        Err(e) => LineOutcome::Malformed(e.to_string()),
    }
}

/// Parses a check-in corpus.
///
/// Records whose subcategory is not in the taxonomy are counted and skipped.
/// Malformed records are skipped as well, up to `floor(error_budget * lines)`
/// of them; one more aborts the parse with the offending line number.
pub fn parse_corpus(
    text: &str,
    format: CorpusFormat,
    taxonomy: &Taxonomy,
    error_budget: f64,
) -> Result<CheckInCorpus> {
    let outcomes: Vec<(usize, LineOutcome)> = match format {
        CorpusFormat::JsonLines => text
            .lines()
            .enumerate()
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let out = match serde_json::from_str::<RawRecord>(l) {
                    Ok(rec) => validate_record(rec, taxonomy),
                    Err(e) => LineOutcome::Malformed(e.to_string()),
                };
                (i + 1, out)
            })
            .collect(),
        CorpusFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .from_reader(text.as_bytes());
            let mut out = Vec::new();
            for (n, row) in reader.deserialize::<RawRecord>().enumerate() {
                match row {
                    Ok(rec) => out.push((n + 2, validate_record(rec, taxonomy))),
                    Err(e) => {
                        let line = e.position().map(|p| p.line() as usize).unwrap_or(n + 2);
                        out.push((line, LineOutcome::Malformed(e.to_string())));
                    }
                }
            }
            out
        }
    };

    let lines = outcomes.len();
    let budget = (error_budget * lines as f64).floor() as usize;
    let mut corpus = CheckInCorpus {
        lines,
        ..Default::default()
    };
    for (line, outcome) in outcomes {
        match outcome {
            LineOutcome::Ok(c) => corpus.checkins.push(c),
            LineOutcome::Unknown => corpus.skipped_unknown_subcategory += 1,
            LineOutcome::Malformed(message) => {
                corpus.malformed += 1;
                if corpus.malformed > budget {
                    return Err(Error::ErrorBudget {
                        malformed: corpus.malformed,
                        lines,
                        budget,
                        line,
                        message,
                    });
                }
            }
        }
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>, taxonomy: &Taxonomy, error_budget: f64) -> Result<CheckInCorpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let format = CorpusFormat::detect(Some(path), &text);
    parse_corpus(&text, format, taxonomy, error_budget)
}

type Ring = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
struct CountryShape {
    code: String,
    bbox: BBox,
    rings: Vec<(BBox, Ring)>,
}

/// Country polygons for offline reverse geocoding. Rings are stored closed
/// (first vertex repeated at the end) with `(lon, lat)` vertices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoIndex {
    countries: Vec<CountryShape>,
}

fn ring_bbox(ring: &[(f64, f64)]) -> BBox {
    let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(lon, lat) in ring {
        b.min_lon = b.min_lon.min(lon);
        b.max_lon = b.max_lon.max(lon);
        b.min_lat = b.min_lat.min(lat);
        b.max_lat = b.max_lat.max(lat);
    }
    b
}

fn union_bbox(a: BBox, b: BBox) -> BBox {
    BBox::new(
        a.min_lon.min(b.min_lon),
        a.min_lat.min(b.min_lat),
        a.max_lon.max(b.max_lon),
        a.max_lat.max(b.max_lat),
    )
}

/// Boundary-inclusive point-in-ring test (crossing number).
fn ring_contains(ring: &[(f64, f64)], lon: f64, lat: f64) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        let cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1);
        let scale = (x2 - x1).abs().max((y2 - y1).abs()).max(1.0);
        if cross.abs() <= 1e-12 * scale
            && lon >= x1.min(x2)
            && lon <= x1.max(x2)
            && lat >= y1.min(y2)
            && lat <= y1.max(y2)
        {
            return true;
        }
        if (y1 > lat) != (y2 > lat) {
            let x_at = x1 + (lat - y1) * (x2 - x1) / (y2 - y1);
            if lon < x_at {
                inside = !inside;
            }
        }
    }
    inside
}

impl GeoIndex {
    /// Parses `country<TAB>lon,lat;lon,lat;...`, one ring per line. A country
    /// may span several lines. Open rings are closed automatically.
    pub fn parse(text: &str) -> Result<Self> {
        let mut index = GeoIndex::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (code, coords) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `country<TAB>lon,lat;...`".into()))?;
            let mut ring: Ring = Vec::new();
            for pair in coords.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                let (lon, lat) = pair
                    .split_once(',')
                    .ok_or_else(|| err(format!("bad vertex `{pair}`")))?;
                let lon: f64 = lon.trim().parse().map_err(|_| err(format!("bad longitude `{lon}`")))?;
                let lat: f64 = lat.trim().parse().map_err(|_| err(format!("bad latitude `{lat}`")))?;
                if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
                    return Err(err(format!("vertex out of range `{pair}`")));
                }
                ring.push((lon, lat));
            }
            if ring.first() != ring.last() {
                ring.push(ring[0]);
            }
            if ring.len() < 4 {
                return Err(err("a ring needs at least three distinct vertices".into()));
            }
            index.add_ring(code.trim(), ring);
        }
        Ok(index)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        GeoIndex::parse(&std::fs::read_to_string(path)?)
    }

    /// Adds a ring to `code`. The ring is closed if needed.
    pub fn add_ring(&mut self, code: &str, mut ring: Vec<(f64, f64)>) {
        if ring.first() != ring.last() {
            ring.push(ring[0]);
        }
        let bbox = ring_bbox(&ring);
        match self.countries.iter_mut().find(|c| c.code == code) {
            Some(c) => {
                c.bbox = union_bbox(c.bbox, bbox);
                c.rings.push((bbox, ring));
            }
            None => self.countries.push(CountryShape {
                code: code.to_string(),
                bbox,
                rings: vec![(bbox, ring)],
            }),
        }
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.countries.iter().map(|c| c.code.as_str())
    }

    /// Country whose polygon holds the point; boundary points count as
    /// inside. When polygons share a border the first declared country wins.
    pub fn point_to_country(&self, lat: f64, lon: f64) -> Option<&str> {
        self.countries
            .iter()
            .filter(|c| c.bbox.contains(lat, lon))
            .find(|c| {
                c.rings
                    .iter()
                    .any(|(b, ring)| b.contains(lat, lon) && ring_contains(ring, lon, lat))
            })
            .map(|c| c.code.as_str())
    }

    /// Serializes back to the line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.countries {
            for (_, ring) in &c.rings {
                let coords: Vec<String> = ring.iter().map(|(lon, lat)| format!("{lon},{lat}")).collect();
                out.push_str(&format!("{}\t{}\n", c.code, coords.join(";")));
            }
        }
        out
    }
}

/// Fills `country` on every check-in.
pub fn geocode(checkins: &mut [CheckIn], geo: &GeoIndex) {
    checkins.par_iter_mut().for_each(|c| {
        c.country = geo.point_to_country(c.lat, c.lon).map(str::to_string);
    });
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub checkins: u64,
    pub venues: u64,
    pub users: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_checkins: u64,
    pub users_total: u64,
    pub users_discarded_mixed_country: u64,
    /// Users with at least one check-in outside every known polygon.
    pub users_discarded_unresolved: u64,
    pub users_assigned: u64,
    pub discard_fraction: f64,
    pub lines: u64,
    pub malformed_lines: u64,
    pub skipped_unknown_subcategory: u64,
    pub per_class: BTreeMap<ClassId, ClassCounts>,
}

/// User id → home country code.
pub type UserLocationMap = BTreeMap<String, String>;

/// Maps each user to a home country when all of their check-ins geocode to
/// that one country. Check-ins are geocoded in place.
pub fn assign_home_country(
    corpus: &mut CheckInCorpus,
    geo: &GeoIndex,
    taxonomy: &Taxonomy,
) -> (UserLocationMap, IngestReport) {
    geocode(&mut corpus.checkins, geo);

    #[derive(Default)]
    struct UserState<'a> {
        countries: BTreeSet<&'a str>,
        unresolved: bool,
    }
    let mut users: BTreeMap<&str, UserState> = BTreeMap::new();
    for c in &corpus.checkins {
        let st = users.entry(c.user_id.as_str()).or_default();
        match &c.country {
            Some(code) => {
                st.countries.insert(code.as_str());
            }
            None => st.unresolved = true,
        }
    }

    let mut map = UserLocationMap::new();
    let mut report = IngestReport {
        total_checkins: corpus.checkins.len() as u64,
        users_total: users.len() as u64,
        lines: corpus.lines as u64,
        malformed_lines: corpus.malformed as u64,
        skipped_unknown_subcategory: corpus.skipped_unknown_subcategory as u64,
        ..Default::default()
    };
    for (user, st) in &users {
        if st.countries.len() > 1 {
            report.users_discarded_mixed_country += 1;
        } else if st.unresolved || st.countries.is_empty() {
            report.users_discarded_unresolved += 1;
        } else {
            let code = st.countries.iter().next().expect("one country");
            map.insert(user.to_string(), code.to_string());
        }
    }
    report.users_assigned = map.len() as u64;
    report.discard_fraction = if report.users_total == 0 {
        0.0
    } else {
        report.users_discarded_mixed_country as f64 / report.users_total as f64
    };
    report.per_class = class_counts(&corpus.checkins, taxonomy);
    (map, report)
}

fn class_counts(checkins: &[CheckIn], taxonomy: &Taxonomy) -> BTreeMap<ClassId, ClassCounts> {
    let mut sets: BTreeMap<ClassId, (u64, BTreeSet<&str>, BTreeSet<&str>)> = BTreeMap::new();
    for c in checkins {
        let e = sets.entry(taxonomy.class_of(c.subcategory)).or_default();
        e.0 += 1;
        e.1.insert(&c.venue_id);
        e.2.insert(&c.user_id);
    }
    sets.into_iter()
        .map(|(class, (n, venues, users))| {
            (
                class,
                ClassCounts {
                    checkins: n,
                    venues: venues.len() as u64,
                    users: users.len() as u64,
                },
            )
        })
        .collect()
}

/// Keeps only the check-ins of users present in `homes`.
pub fn retain_assigned(checkins: Vec<CheckIn>, homes: &UserLocationMap) -> Vec<CheckIn> {
    checkins
        .into_iter()
        .filter(|c| homes.contains_key(&c.user_id))
        .collect()
}

/// Number of check-ins per user.
pub fn checkin_counts(checkins: &[CheckIn]) -> HashMap<&str, u64> {
    let mut counts = HashMap::new();
    for c in checkins {
        *counts.entry(c.user_id.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Keeps the check-ins of users with at least `min_checkins` check-ins.
pub fn filter_active_users(checkins: &[CheckIn], min_checkins: u64) -> Result<Vec<CheckIn>> {
    if min_checkins == 0 {
        return Err(Error::invalid("min_checkins must be at least 1"));
    }
    let counts = checkin_counts(checkins);
    Ok(checkins
        .iter()
        .filter(|c| counts[c.user_id.as_str()] >= min_checkins)
        .cloned()
        .collect())
}

/// Parses a city table: `city<TAB>country<TAB>min_lon,min_lat,max_lon,max_lat`
/// per line. Each city carries its country as the `country` attribute.
pub fn parse_cities(text: &str) -> Result<Vec<Area>> {
    let mut cities: Vec<Area> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [id, country, bbox] = fields[..] else {
            return Err(err("expected `city<TAB>country<TAB>min_lon,min_lat,max_lon,max_lat`".into()));
        };
        let v: Vec<f64> = bbox
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(format!("bad bounding box `{bbox}`")))?;
        let [min_lon, min_lat, max_lon, max_lat] = v[..] else {
            return Err(err(format!("bounding box needs four numbers, got `{bbox}`")));
        };
        if !(min_lon < max_lon && min_lat < max_lat) {
            return Err(err(format!("empty bounding box `{bbox}`")));
        }
        if cities.iter().any(|c| c.id == id) {
            return Err(err(format!("city `{id}` listed twice")));
        }
        cities.push(Area::city(id, BBox::new(min_lon, min_lat, max_lon, max_lat)).with_attribute("country", country));
    }
    Ok(cities)
}

pub fn load_cities(path: impl AsRef<Path>) -> Result<Vec<Area>> {
    parse_cities(&std::fs::read_to_string(path)?)
}

/// Writes cities in the format read by [`parse_cities`].
pub fn cities_to_text(cities: &[Area]) -> String {
    let mut out = String::new();
    for c in cities {
        if let Some(b) = c.bbox() {
            let country = c.attributes.get("country").map_or("", String::as_str);
            out.push_str(&format!(
                "{}\t{}\t{},{},{},{}\n",
                c.id, country, b.min_lon, b.min_lat, b.max_lon, b.max_lat
            ));
        }
    }
    out
}

/// Splits a city's bounding box into `rows × cols` cells, row-major, row 0
/// at the southern edge.
pub fn grid_partition(city: &Area, rows: usize, cols: usize) -> Result<Vec<Area>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("grid needs at least one row and one column"));
    }
    let bbox = city
        .bbox()
        .ok_or_else(|| Error::invalid(format!("area `{}` has no bounding box", city.id)))?;
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::invalid(format!("area `{}` has a degenerate bounding box", city.id)));
    }
    let mut cells = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let mut attributes = city.attributes.clone();
            attributes.insert("city".into(), city.id.clone());
            cells.push(Area {
                id: format!("{}-{}", city.id, row * cols + col),
                geometry: Geometry::GridCell {
                    city: city.id.clone(),
                    city_box: bbox,
                    rows,
                    cols,
                    row,
                    col,
                },
                attributes,
            });
        }
    }
    Ok(cells)
}

/// The `n` cells with most check-ins, by descending count then ascending
/// cell index.
pub fn top_cells(checkins: &[CheckIn], cells: &[Area], n: usize) -> Result<Vec<(Area, u64)>> {
    let mut counted: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let count = checkins
                .iter()
                .filter(|c| cell.contains(c.lat, c.lon, c.country.as_deref()))
                .count() as u64;
            (i, count)
        })
        .filter(|&(_, n)| n > 0)
        .collect();
    if n > counted.len() {
        return Err(Error::invalid(format!(
            "requested {n} cells but only {} are non-empty",
            counted.len()
        )));
    }
    counted.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| cells[a.0].cell_index().cmp(&cells[b.0].cell_index()))
            .then(a.0.cmp(&b.0))
    });
    Ok(counted
        .into_iter()
        .take(n)
        .map(|(i, count)| (cells[i].clone(), count))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taxonomy() -> Taxonomy {
        Taxonomy::parse("Drink\tPub\nDrink\tBar\nFastFood\tBakery\nSlowFood\tSteakhouse\n").unwrap()
    }

    fn line(user: &str, lat: f64, lon: f64, subcat: &str) -> String {
        format!(
            r#"{{"user":"{user}","venue":"v-{user}","lat":{lat},"lon":{lon},"ts":"2012-04-03T12:30:00","subcat":"{subcat}"}}"#
        )
    }

    fn checkin(user: &str, lat: f64, lon: f64) -> CheckIn {
        CheckIn {
            user_id: user.into(),
            venue_id: "v".into(),
            lat,
            lon,
            timestamp: parse_timestamp("2012-04-03T12:00:00").unwrap(),
            subcategory: 0,
            country: None,
        }
    }

    fn square_geo() -> GeoIndex {
        GeoIndex::parse("AA\t0,0;1,0;1,1;0,1\nBB\t2,0;3,0;3,1;2,1;2,0\n").unwrap()
    }

    #[test]
    fn empty_stream() {
        let c = parse_corpus("", CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.lines, 0);
    }

    #[test]
    fn one_valid_line() {
        let text = line("u1", 0.5, 0.5, "Pub");
        let c = parse_corpus(&text, CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.checkins[0].subcategory, 0);
        assert_eq!(c.checkins[0].timestamp.to_string(), "2012-04-03 12:30:00");
    }

    #[test]
    fn unknown_subcategory_skipped() {
        let mut lines: Vec<String> = (0..9).map(|i| line(&format!("u{i}"), 0.5, 0.5, "Bar")).collect();
        lines.insert(4, line("x", 0.5, 0.5, "Restaurant"));
        let c = parse_corpus(&lines.join("\n"), CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET)
            .unwrap();
        assert_eq!(c.len(), 9);
        assert_eq!(c.skipped_unknown_subcategory, 1);
        assert_eq!(c.lines, 10);
    }

    #[test]
    fn malformed_beyond_budget_reports_line() {
        let mut lines: Vec<String> = (0..10).map(|i| line(&format!("u{i}"), 0.5, 0.5, "Bar")).collect();
        lines[6] = "{not json".into();
        let err = parse_corpus(&lines.join("\n"), CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET)
            .unwrap_err();
        assert!(matches!(err, Error::ErrorBudget { line: 7, .. }), "{err}");
    }

    #[test]
    fn malformed_within_budget_is_skipped() {
        let mut lines: Vec<String> = (0..2000).map(|i| line(&format!("u{i}"), 0.5, 0.5, "Bar")).collect();
        lines[10] = r#"{"user":"a","venue":"b","lat":95.0,"lon":0,"ts":"2012-04-03T10:00:00","subcat":"Bar"}"#.into();
        lines[20] = r#"{"user":"a","venue":"b","lat":5.0,"lon":0,"ts":"yesterday","subcat":"Bar"}"#.into();
        let c = parse_corpus(&lines.join("\n"), CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET)
            .unwrap();
        assert_eq!(c.malformed, 2);
        assert_eq!(c.len(), 1998);
        lines[30] = "garbage".into();
        assert!(parse_corpus(&lines.join("\n"), CorpusFormat::JsonLines, &taxonomy(), DEFAULT_ERROR_BUDGET).is_err());
    }

    #[test]
    fn csv_matches_jsonl() {
        let csv = "user,venue,lat,lon,ts,subcat\nu1,v1,0.5,0.5,2012-04-03T12:30:00,Pub\nu2,v2,0.2,0.1,2012-04-07 09:00:00,Steakhouse\nu3,v3,0.2,0.1,2012-04-07T09:00:00,Nope\n";
        let c = parse_corpus(csv, CorpusFormat::Csv, &taxonomy(), DEFAULT_ERROR_BUDGET).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.skipped_unknown_subcategory, 1);
        assert_eq!(c.checkins[1].subcategory, 3);
        let bad = "user,venue,lat,lon,ts,subcat\nu1,v1,abc,0.5,2012-04-03T12:30:00,Pub\n";
        assert!(matches!(
            parse_corpus(bad, CorpusFormat::Csv, &taxonomy(), DEFAULT_ERROR_BUDGET),
            Err(Error::ErrorBudget { line: 2, .. })
        ));
    }

    #[test]
    fn format_detection() {
        assert_eq!(CorpusFormat::detect(Some(Path::new("a.csv")), "{"), CorpusFormat::Csv);
        assert_eq!(CorpusFormat::detect(None, " {\"user\":1}"), CorpusFormat::JsonLines);
        assert_eq!(CorpusFormat::detect(None, "user,venue"), CorpusFormat::Csv);
    }

    #[test]
    fn point_to_country_cases() {
        let geo = square_geo();
        assert_eq!(geo.point_to_country(0.5, 0.5), Some("AA"));
        assert_eq!(geo.point_to_country(0.5, 2.5), Some("BB"));
        assert_eq!(geo.point_to_country(0.5, 1.5), None);
        assert_eq!(geo.point_to_country(50.0, 50.0), None);
        // edges and vertices
        assert_eq!(geo.point_to_country(0.0, 0.5), Some("AA"));
        assert_eq!(geo.point_to_country(0.5, 1.0), Some("AA"));
        assert_eq!(geo.point_to_country(1.0, 1.0), Some("AA"));
        assert_eq!(geo.point_to_country(0.3, 2.0), Some("BB"));
    }

    #[test]
    fn concave_polygon() {
        // U shape: the notch between x in (1,2), y > 1 is outside.
        let geo = GeoIndex::parse("UU\t0,0;3,0;3,3;2,3;2,1;1,1;1,3;0,3\n").unwrap();
        assert_eq!(geo.point_to_country(2.0, 1.5), None);
        assert_eq!(geo.point_to_country(2.0, 0.5), Some("UU"));
        assert_eq!(geo.point_to_country(0.5, 1.5), Some("UU"));
        assert_eq!(geo.point_to_country(1.0, 1.5), Some("UU"));
    }

    #[test]
    fn geo_parse_errors_and_round_trip() {
        assert!(GeoIndex::parse("AA\t0,0;1,0\n").is_err());
        assert!(GeoIndex::parse("AA 0,0;1,0;1,1\n").is_err());
        assert!(GeoIndex::parse("AA\t0,0;1,x;1,1\n").is_err());
        let geo = square_geo();
        assert_eq!(GeoIndex::parse(&geo.to_text()).unwrap(), geo);
        assert_eq!(geo.countries().collect::<Vec<_>>(), vec!["AA", "BB"]);
    }

    #[test]
    fn home_country_assignment() {
        let mut corpus = CheckInCorpus {
            checkins: vec![
                checkin("a", 0.1, 0.1),
                checkin("a", 0.2, 0.2),
                checkin("a", 0.9, 0.9),
                checkin("m", 0.5, 0.5),
                checkin("m", 0.5, 2.5),
                checkin("o", 0.5, 0.5),
                checkin("o", 40.0, 40.0),
            ],
            lines: 7,
            ..Default::default()
        };
        let (map, report) = assign_home_country(&mut corpus, &square_geo(), &taxonomy());
        assert_eq!(map.get("a").map(String::as_str), Some("AA"));
        assert!(!map.contains_key("m"));
        assert!(!map.contains_key("o"));
        assert_eq!(report.users_total, 3);
        assert_eq!(report.users_discarded_mixed_country, 1);
        assert_eq!(report.users_discarded_unresolved, 1);
        assert!((report.discard_fraction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.per_class[&ClassId::Drink].checkins, 7);
        assert_eq!(report.per_class[&ClassId::Drink].users, 3);
    }

    #[test]
    fn one_percent_discarded() {
        let mut checkins = Vec::new();
        for u in 0..100 {
            let id = format!("user{u:03}");
            checkins.push(checkin(&id, 0.5, 0.5));
            checkins.push(checkin(&id, 0.4, if u == 42 { 2.5 } else { 0.4 }));
        }
        let mut corpus = CheckInCorpus {
            checkins,
            ..Default::default()
        };
        let (map, report) = assign_home_country(&mut corpus, &square_geo(), &taxonomy());
        assert_eq!(map.len(), 99);
        assert_eq!(report.discard_fraction, 0.01);
    }

    #[test]
    fn active_user_threshold() {
        let mut v = Vec::new();
        for _ in 0..7 {
            v.push(checkin("seven", 0.5, 0.5));
        }
        for _ in 0..6 {
            v.push(checkin("six", 0.5, 0.5));
        }
        let kept = filter_active_users(&v, 7).unwrap();
        assert_eq!(kept.len(), 7);
        assert!(kept.iter().all(|c| c.user_id == "seven"));
        assert_eq!(filter_active_users(&v, 1).unwrap(), v);
        assert!(filter_active_users(&v, 0).is_err());
    }

    #[test]
    fn grid_partition_cases() {
        let unit = Area::city("C", BBox::new(0.0, 0.0, 1.0, 1.0));
        let one = grid_partition(&unit, 1, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].bbox().unwrap(), BBox::new(0.0, 0.0, 1.0, 1.0));

        let four = grid_partition(&unit, 2, 2).unwrap();
        assert_eq!(four.len(), 4);
        for cell in &four {
            assert!((cell.bbox().unwrap().area() - 0.25).abs() < 1e-15);
        }
        let holders: Vec<_> = four.iter().filter(|c| c.contains(0.5, 0.5, None)).collect();
        assert_eq!(holders.len(), 1);
        assert_eq!(holders[0].cell_index(), Some(3));

        assert!(grid_partition(&Area::city("D", BBox::new(0.0, 0.0, 0.0, 1.0)), 2, 2).is_err());
        assert!(grid_partition(&Area::country("AA"), 2, 2).is_err());
        assert!(grid_partition(&unit, 0, 2).is_err());
    }

    #[test]
    fn top_cells_ordering() {
        let unit = Area::city("C", BBox::new(0.0, 0.0, 1.0, 1.0));
        let cells = grid_partition(&unit, 2, 2).unwrap();
        // cell 0: 5, cell 1: 3, cell 2: 3, cell 3: 0
        let mut v = Vec::new();
        v.extend((0..5).map(|_| checkin("u", 0.1, 0.1)));
        v.extend((0..3).map(|_| checkin("u", 0.1, 0.9)));
        v.extend((0..3).map(|_| checkin("u", 0.9, 0.1)));
        let top = top_cells(&v, &cells, 2).unwrap();
        assert_eq!(top.iter().map(|(a, n)| (a.cell_index().unwrap(), *n)).collect::<Vec<_>>(), vec![(0, 5), (1, 3)]);
        let all = top_cells(&v, &cells, 3).unwrap();
        assert_eq!(all.len(), 3);
        assert!(top_cells(&v, &cells, 4).is_err());

        let uniform: Vec<CheckIn> = [(0.1, 0.1), (0.1, 0.9), (0.9, 0.1), (0.9, 0.9)]
            .iter()
            .map(|&(lat, lon)| checkin("u", lat, lon))
            .collect();
        let order: Vec<usize> = top_cells(&uniform, &cells, 4)
            .unwrap()
            .iter()
            .map(|(a, _)| a.cell_index().unwrap())
            .collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn city_table_roundtrip() {
        let text = "# cities\nParis\tFR\t2.2,48.8,2.5,48.9\nLyon\tFR\t4.7,45.7,4.9,45.8\n";
        let cities = parse_cities(text).unwrap();
        assert_eq!(cities.len(), 2);
        assert_eq!(cities[1].attributes["country"], "FR");
        assert_eq!(parse_cities(&cities_to_text(&cities)).unwrap(), cities);
        assert!(matches!(parse_cities("A\tFR\t1,2,3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_cities("A\tFR\t1,2,0,3\n"), Err(Error::Parse { .. })));
        assert!(parse_cities("A\tFR\t0,0,1,1\nA\tFR\t0,0,1,1\n").is_err());
    }
}
