//! Synthetic check-in corpora with planted country cultures, and the
//! adjusted Rand index for scoring cluster recovery against them.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! seed = 7
//! grid = [2, 2]
//!
//! [[country]]
//! code = "AA"
//! bbox = [0.0, 0.0, 8.0, 8.0]      # min_lon, min_lat, max_lon, max_lat
//! users = 100
//! checkins = [7, 20]               # per user, inclusive range
//! cities = 3
//! background = 0.05                # weight of every subcategory not listed
//! weekend_share = 0.3
//! travelers = 1                    # users with one check-in in the next country
//! weights = { "Pub" = 4.0, "Bar" = 2.0 }
//! hours = { "drink.weekend" = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 4, 4, 4, 4, 2, 1] }
//! ```
//!
//! `hours` keys are `<class>.<weekday|weekend>`; missing profiles are uniform.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{cities_to_text, GeoIndex};
use crate::model::{Area, BBox, ClassId, Taxonomy};
use crate::signatures::DayGroup;

fn default_checkins() -> [u32; 2] {
    [7, 20]
}

fn default_cities() -> usize {
    1
}

fn default_weekend_share() -> f64 {
    2.0 / 7.0
}

fn default_grid() -> [usize; 2] {
    [2, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountrySpec {
    pub code: String,
    pub bbox: [f64; 4],
    pub users: usize,
    #[serde(default = "default_checkins")]
    pub checkins: [u32; 2],
    #[serde(default = "default_cities")]
    pub cities: usize,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub hours: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_weekend_share")]
    pub weekend_share: f64,
    #[serde(default)]
    pub travelers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default)]
    pub seed: u64,
    /// Grid laid over each city by downstream analysis; recorded in the
    /// manifest.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(rename = "country")]
    pub countries: Vec<CountrySpec>,
}

impl SynthSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("synth spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SynthSpec::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// `n` countries side by side, each dominated by its own contiguous block
    /// of subcategories and by its own hour of peak activity.
    pub fn planted(taxonomy: &Taxonomy, n: usize, users: usize, cities: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > taxonomy.len() {
            return Err(Error::invalid(format!("cannot plant {n} cultures over {} subcategories", taxonomy.len())));
        }
        let block = taxonomy.len() / n;
        let countries = (0..n)
            .map(|i| {
                let end = if i + 1 == n { taxonomy.len() } else { (i + 1) * block };
                let weights = (i * block..end).map(|s| (taxonomy.name(s).to_string(), 1.0)).collect();
                let peak = (8 + 2 * i) % 24;
                let profile: Vec<f64> = (0..24)
                    .map(|h| {
                        let d = (h as i64 - peak as i64).rem_euclid(24).min((peak as i64 - h as i64).rem_euclid(24));
                        if d <= 2 { 4.0 } else { 1.0 }
                    })
                    .collect();
                let hours = taxonomy
                    .classes()
                    .flat_map(|(c, _)| DayGroup::ALL.map(|g| format!("{}.{}", class_key(c), g.as_str())))
                    .map(|k| (k, profile.clone()))
                    .collect();
                let lon = -90.0 + 12.0 * i as f64;
                CountrySpec {
                    code: format!("C{i}"),
                    bbox: [lon, 0.0, lon + 10.0, 10.0],
                    users,
                    checkins: default_checkins(),
                    cities,
                    background: 0.02,
                    weights,
                    hours,
                    weekend_share: default_weekend_share(),
                    travelers: 0,
                }
            })
            .collect();
        Ok(SynthSpec {
            seed,
            grid: default_grid(),
            countries,
        })
    }
}

fn class_key(c: ClassId) -> String {
    c.as_str().to_ascii_lowercase()
}

/// Everything a generator run writes.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// JSON-lines corpus, one check-in per line, ordered by user id.
    pub corpus: String,
    pub geo: GeoIndex,
    /// Cities with their `country` attribute.
    pub cities: Vec<Area>,
    /// Ground truth: user id → country code.
    pub user_labels: BTreeMap<String, String>,
    /// Ground truth: city id → country code.
    pub city_labels: BTreeMap<String, String>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub grid: [usize; 2],
    pub countries: usize,
    pub users: usize,
    pub travelers: usize,
    pub checkins: usize,
}

impl SynthOutput {
    /// Writes `corpus.jsonl`, `geo.tsv`, `cities.tsv`, `labels.csv` and
    /// `manifest.json` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("corpus.jsonl"), &self.corpus)?;
        std::fs::write(dir.join("geo.tsv"), self.geo.to_text())?;
        std::fs::write(dir.join("cities.tsv"), cities_to_text(&self.cities))?;
        let mut labels = String::from("kind,id,label\n");
        for (kind, map) in [("user", &self.user_labels), ("city", &self.city_labels)] {
            for (id, label) in map {
                labels.push_str(&format!("{kind},{id},{label}\n"));
            }
        }
        std::fs::write(dir.join("labels.csv"), labels)?;
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(())
    }
}

struct Country {
    code: String,
    cities: Vec<(String, BBox)>,
    subcategories: WeightedIndex<f64>,
    hours: BTreeMap<(ClassId, DayGroup), WeightedIndex<f64>>,
    weekend_share: f64,
    checkins: [u32; 2],
}

fn weighted(weights: &[f64], what: &str) -> Result<WeightedIndex<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid(format!("{what}: weights must be finite and nonnegative")));
    }
    WeightedIndex::new(weights).map_err(|_| Error::invalid(format!("{what}: needs at least one positive weight")))
}

fn city_boxes(code: &str, bbox: BBox, n: usize) -> Vec<(String, BBox)> {
    let w = bbox.width() / n as f64;
    (0..n)
        .map(|j| {
            let lo = bbox.min_lon + w * j as f64;
            let (mx, my) = (w * 0.2, bbox.height() * 0.2);
            (
                format!("{code}-c{j}"),
                BBox::new(lo + mx, bbox.min_lat + my, lo + w - mx, bbox.max_lat - my),
            )
        })
        .collect()
}

fn compile(spec: &SynthSpec, taxonomy: &Taxonomy) -> Result<Vec<Country>> {
    if spec.countries.is_empty() {
        return Err(Error::invalid("synth spec lists no countries"));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for c in &spec.countries {
        let what = |field: &str| format!("country `{}` {field}", c.code);
        if c.code.is_empty() || !seen.insert(c.code.as_str()) {
            return Err(Error::invalid(format!("country code `{}` is empty or repeated", c.code)));
        }
        let [min_lon, min_lat, max_lon, max_lat] = c.bbox;
        if !(min_lon < max_lon && min_lat < max_lat && (-180.0..=180.0).contains(&min_lon) && (-180.0..=180.0).contains(&max_lon) && (-90.0..=90.0).contains(&min_lat) && (-90.0..=90.0).contains(&max_lat)) {
            return Err(Error::invalid(what("bbox is empty or out of range")));
        }
        if c.cities == 0 {
            return Err(Error::invalid(what("needs at least one city")));
        }
        if c.checkins[0] == 0 || c.checkins[0] > c.checkins[1] {
            return Err(Error::invalid(what("checkins range must be 1 ≤ min ≤ max")));
        }
        if !(0.0..=1.0).contains(&c.weekend_share) {
            return Err(Error::invalid(what("weekend_share must lie in [0, 1]")));
        }
        if c.travelers > 0 && spec.countries.len() < 2 {
            return Err(Error::invalid(what("travelers need a second country")));
        }
        let mut weights = vec![c.background; taxonomy.len()];
        for (name, w) in &c.weights {
            let i = taxonomy
                .index_of(name)
                .ok_or_else(|| Error::invalid(what(&format!("weights name unknown subcategory `{name}`"))))?;
            weights[i] = *w;
        }
        let subcategories = weighted(&weights, &what("weights"))?;
        let mut hours = BTreeMap::new();
        for (class, _) in taxonomy.classes() {
            for g in DayGroup::ALL {
                let key = format!("{}.{}", class_key(class), g.as_str());
                let profile = c.hours.get(&key).cloned().unwrap_or_else(|| vec![1.0; 24]);
                if profile.len() != 24 {
                    return Err(Error::invalid(what(&format!("hours `{key}` needs 24 values"))));
                }
                hours.insert((class, g), weighted(&profile, &what(&format!("hours `{key}`")))?);
            }
        }
        for key in c.hours.keys() {
            let known = taxonomy
                .classes()
                .any(|(class, _)| DayGroup::ALL.iter().any(|g| *key == format!("{}.{}", class_key(class), g.as_str())));
            if !known {
                return Err(Error::invalid(what(&format!("hours key `{key}` is not <class>.<weekday|weekend>"))));
            }
        }
        out.push(Country {
            code: c.code.clone(),
            cities: city_boxes(&c.code, BBox::new(min_lon, min_lat, max_lon, max_lat), c.cities),
            subcategories,
            hours,
            weekend_share: c.weekend_share,
            checkins: c.checkins,
        });
    }
    for (i, a) in out.iter().enumerate() {
        let ba = &spec.countries[i].bbox;
        for (j, b) in spec.countries.iter().enumerate().skip(i + 1) {
            let bb = &b.bbox;
            if ba[0] <= bb[2] && bb[0] <= ba[2] && ba[1] <= bb[3] && bb[1] <= ba[3] {
                return Err(Error::invalid(format!("countries `{}` and `{}` overlap", a.code, out[j].code)));
            }
        }
    }
    Ok(out)
}

/// Monday of the synthetic week.
fn week_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2012, 4, 2).expect("valid date").and_hms_opt(0, 0, 0).expect("valid time")
}

fn point_in(rng: &mut ChaCha8Rng, b: &BBox) -> (f64, f64) {
    // keep clear of the edges so rounding to 6 decimals stays inside
    let lat = b.min_lat + b.height() * rng.random_range(0.01..0.99);
    let lon = b.min_lon + b.width() * rng.random_range(0.01..0.99);
    (lat, lon)
}

fn checkin_line(
    rng: &mut ChaCha8Rng,
    taxonomy: &Taxonomy,
    country: &Country,
    user: &str,
    city: &BBox,
) -> String {
    let sub = country.subcategories.sample(rng);
    let group = if rng.random::<f64>() < country.weekend_share {
        DayGroup::Weekend
    } else {
        DayGroup::Weekday
    };
    let day = match group {
        DayGroup::Weekday => rng.random_range(0..5),
        DayGroup::Weekend => rng.random_range(5..7),
    };
    let hour = country.hours[&(taxonomy.class_of(sub), group)].sample(rng) as i64;
    let ts = week_start()
        + Duration::days(day)
        + Duration::hours(hour)
        + Duration::minutes(rng.random_range(0..60))
        + Duration::seconds(rng.random_range(0..60));
    let (lat, lon) = point_in(rng, city);
    let venue = format!("{}-{}-{}", country.code, sub, rng.random_range(0..20u32));
    serde_json::json!({
        "user": user,
        "venue": venue,
        "lat": format!("{lat:.6}").parse::<f64>().expect("formatted float"),
        "lon": format!("{lon:.6}").parse::<f64>().expect("formatted float"),
        "ts": ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
        "subcat": taxonomy.name(sub),
    })
    .to_string()
}

/// Generates a corpus from `spec` with `seed` (which overrides `spec.seed`).
///
/// Every user draws from their own ChaCha stream, indexed by the user's
/// position in the spec, so output does not depend on thread scheduling.
pub fn generate_corpus(spec: &SynthSpec, taxonomy: &Taxonomy, seed: u64) -> Result<SynthOutput> {
    let countries = compile(spec, taxonomy)?;
    struct Job {
        country: usize,
        user: String,
        stream: u64,
        traveler: bool,
    }
    let mut jobs = Vec::new();
    for (ci, c) in spec.countries.iter().enumerate() {
        for u in 0..c.users + c.travelers {
            jobs.push(Job {
                country: ci,
                user: format!("{}-u{u:05}", c.code),
                stream: jobs.len() as u64,
                traveler: u >= c.users,
            });
        }
    }
    let lines: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|job| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(job.stream);
            let c = &countries[job.country];
            let n = rng.random_range(c.checkins[0]..=c.checkins[1]) as usize;
            let (_, home) = &c.cities[rng.random_range(0..c.cities.len())];
            let mut out: Vec<String> = (0..n).map(|_| checkin_line(&mut rng, taxonomy, c, &job.user, home)).collect();
            if job.traveler {
                let abroad = &countries[(job.country + 1) % countries.len()];
                out.push(checkin_line(&mut rng, taxonomy, c, &job.user, &abroad.cities[0].1));
            }
            out
        })
        .collect();

    let mut geo = GeoIndex::default();
    let mut cities = Vec::new();
    let mut city_labels = BTreeMap::new();
    for (spec_c, c) in spec.countries.iter().zip(&countries) {
        let [a, b, x, y] = spec_c.bbox;
        geo.add_ring(&c.code, vec![(a, b), (x, b), (x, y), (a, y)]);
        for (id, bbox) in &c.cities {
            cities.push(Area::city(id.clone(), *bbox).with_attribute("country", c.code.clone()));
            city_labels.insert(id.clone(), c.code.clone());
        }
    }
    let user_labels = jobs
        .iter()
        .map(|j| (j.user.clone(), countries[j.country].code.clone()))
        .collect();
    let checkins = lines.iter().map(Vec::len).sum();
    let mut corpus = String::new();
    for l in lines.iter().flatten() {
        corpus.push_str(l);
        corpus.push('\n');
    }
    Ok(SynthOutput {
        corpus,
        geo,
        cities,
        user_labels,
        city_labels,
        manifest: Manifest {
            seed,
            grid: spec.grid,
            countries: countries.len(),
            users: jobs.len(),
            travelers: jobs.iter().filter(|j| j.traveler).count(),
            checkins,
        },
    })
}

fn comb2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index of two labelings of the same items.
///
/// Returns 1 when both partitions are trivial in the same way (one cluster
/// each, or all singletons), where the usual formula is 0/0.
pub fn adjusted_rand_index<A: Ord, B: Ord>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("labelings cover different numbers of items"));
    }
    let mut table: BTreeMap<(&A, &B), u64> = BTreeMap::new();
    let mut rows: BTreeMap<&A, u64> = BTreeMap::new();
    let mut cols: BTreeMap<&B, u64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| comb2(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| comb2(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| comb2(n)).sum();
    let total = comb2(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    // (index − expected) / (max − expected), scaled by `total` to stay integral
    let num = index * total - sum_a * sum_b;
    let den = (sum_a + sum_b) / 2.0 * total - sum_a * sum_b;
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(num / den)
}

/// [`adjusted_rand_index`] over labelings keyed by item id. Both maps must
/// hold the same ids.
pub fn adjusted_rand_index_by_id<A: Ord, B: Ord>(a: &BTreeMap<String, A>, b: &BTreeMap<String, B>) -> Result<f64> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(Error::invalid("labelings cover different items"));
    }
    let la: Vec<&A> = a.values().collect();
    let lb: Vec<&B> = b.values().collect();
    adjusted_rand_index(&la, &lb)
}
