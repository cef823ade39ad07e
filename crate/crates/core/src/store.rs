//! Columnar cache of an ingested corpus, so that analysis commands skip
//! parsing and geocoding.

use std::path::Path;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{IngestReport, UserLocationMap};
use crate::model::{Area, CheckIn, Taxonomy};

/// Current on-disk format version.
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Columns {
    users: Vec<String>,
    venues: Vec<String>,
    countries: Vec<String>,
    user: Vec<u32>,
    venue: Vec<u32>,
    country: Vec<u32>,
    lat: Vec<f64>,
    lon: Vec<f64>,
    /// Local wall-clock time as seconds since 1970-01-01T00:00:00.
    ts: Vec<i64>,
    subcategory: Vec<u32>,
}

fn intern(table: &mut Vec<String>, index: &mut std::collections::HashMap<String, u32>, key: &str) -> u32 {
    if let Some(&i) = index.get(key) {
        return i;
    }
    let i = table.len() as u32;
    table.push(key.to_string());
    index.insert(key.to_string(), i);
    i
}

/// Check-ins of users with a home country, plus what analysis needs to
/// interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStore {
    pub version: u32,
    pub taxonomy: Taxonomy,
    /// Minimum check-ins per user applied by the network analysis.
    pub min_checkins: u64,
    /// Country codes in the order the geographic index declares them.
    pub countries: Vec<String>,
    /// Cities for city- and grid-level analysis; may be empty.
    pub cities: Vec<Area>,
    pub homes: UserLocationMap,
    pub report: IngestReport,
    columns: Columns,
}

impl CorpusStore {
    /// Builds a store. Every check-in must carry a country.
    pub fn new(
        taxonomy: Taxonomy,
        min_checkins: u64,
        countries: Vec<String>,
        cities: Vec<Area>,
        homes: UserLocationMap,
        report: IngestReport,
        checkins: &[CheckIn],
    ) -> Result<Self> {
        let mut cols = Columns::default();
        let (mut ui, mut vi, mut ci) = Default::default();
        for c in checkins {
            let country = c
                .country
                .as_deref()
                .ok_or_else(|| Error::invalid(format!("check-in of `{}` has no country", c.user_id)))?;
            cols.user.push(intern(&mut cols.users, &mut ui, &c.user_id));
            cols.venue.push(intern(&mut cols.venues, &mut vi, &c.venue_id));
            cols.country.push(intern(&mut cols.countries, &mut ci, country));
            cols.lat.push(c.lat);
            cols.lon.push(c.lon);
            cols.ts.push(c.timestamp.and_utc().timestamp());
            cols.subcategory.push(c.subcategory as u32);
        }
        Ok(CorpusStore {
            version: STORE_VERSION,
            taxonomy,
            min_checkins,
            countries,
            cities,
            homes,
            report,
            columns: cols,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.user.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.user.is_empty()
    }

    /// Rebuilds the check-in rows.
    pub fn checkins(&self) -> Result<Vec<CheckIn>> {
        let c = &self.columns;
        let n = c.user.len();
        if [c.venue.len(), c.country.len(), c.lat.len(), c.lon.len(), c.ts.len(), c.subcategory.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::invalid("store columns have different lengths"));
        }
        let lookup = |table: &[String], i: u32, what: &str| {
            table
                .get(i as usize)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("store {what} index {i} out of range")))
        };
        (0..n)
            .map(|i| {
                let checkin = CheckIn {
                    user_id: lookup(&c.users, c.user[i], "user")?,
                    venue_id: lookup(&c.venues, c.venue[i], "venue")?,
                    lat: c.lat[i],
                    lon: c.lon[i],
                    timestamp: DateTime::from_timestamp(c.ts[i], 0)
                        .ok_or_else(|| Error::invalid("store timestamp out of range"))?
                        .naive_utc(),
                    subcategory: c.subcategory[i] as usize,
                    country: Some(lookup(&c.countries, c.country[i], "country")?),
                };
                checkin.validate(&self.taxonomy)?;
                Ok(checkin)
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let store: CorpusStore = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if store.version != STORE_VERSION {
            return Err(Error::invalid(format!(
                "store format version {} is not supported (expected {STORE_VERSION})",
                store.version
            )));
        }
        Ok(store)
    }
}
