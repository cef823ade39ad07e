//! Preference vectors: binary per-user profiles and max-normalized per-area
//! count signatures.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::UserLocationMap;
use crate::model::{Area, AreaSignature, CheckIn, FeatureBits, SignatureVariant, Taxonomy, UserProfile};

/// Binary profile of one user. All `checkins` must belong to `user_id`.
pub fn binary_profile(
    user_id: &str,
    home_country: &str,
    checkins: &[CheckIn],
    taxonomy: &Taxonomy,
) -> UserProfile {
    debug_assert!(checkins.iter().all(|c| c.user_id == user_id));
    UserProfile {
        user_id: user_id.to_string(),
        home_country: home_country.to_string(),
        bits: FeatureBits::from_indices(taxonomy.len(), checkins.iter().map(|c| c.subcategory)),
        checkin_count: checkins.len() as u64,
    }
}

/// Intensity variant: how many times the user checked in at each
/// subcategory. Not used by the network analysis, which is binary.
pub fn intensity_profile(checkins: &[CheckIn], taxonomy: &Taxonomy) -> Vec<u64> {
    let mut v = vec![0; taxonomy.len()];
    for c in checkins {
        v[c.subcategory] += 1;
    }
    v
}

/// Binary profiles for every user in `homes`, ordered by user id.
pub fn user_profiles(checkins: &[CheckIn], homes: &UserLocationMap, taxonomy: &Taxonomy) -> Vec<UserProfile> {
    let mut by_user: BTreeMap<&str, Vec<&CheckIn>> = BTreeMap::new();
    for c in checkins {
        if homes.contains_key(&c.user_id) {
            by_user.entry(&c.user_id).or_default().push(c);
        }
    }
    by_user
        .into_iter()
        .map(|(user, cs)| UserProfile {
            user_id: user.to_string(),
            home_country: homes[user].clone(),
            bits: FeatureBits::from_indices(taxonomy.len(), cs.iter().map(|c| c.subcategory)),
            checkin_count: cs.len() as u64,
        })
        .collect()
}

/// Check-in counts per subcategory inside `area`.
pub fn region_counts(checkins: &[CheckIn], area: &Area, taxonomy: &Taxonomy) -> Vec<u64> {
    let mut counts = vec![0; taxonomy.len()];
    for c in checkins.iter().filter(|c| area.contains(c.lat, c.lon, c.country.as_deref())) {
        counts[c.subcategory] += 1;
    }
    counts
}

/// Divides every count by the largest one.
pub fn max_normalize(counts: &[u64]) -> Option<Vec<f64>> {
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    Some(counts.iter().map(|&c| c as f64 / max as f64).collect())
}

/// Spatial signature of an area from its raw counts.
pub fn region_profile(area_id: &str, counts: Vec<u64>) -> Result<AreaSignature> {
    let normalized = max_normalize(&counts).ok_or_else(|| Error::EmptyArea(area_id.to_string()))?;
    Ok(AreaSignature {
        area_id: area_id.to_string(),
        raw_counts: counts,
        normalized,
        variant: SignatureVariant::Spatial,
    })
}

/// Spatial signatures for several areas, skipping those without check-ins.
/// Returns the signatures and the ids of skipped areas.
pub fn region_profiles(
    checkins: &[CheckIn],
    areas: &[Area],
    taxonomy: &Taxonomy,
) -> (Vec<AreaSignature>, Vec<String>) {
    let mut sigs = Vec::new();
    let mut empty = Vec::new();
    for area in areas {
        match region_profile(&area.id, region_counts(checkins, area, taxonomy)) {
            Ok(s) => sigs.push(s),
            Err(_) => empty.push(area.id.clone()),
        }
    }
    (sigs, empty)
}

/// Writes profiles as CSV: `user,home_country,checkins,<subcategory names…>`.
pub fn write_profiles_csv<W: Write>(out: W, profiles: &[UserProfile], taxonomy: &Taxonomy) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["user".to_string(), "home_country".into(), "checkins".into()];
    header.extend(taxonomy.names().iter().cloned());
    w.write_record(&header)?;
    for p in profiles {
        let mut row = vec![p.user_id.clone(), p.home_country.clone(), p.checkin_count.to_string()];
        row.extend(p.bits.to_dense().iter().map(|b| b.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes signatures as CSV with one column per feature. `labels` names the
/// feature columns and must match the signature length.
pub fn write_signatures_csv<W: Write>(out: W, signatures: &[AreaSignature], labels: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["area".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for s in signatures {
        if s.normalized.len() != labels.len() {
            return Err(Error::invalid("signature length does not match header"));
        }
        let mut row = vec![s.area_id.clone()];
        row.extend(s.normalized.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BBox;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn taxonomy() -> Taxonomy {
        Taxonomy::parse("Drink\tPub\nDrink\tBar\nFastFood\tBakery\n").unwrap()
    }

    fn at(sub: usize, lat: f64, lon: f64) -> CheckIn {
        CheckIn {
            user_id: "u".into(),
            venue_id: "v".into(),
            lat,
            lon,
            timestamp: NaiveDate::from_ymd_opt(2012, 4, 3).unwrap().and_hms_opt(12, 0, 0).unwrap(),
            subcategory: sub,
            country: Some("AA".into()),
        }
    }

    #[test]
    fn binary_profile_cases() {
        let t = taxonomy();
        let one = binary_profile("u", "AA", &[at(0, 0.0, 0.0)], &t);
        assert_eq!(one.bits.to_dense(), vec![1, 0, 0]);
        assert_eq!(one.checkin_count, 1);

        let five: Vec<_> = (0..5).map(|_| at(0, 0.0, 0.0)).collect();
        let p5 = binary_profile("u", "AA", &five, &t);
        assert_eq!(p5.bits, one.bits);
        assert_eq!(p5.checkin_count, 5);

        let mixed = binary_profile("u", "AA", &[at(0, 0.0, 0.0), at(2, 0.0, 0.0), at(0, 0.0, 0.0)], &t);
        assert_eq!(mixed.bits.count_ones(), 2);
        assert_eq!(intensity_profile(&[at(0, 0.0, 0.0), at(2, 0.0, 0.0), at(0, 0.0, 0.0)], &t), vec![2, 0, 1]);
    }

    #[test]
    fn region_counts_cases() {
        let t = taxonomy();
        let area = Area::city("C", BBox::new(0.0, 0.0, 1.0, 1.0));
        assert_eq!(region_counts(&[], &area, &t), vec![0, 0, 0]);
        let v = vec![at(1, 0.5, 0.5), at(1, 0.2, 0.2), at(1, 0.9, 0.1), at(1, 5.0, 5.0)];
        assert_eq!(region_counts(&v, &area, &t), vec![0, 3, 0]);
        assert_eq!(region_counts(&v, &Area::country("AA"), &t), vec![0, 4, 0]);
    }

    #[test]
    fn grid_counts_add_up_to_city() {
        let t = taxonomy();
        let city = Area::city("C", BBox::new(0.0, 0.0, 1.0, 1.0));
        let cells = crate::ingest::grid_partition(&city, 3, 2).unwrap();
        let v: Vec<CheckIn> = (0..50)
            .map(|i| at(i % 3, (i as f64 * 0.37) % 1.0, (i as f64 * 0.61) % 1.0))
            .chain([at(0, 1.0, 1.0), at(2, 0.0, 1.0), at(1, 0.5, 0.5)])
            .collect();
        let total = region_counts(&v, &city, &t);
        let mut sum = vec![0; 3];
        for cell in &cells {
            for (s, c) in sum.iter_mut().zip(region_counts(&v, cell, &t)) {
                *s += c;
            }
        }
        assert_eq!(sum, total);
    }

    #[test]
    fn region_profile_cases() {
        assert_eq!(region_profile("a", vec![4, 2, 0]).unwrap().normalized, vec![1.0, 0.5, 0.0]);
        assert_eq!(region_profile("a", vec![7]).unwrap().normalized, vec![1.0]);
        assert_eq!(region_profile("a", vec![3, 3]).unwrap().normalized, vec![1.0, 1.0]);
        assert!(matches!(region_profile("z", vec![0, 0]), Err(Error::EmptyArea(id)) if id == "z"));
    }

    #[test]
    fn csv_headers() {
        let t = taxonomy();
        let p = binary_profile("u", "AA", &[at(1, 0.0, 0.0)], &t);
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &[p], &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "user,home_country,checkins,Pub,Bar,Bakery\nu,AA,1,0,1,0\n");
    }

    proptest! {
        #[test]
        fn scale_invariance(counts in prop::collection::vec(0u64..1000, 1..50), lambda in 1u64..1000) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let base = region_profile("a", counts.clone()).unwrap();
            let scaled = region_profile("a", counts.iter().map(|c| c * lambda).collect()).unwrap();
            prop_assert_eq!(base.normalized, scaled.normalized);
        }

        #[test]
        fn max_is_one(counts in prop::collection::vec(0u64..1000, 1..50)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let s = region_profile("a", counts).unwrap();
            prop_assert_eq!(s.normalized.iter().cloned().fold(f64::MIN, f64::max), 1.0);
            prop_assert!(s.normalized.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn binary_profile_order_and_duplicates(subs in prop::collection::vec(0usize..3, 1..20), seed in 0usize..100) {
            let t = taxonomy();
            let v: Vec<CheckIn> = subs.iter().map(|&s| at(s, 0.0, 0.0)).collect();
            let mut shuffled = v.clone();
            shuffled.rotate_left(seed % v.len());
            shuffled.extend(v.iter().take(seed % 4).cloned());
            prop_assert_eq!(binary_profile("u", "AA", &v, &t).bits, binary_profile("u", "AA", &shuffled, &t).bits);
        }
    }
}
