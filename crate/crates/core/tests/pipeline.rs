use culturemap::boundaries::{fit_pca, kmeans_cosine, select_components, KMeansOptions};
use culturemap::ingest::{assign_home_country, grid_partition, parse_corpus, retain_assigned, CorpusFormat};
use culturemap::model::{Area, CheckIn, Taxonomy};
use culturemap::prefs::{region_counts, user_profiles};
use culturemap::signatures::{spatiotemporal_vector, DayPeriods};
use culturemap::simnet::{build_network, component_sizes};
use culturemap::synth::{adjusted_rand_index_by_id, generate_corpus, SynthSpec};

fn taxonomy() -> Taxonomy {
    Taxonomy::parse(include_str!("../../../data/taxonomy_food_drink.tsv")).unwrap()
}

struct World {
    taxonomy: Taxonomy,
    checkins: Vec<CheckIn>,
    homes: culturemap::ingest::UserLocationMap,
    cities: Vec<Area>,
    city_labels: std::collections::BTreeMap<String, String>,
    user_labels: std::collections::BTreeMap<String, String>,
}

fn world(countries: usize, users: usize, cities: usize, seed: u64) -> World {
    let taxonomy = taxonomy();
    let spec = SynthSpec::planted(&taxonomy, countries, users, cities, seed).unwrap();
    let out = generate_corpus(&spec, &taxonomy, seed).unwrap();
    let mut corpus = parse_corpus(&out.corpus, CorpusFormat::JsonLines, &taxonomy, 0.0).unwrap();
    let (homes, report) = assign_home_country(&mut corpus, &out.geo, &taxonomy);
    assert_eq!(report.malformed_lines, 0);
    World {
        checkins: retain_assigned(corpus.checkins, &homes),
        taxonomy,
        homes,
        cities: out.cities,
        city_labels: out.city_labels,
        user_labels: out.user_labels,
    }
}

#[test]
fn homes_match_ground_truth() {
    let w = world(3, 50, 2, 11);
    assert_eq!(w.homes.len(), 150);
    for (user, country) in &w.homes {
        assert_eq!(&w.user_labels[user], country);
    }
}

#[test]
fn grid_cells_partition_city_counts() {
    let w = world(3, 40, 2, 5);
    for city in &w.cities {
        let total = region_counts(&w.checkins, city, &w.taxonomy);
        for (rows, cols) in [(1, 1), (2, 2), (3, 5)] {
            let cells = grid_partition(city, rows, cols).unwrap();
            let mut summed = vec![0u64; w.taxonomy.len()];
            for cell in &cells {
                for (s, c) in summed.iter_mut().zip(region_counts(&w.checkins, cell, &w.taxonomy)) {
                    *s += c;
                }
            }
            assert_eq!(summed, total, "{} {rows}x{cols}", city.id);
        }
    }
}

#[test]
fn network_components_follow_countries() {
    let w = world(4, 30, 1, 2);
    let profiles = user_profiles(&w.checkins, &w.homes, &w.taxonomy);
    let mut previous = f64::INFINITY;
    for s in [65.0, 80.0, 100.0] {
        let net = build_network(&profiles, s).unwrap();
        let summary = component_sizes(&net);
        assert!(summary.largest_fraction <= previous);
        previous = summary.largest_fraction;
        // every edge stays inside one planted country
        for &(a, b) in &net.edges {
            assert_eq!(w.homes[&net.nodes[a].user_id], w.homes[&net.nodes[b].user_id]);
        }
    }
}

#[test]
fn city_clusters_recover_countries() {
    let w = world(4, 150, 3, 9);
    let periods = DayPeriods::default();
    let (ids, rows): (Vec<String>, Vec<Vec<f64>>) = w
        .cities
        .iter()
        .map(|c| {
            let sig = spatiotemporal_vector(&w.checkins, c, &w.taxonomy, &periods).unwrap();
            (c.id.clone(), sig.normalized)
        })
        .unzip();
    let pca = fit_pca(&rows).unwrap();
    let p = select_components(&pca, 1.0);
    let scores = pca.transform(&rows, p).unwrap();
    let report = kmeans_cosine(&ids, &scores, 4, 0, KMeansOptions::default()).unwrap();
    let ari = adjusted_rand_index_by_id(&report.assignment_map(), &w.city_labels).unwrap();
    assert_eq!(ari, 1.0);
}
