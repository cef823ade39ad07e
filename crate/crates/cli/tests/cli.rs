use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_culturemap");

fn taxonomy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/taxonomy_food_drink.tsv")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn checkin(user: &str, lat: f64, lon: f64, day: u32, hour: u32, subcat: &str) -> String {
    format!(
        r#"{{"user":"{user}","venue":"v-{subcat}","lat":{lat},"lon":{lon},"ts":"2012-04-{day:02}T{hour:02}:15:00","subcat":"{subcat}"}}"#
    )
}

const GEO: &str = "AA\t0,0;10,0;10,10;0,10\nBB\t20,0;30,0;30,10;20,10\n";

fn write_fixture(dir: &Path, corpus: &str) {
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();
    fs::write(dir.join("geo.tsv"), GEO).unwrap();
}

fn ingest_args(tax: &Path) -> Vec<String> {
    ["ingest", "--corpus", "corpus.jsonl", "--geo", "geo.tsv", "--taxonomy"]
        .iter()
        .map(|s| s.to_string())
        .chain([tax.display().to_string()])
        .collect()
}

fn ingest(dir: &Path, extra: &[&str]) -> Output {
    let tax = taxonomy();
    let mut args = ingest_args(&tax);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(dir, &refs)
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &[]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["cluster", "--k", "0"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["simnet", "--thresholds", "65,120"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["signatures", "--grid", "3by3"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_corpus_exits_2_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for i in 0..20 {
        corpus.push_str(&checkin(&format!("u{i}"), 5.0, 5.0, 3, 12, "Pub"));
        corpus.push('\n');
    }
    corpus.push_str("{\"user\": \"broken\"\n");
    write_fixture(tmp.path(), &corpus);
    let out = ingest(tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 21"), "{err}");

    let out = run(tmp.path(), &["simnet", "--store", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_reports_discard_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for u in 0..100 {
        for k in 0..3 {
            // user 0 visits the second country once
            let lon = if u == 0 && k == 2 { 25.0 } else { 5.0 };
            writeln!(corpus, "{}", checkin(&format!("u{u:03}"), 5.0, lon, 3, 12, "Bar")).unwrap();
        }
    }
    write_fixture(tmp.path(), &corpus);
    ok(tmp.path(), &ingest_args(&taxonomy()).iter().map(String::as_str).collect::<Vec<_>>());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/ingest_report.json")).unwrap()).unwrap();
    assert_eq!(report["users_total"], 100);
    assert_eq!(report["users_discarded_mixed_country"], 1);
    assert_eq!(report["discard_fraction"], 0.01);
    assert_eq!(report["total_checkins"], 300);
}

#[test]
fn identical_users_form_one_component() {
    let tmp = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for u in ["a", "b", "c"] {
        for (i, sub) in ["Pub", "Bar", "Bakery", "Diner", "Steakhouse", "Pub", "Bar"].iter().enumerate() {
            writeln!(corpus, "{}", checkin(u, 5.0, 5.0, 3, 10 + i as u32, sub)).unwrap();
        }
    }
    // too few check-ins to enter the network
    writeln!(corpus, "{}", checkin("d", 5.0, 5.0, 3, 10, "Pub")).unwrap();
    write_fixture(tmp.path(), &corpus);
    ok(tmp.path(), &ingest_args(&taxonomy()).iter().map(String::as_str).collect::<Vec<_>>());
    ok(tmp.path(), &["simnet"]);
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/simnet/metrics.json")).unwrap()).unwrap();
    let rows = metrics.as_array().unwrap();
    let thresholds: Vec<f64> = rows.iter().map(|m| m["threshold"].as_f64().unwrap()).collect();
    assert_eq!(thresholds, vec![65.0, 70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0]);
    let last = &rows[7];
    assert_eq!(last["population"], 3);
    assert_eq!(last["largest_component"], 3);
    assert_eq!(last["second_component"], 0);
    let edges = fs::read_to_string(tmp.path().join("out/simnet/edges_s100.tsv")).unwrap();
    assert_eq!(edges, "a\tb\na\tc\nb\tc\n");
    let csv = fs::read_to_string(tmp.path().join("out/simnet/metrics.csv")).unwrap();
    assert!(csv.starts_with("threshold,population,nodes,edges,"));
    assert_eq!(csv.lines().count(), 9);
}

fn two_country_fixture(dir: &Path) {
    let mut corpus = String::new();
    let plan: [(&str, f64, &[&str]); 2] = [
        ("a", 5.0, &["Pub", "Pub", "Bar", "Bakery", "Steakhouse", "Diner"]),
        ("b", 25.0, &["Pub", "Bakery", "Bakery", "Bakery", "Diner", "Wine Bar"]),
    ];
    for (user, lon, subs) in plan {
        for (i, s) in subs.iter().enumerate() {
            // spread over the city so every grid cell gets something
            let lat = 1.0 + (i % 2) as f64 * 2.0;
            let dx = (i / 2 % 2) as f64 * 2.0;
            writeln!(corpus, "{}", checkin(user, lat, lon - 1.0 + dx, 2 + i as u32, 9 + i as u32, s)).unwrap();
        }
    }
    write_fixture(dir, &corpus);
    fs::write(dir.join("cities.tsv"), "Alpha\tAA\t3,0,7,4\nBeta\tBB\t23,0,27,4\n").unwrap();
}

#[test]
fn signatures_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    two_country_fixture(tmp.path());
    let out = ingest(tmp.path(), &["--cities", "cities.tsv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    ok(tmp.path(), &["signatures", "--level", "country"]);
    let m = fs::read_to_string(tmp.path().join("out/signatures/correlation_country_all.csv")).unwrap();
    let rows: Vec<Vec<&str>> = m.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], vec!["area", "AA", "BB"]);
    assert_eq!(rows[1][1], "1");
    assert_eq!(rows[2][2], "1");
    assert_eq!(rows[1][2], rows[2][1]);

    let entropy = fs::read_to_string(tmp.path().join("out/signatures/entropy_country.csv")).unwrap();
    assert!(entropy.starts_with("class,level,mean,std,subcategories\n"), "{entropy}");

    ok(tmp.path(), &["signatures", "--level", "grid", "--grid", "2x2", "--scope", "drink"]);
    let spatial = fs::read_to_string(tmp.path().join("out/signatures/spatial_grid.csv")).unwrap();
    let ids: Vec<&str> = spatial.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, vec!["Alpha-0", "Alpha-1", "Alpha-2", "Alpha-3", "Beta-0", "Beta-1", "Beta-2", "Beta-3"]);
    assert!(tmp.path().join("out/signatures/correlation_grid_drink.csv").exists());
    let temporal = fs::read_to_string(tmp.path().join("out/signatures/temporal_grid.csv")).unwrap();
    assert!(temporal.starts_with("area,class,day_group,h00,"));

    let out = run(tmp.path(), &["signatures", "--level", "grid", "--top-cells", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn city_level_needs_cities() {
    let tmp = tempfile::tempdir().unwrap();
    two_country_fixture(tmp.path());
    ok(tmp.path(), &ingest_args(&taxonomy()).iter().map(String::as_str).collect::<Vec<_>>());
    let out = run(tmp.path(), &["signatures", "--level", "city"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--cities"));
}

#[test]
fn identical_areas_are_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = [checkin("a", 5.0, 5.0, 3, 12, "Pub"), checkin("b", 5.0, 25.0, 3, 12, "Pub")].join("\n");
    write_fixture(tmp.path(), &corpus);
    ok(tmp.path(), &ingest_args(&taxonomy()).iter().map(String::as_str).collect::<Vec<_>>());
    let out = run(tmp.path(), &["cluster", "--k", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_cluster_and_survey() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let tax = taxonomy();
    let tax = tax.to_str().unwrap();
    ok(dir, &["synth", "--planted", "5", "--users", "60", "--cities", "2", "--taxonomy", tax, "--seed", "4", "--out-dir", "syn"]);
    for f in ["corpus.jsonl", "geo.tsv", "cities.tsv", "labels.csv", "manifest.json", "spec.toml"] {
        assert!(dir.join("syn").join(f).exists(), "{f}");
    }
    ok(dir, &[
        "ingest", "--corpus", "syn/corpus.jsonl", "--geo", "syn/geo.tsv", "--cities", "syn/cities.tsv", "--taxonomy", tax,
    ]);

    // default k at city level is 4
    ok(dir, &["cluster", "--level", "city"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/cluster/cluster_city.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["k"], 4);
    assert_eq!(report["report"]["assignments"].as_array().unwrap().len(), 10);
    let scores = fs::read_to_string(dir.join("out/cluster/pca_scores_city.csv")).unwrap();
    assert!(scores.starts_with("area,country,cluster,pc1"));

    // country level defaults to k = 7, more than the 5 countries
    let out = run(dir, &["cluster"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.join("wvs.csv"), "country,trad_secular,surv_selfexpr\nC0,1,0\nC1,0,1\nC2,-1,0.2\nC3,0.5,-1\nC4,-0.4,-0.7\n").unwrap();
    ok(dir, &["survey", "--survey", "wvs.csv", "--p-method", "exact"]);
    let table = fs::read_to_string(dir.join("out/survey/comparison.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "country,dataset1_rho,dataset1_p,dataset2_rho,dataset2_p");
    assert_eq!(table.lines().count(), 6);
    ok(dir, &["survey", "--survey", "wvs.csv", "--dataset", "ffood-weekend"]);
    let table = fs::read_to_string(dir.join("out/survey/comparison.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "country,dataset2_rho,dataset2_p");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let tax = taxonomy();
    let tax = tax.to_str().unwrap();
    ok(dir, &["synth", "--planted", "4", "--users", "40", "--taxonomy", tax, "--out-dir", "syn"]);
    ok(dir, &["ingest", "--corpus", "syn/corpus.jsonl", "--geo", "syn/geo.tsv", "--taxonomy", tax]);
    ok(dir, &["cluster", "--k", "2", "--seed", "3"]);
    let first = fs::read(dir.join("out/cluster/cluster_country.json")).unwrap();
    ok(dir, &["cluster", "--k", "2", "--seed", "3"]);
    assert_eq!(fs::read(dir.join("out/cluster/cluster_country.json")).unwrap(), first);
}
