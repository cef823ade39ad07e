//! Command-line front end: `ingest` builds a corpus store, the analysis
//! commands read it and write CSV/JSON reports under `--out-dir`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use culturemap::boundaries::{
    compare_with_survey, default_k, fit_pca, kmeans_cosine, parse_survey_csv, select_components,
    write_comparison_csv, ClusterReport, FeatureSubset, KMeansOptions, PValueMethod, RankComparison,
};
use culturemap::ingest::{
    assign_home_country, filter_active_users, grid_partition, load_cities, load_corpus, retain_assigned,
    top_cells, GeoIndex, DEFAULT_ERROR_BUDGET, DEFAULT_MIN_CHECKINS,
};
use culturemap::model::{Area, AreaKind, AreaSignature, CheckIn, Taxonomy};
use culturemap::prefs::{region_profiles, user_profiles, write_profiles_csv, write_signatures_csv};
use culturemap::signatures::{
    correlation_matrix, entropy_summary, spatiotemporal_labels, spatiotemporal_vector, temporal_series,
    write_temporal_csv, DayGroup, DayPeriods, Scope,
};
use culturemap::simnet::{build_network, network_metrics, parse_country_attributes, NetworkMetrics, DEFAULT_THRESHOLDS};
use culturemap::store::CorpusStore;
use culturemap::synth::{generate_corpus, SynthSpec};
use culturemap::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] culturemap::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// 1 usage, 2 data, 3 degenerate math.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Degenerate => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "culturemap", version, about = "Cultural signatures and boundaries from venue check-ins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and geocode a corpus, assign home countries, write a store
    Ingest(IngestArgs),
    /// Similarity networks over user profiles at each threshold
    Simnet(SimnetArgs),
    /// Area signatures, correlation matrices, hourly curves and entropy
    Signatures(SignaturesArgs),
    /// PCA and cosine k-means over spatio-temporal signatures
    Cluster(ClusterArgs),
    /// Rank countries by similarity and correlate with survey coordinates
    Survey(SurveyArgs),
    /// Generate a synthetic corpus with planted cultures
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Country,
    City,
    Grid,
}

impl Level {
    fn as_str(self) -> &'static str {
        match self {
            Level::Country => "country",
            Level::City => "city",
            Level::Grid => "grid",
        }
    }

    fn kind(self) -> AreaKind {
        match self {
            Level::Country => AreaKind::Country,
            Level::City => AreaKind::City,
            Level::Grid => AreaKind::GridCell,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    Full,
    FfoodWeekend,
    Both,
}

impl Dataset {
    fn subsets(self) -> Vec<FeatureSubset> {
        match self {
            Dataset::Full => vec![FeatureSubset::Full],
            Dataset::FfoodWeekend => vec![FeatureSubset::FastFoodWeekend],
            Dataset::Both => vec![FeatureSubset::Full, FeatureSubset::FastFoodWeekend],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PMethod {
    T,
    Exact,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count `{r}`"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count `{c}`"))?;
    if r == 0 || c == 0 {
        return Err("grid needs at least one row and one column".into());
    }
    Ok((r, c))
}

fn parse_scope(s: &str) -> std::result::Result<Scope, String> {
    s.parse().map_err(|e: culturemap::Error| e.to_string())
}

fn parse_coverage(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad coverage `{s}`"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err("coverage must lie in (0, 1]".into())
    }
}

fn parse_threshold(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad threshold `{s}`"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold {v} outside [0, 100]"))
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Check-in corpus (JSON lines or CSV)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Country polygons, `country<TAB>lon,lat;lon,lat;...`
    #[arg(long)]
    pub geo: PathBuf,
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// City table, `city<TAB>country<TAB>min_lon,min_lat,max_lon,max_lat`
    #[arg(long)]
    pub cities: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_CHECKINS, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_checkins: u64,
    /// Fraction of malformed lines tolerated
    #[arg(long, default_value_t = DEFAULT_ERROR_BUDGET)]
    pub error_budget: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Store written by `ingest`
    #[arg(long, default_value = "out/store.json")]
    pub store: PathBuf,
}

#[derive(Debug, Args)]
pub struct AreaArgs {
    #[arg(long, value_enum, default_value_t = Level::Country)]
    pub level: Level,
    /// Grid laid over each city at grid level
    #[arg(long, default_value = "2x2", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Keep only the N busiest cells of each city at grid level
    #[arg(long)]
    pub top_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimnetArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Comma-separated Jaccard thresholds on a 0-100 scale
    #[arg(long, value_delimiter = ',', value_parser = parse_threshold,
          default_values_t = DEFAULT_THRESHOLDS.to_vec())]
    pub thresholds: Vec<f64>,
    /// CSV of per-country attributes, first column `country`
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    /// Override the store's minimum check-ins per user
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_checkins: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SignaturesArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub areas: AreaArgs,
    /// all, drink, fastfood or slowfood
    #[arg(long, default_value = "all", value_parser = parse_scope)]
    pub scope: Scope,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub areas: AreaArgs,
    /// Clusters; defaults to 7, 4 or 3 for country, city or grid level
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of variance the retained components must explain
    #[arg(long, default_value = "1.0", value_parser = parse_coverage)]
    pub coverage: f64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// CSV `country,trad_secular,surv_selfexpr`
    #[arg(long)]
    pub survey: PathBuf,
    #[arg(long, value_enum, default_value_t = Dataset::Both)]
    pub dataset: Dataset,
    #[arg(long, default_value = "1.0", value_parser = parse_coverage)]
    pub coverage: f64,
    /// Spearman p-value method; `exact` needs at most 9 countries
    #[arg(long, value_enum, default_value_t = PMethod::T)]
    pub p_method: PMethod,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML spec; mutually exclusive with --planted
    #[arg(long, conflicts_with = "planted")]
    pub spec: Option<PathBuf>,
    /// Plant this many country cultures instead of reading a spec
    #[arg(long)]
    pub planted: Option<usize>,
    /// Users per planted country
    #[arg(long, default_value_t = 200)]
    pub users: usize,
    /// Cities per planted country
    #[arg(long, default_value_t = 3)]
    pub cities: usize,
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Overrides the spec's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a).map(|_| ()),
        Command::Simnet(a) => cmd_simnet(&a).map(|_| ()),
        Command::Signatures(a) => cmd_signatures(&a),
        Command::Cluster(a) => cmd_cluster(&a).map(|_| ()),
        Command::Survey(a) => cmd_survey(&a).map(|_| ()),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(culturemap::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn flush(mut w: BufWriter<File>) -> CliResult<()> {
    w.flush()?;
    Ok(())
}

pub fn cmd_ingest(a: &IngestArgs) -> CliResult<CorpusStore> {
    if !(0.0..1.0).contains(&a.error_budget) {
        return Err(CliError::Usage("--error-budget must lie in [0, 1)".into()));
    }
    let taxonomy = Taxonomy::load(&a.taxonomy)?;
    let geo = GeoIndex::load(&a.geo)?;
    let mut corpus = load_corpus(&a.corpus, &taxonomy, a.error_budget)?;
    let (homes, report) = assign_home_country(&mut corpus, &geo, &taxonomy);
    let countries: Vec<String> = geo.countries().map(str::to_string).collect();
    let cities = match &a.cities {
        Some(p) => load_cities(p)?,
        None => Vec::new(),
    };
    for c in &cities {
        let code = c.attributes.get("country").map_or("", String::as_str);
        if !countries.iter().any(|k| k == code) {
            return Err(culturemap::Error::Invalid(format!("city `{}` names unknown country `{code}`", c.id)).into());
        }
    }
    let checkins = retain_assigned(corpus.checkins, &homes);
    let store = CorpusStore::new(taxonomy, a.min_checkins, countries, cities, homes, report, &checkins)?;
    fs::create_dir_all(&a.out_dir)?;
    store.save(a.out_dir.join("store.json"))?;
    write_json(&a.out_dir.join("ingest_report.json"), &store.report)?;
    Ok(store)
}

fn threshold_tag(s: f64) -> String {
    format!("{s}")
}

pub fn cmd_simnet(a: &SimnetArgs) -> CliResult<Vec<NetworkMetrics>> {
    let store = CorpusStore::load(&a.store.store)?;
    let checkins = store.checkins()?;
    let active = filter_active_users(&checkins, a.min_checkins.unwrap_or(store.min_checkins))?;
    let profiles = user_profiles(&active, &store.homes, &store.taxonomy);
    let attributes = match &a.attributes {
        Some(p) => Some(parse_country_attributes(&fs::read_to_string(p)?)?),
        None => None,
    };
    let dir = a.out_dir.join("simnet");
    let mut w = create(&dir.join("profiles.csv"))?;
    write_profiles_csv(&mut w, &profiles, &store.taxonomy)?;
    flush(w)?;

    let mut thresholds = a.thresholds.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut all = Vec::new();
    for &s in &thresholds {
        let mut net = build_network(&profiles, s)?;
        if let Some(t) = &attributes {
            net.join_country_attributes(t);
        }
        let mut keys: Vec<String> = net.nodes.iter().flat_map(|n| n.attributes.keys().cloned()).collect();
        keys.sort();
        keys.dedup();
        if keys.is_empty() {
            keys.push("country".into());
        }
        let tag = threshold_tag(s);
        let mut w = create(&dir.join(format!("edges_s{tag}.tsv")))?;
        net.write_edge_list(&mut w)?;
        flush(w)?;
        let mut w = create(&dir.join(format!("nodes_s{tag}.csv")))?;
        net.write_node_csv(&mut w)?;
        flush(w)?;
        all.push(network_metrics(&net, &keys));
    }
    write_json(&dir.join("metrics.json"), &all)?;

    let mut keys: Vec<&String> = all.iter().flat_map(|m| m.assortativity.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut w = create(&dir.join("metrics.csv"))?;
    let mut header = String::from(
        "threshold,population,nodes,edges,largest_component,second_component,largest_fraction,second_fraction,degree_assortativity",
    );
    for k in &keys {
        header.push_str(&format!(",assortativity_{k}"));
    }
    writeln!(w, "{header}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    for m in &all {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            m.threshold,
            m.population,
            m.nodes,
            m.edges,
            m.largest_component,
            m.second_component,
            m.largest_fraction,
            m.second_fraction,
            opt(m.degree_assortativity)
        )?;
        for k in &keys {
            write!(w, ",{}", opt(m.assortativity.get(*k).copied().flatten()))?;
        }
        writeln!(w)?;
    }
    flush(w)?;
    Ok(all)
}

/// Areas of the requested level, in a fixed order.
pub fn areas_for(store: &CorpusStore, checkins: &[CheckIn], args: &AreaArgs) -> CliResult<Vec<Area>> {
    let no_cities = || culturemap::Error::Invalid("the store has no cities; pass --cities to `ingest`".into());
    match args.level {
        Level::Country => Ok(store.countries.iter().map(Area::country).collect()),
        Level::City => {
            if store.cities.is_empty() {
                return Err(no_cities().into());
            }
            Ok(store.cities.clone())
        }
        Level::Grid => {
            if store.cities.is_empty() {
                return Err(no_cities().into());
            }
            let (rows, cols) = args.grid;
            let mut out = Vec::new();
            for city in &store.cities {
                let cells = grid_partition(city, rows, cols)?;
                match args.top_cells {
                    Some(n) => out.extend(top_cells(checkins, &cells, n)?.into_iter().map(|(a, _)| a)),
                    None => out.extend(cells),
                }
            }
            Ok(out)
        }
    }
}

fn scope_tag(scope: Scope) -> String {
    scope.to_string().to_ascii_lowercase()
}

#[derive(Serialize)]
struct SignatureSummary<'a> {
    level: &'a str,
    scope: String,
    areas: Vec<&'a str>,
    skipped_empty: &'a [String],
}

pub fn cmd_signatures(a: &SignaturesArgs) -> CliResult<()> {
    let store = CorpusStore::load(&a.store.store)?;
    let checkins = store.checkins()?;
    let tax = &store.taxonomy;
    let areas = areas_for(&store, &checkins, &a.areas)?;
    let level = a.areas.level.as_str();
    let (sigs, empty) = region_profiles(&checkins, &areas, tax);
    let dir = a.out_dir.join("signatures");

    let mut w = create(&dir.join(format!("spatial_{level}.csv")))?;
    write_signatures_csv(&mut w, &sigs, tax.names())?;
    flush(w)?;

    let matrix = correlation_matrix(&sigs, tax, a.scope)?;
    let mut w = create(&dir.join(format!("correlation_{level}_{}.csv", scope_tag(a.scope))))?;
    matrix.write_csv(&mut w)?;
    flush(w)?;

    let periods = DayPeriods::default();
    let populated: Vec<&Area> = areas.iter().filter(|x| !empty.contains(&x.id)).collect();
    let st: Vec<AreaSignature> = populated
        .iter()
        .map(|area| spatiotemporal_vector(&checkins, area, tax, &periods))
        .collect::<culturemap::Result<_>>()?;
    let mut w = create(&dir.join(format!("spatiotemporal_{level}.csv")))?;
    write_signatures_csv(&mut w, &st, &spatiotemporal_labels(tax, &periods))?;
    flush(w)?;

    let mut series = Vec::new();
    for area in &populated {
        for (class, _) in tax.classes() {
            for g in DayGroup::ALL {
                series.push(temporal_series(&checkins, area, tax, class, g)?);
            }
        }
    }
    let mut w = create(&dir.join(format!("temporal_{level}.csv")))?;
    write_temporal_csv(&mut w, &series)?;
    flush(w)?;

    let entropy = entropy_summary(&checkins, tax, &areas, level);
    let mut w = create(&dir.join(format!("entropy_{level}.csv")))?;
    entropy.write_summary_csv(&mut w)?;
    flush(w)?;
    let mut w = create(&dir.join(format!("entropy_{level}_subcategories.csv")))?;
    entropy.write_subcategories_csv(&mut w, tax)?;
    flush(w)?;

    write_json(
        &dir.join(format!("summary_{level}.json")),
        &SignatureSummary {
            level,
            scope: scope_tag(a.scope),
            areas: sigs.iter().map(|s| s.area_id.as_str()).collect(),
            skipped_empty: &empty,
        },
    )?;
    Ok(())
}

/// Normalized spatio-temporal vectors of every area that has check-ins.
fn spatiotemporal_rows(checkins: &[CheckIn], areas: &[Area], tax: &Taxonomy) -> CliResult<Vec<(Area, Vec<f64>)>> {
    let periods = DayPeriods::default();
    let mut out = Vec::new();
    for area in areas {
        match spatiotemporal_vector(checkins, area, tax, &periods) {
            Ok(sig) => out.push((area.clone(), sig.normalized)),
            Err(culturemap::Error::EmptyArea(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterOutput {
    pub level: String,
    pub components: usize,
    pub coverage: f64,
    pub explained_ratio: Vec<f64>,
    pub report: ClusterReport,
}

pub fn cmd_cluster(a: &ClusterArgs) -> CliResult<ClusterOutput> {
    let store = CorpusStore::load(&a.store.store)?;
    let checkins = store.checkins()?;
    let areas = areas_for(&store, &checkins, &a.areas)?;
    let rows = spatiotemporal_rows(&checkins, &areas, &store.taxonomy)?;
    let ids: Vec<String> = rows.iter().map(|(area, _)| area.id.clone()).collect();
    let data: Vec<Vec<f64>> = rows.iter().map(|(_, v)| v.clone()).collect();
    let pca = fit_pca(&data)?;
    let p = select_components(&pca, a.coverage);
    let scores = pca.transform(&data, p)?;
    let k = a.k.map_or_else(|| default_k(a.areas.level.kind()), |k| k as usize);
    let options = KMeansOptions {
        restarts: a.restarts as usize,
        ..KMeansOptions::default()
    };
    let report = kmeans_cosine(&ids, &scores, k, a.seed, options)?;
    let level = a.areas.level.as_str();
    let dir = a.out_dir.join("cluster");

    let mut w = create(&dir.join(format!("pca_scores_{level}.csv")))?;
    let mut header = vec!["area".to_string(), "country".into(), "cluster".into()];
    header.extend((1..=p).map(|i| format!("pc{i}")));
    writeln!(w, "{}", header.join(","))?;
    for (i, (area, _)) in rows.iter().enumerate() {
        let country = area.attributes.get("country").map_or("", String::as_str);
        let vals: Vec<String> = scores[i].iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{},{},{}", area.id, country, report.assignments[i], vals.join(","))?;
    }
    flush(w)?;

    let out = ClusterOutput {
        level: level.to_string(),
        components: p,
        coverage: a.coverage,
        explained_ratio: pca.explained_ratio.clone(),
        report,
    };
    write_json(&dir.join(format!("cluster_{level}.json")), &out)?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyOutput {
    pub countries: Vec<String>,
    /// Survey countries without check-ins in the store.
    pub missing_from_corpus: Vec<String>,
    pub datasets: BTreeMap<String, DatasetResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetResult {
    pub components: usize,
    pub rows: Vec<RankComparison>,
}

pub fn cmd_survey(a: &SurveyArgs) -> CliResult<SurveyOutput> {
    let store = CorpusStore::load(&a.store.store)?;
    let checkins = store.checkins()?;
    let survey = parse_survey_csv(&fs::read_to_string(&a.survey)?)?;
    let areas: Vec<Area> = store.countries.iter().map(Area::country).collect();
    let rows = spatiotemporal_rows(&checkins, &areas, &store.taxonomy)?;
    let present: BTreeMap<String, Vec<f64>> = rows.into_iter().map(|(area, v)| (area.id, v)).collect();
    let countries: Vec<String> = survey.keys().filter(|c| present.contains_key(*c)).cloned().collect();
    let missing: Vec<String> = survey.keys().filter(|c| !present.contains_key(*c)).cloned().collect();
    let method = match a.p_method {
        PMethod::T => PValueMethod::TApprox,
        PMethod::Exact => PValueMethod::Exact,
    };

    let mut datasets = BTreeMap::new();
    for subset in a.dataset.subsets() {
        let data: Vec<Vec<f64>> = countries
            .iter()
            .map(|c| subset.apply(&present[c], &store.taxonomy))
            .collect::<culturemap::Result<_>>()?;
        let pca = fit_pca(&data)?;
        let p = select_components(&pca, a.coverage);
        let scores = pca.transform(&data, p)?;
        let ours: BTreeMap<String, Vec<f64>> = countries.iter().cloned().zip(scores).collect();
        let rows = compare_with_survey(&ours, &survey, &countries, method)?;
        datasets.insert(subset.name().to_string(), DatasetResult { components: p, rows });
    }

    let dir = a.out_dir.join("survey");
    let tables: Vec<(&str, &[RankComparison])> = datasets.iter().map(|(k, v)| (k.as_str(), v.rows.as_slice())).collect();
    let mut w = create(&dir.join("comparison.csv"))?;
    write_comparison_csv(&mut w, &tables)?;
    flush(w)?;
    let out = SurveyOutput {
        countries,
        missing_from_corpus: missing,
        datasets,
    };
    write_json(&dir.join("rankings.json"), &out)?;
    Ok(out)
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let taxonomy = Taxonomy::load(&a.taxonomy)?;
    let spec = match (&a.spec, a.planted) {
        (Some(p), None) => SynthSpec::load(p)?,
        (None, Some(n)) => SynthSpec::planted(&taxonomy, n, a.users, a.cities, a.seed.unwrap_or(0))?,
        _ => return Err(CliError::Usage("pass exactly one of --spec or --planted".into())),
    };
    let seed = a.seed.unwrap_or(spec.seed);
    let out = generate_corpus(&spec, &taxonomy, seed)?;
    out.write_to_dir(&a.out_dir)?;
    fs::write(a.out_dir.join("spec.toml"), spec.to_toml())?;
    Ok(())
}
