//! User similarity networks.
//!
//! Two users are linked when the Jaccard index of their binary preference
//! vectors, scaled to `[0, 100]`, is at least the threshold `s`. Users left
//! without any edge are dropped from the network.
//!
//! Construction goes through an inverted index from feature to users, so only
//! pairs that share at least one feature are ever scored. For `s > 0` those
//! are the only pairs that can reach the threshold, which keeps the result
//! identical to comparing every pair.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UserProfile;

/// Thresholds examined by default.
pub const DEFAULT_THRESHOLDS: [f64; 8] = [65.0, 70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0];

/// Similarity of two users in `[0, 100]`.
pub fn jaccard_score(u: &UserProfile, v: &UserProfile) -> Result<f64> {
    if u.bits.len() != v.bits.len() {
        return Err(Error::invalid("profiles built over different taxonomies"));
    }
    let union = u.bits.union_count(&v.bits);
    if union == 0 {
        return Err(Error::undefined(format!(
            "Jaccard similarity of `{}` and `{}`: both profiles are empty",
            u.user_id, v.user_id
        )));
    }
    Ok(score(u.bits.intersection_count(&v.bits), union))
}

#[inline]
fn score(intersection: u32, union: u32) -> f64 {
    100.0 * intersection as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub user_id: String,
    pub attributes: BTreeMap<String, String>,
}

/// Thresholded similarity graph. Edges are `(i, j)` node index pairs with
/// `i < j`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityNetwork {
    pub threshold: f64,
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    /// Users the network was built from, isolated ones included.
    pub population: usize,
}

impl SimilarityNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Edges as user-id pairs, each pair ordered.
    pub fn edge_ids(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (&self.nodes[a].user_id, &self.nodes[b].user_id);
                if x <= y {
                    (x.clone(), y.clone())
                } else {
                    (y.clone(), x.clone())
                }
            })
            .collect()
    }

    /// Attaches per-country attributes (continent, region, ...) to every
    /// node, keyed by the node's `country` attribute.
    pub fn join_country_attributes(&mut self, table: &CountryAttributes) {
        for node in &mut self.nodes {
            if let Some(extra) = node.attributes.get("country").and_then(|c| table.get(c)) {
                let extra = extra.clone();
                node.attributes.extend(extra);
            }
        }
    }

    /// Writes `u<TAB>v` lines.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (u, v) in self.edge_ids() {
            writeln!(out, "{u}\t{v}")?;
        }
        Ok(())
    }

    /// Writes `user,<attribute keys...>` rows; missing attributes are empty.
    pub fn write_node_csv<W: Write>(&self, out: W) -> Result<()> {
        let keys: Vec<&String> = {
            let mut k: Vec<&String> = self.nodes.iter().flat_map(|n| n.attributes.keys()).collect();
            k.sort();
            k.dedup();
            k
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["user"];
        header.extend(keys.iter().map(|k| k.as_str()));
        w.write_record(&header)?;
        for n in &self.nodes {
            let mut row = vec![n.user_id.as_str()];
            row.extend(keys.iter().map(|k| n.attributes.get(*k).map(String::as_str).unwrap_or("")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Country code → attribute map.
pub type CountryAttributes = BTreeMap<String, BTreeMap<String, String>>;

/// Reads a CSV whose first column is `country` and whose other columns are
/// categorical attributes.
pub fn parse_country_attributes(text: &str) -> Result<CountryAttributes> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("country") {
        return Err(Error::invalid("attribute file must start with a `country` column"));
    }
    let mut table = CountryAttributes::new();
    for row in reader.records() {
        let row = row?;
        let attrs = headers
            .iter()
            .zip(row.iter())
            .skip(1)
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        table.insert(row[0].to_string(), attrs);
    }
    Ok(table)
}

/// Builds the network at threshold `s` ∈ [0, 100].
pub fn build_network(profiles: &[UserProfile], s: f64) -> Result<SimilarityNetwork> {
    if !(0.0..=100.0).contains(&s) {
        return Err(Error::invalid(format!("similarity threshold {s} outside [0, 100]")));
    }
    if let Some(p) = profiles.first() {
        if profiles.iter().any(|q| q.bits.len() != p.bits.len()) {
            return Err(Error::invalid("profiles built over different taxonomies"));
        }
    }
    let n = profiles.len();
    let pairs: Vec<(usize, usize)> = if s <= 0.0 {
        // Every defined pair qualifies, including pairs with nothing in common.
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                ((i + 1)..n)
                    .filter(move |&j| !(profiles[i].bits.is_zero() && profiles[j].bits.is_zero()))
                    .map(move |j| (i, j))
            })
            .collect()
    } else {
        indexed_pairs(profiles, s)
    };

    let mut keep = vec![usize::MAX; n];
    for &(a, b) in &pairs {
        keep[a] = 0;
        keep[b] = 0;
    }
    let mut nodes = Vec::new();
    for (i, slot) in keep.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = nodes.len();
            let mut attributes = BTreeMap::new();
            attributes.insert("country".to_string(), profiles[i].home_country.clone());
            nodes.push(Node {
                user_id: profiles[i].user_id.clone(),
                attributes,
            });
        }
    }
    let edges = pairs.into_iter().map(|(a, b)| (keep[a], keep[b])).collect();
    Ok(SimilarityNetwork {
        threshold: s,
        nodes,
        edges,
        population: n,
    })
}

fn indexed_pairs(profiles: &[UserProfile], s: f64) -> Vec<(usize, usize)> {
    let m = profiles.first().map_or(0, |p| p.bits.len());
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (i, p) in profiles.iter().enumerate() {
        for f in p.bits.ones() {
            postings[f].push(i as u32);
        }
    }
    let sizes: Vec<u32> = profiles.iter().map(|p| p.bits.count_ones()).collect();

    let mut per_user: Vec<Vec<(usize, usize)>> = (0..profiles.len())
        .into_par_iter()
        .map_init(
            || vec![u32::MAX; profiles.len()],
            |seen, i| {
                let mut out = Vec::new();
                let u = &profiles[i];
                for f in u.bits.ones() {
                    // postings are ascending, so start past i
                    let list = &postings[f];
                    let start = list.partition_point(|&j| j as usize <= i);
                    for &j in &list[start..] {
                        let j = j as usize;
                        if seen[j] == i as u32 {
                            continue;
                        }
                        seen[j] = i as u32;
                        let (a, b) = (sizes[i].min(sizes[j]), sizes[i].max(sizes[j]));
                        // |A∩B|/|A∪B| ≤ min/max
                        if score(a, b) < s {
                            continue;
                        }
                        let inter = u.bits.intersection_count(&profiles[j].bits);
                        let union = sizes[i] + sizes[j] - inter;
                        if score(inter, union) >= s {
                            out.push((i, j));
                        }
                    }
                }
                out.sort_unstable();
                out
            },
        )
        .collect();
    let mut pairs = Vec::with_capacity(per_user.iter().map(Vec::len).sum());
    for v in per_user.iter_mut() {
        pairs.append(v);
    }
    pairs
}

/// Connected component sizes, largest first. Fractions are relative to the
/// network's population, so they are comparable across thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub sizes: Vec<usize>,
    pub largest_fraction: f64,
    pub second_fraction: f64,
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

pub fn component_sizes(net: &SimilarityNetwork) -> ComponentSummary {
    let n = net.node_count();
    let mut ds = DisjointSet::new(n);
    for &(a, b) in &net.edges {
        ds.union(a, b);
    }
    let roots: Vec<usize> = (0..n).filter(|&i| ds.find(i) == i).collect();
    let mut sizes: Vec<usize> = roots.iter().map(|&i| ds.size[i]).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let population = net.population.max(n);
    let frac = |k: usize| {
        if population == 0 {
            0.0
        } else {
            sizes.get(k).copied().unwrap_or(0) as f64 / population as f64
        }
    };
    ComponentSummary {
        largest_fraction: frac(0),
        second_fraction: frac(1),
        sizes,
    }
}

/// Newman's assortativity coefficient for a categorical node attribute.
///
/// With `e` the symmetric edge mixing matrix (each undirected edge counted
/// once in each direction, normalized to sum 1) and `a` its marginal,
/// `r = (tr e − Σ aᵢ²) / (1 − Σ aᵢ²)`.
pub fn categorical_assortativity(net: &SimilarityNetwork, key: &str) -> Result<f64> {
    if net.edges.is_empty() {
        return Err(Error::undefined("assortativity of a network without edges"));
    }
    let mut values: BTreeMap<&str, usize> = BTreeMap::new();
    let mut label = Vec::with_capacity(net.nodes.len());
    for node in &net.nodes {
        let v = node
            .attributes
            .get(key)
            .ok_or_else(|| Error::invalid(format!("node `{}` has no `{key}` attribute", node.user_id)))?;
        let next = values.len();
        label.push(*values.entry(v.as_str()).or_insert(next));
    }
    let k = values.len();
    let mut e = vec![0.0; k * k];
    for &(a, b) in &net.edges {
        let (x, y) = (label[a], label[b]);
        e[x * k + y] += 1.0;
        e[y * k + x] += 1.0;
    }
    let total = 2.0 * net.edges.len() as f64;
    let trace: f64 = (0..k).map(|i| e[i * k + i] / total).sum();
    let sum_ab: f64 = (0..k)
        .map(|i| {
            let a: f64 = (0..k).map(|j| e[i * k + j]).sum::<f64>() / total;
            let b: f64 = (0..k).map(|j| e[j * k + i]).sum::<f64>() / total;
            a * b
        })
        .sum();
    let denom = 1.0 - sum_ab;
    if denom.abs() <= 1e-15 {
        return Err(Error::undefined(format!(
            "assortativity on `{key}`: every node has the same value"
        )));
    }
    Ok((trace - sum_ab) / denom)
}

/// Pearson correlation of the degrees at either end of each edge, with both
/// orientations of every edge included.
pub fn degree_assortativity(net: &SimilarityNetwork) -> Result<f64> {
    if net.edges.is_empty() {
        return Err(Error::undefined("degree assortativity of a network without edges"));
    }
    let deg = net.degrees();
    let count = 2.0 * net.edges.len() as f64;
    // Both orientations make the two marginals identical.
    let mean = net.edges.iter().map(|&(a, b)| (deg[a] + deg[b]) as f64).sum::<f64>() / count;
    let var = net
        .edges
        .iter()
        .map(|&(a, b)| (deg[a] as f64 - mean).powi(2) + (deg[b] as f64 - mean).powi(2))
        .sum::<f64>()
        / count;
    if var <= 1e-12 * mean.max(1.0).powi(2) {
        return Err(Error::undefined("degree assortativity: all edge endpoints have the same degree"));
    }
    let cov = net
        .edges
        .iter()
        .map(|&(a, b)| 2.0 * (deg[a] as f64 - mean) * (deg[b] as f64 - mean))
        .sum::<f64>()
        / count;
    Ok(cov / var)
}

/// Summary statistics for one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub threshold: f64,
    pub population: usize,
    pub nodes: usize,
    pub edges: usize,
    pub largest_component: usize,
    pub second_component: usize,
    pub largest_fraction: f64,
    pub second_fraction: f64,
    /// Attribute key → coefficient; `None` when undefined.
    pub assortativity: BTreeMap<String, Option<f64>>,
    pub degree_assortativity: Option<f64>,
}

pub fn network_metrics(net: &SimilarityNetwork, attribute_keys: &[String]) -> NetworkMetrics {
    let comps = component_sizes(net);
    NetworkMetrics {
        threshold: net.threshold,
        population: net.population,
        nodes: net.node_count(),
        edges: net.edge_count(),
        largest_component: comps.sizes.first().copied().unwrap_or(0),
        second_component: comps.sizes.get(1).copied().unwrap_or(0),
        largest_fraction: comps.largest_fraction,
        second_fraction: comps.second_fraction,
        assortativity: attribute_keys
            .iter()
            .map(|k| (k.clone(), categorical_assortativity(net, k).ok()))
            .collect(),
        degree_assortativity: degree_assortativity(net).ok(),
    }
}
