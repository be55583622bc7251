//! Empirical models learned from data: itemset transactions, nonnegative
//! integer vectors, and pre-clustered real vectors.
//!
//! Every learner follows the same recipe. Distinct observations are counted
//! exactly, those with frequency at least `σ` form `S⁺`, and the bottom
//! receives the remaining mass `1 − Σ_{S⁺} p̂`. The order is inherited from
//! the data (set inclusion or the componentwise order) and reduced to covers
//! over the retained elements only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coords::Distribution;
use crate::error::{Error, Result};
use crate::json::{DistributionJson, LabelMap};
use crate::par::{self, Parallelism};
use crate::poset::{Poset, PosetJson};

/// Label of the empty itemset.
pub const EMPTY_SET_LABEL: &str = "⊥";

/// Slack on `count ≥ σN`, so that thresholds such as `2/25` written in
/// floating point keep their intended meaning.
const THRESHOLD_SLACK: f64 = 1e-9;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDataset {
    pub n_events: u32,
    pub transactions: Vec<BTreeSet<u32>>,
}

impl TransactionDataset {
    pub fn new(n_events: u32, transactions: Vec<BTreeSet<u32>>) -> Result<Self> {
        if transactions.is_empty() {
            return Err(Error::InvalidData("no transactions".into()));
        }
        for (i, t) in transactions.iter().enumerate() {
            if let Some(bad) = t.iter().find(|&&id| id == 0 || id > n_events) {
                return Err(Error::InvalidData(format!(
                    "transaction {}: item {bad} outside 1..={n_events}",
                    i + 1
                )));
            }
        }
        Ok(TransactionDataset { n_events, transactions })
    }

    /// One transaction per line, items separated by whitespace. Blank lines
    /// are empty transactions; lines starting with `#` are skipped. The number
    /// of events is the largest id seen.
    pub fn parse(text: &str) -> Result<Self> {
        let mut transactions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            let items = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u32>().map_err(|_| {
                        Error::InvalidData(format!("line {}: `{tok}` is not an item id", lineno + 1))
                    })
                })
                .collect::<Result<BTreeSet<u32>>>()?;
            transactions.push(items);
        }
        let n_events = transactions.iter().flat_map(|t| t.iter().copied()).max().unwrap_or(0);
        TransactionDataset::new(n_events.max(1), transactions)
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntVectorDataset {
    pub dim: usize,
    pub points: Vec<Vec<u64>>,
}

impl IntVectorDataset {
    pub fn new(points: Vec<Vec<u64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| Error::InvalidData("no points".into()))?;
        if dim == 0 {
            return Err(Error::InvalidData("points have no coordinates".into()));
        }
        if let Some(i) = points.iter().position(|v| v.len() != dim) {
            return Err(Error::InvalidData(format!("point {} has {} coordinates, expected {dim}", i + 1, points[i].len())));
        }
        Ok(IntVectorDataset { dim, points })
    }

    /// CSV, one vector per row, no header. Negative or fractional values are
    /// rejected.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let points = parse_rows(text, |tok| tok.parse::<u64>().ok())?;
        IntVectorDataset::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Points with a cluster assignment and one representative per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredDataset {
    pub points: Vec<Vec<f64>>,
    pub assignments: Vec<String>,
    /// Cluster id → representative, in input order.
    pub representatives: Vec<(String, Vec<f64>)>,
    /// Optional designated bottom vector.
    pub bottom: Option<Vec<f64>>,
}

/// The JSON side of a clustered dataset; the points come from a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub assignments: Vec<String>,
    pub representatives: LabelMap<Vec<f64>>,
    #[serde(default)]
    pub bottom: Option<Vec<f64>>,
}

impl ClusteredDataset {
    pub fn new(
        points: Vec<Vec<f64>>,
        assignments: Vec<String>,
        representatives: Vec<(String, Vec<f64>)>,
        bottom: Option<Vec<f64>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidData("no points".into()));
        }
        if points.len() != assignments.len() {
            return Err(Error::InvalidData(format!(
                "{} points but {} assignments",
                points.len(),
                assignments.len()
            )));
        }
        let dim = representatives
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::InvalidData("no representatives".into()))?;
        let all_vectors = representatives.iter().map(|(_, v)| v).chain(bottom.iter()).chain(points.iter());
        for v in all_vectors {
            if v.len() != dim {
                return Err(Error::InvalidData(format!("vector of length {} where {dim} expected", v.len())));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidData("non-finite coordinate".into()));
            }
        }
        let mut ids = BTreeSet::new();
        for (id, _) in &representatives {
            if !ids.insert(id.as_str()) {
                return Err(Error::InvalidData(format!("duplicate cluster `{id}`")));
            }
        }
        if let Some(a) = assignments.iter().find(|a| !ids.contains(a.as_str())) {
            return Err(Error::InvalidData(format!("cluster `{a}` has no representative")));
        }
        Ok(ClusteredDataset { points, assignments, representatives, bottom })
    }

    pub fn from_parts(points_csv: &str, clusters: ClusterSpec) -> Result<Self> {
        let points = parse_rows(points_csv, |tok| tok.parse::<f64>().ok())?;
        ClusteredDataset::new(points, clusters.assignments, clusters.representatives.0, clusters.bottom)
    }
}

fn parse_rows<T>(text: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                parse(tok).ok_or_else(|| Error::InvalidData(format!("line {}: bad value `{tok}`", lineno + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// How zero bottom mass was repaired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityRepair {
    pub epsilon: f64,
    pub elements: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub poset: Arc<Poset>,
    pub phat: Distribution,
    pub sigma: f64,
    pub n: usize,
    /// Exact-match counts per element in canonical order; the bottom holds
    /// the residual count.
    pub counts: Vec<u64>,
    pub repair: Option<PositivityRepair>,
}

impl LearnedModel {
    pub fn to_json(&self) -> LearnedModelJson {
        let dist = DistributionJson::from_distribution(&self.phat);
        LearnedModelJson {
            poset: dist.poset,
            p: dist.p,
            sigma: self.sigma,
            n: self.n,
            counts: LabelMap::from_values(&self.poset, &self.counts),
            repair: self.repair.clone(),
        }
    }
}

/// Written by the learners; readable as a plain distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedModelJson {
    pub poset: PosetJson,
    pub p: LabelMap<f64>,
    pub sigma: f64,
    pub n: usize,
    pub counts: LabelMap<u64>,
    #[serde(default)]
    pub repair: Option<PositivityRepair>,
}

impl LearnedModelJson {
    pub fn to_model(&self) -> Result<LearnedModel> {
        let poset = Arc::new(Poset::from_json(&self.poset)?);
        let phat = DistributionJson { poset: self.poset.clone(), p: self.p.clone() }.to_distribution_on(poset.clone())?;
        let counts = self.counts.values_for(&poset)?;
        Ok(LearnedModel { poset, phat, sigma: self.sigma, n: self.n, counts, repair: self.repair.clone() })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(sigma))
    }
}

/// Exact-match counts, folded over chunks of the sample.
fn count<K, T, F>(samples: &[T], key: F, par: Parallelism) -> HashMap<K, u64>
where
    K: Hash + Eq + Send,
    T: Sync,
    F: Fn(&T) -> K + Sync + Send,
{
    let chunks: Vec<&[T]> = samples.chunks(CHUNK).collect();
    let partial = par::map(&chunks, par, |chunk| {
        let mut m: HashMap<K, u64> = HashMap::new();
        for s in chunk.iter() {
            *m.entry(key(s)).or_insert(0) += 1;
        }
        m
    });
    let mut total = HashMap::new();
    for m in partial {
        for (k, c) in m {
            *total.entry(k).or_insert(0) += c;
        }
    }
    total
}

/// Shared thresholding and model assembly.
///
/// `keys` are the distinct observations with their counts, already sorted so
/// that every key comes after everything below it; `bottom` is the least key.
fn assemble<K: Ord + Clone>(
    mut keys: Vec<(K, u64)>,
    bottom: K,
    n: usize,
    sigma: f64,
    label: impl Fn(&K) -> String,
    less: impl Fn(&K, &K) -> bool,
) -> Result<LearnedModel> {
    check_sigma(sigma)?;
    let cutoff = sigma * n as f64 - THRESHOLD_SLACK;
    let bottom_count = keys.iter().find(|(k, _)| *k == bottom).map_or(0, |(_, c)| *c);
    keys.retain(|(k, c)| *k != bottom && *c as f64 >= cutoff);
    if keys.is_empty() && (bottom_count as f64) < cutoff {
        return Err(Error::EmptyModel);
    }
    let retained: u64 = keys.iter().map(|(_, c)| c).sum();
    let residual = n as u64 - retained;

    let mut elements = vec![bottom];
    elements.extend(keys.iter().map(|(k, _)| k.clone()));
    let labels: Vec<String> = elements.iter().map(&label).collect();
    let poset = Arc::new(Poset::from_order(&labels, |i, j| less(&elements[i], &elements[j]))?);

    let mut counts = vec![0u64; elements.len()];
    counts[poset.id(&labels[0])?.index()] = residual;
    for (label, (_, c)) in labels[1..].iter().zip(&keys) {
        counts[poset.id(label)?.index()] = *c;
    }
    let (phat, repair) = if residual == 0 {
        let epsilon = 1.0 / (10.0 * n as f64);
        let weights = counts
            .iter()
            .map(|&c| if c == 0 { epsilon } else { c as f64 / n as f64 })
            .collect();
        let repaired = poset
            .elements()
            .filter(|x| counts[x.index()] == 0)
            .map(|x| poset.label(x).to_owned())
            .collect();
        (Distribution::normalized(poset.clone(), weights)?, Some(PositivityRepair { epsilon, elements: repaired }))
    } else {
        let p = counts.iter().map(|&c| c as f64 / n as f64).collect();
        (Distribution::new(poset.clone(), p)?, None)
    };
    Ok(LearnedModel { poset, phat, sigma, n, counts, repair })
}

/// Sorted comma-joined ids, or `⊥` for the empty set.
pub fn itemset_label(items: &BTreeSet<u32>) -> String {
    if items.is_empty() {
        EMPTY_SET_LABEL.to_owned()
    } else {
        items.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

/// `(a,b,…)`.
pub fn vector_label<T: ToString>(v: &[T]) -> String {
    format!("({})", v.iter().map(T::to_string).collect::<Vec<_>>().join(","))
}

pub fn learn_from_transactions(d: &TransactionDataset, sigma: f64, par: Parallelism) -> Result<LearnedModel> {
    check_sigma(sigma)?;
    let counts = count(&d.transactions, |t| t.clone(), par);
    let mut keys: Vec<(BTreeSet<u32>, u64)> = counts.into_iter().collect();
    keys.sort_by(|(a, _), (b, _)| (a.len(), a).cmp(&(b.len(), b)));
    assemble(keys, BTreeSet::new(), d.len(), sigma, itemset_label, |a, b| a.len() < b.len() && a.is_subset(b))
}

fn componentwise_less<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    a != b && a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn learn_from_int_vectors(d: &IntVectorDataset, sigma: f64, par: Parallelism) -> Result<LearnedModel> {
    check_sigma(sigma)?;
    let counts = count(&d.points, |v| v.clone(), par);
    let mut keys: Vec<(Vec<u64>, u64)> = counts.into_iter().collect();
    keys.sort_by(|(a, _), (b, _)| (a.iter().sum::<u64>(), a).cmp(&(b.iter().sum::<u64>(), b)));
    assemble(keys, vec![0; d.dim], d.len(), sigma, |v| vector_label(v), |a, b| componentwise_less(a, b))
}

/// Bottom label used when the bottom vector is supplied rather than being one
/// of the representatives.
pub const SUPPLIED_BOTTOM_LABEL: &str = "⊥";

pub fn learn_from_clusters(d: &ClusteredDataset, sigma: f64, par: Parallelism) -> Result<LearnedModel> {
    check_sigma(sigma)?;
    let n = d.points.len();
    let position: HashMap<&str, usize> =
        d.representatives.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
    let counts = count(&d.assignments, |a| position[a.as_str()], par);
    let cutoff = sigma * n as f64 - THRESHOLD_SLACK;
    let frequent: Vec<usize> = (0..d.representatives.len())
        .filter(|i| counts.get(i).is_some_and(|&c| c as f64 >= cutoff))
        .collect();
    let vec_of = |i: usize| &d.representatives[i].1;

    // Key: None is a supplied bottom, Some(i) the i-th representative.
    let (bottom, bottom_vec): (Option<usize>, &[f64]) = match &d.bottom {
        Some(b) => match d.representatives.iter().position(|(_, v)| v == b) {
            Some(i) => (Some(i), b),
            None => (None, b),
        },
        None => {
            let candidate = (0..d.representatives.len()).find(|&i| {
                frequent.iter().all(|&j| j == i || componentwise_less(vec_of(i), vec_of(j)))
            });
            match candidate {
                Some(i) => (Some(i), vec_of(i)),
                None if frequent.is_empty() => return Err(Error::EmptyModel),
                None => return Err(Error::NoBottom),
            }
        }
    };
    if let Some(j) = frequent.iter().find(|&&j| Some(j) != bottom && !componentwise_less(bottom_vec, vec_of(j))) {
        return Err(Error::InvalidData(format!(
            "bottom vector is not below representative `{}`",
            d.representatives[*j].0
        )));
    }
    let mut keys: Vec<(Option<usize>, u64)> = counts.into_iter().map(|(i, c)| (Some(i), c)).collect();
    // Representatives may not come sorted by the order; the input position
    // keeps ties deterministic.
    let rank = |k: &Option<usize>| k.map_or(f64::NEG_INFINITY, |i| vec_of(i).iter().sum::<f64>());
    keys.sort_by(|(a, _), (b, _)| rank(a).total_cmp(&rank(b)).then(a.cmp(b)));
    let vector = |k: &Option<usize>| -> Vec<f64> { k.map_or_else(|| bottom_vec.to_vec(), |i| vec_of(i).clone()) };
    assemble(
        keys,
        bottom,
        n,
        sigma,
        |k| k.map_or_else(|| SUPPLIED_BOTTOM_LABEL.to_owned(), |i| d.representatives[i].0.clone()),
        |a, b| componentwise_less(&vector(a), &vector(b)),
    )
}

/// Frequencies of every distinct observation, for inspecting a threshold.
pub fn transaction_frequencies(d: &TransactionDataset) -> BTreeMap<String, u64> {
    count(&d.transactions, itemset_label, Parallelism::Sequential).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_transactions() -> TransactionDataset {
        TransactionDataset::parse("2\n2\n4 5\n1 2 4 5\n1 2 4 5\n3\n1 2 4 5\n4 5\n1 2 4 5\n2\n").unwrap()
    }

    fn sample_vectors() -> IntVectorDataset {
        let mut rows = String::new();
        for (v, k) in [("0,1", 3), ("1,0", 1), ("1,1", 4), ("1,2", 3), ("2,1", 10), ("3,3", 4)] {
            for _ in 0..k {
                rows.push_str(v);
                rows.push('\n');
            }
        }
        IntVectorDataset::parse_csv(&rows).unwrap()
    }

    #[test]
    fn transaction_example() {
        let m = learn_from_transactions(&sample_transactions(), 0.2, Parallelism::Sequential).unwrap();
        let poset = &m.poset;
        assert_eq!(poset.labels(), ["⊥", "2", "4,5", "1,2,4,5"]);
        assert_eq!(m.phat.probs(), [0.1, 0.3, 0.2, 0.4]);
        assert_eq!(m.counts, [1, 3, 2, 4]);
        assert!(m.repair.is_none());
        let covers: Vec<_> = poset.cover_pairs().map(|(a, b)| (poset.label(a), poset.label(b))).collect();
        assert_eq!(covers.len(), 4);
        assert!(covers.contains(&("2", "1,2,4,5")));
    }

    #[test]
    fn transaction_thresholds() {
        let d = sample_transactions();
        assert!(matches!(learn_from_transactions(&d, 1.0, Parallelism::Sequential), Err(Error::EmptyModel)));
        assert!(matches!(learn_from_transactions(&d, 0.0, Parallelism::Sequential), Err(Error::InvalidThreshold(_))));
        let m = learn_from_transactions(&d, 0.1, Parallelism::Sequential).unwrap();
        assert_eq!(m.poset.len(), 5);
        let freq = transaction_frequencies(&d);
        assert_eq!(freq["3"], 1);
    }

    #[test]
    fn identical_transactions_need_repair() {
        let d = TransactionDataset::parse("1\n1\n1\n1\n").unwrap();
        let m = learn_from_transactions(&d, 0.5, Parallelism::Sequential).unwrap();
        let repair = m.repair.as_ref().unwrap();
        assert_eq!(repair.epsilon, 1.0 / 40.0);
        assert_eq!(repair.elements, ["⊥"]);
        let want = [0.025 / 1.025, 1.0 / 1.025];
        for (got, want) in m.phat.probs().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn vector_example() {
        let m = learn_from_int_vectors(&sample_vectors(), 2.0 / 25.0, Parallelism::Sequential).unwrap();
        let labels: BTreeSet<&str> = m.poset.labels().iter().map(String::as_str).collect();
        let want: BTreeSet<&str> = ["(0,0)", "(0,1)", "(1,1)", "(1,2)", "(2,1)", "(3,3)"].into();
        assert_eq!(labels, want);
        let bottom = m.poset.id("(0,0)").unwrap();
        assert_eq!(m.phat.prob(bottom), 1.0 / 25.0);
        let (a, b) = (m.poset.id("(1,2)").unwrap(), m.poset.id("(2,1)").unwrap());
        assert_eq!(m.poset.join(a, b).unwrap(), m.poset.id("(3,3)").ok());
    }

    #[test]
    fn vector_edge_cases() {
        let d = IntVectorDataset::parse_csv("0,0\n0,0\n").unwrap();
        let m = learn_from_int_vectors(&d, 0.5, Parallelism::Sequential).unwrap();
        assert_eq!(m.poset.len(), 1);
        assert_eq!(m.phat.probs(), [1.0]);

        let d = IntVectorDataset::parse_csv("0,1\n1,0\n0,1\n1,0\n").unwrap();
        let m = learn_from_int_vectors(&d, 0.25, Parallelism::Sequential).unwrap();
        assert_eq!(m.poset.len(), 3);
        let (a, b) = (m.poset.id("(0,1)").unwrap(), m.poset.id("(1,0)").unwrap());
        assert!(!m.poset.leq(a, b).unwrap() && !m.poset.leq(b, a).unwrap());
        assert!(m.repair.is_some());

        assert!(IntVectorDataset::parse_csv("1,-1\n").is_err());
        assert!(IntVectorDataset::parse_csv("1,1\n1\n").is_err());
    }

    fn clusters(sizes: &[usize], reps: &[[f64; 2]], bottom: Option<Vec<f64>>) -> ClusteredDataset {
        let mut points = Vec::new();
        let mut assignments = Vec::new();
        for (i, &k) in sizes.iter().enumerate() {
            for _ in 0..k {
                points.push(reps[i].to_vec());
                assignments.push(format!("c{i}"));
            }
        }
        let reps = reps.iter().enumerate().map(|(i, r)| (format!("c{i}"), r.to_vec())).collect();
        ClusteredDataset::new(points, assignments, reps, bottom).unwrap()
    }

    #[test]
    fn cluster_frequencies() {
        let d = clusters(&[10, 6, 4], &[[1.0, 1.0], [2.0, 3.0], [3.0, 2.5]], Some(vec![0.0, 0.0]));
        let m = learn_from_clusters(&d, 0.2, Parallelism::Sequential).unwrap();
        assert_eq!(m.poset.len(), 4);
        assert!(m.repair.is_some());
        let p: Vec<f64> = ["c0", "c1", "c2"].iter().map(|l| m.phat.prob(m.poset.id(l).unwrap())).collect();
        let scale = 1.0 / (1.0 + 1.0 / 200.0);
        for (got, want) in p.iter().zip([0.5, 0.3, 0.2]) {
            assert!((got - want * scale).abs() < 1e-15);
        }
        assert!(matches!(learn_from_clusters(&d, 0.6, Parallelism::Sequential), Err(Error::EmptyModel)));
    }

    #[test]
    fn cluster_bottom_rules() {
        // A chain of representatives; the least one is the bottom.
        let d = clusters(&[5, 3, 2], &[[0.0, 0.0], [1.0, 0.5], [2.0, 2.0]], None);
        let m = learn_from_clusters(&d, 0.1, Parallelism::Sequential).unwrap();
        assert_eq!(m.poset.labels(), ["c0", "c1", "c2"]);
        assert_eq!(m.poset.cover_pairs().count(), 2);
        assert_eq!(m.phat.probs(), [0.5, 0.3, 0.2]);

        let d = clusters(&[5, 5], &[[0.0, 1.0], [1.0, 0.0]], None);
        assert!(matches!(learn_from_clusters(&d, 0.1, Parallelism::Sequential), Err(Error::NoBottom)));
        let d = clusters(&[5, 5], &[[0.0, 1.0], [1.0, 0.0]], Some(vec![0.5, 0.5]));
        assert!(learn_from_clusters(&d, 0.1, Parallelism::Sequential).is_err());
    }

    #[test]
    fn parallel_counting_matches() {
        let rows: Vec<BTreeSet<u32>> = (0..20_000u32).map(|i| (1..=(i % 5)).collect()).collect();
        let d = TransactionDataset::new(5, rows).unwrap();
        let a = learn_from_transactions(&d, 0.01, Parallelism::Sequential).unwrap();
        let b = learn_from_transactions(&d, 0.01, Parallelism::Auto).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.phat, b.phat);
    }

    #[test]
    fn model_json_round_trip() {
        let m = learn_from_transactions(&sample_transactions(), 0.2, Parallelism::Sequential).unwrap();
        let text = serde_json::to_string(&m.to_json()).unwrap();
        let back: LearnedModelJson = serde_json::from_str(&text).unwrap();
        let m2 = back.to_model().unwrap();
        assert_eq!(m2.phat.theta(), m.phat.theta());
        assert_eq!(m2.counts, m.counts);
        let plain: DistributionJson = serde_json::from_str(&text).unwrap();
        assert_eq!(plain.to_distribution().unwrap(), m.phat);
    }
}
