use std::path::{Path, PathBuf};

use clap::Args;
use posetinfo::coords::check_orthogonality;
use posetinfo::decomposition::{
    chain_decompose, entropy as shannon_entropy, entropy_decompose, information_gain, kl, metric_report, pythagoras_split,
};
use posetinfo::json::{DistributionJson, LabelMap};
use posetinfo::learn::{
    learn_from_clusters, learn_from_int_vectors, learn_from_transactions, ClusterSpec, ClusteredDataset,
    IntVectorDataset, TransactionDataset,
};
use posetinfo::mi::{mi_chain_decompose, mutual_information, refined_mi, JointTableJson};
use posetinfo::projection::{mix, SolverStats};
use posetinfo::significance::g_test;
use posetinfo::{Distribution, Poset, Subset};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{read_json, read_text, Context, Failure, Outcome};

/// Keyword for the empty subset in `--subset` and `--chain`.
const EMPTY_KEYWORD: &str = "∅";
/// Keyword for all of `S⁺`.
const ALL_KEYWORD: &str = "ALL";

#[derive(Debug, Args, Serialize)]
pub struct CoordsArgs {
    /// Distribution JSON ({poset, p}).
    #[arg(long)]
    input: PathBuf,
    /// Also report the finite-difference orthogonality matrix (small posets only).
    #[arg(long)]
    orthogonality: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Distribution q on the same poset; uniform when omitted.
    #[arg(long)]
    q_input: Option<PathBuf>,
    /// Element labels separated by `|`, or `ALL`.
    #[arg(long)]
    subset: String,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    q_input: Option<PathBuf>,
    /// Nested subsets separated by `;`, e.g. `∅;x1;ALL`.
    #[arg(long, conflicts_with = "subset", required_unless_present = "subset")]
    chain: Option<String>,
    /// Single subset for a two-term Pythagorean split.
    #[arg(long)]
    subset: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    subset: String,
}

#[derive(Debug, Args, Serialize)]
pub struct GainScanArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sample size; taken from the model's `n` when omitted.
    #[arg(long)]
    n: Option<u64>,
    /// Degrees of freedom for the χ² reference; |S| − 1 when omitted.
    #[arg(long)]
    dof: Option<i64>,
    /// Scan every single element (the only mode).
    #[arg(long, default_value_t = true)]
    all_singletons: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GtestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    subset: String,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    dof: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MiArgs {
    /// Joint table JSON ({poset, y_labels, joint}).
    #[arg(long)]
    input: PathBuf,
    /// Subset I; reports RI(∅, I) and RI(I, S⁺).
    #[arg(long)]
    subset: Option<String>,
    /// Nested subsets separated by `;`.
    #[arg(long)]
    chain: Option<String>,
    /// Add a small constant to every cell so zero entries are accepted.
    #[arg(long)]
    smooth: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnArgs {
    /// Frequency threshold σ in (0, 1].
    #[arg(long)]
    sigma: f64,
    /// Transactions, one per line, whitespace-separated item ids.
    #[arg(long, group = "data")]
    transactions: Option<PathBuf>,
    /// CSV of nonnegative integer vectors.
    #[arg(long, group = "data")]
    int_vectors: Option<PathBuf>,
    /// JSON {assignments, representatives, bottom}; needs --points.
    #[arg(long, group = "data", requires = "points")]
    clusters: Option<PathBuf>,
    /// CSV of the clustered points.
    #[arg(long)]
    points: Option<PathBuf>,
}

fn fail(source: Option<&Path>) -> impl FnOnce(posetinfo::Error) -> Failure + '_ {
    move |e| Failure::from_core(e, source)
}

fn load_distribution(path: &Path) -> Outcome<(Distribution, Value)> {
    let raw = read_json(path)?;
    let parsed: DistributionJson =
        serde_json::from_value(raw.clone()).map_err(|e| Failure::input(format!("not a distribution: {e}"), Some(path)))?;
    let d = parsed.to_distribution().map_err(fail(Some(path)))?;
    Ok((d, raw))
}

fn load_q(p: &Distribution, path: Option<&Path>) -> Outcome<Distribution> {
    match path {
        None => Ok(Distribution::uniform(p.poset_arc().clone())),
        Some(path) => {
            let (q, _) = load_distribution(path)?;
            if q.poset() != p.poset() {
                return Err(Failure::from_core(posetinfo::Error::PosetMismatch, Some(path)));
            }
            // Share the poset so results refer to one structure.
            let values = q.probs().to_vec();
            let q = Distribution::new(p.poset_arc().clone(), reorder(q.poset(), p.poset(), &values))
                .map_err(fail(Some(path)))?;
            Ok(q)
        }
    }
}

fn reorder(from: &Poset, to: &Poset, values: &[f64]) -> Vec<f64> {
    to.labels()
        .iter()
        .map(|l| values[from.id(l).expect("posets are equal").index()])
        .collect()
}

fn parse_subset(poset: &Poset, text: &str) -> Outcome<Subset> {
    let text = text.trim();
    if text.is_empty() || text == EMPTY_KEYWORD {
        return Ok(Subset::empty());
    }
    if text == ALL_KEYWORD {
        return Ok(Subset::all(poset));
    }
    let labels: Vec<&str> = text.split('|').map(str::trim).collect();
    Subset::from_labels(poset, &labels).map_err(fail(None))
}

fn parse_chain(poset: &Poset, text: &str) -> Outcome<Vec<Subset>> {
    text.split(';').map(|level| parse_subset(poset, level)).collect()
}

fn labeled(poset: &Poset, values: &[f64]) -> LabelMap<f64> {
    LabelMap::from_values(poset, values)
}

fn coordinates(d: &Distribution) -> Value {
    let poset = d.poset();
    json!({
        "p": labeled(poset, d.probs()),
        "theta": labeled(poset, &d.theta().values),
        "eta": labeled(poset, &d.eta().values),
    })
}

fn stats(poset: &Poset, s: &SolverStats) -> Value {
    let per_target: LabelMap<usize> =
        LabelMap(s.per_target_iterations.iter().map(|(x, n)| (poset.label(*x).to_owned(), *n)).collect());
    json!({
        "outer_iterations": s.outer_iterations,
        "per_target_iterations": per_target,
        "final_residual": s.final_residual,
    })
}

fn sample_size(explicit: Option<u64>, model: &Value, path: &Path) -> Outcome<u64> {
    explicit
        .or_else(|| model.get("n").and_then(Value::as_u64))
        .ok_or_else(|| Failure::input("no sample size: pass --n or use a learned model", Some(path)))
}

pub fn coords(a: &CoordsArgs, _ctx: &Context) -> Outcome<Value> {
    let (d, _) = load_distribution(&a.input)?;
    let theta = d.theta();
    let mut out = coordinates(&d);
    out["psi"] = json!(theta.psi());
    out["entropy"] = json!(shannon_entropy(&d));
    if a.orthogonality {
        let tol = 1e-3;
        let check = check_orthogonality(&d, tol).map_err(fail(Some(&a.input)))?;
        out["orthogonality"] = json!({
            "matrix": check.matrix,
            "max_deviation": check.max_deviation,
            "tolerance": tol,
            "within_tolerance": check.within_tolerance,
        });
    }
    Ok(out)
}

pub fn project(a: &ProjectArgs, ctx: &Context) -> Outcome<Value> {
    let (p, _) = load_distribution(&a.input)?;
    let q = load_q(&p, a.q_input.as_deref())?;
    let subset = parse_subset(p.poset(), &a.subset)?;
    let (r, s) = mix(&p, &q, &subset, &ctx.solver).map_err(fail(Some(&a.input)))?;
    let div = |x: &Distribution, y: &Distribution| kl(x, y).expect("same poset");
    Ok(json!({
        "subset": subset.labels(p.poset()),
        "mixed": coordinates(&r),
        "kl_p_mixed": div(&p, &r),
        "kl_mixed_q": div(&r, &q),
        "kl_p_q": div(&p, &q),
        "stats": stats(p.poset(), &s),
    }))
}

pub fn decompose(a: &DecomposeArgs, ctx: &Context) -> Outcome<Value> {
    let (p, _) = load_distribution(&a.input)?;
    let q = load_q(&p, a.q_input.as_deref())?;
    let poset = p.poset();
    let direct = kl(&p, &q).map_err(fail(Some(&a.input)))?;
    if let Some(text) = &a.chain {
        let chain = parse_chain(poset, text)?;
        let terms = chain_decompose(&p, &q, &chain, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
        let total: f64 = terms.iter().map(|t| t.kl).sum();
        let terms: Vec<Value> = terms
            .iter()
            .map(|t| json!({ "from": t.from.labels(poset), "to": t.to.labels(poset), "kl": t.kl }))
            .collect();
        return Ok(json!({ "terms": terms, "total": total, "kl_p_q": direct }));
    }
    let subset = parse_subset(poset, a.subset.as_deref().unwrap_or_default())?;
    let split = pythagoras_split(&p, &q, &subset, &ctx.solver).map_err(fail(Some(&a.input)))?;
    Ok(json!({
        "subset": subset.labels(poset),
        "kl_p_mixed": split.to_mixed,
        "kl_mixed_q": split.from_mixed,
        "total": split.total(),
        "kl_p_q": direct,
        "mixed": coordinates(&split.mixed),
        "stats": stats(poset, &split.stats),
    }))
}

pub fn entropy(a: &EntropyArgs, ctx: &Context) -> Outcome<Value> {
    let (p, _) = load_distribution(&a.input)?;
    let subset = parse_subset(p.poset(), &a.subset)?;
    let (to_null, rest) = entropy_decompose(&p, &subset, &ctx.solver).map_err(fail(Some(&a.input)))?;
    let gain = information_gain(&p, &subset, &ctx.solver).map_err(fail(Some(&a.input)))?;
    Ok(json!({
        "subset": subset.labels(p.poset()),
        "entropy": shannon_entropy(&p),
        "log_size": (p.poset().len() as f64).ln(),
        "kl_p_knockdown": to_null,
        "kl_knockdown_uniform": rest,
        "information_gain": gain,
    }))
}

pub fn gain_scan(a: &GainScanArgs, ctx: &Context) -> Outcome<Value> {
    let (p, raw) = load_distribution(&a.input)?;
    let n = sample_size(a.n, &raw, &a.input)?;
    let rows = posetinfo::scan::gain_scan(&p, n, a.dof, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
    Ok(json!({ "sample_size": n, "rows": rows }))
}

pub fn metric(a: &MetricArgs, ctx: &Context) -> Outcome<Value> {
    let (p, _) = load_distribution(&a.input)?;
    let poset = p.poset();
    let report = metric_report(&p, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
    let edges: Vec<Value> = report
        .graph
        .edges
        .iter()
        .map(|e| json!({ "lower": poset.label(e.lower), "upper": poset.label(e.upper), "weight": e.weight }))
        .collect();
    let distances: Vec<Value> = report
        .distances
        .iter()
        .map(|(x, y, d)| json!({ "x": poset.label(*x), "y": poset.label(*y), "distance": d }))
        .collect();
    Ok(json!({
        "subvaluation": labeled(poset, &report.subvaluation.values),
        "covering_graph": edges,
        "distances": distances,
    }))
}

pub fn gtest(a: &GtestArgs, ctx: &Context) -> Outcome<Value> {
    let (p, raw) = load_distribution(&a.input)?;
    let n = sample_size(a.n, &raw, &a.input)?;
    let subset = parse_subset(p.poset(), &a.subset)?;
    let t = g_test(&p, &subset, n, a.dof, &ctx.solver).map_err(fail(Some(&a.input)))?;
    Ok(json!({
        "knocked_down": t.knocked_down.labels(p.poset()),
        "sample_size": t.sample_size,
        "kl": t.kl,
        "lambda": t.lambda,
        "dof": t.dof,
        "dof_convention": t.dof_convention,
        "p_value": t.p_value,
        "null_theta_residual": t.null_theta_residual,
    }))
}

pub fn mi(a: &MiArgs, ctx: &Context) -> Outcome<Value> {
    let raw = read_json(&a.input)?;
    let parsed: JointTableJson =
        serde_json::from_value(raw).map_err(|e| Failure::input(format!("not a joint table: {e}"), Some(&a.input)))?;
    let t = parsed.to_table(a.smooth).map_err(fail(Some(&a.input)))?;
    let poset = t.poset();
    let mut singles = Vec::new();
    for x in poset.non_bottom() {
        let s = Subset::new(poset, [x]).map_err(fail(Some(&a.input)))?;
        let ri = refined_mi(&t, &Subset::empty(), &s, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
        singles.push((poset.label(x).to_owned(), ri.value));
    }
    let mut ranking: Vec<&(String, f64)> = singles.iter().collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out = json!({
        "mutual_information": mutual_information(&t),
        "x_marginal": labeled(poset, t.x_marginal().probs()),
        "y_marginal": LabelMap(t.y_labels().iter().cloned().zip(t.y_marginal().iter().copied()).collect()),
        "singletons": LabelMap(singles.clone()),
        "ranking": ranking.iter().map(|(l, _)| l).collect::<Vec<_>>(),
    });
    if let Some(text) = &a.subset {
        let subset = parse_subset(poset, text)?;
        let all = Subset::all(poset);
        let lower = refined_mi(&t, &Subset::empty(), &subset, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
        let upper = refined_mi(&t, &subset, &all, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
        let mut mixed = serde_json::Map::new();
        for (y, label) in t.y_labels().iter().enumerate() {
            let r = t.mixed_conditional(y, &subset, &ctx.solver).map_err(fail(Some(&a.input)))?;
            mixed.insert(label.clone(), json!(labeled(poset, r.probs())));
        }
        out["subset"] = json!({
            "elements": subset.labels(poset),
            "ri_empty_to_subset": lower.value,
            "ri_subset_to_all": upper.value,
            "mixed_conditionals": mixed,
        });
    }
    if let Some(text) = &a.chain {
        let chain = parse_chain(poset, text)?;
        let terms = mi_chain_decompose(&t, &chain, &ctx.solver, ctx.par).map_err(fail(Some(&a.input)))?;
        let total: f64 = terms.iter().map(|r| r.value).sum();
        let terms: Vec<Value> = terms
            .iter()
            .map(|r| json!({ "from": r.from.labels(poset), "to": r.to.labels(poset), "ri": r.value }))
            .collect();
        out["chain"] = json!({ "terms": terms, "total": total });
    }
    Ok(out)
}

pub fn learn(a: &LearnArgs, ctx: &Context) -> Outcome<Value> {
    let (model, source) = if let Some(path) = &a.transactions {
        let data = TransactionDataset::parse(&read_text(path)?).map_err(fail(Some(path)))?;
        (learn_from_transactions(&data, a.sigma, ctx.par), path)
    } else if let Some(path) = &a.int_vectors {
        let data = IntVectorDataset::parse_csv(&read_text(path)?).map_err(fail(Some(path)))?;
        (learn_from_int_vectors(&data, a.sigma, ctx.par), path)
    } else if let Some(path) = &a.clusters {
        let points_path = a.points.as_ref().expect("clap requires --points");
        let clusters: ClusterSpec = serde_json::from_value(read_json(path)?)
            .map_err(|e| Failure::input(format!("not a cluster clusters: {e}"), Some(path)))?;
        let data =
            ClusteredDataset::from_parts(&read_text(points_path)?, clusters).map_err(fail(Some(points_path)))?;
        (learn_from_clusters(&data, a.sigma, ctx.par), path)
    } else {
        return Err(Failure::input("one of --transactions, --int-vectors or --clusters is required", None));
    };
    let model = model.map_err(fail(Some(source)))?;
    Ok(serde_json::to_value(model.to_json()).expect("plain JSON"))
}
