//! The five scenarios and the files they write.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use radbound_core::bound_calc::{
    generalization_bound_thm3, lower_bound_thm2, lower_bound_thm2_at, rate_table, upper_bound_thm1,
    BoundReport, Complexity, LowerBound, NeighborOrdering, RateConfig, RateFamily, RateTable,
};
use radbound_core::gcn_model::{
    choose_labeled, output_bound, planted_labels, risk_on, train_projected_sgd, GcnParams,
    HypothesisSpec, Link, LossKind, LossSpec, TrainConfig,
};
use radbound_core::graphgen::{degree_stats, gen_complete, gen_erdos_renyi, gen_regular};
use radbound_core::rad_estimator::{
    brute_force_resolution_for, rc_brute_force, rc_linear_closed_form, rc_pga, PgaConfig, RcEstimate,
    SignSampling,
};
use radbound_core::rng::{stream_rng, tag};
use radbound_core::spectral::build_filter;
use radbound_core::{Graph, GraphFilter};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    ConfigIssue, EstimatorMethod, FeatureKind, GraphFamily, NCount, Scenario, ScenarioConfig,
};
use crate::plot::{loglog_svg, Series};
use crate::report::ReportWriter;

/// Upper limit on brute-force work, in (grid point × sign pattern) pairs.
const BRUTE_FORCE_BUDGET: f64 = 2e10;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Assumption(_) => 2,
            HarnessError::Numerical(_) | HarnessError::Io(_) => 3,
        }
    }

    fn instance(reason: impl Into<String>) -> Self {
        HarnessError::Config(vec![ConfigIssue {
            path: "<instance>".into(),
            reason: reason.into(),
        }])
    }
}

impl From<radbound_core::Error> for HarnessError {
    fn from(e: radbound_core::Error) -> Self {
        use radbound_core::Error as E;
        match e {
            E::NonHomogeneous { min, max, histogram } => {
                let hist: Vec<String> = histogram.iter().map(|(d, c)| format!("{d}:{c}")).collect();
                HarnessError::Assumption(format!(
                    "graph is not degree-homogeneous (degrees {min}..{max}; histogram degree:count {})",
                    hist.join(" ")
                ))
            }
            E::NotGraphShift { .. } => HarnessError::Assumption(e.to_string()),
            E::NonConvergence { .. } | E::Divergence { .. } => HarnessError::Numerical(e.to_string()),
            E::Io(err) => HarnessError::Io(err),
            other => HarnessError::instance(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Graph, filter, hypothesis constants and features of one run.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Arc<Graph>,
    pub filter: GraphFilter,
    pub spec: HypothesisSpec,
    pub x: DMatrix<f64>,
}

pub fn build_graph(cfg: &ScenarioConfig, seed: u64) -> Result<Graph> {
    let g = cfg.graph.as_ref().ok_or_else(|| HarnessError::instance("scenario needs a graph"))?;
    let graph = match &g.family {
        GraphFamily::Regular { ring_degree } => gen_regular(g.n.unwrap_or(0), *ring_degree, seed)?,
        GraphFamily::ErdosRenyi { p, p_scale } => {
            let n = g.n.unwrap_or(0);
            let p = p.unwrap_or_else(|| (p_scale * (n as f64).ln() / n as f64).min(1.0));
            gen_erdos_renyi(n, p, seed)?
        }
        GraphFamily::Complete => gen_complete(g.n.unwrap_or(0))?,
        GraphFamily::EdgeList { path } => {
            let text = std::fs::read_to_string(path)?;
            Graph::parse_edge_list(&text, g.n)?
        }
    };
    Ok(graph)
}

pub fn build_features(kind: FeatureKind, n: usize, d: usize, b: f64, seed: u64) -> DMatrix<f64> {
    match kind {
        FeatureKind::Canonical => DMatrix::from_fn(n, d, |_, c| if c == 0 { b } else { 0.0 }),
        FeatureKind::Random => {
            let mut rng = stream_rng(seed, tag::FEATURES);
            let mut x = DMatrix::zeros(n, d);
            for i in 0..n {
                let dir = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
                let radius = b * rng.random::<f64>().powf(1.0 / d as f64);
                let norm = dir.norm();
                if norm > 0.0 {
                    x.set_row(i, &(dir * (radius / norm)).transpose());
                }
            }
            x
        }
    }
}

/// `seed` drives the graph sample, Ω placement and random features.
pub fn build_instance(cfg: &ScenarioConfig, seed: u64) -> Result<Instance> {
    let graph = Arc::new(build_graph(cfg, seed)?);
    let filter = build_filter(&graph, cfg.filter.clone())?;
    let omega = cfg.omega.ok_or_else(|| HarnessError::instance("scenario needs omega"))?;
    let labeled = choose_labeled(graph.n(), omega.m, omega.placement, seed)?;
    let c = cfg.constants;
    let q = degree_stats(&graph).max_degree;
    let spec = HypothesisSpec::new(c.lipschitz_l, c.b, c.r, c.d_bound, q, labeled)?;
    let x = build_features(cfg.features.kind, graph.n(), cfg.features.d, c.b, seed);
    Ok(Instance { graph, filter, spec, x })
}

fn upper(inst: &Instance) -> Result<BoundReport> {
    let ordering = NeighborOrdering::ascending(&inst.graph, &inst.spec.labeled)?;
    Ok(upper_bound_thm1(&inst.spec, &inst.filter, &ordering)?)
}

fn lower(cfg: &ScenarioConfig, inst: &Instance) -> Result<LowerBound> {
    Ok(match cfg.reference_node {
        Some(r) => lower_bound_thm2_at(&inst.spec, &inst.filter, &inst.x, r)?,
        None => lower_bound_thm2(&inst.spec, &inst.filter, &inst.x)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub report: BoundReport,
    pub lower: LowerBound,
    /// `lower_thm2 / upper_thm1` when the lower bound applies
    pub lower_upper_ratio: Option<f64>,
}

pub fn bound(cfg: &ScenarioConfig) -> Result<BoundResult> {
    let inst = build_instance(cfg, cfg.seed)?;
    let lower = lower(cfg, &inst)?;
    let report = upper(&inst)?.with_lower(&lower);
    let lower_upper_ratio = lower.value.map(|l| l / report.upper_thm1);
    Ok(BoundResult {
        report,
        lower,
        lower_upper_ratio,
    })
}

pub fn estimate_on(cfg: &ScenarioConfig, inst: &Instance) -> Result<RcEstimate> {
    let e = &cfg.estimator;
    let sampling = e.num_mc.map_or(SignSampling::Exhaustive, SignSampling::MonteCarlo);
    let act = &cfg.activation;
    let est = match e.method {
        EstimatorMethod::ClosedForm => rc_linear_closed_form(&inst.spec, &inst.filter, &inst.x, act, sampling, cfg.seed)?,
        EstimatorMethod::Pga => {
            let pga = PgaConfig {
                sampling,
                restarts: e.restarts,
                steps: e.steps,
                lr: e.lr,
                width: e.width,
                seed: cfg.seed,
            };
            rc_pga(&inst.spec, &inst.filter, &inst.x, act, &pga)?
        }
        EstimatorMethod::BruteForce => {
            let res = match e.grid_resolution {
                Some(r) => r,
                None => brute_force_resolution_for(&inst.spec, &inst.filter, &inst.x, act, e.grid_error)?,
            };
            let d = inst.x.ncols();
            let work = 2.0 * d as f64 * ((res + 1) as f64).powi(d as i32 - 1) * 2f64.powi(inst.spec.m() as i32);
            if work > BRUTE_FORCE_BUDGET {
                return Err(HarnessError::instance(format!(
                    "brute force at grid resolution {res} is too expensive; raise estimator.grid_error"
                )));
            }
            rc_brute_force(&inst.spec, &inst.filter, &inst.x, act, res)?
        }
    };
    Ok(est)
}

pub fn estimate(cfg: &ScenarioConfig) -> Result<RcEstimate> {
    let inst = build_instance(cfg, cfg.seed)?;
    estimate_on(cfg, &inst)
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichResult {
    pub lower_thm2: Option<f64>,
    pub lower_applicable: bool,
    pub lower_reason: Option<String>,
    pub rc_estimate: RcEstimate,
    pub upper_thm1: f64,
    /// `lower ≤ value + 3·std_error`, vacuous when the lower bound does not apply
    pub lower_holds: bool,
    /// `value − 3·std_error ≤ upper`
    pub upper_holds: bool,
    pub sandwich_holds: bool,
}

pub fn sandwich(cfg: &ScenarioConfig) -> Result<SandwichResult> {
    let inst = build_instance(cfg, cfg.seed)?;
    let lower = lower(cfg, &inst)?;
    let upper = upper(&inst)?;
    let est = estimate_on(cfg, &inst)?;
    let slack = 3.0 * est.std_error;
    let lower_holds = lower.value.is_none_or(|l| l <= est.value + slack + 1e-9);
    let upper_holds = est.value - slack <= upper.upper_thm1;
    Ok(SandwichResult {
        lower_thm2: lower.value,
        lower_applicable: lower.applicable,
        lower_reason: lower.reason,
        rc_estimate: est,
        upper_thm1: upper.upper_thm1,
        lower_holds,
        upper_holds,
        sandwich_holds: lower_holds && upper_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyScaling {
    pub family: RateFamily,
    pub table: RateTable,
    /// slope of `ln(mean upper)` against `ln(ln n)`
    pub loglog_slope: Option<f64>,
    /// exponent of `ln n` in the asymptotic rate for this family
    pub reference_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairComparison {
    pub normalized: RateFamily,
    pub unnormalized: RateFamily,
    pub matched_rows: usize,
    pub normalized_not_larger: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingResult {
    pub families: Vec<FamilyScaling>,
    pub comparisons: Vec<PairComparison>,
}

pub fn scaling(cfg: &ScenarioConfig) -> Result<ScalingResult> {
    let s = cfg.scaling.as_ref().ok_or_else(|| HarnessError::instance("scenario needs a scaling section"))?;
    let seeds: Vec<u64> = (0..s.seeds_per_size as u64).map(|i| cfg.seed + i).collect();
    let placement = cfg.omega.map_or(radbound_core::gcn_model::Placement::Random, |o| o.placement);
    let mut families = Vec::new();
    for &family in &s.families {
        let rc = RateConfig {
            family,
            sizes: s.sizes.clone(),
            seeds: seeds.clone(),
            m_rule: s.m_rule,
            p_scale: s.p_scale,
            ring_degree: s.ring_degree,
            constants: cfg.constants,
            placement,
        };
        let table = rate_table(&rc)?;
        families.push(FamilyScaling {
            family,
            loglog_slope: table.loglog_slope(),
            reference_exponent: match family {
                RateFamily::ErUnnormalized => 2.5,
                RateFamily::ErNormalized => 1.5,
                _ => 0.0,
            },
            table,
        });
    }
    let mut comparisons = Vec::new();
    for (norm, unnorm) in [
        (RateFamily::ErNormalized, RateFamily::ErUnnormalized),
        (RateFamily::RegularNormalized, RateFamily::RegularUnnormalized),
    ] {
        let find = |f: RateFamily| families.iter().find(|x| x.family == f);
        if let (Some(a), Some(b)) = (find(norm), find(unnorm)) {
            let pairs: Vec<(f64, f64)> = a
                .table
                .rows
                .iter()
                .zip(&b.table.rows)
                .filter(|(x, y)| x.n == y.n && x.seed == y.seed)
                .map(|(x, y)| (x.upper_thm1, y.upper_thm1))
                .collect();
            let ok = pairs.iter().filter(|(x, y)| x <= y).count();
            comparisons.push(PairComparison {
                normalized: norm,
                unnormalized: unnorm,
                matched_rows: pairs.len(),
                normalized_not_larger: ok,
                fraction: if pairs.is_empty() { 0.0 } else { ok as f64 / pairs.len() as f64 },
            });
        }
    }
    Ok(ScalingResult { families, comparisons })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub seed: u64,
    pub train_risk: f64,
    pub transductive_risk: f64,
    pub gap: f64,
    pub upper_thm1: f64,
    pub complexity_term: f64,
    pub deviation_term: f64,
    pub thm3_bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub violation_rate: f64,
    pub mean_gap: f64,
    pub alpha_l: f64,
    pub delta: f64,
    pub n_count: usize,
}

impl GapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,train_risk,transductive_risk,gap,upper_thm1,complexity_term,deviation_term,thm3_bound,violated\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.seed,
                r.train_risk,
                r.transductive_risk,
                r.gap,
                r.upper_thm1,
                r.complexity_term,
                r.deviation_term,
                r.thm3_bound,
                r.violated
            ));
        }
        out
    }
}

fn teacher(d: usize, width: usize, cfg: &ScenarioConfig, seed: u64) -> GcnParams {
    let mut rng = stream_rng(seed, tag::TEACHER);
    let mut w1 = DMatrix::from_fn(d, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut w2 = DVector::from_fn(width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (n1, n2) = (w1.norm(), w2.norm());
    if n1 > 0.0 {
        w1 *= cfg.constants.r / n1;
    }
    if n2 > 0.0 {
        w2 *= cfg.constants.d_bound / n2;
    }
    GcnParams {
        w1,
        w2,
        activation: cfg.activation,
    }
}

fn gap_row(cfg: &ScenarioConfig, seed: u64) -> Result<(GapRow, f64, usize)> {
    let inst = build_instance(cfg, seed)?;
    let n = inst.graph.n();
    let m = inst.spec.m();
    if m == n {
        return Err(HarnessError::instance("gap scenario needs unlabelled nodes (m < n)"));
    }
    let t = &cfg.training;
    let teach = teacher(inst.x.ncols(), t.teacher_width, cfg, seed);
    let labels = planted_labels(&teach, &inst.filter, &inst.x, t.link)?;
    let upper = upper(&inst)?;
    let loss = match t.loss {
        LossKind::Hinge => LossSpec::hinge(),
        LossKind::Squared => {
            let y_max = match t.link {
                Link::Sign => 1.0,
                Link::Identity => labels.amax(),
            };
            LossSpec::squared(y_max, output_bound(&inst.spec, upper.terms.lambda_max_abs))
        }
    };
    let omega_labels: Vec<f64> = inst.spec.labeled.iter().map(|&v| labels[v]).collect();
    let train = TrainConfig {
        lr: t.lr,
        epochs: t.epochs,
        width: t.width,
        activation: cfg.activation,
        batch_size: t.batch_size,
        seed,
    };
    let out = train_projected_sgd(&inst.spec, &inst.filter, &inst.x, &omega_labels, &loss, &train)?;
    let train_risk = *out.history.last().expect("history has the initial risk");
    let mut is_labeled = vec![false; n];
    for &v in &inst.spec.labeled {
        is_labeled[v] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !is_labeled[v]).collect();
    let rest_labels: Vec<f64> = rest.iter().map(|&v| labels[v]).collect();
    let transductive_risk = risk_on(&out.params, &inst.filter, &inst.x, &rest, &rest_labels, &loss)?;
    let n_count = match cfg.n_count {
        NCount::N => n,
        NCount::M => m,
    };
    let g = generalization_bound_thm3(train_risk, Complexity::Bound(&upper), loss.alpha_l, cfg.delta, n_count)?;
    Ok((
        GapRow {
            seed,
            train_risk,
            transductive_risk,
            gap: transductive_risk - train_risk,
            upper_thm1: upper.upper_thm1,
            complexity_term: g.complexity_term,
            deviation_term: g.deviation_term,
            thm3_bound: g.value,
            violated: transductive_risk > g.value,
        },
        loss.alpha_l,
        n_count,
    ))
}

pub fn gap(cfg: &ScenarioConfig) -> Result<GapReport> {
    let runs = cfg.training.runs as u64;
    let results = (0..runs)
        .into_par_iter()
        .map(|i| gap_row(cfg, cfg.seed + i))
        .collect::<Result<Vec<_>>>()?;
    let (alpha_l, n_count) = (results[0].1, results[0].2);
    let rows: Vec<GapRow> = results.into_iter().map(|r| r.0).collect();
    let k = rows.len() as f64;
    Ok(GapReport {
        violation_rate: rows.iter().filter(|r| r.violated).count() as f64 / k,
        mean_gap: rows.iter().map(|r| r.gap).sum::<f64>() / k,
        rows,
        alpha_l,
        delta: cfg.delta,
        n_count,
    })
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// one-line human summary
    pub summary: String,
}

/// Runs the configured scenario and writes its reports under
/// `cfg.output_dir`.
fn or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let mut w = ReportWriter::new(&cfg.output_dir);
    let summary = match cfg.scenario {
        Scenario::Bound => {
            let r = bound(cfg)?;
            w.json("bound.json", cfg, &r)?;
            format!("upper_thm1 = {}, lower_thm2 = {}", r.report.upper_thm1, or_na(r.lower.value))
        }
        Scenario::Estimate => {
            let r = estimate(cfg)?;
            w.json("estimate.json", cfg, &r)?;
            format!("{:?} estimate = {} ± {}", r.method, r.value, r.std_error)
        }
        Scenario::Sandwich => {
            let r = sandwich(cfg)?;
            w.json("sandwich.json", cfg, &r)?;
            format!(
                "lower = {}, estimate = {}, upper = {}, sandwich_holds = {}",
                or_na(r.lower_thm2),
                r.rc_estimate.value, r.upper_thm1, r.sandwich_holds
            )
        }
        Scenario::Scaling => {
            let r = scaling(cfg)?;
            for f in &r.families {
                w.text(&format!("scaling_{}.csv", f.family.label()), &f.table.to_csv())?;
                w.text(&format!("scaling_{}_summary.csv", f.family.label()), &f.table.summary_csv())?;
            }
            w.json("scaling.json", cfg, &r)?;
            let series: Vec<Series> = r
                .families
                .iter()
                .map(|f| Series {
                    label: f.family.label().to_string(),
                    points: f.table.summary.iter().map(|s| (s.n as f64, s.mean_upper_thm1)).collect(),
                })
                .collect();
            if let Some(svg) = loglog_svg("upper bound vs graph size", "n", "mean upper_thm1", &series) {
                if let Err(e) = w.text("scaling.svg", &svg) {
                    eprintln!("warning: plot not written: {e}");
                }
            }
            let slopes: Vec<String> = r
                .families
                .iter()
                .map(|f| format!("{}: slope {}", f.family.label(), or_na(f.loglog_slope)))
                .collect();
            slopes.join("; ")
        }
        Scenario::Gap => {
            let r = gap(cfg)?;
            w.text("gap.csv", &r.to_csv())?;
            w.json("gap.json", cfg, &r)?;
            format!("violation_rate = {}, mean gap = {}", r.violation_rate, r.mean_gap)
        }
    };
    Ok(RunOutcome {
        files: w.written().to_vec(),
        summary,
    })
}
