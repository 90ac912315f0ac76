//! Closed-form complexity bounds for `F_{D,R}`.
//!
//! Upper bound (λ_max form):
//!
//! ```text
//! R̂ ≤ 8·L²·B·D·R · |λ_max(G)| · √(q/m) · Σ_{l=1..q} max_{j∈Ω} |g_{j, n_l(j)}|
//! ```
//!
//! Lower bound, for the linear construction `σ(s) = L·s`:
//!
//! ```text
//! R̂ ≥ (L²·B·D·R/√m) · min_k ‖Σ_l g_{lk} x_l‖₂ · Σ_t g_{kt}
//! ```
//!
//! with `k` running over the neighbourhood of a reference node. The
//! generalization bound adds `2·(2α·complexity) + √(2·ln(2/δ)/n)` to the
//! empirical risk.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gcn_model::{choose_labeled, HypothesisSpec, Placement};
use crate::graphgen::{degree_stats, gen_erdos_renyi, gen_regular, Graph};
use crate::rad_estimator::RcEstimate;
use crate::spectral::{build_filter, FilterKind, GraphFilter};

/// The lists `n_1(j), …, n_q(j)` for every labelled node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborOrdering {
    pub lists: Vec<(usize, Vec<usize>)>,
}

impl NeighborOrdering {
    /// `N(j)` in ascending node order, self included.
    pub fn ascending(graph: &Graph, labeled: &[usize]) -> Result<Self> {
        if let Some(&bad) = labeled.iter().find(|&&v| v >= graph.n()) {
            return Err(Error::invalid(format!("labelled node {bad} outside 0..{}", graph.n())));
        }
        Ok(Self {
            lists: labeled.iter().map(|&j| (j, graph.neighbors(j).to_vec())).collect(),
        })
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (j, list) in &self.lists {
            hasher.update((*j as u64).to_le_bytes());
            hasher.update((list.len() as u64).to_le_bytes());
            for &v in list {
                hasher.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    fn check(&self, graph: &Graph, labeled: &[usize], q: usize, strict: bool) -> Result<()> {
        let nodes: Vec<usize> = self.lists.iter().map(|(j, _)| *j).collect();
        if nodes != labeled {
            return Err(Error::invalid("neighbour ordering does not cover the labelled set in order"));
        }
        for (j, list) in &self.lists {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted != graph.neighbors(*j) {
                return Err(Error::invalid(format!("ordering for node {j} is not a permutation of N({j})")));
            }
            if strict && list.len() != q {
                return Err(Error::invalid(format!("ordering for node {j} has length {}, expected {q}", list.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `8·L²·B·D·R`
    pub prefactor: f64,
    pub lambda_max_abs: f64,
    pub sqrt_q_over_m: f64,
    /// `Σ_{l=1..q} max_{j∈Ω} |g_{j, n_l(j)}|`
    pub neighbor_entry_sum: f64,
}

impl BoundTerms {
    pub fn product(&self) -> f64 {
        self.prefactor * self.lambda_max_abs * self.sqrt_q_over_m * self.neighbor_entry_sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub upper_thm1: f64,
    pub terms: BoundTerms,
    pub q: usize,
    pub m: usize,
    /// q was replaced by the maximum degree on a heterogeneous graph
    pub relaxed: bool,
    pub lower_thm2: Option<f64>,
    pub lower_applicable: bool,
    pub lower_reason: Option<String>,
    pub ordering_hash: String,
    pub filter_kind: String,
    pub graph_hash: String,
}

impl BoundReport {
    pub fn with_lower(mut self, lower: &LowerBound) -> Self {
        self.lower_thm2 = lower.value;
        self.lower_applicable = lower.applicable;
        self.lower_reason = lower.reason.clone();
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// use `q = max degree` instead of rejecting heterogeneous graphs
    pub relax_heterogeneous: bool,
    /// accept filters with entries outside the edge set
    pub allow_non_shift: bool,
}

fn homogeneous_q(spec: &HypothesisSpec, filter: &GraphFilter, opts: BoundOptions) -> Result<(usize, bool)> {
    let stats = degree_stats(filter.graph());
    let (q, relaxed) = match stats.require_homogeneous() {
        Ok(q) => (q, false),
        Err(_) if opts.relax_heterogeneous => (stats.max_degree, true),
        Err(e) => return Err(e),
    };
    if !relaxed && spec.q != q {
        return Err(Error::invalid(format!("spec has q = {}, graph has q = {q}", spec.q)));
    }
    if !opts.allow_non_shift {
        if let Some((row, col)) = filter.shift_violation() {
            return Err(Error::NotGraphShift { row, col });
        }
    }
    Ok((q, relaxed))
}

pub fn upper_bound_thm1(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    ordering: &NeighborOrdering,
) -> Result<BoundReport> {
    upper_bound_thm1_with(spec, filter, ordering, BoundOptions::default())
}

pub fn upper_bound_thm1_with(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    ordering: &NeighborOrdering,
    opts: BoundOptions,
) -> Result<BoundReport> {
    spec.validate()?;
    if let Some(&bad) = spec.labeled.iter().find(|&&v| v >= filter.n()) {
        return Err(Error::invalid(format!("labelled node {bad} outside 0..{}", filter.n())));
    }
    let (q, relaxed) = homogeneous_q(spec, filter, opts)?;
    ordering.check(filter.graph(), &spec.labeled, q, !relaxed)?;
    let m = spec.m();
    let neighbor_entry_sum: f64 = (0..q)
        .map(|l| {
            ordering
                .lists
                .iter()
                .filter_map(|(j, list)| list.get(l).map(|&v| filter.entry(*j, v).abs()))
                .fold(0.0, f64::max)
        })
        .sum();
    let terms = BoundTerms {
        prefactor: 8.0 * spec.lipschitz_l.powi(2) * spec.b * spec.d_bound * spec.r,
        lambda_max_abs: filter.lambda_max_abs()?,
        sqrt_q_over_m: (q as f64 / m as f64).sqrt(),
        neighbor_entry_sum,
    };
    Ok(BoundReport {
        upper_thm1: terms.product(),
        terms,
        q,
        m,
        relaxed,
        lower_thm2: None,
        lower_applicable: false,
        lower_reason: Some("not evaluated".into()),
        ordering_hash: ordering.hash(),
        filter_kind: filter.kind().label(),
        graph_hash: filter.graph().fingerprint(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerTerm {
    pub k: usize,
    /// `‖Σ_l g_{lk} x_l‖₂`
    pub column_norm: f64,
    /// `Σ_t g_{kt}`
    pub row_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: Option<f64>,
    pub applicable: bool,
    pub reason: Option<String>,
    pub reference_node: usize,
    pub terms: Vec<LowerTerm>,
    /// `max_k ‖Σ_l g_{lk} x_l‖₂` over the same index set
    pub max_column_norm: f64,
}

impl LowerBound {
    fn inapplicable(reference_node: usize, reason: String) -> Self {
        Self {
            value: None,
            applicable: false,
            reason: Some(reason),
            reference_node,
            terms: Vec::new(),
            max_column_norm: 0.0,
        }
    }
}

/// Lower bound with the lowest-indexed labelled node as reference.
pub fn lower_bound_thm2(spec: &HypothesisSpec, filter: &GraphFilter, x: &DMatrix<f64>) -> Result<LowerBound> {
    let reference = *spec.labeled.iter().min().ok_or_else(|| Error::invalid("labelled set is empty"))?;
    lower_bound_thm2_at(spec, filter, x, reference)
}

pub fn lower_bound_thm2_at(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    reference: usize,
) -> Result<LowerBound> {
    spec.validate()?;
    spec.check_instance(filter.n(), x)?;
    if reference >= filter.n() {
        return Err(Error::invalid(format!("reference node {reference} outside 0..{}", filter.n())));
    }
    let graph = filter.graph();
    let stats = degree_stats(graph);
    if !stats.is_homogeneous {
        return Ok(LowerBound::inapplicable(
            reference,
            format!("graph is not homogeneous (degrees {}..{})", stats.min_degree, stats.max_degree),
        ));
    }
    let g = filter.matrix();
    let mut covered: Vec<usize> = spec.labeled.iter().flat_map(|&j| graph.neighbors(j).to_vec()).collect();
    covered.extend_from_slice(graph.neighbors(reference));
    covered.sort_unstable();
    covered.dedup();
    let sums: Vec<f64> = covered.iter().map(|&k| g.row_sum(k)).collect();
    let scale = sums.iter().fold(0.0f64, |a, s| a.max(s.abs())).max(1.0);
    let (lo, hi) = sums
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if hi - lo > 1e-12 * scale {
        return Ok(LowerBound::inapplicable(
            reference,
            format!("row sums vary over the labelled neighbourhoods ({lo} to {hi})"),
        ));
    }

    let gt_x = g.tr_mul_dense(x);
    let terms: Vec<LowerTerm> = graph
        .neighbors(reference)
        .iter()
        .map(|&k| LowerTerm {
            k,
            column_norm: gt_x.row(k).norm(),
            row_sum: g.row_sum(k),
        })
        .collect();
    let min_product = terms
        .iter()
        .map(|t| t.column_norm * t.row_sum)
        .fold(f64::INFINITY, f64::min);
    let max_column_norm = terms.iter().map(|t| t.column_norm).fold(0.0, f64::max);
    let prefactor = spec.lipschitz_l.powi(2) * spec.b * spec.d_bound * spec.r / (spec.m() as f64).sqrt();
    Ok(LowerBound {
        value: Some((prefactor * min_product).max(0.0)),
        applicable: true,
        reason: None,
        reference_node: reference,
        terms,
        max_column_norm,
    })
}

/// What the generalization bound uses as the complexity of `F_{D,R}`.
#[derive(Debug, Clone, Copy)]
pub enum Complexity<'a> {
    Bound(&'a BoundReport),
    Estimate(&'a RcEstimate),
}

impl Complexity<'_> {
    pub fn value(&self) -> f64 {
        match self {
            Complexity::Bound(b) => b.upper_thm1,
            Complexity::Estimate(e) => e.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationBound {
    pub value: f64,
    /// `2·2α·complexity`
    pub complexity_term: f64,
    /// `√(2·ln(2/δ)/n_count)`
    pub deviation_term: f64,
}

pub fn generalization_bound_thm3(
    empirical_risk: f64,
    complexity: Complexity<'_>,
    alpha_l: f64,
    delta: f64,
    n_count: usize,
) -> Result<GeneralizationBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    if !(alpha_l >= 0.0 && alpha_l.is_finite()) {
        return Err(Error::invalid("alpha_l must be nonnegative"));
    }
    if n_count == 0 {
        return Err(Error::invalid("n_count must be positive"));
    }
    if !empirical_risk.is_finite() {
        return Err(Error::invalid("empirical risk is not finite"));
    }
    let complexity_term = 2.0 * (2.0 * alpha_l * complexity.value());
    let deviation_term = (2.0 * (2.0 / delta).ln() / n_count as f64).sqrt();
    Ok(GeneralizationBound {
        value: empirical_risk + complexity_term + deviation_term,
        complexity_term,
        deviation_term,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFamily {
    ErUnnormalized,
    ErNormalized,
    RegularUnnormalized,
    RegularNormalized,
}

impl RateFamily {
    pub fn label(&self) -> &'static str {
        match self {
            RateFamily::ErUnnormalized => "er_unnormalized",
            RateFamily::ErNormalized => "er_normalized",
            RateFamily::RegularUnnormalized => "regular_unnormalized",
            RateFamily::RegularNormalized => "regular_normalized",
        }
    }

    pub fn filter_kind(&self) -> FilterKind {
        match self {
            RateFamily::ErUnnormalized | RateFamily::RegularUnnormalized => FilterKind::Unnormalized,
            RateFamily::ErNormalized | RateFamily::RegularNormalized => FilterKind::RandomWalk,
        }
    }

    pub fn is_er(&self) -> bool {
        matches!(self, RateFamily::ErUnnormalized | RateFamily::ErNormalized)
    }
}

/// Labelled-set size as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    Fixed(usize),
    /// `ceil(fraction·n)`
    Fraction(f64),
}

impl MRule {
    pub fn m_for(&self, n: usize) -> Result<usize> {
        let m = match *self {
            MRule::Fixed(m) => m,
            MRule::Fraction(f) if f > 0.0 && f <= 1.0 => (f * n as f64).ceil() as usize,
            MRule::Fraction(f) => return Err(Error::invalid(format!("m fraction {f} outside (0, 1]"))),
        };
        if m == 0 || m > n {
            return Err(Error::invalid(format!("m = {m} is not in 1..={n}")));
        }
        Ok(m)
    }
}

/// `L, B, R, D` shared by every row of a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub lipschitz_l: f64,
    pub b: f64,
    pub r: f64,
    pub d_bound: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            lipschitz_l: 1.0,
            b: 1.0,
            r: 1.0,
            d_bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub family: RateFamily,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub m_rule: MRule,
    /// `c` in `p = c·ln(n)/n`
    pub p_scale: f64,
    pub ring_degree: usize,
    pub constants: BoundConstants,
    pub placement: Placement,
}

impl RateConfig {
    pub fn new(family: RateFamily, sizes: Vec<usize>, seeds: Vec<u64>, m_rule: MRule) -> Self {
        Self {
            family,
            sizes,
            seeds,
            m_rule,
            p_scale: 2.0,
            ring_degree: 2,
            constants: BoundConstants::default(),
            placement: Placement::Prefix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub seed: u64,
    pub lambda_max: f64,
    pub q: usize,
    pub relaxed: bool,
    pub upper_thm1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub n: usize,
    pub mean_lambda_max: f64,
    pub mean_q: f64,
    pub mean_upper_thm1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub family: RateFamily,
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummary>,
}

fn csv_float(v: f64) -> String {
    format!("{v:.17e}")
}

impl RateTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,lambda_max,q,relaxed,upper_thm1\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.seed,
                csv_float(r.lambda_max),
                r.q,
                r.relaxed,
                csv_float(r.upper_thm1)
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("n,mean_lambda_max,mean_q,mean_upper_thm1\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.n,
                csv_float(s.mean_lambda_max),
                csv_float(s.mean_q),
                csv_float(s.mean_upper_thm1)
            ));
        }
        out
    }

    /// Least-squares slope of `ln(mean upper)` against `ln(ln n)`.
    pub fn loglog_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .summary
            .iter()
            .filter(|s| s.n >= 3 && s.mean_upper_thm1 > 0.0)
            .map(|s| ((s.n as f64).ln().ln(), s.mean_upper_thm1.ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Graph sampled for one rate-table row.
pub fn rate_graph(cfg: &RateConfig, n: usize, seed: u64) -> Result<Graph> {
    if cfg.family.is_er() {
        let p = (cfg.p_scale * (n as f64).ln() / n as f64).min(1.0);
        gen_erdos_renyi(n, p, seed)
    } else {
        gen_regular(n, cfg.ring_degree, seed)
    }
}

fn rate_row(cfg: &RateConfig, n: usize, seed: u64) -> Result<RateRow> {
    let graph = Arc::new(rate_graph(cfg, n, seed)?);
    let filter = build_filter(&graph, cfg.family.filter_kind())?;
    let m = cfg.m_rule.m_for(n)?;
    let labeled = choose_labeled(n, m, cfg.placement, seed)?;
    let stats = degree_stats(&graph);
    let c = cfg.constants;
    let spec = HypothesisSpec::new(c.lipschitz_l, c.b, c.r, c.d_bound, stats.max_degree, labeled)?;
    let ordering = NeighborOrdering::ascending(&graph, &spec.labeled)?;
    let opts = BoundOptions {
        relax_heterogeneous: true,
        allow_non_shift: false,
    };
    let report = upper_bound_thm1_with(&spec, &filter, &ordering, opts)?;
    Ok(RateRow {
        n,
        seed,
        lambda_max: report.terms.lambda_max_abs,
        q: report.q,
        relaxed: report.relaxed,
        upper_thm1: report.upper_thm1,
    })
}

/// One row per `(n, seed)` in input order, plus per-`n` means.
pub fn rate_table(cfg: &RateConfig) -> Result<RateTable> {
    if cfg.sizes.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::invalid("rate table needs at least one size and one seed"));
    }
    if cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly increasing"));
    }
    if !(cfg.p_scale > 0.0 && cfg.p_scale.is_finite()) {
        return Err(Error::invalid("p_scale must be positive"));
    }
    let jobs: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, seed)| rate_row(cfg, n, seed))
        .collect::<Result<Vec<_>>>()?;
    let per = cfg.seeds.len() as f64;
    let summary = rows
        .chunks(cfg.seeds.len())
        .map(|chunk| RateSummary {
            n: chunk[0].n,
            mean_lambda_max: chunk.iter().map(|r| r.lambda_max).sum::<f64>() / per,
            mean_q: chunk.iter().map(|r| r.q as f64).sum::<f64>() / per,
            mean_upper_thm1: chunk.iter().map(|r| r.upper_thm1).sum::<f64>() / per,
        })
        .collect();
    Ok(RateTable {
        family: cfg.family,
        rows,
        summary,
    })
}
