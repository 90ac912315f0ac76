//! One-hidden-layer GCN `f = σ(g · σ(g·X·W1) · w2)` over a fixed graph, its
//! norm-constrained parameter class, losses and projected gradient training.
//!
//! Naming: `lipschitz_l` is the activation constant, `d_bound` the bound on
//! `‖w2‖₂` and `r` the bound on `‖W1‖_F`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{pairwise_mean, stream_rng, tag};
use crate::sparse::CsrMatrix;
use crate::spectral::GraphFilter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    /// `σ(s) = scale·s`
    Linear,
    LeakyRelu(f64),
}

/// Positively homogeneous, Lipschitz activation with `σ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub lipschitz_l: f64,
}

impl Activation {
    pub fn relu() -> Self {
        Self {
            kind: ActivationKind::Relu,
            lipschitz_l: 1.0,
        }
    }

    pub fn linear(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("linear activation scale must be positive"));
        }
        Ok(Self {
            kind: ActivationKind::Linear,
            lipschitz_l: scale,
        })
    }

    pub fn leaky_relu(slope: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&slope) {
            return Err(Error::invalid("leaky_relu slope must lie in [0, 1)"));
        }
        Ok(Self {
            kind: ActivationKind::LeakyRelu(slope),
            lipschitz_l: 1.0,
        })
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Linear => self.lipschitz_l * z,
            ActivationKind::LeakyRelu(a) => {
                if z > 0.0 {
                    z
                } else {
                    a * z
                }
            }
        }
    }

    /// Derivative, with the subgradient at 0 taken from the left branch.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Linear => self.lipschitz_l,
            ActivationKind::LeakyRelu(a) => {
                if z > 0.0 {
                    1.0
                } else {
                    a
                }
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, ActivationKind::Linear)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct GcnParams {
    /// `d×k`
    pub w1: DMatrix<f64>,
    /// length `k`
    pub w2: DVector<f64>,
    pub activation: Activation,
}

/// Checkpoint form `{d, k, W1 (row-major), w2, activation}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub d: usize,
    pub k: usize,
    #[serde(rename = "W1")]
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub activation: Activation,
}

impl TryFrom<ParamsJson> for GcnParams {
    type Error = Error;

    fn try_from(raw: ParamsJson) -> Result<Self> {
        if raw.w1.len() != raw.d * raw.k || raw.w2.len() != raw.k {
            return Err(Error::dims(format!(
                "checkpoint declares d={}, k={} but holds {} W1 and {} w2 entries",
                raw.d,
                raw.k,
                raw.w1.len(),
                raw.w2.len()
            )));
        }
        Ok(GcnParams {
            w1: DMatrix::from_row_slice(raw.d, raw.k, &raw.w1),
            w2: DVector::from_vec(raw.w2),
            activation: raw.activation,
        })
    }
}

impl From<GcnParams> for ParamsJson {
    fn from(p: GcnParams) -> Self {
        let (d, k) = p.w1.shape();
        ParamsJson {
            d,
            k,
            w1: (0..d).flat_map(|i| (0..k).map(move |j| (i, j))).map(|ij| p.w1[ij]).collect(),
            w2: p.w2.iter().copied().collect(),
            activation: p.activation,
        }
    }
}

impl GcnParams {
    pub fn new(w1: DMatrix<f64>, w2: DVector<f64>, activation: Activation) -> Result<Self> {
        if w1.ncols() != w2.len() {
            return Err(Error::dims(format!(
                "W1 has {} columns but w2 has length {}",
                w1.ncols(),
                w2.len()
            )));
        }
        Ok(Self { w1, w2, activation })
    }

    pub fn zeros(d: usize, k: usize, activation: Activation) -> Self {
        Self {
            w1: DMatrix::zeros(d, k),
            w2: DVector::zeros(k),
            activation,
        }
    }

    /// Entries i.i.d. uniform in `[−1/√(dk), 1/√(dk)]`.
    pub fn random_uniform(d: usize, k: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = stream_rng(seed, tag::INIT);
        let a = 1.0 / ((d * k) as f64).sqrt();
        let w1 = DMatrix::from_fn(d, k, |_, _| rng.random_range(-a..=a));
        let w2 = DVector::from_fn(k, |_, _| rng.random_range(-a..=a));
        Self { w1, w2, activation }
    }

    pub fn d(&self) -> usize {
        self.w1.nrows()
    }

    pub fn width(&self) -> usize {
        self.w1.ncols()
    }
}

/// Constants defining `F_{D,R}` on a labelled node set `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub lipschitz_l: f64,
    /// feature norm bound
    pub b: f64,
    /// Frobenius bound on W1
    pub r: f64,
    /// ℓ₂ bound on w2
    pub d_bound: f64,
    /// homogeneous neighbour count (self included)
    pub q: usize,
    /// labelled node indices Ω
    pub labeled: Vec<usize>,
}

impl HypothesisSpec {
    pub fn new(
        lipschitz_l: f64,
        b: f64,
        r: f64,
        d_bound: f64,
        q: usize,
        labeled: Vec<usize>,
    ) -> Result<Self> {
        let spec = Self {
            lipschitz_l,
            b,
            r,
            d_bound,
            q,
            labeled,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lipschitz_l", self.lipschitz_l),
            ("b", self.b),
            ("r", self.r),
            ("d_bound", self.d_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.q == 0 {
            return Err(Error::invalid("q must be positive"));
        }
        if self.labeled.is_empty() {
            return Err(Error::invalid("labelled set is empty"));
        }
        let mut sorted = self.labeled.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("labelled set contains duplicates"));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.labeled.len()
    }

    /// Checks node indices against the graph size and `max_i ‖x_i‖ ≤ B`.
    pub fn check_instance(&self, n: usize, x: &DMatrix<f64>) -> Result<()> {
        if let Some(&bad) = self.labeled.iter().find(|&&v| v >= n) {
            return Err(Error::invalid(format!("labelled node {bad} outside 0..{n}")));
        }
        if self.m() > n {
            return Err(Error::invalid(format!("m = {} exceeds n = {n}", self.m())));
        }
        if x.nrows() != n {
            return Err(Error::dims(format!("features have {} rows, graph has {n} nodes", x.nrows())));
        }
        let max_norm = max_row_norm(x);
        if max_norm > self.b * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "feature norm {max_norm} exceeds B = {}",
                self.b
            )));
        }
        Ok(())
    }
}

pub fn max_row_norm(x: &DMatrix<f64>) -> f64 {
    x.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Lipschitz constant of `ℓ(y, ·)` on the operative output range
    pub alpha_l: f64,
}

impl LossSpec {
    pub fn hinge() -> Self {
        Self {
            kind: LossKind::Hinge,
            alpha_l: 1.0,
        }
    }

    /// Squared loss on outputs `|f| ≤ f_max` against labels `|y| ≤ y_max`.
    pub fn squared(y_max: f64, f_max: f64) -> Self {
        Self {
            kind: LossKind::Squared,
            alpha_l: 2.0 * (y_max + f_max),
        }
    }

    pub fn loss(&self, y: f64, f: f64) -> f64 {
        match self.kind {
            LossKind::Hinge => (1.0 - y * f).max(0.0),
            LossKind::Squared => (y - f).powi(2),
        }
    }

    /// `∂ℓ/∂f`
    pub fn dloss(&self, y: f64, f: f64) -> f64 {
        match self.kind {
            LossKind::Hinge => {
                if y * f < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Squared => 2.0 * (f - y),
        }
    }
}

/// Lipschitz constant of `X ↦ f_i(X)` w.r.t. `max_j ‖x_j − x'_j‖₂`, valid
/// for symmetric filters: `L²·q·λ²·R·D`.
pub fn input_lipschitz_constant(spec: &HypothesisSpec, lambda_max_abs: f64) -> f64 {
    spec.lipschitz_l.powi(2) * spec.q as f64 * lambda_max_abs.powi(2) * spec.r * spec.d_bound
}

/// Bound on `|f_i|` over the class for symmetric filters: `L²·q·λ²·B·R·D`.
pub fn output_bound(spec: &HypothesisSpec, lambda_max_abs: f64) -> f64 {
    input_lipschitz_constant(spec, lambda_max_abs) * spec.b
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `g·X·W1`, n×k
    pub pre_hidden: DMatrix<f64>,
    /// σ(pre_hidden)
    pub hidden: DMatrix<f64>,
    /// `g·hidden·w2`, length n
    pub pre_out: DVector<f64>,
    pub out: DVector<f64>,
}

/// `g·X`, shared by every forward pass over the same features.
pub fn propagate_features(filter: &GraphFilter, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != filter.n() {
        return Err(Error::dims(format!(
            "features have {} rows, filter has {} nodes",
            x.nrows(),
            filter.n()
        )));
    }
    Ok(filter.matrix().mul_dense(x))
}

fn check_params(params: &GcnParams, gx: &DMatrix<f64>) -> Result<()> {
    if params.w1.nrows() != gx.ncols() {
        return Err(Error::dims(format!(
            "W1 expects d = {}, features have d = {}",
            params.w1.nrows(),
            gx.ncols()
        )));
    }
    if params.w1.ncols() != params.w2.len() {
        return Err(Error::dims("W1 width and w2 length differ"));
    }
    Ok(())
}

pub fn forward_trace(params: &GcnParams, g: &CsrMatrix, gx: &DMatrix<f64>) -> ForwardTrace {
    let act = params.activation;
    let pre_hidden = gx * &params.w1;
    let hidden = pre_hidden.map(|z| act.apply(z));
    let mixed = &hidden * &params.w2;
    let pre_out = g.mul_vec(&mixed);
    let out = pre_out.map(|z| act.apply(z));
    ForwardTrace {
        pre_hidden,
        hidden,
        pre_out,
        out,
    }
}

/// Node outputs `f_i` for every node.
pub fn forward(params: &GcnParams, filter: &GraphFilter, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let gx = propagate_features(filter, x)?;
    check_params(params, &gx)?;
    Ok(forward_trace(params, filter.matrix(), &gx).out)
}

/// Gradient of `Σ_i upstream_i · f_i` with respect to `(W1, w2)`.
pub fn backward(
    params: &GcnParams,
    g: &CsrMatrix,
    gx: &DMatrix<f64>,
    trace: &ForwardTrace,
    upstream: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let act = params.activation;
    let d_pre_out = upstream.zip_map(&trace.pre_out, |u, z| u * act.derivative(z));
    let d_mixed = g.tr_mul_vec(&d_pre_out);
    let grad_w2 = trace.hidden.tr_mul(&d_mixed);
    let d_hidden = &d_mixed * params.w2.transpose();
    let d_pre_hidden = d_hidden.zip_map(&trace.pre_hidden, |u, z| u * act.derivative(z));
    let grad_w1 = gx.tr_mul(&d_pre_hidden);
    (grad_w1, grad_w2)
}

/// Radial projection onto `‖W1‖_F ≤ R`, `‖w2‖₂ ≤ D`.
pub fn project_params(params: &GcnParams, spec: &HypothesisSpec) -> GcnParams {
    let mut out = params.clone();
    project_in_place(&mut out, spec.r, spec.d_bound);
    out
}

pub(crate) fn project_in_place(params: &mut GcnParams, r: f64, d_bound: f64) {
    let n1 = params.w1.norm();
    if n1 > r {
        params.w1 *= r / n1;
    }
    let n2 = params.w2.norm();
    if n2 > d_bound {
        params.w2 *= d_bound / n2;
    }
}

/// Mean loss over `nodes` with matching `labels`.
pub fn risk_on(
    params: &GcnParams,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    nodes: &[usize],
    labels: &[f64],
    loss: &LossSpec,
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::invalid("risk over an empty node set"));
    }
    if nodes.len() != labels.len() {
        return Err(Error::dims("one label per node required"));
    }
    let f = forward(params, filter, x)?;
    if let Some(&bad) = nodes.iter().find(|&&v| v >= f.len()) {
        return Err(Error::invalid(format!("node {bad} outside the graph")));
    }
    let losses: Vec<f64> = nodes.iter().zip(labels).map(|(&v, &y)| loss.loss(y, f[v])).collect();
    Ok(pairwise_mean(&losses))
}

/// `E_m(f)`: mean loss over Ω. `labels` follows the order of `spec.labeled`.
pub fn empirical_risk(
    params: &GcnParams,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    spec: &HypothesisSpec,
    labels: &[f64],
    loss: &LossSpec,
) -> Result<f64> {
    risk_on(params, filter, x, &spec.labeled, labels, loss)
}

/// Risk and its gradient over `nodes` for precomputed `g·X`.
pub fn risk_and_grad(
    params: &GcnParams,
    g: &CsrMatrix,
    gx: &DMatrix<f64>,
    nodes: &[usize],
    labels: &[f64],
    loss: &LossSpec,
) -> (f64, DMatrix<f64>, DVector<f64>) {
    let trace = forward_trace(params, g, gx);
    let m = nodes.len() as f64;
    let mut upstream = DVector::zeros(g.nrows());
    let mut losses = Vec::with_capacity(nodes.len());
    for (&v, &y) in nodes.iter().zip(labels) {
        losses.push(loss.loss(y, trace.out[v]));
        upstream[v] += loss.dloss(y, trace.out[v]) / m;
    }
    let (g1, g2) = backward(params, g, gx, &trace, &upstream);
    (pairwise_mean(&losses), g1, g2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// hidden width k
    pub width: usize,
    pub activation: Activation,
    /// `None` is full-batch
    pub batch_size: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GcnParams,
    /// risk on Ω before training and after each epoch (`epochs + 1` values)
    pub history: Vec<f64>,
    /// largest norms over every iterate, initialization included
    pub max_w1_norm: f64,
    pub max_w2_norm: f64,
}

impl TrainOutcome {
    /// CSV `epoch,risk`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,risk\n");
        for (e, r) in self.history.iter().enumerate() {
            out.push_str(&format!("{e},{r}\n"));
        }
        out
    }
}

/// Projected gradient descent on the empirical risk over Ω; every iterate is
/// projected back onto the norm balls of `spec`.
pub fn train_projected_sgd(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    labels: &[f64],
    loss: &LossSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    spec.validate()?;
    spec.check_instance(filter.n(), x)?;
    if labels.len() != spec.m() {
        return Err(Error::dims("one label per labelled node required"));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(Error::invalid("learning rate must be nonnegative"));
    }
    if cfg.width == 0 {
        return Err(Error::invalid("hidden width must be positive"));
    }
    if cfg.batch_size == Some(0) {
        return Err(Error::invalid("batch size must be positive"));
    }
    let g = filter.matrix();
    let gx = propagate_features(filter, x)?;
    let mut params = GcnParams::random_uniform(x.ncols(), cfg.width, cfg.activation, cfg.seed);
    project_in_place(&mut params, spec.r, spec.d_bound);
    let mut max_w1 = params.w1.norm();
    let mut max_w2 = params.w2.norm();

    let full_risk = |p: &GcnParams, epoch: usize| -> Result<f64> {
        let trace = forward_trace(p, g, &gx);
        let losses: Vec<f64> = spec
            .labeled
            .iter()
            .zip(labels)
            .map(|(&v, &y)| loss.loss(y, trace.out[v]))
            .collect();
        let risk = pairwise_mean(&losses);
        if risk.is_finite() {
            Ok(risk)
        } else {
            Err(Error::Divergence { epoch })
        }
    };

    let mut history = Vec::with_capacity(cfg.epochs + 1);
    history.push(full_risk(&params, 0)?);
    let mut shuffle_rng = stream_rng(cfg.seed, tag::SHUFFLE);
    let mut order: Vec<usize> = (0..spec.m()).collect();
    for epoch in 1..=cfg.epochs {
        let batches: Vec<Vec<usize>> = match cfg.batch_size {
            None => vec![order.clone()],
            Some(bs) => {
                order.shuffle(&mut shuffle_rng);
                order.chunks(bs).map(<[usize]>::to_vec).collect()
            }
        };
        for batch in batches {
            let nodes: Vec<usize> = batch.iter().map(|&i| spec.labeled[i]).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
            let (_, g1, g2) = risk_and_grad(&params, g, &gx, &nodes, &ys, loss);
            if g1.iter().chain(g2.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            params.w1 -= g1 * cfg.lr;
            params.w2 -= g2 * cfg.lr;
            if !(params.w1.norm().is_finite() && params.w2.norm().is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            project_in_place(&mut params, spec.r, spec.d_bound);
            max_w1 = max_w1.max(params.w1.norm());
            max_w2 = max_w2.max(params.w2.norm());
        }
        history.push(full_risk(&params, epoch)?);
    }
    Ok(TrainOutcome {
        params,
        history,
        max_w1_norm: max_w1,
        max_w2_norm: max_w2,
    })
}

/// Where the labelled set Ω sits among the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// nodes `0..m`
    Prefix,
    /// uniformly random without replacement, seeded
    Random,
}

/// Ω of size `m` out of `n` nodes, returned in ascending order.
pub fn choose_labeled(n: usize, m: usize, placement: Placement, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("labelled-set size {m} must lie in 1..={n}")));
    }
    Ok(match placement {
        Placement::Prefix => (0..m).collect(),
        Placement::Random => {
            let mut rng = stream_rng(seed, tag::OMEGA);
            let mut nodes: Vec<usize> = (0..n).collect();
            let (chosen, _) = nodes.partial_shuffle(&mut rng, m);
            let mut chosen = chosen.to_vec();
            chosen.sort_unstable();
            chosen
        }
    })
}

/// How planted-teacher outputs become labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `+1` above the median teacher output over all nodes, `−1` otherwise
    Sign,
    Identity,
}

/// Labels for every node from a planted teacher network.
pub fn planted_labels(
    teacher: &GcnParams,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    link: Link,
) -> Result<DVector<f64>> {
    let f = forward(teacher, filter, x)?;
    Ok(match link {
        Link::Identity => f,
        Link::Sign => {
            let mut sorted: Vec<f64> = f.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            f.map(|v| if v >= median { 1.0 } else { -1.0 })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{gen_regular, Graph};
    use crate::spectral::{build_filter, FilterKind};
    use std::sync::Arc;

    fn c8_filter() -> GraphFilter {
        build_filter(&Arc::new(gen_regular(8, 2, 0).unwrap()), FilterKind::Unnormalized).unwrap()
    }

    fn features(n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |i, j| ((i * 7 + j * 3) % 5) as f64 / 10.0 - 0.2)
    }

    fn spec(labeled: Vec<usize>) -> HypothesisSpec {
        HypothesisSpec::new(1.0, 1.0, 1.0, 1.0, 3, labeled).unwrap()
    }

    #[test]
    fn zero_first_layer_gives_zero_output() {
        let f = c8_filter();
        let p = GcnParams::zeros(2, 3, Activation::relu());
        let out = forward(&p, &f, &features(8, 2)).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_network_matches_matrix_chain() {
        let f = c8_filter();
        let x = features(8, 3);
        let p = GcnParams::random_uniform(3, 4, Activation::linear(1.0).unwrap(), 11);
        let g = f.matrix().to_dense();
        let expected = &g * &g * &x * &p.w1 * &p.w2;
        let got = forward(&p, &f, &x).unwrap();
        assert!((got - expected).amax() <= 1e-10);
    }

    #[test]
    fn forward_dimension_checks() {
        let f = c8_filter();
        let p = GcnParams::zeros(2, 3, Activation::relu());
        assert!(forward(&p, &f, &features(7, 2)).is_err());
        assert!(forward(&p, &f, &features(8, 3)).is_err());
        assert!(GcnParams::new(DMatrix::zeros(2, 3), DVector::zeros(2), Activation::relu()).is_err());
    }

    #[test]
    fn projection_cases() {
        let s = spec(vec![0, 1]);
        let inside = GcnParams::new(
            DMatrix::from_element(2, 2, 0.1),
            DVector::from_element(2, 0.1),
            Activation::relu(),
        )
        .unwrap();
        assert_eq!(project_params(&inside, &s), inside);

        let big = GcnParams::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            DVector::from_vec(vec![3.0, 4.0]),
            Activation::relu(),
        )
        .unwrap();
        assert_eq!(big.w1.norm(), 2.0 * s.r);
        let p = project_params(&big, &s);
        assert!((p.w1.norm() - s.r).abs() < 1e-15);
        assert!((p.w1.clone() * 2.0 - &big.w1).amax() < 1e-15);
        assert!((p.w2.norm() - s.d_bound).abs() < 1e-15);

        let zero = GcnParams::zeros(2, 2, Activation::relu());
        assert_eq!(project_params(&zero, &s), zero);
    }

    #[test]
    fn risk_examples() {
        let f = c8_filter();
        let x = features(8, 2);
        let p = GcnParams::random_uniform(2, 3, Activation::linear(1.0).unwrap(), 3);
        let s = spec(vec![0, 2, 5]);
        let out = forward(&p, &f, &x).unwrap();
        let exact: Vec<f64> = s.labeled.iter().map(|&v| out[v]).collect();
        let sq = LossSpec::squared(1.0, 1.0);
        assert_eq!(empirical_risk(&p, &f, &x, &s, &exact, &sq).unwrap(), 0.0);

        let hinge = LossSpec::hinge();
        let margin: Vec<f64> = exact.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let scaled = GcnParams::new(p.w1.clone() * 1e3, p.w2.clone() * 1e3, p.activation).unwrap();
        let out_big = forward(&scaled, &f, &x).unwrap();
        assert!(s.labeled.iter().zip(&margin).all(|(&v, &y)| y * out_big[v] >= 1.0));
        assert_eq!(empirical_risk(&scaled, &f, &x, &s, &margin, &hinge).unwrap(), 0.0);

        let zero = GcnParams::zeros(2, 3, Activation::relu());
        let pm = vec![1.0, -1.0, 1.0];
        assert_eq!(empirical_risk(&zero, &f, &x, &s, &pm, &hinge).unwrap(), 1.0);

        assert!(risk_on(&zero, &f, &x, &[], &[], &hinge).is_err());
    }

    #[test]
    fn loss_constants() {
        assert_eq!(LossSpec::hinge().alpha_l, 1.0);
        assert_eq!(LossSpec::squared(1.0, 2.5).alpha_l, 7.0);
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let f = c8_filter();
        let x = features(8, 2);
        let s = spec(vec![0, 1, 2, 3]);
        let labels = vec![1.0, -1.0, 1.0, -1.0];
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 5,
            width: 3,
            activation: Activation::relu(),
            batch_size: None,
            seed: 9,
        };
        let out = train_projected_sgd(&s, &f, &x, &labels, &LossSpec::hinge(), &cfg).unwrap();
        let init = project_params(&GcnParams::random_uniform(2, 3, Activation::relu(), 9), &s);
        assert_eq!(out.params, init);
        assert_eq!(out.history.len(), 6);
        assert!(out.history.windows(2).all(|w| w[0] == w[1]));
        assert!(out.history_csv().starts_with("epoch,risk\n0,"));
    }

    #[test]
    fn teacher_student_descends_and_stays_feasible() {
        let f = c8_filter();
        let x = features(8, 2) * 2.0;
        let s = HypothesisSpec::new(1.0, 1.0, 1.5, 1.5, 3, vec![0, 1, 2, 3, 4]).unwrap();
        let teacher = project_params(
            &GcnParams::random_uniform(2, 3, Activation::relu(), 100),
            &s,
        );
        let all = planted_labels(&teacher, &f, &x, Link::Identity).unwrap();
        let labels: Vec<f64> = s.labeled.iter().map(|&v| all[v]).collect();
        let cfg = TrainConfig {
            lr: 0.05,
            epochs: 500,
            width: 3,
            activation: Activation::relu(),
            batch_size: None,
            seed: 1,
        };
        let loss = LossSpec::squared(1.0, 1.0);
        let out = train_projected_sgd(&s, &f, &x, &labels, &loss, &cfg).unwrap();
        assert!(out.history.last().unwrap() < &out.history[0]);
        assert!(out.max_w1_norm <= s.r + 1e-12);
        assert!(out.max_w2_norm <= s.d_bound + 1e-12);

        let mini = TrainConfig { batch_size: Some(2), ..cfg };
        let outm = train_projected_sgd(&s, &f, &x, &labels, &loss, &mini).unwrap();
        let again = train_projected_sgd(&s, &f, &x, &labels, &loss, &mini).unwrap();
        assert_eq!(outm.history, again.history);
        assert!(outm.max_w1_norm <= s.r + 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let f = c8_filter();
        let x = features(8, 2);
        let mut s = spec(vec![0, 1]);
        s.r = 1e300;
        s.d_bound = 1e300;
        s.b = 10.0;
        let cfg = TrainConfig {
            lr: 1e300,
            epochs: 10,
            width: 2,
            activation: Activation::linear(1.0).unwrap(),
            batch_size: None,
            seed: 0,
        };
        let res = train_projected_sgd(&s, &f, &x, &[5.0, -5.0], &LossSpec::squared(5.0, 5.0), &cfg);
        assert!(matches!(res, Err(Error::Divergence { .. })));
    }

    #[test]
    fn feature_norm_checked() {
        let s = spec(vec![0]);
        assert!(s.check_instance(8, &(features(8, 2) * 100.0)).is_err());
        assert!(s.check_instance(8, &features(8, 2)).is_ok());
        assert!(s.check_instance(3, &features(3, 2)).is_ok());
        assert!(HypothesisSpec::new(1.0, 0.0, 1.0, 1.0, 3, vec![0]).is_err());
        assert!(HypothesisSpec::new(1.0, 1.0, 1.0, 1.0, 3, vec![0, 0]).is_err());
        let _ = Graph::from_edges(1, [], None).unwrap();
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = GcnParams::random_uniform(2, 3, Activation::leaky_relu(0.1).unwrap(), 5);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["d"], 2);
        assert_eq!(v["k"], 3);
        assert_eq!(v["W1"][1], p.w1[(0, 1)]);
        let back: GcnParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"d":2,"k":2,"W1":[1.0],"w2":[1.0,2.0],"activation":{"kind":"relu","lipschitz_l":1.0}}"#;
        assert!(serde_json::from_str::<GcnParams>(bad).is_err());
    }

    #[test]
    fn labelled_set_placement() {
        assert_eq!(choose_labeled(8, 3, Placement::Prefix, 0).unwrap(), vec![0, 1, 2]);
        let a = choose_labeled(50, 10, Placement::Random, 4).unwrap();
        assert_eq!(a, choose_labeled(50, 10, Placement::Random, 4).unwrap());
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(choose_labeled(5, 6, Placement::Prefix, 0).is_err());
        assert!(choose_labeled(5, 0, Placement::Random, 0).is_err());
    }

    #[test]
    fn activation_validation() {
        assert!(Activation::linear(0.0).is_err());
        assert!(Activation::leaky_relu(1.0).is_err());
        assert!(Activation::leaky_relu(-0.1).is_err());
        let l = Activation::leaky_relu(0.2).unwrap();
        assert_eq!(l.apply(-1.0), -0.2);
        assert_eq!(Activation::relu().derivative(0.0), 0.0);
    }
}
