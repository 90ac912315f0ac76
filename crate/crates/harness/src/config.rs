//! Scenario configuration: a single JSON document.
//!
//! ```json
//! {
//!   "scenario": "sandwich",
//!   "seed": 0,
//!   "graph": {"family": "regular", "n": 8, "ring_degree": 2},
//!   "filter": "unnormalized",
//!   "constants": {"lipschitz_l": 1, "b": 1, "r": 1, "d_bound": 1},
//!   "omega": {"m": 4, "placement": "prefix"},
//!   "features": {"kind": "canonical", "d": 2},
//!   "activation": {"kind": "linear"},
//!   "estimator": {"method": "closed_form"}
//! }
//! ```
//!
//! Defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `seed` | 0 |
//! | `graph.ring_degree` | 2 |
//! | `graph.p_scale` | 2 (ER edge probability `p_scale·ln(n)/n` when `p` is absent) |
//! | `filter` | `unnormalized` |
//! | `constants.*` | 1 |
//! | `omega.placement` | `random` |
//! | `features` | `{"kind": "canonical", "d": 2}` |
//! | `activation` | `{"kind": "linear"}`, scale `constants.lipschitz_l` |
//! | `estimator.method` | `closed_form` for linear activations, `pga` otherwise |
//! | `estimator.num_mc` | absent: exhaustive sign enumeration |
//! | `estimator.restarts`, `steps`, `lr`, `width` | 20, 300, 0.25, 2 |
//! | `estimator.grid_error` | 1e-3 (brute-force target when `grid_resolution` is absent) |
//! | `scaling.seeds_per_size` | 20 |
//! | `scaling.p_scale`, `ring_degree` | 2, 2 |
//! | `training.runs`, `epochs`, `lr`, `width`, `teacher_width` | 50, 200, 0.05, 4, 4 |
//! | `training.loss`, `link` | `hinge`, `sign` |
//! | `delta` | 0.05 |
//! | `n_count` | `n` |
//! | `output_dir` | `radbound_out` |

use std::fmt;

use radbound_core::bound_calc::{BoundConstants, MRule, RateFamily};
use radbound_core::gcn_model::{Activation, Link, LossKind, Placement};
use radbound_core::FilterKind;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Bound,
    Estimate,
    Sandwich,
    Scaling,
    Gap,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Bound => "bound",
            Scenario::Estimate => "estimate",
            Scenario::Sandwich => "sandwich",
            Scenario::Scaling => "scaling",
            Scenario::Gap => "gap",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "bound" => Scenario::Bound,
            "estimate" => Scenario::Estimate,
            "sandwich" => Scenario::Sandwich,
            "scaling" => Scenario::Scaling,
            "gap" => Scenario::Gap,
            _ => return None,
        })
    }

    fn needs_instance(&self) -> bool {
        !matches!(self, Scenario::Scaling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    Regular { ring_degree: usize },
    ErdosRenyi { p: Option<f64>, p_scale: f64 },
    Complete,
    EdgeList { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    #[serde(flatten)]
    pub family: GraphFamily,
    /// node count; for edge lists, optional padding beyond the largest index
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// `x_j = B·e₁`
    Canonical,
    /// uniform direction, radius `B·U^{1/d}`
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaConfig {
    pub m: usize,
    pub placement: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    ClosedForm,
    Pga,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: EstimatorMethod,
    /// `None` enumerates all sign patterns
    pub num_mc: Option<usize>,
    pub restarts: usize,
    pub steps: usize,
    pub lr: f64,
    pub width: usize,
    pub grid_resolution: Option<usize>,
    pub grid_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub families: Vec<RateFamily>,
    pub sizes: Vec<usize>,
    pub seeds_per_size: usize,
    pub m_rule: MRule,
    pub p_scale: f64,
    pub ring_degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub runs: usize,
    pub epochs: usize,
    pub lr: f64,
    pub width: usize,
    pub teacher_width: usize,
    pub loss: LossKind,
    pub batch_size: Option<usize>,
    pub link: Link,
}

/// Count used in the deviation term of the generalization bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NCount {
    N,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub graph: Option<GraphConfig>,
    pub filter: FilterKind,
    pub constants: BoundConstants,
    pub omega: Option<OmegaConfig>,
    pub features: FeatureConfig,
    pub activation: Activation,
    pub estimator: EstimatorConfig,
    pub scaling: Option<ScalingConfig>,
    pub training: TrainingConfig,
    pub delta: f64,
    pub n_count: NCount,
    pub reference_node: Option<usize>,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

struct Walker {
    issues: Vec<ConfigIssue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Walker {
    fn fail(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            reason: reason.into(),
        });
    }

    /// Object at `path`, with unknown keys reported.
    fn object<'a>(&mut self, path: &str, v: &'a Value, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.fail(if path.is_empty() { "<root>" } else { path }, "expected an object");
            return None;
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.fail(join(path, key), "unknown key");
            }
        }
        Some(obj)
    }

    fn number(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<f64> {
        let v = obj.get(key)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.fail(join(path, key), "expected a number");
                None
            }
        }
    }

    fn positive(&mut self, path: &str, obj: &Map<String, Value>, key: &str, default: f64) -> f64 {
        match self.number(path, obj, key) {
            Some(x) if x > 0.0 => x,
            Some(x) => {
                self.fail(join(path, key), format!("must be positive, got {x}"));
                default
            }
            None => default,
        }
    }

    fn integer(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<u64> {
        let v = obj.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.fail(join(path, key), "expected a nonnegative integer");
                None
            }
        }
    }

    fn count(&mut self, path: &str, obj: &Map<String, Value>, key: &str, default: usize) -> usize {
        match self.integer(path, obj, key) {
            Some(0) => {
                self.fail(join(path, key), "must be positive");
                default
            }
            Some(x) => x as usize,
            None => default,
        }
    }

    fn optional_count(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<usize> {
        match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(_) => Some(self.count(path, obj, key, 1)),
        }
    }

    fn required_count(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> usize {
        if !obj.contains_key(key) {
            self.fail(join(path, key), "required");
            return 1;
        }
        self.count(path, obj, key, 1)
    }

    fn string<'a>(&mut self, path: &str, obj: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
        let v = obj.get(key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.fail(join(path, key), "expected a string");
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, path: &str, obj: &Map<String, Value>, key: &str, options: &[(&str, T)], default: T) -> T {
        let Some(s) = self.string(path, obj, key) else {
            return default;
        };
        match options.iter().find(|(name, _)| *name == s) {
            Some(&(_, v)) => v,
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.fail(join(path, key), format!("unknown value {s:?}, expected one of {}", names.join(", ")));
                default
            }
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "scenario", "seed", "graph", "filter", "constants", "omega", "features", "activation", "estimator", "scaling",
    "training", "delta", "n_count", "reference_node", "output_dir",
];

/// Parses and validates a config. `hint` is the scenario requested on the
/// command line; it fills a missing `scenario` and must agree with a
/// present one.
pub fn validate_config(raw: &str, hint: Option<Scenario>) -> Result<ScenarioConfig, Vec<ConfigIssue>> {
    let value: Value = if raw.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(raw).map_err(|e| {
            vec![ConfigIssue {
                path: "<root>".into(),
                reason: format!("invalid JSON: {e}"),
            }]
        })?
    };
    let mut w = Walker { issues: Vec::new() };
    let Some(top) = w.object("", &value, TOP_KEYS) else {
        return Err(w.issues);
    };

    let scenario = match (top.get("scenario"), hint) {
        (None, Some(h)) => h,
        (None, None) => {
            w.fail("scenario", "required (one of bound, estimate, sandwich, scaling, gap)");
            Scenario::Bound
        }
        (Some(v), hint) => match v.as_str().and_then(Scenario::parse) {
            Some(s) => {
                if let Some(h) = hint.filter(|h| *h != s) {
                    w.fail("scenario", format!("config is for {:?} but {:?} was requested", s.label(), h.label()));
                }
                s
            }
            None => {
                w.fail("scenario", "expected one of bound, estimate, sandwich, scaling, gap");
                hint.unwrap_or(Scenario::Bound)
            }
        },
    };

    let seed = w.integer("", top, "seed").unwrap_or(0);
    let constants = match top.get("constants") {
        None => BoundConstants::default(),
        Some(v) => match w.object("constants", v, &["lipschitz_l", "b", "r", "d_bound"]) {
            Some(c) => BoundConstants {
                lipschitz_l: w.positive("constants", c, "lipschitz_l", 1.0),
                b: w.positive("constants", c, "b", 1.0),
                r: w.positive("constants", c, "r", 1.0),
                d_bound: w.positive("constants", c, "d_bound", 1.0),
            },
            None => BoundConstants::default(),
        },
    };

    let graph = match top.get("graph") {
        None => {
            if scenario.needs_instance() {
                w.fail("graph", "required");
            }
            None
        }
        Some(v) => parse_graph(&mut w, v),
    };
    let omega = match top.get("omega") {
        None => {
            if scenario.needs_instance() {
                w.fail("omega.m", "required");
            }
            None
        }
        Some(v) => w.object("omega", v, &["m", "placement"]).map(|o| OmegaConfig {
            m: w.required_count("omega", o, "m"),
            placement: w.choice(
                "omega",
                o,
                "placement",
                &[("prefix", Placement::Prefix), ("random", Placement::Random)],
                Placement::Random,
            ),
        }),
    };
    let filter = parse_filter(&mut w, top.get("filter"));
    let features = match top.get("features") {
        None => FeatureConfig {
            kind: FeatureKind::Canonical,
            d: 2,
        },
        Some(v) => match w.object("features", v, &["kind", "d"]) {
            Some(f) => FeatureConfig {
                kind: w.choice(
                    "features",
                    f,
                    "kind",
                    &[("canonical", FeatureKind::Canonical), ("random", FeatureKind::Random)],
                    FeatureKind::Canonical,
                ),
                d: w.count("features", f, "d", 2),
            },
            None => FeatureConfig {
                kind: FeatureKind::Canonical,
                d: 2,
            },
        },
    };
    let activation = parse_activation(&mut w, top.get("activation"), constants.lipschitz_l);
    let estimator = parse_estimator(&mut w, top.get("estimator"), &activation);
    let scaling = match top.get("scaling") {
        None => {
            if scenario == Scenario::Scaling {
                w.fail("scaling", "required");
            }
            None
        }
        Some(v) => parse_scaling(&mut w, v),
    };
    let training = parse_training(&mut w, top.get("training"));

    let delta = match w.number("", top, "delta") {
        Some(d) if d > 0.0 && d < 1.0 => d,
        Some(_) => {
            w.fail("delta", "delta must be in (0,1)");
            0.05
        }
        None => 0.05,
    };
    let n_count = w.choice("", top, "n_count", &[("n", NCount::N), ("m", NCount::M)], NCount::N);
    let reference_node = match top.get("reference_node") {
        None | Some(Value::Null) => None,
        Some(_) => w.integer("", top, "reference_node").map(|v| v as usize),
    };
    let output_dir = w.string("", top, "output_dir").unwrap_or("radbound_out").to_string();
    if output_dir.is_empty() {
        w.fail("output_dir", "must not be empty");
    }

    if let (Some(g), Some(o)) = (&graph, &omega) {
        if let Some(n) = g.n {
            if o.m > n {
                w.fail("omega.m", format!("m = {} exceeds n = {n}", o.m));
            }
            if let Some(r) = reference_node.filter(|&r| r >= n) {
                w.fail("reference_node", format!("node {r} outside 0..{n}"));
            }
        }
    }
    if estimator.method == EstimatorMethod::ClosedForm && !activation.is_linear() {
        w.fail("estimator.method", "closed_form requires a linear activation");
    }

    if w.issues.is_empty() {
        Ok(ScenarioConfig {
            scenario,
            seed,
            graph,
            filter,
            constants,
            omega,
            features,
            activation,
            estimator,
            scaling,
            training,
            delta,
            n_count,
            reference_node,
            output_dir,
        })
    } else {
        Err(w.issues)
    }
}

fn parse_graph(w: &mut Walker, v: &Value) -> Option<GraphConfig> {
    let g = w.object("graph", v, &["family", "n", "ring_degree", "p", "p_scale", "path"])?;
    let n = w.optional_count("graph", g, "n");
    let family = match w.string("graph", g, "family") {
        None => {
            if !g.contains_key("family") {
                w.fail("graph.family", "required (regular, erdos_renyi, complete, edge_list)");
            }
            return None;
        }
        Some("regular") => {
            let ring_degree = w.count("graph", g, "ring_degree", 2);
            if !ring_degree.is_multiple_of(2) {
                w.fail("graph.ring_degree", "must be even");
            }
            GraphFamily::Regular { ring_degree }
        }
        Some("erdos_renyi") => {
            let p = w.number("graph", g, "p");
            if let Some(p) = p.filter(|p| !(0.0..=1.0).contains(p)) {
                w.fail("graph.p", format!("must lie in [0, 1], got {p}"));
            }
            GraphFamily::ErdosRenyi {
                p,
                p_scale: w.positive("graph", g, "p_scale", 2.0),
            }
        }
        Some("complete") => GraphFamily::Complete,
        Some("edge_list") => match w.string("graph", g, "path") {
            Some(p) => GraphFamily::EdgeList { path: p.to_string() },
            None => {
                w.fail("graph.path", "required for edge_list graphs");
                return None;
            }
        },
        Some(other) => {
            w.fail("graph.family", format!("unknown family {other:?}"));
            return None;
        }
    };
    if n.is_none() && !matches!(family, GraphFamily::EdgeList { .. }) {
        w.fail("graph.n", "required");
    }
    Some(GraphConfig { family, n })
}

fn parse_filter(w: &mut Walker, v: Option<&Value>) -> FilterKind {
    match v {
        None => FilterKind::Unnormalized,
        Some(Value::String(s)) if s == "unnormalized" => FilterKind::Unnormalized,
        Some(Value::String(s)) if s == "random_walk" || s == "normalized" => FilterKind::RandomWalk,
        Some(Value::Object(o)) if o.len() == 1 && o.contains_key("polynomial") => {
            match o["polynomial"].as_array() {
                Some(list) if !list.is_empty() && list.iter().all(|c| c.as_f64().is_some()) => {
                    FilterKind::Polynomial(list.iter().filter_map(Value::as_f64).collect())
                }
                _ => {
                    w.fail("filter.polynomial", "expected a nonempty list of coefficients");
                    FilterKind::Unnormalized
                }
            }
        }
        Some(_) => {
            w.fail("filter", "expected \"unnormalized\", \"random_walk\" or {\"polynomial\": [..]}");
            FilterKind::Unnormalized
        }
    }
}

fn parse_activation(w: &mut Walker, v: Option<&Value>, lipschitz_l: f64) -> Activation {
    let linear = || Activation::linear(lipschitz_l).expect("validated positive");
    let Some(v) = v else {
        return linear();
    };
    let Some(a) = w.object("activation", v, &["kind", "slope"]) else {
        return linear();
    };
    let act = match w.string("activation", a, "kind") {
        None | Some("linear") => linear(),
        Some("relu") => Activation::relu(),
        Some("leaky_relu") => {
            let slope = w.number("activation", a, "slope").unwrap_or(0.01);
            match Activation::leaky_relu(slope) {
                Ok(act) => act,
                Err(_) => {
                    w.fail("activation.slope", "must lie in [0, 1)");
                    Activation::relu()
                }
            }
        }
        Some(other) => {
            w.fail("activation.kind", format!("unknown activation {other:?}"));
            linear()
        }
    };
    if act.lipschitz_l > lipschitz_l {
        w.fail(
            "constants.lipschitz_l",
            format!("{lipschitz_l} is below the activation constant {}", act.lipschitz_l),
        );
    }
    act
}

fn parse_estimator(w: &mut Walker, v: Option<&Value>, act: &Activation) -> EstimatorConfig {
    let mut cfg = EstimatorConfig {
        method: if act.is_linear() {
            EstimatorMethod::ClosedForm
        } else {
            EstimatorMethod::Pga
        },
        num_mc: None,
        restarts: 20,
        steps: 300,
        lr: 0.25,
        width: 2,
        grid_resolution: None,
        grid_error: 1e-3,
    };
    let Some(v) = v else {
        return cfg;
    };
    let keys = ["method", "num_mc", "restarts", "steps", "lr", "width", "grid_resolution", "grid_error"];
    let Some(e) = w.object("estimator", v, &keys) else {
        return cfg;
    };
    cfg.method = w.choice(
        "estimator",
        e,
        "method",
        &[
            ("closed_form", EstimatorMethod::ClosedForm),
            ("pga", EstimatorMethod::Pga),
            ("brute_force", EstimatorMethod::BruteForce),
        ],
        cfg.method,
    );
    cfg.num_mc = w.optional_count("estimator", e, "num_mc");
    cfg.restarts = w.count("estimator", e, "restarts", cfg.restarts);
    cfg.steps = w.count("estimator", e, "steps", cfg.steps);
    cfg.lr = w.positive("estimator", e, "lr", cfg.lr);
    cfg.width = w.count("estimator", e, "width", cfg.width);
    cfg.grid_resolution = w.optional_count("estimator", e, "grid_resolution");
    cfg.grid_error = w.positive("estimator", e, "grid_error", cfg.grid_error);
    cfg
}

fn parse_scaling(w: &mut Walker, v: &Value) -> Option<ScalingConfig> {
    let keys = ["families", "sizes", "seeds_per_size", "m", "m_fraction", "p_scale", "ring_degree"];
    let s = w.object("scaling", v, &keys)?;
    let families = match s.get("families").and_then(Value::as_array) {
        Some(list) if !list.is_empty() => list
            .iter()
            .enumerate()
            .filter_map(|(i, f)| {
                let fam = match f.as_str() {
                    Some("er_unnormalized") => RateFamily::ErUnnormalized,
                    Some("er_normalized") => RateFamily::ErNormalized,
                    Some("regular_unnormalized") => RateFamily::RegularUnnormalized,
                    Some("regular_normalized") => RateFamily::RegularNormalized,
                    _ => {
                        w.fail(format!("scaling.families[{i}]"), "unknown family");
                        return None;
                    }
                };
                Some(fam)
            })
            .collect(),
        _ => {
            w.fail("scaling.families", "required nonempty list");
            Vec::new()
        }
    };
    let sizes: Vec<usize> = match s.get("sizes").and_then(Value::as_array) {
        Some(list) if !list.is_empty() => list
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.as_u64() {
                Some(n) if n >= 2 => Some(n as usize),
                _ => {
                    w.fail(format!("scaling.sizes[{i}]"), "expected an integer ≥ 2");
                    None
                }
            })
            .collect(),
        _ => {
            w.fail("scaling.sizes", "required nonempty list");
            Vec::new()
        }
    };
    if sizes.windows(2).any(|p| p[0] >= p[1]) {
        w.fail("scaling.sizes", "must be strictly increasing");
    }
    let m_rule = match (s.contains_key("m"), s.contains_key("m_fraction")) {
        (true, true) => {
            w.fail("scaling", "give either m or m_fraction, not both");
            MRule::Fixed(1)
        }
        (true, false) => MRule::Fixed(w.count("scaling", s, "m", 1)),
        (false, true) => match w.number("scaling", s, "m_fraction") {
            Some(f) if f > 0.0 && f <= 1.0 => MRule::Fraction(f),
            _ => {
                w.fail("scaling.m_fraction", "must lie in (0, 1]");
                MRule::Fraction(0.5)
            }
        },
        (false, false) => {
            w.fail("scaling.m", "required (or m_fraction)");
            MRule::Fixed(1)
        }
    };
    if let (MRule::Fixed(m), Some(&n0)) = (m_rule, sizes.first()) {
        if m > n0 {
            w.fail("scaling.m", format!("m = {m} exceeds the smallest size {n0}"));
        }
    }
    let ring_degree = w.count("scaling", s, "ring_degree", 2);
    if !ring_degree.is_multiple_of(2) {
        w.fail("scaling.ring_degree", "must be even");
    }
    Some(ScalingConfig {
        families,
        sizes,
        seeds_per_size: w.count("scaling", s, "seeds_per_size", 20),
        m_rule,
        p_scale: w.positive("scaling", s, "p_scale", 2.0),
        ring_degree,
    })
}

fn parse_training(w: &mut Walker, v: Option<&Value>) -> TrainingConfig {
    let mut cfg = TrainingConfig {
        runs: 50,
        epochs: 200,
        lr: 0.05,
        width: 4,
        teacher_width: 4,
        loss: LossKind::Hinge,
        batch_size: None,
        link: Link::Sign,
    };
    let Some(v) = v else {
        return cfg;
    };
    let keys = ["runs", "epochs", "lr", "width", "teacher_width", "loss", "batch_size", "link"];
    let Some(t) = w.object("training", v, &keys) else {
        return cfg;
    };
    cfg.runs = w.count("training", t, "runs", cfg.runs);
    cfg.epochs = w.integer("training", t, "epochs").map_or(cfg.epochs, |e| e as usize);
    cfg.lr = w.positive("training", t, "lr", cfg.lr);
    cfg.width = w.count("training", t, "width", cfg.width);
    cfg.teacher_width = w.count("training", t, "teacher_width", cfg.teacher_width);
    cfg.loss = w.choice("training", t, "loss", &[("hinge", LossKind::Hinge), ("squared", LossKind::Squared)], cfg.loss);
    cfg.batch_size = w.optional_count("training", t, "batch_size");
    cfg.link = w.choice("training", t, "link", &[("sign", Link::Sign), ("identity", Link::Identity)], cfg.link);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(issues: &[ConfigIssue]) -> Vec<&str> {
        issues.iter().map(|i| i.path.as_str()).collect()
    }

    #[test]
    fn empty_file_names_required_fields() {
        let issues = validate_config("", None).unwrap_err();
        let p = paths(&issues);
        assert!(p.contains(&"scenario"));
        assert!(p.contains(&"graph"));
        assert!(p.contains(&"omega.m"));
    }

    #[test]
    fn delta_range() {
        let raw = r#"{"scenario": "bound", "graph": {"family": "regular", "n": 8}, "omega": {"m": 4}, "delta": 1.5}"#;
        let issues = validate_config(raw, None).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].reason, "delta must be in (0,1)");
    }

    #[test]
    fn minimal_bound_gets_defaults() {
        let raw = r#"{"scenario": "bound", "graph": {"family": "regular", "n": 8}, "omega": {"m": 4}}"#;
        let cfg = validate_config(raw, None).unwrap();
        assert_eq!(cfg.graph.unwrap().family, GraphFamily::Regular { ring_degree: 2 });
        assert_eq!(cfg.omega.unwrap().placement, Placement::Random);
        assert_eq!(cfg.estimator.restarts, 20);
        assert_eq!(cfg.estimator.method, EstimatorMethod::ClosedForm);
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.filter, FilterKind::Unnormalized);
        assert_eq!(cfg.output_dir, "radbound_out");
        let er = r#"{"scenario": "bound", "graph": {"family": "erdos_renyi", "n": 30}, "omega": {"m": 4}}"#;
        let cfg = validate_config(er, None).unwrap();
        assert_eq!(cfg.graph.unwrap().family, GraphFamily::ErdosRenyi { p: None, p_scale: 2.0 });
    }

    #[test]
    fn unknown_keys_and_bad_values_are_itemized() {
        let raw = r#"{
            "scenario": "estimate",
            "graph": {"family": "regular", "n": 8, "ring_degree": 3, "colour": 1},
            "omega": {"m": 9},
            "activation": {"kind": "relu"},
            "estimator": {"method": "closed_form", "lr": -1},
            "bogus": true
        }"#;
        let issues = validate_config(raw, None).unwrap_err();
        let p = paths(&issues);
        for expected in ["graph.ring_degree", "graph.colour", "omega.m", "estimator.lr", "estimator.method", "bogus"] {
            assert!(p.contains(&expected), "missing {expected} in {p:?}");
        }
    }

    #[test]
    fn scenario_hint() {
        let raw = r#"{"graph": {"family": "complete", "n": 5}, "omega": {"m": 2}}"#;
        assert_eq!(validate_config(raw, Some(Scenario::Sandwich)).unwrap().scenario, Scenario::Sandwich);
        let raw = r#"{"scenario": "gap", "graph": {"family": "complete", "n": 5}, "omega": {"m": 2}}"#;
        assert!(validate_config(raw, Some(Scenario::Bound)).is_err());
    }

    #[test]
    fn scaling_section() {
        let raw = r#"{"scenario": "scaling", "scaling": {"families": ["regular_unnormalized"], "sizes": [64, 32], "m": 8}}"#;
        let issues = validate_config(raw, None).unwrap_err();
        assert_eq!(paths(&issues), vec!["scaling.sizes"]);
        let raw = r#"{"scenario": "scaling", "scaling": {"families": ["er_normalized"], "sizes": [128, 256], "m_fraction": 0.1}}"#;
        let cfg = validate_config(raw, None).unwrap();
        let s = cfg.scaling.unwrap();
        assert_eq!(s.m_rule, MRule::Fraction(0.1));
        assert_eq!(s.seeds_per_size, 20);
        assert_eq!(s.p_scale, 2.0);
    }

    #[test]
    fn activation_and_filter_forms() {
        let raw = r#"{"scenario": "bound", "graph": {"family": "regular", "n": 8}, "omega": {"m": 4},
            "filter": {"polynomial": [1.0, -0.5]}, "activation": {"kind": "leaky_relu", "slope": 0.2},
            "constants": {"lipschitz_l": 2.0}}"#;
        let cfg = validate_config(raw, None).unwrap();
        assert_eq!(cfg.filter, FilterKind::Polynomial(vec![1.0, -0.5]));
        assert_eq!(cfg.activation, Activation::leaky_relu(0.2).unwrap());
        assert_eq!(cfg.estimator.method, EstimatorMethod::Pga);
        let raw = r#"{"scenario": "bound", "graph": {"family": "regular", "n": 8}, "omega": {"m": 4},
            "activation": {"kind": "relu"}, "constants": {"lipschitz_l": 0.5}}"#;
        assert_eq!(paths(&validate_config(raw, None).unwrap_err()), vec!["constants.lipschitz_l"]);
    }
}
