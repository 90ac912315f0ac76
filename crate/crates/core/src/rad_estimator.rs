//! Estimators of the empirical Rademacher complexity
//!
//! ```text
//! R̂(F) = E_ε [ (1/m) sup_{f ∈ F} |Σ_{j∈Ω} ε_j f(x_j)| ]
//! ```
//!
//! of the GCN class `F_{D,R}` with the features held fixed.
//!
//! - [`rc_linear_closed_form`]: for `σ(s) = L·s` the network output is
//!   `L²·g²·X·W1·w2`, and the supremum equals `L²·R·D·‖Mᵀε‖₂` with `M` the
//!   Ω-rows of `g²X`. Exact per sign pattern.
//! - [`rc_brute_force`]: the supremum is searched over a single nonzero
//!   hidden column of norm `R` and an output weight `±D`, with the unit
//!   direction gridded on the sphere. Exact up to a reported grid error.
//! - [`rc_pga`]: projected gradient ascent over the full parameter class from
//!   several restarts. Every inner value is attained by a feasible network,
//!   so the result is a lower estimate of `R̂`.
//!
//! Sign draw `i` always uses the random stream `(seed, i)`, so results do
//! not depend on evaluation order or thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn_model::{
    backward, forward_trace, project_in_place, propagate_features, Activation, GcnParams,
    HypothesisSpec,
};
use crate::rng::{pairwise_mean, stream_rng, tag};
use crate::spectral::GraphFilter;

/// Largest `m` for exhaustive enumeration in the closed form.
pub const EXHAUSTIVE_MAX_M: usize = 20;
/// Size caps for the brute-force search.
pub const BRUTE_FORCE_MAX_M: usize = 12;
pub const BRUTE_FORCE_MAX_D: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSampling {
    /// all `2^m` sign patterns
    Exhaustive,
    /// this many seeded draws
    MonteCarlo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RcMethod {
    ClosedFormLinear,
    Pga,
    BruteForce,
}

/// Identifies the instance an estimate was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFingerprint {
    pub graph_hash: String,
    pub filter_kind: String,
    pub n: usize,
    pub d: usize,
    pub spec: HypothesisSpec,
    pub activation: Activation,
}

impl InstanceFingerprint {
    pub fn new(
        spec: &HypothesisSpec,
        filter: &GraphFilter,
        x: &DMatrix<f64>,
        activation: &Activation,
    ) -> Self {
        Self {
            graph_hash: filter.graph().fingerprint(),
            filter_kind: filter.kind().label(),
            n: filter.n(),
            d: x.ncols(),
            spec: spec.clone(),
            activation: *activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcEstimate {
    pub method: RcMethod,
    pub value: f64,
    /// sample standard deviation over draws divided by `√num_mc`; 0 under
    /// exhaustive enumeration
    pub std_error: f64,
    /// number of sign patterns averaged
    pub num_mc: usize,
    pub exhaustive: bool,
    pub num_restarts: Option<usize>,
    pub is_exact_in_sup: bool,
    pub seed: u64,
    pub grid_resolution: Option<usize>,
    /// bound on the gap between the grid supremum and the true supremum
    pub grid_error: Option<f64>,
    pub diverged_restarts: usize,
    pub fingerprint: InstanceFingerprint,
}

fn num_draws(m: usize, sampling: SignSampling, max_exhaustive: usize) -> Result<usize> {
    match sampling {
        SignSampling::Exhaustive if m > max_exhaustive => Err(Error::invalid(format!(
            "exhaustive sign enumeration needs m ≤ {max_exhaustive}, got {m}"
        ))),
        SignSampling::Exhaustive => Ok(1usize << m),
        SignSampling::MonteCarlo(0) => Err(Error::invalid("num_mc must be positive")),
        SignSampling::MonteCarlo(k) => Ok(k),
    }
}

fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    stream_rng(seed, tag::SIGNS + draw as u64)
}

/// Sign vector for draw `draw`. Exhaustive patterns map bit `j` set to
/// `ε_j = −1`.
fn signs_for(m: usize, sampling: SignSampling, draw: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match sampling {
        SignSampling::Exhaustive => (0..m)
            .map(|j| if (draw >> j) & 1 == 1 { -1.0 } else { 1.0 })
            .collect(),
        SignSampling::MonteCarlo(_) => (0..m)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect(),
    }
}

/// Mean and standard error of per-draw values.
fn aggregate(values: &[f64], exhaustive: bool) -> (f64, f64) {
    let mean = pairwise_mean(values);
    if exhaustive || values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_mean(&dev) * values.len() as f64 / (values.len() - 1) as f64;
    (mean, (var / values.len() as f64).sqrt())
}

fn validate(spec: &HypothesisSpec, filter: &GraphFilter, x: &DMatrix<f64>) -> Result<()> {
    spec.validate()?;
    spec.check_instance(filter.n(), x)
}

/// Exact per-pattern supremum for the linear activation `σ(s) = L·s`.
pub fn rc_linear_closed_form(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    activation: &Activation,
    sampling: SignSampling,
    seed: u64,
) -> Result<RcEstimate> {
    if !activation.is_linear() {
        return Err(Error::invalid("the closed form requires a linear activation"));
    }
    validate(spec, filter, x)?;
    let m = spec.m();
    let draws = num_draws(m, sampling, EXHAUSTIVE_MAX_M)?;
    let g = filter.matrix();
    let ggx = g.mul_dense(&g.mul_dense(x));
    let rows = DMatrix::from_fn(m, x.ncols(), |j, c| ggx[(spec.labeled[j], c)]);
    let scale = activation.lipschitz_l.powi(2) * spec.r * spec.d_bound / m as f64;

    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i);
            let eps = DVector::from_vec(signs_for(m, sampling, i, &mut rng));
            scale * rows.tr_mul(&eps).norm()
        })
        .collect();
    let exhaustive = sampling == SignSampling::Exhaustive;
    let (value, std_error) = aggregate(&values, exhaustive);
    Ok(RcEstimate {
        method: RcMethod::ClosedFormLinear,
        value,
        std_error,
        num_mc: draws,
        exhaustive,
        num_restarts: None,
        is_exact_in_sup: true,
        seed,
        grid_resolution: None,
        grid_error: None,
        diverged_restarts: 0,
        fingerprint: InstanceFingerprint::new(spec, filter, x, activation),
    })
}

/// Points on the unit sphere in `ℝ^d` obtained by gridding each face of the
/// cube `[−1, 1]^d` with `resolution` intervals per axis and projecting
/// radially. The covering radius is at most `√(d−1)/resolution`.
pub fn sphere_grid(d: usize, resolution: usize) -> Vec<Vec<f64>> {
    let steps: Vec<f64> = (0..=resolution)
        .map(|i| -1.0 + 2.0 * i as f64 / resolution as f64)
        .collect();
    let mut points = Vec::new();
    for axis in 0..d {
        for sign in [1.0, -1.0] {
            let free = d - 1;
            let count = steps.len().pow(free as u32);
            for idx in 0..count {
                let mut p = vec![0.0; d];
                let mut rem = idx;
                for (c, slot) in (0..d).filter(|&c| c != axis).enumerate() {
                    let _ = c;
                    p[slot] = steps[rem % steps.len()];
                    rem /= steps.len();
                }
                p[axis] = sign;
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                points.push(p.into_iter().map(|v| v / norm).collect());
            }
        }
    }
    points
}

pub fn sphere_grid_radius(d: usize, resolution: usize) -> f64 {
    ((d - 1) as f64).sqrt() / resolution as f64
}

/// Lipschitz constant, in the hidden direction `u`, of the brute-force
/// objective summed over Ω and divided by `m`.
fn brute_force_lipschitz(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    gx: &DMatrix<f64>,
    activation: &Activation,
) -> f64 {
    let row_norms: Vec<f64> = gx.row_iter().map(|r| r.norm()).collect();
    let mass: f64 = spec
        .labeled
        .iter()
        .map(|&j| filter.matrix().row(j).map(|(v, a)| a.abs() * row_norms[v]).sum::<f64>())
        .sum();
    spec.d_bound * spec.r * activation.lipschitz_l.powi(2) * mass / spec.m() as f64
}

/// Grid resolution that makes the reported brute-force grid error at most
/// `target`.
pub fn brute_force_resolution_for(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    activation: &Activation,
    target: f64,
) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::invalid("target grid error must be positive"));
    }
    let gx = propagate_features(filter, x)?;
    let lip = brute_force_lipschitz(spec, filter, &gx, activation);
    let side = ((x.ncols().max(1) - 1) as f64).sqrt();
    Ok(((lip * side / target).ceil() as usize).max(1))
}

/// Exhaustive-in-ε, gridded-in-direction search of the supremum over a
/// single hidden unit of norm `R` and output weight `±D`.
pub fn rc_brute_force(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    activation: &Activation,
    grid_resolution: usize,
) -> Result<RcEstimate> {
    validate(spec, filter, x)?;
    let m = spec.m();
    let d = x.ncols();
    if m > BRUTE_FORCE_MAX_M {
        return Err(Error::invalid(format!("brute force needs m ≤ {BRUTE_FORCE_MAX_M}, got {m}")));
    }
    if d == 0 || d > BRUTE_FORCE_MAX_D {
        return Err(Error::invalid(format!("brute force needs 1 ≤ d ≤ {BRUTE_FORCE_MAX_D}, got {d}")));
    }
    if grid_resolution == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let g = filter.matrix();
    let gx = propagate_features(filter, x)?;
    let grid = sphere_grid(d, grid_resolution);
    let patterns = 1usize << m;
    let act = *activation;

    let best = grid
        .par_iter()
        .fold(
            || vec![0.0f64; patterns],
            |mut best, u| {
                let hidden: Vec<f64> = gx
                    .row_iter()
                    .map(|row| act.apply(row.iter().zip(u).map(|(a, b)| a * b).sum()))
                    .collect();
                let z: Vec<f64> = spec
                    .labeled
                    .iter()
                    .map(|&j| g.row(j).map(|(v, a)| a * hidden[v]).sum())
                    .collect();
                let plus: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
                let minus: Vec<f64> = z.iter().map(|&v| act.apply(-v)).collect();
                gray_code_max(&plus, &mut best);
                gray_code_max(&minus, &mut best);
                best
            },
        )
        .reduce(
            || vec![0.0f64; patterns],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        );
    let scale = spec.d_bound * spec.r / m as f64;
    let values: Vec<f64> = best.iter().map(|v| v * scale).collect();
    let (value, _) = aggregate(&values, true);
    let lip = brute_force_lipschitz(spec, filter, &gx, activation);
    Ok(RcEstimate {
        method: RcMethod::BruteForce,
        value,
        std_error: 0.0,
        num_mc: patterns,
        exhaustive: true,
        num_restarts: None,
        is_exact_in_sup: d == 1,
        seed: 0,
        grid_resolution: Some(grid_resolution),
        grid_error: Some(lip * sphere_grid_radius(d, grid_resolution)),
        diverged_restarts: 0,
        fingerprint: InstanceFingerprint::new(spec, filter, x, activation),
    })
}

/// Updates `best[p] = max(best[p], |Σ_j ε_j(p) t_j|)` over all patterns,
/// visiting them in Gray-code order so each step flips one sign.
fn gray_code_max(t: &[f64], best: &mut [f64]) {
    let mut sum: f64 = t.iter().sum();
    best[0] = best[0].max(sum.abs());
    for i in 1..best.len() {
        let bit = i.trailing_zeros() as usize;
        let gray = i ^ (i >> 1);
        if (gray >> bit) & 1 == 1 {
            sum -= 2.0 * t[bit];
        } else {
            sum += 2.0 * t[bit];
        }
        best[gray] = best[gray].max(sum.abs());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgaConfig {
    pub sampling: SignSampling,
    pub restarts: usize,
    pub steps: usize,
    /// initial step length as a fraction of each ball radius
    pub lr: f64,
    /// hidden width k of the searched networks
    pub width: usize,
    pub seed: u64,
}

impl Default for PgaConfig {
    fn default() -> Self {
        Self {
            sampling: SignSampling::MonteCarlo(200),
            restarts: 20,
            steps: 300,
            lr: 0.25,
            width: 2,
            seed: 0,
        }
    }
}

struct AscentResult {
    best: f64,
    diverged: usize,
}

/// Projected ascent on `|Σ_j ε_j f_j|` from `restarts` random starts on the
/// ball boundaries. Steps follow the normalized gradient of each block,
/// growing on success and halving on failure, so the objective never
/// decreases.
fn ascend(
    params0: &mut dyn FnMut() -> GcnParams,
    eps_full: &DVector<f64>,
    g: &crate::sparse::CsrMatrix,
    gx: &DMatrix<f64>,
    spec: &HypothesisSpec,
    cfg: &PgaConfig,
) -> AscentResult {
    let objective = |p: &GcnParams| {
        let tr = forward_trace(p, g, gx);
        (eps_full.dot(&tr.out), tr)
    };
    let mut best = 0.0f64;
    let mut diverged = 0;
    for _ in 0..cfg.restarts {
        let mut p = params0();
        let (mut s, mut trace) = objective(&p);
        let mut step = cfg.lr;
        let mut ok = s.is_finite();
        for _ in 0..cfg.steps {
            if !ok || step < 1e-9 {
                break;
            }
            let dir = if s >= 0.0 { 1.0 } else { -1.0 };
            let (g1, g2) = backward(&p, g, gx, &trace, &(eps_full * dir));
            let (n1, n2) = (g1.norm(), g2.norm());
            if !(n1.is_finite() && n2.is_finite()) {
                ok = false;
                break;
            }
            if n1 == 0.0 && n2 == 0.0 {
                break;
            }
            let mut cand = p.clone();
            if n1 > 0.0 {
                cand.w1 += g1 * (step * spec.r / n1);
            }
            if n2 > 0.0 {
                cand.w2 += g2 * (step * spec.d_bound / n2);
            }
            project_in_place(&mut cand, spec.r, spec.d_bound);
            let (cs, ctrace) = objective(&cand);
            if !cs.is_finite() {
                ok = false;
                break;
            }
            if cs.abs() > s.abs() {
                p = cand;
                s = cs;
                trace = ctrace;
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.5;
            }
        }
        if ok {
            best = best.max(s.abs());
        } else {
            diverged += 1;
        }
    }
    AscentResult { best, diverged }
}

/// Lower estimate of `R̂` by projected gradient ascent over the full class.
pub fn rc_pga(
    spec: &HypothesisSpec,
    filter: &GraphFilter,
    x: &DMatrix<f64>,
    activation: &Activation,
    cfg: &PgaConfig,
) -> Result<RcEstimate> {
    validate(spec, filter, x)?;
    if cfg.restarts == 0 || cfg.width == 0 {
        return Err(Error::invalid("PGA needs at least one restart and positive width"));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::invalid("PGA step size must be positive"));
    }
    let m = spec.m();
    let n = filter.n();
    let d = x.ncols();
    let draws = num_draws(m, cfg.sampling, EXHAUSTIVE_MAX_M)?;
    let g = filter.matrix();
    let gx = propagate_features(filter, x)?;
    let act = *activation;

    let results: Vec<AscentResult> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(cfg.seed, i);
            let eps = signs_for(m, cfg.sampling, i, &mut rng);
            let mut eps_full = DVector::zeros(n);
            for (&v, &e) in spec.labeled.iter().zip(&eps) {
                eps_full[v] = e;
            }
            let mut init = || {
                let mut w1 = DMatrix::from_fn(d, cfg.width, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut w2 = DVector::from_fn(cfg.width, |_, _| rng.sample::<f64, _>(StandardNormal));
                let (n1, n2) = (w1.norm(), w2.norm());
                if n1 > 0.0 {
                    w1 *= spec.r / n1;
                }
                if n2 > 0.0 {
                    w2 *= spec.d_bound / n2;
                }
                GcnParams { w1, w2, activation: act }
            };
            ascend(&mut init, &eps_full, g, &gx, spec, cfg)
        })
        .collect();

    let diverged: usize = results.iter().map(|r| r.diverged).sum();
    if diverged == draws * cfg.restarts {
        return Err(Error::Divergence { epoch: 0 });
    }
    let values: Vec<f64> = results.iter().map(|r| r.best / m as f64).collect();
    let exhaustive = cfg.sampling == SignSampling::Exhaustive;
    let (value, std_error) = aggregate(&values, exhaustive);
    Ok(RcEstimate {
        method: RcMethod::Pga,
        value,
        std_error,
        num_mc: draws,
        exhaustive,
        num_restarts: Some(cfg.restarts),
        is_exact_in_sup: false,
        seed: cfg.seed,
        grid_resolution: None,
        grid_error: None,
        diverged_restarts: diverged,
        fingerprint: InstanceFingerprint::new(spec, filter, x, activation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn_model::forward;
    use crate::graphgen::gen_regular;
    use crate::spectral::{build_filter, FilterKind};
    use std::sync::Arc;

    fn cycle(n: usize, kind: FilterKind) -> GraphFilter {
        build_filter(&Arc::new(gen_regular(n, 2, 0).unwrap()), kind).unwrap()
    }

    fn canonical(n: usize, d: usize, b: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, c| if c == 0 { b } else { 0.0 })
    }

    fn unit_spec(labeled: Vec<usize>) -> HypothesisSpec {
        HypothesisSpec::new(1.0, 1.0, 1.0, 1.0, 3, labeled).unwrap()
    }

    fn lin() -> Activation {
        Activation::linear(1.0).unwrap()
    }

    #[test]
    fn zero_features_give_zero() {
        let f = cycle(6, FilterKind::Unnormalized);
        let x = DMatrix::zeros(6, 2);
        let s = unit_spec(vec![0, 1, 2]);
        let cf = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        assert_eq!(cf.value, 0.0);
        let pga = rc_pga(&s, &f, &x, &Activation::relu(), &PgaConfig::default()).unwrap();
        assert_eq!(pga.value, 0.0);
    }

    #[test]
    fn single_label_reduces_to_row_norm() {
        let f = cycle(6, FilterKind::RandomWalk);
        let x = DMatrix::from_fn(6, 2, |i, c| ((i + c) % 3) as f64 * 0.3 - 0.2);
        let s = HypothesisSpec::new(2.0, 1.0, 0.7, 1.3, 3, vec![4]).unwrap();
        let act = Activation::linear(2.0).unwrap();
        let cf = rc_linear_closed_form(&s, &f, &x, &act, SignSampling::Exhaustive, 0).unwrap();
        let g = f.matrix().to_dense();
        let row = (&g * &g * &x).row(4).norm();
        assert!((cf.value - 4.0 * 0.7 * 1.3 * row).abs() < 1e-12);
        assert_eq!(cf.std_error, 0.0);
    }

    #[test]
    fn non_linear_activation_rejected_by_closed_form() {
        let f = cycle(4, FilterKind::Unnormalized);
        let s = unit_spec(vec![0, 1]);
        let x = canonical(4, 1, 1.0);
        let res = rc_linear_closed_form(&s, &f, &x, &Activation::relu(), SignSampling::Exhaustive, 0);
        assert!(res.is_err());
        let big = unit_spec((0..4).collect());
        assert!(rc_linear_closed_form(&big, &f, &x, &lin(), SignSampling::MonteCarlo(0), 0).is_err());
    }

    /// Independent oracle: maximise `|Σ ε_j f_j|` by direct forward passes over
    /// `W1 = R·u vᵀ`, `w2 = D·v` with `u, v` on 100-point circles.
    fn rank_one_grid_oracle(spec: &HypothesisSpec, f: &GraphFilter, x: &DMatrix<f64>) -> f64 {
        let m = spec.m();
        let circle: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 100.0;
                (t.cos(), t.sin())
            })
            .collect();
        let mut outputs = Vec::new();
        for &(u0, u1) in &circle {
            for &(v0, v1) in &circle {
                let w1 = DMatrix::from_row_slice(2, 2, &[u0 * v0, u0 * v1, u1 * v0, u1 * v1]) * spec.r;
                let w2 = DVector::from_vec(vec![v0, v1]) * spec.d_bound;
                let p = GcnParams::new(w1, w2, lin()).unwrap();
                let out = forward(&p, f, x).unwrap();
                outputs.push(spec.labeled.iter().map(|&j| out[j]).collect::<Vec<f64>>());
            }
        }
        let mut total = 0.0;
        for pattern in 0..(1usize << m) {
            let eps: Vec<f64> = (0..m).map(|j| if (pattern >> j) & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let best = outputs
                .iter()
                .map(|o| o.iter().zip(&eps).map(|(a, b)| a * b).sum::<f64>().abs())
                .fold(0.0, f64::max);
            total += best / m as f64;
        }
        total / (1usize << m) as f64
    }

    #[test]
    fn closed_form_matches_rank_one_grid_on_c4() {
        let f = cycle(4, FilterKind::Unnormalized);
        let x = canonical(4, 2, 1.0);
        let s = unit_spec(vec![0, 1, 2, 3]);
        let cf = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        let oracle = rank_one_grid_oracle(&s, &f, &x);
        assert!((cf.value - oracle).abs() <= 1e-3, "{} vs {oracle}", cf.value);
        // g²·1 = 9·1 and E|ε₁+…+ε₄| = 3/2
        assert!((cf.value - 9.0 * 1.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_grid_covers() {
        assert_eq!(sphere_grid(1, 5), vec![vec![1.0], vec![-1.0]]);
        let g2 = sphere_grid(2, 4);
        assert_eq!(g2.len(), 4 * 5);
        for p in sphere_grid(3, 3) {
            assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // brute-force covering check on the circle
        let res = 16;
        let pts = sphere_grid(2, res);
        let worst = (0..2000)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 2000.0;
                pts.iter()
                    .map(|p| ((p[0] - t.cos()).powi(2) + (p[1] - t.sin()).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        assert!(worst <= sphere_grid_radius(2, res));
    }

    #[test]
    fn brute_force_one_dimensional_is_exact() {
        let f = cycle(5, FilterKind::Unnormalized);
        let x = DMatrix::from_fn(5, 1, |i, _| [0.5, -1.0, 0.25, 0.0, 0.75][i]);
        let s = unit_spec(vec![0, 2, 3]);
        let bf = rc_brute_force(&s, &f, &x, &lin(), 3).unwrap();
        assert_eq!(bf.grid_error, Some(0.0));
        assert!(bf.is_exact_in_sup);
        let cf = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        assert!((bf.value - cf.value).abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_closed_form_in_two_dims() {
        let f = cycle(6, FilterKind::RandomWalk);
        let x = DMatrix::from_fn(6, 2, |i, c| ((3 * i + 5 * c) % 7) as f64 / 10.0 - 0.3);
        let s = unit_spec(vec![1, 2, 4, 5]);
        let res = brute_force_resolution_for(&s, &f, &x, &lin(), 1e-3).unwrap();
        let bf = rc_brute_force(&s, &f, &x, &lin(), res).unwrap();
        let cf = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        let err = bf.grid_error.unwrap();
        assert!(err <= 1e-3);
        assert!(bf.value <= cf.value + 1e-12);
        assert!(cf.value - bf.value <= err);
    }

    #[test]
    fn brute_force_caps() {
        let f = cycle(16, FilterKind::Unnormalized);
        let x = canonical(16, 4, 1.0);
        let s = unit_spec((0..4).collect());
        assert!(rc_brute_force(&s, &f, &x, &lin(), 4).is_err());
        let big = unit_spec((0..13).collect());
        assert!(rc_brute_force(&big, &f, &canonical(16, 1, 1.0), &lin(), 4).is_err());
    }

    #[test]
    fn pga_close_to_closed_form_for_linear() {
        let f = cycle(4, FilterKind::Unnormalized);
        let x = DMatrix::from_fn(4, 2, |i, c| ((i + 2 * c) % 3) as f64 * 0.4 - 0.4);
        let s = unit_spec(vec![0, 1, 2, 3]);
        let cf = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        let cfg = PgaConfig {
            sampling: SignSampling::Exhaustive,
            ..PgaConfig::default()
        };
        let pga = rc_pga(&s, &f, &x, &lin(), &cfg).unwrap();
        assert!(pga.value <= cf.value + 1e-9);
        assert!(pga.value >= 0.98 * cf.value, "{} vs {}", pga.value, cf.value);
        assert!(!pga.is_exact_in_sup);
    }

    #[test]
    fn pga_relu_dominates_single_column_grid() {
        let f = cycle(4, FilterKind::Unnormalized);
        let x = DMatrix::from_fn(4, 2, |i, c| [[0.6, -0.3], [-0.2, 0.7], [0.5, 0.5], [-0.6, -0.1]][i][c]);
        let s = unit_spec(vec![0, 1, 2, 3]);
        let relu = Activation::relu();
        let bf = rc_brute_force(&s, &f, &x, &relu, 2000).unwrap();
        let cfg = PgaConfig {
            sampling: SignSampling::Exhaustive,
            ..PgaConfig::default()
        };
        let pga = rc_pga(&s, &f, &x, &relu, &cfg).unwrap();
        assert!(pga.value >= bf.value - 1e-3, "{} vs {}", pga.value, bf.value);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_near_exhaustive() {
        let f = cycle(8, FilterKind::Unnormalized);
        let x = DMatrix::from_fn(8, 2, |i, c| ((i * 5 + c) % 4) as f64 * 0.2 - 0.3);
        let s = unit_spec(vec![0, 1, 2, 3, 4, 5]);
        let mc = SignSampling::MonteCarlo(4000);
        let a = rc_linear_closed_form(&s, &f, &x, &lin(), mc, 17).unwrap();
        let b = rc_linear_closed_form(&s, &f, &x, &lin(), mc, 17).unwrap();
        assert_eq!(a, b);
        let exact = rc_linear_closed_form(&s, &f, &x, &lin(), SignSampling::Exhaustive, 0).unwrap();
        assert!((a.value - exact.value).abs() <= 4.0 * a.std_error);
    }

    #[test]
    fn gray_code_visits_every_pattern() {
        let t = [1.0, 2.0, 4.0];
        let mut best = vec![0.0; 8];
        gray_code_max(&t, &mut best);
        for p in 0..8usize {
            let s: f64 = (0..3).map(|j| if (p >> j) & 1 == 1 { -t[j] } else { t[j] }).sum();
            assert_eq!(best[p], s.abs());
        }
    }
}
