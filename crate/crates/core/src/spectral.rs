//! Graph filters `g(L)` and their spectra.
//!
//! Conventions:
//!
//! - `A` is the self-looped adjacency and `D` its row sums, so the Laplacian
//!   `D − A` has the self-loops cancel.
//! - The unnormalized filter is `A_raw + I`, i.e. the self-looped adjacency.
//! - The random-walk filter is `D⁻¹A + I` with the self-looped `A` and `D`.
//! - `λ_max` is the largest eigenvalue magnitude of the filter itself.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::Graph;
use crate::rng::{stream_rng, tag};
use crate::sparse::CsrMatrix;

/// Largest problem size for which the dense eigensolver is used.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Unnormalized,
    RandomWalk,
    /// `Σ_k c_k L^k`, coefficients in ascending power order
    Polynomial(Vec<f64>),
}

impl FilterKind {
    pub fn label(&self) -> String {
        match self {
            FilterKind::Unnormalized => "unnormalized".into(),
            FilterKind::RandomWalk => "random_walk".into(),
            FilterKind::Polynomial(c) => format!("polynomial{c:?}"),
        }
    }
}

#[derive(Debug)]
pub struct GraphFilter {
    kind: FilterKind,
    matrix: CsrMatrix,
    graph: Arc<Graph>,
    spectral_radius_cache: OnceLock<f64>,
}

impl Clone for GraphFilter {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(&v) = self.spectral_radius_cache.get() {
            let _ = cache.set(v);
        }
        Self {
            kind: self.kind.clone(),
            matrix: self.matrix.clone(),
            graph: Arc::clone(&self.graph),
            spectral_radius_cache: cache,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    PowerIteration,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_max_abs: f64,
    pub method: SpectralMethod,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub tol: f64,
    /// `None` means `10·n`
    pub max_iter: Option<usize>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

/// `L = D − A` with the self-looped `A`.
pub fn laplacian(g: &Graph) -> CsrMatrix {
    let mut triplets = Vec::new();
    for v in 0..g.n() {
        let nbrs = g.neighbors(v);
        for &u in nbrs {
            let a = 1.0;
            let d = if u == v { nbrs.len() as f64 } else { 0.0 };
            triplets.push((v, u, d - a));
        }
    }
    CsrMatrix::from_triplets(g.n(), g.n(), triplets).expect("indices come from the graph")
}

pub fn build_filter(graph: &Arc<Graph>, kind: FilterKind) -> Result<GraphFilter> {
    let n = graph.n();
    let matrix = match &kind {
        FilterKind::Unnormalized => {
            let triplets = (0..n)
                .flat_map(|v| graph.neighbors(v).iter().map(move |&u| (v, u, 1.0)))
                .collect();
            CsrMatrix::from_triplets(n, n, triplets)?
        }
        FilterKind::RandomWalk => {
            let triplets = (0..n)
                .flat_map(|v| {
                    let nbrs = graph.neighbors(v);
                    let inv = 1.0 / nbrs.len() as f64;
                    nbrs.iter()
                        .map(move |&u| (v, u, if u == v { inv + 1.0 } else { inv }))
                })
                .collect();
            CsrMatrix::from_triplets(n, n, triplets)?
        }
        FilterKind::Polynomial(coeffs) => {
            if coeffs.is_empty() {
                return Err(Error::invalid("polynomial filter needs at least one coefficient"));
            }
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("polynomial coefficients must be finite"));
            }
            let lap = laplacian(graph);
            // Horner: c_0 + L(c_1 + L(c_2 + ...))
            let ident = CsrMatrix::identity(n);
            let mut acc = ident.map_entries(|_, _, _| *coeffs.last().expect("nonempty"));
            for &c in coeffs.iter().rev().skip(1) {
                acc = lap.matmul(&acc)?.add_scaled(1.0, &ident, c)?;
            }
            acc
        }
    };
    Ok(GraphFilter {
        kind,
        matrix,
        graph: Arc::clone(graph),
        spectral_radius_cache: OnceLock::new(),
    })
}

impl GraphFilter {
    pub fn kind(&self) -> &FilterKind {
        &self.kind
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// First nonzero entry lying off the diagonal and off the edge set.
    pub fn shift_violation(&self) -> Option<(usize, usize)> {
        self.matrix
            .triplets()
            .find(|&(i, j, v)| v != 0.0 && self.graph.adjacency(i, j) == 0)
            .map(|(i, j, _)| (i, j))
    }

    pub fn is_graph_shift(&self) -> bool {
        self.shift_violation().is_none()
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix.is_symmetric(0.0)
    }

    /// A symmetric matrix with the same spectrum as the filter. For the
    /// random-walk kind this is `D^{-1/2} A D^{-1/2} + I`.
    pub fn symmetric_form(&self) -> CsrMatrix {
        match self.kind {
            FilterKind::RandomWalk => {
                let g = &self.graph;
                let deg: Vec<f64> = (0..g.n()).map(|v| g.neighbors(v).len() as f64).collect();
                self.matrix.map_entries(|i, j, _| {
                    let s = 1.0 / (deg[i] * deg[j]).sqrt();
                    if i == j {
                        s + 1.0
                    } else {
                        s
                    }
                })
            }
            _ => self.matrix.clone(),
        }
    }

    /// Cached `|λ_max|` with the default configuration.
    pub fn lambda_max_abs(&self) -> Result<f64> {
        if let Some(&v) = self.spectral_radius_cache.get() {
            return Ok(v);
        }
        let report = spectral_radius(self, SpectralConfig::default())?;
        Ok(*self.spectral_radius_cache.get_or_init(|| report.lambda_max_abs))
    }

    /// Dense row-major CSV at full (round-trip) precision.
    pub fn to_csv(&self) -> String {
        let dense = self.matrix.to_dense();
        let mut out = String::new();
        for i in 0..dense.nrows() {
            let row: Vec<String> = (0..dense.ncols()).map(|j| format!("{}", dense[(i, j)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> FilterJson {
        FilterJson {
            kind: self.kind.clone(),
            n: self.n(),
            triplets: self.matrix.triplets().collect(),
        }
    }
}

/// Wire form `{kind, n, triplets: [[i, j, value], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterJson {
    pub kind: FilterKind,
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

/// `|λ_max|` of the filter. Power iteration on the symmetric form first; if
/// it fails to reach `tol` the dense symmetric eigensolver takes over for
/// `n ≤ DENSE_LIMIT`.
pub fn spectral_radius(f: &GraphFilter, cfg: SpectralConfig) -> Result<SpectralReport> {
    if cfg.tol <= 0.0 || !cfg.tol.is_finite() {
        return Err(Error::invalid("spectral tolerance must be positive"));
    }
    let sym = f.symmetric_form();
    let n = sym.nrows();
    let max_iter = cfg.max_iter.unwrap_or(10 * n).max(1);
    let power = power_iteration(&sym, cfg.tol, max_iter);
    if power.residual <= cfg.tol {
        return Ok(power);
    }
    if n <= DENSE_LIMIT {
        return Ok(dense_symmetric_radius(&sym.to_dense()));
    }
    Err(Error::NonConvergence {
        iterations: power.iterations,
        residual: power.residual,
    })
}

/// Dense-eigensolver `|λ_max|` of the filter's symmetric form.
pub fn dense_spectral_radius(f: &GraphFilter) -> SpectralReport {
    dense_symmetric_radius(&f.symmetric_form().to_dense())
}

fn dense_symmetric_radius(m: &DMatrix<f64>) -> SpectralReport {
    let eig = SymmetricEigen::new(m.clone());
    let (idx, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty matrix");
    let v = eig.eigenvectors.column(idx).into_owned();
    let residual = (m * &v - &v * lambda).norm();
    SpectralReport {
        lambda_max_abs: lambda.abs(),
        method: SpectralMethod::Dense,
        iterations: 1,
        residual,
    }
}

/// Power iteration with the Rayleigh quotient as eigenvalue estimate and
/// `‖Mv − ρv‖` as residual. Nonnegative matrices start from the all-ones
/// vector (never orthogonal to a Perron vector); others get a seeded
/// perturbation on top.
fn power_iteration(m: &CsrMatrix, tol: f64, max_iter: usize) -> SpectralReport {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0);
    if m.has_negative_entry() {
        let mut rng = stream_rng(0, tag::POWER);
        for x in v.iter_mut() {
            *x += 1e-3 * (rng.random::<f64>() - 0.5);
        }
    }
    v /= v.norm();
    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let w = m.mul_vec(&v);
        rho = v.dot(&w);
        residual = (&w - &v * rho).norm();
        if residual <= tol {
            return SpectralReport {
                lambda_max_abs: rho.abs(),
                method: SpectralMethod::PowerIteration,
                iterations: it,
                residual,
            };
        }
        let norm = w.norm();
        if norm == 0.0 {
            // nilpotent direction: the zero matrix has spectral radius 0
            return SpectralReport {
                lambda_max_abs: 0.0,
                method: SpectralMethod::PowerIteration,
                iterations: it,
                residual: 0.0,
            };
        }
        v = w / norm;
    }
    SpectralReport {
        lambda_max_abs: rho.abs(),
        method: SpectralMethod::PowerIteration,
        iterations: max_iter,
        residual,
    }
}

/// `g(L)·signal` for an `n×d` signal (a column vector is `n×1`).
pub fn apply_filter(f: &GraphFilter, signal: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if signal.nrows() != f.n() {
        return Err(Error::dims(format!(
            "signal has {} rows, filter is {}x{}",
            signal.nrows(),
            f.n(),
            f.n()
        )));
    }
    Ok(f.matrix.mul_dense(signal))
}

pub fn apply_filter_vec(f: &GraphFilter, signal: &DVector<f64>) -> Result<DVector<f64>> {
    if signal.len() != f.n() {
        return Err(Error::dims(format!(
            "signal has length {}, filter is {}x{}",
            signal.len(),
            f.n(),
            f.n()
        )));
    }
    Ok(f.matrix.mul_vec(signal))
}

/// `g_v(L)`: rows and columns restricted to the sorted `N(v)`.
pub fn neighborhood_submatrix(f: &GraphFilter, v: usize) -> DMatrix<f64> {
    let idx = f.graph.neighbors(v);
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| f.entry(idx[a], idx[b]))
}

/// Principal submatrix of the symmetric form on `N(v)`. Its operator norm is
/// at most `|λ_max|` for every filter kind; the raw submatrix of a
/// non-symmetric filter has no such guarantee.
pub fn symmetric_neighborhood_submatrix(f: &GraphFilter, v: usize) -> DMatrix<f64> {
    let sym = f.symmetric_form();
    let idx = f.graph.neighbors(v);
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| sym.get(idx[a], idx[b]))
}

/// Largest singular value of a dense matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{gen_complete, gen_erdos_renyi, gen_regular};
    use approx::assert_abs_diff_eq;

    fn arc(g: Graph) -> Arc<Graph> {
        Arc::new(g)
    }

    #[test]
    fn laplacian_conventions() {
        let c4 = gen_regular(4, 2, 0).unwrap();
        let l = laplacian(&c4).to_dense();
        for i in 0..4 {
            assert_eq!(l.row(i).sum(), 0.0);
        }
        assert_eq!(l, l.transpose());

        let empty = gen_erdos_renyi(5, 0.0, 0).unwrap();
        assert_eq!(laplacian(&empty).to_dense(), DMatrix::zeros(5, 5));

        let k3 = laplacian(&gen_complete(3).unwrap()).to_dense();
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(k3, expected);
    }

    #[test]
    fn named_filters_on_cycle() {
        let c4 = arc(gen_regular(4, 2, 0).unwrap());
        let un = build_filter(&c4, FilterKind::Unnormalized).unwrap();
        for i in 0..4 {
            let ones = un.matrix().row(i).filter(|&(_, v)| v == 1.0).count();
            assert_eq!(ones, 3);
            assert_eq!(un.matrix().row_sum(i), 3.0);
        }
        assert!(un.is_graph_shift());

        let rw = build_filter(&c4, FilterKind::RandomWalk).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(rw.matrix().row_sum(i), 2.0, epsilon = 1e-15);
        }
        assert!(rw.is_graph_shift());
    }

    #[test]
    fn polynomial_filters() {
        let g = arc(gen_erdos_renyi(9, 0.4, 2).unwrap());
        let ident = build_filter(&g, FilterKind::Polynomial(vec![1.0])).unwrap();
        assert_eq!(ident.matrix().to_dense(), DMatrix::identity(9, 9));
        assert!(build_filter(&g, FilterKind::Polynomial(vec![])).is_err());

        let l = laplacian(&g).to_dense();
        let quad = build_filter(&g, FilterKind::Polynomial(vec![0.5, -1.0, 0.25])).unwrap();
        let expected = DMatrix::identity(9, 9) * 0.5 - &l + &l * &l * 0.25;
        assert!((quad.matrix().to_dense() - expected).amax() < 1e-12);

        // degree-one polynomials keep one-hop support
        let lin = build_filter(&g, FilterKind::Polynomial(vec![2.0, -1.0])).unwrap();
        assert!(lin.is_graph_shift());
    }

    #[test]
    fn polynomial_of_degree_two_reports_shift_violation() {
        let path = arc(Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)], None).unwrap());
        let f = build_filter(&path, FilterKind::Polynomial(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(!f.is_graph_shift());
        let (i, j) = f.shift_violation().unwrap();
        assert_eq!(path.adjacency(i, j), 0);
    }

    #[test]
    fn closed_form_radii() {
        for n in [4, 7, 16] {
            let c = arc(gen_regular(n, 2, 0).unwrap());
            let f = build_filter(&c, FilterKind::Unnormalized).unwrap();
            let r = spectral_radius(&f, SpectralConfig::default()).unwrap();
            assert_abs_diff_eq!(r.lambda_max_abs, 3.0, epsilon = 1e-10);
        }
        for n in [2, 5, 11] {
            let k = arc(gen_complete(n).unwrap());
            let f = build_filter(&k, FilterKind::Unnormalized).unwrap();
            let r = spectral_radius(&f, SpectralConfig::default()).unwrap();
            assert_abs_diff_eq!(r.lambda_max_abs, n as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn power_iteration_matches_dense_on_er() {
        let g = arc(gen_erdos_renyi(30, 0.2, 3).unwrap());
        let f = build_filter(&g, FilterKind::Unnormalized).unwrap();
        let fast = spectral_radius(&f, SpectralConfig::default()).unwrap();
        let dense = dense_spectral_radius(&f);
        assert!((fast.lambda_max_abs - dense.lambda_max_abs).abs() <= 1e-8);
        assert!(fast.residual <= 1e-10);
    }

    #[test]
    fn cycle_with_alternating_spectrum_falls_back_to_dense() {
        // L on an even cycle has eigenvalues in [0, 4] with 4 attained;
        // L − 2I has ±2 both attained, so power iteration cannot settle.
        let c = arc(gen_regular(6, 2, 0).unwrap());
        let f = build_filter(&c, FilterKind::Polynomial(vec![-2.0, 1.0])).unwrap();
        let r = spectral_radius(&f, SpectralConfig::default()).unwrap();
        assert_eq!(r.method, SpectralMethod::Dense);
        assert_abs_diff_eq!(r.lambda_max_abs, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn random_walk_radius_is_two() {
        let g = arc(gen_erdos_renyi(25, 0.3, 5).unwrap());
        let f = build_filter(&g, FilterKind::RandomWalk).unwrap();
        assert_abs_diff_eq!(f.lambda_max_abs().unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let c = arc(gen_regular(4, 2, 0).unwrap());
        let f = build_filter(&c, FilterKind::Unnormalized).unwrap();
        let cfg = SpectralConfig { tol: 0.0, max_iter: None };
        assert!(spectral_radius(&f, cfg).is_err());
    }

    #[test]
    fn filter_application() {
        let c4 = arc(gen_regular(4, 2, 0).unwrap());
        let un = build_filter(&c4, FilterKind::Unnormalized).unwrap();
        let ones = DVector::from_element(4, 1.0);
        assert_eq!(apply_filter_vec(&un, &ones).unwrap(), DVector::from_element(4, 3.0));
        let ident = build_filter(&c4, FilterKind::Polynomial(vec![1.0])).unwrap();
        let s = DMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 - 2.0);
        assert_eq!(apply_filter(&ident, &s).unwrap(), s);
        assert!(apply_filter(&un, &DMatrix::zeros(3, 1)).is_err());
        assert!(apply_filter_vec(&un, &DVector::zeros(5)).is_err());
    }

    #[test]
    fn random_walk_interlaces_only_in_symmetric_form() {
        let f = build_filter(&arc(gen_erdos_renyi(16, 0.05, 219).unwrap()), FilterKind::RandomWalk).unwrap();
        let lambda = f.lambda_max_abs().unwrap();
        assert!((0..16).any(|v| operator_norm(&neighborhood_submatrix(&f, v)) > lambda + 1e-9));
        assert!((0..16).all(|v| operator_norm(&symmetric_neighborhood_submatrix(&f, v)) <= lambda + 1e-9));
    }

    #[test]
    fn neighbourhood_submatrices() {
        let empty = arc(gen_erdos_renyi(4, 0.0, 0).unwrap());
        let rw = build_filter(&empty, FilterKind::RandomWalk).unwrap();
        assert_eq!(neighborhood_submatrix(&rw, 2), DMatrix::from_element(1, 1, 2.0));

        let c4 = arc(gen_regular(4, 2, 0).unwrap());
        let un = build_filter(&c4, FilterKind::Unnormalized).unwrap();
        assert_eq!(c4.neighbors(0), &[0, 1, 3]);
        let sub = neighborhood_submatrix(&un, 0);
        // indices {0,1,3}: 1–3 is not an edge of C4
        let expected = DMatrix::from_row_slice(3, 3, &[1., 1., 1., 1., 1., 0., 1., 0., 1.]);
        assert_eq!(sub, expected);
    }

    #[test]
    fn exports() {
        let c = arc(gen_regular(3, 2, 0).unwrap());
        let rw = build_filter(&c, FilterKind::RandomWalk).unwrap();
        let csv = rw.to_csv();
        let first: Vec<f64> = csv.lines().next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, vec![1.0 + 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let json = serde_json::to_value(rw.to_json()).unwrap();
        assert_eq!(json["kind"], "random_walk");
        assert_eq!(json["triplets"].as_array().unwrap().len(), 9);
        let poly = build_filter(&c, FilterKind::Polynomial(vec![1.0, 0.5])).unwrap();
        let pj = serde_json::to_value(poly.to_json()).unwrap();
        assert_eq!(pj["kind"]["polynomial"][1], 0.5);
    }
}
