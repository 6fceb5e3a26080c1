//! Route-selection Markov chain: sparse transition matrix, distribution
//! evolution, stationary distribution, convergence distance and spectral
//! estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::generators::{GeneratorConfig, GeneratorError};
use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("node {0} has no out-neighbors")]
    ZeroOutDegree(u32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("distribution invalid: {0}")]
    InvalidDistribution(String),
    #[error("stationary iteration did not converge: residual {residual:.3e} after {iterations} iterations (lazy mode may help)")]
    StationaryNotConverged { residual: f64, iterations: usize },
    #[error("stationary distribution has a zero entry at node {0}")]
    ZeroStationaryEntry(usize),
    #[error("conductance requires an undirected connected graph with 2..=24 nodes, got {0}")]
    ConductanceDomain(String),
    #[error("generator failure in size sweep: {0}")]
    Generator(#[from] GeneratorError),
}

/// Probability vector over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn uniform(n: usize) -> Distribution {
        assert!(n > 0);
        Distribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, node: usize) -> Distribution {
        assert!(node < n);
        let mut probs = vec![0.0; n];
        probs[node] = 1.0;
        Distribution { probs }
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Distribution, MarkovError> {
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(MarkovError::InvalidDistribution(
                "negative or non-finite entry".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MarkovError::InvalidDistribution(format!(
                "mass {total} not within 1e-9 of 1"
            )));
        }
        Ok(Distribution { probs })
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Sparse row-stochastic matrix in CSR layout. Row i holds probability
/// 1/outdeg(i) on each out-neighbor of i.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    reversible: bool,
}

/// Second-eigenvalue estimate. `lambda2` is the absolute value of the
/// second-largest (by signed value) eigenvalue of the chain; `method`
/// records whether it came from deflated power iteration (reversible
/// chains) or from the decay rate of the pointwise distance.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub lambda2: f64,
    pub lambda2_signed: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: String,
}

#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub dist: Distribution,
    pub residual: f64,
    pub iterations: usize,
}

impl TransitionMatrix {
    pub fn from_graph(g: &Graph) -> Result<TransitionMatrix, MarkovError> {
        let n = g.n();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(2 * g.edge_count());
        let mut vals = Vec::with_capacity(2 * g.edge_count());
        row_ptr.push(0);
        for u in 0..n as u32 {
            let nbrs = g.neighbors(u);
            if nbrs.is_empty() {
                return Err(MarkovError::ZeroOutDegree(u));
            }
            let p = 1.0 / nbrs.len() as f64;
            for &v in nbrs {
                cols.push(v);
                vals.push(p);
            }
            row_ptr.push(cols.len());
        }
        Ok(TransitionMatrix {
            n,
            row_ptr,
            cols,
            vals,
            reversible: !g.directed(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when the chain came from an undirected graph, which makes it
    /// reversible with respect to the degree stationary distribution.
    pub fn reversible(&self) -> bool {
        self.reversible
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// q' = q P (left multiplication: distribution evolution).
    pub fn step(&self, q: &Distribution) -> Result<Distribution, MarkovError> {
        if q.n() != self.n {
            return Err(MarkovError::DimensionMismatch(q.n(), self.n));
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let qi = q.probs[i];
            if qi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out[c as usize] += qi * v;
            }
        }
        Ok(Distribution { probs: out })
    }

    /// q' = q (P + I)/2, the lazy walk. Same stationary distribution for
    /// reversible chains, never periodic.
    pub fn step_lazy(&self, q: &Distribution) -> Result<Distribution, MarkovError> {
        let stepped = self.step(q)?;
        let probs = stepped
            .probs
            .iter()
            .zip(&q.probs)
            .map(|(&a, &b)| 0.5 * (a + b))
            .collect();
        Ok(Distribution { probs })
    }

    /// y = P x (right multiplication: used by spectral power iteration).
    fn apply_right(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            out[i] = acc;
        }
        out
    }

    /// Stationary distribution by power iteration from the uniform start.
    /// Convergence when the L1 change between successive iterates drops
    /// below `tol`. Periodic chains never converge here; enable `lazy`.
    pub fn stationary(
        &self,
        tol: f64,
        max_iter: usize,
        lazy: bool,
    ) -> Result<StationaryResult, MarkovError> {
        let mut q = Distribution::uniform(self.n);
        for it in 1..=max_iter {
            let next = if lazy { self.step_lazy(&q)? } else { self.step(&q)? };
            let diff: f64 = next
                .probs
                .iter()
                .zip(&q.probs)
                .map(|(&a, &b)| (a - b).abs())
                .sum();
            q = next;
            if diff <= tol {
                let residual = self.residual_l1(&q)?;
                return Ok(StationaryResult {
                    dist: q,
                    residual,
                    iterations: it,
                });
            }
        }
        let residual = self.residual_l1(&q)?;
        Err(MarkovError::StationaryNotConverged {
            residual,
            iterations: max_iter,
        })
    }

    fn residual_l1(&self, q: &Distribution) -> Result<f64, MarkovError> {
        let next = self.step(q)?;
        Ok(next
            .probs
            .iter()
            .zip(&q.probs)
            .map(|(&a, &b)| (a - b).abs())
            .sum())
    }

    /// Estimates the second-largest eigenvalue. Reversible chains use
    /// power iteration on the lazy operator with the all-ones eigenvector
    /// deflated under the pi-weighted inner product; non-reversible chains
    /// fall back to the geometric decay rate of the pointwise distance.
    pub fn lambda2_estimate(
        &self,
        pi: &Distribution,
        tol: f64,
        max_iter: usize,
    ) -> Result<SpectralSummary, MarkovError> {
        if pi.n() != self.n {
            return Err(MarkovError::DimensionMismatch(pi.n(), self.n));
        }
        if let Some(i) = pi.probs.iter().position(|&p| p <= 0.0) {
            return Err(MarkovError::ZeroStationaryEntry(i));
        }
        if self.reversible {
            Ok(self.lambda2_deflated(pi, tol, max_iter))
        } else {
            self.lambda2_rpd_decay(pi, tol, max_iter)
        }
    }

    fn lambda2_deflated(&self, pi: &Distribution, tol: f64, max_iter: usize) -> SpectralSummary {
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .zip(&pi.probs)
                .map(|((&x, &y), &w)| w * x * y)
                .sum()
        };
        let deflate = |x: &mut [f64]| {
            // remove the constant mode: <x,1>_pi * 1, with <1,1>_pi = 1
            let c: f64 = x.iter().zip(&pi.probs).map(|(&v, &w)| w * v).sum();
            for v in x.iter_mut() {
                *v -= c;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2b);
        let mut x: Vec<f64> = (0..self.n).map(|_| rng.gen::<f64>() - 0.5).collect();
        deflate(&mut x);
        let norm = dot(&x, &x).sqrt();
        if norm < 1e-300 {
            // deflated space is numerically empty (n = 1)
            return self.summary_from_mu(0.5, 0, true, "deflation");
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
        let mut mu_prev = f64::NAN;
        let mut stable = 0usize;
        let mut mu = 0.0;
        let mut iterations = 0usize;
        let mut converged = false;
        for it in 1..=max_iter {
            iterations = it;
            let px = self.apply_right(&x);
            let mut y: Vec<f64> = x.iter().zip(&px).map(|(&a, &b)| 0.5 * (a + b)).collect();
            mu = dot(&x, &y);
            deflate(&mut y);
            let norm = dot(&y, &y).sqrt();
            if norm < 1e-300 {
                // operator annihilates the deflated space: eigenvalue 0
                mu = 0.0;
                converged = true;
                break;
            }
            for v in y.iter_mut() {
                *v /= norm;
            }
            x = y;
            if (mu - mu_prev).abs() <= tol {
                stable += 1;
                if stable >= 3 {
                    converged = true;
                    break;
                }
            } else {
                stable = 0;
            }
            mu_prev = mu;
        }
        self.summary_from_mu(mu, iterations, converged, "deflation")
    }

    fn summary_from_mu(
        &self,
        mu: f64,
        iterations: usize,
        converged: bool,
        method: &str,
    ) -> SpectralSummary {
        // lazy operator eigenvalue mu = (lambda + 1)/2
        let signed = (2.0 * mu - 1.0).clamp(-1.0, 1.0);
        let lambda2 = signed.abs().clamp(0.0, 1.0);
        SpectralSummary {
            lambda2,
            lambda2_signed: signed,
            gap: 1.0 - lambda2,
            iterations,
            converged,
            method: method.to_string(),
        }
    }

    fn lambda2_rpd_decay(
        &self,
        pi: &Distribution,
        tol: f64,
        max_iter: usize,
    ) -> Result<SpectralSummary, MarkovError> {
        // start from the node with smallest stationary mass: slowest mode
        // tends to show up there
        let start = pi
            .probs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let mut q = Distribution::point_mass(self.n, start);
        let mut prev = rpd(&q, pi)?;
        let mut ratios: Vec<f64> = Vec::new();
        let mut iterations = 0usize;
        for it in 1..=max_iter {
            iterations = it;
            q = self.step_lazy(&q)?;
            let r = rpd(&q, pi)?;
            if prev > 0.0 && r > 0.0 {
                ratios.push(r / prev);
            }
            prev = r;
            if r < 1e-10 {
                break;
            }
        }
        let window = 20.min(ratios.len());
        if window == 0 {
            return Ok(self.summary_from_mu(0.5, iterations, false, "rpd-decay"));
        }
        let tail = &ratios[ratios.len() - window..];
        let log_mean: f64 = tail.iter().map(|r| r.ln()).sum::<f64>() / window as f64;
        let mu = log_mean.exp().clamp(0.0, 1.0);
        let spread = tail
            .iter()
            .map(|r| (r.ln() - log_mean).abs())
            .fold(0.0_f64, f64::max);
        let converged = window >= 10 && spread <= tol.max(1e-3);
        Ok(self.summary_from_mu(mu, iterations, converged, "rpd-decay"))
    }
}

/// Closed-form stationary distribution pi_i = d_i / 2L for undirected
/// connected graphs.
pub fn degree_stationary(g: &Graph) -> Result<Distribution, MarkovError> {
    assert!(!g.directed(), "closed form requires an undirected graph");
    let two_l = (2 * g.edge_count()) as f64;
    let probs: Vec<f64> = (0..g.n() as u32)
        .map(|u| g.out_degree(u) as f64 / two_l)
        .collect();
    Distribution::from_probs(probs)
}

/// Relative pointwise distance max_i |q_i - pi_i| / pi_i.
pub fn rpd(q: &Distribution, pi: &Distribution) -> Result<f64, MarkovError> {
    if q.n() != pi.n() {
        return Err(MarkovError::DimensionMismatch(q.n(), pi.n()));
    }
    let mut worst = 0.0_f64;
    for (i, (&qi, &pii)) in q.probs.iter().zip(&pi.probs).enumerate() {
        if pii <= 0.0 {
            return Err(MarkovError::ZeroStationaryEntry(i));
        }
        worst = worst.max((qi - pii).abs() / pii);
    }
    Ok(worst)
}

/// Smallest t with lambda2^t / pi_min <= delta_target.
pub fn sinclair_steps(lambda2: f64, pi_min: f64, delta_target: f64) -> Result<u64, MarkovError> {
    if !(lambda2 > 0.0 && lambda2 < 1.0) {
        return Err(MarkovError::InvalidDistribution(format!(
            "lambda2 must be in (0,1), got {lambda2}"
        )));
    }
    if !(pi_min > 0.0 && pi_min <= 1.0) || !(delta_target > 0.0) {
        return Err(MarkovError::InvalidDistribution(
            "pi_min must be in (0,1], delta_target > 0".into(),
        ));
    }
    if 1.0 / pi_min <= delta_target {
        return Ok(0);
    }
    // closed-form guess, then correct for floating error around the boundary
    let guess = ((delta_target * pi_min).ln() / lambda2.ln()).ceil() as i64;
    let mut t = (guess - 2).max(0) as u64;
    while lambda2.powi(t as i32) / pi_min > delta_target {
        t += 1;
    }
    Ok(t)
}

/// Exact conductance by exhaustive subset enumeration:
/// min over S with vol(S) <= vol(V)/2 of cut(S, ~S) / vol(S).
pub fn conductance_exact(g: &Graph) -> Result<f64, MarkovError> {
    if g.directed() {
        return Err(MarkovError::ConductanceDomain("directed graph".into()));
    }
    let n = g.n();
    if !(2..=24).contains(&n) {
        return Err(MarkovError::ConductanceDomain(format!("n={n}")));
    }
    if !g.is_connected() {
        return Err(MarkovError::ConductanceDomain("disconnected graph".into()));
    }
    let adj_mask: Vec<u32> = (0..n as u32)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let degs: Vec<u32> = (0..n as u32).map(|u| g.out_degree(u) as u32).collect();
    let total_vol: u32 = degs.iter().sum();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut vol = 0u32;
        let mut cut = 0u32;
        let mut rest = mask;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            vol += degs[u];
            cut += (adj_mask[u] & !mask).count_ones();
        }
        if 2 * vol <= total_vol {
            best = best.min(f64::from(cut) / f64::from(vol));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeSweepRow {
    pub n: usize,
    pub mean_lambda2: f64,
    pub stddev: f64,
}

/// Generates the model at each size, estimates lambda2 per trial and
/// summarizes. Used to check that the second eigenvalue does not move
/// with network size.
pub fn lambda2_size_experiment(
    template: &GeneratorConfig,
    sizes: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<SizeSweepRow>, MarkovError> {
    assert!(trials >= 1);
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let config = template.with_size(size);
        let mut estimates = Vec::with_capacity(trials);
        for trial in 0..trials {
            let seed = crate::sub_seed(base_seed, &format!("sweep-{size}-{trial}"));
            let g = config.generate(seed)?;
            let (g, _, _) = g.giant_component();
            let p = TransitionMatrix::from_graph(&g)?;
            let pi = if g.directed() {
                p.stationary(1e-12, 200_000, true)?.dist
            } else {
                degree_stationary(&g)?
            };
            let summary = p.lambda2_estimate(&pi, 1e-10, 5000)?;
            estimates.push(summary.lambda2);
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let var = estimates
            .iter()
            .map(|&x| (x - mean).powi(2))
            .sum::<f64>()
            / estimates.len() as f64;
        rows.push(SizeSweepRow {
            n: size,
            mean_lambda2: mean,
            stddev: var.sqrt(),
        });
    }
    Ok(rows)
}
