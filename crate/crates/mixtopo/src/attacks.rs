//! Compromised-route Monte Carlo simulation, analytic compromise
//! probability for hub cliques, the Chernoff-style route bound, and
//! intersection-attack batch sizing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::markov::{degree_stationary, MarkovError, TransitionMatrix};
use crate::sub_seed;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

#[derive(Debug, Clone, Serialize)]
pub struct CompromiseScenario {
    pub compromised: Vec<u32>,
    pub walk_length: usize,
    pub n_walks: usize,
    pub seed: u64,
    /// Worker count; results are reproducible for a fixed value.
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompromiseReport {
    pub walk_length: usize,
    pub n_walks: usize,
    pub hits: usize,
    /// Fraction of sampled routes whose every node is compromised.
    pub compromised_fraction: f64,
    /// 95% normal-approximation binomial half-width.
    pub ci_half_width: f64,
    /// Stationary mass of the compromised set.
    pub pi_mass: f64,
}

/// The k nodes of highest degree, ties broken by smaller id.
pub fn top_degree_nodes(g: &Graph, k: usize) -> Vec<u32> {
    assert!(k <= g.n());
    let mut nodes: Vec<u32> = (0..g.n() as u32).collect();
    nodes.sort_by_key(|&u| (std::cmp::Reverse(g.out_degree(u)), u));
    nodes.truncate(k);
    nodes
}

/// Samples routes as random walks (first node uniform, then uniform over
/// out-neighbors) and counts those that stay entirely inside the
/// compromised set. A length-t route visits t nodes.
pub fn simulate_compromise(
    g: &Graph,
    scenario: &CompromiseScenario,
) -> Result<CompromiseReport, AttackError> {
    if scenario.walk_length < 1 || scenario.n_walks < 1 {
        return Err(AttackError::InvalidScenario(
            "walk_length and n_walks must be >= 1".into(),
        ));
    }
    let n = g.n();
    let mut member = vec![false; n];
    for &u in &scenario.compromised {
        if u as usize >= n {
            return Err(AttackError::InvalidScenario(format!(
                "compromised node {u} outside graph"
            )));
        }
        member[u as usize] = true;
    }
    let pi_mass = stationary_mass(g, &member)?;
    let threads = scenario.threads.max(1);
    let hits: usize = if threads == 1 {
        run_walks(g, &member, scenario.walk_length, scenario.n_walks, scenario.seed, 0)
    } else {
        let per = scenario.n_walks / threads;
        let extra = scenario.n_walks % threads;
        std::thread::scope(|scope| {
            let member = &member;
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let count = per + usize::from(w < extra);
                    scope.spawn(move || {
                        run_walks(g, member, scenario.walk_length, count, scenario.seed, w)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };
    let frac = hits as f64 / scenario.n_walks as f64;
    let ci = 1.96 * (frac * (1.0 - frac) / scenario.n_walks as f64).sqrt();
    Ok(CompromiseReport {
        walk_length: scenario.walk_length,
        n_walks: scenario.n_walks,
        hits,
        compromised_fraction: frac,
        ci_half_width: ci,
        pi_mass,
    })
}

fn stationary_mass(g: &Graph, member: &[bool]) -> Result<f64, AttackError> {
    let pi = if g.directed() {
        let p = TransitionMatrix::from_graph(g)?;
        p.stationary(1e-12, 200_000, true)?.dist
    } else {
        degree_stationary(g)?
    };
    Ok(pi
        .probs()
        .iter()
        .zip(member)
        .filter(|(_, &m)| m)
        .map(|(&p, _)| p)
        .sum())
}

fn run_walks(
    g: &Graph,
    member: &[bool],
    walk_length: usize,
    n_walks: usize,
    seed: u64,
    worker: usize,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("walks-{worker}")));
    let n = g.n();
    let mut hits = 0usize;
    'walks: for _ in 0..n_walks {
        let mut at = rng.gen_range(0..n) as u32;
        if !member[at as usize] {
            continue;
        }
        for _ in 1..walk_length {
            let nbrs = g.neighbors(at);
            at = nbrs[rng.gen_range(0..nbrs.len())];
            if !member[at as usize] {
                continue 'walks;
            }
        }
        hits += 1;
    }
    hits
}

/// Closed-form full-compromise probability for a clique of hubs B:
/// (|B|-1) / prod(k_j), zero when the route is longer than |B|.
pub fn analytic_compromise_ba(degrees_of_b: &[usize], route_length: usize) -> f64 {
    assert!(degrees_of_b.iter().all(|&d| d >= 1));
    if degrees_of_b.len() <= 1 || route_length > degrees_of_b.len() {
        return 0.0;
    }
    let product: f64 = degrees_of_b.iter().map(|&d| d as f64).product();
    (degrees_of_b.len() as f64 - 1.0) / product
}

/// Upper bound on the probability that a t-step route stays inside a set
/// with stationary mass pi_s, given eigenvalue gap = 1 - lambda2:
/// (1 + (1-pi_s) gap / 10) * exp(-t (1-pi_s)^2 gap / 20), clamped to [0,1].
pub fn gilbert_bound(pi_s: f64, gap: f64, t: u32) -> f64 {
    assert!((0.0..=1.0).contains(&pi_s));
    assert!((0.0..=1.0).contains(&gap));
    let miss = 1.0 - pi_s;
    let value = (1.0 + miss * gap / 10.0) * (-f64::from(t) * miss * miss * gap / 20.0).exp();
    value.clamp(0.0, 1.0)
}

/// Per-node batch size against the intersection attack:
/// b = (9/f^2)(degree - 1), with f a raw percentage (f = 5 means 5%).
pub fn batch_size(degree: usize, f: f64) -> f64 {
    assert!(degree >= 1);
    assert!(f > 0.0, "traffic deviation percentage must be positive");
    (9.0 / (f * f)) * (degree as f64 - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkBatch {
    pub max_degree: usize,
    /// 1 / max degree: link probability at the highest-degree node.
    pub p_min: f64,
    pub batch_size: f64,
}

/// Network-wide batch size: driven by the highest-degree node.
pub fn network_batch_size(g: &Graph, f: f64) -> NetworkBatch {
    let (_, summary) = g.degree_stats();
    NetworkBatch {
        max_degree: summary.max,
        p_min: 1.0 / summary.max as f64,
        batch_size: batch_size(summary.max, f),
    }
}
