//! Synthetic topology generators, all deterministic in their seed.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::sub_seed;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degree sequence could not be wired as a simple graph after {0} repair passes")]
    NonGraphical(usize),
    #[error("could not produce a connected regular graph after {0} attempts")]
    RegularRetriesExhausted(usize),
}

/// Degree-sequence shape for the power-law generator: either the raw
/// (alpha, beta) log-log line, or a target mean degree with beta solved
/// to match it on a truncated support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SfrShape {
    AlphaBeta { alpha: f64, beta: f64 },
    MeanDegree { mean: f64 },
}

/// Model plus parameters, serializable for manifests and usable as a
/// template for size sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Er { n: usize, p: f64 },
    Ba { n: usize, m: usize },
    Sfr { n: usize, shape: SfrShape },
    Kws { side: usize, radius: usize, q: usize, r_exp: f64 },
    Regular { n: usize, degree: usize },
}

impl GeneratorConfig {
    pub fn generate(&self, seed: u64) -> Result<Graph, GeneratorError> {
        match *self {
            GeneratorConfig::Er { n, p } => gen_er(n, p, seed),
            GeneratorConfig::Ba { n, m } => gen_ba(n, m, seed),
            GeneratorConfig::Sfr { n, shape } => gen_sfr(n, shape, seed),
            GeneratorConfig::Kws {
                side,
                radius,
                q,
                r_exp,
            } => gen_kws(side, radius, q, r_exp, seed),
            GeneratorConfig::Regular { n, degree } => gen_regular(n, degree, seed),
        }
    }

    /// Same model and parameters at a different node count. The lattice
    /// model maps the count to the nearest square side.
    pub fn with_size(&self, size: usize) -> GeneratorConfig {
        let mut c = self.clone();
        match &mut c {
            GeneratorConfig::Er { n, .. }
            | GeneratorConfig::Ba { n, .. }
            | GeneratorConfig::Sfr { n, .. }
            | GeneratorConfig::Regular { n, .. } => *n = size,
            GeneratorConfig::Kws { side, .. } => {
                *side = (size as f64).sqrt().round().max(2.0) as usize
            }
        }
        c
    }

    pub fn n(&self) -> usize {
        match *self {
            GeneratorConfig::Er { n, .. }
            | GeneratorConfig::Ba { n, .. }
            | GeneratorConfig::Sfr { n, .. }
            | GeneratorConfig::Regular { n, .. } => n,
            GeneratorConfig::Kws { side, .. } => side * side,
        }
    }
}

fn invalid(msg: impl Into<String>) -> GeneratorError {
    GeneratorError::InvalidParameter(msg.into())
}

/// Bernoulli random graph: each of the n(n-1)/2 pairs is an edge with
/// probability p. Sampled by geometric gap-skipping over the linearized
/// pair index, so the cost is proportional to the edge count.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph, GeneratorError> {
    if n < 2 {
        return Err(invalid("er: n must be >= 2"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("er: p must be in (0,1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n as u64 * (n as u64 - 1) / 2;
    let log1mp = (1.0 - p).ln();
    let mut idx: u64 = 0;
    let mut edges = Vec::new();
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
        let gap = (u.ln() / log1mp).floor();
        if !gap.is_finite() || gap >= total as f64 {
            break;
        }
        idx += gap as u64;
        if idx >= total {
            break;
        }
        edges.push(pair_from_index(idx, n as u64));
        idx += 1;
        if idx >= total {
            break;
        }
    }
    Ok(Graph::build(n, false, edges).0)
}

/// Maps a linear index in 0..n(n-1)/2 to the pair (u, v), u < v, in
/// row-major order over u.
fn pair_from_index(idx: u64, n: u64) -> (u32, u32) {
    // offset(u) = u*n - u*(u+1)/2 is the index of pair (u, u+1)
    let offset = |u: u64| u * n - u * (u + 1) / 2;
    let (mut lo, mut hi) = (0u64, n - 1);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if offset(mid) <= idx {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let u = lo;
    let v = u + 1 + (idx - offset(u));
    (u as u32, v as u32)
}

/// Preferential attachment: an m-node seed clique, then each arriving
/// node attaches m edges to distinct existing nodes chosen with
/// probability proportional to current degree.
pub fn gen_ba(n: usize, m: usize, seed: u64) -> Result<Graph, GeneratorError> {
    if !(1..n).contains(&m) {
        return Err(invalid("ba: need 1 <= m < n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m * (n - m) + m * (m - 1) / 2);
    // endpoint multiset: each node appears once per unit of degree
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..m as u32 {
        for v in u + 1..m as u32 {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in m as u32..n as u32 {
        chosen.clear();
        while chosen.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((v, t));
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    Ok(Graph::build(n, false, edges).0)
}

/// Node counts per degree on support 1..=cap, proportional to x^(-beta),
/// rounded to sum exactly to n by largest remainder.
fn power_law_counts(n: usize, beta: f64, cap: usize) -> Vec<usize> {
    let weights: Vec<f64> = (1..=cap).map(|x| (x as f64).powf(-beta)).collect();
    let z: f64 = weights.iter().sum();
    let shares: Vec<f64> = weights.iter().map(|w| n as f64 * w / z).collect();
    let mut counts: Vec<usize> = shares.iter().map(|&s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..cap).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

fn truncated_mean(beta: f64, cap: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for x in 1..=cap {
        let w = (x as f64).powf(-beta);
        num += x as f64 * w;
        den += w;
    }
    num / den
}

/// Solves for the exponent whose truncated power law on 1..=cap has the
/// given mean. The mean is strictly decreasing in beta.
fn solve_beta(mean: f64, cap: usize) -> Result<f64, GeneratorError> {
    let (mut lo, mut hi) = (1e-9, 30.0);
    if !(truncated_mean(hi, cap) < mean && mean < truncated_mean(lo, cap)) {
        return Err(invalid(format!(
            "sfr: mean degree {mean} unreachable on support 1..={cap}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid, cap) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Degree cutoff used in mean-degree mode, tuned so the wired graphs hit
/// the anonymity levels this model is known for at n = 5000. Piecewise
/// linear between anchors, clamped outside.
fn sfr_cap_for_mean(mean: f64, n: usize) -> usize {
    let anchors = [(2.0, 9.0), (3.0, 16.0), (4.0, 19.0), (5.0, 21.0), (6.0, 22.0)];
    let cap = if mean <= anchors[0].0 {
        anchors[0].1
    } else if mean >= anchors[4].0 {
        anchors[4].1
    } else {
        let mut v = anchors[4].1;
        for w in anchors.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if mean <= x1 {
                v = y0 + (y1 - y0) * (mean - x0) / (x1 - x0);
                break;
            }
        }
        v
    };
    (cap.round() as usize).clamp(2, n.saturating_sub(1).max(2))
}

/// Wires a degree sequence uniformly at random as a simple graph: stub
/// pairing, then conflict repair by swapping against accepted edges.
fn wire_configuration_model(
    degrees: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, u32)>, GeneratorError> {
    const MAX_PASSES: usize = 100;
    let n = degrees.len() as u64;
    let key = |u: u32, v: u32| -> u64 {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        u64::from(a) * n + u64::from(b)
    };
    let mut stubs: Vec<u32> = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat(i as u32).take(d));
    }
    assert!(stubs.len() % 2 == 0, "degree sum must be even");
    stubs.shuffle(rng);
    let mut present: HashSet<u64> = HashSet::with_capacity(stubs.len() / 2);
    let mut good: Vec<(u32, u32)> = Vec::with_capacity(stubs.len() / 2);
    let mut bad: Vec<(u32, u32)> = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u != v && present.insert(key(u, v)) {
            good.push((u, v));
        } else {
            bad.push((u, v));
        }
    }
    for _pass in 0..MAX_PASSES {
        if bad.is_empty() {
            break;
        }
        let mut next_bad = Vec::new();
        for (u, v) in bad {
            let mut fixed = false;
            for _try in 0..200 {
                let idx = rng.gen_range(0..good.len());
                let (x, y) = good[idx];
                // swap (u,v)+(x,y) into (u,x)+(v,y) or (u,y)+(v,x)
                let candidates = [((u, x), (v, y)), ((u, y), (v, x))];
                for ((a1, b1), (a2, b2)) in candidates {
                    if a1 != b1
                        && a2 != b2
                        && key(a1, b1) != key(a2, b2)
                        && !present.contains(&key(a1, b1))
                        && !present.contains(&key(a2, b2))
                    {
                        present.remove(&key(x, y));
                        present.insert(key(a1, b1));
                        present.insert(key(a2, b2));
                        good[idx] = (a1, b1);
                        good.push((a2, b2));
                        fixed = true;
                        break;
                    }
                }
                if fixed {
                    break;
                }
            }
            if !fixed {
                next_bad.push((u, v));
            }
        }
        bad = next_bad;
    }
    if !bad.is_empty() {
        return Err(GeneratorError::NonGraphical(MAX_PASSES));
    }
    Ok(good)
}

/// Random graph with a power-law degree sequence, wired by the
/// configuration model. Mean-degree mode solves the exponent so the
/// truncated sequence hits the target mean exactly; (alpha, beta) mode
/// truncates the support where the count line y = e^alpha x^(-beta)
/// drops below one node.
pub fn gen_sfr(n: usize, shape: SfrShape, seed: u64) -> Result<Graph, GeneratorError> {
    if n < 4 {
        return Err(invalid("sfr: n must be >= 4"));
    }
    let (beta, cap) = match shape {
        SfrShape::MeanDegree { mean } => {
            if !(mean > 1.0) {
                return Err(invalid("sfr: mean degree must exceed 1"));
            }
            let cap = sfr_cap_for_mean(mean, n);
            (solve_beta(mean, cap)?, cap)
        }
        SfrShape::AlphaBeta { alpha, beta } => {
            if !(beta > 0.0) {
                return Err(invalid("sfr: beta must be positive"));
            }
            let cap = ((alpha / beta).exp().floor() as usize).clamp(2, n - 1);
            (beta, cap)
        }
    };
    let mut counts = power_law_counts(n, beta, cap);
    let degree_sum: usize = counts.iter().enumerate().map(|(i, &c)| (i + 1) * c).sum();
    if degree_sum % 2 == 1 {
        // parity fix: promote one degree-1 node
        assert!(counts[0] > 0, "power-law sequence always has degree-1 nodes");
        counts[0] -= 1;
        counts[1] += 1;
    }
    let mut degrees: Vec<usize> = Vec::with_capacity(n);
    for (i, &c) in counts.iter().enumerate() {
        degrees.extend(std::iter::repeat(i + 1).take(c));
    }
    for attempt in 0..5u32 {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("sfr-{attempt}")));
        match wire_configuration_model(&degrees, &mut rng) {
            Ok(edges) => return Ok(Graph::build(n, false, edges).0),
            Err(GeneratorError::NonGraphical(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GeneratorError::NonGraphical(100))
}

/// Small-world lattice: a side x side non-wrapping grid where every node
/// links to all nodes within the given L1 radius, plus q long-range
/// directed links per node sampled with probability proportional to
/// d^(-r_exp) over nodes beyond the radius.
pub fn gen_kws(
    side: usize,
    radius: usize,
    q: usize,
    r_exp: f64,
    seed: u64,
) -> Result<Graph, GeneratorError> {
    if side < 2 {
        return Err(invalid("kws: side must be >= 2"));
    }
    if radius < 1 {
        return Err(invalid("kws: radius must be >= 1"));
    }
    if r_exp < 0.0 {
        return Err(invalid("kws: r_exp must be >= 0"));
    }
    let n = side * side;
    let max_d = 2 * (side - 1);
    if radius >= max_d {
        return Err(invalid("kws: radius leaves no long-range candidates"));
    }
    let s = side as i64;
    let node = |i: i64, j: i64| (i * s + j) as u32;
    // offsets grouped by L1 distance
    let mut offsets_by_d: Vec<Vec<(i64, i64)>> = vec![Vec::new(); max_d + 1];
    for di in -(s - 1)..=(s - 1) {
        for dj in -(s - 1)..=(s - 1) {
            let d = (di.unsigned_abs() + dj.unsigned_abs()) as usize;
            if d >= 1 && d <= max_d {
                offsets_by_d[d].push((di, dj));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs: Vec<(u32, u32)> = Vec::new();
    let mut cum: Vec<(usize, f64)> = Vec::new(); // (distance, cumulative weight)
    for i in 0..s {
        for j in 0..s {
            let u = node(i, j);
            let in_bounds = |di: i64, dj: i64| {
                let (a, b) = (i + di, j + dj);
                (0..s).contains(&a) && (0..s).contains(&b)
            };
            for d in 1..=radius.min(max_d) {
                for &(di, dj) in &offsets_by_d[d] {
                    if in_bounds(di, dj) {
                        arcs.push((u, node(i + di, j + dj)));
                    }
                }
            }
            if q == 0 {
                continue;
            }
            cum.clear();
            let mut total = 0.0;
            for (d, ring) in offsets_by_d.iter().enumerate().skip(radius + 1) {
                let count = ring.iter().filter(|&&(di, dj)| in_bounds(di, dj)).count();
                if count > 0 {
                    total += count as f64 * (d as f64).powf(-r_exp);
                    cum.push((d, total));
                }
            }
            let mut picked: Vec<u32> = Vec::with_capacity(q);
            while picked.len() < q {
                let r = rng.gen::<f64>() * total;
                let pos = cum.partition_point(|&(_, c)| c < r).min(cum.len() - 1);
                let (d, c_hi) = cum[pos];
                let c_lo = if pos == 0 { 0.0 } else { cum[pos - 1].1 };
                let w = (d as f64).powf(-r_exp);
                let k = (((r - c_lo) / w) as usize).min(
                    offsets_by_d[d]
                        .iter()
                        .filter(|&&(di, dj)| in_bounds(di, dj))
                        .count()
                        - 1,
                );
                let _ = c_hi;
                let (di, dj) = offsets_by_d[d]
                    .iter()
                    .copied()
                    .filter(|&(di, dj)| in_bounds(di, dj))
                    .nth(k)
                    .unwrap();
                let v = node(i + di, j + dj);
                if !picked.contains(&v) {
                    picked.push(v);
                }
            }
            for &v in &picked {
                arcs.push((u, v));
            }
        }
    }
    Ok(Graph::build(n, true, arcs).0)
}

/// Random D-regular graph by stub pairing with conflict repair; retries
/// with fresh sub-seeds until the result is connected and exactly regular.
pub fn gen_regular(n: usize, degree: usize, seed: u64) -> Result<Graph, GeneratorError> {
    const MAX_ATTEMPTS: usize = 50;
    if degree < 3 {
        return Err(invalid("regular: degree must be >= 3"));
    }
    if degree >= n {
        return Err(invalid("regular: degree must be < n"));
    }
    if n * degree % 2 != 0 {
        return Err(invalid("regular: n * degree must be even"));
    }
    let degrees = vec![degree; n];
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("regular-{attempt}")));
        let edges = match wire_configuration_model(&degrees, &mut rng) {
            Ok(e) => e,
            Err(GeneratorError::NonGraphical(_)) => continue,
            Err(e) => return Err(e),
        };
        let (g, _) = Graph::build(n, false, edges);
        if g.is_connected() && g.degree_sequence().degrees.iter().all(|&d| d == degree) {
            return Ok(g);
        }
    }
    Err(GeneratorError::RegularRetriesExhausted(MAX_ATTEMPTS))
}
