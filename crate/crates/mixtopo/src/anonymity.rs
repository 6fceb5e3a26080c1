//! Entropy-based anonymity metrics, convergence profiling and route
//! length recommendation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::markov::{rpd, Distribution, MarkovError, TransitionMatrix};

#[derive(Debug, Error)]
pub enum AnonymityError {
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("invalid fraction {0}: must be in (0, 1]")]
    InvalidFraction(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Shannon entropy in bits, with 0 log 0 = 0.
pub fn entropy(d: &Distribution) -> f64 {
    d.probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Entropy of the stationary distribution: the network-wide ceiling on
/// the anonymity a route can provide.
pub fn max_anonymity(pi: &Distribution) -> f64 {
    entropy(pi)
}

/// Rule deciding the convergence step of a trace. Entropy gaps are
/// two-sided: the evolving entropy can sit above or below the stationary
/// entropy depending on the initial distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ConvergenceCriterion {
    /// |entropy(t) - entropy(pi)| <= threshold.
    EntropyGap { threshold: f64 },
    /// Entropy gap within threshold for `hold` consecutive steps;
    /// t_converge is the first step of the run.
    SustainedEntropyGap { threshold: f64, hold: usize },
    /// Pointwise distance <= threshold.
    Rpd { threshold: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub t: usize,
    pub entropy_bits: f64,
    pub rpd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub max_anonymity_bits: f64,
    /// None when the criterion was not met within the trace horizon.
    pub t_converge: Option<usize>,
    pub criterion: ConvergenceCriterion,
    pub trace: Vec<TracePoint>,
}

impl ConvergenceReport {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), AnonymityError> {
        let mut out = String::from("t,entropy_bits,rpd\n");
        for p in &self.trace {
            writeln!(out, "{},{:.12},{:.12}", p.t, p.entropy_bits, p.rpd).unwrap();
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Evolves q0 for t_max steps (lazy chain when `lazy`), recording entropy
/// and pointwise distance at every step, and locates the convergence step
/// under the given criterion.
pub fn convergence_profile(
    p: &TransitionMatrix,
    q0: &Distribution,
    pi: &Distribution,
    t_max: usize,
    criterion: ConvergenceCriterion,
    lazy: bool,
) -> Result<ConvergenceReport, AnonymityError> {
    assert!(t_max >= 1);
    let max_bits = max_anonymity(pi);
    let mut trace = Vec::with_capacity(t_max + 1);
    let mut q = q0.clone();
    trace.push(TracePoint {
        t: 0,
        entropy_bits: entropy(&q),
        rpd: rpd(&q, pi)?,
    });
    for t in 1..=t_max {
        q = if lazy { p.step_lazy(&q)? } else { p.step(&q)? };
        trace.push(TracePoint {
            t,
            entropy_bits: entropy(&q),
            rpd: rpd(&q, pi)?,
        });
    }
    let t_converge = find_convergence(&trace, max_bits, criterion);
    Ok(ConvergenceReport {
        max_anonymity_bits: max_bits,
        t_converge,
        criterion,
        trace,
    })
}

fn find_convergence(
    trace: &[TracePoint],
    max_bits: f64,
    criterion: ConvergenceCriterion,
) -> Option<usize> {
    match criterion {
        ConvergenceCriterion::EntropyGap { threshold } => trace
            .iter()
            .find(|p| (p.entropy_bits - max_bits).abs() <= threshold)
            .map(|p| p.t),
        ConvergenceCriterion::Rpd { threshold } => {
            trace.iter().find(|p| p.rpd <= threshold).map(|p| p.t)
        }
        ConvergenceCriterion::SustainedEntropyGap { threshold, hold } => {
            let hold = hold.max(1);
            let ok: Vec<bool> = trace
                .iter()
                .map(|p| (p.entropy_bits - max_bits).abs() <= threshold)
                .collect();
            (0..ok.len().saturating_sub(hold - 1))
                .find(|&start| ok[start..start + hold].iter().all(|&b| b))
                .map(|start| trace[start].t)
        }
    }
}

/// Smallest step whose entropy reaches the given fraction of the maximal
/// anonymity. fraction = 1.0 means saturation: within 0.01 bits of the
/// maximum.
pub fn recommend_route_length(
    report: &ConvergenceReport,
    fraction: f64,
) -> Result<Option<usize>, AnonymityError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AnonymityError::InvalidFraction(fraction));
    }
    let target = if fraction >= 1.0 {
        report.max_anonymity_bits - 0.01
    } else {
        fraction * report.max_anonymity_bits
    };
    Ok(report
        .trace
        .iter()
        .find(|p| p.entropy_bits >= target)
        .map(|p| p.t))
}
