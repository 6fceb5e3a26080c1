//! Topology analysis for mix networks built on unstructured graphs.
//!
//! The library generates synthetic topologies (random, preferential
//! attachment, power-law degree sequence, small-world lattice, random
//! regular), models route selection as a random walk on the graph, and
//! evaluates entropy-based anonymity, spectral mixing properties, and
//! traffic-analysis attacks (compromised routes, intersection-attack
//! batch sizing).

pub mod anonymity;
pub mod attacks;
pub mod generators;
pub mod graph;
pub mod markov;

/// Derives a named sub-stream seed from a run seed so independent
/// components (generation, walks, trials) can draw from decoupled RNGs.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
