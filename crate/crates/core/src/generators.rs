//! Random graph generators.
//!
//! Both generators visit unordered pairs `(u, v)`, `u < v`, in lexicographic
//! order and consume exactly one uniform `f64` per pair, so the output is a
//! pure function of the parameters and the rng state.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{rng_from_seed, Rng};

/// Erdős–Rényi `G(n, p)`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    generate_er_with(n, p, &mut rng_from_seed(seed))
}

pub fn generate_er_with(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("n", "need at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is not a probability")));
    }
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                g.insert(u, v);
            }
        }
    }
    Ok(g)
}

/// Chung–Lu vertex weights `w_i = n p (i/n)^r` for `i = 1..=n`; entry `k` of
/// the result belongs to node `k` (that is, weight index `k + 1`).
pub fn chung_lu_weights(n: usize, p: f64, r: f64) -> Vec<f64> {
    let nf = n as f64;
    (1..=n).map(|i| nf * p * (i as f64 / nf).powf(r)).collect()
}

/// Edge probability `min(w_u w_v / sum(w), 1)`.
#[inline]
fn chung_lu_prob(weights: &[f64], total: f64, u: usize, v: usize) -> f64 {
    (weights[u] * weights[v] / total).min(1.0)
}

/// Chung–Lu graph with weights from [`chung_lu_weights`].
pub fn generate_chung_lu(n: usize, p: f64, r: f64, seed: u64) -> Result<Graph> {
    generate_chung_lu_with(n, p, r, &mut rng_from_seed(seed))
}

pub fn generate_chung_lu_with(n: usize, p: f64, r: f64, rng: &mut Rng) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("n", "need at least one node"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param("p", format!("{p} must be positive and finite")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param("r", format!("{r} must be nonnegative and finite")));
    }
    let weights = chung_lu_weights(n, p, r);
    let total: f64 = weights.iter().sum();
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < chung_lu_prob(&weights, total, u, v) {
                g.insert(u, v);
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(5, 0.0, 1).unwrap().m(), 0);
        assert_eq!(generate_er(5, 1.0, 1).unwrap().m(), 10);
    }

    #[test]
    fn er_rejects_bad_p() {
        assert!(generate_er(5, -0.1, 1).is_err());
        assert!(generate_er(5, 1.5, 1).is_err());
        assert!(generate_er(5, f64::NAN, 1).is_err());
        assert!(generate_er(0, 0.5, 1).is_err());
    }

    #[test]
    fn er_is_deterministic() {
        assert_eq!(generate_er(40, 0.3, 9).unwrap(), generate_er(40, 0.3, 9).unwrap());
        assert_ne!(generate_er(40, 0.3, 9).unwrap(), generate_er(40, 0.3, 10).unwrap());
    }

    #[test]
    fn er_mean_edge_count() {
        // Binomial(4950, 0.5): mean 2475, sd sqrt(4950 * 0.25) per graph.
        let seeds = 10_000u64;
        let total: usize = (0..seeds).map(|s| generate_er(100, 0.5, s).unwrap().m()).sum();
        let mean = total as f64 / seeds as f64;
        let sd_of_mean = (4950.0f64 * 0.25).sqrt() / (seeds as f64).sqrt();
        assert!((mean - 2475.0).abs() <= 3.0 * sd_of_mean, "mean {mean}");
    }

    #[test]
    fn chung_lu_complete_at_p1_r0() {
        assert_eq!(generate_chung_lu(100, 1.0, 0.0, 3).unwrap().m(), 4950);
    }

    #[test]
    fn chung_lu_rejects_nonpositive_p() {
        assert!(generate_chung_lu(10, 0.0, 0.5, 1).is_err());
        assert!(generate_chung_lu(10, -1.0, 0.5, 1).is_err());
        assert!(generate_chung_lu(10, 0.5, -0.1, 1).is_err());
    }

    #[test]
    fn chung_lu_weights_small_case() {
        let w = chung_lu_weights(4, 0.5, 1.0);
        assert_eq!(w, vec![0.5, 1.0, 1.5, 2.0]);
        let total: f64 = w.iter().sum();
        assert_eq!(total, 5.0);
        assert!((chung_lu_prob(&w, total, 0, 1) - 0.1).abs() < 1e-15);
        assert!((chung_lu_prob(&w, total, 2, 3) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn chung_lu_edge_frequencies() {
        // Q_12 = 0.1 and Q_34 = 0.6 (1-based); 1e5 independent graphs.
        let trials = 100_000u64;
        let (mut f01, mut f23) = (0u64, 0u64);
        for s in 0..trials {
            let g = generate_chung_lu(4, 0.5, 1.0, s).unwrap();
            f01 += g.has_edge(0, 1) as u64;
            f23 += g.has_edge(2, 3) as u64;
        }
        for (count, q) in [(f01, 0.1), (f23, 0.6)] {
            let freq = count as f64 / trials as f64;
            let sd = (q * (1.0 - q) / trials as f64).sqrt();
            assert!((freq - q).abs() <= 3.0 * sd, "freq {freq} vs {q}");
        }
    }

    #[test]
    fn chung_lu_r0_matches_er_probability() {
        // With r = 0 every Q_ij equals p.
        let w = chung_lu_weights(50, 0.3, 0.0);
        let total: f64 = w.iter().sum();
        for (u, v) in [(0, 1), (10, 49), (20, 21)] {
            assert!((chung_lu_prob(&w, total, u, v) - 0.3).abs() < 1e-12);
        }
        let trials = 400u64;
        let mean = (0..trials)
            .map(|s| generate_chung_lu(50, 0.3, 0.0, s).unwrap().m() as f64)
            .sum::<f64>()
            / trials as f64;
        let sd = (1225.0f64 * 0.21).sqrt() / (trials as f64).sqrt();
        assert!((mean - 367.5).abs() <= 3.0 * sd, "mean {mean}");
    }
}
