//! Capacity model of attention dilution versus explicit slicing.
//!
//! The setting: a context of `N` segments holds exactly one gold segment.
//! A baseline reader with effective capacity `T` behaves like uniform
//! sampling of `T` segments without replacement, so its success decays as
//! `T/N`. A slicer with selection recall `q` keeps its floor `q * p`
//! regardless of `N`; it wins exactly when `q > T/N`. Closed forms and a
//! seeded Monte Carlo realization live side by side so each can check the
//! other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use alloc::vec::Vec;

/// Parameters of the capacity model.
///
/// `n_segments` and `capacity` are at least 1; the probabilities are the
/// slicer's selection recall `q` and the reasoner's success given gold
/// evidence `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilutionParams {
    pub n_segments: usize,
    pub capacity: usize,
    pub selection_recall: f64,
    pub reason_given_gold: f64,
}

impl DilutionParams {
    pub fn new(
        n_segments: usize,
        capacity: usize,
        selection_recall: f64,
        reason_given_gold: f64,
    ) -> Result<Self, DilutionError> {
        if n_segments < 1 {
            return Err(DilutionError::ZeroSegments);
        }
        if capacity < 1 {
            return Err(DilutionError::ZeroCapacity);
        }
        if !(0.0..=1.0).contains(&selection_recall) {
            return Err(DilutionError::InvalidProbability("selection_recall"));
        }
        if !(0.0..=1.0).contains(&reason_given_gold) {
            return Err(DilutionError::InvalidProbability("reason_given_gold"));
        }
        Ok(Self {
            n_segments,
            capacity,
            selection_recall,
            reason_given_gold,
        })
    }
}

/// Closed-form baseline success: `min(T/N, 1) * p`.
pub fn baseline_success(params: &DilutionParams) -> f64 {
    let ratio = params.capacity as f64 / params.n_segments as f64;
    ratio.min(1.0) * params.reason_given_gold
}

/// Closed-form slicing floor: `q * p`, independent of `N`.
pub fn slice_floor(params: &DilutionParams) -> f64 {
    params.selection_recall * params.reason_given_gold
}

/// Strict crossover condition `q > T/N`; for `p > 0` this is exactly when
/// the slicing floor beats the baseline.
pub fn crossover_holds(params: &DilutionParams) -> bool {
    params.selection_recall > params.capacity as f64 / params.n_segments as f64
}

/// Monte Carlo estimates of baseline and slice success frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub baseline: f64,
    pub slice: f64,
}

/// Run `trials` independent trials of both processes.
///
/// Per trial the baseline samples `min(T, N)` of the `N` segments without
/// replacement and succeeds iff the gold segment was drawn and an
/// independent Bernoulli(`p`) succeeds; the slice arm succeeds iff
/// Bernoulli(`q`) and Bernoulli(`p`) both succeed. Deterministic given
/// `seed`. `trials` must be positive.
pub fn simulate(params: &DilutionParams, trials: usize, seed: u64) -> SimulationEstimate {
    assert!(trials >= 1, "trials must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_segments;
    let draw = params.capacity.min(n);
    let mut baseline_hits = 0usize;
    let mut slice_hits = 0usize;
    for _ in 0..trials {
        // Gold segment sits at index 0 without loss of generality.
        let gold_drawn = rand::seq::index::sample(&mut rng, n, draw)
            .iter()
            .any(|i| i == 0);
        if gold_drawn && rand::Rng::random_bool(&mut rng, params.reason_given_gold) {
            baseline_hits += 1;
        }
        if rand::Rng::random_bool(&mut rng, params.selection_recall)
            && rand::Rng::random_bool(&mut rng, params.reason_given_gold)
        {
            slice_hits += 1;
        }
    }
    SimulationEstimate {
        baseline: baseline_hits as f64 / trials as f64,
        slice: slice_hits as f64 / trials as f64,
    }
}

/// One row of a context-length sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_segments: usize,
    pub baseline: f64,
    pub slice_floor: f64,
}

/// Closed-form sweep over context lengths with `T`, `q`, `p` fixed.
///
/// The baseline column decays toward zero while the slice column stays
/// constant. `n_values` must be nonempty with every entry at least
/// `capacity`.
pub fn asymptotic_sweep(
    capacity: usize,
    selection_recall: f64,
    reason_given_gold: f64,
    n_values: &[usize],
) -> Vec<SweepRow> {
    assert!(!n_values.is_empty(), "n_values must be nonempty");
    n_values
        .iter()
        .map(|&n| {
            assert!(n >= capacity, "each n must be at least the capacity");
            let params = DilutionParams {
                n_segments: n,
                capacity,
                selection_recall,
                reason_given_gold,
            };
            SweepRow {
                n_segments: n,
                baseline: baseline_success(&params),
                slice_floor: slice_floor(&params),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DilutionError {
    #[error("n_segments must be at least 1")]
    ZeroSegments,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("{0} must lie in [0, 1]")]
    InvalidProbability(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(n: usize, t: usize, q: f64, p: f64) -> DilutionParams {
        DilutionParams::new(n, t, q, p).unwrap()
    }

    /// Independent oracle: enumerate every T-subset of {0, .., N-1} and
    /// count the ones containing the gold index 0.
    fn enumerate_gold_fraction(n: usize, t: usize) -> (usize, usize) {
        fn rec(
            start: usize,
            n: usize,
            left: usize,
            has_gold: bool,
            total: &mut usize,
            with_gold: &mut usize,
        ) {
            if left == 0 {
                *total += 1;
                if has_gold {
                    *with_gold += 1;
                }
                return;
            }
            for i in start..n {
                rec(i + 1, n, left - 1, has_gold || i == 0, total, with_gold);
            }
        }
        let mut total = 0;
        let mut with_gold = 0;
        rec(0, n, t, false, &mut total, &mut with_gold);
        (with_gold, total)
    }

    #[test]
    fn baseline_matches_brute_force_enumeration() {
        // All 45 two-element subsets of ten segments; 9 contain the gold.
        let (with_gold, total) = enumerate_gold_fraction(10, 2);
        assert_eq!((with_gold, total), (9, 45));
        let expected = with_gold as f64 / total as f64;
        assert!((baseline_success(&params(10, 2, 0.5, 1.0)) - expected).abs() < 1e-12);
        assert!((expected - 0.2).abs() < 1e-12);

        for &(n, t) in &[(4usize, 2usize), (6, 3), (8, 2), (5, 5), (7, 1)] {
            let (wg, tot) = enumerate_gold_fraction(n, t);
            let got = baseline_success(&params(n, t, 0.0, 1.0));
            assert!(
                (got - wg as f64 / tot as f64).abs() < 1e-12,
                "closed form disagrees with enumeration at N={n}, T={t}"
            );
        }
    }

    #[test]
    fn baseline_edge_cases() {
        assert_eq!(baseline_success(&params(7, 7, 0.3, 0.9)), 0.9);
        assert_eq!(baseline_success(&params(10, 2, 0.5, 0.0)), 0.0);
        // Capacity beyond N clamps at 1.
        assert_eq!(baseline_success(&params(3, 9, 0.0, 1.0)), 1.0);
    }

    #[test]
    fn slice_floor_examples() {
        assert_eq!(slice_floor(&params(10, 2, 0.5, 1.0)), 0.5);
        assert_eq!(slice_floor(&params(10, 2, 0.0, 1.0)), 0.0);
        assert_eq!(slice_floor(&params(10, 2, 1.0, 1.0)), 1.0);
    }

    #[test]
    fn crossover_is_strict() {
        assert!(crossover_holds(&params(10, 2, 0.5, 1.0)));
        assert!(!crossover_holds(&params(10, 2, 0.2, 1.0)));
        assert!(!crossover_holds(&params(5, 5, 1.0, 1.0)));
    }

    #[test]
    fn crossover_implies_strictly_better_floor() {
        for &(n, t, q) in &[(10usize, 2usize, 0.5), (100, 2, 0.1), (4, 2, 0.9)] {
            let p = params(n, t, q, 0.7);
            if crossover_holds(&p) {
                assert!(slice_floor(&p) > baseline_success(&p));
            }
        }
    }

    #[test]
    fn simulate_is_deterministic_and_exact_at_degenerate_probs() {
        let p = params(10, 2, 0.5, 0.0);
        let a = simulate(&p, 5_000, 7);
        let b = simulate(&p, 5_000, 7);
        assert_eq!(a, b);
        assert_eq!(a.baseline, 0.0);
        assert_eq!(a.slice, 0.0);

        let sure = simulate(&params(1, 1, 1.0, 1.0), 1_000, 3);
        assert_eq!(sure.baseline, 1.0);
        assert_eq!(sure.slice, 1.0);
    }

    #[test]
    fn simulate_tracks_closed_forms() {
        let p = params(10, 2, 0.5, 1.0);
        let est = simulate(&p, 20_000, 11);
        assert!((est.baseline - baseline_success(&p)).abs() < 0.02);
        assert!((est.slice - slice_floor(&p)).abs() < 0.02);
    }

    #[test]
    fn sweep_closed_form_values() {
        let rows = asymptotic_sweep(2, 0.5, 1.0, &[2, 4, 10, 100]);
        let baselines: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
        assert_eq!(baselines, vec![1.0, 0.5, 0.2, 0.02]);
        assert!(rows.iter().all(|r| r.slice_floor == 0.5));
    }

    #[test]
    fn sweep_baseline_strictly_decreasing_slice_constant() {
        let ns: Vec<usize> = (3..=40).collect();
        let rows = asymptotic_sweep(3, 0.4, 0.9, &ns);
        for pair in rows.windows(2) {
            assert!(pair[1].baseline < pair[0].baseline);
            assert_eq!(pair[1].slice_floor, pair[0].slice_floor);
        }
    }

    #[test]
    fn sweep_edge_rows() {
        let zero_q = asymptotic_sweep(2, 0.0, 1.0, &[2, 8]);
        assert!(zero_q.iter().all(|r| r.slice_floor == 0.0));
        let at_capacity = asymptotic_sweep(4, 0.5, 0.8, &[4]);
        assert_eq!(at_capacity[0].baseline, 0.8);
    }

    #[test]
    fn params_validation() {
        assert!(DilutionParams::new(0, 1, 0.5, 0.5).is_err());
        assert!(DilutionParams::new(1, 0, 0.5, 0.5).is_err());
        assert!(DilutionParams::new(1, 1, 1.5, 0.5).is_err());
        assert!(DilutionParams::new(1, 1, 0.5, -0.1).is_err());
    }
}
