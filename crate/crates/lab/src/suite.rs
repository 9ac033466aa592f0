//! Randomized Hardy-deficit suite.

use gelfand_core::stability::{hardy_deficit, DeficitSummary, PotentialProfile, TestFunction};
use gelfand_core::sweep::Mapper;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Piecewise-linear `ξ(τ)` with 3 to 9 knots, support starting in `[-2, 40]`, knot gaps in
/// `[0.01, 5]` and interior values in `[-10, 10]`. Case `i` draws from stream `i` of `seed`.
pub fn random_test_function(seed: u64, case: u64) -> TestFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    let knots = rng.gen_range(3..=9);
    let mut tau = Vec::with_capacity(knots);
    tau.push(rng.gen_range(-2.0..40.0));
    for _ in 1..knots {
        let last = *tau.last().unwrap();
        tau.push(last + rng.gen_range(0.01..5.0));
    }
    let mut xi: Vec<f64> = (0..knots).map(|_| rng.gen_range(-10.0..10.0)).collect();
    xi[0] = 0.0;
    xi[knots - 1] = 0.0;
    TestFunction::PiecewiseLinear { tau, xi }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeficitSuite {
    pub dimension: u32,
    pub seed: u64,
    pub summary: DeficitSummary,
    pub failures: usize,
}

/// Evaluates [`hardy_deficit`] on `cases` random test functions in dimension `n`.
pub fn deficit_suite<M: Mapper>(n: u32, cases: usize, seed: u64, mapper: &M) -> DeficitSuite {
    let potential = PotentialProfile::euler(n, 0.0);
    let indices: Vec<u64> = (0..cases as u64).collect();
    let results = mapper.map(&indices, |&i| hardy_deficit(&potential, &random_test_function(seed, i)));
    let values: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    DeficitSuite {
        dimension: n,
        seed,
        summary: DeficitSummary::from_values(&values),
        failures: results.len() - values.len(),
    }
}
