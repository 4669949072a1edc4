//! Monte-Carlo engines for the Move-to-Front search cost.
//!
//! Replications are cut into fixed chunks of [`CHUNK`] draws; chunk `c` uses
//! the ChaCha8 stream `c` under the run seed, so a run's draws depend on the
//! seed and replication count only, never on the number of workers.

pub mod export;
pub mod search;
pub mod weights;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::quad::mixture::pitman_yor_conditional;

pub use search::{
    default_burn_in, enumerate_search_cost_law, expected_search_cost, sample_limit_mixing,
    sample_limit_search_cost, sample_search_cost_chain, sample_search_cost_exact, sample_search_cost_exact_many,
};
pub use weights::{sample_increment_ln, sample_pitman_yor_time, sample_weights, sample_weights_pitman_yor, WeightVector};

/// Iteration cap on rejection loops.
pub const REJECTION_CAP: u64 = 10_000_000;

/// Draws per RNG stream.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    pub workers: usize,
    /// Chain requests before the observed one; `None` means `50 n ln n`.
    pub burn_in: Option<u64>,
}

impl SimConfig {
    pub fn new(replications: u64, seed: u64) -> Self {
        Self {
            replications,
            seed,
            workers: 1,
            burn_in: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::domain("replications must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be >= 1"));
        }
        if self.burn_in == Some(0) {
            return Err(Error::domain("burn-in must be >= 1"));
        }
        Ok(())
    }
}

/// Which search cost to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Horizon {
    /// The `n → ∞` law.
    Limit,
    /// `n` items; every replication draws fresh weights and one exact
    /// stationary search cost.
    Exact { n: usize },
    /// As `Exact`, but by running the chain.
    Chain { n: usize },
}

impl Horizon {
    pub fn items(&self) -> Option<usize> {
        match *self {
            Horizon::Limit => None,
            Horizon::Exact { n } | Horizon::Chain { n } => Some(n),
        }
    }
}

/// Raw moments `m_j = mean(draws^j)`, `j = 1..=k`, with standard errors.
///
/// Draws are independent, so the jackknife standard error of each `m_j`
/// reduces to the sample standard deviation of `draws^j` over `sqrt(N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub count: u64,
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchCostSample {
    pub model: Model,
    pub horizon: Horizon,
    pub draws: Vec<u64>,
    pub summary: MomentEstimates,
}

/// Moment order reported in [`SearchCostSample::summary`].
pub const SUMMARY_ORDER: u32 = 2;

pub fn estimate_moments(draws: &[u64], k: u32) -> Result<MomentEstimates> {
    if draws.is_empty() {
        return Err(Error::domain("no draws to summarize"));
    }
    if k == 0 {
        return Err(Error::domain("moment order must be >= 1"));
    }
    let n = draws.len() as f64;
    let mut moments = Vec::with_capacity(k as usize);
    let mut std_errors = Vec::with_capacity(k as usize);
    for j in 1..=k as i32 {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for &d in draws {
            let p = (d as f64).powi(j);
            sum += p;
            sum_sq += p * p;
        }
        if !sum.is_finite() || !sum_sq.is_finite() {
            return Err(Error::numeric(format!("power {j} of the draws overflows"), None));
        }
        let mean = sum / n;
        let var = if draws.len() > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        moments.push(mean);
        std_errors.push((var / n).sqrt());
    }
    Ok(MomentEstimates {
        count: draws.len() as u64,
        moments,
        std_errors,
    })
}

/// Empirical `E[e^{-s S}]` and its standard error.
pub fn empirical_laplace(draws: &[u64], s: f64) -> (f64, f64) {
    let n = draws.len() as f64;
    let vals = draws.iter().map(|&d| (-s * d as f64).exp());
    let (sum, sum_sq) = vals.fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v));
    let mean = sum / n;
    let var = if n > 1.0 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Runs `config.replications` calls of `draw` across `config.workers`
/// threads. Output order is the replication order.
pub fn run_replications<F>(config: &SimConfig, draw: F) -> Result<Vec<u64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    config.validate()?;
    let total = usize::try_from(config.replications).map_err(|_| Error::domain("too many replications"))?;
    let chunks = total.div_ceil(CHUNK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::numeric(format!("cannot start worker pool: {e}"), None))?;
    let parts: Vec<Vec<u64>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(c as u64);
                let len = CHUNK.min(total - c * CHUNK);
                (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(parts.concat())
}

/// One search-cost draw for `model` at `horizon`.
pub fn draw_one<R: rand::Rng + ?Sized>(model: &Model, horizon: Horizon, burn_in: Option<u64>, rng: &mut R) -> Result<u64> {
    let weights = |n: usize, rng: &mut R| match *model {
        Model::PitmanYor { gamma, theta } => sample_weights_pitman_yor(gamma, theta, n, rng),
        _ => sample_weights(&model.exponent()?.expect("non-mixture model"), n, rng),
    };
    match horizon {
        Horizon::Limit => {
            let exponent = match *model {
                Model::PitmanYor { gamma, theta } => {
                    pitman_yor_conditional(gamma, sample_pitman_yor_time(gamma, theta, rng)?)?
                }
                _ => model.exponent()?.expect("non-mixture model"),
            };
            sample_limit_search_cost(&exponent, rng)
        }
        Horizon::Exact { n } => Ok(sample_search_cost_exact(&weights(n, rng)?, rng)),
        Horizon::Chain { n } => {
            let w = weights(n, rng)?;
            sample_search_cost_chain(&w, burn_in.unwrap_or_else(|| default_burn_in(n)), rng)
        }
    }
}

/// Draws `config.replications` search costs and summarizes them.
pub fn simulate(model: &Model, horizon: Horizon, config: &SimConfig) -> Result<SearchCostSample> {
    model.validate()?;
    if let Some(n) = horizon.items() {
        if n < 2 {
            return Err(Error::domain(format!("need n >= 2 items, got {n}")));
        }
    }
    let draws = run_replications(config, |rng| draw_one(model, horizon, config.burn_in, rng))?;
    let summary = estimate_moments(&draws, SUMMARY_ORDER)?;
    Ok(SearchCostSample {
        model: *model,
        horizon,
        draws,
        summary,
    })
}
