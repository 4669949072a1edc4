//! Search-cost samplers and the enumeration oracle.

use rand::Rng;
use rand_distr::{Exp1, Open01, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::subordinator::{Exponent, LaplaceExponent};

use super::weights::WeightVector;

/// Largest `n` accepted by [`enumerate_search_cost_law`].
pub const MAX_ENUMERATION: usize = 8;

/// Index `i` with probability `weights[i] / total`.
fn pick<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let target = rng.random::<f64>() * total;
    cumulative.partition_point(|c| *c <= target).min(cumulative.len() - 1)
}

fn cumulative(weights: &WeightVector) -> Vec<f64> {
    weights
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// One draw from the stationary Move-to-Front search cost.
///
/// In continuous time item `j` is requested at rate `w_j`. The requested item
/// `i` was last requested `T ~ Exp(w_i)` ago, and item `j` sits above it iff
/// it was requested within that window.
pub fn sample_search_cost_exact<R: Rng + ?Sized>(weights: &WeightVector, rng: &mut R) -> u64 {
    let cum = cumulative(weights);
    sample_exact_with(weights, &cum, rng)
}

fn sample_exact_with<R: Rng + ?Sized>(weights: &WeightVector, cum: &[f64], rng: &mut R) -> u64 {
    let i = pick(cum, rng);
    let e: f64 = rng.sample(Exp1);
    let t = e / weights.weights[i];
    let mut above = 0;
    for (j, w) in weights.weights.iter().enumerate() {
        if j != i && rng.random::<f64>() < -(-w * t).exp_m1() {
            above += 1;
        }
    }
    above
}

/// `count` exact draws sharing one weight vector.
pub fn sample_search_cost_exact_many<R: Rng + ?Sized>(weights: &WeightVector, count: usize, rng: &mut R) -> Vec<u64> {
    let cum = cumulative(weights);
    (0..count).map(|_| sample_exact_with(weights, &cum, rng)).collect()
}

/// `50 n ln n` requests.
pub fn default_burn_in(n: usize) -> u64 {
    let n = n as f64;
    ((50.0 * n * n.ln()).ceil() as u64).max(1)
}

/// Runs the Move-to-Front chain from the identity order for `burn_in`
/// requests and returns the 0-based position of the next requested item.
pub fn sample_search_cost_chain<R: Rng + ?Sized>(weights: &WeightVector, burn_in: u64, rng: &mut R) -> Result<u64> {
    if burn_in == 0 {
        return Err(Error::domain("burn-in must be >= 1"));
    }
    let cum = cumulative(weights);
    let mut list: Vec<usize> = (0..weights.len()).collect();
    let request = |list: &mut Vec<usize>, rng: &mut R| {
        let item = pick(&cum, rng);
        let pos = list.iter().position(|&x| x == item).expect("item present");
        list[..=pos].rotate_right(1);
        pos as u64
    };
    for _ in 0..burn_in {
        request(&mut list, rng);
    }
    Ok(request(&mut list, rng))
}

/// Mixing pair `(X, Y)` of the limit law: `X` has density `ψ'(x) e^{-ψ(x)}`
/// and, given `X = x`, `Y` has density `-ψ''(x+y)/ψ'(x)`.
pub fn sample_limit_mixing<R: Rng + ?Sized>(exponent: &Exponent, rng: &mut R) -> Result<(f64, f64)> {
    let e: f64 = rng.sample(Exp1);
    let x = exponent.psi_inverse(e)?;
    let u: f64 = rng.sample(Open01);
    let slope = exponent.psi_prime(x)?;
    let r = if slope.is_finite() {
        exponent.psi_prime_inverse(u * slope)?
    } else {
        x
    };
    Ok((x, (r - x).max(0.0)))
}

/// Poisson variate; a rounded normal beyond the range of the exact sampler.
fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if lambda.is_nan() {
        return Err(Error::numeric("Poisson mean is NaN", None));
    }
    if lambda <= 0.0 {
        return Ok(0);
    }
    if lambda < 1e12 {
        let p = Poisson::new(lambda).map_err(|e| Error::numeric(e.to_string(), None))?;
        return Ok(rng.sample(p) as u64);
    }
    let z: f64 = rng.sample(StandardNormal);
    // saturating cast
    Ok((lambda + z * lambda.sqrt()).round() as u64)
}

/// One draw from the limiting search cost: Poisson with mean
/// `ψ(X+Y) - ψ(X)` for the mixing pair of [`sample_limit_mixing`].
pub fn sample_limit_search_cost<R: Rng + ?Sized>(exponent: &Exponent, rng: &mut R) -> Result<u64> {
    let (x, y) = sample_limit_mixing(exponent, rng)?;
    let lambda = exponent.value(x + y) - exponent.value(x);
    poisson(lambda, rng)
}

/// Law of the stationary search cost, `P(S = s)` for `s = 0..n-1`, by
/// summing over all `n!` orders with
/// `P(σ) = Π_k p_{σ_k} / (1 - p_{σ_1} - … - p_{σ_{k-1}})`.
pub fn enumerate_search_cost_law(weights: &WeightVector) -> Result<Vec<f64>> {
    let n = weights.len();
    if n > MAX_ENUMERATION {
        return Err(Error::domain(format!("enumeration limited to n <= {MAX_ENUMERATION}, got {n}")));
    }
    let p = weights.probabilities();
    let mut law = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn walk(p: &[f64], order: &mut Vec<usize>, used: &mut [bool], prob: f64, rest: f64, law: &mut [f64]) {
        if order.len() == p.len() {
            for (pos, &item) in order.iter().enumerate() {
                law[pos] += prob * p[item];
            }
            return;
        }
        for j in 0..p.len() {
            if !used[j] {
                used[j] = true;
                order.push(j);
                walk(p, order, used, prob * p[j] / rest, rest - p[j], law);
                order.pop();
                used[j] = false;
            }
        }
    }
    walk(&p, &mut order, &mut used, 1.0, 1.0, &mut law);
    Ok(law)
}

/// `E[S] = Σ_{i≠j} p_i p_j / (p_i + p_j)`.
pub fn expected_search_cost(weights: &WeightVector) -> f64 {
    let p = weights.probabilities();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            if i != j {
                acc += pi * pj / (pi + pj);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordinator::{GammaExponent, GenGammaExponent, StableExponent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_se(draws: &[u64]) -> (f64, f64) {
        let n = draws.len() as f64;
        let m = draws.iter().map(|&d| d as f64).sum::<f64>() / n;
        let v = draws.iter().map(|&d| (d as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn enumeration_examples() {
        let w = WeightVector::new(vec![2.0, 1.0]).unwrap();
        let law = enumerate_search_cost_law(&w).unwrap();
        assert!((law[1] - 4.0 / 9.0).abs() < 1e-15);
        let w = WeightVector::new(vec![1.0; 3]).unwrap();
        let law = enumerate_search_cost_law(&w).unwrap();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((law[1] + 2.0 * law[2] - 1.0).abs() < 1e-14);
        let w = WeightVector::new(vec![5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let law = enumerate_search_cost_law(&w).unwrap();
        let mean: f64 = law.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        assert!((mean - expected_search_cost(&w)).abs() < 1e-13);
        assert!(enumerate_search_cost_law(&WeightVector::new(vec![1.0; 9]).unwrap()).is_err());
    }

    #[test]
    fn exact_sampler_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        let (m, _) = mean_se(&sample_search_cost_exact_many(&w, 1_000_000, &mut rng));
        assert!((m - 0.5).abs() < 0.0015, "{m}");
        for (weights, want) in [(vec![2.0, 1.0], 4.0 / 9.0), (vec![1.0; 3], 1.0)] {
            let w = WeightVector::new(weights).unwrap();
            let (m, se) = mean_se(&sample_search_cost_exact_many(&w, 200_000, &mut rng));
            assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
        }
    }

    #[test]
    fn exact_sampler_matches_enumerated_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = WeightVector::new(vec![0.5, 3.0, 1.0, 0.1, 2.0]).unwrap();
        let law = enumerate_search_cost_law(&w).unwrap();
        let n = 200_000;
        let draws = sample_search_cost_exact_many(&w, n, &mut rng);
        for (s, p) in law.iter().enumerate() {
            let freq = draws.iter().filter(|&&d| d == s as u64).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "s={s}: {freq} vs {p}");
        }
    }

    #[test]
    fn chain_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        let d: Vec<u64> = (0..100_000).map(|_| sample_search_cost_chain(&w, 1000, &mut rng).unwrap()).collect();
        assert!((mean_se(&d).0 - 0.5).abs() < 0.005);
        let w = WeightVector::new(vec![1.0; 3]).unwrap();
        let d: Vec<u64> = (0..20_000).map(|_| sample_search_cost_chain(&w, 1000, &mut rng).unwrap()).collect();
        assert!((mean_se(&d).0 - 1.0).abs() < 0.03);
        assert!(sample_search_cost_chain(&w, 0, &mut rng).is_err());
    }

    #[test]
    fn chain_agrees_with_exact_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let w = WeightVector::new(vec![5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let chain: Vec<u64> = (0..20_000).map(|_| sample_search_cost_chain(&w, 2000, &mut rng).unwrap()).collect();
        let exact = sample_search_cost_exact_many(&w, 20_000, &mut rng);
        let (a, sa) = mean_se(&chain);
        let (b, sb) = mean_se(&exact);
        assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
    }

    #[test]
    fn limit_sampler_means() {
        let cases: Vec<(Exponent, f64)> = vec![
            (StableExponent::new(0.25).unwrap().into(), 0.5),
            (GenGammaExponent::new(0.2, 1.0).unwrap().into(), 2.0),
            (GammaExponent::new(2.0).unwrap().into(), 2.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for (ex, want) in cases {
            let d: Vec<u64> = (0..200_000).map(|_| sample_limit_search_cost(&ex, &mut rng).unwrap()).collect();
            let (m, se) = mean_se(&d);
            assert!((m - want).abs() < 3.5 * se, "{ex:?}: {m} vs {want} (se {se})");
        }
    }

    #[test]
    fn mixing_marginal_passes_ks() {
        let ex: Exponent = StableExponent::new(0.3).unwrap().into();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let n = 20_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_limit_mixing(&ex, &mut rng).unwrap().0).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = -(-ex.value(*x)).exp_m1();
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
    }
}
