//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the console.
//! The process fails unless the set of failing criteria is exactly
//! [`EXPECTED_RED`].

use std::time::Instant;

use mtfcost::analytic::{limit_moment, psi_l_dirichlet, psi_l_gengamma, MomentRequest};
use mtfcost::cli::{run, EXIT_OK};
use mtfcost::model::Model;
use mtfcost::quad::{laplace_finite_n, laplace_limit, mixing_density_mass, psi_l_numeric, QuadSpec};
use mtfcost::sim::{
    default_burn_in, empirical_laplace, enumerate_search_cost_law, estimate_moments, run_replications,
    sample_limit_search_cost, sample_search_cost_chain, sample_search_cost_exact, sample_weights,
    sample_weights_pitman_yor, SimConfig, WeightVector,
};
use mtfcost::{Exponent, GammaExponent, GenGammaExponent, StableExponent};

/// Criteria known to fail; see the note on [`dirichlet_recovery`].
const EXPECTED_RED: &[&str] = &["5"];

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn config(reps: u64, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(reps, seed);
    c.workers = workers();
    c
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn closed_form_vs_quadrature() -> Verdict {
    let start = Instant::now();
    let spec = QuadSpec::default();
    // (label, exponent, closed-form Ψ(1), Ψ(2))
    let mut cases: Vec<(String, Exponent, [f64; 2])> = Vec::new();
    for g in [0.1, 0.2] {
        let exact = [1, 2].map(|l| psi_l_gengamma(g, 0.0, l, l).unwrap());
        cases.push((format!("stable {g}"), StableExponent::new(g).unwrap().into(), exact));
    }
    let exact = [1, 2].map(|l| psi_l_gengamma(0.2, 1.0, l, l).unwrap());
    cases.push(("gg (0.2, 1)".into(), GenGammaExponent::new(0.2, 1.0).unwrap().into(), exact));
    for t in [1.0, 2.0] {
        let exact = [1, 2].map(|l| psi_l_dirichlet(t, l).unwrap());
        cases.push((format!("gamma {t}"), GammaExponent::new(t).unwrap().into(), exact));
    }
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (name, ex, exact) in &cases {
        for l in [1, 2] {
            match psi_l_numeric(ex, l, &spec) {
                Ok(v) => worst = worst.max(rel(v, exact[l as usize - 1])),
                Err(e) => {
                    ok = false;
                    eprintln!("  {name} l={l}: {e}");
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok && worst <= 1e-6 && secs <= 30.0,
        format!("max rel error {worst:.2e} over 10 cases (<= 1e-6), {secs:.2}s (<= 30s)"),
    )
}

fn stable_moments() -> Verdict {
    let start = Instant::now();
    let ex: Exponent = StableExponent::new(0.2).unwrap().into();
    let draws = run_replications(&config(1_000_000, 20_201), |rng| sample_limit_search_cost(&ex, rng)).unwrap();
    let m = estimate_moments(&draws, 2).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let z1 = (m.moments[0] - 1.0 / 3.0) / m.std_errors[0];
    let z2 = (m.moments[1] - 1.0) / m.std_errors[1];
    verdict(
        z1.abs() <= 3.0 && z2.abs() <= 3.0 && secs <= 60.0,
        format!(
            "m1 = {:.5} ± {:.5} (z {z1:+.2}), m2 = {:.5} ± {:.5} (z {z2:+.2}), {secs:.2}s",
            m.moments[0], m.std_errors[0], m.moments[1], m.std_errors[1]
        ),
    )
}

fn generalized_gamma_moments() -> Verdict {
    let model = Model::GenGamma { gamma: 0.2, u: 1.0 };
    let m1 = limit_moment(&MomentRequest { model, k: 1 }).unwrap().value.unwrap();
    let m2 = limit_moment(&MomentRequest { model, k: 2 }).unwrap().value.unwrap();
    let analytic_ok = rel(m1, 2.0) < 1e-12 && rel(m2, 43.0 / 3.0) < 1e-12;

    let ex: Exponent = GenGammaExponent::new(0.2, 1.0).unwrap().into();
    let spec = QuadSpec::default();
    let p1 = psi_l_numeric(&ex, 1, &spec).unwrap();
    let p2 = psi_l_numeric(&ex, 2, &spec).unwrap();
    let q_err = rel(p1, m1).max(rel(p1 + p2, m2));

    let draws = run_replications(&config(1_000_000, 20_202), |rng| sample_limit_search_cost(&ex, rng)).unwrap();
    let m = estimate_moments(&draws, 2).unwrap();
    let z1 = (m.moments[0] - m1) / m.std_errors[0];
    let z2 = (m.moments[1] - m2) / m.std_errors[1];
    verdict(
        analytic_ok && q_err <= 1e-6 && z1.abs() <= 3.0 && z2.abs() <= 3.0,
        format!(
            "analytic ({m1}, {m2:.6}), quadrature rel error {q_err:.2e}, MC m1 = {:.4} (z {z1:+.2}), m2 = {:.3} (z {z2:+.2})",
            m.moments[0], m.moments[1]
        ),
    )
}

fn pitman_yor() -> Verdict {
    let start = Instant::now();
    let model = Model::PitmanYor { gamma: 0.25, theta: 1.0 };
    let exact = limit_moment(&MomentRequest { model, k: 1 }).unwrap().value.unwrap();
    let draws = run_replications(&config(20_000, 20_204), |rng| {
        let w = sample_weights_pitman_yor(0.25, 1.0, 2000, rng)?;
        Ok(sample_search_cost_exact(&w, rng))
    })
    .unwrap();
    let m = estimate_moments(&draws, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (mean, se) = (m.moments[0], m.std_errors[0]);
    let z = (mean - exact) / se;
    verdict(
        exact == 2.5 && rel(mean, exact) <= 0.05 && z.abs() <= 4.0 && secs <= 300.0,
        format!(
            "analytic {exact}, MC n=2000 mean {mean:.4} ± {se:.4} (rel {:.2}%, z {z:+.2}), {secs:.2}s",
            100.0 * rel(mean, exact)
        ),
    )
}

/// The required analytic second moment is 4. The Dirichlet limit law is
/// geometric with mean θ (factorial moments l! θ^l), so E[S²] = θ + 2θ² = 10
/// at θ = 2; that sub-check is implemented as required and fails.
fn dirichlet_recovery() -> Verdict {
    let model = Model::Dirichlet { theta: 2.0 };
    let m1 = limit_moment(&MomentRequest { model, k: 1 }).unwrap().value.unwrap();
    let m2 = limit_moment(&MomentRequest { model, k: 2 }).unwrap().value.unwrap();
    let ex: Exponent = GammaExponent::new(2.0).unwrap().into();
    let draws = run_replications(&config(200_000, 20_205), |rng| {
        let w = sample_weights(&ex, 1000, rng)?;
        Ok(sample_search_cost_exact(&w, rng))
    })
    .unwrap();
    let m = estimate_moments(&draws, 2).unwrap();
    let first_ok = m1 == 2.0 && rel(m.moments[0], 2.0) <= 0.03;
    let second_ok = rel(m2, 4.0) < 1e-12;
    verdict(
        first_ok && second_ok,
        format!(
            "E[S] = {m1} (sim n=1000: {:.4}, rel {:.2}% <= 3%): {}; E[S^2] = {m2} vs required 4 (sim n=1000: {:.3}): {}",
            m.moments[0],
            100.0 * rel(m.moments[0], 2.0),
            if first_ok { "ok" } else { "off" },
            m.moments[1],
            if second_ok { "ok" } else { "off" },
        ),
    )
}

fn finite_n_transform() -> Verdict {
    let spec = QuadSpec::default();
    let ex: Exponent = StableExponent::new(0.2).unwrap().into();
    let limit = laplace_limit(&ex, 1.0, &spec).unwrap();
    let ns = [10, 50, 200];
    let values: Vec<f64> = ns.iter().map(|&n| laplace_finite_n(&ex, n, 1.0, &spec).unwrap()).collect();
    let gaps: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);

    let mut worst_z: f64 = 0.0;
    for (i, &n) in ns.iter().enumerate() {
        let draws = run_replications(&config(200_000, 20_206 + n as u64), |rng| {
            let w = sample_weights(&ex, n, rng)?;
            Ok(sample_search_cost_exact(&w, rng))
        })
        .unwrap();
        let (m, se) = empirical_laplace(&draws, 1.0);
        worst_z = worst_z.max(((m - values[i]) / se).abs());
    }
    let draws = run_replications(&config(1_000_000, 20_216), |rng| sample_limit_search_cost(&ex, rng)).unwrap();
    let (m, se) = empirical_laplace(&draws, 1.0);
    worst_z = worst_z.max(((m - limit) / se).abs());
    verdict(
        decreasing && worst_z <= 4.0,
        format!(
            "gaps to limit {:.2e} > {:.2e} > {:.2e}; max |z| vs Monte-Carlo {worst_z:.2} (<= 4)",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn tiny_instances() -> Verdict {
    let config = config(100_000, 20_207);
    let mut worst_z: f64 = 0.0;
    for v in [vec![2.0, 1.0], vec![3.0, 2.0, 1.0]] {
        let w = WeightVector::new(v).unwrap();
        let law = enumerate_search_cost_law(&w).unwrap();
        let exact_mean: f64 = law.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        let burn_in = default_burn_in(w.len());
        let exact = run_replications(&config, |rng| Ok(sample_search_cost_exact(&w, rng))).unwrap();
        let chain = run_replications(&config, |rng| sample_search_cost_chain(&w, burn_in, rng)).unwrap();
        for d in [exact, chain] {
            let m = estimate_moments(&d, 1).unwrap();
            worst_z = worst_z.max(((m.moments[0] - exact_mean) / m.std_errors[0]).abs());
        }
    }
    verdict(worst_z <= 3.0, format!("max |z| of exact and chain means vs enumeration {worst_z:.2} (<= 3)"))
}

fn normalization() -> Verdict {
    let spec = QuadSpec::default();
    let families: Vec<Exponent> = vec![
        StableExponent::new(0.3).unwrap().into(),
        GenGammaExponent::new(0.2, 1.0).unwrap().into(),
        GammaExponent::new(1.0).unwrap().into(),
    ];
    let mut worst: f64 = 0.0;
    for ex in &families {
        worst = worst.max((mixing_density_mass(ex, &spec).unwrap() - 1.0).abs());
        worst = worst.max((laplace_limit(ex, 0.0, &spec).unwrap() - 1.0).abs());
        worst = worst.max((laplace_finite_n(ex, 5, 0.0, &spec).unwrap() - 1.0).abs());
    }
    verdict(worst <= 1e-6, format!("max |mass - 1| and |phi(0) - 1| = {worst:.2e} (<= 1e-6)"))
}

fn divergence_boundary() -> Verdict {
    let mut bad = Vec::new();
    let models = |g: f64| {
        [
            Model::Stable { gamma: g },
            Model::GenGamma { gamma: g, u: 1.0 },
            Model::PitmanYor { gamma: g, theta: 1.0 },
        ]
    };
    for k in 1..=3u32 {
        let bound = 1.0 / (k as f64 + 1.0);
        let mut grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        grid.extend([bound, bound + 1e-3, bound - 1e-3]);
        for g in grid {
            for model in models(g) {
                let m = limit_moment(&MomentRequest { model, k }).unwrap();
                let want_finite = g < bound;
                let value_ok = m.value.is_some_and(f64::is_finite) == want_finite;
                if m.finite != want_finite || !value_ok {
                    bad.push(format!("{model:?} k={k}"));
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "infinite exactly when gamma >= 1/(k+1) for k = 1..3, 3 families, 102 indices".to_string()
        } else {
            format!("misflagged: {}", bad.join("; "))
        },
    )
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("mtfcost").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["--model", "stable", "--gamma", "0.2", "--limit", "--reps", "1e6", "--seed", "42"],
        &["--model", "gamma", "--theta", "2", "--n", "100", "--reps", "1e4", "--seed", "7"],
        &["--model", "py", "--gamma", "0.25", "--theta", "1", "--limit", "--reps", "1e5", "--seed", "3"],
    ];
    let w = workers().to_string();
    let mut identical = true;
    for (i, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let prefix = dir.path().join(format!("r{i}_{rep}"));
            let mut full = vec!["simulate", "--workers", &w, "--out", prefix.to_str().unwrap()];
            full.extend_from_slice(args);
            let (code, _) = cli(&full);
            identical &= code == EXIT_OK;
            let csv = std::fs::read(prefix.with_extension("csv")).unwrap_or_default();
            let summary = std::fs::read(prefix.with_extension("summary.json")).unwrap_or_default();
            bytes.push((csv, summary));
        }
        identical &= bytes[0] == bytes[1] && !bytes[0].0.is_empty();
    }
    verdict(identical, "3 simulate commands run twice: draws CSV and summary JSON byte-identical")
}

fn surface() -> Verdict {
    let parse = |text: &str| -> Vec<(f64, f64, bool, f64)> {
        text.lines()
            .skip(1)
            .map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                (c[0].parse().unwrap(), c[1].parse().unwrap(), c[3] == "true", c[4].parse().unwrap())
            })
            .collect()
    };
    let (c1, k1) = cli(&["surface", "--k", "1"]);
    let (c2, k2) = cli(&["surface", "--k", "2"]);
    let (g1, g2) = (parse(&k1), parse(&k2));
    let finite = |g: &[(f64, f64, bool, f64)]| g.iter().all(|r| r.2 && r.3.is_finite());
    // rows are theta-major with 50 gammas per theta
    let mut monotone = true;
    for i in 0..50 {
        for j in 0..50 {
            let here = g1[i * 50 + j].3;
            if j + 1 < 50 {
                monotone &= g1[i * 50 + j + 1].3 > here;
            }
            if i + 1 < 50 {
                monotone &= g1[(i + 1) * 50 + j].3 > here;
            }
        }
    }
    verdict(
        c1 == EXIT_OK && c2 == EXIT_OK && g1.len() == 2500 && g2.len() == 2500 && monotone && finite(&g1) && finite(&g2),
        format!(
            "k=1 grid 50x50 over theta in [0.2, 10], gamma in [0.1, 0.4]: monotone {monotone}, finite {}; k=2 over gamma in [0.1, 0.3]: finite {}",
            finite(&g1),
            finite(&g2)
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1", "closed form vs quadrature", closed_form_vs_quadrature),
        ("2", "stable moments by limit sampler", stable_moments),
        ("3", "generalized gamma moments", generalized_gamma_moments),
        ("4", "Pitman-Yor mean", pitman_yor),
        ("5", "Dirichlet recovery", dirichlet_recovery),
        ("6", "finite-n transform convergence", finite_n_transform),
        ("7", "tiny-instance oracles", tiny_instances),
        ("8", "normalization", normalization),
        ("9", "divergence boundary", divergence_boundary),
        ("10", "determinism", determinism),
        ("surface", "moment surface data", surface),
    ];
    let mut red = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        println!(
            "acceptance {id:>7} {}: {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            red.push(id);
        }
    }
    let unexpected: Vec<_> = red.iter().filter(|id| !EXPECTED_RED.contains(id)).collect();
    let fixed: Vec<_> = EXPECTED_RED.iter().filter(|id| !red.contains(id)).collect();
    println!("acceptance summary: {} failing {:?}, expected {:?}", red.len(), red, EXPECTED_RED);
    if !unexpected.is_empty() || !fixed.is_empty() {
        println!("acceptance gate: unexpected outcome (new failures {unexpected:?}, now passing {fixed:?})");
        std::process::exit(1);
    }
}
