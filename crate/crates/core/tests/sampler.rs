use pairpot::harness::{validate_sampler, ExperimentConfig};
use pairpot::sampler::{
    chain_rng, gnz_residual, run_birth_death, run_chain, sample_poisson, ChainConfig, Initial, SubBox, TestFunction,
};
use pairpot::{Error, Model, Window};

/// Two-sample Kolmogorov–Smirnov p-value (asymptotic distribution).
fn ks_p_value(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    let n = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..100).map(|k| {
        let k = k as f64;
        2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
    }).sum();
    p.clamp(0.0, 1.0)
}

#[test]
fn poisson_chain_counts_match_exact_sampler() {
    let w = Window::new(2, 10.0).unwrap();
    let model = Model::poisson(1.0, 1.0).unwrap();
    let mut p = Vec::new();
    for seed in 0..10u64 {
        let chain: Vec<f64> = (0..150)
            .map(|c| {
                let cfg = ChainConfig::for_model(&model, &w, seed * 1000 + c).with_initial(Initial::Empty);
                run_birth_death(&model, &w, &cfg).unwrap().len() as f64
            })
            .collect();
        let exact: Vec<f64> =
            (0..150).map(|c| sample_poisson(&w, 1.0, 10_000 + seed * 1000 + c).unwrap().len() as f64).collect();
        p.push(ks_p_value(&chain, &exact));
    }
    p.sort_by(f64::total_cmp);
    assert!(p[5] > 0.01, "median KS p-value {}: {p:?}", p[5]);
}

#[test]
fn strauss_with_unit_phi_is_poisson() {
    let w = Window::new(2, 10.0).unwrap();
    let model = Model::strauss(1.0, 1.0, 1.0).unwrap();
    let counts: Vec<f64> = (0..300)
        .map(|c| run_birth_death(&model, &w, &ChainConfig::for_model(&model, &w, c)).unwrap().len() as f64)
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let sd = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 100.0).abs() <= 3.0 * sd / n.sqrt(), "mean {mean}");
}

#[test]
fn repulsion_lowers_the_count() {
    let w = Window::new(2, 10.0).unwrap();
    let model = Model::strauss(1.0, 1.0, 0.5).unwrap();
    let mean = (0..100)
        .map(|c| run_birth_death(&model, &w, &ChainConfig::for_model(&model, &w, c)).unwrap().len() as f64)
        .sum::<f64>()
        / 100.0;
    assert!(mean < 90.0, "mean {mean}");
}

/// Hard-core Strauss on [0, 1] with R = 0.6: at most two points fit.
/// The stationary law of n is proportional to
/// `1, β, (β²/2)·|{(x, y) : |x − y| > R}|`.
#[test]
fn detailed_balance_on_tiny_state_space() {
    let beta = 5.0;
    let range = 0.6;
    let w = Window::new(1, 1.0).unwrap();
    let model = Model::strauss(beta, range, 0.0).unwrap();
    let m = 2000;
    let h = 1.0 / m as f64;
    let mut area = 0.0;
    for i in 0..m {
        for j in 0..m {
            if ((i as f64 - j as f64) * h).abs() > range {
                area += h * h;
            }
        }
    }
    let weights = [1.0, beta, beta * beta / 2.0 * area];
    let z: f64 = weights.iter().sum();
    let chains = 4000;
    let mut hist = [0usize; 3];
    let cfg = ChainConfig::new(300, 200, 17).unwrap().with_initial(Initial::Empty);
    for c in 0..chains {
        let mut rng = chain_rng(17, c);
        let state = run_chain(&model, &w, &cfg, &mut rng, |_, _| {}).unwrap();
        hist[state.len()] += 1;
    }
    for k in 0..3 {
        let p = weights[k] / z;
        let got = hist[k] as f64 / chains as f64;
        let sigma = (p * (1.0 - p) / chains as f64).sqrt();
        assert!((got - p).abs() <= 3.0 * sigma, "n={k}: {got} vs {p}");
    }
}

#[test]
fn gnz_z_scores_do_not_drift() {
    let w = Window::new(2, 8.0).unwrap();
    let model = Model::strauss(0.8, 1.0, 0.5).unwrap();
    let region = SubBox::cube(2, 1.0, 7.0);
    let z: Vec<f64> = (0..20)
        .map(|rep| {
            let cfg = ChainConfig::for_model(&model, &w, 500 + rep);
            gnz_residual(&model, &w, 40, &cfg, TestFunction::Indicator(region)).unwrap().z_score
        })
        .collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean.abs() <= 0.5, "mean z {mean}: {z:?}");
}

#[test]
fn htilde_weighted_gnz_holds_for_poisson() {
    let w = Window::new(2, 10.0).unwrap();
    let model = Model::poisson(0.5, 1.0).unwrap();
    let cfg = ChainConfig::for_model(&model, &w, 3);
    let g = gnz_residual(&model, &w, 100, &cfg, TestFunction::HtildeWeighted(SubBox::cube(2, 1.0, 9.0))).unwrap();
    assert!(g.z_score.abs() <= 3.0, "{g:?}");
    assert!(g.lhs > 0.0);
}

#[test]
fn validation_needs_chains() {
    let cfg = ExperimentConfig::parse(
        "[model]\nkind = \"poisson\"\nbeta = 0.5\nrange = 1.0\n[window]\nsides = [10.0]\n\
         [experiment]\nmode = \"validate\"\nchains = 0\n",
    )
    .unwrap();
    assert!(matches!(validate_sampler(&cfg), Err(Error::Argument(_))));
}
