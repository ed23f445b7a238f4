use std::f64::consts::{SQRT_2, TAU};

use quadfun_core::densities::{density_eval, make_trig_density, sample};
use quadfun_core::estimators::norm_sq;
use quadfun_core::harness::{run_mse_study, ExperimentConfig, ZetaRule};
use quadfun_core::spectral::empirical_cf;
use quadfun_core::{
    EstimateKind, Frequency, FrequencySet, ReferenceDensity, SupportRule, WeightFamily,
};

fn trig(d: usize, terms: &[(&[i64], f64)]) -> ReferenceDensity {
    make_trig_density(
        d,
        terms
            .iter()
            .map(|(z, a)| (Frequency::new(z.to_vec()), *a))
            .collect(),
    )
    .unwrap()
}

#[test]
fn empirical_coefficients_converge() {
    let p = trig(1, &[(&[1], 0.4), (&[3], -0.2)]);
    let set = FrequencySet::lattice_ball(4, 1, SupportRule::All).unwrap();
    let n = 10_000;
    let reps = 200;
    let mut sq = vec![0.0; set.len()];
    for r in 0..reps {
        let cf = empirical_cf(&sample(&p, n, 1000 + r).unwrap(), &set).unwrap();
        for (acc, z) in sq.iter_mut().zip(&set) {
            *acc +=
                (cf.get(z).unwrap().re - p.coefficient(z)).powi(2) + cf.get(z).unwrap().im.powi(2);
        }
    }
    for (v, z) in sq.iter().zip(&set) {
        let rms = (v / reps as f64).sqrt();
        assert!(rms <= 3.0 / (n as f64).sqrt(), "{z}: {rms}");
    }
}

#[test]
fn sampled_cosine_moments_match_amplitudes() {
    let p = trig(2, &[(&[1, 0], 0.3), (&[1, -1], -0.25), (&[0, 2], 0.1)]);
    let n = 100_000;
    let s = sample(&p, n, 77).unwrap();
    for (w, alpha) in p.amplitudes() {
        let m: f64 = s
            .points()
            .map(|x| {
                SQRT_2 * (TAU * (w.coords()[0] as f64 * x[0] + w.coords()[1] as f64 * x[1])).cos()
            })
            .sum::<f64>()
            / n as f64;
        assert!(
            (m - alpha).abs() <= 4.0 / (n as f64).sqrt(),
            "{w}: {m} vs {alpha}"
        );
    }
}

#[test]
fn densities_integrate_to_one() {
    let fixtures = [
        trig(1, &[(&[1], 0.5), (&[4], -0.2)]),
        trig(2, &[(&[1, 1], 0.3), (&[2, -1], 0.2)]),
    ];
    for p in &fixtures {
        let m = 2048usize;
        let d = p.dimension();
        let total: f64 = (0..m.pow(d as u32))
            .map(|i| {
                let x: Vec<f64> = (0..d)
                    .map(|k| ((i / m.pow(k as u32)) % m) as f64 / m as f64)
                    .collect();
                density_eval(p, &x).unwrap()
            })
            .sum();
        assert!((total / m.pow(d as u32) as f64 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn norm_estimate_is_unbiased() {
    let p = trig(1, &[(&[1], 1.0 / SQRT_2)]);
    let a = WeightFamily::constant().with_rule(SupportRule::ExcludeOrigin);
    let set = a.truncation_set(1, 1).unwrap();
    let reps = 1000;
    let vals: Vec<f64> = (0..reps)
        .map(|r| {
            norm_sq(&sample(&p, 10_000, r).unwrap(), &a, &set)
                .unwrap()
                .value
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!(
        (mean - 0.5).abs() <= 3.0 * sd / (reps as f64).sqrt(),
        "{mean}"
    );
}

#[test]
fn distance_study_is_unbiased() {
    let p = trig(1, &[(&[1], 1.0 / SQRT_2)]);
    let config = ExperimentConfig {
        p,
        q: ReferenceDensity::uniform(1).unwrap(),
        a: WeightFamily::constant().with_rule(SupportRule::ExcludeOrigin),
        b: WeightFamily::sobolev(1.0).unwrap(),
        n_grid: vec![10_000],
        replications: 1000,
        zeta_rule: ZetaRule::Fixed(1),
        base_seed: 5,
        kind: EstimateKind::DistanceSq,
    };
    let row = run_mse_study(&config).unwrap().rows[0];
    assert!((row.truth - 0.5).abs() < 1e-15);
    assert!(
        (row.mean_estimate - 0.5).abs() <= 3.0 * row.estimate_stderr,
        "{row:?}"
    );
}
