//! Monte Carlo checks of the channel, estimation, Xi-bar and LSFD statistics.

mod common;

use cellfree::combining::EffectiveGains;
use cellfree::experiment::oracle::{check_lsfd_optimality, check_xibar, lsfd_config, xibar_config};
use cellfree::linalg::{block_diagonal, CMat, CVec};
use cellfree::rng::{stream, Purpose};
use cellfree::{ChannelModel, Complex64, LsfdAccumulator, Scheme};
use common::{config, Pipeline};

/// Largest `|sample E{x x^H} - reference|` over the entries, in standard errors.
fn covariance_z(samples: &[CVec], other: &[CVec], reference: &CMat) -> f64 {
    let n = samples.len() as f64;
    let dim = reference.nrows();
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let prods: Vec<Complex64> = samples
                .iter()
                .zip(other)
                .map(|(x, y)| x[a] * y[b].conj())
                .collect();
            let mean: Complex64 = prods.iter().sum::<Complex64>() / n;
            let var = prods.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let diff = (mean - reference[(a, b)]).norm();
            worst = worst.max(if se > 0.0 {
                diff / se
            } else {
                diff / f64::MIN_POSITIVE
            });
        }
    }
    worst
}

fn mean_z(samples: &[CVec], reference: &CVec) -> f64 {
    let n = samples.len() as f64;
    let mean = samples
        .iter()
        .fold(CVec::zeros(reference.len()), |acc, x| acc + x)
        / Complex64::new(n, 0.0);
    let spread = samples
        .iter()
        .map(|x| (x - &mean).norm_squared())
        .sum::<f64>()
        / (n - 1.0);
    (mean - reference).norm() / (spread / n).sqrt()
}

const DRAWS: u64 = 100_000;

#[test]
fn rayleigh_channel_covariance() {
    let p = Pipeline::new(config(ChannelModel::Rayleigh, 2, 2, 3, 1), 0);
    let mut per_link = vec![Vec::new(); 4];
    for b in 0..DRAWS {
        let r = p.sampler.sample(
            ChannelModel::Rayleigh,
            &mut stream(5, 0, b, Purpose::Channel),
        );
        for m in 0..2 {
            for k in 0..2 {
                per_link[m * 2 + k].push(r.h(m, k));
            }
        }
    }
    for m in 0..2 {
        for k in 0..2 {
            let s = &per_link[m * 2 + k];
            assert!(covariance_z(s, s, &p.setup.links[(m, k)].correlation) <= 5.0);
        }
    }
}

#[test]
fn random_phase_averages_los_away() {
    let p = Pipeline::new(config(ChannelModel::RicianPs, 1, 2, 2, 1), 1);
    let mut samples = vec![Vec::new(); 2];
    let mut fixed = vec![Vec::new(); 2];
    for b in 0..DRAWS {
        let r = p.sampler.sample(
            ChannelModel::RicianPs,
            &mut stream(6, 0, b, Purpose::Channel),
        );
        let f = p.sampler.sample(
            ChannelModel::RicianFixed,
            &mut stream(6, 0, b, Purpose::Channel),
        );
        for k in 0..2 {
            samples[k].push(r.h(0, k));
            fixed[k].push(f.h(0, k));
        }
    }
    for k in 0..2 {
        let los = &p.setup.links[(0, k)].los;
        assert!(mean_z(&samples[k], &CVec::zeros(2)) <= 5.0);
        assert!(mean_z(&fixed[k], los) <= 5.0);
    }
}

/// Estimates, errors and pilot residuals of one link, gathered over many blocks.
struct Draws {
    residual: Vec<CVec>,
    centered: Vec<CVec>,
    error: Vec<CVec>,
}

fn estimation_draws(p: &Pipeline, m: usize, k: usize, n: u64) -> Draws {
    let mut d = Draws {
        residual: Vec::new(),
        centered: Vec::new(),
        error: Vec::new(),
    };
    for b in 0..n {
        let r = p.sampler.sample(
            p.cfg.channel_model,
            &mut stream(p.seed, 0, b, Purpose::Channel),
        );
        let obs = cellfree::estimation::synthesize_pilot_observation(
            &r,
            &p.pilots,
            &p.cfg,
            Some(&mut stream(p.seed, 0, b, Purpose::PilotNoise)),
        );
        let est = cellfree::estimation::estimate_channels(&obs, &r, &p.stats, &p.pilots);
        d.residual.push(obs.y(m, k) - obs.ybar(m, k));
        let hhat = est.hhat(m, k);
        d.centered.push(&hhat - r.los[m].column(k));
        d.error.push(r.h(m, k) - hhat);
    }
    d
}

#[test]
fn estimate_and_error_covariances() {
    for model in ChannelModel::ALL {
        let p = Pipeline::new(config(model, 2, 4, 2, 2), 2);
        for (m, k) in [(0, 0), (1, 3)] {
            let d = estimation_draws(&p, m, k, DRAWS);
            assert!(
                covariance_z(&d.centered, &d.centered, &p.stats.rhat[(m, k)]) <= 5.0,
                "{model:?} Rhat"
            );
            assert!(
                covariance_z(&d.error, &d.error, &p.stats.error_cov[(m, k)]) <= 5.0,
                "{model:?} C"
            );
            assert!(
                covariance_z(&d.centered, &d.error, &CMat::zeros(2, 2)) <= 5.0,
                "{model:?} orthogonality"
            );
            assert!(
                mean_z(&d.residual, &CVec::zeros(2)) <= 5.0,
                "{model:?} residual mean"
            );
        }
    }
}

#[test]
fn local_estimates_stack_to_centralized_estimate() {
    for model in ChannelModel::ALL {
        let p = Pipeline::new(config(model, 3, 4, 2, 2), 3);
        let (r, est) = p.block(0);
        let obs = cellfree::estimation::synthesize_pilot_observation(
            &r,
            &p.pilots,
            &p.cfg,
            Some(&mut stream(p.seed, 0, 0, Purpose::PilotNoise)),
        );
        for k in 0..4 {
            // h_k = hbar_k e^{j theta} + sqrt(p_k) R_k Psi_k^{-1} (y_k - ybar_k), all stacked over APs
            let r_k = block_diagonal(
                &(0..3)
                    .map(|m| p.setup.links[(m, k)].correlation.clone())
                    .collect::<Vec<_>>(),
            );
            let psi_k = block_diagonal(
                &(0..3)
                    .map(|m| p.stats.psi[(m, k)].clone())
                    .collect::<Vec<_>>(),
            );
            let stack = |f: &dyn Fn(usize) -> CVec| {
                CVec::from_iterator(
                    6,
                    (0..3).flat_map(|m| f(m).iter().copied().collect::<Vec<_>>()),
                )
            };
            let y = stack(&|m| obs.y(m, k));
            let ybar = stack(&|m| obs.ybar(m, k));
            let los = stack(&|m| r.los[m].column(k).into_owned());
            let x = psi_k.lu().solve(&(y - ybar)).unwrap();
            let central = los + r_k * x * Complex64::new(p.stats.powers[k].sqrt(), 0.0);
            let local = est.stacked().column(k).into_owned();
            assert!(
                (&central - &local).norm() <= 1e-12 * central.norm(),
                "{model:?} ue {k}"
            );
        }
    }
}

#[test]
fn xibar_matches_monte_carlo_mean() {
    for model in ChannelModel::ALL {
        let check = check_xibar(&xibar_config(model), 0, 20_000).unwrap();
        assert!(check.max_z <= 5.0, "{check:?}");
    }
}

#[test]
fn lsfd_mean_variance_halves_with_twice_the_samples() {
    let p = Pipeline::new(config(ChannelModel::RicianFixed, 6, 4, 2, 1), 4);
    let (aps, ues) = (6, 4);
    let reps = 50u64;
    let n = 40u64;
    let mean_d = |start: u64, len: u64| {
        let mut acc = LsfdAccumulator::new(aps, ues);
        for b in start..start + len {
            let (r, est) = p.block(b);
            let g: EffectiveGains = p.combiners(Scheme::LmmseLsfd, &est).effective_gains(&r);
            acc.add(&g);
        }
        acc.finish().mean_d
    };
    let small: Vec<_> = (0..reps).map(|r| mean_d(r * 3 * n, n)).collect();
    let large: Vec<_> = (0..reps).map(|r| mean_d(r * 3 * n + n, 2 * n)).collect();
    let pooled_variance = |runs: &[Vec<CVec>]| {
        let mut total = 0.0;
        for k in 0..ues {
            for m in 0..aps {
                let vals: Vec<Complex64> = runs.iter().map(|r| r[k][m]).collect();
                let mean: Complex64 = vals.iter().sum::<Complex64>() / reps as f64;
                let var =
                    vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (reps - 1) as f64;
                // normalize so every entry weighs the same
                total += var / mean.norm_sqr().max(f64::MIN_POSITIVE);
            }
        }
        total
    };
    let ratio = pooled_variance(&small) / pooled_variance(&large);
    assert!((1.6..=2.4).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn lsfd_weights_beat_random_weights() {
    for scheme in Scheme::ALL {
        let check =
            check_lsfd_optimality(&lsfd_config(ChannelModel::RicianFixed), scheme, 1, 300, 100)
                .unwrap();
        assert_eq!(check.violations, 0, "{check:?}");
        assert!(check.max_identity_error <= 1e-8, "{check:?}");
    }
}
