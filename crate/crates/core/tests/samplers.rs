use barywalk_core::models::{ModelSpec, SquareMatrix};
use barywalk_core::rng::RngHandle;
use barywalk_core::sphere::{cap_threshold, sample_uniform_sphere, CapSampler};
use barywalk_core::vector::VectorD;

#[test]
fn cap_threshold_round_trip() {
    let mut rng = RngHandle::new(31, 0);
    let n = 1_000_000;
    for d in [2, 3, 4] {
        for f in [0.01, 0.1, 0.4] {
            let t = cap_threshold(d, f).unwrap();
            let hits = (0..n)
                .filter(|_| sample_uniform_sphere::<f64, _>(d, &mut rng)[0] <= t)
                .count();
            let p = hits as f64 / n as f64;
            let se = (f * (1.0 - f) / n as f64).sqrt();
            assert!((p - f).abs() < 3.0 * se, "d={d} f={f}: {p}");
        }
    }
}

#[test]
fn cap_acceptance_rate_matches_fraction() {
    let mut rng = RngHandle::new(32, 0);
    for (d, f) in [(2, 0.3), (3, 0.1), (5, 0.45)] {
        let sampler = CapSampler::new(VectorD::<f64>::basis(d, 0), f).unwrap();
        let mut accepted = 0u64;
        let mut trials = 0u64;
        for _ in 0..200_000 {
            let (v, k) = sampler.sample_counted(&mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v[0] > sampler.threshold());
            accepted += 1;
            trials += k as u64;
        }
        let rate = accepted as f64 / trials as f64;
        assert!((rate - (1.0 - f)).abs() < 4.0 / (trials as f64).sqrt(), "d={d}: {rate}");
    }
}

#[test]
fn uniform_sphere_symmetry() {
    let mut rng = RngHandle::new(33, 0);
    let n = 100_000;
    let draws: Vec<VectorD<f64>> = (0..n).map(|_| sample_uniform_sphere(3, &mut rng)).collect();
    for v in &draws {
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
    let cross: Vec<f64> = draws.iter().map(|v| v[0] * v[1]).collect();
    let mean = cross.iter().sum::<f64>() / n as f64;
    let var = cross.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
    assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
}

fn check_moments(spec: &ModelSpec<f64>, norm: f64, seed: u64) {
    let d = spec.dim;
    let mut dir = VectorD::zeros(d);
    for i in 0..d {
        dir[i] = 1.0 + i as f64;
    }
    let reference = dir.scale(norm / dir.norm());
    let exact = spec.analytic_moments(&reference).unwrap();
    let mut rng = RngHandle::new(seed, 0);
    let n = 1_000_000usize;
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut outer = vec![0.0; d * d];
    let mut outer_sq = vec![0.0; d * d];
    for _ in 0..n {
        let delta = spec.sample_increment(&reference, &mut rng).unwrap();
        assert!(delta.norm() <= spec.jump_bound() * (1.0 + 1e-12));
        for i in 0..d {
            sum[i] += delta[i];
            sum_sq[i] += delta[i] * delta[i];
            for j in 0..d {
                let p = delta[i] * delta[j];
                outer[i * d + j] += p;
                outer_sq[i * d + j] += p * p;
            }
        }
    }
    let nf = n as f64;
    let within = |total: f64, total_sq: f64, target: f64| {
        let mean = total / nf;
        let se = ((total_sq / nf - mean * mean).max(0.0) / nf).sqrt();
        (mean - target).abs() <= 4.0 * se + 1e-12
    };
    for i in 0..d {
        assert!(
            within(sum[i], sum_sq[i], exact.mean_drift[i]),
            "{spec:?} |x|={norm}: mean coordinate {i}: {} vs {}",
            sum[i] / nf,
            exact.mean_drift[i]
        );
        for j in 0..d {
            let target = exact.second_moments.get(i, j);
            assert!(
                within(outer[i * d + j], outer_sq[i * d + j], target),
                "{spec:?} |x|={norm}: second moment ({i},{j}): {} vs {target}",
                outer[i * d + j] / nf
            );
        }
    }
    assert!(exact.mean_drift.norm() <= exact.jump_bound);
    let m: &SquareMatrix<f64> = &exact.second_moments;
    for i in 0..d {
        for j in 0..d {
            assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
        }
    }
}

#[test]
fn empirical_moments_match_analytic() {
    let specs = [
        ModelSpec::lattice_biased(2, 0.1, 0.5, 0.01).unwrap(),
        ModelSpec::shifted_sphere(3, 1.0, 0.5).unwrap(),
        ModelSpec::cap_excluded(3, 0.5, 0.5).unwrap(),
        ModelSpec::cap_excluded(4, 1.0, 0.3).unwrap(),
        ModelSpec::simple_random_walk(3).unwrap(),
    ];
    for (k, spec) in specs.iter().enumerate() {
        for (r, norm) in [10.0f64, 100.0].into_iter().enumerate() {
            // Stay outside the clamp region, which can extend past 10.
            let norm = norm.max(spec.validity_radius());
            check_moments(spec, norm, 40 + 2 * k as u64 + r as u64);
        }
    }
}

#[test]
fn lattice_is_uniformly_elliptic() {
    let eps0 = 0.01;
    let spec = ModelSpec::lattice_biased(2, 0.1, 0.5, eps0).unwrap();
    let mut rng = RngHandle::new(50, 0);
    let n = 100_000;
    for reference in [[10.0, 0.0], [0.01, 0.02], [-3.0, 4.0]] {
        let reference = VectorD::from_slice(&reference).unwrap();
        let draws: Vec<_> = (0..n)
            .map(|_| spec.sample_increment(&reference, &mut rng).unwrap())
            .collect();
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::PI / 8.0;
            let e = VectorD::from_slice(&[a.cos(), a.sin()]).unwrap();
            let p = draws.iter().filter(|d| d.dot(&e) >= eps0).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(p > eps0 - 3.0 * se, "direction {k}: {p}");
        }
    }
}

#[test]
fn lattice_probabilities_sum_to_one_in_every_branch() {
    let spec = ModelSpec::lattice_biased(3, 0.4, 1.0, 0.02).unwrap();
    let negative = ModelSpec::lattice_biased(3, -0.4, 1.0, 0.02).unwrap();
    for s in [spec, negative] {
        for norm in [0.05, 0.5, 5.0, 500.0] {
            let x = VectorD::from_slice(&[norm, 0.0, 0.0]).unwrap();
            let total: f64 = s.lattice_outcomes(&x).iter().map(|o| o.1).sum();
            assert!((total - 1.0).abs() < 1e-15, "{norm}: {total}");
        }
    }
}
