use halfspace_core::dist::{
    band_mass, err_rate_mc, err_rate_rotational, sample, sample_band, DistributionKind, DistributionSpec,
    DEFAULT_MAX_ATTEMPTS,
};
use halfspace_core::linalg::{norm, SymMatrix};
use halfspace_core::rng::{stream, StreamTag};
use halfspace_core::stats::binomial_stderr;
use halfspace_core::{BandSpec, UnitVec};

/// `2 Phi(1) - 1` by Simpson's rule on the standard normal density.
fn gaussian_mass(b: f64) -> f64 {
    let n = 2000;
    let h = 2.0 * b / n as f64;
    let f = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(-b) + f(b);
    for i in 1..n {
        let x = -b + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[test]
fn gaussian_moments_from_a_million_draws() {
    let spec = DistributionSpec::gaussian(3);
    let xs = sample(&spec, 1_000_000, 1).unwrap();
    for j in 0..3 {
        let mean = xs.iter().map(|x| x[j]).sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01, "coordinate {j} mean {mean}");
        assert!((0.99..=1.01).contains(&var), "coordinate {j} variance {var}");
    }
}

#[test]
fn invalid_counts_rejected() {
    let spec = DistributionSpec::gaussian(3);
    assert!(sample(&spec, 0, 1).is_err());
    assert!(DistributionSpec::new(DistributionKind::StandardGaussian, 0).is_err());
}

#[test]
fn band_acceptance_rate_matches_gaussian_cdf() {
    let spec = DistributionSpec::gaussian(4);
    let mut rng = stream(2, StreamTag::Diagnostics, 0);
    let band = BandSpec::new(UnitVec::random(4, &mut rng), 1.0).unwrap();
    let draws = sample_band(&spec, &band, 68_000, 3, DEFAULT_MAX_ATTEMPTS).unwrap();
    assert!(draws.attempts >= 90_000);
    let expected = gaussian_mass(1.0);
    assert!((expected - 0.682689).abs() < 1e-5);
    assert!(
        (draws.acceptance_rate() - expected).abs() < 0.01,
        "{}",
        draws.acceptance_rate()
    );
    assert!(draws.points.iter().all(|x| band.contains(x)));
}

#[test]
fn band_conditioning_leaves_orthogonal_marginal_alone() {
    let spec = DistributionSpec::gaussian(2);
    let band = BandSpec::new(UnitVec::basis(2, 0), 0.1).unwrap();
    let draws = sample_band(&spec, &band, 100_000, 4, DEFAULT_MAX_ATTEMPTS).unwrap();
    let m = draws.points.iter().map(|x| x[1] * x[1]).sum::<f64>() / draws.points.len() as f64;
    assert!((0.97..=1.03).contains(&m), "{m}");
}

#[test]
fn band_mass_examples() {
    let spec = DistributionSpec::gaussian(5);
    let u = UnitVec::basis(5, 2);
    let one = band_mass(&spec, &BandSpec::new(u.clone(), 1.0).unwrap(), 200_000, 5).unwrap();
    assert!((one.value - gaussian_mass(1.0)).abs() < 0.005, "{one:?}");
    let ten = band_mass(&spec, &BandSpec::new(u, 10.0).unwrap(), 100_000, 5).unwrap();
    assert!((1.0 - ten.value) <= ten.stderr.max(1e-12));
}

#[test]
fn band_mass_is_at_most_twice_the_width() {
    let mut rng = stream(6, StreamTag::Diagnostics, 0);
    for kind in DistributionKind::ALL {
        let spec = DistributionSpec::new(kind, 6).unwrap();
        for b in [0.05, 0.1, 0.3] {
            let band = BandSpec::new(UnitVec::random(6, &mut rng), b).unwrap();
            let e = band_mass(&spec, &band, 50_000, 7).unwrap();
            assert!(e.value <= 2.0 * b + 3.0 * e.stderr, "{kind:?} b={b}: {e:?}");
        }
    }
}

#[test]
fn band_mass_lower_bound() {
    let mut rng = stream(8, StreamTag::Diagnostics, 0);
    for kind in DistributionKind::ALL {
        let spec = DistributionSpec::new(kind, 6).unwrap();
        for b in [0.05, 0.1, 0.5] {
            for u in [UnitVec::basis(6, 0), UnitVec::random(6, &mut rng)] {
                let e = band_mass(&spec, &BandSpec::new(u, b).unwrap(), 50_000, 9).unwrap();
                assert!(e.value >= 0.25 * b, "{kind:?} b={b}: {e:?}");
            }
        }
    }
}

#[test]
fn isotropy_of_every_kind() {
    for kind in DistributionKind::ALL {
        let spec = DistributionSpec::new(kind, 20).unwrap();
        let xs = sample(&spec, 100_000, 10).unwrap();
        let m = SymMatrix::weighted_second_moment(&xs, None);
        for r in 0..20 {
            for c in 0..20 {
                let v = m.get(r, c);
                if r == c {
                    assert!((0.95..=1.05).contains(&v), "{kind:?} diag {r}: {v}");
                } else {
                    assert!(v.abs() <= 0.05, "{kind:?} ({r},{c}): {v}");
                }
            }
        }
    }
}

#[test]
fn norm_tail_bound() {
    for kind in DistributionKind::ALL {
        let d = 10;
        let spec = DistributionSpec::new(kind, d).unwrap();
        let xs = sample(&spec, 50_000, 11).unwrap();
        let t = 3.0;
        let p = xs.iter().filter(|x| norm(x) >= t * (d as f64).sqrt()).count() as f64 / xs.len() as f64;
        assert!(
            p <= (-t + 1.0f64).exp() + 3.0 * binomial_stderr(p, xs.len()),
            "{kind:?}: {p}"
        );
    }
}

#[test]
fn one_dimensional_density_floor() {
    let mut rng = stream(12, StreamTag::Diagnostics, 0);
    for kind in DistributionKind::ALL {
        let spec = DistributionSpec::new(kind, 5).unwrap();
        let u = UnitVec::random(5, &mut rng);
        let xs = sample(&spec, 100_000, 13).unwrap();
        let bins = 10;
        let lo = -1.0 / 9.0;
        let width = 2.0 / 9.0 / bins as f64;
        let mut counts = vec![0usize; bins];
        for x in &xs {
            let t = u.dot(x);
            if (lo..-lo).contains(&t) {
                counts[(((t - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        for (i, c) in counts.iter().enumerate() {
            let freq = *c as f64 / xs.len() as f64;
            assert!(freq >= 0.1 * width, "{kind:?} bin {i}: {freq}");
        }
    }
}

#[test]
fn error_oracles_agree_on_gaussian() {
    let d = 4;
    let spec = DistributionSpec::gaussian(d);
    let mut rng = stream(14, StreamTag::Diagnostics, 0);
    let n = 100_000;
    for i in 0..20 {
        let u = UnitVec::random(d, &mut rng);
        let v = UnitVec::random(d, &mut rng);
        let exact = err_rate_rotational(&u, &v).unwrap();
        let mc = err_rate_mc(&spec, &u, &v, n, i).unwrap();
        assert!((exact - mc).abs() <= 3.0 / (n as f64).sqrt(), "{exact} vs {mc}");
    }
}

#[test]
fn orthogonal_and_tenth_pi_pairs() {
    let spec = DistributionSpec::gaussian(2);
    let n = 200_000;
    let tol = 3.0 / (n as f64).sqrt();
    let e1 = UnitVec::basis(2, 0);
    let ortho = err_rate_mc(&spec, &e1, &UnitVec::basis(2, 1), n, 1).unwrap();
    assert!((ortho - 0.5).abs() <= tol, "{ortho}");
    let a = 0.1 * std::f64::consts::PI;
    let v = UnitVec::new(vec![a.cos(), a.sin()]).unwrap();
    let e = err_rate_mc(&spec, &e1, &v, n, 2).unwrap();
    assert!((e - 0.1).abs() <= tol, "{e}");
    assert!((err_rate_rotational(&e1, &v).unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn zero_vector_rejected_by_error_oracles() {
    let spec = DistributionSpec::gaussian(2);
    assert!(err_rate_mc(&spec, &UnitVec::zero(2), &UnitVec::basis(2, 0), 10, 0).is_err());
    assert!(err_rate_rotational(&UnitVec::zero(2), &UnitVec::basis(2, 0)).is_err());
}
