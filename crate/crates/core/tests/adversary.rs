use halfspace_core::adversary::{
    AttackKind, AttackStrategy, Audit, BatchOracle, InstanceOracle, LearnerStateView, MaliciousOracle, NastyOracle,
};
use halfspace_core::dist::DistributionSpec;
use halfspace_core::rng::{stream, StreamTag};
use halfspace_core::stats::binomial_stderr;
use halfspace_core::{Error, Label, Provenance, UnitVec};
use proptest::prelude::*;

fn target(d: usize, seed: u64) -> UnitVec {
    UnitVec::random(d, &mut stream(seed, StreamTag::Target, 0))
}

fn banded_view(d: usize, b: f64) -> LearnerStateView {
    LearnerStateView {
        center: target(d, 99),
        bandwidth: b,
        phase: 2,
    }
}

#[test]
fn zero_rate_is_all_clean() {
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(4),
        target(4, 1),
        0.0,
        AttackStrategy::new(AttackKind::BandFlip),
        1,
    )
    .unwrap();
    let view = LearnerStateView::initial(4, 1.0);
    for _ in 0..10_000 {
        let (_, t) = o.draw(&view);
        assert_eq!(o.provenance(&t).unwrap(), Provenance::Clean);
    }
    assert_eq!(o.counters().instance_calls, 10_000);
    assert_eq!(o.counters().label_calls, 0);
}

#[test]
fn dirty_fraction_concentrates_at_eta() {
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(3),
        target(3, 2),
        0.1,
        AttackStrategy::new(AttackKind::RandomFlip),
        2,
    )
    .unwrap();
    let view = LearnerStateView::initial(3, 1.0);
    let n = 100_000;
    let dirty = (0..n)
        .filter(|_| {
            let (_, t) = o.draw(&view);
            o.provenance(&t).unwrap() == Provenance::Dirty
        })
        .count();
    let f = dirty as f64 / n as f64;
    assert!((f - 0.1).abs() <= 0.003, "{f}");
}

#[test]
fn clean_and_dirty_labels() {
    let d = 5;
    let w = target(d, 3);
    let view = banded_view(d, 0.2);
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(d),
        w.clone(),
        0.3,
        AttackStrategy::new(AttackKind::BandFlip),
        3,
    )
    .unwrap();
    let mut revealed = 0;
    for _ in 0..2000 {
        let (x, t) = o.draw(&view);
        let y = o.reveal(&t).unwrap();
        revealed += 1;
        match o.provenance(&t).unwrap() {
            Provenance::Clean => assert_eq!(y, Label::of(w.dot(&x))),
            _ => {
                assert!(view.center.dot(&x).abs() <= 0.2);
                assert_eq!(y, Label::of(w.dot(&x)).flipped());
            }
        }
    }
    assert_eq!(o.counters().label_calls, revealed);
}

#[test]
fn far_outliers_have_the_requested_norm() {
    let d = 6;
    let view = banded_view(d, 0.1);
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 4),
        0.4,
        AttackStrategy::far_outlier(50.0),
        4,
    )
    .unwrap();
    for _ in 0..500 {
        let (x, t) = o.draw(&view);
        if o.provenance(&t).unwrap() == Provenance::Dirty {
            assert!(view.center.dot(&x).abs() <= 0.1);
            let n = halfspace_core::linalg::norm(&x);
            assert!((49.9..=50.1).contains(&n), "{n}");
        }
    }
}

#[test]
fn zero_rate_batch_is_the_raw_draw() {
    let d = 3;
    let mut o = NastyOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 5),
        0.0,
        AttackStrategy::new(AttackKind::BoundaryErase),
        5,
    )
    .unwrap();
    let view = LearnerStateView::initial(d, 1.0);
    let batch = o.batch(1000, &view).unwrap();
    let rec = &o.records()[0];
    assert!(rec.erased_indices.is_empty());
    for ((x, t), c) in batch.iter().zip(&rec.clean) {
        assert_eq!(x, &c.x);
        assert_eq!(o.provenance(t).unwrap(), Provenance::Clean);
    }
    assert_eq!(o.counters().batch_calls, 1);
    assert_eq!(o.counters().instance_calls, 1000);
}

#[test]
fn exact_replacement_count() {
    let d = 4;
    let mut o = NastyOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 6),
        0.02,
        AttackStrategy::new(AttackKind::BandFlip),
        6,
    )
    .unwrap();
    let batch = o.batch(1000, &banded_view(d, 0.3)).unwrap();
    let replaced = batch
        .iter()
        .filter(|(_, t)| o.provenance(t).unwrap() == Provenance::Replacement)
        .count();
    assert_eq!(replaced, 20);
}

#[test]
fn boundary_erase_removes_in_band_minimizers() {
    let d = 4;
    let w = target(d, 7);
    // 0.05: enough in-band points; 0.01: falls back to global minimizers
    for (b, fallback) in [(0.05, false), (0.01, true)] {
        let view = banded_view(d, b);
        let mut o = NastyOracle::new(
            DistributionSpec::gaussian(d),
            w.clone(),
            0.02,
            AttackStrategy::new(AttackKind::BoundaryErase),
            7,
        )
        .unwrap();
        o.batch(1000, &view).unwrap();
        let rec = &o.records()[0];

        // brute force over the retained clean draw
        let in_band = |i: &usize| view.center.dot(&rec.clean[*i].x).abs() <= b;
        let mut inside: Vec<usize> = (0..rec.clean.len()).filter(in_band).collect();
        let mut outside: Vec<usize> = (0..rec.clean.len()).filter(|i| !in_band(i)).collect();
        let key = |i: &usize| w.dot(&rec.clean[*i].x).abs();
        inside.sort_by(|a, b| key(a).total_cmp(&key(b)));
        outside.sort_by(|a, b| key(a).total_cmp(&key(b)));
        assert_eq!(inside.len() < 20, fallback, "{} in band", inside.len());
        let mut expected: Vec<usize> = inside.iter().take(20).copied().collect();
        let missing = 20 - expected.len();
        expected.extend(outside.iter().take(missing));
        expected.sort_unstable();
        assert_eq!(rec.erased_indices, expected);
        assert!(rec.replacements.iter().all(|s| view.center.dot(&s.x).abs() <= b));
    }
}

#[test]
fn boundary_erase_with_a_wide_band_stays_in_band() {
    let d = 4;
    let w = target(d, 8);
    let view = banded_view(d, 0.5);
    let mut o = NastyOracle::new(
        DistributionSpec::gaussian(d),
        w.clone(),
        0.05,
        AttackStrategy::new(AttackKind::BoundaryErase),
        8,
    )
    .unwrap();
    o.batch(400, &view).unwrap();
    let rec = &o.records()[0];
    assert_eq!(rec.erased_indices.len(), 20);
    let worst_erased = rec.erased().iter().map(|s| w.dot(&s.x).abs()).fold(0.0, f64::max);
    for (i, s) in rec.clean.iter().enumerate() {
        if !rec.erased_indices.contains(&i) && view.center.dot(&s.x).abs() <= 0.5 {
            assert!(w.dot(&s.x).abs() >= worst_erased);
        }
    }
}

#[test]
fn noise_rate_inside_the_band() {
    // eta <= c5 eps with eps = b = 0.1
    let d = 5;
    let eta = 0.004;
    let b = 0.1;
    let view = banded_view(d, b);
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 9),
        eta,
        AttackStrategy::new(AttackKind::RandomFlip),
        9,
    )
    .unwrap();
    let mut in_band = 0usize;
    let mut dirty = 0usize;
    for _ in 0..200_000 {
        let (x, t) = o.draw(&view);
        if view.center.dot(&x).abs() <= b {
            in_band += 1;
            if o.provenance(&t).unwrap() == Provenance::Dirty {
                dirty += 1;
            }
        }
    }
    let f = dirty as f64 / in_band as f64;
    assert!(f <= 2.0 * eta / (0.25 * b) + 3.0 * binomial_stderr(f, in_band), "{f}");
}

#[test]
fn tokens_from_other_oracles_are_unknown() {
    let d = 2;
    let mut a = NastyOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 10),
        0.0,
        AttackStrategy::new(AttackKind::RandomFlip),
        0,
    )
    .unwrap();
    let mut b = MaliciousOracle::new(
        DistributionSpec::gaussian(d),
        target(d, 10),
        0.0,
        AttackStrategy::new(AttackKind::RandomFlip),
        0,
    )
    .unwrap();
    let view = LearnerStateView::initial(d, 1.0);
    let batch = a.batch(3, &view).unwrap();
    assert!(matches!(b.reveal(&batch[0].1), Err(Error::UnknownToken)));
    assert!(matches!(b.provenance(&batch[0].1), Err(Error::UnknownToken)));
    a.reveal(&batch[0].1).unwrap();
    assert!(matches!(a.reveal(&batch[0].1), Err(Error::TokenAlreadyRevealed)));
}

/// Compiles only if the learner-facing traits suffice to run a phase; they
/// carry no provenance or target accessor.
fn learner_side<O: InstanceOracle>(o: &mut O, view: &LearnerStateView) -> Label {
    let (_, t) = o.draw(view);
    o.reveal(&t).unwrap()
}

#[test]
fn learner_surface_needs_no_audit() {
    let mut o = MaliciousOracle::new(
        DistributionSpec::gaussian(2),
        target(2, 11),
        0.0,
        AttackStrategy::new(AttackKind::RandomFlip),
        0,
    )
    .unwrap();
    learner_side(&mut o, &LearnerStateView::initial(2, 1.0));
    assert_eq!(o.counters().label_calls, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nasty_set_sizes(eta in 0.0f64..0.49, n in 1usize..600, seed in 0u64..1000, kind in 0usize..4) {
        let kinds = [AttackKind::RandomFlip, AttackKind::BandFlip, AttackKind::FarOutlier, AttackKind::BoundaryErase];
        let d = 3;
        let mut o = NastyOracle::new(DistributionSpec::gaussian(d), target(d, seed), eta, AttackStrategy::new(kinds[kind]), seed).unwrap();
        let batch = o.batch(n, &banded_view(d, 0.3)).unwrap();
        let expected = (eta * n as f64 + 1e-9).floor() as usize;
        let replaced = batch.iter().filter(|(_, t)| o.provenance(t).unwrap() == Provenance::Replacement).count();
        let rec = &o.records()[0];
        prop_assert_eq!(batch.len(), n);
        prop_assert_eq!(replaced, expected);
        prop_assert_eq!(rec.erased_indices.len(), expected);
        prop_assert_eq!(rec.replacements.len(), expected);
    }
}
