use halfspace_core::geometry::{angle, project_to_ball_pair};
use halfspace_core::linalg::{distance, norm};
use halfspace_core::rng::{stream, StreamTag};
use halfspace_core::{SearchBall, UnitVec};
use proptest::prelude::*;
use rand::Rng;

fn project_ball(p: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let diff: Vec<f64> = p.iter().zip(c).map(|(a, b)| a - b).collect();
    let n = norm(&diff);
    if n <= r {
        return p.to_vec();
    }
    c.iter().zip(&diff).map(|(ci, di)| ci + r * di / n).collect()
}

/// Dykstra's alternating projections onto the two balls.
fn dykstra(p: &[f64], ball: &SearchBall) -> Vec<f64> {
    let d = p.len();
    let origin = vec![0.0; d];
    let mut x = p.to_vec();
    let mut pa = vec![0.0; d];
    let mut qb = vec![0.0; d];
    for _ in 0..20_000 {
        let ya: Vec<f64> = x.iter().zip(&pa).map(|(a, b)| a + b).collect();
        let y = project_ball(&ya, &origin, 1.0);
        pa = ya.iter().zip(&y).map(|(a, b)| a - b).collect();
        let yb: Vec<f64> = y.iter().zip(&qb).map(|(a, b)| a + b).collect();
        let next = project_ball(&yb, ball.center(), ball.radius());
        qb = yb.iter().zip(&next).map(|(a, b)| a - b).collect();
        let moved = distance(&next, &x);
        x = next;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

fn random_ball<R: Rng>(d: usize, rng: &mut R) -> SearchBall {
    let c = UnitVec::random(d, rng);
    let r = rng.random_range(0.01..1.5);
    SearchBall::new(c.into_inner(), r).unwrap()
}

#[test]
fn examples() {
    let ball = SearchBall::new(vec![1.0, 0.0], 0.5).unwrap();
    let a = project_to_ball_pair(&[2.0, 0.0], &ball).unwrap();
    assert!(distance(&a, &[1.0, 0.0]) < 1e-12);
    let b = project_to_ball_pair(&[0.0, 2.0], &ball).unwrap();
    assert!(distance(&b, &[0.776393, 0.447214]) < 1e-5, "{b:?}");
    // both spheres active: the upper intersection point
    let corner = project_to_ball_pair(&[1.5, 1.5], &ball).unwrap();
    assert!(distance(&corner, &[0.875, 0.484123]) < 1e-5, "{corner:?}");
    let inside = project_to_ball_pair(&[0.9, 0.1], &ball).unwrap();
    assert_eq!(inside, vec![0.9, 0.1]);
    let far = SearchBall::new(vec![3.0, 0.0], 0.5).unwrap();
    assert!(project_to_ball_pair(&[0.0, 0.0], &far).is_err());
}

#[test]
fn agrees_with_dykstra() {
    let mut rng = stream(11, StreamTag::Diagnostics, 0);
    for trial in 0..300 {
        let d = 2 + trial % 5;
        let ball = random_ball(d, &mut rng);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fast = project_to_ball_pair(&p, &ball).unwrap();
        let slow = dykstra(&p, &ball);
        assert!(distance(&fast, &slow) < 1e-6, "trial {trial}: {fast:?} vs {slow:?}");
    }
}

#[test]
fn non_expansive_over_1000_pairs() {
    let mut rng = stream(12, StreamTag::Diagnostics, 0);
    for _ in 0..1000 {
        let d = rng.random_range(2..8);
        let ball = random_ball(d, &mut rng);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
        let pp = project_to_ball_pair(&p, &ball).unwrap();
        let pq = project_to_ball_pair(&q, &ball).unwrap();
        assert!(distance(&pp, &pq) <= distance(&p, &q) + 1e-9);
        assert!(norm(&pp) <= 1.0 + 1e-9);
        assert!(distance(&pp, ball.center()) <= ball.radius() + 1e-9);
    }
}

proptest! {
    #[test]
    fn projection_is_idempotent(seed in 0u64..10_000, d in 2usize..6) {
        let mut rng = stream(seed, StreamTag::Diagnostics, 1);
        let ball = random_ball(d, &mut rng);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let once = project_to_ball_pair(&p, &ball).unwrap();
        let twice = project_to_ball_pair(&once, &ball).unwrap();
        prop_assert!(distance(&once, &twice) < 1e-9);
    }

    #[test]
    fn angle_is_symmetric_and_bounded(seed in 0u64..10_000, d in 2usize..8) {
        let mut rng = stream(seed, StreamTag::Diagnostics, 2);
        let u = UnitVec::random(d, &mut rng);
        let v = UnitVec::random(d, &mut rng);
        let a = angle(&u, &v).unwrap();
        prop_assert_eq!(a, angle(&v, &u).unwrap());
        prop_assert!((0.0..=std::f64::consts::PI).contains(&a));
        prop_assert!((angle(&u, &v.neg()).unwrap() - (std::f64::consts::PI - a)).abs() < 1e-7);
    }
}

#[test]
fn angle_of_zero_vector_is_an_error() {
    assert!(angle(&UnitVec::zero(3), &UnitVec::basis(3, 0)).is_err());
    assert_eq!(angle(&UnitVec::basis(3, 1), &UnitVec::basis(3, 1)).unwrap(), 0.0);
}
