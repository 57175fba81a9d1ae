//! Monte Carlo size checks: under the null, each test should reject at
//! close to its nominal 5% rate. 200 replications per test keeps the
//! suite fast while bounding the rejection rate within +-5 points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use tsecon::dataframe::{Frame, MonthStamp, Series};
use tsecon::unitroot::{unit_root, Deterministic, UnitRootKind, UnitRootSpec};
use tsecon::varmodel::toda_yamamoto;

const REPS: u64 = 200;
const N: usize = 200;
const NOMINAL: f64 = 0.05;
const SLACK: f64 = 0.05;

fn start() -> MonthStamp {
  MonthStamp::new(2000, 1).unwrap()
}

fn normals(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
  (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_walk(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
  let mut y = Vec::with_capacity(n);
  let mut acc = 0.0;
  for _ in 0..n {
    acc += rng.sample::<f64, _>(StandardNormal);
    y.push(acc);
  }
  y
}

fn ar1(rng: &mut ChaCha12Rng, n: usize, rho: f64) -> Vec<f64> {
  let mut y = Vec::with_capacity(n);
  let mut prev = 0.0;
  for _ in 0..n {
    prev = rho * prev + rng.sample::<f64, _>(StandardNormal);
    y.push(prev);
  }
  y
}

fn assert_size(label: &str, rejections: usize) {
  let rate = rejections as f64 / REPS as f64;
  assert!(
    (rate - NOMINAL).abs() <= SLACK,
    "{label}: rejection rate {rate:.3} outside {NOMINAL} +- {SLACK}"
  );
}

// ADF under a pure random walk: p-value based rejections near 5%.
#[test]
fn adf_size_under_unit_root_null() {
  let spec = UnitRootSpec::new(Deterministic::Constant);
  let mut rejections = 0;
  for seed in 0..REPS {
    let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
    let s = Series::new("y", start(), random_walk(&mut rng, N)).unwrap();
    let r = unit_root(&s, UnitRootKind::Adf, &spec).unwrap();
    if r.rejects_at(NOMINAL) {
      rejections += 1;
    }
  }
  assert_size("adf", rejections);
}

// KPSS under iid noise (the stationary null): upper-tail rejections near 5%.
#[test]
fn kpss_size_under_stationary_null() {
  let spec = UnitRootSpec::new(Deterministic::Constant);
  let mut rejections = 0;
  for seed in 0..REPS {
    let mut rng = ChaCha12Rng::seed_from_u64(2000 + seed);
    let s = Series::new("y", start(), normals(&mut rng, N)).unwrap();
    let r = unit_root(&s, UnitRootKind::Kpss, &spec).unwrap();
    if r.rejects_at(NOMINAL) {
      rejections += 1;
    }
  }
  assert_size("kpss", rejections);
}

// Lag-augmented causality between independent AR(1) processes: the Wald
// test on the first k lags should reject near its nominal size.
#[test]
fn lag_augmented_causality_size_under_independence() {
  let mut rejections = 0;
  for seed in 0..REPS {
    let mut rng = ChaCha12Rng::seed_from_u64(3000 + seed);
    let a = Series::new("a", start(), ar1(&mut rng, N, 0.5)).unwrap();
    let b = Series::new("b", start(), ar1(&mut rng, N, 0.5)).unwrap();
    let frame = Frame::new(vec![a, b]).unwrap();
    let ty = toda_yamamoto(&frame, 2, 1).unwrap();
    let dir = ty
      .directions
      .iter()
      .find(|d| d.cause == "a" && d.effect == "b")
      .unwrap();
    if dir.test.p_value.unwrap() < NOMINAL {
      rejections += 1;
    }
  }
  assert_size("lag-augmented wald", rejections);
}
