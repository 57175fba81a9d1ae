//! Randomized structural identities: these hold for any data, not just
//! the bundled snapshot, so they are asserted over generated inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use tsecon::cointegration::{johansen, JohansenDet};
use tsecon::dataframe::{Frame, MonthStamp, Series};
use tsecon::diagnostics::{cusum, CusumKind};
use tsecon::linreg::{ols, DesignMatrix, Distribution};
use tsecon::varmodel::toda_yamamoto;

fn start() -> MonthStamp {
  MonthStamp::new(2000, 1).unwrap()
}

fn gen_normals(seed: u64, n: usize) -> Vec<f64> {
  let mut rng = ChaCha12Rng::seed_from_u64(seed);
  (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn gen_walk(seed: u64, n: usize, drift: f64) -> Vec<f64> {
  let mut acc = 0.0;
  gen_normals(seed, n)
    .into_iter()
    .map(|e| {
      acc += drift + e;
      acc
    })
    .collect()
}

fn design(seed: u64, n: usize, k: usize) -> (Vec<f64>, DesignMatrix) {
  let beta: Vec<f64> = (0..k).map(|j| (j as f64) - 1.5).collect();
  let cols: Vec<Vec<f64>> = (0..k).map(|j| gen_normals(seed * 31 + j as u64, n)).collect();
  let noise = gen_normals(seed * 31 + 997, n);
  let y: Vec<f64> = (0..n)
    .map(|i| noise[i] + cols.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>())
    .collect();
  let named: Vec<(String, Vec<f64>)> = cols
    .into_iter()
    .enumerate()
    .map(|(j, c)| (format!("x{j}"), c))
    .collect();
  (y, DesignMatrix::from_columns(named).unwrap())
}

proptest! {
  #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

  // Residuals are orthogonal to every regressor, at any sample size/width.
  #[test]
  fn ols_residuals_orthogonal_to_regressors(seed in 1u64..5000, n in 30usize..120, k in 1usize..5) {
    let (y, d) = design(seed, n, k);
    let fit = ols(&y, &d).unwrap();
    let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let m = d.matrix();
    for j in 0..d.k() {
      let dot: f64 = m.column(j).iter().zip(fit.residuals.iter()).map(|(a, b)| a * b).sum();
      prop_assert!(dot.abs() < 1e-8 * scale * (n as f64));
    }
  }

  // Scaling the response scales coefficients, residuals, and ssr accordingly.
  #[test]
  fn ols_scale_equivariance(seed in 1u64..5000, n in 30usize..100, k in 1usize..4, c in 0.25f64..8.0) {
    let (y, d) = design(seed, n, k);
    let base = ols(&y, &d).unwrap();
    let scaled_y: Vec<f64> = y.iter().map(|v| v * c).collect();
    let scaled = ols(&scaled_y, &d).unwrap();
    for (a, b) in base.coefficients.iter().zip(scaled.coefficients.iter()) {
      prop_assert!((a * c - b).abs() < 1e-9 * (1.0 + b.abs()));
    }
    prop_assert!((base.ssr * c * c - scaled.ssr).abs() < 1e-8 * (1.0 + scaled.ssr));
  }

  // The trace statistic telescopes over the max-eigenvalue statistics.
  #[test]
  fn johansen_trace_telescopes_over_max_eigen(seed in 1u64..5000, n in 80usize..160) {
    let a = Series::new("a", start(), gen_walk(seed, n, 0.0)).unwrap();
    let b = Series::new("b", start(), gen_walk(seed + 7919, n, 0.0)).unwrap();
    let frame = Frame::new(vec![a, b]).unwrap();
    let j = johansen(&frame, 2, JohansenDet::None).unwrap();
    for r in 0..j.trace.len() {
      let sum: f64 = j.max_eigen[r..].iter().sum();
      prop_assert!((j.trace[r] - sum).abs() < 1e-10 * (1.0 + j.trace[r].abs()));
    }
  }

  // The causality Wald statistic always carries df = k, independent of the
  // augmentation order: the extra lags are never part of the restriction.
  #[test]
  fn causality_wald_df_equals_lag_order(seed in 1u64..5000, k in 1usize..4, d_max in 0usize..3) {
    let n = 120;
    let a = Series::new("a", start(), gen_walk(seed, n, 0.0)).unwrap();
    let b = Series::new("b", start(), gen_walk(seed + 104729, n, 0.0)).unwrap();
    let frame = Frame::new(vec![a, b]).unwrap();
    let ty = toda_yamamoto(&frame, k, d_max).unwrap();
    for dir in &ty.directions {
      match dir.test.distribution {
        Distribution::Chi2(df) => prop_assert_eq!(df, k),
        ref other => prop_assert!(false, "unexpected distribution {:?}", other),
      }
    }
  }

  // The squared-cusum path ends exactly at one: the final cumulative sum is
  // the full residual sum of squares divided by itself.
  #[test]
  fn cusumq_path_ends_at_one(seed in 1u64..5000, n in 40usize..120, k in 1usize..4) {
    let (y, d) = design(seed, n, k);
    let fit = ols(&y, &d).unwrap();
    let path = cusum(&fit, CusumKind::CusumQ, 0.05).unwrap();
    let last = *path.statistic.last().unwrap();
    prop_assert!((last - 1.0).abs() < 1e-12);
  }
}
