//! Regenerates the simulated rows of data/critical_values.txt.
//!
//! Published rows in the existing file are preserved verbatim; every
//! simulated row is rebuilt from its fixed seed, so the output is
//! byte-for-byte reproducible. Run with --release; the full regeneration is
//! compute-heavy.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use tsecon::cointegration::eg_statistics;
use tsecon::criticalvalues::{
    sample_quantile, simulate_quantiles, Row, Source, Table, Tail, CV_PROBS_LOWER, P_GRID,
};
use tsecon::linreg::quick_ols;
use tsecon::unitroot::{
    adf_statistic, break_statistic, dfgls_statistic, ers_statistic, BreakKind, Deterministic,
    LagSelection,
};

/// Driftless Gaussian random walk of length n, the null process for the
/// unit-root families.
fn walk(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc += rng.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect()
}

/// Sample sizes tabulated for the finite-sample unit-root families; 0 is the
/// asymptotic row, simulated at T = 2000.
const N_GRID: &[usize] = &[25, 50, 100, 200, 320, 500, 1000, 0];

fn sim_length(n: usize) -> usize {
    if n == 0 {
        2000
    } else {
        n
    }
}

fn push_sim(
    table: &mut Table,
    family: &str,
    case: &str,
    n: usize,
    param: Option<f64>,
    tail: Tail,
    seed: u64,
    reps: u64,
    grid: Vec<(f64, f64)>,
) {
    table.push(Row {
        family: family.into(),
        case: case.into(),
        n,
        param,
        tail,
        source: Source::Simulated { seed, reps },
        grid,
    });
}

/// Max deviation of the normalized cumulative sum of squares of m iid normal
/// variates from its expectation line: the null of the recursive-residual
/// squared-sum stability test.
fn add_cusumq(table: &mut Table) {
    const SEED: u64 = 0x00c5_0a01;
    const REPS: u64 = 200_000;
    let probs = [0.90, 0.95, 0.99];
    for &m in &[
        20usize, 30, 40, 60, 80, 120, 160, 200, 240, 306, 400, 500, 700, 1000,
    ] {
        let seed = SEED ^ ((m as u64) << 24);
        let grid = simulate_quantiles(seed, REPS, &probs, |rng| {
            let mut total = 0.0;
            let mut sums = Vec::with_capacity(m);
            for _ in 0..m {
                let x: f64 = rng.sample(StandardNormal);
                total += x * x;
                sums.push(total);
            }
            let mut worst = 0.0f64;
            for (r, s) in sums.iter().enumerate() {
                let dev = (s / total - (r + 1) as f64 / m as f64).abs();
                worst = worst.max(dev);
            }
            worst
        });
        push_sim(table, "cusumq", "-", m, None, Tail::Upper, seed, REPS, grid);
        eprintln!("cusumq m={m} done");
    }
}

/// Dickey-Fuller t distribution (lag-0 augmented regression on a random
/// walk); Phillips-Perron reads the same surface.
fn add_df(table: &mut Table) {
    const REPS: u64 = 400_000;
    for (ci, (det, case)) in [
        (Deterministic::None, "nc"),
        (Deterministic::Constant, "c"),
        (Deterministic::ConstantTrend, "ct"),
    ]
    .into_iter()
    .enumerate()
    {
        for &n in N_GRID {
            let t = sim_length(n);
            let seed = 0x00c5_0a02 ^ ((ci as u64) << 56) ^ ((n as u64) << 16);
            let grid = simulate_quantiles(seed, REPS, P_GRID, |rng| {
                let y = walk(rng, t);
                adf_statistic(&y, det, 0).expect("simulated regression is nondegenerate")
            });
            push_sim(table, "df", case, n, None, Tail::Lower, seed, REPS, grid);
            eprintln!("df {case} n={n} done");
        }
    }
}

fn add_dfgls(table: &mut Table) {
    const REPS: u64 = 200_000;
    for (ci, (det, case)) in [
        (Deterministic::Constant, "c"),
        (Deterministic::ConstantTrend, "ct"),
    ]
    .into_iter()
    .enumerate()
    {
        for &n in N_GRID {
            let t = sim_length(n);
            let seed = 0x00c5_0a03 ^ ((ci as u64) << 56) ^ ((n as u64) << 16);
            let grid = simulate_quantiles(seed, REPS, P_GRID, |rng| {
                let y = walk(rng, t);
                dfgls_statistic(&y, det, 0).expect("simulated regression is nondegenerate")
            });
            push_sim(table, "dfgls", case, n, None, Tail::Lower, seed, REPS, grid);
            eprintln!("dfgls {case} n={n} done");
        }
    }
}

/// ERS point-optimal P_T, small values rejecting, with the automatic
/// Bartlett bandwidth the library applies by default.
fn add_ers(table: &mut Table) {
    const REPS: u64 = 200_000;
    for (ci, (det, case)) in [
        (Deterministic::Constant, "c"),
        (Deterministic::ConstantTrend, "ct"),
    ]
    .into_iter()
    .enumerate()
    {
        for &n in N_GRID {
            let t = sim_length(n);
            let seed = 0x00c5_0a04 ^ ((ci as u64) << 56) ^ ((n as u64) << 16);
            let grid = simulate_quantiles(seed, REPS, P_GRID, |rng| {
                let y = walk(rng, t);
                ers_statistic(&y, det, None).expect("simulated regression is nondegenerate")
            });
            push_sim(table, "ers", case, n, None, Tail::Lower, seed, REPS, grid);
            eprintln!("ers {case} n={n} done");
        }
    }
}

/// Minimum-t break statistics at the bundled sample size. These carry
/// critical-value bands only, so the sparse lower-tail grid suffices.
fn add_breaks(table: &mut Table) {
    let n = 322;
    let jobs: [(&str, &str, BreakKind, f64, u64, u64); 3] = [
        ("perron_io", "both", BreakKind::PerronIo, 0.15, 0x00c5_0a05, 25_000),
        ("perron_ao", "both", BreakKind::PerronAo, 0.15, 0x00c5_0a06, 25_000),
        ("ls_break", "two", BreakKind::LsBreak, 0.10, 0x00c5_0a07, 2_000),
    ];
    for (family, case, kind, trim, seed, reps) in jobs {
        let grid = simulate_quantiles(seed, reps, CV_PROBS_LOWER, |rng| {
            let y = walk(rng, n);
            break_statistic(&y, kind, trim, 0)
                .expect("simulated grid search is nondegenerate")
                .0
        });
        push_sim(table, family, case, n, None, Tail::Lower, seed, reps, grid);
        eprintln!("{family} n={n} done");
    }
}

/// Like `simulate_quantiles` but for a statistic pair sharing each
/// replication's draws; the per-replication stream seeding is identical, so
/// a pair family and a scalar family with the same seed see the same data.
fn simulate_pair_quantiles<F>(
    seed: u64,
    reps: u64,
    probs: &[f64],
    stat: F,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>)
where
    F: Fn(&mut ChaCha12Rng) -> (f64, f64),
{
    let mut first = Vec::with_capacity(reps as usize);
    let mut second = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(rep + 1);
        let (a, b) = stat(&mut rng);
        first.push(a);
        second.push(b);
    }
    first.sort_unstable_by(f64::total_cmp);
    second.sort_unstable_by(f64::total_cmp);
    let grid = |draws: &[f64]| {
        probs
            .iter()
            .map(|&p| (p, sample_quantile(draws, p)))
            .collect::<Vec<(f64, f64)>>()
    };
    (grid(&first), grid(&second))
}

/// Residual cointegration surfaces: tau (coint_df) and normalized bias z
/// (coint_z) of the lag-0 residual test on two independent walks, tabulated
/// by first-stage deterministic case at the two-variable dimension.
fn add_coint(table: &mut Table) {
    const REPS: u64 = 400_000;
    for (ci, (det, case)) in [
        (Deterministic::None, "nc"),
        (Deterministic::Constant, "c"),
        (Deterministic::ConstantTrend, "ct"),
    ]
    .into_iter()
    .enumerate()
    {
        for &n in N_GRID {
            let t = sim_length(n);
            let seed = 0x00c5_0a08 ^ ((ci as u64) << 56) ^ ((n as u64) << 16);
            let (tau_grid, z_grid) = simulate_pair_quantiles(seed, REPS, P_GRID, |rng| {
                let x = walk(rng, t);
                let y = walk(rng, t);
                let (tau, z, _) = eg_statistics(&y, &x, det, &LagSelection::Fixed(0))
                    .expect("simulated regression is nondegenerate");
                (tau, z)
            });
            push_sim(
                table, "coint_df", case, n, Some(2.0), Tail::Lower, seed, REPS, tau_grid,
            );
            push_sim(
                table, "coint_z", case, n, Some(2.0), Tail::Lower, seed, REPS, z_grid,
            );
            eprintln!("coint {case} n={n} done");
        }
    }
}

fn demean(col: &mut [f64]) {
    let m = col.iter().sum::<f64>() / col.len() as f64;
    for v in col {
        *v -= m;
    }
}

/// Residual from regressing `col` on a constant and `u` (closed-form 2x2).
fn detrend(col: &mut [f64], u: &[f64]) {
    let n = col.len() as f64;
    let su: f64 = u.iter().sum();
    let suu: f64 = u.iter().map(|v| v * v).sum();
    let sy: f64 = col.iter().sum();
    let suy: f64 = col.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
    let det = n * suu - su * su;
    let b = (n * suy - su * sy) / det;
    let a = (sy - b * su) / n;
    for (v, &ut) in col.iter_mut().zip(u) {
        *v -= a + b * ut;
    }
}

/// One draw of the asymptotic Johansen (trace, max-eigen) pair for dimension
/// m under the given deterministic case, discretized at T steps: the
/// functional F per case follows the standard tabulations (case none: F = W;
/// restricted constant: (W, 1); unrestricted constant: demeaned W with the
/// last component replaced by the demeaned trend; restricted trend: demeaned
/// (W, u); unrestricted trend: detrended W with the last component replaced
/// by detrended u^2). The statistic pair is tr / lambda_max of
/// A' B^{-1} A with A = sum F e', B = sum F F'; component scalings cancel.
fn johansen_pair(rng: &mut ChaCha12Rng, m: usize, case: &str, t_disc: usize) -> (f64, f64) {
    let t = t_disc;
    let mut eps = vec![vec![0.0f64; t]; m];
    for step in 0..t {
        for e in eps.iter_mut() {
            e[step] = rng.sample(StandardNormal);
        }
    }
    let walks: Vec<Vec<f64>> = eps
        .iter()
        .map(|e| {
            let mut acc = 0.0;
            e.iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        })
        .collect();
    let u: Vec<f64> = (0..t).map(|i| (i + 1) as f64 / t as f64).collect();
    let mut f_cols: Vec<Vec<f64>> = match case {
        "none" => walks.clone(),
        "rconst" => {
            let mut c = walks.clone();
            c.push(vec![1.0; t]);
            c
        }
        "const" => {
            let mut c: Vec<Vec<f64>> = walks[..m - 1].to_vec();
            c.push(u.clone());
            for col in c.iter_mut() {
                demean(col);
            }
            c
        }
        "rtrend" => {
            let mut c = walks.clone();
            c.push(u.clone());
            for col in c.iter_mut() {
                demean(col);
            }
            c
        }
        "trend" => {
            let mut c: Vec<Vec<f64>> = walks[..m - 1].to_vec();
            c.push(u.iter().map(|v| v * v).collect());
            for col in c.iter_mut() {
                detrend(col, &u);
            }
            c
        }
        other => unreachable!("unknown johansen case {other}"),
    };
    let dimf = f_cols.len();
    // A = sum_t F_{t-1} eps_t', B = sum_t F_{t-1} F_{t-1}'.
    let mut a = DMatrix::<f64>::zeros(dimf, m);
    let mut b = DMatrix::<f64>::zeros(dimf, dimf);
    for step in 1..t {
        for i in 0..dimf {
            let fi = f_cols[i][step - 1];
            for j in 0..m {
                a[(i, j)] += fi * eps[j][step];
            }
            for l in i..dimf {
                b[(i, l)] += fi * f_cols[l][step - 1];
            }
        }
    }
    for i in 0..dimf {
        for l in 0..i {
            b[(i, l)] = b[(l, i)];
        }
    }
    f_cols.clear();
    let chol = b.cholesky().expect("simulated moment matrix is PD");
    let c = a.transpose() * chol.solve(&a);
    let sym = (&c + c.transpose()) * 0.5;
    let trace = sym.trace();
    let maxeig = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (trace, maxeig)
}

/// Asymptotic Johansen trace / max-eigen tables for dimensions 1..3 under
/// all five deterministic cases.
fn add_johansen(table: &mut Table) {
    const REPS: u64 = 200_000;
    const T_DISC: usize = 1000;
    for (ci, case) in ["none", "rconst", "const", "rtrend", "trend"]
        .into_iter()
        .enumerate()
    {
        for m in 1..=3usize {
            let seed = 0x00c5_0a09 ^ ((ci as u64) << 56) ^ ((m as u64) << 16);
            let (tr_grid, mx_grid) = simulate_pair_quantiles(seed, REPS, P_GRID, |rng| {
                johansen_pair(rng, m, case, T_DISC)
            });
            push_sim(
                table,
                "johansen_trace",
                case,
                0,
                Some(m as f64),
                Tail::Upper,
                seed,
                REPS,
                tr_grid,
            );
            push_sim(
                table,
                "johansen_max",
                case,
                0,
                Some(m as f64),
                Tail::Upper,
                seed,
                REPS,
                mx_grid,
            );
            eprintln!("johansen {case} m={m} done");
        }
    }
}

/// One bounds-test draw under the no-levels-relation null: the dependent
/// variable is a driftless walk and the single regressor is stationary
/// noise (I(0) band) or an independent walk (I(1) band). The conditional
/// difference model regresses dy_t on dx_t, the case deterministics, and
/// the lagged levels; F restricts the lagged levels plus any restricted
/// deterministic, t is the ordinary statistic on the lagged dependent level.
fn bounds_pair(rng: &mut ChaCha12Rng, t: usize, case: &str, integrated: bool) -> (f64, f64) {
    let y = walk(rng, t);
    let x: Vec<f64> = if integrated {
        walk(rng, t)
    } else {
        (0..t).map(|_| rng.sample(StandardNormal)).collect()
    };
    let rows = t - 1;
    let dy: Vec<f64> = (1..t).map(|i| y[i] - y[i - 1]).collect();
    let dx: Vec<f64> = (1..t).map(|i| x[i] - x[i - 1]).collect();
    let ylag: Vec<f64> = (1..t).map(|i| y[i - 1]).collect();
    let xlag: Vec<f64> = (1..t).map(|i| x[i - 1]).collect();
    let ones = vec![1.0; rows];
    let trend: Vec<f64> = (1..t).map(|i| (i + 1) as f64).collect();

    let mut free: Vec<&[f64]> = vec![&dx];
    let mut restricted: Vec<&[f64]> = vec![&ylag, &xlag];
    match case {
        "i" => {}
        "ii" => restricted.push(&ones),
        "iii" => free.push(&ones),
        "iv" => {
            free.push(&ones);
            restricted.push(&trend);
        }
        "v" => {
            free.push(&ones);
            free.push(&trend);
        }
        _ => unreachable!("unknown bounds case {case}"),
    }
    let mut all = free.clone();
    all.extend(restricted.iter().cloned());
    let unres = quick_ols(&all, &dy).expect("unrestricted bounds design");
    let res = quick_ols(&free, &dy).expect("restricted bounds design");
    let m = restricted.len() as f64;
    let df2 = (rows - all.len()) as f64;
    let f = ((res.ssr - unres.ssr) / m) / (unres.ssr / df2);
    (f, unres.t_stat(free.len()))
}

/// Bounds-test bands for one regressor across the five deterministic cases:
/// small-sample rows at n = 30..80 plus simulated asymptotic rows (T = 1000)
/// for the cases without published values. The published case-i asymptotic
/// rows are kept; their simulated counterpart is printed for validation
/// only.
fn add_bounds(table: &mut Table) {
    const REPS: u64 = 100_000;
    const NS: &[usize] = &[30, 40, 50, 60, 70, 80, 0];
    for (ci, case) in ["i", "ii", "iii", "iv", "v"].into_iter().enumerate() {
        for &n in NS {
            let t = if n == 0 { 1000 } else { n };
            for (ii, integrated) in [false, true].into_iter().enumerate() {
                let seed = 0x00c5_0a0a
                    ^ ((ci as u64) << 56)
                    ^ ((n as u64) << 16)
                    ^ ((ii as u64) << 8);
                let (f_grid, t_grid) =
                    simulate_pair_quantiles(seed, REPS, P_GRID, |rng| {
                        bounds_pair(rng, t, case, integrated)
                    });
                if case == "i" && n == 0 {
                    let at = |g: &[(f64, f64)], p: f64| {
                        g.iter().find(|(q, _)| *q == p).map(|(_, v)| *v).unwrap_or(f64::NAN)
                    };
                    eprintln!(
                        "bounds i asym validation (published kept): I({}) F5={:.4} t5={:.4}",
                        ii,
                        at(&f_grid, 0.95),
                        at(&t_grid, 0.05)
                    );
                    continue;
                }
                let suffix = if integrated { "1" } else { "0" };
                push_sim(
                    table,
                    &format!("bounds_f_i{suffix}"),
                    case,
                    n,
                    Some(1.0),
                    Tail::Upper,
                    seed,
                    REPS,
                    f_grid,
                );
                push_sim(
                    table,
                    &format!("bounds_t_i{suffix}"),
                    case,
                    n,
                    Some(1.0),
                    Tail::Lower,
                    seed,
                    REPS,
                    t_grid,
                );
            }
            eprintln!("bounds {case} n={n} done");
        }
    }
}

const GROUPS: &[&str] = &[
    "cusumq", "df", "dfgls", "ers", "breaks", "coint", "johansen", "bounds",
];

fn group_of(family: &str) -> &str {
    match family {
        "perron_io" | "perron_ao" | "ls_break" => "breaks",
        "coint_df" | "coint_z" => "coint",
        "johansen_trace" | "johansen_max" => "johansen",
        "bounds_f_i0" | "bounds_f_i1" | "bounds_t_i0" | "bounds_t_i1" => "bounds",
        other => other,
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    for g in &args {
        assert!(
            GROUPS.contains(&g.as_str()),
            "unknown family group {g}; known: {GROUPS:?}"
        );
    }
    let active: Vec<&str> = if args.is_empty() {
        GROUPS.to_vec()
    } else {
        args.iter().map(|s| s.as_str()).collect()
    };

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/critical_values.txt");
    let text = std::fs::read_to_string(path).expect("critical value table exists");
    let mut table = Table::parse(&text).expect("critical value table parses");
    table.retain(|row| {
        row.source == Source::Published || !active.contains(&group_of(&row.family))
    });

    for g in &active {
        match *g {
            "cusumq" => add_cusumq(&mut table),
            "df" => add_df(&mut table),
            "dfgls" => add_dfgls(&mut table),
            "ers" => add_ers(&mut table),
            "breaks" => add_breaks(&mut table),
            "coint" => add_coint(&mut table),
            "johansen" => add_johansen(&mut table),
            "bounds" => add_bounds(&mut table),
            _ => unreachable!(),
        }
    }

    std::fs::write(path, table.render()).expect("table written");
    eprintln!("wrote {path}");
}
