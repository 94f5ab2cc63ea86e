//! Independent reference values used by the integration tests. Nothing in
//! here calls into the simulator's predicates.

#![allow(dead_code)]

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// `E[g(A)]` for `A ~ Exp(1)`, integrating in `s = ln a`.
pub fn expect_exp1(g: impl Fn(f64) -> f64, n: usize) -> f64 {
    simpson(|s| { let a = s.exp(); g(a) * (-a).exp() * a }, -30.0, 4.6, n)
}

/// `E[g(A, B)]` for independent `A, B ~ Exp(1)` by nested quadrature.
pub fn expect_exp1_pair(g: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
    expect_exp1(|a| expect_exp1(|b| g(a, b), n), n)
}

/// `P[log2(1 + rho X) < rate]` for `X ~ Exp(1)`.
pub fn single_link_outage(rho: f64, rate: f64) -> f64 {
    -(-(2f64.powf(rate) - 1.0) / rho).exp_m1()
}

/// Best-of-`n` decode-and-forward with `slots`-slot frames: one relay's
/// session succeeds iff both of its hops clear `(2^(slots*rate) - 1)/rho`.
pub fn best_of_n_two_hop_df(rho: f64, rate: f64, slots: f64, n: i32) -> f64 {
    let t = (2f64.powf(slots * rate) - 1.0) / rho;
    let single = -(-2.0 * t).exp_m1();
    single.powi(n)
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ys` on `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
