//! Closed-form quantities behind the approximation guarantee.
//!
//! With sample probability `p < 1/2`, a ±1 walk that steps back with
//! probability `p` is ruined (ever drops below its start) with probability
//! `q = p / (1 - p)`, the root in (0, 1) of `q = p + (1 - p) q²`; from one
//! step ahead the ruin probability is `q²`. The mechanism's revenue is at
//! least `r1 = p - q²` times `EFO(v₋₁)` and at least `r2 = p + (1 - p) p³`
//! times `v₂`, which combine into the factor `(r1 + r2) / (r1 r2)`.
//!
//! Everything here is `f64`; none of it touches money.

use serde::Serialize;

use crate::error::{Error, Result};

/// Closed-form threshold below which `r1 > 0`: the root `(3 - √5) / 2` of
/// `(1 - p)² = p`.
pub const NONTRIVIAL_BIAS_LIMIT: f64 = 0.381_966_011_250_105_1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RuinBounds {
    pub q: f64,
    pub q_conditional: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproxFactors {
    pub p: f64,
    pub r1: f64,
    pub r2: f64,
    /// `(r1 + r2) / (r1 r2)`, infinite when `r1 <= 0`.
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioMinimum {
    pub p_star: f64,
    pub ratio_star: f64,
}

fn check_bias(p: f64) -> Result<()> {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidBias(p))
    }
}

pub fn ruin_closed_form(p: f64) -> Result<RuinBounds> {
    check_bias(p)?;
    let q = p / (1.0 - p);
    Ok(RuinBounds {
        q,
        q_conditional: q * q,
    })
}

/// Probability that a walk started at 0 reaches -1 within `steps` steps.
pub fn ruin_exact_finite(p: f64, steps: usize) -> f64 {
    ruin_exact_finite_from(p, steps, 0)
}

/// Probability that a walk started at `start >= 0` reaches -1 within
/// `steps` steps, by dynamic programming over positions.
pub fn ruin_exact_finite_from(p: f64, steps: usize, start: usize) -> f64 {
    let mut mass = vec![0.0; start + steps + 2];
    mass[start] = 1.0;
    let mut ruined = 0.0;
    for step in 0..steps {
        let mut next = vec![0.0; mass.len()];
        // Positions reachable after `step` steps are at most start + step.
        for pos in 0..=start + step {
            let m = mass[pos];
            if m == 0.0 {
                continue;
            }
            if pos == 0 {
                ruined += m * p;
            } else {
                next[pos - 1] += m * p;
            }
            next[pos + 1] += m * (1.0 - p);
        }
        mass = next;
    }
    ruined
}

pub fn r1(p: f64) -> f64 {
    let q = p / (1.0 - p);
    p - q * q
}

pub fn r2(p: f64) -> f64 {
    p + (1.0 - p) * p.powi(3)
}

pub fn ratio(p: f64) -> f64 {
    let (a, b) = (r1(p), r2(p));
    if a <= 0.0 {
        f64::INFINITY
    } else {
        (a + b) / (a * b)
    }
}

pub fn factors(p: f64) -> ApproxFactors {
    ApproxFactors {
        p,
        r1: r1(p),
        r2: r2(p),
        ratio: ratio(p),
    }
}

/// The root of `r1` on (0, 1/2), found by bisection.
pub fn nontriviality_threshold() -> f64 {
    let (mut lo, mut hi) = (1e-6, 0.5);
    debug_assert!(r1(lo) > 0.0 && r1(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r1(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const PRESCAN_POINTS: usize = 65;
const FINE_GRID_MAX: usize = 1_000_000;

/// Minimises [`ratio`] over `[lo, hi]` to within `tolerance` in `p`.
///
/// A coarse pre-scan locates the local minima. With a single one, golden
/// section search refines its bracket; otherwise a fine grid picks the
/// global basin first.
pub fn minimize_ratio(lo: f64, hi: f64, tolerance: f64) -> Result<RatioMinimum> {
    let valid = lo.is_finite()
        && hi.is_finite()
        && lo > 0.0
        && lo <= hi
        && hi < NONTRIVIAL_BIAS_LIMIT
        && tolerance > 0.0;
    if !valid {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if hi - lo <= tolerance {
        let p_star = 0.5 * (lo + hi);
        return Ok(RatioMinimum {
            p_star,
            ratio_star: ratio(p_star),
        });
    }

    let grid = |points: usize| -> Vec<f64> {
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let coarse = grid(PRESCAN_POINTS);
    let values: Vec<f64> = coarse.iter().map(|&p| ratio(p)).collect();
    let minima = local_minima(&values);

    let (xs, best) = if minima.len() == 1 {
        (coarse, minima[0])
    } else {
        let points = (((hi - lo) / tolerance).ceil() as usize + 1).clamp(PRESCAN_POINTS, FINE_GRID_MAX);
        let fine = grid(points);
        let best = argmin(fine.iter().map(|&p| ratio(p)));
        (fine, best)
    };
    let left = xs[best.saturating_sub(1)];
    let right = xs[(best + 1).min(xs.len() - 1)];
    let p_star = golden_section(ratio, left, right, tolerance);
    Ok(RatioMinimum {
        p_star,
        ratio_star: ratio(p_star),
    })
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
        .0
}

/// Indices of local minima of a sampled function, endpoints included.
fn local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left_ok = i == 0 || values[i] < values[i - 1];
            let right_ok = i + 1 == n || values[i] <= values[i + 1];
            left_ok && right_ok
        })
        .collect()
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tolerance: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tolerance {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Monte-Carlo-free oracle: enumerate every step sequence of length n.
    fn ruin_by_enumeration(p: f64, n: usize, start: i64) -> f64 {
        (0u32..(1 << n))
            .filter(|mask| {
                let mut pos = start;
                (0..n).any(|i| {
                    pos += if mask & (1 << i) != 0 { -1 } else { 1 };
                    pos < 0
                })
            })
            .map(|mask| {
                let back = mask.count_ones() as i32;
                p.powi(back) * (1.0 - p).powi(n as i32 - back)
            })
            .sum()
    }

    #[test]
    fn closed_form_examples() {
        let b = ruin_closed_form(0.25).unwrap();
        assert!(close(b.q, 1.0 / 3.0, 1e-15) && close(b.q_conditional, 1.0 / 9.0, 1e-15));
        let b = ruin_closed_form(0.26).unwrap();
        assert!(close(b.q, 13.0 / 37.0, 1e-15));
        assert!(close(b.q_conditional, 0.123_448, 1e-6));
        assert!(ruin_closed_form(1e-9).unwrap().q < 1e-8);
        for p in [0.0, 0.5, 1.0, -0.2] {
            assert_eq!(ruin_closed_form(p), Err(Error::InvalidBias(p)));
        }
    }

    #[test]
    fn finite_ruin_examples() {
        for p in [0.1, 0.26, 0.4] {
            assert!(close(ruin_exact_finite(p, 1), p, 1e-15));
        }
        assert!(close(ruin_exact_finite(0.25, 2), 0.25, 1e-15));
        let long = ruin_exact_finite(0.26, 200);
        assert!(long > 0.0 && long < 13.0 / 37.0);
        for (p, n, start) in [(0.26, 12, 0), (0.4, 15, 0), (0.3, 14, 1), (0.1, 9, 1)] {
            let dp = ruin_exact_finite_from(p, n, start as usize);
            assert!(close(dp, ruin_by_enumeration(p, n, start), 1e-12));
        }
    }

    #[test]
    fn factor_examples() {
        let f = factors(0.26);
        assert!(close(f.r1, 0.136_552, 1e-6));
        assert!(close(f.r2, 0.273_006, 1e-6));
        assert!(close(f.ratio, 10.986, 1e-3));
        assert!(close(r1(0.25), 0.25 - 1.0 / 9.0, 1e-15));
        let root = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(r1(root).abs() < 1e-15);
        assert!(close(root, NONTRIVIAL_BIAS_LIMIT, 1e-15));
        assert_eq!(ratio(0.45), f64::INFINITY);
    }

    #[test]
    fn threshold_root() {
        let root = nontriviality_threshold();
        assert!(close(root, (3.0 - 5f64.sqrt()) / 2.0, 1e-12));
        assert!(root > 0.38 && root < 0.382);
    }

    #[test]
    fn minimisation() {
        let m = minimize_ratio(0.05, 0.38, 1e-6).unwrap();
        assert!((10.95..=11.0).contains(&m.ratio_star));
        assert!((0.24..=0.28).contains(&m.p_star));
        assert!(m.ratio_star <= ratio(0.26) && ratio(0.26) <= 11.0);
        // Reference minimiser from an independent bounded Brent search.
        assert!(close(m.p_star, 0.260_006, 1e-5));
        assert!(close(m.ratio_star, 10.986_125, 1e-6));

        let point = minimize_ratio(0.26, 0.26, 1e-6).unwrap();
        assert_eq!(point, RatioMinimum { p_star: 0.26, ratio_star: ratio(0.26) });

        for (lo, hi) in [(0.3, 0.2), (0.0, 0.3), (0.1, 0.4), (f64::NAN, 0.2)] {
            assert!(minimize_ratio(lo, hi, 1e-6).is_err());
        }
    }

    #[test]
    fn minima_detection() {
        assert_eq!(local_minima(&[3.0, 2.0, 1.0, 2.0]), [2]);
        assert_eq!(local_minima(&[1.0, 2.0, 0.5, 3.0]), [0, 2]);
        let quartic = |x: f64| (x * x - 1.0).powi(2) + 0.1 * x;
        let x = golden_section(quartic, -2.0, -0.2, 1e-9);
        assert!(close(x, -1.0, 0.02));
    }

    proptest! {
        #[test]
        fn ratio_identities(p in 0.001f64..0.38) {
            let f = factors(p);
            prop_assert!(f.r1 > 0.0 && f.r2 > 0.0);
            prop_assert!(f.ratio >= (1.0 / f.r1).max(1.0 / f.r2));
            prop_assert!((f.ratio * f.r1 * f.r2 - (f.r1 + f.r2)).abs() < 1e-12);
        }

        #[test]
        fn r1_sign_matches_threshold(p in 0.001f64..0.499) {
            prop_assert_eq!(r1(p) > 0.0, p < NONTRIVIAL_BIAS_LIMIT);
        }

        #[test]
        fn q_is_the_fixed_point(p in 0.001f64..0.499) {
            let q = ruin_closed_form(p).unwrap().q;
            prop_assert!(q > 0.0 && q < 1.0);
            prop_assert!((q - (p + (1.0 - p) * q * q)).abs() < 1e-12);
        }

        #[test]
        fn finite_ruin_grows_towards_bound(p in 0.01f64..0.49, n in 1usize..150) {
            let bounds = ruin_closed_form(p).unwrap();
            let (now, later) = (ruin_exact_finite(p, n), ruin_exact_finite(p, n + 1));
            prop_assert!(later >= now - 1e-15);
            prop_assert!(now <= bounds.q + 1e-12);
            prop_assert!(ruin_exact_finite_from(p, n, 1) <= bounds.q_conditional + 1e-12);
        }
    }
}
