//! Internal energies `F(ν) = Σ f(ν_i) ν_i` penalizing concentration.

use std::fmt::Debug;

/// Strictly convex, superlinear `f` with `f'(0+) = −∞`.
pub trait InternalEnergy: Debug + Send + Sync {
    fn f(&self, s: f64) -> f64;
    fn f_prime(&self, s: f64) -> f64;
    fn f_prime_inv(&self, t: f64) -> f64;

    /// `Σ_i f(ν_i) ν_i`, with `0·f(0) = 0`.
    fn total(&self, nu: &[f64]) -> f64 {
        nu.iter().filter(|&&s| s > 0.0).map(|&s| self.f(s) * s).sum()
    }

    /// The `C` with `Σ_i (f')⁻¹(C − v_i) = 1`.
    fn normalizing_constant(&self, v: &[f64]) -> f64 {
        let total = |c: f64| v.iter().map(|&vi| self.f_prime_inv(c - vi)).sum::<f64>() - 1.0;
        let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // (f')⁻¹ is increasing; at C = vmin + f'(1) one term alone reaches 1.
        let hi = vmin + self.f_prime(1.0);
        let mut lo = vmax + self.f_prime(1.0 / v.len() as f64);
        while total(lo) > 0.0 {
            lo -= 1.0 + lo.abs();
        }
        let (mut lo, mut hi) = (lo.min(hi), hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `f(s) = ln s`, i.e. `F(ν) = Σ ν_i ln ν_i`; `f'` is taken as `ln s`, the
/// additive constant of the exact derivative being absorbed into `C`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Entropy;

impl InternalEnergy for Entropy {
    fn f(&self, s: f64) -> f64 {
        s.ln()
    }

    fn f_prime(&self, s: f64) -> f64 {
        s.ln()
    }

    fn f_prime_inv(&self, t: f64) -> f64 {
        t.exp()
    }

    /// `ln(1 / Σ e^{−v_i})`, evaluated without overflow.
    fn normalizing_constant(&self, v: &[f64]) -> f64 {
        let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let s: f64 = v.iter().map(|&x| (m - x).exp()).sum();
        m - s.ln()
    }
}

/// Softmin weights `e^{−v_i} / Σ_k e^{−v_k}`.
pub fn softmin(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = v.iter().map(|&x| (m - x).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Generic;

    impl InternalEnergy for Generic {
        fn f(&self, s: f64) -> f64 {
            Entropy.f(s)
        }
        fn f_prime(&self, s: f64) -> f64 {
            Entropy.f_prime(s)
        }
        fn f_prime_inv(&self, t: f64) -> f64 {
            Entropy.f_prime_inv(t)
        }
    }

    #[test]
    fn entropy_constant_matches_generic_search() {
        for v in [vec![0.0], vec![0.0, 1.0, -2.0], vec![500.0, 501.0, 499.5]] {
            let a = Entropy.normalizing_constant(&v);
            let b = Generic.normalizing_constant(&v);
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} {b}");
            let total: f64 = v.iter().map(|vi| (a - vi).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmin_is_stable_and_normalized() {
        let p = softmin(&[1000.0, 1001.0]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        assert!(p[0] > p[1]);
        assert_eq!(Entropy.total(&[1.0, 0.0]), 0.0);
    }
}
