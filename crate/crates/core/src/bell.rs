//! Smooth bell function on the frequency side of the mother wavelet.
//!
//! The bell rises from 0 to 1 on [2π/3, 4π/3] and falls back to 0 on
//! [4π/3, 8π/3] through a C-infinity cut function, so that every derivative
//! order of the wavelet stays legitimate and the dyadic partition identity
//! Σ_j b(2^j ξ)² = 1 holds for all ξ > 0.

use std::f64::consts::PI;

/// Transition profile of the cut function ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionKind {
    /// ν(x) = f(x) / (f(x) + f(1−x)) with f(x) = exp(−1/x) for x > 0.
    #[default]
    SmoothExponential,
}

/// C-infinity bell supported on [2π/3, 8π/3] with values in [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct BellFunction {
    kind: TransitionKind,
}

/// Lower edge of the support, 2π/3.
pub const SUPPORT_LO: f64 = 2.0 * PI / 3.0;
/// Junction of the rising and falling pieces, 4π/3.
pub const SUPPORT_MID: f64 = 4.0 * PI / 3.0;
/// Upper edge of the support, 8π/3.
pub const SUPPORT_HI: f64 = 8.0 * PI / 3.0;

fn cut_seed(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

impl BellFunction {
    pub fn support(&self) -> (f64, f64) {
        (SUPPORT_LO, SUPPORT_HI)
    }

    /// The smooth cut function ν: [0,1] → [0,1] with ν(x) + ν(1−x) = 1.
    pub fn transition(&self, x: f64) -> f64 {
        match self.kind {
            TransitionKind::SmoothExponential => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    let a = cut_seed(x);
                    let b = cut_seed(1.0 - x);
                    a / (a + b)
                }
            }
        }
    }

    /// Bell value at angular frequency ξ; zero outside [2π/3, 8π/3].
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= SUPPORT_LO || xi >= SUPPORT_HI {
            0.0
        } else if xi <= SUPPORT_MID {
            let x = 3.0 * xi / (2.0 * PI) - 1.0;
            (0.5 * PI * self.transition(x)).sin()
        } else {
            let x = 3.0 * xi / (4.0 * PI) - 1.0;
            (0.5 * PI * self.transition(x)).cos()
        }
    }

    /// Σ over the dyadic scales hitting ξ of b(2^j ξ)².
    ///
    /// Only scales with 2^j ξ inside the support contribute, so the sum is
    /// finite; exact arithmetic of the transition, no quadrature involved.
    pub fn partition_sum(&self, xi: f64) -> f64 {
        assert!(xi > 0.0, "partition identity is stated for positive ξ");
        // 2^j ξ ∈ (2π/3, 8π/3)  ⇔  j ∈ (log2(2π/3ξ), log2(8π/3ξ))
        let j_lo = (SUPPORT_LO / xi).log2().floor() as i32;
        let j_hi = (SUPPORT_HI / xi).log2().ceil() as i32;
        let mut sum = 0.0;
        for j in j_lo..=j_hi {
            let v = self.eval(xi * (j as f64).exp2());
            sum += v * v;
        }
        sum
    }
}

/// Build the bell with the requested transition profile.
pub fn make_bell(kind: TransitionKind) -> BellFunction {
    BellFunction { kind }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_boundary_is_zero() {
        let b = make_bell(TransitionKind::SmoothExponential);
        assert_eq!(b.eval(SUPPORT_LO), 0.0);
        assert_eq!(b.eval(SUPPORT_HI), 0.0);
        assert_eq!(b.eval(0.1), 0.0);
        assert_eq!(b.eval(10.0), 0.0);
        assert_eq!(b.eval(-3.0), 0.0);
    }

    #[test]
    fn transition_midpoint_and_bell_at_pi() {
        let b = make_bell(TransitionKind::SmoothExponential);
        assert!((b.transition(0.5) - 0.5).abs() < 1e-15);
        // ν(1/2) = 1/2 forces b(π) = sin(π/4) = √2/2
        assert!((b.eval(PI) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn transition_symmetry_pointwise() {
        let b = make_bell(TransitionKind::SmoothExponential);
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let s = b.transition(x) + b.transition(1.0 - x);
            assert!((s - 1.0).abs() < 1e-14, "ν(x)+ν(1−x) off at x={x}: {s}");
        }
    }

    #[test]
    fn complementary_pieces_at_matched_argument() {
        // b(π)² + b(2π)² = 1: the rising piece at π and the falling piece at
        // 2π see the same ν argument, so sin² + cos² closes to one.
        let b = make_bell(TransitionKind::SmoothExponential);
        let v = b.eval(PI).powi(2) + b.eval(2.0 * PI).powi(2);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_range_is_unit_interval() {
        let b = make_bell(TransitionKind::SmoothExponential);
        for k in 0..=4000 {
            let xi = 9.0 * k as f64 / 4000.0;
            let v = b.eval(xi);
            assert!((0.0..=1.0).contains(&v), "b({xi}) = {v} out of range");
        }
    }

    #[test]
    fn partition_identity_random_frequencies() {
        let b = make_bell(TransitionKind::SmoothExponential);
        // Deterministic pseudo-random sample of ξ in (0, 8π/3 · 2³).
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
            let xi = (unit + 1e-6) * SUPPORT_HI * 8.0;
            let s = b.partition_sum(xi);
            assert!((s - 1.0).abs() <= 1e-10, "partition off at ξ={xi}: {s}");
        }
    }
}
