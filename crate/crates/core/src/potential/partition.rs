//! Smooth partition of unity subordinate to the enlarged cells.
//!
//! `φ₀₀(s) = w(s1) w(s2)` in lattice coordinates, where `w` is supported on
//! `[−1/4, 5/4]`, equals one on `[1/4, 3/4]`, and ramps with a C³ septic
//! smoothstep. Integer translates of `w` sum to one.

/// Lower edge of the enlarged cell in lattice coordinates.
pub const SUPPORT_LO: f64 = -0.25;
/// Upper edge of the enlarged cell in lattice coordinates.
pub const SUPPORT_HI: f64 = 1.25;

/// `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
    }
}

/// One-dimensional profile `w`.
pub fn profile(t: f64) -> f64 {
    if t < 0.5 {
        smoothstep(2.0 * (t - SUPPORT_LO))
    } else {
        smoothstep(2.0 * (SUPPORT_HI - t))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PartitionCell;

impl PartitionCell {
    pub fn phi00(&self, s1: f64, s2: f64) -> f64 {
        profile(s1) * profile(s2)
    }

    /// `φ_lj(s) = φ₀₀(s − (l, j))`.
    pub fn phi(&self, l: i64, j: i64, s1: f64, s2: f64) -> f64 {
        self.phi00(s1 - l as f64, s2 - j as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plateau_and_support() {
        let p = PartitionCell;
        assert_eq!(p.phi00(0.5, 0.5), 1.0);
        assert_eq!(p.phi00(0.25, 0.75), 1.0);
        assert_eq!(p.phi00(-0.25, 0.5), 0.0);
        assert_eq!(p.phi00(1.3, 0.5), 0.0);
    }

    proptest! {
        #[test]
        fn translates_sum_to_one(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            let p = PartitionCell;
            let mut total = 0.0;
            for l in -1..=1 {
                for j in -1..=1 {
                    let v = p.phi(l, j, s1, s2);
                    prop_assert!((0.0..=1.0).contains(&v));
                    total += v;
                }
            }
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn translation_is_exact(s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, l in -3i64..3, j in -3i64..3) {
            let p = PartitionCell;
            prop_assert!((p.phi(l, j, s1 + l as f64, s2 + j as f64) - p.phi00(s1, s2)).abs() < 1e-12);
        }
    }
}
