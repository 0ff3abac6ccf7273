//! Unit conventions.
//!
//! Internally every frequency is angular (rad/us), distances are in um, times
//! in us and temperatures in K. Files and the command line speak plain MHz;
//! conversion happens once at the boundary.

pub use std::f64::consts::TAU as TWO_PI;

/// Plain MHz to rad/us.
#[inline]
pub fn mhz(f: f64) -> f64 {
    f * TWO_PI
}

/// rad/us to plain MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / TWO_PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_mhz() {
        assert_eq!(mhz(1.0), TWO_PI);
    }

    proptest! {
        #[test]
        fn round_trip(f in -1e6f64..1e6) {
            let back = to_mhz(mhz(f));
            prop_assert!((back - f).abs() <= 1e-12 * f.abs().max(1e-300));
        }
    }
}
