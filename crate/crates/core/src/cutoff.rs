//! Smooth (C-infinity) radial cutoffs.

fn g(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = g(x);
        a / (a + g(1.0 - x))
    }
}

/// Radial window equal to 1 on `[0, r0]` and 0 on `[r1, inf)`.
pub fn radial_window(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        1.0
    } else if r >= r1 {
        0.0
    } else {
        1.0 - smooth_step((r - r0) / (r1 - r0))
    }
}
