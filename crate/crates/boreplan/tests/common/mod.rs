//! Shared test oracles, independent of the library's solver internals.

use nalgebra::Vector3;

/// Planar Dubins CSC reference: shortest arc-straight-arc length between
/// two planar poses `(x, y, heading)` at turning radius `r`, minimized over
/// the four CSC words. Implemented geometrically (tangent lines between
/// turning circles) and self-validated: every candidate is reconstructed by
/// simulation and kept only if it reproduces the target pose, so a formula
/// slip cannot silently corrupt the oracle.
pub fn planar_csc_reference(q0: (f64, f64, f64), q1: (f64, f64, f64), r: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for s0 in [-1.0, 1.0] {
        for s1 in [-1.0, 1.0] {
            for variant in 0..2 {
                if let Some(len) = csc_word(q0, q1, r, s0, s1, variant) {
                    best = Some(match best {
                        None => len,
                        Some(b) => b.min(len),
                    });
                }
            }
        }
    }
    best
}

/// One turn-side combination; `side = +1` turns left (counterclockwise).
/// `variant` picks between the two tangent-direction sign choices; invalid
/// choices fail the reconstruction check and are dropped.
fn csc_word(
    q0: (f64, f64, f64),
    q1: (f64, f64, f64),
    r: f64,
    s0: f64,
    s1: f64,
    variant: usize,
) -> Option<f64> {
    let (x0, y0, th0) = q0;
    let (x1, y1, th1) = q1;
    // Turning-circle centers: the left center sits 90 degrees left of the
    // heading, the right center opposite.
    let c0 = (x0 - s0 * r * th0.sin(), y0 + s0 * r * th0.cos());
    let c1 = (x1 - s1 * r * th1.sin(), y1 + s1 * r * th1.cos());
    let dx = c1.0 - c0.0;
    let dy = c1.1 - c0.1;
    let d = (dx * dx + dy * dy).sqrt();
    if d < 1e-12 {
        return None;
    }
    let base = dy.atan2(dx);

    // Tangent-line direction: outer tangents (equal turn signs) run
    // parallel to the center line; inner tangents exist for d >= 2r and
    // are rotated by +-asin(2r/d).
    let phi = if s0 == s1 {
        base
    } else {
        if d < 2.0 * r {
            return None;
        }
        let gamma = (2.0 * r / d).asin();
        match variant {
            0 => base + s0 * gamma,
            _ => base - s0 * gamma,
        }
    };
    if s0 == s1 && variant == 1 {
        return None; // outer tangent has a single direction
    }

    // Arc angles in each circle's turn direction.
    let turn = |from: f64, to: f64, side: f64| -> f64 {
        let mut a = (to - from) * side;
        a %= 2.0 * std::f64::consts::PI;
        if a < 0.0 {
            a += 2.0 * std::f64::consts::PI;
        }
        a
    };
    let t = turn(th0, phi, s0);
    let q = turn(phi, th1, s1);
    let p = if s0 == s1 {
        d
    } else {
        (d * d - 4.0 * r * r).sqrt()
    };

    // Reconstruct and verify.
    let (mut x, mut y, mut th) = (x0, y0, th0);
    let step = |x: &mut f64, y: &mut f64, th: &mut f64, arc: f64, side: f64| {
        // Rotate about the current circle center by `arc`.
        let cx = *x - side * r * th.sin();
        let cy = *y + side * r * th.cos();
        let ang = side * arc;
        let (sa, ca) = ang.sin_cos();
        let rx = *x - cx;
        let ry = *y - cy;
        *x = cx + rx * ca - ry * sa;
        *y = cy + rx * sa + ry * ca;
        *th += side * arc;
    };
    step(&mut x, &mut y, &mut th, t, s0);
    x += p * th.cos();
    y += p * th.sin();
    step(&mut x, &mut y, &mut th, q, s1);
    let pos_err = ((x - x1).powi(2) + (y - y1).powi(2)).sqrt();
    let mut ang_err = (th - th1) % (2.0 * std::f64::consts::PI);
    if ang_err > std::f64::consts::PI {
        ang_err -= 2.0 * std::f64::consts::PI;
    }
    if ang_err < -std::f64::consts::PI {
        ang_err += 2.0 * std::f64::consts::PI;
    }
    if pos_err > 1e-6 * r.max(1.0) || ang_err.abs() > 1e-9 {
        return None;
    }
    Some(r * t + p + r * q)
}

/// Brute-force nearest obstacle point: (distance, structure idx, point idx).
pub fn linear_scan_nearest(
    points: &[(Vector3<f64>, usize)],
    q: &Vector3<f64>,
) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
    for (gi, (p, si)) in points.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if d2 < best.0 {
            best = (d2, *si, gi);
        }
    }
    (best.0.sqrt(), best.1, best.2)
}
