use super::params::{Axis, TireParams};

/// Simplified magic formula, `mu * Fz * D * sin(C * atan(B s - E (B s - atan(B s))))`.
pub fn magic_formula(slip: f64, mu: f64, fz: f64, tire: &TireParams, axis: Axis) -> f64 {
    if !(fz > 0.0) || !(mu > 0.0) || slip == 0.0 {
        return 0.0;
    }
    let (b, c, d, e) = tire.shape(axis);
    // evaluate on |slip| so oddness holds bit for bit
    let bs = b * slip.abs();
    let f = mu * fz * d * (c * (bs - e * (bs - bs.atan())).atan()).sin();
    f.copysign(slip)
}

/// Peak force magnitude along one axis.
pub fn peak_force(mu: f64, fz: f64, tire: &TireParams, axis: Axis) -> f64 {
    let (_, _, d, _) = tire.shape(axis);
    mu.max(0.0) * fz.max(0.0) * d
}

/// Slip value at which the pure-slip curve peaks, found by scanning at
/// `resolution` up to slip 1 and polishing with golden-section search.
pub fn peak_slip(tire: &TireParams, axis: Axis, resolution: f64) -> f64 {
    let f = |s: f64| magic_formula(s, 1.0, 1.0, tire, axis);
    let steps = (1.0 / resolution).ceil() as usize;
    let mut best = (resolution, f(resolution));
    for i in 1..=steps {
        let s = i as f64 * resolution;
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - resolution).max(0.0), best.0 + resolution);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    0.5 * (lo + hi)
}

/// Combined-slip forces `(Fx, Fy)` in the wheel frame. Pure-slip forces are
/// coupled through the friction ellipse: each is scaled by
/// `sqrt(1 - (other / other_max)^2)`, using the pure value of the other.
/// The lateral force opposes the lateral velocity, so it takes the sign of
/// `-alpha`.
pub fn combined_forces(sigma: f64, alpha: f64, mu: f64, fz: f64, tire: &TireParams) -> (f64, f64) {
    let fx0 = magic_formula(sigma, mu, fz, tire, Axis::Longitudinal);
    let fy0 = -magic_formula(alpha, mu, fz, tire, Axis::Lateral);
    let fx_max = peak_force(mu, fz, tire, Axis::Longitudinal);
    let fy_max = peak_force(mu, fz, tire, Axis::Lateral);
    if fx_max <= 0.0 || fy_max <= 0.0 {
        return (0.0, 0.0);
    }
    let kx = (1.0 - (fy0 / fy_max).powi(2)).max(0.0).sqrt();
    let ky = (1.0 - (fx0 / fx_max).powi(2)).max(0.0).sqrt();
    (fx0 * kx, fy0 * ky)
}
