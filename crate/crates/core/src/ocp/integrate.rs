//! Fixed-step RK4 integration and finite-difference linearization of the
//! discrete step map.

use nalgebra::DMatrix;

use crate::error::OcpError;

/// Scratch buffers for repeated RK4 steps without allocation.
#[derive(Debug, Clone)]
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(nx: usize) -> Self {
        Self {
            k1: vec![0.0; nx],
            k2: vec![0.0; nx],
            k3: vec![0.0; nx],
            k4: vec![0.0; nx],
            tmp: vec![0.0; nx],
        }
    }
}

/// One classical RK4 step of `f` over `h`, in place on `x`. Returns `false`
/// if any stage derivative or the result is non-finite.
pub fn rk4_in_place<F>(f: &F, x: &mut [f64], u: &[f64], p: &[f64], h: f64, s: &mut Rk4Scratch) -> bool
where
    F: Fn(&[f64], &[f64], &[f64], &mut [f64]) + ?Sized,
{
    let n = x.len();
    f(x, u, p, &mut s.k1);
    for i in 0..n {
        s.tmp[i] = x[i] + 0.5 * h * s.k1[i];
    }
    f(&s.tmp, u, p, &mut s.k2);
    for i in 0..n {
        s.tmp[i] = x[i] + 0.5 * h * s.k2[i];
    }
    f(&s.tmp, u, p, &mut s.k3);
    for i in 0..n {
        s.tmp[i] = x[i] + h * s.k3[i];
    }
    f(&s.tmp, u, p, &mut s.k4);
    let mut ok = true;
    for i in 0..n {
        x[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
        ok &= x[i].is_finite();
    }
    ok
}

/// Classical fourth-order Runge-Kutta step of `x_dot = f(x, u, p)` over `ts`.
pub fn integrate_rk4<F>(f: F, x: &[f64], u: &[f64], p: &[f64], ts: f64) -> Result<Vec<f64>, OcpError>
where
    F: Fn(&[f64], &[f64], &[f64], &mut [f64]),
{
    if !(ts > 0.0) {
        return Err(OcpError::Invalid(format!("step must be > 0, got {ts}")));
    }
    let mut out = x.to_vec();
    let mut scratch = Rk4Scratch::new(x.len());
    if rk4_in_place(&f, &mut out, u, p, ts, &mut scratch) {
        Ok(out)
    } else {
        Err(OcpError::Integration { stage: 0 })
    }
}

/// Central-difference perturbation for coordinate value `v`.
#[inline]
pub fn fd_step(v: f64) -> f64 {
    (1e-6 * v.abs()).max(1e-6)
}

/// Central finite-difference Jacobians `(A, B)` of a discrete map
/// `x_next = map(x, u)`. The map writes into its output slice and returns
/// `false` on a non-finite result.
pub fn linearize_map<F>(map: F, x: &[f64], u: &[f64], nout: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)>
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> bool,
{
    linearize_map_partial(map, x, u, nout, u.len())
}

/// Like [`linearize_map`], but only the first `nu_active` controls are
/// perturbed; the remaining columns of `B` are left at zero.
pub fn linearize_map_partial<F>(map: F, x: &[f64], u: &[f64], nout: usize, nu_active: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)>
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> bool,
{
    let mut map = map;
    let (nx, nu) = (x.len(), u.len());
    let mut a = DMatrix::zeros(nout, nx);
    let mut b = DMatrix::zeros(nout, nu);
    let mut plus = vec![0.0; nout];
    let mut minus = vec![0.0; nout];
    let mut xp = x.to_vec();
    for j in 0..nx {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        let ok1 = map(&xp, u, &mut plus);
        xp[j] = x[j] - h;
        let ok2 = map(&xp, u, &mut minus);
        xp[j] = x[j];
        if !(ok1 && ok2) {
            return None;
        }
        for i in 0..nout {
            a[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let mut up = u.to_vec();
    for j in 0..nu_active.min(nu) {
        let h = fd_step(u[j]);
        up[j] = u[j] + h;
        let ok1 = map(x, &up, &mut plus);
        up[j] = u[j] - h;
        let ok2 = map(x, &up, &mut minus);
        up[j] = u[j];
        if !(ok1 && ok2) {
            return None;
        }
        for i in 0..nout {
            b[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Some((a, b))
}

/// Forward-difference Jacobians of `map` around `(x, u)`, given the
/// unperturbed output `nominal`. Only the first `nu_active` controls are
/// perturbed.
pub fn linearize_map_forward<F>(map: F, x: &[f64], u: &[f64], nominal: &[f64], nu_active: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)>
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> bool,
{
    let mut map = map;
    let (nx, nu, nout) = (x.len(), u.len(), nominal.len());
    let mut a = DMatrix::zeros(nout, nx);
    let mut b = DMatrix::zeros(nout, nu);
    let mut plus = vec![0.0; nout];
    let mut xp = x.to_vec();
    for j in 0..nx {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        let ok = map(&xp, u, &mut plus);
        xp[j] = x[j];
        if !ok {
            return None;
        }
        for i in 0..nout {
            a[(i, j)] = (plus[i] - nominal[i]) / h;
        }
    }
    let mut up = u.to_vec();
    for j in 0..nu_active.min(nu) {
        let h = fd_step(u[j]);
        up[j] = u[j] + h;
        let ok = map(x, &up, &mut plus);
        up[j] = u[j];
        if !ok {
            return None;
        }
        for i in 0..nout {
            b[(i, j)] = (plus[i] - nominal[i]) / h;
        }
    }
    Some((a, b))
}

/// Jacobians of the RK4-discretized step map of `f` over `ts`.
pub fn linearize<F>(f: F, x: &[f64], u: &[f64], p: &[f64], ts: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), OcpError>
where
    F: Fn(&[f64], &[f64], &[f64], &mut [f64]),
{
    let mut scratch = Rk4Scratch::new(x.len());
    let map = |xx: &[f64], uu: &[f64], out: &mut [f64]| {
        out.copy_from_slice(xx);
        rk4_in_place(&f, out, uu, p, ts, &mut scratch)
    };
    linearize_map(map, x, u, x.len()).ok_or(OcpError::Linearization { stage: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_dynamics_leave_state_unchanged() {
        let x = integrate_rk4(|_, _, _, d: &mut [f64]| d.fill(0.0), &[1.5, -2.0], &[0.3], &[], 0.1).unwrap();
        assert_eq!(x, vec![1.5, -2.0]);
    }

    #[test]
    fn constant_rate_is_exact() {
        let x = integrate_rk4(|_, u: &[f64], _, d: &mut [f64]| d[0] = u[0], &[0.0], &[2.0], &[], 0.1).unwrap();
        assert_abs_diff_eq!(x[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let x = integrate_rk4(|x: &[f64], _, _, d: &mut [f64]| d[0] = x[0], &[1.0], &[], &[], 0.1).unwrap();
        assert!((x[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn non_finite_dynamics_is_an_error() {
        let r = integrate_rk4(|_, _, _, d: &mut [f64]| d[0] = f64::NAN, &[1.0], &[], &[], 0.1);
        assert_eq!(r, Err(OcpError::Integration { stage: 0 }));
    }

    #[test]
    fn linearize_zero_dynamics_gives_identity() {
        let (a, b) = linearize(|_, _, _, d: &mut [f64]| d.fill(0.0), &[1.0, 2.0], &[0.5], &[], 0.05).unwrap();
        assert!((a - DMatrix::<f64>::identity(2, 2)).amax() < 1e-9);
        assert_eq!(b, DMatrix::zeros(2, 1));
    }

    #[test]
    fn linearize_recovers_linear_map() {
        // hand-coded affine map x+ = M x + N u + c
        let m = [[0.9, 0.2, -0.1], [0.0, 1.1, 0.3], [0.5, -0.4, 0.7]];
        let n = [[1.0, 0.0], [0.5, -2.0], [0.0, 3.0]];
        let map = |x: &[f64], u: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = 0.25 + (0..3).map(|j| m[i][j] * x[j]).sum::<f64>() + (0..2).map(|j| n[i][j] * u[j]).sum::<f64>();
            }
            true
        };
        let (a, b) = linearize_map(map, &[1.0, -3.0, 250.0], &[0.1, 40.0], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(a[(i, j)], m[i][j], epsilon = 1e-8);
            }
            for j in 0..2 {
                assert_abs_diff_eq!(b[(i, j)], n[i][j], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn central_differences_beat_one_sided_on_cubic() {
        // f(x) = x^3 at x = 1.3; exact derivative 3 x^2
        let x0 = 1.3f64;
        let exact = 3.0 * x0 * x0;
        let map = |x: &[f64], _: &[f64], out: &mut [f64]| {
            out[0] = x[0].powi(3);
            true
        };
        let (a, _) = linearize_map(map, &[x0], &[], 1).unwrap();
        let central_err = (a[(0, 0)] - exact).abs();
        let h = fd_step(x0);
        let forward = ((x0 + h).powi(3) - x0.powi(3)) / h;
        let forward_err = (forward - exact).abs();
        assert!(central_err < forward_err / 100.0, "central {central_err} forward {forward_err}");
        // O(h^2) truncation: error bounded by h^2 * |f'''| plus rounding
        assert!(central_err < 6.0 * h * h + 1e-8);
    }

    #[test]
    fn rk4_global_error_is_fourth_order() {
        let run = |ts: f64| {
            let steps = (1.0 / ts).round() as usize;
            let mut x = vec![1.0];
            let mut s = Rk4Scratch::new(1);
            let f = |x: &[f64], _: &[f64], _: &[f64], d: &mut [f64]| d[0] = x[0];
            for _ in 0..steps {
                rk4_in_place(&f, &mut x, &[], &[], ts, &mut s);
            }
            (x[0] - 1f64.exp()).abs()
        };
        for ts in [0.1, 0.05, 0.025] {
            let ratio = run(ts) / run(ts / 2.0);
            assert!(ratio >= 15.0, "ratio {ratio} at ts {ts}");
        }
    }
}
