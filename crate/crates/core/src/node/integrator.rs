//! Classical fixed-step fourth-order Runge–Kutta for small autonomous systems.

/// Splits `duration` into RK4 substeps of length `dt`.
///
/// Returns the number of full steps and the length of the trailing partial
/// step (zero when `dt` divides `duration` within rounding).
pub fn substeps(duration: f64, dt: f64) -> (usize, f64) {
    assert!(dt > 0.0, "dt must be positive");
    if duration <= 0.0 {
        return (0, 0.0);
    }
    let full = (duration / dt + 1e-9).floor() as usize;
    let rem = duration - full as f64 * dt;
    if rem > 1e-9 * dt {
        (full, rem)
    } else {
        (full, 0.0)
    }
}

/// One RK4 step of size `h`.
#[inline]
pub fn rk4_step<const N: usize, F>(rhs: &mut F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, 0.5 * h, &k1));
    let k3 = rhs(&axpy(y, 0.5 * h, &k2));
    let k4 = rhs(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Integrates `dy/dt = rhs(y)` over `duration` with step `dt`.
///
/// The last substep is shortened so the integration lands exactly on
/// `duration`. `after_step` sees the elapsed time within this call and may
/// modify the state in place (clamping); it runs after every substep.
pub fn rk4_integrate_with<const N: usize, F, G>(
    mut rhs: F,
    state: [f64; N],
    duration: f64,
    dt: f64,
    mut after_step: G,
) -> [f64; N]
where
    F: FnMut(&[f64; N]) -> [f64; N],
    G: FnMut(f64, &mut [f64; N]),
{
    let (full, rem) = substeps(duration, dt);
    let mut y = state;
    for k in 0..full {
        y = rk4_step(&mut rhs, &y, dt);
        let t = if rem == 0.0 && k + 1 == full {
            duration
        } else {
            (k + 1) as f64 * dt
        };
        after_step(t, &mut y);
    }
    if rem > 0.0 {
        y = rk4_step(&mut rhs, &y, rem);
        after_step(duration, &mut y);
    }
    y
}

/// Integrates `dy/dt = rhs(y)` over `duration` with step `dt`.
pub fn rk4_integrate<const N: usize, F>(rhs: F, state: [f64; N], duration: f64, dt: f64) -> [f64; N]
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    rk4_integrate_with(rhs, state, duration, dt, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let y = rk4_integrate(|_| [0.0, 0.0], [1.5, -2.0], 7.3, 0.1);
        assert_eq!(y, [1.5, -2.0]);
    }

    #[test]
    fn constant_field_is_integrated_exactly() {
        let y = rk4_integrate(|_| [0.25], [1.0], 10.0, 0.05);
        assert!((y[0] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn partial_last_step_lands_on_duration() {
        let (full, rem) = substeps(1.0, 0.3);
        assert_eq!(full, 3);
        assert!((rem - 0.1).abs() < 1e-12);
        assert_eq!(substeps(10.0, 0.05), (200, 0.0));
        assert_eq!(substeps(0.0, 0.05), (0, 0.0));

        let mut last_t = 0.0;
        let y = rk4_integrate_with(|_| [1.0], [0.0], 1.0, 0.3, |t, _| last_t = t);
        assert_eq!(last_t, 1.0);
        assert!((y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_is_fourth_order() {
        let exact = (-1.0f64).exp();
        let err = |dt: f64| (rk4_integrate(|y| [-y[0]], [1.0], 1.0, dt)[0] - exact).abs();
        let order = (err(0.1) / err(0.05)).log2();
        assert!(order > 3.8, "order {order}");
    }
}
