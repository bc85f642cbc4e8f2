//! Fixed-step classical fourth-order Runge-Kutta integration.
//!
//! All propagations in this crate run on the same deterministic fixed-step
//! scheme so that accuracy scales predictably with the step size; the
//! default step is 1e-3 in normalized time units.

/// Right-hand side of an autonomous or time-dependent ODE system on a flat
/// state vector.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Reusable scratch buffers for [`rk4_step`].
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

/// One classical RK4 step of size `h`, advancing `y` in place.
pub fn rk4_step<S: OdeSystem>(sys: &S, t: f64, h: f64, y: &mut [f64], s: &mut Rk4Scratch) {
    let n = y.len();
    sys.rhs(t, y, &mut s.k1);
    for i in 0..n {
        s.tmp[i] = y[i] + 0.5 * h * s.k1[i];
    }
    sys.rhs(t + 0.5 * h, &s.tmp, &mut s.k2);
    for i in 0..n {
        s.tmp[i] = y[i] + 0.5 * h * s.k2[i];
    }
    sys.rhs(t + 0.5 * h, &s.tmp, &mut s.k3);
    for i in 0..n {
        s.tmp[i] = y[i] + h * s.k3[i];
    }
    sys.rhs(t + h, &s.tmp, &mut s.k4);
    for i in 0..n {
        y[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

/// Integrates from `t0` to `t1` with steps of size at most `h`, calling
/// `observe(t, y)` at `t0` and after every step (including the final,
/// possibly shortened one).
pub fn integrate<S: OdeSystem>(
    sys: &S,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    h: f64,
    mut observe: impl FnMut(f64, &[f64]),
) {
    assert!(h > 0.0, "step must be positive");
    let mut scratch = Rk4Scratch::new(y.len());
    observe(t0, y);
    if t1 <= t0 {
        return;
    }
    let span = t1 - t0;
    let n_full = (span / h).floor() as usize;
    let mut t = t0;
    for _ in 0..n_full {
        rk4_step(sys, t, h, y, &mut scratch);
        t += h;
        observe(t, y);
    }
    let rem = t1 - t;
    if rem > 1e-12 * span.max(1.0) {
        rk4_step(sys, t, rem, y, &mut scratch);
        observe(t1, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Circular;

    impl OdeSystem for Circular {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = -y[1];
            dydt[1] = y[0];
        }
    }

    #[test]
    fn rk4_fourth_order_on_rotation() {
        let run = |h: f64| {
            let mut y = [1.0, 0.0];
            integrate(&Circular, &mut y, 0.0, std::f64::consts::PI, h, |_, _| {});
            ((y[0] + 1.0).powi(2) + y[1].powi(2)).sqrt()
        };
        let e1 = run(1e-2);
        let e2 = run(5e-3);
        // halving the step should shrink the error about 16x
        let order = (e1 / e2).log2();
        assert!((3.7..4.3).contains(&order), "observed order {order}");
        assert!(run(1e-3) < 1e-11);
    }

    #[test]
    fn partial_final_step_lands_on_t1() {
        let mut y = [1.0, 0.0];
        let mut last = f64::NAN;
        integrate(&Circular, &mut y, 0.0, 1.0005, 1e-3, |t, _| last = t);
        assert_relative_eq!(last, 1.0005, epsilon = 1e-12);
        assert_relative_eq!(y[0], 1.0005f64.cos(), epsilon = 1e-10);
    }
}
