//! Closed-form first-order optimal solutions.
//!
//! Three families admit explicit expressions through the Jacobi amplitude:
//!
//! * the energy-optimal offset-robust pulse, a pendulum-type oscillation
//!   `Omega_0x(t) = 2 sqrt(m) cos(am(t + rho, m))` with `m = (1 + H)/2` and
//!   duration `t* = 2 K(m)`,
//! * the time-optimal offset-robust pulse, a constant-amplitude x-axis
//!   field switching sign at `T1 = pi + arctan(H / sqrt(1 - H^2))` and
//!   `T2 = 3 T1 - pi` within each period `T = 4 T1 - 2 pi`,
//! * the amplitude-robust unit-norm pulse, a phase modulation driven by
//!   `nu(t) = am(w t + K(m), m)` with `w = (I_x^2 + I_y^2)^(1/4)` and
//!   `m = 1/2 - I_x / (2 w^2)`, lasting `t_f = 4 K(m) / w`.
//!
//! These serve both as synthesis routes in their own right and as
//! independent oracles for the numerically integrated flows.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::elliptic::{ellip_f, ellip_k, jacobi_am};
use crate::error::{Error, Result};
use crate::field::ControlField;

/// Adaptive Simpson quadrature; plenty for the smooth integrands here.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Sign choice of the integration constant rho; the two branches are
/// mirror-image optima. `Negative` drives theta to +pi (and starts with
/// Omega_1y(0) = +1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoBranch {
    Positive,
    Negative,
}

impl RhoBranch {
    fn sign(self) -> f64 {
        match self {
            RhoBranch::Positive => 1.0,
            RhoBranch::Negative => -1.0,
        }
    }
}

/// Order-1 energy-optimal offset-robust solution at level H.
#[derive(Clone, Debug)]
pub struct EnergyO1Solution {
    pub h: f64,
    pub m: f64,
    pub rho: f64,
    /// Inversion time 2 K(m).
    pub tstar: f64,
}

impl EnergyO1Solution {
    /// `h` must lie in the oscillating family (0, 1), which contains the
    /// robust optima.
    pub fn new(h: f64, branch: RhoBranch) -> Result<Self> {
        if !(0.0 < h && h < 1.0) {
            return Err(Error::domain(format!(
                "energy level H = {h} outside the oscillating branch (0, 1)"
            )));
        }
        let m = 0.5 * (1.0 + h);
        let rho = branch.sign() * ellip_f((1.0 / (2.0 * m).sqrt()).asin(), m)?;
        let tstar = 2.0 * ellip_k(m)?;
        Ok(EnergyO1Solution { h, m, rho, tstar })
    }

    pub fn nu(&self, t: f64) -> f64 {
        jacobi_am(t + self.rho, self.m).expect("m validated at construction")
    }

    /// Control field u_x(t) = Omega_0x(t).
    pub fn omega_0x(&self, t: f64) -> f64 {
        2.0 * self.m.sqrt() * self.nu(t).cos()
    }

    /// Adjoint components (Omega_1y, Omega_1z).
    pub fn omega_1(&self, t: f64) -> (f64, f64) {
        let nu = self.nu(t);
        let s = nu.sin();
        let y = -2.0 * self.m.sqrt() * s * (1.0 - self.m * s * s).sqrt();
        let z = 2.0 * self.m * s * s - 1.0;
        (y, z)
    }

    /// Polar angle of the on-resonance Bloch vector, fixed to theta(0) = 0
    /// by pairing the +-pi/2 shift against the sign of rho.
    pub fn theta(&self, t: f64) -> f64 {
        let s = self.m.sqrt() * self.nu(t).sin();
        2.0 * s.asin() - self.rho.signum() * FRAC_PI_2
    }

    /// First-order defect coordinate x_1(t) = int_0^t sin(theta) dt'.
    pub fn x1(&self, t: f64) -> f64 {
        adaptive_simpson(&|s| self.theta(s).sin(), 0.0, t, 1e-11)
    }

    /// Pulse area int_0^t* |Omega_0x| dt.
    pub fn area(&self) -> f64 {
        adaptive_simpson(&|s| self.omega_0x(s).abs(), 0.0, self.tstar, 1e-10)
    }

    /// Midpoint-sampled held field over [0, t*].
    pub fn field(&self, step: f64) -> Result<ControlField> {
        sample_general(|t| (self.omega_0x(t), 0.0), self.tstar, step)
    }
}

/// Energy-optimal order-1 field and its duration.
pub fn energy_o1_field(h: f64, branch: RhoBranch, step: f64) -> Result<(ControlField, f64)> {
    let sol = EnergyO1Solution::new(h, branch)?;
    Ok((sol.field(step)?, sol.tstar))
}

/// (theta, x_1) of the energy-optimal order-1 trajectory at time t.
pub fn energy_o1_state(h: f64, branch: RhoBranch, t: f64) -> Result<(f64, f64)> {
    let sol = EnergyO1Solution::new(h, branch)?;
    Ok((sol.theta(t), sol.x1(t)))
}

/// Roots of x_1(t*) = 0 over the oscillating family: the robust-inversion
/// levels. Returns (H, area) pairs sorted by H.
pub fn energy_o1_inversion_levels() -> Vec<(f64, f64)> {
    let eval = |h: f64| {
        let sol = EnergyO1Solution::new(h, RhoBranch::Negative).unwrap();
        sol.x1(sol.tstar)
    };
    let mut roots = Vec::new();
    let grid: Vec<f64> = (1..=120).map(|i| 0.004 + 0.992 * i as f64 / 121.0).collect();
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(a), eval(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            let mut flo = fa;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
        .into_iter()
        .map(|h| {
            let sol = EnergyO1Solution::new(h, RhoBranch::Negative).unwrap();
            (h, sol.area())
        })
        .collect()
}

/// The excitation landmark of the rho > 0 family: the level H whose
/// trajectory crosses theta = -pi/2 (at t_c = 2K - rho, where nu = pi) with
/// x_1 = 0, i.e. a robust transfer to the equator. Located by bisection on
/// the sign change of x_1(t_c) over H; returns (H, t_c).
pub fn locate_excitation_transfer() -> Option<(f64, f64)> {
    let eval = |h: f64| {
        let sol = EnergyO1Solution::new(h, RhoBranch::Positive).unwrap();
        sol.x1(sol.tstar - sol.rho)
    };
    let grid: Vec<f64> = (1..=60).map(|i| 0.01 + 0.97 * i as f64 / 61.0).collect();
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(a), eval(b));
        if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            let mut flo = fa;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            let h = 0.5 * (lo + hi);
            let sol = EnergyO1Solution::new(h, RhoBranch::Positive).unwrap();
            return Some((h, sol.tstar - sol.rho));
        }
    }
    None
}

/// Order-1 time-optimal bang-bang solution at level H in [0, 1).
#[derive(Clone, Debug)]
pub struct BangBangSolution {
    pub h: f64,
    /// First switch, T1 = pi + arctan(H / sqrt(1 - H^2)).
    pub t1: f64,
    /// Second switch, T2 = 3 T1 - pi.
    pub t2: f64,
    /// Period T = 4 T1 - 2 pi.
    pub period: f64,
}

impl BangBangSolution {
    pub fn new(h: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&h) {
            return Err(Error::domain(format!(
                "bang-bang level H = {h} outside [0, 1): the field never switches"
            )));
        }
        let t1 = PI + (h / (1.0 - h * h).sqrt()).atan();
        let t2 = 3.0 * t1 - PI;
        Ok(BangBangSolution {
            h,
            t1,
            t2,
            period: 4.0 * t1 - 2.0 * PI,
        })
    }

    /// (Omega_0x, Omega_1y, Omega_1z) on the first period.
    pub fn omega(&self, t: f64) -> (f64, f64, f64) {
        let h = self.h;
        if t <= self.t1 {
            (h + t.sin(), t.cos(), -t.sin())
        } else if t <= self.t2 {
            let a = t - 2.0 * self.t1;
            (a.sin() - h, a.cos(), a.sin())
        } else {
            let a = t + 2.0 * (self.t1 - self.t2);
            (h + a.sin(), a.cos(), -a.sin())
        }
    }

    /// Polar angle on the first period.
    pub fn theta(&self, t: f64) -> f64 {
        if t <= self.t1 {
            t
        } else if t <= self.t2 {
            -t + 2.0 * self.t1
        } else {
            t + 2.0 * (self.t1 - self.t2)
        }
    }

    /// First-order defect coordinate on the first period.
    pub fn x1(&self, t: f64) -> f64 {
        let root = (1.0 - self.h * self.h).sqrt();
        if t <= self.t1 {
            1.0 - t.cos()
        } else if t <= self.t2 {
            1.0 + 2.0 * root + (t - 2.0 * self.t1).cos()
        } else {
            1.0 + 4.0 * root - (t + 2.0 * (self.t1 - self.t2)).cos()
        }
    }

    /// Time at which theta returns to pi on the second branch; the robust
    /// inversion time in the H -> 1 limit.
    pub fn inversion_time(&self) -> f64 {
        2.0 * self.t1 - PI
    }

    /// Exact switch-list field over [0, duration] (periodic extension).
    pub fn field(&self, duration: f64) -> Result<ControlField> {
        let mut switches = Vec::new();
        let mut base = 0.0;
        loop {
            for s in [self.t1, self.t2] {
                let t = base + s;
                if t < duration {
                    switches.push(t);
                }
            }
            base += self.period;
            if base + self.t1 >= duration {
                break;
            }
        }
        ControlField::bang_bang(switches, duration)
    }
}

/// Time-optimal order-1 solution and the pulse truncated at the robust
/// inversion time.
pub fn bangbang_o1(h: f64) -> Result<(BangBangSolution, ControlField)> {
    let sol = BangBangSolution::new(h)?;
    let field = sol.field(sol.inversion_time())?;
    Ok((sol, field))
}

/// Order-1 amplitude-robust solution at constants (I_x, I_y).
#[derive(Clone, Debug)]
pub struct AlphaO1Solution {
    pub ix: f64,
    pub iy: f64,
    /// w = (I_x^2 + I_y^2)^(1/4).
    pub omega: f64,
    pub m: f64,
    /// Duration t_f = 4 K(m) / w.
    pub tf: f64,
    quarter: f64,
}

impl AlphaO1Solution {
    pub fn new(ix: f64, iy: f64) -> Result<Self> {
        let omega = (ix * ix + iy * iy).powf(0.25);
        if omega <= 0.0 {
            return Err(Error::domain("I_x = I_y = 0 gives a degenerate w = 0"));
        }
        let m = 0.5 - ix / (2.0 * omega * omega);
        if !(0.0..1.0).contains(&m) {
            return Err(Error::domain(format!(
                "derived elliptic parameter m = {m} outside [0, 1)"
            )));
        }
        let quarter = ellip_k(m)?;
        Ok(AlphaO1Solution {
            ix,
            iy,
            omega,
            m,
            tf: 4.0 * quarter / omega,
            quarter,
        })
    }

    pub fn nu(&self, t: f64) -> f64 {
        jacobi_am(self.omega * t + self.quarter, self.m).expect("m validated at construction")
    }

    /// sign(sin nu) as the parity of floor((w t + K) / 2K); avoids the
    /// floating-point sign noise right at the zeros of sin nu.
    fn sign_sin_nu(&self, t: f64) -> f64 {
        let j = ((self.omega * t + self.quarter) / (2.0 * self.quarter)).floor() as i64;
        if j.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Field phase, phi(0) = 0.
    pub fn phi(&self, t: f64) -> f64 {
        let s2 = self.nu(t).sin().powi(2);
        let inner = (1.0 - self.m * s2).max(0.0).sqrt().acos();
        let base = (1.0 - self.m).sqrt().acos();
        -2.0 * (self.sign_sin_nu(t) * inner - base)
    }

    /// Adjoint z component, -w sqrt(m) cos(nu); vanishes at multiples of
    /// 2K/w and in particular at t_f.
    pub fn omega_0z(&self, t: f64) -> f64 {
        -self.omega * self.m.sqrt() * self.nu(t).cos()
    }

    /// Midpoint-sampled phase-only field over [0, t_f].
    pub fn field(&self, step: f64) -> Result<ControlField> {
        sample_phase(|t| self.phi(t), self.tf, step)
    }
}

/// Amplitude-robust order-1 field and its duration.
pub fn alpha_o1_field(ix: f64, iy: f64, step: f64) -> Result<(ControlField, f64)> {
    let sol = AlphaO1Solution::new(ix, iy)?;
    Ok((sol.field(step)?, sol.tf))
}

fn grid(duration: f64, step: f64) -> (usize, f64) {
    let n = (duration / step).ceil().max(1.0) as usize;
    (n, duration / n as f64)
}

fn sample_general(
    f: impl Fn(f64) -> (f64, f64),
    duration: f64,
    step: f64,
) -> Result<ControlField> {
    let (n, h) = grid(duration, step);
    let mut times = Vec::with_capacity(n);
    let mut ux = Vec::with_capacity(n);
    let mut uy = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = f((i as f64 + 0.5) * h);
        times.push(i as f64 * h);
        ux.push(x);
        uy.push(y);
    }
    ControlField::from_samples(times, ux, uy, duration)
}

fn sample_phase(f: impl Fn(f64) -> f64, duration: f64, step: f64) -> Result<ControlField> {
    let (n, h) = grid(duration, step);
    let mut times = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        times.push(i as f64 * h);
        phi.push(f((i as f64 + 0.5) * h));
    }
    ControlField::phase_only(times, phi, duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn energy_o1_initial_conditions() {
        for branch in [RhoBranch::Positive, RhoBranch::Negative] {
            let sol = EnergyO1Solution::new(0.6522, branch).unwrap();
            assert_relative_eq!(sol.omega_0x(0.0), (2.0 * 0.6522f64).sqrt(), epsilon = 1e-12);
            let (y0, z0) = sol.omega_1(0.0);
            // Omega_1y(0) = +-1 with the sign of -rho, Omega_1z(0) = 0
            assert_relative_eq!(y0, -sol.rho.signum(), epsilon = 1e-12);
            assert!(z0.abs() < 1e-12);
            assert!(sol.theta(0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_o1_theta_reaches_the_poles() {
        let sol = EnergyO1Solution::new(0.6522, RhoBranch::Negative).unwrap();
        assert_relative_eq!(sol.theta(sol.tstar), PI, epsilon = 1e-10);
        let mirror = EnergyO1Solution::new(0.6522, RhoBranch::Positive).unwrap();
        assert_relative_eq!(mirror.theta(mirror.tstar), -PI, epsilon = 1e-10);
        // mirror branches share duration and area
        assert_relative_eq!(sol.area(), mirror.area(), epsilon = 1e-9);
    }

    #[test]
    fn energy_o1_area_equals_theta_total_variation() {
        // theta rises to 2 asin(sqrt(m)) + pi/2 and returns to pi, so the
        // area |d theta| integrates to 4 asin(sqrt(m))
        let sol = EnergyO1Solution::new(0.6522, RhoBranch::Negative).unwrap();
        assert_relative_eq!(sol.area(), 4.0 * sol.m.sqrt().asin(), epsilon = 1e-8);
    }

    #[test]
    fn energy_o1_out_of_branch_is_rejected() {
        assert!(EnergyO1Solution::new(1.0, RhoBranch::Negative).is_err());
        assert!(EnergyO1Solution::new(0.0, RhoBranch::Negative).is_err());
    }

    #[test]
    fn paper_inversion_level_and_area() {
        let levels = energy_o1_inversion_levels();
        assert!(!levels.is_empty());
        let (h, area) = levels
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!((h - 0.6522).abs() < 5e-4, "H = {h}");
        assert!((area - 1.45 * PI).abs() < 0.01 * PI, "area = {area}");
    }

    #[test]
    fn excitation_landmark_exists() {
        let (h, tc) = locate_excitation_transfer().expect("landmark root");
        let sol = EnergyO1Solution::new(h, RhoBranch::Positive).unwrap();
        assert_relative_eq!(sol.theta(tc), -FRAC_PI_2, epsilon = 1e-9);
        assert!(sol.x1(tc).abs() < 1e-8);
    }

    #[test]
    fn bangbang_switch_times() {
        let sol = BangBangSolution::new(0.0).unwrap();
        assert_relative_eq!(sol.t1, PI, epsilon = 1e-14);
        assert_relative_eq!(sol.period, 2.0 * PI, epsilon = 1e-14);

        // arctan(1) = pi/4 at H = 1/sqrt(2)
        let sol = BangBangSolution::new(1.0 / 2f64.sqrt()).unwrap();
        assert_relative_eq!(sol.t1, PI + PI / 4.0, epsilon = 1e-12);

        let sol = BangBangSolution::new(1.0 - 1e-12).unwrap();
        assert_relative_eq!(sol.t1, 1.5 * PI, epsilon = 3e-6);
        assert_relative_eq!(sol.inversion_time(), 2.0 * PI, epsilon = 6e-6);

        assert!(BangBangSolution::new(1.0).is_err());
    }

    #[test]
    fn bangbang_branches_are_continuous() {
        let sol = BangBangSolution::new(0.7).unwrap();
        for t in [sol.t1, sol.t2] {
            let eps = 1e-9;
            assert_relative_eq!(sol.x1(t - eps), sol.x1(t + eps), epsilon = 1e-7);
            assert_relative_eq!(sol.theta(t - eps), sol.theta(t + eps), epsilon = 1e-7);
            let (a, _, _) = sol.omega(t - eps);
            let (b, _, _) = sol.omega(t + eps);
            assert_relative_eq!(a, b, epsilon = 1e-7);
        }
        // branch-2 endpoint value in closed form
        let x1_t2 = 1.0 + 2.0 * (1.0 - 0.49f64).sqrt() + (sol.t2 - 2.0 * sol.t1).cos();
        assert_relative_eq!(sol.x1(sol.t2), x1_t2, epsilon = 1e-12);
    }

    #[test]
    fn alpha_o1_initial_phase_and_final_z() {
        let sol = AlphaO1Solution::new(0.6995, 1.1192).unwrap();
        assert!(sol.phi(0.0).abs() < 1e-12);
        assert!(sol.omega_0z(0.0).abs() < 1e-10);
        assert!(sol.omega_0z(sol.tf).abs() < 1e-9);
        // half-way zero of Omega_0z at 2K/w
        assert!(sol.omega_0z(0.5 * sol.tf).abs() < 1e-9);
        // t_f = 1.86 pi at the reported optimum
        assert!((sol.tf - 1.86 * PI).abs() < 0.01 * PI, "tf = {}", sol.tf);
    }

    #[test]
    fn alpha_o1_rejects_bad_constants() {
        assert!(AlphaO1Solution::new(0.0, 0.0).is_err());
        // I_y = 0, I_x < 0 pushes m to 1
        assert!(AlphaO1Solution::new(-1.0, 0.0).is_err());
    }
}
