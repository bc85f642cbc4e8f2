//! Incomplete/complete elliptic integrals of the first kind and the Jacobi
//! amplitude function.
//!
//! Everything uses the *parameter* convention: the integrand is
//! `1/sqrt(1 - m sin^2 t)` with `0 <= m < 1` (so `m = k^2` in terms of the
//! modulus `k`). `F` and `K` are evaluated through Carlson's symmetric
//! integral `R_F` (duplication theorem, machine-precision accurate), and
//! `am` inverts `F` by a Newton iteration seeded with the linearized
//! amplitude `u * pi / (2 K(m))`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

fn check_parameter(m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::domain(format!(
            "elliptic parameter m = {m} outside [0, 1)"
        )));
    }
    Ok(())
}

/// Carlson symmetric elliptic integral R_F(x, y, z) for non-negative
/// arguments with at most one of them zero.
fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0025;
    let (mut x, mut y, mut z) = (x, y, z);
    let (ave, dx, dy, dz) = loop {
        let sx = x.sqrt();
        let sy = y.sqrt();
        let sz = z.sqrt();
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            break (ave, dx, dy, dz);
        }
    };
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Complete elliptic integral of the first kind, K(m) = F(pi/2, m).
pub fn ellip_k(m: f64) -> Result<f64> {
    check_parameter(m)?;
    Ok(carlson_rf(0.0, 1.0 - m, 1.0))
}

/// Incomplete elliptic integral of the first kind,
/// F(phi, m) = int_0^phi dt / sqrt(1 - m sin^2 t).
///
/// Odd in `phi` and quasi-periodic: F(phi + pi, m) = F(phi, m) + 2 K(m).
pub fn ellip_f(phi: f64, m: f64) -> Result<f64> {
    check_parameter(m)?;
    // reduce to [-pi/2, pi/2] using the quasi-period
    let n = (phi / PI).round();
    let phi_r = phi - n * PI;
    let s = phi_r.sin();
    let c = phi_r.cos();
    let partial = if s == 0.0 {
        0.0
    } else {
        s * carlson_rf(c * c, 1.0 - m * s * s, 1.0)
    };
    if n == 0.0 {
        Ok(partial)
    } else {
        Ok(partial + 2.0 * n * ellip_k(m)?)
    }
}

/// Jacobi amplitude am(u, m): the inverse of `ellip_f` in its first
/// argument, so that `ellip_f(am(u, m), m) == u`.
pub fn jacobi_am(u: f64, m: f64) -> Result<f64> {
    check_parameter(m)?;
    if m == 0.0 {
        return Ok(u);
    }
    let k = ellip_k(m)?;
    let n = (u / (2.0 * k)).round();
    let ur = u - 2.0 * n * k; // in [-K, K]
    let mut phi = ur * FRAC_PI_2 / k;
    for _ in 0..40 {
        let f = ellip_f(phi, m)? - ur;
        let step = f * (1.0 - m * phi.sin().powi(2)).max(0.0).sqrt();
        phi -= step;
        if step.abs() < 1e-15 * (1.0 + phi.abs()) {
            break;
        }
    }
    Ok(phi + n * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_reduces_to_identity_at_m_zero() {
        assert_relative_eq!(ellip_f(0.7, 0.0).unwrap(), 0.7, epsilon = 1e-14);
        assert_relative_eq!(jacobi_am(1.3, 0.0).unwrap(), 1.3, epsilon = 1e-14);
    }

    #[test]
    fn k_known_values() {
        assert_relative_eq!(ellip_k(0.0).unwrap(), FRAC_PI_2, epsilon = 1e-14);
        // Abramowitz & Stegun 17.3: K(0.5) = 1.85407467730137...
        assert_relative_eq!(ellip_k(0.5).unwrap(), 1.85407467730137, epsilon = 1e-13);
        assert!(ellip_k(1.0).is_err());
        assert!(ellip_k(-0.1).is_err());
    }

    #[test]
    fn k_is_monotone() {
        let k2 = ellip_k(0.2).unwrap();
        let k5 = ellip_k(0.5).unwrap();
        let k8 = ellip_k(0.8).unwrap();
        assert!(k2 < k5 && k5 < k8);
    }

    #[test]
    fn f_at_quarter_period_equals_k() {
        for &m in &[0.1, 0.5, 0.9] {
            assert_relative_eq!(
                ellip_f(FRAC_PI_2, m).unwrap(),
                ellip_k(m).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn f_is_odd_and_quasi_periodic() {
        let m = 0.37;
        let f = ellip_f(0.9, m).unwrap();
        assert_relative_eq!(ellip_f(-0.9, m).unwrap(), -f, epsilon = 1e-13);
        assert_relative_eq!(
            ellip_f(0.9 + PI, m).unwrap(),
            f + 2.0 * ellip_k(m).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn am_at_origin_and_quarter_period() {
        assert_eq!(jacobi_am(0.0, 0.3).unwrap(), 0.0);
        let m = 0.6;
        let k = ellip_k(m).unwrap();
        assert_relative_eq!(jacobi_am(k, m).unwrap(), FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn am_derivative_identity() {
        // d am/du = sqrt(1 - m sin^2(am))
        let m = 0.7;
        let h = 1e-5;
        for &u in &[-2.0, -0.4, 0.3, 1.1, 2.6] {
            let d = (jacobi_am(u + h, m).unwrap() - jacobi_am(u - h, m).unwrap()) / (2.0 * h);
            let am = jacobi_am(u, m).unwrap();
            let expected = (1.0 - m * am.sin().powi(2)).sqrt();
            assert_relative_eq!(d, expected, epsilon = 1e-6);
        }
    }
}
