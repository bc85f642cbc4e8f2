//! Bloch-vector dynamics, the perturbative cascades in offset and amplitude
//! error, the Bloch-matrix cascade for gates, and the fidelity/robustness
//! metrics built on them.
//!
//! The state q = (x, y, z) obeys q' = q x w(t) with
//! w = ((1+alpha) u_x, (1+alpha) u_y, delta). Expanding q in powers of the
//! unknown parameter gives a lower-triangular cascade: the homogeneous part
//! q_0 rotates with the field alone and each q_k is driven by q_{k-1}
//! through the coupling q_{k-1} x e_z (offset) or q_{k-1} x u (amplitude).
//! Gates evolve the same cascade column-wise on 3x3 matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::linalg::{Mat3, Vec3, E_Z};
use crate::ode::{OdeSystem, Rk4Scratch};

pub type BlochVector = Vec3;

pub const NORTH_POLE: Vec3 = Vec3 {
    x: 0.0,
    y: 0.0,
    z: 1.0,
};
pub const SOUTH_POLE: Vec3 = Vec3 {
    x: 0.0,
    y: 0.0,
    z: -1.0,
};

/// Integration settings for every fixed-step propagation in the crate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// RK4 step in normalized time units.
    pub step: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig { step: 1e-3 }
    }
}

impl DynamicsConfig {
    pub fn with_step(step: f64) -> Self {
        DynamicsConfig { step }
    }

    /// Accuracy model for the fixed-step RK4 scheme over a span of time:
    /// conserved quantities and unit norms drift below this bound on the
    /// O(1)-amplitude systems integrated here (calibrated in the tests).
    pub fn tolerance(&self, span: f64) -> f64 {
        50.0 * self.step.powi(4) * (1.0 + span)
    }
}

/// Which inhomogeneity parameter a cascade expands in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CascadeMode {
    StateOffset,
    StateAmplitude,
    GateOffset,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StackData {
    Vectors(Vec<Vec3>),
    Matrices(Vec<Mat3>),
}

/// The Taylor coefficients q_0..q_N (state modes) or R_0..R_N (gate mode)
/// of the expansion of the solution in the error parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbativeStack {
    pub mode: CascadeMode,
    pub data: StackData,
}

impl PerturbativeStack {
    /// Stack at t = 0: homogeneous part at the north pole (identity for
    /// gates), every inhomogeneous coefficient zero.
    pub fn initial(mode: CascadeMode, order: usize) -> Self {
        let data = match mode {
            CascadeMode::StateOffset | CascadeMode::StateAmplitude => {
                let mut v = vec![Vec3::ZERO; order + 1];
                v[0] = NORTH_POLE;
                StackData::Vectors(v)
            }
            CascadeMode::GateOffset => {
                let mut m = vec![Mat3::ZERO; order + 1];
                m[0] = Mat3::IDENTITY;
                StackData::Matrices(m)
            }
        };
        PerturbativeStack { mode, data }
    }

    pub fn order(&self) -> usize {
        match &self.data {
            StackData::Vectors(v) => v.len() - 1,
            StackData::Matrices(m) => m.len() - 1,
        }
    }

    pub fn vectors(&self) -> Option<&[Vec3]> {
        match &self.data {
            StackData::Vectors(v) => Some(v),
            StackData::Matrices(_) => None,
        }
    }

    pub fn matrices(&self) -> Option<&[Mat3]> {
        match &self.data {
            StackData::Matrices(m) => Some(m),
            StackData::Vectors(_) => None,
        }
    }

    pub(crate) fn flat_dim(&self) -> usize {
        match &self.data {
            StackData::Vectors(v) => 3 * v.len(),
            StackData::Matrices(m) => 9 * m.len(),
        }
    }

    pub(crate) fn write_flat(&self, out: &mut [f64]) {
        match &self.data {
            StackData::Vectors(v) => {
                for (i, q) in v.iter().enumerate() {
                    q.write_to(&mut out[3 * i..3 * i + 3]);
                }
            }
            StackData::Matrices(ms) => {
                for (i, m) in ms.iter().enumerate() {
                    m.write_to(&mut out[9 * i..9 * i + 9]);
                }
            }
        }
    }

    pub(crate) fn read_flat(&mut self, data: &[f64]) {
        match &mut self.data {
            StackData::Vectors(v) => {
                for (i, q) in v.iter_mut().enumerate() {
                    *q = Vec3::from_slice(&data[3 * i..3 * i + 3]);
                }
            }
            StackData::Matrices(ms) => {
                for (i, m) in ms.iter_mut().enumerate() {
                    *m = Mat3::from_slice(&data[9 * i..9 * i + 9]);
                }
            }
        }
    }
}

/// Cascade right-hand side on the flattened stack for a constant field
/// value. `cols` is 1 for vector stacks and 3 for matrix stacks; the blocks
/// are laid out column-major within each order.
pub(crate) fn cascade_rhs(
    mode: CascadeMode,
    u: Vec3,
    order: usize,
    cols: usize,
    y: &[f64],
    dydt: &mut [f64],
) {
    let coupling = match mode {
        CascadeMode::StateOffset | CascadeMode::GateOffset => E_Z,
        CascadeMode::StateAmplitude => u,
    };
    let block = 3 * cols;
    for k in 0..=order {
        for c in 0..cols {
            let off = k * block + 3 * c;
            let q = Vec3::from_slice(&y[off..off + 3]);
            let mut d = q.cross(u);
            if k > 0 {
                let prev = k * block - block + 3 * c;
                let qp = Vec3::from_slice(&y[prev..prev + 3]);
                d += qp.cross(coupling);
            }
            d.write_to(&mut dydt[off..off + 3]);
        }
    }
}

struct ConstantFieldBloch {
    omega: Vec3,
}

impl OdeSystem for ConstantFieldBloch {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        Vec3::from_slice(y).cross(self.omega).write_to(dydt);
    }
}

struct ConstantFieldCascade {
    mode: CascadeMode,
    u: Vec3,
    order: usize,
    cols: usize,
}

impl OdeSystem for ConstantFieldCascade {
    fn dim(&self) -> usize {
        (self.order + 1) * 3 * self.cols
    }
    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        cascade_rhs(self.mode, self.u, self.order, self.cols, y, dydt);
    }
}

fn check_span(field: &ControlField, t_final: f64) -> Result<()> {
    if t_final > field.duration() + 1e-9 {
        return Err(Error::OutOfRange {
            requested: t_final,
            duration: field.duration(),
        });
    }
    Ok(())
}

/// Walks the held-field intervals, RK4-substepping each one with steps of
/// size at most `cfg.step` and reporting every substep to `observe`.
fn propagate_intervals<F>(
    field: &ControlField,
    t_final: f64,
    cfg: &DynamicsConfig,
    state: &mut [f64],
    mut system_for: impl FnMut(f64, f64) -> F,
    mut observe: impl FnMut(f64, &[f64]),
) where
    F: OdeSystem,
{
    let mut scratch = Rk4Scratch::new(state.len());
    observe(0.0, state);
    for (t0, t1, ux, uy) in field.intervals_until(t_final) {
        let sys = system_for(ux, uy);
        let span = t1 - t0;
        let n = (span / cfg.step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut t = t0;
        for i in 0..n {
            crate::ode::rk4_step(&sys, t, h, state, &mut scratch);
            t = if i + 1 == n { t1 } else { t + h };
            observe(t, state);
        }
    }
}

/// Propagates the Bloch vector under a sampled field with offset `delta`
/// and relative amplitude error `alpha`, returning the trajectory on the
/// integration grid.
pub fn propagate_bloch(
    field: &ControlField,
    delta: f64,
    alpha: f64,
    q0: Vec3,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<Vec<(f64, Vec3)>> {
    check_span(field, t_final)?;
    let mut state = [q0.x, q0.y, q0.z];
    let mut out = Vec::new();
    propagate_intervals(
        field,
        t_final,
        cfg,
        &mut state,
        |ux, uy| ConstantFieldBloch {
            omega: Vec3::new((1.0 + alpha) * ux, (1.0 + alpha) * uy, delta),
        },
        |t, y| out.push((t, Vec3::from_slice(y))),
    );
    Ok(out)
}

/// Final state only; avoids storing the trajectory.
pub fn propagate_bloch_final(
    field: &ControlField,
    delta: f64,
    alpha: f64,
    q0: Vec3,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<Vec3> {
    check_span(field, t_final)?;
    let mut state = [q0.x, q0.y, q0.z];
    propagate_intervals(
        field,
        t_final,
        cfg,
        &mut state,
        |ux, uy| ConstantFieldBloch {
            omega: Vec3::new((1.0 + alpha) * ux, (1.0 + alpha) * uy, delta),
        },
        |_, _| {},
    );
    Ok(Vec3::from_slice(&state))
}

/// Integrates the block-triangular cascade for `stack` under the field,
/// returning the stack trajectory.
pub fn propagate_cascade(
    field: &ControlField,
    stack: &PerturbativeStack,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<Vec<(f64, PerturbativeStack)>> {
    check_span(field, t_final)?;
    let mut state = vec![0.0; stack.flat_dim()];
    stack.write_flat(&mut state);
    let order = stack.order();
    let cols = if matches!(stack.mode, CascadeMode::GateOffset) {
        3
    } else {
        1
    };
    let mode = stack.mode;
    let mut out = Vec::new();
    propagate_intervals(
        field,
        t_final,
        cfg,
        &mut state,
        |ux, uy| ConstantFieldCascade {
            mode,
            u: Vec3::new(ux, uy, 0.0),
            order,
            cols,
        },
        |t, y| {
            let mut snap = stack.clone();
            snap.read_flat(y);
            out.push((t, snap));
        },
    );
    Ok(out)
}

/// Final stack only.
pub fn propagate_cascade_final(
    field: &ControlField,
    stack: &PerturbativeStack,
    t_final: f64,
    cfg: &DynamicsConfig,
) -> Result<PerturbativeStack> {
    check_span(field, t_final)?;
    let mut state = vec![0.0; stack.flat_dim()];
    stack.write_flat(&mut state);
    let order = stack.order();
    let cols = if matches!(stack.mode, CascadeMode::GateOffset) {
        3
    } else {
        1
    };
    let mode = stack.mode;
    propagate_intervals(
        field,
        t_final,
        cfg,
        &mut state,
        |ux, uy| ConstantFieldCascade {
            mode,
            u: Vec3::new(ux, uy, 0.0),
            order,
            cols,
        },
        |_, _| {},
    );
    let mut fin = stack.clone();
    fin.read_flat(&state);
    Ok(fin)
}

/// Inversion fidelity F = -z of a final Bloch vector.
pub fn inversion_fidelity(q_final: Vec3) -> f64 {
    -q_final.z
}

/// Target of a robust transfer.
#[derive(Clone, Copy, Debug)]
pub enum TransferTarget {
    State(Vec3),
    Gate(Mat3),
}

/// Robust transfer fidelity of a final cascade stack:
/// F = -|target - q_0|^2 - sum_{k>=1} |q_k|^2 (state modes) or the
/// analogous Frobenius residual for gate stacks. F <= 0, with 0 exactly at
/// a perfect robust transfer.
pub fn robust_fidelity(stack: &PerturbativeStack, target: &TransferTarget) -> Result<f64> {
    match (&stack.data, target) {
        (StackData::Vectors(v), TransferTarget::State(goal)) => {
            let mut f = -(*goal - v[0]).norm2();
            for q in &v[1..] {
                f -= q.norm2();
            }
            Ok(f)
        }
        (StackData::Matrices(ms), TransferTarget::Gate(goal)) => {
            let mut f = -goal.sub(&ms[0]).frobenius_norm2();
            for r in &ms[1..] {
                f -= r.frobenius_norm2();
            }
            Ok(f)
        }
        _ => Err(Error::config(
            "robust_fidelity: stack mode does not match target kind",
        )),
    }
}

/// Which error parameter a robustness profile sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorAxis {
    Offset,
    Amplitude,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobustnessProfile {
    pub axis: ErrorAxis,
    /// (parameter value, inversion fidelity -z(t_f)) pairs.
    pub entries: Vec<(f64, f64)>,
}

/// Full nonlinear propagation of the field for every grid value of the
/// error parameter, starting from the north pole.
pub fn robustness_profile(
    field: &ControlField,
    axis: ErrorAxis,
    grid: &[f64],
    cfg: &DynamicsConfig,
) -> Result<RobustnessProfile> {
    if grid.is_empty() {
        return Err(Error::config("robustness_profile: empty grid"));
    }
    let t_final = field.duration();
    let entries = grid
        .iter()
        .map(|&p| {
            let (delta, alpha) = match axis {
                ErrorAxis::Offset => (p, 0.0),
                ErrorAxis::Amplitude => (0.0, p),
            };
            let q = propagate_bloch_final(field, delta, alpha, NORTH_POLE, t_final, cfg)?;
            Ok((p, inversion_fidelity(q)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RobustnessProfile { axis, entries })
}

/// Least-squares slope of log |q(t_f; eps) - target| against log eps.
///
/// For a pulse robust to order N the defect scales like eps^(N+1), so the
/// slope certifies the achieved cancellation order.
pub fn defect_scaling_slope(
    field: &ControlField,
    axis: ErrorAxis,
    target: Vec3,
    epsilons: &[f64],
    cfg: &DynamicsConfig,
) -> Result<f64> {
    if epsilons.len() < 2 {
        return Err(Error::config("defect_scaling_slope: need >= 2 samples"));
    }
    let t_final = field.duration();
    let mut pts = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let (delta, alpha) = match axis {
            ErrorAxis::Offset => (eps, 0.0),
            ErrorAxis::Amplitude => (0.0, eps),
        };
        let q = propagate_bloch_final(field, delta, alpha, NORTH_POLE, t_final, cfg)?;
        let defect = (q - target).norm();
        pts.push((eps.ln(), defect.max(1e-300).ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn constant_pulse(ux: f64, duration: f64) -> ControlField {
        ControlField::from_samples(vec![0.0], vec![ux], vec![0.0], duration).unwrap()
    }

    #[test]
    fn pi_pulse_inverts_on_resonance() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let q = propagate_bloch_final(&field, 0.0, 0.0, NORTH_POLE, PI, &cfg).unwrap();
        assert!((q - SOUTH_POLE).norm() < 1e-9);
    }

    #[test]
    fn zero_field_fixes_the_poles() {
        let field = constant_pulse(0.0, 2.0);
        let cfg = DynamicsConfig::default();
        for delta in [0.0, 0.3, -1.2] {
            let q = propagate_bloch_final(&field, delta, 0.0, NORTH_POLE, 2.0, &cfg).unwrap();
            assert!((q - NORTH_POLE).norm() < 1e-12);
        }
    }

    #[test]
    fn detuned_pi_pulse_matches_tilted_axis_rotation() {
        // rotation about (1, 0, delta)/sqrt(1 + delta^2) by angle
        // sqrt(1 + delta^2) * pi
        let delta = 0.5;
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let q = propagate_bloch_final(&field, delta, 0.0, NORTH_POLE, PI, &cfg).unwrap();
        let eff = 1.0 + delta * delta;
        let expected_z = 1.0 - 2.0 * (eff.sqrt() * PI / 2.0).sin().powi(2) / eff;
        assert_relative_eq!(q.z, expected_z, epsilon = 1e-9);
    }

    #[test]
    fn norm_is_conserved_along_trajectories() {
        let field = constant_pulse(1.0, 2.0 * PI);
        let cfg = DynamicsConfig::default();
        let traj = propagate_bloch(&field, 0.7, 0.2, NORTH_POLE, 2.0 * PI, &cfg).unwrap();
        let max_drift = traj
            .iter()
            .map(|(_, q)| (q.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(max_drift <= 10.0 * cfg.tolerance(2.0 * PI), "{max_drift}");
    }

    #[test]
    fn request_past_field_end_is_an_error() {
        let field = constant_pulse(1.0, 1.0);
        let cfg = DynamicsConfig::default();
        let err = propagate_bloch_final(&field, 0.0, 0.0, NORTH_POLE, 2.0, &cfg).unwrap_err();
        assert!(matches!(err, crate::Error::OutOfRange { .. }));
    }

    #[test]
    fn zero_field_freezes_offset_cascade() {
        let field = constant_pulse(0.0, 1.0);
        let cfg = DynamicsConfig::default();
        let stack = PerturbativeStack::initial(CascadeMode::StateOffset, 3);
        let fin = propagate_cascade_final(&field, &stack, 1.0, &cfg).unwrap();
        let v = fin.vectors().unwrap();
        assert!((v[0] - NORTH_POLE).norm() < 1e-13);
        for q in &v[1..] {
            assert!(q.norm() < 1e-13);
        }
    }

    #[test]
    fn first_order_coefficient_matches_finite_difference() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let stack = PerturbativeStack::initial(CascadeMode::StateOffset, 1);
        let fin = propagate_cascade_final(&field, &stack, PI, &cfg).unwrap();
        let q1 = fin.vectors().unwrap()[1];

        let d = 1e-4;
        let qp = propagate_bloch_final(&field, d, 0.0, NORTH_POLE, PI, &cfg).unwrap();
        let qm = propagate_bloch_final(&field, -d, 0.0, NORTH_POLE, PI, &cfg).unwrap();
        let fd = (qp - qm).scaled(1.0 / (2.0 * d));
        assert!((q1 - fd).norm() < 1e-6, "{:?} vs {:?}", q1, fd);
    }

    #[test]
    fn amplitude_cascade_matches_finite_difference() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let stack = PerturbativeStack::initial(CascadeMode::StateAmplitude, 1);
        let fin = propagate_cascade_final(&field, &stack, PI, &cfg).unwrap();
        let q1 = fin.vectors().unwrap()[1];

        let d = 1e-4;
        let qp = propagate_bloch_final(&field, 0.0, d, NORTH_POLE, PI, &cfg).unwrap();
        let qm = propagate_bloch_final(&field, 0.0, -d, NORTH_POLE, PI, &cfg).unwrap();
        let fd = (qp - qm).scaled(1.0 / (2.0 * d));
        assert!((q1 - fd).norm() < 1e-6);
    }

    #[test]
    fn gate_cascade_keeps_homogeneous_part_orthogonal() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let stack = PerturbativeStack::initial(CascadeMode::GateOffset, 1);
        let fin = propagate_cascade_final(&field, &stack, PI, &cfg).unwrap();
        let r0 = fin.matrices().unwrap()[0];
        let defect = r0.transpose().mul_mat(&r0).sub(&Mat3::IDENTITY).frobenius_norm();
        assert!(defect <= 10.0 * cfg.tolerance(PI));
        // a pi rotation about x maps the identity to diag(1, -1, -1)
        let goal = Mat3::diag(1.0, -1.0, -1.0);
        assert!(goal.sub(&r0).frobenius_norm() < 1e-9);
    }

    #[test]
    fn fidelity_values() {
        assert_eq!(inversion_fidelity(SOUTH_POLE), 1.0);
        assert_eq!(inversion_fidelity(NORTH_POLE), -1.0);
        assert_eq!(inversion_fidelity(Vec3::new(1.0, 0.0, 0.0)), 0.0);

        let stack = PerturbativeStack::initial(CascadeMode::StateOffset, 2);
        let f = robust_fidelity(&stack, &TransferTarget::State(SOUTH_POLE)).unwrap();
        assert_relative_eq!(f, -4.0, epsilon = 1e-15);

        let gate = PerturbativeStack::initial(CascadeMode::GateOffset, 1);
        assert!(robust_fidelity(&gate, &TransferTarget::State(SOUTH_POLE)).is_err());
    }

    #[test]
    fn profile_of_pi_pulse() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let prof =
            robustness_profile(&field, ErrorAxis::Offset, &[0.0, 0.5], &cfg).unwrap();
        assert_relative_eq!(prof.entries[0].1, 1.0, epsilon = 1e-9);
        let eff = 1.25f64;
        let expected = -(1.0 - 2.0 * (eff.sqrt() * PI / 2.0).sin().powi(2) / eff);
        assert_relative_eq!(prof.entries[1].1, expected, epsilon = 1e-9);
    }

    #[test]
    fn plain_pi_pulse_defect_scales_linearly() {
        let field = constant_pulse(1.0, PI);
        let cfg = DynamicsConfig::default();
        let eps: Vec<f64> = (0..5).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect();
        let slope =
            defect_scaling_slope(&field, ErrorAxis::Offset, SOUTH_POLE, &eps, &cfg).unwrap();
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }
}
