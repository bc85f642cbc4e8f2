//! Adjoint-derived flow systems whose solutions generate the candidate
//! optimal control fields.
//!
//! For offset robustness the stacked angular-momentum vectors Omega_0..N
//! obey the autonomous system
//!
//! ```text
//! Omega_k' = Omega_k x u + Omega_{k+1} x e_z,   Omega_{N+1} = 0,
//! ```
//!
//! with the field read off the top block: u = (Omega_0x, Omega_0y) for the
//! energy cost and u = (Omega_0x, Omega_0y)/r, r = |Omega_0_perp|, for the
//! time cost (the gate flow is the same system with Omega_0z = I allowed to
//! be nonzero). Amplitude robustness uses Omega_k' = (Omega_k +
//! Omega_{k+1}) x u, and broadband ensembles evolve one angular momentum
//! per spin, l_k' = l_k x u + Delta_k l_k x e_z, with u built from the
//! summed momenta.
//!
//! The time-cost order-1 offset flow degenerates into a bang-bang regime
//! (u_x = sign(Omega_0x), u_y = 0); that case is integrated on the reduced
//! three-variable system with bisection-located switching times.

mod integrals;
mod space;

pub use integrals::{first_integrals, FirstIntegralAudit, IntegralDrift};
pub(crate) use integrals::{catalog as integrals_catalog, AuditTracker};
pub use space::{SearchSpace, ShootingPoint};

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::bloch::{cascade_rhs, CascadeMode};
use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::linalg::{Vec3, E_Z};
use crate::ode::{rk4_step, OdeSystem, Rk4Scratch};

/// Threshold below which the transverse adjoint norm r counts as singular.
pub const R_SINGULAR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    Energy,
    Time,
}

/// Flow family tag. `order` is the robustness order N except for the
/// ensemble, where the members carry their own offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FlowVariant {
    EnergyOffset { order: usize },
    TimeOffset { order: usize },
    Amplitude { order: usize },
    Ensemble { offsets: Vec<f64>, cost: CostKind },
    GateTime { order: usize },
}

impl FlowVariant {
    pub fn block_count(&self) -> usize {
        match self {
            FlowVariant::EnergyOffset { order }
            | FlowVariant::TimeOffset { order }
            | FlowVariant::Amplitude { order }
            | FlowVariant::GateTime { order } => order + 1,
            FlowVariant::Ensemble { offsets, .. } => offsets.len(),
        }
    }

    pub fn flow_dim(&self) -> usize {
        3 * self.block_count()
    }

    /// Whether the field extraction divides by r (and can go singular).
    fn normalized(&self) -> bool {
        matches!(
            self,
            FlowVariant::TimeOffset { .. }
                | FlowVariant::GateTime { .. }
                | FlowVariant::Ensemble {
                    cost: CostKind::Time,
                    ..
                }
        )
    }

    /// Control value read from the flow state; `None` when the extraction
    /// is singular.
    pub fn control(&self, y: &[f64]) -> Option<Vec3> {
        let (sx, sy) = match self {
            FlowVariant::Ensemble { offsets, .. } => {
                let mut sx = 0.0;
                let mut sy = 0.0;
                for k in 0..offsets.len() {
                    sx += y[3 * k];
                    sy += y[3 * k + 1];
                }
                (sx, sy)
            }
            _ => (y[0], y[1]),
        };
        if self.normalized() {
            let r = sx.hypot(sy);
            if r < R_SINGULAR {
                return None;
            }
            Some(Vec3::new(sx / r, sy / r, 0.0))
        } else {
            Some(Vec3::new(sx, sy, 0.0))
        }
    }

    fn flow_rhs(&self, u: Vec3, y: &[f64], dydt: &mut [f64]) {
        match self {
            FlowVariant::EnergyOffset { order }
            | FlowVariant::TimeOffset { order }
            | FlowVariant::GateTime { order } => {
                let n = *order;
                for k in 0..=n {
                    let o = Vec3::from_slice(&y[3 * k..3 * k + 3]);
                    let mut d = o.cross(u);
                    if k < n {
                        let nx = Vec3::from_slice(&y[3 * k + 3..3 * k + 6]);
                        d += nx.cross(E_Z);
                    }
                    d.write_to(&mut dydt[3 * k..3 * k + 3]);
                }
            }
            FlowVariant::Amplitude { order } => {
                let n = *order;
                for k in 0..=n {
                    let mut o = Vec3::from_slice(&y[3 * k..3 * k + 3]);
                    if k < n {
                        o += Vec3::from_slice(&y[3 * k + 3..3 * k + 6]);
                    }
                    o.cross(u).write_to(&mut dydt[3 * k..3 * k + 3]);
                }
            }
            FlowVariant::Ensemble { offsets, .. } => {
                for (k, &dk) in offsets.iter().enumerate() {
                    let l = Vec3::from_slice(&y[3 * k..3 * k + 3]);
                    let d = l.cross(u) + l.cross(E_Z).scaled(dk);
                    d.write_to(&mut dydt[3 * k..3 * k + 3]);
                }
            }
        }
    }
}

/// What rides along with the flow in a combined integration.
#[derive(Clone, Debug)]
pub(crate) enum TransferSpec {
    /// Perturbative cascade (state or gate) driven by the extracted field.
    Cascade { mode: CascadeMode, order: usize, cols: usize },
    /// One Bloch vector per ensemble member.
    Spins { offsets: Vec<f64> },
}

impl TransferSpec {
    pub fn dim(&self) -> usize {
        match self {
            TransferSpec::Cascade { order, cols, .. } => (order + 1) * 3 * cols,
            TransferSpec::Spins { offsets } => 3 * offsets.len(),
        }
    }

    fn rhs(&self, u: Vec3, y: &[f64], dydt: &mut [f64]) {
        match self {
            TransferSpec::Cascade { mode, order, cols } => {
                cascade_rhs(*mode, u, *order, *cols, y, dydt)
            }
            TransferSpec::Spins { offsets } => {
                for (k, &dk) in offsets.iter().enumerate() {
                    let q = Vec3::from_slice(&y[3 * k..3 * k + 3]);
                    let w = Vec3::new(u.x, u.y, dk);
                    q.cross(w).write_to(&mut dydt[3 * k..3 * k + 3]);
                }
            }
        }
    }
}

/// Flow (+ optional transfer block) as one autonomous ODE system. The
/// transfer block always reads the control from the *current stage* of the
/// flow block, so both halves converge at the full RK4 order.
pub(crate) struct CombinedSystem<'a> {
    pub variant: &'a FlowVariant,
    pub transfer: Option<&'a TransferSpec>,
    singular_at: Cell<Option<f64>>,
    /// Current bang-bang sign; only consulted in bang-bang mode.
    bang_sign: Cell<f64>,
    bang_bang: bool,
}

impl<'a> CombinedSystem<'a> {
    pub fn new(variant: &'a FlowVariant, transfer: Option<&'a TransferSpec>) -> Self {
        CombinedSystem {
            variant,
            transfer,
            singular_at: Cell::new(None),
            bang_sign: Cell::new(1.0),
            bang_bang: false,
        }
    }

    pub fn new_bang_bang(variant: &'a FlowVariant, transfer: Option<&'a TransferSpec>) -> Self {
        CombinedSystem {
            variant,
            transfer,
            singular_at: Cell::new(None),
            bang_sign: Cell::new(1.0),
            bang_bang: true,
        }
    }

    pub fn flow_dim(&self) -> usize {
        if self.bang_bang {
            3
        } else {
            self.variant.flow_dim()
        }
    }

    pub fn singular_at(&self) -> Option<f64> {
        self.singular_at.get()
    }

    pub fn sign(&self) -> f64 {
        self.bang_sign.get()
    }

    pub fn set_sign(&self, s: f64) {
        self.bang_sign.set(s);
    }

    /// Control value for the current state (the bang-bang branch uses the
    /// committed sign, not the instantaneous one).
    pub fn control_of(&self, y: &[f64]) -> Vec3 {
        if self.bang_bang {
            Vec3::new(self.bang_sign.get(), 0.0, 0.0)
        } else {
            self.variant.control(y).unwrap_or(Vec3::ZERO)
        }
    }
}

impl OdeSystem for CombinedSystem<'_> {
    fn dim(&self) -> usize {
        self.flow_dim() + self.transfer.map_or(0, |t| t.dim())
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let fd = self.flow_dim();
        let u = if self.bang_bang {
            let s = self.bang_sign.get();
            // reduced system: y = (Omega_0x, Omega_1y, Omega_1z)
            dydt[0] = y[1];
            dydt[1] = s * y[2];
            dydt[2] = -s * y[1];
            Vec3::new(s, 0.0, 0.0)
        } else {
            match self.variant.control(y) {
                Some(u) => u,
                None => {
                    if self.singular_at.get().is_none() {
                        self.singular_at.set(Some(t));
                    }
                    for d in dydt.iter_mut() {
                        *d = 0.0;
                    }
                    return;
                }
            }
        };
        if !self.bang_bang {
            self.variant.flow_rhs(u, &y[..fd], &mut dydt[..fd]);
        }
        if let Some(spec) = self.transfer {
            spec.rhs(u, &y[fd..], &mut dydt[fd..]);
        }
    }
}

/// Drives a combined system over a uniform grid of `step`-sized RK4 steps,
/// reporting the state at t = 0 and after every step. In bang-bang mode the
/// zero crossings of Omega_0x inside a step are located by bisection, the
/// sign is flipped there, and the remainder of the step is integrated with
/// the new sign so the observation grid stays uniform. Returns the switch
/// times.
pub(crate) fn drive(
    sys: &CombinedSystem,
    y: &mut [f64],
    t_final: f64,
    step: f64,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<Vec<f64>> {
    let mut scratch = Rk4Scratch::new(y.len());
    let mut switches = Vec::new();
    observe(0, 0.0, y);
    let n_steps = (t_final / step).ceil().max(1.0) as usize;
    let h = t_final / n_steps as f64;
    let mut prev = y.to_vec();
    for i in 0..n_steps {
        let t0 = i as f64 * h;
        prev.copy_from_slice(y);
        rk4_step(sys, t0, h, y, &mut scratch);
        if let Some(t) = sys.singular_at() {
            return Err(Error::SingularFlow {
                t,
                threshold: R_SINGULAR,
            });
        }
        if sys.bang_bang {
            // cheap screen: a committed sign change at the step end, or a
            // dip of the signed Omega_0x (derivative turning back up)
            let s = sys.sign();
            let suspicious = s * y[0] < -1e-12 || (s * prev[1] < 0.0 && s * y[1] > 0.0);
            if suspicious {
                let mut consumed = 0.0;
                let mut guard = 0;
                while let Some(tau) = first_crossing(sys, &prev, h - consumed, &mut scratch) {
                    // state at the crossing, then flip and finish the step
                    y.copy_from_slice(&prev);
                    advance(sys, t0 + consumed, tau, y, &mut scratch);
                    switches.push(t0 + consumed + tau);
                    sys.set_sign(-sys.sign());
                    consumed += tau;
                    prev.copy_from_slice(y);
                    advance(sys, t0 + consumed, h - consumed, y, &mut scratch);
                    guard += 1;
                    if guard > 4 {
                        return Err(Error::SingularFlow {
                            t: t0,
                            threshold: R_SINGULAR,
                        });
                    }
                }
            }
        }
        observe(i + 1, t0 + h, y);
    }
    Ok(switches)
}

fn advance(sys: &CombinedSystem, t: f64, h: f64, y: &mut [f64], scratch: &mut Rk4Scratch) {
    if h > 0.0 {
        rk4_step(sys, t, h, y, scratch);
    }
}

/// First time in (0, h] at which Omega_0x crosses zero against the current
/// sign, starting from `base`. Handles both transversal crossings (sign
/// change across the step) and the grazing dips near the separatrix where
/// the endpoint values stay positive but the minimum goes below zero.
fn first_crossing(
    sys: &CombinedSystem,
    base: &[f64],
    h: f64,
    scratch: &mut Rk4Scratch,
) -> Option<f64> {
    if h <= 1e-14 {
        return None;
    }
    let s = sys.sign();
    let eval = |tau: f64, scratch: &mut Rk4Scratch| -> (f64, f64) {
        if tau == 0.0 {
            return (s * base[0], s * base[1]);
        }
        let mut y = base.to_vec();
        rk4_step(sys, 0.0, tau, &mut y, scratch);
        (s * y[0], s * y[1]) // (signed Omega_0x, its derivative = signed Omega_1y)
    };
    // the sub-zero threshold keeps post-switch rounding noise (the state
    // sits within ~1e-14 of Omega_0x = 0 right after a flip) from
    // re-triggering
    const CROSSED: f64 = -1e-12;
    let (x1, v1) = eval(h, scratch);
    let hi0 = if x1 < CROSSED {
        h
    } else {
        // look for a grazing dip: derivative turned from negative back to
        // positive inside the step with a sub-zero minimum
        let (_, v0) = eval(0.0, scratch);
        if !(v0 < 0.0 && v1 > 0.0) {
            return None;
        }
        let mut a = 0.0;
        let mut b = h;
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            let (_, v) = eval(mid, scratch);
            if v < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let tmin = 0.5 * (a + b);
        let (xmin, _) = eval(tmin, scratch);
        if xmin >= CROSSED {
            return None;
        }
        tmin
    };
    let mut lo = 0.0;
    let mut hi = hi0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (x, _) = eval(mid, scratch);
        if x > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A materialized flow run.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub variant: FlowVariant,
    pub times: Vec<f64>,
    /// Per time point, the stacked Omega (or l) vectors.
    pub states: Vec<Vec<Vec3>>,
    /// Extracted control samples on the same grid.
    pub controls: Vec<Vec3>,
    pub field: ControlField,
    pub audit: FirstIntegralAudit,
    /// Bang-bang switch times (empty for smooth flows).
    pub switches: Vec<f64>,
}

/// Expands a (possibly reduced bang-bang) flat flow state to Omega vectors.
pub(crate) fn unpack_state(variant: &FlowVariant, bang_bang: bool, y: &[f64]) -> Vec<Vec3> {
    if bang_bang {
        vec![
            Vec3::new(y[0], 0.0, 0.0),
            Vec3::new(0.0, y[1], y[2]),
        ]
    } else {
        (0..variant.block_count())
            .map(|k| Vec3::from_slice(&y[3 * k..3 * k + 3]))
            .collect()
    }
}

/// Builds the held-field artifact from per-grid-point control samples:
/// each interval stores the average of its endpoint values (the
/// midpoint-rule representative). Unit-norm extractions are emitted as
/// phase-only pulses, bang-bang runs as exact switch lists.
pub(crate) fn field_from_samples(
    times: &[f64],
    controls: &[Vec3],
    duration: f64,
    unit_norm: bool,
    switches: Option<&[f64]>,
) -> Result<ControlField> {
    if let Some(sw) = switches {
        return ControlField::bang_bang(sw.to_vec(), duration);
    }
    let n = times.len().saturating_sub(1);
    let mut ts = Vec::with_capacity(n);
    let mut ux = Vec::with_capacity(n);
    let mut uy = Vec::with_capacity(n);
    for i in 0..n {
        let mut vx = 0.5 * (controls[i].x + controls[i + 1].x);
        let mut vy = 0.5 * (controls[i].y + controls[i + 1].y);
        if unit_norm {
            let r = vx.hypot(vy);
            if r > 0.0 {
                vx /= r;
                vy /= r;
            }
        }
        ts.push(times[i]);
        ux.push(vx);
        uy.push(vy);
    }
    if unit_norm {
        let mut phi = Vec::with_capacity(n);
        let mut prev = 0.0f64;
        for i in 0..n {
            let raw = uy[i].atan2(ux[i]);
            let p = if i == 0 {
                raw
            } else {
                let mut d = raw - prev;
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d < -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                prev + d
            };
            phi.push(p);
            prev = p;
        }
        ControlField::phase_only(ts, phi, duration)
    } else {
        ControlField::from_samples(ts, ux, uy, duration)
    }
}

/// Integrates the flow generated by a shooting point up to `t_final` and
/// materializes the trajectory, the extracted field and the
/// conserved-quantity audit.
pub fn run_flow(
    point: &ShootingPoint,
    t_final: f64,
    cfg: &crate::bloch::DynamicsConfig,
) -> Result<FlowTrajectory> {
    let variant = point.space.variant();
    let omegas = point.space.initial_omegas(&point.params)?;
    run_flow_raw(
        &variant,
        &omegas,
        point.space.is_bang_bang(),
        point.space.is_single_field(),
        t_final,
        cfg,
    )
}

/// Same as [`run_flow`] but from raw initial vectors (no normalization is
/// enforced, so degenerate configurations can be explored directly).
pub fn run_flow_raw(
    variant: &FlowVariant,
    initial: &[Vec3],
    bang_bang: bool,
    single_field: bool,
    t_final: f64,
    cfg: &crate::bloch::DynamicsConfig,
) -> Result<FlowTrajectory> {
    if initial.len() != variant.block_count() {
        return Err(Error::config(format!(
            "expected {} initial vectors, got {}",
            variant.block_count(),
            initial.len()
        )));
    }
    let sys = if bang_bang {
        CombinedSystem::new_bang_bang(variant, None)
    } else {
        CombinedSystem::new(variant, None)
    };
    let mut y = vec![0.0; sys.dim()];
    if bang_bang {
        y[0] = initial[0].x;
        y[1] = initial[1].y;
        y[2] = initial[1].z;
    } else {
        for (k, v) in initial.iter().enumerate() {
            v.write_to(&mut y[3 * k..3 * k + 3]);
        }
    }

    let catalog = integrals::catalog(variant, single_field);
    let mut audit = integrals::AuditTracker::new(catalog, variant);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut controls = Vec::new();
    let switches = drive(&sys, &mut y, t_final, cfg.step, |_, t, y| {
        let stack = unpack_state(variant, bang_bang, &y[..sys.flow_dim()]);
        audit.record(&stack);
        controls.push(sys.control_of(y));
        times.push(t);
        states.push(stack);
    })?;

    let unit_norm = variant.normalized() || matches!(variant, FlowVariant::Amplitude { .. });
    let field = field_from_samples(
        &times,
        &controls,
        t_final,
        unit_norm,
        bang_bang.then_some(switches.as_slice()),
    )?;
    Ok(FlowTrajectory {
        variant: variant.clone(),
        times,
        states,
        controls,
        field,
        audit: audit.finish(),
        switches,
    })
}
