//! Shooting-parameter spaces: the free initial data of each flow variant.
//!
//! The dimension counts follow the normalizations fixed once and for all
//! before integration: state transfers start the Bloch vector on the north
//! pole (every Omega_kz(0) = 0), the initial field phase is gauged away
//! (Omega_0y(0) = 0) and |Omega_N| is scaled to 1, leaving 2N free values
//! for the offset and amplitude variants. Ensembles close their momenta to
//! sum_k l_kx(0) = 1, sum_k l_ky(0) = 0, leaving 2N - 2. Gates keep
//! Omega_0 fully free plus the Omega_N sphere angles: 3N + 2.
//!
//! The single-field subfamilies of the energy flow (u_y = 0) are exposed
//! as their own low-dimensional spaces; they embed into the general
//! parameterization.

use serde::{Deserialize, Serialize};

use super::{CostKind, FlowVariant};
use crate::error::{Error, Result};
use crate::linalg::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SearchSpace {
    /// Energy cost, offset expansion: [Omega_0x(0), (Omega_kx, Omega_ky)
    /// for k = 1..N-1, theta] with Omega_N(0) = (cos theta, sin theta, 0).
    EnergyOffset { order: usize },
    /// Single-field (u_y = 0) energy families: order 1 -> [H], order 2 ->
    /// [H, J], order 3 -> [Omega_0x(0), Omega_1y(0), Omega_2x(0)].
    EnergyOffsetSingleField { order: usize },
    /// Time cost, offset expansion; same layout as `EnergyOffset`.
    TimeOffset { order: usize },
    /// Order-1 time-cost bang-bang family, parameterized by [H].
    TimeOffsetBangBang,
    /// Amplitude-error expansion: [(Omega_kx, Omega_ky) for k = 1..N].
    Amplitude { order: usize },
    /// Broadband ensemble: [(l_kx, l_ky) for k = 1..N-1], the last momentum
    /// closed by l_Nx = 1 - sum, l_Ny = -sum.
    Ensemble { offsets: Vec<f64>, cost: CostKind },
    /// Time-optimal gate: [Omega_0x, Omega_0y, I, (Omega_kx, Omega_ky,
    /// Omega_kz) for k = 1..N-1, theta, phi].
    GateTime { order: usize },
}

impl SearchSpace {
    pub fn dim(&self) -> usize {
        match self {
            SearchSpace::EnergyOffset { order } | SearchSpace::TimeOffset { order } => 2 * order,
            SearchSpace::EnergyOffsetSingleField { order } => *order,
            SearchSpace::TimeOffsetBangBang => 1,
            SearchSpace::Amplitude { order } => 2 * order,
            SearchSpace::Ensemble { offsets, .. } => 2 * offsets.len() - 2,
            SearchSpace::GateTime { order } => 3 * order + 2,
        }
    }

    /// Robustness order N (ensemble: number of members).
    pub fn order(&self) -> usize {
        match self {
            SearchSpace::EnergyOffset { order }
            | SearchSpace::EnergyOffsetSingleField { order }
            | SearchSpace::TimeOffset { order }
            | SearchSpace::Amplitude { order }
            | SearchSpace::GateTime { order } => *order,
            SearchSpace::TimeOffsetBangBang => 1,
            SearchSpace::Ensemble { offsets, .. } => offsets.len(),
        }
    }

    pub fn variant(&self) -> FlowVariant {
        match self {
            SearchSpace::EnergyOffset { order }
            | SearchSpace::EnergyOffsetSingleField { order } => {
                FlowVariant::EnergyOffset { order: *order }
            }
            SearchSpace::TimeOffset { order } => FlowVariant::TimeOffset { order: *order },
            SearchSpace::TimeOffsetBangBang => FlowVariant::TimeOffset { order: 1 },
            SearchSpace::Amplitude { order } => FlowVariant::Amplitude { order: *order },
            SearchSpace::Ensemble { offsets, cost } => FlowVariant::Ensemble {
                offsets: offsets.clone(),
                cost: *cost,
            },
            SearchSpace::GateTime { order } => FlowVariant::GateTime { order: *order },
        }
    }

    pub fn is_bang_bang(&self) -> bool {
        matches!(self, SearchSpace::TimeOffsetBangBang)
    }

    pub fn is_single_field(&self) -> bool {
        matches!(self, SearchSpace::EnergyOffsetSingleField { .. })
    }

    /// Cost functional minimized by a global search over this space.
    pub fn cost_kind(&self) -> CostKind {
        match self {
            SearchSpace::EnergyOffset { .. } | SearchSpace::EnergyOffsetSingleField { .. } => {
                CostKind::Energy
            }
            SearchSpace::Ensemble { cost, .. } => *cost,
            _ => CostKind::Time,
        }
    }

    pub fn axis_names(&self) -> Vec<String> {
        match self {
            SearchSpace::EnergyOffset { order } | SearchSpace::TimeOffset { order } => {
                let mut names = vec!["Omega_0x0".to_string()];
                for k in 1..*order {
                    names.push(format!("Omega_{k}x0"));
                    names.push(format!("Omega_{k}y0"));
                }
                names.push("theta".to_string());
                names
            }
            SearchSpace::EnergyOffsetSingleField { order } => match order {
                1 => vec!["H".into()],
                2 => vec!["H".into(), "J".into()],
                _ => vec!["Omega_0x0".into(), "Omega_1y0".into(), "Omega_2x0".into()],
            },
            SearchSpace::TimeOffsetBangBang => vec!["H".into()],
            SearchSpace::Amplitude { order } => {
                let mut names = Vec::new();
                for k in 1..=*order {
                    names.push(format!("Omega_{k}x0"));
                    names.push(format!("Omega_{k}y0"));
                }
                names
            }
            SearchSpace::Ensemble { offsets, .. } => {
                let mut names = Vec::new();
                for k in 1..offsets.len() {
                    names.push(format!("l_{k}x0"));
                    names.push(format!("l_{k}y0"));
                }
                names
            }
            SearchSpace::GateTime { order } => {
                let mut names = vec!["Omega_0x0".into(), "Omega_0y0".into(), "I".into()];
                for k in 1..*order {
                    names.push(format!("Omega_{k}x0"));
                    names.push(format!("Omega_{k}y0"));
                    names.push(format!("Omega_{k}z0"));
                }
                names.push("theta".into());
                names.push("phi".into());
                names
            }
        }
    }

    /// Default search box; contains every reported optimum with margin.
    pub fn default_box(&self) -> Vec<(f64, f64)> {
        use std::f64::consts::PI;
        match self {
            SearchSpace::EnergyOffset { order } => {
                let mut b = vec![(0.0, 4.0)];
                for _ in 1..*order {
                    b.push((-4.0, 4.0));
                    b.push((-4.0, 4.0));
                }
                b.push((-PI, PI));
                b
            }
            // the time-cost adjoint scale H = Omega_0x(0) grows with the
            // robustness order (the order-2 optimum sits at 4.21), so the
            // top block gets more room than the middles
            SearchSpace::TimeOffset { order } => {
                let mut b = vec![(0.0, 8.0)];
                for _ in 1..*order {
                    b.push((-6.0, 6.0));
                    b.push((-6.0, 6.0));
                }
                b.push((-PI, PI));
                b
            }
            SearchSpace::EnergyOffsetSingleField { order } => match order {
                1 => vec![(0.01, 0.999)],
                2 => vec![(0.01, 1.5), (0.01, 2.0)],
                _ => vec![(-4.0, 4.0); 3],
            },
            // the cap keeps the grazing dip of Omega_0x (depth 1 - H) well
            // above the integrator noise floor, so switch detection stays
            // reliable over the whole box
            SearchSpace::TimeOffsetBangBang => vec![(0.0, 1.0 - 1e-10)],
            SearchSpace::Amplitude { order } => vec![(-4.0, 4.0); 2 * order],
            SearchSpace::Ensemble { offsets, .. } => vec![(-4.0, 4.0); 2 * offsets.len() - 2],
            SearchSpace::GateTime { order } => {
                let mut b = vec![(-4.0, 4.0), (-4.0, 4.0), (-1.0, 1.0)];
                for _ in 1..*order {
                    b.extend([(-4.0, 4.0); 3]);
                }
                b.push((0.0, PI));
                b.push((0.0, 2.0 * PI));
                b
            }
        }
    }

    /// Initial stacked vectors for the flow, applying the variant's
    /// normalizations.
    pub fn initial_omegas(&self, p: &[f64]) -> Result<Vec<Vec3>> {
        if p.len() != self.dim() {
            return Err(Error::config(format!(
                "expected {} shooting parameters, got {}",
                self.dim(),
                p.len()
            )));
        }
        match self {
            SearchSpace::EnergyOffset { order } | SearchSpace::TimeOffset { order } => {
                let n = *order;
                let mut v = vec![Vec3::new(p[0], 0.0, 0.0)];
                for k in 1..n {
                    v.push(Vec3::new(p[2 * k - 1], p[2 * k], 0.0));
                }
                let theta = p[2 * n - 1];
                v.push(Vec3::new(theta.cos(), theta.sin(), 0.0));
                Ok(v)
            }
            SearchSpace::EnergyOffsetSingleField { order } => match order {
                1 => {
                    let h = p[0];
                    if h <= 0.0 {
                        return Err(Error::domain(format!("H = {h} outside (0, 1)")));
                    }
                    Ok(vec![
                        Vec3::new((2.0 * h).sqrt(), 0.0, 0.0),
                        Vec3::new(0.0, 1.0, 0.0),
                    ])
                }
                2 => {
                    let (h, j) = (p[0], p[1]);
                    if h <= 0.0 {
                        return Err(Error::domain(format!("H = {h} must be positive")));
                    }
                    let o0 = (2.0 * h).sqrt();
                    let rad = 2.0 * j + 2.0 * o0;
                    if rad < 0.0 {
                        return Err(Error::domain(format!(
                            "2J + 2 sqrt(2H) = {rad} must be non-negative"
                        )));
                    }
                    Ok(vec![
                        Vec3::new(o0, 0.0, 0.0),
                        Vec3::new(0.0, rad.sqrt(), 0.0),
                        Vec3::new(-1.0, 0.0, 0.0),
                    ])
                }
                3 => Ok(vec![
                    Vec3::new(p[0], 0.0, 0.0),
                    Vec3::new(0.0, p[1], 0.0),
                    Vec3::new(p[2], 0.0, 0.0),
                    Vec3::new(0.0, -1.0, 0.0),
                ]),
                n => Err(Error::config(format!(
                    "single-field energy family not available at order {n}"
                ))),
            },
            SearchSpace::TimeOffsetBangBang => {
                let h = p[0];
                if !(0.0..1.0).contains(&h) {
                    return Err(Error::domain(format!(
                        "bang-bang level H = {h} outside [0, 1): no switch exists"
                    )));
                }
                Ok(vec![Vec3::new(h, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)])
            }
            SearchSpace::Amplitude { order } => {
                let mut v = vec![Vec3::new(1.0, 0.0, 0.0)];
                for k in 0..*order {
                    v.push(Vec3::new(p[2 * k], p[2 * k + 1], 0.0));
                }
                Ok(v)
            }
            SearchSpace::Ensemble { offsets, .. } => {
                let n = offsets.len();
                let mut v = Vec::with_capacity(n);
                let mut sx = 0.0;
                let mut sy = 0.0;
                for k in 0..n - 1 {
                    let (x, y) = (p[2 * k], p[2 * k + 1]);
                    sx += x;
                    sy += y;
                    v.push(Vec3::new(x, y, 0.0));
                }
                v.push(Vec3::new(1.0 - sx, -sy, 0.0));
                Ok(v)
            }
            SearchSpace::GateTime { order } => {
                let n = *order;
                let mut v = vec![Vec3::new(p[0], p[1], p[2])];
                for k in 1..n {
                    let b = 3 * k;
                    v.push(Vec3::new(p[b], p[b + 1], p[b + 2]));
                }
                let (theta, phi) = (p[3 * n], p[3 * n + 1]);
                v.push(Vec3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ));
                Ok(v)
            }
        }
    }

    /// Named derived quantities of a parameter vector (the constants the
    /// reported optima are quoted in).
    pub fn derived(&self, p: &[f64]) -> Vec<(String, f64)> {
        match self {
            SearchSpace::EnergyOffset { .. } => vec![("H".into(), 0.5 * p[0] * p[0])],
            SearchSpace::EnergyOffsetSingleField { order } => match order {
                1 => vec![("H".into(), p[0])],
                2 => vec![("H".into(), p[0]), ("J".into(), p[1])],
                _ => vec![("H".into(), 0.5 * p[0] * p[0])],
            },
            SearchSpace::TimeOffsetBangBang => vec![("H".into(), p[0])],
            SearchSpace::Amplitude { order } if *order == 1 => vec![
                ("I_x".into(), 1.0 - 2.0 * p[0]),
                ("I_y".into(), -2.0 * p[1]),
            ],
            _ => Vec::new(),
        }
    }
}

/// A point of a shooting landscape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingPoint {
    pub space: SearchSpace,
    pub params: Vec<f64>,
}

impl ShootingPoint {
    pub fn new(space: SearchSpace, params: Vec<f64>) -> Result<Self> {
        if params.len() != space.dim() {
            return Err(Error::config(format!(
                "space dimension {} does not match {} parameters",
                space.dim(),
                params.len()
            )));
        }
        Ok(ShootingPoint { space, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_the_landscape_counts() {
        assert_eq!(SearchSpace::EnergyOffset { order: 1 }.dim(), 2);
        assert_eq!(SearchSpace::EnergyOffset { order: 2 }.dim(), 4);
        assert_eq!(SearchSpace::TimeOffset { order: 3 }.dim(), 6);
        assert_eq!(SearchSpace::Amplitude { order: 2 }.dim(), 4);
        assert_eq!(
            SearchSpace::Ensemble {
                offsets: vec![-0.5, 0.5],
                cost: CostKind::Time
            }
            .dim(),
            2
        );
        assert_eq!(SearchSpace::GateTime { order: 1 }.dim(), 5);
        assert_eq!(SearchSpace::GateTime { order: 2 }.dim(), 8);
    }

    #[test]
    fn ensemble_closure_holds() {
        let space = SearchSpace::Ensemble {
            offsets: vec![-0.5, 0.0, 0.5],
            cost: CostKind::Time,
        };
        let v = space.initial_omegas(&[0.3, 0.2, 0.1, -0.4]).unwrap();
        let sx: f64 = v.iter().map(|l| l.x).sum();
        let sy: f64 = v.iter().map(|l| l.y).sum();
        assert!((sx - 1.0).abs() < 1e-15);
        assert!(sy.abs() < 1e-15);
        assert!(v.iter().all(|l| l.z == 0.0));
    }

    #[test]
    fn gate_sphere_parameterization_is_unit() {
        let space = SearchSpace::GateTime { order: 2 };
        let p = vec![0.3, -0.2, 0.1, 0.5, 0.6, -0.7, 1.1, 2.2];
        let v = space.initial_omegas(&p).unwrap();
        assert!((v.last().unwrap().norm() - 1.0).abs() < 1e-14);
        assert_eq!(v[0].z, 0.1);
    }

    #[test]
    fn single_field_embeddings_guard_their_domains() {
        let s2 = SearchSpace::EnergyOffsetSingleField { order: 2 };
        assert!(s2.initial_omegas(&[0.7256, 0.7985]).is_ok());
        assert!(s2.initial_omegas(&[-0.1, 0.5]).is_err());
        assert!(s2.initial_omegas(&[0.01, -3.0]).is_err());
        let bb = SearchSpace::TimeOffsetBangBang;
        assert!(bb.initial_omegas(&[1.0]).is_err());
        assert!(bb.initial_omegas(&[0.5]).is_ok());
    }

    #[test]
    fn parameter_count_is_validated() {
        let s = SearchSpace::EnergyOffset { order: 2 };
        assert!(s.initial_omegas(&[1.0, 2.0]).is_err());
        assert!(ShootingPoint::new(s, vec![1.0, 0.0, 1.0, 0.5]).is_ok());
    }
}
