//! Conserved quantities of the flow systems and their drift audit.
//!
//! Every variant carries a catalog of first integrals that are evaluated
//! along each integrated trajectory; the recorded maximum drift doubles as
//! a numerical health check of the run (a valid trajectory at the default
//! step keeps every drift below ~1e-8).

use serde::{Deserialize, Serialize};

use super::{CostKind, FlowVariant};
use crate::linalg::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) enum Integral {
    /// 1/2 (O0x^2 + O0y^2) + O1z  (energy cost)
    EnergyH,
    /// r + O1z with r = |O0_perp|  (time cost, also the gate flow)
    TimeH,
    /// O0z (zero for state transfers from the pole, I for gates)
    Omega0z,
    /// |O_N|^2 of the last stacked vector
    NormLastSq,
    /// O1 . O2
    DotI12,
    /// 1/2 |O1|^2 + O0 . O2
    EnergyJ,
    /// O0 . O1 + O2z
    EnergyK,
    /// O0 . O1
    Dot01,
    /// O1y^2 + O1z^2 (single-field order-1 momentum norm)
    EllYZ,
    /// O2x^2 + 2 O1y O3y + 2 O1z O3z (single-field order 3)
    O3TwoI,
    /// O1y^2 + O1z^2 + 2 O0x O2x + 2 O3z (single-field order 3)
    O3TwoJ,
    /// O3y^2 + O3z^2 (single-field order 3)
    O3NormYZ,
    /// O0z - O1z (amplitude order 1)
    AlphaZDiff,
    /// O0x - 2 O1x (amplitude order 1)
    AlphaIx,
    /// O0y - 2 O1y (amplitude order 1)
    AlphaIy,
    /// O0 . O1 (amplitude order 1)
    AlphaJ,
    /// |O1| (amplitude order 1)
    AlphaM,
    /// O0x^2 + O0y^2 (the amplitude flow keeps the field on the unit circle)
    AmpUnit,
    /// Pontryagin constant of the ensemble flow
    EnsembleH,
    /// |l_k| of ensemble member k
    EnsembleNorm(usize),
}

impl Integral {
    pub fn name(&self) -> String {
        match self {
            Integral::EnergyH => "H".into(),
            Integral::TimeH => "H".into(),
            Integral::Omega0z => "Omega_0z".into(),
            Integral::NormLastSq => "|Omega_N|^2".into(),
            Integral::DotI12 => "I".into(),
            Integral::EnergyJ => "J".into(),
            Integral::EnergyK => "K".into(),
            Integral::Dot01 => "I".into(),
            Integral::EllYZ => "l".into(),
            Integral::O3TwoI => "2I".into(),
            Integral::O3TwoJ => "2J".into(),
            Integral::O3NormYZ => "|Omega_3,yz|^2".into(),
            Integral::AlphaZDiff => "Omega_0z-Omega_1z".into(),
            Integral::AlphaIx => "I_x".into(),
            Integral::AlphaIy => "I_y".into(),
            Integral::AlphaJ => "J".into(),
            Integral::AlphaM => "M".into(),
            Integral::AmpUnit => "|u|^2".into(),
            Integral::EnsembleH => "H".into(),
            Integral::EnsembleNorm(k) => format!("|l_{k}|"),
        }
    }

    pub fn eval(&self, s: &[Vec3], variant: &FlowVariant) -> f64 {
        let last = s.len() - 1;
        match self {
            Integral::EnergyH => 0.5 * (s[0].x * s[0].x + s[0].y * s[0].y) + s[1].z,
            Integral::TimeH => s[0].norm_xy() + s[1].z,
            Integral::Omega0z => s[0].z,
            Integral::NormLastSq => s[last].norm2(),
            Integral::DotI12 => s[1].dot(s[2]),
            Integral::EnergyJ => 0.5 * s[1].norm2() + s[0].dot(s[2]),
            Integral::EnergyK => s[0].dot(s[1]) + s[2].z,
            Integral::Dot01 => s[0].dot(s[1]),
            Integral::EllYZ => s[1].y * s[1].y + s[1].z * s[1].z,
            Integral::O3TwoI => s[2].x * s[2].x + 2.0 * s[1].y * s[3].y + 2.0 * s[1].z * s[3].z,
            Integral::O3TwoJ => {
                s[1].y * s[1].y + s[1].z * s[1].z + 2.0 * s[0].x * s[2].x + 2.0 * s[3].z
            }
            Integral::O3NormYZ => s[3].y * s[3].y + s[3].z * s[3].z,
            Integral::AlphaZDiff => s[0].z - s[1].z,
            Integral::AlphaIx => s[0].x - 2.0 * s[1].x,
            Integral::AlphaIy => s[0].y - 2.0 * s[1].y,
            Integral::AlphaJ => s[0].dot(s[1]),
            Integral::AlphaM => s[1].norm(),
            Integral::AmpUnit => s[0].x * s[0].x + s[0].y * s[0].y,
            Integral::EnsembleH => {
                let (offsets, cost) = match variant {
                    FlowVariant::Ensemble { offsets, cost } => (offsets, cost),
                    _ => return f64::NAN,
                };
                let mut sx = 0.0;
                let mut sy = 0.0;
                let mut dz = 0.0;
                for (k, &d) in offsets.iter().enumerate() {
                    sx += s[k].x;
                    sy += s[k].y;
                    dz += d * s[k].z;
                }
                let r = sx.hypot(sy);
                match cost {
                    CostKind::Time => r + dz,
                    CostKind::Energy => 0.5 * r * r + dz,
                }
            }
            Integral::EnsembleNorm(k) => s[*k].norm(),
        }
    }
}

/// Full catalog of the constants of motion audited for a variant.
/// `single_field` adds the extra constants that hold on the u_y = 0
/// invariant subspaces of the energy flow.
pub(crate) fn catalog(variant: &FlowVariant, single_field: bool) -> Vec<Integral> {
    match variant {
        FlowVariant::EnergyOffset { order } => {
            let mut c = vec![Integral::EnergyH, Integral::Omega0z, Integral::NormLastSq];
            if *order == 1 && single_field {
                c.push(Integral::EllYZ);
            }
            if *order == 2 {
                c.extend([Integral::DotI12, Integral::EnergyJ, Integral::EnergyK]);
            }
            if *order == 3 && single_field {
                c.extend([Integral::O3TwoI, Integral::O3TwoJ, Integral::O3NormYZ]);
            }
            c
        }
        FlowVariant::TimeOffset { order } => {
            let mut c = vec![Integral::TimeH, Integral::Omega0z, Integral::NormLastSq];
            if *order == 1 {
                c.push(Integral::Dot01);
            }
            c
        }
        FlowVariant::Amplitude { order } => {
            let mut c = vec![Integral::AmpUnit];
            if *order == 1 {
                c.extend([
                    Integral::AlphaZDiff,
                    Integral::AlphaIx,
                    Integral::AlphaIy,
                    Integral::AlphaJ,
                    Integral::AlphaM,
                ]);
            }
            c
        }
        FlowVariant::Ensemble { offsets, .. } => {
            let mut c = vec![Integral::EnsembleH];
            c.extend((0..offsets.len()).map(Integral::EnsembleNorm));
            c
        }
        FlowVariant::GateTime { .. } => vec![
            Integral::TimeH,
            Integral::Omega0z,
            Integral::NormLastSq,
        ],
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegralDrift {
    pub name: String,
    pub initial: f64,
    pub max_drift: f64,
}

/// Named conserved quantities of a run and their maximum drift.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FirstIntegralAudit {
    pub entries: Vec<IntegralDrift>,
}

impl FirstIntegralAudit {
    pub fn max_drift(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_drift)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&IntegralDrift> {
        self.entries.iter().find(|e| e.name == name)
    }
}

pub(crate) struct AuditTracker<'a> {
    catalog: Vec<Integral>,
    variant: &'a FlowVariant,
    initial: Option<Vec<f64>>,
    drift: Vec<f64>,
}

impl<'a> AuditTracker<'a> {
    pub fn new(catalog: Vec<Integral>, variant: &'a FlowVariant) -> Self {
        let n = catalog.len();
        AuditTracker {
            catalog,
            variant,
            initial: None,
            drift: vec![0.0; n],
        }
    }

    pub fn record(&mut self, state: &[Vec3]) {
        match &self.initial {
            None => {
                self.initial = Some(
                    self.catalog
                        .iter()
                        .map(|c| c.eval(state, self.variant))
                        .collect(),
                );
            }
            Some(init) => {
                for (i, c) in self.catalog.iter().enumerate() {
                    let d = (c.eval(state, self.variant) - init[i]).abs();
                    if d > self.drift[i] {
                        self.drift[i] = d;
                    }
                }
            }
        }
    }

    pub fn finish(self) -> FirstIntegralAudit {
        let initial = self.initial.unwrap_or_default();
        FirstIntegralAudit {
            entries: self
                .catalog
                .iter()
                .zip(initial.iter().zip(self.drift.iter()))
                .map(|(c, (i, d))| IntegralDrift {
                    name: c.name(),
                    initial: *i,
                    max_drift: *d,
                })
                .collect(),
        }
    }
}

/// Evaluates every cataloged first integral of a variant at one state.
pub fn first_integrals(
    variant: &FlowVariant,
    single_field: bool,
    state: &[Vec3],
) -> Vec<(String, f64)> {
    catalog(variant, single_field)
        .iter()
        .map(|c| (c.name(), c.eval(state, variant)))
        .collect()
}
