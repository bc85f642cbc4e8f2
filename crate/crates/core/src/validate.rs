//! The acceptance-criteria engine shared by the `validate` CLI subcommand
//! and the acceptance test target: every reproduced optimum is pinned here
//! with its tolerance.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{AlphaO1Solution, BangBangSolution, EnergyO1Solution, RhoBranch};
use crate::bloch::{
    self, defect_scaling_slope, propagate_bloch_final, DynamicsConfig, ErrorAxis, NORTH_POLE,
    SOUTH_POLE,
};
use crate::elliptic::{ellip_f, ellip_k, jacobi_am};
use crate::error::Result;
use crate::field::ControlField;
use crate::flows::{run_flow, CostKind, SearchSpace, ShootingPoint};
use crate::grape::{self, grape_optimize, phase_guess_from_field, GrapeProblem};
use crate::linalg::Mat3;
use crate::search::{find_global, refine, SearchConfig, SynthesisRecord, TransferGoal};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} [{}] {} ({:.1}s) - {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.details
        )
    }
}

/// Collects sub-checks of one criterion.
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            passed: true,
            details: Vec::new(),
        }
    }

    fn close(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.passed &= ok;
        self.details.push(format!(
            "{label}={value:.6}{}",
            if ok {
                String::new()
            } else {
                format!(" (want {target:.6} +- {tol:.1e})")
            }
        ));
    }

    fn le(&mut self, label: &str, value: f64, bound: f64) {
        let ok = value <= bound;
        self.passed &= ok;
        self.details.push(format!(
            "{label}={value:.3e}{}",
            if ok {
                String::new()
            } else {
                format!(" (want <= {bound:.1e})")
            }
        ));
    }

    fn ge(&mut self, label: &str, value: f64, bound: f64) {
        let ok = value >= bound;
        self.passed &= ok;
        self.details.push(format!(
            "{label}={value:.4}{}",
            if ok {
                String::new()
            } else {
                format!(" (want >= {bound:.4})")
            }
        ));
    }

    fn is_true(&mut self, label: &str, ok: bool) {
        self.passed &= ok;
        self.details
            .push(format!("{label}={}", if ok { "yes" } else { "NO" }));
    }
}

/// Runs the acceptance criteria, caching the synthesized records that later
/// criteria reuse.
#[derive(Default)]
pub struct Validator {
    energy: [Option<SynthesisRecord>; 3],
    time: [Option<SynthesisRecord>; 3],
    alpha: [Option<SynthesisRecord>; 3],
    ensembles: Vec<Option<SynthesisRecord>>,
    gate1: Option<SynthesisRecord>,
}

const ENSEMBLE_OFFSETS: [&[f64]; 3] = [
    &[-0.5, 0.5],
    &[-0.5, 0.0, 0.5],
    &[-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5],
];

fn search_cfg(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        ..SearchConfig::default()
    }
}

impl Validator {
    pub fn new() -> Self {
        Validator {
            ensembles: vec![None, None, None],
            ..Default::default()
        }
    }

    fn energy_record(&mut self, order: usize) -> Result<SynthesisRecord> {
        if let Some(r) = &self.energy[order - 1] {
            return Ok(r.clone());
        }
        let record = match order {
            1 => {
                // 2-parameter landscape (Omega_0x(0), theta); a 3 pi
                // window brackets the optimum (t* = 1.48 pi) without
                // flooding the landscape with re-wound branches
                let space = SearchSpace::EnergyOffset { order: 1 };
                let cfg = SearchConfig {
                    t_max: 3.0 * PI,
                    multistart: Some(96),
                    ..search_cfg(1)
                };
                find_global(&space, &TransferGoal::Inversion, &cfg)?
            }
            2 => {
                let space = SearchSpace::EnergyOffsetSingleField { order: 2 };
                let cfg = SearchConfig {
                    t_max: 3.0 * PI,
                    ..search_cfg(2)
                };
                find_global(&space, &TransferGoal::Inversion, &cfg)?
            }
            _ => {
                // refined from the published seed of the 3-dimensional
                // single-field landscape
                let space = SearchSpace::EnergyOffsetSingleField { order: 3 };
                let point = ShootingPoint::new(space, vec![1.2384, 2.9848, -2.8019])?;
                let cfg = SearchConfig {
                    t_max: 3.5 * PI,
                    ..search_cfg(3)
                };
                let out = refine(&point, &TransferGoal::Inversion, &cfg, &cfg.dynamics)?;
                SynthesisRecord::from_refined(&out, &cfg.dynamics)?
            }
        };
        self.energy[order - 1] = Some(record.clone());
        Ok(record)
    }

    fn time_record(&mut self, order: usize) -> Result<SynthesisRecord> {
        if let Some(r) = &self.time[order - 1] {
            return Ok(r.clone());
        }
        let record = match order {
            1 => {
                let space = SearchSpace::TimeOffsetBangBang;
                // fine step throughout: near H -> 1 the switch shows up as
                // a grazing dip that a coarse exploration step cannot see
                let cfg = SearchConfig {
                    t_max: 3.0 * PI,
                    multistart: Some(24),
                    explore_step: 2e-3,
                    ..search_cfg(4)
                };
                find_global(&space, &TransferGoal::Inversion, &cfg)?
            }
            n => {
                let space = SearchSpace::TimeOffset { order: n };
                let cfg = SearchConfig {
                    t_max: if n == 2 { 4.0 * PI } else { 5.0 * PI },
                    multistart: Some(if n == 2 { 64 } else { 192 }),
                    explore_step: 6e-3,
                    ..search_cfg(5)
                };
                find_global(&space, &TransferGoal::Inversion, &cfg)?
            }
        };
        self.time[order - 1] = Some(record.clone());
        Ok(record)
    }

    fn alpha_record(&mut self, order: usize) -> Result<SynthesisRecord> {
        if let Some(r) = &self.alpha[order - 1] {
            return Ok(r.clone());
        }
        let space = SearchSpace::Amplitude { order };
        let cfg = SearchConfig {
            t_max: match order {
                1 => 3.0 * PI,
                2 => 4.0 * PI,
                _ => 5.0 * PI,
            },
            multistart: Some(match order {
                1 => 64,
                2 => 64,
                _ => 192,
            }),
            explore_step: 6e-3,
            ..search_cfg(6)
        };
        let record = find_global(&space, &TransferGoal::Inversion, &cfg)?;
        self.alpha[order - 1] = Some(record.clone());
        Ok(record)
    }

    fn ensemble_record(&mut self, idx: usize) -> Result<SynthesisRecord> {
        if let Some(r) = &self.ensembles[idx] {
            return Ok(r.clone());
        }
        let offsets = ENSEMBLE_OFFSETS[idx].to_vec();
        let n = offsets.len();
        let space = SearchSpace::Ensemble {
            offsets,
            cost: CostKind::Time,
        };
        let cfg = SearchConfig {
            t_max: (2.0 + n as f64) * PI,
            multistart: Some(match n {
                2 => 32,
                3 => 64,
                _ => 192,
            }),
            explore_step: 6e-3,
            ..search_cfg(10 + idx as u64)
        };
        let record = find_global(&space, &TransferGoal::Inversion, &cfg)?;
        self.ensembles[idx] = Some(record.clone());
        Ok(record)
    }

    pub fn run(&mut self, id: usize) -> CriterionResult {
        let start = std::time::Instant::now();
        let (name, outcome) = match id {
            1 => ("energy-offset order 1 optimum", self.criterion_1()),
            2 => ("energy-offset order 2 optimum", self.criterion_2()),
            3 => ("energy-offset order 3 optimum", self.criterion_3()),
            4 => ("time-offset order 1 bang-bang", self.criterion_4()),
            5 => ("time-offset orders 2/3 minimum times", self.criterion_5()),
            6 => ("amplitude orders 1/2/3 minimum times", self.criterion_6()),
            7 => ("defect scaling law", self.criterion_7()),
            8 => ("first-integral conservation", self.criterion_8()),
            9 => ("elliptic kernel and plug-backs", self.criterion_9()),
            10 => ("broadband ensemble inversion", self.criterion_10()),
            11 => ("GRAPE parity", self.criterion_11()),
            12 => ("robust NOT-gate synthesis", self.criterion_12()),
            other => (
                "unknown",
                Err(crate::Error::config(format!("no criterion {other}"))),
            ),
        };
        let (passed, details) = match outcome {
            Ok(c) => (c.passed, c.details.join(", ")),
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionResult {
            id,
            name: name.to_string(),
            passed,
            details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    pub fn run_all(&mut self, only: Option<&[usize]>) -> Vec<CriterionResult> {
        let ids: Vec<usize> = match only {
            Some(ids) => ids.to_vec(),
            None => (1..=12).collect(),
        };
        ids.into_iter().map(|id| self.run(id)).collect()
    }

    fn criterion_1(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let r = self.energy_record(1)?;
        let h = named(&r.derived, "H");
        c.close("H", h, 0.6522, 1e-3);
        c.close("A*/pi", r.area / PI, 1.45, 0.01);
        let t_expected = 2.0 * ellip_k(0.5 * (1.0 + h))?;
        c.close("t*", r.tstar, t_expected, 1e-3);
        Ok(c)
    }

    fn criterion_2(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let r = self.energy_record(2)?;
        c.close("H", named(&r.derived, "H"), 0.7256, 5e-3);
        c.close("J", named(&r.derived, "J"), 0.7985, 5e-3);
        c.close("t*/pi", r.tstar / PI, 1.95, 0.01);
        c.close("A*/pi", r.area / PI, 1.81, 0.02);
        c.le("|F*|", r.fstar.abs(), 1e-5);
        Ok(c)
    }

    fn criterion_3(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let r = self.energy_record(3)?;
        c.le("|F*|", r.fstar.abs(), 1e-6);
        c.close("t*/pi", r.tstar / PI, 2.43, 0.01);
        c.close("A*/pi", r.area / PI, 2.11, 0.02);
        Ok(c)
    }

    fn criterion_4(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let r = self.time_record(1)?;
        c.is_true("single switch", r.switches.len() == 1);
        if let Some(&t1) = r.switches.first() {
            c.close("switch", t1, 1.5 * PI, 1e-4);
        }
        c.close("t*", r.tstar, 2.0 * PI, 1e-4);
        Ok(c)
    }

    fn criterion_5(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let r2 = self.time_record(2)?;
        c.close("t*(N=2)/pi", r2.tstar / PI, 2.44, 0.03);
        let r3 = self.time_record(3)?;
        c.close("t*(N=3)/pi", r3.tstar / PI, 3.54, 0.03);
        Ok(c)
    }

    fn criterion_6(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let targets = [1.86, 2.71, 3.56];
        for order in 1..=3 {
            let r = self.alpha_record(order)?;
            c.close(
                &format!("t_f(N={order})/pi"),
                r.tstar / PI,
                targets[order - 1],
                0.03,
            );
            if order == 1 {
                let ix = named(&r.derived, "I_x");
                let iy = named(&r.derived, "I_y");
                c.close("I_x", ix, 0.6995, 5e-3);
                c.close("I_y", iy, 1.1192, 5e-3);
                let sol = AlphaO1Solution::new(ix, iy)?;
                c.close("t_f-4K/w", r.tstar, sol.tf, 2e-3);
            }
        }
        Ok(c)
    }

    fn criterion_7(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let cfg = DynamicsConfig::default();
        let epsilons: Vec<f64> = (0..7).map(|i| 1e-3 * 10f64.powf(i as f64 / 6.0)).collect();
        for order in 1..=3 {
            for (tag, record) in [
                ("energy", self.energy_record(order)?),
                ("time", self.time_record(order)?),
            ] {
                let field = record.field.as_ref().expect("record keeps its field");
                let slope =
                    defect_scaling_slope(field, ErrorAxis::Offset, SOUTH_POLE, &epsilons, &cfg)?;
                c.ge(
                    &format!("slope({tag} N={order})"),
                    slope,
                    order as f64 + 0.9,
                );
            }
        }
        Ok(c)
    }

    fn criterion_8(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let cfg = DynamicsConfig::default();
        let runs: Vec<(&str, ShootingPoint, f64)> = vec![
            (
                "energy N=1",
                ShootingPoint::new(
                    SearchSpace::EnergyOffsetSingleField { order: 1 },
                    vec![0.6522],
                )?,
                2.0 * PI,
            ),
            (
                "energy N=2",
                ShootingPoint::new(
                    SearchSpace::EnergyOffsetSingleField { order: 2 },
                    vec![0.7256, 0.7985],
                )?,
                2.0 * PI,
            ),
            (
                "energy N=3",
                ShootingPoint::new(
                    SearchSpace::EnergyOffsetSingleField { order: 3 },
                    vec![1.2384, 2.9848, -2.8019],
                )?,
                2.5 * PI,
            ),
            (
                "time N=1 smooth",
                ShootingPoint::new(SearchSpace::TimeOffset { order: 1 }, vec![1.5, 0.4])?,
                2.0 * PI,
            ),
            (
                "time N=1 bang-bang",
                ShootingPoint::new(SearchSpace::TimeOffsetBangBang, vec![0.8])?,
                2.0 * PI,
            ),
            (
                "amplitude N=1",
                ShootingPoint::new(
                    SearchSpace::Amplitude { order: 1 },
                    vec![(1.0 - 0.6995) / 2.0, -1.1192 / 2.0],
                )?,
                2.0 * PI,
            ),
            (
                "ensemble N=2",
                ShootingPoint::new(
                    SearchSpace::Ensemble {
                        offsets: vec![-0.5, 0.5],
                        cost: CostKind::Time,
                    },
                    vec![0.5, 0.3],
                )?,
                2.0 * PI,
            ),
            (
                "gate N=1",
                ShootingPoint::new(
                    SearchSpace::GateTime { order: 1 },
                    vec![2.0, 0.1, 0.3, 1.0, 0.5],
                )?,
                2.0 * PI,
            ),
        ];
        for (label, point, t_final) in runs {
            let traj = run_flow(&point, t_final, &cfg)?;
            c.le(&format!("drift({label})"), traj.audit.max_drift(), 1e-8);
        }
        Ok(c)
    }

    fn criterion_9(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        // round trip F(am(u, m), m) = u
        let mut worst = 0.0f64;
        for &m in &[0.1, 0.5, 0.9] {
            let k = ellip_k(m)?;
            for i in 0..=64 {
                let u = -4.0 * k + 8.0 * k * i as f64 / 64.0;
                let err = (ellip_f(jacobi_am(u, m)?, m)? - u).abs();
                worst = worst.max(err);
            }
        }
        c.le("round-trip", worst, 1e-10);

        let cfg = DynamicsConfig::default();
        // energy order-1 plug-back
        let sol = EnergyO1Solution::new(0.6522, RhoBranch::Negative)?;
        let point = ShootingPoint::new(
            SearchSpace::EnergyOffsetSingleField { order: 1 },
            vec![0.6522],
        )?;
        let traj = run_flow(&point, sol.tstar, &cfg)?;
        let mut dev = 0.0f64;
        for (t, s) in traj.times.iter().zip(traj.states.iter()) {
            dev = dev.max((s[0].x - sol.omega_0x(*t)).abs());
            let (o1y, o1z) = sol.omega_1(*t);
            dev = dev.max((s[1].y - o1y).abs()).max((s[1].z - o1z).abs());
        }
        c.le("energy-O1 plug-back", dev, 1e-6);

        // amplitude order-1 plug-back
        let alpha = AlphaO1Solution::new(0.6995, 1.1192)?;
        let point = ShootingPoint::new(
            SearchSpace::Amplitude { order: 1 },
            vec![(1.0 - alpha.ix) / 2.0, -alpha.iy / 2.0],
        )?;
        let traj = run_flow(&point, alpha.tf, &cfg)?;
        let mut dev = 0.0f64;
        for (t, s) in traj.times.iter().zip(traj.states.iter()) {
            dev = dev.max((s[0].z - alpha.omega_0z(*t)).abs());
        }
        c.le("alpha-O1 plug-back", dev, 1e-6);

        // bang-bang plug-back
        let bb = BangBangSolution::new(0.8)?;
        let point = ShootingPoint::new(SearchSpace::TimeOffsetBangBang, vec![0.8])?;
        let traj = run_flow(&point, bb.period, &cfg)?;
        let mut dev = 0.0f64;
        for (t, s) in traj.times.iter().zip(traj.states.iter()) {
            let (o0x, o1y, o1z) = bb.omega(*t);
            dev = dev
                .max((s[0].x - o0x).abs())
                .max((s[1].y - o1y).abs())
                .max((s[1].z - o1z).abs());
        }
        c.le("bang-bang plug-back", dev, 1e-6);

        // plug-forward: analytic fields achieve the robust transfer
        let (field, tstar) = crate::analytic::energy_o1_field(0.6522, RhoBranch::Negative, 1e-3)?;
        let stack = bloch::PerturbativeStack::initial(bloch::CascadeMode::StateOffset, 1);
        let fin = bloch::propagate_cascade_final(&field, &stack, tstar, &cfg)?;
        let f = bloch::robust_fidelity(&fin, &bloch::TransferTarget::State(SOUTH_POLE))?;
        c.le("energy-O1 plug-forward |F|", f.abs(), 1e-4);
        Ok(c)
    }

    fn criterion_10(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let cfg = DynamicsConfig::default();
        for idx in 0..3 {
            let offsets = ENSEMBLE_OFFSETS[idx];
            let r = self.ensemble_record(idx)?;
            let field = r.field.as_ref().expect("record keeps its field");
            let mut worst = -1.0f64;
            for &delta in offsets {
                let q = propagate_bloch_final(field, delta, 0.0, NORTH_POLE, r.tstar, &cfg)?;
                worst = worst.max(q.z);
            }
            c.le(&format!("max z_k (N={})", offsets.len()), worst, -0.999);
        }
        // two-spin cross-check: the residual of the co-integrated flow run
        // against the re-propagated sampled field
        let r2 = self.ensemble_record(0)?;
        let field = r2.field.as_ref().unwrap();
        let flow_residual = (-r2.fstar).sqrt();
        let mut direct = 0.0f64;
        for &delta in ENSEMBLE_OFFSETS[0] {
            let q = propagate_bloch_final(field, delta, 0.0, NORTH_POLE, r2.tstar, &cfg)?;
            direct += (q - SOUTH_POLE).norm2();
        }
        let direct_residual = direct.sqrt();
        c.le(
            "|flow6 - direct| residual gap",
            (flow_residual - direct_residual).abs(),
            1e-3,
        );
        Ok(c)
    }

    fn criterion_11(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let pmp = self.ensemble_record(2)?;
        let field = pmp.field.as_ref().unwrap();
        let duration = pmp.tstar;
        let segments = ((duration / 8e-3).round() as usize).max(64);
        let training = grape::uniform_offsets(100, -0.5, 0.5);

        let mut guess = phase_guess_from_field(field, segments);
        let bump = grape::smooth_random_phase(segments, 0.03, 11);
        for (g, b) in guess.iter_mut().zip(bump.iter()) {
            *g += b;
        }
        let problem = GrapeProblem::new(training.clone(), duration, guess)?;
        let out = grape_optimize(&problem, 4000, 0.5)?;

        let cfg = DynamicsConfig::default();
        let pmp_mean = training
            .par_iter()
            .map(|&d| {
                propagate_bloch_final(field, d, 0.0, NORTH_POLE, duration, &cfg)
                    .map(|q| -q.z)
                    .unwrap_or(f64::NAN)
            })
            .sum::<f64>()
            / training.len() as f64;
        c.close("mean-F gap", out.mean_fidelity - pmp_mean, 0.0, 1e-3);

        let grid: Vec<f64> = grape::uniform_offsets(1000, -0.6, 0.6);
        let profile_of = |f: &ControlField| -> Vec<f64> {
            grid.par_iter()
                .map(|&d| {
                    propagate_bloch_final(f, d, 0.0, NORTH_POLE, f.duration(), &cfg)
                        .map(|q| -q.z)
                        .unwrap_or(f64::NAN)
                })
                .collect()
        };
        let pmp_profile = profile_of(field);
        let grape_profile = profile_of(&out.field);
        let pmp_peaks = count_local_maxima(&pmp_profile, 1e-4);
        let grape_peaks = count_local_maxima(&grape_profile, 1e-4);
        c.is_true(
            &format!("peak counts {pmp_peaks} vs {grape_peaks}"),
            pmp_peaks == grape_peaks,
        );
        Ok(c)
    }

    fn criterion_12(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let goal = TransferGoal::not_gate();
        let cfg1 = SearchConfig {
            t_max: 4.0 * PI,
            multistart: Some(96),
            explore_step: 6e-3,
            ..search_cfg(12)
        };
        let r1 = find_global(&SearchSpace::GateTime { order: 1 }, &goal, &cfg1)?;
        c.le("order-1 residual", r1.fstar.abs().sqrt(), 1e-3);
        self.gate1 = Some(r1);

        // the order-2 gate is only approximately robust (the inhomogeneous
        // part cancels to ~0.1); the search accepts candidates with total
        // residual below sqrt(1e-2) = 0.1 and minimizes time among them
        let cfg2 = SearchConfig {
            t_max: 5.0 * PI,
            multistart: Some(160),
            explore_step: 8e-3,
            robust_tol: 1e-2,
            f_target: 1e-5,
            max_refine_iters: 30,
            ..search_cfg(13)
        };
        let r2 = find_global(&SearchSpace::GateTime { order: 2 }, &goal, &cfg2)?;
        // split the defect into homogeneous and inhomogeneous parts via an
        // independent re-propagation of the sampled field
        let field = r2.field.as_ref().unwrap();
        let stack = bloch::PerturbativeStack::initial(bloch::CascadeMode::GateOffset, 2);
        let fin =
            bloch::propagate_cascade_final(field, &stack, r2.tstar, &DynamicsConfig::default())?;
        let ms = fin.matrices().unwrap();
        let hom = Mat3::diag(1.0, -1.0, -1.0).sub(&ms[0]).frobenius_norm();
        let inhom = (ms[1].frobenius_norm2() + ms[2].frobenius_norm2()).sqrt();
        c.le("order-2 inhomogeneous residual", inhom, 0.1);
        c.details.push(format!("order-2 homogeneous residual={hom:.3e}"));
        Ok(c)
    }
}

fn named(derived: &[(String, f64)], key: &str) -> f64 {
    derived
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN)
}

/// Local maxima counted by persistence: adjacent maxima merge when the
/// valley between them is shallower than `prominence`, so numerical
/// wiggles never inflate the count.
pub fn count_local_maxima(values: &[f64], prominence: f64) -> usize {
    let mut count = 0;
    let mut going_up = true;
    let mut peak = f64::NEG_INFINITY;
    let mut valley = f64::INFINITY;
    for &x in values {
        if going_up {
            if x > peak {
                peak = x;
            } else if peak - x >= prominence {
                count += 1;
                valley = x;
                going_up = false;
            }
        } else if x < valley {
            valley = x;
        } else if x - valley >= prominence {
            peak = x;
            going_up = true;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_counter_respects_prominence() {
        let v = [0.0, 1.0, 0.5, 1.0, 0.9999, 1.0, 0.0];
        // the middle wiggle at 0.9999 has prominence 1e-4 on one side only
        assert_eq!(count_local_maxima(&v, 1e-2), 2);
        let w = [0.0, 1.0, 0.2, 0.8, 0.1, 0.9, 0.0];
        assert_eq!(count_local_maxima(&w, 1e-2), 3);
    }
}
