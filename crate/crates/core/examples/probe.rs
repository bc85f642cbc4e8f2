// Scratch probe for search calibration (not part of the deliverable API).
use std::f64::consts::PI;
use std::time::Instant;

use pulseforge::bloch::DynamicsConfig;
use pulseforge::flows::{CostKind, SearchSpace, ShootingPoint};
use pulseforge::search::{find_global, objective, refine, SearchConfig, TransferGoal};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "obj1".into());
    let t0 = Instant::now();
    match which.as_str() {
        "obj1" => {
            // objective at the analytic energy order-1 optimum
            let pt = ShootingPoint::new(
                SearchSpace::EnergyOffsetSingleField { order: 1 },
                vec![0.6522],
            )
            .unwrap();
            let o = objective(
                &pt,
                &TransferGoal::Inversion,
                3.0 * PI,
                &DynamicsConfig::default(),
            )
            .unwrap();
            println!(
                "F*={:.3e} t*={:.6} ({}pi) area={:.6} ({}pi) branch={:?}",
                o.fstar,
                o.tstar,
                o.tstar / PI,
                o.area,
                o.area / PI,
                o.branch_angle
            );
            println!("expected t* = {:.6}", 2.0 * pulseforge::elliptic::ellip_k((1.0 + 0.6522) / 2.0).unwrap());
            println!("audit max drift = {:.3e}", o.audit.max_drift());
        }
        "obj1g" => {
            // same optimum through the general 2-parameter space
            let pt = ShootingPoint::new(
                SearchSpace::EnergyOffset { order: 1 },
                vec![(2.0f64 * 0.6522).sqrt(), PI / 2.0],
            )
            .unwrap();
            let o = objective(
                &pt,
                &TransferGoal::Inversion,
                3.0 * PI,
                &DynamicsConfig::default(),
            )
            .unwrap();
            println!(
                "F*={:.3e} t*={:.6} area/pi={:.6} branch={:?}",
                o.fstar,
                o.tstar,
                o.area / PI,
                o.branch_angle
            );
        }
        "obj2" => {
            let pt = ShootingPoint::new(
                SearchSpace::EnergyOffsetSingleField { order: 2 },
                vec![0.7256, 0.7985],
            )
            .unwrap();
            let o = objective(
                &pt,
                &TransferGoal::Inversion,
                3.0 * PI,
                &DynamicsConfig::default(),
            )
            .unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} area/pi={:.6}",
                o.fstar,
                o.tstar / PI,
                o.area / PI
            );
            println!("audit max drift = {:.3e}", o.audit.max_drift());
        }
        "obj3" => {
            let pt = ShootingPoint::new(
                SearchSpace::EnergyOffsetSingleField { order: 3 },
                vec![1.2384, 2.9848, -2.8019],
            )
            .unwrap();
            let o = objective(
                &pt,
                &TransferGoal::Inversion,
                3.5 * PI,
                &DynamicsConfig::default(),
            )
            .unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} area/pi={:.6}",
                o.fstar,
                o.tstar / PI,
                o.area / PI
            );
        }
        "refine3" => {
            let pt = ShootingPoint::new(
                SearchSpace::EnergyOffsetSingleField { order: 3 },
                vec![1.2384, 2.9848, -2.8019],
            )
            .unwrap();
            let cfg = SearchConfig {
                t_max: 3.5 * PI,
                ..SearchConfig::default()
            };
            let out = refine(&pt, &TransferGoal::Inversion, &cfg, &cfg.dynamics).unwrap();
            println!(
                "converged={} iters={} F*={:.3e} t*/pi={:.6} area/pi={:.6} p={:?}",
                out.converged,
                out.iterations,
                out.objective.fstar,
                out.objective.tstar / PI,
                out.objective.area / PI,
                out.point.params
            );
        }
        "bb" => {
            let pt = ShootingPoint::new(SearchSpace::TimeOffsetBangBang, vec![0.99]).unwrap();
            let o = objective(
                &pt,
                &TransferGoal::Inversion,
                3.0 * PI,
                &DynamicsConfig::default(),
            )
            .unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} switches={:?}",
                o.fstar,
                o.tstar / PI,
                o.switches
            );
        }
        "diag1" => {
            use pulseforge::bloch::DynamicsConfig;
            let cfg = SearchConfig {
                seed: 1,
                t_max: std::env::args().nth(2).map(|v| v.parse::<f64>().unwrap()).unwrap_or(6.0) / 2.0 * 2.0 * PI / 2.0,
                ..SearchConfig::default()
            };
            let t_max = std::env::args().nth(2).map(|v| v.parse::<f64>().unwrap_or(3.0)).unwrap_or(3.0) * PI;
            let cfg = SearchConfig { t_max, ..cfg };
            let space = SearchSpace::EnergyOffset { order: 1 };
            let bounds = space.default_box();
            let n = std::env::args().nth(3).map(|v| v.parse::<usize>().unwrap()).unwrap_or(64);
            let explore = DynamicsConfig::with_step(cfg.explore_step);
            let mut found: Vec<(f64,f64,f64,Vec<f64>)> = Vec::new();
            for i in 0..n {
                // crude stratified starts
                let a = bounds[0].0 + (bounds[0].1-bounds[0].0) * ((i % 8) as f64 + 0.5) / 8.0;
                let b = bounds[1].0 + (bounds[1].1-bounds[1].0) * ((i / 8) as f64 + 0.5) / ((n as f64 /8.0).ceil());
                let pt = ShootingPoint::new(space.clone(), vec![a, b]).unwrap();
                if let Ok(out) = refine(&pt, &TransferGoal::Inversion, &cfg, &explore) {
                    if out.objective.fstar.abs() <= 1e-6 {
                        found.push((out.objective.area/PI, out.objective.tstar/PI, out.objective.fstar, out.point.params.clone()));
                    }
                }
            }
            found.sort_by(|x,y| x.0.partial_cmp(&y.0).unwrap());
            for f in found.iter().take(12) {
                println!("area/pi={:.5} t*/pi={:.5} F*={:.2e} p={:?}", f.0, f.1, f.2, f.3);
            }
            println!("{} robust candidates", found.len());
        }
        "global1" => {
            let cfg = SearchConfig {
                seed: 1,
                t_max: 3.0 * PI,
                multistart: Some(96),
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::EnergyOffset { order: 1 },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "H={:?} F*={:.3e} t*={:.6} area/pi={:.6} params={:?} conv={}",
                r.derived, r.fstar, r.tstar, r.area / PI, r.params, r.converged
            );
        }
        "global2" => {
            let cfg = SearchConfig {
                seed: 2,
                t_max: 3.0 * PI,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::EnergyOffsetSingleField { order: 2 },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "derived={:?} F*={:.3e} t*/pi={:.6} area/pi={:.6}",
                r.derived,
                r.fstar,
                r.tstar / PI,
                r.area / PI
            );
        }
        "globalbb" => {
            let cfg = SearchConfig {
                seed: 4,
                t_max: 3.0 * PI,
                multistart: Some(24),
                explore_step: 2e-3,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::TimeOffsetBangBang,
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "H={:?} F*={:.3e} t*={:.8} (2pi={:.8}) switches={:?}",
                r.derived,
                r.fstar,
                r.tstar,
                2.0 * PI,
                r.switches
            );
        }
        "ens2" => {
            use pulseforge::search::solve_bvp_fixed_time_for_probe as solve_fixed;
            let space = SearchSpace::Ensemble { offsets: vec![-0.5, 0.5], cost: CostKind::Time };
            let cfg = SearchConfig {
                seed: 10,
                t_max: 3.5 * PI,
                explore_step: 2e-3,
                max_refine_iters: 160,
                ..SearchConfig::default()
            };
            for tf in [2.0, 2.1, 2.13, 2.2, 2.3, 2.5] {
                let (best, p) = solve_fixed(&space, &TransferGoal::Inversion, tf * PI, 32, &cfg);
                println!("seed tf/pi={:.3} min|res|^2={:.3e} p={:?}", tf, best, p);
            }
        }
        "t3grid" => {
            use pulseforge::search::solve_bvp_fixed_time_for_probe as solve_fixed;
            let space = SearchSpace::TimeOffset { order: 3 };
            let starts: usize = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(64);
            let cfg = SearchConfig {
                seed: 5,
                t_max: 4.4 * PI,
                explore_step: 6e-3,
                max_refine_iters: 60,
                ..SearchConfig::default()
            };
            for tf in [3.3, 3.45, 3.6, 3.75, 3.9] {
                let (best, p) = solve_fixed(&space, &TransferGoal::Inversion, tf * PI, starts, &cfg);
                println!("seed tf/pi={:.3} min|res|^2={:.3e} p={:?}", tf, best, p);
            }
        }
        "evalpt" => {
            // evalpt <variant> <order> <tmax/pi> <params...>
            let a: Vec<String> = std::env::args().collect();
            let variant = a[2].clone();
            let order: usize = a[3].parse().unwrap();
            let tmax: f64 = a[4].parse::<f64>().unwrap() * PI;
            let params: Vec<f64> = a[5..].iter().map(|v| v.parse().unwrap()).collect();
            let space = match variant.as_str() {
                "time" => SearchSpace::TimeOffset { order },
                "alpha" => SearchSpace::Amplitude { order },
                "gate" => SearchSpace::GateTime { order },
                "energy" => SearchSpace::EnergyOffset { order },
                _ => panic!("bad variant"),
            };
            let goal = if variant == "gate" {
                TransferGoal::not_gate()
            } else {
                TransferGoal::Inversion
            };
            let pt = ShootingPoint::new(space, params).unwrap();
            let o = objective(&pt, &goal, tmax, &DynamicsConfig::default()).unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} area/pi={:.6} switches={:?} drift={:.2e}",
                o.fstar,
                o.tstar / PI,
                o.area / PI,
                o.switches,
                o.audit.max_drift()
            );
        }
        "t3" => {
            use pulseforge::search::solve_bvp_fixed_time_for_probe as solve_fixed;
            let space = SearchSpace::TimeOffset { order: 3 };
            let starts: usize = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(128);
            let bounds = vec![
                (0.0, 14.0),   // Omega_0x
                (-7.0, 7.0),   // Omega_1x
                (-7.0, 7.0),   // Omega_1y
                (-4.0, 4.0),   // Omega_2x
                (-4.0, 4.0),   // Omega_2y
                (-PI, PI),     // theta
            ];
            let cfg = SearchConfig {
                seed: 5,
                t_max: 4.2 * PI,
                explore_step: 6e-3,
                max_refine_iters: 80,
                box_override: Some(bounds),
                ..SearchConfig::default()
            };
            for tf in [3.45, 3.54, 3.6] {
                let (best, p) = solve_fixed(&space, &TransferGoal::Inversion, tf * PI, starts, &cfg);
                println!("tf/pi={:.3} min|res|^2={:.3e} p={:?}", tf, best, p);
            }
        }
        "sweep" => {
            // seeded feasibility probe: sweep <variant> <order> <tf_lo/pi> <tf_hi/pi> <pts> <starts> <scale>
            use pulseforge::search::solve_bvp_fixed_time_for_probe as solve_fixed;
            let a: Vec<String> = std::env::args().collect();
            let variant = a[2].clone();
            let order: usize = a[3].parse().unwrap();
            let lo: f64 = a[4].parse().unwrap();
            let hi: f64 = a[5].parse().unwrap();
            let pts: usize = a[6].parse().unwrap();
            let starts: usize = a[7].parse().unwrap();
            let scale: f64 = a[8].parse().unwrap();
            let space = match variant.as_str() {
                "time" => SearchSpace::TimeOffset { order },
                "alpha" => SearchSpace::Amplitude { order },
                "gate" => SearchSpace::GateTime { order },
                "ens" => SearchSpace::Ensemble {
                    offsets: match order {
                        2 => vec![-0.5, 0.5],
                        3 => vec![-0.5, 0.0, 0.5],
                        _ => vec![-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5],
                    },
                    cost: CostKind::Time,
                },
                _ => panic!("bad variant"),
            };
            let goal = if variant == "gate" {
                TransferGoal::not_gate()
            } else {
                TransferGoal::Inversion
            };
            let cfg = SearchConfig {
                seed: 5,
                t_max: (hi + 0.5) * PI,
                explore_step: 6e-3,
                max_refine_iters: 80,
                ..SearchConfig::default()
            };
            let bounds: Vec<(f64, f64)> = space
                .default_box()
                .iter()
                .map(|(l, h)| (l * scale, h * scale))
                .collect();
            let cfg = SearchConfig {
                box_override: Some(bounds),
                ..cfg
            };
            for i in 0..pts {
                let tf = (lo + (hi - lo) * i as f64 / (pts.max(2) - 1) as f64) * PI;
                let (best, p) = solve_fixed(&space, &goal, tf, starts, &cfg);
                println!("tf/pi={:.3} min|res|^2={:.3e} p={:?}", tf / PI, best, p);
            }
        }
        "diagt2" => {
            use pulseforge::bloch::DynamicsConfig;
            let cfg = SearchConfig {
                seed: 5,
                t_max: 4.0 * PI,
                explore_step: 6e-3,
                max_refine_iters: 200,
                ..SearchConfig::default()
            };
            let space = SearchSpace::TimeOffset { order: 2 };
            let bounds = space.default_box();
            let explore = DynamicsConfig::with_step(cfg.explore_step);
            let mut results: Vec<(f64, f64, usize, bool, Vec<f64>)> = Vec::new();
            let mut fails = 0;
            for i in 0..32 {
                let params: Vec<f64> = bounds
                    .iter()
                    .enumerate()
                    .map(|(d, (lo, hi))| {
                        let x = ((i * 7 + d * 13 + 3) % 29) as f64 / 29.0;
                        lo + x * (hi - lo)
                    })
                    .collect();
                let pt = ShootingPoint::new(space.clone(), params).unwrap();
                match refine(&pt, &TransferGoal::Inversion, &cfg, &explore) {
                    Ok(out) => results.push((
                        out.objective.fstar,
                        out.objective.tstar / PI,
                        out.iterations,
                        out.converged,
                        out.point.params.clone(),
                    )),
                    Err(_) => fails += 1,
                }
            }
            results.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            for r in results.iter().take(10) {
                println!(
                    "F*={:.3e} t*/pi={:.4} iters={} conv={} p={:?}",
                    r.0, r.1, r.2, r.3, r.4
                );
            }
            println!("{} starts failed outright", fails);
        }
        "time2" => {
            let seed = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(5);
            let starts = std::env::args().nth(3).map(|v| v.parse().unwrap()).unwrap_or(128);
            let cfg = SearchConfig {
                seed,
                t_max: 3.2 * PI,
                multistart: Some(starts),
                explore_step: 6e-3,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::TimeOffset { order: 2 },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} params={:?}",
                r.fstar,
                r.tstar / PI,
                r.params
            );
        }
        "time3" => {
            let seed = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(5);
            let starts = std::env::args().nth(3).map(|v| v.parse().unwrap()).unwrap_or(192);
            let cfg = SearchConfig {
                seed,
                t_max: 4.2 * PI,
                multistart: Some(starts),
                explore_step: 6e-3,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::TimeOffset { order: 3 },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "F*={:.3e} t*/pi={:.6} params={:?}",
                r.fstar,
                r.tstar / PI,
                r.params
            );
        }
        "alpha1" => {
            let cfg = SearchConfig {
                seed: 6,
                t_max: 3.0 * PI,
                multistart: Some(64),
                explore_step: 6e-3,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::Amplitude { order: 1 },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!(
                "derived={:?} F*={:.3e} t*/pi={:.6}",
                r.derived,
                r.fstar,
                r.tstar / PI
            );
        }
        "alpha2" | "alpha3" => {
            let order = if which == "alpha2" { 2 } else { 3 };
            let cfg = SearchConfig {
                seed: 6,
                t_max: (2 + order) as f64 * PI,
                multistart: Some(if order == 2 { 64 } else { 192 }),
                explore_step: 6e-3,
                ..SearchConfig::default()
            };
            let r = find_global(
                &SearchSpace::Amplitude { order },
                &TransferGoal::Inversion,
                &cfg,
            )
            .unwrap();
            println!("F*={:.3e} t*/pi={:.6}", r.fstar, r.tstar / PI);
        }
        "ens" => {
            for (i, offsets) in [
                vec![-0.5, 0.5],
                vec![-0.5, 0.0, 0.5],
                vec![-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5],
            ]
            .into_iter()
            .enumerate()
            {
                let n = offsets.len();
                let cfg = SearchConfig {
                    seed: 10 + i as u64,
                    t_max: (2 + n) as f64 * PI,
                    multistart: Some(match n {
                        2 => 32,
                        3 => 64,
                        _ => 192,
                    }),
                    explore_step: 6e-3,
                    ..SearchConfig::default()
                };
                let space = SearchSpace::Ensemble {
                    offsets,
                    cost: CostKind::Time,
                };
                match find_global(&space, &TransferGoal::Inversion, &cfg) {
                    Ok(r) => println!(
                        "N={} F*={:.3e} t*/pi={:.6} params={:?}",
                        n,
                        r.fstar,
                        r.tstar / PI,
                        r.params
                    ),
                    Err(e) => println!("N={n} FAILED: {e}"),
                }
            }
        }
        "gate1" => {
            let cfg = SearchConfig {
                seed: 12,
                t_max: 4.0 * PI,
                multistart: Some(96),
                explore_step: 6e-3,
                ..SearchConfig::default()
            };
            match find_global(
                &SearchSpace::GateTime { order: 1 },
                &TransferGoal::not_gate(),
                &cfg,
            ) {
                Ok(r) => println!(
                    "F*={:.3e} residual={:.3e} t*/pi={:.6} params={:?}",
                    r.fstar,
                    r.fstar.abs().sqrt(),
                    r.tstar / PI,
                    r.params
                ),
                Err(e) => println!("FAILED: {e}"),
            }
        }
        "gate2" => {
            let cfg = SearchConfig {
                seed: 13,
                t_max: 5.0 * PI,
                multistart: Some(160),
                explore_step: 8e-3,
                robust_tol: 1e-2,
                f_target: 1e-5,
                max_refine_iters: 30,
                ..SearchConfig::default()
            };
            match find_global(
                &SearchSpace::GateTime { order: 2 },
                &TransferGoal::not_gate(),
                &cfg,
            ) {
                Ok(r) => println!(
                    "F*={:.3e} residual={:.3e} t*/pi={:.6}",
                    r.fstar,
                    r.fstar.abs().sqrt(),
                    r.tstar / PI
                ),
                Err(e) => println!("FAILED: {e}"),
            }
        }
        other => eprintln!("unknown probe {other}"),
    }
    eprintln!("[{which}] elapsed: {:.2}s", t0.elapsed().as_secs_f64());
}
