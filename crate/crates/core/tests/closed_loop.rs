mod common;

use std::sync::OnceLock;

use pmlr_core::airframe::{
    gang_contract, gang_expand, gang_project, mirror_surfaces, virtual_limits, GangMode, ModelKind, SurfaceSuite,
    FLAP_COUNT, SURFACE_COUNT,
};
use pmlr_core::sim::{run_maneuver, write_csv, SimConfig, SimError, SimTrace, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GANGS: [GangMode; 2] = [GangMode::SplitAileronRuddervator, GangMode::ElevatorRudderon];
const KINDS: [ModelKind; 2] = [ModelKind::Pmlr, ModelKind::Poly];

fn suite() -> &'static SurfaceSuite {
    static SUITE: OnceLock<SurfaceSuite> = OnceLock::new();
    SUITE.get_or_init(|| SurfaceSuite::synthetic(1).unwrap())
}

fn config(gang: GangMode, kind: ModelKind) -> SimConfig {
    SimConfig { gang, model_kind: kind, ..SimConfig::default() }
}

/// The four default maneuvers, run once and shared.
fn traces() -> &'static Vec<SimTrace> {
    static TRACES: OnceLock<Vec<SimTrace>> = OnceLock::new();
    TRACES.get_or_init(|| {
        GANGS
            .iter()
            .flat_map(|&g| KINDS.iter().map(move |&k| run_maneuver(&config(g, k), suite()).unwrap()))
            .collect()
    })
}

fn trace(gang: GangMode, kind: ModelKind) -> &'static SimTrace {
    traces().iter().find(|t| t.gang == gang && t.model_kind == kind).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random surface vector inside the limits, at least `gap` from every
/// interior breakpoint of the flap and clamshell tables.
fn random_deflections(rng: &mut ChaCha8Rng, gap: f64) -> Vec<f64> {
    let limits = suite().limits();
    let knots: Vec<f64> = (-6..=6).map(|i| (10.0 * i as f64).to_radians()).collect();
    (0..SURFACE_COUNT)
        .map(|i| loop {
            let x = rng.gen_range(limits.delta_min[i]..=limits.delta_max[i]);
            if knots.iter().all(|k| (x - k).abs() >= gap) || x == 0.0 {
                break x;
            }
        })
        .collect()
}

fn random_flow_angles(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // grid knots every 5° in α and β on all tables are avoided by 1e-3 rad
    let pick = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| loop {
        let x: f64 = rng.gen_range(lo..hi);
        let deg = x.to_degrees();
        if ((deg / 5.0).round() * 5.0 - deg).abs().to_radians() >= 1e-3 {
            break x;
        }
    };
    (pick(rng, -0.05, 0.35), pick(rng, -0.15, 0.15))
}

#[test]
fn mirror_image_flips_roll_and_yaw() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let delta = random_deflections(&mut rng, 0.0);
        let (a, b) = random_flow_angles(&mut rng);
        let m = mirror_surfaces(&delta);
        let check = |x: [f64; 3], y: [f64; 3], tol: f64| {
            assert!((x[0] + y[0]).abs() <= tol && (x[1] - y[1]).abs() <= tol && (x[2] + y[2]).abs() <= tol, "{x:?} vs {y:?}");
        };
        check(suite().cdelta_truth(a, b, &delta).unwrap(), suite().cdelta_truth(a, -b, &m).unwrap(), 1e-12);
        for kind in KINDS {
            check(suite().cdelta(kind, a, b, &delta).unwrap(), suite().cdelta(kind, a, -b, &m).unwrap(), 1e-9);
        }
    }
}

#[test]
fn effectiveness_columns_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-6;
    for _ in 0..100 {
        let delta = random_deflections(&mut rng, 1e-3);
        let (a, b) = random_flow_angles(&mut rng);
        for kind in KINDS {
            let cols = suite().effectiveness_columns(kind, a, b, &delta).unwrap();
            for s in 0..SURFACE_COUNT {
                let (mut up, mut down) = (delta.clone(), delta.clone());
                up[s] += h;
                down[s] -= h;
                let fu = suite().cdelta(kind, a, b, &up).unwrap();
                let fd = suite().cdelta(kind, a, b, &down).unwrap();
                for r in 0..3 {
                    let want = (fu[r] - fd[r]) / (2.0 * h);
                    assert!((cols.get(r, s) - want).abs() <= 1e-5, "{kind:?} surface {s} axis {r}: {} vs {want}", cols.get(r, s));
                }
            }
        }
    }
}

#[test]
fn ganged_effectiveness_is_the_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-7;
    for gang in GANGS {
        let vlim = virtual_limits(gang, suite().limits());
        for _ in 0..100 {
            let v: Vec<f64> = (0..gang.virtual_dim())
                .map(|i| loop {
                    let x = rng.gen_range(vlim.delta_min[i]..=vlim.delta_max[i]);
                    let deg = x.to_degrees();
                    // keep clear of table knots and of the aileron sign switch
                    if ((deg / 5.0).round() * 5.0 - deg).abs() > 0.1 {
                        break x;
                    }
                })
                .collect();
            let (a, b) = random_flow_angles(&mut rng);
            let delta = gang_expand(gang, &v);
            let back = gang_contract(gang, &delta);
            assert!(back.iter().zip(&v).all(|(x, y)| (x - y).abs() <= 1e-15), "{back:?} vs {v:?}");
            let full = suite().effectiveness_columns(ModelKind::Pmlr, a, b, &delta).unwrap();
            let projected = gang_project(gang, &full, &v);
            for j in 0..gang.virtual_dim() {
                let (mut up, mut down) = (v.clone(), v.clone());
                up[j] += h;
                down[j] -= h;
                let fu = suite().cdelta(ModelKind::Pmlr, a, b, &gang_expand(gang, &up)).unwrap();
                let fd = suite().cdelta(ModelKind::Pmlr, a, b, &gang_expand(gang, &down)).unwrap();
                for r in 0..3 {
                    let want = (fu[r] - fd[r]) / (2.0 * h);
                    assert!((projected.get(r, j) - want).abs() <= 1e-6, "mode {} column {j}", gang.index());
                }
            }
        }
    }
}

#[test]
fn ganged_increments_map_through_the_full_effectiveness() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for gang in GANGS {
        let vlim = virtual_limits(gang, suite().limits());
        for _ in 0..200 {
            let v: Vec<f64> = (0..gang.virtual_dim()).map(|i| rng.gen_range(vlim.delta_min[i]..=vlim.delta_max[i])).collect();
            let mut step: Vec<f64> = (0..v.len()).map(|_| rng.gen_range(-0.05..0.05)).collect();
            if gang == GangMode::SplitAileronRuddervator && (v[FLAP_COUNT] >= 0.0) != (v[FLAP_COUNT] + step[FLAP_COUNT] >= 0.0) {
                // stay on the active branch
                step[FLAP_COUNT] = 0.0;
            }
            let (a, b) = random_flow_angles(&mut rng);
            let delta = gang_expand(gang, &v);
            let full = suite().effectiveness_columns(ModelKind::Pmlr, a, b, &delta).unwrap();
            let moved: Vec<f64> = v.iter().zip(&step).map(|(x, s)| x + s).collect();
            let physical: Vec<f64> = gang_expand(gang, &moved).iter().zip(&delta).map(|(x, y)| x - y).collect();
            let via_virtual = gang_project(gang, &full, &v).mul_vec(&step).unwrap();
            let via_full = full.mul_vec(&physical).unwrap();
            for r in 0..3 {
                assert!((via_virtual[r] - via_full[r]).abs() <= 1e-10, "mode {} axis {r}", gang.index());
            }
        }
    }
}

#[test]
fn onboard_models_against_the_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut pmlr_sq, mut poly_sq) = (0.0, 0.0);
    let n = 2000;
    for _ in 0..n {
        let delta = random_deflections(&mut rng, 0.0);
        let (a, b) = random_flow_angles(&mut rng);
        let truth = suite().cdelta_truth(a, b, &delta).unwrap();
        let pmlr = suite().cdelta(ModelKind::Pmlr, a, b, &delta).unwrap();
        let poly = suite().cdelta(ModelKind::Poly, a, b, &delta).unwrap();
        for r in 0..3 {
            assert!((pmlr[r] - truth[r]).abs() <= 1e-9 * truth[r].abs().max(1.0));
            pmlr_sq += (pmlr[r] - truth[r]).powi(2);
            poly_sq += (poly[r] - truth[r]).powi(2);
        }
        let ca = suite().c_a(a, b).unwrap();
        let ca_truth = suite().c_a_truth(a, b).unwrap();
        assert!(ca.iter().zip(&ca_truth).all(|(x, y)| (x - y).abs() <= 1e-9 * y.abs().max(1.0)));
    }
    let (pmlr_rms, poly_rms) = ((pmlr_sq / n as f64).sqrt(), (poly_sq / n as f64).sqrt());
    assert!(poly_rms > 1e-4, "polynomial fit is suspiciously exact: {poly_rms}");
    assert!(poly_rms >= 1e3 * pmlr_rms, "{poly_rms} vs {pmlr_rms}");
}

#[test]
fn zero_command_holds_trim() {
    for gang in GANGS {
        let cfg = SimConfig { pulse_deg: 0.0, duration: 10.0, ..config(gang, ModelKind::Pmlr) };
        let tr = run_maneuver(&cfg, suite()).unwrap();
        let trim = &tr.trim;
        for f in &tr.frames {
            assert!((f.attitude[1] - trim.theta).abs() <= 1e-6 && f.attitude[0].abs() <= 1e-6 && f.attitude[2].abs() <= 1e-6);
            assert!(f.omega.iter().all(|w| w.abs() <= 1e-6));
            assert!(f.delta.iter().zip(&trim.delta).all(|(d, t)| (d - t).abs() <= 1e-6));
            assert!(f.error().iter().all(|e| e.abs() <= 1e-9));
        }
    }
}

#[test]
fn trim_values() {
    let tr = trace(GangMode::SplitAileronRuddervator, ModelKind::Pmlr);
    assert!((tr.trim.alpha.to_degrees() - 3.7354).abs() < 1e-3, "{}", tr.trim.alpha.to_degrees());
    assert_eq!(tr.trim.theta, tr.trim.alpha);
    assert!(tr.trim.delta[..FLAP_COUNT].iter().all(|d| *d == tr.trim.flap));
    assert!(tr.trim.delta[FLAP_COUNT..].iter().all(|d| *d == 0.0));
}

#[test]
fn runs_are_deterministic() {
    for gang in GANGS {
        let cfg = config(gang, ModelKind::Poly);
        let again = run_maneuver(&cfg, suite()).unwrap();
        assert_eq!(&again, trace(gang, ModelKind::Poly));
        assert_eq!(write_csv(&again), write_csv(trace(gang, ModelKind::Poly)));
    }
}

#[test]
fn deflections_respect_position_and_rate_limits() {
    let limits = suite().limits();
    for tr in traces() {
        let dt = tr.dt;
        let mut prev = tr.trim.delta.clone();
        for f in &tr.frames {
            for (i, (d, p)) in f.delta.iter().zip(&prev).enumerate() {
                assert!(*d >= limits.delta_min[i] - 1e-12 && *d <= limits.delta_max[i] + 1e-12);
                assert!((d - p).abs() <= limits.rate_max[i] * dt + 1e-12, "t={} surface {i}", f.t);
            }
            prev = f.delta.clone();
        }
    }
}

#[test]
fn unsaturated_frames_meet_the_demand() {
    for tr in traces() {
        for f in tr.frames.iter().filter(|f| !f.saturated) {
            let miss: Vec<f64> = (0..3).map(|i| f.achieved_increment[i] - f.demand_increment[i]).collect();
            assert!(norm(&miss) <= 1e-8 * (1.0 + norm(&f.demand_increment)), "t={} miss {miss:?}", f.t);
        }
    }
}

#[test]
fn pmlr_onboard_effect_agrees_with_truth_along_the_trace() {
    for gang in GANGS {
        for f in &trace(gang, ModelKind::Pmlr).frames {
            for i in 0..3 {
                let (a, b) = (f.onboard_effect[i], f.truth_effect[i]);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "t={} axis {i}: {a} vs {b}", f.t);
            }
        }
    }
}

#[test]
fn pmlr_allocation_error_is_small_and_poly_is_worse() {
    for gang in GANGS {
        let pmlr = trace(gang, ModelKind::Pmlr);
        let poly = trace(gang, ModelKind::Poly);
        let (mp, mq) = (pmlr.metrics().unwrap(), poly.metrics().unwrap());
        for i in 0..3 {
            let peak_dem = pmlr.frames.iter().map(|f| f.t_dem[i].abs()).fold(0.0, f64::max);
            assert!(mp.rms[i] < 1e-2 * peak_dem, "mode {} axis {i}: {} vs peak {peak_dem}", gang.index(), mp.rms[i]);
            assert!(mq.rms[i] >= 10.0 * mp.rms[i], "mode {} axis {i}", gang.index());
        }
        let peak = pmlr.peak_roll().to_degrees();
        assert!((peak - 50.0).abs() <= 2.0, "peak roll {peak}");
    }
}

#[test]
fn rk4_converges_under_step_halving() {
    let cfg = config(GangMode::SplitAileronRuddervator, ModelKind::Pmlr);
    let sim = Simulator::new(cfg, suite()).unwrap();
    let mut delta = sim.trim().delta.clone();
    delta[0] += 0.05;
    delta[5] -= 0.02;
    delta[pmlr_core::airframe::S7L] = 0.1;
    let start = ([0.1, -0.05, 0.02], [0.0, sim.trim().theta, 0.0]);
    let integrate = |dt: f64| {
        let (mut w, mut att) = start;
        for _ in 0..(1.0 / dt).round() as usize {
            (w, att) = sim.propagate(w, att, &delta, dt).unwrap();
        }
        (w, att)
    };
    let (w1, a1) = integrate(0.01);
    let (w2, a2) = integrate(0.005);
    let diff = w1.iter().zip(&w2).chain(a1.iter().zip(&a2)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-4, "step-halving change {diff}");
}

#[test]
fn runaway_gains_abort_with_a_diagnostic() {
    // rate gain far beyond what the 0.01 s frame can support, with enough
    // dynamic pressure and surface rate for the oscillation to grow
    let mut fast = SurfaceSuite::synthetic(1).unwrap();
    fast.set_rate_limit_deg(1e5);
    let mut cfg = SimConfig { velocity: 120.0, rate_limit_deg_s: 1e5, ..config(GangMode::SplitAileronRuddervator, ModelKind::Pmlr) };
    cfg.gains.k_omega = [1000.0; 3];
    match run_maneuver(&cfg, &fast) {
        Err(SimError::Diverged { t, omega }) => {
            assert!(t > 0.0);
            assert!(omega.iter().any(|w| w.abs() > 20.0 || !w.is_finite()));
        }
        other => panic!("expected divergence, got {:?}", other.map(|t| t.frames.len())),
    }
}
