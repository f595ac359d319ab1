//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Statistical orderings "a <= b within 3 sigma" use binomial standard
//! errors of both estimates: `a <= b + 3 sqrt(se_a^2 + se_b^2)`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proactive::analysis::{
    chernoff_upper_bound, diversity_deterministic, diversity_random_t,
    diversity_secondary_nonpredictive, diversity_with_errors, exact_nonpredictive_outage,
    exact_secondary_outage, factorial_lower_bound, optimal_lookahead, predictive_outage_bounds,
};
use proactive::config::parse_config;
use proactive::harness::{
    run_sweep, run_sweep_with, write_csv, ClassEstimate, Execution, ExperimentConfig, Scenario,
    SweepResult,
};
use proactive::traffic::{LookaheadModel, ScalingConfig};
use proactive::twoclass::PolicyConfig;

struct Outcome {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self { pass, summary: summary.into(), notes: Vec::new() }
    }
}

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn le_within(a: &ClassEstimate, b: &ClassEstimate) -> bool {
    a.p_hat <= b.p_hat + 3.0 * (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> ExperimentConfig {
    let path = configs_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn single(gamma: f64, lookahead: LookaheadModel, grid: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig::new(Scenario::SingleClass { gamma, lookahead }, grid)
}

fn primaries(result: &SweepResult) -> Vec<(u64, ClassEstimate)> {
    result.rows.iter().map(|r| (r.capacity, r.primary.expect("simulated"))).collect()
}

fn secondaries(result: &SweepResult) -> Vec<(u64, ClassEstimate)> {
    result.rows.iter().map(|r| (r.capacity, r.secondary.expect("two-class"))).collect()
}

fn within_limit(elapsed: Duration, limit: Duration, outcome: &mut Outcome) {
    if elapsed > limit {
        outcome.pass = false;
        outcome.notes.push(format!("runtime {elapsed:.1?} exceeds {limit:?}"));
    }
}

/// Non-predictive simulation against the exact tail, >= 1e6 measured slots.
fn exact_formula_agreement() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for gamma in [0.4, 0.6, 0.8] {
        let mut cfg = single(gamma, LookaheadModel::Deterministic(0), vec![4, 8, 16]);
        cfg.runs = 100;
        cfg.slots_per_run = 10_000;
        for row in run_sweep(&cfg).unwrap().rows {
            let p = row.primary.unwrap();
            assert!(p.measured_slots >= 1_000_000);
            let exact = row.analytic.exact.unwrap();
            let z = (p.p_hat - exact).abs() / sigma(exact, p.measured_slots);
            worst = worst.max(z);
            if z > 3.0 {
                notes.push(format!("C={} gamma={gamma}: {:e} vs exact {exact:e} ({z:.2} se)", row.capacity, p.p_hat));
            }
        }
    }
    let mut out = Outcome::new(notes.is_empty(), format!("9 grid points, worst deviation {worst:.2} se (limit 3)"));
    out.notes = notes;
    within_limit(start.elapsed(), Duration::from_secs(120), &mut out);
    out
}

/// factorial_lower <= exact <= chernoff_upper on C = 2..100, gamma = 0.1..0.9.
fn bound_chain() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut violations) = (0, Vec::new());
    for c in 2..=100u64 {
        for g in 1..=9 {
            let gamma = g as f64 / 10.0;
            let cfg = ScalingConfig::new(c, gamma).unwrap();
            let exact = exact_nonpredictive_outage(&cfg).ln();
            let lower = factorial_lower_bound(&cfg).ln();
            if lower > exact {
                violations.push(format!("lower C={c} gamma={gamma}"));
            }
            if let Ok(upper) = chernoff_upper_bound(&cfg) {
                checked += 1;
                if exact > upper.ln() {
                    violations.push(format!("upper C={c} gamma={gamma}"));
                }
            }
        }
    }
    let mut out = Outcome::new(
        violations.is_empty(),
        format!("891 lower checks, {checked} Chernoff checks, {} violations", violations.len()),
    );
    out.notes = violations;
    within_limit(start.elapsed(), Duration::from_secs(10), &mut out);
    out
}

/// EDF outage inside [Pr(L_d) - 3 sigma, Pr(U_d) + 3 sigma].
fn sandwich_containment() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut points = 0;
    for gamma in [0.6, 0.8] {
        for t in [1u32, 2] {
            let mut cfg = single(gamma, LookaheadModel::Deterministic(t), vec![4, 8, 16, 32]);
            cfg.runs = 100;
            cfg.slots_per_run = 10_000 + cfg.warmup();
            for row in run_sweep(&cfg).unwrap().rows {
                points += 1;
                let p = row.primary.unwrap();
                let b = predictive_outage_bounds(&ScalingConfig::new(row.capacity, gamma).unwrap(), t).unwrap();
                let (lo, hi) = (b.lower(), b.upper());
                let n = p.measured_slots;
                let ok = p.p_hat >= lo - 3.0 * sigma(lo, n) && p.p_hat <= hi + 3.0 * sigma(hi, n);
                if !ok {
                    notes.push(format!("C={} gamma={gamma} T={t}: {:e} not in [{lo:e}, {hi:e}]", row.capacity, p.p_hat));
                }
            }
        }
    }
    let mut out = Outcome::new(notes.is_empty(), format!("{points} grid points, {} outside", notes.len()));
    out.notes = notes;
    within_limit(start.elapsed(), Duration::from_secs(300), &mut out);
    out
}

/// Pointwise a <= b within 3 sigma; returns the capacities that break it.
fn ordering_breaks(lower: &[(u64, ClassEstimate)], upper: &[(u64, ClassEstimate)]) -> Vec<u64> {
    lower
        .iter()
        .zip(upper)
        .filter(|((ca, a), (cb, b))| {
            assert_eq!(ca, cb);
            !le_within(a, b)
        })
        .map(|((c, _), _)| *c)
        .collect()
}

fn fig2() -> Outcome {
    let t0 = primaries(&run_sweep(&shipped("fig2_t0.cfg")).unwrap());
    let t1 = primaries(&run_sweep(&shipped("fig2_t1.cfg")).unwrap());
    let t2 = primaries(&run_sweep(&shipped("fig2_t2.cfg")).unwrap());
    let mut breaks = ordering_breaks(&t2, &t1);
    breaks.extend(ordering_breaks(&t1, &t0));
    let mut out = Outcome::new(
        breaks.is_empty(),
        format!("T=2 <= T=1 <= T=0 on {} capacities, breaks at {breaks:?}", t0.len()),
    );
    // Observation only: random T with Tmin in {1, 2} below deterministic T=2 at small C.
    for name in ["fig2_uniform_1_5.cfg", "fig2_uniform_2_5.cfg"] {
        let random = primaries(&run_sweep(&shipped(name)).unwrap());
        let small: Vec<_> = random.iter().zip(&t2).filter(|((c, _), _)| *c <= 5).collect();
        let below = small.iter().filter(|((_, r), (_, d))| le_within(r, d)).count();
        out.notes.push(format!(
            "report: {name}: below deterministic T=2 at {below} of {} capacities C <= 5",
            small.len()
        ));
    }
    out
}

fn fig3() -> Outcome {
    let p01 = primaries(&run_sweep(&shipped("fig3_binomial_p01.cfg")).unwrap());
    let p05 = primaries(&run_sweep(&shipped("fig3_binomial_p05.cfg")).unwrap());
    let p09 = primaries(&run_sweep(&shipped("fig3_binomial_p09.cfg")).unwrap());
    let mut breaks = ordering_breaks(&p09, &p05);
    breaks.extend(ordering_breaks(&p05, &p01));
    Outcome::new(
        breaks.is_empty(),
        format!("p=0.9 <= p=0.5 <= p=0.1 on {} capacities, breaks at {breaks:?}", p01.len()),
    )
}

/// Least-squares slope of y against x.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Feasible: at least 20 outage slots for both T.
fn slope_trend() -> Outcome {
    let grid: Vec<u64> = (2..=14).collect();
    let run = |t: u32| {
        let mut cfg = single(0.6, LookaheadModel::Deterministic(t), grid.clone());
        cfg.runs = 100;
        cfg.slots_per_run = 10_000 + cfg.warmup();
        primaries(&run_sweep(&cfg).unwrap())
    };
    let (t0, t1) = (run(0), run(1));
    let feasible: Vec<usize> =
        (0..grid.len()).filter(|&i| t0[i].1.outage_slots >= 20 && t1[i].1.outage_slots >= 20).collect();
    if feasible.len() < 5 {
        return Outcome::new(false, format!("only {} feasible capacities", feasible.len()));
    }
    let top = &feasible[feasible.len() - 5..];
    let line = |est: &[(u64, ClassEstimate)]| {
        let pts: Vec<(f64, f64)> = top
            .iter()
            .map(|&i| {
                let c = est[i].0 as f64;
                (c * c.ln(), -est[i].1.p_hat.ln())
            })
            .collect();
        slope(&pts)
    };
    let (s0, s1) = (line(&t0), line(&t1));
    let caps: Vec<u64> = top.iter().map(|&i| grid[i]).collect();
    Outcome::new(
        s1 / s0 >= 1.5,
        format!("slopes T=0 {s0:.4}, T=1 {s1:.4}, ratio {:.3} (need >= 1.5) over C={caps:?}", s1 / s0),
    )
}

fn secondary_formula() -> Outcome {
    let mut notes = Vec::new();
    let mut zs = Vec::new();
    for (c, gp, gs) in [(3u64, 0.6, 0.2), (6, 0.75, 0.05)] {
        let mut cfg = ExperimentConfig::new(
            Scenario::TwoClass { gamma_p: gp, gamma_s: gs, lookahead: 0, policy: PolicyConfig::Sp1 },
            vec![c],
        );
        cfg.runs = 1000;
        cfg.slots_per_run = 10_000;
        let s = secondaries(&run_sweep(&cfg).unwrap())[0].1;
        assert!(s.measured_slots >= 10_000_000);
        let exact = exact_secondary_outage(c, gp, gs, 1e-10).unwrap().probability.value();
        let z = (s.p_hat - exact).abs() / sigma(exact, s.measured_slots);
        zs.push(format!("C={c}: {:e} vs {exact:e} ({z:.2} se)", s.p_hat));
        if z > 3.0 {
            notes.push(format!("C={c} outside 3 se"));
        }
    }
    let mut out = Outcome::new(notes.is_empty(), zs.join("; "));
    out.notes = notes;
    out
}

fn good_citizen() -> Outcome {
    let start = Instant::now();
    let sweep = |name: &str| run_sweep(&shipped(name)).unwrap();
    let (np, sp1, sp2, sp3) =
        (sweep("fig4_sp1_t0.cfg"), sweep("fig4_sp1_t4.cfg"), sweep("fig5_sp2.cfg"), sweep("fig6_sp3.cfg"));
    let (np_p, sp1_p, sp3_p) = (primaries(&np), primaries(&sp1), primaries(&sp3));
    let (np_s, sp1_s, sp2_s, sp3_s) = (secondaries(&np), secondaries(&sp1), secondaries(&sp2), secondaries(&sp3));
    let caps: Vec<u64> = sp1_p.iter().map(|x| x.0).collect();

    // (a) predictive primary strictly below non-predictive primary.
    let a: Vec<u64> = caps
        .iter()
        .enumerate()
        .filter(|&(i, _)| !(sp1_p[i].1.p_hat < np_p[i].1.p_hat))
        .map(|(_, c)| *c)
        .collect();
    // (b) SP2 secondary below the SP1 curves by more than 3 sigma.
    let strictly_below = |x: &ClassEstimate, y: &ClassEstimate| {
        x.p_hat + 3.0 * (x.standard_error().powi(2) + y.standard_error().powi(2)).sqrt() < y.p_hat
    };
    let b: Vec<u64> = caps
        .iter()
        .enumerate()
        .filter(|&(i, _)| !(strictly_below(&sp2_s[i].1, &sp1_s[i].1) && strictly_below(&sp2_s[i].1, &np_s[i].1)))
        .map(|(_, c)| *c)
        .collect();
    // (c) SP3 secondary below SP2 within 3 sigma; SP3 primary within 3x SP1.
    let c_sec = ordering_breaks(&sp3_s, &sp2_s);
    let c_pri: Vec<u64> = caps
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let (x, y) = (&sp3_p[i].1, &sp1_p[i].1);
            let tol = 3.0 * (x.standard_error().powi(2) + (3.0 * y.standard_error()).powi(2)).sqrt();
            x.p_hat > 3.0 * y.p_hat + tol
        })
        .map(|(_, c)| *c)
        .collect();

    let pass = a.is_empty() && b.is_empty() && c_sec.is_empty() && c_pri.is_empty();
    let mut out = Outcome::new(
        pass,
        format!(
            "C={}..={}: (a) breaks {a:?}; (b) breaks {b:?}; (c) secondary breaks {c_sec:?}, primary breaks {c_pri:?}",
            caps[0],
            caps[caps.len() - 1]
        ),
    );
    for &c in &c_sec {
        let i = caps.iter().position(|&x| x == c).unwrap();
        out.notes.push(format!(
            "C={c}: secondary SP3 {:e} vs SP2 {:e}; primary SP3 {:e} vs SP2 {:e}",
            sp3_s[i].1.p_hat,
            sp2_s[i].1.p_hat,
            sp3_p[i].1.p_hat,
            primaries(&sp2)[i].1.p_hat
        ));
    }
    within_limit(start.elapsed(), Duration::from_secs(600), &mut out);
    out
}

fn spot_table() -> Outcome {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
    let opt = optimal_lookahead(0.8, 1.1, 0.5).unwrap();
    let checks = [
        ("diversity_deterministic(0.8, 4) = 1.0", close(diversity_deterministic(0.8, 4).value, 1.0)),
        (
            "diversity_random_t(0.9, Tmin=2) = 0.3",
            close(diversity_random_t(0.9, &LookaheadModel::Uniform { min: 2, max: 5 }).unwrap().value, 0.3),
        ),
        (
            "diversity_random_t(0.8, scaled alpha=0.1) = 0.3",
            close(
                diversity_random_t(0.8, &LookaheadModel::CapacityScaled { alpha: 0.1, fallback: 1 }).unwrap().value,
                0.3,
            ),
        ),
        (
            "diversity_random_t(0.8, scaled alpha=0.5) = 0.4",
            close(
                diversity_random_t(0.8, &LookaheadModel::CapacityScaled { alpha: 0.5, fallback: 1 }).unwrap().value,
                0.4,
            ),
        ),
        ("diversity_with_errors(0.8, 1.1, 0.5, 4) = 0.6", close(diversity_with_errors(0.8, 1.1, 0.5, 4.0).unwrap().value, 0.6)),
        ("optimal_lookahead(0.8, 1.1, 0.5) = (4.0, feasible)", close(opt.t_star, 4.0) && opt.feasible),
        ("diversity_secondary_nonpredictive(0.75) = 0.25", close(diversity_secondary_nonpredictive(0.75).value, 0.25)),
    ];
    let failed: Vec<String> = checks.iter().filter(|c| !c.1).map(|c| c.0.to_string()).collect();
    let mut out = Outcome::new(failed.is_empty(), format!("{} of {} values exact to 1e-12", checks.len() - failed.len(), checks.len()));
    out.notes = failed;
    out
}

fn csv_bytes(result: &SweepResult) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).unwrap();
    buf
}

fn determinism() -> Outcome {
    let mut notes = Vec::new();
    for name in ["fig2_uniform_1_5.cfg", "fig6_sp3.cfg"] {
        let cfg = shipped(name);
        let serial = csv_bytes(&run_sweep_with(&cfg, Execution::Serial).unwrap());
        let serial_again = csv_bytes(&run_sweep_with(&cfg, Execution::Serial).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let parallel = pool.install(|| csv_bytes(&run_sweep_with(&cfg, Execution::Parallel).unwrap()));
        let parallel_again = csv_bytes(&run_sweep(&cfg).unwrap());
        if !(serial == serial_again && serial == parallel && serial == parallel_again) {
            notes.push(format!("{name}: outputs differ"));
        }
    }
    let mut out = Outcome::new(notes.is_empty(), "serial, 4-thread and default-pool sweeps give identical CSV bytes");
    out.notes = notes;
    out
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact-formula agreement", exact_formula_agreement),
        ("bound chain", bound_chain),
        ("sandwich containment", sandwich_containment),
        ("figure 2 lookahead ordering", fig2),
        ("figure 3 binomial ordering", fig3),
        ("slope trend", slope_trend),
        ("secondary exact formula", secondary_formula),
        ("good-citizen policies", good_citizen),
        ("closed-form spot table", spot_table),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!out.pass);
        println!("{verdict} {:>2} {name}: {} [{:.1?}]", i + 1, out.summary, start.elapsed());
        for note in out.notes {
            println!("       {note}");
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
