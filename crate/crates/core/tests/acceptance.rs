//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::time::{Duration, Instant};

use semicircle::ensembles::{sample_matrix, BlockMode, EnsembleKind, EnsembleSpec, EntryDist};
use semicircle::nc_partitions::{
    adopted_graph, build_adopted_sequence, catalan, enumerate_nc_pair_partitions, verify_adopted,
};
use semicircle::relations::{block_relation, condition_counts, wigner_relation};
use semicircle::spectra::{
    eigenvalues, empirical_moments, trace_power_moment, variance_decay, MomentReport, DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
};
use semicircle::tree_integrals::{j_alpha_bruteforce, scl_verdict, theoretical_moment, TreeIntegrator};
use semicircle::weights::WeightFn;

const GRID: usize = 2048;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Accumulates sub-checks; the first few failures are kept for the report.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn within_time(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(took < limit, || format!("took {took:.2?}, limit {limit:?}"));
    }

    fn finish(self) -> Verdict {
        let pass = self.failures.is_empty();
        let mut parts = self.notes;
        if !pass {
            let shown: Vec<String> = self.failures.iter().take(4).cloned().collect();
            parts.push(format!("{} failed: {}", self.failures.len(), shown.join("; ")));
        }
        Verdict {
            pass,
            detail: parts.join(", "),
        }
    }
}

fn catalan_f(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        catalan(k / 2).unwrap() as f64
    }
}

fn combinatorics() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    for k in [2, 4, 6, 8, 10, 12] {
        let parts = enumerate_nc_pair_partitions(k).unwrap();
        let expected = [1, 2, 5, 14, 42, 132][k / 2 - 1];
        c.check(parts.len() == expected, || format!("k={k}: {} partitions", parts.len()));
        c.check(catalan(k / 2).unwrap() == expected as u64, || format!("catalan({})", k / 2));
        for pi in &parts {
            let seq = build_adopted_sequence(pi).unwrap();
            let graph = adopted_graph(pi).unwrap();
            c.check(verify_adopted(pi, &seq), || format!("{pi} not verified"));
            c.check(
                graph.node_count == k / 2 + 1 && graph.edges.len() == k / 2 && graph.is_tree(),
                || format!("{pi}: graph {graph} is not a tree on {} nodes", k / 2 + 1),
            );
        }
    }
    c.within_time(start, Duration::from_secs(1));
    c.finish()
}

fn wigner_theory() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    let w = WeightFn::constant(1.0).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=12 {
        let mu = theoretical_moment(k, &w, GRID, false).unwrap();
        let err = (mu - catalan_f(k)).abs();
        worst = worst.max(err);
        c.check(err <= 1e-9, || format!("k={k}: mu={mu}"));
    }
    c.within_time(start, Duration::from_secs(5));
    c.note(format!("max error {worst:.1e}"));
    c.finish()
}

fn periodic_theory() -> Verdict {
    let mut c = Checks::default();
    let mut worst_j = 0.0f64;
    let mut worst_mu = 0.0f64;
    for rho in [0.1, 0.25, 0.4] {
        let w = WeightFn::periodic_band(rho).unwrap();
        let integrator = TreeIntegrator::new(&w, GRID).unwrap();
        for k in (2..=8).step_by(2) {
            let target = (2.0 * rho).powi(k as i32 / 2);
            for pi in enumerate_nc_pair_partitions(k).unwrap() {
                let j = integrator.j_alpha(&pi).unwrap();
                worst_j = worst_j.max((j - target).abs());
                c.check((j - target).abs() <= 1e-4, || format!("rho={rho} {pi}: J={j}, want {target}"));
            }
            let mu = theoretical_moment(k, &w, GRID, true).unwrap();
            worst_mu = worst_mu.max((mu - catalan_f(k)).abs());
            c.check((mu - catalan_f(k)).abs() <= 1e-3, || format!("rho={rho} k={k}: normalized mu={mu}"));
        }
    }
    c.note(format!("max |J - (2rho)^(k/2)| {worst_j:.1e}, max moment error {worst_mu:.1e}"));
    c.finish()
}

fn band_failure() -> Verdict {
    let mut c = Checks::default();
    let rho: f64 = 0.25;
    let analytic = 2.0 * (4.0 * rho * rho - 10.0 * rho.powi(3) / 3.0) / (2.0 * rho - rho * rho).powi(2);
    let mu4 = theoretical_moment(4, &WeightFn::band(rho).unwrap(), GRID, true).unwrap();
    c.check((analytic - 2.0680).abs() <= 5e-5, || format!("analytic value {analytic}"));
    c.check((mu4 - 2.0680).abs() <= 0.01, || format!("mu4 = {mu4}"));
    c.check(mu4 > 2.05, || format!("mu4 = {mu4} not above 2.05"));
    c.note(format!("normalized mu4 {mu4:.5} (analytic {analytic:.5})"));
    c.finish()
}

fn oracle_equivalence() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    let mut weights = vec![WeightFn::constant(1.0).unwrap(), WeightFn::constant(0.7).unwrap()];
    for rho in [0.1, 0.25, 0.4, 0.6] {
        weights.push(WeightFn::band(rho).unwrap());
        weights.push(WeightFn::periodic_band(rho).unwrap());
    }
    weights.push(WeightFn::piecewise_constant(vec![0.2, 0.55], vec![1.0, 0.5, 0.2]).unwrap());
    let mut worst = 0.0f64;
    let mut count = 0;
    for w in &weights {
        let integrator = TreeIntegrator::new(w, 64).unwrap();
        for k in [2, 4, 6] {
            for pi in enumerate_nc_pair_partitions(k).unwrap() {
                let fast = integrator.j_alpha(&pi).unwrap();
                let brute = j_alpha_bruteforce(&pi, w, 64).unwrap();
                worst = worst.max((fast - brute).abs());
                count += 1;
                c.check((fast - brute).abs() <= 5e-3, || format!("{w} {pi}: {fast} vs {brute}"));
            }
        }
    }
    c.within_time(start, Duration::from_secs(30));
    c.note(format!("{count} pairs, max diff {worst:.1e}"));
    c.finish()
}

/// Tolerances shared by the Wigner and block Monte Carlo criteria.
fn check_semicircle_moments(c: &mut Checks, r: &MomentReport) {
    let mean = |k: usize| r.row(k).unwrap().mean;
    let bands = [(2, 0.95, 1.05), (4, 1.9, 2.1), (6, 4.7, 5.3)];
    for (k, lo, hi) in bands {
        c.check((lo..=hi).contains(&mean(k)), || format!("Y{k} = {:.4} outside [{lo}, {hi}]", mean(k)));
    }
    for k in [3, 5] {
        c.check(mean(k).abs() <= 0.1, || format!("|Y{k}| = {:.4}", mean(k).abs()));
    }
    c.note(format!(
        "Y2 {:.4}, Y3 {:.4}, Y4 {:.4}, Y5 {:.4}, Y6 {:.4}",
        mean(2),
        mean(3),
        mean(4),
        mean(5),
        mean(6)
    ));
}

fn monte_carlo_wigner() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    let spec = EnsembleSpec::wigner(512, 2024).unwrap();
    let report = empirical_moments(&spec, 6, 32, false).unwrap();
    check_semicircle_moments(&mut c, &report);
    c.within_time(start, Duration::from_secs(120));
    c.finish()
}

fn block_matrices() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    let spec = EnsembleSpec::new(
        EnsembleKind::Weighted(WeightFn::constant(1.0).unwrap()),
        BlockMode::Minus,
        512,
        EntryDist::Rademacher,
        2025,
    )
    .unwrap();
    let report = empirical_moments(&spec, 6, 32, false).unwrap();
    check_semicircle_moments(&mut c, &report);
    c.within_time(start, Duration::from_secs(120));
    c.finish()
}

fn slow_band() -> Verdict {
    let mut c = Checks::default();
    let spec = EnsembleSpec::new(EnsembleKind::SlowBand { beta: 0.7 }, BlockMode::None, 1024, EntryDist::Rademacher, 2026)
        .unwrap();
    c.check(spec.bandwidth() == Some(128), || format!("b_N = {:?}", spec.bandwidth()));
    let report = empirical_moments(&spec, 4, 32, false).unwrap();
    let y4 = report.row(4).unwrap().mean;
    c.check((1.85..=2.15).contains(&y4), || format!("Y4 = {y4:.4} outside [1.85, 2.15]"));
    c.note(format!("b_N 128, Y2 {:.4}, Y4 {y4:.4}", report.row(2).unwrap().mean));
    c.finish()
}

fn variance_decay_rates() -> Verdict {
    let mut c = Checks::default();
    let start = Instant::now();
    let wigner = EnsembleSpec::wigner(64, 2027).unwrap();
    let d = variance_decay(&wigner, &[64, 128, 256, 512], 4, 64).unwrap();
    c.check(d.slope <= -0.8, || format!("wigner slope {:.3}", d.slope));
    let slow = EnsembleSpec::new(EnsembleKind::SlowBand { beta: 0.7 }, BlockMode::None, 128, EntryDist::Rademacher, 2028)
        .unwrap();
    let s = variance_decay(&slow, &[128, 256, 512, 1024], 4, 64).unwrap();
    c.check(s.slope <= -0.8, || format!("slow band slope {:.3}", s.slope));
    c.within_time(start, Duration::from_secs(600));
    let bs: Vec<usize> = s.rows.iter().map(|r| r.axis_value).collect();
    c.note(format!(
        "wigner slope vs log N {:.3}, slow band slope vs log b_N {:.3} (b_N {bs:?})",
        d.slope, s.slope
    ));
    c.finish()
}

fn relation_audit() -> Verdict {
    let mut c = Checks::default();
    let mut last = f64::INFINITY;
    for n in [32, 64, 128] {
        let r = condition_counts(&wigner_relation(n), None).unwrap();
        c.check(r.c3_count == 0, || format!("wigner N={n}: c3 = {}", r.c3_count));
        c.check(r.c2_max == 1, || format!("wigner N={n}: c2 = {}", r.c2_max));
        c.check(r.c1_ratio < last, || format!("wigner N={n}: c1 ratio not decreasing"));
        last = r.c1_ratio;
    }
    let (mut last_c1, mut last_c3) = (f64::INFINITY, f64::INFINITY);
    for n in [16, 32, 64] {
        let r = condition_counts(&block_relation(n, true), None).unwrap();
        c.check(r.c1_max <= 6 * 2 * n as u64, || format!("block N={n}: c1 = {}", r.c1_max));
        c.check(r.c2_max <= 2, || format!("block N={n}: c2 = {}", r.c2_max));
        c.check(r.c1_ratio < last_c1, || format!("block N={n}: c1 ratio not decreasing"));
        c.check(r.c3_ratio <= last_c3, || format!("block N={n}: c3 ratio increasing"));
        last_c1 = r.c1_ratio;
        last_c3 = r.c3_ratio;
    }
    c.finish()
}

fn eigensolver_oracles() -> Verdict {
    let mut c = Checks::default();
    let kinds = [
        (EnsembleKind::Weighted(WeightFn::constant(1.0).unwrap()), BlockMode::None),
        (EnsembleKind::Band { rho: 0.3 }, BlockMode::None),
        (EnsembleKind::PeriodicBand { rho: 0.2 }, BlockMode::None),
        (EnsembleKind::SlowBand { beta: 0.5 }, BlockMode::None),
        (EnsembleKind::Weighted(WeightFn::constant(1.0).unwrap()), BlockMode::Minus),
    ];
    let (mut worst_trace, mut worst_power) = (0.0f64, 0.0f64);
    for i in 0..50usize {
        let n = 2 * (1 + (i * 37) % 64);
        let (kind, block) = kinds[i % kinds.len()].clone();
        let dist = if i % 2 == 0 { EntryDist::Gaussian } else { EntryDist::Rademacher };
        let spec = EnsembleSpec::new(kind, block, n, dist, 3000 + i as u64).unwrap();
        let m = sample_matrix(&spec, 0);
        let s = eigenvalues(&m, DEFAULT_TOL, DEFAULT_MAX_SWEEPS).unwrap();
        let frob = m.frobenius_norm();
        let trace_err = (s.eigenvalues.iter().sum::<f64>() - m.trace()).abs() / frob;
        worst_trace = worst_trace.max(trace_err);
        c.check(trace_err <= 1e-10, || format!("matrix {i} (N={n}): trace error {trace_err:.2e}"));
        for k in 1..=8 {
            let t = trace_power_moment(&m, k).unwrap();
            let from_eigs = s.moment(k);
            let scale = s.eigenvalues.iter().map(|l| l.abs().powi(k as i32)).sum::<f64>() / n as f64;
            let rel = (from_eigs - t).abs() / t.abs().max(scale);
            worst_power = worst_power.max(rel);
            c.check(rel <= 1e-6, || format!("matrix {i} (N={n}) k={k}: relative error {rel:.2e}"));
        }
    }
    c.note(format!("max trace error {worst_trace:.1e}, max power error {worst_power:.1e}"));
    c.finish()
}

fn scl_verdicts() -> Verdict {
    let mut c = Checks::default();
    let mut holds = vec![WeightFn::constant(1.0).unwrap()];
    for rho in [0.1, 0.25, 0.4, 0.75] {
        holds.push(WeightFn::periodic_band(rho).unwrap());
    }
    for w in &holds {
        let r = scl_verdict(w, 1e-3, GRID).unwrap();
        c.check(r.verdict, || format!("{w}: verdict false (deviation {:.2e})", r.phi_report.max_deviation));
    }
    for rho in [0.05, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let w = WeightFn::band(rho).unwrap();
        let r = scl_verdict(&w, 1e-3, GRID).unwrap();
        c.check(!r.verdict, || format!("{w}: verdict true"));
        c.check(r.moment_gap > 0.0, || format!("{w}: moment gap {}", r.moment_gap));
    }
    c.finish()
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("combinatorics exactness", combinatorics),
        ("wigner theory", wigner_theory),
        ("periodic band theory", periodic_theory),
        ("band semicircle failure", band_failure),
        ("oracle equivalence", oracle_equivalence),
        ("monte carlo wigner", monte_carlo_wigner),
        ("block matrices", block_matrices),
        ("slow band", slow_band),
        ("variance decay", variance_decay_rates),
        ("relation audit", relation_audit),
        ("eigensolver oracles", eigensolver_oracles),
        ("semicircle verdicts", scl_verdicts),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {name:<26} {status}  [{:.2?}] {}",
            i + 1,
            start.elapsed(),
            v.detail
        );
        if !v.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria failed: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
