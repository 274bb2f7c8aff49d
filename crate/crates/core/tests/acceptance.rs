//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{uniformized, watson_time_domain};
use latticesir::first_moments::{
    classify_first_moment, classify_first_moment_homogeneous, m1_inhomogeneous, m1_ode_oracle, Compartment,
    FirstMomentLabel, HomogeneousLabel, Rates,
};
use latticesir::intermittency::{classify_intermittency, ratio_same_site, LimitLabel, Space};
use latticesir::kernel::{kernel_gaussian, kernel_nearest_neighbor, MobilityKernel};
use latticesir::lattice::LatticeSpec;
use latticesir::second_moments::{
    classify_second_moment, m2_inhomogeneous, m2_ode_oracle, Asymptote, CompartmentPair, PairKind, INHOMOGENEOUS_ROWS,
};
use latticesir::simulator::{figure1_experiment, mc_moments, Figure1Config, McConfig, Quantity};
use latticesir::torus::{green_function, p00_decay_fit, Propagator, WalkRegime};

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn rates(kappa: f64, beta: f64, gamma: f64) -> Rates {
    Rates::new(kappa, beta, gamma, 1.0).unwrap()
}

fn nn(d: usize) -> MobilityKernel {
    kernel_nearest_neighbor(d).unwrap()
}

fn first_moment_oracle() -> Outcome {
    let (k, r, l) = (nn(1), rates(1.0, 0.4, 0.6), LatticeSpec::new(1, 16).unwrap());
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let spectral = m1_inhomogeneous(&k, &r, t, &l).map_err(|e| e.to_string())?;
        let oracle = m1_ode_oracle(&k, &r, t, &l).map_err(|e| e.to_string())?;
        for c in [Compartment::S, Compartment::I, Compartment::R] {
            for (a, b) in spectral.get(c).values.iter().zip(&oracle.get(c).values) {
                worst = worst.max(rel(*a, *b));
            }
        }
    }
    let msg = format!("max relative error {worst:.2e} (tol 1e-8)");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn conservation() -> Outcome {
    let (k, r, l) = (nn(1), rates(1.0, 0.4, 0.6), LatticeSpec::new(1, 16).unwrap());
    let start = m1_inhomogeneous(&k, &r, 0.0, &l).map_err(|e| e.to_string())?.total();
    let mut drift = 0.0f64;
    for j in 0..=100 {
        let t = 0.05 * j as f64;
        let total = m1_inhomogeneous(&k, &r, t, &l).map_err(|e| e.to_string())?.total();
        drift = drift.max((total - start).abs());
    }
    let msg = format!("max drift {drift:.2e} over 101 times in [0, 5] (tol 1e-10)");
    if drift < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn factorization() -> Outcome {
    // Compared both with the library propagator and with uniformization.
    let mut worst_lib = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let cases = [(1, 8), (1, 16), (1, 32), (2, 8), (2, 16), (2, 32)];
    for (d, n) in cases {
        let (k, l) = (nn(d), LatticeSpec::new(d, n).unwrap());
        let prop = Propagator::new(&k, &l).map_err(|e| e.to_string())?;
        for (beta, gamma) in [(0.4, 0.6), (0.6, 0.4), (0.5, 0.5)] {
            let r = rates(1.0, beta, gamma);
            for t in [0.5, 2.0, 5.0] {
                let m = m1_inhomogeneous(&k, &r, t, &l).map_err(|e| e.to_string())?;
                let g = ((beta - gamma) * t).exp();
                let p = prop.field(1.0, t);
                let q = uniformized(&k, 1.0, t, &l);
                for x in 0..l.sites() {
                    let v = m.i.values[x];
                    worst_lib = worst_lib.max((v - g * p[x]).abs());
                    worst_oracle = worst_oracle.max((v - g * q[x]).abs());
                }
            }
        }
    }
    let msg = format!(
        "max |m1I - e^(ct) p|: {worst_lib:.2e} against the propagator, {worst_oracle:.2e} against uniformization (tol 1e-12)"
    );
    if worst_lib <= 1e-12 && worst_oracle <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn second_moment_oracle() -> Outcome {
    let (k, l) = (nn(1), LatticeSpec::new(1, 8).unwrap());
    let r = rates(1.0, 0.4, 0.6);
    let mut worst = 0.0f64;
    for t in [0.5, 1.0] {
        let oracle = m2_ode_oracle(&k, &r, t, &l).map_err(|e| e.to_string())?;
        let same = m2_inhomogeneous(&k, &r, t, &l, PairKind::SameSite, None, None).map_err(|e| e.to_string())?;
        let pair = m2_inhomogeneous(&k, &r, t, &l, PairKind::Pair, Some([1, 0, 0]), None).map_err(|e| e.to_string())?;
        worst = worst.max(rel(same.value, oracle.get(CompartmentPair::II, 0, 0)));
        worst = worst.max(rel(pair.value, oracle.get(CompartmentPair::II, 0, 1)));
    }
    let msg = format!("max relative error {worst:.2e} (tol 1e-6)");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn monte_carlo() -> Outcome {
    let (k, l) = (nn(1), LatticeSpec::new(1, 5).unwrap());
    let r = rates(1.0, 0.4, 0.6);
    let t = 1.0;
    let o = [0, 0, 0];
    let mut cfg = McConfig::origin(t, 20_000, 1);
    cfg.quantities =
        vec![Quantity::FirstMoment { compartment: Compartment::I, site: o }, Quantity::InfectedPair { x: o, y: o }];
    let est = mc_moments(&l, &r, &k, &cfg).map_err(|e| e.to_string())?;
    let m1 = m1_inhomogeneous(&k, &r, t, &l).map_err(|e| e.to_string())?.i.values[0];
    let m2 = m2_inhomogeneous(&k, &r, t, &l, PairKind::SameSite, None, None).map_err(|e| e.to_string())?.value;
    let z1 = (est[0].mean - m1).abs() / est[0].standard_error;
    let z2 = (est[1].mean - m2).abs() / est[1].standard_error;
    let msg = format!(
        "m1I(0) {:.5} +- {:.5} vs {m1:.5} ({z1:.2} SE, tol 4); m2II(0,0) {:.5} +- {:.5} vs {m2:.5} ({z2:.2} SE, tol 5)",
        est[0].mean, est[0].standard_error, est[1].mean, est[1].standard_error
    );
    if z1 <= 4.0 && z2 <= 5.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn green_classification() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [1, 2] {
        let g = green_function(&nn(d), 1.0, 0.0, &LatticeSpec::new(d, 32).unwrap()).map_err(|e| e.to_string())?;
        ok &= g.regime == WalkRegime::Recurrent && g.value.is_none();
        notes.push(format!("d={d} {:?}", g.regime));
    }
    let k3 = nn(3);
    let coarse = green_function(&k3, 1.0, 0.0, &LatticeSpec::new(3, 32).unwrap()).map_err(|e| e.to_string())?;
    let fine = green_function(&k3, 1.0, 0.0, &LatticeSpec::new(3, 64).unwrap()).map_err(|e| e.to_string())?;
    let (a, b) = (coarse.value.unwrap_or(f64::NAN), fine.value.unwrap_or(f64::NAN));
    let oracle = watson_time_domain();
    ok &= coarse.regime == WalkRegime::Transient && fine.regime == WalkRegime::Transient;
    ok &= (a - b).abs() <= 1e-3 && (b - oracle).abs() <= 1e-3;
    notes.push(format!("d=3 {:?}, kappa G0 = {a:.6} (n=32), {b:.6} (n=64), oracle {oracle:.6}", fine.regime));
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn intermittency_limits() -> Outcome {
    let r = rates(1.0, 0.6, 0.4);
    let v50 = ratio_same_site(&r, None, 50.0, Space::Homogeneous).map_err(|e| e.to_string())?;
    let a_ok = (v50 - 16.0).abs() <= 1e-6;
    let crit = rates(1.0, 0.5, 0.5);
    let r10 = ratio_same_site(&crit, None, 10.0, Space::Homogeneous).map_err(|e| e.to_string())?;
    let r100 = ratio_same_site(&crit, None, 100.0, Space::Homogeneous).map_err(|e| e.to_string())?;
    let b_ok = r100 / r10 >= 9.0;
    let msg = format!(
        "(a) ratio(50) = {v50:.9}, |ratio(50) - 16| = {:.3e} (tol 1e-6) {}; (b) ratio(100)/ratio(10) = {:.4} (need >= 9) {}",
        (v50 - 16.0).abs(),
        if a_ok { "ok" } else { "FAIL" },
        r100 / r10,
        if b_ok { "ok" } else { "FAIL" }
    );
    if a_ok && b_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Table-2 label from the signs of alpha and theta.
fn expected_first(alpha: f64, theta: f64) -> FirstMomentLabel {
    let tol = 1e-9;
    if theta < -tol {
        FirstMomentLabel::Vanish
    } else if theta.abs() <= tol {
        FirstMomentLabel::SteadyDelta
    } else if alpha.abs() <= tol {
        FirstMomentLabel::GrowOriginOnly
    } else {
        FirstMomentLabel::GrowEverywhere
    }
}

/// First feasible inhomogeneous second-moment row (1-based) for the given signs.
fn expected_second_row(beta: f64, gamma: f64, alpha: f64) -> Option<usize> {
    let tol = 1e-9;
    let s = |x: f64| {
        if x > tol {
            1
        } else if x < -tol {
            -1
        } else {
            0
        }
    };
    let (diff, sum) = (s(beta - gamma), s(beta + gamma));
    let (a, th, mu) = (s(alpha), s(alpha + beta - gamma), s(alpha + beta + gamma));
    if diff == 0 && a < 0 && th < 0 {
        Some(1)
    } else if diff == 0 && a == 0 && th == 0 {
        Some(2)
    } else if sum < 0 {
        // Rows 3 and 4 need beta + gamma < 0.
        unreachable!("negative rates")
    } else if sum > 0 && a < 0 && mu < 0 {
        Some(5)
    } else if sum > 0 && a <= 0 && mu > 0 {
        Some(6)
    } else {
        None
    }
}

fn sweep_frequencies(d: usize) -> Vec<Vec<f64>> {
    let ks: Vec<f64> = (0..8).map(|j| -PI + 2.0 * PI * j as f64 / 8.0).collect();
    match d {
        1 => ks.iter().map(|&k| vec![k]).collect(),
        _ => ks.iter().flat_map(|&a| ks.iter().map(move |&b| vec![a, b])).collect(),
    }
}

fn nn_symbol(k: &[f64]) -> f64 {
    k.iter().map(|x| x.cos() - 1.0).sum::<f64>() / k.len() as f64
}

fn table_classifiers() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let mut rows_seen = [false; 6];
    let mut labels_seen = std::collections::BTreeSet::new();
    let grid_rates = [0.0, 0.1, 0.2, 0.4, 0.5, 0.6, 1.0, 2.0];
    for d in [1, 2] {
        let k = nn(d);
        for &kappa in &[0.0, 0.05, 0.5, 1.0] {
            for &beta in &grid_rates {
                for &gamma in &grid_rates[1..] {
                    let r = rates(kappa, beta, gamma);
                    let hom = classify_first_moment_homogeneous(&r);
                    let want_hom = if beta < gamma {
                        HomogeneousLabel::Vanish
                    } else if beta == gamma {
                        HomogeneousLabel::SteadyState
                    } else {
                        HomogeneousLabel::Grow
                    };
                    checked += 1;
                    if hom != want_hom {
                        failures.push(format!("table 2 homogeneous ({beta},{gamma}): {hom:?}"));
                    }
                    for kv in sweep_frequencies(d) {
                        let alpha = kappa * nn_symbol(&kv);
                        let first = classify_first_moment(&k, &r, &kv).map_err(|e| e.to_string())?;
                        let want = expected_first(alpha, alpha + beta - gamma);
                        labels_seen.insert(want.as_str());
                        checked += 1;
                        if first.label != want {
                            failures.push(format!("table 2 ({kappa},{beta},{gamma},{kv:?}): {:?}", first.label));
                        }
                        let second = classify_second_moment(&k, &r, &kv).map_err(|e| e.to_string())?;
                        let (hs, hp) = if beta > gamma {
                            (Asymptote::Infinite, Asymptote::Infinite)
                        } else if beta < gamma {
                            (Asymptote::Zero, Asymptote::Zero)
                        } else {
                            (Asymptote::Infinite, Asymptote::Zero)
                        };
                        checked += 2;
                        if (second.homogeneous_same_site, second.homogeneous_pair) != (hs, hp) {
                            failures.push(format!("table 3 ({beta},{gamma})"));
                        }
                        let row = expected_second_row(beta, gamma, alpha);
                        if let Some(i) = row {
                            rows_seen[i - 1] = true;
                        }
                        let labels = row.map(|i| (INHOMOGENEOUS_ROWS[i - 1].same_site, INHOMOGENEOUS_ROWS[i - 1].pair));
                        let got = second.inhomogeneous_same_site.zip(second.inhomogeneous_pair);
                        if second.inhomogeneous_row != row || got != labels {
                            failures.push(format!(
                                "table 4 ({kappa},{beta},{gamma},{kv:?}): row {:?}, want {row:?}",
                                second.inhomogeneous_row
                            ));
                        }
                    }
                }
            }
        }
    }
    // Literal rows of the second-moment tables.
    let literal = [
        ((0.5, 0.5, PI / 2.0), 1, (Asymptote::Zero, Asymptote::Zero)),
        ((0.5, 0.5, 0.0), 2, (Asymptote::Delta, Asymptote::Delta)),
        ((0.1, 0.2, PI), 5, (Asymptote::Zero, Asymptote::Zero)),
        ((0.6, 0.4, 0.0), 6, (Asymptote::Infinite, Asymptote::Infinite)),
    ];
    for ((beta, gamma, kx), row, labels) in literal {
        let s = classify_second_moment(&nn(1), &rates(1.0, beta, gamma), &[kx]).map_err(|e| e.to_string())?;
        checked += 1;
        if s.inhomogeneous_row != Some(row) || s.inhomogeneous_same_site.zip(s.inhomogeneous_pair) != Some(labels) {
            failures.push(format!("table 4 row {row}: {:?}", s.inhomogeneous_row));
        }
    }
    let infeasible: Vec<usize> =
        INHOMOGENEOUS_ROWS.iter().enumerate().filter(|(_, r)| !r.feasible).map(|(i, _)| i + 1).collect();
    if infeasible != [3, 4] {
        failures.push(format!("infeasible rows reported as {infeasible:?}"));
    }
    if !(rows_seen[0] && rows_seen[1] && rows_seen[4] && rows_seen[5]) {
        failures.push(format!("sweep missed a feasible table-4 row: {rows_seen:?}"));
    }
    if labels_seen.len() != 4 {
        failures.push(format!("sweep missed a table-2 row: {labels_seen:?}"));
    }

    // Table 5: homogeneous from the analytic ratios, inhomogeneous on a torus.
    let mut table5 = Vec::new();
    let k1 = nn(1);
    for (space, beta, gamma, want) in [
        (Space::Homogeneous, 0.3, 0.5, LimitLabel::Intermittent),
        (Space::Homogeneous, 0.5, 0.5, LimitLabel::Intermittent),
        (Space::Homogeneous, 0.6, 0.4, LimitLabel::Bounded),
        (Space::Inhomogeneous, 0.4, 0.6, LimitLabel::Intermittent),
        (Space::Inhomogeneous, 0.5, 0.5, LimitLabel::Intermittent),
        (Space::Inhomogeneous, 0.6, 0.4, LimitLabel::Intermittent),
    ] {
        let rep = classify_intermittency(&rates(1.0, beta, gamma), &k1, space).map_err(|e| e.to_string())?;
        checked += 1;
        let mut note =
            format!("{space:?} ({beta},{gamma}) {} growth {:.3e}", rep.limit_label.as_str(), rep.witness_growth);
        if let Some(v) = rep.limit_value {
            note.push_str(&format!(" limit {v:.6}"));
        }
        if let Some(v) = rep.pair_limit_value {
            note.push_str(&format!(" pair limit {v:.6}"));
        }
        if rep.limit_label != want {
            failures.push(format!("table 5 {note}, want {}", want.as_str()));
        }
        if space == Space::Homogeneous && want == LimitLabel::Bounded {
            let (e1, e2) = (1.0 + 3.0 / 0.2, 1.0 - 2.0 * 0.5 / 0.2);
            let near = |got: Option<f64>, want: f64| got.is_some_and(|v| (v - want).abs() <= 1e-12 * want.abs());
            if !near(rep.limit_value, e1) || !near(rep.pair_limit_value, e2) {
                failures.push(format!("table 5 homogeneous limits {:?} {:?}", rep.limit_value, rep.pair_limit_value));
            }
        }
        table5.push(note);
    }
    for note in &table5 {
        println!("    table 5: {note}");
    }
    let msg = format!("{checked} labels checked, {} mismatches", failures.len());
    if failures.is_empty() {
        Ok(msg)
    } else {
        for f in failures.iter().take(20) {
            println!("    mismatch: {f}");
        }
        Err(msg)
    }
}

fn decay_exponent() -> Outcome {
    let grid: Vec<f64> = (0..=15).map(|j| 50.0 * 8f64.powf(j as f64 / 15.0)).collect();
    let mut notes = Vec::new();
    let mut ok = true;
    for (d, n) in [(1, 4096), (2, 512)] {
        let fit = p00_decay_fit(&nn(d), 1.0, &grid, &LatticeSpec::new(d, n).unwrap()).map_err(|e| e.to_string())?;
        let target = d as f64 / 2.0;
        let err = (fit.exponent - target).abs() / target;
        ok &= err <= 0.1;
        notes.push(format!("d={d} n={n} exponent {:.5} vs {target} ({:.2}%)", fit.exponent, 100.0 * err));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn figure_one() -> Outcome {
    let cfg = Figure1Config::default();
    let gauss = kernel_gaussian(2, 16.0, 16).map_err(|e| e.to_string())?;
    let res = figure1_experiment(&gauss, &nn(2), &cfg).map_err(|e| e.to_string())?;
    let (m, s) = (res.msd_ratio(), res.distinct_ratio());
    let msg = format!(
        "{}x{} grid, start {:?} (one-based {},{}), {} events, seed {}: MSD ratio {m:.3}, distinct-site ratio {s:.3} ({} vs {})",
        res.n,
        res.n,
        &res.start[..2],
        res.start[0] + 1,
        res.start[1] + 1,
        cfg.events,
        cfg.seed,
        res.nonlocal.distinct_sites,
        res.local.distinct_sites
    );
    let centred = res.start[0] == 25 && res.start[1] == 25;
    let full = !res.nonlocal.extinct && !res.local.extinct;
    if m >= 2.0 && s >= 2.0 && centred && full {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: "1", title: "first moments vs ODE oracle", budget: secs(1), run: first_moment_oracle },
        Criterion { id: "2", title: "population conservation", budget: None, run: conservation },
        Criterion { id: "3", title: "factorization m1I = e^(ct) p", budget: None, run: factorization },
        Criterion { id: "4", title: "second moments vs pair ODE oracle", budget: secs(10), run: second_moment_oracle },
        Criterion { id: "5", title: "Monte Carlo validation", budget: secs(60), run: monte_carlo },
        Criterion { id: "6", title: "Green function classification", budget: secs(30), run: green_classification },
        Criterion { id: "7", title: "intermittency limits", budget: None, run: intermittency_limits },
        Criterion { id: "8", title: "table classifiers", budget: None, run: table_classifiers },
        Criterion { id: "9", title: "p(t,0,0) decay exponent", budget: secs(60), run: decay_exponent },
        Criterion { id: "10", title: "local vs nonlocal spread", budget: secs(30), run: figure_one },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let over = c.budget.is_some_and(|b| took > b);
        let (pass, detail) = match outcome {
            Ok(d) => (!over, d),
            Err(d) => (false, d),
        };
        let budget = c.budget.map(|b| format!(" / budget {}s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} [{:.3}s{budget}{}] {detail}",
            c.id,
            c.title,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if over { " EXCEEDED" } else { "" }
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
