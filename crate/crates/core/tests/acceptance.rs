//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use complex_bbm::gw::{GwTree, OffspringLaw};
use complex_bbm::observables::Beta;
use complex_bbm::oracles::{mean_partition, second_moment_normalized, MomentOracleInput};
use complex_bbm::phase::{classify, PhaseLabel};
use complex_bbm::rng::Substream;
use complex_bbm::stats::{
    boundary_distance, clt_from_table, correlation, free_energy_map, ks_critical_two_sample, ks_two_sample,
    run_replicas, smoothing_recursion_check, square_grid, CltReport, Estimate, FreeEnergyConfig, ReplicaPlan,
    ReplicaRow, ReplicaTable, SmoothingConfig,
};
use num_complex::Complex64;

const SEED: u64 = 20_240_611;
const B3: Beta = Beta::new(0.5, 1.0);
const B23: Beta = Beta::new(FRAC_1_SQRT_2, 1.2);
/// Inside B1 with a small pseudo-covariance `exp(-2 tau^2 r)` at r = 6.
const B1: Beta = Beta::new(0.4, 0.7);
const MART: Beta = Beta::new(0.4, 0.3);
const HORIZONS: [f64; 5] = [4.0, 6.0, 8.0, 10.0, 12.0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Suite {
    results: Vec<(u32, bool)>,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {status}  {name}  [{:.0}s]\n    {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        std::io::stdout().flush().ok();
        self.results.push((id, v.pass));
    }
}

fn est(values: impl Iterator<Item = f64>) -> Estimate {
    Estimate::of(&values.collect::<Vec<f64>>()).unwrap()
}

fn tree_law() -> Verdict {
    let law = OffspringLaw::binary();
    let n6 = est((0..40_000).map(|i| {
        GwTree::sample(6.0, &law, &mut Substream::new(SEED + 1, i)).unwrap().leaf_count() as f64
    }));
    let rel = (n6.mean / 6f64.exp() - 1.0).abs();

    let n: usize = 40_000;
    let mut counts: Vec<usize> = (0..n as u64)
        .map(|i| GwTree::sample(2.0, &law, &mut Substream::new(SEED + 2, i)).unwrap().leaf_count())
        .collect();
    counts.sort_unstable();
    // discrete KS: compare CDFs at every integer
    let p = (-2f64).exp();
    let mut ks: f64 = 0.0;
    let mut idx = 0;
    for k in 1..=*counts.last().unwrap() {
        while idx < n && counts[idx] <= k {
            idx += 1;
        }
        let geometric = 1.0 - (1.0 - p).powi(k as i32);
        ks = ks.max((idx as f64 / n as f64 - geometric).abs());
    }
    let crit = 1.6276 / (n as f64).sqrt();
    verdict(
        rel < 0.03 && ks < crit,
        format!(
            "mean n(6) = {:.2} ± {:.2} vs e^6 = {:.2} (rel {:.4} < 0.03); KS n(2) vs geometric = {ks:.5} < {crit:.5}",
            n6.mean,
            n6.se,
            6f64.exp(),
            rel
        ),
    )
}

fn partition_mean() -> Verdict {
    let (beta, rho, t) = (MART, 0.7, 6.0);
    let table = run_replicas(&ReplicaPlan::new(SEED + 3, vec![(beta, rho)], vec![t]), 0..20_000).unwrap();
    let x: Vec<Complex64> = table.column(0, 0).map(|r| Complex64::from_polar(r.log_mag.exp(), r.phase)).collect();
    let re = est(x.iter().map(|z| z.re));
    let im = est(x.iter().map(|z| z.im));
    let oracle = mean_partition(&MomentOracleInput::binary(beta, rho, t));
    let (zr, zi) = (re.z_score(oracle.re), im.z_score(oracle.im));
    verdict(
        zr < 5.0 && zi < 5.0,
        format!(
            "mean X(6) = {:.3}{:+.3}i, oracle {:.3}{:+.3}i; |z| = {zr:.2}, {zi:.2} < 5",
            re.mean, im.mean, oracle.re, oracle.im
        ),
    )
}

fn moments_table() -> ReplicaTable {
    let plan = ReplicaPlan::new(SEED + 4, vec![(B3, 0.0), (Beta::new(0.6, 0.8), 0.0)], vec![6.0, 10.0]);
    run_replicas(&plan, 0..100_000).unwrap()
}

fn second_moment_b3(table: &ReplicaTable) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (h, t) in [(0, 6.0), (1, 10.0)] {
        let m = est(table.column(h, 0).map(|r| r.normalized().norm_sqr()));
        let oracle = 1.0 + 8.0 * (1.0 - (-t / 4.0f64).exp());
        debug_assert!((oracle - second_moment_normalized(&MomentOracleInput::binary(B3, 0.0, t))).abs() < 1e-12);
        let rel = (m.mean / oracle - 1.0).abs();
        pass &= rel < 0.10;
        detail.push(format!("t={t}: {:.3} ± {:.3} vs {oracle:.4} (rel {rel:.3})", m.mean, m.se));
    }
    verdict(pass, detail.join("; ") + " ; tolerance 10%")
}

fn second_moment_b13(table: &ReplicaTable) -> Verdict {
    let t = 10.0;
    let m = est(table.column(1, 1).map(|r| r.normalized().norm_sqr() / t));
    let oracle = (1.0 + 2.0 * t) / t;
    let rel = (m.mean / oracle - 1.0).abs();
    verdict(
        rel < 0.10,
        format!("E|N^(10)|^2 = {:.4} ± {:.4} vs {oracle} (rel {rel:.3} < 0.10)", m.mean, m.se),
    )
}

fn free_energy() -> Verdict {
    let grid: Vec<Beta> = square_grid(9, 1.5).into_iter().filter(|&b| boundary_distance(b) >= 0.15).collect();
    let rows = free_energy_map(&FreeEnergyConfig::new(grid, 0.0, 12.0, 200, SEED + 5)).unwrap();
    let good = rows.iter().filter(|r| r.gap.abs() < 0.15).count();
    let frac = good as f64 / rows.len() as f64;
    let mut worst: Vec<String> = rows
        .iter()
        .filter(|r| r.gap.abs() >= 0.15)
        .map(|r| format!("{}:{}:{:+.3}", r.beta, r.label, r.gap))
        .collect();
    worst.truncate(12);
    let b2 = rows.iter().filter(|r| r.label == PhaseLabel::B2);
    let b2_gaps: Vec<f64> = b2.map(|r| r.gap).collect();
    verdict(
        frac >= 0.95,
        format!(
            "{good}/{} grid points within 0.15 ({:.1}% vs 95%); B2 gaps range [{:.3}, {:.3}]; misses: {}",
            rows.len(),
            100.0 * frac,
            b2_gaps.iter().cloned().fold(f64::INFINITY, f64::min),
            b2_gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            worst.join(" ")
        ),
    )
}

fn batch_plan(pairs: Vec<(Beta, f64)>) -> ReplicaPlan {
    ReplicaPlan::new(SEED + 6, pairs, HORIZONS.to_vec())
}

fn clt_line(c: &CltReport) -> String {
    format!(
        "rho={}: C={:.3}±{:.3} (oracle {}), KS re {:.4} im {:.4}, |mean W^2| {:.4}, mean W {:.3}{:+.3}i, intercept {:.3}±{:.3}, excluded {}",
        c.rho,
        c.c_hat,
        c.c_hat_se,
        c.c_hat_oracle.map_or("-".into(), |o| format!("{o:.3}")),
        c.ks_re,
        c.ks_im,
        c.mixed_moment,
        c.mean_w_re,
        c.mean_w_im,
        c.regression.intercept,
        c.regression.intercept_se,
        c.excluded
    )
}

fn clt_b3(a: &ReplicaTable, b: &ReplicaTable) -> Verdict {
    let r0 = clt_from_table(a, B3, 0.0, 6.0, 12.0, 2.0).unwrap();
    let r8 = clt_from_table(b, B3, 0.8, 6.0, 12.0, 2.0).unwrap();
    let mut pass = true;
    for c in [&r0, &r8] {
        pass &= c.ks_re < 0.05 && c.ks_im < 0.05;
        pass &= c.mixed_moment < 0.05;
        pass &= c.regression.intercept.abs() <= 2.0 * c.regression.intercept_se;
    }
    let ks = ks_two_sample(&r0.w_modulus(), &r8.w_modulus()).unwrap();
    let crit = ks_critical_two_sample(r0.w.len(), r8.w.len(), 0.01);
    let z = (r0.c_hat - r8.c_hat).abs() / (r0.c_hat_se.powi(2) + r8.c_hat_se.powi(2)).sqrt();
    pass &= ks < crit && z < 3.0;
    verdict(
        pass,
        format!(
            "{}\n    {}\n    rho agreement: two-sample KS |W| {ks:.4} < {crit:.4}, C z-score {z:.2} < 3",
            clt_line(&r0),
            clt_line(&r8)
        ),
    )
}

fn martingale_suite(a: &ReplicaTable, b: &ReplicaTable) -> Verdict {
    let rows = |t: f64| -> Vec<ReplicaRow> {
        [a, b]
            .iter()
            .flat_map(|tab| {
                let h = tab.horizon_index(t).unwrap();
                let p = tab.pair_index(MART, 0.5).unwrap();
                tab.column(h, p).copied().collect::<Vec<_>>()
            })
            .collect()
    };
    let at: Vec<Vec<ReplicaRow>> = [4.0, 8.0, 12.0].iter().map(|&t| rows(t)).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (t, r) in [4, 8, 12].iter().zip(&at) {
        let re = est(r.iter().map(|x| x.mckean.re));
        let im = est(r.iter().map(|x| x.mckean.im));
        pass &= re.z_score(1.0) < 5.0 && im.z_score(0.0) < 5.0;
        detail.push(format!(
            "t={t}: {:.4}{:+.4}i (z {:.2}, {:.2})",
            re.mean,
            im.mean,
            re.z_score(1.0),
            im.z_score(0.0)
        ));
    }
    let inc: Vec<Estimate> = at
        .windows(2)
        .map(|w| est(w[0].iter().zip(&w[1]).map(|(x, y)| (y.mckean - x.mckean).norm())))
        .collect();
    pass &= inc[1].mean < inc[0].mean;
    verdict(
        pass && at[0].len() == 20_000,
        format!(
            "n={}; {}; E|M(8)-M(4)| = {:.4} ± {:.4} > E|M(12)-M(8)| = {:.4} ± {:.4}",
            at[0].len(),
            detail.join(", "),
            inc[0].mean,
            inc[0].se,
            inc[1].mean,
            inc[1].se
        ),
    )
}

fn smoothing() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (beta, rho) in [(Beta::new(0.5, 0.0), 0.0), (MART, 1.0)] {
        let rep = smoothing_recursion_check(&SmoothingConfig::new(beta, rho, 2.0, 8.0, 5_000, SEED + 7)).unwrap();
        pass &= rep.ks < rep.critical_1pct;
        detail.push(format!(
            "beta={beta} rho={rho}: KS re {:.4} im {:.4} vs {:.4}",
            rep.ks_re, rep.ks_im, rep.critical_1pct
        ));
    }
    verdict(pass, detail.join("; "))
}

fn critical_objects(a: &ReplicaTable) -> Verdict {
    let table = run_replicas(&ReplicaPlan::new(SEED + 8, vec![(Beta::new(0.0, 0.0), 0.0)], vec![6.0, 9.0]), 0..40_000)
        .unwrap();
    let z6 = est(table.column(0, 0).map(|r| r.deriv));
    let sh9 = est(table.column(1, 0).map(|r| r.sh));
    let col = |t: f64| a.column(a.horizon_index(t).unwrap(), 0).copied().collect::<Vec<ReplicaRow>>();
    let positive: Vec<f64> = [4.0, 8.0, 12.0]
        .iter()
        .map(|&t| {
            let c = col(t);
            c.iter().filter(|r| r.deriv > 0.0).count() as f64 / c.len() as f64
        })
        .collect();
    let corr: Vec<f64> = [6.0, 10.0]
        .iter()
        .map(|&t| {
            let c = col(t);
            let sh: Vec<f64> = c.iter().map(|r| r.sh).collect();
            let z: Vec<f64> = c.iter().map(|r| (2.0 / PI).sqrt() * r.deriv).collect();
            correlation(&sh, &z).unwrap()
        })
        .collect();
    let pass = z6.z_score(0.0) < 4.0
        && sh9.z_score(3.0) < 3.0
        && positive[0] < positive[1]
        && positive[1] < positive[2]
        && corr[0] > 0.0
        && corr[0] < corr[1];
    verdict(
        pass,
        format!(
            "E Z(6) = {:.4} ± {:.4} (z {:.2} < 4); E SH(9) = {:.4} ± {:.4} (z {:.2} < 3); P(Z>0) at 4,8,12 = {:.4}, {:.4}, {:.4}; corr(SH, Z) at 6,10 = {:.4}, {:.4}",
            z6.mean,
            z6.se,
            z6.z_score(0.0),
            sh9.mean,
            sh9.se,
            sh9.z_score(3.0),
            positive[0],
            positive[1],
            positive[2],
            corr[0],
            corr[1]
        ),
    )
}

fn substitutes(a: &ReplicaTable) -> Verdict {
    let b23: Vec<CltReport> = [4.0, 6.0, 8.0].iter().map(|&r| clt_from_table(a, B23, 0.0, r, 12.0, 2.0).unwrap()).collect();
    let trend = b23.windows(2).all(|w| w[1].ks_re <= w[0].ks_re && w[1].ks_im <= w[0].ks_im);
    let b1 = clt_from_table(a, B1, 0.0, 6.0, 12.0, 2.0).unwrap();
    let b1_ok = b1.ks_re < 0.07 && b1.ks_im < 0.07;
    let lines: Vec<String> = b23
        .iter()
        .map(|c| format!("r={}: KS re {:.4} im {:.4}, excluded {}", c.r, c.ks_re, c.ks_im, c.excluded))
        .collect();
    assert_eq!(classify(B1), PhaseLabel::B1);
    assert_eq!(classify(B23), PhaseLabel::B23);
    verdict(
        trend && b1_ok,
        format!(
            "(a) B23 {}: non-increasing = {trend}\n    (b) B1 beta={B1}: {}",
            lines.join("; "),
            clt_line(&b1)
        ),
    )
}

fn determinism() -> Verdict {
    let cases: [&[&str]; 7] = [
        &["phase", "--beta", "0.5+1.0i"],
        &["tree", "--t", "6"],
        &["simulate", "--beta", "0.5+1i", "--horizons", "4,6,8", "--r", "4", "--replicas", "300"],
        &["free-energy-map", "--t", "6", "--replicas", "40"],
        &["clt", "--beta", "0.5+1.0i", "--rho", "0", "--t", "10", "--r", "5", "--replicas", "1000"],
        &["martingale", "--beta", "0.4+0.3i", "--rho", "0.5", "--horizons", "4,8", "--replicas", "1000"],
        &["smoothing-check", "--beta", "0.4+0.3i", "--rho", "1", "--t", "6", "--r", "2", "--replicas", "300"],
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for args in cases {
        let run = |threads: &str| {
            let out = Command::new(env!("CARGO_BIN_EXE_cbbm"))
                .args(args)
                .args(["--seed", "42", "--format", "json", "--threads", threads])
                .output()
                .unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            out.stdout
        };
        let (one, three) = (run("1"), run("3"));
        let same = one == three && !one.is_empty();
        pass &= same;
        detail.push(format!("{} {}", args[0], if same { "identical" } else { "DIFFERS" }));
    }
    verdict(pass, format!("threads 1 vs 3: {}", detail.join(", ")))
}

fn main() {
    let start = Instant::now();
    let mut suite = Suite { results: Vec::new() };
    suite.run(1, "tree law", tree_law);
    suite.run(2, "partition mean", partition_mean);
    let moments = moments_table();
    suite.run(3, "second moment B3", || second_moment_b3(&moments));
    suite.run(4, "second moment B13", || second_moment_b13(&moments));
    drop(moments);
    suite.run(5, "free-energy map", free_energy);
    let a = run_replicas(&batch_plan(vec![(B3, 0.0), (B23, 0.0), (B1, 0.0), (MART, 0.5)]), 0..10_000).unwrap();
    let b = run_replicas(&batch_plan(vec![(B3, 0.8), (MART, 0.5)]), 10_000..20_000).unwrap();
    suite.run(6, "CLT in B3", || clt_b3(&a, &b));
    suite.run(7, "martingale suite", || martingale_suite(&a, &b));
    suite.run(8, "smoothing identity", smoothing);
    suite.run(9, "critical objects", || critical_objects(&a));
    suite.run(10, "property substitutes", || substitutes(&a));
    suite.run(11, "determinism across thread counts", determinism);
    let failed: Vec<u32> = suite.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed {:?} in {:.0}s",
        suite.results.len() - failed.len(),
        failed.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
