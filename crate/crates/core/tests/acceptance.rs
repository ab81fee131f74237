//! Acceptance run: one PASS/FAIL line per criterion, misses listed below it.
//!
//! Every simulation uses 10,000 replications and a fixed master seed.
//! Set `ACCEPTANCE_ONLY=1,4` to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rss_entropy::entropy::{ebrahimi, h1, h2, vasicek};
use rss_entropy::gof::{exp_statistic_rss, exp_statistic_srs, kl1, kl2, norm_statistic_srs};
use rss_entropy::moments::{maceachern_variance, park_breakpoints};
use rss_entropy::montecarlo::{
    calibrate_critical_values, default_alternatives, estimate_bias_rmse, estimate_power, null_distribution,
    power_study, summarize_min, upper_quantile, upper_quantile_index, CriticalTable, MonteCarloConfig,
};
use rss_entropy::sampling::{draw_rss, stream_tag, substream};
use rss_entropy::{
    Distribution, Estimator, RankedSetSample, Scheme, SimpleSample, StatisticSpec, TestKind, Variant, WindowSpec,
};

const REPS: usize = 10_000;
const SEED: u64 = 20_240_917;

fn cfg(k: usize, r: usize, m_lo: usize, m_hi: usize, alphas: &[f64]) -> MonteCarloConfig {
    MonteCarloConfig { reps: REPS, master_seed: SEED, k, r, m_range: m_lo..=m_hi, alpha_levels: alphas.to_vec(), workers: 0 }
}

fn dist(s: &str) -> Distribution {
    s.parse().expect("distribution")
}

fn w(m: usize) -> WindowSpec {
    WindowSpec::new(m).unwrap()
}

/// Outcome of one criterion.
struct Outcome {
    checked: usize,
    misses: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checked: 0, misses: Vec::new(), notes: Vec::new() }
    }

    fn cell(&mut self, what: String, got: f64, want: f64, tol: f64) {
        self.checked += 1;
        if (got - want).abs() > tol || !got.is_finite() {
            self.misses.push(format!("{what}: got {got:.4}, expected {want:.4} (diff {:+.4}, tol {tol})", got - want));
        }
    }

    fn check(&mut self, what: String, ok: bool) {
        self.checked += 1;
        if !ok {
            self.misses.push(what);
        }
    }
}

// n = 10 (k = 10, r = 1): (m, srs bias, srs rmse, rss bias, rss rmse)
const BIAS_UNIFORM: [(usize, f64, f64, f64, f64); 5] = [
    (1, -0.381, 0.451, -0.259, 0.326),
    (2, -0.222, 0.293, -0.108, 0.168),
    (3, -0.159, 0.228, -0.070, 0.124),
    (4, -0.140, 0.224, -0.056, 0.110),
    (5, -0.131, 0.212, -0.050, 0.107),
];
const BIAS_EXP: [(usize, f64, f64, f64, f64); 5] = [
    (1, -0.392, 0.561, -0.298, 0.398),
    (2, -0.222, 0.436, -0.142, 0.266),
    (3, -0.174, 0.405, -0.078, 0.241),
    (4, -0.114, 0.382, -0.031, 0.236),
    (5, -0.064, 0.371, 0.012, 0.249),
];
const BIAS_NORMAL: [(usize, f64, f64, f64, f64); 5] = [
    (1, -0.452, 0.458, -0.342, 0.428),
    (2, -0.342, 0.441, -0.227, 0.311),
    (3, -0.301, 0.408, -0.207, 0.289),
    (4, -0.305, 0.394, -0.209, 0.285),
    (5, -0.289, 0.389, -0.204, 0.279),
];

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let c = cfg(10, 1, 1, 5, &[]);
    for (name, table) in [("uniform", &BIAS_UNIFORM), ("exp(1)", &BIAS_EXP), ("normal(0,1)", &BIAS_NORMAL)] {
        let d = dist(name);
        let srs = estimate_bias_rmse(&d, Scheme::Srs, Estimator::Ebrahimi, &c).unwrap();
        let rss = estimate_bias_rmse(&d, Scheme::Rss, Estimator::RssPooledH1, &c).unwrap();
        for &(m, sb, sr, rb, rr) in table {
            let s = srs.find(Some(m), None, None).unwrap();
            let r = rss.find(Some(m), None, None).unwrap();
            out.cell(format!("{name} m={m} srs bias"), s.cell("bias").unwrap().value, sb, 0.02);
            out.cell(format!("{name} m={m} srs rmse"), s.cell("rmse").unwrap().value, sr, 0.02);
            out.cell(format!("{name} m={m} rss bias"), r.cell("bias").unwrap().value, rb, 0.02);
            out.cell(format!("{name} m={m} rss rmse"), r.cell("rmse").unwrap().value, rr, 0.02);
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let c = cfg(10, 2, 1, 10, &[]);
    for (name, mrmse, ms) in [("uniform", 0.062, &[8][..]), ("exp(1)", 0.157, &[5][..]), ("normal(0,1)", 0.184, &[5, 10][..])] {
        let report = estimate_bias_rmse(&dist(name), Scheme::Rss, Estimator::RssPooledH1, &c).unwrap();
        let s = summarize_min(&report).unwrap();
        out.cell(format!("{name} minimum RMSE"), s.mrmse, mrmse, 0.01);
        let close = ms.iter().any(|&m| s.argmin_rmse.abs_diff(m) <= 1);
        out.check(format!("{name} argmin m={} (ties {:?}), expected one of {ms:?} +-1", s.argmin_rmse, s.m_at_mrmse), close);
        out.notes.push(format!("{name}: min RMSE {:.4} at m={} (ties {:?})", s.mrmse, s.argmin_rmse, s.m_at_mrmse));
    }
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    // (test, n, m, alpha, expected)
    let cells = [
        (TestKind::Exponentiality, 10, 1, 0.05, 0.6318),
        (TestKind::Exponentiality, 10, 3, 0.1, 0.2095),
        (TestKind::Exponentiality, 20, 2, 0.01, 0.3813),
        (TestKind::Exponentiality, 20, 4, 0.05, 0.1738),
        (TestKind::Exponentiality, 30, 5, 0.1, 0.0979),
        (TestKind::Exponentiality, 30, 10, 0.01, 0.1162),
        (TestKind::Normality, 10, 2, 0.05, 0.4404),
        (TestKind::Normality, 10, 4, 0.01, 0.3987),
        (TestKind::Normality, 20, 3, 0.1, 0.2296),
        (TestKind::Normality, 20, 5, 0.05, 0.2287),
        (TestKind::Normality, 30, 5, 0.05, 0.1739),
        (TestKind::Normality, 30, 8, 0.01, 0.2082),
    ];
    for test in [TestKind::Exponentiality, TestKind::Normality] {
        let spec = StatisticSpec::rss(test, Variant::Kl1).unwrap();
        for n in [10, 20, 30] {
            let wanted: Vec<_> = cells.iter().filter(|c| c.0 == test && c.1 == n).collect();
            let hi = wanted.iter().map(|c| c.2).max().unwrap();
            let report = calibrate_critical_values(spec, &cfg(10, n / 10, 1, hi, &[0.1, 0.05, 0.01])).unwrap();
            for &&(_, _, m, alpha, expected) in &wanted {
                let got = report.find(Some(m), Some(alpha), None).unwrap().cell("critical").unwrap().value;
                out.cell(format!("{test} n={n} m={m} alpha={alpha}"), got, expected, 0.03);
            }
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let groups = [
        (TestKind::Exponentiality, 4, vec![("gamma(1.5)", 0.2740), ("weibull(1.5)", 0.6199), ("uniform", 0.9979), ("gamma(3)", 0.9693)]),
        (TestKind::Normality, 3, vec![("uniform", 0.4897), ("chisq(2)", 0.9650)]),
    ];
    for (test, m, cells) in groups {
        let spec = StatisticSpec::rss(test, Variant::Kl1).unwrap();
        let alts: Vec<Distribution> = cells.iter().map(|(d, _)| dist(d)).collect();
        let study = power_study(spec, &alts, 0.05, &cfg(10, 2, m, m, &[0.05])).unwrap();
        let report = study.power_report().unwrap();
        for (name, expected) in cells {
            let label = dist(name).to_string();
            let got = report.find(Some(m), Some(0.05), Some(&label)).unwrap().cell("power").unwrap().value;
            out.cell(format!("{test} n=20 m={m} vs {name}"), got, expected, 0.03);
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let cases = [
        (TestKind::Exponentiality, 10, 5, 0.7009),
        (TestKind::Exponentiality, 20, 8, 0.7406),
        (TestKind::Normality, 20, 4, 0.5586),
        (TestKind::Normality, 30, 4, 0.6628),
        (TestKind::Normality, 40, 4, 0.7173),
    ];
    for (test, n, m_expected, ap_expected) in cases {
        let spec = StatisticSpec::rss(test, Variant::Kl1).unwrap();
        let r = n / 10;
        let c = cfg(10, r, 1, spec.max_window(10, r), &[0.05]);
        let study = power_study(spec, &default_alternatives(test), 0.05, &c).unwrap();
        let opt = study.optimal_window().unwrap();
        let at_expected = study
            .average_power_cells()
            .into_iter()
            .find(|(m, _)| *m == m_expected)
            .map(|(_, c)| c.value)
            .unwrap();
        let m_ok = opt.m_star == m_expected || (opt.m_star.abs_diff(m_expected) <= 1 && opt.ties.contains(&m_expected));
        out.check(
            format!("{test} n={n}: m*={} (ties {:?}), expected {m_expected}", opt.m_star, opt.ties),
            m_ok,
        );
        out.cell(format!("{test} n={n} AP at m*={}", opt.m_star), opt.ap_star, ap_expected, 0.02);
        let tie = if opt.m_star != m_expected && opt.ties.contains(&m_expected) { " tie reported" } else { "" };
        out.notes.push(format!(
            "{test} n={n}: m*={} AP={:.4}+-{:.4} ties={:?}, AP at m={m_expected} is {at_expected:.4}{tie}",
            opt.m_star, opt.ap_star, opt.stderr, opt.ties
        ));
    }
    out
}

fn random_rss(rng: &mut impl Rng, k: usize, r: usize, positive: bool) -> RankedSetSample {
    let values: Vec<f64> = (0..k * r)
        .map(|_| if positive { rng.random_range(0.05..20.0) } else { rng.random_range(-20.0..20.0) })
        .collect();
    RankedSetSample::from_flat(k, r, values).unwrap()
}

fn map_rss(x: &RankedSetSample, f: impl Fn(f64) -> f64) -> RankedSetSample {
    RankedSetSample::from_flat(x.k(), x.r(), x.pooled().iter().map(|&v| f(v)).collect()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = substream(SEED, stream_tag("acceptance:properties"), 0);
    let (mut worst_loc, mut worst_scale, mut worst_stat, mut worst_eq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..300 {
        let k = rng.random_range(2..=8);
        let r = rng.random_range(2..=5);
        let x = random_rss(&mut rng, k, r, true);
        let shift: f64 = rng.random_range(-30.0..30.0);
        let scale: f64 = rng.random_range(0.05..20.0);
        let xs = map_rss(&x, |v| v + shift);
        let xa = map_rss(&x, |v| v * scale);
        let pooled = |x: &RankedSetSample| SimpleSample::new(x.pooled().to_vec()).unwrap();
        let m = rng.random_range(1..=(k * r / 2));
        let mc = rng.random_range(1..=(k / 2).max(1));
        let ests: [(&str, Box<dyn Fn(&RankedSetSample) -> Option<f64>>); 4] = [
            ("vasicek", Box::new(|x| vasicek(&pooled(x), w(m)).ok().map(|e| e.value))),
            ("ebrahimi", Box::new(|x| ebrahimi(&pooled(x), w(m)).ok().map(|e| e.value))),
            ("h1", Box::new(|x| h1(x, w(m)).ok().map(|e| e.value))),
            ("h2", Box::new(|x| h2(x, w(mc)).ok().map(|e| e.value))),
        ];
        for (_, f) in &ests {
            if let (Some(a), Some(b), Some(c)) = (f(&x), f(&xs), f(&xa)) {
                worst_loc = worst_loc.max((a - b).abs());
                worst_scale = worst_scale.max((c - a - scale.ln()).abs());
            }
        }
        // normality statistics: affine; exponentiality: scale
        let xn = map_rss(&x, |v| scale * v + shift);
        let norm_stats: [Box<dyn Fn(&RankedSetSample) -> Option<f64>>; 4] = [
            Box::new(|x| norm_statistic_srs(&pooled(x), w(m)).ok().map(|s| s.value)),
            Box::new(|x| kl1(x, w(m), Estimator::RssPooledH1).ok().map(|s| s.value)),
            Box::new(|x| kl2(x, w(m), Estimator::RssPooledH1).ok().map(|s| s.value)),
            Box::new(|x| kl2(x, w(mc), Estimator::RssPerCycleH2).ok().map(|s| s.value)),
        ];
        for f in &norm_stats {
            if let (Some(a), Some(b)) = (f(&x), f(&xn)) {
                worst_stat = worst_stat.max((a - b).abs());
            }
        }
        let exp_stats: [Box<dyn Fn(&RankedSetSample) -> Option<f64>>; 2] = [
            Box::new(|x| exp_statistic_srs(&pooled(x), w(m)).ok().map(|s| s.value)),
            Box::new(|x| exp_statistic_rss(x, w(m)).ok().map(|s| s.value)),
        ];
        for f in &exp_stats {
            if let (Some(a), Some(b)) = (f(&x), f(&xa)) {
                worst_stat = worst_stat.max((a - b).abs());
            }
        }
        let one = random_rss(&mut rng, k * r, 1, false);
        let a = h1(&one, w(m)).unwrap().value;
        let b = ebrahimi(&pooled(&one), w(m)).unwrap().value;
        worst_eq = worst_eq.max((a - b).abs());
    }
    out.check(format!("estimator location invariance, worst {worst_loc:.2e}"), worst_loc <= 1e-10);
    out.check(format!("estimator scale equivariance, worst {worst_scale:.2e}"), worst_scale <= 1e-10);
    out.check(format!("statistic affine/scale invariance, worst {worst_stat:.2e}"), worst_stat <= 1e-10);
    out.check(format!("h1 (r=1) vs ebrahimi, worst {worst_eq:.2e}"), worst_eq <= 1e-12);

    // MacEachern variance is unbiased for sigma^2
    let normal = Distribution::standard_normal();
    let tag = stream_tag("acceptance:maceachern");
    let reps = 100_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for i in 0..reps {
        let mut rng = substream(SEED, tag, i);
        let v = maceachern_variance(&draw_rss(&normal, 3, 4, &mut rng)).unwrap();
        sum += v;
        sq += v * v;
    }
    let mean = sum / reps as f64;
    let se = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
    out.check(format!("maceachern mean {mean:.4} vs 1 (se {se:.4})"), (mean - 1.0).abs() <= 4.0 * se);

    let bp = park_breakpoints(&SimpleSample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap(), 1).unwrap();
    out.check(format!("breakpoints for (1,2,3,4), m=1: {:?}", bp.eta), bp.eta == vec![0.5, 1.5, 2.5, 3.5, 4.5]);

    let sorted: Vec<f64> = (1..=REPS).map(|i| i as f64).collect();
    let quantile_ok = [(0.1, 9000.0), (0.05, 9500.0), (0.025, 9750.0), (0.01, 9900.0)]
        .iter()
        .all(|&(a, want)| upper_quantile(&sorted, a).0 == want && upper_quantile(&sorted, a) == upper_quantile(&sorted, a))
        && upper_quantile_index(100, 0.05) == 94;
    out.check("quantile convention ceil((1-alpha) reps)".into(), quantile_ok);

    let spec = StatisticSpec::rss(TestKind::Normality, Variant::Kl2).unwrap();
    let base = MonteCarloConfig { reps: 2000, ..cfg(10, 2, 1, 5, &[0.1, 0.05]) };
    let reports: Vec<_> = [1, 3, 8]
        .iter()
        .map(|&workers| calibrate_critical_values(spec, &MonteCarloConfig { workers, ..base.clone() }).unwrap())
        .collect();
    let bits = |r: &rss_entropy::MonteCarloReport| -> Vec<u64> {
        r.rows.iter().flat_map(|row| row.cells.iter().flat_map(|c| [c.value.to_bits(), c.stderr.to_bits()])).collect()
    };
    out.check("reports bit-identical for 1, 3 and 8 workers".into(), reports.iter().all(|r| bits(r) == bits(&reports[0])));
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let alpha = 0.05;
    let triples = [
        (StatisticSpec::rss(TestKind::Exponentiality, Variant::Kl1).unwrap(), 10, 3),
        (StatisticSpec::rss(TestKind::Exponentiality, Variant::Kl1).unwrap(), 30, 6),
        (StatisticSpec::srs(TestKind::Exponentiality), 20, 4),
        (StatisticSpec::rss(TestKind::Normality, Variant::Kl1).unwrap(), 20, 3),
        (StatisticSpec::rss(TestKind::Normality, Variant::Kl2).unwrap(), 30, 5),
        (StatisticSpec::srs(TestKind::Normality), 10, 2),
    ];
    for (spec, n, m) in triples {
        let c = cfg(10, n / 10, m, m, &[alpha]);
        let table = CriticalTable::from_report(&calibrate_critical_values(spec, &c).unwrap()).unwrap();
        let size = estimate_power(spec, &null_distribution(spec.test), &table, alpha, &c).unwrap();
        let got = size.rows[0].cell("power").unwrap().value;
        out.cell(format!("size of {spec} n={n} m={m}"), got, alpha, 0.01);
        out.notes.push(format!("{spec} n={n} m={m}: size {got:.4}"));
    }
    out
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 7] = [
        (1, "entropy bias/RMSE at n=10, RSS h1 and SRS ebrahimi (+-0.02)", criterion_1),
        (2, "minimum RMSE of h1 at k=10, r=2 (+-0.01, m +-1)", criterion_2),
        (3, "critical values, 12 cells (+-0.03)", criterion_3),
        (4, "RSS powers at n=20 (+-0.03)", criterion_4),
        (5, "optimal window and average power (+-0.02, m* +-1 on ties)", criterion_5),
        (6, "property suite", criterion_6),
        (7, "calibrate-then-test size at alpha=0.05 (+-0.01)", criterion_7),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let pass = outcome.misses.is_empty();
        failed += usize::from(!pass);
        println!(
            "criterion {id}: {} - {title}: {}/{} checks ok ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.checked - outcome.misses.len(),
            outcome.checked,
            start.elapsed().as_secs_f64()
        );
        for miss in &outcome.misses {
            println!("    miss: {miss}");
        }
        for note in &outcome.notes {
            println!("    note: {note}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
