//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use ddeg::bad::{self, gap_gadget, SeparatedFamily};
use ddeg::clusters::{self, ClusterParams, DisjointRoute};
use ddeg::distributions::DistributionSpec;
use ddeg::experiments::{self, Axis, ExperimentPlan};
use ddeg::extract::{self, PressureInstance};
use ddeg::partition::{self, PartitionConfig};
use ddeg::{oracles, rng, Graph, VertexSet};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// 200 graphs with 1 <= n <= 10 over a spread of densities.
fn small_corpus() -> Vec<Graph> {
    (0..200u64)
        .map(|i| {
            let n = 1 + (i % 10) as usize;
            let p = [0.1, 0.3, 0.5, 0.7, 0.9][(i / 10 % 5) as usize];
            Graph::gnp(n, p, 1000 + i).unwrap()
        })
        .collect()
}

fn c1_symmetry() -> Outcome {
    let bad: Vec<usize> = small_corpus()
        .par_iter()
        .enumerate()
        .filter(|(_, g)| {
            let h = g.complement();
            oracles::f_exact(g).unwrap().value != oracles::f_exact(&h).unwrap().value
                || oracles::hom_exact(g).unwrap().value != oracles::hom_exact(&h).unwrap().value
        })
        .map(|(i, _)| i)
        .collect();
    outcome(bad.is_empty(), format!("200 graphs, mismatches at {bad:?}"))
}

fn c2_degree_bound() -> Outcome {
    let over = small_corpus()
        .par_iter()
        .filter(|g| oracles::f_exact(g).unwrap().value > g.max_degree() + 1)
        .count();
    outcome(over == 0, format!("{over} of 200 graphs exceed max degree + 1"))
}

fn c3_trivial() -> Outcome {
    let mut r = rng::stream(3, 0);
    let mut wrong = 0;
    for i in 0..50u64 {
        let n = r.gen_range(2..60);
        let g = Graph::gnp(n, 0.5, i).unwrap();
        let u = r.gen_range(0..n);
        let v = (u + r.gen_range(1..n)) % n;
        let spec = DistributionSpec::trivial(g.vertices());
        let e = bad::bad_pair(&g, &spec, u, v, &g.vertices(), 200, i).unwrap();
        if e.point != 1.0 {
            wrong += 1;
        }
    }
    outcome(wrong == 0, format!("{wrong} of 50 pairs differ from 1.0"))
}

fn c4_uniform_constant() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [20usize, 50, 100] {
        let (g, s) = gap_gadget(d);
        let spec = DistributionSpec::uniform_constant(s.clone());
        let e = bad::bad_pair(&g, &spec, 0, 1, &s, 100_000, d as u64).unwrap();
        let exact = 2.5 / d as f64;
        let near = (e.point - exact).abs() <= 3.0 * e.half_width;
        let below = e.point <= 3.0 / d as f64 + e.half_width;
        ok &= near && below;
        parts.push(format!("D={d}: {:.5} vs {exact:.5} (hw {:.5})", e.point, e.half_width));
    }
    outcome(ok, parts.join("; "))
}

fn c5_blended() -> Outcome {
    let beta = 0.05;
    let results: Vec<(bool, usize, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            // every fourth instance shares S among all u_i
            let private = i % 4 != 3;
            let fam = SeparatedFamily::random(3 + (i % 3) as usize, 1, 600, 0.5, 3, private, 500 + i);
            if fam.sep < 1.0 {
                return (false, 0, f64::NAN);
            }
            let spec = fam.blended_spec(beta).unwrap();
            let all = fam.g.vertices();
            let mut checked = 0;
            let mut worst = f64::NEG_INFINITY;
            let mut ok = true;
            for a in 0..fam.u.len() {
                for b in a + 1..fam.u.len() {
                    let bound = fam.bound(beta, a, b);
                    let r = bad::bad_cross(&fam.g, &spec, &fam.v_sets[a], &fam.v_sets[b], &all, 4_000, i).unwrap();
                    for p in &r.pairs {
                        checked += 1;
                        let slack = p.estimate.point - bound - 3.0 * p.estimate.half_width;
                        worst = worst.max(slack);
                        ok &= slack <= 0.0;
                    }
                }
            }
            (ok, checked, worst)
        })
        .collect();
    let failed = results.iter().filter(|r| !r.0).count();
    let pairs: usize = results.iter().map(|r| r.1).sum();
    let worst = results.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        failed == 0,
        format!("20 instances, {pairs} cross pairs, {failed} failing instances, max excess {worst:.4}"),
    )
}

fn c6_clusters() -> Outcome {
    let res: Vec<(usize, usize, usize)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let g = Graph::gnp(256, 0.5, 2000 + seed).unwrap();
            let mut views_checked = 0;
            let mut bounds_checked = 0;
            let mut violations = 0;
            for (m, lambda) in [(16.0, 2.0), (64.0, 4.0)] {
                let params = ClusterParams::full(&g, m, lambda).unwrap();
                for view in clusters::all_views(&g, &params) {
                    if view.degenerate {
                        continue;
                    }
                    views_checked += 1;
                    let c = clusters::check_view(&g, &view, &params);
                    if !(c.all() && c.moment_bound_s) {
                        violations += 1;
                    }
                }
                let t_max = (m as f64).ln() / 4f64.ln() - 1.0;
                for v in 0..g.n() {
                    let mut t = 0u32;
                    while (t as f64) < t_max {
                        let r = clusters::check_cluster_bound(&g, v, t, &params);
                        if r.applicable {
                            bounds_checked += 1;
                            violations += usize::from(!r.holds);
                        }
                        t += 1;
                    }
                }
            }
            (views_checked, bounds_checked, violations)
        })
        .collect();
    let views: usize = res.iter().map(|r| r.0).sum();
    let bounds: usize = res.iter().map(|r| r.1).sum();
    let violations: usize = res.iter().map(|r| r.2).sum();
    outcome(
        violations == 0 && views > 0 && bounds > 0,
        format!("{views} views, {bounds} size bounds, {violations} violations"),
    )
}

fn c7_disjointness() -> Outcome {
    let graphs: Vec<Graph> = (0..4u64).map(|s| Graph::gnp(256, 0.5, 3000 + s).unwrap()).collect();
    let mut r = rng::stream(7, 0);
    let mut checked = 0;
    let mut hits = 0;
    let mut draws = 0;
    while checked < 1000 && draws < 100_000 {
        draws += 1;
        let g = &graphs[r.gen_range(0..graphs.len())];
        let m = [16.0, 64.0, 256.0][r.gen_range(0..3)];
        let params = ClusterParams::full(g, m, 2.0).unwrap();
        let (a, b) = (r.gen_range(0..256), r.gen_range(0..256));
        let (t1, t2) = (r.gen_range(0..3), r.gen_range(0..3));
        if a == b {
            continue;
        }
        let v = clusters::check_disjointness(g, a, t1, b, t2, &params);
        if v.route == DisjointRoute::Inapplicable {
            continue;
        }
        checked += 1;
        hits += usize::from(v.intersection > 0);
    }
    outcome(
        checked == 1000 && hits == 0,
        format!("{checked} pairs meeting the hypotheses, {hits} intersecting clusters"),
    )
}

fn c8_diverse() -> Outcome {
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for i in 0..20u64 {
        let g = Graph::gnp(256, 0.5, 4000 + i).unwrap();
        let params = ClusterParams::full(&g, 16.0, 2.0).unwrap();
        let mut r = rng::stream(8, i);
        let a = VertexSet::from_vertices(256, (0..256).filter(|_| r.gen_bool(0.5))).unwrap();
        let d = a.iter().map(|v| g.degree(v)).min().unwrap() as f64;
        match clusters::extract_diverse_set(&g, &a, 0, d, &params) {
            Ok(ds) if clusters::diverse_set_verifies(&g, &ds, &params.s) => sizes.push(ds.u.len()),
            Ok(_) => failures.push(format!("random {i}: recheck")),
            Err(e) => failures.push(format!("random {i}: {e}")),
        }
    }
    // twin groups force the extraction to drop all but one member per group
    for (i, (groups, size)) in [(6, 2), (8, 2), (5, 3), (10, 2), (4, 4)].into_iter().enumerate() {
        let (g, s) = clusters::twin_groups(groups, size, 200, 40 + i as u64);
        let params = ClusterParams::new(8.0, 2.0, s).unwrap();
        let a = VertexSet::from_vertices(g.n(), 0..groups * size).unwrap();
        let d = a.iter().map(|v| g.degree_in(v, &params.s)).min().unwrap() as f64;
        match clusters::extract_diverse_set(&g, &a, 0, d, &params) {
            Ok(ds) if clusters::diverse_set_verifies(&g, &ds, &params.s) && ds.u.len() <= groups => {}
            Ok(ds) => failures.push(format!("twins {i}: size {}", ds.u.len())),
            Err(e) => failures.push(format!("twins {i}: {e}")),
        }
    }
    let lo = sizes.iter().min().copied().unwrap_or(0);
    outcome(
        failures.is_empty(),
        format!("20 random + 5 twin instances, smallest random output {lo}, failures {failures:?}"),
    )
}

fn c9_partition() -> Outcome {
    let cfg = PartitionConfig::desk(64, 8.0, 2.0, 0.01);
    let res: Vec<(bool, bool, String)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let g = Graph::gnp(4096, 0.5, seed).unwrap();
            let a = partition::eligible_set(&g, &cfg).unwrap();
            let run = partition::run_partition(&g, &a, &cfg, seed).unwrap();
            match run.into_result() {
                Ok(r) => {
                    let rep = partition::verify_partition(&g, &r, &cfg);
                    let note = format!(
                        "seed {seed}: t={} attempts={} (ii) {} (v) {}",
                        r.t, r.attempts_used, rep.ii.ok, rep.v.ok
                    );
                    (true, rep.exact_ok(), note)
                }
                Err(e) => (false, true, format!("seed {seed}: {e}")),
            }
        })
        .collect();
    let succeeded = res.iter().filter(|r| r.0).count();
    let exact = res.iter().filter(|r| r.0).all(|r| r.1);
    let relaxed_ok = res.iter().filter(|r| r.0 && r.2.ends_with("(ii) true (v) true")).count();
    outcome(
        succeeded >= 9 && exact,
        format!(
            "{succeeded}/10 succeeded, exact (i)(iii)(iv) on all successes: {exact}, relaxed (ii)/(v) on {relaxed_ok}"
        ),
    )
}

fn c10_pressure() -> Outcome {
    let (n, p) = (2048, 0.5);
    let res: Vec<(bool, String)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let g = Graph::gnp(n, p, seed).unwrap();
            let size = PressureInstance::gnp_size(n, p, 1.0);
            let inst = match PressureInstance::gnp(&g, p, size, seed) {
                Ok(i) => i,
                Err(e) => return (false, format!("seed {seed}: {e}")),
            };
            let rep = extract::pressure_pipeline(&g, &inst, 2000, seed).unwrap();
            (rep.all_ok(), format!("seed {seed}: {}/{}", rep.pairs_ok, rep.pairs))
        })
        .collect();
    let ok = res.iter().filter(|r| r.0).count();
    let failing: Vec<&str> = res.iter().filter(|r| !r.0).map(|r| r.1.as_str()).collect();
    outcome(ok >= 8, format!("{ok}/10 seeds meet every pair target; failing {failing:?}"))
}

fn c11_scaling() -> Outcome {
    let nr = experiments::f_scaling(&ExperimentPlan::n_sweep(5), Axis::N).unwrap();
    let pr = experiments::f_scaling(&ExperimentPlan::p_sweep(5), Axis::P).unwrap();
    outcome(
        nr.pass && pr.pass && nr.sanity_ok && pr.sanity_ok,
        format!(
            "n-slope {:.3} +- {:.3} in {:?}; p-slope {:.3} +- {:.3} in {:?}",
            nr.fit.slope, nr.fit.slope_se, nr.window, pr.fit.slope, pr.fit.slope_se, pr.window
        ),
    )
}

fn c12_hom() -> Outcome {
    let res: Vec<(usize, u64, usize, bool)> = [32usize, 64]
        .into_par_iter()
        .flat_map(|n| (0..20u64).into_par_iter().map(move |s| (n, s)))
        .map(|(n, seed)| {
            let g = Graph::gnp(n, 0.5, seed).unwrap();
            let h = oracles::hom_exact(&g).unwrap().value;
            let l = (n as f64).log2();
            (n, seed, h, h as f64 >= l / 2.0 && h as f64 <= 2.0 * l + 2.0)
        })
        .collect();
    let outside: Vec<_> = res.iter().filter(|r| !r.3).map(|r| (r.0, r.1, r.2)).collect();
    let range = |n| {
        let hs: Vec<usize> = res.iter().filter(|r| r.0 == n).map(|r| r.2).collect();
        (hs.iter().min().copied().unwrap_or(0), hs.iter().max().copied().unwrap_or(0))
    };
    outcome(
        outside.is_empty(),
        format!("hom range n=32 {:?}, n=64 {:?}; outside {outside:?}", range(32), range(64)),
    )
}

fn c13_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ddeg");
    let dir = std::env::temp_dir().join(format!("ddeg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = |name: &str| -> String { dir.join(name).to_string_lossy().into_owned() };
    let small = path("g12.txt");
    let mid = path("g256.txt");
    let big = path("g1024.txt");
    let setup: [&[&str]; 3] = [
        &["gen", "--n", "12", "--p", "0.4", "--seed", "5", "--out", &small],
        &["gen", "--n", "256", "--seed", "6", "--out", &mid],
        &["gen", "--n", "1024", "--seed", "7", "--out", &big],
    ];
    for args in setup {
        if !Command::new(bin).args(args).status().map(|s| s.success()).unwrap_or(false) {
            return outcome(false, format!("setup failed: {args:?}"));
        }
    }
    let runs: Vec<Vec<&str>> = vec![
        vec!["gen", "--n", "64", "--seed", "9"],
        vec!["gen", "--kind", "cliques", "--n", "5", "--size", "3"],
        vec!["hom", &small],
        vec!["f-exact", &small],
        vec!["f-greedy", &mid, "--seed", "2"],
        vec!["regularize", &mid],
        vec!["bad", &mid, "--spec", "uniform", "--pair", "0,1", "--samples", "3000", "--seed", "4"],
        vec!["bad", &small, "--spec", "uniform", "--set", "0,1,2,3", "--samples", "500", "--format", "csv"],
        vec!["cluster", &mid, "--vertex", "7", "--m", "16"],
        vec!["partition", &big, "--k", "32", "--alpha", "0.05", "--seed", "3"],
        vec!["pressure", &big, "--p", "0.5", "--seed", "1", "--samples", "500"],
        vec!["pressure", &big, "--p", "0.5", "--seed", "1", "--samples", "500", "--format", "csv"],
        vec!["synthesize", &big, "--seed", "2", "--samples", "200"],
        vec!["experiment", "hom", "--seeds", "2", "--format", "csv"],
        vec!["experiment", "regime", "--seeds", "1"],
        vec!["experiment", "f-n", "--seeds", "1", "--ns", "256,384,512,768", "--samples", "200", "--format", "csv"],
    ];
    let mut differing = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let out = |threads: &str| {
            let o = Command::new(bin).args(args).args(["--threads", threads]).output().unwrap();
            (o.status.code(), o.stdout)
        };
        let a = out("1");
        let b = out("4");
        let c = out("4");
        if a.0 != Some(0) || a != b || b != c || a.1.is_empty() {
            differing.push(i);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    outcome(
        differing.is_empty(),
        format!("{} invocations, 3 runs each (1 and 4 threads), differing {differing:?}", runs.len()),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check, Duration); 13] = [
        ("oracle symmetry", c1_symmetry, Duration::from_secs(120)),
        ("f <= max degree + 1", c2_degree_bound, Duration::MAX),
        ("trivial bad is 1", c3_trivial, Duration::MAX),
        ("uniform-constant bad on gap gadgets", c4_uniform_constant, Duration::from_secs(60)),
        ("blended bound on separated families", c5_blended, Duration::from_secs(300)),
        ("cluster invariants", c6_clusters, Duration::MAX),
        ("cluster disjointness", c7_disjointness, Duration::MAX),
        ("diverse extraction", c8_diverse, Duration::MAX),
        ("partition on G(4096, 1/2)", c9_partition, Duration::from_secs(600)),
        ("pressure pipeline on G(2048, 1/2)", c10_pressure, Duration::MAX),
        ("scaling slopes", c11_scaling, Duration::from_secs(900)),
        ("hom window", c12_hom, Duration::MAX),
        ("CLI determinism", c13_determinism, Duration::MAX),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= *limit;
        failed += usize::from(!pass);
        println!(
            "[{}] {label}: {} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
