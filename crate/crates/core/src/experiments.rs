//! Experiment harness: tail bounds, log-log fits, scaling runs on `G(n, p)`
//! and CSV output.
//!
//! Every grid point owns the seed it is reported with, so a CSV row can be
//! reproduced from its `(n, p, seed, budget)` columns alone.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extract::{pressure_pipeline, realize_witness, PressureInstance};
use crate::graph::Graph;
use crate::oracles;

/// Value of the `commit` column: set `DDEG_COMMIT` at build time to pin it,
/// otherwise the crate version.
pub const COMMIT: &str = match option_env!("DDEG_COMMIT") {
    Some(c) => c,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

pub const CSV_HEADER: &str = "n,p,seed,metric,value,half_width,budget,commit";

// ---------------------------------------------------------------------------
// Tail bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum TailKind {
    /// `P(X <= (1 - delta) mu) <= exp(-delta^2 mu / 2)`.
    ChernoffLower { mu: f64, delta: f64 },
    /// `P(X >= (1 + delta) mu) <= exp(-delta^2 mu / 4)`.
    ChernoffUpper { mu: f64, delta: f64 },
    /// `P(|S - E S| >= t) <= 2 exp(-2 t^2 / sum (b_i - a_i)^2)`.
    Hoeffding { t: f64, ranges: Vec<(f64, f64)> },
    /// `P(X >= L) <= (e n p / L)^L` for `X ~ Bin(n, p)`.
    Binomial { n: u64, p: f64, l: f64 },
    /// `P(X >= np) > 1/4` for `X ~ Bin(n, p)`, `p ∈ (1/n, 1)`; the value is
    /// the lower bound `1/4`.
    Quarter { n: u64, p: f64 },
}

pub fn tail_bound(kind: &TailKind) -> Result<f64> {
    let prob = |p: f64| {
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::InvalidProbability(p))
        }
    };
    match *kind {
        TailKind::ChernoffLower { mu, delta } | TailKind::ChernoffUpper { mu, delta } => {
            if !(0.0..=1.0).contains(&delta) {
                return Err(Error::arg(format!("delta = {delta} outside [0, 1]")));
            }
            if !(mu >= 0.0) {
                return Err(Error::arg("mu must be nonnegative"));
            }
            let div = if matches!(kind, TailKind::ChernoffLower { .. }) { 2.0 } else { 4.0 };
            Ok((-delta * delta * mu / div).exp())
        }
        TailKind::Hoeffding { t, ref ranges } => {
            if !(t > 0.0) {
                return Err(Error::arg("t must be positive"));
            }
            let mut w = 0.0;
            for &(a, b) in ranges {
                if !(a <= b) {
                    return Err(Error::arg(format!("range [{a}, {b}] is empty")));
                }
                w += (b - a) * (b - a);
            }
            if w == 0.0 {
                return Err(Error::arg("all ranges are degenerate"));
            }
            Ok(2.0 * (-2.0 * t * t / w).exp())
        }
        TailKind::Binomial { n, p, l } => {
            prob(p)?;
            if !(l > 0.0) {
                return Err(Error::arg("L must be positive"));
            }
            Ok((std::f64::consts::E * n as f64 * p / l).powf(l))
        }
        TailKind::Quarter { n, p } => {
            if !(p > 1.0 / n as f64 && p < 1.0) {
                return Err(Error::arg(format!("p = {p} outside (1/n, 1) for n = {n}")));
            }
            Ok(0.25)
        }
    }
}

/// `P(X >= k)` for `X ~ Bin(n, p)`, summed exactly in log space.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_c = ln_choose(n, k);
    let mut sum = 0.0;
    for i in k..=n {
        sum += (log_c + i as f64 * lp + (n - i) as f64 * lq).exp();
        log_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    sum.min(1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Exact check of `P(X >= np) > 1/4`.
pub fn quarter_holds(n: u64, p: f64) -> bool {
    // X >= np for integer X means X >= ceil(np); guard float noise at integers
    let np = n as f64 * p;
    let k = if (np - np.round()).abs() < 1e-9 { np.round() } else { np.ceil() };
    binomial_upper_tail(n, p, k as u64) > 0.25
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares with classical standard errors; needs at least
/// three points with two distinct `x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(Error::arg("ols needs at least three paired points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("ols needs two distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = sse / (nf - 2.0);
    Ok(Fit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        r2: if syy == 0.0 { 1.0 } else { 1.0 - sse / syy },
        points: n,
    })
}

// ---------------------------------------------------------------------------
// CSV rows
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Row {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub half_width: f64,
    pub budget: String,
    pub commit: String,
}

impl Row {
    pub fn new(n: usize, p: f64, seed: u64, metric: &str, value: f64, half_width: f64, budget: &str) -> Self {
        Row {
            n,
            p,
            seed,
            metric: metric.into(),
            value,
            half_width,
            budget: budget.into(),
            commit: COMMIT.into(),
        }
    }
}

/// Header plus one line per row, columns in [`CSV_HEADER`] order.
pub fn write_csv(rows: &[Row], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Plans and reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentPlan {
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `|U| = c (n^2 p)^(1/3)` for the extractor.
    pub c: f64,
    pub n_samples: usize,
    pub trials: usize,
    /// Declared before fitting.
    pub slope_window: (f64, f64),
    /// Largest `n` allowed anywhere in the grid.
    pub max_n: usize,
}

impl ExperimentPlan {
    /// `n ∈ {256, ..., 4096}` at `p = 1/2`, window `[0.5, 0.8]`.
    pub fn n_sweep(seeds: usize) -> Self {
        ExperimentPlan {
            ns: vec![256, 512, 1024, 2048, 4096],
            ps: vec![0.5],
            seeds: (0..seeds as u64).collect(),
            c: 1.0,
            n_samples: 400,
            trials: 20,
            slope_window: (0.5, 0.8),
            max_n: 8192,
        }
    }

    /// `p ∈ {1/2, ..., 1/16}` at `n = 1024`, window `[0.2, 0.47]`.
    pub fn p_sweep(seeds: usize) -> Self {
        ExperimentPlan {
            ns: vec![1024],
            ps: vec![0.5, 0.25, 0.125, 0.0625],
            slope_window: (0.2, 0.47),
            ..Self::n_sweep(seeds)
        }
    }

    pub fn budget_tag(&self) -> String {
        format!("c{}-s{}-t{}", self.c, self.n_samples, self.trials)
    }

    fn grid(&self) -> Result<Vec<(usize, f64, u64)>> {
        if self.seeds.is_empty() || self.ns.is_empty() || self.ps.is_empty() {
            return Err(Error::arg("empty experiment grid"));
        }
        let mut out = Vec::new();
        for &n in &self.ns {
            if n > self.max_n {
                return Err(Error::arg(format!("n = {n} above the cap {}", self.max_n)));
            }
            for &p in &self.ps {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidProbability(p));
                }
                for &s in &self.seeds {
                    out.push((n, p, s));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    P,
}

#[derive(Clone, Debug, Serialize)]
pub struct FPoint {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub f_hat: usize,
    pub u_size: usize,
    pub max_degree: usize,
    /// `gamma = 2p` failed and the measured pressure was used.
    pub gamma_raised: bool,
    pub pairs_ok: usize,
    pub pairs: usize,
    pub alpha: f64,
    pub alpha_half_width: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub axis: Axis,
    pub points: Vec<FPoint>,
    /// Fit of mean `ln f_hat` per grid value against `ln n` or `ln p`.
    pub fit: Fit,
    pub window: (f64, f64),
    pub pass: bool,
    /// Analytic `(n^2 p)^(1/3)` per grid value, for overlay.
    pub reference: Vec<(f64, f64)>,
    pub sanity_ok: bool,
}

impl ScalingReport {
    pub fn rows(&self, budget: &str) -> Vec<Row> {
        let mut rows = Vec::new();
        for pt in &self.points {
            rows.push(Row::new(pt.n, pt.p, pt.seed, "f_hat", pt.f_hat as f64, 0.0, budget));
            rows.push(Row::new(pt.n, pt.p, pt.seed, "u_size", pt.u_size as f64, 0.0, budget));
            rows.push(Row::new(pt.n, pt.p, pt.seed, "alpha", pt.alpha, pt.alpha_half_width, budget));
        }
        rows
    }
}

/// One grid point: the `G(n, p)` pressure instance, the pipeline, then a
/// realized witness.
pub fn f_point(n: usize, p: f64, seed: u64, plan: &ExperimentPlan) -> Result<FPoint> {
    let g = Graph::gnp(n, p, seed)?;
    let size = PressureInstance::gnp_size(n, p, plan.c);
    let (inst, raised) = PressureInstance::gnp_measured(&g, p, size, seed)?;
    let (pairs_ok, pairs, cs) = if plan.n_samples > 0 {
        let rep = pressure_pipeline(&g, &inst, plan.n_samples, seed)?;
        (rep.pairs_ok, rep.pairs, rep.controlled)
    } else {
        let spec = crate::distributions::DistributionSpec::blended(inst.u_set.to_vec(), inst.s.clone(), inst.beta)?;
        let cs = crate::extract::ControlledSet {
            u_set: inst.u_set.clone(),
            spec: spec.complete_with_trivial(),
            alpha: f64::NAN,
            alpha_half_width: f64::NAN,
            provenance: crate::extract::Provenance::Pressure,
        };
        (0, 0, cs)
    };
    let r = realize_witness(&g, &cs, plan.trials, seed);
    Ok(FPoint {
        n,
        p,
        seed,
        f_hat: r.witness.value,
        u_size: inst.u_set.len(),
        max_degree: g.max_degree(),
        gamma_raised: raised,
        pairs_ok,
        pairs,
        alpha: cs.alpha,
        alpha_half_width: cs.alpha_half_width,
    })
}

/// Runs the extractor over the grid and fits `ln f_hat` against the axis.
pub fn f_scaling(plan: &ExperimentPlan, axis: Axis) -> Result<ScalingReport> {
    let grid = plan.grid()?;
    let points: Vec<FPoint> = grid
        .par_iter()
        .map(|&(n, p, s)| f_point(n, p, s, plan))
        .collect::<Result<_>>()?;
    let key = |pt: &FPoint| match axis {
        Axis::N => pt.n as f64,
        Axis::P => pt.p,
    };
    let mut xs: Vec<f64> = points.iter().map(key).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 {
        return Err(Error::arg(format!("a fit needs at least 4 grid values, got {}", xs.len())));
    }
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let vals: Vec<f64> = points.iter().filter(|pt| key(pt) == x).map(|pt| (pt.f_hat.max(1) as f64).ln()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let fit = ols(&lx, &ys)?;
    let reference = points
        .iter()
        .map(|pt| (key(pt), (pt.n as f64 * pt.n as f64 * pt.p).cbrt()))
        .collect::<Vec<_>>();
    let mut reference = reference;
    reference.dedup_by(|a, b| a.0 == b.0);
    let sanity_ok = points.iter().all(|pt| pt.f_hat <= pt.max_degree + 1);
    Ok(ScalingReport {
        axis,
        pass: fit.slope >= plan.slope_window.0 && fit.slope <= plan.slope_window.1,
        window: plan.slope_window,
        points,
        fit,
        reference,
        sanity_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HomPoint {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub hom: usize,
    /// Exact oracle, or a one-sided clique bound above the exact limit.
    pub exact: bool,
    pub window: (f64, f64),
    pub inside: bool,
}

/// `hom(G(n, p))` per grid point against `[log2 n / 2, c ln n / min(p, 1-p)]`.
pub fn hom_scaling(plan: &ExperimentPlan, c: f64) -> Result<Vec<HomPoint>> {
    let grid = plan.grid()?;
    grid.par_iter()
        .map(|&(n, p, seed)| {
            let g = Graph::gnp(n, p, seed)?;
            let exact = n <= oracles::HOM_EXACT_LIMIT;
            let hom = if exact {
                oracles::hom_exact(&g)?.value
            } else {
                // greedy sets: a lower bound only
                let a = oracles::turan_independent_set(&g).len();
                let b = oracles::turan_independent_set(&g.complement()).len();
                a.max(b)
            };
            let q = p.min(1.0 - p);
            let lo = (n as f64).log2() / 2.0;
            let hi = if q > 0.0 { c * (n as f64).ln() / q } else { n as f64 };
            Ok(HomPoint {
                n,
                p,
                seed,
                hom,
                exact,
                window: (lo, hi),
                inside: hom as f64 >= lo && hom as f64 <= hi,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeRow {
    pub label: String,
    pub n: usize,
    pub f: usize,
    pub hom: usize,
    /// `max(f hom, sqrt(f^3 hom)) / n`.
    pub ratio: f64,
}

pub fn regime_ratio(n: usize, f: usize, hom: usize) -> f64 {
    let (f, h) = (f as f64, hom as f64);
    (f * h).max((f * f * f * h).sqrt()) / n as f64
}

/// Exact `f` and `hom` on small graphs: `G(n, p)` for every grid point plus
/// a complete and an empty row per `n`.
pub fn regime_map(plan: &ExperimentPlan) -> Result<Vec<RegimeRow>> {
    let grid = plan.grid()?;
    let mut jobs: Vec<(String, Graph)> = Vec::new();
    for &(n, p, s) in &grid {
        jobs.push((format!("gnp(p={p},seed={s})"), Graph::gnp(n, p, s)?));
    }
    let mut ns = plan.ns.clone();
    ns.dedup();
    for &n in &ns {
        jobs.push(("complete".into(), Graph::complete(n)));
        jobs.push(("empty".into(), Graph::empty(n)));
    }
    jobs.par_iter()
        .map(|(label, g)| {
            let f = oracles::f_exact(g)?.value;
            let hom = oracles::hom_exact(g)?.value;
            Ok(RegimeRow {
                label: label.clone(),
                n: g.n(),
                f,
                hom,
                ratio: regime_ratio(g.n(), f, hom),
            })
        })
        .collect()
}
