// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! `cargo test -p vexad-core --test acceptance`

// Negated comparisons keep NaN counting as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

mod common;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use vexad_core::dataset::{default_benchmark, DEFAULT_N};
use vexad_core::display::{self, ObjectiveWeights};
use vexad_core::eval::{
    auc, eer, round2, run_ablation, run_comparison, sampling_rate, truncate2, AblationCell,
    EvalRecord,
};
use vexad_core::linalg::Mat;
use vexad_core::samplers::{sample_maxmin, SamplerKind};
use vexad_core::session::{run_simulated, Corpus, SessionConfig};

use common::*;

type Outcome = Result<String, String>;

fn within(limit: Duration, started: Instant, detail: String) -> Outcome {
    let took = started.elapsed();
    if took <= limit {
        Ok(format!("{detail}; {:.2}s", took.as_secs_f64()))
    } else {
        Err(format!(
            "{detail}; took {:.2}s, limit {}s",
            took.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

fn simplex_invariant() -> Outcome {
    let started = Instant::now();
    let mut r = rng(11);
    let mut worst_sum: f64 = 0.0;
    for call in 0..1000 {
        let n = r.random_range(1..=200);
        let k = r.random_range(1..=16);
        let d = r.random_range(1..=6);
        let scale = [0.1, 1.0, 10.0, 100.0][call % 4];
        let x = random_mat(&mut r, n, d, scale);
        let v = random_mat(&mut r, k, d, scale);
        let mu = random_simplex(&mut r, n, k);
        let w = ObjectiveWeights {
            rep_on: r.random::<bool>(),
            alpha: 3.0 * r.random::<f64>(),
            beta: 3.0 * r.random::<f64>(),
            gamma: 10f64.powf(r.random_range(-2.0..2.0)),
        };
        let out = display::update_membership(&x, &v, &mu, &w).map_err(|e| e.to_string())?;
        for i in 0..n {
            let row = out.row(i);
            if let Some(bad) = row.iter().find(|v| !(**v >= 0.0)) {
                return Err(format!("call {call}: row {i} has entry {bad}"));
            }
            worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
        }
    }
    if worst_sum > 1e-9 {
        return Err(format!("row sum off by {worst_sum:.3e}"));
    }
    within(
        Duration::from_secs(10),
        started,
        format!("1000 calls, worst |sum-1| = {worst_sum:.1e}"),
    )
}

fn soft_kmeans_oracle() -> Outcome {
    let started = Instant::now();
    let mut r = rng(12);
    let gammas = [0.1, 1.0, 10.0];
    let mut worst: f64 = 0.0;
    let mut sweeps = 0;
    for inst in 0..30 {
        let k = r.random_range(1..=5);
        let n = r.random_range(k.max(2)..=100);
        let d = r.random_range(1..=4);
        let gamma = gammas[inst % 3];
        let x = random_mat(&mut r, n, d, 3.0);
        let w = ObjectiveWeights {
            rep_on: true,
            alpha: 0.0,
            beta: 0.0,
            gamma,
        };
        let (mu0, v0) = display::initialize(&x, k, inst as u64).map_err(|e| e.to_string())?;
        let scorer = random_scorer(&mut r, d);
        let mut centers = v0.clone();
        let mut err: Option<String> = None;
        let sol = display::solve_from(&x, &scorer, &w, mu0, v0, 1e-3, 100, |it, mu, v| {
            let (resp, next) = soft_kmeans_step(&x, &centers, gamma);
            let diff = mu.max_abs_diff(&resp).max(v.max_abs_diff(&next));
            worst = worst.max(diff);
            if diff > 1e-10 && err.is_none() {
                err = Some(format!(
                    "instance {inst} (n={n}, K={k}, gamma={gamma}) iteration {it}: diff {diff:.3e}"
                ));
            }
            centers = next;
            sweeps += 1;
        })
        .map_err(|e| e.to_string())?;
        if let Some(e) = err {
            return Err(e);
        }
        if sol.report.iterations == 0 {
            return Err(format!("instance {inst}: no iterations"));
        }
    }
    within(
        Duration::from_secs(30),
        started,
        format!("30 instances, {sweeps} iterations, worst diff {worst:.1e}"),
    )
}

fn gradient_check() -> Outcome {
    let started = Instant::now();
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = r.random_range(1..=16);
        let k = r.random_range(1..=4);
        let scorer = random_scorer(&mut r, d);
        let v = random_mat(&mut r, k, d, 1.0);
        worst = worst.max(gradient_error(&scorer, &v, 1e-5));
    }
    if worst >= 1e-4 {
        return Err(format!("max relative error {worst:.3e}"));
    }
    within(
        Duration::from_secs(5),
        started,
        format!("100 probes, max relative error {worst:.1e}"),
    )
}

fn eer_oracle() -> Outcome {
    let started = Instant::now();
    let mut r = rng(14);
    for set in 0..200 {
        let n = r.random_range(2..=300);
        let mut bits: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
        bits[0] = true;
        bits[1] = false;
        // Coarse grids give many ties, fine ones almost none.
        let levels = [4.0, 20.0, 1e6][set % 3];
        let scores: Vec<f64> = (0..n)
            .map(|_| (r.random::<f64>() * levels).floor() / levels)
            .collect();
        let labels = labels_from(&bits);
        let got = eer(&scores, &labels).map_err(|e| e.to_string())?;
        let want = eer_bruteforce(&scores, &labels);
        if got.to_bits() != want.to_bits() {
            return Err(format!("set {set}: eer {got} vs oracle {want}"));
        }
    }
    within(
        Duration::from_secs(10),
        started,
        "200 sets, bit-equal".into(),
    )
}

fn table_arithmetic() -> Outcome {
    let s1 = truncate2(sampling_rate(1, 16, DEFAULT_N));
    let s10 = truncate2(sampling_rate(10, 16, DEFAULT_N));
    let row = [
        47.81, 27.61, 11.76, 5.74, 2.95, 2.39, 1.89, 1.61, 1.55, 1.34,
    ];
    let records: Vec<EvalRecord> = row
        .iter()
        .enumerate()
        .map(|(i, &e)| EvalRecord {
            iter: i + 1,
            eer: e,
            samp_pct: sampling_rate(i + 1, 16, DEFAULT_N),
        })
        .collect();
    let a = round2(auc(&records).map_err(|e| e.to_string())?);
    let detail = format!("Samp% t=1 {s1:.2}, t=10 {s10:.2}, AUC {a:.2}");
    if s1 == 1.45 && s10 == 14.54 && a == 10.47 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn maxmin_oracle() -> Outcome {
    let mut r = rng(15);
    for inst in 0..100 {
        // Small integer coordinates so ties actually occur.
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..2).map(|_| r.random_range(0..5) as f64).collect())
            .collect();
        let points = Mat::from_rows(&pts).unwrap();
        let n_labeled = r.random_range(1..=3);
        let labeled: Vec<usize> = rand::seq::index::sample(&mut r, 8, n_labeled).into_vec();
        let k = r.random_range(1..=8 - n_labeled);
        let pool: Vec<usize> = (0..8).collect();
        let set: BTreeSet<usize> = labeled.iter().copied().collect();
        let got = sample_maxmin(&points, &pool, &set, k).map_err(|e| e.to_string())?;
        let want = maxmin_bruteforce(&points, &labeled, k);
        if got != want {
            return Err(format!("instance {inst}: {got:?} vs oracle {want:?}"));
        }
    }
    Ok("100 instances, identical picks".into())
}

fn replay_csv(corpus: &Corpus, cfg: &SessionConfig) -> Result<String, String> {
    let s = run_simulated(cfg.clone(), corpus).map_err(|e| e.to_string())?;
    let mut out = String::from("iter,display,eer,samp_pct\n");
    for (rec, disp) in s.metrics().iter().zip(s.displays()) {
        let ids: Vec<String> = disp.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            rec.iter,
            ids.join(" "),
            rec.eer,
            rec.samp_pct
        );
    }
    Ok(out)
}

fn replay_determinism(corpus: &Corpus) -> Outcome {
    for strategy in SamplerKind::ALL {
        let cfg = SessionConfig {
            strategy,
            seed: 42,
            ..SessionConfig::default()
        };
        let a = replay_csv(corpus, &cfg)?;
        let b = replay_csv(corpus, &cfg)?;
        if a != b {
            return Err(format!("{strategy}: replay CSVs differ"));
        }
    }
    Ok("4 strategies, byte-equal CSV".into())
}

fn trend(corpus: &Corpus) -> Outcome {
    let started = Instant::now();
    let seeds: Vec<u64> = (1..=10).collect();
    let exp = run_comparison(corpus, &SessionConfig::default(), &SamplerKind::ALL, &seeds)
        .map_err(|e| e.to_string())?;
    let rows = exp.summary().map_err(|e| e.to_string())?;
    let get = |name: &str| rows.iter().find(|r| r.label == name).unwrap();
    let vexad = get("vexad");
    let supervised = exp.supervised_eer.unwrap();
    let mut detail = String::new();
    for row in rows.iter().filter(|r| r.label != "supervised_eer") {
        let _ = write!(
            detail,
            "{} auc {:.2} final {:.2}; ",
            row.label, row.auc_mean, row.final_eer_mean
        );
    }
    let _ = write!(detail, "supervised {supervised:.2}");

    let mut failed = Vec::new();
    for base in ["random", "uncertainty"] {
        if !(vexad.auc_mean < get(base).auc_mean) {
            failed.push(format!("(a) vexad AUC not below {base}"));
        }
    }
    for base in ["random", "maxmin", "uncertainty"] {
        if !(vexad.final_eer_mean <= get(base).final_eer_mean) {
            failed.push(format!("(b) vexad final EER above {base}"));
        }
    }
    for s in SamplerKind::ALL {
        if !(supervised <= get(s.name()).final_eer_mean) {
            failed.push(format!("(c) supervised above {s}"));
        }
    }
    if !failed.is_empty() {
        return Err(format!("{}: {detail}", failed.join(", ")));
    }
    within(Duration::from_secs(600), started, detail)
}

fn ablation_structure(corpus: &Corpus) -> Outcome {
    let seeds: Vec<u64> = (1..=3).collect();
    let exp = run_ablation(corpus, &SessionConfig::default(), &seeds).map_err(|e| e.to_string())?;
    let labels: Vec<String> = exp.tables.iter().map(|t| t.label.clone()).collect();
    let expected: Vec<String> = AblationCell::GRID.iter().map(|c| c.label()).collect();
    if labels != expected {
        return Err(format!("cells {labels:?}"));
    }
    for &seed in &seeds {
        let firsts: BTreeSet<u64> = exp
            .runs
            .iter()
            .filter(|r| r.seed == seed)
            .map(|r| r.records[0].eer.to_bits())
            .collect();
        if firsts.len() != 1 {
            return Err(format!("seed {seed}: iteration-1 EER differs across cells"));
        }
    }
    let first = exp.tables[0].records[0].eer;
    Ok(format!(
        "7 cells {}, shared iteration-1 EER {first:.2}",
        expected.join(" ")
    ))
}

fn main() {
    let corpus = default_benchmark()
        .and_then(|ds| Corpus::new(ds, 0))
        .expect("default benchmark");

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("simplex invariant", Box::new(simplex_invariant)),
        ("soft k-means oracle", Box::new(soft_kmeans_oracle)),
        ("gradient check", Box::new(gradient_check)),
        ("eer oracle", Box::new(eer_oracle)),
        ("table arithmetic", Box::new(table_arithmetic)),
        ("maxmin oracle", Box::new(maxmin_oracle)),
        (
            "replay determinism",
            Box::new(|| replay_determinism(&corpus)),
        ),
        ("trend reproduction", Box::new(|| trend(&corpus))),
        (
            "ablation structure",
            Box::new(|| ablation_structure(&corpus)),
        ),
    ];

    let mut failures = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
