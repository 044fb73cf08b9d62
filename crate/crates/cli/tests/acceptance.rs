//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use taxonet::bootstrap::link_reliability_with_threads;
use taxonet::export;
use taxonet::synthetic::{brute_force_mst, brute_force_subdominant, generate_block_model, prices_from_returns, BlockSpec};
use taxonet::{
    average_linkage, cophenetic_matrix, correlation_to_distance, cut_clusters, kruskal_mst, parse_newick,
    pearson_matrix, single_linkage, Dendrogram, Linkage, ReturnsMatrix,
};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn sorted_weights(t: &taxonet::SpanningTree) -> Vec<f64> {
    let mut w: Vec<f64> = t.edges().iter().map(|e| e.distance).collect();
    w.sort_by(f64::total_cmp);
    w
}

fn mst_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    for trial in 0..200 {
        let n = r.random_range(4..=7);
        let d = random_metric(n, &mut r);
        let k = kruskal_mst(&d).map_err(|e| e.to_string())?;
        let b = brute_force_mst(&d).map_err(|e| e.to_string())?;
        let total = |t| sorted_weights(t).iter().sum::<f64>();
        check(total(&k) == total(&b), || {
            format!("trial {trial} n={n}: kruskal {} vs brute force {}", total(&k), total(&b))
        })?;
        check(k.edge_pairs() == b.edge_pairs(), || format!("trial {trial}: edge sets differ"))?;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("200 matrices, exact totals, {:.2}s", start.elapsed().as_secs_f64()))
}

fn slca_mst_duality() -> Outcome {
    let mut r = rng(1002);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = r.random_range(5..=20);
        let d = random_metric(n, &mut r);
        let t = kruskal_mst(&d).map_err(|e| e.to_string())?;
        let s = single_linkage(&d).map_err(|e| e.to_string())?;
        let mut h = s.heights();
        h.sort_by(f64::total_cmp);
        for (a, b) in h.iter().zip(sorted_weights(&t)) {
            worst = worst.max((a - b).abs());
        }
        let u = cophenetic_matrix(&s);
        for i in 0..n {
            for j in 0..n {
                let pm = taxonet::tree_path_max(&t, i, j).map_err(|e| e.to_string())?;
                worst = worst.max((u.get(i, j) - pm).abs());
            }
        }
        check(worst <= 1e-12, || format!("trial {trial}: deviation {worst:e}"))?;
    }
    Ok(format!("100 matrices, max deviation {worst:e}"))
}

fn subdominant_ultrametric() -> Outcome {
    let mut r = rng(1003);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=7 {
        for _ in 0..25 {
            let d = random_metric(n, &mut r);
            let u = cophenetic_matrix(&single_linkage(&d).map_err(|e| e.to_string())?);
            let oracle = brute_force_subdominant(&d).map_err(|e| e.to_string())?;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((u.get(i, j) - oracle.get(i, j)).abs());
                    check(u.get(i, j) <= d.get(i, j), || format!("n={n}: u({i},{j}) > d"))?;
                    for k in 0..n {
                        check(u.get(i, j) <= u.get(i, k).max(u.get(k, j)), || {
                            format!("n={n}: strong triangle fails at ({i},{j},{k})")
                        })?;
                    }
                }
            }
            cases += 1;
        }
    }
    check(worst <= 1e-12, || format!("deviation {worst:e}"))?;
    Ok(format!("{cases} matrices n<=7, max deviation {worst:e}"))
}

fn correlation_and_distance() -> Outcome {
    let mut r = rng(1004);
    let ret = random_returns(50, 8, &mut r);
    let c = pearson_matrix(&ret).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let x: Vec<f64> = ret.column(i).collect();
            let y: Vec<f64> = ret.column(j).collect();
            let direct = if i == j { 1.0 } else { direct_pearson(&x, &y) };
            worst = worst.max((c.get(i, j) - direct).abs());
            check(c.get(i, j) == c.get(j, i), || format!("asymmetric at ({i},{j})"))?;
        }
        check(c.get(i, i) == 1.0, || format!("diagonal {i} is {}", c.get(i, i)))?;
    }
    check(worst <= 1e-12, || format!("pearson deviation {worst:e}"))?;
    let min_eig = DMatrix::from_row_slice(8, 8, c.values()).symmetric_eigenvalues().min();
    check(min_eig >= -1e-8, || format!("min eigenvalue {min_eig:e}"))?;

    // Columns with correlation exactly 1, 0 and -1 against the first.
    let x = [1.0, -1.0, 1.0, -1.0];
    let y = [1.0, 1.0, -1.0, -1.0];
    let rows = (0..4).map(|t| vec![x[t], x[t], y[t], -x[t]]).collect();
    let ret = ReturnsMatrix::new(labels(4), rows, 1).map_err(|e| e.to_string())?;
    let d = correlation_to_distance(&pearson_matrix(&ret).map_err(|e| e.to_string())?);
    for (j, want) in [(1, 0.0), (2, 2f64.sqrt()), (3, 2.0)] {
        check((d.get(0, j) - want).abs() <= 1e-15, || format!("endpoint d(0,{j}) = {} want {want}", d.get(0, j)))?;
    }
    Ok(format!("max deviation {worst:e}, min eigenvalue {min_eig:e}, endpoints exact"))
}

fn average_linkage_oracle() -> Outcome {
    let mut r = rng(1005);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = r.random_range(2..=7);
        let d = random_metric(n, &mut r);
        let dendro = average_linkage(&d).map_err(|e| e.to_string())?;
        let got = merge_leaves(&dendro);
        let want = naive_upgma(&d);
        check(got.len() == want.len(), || format!("trial {trial}: merge count"))?;
        for (step, (g, w)) in got.iter().zip(&want).enumerate() {
            check((&g.0, &g.1) == (&w.0, &w.1), || {
                format!("trial {trial} step {step}: merged {:?}+{:?}, oracle {:?}+{:?}", g.0, g.1, w.0, w.1)
            })?;
            worst = worst.max((g.2 - w.2).abs());
        }
        for dendro in [dendro, single_linkage(&d).map_err(|e| e.to_string())?] {
            let h = dendro.heights();
            check(h.windows(2).all(|p| p[0] <= p[1]), || {
                format!("trial {trial}: {:?} heights not monotone", dendro.linkage())
            })?;
        }
    }
    check(worst <= 1e-12, || format!("height deviation {worst:e}"))?;
    Ok(format!("100 matrices, max height deviation {worst:e}"))
}

fn render_report(tree: &taxonet::SpanningTree, report: &taxonet::BootstrapReport) -> String {
    format!("{report:?}\n{}", export::mst_json(tree, Some(report)))
}

fn bootstrap_contract() -> Outcome {
    let spec = three_blocks(0.7, 6);
    let ret = generate_block_model(&spec).map_err(|e| e.to_string())?;
    let runs: Vec<String> = [1, 4, 8]
        .iter()
        .map(|&t| {
            link_reliability_with_threads(&ret, 100, 17, t)
                .map(|(tree, rep)| render_report(&tree, &rep))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    check(runs.iter().all(|r| r == &runs[0]), || "reports differ across thread counts".into())?;
    let (_, report) = link_reliability_with_threads(&ret, 100, 17, 4).map_err(|e| e.to_string())?;
    for l in &report.links {
        check((0.0..=1.0).contains(&l.fraction), || format!("fraction {} out of range", l.fraction))?;
    }

    // Column 5 duplicates column 2, so their distance is zero.
    let mut r = rng(1006);
    let base = random_returns(60, 5, &mut r);
    let rows = base
        .rows()
        .map(|row| {
            let mut row = row.to_vec();
            row.push(row[2]);
            row
        })
        .collect();
    let dup = ReturnsMatrix::new(labels(6), rows, 1).map_err(|e| e.to_string())?;
    let (_, rep) = link_reliability_with_threads(&dup, 100, 3, 4).map_err(|e| e.to_string())?;
    check(rep.fraction(2, 5) == Some(1.0), || format!("c=1 link fraction {:?}", rep.fraction(2, 5)))?;
    Ok("fractions in [0,1], identical at 1/4/8 threads, c=1 link 1.0".into())
}

fn three_blocks(intra: f64, seed: u64) -> BlockSpec {
    BlockSpec {
        blocks: vec![("A".into(), 5), ("B".into(), 5), ("C".into(), 5)],
        intra_rho: intra,
        inter_rho: 0.0,
        rows: 500,
        seed,
    }
}

fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let (mut split_ok, mut alca_ok, mut boot_ok, mut all_ok) = (0, 0, 0, 0);
    let mut min_fraction = 1.0f64;
    for seed in 0..20 {
        let spec = three_blocks(0.9, seed);
        let truth = spec.partition();
        let ret = generate_block_model(&spec).map_err(|e| e.to_string())?;
        let d = correlation_to_distance(&pearson_matrix(&ret).map_err(|e| e.to_string())?);
        let split = kruskal_mst(&d).and_then(|t| t.split_longest(2)).map_err(|e| e.to_string())? == truth;
        let alca = cut_clusters(&average_linkage(&d).map_err(|e| e.to_string())?, 3).map_err(|e| e.to_string())?
            == truth;
        let (tree, _) = link_reliability_with_threads(&ret, 100, seed, 4).map_err(|e| e.to_string())?;
        let m = spec.membership();
        let seed_min = tree
            .edges()
            .iter()
            .filter(|e| m[e.u] == m[e.v])
            .map(|e| e.reliability.unwrap_or(0.0))
            .fold(1.0, f64::min);
        min_fraction = min_fraction.min(seed_min);
        let boot = seed_min >= 0.95;
        split_ok += split as usize;
        alca_ok += alca as usize;
        boot_ok += boot as usize;
        all_ok += (split && alca && boot) as usize;
    }
    let detail = format!(
        "{all_ok}/20 seeds pass all; MST split {split_ok}/20, ALCA k=3 {alca_ok}/20, \
         intra fractions >= 0.95 {boot_ok}/20 (lowest {min_fraction:.2}), {:.1}s",
        start.elapsed().as_secs_f64()
    );
    within(start.elapsed(), Duration::from_secs(300))?;
    check(all_ok >= 19, || detail.clone())?;
    Ok(detail)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().into_string().unwrap();
            let mut bytes = fs::read(e.path()).unwrap();
            if name == "manifest.json" {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text
                    .lines()
                    .filter(|l| !l.trim_start().starts_with("\"wall_time_seconds\""))
                    .collect::<Vec<_>>()
                    .join("\n")
                    .into_bytes();
            }
            (name, bytes)
        })
        .collect()
}

fn newick_round_trip(dir: &Path, file: &str, dendro: &Dendrogram) -> Result<f64, String> {
    let text = fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
    let tree = parse_newick(text.trim_end()).map_err(|e| e.to_string())?;
    let parsed = tree.cophenetic(dendro.symbols()).map_err(|e| e.to_string())?;
    let direct = cophenetic_matrix(dendro);
    Ok(parsed
        .values()
        .iter()
        .zip(direct.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let spec = three_blocks(0.9, 7);
    let ret = generate_block_model(&spec).map_err(|e| e.to_string())?;
    let prices = prices_from_returns(&ret, "1990-01").map_err(|e| e.to_string())?;
    fs::write(tmp.path().join("prices.csv"), export::prices_csv(&prices)).map_err(|e| e.to_string())?;

    let run = || {
        Command::new(env!("CARGO_BIN_EXE_taxonet"))
            .args(["run", "--input", "prices.csv", "--out", "out", "--replicas", "200", "--seed", "4"])
            .current_dir(tmp.path())
            .status()
            .map_err(|e| e.to_string())
            .and_then(|s| check(s.success(), || format!("run exited with {s}")))
    };
    let out = tmp.path().join("out");
    run()?;
    let first = snapshot(&out);
    run()?;
    let second = snapshot(&out);
    check(first.len() == 10, || format!("expected 10 files, found {}", first.len()))?;
    for (name, bytes) in &first {
        check(second.get(name) == Some(bytes), || format!("{name} differs between runs"))?;
    }

    let d = correlation_to_distance(&pearson_matrix(&ret).map_err(|e| e.to_string())?);
    let mut worst = 0.0f64;
    for (file, l) in [("slca.nwk", Linkage::Single), ("alca.nwk", Linkage::Average)] {
        let dendro = taxonet::hierarchy::linkage(&d, l).map_err(|e| e.to_string())?;
        worst = worst.max(newick_round_trip(&out, file, &dendro)?);
    }
    check(worst <= 1e-9, || format!("newick cophenetic deviation {worst:e}"))?;
    Ok(format!("{} artifacts byte-identical, newick deviation {worst:e}", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("MST matches brute-force enumeration", mst_oracle),
        ("single linkage and MST are dual", slca_mst_duality),
        ("single linkage gives the subdominant ultrametric", subdominant_ultrametric),
        ("correlation and distance are exact", correlation_and_distance),
        ("average linkage matches naive oracle", average_linkage_oracle),
        ("bootstrap contract", bootstrap_contract),
        ("planted clusters are recovered", planted_recovery),
        ("end-to-end runs are reproducible", end_to_end),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
