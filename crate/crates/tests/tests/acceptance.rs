//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any hard criterion fails. Soft criteria are reported but do
//! not affect the exit status.

use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use msc_cli::args::Cli;
use msc_core::linalg::symmetric_eigen;
use msc_core::{
    brute_force_affinity, closed_form_affinity, dispatch_affinity, gen_arcs, kernel_matrix,
    merge_segments_traced, msc, msc_from_affinity, purity, sampled_affinity, segment,
    AffinityMode, AffinityOptions, ArcSpec, DataMatrix, KernelSpec, SamplingPlan,
    SegmentationConfig, SpectralConfig,
};
use msc_tests::{blobs, data_dir, iris, rel_fro, two_tone, uniform_points};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hard,
    Soft,
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Labels equal up to renaming.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    purity(a, b).unwrap() == 1.0 && purity(b, a).unwrap() == 1.0
}

fn within(elapsed: Duration, budget_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s <= budget_s, format!("{s:.2} s of {budget_s} s"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n_points = rng.random_range(3..=8);
        let d = rng.random_range(1..=3);
        let order = rng.random_range(2..=5);
        let x = uniform_points(&mut rng, n_points, d);
        let cf = closed_form_affinity(&x, order).unwrap();
        let bf = brute_force_affinity(&x, &KernelSpec::linear(order).unwrap()).unwrap();
        worst = worst.max(rel_fro(cf.entries(), bf.entries()));
    }
    let (fast, time) = within(start.elapsed(), 10.0);
    outcome(worst <= 1e-10 && fast, format!("max relative Frobenius error {worst:.2e} over 100 cases, {time}"))
}

fn criterion_2() -> Outcome {
    let x = DataMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
    let expected = ndarray::array![[44.0, 12.0], [12.0, 4.0]];
    let cf = closed_form_affinity(&x, 3).unwrap();
    let bf = brute_force_affinity(&x, &KernelSpec::linear(3).unwrap()).unwrap();
    let err = |m: &Array2<f64>| (m - &expected).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (e1, e2) = (err(cf.entries()), err(bf.entries()));
    outcome(e1 <= 1e-12 && e2 <= 1e-12, format!("closed form error {e1:.1e}, brute force error {e2:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut matches = 0;
    for k in 0..20 {
        let x = blobs(&mut rng, 3, 20, 5, 0.03);
        let y = x.as_array();
        let g = y.dot(&y.t());
        let four_g2 = g.dot(&g) * 4.0;
        let cf = closed_form_affinity(&x, 2).unwrap();
        worst = worst.max(rel_fro(cf.entries(), &four_g2));
        let config = SpectralConfig::new(3).with_seed(k);
        let spec = KernelSpec::linear(2).unwrap();
        let gram = dispatch_affinity(&x, &spec, &AffinityOptions::with_mode(AffinityMode::KernelMatrix)).unwrap();
        let a = msc_from_affinity(&cf, &config).unwrap();
        let b = msc_from_affinity(&gram, &config).unwrap();
        if same_partition(&a.labels, &b.labels) {
            matches += 1;
        }
    }
    outcome(
        worst <= 1e-12 && matches == 20,
        format!("V vs 4(XᵀX)² relative error {worst:.1e}; labels match on {matches}/20 datasets"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for q in [0.0, 0.5, 1.0, 1.5, 2.0] {
        for d in [1, 2, 5, 20] {
            let x = uniform_points(&mut rng, 50, d);
            let k = kernel_matrix(&x, &KernelSpec::jensen_tsallis(q, 2).unwrap()).unwrap();
            let (vals, _) = symmetric_eigen(k.entries()).unwrap();
            worst = worst.min(vals[0] / vals[vals.len() - 1]);
        }
    }
    let (fast, time) = within(start.elapsed(), 5.0);
    outcome(worst >= -1e-8 && fast, format!("min λ_min/λ_max {worst:.2e} over 20 Gram matrices, {time}"))
}

fn arcs_purity(order: usize, seed: u64) -> f64 {
    let ds = gen_arcs(&ArcSpec::default().with_seed(seed)).unwrap();
    let spec = KernelSpec::linear(order).unwrap();
    let out = msc(&ds.data, &spec, &AffinityOptions::default(), &SpectralConfig::new(2).with_seed(seed)).unwrap();
    purity(&out.labels, &ds.truth).unwrap()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for order in 7..=12 {
        let perfect = (0..10).filter(|&s| arcs_purity(order, s) == 1.0).count();
        ok &= perfect >= 9;
        parts.push(format!("n={order}: {perfect}/10"));
    }
    let imperfect = (0..10).filter(|&s| arcs_purity(2, s) < 1.0).count();
    ok &= imperfect >= 9;
    let (fast, time) = within(start.elapsed(), 30.0);
    outcome(
        ok && fast,
        format!("purity 1.0 runs {}; n=2 imperfect {imperfect}/10; {time}", parts.join(", ")),
    )
}

fn best_purity(x: &DataMatrix<f64>, truth: &[usize], spec: &KernelSpec<f64>, mode: AffinityMode) -> f64 {
    let v = dispatch_affinity(x, spec, &AffinityOptions::with_mode(mode)).unwrap();
    (0..10)
        .map(|r| {
            let out = msc_from_affinity(&v, &SpectralConfig::new(3).with_seed(r)).unwrap();
            purity(&out.labels, truth).unwrap()
        })
        .fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let (x, truth) = iris();
    let start = Instant::now();
    let three = best_purity(&x, &truth, &KernelSpec::jensen_tsallis(0.5, 3).unwrap(), AffinityMode::BruteForce);
    let (fast, time) = within(start.elapsed(), 900.0);
    let two = (0..=8)
        .map(|k| {
            let spec = KernelSpec::jensen_tsallis(k as f64 * 0.25, 2).unwrap();
            best_purity(&x, &truth, &spec, AffinityMode::BruteForce)
        })
        .fold(0.0, f64::max);
    outcome(
        three >= 0.90 && (two - 0.860).abs() <= 0.05 && fast,
        format!("3-point q=0.5 best purity {three:.4} (target ≥ 0.90, {time}); 2-point best over q {two:.4} (target 0.860 ± 0.05)"),
    )
}

/// Σ_g cut(g, rest) / assoc(g, all); a group with no association counts as +∞.
fn ncut_oracle(entries: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
    let groups = labels.iter().max().unwrap() + 1;
    let mut assoc = vec![0.0; groups];
    let mut within = vec![0.0; groups];
    for &(i, j, w) in entries {
        assoc[labels[i]] += w;
        if labels[i] == labels[j] {
            within[labels[i]] += w;
        }
    }
    let mut present = vec![false; groups];
    labels.iter().for_each(|&l| present[l] = true);
    (0..groups)
        .filter(|&g| present[g])
        .map(|g| if assoc[g] > 0.0 { (assoc[g] - within[g]) / assoc[g] } else { f64::INFINITY })
        .sum()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (image, truth) = two_tone();
    let config = SegmentationConfig::new(KernelSpec::linear(6).unwrap(), 2);
    let seg = segment(&image, &config).unwrap();
    let p = purity(&seg.labels, &truth).unwrap();
    let distinct = {
        let mut l = seg.labels.clone();
        l.sort();
        l.dedup();
        l.len()
    };
    // Replay the merges against an Ncut computed here from the raw M entries.
    let data = msc_core::pixel_features(&image, config.feature_mode).unwrap();
    let v = dispatch_affinity(&data, &config.kernel, &config.affinity).unwrap();
    let r = msc_core::location_similarity(&image, config.radius).unwrap();
    let m = msc_core::combined_affinity(&v, &r, config.lambda).unwrap();
    let entries: Vec<(usize, usize, f64)> = m.iter().collect();
    let (_, steps) = merge_segments_traced(&m, &seg.initial_labels, &image, 2).unwrap();
    let mut labels = seg.initial_labels.clone();
    let mut optimal = steps == seg.merges;
    for step in &steps {
        for &((a, b), reported) in &step.candidates {
            let trial: Vec<usize> = labels.iter().map(|&l| if l == b { a } else { l }).collect();
            let value = ncut_oracle(&entries, &trial);
            if (value - reported).abs() > 1e-9 * value.abs().max(1.0) {
                optimal = false;
            }
        }
        let best = step.candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        optimal &= step.ncut <= best;
        labels.iter_mut().for_each(|l| {
            if *l == step.pair.1 {
                *l = step.pair.0;
            }
        });
    }
    let (fast, time) = within(start.elapsed(), 60.0);
    outcome(
        p == 1.0 && distinct == 2 && optimal && fast,
        format!(
            "mask purity {p:.4} with {distinct} segments; {} merges each optimal among adjacent pairs: {optimal}; {time}",
            steps.len()
        ),
    )
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn sha(path: &Path) -> String {
    hex(&std::fs::read(path).unwrap())
}

/// Sweep output without its wall-time column.
fn sha_without_timing(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| format!("{}\n", l.rsplit_once(',').map_or(l, |(head, _)| head)))
        .collect();
    hex(stripped.as_bytes())
}

/// Parses and runs one `msc` invocation in-process.
fn msc_run(args: &[String]) -> bool {
    let argv = std::iter::once("msc".to_string()).chain(args.iter().cloned());
    Cli::try_parse_from(argv).is_ok_and(|cli| msc_cli::run(&cli).is_ok())
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (image, _) = two_tone();
    std::fs::write(p("two_tone.pgm"), msc_cli::pnm::write_pgm(60, 60, image.intensities())).unwrap();
    let iris_csv = data_dir().join("iris.csv").to_str().unwrap().to_string();
    let outputs = ["arcs.csv", "arcs_labels.txt", "sampled_labels.txt", "seg.csv", "seg.ppm", "sweep.csv"];
    let runs: Vec<Vec<String>> = [
        "gen-arcs -o {arcs.csv} --seed 7",
        "cluster -i {arcs.csv} --label-column last --kernel jt --q 0.5 --n 3 -m 2 --seed 42 -o {arcs_labels.txt}",
        "cluster -i {arcs.csv} --label-column last --n 3 --mode sampled --columns 50 -m 2 --seed 3 -o {sampled_labels.txt}",
        "segment -i {two_tone.pgm} --kernel linear --n 6 --segments 2 -o {seg.csv}",
        "sweep -i {iris} --label-column last --normalize --repeats 3 -o {sweep.csv}",
    ]
    .iter()
    .map(|line| {
        line.split_whitespace()
            .map(|w| match w.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
                Some("iris") => iris_csv.clone(),
                Some(name) => p(name),
                None => w.to_string(),
            })
            .collect()
    })
    .collect();
    let mut digests: Vec<Vec<String>> = Vec::new();
    let mut all_ran = true;
    for _ in 0..3 {
        for args in &runs {
            all_ran &= msc_run(args);
        }
        digests.push(
            outputs
                .iter()
                .map(|f| if *f == "sweep.csv" { sha_without_timing(Path::new(&p(f))) } else { sha(Path::new(&p(f))) })
                .collect(),
        );
        for f in outputs {
            std::fs::remove_file(p(f)).unwrap();
        }
    }
    let identical = digests.windows(2).all(|w| w[0] == w[1]);
    outcome(
        all_ran && identical,
        format!(
            "{} output files identical across 3 runs: {identical} (sweep compared without wall_time)",
            outputs.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let small = uniform_points(&mut rng, 5, 2);
    let spec = KernelSpec::jensen_tsallis(0.5, 3).unwrap();
    let exhaustive = sampled_affinity(&small, &spec, &SamplingPlan::exhaustive(5, 3).unwrap()).unwrap();
    let brute = brute_force_affinity(&small, &spec).unwrap();
    let exact = exhaustive.entries() == brute.entries();

    let big = uniform_points(&mut rng, 200, 2);
    let time = |f: &dyn Fn()| {
        (0..3)
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let t_sampled = time(&|| {
        sampled_affinity(&big, &spec, &SamplingPlan::uniform(100, 1)).unwrap();
    });
    let t_brute = time(&|| {
        brute_force_affinity(&big, &spec).unwrap();
    });
    let ratio = t_brute / t_sampled;
    outcome(
        exact && ratio >= 10.0,
        format!("exhaustive equals brute force exactly: {exact}; brute/sampled time {t_brute:.3} s / {t_sampled:.4} s = {ratio:.0}x"),
    )
}

type Criterion = (u32, Kind, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, Kind::Hard, "closed-form affinity equals brute force", criterion_1),
        (2, Kind::Hard, "N=2, n=3 fixture from both paths", criterion_2),
        (3, Kind::Hard, "n=2 degeneracy and Gram-affinity labels", criterion_3),
        (4, Kind::Hard, "JT Gram matrices are PSD", criterion_4),
        (5, Kind::Hard, "arcs: linear n>=7 perfect, n=2 imperfect", criterion_5),
        (6, Kind::Soft, "Iris purity targets", criterion_6),
        (7, Kind::Hard, "two-tone segmentation and merge optimality", criterion_7),
        (8, Kind::Hard, "bit-identical re-runs", criterion_8),
        (9, Kind::Hard, "exhaustive sampling exact, sampled path faster", criterion_9),
    ];
    let mut hard_failures = 0;
    for (id, kind, title, run) in criteria {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = match (result.passed, kind) {
            (true, _) => "PASS",
            (false, Kind::Hard) => {
                hard_failures += 1;
                "FAIL"
            }
            (false, Kind::Soft) => "SOFT-FAIL",
        };
        println!("{status:<9} criterion {id} ({title}): {}", result.detail);
    }
    if hard_failures > 0 {
        println!("{hard_failures} hard criterion/criteria failed");
        std::process::exit(1);
    }
}
