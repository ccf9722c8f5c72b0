//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dialect_id::classical::{knn_fit, mnb_fit, rf_fit, svm_fit, Classifier, LabeledSet, RfParams, SvmParams};
use dialect_id::cnn::{smooth_gradient_checks, CnnConfig, Mode};
use dialect_id::corpus::{load_manifest, SEG_SAMPLES};
use dialect_id::dataset::{load_cached, Portion};
use dialect_id::eval::{f1_consistent_with_rounding, f1_score, ClassReport};
use dialect_id::features::{build_mel_filterbank, dct_matrix, mfcc, stft_power, FrameParams, N_MELS};
use dialect_id::Dialect;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_dialect-id");

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dialect_id(args: &[&str], cwd: &Path) -> Result<String, String> {
    let o = Command::new(BIN).args(args).current_dir(cwd).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("`dialect-id {}` exited with {}: {}", args.join(" "), o.status, String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

// 1 ---------------------------------------------------------------------

fn paramcheck() -> Outcome {
    let dir = std::env::temp_dir();
    let text = dialect_id(&["paramcheck"], &dir)?;
    let params: BTreeMap<&str, u64> = text
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            Some((*f.first()?, f.get(2)?.parse().ok()?))
        })
        .collect();
    for (layer, want) in [("conv2d_1", 320), ("conv2d_2", 18_496), ("dense_1", 1_007_744), ("dense_2", 1_806)] {
        ensure(params.get(layer) == Some(&want), || format!("{layer}: {:?}, want {want}", params.get(layer)))?;
    }
    let chain = "(10,498,32) -> (5,249,32) -> (3,247,64) -> (1,123,64) -> 7872";
    ensure(text.contains(chain), || format!("shape chain missing from:\n{text}"))?;
    ensure(text.lines().last() == Some("TOTAL=1028366"), || format!("last line {:?}", text.lines().last()))?;
    Ok("320 / 18496 / 1007744 / 1806, TOTAL=1028366".into())
}

// 2 ---------------------------------------------------------------------

type Row = (&'static str, f64, f64, f64, u64);

const SPEAKERS: [&str; 13] = [
    "Masroor Barzani",
    "Nechirvan Barzani",
    "Kamal Gwlpi",
    "Abduladim Hawrami",
    "Gulstan MohammedAmin",
    "Dnya Majid",
    "Masoud Barzani",
    "Avin Aso",
    "Zhilya Ali",
    "Zhwan Qaradaxi",
    "Shahyan Tahseen",
    "Latif Nerwaei",
    "Sanh Shareef",
];
const SUPPORT: [u64; 13] = [113, 115, 55, 25, 41, 30, 62, 34, 5, 10, 49, 18, 15];

fn table(prf: [(f64, f64, f64); 13]) -> Vec<Row> {
    (0..13).map(|i| (SPEAKERS[i], prf[i].0, prf[i].1, prf[i].2, SUPPORT[i])).collect()
}

/// Per-class rows and stated Avg row of the Kurmanji, Hawrami and Sorani tables.
fn paper_tables() -> Vec<(&'static str, Vec<Row>, (f64, f64, f64))> {
    let kurmanji = table([
        (0.85, 0.78, 0.81),
        (0.88, 0.82, 0.85),
        (0.79, 0.75, 0.77),
        (0.91, 0.84, 0.87),
        (0.72, 0.68, 0.70),
        (0.80, 0.75, 0.77),
        (0.89, 0.85, 0.87),
        (0.75, 0.70, 0.72),
        (0.65, 0.50, 0.56),
        (0.83, 0.80, 0.81),
        (0.78, 0.74, 0.76),
        (0.82, 0.78, 0.80),
        (0.77, 0.73, 0.75),
    ]);
    let hawrami = table([
        (0.65, 0.60, 0.62),
        (0.70, 0.65, 0.67),
        (0.58, 0.50, 0.54),
        (0.75, 0.70, 0.72),
        (0.50, 0.45, 0.47),
        (0.60, 0.55, 0.57),
        (0.68, 0.62, 0.65),
        (0.55, 0.50, 0.52),
        (0.40, 0.30, 0.34),
        (0.62, 0.60, 0.61),
        (0.59, 0.53, 0.56),
        (0.64, 0.58, 0.61),
        (0.57, 0.50, 0.53),
    ]);
    let sorani = table([
        (1.0, 1.0, 1.0),
        (1.0, 1.0, 1.0),
        (1.0, 1.0, 1.0),
        (1.0, 1.0, 1.0),
        (0.95, 0.95, 0.95),
        (1.0, 1.0, 1.0),
        (1.0, 1.0, 1.0),
        (0.94, 1.00, 0.97),
        (1.00, 0.60, 0.75),
        (1.0, 1.0, 1.0),
        (0.96, 0.96, 0.96),
        (0.95, 1.00, 0.97),
        (1.00, 0.93, 0.97),
    ]);
    vec![
        ("Kurmanji", kurmanji, (0.80, 0.75, 0.77)),
        ("Hawrami", hawrami, (0.61, 0.55, 0.58)),
        ("Sorani", sorani, (0.98, 0.96, 0.97)),
    ]
}

fn metric_fixtures() -> Outcome {
    let mut literal_misses = Vec::new();
    for (name, rows, (p, r, f)) in paper_tables() {
        let report = ClassReport::from_pr(rows.iter().map(|&(label, p, r, _, s)| (label, p, r, s)));
        let avg = &report.avg;
        for (what, got, want) in [("precision", avg.precision, p), ("recall", avg.recall, r), ("F1", avg.f1, f)] {
            ensure((got - want).abs() <= 0.01, || format!("{name} Avg {what}: {got:.4} vs {want}"))?;
        }
        ensure(avg.support == 572, || format!("{name} support {}", avg.support))?;
        for &(label, p, r, f, _) in &rows {
            ensure(f1_consistent_with_rounding(p, r, f, 2), || format!("{name} {label}: F1 {f} impossible for P {p}, R {r}"))?;
            let dev = (f1_score(p, r) - f).abs();
            if dev > 0.005 {
                literal_misses.push(format!("{name}/{label} by {dev:.4}"));
            }
        }
    }
    ensure((f1_score(1.0, 0.6) - 0.75).abs() < 1e-12, || "(1.00, 0.60) -> 0.75".into())?;
    ensure((f1_score(0.94, 1.0) * 100.0).round() / 100.0 == 0.97, || "(0.94, 1.00) -> 0.97".into())?;
    Ok(format!(
        "three Avg rows within 0.01; every row F1 consistent with 2-decimal rounding of P and R; \
         unrounded |2PR/(P+R) - F1| > 0.005 for {}",
        literal_misses.join(", ")
    ))
}

// 3 ---------------------------------------------------------------------

fn gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (mode, wanted) in [(Mode::Eval, 3), (Mode::Train, 2)] {
        let checks = smooth_gradient_checks(CnnConfig::tiny(), mode, wanted, 40, 1e-3).map_err(|e| e.to_string())?;
        ensure(checks.len() == wanted, || format!("{mode:?}: only {} smooth draws", checks.len()))?;
        for c in checks {
            ensure(c.worst < 1e-3, || format!("{mode:?} seed {}: relative error {:e}", c.model_seed, c.worst))?;
            worst = worst.max(c.worst);
            n += c.checked;
        }
    }
    Ok(format!("{n} parameter checks, worst relative error {worst:.2e}"))
}

// 4 ---------------------------------------------------------------------

fn brute_force_knn(data: &LabeledSet, k: usize, y: &[f64]) -> usize {
    let mut order: Vec<(f64, usize)> = (0..data.len())
        .map(|i| (data.row(i).iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0.0; data.n_classes];
    for &(_, i) in order.iter().take(k) {
        let x = data.row(i);
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = if nx == 0.0 || ny == 0.0 { 0.0 } else { dot / (nx * ny) };
        votes[data.labels[i]] += cos.max(0.0);
    }
    let mut best = 0;
    for c in 1..votes.len() {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    best
}

fn classifier_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..50 {
        let n = rng.gen_range(1..=200);
        let d = rng.gen_range(1..=6);
        let c = rng.gen_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-3..=3) as f64).collect()).collect();
        let labels = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let data = LabeledSet::from_rows(&rows, labels, c).map_err(|e| e.to_string())?;
        let k = rng.gen_range(1..=n.min(9));
        let model = knn_fit(&data, k).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-3..=3) as f64).collect();
            let got = model.predict(&y).map_err(|e| e.to_string())?.class;
            let want = brute_force_knn(&data, k, &y);
            ensure(got == want, || format!("KNN case {case}: {got} vs oracle {want}"))?;
        }
    }

    let counts = LabeledSet::from_rows(&[[3.0, 1.0], [1.0, 3.0]], vec![0, 1], 2).map_err(|e| e.to_string())?;
    let p = mnb_fit(&counts, 1.0).and_then(|m| m.predict(&[1.0, 0.0])).map_err(|e| e.to_string())?;
    let want = [0.5f64.ln() + (2.0f64 / 3.0).ln(), 0.5f64.ln() + (1.0f64 / 3.0).ln()];
    ensure(p.scores.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9), || format!("MNB scores {:?}", p.scores))?;

    let pair = LabeledSet::from_rows(&[[1.0, 0.0], [-1.0, 0.0]], vec![0, 1], 2).map_err(|e| e.to_string())?;
    let svm = svm_fit(&pair, &SvmParams::default()).map_err(|e| e.to_string())?;
    ensure(svm.accuracy(&pair).map_err(|e| e.to_string())? == 1.0, || "SVM training accuracy below 1".into())?;
    let mut slack: f64 = 0.0;
    for c in 0..2 {
        for i in 0..2 {
            let y = if pair.labels[i] == c { 1.0 } else { -1.0 };
            slack = slack.max(1.0 - y * svm.score(c, pair.row(i)));
        }
    }
    ensure(slack <= 1e-2, || format!("SVM margin slack {slack}"))?;

    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 20) as f64]).collect();
    let labels = (0..20).map(|_| rng.gen_range(0..3)).collect();
    let points = LabeledSet::from_rows(&rows, labels, 3).map_err(|e| e.to_string())?;
    let rf = rf_fit(&points, &RfParams::default()).map_err(|e| e.to_string())?;
    let rf_acc = rf.accuracy(&points).map_err(|e| e.to_string())?;
    ensure(rf_acc == 1.0, || format!("RF training accuracy {rf_acc}"))?;

    Ok(format!("KNN 50/50 oracle matches, MNB to 1e-9, SVM slack {slack:.1e}, RF accuracy 1"))
}

// 5 ---------------------------------------------------------------------

fn dsp() -> Outcome {
    let p = FrameParams::default();
    let sine: Vec<f64> = (0..SEG_SAMPLES)
        .map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / 16_000.0).sin())
        .collect();
    let spec = stft_power(&sine, &p).map_err(|e| e.to_string())?;
    ensure(spec.n_frames == 500, || format!("{} frames per segment", spec.n_frames))?;
    for t in 0..spec.n_frames {
        let f = spec.frame(t);
        let peak = (0..f.len()).fold(0, |b, i| if f[i] > f[b] { i } else { b });
        ensure(peak == 32, || format!("frame {t} peaks at bin {peak}"))?;
    }

    let fb = build_mel_filterbank(&p, N_MELS);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise: Vec<f64> = (0..8000).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let base = mfcc(&stft_power(&noise, &p).map_err(|e| e.to_string())?, &fb);
    let mut scale_dev: f64 = 0.0;
    for alpha in [0.25, 3.7] {
        let scaled: Vec<f64> = noise.iter().map(|v| alpha * v).collect();
        let other = mfcc(&stft_power(&scaled, &p).map_err(|e| e.to_string())?, &fb);
        scale_dev = base.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).abs()).fold(scale_dev, f64::max);
    }
    ensure(scale_dev <= 1e-9, || format!("amplitude scaling moved c1..c12 by {scale_dev:e}"))?;

    let n = N_MELS;
    let d = dct_matrix(n);
    let mut dct_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| d[i * n + k] * d[j * n + k]).sum();
            dct_dev = dct_dev.max((v - f64::from(u8::from(i == j))).abs());
        }
    }
    ensure(dct_dev < 1e-6, || format!("|D D^T - I| = {dct_dev:e}"))?;
    Ok(format!("bin 32 in all 500 frames, scaling shift {scale_dev:.1e}, DCT deviation {dct_dev:.1e}"))
}

// 6 and 7 ---------------------------------------------------------------

struct Experiment {
    dir: tempfile::TempDir,
}

const CONFIG: &str = "seed = 7
families = [\"mnb\", \"svm\", \"knn\", \"rf\", \"cnn\"]
[corpus]
manifest = \"corpus/manifest.csv\"
cache = \"cache\"
[protocol]
train = [\"Sorani\", \"Kurmanji\", \"Hawrami\"]
test = [\"Sorani\", \"Kurmanji\", \"Hawrami\"]
[params.cnn]
epochs = 8
";

fn grid(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|e| format!("{}: {v:?}: {e}", path.display())))
                .collect()
        })
        .collect()
}

fn cross_dialect(exp: &Experiment) -> Outcome {
    let dir = exp.dir.path();
    dialect_id(&["synth", "--seed", "7", "--out", "corpus"], dir)?;
    dialect_id(&["features", "corpus/manifest.csv", "--cache", "cache", "--seed", "7"], dir)?;
    fs::write(dir.join("run.toml"), CONFIG).map_err(|e| e.to_string())?;

    let manifest = load_manifest(&dir.join("corpus/manifest.csv")).map_err(|e| e.to_string())?;
    let (corpus, missing) = load_cached(&manifest, &dir.join("cache")).map_err(|e| e.to_string())?;
    ensure(missing.is_empty(), || format!("{} clips missing from the cache", missing.len()))?;
    ensure(corpus.speakers.len() == 13, || format!("{} speakers", corpus.speakers.len()))?;
    for s in 0..13 {
        for d in Dialect::ALL {
            let count = |p| corpus.records.iter().filter(|r| r.speaker == s && r.dialect == d && r.portion == p).count();
            let (fit, held) = (count(Portion::Fit), count(Portion::HeldOut));
            ensure(fit >= 24 && held >= 12, || format!("{} {d}: {fit} training, {held} test segments", corpus.speakers[s]))?;
        }
    }

    dialect_id(&["run", "--config", "run.toml", "--out", "run1"], dir)?;
    let mut detail = Vec::new();
    for family in ["svm", "cnn"] {
        let g = grid(&dir.join(format!("run1/grid_{family}.csv")))?;
        ensure(g.len() == 3 && g.iter().all(|r| r.len() == 3), || format!("{family} grid is not 3x3"))?;
        for (i, row) in g.iter().enumerate() {
            let diag = row[i];
            ensure(diag >= 0.90, || format!("{family} {}: in-dialect macro-F1 {diag:.3}", Dialect::ALL[i]))?;
            for (j, &v) in row.iter().enumerate() {
                ensure(j == i || v < diag, || format!("{family} {} -> {}: {v:.3} not below {diag:.3}", Dialect::ALL[i], Dialect::ALL[j]))?;
            }
        }
        let diag: Vec<String> = (0..3).map(|i| format!("{:.2}", g[i][i])).collect();
        let off = g.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v)).fold(0.0, f64::max);
        detail.push(format!("{family} diagonal {} (max off-diagonal {off:.2})", diag.join("/")));
    }
    Ok(detail.join("; "))
}

fn determinism(exp: &Experiment) -> Outcome {
    let dir = exp.dir.path();
    dialect_id(&["run", "--config", "run.toml", "--out", "run2"], dir)?;
    let list = |run: &str| -> Result<Vec<_>, String> {
        let mut names: Vec<_> = fs::read_dir(dir.join(run).join("reports"))
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        names.sort();
        Ok(names)
    };
    let names = list("run1")?;
    ensure(names == list("run2")?, || "the two runs wrote different report sets".into())?;
    ensure(names.len() == 5 * 9, || format!("{} machine reports", names.len()))?;
    for name in &names {
        let a = fs::read(dir.join("run1/reports").join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.join("run2/reports").join(name)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{} differs", name.to_string_lossy()))?;
    }
    Ok(format!("{} machine reports byte-identical", names.len()))
}

fn main() -> ExitCode {
    let exp = Experiment {
        dir: tempfile::tempdir().expect("temp dir"),
    };
    let criteria: [(&str, Duration, Box<dyn Fn() -> Outcome>); 7] = [
        ("paramcheck layer counts and shape chain", Duration::from_secs(1), Box::new(paramcheck)),
        ("paper table metric fixtures", Duration::from_secs(1), Box::new(metric_fixtures)),
        ("CNN gradient check", Duration::from_secs(30), Box::new(gradients)),
        ("classifier oracles", Duration::from_secs(10), Box::new(classifier_oracles)),
        ("DSP properties", Duration::from_secs(5), Box::new(dsp)),
        ("cross-dialect phenomenon", Duration::from_secs(300), Box::new(|| cross_dialect(&exp))),
        ("determinism", Duration::from_secs(300), Box::new(|| determinism(&exp))),
    ];
    let mut failed = 0;
    let mut e2e = Duration::ZERO;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if i >= 5 {
            e2e += took;
        }
        let over = if i >= 5 { e2e > *budget } else { took > *budget };
        if outcome.is_ok() && over {
            outcome = Err(format!("over the {:.0} s budget", budget.as_secs_f64()));
        }
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({:.2} s): {detail}", i + 1, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({:.2} s): {why}", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
