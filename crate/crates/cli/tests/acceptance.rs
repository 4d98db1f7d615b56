//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qss_core::adversary::trial_seed;
use qss_core::ghz::{check_u_relation, form_equivalence, ghz_closed_form, ghz_sum_form, CommonEigenspace, GhzSpec};
use qss_core::mub::{check_mub, eigen_residuals};
use qss_core::protocol::transcript_audit;
use qss_core::stats::chi_square_uniform;
use qss_core::{detection_analytic, estimate_detection, run_protocol, AdversaryKind, Dim, ProtocolConfig};

type Outcome = Result<String, String>;

fn dim(d: usize) -> Dim {
    Dim::new(d).unwrap()
}

fn mub_property() -> Outcome {
    let worst = (2..=16).map(|d| check_mub(dim(d))).fold(0.0, f64::max);
    if worst < 1e-9 {
        Ok(format!("max deviation {worst:.2e} for d in 2..16"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn eigen_residual_bound() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=16 {
        let r = eigen_residuals(dim(d)).map_err(|e| e.to_string())?;
        worst = worst.max(r.x).max(r.y);
    }
    if worst < 1e-7 {
        Ok(format!("max residual {worst:.2e}"))
    } else {
        Err(format!("max residual {worst:.2e}"))
    }
}

fn ghz_identities() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=16 {
        let dm = dim(d);
        for a in dm.residues() {
            let spec = GhzSpec::xyy(dm, a.value());
            let closed = ghz_closed_form(&spec).map_err(|e| e.to_string())?;
            let overlap = ghz_sum_form(&spec).inner(&closed).map_err(|e| e.to_string())?.norm();
            worst = worst.max(1.0 - overlap);
            if !check_u_relation(dm, a) {
                return Err(format!("U relation fails at d={d} alpha={a}"));
            }
            if !form_equivalence(dm, a) {
                return Err(format!("XYY/YXY/YYX differ at d={d} alpha={a}"));
            }
        }
    }
    if worst < 1e-9 {
        Ok(format!(
            "sum vs closed form deviation {worst:.2e}; U relation and form equivalence hold"
        ))
    } else {
        Err(format!("sum vs closed form deviation {worst:.2e}"))
    }
}

fn uniqueness() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=12 {
        let dm = dim(d);
        let solver = CommonEigenspace::new(dm).map_err(|e| e.to_string())?;
        for a in dm.residues() {
            let es = solver.solve(a).map_err(|e| e.to_string())?;
            if es.rank != 1 {
                return Err(format!("rank {} at d={d} alpha={a}", es.rank));
            }
            let closed = ghz_closed_form(&GhzSpec::xyy(dm, a.value())).map_err(|e| e.to_string())?;
            worst = worst.max(1.0 - es.basis[0].inner(&closed).map_err(|e| e.to_string())?.norm());
        }
    }
    if worst < 1e-9 {
        Ok(format!("rank 1 everywhere; generator deviation {worst:.2e}"))
    } else {
        Err(format!("generator deviation {worst:.2e}"))
    }
}

fn honest_protocol() -> Outcome {
    let mut notes = Vec::new();
    for d in [2, 3, 4, 5, 8] {
        let mut counts = vec![0usize; d];
        for seed in 0..100u64 {
            let cfg = ProtocolConfig::fixed(dim(d), 64, seed as usize % d, seed).map_err(|e| e.to_string())?;
            let rep = run_protocol(&cfg, None).map_err(|e| e.to_string())?;
            if rep.aborted || !rep.key_agreement {
                return Err(format!(
                    "d={d} seed={seed}: aborted={} agreement={}",
                    rep.aborted, rep.key_agreement
                ));
            }
            for &s in &rep.alice_key {
                counts[s] += 1;
            }
        }
        let chi = chi_square_uniform(&counts);
        if chi.p_value <= 0.001 {
            return Err(format!("d={d}: key digits not uniform, p={:.2e}", chi.p_value));
        }
        notes.push(format!("d={d} p={:.3}", chi.p_value));
    }
    Ok(format!(
        "500 runs, no aborts, keys agree; uniformity {}",
        notes.join(", ")
    ))
}

fn detection_formula() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (d, n, reference) in [(2, 1, 0.25), (2, 4, 0.6836), (3, 2, 0.5556), (5, 6, 0.9533)] {
        let analytic = detection_analytic(dim(d), n);
        if (analytic - reference).abs() > 5e-5 {
            return Err(format!(
                "closed form {analytic} differs from {reference} at d={d} n={n}"
            ));
        }
        let cfg = ProtocolConfig::fixed(dim(d), n, 0, 600 + d as u64 * 10 + n as u64).map_err(|e| e.to_string())?;
        let est = estimate_detection(&cfg, AdversaryKind::BobIr, 10_000).map_err(|e| e.to_string())?;
        let z = est.z_score.ok_or("missing z-score")?;
        ok &= z.abs() < 3.0;
        notes.push(format!("(d={d},n={n}) {:.4} vs {analytic:.4} z={z:+.2}", est.rate));
    }
    let text = notes.join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn dimension_monotonicity() -> Outcome {
    let run = |d: usize| {
        let cfg = ProtocolConfig::fixed(dim(d), 4, 1, 700 + d as u64).unwrap();
        estimate_detection(&cfg, AdversaryKind::BobIr, 10_000).unwrap()
    };
    let (low, high) = (run(2), run(8));
    let (_, low_top) = low.interval(3.0);
    let (high_bottom, _) = high.interval(3.0);
    let text = format!(
        "d=2 {:.4} +- {:.4}, d=8 {:.4} +- {:.4}",
        low.rate,
        3.0 * low.std_error,
        high.rate,
        3.0 * high.std_error
    );
    if high_bottom > low_top {
        Ok(text)
    } else {
        Err(text)
    }
}

fn ordering_defense() -> Outcome {
    let trials = 10_000;
    let base = ProtocolConfig::fixed(dim(2), 4, 1, 800).map_err(|e| e.to_string())?;
    let mut detected = 0;
    let mut violations = 0;
    for i in 0..trials {
        let mut cfg = base.clone();
        cfg.seed = trial_seed(base.seed, i);
        let mut adv = AdversaryKind::BobEntangle.build().unwrap();
        let rep = run_protocol(&cfg, Some(adv.as_mut())).map_err(|e| e.to_string())?;
        if rep.invalid.is_some() {
            return Err(format!("trial {i} invalid: {:?}", rep.invalid));
        }
        detected += rep.aborted as usize;
        violations += transcript_audit(&rep).len();
    }
    let est = estimate_detection(&base, AdversaryKind::BobEntangle, trials).map_err(|e| e.to_string())?;
    if est.detected != detected {
        return Err(format!(
            "estimator counted {} aborts, replay counted {detected}",
            est.detected
        ));
    }
    let rate = detected as f64 / trials as f64;
    let text = format!("rate {rate:.4} over {trials} runs, {violations} audit violations");
    if rate > 0.1 && violations == 0 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qss");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify", "--d", "2..5"],
        vec!["run", "--d", "3", "--n", "16", "--seed", "1"],
        vec!["run", "--d", "4", "--n", "8", "--alpha-mode", "string", "--seed", "9"],
        vec![
            "run",
            "--d",
            "2",
            "--n",
            "8",
            "--adversary",
            "bob-entangle",
            "--seed",
            "4",
        ],
        vec![
            "run",
            "--d",
            "3",
            "--n",
            "8",
            "--adversary",
            "eve-ir",
            "--test-fraction",
            "0.3",
            "--seed",
            "5",
        ],
        vec![
            "attack",
            "--adversary",
            "bob-ir",
            "--d",
            "2",
            "--n",
            "4",
            "--trials",
            "2000",
            "--seed",
            "6",
        ],
        vec![
            "attack",
            "--adversary",
            "bob-entangle",
            "--d",
            "2",
            "--n",
            "4",
            "--trials",
            "1000",
            "--seed",
            "7",
        ],
    ];
    let invoke = |args: &[&str], out: &Path| -> Result<Vec<u8>, String> {
        let status = Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("{args:?} exited with {status}"));
        }
        std::fs::read(out).map_err(|e| e.to_string())
    };
    for (i, args) in commands.iter().enumerate() {
        let a = invoke(args, &dir.path().join(format!("{i}-a.json")))?;
        let b = invoke(args, &dir.path().join(format!("{i}-b.json")))?;
        if a != b {
            return Err(format!("{args:?} produced different reports"));
        }
    }
    Ok(format!("{} commands, byte-identical reports", commands.len()))
}

fn main() {
    // Under `cargo test -- <filter>` only run when the filter matches.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    type Check = (&'static str, fn() -> Outcome);
    let criteria: [Check; 9] = [
        ("1 MUB property", mub_property),
        ("2 eigenbasis residuals", eigen_residual_bound),
        ("3 GHZ identities", ghz_identities),
        ("4 eigenspace uniqueness", uniqueness),
        ("5 honest protocol", honest_protocol),
        ("6 detection formula", detection_formula),
        ("7 dimension monotonicity", dimension_monotonicity),
        ("8 ordering defense", ordering_defense),
        ("9 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
