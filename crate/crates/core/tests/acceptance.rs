//! Acceptance battery: one PASS/FAIL line per criterion, then the timed
//! end-to-end `reproduce-all` run through the binary.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use koenigs_lab::battery::{self, CriterionResult};

/// Values the battery reports, re-derived here from closed forms.
fn cross_checks(id: u32) -> Vec<(&'static str, f64, f64)> {
    let root3 = 3f64.sqrt();
    match id {
        1 => vec![
            ("k1_at_a", 8.0 / 9.0, 1e-6),
            ("norm_k", 2.0 / root3, 1e-6),
            ("norm_k1", 1.25f64.sqrt() / 0.75f64.powf(1.5), 1e-6),
        ],
        2 => ["lambda_real", "lambda_imag", "rotated_point"]
            .into_iter()
            .flat_map(|p| {
                [
                    (leak(format!("{p}.lhs")), 0.5, 1e-7),
                    (leak(format!("{p}.rhs")), 1.0 / 5f64.sqrt(), 1e-7),
                ]
            })
            .collect(),
        3 => vec![("pairs_checked", 507.0, 0.0)],
        5 => vec![("g00_re", root3 / 2.0, 1e-9), ("g11_re", -3.0 * root3 / 8.0, 1e-9), ("one_vs_sigma_overlap", 0.5, 1e-12)],
        _ => Vec::new(),
    }
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

fn judge(r: &CriterionResult) -> (bool, Vec<String>) {
    let mut notes = Vec::new();
    if let Some(e) = &r.error {
        notes.push(format!("error: {e}"));
    }
    if !r.pass {
        for (name, value) in r.metrics.iter() {
            notes.push(format!("{name} = {value:e}"));
        }
    }
    if let Some(limit) = r.time_limit {
        if r.elapsed > limit {
            notes.push(format!("took {:?}, limit {:?}", r.elapsed, limit));
        }
    }
    let mut ok = r.pass_in_time();
    for (name, want, tol) in cross_checks(r.id) {
        match r.metrics.get(name) {
            Some(v) if (v - want).abs() <= tol => {}
            other => {
                ok = false;
                notes.push(format!("{name}: got {other:?}, want {want} ± {tol:e}"));
            }
        }
    }
    (ok, notes)
}

fn main() -> ExitCode {
    let mut failed = 0;
    for id in 1..=battery::CRITERIA {
        let r = battery::criterion(id).expect("numbered criterion");
        let (ok, notes) = judge(&r);
        println!(
            "{} criterion {:>2} {:<34} {:>9.3} ms",
            if ok { "PASS" } else { "FAIL" },
            id,
            r.name,
            r.elapsed.as_secs_f64() * 1e3
        );
        for n in notes {
            println!("       {n}");
        }
        failed += usize::from(!ok);
    }

    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_koenigs-lab"))
        .args(["reproduce-all", "--format", "json"])
        .output()
        .expect("run koenigs-lab");
    let elapsed = start.elapsed();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    let ok = out.status.code() == Some(0)
        && report["passed"] == true
        && report["coverage_complete"] == true
        && elapsed < Duration::from_secs(60);
    println!(
        "{} reproduce-all under 60 s {:>27.3} s (exit {:?})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        out.status.code()
    );
    if !ok {
        println!("{}", String::from_utf8_lossy(&out.stderr));
        failed += 1;
    }

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    }
}
