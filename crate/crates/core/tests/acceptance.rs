//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::time::{Duration, Instant};

use adapt_kit::analysis::{
    analyze, steady_state, transient, Analysis, AnalysisOptions, Mttf, DEFAULT_TIMES,
};
use adapt_kit::emit::{emit_generic_xml, emit_pnml};
use adapt_kit::gspn::validate_gspn;
use adapt_kit::transform::transform;
use common::{
    check_diagnostics_corpus, fixture_model, fixture_path, pnml_counts, random_model,
    read_generic_xml, rel_close, run_cli, scale_rates, structural_violations,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(name: &str, times: &[f64]) -> Result<Analysis, String> {
    let options = AnalysisOptions {
        times: times.to_vec(),
        ..AnalysisOptions::default()
    };
    analyze(&fixture_model(name), &options).map_err(|e| format!("{name}: {e}"))
}

fn hours(m: Mttf) -> Result<f64, String> {
    match m {
        Mttf::Hours(h) => Ok(h),
        Mttf::Infinite => Err("MTTF is infinite".into()),
    }
}

fn ac1() -> Outcome {
    let (lambda, mu) = (1.0e-3, 1.0e-1);
    let start = Instant::now();
    let a = run("l1.adm", &[1.0e3])?;
    let b = run("l1_norepair.adm", &[1.0e3])?;
    let elapsed = start.elapsed();
    let avail = a
        .report
        .steady_availability
        .ok_or("no steady availability")?;
    let expected = mu / (lambda + mu);
    ensure(rel_close(avail, expected, 1e-9), || {
        format!("availability {avail} vs {expected}")
    })?;
    let mttf = hours(b.report.mttf)?;
    ensure(rel_close(mttf, 1.0 / lambda, 1e-9), || {
        format!("MTTF {mttf} vs 1000")
    })?;
    let r = b.report.reliability[0].1;
    let e1 = (-1.0f64).exp();
    ensure((r - e1).abs() <= 1e-6, || format!("R(1000) {r} vs {e1}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("runtime {elapsed:?}")
    })?;
    Ok(format!(
        "A={avail:.15} MTTF={mttf:.9} R(1000)={r:.9} in {elapsed:?}"
    ))
}

fn ac2() -> Outcome {
    let (lambda, mu) = (1.0e-2, 1.0e-1);
    let a = run("repairman.adm", &[])?;

    // Brute force: machine states x arbiter states consistent with the
    // arbiter tracking which machines are down.
    let arbiter = [
        ("Idle", [false, false]),
        ("BusyA", [true, false]),
        ("BusyB", [false, true]),
        ("BusyA_WaitB", [true, true]),
        ("BusyB_WaitA", [true, true]),
    ];
    let mut enumerated = 0;
    for ma in [false, true] {
        for mb in [false, true] {
            enumerated += arbiter.iter().filter(|(_, down)| *down == [ma, mb]).count();
        }
    }
    ensure(a.ctmc.len() == enumerated, || {
        format!(
            "{} tangible states, enumeration gives {enumerated}",
            a.ctmc.len()
        )
    })?;

    let pi = steady_state(&a.ctmc, 1e-10)
        .map_err(|e| e.to_string())?
        .distribution;
    let mut lumped = [0.0; 3];
    for (i, p) in pi.iter().enumerate() {
        let m = &a.graph.markings[a.ctmc.states[i]];
        let down = a
            .transformed
            .net
            .places
            .iter()
            .zip(&m.0)
            .filter(|(pl, &k)| k > 0 && (pl.name == "MA/Failed" || pl.name == "MB/Failed"))
            .count();
        lumped[down] += p;
    }
    let w = [1.0, 2.0 * lambda / mu, 2.0 * lambda * lambda / (mu * mu)];
    let total: f64 = w.iter().sum();
    for k in 0..3 {
        let expected = w[k] / total;
        ensure((lumped[k] - expected).abs() <= 1e-8, || {
            format!("P(k={k} down) {} vs {expected}", lumped[k])
        })?;
    }
    Ok(format!(
        "{enumerated} tangible states, lumped {lumped:.12?}"
    ))
}

fn ac3() -> Outcome {
    let lambda = 1.0e-3;
    let a = run("cpu_thread.adm", &[100.0, 1000.0])?;
    let mut parts = Vec::new();
    for &(t, r) in &a.report.reliability {
        let expected = (-lambda * t).exp();
        ensure((r - expected).abs() <= 1e-6, || {
            format!("R({t}) {r} vs {expected}")
        })?;
        parts.push(format!("R({t})={r:.9}"));
    }
    Ok(parts.join(" "))
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let count = 250;
    let mut links = 0;
    for seed in 0..count {
        let g = random_model(seed);
        links += g.active_links().len();
        let v = structural_violations(&g);
        ensure(v.is_empty(), || format!("seed {seed}: {}", v.join("; ")))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("runtime {elapsed:?}")
    })?;
    Ok(format!(
        "{count} models ({links} active links) in {elapsed:?}"
    ))
}

fn ac5() -> Outcome {
    let c = 10.0;
    let mut max_drift: f64 = 0.0;
    for name in [
        "l1.adm",
        "duplex.adm",
        "repairman.adm",
        "duplex_independent.adm",
        "cpu_thread.adm",
    ] {
        let base = run(name, &DEFAULT_TIMES)?;
        let scaled = analyze(
            &scale_rates(&fixture_model(name), c),
            &AnalysisOptions::default(),
        )
        .map_err(|e| format!("{name} scaled: {e}"))?;
        match (
            base.report.steady_availability,
            scaled.report.steady_availability,
        ) {
            (Some(x), Some(y)) => {
                max_drift = max_drift.max((x - y).abs());
                ensure((x - y).abs() <= 1e-12, || {
                    format!("{name}: availability drift {:e}", (x - y).abs())
                })?;
            }
            (None, None) => {}
            _ => {
                return Err(format!(
                    "{name}: availability presence changed under scaling"
                ))
            }
        }
        if let (Mttf::Hours(x), Mttf::Hours(y)) = (base.report.mttf, scaled.report.mttf) {
            ensure(rel_close(y, 0.1 * x, 1e-9), || {
                format!("{name}: MTTF {y} vs {}", 0.1 * x)
            })?;
        } else if base.report.mttf != scaled.report.mttf {
            return Err(format!("{name}: MTTF finiteness changed under scaling"));
        }

        if let Ok(s) = steady_state(&base.ctmc, 1e-10) {
            let sum: f64 = s.distribution.iter().sum();
            ensure((sum - 1.0).abs() <= 1e-9, || {
                format!("{name}: steady sum {sum}")
            })?;
        }
        for &t in &DEFAULT_TIMES {
            let p = transient(&base.ctmc, t, 1e-10).map_err(|e| e.to_string())?;
            let sum: f64 = p.iter().sum();
            ensure((sum - 1.0).abs() <= 1e-9, || {
                format!("{name}: transient sum {sum} at {t}")
            })?;
        }
        for w in base.report.reliability.windows(2) {
            ensure(w[1].1 <= w[0].1, || format!("{name}: R increases {w:?}"))?;
        }
    }
    Ok(format!("max availability drift {max_drift:e}"))
}

fn ac6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for name in ["l1.adm", "duplex.adm", "repairman.adm", "cpu_thread.adm"] {
        let model = fixture_path(name);
        let model = model.to_str().unwrap();
        let mut outputs = Vec::new();
        for k in 0..2 {
            let stem = dir.path().join(format!("{name}.{k}"));
            let paths = ["pnml", "xml", "dot", "report"].map(|ext| stem.with_extension(ext));
            let (code, _, err) = run_cli(&[
                "transform",
                model,
                "--pnml",
                paths[0].to_str().unwrap(),
                "--xml",
                paths[1].to_str().unwrap(),
                "--dot",
                paths[2].to_str().unwrap(),
            ]);
            ensure(code == 0, || {
                format!("{name}: transform exit {code}: {err}")
            })?;
            let (code, stdout, err) =
                run_cli(&["analyze", model, "--report", paths[3].to_str().unwrap()]);
            ensure(code == 0, || format!("{name}: analyze exit {code}: {err}"))?;
            let mut bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
            bytes.push(stdout.into_bytes());
            outputs.push(bytes);
        }
        ensure(outputs[0] == outputs[1], || {
            format!("{name}: outputs differ between runs")
        })?;
        files += outputs[0].len();

        let t = transform(&fixture_model(name)).map_err(|e| e.to_string())?;
        ensure(validate_gspn(&t.net).is_empty(), || {
            format!("{name}: invalid net")
        })?;
        let pnml = emit_pnml(&t.net).map_err(|e| e.to_string())?;
        let counts = pnml_counts(&pnml);
        let expected = (
            t.net.places.len(),
            t.net.transitions.len(),
            t.net.arcs.len(),
        );
        ensure(counts == expected, || {
            format!("{name}: PNML counts {counts:?} vs {expected:?}")
        })?;
        let xml = emit_generic_xml(&t.net, &t.trace).map_err(|e| e.to_string())?;
        let (back, _, _) = read_generic_xml(&xml);
        ensure(back == t.net, || {
            format!("{name}: generic XML does not round-trip")
        })?;
    }
    Ok(format!(
        "{files} outputs identical across runs; PNML and XML checks passed"
    ))
}

fn ac7() -> Outcome {
    let (count, failures) = check_diagnostics_corpus();
    ensure(count >= 15, || format!("only {count} corpus files"))?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{count} corpus files matched"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("{name} PASS: {detail}"),
            Ok(Err(reason)) => {
                failed += 1;
                println!("{name} FAIL: {reason}");
            }
            Err(_) => {
                failed += 1;
                println!("{name} FAIL: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
