mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{ctm_oracle, disruption_oracle, highs, stage1_oracle};
use metro_recovery::pipeline::{run_pipeline, RunOptions, BASELINE, MANIFEST, SODTA_SUMMARY};
use metro_recovery::rescheduler::run_stage1;
use metro_recovery::synth::{toy_scenario, ToyLimits};
use milp::mps::write_mps;

enum Outcome {
    Pass(String),
    Skip(String),
}

struct CaseRuns {
    elapsed: [Duration; 2],
    identical: bool,
    differing: Vec<String>,
    so_ttt: f64,
    fixed_ttt: f64,
    residual: f64,
}

fn case_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/case.json")
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn reported(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.split_once(key))
        .and_then(|(_, rest)| rest.split_whitespace().next()?.parse().ok())
        .unwrap_or_else(|| panic!("summary lacks `{}`", key))
}

fn run_case_twice() -> CaseRuns {
    let tmp = tempfile::tempdir().unwrap();
    let mut elapsed = [Duration::ZERO; 2];
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for (k, dir) in dirs.iter().enumerate() {
        let mut o = RunOptions::new(case_fixture(), dir);
        o.seed = Some(7);
        let start = Instant::now();
        run_pipeline(&o).unwrap();
        elapsed[k] = start.elapsed();
    }
    let (a, b) = (artifacts(&dirs[0]), artifacts(&dirs[1]));
    let differing = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .cloned()
        .collect::<Vec<_>>();
    let so = fs::read_to_string(dirs[0].join(SODTA_SUMMARY)).unwrap();
    CaseRuns {
        elapsed,
        identical: differing.is_empty() && !a.is_empty(),
        differing,
        so_ttt: reported(&so, "total travel time: "),
        fixed_ttt: reported(&fs::read_to_string(dirs[0].join(BASELINE)).unwrap(), "total travel time: "),
        residual: reported(&so, "max conservation residual: "),
    }
}

fn c01() -> Outcome {
    Outcome::Pass(stage1_oracle::check_toy_optima(60))
}

fn c02() -> Outcome {
    Outcome::Pass(format!("{}; {}", stage1_oracle::check_default_penalty(60), stage1_oracle::check_floor_penalty()))
}

fn c03() -> Outcome {
    Outcome::Pass(disruption_oracle::check_fuzzed_conflicts(1000))
}

fn c04() -> Outcome {
    Outcome::Pass(disruption_oracle::check_indicator_properties(120))
}

fn c05() -> Outcome {
    Outcome::Pass(format!("{}; {}", stage1_oracle::check_toy_audits(60), stage1_oracle::check_case_audits()))
}

fn c06() -> Outcome {
    Outcome::Pass(format!(
        "{}; {}",
        stage1_oracle::check_toy_accumulation(60),
        stage1_oracle::check_identity_timetable(30)
    ))
}

fn c07() -> Outcome {
    Outcome::Pass(ctm_oracle::check_lane_constants())
}

fn c08(case: &CaseRuns) -> Outcome {
    let dom = ctm_oracle::check_dominance(20);
    let strict = ctm_oracle::check_strict_improvement();
    assert!(case.residual <= 1e-6, "case residual {}", case.residual);
    let pct = 100.0 * (case.fixed_ttt - case.so_ttt) / case.fixed_ttt;
    assert!(
        (1.0..=15.0).contains(&pct),
        "case improvement {:.2}% (SO {} vs fixed {}) outside [1, 15]",
        pct,
        case.so_ttt,
        case.fixed_ttt
    );
    Outcome::Pass(format!("{}; {}; case {:.2}% below fixed routes, residual {:.1e}", dom, strict, pct, case.residual))
}

fn c09() -> Outcome {
    Outcome::Pass(ctm_oracle::check_red_steps())
}

fn c10() -> Outcome {
    Outcome::Pass(ctm_oracle::check_free_flow(10))
}

fn c11(case: &CaseRuns) -> Outcome {
    assert!(case.identical, "artifacts differ: {:?}", case.differing);
    let limit = Duration::from_secs(600);
    assert!(case.elapsed.iter().all(|e| *e < limit), "runs took {:?}", case.elapsed);
    Outcome::Pass(format!(
        "byte-identical artifacts; runs {:.1} s and {:.1} s",
        case.elapsed[0].as_secs_f64(),
        case.elapsed[1].as_secs_f64()
    ))
}

fn c12() -> Outcome {
    if !highs::available() {
        return Outcome::Skip("python3 with highspy not found".into());
    }
    let dir = tempfile::tempdir().unwrap();
    let mut worst = 0.0f64;
    for seed in 0..12 {
        let s = toy_scenario(seed, ToyLimits::default());
        let (_, model, sol) = run_stage1(&s).unwrap();
        let path = dir.path().join(format!("toy{}.mps", seed));
        write_mps(&model.model, "STAGE1", &path).unwrap();
        let (status, theirs) = highs::solve(&path);
        assert_eq!(status, "Optimal", "toy {}", seed);
        let gap = (sol.objective - theirs).abs();
        assert!(gap <= 1e-6, "toy {}: {} vs {}", seed, sol.objective, theirs);
        worst = worst.max(gap);
    }
    Outcome::Pass(format!("12 toys agree with HiGHS, max gap {:.1e}", worst))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f));
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(Outcome::Pass(detail)) => {
            println!("[AC-{:02}] PASS {} ({:.1} s): {}", id, name, secs, detail);
            true
        }
        Ok(Outcome::Skip(why)) => {
            println!("[AC-{:02}] SKIP {}: {}", id, name, why);
            true
        }
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            println!("[AC-{:02}] FAIL {}: {}", id, name, msg.lines().next().unwrap_or(""));
            false
        }
    }
}

fn main() -> ExitCode {
    panic::set_hook(Box::new(|_| {}));
    let case = panic::catch_unwind(run_case_twice);
    let case_err = || "case pipeline run failed".to_string();
    let mut ok = true;
    ok &= run(1, "stage-1 optimum equals enumeration, tol 1e-6, < 5 min", c01);
    ok &= run(2, "stranding penalty: M = 1 + max wait assigns, M = max wait strands", c02);
    ok &= run(3, "conflict and classification oracles, 0 mismatches", c03);
    ok &= run(4, "indicator properties, 0 violations", c04);
    ok &= run(5, "timetable audits: disruption, headway >= 1 min, load <= capacity", c05);
    ok &= run(6, "accumulation identities and identity timetable", c06);
    ok &= run(7, "CTM constants 400 m, Q 11, N 33", c07);
    ok &= run(8, "SO-DTA residual <= 1e-6, dominance, case gain in [1%, 15%]", || match &case {
        Ok(c) => c08(c),
        Err(_) => panic!("{}", case_err()),
    });
    ok &= run(9, "zero outflow at red steps", c09);
    ok &= run(10, "free-flow LP equals direct simulation, tol 1e-6", c10);
    ok &= run(11, "case determinism, each run < 10 min", || match &case {
        Ok(c) => c11(c),
        Err(_) => panic!("{}", case_err()),
    });
    ok &= run(12, "MPS export agrees with external solver, tol 1e-6", c12);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
