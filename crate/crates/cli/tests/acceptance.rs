//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force_energy, random_model, random_solution, DpInstance};
use stparse_core::inference::dp::best_path;
use stparse_core::inference::{infer, Engine};
use stparse_core::learning::train;
use stparse_core::likelihood::solution_energy;
use stparse_core::metrics::{evaluate, truth_as_solution, EvalReport, Normalization};
use stparse_core::synth::{composition_scripts, generate, scenario_suite, single_event_scripts, NoiseSpec};
use stparse_core::{
    Dataset, InferenceConfig, Model, ParseGraph, RelationLayout, Sample, SceneModel, Solution, SolvedGroup,
    TrainingConfig, Trajectory, TruthGroup, Vocabulary,
};

const TRAIN_SCENES: u64 = 20;
const TEST_SCENES: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dp_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..500 {
        let inst = DpInstance::random(&mut rng, 6, 3);
        let want = inst.exhaustive();
        let got = best_path(inst.n_ticks, inst.n_templates, |x, y| inst.allowed[x][y], |a, kp, k| inst.edge[a][kp][k])
            .map_or(f64::NEG_INFINITY, |p| p.objective);
        if want == f64::NEG_INFINITY || got == f64::NEG_INFINITY {
            mismatches += usize::from(want != got);
        } else {
            worst = worst.max((want - got).abs());
            mismatches += usize::from((want - got).abs() > 1e-9);
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!("500 instances, {mismatches} mismatches, max gap {worst:.1e}, {elapsed:.2?}"),
    )
}

fn energy_audit() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scripts = scenario_suite();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = generate(&scripts[i % scripts.len()], 100 + i as u64).unwrap();
        let m = random_model(&d.vocabulary, 1 + i % 6, &mut rng);
        let s = random_solution(&d, &m, &mut rng);
        let got = solution_energy(&s, &d, &m).unwrap().total;
        let want = brute_force_energy(&s, &d, &m);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    let elapsed = t0.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(30),
        format!("100 solutions, max relative gap {worst:.1e}, {elapsed:.2?}"),
    )
}

fn scene(i: u64, seed: u64, noise: Option<&NoiseSpec>) -> Dataset {
    let scripts = composition_scripts();
    let mut s = scripts[i as usize % scripts.len()].clone();
    if let Some(n) = noise {
        s.noise = n.clone();
    }
    generate(&s, seed).unwrap()
}

struct Recovery {
    model: Model,
    mean: [f64; 3],
    baseline_f: f64,
    traces: Vec<Vec<f64>>,
    elapsed: Duration,
}

fn one_group_baseline(d: &Dataset) -> f64 {
    let mut s = truth_as_solution(d).unwrap();
    let rest: Vec<SolvedGroup> = s.groups.drain(1..).collect();
    for g in rest {
        s.groups[0].members.extend(g.members);
        s.groups[0].parse.roles.extend(g.parse.roles);
    }
    evaluate(d, &s, Normalization::Mean).unwrap().grouping_f
}

fn recovery(noise: Option<NoiseSpec>) -> Recovery {
    let t0 = Instant::now();
    let train_set: Vec<Dataset> = (0..TRAIN_SCENES).map(|i| scene(i, 1000 + i, noise.as_ref())).collect();
    let model = train(&train_set, &TrainingConfig::default()).unwrap();
    let mut sum = [0.0; 3];
    let mut baseline = 0.0;
    let mut traces = Vec::new();
    for i in 0..TEST_SCENES {
        let d = scene(i, 2000 + i, noise.as_ref());
        let s = infer(&d, &model, &InferenceConfig { seed: i, ..Default::default() }).unwrap();
        let r: EvalReport = evaluate(&d, &s, Normalization::Mean).unwrap();
        sum[0] += r.grouping_f;
        sum[1] += r.event_accuracy;
        sum[2] += r.role_accuracy;
        baseline += one_group_baseline(&d);
        traces.push(s.trace);
    }
    let n = TEST_SCENES as f64;
    Recovery {
        model,
        mean: sum.map(|v| v / n),
        baseline_f: baseline / n,
        traces,
        elapsed: t0.elapsed(),
    }
}

fn clean_recovery(r: &Recovery) -> Outcome {
    let [f, ee, er] = r.mean;
    outcome(
        f >= 0.95 && ee >= 0.90 && er >= 0.80 && r.elapsed < Duration::from_secs(600),
        format!("F {f:.3}, event accuracy {ee:.3}, role accuracy {er:.3}, {:.1?}", r.elapsed),
    )
}

fn noisy_recovery(clean: &Recovery, noisy: &Recovery) -> Outcome {
    let finite = noisy.mean.iter().all(|v| v.is_finite());
    let degraded = noisy.mean.iter().zip(&clean.mean).all(|(n, c)| n <= c);
    let [f, ee, er] = noisy.mean;
    outcome(
        finite && degraded && f > noisy.baseline_f,
        format!(
            "F {f:.3}, event accuracy {ee:.3}, role accuracy {er:.3}; one-group baseline F {:.3}, {:.1?}",
            noisy.baseline_f, noisy.elapsed
        ),
    )
}

fn boundary_recovery(model: &Model) -> Outcome {
    let script = single_event_scripts()[0].clone();
    let mut hits = 0;
    for seed in 0..20u64 {
        let d = generate(&script, 3000 + seed).unwrap();
        let g = &d.groups.as_ref().unwrap()[0];
        let index = d.index_map();
        let mut members: Vec<usize> = g.members.iter().map(|id| index[id.as_str()]).collect();
        members.sort_unstable();
        let roles: Vec<usize> = members.iter().map(|&t| d.trajectories[t].role.unwrap()).collect();
        let mut engine = Engine::new(&d, model).unwrap();
        let (labels, _) = engine.dp_segment(&members, &roles, g.event).unwrap();
        let bounds: Vec<f64> = labels.windows(2).map(|w| w[0].interval.1).collect();
        let changes: Vec<f64> = g.phases.windows(2).map(|w| w[0].interval.1).collect();
        let unit = model.config.unit;
        hits += usize::from(changes.iter().all(|c| bounds.iter().any(|b| (b - c).abs() <= unit + 1e-9)));
    }
    outcome(hits >= 16, format!("{hits}/20 runs with every phase change within one unit"))
}

fn acceptance_rate() -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let vocab = Vocabulary::new(s(&["Walk"]), s(&["A", "B"]), s(&["Bag"]), s(&["Bench"])).unwrap();
    let d = common::plain_dataset(
        vocab.clone(),
        vec![
            common::walker("a", 0.0, 8.0, (0.0, 0.0), (1.0, 0.0)),
            common::walker("b", 0.0, 8.0, (0.0, 5.0), (1.0, 0.0)),
        ],
    );
    let mut m = random_model(&vocab, 2, &mut ChaCha8Rng::seed_from_u64(6));
    let dim = RelationLayout::new(&vocab).dim();
    // label B costs 0.25 per unit and member, nothing else scores
    for t in m.grammar.templates.iter_mut() {
        t.weights = vec![0.0; dim];
        t.weights[1] = -0.25;
        t.bias = 0.0;
    }
    m.grammar.roles_of = vec![vec![0, 1]];
    m.standardizer.mean = vec![0.0; dim];
    m.standardizer.stdev = vec![1.0; dim];
    let mut engine = Engine::new(&d, &m).unwrap();
    let start = engine.label(&[0, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut trials, mut accepted, mut delta) = (0usize, 0usize, 0.0);
    while trials < 10_000 {
        let mut state = start.clone();
        let out = engine.role_step(&mut state, &mut rng);
        if out.proposal != Some((1, 1)) {
            continue;
        }
        delta = out.delta;
        trials += 1;
        accepted += usize::from(out.accepted);
    }
    let p = (-delta).exp();
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    let freq = accepted as f64 / trials as f64;
    outcome(
        delta > 0.0 && (freq - p).abs() <= 3.0 * sd,
        format!("delta {delta:.3}, expected {p:.4}, observed {freq:.4} over {trials} trials (3 sd = {:.4})", 3.0 * sd),
    )
}

fn metric_identities() -> Outcome {
    let mut bad = Vec::new();
    for script in scenario_suite() {
        let d = generate(&script, 5).unwrap();
        let r = evaluate(&d, &truth_as_solution(&d).unwrap(), Normalization::Mean).unwrap();
        let v = [r.grouping_precision, r.grouping_recall, r.grouping_f, r.event_accuracy, r.role_accuracy];
        if v != [1.0; 5] {
            bad.push(script.name.clone());
        }
    }
    // two truth groups of two 4 s trajectories, everyone predicted together
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let vocab = Vocabulary::new(s(&["E0", "E1"]), s(&["R0", "R1"]), s(&["P"]), s(&["S"])).unwrap();
    let traj = |id: &str, role| {
        Trajectory::new(id, vec![Sample::new(0.0, 0.0, 0.0), Sample::new(4.0, 1.0, 0.0)], Some(role)).unwrap()
    };
    let group = |m: &[&str], event| TruthGroup { members: s(m), event, interval: (0.0, 4.0), phases: vec![] };
    let d = Dataset::new(
        vocab,
        SceneModel::default(),
        vec![traj("a", 0), traj("b", 1), traj("c", 0), traj("d", 1)],
        Some(vec![group(&["a", "b"], 0), group(&["c", "d"], 1)]),
    )
    .unwrap();
    let pred = Solution {
        groups: vec![SolvedGroup {
            members: s(&["a", "b", "c", "d"]),
            parse: ParseGraph {
                event: 0,
                extent: (0.0, 4.0),
                segmentation: vec![],
                roles: [("a", 0), ("b", 1), ("c", 0), ("d", 1)].map(|(k, v)| (k.to_string(), v)).into(),
            },
        }],
        energy: 0.0,
        breakdown: None,
        trace: vec![],
        seed: None,
    };
    let r = evaluate(&d, &pred, Normalization::Mean).unwrap();
    let toy = r.grouping_precision == 1.0
        && r.grouping_recall == 0.5
        && (r.grouping_f - 2.0 / 3.0).abs() < 1e-12
        && r.event_accuracy == 0.5;
    if !toy {
        bad.push(format!("toy {r:?}"));
    }
    let n = scenario_suite().len();
    outcome(bad.is_empty(), if bad.is_empty() { format!("{n} scenarios and the 2-group toy") } else { bad.join("; ") })
}

fn run_cli(args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_stparse")).args(args).env_remove("STPARSE_SEED").output().unwrap();
    if !out.status.success() {
        eprintln!("stparse {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut ok = true;
    let mut train_args = vec!["train".to_string()];
    for (i, s) in composition_scripts().iter().enumerate() {
        let out = p(&format!("train{i}.json"));
        ok &= run_cli(&["synth", "--builtin", &s.name, "--out", &out, "--seed", &(10 + i).to_string()]);
        train_args.extend(["--data".to_string(), out]);
    }
    ok &= run_cli(&["synth", "--builtin", &composition_scripts()[2].name, "--out", &p("test.json"), "--seed", "99"]);
    let same = |a: &str, b: &str| std::fs::read(a).ok().is_some_and(|x| std::fs::read(b).ok() == Some(x));
    let mut detail = Vec::new();
    for (i, model) in [p("m1.json"), p("m2.json")].iter().enumerate() {
        let mut args: Vec<&str> = train_args.iter().map(String::as_str).collect();
        args.extend(["--out", model, "--seed", "3"]);
        ok &= run_cli(&args);
        let sol = p(&format!("s{}.json", i + 1));
        ok &= run_cli(&["infer", "--data", &p("test.json"), "--model", model, "--out", &sol, "--seed", "4"]);
    }
    let models = same(&p("m1.json"), &p("m2.json"));
    let solutions = same(&p("s1.json"), &p("s2.json"));
    detail.push(format!("models identical: {models}, solutions identical: {solutions}"));
    let solutions_cross = {
        // the second solution also matches a run against the first model
        ok &= run_cli(&["infer", "--data", &p("test.json"), "--model", &p("m1.json"), "--out", &p("s3.json"), "--seed", "4"]);
        same(&p("s1.json"), &p("s3.json"))
    };
    outcome(ok && models && solutions && solutions_cross && Path::new(&p("s1.json")).exists(), detail.join("; "))
}

fn monotone_traces(runs: &[&Recovery]) -> Outcome {
    let traces: Vec<&Vec<f64>> = runs.iter().flat_map(|r| r.traces.iter()).collect();
    let bad = traces.iter().filter(|t| t.is_empty() || t.windows(2).any(|w| w[1] > w[0])).count();
    outcome(bad == 0, format!("{} infer runs, {bad} with a rising trace", traces.len()))
}

fn main() -> ExitCode {
    let report = |n: usize, name: &str, o: &Outcome| {
        println!("criterion {n} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        o.pass
    };
    let mut all = true;
    all &= report(1, "dp oracle", &dp_oracle());
    all &= report(2, "energy audit", &energy_audit());
    let clean = recovery(None);
    all &= report(3, "clean recovery", &clean_recovery(&clean));
    let noisy = recovery(Some(NoiseSpec { position_jitter: 2.0, break_prob: 0.1, id_switch_prob: 0.0 }));
    all &= report(4, "noise degradation", &noisy_recovery(&clean, &noisy));
    all &= report(5, "sub-event boundaries", &boundary_recovery(&clean.model));
    all &= report(6, "acceptance rate", &acceptance_rate());
    all &= report(7, "metric identities", &metric_identities());
    all &= report(8, "determinism", &cli_determinism());
    all &= report(9, "monotone trace", &monotone_traces(&[&clean, &noisy]));
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
