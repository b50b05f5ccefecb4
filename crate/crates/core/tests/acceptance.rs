//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test -p dqi-core --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use dqi_core::chase::NodeStatus;
use dqi_core::gen::{random_problem, reachability_problem, rng, Digraph, GenConfig, Problem, Shape};
use dqi_core::hom::instance_maps_into;
use dqi_core::oracle::oracle_nqi_adom;
use dqi_core::reductions::disj_to_constants_instance;
use dqi_core::*;
use rand::Rng;

/// Witness-bearing verdicts gathered across all criteria.
#[derive(Default)]
struct Audit {
    checked: usize,
    failures: Vec<String>,
}

impl Audit {
    fn record(
        &mut self,
        label: &str,
        kind: WitnessKind,
        q: &UnionQuery,
        c: &ConstraintSet,
        s: &Schema,
        v: &Instance,
        verdict: &Verdict,
    ) {
        if let Some(w) = verdict.witness_instance() {
            self.checked += 1;
            if let Err(e) = validate_witness(kind, q, c, s, v, w) {
                self.failures.push(format!("{label}: {e}"));
            }
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn budget() -> ChaseBudget {
    ChaseBudget::default()
}

fn crit1(audit: &mut Audit) -> Outcome {
    let f = common::fixture("medical.dqi");
    let q = f.query("Q").unwrap();
    let s = &f.schema;
    let c = &f.constraints;
    let empty = f.instance("Empty").unwrap();
    let smith = f.instance("Smith").unwrap();
    let n = nqi(q, c, s, empty, budget()).unwrap();
    let p = pqi(q, c, s, smith, budget()).unwrap();
    audit.record("E1 nqi", WitnessKind::Nqi, q, c, s, empty, &n);
    audit.record("E1 pqi", WitnessKind::Pqi, q, c, s, smith, &p);
    let exact = matches!(n.certificate, Some(Certificate::ClassExact(_)));
    let valid = p
        .witness_instance()
        .is_some_and(|w| validate_witness(WitnessKind::Pqi, q, c, s, smith, w).is_ok());
    Outcome {
        pass: n.is_true() && exact && p.is_false() && valid,
        detail: format!("nqi(empty)={} [{}], pqi(Smith)={} witness_valid={valid}", n.value, n.method, p.value),
    }
}

fn crit2(audit: &mut Audit) -> Outcome {
    let f = common::fixture("psbvscertain.dqi");
    let q = f.query("Q").unwrap();
    let v = f.instance("V").unwrap();
    let p = pqi(q, &f.constraints, &f.schema, v, budget()).unwrap();
    let o = owq(q, &f.constraints, v, budget()).unwrap();
    audit.record("E2 owq", WitnessKind::Owq, q, &f.constraints, &f.schema, v, &o);
    Outcome {
        pass: p.is_true() && o.is_false(),
        detail: format!("pqi={} owq={}", p.value, o.value),
    }
}

fn crit3(audit: &mut Audit) -> Outcome {
    let f = common::fixture("adom.dqi");
    let q = f.query("Q").unwrap();
    let v = f.instance("V").unwrap();
    let (c, s) = (&f.constraints, &f.schema);
    let n = nqi(q, c, s, v, budget()).unwrap();
    audit.record("E3 nqi", WitnessKind::Nqi, q, c, s, v, &n);
    let shape_ok = n.witness_instance().is_some_and(|w| {
        let r: Vec<_> = w.tuples("R").map(|t| t.iter().cloned().collect()).unwrap_or_default();
        w.len() == 2
            && w.contains(&Fact::consts("S", &["a"]))
            && r.len() == 1
            && r[0][0] == Value::constant("a")
            && r[0][1] != Value::constant("a")
    });
    let plain = oracle_nqi(q, c, s, v, &DomainBound::new(0)).unwrap();
    let rewritten = oracle_nqi_adom(q, c, s, v).unwrap();
    Outcome {
        pass: n.is_false() && shape_ok && plain.witness.is_none() && rewritten.witness.is_some(),
        detail: format!(
            "nqi={} witness_shape={shape_ok} oracle_k0_plain={} oracle_k0_rewritten={}",
            n.value,
            if plain.witness.is_some() { "witness" } else { "none" },
            if rewritten.witness.is_some() { "witness" } else { "none" },
        ),
    }
}

fn crit4(_audit: &mut Audit) -> Outcome {
    let cfg = GenConfig {
        shape: Shape::Id,
        query_constants: 0.2,
        nullary: true,
        ..GenConfig::default()
    };
    let mut agree = 0;
    let mut first_bad = None;
    for seed in 0..200u64 {
        let p = random_problem(&mut rng(seed), &cfg);
        let g = nqi_via_gfp(&p.query, &p.constraints, &p.schema, &p.instance).unwrap();
        let o = oracle_nqi(&p.query, &p.constraints, &p.schema, &p.instance, &DomainBound::new(0)).unwrap();
        if g == o.answer {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(seed);
        }
    }
    Outcome {
        pass: agree == 200,
        detail: format!("{agree}/200 agree{}", first_bad.map_or(String::new(), |s| format!(", first mismatch seed {s}"))),
    }
}

/// Breadth-first reachability over an edge list.
fn bfs_reaches(g: &Digraph, s: usize, t: usize) -> bool {
    let mut seen = vec![false; g.nodes];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        if u == t {
            return true;
        }
        for &(a, b) in &g.edges {
            if a == u && !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    false
}

fn crit5(audit: &mut Audit) -> Outcome {
    let mut agree = 0;
    let mut reachable = 0;
    for seed in 0..50u64 {
        let mut r = rng(5_000 + seed);
        let g = Digraph::random(&mut r, 8, 0.15);
        let (s0, t0) = (r.random_range(0..g.nodes), r.random_range(0..g.nodes));
        let p = reachability_problem(&g, s0, t0);
        let v = nqi(&p.query, &p.constraints, &p.schema, &p.instance, budget()).unwrap();
        audit.record("reachability", WitnessKind::Nqi, &p.query, &p.constraints, &p.schema, &p.instance, &v);
        let reach = bfs_reaches(&g, s0, t0);
        reachable += usize::from(reach);
        if v.as_bool() == Some(!reach) {
            agree += 1;
        }
    }
    Outcome {
        pass: agree == 50,
        detail: format!("{agree}/50 agree ({reachable} reachable)"),
    }
}

fn linear_cfg() -> GenConfig {
    GenConfig {
        shape: Shape::Linear,
        ..GenConfig::default()
    }
}

fn crit6(audit: &mut Audit) -> Outcome {
    let a = Value::constant("a");
    let mut ok_exists = 0;
    let mut ok_oracle = 0;
    for seed in 0..50u64 {
        let p = random_problem(&mut rng(6_000 + seed), &linear_cfg());
        let (q, c, s) = (&p.query, &p.constraints, &p.schema);
        let crit = critical_instance(s, &a);
        let e = exists_pqi(q, c, s, budget()).unwrap();
        let on_crit = pqi(q, c, s, &crit, budget()).unwrap();
        audit.record("critical pqi", WitnessKind::Pqi, q, c, s, &crit, &on_crit);
        if e.as_bool().is_some() && e.as_bool() == on_crit.as_bool() {
            ok_exists += 1;
        }
        let d = decide_pqi_critical_linear(q, c, s, &a).unwrap();
        let o = oracle_pqi(q, c, s, &crit, &DomainBound::new(1)).unwrap();
        if d == o.answer {
            ok_oracle += 1;
        }
    }
    Outcome {
        pass: ok_exists == 50 && ok_oracle == 50,
        detail: format!("exists_pqi=pqi(critical) {ok_exists}/50, fact-type=oracle(k=1) {ok_oracle}/50"),
    }
}

fn connected_cfg() -> GenConfig {
    GenConfig {
        shape: Shape::Connected,
        connected_query: true,
        ..GenConfig::default()
    }
}

fn crit7(audit: &mut Audit) -> Outcome {
    let mut agree = 0;
    for seed in 0..50u64 {
        let p = random_problem(&mut rng(7_000 + seed), &connected_cfg());
        let (q, c, s) = (&p.query, &p.constraints, &p.schema);
        let e = exists_nqi(q, c, s, budget()).unwrap();
        let empty = Instance::new();
        let n = nqi(q, c, s, &empty, budget()).unwrap();
        audit.record("empty nqi", WitnessKind::Nqi, q, c, s, &empty, &n);
        let red = exists_nqi_to_owq(&ProblemInstance::exists_nqi(q.clone(), c.clone(), s.clone())).unwrap();
        let o = owq(&red.q(), &red.constraints, &red.inst(), budget()).unwrap();
        audit.record("owq", WitnessKind::Owq, &red.q(), &red.constraints, &red.schema, &red.inst(), &o);
        if e.as_bool().is_some() && e.as_bool() == n.as_bool() && n.as_bool() == o.as_bool() {
            agree += 1;
        }
    }
    Outcome {
        pass: agree == 50,
        detail: format!("{agree}/50 agree"),
    }
}

/// Differential runner: draws problems until `need` of them are decided on both sides.
struct Suite {
    name: &'static str,
    decided: usize,
    agree: usize,
    skipped: usize,
}

impl Suite {
    fn run(
        name: &'static str,
        need: usize,
        mut draw: impl FnMut(u64) -> Option<(Option<bool>, Option<bool>)>,
    ) -> Suite {
        let mut s = Suite { name, decided: 0, agree: 0, skipped: 0 };
        let mut seed = 0;
        while s.decided < need && seed < 20 * need as u64 {
            match draw(seed) {
                Some((Some(a), Some(b))) => {
                    s.decided += 1;
                    s.agree += usize::from(a == b);
                }
                _ => s.skipped += 1,
            }
            seed += 1;
        }
        s
    }

    fn ok(&self, need: usize) -> bool {
        self.decided >= need && self.agree == self.decided
    }
}

fn drawn(seed: u64, base: u64, cfg: &GenConfig) -> Problem {
    random_problem(&mut rng(base + seed), cfg)
}

fn crit8(audit: &mut Audit) -> Outcome {
    const NEED: usize = 50;
    let b = budget();
    let mut suites = Vec::new();
    let mut ratio: f64 = 0.0;

    let ucq = GenConfig { query_disjuncts: 2, ..linear_cfg() };
    suites.push(Suite::run("ucq_to_cq", NEED, |seed| {
        let p = drawn(seed, 80_000, &ucq);
        let input = ProblemInstance::pqi(p.query, p.constraints, p.schema, p.instance);
        let out = ucq_to_cq(&input).ok()?;
        ratio = ratio.max(out.size() as f64 / input.size() as f64);
        let a = pqi(&input.q(), &input.constraints, &input.schema, &input.inst(), b).ok()?;
        let o = pqi(&out.q(), &out.constraints, &out.schema, &out.inst(), b).ok()?;
        audit.record("ucq_to_cq", WitnessKind::Pqi, &out.q(), &out.constraints, &out.schema, &out.inst(), &o);
        Some((a.as_bool(), o.as_bool()))
    }));

    let disj = GenConfig { disjunctive: true, ..linear_cfg() };
    suites.push(Suite::run("disj_to_constants", NEED, |seed| {
        let p = drawn(seed, 81_000, &disj);
        let input = ProblemInstance::exists_pqi(p.query, p.constraints, p.schema);
        let out = disj_to_constants(&input).ok()?;
        let crit = critical_instance(&input.schema, &Value::constant("a"));
        let a = match exists_pqi(&input.q(), &input.constraints, &input.schema, b) {
            Ok(a) => a,
            Err(_) => pqi(&input.q(), &input.constraints, &input.schema, &crit, b).ok()?,
        };
        let v = disj_to_constants_instance(&out, &crit);
        let o = pqi(&out.q(), &out.constraints, &out.schema, &v, b).ok()?;
        audit.record("disj_to_constants", WitnessKind::Pqi, &out.q(), &out.constraints, &out.schema, &v, &o);
        Some((a.as_bool(), o.as_bool()))
    }));

    let general = GenConfig { shape: Shape::General, ..GenConfig::default() };
    suites.push(Suite::run("pqi_to_nqi", NEED, |seed| {
        let p = drawn(seed, 82_000, &general);
        let input = ProblemInstance::pqi(p.query, p.constraints, p.schema, p.instance);
        let out = pqi_to_nqi(&input, seed % 2 == 1).ok()?;
        let a = pqi(&input.q(), &input.constraints, &input.schema, &input.inst(), b).ok()?;
        let o = nqi(&out.q(), &out.constraints, &out.schema, &out.inst(), b).ok()?;
        audit.record("pqi_to_nqi", WitnessKind::Nqi, &out.q(), &out.constraints, &out.schema, &out.inst(), &o);
        Some((a.as_bool(), o.as_bool()))
    }));

    let owq_input = |seed: u64, base: u64| -> Option<ProblemInstance> {
        let p = drawn(seed, base, &GenConfig { shape: Shape::General, ..GenConfig::default() });
        let s = p.schema.all_hidden();
        let mut r = rng(base + 500 + seed);
        let mut i = Instance::new();
        let rels: Vec<_> = s.relations().cloned().collect();
        for _ in 0..r.random_range(0..=3) {
            let d = &rels[r.random_range(0..rels.len())];
            let args = (0..d.arity).map(|_| Value::constant(&format!("c{}", r.random_range(0..3)))).collect();
            i.insert(Fact::new(&d.name, args));
        }
        ProblemInstance::owq(p.query, p.constraints, i).ok()
    };
    suites.push(Suite::run("owq_to_pqi", NEED, |seed| {
        let input = owq_input(seed, 83_000)?;
        let out = owq_to_pqi(&input).ok()?;
        let a = owq(&input.q(), &input.constraints, &input.inst(), b).ok()?;
        let o = pqi(&out.q(), &out.constraints, &out.schema, &out.inst(), b).ok()?;
        audit.record("owq_to_pqi", WitnessKind::Pqi, &out.q(), &out.constraints, &out.schema, &out.inst(), &o);
        Some((a.as_bool(), o.as_bool()))
    }));

    suites.push(Suite::run("owq_to_exists_pqi", NEED, |seed| {
        let input = owq_input(seed, 84_000)?;
        let out = owq_to_exists_pqi(&input).ok()?;
        let a = owq(&input.q(), &input.constraints, &input.inst(), b).ok()?;
        let o = exists_pqi(&out.q(), &out.constraints, &out.schema, b).ok()?;
        Some((a.as_bool(), o.as_bool()))
    }));

    suites.push(Suite::run("nqi_to_realizability", NEED, |seed| {
        let p = drawn(seed, 85_000, &general);
        let input = ProblemInstance::nqi(p.query, p.constraints, p.schema, p.instance);
        let out = nqi_to_realizability(&input).ok()?;
        let a = nqi(&input.q(), &input.constraints, &input.schema, &input.inst(), b).ok()?;
        let o = realizable(&out.constraints, &out.schema, &out.inst(), b).ok()?;
        let never = UnionQuery::new(Vec::new());
        audit.record("nqi_to_realizability", WitnessKind::Realizable, &never, &out.constraints, &out.schema, &out.inst(), &o);
        Some((a.as_bool(), o.as_bool().map(|x| !x)))
    }));

    let small = GenConfig { shape: Shape::General, egds: true, max_facts: 3, ..GenConfig::default() };
    suites.push(Suite::run("realizability_to_nqi", NEED, |seed| {
        let p = drawn(seed, 86_000, &small);
        let input = ProblemInstance::realizability(p.constraints, p.schema, p.instance);
        let out = realizability_to_nqi(&input).ok()?;
        let a = realizable(&input.constraints, &input.schema, &input.inst(), b).ok()?;
        let o = nqi(&out.q(), &out.constraints, &out.schema, &out.inst(), b).ok()?;
        audit.record("realizability_to_nqi", WitnessKind::Nqi, &out.q(), &out.constraints, &out.schema, &out.inst(), &o);
        Some((a.as_bool().map(|x| !x), o.as_bool()))
    }));

    suites.push(Suite::run("exists_nqi_to_owq", NEED, |seed| {
        let p = drawn(seed, 87_000, &connected_cfg());
        let input = ProblemInstance::exists_nqi(p.query, p.constraints, p.schema);
        let out = exists_nqi_to_owq(&input).ok()?;
        let a = exists_nqi(&input.q(), &input.constraints, &input.schema, b).ok()?;
        let o = owq(&out.q(), &out.constraints, &out.inst(), b).ok()?;
        Some((a.as_bool(), o.as_bool()))
    }));

    const SIZE_FACTOR: f64 = 6.0;
    let all_ok = suites.iter().all(|s| s.ok(NEED)) && ratio <= SIZE_FACTOR;
    let mut detail: Vec<String> = suites
        .iter()
        .map(|s| format!("{} {}/{} (skipped {})", s.name, s.agree, s.decided, s.skipped))
        .collect();
    detail.push(format!("ucq_to_cq size ratio {ratio:.2} <= {SIZE_FACTOR}"));
    Outcome {
        pass: all_ok,
        detail: detail.join("; "),
    }
}

fn crit9(_audit: &mut Audit) -> Outcome {
    let cfg = GenConfig {
        shape: Shape::General,
        disjunctive: true,
        ..GenConfig::default()
    };
    let mut checked = 0;
    let mut ok = 0;
    let mut seed = 0u64;
    while checked < 30 && seed < 1_000 {
        let p = random_problem(&mut rng(9_000 + seed), &cfg);
        seed += 1;
        let bound = DomainBound::new(1).with_max_nodes(200_000);
        let Ok(ans) = oracle_realizable(&p.constraints, &p.schema, &p.instance, &bound) else {
            continue;
        };
        let Some(f) = ans.witness else { continue };
        checked += 1;
        let tree = visible_chase(&p.constraints, &p.schema, &p.instance, budget());
        let maps = tree
            .nodes
            .iter()
            .filter(|n| n.status != NodeStatus::Internal && n.status != NodeStatus::Dummy)
            .any(|n| instance_maps_into(&n.instance, &f));
        ok += usize::from(maps);
    }
    Outcome {
        pass: checked == 30 && ok == 30,
        detail: format!("{ok}/{checked} witnesses receive a terminal chase node"),
    }
}

#[test]
fn acceptance() {
    type Criterion = fn(&mut Audit) -> Outcome;
    let criteria: [(&str, Criterion, Duration); 9] = [
        ("E1 medical fixture", crit1, Duration::from_secs(1)),
        ("E2 positive implication vs certain answers", crit2, Duration::from_secs(1)),
        ("E3 active-domain rewriting", crit3, Duration::from_secs(60)),
        ("GFP vs oracle on 200 ID problems", crit4, Duration::from_secs(120)),
        ("reachability family on 50 digraphs", crit5, Duration::from_secs(60)),
        ("critical-instance collapse on 50 linear problems", crit6, Duration::from_secs(300)),
        ("empty-instance collapse on 50 connected problems", crit7, Duration::from_secs(300)),
        ("reduction differential suites", crit8, Duration::from_secs(600)),
        ("chase universality on 30 witnesses", crit9, Duration::from_secs(300)),
    ];
    let mut audit = Audit::default();
    let mut failed = Vec::new();
    let only: Option<usize> = std::env::var("ACCEPT_ONLY").ok().and_then(|v| v.parse().ok());
    for (i, (label, run, limit)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t = Instant::now();
        let out = run(&mut audit);
        let el = t.elapsed();
        let pass = out.pass && el <= *limit;
        println!(
            "[{}] {:>2}. {label}: {} ({:.2?}, limit {:?})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            el,
            limit
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    let pass = audit.failures.is_empty() && audit.checked > 0;
    println!(
        "[{}] 10. witness audit: {} witnesses re-validated, {} failures{}",
        if pass { "PASS" } else { "FAIL" },
        audit.checked,
        audit.failures.len(),
        audit.failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
    );
    if !pass {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
