//! `dqi`: command-line front end for disclosure analysis over `.dqi` problem files.
//!
//! Exit status: 0 true, 1 false, 2 unknown, 3 usage or class error.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dqi_core::chase::{chase_vis_critical_tree, classical_chase_tree, trace_tsv, ChaseTree, ClassicalOutcome, CriticalOutcome};
use dqi_core::deciders::critical_value;
use dqi_core::gen::{random_problem, rng, GenConfig, Shape};
use dqi_core::gfp::{fixpoint_projection, nqi_via_gfp_run};
use dqi_core::oracle::oracle_owq;
use dqi_core::*;
use serde_json::json;

use report::{answer_name, budget_json, error_json, exit_code, facts_json, stats_json, RunReport};

const AFTER_HELP: &str = "Exit status: 0 true, 1 false, 2 unknown, 3 usage or class error.\n\
Chase budget defaults: 10000 nodes, 2000 facts per instance, depth 200.";

#[derive(Parser)]
#[command(name = "dqi", version, about = "Decide what visible relations disclose about hidden ones", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide one problem on a visible instance.
    Check {
        problem: CheckKind,
        #[command(flatten)]
        io: ProblemArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Decide whether some visible instance exhibits an implication.
    Exists {
        problem: Polarity,
        #[command(flatten)]
        io: ProblemArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Apply a reduction and write the resulting problem file.
    Reduce {
        reduction: Reduction,
        #[command(flatten)]
        io: ProblemArgs,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Connected variant of pqi2nqi.
        #[arg(long)]
        connected: bool,
    },
    /// Emit a first-order formula that is unsatisfiable iff the implication holds.
    Emit {
        #[command(subcommand)]
        what: EmitCommand,
    },
    /// Run the bounded brute-force oracle.
    Oracle {
        problem: CheckKind,
        #[command(flatten)]
        io: ProblemArgs,
        /// Fresh values added to the domain.
        #[arg(long, default_value_t = 1)]
        extra_values: usize,
        /// Largest number of hidden facts added.
        #[arg(long)]
        max_facts: Option<usize>,
        /// Search node limit.
        #[arg(long)]
        max_nodes: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a chase and report its outcome.
    Chase {
        variant: ChaseVariant,
        #[command(flatten)]
        io: ProblemArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write the step trace (TSV) to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build or evaluate the greatest-fixpoint Datalog program for negative implication.
    Gfp {
        action: GfpAction,
        #[command(flatten)]
        io: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Generate a random problem file.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GenShape::Id)]
        shape: GenShape,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EmitCommand {
    /// Guarded-negation first-order text.
    Gnfo {
        problem: Polarity,
        #[command(flatten)]
        io: ProblemArgs,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file.
    #[arg(long)]
    file: PathBuf,
    /// Query name (first Boolean query when absent).
    #[arg(long)]
    query: Option<String>,
    /// Instance name (first instance when absent; empty if the file has none).
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Chase node limit.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Fact limit per chase instance.
    #[arg(long, default_value_t = 2_000)]
    max_chase_facts: usize,
    /// Chase depth limit.
    #[arg(long, default_value_t = 200)]
    max_depth: usize,
}

impl BudgetArgs {
    fn get(&self) -> ChaseBudget {
        ChaseBudget {
            max_nodes: self.budget,
            max_facts: self.max_chase_facts,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Print a JSON run report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Pqi,
    Nqi,
    Realizable,
    Owq,
}

#[derive(Clone, Copy, ValueEnum)]
enum Polarity {
    Pqi,
    Nqi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reduction {
    Ucq2cq,
    Disj2const,
    Pqi2nqi,
    Owq2pqi,
    Owq2epqi,
    Nqi2real,
    Real2nqi,
    Ensb2owq,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChaseVariant {
    Classical,
    Visible,
    Critical,
}

#[derive(Clone, Copy, ValueEnum)]
enum GfpAction {
    Build,
    Eval,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenShape {
    Id,
    Linear,
    Connected,
    General,
}

/// Result of a command: exit status plus what to print.
struct Outcome {
    code: u8,
    text: String,
    json: serde_json::Value,
}

fn load(path: &Path) -> Result<ProblemFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Unsupported(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Unsupported(format!("cannot write {}: {e}", path.display())))
}

fn problem(kind: ProblemKind, io: &ProblemArgs) -> Result<ProblemInstance> {
    let f = load(&io.file)?;
    ProblemInstance::from_file(kind, &f, io.query.as_deref(), io.instance.as_deref())
}

fn check_kind(k: CheckKind) -> ProblemKind {
    match k {
        CheckKind::Pqi => ProblemKind::Pqi,
        CheckKind::Nqi => ProblemKind::Nqi,
        CheckKind::Realizable => ProblemKind::Realizability,
        CheckKind::Owq => ProblemKind::Owq,
    }
}

fn verdict_text(v: &Verdict) -> String {
    let mut out = match &v.value {
        Answer::Unknown(r) => format!("unknown ({r})"),
        a => answer_name(a).to_string(),
    };
    out.push_str(&format!("\nmethod: {}", v.method));
    if let Some(w) = v.witness_instance() {
        out.push_str("\nwitness:");
        for f in w.facts() {
            out.push_str(&format!("\n  {}", textio::format_fact(&f)));
        }
    }
    out
}

fn from_verdict(argv: &[String], v: &Verdict, b: &ChaseBudget, t: Instant) -> Outcome {
    let r = RunReport::from_verdict(argv.to_vec(), v, b, t.elapsed());
    Outcome {
        code: exit_code(&v.value) as u8,
        text: verdict_text(v),
        json: r.to_json(),
    }
}

fn done(argv: &[String], t: Instant, text: String, extra: serde_json::Value) -> Outcome {
    let mut j = json!({
        "command": argv,
        "verdict": "true",
        "exit_code": 0,
        "exact": true,
        "wall_time_ms": t.elapsed().as_secs_f64() * 1000.0,
    });
    if let (Some(m), serde_json::Value::Object(e)) = (j.as_object_mut(), extra) {
        m.extend(e);
    }
    Outcome { code: 0, text, json: j }
}

fn run(cmd: &Command, argv: &[String], t: Instant) -> Result<Outcome> {
    match cmd {
        Command::Check { problem: k, io, budget, .. } => {
            let p = problem(check_kind(*k), io)?;
            let b = budget.get();
            let (q, c, s, v) = (p.q(), &p.constraints, &p.schema, p.inst());
            let verdict = match k {
                CheckKind::Pqi => pqi(&q, c, s, &v, b)?,
                CheckKind::Nqi => nqi(&q, c, s, &v, b)?,
                CheckKind::Realizable => realizable(c, s, &v, b)?,
                CheckKind::Owq => owq(&q, c, &v, b)?,
            };
            Ok(from_verdict(argv, &verdict, &b, t))
        }
        Command::Exists { problem: k, io, budget, .. } => {
            let kind = match k {
                Polarity::Pqi => ProblemKind::ExistsPqi,
                Polarity::Nqi => ProblemKind::ExistsNqi,
            };
            let p = problem(kind, io)?;
            let b = budget.get();
            let verdict = match k {
                Polarity::Pqi => exists_pqi(&p.q(), &p.constraints, &p.schema, b)?,
                Polarity::Nqi => exists_nqi(&p.q(), &p.constraints, &p.schema, b)?,
            };
            Ok(from_verdict(argv, &verdict, &b, t))
        }
        Command::Reduce { reduction, io, out, connected } => {
            let kind = match reduction {
                Reduction::Ucq2cq | Reduction::Pqi2nqi => ProblemKind::Pqi,
                Reduction::Disj2const => ProblemKind::ExistsPqi,
                Reduction::Owq2pqi | Reduction::Owq2epqi => ProblemKind::Owq,
                Reduction::Nqi2real => ProblemKind::Nqi,
                Reduction::Real2nqi => ProblemKind::Realizability,
                Reduction::Ensb2owq => ProblemKind::ExistsNqi,
            };
            let p = problem(kind, io)?;
            let r = match reduction {
                Reduction::Ucq2cq => ucq_to_cq(&p)?,
                Reduction::Disj2const => disj_to_constants(&p)?,
                Reduction::Pqi2nqi => pqi_to_nqi(&p, *connected)?,
                Reduction::Owq2pqi => owq_to_pqi(&p)?,
                Reduction::Owq2epqi => owq_to_exists_pqi(&p)?,
                Reduction::Nqi2real => nqi_to_realizability(&p)?,
                Reduction::Real2nqi => realizability_to_nqi(&p)?,
                Reduction::Ensb2owq => exists_nqi_to_owq(&p)?,
            };
            write(out, &serialize(&r.to_file()))?;
            let text = format!(
                "wrote {} problem to {} (size {} -> {})",
                r.kind,
                out.display(),
                p.size(),
                r.size()
            );
            Ok(done(
                argv,
                t,
                text,
                json!({"output": out.display().to_string(), "kind": r.kind.to_string(), "input_size": p.size(), "output_size": r.size()}),
            ))
        }
        Command::Emit { what: EmitCommand::Gnfo { problem: k, io, out } } => {
            let (kind, ik) = match k {
                Polarity::Pqi => (ProblemKind::Pqi, ImplicationKind::Pqi),
                Polarity::Nqi => (ProblemKind::Nqi, ImplicationKind::Nqi),
            };
            let p = problem(kind, io)?;
            let text = emit_gnfo(ik, &p.q(), &p.constraints, &p.schema, &p.inst())?;
            match out {
                Some(path) => {
                    write(path, &text)?;
                    Ok(done(argv, t, format!("wrote {}", path.display()), json!({"output": path.display().to_string()})))
                }
                None => Ok(done(argv, t, text.trim_end().to_string(), json!({}))),
            }
        }
        Command::Oracle { problem: k, io, extra_values, max_facts, max_nodes, .. } => {
            let p = problem(check_kind(*k), io)?;
            let mut d = DomainBound::new(*extra_values);
            if let Some(m) = max_facts {
                d = d.with_max_facts(*m);
            }
            if let Some(n) = max_nodes {
                d = d.with_max_nodes(*n);
            }
            let (q, c, s, v) = (p.q(), &p.constraints, &p.schema, p.inst());
            let a = match k {
                CheckKind::Pqi => oracle_pqi(&q, c, s, &v, &d)?,
                CheckKind::Nqi => oracle_nqi(&q, c, s, &v, &d)?,
                CheckKind::Realizable => oracle_realizable(c, s, &v, &d)?,
                CheckKind::Owq => oracle_owq(&q, c, &v, &d)?,
            };
            let exact = a.exactness == Exactness::ExactForClass;
            let value = Answer::from(a.answer);
            let mut text = format!("{} ({})", answer_name(&value), if exact { "exact" } else { "bounded" });
            if let Some(w) = &a.witness {
                text.push_str("\nwitness:");
                for f in w.facts() {
                    text.push_str(&format!("\n  {}", textio::format_fact(&f)));
                }
            }
            let json = json!({
                "command": argv,
                "verdict": answer_name(&value),
                "exit_code": exit_code(&value),
                "exact": exact,
                "method": "oracle",
                "reason": serde_json::Value::Null,
                "certificate": a.witness.as_ref().map(|w| json!({"kind": "witness", "facts": facts_json(w)})),
                "budget": {"extra_values": extra_values, "max_facts": max_facts, "max_nodes": max_nodes},
                "consumed": {"search_nodes": a.explored},
                "wall_time_ms": t.elapsed().as_secs_f64() * 1000.0,
            });
            Ok(Outcome { code: exit_code(&value) as u8, text, json })
        }
        Command::Chase { variant, io, budget, trace, .. } => {
            let p = problem(ProblemKind::Realizability, io)?;
            let b = budget.get();
            let (c, s, v) = (&p.constraints, &p.schema, p.inst());
            let (status, result, tree): (&str, Option<Instance>, ChaseTree) = match variant {
                ChaseVariant::Classical => {
                    let (o, tree) = classical_chase_tree(&v, c, b)?;
                    match o {
                        ClassicalOutcome::Saturated(i) => ("saturated", Some(i), tree),
                        ClassicalOutcome::BudgetExceeded(i) => ("budget_exceeded", Some(i), tree),
                        ClassicalOutcome::EgdFailure => ("failed", None, tree),
                    }
                }
                ChaseVariant::Critical => {
                    let (o, tree) = chase_vis_critical_tree(c, s, &critical_value(), b)?;
                    match o {
                        CriticalOutcome::Saturated(i) => ("saturated", Some(i), tree),
                        CriticalOutcome::BudgetExceeded(i) => ("budget_exceeded", Some(i), tree),
                        CriticalOutcome::Failed(i) => ("failed", Some(i), tree),
                    }
                }
                ChaseVariant::Visible => {
                    let tree = visible_chase(c, s, &v, b);
                    let status = if tree.is_complete() { "complete" } else { "budget_exceeded" };
                    let leaf = tree.leaves().next().map(|n| n.instance.clone());
                    (status, leaf, tree)
                }
            };
            if let Some(path) = trace {
                write(path, &trace_tsv(&tree))?;
            }
            let code = if status == "budget_exceeded" { 2 } else { 0 };
            let verdict = if code == 0 { Answer::True } else { Answer::Unknown(status.into()) };
            let st = tree.stats();
            let mut text = format!(
                "{status}: {} nodes, {} leaves, {} failed, {} cut, depth {}",
                st.nodes, st.leaves, st.dummies, st.budget_cut, st.max_depth
            );
            if let Some(i) = &result {
                text.push_str("\ninstance:");
                for f in i.facts() {
                    text.push_str(&format!("\n  {}", textio::format_fact(&f)));
                }
            }
            let json = json!({
                "command": argv,
                "verdict": answer_name(&verdict),
                "exit_code": code,
                "exact": code == 0,
                "method": "chase",
                "reason": status,
                "certificate": result.as_ref().map(|i| json!({"kind": "instance", "facts": facts_json(i)})),
                "budget": budget_json(&b),
                "consumed": stats_json(&st),
                "wall_time_ms": t.elapsed().as_secs_f64() * 1000.0,
            });
            Ok(Outcome { code, text, json })
        }
        Command::Gfp { action, io, .. } => {
            let p = problem(ProblemKind::Nqi, io)?;
            let (q, c, s, v) = (p.q(), &p.constraints, &p.schema, p.inst());
            match action {
                GfpAction::Build => {
                    let prog = build_gfp_program(&q, c, s)?;
                    let text = prog.to_string();
                    Ok(done(argv, t, text.trim_end().to_string(), json!({"program": text})))
                }
                GfpAction::Eval => {
                    let run = nqi_via_gfp_run(&q, c, s, &v)?;
                    let goal = run.goal && run.obligations_met;
                    let value = Answer::from(goal);
                    let hidden = fixpoint_projection(&run, s);
                    let mut text = format!(
                        "goal: {}\nnegative implication: {}\nroute: {:?}\nfixpoint:",
                        run.goal, run.nqi, run.route
                    );
                    for f in hidden.facts() {
                        text.push_str(&format!("\n  {}", textio::format_fact(&f)));
                    }
                    let json = json!({
                        "command": argv,
                        "verdict": answer_name(&value),
                        "exit_code": exit_code(&value),
                        "exact": true,
                        "method": format!("gfp-{:?}", run.route).to_lowercase(),
                        "reason": serde_json::Value::Null,
                        "certificate": {"kind": "fixpoint", "facts": facts_json(&hidden)},
                        "budget": serde_json::Value::Null,
                        "consumed": serde_json::Value::Null,
                        "wall_time_ms": t.elapsed().as_secs_f64() * 1000.0,
                    });
                    Ok(Outcome { code: exit_code(&value) as u8, text, json })
                }
            }
        }
        Command::Gen { seed, shape, out } => {
            let cfg = GenConfig {
                shape: match shape {
                    GenShape::Id => Shape::Id,
                    GenShape::Linear => Shape::Linear,
                    GenShape::Connected => Shape::Connected,
                    GenShape::General => Shape::General,
                },
                ..GenConfig::default()
            };
            let text = serialize(&random_problem(&mut rng(*seed), &cfg).to_file());
            match out {
                Some(path) => {
                    write(path, &text)?;
                    Ok(done(argv, t, format!("wrote {}", path.display()), json!({"output": path.display().to_string()})))
                }
                None => Ok(done(argv, t, text.trim_end().to_string(), json!({}))),
            }
        }
    }
}

fn wants_json(cmd: &Command) -> bool {
    match cmd {
        Command::Check { out, .. }
        | Command::Exists { out, .. }
        | Command::Oracle { out, .. }
        | Command::Chase { out, .. }
        | Command::Gfp { out, .. } => out.json,
        _ => false,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let t = Instant::now();
    let json = wants_json(&cli.command);
    match run(&cli.command, &argv, t) {
        Ok(o) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&o.json).expect("serializable"));
            } else {
                println!("{}", o.text);
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&error_json(argv, &e.to_string(), t.elapsed())).expect("serializable")
                );
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(3)
        }
    }
}
