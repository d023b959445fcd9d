//! Command-line front door: check assertions, localize faults, enumerate
//! instances. Exit codes: 0 no violation, 1 violation found/localized,
//! 2 input error, 3 internal error.

use clap::{Args, Parser, Subcommand};
use rml::ast::{CommandKind, Formula, Model, SourceSpan};
use rml::eval::{eval_formula, Binding};
use rml::frontend::load_model;
use rml::ground::ground;
use rml::instance::{Instance, InstanceJson};
use rml::localize::{
    localize, localize_fixture, RankedReport, Score, ScoredNode, Status, DEFAULT_MAX_PAIRS,
};
use rml::solve::{core_fact_conjuncts, GroundResult, GroundSolver};
use serde::Serialize;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rml", version, about = "Bounded analysis and fault localization for relational models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an assertion; print the first counterexample if one exists.
    Check(CheckArgs),
    /// Rank suspicious expressions for a failing assertion.
    Localize(LocalizeArgs),
    /// Enumerate instances satisfying the model (and a run predicate).
    Instances(InstancesArgs),
}

#[derive(Args)]
struct Common {
    /// Model file (.rml)
    input: String,
    /// Name of the check/run command to use (default: the only one)
    #[arg(long)]
    command: Option<String>,
    /// Override the command's scope
    #[arg(long)]
    scope: Option<u32>,
    /// JSON output instead of text
    #[arg(long)]
    json: bool,
    /// Write the ground CNF in DIMACS form to this path
    #[arg(long, value_name = "PATH")]
    emit_cnf: Option<String>,
    /// Seed for solver tie-breaking jitter
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LocalizeArgs {
    #[command(flatten)]
    common: Common,
    /// Counterexample / satisfying-instance pairs to generate
    #[arg(long, default_value_t = DEFAULT_MAX_PAIRS)]
    pairs: usize,
    /// Show only the N highest-ranked expressions
    #[arg(long)]
    top: Option<usize>,
    /// Skip solving: use these instance files as the single pair
    #[arg(long, num_args = 2, value_names = ["CEX", "SAT"])]
    fixture: Option<Vec<String>>,
}

#[derive(Args)]
struct InstancesArgs {
    #[command(flatten)]
    common: Common,
    /// Run a predicate by name instead of a `run` command
    #[arg(long)]
    pred: Option<String>,
    /// Maximum number of instances to emit
    #[arg(short = 'n', long, default_value_t = 10)]
    limit: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Localize(a) => cmd_localize(a),
        Cmd::Instances(a) => cmd_instances(a),
    };
    ExitCode::from(code)
}

fn fail(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    2
}

fn read_model(common: &Common) -> Result<Model, u8> {
    let source = std::fs::read_to_string(&common.input)
        .map_err(|e| fail(&format!("{}: {e}", common.input)))?;
    load_model(&common.input, &source).map_err(|diags| {
        for d in &diags {
            eprintln!("{d}");
        }
        2
    })
}

/// Pick the command of `kind` named by `--command`, or the only one.
fn pick_command<'a>(
    m: &'a Model,
    common: &Common,
    kind: CommandKind,
) -> Result<&'a rml::ast::Command, u8> {
    let matching: Vec<_> = m
        .commands
        .iter()
        .filter(|c| c.kind == kind && common.command.as_ref().is_none_or(|n| &c.target == n))
        .collect();
    let what = match kind {
        CommandKind::Check => "check",
        CommandKind::Run => "run",
    };
    match matching.as_slice() {
        [c] => Ok(c),
        [] => Err(fail(&format!("no matching {what} command in {}", common.input))),
        _ => Err(fail(&format!(
            "multiple {what} commands in {}; pick one with --command",
            common.input
        ))),
    }
}

fn cmd_check(a: CheckArgs) -> u8 {
    let m = match read_model(&a.common) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let cmd = match pick_command(&m, &a.common, CommandKind::Check) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let Some(p) = m.assert(&cmd.target) else {
        return fail(&format!("check command names unknown assertion `{}`", cmd.target));
    };
    let scope = a.common.scope.unwrap_or(cmd.scope);
    let gp = ground(&m, Some(p), true, scope);
    if let Some(path) = &a.common.emit_cnf {
        if let Err(e) = std::fs::write(path, gp.to_dimacs()) {
            return fail(&format!("{path}: {e}"));
        }
    }
    match GroundSolver::new(&gp, a.common.seed).solve() {
        GroundResult::Sat(inst) => {
            if a.common.json {
                println!("{}", serde_json::to_string_pretty(&inst.to_json()).unwrap());
            } else {
                println!("counterexample to {} at scope {scope}:", cmd.target);
                print!("{inst}");
            }
            1
        }
        GroundResult::Unsat(_) => {
            println!("no counterexample: {} holds at scope {scope}", cmd.target);
            0
        }
    }
}

fn load_fixture_instance(path: &str, m: &Model) -> Result<Instance, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(&format!("{path}: {e}")))?;
    let json: InstanceJson =
        serde_json::from_str(&text).map_err(|e| fail(&format!("{path}: {e}")))?;
    let inst = Instance::from_json(&json, m).map_err(|e| fail(&format!("{path}: {e}")))?;
    inst.check_wellformed(m).map_err(|e| fail(&format!("{path}: {e}")))?;
    Ok(inst)
}

/// Both fixture instances must satisfy the facts, and sit on opposite sides
/// of the property: the counterexample violates it, the reference satisfies
/// it.
fn validate_fixture(m: &Model, p: &Formula, cex: &Instance, sat: &Instance) -> Result<(), u8> {
    let b = Binding::new();
    for (name, inst, expect) in [("cex", cex, false), ("sat", sat, true)] {
        for c in &m.facts {
            if !eval_formula(&c.formula, inst, &b) {
                return Err(fail(&format!(
                    "{name} instance violates the fact at {}",
                    c.span
                )));
            }
        }
        if eval_formula(p, inst, &b) != expect {
            let side = if expect { "satisfy" } else { "violate" };
            return Err(fail(&format!("{name} instance must {side} the checked assertion")));
        }
    }
    Ok(())
}

fn cmd_localize(a: LocalizeArgs) -> u8 {
    if a.pairs == 0 {
        return fail("--pairs must be at least 1");
    }
    let m = match read_model(&a.common) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let cmd = match pick_command(&m, &a.common, CommandKind::Check) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let Some(p) = m.assert(&cmd.target) else {
        return fail(&format!("check command names unknown assertion `{}`", cmd.target));
    };
    let scope = a.common.scope.unwrap_or(cmd.scope);
    if let Some(path) = &a.common.emit_cnf {
        let gp = ground(&m, Some(p), true, scope);
        if let Err(e) = std::fs::write(path, gp.to_dimacs()) {
            return fail(&format!("{path}: {e}"));
        }
    }
    let report = if let Some(paths) = &a.fixture {
        let cex = match load_fixture_instance(&paths[0], &m) {
            Ok(i) => i,
            Err(code) => return code,
        };
        let sat = match load_fixture_instance(&paths[1], &m) {
            Ok(i) => i,
            Err(code) => return code,
        };
        if let Err(code) = validate_fixture(&m, p, &cex, &sat) {
            return code;
        }
        localize_fixture(&m, cex, sat)
    } else {
        match localize(&m, p, scope, a.pairs, a.common.seed) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return 3;
            }
        }
    };
    print_report(&report, &cmd.target, scope, a.top, a.common.json);
    match report.status {
        Status::NoCounterexample => 0,
        Status::Localized | Status::UnsatConflicts => 1,
    }
}

#[derive(Serialize)]
struct RatioJson {
    num: i64,
    den: i64,
}

impl From<Score> for RatioJson {
    fn from(r: Score) -> RatioJson {
        RatioJson { num: *r.numer(), den: *r.denom() }
    }
}

#[derive(Serialize)]
struct NodeJson<'a> {
    expr: &'a str,
    span: &'a SourceSpan,
    score: RatioJson,
    boolean: RatioJson,
    relational: RatioJson,
    hint: Option<&'a str>,
}

#[derive(Serialize)]
struct DiffJson<'a> {
    relations: Vec<&'a str>,
    atoms: Vec<&'a str>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    status: &'a str,
    pairs_used: usize,
    diff: DiffJson<'a>,
    ranking: Vec<NodeJson<'a>>,
}

fn score2(s: Score) -> String {
    format!("{:.2}", *s.numer() as f64 / *s.denom() as f64)
}

fn print_report(r: &RankedReport, assert_name: &str, scope: u32, top: Option<usize>, json: bool) {
    let cut = top.unwrap_or(r.nodes.len());
    let shown: Vec<&ScoredNode> = r.nodes.iter().take(cut).collect();
    if json {
        let report = ReportJson {
            status: r.status.as_str(),
            pairs_used: r.pairs_used,
            diff: DiffJson {
                relations: r.diff.relations.iter().map(String::as_str).collect(),
                atoms: r.diff.atoms.iter().map(String::as_str).collect(),
            },
            ranking: shown
                .iter()
                .map(|n| NodeJson {
                    expr: &n.text,
                    span: &n.span,
                    score: n.total.into(),
                    boolean: n.boolean.into(),
                    relational: n.relational.into(),
                    hint: n.operator_hint.as_deref(),
                })
                .collect(),
        };
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
        return;
    }
    match r.status {
        Status::NoCounterexample => {
            println!("no counterexample: {assert_name} holds at scope {scope}");
            return;
        }
        Status::Localized => {
            println!(
                "{} counterexample/satisfying pair{} analyzed",
                r.pairs_used,
                if r.pairs_used == 1 { "" } else { "s" }
            );
        }
        Status::UnsatConflicts => {
            println!("model is inconsistent with {assert_name}; conflicting expressions:");
        }
    }
    println!(
        "suspicious relations: {{{}}}  atoms: {{{}}}",
        r.diff.relations.iter().cloned().collect::<Vec<_>>().join(", "),
        r.diff.atoms.iter().cloned().collect::<Vec<_>>().join(", ")
    );
    let width = shown.iter().map(|n| n.text.len()).max().unwrap_or(0);
    for (i, n) in shown.iter().enumerate() {
        let hint = n
            .operator_hint
            .as_deref()
            .map(|h| format!("  check operator `{h}`"))
            .unwrap_or_default();
        println!(
            "{:>3}. {:width$}  {}  ({}:{}){hint}",
            i + 1,
            n.text,
            score2(n.total),
            n.span.start_line,
            n.span.start_col,
        );
    }
}

fn cmd_instances(a: InstancesArgs) -> u8 {
    let m = match read_model(&a.common) {
        Ok(m) => m,
        Err(code) => return code,
    };
    // the property is the named predicate's conjunction, if any
    let has_run = m.commands.iter().any(|c| c.kind == CommandKind::Run);
    let (pred_name, scope) = if let Some(name) = &a.pred {
        (Some(name.clone()), a.common.scope.unwrap_or(3))
    } else if !has_run && a.common.scope.is_some() {
        // no run command: enumerate instances of the facts alone
        (None, a.common.scope.unwrap())
    } else {
        match pick_command(&m, &a.common, CommandKind::Run) {
            Ok(cmd) => (
                (!cmd.target.is_empty()).then(|| cmd.target.clone()),
                a.common.scope.unwrap_or(cmd.scope),
            ),
            Err(code) => return code,
        }
    };
    let pred_formula;
    let property = match &pred_name {
        Some(name) => match m.pred(name) {
            Some(conjuncts) => {
                pred_formula = conjunction(conjuncts);
                Some(&pred_formula)
            }
            None => return fail(&format!("unknown predicate `{name}`")),
        },
        None => None,
    };
    let gp = ground(&m, property, false, scope);
    if let Some(path) = &a.common.emit_cnf {
        if let Err(e) = std::fs::write(path, gp.to_dimacs()) {
            return fail(&format!("{path}: {e}"));
        }
    }
    let mut gs = GroundSolver::new(&gp, a.common.seed);
    let mut emitted = 0usize;
    while emitted < a.limit {
        match gs.solve() {
            GroundResult::Sat(inst) => {
                if a.common.json {
                    println!("{}", serde_json::to_string(&inst.to_json()).unwrap());
                } else {
                    if emitted > 0 {
                        println!();
                    }
                    print!("{inst}");
                }
                gs.block(&inst);
                emitted += 1;
            }
            GroundResult::Unsat(groups) => {
                if emitted == 0 {
                    eprintln!("no instances at scope {scope}; conflicting constraints:");
                    let min = gs.minimize_groups(&groups);
                    for &c in &core_fact_conjuncts(&gp, &min) {
                        eprintln!("  {}  {}", m.facts[c].span, m.facts[c].formula);
                    }
                    return 1;
                }
                break;
            }
        }
    }
    0
}

/// Conjunction of a predicate's conjuncts, for grounding as one property.
fn conjunction(conjuncts: &[rml::ast::Conjunct]) -> Formula {
    let mut it = conjuncts.iter();
    let first = it.next().expect("predicates have at least one conjunct");
    it.fold(first.formula.clone(), |acc, c| {
        let span = acc.span.to(&c.span);
        Formula::new(rml::ast::FormulaKind::And(Box::new(acc), Box::new(c.formula.clone())), span)
    })
}
