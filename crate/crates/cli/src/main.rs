//! Command-line front end: every analysis as a file-in/structured-out command.
//!
//! Exit codes: 0 for a completed analysis (including `distinguishable` and
//! `inconclusive` verdicts), 1 for usage errors and inapplicable operations,
//! 2 for unreadable or invalid model files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use compind::ioeq::{coefficient_map, io_equation};
use compind::model::{parse_model, ModelSpec};
use compind::rules::{godfrey_rules, rhs_coefficient_count};
use compind::transforms::{
    enumerate_family, leak_to_terminal_cycle, match_skeletal_path, move_leak, reverse,
    shift_detour, ParamBijection,
};
use compind::verify::{
    coefficient_relations, compare, local_identifiability_sampled, DistinguishReason, Verdict,
};

#[derive(Parser)]
#[command(
    name = "compind",
    version,
    about = "Symbolic indistinguishability analysis of linear compartmental models"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,
    /// Seed for sampled analyses: an unsigned integer, or "random".
    /// The fixed default keeps repeated invocations byte-identical.
    #[arg(long, global = true, default_value = "1729")]
    seed: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pretty,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Derive and print the input-output equations of a model.
    IoEq { model: PathBuf },
    /// Compare two models: distinguishable, renaming-indistinguishable, or inconclusive.
    Compare { model_a: PathBuf, model_b: PathBuf },
    /// Apply a structure-preserving transform, emitting the new model and the renaming.
    Transform {
        model: PathBuf,
        /// Move the single leak of a path model from position I to position J.
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        move_leak: Option<Vec<usize>>,
        /// Replace the next-to-last leak of a path model by a terminal cycle.
        #[arg(long)]
        terminal_cycle: bool,
        /// Shift a detour one position down the path.
        #[arg(long)]
        shift_detour: bool,
        /// Reverse every edge and swap inputs with outputs.
        #[arg(long)]
        reverse: bool,
        /// Also write the transformed model to this file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generic local identifiability from the coefficient-map Jacobian rank.
    Identifiability { model: PathBuf },
    /// Dependency relations among the coefficient-map components.
    Relations { model: PathBuf },
    /// Enumerate the transform closure up to a composition depth.
    Enumerate {
        model: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Check the four geometric comparison rules between two models.
    Rules { model_a: PathBuf, model_b: PathBuf },
}

enum CliError {
    /// Wrong invocation or an operation that does not apply: exit 1.
    Usage(String),
    /// Unreadable or invalid model file: exit 2.
    ModelFile(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ModelFile(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::ModelFile(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(stdout) => {
            println!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ModelFile(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| CliError::ModelFile(format!("{}: {e}", path.display())))
}

fn parse_seed(raw: &str) -> Result<u64, CliError> {
    if raw == "random" {
        return Ok(rand::rngs::OsRng.next_u64());
    }
    raw.parse::<u64>().map_err(|_| {
        CliError::Usage(format!(
            "seed must be an unsigned integer or \"random\", got {raw:?}"
        ))
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    let format = cli.format;
    let seed = parse_seed(&cli.seed)?;
    match cli.command {
        Command::IoEq { model } => io_eq_cmd(&model, format),
        Command::Compare { model_a, model_b } => compare_cmd(&model_a, &model_b, format),
        Command::Transform {
            model,
            move_leak,
            terminal_cycle,
            shift_detour,
            reverse,
            output,
        } => transform_cmd(
            &model,
            move_leak,
            terminal_cycle,
            shift_detour,
            reverse,
            output.as_deref(),
            format,
        ),
        Command::Identifiability { model } => identifiability_cmd(&model, seed, format),
        Command::Relations { model } => relations_cmd(&model, format),
        Command::Enumerate { model, depth } => enumerate_cmd(&model, depth, format),
        Command::Rules { model_a, model_b } => rules_cmd(&model_a, &model_b, format),
    }
}

fn model_value(m: &ModelSpec) -> Value {
    serde_json::from_str(&m.to_json()).expect("model serialization is valid json")
}

fn bijection_value(phi: &ParamBijection) -> Value {
    json!(phi.to_symbol_pairs())
}

fn envelope(kind: &str, inputs: Value, result: Value, format: Format, pretty: String) -> String {
    match format {
        Format::Pretty => pretty,
        Format::Structured => {
            let doc = json!({ "kind": kind, "inputs": inputs, "result": result });
            serde_json::to_string_pretty(&doc).expect("structured output serializes")
        }
    }
}

fn io_eq_cmd(path: &Path, format: Format) -> Result<String, CliError> {
    let m = load_model(path)?;
    let mut equations = Vec::new();
    let mut pretty_lines = Vec::new();
    for &out in m.outputs() {
        let eq = io_equation(&m, out).map_err(usage)?;
        pretty_lines.push(eq.to_string());
        equations.push(json!({
            "output": out,
            "order": eq.order(),
            "text": eq.to_string(),
        }));
    }
    // Machine-readable coefficient dump in canonical coefficient-map order.
    let cmap = coefficient_map(&m).map_err(usage)?;
    let coefficients: Vec<Value> = cmap
        .entries()
        .iter()
        .map(|(key, poly)| {
            json!({
                "output": key.output,
                "monomial": key.monomial.to_string(),
                "coefficient": poly.to_string(),
            })
        })
        .collect();
    Ok(envelope(
        "io-eq",
        json!({ "model": path.display().to_string() }),
        json!({ "equations": equations, "coefficients": coefficients }),
        format,
        pretty_lines.join("\n"),
    ))
}

fn verdict_value(v: &Verdict) -> Value {
    match v {
        Verdict::PermutationIndistinguishable(phi) => json!({
            "kind": "permutation-indistinguishable",
            "bijection": phi.to_symbol_pairs(),
        }),
        Verdict::Distinguishable(reason) => match reason {
            DistinguishReason::StructureMismatch {
                only_in_a,
                only_in_b,
            } => json!({
                "kind": "distinguishable",
                "reason": "structure-mismatch",
                "witness": { "only_in_a": only_in_a, "only_in_b": only_in_b },
            }),
            DistinguishReason::RuleViolated(report) => json!({
                "kind": "distinguishable",
                "reason": "rule-violated",
                "witness": report,
            }),
            DistinguishReason::RelationMismatch {
                relation,
                holds_in,
                residue,
            } => json!({
                "kind": "distinguishable",
                "reason": "relation-mismatch",
                "witness": {
                    "relation": relation,
                    "holds_in": holds_in.to_string(),
                    "residue": residue,
                },
            }),
        },
        Verdict::Inconclusive { notes } => json!({
            "kind": "inconclusive",
            "notes": notes,
        }),
    }
}

fn verdict_pretty(v: &Verdict) -> String {
    match v {
        Verdict::PermutationIndistinguishable(phi) => {
            let mut s = String::from("PermutationIndistinguishable\n");
            for (a, b) in phi.pairs() {
                s.push_str(&format!("  {a} -> {b}\n"));
            }
            s.pop();
            s
        }
        Verdict::Distinguishable(reason) => match reason {
            DistinguishReason::StructureMismatch { only_in_a, only_in_b } => format!(
                "Distinguishable (structure mismatch)\n  only in first: {}\n  only in second: {}",
                if only_in_a.is_empty() { "-".into() } else { only_in_a.join(", ") },
                if only_in_b.is_empty() { "-".into() } else { only_in_b.join(", ") },
            ),
            DistinguishReason::RuleViolated(report) => {
                let mut s = String::from("Distinguishable (geometric rule violated)");
                if !report.rule1_distances.passed {
                    s.push_str(&format!(
                        "\n  rule 1 distances: {:?} vs {:?}",
                        report.rule1_distances.a, report.rule1_distances.b
                    ));
                }
                if !report.rule2_reach_to_output.passed {
                    s.push_str(&format!(
                        "\n  rule 2 reach-to-output: {:?} vs {:?}",
                        report.rule2_reach_to_output.a, report.rule2_reach_to_output.b
                    ));
                }
                if !report.rule3_reach_from_input.passed {
                    s.push_str(&format!(
                        "\n  rule 3 reach-from-input: {:?} vs {:?}",
                        report.rule3_reach_from_input.a, report.rule3_reach_from_input.b
                    ));
                }
                if !report.rule4_trap_count.passed {
                    s.push_str(&format!(
                        "\n  rule 4 traps: {} vs {}",
                        report.rule4_trap_count.a, report.rule4_trap_count.b
                    ));
                }
                s
            }
            DistinguishReason::RelationMismatch {
                relation,
                holds_in,
                residue,
            } => format!(
                "Distinguishable (dependency relations differ)\n  relation {relation} of model {holds_in} \
                 evaluates to {residue} on the other model"
            ),
        },
        Verdict::Inconclusive { notes } => {
            let mut s = String::from("Inconclusive");
            for note in notes {
                s.push_str(&format!("\n  note: {note}"));
            }
            s
        }
    }
}

fn compare_cmd(path_a: &Path, path_b: &Path, format: Format) -> Result<String, CliError> {
    let a = load_model(path_a)?;
    let b = load_model(path_b)?;
    let verdict = compare(&a, &b).map_err(usage)?;
    Ok(envelope(
        "compare",
        json!({
            "model_a": path_a.display().to_string(),
            "model_b": path_b.display().to_string(),
        }),
        verdict_value(&verdict),
        format,
        verdict_pretty(&verdict),
    ))
}

#[allow(clippy::too_many_arguments)]
fn transform_cmd(
    path: &Path,
    move_leak_args: Option<Vec<usize>>,
    terminal_cycle: bool,
    shift: bool,
    rev: bool,
    output: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let m = load_model(path)?;
    let chosen = usize::from(move_leak_args.is_some())
        + usize::from(terminal_cycle)
        + usize::from(shift)
        + usize::from(rev);
    if chosen != 1 {
        return Err(CliError::Usage(
            "exactly one of --move-leak, --terminal-cycle, --shift-detour, --reverse is required"
                .into(),
        ));
    }
    let (kind, (transformed, phi)) = if let Some(args) = move_leak_args {
        let (i, j) = (args[0], args[1]);
        ("move-leak", move_leak(&m, i, j).map_err(usage)?)
    } else if terminal_cycle {
        ("terminal-cycle", leak_to_terminal_cycle(&m).map_err(usage)?)
    } else if shift {
        let witness = match_skeletal_path(&m).map_err(usage)?;
        ("shift-detour", shift_detour(&m, &witness).map_err(usage)?)
    } else {
        ("reverse", reverse(&m).map_err(usage)?)
    };
    if let Some(out_path) = output {
        std::fs::write(out_path, format!("{}\n", transformed.to_json()))
            .map_err(|e| CliError::Usage(format!("{}: {e}", out_path.display())))?;
    }
    let mut pretty = format!("model: {}\nrenaming:", transformed.to_json());
    for (a, b) in phi.pairs() {
        pretty.push_str(&format!("\n  {a} -> {b}"));
    }
    Ok(envelope(
        "transform",
        json!({
            "model": path.display().to_string(),
            "transform": kind,
        }),
        json!({
            "model": model_value(&transformed),
            "bijection": bijection_value(&phi),
        }),
        format,
        pretty,
    ))
}

fn identifiability_cmd(path: &Path, seed: u64, format: Format) -> Result<String, CliError> {
    let m = load_model(path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = local_identifiability_sampled(&m, &mut rng, 3).map_err(usage)?;
    let pretty = format!(
        "{} (rank {} of {} parameters over {} coefficients; {} sample points, seed {seed})",
        r.verdict.as_str(),
        r.rank,
        r.param_count,
        r.coefficient_count,
        r.sample_points_used,
    );
    Ok(envelope(
        "identifiability",
        json!({ "model": path.display().to_string(), "seed": seed }),
        json!({
            "verdict": r.verdict.as_str(),
            "rank": r.rank,
            "param_count": r.param_count,
            "coefficient_count": r.coefficient_count,
            "sample_points_used": r.sample_points_used,
        }),
        format,
        pretty,
    ))
}

fn relations_cmd(path: &Path, format: Format) -> Result<String, CliError> {
    let m = load_model(path)?;
    let relations: Vec<String> = coefficient_relations(&m)
        .map_err(usage)?
        .iter()
        .map(|r| format!("{r}"))
        .collect();
    let pretty = if relations.is_empty() {
        "no dependency relations (the coefficient map is dominant)".to_string()
    } else {
        relations
            .iter()
            .map(|r| format!("{r} = 0"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    Ok(envelope(
        "relations",
        json!({ "model": path.display().to_string() }),
        json!({ "relations": relations }),
        format,
        pretty,
    ))
}

fn enumerate_cmd(path: &Path, depth: usize, format: Format) -> Result<String, CliError> {
    let m = load_model(path)?;
    let family = enumerate_family(&m, depth).map_err(usage)?;
    let members: Vec<Value> = family
        .iter()
        .map(|(member, phi)| {
            json!({
                "model": model_value(member),
                "bijection": bijection_value(phi),
            })
        })
        .collect();
    let mut pretty = format!("{} member(s) at depth {depth}:", family.len());
    for (member, phi) in &family {
        pretty.push_str(&format!("\n  {}", member.to_json()));
        pretty.push_str(&format!("\n    renaming: {phi}"));
    }
    Ok(envelope(
        "enumerate",
        json!({ "model": path.display().to_string(), "depth": depth }),
        json!({ "models": members }),
        format,
        pretty,
    ))
}

fn rules_cmd(path_a: &Path, path_b: &Path, format: Format) -> Result<String, CliError> {
    let a = load_model(path_a)?;
    let b = load_model(path_b)?;
    let report = godfrey_rules(&a, &b).map_err(usage)?;
    let counts_a = rhs_coefficient_count(&a);
    let counts_b = rhs_coefficient_count(&b);
    let count_value = |counts: &[compind::rules::RhsCount]| -> Value {
        json!(counts
            .iter()
            .map(|c| json!({
                "input": c.input,
                "output": c.output,
                "count": c.count,
                "reachable": c.reachable,
            }))
            .collect::<Vec<_>>())
    };
    let overall = report.overall();
    let pretty = format!(
        "rule 1 (shortest distances):   {}\nrule 2 (reach to outputs):     {}\nrule 3 (reach from inputs):    {}\nrule 4 (trap count):           {}\noverall: {}",
        pass_str(report.rule1_distances.passed),
        pass_str(report.rule2_reach_to_output.passed),
        pass_str(report.rule3_reach_from_input.passed),
        pass_str(report.rule4_trap_count.passed),
        if overall { "pass" } else { "fail" },
    );
    Ok(envelope(
        "rules",
        json!({
            "model_a": path_a.display().to_string(),
            "model_b": path_b.display().to_string(),
        }),
        json!({
            "report": serde_json::to_value(&report).expect("report serializes"),
            "overall": overall,
            "rhs_counts_a": count_value(&counts_a),
            "rhs_counts_b": count_value(&counts_b),
        }),
        format,
        pretty,
    ))
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
