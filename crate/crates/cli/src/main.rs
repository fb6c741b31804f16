//! `sachs`: batch front end. Exit 0 when clean, 1 on a Bad verdict or a
//! violated invariant, 2 on usage errors, 3 when an input cannot be read.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sachs_core::helpgen::{capability_presets, cooccurrence, coverage, Annotation, CapabilityProfile};
use sachs_core::interpretation::InterpretationError;
use sachs_core::ontology::VariantFn;
use sachs_core::workbook::{column_to_letters, evaluate, load_workbook, WorkbookFormat};
use sachs_core::{
    Arg, AssessError, AssessmentReport, CellAddress, Engine, ExplanationType, GraphFormat, Granularity, Judgment,
    RuleMode, Value, VariantRequestError,
};
use sachs_server::{AppState, CorpusPaths, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "sachs", version, about = "Semantic help and assessment for spreadsheets", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Args)]
struct Corpus {
    /// Workbook (.sachs.json or .csv)
    workbook: PathBuf,
    /// Ontology (.json)
    ontology: PathBuf,
    /// Mapping from regions to concepts (.json)
    mapping: PathBuf,
}

impl Corpus {
    fn engine(&self) -> Result<Engine, Failure> {
        Engine::load(&self.workbook, &self.ontology, &self.mapping).map_err(|e| Failure::Input(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the primary sheet with evaluated values
    Inspect {
        workbook: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Help texts for one cell
    Help {
        #[command(flatten)]
        corpus: Corpus,
        addr: CellAddress,
        /// Comma-separated explanation types; all when omitted
        #[arg(long, value_delimiter = ',')]
        types: Vec<ExplanationType>,
        #[arg(long, default_value = "explanation")]
        granularity: Granularity,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Run value and domain rules; exits 1 if any verdict is Bad
    Assess {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        block: Option<String>,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<RuleMode>,
        /// Community parameter profile
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Check invariant rules; exits 1 on a violation
    Invariants {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Dependency graph around a concept
    Graph {
        #[command(flatten)]
        corpus: Corpus,
        /// Concept id, or a cell address to root at that cell's concept
        #[arg(long)]
        concept: String,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value = "dot")]
        format: GraphFormat,
    },
    /// Explanation-type coverage of an annotated corpus
    Coverage {
        annotation: PathBuf,
        /// Extra capability profile as comma-separated types
        #[arg(long, value_delimiter = ',')]
        capability: Vec<ExplanationType>,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Co-occurrence of explanation types
    Cooccur {
        annotation: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Extrapolate a block to a target argument
    Variant {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        block: String,
        /// Lagrange order
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Start the HTTP API
    Serve {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        annotation: Option<PathBuf>,
        #[arg(long, env = "SACHS_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
    },
}

fn parse_mode(s: &str) -> Result<RuleMode, String> {
    match s {
        "value" => Ok(RuleMode::Value),
        "domain" => Ok(RuleMode::Domain),
        "invariant" => Ok(RuleMode::Invariant),
        _ => Err(format!("`{s}` is not one of value, domain, invariant")),
    }
}

enum Failure {
    Usage(String),
    Input(String),
}

impl From<AssessError> for Failure {
    fn from(e: AssessError) -> Self {
        match e {
            AssessError::UnknownRule(_)
            | AssessError::UnknownProfile(_)
            | AssessError::RuleNotForBlock { .. }
            | AssessError::Unresolved(_)
            | AssessError::Interpretation(InterpretationError::UnknownBlock(_)) => Failure::Usage(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

/// Outcome of a successful run: what to print and whether anything was Bad.
struct Done {
    out: String,
    bad: bool,
}

impl Done {
    fn clean(out: String) -> Self {
        Self { out, bad: false }
    }
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(done) => {
            let mut stdout = std::io::stdout().lock();
            let newline = if done.out.ends_with('\n') { "" } else { "\n" };
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = write!(stdout, "{}{newline}", done.out).and_then(|_| stdout.flush());
            ExitCode::from(u8::from(done.bad))
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<Done, Failure> {
    match command {
        Command::Inspect { workbook, format } => inspect(&workbook, format).map(Done::clean),
        Command::Help {
            corpus,
            addr,
            types,
            granularity,
            format,
        } => {
            let engine = corpus.engine()?;
            let bundle = engine.help(addr, &types, granularity);
            if format == Output::Json {
                return Ok(Done::clean(json(&bundle)));
            }
            let mut out = String::new();
            for e in &bundle.entries {
                writeln!(out, "[{}] {}", e.block_id, e.label).unwrap();
                for t in &e.texts {
                    writeln!(out, "  {}", t.text).unwrap();
                }
            }
            if let Some(f) = &bundle.fallback {
                writeln!(out, "{addr}: no functional block").unwrap();
                for (what, label) in [("row", &f.row_header), ("column", &f.column_header)] {
                    if let Some(l) = label {
                        writeln!(out, "  {what}: {l}").unwrap();
                    }
                }
            }
            Ok(Done::clean(out))
        }
        Command::Assess {
            corpus,
            block,
            rule,
            mode,
            profile,
            format,
        } => {
            let engine = corpus.engine()?;
            let reports = assess(&engine, block.as_deref(), rule.as_deref(), mode, profile.as_deref())?;
            Ok(reports_done(&reports, format))
        }
        Command::Invariants {
            corpus,
            rule,
            profile,
            format,
        } => {
            let engine = corpus.engine()?;
            let rules: Vec<String> = match rule {
                Some(r) => vec![r],
                None => engine
                    .ontology()
                    .rules()
                    .filter(|r| r.mode == RuleMode::Invariant)
                    .map(|r| r.id.clone())
                    .collect(),
            };
            let assessor = engine.assessor(profile.as_deref());
            let reports = rules
                .iter()
                .map(|r| assessor.check_invariant(r))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(reports_done(&reports, format))
        }
        Command::Graph {
            corpus,
            concept,
            levels,
            format,
        } => {
            let engine = corpus.engine()?;
            let graph = if engine.ontology().concept(&concept).is_none() {
                match concept.parse::<CellAddress>() {
                    Ok(addr) => engine.graph_for_cell(addr, levels),
                    Err(_) => engine.graph(&concept, levels),
                }
            } else {
                engine.graph(&concept, levels)
            };
            let graph = graph.map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(Done::clean(graph.export(format)))
        }
        Command::Coverage {
            annotation,
            capability,
            format,
        } => {
            let ann = load_annotation(&annotation)?;
            let mut profiles = capability_presets();
            if !capability.is_empty() {
                let name = capability.iter().map(|t| t.key()).collect::<Vec<_>>().join("+");
                profiles.push(CapabilityProfile::new(&name, &capability));
            }
            let report = coverage(&ann, &profiles).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(Done::clean(match format {
                Output::Json => json(&report),
                Output::Text => report.to_table(),
            }))
        }
        Command::Cooccur { annotation, top, format } => {
            let ann = load_annotation(&annotation)?;
            let m = cooccurrence(&ann).map_err(|e| Failure::Input(e.to_string()))?;
            let pairs = m.top_pairs(top);
            Ok(Done::clean(match format {
                Output::Json => json(&serde_json::json!({
                    "types": ExplanationType::ALL,
                    "counts": m.counts,
                    "top_pairs": pairs,
                })),
                Output::Text => {
                    let mut out = m.to_table();
                    if !out.ends_with('\n') {
                        out.push('\n');
                    }
                    for p in pairs {
                        writeln!(out, "{} / {}: {} ({:.2})", p.a, p.b, p.count, p.ratio).unwrap();
                    }
                    out
                }
            }))
        }
        Command::Variant {
            corpus,
            block,
            order,
            target,
            format,
        } => {
            let engine = corpus.engine()?;
            let result = engine
                .variant_with(&block, &VariantFn::LagrangeExtrapolation(order), &Arg::parse(&target))
                .map_err(|e| match e {
                    VariantRequestError::Interpretation(InterpretationError::UnknownBlock(_))
                    | VariantRequestError::NonNumericArg(_) => Failure::Usage(e.to_string()),
                    _ => Failure::Input(e.to_string()),
                })?;
            Ok(Done::clean(match format {
                Output::Json => json(&result),
                Output::Text => {
                    let mut out = format!("{} at {}: {:.3}", result.function, result.target, result.value);
                    if let Some(actual) = &result.actual {
                        write!(out, " (sheet: {actual})").unwrap();
                    }
                    out
                }
            }))
        }
        Command::Serve {
            corpus,
            annotation,
            port,
        } => {
            let state = AppState::from_paths(CorpusPaths {
                workbook: corpus.workbook,
                ontology: corpus.ontology,
                mapping: corpus.mapping,
                annotation,
            })
            .map_err(Failure::Input)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Input(e.to_string()))?;
            rt.block_on(sachs_server::serve(state, port))
                .map_err(|e| Failure::Input(format!("port {port}: {e}")))?;
            Ok(Done::clean(String::new()))
        }
    }
}

fn load_annotation(path: &Path) -> Result<Annotation, Failure> {
    Annotation::load(path).map_err(|e| Failure::Input(e.to_string()))
}

/// Rules selected by the flags. Without `--rule`, every value and domain rule
/// of the selected blocks (all blocks by default) runs, filtered by `--mode`.
fn assess(
    engine: &Engine,
    block: Option<&str>,
    rule: Option<&str>,
    mode: Option<RuleMode>,
    profile: Option<&str>,
) -> Result<Vec<AssessmentReport>, Failure> {
    if mode == Some(RuleMode::Invariant) {
        return Err(Failure::Usage("invariant rules run through `sachs invariants`".into()));
    }
    let blocks: Vec<_> = match block {
        Some(id) => vec![engine
            .interpretation()
            .block(id)
            .ok_or_else(|| Failure::Usage(format!("unknown block `{id}`")))?],
        None => engine.interpretation().blocks().iter().collect(),
    };
    if let (Some(r), Some(m)) = (rule, mode) {
        if let Some(found) = engine.ontology().rule(r) {
            if found.mode != m {
                return Err(Failure::Usage(format!("rule `{r}` is a {} rule, not {m}", found.mode)));
            }
        }
    }
    let assessor = engine.assessor(profile);
    let mut reports = Vec::new();
    for b in &blocks {
        match rule {
            Some(r) => {
                if block.is_none() && engine.ontology().rule(r).is_some_and(|x| x.concept_id != b.concept_id) {
                    continue;
                }
                reports.push(assessor.assess(&b.id, r)?);
            }
            None => {
                for r in engine.ontology().rules() {
                    let wanted = match mode {
                        Some(m) => r.mode == m,
                        None => r.mode != RuleMode::Invariant,
                    };
                    if wanted && r.concept_id == b.concept_id {
                        reports.push(assessor.assess(&b.id, &r.id)?);
                    }
                }
            }
        }
    }
    if let Some(r) = rule {
        if reports.is_empty() {
            engine.ontology().rule(r).ok_or_else(|| Failure::Usage(format!("unknown rule `{r}`")))?;
            return Err(Failure::Usage(format!("no block is interpreted by the concept of `{r}`")));
        }
    }
    Ok(reports)
}

fn reports_done(reports: &[AssessmentReport], format: Output) -> Done {
    let bad = reports.iter().any(|r| r.verdicts.iter().any(|v| v.judgment == Judgment::Bad));
    let out = match format {
        Output::Json => json(&reports),
        Output::Text => {
            let mut out = String::new();
            for r in reports {
                writeln!(out, "{} ({}): {} bad of {}", r.rule_id, r.mode, r.violations.len(), r.verdicts.len()).unwrap();
                for v in &r.verdicts {
                    let j = match v.judgment {
                        Judgment::Good => "good",
                        Judgment::Bad => "BAD ",
                        Judgment::Unknown => "?   ",
                    };
                    writeln!(out, "  {j} {:<5} {:<6} {:>8}  {}", v.addr.to_string(), v.arg.to_string(), v.value.normalize().to_string(), v.text).unwrap();
                }
            }
            out
        }
    };
    Done { out, bad }
}

fn inspect(path: &Path, format: Output) -> Result<String, Failure> {
    let wb = load_workbook(path, WorkbookFormat::from_path(path)).map_err(|e| Failure::Input(e.to_string()))?;
    let ev = evaluate(&wb).map_err(|e| Failure::Input(e.to_string()))?;
    if format == Output::Json {
        let sheets: Vec<_> = wb
            .sheets()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let cells: serde_json::Map<_, _> = s
                    .cells()
                    .map(|(a, _)| (a.to_string(), serde_json::to_value(ev.get_in(i, a)).expect("serializable")))
                    .collect();
                serde_json::json!({ "name": s.name(), "cells": cells })
            })
            .collect();
        return Ok(json(&serde_json::json!({ "sheets": sheets })));
    }
    let sheet = wb.primary();
    let Some((cols, rows)) = sheet.extent() else {
        return Ok(format!("{}: empty\n", sheet.name()));
    };
    let cell = |c: u32, r: u32| -> String {
        let addr = CellAddress::new(c, r).expect("within extent");
        match ev.get(addr) {
            Value::Number(n) => n.normalize().to_string(),
            v => v.to_string(),
        }
    };
    let widths: Vec<usize> = (1..=cols)
        .map(|c| (1..=rows).map(|r| cell(c, r).chars().count()).max().unwrap_or(0).max(column_to_letters(c).len()))
        .collect();
    let gutter = rows.to_string().len();
    let mut out = String::new();
    write!(out, "{:gutter$}", "").unwrap();
    for c in 1..=cols {
        write!(out, "  {:<w$}", column_to_letters(c), w = widths[c as usize - 1]).unwrap();
    }
    out.truncate(out.trim_end_matches(' ').len());
    out.push('\n');
    for r in 1..=rows {
        write!(out, "{r:>gutter$}").unwrap();
        for c in 1..=cols {
            let text = cell(c, r);
            let w = widths[c as usize - 1];
            if matches!(ev.get(CellAddress::new(c, r).expect("within extent")), Value::Number(_)) {
                write!(out, "  {text:>w$}").unwrap();
            } else {
                write!(out, "  {text:<w$}").unwrap();
            }
        }
        out.truncate(out.trim_end_matches(' ').len());
        out.push('\n');
    }
    Ok(out)
}
