//! The `regdialog` command line.
//!
//! Exit codes: 0 success, 1 domain violations, 2 input or parse errors,
//! 3 not found.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use regdialog::diff::{compare_chain, compare_snapshots, DiffOptions, DiffSet};
use regdialog::kb::{KbSources, KnowledgeBase};
use regdialog::rules::{infer, parse_rules, shipped_rules, Rule};
use regdialog::snapshot::AxiomViolation;
use regdialog::{parse_snapshot, validate_axioms, RegistryPath, RegistrySnapshot};

pub use report::{analyze, Report};

pub const SCHEMA: &str = "regdialog/1";

#[derive(Debug, Parser)]
#[command(
    name = "regdialog",
    version,
    about = "Registry snapshot diffing with ontology-driven interpretation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a REGSNAP file and check the registry-key axioms.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        format: Format,
    },
    /// Compare two snapshots of one hive.
    Diff {
        older: PathBuf,
        newer: PathBuf,
        #[command(flatten)]
        diff: DiffFlags,
        #[command(flatten)]
        format: Format,
    },
    /// Compare each consecutive pair of chronologically ordered snapshots.
    DiffChain {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        diff: DiffFlags,
        #[command(flatten)]
        format: Format,
    },
    /// Diff, group, annotate and classify a series of snapshots.
    Analyze {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        kb: KbArg,
        /// RULE-TXT file replacing the shipped rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Case identifier recorded in the report.
        #[arg(long = "case", default_value = "unnamed")]
        case_id: String,
        /// Record the generation time in the report.
        #[arg(long)]
        stamp: bool,
        #[command(flatten)]
        diff: DiffFlags,
        #[command(flatten)]
        format: Format,
    },
    /// Show what the knowledge base knows about a registry key.
    KbLookup {
        path: String,
        #[command(flatten)]
        kb: KbArg,
        #[command(flatten)]
        format: Format,
    },
    /// Run rules over ONTO-TXT facts loaded on top of the knowledge base.
    Infer {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        kb: KbArg,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Format {
    /// Machine-readable output.
    #[arg(long, conflicts_with = "text")]
    pub json: bool,
    /// Plain-text output (the default).
    #[arg(long)]
    pub text: bool,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DiffFlags {
    /// Report keys whose timestamp changed although their values did not.
    #[arg(long)]
    pub touch_as_modified: bool,
}

impl DiffFlags {
    fn options(self) -> DiffOptions {
        DiffOptions {
            touch_as_modified: self.touch_as_modified,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct KbArg {
    /// Knowledge-base directory (*.onto and *.anno files).
    #[arg(long, env = "REGDIALOG_KB")]
    pub kb: Option<PathBuf>,
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e)
    }
}

pub type Outcome = Result<u8, Failure>;

pub fn read_snapshot(path: &Path) -> Result<RegistrySnapshot, Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)?;
    parse_snapshot(&bytes)
        .with_context(|| path.display().to_string())
        .map_err(Failure::input)
}

pub fn kb_sources(arg: &KbArg) -> Result<KbSources, Failure> {
    match &arg.kb {
        Some(dir) => KbSources::read_dir(dir).map_err(Failure::input),
        None => Ok(KbSources::seed()),
    }
}

pub fn load_kb(arg: &KbArg) -> Result<KnowledgeBase, Failure> {
    kb_sources(arg)?
        .load()
        .context("knowledge base")
        .map_err(Failure::input)
}

pub fn load_rules(path: Option<&Path>) -> Result<Vec<Rule>, Failure> {
    match path {
        None => Ok(shipped_rules()),
        Some(p) => {
            let bytes = fs::read(p)
                .with_context(|| format!("cannot read {}", p.display()))
                .map_err(Failure::input)?;
            parse_rules(&bytes)
                .with_context(|| p.display().to_string())
                .map_err(Failure::input)
        }
    }
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Failure::input)?;
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn tagged<T: Serialize>(body: &T) -> Tagged<'_, T> {
    Tagged { schema: SCHEMA, body }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Validate { file, format } => validate(file, *format, out),
        Command::Diff {
            older,
            newer,
            diff,
            format,
        } => {
            let (a, b) = (read_snapshot(older)?, read_snapshot(newer)?);
            let d = compare_snapshots(&a, &b, diff.options()).map_err(Failure::input)?;
            if format.json {
                json_line(out, &tagged(&d))?;
            } else {
                out.write_all(d.to_text().as_bytes())?;
            }
            Ok(0)
        }
        Command::DiffChain { files, diff, format } => {
            let snaps = files.iter().map(|f| read_snapshot(f)).collect::<Result<Vec<_>, _>>()?;
            let chain = compare_chain(&snaps, diff.options()).map_err(Failure::input)?;
            write_chain(&chain, *format, out)?;
            Ok(0)
        }
        Command::Analyze {
            files,
            kb,
            rules,
            case_id,
            stamp,
            diff,
            format,
        } => {
            let snaps = files.iter().map(|f| read_snapshot(f)).collect::<Result<Vec<_>, _>>()?;
            let kb = load_kb(kb)?;
            let rules = load_rules(rules.as_deref())?;
            let mut report = analyze(&snaps, &kb, &rules, diff.options(), case_id)?;
            if *stamp {
                report.generated = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            }
            if format.json {
                json_line(out, &report)?;
            } else {
                out.write_all(report.to_text().as_bytes())?;
            }
            Ok(if report.violations.is_empty() { 0 } else { 1 })
        }
        Command::KbLookup { path, kb, format } => kb_lookup(path, kb, *format, out),
        Command::Infer {
            files,
            kb,
            rules,
            format,
        } => infer_files(files, kb, rules.as_deref(), *format, out),
    }
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    file: String,
    hive: &'a str,
    keys: usize,
    violations: &'a [AxiomViolation],
}

fn validate(file: &Path, format: Format, out: &mut dyn Write) -> Outcome {
    let s = read_snapshot(file)?;
    let violations = validate_axioms(&s);
    if format.json {
        json_line(
            out,
            &tagged(&ValidateOutput {
                file: file.display().to_string(),
                hive: &s.hive_name,
                keys: s.keys().len(),
                violations: &violations,
            }),
        )?;
    } else if violations.is_empty() {
        writeln!(out, "ok: {} keys in hive {}", s.keys().len(), s.hive_name)?;
    } else {
        for v in &violations {
            writeln!(out, "violation: {v}")?;
        }
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

#[derive(Serialize)]
struct ChainOutput<'a> {
    comparisons: &'a [DiffSet],
}

fn write_chain(chain: &[DiffSet], format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    if format.json {
        return json_line(out, &tagged(&ChainOutput { comparisons: chain }));
    }
    for (i, d) in chain.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "== {} vs {} ==", d.older, d.newer)?;
        out.write_all(d.to_text().as_bytes())?;
    }
    Ok(())
}

fn kb_lookup(path: &str, kb: &KbArg, format: Format, out: &mut dyn Write) -> Outcome {
    let p = RegistryPath::parse(path)
        .with_context(|| format!("bad registry path {path:?}"))
        .map_err(Failure::input)?;
    let kb = load_kb(kb)?;
    let Some(a) = kb.lookup(&p) else {
        return Err(Failure {
            code: 3,
            error: anyhow!("unknown key {path}"),
        });
    };
    if format.json {
        #[derive(Serialize)]
        struct LookupOutput<'a> {
            query: &'a str,
            annotation: &'a regdialog::kb::KeyAnnotation,
        }
        json_line(
            out,
            &tagged(&LookupOutput {
                query: path,
                annotation: &a,
            }),
        )?;
        return Ok(0);
    }
    if a.inherited {
        writeln!(out, "inherited from: {}", a.path)?;
    } else {
        writeln!(out, "path: {}", a.path)?;
    }
    writeln!(out, "hive: {}", a.hive)?;
    let concepts: Vec<&str> = a.evidence_concepts.iter().map(String::as_str).collect();
    writeln!(
        out,
        "concepts: {}",
        if concepts.is_empty() {
            "-".to_string()
        } else {
            concepts.join(", ")
        }
    )?;
    writeln!(out, "software: {}", a.owning_software.as_deref().unwrap_or("-"))?;
    writeln!(out, "description: {}", a.description)?;
    Ok(0)
}

#[derive(Serialize)]
struct DerivedOutput {
    fact: String,
    rule: String,
    binding: BTreeMap<String, String>,
}

fn infer_files(files: &[PathBuf], kb: &KbArg, rules: Option<&Path>, format: Format, out: &mut dyn Write) -> Outcome {
    let mut sources = kb_sources(kb)?;
    for f in files {
        let text = fs::read_to_string(f)
            .with_context(|| format!("cannot read {}", f.display()))
            .map_err(Failure::input)?;
        sources.onto.push((f.display().to_string(), text));
    }
    let kb = sources.load().map_err(Failure::input)?;
    let rules = load_rules(rules)?;
    let res = infer(&kb.graph, &kb.facts, &rules).map_err(Failure::input)?;
    let derived: Vec<DerivedOutput> = res
        .provenance
        .iter()
        .map(|(a, p)| DerivedOutput {
            fact: a.to_string(),
            rule: p.rule.clone(),
            binding: p.binding.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        })
        .collect();
    if format.json {
        #[derive(Serialize)]
        struct InferOutput {
            iterations: usize,
            derived: Vec<DerivedOutput>,
        }
        json_line(
            out,
            &tagged(&InferOutput {
                iterations: res.iterations,
                derived,
            }),
        )?;
    } else {
        for d in &derived {
            writeln!(out, "{}  # {}", d.fact, d.rule)?;
        }
    }
    Ok(0)
}
