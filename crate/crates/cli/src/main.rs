use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use selertion::driver::{self, AnalyzeOptions, Store};
use selertion::harness::{self, Metrics};
use selertion::runtime::TestReport;
use selertion::SourceTree;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "selertion", version, about = "Assertion-level regression test selection for MiniJ projects")]
struct Cli {
    /// Store directory (default: <project>/.selertion)
    #[arg(long, global = true, env = "SELERTION_STORE")]
    store: Option<PathBuf>,
    /// Print machine-readable JSON instead of TSV
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze, instrument and collect a project, then run its whole suite
    Init {
        dir: PathBuf,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        method_level: bool,
    },
    /// Select and run the tests affected since the last analyzed revision
    Run {
        dir: PathBuf,
        /// Refresh the dependency database afterwards
        #[arg(long)]
        collect: bool,
        /// Disable assertion-level selection
        #[arg(long)]
        method_level: bool,
    },
    /// Refresh the dependency database from the instrumented copy
    Collect { dir: PathBuf },
    /// Run the whole suite without selection
    Retestall { dir: PathBuf },
    /// Write a seeded mutant of a project to a new directory
    Mutate {
        dir: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory (default: <dir>-mutant-<seed>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the stored outputs of a revision
    Report {
        dir: PathBuf,
        /// Revision id or unique prefix
        #[arg(long)]
        revision: String,
    },
    /// Test methods affected between two revisions, by exhaustive execution
    Oracle { v1: PathBuf, v2: PathBuf },
    /// Mutant sweep over the bundled corpus
    Sweep {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

fn report_json(report: &TestReport) -> Value {
    json!({
        "testsRun": report.tests_run(),
        "assertionsEvaluated": report.assertions_evaluated(),
        "failures": report.failures(),
        "errors": report.errors(),
        "outcomes": tsv_rows(&report.to_tsv(), &["entity", "outcome", "millis"]),
    })
}

fn tsv_rows(text: &str, columns: &[&str]) -> Value {
    Value::Array(
        text.lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                let cells = l.split('\t');
                Value::Object(columns.iter().map(|c| c.to_string()).zip(cells.map(|c| json!(c))).collect())
            })
            .collect(),
    )
}

fn metrics_json(m: &Metrics) -> Value {
    json!({
        "selectedTestRatio": m.selected_test_ratio(),
        "selectedAssertionRatio": m.selected_assertion_ratio(),
        "selectedTests": m.selected_tests,
        "totalTests": m.total_tests,
        "selectedAssertions": m.selected_assertions,
        "totalAssertions": m.total_assertions,
        "analysisMillis": m.analysis_millis,
        "executionMillis": m.execution_millis,
    })
}

/// Stored metrics TSV (header plus one row) as a JSON object.
fn metrics_rows(text: &str) -> Value {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split('\t').collect();
    match tsv_rows(lines.next().unwrap_or(""), &header) {
        Value::Array(mut rows) if !rows.is_empty() => rows.remove(0),
        _ => Value::Null,
    }
}

fn print_report(report: &TestReport) {
    print!("{}", report.to_tsv());
    println!(
        "tests\t{}\tassertions\t{}\tfailures\t{}\terrors\t{}",
        report.tests_run(),
        report.assertions_evaluated(),
        report.failures(),
        report.errors()
    );
}

fn status(report: &TestReport) -> ExitCode {
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn store_for(cli_store: &Option<PathBuf>, dir: &Path) -> Store {
    Store::resolve(dir, cli_store.as_deref())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Init { dir, force, method_level } => {
            let store = store_for(&cli.store, &dir);
            let s = driver::cmd_init(&dir, &store, force, method_level)?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "revision": s.revision,
                        "classes": s.classes,
                        "methods": s.methods,
                        "slices": s.slices,
                        "dependencies": s.dependencies,
                        "metrics": metrics_json(&s.metrics),
                        "report": report_json(&s.report),
                    })
                );
            } else {
                println!("revision\t{}", s.revision);
                println!("classes\t{}\tmethods\t{}\tslices\t{}\tdependencies\t{}", s.classes, s.methods, s.slices, s.dependencies);
                print_report(&s.report);
            }
            Ok(status(&s.report))
        }
        Command::Run { dir, collect, method_level } => {
            let store = store_for(&cli.store, &dir);
            let s = driver::cmd_analyze_and_run(&dir, &store, AnalyzeOptions { collect, method_level })?;
            if cli.json {
                let selection: Vec<Value> = s
                    .selection
                    .manifest_rows()
                    .into_iter()
                    .map(|(l, id, t)| json!({"level": l.to_string(), "entity": id, "trigger": t}))
                    .collect();
                println!(
                    "{}",
                    json!({
                        "revision": s.revision,
                        "changedFiles": s.delta.files,
                        "selection": selection,
                        "synced": s.synced,
                        "collected": s.collected,
                        "metrics": metrics_json(&s.metrics),
                        "report": report_json(&s.report),
                    })
                );
            } else {
                println!("revision\t{}", s.revision);
                for (l, id, t) in s.selection.manifest_rows() {
                    println!("{l}\t{id}\t{t}");
                }
                print_report(&s.report);
                print!("{}", s.metrics.to_tsv());
            }
            Ok(status(&s.report))
        }
        Command::Collect { dir } => {
            let store = store_for(&cli.store, &dir);
            let db = driver::cmd_collect(&store)?;
            if cli.json {
                println!("{}", json!({"entities": db.entries.len()}));
            } else {
                println!("entities\t{}", db.entries.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Retestall { dir } => {
            let report = driver::cmd_retestall(&dir)?;
            if cli.json {
                println!("{}", report_json(&report));
            } else {
                print_report(&report);
            }
            Ok(status(&report))
        }
        Command::Mutate { dir, seed, out } => {
            let tree = SourceTree::load(&dir)?;
            let m = harness::generate_mutant(&tree, seed)?;
            let out = out.unwrap_or_else(|| {
                let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "project".into());
                dir.with_file_name(format!("{name}-mutant-{seed}"))
            });
            m.tree.write_to(&out).with_context(|| format!("writing mutant to {}", out.display()))?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "seed": seed,
                        "op": m.site.op.as_str(),
                        "method": m.site.method,
                        "location": m.site.location,
                        "baseRevision": m.base_revision,
                        "out": out.display().to_string(),
                    })
                );
            } else {
                println!("{}\t{}\t{}", m.site.op, m.site.location, out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir, revision } => {
            let store = store_for(&cli.store, &dir);
            let r = driver::cmd_report(&store, &revision)?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "revision": r.revision,
                        "outcomes": tsv_rows(&r.report, &["entity", "outcome", "millis"]),
                        "selection": tsv_rows(&r.selection, &["level", "entity", "trigger"]),
                        "metrics": metrics_rows(&r.metrics),
                    })
                );
            } else {
                println!("revision\t{}", r.revision);
                print!("{}{}{}", r.report, r.selection, r.metrics);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { v1, v2 } => {
            let affected = harness::oracle_affected_entities(&SourceTree::load(&v1)?, &SourceTree::load(&v2)?)?;
            if cli.json {
                let rows: Vec<Value> = affected.iter().map(|(c, m)| json!({"class": c, "method": m})).collect();
                println!("{}", Value::Array(rows));
            } else {
                for (c, m) in &affected {
                    println!("{c}\t{m}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { seeds } => {
            let results = harness::sweep(harness::CORPUS, seeds)?;
            let missed = results.iter().filter(|r| !r.missed.is_empty()).count();
            if cli.json {
                let rows = tsv_rows(
                    harness::summary_tsv(&results).split_once('\n').map_or("", |(_, rest)| rest),
                    &["project", "seed", "op", "location", "changed", "missed", "assertionRatio", "methodLevelRatio"],
                );
                println!("{}", json!({"mutants": results.len(), "missed": missed, "rows": rows}));
            } else {
                print!("{}", harness::summary_tsv(&results));
            }
            Ok(if missed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
