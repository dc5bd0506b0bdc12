//! Command-line entry point and the HTTP API server.

pub mod fix;
pub mod lint;
pub mod server;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::RuleCorpus;
use crate::dsl::{parse_rules, Rule};
use crate::engine::{Outcome, Policy, Report};
use crate::llm::{generate_rule, Mode};
use crate::ops::Catalog;
use fix::FixOutcome;
use lint::{build_environment, load_corpus, select, LlmOptions, RuleRef};

#[derive(Parser, Debug)]
#[command(name = "pipelint", version, about = "Lint Markdown with rules built from composable operator pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lint Markdown files.
    Run(RunArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
    /// Inspect, validate or generate rules.
    #[command(subcommand)]
    Rules(RulesCommand),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PolicyArgs {
    /// Allow network access (link checks, GitHub fetches, live LLM calls).
    #[arg(long)]
    pub allow_net: bool,
    /// Allow `execute` to run shell commands.
    #[arg(long)]
    pub allow_exec: bool,
    /// Allow `customCode` to run JavaScript.
    #[arg(long)]
    pub allow_scripts: bool,
}

impl PolicyArgs {
    pub fn policy(&self) -> Policy {
        Policy {
            allow_net: self.allow_net,
            allow_exec: self.allow_exec,
            allow_scripts: self.allow_scripts,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct LlmArgs {
    /// Provider mode; overrides the config file.
    #[arg(long, value_enum)]
    pub llm_mode: Option<Mode>,
    /// Provider config (TOML). The API key is only ever read from the
    /// environment variable it names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Canned responses for stub mode (YAML).
    #[arg(long)]
    pub stub_file: Option<PathBuf>,
    /// Recorded exchanges for replay mode.
    #[arg(long)]
    pub replay_dir: Option<PathBuf>,
    /// In live mode, record every exchange to this directory.
    #[arg(long)]
    pub record_dir: Option<PathBuf>,
}

impl LlmArgs {
    fn options(&self) -> LlmOptions {
        LlmOptions {
            mode: self.llm_mode,
            config: self.config.clone(),
            stub_file: self.stub_file.clone(),
            replay_dir: self.replay_dir.clone(),
            record_dir: self.record_dir.clone(),
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Preset to run (default: software-library).
    #[arg(long, conflicts_with = "rules")]
    pub preset: Option<String>,
    /// Comma-separated rule names or rule YAML files.
    #[arg(long, value_delimiter = ',')]
    pub rules: Vec<String>,
    /// Rule corpus directory (rules/*.yaml, presets/*.yaml) replacing the
    /// built-in one.
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write a sidecar patch per fixable diagnostic. Files are never rewritten.
    #[arg(long)]
    pub fix: bool,
    /// Skip a rule entirely (repeatable).
    #[arg(long = "ignore")]
    pub ignore: Vec<String>,
    /// GitHub API base URL.
    #[arg(long)]
    pub github_api: Option<String>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8787)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
    #[arg(long)]
    pub github_api: Option<String>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Subcommand, Debug)]
pub enum RulesCommand {
    /// List rules in the corpus.
    List {
        /// Only rules whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        rules_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a rule file against the operator catalog.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Draft a rule from a one-line idea.
    Generate {
        idea: String,
        /// Model to ask instead of the configured one.
        #[arg(long)]
        model: Option<String>,
        /// Write the YAML here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        llm: LlmArgs,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Run(args) => run(args, out, err),
        Command::Serve(args) => serve(args, err),
        Command::Rules(RulesCommand::List { filter, rules_dir, format }) => {
            list(filter.as_deref(), rules_dir.as_deref(), format, out)
        }
        Command::Rules(RulesCommand::Validate { file, format }) => validate(&file, format, out),
        Command::Rules(RulesCommand::Generate {
            idea,
            model,
            output,
            policy,
            llm,
        }) => generate(&idea, model.as_deref(), output.as_deref(), &policy, &llm, out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "pipelint: {message}");
            2
        }
    }
}

type CmdResult = Result<i32, String>;

fn run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (corpus, mut config_errors) = load_corpus(args.rules_dir.as_deref()).map_err(|e| e.to_string())?;
    let refs = args
        .rules
        .iter()
        .map(|r| RuleRef::from_arg(r).map_err(|e| format!("cannot read rule file {r}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (rules, selection_errors) = select(&corpus, args.preset.as_deref(), &refs).map_err(|e| e.to_string())?;
    config_errors.extend(selection_errors);
    let mut env = build_environment(args.policy.policy(), &args.llm.options(), args.github_api.as_deref())
        .map_err(|e| e.to_string())?;
    for name in &args.ignore {
        env = env.ignoring(name);
    }

    // Files are linted concurrently; reports keep input order.
    let reports: Vec<Result<(String, Report), String>> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .files
            .iter()
            .map(|path| {
                let (rules, corpus, env, config_errors) = (&rules, &corpus, &env, &config_errors);
                s.spawn(move || {
                    let markdown =
                        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    let shown = path.display().to_string();
                    let report = lint::lint(&markdown, &shown, rules, config_errors.clone(), corpus, env);
                    Ok((markdown, report))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("lint thread")).collect()
    });

    let mut code = 0;
    for (path, result) in args.files.iter().zip(reports) {
        let (markdown, report) = match result {
            Ok(r) => r,
            Err(message) => {
                let _ = writeln!(err, "pipelint: {message}");
                code = 2;
                continue;
            }
        };
        let written = match args.format {
            Format::Json => writeln!(out, "{}", report.to_json()),
            Format::Text => write_text(&report, out),
        };
        written.map_err(|e| e.to_string())?;
        if args.fix {
            for outcome in fix::write_patches(path, &markdown, &report, &rules, &env) {
                let _ = match outcome {
                    FixOutcome::Written(p) => writeln!(err, "wrote {}", p.display()),
                    FixOutcome::Unchanged { rule, n } => {
                        writeln!(err, "{}: {rule} diagnostic {n}: model proposed no change", path.display())
                    }
                    FixOutcome::Failed { rule, n, message } => {
                        writeln!(err, "{}: {rule} diagnostic {n}: fix failed: {message}", path.display())
                    }
                };
            }
        }
        code = code.max(report.exit_code());
    }
    Ok(code)
}

/// `path:line:col severity rule message` per diagnostic, then one line per
/// rule that did not produce a verdict, then a summary.
pub fn write_text(report: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let path = &report.document_path;
    for e in &report.config_errors {
        writeln!(out, "{path}: config error: {e}")?;
    }
    for r in &report.rule_results {
        for d in &r.diagnostics {
            let (line, col) = d.span.start();
            writeln!(out, "{path}:{line}:{col} {} {} {}", d.severity.as_str(), r.rule_name, d.message)?;
        }
    }
    for r in &report.rule_results {
        if matches!(r.outcome, Outcome::Pass | Outcome::Fail) {
            continue;
        }
        let reason = r.reason.as_deref().or(r.preview.as_deref().map(|_| "no verdict")).unwrap_or("");
        writeln!(out, "{path}: {} {}: {}", r.rule_name, r.outcome.as_str(), reason.lines().next().unwrap_or(""))?;
    }
    let s = &report.summary;
    writeln!(
        out,
        "{path}: {} error(s), {} warning(s), {} info, {} skipped, {} incomplete, {} internal error(s)",
        s.errors, s.warnings, s.infos, s.skipped, s.incomplete, s.internal_errors
    )
}

fn serve(args: ServeArgs, err: &mut dyn Write) -> CmdResult {
    let (corpus, config_errors) = load_corpus(args.rules_dir.as_deref()).map_err(|e| e.to_string())?;
    let env = build_environment(args.policy.policy(), &args.llm.options(), args.github_api.as_deref())
        .map_err(|e| e.to_string())?;
    let state = server::AppState {
        corpus,
        env,
        config_errors,
    };
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("cannot serve on {addr}: {e}"))?;
        let _ = writeln!(err, "listening on http://{addr}");
        server::serve(listener, state).await.map_err(|e| e.to_string())
    })?;
    Ok(0)
}

fn list(filter: Option<&str>, rules_dir: Option<&Path>, format: Format, out: &mut dyn Write) -> CmdResult {
    let (corpus, _) = load_corpus(rules_dir).map_err(|e| e.to_string())?;
    let rules = corpus.list_rules(filter);
    let written = match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&rules).expect("summaries serialize")),
        Format::Text => rules.iter().try_for_each(|r| {
            let first = r.description.lines().next().unwrap_or("");
            writeln!(out, "{:<44} {:<8} {first}", r.name, r.severity.as_str())
        }),
    };
    written.map_err(|e| e.to_string())?;
    Ok(0)
}

/// 0 when every document in the file is a valid rule, 1 otherwise.
fn validate(file: &Path, format: Format, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let parsed = parse_rules(&text);
    let ok = !parsed.is_empty() && parsed.iter().all(|p| p.rule.is_some() && p.errors().next().is_none());
    let written = match format {
        Format::Json => {
            let docs: Vec<_> = parsed
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "rule": p.rule.as_ref().map(Rule::key),
                        "violations": p.violations,
                    })
                })
                .collect();
            writeln!(out, "{}", serde_json::json!({ "valid": ok, "documents": docs }))
        }
        Format::Text => (|| {
            for p in &parsed {
                for v in &p.violations {
                    let kind = if v.is_warning() { "warning" } else { "error" };
                    writeln!(out, "{}: {kind}: {v}", file.display())?;
                }
                if let (Some(rule), true) = (&p.rule, p.errors().next().is_none()) {
                    writeln!(out, "{}: ok: {}", file.display(), rule.key())?;
                }
            }
            Ok(())
        })(),
    };
    written.map_err(|e| e.to_string())?;
    Ok(if ok { 0 } else { 1 })
}

fn generate(
    idea: &str,
    model: Option<&str>,
    output: Option<&Path>,
    policy: &PolicyArgs,
    llm: &LlmArgs,
    out: &mut dyn Write,
) -> CmdResult {
    let env = build_environment(policy.policy(), &llm.options(), None).map_err(|e| e.to_string())?;
    if env.provider.is_live() && !env.policy.allow_net {
        return Err("rule generation needs network access to the live model (enable with --allow-net)".into());
    }
    let generated = generate_rule(&env.provider, idea, Catalog::builtin().schemas(), model).map_err(|e| e.to_string())?;
    let mut yaml = generated.yaml;
    if !yaml.ends_with('\n') {
        yaml.push('\n');
    }
    match output {
        Some(path) => std::fs::write(path, &yaml).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => out.write_all(yaml.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(0)
}

/// The built-in corpus with its load errors as strings.
pub fn builtin_corpus() -> (RuleCorpus, Vec<String>) {
    load_corpus(None).expect("built-in corpus needs no I/O")
}
