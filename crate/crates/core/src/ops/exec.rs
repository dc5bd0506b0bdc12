use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use regex::Regex;
use serde::Deserialize;
use serde_json::{json, Value};
use wait_timeout::ChildExt;

use super::{ms, parse_params, source_doc, InputDecl, OpError, Operator, Params};
use crate::dsl::{field, FieldType, OperatorSchema};
use crate::engine::{ExecutionContext, Finding, PipelineValue, ValueKind};
use crate::md::{NodeKind, SourceSpan};

const STDERR_HEAD: usize = 200;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecParams {
    #[serde(default = "default_timeout")]
    timeout: u64,
    filter: Option<String>,
}

fn default_timeout() -> u64 {
    10_000
}

pub struct Execute;

impl Operator for Execute {
    fn schema(&self) -> OperatorSchema {
        OperatorSchema::new(
            "execute",
            "Runs inline commands found in the README. Prefers the previous extract (target: inlineCode) output when available; otherwise scans backtick code spans. Requires command execution to be enabled.",
            "Extraction(inlineCode) | Document -> Diagnostics",
            vec![
                field("timeout", FieldType::Integer, Some(json!(10_000)), "Per-command timeout in milliseconds."),
                field("filter", FieldType::Regex, Some(Value::Null), "Only run commands matching this regular expression."),
            ],
            &["operator: execute\ntimeout: 5000\nfilter: '^(echo|true) '"],
        )
    }

    fn input(&self, _: &Params) -> InputDecl {
        InputDecl::SOURCE
    }

    fn output(&self, _: &Params, _: Option<ValueKind>) -> Option<ValueKind> {
        Some(ValueKind::Diagnostics)
    }

    fn run(
        &self,
        ctx: &mut ExecutionContext,
        params: &Params,
        input: Option<&PipelineValue>,
    ) -> Result<PipelineValue, OpError> {
        let p: ExecParams = parse_params(params)?;
        let filter = p
            .filter
            .as_deref()
            .map(Regex::new)
            .transpose()
            .map_err(|e| OpError::Config(format!("invalid filter: {e}")))?;
        let mut commands: Vec<(String, SourceSpan)> = match input {
            Some(PipelineValue::Extraction(ex)) if ex.target == "inlineCode" => {
                ex.items().into_iter().map(|m| (m.text.clone(), m.span)).collect()
            }
            _ => source_doc(ctx, input)
                .ast()
                .descendants_of_kind(NodeKind::InlineCode)
                .map(|n| (n.attr("value").unwrap_or_default().to_string(), n.span))
                .collect(),
        };
        commands.retain(|(c, _)| !c.trim().is_empty() && filter.as_ref().is_none_or(|re| re.is_match(c)));
        if commands.is_empty() {
            ctx.note("no commands found");
            return Ok(PipelineValue::Diagnostics(Vec::new()));
        }
        if !ctx.env.policy.allow_exec {
            return Err(OpError::Disabled("command execution is disabled (enable with --allow-exec)".into()));
        }

        let scratch;
        let dir: &Path = match &ctx.env.working_dir {
            Some(d) => d,
            None => {
                scratch = tempfile::tempdir().map_err(|e| OpError::Failed(format!("cannot create work dir: {e}")))?;
                scratch.path()
            }
        };
        let mut diagnostics = Vec::new();
        for (cmd, span) in commands {
            let timeout = ctx.clamp(ms(p.timeout));
            let message = match run_command(&cmd, dir, timeout) {
                Ok(RunOutcome::Exited(0, _)) => continue,
                Ok(RunOutcome::Exited(code, stderr)) => {
                    let mut m = format!("Command `{cmd}` exited with status {code}");
                    if !stderr.is_empty() {
                        m.push_str(&format!(": {stderr}"));
                    }
                    m
                }
                Ok(RunOutcome::Signaled) => format!("Command `{cmd}` was terminated by a signal"),
                Ok(RunOutcome::TimedOut) => format!("Command `{cmd}` timed out after {} ms", timeout.as_millis()),
                Err(e) => format!("Command `{cmd}` could not be started: {e}"),
            };
            diagnostics.push(ctx.diagnostic(Finding::new(message).at(span).text(cmd.clone())));
        }
        Ok(PipelineValue::Diagnostics(diagnostics))
    }
}

enum RunOutcome {
    Exited(i32, String),
    Signaled,
    TimedOut,
}

/// Runs `cmd` through the platform shell with a scrubbed environment,
/// killing it at `timeout`.
fn run_command(cmd: &str, dir: &Path, timeout: Duration) -> std::io::Result<RunOutcome> {
    let mut command = if cfg!(windows) {
        let mut c = Command::new("cmd");
        c.arg("/C").arg(cmd);
        c
    } else {
        let mut c = Command::new("sh");
        c.arg("-c").arg(cmd);
        c
    };
    command
        .current_dir(dir)
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_default())
        .env("HOME", dir)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped());
    let mut child = command.spawn()?;
    let mut stderr = child.stderr.take().expect("piped stderr");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });
    let status = match child.wait_timeout(timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(RunOutcome::TimedOut);
        }
    };
    let err = reader.join().unwrap_or_default();
    let text = String::from_utf8_lossy(&err);
    let head: String = text.trim().chars().take(STDERR_HEAD).collect();
    Ok(match status.code() {
        Some(code) => RunOutcome::Exited(code, head),
        None => RunOutcome::Signaled,
    })
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_timeouts() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run_command("true", dir.path(), ms(5000)).unwrap(), RunOutcome::Exited(0, _)));
        match run_command("echo boom >&2; exit 3", dir.path(), ms(5000)).unwrap() {
            RunOutcome::Exited(3, err) => assert_eq!(err, "boom"),
            _ => panic!("expected exit 3"),
        }
        assert!(matches!(run_command("sleep 5", dir.path(), ms(100)).unwrap(), RunOutcome::TimedOut));
    }
}
