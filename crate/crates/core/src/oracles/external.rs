//! Oracle adapter for an external executable under test.

use std::io::Read;
use std::process::{Command, Stdio};
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{Oracle, OracleError, OracleStats, Verdict};
use crate::geometry::Point;

/// How the external program's outcome maps to a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailConvention {
    /// Non-zero exit status means failure.
    ExitStatus,
    /// A whitespace-separated `FAIL` token on standard output means failure.
    StdoutToken,
    /// Either of the above.
    Either,
}

impl std::str::FromStr for FailConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exit" | "exit-status" => Ok(FailConvention::ExitStatus),
            "stdout" | "stdout-token" => Ok(FailConvention::StdoutToken),
            "either" | "any" => Ok(FailConvention::Either),
            other => Err(format!("unknown fail convention `{other}`")),
        }
    }
}

/// `prog {x1} {x2} ... {xd}`: program plus argument templates. Each
/// placeholder `{xi}` (1-based) is replaced by coordinate `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    program: String,
    args: Vec<String>,
    dimension: usize,
}

impl CommandTemplate {
    /// Splits `template` on whitespace. No shell quoting is interpreted.
    pub fn parse(template: &str, dimension: usize) -> Result<Self, OracleError> {
        let parts: Vec<String> = template.split_whitespace().map(str::to_owned).collect();
        Self::from_parts(parts, dimension)
    }

    pub fn from_parts(parts: Vec<String>, dimension: usize) -> Result<Self, OracleError> {
        let mut parts = parts.into_iter();
        let program = parts
            .next()
            .ok_or_else(|| OracleError::InvalidTemplate("empty command".into()))?;
        let args: Vec<String> = parts.collect();
        let mut seen = vec![false; dimension];
        for arg in std::iter::once(&program).chain(&args) {
            for idx in placeholders(arg)? {
                if idx == 0 || idx > dimension {
                    return Err(OracleError::InvalidTemplate(format!(
                        "placeholder {{x{idx}}} outside 1..={dimension}"
                    )));
                }
                seen[idx - 1] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(OracleError::InvalidTemplate(format!(
                "missing placeholder {{x{}}}",
                missing + 1
            )));
        }
        Ok(CommandTemplate {
            program,
            args,
            dimension,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn program(&self) -> &str {
        &self.program
    }

    /// Arguments with every placeholder substituted.
    pub fn render_args(&self, p: &Point) -> Vec<String> {
        let texts: Vec<String> = p.coords().iter().map(|x| format_coordinate(*x)).collect();
        self.args
            .iter()
            .map(|arg| {
                // substitute from the highest index down so {x1} never
                // clobbers the prefix of {x10}
                let mut out = arg.clone();
                for (i, t) in texts.iter().enumerate().rev() {
                    out = out.replace(&format!("{{x{}}}", i + 1), t);
                }
                out
            })
            .collect()
    }
}

fn placeholders(arg: &str) -> Result<Vec<usize>, OracleError> {
    let mut out = Vec::new();
    let mut rest = arg;
    while let Some(start) = rest.find("{x") {
        let tail = &rest[start + 2..];
        let end = tail.find('}').ok_or_else(|| {
            OracleError::InvalidTemplate(format!("unterminated placeholder in `{arg}`"))
        })?;
        let idx: usize = tail[..end].parse().map_err(|_| {
            OracleError::InvalidTemplate(format!("bad placeholder `{{x{}}}`", &tail[..end]))
        })?;
        out.push(idx);
        rest = &tail[end + 1..];
    }
    Ok(out)
}

/// Decimal text with 17 significant digits, which round-trips any `f64`.
/// Positional notation is used for exponents in `-5..17`, scientific
/// notation otherwise.
pub fn format_coordinate(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .expect("formatted exponent");
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

/// Runs a user-supplied program once per probe.
pub struct ExternalOracle {
    template: CommandTemplate,
    convention: FailConvention,
    timeout: Option<Duration>,
    stats: OracleStats,
    timeouts: u64,
}

impl ExternalOracle {
    pub fn new(
        template: CommandTemplate,
        convention: FailConvention,
        timeout: Option<Duration>,
    ) -> Self {
        ExternalOracle {
            template,
            convention,
            timeout,
            stats: OracleStats::default(),
            timeouts: 0,
        }
    }

    /// Probes that hit the timeout (each counted as `Pass`).
    pub fn timeouts(&self) -> u64 {
        self.timeouts
    }

    fn run(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        let args = self.template.render_args(p);
        let unavailable = |source| OracleError::Unavailable {
            program: self.template.program.clone(),
            source,
        };
        let mut child = Command::new(&self.template.program)
            .args(&args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(unavailable)?;

        let mut stdout = child.stdout.take().expect("stdout piped");
        let reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });

        let status = match self.timeout {
            Some(limit) => match child.wait_timeout(limit).map_err(unavailable)? {
                Some(status) => Some(status),
                None => {
                    let _ = child.kill();
                    let _ = child.wait();
                    None
                }
            },
            None => Some(child.wait().map_err(unavailable)?),
        };
        let output = reader.join().unwrap_or_default();

        let Some(status) = status else {
            self.timeouts += 1;
            warn!(
                "external oracle timed out after {:?} on {:?}; counting as pass",
                self.timeout.unwrap_or_default(),
                args
            );
            return Ok(Verdict::Pass);
        };
        let exit_fail = !status.success();
        let token_fail = output.split_whitespace().any(|t| t == "FAIL");
        let fail = match self.convention {
            FailConvention::ExitStatus => exit_fail,
            FailConvention::StdoutToken => token_fail,
            FailConvention::Either => exit_fail || token_fail,
        };
        Ok(if fail { Verdict::Fail } else { Verdict::Pass })
    }
}

impl Oracle for ExternalOracle {
    fn dimension(&self) -> usize {
        self.template.dimension
    }

    fn verdict(&mut self, p: &Point) -> Result<Verdict, OracleError> {
        if p.dim() != self.template.dimension {
            return Err(OracleError::DimensionMismatch {
                expected: self.template.dimension,
                found: p.dim(),
            });
        }
        let v = self.run(p)?;
        self.stats.record(v);
        Ok(v)
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }
}
