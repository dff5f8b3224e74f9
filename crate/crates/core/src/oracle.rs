//! The party holding the hidden target, queried once per iteration.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use num_bigint::BigUint;
use num_traits::Num;
use thiserror::Error;

use crate::functionalities::Functionality;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("oracle protocol: {0}")]
    Protocol(String),
    #[error("cannot start oracle {cmd:?}: {reason}")]
    Launch { cmd: String, reason: String },
}

pub trait Oracle {
    fn query(&mut self, chosen: &BigUint) -> Result<BigUint, OracleError>;
}

/// Evaluates the functionality's reference implementation in-process.
pub struct LocalOracle {
    func: Functionality,
    target: BigUint,
    pub calls: usize,
}

impl LocalOracle {
    pub fn new(func: Functionality, target: BigUint) -> Self {
        LocalOracle { func, target, calls: 0 }
    }

    pub fn target(&self) -> &BigUint {
        &self.target
    }
}

impl Oracle for LocalOracle {
    fn query(&mut self, chosen: &BigUint) -> Result<BigUint, OracleError> {
        self.calls += 1;
        Ok(self.func.eval(chosen, &self.target))
    }
}

/// Talks to a child process: one lowercase-hex chosen value per line out,
/// one hex result per line back.
pub struct SubprocessOracle {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl SubprocessOracle {
    pub fn spawn(argv: &[String]) -> Result<Self, OracleError> {
        let (prog, args) = argv.split_first().ok_or_else(|| OracleError::Launch {
            cmd: String::new(),
            reason: "empty command".into(),
        })?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| OracleError::Launch {
                cmd: argv.join(" "),
                reason: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessOracle { child, stdin, stdout })
    }
}

impl Oracle for SubprocessOracle {
    fn query(&mut self, chosen: &BigUint) -> Result<BigUint, OracleError> {
        writeln!(self.stdin, "{chosen:x}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(OracleError::Protocol("oracle closed its output".into()));
        }
        parse_hex(line.trim()).ok_or_else(|| OracleError::Protocol(format!("not a hex value: {:?}", line.trim())))
    }
}

impl Drop for SubprocessOracle {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn parse_hex(s: &str) -> Option<BigUint> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    if s.is_empty() {
        return None;
    }
    BigUint::from_str_radix(s, 16).ok()
}

/// Serves the line protocol for `func` with a fixed target until EOF.
pub fn serve(
    func: &Functionality,
    target: &BigUint,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<(), OracleError> {
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let c = parse_hex(line).ok_or_else(|| OracleError::Protocol(format!("not a hex value: {line:?}")))?;
        writeln!(output, "{:x}", func.eval(&c, target))?;
        output.flush()?;
    }
    Ok(())
}
