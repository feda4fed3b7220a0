use std::io::Write;

use crate::{Cli, CliError, Command};

/// Ordered `key=value` lines plus free-form notes.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub violation: bool,
}

impl Report {
    pub fn kv(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Records a failed contract; the run exits with code 1.
    pub fn violate(&mut self, what: impl Into<String>) {
        self.violation = true;
        self.notes.push(format!("contract violated: {}", what.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.violation)
    }

    pub fn machine_text(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub(crate) fn emit(&self, cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
        let text = self.machine_text();
        out.write_all(text.as_bytes())?;
        for n in &self.notes {
            writeln!(err, "# {n}")?;
        }
        let artifact = matches!(cli.command, Command::Transform(_) | Command::Wavefront(_));
        if let (Some(path), false) = (&cli.out, artifact) {
            std::fs::write(path, text).map_err(|err| CliError::File { path: path.clone(), err })?;
        }
        Ok(())
    }
}

/// Shortest round-trip rendering; deterministic across runs and platforms.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_keep_insertion_order() {
        let mut r = Report::default();
        r.kv("b", 2);
        r.kv("a", "x");
        assert_eq!(r.machine_text(), "b=2\na=x\n");
        assert_eq!(r.get("a"), Some("x"));
        assert_eq!(r.exit_code(), 0);
        r.violate("demo");
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, -3.25, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
