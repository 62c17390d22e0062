//! Report rows and table rendering shared by the subcommands.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// One verification record, serialized exactly in this shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub lemma: String,
    pub parameters: String,
    pub expected: String,
    pub got: String,
    pub exact: bool,
    pub elapsed_ms: u64,
    pub pass: bool,
}

pub struct ReportSink {
    pub rows: Vec<VerifyReport>,
    stable: bool,
}

impl ReportSink {
    pub fn new(stable: bool) -> Self {
        ReportSink { rows: Vec::new(), stable }
    }

    pub fn record<F>(&mut self, lemma: &str, parameters: String, f: F)
    where
        F: FnOnce() -> anyhow::Result<(String, String, bool, bool)>,
    {
        let start = Instant::now();
        let (expected, got, exact, pass) = match f() {
            Ok(t) => t,
            Err(e) => ("ok".to_string(), format!("error: {e}"), false, false),
        };
        let elapsed_ms = if self.stable { 0 } else { start.elapsed().as_millis() as u64 };
        self.rows.push(VerifyReport {
            lemma: lemma.to_string(),
            parameters,
            expected,
            got,
            exact,
            elapsed_ms,
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn print_table(&self) {
        println!(
            "{:<24} {:<40} {:>6} {:>6} {:>8}",
            "check", "parameters", "exact", "pass", "ms"
        );
        println!("{}", "-".repeat(90));
        for r in &self.rows {
            println!(
                "{:<24} {:<40} {:>6} {:>6} {:>8}",
                r.lemma,
                truncate(&r.parameters, 40),
                r.exact,
                if r.pass { "ok" } else { "FAIL" },
                r.elapsed_ms
            );
            if !r.pass {
                println!("    expected: {}", r.expected);
                println!("    got:      {}", r.got);
            }
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        println!("{}", "-".repeat(90));
        println!(
            "{} checks, {} failed",
            self.rows.len(),
            failed
        );
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!("{}...", &s[..n - 3])
    }
}

/// Write a JSON document to `--out`, if given.
pub fn write_json(out: &Option<std::path::PathBuf>, value: &serde_json::Value) -> anyhow::Result<()> {
    if let Some(path) = out {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}
