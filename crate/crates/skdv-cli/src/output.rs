//! Artifact staging, the run manifest and the human summary.
//!
//! Every file is first written as `<name>.partial`. [`Artifacts::commit`] renames them
//! all once the run has finished; a failed run leaves the `.partial` files behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Format used for every float in CSV output: 17 significant digits.
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Stage `name` with `contents`; visible as `name.partial` until commit.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(format!("{name}.partial"));
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.retain(|e| e.file != name);
        self.written.push(ArtifactEntry { file: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).context("serializing JSON")?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.written
    }

    /// Drop the `.partial` suffix of every staged file.
    pub fn commit(&self) -> Result<()> {
        for e in &self.written {
            let from = self.dir.join(format!("{}.partial", e.file));
            let to = self.dir.join(&e.file);
            fs::rename(&from, &to).with_context(|| format!("renaming {}", from.display()))?;
        }
        Ok(())
    }
}

/// One measured quantity against its claim.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// the claimed or predicted value the measurement is compared with
    pub claimed: f64,
    pub tolerance: f64,
    /// how `measured` is compared: `<=`, `>=`, `abs_diff<=`, `>`
    pub relation: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// `measured <= claimed + tolerance`
    pub fn at_most(name: impl Into<String>, measured: f64, claimed: f64, tolerance: f64) -> Self {
        let pass = measured <= claimed + tolerance;
        Check { name: name.into(), measured, claimed, tolerance, relation: "<=".into(), pass, note: None }
    }

    /// `|measured - claimed| <= tolerance`
    pub fn near(name: impl Into<String>, measured: f64, claimed: f64, tolerance: f64) -> Self {
        let pass = (measured - claimed).abs() <= tolerance;
        Check { name: name.into(), measured, claimed, tolerance, relation: "abs_diff<=".into(), pass, note: None }
    }

    /// `measured > claimed`
    pub fn above(name: impl Into<String>, measured: f64, claimed: f64) -> Self {
        let pass = measured > claimed;
        Check { name: name.into(), measured, claimed, tolerance: 0.0, relation: ">".into(), pass, note: None }
    }

    /// A yes/no outcome recorded as 1/0 against the expected value.
    pub fn boolean(name: impl Into<String>, measured: bool, expected: bool) -> Self {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        Check {
            name: name.into(),
            measured: b(measured),
            claimed: b(expected),
            tolerance: 0.0,
            relation: "==".into(),
            pass: measured == expected,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: &'a C,
    pub warnings: &'a [String],
    pub checks: &'a [Check],
    pub passed: bool,
    pub artifacts: &'a [ArtifactEntry],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

/// Six decimals, or scientific notation for tiny magnitudes.
fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

pub fn summary_text(command: &str, warnings: &[String], checks: &[Check]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "skdv {command}");
    for w in warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    if checks.is_empty() {
        let _ = writeln!(s, "  no checks requested");
    }
    for c in checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let _ = write!(
            s,
            "  {verdict} {}: measured {} vs claimed {} ({} tol {})",
            c.name,
            short(c.measured),
            short(c.claimed),
            c.relation,
            c.tolerance
        );
        if let Some(n) = &c.note {
            let _ = write!(s, " [{n}]");
        }
        s.push('\n');
    }
    let all = checks.iter().all(|c| c.pass);
    let _ = writeln!(s, "  overall: {}", if all { "PASS" } else { "FAIL" });
    s
}
