//! Translator adapters: the boundary to the external translation model.
//!
//! The wire contract for subprocess adapters: the command is invoked with
//! `--src <tag> --tgt <tag>` appended, receives source lines on stdin
//! (UTF-8, LF), writes exactly one hypothesis line per input line on stdout
//! and exits 0.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::lang::LanguageTag;

pub const DEFAULT_ADAPTER_TIMEOUT: Duration = Duration::from_secs(600);

/// Line-for-line translation: output line i is the translation of input
/// line i.
pub trait Translator: Sync {
    fn translate(
        &self,
        lines: &[String],
        src: LanguageTag,
        tgt: LanguageTag,
    ) -> Result<Vec<String>>;
}

/// Echoes its input unchanged. Useful as a null model in tests.
pub struct IdentityAdapter;

impl Translator for IdentityAdapter {
    fn translate(&self, lines: &[String], _: LanguageTag, _: LanguageTag) -> Result<Vec<String>> {
        Ok(lines.to_vec())
    }
}

/// Translates via an exact line table; lines without an entry pass through
/// unchanged.
#[derive(Debug, Default, Clone)]
pub struct LookupAdapter {
    table: HashMap<String, String>,
}

impl LookupAdapter {
    pub fn new(table: HashMap<String, String>) -> LookupAdapter {
        LookupAdapter { table }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> LookupAdapter {
        LookupAdapter {
            table: pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// The composition lookup(b) after lookup(a), matching a two-hop chain.
    pub fn compose(a: &LookupAdapter, b: &LookupAdapter) -> LookupAdapter {
        let table = a
            .table
            .iter()
            .map(|(k, mid)| (k.clone(), b.table.get(mid).cloned().unwrap_or_else(|| mid.clone())))
            .collect();
        LookupAdapter { table }
    }
}

impl Translator for LookupAdapter {
    fn translate(&self, lines: &[String], _: LanguageTag, _: LanguageTag) -> Result<Vec<String>> {
        Ok(lines.iter().map(|l| self.table.get(l).cloned().unwrap_or_else(|| l.clone())).collect())
    }
}

/// Reads pre-computed hypotheses from `<dir>/<SRC>-<TGT>.txt`.
pub struct DirectoryAdapter {
    dir: PathBuf,
}

impl DirectoryAdapter {
    pub fn new(dir: impl Into<PathBuf>) -> DirectoryAdapter {
        DirectoryAdapter { dir: dir.into() }
    }
}

impl Translator for DirectoryAdapter {
    fn translate(&self, lines: &[String], src: LanguageTag, tgt: LanguageTag) -> Result<Vec<String>> {
        let path = self.dir.join(format!("{}-{}.txt", src.code, tgt.code));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::adapter(format!("cannot read {}: {e}", path.display())))?;
        let out = crate::corpus::split_lines(&text);
        if out.len() != lines.len() {
            return Err(Error::adapter(format!(
                "{} has {} lines, expected {}",
                path.display(),
                out.len(),
                lines.len()
            )));
        }
        Ok(out)
    }
}

/// Spawns an external command per batch and speaks the stdin/stdout line
/// protocol described at module level.
pub struct SubprocessAdapter {
    command: Vec<String>,
    timeout: Duration,
}

impl SubprocessAdapter {
    /// `command` is the program followed by its fixed arguments.
    pub fn new(command: Vec<String>) -> SubprocessAdapter {
        SubprocessAdapter { command, timeout: DEFAULT_ADAPTER_TIMEOUT }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> SubprocessAdapter {
        self.timeout = timeout;
        self
    }
}

impl Translator for SubprocessAdapter {
    fn translate(&self, lines: &[String], src: LanguageTag, tgt: LanguageTag) -> Result<Vec<String>> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| Error::adapter("empty adapter command"))?;
        let mut child = Command::new(program)
            .args(args)
            .arg("--src")
            .arg(src.code.as_str())
            .arg("--tgt")
            .arg(tgt.code.as_str())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::adapter(format!("cannot spawn {program}: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let input: Vec<String> = lines.to_vec();
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            for line in &input {
                stdin.write_all(line.as_bytes())?;
                stdin.write_all(b"\n")?;
            }
            Ok(())
        });

        // watchdog kills the child when the batch deadline passes
        let child = Arc::new(Mutex::new(child));
        let timed_out = Arc::new(Mutex::new(false));
        let (watch_child, watch_flag) = (Arc::clone(&child), Arc::clone(&timed_out));
        let timeout = self.timeout;
        let (stop_tx, stop_rx) = std::sync::mpsc::channel::<()>();
        let watchdog = std::thread::spawn(move || {
            if stop_rx.recv_timeout(timeout).is_err() {
                *watch_flag.lock().unwrap() = true;
                let _ = watch_child.lock().unwrap().kill();
            }
        });

        let mut out = Vec::with_capacity(lines.len());
        let mut read_err = None;
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => out.push(l),
                Err(e) => {
                    read_err = Some(e);
                    break;
                }
            }
        }
        let _ = writer.join();
        let status = child.lock().unwrap().wait();
        let _ = stop_tx.send(());
        let _ = watchdog.join();

        if *timed_out.lock().unwrap() {
            return Err(Error::adapter(format!("timed out after {}s", timeout.as_secs())));
        }
        if let Some(e) = read_err {
            return Err(Error::adapter(format!("read failed: {e}")));
        }
        match status {
            Ok(s) if s.success() => {}
            Ok(s) => return Err(Error::adapter(format!("exited with {s}"))),
            Err(e) => return Err(Error::adapter(format!("wait failed: {e}"))),
        }
        if out.len() != lines.len() {
            return Err(Error::adapter(format!(
                "line count mismatch: sent {}, received {}",
                lines.len(),
                out.len()
            )));
        }
        Ok(out)
    }
}
