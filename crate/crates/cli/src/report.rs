use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;

/// Human text on stdout, or one JSON object per line in report mode.
/// Progress always goes to stderr.
#[derive(Debug)]
pub struct Reporter {
    pub json: bool,
    quiet: bool,
}

impl Reporter {
    pub fn new(json: bool) -> Self {
        Reporter { json, quiet: false }
    }

    /// Emits nothing; for library callers and tests.
    pub fn silent() -> Self {
        Reporter { json: false, quiet: true }
    }

    pub fn emit(&self, human: impl FnOnce() -> String, record: impl FnOnce() -> Value) {
        if self.quiet {
            return;
        }
        let mut out = std::io::stdout().lock();
        let _ = if self.json {
            writeln!(out, "{}", record())
        } else {
            writeln!(out, "{}", human())
        };
    }

    pub fn warn(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    pub fn progress(&self, total: usize) -> Progress<'_> {
        Progress {
            reporter: self,
            total,
            state: Mutex::new((0, Instant::now())),
            start: Instant::now(),
        }
    }
}

/// Periodic "done/total, rate, ETA" lines.
pub struct Progress<'a> {
    reporter: &'a Reporter,
    total: usize,
    state: Mutex<(usize, Instant)>,
    start: Instant,
}

const PERIOD: Duration = Duration::from_secs(5);

impl Progress<'_> {
    pub fn tick(&self) {
        let mut s = self.state.lock().unwrap();
        s.0 += 1;
        if s.0 == self.total || s.1.elapsed() >= PERIOD {
            s.1 = Instant::now();
            let secs = self.start.elapsed().as_secs_f64().max(1e-9);
            let rate = s.0 as f64 / secs;
            let eta = (self.total - s.0) as f64 / rate.max(1e-9);
            self.reporter.warn(&format!(
                "progress: {}/{} images, {rate:.2} images/s, ETA {eta:.0} s",
                s.0, self.total
            ));
        }
    }
}
