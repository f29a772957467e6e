//! Execution trace: a flat, append-only record of what the machine did.
//!
//! Every event carries the wall-clock time in nanoseconds, a category,
//! and a list of key=value fields. Rendering is one event per line,
//! tab-separated, so traces from two runs can be compared byte for byte.

use std::fmt::Display;

/// Subsystem that produced an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceCategory {
    /// Clock ticks and high-precision alarm firings.
    Tick,
    /// Interrupt controller activity: raise, deliver, complete.
    Irq,
    /// Scheduling: window starts, dispatches, preemptions, releases.
    Sched,
    /// System call entry and return.
    Syscall,
    /// Application service calls and their return codes.
    Apex,
    /// Partition mode and lock level changes.
    Mode,
    /// Health monitor invocations (recorded, not acted on).
    Hm,
    /// Anomalies: refused calls, allocation failures.
    Fault,
}

impl TraceCategory {
    pub fn name(&self) -> &'static str {
        match self {
            TraceCategory::Tick => "TICK",
            TraceCategory::Irq => "IRQ",
            TraceCategory::Sched => "SCHED",
            TraceCategory::Syscall => "SYSCALL",
            TraceCategory::Apex => "APEX",
            TraceCategory::Mode => "MODE",
            TraceCategory::Hm => "HM",
            TraceCategory::Fault => "FAULT",
        }
    }
}

/// One trace event.
#[derive(Clone, Debug)]
pub struct TraceEvent {
    /// Wall-clock time in nanoseconds since power-on.
    pub time: u64,
    pub category: TraceCategory,
    pub fields: Vec<(String, String)>,
}

impl TraceEvent {
    /// Render as `time<TAB>category<TAB>key=value<TAB>...`.
    pub fn line(&self) -> String {
        let mut out = format!("{}\t{}", self.time, self.category.name());
        for (key, value) in &self.fields {
            out.push('\t');
            out.push_str(key);
            out.push('=');
            out.push_str(value);
        }
        out
    }
}

/// Helper for building field lists: `kv("process", 3)`.
pub fn kv(key: &str, value: impl Display) -> (String, String) {
    (key.to_string(), value.to_string())
}

/// The accumulated trace of one run.
#[derive(Debug, Default)]
pub struct TraceLog {
    events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn new() -> Self {
        TraceLog::default()
    }

    pub fn emit(&mut self, time: u64, category: TraceCategory, fields: Vec<(String, String)>) {
        self.events.push(TraceEvent {
            time,
            category,
            fields,
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The whole trace as text, one event per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.line());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_tab_separated_key_value_pairs() {
        let mut log = TraceLog::new();
        log.emit(
            1500,
            TraceCategory::Sched,
            vec![kv("partition", 2), kv("process", "idle")],
        );
        assert_eq!(log.render(), "1500\tSCHED\tpartition=2\tprocess=idle\n");
    }

    #[test]
    fn renders_in_emission_order() {
        let mut log = TraceLog::new();
        log.emit(5, TraceCategory::Tick, vec![kv("count", 1)]);
        log.emit(5, TraceCategory::Irq, vec![kv("line", 0)]);
        let text = log.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("TICK"));
        assert!(lines[1].contains("IRQ"));
    }
}
