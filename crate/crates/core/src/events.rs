//! Newline-delimited event log.

use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Arrive,
    Inject,
    Decision,
    Grant,
    EnterJunction,
    ClearJunction,
    Exit,
    Message,
    Replan,
    DeadlockTie,
    Deadlock,
    Collision,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrive => "arrive",
            EventKind::Inject => "inject",
            EventKind::Decision => "decision",
            EventKind::Grant => "grant",
            EventKind::EnterJunction => "enter_junction",
            EventKind::ClearJunction => "clear_junction",
            EventKind::Exit => "exit",
            EventKind::Message => "message",
            EventKind::Replan => "replan",
            EventKind::DeadlockTie => "deadlock_tie",
            EventKind::Deadlock => "deadlock",
            EventKind::Collision => "collision",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub vehicle: Option<u32>,
    /// Entry-lane label, 1/3/5/7.
    pub lane: Option<u8>,
    pub s: f64,
    pub v: f64,
    pub detail: String,
}

impl fmt::Display for Event {
    /// Tab-separated: time, kind, vehicle, lane, s, v, detail.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = self.vehicle.map_or_else(|| "-".to_string(), |v| v.to_string());
        let lane = self.lane.map_or_else(|| "-".to_string(), |l| l.to_string());
        write!(
            f,
            "{:.1}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{}",
            self.time, self.kind, id, lane, self.s, self.v, self.detail
        )
    }
}

/// Event sink. When disabled, records are dropped but nothing else changes.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    enabled: bool,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        EventLog {
            enabled,
            events: Vec::new(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&mut self, event: Event) {
        if self.enabled {
            self.events.push(event);
        }
    }

    /// Builds the record lazily so disabled logs pay nothing for formatting.
    pub fn record(&mut self, make: impl FnOnce() -> Event) {
        if self.enabled {
            self.events.push(make());
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("log is utf-8")
    }
}
