use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub seq: u64,
    pub source: String,
    pub event: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

impl LogEvent {
    pub fn new(source: &str, event: &str, data: Value) -> Self {
        Self {
            seq: 0,
            source: source.to_string(),
            event: event.to_string(),
            data,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub events: Vec<LogEvent>,
}

impl SessionLog {
    pub fn push(&mut self, mut event: LogEvent) {
        event.seq = self.events.len() as u64;
        self.events.push(event);
    }

    pub fn extend(&mut self, events: impl IntoIterator<Item = LogEvent>) {
        for e in events {
            self.push(e);
        }
    }

    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("log event serializes"));
            s.push('\n');
        }
        s
    }

    pub fn find(&self, event: &str) -> Option<&LogEvent> {
        self.events.iter().find(|e| e.event == event)
    }
}
