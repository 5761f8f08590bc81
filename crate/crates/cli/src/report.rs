use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }

    pub fn of(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub status: Status,
    /// Key facts, rendered one per line in the text report.
    pub facts: Vec<(String, Value)>,
    pub messages: Vec<String>,
}

impl Section {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        Section { name: name.into(), status, facts: Vec::new(), messages: Vec::new() }
    }

    pub fn fact(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.facts.push((key.to_string(), v.into()));
        self
    }

    pub fn messages(mut self, ms: impl IntoIterator<Item = String>) -> Self {
        self.messages.extend(ms);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub input: Option<String>,
    pub status: Status,
    pub sections: Vec<Section>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str, input: Option<String>) -> Self {
        Report { command: command.to_string(), input, status: Status::Pass, sections: Vec::new(), artifacts: Vec::new() }
    }

    pub fn push(&mut self, s: Section) {
        self.status = self.status.and(s.status);
        self.sections.push(s);
    }

    pub fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        match &self.input {
            Some(i) => out.push_str(&format!("{} {}: {}\n", self.command, i, self.status.label())),
            None => out.push_str(&format!("{}: {}\n", self.command, self.status.label())),
        }
        for s in &self.sections {
            out.push_str(&format!("  [{}] {}\n", s.status.label(), s.name));
            for (k, v) in &s.facts {
                let v = match v {
                    Value::String(x) => x.clone(),
                    other => other.to_string(),
                };
                out.push_str(&format!("      {k}: {v}\n"));
            }
            for m in &s.messages {
                out.push_str(&format!("      - {m}\n"));
            }
        }
        for a in &self.artifacts {
            out.push_str(&format!("  wrote {a}\n"));
        }
        out
    }
}
