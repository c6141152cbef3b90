//! Replayable protocol transcripts.
//!
//! A transcript is the ordered event log of one protocol run: register
//! creations, operator applications, register transfers, classical
//! broadcasts, and measurements. Subprotocol runs (the vote embedded in
//! an LCM round) nest as child transcripts so each level's transfer and
//! operation counts stay meaningful on their own.
//!
//! # Line format
//!
//! [`Transcript::to_tsv`] emits one event per line with tab-separated
//! fields, the event kind first:
//!
//! ```text
//! protocol <name>                     header, always the first line
//! create <party> <register> <qubits>  register enters <party>'s custody
//! apply <party> <op> <reg,reg,...>    <party> applies operator <op>
//! transfer <from> <to> <register> <qubits>
//! broadcast <party> <label> <value>   classical message to all parties
//! measure <party> <register> <outcome>
//! child_begin <name> / child_end      nested subprotocol run
//! ```
//!
//! Every field is ASCII; register names and labels may not contain tabs,
//! newlines, or commas. The format is stable and parsed back by
//! [`Transcript::from_tsv`].
//!
//! A register's creation counts as handing it to the channel custody of
//! its creator, so a traveling register that visits every party produces
//! one more transfer than the ring has edges; cost accounting counts
//! transfers, and this convention makes the total n+1 for an n-party
//! ring.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// One step of a protocol execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// `party` brings a fresh register into existence and custody.
    Create {
        party: usize,
        register: String,
        qubits: u32,
    },
    /// `party` applies operator `op` to the listed registers.
    Apply {
        party: usize,
        op: String,
        registers: Vec<String>,
    },
    /// Register custody moves from one party to another.
    Transfer {
        from: usize,
        to: usize,
        register: String,
        qubits: u32,
    },
    /// Classical message from `party` to everyone.
    Broadcast {
        party: usize,
        label: String,
        value: u64,
    },
    /// `party` reads a register out.
    Measure {
        party: usize,
        register: String,
        outcome: u64,
    },
}

/// Ordered event log of one protocol run, with nested subprotocol runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    /// Protocol name, e.g. "summation", "vote", "lcm".
    pub protocol: String,
    /// This run's own events, in execution order.
    pub events: Vec<Event>,
    /// Embedded subprotocol runs, in start order.
    pub children: Vec<Transcript>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {line}: expected {expected} tab-separated fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: unknown event kind {kind:?}")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: field {field:?} is not a valid number")]
    BadNumber { line: usize, field: String },
    #[error("line {line}: transcript must start with a protocol header")]
    MissingHeader { line: usize },
    #[error("line {line}: child_end without a matching child_begin")]
    UnbalancedChildEnd { line: usize },
    #[error("transcript ended inside an unclosed child block")]
    UnclosedChild,
    #[error("name {0:?} contains a reserved character (tab, newline, or comma)")]
    BadName(String),
    #[error("event {index}: register {register:?} used before creation")]
    UnknownRegister { index: usize, register: String },
    #[error("event {index}: register {register:?} created twice")]
    DuplicateCreate { index: usize, register: String },
    #[error(
        "event {index}: party {party} acted on register {register:?} owned by party {owner}"
    )]
    NotOwner {
        index: usize,
        party: usize,
        register: String,
        owner: usize,
    },
    #[error("event {index}: transfer of {register:?} claims {claimed} qubits, created with {actual}")]
    QubitMismatch {
        index: usize,
        register: String,
        claimed: u32,
        actual: u32,
    },
}

fn check_name(name: &str) -> Result<(), TranscriptError> {
    if name.is_empty() || name.contains(['\t', '\n', ',']) {
        return Err(TranscriptError::BadName(name.to_string()));
    }
    Ok(())
}

impl Transcript {
    pub fn new(protocol: &str) -> Self {
        Self {
            protocol: protocol.to_string(),
            events: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    /// Number of transfer events in this run (children not included).
    pub fn transfer_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Transfer { .. }))
            .count()
    }

    /// Total qubits moved by this run's transfers (children not included).
    pub fn transfer_qubits(&self) -> u64 {
        self.events
            .iter()
            .map(|e| match e {
                Event::Transfer { qubits, .. } => *qubits as u64,
                _ => 0,
            })
            .sum()
    }

    /// Number of operator applications in this run (children not included).
    pub fn apply_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Apply { .. }))
            .count()
    }

    /// Number of measurements in this run (children not included).
    pub fn measure_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Measure { .. }))
            .count()
    }

    /// Number of broadcasts carrying `label` (children not included).
    pub fn broadcast_count(&self, label: &str) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Broadcast { label: l, .. } if l == label))
            .count()
    }

    /// All transcripts of the tree, this one first, depth first.
    pub fn walk(&self) -> Vec<&Transcript> {
        let mut out = vec![self];
        for child in &self.children {
            out.extend(child.walk());
        }
        out
    }

    /// Serializes the whole tree to the line format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        self.write_tsv(&mut out);
        out
    }

    fn write_tsv(&self, out: &mut String) {
        use fmt::Write;
        writeln!(out, "protocol\t{}", self.protocol).unwrap();
        self.write_body(out);
    }

    fn write_body(&self, out: &mut String) {
        use fmt::Write;
        for event in &self.events {
            match event {
                Event::Create {
                    party,
                    register,
                    qubits,
                } => writeln!(out, "create\t{party}\t{register}\t{qubits}").unwrap(),
                Event::Apply {
                    party,
                    op,
                    registers,
                } => writeln!(out, "apply\t{party}\t{op}\t{}", registers.join(",")).unwrap(),
                Event::Transfer {
                    from,
                    to,
                    register,
                    qubits,
                } => writeln!(out, "transfer\t{from}\t{to}\t{register}\t{qubits}").unwrap(),
                Event::Broadcast {
                    party,
                    label,
                    value,
                } => writeln!(out, "broadcast\t{party}\t{label}\t{value}").unwrap(),
                Event::Measure {
                    party,
                    register,
                    outcome,
                } => writeln!(out, "measure\t{party}\t{register}\t{outcome}").unwrap(),
            }
        }
        for child in &self.children {
            use fmt::Write;
            writeln!(out, "child_begin\t{}", child.protocol).unwrap();
            child.write_body(out);
            writeln!(out, "child_end").unwrap();
        }
    }

    /// Parses the line format back into a transcript tree.
    pub fn from_tsv(text: &str) -> Result<Self, TranscriptError> {
        let mut root: Option<Transcript> = None;
        let mut stack: Vec<Transcript> = Vec::new();

        fn parse_num<T: std::str::FromStr>(
            line: usize,
            field: &str,
        ) -> Result<T, TranscriptError> {
            field.parse().map_err(|_| TranscriptError::BadNumber {
                line,
                field: field.to_string(),
            })
        }

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let expect = |n: usize| -> Result<(), TranscriptError> {
                if fields.len() != n {
                    Err(TranscriptError::FieldCount {
                        line,
                        expected: n,
                        got: fields.len(),
                    })
                } else {
                    Ok(())
                }
            };
            if root.is_none() {
                if fields[0] != "protocol" {
                    return Err(TranscriptError::MissingHeader { line });
                }
                expect(2)?;
                root = Some(Transcript::new(fields[1]));
                continue;
            }
            let event = match fields[0] {
                "create" => {
                    expect(4)?;
                    Some(Event::Create {
                        party: parse_num(line, fields[1])?,
                        register: fields[2].to_string(),
                        qubits: parse_num(line, fields[3])?,
                    })
                }
                "apply" => {
                    expect(4)?;
                    Some(Event::Apply {
                        party: parse_num(line, fields[1])?,
                        op: fields[2].to_string(),
                        registers: fields[3].split(',').map(str::to_string).collect(),
                    })
                }
                "transfer" => {
                    expect(5)?;
                    Some(Event::Transfer {
                        from: parse_num(line, fields[1])?,
                        to: parse_num(line, fields[2])?,
                        register: fields[3].to_string(),
                        qubits: parse_num(line, fields[4])?,
                    })
                }
                "broadcast" => {
                    expect(4)?;
                    Some(Event::Broadcast {
                        party: parse_num(line, fields[1])?,
                        label: fields[2].to_string(),
                        value: parse_num(line, fields[3])?,
                    })
                }
                "measure" => {
                    expect(4)?;
                    Some(Event::Measure {
                        party: parse_num(line, fields[1])?,
                        register: fields[2].to_string(),
                        outcome: parse_num(line, fields[3])?,
                    })
                }
                "child_begin" => {
                    expect(2)?;
                    stack.push(Transcript::new(fields[1]));
                    None
                }
                "child_end" => {
                    expect(1)?;
                    let done = stack
                        .pop()
                        .ok_or(TranscriptError::UnbalancedChildEnd { line })?;
                    match stack.last_mut() {
                        Some(parent) => parent.children.push(done),
                        None => root.as_mut().unwrap().children.push(done),
                    }
                    None
                }
                kind => {
                    return Err(TranscriptError::UnknownKind {
                        line,
                        kind: kind.to_string(),
                    })
                }
            };
            if let Some(event) = event {
                let target = stack.last_mut().or(root.as_mut()).unwrap();
                target.events.push(event);
            }
        }
        if !stack.is_empty() {
            return Err(TranscriptError::UnclosedChild);
        }
        root.ok_or(TranscriptError::MissingHeader { line: 1 })
    }

    /// Checks the ownership discipline: every register is created once,
    /// operators and measurements touch only registers the acting party
    /// currently holds, and transfers move custody from the current
    /// holder with the right qubit count. Children are checked in their
    /// own register scopes.
    pub fn validate(&self) -> Result<(), TranscriptError> {
        check_name(&self.protocol)?;
        let mut owners: std::collections::BTreeMap<&str, (usize, u32)> =
            std::collections::BTreeMap::new();
        for (index, event) in self.events.iter().enumerate() {
            match event {
                Event::Create {
                    party,
                    register,
                    qubits,
                } => {
                    check_name(register)?;
                    if owners.contains_key(register.as_str()) {
                        return Err(TranscriptError::DuplicateCreate {
                            index,
                            register: register.clone(),
                        });
                    }
                    owners.insert(register, (*party, *qubits));
                }
                Event::Apply {
                    party,
                    op,
                    registers,
                } => {
                    check_name(op)?;
                    for register in registers {
                        let (owner, _) = *owners.get(register.as_str()).ok_or_else(|| {
                            TranscriptError::UnknownRegister {
                                index,
                                register: register.clone(),
                            }
                        })?;
                        if owner != *party {
                            return Err(TranscriptError::NotOwner {
                                index,
                                party: *party,
                                register: register.clone(),
                                owner,
                            });
                        }
                    }
                }
                Event::Transfer {
                    from,
                    to,
                    register,
                    qubits,
                } => {
                    let entry = owners.get_mut(register.as_str()).ok_or_else(|| {
                        TranscriptError::UnknownRegister {
                            index,
                            register: register.clone(),
                        }
                    })?;
                    if entry.0 != *from {
                        return Err(TranscriptError::NotOwner {
                            index,
                            party: *from,
                            register: register.clone(),
                            owner: entry.0,
                        });
                    }
                    if entry.1 != *qubits {
                        return Err(TranscriptError::QubitMismatch {
                            index,
                            register: register.clone(),
                            claimed: *qubits,
                            actual: entry.1,
                        });
                    }
                    entry.0 = *to;
                }
                Event::Broadcast { label, .. } => check_name(label)?,
                Event::Measure {
                    party, register, ..
                } => {
                    let (owner, _) = *owners.get(register.as_str()).ok_or_else(|| {
                        TranscriptError::UnknownRegister {
                            index,
                            register: register.clone(),
                        }
                    })?;
                    if owner != *party {
                        return Err(TranscriptError::NotOwner {
                            index,
                            party: *party,
                            register: register.clone(),
                            owner,
                        });
                    }
                }
            }
        }
        for child in &self.children {
            child.validate()?;
        }
        Ok(())
    }
}
