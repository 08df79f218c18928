//! Controlled vocabulary built from expert decisions.
//!
//! Every change is appended to a log file; `compact` writes a snapshot of
//! the current entries together with the number of log lines it covers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::msc::MscCode;
use crate::textproc::normalize_phrase;

pub const LOG_FILE: &str = "vocab.log";
pub const SNAPSHOT_FILE: &str = "vocab.tsv";

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("phrase is empty after normalization")]
    EmptyPhrase,
    #[error("edit replacement {0:?} normalizes to the original phrase")]
    SelfEdit(String),
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Good,
    Bad,
    Candidate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Good => "GOOD",
            Status::Bad => "BAD",
            Status::Candidate => "CANDIDATE",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GOOD" => Ok(Status::Good),
            "BAD" => Ok(Status::Bad),
            "CANDIDATE" => Ok(Status::Candidate),
            _ => Err(format!("unknown status {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
    Edit { replacement: String },
}

/// What a history item did to its entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryAction {
    Accept,
    Reject,
    /// The entry was replaced by an edited phrase.
    EditedAway,
    /// The entry was introduced as the replacement of an edit.
    EditedIn,
}

impl HistoryAction {
    fn as_str(self) -> &'static str {
        match self {
            HistoryAction::Accept => "accept",
            HistoryAction::Reject => "reject",
            HistoryAction::EditedAway => "edit",
            HistoryAction::EditedIn => "edit-in",
        }
    }

    pub fn status(self) -> Status {
        match self {
            HistoryAction::Accept | HistoryAction::EditedIn => Status::Good,
            HistoryAction::Reject | HistoryAction::EditedAway => Status::Bad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryItem {
    pub timestamp: String,
    pub action: HistoryAction,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub phrase: String,
    pub status: Status,
    pub frequency: u64,
    pub msc_top: Option<MscCode>,
    pub history: Vec<HistoryItem>,
}

impl VocabEntry {
    fn new(phrase: String) -> Self {
        VocabEntry {
            phrase,
            status: Status::Candidate,
            frequency: 1,
            msc_top: None,
            history: Vec::new(),
        }
    }

    /// Status implied by replaying the history from scratch.
    pub fn replayed_status(&self) -> Status {
        self.history
            .last()
            .map_or(Status::Candidate, |h| h.action.status())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecisionOutcome {
    pub entry: VocabEntry,
    /// The replacement entry of an edit.
    pub replacement: Option<VocabEntry>,
    /// False when the verdict repeated the current state.
    pub changed: bool,
}

/// Read access used by the keyphrase scorer.
pub trait VocabularyLookup: Send + Sync {
    /// Status of an already normalized phrase.
    fn status(&self, normalized: &str) -> Option<Status>;
}

impl VocabularyLookup for HashMap<String, Status> {
    fn status(&self, normalized: &str) -> Option<Status> {
        self.get(normalized).copied()
    }
}

impl VocabularyLookup for VocabStore {
    fn status(&self, normalized: &str) -> Option<Status> {
        self.entries.get(normalized).map(|e| e.status)
    }
}

impl<T: VocabularyLookup> VocabularyLookup for RwLock<T> {
    fn status(&self, normalized: &str) -> Option<Status> {
        self.read()
            .unwrap_or_else(|e| e.into_inner())
            .status(normalized)
    }
}

enum LogOp {
    Decide(HistoryAction),
    Observe(u64),
    Msc(Option<MscCode>),
}

/// Expert decisions applied so far; an edit counts once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub accepted: u64,
    pub rejected: u64,
    pub edited: u64,
}

impl DecisionCounts {
    pub fn total(&self) -> u64 {
        self.accepted + self.rejected + self.edited
    }

    /// Accepted share of all decisions, 0 without decisions.
    pub fn acceptance_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.accepted as f64 / self.total() as f64
        }
    }
}

/// In-memory vocabulary, optionally backed by a directory holding the log
/// and snapshot files. Not internally synchronized.
#[derive(Debug, Default)]
pub struct VocabStore {
    entries: HashMap<String, VocabEntry>,
    good: HashSet<String>,
    bad: HashSet<String>,
    dir: Option<PathBuf>,
    log: Option<BufWriter<File>>,
    log_lines: u64,
    decisions: DecisionCounts,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn clean(field: &str) -> String {
    field.replace(['\t', '\n', '\r'], " ")
}

impl VocabStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a store directory: loads the snapshot and
    /// replays the log lines written after it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, VocabError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut store = VocabStore::default();
        let mut covered = 0u64;
        let snap = dir.join(SNAPSHOT_FILE);
        if snap.exists() {
            covered = store.load_snapshot(&snap)?;
        }
        let log_path = dir.join(LOG_FILE);
        if log_path.exists() {
            let reader = BufReader::new(File::open(&log_path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                store.log_lines += 1;
                if (i as u64) < covered || line.is_empty() {
                    continue;
                }
                store.replay_line(&line).map_err(|message| VocabError::Format {
                    file: LOG_FILE.into(),
                    line: i + 1,
                    message,
                })?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)?;
        store.log = Some(BufWriter::new(file));
        store.dir = Some(dir);
        Ok(store)
    }

    fn load_snapshot(&mut self, path: &Path) -> Result<u64, VocabError> {
        let src = fs::read_to_string(path)?;
        let mut covered = 0;
        for (i, line) in src.lines().enumerate() {
            let err = |message: String| VocabError::Format {
                file: SNAPSHOT_FILE.into(),
                line: i + 1,
                message,
            };
            if let Some(rest) = line.strip_prefix("# log_lines=") {
                covered = rest.trim().parse().map_err(|_| err("bad log_lines".into()))?;
                continue;
            }
            if let Some(rest) = line.strip_prefix("# decisions=") {
                let n: Vec<u64> = rest
                    .split(',')
                    .map(|v| v.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad decisions".into()))?;
                let [accepted, rejected, edited] = n[..] else {
                    return Err(err("expected accepted,rejected,edited".into()));
                };
                self.decisions = DecisionCounts {
                    accepted,
                    rejected,
                    edited,
                };
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(err("expected phrase, status, frequency, msc_top".into()));
            }
            let phrase = normalize_phrase(cols[0]);
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            let status: Status = cols[1].parse().map_err(err)?;
            let frequency: u64 = cols[2]
                .parse()
                .ok()
                .filter(|&f| f >= 1)
                .ok_or_else(|| err(format!("bad frequency {:?}", cols[2])))?;
            let msc_top = match cols[3] {
                "" | "-" => None,
                c => Some(c.parse::<MscCode>().map_err(|e| err(e.to_string()))?),
            };
            let mut entry = VocabEntry::new(phrase.clone());
            entry.frequency = frequency;
            entry.msc_top = msc_top;
            self.entries.insert(phrase.clone(), entry);
            self.set_status(&phrase, status);
        }
        Ok(covered)
    }

    fn replay_line(&mut self, line: &str) -> Result<(), String> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [timestamp, op, phrase, arg, source] = cols[..] else {
            return Err("expected five tab-separated columns".into());
        };
        let op = match op {
            "accept" => LogOp::Decide(HistoryAction::Accept),
            "reject" => LogOp::Decide(HistoryAction::Reject),
            "edit" => LogOp::Decide(HistoryAction::EditedAway),
            "edit-in" => LogOp::Decide(HistoryAction::EditedIn),
            "observe" => LogOp::Observe(arg.parse().map_err(|_| format!("bad count {arg:?}"))?),
            "msc" => LogOp::Msc(match arg {
                "" | "-" => None,
                c => Some(c.parse().map_err(|e: crate::msc::UnknownMscCode| e.to_string())?),
            }),
            other => return Err(format!("unknown operation {other:?}")),
        };
        self.apply(phrase, op, timestamp, source);
        Ok(())
    }

    fn set_status(&mut self, phrase: &str, status: Status) {
        self.good.remove(phrase);
        self.bad.remove(phrase);
        match status {
            Status::Good => {
                self.good.insert(phrase.to_string());
            }
            Status::Bad => {
                self.bad.insert(phrase.to_string());
            }
            Status::Candidate => {}
        }
        if let Some(e) = self.entries.get_mut(phrase) {
            e.status = status;
        }
    }

    fn apply(&mut self, phrase: &str, op: LogOp, timestamp: &str, source: &str) {
        let created = !self.entries.contains_key(phrase);
        let entry = self
            .entries
            .entry(phrase.to_string())
            .or_insert_with(|| VocabEntry::new(phrase.to_string()));
        match op {
            LogOp::Decide(action) => {
                match action {
                    HistoryAction::Accept => self.decisions.accepted += 1,
                    HistoryAction::Reject => self.decisions.rejected += 1,
                    HistoryAction::EditedAway => self.decisions.edited += 1,
                    HistoryAction::EditedIn => {}
                }
                entry.history.push(HistoryItem {
                    timestamp: timestamp.to_string(),
                    action,
                    source: source.to_string(),
                });
                self.set_status(phrase, action.status());
            }
            LogOp::Observe(n) => {
                if created {
                    entry.frequency = n.max(1);
                } else {
                    entry.frequency += n;
                }
            }
            LogOp::Msc(code) => entry.msc_top = code,
        }
    }

    fn write_log(&mut self, fields: [&str; 5]) -> Result<(), VocabError> {
        if let Some(log) = self.log.as_mut() {
            let line: Vec<String> = fields.iter().map(|f| clean(f)).collect();
            writeln!(log, "{}", line.join("\t"))?;
            log.flush()?;
        }
        self.log_lines += 1;
        Ok(())
    }

    fn decide(
        &mut self,
        phrase: &str,
        action: HistoryAction,
        source: &str,
    ) -> Result<bool, VocabError> {
        let current = self.entries.get(phrase);
        let repeated = current.is_some_and(|e| {
            e.status == action.status() && e.history.last().is_some_and(|h| h.action == action)
        });
        if repeated {
            return Ok(false);
        }
        let ts = now();
        self.write_log([&ts, action.as_str(), phrase, "", source])?;
        self.apply(phrase, LogOp::Decide(action), &ts, source);
        Ok(true)
    }

    /// Applies an expert verdict. Repeating the verdict that produced the
    /// current state changes nothing.
    pub fn record_decision(
        &mut self,
        phrase: &str,
        verdict: &Verdict,
        source: &str,
    ) -> Result<DecisionOutcome, VocabError> {
        let key = normalize_phrase(phrase);
        if key.is_empty() {
            return Err(VocabError::EmptyPhrase);
        }
        let (changed, replacement) = match verdict {
            Verdict::Accept => (self.decide(&key, HistoryAction::Accept, source)?, None),
            Verdict::Reject => (self.decide(&key, HistoryAction::Reject, source)?, None),
            Verdict::Edit { replacement } => {
                let new_key = normalize_phrase(replacement);
                if new_key.is_empty() {
                    return Err(VocabError::EmptyPhrase);
                }
                if new_key == key {
                    return Err(VocabError::SelfEdit(replacement.clone()));
                }
                let a = self.decide(&key, HistoryAction::EditedAway, source)?;
                let b = self.decide(&new_key, HistoryAction::EditedIn, source)?;
                (a || b, Some(new_key))
            }
        };
        Ok(DecisionOutcome {
            entry: self.entries[&key].clone(),
            replacement: replacement.map(|k| self.entries[&k].clone()),
            changed,
        })
    }

    /// Counts occurrences of a phrase seen in extraction output, creating a
    /// CANDIDATE entry on first sight.
    pub fn observe(&mut self, phrase: &str, count: u64) -> Result<(), VocabError> {
        let key = normalize_phrase(phrase);
        if key.is_empty() {
            return Err(VocabError::EmptyPhrase);
        }
        if count == 0 {
            return Ok(());
        }
        let n = count.to_string();
        self.write_log([&now(), "observe", &key, &n, ""])?;
        self.apply(&key, LogOp::Observe(count), "", "");
        Ok(())
    }

    /// Stores the class assignment of an existing entry.
    pub fn set_msc(&mut self, phrase: &str, code: Option<MscCode>) -> Result<bool, VocabError> {
        let key = normalize_phrase(phrase);
        match self.entries.get(&key) {
            None => Ok(false),
            Some(e) if e.msc_top == code => Ok(true),
            Some(_) => {
                let arg = code.map_or(String::new(), |c| c.to_string());
                self.write_log([&now(), "msc", &key, &arg, ""])?;
                self.apply(&key, LogOp::Msc(code), "", "");
                Ok(true)
            }
        }
    }

    pub fn lookup(&self, phrase: &str) -> Option<&VocabEntry> {
        self.entries.get(&normalize_phrase(phrase))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn good(&self) -> &HashSet<String> {
        &self.good
    }

    pub fn bad(&self) -> &HashSet<String> {
        &self.bad
    }

    pub fn count(&self, status: Status) -> usize {
        match status {
            Status::Good => self.good.len(),
            Status::Bad => self.bad.len(),
            Status::Candidate => self.entries.len() - self.good.len() - self.bad.len(),
        }
    }

    /// Entries with the given status (all when `None`), sorted by phrase.
    pub fn entries(&self, status: Option<Status>) -> Vec<&VocabEntry> {
        let mut out: Vec<&VocabEntry> = self
            .entries
            .values()
            .filter(|e| status.is_none_or(|s| e.status == s))
            .collect();
        out.sort_by(|a, b| a.phrase.cmp(&b.phrase));
        out
    }

    pub fn decision_counts(&self) -> DecisionCounts {
        self.decisions
    }

    /// Writes the snapshot file covering every log line so far.
    pub fn compact(&mut self) -> Result<(), VocabError> {
        let Some(dir) = self.dir.clone() else {
            return Ok(());
        };
        if let Some(log) = self.log.as_mut() {
            log.flush()?;
        }
        let sorted: BTreeMap<&String, &VocabEntry> = self.entries.iter().collect();
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            writeln!(w, "# log_lines={}", self.log_lines)?;
            let d = self.decisions;
            writeln!(w, "# decisions={},{},{}", d.accepted, d.rejected, d.edited)?;
            for (phrase, e) in sorted {
                let msc = e.msc_top.map_or(String::new(), |c| c.to_string());
                writeln!(w, "{phrase}\t{}\t{}\t{msc}", e.status, e.frequency)?;
            }
            w.flush()?;
        }
        fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }
}

/// The class of a phrase when every document it was extracted from shares
/// one primary top-level code.
pub fn assign_msc<'a, I>(phrase: &str, evidence: I) -> Option<MscCode>
where
    I: IntoIterator<Item = (Option<MscCode>, &'a [String])>,
{
    let key = normalize_phrase(phrase);
    let mut codes = HashSet::new();
    for (code, phrases) in evidence {
        if let Some(c) = code {
            if phrases.iter().any(|p| normalize_phrase(p) == key) {
                codes.insert(c);
            }
        }
    }
    if codes.len() == 1 {
        codes.into_iter().next()
    } else {
        None
    }
}
