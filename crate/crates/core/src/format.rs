//! Text file formats: channel specs and witnesses (TOML with `"p/q"` rationals) and
//! codebook files (one `[user k]` section per user, one 0/1 string per line).
//!
//! Channel file:
//!
//! ```toml
//! format = "avmac-channel/1"
//! users = 2
//! inputs = [2, 2]
//! states = 2
//! s0 = 0
//! outputs = 4
//! deterministic = true
//!
//! [[row]]
//! x = [0, 0]
//! s = 0
//! y = 0              # output map, deterministic rows only
//!
//! [[row]]
//! x = [0, 1]
//! s = 0
//! p = ["0", "1", "0", "0"]
//! ```

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::{symbols_to_string, ChannelError, ChannelSpec, Labels};
use crate::codebook::{codeword_string, parse_codeword, CodebookError, CodebookTuple};
use crate::extension::OuterWord;
use crate::feasibility::{StateConditionalWitness, WitnessKind};
use crate::rational::{format_rational, parse_rational, Gamma, ParseRationalError, Rational};
use crate::util::{mixed_radix_index, Odometer};

pub const CHANNEL_FORMAT: &str = "avmac-channel/1";
pub const WITNESS_FORMAT: &str = "avmac-witness/1";
pub const PLAN_FORMAT: &str = "avmac-plan/1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("TOML syntax: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("TOML output: {0}")]
    TomlSer(#[from] toml::ser::Error),
    #[error("unsupported format tag {0:?}")]
    FormatTag(String),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    format: String,
    users: usize,
    inputs: Vec<usize>,
    states: usize,
    s0: usize,
    outputs: usize,
    #[serde(default)]
    deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Labels>,
    #[serde(default, rename = "row")]
    rows: Vec<RowEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowEntry {
    x: Vec<usize>,
    s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<String>>,
}

fn point_mass_index(row: &[Rational]) -> Option<usize> {
    let mut hit = None;
    for (y, p) in row.iter().enumerate() {
        if p.is_one() {
            if hit.is_some() {
                return None;
            }
            hit = Some(y);
        } else if !p.is_zero() {
            return None;
        }
    }
    hit
}

pub fn parse_channel(text: &str) -> Result<ChannelSpec, FormatError> {
    let file: ChannelFile = toml::from_str(text)?;
    if file.format != CHANNEL_FORMAT {
        return Err(FormatError::FormatTag(file.format));
    }
    if file.users != file.inputs.len() {
        return Err(FormatError::Invalid(format!(
            "users = {} but {} input alphabets listed",
            file.users,
            file.inputs.len()
        )));
    }
    let states = file.states;
    let row_count: usize = file.inputs.iter().product::<usize>() * states;
    let mut rows: Vec<Option<Vec<Rational>>> = vec![None; row_count];
    for (k, entry) in file.rows.iter().enumerate() {
        let bad = |msg: String| FormatError::Invalid(format!("row {}: {msg}", k + 1));
        if entry.x.len() != file.inputs.len() || entry.x.iter().zip(&file.inputs).any(|(&v, &size)| v >= size) {
            return Err(bad(format!("input tuple {:?} out of range", entry.x)));
        }
        if entry.s >= states {
            return Err(bad(format!("state {} out of range", entry.s)));
        }
        let idx = mixed_radix_index(&file.inputs, &entry.x) * states + entry.s;
        if rows[idx].is_some() {
            return Err(bad(format!("duplicate row for x={:?}, s={}", entry.x, entry.s)));
        }
        let row = match (&entry.y, &entry.p) {
            (Some(y), None) => {
                if *y >= file.outputs {
                    return Err(bad(format!("output {y} out of range")));
                }
                let mut r = vec![Rational::zero(); file.outputs];
                r[*y] = Rational::one();
                r
            }
            (None, Some(p)) => p.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(bad("exactly one of `y` or `p` is required".into())),
        };
        rows[idx] = Some(row);
    }
    let ch = ChannelSpec::from_parts(file.inputs, states, file.outputs, file.s0, rows, file.deterministic)?;
    Ok(match file.labels {
        Some(l) => ch.with_labels(l),
        None => ch,
    })
}

pub fn serialize_channel(ch: &ChannelSpec) -> Result<String, FormatError> {
    let states = ch.state_count();
    let mut rows = Vec::new();
    for (i, x) in Odometer::new(ch.input_sizes()).enumerate() {
        for s in 0..states {
            let Some(row) = &ch.raw_rows()[i * states + s] else {
                continue;
            };
            let y = if ch.is_deterministic() { point_mass_index(row) } else { None };
            rows.push(RowEntry {
                x: x.clone(),
                s,
                y,
                p: if y.is_some() { None } else { Some(row.iter().map(format_rational).collect()) },
            });
        }
    }
    let file = ChannelFile {
        format: CHANNEL_FORMAT.to_string(),
        users: ch.users(),
        inputs: ch.input_sizes().to_vec(),
        states,
        s0: ch.s0(),
        outputs: ch.output_count(),
        deterministic: ch.is_deterministic(),
        labels: ch.labels().cloned(),
        rows,
    };
    Ok(toml::to_string(&file)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessFile {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    /// 1-based user indices.
    users: Vec<usize>,
    inputs: Vec<usize>,
    states: usize,
    #[serde(default, rename = "row")]
    rows: Vec<WitnessRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessRow {
    x: Vec<usize>,
    p: Vec<String>,
}

pub fn serialize_witness(w: &StateConditionalWitness, kind: Option<WitnessKind>) -> Result<String, FormatError> {
    let rows = Odometer::new(w.input_sizes())
        .zip(w.table())
        .map(|(x, row)| WitnessRow { x, p: row.iter().map(format_rational).collect() })
        .collect();
    let file = WitnessFile {
        format: WITNESS_FORMAT.to_string(),
        kind: kind.map(|k| k.to_string()),
        users: w.users().iter().map(|u| u + 1).collect(),
        inputs: w.input_sizes().to_vec(),
        states: w.state_count(),
        rows,
    };
    Ok(toml::to_string(&file)?)
}

/// Parses a witness file; returns the witness and its declared kind, if any.
pub fn parse_witness(text: &str) -> Result<(StateConditionalWitness, Option<WitnessKind>), FormatError> {
    let file: WitnessFile = toml::from_str(text)?;
    if file.format != WITNESS_FORMAT {
        return Err(FormatError::FormatTag(file.format));
    }
    let kind = match file.kind.as_deref() {
        None => None,
        Some("symmetrizer") => Some(WitnessKind::Symmetrizer),
        Some("overwriter") => Some(WitnessKind::Overwriter),
        Some(other) => return Err(FormatError::Invalid(format!("unknown witness kind {other:?}"))),
    };
    if file.users.len() != file.inputs.len() || file.users.contains(&0) {
        return Err(FormatError::Invalid("users must be 1-based and match inputs".into()));
    }
    let expected: usize = file.inputs.iter().product();
    let mut table: BTreeMap<usize, Vec<Rational>> = BTreeMap::new();
    for row in &file.rows {
        if row.x.len() != file.inputs.len() || row.x.iter().zip(&file.inputs).any(|(&v, &k)| v >= k) {
            return Err(FormatError::Invalid(format!("conditioning tuple {:?} out of range", row.x)));
        }
        let idx = mixed_radix_index(&file.inputs, &row.x);
        let p = row.p.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
        if table.insert(idx, p).is_some() {
            return Err(FormatError::Invalid(format!("duplicate row {:?}", row.x)));
        }
    }
    if table.len() != expected {
        return Err(FormatError::Invalid(format!("expected {expected} rows, got {}", table.len())));
    }
    let w = StateConditionalWitness::from_table(
        file.users.iter().map(|u| u - 1).collect(),
        file.inputs,
        file.states,
        table.into_values().collect(),
    );
    Ok((w, kind))
}

/// Parses a codebook file.
///
/// ```text
/// # comment
/// [user 1]
/// 011
/// 100
/// [user 2]
/// 010
/// 101
/// ```
pub fn parse_codebooks(text: &str) -> Result<CodebookTuple, FormatError> {
    let mut books: Vec<Vec<Vec<u8>>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let idx = header
                .trim()
                .strip_prefix("user")
                .and_then(|r| r.trim().parse::<usize>().ok())
                .ok_or_else(|| FormatError::Line { line: line_no, msg: format!("bad section header {line:?}") })?;
            if idx != books.len() + 1 {
                return Err(FormatError::Line {
                    line: line_no,
                    msg: format!("expected [user {}], found [user {idx}]", books.len() + 1),
                });
            }
            books.push(Vec::new());
            continue;
        }
        let Some(current) = books.last_mut() else {
            return Err(FormatError::Line { line: line_no, msg: "codeword before the first [user k] header".into() });
        };
        let cw = parse_codeword(line).map_err(|e| FormatError::Line { line: line_no, msg: e.to_string() })?;
        current.push(cw);
    }
    Ok(CodebookTuple::new(books)?)
}

pub fn serialize_codebooks(cb: &CodebookTuple) -> String {
    let mut out = String::new();
    for (j, book) in cb.codebooks().iter().enumerate() {
        if j > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[user {}]\n", j + 1));
        for cw in book {
            out.push_str(&codeword_string(cw));
            out.push('\n');
        }
    }
    out
}

/// An extension plan as stored on disk.
///
/// ```toml
/// format = "avmac-plan/1"
/// inner = "good_triple.txt"   # relative to the plan file
/// gamma = "2/3"
/// ell = 1
/// r = 6
///
/// [[outer]]
/// words = ["000000", "111100", "110011", "001111"]
/// ```
///
/// Outer symbols are 0-based inner message indices: one digit each, or comma-separated
/// when some symbol exceeds 9.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub format: String,
    pub inner: String,
    pub gamma: Gamma,
    pub ell: usize,
    pub r: usize,
    pub outer: Vec<OuterCodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterCodeEntry {
    pub words: Vec<String>,
}

impl PlanFile {
    pub fn new(inner: String, gamma: Gamma, ell: usize, r: usize, outer: &[Vec<OuterWord>]) -> Self {
        let outer = outer
            .iter()
            .map(|code| OuterCodeEntry { words: code.iter().map(|w| symbols_to_string(w)).collect() })
            .collect();
        PlanFile { format: PLAN_FORMAT.into(), inner, gamma, ell, r, outer }
    }

    pub fn outer_codes(&self) -> Result<Vec<Vec<OuterWord>>, FormatError> {
        self.outer.iter().map(|code| code.words.iter().map(|w| parse_symbols(w)).collect()).collect()
    }
}

/// Parses a symbol string: one digit per symbol, or comma-separated integers (a single
/// trailing comma is allowed).
pub fn parse_symbols(s: &str) -> Result<Vec<usize>, FormatError> {
    let bad = || FormatError::Invalid(format!("bad symbol string {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if s.contains(',') {
        s.strip_suffix(',').unwrap_or(s).split(',').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect()
    } else {
        s.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect()
    }
}

pub fn parse_plan(text: &str) -> Result<PlanFile, FormatError> {
    let file: PlanFile = toml::from_str(text)?;
    if file.format != PLAN_FORMAT {
        return Err(FormatError::FormatTag(file.format));
    }
    file.outer_codes()?;
    Ok(file)
}

pub fn serialize_plan(plan: &PlanFile) -> Result<String, FormatError> {
    Ok(toml::to_string(plan)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_adder_channel;
    use crate::rational::rational;

    #[test]
    fn adder_channel_round_trip() {
        let ch = make_adder_channel(2, 1).unwrap();
        let text = serialize_channel(&ch).unwrap();
        let back = parse_channel(&text).unwrap();
        assert_eq!(back, ch);
        assert_eq!(serialize_channel(&back).unwrap(), text);
        assert!(text.contains("y = 3"));
    }

    #[test]
    fn stochastic_rows_use_rationals() {
        let ch = ChannelSpec::from_fn(vec![2, 2], 2, 2, 0, |_, _| vec![rational(1, 3), rational(2, 3)]).unwrap();
        let text = serialize_channel(&ch).unwrap();
        assert!(text.contains("\"1/3\""));
        assert_eq!(parse_channel(&text).unwrap(), ch);
    }

    #[test]
    fn missing_rows_survive_and_fail_validation() {
        let ch = make_adder_channel(2, 1).unwrap().with_row(&[1, 0], 1, None).unwrap();
        let back = parse_channel(&serialize_channel(&ch).unwrap()).unwrap();
        assert!(back.validate().incomplete);
    }

    #[test]
    fn rejects_bad_channel_files() {
        let base = serialize_channel(&make_adder_channel(2, 1).unwrap()).unwrap();
        assert!(matches!(parse_channel(&base.replace("avmac-channel/1", "other/2")), Err(FormatError::FormatTag(_))));
        let dup = format!("{base}\n[[row]]\nx = [0, 0]\ns = 0\ny = 0\n");
        assert!(matches!(parse_channel(&dup), Err(FormatError::Invalid(_))));
        let bad_rational = "format = \"avmac-channel/1\"\nusers = 2\ninputs = [1, 1]\nstates = 1\ns0 = 0\noutputs = 1\n[[row]]\nx = [0, 0]\ns = 0\np = [\"0.5\"]\n";
        assert!(matches!(parse_channel(bad_rational), Err(FormatError::Rational(_))));
    }

    #[test]
    fn witness_round_trip() {
        let ch = make_adder_channel(3, 2).unwrap();
        let w = StateConditionalWitness::point_mass(&ch, &[0, 2], |x| x.iter().sum()).unwrap();
        let text = serialize_witness(&w, Some(WitnessKind::Symmetrizer)).unwrap();
        let (back, kind) = parse_witness(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(kind, Some(WitnessKind::Symmetrizer));
        assert_eq!(serialize_witness(&back, kind).unwrap(), text);
    }

    #[test]
    fn codebook_file_round_trip() {
        let text = "# example pair\n[user 1]\n011\n100\n\n[user 2]\n010\n101\n";
        let cb = parse_codebooks(text).unwrap();
        assert_eq!(cb, CodebookTuple::from_strs(&[&["011", "100"], &["010", "101"]]).unwrap());
        let out = serialize_codebooks(&cb);
        assert_eq!(parse_codebooks(&out).unwrap(), cb);
    }

    #[test]
    fn codebook_file_errors() {
        assert!(matches!(parse_codebooks("011\n"), Err(FormatError::Line { line: 1, .. })));
        assert!(matches!(parse_codebooks("[user 2]\n011\n"), Err(FormatError::Line { .. })));
        assert!(matches!(parse_codebooks("[user 1]\n01x\n"), Err(FormatError::Line { line: 2, .. })));
        assert!(matches!(parse_codebooks("[user 1]\n011\n01\n"), Err(FormatError::Codebook(_))));
    }

    #[test]
    fn plan_round_trip() {
        let outer = vec![vec![vec![0, 0, 1], vec![1, 1, 0]], vec![vec![0, 12, 3]]];
        let plan = PlanFile::new("inner.txt".into(), "2/3".parse().unwrap(), 1, 3, &outer);
        let text = serialize_plan(&plan).unwrap();
        assert!(text.contains("\"0,12,3\""), "{text}");
        let back = parse_plan(&text).unwrap();
        assert_eq!(back, plan);
        assert_eq!(back.outer_codes().unwrap(), outer);
        assert!(parse_plan(&text.replace("avmac-plan/1", "avmac-plan/9")).is_err());
        assert!(parse_symbols("01x").is_err());
    }
}
