//! Labeled utterance datasets stored as TSV.
//!
//! Columns are `text`, `label`, `split` and `source`, tab-separated. Labels
//! are `p`/`a`/`n`. Extra columns after `source` are carried through
//! untouched, so reading and writing a file gives back the same bytes.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::label::{Label, Split};
use crate::text::normalize;

pub const REQUIRED_COLUMNS: [&str; 4] = ["text", "label", "split", "source"];

/// Extra column written by the miner; rows marked `needs_review` are refused
/// by training and evaluation.
pub const STATUS_COLUMN: &str = "status";
pub const NEEDS_REVIEW: &str = "needs_review";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("field contains a tab or line break: {0:?}")]
    InvalidField(String),
    #[error("csv import: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv import: no {0} column found")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledUtterance {
    pub text: String,
    pub label: Label,
    pub split: Split,
    /// Provenance: `grammar`, `crowd`, or a corpus name.
    pub source: String,
    /// Values for [`Dataset::extra_columns`], in order.
    pub extra: Vec<String>,
}

impl LabeledUtterance {
    pub fn new(text: impl Into<String>, label: Label, split: Split, source: impl Into<String>) -> Self {
        LabeledUtterance { text: text.into(), label, split, source: source.into(), extra: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub extra_columns: Vec<String>,
    pub rows: Vec<LabeledUtterance>,
}

fn check_field(s: &str) -> Result<(), DatasetError> {
    if s.contains(['\t', '\n', '\r']) {
        Err(DatasetError::InvalidField(s.to_string()))
    } else {
        Ok(())
    }
}

fn parse_label(code: &str) -> Option<Label> {
    match code {
        "p" => Some(Label::Pos),
        "a" => Some(Label::Aic),
        "n" => Some(Label::Neg),
        _ => None,
    }
}

impl Dataset {
    pub fn new(rows: Vec<LabeledUtterance>) -> Self {
        Dataset { extra_columns: Vec::new(), rows }
    }

    pub fn parse(src: &str) -> Result<Self, DatasetError> {
        let err = |line: usize, message: String| DatasetError::Parse { line, message };
        let mut lines = src.split_terminator('\n').enumerate();
        let header = match lines.next() {
            Some((_, h)) => h,
            None => return Err(err(1, "missing header row".into())),
        };
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 4 || cols[..4] != REQUIRED_COLUMNS {
            return Err(err(1, format!("header must start with {}", REQUIRED_COLUMNS.join("\\t"))));
        }
        if let Some(c) = cols.iter().find(|c| c.is_empty() || c.contains('\r')) {
            return Err(err(1, format!("bad column name {c:?}")));
        }
        let extra_columns: Vec<String> = cols[4..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.contains('\r') {
                return Err(err(n, "carriage return in row".into()));
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(err(n, format!("expected {} fields, found {}", cols.len(), fields.len())));
            }
            if normalize(fields[0]).is_err() {
                return Err(err(n, "empty utterance".into()));
            }
            let label = parse_label(fields[1]).ok_or_else(|| err(n, format!("bad label {:?}", fields[1])))?;
            let split: Split = fields[2].parse().map_err(|_| err(n, format!("bad split {:?}", fields[2])))?;
            rows.push(LabeledUtterance {
                text: fields[0].to_string(),
                label,
                split,
                source: fields[3].to_string(),
                extra: fields[4..].iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(Dataset { extra_columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        Dataset::parse(&fs::read_to_string(path)?)
    }

    pub fn to_tsv(&self) -> Result<String, DatasetError> {
        let mut out = REQUIRED_COLUMNS.join("\t");
        for c in &self.extra_columns {
            check_field(c)?;
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            check_field(&row.text)?;
            check_field(&row.source)?;
            for v in &row.extra {
                check_field(v)?;
            }
            if row.extra.len() != self.extra_columns.len() {
                return Err(DatasetError::InvalidField(format!(
                    "row {:?} has {} extra values for {} extra columns",
                    row.text,
                    row.extra.len(),
                    self.extra_columns.len()
                )));
            }
            out.push_str(&row.text);
            for f in [row.label.code(), row.split.as_str(), &row.source] {
                out.push('\t');
                out.push_str(f);
            }
            for v in &row.extra {
                out.push('\t');
                out.push_str(v);
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_tsv()?)?;
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &LabeledUtterance> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    /// Value of an extra column for `row`, if the column exists.
    pub fn extra_value<'a>(&self, row: &'a LabeledUtterance, column: &str) -> Option<&'a str> {
        let i = self.extra_columns.iter().position(|c| c == column)?;
        row.extra.get(i).map(String::as_str)
    }

    /// Rows still flagged for manual review.
    pub fn unreviewed(&self) -> impl Iterator<Item = &LabeledUtterance> {
        self.rows.iter().filter(|r| self.extra_value(r, STATUS_COLUMN) == Some(NEEDS_REVIEW))
    }

    pub fn label_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.rows {
            c[r.label.index()] += 1;
        }
        c
    }
}

const TEXT_ALIASES: [&str; 4] = ["text", "utterance", "sentence", "query"];
const LABEL_ALIASES: [&str; 4] = ["label", "labels", "class", "intent"];

fn find_column(headers: &[String], aliases: &[&str]) -> Option<usize> {
    aliases.iter().find_map(|a| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(a)))
}

/// Maps a CSV export with arbitrary column layout onto [`Dataset`].
///
/// The text and label columns are located by name; `split` and `source` are
/// used when present. Every other column is kept as an extra column. Labels
/// accept the long forms (`pos`, `positive`, ...).
pub fn import_csv<R: Read>(reader: R, default_source: &str) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let text_col = find_column(&headers, &TEXT_ALIASES).ok_or(DatasetError::MissingColumn("text"))?;
    let label_col = find_column(&headers, &LABEL_ALIASES).ok_or(DatasetError::MissingColumn("label"))?;
    let split_col = find_column(&headers, &["split"]);
    let source_col = find_column(&headers, &["source"]);
    let used = [Some(text_col), Some(label_col), split_col, source_col];
    let extra_idx: Vec<usize> = (0..headers.len()).filter(|i| !used.contains(&Some(*i))).collect();
    let clean = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");

    let mut ds = Dataset { extra_columns: extra_idx.iter().map(|&i| clean(&headers[i])).collect(), rows: Vec::new() };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let err = |message: String| DatasetError::Parse { line, message };
        let text = clean(&rec[text_col]);
        if text.is_empty() {
            return Err(err("empty utterance".into()));
        }
        let label: Label = rec[label_col].trim().parse().map_err(|_| err(format!("bad label {:?}", &rec[label_col])))?;
        let split = match split_col {
            Some(c) => rec[c].trim().parse().map_err(|_| err(format!("bad split {:?}", &rec[c])))?,
            None => Split::None,
        };
        let source = source_col.map(|c| clean(&rec[c])).unwrap_or_else(|| default_source.to_string());
        let extra = extra_idx.iter().map(|&c| clean(&rec[c])).collect();
        ds.rows.push(LabeledUtterance { text, label, split, source, extra });
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "text\tlabel\tsplit\tsource\tscore\tstatus\n\
        are you a robot?\tp\ttrain\tgrammar\t\t\n\
        you sound robotic\ta\tval\tcrowd\t\t\n\
        do you like robots?\tn\taddtest\tpersona\t0.42\tneeds_review\n";

    #[test]
    fn round_trip_is_byte_identical() {
        let ds = Dataset::parse(SAMPLE).unwrap();
        assert_eq!(ds.rows.len(), 3);
        assert_eq!(ds.extra_columns, ["score", "status"]);
        assert_eq!(ds.rows[1].label, Label::Aic);
        assert_eq!(ds.rows[2].split, Split::AddTest);
        assert_eq!(ds.to_tsv().unwrap(), SAMPLE);
        assert_eq!(ds.unreviewed().count(), 1);
        assert_eq!(ds.label_counts(), [1, 1, 1]);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = |body: &str| Dataset::parse(&format!("text\tlabel\tsplit\tsource\n{body}"));
        assert!(matches!(bad("hi\tx\ttrain\tg\n"), Err(DatasetError::Parse { line: 2, .. })));
        assert!(matches!(bad("hi\tp\tdev\tg\n"), Err(DatasetError::Parse { line: 2, .. })));
        assert!(matches!(bad("hi\tp\ttrain\n"), Err(DatasetError::Parse { line: 2, .. })));
        assert!(matches!(bad("  \tp\ttrain\tg\n"), Err(DatasetError::Parse { line: 2, .. })));
        assert!(matches!(bad("hi\tp\ttrain\tg\r\n"), Err(DatasetError::Parse { line: 2, .. })));
        assert!(matches!(bad("hi\tpos\ttrain\tg\n"), Err(DatasetError::Parse { .. })));
        assert!(matches!(Dataset::parse(""), Err(DatasetError::Parse { line: 1, .. })));
        assert!(matches!(Dataset::parse("text\tlabel\n"), Err(DatasetError::Parse { line: 1, .. })));
        assert!(bad("").unwrap().rows.is_empty());
    }

    #[test]
    fn writer_refuses_tabs() {
        let ds = Dataset::new(vec![LabeledUtterance::new("a\tb", Label::Pos, Split::Train, "g")]);
        assert!(matches!(ds.to_tsv(), Err(DatasetError::InvalidField(_))));
    }

    #[test]
    fn csv_import_maps_columns() {
        let csv = "id,Utterance,Label,notes\n1,\"Are you\n a bot?\",positive,x\n2,hello there,n,\"a, b\"\n";
        let ds = import_csv(csv.as_bytes(), "published").unwrap();
        assert_eq!(ds.extra_columns, ["id", "notes"]);
        assert_eq!(ds.rows[0].text, "Are you a bot?");
        assert_eq!(ds.rows[0].label, Label::Pos);
        assert_eq!(ds.rows[0].split, Split::None);
        assert_eq!(ds.rows[1].extra, ["2", "a, b"]);
        assert_eq!(ds.rows[1].source, "published");
        let again = Dataset::parse(&ds.to_tsv().unwrap()).unwrap();
        assert_eq!(again, ds);
        assert!(matches!(import_csv("a,b\n1,2\n".as_bytes(), "x"), Err(DatasetError::MissingColumn("text"))));
    }
}
