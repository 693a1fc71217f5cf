//! Delimited-table ingestion for post, comment and reference tables.
//!
//! Every table starts with a row-number column which is ignored on read.
//! Posts carry `[#, message_id, author_id, created]`, comments add a trailing
//! `parent_id`, and reference tables are `[#, id, url]`. An optional header
//! line is recognised by a non-numeric first field.
//!
//! Rows that fail validation are never dropped silently: each one lands in
//! the [`IngestReport`] with a reason code, and can be written to a
//! quarantine sidecar with [`write_quarantine`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POST_COLUMNS: [&str; 4] = ["#", "message_id", "author_id", "created"];
pub const COMMENT_COLUMNS: [&str; 5] = ["#", "message_id", "author_id", "created", "parent_id"];
pub const REFERENCE_COLUMNS: [&str; 3] = ["#", "id", "url"];

/// One published post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PostRecord {
    pub message_id: u64,
    pub author_id: u64,
    /// Unix seconds. Signed: corrupt sources do carry pre-epoch values.
    pub created: i64,
}

/// One published comment. `parent_id` names a post or another comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommentRecord {
    pub message_id: u64,
    pub author_id: u64,
    pub created: i64,
    pub parent_id: u64,
}

/// A row of an account or message reference table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RefEntry {
    pub id: u64,
    pub url: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("schema mismatch: expected header {expected:?}, found {found:?}")]
    Schema { expected: String, found: String },
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuarantineReason {
    WrongFieldCount,
    BadEncoding,
    BadMessageId,
    BadAuthorId,
    BadTimestamp,
    BadParentId,
    DuplicateMessageId,
    SelfParent,
    OutsideWindow,
    BadId,
    EmptyUrl,
    DuplicateId,
    DuplicateUrl,
}

impl QuarantineReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::WrongFieldCount => "wrong_field_count",
            Self::BadEncoding => "bad_encoding",
            Self::BadMessageId => "bad_message_id",
            Self::BadAuthorId => "bad_author_id",
            Self::BadTimestamp => "bad_timestamp",
            Self::BadParentId => "bad_parent_id",
            Self::DuplicateMessageId => "duplicate_message_id",
            Self::SelfParent => "self_parent",
            Self::OutsideWindow => "outside_window",
            Self::BadId => "bad_id",
            Self::EmptyUrl => "empty_url",
            Self::DuplicateId => "duplicate_id",
            Self::DuplicateUrl => "duplicate_url",
        }
    }
}

impl fmt::Display for QuarantineReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rejected input row, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantinedRow {
    /// 1-based physical line number in the source.
    pub line: usize,
    pub raw: String,
    pub reason: QuarantineReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_accepted: u64,
    pub rows_quarantined: u64,
    pub quarantine_reasons: BTreeMap<String, u64>,
    #[serde(skip)]
    pub quarantined: Vec<QuarantinedRow>,
}

impl IngestReport {
    fn accept(&mut self) {
        self.rows_read += 1;
        self.rows_accepted += 1;
    }

    fn quarantine(&mut self, line: usize, raw: &str, reason: QuarantineReason) {
        self.rows_read += 1;
        self.rows_quarantined += 1;
        *self.quarantine_reasons.entry(reason.as_str().to_owned()).or_default() += 1;
        self.quarantined.push(QuarantinedRow { line, raw: raw.to_owned(), reason });
    }

    pub fn reason_count(&self, reason: QuarantineReason) -> u64 {
        self.quarantine_reasons.get(reason.as_str()).copied().unwrap_or(0)
    }
}

/// Serialization settings shared by readers and writers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
    /// Require a header line naming exactly the expected columns.
    pub strict_header: bool,
    /// Inclusive `[start, end]` bounds on `created`; rows outside are quarantined.
    pub window: Option<(i64, i64)>,
}

impl Default for TableFormat {
    fn default() -> Self {
        Self { delimiter: b'\t', strict_header: false, window: None }
    }
}

impl TableFormat {
    pub fn tsv() -> Self {
        Self::default()
    }

    pub fn csv() -> Self {
        Self { delimiter: b',', ..Self::default() }
    }

    fn delimiter_char(&self) -> char {
        self.delimiter as char
    }

    fn in_window(&self, t: i64) -> bool {
        self.window.map_or(true, |(lo, hi)| lo <= t && t <= hi)
    }
}

fn header_matches(fields: &[&str], expected: &[&str]) -> bool {
    fields.len() == expected.len()
        && fields.iter().zip(expected).all(|(f, e)| f.trim().eq_ignore_ascii_case(e))
}

/// Drives line splitting, header handling and bookkeeping. `row` receives the
/// trimmed fields of each data line and decides acceptance.
fn scan_table<R, F>(
    source: R,
    format: &TableFormat,
    expected: &[&str],
    max_fields: Option<usize>,
    mut row: F,
) -> Result<IngestReport>
where
    R: Read,
    F: FnMut(&[&str]) -> std::result::Result<(), QuarantineReason>,
{
    let mut reader = BufReader::with_capacity(1 << 20, source);
    let mut report = IngestReport::default();
    let mut buf = Vec::with_capacity(256);
    let mut line_no = 0usize;
    let mut seen_data = false;
    let delim = format.delimiter_char();

    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s,
            Err(_) => {
                let lossy = String::from_utf8_lossy(&buf).into_owned();
                report.quarantine(line_no, &lossy, QuarantineReason::BadEncoding);
                seen_data = true;
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }

        let mut fields: Vec<&str> = Vec::with_capacity(expected.len());
        match max_fields {
            Some(n) => fields.extend(line.splitn(n, delim).map(str::trim)),
            None => fields.extend(line.split(delim).map(str::trim)),
        }

        if !seen_data {
            seen_data = true;
            let is_header = fields[0].parse::<u64>().is_err();
            if is_header {
                if format.strict_header && !header_matches(&fields, expected) {
                    return Err(IngestError::Schema {
                        expected: expected.join(&delim.to_string()),
                        found: line.to_owned(),
                    });
                }
                continue;
            } else if format.strict_header {
                return Err(IngestError::Schema {
                    expected: expected.join(&delim.to_string()),
                    found: line.to_owned(),
                });
            }
        }

        if fields.len() != expected.len() {
            report.quarantine(line_no, line, QuarantineReason::WrongFieldCount);
            continue;
        }
        match row(&fields) {
            Ok(()) => report.accept(),
            Err(reason) => report.quarantine(line_no, line, reason),
        }
    }

    if format.strict_header && !seen_data {
        return Err(IngestError::Schema { expected: expected.join(&delim.to_string()), found: String::new() });
    }
    Ok(report)
}

fn parse_u64(s: &str, reason: QuarantineReason) -> std::result::Result<u64, QuarantineReason> {
    s.parse().map_err(|_| reason)
}

fn parse_time(s: &str) -> std::result::Result<i64, QuarantineReason> {
    s.parse().map_err(|_| QuarantineReason::BadTimestamp)
}

/// Parses a posts table. Duplicate message ids keep the first occurrence.
pub fn parse_posts<R: Read>(source: R, format: &TableFormat) -> Result<(Vec<PostRecord>, IngestReport)> {
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    let report = scan_table(source, format, &POST_COLUMNS, None, |f| {
        let message_id = parse_u64(f[1], QuarantineReason::BadMessageId)?;
        let author_id = parse_u64(f[2], QuarantineReason::BadAuthorId)?;
        let created = parse_time(f[3])?;
        if !format.in_window(created) {
            return Err(QuarantineReason::OutsideWindow);
        }
        if !seen.insert(message_id) {
            return Err(QuarantineReason::DuplicateMessageId);
        }
        posts.push(PostRecord { message_id, author_id, created });
        Ok(())
    })?;
    Ok((posts, report))
}

/// Parses a comments table. A comment naming itself as parent is rejected.
pub fn parse_comments<R: Read>(
    source: R,
    format: &TableFormat,
) -> Result<(Vec<CommentRecord>, IngestReport)> {
    let mut comments = Vec::new();
    let mut seen = HashSet::new();
    let report = scan_table(source, format, &COMMENT_COLUMNS, None, |f| {
        let message_id = parse_u64(f[1], QuarantineReason::BadMessageId)?;
        let author_id = parse_u64(f[2], QuarantineReason::BadAuthorId)?;
        let created = parse_time(f[3])?;
        let parent_id = parse_u64(f[4], QuarantineReason::BadParentId)?;
        if message_id == parent_id {
            return Err(QuarantineReason::SelfParent);
        }
        if !format.in_window(created) {
            return Err(QuarantineReason::OutsideWindow);
        }
        if !seen.insert(message_id) {
            return Err(QuarantineReason::DuplicateMessageId);
        }
        comments.push(CommentRecord { message_id, author_id, created, parent_id });
        Ok(())
    })?;
    Ok((comments, report))
}

/// Parses an `[#, id, url]` reference table. The url column takes the rest of
/// the line, so it may itself contain the delimiter.
pub fn parse_references<R: Read>(source: R, format: &TableFormat) -> Result<(Vec<RefEntry>, IngestReport)> {
    let mut entries = Vec::new();
    let mut ids = HashSet::new();
    let mut urls = HashSet::new();
    let report = scan_table(source, format, &REFERENCE_COLUMNS, Some(3), |f| {
        let id = parse_u64(f[1], QuarantineReason::BadId)?;
        let url = f[2];
        if url.is_empty() {
            return Err(QuarantineReason::EmptyUrl);
        }
        if ids.contains(&id) {
            return Err(QuarantineReason::DuplicateId);
        }
        if urls.contains(url) {
            return Err(QuarantineReason::DuplicateUrl);
        }
        ids.insert(id);
        urls.insert(url.to_owned());
        entries.push(RefEntry { id, url: url.to_owned() });
        Ok(())
    })?;
    Ok((entries, report))
}

pub fn read_posts_file(path: impl AsRef<Path>, format: &TableFormat) -> Result<(Vec<PostRecord>, IngestReport)> {
    parse_posts(File::open(path)?, format)
}

pub fn read_comments_file(
    path: impl AsRef<Path>,
    format: &TableFormat,
) -> Result<(Vec<CommentRecord>, IngestReport)> {
    parse_comments(File::open(path)?, format)
}

fn write_header<W: Write>(w: &mut W, columns: &[&str], delim: char) -> io::Result<()> {
    writeln!(w, "{}", columns.join(&delim.to_string()))
}

/// Writes posts with a header line and 1-based row numbers.
pub fn write_posts<W: Write>(w: W, posts: &[PostRecord], format: &TableFormat) -> io::Result<()> {
    let mut w = BufWriter::with_capacity(1 << 20, w);
    let d = format.delimiter_char();
    write_header(&mut w, &POST_COLUMNS, d)?;
    for (i, p) in posts.iter().enumerate() {
        writeln!(w, "{}{d}{}{d}{}{d}{}", i + 1, p.message_id, p.author_id, p.created)?;
    }
    w.flush()
}

pub fn write_comments<W: Write>(w: W, comments: &[CommentRecord], format: &TableFormat) -> io::Result<()> {
    let mut w = BufWriter::with_capacity(1 << 20, w);
    let d = format.delimiter_char();
    write_header(&mut w, &COMMENT_COLUMNS, d)?;
    for (i, c) in comments.iter().enumerate() {
        writeln!(
            w,
            "{}{d}{}{d}{}{d}{}{d}{}",
            i + 1,
            c.message_id,
            c.author_id,
            c.created,
            c.parent_id
        )?;
    }
    w.flush()
}

pub fn write_references<W: Write>(w: W, entries: &[RefEntry], format: &TableFormat) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    let d = format.delimiter_char();
    write_header(&mut w, &REFERENCE_COLUMNS, d)?;
    for (i, e) in entries.iter().enumerate() {
        writeln!(w, "{}{d}{}{d}{}", i + 1, e.id, e.url)?;
    }
    w.flush()
}

/// Writes the quarantine sidecar: the original row followed by its reason code.
pub fn write_quarantine<W: Write>(w: W, report: &IngestReport, format: &TableFormat) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    let d = format.delimiter_char();
    for q in &report.quarantined {
        writeln!(w, "{}{d}{}", q.raw, q.reason)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn posts(src: &str) -> (Vec<PostRecord>, IngestReport) {
        parse_posts(src.as_bytes(), &TableFormat::tsv()).unwrap()
    }

    #[test]
    fn well_formed_posts() {
        let (p, r) = posts("1\t10\t100\t1357000000\n2\t11\t100\t1357000060\n3\t12\t101\t1357000120\n");
        assert_eq!(p.len(), 3);
        assert_eq!(r.rows_quarantined, 0);
        assert_eq!(p[1], PostRecord { message_id: 11, author_id: 100, created: 1357000060 });
    }

    #[test]
    fn non_numeric_timestamp_is_quarantined() {
        let (p, r) = posts("1\t10\t100\tyesterday\n");
        assert!(p.is_empty());
        assert_eq!(r.reason_count(QuarantineReason::BadTimestamp), 1);
        assert_eq!(r.quarantined[0].raw, "1\t10\t100\tyesterday");
    }

    #[test]
    fn duplicate_message_id_keeps_first() {
        let (p, r) = posts("1\t10\t100\t5\n2\t10\t200\t6\n3\t11\t100\t7\n");
        assert_eq!(p.iter().map(|p| p.message_id).collect::<Vec<_>>(), vec![10, 11]);
        assert_eq!(p[0].author_id, 100);
        assert_eq!(r.reason_count(QuarantineReason::DuplicateMessageId), 1);
        assert_eq!(r.quarantined[0].line, 2);
    }

    #[test]
    fn negative_timestamps_are_accepted() {
        let (p, _) = posts("1\t10\t100\t-42\n");
        assert_eq!(p[0].created, -42);
    }

    #[test]
    fn header_is_skipped_and_checked_in_strict_mode() {
        let src = "#\tmessage_id\tauthor_id\tcreated\n1\t1\t1\t1\n";
        let (p, r) = posts(src);
        assert_eq!((p.len(), r.rows_read), (1, 1));

        let strict = TableFormat { strict_header: true, ..TableFormat::tsv() };
        assert!(parse_posts(src.as_bytes(), &strict).is_ok());
        let bad = "#\tid\tauthor\ttime\n1\t1\t1\t1\n";
        assert!(matches!(parse_posts(bad.as_bytes(), &strict), Err(IngestError::Schema { .. })));
        assert!(matches!(parse_posts("1\t1\t1\t1\n".as_bytes(), &strict), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn comma_delimiter_and_crlf() {
        let (c, r) = parse_comments("1,5,7,100,1\r\n2,6,8,101,5\r\n".as_bytes(), &TableFormat::csv()).unwrap();
        assert_eq!(r.rows_accepted, 2);
        assert_eq!(c[1].parent_id, 5);
    }

    #[test]
    fn self_parent_comment() {
        let (c, r) = parse_comments("1\t5\t7\t100\t5\n".as_bytes(), &TableFormat::tsv()).unwrap();
        assert!(c.is_empty());
        assert_eq!(r.reason_count(QuarantineReason::SelfParent), 1);
    }

    #[test]
    fn mixed_comment_fixture() {
        // Rows 4 (bad parent) and 9 (missing column) are malformed.
        let src = "\
1\t101\t1\t10\t1
2\t102\t2\t11\t1
3\t103\t3\t12\t101
4\t104\t4\t13\tx
5\t105\t5\t14\t2
6\t106\t1\t15\t2
7\t107\t2\t16\t105
8\t108\t3\t17\t1
9\t109\t4\t18
10\t110\t5\t19\t3
";
        let (c, r) = parse_comments(src.as_bytes(), &TableFormat::tsv()).unwrap();
        assert_eq!(r.rows_read, 10);
        assert_eq!(r.rows_accepted, 8);
        assert_eq!(c.len(), 8);
        assert_eq!(r.reason_count(QuarantineReason::BadParentId), 1);
        assert_eq!(r.reason_count(QuarantineReason::WrongFieldCount), 1);
    }

    #[test]
    fn window_filter() {
        let fmt = TableFormat { window: Some((0, 100)), ..TableFormat::tsv() };
        let (p, r) = parse_posts("1\t1\t1\t50\n2\t2\t1\t101\n".as_bytes(), &fmt).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(r.reason_count(QuarantineReason::OutsideWindow), 1);
    }

    #[test]
    fn invalid_utf8_is_quarantined() {
        let mut src = b"1\t1\t1\t1\n".to_vec();
        src.extend_from_slice(b"2\t\xff\t1\t1\n");
        let (p, r) = parse_posts(&src[..], &TableFormat::tsv()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(r.reason_count(QuarantineReason::BadEncoding), 1);
    }

    #[test]
    fn references_keep_delimiters_in_url() {
        let src = "1,7,https://example.org/a?x=1,2\n2,8,\n3,7,https://example.org/b\n";
        let (e, r) = parse_references(src.as_bytes(), &TableFormat::csv()).unwrap();
        assert_eq!(e, vec![RefEntry { id: 7, url: "https://example.org/a?x=1,2".into() }]);
        assert_eq!(r.reason_count(QuarantineReason::EmptyUrl), 1);
        assert_eq!(r.reason_count(QuarantineReason::DuplicateId), 1);
    }

    #[test]
    fn sidecar_lists_rejected_rows() {
        let (_, r) = posts("1\t1\t1\t1\n2\tx\t1\t1\n");
        let mut out = Vec::new();
        write_quarantine(&mut out, &r, &TableFormat::tsv()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "2\tx\t1\t1\tbad_message_id\n");
    }

    #[test]
    fn unreadable_source_is_fatal() {
        struct Broken;
        impl Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> io::Result<usize> {
                Err(io::Error::other("boom"))
            }
        }
        assert!(matches!(parse_posts(Broken, &TableFormat::tsv()), Err(IngestError::Io(_))));
    }
}
