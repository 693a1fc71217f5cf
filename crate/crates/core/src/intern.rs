//! Bijective url ↔ integer id tables.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::ingest::{self, IngestError, IngestReport, RefEntry, TableFormat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InternError {
    #[error("empty url")]
    EmptyUrl,
    #[error("id {0} is already bound to another url")]
    IdConflict(u64),
    #[error("url {0:?} is already bound to another id")]
    UrlConflict(String),
    #[error("id 0 is reserved")]
    ZeroId,
}

/// Interning state. Fresh ids are handed out densely from 1 in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct ReferenceTable {
    by_url: HashMap<String, u64>,
    by_id: BTreeMap<u64, String>,
    next: u64,
}

impl ReferenceTable {
    pub fn new() -> Self {
        Self { next: 1, ..Default::default() }
    }

    /// Returns the id for `url`, allocating one if it is new.
    pub fn intern(&mut self, url: &str) -> Result<u64, InternError> {
        if url.is_empty() {
            return Err(InternError::EmptyUrl);
        }
        if let Some(&id) = self.by_url.get(url) {
            return Ok(id);
        }
        let id = self.next.max(1);
        self.next = id + 1;
        self.by_url.insert(url.to_owned(), id);
        self.by_id.insert(id, url.to_owned());
        Ok(id)
    }

    pub fn id_of(&self, url: &str) -> Option<u64> {
        self.by_url.get(url).copied()
    }

    pub fn url_of(&self, id: u64) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Entries ordered by id.
    pub fn entries(&self) -> Vec<RefEntry> {
        self.by_id.iter().map(|(&id, url)| RefEntry { id, url: url.clone() }).collect()
    }

    /// Rebuilds a table from explicit pairs, rejecting anything that would
    /// break the bijection. Later fresh ids continue after the largest one.
    pub fn from_entries<I>(entries: I) -> Result<Self, InternError>
    where
        I: IntoIterator<Item = RefEntry>,
    {
        let mut table = Self::new();
        for RefEntry { id, url } in entries {
            if id == 0 {
                return Err(InternError::ZeroId);
            }
            if url.is_empty() {
                return Err(InternError::EmptyUrl);
            }
            match (table.by_id.get(&id), table.by_url.get(&url)) {
                (Some(u), _) if *u != url => return Err(InternError::IdConflict(id)),
                (_, Some(&i)) if i != id => return Err(InternError::UrlConflict(url)),
                (Some(_), Some(_)) => continue,
                _ => {}
            }
            table.next = table.next.max(id + 1);
            table.by_url.insert(url.clone(), id);
            table.by_id.insert(id, url);
        }
        Ok(table)
    }

    pub fn export<W: Write>(&self, w: W, format: &TableFormat) -> io::Result<()> {
        ingest::write_references(w, &self.entries(), format)
    }

    /// Reads a reference file. Rows that break the bijection are quarantined
    /// in the returned report rather than failing the whole import.
    pub fn import<R: Read>(r: R, format: &TableFormat) -> Result<(Self, IngestReport), IngestError> {
        let (entries, report) = ingest::parse_references(r, format)?;
        let table = Self::from_entries(entries).expect("parse_references enforces the bijection");
        Ok((table, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_seen_order() {
        let mut t = ReferenceTable::new();
        let ids: Vec<u64> = ["a", "b", "a"].iter().map(|u| t.intern(u).unwrap()).collect();
        assert_eq!(ids, vec![1, 2, 1]);
        assert_eq!(t.url_of(2), Some("b"));
    }

    #[test]
    fn dense_ids() {
        let mut t = ReferenceTable::new();
        for i in 0..500 {
            t.intern(&format!("https://example.org/u/{i}")).unwrap();
        }
        let ids: Vec<u64> = t.entries().iter().map(|e| e.id).collect();
        assert_eq!(ids, (1..=500).collect::<Vec<_>>());
    }

    #[test]
    fn empty_url_rejected() {
        assert_eq!(ReferenceTable::new().intern(""), Err(InternError::EmptyUrl));
    }

    #[test]
    fn conflicting_entries_rejected() {
        let e = |id, url: &str| RefEntry { id, url: url.into() };
        assert_eq!(
            ReferenceTable::from_entries([e(1, "a"), e(1, "b")]).unwrap_err(),
            InternError::IdConflict(1)
        );
        assert_eq!(
            ReferenceTable::from_entries([e(1, "a"), e(2, "a")]).unwrap_err(),
            InternError::UrlConflict("a".into())
        );
        let mut t = ReferenceTable::from_entries([e(7, "x")]).unwrap();
        assert_eq!(t.intern("y").unwrap(), 8);
    }

    proptest! {
        #[test]
        fn export_import_round_trip(urls in prop::collection::vec("[a-z0-9/:.,?=]{1,24}", 0..64)) {
            let mut t = ReferenceTable::new();
            for u in &urls {
                t.intern(u).unwrap();
            }
            for fmt in [TableFormat::tsv(), TableFormat::csv()] {
                let mut buf = Vec::new();
                t.export(&mut buf, &fmt).unwrap();
                let (back, report) = ReferenceTable::import(&buf[..], &fmt).unwrap();
                prop_assert_eq!(report.rows_quarantined, 0);
                prop_assert_eq!(back.entries(), t.entries());
            }
        }
    }
}
