//! Feature database and its `CBIRIDX 1` text format.
//!
//! ```text
//! CBIRIDX 1
//! <id>\t<source>\t<entropy>\t<phi1>\t...\t<phi7>
//! ```
//!
//! One newline-terminated record per line, reals in scientific notation
//! with 17 significant digits so every `f64` survives a round trip.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::features::FeatureVector;

pub const MAGIC: &str = "CBIRIDX 1";
pub const VERSION: u32 = 1;

const FIELDS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("no record with id {0:?}")]
    NotFound(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("line 1: expected magic {MAGIC:?}")]
    BadMagic,
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexRecord {
    pub id: String,
    pub source: String,
    pub entropy: f64,
    pub phi: [f64; 7],
}

impl IndexRecord {
    pub fn new(id: impl Into<String>, source: impl Into<String>, features: &FeatureVector) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
            entropy: features.entropy,
            phi: features.phi,
        }
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector::new(self.entropy, self.phi)
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("id is empty".into());
        }
        if self.id.contains(['\t', '\n', '\r']) {
            return Err(format!("id {:?} contains a tab or line break", self.id));
        }
        if self.source.contains(['\t', '\n', '\r']) {
            return Err(format!("source {:?} contains a tab or line break", self.source));
        }
        if !(0.0..=8.0).contains(&self.entropy) {
            return Err(format!("entropy {} outside [0, 8]", self.entropy));
        }
        if let Some(v) = self.phi.iter().find(|v| !v.is_finite()) {
            return Err(format!("invariant {v} is not finite"));
        }
        Ok(())
    }
}

/// Records in insertion order with unique ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IndexDb {
    records: Vec<IndexRecord>,
    ids: HashSet<String>,
}

impl IndexDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u32 {
        VERSION
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Appends a record. The database is unchanged on error.
    pub fn add(&mut self, rec: IndexRecord) -> Result<(), IndexError> {
        rec.validate().map_err(IndexError::InvalidRecord)?;
        if self.ids.contains(&rec.id) {
            return Err(IndexError::DuplicateId(rec.id));
        }
        self.ids.insert(rec.id.clone());
        self.records.push(rec);
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<IndexRecord, IndexError> {
        let pos = self
            .records
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| IndexError::NotFound(id.to_string()))?;
        self.ids.remove(id);
        Ok(self.records.remove(pos))
    }

    pub fn save(&self) -> Vec<u8> {
        let mut out = String::with_capacity(32 + self.records.len() * 256);
        out.push_str(MAGIC);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.id);
            out.push('\t');
            out.push_str(&r.source);
            for v in std::iter::once(r.entropy).chain(r.phi) {
                write!(out, "\t{v:.16e}").expect("writing to a String");
            }
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn load(bytes: &[u8]) -> Result<Self, IndexError> {
        let malformed = |line: usize, reason: String| IndexError::MalformedRecord { line, reason };
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            malformed(line, "invalid UTF-8".into())
        })?;
        let body = match text.strip_prefix(MAGIC) {
            Some(rest) if rest.is_empty() || rest.starts_with('\n') => rest.strip_prefix('\n').unwrap_or(rest),
            _ => return Err(IndexError::BadMagic),
        };
        if !body.is_empty() && !body.ends_with('\n') {
            let line = body.split('\n').count() + 1;
            return Err(malformed(line, "missing final newline".into()));
        }

        let mut db = Self::new();
        for (i, line) in body.split_terminator('\n').enumerate() {
            let lineno = i + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != FIELDS {
                return Err(malformed(lineno, format!("expected {FIELDS} fields, found {}", fields.len())));
            }
            let mut nums = [0.0f64; 8];
            for (slot, field) in nums.iter_mut().zip(&fields[2..]) {
                *slot = field
                    .parse::<f64>()
                    .map_err(|_| malformed(lineno, format!("unparsable number {field:?}")))?;
            }
            let mut phi = [0.0; 7];
            phi.copy_from_slice(&nums[1..]);
            let rec = IndexRecord {
                id: fields[0].to_string(),
                source: fields[1].to_string(),
                entropy: nums[0],
                phi,
            };
            db.add(rec).map_err(|e| match e {
                IndexError::DuplicateId(id) => malformed(lineno, format!("duplicate id {id:?}")),
                IndexError::InvalidRecord(reason) => malformed(lineno, reason),
                other => malformed(lineno, other.to_string()),
            })?;
        }
        Ok(db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str) -> IndexRecord {
        IndexRecord {
            id: id.into(),
            source: format!("images/{id}.pgm"),
            entropy: 0.25,
            phi: [0.159, 1e-3, -2.5e-9, 3.0e-12, 0.0, -1e-20, 7.25e-25],
        }
    }

    #[test]
    fn add_and_duplicates() {
        let mut db = IndexDb::new();
        db.add(rec("a")).unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.add(rec("a")), Err(IndexError::DuplicateId("a".into())));
        assert_eq!(db.len(), 1);
        db.add(rec("b")).unwrap();
        assert_eq!(db.records()[0], rec("a"));
        assert_eq!(db.records()[1].id, "b");
    }

    #[test]
    fn remove_then_re_add() {
        let mut db = IndexDb::new();
        db.add(rec("a")).unwrap();
        db.add(rec("b")).unwrap();
        assert_eq!(db.remove("a").unwrap().id, "a");
        assert_eq!(db.len(), 1);
        assert_eq!(db.remove("a"), Err(IndexError::NotFound("a".into())));
        db.add(rec("a")).unwrap();
        assert_eq!(db.records().iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["b", "a"]);
    }

    #[test]
    fn rejects_invalid_records() {
        let mut db = IndexDb::new();
        for bad in [rec(""), rec("a\tb"), IndexRecord { entropy: 8.5, ..rec("x") }, IndexRecord { source: "a\nb".into(), ..rec("y") }] {
            assert!(matches!(db.add(bad), Err(IndexError::InvalidRecord(_))));
        }
        assert!(db.is_empty());
    }

    #[test]
    fn empty_db_format() {
        assert_eq!(IndexDb::new().save(), b"CBIRIDX 1\n");
        assert_eq!(IndexDb::load(b"CBIRIDX 1\n").unwrap(), IndexDb::new());
        assert_eq!(IndexDb::load(b"CBIRIDX 1").unwrap(), IndexDb::new());
    }

    #[test]
    fn one_record_format() {
        let mut db = IndexDb::new();
        db.add(rec("a")).unwrap();
        let text = String::from_utf8(db.save()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "CBIRIDX 1");
        let fields: Vec<&str> = lines[1].split('\t').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(&fields[..3], &["a", "images/a.pgm", "2.5000000000000000e-1"]);
        assert_eq!(fields[3], "1.5900000000000000e-1");
    }

    #[test]
    fn load_errors_name_lines() {
        assert_eq!(IndexDb::load(b"CBIRIDX 2\n"), Err(IndexError::BadMagic));
        assert_eq!(IndexDb::load(b""), Err(IndexError::BadMagic));
        assert_eq!(IndexDb::load(b"CBIRIDX 10\n"), Err(IndexError::BadMagic));
        let mut db = IndexDb::new();
        db.add(rec("a")).unwrap();
        let good = String::from_utf8(db.save()).unwrap();
        let line = good.lines().nth(1).unwrap();

        let cases = [
            (format!("{good}a\tb\n"), 3),
            (format!("{good}{}\n", line.replacen("a\t", "z\t", 1).replace("1.5900000000000000e-1", "abc")), 3),
            (format!("{good}{line}\n"), 3),
            (format!("{good}\n"), 3),
            (format!("{good}{}", line.replacen("a\t", "c\t", 1)), 3),
            (good.replace("2.5000000000000000e-1", "9.0"), 2),
        ];
        for (text, expected_line) in cases {
            match IndexDb::load(text.as_bytes()) {
                Err(IndexError::MalformedRecord { line, .. }) => assert_eq!(line, expected_line, "{text:?}"),
                other => panic!("expected MalformedRecord for {text:?}, got {other:?}"),
            }
        }
    }

    fn arb_record() -> impl Strategy<Value = IndexRecord> {
        (
            "[A-Za-z0-9_.#-]{1,12}",
            "[ -~]{0,20}",
            0.0f64..=8.0,
            proptest::array::uniform7(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO),
        )
            .prop_map(|(id, source, entropy, phi)| IndexRecord { id, source, entropy, phi })
    }

    proptest! {
        #[test]
        fn save_load_is_lossless(recs in proptest::collection::vec(arb_record(), 0..8)) {
            let mut db = IndexDb::new();
            for r in recs {
                let _ = db.add(r);
            }
            let bytes = db.save();
            let loaded = IndexDb::load(&bytes).unwrap();
            prop_assert_eq!(loaded.records().len(), db.records().len());
            for (a, b) in loaded.records().iter().zip(db.records()) {
                prop_assert_eq!(&a.id, &b.id);
                prop_assert_eq!(&a.source, &b.source);
                prop_assert_eq!(a.entropy.to_bits(), b.entropy.to_bits());
                for i in 0..7 {
                    prop_assert_eq!(a.phi[i].to_bits(), b.phi[i].to_bits());
                }
            }
            prop_assert_eq!(loaded.save(), bytes);
        }
    }
}
