//! Embedded corpus of worked examples and rigid mirror polynomials.
//!
//! Each file holds `#` comment lines, `name: value` headers, a `---`
//! separator and the payload (a polynomial, or a polytope in text form).
//! Headers `expect-period`, `expect-sc` and `expect-rigid` record values
//! that [`verify_entry`] recomputes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::laurent::{classical_period, LaurentPolynomial};
use crate::polygon2d::{rigid_mmlp_2d, singularity_content};
use crate::polytope::LatticePolytope;
use crate::rigidity::{certify_rigid, MutationSearchBudget};

const FILES: &[(&str, &str)] = include!(concat!(env!("OUT_DIR"), "/corpus_files.rs"));

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    Polynomial,
    Polytope,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub key: String,
    pub group: String,
    pub kind: EntryKind,
    pub payload: String,
    pub comments: Vec<String>,
    /// File the entry was loaded from, relative to the corpus root.
    pub source: String,
    pub expect_period: Option<Vec<BigInt>>,
    pub expect_sc: Option<String>,
    pub expect_rigid: Option<bool>,
}

impl CorpusEntry {
    /// Parses one corpus file. Only trailing whitespace is ignored.
    pub fn parse(source: &str, text: &str) -> Result<CorpusEntry> {
        let mut headers: BTreeMap<String, String> = BTreeMap::new();
        let mut comments = Vec::new();
        let mut lines = text.lines().enumerate();
        let mut payload = Vec::new();
        for (i, raw) in lines.by_ref() {
            let line = raw.trim_end();
            if line == "---" {
                break;
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim_start().to_string());
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(": ")
                .ok_or_else(|| Error::parse(i, format!("{source}: expected `name: value`")))?;
            if headers.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::parse(i, format!("{source}: repeated header {k}")));
            }
        }
        for (_, raw) in lines {
            payload.push(raw.trim_end());
        }
        while payload.last() == Some(&"") {
            payload.pop();
        }
        let mut take = |k: &str| headers.remove(k);
        let key = take("key").ok_or_else(|| Error::parse(0, format!("{source}: missing key")))?;
        let group = take("group").ok_or_else(|| Error::parse(0, format!("{source}: missing group")))?;
        let kind = match take("type").as_deref() {
            Some("polynomial") => EntryKind::Polynomial,
            Some("polytope") => EntryKind::Polytope,
            other => return Err(Error::parse(0, format!("{source}: bad type {other:?}"))),
        };
        let expect_period = take("expect-period")
            .map(|s| {
                s.split_whitespace()
                    .map(|t| {
                        t.parse::<BigInt>()
                            .map_err(|_| Error::parse(0, format!("{source}: bad period")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let expect_sc = take("expect-sc");
        let expect_rigid = take("expect-rigid")
            .map(|s| match s.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::parse(0, format!("{source}: bad expect-rigid"))),
            })
            .transpose()?;
        if let Some(k) = headers.keys().next() {
            return Err(Error::parse(0, format!("{source}: unknown header {k}")));
        }
        Ok(CorpusEntry {
            key,
            group,
            kind,
            payload: payload.join("\n"),
            comments,
            source: source.to_string(),
            expect_period,
            expect_sc,
            expect_rigid,
        })
    }

    pub fn polynomial(&self) -> Result<LaurentPolynomial> {
        match self.kind {
            EntryKind::Polynomial => LaurentPolynomial::parse(&self.payload),
            EntryKind::Polytope => Err(Error::Unsupported(format!("{} is a polytope", self.key))),
        }
    }

    /// The payload polytope, or the Newton polytope of a polynomial.
    pub fn polytope(&self) -> Result<LatticePolytope> {
        match self.kind {
            EntryKind::Polynomial => self.polynomial()?.newton_polytope(),
            EntryKind::Polytope => LatticePolytope::from_text(&self.payload),
        }
    }

    /// Whether the entry belongs to a table of mirrors of one Fano variety.
    pub fn is_table_entry(&self) -> bool {
        self.key.starts_with("reflexive-")
    }
}

/// Every embedded entry, sorted by key.
pub fn entries() -> &'static [CorpusEntry] {
    static ENTRIES: OnceLock<Vec<CorpusEntry>> = OnceLock::new();
    ENTRIES.get_or_init(|| {
        let mut v: Vec<CorpusEntry> = FILES
            .iter()
            .map(|(path, text)| CorpusEntry::parse(path, text).expect("embedded corpus parses"))
            .collect();
        v.sort_by(|a, b| a.key.cmp(&b.key));
        v
    })
}

pub fn get(key: &str) -> Result<&'static CorpusEntry> {
    entries()
        .iter()
        .find(|e| e.key == key)
        .ok_or_else(|| Error::NotFound(key.to_string()))
}

/// Keys starting with `prefix`, sorted.
pub fn list(prefix: &str) -> Vec<&'static str> {
    entries()
        .iter()
        .filter(|e| e.key.starts_with(prefix))
        .map(|e| e.key.as_str())
        .collect()
}

/// Entries grouped by table.
pub fn tables() -> BTreeMap<&'static str, Vec<&'static CorpusEntry>> {
    let mut out: BTreeMap<&str, Vec<&CorpusEntry>> = BTreeMap::new();
    for e in entries().iter().filter(|e| e.is_table_entry()) {
        out.entry(e.group.as_str()).or_default().push(e);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub expected: String,
    pub found: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.expected == self.found
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub key: String,
    pub source: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.checks.is_empty() {
            return writeln!(f, "{}: no expectations", self.key);
        }
        for c in &self.checks {
            let status = if c.passed() { "ok" } else { "FAIL" };
            write!(f, "{} {} {}: expected {}", self.key, c.name, status, c.expected)?;
            if !c.passed() {
                write!(f, ", found {} (from {})", c.found, self.source)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn join(v: &[BigInt]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Recomputes the expectations stored with an entry.
pub fn verify_entry(key: &str) -> Result<VerificationReport> {
    let e = get(key)?;
    let mut checks = Vec::new();
    if let Some(want) = &e.expect_period {
        let f = match e.kind {
            EntryKind::Polynomial => e.polynomial()?,
            EntryKind::Polytope => rigid_mmlp_2d(&e.polytope()?)?,
        };
        let got = classical_period(&f, want.len().saturating_sub(1))?;
        let found = match got.integers() {
            Some(v) => join(&v),
            None => got.to_string(),
        };
        checks.push(Check {
            name: "period",
            expected: join(want),
            found,
        });
    }
    if let Some(want) = &e.expect_sc {
        checks.push(Check {
            name: "singularity-content",
            expected: want.clone(),
            found: singularity_content(&e.polytope()?)?.to_string(),
        });
    }
    if let Some(want) = e.expect_rigid {
        let report = certify_rigid(&e.polynomial()?, None, &MutationSearchBudget::default())?;
        checks.push(Check {
            name: "rigid",
            expected: if want { "rigid" } else { "not_rigid" }.to_string(),
            found: report.certificate.tag().to_string(),
        });
    }
    Ok(VerificationReport {
        key: e.key.clone(),
        source: e.source.clone(),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        assert_eq!(
            get("reflexive-1/P3").unwrap().polynomial().unwrap(),
            LaurentPolynomial::parse("x+y+z+1/(xyz)").unwrap()
        );
        assert!(matches!(get("nope"), Err(Error::NotFound(_))));
        assert_eq!(
            list("example-minkowski-hexagon/f"),
            vec!["example-minkowski-hexagon/f2", "example-minkowski-hexagon/f3"]
        );
        assert_eq!(
            get("quadrilateral-mutation/left")
                .unwrap()
                .polytope()
                .unwrap()
                .vertices()
                .len(),
            4
        );
        assert!(entries().len() >= 40);
    }

    #[test]
    fn parsing_rules() {
        let text = "# c\nkey: a/b  \ngroup: g\ntype: polynomial\n---\nx+1/x  \n\n";
        let e = CorpusEntry::parse("t.txt", text).unwrap();
        assert_eq!(e.key, "a/b");
        assert_eq!(e.payload, "x+1/x");
        assert!(CorpusEntry::parse("t.txt", "key: a\ngroup: g\ntype: blob\n---\nx").is_err());
        assert!(CorpusEntry::parse("t.txt", "key: a\ngroup: g\ntype: polynomial\nextra: 1\n---\nx").is_err());
        assert!(CorpusEntry::parse("t.txt", "group: g\ntype: polynomial\n---\nx").is_err());
    }

    #[test]
    fn every_polynomial_is_admissible() {
        for e in entries() {
            let p = e.polytope().unwrap();
            assert!(p.is_fano(), "{}", e.key);
            if e.kind == EntryKind::Polynomial {
                let f = e.polynomial().unwrap();
                assert!(f.is_normalised() && f.has_zero_constant_term(), "{}", e.key);
            }
        }
    }

    #[test]
    fn cheap_expectations_hold() {
        for key in [
            "example-sublattice/f",
            "quadrilateral-mutation/left",
            "toric/F1",
            "square-family/alpha0",
        ] {
            let r = verify_entry(key).unwrap();
            assert!(r.passed(), "{r}");
            assert!(!r.checks.is_empty());
        }
        let r = verify_entry("square-family/polygon").unwrap();
        assert!(r.checks.is_empty() && r.passed());
        assert!(r.to_string().contains("no expectations"));
    }
}
