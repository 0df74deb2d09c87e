//
// Copyright 2026 The shufdp-kde Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! Labeled datasets, vocabularies and their text formats.
//!
//! Dataset file: header `n d m`, then `n` rows of `d` floats followed by a
//! 1-based label, all space-separated. Vocabulary file: one `term` followed by
//! `d` floats per line. Labels are 0-based in memory.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::vector::check_unit;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    classes: usize,
    vectors: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(
        dim: usize,
        classes: usize,
        vectors: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::invalid("dataset needs d >= 1 and m >= 1"));
        }
        if vectors.len() != labels.len() {
            return Err(Error::invalid("vector and label counts differ"));
        }
        if vectors.len() < classes {
            return Err(Error::invalid(format!(
                "dataset has n = {} < m = {classes}",
                vectors.len()
            )));
        }
        for x in &vectors {
            check_unit(x, dim)?;
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(LabeledDataset {
            dim,
            classes,
            vectors,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0; self.classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    /// Vectors whose label is `class`.
    pub fn class_vectors(&self, class: usize) -> Vec<&[f64]> {
        self.vectors
            .iter()
            .zip(&self.labels)
            .filter(|(_, &c)| c == class)
            .map(|(x, _)| x.as_slice())
            .collect()
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines().enumerate();
        let (n, dim, classes) = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::parse(1, "missing header `n d m`"));
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(idx + 1, "header must be `n d m`"));
            }
            let num = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::parse(
                        idx + 1,
                        format!("header field {what} is not a nonnegative integer: '{s}'"),
                    )
                })
            };
            break (
                num(fields[0], "n")?,
                num(fields[1], "d")?,
                num(fields[2], "m")?,
            );
        };
        if n == 0 || dim == 0 || classes == 0 {
            return Err(Error::parse(1, "header values must be positive"));
        }
        let mut vectors = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if vectors.len() == n {
                return Err(Error::parse(
                    lineno,
                    format!("more than the declared {n} rows"),
                ));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim + 1 {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "expected {} fields ({dim} floats and a label), got {}",
                        dim + 1,
                        fields.len()
                    ),
                ));
            }
            let x = parse_floats(&fields[..dim], lineno)?;
            check_unit(&x, dim).map_err(|e| Error::parse(lineno, e.to_string()))?;
            let label: usize = fields[dim].parse().map_err(|_| {
                Error::parse(lineno, format!("label '{}' is not an integer", fields[dim]))
            })?;
            if label == 0 || label > classes {
                return Err(Error::parse(
                    lineno,
                    format!("label {label} outside 1..={classes}"),
                ));
            }
            vectors.push(x);
            labels.push(label - 1);
        }
        if vectors.len() != n {
            return Err(Error::parse(
                0,
                format!("declared {n} rows, found {}", vectors.len()),
            ));
        }
        LabeledDataset::new(dim, classes, vectors, labels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(fs::File::open(path)?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.len(), self.dim, self.classes)?;
        for (x, c) in self.vectors.iter().zip(&self.labels) {
            write_floats(&mut w, x)?;
            writeln!(w, " {}", c + 1)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write(w))
    }
}

/// Public term list with unit embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    dim: usize,
    terms: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl Vocabulary {
    pub fn new(dim: usize, terms: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if terms.is_empty() || terms.len() != vectors.len() {
            return Err(Error::invalid(
                "vocabulary needs matching, nonempty term and vector lists",
            ));
        }
        let mut seen = HashSet::new();
        for t in &terms {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid term '{t}'")));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::invalid(format!("duplicate term '{t}'")));
            }
        }
        for v in &vectors {
            check_unit(v, dim)?;
        }
        Ok(Vocabulary {
            dim,
            terms,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Parses a vocabulary; `d` is taken from the first entry.
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut dim = None;
        let mut terms = Vec::new();
        let mut vectors = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let d = *dim.get_or_insert(fields.len() - 1);
            if d == 0 || fields.len() != d + 1 {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "expected a term and {} floats, got {} fields",
                        d.max(1),
                        fields.len()
                    ),
                ));
            }
            if !seen.insert(fields[0].to_string()) {
                return Err(Error::parse(
                    lineno,
                    format!("duplicate term '{}'", fields[0]),
                ));
            }
            let v = parse_floats(&fields[1..], lineno)?;
            check_unit(&v, d).map_err(|e| Error::parse(lineno, e.to_string()))?;
            terms.push(fields[0].to_string());
            vectors.push(v);
        }
        let Some(dim) = dim else {
            return Err(Error::parse(0, "vocabulary is empty"));
        };
        Vocabulary::new(dim, terms, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(fs::File::open(path)?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, v) in self.terms.iter().zip(&self.vectors) {
            write!(w, "{t} ")?;
            write_floats(&mut w, v)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write(w))
    }
}

fn parse_floats(fields: &[&str], lineno: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|s| match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                lineno,
                format!("'{s}' is not a finite number"),
            )),
        })
        .collect()
}

fn write_floats<W: Write>(w: &mut W, x: &[f64]) -> Result<()> {
    for (k, v) in x.iter().enumerate() {
        if k > 0 {
            w.write_all(b" ")?;
        }
        w.write_all(sig17(*v).as_bytes())?;
    }
    Ok(())
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(&mut tmp);
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Atomic write of an in-memory string.
pub fn write_string_atomic(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(contents.as_bytes())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "3 2 2\n1 0 1\n0 1 2\n0.6 0.8 1\n";

    #[test]
    fn parses_dataset() {
        let ds = LabeledDataset::parse(GOOD.as_bytes()).unwrap();
        assert_eq!((ds.len(), ds.dim(), ds.classes()), (3, 2, 2));
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_counts(), vec![2, 1]);
        assert_eq!(ds.class_vectors(1), vec![&[0.0, 1.0][..]]);
    }

    #[test]
    fn dataset_round_trips_exactly() {
        let x = [0.1f64, (1.0f64 - 0.01).sqrt()];
        let ds = LabeledDataset::new(2, 2, vec![x.to_vec(), vec![1.0, 0.0]], vec![1, 0]).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        let back = LabeledDataset::parse(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_malformed_datasets() {
        let cases = [
            "",
            "3 2\n",
            "2 2 2\n1 0 1\n",
            "1 2 2\n1 0 1\n0 1 2\n",
            "2 2 2\n1 0 1\n1 1 2\n",
            "2 2 2\n1 0 1\n0 1 3\n",
            "2 2 2\n1 0 1\n0 1 0\n",
            "2 2 2\n1 0 1\n0 1\n",
            "2 2 2\n1 0 1\n0 nan 2\n",
            "1 2 2\n1 0 1\n",
        ];
        for c in cases {
            assert!(
                LabeledDataset::parse(c.as_bytes()).is_err(),
                "accepted {c:?}"
            );
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match LabeledDataset::parse("2 2 2\n1 0 1\n1 1 2\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_vocabulary() {
        let v = Vocabulary::parse("cat 1 0\ndog 0 1\n\n".as_bytes()).unwrap();
        assert_eq!(v.terms(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(v.dim(), 2);
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert_eq!(Vocabulary::parse(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn rejects_bad_vocabulary() {
        for c in [
            "",
            "cat 1 0\ncat 0 1\n",
            "cat 1 0\ndog 0 1 0\n",
            "cat 2 0\n",
            "cat\n",
        ] {
            assert!(Vocabulary::parse(c.as_bytes()).is_err(), "accepted {c:?}");
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_string_atomic(&path, "one").unwrap();
        write_string_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
