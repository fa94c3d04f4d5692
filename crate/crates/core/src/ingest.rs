//! Ingestion of the three-file CSV corpus and assembly of the sparse binary
//! users-likes matrix.
//!
//! File formats (comma-separated, UTF-8, header row, RFC-4180 quoting
//! accepted):
//!
//! * `users.csv` — `userid,gender,age,political,ope,con,ext,agr,neu`; empty
//!   cells and the literal `NA` mean missing.
//! * `likes.csv` — two columns, like id and display name.
//! * `users-likes.csv` — two columns, user id and like id; one row per pair.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

/// The eight dependent variables, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraitName {
    Gender,
    Age,
    Political,
    Ope,
    Con,
    Ext,
    Agr,
    Neu,
}

impl TraitName {
    pub const ALL: [TraitName; 8] = [
        TraitName::Gender,
        TraitName::Age,
        TraitName::Political,
        TraitName::Ope,
        TraitName::Con,
        TraitName::Ext,
        TraitName::Agr,
        TraitName::Neu,
    ];

    /// Column name in users.csv.
    pub fn column(&self) -> &'static str {
        match self {
            TraitName::Gender => "gender",
            TraitName::Age => "age",
            TraitName::Political => "political",
            TraitName::Ope => "ope",
            TraitName::Con => "con",
            TraitName::Ext => "ext",
            TraitName::Agr => "agr",
            TraitName::Neu => "neu",
        }
    }

    /// Human-readable trait label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            TraitName::Gender => "Gender",
            TraitName::Age => "Age",
            TraitName::Political => "Political view",
            TraitName::Ope => "Openness",
            TraitName::Con => "Conscientiousness",
            TraitName::Ext => "Extroversion",
            TraitName::Agr => "Agreeableness",
            TraitName::Neu => "Neuroticism",
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, TraitName::Gender | TraitName::Political)
    }

    pub fn from_column(name: &str) -> Option<TraitName> {
        TraitName::ALL
            .iter()
            .copied()
            .find(|t| t.column() == name.to_ascii_lowercase())
    }
}

impl fmt::Display for TraitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// One row of users.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub gender: Option<u8>,
    pub age: Option<f64>,
    pub political: Option<u8>,
    pub ope: Option<f64>,
    pub con: Option<f64>,
    pub ext: Option<f64>,
    pub agr: Option<f64>,
    pub neu: Option<f64>,
}

impl UserProfile {
    pub fn trait_value(&self, t: TraitName) -> Option<f64> {
        match t {
            TraitName::Gender => self.gender.map(f64::from),
            TraitName::Age => self.age,
            TraitName::Political => self.political.map(f64::from),
            TraitName::Ope => self.ope,
            TraitName::Con => self.con,
            TraitName::Ext => self.ext,
            TraitName::Agr => self.agr,
            TraitName::Neu => self.neu,
        }
    }

    pub fn set_trait_value(&mut self, t: TraitName, value: Option<f64>) {
        let as_bin = |v: f64| -> u8 {
            if v >= 0.5 {
                1
            } else {
                0
            }
        };
        match t {
            TraitName::Gender => self.gender = value.map(as_bin),
            TraitName::Age => self.age = value,
            TraitName::Political => self.political = value.map(as_bin),
            TraitName::Ope => self.ope = value,
            TraitName::Con => self.con = value,
            TraitName::Ext => self.ext = value,
            TraitName::Agr => self.agr = value,
            TraitName::Neu => self.neu = value,
        }
    }
}

/// All parsed user profiles with an id index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraitTable {
    profiles: Vec<UserProfile>,
    index: HashMap<String, usize>,
}

impl TraitTable {
    pub fn new(profiles: Vec<UserProfile>) -> Result<TraitTable> {
        let mut index = HashMap::with_capacity(profiles.len());
        for (i, p) in profiles.iter().enumerate() {
            if p.user_id.is_empty() {
                return Err(Error::Validation(format!("empty user id at row {}", i + 1)));
            }
            if index.insert(p.user_id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate user id `{}`", p.user_id)));
            }
        }
        Ok(TraitTable { profiles, index })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn get(&self, user_id: &str) -> Option<&UserProfile> {
        self.index.get(user_id).map(|&i| &self.profiles[i])
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.index.contains_key(user_id)
    }

    pub fn profile_mut(&mut self, i: usize) -> &mut UserProfile {
        &mut self.profiles[i]
    }

    /// Column of one trait over all profiles, missing as None.
    pub fn column(&self, t: TraitName) -> Vec<Option<f64>> {
        self.profiles.iter().map(|p| p.trait_value(t)).collect()
    }

    pub fn missing_count(&self, t: TraitName) -> usize {
        self.profiles
            .iter()
            .filter(|p| p.trait_value(t).is_none())
            .count()
    }
}

/// One row of likes.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct LikeRecord {
    pub like_id: String,
    pub name: String,
}

/// Parsed like catalog with an id index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LikeCatalog {
    records: Vec<LikeRecord>,
    index: HashMap<String, usize>,
}

impl LikeCatalog {
    pub fn new(records: Vec<LikeRecord>) -> Result<LikeCatalog> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.like_id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate like id `{}`", r.like_id)));
            }
        }
        Ok(LikeCatalog { records, index })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, like_id: &str) -> bool {
        self.index.contains_key(like_id)
    }

    pub fn records(&self) -> &[LikeRecord] {
        &self.records
    }
}

const USER_HEADER: [&str; 9] = [
    "userid", "gender", "age", "political", "ope", "con", "ext", "agr", "neu",
];

/// Parse users.csv into a validated [`TraitTable`].
pub fn parse_users(path: &Path) -> Result<TraitTable> {
    let display = path.display().to_string();
    let mut reader = csv_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(&display, &e))?
        .clone();
    if headers.len() != 9 {
        return Err(Error::Parse {
            path: display,
            line: 1,
            message: format!("expected 9 columns in header, found {}", headers.len()),
        });
    }
    for (got, want) in headers.iter().zip(USER_HEADER.iter()) {
        if !got.trim().eq_ignore_ascii_case(want) {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: format!("expected header column `{want}`, found `{got}`"),
            });
        }
    }

    let mut profiles = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 9 {
            return Err(Error::Parse {
                path: display,
                line,
                message: format!("expected 9 fields, found {}", record.len()),
            });
        }
        let cell = |i: usize| record.get(i).unwrap_or("");
        let profile = UserProfile {
            user_id: cell(0).trim().to_string(),
            gender: parse_binary(&display, line, "gender", cell(1))?,
            age: parse_age(&display, line, cell(2))?,
            political: parse_binary(&display, line, "political", cell(3))?,
            ope: parse_real(&display, line, "ope", cell(4))?,
            con: parse_real(&display, line, "con", cell(5))?,
            ext: parse_real(&display, line, "ext", cell(6))?,
            agr: parse_real(&display, line, "agr", cell(7))?,
            neu: parse_real(&display, line, "neu", cell(8))?,
        };
        if profile.user_id.is_empty() {
            return Err(Error::Parse {
                path: display,
                line,
                message: "empty user id".into(),
            });
        }
        profiles.push(profile);
    }
    TraitTable::new(profiles)
}

/// Write a [`TraitTable`] back to the users.csv format. Missing cells are
/// emitted as `NA`; floats use the shortest round-trip representation so a
/// parse → write → parse cycle reproduces the table exactly.
pub fn write_users<W: std::io::Write>(table: &TraitTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(USER_HEADER)
        .map_err(|e| Error::Validation(format!("csv write: {e}")))?;
    for p in table.profiles() {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "NA".to_string(),
        };
        let fmt_bin = |v: Option<u8>| match v {
            Some(x) => format!("{x}"),
            None => "NA".to_string(),
        };
        w.write_record([
            p.user_id.as_str(),
            &fmt_bin(p.gender),
            &fmt_opt(p.age),
            &fmt_bin(p.political),
            &fmt_opt(p.ope),
            &fmt_opt(p.con),
            &fmt_opt(p.ext),
            &fmt_opt(p.agr),
            &fmt_opt(p.neu),
        ])
        .map_err(|e| Error::Validation(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::Validation(format!("csv flush: {e}")))?;
    Ok(())
}

/// Parse likes.csv into a [`LikeCatalog`].
pub fn parse_likes(path: &Path) -> Result<LikeCatalog> {
    let display = path.display().to_string();
    let mut reader = csv_reader(path)?;
    reader.headers().map_err(|e| csv_error(&display, &e))?;
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                path: display,
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        records.push(LikeRecord {
            like_id: record.get(0).unwrap_or("").trim().to_string(),
            name: record.get(1).unwrap_or("").to_string(),
        });
    }
    LikeCatalog::new(records)
}

/// Parse users-likes.csv into an ordered pair list. Duplicates are preserved
/// here and collapsed during matrix assembly.
pub fn parse_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let display = path.display().to_string();
    let mut reader = csv_reader(path)?;
    reader.headers().map_err(|e| csv_error(&display, &e))?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                path: display,
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        pairs.push((
            record.get(0).unwrap_or("").trim().to_string(),
            record.get(1).unwrap_or("").trim().to_string(),
        ));
    }
    Ok(pairs)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path.display().to_string(),
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Validation(e.to_string()),
        })
}

fn csv_error(path: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.to_string(),
        line,
        message: e.to_string(),
    }
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

fn parse_real(path: &str, line: u64, field: &str, cell: &str) -> Result<Option<f64>> {
    if is_missing(cell) {
        return Ok(None);
    }
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        message: format!("non-numeric {field} value `{cell}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            message: format!("non-finite {field} value `{cell}`"),
        });
    }
    Ok(Some(v))
}

fn parse_age(path: &str, line: u64, cell: &str) -> Result<Option<f64>> {
    match parse_real(path, line, "age", cell)? {
        Some(v) if v < 0.0 => Err(Error::Validation(format!(
            "negative age {v} at {path} line {line}"
        ))),
        other => Ok(other),
    }
}

fn parse_binary(path: &str, line: u64, field: &str, cell: &str) -> Result<Option<u8>> {
    match parse_real(path, line, field, cell)? {
        None => Ok(None),
        Some(v) if v == 0.0 => Ok(Some(0)),
        Some(v) if v == 1.0 => Ok(Some(1)),
        Some(v) => Err(Error::Validation(format!(
            "{field} must be 0 or 1, found {v} at {path} line {line}"
        ))),
    }
}

/// Sparse binary user×like incidence matrix with stable row/column identity.
///
/// Entries are stored twice (row-major and column-major adjacency) so both
/// degree queries and the two matrix products needed by the SVD are cheap.
#[derive(Debug, Clone)]
pub struct UserLikeMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    n_pairs: usize,
    row_index: HashMap<String, usize>,
}

impl PartialEq for UserLikeMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.row_ids == other.row_ids && self.col_ids == other.col_ids && self.rows == other.rows
    }
}

impl UserLikeMatrix {
    /// Assemble a matrix from raw (row, col) index pairs. Duplicate entries
    /// collapse to one; rows and columns that end up with zero degree are
    /// dropped together with their ids. Errors when nothing remains.
    pub fn assemble(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        entries: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<UserLikeMatrix> {
        let n_rows = row_ids.len();
        let n_cols = col_ids.len();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n_rows];
        for (i, j) in entries {
            let (i, j) = (i as usize, j as usize);
            if i >= n_rows || j >= n_cols {
                return Err(Error::Parameter(format!(
                    "matrix entry ({i},{j}) out of bounds {n_rows}x{n_cols}"
                )));
            }
            rows[i].push(j as u32);
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        // drop zero-degree rows/cols, re-indexing columns
        let mut col_degree = vec![0usize; n_cols];
        for r in &rows {
            for &j in r {
                col_degree[j as usize] += 1;
            }
        }
        let mut col_map = vec![u32::MAX; n_cols];
        let mut kept_cols = Vec::new();
        for (j, id) in col_ids.into_iter().enumerate() {
            if col_degree[j] > 0 {
                col_map[j] = kept_cols.len() as u32;
                kept_cols.push(id);
            }
        }
        let mut kept_rows = Vec::new();
        let mut kept_ids = Vec::new();
        for (i, id) in row_ids.into_iter().enumerate() {
            if !rows[i].is_empty() {
                let remapped: Vec<u32> = rows[i].iter().map(|&j| col_map[j as usize]).collect();
                kept_rows.push(remapped);
                kept_ids.push(id);
            }
        }
        if kept_ids.is_empty() {
            return Err(Error::Validation("empty matrix: no user-like pairs".into()));
        }
        let n_pairs = kept_rows.iter().map(Vec::len).sum();
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); kept_cols.len()];
        for (i, r) in kept_rows.iter().enumerate() {
            for &j in r {
                cols[j as usize].push(i as u32);
            }
        }
        let row_index = kept_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(UserLikeMatrix {
            row_ids: kept_ids,
            col_ids: kept_cols,
            rows: kept_rows,
            cols,
            n_pairs,
            row_index,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn row_degree(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn col_degree(&self, j: usize) -> usize {
        self.cols[j].len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[u32] {
        &self.cols[j]
    }

    pub fn row_position(&self, user_id: &str) -> Option<usize> {
        self.row_index.get(user_id).copied()
    }

    pub fn density_percent(&self) -> f64 {
        100.0 * self.n_pairs as f64 / (self.n_rows() as f64 * self.n_cols() as f64)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&j| (i, j as usize)))
    }

    /// M · rhs for a dense (n_cols × s) right-hand side.
    pub fn mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n_cols(), "mul_dense shape mismatch");
        let s = rhs.ncols();
        let mut out = Array2::<f64>::zeros((self.n_rows(), s));
        let rhs_data = rhs.as_standard_layout();
        let rhs_slice = rhs_data.as_slice().expect("standard layout");
        let out_slice = out.as_slice_mut().expect("standard layout");
        for (i, row) in self.rows.iter().enumerate() {
            let acc = &mut out_slice[i * s..(i + 1) * s];
            for &j in row {
                let src = &rhs_slice[j as usize * s..j as usize * s + s];
                for t in 0..s {
                    acc[t] += src[t];
                }
            }
        }
        out
    }

    /// Mᵀ · rhs for a dense (n_rows × s) right-hand side.
    pub fn tr_mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n_rows(), "tr_mul_dense shape mismatch");
        let s = rhs.ncols();
        let mut out = Array2::<f64>::zeros((self.n_cols(), s));
        let rhs_data = rhs.as_standard_layout();
        let rhs_slice = rhs_data.as_slice().expect("standard layout");
        let out_slice = out.as_slice_mut().expect("standard layout");
        for (j, col) in self.cols.iter().enumerate() {
            let acc = &mut out_slice[j * s..(j + 1) * s];
            for &i in col {
                let src = &rhs_slice[i as usize * s..i as usize * s + s];
                for t in 0..s {
                    acc[t] += src[t];
                }
            }
        }
        out
    }

    /// Dense copy, for small oracle comparisons.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::<f64>::zeros((self.n_rows(), self.n_cols()));
        for (i, j) in self.entries() {
            d[[i, j]] = 1.0;
        }
        d
    }

    /// Frobenius norm; equals sqrt(n_pairs) for a binary matrix.
    pub fn frobenius_norm(&self) -> f64 {
        (self.n_pairs as f64).sqrt()
    }
}

/// Build the users-likes matrix from parsed pairs, validating every
/// referenced id against the user table and like catalog.
pub fn build_matrix(
    pairs: &[(String, String)],
    users: &TraitTable,
    likes: &LikeCatalog,
) -> Result<UserLikeMatrix> {
    if pairs.is_empty() {
        return Err(Error::Validation("empty matrix: no user-like pairs".into()));
    }
    let mut row_ids: Vec<String> = Vec::new();
    let mut col_ids: Vec<String> = Vec::new();
    let mut row_of: HashMap<&str, u32> = HashMap::new();
    let mut col_of: HashMap<&str, u32> = HashMap::new();
    let mut entries = Vec::with_capacity(pairs.len());
    for (user_id, like_id) in pairs {
        if !users.contains(user_id) {
            return Err(Error::UnresolvedId {
                kind: "user",
                id: user_id.clone(),
            });
        }
        if !likes.contains(like_id) {
            return Err(Error::UnresolvedId {
                kind: "like",
                id: like_id.clone(),
            });
        }
        let i = *row_of.entry(user_id.as_str()).or_insert_with(|| {
            row_ids.push(user_id.clone());
            (row_ids.len() - 1) as u32
        });
        let j = *col_of.entry(like_id.as_str()).or_insert_with(|| {
            col_ids.push(like_id.clone());
            (col_ids.len() - 1) as u32
        });
        entries.push((i, j));
    }
    UserLikeMatrix::assemble(row_ids, col_ids, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn users_csv(body: &str) -> String {
        format!("userid,gender,age,political,ope,con,ext,agr,neu\n{body}")
    }

    #[test]
    fn parses_single_profile() {
        let f = write_temp(&users_csv("u1,1,25,0,0.1,-0.2,0.3,0.0,1.1\n"));
        let t = parse_users(f.path()).unwrap();
        assert_eq!(t.len(), 1);
        let p = t.get("u1").unwrap();
        assert_eq!(p.gender, Some(1));
        assert_eq!(p.political, Some(0));
        assert_eq!(p.age, Some(25.0));
        assert_eq!(p.neu, Some(1.1));
    }

    #[test]
    fn empty_and_na_cells_are_missing() {
        let f = write_temp(&users_csv(
            "u1,1,25,,0.1,-0.2,0.3,0.0,1.1\nu2,0,30,NA,0.5,0.1,0.0,0.2,-1.0\n",
        ));
        let t = parse_users(f.path()).unwrap();
        assert_eq!(t.get("u1").unwrap().political, None);
        assert_eq!(t.get("u2").unwrap().political, None);
        assert_eq!(t.missing_count(TraitName::Political), 2);
        assert_eq!(t.missing_count(TraitName::Gender), 0);
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let f = write_temp(&users_csv("u1,1,25,0,0.1,-0.2,0.3,0.0,1.1\nu2,1,25\n"));
        match parse_users(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_trait_is_parse_error() {
        let f = write_temp(&users_csv("u1,1,25,0,abc,-0.2,0.3,0.0,1.1\n"));
        assert!(matches!(parse_users(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_user_is_validation_error() {
        let f = write_temp(&users_csv(
            "u1,1,25,0,0.1,0.2,0.3,0.0,1.1\nu1,0,30,1,0.1,0.2,0.3,0.0,1.1\n",
        ));
        assert!(matches!(parse_users(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn binary_field_must_be_zero_or_one() {
        let f = write_temp(&users_csv("u1,2,25,0,0.1,0.2,0.3,0.0,1.1\n"));
        assert!(matches!(parse_users(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn header_names_are_validated_case_insensitively() {
        let f = write_temp("UserID,Gender,AGE,political,ope,con,ext,agr,neu\nu1,1,25,0,0.1,0.2,0.3,0.0,1.1\n");
        assert!(parse_users(f.path()).is_ok());
        let g = write_temp("id,gender,age,political,ope,con,ext,agr,neu\nu1,1,25,0,0.1,0.2,0.3,0.0,1.1\n");
        assert!(parse_users(g.path()).is_err());
    }

    #[test]
    fn users_round_trip_is_identity() {
        let f = write_temp(&users_csv(
            "u1,1,25,,0.1,-0.2,0.3,0.0,1.1\nu2,NA,NA,1,0.5,0.25,-0.125,2.5,-1.0\n",
        ));
        let t = parse_users(f.path()).unwrap();
        let mut buf = Vec::new();
        write_users(&t, &mut buf).unwrap();
        let g = write_temp(std::str::from_utf8(&buf).unwrap());
        let t2 = parse_users(g.path()).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn parses_pairs_and_preserves_duplicates() {
        let f = write_temp("userid,likeid\nu1,l1\nu1,l1\nu2,l2\n");
        let pairs = parse_pairs(f.path()).unwrap();
        assert_eq!(pairs.len(), 3);
        let empty = write_temp("userid,likeid\n");
        assert!(parse_pairs(empty.path()).unwrap().is_empty());
    }

    #[test]
    fn pair_row_with_wrong_field_count_is_parse_error() {
        let f = write_temp("userid,likeid\nu1,l1,extra\n");
        assert!(matches!(parse_pairs(f.path()), Err(Error::Parse { line: 2, .. })));
    }

    fn toy_users(ids: &[&str]) -> TraitTable {
        TraitTable::new(
            ids.iter()
                .map(|id| UserProfile {
                    user_id: id.to_string(),
                    gender: Some(0),
                    age: Some(20.0),
                    political: Some(0),
                    ope: Some(0.0),
                    con: Some(0.0),
                    ext: Some(0.0),
                    agr: Some(0.0),
                    neu: Some(0.0),
                })
                .collect(),
        )
        .unwrap()
    }

    fn toy_likes(ids: &[&str]) -> LikeCatalog {
        LikeCatalog::new(
            ids.iter()
                .map(|id| LikeRecord {
                    like_id: id.to_string(),
                    name: format!("name of {id}"),
                })
                .collect(),
        )
        .unwrap()
    }

    fn owned(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn build_matrix_collapses_duplicates() {
        let users = toy_users(&["A", "B"]);
        let likes = toy_likes(&["x"]);
        let m = build_matrix(&owned(&[("A", "x"), ("A", "x"), ("B", "x")]), &users, &likes).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.n_cols(), 1);
        assert_eq!(m.n_pairs(), 2);
    }

    #[test]
    fn build_matrix_rejects_empty_input() {
        let users = toy_users(&["A"]);
        let likes = toy_likes(&["x"]);
        assert!(matches!(
            build_matrix(&[], &users, &likes),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn build_matrix_density() {
        let users = toy_users(&["A", "B"]);
        let likes = toy_likes(&["x", "y"]);
        let m = build_matrix(&owned(&[("A", "x"), ("B", "y")]), &users, &likes).unwrap();
        assert_eq!(m.n_pairs(), 2);
        assert!((m.density_percent() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn build_matrix_names_unresolved_id() {
        let users = toy_users(&["A"]);
        let likes = toy_likes(&["x"]);
        match build_matrix(&owned(&[("A", "x"), ("ghost", "x")]), &users, &likes) {
            Err(Error::UnresolvedId { kind, id }) => {
                assert_eq!(kind, "user");
                assert_eq!(id, "ghost");
            }
            other => panic!("expected unresolved id, got {other:?}"),
        }
        match build_matrix(&owned(&[("A", "nope")]), &users, &likes) {
            Err(Error::UnresolvedId { kind, id }) => {
                assert_eq!(kind, "like");
                assert_eq!(id, "nope");
            }
            other => panic!("expected unresolved id, got {other:?}"),
        }
    }

    #[test]
    fn entry_count_bounded_by_pairs_and_maps_back() {
        let users = toy_users(&["A", "B", "C"]);
        let likes = toy_likes(&["x", "y", "z"]);
        let pairs = owned(&[("A", "x"), ("B", "y"), ("A", "x"), ("C", "z"), ("B", "x")]);
        let m = build_matrix(&pairs, &users, &likes).unwrap();
        assert!(m.n_pairs() <= pairs.len());
        for (i, j) in m.entries() {
            let u = &m.row_ids()[i];
            let l = &m.col_ids()[j];
            assert!(pairs.iter().any(|(pu, pl)| pu == u && pl == l));
        }
    }

    #[test]
    fn sparse_products_match_dense() {
        let users = toy_users(&["A", "B", "C"]);
        let likes = toy_likes(&["x", "y"]);
        let m = build_matrix(
            &owned(&[("A", "x"), ("B", "y"), ("C", "x"), ("C", "y")]),
            &users,
            &likes,
        )
        .unwrap();
        let d = m.to_dense();
        let rhs = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let got = m.mul_dense(&rhs);
        let want = d.dot(&rhs);
        assert_eq!(got, want);
        let rhs_t = ndarray::array![[1.0], [2.0], [3.0]];
        let got_t = m.tr_mul_dense(&rhs_t);
        let want_t = d.t().dot(&rhs_t);
        assert_eq!(got_t, want_t);
    }
}
