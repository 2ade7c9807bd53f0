//! Shared domain types: the observation grid, replicate-contaminated
//! datasets, hard partitions and corrected curves, plus the long-format CSV
//! and wide JSON file formats.
//!
//! The long CSV layout is one row per observation:
//!
//! ```text
//! subject,replicate,time,value[,true_value][,true_label]
//! ```
//!
//! Missing observations are written as `NaN` (an empty field also reads as
//! missing). Every subject/replicate pair must carry the same set of times.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered observation times on the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid(format!(
                "time grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Range(format!("time {bad} is outside [0, 1]")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// `len` equally spaced points from 0 to 1 inclusive.
    pub fn uniform(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Invalid(format!(
                "time grid needs at least 2 points, got {len}"
            )));
        }
        let step = 1.0 / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|k| k as f64 * step).collect();
        points[len - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        TimeGrid::new(points)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.points
    }
}

/// A hard partition of `n` subjects into clusters labelled `1..=C`.
///
/// Equality of two partitions is decided by [`partitions_equal`], which
/// ignores the particular label values. The derived `PartialEq` compares
/// label vectors literally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MembershipsRepr", into = "MembershipsRepr")]
pub struct Memberships {
    labels: Vec<usize>,
    n_clusters: usize,
}

#[derive(Serialize, Deserialize)]
struct MembershipsRepr {
    labels: Vec<usize>,
}

impl TryFrom<MembershipsRepr> for Memberships {
    type Error = Error;

    fn try_from(repr: MembershipsRepr) -> Result<Self> {
        Memberships::new(repr.labels)
    }
}

impl From<Memberships> for MembershipsRepr {
    fn from(m: Memberships) -> Self {
        MembershipsRepr { labels: m.labels }
    }
}

impl Memberships {
    /// Validates labels in `1..=C` with every cluster non-empty, where `C` is
    /// the largest label.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("memberships must be non-empty".into()));
        }
        if labels.contains(&0) {
            return Err(Error::Invalid("cluster labels start at 1".into()));
        }
        let n_clusters = *labels.iter().max().unwrap();
        let mut seen = vec![false; n_clusters];
        for &l in &labels {
            seen[l - 1] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("cluster {} is empty", empty + 1)));
        }
        Ok(Self { labels, n_clusters })
    }

    /// Accepts arbitrary label values and renumbers them `1..=C` in order of
    /// first occurrence.
    pub fn from_raw<T: Eq + std::hash::Hash + Copy>(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Invalid("memberships must be non-empty".into()));
        }
        let mut map = HashMap::new();
        let labels = raw
            .iter()
            .map(|v| {
                let next = map.len() + 1;
                *map.entry(*v).or_insert(next)
            })
            .collect();
        let n_clusters = map.len();
        Ok(Self { labels, n_clusters })
    }

    /// Every subject in cluster 1.
    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![1; n],
            n_clusters: 1,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Subject count per cluster, indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }

    /// Subject indices per cluster, indexed by `label - 1`.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l - 1].push(i);
        }
        groups
    }

    /// Display form: clusters renumbered by first subject occurrence.
    pub fn canonical(&self) -> Self {
        Self::from_raw(&self.labels).expect("non-empty")
    }
}

/// True iff `a` and `b` induce the same set partition.
pub fn partitions_equal(a: &Memberships, b: &Memberships) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.n_clusters() != b.n_clusters() {
        return Ok(false);
    }
    let mut forward = vec![0usize; a.n_clusters() + 1];
    let mut backward = vec![0usize; b.n_clusters() + 1];
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        match (forward[la], backward[lb]) {
            (0, 0) => {
                forward[la] = lb;
                backward[lb] = la;
            }
            (fa, fb) if fa == lb && fb == la => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Replicate-contaminated curves observed on a shared grid.
///
/// `w` is stored subject-major: the value of replicate `j` of subject `i` at
/// grid index `t` sits at `(i * J + j) * T + t`. `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: TimeGrid,
    n_subjects: usize,
    n_replicates: usize,
    w: Vec<f64>,
    true_x: Option<DMatrix<f64>>,
    true_labels: Option<Memberships>,
    subject_ids: Vec<String>,
}

impl FunctionalDataset {
    pub fn new(
        grid: TimeGrid,
        n_subjects: usize,
        n_replicates: usize,
        w: Vec<f64>,
        true_x: Option<DMatrix<f64>>,
        true_labels: Option<Memberships>,
    ) -> Result<Self> {
        let t_len = grid.len();
        if n_subjects == 0 || n_replicates == 0 {
            return Err(Error::Invalid(
                "dataset needs at least one subject and one replicate".into(),
            ));
        }
        let expected = n_subjects * n_replicates * t_len;
        if w.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: w.len(),
            });
        }
        if w.iter().any(|v| v.is_infinite()) {
            return Err(Error::Invalid("observations must be finite or NaN".into()));
        }
        for i in 0..n_subjects {
            for t in 0..t_len {
                let observed =
                    (0..n_replicates).any(|j| !w[(i * n_replicates + j) * t_len + t].is_nan());
                if !observed {
                    return Err(Error::Invalid(format!(
                        "subject {} has no observed replicate at grid index {t}",
                        i + 1
                    )));
                }
            }
        }
        if let Some(x) = &true_x {
            if x.shape() != (n_subjects, t_len) {
                return Err(Error::Invalid(format!(
                    "true curves have shape {:?}, expected ({n_subjects}, {t_len})",
                    x.shape()
                )));
            }
        }
        if let Some(labels) = &true_labels {
            if labels.len() != n_subjects {
                return Err(Error::LengthMismatch {
                    expected: n_subjects,
                    actual: labels.len(),
                });
            }
        }
        Ok(Self {
            grid,
            n_subjects,
            n_replicates,
            w,
            true_x,
            true_labels,
            subject_ids: (1..=n_subjects).map(|i| i.to_string()).collect(),
        })
    }

    fn with_subject_ids(mut self, ids: Vec<String>) -> Self {
        debug_assert_eq!(ids.len(), self.n_subjects);
        self.subject_ids = ids;
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_replicates(&self) -> usize {
        self.n_replicates
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn true_x(&self) -> Option<&DMatrix<f64>> {
        self.true_x.as_ref()
    }

    pub fn true_labels(&self) -> Option<&Memberships> {
        self.true_labels.as_ref()
    }

    #[inline]
    pub fn value(&self, subject: usize, replicate: usize, t: usize) -> f64 {
        self.w[(subject * self.n_replicates + replicate) * self.grid.len() + t]
    }

    /// The `J` replicate values of one subject at grid index `t`.
    pub fn replicates_at(&self, subject: usize, t: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_replicates).map(move |j| self.value(subject, j, t))
    }

    pub fn has_missing(&self) -> bool {
        self.w.iter().any(|v| v.is_nan())
    }

    /// Per-subject replicate means, `n x T`. Missing values are skipped.
    pub fn replicate_means(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_subjects, self.n_times(), |i, t| {
            let (sum, count) = self
                .replicates_at(i, t)
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            sum / count as f64
        })
    }

    /// Replicate `j` of every subject, `n x T`. A missing value falls back to
    /// the first observed replicate at that time.
    pub fn replicate_curves(&self, replicate: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_subjects, self.n_times(), |i, t| {
            let v = self.value(i, replicate, t);
            if v.is_nan() {
                self.replicates_at(i, t)
                    .find(|v| !v.is_nan())
                    .expect("validated: one observed replicate per (subject, t)")
            } else {
                v
            }
        })
    }
}

/// Predicted true curves, one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedCurves {
    pub grid: TimeGrid,
    pub x_hat: DMatrix<f64>,
}

impl CorrectedCurves {
    pub fn new(grid: TimeGrid, x_hat: DMatrix<f64>) -> Result<Self> {
        if x_hat.ncols() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: x_hat.ncols(),
            });
        }
        if x_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("corrected curves must be finite".into()));
        }
        Ok(Self { grid, x_hat })
    }

    pub fn n_subjects(&self) -> usize {
        self.x_hat.nrows()
    }
}

/// Wide JSON export of corrected curves and (optionally) memberships.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvesExport {
    pub grid: Vec<f64>,
    pub x_hat: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl CurvesExport {
    pub fn new(curves: &CorrectedCurves, members: Option<&Memberships>) -> Self {
        Self {
            grid: curves.grid.points().to_vec(),
            x_hat: matrix_rows(&curves.x_hat),
            labels: members.map(|m| m.labels().to_vec()),
        }
    }

    pub fn into_parts(self) -> Result<(CorrectedCurves, Option<Memberships>)> {
        let grid = TimeGrid::new(self.grid)?;
        let x_hat = matrix_from_rows(&self.x_hat, grid.len())?;
        let curves = CorrectedCurves::new(grid, x_hat)?;
        let members = self.labels.map(Memberships::new).transpose()?;
        Ok((curves, members))
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Invalid(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, k| rows[i][k]))
}

/// Reads a long-format CSV file.
pub fn load_long_csv(path: impl AsRef<Path>) -> Result<FunctionalDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_long_csv(file)
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Ok(f64::NAN);
    }
    trimmed.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: `{trimmed}` is not a number"),
    })
}

#[derive(Default)]
struct SubjectRows {
    replicate_ids: Vec<String>,
    // per replicate: (time, value)
    cells: Vec<Vec<(f64, f64)>>,
    true_values: Vec<(f64, f64)>,
    true_label: Option<String>,
}

/// Reads long-format CSV from any reader.
pub fn read_long_csv<R: Read>(reader: R) -> Result<FunctionalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(c_subject), Some(c_rep), Some(c_time), Some(c_value)) =
        (col("subject"), col("replicate"), col("time"), col("value"))
    else {
        return Err(Error::Parse {
            line: 1,
            message: "header must contain subject,replicate,time,value".into(),
        });
    };
    let c_true_value = col("true_value");
    let c_true_label = col("true_label");

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut subjects: Vec<SubjectRows> = Vec::new();

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| record.get(c).unwrap_or("");
        let subject = field(c_subject).to_string();
        let replicate = field(c_rep).to_string();
        let time = parse_f64(field(c_time), line, "time")?;
        if !(0.0..=1.0).contains(&time) {
            return Err(Error::Range(format!(
                "line {line}: time {time} is outside [0, 1]"
            )));
        }
        let value = parse_f64(field(c_value), line, "value")?;

        let s = *index.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            subjects.push(SubjectRows::default());
            subjects.len() - 1
        });
        let rows = &mut subjects[s];
        let r = match rows.replicate_ids.iter().position(|id| *id == replicate) {
            Some(r) => r,
            None => {
                rows.replicate_ids.push(replicate);
                rows.cells.push(Vec::new());
                rows.replicate_ids.len() - 1
            }
        };
        rows.cells[r].push((time, value));

        if let Some(c) = c_true_value {
            let tv = parse_f64(field(c), line, "true_value")?;
            if !tv.is_nan() && !rows.true_values.iter().any(|(t, _)| *t == time) {
                rows.true_values.push((time, tv));
            }
        }
        if let Some(c) = c_true_label {
            let label = field(c).to_string();
            if !label.is_empty() {
                match &rows.true_label {
                    Some(prev) if *prev != label => {
                        return Err(Error::Parse {
                            line,
                            message: format!(
                                "subject `{}` has conflicting true labels `{prev}` and `{label}`",
                                order[s]
                            ),
                        })
                    }
                    _ => rows.true_label = Some(label),
                }
            }
        }
    }

    if subjects.is_empty() {
        return Err(Error::Invalid("CSV contains no observations".into()));
    }

    let mut times: Vec<f64> = subjects
        .iter()
        .flat_map(|s| s.cells.iter().flatten().map(|(t, _)| *t))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let grid = TimeGrid::new(times)?;
    let t_len = grid.len();
    let n = subjects.len();
    let n_rep = subjects.iter().map(|s| s.cells.len()).max().unwrap();

    let mut w = vec![f64::NAN; n * n_rep * t_len];
    for (i, rows) in subjects.iter_mut().enumerate() {
        for (j, cells) in rows.cells.iter_mut().enumerate() {
            cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let same_grid = cells.len() == t_len
                && cells.iter().zip(grid.points()).all(|((t, _), g)| t == g);
            if !same_grid {
                return Err(Error::RaggedGrid {
                    subject: order[i].clone(),
                    message: format!(
                        "replicate `{}` has {} time points that differ from the shared grid of {t_len}",
                        rows.replicate_ids[j],
                        cells.len()
                    ),
                });
            }
            for (t, (_, v)) in cells.iter().enumerate() {
                w[(i * n_rep + j) * t_len + t] = *v;
            }
        }
    }

    let true_x = if subjects.iter().any(|s| !s.true_values.is_empty()) {
        let mut x = DMatrix::zeros(n, t_len);
        for (i, rows) in subjects.iter().enumerate() {
            if rows.true_values.len() != t_len {
                return Err(Error::RaggedGrid {
                    subject: order[i].clone(),
                    message: "true_value is not given at every grid time".into(),
                });
            }
            for (t, g) in grid.points().iter().enumerate() {
                x[(i, t)] = rows
                    .true_values
                    .iter()
                    .find(|(tt, _)| tt == g)
                    .map(|(_, v)| *v)
                    .unwrap();
            }
        }
        Some(x)
    } else {
        None
    };

    let true_labels = if subjects.iter().any(|s| s.true_label.is_some()) {
        let raw: Vec<&str> = subjects
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.true_label.as_deref().ok_or_else(|| Error::Invalid(format!(
                    "subject `{}` has no true_label",
                    order[i]
                )))
            })
            .collect::<Result<_>>()?;
        // Integer labels keep their numbering; anything else is renumbered.
        let numeric: Option<Vec<usize>> = raw.iter().map(|l| l.parse().ok()).collect();
        Some(match numeric {
            Some(labels) => Memberships::new(labels)?,
            None => Memberships::from_raw(&raw)?,
        })
    } else {
        None
    };

    Ok(FunctionalDataset::new(grid, n, n_rep, w, true_x, true_labels)?.with_subject_ids(order))
}

/// Writes long-format CSV. Floats use the shortest representation that
/// round-trips exactly.
pub fn write_long_csv<W: Write>(data: &FunctionalDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["subject", "replicate", "time", "value"];
    if data.true_x.is_some() {
        header.push("true_value");
    }
    if data.true_labels.is_some() {
        header.push("true_label");
    }
    wtr.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..data.n_subjects {
        for j in 0..data.n_replicates {
            for (t, time) in data.grid.points().iter().enumerate() {
                row.clear();
                row.push(data.subject_ids[i].clone());
                row.push((j + 1).to_string());
                row.push(time.to_string());
                row.push(data.value(i, j, t).to_string());
                if let Some(x) = &data.true_x {
                    row.push(x[(i, t)].to_string());
                }
                if let Some(l) = &data.true_labels {
                    row.push(l.labels()[i].to_string());
                }
                wtr.write_record(&row)?;
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_long_csv(data: &FunctionalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_long_csv(data, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_of(rows: &[&str]) -> String {
        let mut s = String::from("subject,replicate,time,value\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn loads_all_zero_dataset() {
        let mut rows = Vec::new();
        for s in ["a", "b"] {
            for r in 1..=2 {
                for t in ["0", "0.5", "1"] {
                    rows.push(format!("{s},{r},{t},0"));
                }
            }
        }
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let d = read_long_csv(csv_of(&refs).as_bytes()).unwrap();
        assert_eq!(d.n_subjects(), 2);
        assert_eq!(d.n_replicates(), 2);
        assert_eq!(d.n_times(), 3);
        assert!((0..2).all(|i| (0..2).all(|j| (0..3).all(|t| d.value(i, j, t) == 0.0))));
        assert_eq!(d.subject_ids(), ["a", "b"]);
    }

    #[test]
    fn time_outside_unit_interval_is_range_error() {
        let csv = csv_of(&["a,1,0,1", "a,1,1.5,2"]);
        assert!(matches!(read_long_csv(csv.as_bytes()), Err(Error::Range(_))));
    }

    #[test]
    fn ragged_grid_names_subject() {
        let csv = csv_of(&["a,1,0,1", "a,1,1,2", "b,1,0,1", "b,1,0.5,2"]);
        match read_long_csv(csv.as_bytes()) {
            Err(Error::RaggedGrid { subject, .. }) => assert_eq!(subject, "a"),
            other => panic!("expected ragged error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_value_reports_line() {
        let csv = csv_of(&["a,1,0,1", "a,1,1,oops"]);
        match read_long_csv(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_values_allowed_when_one_replicate_observed() {
        let csv = csv_of(&["a,1,0,NaN", "a,1,1,2", "a,2,0,1", "a,2,1,"]);
        let d = read_long_csv(csv.as_bytes()).unwrap();
        assert!(d.has_missing());
        assert_eq!(d.replicate_means()[(0, 0)], 1.0);
        assert_eq!(d.replicate_curves(0)[(0, 0)], 1.0);

        let csv = csv_of(&["a,1,0,NaN", "a,1,1,2", "a,2,0,", "a,2,1,3"]);
        assert!(matches!(read_long_csv(csv.as_bytes()), Err(Error::Invalid(_))));
    }

    #[test]
    fn partition_label_swap() {
        let a = Memberships::new(vec![1, 1, 2]).unwrap();
        let b = Memberships::new(vec![2, 2, 1]).unwrap();
        let c = Memberships::new(vec![1, 2, 2]).unwrap();
        assert!(partitions_equal(&a, &b).unwrap());
        assert!(!partitions_equal(&a, &c).unwrap());
        let d = Memberships::new(vec![1, 2]).unwrap();
        assert!(partitions_equal(&a, &d).is_err());
    }

    #[test]
    fn memberships_reject_gaps() {
        assert!(Memberships::new(vec![1, 3]).is_err());
        assert!(Memberships::new(vec![0, 1]).is_err());
        let m = Memberships::from_raw(&[7, 7, 3, 9]).unwrap();
        assert_eq!(m.labels(), [1, 1, 2, 3]);
        assert_eq!(Memberships::new(vec![2, 1, 2]).unwrap().canonical().labels(), [1, 2, 1]);
    }

    #[test]
    fn grid_invariants() {
        assert!(TimeGrid::new(vec![0.5]).is_err());
        assert!(TimeGrid::new(vec![0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![-0.1, 0.5]).is_err());
        let g = TimeGrid::uniform(5).unwrap();
        assert_eq!(g.points(), [0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn curves_json_shape() {
        let grid = TimeGrid::uniform(2).unwrap();
        let curves = CorrectedCurves::new(grid, DMatrix::from_row_slice(1, 2, &[0.5, 1.5])).unwrap();
        let m = Memberships::new(vec![1]).unwrap();
        let json = serde_json::to_string(&CurvesExport::new(&curves, Some(&m))).unwrap();
        assert_eq!(json, r#"{"grid":[0.0,1.0],"x_hat":[[0.5,1.5]],"labels":[1]}"#);
        let back: CurvesExport = serde_json::from_str(&json).unwrap();
        let (c2, m2) = back.into_parts().unwrap();
        assert_eq!(c2, curves);
        assert_eq!(m2.unwrap(), m);
    }
}
