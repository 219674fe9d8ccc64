//! Time-course observations and the empirical covariance.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `n` replicates of `g` genes at `t` times, stored as an `n × (g·t)` matrix
/// in time-major column order: column `i + k·g` is gene `i` at time `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourseDataset {
    values: DMatrix<f64>,
    gene_names: Vec<String>,
    time_labels: Vec<String>,
}

impl TimeCourseDataset {
    pub fn new(
        values: DMatrix<f64>,
        gene_names: Vec<String>,
        time_labels: Vec<String>,
    ) -> Result<Self> {
        let cols = gene_names.len() * time_labels.len();
        if values.ncols() != cols {
            return Err(Error::Dimension(format!(
                "{} columns for {} genes x {} times",
                values.ncols(),
                gene_names.len(),
                time_labels.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::MissingValue {
                row,
                column: column_label(&gene_names, &time_labels, col),
            });
        }
        Ok(Self {
            values,
            gene_names,
            time_labels,
        })
    }

    /// Dataset with generic labels `G1..Gg` and times `1..t`.
    pub fn unlabeled(values: DMatrix<f64>, genes: usize, times: usize) -> Result<Self> {
        let gene_names = (1..=genes).map(|i| format!("G{i}")).collect();
        let time_labels = (1..=times).map(|k| k.to_string()).collect();
        Self::new(values, gene_names, time_labels)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn times(&self) -> usize {
        self.time_labels.len()
    }

    pub fn column_label(&self, col: usize) -> String {
        column_label(&self.gene_names, &self.time_labels, col)
    }

    /// Keep only the given replicate rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(rows),
            gene_names: self.gene_names.clone(),
            time_labels: self.time_labels.clone(),
        }
    }

    /// Center each column and scale it to unit sample variance (divisor
    /// `n - 1`).
    pub fn standardize(&self) -> Result<Self> {
        let n = self.n();
        if n < 2 {
            return Err(Error::TooFewReplicates { needed: 2, got: n });
        }
        let mut values = self.values.clone();
        for (c, mut col) in values.column_iter_mut().enumerate() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let var = col.norm_squared() / (n - 1) as f64;
            // relative test: a column of identical large values still has
            // rounding noise after centering
            let scale = mean.abs().max(1.0);
            if !(var.sqrt() > 1e-12 * scale) {
                return Err(Error::ConstantColumn(self.column_label(c)));
            }
            col /= var.sqrt();
        }
        Ok(Self {
            values,
            gene_names: self.gene_names.clone(),
            time_labels: self.time_labels.clone(),
        })
    }

    /// Maximum-likelihood covariance `(1/n) XᵀX` of the column-centered data.
    pub fn empirical_covariance(&self) -> Result<EmpiricalCovariance> {
        let n = self.n();
        if n < 2 {
            return Err(Error::TooFewReplicates { needed: 2, got: n });
        }
        let mut x = self.values.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let mut s = x.tr_mul(&x) / n as f64;
        // exact symmetry
        let d = s.nrows();
        for p in 0..d {
            for q in p + 1..d {
                let v = s[(p, q)];
                s[(q, p)] = v;
            }
        }
        Ok(EmpiricalCovariance { s, n_source: n })
    }

    /// Read a CSV whose header labels columns as `GENE@TIME`.
    ///
    /// Columns may appear in any order. Genes are ordered lexicographically
    /// and times numerically when every time label parses as a number,
    /// otherwise lexicographically. Use [`load_csv_ordered`] to fix the gene
    /// order explicitly.
    pub fn load_csv(path: impl AsRef<Path>, genes: usize, times: usize) -> Result<Self> {
        Self::load_csv_ordered(path, genes, times, None)
    }

    pub fn load_csv_ordered(
        path: impl AsRef<Path>,
        genes: usize,
        times: usize,
        gene_order: Option<&[String]>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, genes, times, gene_order)
    }

    pub fn read_csv<R: std::io::Read>(
        reader: R,
        genes: usize,
        times: usize,
        gene_order: Option<&[String]>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header.len() != genes * times {
            return Err(Error::Dimension(format!(
                "{} columns in file, expected {genes} genes x {times} times = {}",
                header.len(),
                genes * times
            )));
        }

        let mut labels = Vec::with_capacity(header.len());
        let mut seen = BTreeSet::new();
        for h in &header {
            let (gene, time) = h
                .rsplit_once('@')
                .filter(|(g, t)| !g.is_empty() && !t.is_empty())
                .ok_or_else(|| Error::BadLabel(h.clone()))?;
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateLabel(h.clone()));
            }
            labels.push((gene.to_owned(), time.to_owned()));
        }

        let gene_names: Vec<String> = match gene_order {
            Some(order) => order.to_vec(),
            None => labels
                .iter()
                .map(|(g, _)| g.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        let time_labels = sort_times(labels.iter().map(|(_, t)| t.clone()).collect());
        if gene_names.len() != genes || time_labels.len() != times {
            return Err(Error::Dimension(format!(
                "header names {} genes and {} times, expected {genes} and {times}",
                gene_names.len(),
                time_labels.len()
            )));
        }

        let gene_pos: HashMap<&str, usize> = gene_names
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let time_pos: HashMap<&str, usize> = time_labels
            .iter()
            .enumerate()
            .map(|(k, t)| (t.as_str(), k))
            .collect();
        let mut target = Vec::with_capacity(labels.len());
        for (g, t) in &labels {
            let i = *gene_pos
                .get(g.as_str())
                .ok_or_else(|| Error::Dimension(format!("gene `{g}` not in gene order")))?;
            target.push(i + time_pos[t.as_str()] * genes);
        }

        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::Dimension(format!(
                    "row {r} has {} cells, header has {}",
                    record.len(),
                    header.len()
                )));
            }
            let mut row = vec![0.0; header.len()];
            for (c, cell) in record.iter().enumerate() {
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                    return Err(Error::MissingValue {
                        row: r,
                        column: header[c].clone(),
                    });
                }
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row: r,
                    column: header[c].clone(),
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        row: r,
                        column: header[c].clone(),
                        value: cell.to_owned(),
                    });
                }
                row[target[c]] = v;
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::TooFewReplicates { needed: 1, got: 0 });
        }
        let n = rows.len();
        let values = DMatrix::from_fn(n, header.len(), |i, j| rows[i][j]);
        Self::new(values, gene_names, time_labels)
    }

    /// Write in canonical column order with shortest round-trip formatting.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.values.ncols())
            .map(|c| self.column_label(c))
            .collect();
        w.write_record(&header)?;
        for row in self.values.row_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn column_label(genes: &[String], times: &[String], col: usize) -> String {
    let g = genes.len();
    format!("{}@{}", genes[col % g], times[col / g])
}

fn sort_times(labels: Vec<String>) -> Vec<String> {
    let unique: BTreeSet<String> = labels.into_iter().collect();
    let mut out: Vec<String> = unique.into_iter().collect();
    let numeric: Option<Vec<f64>> = out.iter().map(|t| t.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<_> = keys.into_iter().zip(out).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        out = paired.into_iter().map(|(_, t)| t).collect();
    }
    out
}

/// Symmetric sample covariance with divisor `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    s: DMatrix<f64>,
    n_source: usize,
}

impl EmpiricalCovariance {
    /// Wrap a matrix; it is symmetrized by averaging with its transpose.
    pub fn from_matrix(s: DMatrix<f64>, n_source: usize) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Dimension(format!(
                "covariance must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let s = (&s + s.transpose()) * 0.5;
        Ok(Self { s, n_source })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for p in 0..d {
            for q in p + 1..d {
                m = m.max(self.s[(p, q)].abs());
            }
        }
        m
    }
}
