use crate::error::{Result, WmarError};
use crate::qfun::{Grid, QuantileGrid};

/// `N` features observed at `T + 1` instants, each observation a grid function.
///
/// Storage is feature-major: `data[i][t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistSeries {
    grid: Grid,
    labels: Vec<String>,
    times: Vec<String>,
    data: Vec<Vec<QuantileGrid>>,
}

impl DistSeries {
    pub fn new(
        grid: Grid,
        labels: Vec<String>,
        times: Vec<String>,
        data: Vec<Vec<QuantileGrid>>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(WmarError::Empty("feature labels"));
        }
        if times.is_empty() {
            return Err(WmarError::Empty("time labels"));
        }
        if data.len() != labels.len() {
            return Err(WmarError::InvalidArgument(format!(
                "{} feature labels for {} features",
                labels.len(),
                data.len()
            )));
        }
        check_unique(&labels, "feature")?;
        check_unique(&times, "time")?;
        for (i, row) in data.iter().enumerate() {
            if row.len() != times.len() {
                return Err(WmarError::InvalidArgument(format!(
                    "feature {} has {} instants, expected {}",
                    labels[i],
                    row.len(),
                    times.len()
                )));
            }
            if let Some(q) = row.iter().find(|q| q.grid() != grid) {
                return Err(WmarError::GridMismatch {
                    left: grid.len(),
                    right: q.len(),
                });
            }
        }
        Ok(DistSeries {
            grid,
            labels,
            times,
            data,
        })
    }

    /// Series with labels `f1..fN` and times `0..T`.
    pub fn with_default_labels(grid: Grid, data: Vec<Vec<QuantileGrid>>) -> Result<Self> {
        let labels = (1..=data.len()).map(|i| format!("f{i}")).collect();
        let len = data.first().map_or(0, Vec::len);
        let times = (0..len).map(|t| t.to_string()).collect();
        Self::new(grid, labels, times, data)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn times(&self) -> &[String] {
        &self.times
    }

    pub fn n_features(&self) -> usize {
        self.labels.len()
    }

    /// Number of instants, `T + 1`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[QuantileGrid] {
        &self.data[i]
    }

    pub fn get(&self, i: usize, t: usize) -> &QuantileGrid {
        &self.data[i][t]
    }

    pub fn data(&self) -> &[Vec<QuantileGrid>] {
        &self.data
    }

    /// Observations of every feature at instant `t`.
    pub fn instant(&self, t: usize) -> Vec<QuantileGrid> {
        self.data.iter().map(|row| row[t].clone()).collect()
    }

    /// The first `len` instants.
    pub fn prefix(&self, len: usize) -> Result<DistSeries> {
        if len == 0 || len > self.len() {
            return Err(WmarError::InvalidArgument(format!(
                "prefix length {len} not in 1..={}",
                self.len()
            )));
        }
        Ok(DistSeries {
            grid: self.grid,
            labels: self.labels.clone(),
            times: self.times[..len].to_vec(),
            data: self.data.iter().map(|row| row[..len].to_vec()).collect(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(WmarError::InvalidArgument(format!(
                "{} labels for {} features",
                labels.len(),
                self.labels.len()
            )));
        }
        check_unique(&labels, "feature")?;
        self.labels = labels;
        Ok(self)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(WmarError::InvalidArgument(format!(
                "duplicate {what} label {l:?}"
            )));
        }
    }
    Ok(())
}
