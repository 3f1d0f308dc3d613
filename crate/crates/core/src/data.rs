use serde::{Deserialize, Serialize};

/// Column-major regression data: `columns[j][row]` and `target[row]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
}

impl Dataset {
    /// Panics if column lengths disagree with the target length.
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Self {
        assert!(
            columns.iter().all(|c| c.len() == target.len()),
            "column lengths must match the target length"
        );
        Self { columns, target }
    }

    pub fn from_rows(rows: &[Vec<f64>], target: Vec<f64>) -> Self {
        let dims = rows.first().map_or(0, Vec::len);
        let columns = (0..dims).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(columns, target)
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut [f64] {
        &mut self.target
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}
