use crate::error::{Error, Result};

/// Feature rows with class labels.
///
/// Labels are class indices; for a sigmoid model class 1 is the positive
/// (separable) class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n_in: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(
        n_in: usize,
        n_classes: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if n_in == 0 || n_classes < 2 {
            return Err(Error::invalid(format!(
                "dataset needs n_in >= 1 and at least two classes, got {n_in} and {n_classes}"
            )));
        }
        if features.len() != labels.len() * n_in {
            return Err(Error::invalid(format!(
                "{} feature values do not form {} rows of {n_in}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(LabeledDataset {
            n_in,
            n_classes,
            features,
            labels,
        })
    }

    pub fn empty(n_in: usize, n_classes: usize) -> Result<Self> {
        Self::new(n_in, n_classes, Vec::new(), Vec::new())
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.n_in || label >= self.n_classes {
            return Err(Error::invalid(format!(
                "row of {} values with label {label} does not fit a {}-feature, {}-class dataset",
                row.len(),
                self.n_in,
                self.n_classes
            )));
        }
        self.features.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_in..(i + 1) * self.n_in]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features
            .chunks_exact(self.n_in)
            .zip(self.labels.iter().copied())
    }

    /// Number of rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_in);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            n_in: self.n_in,
            n_classes: self.n_classes,
            features,
            labels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(LabeledDataset::new(2, 2, vec![0.0; 4], vec![0, 1]).is_ok());
        assert!(LabeledDataset::new(2, 2, vec![0.0; 3], vec![0, 1]).is_err());
        assert!(LabeledDataset::new(2, 2, vec![0.0; 4], vec![0, 2]).is_err());
        assert!(LabeledDataset::new(0, 2, vec![], vec![]).is_err());
    }

    #[test]
    fn push_and_subset() {
        let mut d = LabeledDataset::empty(2, 3).unwrap();
        d.push(&[1.0, 2.0], 0).unwrap();
        d.push(&[3.0, 4.0], 2).unwrap();
        d.push(&[5.0, 6.0], 2).unwrap();
        assert!(d.push(&[1.0], 0).is_err());
        assert_eq!(d.class_counts(), vec![1, 0, 2]);
        let s = d.subset(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.labels(), &[2, 0]);
        assert_eq!(d.rows().count(), 3);
    }
}
