use super::{AreaFeatures, Context};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetSplit {
    Train,
    Test,
}

/// Labelled area-feature vectors for context training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextDataset {
    split: DatasetSplit,
    samples: Vec<(AreaFeatures, Context)>,
}

impl ContextDataset {
    pub fn new(split: DatasetSplit, samples: Vec<(AreaFeatures, Context)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { split, samples })
    }

    pub fn split(&self) -> DatasetSplit {
        self.split
    }

    pub fn samples(&self) -> &[(AreaFeatures, Context)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Images per context, in context order.
    pub fn counts(&self) -> [usize; Context::COUNT] {
        let mut counts = [0; Context::COUNT];
        for (_, c) in &self.samples {
            counts[c.index()] += 1;
        }
        counts
    }

    /// Accuracy of always answering the most frequent context.
    pub fn majority_rate(&self) -> f64 {
        *self.counts().iter().max().unwrap() as f64 / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rejected() {
        assert!(matches!(ContextDataset::new(DatasetSplit::Train, vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn counts_and_majority() {
        let f = AreaFeatures([0.0; 20]);
        let ds = ContextDataset::new(
            DatasetSplit::Test,
            vec![(f, Context::Vehicle), (f, Context::Vehicle), (f, Context::Pet), (f, Context::Others)],
        )
        .unwrap();
        assert_eq!(ds.counts(), [1, 0, 2, 0, 1]);
        assert_eq!(ds.majority_rate(), 0.5);
    }
}
