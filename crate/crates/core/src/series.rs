use serde::{Deserialize, Serialize};

use crate::error::SeriesError;

/// One real-valued series with an optional class label and source tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    label: Option<usize>,
    source: Option<String>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(Self { values, label: None, source: None })
    }

    pub fn labeled(values: Vec<f64>, label: usize) -> Result<Self, SeriesError> {
        Ok(Self::new(values)?.with_label(label))
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(TimeSeries::new(vec![]), Err(SeriesError::Empty));
        assert_eq!(
            TimeSeries::new(vec![1.0, f64::NAN]),
            Err(SeriesError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn keeps_label() {
        let s = TimeSeries::labeled(vec![1.0, 2.0], 3).unwrap().with_source("x");
        assert_eq!(s.label(), Some(3));
        assert_eq!(s.source(), Some("x"));
        assert_eq!(s.len(), 2);
    }
}
