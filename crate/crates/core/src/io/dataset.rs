use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::FormatError;
use crate::series::TimeSeries;

/// Series read from a labelled text file together with the map from the
/// file's original labels to contiguous class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub series: Vec<TimeSeries>,
    /// `(original, index)` pairs in ascending original order.
    pub mapping: Vec<(i64, usize)>,
}

impl LabeledDataset {
    pub fn classes(&self) -> usize {
        self.mapping.len()
    }

    pub fn width(&self) -> usize {
        self.series.first().map_or(0, TimeSeries::len)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestOptions {
    /// Keep only rows whose original label is listed.
    pub subset: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Delimiter {
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains(',') {
            Self::Comma
        } else if line.contains('\t') {
            Self::Tab
        } else {
            Self::Whitespace
        }
    }

    fn split<'a>(self, line: &'a str) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Self::Comma => Box::new(line.split(',').map(str::trim)),
            Self::Tab => Box::new(line.split('\t').map(str::trim)),
            Self::Whitespace => Box::new(line.split_whitespace()),
        }
    }
}

fn parse_label(field: &str, line: usize) -> Result<i64, FormatError> {
    let bad = || FormatError::Parse { line, message: format!("label {field:?} is not an integer") };
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    // Archive files sometimes write labels as floats, e.g. 1.0000000e+00.
    let v: f64 = field.parse().map_err(|_| bad())?;
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
        return Err(bad());
    }
    Ok(v as i64)
}

/// Reads one series per line: the label first, then the values. Comma,
/// tab and whitespace separators are detected from the first data line;
/// blank lines are skipped.
pub fn read_dataset<R: BufRead>(reader: R, options: &IngestOptions) -> Result<LabeledDataset, FormatError> {
    let mut delimiter = None;
    let mut width = None;
    let mut rows: Vec<(i64, Vec<f64>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let d = *delimiter.get_or_insert_with(|| Delimiter::detect(trimmed));
        let mut fields = d.split(trimmed);
        let label = parse_label(fields.next().unwrap_or(""), line_no)?;
        let values = fields
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(FormatError::Parse { line: line_no, message: format!("bad value {f:?}") }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected || expected == 0 {
            return Err(FormatError::RaggedRows { line: line_no, expected, got: values.len() });
        }
        if options.subset.as_ref().is_none_or(|keep| keep.contains(&label)) {
            rows.push((label, values));
        }
    }
    if rows.is_empty() {
        return Err(FormatError::EmptyFile);
    }
    let index: BTreeMap<i64, usize> = rows
        .iter()
        .map(|(l, _)| *l)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let series = rows
        .into_iter()
        .map(|(l, v)| TimeSeries::new(v).map(|s| s.with_label(index[&l])))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| FormatError::Corrupt(e.to_string()))?;
    Ok(LabeledDataset { series, mapping: index.into_iter().collect() })
}

pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<LabeledDataset, FormatError> {
    let file = std::fs::File::open(path)?;
    let data = read_dataset(std::io::BufReader::new(file), options)?;
    log::info!(
        "read {} series of length {} from {}; label map {:?}",
        data.series.len(),
        data.width(),
        path.display(),
        data.mapping
    );
    Ok(data)
}

/// One line per series, label first. Values use the shortest text that
/// parses back to the same `f64`.
pub fn write_dataset<W: Write>(mut out: W, series: &[TimeSeries]) -> Result<(), FormatError> {
    for s in series {
        write!(out, "{}", s.label().unwrap_or(0))?;
        for v in s.values() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
