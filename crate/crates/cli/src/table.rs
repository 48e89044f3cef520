//! Delimiter-separated point files and label files.

use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{CliError, CliResult};
use crate::output::{format_number, Precision};

/// Which column holds integer class labels. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Position(usize),
    Last,
}

impl FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("last") {
            return Ok(Self::Last);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("label column must be `last` or a 1-based position, got `{s}`")),
            Ok(p) => Ok(Self::Position(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
    pub header: bool,
    pub label_column: Option<LabelColumn>,
}

impl Default for TableFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: false,
            label_column: None,
        }
    }
}

/// Numeric points, one per row, with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub points: Array2<f64>,
    pub labels: Option<Vec<i64>>,
}

pub fn read_table(path: &Path, format: &TableFormat) -> CliResult<Table> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&bytes, format).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_table(bytes: &[u8], format: &TableFormat) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(format.header)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("malformed input: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(CliError::Input(format!(
                    "row {line}: expected {w} fields, found {}",
                    fields.len()
                )))
            }
            _ => {}
        }
        let label_at = match format.label_column {
            None => None,
            Some(LabelColumn::Last) => Some(fields.len() - 1),
            Some(LabelColumn::Position(p)) if p <= fields.len() => Some(p - 1),
            Some(LabelColumn::Position(p)) => {
                return Err(CliError::Input(format!(
                    "row {line}: label column {p} but only {} fields",
                    fields.len()
                )))
            }
        };
        for (k, field) in fields.iter().enumerate() {
            if Some(k) == label_at {
                let label = field
                    .parse::<i64>()
                    .map_err(|_| CliError::Input(format!("row {line}: label `{field}` is not an integer")))?;
                labels.push(label);
            } else {
                let v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Input(format!("row {line}, field {}: `{field}` is not a number", k + 1)))?;
                values.push(v);
            }
        }
    }
    let width = width.ok_or_else(|| CliError::Input("input has no data rows".into()))?;
    let dims = width - usize::from(format.label_column.is_some());
    if dims == 0 {
        return Err(CliError::Input("input has no feature columns".into()));
    }
    let rows = values.len() / dims;
    Ok(Table {
        points: Array2::from_shape_vec((rows, dims), values).expect("rectangular table"),
        labels: format.label_column.map(|_| labels),
    })
}

/// Fails naming the first row with a coordinate outside `[0,1]`.
pub fn check_unit_range(points: &Array2<f64>) -> CliResult<()> {
    for (i, row) in points.outer_iter().enumerate() {
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CliError::Input(format!(
                "data row {}: coordinate {v} is outside [0, 1]; pass --normalize to rescale",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Maps arbitrary integer labels to `0..k` in order of first appearance.
pub fn compact_truth(labels: &[i64]) -> Vec<usize> {
    let mut seen: Vec<i64> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(k) => k,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

/// One 1-based label per line.
pub fn format_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{}\n", l + 1)).collect()
}

/// Inverse of [`format_labels`].
pub fn parse_labels(text: &str) -> CliResult<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(CliError::Input(format!("row {}: `{}` is not a 1-based label", i + 1, l.trim()))),
        })
        .collect()
}

/// Rows of numbers, with an optional trailing 1-based label.
pub fn format_rows(points: &Array2<f64>, labels: Option<&[usize]>, delimiter: u8, precision: Precision) -> String {
    let sep = (delimiter as char).to_string();
    let mut out = String::new();
    for (i, row) in points.outer_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|&v| format_number(v, precision)).collect();
        if let Some(l) = labels {
            fields.push((l[i] + 1).to_string());
        }
        out.push_str(&fields.join(&sep));
        out.push('\n');
    }
    out
}

/// Label grid with one image row per line.
pub fn format_label_grid(labels: &[usize], width: usize, delimiter: u8) -> String {
    let sep = (delimiter as char).to_string();
    labels
        .chunks(width)
        .map(|row| {
            let mut line = row.iter().map(|l| (l + 1).to_string()).collect::<Vec<_>>().join(&sep);
            line.push('\n');
            line
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labeled_rows() {
        let fmt = TableFormat {
            label_column: Some(LabelColumn::Last),
            ..TableFormat::default()
        };
        let t = parse_table(b"0.1, 0.2, 3\n0.3,0.4,1\n\n", &fmt).unwrap();
        assert_eq!(t.points, ndarray::array![[0.1, 0.2], [0.3, 0.4]]);
        assert_eq!(t.labels, Some(vec![3, 1]));
        let first = TableFormat {
            label_column: Some(LabelColumn::Position(1)),
            header: true,
            ..TableFormat::default()
        };
        let t = parse_table(b"y,a,b\n2,0.5,0.25\n", &first).unwrap();
        assert_eq!(t.points, ndarray::array![[0.5, 0.25]]);
        assert_eq!(t.labels, Some(vec![2]));
    }

    #[test]
    fn errors_name_the_row() {
        let fmt = TableFormat::default();
        let e = parse_table(b"0.1,0.2\n0.3,abc\n", &fmt).unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
        let e = parse_table(b"0.1,0.2\n0.3\n", &fmt).unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
        assert!(parse_table(b"", &fmt).is_err());
        let e = check_unit_range(&ndarray::array![[0.1], [1.5]]).unwrap_err().to_string();
        assert!(e.contains("row 2"), "{e}");
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("last".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!("3".parse::<LabelColumn>().unwrap(), LabelColumn::Position(3));
        assert!("0".parse::<LabelColumn>().is_err());
        assert!("x".parse::<LabelColumn>().is_err());
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec![0, 2, 1, 1, 0];
        assert_eq!(parse_labels(&format_labels(&labels)).unwrap(), labels);
        assert!(parse_labels("1\n0\n").is_err());
    }

    #[test]
    fn compact_truth_first_appearance() {
        assert_eq!(compact_truth(&[7, 3, 7, -1]), vec![0, 1, 0, 2]);
    }

    #[test]
    fn grid_layout() {
        assert_eq!(format_label_grid(&[0, 1, 1, 0], 2, b','), "1,2\n2,1\n");
    }
}
