//! Matrix file input and output: plain CSV (one row per line) and
//! MatrixMarket dense array format, auto-detected by extension.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

/// Parse failure with the 1-based line and field position that caused it.
#[derive(Debug)]
pub struct ParseError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.path, self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

fn err(path: &str, line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        path: path.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Read a matrix, dispatching on the file extension (.mtx for MatrixMarket,
/// anything else parses as CSV).
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, ParseError> {
    let display = path.display().to_string();
    let content = fs::read_to_string(path)
        .map_err(|e| err(&display, 0, 0, format!("cannot read file: {e}")))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => parse_matrix_market(&display, &content),
        _ => parse_csv(&display, &content),
    }
}

/// Plain CSV: one matrix row per line, comma-separated decimal numbers.
pub fn parse_csv(path: &str, content: &str) -> Result<DMatrix<f64>, ParseError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (lineno, line) in content.lines().enumerate() {
        let line_number = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (field_idx, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                err(
                    path,
                    line_number,
                    field_idx + 1,
                    format!("invalid number {:?}", field.trim()),
                )
            })?;
            row.push(value);
        }
        if width == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(err(
                path,
                line_number,
                row.len(),
                format!("row has {} fields, expected {width}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(path, 1, 1, "empty matrix file"));
    }
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, width, |i, j| rows[i][j]))
}

/// MatrixMarket dense array format, `real general` only, column-major
/// entries.
pub fn parse_matrix_market(path: &str, content: &str) -> Result<DMatrix<f64>, ParseError> {
    let mut lines = content.lines().enumerate();
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| err(path, 1, 1, "empty matrix file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 4
        || !tokens[0].eq_ignore_ascii_case("%%MatrixMarket")
        || !tokens[1].eq_ignore_ascii_case("matrix")
    {
        return Err(err(
            path,
            header_line + 1,
            1,
            "expected %%MatrixMarket matrix header",
        ));
    }
    if !tokens[2].eq_ignore_ascii_case("array") {
        return Err(err(
            path,
            header_line + 1,
            3,
            format!(
                "unsupported format {:?}; only dense `array` is handled",
                tokens[2]
            ),
        ));
    }
    if !tokens[3].eq_ignore_ascii_case("real") {
        return Err(err(
            path,
            header_line + 1,
            4,
            format!("unsupported field {:?}; only `real` is handled", tokens[3]),
        ));
    }
    if let Some(symmetry) = tokens.get(4) {
        if !symmetry.eq_ignore_ascii_case("general") {
            return Err(err(
                path,
                header_line + 1,
                5,
                format!("unsupported symmetry {symmetry:?}; only `general` is handled"),
            ));
        }
    }

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<f64> = Vec::new();
    let mut expected = 0usize;
    for (lineno, line) in lines {
        let line_number = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if size.is_none() {
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(err(
                    path,
                    line_number,
                    1,
                    "expected `rows cols` dimension line",
                ));
            }
            let nrows: usize = parts[0]
                .parse()
                .map_err(|_| err(path, line_number, 1, "invalid row count"))?;
            let ncols: usize = parts[1]
                .parse()
                .map_err(|_| err(path, line_number, 2, "invalid column count"))?;
            if nrows == 0 || ncols == 0 {
                return Err(err(
                    path,
                    line_number,
                    1,
                    "matrix dimensions must be positive",
                ));
            }
            size = Some((nrows, ncols));
            expected = nrows * ncols;
            continue;
        }
        for (field_idx, field) in trimmed.split_whitespace().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                err(
                    path,
                    line_number,
                    field_idx + 1,
                    format!("invalid number {field:?}"),
                )
            })?;
            entries.push(value);
        }
        if entries.len() > expected {
            return Err(err(
                path,
                line_number,
                1,
                format!("too many entries: expected {expected}"),
            ));
        }
    }
    let (nrows, ncols) = size.ok_or_else(|| err(path, 1, 1, "missing dimension line"))?;
    if entries.len() != expected {
        return Err(err(
            path,
            0,
            0,
            format!("expected {expected} entries, found {}", entries.len()),
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| {
        entries[j * nrows + i]
    }))
}

/// Serialize as CSV with 17 significant digits for exact round-trips.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 3.0e-17, 0.1, 4.0, -5.0]);
        let text = matrix_to_csv(&m);
        let parsed = parse_csv("test.csv", &text).unwrap();
        assert_eq!(m, parsed);
    }

    #[test]
    fn csv_reports_line_and_column() {
        let e = parse_csv("bad.csv", "1.0,2.0\n3.0,oops\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.column, 2);

        let e = parse_csv("ragged.csv", "1.0,2.0\n3.0\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn matrix_market_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% demo\n2 2\n1.0\n2.0\n3.0\n4.0\n";
        let m = parse_matrix_market("t.mtx", text).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 0)], 2.0);
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m[(1, 1)], 4.0);
    }

    #[test]
    fn matrix_market_rejects_sparse() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 5.0\n";
        assert!(parse_matrix_market("t.mtx", text).is_err());
    }
}
