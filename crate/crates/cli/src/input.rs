use std::fs;
use std::path::Path;

use stiefel_fourier::linalg::{svd, Matrix, SingularSpectrum};

use crate::args::InputArgs;
use crate::error::{CliError, CliResult};

/// A validated frequency, reduced to its singular spectrum.
#[derive(Clone, Debug)]
pub struct Frequency {
    pub n: usize,
    pub k: usize,
    pub spectrum: SingularSpectrum,
    /// Set when the input was a full matrix that went through the SVD.
    pub from_matrix: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Checks that `values` has length `k`, is nonnegative, and fits in `n`.
pub fn spectrum_from_values(n: usize, k: usize, values: &[f64]) -> CliResult<SingularSpectrum> {
    if k == 0 || k > n {
        return Err(usage(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    if values.len() != k {
        return Err(usage(format!("expected {k} singular values, got {}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(usage(format!("singular values must be finite and nonnegative, got {v}")));
    }
    SingularSpectrum::from_unsorted(n, values.to_vec()).map_err(|e| usage(e.to_string()))
}

/// Parses a matrix from a JSON nested array or headerless CSV text.
pub fn parse_matrix(text: &str) -> CliResult<Matrix> {
    let rows: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| usage(format!("bad JSON matrix: {e}")))?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| usage(format!("bad CSV matrix: {e}")))?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| usage(format!("bad CSV entry {f:?}: {e}"))))
                .collect::<CliResult<Vec<f64>>>()?;
            rows.push(row);
        }
        rows
    };
    if rows.is_empty() {
        return Err(usage("empty matrix"));
    }
    Matrix::from_rows(&rows).map_err(|e| usage(e.to_string()))
}

fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn resolve(input: &InputArgs) -> CliResult<Frequency> {
    match (&input.spectrum, &input.matrix) {
        (Some(values), None) => {
            let n = input.n.ok_or_else(|| usage("--n is required with --spectrum"))?;
            let k = input.k.unwrap_or(values.len());
            Ok(Frequency {
                n,
                k,
                spectrum: spectrum_from_values(n, k, values)?,
                from_matrix: false,
            })
        }
        (None, Some(path)) => {
            let xi = read_matrix(path)?;
            let (rows, cols) = xi.shape();
            if input.n.is_some_and(|n| n != rows) || input.k.is_some_and(|k| k != cols) {
                return Err(usage(format!(
                    "matrix is {rows} x {cols} but --n/--k say {} x {}",
                    input.n.unwrap_or(rows),
                    input.k.unwrap_or(cols)
                )));
            }
            if cols == 0 || cols > rows {
                return Err(usage(format!("need 1 <= k <= n, got a {rows} x {cols} matrix")));
            }
            if !xi.is_finite() {
                return Err(usage("matrix has non-finite entries"));
            }
            Ok(Frequency {
                n: rows,
                k: cols,
                spectrum: svd(&xi)?.spectrum,
                from_matrix: true,
            })
        }
        (None, None) => Err(usage("one of --spectrum or --matrix is required")),
        (Some(_), Some(_)) => Err(usage("--spectrum and --matrix are mutually exclusive")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_csv_matrices_agree() {
        let a = parse_matrix("[[1, 0], [0, 2], [0, 0]]").unwrap();
        let b = parse_matrix("1,0\n0, 2\n0,0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), (3, 2));
    }

    #[test]
    fn ragged_or_garbage_matrices_are_usage_errors() {
        assert!(matches!(parse_matrix("[[1, 0], [0]]"), Err(CliError::Usage(_))));
        assert!(matches!(parse_matrix("1,x\n"), Err(CliError::Usage(_))));
        assert!(matches!(parse_matrix(""), Err(CliError::Usage(_))));
    }

    #[test]
    fn spectrum_checks() {
        assert!(spectrum_from_values(4, 2, &[1.0]).is_err());
        assert!(spectrum_from_values(4, 2, &[1.0, -1.0]).is_err());
        assert!(spectrum_from_values(2, 3, &[1.0, 1.0, 1.0]).is_err());
        let s = spectrum_from_values(4, 2, &[1.0, 3.0]).unwrap();
        assert_eq!(s.values(), &[3.0, 1.0]);
    }
}
