//! CSV input for designs and responses, and the JSON fit document.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lpws_core::{Coefficients, Design, FitResult};

use crate::error::{CliError, Result};

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

/// Header row, then one numeric row per observation.
pub fn read_design(path: &Path) -> Result<Design> {
    let mut rdr = reader(path)?;
    let p = rdr.headers().map_err(|e| CliError::csv(path, e))?.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{}: row {}, column {}: '{field}' is not a number", path.display(), row + 1, col + 1))
            })?;
            data.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(Design::from_row_major(n, p, data)?)
}

/// Reads column `name`, or the only column when the file has one.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let idx = match headers.iter().position(|h| h == name) {
        Some(i) => i,
        None if headers.len() == 1 => 0,
        None => {
            return Err(CliError::Input(format!("{}: missing column '{name}'", path.display())));
        }
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let field = rec.get(idx).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| {
            CliError::Input(format!("{}: row {}: '{field}' is not a number", path.display(), row + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// The response column `y`, validated as non-negative integer counts.
pub fn read_response(path: &Path) -> Result<Vec<f64>> {
    let y = read_column(path, "y")?;
    for (row, &v) in y.iter().enumerate() {
        if !(v >= 0.0 && v.fract() == 0.0 && v.is_finite()) {
            return Err(CliError::Input(format!(
                "{}: row {}: y = {v} is not a non-negative integer count",
                path.display(),
                row + 1
            )));
        }
    }
    Ok(y)
}

pub fn read_coefficients(path: &Path) -> Result<Coefficients> {
    Ok(Coefficients::new(read_column(path, "beta")?))
}

/// 17 significant digits; non-finite values become `null`.
pub fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// JSON document for a fit.
pub fn fit_json(fit: &FitResult, lambda_used: f64) -> String {
    let beta: Vec<String> = fit.beta_hat.as_slice().iter().map(|&v| json_number(v)).collect();
    let mut s = String::from("{\n");
    let _ = writeln!(s, "  \"beta\": [{}],", beta.join(", "));
    let _ = writeln!(s, "  \"kkt_residual\": {},", json_number(fit.kkt_residual));
    let _ = writeln!(s, "  \"iterations\": {},", fit.iterations);
    let _ = writeln!(s, "  \"converged\": {},", fit.converged);
    let _ = writeln!(s, "  \"lambda_used\": {},", json_number(lambda_used));
    let _ = writeln!(s, "  \"objective\": {}", json_number(fit.objective.total));
    s.push_str("}\n");
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789, 0.0] {
            let s = json_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
        assert_eq!(json_number(f64::NAN), "null");
    }

    #[test]
    fn reads_design_and_response() {
        let dir = tempfile::tempdir().unwrap();
        let x = dir.path().join("x.csv");
        let y = dir.path().join("y.csv");
        fs::write(&x, "a,b\n1,2\n3,4\n5,6\n").unwrap();
        fs::write(&y, "y\n0\n3\n1\n").unwrap();
        let d = read_design(&x).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (3, 2));
        assert_eq!(d.get(2, 1), 6.0);
        assert_eq!(read_response(&y).unwrap(), vec![0.0, 3.0, 1.0]);

        fs::write(&y, "y\n0\n-1\n1\n").unwrap();
        let err = read_response(&y).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        fs::write(&y, "count,other\n1,2\n").unwrap();
        assert!(read_response(&y).unwrap_err().to_string().contains("missing column 'y'"));
        fs::write(&x, "a,b\n").unwrap();
        assert!(read_design(&x).unwrap_err().to_string().contains("no data rows"));
        fs::write(&x, "a,b\n1,zz\n").unwrap();
        assert!(read_design(&x).is_err());
    }
}
