//! Grid specifications: `start:stop:count` for equispaced points, a comma
//! separated list, or the empty string for no points.

use crate::CliError;

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad(spec, "a range needs the form start:stop:count"));
        };
        let start = number(start, spec)?;
        let stop = number(stop, spec)?;
        let count: usize = count.trim().parse().map_err(|_| bad(spec, "count must be a nonnegative integer"))?;
        return Ok(match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| {
                    let t = i as f64 / (count - 1) as f64;
                    if i + 1 == count {
                        stop
                    } else {
                        start + t * (stop - start)
                    }
                })
                .collect(),
        });
    }
    spec.split(',').map(|s| number(s, spec)).collect()
}

fn number(text: &str, spec: &str) -> Result<f64, CliError> {
    let v: f64 = text.trim().parse().map_err(|_| bad(spec, &format!("'{}' is not a number", text.trim())))?;
    if !v.is_finite() {
        return Err(bad(spec, "grid values must be finite"));
    }
    Ok(v)
}

fn bad(spec: &str, why: &str) -> CliError {
    CliError::Validation(format!("invalid grid '{spec}': {why}"))
}
