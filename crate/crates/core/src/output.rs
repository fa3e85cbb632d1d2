//! Text formatting shared by CSV writers.

/// Formats `x` like C's `%.17g`: 17 significant digits, fixed notation for
/// decimal exponents in [−5, 17), scientific otherwise, trailing zeros
/// removed. Every finite f64 round-trips through this text.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Writes a CSV header followed by one row per record, numbers in
/// [`format_g17`] form.
pub fn write_rows<W: std::io::Write>(mut out: W, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17((-1.0f64).exp()), "0.36787944117144233");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(1.5e20), "1.5e+20");
        assert_eq!(format_g17(12345.0), "12345");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(f64::NAN), "NaN");
    }

    #[test]
    fn round_trips() {
        for x in [std::f64::consts::PI, 1e-300, 6.02e23, 0.3, 1.0 / 3.0, 123456789.123, 5e-324] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &["x", "density"], &[vec![1.0, 0.5], vec![2.0, 0.25]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,density\n1,0.5\n2,0.25\n");
    }
}
