//! Number formatting and CSV sinks.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::CliError;

/// `%g`-style formatting with `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV writer to a file, or to standard output when no path is given.
pub fn csv_sink(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let out: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(out))
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.980496, 6), "0.980496");
        assert_eq!(sig(0.9000000000000001, 6), "0.9");
        assert_eq!(sig(0.8136, 6), "0.8136");
        assert_eq!(sig(0.98049612345, 6), "0.980496");
        assert_eq!(sig(123456789.0, 6), "1.23457e8");
        assert_eq!(sig(1.5e-9, 6), "1.5e-9");
        assert_eq!(sig(-2.0, 3), "-2");
        assert_eq!(sig(0.0, 6), "0");
        assert_eq!(sig(f64::NAN, 6), "nan");
        assert_eq!(sig(0.75, 12), "0.75");
        assert_eq!(sig(99.99999, 3), "100");
    }
}
