//! Number and vector formatting and parsing for the command line.

use bregcirc::{ExtendedReal, Point};

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}").trim_end_matches(".0").to_string()
}

/// Comma-separated coordinates.
pub fn fmt_point(p: &Point) -> String {
    p.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

/// `x` rounded to `digits` significant digits, trailing zeros removed
/// (the `%g` convention).
pub fn fmt_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return fmt_f64(x);
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_extended(d: ExtendedReal, digits: usize) -> String {
    if d.is_infinite() {
        "inf".into()
    } else {
        fmt_significant(d.to_f64(), digits)
    }
}

/// Parses `a,b,c`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("`{}` is not a number", t.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::usage(format!("non-finite entry in `{s}`")));
    }
    Ok(v)
}

/// Parses `a,b;c,d` into points of a common dimension.
pub fn parse_points(s: &str) -> Result<Vec<Point>, CliError> {
    let points = s
        .split(';')
        .map(|p| parse_vector(p).map(Point::from_vec))
        .collect::<Result<Vec<_>, _>>()?;
    if points.iter().any(|p| p.len() != points[0].len()) {
        return Err(CliError::usage("points have different dimensions"));
    }
    Ok(points)
}
