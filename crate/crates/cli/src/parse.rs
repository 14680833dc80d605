//! Flag value parsers shared by the subcommands.

/// A count written as an integer or in scientific notation (`1e10`).
pub fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if f.fract() != 0.0 || !(0.0..=u64::MAX as f64).contains(&f) {
        return Err(format!("'{s}' is not a whole number"));
    }
    Ok(f as u64)
}

/// A real written as a decimal or a fraction `a/b`.
pub fn real(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?,
    };
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_reals() {
        assert_eq!(count("1e10"), Ok(10_000_000_000));
        assert_eq!(count("32"), Ok(32));
        assert!(count("1.5").is_err());
        assert!((real("2/3").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(real("0.25"), Ok(0.25));
        assert!(real("1/0").is_err());
    }
}
