/// Parses `start:end:step` (inclusive) or a single number. Values are
/// computed as `start + i * step` and rounded to 12 decimals so that
/// `0:1:0.1` yields exactly 0.3 rather than 0.30000000000000004.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad number {s:?} in range {text:?}"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [start, end, step] => {
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if step <= 0.0 {
                return Err(format!("step must be positive in {text:?}"));
            }
            if end < start {
                return Err(format!("range {text:?} is empty"));
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| round12(start + i as f64 * step)).collect())
        }
        _ => Err(format!("expected start:end:step or a number, got {text:?}")),
    }
}

fn round12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grid_has_101_points() {
        let v = parse_range("0:1:0.01").unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[30], 0.3);
        assert_eq!(v[100], 1.0);
    }

    #[test]
    fn gamma_grid() {
        assert_eq!(parse_range("0:8:1").unwrap(), (0..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(parse_range("2").unwrap(), vec![2.0]);
        assert_eq!(parse_range("1:1:1").unwrap(), vec![1.0]);
    }

    #[test]
    fn malformed() {
        for bad in ["", "1:0:1", "0:1:0", "0:1:-1", "0:1", "a:b:c", "0:1:nan"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }
}
