//! Number rendering shared by every command.

/// Placeholder for a quantity outside its domain.
pub const UNDEF: &str = "undef";

/// Decimal text with 17 significant digits, which round-trips every `f64`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return UNDEF.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').map_or(sci.len(), |i| i + 1)..]
        .parse()
        .unwrap_or(0);
    if (-5..17).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEF.to_string(), sig17)
}

/// Short rendering for human-facing tables.
pub fn short(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        _ => UNDEF.to_string(),
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = width[i] - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(
        &width
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().take(cols).map(String::as_str).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            1.0,
            0.1,
            1.0 / 3.0,
            43.0 / 38.0,
            1e-7,
            123456.789,
            -2.5e20,
            f64::MIN_POSITIVE,
        ] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(f64::NAN), "undef");
        assert_eq!(opt(None), "undef");
    }

    #[test]
    fn table_aligns() {
        let t = table(
            &["k", "value"],
            &[
                vec!["0".into(), "1".into()],
                vec!["10".into(), "0.5".into()],
            ],
        );
        assert_eq!(t, "k   value\n--  -----\n0       1\n10    0.5\n");
    }
}
