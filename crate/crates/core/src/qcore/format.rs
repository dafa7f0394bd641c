/// Shortest decimal rendering of `p` that reads back within 1e-9.
pub fn format_probability(p: f64) -> String {
    for digits in 0..=17 {
        let s = format!("{p:.digits$}");
        let s = trim_zeros(&s);
        if let Ok(back) = s.parse::<f64>() {
            if (back - p).abs() <= 1e-9 {
                return s;
            }
        }
    }
    format!("{p}")
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return if s == "-0" { "0".into() } else { s.into() };
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

/// `|0101>` for `value` over `width` qbits, most significant first.
pub fn ket(value: u64, width: usize) -> String {
    let bits: String = (0..width)
        .rev()
        .map(|b| if (value >> b) & 1 == 1 { '1' } else { '0' })
        .collect();
    format!("|{bits}>")
}

/// `0.25 |00>, 0.25 |01>` style rendering.
pub fn format_spectrum(entries: &[(u64, f64)], width: usize) -> String {
    entries
        .iter()
        .map(|(v, p)| format!("{} {}", format_probability(*p), ket(*v, width)))
        .collect::<Vec<_>>()
        .join(", ")
}
