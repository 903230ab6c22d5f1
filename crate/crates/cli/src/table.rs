//! Aligned plain-text tables for the `--table` flag.

/// Renders rows as a left-aligned table with a header row.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let columns = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(columns) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[String]| {
        for (i, cell) in cells.iter().enumerate().take(columns) {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            for _ in cell.len()..widths[i] {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    push_row(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        push_row(row);
    }
    out
}

pub fn fmt4(value: f64) -> String {
    format!("{value:.4}")
}

pub fn fmt_opt4(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_string(), fmt4)
}
