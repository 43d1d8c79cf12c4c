//! MacKay alist text format.
//!
//! ```text
//! n m
//! max_col_deg max_row_deg
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero padded>
//! <m lines: 1-based column indices of each row, zero padded>
//! ```

use std::fmt::Write as _;

use super::{CodeError, ParityCheckMatrix};

pub fn save_alist(h: &ParityCheckMatrix) -> String {
    let n = h.n();
    let m = h.num_rows();
    let max_col = h.max_col_degree();
    let max_row = h.max_row_degree();
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let col_degrees: Vec<String> = (1..=n).map(|s| h.col_degree(s).to_string()).collect();
    let _ = writeln!(out, "{}", col_degrees.join(" "));
    let row_degrees: Vec<String> = (1..=m).map(|r| h.row_degree(r).to_string()).collect();
    let _ = writeln!(out, "{}", row_degrees.join(" "));
    for s in 1..=n {
        let _ = writeln!(out, "{}", padded(h.col(s), max_col));
    }
    for r in 1..=m {
        let _ = writeln!(out, "{}", padded(h.row(r), max_row));
    }
    out
}

fn padded(entries: &[usize], width: usize) -> String {
    let mut items: Vec<String> = entries.iter().map(usize::to_string).collect();
    items.resize(width, "0".to_string());
    items.join(" ")
}

pub fn load_alist(text: &str) -> Result<ParityCheckMatrix, CodeError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next_numbers = |what: &str| -> Result<(usize, Vec<usize>), CodeError> {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| CodeError::Alist(format!("unexpected end of input reading {what}")))?;
        let numbers = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| {
                    CodeError::Alist(format!("line {line_no}: invalid number {tok:?} in {what}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((line_no, numbers))
    };

    let (line_no, dims) = next_numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(CodeError::Alist(format!(
            "line {line_no}: expected \"n m\", found {} values",
            dims.len()
        )));
    };
    let (line_no, maxima) = next_numbers("maximum degrees")?;
    let [max_col, max_row] = maxima[..] else {
        return Err(CodeError::Alist(format!(
            "line {line_no}: expected \"max_col_deg max_row_deg\""
        )));
    };
    let (line_no, col_degrees) = next_numbers("column degrees")?;
    if col_degrees.len() != n {
        return Err(CodeError::Alist(format!(
            "line {line_no}: expected {n} column degrees, found {}",
            col_degrees.len()
        )));
    }
    let (line_no, row_degrees) = next_numbers("row degrees")?;
    if row_degrees.len() != m {
        return Err(CodeError::Alist(format!(
            "line {line_no}: expected {m} row degrees, found {}",
            row_degrees.len()
        )));
    }

    let mut col_lists = Vec::with_capacity(n);
    for (s, &deg) in col_degrees.iter().enumerate() {
        let (line_no, entries) = next_numbers("column index list")?;
        col_lists.push(read_list(line_no, entries, deg, max_col, m, s + 1)?);
    }
    let mut rows = Vec::with_capacity(m);
    for (r, &deg) in row_degrees.iter().enumerate() {
        let (line_no, entries) = next_numbers("row index list")?;
        rows.push(read_list(line_no, entries, deg, max_row, n, r + 1)?);
    }

    // Both halves of the file must describe the same matrix.
    let mut transposed = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for &c in row {
            transposed[c - 1].push(r + 1);
        }
    }
    for (s, (listed, derived)) in col_lists.iter_mut().zip(&transposed).enumerate() {
        listed.sort_unstable();
        if listed != derived {
            return Err(CodeError::Alist(format!(
                "column {} lists rows {:?} but the row lists imply {:?}",
                s + 1,
                listed,
                derived
            )));
        }
    }
    ParityCheckMatrix::new(n, rows)
}

fn read_list(
    line_no: usize,
    entries: Vec<usize>,
    degree: usize,
    max_degree: usize,
    bound: usize,
    which: usize,
) -> Result<Vec<usize>, CodeError> {
    if degree > max_degree {
        return Err(CodeError::Alist(format!(
            "line {line_no}: degree {degree} of entry {which} exceeds declared maximum {max_degree}"
        )));
    }
    let list: Vec<usize> = entries.into_iter().filter(|&e| e != 0).collect();
    if list.len() != degree {
        return Err(CodeError::Alist(format!(
            "line {line_no}: entry {which} declares degree {degree} but lists {} indices",
            list.len()
        )));
    }
    if let Some(&bad) = list.iter().find(|&&e| e > bound) {
        return Err(CodeError::IndexOutOfRange { index: bad, bound });
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::example_matrix;

    #[test]
    fn example_matrix_text() {
        let text = save_alist(&example_matrix());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "8 4");
        assert_eq!(lines[1], "2 4");
        assert_eq!(lines[2], "2 2 2 2 1 1 2 1");
        assert_eq!(lines[3], "3 3 3 4");
        assert_eq!(lines[4], "2 3");
        assert_eq!(lines[10], "2 4");
        assert_eq!(lines[11], "4 0");
        assert_eq!(lines[12], "3 5 6 0");
        assert_eq!(lines[15], "2 4 7 8");
        assert_eq!(lines.len(), 16);
    }

    #[test]
    fn reload_is_identity() {
        let h = example_matrix();
        assert_eq!(load_alist(&save_alist(&h)).unwrap(), h);
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(matches!(load_alist(""), Err(CodeError::Alist(_))));
    }

    #[test]
    fn out_of_range_index() {
        let text = save_alist(&example_matrix()).replace("2 4 7 8", "2 4 7 9");
        assert!(matches!(
            load_alist(&text),
            Err(CodeError::IndexOutOfRange { index: 9, bound: 8 })
        ));
    }

    #[test]
    fn inconsistent_halves() {
        let mut lines: Vec<String> = save_alist(&example_matrix())
            .lines()
            .map(str::to_string)
            .collect();
        // column 5 claims row 2 instead of row 1
        lines[8] = "2 0".to_string();
        assert!(matches!(load_alist(&lines.join("\n")), Err(CodeError::Alist(_))));
    }

    #[test]
    fn unpadded_lists_are_accepted() {
        let text = "3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 2 3\n";
        let h = load_alist(text).unwrap();
        assert_eq!(h.row(1), &[1, 2, 3]);
        assert_eq!(h.k(), 2);
    }
}
