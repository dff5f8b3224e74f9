//! Gaussian elimination over GF(2) for XOR rows.
//!
//! Long rows (hash constraints, wide parity gates) are brought to reduced
//! row-echelon form before search. This exposes units and contradictions
//! hidden in linear combinations, and leaves each row with a pivot variable
//! no other reduced row mentions. Short rows stay as they are, since mixing
//! them in only causes fill-in.

use crate::cnf::{Var, XorClause};

/// Rows shorter than this are not eliminated.
pub const MIN_ROW: usize = 5;

#[derive(Debug, PartialEq, Eq)]
pub struct Inconsistent;

/// Returns an equivalent row set, or `Inconsistent` if the rows imply `0 = 1`.
pub fn eliminate(rows: &[XorClause]) -> Result<Vec<XorClause>, Inconsistent> {
    let (long, mut out): (Vec<&XorClause>, Vec<XorClause>) = {
        let mut long = Vec::new();
        let mut short = Vec::new();
        for r in rows {
            if r.vars.len() >= MIN_ROW {
                long.push(r);
            } else {
                short.push(r.clone());
            }
        }
        (long, short)
    };
    if long.len() < 2 {
        out.extend(long.into_iter().cloned());
        return Ok(out);
    }

    let mut cols: Vec<Var> = long.iter().flat_map(|r| r.vars.iter().copied()).collect();
    cols.sort_unstable();
    cols.dedup();
    let words = cols.len().div_ceil(64) + 1; // last word holds the rhs
    let rhs_word = words - 1;
    let mut matrix: Vec<Vec<u64>> = long
        .iter()
        .map(|r| {
            let mut row = vec![0u64; words];
            for v in &r.vars {
                let c = cols.binary_search(v).unwrap();
                row[c / 64] ^= 1 << (c % 64);
            }
            if r.rhs {
                row[rhs_word] = 1;
            }
            row
        })
        .collect();

    let mut pivot_row = 0;
    for c in 0..cols.len() {
        let (w, bit) = (c / 64, 1u64 << (c % 64));
        let Some(found) = (pivot_row..matrix.len()).find(|&r| matrix[r][w] & bit != 0) else {
            continue;
        };
        matrix.swap(pivot_row, found);
        let pivot = matrix[pivot_row].clone();
        for (r, row) in matrix.iter_mut().enumerate() {
            if r != pivot_row && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == matrix.len() {
            break;
        }
    }

    for row in &matrix {
        let vars: Vec<Var> = (0..cols.len())
            .filter(|&c| row[c / 64] & (1 << (c % 64)) != 0)
            .map(|c| cols[c])
            .collect();
        let rhs = row[rhs_word] & 1 == 1;
        if vars.is_empty() {
            if rhs {
                return Err(Inconsistent);
            }
            continue;
        }
        out.push(XorClause { vars, rhs });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(vars: &[u32], rhs: bool) -> XorClause {
        XorClause {
            vars: vars.iter().map(|&v| Var::new(v)).collect(),
            rhs,
        }
    }

    fn solutions(rows: &[XorClause], n: u32) -> Vec<u32> {
        (0u32..1 << n)
            .filter(|m| {
                let model: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
                rows.iter().all(|r| r.is_satisfied(&model))
            })
            .collect()
    }

    #[test]
    fn detects_contradiction() {
        let rows = vec![row(&[1, 2, 3, 4, 5], true), row(&[1, 2, 3, 4, 5], false)];
        assert_eq!(eliminate(&rows), Err(Inconsistent));
    }

    #[test]
    fn preserves_solution_set() {
        let rows = vec![
            row(&[1, 2, 3, 4, 5, 6], true),
            row(&[2, 3, 4, 5, 6, 7], false),
            row(&[1, 3, 5, 7, 8], true),
            row(&[1, 2], true),
        ];
        let reduced = eliminate(&rows).unwrap();
        assert_eq!(solutions(&rows, 8), solutions(&reduced, 8));
        // the first two rows combine into x1 ^ x7 = 1
        assert!(reduced
            .iter()
            .any(|r| r.vars.len() <= 2 && r.vars.contains(&Var::new(7))));
    }

    #[test]
    fn short_rows_untouched() {
        let rows = vec![row(&[1, 2, 3], false), row(&[2, 3, 4], true)];
        assert_eq!(eliminate(&rows).unwrap(), rows);
    }
}
