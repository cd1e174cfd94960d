//! Median forecast combination.

use std::collections::BTreeMap;

use crate::ensemble::ForecastSet;
use crate::error::{Error, Result};

/// Elementwise median across rows; an even count takes the mean of the two
/// central values. Rows must share one length.
pub fn median_of_rows(rows: &[&[f64]]) -> Vec<f64> {
    debug_assert!(!rows.is_empty());
    let h = rows[0].len();
    let mut out = Vec::with_capacity(h);
    let mut column = Vec::with_capacity(rows.len());
    for t in 0..h {
        column.clear();
        column.extend(rows.iter().map(|r| r[t]));
        column.sort_by(|a, b| a.total_cmp(b));
        let mid = column.len() / 2;
        out.push(if column.len() % 2 == 0 {
            (column[mid - 1] + column[mid]) / 2.0
        } else {
            column[mid]
        });
    }
    out
}

/// Combine a forecast set into one forecast per series by the elementwise
/// median over all votes for that series.
pub fn median_combine(fs: &ForecastSet) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut combined = BTreeMap::new();
    for id in fs.series_ids() {
        let rows = fs.votes_for(&id);
        if rows.is_empty() {
            return Err(Error::MissingSeries {
                id,
                place: "forecast set",
            });
        }
        let h = rows[0].len();
        if rows.iter().any(|r| r.len() != h) {
            return Err(Error::ShapeMismatch {
                op: "median_combine",
                lhs: vec![h],
                rhs: vec![rows.iter().map(|r| r.len()).max().unwrap_or(0)],
            });
        }
        combined.insert(id, median_of_rows(&rows));
    }
    Ok(combined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Vote;

    fn set(rows: Vec<Vec<f64>>) -> ForecastSet {
        ForecastSet {
            votes: rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| Vote {
                    member: i,
                    head: 0,
                    forecasts: std::iter::once(("S1".to_string(), r)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn odd_count_takes_the_middle() {
        let fs = set(vec![vec![1.0], vec![2.0], vec![9.0]]);
        assert_eq!(median_combine(&fs).unwrap()["S1"], vec![2.0]);
    }

    #[test]
    fn even_count_averages_the_central_pair() {
        let fs = set(vec![vec![1.0], vec![3.0]]);
        assert_eq!(median_combine(&fs).unwrap()["S1"], vec![2.0]);
    }

    #[test]
    fn identical_members_combine_to_themselves() {
        let fs = set(vec![vec![4.0, 5.0]; 7]);
        assert_eq!(median_combine(&fs).unwrap()["S1"], vec![4.0, 5.0]);
    }

    #[test]
    fn single_member_is_the_identity() {
        let fs = set(vec![vec![1.5, -2.0, 7.25]]);
        assert_eq!(median_combine(&fs).unwrap()["S1"], vec![1.5, -2.0, 7.25]);
    }
}
