use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: usize = 365;

/// Contiguous train / validation / test day ranges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRanges {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

/// Splits `n` days into consecutive blocks of the given lengths, which must
/// cover all `n` days exactly.
pub fn split(n: usize, train: usize, validation: usize, test: usize) -> Result<SplitRanges> {
    let total = train + validation + test;
    if total > n {
        return Err(Error::Range(format!(
            "requested {train}+{validation}+{test} = {total} days but only {n} available"
        )));
    }
    if total < n {
        return Err(Error::Range(format!(
            "requested {total} days leave {} of {n} days unassigned",
            n - total
        )));
    }
    if train == 0 {
        return Err(Error::Range("training range is empty".into()));
    }
    Ok(SplitRanges {
        train: 0..train,
        validation: train..train + validation,
        test: train + validation..n,
    })
}

/// Split by whole years of 365 days.
pub fn split_years(n: usize, train: usize, validation: usize, test: usize) -> Result<SplitRanges> {
    split(
        n,
        train * DAYS_PER_YEAR,
        validation * DAYS_PER_YEAR,
        test * DAYS_PER_YEAR,
    )
}

/// Fixed-length validation and test blocks at the end, training takes the rest.
pub fn split_tail(n: usize, validation: usize, test: usize) -> Result<SplitRanges> {
    let tail = validation + test;
    if tail >= n {
        return Err(Error::Range(format!(
            "validation+test = {tail} days leaves no training data out of {n}"
        )));
    }
    split(n, n - tail, validation, test)
}
