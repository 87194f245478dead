//! Co-movement between two price series: Pearson correlation, its rolling
//! version, and dynamic time warping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ROLLING_WINDOW: usize = 120;

/// Pearson correlation coefficient of two equally long series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Size {
            what: "samples for correlation",
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation with a constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson over every `window`-long slice. Slices where either input is
/// constant yield `None`.
pub fn rolling_pearson(x: &[f64], y: &[f64], window: usize) -> Result<Vec<Option<f64>>> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    if window < 2 {
        return Err(Error::Argument(format!("rolling window must be at least 2, got {window}")));
    }
    if x.len() < window {
        return Err(Error::Size {
            what: "samples for rolling window",
            needed: window,
            got: x.len(),
        });
    }
    Ok((0..=x.len() - window)
        .map(|i| pearson(&x[i..i + window], &y[i..i + window]).ok())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    pub cost: f64,
    /// Index pairs `(i, j)` from `(0, 0)` to `(|x|-1, |y|-1)`.
    pub path: Vec<(usize, usize)>,
}

/// Unconstrained DTW with local cost `|x_i - y_j|`.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<DtwResult> {
    dtw_with_band(x, y, None)
}

/// DTW restricted to cells with `|i - j| <= band` when a band is given.
pub fn dtw_with_band(x: &[f64], y: &[f64], band: Option<usize>) -> Result<DtwResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Argument("DTW of an empty series".into()));
    }
    let (n, m) = (x.len(), y.len());
    if let Some(b) = band {
        if n.abs_diff(m) > b {
            return Err(Error::Argument(format!("band {b} cannot connect series of lengths {n} and {m}")));
        }
    }
    let inside = |i: usize, j: usize| band.is_none_or(|b| i.abs_diff(j) <= b);
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            if !inside(i, j) {
                continue;
            }
            let local = (x[i] - y[j]).abs();
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 {
                    best = best.min(acc[at(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(acc[at(i, j - 1)]);
                }
                if i > 0 && j > 0 {
                    best = best.min(acc[at(i - 1, j - 1)]);
                }
                best
            };
            acc[at(i, j)] = local + prev;
        }
    }

    // Backtrack, preferring the diagonal on ties.
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let step = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        (i, j) = step;
        path.push(step);
    }
    path.reverse();
    Ok(DtwResult {
        cost: acc[at(n - 1, m - 1)],
        path,
    })
}
