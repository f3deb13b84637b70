use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rank-`k` factors: row `i` of `user_factors` is `n_i`, row `j` of
/// `content_factors` is `f_j`, and the prediction for `(i, j)` is `n_iᵀ f_j`.
///
/// The first `target_users` / `target_contents` rows belong to the target
/// domain; rows past them exist only in a joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel<T> {
    pub(crate) user_factors: Array2<T>,
    pub(crate) content_factors: Array2<T>,
    pub(crate) target_users: usize,
    pub(crate) target_contents: usize,
}

impl<T: Scalar> FactorModel<T> {
    pub fn new(user_factors: Array2<T>, content_factors: Array2<T>) -> Result<Self> {
        if user_factors.ncols() != content_factors.ncols() || user_factors.ncols() == 0 {
            return Err(Error::invalid("user and content factors need the same positive rank"));
        }
        if user_factors.iter().chain(content_factors.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("factor entries must be finite"));
        }
        let (target_users, target_contents) = (user_factors.nrows(), content_factors.nrows());
        Ok(Self { user_factors, content_factors, target_users, target_contents })
    }

    pub fn rank(&self) -> usize {
        self.user_factors.ncols()
    }

    pub fn user_factors(&self) -> &Array2<T> {
        &self.user_factors
    }

    pub fn content_factors(&self) -> &Array2<T> {
        &self.content_factors
    }

    pub fn n_users(&self) -> usize {
        self.user_factors.nrows()
    }

    pub fn n_contents(&self) -> usize {
        self.content_factors.nrows()
    }

    pub fn target_users(&self) -> usize {
        self.target_users
    }

    pub fn target_contents(&self) -> usize {
        self.target_contents
    }

    pub fn predict(&self, user: usize, content: usize) -> T {
        dot(
            self.user_factors.row(user).as_slice().expect("factors are contiguous"),
            self.content_factors.row(content).as_slice().expect("factors are contiguous"),
        )
    }

    /// Model restricted to the target-domain rows.
    pub fn target(&self) -> Self {
        let users = self.user_factors.slice(ndarray::s![..self.target_users, ..]).to_owned();
        let contents = self.content_factors.slice(ndarray::s![..self.target_contents, ..]).to_owned();
        Self {
            user_factors: users,
            content_factors: contents,
            target_users: self.target_users,
            target_contents: self.target_contents,
        }
    }

    /// Writes a header line `k n_users n_contents`, then one space-separated
    /// row per user factor followed by one row per content factor.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.rank(), self.n_users(), self.n_contents())?;
        for row in self.user_factors.rows().into_iter().chain(self.content_factors.rows()) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("missing model header"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::invalid(format!("bad header field {t:?}"))))
            .collect::<Result<_>>()?;
        let [k, n_users, n_contents] = dims[..] else {
            return Err(Error::invalid("model header needs `k n_users n_contents`"));
        };
        let mut values = Vec::with_capacity((n_users + n_contents) * k);
        for _ in 0..n_users + n_contents {
            let line = lines.next().ok_or_else(|| Error::invalid("truncated model file"))??;
            let row: Vec<T> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map(T::of)
                        .map_err(|_| Error::invalid(format!("bad factor entry {t:?}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(Error::invalid(format!("factor row has {} entries, expected {k}", row.len())));
            }
            values.extend(row);
        }
        let contents = values.split_off(n_users * k);
        let users = Array2::from_shape_vec((n_users, k), values).map_err(|e| Error::invalid(e.to_string()))?;
        let contents =
            Array2::from_shape_vec((n_contents, k), contents).map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(users, contents)
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Dense `n_users × n_contents` prediction matrix, unclamped.
pub fn predict_matrix<T: Scalar>(
    model: &FactorModel<T>,
    n_users: usize,
    n_contents: usize,
) -> Result<Array2<T>> {
    if n_users > model.n_users() || n_contents > model.n_contents() {
        return Err(Error::invalid(format!(
            "requested {n_users}x{n_contents} predictions from a {}x{} model",
            model.n_users(),
            model.n_contents()
        )));
    }
    Ok(Array2::from_shape_fn((n_users, n_contents), |(i, j)| model.predict(i, j)))
}
