//! MovieLens `UserID::MovieID::Rating::Timestamp` rating files.

use std::collections::BTreeMap;
use std::path::Path;

use super::DataError;
use crate::sensing::{MeasurementModel, SensingSample};

/// Ratings as indicator observations: users index rows, movies index columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MovieLens {
    pub sample: SensingSample,
    /// Original user id of each row.
    pub user_ids: Vec<u64>,
    /// Original movie id of each column.
    pub movie_ids: Vec<u64>,
    /// Empirical row and column frequencies.
    pub model: MeasurementModel,
    /// Global mean subtracted from every rating (0 when not centering).
    pub offset: f64,
}

pub fn parse_movielens(path: &Path, center: bool) -> Result<MovieLens, DataError> {
    parse_movielens_str(&std::fs::read_to_string(path)?, center)
}

/// Parses rating lines; user and movie ids are reindexed densely in order of first appearance.
pub fn parse_movielens_str(text: &str, center: bool) -> Result<MovieLens, DataError> {
    let mut users: BTreeMap<u64, usize> = BTreeMap::new();
    let mut movies: BTreeMap<u64, usize> = BTreeMap::new();
    let (mut user_ids, mut movie_ids) = (Vec::new(), Vec::new());
    let mut triples = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split("::").collect();
        if fields.len() != 4 {
            return Err(DataError::Parse {
                line,
                message: format!("expected 4 '::'-separated fields, got {}", fields.len()),
            });
        }
        let id = |s: &str, what: &str| {
            s.trim().parse::<u64>().map_err(|_| DataError::Parse {
                line,
                message: format!("bad {what} id `{s}`"),
            })
        };
        let (u, m) = (id(fields[0], "user")?, id(fields[1], "movie")?);
        let rating: f64 = fields[2].trim().parse().ok().filter(|r: &f64| r.is_finite()).ok_or_else(|| {
            DataError::Parse {
                line,
                message: format!("bad rating `{}`", fields[2]),
            }
        })?;
        id(fields[3], "timestamp")?;
        let row = *users.entry(u).or_insert_with(|| {
            user_ids.push(u);
            user_ids.len() - 1
        });
        let col = *movies.entry(m).or_insert_with(|| {
            movie_ids.push(m);
            movie_ids.len() - 1
        });
        triples.push((row, col, rating));
    }
    if triples.is_empty() {
        return Err(DataError::Format("no ratings found".into()));
    }
    let n = triples.len() as f64;
    let offset = if center {
        triples.iter().map(|t| t.2).sum::<f64>() / n
    } else {
        0.0
    };
    let (mut p, mut q) = (vec![0.0; user_ids.len()], vec![0.0; movie_ids.len()]);
    for &(r, c, _) in &triples {
        p[r] += 1.0 / n;
        q[c] += 1.0 / n;
    }
    let sum_p: f64 = p.iter().sum();
    let sum_q: f64 = q.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum_p);
    q.iter_mut().for_each(|x| *x /= sum_q);
    let sample = SensingSample::from_entries(
        user_ids.len(),
        movie_ids.len(),
        triples.into_iter().map(|(r, c, y)| (r, c, y - offset)),
    )?;
    Ok(MovieLens {
        sample,
        user_ids,
        movie_ids,
        model: MeasurementModel::indicator(p, q)?,
        offset,
    })
}
