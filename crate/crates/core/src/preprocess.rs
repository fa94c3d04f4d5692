//! Matrix trimming by rarity thresholds and descriptive statistics.
//!
//! Trimming repeatedly deletes likes with fewer than `min_users_per_like`
//! users and users with fewer than `min_likes_per_user` likes until neither
//! pass removes anything. One pass is not enough: deleting a popular-enough
//! like can push a user below threshold and vice versa. The deletion process
//! is confluent, so the pass order does not change the fixpoint.

use crate::error::{Error, Result};
use crate::ingest::UserLikeMatrix;
use serde::{Deserialize, Serialize};

/// Rarity thresholds. Defaults follow the reference corpus: at least 150
/// users per like and 50 likes per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrimConfig {
    pub min_users_per_like: usize,
    pub min_likes_per_user: usize,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            min_users_per_like: 150,
            min_likes_per_user: 50,
        }
    }
}

impl TrimConfig {
    pub fn new(min_users_per_like: usize, min_likes_per_user: usize) -> Result<TrimConfig> {
        if min_users_per_like < 1 || min_likes_per_user < 1 {
            return Err(Error::Parameter("trim thresholds must be >= 1".into()));
        }
        Ok(TrimConfig {
            min_users_per_like,
            min_likes_per_user,
        })
    }
}

/// Which side a trimming pass removes first. The fixpoint is identical;
/// both orders exist so tests can assert confluence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimOrder {
    ColumnsFirst,
    RowsFirst,
}

/// Trim to the greatest submatrix in which every like has at least
/// `min_users_per_like` users and every user at least `min_likes_per_user`
/// likes. The input matrix is left untouched.
pub fn trim(matrix: &UserLikeMatrix, cfg: &TrimConfig) -> Result<UserLikeMatrix> {
    trim_with_order(matrix, cfg, TrimOrder::ColumnsFirst)
}

pub fn trim_with_order(
    matrix: &UserLikeMatrix,
    cfg: &TrimConfig,
    order: TrimOrder,
) -> Result<UserLikeMatrix> {
    let n_rows = matrix.n_rows();
    let n_cols = matrix.n_cols();
    let mut row_alive = vec![true; n_rows];
    let mut col_alive = vec![true; n_cols];
    let mut row_deg: Vec<usize> = (0..n_rows).map(|i| matrix.row_degree(i)).collect();
    let mut col_deg: Vec<usize> = (0..n_cols).map(|j| matrix.col_degree(j)).collect();

    loop {
        let mut removed = false;
        let passes: [bool; 2] = match order {
            TrimOrder::ColumnsFirst => [true, false],
            TrimOrder::RowsFirst => [false, true],
        };
        for cols_pass in passes {
            if cols_pass {
                for j in 0..n_cols {
                    if col_alive[j] && col_deg[j] < cfg.min_users_per_like {
                        col_alive[j] = false;
                        removed = true;
                        for &i in matrix.col(j) {
                            if row_alive[i as usize] {
                                row_deg[i as usize] -= 1;
                            }
                        }
                    }
                }
            } else {
                for i in 0..n_rows {
                    if row_alive[i] && row_deg[i] < cfg.min_likes_per_user {
                        row_alive[i] = false;
                        removed = true;
                        for &j in matrix.row(i) {
                            if col_alive[j as usize] {
                                col_deg[j as usize] -= 1;
                            }
                        }
                    }
                }
            }
        }
        if !removed {
            break;
        }
    }

    if !row_alive.iter().any(|&a| a) || !col_alive.iter().any(|&a| a) {
        return Err(Error::TrimmedToEmpty {
            min_users_per_like: cfg.min_users_per_like,
            min_likes_per_user: cfg.min_likes_per_user,
        });
    }

    let row_ids: Vec<String> = matrix
        .row_ids()
        .iter()
        .zip(&row_alive)
        .filter(|(_, &a)| a)
        .map(|(id, _)| id.clone())
        .collect();
    let col_ids: Vec<String> = matrix
        .col_ids()
        .iter()
        .zip(&col_alive)
        .filter(|(_, &a)| a)
        .map(|(id, _)| id.clone())
        .collect();
    let mut row_map = vec![u32::MAX; n_rows];
    let mut next = 0u32;
    for (i, &alive) in row_alive.iter().enumerate() {
        if alive {
            row_map[i] = next;
            next += 1;
        }
    }
    let mut col_map = vec![u32::MAX; n_cols];
    let mut next = 0u32;
    for (j, &alive) in col_alive.iter().enumerate() {
        if alive {
            col_map[j] = next;
            next += 1;
        }
    }
    let entries = matrix.entries().filter_map(|(i, j)| {
        (row_alive[i] && col_alive[j]).then(|| (row_map[i], col_map[j]))
    });
    UserLikeMatrix::assemble(row_ids, col_ids, entries.collect::<Vec<_>>())
}

/// min/median/min/max summary of a degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

fn degree_stats(mut degrees: Vec<usize>) -> DegreeStats {
    degrees.sort_unstable();
    let n = degrees.len();
    let mean = degrees.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        degrees[n / 2] as f64
    } else {
        (degrees[n / 2 - 1] + degrees[n / 2]) as f64 / 2.0
    };
    DegreeStats {
        mean,
        median,
        min: degrees[0],
        max: degrees[n - 1],
    }
}

/// Descriptive statistics of a users-likes matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub n_users: usize,
    pub n_likes: usize,
    pub n_pairs: usize,
    /// Percentage of populated cells.
    pub density: f64,
    pub likes_per_user: DegreeStats,
    pub users_per_like: DegreeStats,
}

pub fn stats(matrix: &UserLikeMatrix) -> Result<MatrixStats> {
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::Parameter("stats: empty matrix".into()));
    }
    let row_degrees: Vec<usize> = (0..matrix.n_rows()).map(|i| matrix.row_degree(i)).collect();
    let col_degrees: Vec<usize> = (0..matrix.n_cols()).map(|j| matrix.col_degree(j)).collect();
    Ok(MatrixStats {
        n_users: matrix.n_rows(),
        n_likes: matrix.n_cols(),
        n_pairs: matrix.n_pairs(),
        density: matrix.density_percent(),
        likes_per_user: degree_stats(row_degrees),
        users_per_like: degree_stats(col_degrees),
    })
}

/// Human-readable statistics table for one or two matrices (raw + trimmed).
pub fn format_stats_text(columns: &[(&str, &MatrixStats)]) -> String {
    let mut out = String::new();
    let label_w = 22;
    out.push_str(&format!("{:<label_w$}", "Descriptive statistics"));
    for (name, _) in columns {
        out.push_str(&format!("{name:>16}"));
    }
    out.push('\n');
    let mut push_row = |label: &str, f: &dyn Fn(&MatrixStats) -> String| {
        out.push_str(&format!("{label:<label_w$}"));
        for (_, s) in columns {
            out.push_str(&format!("{:>16}", f(s)));
        }
        out.push('\n');
    };
    push_row("# of users", &|s| s.n_users.to_string());
    push_row("# of unique likes", &|s| s.n_likes.to_string());
    push_row("# of user-like pairs", &|s| s.n_pairs.to_string());
    push_row("Matrix density", &|s| format!("{:.3}%", s.density));
    push_row("Likes per user:", &|_| String::new());
    push_row("  mean", &|s| format!("{:.2}", s.likes_per_user.mean));
    push_row("  median", &|s| format!("{}", s.likes_per_user.median));
    push_row("  minimum", &|s| s.likes_per_user.min.to_string());
    push_row("  maximum", &|s| s.likes_per_user.max.to_string());
    push_row("Users per like:", &|_| String::new());
    push_row("  mean", &|s| format!("{:.2}", s.users_per_like.mean));
    push_row("  median", &|s| format!("{}", s.users_per_like.median));
    push_row("  minimum", &|s| s.users_per_like.min.to_string());
    push_row("  maximum", &|s| s.users_per_like.max.to_string());
    out
}

/// CSV form of the same table: one row per statistic, one column per matrix.
pub fn format_stats_csv(columns: &[(&str, &MatrixStats)]) -> String {
    let mut out = String::from("statistic");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut push_row = |label: &str, f: &dyn Fn(&MatrixStats) -> String| {
        out.push_str(label);
        for (_, s) in columns {
            out.push(',');
            out.push_str(&f(s));
        }
        out.push('\n');
    };
    push_row("n_users", &|s| s.n_users.to_string());
    push_row("n_likes", &|s| s.n_likes.to_string());
    push_row("n_pairs", &|s| s.n_pairs.to_string());
    push_row("density_percent", &|s| format!("{}", s.density));
    push_row("likes_per_user_mean", &|s| format!("{}", s.likes_per_user.mean));
    push_row("likes_per_user_median", &|s| format!("{}", s.likes_per_user.median));
    push_row("likes_per_user_min", &|s| s.likes_per_user.min.to_string());
    push_row("likes_per_user_max", &|s| s.likes_per_user.max.to_string());
    push_row("users_per_like_mean", &|s| format!("{}", s.users_per_like.mean));
    push_row("users_per_like_median", &|s| format!("{}", s.users_per_like.median));
    push_row("users_per_like_min", &|s| s.users_per_like.min.to_string());
    push_row("users_per_like_max", &|s| s.users_per_like.max.to_string());
    out
}
