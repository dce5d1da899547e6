#![allow(dead_code)]

//! Straight-line reference implementation over a dense rating table, used to
//! cross-check the sparse pipeline. Shares no code with the library beyond
//! the id newtypes.

use num_rational::Ratio;
use rand::Rng;
use recsys_ir::dataset::{RatingRange, RatingTriplet};
use recsys_ir::{ItemId, RatingMatrix, UserId};

/// Dense table `d[item][user]`, one-based, 0 meaning "not rated".
#[derive(Debug, Clone)]
pub struct Dense {
    pub users: usize,
    pub items: usize,
    pub d: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    ColdStart,
    /// Ranked users, most similar first, and the exact prediction.
    Ranked {
        order: Vec<u32>,
        prediction: Ratio<u64>,
    },
    /// Nobody ranked; prediction is the global mean.
    Empty {
        global_mean: Ratio<u64>,
    },
}

impl Dense {
    pub fn random<R: Rng>(rng: &mut R, max_users: usize, max_items: usize) -> Self {
        let users = rng.gen_range(2..=max_users);
        let items = rng.gen_range(1..=max_items);
        let density: f64 = rng.gen_range(0.05..=1.0);
        let mut d = vec![vec![0u8; users + 1]; items + 1];
        for row in d.iter_mut().skip(1) {
            for cell in row.iter_mut().skip(1) {
                if rng.gen_bool(density) {
                    *cell = rng.gen_range(1..=5);
                }
            }
        }
        Dense { users, items, d }
    }

    pub fn to_matrix(&self) -> RatingMatrix {
        let mut triplets = Vec::new();
        for i in 1..=self.items {
            for j in 1..=self.users {
                if self.d[i][j] != 0 {
                    triplets.push(RatingTriplet {
                        user: UserId(j as u32),
                        item: ItemId(i as u32),
                        rating: self.d[i][j],
                    });
                }
            }
        }
        RatingMatrix::from_triplets(
            &triplets,
            RatingRange::default(),
            Some((self.users, self.items)),
        )
        .unwrap()
    }

    /// Predicts user `k`'s rating of item `h`, step by step.
    #[allow(clippy::needless_range_loop)]
    pub fn predict(&self, k: usize, h: usize) -> OracleOutcome {
        let (n, m) = (self.users, self.items);
        let d = &self.d;
        if (1..=m).all(|i| d[i][k] == 0) {
            return OracleOutcome::ColdStart;
        }

        // document weights and co-rater counts; the target item is skipped
        let mut wu = vec![vec![0.0f64; n + 1]; m + 1];
        let mut n_i = vec![0usize; m + 1];
        for i in 1..=m {
            if i == h {
                continue;
            }
            for j in 1..=n {
                if j == k {
                    continue;
                }
                if u32::from(d[i][j]) * u32::from(d[i][k]) == 0 {
                    wu[i][j] = 0.0;
                } else {
                    wu[i][j] =
                        1.0 - f64::from((i32::from(d[i][j]) - i32::from(d[i][k])).abs()) / 4.0;
                    n_i[i] += 1;
                }
            }
        }
        // query weights
        for i in 1..=m {
            wu[i][k] = if n_i[i] == 0 || d[i][k] == 0 {
                0.0
            } else {
                (n as f64 / n_i[i] as f64).log2()
            };
        }

        // collection: users other than k who rated h
        let mut scored: Vec<(i64, u32)> = Vec::new();
        for j in 1..=n {
            if j == k || d[h][j] == 0 {
                continue;
            }
            let mut dot = 0.0;
            let mut qq = 0.0;
            let mut dd = 0.0;
            for i in 1..=m {
                dot += wu[i][k] * wu[i][j];
                qq += wu[i][k] * wu[i][k];
                dd += wu[i][j] * wu[i][j];
            }
            let cos = if qq == 0.0 || dd == 0.0 {
                0.0
            } else {
                (dot / (qq.sqrt() * dd.sqrt())).clamp(0.0, 1.0)
            };
            let key = (cos * 1e12).round() as i64;
            if key > 0 {
                scored.push((key, j as u32));
            }
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        if scored.is_empty() {
            let mut sum = 0u64;
            let mut count = 0u64;
            for row in d.iter().skip(1) {
                for &r in row.iter().skip(1) {
                    if r != 0 {
                        sum += u64::from(r);
                        count += 1;
                    }
                }
            }
            return OracleOutcome::Empty {
                global_mean: Ratio::new(sum, count),
            };
        }

        let len = scored.len() as u64;
        let mut numerator = Ratio::from_integer(0u64);
        for (rank, &(_, j)) in scored.iter().enumerate() {
            let weight = Ratio::new(len - rank as u64, len);
            numerator += weight * u64::from(d[h][j as usize]);
        }
        let lambda = Ratio::new(len + 1, 2);
        OracleOutcome::Ranked {
            order: scored.iter().map(|&(_, j)| j).collect(),
            prediction: numerator / lambda,
        }
    }
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn round_half_up(r: Ratio<u64>) -> u64 {
    (r + Ratio::new(1, 2)).floor().to_integer()
}

/// Location of the MovieLens 100K files: `$ML100K_DIR`, else `data/ml-100k`
/// at the workspace root.
pub fn movielens_dir() -> std::path::PathBuf {
    std::env::var_os("ML100K_DIR")
        .map(Into::into)
        .unwrap_or_else(|| {
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k")
        })
}
