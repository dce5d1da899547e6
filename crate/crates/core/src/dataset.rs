//! Sparse user/item rating storage and MovieLens-style file parsing.
//!
//! Ratings are read from tab-separated `user<TAB>item<TAB>rating<TAB>timestamp`
//! lines. The timestamp column is validated for presence and then dropped.
//! Unrated cells are simply absent; there is no stored zero.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

/// Integer rating value.
pub type Rating = u8;

/// One-based user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

/// One-based item identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: rating {rating} outside [{min}, {max}]")]
    OutOfRange {
        line: usize,
        rating: i64,
        min: Rating,
        max: Rating,
    },
    #[error("line {line}: duplicate rating for user {user}, item {item}")]
    Duplicate {
        line: usize,
        user: UserId,
        item: ItemId,
    },
    #[error("user {user}, item {item} appears in both train and test")]
    Overlap { user: UserId, item: ItemId },
    #[error("invalid rating range [{min}, {max}]")]
    InvalidRange { min: Rating, max: Rating },
    #[error("dimensions {users}x{items} too small for observed ids (max user {max_user}, max item {max_item})")]
    DimensionsTooSmall {
        users: usize,
        items: usize,
        max_user: u32,
        max_item: u32,
    },
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Inclusive bounds of the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingRange {
    pub min: Rating,
    pub max: Rating,
}

impl RatingRange {
    pub fn new(min: Rating, max: Rating) -> Result<Self, DatasetError> {
        if min >= max {
            return Err(DatasetError::InvalidRange { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, rating: Rating) -> bool {
        self.min <= rating && rating <= self.max
    }

    /// Distance between the extremes of the scale.
    pub fn span(&self) -> u32 {
        u32::from(self.max - self.min)
    }
}

impl Default for RatingRange {
    fn default() -> Self {
        Self { min: 1, max: 5 }
    }
}

/// A single parsed rating line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingTriplet {
    pub user: UserId,
    pub item: ItemId,
    pub rating: Rating,
}

/// Immutable sparse rating matrix, indexed both by user and by item.
///
/// Row lists are kept sorted by id, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    num_users: usize,
    num_items: usize,
    range: RatingRange,
    by_user: Vec<Vec<(ItemId, Rating)>>,
    by_item: Vec<Vec<(UserId, Rating)>>,
    num_entries: usize,
    rating_sum: u64,
}

impl RatingMatrix {
    /// Builds a matrix from already validated triplets.
    ///
    /// Dimensions default to the largest observed ids; `dims` may enlarge them.
    pub fn from_triplets(
        triplets: &[RatingTriplet],
        range: RatingRange,
        dims: Option<(usize, usize)>,
    ) -> Result<Self, DatasetError> {
        let max_user = triplets.iter().map(|t| t.user.0).max().unwrap_or(0);
        let max_item = triplets.iter().map(|t| t.item.0).max().unwrap_or(0);
        let (num_users, num_items) = match dims {
            Some((users, items)) => {
                if users < max_user as usize || items < max_item as usize {
                    return Err(DatasetError::DimensionsTooSmall {
                        users,
                        items,
                        max_user,
                        max_item,
                    });
                }
                (users, items)
            }
            None => (max_user as usize, max_item as usize),
        };

        let mut by_user = vec![Vec::new(); num_users];
        let mut by_item = vec![Vec::new(); num_items];
        let mut seen = HashSet::with_capacity(triplets.len());
        let mut rating_sum = 0u64;
        for (idx, t) in triplets.iter().enumerate() {
            if t.user.0 == 0 || t.item.0 == 0 {
                return Err(DatasetError::Malformed {
                    line: idx + 1,
                    reason: "ids are one-based".to_string(),
                });
            }
            if !range.contains(t.rating) {
                return Err(DatasetError::OutOfRange {
                    line: idx + 1,
                    rating: i64::from(t.rating),
                    min: range.min,
                    max: range.max,
                });
            }
            if !seen.insert((t.user, t.item)) {
                return Err(DatasetError::Duplicate {
                    line: idx + 1,
                    user: t.user,
                    item: t.item,
                });
            }
            by_user[t.user.0 as usize - 1].push((t.item, t.rating));
            by_item[t.item.0 as usize - 1].push((t.user, t.rating));
            rating_sum += u64::from(t.rating);
        }
        for row in &mut by_user {
            row.sort_unstable_by_key(|&(item, _)| item);
        }
        for row in &mut by_item {
            row.sort_unstable_by_key(|&(user, _)| user);
        }

        Ok(Self {
            num_users,
            num_items,
            range,
            by_user,
            by_item,
            num_entries: triplets.len(),
            rating_sum,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_entries(&self) -> usize {
        self.num_entries
    }

    pub fn range(&self) -> RatingRange {
        self.range
    }

    pub fn rating_sum(&self) -> u64 {
        self.rating_sum
    }

    pub fn has_user(&self, user: UserId) -> bool {
        user.0 >= 1 && (user.0 as usize) <= self.num_users
    }

    pub fn has_item(&self, item: ItemId) -> bool {
        item.0 >= 1 && (item.0 as usize) <= self.num_items
    }

    /// Items rated by `user`, ascending by item id. Empty for unknown users.
    pub fn user_ratings(&self, user: UserId) -> &[(ItemId, Rating)] {
        if self.has_user(user) {
            &self.by_user[user.0 as usize - 1]
        } else {
            &[]
        }
    }

    /// Users who rated `item`, ascending by user id. Empty for unknown items.
    pub fn item_ratings(&self, item: ItemId) -> &[(UserId, Rating)] {
        if self.has_item(item) {
            &self.by_item[item.0 as usize - 1]
        } else {
            &[]
        }
    }

    pub fn get(&self, user: UserId, item: ItemId) -> Option<Rating> {
        let row = self.user_ratings(user);
        row.binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|idx| row[idx].1)
    }

    /// All entries in (user, item) order.
    pub fn triplets(&self) -> impl Iterator<Item = RatingTriplet> + '_ {
        self.by_user.iter().enumerate().flat_map(|(u, row)| {
            row.iter().map(move |&(item, rating)| RatingTriplet {
                user: UserId(u as u32 + 1),
                item,
                rating,
            })
        })
    }

    /// Writes the entries back as tab-separated lines with a zero timestamp.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for t in self.triplets() {
            writeln!(out, "{}\t{}\t{}\t0", t.user, t.item, t.rating)?;
        }
        Ok(())
    }
}

/// Parses rating lines, checking field shape and the rating range.
///
/// Blank lines are skipped. Line numbers in errors are one-based.
pub fn parse_triplets<R: BufRead>(
    source: R,
    range: RatingRange,
) -> Result<Vec<(usize, RatingTriplet)>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(DatasetError::Malformed {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let int = |name: &str, raw: &str| -> Result<i64, DatasetError> {
            raw.trim()
                .parse::<i64>()
                .map_err(|_| DatasetError::Malformed {
                    line: line_no,
                    reason: format!("{name} is not an integer: {raw:?}"),
                })
        };
        let id = |name: &str, raw: &str| -> Result<u32, DatasetError> {
            let value = int(name, raw)?;
            u32::try_from(value)
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| DatasetError::Malformed {
                    line: line_no,
                    reason: format!("{name} must be a positive id, found {value}"),
                })
        };
        let user = id("user id", fields[0])?;
        let item = id("item id", fields[1])?;
        let rating = int("rating", fields[2])?;
        int("timestamp", fields[3])?;

        if rating < i64::from(range.min) || rating > i64::from(range.max) {
            return Err(DatasetError::OutOfRange {
                line: line_no,
                rating,
                min: range.min,
                max: range.max,
            });
        }
        out.push((
            line_no,
            RatingTriplet {
                user: UserId(user),
                item: ItemId(item),
                rating: rating as Rating,
            },
        ));
    }
    Ok(out)
}

fn check_duplicates(lines: &[(usize, RatingTriplet)]) -> Result<(), DatasetError> {
    let mut seen = HashSet::with_capacity(lines.len());
    for &(line, t) in lines {
        if !seen.insert((t.user, t.item)) {
            return Err(DatasetError::Duplicate {
                line,
                user: t.user,
                item: t.item,
            });
        }
    }
    Ok(())
}

/// Parses a rating file into a matrix.
pub fn parse_ratings<R: BufRead>(
    source: R,
    range: RatingRange,
    dims: Option<(usize, usize)>,
) -> Result<RatingMatrix, DatasetError> {
    let lines = parse_triplets(source, range)?;
    check_duplicates(&lines)?;
    let triplets: Vec<RatingTriplet> = lines.into_iter().map(|(_, t)| t).collect();
    RatingMatrix::from_triplets(&triplets, range, dims)
}

/// A training matrix together with its held-out test ratings.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub name: String,
    pub train: RatingMatrix,
    pub test: Vec<RatingTriplet>,
}

/// Parses a train/test pair and rejects any (user, item) present in both.
///
/// Without `dims`, the training matrix is sized to cover the ids of both
/// files, so every test user and item has a slot.
pub fn load_split<R1: BufRead, R2: BufRead>(
    name: impl Into<String>,
    train_source: R1,
    test_source: R2,
    range: RatingRange,
    dims: Option<(usize, usize)>,
) -> Result<SplitPair, DatasetError> {
    let train_lines = parse_triplets(train_source, range)?;
    check_duplicates(&train_lines)?;
    let test_lines = parse_triplets(test_source, range)?;
    check_duplicates(&test_lines)?;

    let train: Vec<RatingTriplet> = train_lines.into_iter().map(|(_, t)| t).collect();
    let test: Vec<RatingTriplet> = test_lines.into_iter().map(|(_, t)| t).collect();

    let train_pairs: HashSet<(UserId, ItemId)> = train.iter().map(|t| (t.user, t.item)).collect();
    if let Some(t) = test
        .iter()
        .find(|t| train_pairs.contains(&(t.user, t.item)))
    {
        return Err(DatasetError::Overlap {
            user: t.user,
            item: t.item,
        });
    }

    let dims = dims.or_else(|| {
        let users = train
            .iter()
            .chain(&test)
            .map(|t| t.user.0)
            .max()
            .unwrap_or(0);
        let items = train
            .iter()
            .chain(&test)
            .map(|t| t.item.0)
            .max()
            .unwrap_or(0);
        Some((users as usize, items as usize))
    });
    let train = RatingMatrix::from_triplets(&train, range, dims)?;
    Ok(SplitPair {
        name: name.into(),
        train,
        test,
    })
}

fn open(path: &Path) -> Result<io::BufReader<std::fs::File>, DatasetError> {
    std::fs::File::open(path)
        .map(io::BufReader::new)
        .map_err(|source| DatasetError::File {
            path: path.display().to_string(),
            source,
        })
}

/// Reads a rating file from disk.
pub fn read_ratings_file(
    path: &Path,
    range: RatingRange,
    dims: Option<(usize, usize)>,
) -> Result<RatingMatrix, DatasetError> {
    parse_ratings(open(path)?, range, dims)
}

/// Reads a split from disk. The split is named after the training file stem
/// (`u1.base` becomes `u1`).
pub fn read_split_files(
    train_path: &Path,
    test_path: &Path,
    range: RatingRange,
    dims: Option<(usize, usize)>,
) -> Result<SplitPair, DatasetError> {
    let name = train_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| train_path.display().to_string());
    load_split(name, open(train_path)?, open(test_path)?, range, dims)
}

/// Summary counts of a rating matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    pub users: usize,
    pub items: usize,
    pub entries: usize,
    pub density: f64,
    /// Number of raters per item, indexed by `item id - 1`.
    pub item_rater_counts: Vec<usize>,
}

pub fn stats(matrix: &RatingMatrix) -> MatrixStats {
    let cells = matrix.num_users() * matrix.num_items();
    let density = if cells == 0 {
        0.0
    } else {
        matrix.num_entries() as f64 / cells as f64
    };
    MatrixStats {
        users: matrix.num_users(),
        items: matrix.num_items(),
        entries: matrix.num_entries(),
        density,
        item_rater_counts: matrix.by_item.iter().map(Vec::len).collect(),
    }
}
