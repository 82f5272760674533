//! Sparse bipartite user/object rating store.
//!
//! Ratings are kept in compressed sparse form twice: once grouped by user
//! (the objects `O_i` a user rated) and once grouped by object (the raters
//! `U_α` of an object). Both views are materialized at construction and the
//! dataset is immutable afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Whether ratings are real-valued or restricted to the integers `1..=R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingMode {
    Continuous,
    Discrete,
}

impl RatingMode {
    pub const ALL: [RatingMode; 2] = [RatingMode::Continuous, RatingMode::Discrete];

    pub fn name(self) -> &'static str {
        match self {
            RatingMode::Continuous => "continuous",
            RatingMode::Discrete => "discrete",
        }
    }
}

impl std::fmt::Display for RatingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RatingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(RatingMode::Continuous),
            "discrete" => Ok(RatingMode::Discrete),
            other => Err(invalid("mode", format!("unknown rating mode `{other}`"))),
        }
    }
}

/// Rating scale `[1, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingScale {
    r_max: u32,
    mode: RatingMode,
}

impl RatingScale {
    pub fn new(r_max: u32, mode: RatingMode) -> Result<Self> {
        if r_max < 2 {
            return Err(invalid("r_max", format!("must be at least 2, got {r_max}")));
        }
        Ok(Self { r_max, mode })
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn mode(&self) -> RatingMode {
        self.mode
    }

    /// Width `Δr = R - 1` of the rating range.
    pub fn width<T: Scalar>(&self) -> T {
        T::of(f64::from(self.r_max - 1))
    }

    pub fn upper<T: Scalar>(&self) -> T {
        T::of(f64::from(self.r_max))
    }

    pub fn with_mode(self, mode: RatingMode) -> Self {
        Self { mode, ..self }
    }
}

/// True object qualities `Q_α` and per-user error levels `σ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth<T> {
    pub true_quality: Vec<T>,
    pub user_error: Vec<T>,
}

impl<T: Scalar> GroundTruth<T> {
    pub fn num_users(&self) -> usize {
        self.user_error.len()
    }

    pub fn num_objects(&self) -> usize {
        self.true_quality.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset<T> {
    num_users: usize,
    num_objects: usize,
    scale: RatingScale,
    // grouped by user, objects ascending within a user
    user_offsets: Vec<usize>,
    user_objects: Vec<usize>,
    user_values: Vec<T>,
    // grouped by object, users ascending within an object
    object_offsets: Vec<usize>,
    object_users: Vec<usize>,
    object_values: Vec<T>,
}

impl<T: Scalar> RatingDataset<T> {
    /// Validates the triples and builds both adjacency views.
    pub fn new<I>(triples: I, num_users: usize, num_objects: usize, scale: RatingScale) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let upper = scale.upper::<T>();
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (user, object, value) in triples {
            if user >= num_users || object >= num_objects {
                return Err(Error::IndexOutOfRange {
                    user,
                    object,
                    num_users,
                    num_objects,
                });
            }
            if !(value >= T::one() && value <= upper) {
                return Err(Error::RatingOutOfBounds {
                    user,
                    object,
                    value: value.as_f64(),
                    r_max: scale.r_max,
                });
            }
            if scale.mode == RatingMode::Discrete && value.fract() != T::zero() {
                return Err(Error::NonIntegerRatingInDiscreteMode {
                    user,
                    object,
                    value: value.as_f64(),
                });
            }
            entries.push((user, object, value));
        }
        entries.sort_by_key(|&(u, o, _)| (u, o));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicatePair {
                user: w[0].0,
                object: w[0].1,
            });
        }

        let mut user_offsets = vec![0usize; num_users + 1];
        let mut object_offsets = vec![0usize; num_objects + 1];
        for &(u, o, _) in &entries {
            user_offsets[u + 1] += 1;
            object_offsets[o + 1] += 1;
        }
        for i in 0..num_users {
            user_offsets[i + 1] += user_offsets[i];
        }
        for a in 0..num_objects {
            object_offsets[a + 1] += object_offsets[a];
        }

        let user_objects = entries.iter().map(|e| e.1).collect();
        let user_values = entries.iter().map(|e| e.2).collect();

        // entries are sorted by user, so each object column fills in ascending user order
        let n = entries.len();
        let mut cursor = object_offsets[..num_objects].to_vec();
        let mut object_users = vec![0usize; n];
        let mut object_values = vec![T::zero(); n];
        for &(u, o, v) in &entries {
            let slot = cursor[o];
            object_users[slot] = u;
            object_values[slot] = v;
            cursor[o] += 1;
        }

        Ok(Self {
            num_users,
            num_objects,
            scale,
            user_offsets,
            user_objects,
            user_values,
            object_offsets,
            object_users,
            object_values,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_ratings(&self) -> usize {
        self.user_values.len()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn is_empty(&self) -> bool {
        self.user_values.is_empty()
    }

    /// Objects rated by `user` and the corresponding ratings.
    pub fn user_row(&self, user: usize) -> (&[usize], &[T]) {
        let span = self.user_offsets[user]..self.user_offsets[user + 1];
        (&self.user_objects[span.clone()], &self.user_values[span])
    }

    /// Users who rated `object` and the corresponding ratings.
    pub fn object_column(&self, object: usize) -> (&[usize], &[T]) {
        let span = self.object_offsets[object]..self.object_offsets[object + 1];
        (&self.object_users[span.clone()], &self.object_values[span])
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_offsets[user + 1] - self.user_offsets[user]
    }

    pub fn object_degree(&self, object: usize) -> usize {
        self.object_offsets[object + 1] - self.object_offsets[object]
    }

    /// All triples in `(user, object)` order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.num_users).flat_map(move |u| {
            let (objects, values) = self.user_row(u);
            objects.iter().zip(values).map(move |(&o, &v)| (u, o, v))
        })
    }

    /// Drops users and objects without ratings and compacts the indices.
    pub fn prune(&self) -> Result<(Self, IndexMaps)> {
        let users: Vec<usize> = (0..self.num_users).filter(|&u| self.user_degree(u) > 0).collect();
        let objects: Vec<usize> = (0..self.num_objects).filter(|&o| self.object_degree(o) > 0).collect();
        if users.is_empty() || objects.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let maps = IndexMaps::new(users, self.num_users, objects, self.num_objects);
        let triples = self.triples().map(|(u, o, v)| {
            (
                maps.user_old_to_new[u].expect("rated user survives pruning"),
                maps.object_old_to_new[o].expect("rated object survives pruning"),
                v,
            )
        });
        let pruned = Self::new(triples, maps.num_users(), maps.num_objects(), self.scale)?;
        Ok((pruned, maps))
    }
}

/// Old/new index correspondence produced by pruning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMaps {
    pub user_new_to_old: Vec<usize>,
    pub user_old_to_new: Vec<Option<usize>>,
    pub object_new_to_old: Vec<usize>,
    pub object_old_to_new: Vec<Option<usize>>,
}

impl IndexMaps {
    fn new(users: Vec<usize>, old_users: usize, objects: Vec<usize>, old_objects: usize) -> Self {
        let mut user_old_to_new = vec![None; old_users];
        for (new, &old) in users.iter().enumerate() {
            user_old_to_new[old] = Some(new);
        }
        let mut object_old_to_new = vec![None; old_objects];
        for (new, &old) in objects.iter().enumerate() {
            object_old_to_new[old] = Some(new);
        }
        Self {
            user_new_to_old: users,
            user_old_to_new,
            object_new_to_old: objects,
            object_old_to_new,
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_new_to_old.len()
    }

    pub fn num_objects(&self) -> usize {
        self.object_new_to_old.len()
    }

    pub fn is_identity(&self) -> bool {
        self.user_new_to_old.iter().enumerate().all(|(n, &o)| n == o)
            && self.user_old_to_new.len() == self.user_new_to_old.len()
            && self.object_new_to_old.iter().enumerate().all(|(n, &o)| n == o)
            && self.object_old_to_new.len() == self.object_new_to_old.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pruned<T> {
    pub dataset: RatingDataset<T>,
    pub truth: GroundTruth<T>,
    pub maps: IndexMaps,
}

/// Removes isolated users and objects from a dataset together with its ground truth.
pub fn prune_isolated<T: Scalar>(dataset: &RatingDataset<T>, truth: &GroundTruth<T>) -> Result<Pruned<T>> {
    if truth.num_users() != dataset.num_users() {
        return Err(Error::LengthMismatch {
            expected: dataset.num_users(),
            got: truth.num_users(),
        });
    }
    if truth.num_objects() != dataset.num_objects() {
        return Err(Error::LengthMismatch {
            expected: dataset.num_objects(),
            got: truth.num_objects(),
        });
    }
    let (pruned, maps) = dataset.prune()?;
    let truth = GroundTruth {
        true_quality: maps.object_new_to_old.iter().map(|&o| truth.true_quality[o]).collect(),
        user_error: maps.user_new_to_old.iter().map(|&u| truth.user_error[u]).collect(),
    };
    Ok(Pruned {
        dataset: pruned,
        truth,
        maps,
    })
}
