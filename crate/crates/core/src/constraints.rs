//! Order restrictions on the success probabilities.
//!
//! A [`ConstraintSet`] is a set of strict pairwise relations `θ_i < θ_j`.
//! The restricted region is the intersection of those half-spaces; it is
//! non-empty exactly when the relation digraph is acyclic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    k: usize,
    relations: Vec<(usize, usize)>,
}

impl ConstraintSet {
    /// Builds and validates a constraint set over `k` parameters. Each pair
    /// `(i, j)` means `θ_i < θ_j`.
    pub fn new(k: usize, relations: Vec<(usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConstraint("dimension must be at least 1".into()));
        }
        for (n, &(i, j)) in relations.iter().enumerate() {
            if i >= k || j >= k {
                return Err(Error::InvalidConstraint(format!(
                    "relation ({i}, {j}) references an index outside 0..{k}"
                )));
            }
            if i == j {
                return Err(Error::InvalidConstraint(format!(
                    "relation ({i}, {i}) compares a parameter with itself"
                )));
            }
            if relations[..n].contains(&(i, j)) {
                return Err(Error::InvalidConstraint(format!("duplicate relation ({i}, {j})")));
            }
        }
        let cs = Self { k, relations };
        cs.validate()?;
        Ok(cs)
    }

    /// No restriction at all: the whole unit hypercube.
    pub fn unrestricted(k: usize) -> Result<Self> {
        Self::new(k, Vec::new())
    }

    /// The chain `θ_0 < θ_1 < … < θ_{k-1}`.
    pub fn full_order(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConstraint(format!(
                "a full order needs at least 2 parameters, got {k}"
            )));
        }
        Self::new(k, (0..k - 1).map(|i| (i, i + 1)).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn relations(&self) -> &[(usize, usize)] {
        &self.relations
    }

    /// `Ok` iff the relation digraph has no cycle; otherwise the error names
    /// one cycle as a list of indices.
    pub fn validate(&self) -> Result<()> {
        match find_cycle(self.k, &self.relations) {
            Some(cycle) => Err(Error::Cycle { cycle }),
            None => Ok(()),
        }
    }

    /// Indicator of the restricted region. Ties are outside the region.
    pub fn satisfies(&self, theta: &[f64]) -> Result<bool> {
        if theta.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: self.k,
                found: theta.len(),
            });
        }
        Ok(self.contains(theta))
    }

    /// Unchecked indicator for hot loops; `theta.len()` must equal `k`.
    #[inline]
    pub fn contains(&self, theta: &[f64]) -> bool {
        self.relations.iter().all(|&(i, j)| theta[i] < theta[j])
    }

    /// The same restriction with indices relabelled: index `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "permutation",
                expected: self.k,
                found: perm.len(),
            });
        }
        Self::new(
            self.k,
            self.relations.iter().map(|&(i, j)| (perm[i], perm[j])).collect(),
        )
    }
}

/// Depth-first search for a directed cycle. Returns the vertices of the first
/// cycle found, in edge order.
pub fn find_cycle(k: usize, relations: &[(usize, usize)]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let mut adj = vec![Vec::new(); k];
    for &(i, j) in relations {
        if i < k && j < k {
            adj[i].push(j);
        }
    }
    let mut mark = vec![Mark::New; k];
    let mut path = Vec::new();

    for root in 0..k {
        if mark[root] != Mark::New {
            continue;
        }
        // (vertex, next neighbour to visit)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        path.push(root);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*next) {
                *next += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        path.push(w);
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = path.iter().position(|&p| p == w).expect("active vertex is on the path");
                        return Some(path[start..].to_vec());
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                path.pop();
                stack.pop();
            }
        }
    }
    None
}

/// A point null hypothesis fixing every θ_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointNull {
    values: Vec<f64>,
}

impl PointNull {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConstraint("point null needs at least one value".into()));
        }
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Domain { value: bad });
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
