use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bath::BathConfiguration;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sorted set of bath-spin indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cluster(Vec<usize>);

impl Cluster {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() || indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "cluster indices must be distinct and non-empty: {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Proper non-empty subsets, in canonical order.
    pub fn proper_subsets(&self) -> Vec<Cluster> {
        let n = self.0.len();
        let mut out: Vec<Cluster> = (1..(1usize << n) - 1)
            .map(|mask| {
                Cluster(
                    (0..n)
                        .filter(|b| mask >> b & 1 == 1)
                        .map(|b| self.0[b])
                        .collect(),
                )
            })
            .collect();
        out.sort_by(canonical);
        out
    }
}

/// Size first, then lexicographic.
pub fn canonical(a: &Cluster, b: &Cluster) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0))
}

/// Dipolar connectivity: an edge joins `i` and `j` when `|r_ij| ≤ pair_cutoff`
/// and `|D_ij| ≥ dipolar_floor`.
#[derive(Clone, Debug)]
pub struct SpinGraph<T> {
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SpinGraph<T> {
    pub fn build(bath: &BathConfiguration<T>, pair_cutoff: T, dipolar_floor: T) -> Result<Self> {
        let n = bath.len();
        let mut adjacency = vec![Vec::new(); n];
        let cell = pair_cutoff.as_f64();
        let key = |r: &[T; 3]| -> [i64; 3] {
            [0, 1, 2].map(|k| (r[k].as_f64() / cell).floor() as i64)
        };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, r) in bath.positions.iter().enumerate() {
            cells.entry(key(r)).or_default().push(i);
        }
        for i in 0..n {
            let c = key(&bath.positions[i]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(members) = cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &j in members {
                            if j == i || bath.distance(i, j) > pair_cutoff {
                                continue;
                            }
                            let d = bath.dipolar(i, j)?;
                            if d.abs() >= dipolar_floor {
                                adjacency[i].push((j, d));
                            }
                        }
                    }
                }
            }
            adjacency[i].sort_by_key(|&(j, _)| j);
        }
        Ok(Self { adjacency })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbours(&self, i: usize) -> &[(usize, T)] {
        &self.adjacency[i]
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<T> {
        let row = &self.adjacency[i];
        row.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| row[p].1)
    }

    /// `(i, j, D_ij)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, d)| (i, j, d))
        })
    }

    /// All connected subsets of size ≤ `max_order`, in canonical order.
    pub fn clusters(&self, max_order: usize) -> Vec<Cluster> {
        let mut out: Vec<Cluster> = (0..self.len()).map(|i| Cluster(vec![i])).collect();
        if max_order >= 2 {
            out.extend(self.edges().map(|(i, j, _)| Cluster(vec![i, j])));
        }
        if max_order >= 3 {
            let mut triples = BTreeSet::new();
            for (i, j, _) in self.edges() {
                for &(k, _) in self.neighbours(i).iter().chain(self.neighbours(j)) {
                    if k != i && k != j {
                        let mut t = [i, j, k];
                        t.sort_unstable();
                        triples.insert(t);
                    }
                }
            }
            out.extend(triples.into_iter().map(|t| Cluster(t.to_vec())));
        }
        out
    }
}
