//! Cluster-correlation expansion of the central-spin coherence `L(t)` and of
//! the Overhauser-field correlation `C(t)`.
//!
//! The bath evolves under `H^(±) = P± β^z + H_bath` in the two qubit branches
//! and under `H_e = (s/2) β^z + H_bath` for correlations, with
//! `H_bath = Σ D_ij (I⁺_i I⁻_j + h.c.) − 4 D_ij I^z_i I^z_j`.

mod cluster;
mod system;

use std::collections::HashMap;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

pub use cluster::{canonical, Cluster, SpinGraph};
pub use system::{ClusterSystem, MAX_CLUSTER};

use crate::bath::BathConfiguration;
use crate::curve::{validate_grid, CoherenceCurve, CorrelationCurve, CurveMeta};
use crate::error::{Error, Result};
use crate::levels::TransitionPair;
use crate::noise::LineSpectrum;
use crate::pulse::PulseSequence;
use crate::scalar::Real;
use crate::seed;

/// Below this magnitude a sub-cluster factor is treated as a breakdown.
pub const DIVISION_FLOOR: f64 = 1e-12;
/// Default allowed overshoot of the assembled `|L|` above 1.
pub const UNIT_DISK_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CceOptions<T> {
    pub max_order: usize,
    /// m
    pub pair_cutoff: T,
    /// rad/s
    pub dipolar_floor: T,
    pub mean_field: bool,
    /// s, strictly increasing from 0
    pub time_grid: Vec<T>,
    /// Uniform nuclear Larmor term `−ω Σ I^z`, rad/s. Drops out of every observable.
    pub bath_zeeman: T,
    /// An assembled `|L| > 1 + unit_disk_tolerance` is reported as an error.
    /// Echo sequences at order ≤ 2 stay inside the unit disk exactly; triple
    /// corrections and Ramsey singletons can push the product above 1.
    pub unit_disk_tolerance: T,
}

impl<T: Real> CceOptions<T> {
    pub fn new(time_grid: Vec<T>) -> Self {
        Self {
            max_order: 2,
            pair_cutoff: T::lit(0.8e-9),
            dipolar_floor: T::zero(),
            mean_field: true,
            time_grid,
            bath_zeeman: T::zero(),
            unit_disk_tolerance: T::lit(UNIT_DISK_SLACK),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_CLUSTER).contains(&self.max_order) {
            return Err(Error::InvalidParameter(format!(
                "max_order must be 1, 2 or 3, got {}",
                self.max_order
            )));
        }
        if !(self.pair_cutoff > T::zero() && self.pair_cutoff.is_finite()) {
            return Err(Error::InvalidParameter("pair_cutoff must be positive".into()));
        }
        if !(self.dipolar_floor >= T::zero()) {
            return Err(Error::InvalidParameter("dipolar_floor must be non-negative".into()));
        }
        if !(self.unit_disk_tolerance >= T::zero()) {
            return Err(Error::InvalidParameter("unit_disk_tolerance must be non-negative".into()));
        }
        validate_grid(&self.time_grid, true)
    }
}

/// Graph, cluster list and frozen mean-field states for one bath.
pub struct CceContext<'a, T> {
    bath: &'a BathConfiguration<T>,
    options: CceOptions<T>,
    graph: SpinGraph<T>,
    clusters: Vec<Cluster>,
    index: HashMap<Cluster, usize>,
    frozen: Option<Vec<T>>,
}

impl<'a, T: Real> CceContext<'a, T> {
    pub fn new(bath: &'a BathConfiguration<T>, options: CceOptions<T>) -> Result<Self> {
        options.validate()?;
        if bath.is_empty() {
            return Err(Error::InvalidParameter("bath has no spins".into()));
        }
        let graph = SpinGraph::build(bath, options.pair_cutoff, options.dipolar_floor)?;
        let clusters = graph.clusters(options.max_order);
        let index = clusters
            .iter()
            .enumerate()
            .map(|(k, c)| (c.clone(), k))
            .collect();
        let frozen = options.mean_field.then(|| {
            let mut rng = seed::rng(seed::child_seed(bath.seed, seed::STREAM_MEAN_FIELD, 0));
            (0..bath.len())
                .map(|_| if rng.gen::<bool>() { T::lit(0.5) } else { T::lit(-0.5) })
                .collect()
        });
        Ok(Self {
            bath,
            options,
            graph,
            clusters,
            index,
            frozen,
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn graph(&self) -> &SpinGraph<T> {
        &self.graph
    }

    pub fn options(&self) -> &CceOptions<T> {
        &self.options
    }

    /// Frozen `m = ±1/2` of every bath spin, if the mean field is enabled.
    pub fn frozen_states(&self) -> Option<&[T]> {
        self.frozen.as_deref()
    }

    pub fn system(&self, cluster: &Cluster) -> Result<ClusterSystem<T>> {
        let ids = cluster.indices();
        if ids.len() > MAX_CLUSTER {
            return Err(Error::ClusterTooLarge {
                size: ids.len(),
                max: MAX_CLUSTER,
            });
        }
        let hyperfine = ids.iter().map(|&i| self.bath.hyperfine[i]).collect();
        let detuning = ids
            .iter()
            .map(|&i| {
                let mut h = -self.options.bath_zeeman;
                if let Some(m) = &self.frozen {
                    for &(k, d) in self.graph.neighbours(i) {
                        if !cluster.contains(k) {
                            h -= T::lit(4.0) * d * m[k];
                        }
                    }
                }
                h
            })
            .collect();
        let mut bonds = Vec::new();
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                if let Some(d) = self.graph.coupling(ids[a], ids[b]) {
                    bonds.push((a, b, d));
                }
            }
        }
        ClusterSystem::new(hyperfine, detuning, bonds)
    }

    /// Full (not connected) `L_C` on the option grid.
    pub fn cluster_coherence(
        &self,
        cluster: &Cluster,
        transition: &TransitionPair<T>,
        seq: &PulseSequence<T>,
    ) -> Result<Vec<Complex<T>>> {
        self.system(cluster)?
            .coherence(transition.p_plus, transition.p_minus, seq, &self.options.time_grid)
    }

    /// `L = Π_C L̃_C` with `L̃_C = L_C / Π_{C′⊂C} L̃_{C′}`.
    pub fn coherence(
        &self,
        transition: &TransitionPair<T>,
        seq: &PulseSequence<T>,
    ) -> Result<CoherenceCurve<T>> {
        let grid = &self.options.time_grid;
        let full: Vec<Vec<Complex<T>>> = self
            .clusters
            .par_iter()
            .map(|c| self.cluster_coherence(c, transition, seq))
            .collect::<Result<_>>()?;

        let floor = T::lit(DIVISION_FLOOR);
        let mut tilde: Vec<Vec<Complex<T>>> = Vec::with_capacity(full.len());
        let mut total = vec![Complex::new(T::one(), T::zero()); grid.len()];
        for (c, mut values) in self.clusters.iter().zip(full) {
            for sub in c.proper_subsets() {
                let Some(&k) = self.index.get(&sub) else {
                    continue;
                };
                for (t, v) in values.iter_mut().enumerate() {
                    let d = tilde[k][t];
                    if d.norm() < floor {
                        return Err(Error::StronglyCorrelated {
                            cluster: sub.indices().to_vec(),
                            magnitude: d.norm().as_f64(),
                            time: grid[t].as_f64(),
                        });
                    }
                    *v = *v / d;
                }
            }
            for (acc, v) in total.iter_mut().zip(&values) {
                *acc = *acc * *v;
            }
            tilde.push(values);
        }

        let slack = T::one() + self.options.unit_disk_tolerance;
        for (t, z) in grid.iter().zip(&total) {
            if z.norm() > slack {
                return Err(Error::UnphysicalCoherence {
                    magnitude: z.norm().as_f64(),
                    time: t.as_f64(),
                });
            }
        }
        Ok(CoherenceCurve {
            times: grid.clone(),
            values: total,
            meta: CurveMeta {
                model: "quantum".into(),
                transition: format!("{}<->{}", transition.plus_label, transition.minus_label),
                sequence: seq.label(),
                seed: self.bath.seed,
            },
        })
    }

    fn full_lines(&self, cluster: &Cluster, s: T) -> Result<LineSpectrum<T>> {
        self.system(cluster)?.correlation_lines(s * T::lit(0.5))
    }

    /// Connected contribution of `cluster` to `C(t)` as a line spectrum.
    pub fn connected_lines(&self, cluster: &Cluster, transition: &TransitionPair<T>) -> Result<LineSpectrum<T>> {
        let mut out = self.full_lines(cluster, transition.s)?;
        for sub in cluster.proper_subsets() {
            if self.index.contains_key(&sub) {
                out.accumulate(&self.connected_lines(&sub, transition)?, -T::one());
            }
        }
        Ok(out)
    }

    /// Connected part of `C(t)` for one cluster.
    pub fn cluster_correlation(&self, cluster: &Cluster, transition: &TransitionPair<T>, t: T) -> Result<T> {
        Ok(self.connected_lines(cluster, transition)?.value(t))
    }

    /// Sum of connected cluster contributions, as lines.
    pub fn correlation_lines(&self, transition: &TransitionPair<T>) -> Result<LineSpectrum<T>> {
        let s = transition.s;
        let full: Vec<LineSpectrum<T>> = self
            .clusters
            .par_iter()
            .map(|c| self.full_lines(c, s))
            .collect::<Result<_>>()?;
        // Σ_C conn(C) = Σ_C μ(C) full(C) with μ(C) = 1 − Σ_{C′ ⊋ C} μ(C′)
        let mut mu = vec![T::zero(); self.clusters.len()];
        for k in (0..self.clusters.len()).rev() {
            mu[k] += T::one();
            let m = mu[k];
            for sub in self.clusters[k].proper_subsets() {
                if let Some(&j) = self.index.get(&sub) {
                    mu[j] -= m;
                }
            }
        }
        let mut total = LineSpectrum::new();
        for (m, spec) in mu.iter().zip(&full) {
            if *m != T::zero() {
                total.accumulate(spec, *m);
            }
        }
        Ok(total)
    }

    pub fn correlation(&self, transition: &TransitionPair<T>) -> Result<CorrelationCurve<T>> {
        let lines = self.correlation_lines(transition)?;
        let grid = &self.options.time_grid;
        let values: Vec<T> = grid.iter().map(|&t| lines.value(t)).collect();
        CorrelationCurve::new(grid.clone(), values)
    }
}

pub fn enumerate_clusters<T: Real>(bath: &BathConfiguration<T>, options: &CceOptions<T>) -> Result<Vec<Cluster>> {
    Ok(CceContext::new(bath, options.clone())?.clusters)
}

/// `L_C(t_total)` for an isolated cluster: no mean field, no outside couplings.
pub fn cluster_coherence<T: Real>(
    cluster: &Cluster,
    bath: &BathConfiguration<T>,
    transition: &TransitionPair<T>,
    seq: &PulseSequence<T>,
    t_total: T,
) -> Result<Complex<T>> {
    let ids = cluster.indices();
    let bonds = bonds_within(bath, ids)?;
    let sys = ClusterSystem::new(
        ids.iter().map(|&i| bath.hyperfine[i]).collect(),
        vec![T::zero(); ids.len()],
        bonds,
    )?;
    Ok(sys.coherence(transition.p_plus, transition.p_minus, seq, &[t_total])?[0])
}

fn bonds_within<T: Real>(bath: &BathConfiguration<T>, ids: &[usize]) -> Result<Vec<(usize, usize, T)>> {
    let mut bonds = Vec::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            bonds.push((a, b, bath.dipolar(ids[a], ids[b])?));
        }
    }
    Ok(bonds)
}

pub fn cce_coherence<T: Real>(
    bath: &BathConfiguration<T>,
    transition: &TransitionPair<T>,
    seq: &PulseSequence<T>,
    options: &CceOptions<T>,
) -> Result<CoherenceCurve<T>> {
    CceContext::new(bath, options.clone())?.coherence(transition, seq)
}

pub fn cce_correlation<T: Real>(
    bath: &BathConfiguration<T>,
    transition: &TransitionPair<T>,
    options: &CceOptions<T>,
) -> Result<CorrelationCurve<T>> {
    CceContext::new(bath, options.clone())?.correlation(transition)
}

#[cfg(test)]
mod tests;
