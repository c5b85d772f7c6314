//! [`OpenSystem`]: a validated model with everything needed to build its
//! generators under each method.

use alloc::vec::Vec;

use crate::generators::{
    build_redfield, build_secular, build_unified, clustered_derivative, redfield_derivative,
    reduced_basis, BasisOrdering, CountingField, Method, TiltedGenerator,
};
use crate::model::{
    bohr_frequencies, cluster_frequencies, default_epsilon, BohrFrequency, CheckedModel,
    ClusterPartition,
};
use crate::rates::RateTable;
use crate::{CMatrix, Error, Result};

/// Validated model, its cluster partition and cached rates.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystem {
    model: CheckedModel,
    frequencies: Vec<BohrFrequency>,
    partition: ClusterPartition,
    singletons: ClusterPartition,
    unified_basis: BasisOrdering,
    secular_basis: BasisOrdering,
    redfield_basis: BasisOrdering,
    rates: RateTable,
}

impl OpenSystem {
    /// Uses `partition` for the unified method; the Redfield generator keeps
    /// the same coherences as the unified one.
    pub fn new(model: CheckedModel, partition: ClusterPartition) -> Result<Self> {
        let n = model.levels();
        if partition.levels() != n {
            return Err(Error::InvalidPartition(alloc::format!(
                "partition covers {} levels, model has {n}",
                partition.levels()
            )));
        }
        let frequencies = bohr_frequencies(model.energies());
        let singletons = cluster_frequencies(n, &frequencies, 0.0)?;
        let unified_basis = reduced_basis(&partition);
        let secular_basis = reduced_basis(&singletons);
        let omegas = frequencies
            .iter()
            .map(|f| f.value)
            .chain(partition.clusters().iter().map(|c| c.center));
        let rates = RateTable::new(model.baths(), omegas);
        Ok(Self {
            redfield_basis: unified_basis.clone(),
            model,
            frequencies,
            partition,
            singletons,
            unified_basis,
            secular_basis,
            rates,
        })
    }

    /// Single-linkage partition at width `epsilon` (default: ten times the
    /// largest `a_j T_j`).
    pub fn with_epsilon(model: CheckedModel, epsilon: Option<f64>) -> Result<Self> {
        let eps = epsilon.unwrap_or_else(|| default_epsilon(model.baths()));
        let freqs = bohr_frequencies(model.energies());
        let partition = cluster_frequencies(model.levels(), &freqs, eps)?;
        Self::new(model, partition)
    }

    /// Replaces the Redfield coherence set.
    pub fn with_redfield_coherences(mut self, coherences: &[(usize, usize)]) -> Result<Self> {
        self.redfield_basis = BasisOrdering::new(self.model.levels(), coherences)?;
        Ok(self)
    }

    pub fn model(&self) -> &CheckedModel {
        &self.model
    }

    pub fn partition(&self) -> &ClusterPartition {
        &self.partition
    }

    pub fn frequencies(&self) -> &[BohrFrequency] {
        &self.frequencies
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    pub fn bath_count(&self) -> usize {
        self.model.baths().len()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.model.betas()
    }

    pub fn basis(&self, method: Method) -> &BasisOrdering {
        match method {
            Method::Unified => &self.unified_basis,
            Method::Secular => &self.secular_basis,
            Method::Redfield => &self.redfield_basis,
        }
    }

    pub fn generator(&self, method: Method, chi: &CountingField) -> Result<TiltedGenerator> {
        let m = &self.model;
        match method {
            Method::Unified => build_unified(m, &self.partition, &self.rates, chi),
            Method::Secular => build_secular(m, &self.singletons, &self.rates, chi),
            Method::Redfield => {
                build_redfield(m, &self.singletons, &self.rates, &self.redfield_basis, chi)
            }
        }
    }

    /// Generator at `χ = 0`.
    pub fn liouvillian(&self, method: Method) -> Result<TiltedGenerator> {
        self.generator(method, &CountingField::zeros(self.bath_count()))
    }

    /// Generator with a real field on a single bath.
    pub fn tilted(&self, method: Method, bath: usize, chi: f64) -> Result<TiltedGenerator> {
        self.generator(method, &CountingField::real(self.bath_count(), bath, chi))
    }

    /// `∂ⁿL/∂(iχ_bath)ⁿ` at `χ = 0`, `n ≥ 1`.
    pub fn generator_derivative(&self, method: Method, bath: usize, order: u8) -> Result<CMatrix> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "derivative order must be at least 1".into(),
            ));
        }
        if bath >= self.bath_count() {
            return Err(Error::InvalidParameter(alloc::format!(
                "no bath with index {bath}"
            )));
        }
        let m = &self.model;
        Ok(match method {
            Method::Unified => clustered_derivative(m, &self.partition, &self.rates, bath, order),
            Method::Secular => clustered_derivative(m, &self.singletons, &self.rates, bath, order),
            Method::Redfield => redfield_derivative(
                m,
                &self.singletons,
                &self.rates,
                &self.redfield_basis,
                bath,
                order,
            ),
        })
    }
}
