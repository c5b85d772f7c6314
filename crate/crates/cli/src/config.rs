//! Model sources: named presets or a JSON model file.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qfcs_core::fcs::{FdSteps, TemperatureFamily};
use qfcs_core::model::{bohr_frequencies, validate_model, BathSpec, CouplingSpec, SystemModel};
use qfcs_core::vmodel::VParams;
use qfcs_core::{ClusterPartition, OpenSystem, RMatrix};
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub levels: Levels,
    pub couplings: Vec<CouplingEntry>,
    pub baths: Vec<BathEntry>,
    #[serde(default)]
    pub clustering: Clustering,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub bath: String,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathEntry {
    pub id: String,
    pub temperature: f64,
    pub ohmic_a: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clustering {
    pub epsilon: Option<f64>,
    pub centers: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading model file {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("model file {}: {e}", path.display())).into())
    }

    fn coupling_matrix(entry: &CouplingEntry) -> Result<RMatrix> {
        let rows = entry.matrix.len();
        let cols = entry.matrix.first().map_or(0, Vec::len);
        if entry.matrix.iter().any(|r| r.len() != cols) {
            bail!(UsageError(format!(
                "coupling for bath `{}` has ragged rows",
                entry.bath
            )));
        }
        Ok(RMatrix::from_fn(rows, cols, |i, j| entry.matrix[i][j]))
    }

    /// Builds the system, with `epsilon` overriding the file's threshold.
    /// Explicit centers take precedence over any threshold.
    pub fn system(&self, epsilon: Option<f64>) -> Result<OpenSystem> {
        let couplings = self
            .couplings
            .iter()
            .map(|c| Ok(CouplingSpec::new(c.bath.clone(), Self::coupling_matrix(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let baths = self
            .baths
            .iter()
            .map(|b| BathSpec::new(b.id.clone(), b.temperature, b.ohmic_a))
            .collect();
        let model = validate_model(
            SystemModel::new(self.levels.energies.clone(), couplings),
            baths,
        )?;
        match &self.clustering.centers {
            Some(centers) => {
                let freqs = bohr_frequencies(model.energies());
                let partition = ClusterPartition::with_centers(model.levels(), &freqs, centers)?;
                Ok(OpenSystem::new(model, partition)?)
            }
            None => Ok(OpenSystem::with_epsilon(
                model,
                epsilon.or(self.clustering.epsilon),
            )?),
        }
    }

    pub fn bath_index(&self, id: &str) -> Option<usize> {
        self.baths.iter().position(|b| b.id == id)
    }

    /// Largest Bohr frequency, the natural unit for counting fields.
    pub fn max_frequency(&self) -> f64 {
        let e = &self.levels.energies;
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Where the model comes from, with the clustering override applied.
#[derive(Debug, Clone)]
pub enum Source {
    Preset {
        params: VParams,
        epsilon: Option<f64>,
    },
    File {
        model: ModelFile,
        epsilon: Option<f64>,
    },
}

impl Source {
    pub fn system(&self) -> Result<OpenSystem> {
        match self {
            Source::Preset {
                params, epsilon, ..
            } => v_system(params, *epsilon),
            Source::File { model, epsilon } => model.system(*epsilon),
        }
    }

    pub fn v_params(&self, command: &str) -> Result<VParams> {
        match self {
            Source::Preset { params, .. } => Ok(*params),
            Source::File { .. } => {
                bail!(UsageError(format!(
                    "`{command}` sweeps V-model parameters and needs --preset"
                )))
            }
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Source::Preset { epsilon, .. } | Source::File { epsilon, .. } => *epsilon,
        }
    }

    pub fn energy_scale(&self) -> f64 {
        match self {
            Source::Preset { params, .. } => params.nu,
            Source::File { model, .. } => model.max_frequency(),
        }
    }

    /// Mean of the first two bath temperatures.
    pub fn mean_temperature(&self) -> Result<f64> {
        match self {
            Source::Preset { params, .. } => Ok(0.5 * (params.t_left + params.t_right)),
            Source::File { model, .. } => match model.baths.as_slice() {
                [a, b] => Ok(0.5 * (a.temperature + b.temperature)),
                _ => bail!(UsageError(
                    "temperature sweeps need exactly two baths".into()
                )),
            },
        }
    }

    pub fn bath(&self, name: Option<&str>) -> Result<usize> {
        let Some(name) = name else { return Ok(0) };
        let idx = match self {
            Source::Preset { .. } => ["L", "R"].iter().position(|b| b.eq_ignore_ascii_case(name)),
            Source::File { model, .. } => model.bath_index(name),
        };
        idx.ok_or_else(|| UsageError(format!("unknown bath `{name}`")).into())
    }

    pub fn bath_ids(&self) -> Vec<String> {
        match self {
            Source::Preset { .. } => vec!["L".into(), "R".into()],
            Source::File { model, .. } => model.baths.iter().map(|b| b.id.clone()).collect(),
        }
    }
}

/// V system, optionally re-clustered at an explicit threshold.
pub fn v_system(params: &VParams, epsilon: Option<f64>) -> Result<OpenSystem> {
    Ok(match epsilon {
        None => params.system()?,
        Some(eps) => OpenSystem::with_epsilon(params.model()?, Some(eps))?,
    })
}

/// Two-bath temperature family over either source. The first bath is the
/// counted one.
pub struct Family<'a> {
    pub source: &'a Source,
    pub params: Option<VParams>,
}

impl TemperatureFamily for Family<'_> {
    fn at_temperatures(&self, t_counted: f64, t_other: f64) -> qfcs_core::Result<OpenSystem> {
        let fail = |e: anyhow::Error| match e.downcast::<qfcs_core::Error>() {
            Ok(e) => e,
            Err(e) => qfcs_core::Error::InvalidParameter(format!("{e:#}")),
        };
        match (self.source, self.params) {
            (Source::Preset { epsilon, .. }, Some(p)) => {
                v_system(&p.with_temperatures(t_counted, t_other), *epsilon).map_err(fail)
            }
            (
                Source::Preset {
                    params, epsilon, ..
                },
                None,
            ) => v_system(&params.with_temperatures(t_counted, t_other), *epsilon).map_err(fail),
            (Source::File { model, epsilon }, _) => {
                if model.baths.len() != 2 {
                    return Err(qfcs_core::Error::InvalidParameter(
                        "temperature sweeps need exactly two baths".into(),
                    ));
                }
                let mut m = model.clone();
                m.baths[0].temperature = t_counted;
                m.baths[1].temperature = t_other;
                m.system(*epsilon).map_err(fail)
            }
        }
    }

    fn steps(&self) -> FdSteps {
        FdSteps::for_scale(self.source.energy_scale())
    }
}
