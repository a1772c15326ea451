//! Dense containers for parameters and observations.
//!
//! Both are row-major matrices of `f64`. Count data is stored as reals that
//! hold integer values.

use crate::prelude::*;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DrawSource {
    Prior,
    Posterior,
    ApproximatePosterior,
}

/// S draws of a `dim`-dimensional parameter, optionally with the log prior
/// density and log likelihood recorded for each draw.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamDraws {
    dim: usize,
    values: Vec<f64>,
    pub source: DrawSource,
    pub log_prior: Option<Vec<f64>>,
    pub log_lik: Option<Vec<f64>>,
}

impl ParamDraws {
    pub fn new(dim: usize, values: Vec<f64>, source: DrawSource) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameter draws must be finite"));
        }
        Ok(ParamDraws {
            dim,
            values,
            source,
            log_prior: None,
            log_lik: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], source: DrawSource) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged parameter rows"));
        }
        Self::new(dim, rows.concat(), source)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Keeps the first `n` rows.
    pub fn truncate(&mut self, n: usize) {
        self.values.truncate(n * self.dim);
        if let Some(lp) = &mut self.log_prior {
            lp.truncate(n);
        }
        if let Some(ll) = &mut self.log_lik {
            ll.truncate(n);
        }
    }
}

/// N observations of dimension `obs_dim`, with optional integer group labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    obs_dim: usize,
    values: Vec<f64>,
    groups: Option<Vec<u32>>,
}

impl Dataset {
    pub fn new(obs_dim: usize, values: Vec<f64>, groups: Option<Vec<u32>>) -> Result<Self> {
        if obs_dim == 0 || !values.len().is_multiple_of(obs_dim) {
            return Err(Error::invalid("observation matrix has the wrong shape"));
        }
        let n = values.len() / obs_dim;
        if n == 0 {
            return Err(Error::invalid("a dataset needs at least one observation"));
        }
        if let Some(g) = &groups {
            if g.len() != n {
                return Err(Error::invalid(format!("{} group labels for {n} observations", g.len())));
            }
        }
        Ok(Dataset {
            obs_dim,
            values,
            groups,
        })
    }

    /// Univariate observations without groups.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values, None)
    }

    /// A dataset with no observations; conditioning on it leaves the prior
    /// unchanged.
    pub fn empty(obs_dim: usize) -> Self {
        Dataset {
            obs_dim,
            values: Vec::new(),
            groups: None,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.obs_dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn groups(&self) -> Option<&[u32]> {
        self.groups.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    /// Values of the first coordinate belonging to `group`.
    pub fn group_values(&self, group: u32) -> Vec<f64> {
        match &self.groups {
            Some(g) => g
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == group)
                .map(|(i, _)| self.values[i * self.obs_dim])
                .collect(),
            None if group == 0 => self.column(0),
            None => Vec::new(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.chunks_exact(self.obs_dim).map(|r| r[j]).collect()
    }

    /// Appends `other` below `self`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.obs_dim != other.obs_dim {
            return Err(Error::invalid("cannot concatenate datasets of different dimension"));
        }
        let groups = match (&self.groups, &other.groups) {
            (None, None) => None,
            (a, b) => {
                let mut g = a.clone().unwrap_or_else(|| vec![0; self.n()]);
                g.extend(b.clone().unwrap_or_else(|| vec![0; other.n()]));
                Some(g)
            }
        };
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Dataset {
            obs_dim: self.obs_dim,
            values,
            groups,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Dataset::from_values(vec![]).is_err());
        assert!(Dataset::new(1, vec![1.0, 2.0], Some(vec![0])).is_err());
        assert!(ParamDraws::new(2, vec![1.0, 2.0, 3.0], DrawSource::Prior).is_err());
        assert!(ParamDraws::new(1, vec![f64::NAN], DrawSource::Prior).is_err());
    }

    #[test]
    fn concat_keeps_groups() {
        let a = Dataset::new(1, vec![1.0, 2.0], Some(vec![0, 1])).unwrap();
        let b = Dataset::from_values(vec![3.0]).unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.n(), 3);
        assert_eq!(c.groups(), Some(&[0, 1, 0][..]));
        let e = Dataset::empty(1).concat(&b).unwrap();
        assert_eq!(e, b);
    }
}
