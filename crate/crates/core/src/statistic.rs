//! Summary statistics and discrepancy measures.
//!
//! A statistic is one of three arities: a function of the data `T(y)`, a
//! function of the parameters `T(θ)`, or a discrepancy between observed and
//! replicated data `T(y_obs, y')`.

use alloc::sync::Arc;
use core::fmt;

use crate::data::Dataset;
use crate::prelude::*;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    DataOnly,
    ParamOnly,
    DataPair,
}

type DataFn = Arc<dyn Fn(&Dataset) -> Option<f64> + Send + Sync>;
type ParamFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `T(y)`. `None` from [`DataStatistic::eval`] means the statistic is
/// undefined on that dataset (for example a t statistic with zero variance).
#[derive(Clone)]
pub enum DataStatistic {
    Mean,
    Variance,
    Sum,
    Max,
    Min,
    Quantile(f64),
    /// mean(group 1) - mean(group 0)
    MeanDifference,
    /// Two-sample t statistic with pooled variance, group 1 minus group 0.
    PooledT,
    /// var(group 1) / var(group 0)
    VarianceRatio,
    Lag1Autocorrelation,
    Constant(f64),
    Custom {
        name: String,
        f: DataFn,
    },
}

impl DataStatistic {
    pub fn custom(name: &str, f: impl Fn(&Dataset) -> Option<f64> + Send + Sync + 'static) -> Self {
        DataStatistic::Custom {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DataStatistic::Mean => "mean".into(),
            DataStatistic::Variance => "variance".into(),
            DataStatistic::Sum => "sum".into(),
            DataStatistic::Max => "max".into(),
            DataStatistic::Min => "min".into(),
            DataStatistic::Quantile(p) => format!("quantile_{p}"),
            DataStatistic::MeanDifference => "mean_difference".into(),
            DataStatistic::PooledT => "pooled_t".into(),
            DataStatistic::VarianceRatio => "variance_ratio".into(),
            DataStatistic::Lag1Autocorrelation => "lag1_autocorrelation".into(),
            DataStatistic::Constant(c) => format!("constant_{c}"),
            DataStatistic::Custom { name, .. } => name.clone(),
        }
    }

    /// Parses the names produced by [`DataStatistic::name`] (custom
    /// statistics excluded).
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "mean" => DataStatistic::Mean,
            "variance" => DataStatistic::Variance,
            "sum" => DataStatistic::Sum,
            "max" => DataStatistic::Max,
            "min" => DataStatistic::Min,
            "mean_difference" => DataStatistic::MeanDifference,
            "pooled_t" => DataStatistic::PooledT,
            "variance_ratio" => DataStatistic::VarianceRatio,
            "lag1_autocorrelation" => DataStatistic::Lag1Autocorrelation,
            other => {
                if let Some(p) = other.strip_prefix("quantile_") {
                    DataStatistic::Quantile(p.parse().ok()?)
                } else {
                    DataStatistic::Constant(other.strip_prefix("constant_")?.parse().ok()?)
                }
            }
        })
    }

    pub fn eval(&self, y: &Dataset) -> Option<f64> {
        let value = match self {
            DataStatistic::Mean => stats::mean(&y.column(0)),
            DataStatistic::Variance => stats::variance(&y.column(0)),
            DataStatistic::Sum => y.column(0).iter().sum(),
            DataStatistic::Max => y.column(0).iter().copied().fold(f64::NEG_INFINITY, f64::max),
            DataStatistic::Min => y.column(0).iter().copied().fold(f64::INFINITY, f64::min),
            DataStatistic::Quantile(p) => stats::quantile(&y.column(0), *p),
            DataStatistic::MeanDifference => {
                let (a, b) = two_groups(y)?;
                stats::mean(&b) - stats::mean(&a)
            }
            DataStatistic::PooledT => {
                let (a, b) = two_groups(y)?;
                pooled_t(&a, &b)?
            }
            DataStatistic::VarianceRatio => {
                let (a, b) = two_groups(y)?;
                let va = stats::variance(&a);
                if va <= 0.0 {
                    return None;
                }
                stats::variance(&b) / va
            }
            DataStatistic::Lag1Autocorrelation => lag1_autocorrelation(&y.column(0))?,
            DataStatistic::Constant(c) => *c,
            DataStatistic::Custom { f, .. } => f(y)?,
        };
        value.is_finite().then_some(value)
    }
}

impl fmt::Debug for DataStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataStatistic({})", self.name())
    }
}

fn two_groups(y: &Dataset) -> Option<(Vec<f64>, Vec<f64>)> {
    let a = y.group_values(0);
    let b = y.group_values(1);
    (a.len() >= 2 && b.len() >= 2).then_some((a, b))
}

fn pooled_t(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * stats::variance(a) + (nb - 1.0) * stats::variance(b)) / (na + nb - 2.0);
    if pooled <= 0.0 {
        return None;
    }
    Some((stats::mean(b) - stats::mean(a)) / (pooled * (1.0 / na + 1.0 / nb)).sqrt())
}

fn lag1_autocorrelation(x: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let m = stats::mean(x);
    let denom: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if denom <= 0.0 {
        return None;
    }
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Some(num / denom)
}

/// `T(θ)`: a parameter component or a pushforward quantity.
#[derive(Clone)]
pub enum ParamStatistic {
    Component(usize),
    Custom { name: String, f: ParamFn },
}

impl ParamStatistic {
    pub fn custom(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ParamStatistic::Custom {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ParamStatistic::Component(i) => format!("theta[{i}]"),
            ParamStatistic::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            ParamStatistic::Component(i) => theta[*i],
            ParamStatistic::Custom { f, .. } => f(theta),
        }
    }

    /// One component statistic per parameter dimension.
    pub fn all_components(dim: usize) -> Vec<ParamStatistic> {
        (0..dim).map(ParamStatistic::Component).collect()
    }
}

impl fmt::Debug for ParamStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParamStatistic({})", self.name())
    }
}

/// `T(y_obs, y')` built from a data statistic.
#[derive(Debug, Clone)]
pub enum Discrepancy {
    /// T(y') - T(y_obs)
    Difference(DataStatistic),
    /// |T(y') - T(y_obs)|
    AbsDifference(DataStatistic),
}

impl Discrepancy {
    pub fn name(&self) -> String {
        match self {
            Discrepancy::Difference(s) => format!("diff_{}", s.name()),
            Discrepancy::AbsDifference(s) => format!("absdiff_{}", s.name()),
        }
    }

    pub fn base(&self) -> &DataStatistic {
        match self {
            Discrepancy::Difference(s) | Discrepancy::AbsDifference(s) => s,
        }
    }

    /// Evaluates against a precomputed `T(y_obs)`.
    pub fn eval_with_observed(&self, observed: f64, replicate: &Dataset) -> Option<f64> {
        let t = self.base().eval(replicate)?;
        Some(match self {
            Discrepancy::Difference(_) => t - observed,
            Discrepancy::AbsDifference(_) => (t - observed).abs(),
        })
    }

    pub fn eval(&self, observed: &Dataset, replicate: &Dataset) -> Option<f64> {
        self.eval_with_observed(self.base().eval(observed)?, replicate)
    }
}

/// Any of the three statistic arities.
#[derive(Debug, Clone)]
pub enum SummaryStatistic {
    Data(DataStatistic),
    Param(ParamStatistic),
    Pair(Discrepancy),
}

impl SummaryStatistic {
    pub fn arity(&self) -> Arity {
        match self {
            SummaryStatistic::Data(_) => Arity::DataOnly,
            SummaryStatistic::Param(_) => Arity::ParamOnly,
            SummaryStatistic::Pair(_) => Arity::DataPair,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SummaryStatistic::Data(s) => s.name(),
            SummaryStatistic::Param(s) => s.name(),
            SummaryStatistic::Pair(s) => s.name(),
        }
    }
}
