//! Uniformity diagnostics for collections of simulation-based p-values:
//! binned chi-squared, Kolmogorov–Smirnov and a simultaneous ECDF-difference
//! band.
//!
//! P-values from a finite number of draws live on a grid `{0, 1/M, …, 1}`.
//! Declaring that granularity switches every test to the discrete uniform
//! reference on the M + 1 support points.

use rand::Rng;

use crate::prelude::*;
use crate::rng::Seed;
use crate::special;
use crate::{par, stats, Error, Result};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_COVERAGE: f64 = 0.95;
/// Monte Carlo replicates used to calibrate the simultaneous band.
pub const BAND_REPLICATES: usize = 1000;
/// Grid resolution for continuous p-values and for fine discrete grids.
const MAX_GRID: usize = 100;

/// Fixed root for internal randomization (band calibration and KS jitter),
/// so a verdict is a pure function of the p-values.
const INTERNAL_SEED: Seed = Seed(0x5EE_D0FC_A11B);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PValueSet {
    values: Vec<f64>,
    /// M when the values lie on `{0, 1/M, …, 1}`.
    granularity: Option<usize>,
}

impl PValueSet {
    pub fn new(values: Vec<f64>, granularity: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty p-value set"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("p-value {v} outside [0, 1]")));
        }
        if granularity == Some(0) {
            return Err(Error::invalid("granularity must be positive"));
        }
        Ok(PValueSet { values, granularity })
    }

    pub fn continuous(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn granularity(&self) -> Option<usize> {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Support index `j` of each value, `p ≈ j / M`.
    fn support_indices(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .map(move |&p| ((p * m as f64).round() as usize).min(m))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EcdfBandReport {
    pub grid: Vec<f64>,
    pub ecdf_diff: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub coverage: f64,
    /// Calibrated pointwise two-sided level.
    pub pointwise_level: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformityVerdict {
    pub chi2_stat: f64,
    pub chi2_df: usize,
    pub chi2_pvalue: f64,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub ecdf_inside: bool,
    pub bins: usize,
    pub ecdf: EcdfBandReport,
}

impl UniformityVerdict {
    /// The chi-squared test rejects uniformity at level `alpha`.
    pub fn chi2_rejects(&self, alpha: f64) -> bool {
        self.chi2_pvalue < alpha
    }

    /// Uniformity stands: chi-squared does not reject at `alpha` and the
    /// ECDF trajectory stays inside its band.
    pub fn passes(&self, alpha: f64) -> bool {
        !self.chi2_rejects(alpha) && self.ecdf_inside
    }
}

/// Bin of each value. With granularity M the bins partition the support
/// points `j / M` by the same equal-width edges.
fn bin_of(j_or_p: BinInput, bins: usize) -> usize {
    match j_or_p {
        BinInput::Continuous(p) => ((p * bins as f64) as usize).min(bins - 1),
        BinInput::Discrete { j, m } => (j * bins / m).min(bins - 1),
    }
}

#[derive(Clone, Copy)]
enum BinInput {
    Continuous(f64),
    Discrete { j: usize, m: usize },
}

fn bin_inputs(p: &PValueSet) -> Vec<BinInput> {
    match p.granularity {
        None => p.values.iter().map(|&v| BinInput::Continuous(v)).collect(),
        Some(m) => p.support_indices(m).map(|j| BinInput::Discrete { j, m }).collect(),
    }
}

/// Counts per equal-width bin on [0, 1].
pub fn rank_histogram(p: &PValueSet, bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return Err(Error::invalid("at least two bins are required"));
    }
    let mut counts = vec![0; bins];
    for x in bin_inputs(p) {
        counts[bin_of(x, bins)] += 1;
    }
    Ok(counts)
}

/// Probability of each bin under the uniform reference.
fn bin_probabilities(granularity: Option<usize>, bins: usize) -> Vec<f64> {
    match granularity {
        None => vec![1.0 / bins as f64; bins],
        Some(m) => {
            let mut mass = vec![0.0; bins];
            for j in 0..=m {
                mass[bin_of(BinInput::Discrete { j, m }, bins)] += 1.0 / (m + 1) as f64;
            }
            mass
        }
    }
}

/// Pearson chi-squared over equal-width bins. Bins with zero expected count
/// (possible on coarse discrete supports) are dropped from the statistic
/// and the degrees of freedom. Returns (statistic, df, p-value).
pub fn chi2_uniformity(p: &PValueSet, bins: usize) -> Result<(f64, usize, f64)> {
    let counts = rank_histogram(p, bins)?;
    let s = p.len() as f64;
    let (stat, used) = counts
        .iter()
        .zip(bin_probabilities(p.granularity, bins))
        .filter(|(_, prob)| *prob > 0.0)
        .fold((0.0, 0usize), |(acc, used), (&c, prob)| {
            let e = s * prob;
            let d = c as f64 - e;
            (acc + d * d / e, used + 1)
        });
    let df = used.saturating_sub(1);
    let pvalue = if df == 0 {
        1.0
    } else {
        special::chi2_sf(stat, df as f64)
    };
    Ok((stat, df, pvalue))
}

/// One-sample KS against Uniform(0, 1). Discrete values `j / M` are spread
/// to `(j + U) / (M + 1)` with a fixed internal stream first, which makes
/// them exactly uniform under the discrete-uniform null.
pub fn ks_uniformity(p: &PValueSet) -> (f64, f64) {
    match p.granularity {
        None => stats::ks_one_sample(&p.values, |x| x.clamp(0.0, 1.0)),
        Some(m) => {
            let mut rng = INTERNAL_SEED.named("ks-jitter").rng();
            let jittered: Vec<f64> = p
                .support_indices(m)
                .map(|j| (j as f64 + rng.random::<f64>()) / (m + 1) as f64)
                .collect();
            stats::ks_one_sample(&jittered, |x| x.clamp(0.0, 1.0))
        }
    }
}

/// Evaluation grid of the ECDF difference and the reference CDF there.
///
/// Continuous: `z_i = i / K`, `K = min(s, 100)`, `i = 1..K-1`. Discrete with
/// M ≤ 100: one point per support value `j / M`, `j = 0..M-1`, whose
/// reference CDF is `(j + 1) / (M + 1)`. Finer discrete grids use the
/// continuous grid.
#[derive(Debug, Clone)]
struct BandGrid {
    /// Reference CDF at each grid point; also the plotted abscissa.
    z: Vec<f64>,
    kind: GridKind,
}

#[derive(Debug, Clone, Copy)]
enum GridKind {
    Continuous { k: usize },
    Discrete { m: usize },
}

impl BandGrid {
    fn new(s: usize, granularity: Option<usize>) -> Self {
        match granularity {
            Some(m) if m <= MAX_GRID => BandGrid {
                z: (0..m).map(|j| (j + 1) as f64 / (m + 1) as f64).collect(),
                kind: GridKind::Discrete { m },
            },
            _ => {
                let k = s.clamp(2, MAX_GRID);
                BandGrid {
                    z: (1..k).map(|i| i as f64 / k as f64).collect(),
                    kind: GridKind::Continuous { k },
                }
            }
        }
    }

    /// Cumulative counts `#{x ≤ grid_i}` for a p-value set.
    fn counts(&self, p: &PValueSet) -> Vec<usize> {
        let mut cells = vec![0usize; self.cells()];
        match self.kind {
            GridKind::Discrete { m } => {
                for j in p.support_indices(m) {
                    cells[j] += 1;
                }
            }
            GridKind::Continuous { k } => {
                for &v in &p.values {
                    // Cell i holds (i/K, (i+1)/K]; a value exactly on the grid
                    // belongs to the cell ending there.
                    let c = (v * k as f64).ceil() as usize;
                    cells[c.saturating_sub(1).min(k - 1)] += 1;
                }
            }
        }
        cumulate(&cells, self.z.len())
    }

    fn cells(&self) -> usize {
        match self.kind {
            GridKind::Discrete { m } => m + 1,
            GridKind::Continuous { k } => k,
        }
    }

    /// Cumulative counts of one exactly uniform replicate of size `s`.
    fn replicate_counts(&self, s: usize, seed: Seed) -> Vec<usize> {
        let mut rng = seed.rng();
        let mut cells = vec![0usize; self.cells()];
        match self.kind {
            GridKind::Discrete { m } => {
                for _ in 0..s {
                    cells[rng.random_range(0..=m)] += 1;
                }
            }
            GridKind::Continuous { k } => {
                for _ in 0..s {
                    cells[rng.random_range(0..k)] += 1;
                }
            }
        }
        cumulate(&cells, self.z.len())
    }
}

fn cumulate(cells: &[usize], len: usize) -> Vec<usize> {
    cells
        .iter()
        .scan(0usize, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .take(len)
        .collect()
}

/// Simultaneous band for the ECDF difference of `s` uniform p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfBand {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub coverage: f64,
    pub pointwise_level: f64,
    lower_count: Vec<usize>,
    upper_count: Vec<usize>,
}

impl EcdfBand {
    fn contains_counts(&self, counts: &[usize]) -> bool {
        counts
            .iter()
            .zip(self.lower_count.iter().zip(&self.upper_count))
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }

    /// Whether an exactly uniform sample generated from `seed` stays inside.
    pub fn contains_uniform_replicate(&self, s: usize, granularity: Option<usize>, seed: Seed) -> bool {
        self.contains_counts(&BandGrid::new(s, granularity).replicate_counts(s, seed))
    }
}

/// Binomial CDF tables at every grid point.
fn cdf_tables(s: usize, z: &[f64]) -> Vec<Vec<f64>> {
    let ln_fact = special::ln_factorial_table(s);
    z.iter()
        .map(|&zi| special::binomial_cdf_table(s, zi, &ln_fact))
        .collect()
}

/// Smallest two-sided pointwise level at which a trajectory with these
/// cumulative counts leaves the pointwise band somewhere.
fn trajectory_level(counts: &[usize], tables: &[Vec<f64>]) -> f64 {
    counts
        .iter()
        .zip(tables)
        .map(|(&c, f)| {
            let below = 2.0 * f[c];
            let above = 2.0 * (1.0 - if c == 0 { 0.0 } else { f[c - 1] });
            below.min(above)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Simultaneous band by Monte Carlo calibration.
///
/// Under uniformity the count below grid point `z_i` is Binomial(s, z_i).
/// The pointwise band at two-sided level γ keeps counts `c` with
/// `2·F(c) > γ` and `2·(1 − F(c − 1)) > γ`. γ is chosen by bisection as the
/// largest level at which at most a `1 − coverage` fraction of replicated
/// uniform trajectories leave the band.
pub fn ecdf_band(s: usize, granularity: Option<usize>, coverage: f64, seed: Seed) -> Result<EcdfBand> {
    if s < 10 {
        return Err(Error::invalid(format!("ECDF band needs at least 10 values, got {s}")));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::invalid(format!("coverage must be in (0, 1), got {coverage}")));
    }
    if granularity == Some(0) {
        return Err(Error::invalid("granularity must be positive"));
    }
    let grid = BandGrid::new(s, granularity);
    let tables = cdf_tables(s, &grid.z);
    let levels = par::map_indexed(BAND_REPLICATES, |r| {
        trajectory_level(&grid.replicate_counts(s, seed.child(r as u64)), &tables)
    });
    let allowed = ((1.0 - coverage) * BAND_REPLICATES as f64).floor() as usize;
    let exceed = |gamma: f64| levels.iter().filter(|&&l| l <= gamma).count();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if exceed(mid) <= allowed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = lo;

    let n = s as f64;
    let (mut lower_count, mut upper_count) = (Vec::new(), Vec::new());
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for (f, &z) in tables.iter().zip(&grid.z) {
        let lc = f.iter().position(|&v| 2.0 * v > gamma).unwrap_or(s);
        let uc = (0..=s)
            .rev()
            .find(|&c| 2.0 * (1.0 - if c == 0 { 0.0 } else { f[c - 1] }) > gamma)
            .unwrap_or(0);
        lower.push((lc as f64 / n - z).min(0.0));
        upper.push((uc as f64 / n - z).max(0.0));
        lower_count.push(lc);
        upper_count.push(uc);
    }
    Ok(EcdfBand {
        grid: grid.z,
        lower,
        upper,
        coverage,
        pointwise_level: gamma,
        lower_count,
        upper_count,
    })
}

/// ECDF difference of `p` on the band grid, with the band and verdict.
pub fn ecdf_band_report(p: &PValueSet, coverage: f64, seed: Seed) -> Result<EcdfBandReport> {
    let band = ecdf_band(p.len(), p.granularity, coverage, seed)?;
    let grid = BandGrid::new(p.len(), p.granularity);
    let counts = grid.counts(p);
    let n = p.len() as f64;
    let ecdf_diff = counts.iter().zip(&grid.z).map(|(&c, z)| c as f64 / n - z).collect();
    Ok(EcdfBandReport {
        inside: band.contains_counts(&counts),
        grid: band.grid,
        ecdf_diff,
        lower: band.lower,
        upper: band.upper,
        coverage,
        pointwise_level: band.pointwise_level,
    })
}

/// Chi-squared, KS and ECDF-band verdicts for one p-value set. The band uses
/// the default coverage and a fixed internal calibration stream.
pub fn uniformity_test(p: &PValueSet, bins: usize) -> Result<UniformityVerdict> {
    uniformity_test_with(p, bins, DEFAULT_COVERAGE)
}

pub fn uniformity_test_with(p: &PValueSet, bins: usize, coverage: f64) -> Result<UniformityVerdict> {
    if bins < 2 {
        return Err(Error::invalid("at least two bins are required"));
    }
    if p.len() < bins {
        return Err(Error::invalid(format!(
            "{} p-values are too few for {bins} bins",
            p.len()
        )));
    }
    let (chi2_stat, chi2_df, chi2_pvalue) = chi2_uniformity(p, bins)?;
    let (ks_stat, ks_pvalue) = ks_uniformity(p);
    let ecdf = ecdf_band_report(p, coverage, INTERNAL_SEED.named("ecdf-band"))?;
    Ok(UniformityVerdict {
        chi2_stat,
        chi2_df,
        chi2_pvalue,
        ks_stat,
        ks_pvalue,
        ecdf_inside: ecdf.inside,
        bins,
        ecdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_set(s: usize) -> PValueSet {
        PValueSet::continuous((0..s).map(|i| (i as f64 + 0.5) / s as f64).collect()).unwrap()
    }

    #[test]
    fn perfectly_spread_values() {
        let v = uniformity_test(&grid_set(1000), 10).unwrap();
        assert_eq!(v.chi2_stat, 0.0);
        assert_eq!(v.chi2_pvalue, 1.0);
        assert!(v.ecdf_inside);
        assert_eq!(rank_histogram(&grid_set(1000), 10).unwrap(), vec![100; 10]);
    }

    #[test]
    fn degenerate_values() {
        let p = PValueSet::continuous(vec![0.5; 1000]).unwrap();
        let v = uniformity_test(&p, 10).unwrap();
        assert!(v.chi2_pvalue < 1e-10);
        assert!(!v.ecdf_inside);
        let zeros = PValueSet::continuous(vec![0.0; 100]).unwrap();
        assert_eq!(rank_histogram(&zeros, 10).unwrap()[0], 100);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PValueSet::continuous(vec![]).is_err());
        assert!(PValueSet::continuous(vec![1.5]).is_err());
        assert!(uniformity_test(&grid_set(5), 10).is_err());
        assert!(ecdf_band(9, None, 0.95, Seed(1)).is_err());
        assert!(ecdf_band(100, None, 1.0, Seed(1)).is_err());
    }

    #[test]
    fn small_band_shape() {
        let b = ecdf_band(10, None, 0.95, Seed(3)).unwrap();
        for (lo, hi) in b.lower.iter().zip(&b.upper) {
            assert!(lo.is_finite() && hi.is_finite());
            assert!(*lo <= 0.0 && 0.0 <= *hi);
        }
    }

    #[test]
    fn discrete_bins_drop_empty_cells() {
        // Support {0, 1}: only the first and last of 10 bins have mass.
        let p = PValueSet::new(vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0], Some(1)).unwrap();
        let (stat, df, pv) = chi2_uniformity(&p, 10).unwrap();
        assert_eq!((stat, df, pv), (0.0, 1, 1.0));
        let v = uniformity_test(&p, 10).unwrap();
        assert!(v.ecdf.grid.len() == 1);
    }

    #[test]
    fn discrete_grid_reference() {
        let b = ecdf_band(100, Some(9), 0.95, Seed(2)).unwrap();
        assert_eq!(b.grid.len(), 9);
        assert!((b.grid[0] - 0.1).abs() < 1e-15);
    }
}
