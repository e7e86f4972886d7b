use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::recommenders::{Algorithm, HyperConfig};
use crate::{Error, Result};

/// A tunable hyper-parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Dimension {
    Neighbors,
    Factors,
    Iterations,
    LearningRate,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Neighbors,
        Dimension::Factors,
        Dimension::Iterations,
        Dimension::LearningRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Neighbors => "neighbors",
            Dimension::Factors => "factors",
            Dimension::Iterations => "iterations",
            Dimension::LearningRate => "learning-rate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, Dimension::LearningRate)
    }

    /// Dimensions of an algorithm's grid, outermost first.
    pub fn for_algorithm(algorithm: Algorithm) -> &'static [Dimension] {
        match algorithm {
            Algorithm::UserKnn | Algorithm::ItemKnn => &[Dimension::Neighbors],
            Algorithm::BprMf => &[Dimension::Factors, Dimension::Iterations, Dimension::LearningRate],
        }
    }

    /// Value of this dimension in `cfg`, if the config has it.
    pub fn value_of(self, cfg: &HyperConfig) -> Option<f64> {
        match (self, *cfg) {
            (Dimension::Neighbors, HyperConfig::UserKnn { neighbors })
            | (Dimension::Neighbors, HyperConfig::ItemKnn { neighbors }) => Some(neighbors as f64),
            (Dimension::Factors, HyperConfig::BprMf { factors, .. }) => Some(factors as f64),
            (Dimension::Iterations, HyperConfig::BprMf { iterations, .. }) => Some(iterations as f64),
            (Dimension::LearningRate, HyperConfig::BprMf { learning_rate, .. }) => Some(learning_rate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Rounding {
    NearestInteger,
    None,
}

/// Values of one dimension: explicit, or `base^e` over an exponent range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum ValueSpec {
    List {
        values: Vec<f64>,
    },
    Exponential {
        base: f64,
        exponent_start: f64,
        exponent_end: f64,
        /// Magnitude of the exponent increment; the direction follows
        /// `exponent_start -> exponent_end`.
        exponent_step: f64,
        rounding: Rounding,
        dedupe: bool,
    },
}

impl ValueSpec {
    pub fn exponential(start: f64, end: f64, step: f64, rounding: Rounding) -> Self {
        ValueSpec::Exponential {
            base: 2.0,
            exponent_start: start,
            exponent_end: end,
            exponent_step: step,
            rounding,
            dedupe: true,
        }
    }

    /// Generates the value list.
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            ValueSpec::List { values } => Ok(values.clone()),
            &ValueSpec::Exponential {
                base,
                exponent_start,
                exponent_end,
                exponent_step,
                rounding,
                dedupe,
            } => {
                let positive = |v: f64| v.is_finite() && v > 0.0;
                if !positive(exponent_step) || !positive(base) {
                    return Err(Error::InvalidArgument(
                        "exponential generator needs a positive base and step".into(),
                    ));
                }
                let span = exponent_end - exponent_start;
                let count = math::floor(span.abs() / exponent_step + 1e-9) as usize + 1;
                let dir = if span < 0.0 { -1.0 } else { 1.0 };
                let mut out: Vec<f64> = Vec::with_capacity(count);
                for k in 0..count {
                    let e = exponent_start + dir * exponent_step * k as f64;
                    let mut v = math::pow(base, e);
                    if rounding == Rounding::NearestInteger {
                        v = math::round(v);
                    }
                    if dedupe && out.last() == Some(&v) {
                        continue;
                    }
                    out.push(v);
                }
                Ok(out)
            }
        }
    }
}

/// Grid description for one algorithm, one entry per dimension in
/// [`Dimension::for_algorithm`] order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub algorithm: Algorithm,
    pub dimensions: Vec<(Dimension, ValueSpec)>,
}

/// Latent-factor and neighbor counts of the reference grid.
pub const DEFAULT_FACTORS: [u32; 15] = [10, 14, 20, 28, 40, 57, 80, 113, 160, 226, 320, 452, 640, 905, 1809];
pub const DEFAULT_NEIGHBORS: [u32; 15] = DEFAULT_FACTORS;
pub const DEFAULT_ITERATIONS: [u32; 14] = [1, 2, 3, 4, 6, 8, 11, 16, 23, 32, 45, 64, 91, 128];
pub const DEFAULT_LEARNING_RATES: [f64; 15] = [
    0.200003894816316,
    0.100001947408158,
    0.050000973704079,
    0.0250004868520395,
    0.0125002434260198,
    0.00625012171300988,
    0.00312506085650494,
    0.00156253042825247,
    0.000781265214126235,
    0.000390632607063118,
    0.000195316303531559,
    0.0000976581517657794,
    0.0000488290758828897,
    0.0000244145379414449,
    0.0000122072689707224,
];

fn list<T: Copy + Into<f64>>(values: &[T]) -> ValueSpec {
    ValueSpec::List {
        values: values.iter().map(|v| (*v).into()).collect(),
    }
}

impl GridSpec {
    /// The `paper-default` preset: the reference value lists, verbatim.
    pub fn paper_default(algorithm: Algorithm) -> Self {
        let dimensions = match algorithm {
            Algorithm::UserKnn | Algorithm::ItemKnn => vec![(Dimension::Neighbors, list(&DEFAULT_NEIGHBORS))],
            Algorithm::BprMf => vec![
                (Dimension::Factors, list(&DEFAULT_FACTORS)),
                (Dimension::Iterations, list(&DEFAULT_ITERATIONS)),
                (Dimension::LearningRate, list(&DEFAULT_LEARNING_RATES)),
            ],
        };
        GridSpec { algorithm, dimensions }
    }

    /// Base-2 generators behind the reference grid. The factor generator
    /// also yields 2^10.321 = 1279, which the verbatim preset leaves out.
    pub fn base2_generators(algorithm: Algorithm) -> Self {
        let factors = ValueSpec::exponential(3.321, 10.821, 0.5, Rounding::NearestInteger);
        let dimensions = match algorithm {
            Algorithm::UserKnn | Algorithm::ItemKnn => vec![(Dimension::Neighbors, factors)],
            Algorithm::BprMf => vec![
                (Dimension::Factors, factors),
                (
                    Dimension::Iterations,
                    ValueSpec::exponential(0.0, 7.0, 0.5, Rounding::NearestInteger),
                ),
                (
                    Dimension::LearningRate,
                    ValueSpec::exponential(-2.3219, -16.3219, 1.0, Rounding::None),
                ),
            ],
        };
        GridSpec { algorithm, dimensions }
    }

    /// A grid from explicit value lists, in [`Dimension::for_algorithm`] order.
    pub fn from_lists(algorithm: Algorithm, lists: &[&[f64]]) -> Self {
        GridSpec {
            algorithm,
            dimensions: Dimension::for_algorithm(algorithm)
                .iter()
                .zip(lists)
                .map(|(d, v)| (*d, ValueSpec::List { values: v.to_vec() }))
                .collect(),
        }
    }
}

/// A resolved grid: per-dimension value lists and their Cartesian product
/// (first dimension outermost).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    algorithm: Algorithm,
    dimensions: Vec<(Dimension, Vec<f64>)>,
    #[cfg_attr(feature = "serde", serde(skip))]
    configs: Vec<HyperConfig>,
}

impl Grid {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn dimensions(&self) -> &[(Dimension, Vec<f64>)] {
        &self.dimensions
    }

    pub fn values(&self, dim: Dimension) -> Option<&[f64]> {
        self.dimensions
            .iter()
            .find(|(d, _)| *d == dim)
            .map(|(_, v)| v.as_slice())
    }

    pub fn configs(&self) -> &[HyperConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn index_of(&self, cfg: &HyperConfig) -> Option<usize> {
        self.configs.iter().position(|c| c == cfg)
    }

    /// Per-dimension value indices of config `idx`.
    pub fn coordinates(&self, idx: usize) -> Vec<usize> {
        let mut rest = idx;
        let mut coords = vec![0; self.dimensions.len()];
        for (k, (_, vals)) in self.dimensions.iter().enumerate().rev() {
            coords[k] = rest % vals.len();
            rest /= vals.len();
        }
        coords
    }

    fn config_at(algorithm: Algorithm, dims: &[(Dimension, Vec<f64>)], coords: &[usize]) -> HyperConfig {
        let v = |k: usize| dims[k].1[coords[k]];
        match algorithm {
            Algorithm::UserKnn => HyperConfig::UserKnn { neighbors: v(0) as u32 },
            Algorithm::ItemKnn => HyperConfig::ItemKnn { neighbors: v(0) as u32 },
            Algorithm::BprMf => HyperConfig::BprMf {
                factors: v(0) as u32,
                iterations: v(1) as u32,
                learning_rate: v(2),
            },
        }
    }

    /// Builds a grid from resolved value lists, validating them.
    pub fn from_values(algorithm: Algorithm, dimensions: Vec<(Dimension, Vec<f64>)>) -> Result<Self> {
        let expected = Dimension::for_algorithm(algorithm);
        if dimensions.len() != expected.len() || dimensions.iter().zip(expected).any(|((d, _), e)| d != e) {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} grids need dimensions {:?}",
                algorithm.name(),
                expected
            )));
        }
        for (dim, vals) in &dimensions {
            if vals.is_empty() {
                return Err(Error::EmptyDimension(dim.name()));
            }
            let bad = vals.iter().any(|v| {
                !(v.is_finite() && *v > 0.0) || (dim.is_integer() && (libm::trunc(*v) != *v || *v > u32::MAX as f64))
            });
            if bad {
                return Err(Error::InvalidArgument(alloc::format!(
                    "dimension `{}` has an invalid value",
                    dim.name()
                )));
            }
            let increasing = vals.windows(2).all(|w| w[0] < w[1]);
            let decreasing = vals.windows(2).all(|w| w[0] > w[1]);
            if !(increasing || decreasing) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "dimension `{}` must be strictly monotone without duplicates",
                    dim.name()
                )));
            }
        }
        let total: usize = dimensions.iter().map(|(_, v)| v.len()).product();
        let mut grid = Grid {
            algorithm,
            dimensions,
            configs: Vec::with_capacity(total),
        };
        for idx in 0..total {
            let coords = grid.coordinates(idx);
            grid.configs.push(Self::config_at(algorithm, &grid.dimensions, &coords));
        }
        Ok(grid)
    }

    /// Rebuilds the config list after deserialization.
    pub fn revalidated(self) -> Result<Self> {
        Grid::from_values(self.algorithm, self.dimensions)
    }
}

/// Resolves every dimension and forms the Cartesian product.
pub fn build_grid(spec: &GridSpec) -> Result<Grid> {
    let mut dims = Vec::with_capacity(spec.dimensions.len());
    for (dim, vs) in &spec.dimensions {
        dims.push((*dim, vs.values()?));
    }
    Grid::from_values(spec.algorithm, dims)
}

/// Per dimension, the values within `radii[k]` positions of the best
/// config's value (clipped at the ends), and their Cartesian product.
pub fn subgrid_around_best(grid: &Grid, best: &HyperConfig, radii: &[usize]) -> Result<Grid> {
    let idx = grid.index_of(best).ok_or(Error::ConfigNotInGrid)?;
    if radii.len() != grid.dimensions.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "expected {} radii, got {}",
            grid.dimensions.len(),
            radii.len()
        )));
    }
    let coords = grid.coordinates(idx);
    let dims = grid
        .dimensions
        .iter()
        .zip(coords)
        .zip(radii)
        .map(|(((dim, vals), c), &r)| {
            let lo = c.saturating_sub(r);
            let hi = (c + r).min(vals.len() - 1);
            (*dim, vals[lo..=hi].to_vec())
        })
        .collect();
    Grid::from_values(grid.algorithm, dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_exponent_rounds_to_ten() {
        assert_eq!(math::round(math::pow(2.0, 3.321)), 10.0);
    }

    #[test]
    fn iteration_generator_gives_fourteen_values() {
        let v = ValueSpec::exponential(0.0, 7.0, 0.5, Rounding::NearestInteger)
            .values()
            .unwrap();
        let want: Vec<f64> = DEFAULT_ITERATIONS.iter().map(|v| *v as f64).collect();
        assert_eq!(v, want);
    }

    #[test]
    fn factor_generator_adds_1279() {
        let v = ValueSpec::exponential(3.321, 10.821, 0.5, Rounding::NearestInteger)
            .values()
            .unwrap();
        assert_eq!(v.len(), 16);
        let mut want: Vec<f64> = DEFAULT_FACTORS.iter().map(|v| *v as f64).collect();
        want.insert(14, 1279.0);
        assert_eq!(v, want);
    }

    #[test]
    fn learning_rate_generator_halves() {
        let v = ValueSpec::exponential(-2.3219, -16.3219, 1.0, Rounding::None)
            .values()
            .unwrap();
        assert_eq!(v.len(), 15);
        assert!((v[0] - 0.200_003_89).abs() < 1e-8);
        for (got, want) in v.iter().zip(DEFAULT_LEARNING_RATES) {
            assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn default_grid_cardinality() {
        let g = build_grid(&GridSpec::paper_default(Algorithm::BprMf)).unwrap();
        assert_eq!(g.len(), 3150);
        let k = build_grid(&GridSpec::paper_default(Algorithm::UserKnn)).unwrap();
        assert_eq!(k.len(), 15);
    }

    #[test]
    fn coordinates_round_trip() {
        let g = build_grid(&GridSpec::paper_default(Algorithm::BprMf)).unwrap();
        for idx in [0, 1, 14, 15, 209, 210, 3149] {
            let c = g.coordinates(idx);
            let cfg = g.configs()[idx];
            for ((dim, vals), ci) in g.dimensions().iter().zip(&c) {
                assert_eq!(dim.value_of(&cfg), Some(vals[*ci]));
            }
        }
    }

    #[test]
    fn empty_or_unsorted_dimension_rejected() {
        let spec = GridSpec::from_lists(Algorithm::UserKnn, &[&[]]);
        assert_eq!(build_grid(&spec), Err(Error::EmptyDimension("neighbors")));
        let spec = GridSpec::from_lists(Algorithm::UserKnn, &[&[3.0, 1.0, 2.0]]);
        assert!(build_grid(&spec).is_err());
        let spec = GridSpec::from_lists(Algorithm::UserKnn, &[&[2.5]]);
        assert!(build_grid(&spec).is_err());
    }

    #[test]
    fn subgrid_shapes() {
        let g = build_grid(&GridSpec::paper_default(Algorithm::BprMf)).unwrap();
        let best = HyperConfig::BprMf {
            factors: 80,
            iterations: 1,
            learning_rate: DEFAULT_LEARNING_RATES[14],
        };
        let s = subgrid_around_best(&g, &best, &[0, 0, 0]).unwrap();
        assert_eq!(s.configs(), &[best]);
        let s = subgrid_around_best(&g, &best, &[2, 2, 2]).unwrap();
        let lens: Vec<usize> = s.dimensions().iter().map(|(_, v)| v.len()).collect();
        assert_eq!(lens, [5, 3, 3]);
        assert_eq!(s.values(Dimension::Factors).unwrap(), &[40.0, 57.0, 80.0, 113.0, 160.0]);
        let outside = HyperConfig::BprMf {
            factors: 7,
            iterations: 1,
            learning_rate: 0.1,
        };
        assert_eq!(
            subgrid_around_best(&g, &outside, &[1, 1, 1]),
            Err(Error::ConfigNotInGrid)
        );
    }
}
