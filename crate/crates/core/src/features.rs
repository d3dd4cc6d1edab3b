//! Random-feature basis for boundary traces: fixed random weights and
//! biases feeding a scalar activation,
//!
//!   phi_j(x) = sigma(<w_j, x> + b_j),          j = 0 .. M-1,
//!
//! sampled once per solve from a counter-based RNG so runs are reproducible
//! across platforms and thread counts.

use crate::{Error, Result};
use nalgebra::SVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Scalar activation applied to the random affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Cosine,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Cosine => z.cos(),
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Cosine => -z.sin(),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Cosine => "cosine",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Activation::Cosine),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation '{other}' (expected 'cosine' or 'tanh')"
            ))),
        }
    }
}

/// How weights and biases are drawn.
///
/// * `Cosine { gamma }`: weights i.i.d. normal with variance 2 gamma per
///   coordinate, biases uniform on [-pi, pi] (random Fourier features for a
///   Gaussian kernel of bandwidth gamma).
/// * `Tanh { range }`: weights and biases uniform on [-range, range].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerConfig {
    Cosine { gamma: f64 },
    Tanh { range: f64 },
}

impl SamplerConfig {
    pub fn activation(&self) -> Activation {
        match self {
            SamplerConfig::Cosine { .. } => Activation::Cosine,
            SamplerConfig::Tanh { .. } => Activation::Tanh,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SamplerConfig::Cosine { gamma } if *gamma <= 0.0 => {
                Err(Error::NonPositiveArgument("cosine sampler bandwidth gamma"))
            }
            SamplerConfig::Tanh { range } if *range <= 0.0 => {
                Err(Error::NonPositiveArgument("tanh sampler range"))
            }
            _ => Ok(()),
        }
    }
}

/// A sampled random-feature basis of `len()` features over points in
/// `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    pub activation: Activation,
    pub dim: usize,
    pub seed: u64,
    /// Row-major M x dim weight matrix.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl FeatureBasis {
    /// Draw a basis of `m` features on R^dim. Per feature, the `dim` weight
    /// coordinates are drawn first, then the bias, so bases of different
    /// sizes share a common prefix for the same seed.
    pub fn sample(config: &SamplerConfig, m: usize, dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if m == 0 {
            return Err(Error::InvalidConfig("feature count must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidConfig("feature dimension must be positive".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(m * dim);
        let mut biases = Vec::with_capacity(m);
        match *config {
            SamplerConfig::Cosine { gamma } => {
                let normal = Normal::new(0.0, (2.0 * gamma).sqrt())
                    .map_err(|e| Error::InvalidConfig(format!("weight distribution: {e}")))?;
                for _ in 0..m {
                    for _ in 0..dim {
                        weights.push(normal.sample(&mut rng));
                    }
                    biases.push(rng.random_range(-PI..PI));
                }
            }
            SamplerConfig::Tanh { range } => {
                for _ in 0..m {
                    for _ in 0..dim {
                        weights.push(rng.random_range(-range..range));
                    }
                    biases.push(rng.random_range(-range..range));
                }
            }
        }
        Ok(FeatureBasis {
            activation: config.activation(),
            dim,
            seed,
            weights,
            biases,
        })
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn weight_row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn bias(&self, j: usize) -> f64 {
        self.biases[j]
    }

    fn affine<const D: usize>(&self, j: usize, x: &SVector<f64, D>) -> f64 {
        debug_assert_eq!(D, self.dim);
        let row = self.weight_row(j);
        let mut z = self.biases[j];
        for i in 0..D {
            z += row[i] * x[i];
        }
        z
    }

    /// Value of feature j at x.
    pub fn value<const D: usize>(&self, j: usize, x: &SVector<f64, D>) -> f64 {
        self.activation.apply(self.affine(j, x))
    }

    /// Directional derivative n . grad phi_j (x) of feature j at x.
    pub fn normal_deriv<const D: usize>(
        &self,
        j: usize,
        x: &SVector<f64, D>,
        n: &SVector<f64, D>,
    ) -> f64 {
        let row = self.weight_row(j);
        let mut wn = 0.0;
        for i in 0..D {
            wn += row[i] * n[i];
        }
        self.activation.derivative(self.affine(j, x)) * wn
    }

    /// All feature values at x, written into `out` (length M).
    pub fn values_into<const D: usize>(&self, x: &SVector<f64, D>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.activation.apply(self.affine(j, x));
        }
    }

    /// Directional derivatives n . grad phi_j (x) for all features:
    /// sigma'(<w, x> + b) <w, n>.
    pub fn normal_derivs_into<const D: usize>(
        &self,
        x: &SVector<f64, D>,
        n: &SVector<f64, D>,
        out: &mut [f64],
    ) {
        debug_assert_eq!(out.len(), self.len());
        for (j, o) in out.iter_mut().enumerate() {
            let row = self.weight_row(j);
            let mut wn = 0.0;
            for i in 0..D {
                wn += row[i] * n[i];
            }
            *o = self.activation.derivative(self.affine(j, x)) * wn;
        }
    }

    /// Serialize as text: a header `activation M dim seed`, then one line
    /// per feature holding `dim` weights followed by the bias, with enough
    /// digits for exact round-tripping.
    pub fn export_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {}",
            self.activation.name(),
            self.len(),
            self.dim,
            self.seed
        );
        for j in 0..self.len() {
            for w in self.weight_row(j) {
                let _ = write!(s, "{w:.16e} ");
            }
            let _ = writeln!(s, "{:.16e}", self.biases[j]);
        }
        s
    }

    /// Parse the `export_text` format.
    pub fn import_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or(Error::BasisParse {
            line: 0,
            msg: "empty basis file".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 {
            return Err(Error::BasisParse {
                line: ln,
                msg: "header must be 'activation M dim seed'".into(),
            });
        }
        let activation = Activation::parse(head[0]).map_err(|e| Error::BasisParse {
            line: ln,
            msg: e.to_string(),
        })?;
        let parse_count = |tok: &str, what: &str| -> Result<u64> {
            tok.parse().map_err(|_| Error::BasisParse {
                line: ln,
                msg: format!("bad {what} '{tok}'"),
            })
        };
        let m = parse_count(head[1], "feature count")? as usize;
        let dim = parse_count(head[2], "dimension")? as usize;
        let seed = parse_count(head[3], "seed")?;
        if m == 0 || dim == 0 {
            return Err(Error::BasisParse {
                line: ln,
                msg: "feature count and dimension must be positive".into(),
            });
        }
        let mut weights = Vec::with_capacity(m * dim);
        let mut biases = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or(Error::BasisParse {
                line: 0,
                msg: format!("expected {m} feature lines"),
            })?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::BasisParse {
                        line: ln,
                        msg: format!("bad number '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() != dim + 1 {
                return Err(Error::BasisParse {
                    line: ln,
                    msg: format!("expected {} values per line, found {}", dim + 1, vals.len()),
                });
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::BasisParse {
                    line: ln,
                    msg: "non-finite weight or bias".into(),
                });
            }
            weights.extend_from_slice(&vals[..dim]);
            biases.push(vals[dim]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::BasisParse {
                line: ln,
                msg: "trailing content after feature lines".into(),
            });
        }
        Ok(FeatureBasis {
            activation,
            dim,
            seed,
            weights,
            biases,
        })
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.export_text())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::import_text(&std::fs::read_to_string(path)?)
    }
}
