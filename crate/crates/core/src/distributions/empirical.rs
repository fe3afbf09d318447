use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::{BoxSupport, PiecewiseAffineValue};

/// Uniform mixture of `K` Dirac atoms, stored row-major as `K x p` values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    dim: usize,
    data: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Input(format!(
                "cannot split {} values into samples of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("samples must be finite".into()));
        }
        Ok(EmpiricalDistribution { dim, data })
    }

    /// One-dimensional samples.
    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms `K`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Concatenates atom lists (same dimension required).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a EmpiricalDistribution>) -> Result<Self> {
        let mut dim = None;
        let mut data = Vec::new();
        for part in parts {
            if *dim.get_or_insert(part.dim) != part.dim {
                return Err(Error::Input("cannot concatenate samples of different dimension".into()));
            }
            data.extend_from_slice(&part.data);
        }
        Self::new(dim.unwrap_or(0), data)
    }

    /// Empirical mean of `u` over the atoms.
    pub fn mean_of(&self, u: &PiecewiseAffineValue) -> Result<f64> {
        if u.dim() != self.dim {
            return Err(Error::Input(format!(
                "value dimension {} differs from sample dimension {}",
                u.dim(),
                self.dim
            )));
        }
        Ok(self.samples().map(|s| u.eval_unchecked(s)).sum::<f64>() / self.len() as f64)
    }

    pub fn check_support(&self, support: &BoxSupport) -> Result<()> {
        if support.dim() != self.dim {
            return Err(Error::Input("samples and support differ in dimension".into()));
        }
        if let Some((k, _)) = self
            .samples()
            .enumerate()
            .find(|(_, s)| !support.contains(s, 1e-12))
        {
            return Err(Error::Input(format!("sample {k} lies outside the support box")));
        }
        Ok(())
    }

    pub fn to_discrete(&self) -> DiscreteDistribution {
        let w = 1.0 / self.len() as f64;
        DiscreteDistribution {
            dim: self.dim,
            atoms: self.samples().map(|s| (s.to_vec(), w)).collect(),
        }
    }

    /// CSV with header `x1,...,xp` and one row per sample.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.dim).map(|j| format!("x{j}")))?;
        for s in self.samples() {
            w.write_record(s.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let dim = headers.len();
        for (j, h) in headers.iter().enumerate() {
            if h.trim() != format!("x{}", j + 1) {
                return Err(Error::Input(format!(
                    "unexpected CSV header `{h}` in column {}",
                    j + 1
                )));
            }
        }
        let mut data = Vec::new();
        for record in r.records() {
            let record = record?;
            for field in record.iter() {
                data.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::Input(format!("bad sample value `{field}`: {e}"))
                })?);
            }
        }
        Self::new(dim, data)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Finitely supported distribution with explicit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    dim: usize,
    atoms: Vec<(Vec<f64>, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let Some(dim) = atoms.first().map(|a| a.0.len()) else {
            return Err(Error::Input("distribution needs at least one atom".into()));
        };
        if dim == 0 || atoms.iter().any(|a| a.0.len() != dim) {
            return Err(Error::Input("atoms must share a nonzero dimension".into()));
        }
        if atoms.iter().any(|a| !(a.1 >= 0.0) || a.0.iter().any(|x| !x.is_finite())) {
            return Err(Error::Input("weights must be nonnegative and atoms finite".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { dim, atoms })
    }

    /// Equal weights on one-dimensional points.
    pub fn uniform_scalars(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let mut atoms: Vec<_> = points.iter().map(|&x| (vec![x], w)).collect();
        // Absorb rounding of 1/K in the last weight.
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if let Some(last) = atoms.last_mut() {
            last.1 += 1.0 - total;
        }
        Self::new(atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }

    pub fn check_support(&self, support: &BoxSupport) -> Result<()> {
        if self.atoms.iter().all(|a| support.contains(&a.0, 1e-12)) {
            Ok(())
        } else {
            Err(Error::Input("atom outside the support box".into()))
        }
    }
}
