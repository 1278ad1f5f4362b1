use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::domain::{Domain, Parity};
use crate::error::{Error, Result};

/// Nodal values of a scalar function on a [`Domain`].
///
/// The Fourier coefficients of the mirror-extended values are computed on
/// first use and cached.
#[derive(Debug)]
pub struct ScalarField {
    domain: Arc<Domain>,
    values: Vec<f64>,
    parity: [Parity; 2],
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            domain: self.domain.clone(),
            values: self.values.clone(),
            parity: self.parity,
            spectrum,
        }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.values == other.values && self.parity == other.parity
    }
}

impl ScalarField {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        Self::with_parity(domain, values, [Parity::Even; 2])
    }

    pub fn with_parity(domain: Arc<Domain>, values: Vec<f64>, parity: [Parity; 2]) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            domain,
            values,
            parity,
            spectrum: OnceLock::new(),
        })
    }

    pub(crate) fn raw(domain: Arc<Domain>, values: Vec<f64>, parity: [Parity; 2]) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self {
            domain,
            values,
            parity,
            spectrum: OnceLock::new(),
        }
    }

    pub fn constant(domain: &Arc<Domain>, c: f64) -> Self {
        Self::raw(domain.clone(), vec![c; domain.len()], [Parity::Even; 2])
    }

    pub fn zeros(domain: &Arc<Domain>) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Samples `f` at every node. Even parity.
    pub fn from_fn(domain: &Arc<Domain>, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn_with_parity(domain, [Parity::Even; 2], f)
    }

    pub fn from_fn_with_parity(domain: &Arc<Domain>, parity: [Parity; 2], f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.point(i))).collect();
        Self::raw(domain.clone(), values, parity)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn parity(&self) -> [Parity; 2] {
        self.parity
    }

    pub fn set_parity(mut self, parity: [Parity; 2]) -> Self {
        self.parity = parity;
        self.spectrum = OnceLock::new();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Cached Fourier coefficients of the (mirror-extended) field.
    pub fn spectrum(&self) -> Arc<Vec<Complex64>> {
        self.spectrum
            .get_or_init(|| Arc::new(self.domain.forward(&self.values, self.parity)))
            .clone()
    }

    pub fn same_domain(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// Pointwise map; the result is even-parity (functions of densities).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::raw(
            self.domain.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            [Parity::Even; 2],
        )
    }

    /// Pointwise map that keeps the parity tag (odd functions of the value).
    pub fn map_keep_parity(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::raw(
            self.domain.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.parity,
        )
    }

    pub fn zip_map(&self, other: &ScalarField, parity: [Parity; 2], f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.len(), other.len());
        Self::raw(
            self.domain.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            parity,
        )
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let p = [
            self.parity[0].times(other.parity[0]),
            self.parity[1].times(other.parity[1]),
        ];
        self.zip_map(other, p, |a, b| a * b)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, self.parity, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, self.parity, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map_keep_parity(|v| c * v)
    }

    /// Discrete L² norm under the domain quadrature.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.domain.weights())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A vector field: one scalar block per spatial component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        let dim = first.domain().dim();
        if components.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: components.len(),
            });
        }
        for c in &components[1..] {
            first.same_domain(c)?;
        }
        Ok(Self { components })
    }

    pub(crate) fn raw(components: Vec<ScalarField>) -> Self {
        Self { components }
    }

    /// Zero velocity-like field: components odd across their walls.
    pub fn zeros(domain: &Arc<Domain>) -> Self {
        let comps = (0..domain.dim())
            .map(|_| ScalarField::raw(domain.clone(), vec![0.0; domain.len()], velocity_parity(domain)))
            .collect();
        Self { components: comps }
    }

    /// Samples a velocity-like vector function; components get no-slip parity.
    pub fn from_fn(domain: &Arc<Domain>, f: impl Fn([f64; 2], usize) -> f64) -> Self {
        let comps = (0..domain.dim())
            .map(|c| ScalarField::from_fn_with_parity(domain, velocity_parity(domain), |x| f(x, c)))
            .collect();
        Self { components: comps }
    }

    pub fn from_values(domain: &Arc<Domain>, blocks: Vec<Vec<f64>>) -> Result<Self> {
        let comps = blocks
            .into_iter()
            .map(|b| ScalarField::with_parity(domain.clone(), b, velocity_parity(domain)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.components[0].domain()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    /// Concatenated component blocks.
    pub fn flat_values(&self) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.values().iter().copied())
            .collect()
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> VectorField {
        self.map_components(|x| x.scale(c))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Multiplies every component by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> VectorField {
        self.map_components(|c| c.mul(s))
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let mut acc = self.components[0].mul(&other.components[0]);
        for (a, b) in self.components.iter().zip(&other.components).skip(1) {
            acc = acc.add(&a.mul(b));
        }
        acc
    }

    /// Pointwise squared magnitude |v|².
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.norm_sq().values().iter().fold(0.0f64, |m, &v| m.max(v.sqrt()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// Parity of no-slip velocity components: odd across every wall.
pub fn velocity_parity(domain: &Domain) -> [Parity; 2] {
    match domain.dim() {
        1 => [Parity::Odd, Parity::Even],
        _ => [Parity::Odd, Parity::Odd],
    }
}

/// A d×d tensor field stored row-major: `T[i][j]` at `i * d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    dim: usize,
    components: Vec<ScalarField>,
}

impl TensorField {
    pub fn new(dim: usize, components: Vec<ScalarField>) -> Result<Self> {
        if components.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: components.len(),
            });
        }
        for c in &components[1..] {
            components[0].same_domain(c)?;
        }
        Ok(Self { dim, components })
    }

    pub(crate) fn raw(dim: usize, components: Vec<ScalarField>) -> Self {
        debug_assert_eq!(components.len(), dim * dim);
        Self { dim, components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.components[0].domain()
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.components[i * self.dim + j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn transpose(&self) -> TensorField {
        let d = self.dim;
        let comps = (0..d * d).map(|k| self.get(k % d, k / d).clone()).collect();
        Self::raw(d, comps)
    }

    pub fn add(&self, other: &TensorField) -> TensorField {
        Self::raw(
            self.dim,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &TensorField) -> TensorField {
        Self::raw(
            self.dim,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> TensorField {
        Self::raw(self.dim, self.components.iter().map(|x| x.scale(c)).collect())
    }

    pub fn trace(&self) -> ScalarField {
        let mut acc = self.get(0, 0).clone();
        for i in 1..self.dim {
            acc = acc.add(self.get(i, i));
        }
        acc
    }

    /// Pointwise Frobenius contraction A:B.
    pub fn contract(&self, other: &TensorField) -> ScalarField {
        let mut acc = self.components[0].mul(&other.components[0]);
        for (a, b) in self.components.iter().zip(&other.components).skip(1) {
            acc = acc.add(&a.mul(b));
        }
        acc
    }

    /// Outer product a⊗b.
    pub fn outer(a: &VectorField, b: &VectorField) -> TensorField {
        let d = a.dim();
        let comps = (0..d * d).map(|k| a.component(k / d).mul(b.component(k % d))).collect();
        Self::raw(d, comps)
    }

    /// s·𝕀 for a scalar field s.
    pub fn isotropic(s: &ScalarField, dim: usize) -> TensorField {
        let zero = s.scale(0.0);
        let comps = (0..dim * dim)
            .map(|k| if k / dim == k % dim { s.clone() } else { zero.clone() })
            .collect();
        Self::raw(dim, comps)
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    /// max |T_ij − T_ji| over nodes and index pairs.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut m = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                for (a, b) in self.get(i, j).values().iter().zip(self.get(j, i).values()) {
                    m = m.max((a - b).abs());
                }
            }
        }
        m
    }
}
