use std::f64::consts::PI;
use std::sync::Arc;

use super::domain::{Boundary, Domain};
use super::field::{ScalarField, TensorField, VectorField};
use super::ops;
use crate::error::{Error, Result};

/// One vector mode of the Galerkin space together with the derivatives the
/// weak momentum balance needs.
#[derive(Debug, Clone)]
pub struct BasisMode {
    pub label: String,
    pub w: VectorField,
    /// `(∇w)_ij = ∂_j w_i`
    pub grad: TensorField,
    /// div ∇ᵀw = ∇(div w)
    pub grad_div: VectorField,
}

/// Finite-dimensional velocity space Xₙ spanned by L²-orthonormal modes.
///
/// Periodic domains use Fourier vector modes ordered by wavenumber; wall
/// domains use tensorized sine modes, which vanish on the walls.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    domain: Arc<Domain>,
    modes: Vec<BasisMode>,
    mean_modes: bool,
    cutoff: usize,
}

#[derive(Debug, Clone, Copy)]
enum Trig {
    Const,
    Cos,
    Sin,
}

/// Builds the `n` lowest-frequency modes compatible with the boundary mode.
/// The constant (mean-flow) modes are excluded.
pub fn galerkin_basis(domain: &Arc<Domain>, n: usize) -> Result<GalerkinBasis> {
    GalerkinBasis::build(domain, n, false)
}

impl GalerkinBasis {
    /// Same as [`galerkin_basis`] but, on periodic domains, starts with the
    /// `d` constant modes so uniform drifts are representable.
    pub fn with_mean_modes(domain: &Arc<Domain>, n: usize) -> Result<Self> {
        if domain.bc() != Boundary::Periodic {
            return Err(Error::Invalid("mean-flow modes only exist on periodic domains".into()));
        }
        Self::build(domain, n, true)
    }

    fn build(domain: &Arc<Domain>, n: usize, mean_modes: bool) -> Result<Self> {
        let shape = domain.shape();
        let max = (0..domain.dim()).map(|a| shape[a] / 2).min().unwrap_or(0);
        if n == 0 || n > max {
            return Err(Error::TooManyModes { requested: n, max });
        }
        let specs = match domain.bc() {
            Boundary::Periodic => periodic_specs(domain, n, mean_modes),
            Boundary::Wall => wall_specs(domain, n),
        };
        let modes = specs
            .into_iter()
            .map(|(label, w)| {
                let grad = ops::grad_vec(&w);
                let grad_div = ops::gradient(&ops::divergence(&w));
                BasisMode {
                    label,
                    w,
                    grad,
                    grad_div,
                }
            })
            .collect();
        Ok(Self {
            domain: domain.clone(),
            modes,
            mean_modes,
            cutoff: n,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// The `n` the basis was built with.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn has_mean_modes(&self) -> bool {
        self.mean_modes
    }

    pub fn modes(&self) -> &[BasisMode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &BasisMode {
        &self.modes[i]
    }

    /// Gram matrix ⟨wᵢ, wⱼ⟩, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = ops::inner_vec(&self.modes[i].w, &self.modes[j].w);
            }
        }
        g
    }

    fn check(&self, v: &VectorField) -> Result<()> {
        if **v.domain() != *self.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// Orthogonal projection coefficients ⟨v, wᵢ⟩.
    pub fn project(&self, v: &VectorField) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self.modes.iter().map(|m| ops::inner_vec(v, &m.w)).collect())
    }

    /// Σ cᵢ wᵢ.
    pub fn reconstruct(&self, c: &[f64]) -> Result<VectorField> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        let d = &self.domain;
        let dim = d.dim();
        let mut blocks = vec![vec![0.0; d.len()]; dim];
        for (ci, m) in c.iter().zip(&self.modes) {
            if *ci == 0.0 {
                continue;
            }
            for (b, comp) in blocks.iter_mut().zip(m.w.components()) {
                for (x, w) in b.iter_mut().zip(comp.values()) {
                    *x += ci * w;
                }
            }
        }
        let parity = super::field::velocity_parity(d);
        Ok(VectorField::raw(
            blocks
                .into_iter()
                .map(|b| ScalarField::raw(d.clone(), b, parity))
                .collect(),
        ))
    }

    /// ∇u for u = Σ cᵢ wᵢ, assembled from stored mode gradients.
    pub fn reconstruct_grad(&self, c: &[f64]) -> TensorField {
        let d = &self.domain;
        let dim = d.dim();
        let mut blocks = vec![vec![0.0; d.len()]; dim * dim];
        let mut parities = vec![[super::Parity::Even; 2]; dim * dim];
        for (ci, m) in c.iter().zip(&self.modes) {
            for (k, comp) in m.grad.components().iter().enumerate() {
                parities[k] = comp.parity();
                if *ci == 0.0 {
                    continue;
                }
                for (x, w) in blocks[k].iter_mut().zip(comp.values()) {
                    *x += ci * w;
                }
            }
        }
        TensorField::raw(
            dim,
            blocks
                .into_iter()
                .zip(parities)
                .map(|(b, p)| ScalarField::raw(d.clone(), b, p))
                .collect(),
        )
    }
}

fn periodic_specs(domain: &Arc<Domain>, n: usize, mean_modes: bool) -> Vec<(String, VectorField)> {
    let dim = domain.dim();
    let lx = domain.length(0);
    let ly = if dim > 1 { domain.length(1) } else { 1.0 };
    let vol = domain.volume();
    let shape = domain.shape();
    let kmax = [shape[0] as i64 / 2, if dim > 1 { shape[1] as i64 / 2 } else { 0 }];

    // (|κ|², mx, my, trig, component)
    let mut cands: Vec<(f64, i64, i64, u8, usize)> = Vec::new();
    if mean_modes {
        for c in 0..dim {
            cands.push((-1.0, 0, 0, 0, c));
        }
    }
    let my_range = if dim > 1 { -kmax[1] + 1..kmax[1] } else { 0..1 };
    for mx in 0..kmax[0] {
        for my in my_range.clone() {
            if mx == 0 && my <= 0 {
                continue;
            }
            let kx = 2.0 * PI * mx as f64 / lx;
            let ky = 2.0 * PI * my as f64 / ly;
            let k2 = kx * kx + ky * ky;
            for trig in [1u8, 2] {
                for c in 0..dim {
                    cands.push((k2, mx, my, trig, c));
                }
            }
        }
    }
    cands.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.abs().cmp(&b.2.abs()))
            .then(b.2.cmp(&a.2))
            .then(a.3.cmp(&b.3))
            .then(a.4.cmp(&b.4))
    });
    cands
        .into_iter()
        .take(n)
        .map(|(_, mx, my, trig, comp)| {
            let trig = match trig {
                0 => Trig::Const,
                1 => Trig::Cos,
                _ => Trig::Sin,
            };
            let (amp, kx, ky) = match trig {
                Trig::Const => (1.0 / vol.sqrt(), 0.0, 0.0),
                _ => ((2.0 / vol).sqrt(), 2.0 * PI * mx as f64 / lx, 2.0 * PI * my as f64 / ly),
            };
            let w = VectorField::from_fn(domain, |x, c| {
                if c != comp {
                    return 0.0;
                }
                let phase = kx * x[0] + ky * x[1];
                match trig {
                    Trig::Const => amp,
                    Trig::Cos => amp * phase.cos(),
                    Trig::Sin => amp * phase.sin(),
                }
            });
            let name = match trig {
                Trig::Const => "const",
                Trig::Cos => "cos",
                Trig::Sin => "sin",
            };
            (format!("{name}({mx},{my})e{comp}"), w)
        })
        .collect()
}

fn wall_specs(domain: &Arc<Domain>, n: usize) -> Vec<(String, VectorField)> {
    let dim = domain.dim();
    let shape = domain.shape();
    let lx = domain.length(0);
    let ly = if dim > 1 { domain.length(1) } else { 1.0 };
    let vol = domain.volume();
    let amp = (2f64.powi(dim as i32) / vol).sqrt();
    let mmax = [shape[0] - 1, if dim > 1 { shape[1] - 1 } else { 1 }];

    let mut cands: Vec<(f64, usize, usize, usize)> = Vec::new();
    for m1 in 1..mmax[0] {
        let m2_range = if dim > 1 { 1..mmax[1] } else { 0..1 };
        for m2 in m2_range {
            let k2 = (m1 as f64 / lx).powi(2) + (m2 as f64 / ly).powi(2);
            for c in 0..dim {
                cands.push((k2, m1, m2, c));
            }
        }
    }
    cands.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    cands
        .into_iter()
        .take(n)
        .map(|(_, m1, m2, comp)| {
            let mut w = VectorField::from_fn(domain, |x, c| {
                if c != comp {
                    return 0.0;
                }
                let sx = (PI * m1 as f64 * x[0] / lx).sin();
                let sy = if dim > 1 {
                    (PI * m2 as f64 * x[1] / ly).sin()
                } else {
                    1.0
                };
                amp * sx * sy
            });
            // pin wall nodes to exact zeros
            let comps: Vec<ScalarField> = w
                .into_components()
                .into_iter()
                .map(|s| {
                    let p = s.parity();
                    let vals = s
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| if domain.is_boundary_node(i) { 0.0 } else { v })
                        .collect();
                    ScalarField::raw(domain.clone(), vals, p)
                })
                .collect();
            w = VectorField::raw(comps);
            (format!("sin({m1},{m2})e{comp}"), w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_domain;

    fn assert_identity(g: &[f64], n: usize) {
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * n + j] - e).abs() < 1e-10, "gram[{i},{j}] = {}", g[i * n + j]);
            }
        }
    }

    #[test]
    fn single_periodic_mode_is_normalized() {
        let d = make_domain(1, &[2.0 * PI], &[16], Boundary::Periodic).unwrap();
        let b = galerkin_basis(&d, 1).unwrap();
        assert_eq!(b.len(), 1);
        assert!((ops::inner_vec(&b.mode(0).w, &b.mode(0).w) - 1.0).abs() < 1e-12);
        // constant-free: mean of the mode vanishes
        assert!(ops::integrate(b.mode(0).w.component(0)).abs() < 1e-12);
    }

    #[test]
    fn gram_is_identity_everywhere() {
        let cases = [
            (1, Boundary::Periodic, 8usize),
            (1, Boundary::Wall, 8),
            (2, Boundary::Periodic, 12),
            (2, Boundary::Wall, 10),
        ];
        for (dim, bc, n) in cases {
            let d = make_domain(dim, &vec![1.7; dim], &vec![32; dim], bc).unwrap();
            let b = galerkin_basis(&d, n).unwrap();
            assert_eq!(b.len(), n);
            assert_identity(&b.gram(), n);
        }
        let d = make_domain(2, &[1.0, 2.0], &[16, 16], Boundary::Periodic).unwrap();
        let b = GalerkinBasis::with_mean_modes(&d, 6).unwrap();
        assert_identity(&b.gram(), 6);
    }

    #[test]
    fn wall_modes_vanish_on_boundary() {
        let d = make_domain(1, &[1.0], &[32], Boundary::Wall).unwrap();
        let b = galerkin_basis(&d, 4).unwrap();
        for m in b.modes() {
            let v = m.w.component(0).values();
            assert_eq!(v[0], 0.0);
            assert_eq!(v[v.len() - 1], 0.0);
        }
        let d2 = make_domain(2, &[1.0, 1.0], &[16, 16], Boundary::Wall).unwrap();
        let b2 = galerkin_basis(&d2, 4).unwrap();
        for m in b2.modes() {
            for c in m.w.components() {
                for (i, v) in c.values().iter().enumerate() {
                    if d2.is_boundary_node(i) {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn too_many_modes() {
        let d = make_domain(1, &[1.0], &[16], Boundary::Periodic).unwrap();
        assert!(matches!(
            galerkin_basis(&d, 9),
            Err(Error::TooManyModes { requested: 9, max: 8 })
        ));
    }

    #[test]
    fn project_reconstruct_roundtrip() {
        let d = make_domain(1, &[2.0 * PI], &[32], Boundary::Periodic).unwrap();
        let b = galerkin_basis(&d, 6).unwrap();
        let e2 = b.project(&b.mode(2).w).unwrap();
        for (i, c) in e2.iter().enumerate() {
            assert!((c - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let z = b.reconstruct(&[0.0; 6]).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }
}
