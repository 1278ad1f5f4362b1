//! Spectral differential operators and quadrature.
//!
//! Every operator works on the mirror-extended field, so one code path
//! covers periodic axes (plain Fourier series) and wall axes (cosine series
//! for even fields, sine series for odd fields). Odd-order derivatives drop
//! the Nyquist bin so that the discrete derivative stays real and
//! skew-adjoint under the grid quadrature.

use num_complex::Complex64;

use super::domain::Parity;
use super::field::{ScalarField, TensorField, VectorField};
use crate::error::Result;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// ∂f/∂x_axis.
pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let d = f.domain().clone();
    let mut parity = f.parity();
    if axis >= d.dim() {
        return f.scale(0.0);
    }
    parity[axis] = parity[axis].flip();
    let spec = f.spectrum();
    let [mx, my] = d.ext();
    let mut buf = (*spec).clone();
    for ex in 0..mx {
        for ey in 0..my {
            let m = if axis == 0 { ex } else { ey };
            let factor = if d.is_nyquist(axis, m) {
                zero()
            } else {
                Complex64::new(0.0, d.wavenumber(axis, m))
            };
            buf[ex * my + ey] *= factor;
        }
    }
    ScalarField::raw(d.clone(), d.backward(buf), parity)
}

/// ∂²f/∂x_a∂x_b.
pub fn second_derivative(f: &ScalarField, a: usize, b: usize) -> ScalarField {
    let d = f.domain().clone();
    if a >= d.dim() || b >= d.dim() {
        return f.scale(0.0);
    }
    if a != b {
        return derivative(&derivative(f, a), b);
    }
    let spec = f.spectrum();
    let [mx, my] = d.ext();
    let mut buf = (*spec).clone();
    for ex in 0..mx {
        for ey in 0..my {
            let m = if a == 0 { ex } else { ey };
            let k = d.wavenumber(a, m);
            buf[ex * my + ey] *= -k * k;
        }
    }
    ScalarField::raw(d.clone(), d.backward(buf), f.parity())
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let dim = f.domain().dim();
    VectorField::raw((0..dim).map(|a| derivative(f, a)).collect())
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut acc = derivative(v.component(0), 0);
    for a in 1..v.dim() {
        acc = acc.add(&derivative(v.component(a), a));
    }
    acc
}

/// Δf with the exact spectral symbol −|κ|².
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let d = f.domain().clone();
    let [mx, my] = d.ext();
    let mut buf = (*f.spectrum()).clone();
    for ex in 0..mx {
        let kx = d.wavenumber(0, ex);
        for ey in 0..my {
            let ky = d.wavenumber(1, ey);
            buf[ex * my + ey] *= -(kx * kx + ky * ky);
        }
    }
    ScalarField::raw(d.clone(), d.backward(buf), f.parity())
}

/// ∇²f as a symmetric tensor.
pub fn hessian(f: &ScalarField) -> TensorField {
    let dim = f.domain().dim();
    let mut comps = vec![None; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let h = second_derivative(f, i, j);
            comps[j * dim + i] = Some(h.clone());
            comps[i * dim + j] = Some(h);
        }
    }
    TensorField::raw(dim, comps.into_iter().map(Option::unwrap).collect())
}

/// Velocity gradient `(∇v)_ij = ∂_j v_i`.
pub fn grad_vec(v: &VectorField) -> TensorField {
    let dim = v.dim();
    let comps = (0..dim * dim)
        .map(|k| derivative(v.component(k / dim), k % dim))
        .collect();
    TensorField::raw(dim, comps)
}

/// Row divergence `(div A)_i = Σ_j ∂_j A_ij`.
pub fn div_tensor(t: &TensorField) -> VectorField {
    let dim = t.dim();
    let comps = (0..dim)
        .map(|i| {
            let mut acc = derivative(t.get(i, 0), 0);
            for j in 1..dim {
                acc = acc.add(&derivative(t.get(i, j), j));
            }
            acc
        })
        .collect();
    VectorField::raw(comps)
}

/// ∫_Ω f dx by the domain quadrature (spectrally exact for band-limited
/// fields on periodic axes).
pub fn integrate(f: &ScalarField) -> f64 {
    f.values().iter().zip(f.domain().weights()).map(|(v, w)| v * w).sum()
}

/// ∫_Ω f·g dx.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    f.values()
        .iter()
        .zip(g.values())
        .zip(f.domain().weights())
        .map(|((a, b), w)| a * b * w)
        .sum()
}

/// ∫_Ω v·w dx for vector fields.
pub fn inner_vec(v: &VectorField, w: &VectorField) -> f64 {
    v.components()
        .iter()
        .zip(w.components())
        .map(|(a, b)| inner(a, b))
        .sum()
}

fn keeps_two_thirds(d: &super::Domain, axis: usize, m: usize) -> bool {
    if axis >= d.dim() {
        return true;
    }
    let n = d.ext()[axis] as i64;
    3 * d.signed_mode(axis, m).abs() <= n
}

/// Two-thirds-rule truncation: zeroes every mode above two thirds of the
/// Nyquist wavenumber on any axis.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let d = f.domain().clone();
    let [mx, my] = d.ext();
    let mut buf = (*f.spectrum()).clone();
    for ex in 0..mx {
        for ey in 0..my {
            if !(keeps_two_thirds(&d, 0, ex) && keeps_two_thirds(&d, 1, ey)) {
                buf[ex * my + ey] = zero();
            }
        }
    }
    ScalarField::raw(d.clone(), d.backward(buf), f.parity())
}

pub fn dealias_vec(v: &VectorField) -> VectorField {
    v.map_components(dealias)
}

/// Fraction of the absolute coefficient mass sitting in the upper third of
/// the spectrum. Zero for the zero field.
pub fn spectral_tail(f: &ScalarField) -> f64 {
    let d = f.domain();
    let [mx, my] = d.ext();
    let spec = f.spectrum();
    let mut total = 0.0;
    let mut tail = 0.0;
    for ex in 0..mx {
        for ey in 0..my {
            let a = spec[ex * my + ey].norm();
            total += a;
            if !(keeps_two_thirds(d, 0, ex) && keeps_two_thirds(d, 1, ey)) {
                tail += a;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Solves (I − αΔ) g = f spectrally.
pub fn helmholtz_solve(f: &ScalarField, alpha: f64) -> ScalarField {
    if alpha == 0.0 {
        return f.clone();
    }
    let d = f.domain().clone();
    let [mx, my] = d.ext();
    let mut buf = (*f.spectrum()).clone();
    for ex in 0..mx {
        let kx = d.wavenumber(0, ex);
        for ey in 0..my {
            let ky = d.wavenumber(1, ey);
            buf[ex * my + ey] /= 1.0 + alpha * (kx * kx + ky * ky);
        }
    }
    ScalarField::raw(d.clone(), d.backward(buf), f.parity())
}

fn neg_sobolev_sq(f: &ScalarField, k: u32) -> f64 {
    let d = f.domain();
    let [mx, my] = d.ext();
    let spec = f.spectrum();
    let norm = 1.0 / (mx * my) as f64;
    let mut acc = 0.0;
    for ex in 0..mx {
        let kx = d.wavenumber(0, ex);
        for ey in 0..my {
            let ky = d.wavenumber(1, ey);
            let c = spec[ex * my + ey] * norm;
            acc += (1.0 + kx * kx + ky * ky).powi(-(k as i32)) * c.norm_sqr();
        }
    }
    acc * d.volume()
}

/// W^{-k,2} norm: (Σ_κ (1+|κ|²)^{-k} |f̂_κ|²)^{1/2}, normalized so that
/// k = 0 reproduces the L² norm on Ω. Wall axes use the mirror extension.
pub fn negative_sobolev_norm(f: &ScalarField, k: u32) -> f64 {
    neg_sobolev_sq(f, k).sqrt()
}

pub fn negative_sobolev_norm_vec(v: &VectorField, k: u32) -> f64 {
    v.components().iter().map(|c| neg_sobolev_sq(c, k)).sum::<f64>().sqrt()
}

/// Default trajectory-metric order ⌈d/2⌉ + 2 (strictly above d/2 + 1).
pub fn default_sobolev_order(dim: usize) -> u32 {
    dim.div_ceil(2) as u32 + 2
}

/// Checks that two fields share a domain.
pub fn check_same(a: &ScalarField, b: &ScalarField) -> Result<()> {
    a.same_domain(b)
}

/// Parity of a pointwise product.
pub fn product_parity(a: [Parity; 2], b: [Parity; 2]) -> [Parity; 2] {
    [a[0].times(b[0]), a[1].times(b[1])]
}
