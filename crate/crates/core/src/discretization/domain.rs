use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary treatment of a box domain.
///
/// `Wall` means homogeneous Neumann for the density and no-slip for the
/// velocity. Spectrally this is a cosine expansion for even-parity fields and
/// a sine expansion for odd-parity fields, realized by mirror extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Wall,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Wall => f.write_str("wall"),
        }
    }
}

/// Reflection symmetry of a field across the walls of one axis.
///
/// Only consulted on wall axes. Densities are even, no-slip velocity
/// components are odd, and every derivative flips the parity of its axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn times(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Serializable description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub resolution: Vec<usize>,
    pub bc: Boundary,
}

impl DomainSpec {
    pub fn new(dim: usize, lengths: &[f64], resolution: &[usize], bc: Boundary) -> Self {
        Self {
            dim,
            lengths: lengths.to_vec(),
            resolution: resolution.to_vec(),
            bc,
        }
    }

    pub fn build(&self) -> Result<Arc<Domain>> {
        Domain::new(self.clone())
    }
}

/// Structured box grid with cached FFT plans.
///
/// Nodes are ordered row-major with the first axis slowest. One-dimensional
/// domains carry a trivial second axis of length one.
pub struct Domain {
    spec: DomainSpec,
    shape: [usize; 2],
    lengths: [f64; 2],
    ext: [usize; 2],
    fwd: [Option<Arc<dyn Fft<f64>>>; 2],
    inv: [Option<Arc<dyn Fft<f64>>>; 2],
    weights: Vec<f64>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Builds a domain after checking the resolution rules.
pub fn make_domain(dim: usize, lengths: &[f64], resolution: &[usize], bc: Boundary) -> Result<Arc<Domain>> {
    Domain::new(DomainSpec::new(dim, lengths, resolution, bc))
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Arc<Self>> {
        if spec.dim != 1 && spec.dim != 2 {
            return Err(Error::BadResolution(format!(
                "dimension {} not supported (1 or 2)",
                spec.dim
            )));
        }
        if spec.lengths.len() != spec.dim || spec.resolution.len() != spec.dim {
            return Err(Error::BadResolution(format!(
                "expected {} lengths and resolutions, got {} and {}",
                spec.dim,
                spec.lengths.len(),
                spec.resolution.len()
            )));
        }
        for &n in &spec.resolution {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::BadResolution(format!(
                    "resolution {n} must be a power of two and at least 8"
                )));
            }
        }
        for &l in &spec.lengths {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::BadResolution(format!("length {l} must be positive")));
            }
        }

        let mut shape = [1usize; 2];
        let mut lengths = [1.0f64; 2];
        let mut ext = [1usize; 2];
        let mut planner = FftPlanner::<f64>::new();
        let mut fwd: [Option<Arc<dyn Fft<f64>>>; 2] = [None, None];
        let mut inv: [Option<Arc<dyn Fft<f64>>>; 2] = [None, None];
        for a in 0..spec.dim {
            shape[a] = spec.resolution[a];
            lengths[a] = spec.lengths[a];
            ext[a] = match spec.bc {
                Boundary::Periodic => shape[a],
                Boundary::Wall => 2 * (shape[a] - 1),
            };
            fwd[a] = Some(planner.plan_fft_forward(ext[a]));
            inv[a] = Some(planner.plan_fft_inverse(ext[a]));
        }

        let axis_weights = |a: usize| -> Vec<f64> {
            let n = shape[a];
            if a >= spec.dim {
                return vec![1.0];
            }
            match spec.bc {
                Boundary::Periodic => vec![lengths[a] / n as f64; n],
                Boundary::Wall => {
                    let h = lengths[a] / (n - 1) as f64;
                    let mut w = vec![h; n];
                    w[0] = 0.5 * h;
                    w[n - 1] = 0.5 * h;
                    w
                }
            }
        };
        let wx = axis_weights(0);
        let wy = axis_weights(1);
        let mut weights = Vec::with_capacity(shape[0] * shape[1]);
        for &a in &wx {
            for &b in &wy {
                weights.push(a * b);
            }
        }

        Ok(Arc::new(Self {
            spec,
            shape,
            lengths,
            ext,
            fwd,
            inv,
            weights,
        }))
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn bc(&self) -> Boundary {
        self.spec.bc
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn volume(&self) -> f64 {
        self.lengths[..self.dim()].iter().product()
    }

    /// Quadrature weights: uniform on periodic axes, trapezoidal on wall axes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        match self.spec.bc {
            Boundary::Periodic => self.lengths[axis] / self.shape[axis] as f64,
            Boundary::Wall => self.lengths[axis] / (self.shape[axis] - 1) as f64,
        }
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        if axis >= self.dim() {
            return vec![0.0];
        }
        let h = self.spacing(axis);
        (0..self.shape[axis]).map(|i| i as f64 * h).collect()
    }

    /// Physical position of flat node `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ix = idx / self.shape[1];
        let iy = idx % self.shape[1];
        let y = if self.dim() > 1 {
            iy as f64 * self.spacing(1)
        } else {
            0.0
        };
        [ix as f64 * self.spacing(0), y]
    }

    /// Whether node `idx` lies on a wall.
    pub fn is_boundary_node(&self, idx: usize) -> bool {
        if self.spec.bc != Boundary::Wall {
            return false;
        }
        let ix = idx / self.shape[1];
        let iy = idx % self.shape[1];
        let on = |i: usize, a: usize| i == 0 || i == self.shape[a] - 1;
        on(ix, 0) || (self.dim() > 1 && on(iy, 1))
    }

    /// Extended (periodized) transform sizes.
    pub(crate) fn ext(&self) -> [usize; 2] {
        self.ext
    }

    /// Signed mode index for transform bin `m` on `axis`.
    pub(crate) fn signed_mode(&self, axis: usize, m: usize) -> i64 {
        let n = self.ext[axis];
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    pub(crate) fn is_nyquist(&self, axis: usize, m: usize) -> bool {
        let n = self.ext[axis];
        n > 1 && n.is_multiple_of(2) && m == n / 2
    }

    /// Angular wavenumber of transform bin `m` on `axis`.
    pub(crate) fn wavenumber(&self, axis: usize, m: usize) -> f64 {
        if axis >= self.dim() {
            return 0.0;
        }
        let period = match self.spec.bc {
            Boundary::Periodic => self.lengths[axis],
            Boundary::Wall => 2.0 * self.lengths[axis],
        };
        2.0 * std::f64::consts::PI * self.signed_mode(axis, m) as f64 / period
    }

    /// Mirror-extends grid values according to `parity` and returns their
    /// unnormalized discrete Fourier transform.
    pub(crate) fn forward(&self, values: &[f64], parity: [Parity; 2]) -> Vec<Complex64> {
        let [nx, ny] = self.shape;
        let [mx, my] = self.ext;
        let wall = self.spec.bc == Boundary::Wall;
        let mut buf = vec![Complex64::new(0.0, 0.0); mx * my];
        let mirror = |e: usize, n: usize, m: usize, p: Parity| -> (usize, f64) {
            if !wall || m == 1 || e < n {
                (e, 1.0)
            } else {
                (m - e, p.sign())
            }
        };
        for ex in 0..mx {
            let (ix, sx) = mirror(ex, nx, mx, parity[0]);
            for ey in 0..my {
                let (iy, sy) = mirror(ey, ny, my, parity[1]);
                buf[ex * my + ey] = Complex64::new(sx * sy * values[ix * ny + iy], 0.0);
            }
        }
        self.transform(&mut buf, true);
        buf
    }

    /// Inverse of [`Domain::forward`]: normalizes and restricts to the grid.
    pub(crate) fn backward(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        let [nx, ny] = self.shape;
        let [mx, my] = self.ext;
        self.transform(&mut buf, false);
        let scale = 1.0 / (mx * my) as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            for iy in 0..ny {
                out.push(buf[ix * my + iy].re * scale);
            }
        }
        out
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let [mx, my] = self.ext;
        let plans = if forward { &self.fwd } else { &self.inv };
        if let Some(plan) = &plans[1] {
            for row in buf.chunks_exact_mut(my) {
                plan.process(row);
            }
        }
        if let Some(plan) = &plans[0] {
            if my == 1 {
                plan.process(buf);
            } else {
                let mut col = vec![Complex64::new(0.0, 0.0); mx];
                for ey in 0..my {
                    for ex in 0..mx {
                        col[ex] = buf[ex * my + ey];
                    }
                    plan.process(&mut col);
                    for ex in 0..mx {
                        buf[ex * my + ey] = col[ex];
                    }
                }
            }
        }
    }
}
