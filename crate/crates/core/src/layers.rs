//! Layer families and their forward/backward kernels.
//!
//! Three kinds of layer share one interface:
//!
//! - affine: `z = b + W·a`
//! - quadratic: `z = b + (W + V)·a` where row `k` of `V` is `aᵀQ^k`
//!   (one symmetric matrix `Q^k` per neuron)
//! - reduced-parameter quadratic (RPQ): `z = (W·a + b) ⊙ (U·a + c)`
//!
//! Forward passes cache whatever backward needs (`V` for quadratic layers,
//! the two affine factors `v1`/`v2` for RPQ layers), so backward never
//! repeats the expensive products. Backward returns the input delta
//! *without* the previous layer's activation derivative; the network applies
//! `g'(z^{l-1})` itself, since that `z` lives in the previous layer's cache.

use std::fmt;
use std::str::FromStr;

#[cfg(debug_assertions)]
use std::cell::Cell;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::tensor::{m_matrix, Matrix, Rng, Vector};

#[cfg(debug_assertions)]
thread_local! {
    static Q_VEC_PRODUCTS: Cell<u64> = const { Cell::new(0) };
}

/// Number of `Q`-matrix-by-vector products performed on this thread so far.
/// Only maintained in debug-assertion builds; the acceptance suite uses it to
/// show that backward passes never touch the `Q` matrices.
#[cfg(debug_assertions)]
pub fn q_vec_product_count() -> u64 {
    Q_VEC_PRODUCTS.with(|c| c.get())
}

#[cfg(debug_assertions)]
fn count_q_vec_product() {
    Q_VEC_PRODUCTS.with(|c| c.set(c.get() + 1));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Affine,
    Quadratic,
    Rpq,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LayerKind::Affine => "affine",
            LayerKind::Quadratic => "quadratic",
            LayerKind::Rpq => "rpq",
        };
        f.write_str(name)
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(LayerKind::Affine),
            "quadratic" => Ok(LayerKind::Quadratic),
            "rpq" => Ok(LayerKind::Rpq),
            other => Err(Error::format(format!("unknown layer kind '{other}'"))),
        }
    }
}

/// Initialization scheme for the quadratic matrices `Q^k`.
#[derive(Clone, Debug)]
pub enum QInit<T> {
    Zero,
    Identity,
    /// `Q = scale · (R + Rᵀ)/2` with `R` entries uniform in `(-1, 1)`.
    /// Inside `init_layer` the scale is additionally multiplied by the
    /// weight range `1/√n_in`.
    SymmetricRandom(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineLayer<T> {
    pub w: Matrix<T>,
    pub b: Vector<T>,
    pub act: ActivationKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticLayer<T> {
    pub w: Matrix<T>,
    pub b: Vector<T>,
    /// One symmetric `n_in × n_in` matrix per neuron.
    pub q: Vec<Matrix<T>>,
    pub act: ActivationKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpqLayer<T> {
    pub w: Matrix<T>,
    pub b: Vector<T>,
    pub u: Matrix<T>,
    pub c: Vector<T>,
    pub act: ActivationKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Affine(AffineLayer<T>),
    Quadratic(QuadraticLayer<T>),
    Rpq(RpqLayer<T>),
}

/// Forward-pass cache consumed by the matching backward pass.
#[derive(Clone, Debug)]
pub struct LayerCache<T> {
    pub a_in: Vector<T>,
    pub z: Vector<T>,
    pub a_out: Vector<T>,
    pub detail: CacheDetail<T>,
}

#[derive(Clone, Debug)]
pub enum CacheDetail<T> {
    Affine,
    /// Row `k` is `a_inᵀ Q^k`; reused transposed in backward.
    Quadratic { v: Matrix<T> },
    /// The two affine factors `v1 = W·a + b` and `v2 = U·a + c`.
    Rpq { v1: Vector<T>, v2: Vector<T> },
}

#[derive(Clone, Debug)]
pub enum LayerGrads<T> {
    Affine { dw: Matrix<T>, db: Vector<T> },
    Quadratic { dw: Matrix<T>, db: Vector<T>, dq: Vec<Matrix<T>> },
    Rpq { dw: Matrix<T>, db: Vector<T>, du: Matrix<T>, dc: Vector<T> },
}

/// Parameter group within a layer, used for gradient-check reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    B,
    W,
    /// The `k`-th neuron's quadratic matrix.
    Q(usize),
    C,
    U,
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamGroup::B => f.write_str("b"),
            ParamGroup::W => f.write_str("W"),
            ParamGroup::Q(k) => write!(f, "Q{k}"),
            ParamGroup::C => f.write_str("c"),
            ParamGroup::U => f.write_str("U"),
        }
    }
}

fn tri_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Map a flat upper-triangle offset to the `(i, j)` pair with `i <= j`.
fn tri_coords(n: usize, mut t: usize) -> (usize, usize) {
    let mut i = 0;
    while t >= n - i {
        t -= n - i;
        i += 1;
    }
    (i, i + t)
}

impl<T: Scalar> Layer<T> {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Affine(_) => LayerKind::Affine,
            Layer::Quadratic(_) => LayerKind::Quadratic,
            Layer::Rpq(_) => LayerKind::Rpq,
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Affine(l) => l.w.cols(),
            Layer::Quadratic(l) => l.w.cols(),
            Layer::Rpq(l) => l.w.cols(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Affine(l) => l.w.rows(),
            Layer::Quadratic(l) => l.w.rows(),
            Layer::Rpq(l) => l.w.rows(),
        }
    }

    pub fn activation(&self) -> ActivationKind {
        match self {
            Layer::Affine(l) => l.act,
            Layer::Quadratic(l) => l.act,
            Layer::Rpq(l) => l.act,
        }
    }

    pub fn forward(&self, a_in: &Vector<T>) -> Result<(Vector<T>, LayerCache<T>)> {
        if a_in.len() != self.in_dim() {
            return Err(Error::shape(format!(
                "{} layer forward: expected input length {}, got {}",
                self.kind(),
                self.in_dim(),
                a_in.len()
            )));
        }
        let (z, detail) = match self {
            Layer::Affine(l) => {
                let z = l.b.add(&l.w.matvec(a_in)?)?;
                (z, CacheDetail::Affine)
            }
            Layer::Quadratic(l) => {
                // V row k = a_inᵀ Q^k; this is the expensive part and the
                // only place the Q matrices are multiplied by a vector.
                let n_out = l.w.rows();
                let mut v = Matrix::zeros(n_out, l.w.cols());
                for k in 0..n_out {
                    let row = l.q[k].matvec_transpose(a_in)?;
                    #[cfg(debug_assertions)]
                    count_q_vec_product();
                    v.row_mut(k).copy_from_slice(row.as_slice());
                }
                let z = l.b.add(&l.w.add(&v)?.matvec(a_in)?)?;
                (z, CacheDetail::Quadratic { v })
            }
            Layer::Rpq(l) => {
                let v1 = l.b.add(&l.w.matvec(a_in)?)?;
                let v2 = l.c.add(&l.u.matvec(a_in)?)?;
                let z = v1.hadamard(&v2)?;
                (z, CacheDetail::Rpq { v1, v2 })
            }
        };
        let a_out = self.activation().apply_vec(&z);
        let cache = LayerCache { a_in: a_in.clone(), z, a_out: a_out.clone(), detail };
        Ok((a_out, cache))
    }

    /// Backward pass. Returns the parameter gradients and the *pre* input
    /// delta: the bracket term of the backpropagation rule without the
    /// previous layer's `g'` factor, which the caller applies.
    ///
    /// - affine: `db = δ`, `dW = δ ⊗ a`, pre-delta `Wᵀδ`
    /// - quadratic: `db = δ`, `dW = δ ⊗ a`, `dQ^k = δ_k · M(a)`,
    ///   pre-delta `(Wᵀ + 2Vᵀ)δ` with `V` read from the cache
    /// - RPQ: `db = δ ⊙ v2`, `dc = δ ⊙ v1`, `dW = (δ ⊙ v2) ⊗ a`,
    ///   `dU = (δ ⊙ v1) ⊗ a`, pre-delta `Uᵀ(δ ⊙ v1) + Wᵀ(δ ⊙ v2)`
    pub fn backward(
        &self,
        cache: &LayerCache<T>,
        delta_out: &Vector<T>,
    ) -> Result<(LayerGrads<T>, Vector<T>)> {
        if delta_out.len() != self.out_dim() {
            return Err(Error::shape(format!(
                "{} layer backward: expected delta length {}, got {}",
                self.kind(),
                self.out_dim(),
                delta_out.len()
            )));
        }
        if cache.a_in.len() != self.in_dim() || cache.z.len() != self.out_dim() {
            return Err(Error::invalid(format!(
                "{} layer backward: cache shapes ({} in, {} out) do not match layer ({} in, {} out)",
                self.kind(),
                cache.a_in.len(),
                cache.z.len(),
                self.in_dim(),
                self.out_dim()
            )));
        }
        match (self, &cache.detail) {
            (Layer::Affine(l), CacheDetail::Affine) => {
                let db = delta_out.clone();
                let dw = delta_out.outer(&cache.a_in);
                let pre = l.w.matvec_transpose(delta_out)?;
                Ok((LayerGrads::Affine { dw, db }, pre))
            }
            (Layer::Quadratic(l), CacheDetail::Quadratic { v }) => {
                let db = delta_out.clone();
                let dw = delta_out.outer(&cache.a_in);
                // M depends only on the layer input, so it is built once and
                // scaled per neuron.
                let m = m_matrix(&cache.a_in);
                let dq: Vec<Matrix<T>> =
                    (0..self.out_dim()).map(|k| m.scale(delta_out[k])).collect();
                let two = T::one() + T::one();
                let mut pre = l.w.matvec_transpose(delta_out)?;
                let vt = v.matvec_transpose(delta_out)?;
                for j in 0..pre.len() {
                    pre[j] += two * vt[j];
                }
                Ok((LayerGrads::Quadratic { dw, db, dq }, pre))
            }
            (Layer::Rpq(l), CacheDetail::Rpq { v1, v2 }) => {
                let d2 = delta_out.hadamard(v2)?;
                let d1 = delta_out.hadamard(v1)?;
                let dw = d2.outer(&cache.a_in);
                let du = d1.outer(&cache.a_in);
                let pre = l.u.matvec_transpose(&d1)?.add(&l.w.matvec_transpose(&d2)?)?;
                Ok((LayerGrads::Rpq { dw, db: d2, du, dc: d1 }, pre))
            }
            _ => Err(Error::invalid(format!(
                "{} layer backward: cache is from a different layer kind",
                self.kind()
            ))),
        }
    }

    /// Apply `θ ← θ - η · grad` to every parameter group.
    pub fn apply_grads(&mut self, grads: &LayerGrads<T>, eta: T) -> Result<()> {
        let step = -eta;
        match (self, grads) {
            (Layer::Affine(l), LayerGrads::Affine { dw, db }) => {
                l.w.axpy(step, dw)?;
                l.b.axpy(step, db)?;
            }
            (Layer::Quadratic(l), LayerGrads::Quadratic { dw, db, dq }) => {
                l.w.axpy(step, dw)?;
                l.b.axpy(step, db)?;
                if dq.len() != l.q.len() {
                    return Err(Error::shape(format!(
                        "apply_grads: {} dQ matrices for {} neurons",
                        dq.len(),
                        l.q.len()
                    )));
                }
                for (qk, dqk) in l.q.iter_mut().zip(dq) {
                    qk.axpy(step, dqk)?;
                }
            }
            (Layer::Rpq(l), LayerGrads::Rpq { dw, db, du, dc }) => {
                l.w.axpy(step, dw)?;
                l.b.axpy(step, db)?;
                l.u.axpy(step, du)?;
                l.c.axpy(step, dc)?;
            }
            _ => {
                return Err(Error::invalid(
                    "apply_grads: gradient kind does not match layer kind".to_string(),
                ))
            }
        }
        Ok(())
    }

    /// Count of free parameters. Each symmetric `Q` contributes its
    /// `n(n+1)/2` distinct entries, not `n²`.
    pub fn param_count(&self) -> usize {
        let (n_in, n_out) = (self.in_dim(), self.out_dim());
        match self {
            Layer::Affine(_) => n_out * (n_in + 1),
            Layer::Quadratic(_) => n_out * (n_in + 1) + n_out * tri_count(n_in),
            Layer::Rpq(_) => 2 * n_out * (n_in + 1),
        }
    }

    /// Read the `i`-th free parameter. The enumeration order is stable:
    /// affine `[b, W]`; quadratic `[b, W, Q^0 upper triangle, Q^1, ...]`;
    /// RPQ `[b, W, c, U]`. Matrices are row-major, triangles row-wise.
    pub fn get_param(&self, i: usize) -> T {
        let n_in = self.in_dim();
        let n_out = self.out_dim();
        match self {
            Layer::Affine(l) => {
                if i < n_out {
                    l.b[i]
                } else {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)]
                }
            }
            Layer::Quadratic(l) => {
                if i < n_out {
                    l.b[i]
                } else if i < n_out + n_out * n_in {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)]
                } else {
                    let i = i - n_out - n_out * n_in;
                    let t = tri_count(n_in);
                    let (k, off) = (i / t, i % t);
                    let (r, c) = tri_coords(n_in, off);
                    l.q[k][(r, c)]
                }
            }
            Layer::Rpq(l) => {
                let wlen = n_out * n_in;
                if i < n_out {
                    l.b[i]
                } else if i < n_out + wlen {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)]
                } else if i < 2 * n_out + wlen {
                    l.c[i - n_out - wlen]
                } else {
                    let i = i - 2 * n_out - wlen;
                    l.u[(i / n_in, i % n_in)]
                }
            }
        }
    }

    /// Write the `i`-th free parameter. For quadratic layers an off-diagonal
    /// entry is one tied parameter: both `(i, j)` and `(j, i)` are set, so
    /// symmetry is preserved and finite differences of a tied coordinate
    /// match the `2·a_i·a_j` convention of the analytic gradient.
    pub fn set_param(&mut self, i: usize, value: T) {
        let n_in = self.in_dim();
        let n_out = self.out_dim();
        match self {
            Layer::Affine(l) => {
                if i < n_out {
                    l.b[i] = value;
                } else {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)] = value;
                }
            }
            Layer::Quadratic(l) => {
                if i < n_out {
                    l.b[i] = value;
                } else if i < n_out + n_out * n_in {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)] = value;
                } else {
                    let i = i - n_out - n_out * n_in;
                    let t = tri_count(n_in);
                    let (k, off) = (i / t, i % t);
                    let (r, c) = tri_coords(n_in, off);
                    l.q[k][(r, c)] = value;
                    l.q[k][(c, r)] = value;
                }
            }
            Layer::Rpq(l) => {
                let wlen = n_out * n_in;
                if i < n_out {
                    l.b[i] = value;
                } else if i < n_out + wlen {
                    let i = i - n_out;
                    l.w[(i / n_in, i % n_in)] = value;
                } else if i < 2 * n_out + wlen {
                    l.c[i - n_out - wlen] = value;
                } else {
                    let i = i - 2 * n_out - wlen;
                    l.u[(i / n_in, i % n_in)] = value;
                }
            }
        }
    }

    /// Group and in-group offset of the `i`-th free parameter.
    pub fn param_group(&self, i: usize) -> (ParamGroup, usize) {
        let n_in = self.in_dim();
        let n_out = self.out_dim();
        match self {
            Layer::Affine(_) => {
                if i < n_out {
                    (ParamGroup::B, i)
                } else {
                    (ParamGroup::W, i - n_out)
                }
            }
            Layer::Quadratic(_) => {
                if i < n_out {
                    (ParamGroup::B, i)
                } else if i < n_out + n_out * n_in {
                    (ParamGroup::W, i - n_out)
                } else {
                    let i = i - n_out - n_out * n_in;
                    let t = tri_count(n_in);
                    (ParamGroup::Q(i / t), i % t)
                }
            }
            Layer::Rpq(_) => {
                let wlen = n_out * n_in;
                if i < n_out {
                    (ParamGroup::B, i)
                } else if i < n_out + wlen {
                    (ParamGroup::W, i - n_out)
                } else if i < 2 * n_out + wlen {
                    (ParamGroup::C, i - n_out - wlen)
                } else {
                    (ParamGroup::U, i - 2 * n_out - wlen)
                }
            }
        }
    }

    /// Flatten gradients in the same order as `get_param`/`set_param`.
    pub fn flatten_grads(&self, grads: &LayerGrads<T>, out: &mut Vec<T>) -> Result<()> {
        match (self, grads) {
            (Layer::Affine(_), LayerGrads::Affine { dw, db }) => {
                out.extend(db.iter().copied());
                out.extend(dw.as_slice().iter().copied());
            }
            (Layer::Quadratic(l), LayerGrads::Quadratic { dw, db, dq }) => {
                out.extend(db.iter().copied());
                out.extend(dw.as_slice().iter().copied());
                let n = l.w.cols();
                for dqk in dq {
                    for i in 0..n {
                        for j in i..n {
                            out.push(dqk[(i, j)]);
                        }
                    }
                }
            }
            (Layer::Rpq(_), LayerGrads::Rpq { dw, db, du, dc }) => {
                out.extend(db.iter().copied());
                out.extend(dw.as_slice().iter().copied());
                out.extend(dc.iter().copied());
                out.extend(du.as_slice().iter().copied());
            }
            _ => {
                return Err(Error::invalid(
                    "flatten_grads: gradient kind does not match layer kind".to_string(),
                ))
            }
        }
        Ok(())
    }
}

fn symmetric_random<T: Scalar>(n: usize, scale: T, rng: &mut Rng) -> Matrix<T> {
    let raw = Matrix::from_fn(n, n, |_, _| rng.uniform(-T::one(), T::one()));
    let half = real::<T>(0.5);
    Matrix::from_fn(n, n, |i, j| (raw[(i, j)] + raw[(j, i)]) * half * scale)
}

/// Build a freshly initialized layer.
///
/// `W` (and `U`) entries are uniform in `(-r, r)` with `r = 1/√n_in`, drawn
/// row-major; `b = 0`. RPQ layers get `c = 1` so the second factor starts
/// near one and the layer behaves like its affine part at initialization.
/// Quadratic matrices follow `scheme`, with `SymmetricRandom` scaled by `r`.
pub fn init_layer<T: Scalar>(
    kind: LayerKind,
    n_in: usize,
    n_out: usize,
    act: ActivationKind,
    scheme: &QInit<T>,
    rng: &mut Rng,
) -> Result<Layer<T>> {
    if n_in == 0 || n_out == 0 {
        return Err(Error::invalid(format!(
            "init_layer: dimensions must be at least 1, got {n_in} in / {n_out} out"
        )));
    }
    if let QInit::SymmetricRandom(scale) = scheme {
        if *scale <= T::zero() {
            return Err(Error::invalid("init_layer: SymmetricRandom scale must be > 0".to_string()));
        }
    }
    let r = T::one() / real::<T>(n_in as f64).sqrt();
    let w = Matrix::from_fn(n_out, n_in, |_, _| rng.uniform(-r, r));
    let b = Vector::zeros(n_out);
    let layer = match kind {
        LayerKind::Affine => Layer::Affine(AffineLayer { w, b, act }),
        LayerKind::Quadratic => {
            let q = (0..n_out)
                .map(|_| match scheme {
                    QInit::Zero => Matrix::zeros(n_in, n_in),
                    QInit::Identity => Matrix::identity(n_in),
                    QInit::SymmetricRandom(scale) => symmetric_random(n_in, *scale * r, rng),
                })
                .collect();
            Layer::Quadratic(QuadraticLayer { w, b, q, act })
        }
        LayerKind::Rpq => {
            let u = Matrix::from_fn(n_out, n_in, |_, _| rng.uniform(-r, r));
            let c = Vector::filled(n_out, T::one());
            Layer::Rpq(RpqLayer { w, b, u, c, act })
        }
    };
    Ok(layer)
}
