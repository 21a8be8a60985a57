//! Element-wise activation functions and their derivatives.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::tensor::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

/// Logistic sigmoid `1 / (1 + e^{-z})`.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl ActivationKind {
    pub fn apply<T: Scalar>(&self, z: T) -> T {
        match self {
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Relu => {
                if z > T::zero() {
                    z
                } else {
                    T::zero()
                }
            }
            ActivationKind::Identity => z,
        }
    }

    /// Derivative `g'(z)`. Both the pre-activation `z` and the cached output
    /// `a = g(z)` are taken, so sigmoid and tanh can use the output form
    /// (`a(1-a)`, `1-a²`) without recomputing the transcendental.
    /// ReLU uses the subgradient convention `g'(0) = 0`.
    pub fn derivative<T: Scalar>(&self, z: T, a: T) -> T {
        match self {
            ActivationKind::Sigmoid => a * (T::one() - a),
            ActivationKind::Tanh => T::one() - a * a,
            ActivationKind::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ActivationKind::Identity => T::one(),
        }
    }

    pub fn apply_vec<T: Scalar>(&self, z: &Vector<T>) -> Vector<T> {
        z.map(|v| self.apply(v))
    }

    pub fn derivative_vec<T: Scalar>(&self, z: &Vector<T>, a: &Vector<T>) -> Vector<T> {
        debug_assert_eq!(z.len(), a.len());
        let mut out = Vector::zeros(z.len());
        for i in 0..z.len() {
            out[i] = self.derivative(z[i], a[i]);
        }
        out
    }

    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::Relu,
        ActivationKind::Identity,
    ];
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
        };
        f.write_str(name)
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "relu" => Ok(ActivationKind::Relu),
            "identity" => Ok(ActivationKind::Identity),
            other => Err(Error::format(format!("unknown activation '{other}'"))),
        }
    }
}
