use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Logistic function, evaluated on the side that cannot overflow.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    let one = T::one();
    if x >= T::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    }
}

/// Derivative of the sigmoid expressed through its output `y = sigmoid(x)`.
#[inline]
pub fn sigmoid_grad_from_output<T: Scalar>(y: T) -> T {
    y * (T::one() - y)
}

#[inline]
pub fn leaky_relu<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

#[inline]
pub fn leaky_relu_grad<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        slope
    }
}

/// Nonlinearity used for the candidate state of the recurrent cell and the
/// hidden layer of the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Tanh,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => leaky_relu(x, T::narrow(slope)),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    pub fn grad<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => leaky_relu_grad(x, T::narrow(slope)),
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
        }
    }
}
