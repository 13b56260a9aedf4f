use super::Scalar;

/// Elementwise activation with first and second derivatives, both expressed
/// in terms of `tanh` of the pre-activation so one transcendental per element
/// suffices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// `x - tanh(x)`; smooth, unbounded, zero derivative at the origin.
    Tanhshrink,
    Tanh,
}

impl Activation {
    /// Returns (value, first derivative, second derivative) at `x`.
    #[inline]
    pub fn eval_all<T: Scalar>(self, x: T) -> (T, T, T) {
        let t = x.tanh();
        let one = T::one();
        let two = T::from_f64(2.0);
        match self {
            Activation::Tanhshrink => (x - t, t * t, two * t * (one - t * t)),
            Activation::Tanh => (t, one - t * t, -two * t * (one - t * t)),
        }
    }

    #[inline]
    pub fn value<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanhshrink => x - x.tanh(),
            Activation::Tanh => x.tanh(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for act in [Activation::Tanhshrink, Activation::Tanh] {
            for &x in &[-2.0f64, -0.5, 0.0, 0.3, 1.7] {
                let (_, d, dd) = act.eval_all(x);
                let fd = (act.value(x + h) - act.value(x - h)) / (2.0 * h);
                let fdd = (act.value(x + h) + act.value(x - h) - 2.0 * act.value(x)) / (h * h);
                assert!((d - fd).abs() < 1e-8, "{act:?} d at {x}");
                assert!((dd - fdd).abs() < 1e-3, "{act:?} dd at {x}: {dd} vs {fdd}");
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(Activation::Tanhshrink.value(0.0f64), 0.0);
        assert_eq!(Activation::Tanh.value(0.0f64), 0.0);
    }
}
