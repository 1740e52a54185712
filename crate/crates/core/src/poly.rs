//! Dense univariate polynomials on a unit local interval.

use crate::scalar::{from_usize, lit, Real};

/// Polynomial stored as ascending monomial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> Poly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x + *c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::constant(T::zero());
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| *c * from_usize::<T>(i))
            .collect();
        Self { coeffs }
    }

    /// Antiderivative vanishing at zero.
    pub fn integral(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(*c / from_usize::<T>(i + 1));
        }
        Self { coeffs }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| *c * s).collect(),
        }
    }

    /// Returns q with q(x) = p(1 - x).
    pub fn reflect(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![T::zero(); n];
        // (1 - x)^i = sum_j C(i, j) (-1)^j x^j
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut binom = T::one();
            for (j, slot) in out.iter_mut().enumerate().take(i + 1) {
                let sign = if j % 2 == 0 { T::one() } else { -T::one() };
                *slot = *slot + *c * binom * sign;
                binom = binom * from_usize::<T>(i - j) / from_usize::<T>(j + 1);
            }
        }
        Self { coeffs: out }
    }

    /// Quintic matching value, first and second derivative at 0 and 1.
    pub fn hermite5(f0: [T; 3], f1: [T; 3]) -> Self {
        let half = lit::<T>(0.5);
        let d = f1[0] - f0[0];
        let c3 = lit::<T>(10.0) * d
            - lit::<T>(6.0) * f0[1]
            - lit::<T>(4.0) * f1[1]
            - (lit::<T>(3.0) * f0[2] - f1[2]) * half;
        let c4 = lit::<T>(-15.0) * d
            + lit::<T>(8.0) * f0[1]
            + lit::<T>(7.0) * f1[1]
            + (lit::<T>(3.0) * f0[2] - lit::<T>(2.0) * f1[2]) * half;
        let c5 = lit::<T>(6.0) * d - lit::<T>(3.0) * (f0[1] + f1[1]) - (f0[2] - f1[2]) * half;
        Self {
            coeffs: vec![f0[0], f0[1], f0[2] * half, c3, c4, c5],
        }
    }
}

/// C² quintic smoothstep 6x⁵ − 15x⁴ + 10x³.
pub(crate) fn smoothstep5<T: Real>() -> Poly<T> {
    Poly::new(
        [0.0, 0.0, 0.0, 10.0, -15.0, 6.0]
            .iter()
            .map(|c| lit(*c))
            .collect(),
    )
}

/// C³ septic smoothstep 35x⁴ − 84x⁵ + 70x⁶ − 20x⁷.
pub(crate) fn smoothstep7<T: Real>() -> Poly<T> {
    Poly::new(
        [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0]
            .iter()
            .map(|c| lit(*c))
            .collect(),
    )
}
