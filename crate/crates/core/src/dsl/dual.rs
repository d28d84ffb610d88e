//! Forward-mode dual numbers used for exact differentiation of reaction
//! expressions.

/// Value plus directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    pub fn add(self, o: Dual) -> Dual {
        Dual::new(self.value + o.value, self.deriv + o.deriv)
    }

    pub fn sub(self, o: Dual) -> Dual {
        Dual::new(self.value - o.value, self.deriv - o.deriv)
    }

    pub fn mul(self, o: Dual) -> Dual {
        Dual::new(self.value * o.value, self.deriv * o.value + self.value * o.deriv)
    }

    pub fn div(self, o: Dual) -> Dual {
        Dual::new(
            self.value / o.value,
            (self.deriv * o.value - self.value * o.deriv) / (o.value * o.value),
        )
    }

    pub fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }

    /// General power. Exponents that carry no derivative and have an integral
    /// value use the power-rule branch, which stays defined for negative
    /// bases (`(-0.5)^3` and its derivative are fine; the log form is not).
    pub fn pow(self, o: Dual) -> Dual {
        let v = self.value.powf(o.value);
        if o.deriv == 0.0 && o.value.fract() == 0.0 {
            let d = if o.value == 0.0 {
                0.0
            } else {
                o.value * self.value.powf(o.value - 1.0) * self.deriv
            };
            return Dual::new(v, d);
        }
        let d = v * (o.deriv * self.value.ln() + o.value * self.deriv / self.value);
        Dual::new(v, d)
    }

    pub fn tanh(self) -> Dual {
        let t = self.value.tanh();
        Dual::new(t, (1.0 - t * t) * self.deriv)
    }

    pub fn exp(self) -> Dual {
        let e = self.value.exp();
        Dual::new(e, e * self.deriv)
    }

    pub fn sin(self) -> Dual {
        Dual::new(self.value.sin(), self.value.cos() * self.deriv)
    }

    pub fn cos(self) -> Dual {
        Dual::new(self.value.cos(), -self.value.sin() * self.deriv)
    }

    pub fn sqrt(self) -> Dual {
        let s = self.value.sqrt();
        Dual::new(s, self.deriv / (2.0 * s))
    }

    /// Derivative of |x| taken as sign(x); the subgradient at 0 is set to 0.
    pub fn abs(self) -> Dual {
        let s = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        Dual::new(self.value.abs(), s * self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        // d/dx (x * x) = 2x at x = 3.
        let x = Dual::new(3.0, 1.0);
        let y = x.mul(x);
        assert_eq!(y.value, 9.0);
        assert_eq!(y.deriv, 6.0);
    }

    #[test]
    fn integer_power_with_negative_base() {
        let x = Dual::new(-0.5, 1.0);
        let y = x.pow(Dual::constant(3.0));
        assert!((y.value - -0.125).abs() < 1e-15);
        assert!((y.deriv - 0.75).abs() < 1e-15);
    }

    #[test]
    fn tanh_derivative_at_zero_is_one() {
        let x = Dual::new(0.0, 1.0);
        assert_eq!(x.tanh().deriv, 1.0);
    }

    #[test]
    fn quotient_rule() {
        // d/dx (1 / x) = -1/x^2 at x = 2.
        let one = Dual::constant(1.0);
        let x = Dual::new(2.0, 1.0);
        let y = one.div(x);
        assert!((y.deriv - -0.25).abs() < 1e-15);
    }
}
