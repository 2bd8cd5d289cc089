use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::polynomial::Polynomial;
use super::AlgebraError;
use crate::scalar::ExactField;

/// Exact ratio of two polynomials in `x = β²`.
///
/// Always stored in canonical form: numerator and denominator are coprime
/// and the denominator is monic. Zero is `0 / 1`. Two rational functions
/// are equal exactly when their stored polynomials are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction<T> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

/// Binary field operations accepted by [`RationalFunction::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Add,
    Sub,
    Mul,
    Div,
}

impl<T: ExactField> RationalFunction<T> {
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: Polynomial<T>, den: Polynomial<T>) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Self::zero();
        }
        let (num, den) = if den.degree() == Some(0) {
            (num, den)
        } else {
            let g = Polynomial::gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                let (n, _) = num.div_rem(&g).expect("gcd is nonzero");
                let (d, _) = den.div_rem(&g).expect("gcd is nonzero");
                (n, d)
            }
        };
        let lc = den.leading().expect("denominator is nonzero").clone();
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = T::one() / lc;
            Self {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn zero() -> Self {
        Self {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_poly(Polynomial::one())
    }

    pub fn from_poly(p: Polynomial<T>) -> Self {
        Self {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn numerator(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Re-applies normalization. A no-op on values built through this API.
    pub fn normalize(&self) -> Self {
        Self::normalized(self.num.clone(), self.den.clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiplies by a polynomial.
    pub fn mul_poly(&self, p: &Polynomial<T>) -> Self {
        Self::normalized(&self.num * p, self.den.clone())
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        if rhs.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalized(&self.num * &rhs.den, &self.den * &rhs.num))
    }

    pub fn combine(op: Combine, a: &Self, b: &Self) -> Result<Self, AlgebraError> {
        Ok(match op {
            Combine::Add => a + b,
            Combine::Sub => a - b,
            Combine::Mul => a * b,
            Combine::Div => a.checked_div(b)?,
        })
    }

    /// Exact evaluation at `x0`; fails at a pole.
    pub fn eval(&self, x0: &T) -> Result<T, AlgebraError> {
        let d = self.den.eval(x0);
        if d.is_zero() {
            return Err(AlgebraError::Pole {
                at: x0.to_string(),
            });
        }
        Ok(self.num.eval(x0) / d)
    }

    /// Multiplicity `d` such that the denominator equals `(x - 1)^d`, if it
    /// has that form.
    pub fn pole_order_at_one(&self) -> Option<u32> {
        let d = self.den.degree()? as u32;
        let x_minus_one = Polynomial::new(vec![-T::one(), T::one()]);
        (x_minus_one.pow(d) == self.den).then_some(d)
    }
}

impl<T: ExactField> Add for &RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn add(self, rhs: &RationalFunction<T>) -> RationalFunction<T> {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RationalFunction::normalized(&self.num + &rhs.num, self.den.clone());
        }
        RationalFunction::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl<T: ExactField> Sub for &RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn sub(self, rhs: &RationalFunction<T>) -> RationalFunction<T> {
        self + &(-rhs)
    }
}

impl<T: ExactField> Mul for &RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn mul(self, rhs: &RationalFunction<T>) -> RationalFunction<T> {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl<T: ExactField> Neg for &RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn neg(self) -> RationalFunction<T> {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl<T: ExactField> Add for RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn add(self, rhs: RationalFunction<T>) -> RationalFunction<T> {
        &self + &rhs
    }
}

impl<T: ExactField> Sub for RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn sub(self, rhs: RationalFunction<T>) -> RationalFunction<T> {
        &self - &rhs
    }
}

impl<T: ExactField> Mul for RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn mul(self, rhs: RationalFunction<T>) -> RationalFunction<T> {
        &self * &rhs
    }
}

impl<T: ExactField> Neg for RationalFunction<T> {
    type Output = RationalFunction<T>;

    fn neg(self) -> RationalFunction<T> {
        -&self
    }
}

impl<T: ExactField> fmt::Debug for RationalFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({self})")
    }
}

impl<T: ExactField> fmt::Display for RationalFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    type P = Polynomial<BigRational>;
    type F = RationalFunction<BigRational>;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rf(num: &[i64], den: &[i64]) -> F {
        F::new(P::from_i64s(num), P::from_i64s(den)).unwrap()
    }

    #[test]
    fn combine_examples() {
        let a = rf(&[1], &[1, -1]);
        let b = rf(&[0, 1], &[1, -1]);
        assert_eq!(F::combine(Combine::Add, &a, &b).unwrap(), rf(&[1, 1], &[1, -1]));
        assert!(F::combine(Combine::Mul, &a, &F::zero()).unwrap().is_zero());
        assert_eq!(
            F::combine(Combine::Mul, &a, &a).unwrap(),
            rf(&[1], &[1, -2, 1])
        );
        assert_eq!(
            F::combine(Combine::Div, &a, &F::zero()),
            Err(AlgebraError::DivisionByZero)
        );
        assert_eq!(a.scale(&q(0, 1)), F::zero());
    }

    #[test]
    fn canonical_form_is_structural() {
        // (x^2 - 1) / (2x - 2) = (x + 1) / 2
        let f = rf(&[-1, 0, 1], &[-2, 2]);
        assert_eq!(f.numerator(), &P::new(vec![q(1, 2), q(1, 2)]));
        assert!(f.denominator().is_one());
        // 1/(1-x) stores the monic denominator x - 1
        let g = rf(&[1], &[1, -1]);
        assert_eq!(g.numerator(), &P::from_i64s(&[-1]));
        assert_eq!(g.denominator(), &P::from_i64s(&[-1, 1]));
        assert_eq!(g.normalize(), g);
    }

    #[test]
    fn eval_examples() {
        let a = rf(&[1], &[1, -1]);
        assert_eq!(a.eval(&q(0, 1)).unwrap(), q(1, 1));
        assert_eq!(rf(&[0, 1], &[1, -1]).eval(&q(1, 4)).unwrap(), q(1, 3));
        assert!(matches!(a.eval(&q(1, 1)), Err(AlgebraError::Pole { .. })));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            F::new(P::one(), P::zero()),
            Err(AlgebraError::ZeroDenominator)
        );
    }

    #[test]
    fn pole_order() {
        assert_eq!(rf(&[0, -1, -1], &[1, -4, 6, -4, 1]).pole_order_at_one(), Some(4));
        assert_eq!(rf(&[1], &[1, 1]).pole_order_at_one(), None);
        assert_eq!(F::one().pole_order_at_one(), Some(0));
    }
}
