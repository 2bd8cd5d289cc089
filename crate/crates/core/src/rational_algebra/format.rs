//! Text encodings of rational functions.
//!
//! Plain text: `[n0, n1, ...] / [d0, d1, ...]`, ascending powers of `x`,
//! every coefficient written as a reduced integer pair `p/q`. The stored
//! canonical form is printed as is, so the encoding is unique.
//!
//! LaTeX: a `\frac{..}{..}` in powers of `\beta`, with the sign chosen so the
//! denominator's constant term is positive and `(1-\beta^2)^d` collapsed.

use super::polynomial::Polynomial;
use super::ratfn::RationalFunction;
use super::AlgebraError;
use crate::scalar::ExactField;

fn coeff_list<T: ExactField>(p: &Polynomial<T>) -> String {
    let parts: Vec<String> = if p.is_zero() {
        vec!["0/1".to_owned()]
    } else {
        p.coeffs()
            .iter()
            .map(|c| {
                let (n, d) = c.integer_pair();
                format!("{n}/{d}")
            })
            .collect()
    };
    format!("[{}]", parts.join(", "))
}

pub fn to_plain<T: ExactField>(f: &RationalFunction<T>) -> String {
    format!(
        "{} / {}",
        coeff_list(f.numerator()),
        coeff_list(f.denominator())
    )
}

fn parse_list<T: ExactField>(text: &str) -> Result<Polynomial<T>, AlgebraError> {
    let bad = || AlgebraError::Parse(text.to_owned());
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(bad)?;
    let coeffs = inner
        .split(',')
        .map(|c| T::parse_pair(c).ok_or_else(bad))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polynomial::new(coeffs))
}

pub fn from_plain<T: ExactField>(text: &str) -> Result<RationalFunction<T>, AlgebraError> {
    let (num, den) = text
        .split_once("] /")
        .map(|(n, d)| (format!("{n}]"), d))
        .ok_or_else(|| AlgebraError::Parse(text.to_owned()))?;
    RationalFunction::new(parse_list(&num)?, parse_list(den)?)
}

fn beta_power(k: usize) -> String {
    match 2 * k {
        0 => String::new(),
        e if e < 10 => format!("\\beta^{e}"),
        e => format!("\\beta^{{{e}}}"),
    }
}

fn latex_coeff<T: ExactField>(mag: &T) -> String {
    let (n, d) = mag.integer_pair();
    if d == "1" {
        n
    } else {
        format!("\\frac{{{n}}}{{{d}}}")
    }
}

fn latex_poly<T: ExactField>(p: &Polynomial<T>) -> String {
    if p.is_zero() {
        return "0".to_owned();
    }
    let mut out = String::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { "-" } else { "+" });
        }
        let mag = c.abs();
        if k == 0 || !mag.is_one() {
            out.push_str(&latex_coeff(&mag));
        }
        out.push_str(&beta_power(k));
    }
    out
}

pub fn to_latex<T: ExactField>(f: &RationalFunction<T>) -> String {
    let (mut num, mut den) = (f.numerator().clone(), f.denominator().clone());
    if den.coeff(0).is_negative() {
        num = -num;
        den = -den;
    }
    if den.is_one() {
        return latex_poly(&num);
    }
    let den_text = match f.pole_order_at_one() {
        Some(1) => latex_poly(&den),
        Some(d) => format!("(1-\\beta^2)^{{{d}}}"),
        None => latex_poly(&den),
    };
    format!("\\frac{{{}}}{{{}}}", latex_poly(&num), den_text)
}
