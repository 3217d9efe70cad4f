//! Canonical text form of polynomials.
//!
//! Terms appear in graded-lex order, joined by ` + `. Each term is a
//! parenthesised coefficient optionally followed by `*x1^2*x2`-style factors:
//!
//! ```text
//! (4) + (-4)*x1 + (-4)*x2 + (1)*x1^2 + (2)*x1*x2 + (1)*x2^2
//! ```
//!
//! The zero polynomial renders as `0`. Variable names default to `x1..xn`.

use std::str::FromStr;

use super::{AlgebraError, MultiIndex, Polynomial, Scalar};

pub fn default_names(num_vars: usize) -> Vec<String> {
    (1..=num_vars).map(|i| format!("x{i}")).collect()
}

pub fn render<T: Scalar>(p: &Polynomial<T>, names: Option<&[String]>) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let defaults;
    let names = match names {
        Some(n) => n,
        None => {
            defaults = default_names(p.num_vars());
            &defaults
        }
    };
    let mut parts = Vec::with_capacity(p.num_terms());
    for (alpha, c) in p.terms() {
        let mut term = format!("({c})");
        for (name, &e) in names.iter().zip(alpha.exponents()) {
            match e {
                0 => {}
                1 => term.push_str(&format!("*{name}")),
                _ => term.push_str(&format!("*{name}^{e}")),
            }
        }
        parts.push(term);
    }
    parts.join(" + ")
}

/// Inverse of [`render`] for coefficient types with a textual parser.
pub fn parse<T>(text: &str, names: &[String]) -> Result<Polynomial<T>, AlgebraError>
where
    T: Scalar + FromStr<Err = AlgebraError>,
{
    let n = names.len();
    let s: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.iter().collect::<String>() == "0" {
        return Ok(Polynomial::zero(n));
    }
    let err = |msg: &str| AlgebraError::Parse(format!("{msg} in `{text}`"));
    let mut terms = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if s[i] != '(' {
            return Err(err("expected `(`"));
        }
        let close = s[i..].iter().position(|&c| c == ')').ok_or_else(|| err("unclosed `(`"))? + i;
        let coeff: T = s[i + 1..close].iter().collect::<String>().parse()?;
        i = close + 1;
        let mut exps = vec![0u32; n];
        while i < s.len() && s[i] == '*' {
            i += 1;
            let start = i;
            while i < s.len() && (s[i].is_alphanumeric() || s[i] == '_') {
                i += 1;
            }
            let name: String = s[start..i].iter().collect();
            let var = names
                .iter()
                .position(|v| *v == name)
                .ok_or_else(|| err(&format!("unknown variable `{name}`")))?;
            let mut e = 1;
            if i < s.len() && s[i] == '^' {
                i += 1;
                let start = i;
                while i < s.len() && s[i].is_ascii_digit() {
                    i += 1;
                }
                e = s[start..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| err("bad exponent"))?;
            }
            exps[var] += e;
        }
        terms.push((MultiIndex::new(exps), coeff));
        if i < s.len() {
            if s[i] != '+' {
                return Err(err("expected `+` between terms"));
            }
            i += 1;
            if i == s.len() {
                return Err(err("trailing `+`"));
            }
        }
    }
    Polynomial::from_terms(n, terms)
}
