//! JSON problem and certificate files. Coefficients are exact: a rational
//! `coefficient` plus an optional rational `sqrt2` part, written as strings
//! such as `"-3/2"` (plain JSON integers are also accepted).

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::algebra::{MultiIndex, Polynomial, QSqrt2};
use crate::certificates::{Certificate, ConeTag, Multiplier, WeightedSquare};
use crate::relaxations::{PolyProblem, RelaxationError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("term {term}: exponent vector has {found} entries, expected {expected}")]
    ExponentLength { term: usize, expected: usize, found: usize },
    #[error("invalid problem: {0}")]
    Problem(#[from] RelaxationError),
    #[error("certificate has {found} multipliers, problem has {expected} constraints plus sigma0")]
    MultiplierCount { expected: usize, found: usize },
}

/// An exact rational written as text.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalText(pub BigRational);

impl Serialize for RationalText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

struct RationalVisitor;

impl Visitor<'_> for RationalVisitor {
    type Value = RationalText;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an exact rational such as \"-3/2\" or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<RationalText, E> {
        let t = v.trim();
        if t.contains(['.', 'e', 'E']) {
            return Err(E::custom(format!("decimal coefficient {v:?}: write it as an exact fraction")));
        }
        t.parse::<BigRational>()
            .map(RationalText)
            .map_err(|_| E::custom(format!("not an exact rational: {v:?}")))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<RationalText, E> {
        Ok(RationalText(BigRational::from_integer(v.into())))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<RationalText, E> {
        Ok(RationalText(BigRational::from_integer(v.into())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<RationalText, E> {
        Err(E::custom(format!("floating-point coefficient {v}: write it as an exact fraction string")))
    }
}

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

/// `coefficient + sqrt2·√2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactValue {
    pub coefficient: RationalText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sqrt2: Option<RationalText>,
}

impl ExactValue {
    pub fn to_qsqrt2(&self) -> QSqrt2 {
        let surd = self.sqrt2.as_ref().map(|s| s.0.clone()).unwrap_or_else(BigRational::zero);
        QSqrt2::new(self.coefficient.0.clone(), surd)
    }
}

impl From<&QSqrt2> for ExactValue {
    fn from(q: &QSqrt2) -> Self {
        ExactValue {
            coefficient: RationalText(q.rat_part().clone()),
            sqrt2: (!q.is_rational()).then(|| RationalText(q.surd_part().clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub exponents: Vec<u32>,
    pub coefficient: RationalText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sqrt2: Option<RationalText>,
}

fn polynomial_from_terms(terms: &[TermEntry], num_vars: usize) -> Result<Polynomial<QSqrt2>, FileError> {
    let mut out = Vec::with_capacity(terms.len());
    for (k, t) in terms.iter().enumerate() {
        if t.exponents.len() != num_vars {
            return Err(FileError::ExponentLength { term: k, expected: num_vars, found: t.exponents.len() });
        }
        let value = ExactValue { coefficient: t.coefficient.clone(), sqrt2: t.sqrt2.clone() }.to_qsqrt2();
        out.push((MultiIndex::new(t.exponents.clone()), value));
    }
    Ok(Polynomial::from_terms(num_vars, out).expect("exponent lengths checked"))
}

fn terms_from_polynomial(p: &Polynomial<QSqrt2>) -> Vec<TermEntry> {
    p.terms()
        .map(|(a, c)| {
            let v = ExactValue::from(c);
            TermEntry { exponents: a.exponents().to_vec(), coefficient: v.coefficient, sqrt2: v.sqrt2 }
        })
        .collect()
}

/// `min objective s.t. constraints ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub variables: Vec<String>,
    pub objective: Vec<TermEntry>,
    #[serde(default)]
    pub constraints: Vec<Vec<TermEntry>>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_problem(&self) -> Result<PolyProblem, FileError> {
        let n = self.variables.len();
        let objective = polynomial_from_terms(&self.objective, n)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| polynomial_from_terms(c, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyProblem::new(self.variables.clone(), objective, constraints)?)
    }

    pub fn from_problem(p: &PolyProblem) -> Self {
        ProblemFile {
            variables: p.variables().to_vec(),
            objective: terms_from_polynomial(p.objective()),
            constraints: p.constraints().iter().map(terms_from_polynomial).collect(),
            metadata: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareEntry {
    pub weight: ExactValue,
    pub polynomial: Vec<TermEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeTag>,
    pub squares: Vec<SquareEntry>,
}

/// `multipliers[0]` is `σ_0`; `multipliers[i]` pairs with constraint `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub lambda: ExactValue,
    #[serde(default)]
    pub r: u32,
    pub multipliers: Vec<MultiplierEntry>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

impl CertificateFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_certificate(&self, p: &PolyProblem) -> Result<Certificate, FileError> {
        let expected = p.constraints().len() + 1;
        if self.multipliers.len() != expected {
            return Err(FileError::MultiplierCount { expected, found: self.multipliers.len() });
        }
        let n = p.num_vars();
        let mut multipliers = Vec::with_capacity(expected);
        for m in &self.multipliers {
            let squares = m
                .squares
                .iter()
                .map(|s| {
                    Ok(WeightedSquare { weight: s.weight.to_qsqrt2(), poly: polynomial_from_terms(&s.polynomial, n)? })
                })
                .collect::<Result<Vec<_>, FileError>>()?;
            multipliers.push(Multiplier { squares, declared: m.cone });
        }
        Ok(Certificate { lambda: self.lambda.to_qsqrt2(), multipliers, r: self.r })
    }

    pub fn from_certificate(c: &Certificate) -> Self {
        CertificateFile {
            lambda: ExactValue::from(&c.lambda),
            r: c.r,
            multipliers: c
                .multipliers
                .iter()
                .map(|m| MultiplierEntry {
                    cone: m.declared,
                    squares: m
                        .squares
                        .iter()
                        .map(|s| SquareEntry { weight: ExactValue::from(&s.weight), polynomial: terms_from_polynomial(&s.poly) })
                        .collect(),
                })
                .collect(),
            metadata: serde_json::Value::Null,
        }
    }
}
