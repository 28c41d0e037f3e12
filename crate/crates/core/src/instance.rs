//! JSON instance format.
//!
//! ```json
//! { "n": 2,
//!   "objective": [ {"coef": -1.0, "expo": [1, 0]}, {"coef": -1.0, "expo": [0, 1]} ],
//!   "constraints": [ { "name": "ball",
//!                      "terms": [ {"coef": 1.0, "expo": [0, 0]},
//!                                 {"coef": -1.0, "expo": [2, 0]},
//!                                 {"coef": -1.0, "expo": [0, 2]} ] } ],
//!   "box": [[-1.0, 1.0], [-1.0, 1.0]] }
//! ```
//!
//! `constraints` and `box` are optional. Serialization writes terms in the
//! canonical graded-lex order, so parse/serialize/parse is stable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, PopInstance};
use crate::scalar::Real;

#[derive(Debug, Serialize, Deserialize)]
struct TermDoc {
    coef: f64,
    expo: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    objective: Vec<TermDoc>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    bounds: Option<Vec<[f64; 2]>>,
}

fn poly_from_doc<T: Real>(n: usize, terms: &[TermDoc], what: &str) -> Result<Polynomial<T>> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if t.expo.len() != n {
            return Err(Error::Parse(format!(
                "{what}: exponent vector of length {} for n = {n}",
                t.expo.len()
            )));
        }
        if !t.coef.is_finite() {
            return Err(Error::Parse(format!("{what}: non-finite coefficient")));
        }
        let mut e = Vec::with_capacity(n);
        for &x in &t.expo {
            if x < 0 {
                return Err(Error::Parse(format!("{what}: negative exponent {x}")));
            }
            let x = u32::try_from(x)
                .map_err(|_| Error::Parse(format!("{what}: exponent {x} too large")))?;
            e.push(x);
        }
        out.push((T::lit(t.coef), e));
    }
    Polynomial::from_terms(n, out)
}

fn poly_to_doc<T: Real>(p: &Polynomial<T>) -> Vec<TermDoc> {
    p.terms()
        .map(|(m, c)| TermDoc {
            coef: c.as_f64(),
            expo: m.expo().iter().map(|&e| e as i64).collect(),
        })
        .collect()
}

/// Parses and validates an instance document.
pub fn parse_instance<T: Real>(text: &str) -> Result<PopInstance<T>> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.n == 0 {
        return Err(Error::Parse("n must be positive".into()));
    }
    if doc.objective.is_empty() {
        return Err(Error::Parse("objective term list is empty".into()));
    }
    let objective = poly_from_doc(doc.n, &doc.objective, "objective")?;
    let mut inst = PopInstance::new(doc.n, objective)?;
    for (k, c) in doc.constraints.iter().enumerate() {
        let poly = poly_from_doc(doc.n, &c.terms, &format!("constraint {k}"))?;
        inst = inst.with_constraint(c.name.as_deref(), poly)?;
    }
    if let Some(b) = doc.bounds {
        if b.len() != doc.n {
            return Err(Error::Parse(format!(
                "box has {} entries for n = {}",
                b.len(),
                doc.n
            )));
        }
        inst = inst
            .with_box(b.iter().map(|&[lo, hi]| (T::lit(lo), T::lit(hi))).collect())
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(inst)
}

/// Serializes an instance to pretty-printed JSON in canonical term order.
pub fn serialize_instance<T: Real>(inst: &PopInstance<T>) -> String {
    let doc = InstanceDoc {
        n: inst.nvars(),
        objective: poly_to_doc(inst.objective()),
        constraints: inst
            .constraints()
            .iter()
            .map(|c| ConstraintDoc {
                name: c.name.clone(),
                terms: poly_to_doc(&c.poly),
            })
            .collect(),
        bounds: inst.bounds().map(|b| {
            b.iter()
                .map(|&(lo, hi)| [lo.as_f64(), hi.as_f64()])
                .collect()
        }),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUST_REGION: &str = r#"{
        "n": 2,
        "objective": [ {"coef": -1.0, "expo": [1, 0]}, {"coef": -1.0, "expo": [0, 1]} ],
        "constraints": [ { "name": "disk", "terms": [
            {"coef": -1.0, "expo": [2, 0]}, {"coef": 1.0, "expo": [0, 0]},
            {"coef": -1.0, "expo": [0, 2]} ] } ]
    }"#;

    #[test]
    fn minimal_document() {
        let inst: PopInstance<f64> =
            parse_instance(r#"{"n": 1, "objective": [{"coef": 1.0, "expo": [2]}]}"#).unwrap();
        assert_eq!(inst.num_constraints(), 0);
        assert_eq!(inst.objective().degree(), 2);
    }

    #[test]
    fn negative_exponent_rejected() {
        let r = parse_instance::<f64>(r#"{"n": 1, "objective": [{"coef": 1.0, "expo": [-1]}]}"#);
        assert!(matches!(r, Err(Error::Parse(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let r = parse_instance::<f64>(
            r#"{"n": 2, "objective": [{"coef": 1.0, "expo": [1, 0]}],
                "constraints": [{"terms": [{"coef": 1.0, "expo": [1]}]}]}"#,
        );
        assert!(matches!(r, Err(Error::Parse(_))));
    }

    #[test]
    fn empty_objective_rejected() {
        let r = parse_instance::<f64>(r#"{"n": 1, "objective": []}"#);
        assert!(matches!(r, Err(Error::Parse(_))));
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse_instance::<f64>("{ not json").is_err());
        assert!(parse_instance::<f64>(r#"{"n": 1}"#).is_err());
    }

    #[test]
    fn trust_region_round_trip() {
        let a: PopInstance<f64> = parse_instance(TRUST_REGION).unwrap();
        let text = serialize_instance(&a);
        let b: PopInstance<f64> = parse_instance(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_instance(&b), text);
        // canonical order puts the constant first
        let first = b.constraints()[0].poly.terms().next().unwrap();
        assert!(first.0.is_one());
    }

    #[test]
    fn box_parsed() {
        let inst: PopInstance<f64> = parse_instance(
            r#"{"n": 1, "objective": [{"coef": 1.0, "expo": [2]}], "box": [[-3, 3]]}"#,
        )
        .unwrap();
        assert_eq!(inst.bounds(), Some(&[(-3.0, 3.0)][..]));
    }
}
