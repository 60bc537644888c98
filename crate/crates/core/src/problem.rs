//! Problem data, file ingestion, static optimum and affine centering.
//!
//! Problem files are JSON objects with fields `n, m, k, A, B, Q, R, M0, M1,
//! gamma, x_ref, u_ref, T` and an optional `control_traces` list. Scalars may
//! be JSON numbers (read from their literal text, never through binary
//! floating point) or strings holding an integer, `p/q`, or a finite decimal.

use num_traits::Zero;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::polymat::{format_rational, parse_rational, to_f64, Rational};
use crate::qmat::{Definiteness, QMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Initial,
    Final,
}

impl Endpoint {
    pub fn label(self) -> &'static str {
        match self {
            Endpoint::Initial => "0",
            Endpoint::Final => "T",
        }
    }
}

/// Linear condition `coefficients . u^{(order)}(endpoint) = value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlTrace {
    pub endpoint: Endpoint,
    pub order: usize,
    pub coefficients: Vec<Rational>,
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LQProblem {
    pub a: QMatrix,
    pub b: QMatrix,
    pub q: QMatrix,
    pub r: QMatrix,
    pub m0: QMatrix,
    pub m1: QMatrix,
    pub gamma: Vec<Rational>,
    pub x_ref: Vec<Rational>,
    pub u_ref: Vec<Rational>,
    pub horizon: f64,
    pub control_traces: Vec<ControlTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticOptimum {
    pub x_bar: Vec<Rational>,
    pub u_bar: Vec<Rational>,
    pub multiplier: Vec<Rational>,
    pub objective_value: Rational,
    /// False when the KKT matrix is singular and the minimum-norm point was taken.
    pub unique: bool,
}

/// Linear running-cost terms left after centering: `x . state + u . input`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineResidual {
    pub state: Vec<Rational>,
    pub input: Vec<Rational>,
}

impl AffineResidual {
    pub fn zero(n: usize, m: usize) -> Self {
        AffineResidual {
            state: vec![Rational::zero(); n],
            input: vec![Rational::zero(); m],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.state.iter().chain(&self.input).all(Zero::is_zero)
    }
}

impl LQProblem {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn k(&self) -> usize {
        self.m0.rows()
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        LQProblem {
            horizon,
            ..self.clone()
        }
    }

    /// Check every structural invariant of the problem data.
    pub fn validate(&self) -> Result<()> {
        let (n, m, k) = (self.n(), self.m(), self.k());
        if n == 0 || m == 0 || k == 0 {
            return Err(Error::Schema("n, m and k must be at least 1".into()));
        }
        if m > n {
            return Err(Error::Schema(format!("m = {m} exceeds n = {n}")));
        }
        let shape = |name: &str, mat: &QMatrix, r: usize, c: usize| {
            if mat.rows() == r && mat.cols() == c {
                Ok(())
            } else {
                Err(Error::Schema(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    mat.rows(),
                    mat.cols()
                )))
            }
        };
        shape("A", &self.a, n, n)?;
        shape("B", &self.b, n, m)?;
        shape("Q", &self.q, n, n)?;
        shape("R", &self.r, m, m)?;
        shape("M0", &self.m0, k, n)?;
        shape("M1", &self.m1, k, n)?;
        let len = |name: &str, v: &[Rational], l: usize| {
            if v.len() == l {
                Ok(())
            } else {
                Err(Error::Schema(format!("{name} has length {}, expected {l}", v.len())))
            }
        };
        len("gamma", &self.gamma, k)?;
        len("x_ref", &self.x_ref, n)?;
        len("u_ref", &self.u_ref, m)?;
        for t in &self.control_traces {
            len("control trace coefficients", &t.coefficients, m)?;
        }
        let rank = self.m0.hstack(&self.m1)?.rank();
        if rank != k {
            return Err(Error::BoundaryRank { rank, k });
        }
        for (name, w) in [("Q", &self.q), ("R", &self.r)] {
            if !w.is_symmetric() {
                return Err(Error::NotSymmetric { name });
            }
            if w.definiteness() == Definiteness::Indefinite {
                return Err(Error::Indefinite { name });
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Horizon(self.horizon));
        }
        Ok(())
    }

    pub fn control_weight_definite(&self) -> bool {
        self.r.definiteness() == Definiteness::PositiveDefinite
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("n".into(), Value::from(self.n()));
        obj.insert("m".into(), Value::from(self.m()));
        obj.insert("k".into(), Value::from(self.k()));
        obj.insert("A".into(), matrix_json(&self.a));
        obj.insert("B".into(), matrix_json(&self.b));
        obj.insert("Q".into(), matrix_json(&self.q));
        obj.insert("R".into(), matrix_json(&self.r));
        obj.insert("M0".into(), matrix_json(&self.m0));
        obj.insert("M1".into(), matrix_json(&self.m1));
        obj.insert("gamma".into(), vector_json(&self.gamma));
        obj.insert("x_ref".into(), vector_json(&self.x_ref));
        obj.insert("u_ref".into(), vector_json(&self.u_ref));
        obj.insert("T".into(), float_json(self.horizon));
        if !self.control_traces.is_empty() {
            let traces = self
                .control_traces
                .iter()
                .map(|t| {
                    let mut o = Map::new();
                    o.insert("endpoint".into(), Value::from(t.endpoint.label()));
                    o.insert("order".into(), Value::from(t.order));
                    o.insert("coefficients".into(), vector_json(&t.coefficients));
                    o.insert("value".into(), rational_json(&t.value));
                    Value::Object(o)
                })
                .collect();
            obj.insert("control_traces".into(), Value::Array(traces));
        }
        Value::Object(obj)
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("problem serializes")
    }
}

pub fn rational_json(q: &Rational) -> Value {
    if q.denom() == &num_bigint::BigInt::from(1) {
        Value::Number(q.numer().to_string().parse().expect("integer literal"))
    } else {
        Value::String(format_rational(q))
    }
}

pub fn vector_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rational_json).collect())
}

pub fn matrix_json(m: &QMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| vector_json(m.row(i))).collect())
}

/// JSON number with round-trip precision; non-finite values become `null`.
pub fn float_json(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn scalar(v: &Value, what: &str) -> Result<Rational> {
    match v {
        Value::Number(num) => parse_rational(&num.to_string()),
        Value::String(s) => parse_rational(s),
        _ => Err(Error::Schema(format!("{what}: expected a number or string"))),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Schema(format!("missing field {key:?}")))
}

fn count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    let q = scalar(field(obj, key)?, key)?;
    if !q.is_integer() || q < Rational::zero() {
        return Err(Error::Schema(format!("{key} must be a nonnegative integer")));
    }
    q.to_integer()
        .to_string()
        .parse()
        .map_err(|_| Error::Schema(format!("{key} out of range")))
}

fn vector(v: &Value, what: &str) -> Result<Vec<Rational>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Schema(format!("{what}: expected an array")))?;
    arr.iter().map(|x| scalar(x, what)).collect()
}

fn matrix(v: &Value, what: &str, rows: usize, cols: usize) -> Result<QMatrix> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Schema(format!("{what}: expected an array of rows")))?;
    if arr.len() != rows {
        return Err(Error::Schema(format!("{what}: expected {rows} rows, got {}", arr.len())));
    }
    let data: Vec<Vec<Rational>> = arr.iter().map(|r| vector(r, what)).collect::<Result<_>>()?;
    if data.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema(format!("{what}: expected {cols} columns per row")));
    }
    if rows == 0 {
        return Ok(QMatrix::zeros(0, cols));
    }
    QMatrix::from_rows(data)
}

fn horizon(v: &Value) -> Result<f64> {
    let text = match v {
        Value::Number(num) => num.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(Error::Schema("T: expected a number or string".into())),
    };
    match text.trim().parse::<f64>() {
        Ok(t) => Ok(t),
        Err(_) => Ok(to_f64(&parse_rational(&text)?)),
    }
}

fn traces(v: &Value) -> Result<Vec<ControlTrace>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Schema("control_traces: expected an array".into()))?;
    arr.iter()
        .map(|t| {
            let o = t
                .as_object()
                .ok_or_else(|| Error::Schema("control trace: expected an object".into()))?;
            let endpoint = match field(o, "endpoint")? {
                Value::String(s) if s == "0" => Endpoint::Initial,
                Value::String(s) if s == "T" => Endpoint::Final,
                Value::Number(x) if x.to_string() == "0" => Endpoint::Initial,
                _ => return Err(Error::Schema("control trace endpoint must be \"0\" or \"T\"".into())),
            };
            Ok(ControlTrace {
                endpoint,
                order: count(o, "order")?,
                coefficients: vector(field(o, "coefficients")?, "coefficients")?,
                value: scalar(field(o, "value")?, "value")?,
            })
        })
        .collect()
}

pub fn load_problem(source: &str) -> Result<LQProblem> {
    let doc: Value = serde_json::from_str(source)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Schema("problem document must be an object".into()))?;
    let n = count(obj, "n")?;
    let m = count(obj, "m")?;
    let k = count(obj, "k")?;
    let p = LQProblem {
        a: matrix(field(obj, "A")?, "A", n, n)?,
        b: matrix(field(obj, "B")?, "B", n, m)?,
        q: matrix(field(obj, "Q")?, "Q", n, n)?,
        r: matrix(field(obj, "R")?, "R", m, m)?,
        m0: matrix(field(obj, "M0")?, "M0", k, n)?,
        m1: matrix(field(obj, "M1")?, "M1", k, n)?,
        gamma: vector(field(obj, "gamma")?, "gamma")?,
        x_ref: vector(field(obj, "x_ref")?, "x_ref")?,
        u_ref: vector(field(obj, "u_ref")?, "u_ref")?,
        horizon: horizon(field(obj, "T")?)?,
        control_traces: match obj.get("control_traces") {
            Some(v) => traces(v)?,
            None => Vec::new(),
        },
    };
    p.validate()?;
    Ok(p)
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Minimiser of `1/2 |x - x_ref|_Q^2 + 1/2 |u - u_ref|_R^2` subject to
/// `A x + B u = 0`, from the exact KKT system.
pub fn static_optimum(p: &LQProblem) -> Result<StaticOptimum> {
    let (n, m) = (p.n(), p.m());
    let dim = 2 * n + m;
    let mut kkt = QMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = p.q[(i, j)].clone();
            kkt[(i, n + m + j)] = p.a[(j, i)].clone();
            kkt[(n + m + i, j)] = p.a[(i, j)].clone();
        }
        for j in 0..m {
            kkt[(n + j, n + m + i)] = p.b[(i, j)].clone();
            kkt[(n + m + i, n + j)] = p.b[(i, j)].clone();
        }
    }
    for i in 0..m {
        for j in 0..m {
            kkt[(n + i, n + j)] = p.r[(i, j)].clone();
        }
    }
    let mut rhs = p.q.mul_vec(&p.x_ref)?;
    rhs.extend(p.r.mul_vec(&p.u_ref)?);
    rhs.extend(std::iter::repeat_n(Rational::zero(), n));

    let (z, unique) = match kkt.solve(&rhs) {
        Ok(z) => (z, true),
        Err(_) => {
            // minimum-norm solution z = K^T w with K K^T w = rhs
            let kt = kkt.transpose();
            let gram = &kkt * &kt;
            let w = gram
                .solve_consistent(&rhs)
                .ok_or_else(|| Error::Singular("static KKT system is inconsistent".into()))?;
            (kt.mul_vec(&w)?, false)
        }
    };
    // Lagrangian f + lambda.(Ax + Bu): stationarity reads Q(x - x_ref) + A^T lambda = 0
    let x_bar = z[..n].to_vec();
    let u_bar = z[n..n + m].to_vec();
    let multiplier = z[n + m..].to_vec();
    let dx = sub(&x_bar, &p.x_ref);
    let du = sub(&u_bar, &p.u_ref);
    let half = Rational::new(1.into(), 2.into());
    let objective_value = half * (dot(&dx, &p.q.mul_vec(&dx)?) + dot(&du, &p.r.mul_vec(&du)?));
    Ok(StaticOptimum {
        x_bar,
        u_bar,
        multiplier,
        objective_value,
        unique,
    })
}

/// Shift `(x, u)` by the static optimum. The returned residual holds the
/// coefficients of the linear running-cost terms in the centered variables.
pub fn center(p: &LQProblem, s: &StaticOptimum) -> Result<(LQProblem, AffineResidual)> {
    let (n, m) = (p.n(), p.m());
    let shift = (&p.m0 + &p.m1).mul_vec(&s.x_bar)?;
    let gamma = sub(&p.gamma, &shift);
    let residual = AffineResidual {
        state: p.q.mul_vec(&sub(&s.x_bar, &p.x_ref))?,
        input: p.r.mul_vec(&sub(&s.u_bar, &p.u_ref))?,
    };
    let control_traces = p
        .control_traces
        .iter()
        .map(|t| {
            let value = if t.order == 0 {
                &t.value - dot(&t.coefficients, &s.u_bar)
            } else {
                t.value.clone()
            };
            ControlTrace { value, ..t.clone() }
        })
        .collect();
    let centered = LQProblem {
        gamma,
        x_ref: vec![Rational::zero(); n],
        u_ref: vec![Rational::zero(); m],
        control_traces,
        ..p.clone()
    };
    Ok((centered, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::{rat, ratio};

    pub(crate) fn double_integrator_doc(q1: &str, q2: &str, r: &str) -> String {
        format!(
            r#"{{
  "n": 2, "m": 1, "k": 4,
  "A": [[0, 1], [0, 0]], "B": [[0], [1]],
  "Q": [[{q1}, 0], [0, {q2}]], "R": [[{r}]],
  "M0": [[1, 0], [0, 1], [0, 0], [0, 0]],
  "M1": [[0, 0], [0, 0], [1, 0], [0, 1]],
  "gamma": [1, 0, 0, 0], "x_ref": ["3/2", "0.5"], "u_ref": [2], "T": 30
}}"#
        )
    }

    #[test]
    fn loads_double_integrator() {
        let p = load_problem(&double_integrator_doc("1", "1", "1")).unwrap();
        assert_eq!((p.n(), p.m(), p.k()), (2, 1, 4));
        assert_eq!(p.x_ref, vec![ratio(3, 2), ratio(1, 2)]);
        assert_eq!(p.horizon, 30.0);
    }

    #[test]
    fn decimal_entries_are_exact() {
        let p = load_problem(&double_integrator_doc("0.1", "1e-3", "2.50")).unwrap();
        assert_eq!(p.q[(0, 0)], ratio(1, 10));
        assert_eq!(p.q[(1, 1)], ratio(1, 1000));
        assert_eq!(p.r[(0, 0)], ratio(5, 2));
    }

    #[test]
    fn rejects_bad_documents() {
        let doc = double_integrator_doc("1", "1", "1");
        let zero_rows = doc
            .replace("[[1, 0], [0, 1], [0, 0], [0, 0]]", "[[0, 0], [0, 0], [0, 0], [0, 0]]")
            .replace("[[0, 0], [0, 0], [1, 0], [0, 1]]", "[[0, 0], [0, 0], [0, 0], [0, 0]]");
        assert!(matches!(load_problem(&zero_rows), Err(Error::BoundaryRank { rank: 0, k: 4 })));
        let indefinite = double_integrator_doc("-1", "1", "1");
        assert!(matches!(load_problem(&indefinite), Err(Error::Indefinite { name: "Q" })));
        let horizon = doc.replace("\"T\": 30", "\"T\": 0");
        assert!(matches!(load_problem(&horizon), Err(Error::Horizon(_))));
        let asym = doc.replace("[[1, 0], [0, 1]]", "[[1, 1], [0, 1]]");
        assert!(matches!(load_problem(&asym), Err(Error::NotSymmetric { name: "Q" })));
        assert!(matches!(load_problem("{\"n\": 2}"), Err(Error::Schema(_))));
    }

    #[test]
    fn serialize_round_trip() {
        let mut p = load_problem(&double_integrator_doc("\"1/3\"", "0.25", "7")).unwrap();
        p.horizon = 12.345678901234567;
        p.control_traces.push(ControlTrace {
            endpoint: Endpoint::Final,
            order: 1,
            coefficients: vec![ratio(-2, 9)],
            value: rat(4),
        });
        let back = load_problem(&p.serialize()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn double_integrator_static_optimum() {
        let p = load_problem(&double_integrator_doc("1", "1", "1")).unwrap();
        let s = static_optimum(&p).unwrap();
        assert!(s.unique);
        assert_eq!(s.x_bar, vec![ratio(3, 2), rat(0)]);
        assert_eq!(s.u_bar, vec![rat(0)]);
        // A x + B u = 0 and stationarity
        let ax = p.a.mul_vec(&s.x_bar).unwrap();
        let bu = p.b.mul_vec(&s.u_bar).unwrap();
        assert!(ax.iter().zip(&bu).all(|(a, b)| (a + b).is_zero()));
        // 1/2 (q2 (0 - 1/2)^2 + r (0 - 2)^2) = 1/2 (1/4 + 4)
        assert_eq!(s.objective_value, ratio(17, 8));
    }

    #[test]
    fn singular_static_problem_takes_min_norm() {
        let p = load_problem(&double_integrator_doc("0", "1", "1")).unwrap();
        let s = static_optimum(&p).unwrap();
        assert!(!s.unique);
        assert_eq!(s.x_bar[0], rat(0));
    }

    #[test]
    fn centering_residual_and_idempotence() {
        let p = load_problem(&double_integrator_doc("1", "3", "5")).unwrap();
        let s = static_optimum(&p).unwrap();
        let (c, res) = center(&p, &s).unwrap();
        // coefficients -q2 alpha2 on x2 = ydot and -r beta on u = yddot
        assert_eq!(res.state, vec![rat(0), ratio(-3, 2)]);
        assert_eq!(res.input, vec![rat(-10)]);
        assert_eq!(c.gamma, vec![ratio(-1, 2), rat(0), ratio(-3, 2), rat(0)]);
        let s2 = static_optimum(&c).unwrap();
        let (c2, res2) = center(&c, &s2).unwrap();
        assert_eq!(c2, c);
        assert!(res2.is_zero());
    }
}
