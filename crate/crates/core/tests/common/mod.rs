//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use lqflat::polymat::{parse_rational, rat, Rational};
use lqflat::problem::LQProblem;
use lqflat::qmat::QMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(text: &str) -> Rational {
    parse_rational(text).expect("rational literal")
}

pub fn qm(rows: usize, cols: usize, values: &[&str]) -> QMatrix {
    QMatrix::from_fn(rows, cols, |i, j| q(values[i * cols + j]))
}

pub fn qv(values: &[&str]) -> Vec<Rational> {
    values.iter().map(|s| q(s)).collect()
}

/// Full-state rows at both ends: `x(0) = x0`, `x(T) = xt`.
pub fn full_state_rows(n: usize) -> (QMatrix, QMatrix) {
    let m0 = QMatrix::from_fn(2 * n, n, |i, j| if i == j { rat(1) } else { rat(0) });
    let m1 = QMatrix::from_fn(2 * n, n, |i, j| if i == j + n { rat(1) } else { rat(0) });
    (m0, m1)
}

pub fn double_integrator(q1: &str, q2: &str, r: &str, x0: [&str; 2], xt: [&str; 2], horizon: f64) -> LQProblem {
    let (m0, m1) = full_state_rows(2);
    LQProblem {
        a: qm(2, 2, &["0", "1", "0", "0"]),
        b: qm(2, 1, &["0", "1"]),
        q: qm(2, 2, &[q1, "0", "0", q2]),
        r: qm(1, 1, &[r]),
        m0,
        m1,
        gamma: qv(&[x0[0], x0[1], xt[0], xt[1]]),
        x_ref: qv(&["0", "0"]),
        u_ref: qv(&["0"]),
        horizon,
        control_traces: Vec::new(),
    }
}

/// Positive root real part of `r l^4 - q2 l^2 + q1` for the double integrator.
pub fn double_integrator_mu(q1: f64, q2: f64, r: f64) -> f64 {
    // l^2 = (q2 +- sqrt(q2^2 - 4 r q1)) / 2r
    let disc = q2 * q2 - 4.0 * r * q1;
    if disc >= 0.0 {
        let small = (q2 - disc.sqrt()) / (2.0 * r);
        small.sqrt()
    } else {
        // l^2 = rho e^{+-i phi}, l = sqrt(rho) e^{+-i phi/2}
        let rho = (q1 / r).sqrt();
        let phi = ((-disc).sqrt()).atan2(q2);
        rho.sqrt() * (phi / 2.0).cos()
    }
}

pub struct BatteryCase {
    pub name: &'static str,
    pub problem: LQProblem,
    /// Slowest decay rate, computed independently of the library.
    pub mu0: f64,
}

/// Regular problems whose decay rates keep `exp(-40 mu0)` above roundoff.
pub fn regular_battery() -> Vec<BatteryCase> {
    let mut out = vec![
        BatteryCase {
            name: "double_integrator_unit",
            problem: double_integrator("1", "1", "1", ["1", "0"], ["0", "0"], 30.0),
            mu0: double_integrator_mu(1.0, 1.0, 1.0),
        },
        BatteryCase {
            name: "double_integrator_offset_reference",
            problem: {
                let mut p = double_integrator("1", "3", "1", ["1", "-1"], ["2", "0"], 20.0);
                p.x_ref = qv(&["1/2", "0"]);
                p
            },
            mu0: double_integrator_mu(1.0, 3.0, 1.0),
        },
        BatteryCase {
            name: "double_integrator_slow",
            problem: double_integrator("1/4", "2", "1", ["0", "1"], ["1", "0"], 20.0),
            mu0: double_integrator_mu(0.25, 2.0, 1.0),
        },
    ];
    // Triple integrator, Q = I, R = 1: det = -l^6 + l^4 - l^2 + 1 = (1 - l^2)(1 + l^4).
    let (m0, m1) = full_state_rows(3);
    out.push(BatteryCase {
        name: "triple_integrator",
        problem: LQProblem {
            a: qm(3, 3, &["0", "1", "0", "0", "0", "1", "0", "0", "0"]),
            b: qm(3, 1, &["0", "0", "1"]),
            q: QMatrix::identity(3),
            r: QMatrix::identity(1),
            m0,
            m1,
            gamma: qv(&["1", "0", "0", "0", "0", "0"]),
            x_ref: qv(&["0", "0", "0"]),
            u_ref: qv(&["0"]),
            horizon: 20.0,
            control_traces: Vec::new(),
        },
        mu0: std::f64::consts::FRAC_1_SQRT_2,
    });
    // Two double integrators sharing inputs. With v = (u1 + u2, u2) the weight
    // becomes the identity, so the rate is that of one unit copy.
    let (m0, m1) = full_state_rows(4);
    out.push(BatteryCase {
        name: "coupled_double_integrators",
        problem: LQProblem {
            a: qm(4, 4, &["0", "1", "0", "0", "0", "0", "0", "0", "0", "0", "0", "1", "0", "0", "0", "0"]),
            b: qm(4, 2, &["0", "0", "1", "1", "0", "0", "0", "1"]),
            q: QMatrix::identity(4),
            r: qm(2, 2, &["1", "1", "1", "2"]),
            m0,
            m1,
            gamma: qv(&["1", "0", "-1", "1", "0", "0", "0", "0"]),
            x_ref: qv(&["0", "0", "0", "0"]),
            u_ref: qv(&["0", "0"]),
            horizon: 20.0,
            control_traces: Vec::new(),
        },
        mu0: double_integrator_mu(1.0, 1.0, 1.0),
    });
    out
}

/// Cheap control `q1 = 4, q2 = 1, r = 0` with one mixed row at each end:
/// `a0 y(0) + b0 y'(0) = c0`, `at y(T) + bt y'(T) = ct`.
pub fn cheap_mixed_problem(a0: i64, b0: i64, at: i64, bt: i64, c0: i64, ct: i64, horizon: f64) -> LQProblem {
    LQProblem {
        a: qm(2, 2, &["0", "1", "0", "0"]),
        b: qm(2, 1, &["0", "1"]),
        q: qm(2, 2, &["4", "0", "0", "1"]),
        r: qm(1, 1, &["0"]),
        m0: QMatrix::from_i64(2, 2, &[a0, b0, 0, 0]),
        m1: QMatrix::from_i64(2, 2, &[0, 0, at, bt]),
        gamma: vec![rat(c0), rat(ct)],
        x_ref: qv(&["0", "0"]),
        u_ref: qv(&["0"]),
        horizon,
        control_traces: Vec::new(),
    }
}

fn small_int(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    rat(rng.gen_range(lo..=hi))
}

/// Random controllable problem with `R` positive definite and full-state data.
pub fn random_regular_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LQProblem {
    loop {
        let a = QMatrix::from_fn(n, n, |_, _| small_int(rng, -2, 2));
        let b = QMatrix::from_fn(n, m, |_, _| small_int(rng, -2, 2));
        match lqflat::flatness::check_controllable(&a, &b) {
            Ok(c) if c.controllable && b.rank() == m => {}
            _ => continue,
        }
        let l = QMatrix::from_fn(n, n, |_, _| small_int(rng, -2, 2));
        let qw = l.transpose().try_mul(&l).unwrap();
        let s = QMatrix::from_fn(m, m, |_, _| small_int(rng, -1, 1));
        let rw = s.transpose().try_mul(&s).unwrap();
        let rw = QMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { rat(1) } else { rat(0) };
            rw.row(i)[j].clone() + d
        });
        let (m0, m1) = full_state_rows(n);
        let gamma = (0..2 * n).map(|_| small_int(rng, -2, 2)).collect();
        return LQProblem {
            a,
            b,
            q: qw,
            r: rw,
            m0,
            m1,
            gamma,
            x_ref: vec![rat(0); n],
            u_ref: vec![rat(0); m],
            horizon: 10.0,
            control_traces: Vec::new(),
        };
    }
}
