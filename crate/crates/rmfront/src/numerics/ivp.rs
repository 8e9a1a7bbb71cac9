//! Adaptive explicit integration of complex ODE systems with the
//! Dormand-Prince 5(4) embedded pair and a PI step-size controller
//! (Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4-II.5).
//! Complex states are integrated as interleaved real pairs.

use super::{C64, NumericsError};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - 0.75 * BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 6.0;
const ABS_FLOOR: f64 = 1e-300;
const MAX_STEPS: usize = 50_000_000;

pub struct IvpSolution {
    /// Accepted abscissae, strictly monotone in the direction of integration.
    pub nodes: Vec<f64>,
    /// State at each accepted node.
    pub states: Vec<Vec<C64>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl IvpSolution {
    pub fn final_t(&self) -> f64 {
        *self.nodes.last().expect("solution has at least the initial node")
    }

    pub fn final_state(&self) -> &[C64] {
        self.states.last().expect("solution has at least the initial node")
    }
}

fn pack(y: &[C64], out: &mut Vec<f64>) {
    out.clear();
    for v in y {
        out.push(v.re);
        out.push(v.im);
    }
}

fn unpack(y: &[f64], out: &mut Vec<C64>) {
    out.clear();
    for ch in y.chunks_exact(2) {
        out.push(C64::new(ch[0], ch[1]));
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Integrate y' = field(t, y) from span.0 to span.1 with relative tolerance
/// `tol`, returning every accepted node when `store_path` is set and only the
/// endpoints otherwise.
pub fn integrate_ivp_opts<F>(
    mut field: F,
    y0: &[C64],
    span: (f64, f64),
    tol: f64,
    store_path: bool,
) -> Result<IvpSolution, NumericsError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidInput {
            op: "integrate_ivp",
            msg: format!("tolerance must be positive, got {tol}"),
        });
    }
    let (t0, t1) = span;
    if !t0.is_finite() || !t1.is_finite() {
        return Err(NumericsError::InvalidInput {
            op: "integrate_ivp",
            msg: "non-finite span".to_string(),
        });
    }
    let n = y0.len();
    let nr = 2 * n;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };

    let mut ybuf = Vec::with_capacity(n);
    let mut dybuf = vec![C64::new(0.0, 0.0); n];
    let mut eval = |t: f64, yr: &[f64], out: &mut [f64], ybuf: &mut Vec<C64>, dybuf: &mut Vec<C64>| {
        unpack(yr, ybuf);
        field(t, ybuf, dybuf);
        for (i, v) in dybuf.iter().enumerate() {
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
    };

    let mut y = Vec::with_capacity(nr);
    pack(y0, &mut y);
    let mut k1 = vec![0.0; nr];
    let mut k2 = vec![0.0; nr];
    let mut k3 = vec![0.0; nr];
    let mut k4 = vec![0.0; nr];
    let mut k5 = vec![0.0; nr];
    let mut k6 = vec![0.0; nr];
    let mut k7 = vec![0.0; nr];
    let mut ytmp = vec![0.0; nr];
    let mut ynew = vec![0.0; nr];

    let mut t = t0;
    eval(t, &y, &mut k1, &mut ybuf, &mut dybuf);

    // initial step from the first-derivative scale
    let d0 = norm_inf(&y).max(1e-8);
    let d1 = norm_inf(&k1);
    let mut h = if d1 > 0.0 {
        (0.01 * d0 / d1).min((t1 - t0).abs())
    } else {
        1e-3 * (t1 - t0).abs()
    };
    if h == 0.0 {
        h = 1e-6;
    }
    h *= dir;

    let mut sol = IvpSolution {
        nodes: vec![t0],
        states: vec![y0.to_vec()],
        n_accepted: 0,
        n_rejected: 0,
    };

    if t0 == t1 {
        return Ok(sol);
    }

    let mut facold = 1e-4f64;
    let mut last_rejected = false;
    for _ in 0..MAX_STEPS {
        let mut last = false;
        if (t + 1.01 * h - t1) * dir > 0.0 {
            h = t1 - t;
            last = true;
        }
        let hmin = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h.abs() < hmin {
            if last {
                // remaining gap is below resolution; the state already holds
                sol.nodes.push(t1);
                sol.states.push({
                    unpack(&y, &mut ybuf);
                    ybuf.clone()
                });
                return Ok(sol);
            }
            return Err(NumericsError::StepUnderflow { t, h });
        }

        for i in 0..nr {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        eval(t + C2 * h, &ytmp, &mut k2, &mut ybuf, &mut dybuf);
        for i in 0..nr {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        eval(t + C3 * h, &ytmp, &mut k3, &mut ybuf, &mut dybuf);
        for i in 0..nr {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval(t + C4 * h, &ytmp, &mut k4, &mut ybuf, &mut dybuf);
        for i in 0..nr {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval(t + C5 * h, &ytmp, &mut k5, &mut ybuf, &mut dybuf);
        for i in 0..nr {
            ytmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        eval(t + h, &ytmp, &mut k6, &mut ybuf, &mut dybuf);
        for i in 0..nr {
            ynew[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        eval(t + h, &ynew, &mut k7, &mut ybuf, &mut dybuf);

        if ynew.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteState { t: t + h });
        }

        let scale = ABS_FLOOR + tol * norm_inf(&y).max(norm_inf(&ynew));
        let mut err = 0.0f64;
        for i in 0..nr {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max(e.abs());
        }
        err /= scale;

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            sol.n_accepted += 1;
            if store_path || last {
                unpack(&y, &mut ybuf);
                sol.nodes.push(t);
                sol.states.push(ybuf.clone());
            }
            if last {
                return Ok(sol);
            }
            let fac11 = err.max(1e-16).powf(EXPO1);
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = if hnew.abs() < h.abs() { hnew } else { h };
            }
            h = hnew;
            facold = err.max(1e-4);
            last_rejected = false;
        } else {
            sol.n_rejected += 1;
            let fac11 = err.powf(EXPO1);
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    Err(NumericsError::StepUnderflow { t, h })
}

/// Integrate and keep the full accepted-node path.
pub fn integrate_ivp<F>(
    field: F,
    y0: &[C64],
    span: (f64, f64),
    tol: f64,
) -> Result<IvpSolution, NumericsError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    integrate_ivp_opts(field, y0, span, tol, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = integrate_ivp(
            |_t, y, dy| dy[0] = -y[0],
            &[C64::new(1.0, 0.0)],
            (0.0, 1.0),
            1e-10,
        )
        .unwrap();
        let want = (-1.0f64).exp();
        assert!((sol.final_state()[0].re - want).abs() < 1e-8);
        assert!(sol.final_state()[0].im.abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_closes() {
        // y'' = -y as a 2-system; after a full period the state returns
        let sol = integrate_ivp(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            (0.0, 2.0 * std::f64::consts::PI),
            1e-9,
        )
        .unwrap();
        assert!((sol.final_state()[0].re - 1.0).abs() < 1e-6);
        assert!(sol.final_state()[1].re.abs() < 1e-6);
    }

    #[test]
    fn fast_decay_accurate_or_clean_failure() {
        let r = integrate_ivp(
            |_t, y, dy| dy[0] = -1e3 * y[0],
            &[C64::new(1.0, 0.0)],
            (0.0, 0.1),
            1e-8,
        );
        match r {
            Ok(sol) => {
                let want = (-100.0f64).exp();
                let got = sol.final_state()[0].re;
                assert!(
                    (got - want).abs() <= 1e-5 * want.abs().max(1e-60),
                    "got {got:e}, want {want:e}"
                );
            }
            Err(NumericsError::StepUnderflow { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn backward_integration() {
        let sol = integrate_ivp(
            |_t, y, dy| dy[0] = y[0],
            &[C64::new(1.0, 0.0)],
            (1.0, 0.0),
            1e-10,
        )
        .unwrap();
        assert!((sol.final_state()[0].re - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn complex_rotation() {
        // y' = i y keeps |y| = 1
        let sol = integrate_ivp(
            |_t, y, dy| dy[0] = C64::new(0.0, 1.0) * y[0],
            &[C64::new(1.0, 0.0)],
            (0.0, std::f64::consts::PI),
            1e-10,
        )
        .unwrap();
        let z = sol.final_state()[0];
        assert!((z - C64::new(-1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn monotone_nodes() {
        let sol = integrate_ivp(
            |t, _y, dy| dy[0] = C64::new(t.cos(), 0.0),
            &[C64::new(0.0, 0.0)],
            (0.0, 10.0),
            1e-8,
        )
        .unwrap();
        for w in sol.nodes.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(sol.nodes.len(), sol.states.len());
        assert!((sol.final_state()[0].re - 10.0f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let r = integrate_ivp(|_t, y, dy| dy[0] = y[0], &[C64::new(1.0, 0.0)], (0.0, 1.0), 0.0);
        assert!(r.is_err());
    }
}
