//! Dormand–Prince 5(4) stepper with the standard fourth-order continuous extension.

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of one trial step.
#[derive(Debug, Clone, Copy)]
pub struct Trial {
    pub y1: State,
    /// Derivative at the end point (FSAL).
    pub f1: State,
    /// Weighted RMS error norm; ≤ 1 means acceptable.
    pub err: f64,
    dense: [State; 5],
}

impl Trial {
    /// Continuous extension at `theta ∈ [0, 1]` of the step.
    pub fn interpolate(&self, theta: f64) -> State {
        let r = &self.dense;
        let s = 1.0 - theta;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i] + theta * (r[1][i] + s * (r[2][i] + theta * (r[3][i] + s * r[4][i])));
        }
        out
    }
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..2 {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        out[i] += h * s;
    }
    out
}

/// One Dormand–Prince step of size `h` from `(t, y)` with `f0 = f(t, y)`.
pub fn step<F>(f: &F, t: f64, y: &State, f0: &State, h: f64, rtol: f64, atol: f64) -> Trial
where
    F: Fn(f64, &State) -> State,
{
    let k1 = *f0;
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(
        t + C4 * h,
        &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y1 = axpy(
        y,
        h,
        &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(t + h, &y1);

    let mut acc = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y1[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / 2.0).sqrt();

    let mut dense = [[0.0; 2]; 5];
    for i in 0..2 {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        dense[0][i] = y[i];
        dense[1][i] = ydiff;
        dense[2][i] = bspl;
        dense[3][i] = ydiff - h * k7[i] - bspl;
        dense[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Trial {
        y1,
        f1: k7,
        err,
        dense,
    }
}

/// Standard step-size controller factor, clamped to [0.2, 5].
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}
