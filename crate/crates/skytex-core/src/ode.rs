//! Dormand–Prince 5(4) integrator for 3-vectors.

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug)]
pub(crate) struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct OdeFailure {
    pub t: f64,
    pub steps: usize,
    pub last_h: f64,
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type V = [f64; 3];

fn axpy(y: &V, terms: &[(f64, &V)], h: f64) -> V {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
pub(crate) fn dopri5<F: Fn(f64, &V) -> V>(f: F, t0: f64, y0: V, t1: f64, opts: OdeOptions) -> Result<V, OdeFailure> {
    if t1 == t0 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = span / 100.0;
    let mut steps = 0;
    loop {
        if steps >= opts.max_steps || h.abs() < 1e-15 * span.abs().max(1e-300) {
            return Err(OdeFailure { t, steps, last_h: h });
        }
        let last = (t + h - t1) * span.signum() >= 0.0;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(t + C5 * h, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(t + h, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let ynew = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &ynew);
        let mut err = 0.0;
        for i in 0..3 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / 3.0).sqrt();
        steps += 1;
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = ynew;
            k1 = k7;
            if last {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, max_steps: 100_000 };
        let y = dopri5(|_, y| [y[1], -y[0], 0.0], 0.0, [1.0, 0.0, 0.0], 10.0, opts).unwrap();
        assert!((y[0] - 10.0f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10.0f64.sin()).abs() < 1e-10);
    }
}
