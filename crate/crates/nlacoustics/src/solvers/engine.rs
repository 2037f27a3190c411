//! Time-marching engine for semilinear systems `∂u/∂s = L u + N(u, s)` whose
//! linear part `L` is propagated exactly in spectral space.

use std::cell::RefCell;
use std::rc::Rc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A system state: one real sample vector per unknown.
pub type State = Vec<Vec<f64>>;

/// Time-integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Half linear step, classical RK4 on the nonlinear part, half linear step
    /// (second order).
    #[default]
    Strang,
    /// Integrating-factor (Lawson) RK4 (fourth order).
    Lawson,
}

/// Step size, scheme and output sampling of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControl {
    /// Upper bound on the evolution increment; the span is divided into the
    /// smallest number of equal steps not exceeding it.
    pub step: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// A snapshot is recorded every `substeps` steps (and at the end).
    #[serde(default = "one")]
    pub substeps: usize,
}

fn one() -> usize {
    1
}

impl StepControl {
    /// Strang scheme, one snapshot per step.
    pub fn new(step: f64) -> Self {
        StepControl { step, scheme: Scheme::Strang, substeps: 1 }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || self.substeps == 0 {
            return Err(Error::InvalidInput(format!(
                "step must be positive and substeps >= 1 (got {}, {})",
                self.step, self.substeps
            )));
        }
        Ok(())
    }

    /// Number of equal steps covering `span` and their size.
    pub fn partition(&self, span: f64) -> (usize, f64) {
        if span <= 0.0 {
            return (0, 0.0);
        }
        let n = ((span / self.step) - 1e-9).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }
}

/// A semilinear system advanced by [`march`].
pub trait Semilinear {
    /// Applies the exact linear propagator over `dt`.
    fn propagate(&self, u: &State, dt: f64) -> Result<State>;
    /// Evaluates the explicit part at evolution value `s`.
    fn nonlinear(&self, u: &State, s: f64) -> Result<State>;
    /// Post-step projection (e.g. restoring a zero mean).
    fn finish_step(&self, _u: &mut State) -> Result<()> {
        Ok(())
    }
}

fn axpy(y: &State, a: f64, x: &State) -> State {
    y.iter().zip(x).map(|(yc, xc)| yc.iter().zip(xc).map(|(p, q)| p + a * q).collect()).collect()
}

fn add_scaled(mut y: State, a: f64, x: &State) -> State {
    for (yc, xc) in y.iter_mut().zip(x) {
        for (p, q) in yc.iter_mut().zip(xc) {
            *p += a * q;
        }
    }
    y
}

/// One step of size `h` from evolution value `s`.
pub fn step(sys: &dyn Semilinear, scheme: Scheme, u: &State, s: f64, h: f64) -> Result<State> {
    let mut out = match scheme {
        Scheme::Strang => {
            let v = sys.propagate(u, 0.5 * h)?;
            let k1 = sys.nonlinear(&v, s)?;
            let k2 = sys.nonlinear(&axpy(&v, 0.5 * h, &k1), s + 0.5 * h)?;
            let k3 = sys.nonlinear(&axpy(&v, 0.5 * h, &k2), s + 0.5 * h)?;
            let k4 = sys.nonlinear(&axpy(&v, h, &k3), s + h)?;
            let mut w = add_scaled(v, h / 6.0, &k1);
            w = add_scaled(w, h / 3.0, &k2);
            w = add_scaled(w, h / 3.0, &k3);
            w = add_scaled(w, h / 6.0, &k4);
            sys.propagate(&w, 0.5 * h)?
        }
        Scheme::Lawson => {
            let k1 = sys.nonlinear(u, s)?;
            let a = sys.propagate(&axpy(u, 0.5 * h, &k1), 0.5 * h)?;
            let k2 = sys.nonlinear(&a, s + 0.5 * h)?;
            let u_half = sys.propagate(u, 0.5 * h)?;
            let b = axpy(&u_half, 0.5 * h, &k2);
            let k3 = sys.nonlinear(&b, s + 0.5 * h)?;
            let c = sys.propagate(&axpy(&u_half, h, &k3), 0.5 * h)?;
            let k4 = sys.nonlinear(&c, s + h)?;
            // E(h)u + h/6 [E(h)k1 + 2E(h/2)(k2 + k3) + k4]
            let inner = sys.propagate(&axpy(u, h / 6.0, &k1), 0.5 * h)?;
            let mut mid = add_scaled(inner, h / 3.0, &k2);
            mid = add_scaled(mid, h / 3.0, &k3);
            add_scaled(sys.propagate(&mid, 0.5 * h)?, h / 6.0, &k4)
        }
    };
    sys.finish_step(&mut out)?;
    Ok(out)
}

fn norm(u: &State) -> f64 {
    u.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Marches `u0` from `s0` to `s_end`, calling `observe(s, u)` at the start, every
/// `ctl.substeps` steps and at the end. Fails with `Diverged` once the state
/// norm exceeds `10⁶×` its initial value and with `NumericalFailure` on NaN.
pub fn march(
    sys: &dyn Semilinear,
    u0: State,
    s0: f64,
    s_end: f64,
    ctl: &StepControl,
    mut observe: impl FnMut(f64, &State) -> Result<()>,
) -> Result<State> {
    ctl.validate()?;
    let (n, h) = ctl.partition(s_end - s0);
    let n0 = norm(&u0);
    let limit = 1e6 * if n0 > 0.0 { n0 } else { 1.0 };
    let mut u = u0;
    observe(s0, &u)?;
    for i in 0..n {
        let s = s0 + i as f64 * h;
        u = step(sys, ctl.scheme, &u, s, h)?;
        let s_next = if i + 1 == n { s_end } else { s0 + (i + 1) as f64 * h };
        let nu = norm(&u);
        if !nu.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite state at {s_next}")));
        }
        if nu > limit {
            return Err(Error::Diverged { evol: s_next });
        }
        if (i + 1) % ctl.substeps == 0 || i + 1 == n {
            observe(s_next, &u)?;
        }
    }
    Ok(u)
}

/// Per-mode `exp(h M)` for `M = [[m00, m01], [m10, m11]]`, stable for both
/// oscillatory and strongly damped modes.
pub fn expm2(m: [Complex64; 4], h: f64) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    let mu = 0.5 * (m[0] + m[3]);
    let det = m[0] * m[3] - m[1] * m[2];
    let d = (mu * mu - det).sqrt();
    let dh = d * h;
    // exp(hM) = C·I + S·(M − μI), C = e^{μh}cosh(dh), S = e^{μh}sinh(dh)/d
    let (cc, ss) = if dh.norm() < 1e-2 {
        let z = dh * dh;
        let e = (mu * h).exp();
        let cosh = one + z / 2.0 + z * z / 24.0 + z * z * z / 720.0;
        let sinhc = one + z / 6.0 + z * z / 120.0 + z * z * z / 5040.0;
        (e * cosh, e * sinhc * h)
    } else {
        let e1 = ((mu + d) * h).exp();
        let e2 = ((mu - d) * h).exp();
        ((e1 + e2) * 0.5, (e1 - e2) / (2.0 * d))
    };
    [cc + ss * (m[0] - mu), ss * m[1], ss * m[2], cc + ss * (m[3] - mu)]
}

/// Memoizes per-mode propagator tables keyed by the step size.
pub struct PropagatorCache<T> {
    entries: RefCell<Vec<(u64, Rc<Vec<T>>)>>,
}

impl<T> Default for PropagatorCache<T> {
    fn default() -> Self {
        PropagatorCache { entries: RefCell::new(Vec::new()) }
    }
}

impl<T> PropagatorCache<T> {
    pub fn get(&self, dt: f64, build: impl FnOnce() -> Vec<T>) -> Rc<Vec<T>> {
        let key = dt.to_bits();
        if let Some((_, t)) = self.entries.borrow().iter().find(|(k, _)| *k == key) {
            return Rc::clone(t);
        }
        let table = Rc::new(build());
        let mut e = self.entries.borrow_mut();
        if e.len() >= 6 {
            e.remove(0);
        }
        e.push((key, Rc::clone(&table)));
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn series_expm(m: [Complex64; 4], h: f64) -> [Complex64; 4] {
        let mut term = [c(1.0), c(0.0), c(0.0), c(1.0)];
        let mut sum = term;
        for k in 1..60 {
            let t = [
                (term[0] * m[0] + term[1] * m[2]) * h / k as f64,
                (term[0] * m[1] + term[1] * m[3]) * h / k as f64,
                (term[2] * m[0] + term[3] * m[2]) * h / k as f64,
                (term[2] * m[1] + term[3] * m[3]) * h / k as f64,
            ];
            term = t;
            for i in 0..4 {
                sum[i] += term[i];
            }
        }
        sum
    }

    #[test]
    fn expm2_matches_taylor_series() {
        let cases = [
            [c(0.0), Complex64::new(0.0, -2.0), Complex64::new(0.0, -0.5), c(-0.3)],
            [c(0.0), c(1.0), c(-4.0), c(-4.0)], // repeated eigenvalue
            [c(0.0), c(0.0), c(0.0), c(0.0)],
            [c(0.1), c(0.2), c(0.3), c(-0.4)],
        ];
        for m in cases {
            let a = expm2(m, 0.7);
            let b = series_expm(m, 0.7);
            for i in 0..4 {
                assert!((a[i] - b[i]).norm() < 1e-12, "{m:?}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn expm2_is_finite_for_stiff_damping() {
        let m = [c(0.0), c(1.0), c(-1.0), c(-1e5)];
        let a = expm2(m, 0.1);
        assert!(a.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    struct Decay;
    impl Semilinear for Decay {
        fn propagate(&self, u: &State, dt: f64) -> Result<State> {
            Ok(vec![u[0].iter().map(|v| v * (-dt).exp()).collect()])
        }
        fn nonlinear(&self, u: &State, _s: f64) -> Result<State> {
            Ok(vec![u[0].iter().map(|v| -v * v).collect()])
        }
    }

    // u' = −u − u², u(0) = 1 → u = 1/(2eᵗ − 1)
    fn order(scheme: Scheme) -> f64 {
        let exact = 1.0 / (2.0 * 1f64.exp() - 1.0);
        let err = |h: f64| {
            let u = march(&Decay, vec![vec![1.0]], 0.0, 1.0, &StepControl::new(h).with_scheme(scheme), |_, _| Ok(()))
                .unwrap();
            (u[0][0] - exact).abs()
        };
        (err(0.05) / err(0.025)).log2()
    }

    #[test]
    fn schemes_reach_design_order() {
        assert!((order(Scheme::Strang) - 2.0).abs() < 0.2);
        assert!((order(Scheme::Lawson) - 4.0).abs() < 0.3);
    }

    #[test]
    fn partition_covers_span_exactly() {
        let ctl = StepControl::new(0.3);
        let (n, h) = ctl.partition(1.0);
        assert_eq!(n, 4);
        assert!((n as f64 * h - 1.0).abs() < 1e-15);
        assert_eq!(StepControl::new(0.25).partition(1.0).0, 4);
    }

    #[test]
    fn divergence_is_reported() {
        struct Blow;
        impl Semilinear for Blow {
            fn propagate(&self, u: &State, _dt: f64) -> Result<State> {
                Ok(u.clone())
            }
            fn nonlinear(&self, u: &State, _s: f64) -> Result<State> {
                Ok(vec![u[0].iter().map(|v| 50.0 * v).collect()])
            }
        }
        let r = march(&Blow, vec![vec![1.0]], 0.0, 10.0, &StepControl::new(0.1), |_, _| Ok(()));
        assert!(matches!(r, Err(Error::Diverged { .. })));
    }
}
