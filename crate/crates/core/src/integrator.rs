//! Embedded Dormand-Prince pairs, 5(4) and 8(5,3), with proportional-integral
//! step-size control.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest step before the problem is declared stiff.
pub const MIN_STEP: f64 = 1e-12;

const DP5_C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
const DP5_A: [[f64; 6]; 6] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
];
const DP5_B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// the last entry weights the derivative at the new point
const DP5_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const DOP853_C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const DOP853_A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const DOP853_B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const DOP853_E3: [f64; 12] = [-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082];
const DOP853_E5: [f64; 12] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.1;
const MAX_FACTOR: f64 = 5.0;

/// Embedded Runge-Kutta pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dormand-Prince 5(4).
    Dopri5,
    /// Dormand-Prince 8(5,3).
    #[default]
    Dop853,
}

impl Method {
    fn order(self) -> f64 {
        match self {
            Method::Dopri5 => 5.0,
            Method::Dop853 => 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { atol: 1e-8, rtol: 1e-8 }
    }
}

/// Step-size controller state; enough to resume a run bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub dt: f64,
    pub facold: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Result of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub dt_used: f64,
    pub dt_next: f64,
    pub error: f64,
}

/// Adaptive integrator for `y' = L y + f(t, y)` on complex vectors, with an
/// optional diagonal linear part `L` that is integrated exactly
/// (integrating-factor form of the same pairs).
#[derive(Debug, Clone)]
pub struct Integrator {
    pub method: Method,
    pub tol: Tolerances,
    linear: Option<Vec<Complex64>>,
    dt: f64,
    facold: f64,
    fsal: Option<Vec<Complex64>>,
    pub stats: StepStats,
}

struct Tableau {
    c: &'static [f64],
    a: Vec<&'static [f64]>,
    b: &'static [f64],
}

impl Method {
    fn tableau(self) -> Tableau {
        match self {
            Method::Dopri5 => Tableau {
                c: &DP5_C,
                a: DP5_A.iter().map(|r| &r[..]).collect(),
                b: &DP5_B,
            },
            Method::Dop853 => Tableau {
                c: &DOP853_C,
                a: DOP853_A.iter().map(|r| &r[..]).collect(),
                b: &DOP853_B,
            },
        }
    }
}

fn combine(ks: &[Vec<Complex64>], coeffs: &[f64], i: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in ks.iter().zip(coeffs) {
        if c != 0.0 {
            acc += k[i] * c;
        }
    }
    acc
}

impl Integrator {
    pub fn new(method: Method, tol: Tolerances, dt: f64) -> Result<Integrator> {
        if !(tol.atol > 0.0 && tol.rtol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Config("initial step must be positive".into()));
        }
        Ok(Integrator {
            method,
            tol,
            linear: None,
            dt,
            facold: 1e-4,
            fsal: None,
            stats: StepStats::default(),
        })
    }

    pub fn from_controller(method: Method, tol: Tolerances, c: ControllerState) -> Result<Integrator> {
        let mut out = Integrator::new(method, tol, c.dt)?;
        out.facold = c.facold;
        Ok(out)
    }

    /// Diagonal linear part, one rate per component; `f` then supplies only
    /// the remainder.
    pub fn with_linear(mut self, rates: Vec<Complex64>) -> Integrator {
        self.linear = Some(rates);
        self.fsal = None;
        self
    }

    /// Replaces the linear part; the cached derivative is dropped.
    pub fn set_linear(&mut self, rates: Vec<Complex64>) {
        self.linear = Some(rates);
        self.fsal = None;
    }

    pub fn controller(&self) -> ControllerState {
        ControllerState {
            dt: self.dt,
            facold: self.facold,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Drops the cached derivative; needed whenever `y` is modified outside
    /// the integrator.
    pub fn invalidate(&mut self) {
        self.fsal = None;
    }

    /// Error weights; a step is accepted when every component of the error
    /// estimate is within its own weight.
    fn scale(&self, y: Complex64, ynew: Complex64) -> f64 {
        self.tol.atol + self.tol.rtol * y.norm().max(ynew.norm())
    }

    /// `x * exp(tau L)` in place.
    fn flow(&self, tau: f64, x: &mut [Complex64]) {
        if let Some(rates) = &self.linear {
            if tau != 0.0 {
                for (z, r) in x.iter_mut().zip(rates) {
                    *z *= (r * tau).exp();
                }
            }
        }
    }

    /// Trial step of size `h` from the remainder `n1` at `(t, y)`: new state,
    /// remainder there, error norm and evaluation count.
    fn attempt<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[Complex64],
        n1: &[Complex64],
        h: f64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, f64, usize)>
    where
        F: FnMut(f64, &[Complex64]) -> Result<Vec<Complex64>>,
    {
        let n = y.len();
        let tab = self.method.tableau();
        let stages = tab.c.len();
        // stage slopes in the frame co-moving with the linear flow from t
        let mut ks: Vec<Vec<Complex64>> = Vec::with_capacity(stages + 1);
        ks.push(n1.to_vec());
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for st in 1..stages {
            let row = &tab.a[st][..st];
            for (i, o) in tmp.iter_mut().enumerate() {
                *o = y[i] + combine(&ks, row, i) * h;
            }
            let c = tab.c[st];
            self.flow(c * h, &mut tmp);
            let mut k = f(t + c * h, &tmp)?;
            self.flow(-c * h, &mut k);
            ks.push(k);
        }
        let mut ynew = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in ynew.iter_mut().enumerate() {
            *o = y[i] + combine(&ks, tab.b, i) * h;
        }
        self.flow(h, &mut ynew);
        let nnew = f(t + h, &ynew)?;
        let err = match self.method {
            Method::Dopri5 => {
                let mut knew = nnew.clone();
                self.flow(-h, &mut knew);
                ks.push(knew);
                let mut e: Vec<Complex64> = (0..n).map(|i| combine(&ks, &DP5_E, i) * h).collect();
                self.flow(h, &mut e);
                (0..n).map(|i| e[i].norm() / self.scale(y[i], ynew[i])).fold(0.0, f64::max)
            }
            Method::Dop853 => {
                // fifth-order estimate damped by the third-order one
                let mut e5: Vec<Complex64> = (0..n).map(|i| combine(&ks, &DOP853_E5, i)).collect();
                let mut e3: Vec<Complex64> = (0..n).map(|i| combine(&ks, &DOP853_E3, i)).collect();
                self.flow(h, &mut e5);
                self.flow(h, &mut e3);
                (0..n)
                    .map(|i| {
                        let sc = self.scale(y[i], ynew[i]);
                        let (a5, a3) = ((e5[i].norm() / sc).powi(2), (e3[i].norm() / sc).powi(2));
                        if a5 == 0.0 {
                            0.0
                        } else {
                            h * a5 / (a5 + 0.01 * a3).sqrt()
                        }
                    })
                    .fold(0.0, f64::max)
            }
        };
        Ok((ynew, nnew, err, stages))
    }

    /// Advances `(t, y)` by one accepted step that does not pass `t_end`.
    pub fn step<F>(&mut self, f: &mut F, t: &mut f64, y: &mut Vec<Complex64>, t_end: f64) -> Result<StepReport>
    where
        F: FnMut(f64, &[Complex64]) -> Result<Vec<Complex64>>,
    {
        if let Some(rates) = &self.linear {
            if rates.len() != y.len() {
                return Err(Error::Shape(format!("{} linear rates for {} components", rates.len(), y.len())));
            }
        }
        let n1 = match self.fsal.take() {
            Some(k) => k,
            None => {
                self.stats.evaluations += 1;
                f(*t, y)?
            }
        };
        let expo = 1.0 / self.method.order() - BETA * 0.75;
        loop {
            let remaining = t_end - *t;
            let clipped = self.dt >= remaining;
            let h = if clipped { remaining } else { self.dt };
            if h < MIN_STEP {
                return Err(Error::Stiffness { time: *t, dt: h });
            }
            let (ynew, nnew, e, evals) = self.attempt(f, *t, y, &n1, h)?;
            self.stats.evaluations += evals;
            // an overflowing stage is a failed step; the max-norm skips NaN
            let finite = |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !(e.is_finite() && finite(&ynew) && finite(&nnew)) {
                self.stats.rejected += 1;
                self.dt = h * MIN_FACTOR;
                continue;
            }
            let fac11 = e.powf(expo);
            if e <= 1.0 {
                let mut fac = fac11 / self.facold.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / MAX_FACTOR, 1.0 / MIN_FACTOR);
                let dt_next = h / fac;
                self.facold = e.max(1e-4);
                *t = if clipped { t_end } else { *t + h };
                *y = ynew;
                self.fsal = Some(nnew);
                self.stats.accepted += 1;
                // keep the stride after a step shortened to hit an output time
                self.dt = if clipped { dt_next.max(self.dt) } else { dt_next };
                return Ok(StepReport {
                    dt_used: h,
                    dt_next: self.dt,
                    error: e,
                });
            }
            self.stats.rejected += 1;
            self.dt = h / (fac11 / SAFETY).min(1.0 / MIN_FACTOR);
        }
    }

    /// Integrates up to exactly `t_end`.
    pub fn advance<F>(&mut self, f: &mut F, t: &mut f64, y: &mut Vec<Complex64>, t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64]) -> Result<Vec<Complex64>>,
    {
        while *t < t_end {
            self.step(f, t, y, t_end)?;
        }
        Ok(())
    }
}

/// One accepted adaptive 5(4) step of size at most `dt`.
pub fn step_adaptive<F>(
    f: &mut F,
    t: f64,
    y: &[Complex64],
    dt: f64,
    tol: Tolerances,
) -> Result<(Vec<Complex64>, StepReport)>
where
    F: FnMut(f64, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let mut integ = Integrator::new(Method::Dopri5, tol, dt)?;
    let mut t = t;
    let mut y = y.to_vec();
    let report = integ.step(f, &mut t, &mut y, f64::INFINITY)?;
    Ok((y, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_rotation_exact_norm_and_small_phase_error() {
        let e = 1.3;
        let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| Complex64::new(0.0, -e) * z).collect())
        };
        let mut integ = Integrator::new(Method::Dopri5, Tolerances::default(), 1e-3).unwrap();
        let (mut t, mut y) = (0.0, vec![Complex64::new(1.0, 0.0)]);
        integ.advance(&mut f, &mut t, &mut y, 10.0).unwrap();
        assert_eq!(t, 10.0);
        let exact = Complex64::from_polar(1.0, -e * 10.0);
        assert!((y[0].norm() - 1.0).abs() < 1e-7);
        assert!((y[0] - exact).norm() < 1e-8 * 10.0 * 10.0);
    }

    #[test]
    fn zero_rhs_grows_step_by_max_factor() {
        let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> { Ok(vec![Complex64::new(0.0, 0.0); y.len()]) };
        let y0 = vec![Complex64::new(0.3, -0.2); 4];
        let (y, rep) = step_adaptive(&mut f, 0.0, &y0, 0.01, Tolerances::default()).unwrap();
        assert_eq!(y, y0);
        assert!((rep.dt_next - 0.05).abs() < 1e-15);
    }

    #[test]
    fn stiff_problem_reports_underflow() {
        let mut f = |t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| z * (1e16 * (1.0 + t))).collect())
        };
        let mut integ = Integrator::new(Method::Dop853, Tolerances::default(), 1.0).unwrap();
        let (mut t, mut y) = (0.0, vec![Complex64::new(1.0, 0.0)]);
        let err = integ.advance(&mut f, &mut t, &mut y, 1.0).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. } | Error::NonFinite(_)));
    }

    #[test]
    fn overflowing_trial_step_is_retried() {
        // NaN far from the unit circle, which only an oversized step reaches
        let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| if z.norm() > 1.5 { Complex64::new(f64::NAN, 0.0) } else { Complex64::new(0.0, -1.0) * z }).collect())
        };
        for method in [Method::Dopri5, Method::Dop853] {
            let mut integ = Integrator::new(method, Tolerances::default(), 5.0).unwrap();
            let (mut t, mut y) = (0.0, vec![Complex64::new(1.0, 0.0)]);
            integ.advance(&mut f, &mut t, &mut y, 10.0).unwrap();
            assert!(integ.stats.rejected >= 1);
            assert!((y[0] - Complex64::from_polar(1.0, -10.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn eighth_order_pair_tracks_phase() {
        let e = 1.3;
        let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| Complex64::new(0.0, -e) * z).collect())
        };
        let mut integ = Integrator::new(Method::Dop853, Tolerances::default(), 1e-3).unwrap();
        let (mut t, mut y) = (0.0, vec![Complex64::new(1.0, 0.0)]);
        integ.advance(&mut f, &mut t, &mut y, 10.0).unwrap();
        assert!((y[0] - Complex64::from_polar(1.0, -e * 10.0)).norm() < 1e-8 * 10.0);
    }

    #[test]
    fn linear_part_is_exact() {
        let rates = vec![Complex64::new(0.0, -250.0), Complex64::new(0.0, -0.5), Complex64::new(-3.0, 0.0)];
        let mut f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> { Ok(vec![Complex64::new(0.0, 0.0); y.len()]) };
        for method in [Method::Dopri5, Method::Dop853] {
            let mut integ = Integrator::new(method, Tolerances::default(), 1e-3).unwrap().with_linear(rates.clone());
            let y0 = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(1.0, 0.0)];
            let (mut t, mut y) = (0.0, y0.clone());
            integ.advance(&mut f, &mut t, &mut y, 2.0).unwrap();
            for i in 0..3 {
                assert!((y[i] - y0[i] * (rates[i] * 2.0).exp()).norm() < 1e-12);
            }
            // only the remainder limits the step
            assert!(integ.stats.accepted < 10);
        }
    }

    #[test]
    fn split_and_unsplit_forms_agree() {
        // y' = -i (w + c|y|^2) y, split as linear w plus the nonlinear rest
        let (w, c) = (40.0, 0.7);
        let exact = |t: f64| Complex64::from_polar(1.0, -(w + c) * t);
        let mut full = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| Complex64::new(0.0, -(w + c * z.norm_sqr())) * z).collect())
        };
        let mut rest = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok(y.iter().map(|z| Complex64::new(0.0, -c * z.norm_sqr()) * z).collect())
        };
        let mut a = Integrator::new(Method::Dop853, Tolerances::default(), 1e-3).unwrap();
        let mut b = Integrator::new(Method::Dop853, Tolerances::default(), 1e-3)
            .unwrap()
            .with_linear(vec![Complex64::new(0.0, -w)]);
        let (mut ta, mut ya) = (0.0, vec![Complex64::new(1.0, 0.0)]);
        let (mut tb, mut yb) = (0.0, ya.clone());
        a.advance(&mut full, &mut ta, &mut ya, 3.0).unwrap();
        b.advance(&mut rest, &mut tb, &mut yb, 3.0).unwrap();
        assert!((ya[0] - exact(3.0)).norm() < 1e-7);
        assert!((yb[0] - exact(3.0)).norm() < 1e-7);
        assert!(b.stats.evaluations < a.stats.evaluations);
    }
}
