//! Numerical integration of the regularized Hamiltonian vector field on
//! the constrained manifold `T*S^3`, with open-book event detection.
//!
//! The field follows the sign convention `i_X omega = -dH`. The ambient
//! Hamiltonian field of `Q` is projected onto the tangent space of
//! `{|xi| = 1, <xi,eta> = 0}` via the Dirac-bracket correction, which
//! preserves both constraints and `Q` exactly at the level of the
//! continuous dynamics; a renormalizing projection after every accepted
//! step keeps the discrete trajectory on the manifold.

use nalgebra::{SMatrix, SVector};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{CoreError, Result};
use crate::kepler_core::{ProblemParams, SphereCotangentPoint};

/// Default guard distance to the binding `{xi3 = eta3 = 0}`.
pub const BINDING_GUARD: f64 = 1e-6;

pub type State8 = SVector<f64, 8>;

/// Scalar abstraction so the field can be evaluated on plain floats and
/// on dual numbers (exact directional derivatives for the variational
/// equations).
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

/// Forward-mode dual number carrying one directional derivative.
#[derive(Debug, Clone, Copy)]
pub struct Dual {
    pub val: f64,
    pub der: f64,
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { val: self.val + o.val, der: self.der + o.der }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { val: self.val - o.val, der: self.der - o.der }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { val: self.val * o.val, der: self.val * o.der + self.der * o.val }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { val: -self.val, der: -self.der }
    }
}

impl Scalar for Dual {
    fn from_f64(x: f64) -> Self {
        Dual { val: x, der: 0.0 }
    }
}

fn dot4<T: Scalar>(a: &[T], b: &[T]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Constrained Hamiltonian field of `Q` in the `i_X omega = -dH`
/// convention, generic over the scalar type. `y = (xi, eta)`.
pub fn field_generic<T: Scalar>(y: &[T; 8], c: f64) -> [T; 8] {
    let xi = [y[0], y[1], y[2], y[3]];
    let eta = [y[4], y[5], y[6], y[7]];
    let zero = T::from_f64(0.0);
    let one = T::from_f64(1.0);

    let l = xi[2] * eta[1] - xi[1] * eta[2];
    let g = T::from_f64(-c - 0.5) + l;
    let one_minus = one - xi[0];
    let f = one + one_minus * g;
    let eta_sq = dot4(&eta, &eta);

    // dL/dxi = (0, -eta2, eta1, 0), dL/deta = (0, xi2, -xi1, 0)
    let f_xi = [-g, one_minus * (-eta[2]), one_minus * eta[1], zero];
    let f_eta = [zero, one_minus * xi[2], one_minus * (-xi[1]), zero];

    let fe = f * eta_sq;
    let ff = f * f;
    let q_xi = [fe * f_xi[0], fe * f_xi[1], fe * f_xi[2], fe * f_xi[3]];
    let q_eta = [
        fe * f_eta[0] + ff * eta[0],
        fe * f_eta[1] + ff * eta[1],
        fe * f_eta[2] + ff * eta[2],
        fe * f_eta[3] + ff * eta[3],
    ];

    // Dirac-bracket projection onto the constraint tangent space.
    let a = dot4(&q_eta, &xi); // <Q_eta, xi>
    let b = dot4(&q_xi, &xi) - dot4(&q_eta, &eta); // <Q_xi, xi> - <Q_eta, eta>

    // Standard-convention field, then global sign flip for i_X omega = -dH.
    let mut out = [zero; 8];
    for i in 0..4 {
        let xi_dot = q_eta[i] - a * xi[i];
        let eta_dot = -q_xi[i] + a * eta[i] + b * xi[i];
        out[i] = -xi_dot;
        out[i + 4] = -eta_dot;
    }
    out
}

pub fn state_to_vec(s: &SphereCotangentPoint) -> State8 {
    State8::from_iterator(s.xi.iter().chain(s.eta.iter()).copied())
}

pub fn vec_to_state(y: &State8) -> SphereCotangentPoint {
    SphereCotangentPoint {
        xi: nalgebra::Vector4::new(y[0], y[1], y[2], y[3]),
        eta: nalgebra::Vector4::new(y[4], y[5], y[6], y[7]),
    }
}

/// Evaluates the constrained field at a point.
pub fn vector_field(s: &SphereCotangentPoint, params: &ProblemParams) -> State8 {
    let y: [f64; 8] = state_to_vec(s).into();
    State8::from(field_generic(&y, params.c))
}

/// Exact Jacobian of the constrained field, one dual-number pass per
/// coordinate direction.
pub fn field_jacobian(y: &State8, params: &ProblemParams) -> SMatrix<f64, 8, 8> {
    let mut jac = SMatrix::<f64, 8, 8>::zeros();
    for dir in 0..8 {
        let mut dy = [Dual { val: 0.0, der: 0.0 }; 8];
        for i in 0..8 {
            dy[i] = Dual { val: y[i], der: if i == dir { 1.0 } else { 0.0 } };
        }
        let col = field_generic(&dy, params.c);
        for i in 0..8 {
            jac[(i, dir)] = col[i].der;
        }
    }
    jac
}

/// Adaptive integration controls.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Initial step size.
    pub step: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Integration horizon.
    pub max_time: f64,
    /// Renormalizing constraint projection after each accepted step.
    pub projection: bool,
    /// Step-size cap; keeps the sampling dense enough that no section
    /// crossing can hide between consecutive samples.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tol_rel: 1e-12,
            tol_abs: 1e-12,
            max_time: 200.0,
            projection: true,
            max_step: 0.05,
        }
    }
}

impl IntegratorConfig {
    pub fn with_horizon(max_time: f64) -> Self {
        Self { max_time, ..Self::default() }
    }
}

/// A sampled integral curve of the regularized flow.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, SphereCotangentPoint)>,
}

impl Trajectory {
    pub fn start(&self) -> &SphereCotangentPoint {
        &self.samples[0].1
    }

    pub fn end(&self) -> &SphereCotangentPoint {
        &self.samples.last().unwrap().1
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().0 - self.samples[0].0
    }

    /// Maximum `|Q - 1/2|` over the samples.
    pub fn max_energy_drift(&self, params: &ProblemParams) -> f64 {
        self.samples
            .iter()
            .map(|(_, s)| {
                (crate::kepler_core::regularized_hamiltonian(s, params).unwrap_or(f64::NAN) - 0.5)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_constraint_defect(&self) -> f64 {
        self.samples.iter().map(|(_, s)| s.constraint_defect()).fold(0.0, f64::max)
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded DP54 step; returns (5th-order solution, error estimate).
pub fn dp54_step(y: &State8, h: f64, params: &ProblemParams) -> (State8, f64) {
    let mut k = [State8::zeros(); 7];
    for i in 0..7 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(i) {
            yi += h * DP_A[i][j] * kj;
        }
        let arr: [f64; 8] = yi.into();
        k[i] = State8::from(field_generic(&arr, params.c));
        let _ = DP_C[i];
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for i in 0..7 {
        y5 += h * DP_B5[i] * k[i];
        y4 += h * DP_B4[i] * k[i];
    }
    let err = (y5 - y4).norm();
    (y5, err)
}

/// Integrates the regularized flow from `s` over `[0, cfg.max_time]`.
pub fn integrate(
    s: &SphereCotangentPoint,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut t = 0.0;
    let mut y = state_to_vec(s);
    let mut h = cfg.step.min(cfg.max_step);
    let mut samples = vec![(0.0, *s)];
    if cfg.max_time <= 0.0 {
        return Ok(Trajectory { samples });
    }
    let t_end = cfg.max_time;
    while t < t_end {
        if h < 1e-14 {
            return Err(CoreError::StepUnderflow { t, h });
        }
        let h_trial = h.min(t_end - t);
        let (y_new, err) = dp54_step(&y, h_trial, params);
        let scale = cfg.tol_abs + cfg.tol_rel * y.norm().max(y_new.norm());
        let ratio = err / scale;
        if ratio <= 1.0 {
            t += h_trial;
            y = y_new;
            if cfg.projection {
                let mut st = vec_to_state(&y);
                st.project();
                y = state_to_vec(&st);
            }
            samples.push((t, vec_to_state(&y)));
            let grow = if ratio > 0.0 { 0.9 * ratio.powf(-0.2) } else { 5.0 };
            h = (h_trial * grow.clamp(0.2, 5.0)).min(cfg.max_step);
        } else {
            h = h_trial * (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(Trajectory { samples })
}

/// Integrates the flow together with a scalar quadrature
/// `integral of g(y(t)) dt`, carried as a ninth component through the
/// same embedded steps so the quadrature error tracks the integrator
/// tolerance.
pub fn integrate_with_quadrature(
    s: &SphereCotangentPoint,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
    g: impl Fn(&State8) -> f64,
) -> Result<(Trajectory, f64)> {
    type State9 = SVector<f64, 9>;
    let rhs = |y: &State9| -> State9 {
        let arr = [y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]];
        let f = field_generic(&arr, params.c);
        let mut out = State9::zeros();
        for i in 0..8 {
            out[i] = f[i];
        }
        out[8] = g(&State8::from(arr));
        out
    };
    let step9 = |y: &State9, h: f64| -> (State9, f64) {
        let mut k = [State9::zeros(); 7];
        for i in 0..7 {
            let mut yi = *y;
            for (j, kj) in k.iter().enumerate().take(i) {
                yi += h * DP_A[i][j] * kj;
            }
            k[i] = rhs(&yi);
        }
        let mut y5 = *y;
        let mut y4 = *y;
        for i in 0..7 {
            y5 += h * DP_B5[i] * k[i];
            y4 += h * DP_B4[i] * k[i];
        }
        ((y5), (y5 - y4).norm())
    };
    let mut t = 0.0;
    let mut y = State9::zeros();
    let y0 = state_to_vec(s);
    for i in 0..8 {
        y[i] = y0[i];
    }
    let mut h = cfg.step.min(cfg.max_step);
    let mut samples = vec![(0.0, *s)];
    let t_end = cfg.max_time;
    while t < t_end {
        if h < 1e-14 {
            return Err(CoreError::StepUnderflow { t, h });
        }
        let h_trial = h.min(t_end - t);
        let (y_new, err) = step9(&y, h_trial);
        let scale = cfg.tol_abs + cfg.tol_rel * y.norm().max(y_new.norm());
        let ratio = err / scale;
        if ratio <= 1.0 {
            t += h_trial;
            y = y_new;
            if cfg.projection {
                let mut st = vec_to_state(&State8::from_iterator(y.iter().take(8).copied()));
                st.project();
                let v = state_to_vec(&st);
                for i in 0..8 {
                    y[i] = v[i];
                }
            }
            samples.push((t, vec_to_state(&State8::from_iterator(y.iter().take(8).copied()))));
            let grow = if ratio > 0.0 { 0.9 * ratio.powf(-0.2) } else { 5.0 };
            h = (h_trial * grow.clamp(0.2, 5.0)).min(cfg.max_step);
        } else {
            h = h_trial * (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok((Trajectory { samples }, y[8]))
}

/// Open-book angle `arg(xi3 + i eta3)` of a raw 8-vector.
fn angle_of(y: &State8) -> f64 {
    y[7].atan2(y[3])
}

fn binding_dist(y: &State8) -> f64 {
    (y[3] * y[3] + y[7] * y[7]).sqrt()
}

/// d(theta)/dt along the flow.
pub fn angle_rate(s: &SphereCotangentPoint, params: &ProblemParams) -> f64 {
    let y = state_to_vec(s);
    let dy = vector_field(s, params);
    let r2 = y[3] * y[3] + y[7] * y[7];
    (y[3] * dy[7] - y[7] * dy[3]) / r2
}

/// A refined section crossing.
#[derive(Debug, Clone, Copy)]
pub struct SectionCrossing {
    pub t: f64,
    pub state: SphereCotangentPoint,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// Finds every crossing of the page `{theta = theta0}` with positive
/// angular speed, refined to `|theta - theta0| < 1e-10` by bisection
/// plus secant on single re-integration steps from the bracketing
/// sample.
pub fn detect_section_crossing(
    traj: &Trajectory,
    theta0: f64,
    params: &ProblemParams,
) -> Result<Vec<SectionCrossing>> {
    detect_section_crossing_guarded(traj, theta0, params, BINDING_GUARD)
}

pub fn detect_section_crossing_guarded(
    traj: &Trajectory,
    theta0: f64,
    params: &ProblemParams,
    guard: f64,
) -> Result<Vec<SectionCrossing>> {
    let mut out = Vec::new();
    let ys: Vec<(f64, State8)> =
        traj.samples.iter().map(|(t, s)| (*t, state_to_vec(s))).collect();
    for (t, y) in &ys {
        let d = binding_dist(y);
        if d < guard {
            let _ = t;
            return Err(CoreError::BindingProximity { dist: d, guard });
        }
    }
    for w in ys.windows(2) {
        let (t0, y0) = w[0];
        let (t1, y1) = w[1];
        let p0 = wrap_angle(angle_of(&y0) - theta0);
        let p1 = wrap_angle(angle_of(&y1) - theta0);
        // Positive crossing: phase passes 0 from below within this step.
        // Steps are short (max_step cap), so the phase increment is small
        // and the antipodal wrap cannot masquerade as a crossing.
        let crosses = p0 < 0.0 && p1 >= 0.0 && (p1 - p0) < std::f64::consts::PI;
        if !crosses {
            continue;
        }
        // Bisection then secant on dt -> wrapped phase after one step.
        let phase_at = |dt: f64| -> f64 {
            if dt <= 0.0 {
                return p0;
            }
            let (y, _) = dp54_step(&y0, dt, params);
            wrap_angle(angle_of(&y) - theta0)
        };
        let mut lo = 0.0;
        let mut hi = t1 - t0;
        let mut flo = p0;
        let mut fhi = p1;
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            let fm = phase_at(mid);
            if fm < 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        let mut a = lo;
        let mut b = hi;
        let mut fa = flo;
        let mut fb = fhi;
        for _ in 0..60 {
            if (fb - fa).abs() < 1e-300 {
                break;
            }
            let c = b - fb * (b - a) / (fb - fa);
            let c = c.clamp(lo, hi);
            let fc = phase_at(c);
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            if fb.abs() < 1e-12 {
                break;
            }
        }
        let (y_cross, _) = dp54_step(&y0, b, params);
        let mut st = vec_to_state(&y_cross);
        st.project();
        if wrap_angle(angle_of(&state_to_vec(&st)) - theta0).abs() > 1e-10 {
            continue; // tangential grazing; not a transversal crossing
        }
        if angle_rate(&st, params) > 0.0 {
            out.push(SectionCrossing { t: t0 + b, state: st });
        }
    }
    Ok(out)
}

/// Min and mean of d(theta)/dt along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TransversalityProfile {
    pub min: f64,
    pub mean: f64,
}

pub fn transversality_profile(
    traj: &Trajectory,
    params: &ProblemParams,
) -> Result<TransversalityProfile> {
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    for (_, s) in &traj.samples {
        let y = state_to_vec(s);
        let d = binding_dist(&y);
        if d < BINDING_GUARD {
            return Err(CoreError::BindingProximity { dist: d, guard: BINDING_GUARD });
        }
        let rate = angle_rate(s, params);
        min = min.min(rate);
        sum += rate;
    }
    Ok(TransversalityProfile { min, mean: sum / traj.samples.len() as f64 })
}
