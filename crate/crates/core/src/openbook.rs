//! The geodesic open book on the regularized level set, its pi/2-page
//! `P = {Q = 1/2, xi3 = 0, eta3 >= 0}`, and the Poincaré return map in
//! both numeric and closed form.
//!
//! The open book map is `(xi, eta) -> arg(xi3 + i eta3)`; the binding
//! `{xi3 = eta3 = 0}` is the planar subproblem. For the rotating Kepler
//! problem the return map is the componentwise rotation
//! `(xi0, R_phi(xi1,xi2), 0; eta0, R_phi(eta1,eta2), eta3)` with
//! `phi = T(c - L)` and `T(K)` the period of a Kepler ellipse of
//! energy `K`.

use rand::Rng;

use crate::error::{CoreError, Result};
use crate::flow::{
    detect_section_crossing, integrate, IntegratorConfig, BINDING_GUARD,
};
pub use crate::flow::{transversality_profile, TransversalityProfile};
use crate::kepler_core::{
    angular_momentum, regularized_hamiltonian, ProblemParams, SphereCotangentPoint,
};

/// Page membership tolerance on `xi3`.
pub const PAGE_XI3_TOL: f64 = 1e-10;
/// Page membership tolerance on `|Q - 1/2|`.
pub const PAGE_ENERGY_TOL: f64 = 1e-9;

/// Period of a Kepler ellipse of energy `K < 0`:
/// `T(K) = 2 pi (-2K)^(-3/2)`.
pub fn kepler_period(k: f64) -> Result<f64> {
    if k >= 0.0 {
        return Err(CoreError::Domain(format!(
            "Kepler period requires negative energy, got K = {k}"
        )));
    }
    Ok(std::f64::consts::TAU * (-2.0 * k).powf(-1.5))
}

/// Open-book angle `arg(xi3 + i eta3)` in `[0, 2 pi)`.
pub fn openbook_angle(s: &SphereCotangentPoint) -> Result<f64> {
    let r = (s.xi[3] * s.xi[3] + s.eta[3] * s.eta[3]).sqrt();
    if r < BINDING_GUARD {
        return Err(CoreError::BindingProximity { dist: r, guard: BINDING_GUARD });
    }
    let a = s.eta[3].atan2(s.xi[3]);
    Ok(if a < 0.0 { a + std::f64::consts::TAU } else { a })
}

/// A point of the pi/2-page, kept crisply on `{xi3 = 0, Q = 1/2}`.
#[derive(Debug, Clone, Copy)]
pub struct PagePoint(SphereCotangentPoint);

impl PagePoint {
    /// Newton-polishes a nearby point onto the page and validates the
    /// membership tolerances.
    pub fn new(mut s: SphereCotangentPoint, params: &ProblemParams) -> Result<Self> {
        if s.xi[3].abs() > 1e-6 {
            return Err(CoreError::Domain(format!(
                "xi3 = {} is not near the pi/2-page",
                s.xi[3]
            )));
        }
        if s.eta[3] < -1e-9 {
            return Err(CoreError::Domain(format!("eta3 = {} < 0 off the page", s.eta[3])));
        }
        s.xi[3] = 0.0;
        s.project();
        s.xi[3] = 0.0; // projection cannot reintroduce xi3 once zeroed
        rescale_to_level(&mut s, params)?;
        if s.eta[3] < 0.0 && s.eta[3] > -1e-12 {
            s.eta[3] = 0.0;
        }
        let q = regularized_hamiltonian(&s, params)?;
        if (q - 0.5).abs() > PAGE_ENERGY_TOL {
            return Err(CoreError::ConstraintViolation {
                what: "|Q - 1/2|",
                value: (q - 0.5).abs(),
                tol: PAGE_ENERGY_TOL,
            });
        }
        Ok(PagePoint(s))
    }

    pub fn point(&self) -> &SphereCotangentPoint {
        &self.0
    }

    pub fn into_inner(self) -> SphereCotangentPoint {
        self.0
    }

    /// Whether the point lies on the page boundary (the binding).
    pub fn is_boundary(&self) -> bool {
        self.0.eta[3].abs() < 1e-12
    }
}

/// Scales `eta` so that `Q = 1/2` exactly. The scaling enters `f`
/// through `L`, so the level condition is a quadratic in the scale.
fn rescale_to_level(s: &mut SphereCotangentPoint, params: &ProblemParams) -> Result<()> {
    if params.mu > 0.0 {
        return Err(CoreError::UnsupportedMode { mu: params.mu });
    }
    let m = s.eta.norm();
    if m < 1e-14 {
        return Err(CoreError::Domain("cannot rescale a zero covector onto the level".into()));
    }
    let a = 1.0 + (1.0 - s.xi[0]) * (-params.c - 0.5);
    let b = (1.0 - s.xi[0]) * angular_momentum(s) / m; // L scales linearly
    // (a + b*m*lambda) * lambda * m = 1 with eta -> lambda * eta.
    // Solve p x^2 + q x - 1 = 0 for x = lambda * m.
    let p = b;
    let q = a;
    let x = if p.abs() < 1e-14 {
        1.0 / q
    } else {
        let disc = q * q + 4.0 * p;
        if disc < 0.0 {
            return Err(CoreError::Domain("no real rescaling onto the energy level".into()));
        }
        let x1 = (-q + disc.sqrt()) / (2.0 * p);
        let x2 = (-q - disc.sqrt()) / (2.0 * p);
        // pick the positive root closest to the current |eta|
        let mut best = f64::NAN;
        for cand in [x1, x2] {
            if cand > 0.0 && (best.is_nan() || (cand - m).abs() < (best - m).abs()) {
                best = cand;
            }
        }
        if best.is_nan() {
            return Err(CoreError::Domain("no positive rescaling onto the energy level".into()));
        }
        best
    };
    s.eta *= x / m;
    Ok(())
}

/// Closed-form rotating-Kepler return map: rotates the (1,2)-components
/// of `xi` and `eta` by `T(c - L)` and fixes `xi0`, `eta0`, `eta3`.
pub fn return_map_closed_form(x: &PagePoint, params: &ProblemParams) -> Result<PagePoint> {
    if params.mu > 0.0 {
        return Err(CoreError::UnsupportedMode { mu: params.mu });
    }
    let s = x.point();
    let l = angular_momentum(s);
    let phi = kepler_period(params.c - l)?;
    let (sin, cos) = phi.sin_cos();
    let rot = |a: f64, b: f64| (cos * a - sin * b, sin * a + cos * b);
    let mut out = *s;
    let (x1, x2) = rot(s.xi[1], s.xi[2]);
    out.xi[1] = x1;
    out.xi[2] = x2;
    let (e1, e2) = rot(s.eta[1], s.eta[2]);
    out.eta[1] = e1;
    out.eta[2] = e2;
    PagePoint::new(out, params)
}

/// Result of one numeric return: the landing page point and the flow
/// time spent (regularized time; its normalization is recorded but not
/// compared against the closed form).
#[derive(Debug, Clone, Copy)]
pub struct ReturnResult {
    pub point: PagePoint,
    pub time: f64,
}

/// Integrates the regularized flow until the next pi/2-page crossing
/// with positive co-orientation.
pub fn return_map_numeric(
    x: &PagePoint,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
) -> Result<ReturnResult> {
    let traj = integrate(x.point(), params, cfg)?;
    let crossings = detect_section_crossing(&traj, std::f64::consts::FRAC_PI_2, params)?;
    let first = crossings
        .iter()
        .find(|c| c.t > 1e-9)
        .ok_or(CoreError::HorizonExceeded { max_time: cfg.max_time })?;
    Ok(ReturnResult { point: PagePoint::new(first.state, params)?, time: first.t })
}

/// Samples a uniform-ish random interior page point away from the
/// binding; used by tests and the verification suite.
pub fn sample_page_point(rng: &mut impl Rng, params: &ProblemParams) -> Result<PagePoint> {
    for _ in 0..256 {
        // xi on the equatorial S^2 (xi3 = 0).
        let mut xi = nalgebra::Vector4::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            0.0,
        );
        if xi.norm() < 1e-3 {
            continue;
        }
        xi /= xi.norm();
        // eta orthogonal to xi, with a definite eta3 > 0 component.
        let mut eta = nalgebra::Vector4::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.1..1.0),
        );
        eta -= xi.dot(&eta) * xi;
        if eta.norm() < 1e-3 {
            continue;
        }
        let mut s = SphereCotangentPoint { xi, eta };
        if rescale_to_level(&mut s, params).is_err() {
            continue;
        }
        if s.eta[3] < 10.0 * BINDING_GUARD {
            continue;
        }
        if let Ok(p) = PagePoint::new(s, params) {
            return Ok(p);
        }
    }
    Err(CoreError::Domain("failed to sample a page point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::state_to_vec;
    use crate::kepler_core::NORTH_POLE;
    use approx::assert_relative_eq;
    use nalgebra::Vector4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    #[test]
    fn angle_examples() {
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, 1.0, 0.0, 0.0),
            Vector4::new(0.0, 0.0, 0.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(openbook_angle(&s).unwrap(), FRAC_PI_2);
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, 0.0, 0.0, 1.0),
            Vector4::new(1.0, 0.0, 0.0, 0.0),
        )
        .unwrap();
        assert_relative_eq!(openbook_angle(&s).unwrap(), 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, r, 0.0, r),
            Vector4::new(0.0, -r, 0.0, r),
        )
        .unwrap();
        assert_relative_eq!(openbook_angle(&s).unwrap(), FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn angle_fails_on_binding() {
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, 1.0, 0.0, 0.0),
            Vector4::new(0.0, 0.0, 1.0, 0.0),
        )
        .unwrap();
        assert!(matches!(openbook_angle(&s), Err(CoreError::BindingProximity { .. })));
    }

    #[test]
    fn kepler_period_values() {
        // Radial ellipse of energy -1/2 has semi-major axis 1, period 2 pi.
        assert_relative_eq!(kepler_period(-0.5).unwrap(), TAU, epsilon = 1e-15);
        assert_relative_eq!(kepler_period(-2.0).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        assert!(kepler_period(0.1).is_err());
    }

    fn collision_page_point(c: f64, u1: f64, u2: f64) -> PagePoint {
        let params = ProblemParams::rotating_kepler(c);
        let u3 = (1.0 - u1 * u1 - u2 * u2).sqrt();
        let s = SphereCotangentPoint::checked(NORTH_POLE, Vector4::new(0.0, u1, u2, u3)).unwrap();
        PagePoint::new(s, &params).unwrap()
    }

    #[test]
    fn closed_form_rotates_collision_locus_by_period() {
        let c = -2.0;
        let params = ProblemParams::rotating_kepler(c);
        let x = collision_page_point(c, 0.5, 0.1);
        let y = return_map_closed_form(&x, &params).unwrap();
        let (u1, u2) = (x.point().eta[1], x.point().eta[2]);
        let (v1, v2) = (y.point().eta[1], y.point().eta[2]);
        let angle = (u1 * v2 - u2 * v1).atan2(u1 * v1 + u2 * v2);
        assert_relative_eq!(angle, FRAC_PI_4, epsilon = 1e-12);
        // eta3 and xi are untouched on the collision locus.
        assert_relative_eq!(y.point().eta[3], x.point().eta[3], epsilon = 1e-12);
        assert!(y.point().dist_to_pole() < 1e-12);
    }

    #[test]
    fn closed_form_preserves_invariants() {
        let params = ProblemParams::rotating_kepler(-1.8);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let x = sample_page_point(&mut rng, &params).unwrap();
            let y = return_map_closed_form(&x, &params).unwrap();
            let (sx, sy) = (x.point(), y.point());
            assert_relative_eq!(sy.xi.norm(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(sy.eta.norm(), sx.eta.norm(), epsilon = 1e-10);
            assert!(sy.xi.dot(&sy.eta).abs() < 1e-10);
            assert_relative_eq!(
                angular_momentum(sy),
                angular_momentum(sx),
                epsilon = 1e-10
            );
            assert_relative_eq!(
                regularized_hamiltonian(sy, &params).unwrap(),
                0.5,
                epsilon = 1e-10
            );
            // Both component pairs rotate by the same angle.
            let ang = |a1: f64, a2: f64, b1: f64, b2: f64| (a1 * b2 - a2 * b1).atan2(a1 * b1 + a2 * b2);
            let a_xi = ang(sx.xi[1], sx.xi[2], sy.xi[1], sy.xi[2]);
            let a_eta = ang(sx.eta[1], sx.eta[2], sy.eta[1], sy.eta[2]);
            if (sx.xi[1] * sx.xi[1] + sx.xi[2] * sx.xi[2]) > 1e-6
                && (sx.eta[1] * sx.eta[1] + sx.eta[2] * sx.eta[2]) > 1e-6
            {
                let mut d = (a_xi - a_eta).abs();
                if d > PI {
                    d = TAU - d;
                }
                assert!(d < 1e-9, "xi and eta rotation angles differ by {d}");
            }
        }
    }

    #[test]
    fn closed_form_boundary_stays_on_boundary() {
        // eta3 = 0 boundary points are fixed-eta3 under the map.
        let params = ProblemParams::rotating_kepler(-2.0);
        let xi = Vector4::new(0.6, 0.8, 0.0, 0.0);
        let mut eta = Vector4::new(-0.8, 0.6, 0.3, 0.0);
        eta -= xi.dot(&eta) * xi;
        let mut s = SphereCotangentPoint::new(xi, eta);
        s.eta[3] = 0.0;
        super::rescale_to_level(&mut s, &params).unwrap();
        let x = PagePoint::new(s, &params).unwrap();
        assert!(x.is_boundary());
        let y = return_map_closed_form(&x, &params).unwrap();
        assert!(y.is_boundary());
    }

    #[test]
    fn closed_form_domain_error_when_energy_nonnegative() {
        // On the collision locus L = 0, so c >= 0 makes c - L >= 0 and
        // the fractional power in T undefined.
        let bad = ProblemParams::rotating_kepler(0.1);
        let x = collision_page_point(0.1, 0.3, 0.2);
        assert!(return_map_closed_form(&x, &bad).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for &c in &[-2.0, -1.7, -3.0] {
            let params = ProblemParams::rotating_kepler(c);
            let cfg = IntegratorConfig::with_horizon(40.0);
            for _ in 0..10 {
                let x = sample_page_point(&mut rng, &params).unwrap();
                let numeric = return_map_numeric(&x, &params, &cfg).unwrap();
                let exact = return_map_closed_form(&x, &params).unwrap();
                let d = (state_to_vec(numeric.point.point()) - state_to_vec(exact.point()))
                    .amax();
                assert!(d < 1e-6, "c={c}: componentwise gap {d:.3e}");
                assert!(numeric.time > 0.0);
            }
        }
    }

    #[test]
    fn numeric_keeps_collision_locus_invariant() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let cfg = IntegratorConfig::with_horizon(40.0);
        let x = collision_page_point(-2.0, 0.3, -0.4);
        let y = return_map_numeric(&x, &params, &cfg).unwrap();
        assert!(y.point.point().dist_to_pole() < 1e-8);
    }

    #[test]
    fn transversality_integrates_to_full_turn() {
        // One numeric return winds the open-book angle by exactly 2 pi.
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let x = sample_page_point(&mut rng, &params).unwrap();
        let ret = return_map_numeric(&x, &params, &IntegratorConfig::with_horizon(40.0)).unwrap();
        let cfg = IntegratorConfig::with_horizon(ret.time);
        let traj = integrate(x.point(), &params, &cfg).unwrap();
        // The integral of d(theta)/dt is the unwrapped angle increment,
        // which the dense samples recover exactly (the per-step increment
        // is far below pi).
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        for (_, s) in &traj.samples {
            let a = openbook_angle(s).unwrap();
            if let Some(a0) = prev {
                let mut d = a - a0;
                while d > PI {
                    d -= TAU;
                }
                while d < -PI {
                    d += TAU;
                }
                total += d;
            }
            prev = Some(a);
        }
        assert!((total - TAU).abs() < 1e-6, "winding {total}");
    }
}
