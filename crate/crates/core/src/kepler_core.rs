//! Coordinates, constraints, and Hamiltonians for the unregularized and
//! Moser-regularized problems.
//!
//! The regularized phase space is
//! `T*S^3 = {(xi, eta) in R^4 + R^4 : <xi,eta> = 0, |xi| = 1}`,
//! obtained from the rotating-frame problem by the symplectic switch map
//! `(q, p) -> (p, -q)` followed by inverse stereographic projection from
//! the north pole `N = (1,0,0,0)`. Collisions correspond to the cotangent
//! fiber over `N`.

use nalgebra::{Vector3, Vector4};

use crate::error::{CoreError, Result};

/// Default tolerance on the `T*S^3` constraints.
pub const TOL_CONSTRAINT: f64 = 1e-9;

/// North pole of `S^3`; the compactification point of momentum space.
pub const NORTH_POLE: Vector4<f64> = Vector4::new(1.0, 0.0, 0.0, 0.0);

/// Which primary's regularized component is studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Primary {
    #[default]
    Earth,
    Moon,
}

/// Jacobi constant, mass ratio, and primary selection.
#[derive(Debug, Clone, Copy)]
pub struct ProblemParams {
    /// Jacobi constant (the rotating-frame energy level).
    pub c: f64,
    /// Mass ratio `m_M / (m_E + m_M)` in `[0, 1)`; `mu = 0` is the
    /// rotating Kepler problem, the exact fully supported mode.
    pub mu: f64,
    pub primary: Primary,
}

impl ProblemParams {
    pub fn rotating_kepler(c: f64) -> Self {
        Self { c, mu: 0.0, primary: Primary::Earth }
    }

    /// Position of the Earth primary in the rotating frame.
    pub fn earth_position(&self) -> Vector3<f64> {
        Vector3::new(-self.mu, 0.0, 0.0)
    }

    /// Position of the Moon primary in the rotating frame.
    pub fn moon_position(&self) -> Vector3<f64> {
        Vector3::new(1.0 - self.mu, 0.0, 0.0)
    }

    pub fn selected_primary_position(&self) -> Vector3<f64> {
        match self.primary {
            Primary::Earth => self.earth_position(),
            Primary::Moon => self.moon_position(),
        }
    }

    /// The geodesic open book requires `c < -3/2` in rotating-Kepler mode.
    pub fn openbook_valid(&self) -> bool {
        self.c < -1.5
    }
}

/// A point of the unregularized rotating-frame phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
}

impl CartesianState {
    pub fn new(q: Vector3<f64>, p: Vector3<f64>) -> Self {
        Self { q, p }
    }
}

/// A point `(xi, eta)` of `T*S^3` embedded in `R^4 + R^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCotangentPoint {
    pub xi: Vector4<f64>,
    pub eta: Vector4<f64>,
}

impl SphereCotangentPoint {
    /// Builds a point and projects it exactly onto the constraint set.
    pub fn new(xi: Vector4<f64>, eta: Vector4<f64>) -> Self {
        let mut s = Self { xi, eta };
        s.project();
        s
    }

    /// Builds a point without projection; fails if the constraints are
    /// violated beyond `TOL_CONSTRAINT`.
    pub fn checked(xi: Vector4<f64>, eta: Vector4<f64>) -> Result<Self> {
        let norm_defect = (xi.norm() - 1.0).abs();
        if norm_defect > TOL_CONSTRAINT {
            return Err(CoreError::ConstraintViolation {
                what: "| |xi| - 1 |",
                value: norm_defect,
                tol: TOL_CONSTRAINT,
            });
        }
        let pairing = xi.dot(&eta).abs();
        if pairing > TOL_CONSTRAINT {
            return Err(CoreError::ConstraintViolation {
                what: "|<xi, eta>|",
                value: pairing,
                tol: TOL_CONSTRAINT,
            });
        }
        Ok(Self { xi, eta })
    }

    /// Renormalizing projection `xi -> xi/|xi|`, `eta -> eta - <xi,eta> xi`.
    pub fn project(&mut self) {
        self.xi /= self.xi.norm();
        self.eta -= self.xi.dot(&self.eta) * self.xi;
    }

    pub fn constraint_defect(&self) -> f64 {
        (self.xi.norm() - 1.0).abs().max(self.xi.dot(&self.eta).abs())
    }

    /// Distance of `xi` to the north pole.
    pub fn dist_to_pole(&self) -> f64 {
        (self.xi - NORTH_POLE).norm()
    }
}

/// Rotating-frame Hamiltonian
/// `H = 1/2 |p|^2 - m_E/|q - q_E| - m_M/|q - q_M| + q1 p2 - q2 p1`.
pub fn hamiltonian_unregularized(s: &CartesianState, params: &ProblemParams) -> Result<f64> {
    let m_e = 1.0 - params.mu;
    let m_m = params.mu;
    let d_e = (s.q - params.earth_position()).norm();
    let d_m = (s.q - params.moon_position()).norm();
    let near = if m_m > 0.0 { d_e.min(d_m) } else { d_e };
    if near < 1e-12 {
        return Err(CoreError::CollisionSingularity { dist: near });
    }
    let mut h = 0.5 * s.p.norm_squared() - m_e / d_e + s.q.x * s.p.y - s.q.y * s.p.x;
    if m_m > 0.0 {
        h -= m_m / d_m;
    }
    Ok(h)
}

/// Angular momentum `L = xi2 eta1 - xi1 eta2` in regularized coordinates.
pub fn angular_momentum(s: &SphereCotangentPoint) -> f64 {
    s.xi[2] * s.eta[1] - s.xi[1] * s.eta[2]
}

/// The conformal factor `f(xi,eta) = 1 + (1 - xi0)(-c - 1/2 + L)` of the
/// rotating-Kepler regularization.
pub fn f_factor(s: &SphereCotangentPoint, c: f64) -> f64 {
    1.0 + (1.0 - s.xi[0]) * (-c - 0.5 + angular_momentum(s))
}

/// Moser-regularized Hamiltonian `Q = 1/2 f^2 |eta|^2`; the regularized
/// level set is `{Q = 1/2}`.
pub fn regularized_hamiltonian(s: &SphereCotangentPoint, params: &ProblemParams) -> Result<f64> {
    if params.mu > 0.0 {
        return Err(CoreError::UnsupportedMode { mu: params.mu });
    }
    let f = f_factor(s, params.c);
    Ok(0.5 * f * f * s.eta.norm_squared())
}

/// Switch map plus inverse stereographic projection: maps the rotating
/// frame chart (relative to the selected primary) into `T*S^3`. Sends
/// `p -> infinity` (collision approach) to the fiber over the north pole.
pub fn moser_map(s: &CartesianState, params: &ProblemParams) -> Result<SphereCotangentPoint> {
    let q = s.q - params.selected_primary_position();
    let x = s.p;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(CoreError::Domain("momentum must be finite".into()));
    }
    let u = x.norm_squared();
    let scale = u + 1.0;
    let xi = Vector4::new(
        (u - 1.0) / scale,
        2.0 * x.x / scale,
        2.0 * x.y / scale,
        2.0 * x.z / scale,
    );
    let pq = x.dot(&q);
    let eta_spatial = 0.5 * scale * q - pq * x;
    let eta = Vector4::new(pq, eta_spatial.x, eta_spatial.y, eta_spatial.z);
    Ok(SphereCotangentPoint::new(xi, eta))
}

/// Inverse of [`moser_map`]; undefined on the fiber over the north pole.
pub fn moser_inverse(s: &SphereCotangentPoint, params: &ProblemParams) -> Result<CartesianState> {
    let one_minus = 1.0 - s.xi[0];
    if one_minus <= 1e-14 {
        return Err(CoreError::PoleSingularity { xi0: s.xi[0] });
    }
    let p = Vector3::new(s.xi[1], s.xi[2], s.xi[3]) / one_minus;
    let eta_spatial = Vector3::new(s.eta[1], s.eta[2], s.eta[3]);
    let xi_spatial = Vector3::new(s.xi[1], s.xi[2], s.xi[3]);
    let q = one_minus * eta_spatial + s.eta[0] * xi_spatial;
    Ok(CartesianState::new(q + params.selected_primary_position(), p))
}

/// Uniform state in the box `[-2, 2]^6`.
pub fn sample_cartesian_state(rng: &mut impl rand::Rng) -> CartesianState {
    let q = Vector3::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    let p = Vector3::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    CartesianState::new(q, p)
}

/// Random state on the level `{H = c}`: momentum rescaled by the
/// positive root of the quadratic `H(q, t p) = c`.
pub fn sample_state_on_level(rng: &mut impl rand::Rng, c: f64) -> CartesianState {
    let params = ProblemParams::rotating_kepler(c);
    loop {
        let s = sample_cartesian_state(rng);
        if s.q.norm() < 0.3 {
            continue;
        }
        let a = 0.5 * s.p.norm_squared();
        let b = s.q.x * s.p.y - s.q.y * s.p.x;
        let k = -1.0 / s.q.norm() - c;
        let disc = b * b - 4.0 * a * k;
        if disc < 0.0 || a < 1e-12 {
            continue;
        }
        let t = (-b + disc.sqrt()) / (2.0 * a);
        let cand = CartesianState::new(s.q, t * s.p);
        if hamiltonian_unregularized(&cand, &params).unwrap().is_finite() {
            return cand;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng) -> CartesianState {
        sample_cartesian_state(rng)
    }

    fn state_on_level(rng: &mut impl Rng, c: f64) -> CartesianState {
        let cand = sample_state_on_level(rng, c);
        let params = ProblemParams::rotating_kepler(c);
        assert_relative_eq!(
            hamiltonian_unregularized(&cand, &params).unwrap(),
            c,
            epsilon = 1e-9
        );
        cand
    }

    #[test]
    fn hamiltonian_circular_orbit_values() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let s = CartesianState::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0));
        let h = hamiltonian_unregularized(&s, &params).unwrap();
        // K = 1/2 - 1 = -1/2, L = 1
        assert_relative_eq!(h, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_at_rest() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let s = CartesianState::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
        assert_relative_eq!(
            hamiltonian_unregularized(&s, &params).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn hamiltonian_equal_masses_potential() {
        // Oracle: hand evaluation of the potential at q = (0,0,1) with
        // both primaries at distance sqrt(1.25).
        let params = ProblemParams { c: 0.0, mu: 0.5, primary: Primary::Earth };
        assert_eq!(params.earth_position(), Vector3::new(-0.5, 0.0, 0.0));
        assert_eq!(params.moon_position(), Vector3::new(0.5, 0.0, 0.0));
        let s = CartesianState::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros());
        let h = hamiltonian_unregularized(&s, &params).unwrap();
        assert_relative_eq!(h, -1.0 / 1.25_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_collision_is_domain_error() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let s = CartesianState::new(Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0));
        assert!(matches!(
            hamiltonian_unregularized(&s, &params),
            Err(CoreError::CollisionSingularity { .. })
        ));
    }

    #[test]
    fn angular_momentum_examples() {
        let s = SphereCotangentPoint::new(NORTH_POLE, Vector4::new(0.0, 0.3, -0.2, 0.9));
        assert_eq!(angular_momentum(&s), 0.0);
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, 1.0, 0.0, 0.0),
            Vector4::new(0.0, 0.0, 1.0, 0.0),
        )
        .unwrap();
        assert_eq!(angular_momentum(&s), -1.0);
        let s = SphereCotangentPoint::checked(
            Vector4::new(0.0, 0.0, 1.0, 0.0),
            Vector4::new(0.0, 1.0, 0.0, 0.0),
        )
        .unwrap();
        assert_eq!(angular_momentum(&s), 1.0);
    }

    #[test]
    fn q_on_north_fiber() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let s = SphereCotangentPoint::checked(
            NORTH_POLE,
            Vector4::new(0.0, 0.6, 0.0, 0.8),
        )
        .unwrap();
        assert_relative_eq!(f_factor(&s, params.c), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            regularized_hamiltonian(&s, &params).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let s = SphereCotangentPoint::checked(NORTH_POLE, Vector4::new(0.0, 0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(
            regularized_hamiltonian(&s, &params).unwrap(),
            2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn q_unsupported_for_positive_mu() {
        let params = ProblemParams { c: -2.0, mu: 0.01, primary: Primary::Earth };
        let s = SphereCotangentPoint::checked(NORTH_POLE, Vector4::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert!(matches!(
            regularized_hamiltonian(&s, &params),
            Err(CoreError::UnsupportedMode { .. })
        ));
    }

    #[test]
    fn moser_round_trip() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let z = moser_map(&s, &params).unwrap();
            assert!(z.constraint_defect() < 1e-12);
            let back = moser_inverse(&z, &params).unwrap();
            assert!((back.q - s.q).norm() < 1e-10);
            assert!((back.p - s.p).norm() < 1e-10);
        }
    }

    #[test]
    fn regularization_correctness() {
        // 1000 random states on {H = c} land on {Q = 1/2} within 1e-9.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &c in &[-2.0, -1.6, -3.0] {
            let params = ProblemParams::rotating_kepler(c);
            for _ in 0..1000 {
                let s = state_on_level(&mut rng, c);
                let z = moser_map(&s, &params).unwrap();
                let q = regularized_hamiltonian(&z, &params).unwrap();
                assert!((q - 0.5).abs() < 1e-9, "c={c}: Q = {q}");
            }
        }
    }

    #[test]
    fn angular_momentum_matches_unregularized() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let z = moser_map(&s, &params).unwrap();
            let l_cart = s.q.x * s.p.y - s.q.y * s.p.x;
            assert_relative_eq!(angular_momentum(&z), l_cart, epsilon = 1e-10);
        }
    }

    #[test]
    fn planar_states_map_to_planar_points() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut s = random_state(&mut rng);
            s.q.z = 0.0;
            s.p.z = 0.0;
            let z = moser_map(&s, &params).unwrap();
            assert!(z.xi[3].abs() < 1e-14);
            assert!(z.eta[3].abs() < 1e-14);
        }
    }

    #[test]
    fn collision_approach_goes_to_pole() {
        let params = ProblemParams::rotating_kepler(-2.0);
        for scale in [1e2, 1e4, 1e6] {
            let s = CartesianState::new(
                Vector3::new(1e-4, 0.0, 0.0),
                Vector3::new(scale, scale, 0.0),
            );
            let z = moser_map(&s, &params).unwrap();
            assert!(z.dist_to_pole() < 10.0 / scale);
        }
    }

    #[test]
    fn inverse_fails_at_pole() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let s = SphereCotangentPoint::checked(NORTH_POLE, Vector4::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert!(matches!(
            moser_inverse(&s, &params),
            Err(CoreError::PoleSingularity { .. })
        ));
    }
}
