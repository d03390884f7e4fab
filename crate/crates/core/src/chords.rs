//! Consecutive-collision chords.
//!
//! On the regularized level the collision locus is the fiber sphere over
//! the north pole, `{xi = N, <xi,eta> = 0, |eta| = 1}`. Its intersection
//! with the pi/2-page is the closed hemisphere `eta3 >= 0`, parametrized
//! by the unit disk `u = (eta1, eta2)`. A chord of order `m` is an orbit
//! segment that starts on the locus and meets it again after `m` page
//! returns.

use nalgebra::Vector4;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::flow::{integrate_with_quadrature, IntegratorConfig};
use crate::kepler_core::{
    regularized_hamiltonian, ProblemParams, SphereCotangentPoint, NORTH_POLE,
};
use crate::openbook::{kepler_period, return_map_closed_form, return_map_numeric, PagePoint};

/// Default tolerance for "ends on the collision locus again".
pub const CHORD_TOL: f64 = 1e-6;

/// Planar chords stay in the binding plane `xi3 = eta3 = 0`; on the
/// locus disk that is exactly the boundary circle.
pub const PLANAR_TOL: f64 = 1e-8;

/// A point of the collision-locus disk on the pi/2-page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionDiskPoint {
    pub u1: f64,
    pub u2: f64,
}

impl CollisionDiskPoint {
    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        let r = (u1 * u1 + u2 * u2).sqrt();
        if r > 1.0 + 1e-12 {
            return Err(CoreError::Domain(format!("|u| = {r} leaves the collision disk")));
        }
        Ok(Self { u1, u2 })
    }

    pub fn norm(&self) -> f64 {
        (self.u1 * self.u1 + self.u2 * self.u2).sqrt().min(1.0)
    }

    /// The boundary circle is the planar (binding) part of the locus.
    pub fn is_boundary(&self) -> bool {
        1.0 - self.norm() < PLANAR_TOL
    }

    /// Lifts to the page: `xi = N`, `eta = (0, u1, u2, sqrt(1 - |u|^2))`.
    pub fn lift(&self, params: &ProblemParams) -> Result<PagePoint> {
        let r2 = (self.u1 * self.u1 + self.u2 * self.u2).min(1.0);
        let eta3 = (1.0 - r2).sqrt();
        let s = SphereCotangentPoint::checked(
            NORTH_POLE,
            Vector4::new(0.0, self.u1, self.u2, eta3),
        )?;
        PagePoint::new(s, params)
    }

    /// Reads the disk coordinates back off a page point near the locus.
    pub fn from_page(p: &PagePoint, tol: f64) -> Result<Self> {
        let s = p.point();
        let d = s.dist_to_pole();
        if d > tol {
            return Err(CoreError::Domain(format!(
                "page point sits {d:.3e} from the collision locus (tol {tol:.1e})"
            )));
        }
        Self::new(s.eta[1], s.eta[2])
    }

    pub fn dist(&self, other: &Self) -> f64 {
        ((self.u1 - other.u1).powi(2) + (self.u2 - other.u2).powi(2)).sqrt()
    }
}

/// Concentric-ring sample of the closed disk: `n_r` rings uniform in
/// radius squared (so uniform in area), `n_theta` angles per ring, plus
/// the center. The outermost ring lies exactly on the boundary.
pub fn disk_grid(n_r: usize, n_theta: usize) -> Vec<CollisionDiskPoint> {
    let mut out = vec![CollisionDiskPoint { u1: 0.0, u2: 0.0 }];
    for j in 1..=n_r {
        let r = ((j as f64) / (n_r as f64)).sqrt();
        for i in 0..n_theta {
            let th = std::f64::consts::TAU * (i as f64) / (n_theta as f64);
            out.push(CollisionDiskPoint { u1: r * th.cos(), u2: r * th.sin() });
        }
    }
    out
}

/// Random interior disk point, uniform in area, radius in `(r_min, r_max)`.
pub fn sample_disk_point(rng: &mut impl Rng, r_min: f64, r_max: f64) -> CollisionDiskPoint {
    let r = rng.gen_range(r_min * r_min..r_max * r_max).sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    CollisionDiskPoint { u1: r * th.cos(), u2: r * th.sin() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// Iterate the integrated Poincare return map.
    Numeric,
    /// Iterate the closed-form rotation (rotating Kepler only).
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChordClass {
    Planar,
    Spatial,
}

#[derive(Debug, Clone, Copy)]
pub struct ChordRecord {
    pub start: CollisionDiskPoint,
    /// Number of page returns this record spans.
    pub order: usize,
    /// Smallest order at which the orbit from `start` re-met the locus.
    pub minimal_order: usize,
    /// Smallest `k <= period_max` with `image_k = start` (within tol).
    pub period: Option<usize>,
    pub class: ChordClass,
    /// Regularized action; filled only when requested.
    pub action: Option<f64>,
    pub endpoint: CollisionDiskPoint,
    /// Disk rotation angle of the first return, in `[0, 2*pi)`; NaN at
    /// the center where the angle is undefined.
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Orders to record.
    pub max_order: usize,
    /// Horizon of the periodicity scan (forward iteration of the map).
    pub period_max: usize,
    /// Locus-return and periodicity tolerance.
    pub tol: f64,
    pub with_action: bool,
    pub integrator: IntegratorConfig,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_order: 8,
            period_max: 64,
            tol: CHORD_TOL,
            with_action: false,
            integrator: IntegratorConfig::with_horizon(60.0),
        }
    }
}

/// A grid point whose orbit could not be iterated (binding proximity,
/// horizon, ...) together with the reason. Skips are not failures.
#[derive(Debug, Clone)]
pub struct SkippedPoint {
    pub start: CollisionDiskPoint,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub records: Vec<ChordRecord>,
    pub skipped: Vec<SkippedPoint>,
}

fn disk_rotation_angle(a: &CollisionDiskPoint, b: &CollisionDiskPoint) -> f64 {
    if a.norm() < 1e-12 || b.norm() < 1e-12 {
        return f64::NAN;
    }
    let cross = a.u1 * b.u2 - a.u2 * b.u1;
    let dot = a.u1 * b.u1 + a.u2 * b.u2;
    let ang = cross.atan2(dot);
    if ang < 0.0 {
        ang + std::f64::consts::TAU
    } else {
        ang
    }
}

/// One return of the disk map in the requested mode. Returns the image
/// page point and, in numeric mode, the flow time of the return.
fn iterate_once(
    p: &PagePoint,
    params: &ProblemParams,
    mode: MapMode,
    cfg: &IntegratorConfig,
) -> Result<(PagePoint, Option<f64>)> {
    match mode {
        MapMode::ClosedForm => Ok((return_map_closed_form(p, params)?, None)),
        MapMode::Numeric => {
            let r = return_map_numeric(p, params, cfg)?;
            Ok((r.point, Some(r.time)))
        }
    }
}

/// Regularized action of the flow segment of the given duration:
/// `-(integral of <eta, dxi/dtau>) + (integral of Q dtau)`.
pub fn chord_action(
    start: &SphereCotangentPoint,
    duration: f64,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    if duration == 0.0 {
        return Ok(0.0);
    }
    let mut cfg = *cfg;
    cfg.max_time = duration;
    let (_, a) = integrate_with_quadrature(start, params, &cfg, |y| {
        let s = crate::flow::vec_to_state(y);
        let dot = crate::flow::vector_field(&s, params);
        let mut lam = 0.0;
        for i in 0..4 {
            lam += s.eta[i] * dot[i];
        }
        -lam + regularized_hamiltonian(&s, params).unwrap_or(f64::NAN)
    })?;
    Ok(a)
}

/// Sweeps a disk grid for chords.
///
/// For each grid point the page map is iterated; every order `m <=
/// max_order` at which the orbit lands back on the locus (within `tol`)
/// yields one record. Periodicity is scanned by forward iteration up to
/// `period_max`. Actions, when requested, use the rotational symmetry of
/// the locus: all return segments of one orbit carry equal action, so
/// the order-`m` action is `m` times the measured first-return action.
pub fn chord_search(
    params: &ProblemParams,
    mode: MapMode,
    grid: &[CollisionDiskPoint],
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    if !params.openbook_valid() {
        return Err(CoreError::Domain(format!(
            "c = {} is outside the below-critical range c < -3/2",
            params.c
        )));
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    'points: for &u in grid {
        let lifted = match u.lift(params) {
            Ok(p) => p,
            Err(e) => {
                skipped.push(SkippedPoint { start: u, reason: e.to_string() });
                continue;
            }
        };
        let horizon = opts.max_order.max(opts.period_max);
        let mut images: Vec<CollisionDiskPoint> = Vec::with_capacity(horizon);
        let mut cur = lifted;
        let mut first_return_time = None;
        let mut spatial_excursion = false;
        for _ in 0..horizon {
            let (next, time) = match iterate_once(&cur, params, mode, &opts.integrator) {
                Ok(r) => r,
                Err(e) => {
                    skipped.push(SkippedPoint { start: u, reason: e.to_string() });
                    continue 'points;
                }
            };
            if first_return_time.is_none() {
                first_return_time = time;
            }
            let s = next.point();
            if s.xi[3].abs() > PLANAR_TOL || s.eta[3].abs() > PLANAR_TOL {
                spatial_excursion = true;
            }
            match CollisionDiskPoint::from_page(&next, opts.tol) {
                Ok(img) => images.push(img),
                Err(e) => {
                    skipped.push(SkippedPoint { start: u, reason: e.to_string() });
                    continue 'points;
                }
            }
            cur = next;
        }
        let minimal_order = 1; // every return of a locus orbit re-meets the locus
        let period = images
            .iter()
            .position(|img| img.dist(&u) < opts.tol)
            .map(|k| k + 1)
            .filter(|k| *k <= opts.period_max);
        // Interior locus points leave the binding plane along the flow;
        // only the boundary circle stays planar.
        let class = if u.is_boundary() && !spatial_excursion {
            ChordClass::Planar
        } else {
            ChordClass::Spatial
        };
        let angle = disk_rotation_angle(&u, &images[0]);
        let action_one = if opts.with_action {
            let t = match first_return_time {
                Some(t) => t,
                None => match return_map_numeric(&lifted, params, &opts.integrator) {
                    Ok(r) => r.time,
                    Err(e) => {
                        skipped.push(SkippedPoint { start: u, reason: e.to_string() });
                        continue 'points;
                    }
                },
            };
            match chord_action(lifted.point(), t, params, &opts.integrator) {
                Ok(a) => Some(a),
                Err(e) => {
                    skipped.push(SkippedPoint { start: u, reason: e.to_string() });
                    continue 'points;
                }
            }
        } else {
            None
        };
        for m in 1..=opts.max_order.min(images.len()) {
            records.push(ChordRecord {
                start: u,
                order: m,
                minimal_order,
                period,
                class,
                action: action_one.map(|a| a * m as f64),
                endpoint: images[m - 1],
                angle,
            });
        }
    }
    Ok(SearchOutcome { records, skipped })
}

/// Energy of the `p:q` resonance: the level where the locus rotation
/// per return is `2*pi*p/q`, i.e. `T(c) / (2*pi) = p/q` with the Kepler
/// period `T(K) = 2*pi*(-2K)^{-3/2}`.
#[derive(Debug, Clone, Copy)]
pub struct Resonance {
    pub c: f64,
    /// Whether the level lies in the below-critical range `c < -3/2`.
    pub valid: bool,
}

pub fn resonance_solve(p: u32, q: u32) -> Result<Resonance> {
    if p == 0 || q == 0 {
        return Err(CoreError::Domain("resonance orders must be positive".into()));
    }
    let c = -0.5 * ((q as f64) / (p as f64)).powf(2.0 / 3.0);
    Ok(Resonance { c, valid: c < -1.5 })
}

/// Locus rotation angle per return at level `c`, reduced to `[0, 2*pi)`.
pub fn locus_rotation(c: f64) -> Result<f64> {
    let t = kepler_period(c)?;
    Ok(t.rem_euclid(std::f64::consts::TAU))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kepler_core::{angular_momentum, TOL_CONSTRAINT};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lift_projection_roundtrip() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let u = sample_disk_point(&mut rng, 0.0, 0.999);
            let p = u.lift(&params).unwrap();
            let s = p.point();
            assert!(s.constraint_defect() < TOL_CONSTRAINT);
            assert!(s.dist_to_pole() < 1e-12);
            assert_relative_eq!(
                regularized_hamiltonian(s, &params).unwrap(),
                0.5,
                epsilon = 1e-12
            );
            assert_relative_eq!(angular_momentum(s), 0.0, epsilon = 1e-12);
            let back = CollisionDiskPoint::from_page(&p, 1e-9).unwrap();
            assert!(back.dist(&u) < 1e-12);
        }
    }

    #[test]
    fn grid_shape() {
        let g = disk_grid(8, 16);
        assert_eq!(g.len(), 1 + 8 * 16);
        assert!(g.iter().all(|u| u.norm() <= 1.0 + 1e-15));
        let boundary = g.iter().filter(|u| u.is_boundary()).count();
        assert_eq!(boundary, 16);
        // rings uniform in radius squared
        let r2: Vec<f64> = (1..=8).map(|j| g[1 + (j - 1) * 16].norm().powi(2)).collect();
        for (j, v) in r2.iter().enumerate() {
            assert_relative_eq!(*v, (j as f64 + 1.0) / 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn resonance_inversion() {
        let r = resonance_solve(1, 8).unwrap();
        assert_relative_eq!(r.c, -2.0, epsilon = 1e-14);
        assert!(r.valid);
        assert_relative_eq!(
            kepler_period(r.c).unwrap(),
            std::f64::consts::TAU / 8.0,
            epsilon = 1e-14
        );
        // shallow resonances fall outside the below-critical range
        let s = resonance_solve(2, 3).unwrap();
        assert!(!s.valid);
        assert!(resonance_solve(0, 5).is_err());
    }

    #[test]
    fn closed_form_search_at_the_eight_resonance() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let grid = disk_grid(4, 8);
        let opts = SearchOptions { max_order: 8, period_max: 16, ..Default::default() };
        let out = chord_search(&params, MapMode::ClosedForm, &grid, &opts).unwrap();
        assert!(out.skipped.is_empty());
        assert_eq!(out.records.len(), grid.len() * 8);
        for r in out.records.iter().filter(|r| r.order == 1) {
            if r.start.norm() > 1e-9 {
                assert_relative_eq!(r.angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
                assert_eq!(r.period, Some(8));
            } else {
                assert_eq!(r.period, Some(1)); // the center is fixed
            }
            let want = if r.start.is_boundary() { ChordClass::Planar } else { ChordClass::Spatial };
            assert_eq!(r.class, want);
        }
    }

    #[test]
    fn nonresonant_level_has_only_the_central_periodic_point() {
        // T(c)/2pi = 2^(-5/2) is a quadratic irrational here, so off-center
        // rotation orbits cannot close.
        let params = ProblemParams::rotating_kepler(-(2.0f64.powf(2.0 / 3.0)));
        let mut grid = vec![CollisionDiskPoint { u1: 0.0, u2: 0.0 }];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..12 {
            grid.push(sample_disk_point(&mut rng, 0.15, 0.95));
        }
        let opts = SearchOptions { max_order: 1, period_max: 500, ..Default::default() };
        let out = chord_search(&params, MapMode::ClosedForm, &grid, &opts).unwrap();
        for r in &out.records {
            if r.start.norm() < 1e-9 {
                assert_eq!(r.period, Some(1));
            } else {
                assert_eq!(r.period, None);
            }
        }
    }

    #[test]
    fn numeric_matches_closed_form_on_the_locus() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid: Vec<_> = (0..6).map(|_| sample_disk_point(&mut rng, 0.1, 0.9)).collect();
        let opts = SearchOptions { max_order: 2, period_max: 2, ..Default::default() };
        let num = chord_search(&params, MapMode::Numeric, &grid, &opts).unwrap();
        let cf = chord_search(&params, MapMode::ClosedForm, &grid, &opts).unwrap();
        assert!(num.skipped.is_empty(), "{:?}", num.skipped);
        assert_eq!(num.records.len(), cf.records.len());
        for (a, b) in num.records.iter().zip(cf.records.iter()) {
            assert!(a.endpoint.dist(&b.endpoint) < 1e-6);
            assert!((a.angle - b.angle).abs() < 1e-6);
        }
    }

    #[test]
    fn locus_rotation_is_rigid() {
        // numeric first-return angles agree across the locus
        let params = ProblemParams::rotating_kepler(-1.7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid: Vec<_> = (0..5).map(|_| sample_disk_point(&mut rng, 0.2, 0.8)).collect();
        let opts = SearchOptions { max_order: 1, period_max: 1, ..Default::default() };
        let out = chord_search(&params, MapMode::Numeric, &grid, &opts).unwrap();
        let want = locus_rotation(params.c).unwrap();
        for r in &out.records {
            assert!((r.angle - want).abs() < 1e-6, "angle {} vs {}", r.angle, want);
        }
    }

    #[test]
    fn boundary_points_are_skipped_numerically_not_failed() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let grid = vec![
            CollisionDiskPoint { u1: 1.0, u2: 0.0 },
            CollisionDiskPoint { u1: 0.5, u2: 0.0 },
        ];
        let opts = SearchOptions { max_order: 1, period_max: 1, ..Default::default() };
        let out = chord_search(&params, MapMode::Numeric, &grid, &opts).unwrap();
        assert_eq!(out.skipped.len(), 1);
        assert_relative_eq!(out.skipped[0].start.norm(), 1.0, epsilon = 1e-12);
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn no_mixed_chords() {
        // both endpoints of every chord carry the same class
        let params = ProblemParams::rotating_kepler(-2.0);
        let grid = disk_grid(3, 6);
        let opts = SearchOptions { max_order: 3, period_max: 8, ..Default::default() };
        let out = chord_search(&params, MapMode::ClosedForm, &grid, &opts).unwrap();
        for r in &out.records {
            assert_eq!(r.start.is_boundary(), r.endpoint.is_boundary());
        }
    }

    #[test]
    fn periodic_chord_decomposes_into_unit_subchords() {
        // at the 8-resonance the order-8 chord closes up and its eight
        // order-1 pieces chain endpoint to start
        let params = ProblemParams::rotating_kepler(-2.0);
        let u = CollisionDiskPoint { u1: 0.4, u2: 0.3 };
        let mut cur = u.lift(&params).unwrap();
        let mut hops = Vec::new();
        for _ in 0..8 {
            cur = return_map_closed_form(&cur, &params).unwrap();
            hops.push(CollisionDiskPoint::from_page(&cur, 1e-9).unwrap());
        }
        assert!(hops[7].dist(&u) < 1e-12);
        let mut prev = u;
        for h in hops {
            assert!(h.dist(&prev) > 0.01 || h.dist(&u) < 1e-12);
            prev = h;
        }
    }

    #[test]
    fn action_basics() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let cfg = IntegratorConfig::default();
        let u = CollisionDiskPoint { u1: 0.3, u2: -0.2 };
        let s = u.lift(&params).unwrap().into_inner();
        assert_eq!(chord_action(&s, 0.0, &params, &cfg).unwrap(), 0.0);
        // short-time action matches the integrand linearly
        let dot = crate::flow::vector_field(&s, &params);
        let mut lam = 0.0;
        for i in 0..4 {
            lam += s.eta[i] * dot[i];
        }
        let rate = -lam + 0.5;
        let eps = 1e-4;
        let a = chord_action(&s, eps, &params, &cfg).unwrap();
        assert!((a - rate * eps).abs() < 1e-6 * eps.max(1.0));
    }

    #[test]
    fn action_is_additive_along_the_orbit() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let cfg = IntegratorConfig::default();
        let u = CollisionDiskPoint { u1: 0.25, u2: 0.55 };
        let s = u.lift(&params).unwrap().into_inner();
        let t1 = 0.7;
        let t2 = 1.1;
        let whole = chord_action(&s, t1 + t2, &params, &cfg).unwrap();
        let first = chord_action(&s, t1, &params, &cfg).unwrap();
        let mut mid_cfg = cfg;
        mid_cfg.max_time = t1;
        let traj = crate::flow::integrate(&s, &params, &mid_cfg).unwrap();
        let second = chord_action(traj.end(), t2, &params, &cfg).unwrap();
        assert!((whole - (first + second)).abs() < 1e-9, "gap {}", whole - (first + second));
    }

    #[test]
    fn chord_actions_scale_with_order_in_search() {
        let params = ProblemParams::rotating_kepler(-2.0);
        let grid = vec![CollisionDiskPoint { u1: 0.5, u2: 0.1 }];
        let opts = SearchOptions {
            max_order: 3,
            period_max: 3,
            with_action: true,
            ..Default::default()
        };
        let out = chord_search(&params, MapMode::Numeric, &grid, &opts).unwrap();
        let a: Vec<f64> = out.records.iter().map(|r| r.action.unwrap()).collect();
        assert_eq!(a.len(), 3);
        assert!(a[0] > 0.0);
        assert_relative_eq!(a[1], 2.0 * a[0], epsilon = 1e-9);
        assert_relative_eq!(a[2], 3.0 * a[0], epsilon = 1e-9);
    }

    #[test]
    fn action_response_is_lipschitz_in_the_perturbation() {
        // perturb the level c -> c + delta; the action difference of the
        // first-return chord from a fixed locus point stays bounded by a
        // uniform multiple of the perturbation size as delta -> 0
        let c0 = -2.0;
        let u = CollisionDiskPoint { u1: 0.45, u2: 0.2 };
        let cfg = IntegratorConfig::default();
        let base = ProblemParams::rotating_kepler(c0);
        let opts = SearchOptions {
            max_order: 1,
            period_max: 1,
            with_action: true,
            ..Default::default()
        };
        let a0 = chord_search(&base, MapMode::Numeric, &[u], &opts).unwrap().records[0]
            .action
            .unwrap();
        let mut ratios = Vec::new();
        for delta in [1e-3, 1e-4, 1e-5] {
            let pert = ProblemParams::rotating_kepler(c0 + delta);
            let a = chord_search(&pert, MapMode::Numeric, &[u], &opts).unwrap().records[0]
                .action
                .unwrap();
            // C0 size of the Hamiltonian perturbation along the base chord:
            // Q_{c+d} - Q_c = (f' + f)(1 - xi0)(-d) |eta|^2 / 2
            let s = u.lift(&base).unwrap().into_inner();
            let mut sup = 0.0f64;
            let mut probe_cfg = cfg;
            probe_cfg.max_time = 2.0;
            let traj = crate::flow::integrate(&s, &base, &probe_cfg).unwrap();
            for (_, st) in &traj.samples {
                let f0 = crate::kepler_core::f_factor(st, c0);
                let f1 = crate::kepler_core::f_factor(st, c0 + delta);
                let dg = 0.5 * (f1 * f1 - f0 * f0) * st.eta.norm_squared();
                sup = sup.max(dg.abs());
            }
            ratios.push((a - a0).abs() / sup);
        }
        for r in &ratios {
            assert!(r.is_finite() && *r < 100.0, "ratio {r}");
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 10.0, "unstable response constants {ratios:?}");
    }
}
