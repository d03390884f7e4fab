//! Two-dimensional radial toy model: the unit disc in the plane with
//! primitive `lambda = (x dy - y dx)/2`, the horizontal diameter as the
//! Lagrangian, and Hamiltonians `H = h(r)` of the squared radius
//! `r = x^2 + y^2`. The flow of `h(r)` rotates the circle of radius
//! `sqrt(r)` with angular speed `2 h'(r)`, so a time-1 chord from the
//! diameter back to itself exists exactly when `2 h'(r) = k pi` for an
//! integer `k >= 0`. Everything here is closed-form, which is the point:
//! the collar action formula and the chord-set stability under chopping
//! are checked against quadrature and enumeration.

use crate::error::{CoreError, Result};

const ROOT_SCAN_STEPS: usize = 4000;

/// Radial profile `h`, a polynomial in `r` optionally continued
/// linearly (slope `h'(R)`) past a chop radius `R`. The continuation is
/// C^1 at `R` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialHamiltonian {
    /// polynomial coefficients in `r`, constant term first
    pub coeffs: Vec<f64>,
    /// chop radius of the linear-at-infinity variant
    pub chop: Option<f64>,
}

impl RadialHamiltonian {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self { coeffs, chop: None }
    }

    /// The profile chopped at `R` and completed linearly with slope `h'(R)`.
    pub fn chopped(&self, radius: f64) -> Self {
        Self { coeffs: self.coeffs.clone(), chop: Some(radius) }
    }

    fn poly(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    fn poly_deriv(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * r + (i as f64) * c;
        }
        acc
    }

    pub fn h(&self, r: f64) -> f64 {
        match self.chop {
            Some(cr) if r >= cr => self.poly(cr) + self.poly_deriv(cr) * (r - cr),
            _ => self.poly(r),
        }
    }

    pub fn dh(&self, r: f64) -> f64 {
        match self.chop {
            Some(cr) if r >= cr => self.poly_deriv(cr),
            _ => self.poly_deriv(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChordLocation {
    /// `r < 1`
    Interior,
    /// `r >= 1`
    Collar,
}

/// A time-1 Hamiltonian chord of the radial model: the circle of
/// squared radius `radius` traversed through `k` half-turns.
#[derive(Debug, Clone, Copy)]
pub struct ToyChord {
    pub radius: f64,
    pub k: usize,
    pub action: f64,
    pub location: ChordLocation,
}

/// Collar action of the chord at squared radius `r`.
pub fn collar_action(h: &RadialHamiltonian, r: f64) -> f64 {
    -r * h.dh(r) + h.h(r)
}

fn location_of(r: f64) -> ChordLocation {
    if r < 1.0 {
        ChordLocation::Interior
    } else {
        ChordLocation::Collar
    }
}

/// Enumerates the chords with action at least `floor`: the constant
/// chord at the origin plus every radius solving `2 h'(r) = k pi`,
/// `k >= 1`. The scan interval is the chop radius when present,
/// otherwise grown until the (eventually decreasing) action profile
/// falls below `floor`.
pub fn toy_chords(h: &RadialHamiltonian, floor: f64) -> Result<Vec<ToyChord>> {
    let r_hi = match h.chop {
        Some(cr) => {
            // a resonant continuation slope carries a continuum of chords
            let ratio = 2.0 * h.poly_deriv(cr) / std::f64::consts::PI;
            if (ratio - ratio.round()).abs() < 1e-12 && ratio.round() >= 1.0 {
                return Err(CoreError::Domain(format!(
                    "continuation slope hits the resonance 2 h' = {} pi; \
                     the collar chord set is not discrete",
                    ratio.round()
                )));
            }
            cr
        }
        None if h.coeffs.len() <= 2 => {
            // affine profile: constant slope, no interior roots to scan
            let ratio = 2.0 * h.dh(0.0) / std::f64::consts::PI;
            if (ratio - ratio.round()).abs() < 1e-12 && ratio.round() >= 1.0 {
                return Err(CoreError::Domain(format!(
                    "affine slope hits the resonance 2 h' = {} pi; \
                     the chord set is not discrete",
                    ratio.round()
                )));
            }
            1.0
        }
        None => {
            let mut r = 1.0;
            // the action profile of a superlinear polynomial decreases
            // without bound, so the floor is eventually final
            let mut guard = 0;
            while collar_action(h, r) >= floor && guard < 60 {
                r *= 2.0;
                guard += 1;
            }
            if guard == 60 {
                return Err(CoreError::Domain(
                    "action profile never fell below the floor; \
                     unbounded chord search"
                        .into(),
                ));
            }
            r
        }
    };
    let mut out = Vec::new();
    let origin_action = h.h(0.0);
    if origin_action >= floor {
        out.push(ToyChord {
            radius: 0.0,
            k: 0,
            action: origin_action,
            location: ChordLocation::Interior,
        });
    }
    let mut max_slope = 0.0f64;
    for i in 0..=ROOT_SCAN_STEPS {
        let r = r_hi * (i as f64) / (ROOT_SCAN_STEPS as f64);
        max_slope = max_slope.max(h.dh(r));
    }
    let k_max = (2.0 * max_slope / std::f64::consts::PI).floor() as usize;
    for k in 1..=k_max {
        let target = (k as f64) * std::f64::consts::PI;
        let g = |r: f64| 2.0 * h.dh(r) - target;
        let mut prev_r = 0.0;
        let mut prev_g = g(0.0);
        for i in 1..=ROOT_SCAN_STEPS {
            let r = r_hi * (i as f64) / (ROOT_SCAN_STEPS as f64);
            let gr = g(r);
            if prev_g == 0.0 || prev_g * gr < 0.0 {
                let (mut a, mut b) = (prev_r, r);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if g(a) * g(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                let root = 0.5 * (a + b);
                let dup = out
                    .iter()
                    .any(|c: &ToyChord| c.k == k && (c.radius - root).abs() < 1e-9);
                if !dup {
                    let action = collar_action(h, root);
                    if action >= floor {
                        out.push(ToyChord { radius: root, k, action, location: location_of(root) });
                    }
                }
            }
            prev_r = r;
            prev_g = gr;
        }
        // endpoint root (the scan only brackets interior sign changes)
        if g(r_hi).abs() < 1e-12 {
            let dup = out.iter().any(|c| c.k == k && (c.radius - r_hi).abs() < 1e-9);
            if !dup {
                let action = collar_action(h, r_hi);
                if action >= floor {
                    out.push(ToyChord { radius: r_hi, k, action, location: location_of(r_hi) });
                }
            }
        }
    }
    out.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.k.cmp(&b.k)));
    Ok(out)
}

/// Numerical action of the model chord at squared radius `r`:
/// `-(integral of x*lambda) + (integral of H dt)` over the time-1
/// parametrization `x(t) = sqrt(r) (cos(2 h'(r) t), sin(2 h'(r) t))`.
/// Composite Simpson quadrature; used as the oracle for `collar_action`.
pub fn quadrature_action(h: &RadialHamiltonian, r: f64, nodes: usize) -> f64 {
    let omega = 2.0 * h.dh(r);
    let rho = r.sqrt();
    let integrand = |t: f64| {
        let (s, c) = (omega * t).sin_cos();
        let (x, y) = (rho * c, rho * s);
        let (xd, yd) = (-rho * omega * s, rho * omega * c);
        let lam = 0.5 * (x * yd - y * xd);
        -lam + h.h(x * x + y * y)
    };
    let n = nodes.max(2) & !1; // even
    let dt = 1.0 / (n as f64);
    let mut acc = integrand(0.0) + integrand(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand((i as f64) * dt);
    }
    acc * dt / 3.0
}

/// Report of the chord-set comparison between a superlinear profile and
/// its chop: matched `(r, k)` pairs and the symmetric difference.
#[derive(Debug, Clone)]
pub struct ChordSetReport {
    pub floor: f64,
    pub matched: Vec<(f64, usize)>,
    pub only_full: Vec<(f64, usize)>,
    pub only_chopped: Vec<(f64, usize)>,
}

impl ChordSetReport {
    pub fn equal(&self) -> bool {
        self.only_full.is_empty() && self.only_chopped.is_empty()
    }
}

/// Compares the chords of a convex increasing profile above the action
/// floor `a = A(R)` with the chords of its chop at `R`. For such
/// profiles the action `A(r) = -r h'(r) + h(r)` decreases in `r`, so
/// the floor keeps exactly the chords of squared radius at most `R` and
/// the two sets must agree.
pub fn chord_set_equality(hhat: &RadialHamiltonian, chop_radius: f64) -> Result<ChordSetReport> {
    let floor = collar_action(hhat, chop_radius);
    let full = toy_chords(hhat, floor)?;
    let chopped = toy_chords(&hhat.chopped(chop_radius), floor)?;
    let key = |c: &ToyChord| (c.radius, c.k);
    let mut matched = Vec::new();
    let mut only_full = Vec::new();
    let mut only_chopped: Vec<(f64, usize)> = chopped.iter().map(key).collect();
    for c in &full {
        let pos = only_chopped
            .iter()
            .position(|(r, k)| *k == c.k && (r - c.radius).abs() < 1e-10);
        match pos {
            Some(i) => {
                matched.push(only_chopped.remove(i));
            }
            None => only_full.push(key(c)),
        }
    }
    Ok(ChordSetReport { floor, matched, only_full, only_chopped })
}
