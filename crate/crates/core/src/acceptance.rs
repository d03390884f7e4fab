//! End-to-end verification suite: ten numbered checks covering the
//! return map, the collision locus, regularization, the toy model, the
//! spectral algebra, the index machinery, and run determinism. Each
//! check reports pass/fail plus the measured quantities, so the CLI and
//! the integration test share one implementation.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chords::{sample_disk_point, CollisionDiskPoint};
use crate::error::{CoreError, Result};
use crate::flow::{integrate, IntegratorConfig};
use crate::indices::{
    definiteness_fit, linearize_along, mean_index, monodromy_fd_gap, random_path, rotation_path,
    rs_index, rs_index_doubled, IndexMode,
};
use crate::kepler_core::{
    hamiltonian_unregularized, moser_inverse, moser_map, regularized_hamiltonian,
    sample_state_on_level, ProblemParams,
};
use crate::liouville_toy::{
    chord_set_equality, collar_action, quadrature_action, RadialHamiltonian,
};
use crate::openbook::{
    kepler_period, return_map_closed_form, return_map_numeric, sample_page_point, PagePoint,
};
use crate::specseq::{random_filtered_complex, run_to_einfty};
use crate::table::{checksum_hex, format_float, Table};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:2}. {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(usize, &str); 10] = [
    (1, "return map agrees with the closed form"),
    (2, "collision locus rotates rigidly"),
    (3, "8-resonant level has minimal period 8"),
    (4, "non-resonant level never returns"),
    (5, "regularization lands on Q = 1/2"),
    (6, "collar action formulas"),
    (7, "spectral pages match elimination"),
    (8, "index suite"),
    (9, "index growth along Kepler arcs"),
    (10, "seeded runs are reproducible"),
];

pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionResult> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .ok_or_else(|| CoreError::Domain(format!("no criterion {id}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(id as u64));
    let t0 = Instant::now();
    let (passed, detail) = match id {
        1 => map_oracle_agreement(&mut rng),
        2 => locus_rigid_rotation(&mut rng),
        3 => resonant_minimal_period(),
        4 => nonresonant_no_return(&mut rng),
        5 => regularization_correctness(&mut rng),
        6 => collar_formulas(&mut rng),
        7 => spectral_oracle(&mut rng),
        8 => index_suite(&mut rng),
        9 => kepler_arc_growth(),
        10 => determinism(seed),
    // ids are validated above
        _ => unreachable!(),
    };
    Ok(CriterionResult { id, name, passed, detail, seconds: t0.elapsed().as_secs_f64() })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, seed).unwrap()).collect()
}

fn page_gap(a: &PagePoint, b: &PagePoint) -> f64 {
    let (a, b) = (a.point(), b.point());
    (a.xi - b.xi).norm().max((a.eta - b.eta).norm())
}

/// 1: numeric first-return vs the closed-form rotation, componentwise
/// below 1e-6 on at least 100 points per level, budget 5 minutes.
fn map_oracle_agreement(rng: &mut ChaCha8Rng) -> (bool, String) {
    let t0 = Instant::now();
    let cfg = IntegratorConfig::with_horizon(60.0);
    let mut worst = 0.0f64;
    let mut total = 0usize;
    for &c in &[-2.0, -1.7, -3.0] {
        let params = ProblemParams::rotating_kepler(c);
        let mut done = 0;
        let mut attempts = 0;
        while done < 100 && attempts < 300 {
            attempts += 1;
            let Ok(x) = sample_page_point(rng, &params) else { continue };
            let Ok(num) = return_map_numeric(&x, &params, &cfg) else { continue };
            let Ok(cf) = return_map_closed_form(&x, &params) else { continue };
            worst = worst.max(page_gap(&num.point, &cf));
            done += 1;
        }
        if done < 100 {
            return (false, format!("c = {c}: only {done} comparable points"));
        }
        total += done;
    }
    let secs = t0.elapsed().as_secs_f64();
    (
        worst < 1e-6 && secs < 300.0,
        format!("{total} points, worst gap {worst:.3e}, within budget: {}", secs < 300.0),
    )
}

/// 2: the measured return on the collision locus at c = -2 is the rigid
/// rotation by T(-2) on 50 disc points; the origin is fixed to 1e-8.
fn locus_rigid_rotation(rng: &mut ChaCha8Rng) -> (bool, String) {
    let params = ProblemParams::rotating_kepler(-2.0);
    let cfg = IntegratorConfig::with_horizon(60.0);
    let period = kepler_period(-2.0).unwrap();
    let mut worst_angle = 0.0f64;
    let mut worst_radius = 0.0f64;
    for _ in 0..50 {
        let u = sample_disk_point(rng, 0.05, 0.95);
        let lifted = match u.lift(&params) {
            Ok(p) => p,
            Err(e) => return (false, format!("lift failed: {e}")),
        };
        let img = match return_map_numeric(&lifted, &params, &cfg) {
            Ok(r) => r.point,
            Err(e) => return (false, format!("return failed at |u| = {}: {e}", u.norm())),
        };
        let v = match CollisionDiskPoint::from_page(&img, 1e-6) {
            Ok(v) => v,
            Err(e) => return (false, format!("image left the locus: {e}")),
        };
        let angle = (u.u1 * v.u2 - u.u2 * v.u1).atan2(u.u1 * v.u1 + u.u2 * v.u2);
        let gap = (angle - period).rem_euclid(std::f64::consts::TAU);
        worst_angle = worst_angle.max(gap.min(std::f64::consts::TAU - gap));
        worst_radius = worst_radius.max((v.norm() - u.norm()).abs());
    }
    let origin = CollisionDiskPoint { u1: 0.0, u2: 0.0 }.lift(&params).unwrap();
    let origin_img = match return_map_numeric(&origin, &params, &cfg) {
        Ok(r) => r.point,
        Err(e) => return (false, format!("origin return failed: {e}")),
    };
    let origin_gap = page_gap(&origin, &origin_img);
    (
        worst_angle < 1e-6 && worst_radius < 1e-6 && origin_gap < 1e-8,
        format!(
            "angle gap {worst_angle:.3e}, radius drift {worst_radius:.3e}, origin moves {origin_gap:.3e}"
        ),
    )
}

/// 3: at the (1,8)-resonant level every non-origin locus point has
/// minimal period exactly 8: back within 1e-6 at iterate 8, never
/// within 1e-3 at iterates 1..7.
fn resonant_minimal_period() -> (bool, String) {
    let c = crate::chords::resonance_solve(1, 8).unwrap().c;
    let params = ProblemParams::rotating_kepler(c);
    let mut worst_return = 0.0f64;
    let mut closest_early = f64::INFINITY;
    for u in crate::chords::disk_grid(4, 12) {
        if u.norm() < 1e-12 {
            continue;
        }
        let start = u.lift(&params).unwrap();
        let mut p = start;
        for it in 1..=8usize {
            p = match return_map_closed_form(&p, &params) {
                Ok(p) => p,
                Err(e) => return (false, format!("iterate {it} failed: {e}")),
            };
            let d = page_gap(&start, &p);
            if it == 8 {
                worst_return = worst_return.max(d);
            } else {
                closest_early = closest_early.min(d);
            }
        }
    }
    (
        worst_return < 1e-6 && closest_early > 1e-3,
        format!(
            "c = {c}, gap at iterate 8: {worst_return:.3e}, nearest early return {closest_early:.3e}"
        ),
    )
}

/// 4: at the badly-approximable level no sampled point returns within
/// 1e-6 in 10^4 iterates, budget 1 minute.
fn nonresonant_no_return(rng: &mut ChaCha8Rng) -> (bool, String) {
    let t0 = Instant::now();
    let c = -f64::powf(2.0, 2.0 / 3.0);
    let params = ProblemParams::rotating_kepler(c);
    let mut closest = f64::INFINITY;
    for _ in 0..50 {
        let u = sample_disk_point(rng, 0.1, 0.9);
        let start = u.lift(&params).unwrap();
        let mut p = start;
        for it in 1..=10_000usize {
            p = match return_map_closed_form(&p, &params) {
                Ok(p) => p,
                Err(e) => return (false, format!("iterate {it} failed: {e}")),
            };
            closest = closest.min(page_gap(&start, &p));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    (
        closest > 1e-6 && secs < 60.0,
        format!("c = {c:.6}, nearest recurrence {closest:.3e} over 10^4 iterates, within budget: {}", secs < 60.0),
    )
}

/// 5: 1000 random states on {H = c} map onto {Q = 1/2} within 1e-9 and
/// round-trip through the regularization within 1e-10.
fn regularization_correctness(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst_q = 0.0f64;
    let mut worst_rt = 0.0f64;
    let mut worst_level = 0.0f64;
    for &c in &[-2.0, -1.6, -3.0] {
        let params = ProblemParams::rotating_kepler(c);
        for _ in 0..334 {
            let s = sample_state_on_level(rng, c);
            worst_level =
                worst_level.max((hamiltonian_unregularized(&s, &params).unwrap() - c).abs());
            let z = match moser_map(&s, &params) {
                Ok(z) => z,
                Err(e) => return (false, format!("map failed: {e}")),
            };
            worst_q = worst_q.max((regularized_hamiltonian(&z, &params).unwrap() - 0.5).abs());
            let back = match moser_inverse(&z, &params) {
                Ok(b) => b,
                Err(e) => return (false, format!("inverse failed: {e}")),
            };
            worst_rt = worst_rt.max((back.q - s.q).norm().max((back.p - s.p).norm()));
        }
    }
    (
        worst_q < 1e-9 && worst_rt < 1e-10 && worst_level < 1e-9,
        format!("|Q - 1/2| <= {worst_q:.3e}, round-trip <= {worst_rt:.3e}"),
    )
}

fn random_convex_profile(rng: &mut ChaCha8Rng) -> RadialHamiltonian {
    RadialHamiltonian::polynomial(vec![
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.2..2.0),
        rng.gen_range(0.0..0.5),
    ])
}

/// 6: the collar action formula matches quadrature to 1e-10, and for 20
/// random convex profiles the chord set survives chopping unchanged.
fn collar_formulas(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let h = random_convex_profile(rng);
        let r = rng.gen_range(0.1..3.0);
        worst = worst.max((quadrature_action(&h, r, 2000) - collar_action(&h, r)).abs());
    }
    if worst >= 1e-10 {
        return (false, format!("quadrature gap {worst:.3e}"));
    }
    let mut done = 0;
    let mut attempts = 0;
    while done < 20 && attempts < 200 {
        attempts += 1;
        let h = random_convex_profile(rng);
        let chop = rng.gen_range(0.5..4.0);
        match chord_set_equality(&h, chop) {
            Ok(report) => {
                if !report.equal() {
                    return (
                        false,
                        format!(
                            "chord sets differ: extra full {:?}, extra chopped {:?}",
                            report.only_full, report.only_chopped
                        ),
                    );
                }
                done += 1;
            }
            // resonant chop slope: the comparison is not defined there
            Err(CoreError::Domain(_)) => continue,
            Err(e) => return (false, format!("chop comparison failed: {e}")),
        }
    }
    (
        done == 20,
        format!("quadrature gap {worst:.3e}, {done} profiles agree after chopping"),
    )
}

/// 7: stabilized pages of 1000 random filtered complexes match the
/// elimination oracle, budget 2 minutes.
fn spectral_oracle(rng: &mut ChaCha8Rng) -> (bool, String) {
    let t0 = Instant::now();
    let mut gens = 0usize;
    for i in 0..1000 {
        let (cx, w) = random_filtered_complex(rng, 50);
        gens += cx.len();
        let run = match run_to_einfty(&cx, &w) {
            Ok(r) => r,
            Err(e) => return (false, format!("complex {i} failed: {e}")),
        };
        if !run.agree {
            return (
                false,
                format!(
                    "complex {i}: stabilized {:?} vs cohomology {:?}",
                    run.einfty_dims, run.total_cohomology
                ),
            );
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    (secs < 120.0, format!("1000 complexes ({gens} generators), within budget: {}", secs < 120.0))
}

/// 8: normalization, iteration, comparison, and linearization checks on
/// the index machinery.
fn index_suite(rng: &mut ChaCha8Rng) -> (bool, String) {
    let loop1 = rotation_path(std::f64::consts::TAU, 2001);
    let doubled = match rs_index_doubled(&loop1, IndexMode::Graph) {
        Ok(d) => d,
        Err(e) => return (false, format!("rotation loop index failed: {e}")),
    };
    if doubled != 4 {
        return (false, format!("rotation loop index {} != 2", doubled as f64 / 2.0));
    }
    let base = rotation_path(std::f64::consts::TAU, 501);
    for k in 1..=20usize {
        let iterated = match base.iterate_loop(k) {
            Ok(p) => p,
            Err(e) => return (false, format!("iterate {k} failed: {e}")),
        };
        let delta = match mean_index(&iterated) {
            Ok(d) => d,
            Err(e) => return (false, format!("mean index of iterate {k} failed: {e}")),
        };
        if (delta - 2.0 * k as f64).abs() > 1e-6 {
            return (false, format!("mean index of iterate {k} is {delta}"));
        }
    }
    let mut worst_defect = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 3;
        let path = random_path(rng, n, 60);
        let mu = match rs_index(&path, IndexMode::Graph) {
            Ok(m) => m,
            Err(e) => return (false, format!("random path {i}: {e}")),
        };
        let delta = match mean_index(&path) {
            Ok(d) => d,
            Err(e) => return (false, format!("random path {i} winding: {e}")),
        };
        let defect = (delta - mu).abs() - n as f64;
        worst_defect = worst_defect.max(defect);
        if defect > 1e-9 {
            return (false, format!("path {i} (n = {n}): |Delta - mu| = {}", (delta - mu).abs()));
        }
    }
    let params = ProblemParams::rotating_kepler(-2.0);
    let start = CollisionDiskPoint { u1: 0.35, u2: 0.15 }.lift(&params).unwrap().into_inner();
    let traj = match integrate(&start, &params, &IntegratorConfig::with_horizon(1.5)) {
        Ok(t) => t,
        Err(e) => return (false, format!("trajectory failed: {e}")),
    };
    let fd = match monodromy_fd_gap(&traj, &params, 1e-5) {
        Ok(g) => g,
        Err(e) => return (false, format!("monodromy probe failed: {e}")),
    };
    (
        fd < 1e-4,
        format!("loop index 2, iterates track 2k, comparison slack {worst_defect:.3e}, monodromy gap {fd:.3e}"),
    )
}

/// 9: the index of longer and longer arcs through a fixed locus point
/// grows linearly with a certified positive slope.
fn kepler_arc_growth() -> (bool, String) {
    let params = ProblemParams::rotating_kepler(-2.0);
    let start = CollisionDiskPoint { u1: 0.3, u2: 0.2 }.lift(&params).unwrap().into_inner();
    let mut arcs = Vec::new();
    for i in 1..=12 {
        let t = 1.0 + 1.4 * i as f64;
        let traj = match integrate(&start, &params, &IntegratorConfig::with_horizon(t)) {
            Ok(tr) => tr,
            Err(e) => return (false, format!("arc T = {t}: {e}")),
        };
        let path = match linearize_along(&traj, &params) {
            Ok(p) => p,
            Err(e) => return (false, format!("linearization at T = {t}: {e}")),
        };
        match rs_index(&path, IndexMode::Graph) {
            Ok(mu) => arcs.push((t, mu)),
            Err(e) => return (false, format!("index at T = {t}: {e}")),
        }
    }
    let fit = match definiteness_fit(&arcs) {
        Ok(f) => f,
        Err(e) => return (false, format!("fit failed: {e}")),
    };
    let max_resid = fit.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    (
        fit.c > 0.0 && fit.certified,
        format!(
            "slope {:.4}, offset {:.4}, margin {:.1}, max residual {:.3}, certified {}",
            fit.c, fit.d, fit.margin, max_resid, fit.certified
        ),
    )
}

/// Seed-determined mini-workload exercising every randomized code path;
/// its full numeric output is hashed for the reproducibility check.
fn determinism_digest(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new(&["kind", "a", "b"]);
    let params = ProblemParams::rotating_kepler(-2.0);
    for _ in 0..20 {
        let x = sample_page_point(&mut rng, &params).unwrap();
        let y = return_map_closed_form(&x, &params).unwrap();
        t.push(vec![
            "return".into(),
            format_float(y.point().xi[1]),
            format_float(y.point().eta[2]),
        ]);
    }
    for _ in 0..50 {
        let (cx, w) = random_filtered_complex(&mut rng, 30);
        let run = run_to_einfty(&cx, &w).unwrap();
        let dims: usize = run.einfty_dims.values().sum();
        t.push(vec!["specseq".into(), format_float(dims as f64), format_float(cx.len() as f64)]);
    }
    for _ in 0..10 {
        let h = random_convex_profile(&mut rng);
        let a = collar_action(&h, 1.3);
        t.push(vec!["collar".into(), format_float(a), format_float(h.h(1.3))]);
    }
    for i in 0..10 {
        let path = random_path(&mut rng, 1 + i % 3, 40);
        let mu = rs_index(&path, IndexMode::Graph).unwrap();
        t.push(vec!["index".into(), format_float(mu), format_float(path.duration())]);
    }
    checksum_hex(t.to_csv().as_bytes())
}

/// 10: the same seed reproduces the identical output checksum.
fn determinism(seed: u64) -> (bool, String) {
    let a = determinism_digest(seed);
    let b = determinism_digest(seed);
    let c = determinism_digest(seed.wrapping_add(1));
    (
        a == b && a != c,
        format!("digest {} repeats; seed + 1 differs: {}", &a[..16], a != c),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(matches!(run_criterion(11, 0), Err(CoreError::Domain(_))));
        assert!(matches!(run_criterion(0, 0), Err(CoreError::Domain(_))));
    }

    #[test]
    fn determinism_digest_is_seed_stable() {
        assert_eq!(determinism_digest(5), determinism_digest(5));
        assert_ne!(determinism_digest(5), determinism_digest(6));
    }
}
