//! Indices of symplectic paths: Robbin-Salamon crossing sums in graph
//! and Lagrangian mode, the mean index as a winding number, the
//! linearized regularized flow in a transported Darboux frame, and the
//! lower-envelope index-growth fit.
//!
//! Coordinates are split in blocks `z = (x_1..x_n, y_1..y_n)`, with
//! `J0 (x, y) = (-y, x)` and `omega(u, v) = <J0 u, v>`. Half-integers
//! are carried as doubled integers and never rounded.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::flow::{field_jacobian, integrate, state_to_vec, vec_to_state, IntegratorConfig, Trajectory};
use crate::kepler_core::{ProblemParams, SphereCotangentPoint};

pub const SYMPLECTICITY_BOUND: f64 = 1e-6;

/// `J0` in the block convention.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

fn omega(j: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (j * u).dot(v)
}

/// Sampled path in Sp(2n) from the identity, tagged with the
/// trivialization it is written in.
#[derive(Debug, Clone)]
pub struct SymplecticPath {
    pub samples: Vec<(f64, DMatrix<f64>)>,
    pub n: usize,
    pub frame: String,
}

impl SymplecticPath {
    pub fn new(samples: Vec<(f64, DMatrix<f64>)>, frame: impl Into<String>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CoreError::Domain("a path needs at least two samples".into()));
        }
        let dim = samples[0].1.nrows();
        if !dim.is_multiple_of(2) || samples.iter().any(|(_, m)| m.nrows() != dim || m.ncols() != dim) {
            return Err(CoreError::Domain("path matrices must share an even dimension".into()));
        }
        let n = dim / 2;
        let start_gap = (&samples[0].1 - DMatrix::<f64>::identity(dim, dim)).norm();
        if start_gap > 1e-9 {
            return Err(CoreError::Domain(format!(
                "path must start at the identity (gap {start_gap:.3e})"
            )));
        }
        let j = standard_j(n);
        let mut drift = 0.0f64;
        for (_, m) in &samples {
            drift = drift.max((m.transpose() * &j * m - &j).norm());
        }
        if drift > SYMPLECTICITY_BOUND {
            return Err(CoreError::SymplecticityDrift { drift, bound: SYMPLECTICITY_BOUND });
        }
        Ok(Self { samples, n, frame: frame.into() })
    }

    pub fn end(&self) -> &DMatrix<f64> {
        &self.samples.last().unwrap().1
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().0 - self.samples[0].0
    }

    /// Pointwise product with another path on the same sample grid.
    pub fn pointwise_product(&self, other: &Self) -> Result<Self> {
        if self.samples.len() != other.samples.len() || self.n != other.n {
            return Err(CoreError::Domain("paths must share grid and dimension".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|((t, a), (_, b))| (*t, a * b))
            .collect();
        Self::new(samples, format!("{}*{}", self.frame, other.frame))
    }

    /// The k-fold iterate of a loop (end = identity required): the path
    /// traversed k times, re-parametrized over k-fold duration.
    pub fn iterate_loop(&self, k: usize) -> Result<Self> {
        let dim = 2 * self.n;
        if (self.end() - DMatrix::<f64>::identity(dim, dim)).norm() > 1e-8 {
            return Err(CoreError::Domain("iterate_loop requires a loop".into()));
        }
        let dur = self.duration();
        let mut samples = Vec::new();
        for lap in 0..k {
            for (idx, (t, m)) in self.samples.iter().enumerate() {
                if lap > 0 && idx == 0 {
                    continue; // junction sample already present
                }
                samples.push((lap as f64 * dur + t, m.clone()));
            }
        }
        Self::new(samples, self.frame.clone())
    }
}

/// Path of a linear Hamiltonian system: `M(t) = exp(t J0 S)` for a
/// symmetric `S`, sampled uniformly.
pub fn linear_system_path(s: &DMatrix<f64>, t_end: f64, samples: usize) -> Result<SymplecticPath> {
    let n = s.nrows() / 2;
    let a = standard_j(n) * s;
    let pts = (0..samples)
        .map(|i| {
            let t = t_end * i as f64 / (samples - 1) as f64;
            (t, (a.clone() * t).exp())
        })
        .collect();
    SymplecticPath::new(pts, "linear")
}

/// Planar rotation path `R(w t)`, `t` in `[0, 1]`.
pub fn rotation_path(w: f64, samples: usize) -> SymplecticPath {
    let s = DMatrix::<f64>::identity(2, 2) * w;
    linear_system_path(&s, 1.0, samples).unwrap()
}

// ----- Robbin-Salamon index -----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMode {
    /// Crossings of the graph of `M(t)` with the diagonal.
    Graph,
    /// Crossings of `M(t) L` with `L`, `L` the horizontal Lagrangian
    /// `{y = 0}`.
    Lagrangian,
}

const KERNEL_TOL: f64 = 1e-5;
const CROSSING_TOL: f64 = 1e-6;
const FORM_REGULARITY_TOL: f64 = 1e-7;

/// Gap function whose zeros are the crossings: smallest singular value
/// of `M - I` (graph) or of the lower-left block of `M` (Lagrangian).
fn crossing_gap(m: &DMatrix<f64>, n: usize, mode: IndexMode) -> f64 {
    let probe = match mode {
        IndexMode::Graph => m - DMatrix::<f64>::identity(2 * n, 2 * n),
        IndexMode::Lagrangian => m.view((n, 0), (n, n)).into_owned(),
    };
    probe.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Kernel directions at a crossing, as vectors of the full 2n-space:
/// graph mode `ker(M - I)`; Lagrangian mode `M (x, 0)` for `x` in the
/// kernel of the lower-left block.
fn crossing_kernel(m: &DMatrix<f64>, n: usize, mode: IndexMode, tol: f64) -> Vec<DVector<f64>> {
    match mode {
        IndexMode::Graph => {
            let probe = m - DMatrix::<f64>::identity(2 * n, 2 * n);
            let svd = probe.svd(false, true);
            let vt = svd.v_t.unwrap();
            svd.singular_values
                .iter()
                .enumerate()
                .filter(|(_, s)| **s < tol)
                .map(|(i, _)| vt.row(i).transpose())
                .collect()
        }
        IndexMode::Lagrangian => {
            let block = m.view((n, 0), (n, n)).into_owned();
            let svd = block.svd(false, true);
            let vt = svd.v_t.unwrap();
            svd.singular_values
                .iter()
                .enumerate()
                .filter(|(_, s)| **s < tol)
                .map(|(i, _)| {
                    let x = vt.row(i).transpose();
                    let mut full = DVector::zeros(2 * n);
                    for k in 0..n {
                        full[k] = x[k];
                    }
                    m * full
                })
                .collect()
        }
    }
}

/// Signature of the crossing form on the kernel directions:
/// `Q(v) = omega(v, Mdot M^{-1} v)`. Errors when the form is singular
/// (a non-regular crossing).
fn crossing_signature(
    kernel: &[DVector<f64>],
    mdot: &DMatrix<f64>,
    m: &DMatrix<f64>,
    j: &DMatrix<f64>,
    t: f64,
) -> Result<i64> {
    let s = mdot * m.clone().try_inverse().ok_or(CoreError::Domain(format!(
        "path matrix not invertible at t = {t}"
    )))?;
    let k = kernel.len();
    let mut q = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let val = 0.5
                * (omega(j, &kernel[a], &(&s * &kernel[b]))
                    + omega(j, &kernel[b], &(&s * &kernel[a])));
            q[(a, b)] = val;
        }
    }
    // an identically vanishing form (a frozen stretch of the path)
    // contributes nothing
    if q.norm() < 1e-12 * (1.0 + s.norm()) {
        return Ok(0);
    }
    let eigs = q.symmetric_eigenvalues();
    let scale = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1.0);
    let mut sig = 0i64;
    for e in eigs.iter() {
        if e.abs() < FORM_REGULARITY_TOL * scale {
            return Err(CoreError::NonRegularCrossing { t, retries: 0 });
        }
        sig += if *e > 0.0 { 1 } else { -1 };
    }
    Ok(sig)
}

fn sample_derivative(samples: &[(f64, DMatrix<f64>)], i: usize) -> DMatrix<f64> {
    let last = samples.len() - 1;
    let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
    let dt = samples[hi].0 - samples[lo].0;
    (&samples[hi].1 - &samples[lo].1) / dt
}

/// Locates the minimum of the gap on `[samples[i-1], samples[i+1]]` by
/// golden-section search on linear matrix interpolation. Returns the
/// refined time, interpolated matrix, and gap value.
fn refine_crossing(
    samples: &[(f64, DMatrix<f64>)],
    n: usize,
    i: usize,
    mode: IndexMode,
) -> (f64, DMatrix<f64>, f64) {
    let last = samples.len() - 1;
    let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
    let (t0, m0) = (&samples[lo].0, &samples[lo].1);
    let (t1, m1) = (&samples[hi].0, &samples[hi].1);
    let at = |u: f64| -> DMatrix<f64> { m0 * (1.0 - u) + m1 * u };
    let g = |u: f64| crossing_gap(&at(u), n, mode);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    let u = 0.5 * (a + b);
    (t0 + u * (t1 - t0), at(u), g(u))
}

/// Crossing-sum core over a raw sample segment (no identity-start
/// requirement, so concatenation pieces can be indexed too).
fn rs_doubled_over(samples: &[(f64, DMatrix<f64>)], n: usize, mode: IndexMode) -> Result<i64> {
    let j = standard_j(n);
    let last = samples.len() - 1;
    let gaps: Vec<f64> = samples.iter().map(|(_, m)| crossing_gap(m, n, mode)).collect();
    let scale = samples.iter().map(|(_, m)| m.norm()).fold(1.0f64, f64::max);

    // candidate crossings: endpoint samples with small gap, and interior
    // local minima of the gap
    let mut total_doubled = 0i64;
    let mut i = 0usize;
    let mut handled_until = -1isize;
    while i <= last {
        let is_endpoint = i == 0 || i == last;
        let local_min = if is_endpoint {
            gaps[i] < CROSSING_TOL * scale
        } else {
            gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1]
        };
        if !local_min || (i as isize) <= handled_until {
            i += 1;
            continue;
        }
        // linear matrix interpolation has a floor quadratic in the gap
        // slopes; a transversal crossing refines well below the product
        // of the neighboring gaps
        let accept_tol = if is_endpoint {
            CROSSING_TOL * scale
        } else {
            (CROSSING_TOL * scale).max(gaps[i - 1] * gaps[i + 1] / scale)
        };
        let (t, m, refined_gap) = if is_endpoint {
            (samples[i].0, samples[i].1.clone(), gaps[i])
        } else {
            refine_crossing(samples, n, i, mode)
        };
        if refined_gap < accept_tol {
            // a crossing; evaluate its form with jitter retries
            let ktol = KERNEL_TOL.max(10.0 * refined_gap);
            let mut result = None;
            for attempt in 0..3 {
                let probe_idx = (i + attempt).min(last);
                let mdot = sample_derivative(samples, probe_idx);
                let kernel = crossing_kernel(&m, n, mode, ktol);
                if kernel.is_empty() {
                    break; // numerical near-miss; not a crossing after all
                }
                match crossing_signature(&kernel, &mdot, &m, &j, t) {
                    Ok(sig) => {
                        result = Some(sig);
                        break;
                    }
                    Err(_) if attempt < 2 => continue,
                    Err(_) => {
                        return Err(CoreError::NonRegularCrossing { t, retries: 3 })
                    }
                }
            }
            if let Some(sig) = result {
                total_doubled += if is_endpoint { sig } else { 2 * sig };
            }
            // skip the plateau of samples belonging to this crossing
            let mut k = i + 1;
            while k < last && gaps[k] < CROSSING_TOL * scale {
                k += 1;
            }
            handled_until = k as isize - 1;
        }
        i += 1;
    }
    Ok(total_doubled)
}

/// Robbin-Salamon index of the path: crossing-form signatures summed
/// over regular crossings, endpoints half-weighted. Returned as a
/// DOUBLED integer, so `mu_RS = result / 2` exactly.
pub fn rs_index_doubled(path: &SymplecticPath, mode: IndexMode) -> Result<i64> {
    rs_doubled_over(&path.samples, path.n, mode)
}

pub fn rs_index(path: &SymplecticPath, mode: IndexMode) -> Result<f64> {
    Ok(rs_index_doubled(path, mode)? as f64 / 2.0)
}

// ----- mean index -----

/// The circle-valued spectral invariant whose winding is the mean
/// index: negative real eigenvalue pairs contribute a sign, elliptic
/// eigenvalues contribute their angle weighted by Krein signature.
pub fn spectral_rho(m: &DMatrix<f64>) -> Complex64 {
    let dim = m.nrows();
    let j = standard_j(dim / 2);
    let eigs = m.complex_eigenvalues();
    // cluster the eigenvalues
    let mut remaining: Vec<Complex64> = eigs.iter().cloned().collect();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut negative_real = 0usize;
    while let Some(seed) = remaining.pop() {
        let mut cluster = vec![seed];
        remaining.retain(|e| {
            if (e - seed).norm() < 1e-6 {
                cluster.push(*e);
                false
            } else {
                true
            }
        });
        let lam = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        let on_circle = (lam.norm() - 1.0).abs() < 1e-6;
        if lam.im.abs() < 1e-9 && lam.re < 0.0 {
            // negative real eigenvalues, -1 included: a pair flips the sign
            negative_real += cluster.len();
        } else if on_circle && lam.im > 1e-9 {
            let unit = lam / lam.norm();
            let krein = krein_signature(m, &j, lam, cluster.len());
            rho *= unit.powi(krein as i32);
        }
    }
    if negative_real % 4 >= 2 {
        rho = -rho;
    }
    rho
}

/// Difference k+ - k- of the Krein form `-i x^H J0 x` on the eigenspace
/// of `lam` (computed by subspace inverse iteration).
fn krein_signature(m: &DMatrix<f64>, j: &DMatrix<f64>, lam: Complex64, mult: usize) -> i64 {
    let dim = m.nrows();
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let shift = lam + Complex64::new(3.7e-9, 1.3e-9); // regularizing offset
    let shifted = &mc - DMatrix::<Complex64>::identity(dim, dim) * shift;
    let lu = shifted.lu();
    // deterministic pseudo-random start basis
    let mut basis: Vec<DVector<Complex64>> = (0..mult)
        .map(|k| {
            DVector::from_fn(dim, |i, _| {
                let s = ((i * 31 + k * 17 + 7) % 97) as f64 / 97.0 - 0.5;
                Complex64::new(s, ((i * 13 + k * 41 + 3) % 89) as f64 / 89.0 - 0.5)
            })
        })
        .collect();
    for _ in 0..4 {
        for v in basis.iter_mut() {
            if let Some(sol) = lu.solve(v) {
                *v = sol;
            }
            let n = v.norm();
            if n > 0.0 {
                *v /= Complex64::new(n, 0.0);
            }
        }
        // Gram-Schmidt to keep the subspace full-dimensional
        for a in 0..basis.len() {
            for b in 0..a {
                let proj = basis[b].dotc(&basis[a]);
                let prev = basis[b].clone();
                basis[a] -= prev * proj;
            }
            let n = basis[a].norm();
            if n > 1e-12 {
                basis[a] /= Complex64::new(n, 0.0);
            }
        }
    }
    let jc = j.map(|x| Complex64::new(x, 0.0));
    let k = basis.len();
    let mut form = DMatrix::<Complex64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            form[(a, b)] = -Complex64::i() * basis[a].dotc(&(&jc * &basis[b]));
        }
    }
    let herm = form.map(|x| x.re); // Hermitian with our symmetrization
    let eigs = (0.5 * (&herm + herm.transpose())).symmetric_eigenvalues();
    let mut sig = 0i64;
    for e in eigs.iter() {
        if *e > 1e-9 {
            sig += 1;
        } else if *e < -1e-9 {
            sig -= 1;
        }
    }
    sig
}

/// Mean index: winding of the spectral invariant along the path,
/// divided by pi. Requires sampling dense enough that consecutive
/// arguments move by less than pi/2.
pub fn mean_index(path: &SymplecticPath) -> Result<f64> {
    let mut total = 0.0;
    let mut prev = spectral_rho(&path.samples[0].1);
    for (_, m) in path.samples.iter().skip(1) {
        let cur = spectral_rho(m);
        let step = (cur / prev).arg();
        if step.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(CoreError::Domain(format!(
                "spectral winding jumps by {step:.3} between samples; refine the path"
            )));
        }
        total += step;
        prev = cur;
    }
    Ok(total / std::f64::consts::PI)
}

// ----- report -----

/// Index data of one path. Half-integers are doubled; `mu_cz` follows
/// the Lagrangian-mode grading `mu_cz = mu_rs - n/2`.
#[derive(Debug, Clone)]
pub struct IndexReport {
    pub mu_rs_doubled: i64,
    pub mu_cz_doubled: i64,
    pub delta: f64,
    pub n: usize,
    pub frame: String,
}

impl IndexReport {
    pub fn mu_rs(&self) -> f64 {
        self.mu_rs_doubled as f64 / 2.0
    }

    pub fn mu_cz(&self) -> f64 {
        self.mu_cz_doubled as f64 / 2.0
    }
}

pub fn index_report(path: &SymplecticPath) -> Result<IndexReport> {
    let mu_rs_doubled = rs_index_doubled(path, IndexMode::Lagrangian)?;
    let delta = mean_index(path)?;
    Ok(IndexReport {
        mu_rs_doubled,
        mu_cz_doubled: mu_rs_doubled - path.n as i64,
        delta,
        n: path.n,
        frame: path.frame.clone(),
    })
}

// ----- linearization of the regularized flow -----

/// Darboux frame of the constrained tangent space at a point: columns
/// `e_1 e_2 e_3 f_1 f_2 f_3` of an 8x6 matrix with `omega(e_i, f_i) = 1`
/// and all other pairings zero. `omega` is the ambient form of
/// `(xi, eta)` in the block convention of `standard_j(4)`.
fn ambient_omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        acc += u[i] * v[4 + i] - v[i] * u[4 + i];
    }
    acc
}

/// Symplectic projection onto the tangent space of `T^* S^3`, along its
/// omega-complement spanned by `(0, xi)` and `(xi, -eta)`.
fn project_tangent(s: &SphereCotangentPoint, v: &DVector<f64>) -> DVector<f64> {
    let mut w1 = DVector::zeros(8);
    let mut w2 = DVector::zeros(8);
    for i in 0..4 {
        w1[4 + i] = s.xi[i];
        w2[i] = s.xi[i];
        w2[4 + i] = -s.eta[i];
    }
    // omega(w1, w2) = -1
    let beta = ambient_omega(v, &w1);
    let alpha = -ambient_omega(v, &w2);
    v - w1 * alpha - w2 * beta
}

/// Re-orthonormalizes (symplectically) a projected frame, pair by pair.
fn symplectic_gram_schmidt(cols: &mut [DVector<f64>]) -> Result<()> {
    let pairs = cols.len() / 2;
    for i in 0..pairs {
        for j in 0..i {
            let (ej, fj) = (cols[j].clone(), cols[pairs + j].clone());
            for k in [i, pairs + i] {
                let a = ambient_omega(&cols[k], &fj);
                let b = ambient_omega(&cols[k], &ej);
                cols[k] = &cols[k] - &ej * a + &fj * b;
            }
        }
        let ni = cols[i].norm();
        if ni < 1e-10 {
            return Err(CoreError::Domain("degenerate frame direction".into()));
        }
        cols[i] /= ni;
        let s = ambient_omega(&cols[i], &cols[pairs + i]);
        if s.abs() < 1e-10 {
            return Err(CoreError::Domain("frame pair lost its symplectic pairing".into()));
        }
        let fi = cols[pairs + i].clone();
        cols[pairs + i] = fi / s;
    }
    Ok(())
}

fn initial_frame(s: &SphereCotangentPoint) -> Result<Vec<DVector<f64>>> {
    // project the ambient basis, keep six independent directions in
    // (e, e, e, f, f, f) order seeded greedily
    let mut candidates: Vec<DVector<f64>> = (0..8)
        .map(|i| {
            let mut v = DVector::zeros(8);
            v[i] = 1.0;
            project_tangent(s, &v)
        })
        .collect();
    // pick three independent "e" directions and their omega-partners
    let mut es: Vec<DVector<f64>> = Vec::new();
    let mut fs: Vec<DVector<f64>> = Vec::new();
    while es.len() < 3 {
        // take the candidate most independent from the span so far
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            let mut r = c.clone();
            for e in es.iter().chain(fs.iter()) {
                let coef = e.dot(&r) / e.dot(e).max(1e-300);
                r -= e * coef;
            }
            let score = r.norm();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (idx, _) = best.unwrap();
        let e = candidates.remove(idx);
        // partner: candidate with the largest pairing omega(e, .)
        let (pidx, _) = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, ambient_omega(&e, c).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(CoreError::Domain("frame construction exhausted".into()))?;
        let f = candidates.remove(pidx);
        es.push(e);
        fs.push(f);
    }
    let mut cols: Vec<DVector<f64>> = es.into_iter().chain(fs).collect();
    symplectic_gram_schmidt(&mut cols)?;
    Ok(cols)
}

/// Transports the previous frame to a new point: symplectic projection
/// onto the new tangent space, then re-normalization. Small steps keep
/// this continuous.
fn transport_frame(
    prev: &[DVector<f64>],
    s: &SphereCotangentPoint,
) -> Result<Vec<DVector<f64>>> {
    let mut cols: Vec<DVector<f64>> = prev.iter().map(|v| project_tangent(s, v)).collect();
    symplectic_gram_schmidt(&mut cols)?;
    Ok(cols)
}

/// Coordinates of a tangent vector in a Darboux frame:
/// `x_j = omega(v, f_j)`, `y_j = -omega(v, e_j)`.
fn frame_coordinates(frame: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(6);
    for jj in 0..3 {
        out[jj] = ambient_omega(v, &frame[3 + jj]);
        out[3 + jj] = -ambient_omega(v, &frame[jj]);
    }
    out
}

/// Integrates the variational equation `Ydot = DX(x(t)) Y` along the
/// trajectory and expresses the differential of the flow in transported
/// Darboux frames of the constrained tangent spaces: a path in Sp(6).
pub fn linearize_along(traj: &Trajectory, params: &ProblemParams) -> Result<SymplecticPath> {
    if traj.samples.len() < 2 {
        return Err(CoreError::Domain("trajectory too short to linearize".into()));
    }
    let frame0 = initial_frame(&traj.samples[0].1)?;
    let mut frame = frame0.clone();
    // Y columns: images of the initial frame under the linearized flow
    let mut y: Vec<DVector<f64>> = frame0.clone();
    let mut samples = Vec::with_capacity(traj.samples.len());
    samples.push((traj.samples[0].0, DMatrix::<f64>::identity(6, 6)));
    for w in traj.samples.windows(2) {
        let (t0, s0) = (w[0].0, w[0].1);
        let (t1, s1) = (w[1].0, w[1].1);
        let h_total = t1 - t0;
        // joint RK4 substeps for the state and the variational columns
        let nsub = 4usize;
        let h = h_total / nsub as f64;
        let mut state = state_to_vec(&s0);
        for _ in 0..nsub {
            let f = |x: &nalgebra::SVector<f64, 8>| {
                let st = vec_to_state(x);
                crate::flow::vector_field(&st, params)
            };
            let jac = |x: &nalgebra::SVector<f64, 8>| field_jacobian(x, params);
            let k1 = f(&state);
            let a1 = jac(&state);
            let x2 = state + 0.5 * h * k1;
            let k2 = f(&x2);
            let a2 = jac(&x2);
            let x3 = state + 0.5 * h * k2;
            let k3 = f(&x3);
            let a3 = jac(&x3);
            let x4 = state + h * k3;
            let k4 = f(&x4);
            let a4 = jac(&x4);
            for col in y.iter_mut() {
                let c1 = a1 * &*col;
                let c2 = a2 * (&*col + c1 * (0.5 * h));
                let c3 = a3 * (&*col + c2 * (0.5 * h));
                let c4 = a4 * (&*col + c3 * h);
                *col += (c1 + c2 * 2.0 + c3 * 2.0 + c4) * (h / 6.0);
            }
            state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        // re-anchor on the stored trajectory sample and its tangent space
        for col in y.iter_mut() {
            *col = project_tangent(&s1, col);
        }
        frame = transport_frame(&frame, &s1)?;
        let mut m = DMatrix::<f64>::zeros(6, 6);
        for (jj, col) in y.iter().enumerate() {
            m.set_column(jj, &frame_coordinates(&frame, col));
        }
        samples.push((t1, m));
    }
    SymplecticPath::new(samples, "ambient-transport")
}

/// Largest column-wise gap between the linearized monodromy and a
/// central finite-difference probe along the same trajectory.
#[allow(clippy::needless_range_loop)]
pub fn monodromy_fd_gap(traj: &Trajectory, params: &ProblemParams, h: f64) -> Result<f64> {
    let path = linearize_along(traj, params)?;
    let m = path.end().clone();
    let start = traj.samples[0].1;
    let frame0 = initial_frame(&start)?;
    let mut frame1 = frame0.clone();
    for w in traj.samples.windows(2) {
        frame1 = transport_frame(&frame1, &w[1].1)?;
    }
    let cfg = IntegratorConfig::with_horizon(traj.duration());
    let mut worst = 0.0f64;
    for col in 0..2 * path.n {
        let mut ends = Vec::new();
        for sign in [1.0, -1.0] {
            let mut pert_vec = state_to_vec(&start);
            for i in 0..8 {
                pert_vec[i] += sign * h * frame0[col][i];
            }
            let mut pert = vec_to_state(&pert_vec);
            pert.project();
            let traj_p = integrate(&pert, params, &cfg)?;
            ends.push(state_to_vec(traj_p.end()));
        }
        let d_end = ends[0] - ends[1];
        let mut dv = DVector::zeros(8);
        for i in 0..8 {
            dv[i] = d_end[i] / (2.0 * h);
        }
        let dv = project_tangent(traj.end(), &dv);
        worst = worst.max((frame_coordinates(&frame1, &dv) - m.column(col)).norm());
    }
    Ok(worst)
}

// ----- definiteness fit -----

#[derive(Debug, Clone)]
pub struct DefinitenessFit {
    /// lower-envelope slope
    pub c: f64,
    /// lower-envelope offset
    pub d: f64,
    /// least-squares residuals per arc
    pub residuals: Vec<f64>,
    /// margin = slope / standard error; certification needs margin > 2
    pub margin: f64,
    pub certified: bool,
}

/// Fits `|mu| >= c T + d` to sampled arcs: least squares through
/// `(T_i, |mu_i|)` for the slope, then the offset dropped onto the
/// lower envelope.
pub fn definiteness_fit(arcs: &[(f64, f64)]) -> Result<DefinitenessFit> {
    if arcs.len() < 10 {
        return Err(CoreError::InsufficientData { need: 10, got: arcs.len() });
    }
    let n = arcs.len() as f64;
    let (mut st, mut sm, mut stt, mut stm) = (0.0, 0.0, 0.0, 0.0);
    for (t, mu) in arcs {
        let a = mu.abs();
        st += t;
        sm += a;
        stt += t * t;
        stm += t * a;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-12 {
        return Err(CoreError::Domain("arc lengths carry no spread".into()));
    }
    let c = (n * stm - st * sm) / denom;
    let d_ls = (sm - c * st) / n;
    let residuals: Vec<f64> = arcs.iter().map(|(t, mu)| mu.abs() - (c * t + d_ls)).collect();
    let dof = (arcs.len() - 2).max(1) as f64;
    let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / dof;
    let se = (s2 * n / denom).sqrt();
    let margin = if se > 0.0 { c / se } else { f64::INFINITY };
    let d = arcs
        .iter()
        .map(|(t, mu)| mu.abs() - c * t)
        .fold(f64::INFINITY, f64::min);
    Ok(DefinitenessFit { c, d, residuals, margin, certified: c > 0.0 && margin > 2.0 })
}

/// Random nondegenerate linear-system path for statistical tests:
/// `exp(t J0 S)` with a random symmetric `S`, resampled until both the
/// endpoint and the Lagrangian crossing structure are clean.
pub fn random_path(rng: &mut impl Rng, n: usize, samples: usize) -> SymplecticPath {
    loop {
        let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for jj in 0..=i {
                let v = rng.gen_range(-2.0..2.0);
                s[(i, jj)] = v;
                s[(jj, i)] = v;
            }
        }
        let Ok(path) = linear_system_path(&s, 1.0, samples) else { continue };
        let end_gap = crossing_gap(path.end(), n, IndexMode::Graph);
        if end_gap < 1e-3 {
            continue;
        }
        if rs_index_doubled(&path, IndexMode::Lagrangian).is_ok()
            && rs_index_doubled(&path, IndexMode::Graph).is_ok()
        {
            return path;
        }
    }
}
