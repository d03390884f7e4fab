//! Spectral sequence of an action-filtered cochain complex over Z/2.
//!
//! Generators carry an integer degree and a real action. The
//! differential raises degree by one and strictly decreases action, so
//! clustering the actions into disjoint windows filters the complex by
//! "action below the p-th window boundary" and the associated spectral
//! sequence runs from per-window cohomology to the total cohomology.
//!
//! Columns follow the interleaved-boundary convention: the window
//! around the k-th action value is the even column `p = 2k`, the gaps
//! are the odd columns. With `q = degree - p` the page-r differential
//! has bidegree `(-r, r+1)`.

use std::collections::HashMap;

use crate::error::{CoreError, Result};

// ----- Z/2 linear algebra on bit-block vectors -----

type F2Vec = Vec<u64>;

fn f2_zero(n: usize) -> F2Vec {
    vec![0u64; n.div_ceil(64)]
}

fn f2_get(v: &F2Vec, i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn f2_set(v: &mut F2Vec, i: usize) {
    v[i / 64] ^= 1 << (i % 64);
}

fn f2_xor(a: &mut F2Vec, b: &F2Vec) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= *y;
    }
}

fn f2_is_zero(v: &F2Vec) -> bool {
    v.iter().all(|&x| x == 0)
}

fn leading_bit(v: &F2Vec) -> Option<usize> {
    for (blk, &w) in v.iter().enumerate() {
        if w != 0 {
            return Some(blk * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

/// Row space in reduced echelon form; supports residual reduction and
/// incremental insertion.
#[derive(Debug, Clone, Default)]
struct F2Span {
    basis: Vec<(usize, F2Vec)>, // (pivot, vector), pivots strictly increasing
}

impl F2Span {
    fn reduce(&self, v: &F2Vec) -> F2Vec {
        let mut v = v.clone();
        for (pivot, b) in &self.basis {
            if f2_get(&v, *pivot) {
                f2_xor(&mut v, b);
            }
        }
        v
    }

    /// Inserts `v` if independent; returns whether the span grew.
    fn insert(&mut self, v: &F2Vec) -> bool {
        let r = self.reduce(v);
        match leading_bit(&r) {
            None => false,
            Some(p) => {
                let pos = self.basis.partition_point(|(q, _)| *q < p);
                self.basis.insert(pos, (p, r));
                // keep the form reduced above the new pivot
                for i in 0..pos {
                    if f2_get(&self.basis[i].1.clone(), p) {
                        let newer = self.basis[pos].1.clone();
                        f2_xor(&mut self.basis[i].1, &newer);
                    }
                }
                true
            }
        }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }
}

// ----- the filtered complex -----

#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub degree: i32,
    pub action: f64,
}

/// Finite Z/2 cochain complex with an action-decreasing, degree-raising
/// differential. `d^2 = 0` and both monotonicity constraints are
/// validated on construction.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    pub generators: Vec<Generator>,
    /// edges (from, to): `d(gen[from])` contains `gen[to]`
    edges: Vec<(usize, usize)>,
    /// d as rows: row[i] = d(gen[i]) as a bit vector over generators
    rows: Vec<F2Vec>,
}

impl FilteredComplex {
    pub fn new(generators: Vec<Generator>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = generators.len();
        let mut seen = std::collections::HashSet::new();
        for g in &generators {
            if !seen.insert(g.id.clone()) {
                return Err(CoreError::InvalidComplex(format!("duplicate generator id {}", g.id)));
            }
            if !g.action.is_finite() {
                return Err(CoreError::InvalidComplex(format!("non-finite action on {}", g.id)));
            }
        }
        let mut rows = vec![f2_zero(n); n];
        for &(from, to) in &edges {
            if from >= n || to >= n {
                return Err(CoreError::InvalidComplex(format!(
                    "differential entry ({from}, {to}) out of range"
                )));
            }
            let (gf, gt) = (&generators[from], &generators[to]);
            if gt.degree != gf.degree + 1 {
                return Err(CoreError::InvalidComplex(format!(
                    "entry {} -> {} raises degree by {}, not 1",
                    gf.id,
                    gt.id,
                    gt.degree - gf.degree
                )));
            }
            if gt.action >= gf.action {
                return Err(CoreError::InvalidComplex(format!(
                    "entry {} -> {} does not decrease action ({} -> {})",
                    gf.id, gt.id, gf.action, gt.action
                )));
            }
            f2_set(&mut rows[from], to);
        }
        // d^2 = 0
        for i in 0..n {
            let mut dd = f2_zero(n);
            for j in 0..n {
                if f2_get(&rows[i], j) {
                    f2_xor(&mut dd, &rows[j]);
                }
            }
            if !f2_is_zero(&dd) {
                return Err(CoreError::InvalidComplex(format!(
                    "d^2(gen {}) is nonzero",
                    generators[i].id
                )));
            }
        }
        Ok(Self { generators, edges, rows })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn apply_d(&self, v: &F2Vec) -> F2Vec {
        let mut out = f2_zero(self.len());
        for i in 0..self.len() {
            if f2_get(v, i) {
                f2_xor(&mut out, &self.rows[i]);
            }
        }
        out
    }

    /// Graded dimensions of the total cohomology, by direct elimination:
    /// `dim H^k = dim ker(d|_k) - rank(d into degree k)`.
    pub fn cohomology(&self) -> HashMap<i32, usize> {
        let mut by_degree: HashMap<i32, Vec<usize>> = HashMap::new();
        for (i, g) in self.generators.iter().enumerate() {
            by_degree.entry(g.degree).or_default().push(i);
        }
        let mut out = HashMap::new();
        for (&deg, idxs) in &by_degree {
            let mut image = F2Span::default(); // rank of d out of degree deg
            for &i in idxs {
                if !f2_is_zero(&self.rows[i]) {
                    image.insert(&self.rows[i].clone());
                }
            }
            let kernel = idxs.len() - image.dim();
            let mut into = F2Span::default(); // rank of d from degree deg - 1
            if let Some(prev) = by_degree.get(&(deg - 1)) {
                for &i in prev {
                    if !f2_is_zero(&self.rows[i]) {
                        into.insert(&self.rows[i].clone());
                    }
                }
            }
            let h = kernel - into.dim();
            if h > 0 {
                out.insert(deg, h);
            }
        }
        out
    }
}

// ----- windows -----

/// Interleaved window boundaries `a_0 < a_1 < ... < a_{2K-1}`: the k-th
/// window is `[a_{2k}, a_{2k+1}] = A_k -/+ half the width`.
#[derive(Debug, Clone)]
pub struct ActionWindows {
    pub boundaries: Vec<f64>,
}

pub fn build_windows(actions: &[f64], widths: &[f64]) -> Result<ActionWindows> {
    if actions.len() != widths.len() {
        return Err(CoreError::Parse(format!(
            "{} action values but {} widths",
            actions.len(),
            widths.len()
        )));
    }
    if actions.is_empty() {
        return Err(CoreError::Parse("no action windows".into()));
    }
    for (k, w) in actions.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(CoreError::Parse(format!(
                "action values must ascend strictly; A_{k} = {} >= A_{} = {}",
                w[0],
                k + 1,
                w[1]
            )));
        }
    }
    if let Some((k, w)) = widths.iter().enumerate().find(|(_, w)| **w <= 0.0) {
        return Err(CoreError::Parse(format!("window width {w} at index {k} must be positive")));
    }
    let mut boundaries = Vec::with_capacity(2 * actions.len());
    for (a, w) in actions.iter().zip(widths) {
        boundaries.push(a - 0.5 * w);
        boundaries.push(a + 0.5 * w);
    }
    for k in 0..actions.len() - 1 {
        if boundaries[2 * k + 1] >= boundaries[2 * k + 2] {
            return Err(CoreError::WindowOverlap { first: k, second: k + 1 });
        }
    }
    Ok(ActionWindows { boundaries })
}

impl ActionWindows {
    pub fn window_count(&self) -> usize {
        self.boundaries.len() / 2
    }

    /// Number of columns, including the final open one above the last
    /// boundary.
    pub fn column_count(&self) -> usize {
        self.boundaries.len()
    }

    /// Column of an action value: the largest `p` with `a_p < A`
    /// (column 0 extends below `a_0`). Even columns are the windows.
    pub fn column(&self, action: f64) -> usize {
        self.boundaries.partition_point(|a| *a < action).saturating_sub(1)
    }

    /// Checks that the action sits inside the closed window of index k.
    pub fn in_window(&self, action: f64, k: usize) -> bool {
        k < self.window_count()
            && self.boundaries[2 * k] <= action
            && action <= self.boundaries[2 * k + 1]
    }

    fn covered(&self, action: f64) -> bool {
        (0..self.window_count()).any(|k| self.in_window(action, k))
    }
}

// ----- pages -----

#[derive(Debug, Clone)]
pub struct PageEntry {
    pub p: usize,
    /// complementary degree `q = degree - p`
    pub q: i32,
    pub dim: usize,
    /// representatives as generator-index sets
    pub representatives: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct SpectralPage {
    pub r: usize,
    pub entries: Vec<PageEntry>,
}

impl SpectralPage {
    pub fn dim(&self, p: usize, degree: i32) -> usize {
        self.entries
            .iter()
            .find(|e| e.p == p && e.q == degree - p as i32)
            .map_or(0, |e| e.dim)
    }

    /// Graded dimensions by actual degree, all columns summed.
    pub fn total_dims(&self) -> HashMap<i32, usize> {
        let mut out = HashMap::new();
        for e in &self.entries {
            if e.dim > 0 {
                *out.entry(e.q + e.p as i32).or_insert(0) += e.dim;
            }
        }
        out
    }

    /// Alternating sum of dimensions (independent of r).
    pub fn euler_characteristic(&self) -> i64 {
        self.entries
            .iter()
            .map(|e| {
                let deg = e.q + e.p as i32;
                if deg.rem_euclid(2) == 0 { e.dim as i64 } else { -(e.dim as i64) }
            })
            .sum()
    }
}

fn column_assignment(cx: &FilteredComplex, windows: &ActionWindows) -> Result<Vec<usize>> {
    let mut cols = Vec::with_capacity(cx.len());
    for g in &cx.generators {
        if !windows.covered(g.action) {
            return Err(CoreError::InvalidComplex(format!(
                "generator {} (action {}) lies outside every window",
                g.id, g.action
            )));
        }
        cols.push(windows.column(g.action));
    }
    Ok(cols)
}

/// `Z_r^{p, deg}`: cocycle candidates of column at most `p` and the
/// given degree whose differential drops to column at most `p - r`.
/// Columns below zero denote the zero subspace; `r = 0` gives the
/// filtration layer itself.
fn z_space(
    cx: &FilteredComplex,
    cols: &[usize],
    p: isize,
    r: usize,
    degree: i32,
) -> Vec<F2Vec> {
    if p < 0 {
        return Vec::new();
    }
    let n = cx.len();
    let members: Vec<usize> = (0..n)
        .filter(|&i| cols[i] as isize <= p && cx.generators[i].degree == degree)
        .collect();
    if r == 0 {
        return members
            .iter()
            .map(|&i| {
                let mut v = f2_zero(n);
                f2_set(&mut v, i);
                v
            })
            .collect();
    }
    // kernel of: x -> components of dx in columns above p - r
    let drop = p - r as isize;
    let m = n; // constraint coordinates reuse generator indexing
    let mut kernel = Vec::new();
    // incremental kernel: feed members one by one; a member whose
    // constrained image is dependent yields a kernel vector
    let mut rows: Vec<(F2Vec, F2Vec)> = Vec::new(); // (constrained image, preimage)
    for &i in &members {
        let mut img = f2_zero(m);
        #[allow(clippy::needless_range_loop)]
        for j in 0..n {
            if f2_get(&cx.rows[i], j) && cols[j] as isize > drop {
                f2_set(&mut img, j);
            }
        }
        let mut pre = f2_zero(n);
        f2_set(&mut pre, i);
        // reduce against stored rows
        for (ri, rp) in &rows {
            if let Some(lead) = leading_bit(ri) {
                if f2_get(&img, lead) {
                    f2_xor(&mut img, ri);
                    f2_xor(&mut pre, rp);
                }
            }
        }
        if f2_is_zero(&img) {
            kernel.push(pre);
        } else {
            rows.push((img, pre));
            rows.sort_by_key(|(ri, _)| leading_bit(ri));
        }
    }
    kernel
}

fn page_at(
    cx: &FilteredComplex,
    cols: &[usize],
    windows: &ActionWindows,
    r: usize,
) -> SpectralPage {
    let ncols = windows.column_count();
    let degrees: std::collections::BTreeSet<i32> =
        cx.generators.iter().map(|g| g.degree).collect();
    let mut entries = Vec::new();
    for p in 0..ncols {
        for &deg in &degrees {
            let z = z_space(cx, cols, p as isize, r, deg);
            if z.is_empty() {
                continue;
            }
            // denominator: Z_{r-1}^{p-1} + d Z_{r-1}^{p+r-1}
            let mut denom = F2Span::default();
            for v in z_space(cx, cols, p as isize - 1, r.saturating_sub(1), deg) {
                denom.insert(&v);
            }
            for v in z_space(cx, cols, p as isize + r as isize - 1, r - 1, deg - 1) {
                let dv = cx.apply_d(&v);
                if !f2_is_zero(&dv) {
                    denom.insert(&dv);
                }
            }
            let mut quot = denom.clone();
            let mut reps = Vec::new();
            for v in &z {
                if quot.insert(v) {
                    let idxs: Vec<usize> = (0..cx.len()).filter(|&i| f2_get(v, i)).collect();
                    reps.push(idxs);
                }
            }
            let dim = quot.dim() - denom.dim();
            if dim > 0 {
                entries.push(PageEntry { p, q: deg - p as i32, dim, representatives: reps });
            }
        }
    }
    SpectralPage { r, entries }
}

/// First page: per-column subquotient cohomology. Odd columns vanish
/// when every generator sits inside a window.
pub fn e1_page(cx: &FilteredComplex, windows: &ActionWindows) -> Result<SpectralPage> {
    let cols = column_assignment(cx, windows)?;
    Ok(page_at(cx, &cols, windows, 1))
}

/// Graded dimensions of the E1 column `p = 2k` (the local cohomology of
/// the k-th window).
pub fn local_window_cohomology(
    cx: &FilteredComplex,
    windows: &ActionWindows,
    k: usize,
) -> Result<HashMap<i32, usize>> {
    if k >= windows.window_count() {
        return Err(CoreError::WindowIndex { index: k });
    }
    let page = e1_page(cx, windows)?;
    let mut out = HashMap::new();
    for e in page.entries.iter().filter(|e| e.p == 2 * k) {
        out.insert(e.q + e.p as i32, e.dim);
    }
    Ok(out)
}

/// Full run: pages from E1 until stabilization, final page compared
/// against the direct-elimination cohomology of the complex.
#[derive(Debug, Clone)]
pub struct SpectralRun {
    pub pages: Vec<SpectralPage>,
    pub einfty_dims: HashMap<i32, usize>,
    pub total_cohomology: HashMap<i32, usize>,
    pub agree: bool,
}

pub fn run_to_einfty(cx: &FilteredComplex, windows: &ActionWindows) -> Result<SpectralRun> {
    let cols = column_assignment(cx, windows)?;
    let ncols = windows.column_count();
    let mut pages = vec![page_at(cx, &cols, windows, 1)];
    // differentials of page r can only drop r columns, so everything
    // stabilizes once r exceeds the column count
    for r in 2..=ncols + 1 {
        pages.push(page_at(cx, &cols, windows, r));
    }
    let last = pages.last().unwrap();
    let einfty_dims = last.total_dims();
    let total_cohomology = cx.cohomology();
    let agree = einfty_dims == total_cohomology;
    Ok(SpectralRun { pages, einfty_dims, total_cohomology, agree })
}

/// Random filtered complex for randomized validation: generators on
/// integer action clusters 0..=5, degrees 0..5, edges kept only while
/// `d^2 = 0` survives; windows of width 0.4 around the clusters.
pub fn random_filtered_complex(
    rng: &mut impl rand::Rng,
    max_gens: usize,
) -> (FilteredComplex, ActionWindows) {
    let n = rng.gen_range(1..=max_gens.max(1));
    let mut gens = Vec::new();
    for i in 0..n {
        gens.push(Generator {
            id: format!("g{i}"),
            degree: rng.gen_range(0..5),
            action: rng.gen_range(0..6) as f64,
        });
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if gens[to].degree == gens[from].degree + 1
                && gens[to].action < gens[from].action
                && rng.gen_bool(0.25)
            {
                let mut trial = edges.clone();
                trial.push((from, to));
                if FilteredComplex::new(gens.clone(), trial.clone()).is_ok() {
                    edges = trial;
                }
            }
        }
    }
    let cx = FilteredComplex::new(gens, edges).unwrap();
    let w = build_windows(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[0.4; 6]).unwrap();
    (cx, w)
}

// ----- text interchange -----

/// Parses the line-oriented complex format:
/// `generator,<id>,<degree>,<action>` and `differential,<from>,<to>`,
/// with blank lines and `#` comments ignored.
pub fn parse_complex(text: &str) -> Result<FilteredComplex> {
    let mut generators = Vec::new();
    let mut ids = HashMap::new();
    let mut raw_edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields[0] {
            "generator" if fields.len() == 4 => {
                let degree: i32 = fields[2]
                    .parse()
                    .map_err(|_| CoreError::Parse(format!("line {}: bad degree", ln + 1)))?;
                let action: f64 = fields[3]
                    .parse()
                    .map_err(|_| CoreError::Parse(format!("line {}: bad action", ln + 1)))?;
                ids.insert(fields[1].to_string(), generators.len());
                generators.push(Generator { id: fields[1].to_string(), degree, action });
            }
            "differential" if fields.len() == 3 => {
                raw_edges.push((fields[1].to_string(), fields[2].to_string(), ln + 1));
            }
            _ => {
                return Err(CoreError::Parse(format!(
                    "line {}: expected a generator or differential record",
                    ln + 1
                )))
            }
        }
    }
    let mut edges = Vec::new();
    for (from, to, ln) in raw_edges {
        let f = *ids
            .get(&from)
            .ok_or_else(|| CoreError::Parse(format!("line {ln}: unknown generator {from}")))?;
        let t = *ids
            .get(&to)
            .ok_or_else(|| CoreError::Parse(format!("line {ln}: unknown generator {to}")))?;
        edges.push((f, t));
    }
    FilteredComplex::new(generators, edges)
}

pub fn format_complex(cx: &FilteredComplex) -> String {
    let mut out = String::new();
    for g in &cx.generators {
        out.push_str(&format!("generator,{},{},{:.17e}\n", g.id, g.degree, g.action));
    }
    for &(f, t) in cx.edges() {
        out.push_str(&format!(
            "differential,{},{}\n",
            cx.generators[f].id, cx.generators[t].id
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_generator_complex() -> (FilteredComplex, ActionWindows) {
        let cx = FilteredComplex::new(
            vec![
                Generator { id: "x".into(), degree: 0, action: 1.0 },
                Generator { id: "y".into(), degree: 1, action: 0.0 },
            ],
            vec![(0, 1)],
        )
        .unwrap();
        let w = build_windows(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        (cx, w)
    }

    #[test]
    fn window_boundaries() {
        let w = build_windows(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(w.boundaries, vec![-0.25, 0.25, 0.75, 1.25]);
        let single = build_windows(&[0.0], &[1.0]).unwrap();
        assert_eq!(single.boundaries, vec![-0.5, 0.5]);
        match build_windows(&[0.0, 0.4], &[0.5, 0.5]) {
            Err(CoreError::WindowOverlap { first: 0, second: 1 }) => {}
            other => panic!("expected overlap, got {other:?}"),
        }
    }

    #[test]
    fn validation_rejects_bad_differentials() {
        let gens = vec![
            Generator { id: "a".into(), degree: 0, action: 1.0 },
            Generator { id: "b".into(), degree: 2, action: 0.0 },
        ];
        assert!(FilteredComplex::new(gens, vec![(0, 1)]).is_err()); // degree jump 2
        let gens = vec![
            Generator { id: "a".into(), degree: 0, action: 0.0 },
            Generator { id: "b".into(), degree: 1, action: 1.0 },
        ];
        assert!(FilteredComplex::new(gens, vec![(0, 1)]).is_err()); // action increases
    }

    #[test]
    fn e1_of_the_two_generator_complex() {
        let (cx, w) = two_generator_complex();
        let page = e1_page(&cx, &w).unwrap();
        // y survives in column 0 (degree 1), x in column 2 (degree 0)
        assert_eq!(page.dim(0, 1), 1);
        assert_eq!(page.dim(2, 0), 1);
        for e in &page.entries {
            assert!(e.p % 2 == 0, "odd column {} populated", e.p);
        }
        assert_eq!(page.entries.iter().map(|e| e.dim).sum::<usize>(), 2);
    }

    #[test]
    fn d2_kills_the_pair() {
        let (cx, w) = two_generator_complex();
        let run = run_to_einfty(&cx, &w).unwrap();
        assert!(run.agree);
        assert!(run.einfty_dims.is_empty());
        assert!(run.total_cohomology.is_empty());
        // the pair persists through E2 and dies turning to E3:
        // d2 has bidegree (-2, 3) and connects exactly these entries
        assert_eq!(run.pages[0].dim(2, 0), 1);
        assert_eq!(run.pages[1].dim(2, 0), 1);
        assert_eq!(run.pages[2].dim(2, 0), 0);
    }

    #[test]
    fn zero_differential_freezes_at_e1() {
        let cx = FilteredComplex::new(
            vec![
                Generator { id: "a".into(), degree: 0, action: 0.0 },
                Generator { id: "b".into(), degree: 0, action: 1.0 },
                Generator { id: "c".into(), degree: 3, action: 1.0 },
            ],
            vec![],
        )
        .unwrap();
        let w = build_windows(&[0.0, 1.0], &[0.2, 0.2]).unwrap();
        let run = run_to_einfty(&cx, &w).unwrap();
        assert!(run.agree);
        assert_eq!(run.einfty_dims[&0], 2);
        assert_eq!(run.einfty_dims[&3], 1);
        // generators sharing the window contribute a direct sum
        assert_eq!(run.pages[0].dim(2, 0), 1);
        assert_eq!(run.pages[0].dim(2, 3), 1);
    }

    #[test]
    fn cancelling_pair_inside_one_window() {
        let cx = FilteredComplex::new(
            vec![
                Generator { id: "a".into(), degree: 0, action: 0.05 },
                Generator { id: "b".into(), degree: 1, action: -0.05 },
            ],
            vec![(0, 1)],
        )
        .unwrap();
        let w = build_windows(&[0.0], &[0.2]).unwrap();
        let page = e1_page(&cx, &w).unwrap();
        assert!(page.entries.is_empty(), "{page:?}");
    }

    #[test]
    fn local_window_queries() {
        let (cx, w) = two_generator_complex();
        let h0 = local_window_cohomology(&cx, &w, 0).unwrap();
        assert_eq!(h0.get(&1), Some(&1));
        let h1 = local_window_cohomology(&cx, &w, 1).unwrap();
        assert_eq!(h1.get(&0), Some(&1));
        assert!(matches!(
            local_window_cohomology(&cx, &w, 2),
            Err(CoreError::WindowIndex { index: 2 })
        ));
        // a window holding nothing reports nothing
        let wide = build_windows(&[0.0, 0.5, 1.0], &[0.2, 0.2, 0.2]).unwrap();
        let he = local_window_cohomology(&cx, &wide, 1).unwrap();
        assert!(he.is_empty());
    }

    #[test]
    fn morse_disc_euler_characteristic() {
        // one maximum, two saddles, two minima; boundary counts mod 2
        let cx = FilteredComplex::new(
            vec![
                Generator { id: "max".into(), degree: 2, action: -1.0 },
                Generator { id: "s1".into(), degree: 1, action: 0.0 },
                Generator { id: "s2".into(), degree: 1, action: 0.1 },
                Generator { id: "m1".into(), degree: 0, action: 1.0 },
                Generator { id: "m2".into(), degree: 0, action: 1.1 },
            ],
            vec![(3, 1), (3, 2), (4, 1), (4, 2), (1, 0), (2, 0)],
        )
        .unwrap();
        let w = build_windows(&[-1.0, 0.05, 1.05], &[0.5, 0.5, 0.5]).unwrap();
        let run = run_to_einfty(&cx, &w).unwrap();
        assert!(run.agree);
        let chi: i64 = run
            .einfty_dims
            .iter()
            .map(|(d, n)| if d.rem_euclid(2) == 0 { *n as i64 } else { -(*n as i64) })
            .sum();
        assert_eq!(chi, 1);
        // whole Morse complex in one window: local cohomology keeps chi = 1
        let one = build_windows(&[0.0], &[5.0]).unwrap();
        let local = local_window_cohomology(&cx, &one, 0).unwrap();
        let chi_local: i64 = local
            .iter()
            .map(|(d, n)| if d.rem_euclid(2) == 0 { *n as i64 } else { -(*n as i64) })
            .sum();
        assert_eq!(chi_local, 1);
    }

    fn random_complex(rng: &mut ChaCha8Rng, max_gens: usize) -> (FilteredComplex, ActionWindows) {
        random_filtered_complex(rng, max_gens)
    }

    #[test]
    fn random_complexes_match_the_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let (cx, w) = random_complex(&mut rng, 50);
            let run = run_to_einfty(&cx, &w).unwrap();
            assert!(
                run.agree,
                "E-infinity {:?} vs cohomology {:?}\n{}",
                run.einfty_dims,
                run.total_cohomology,
                format_complex(&cx)
            );
            for e in &run.pages[0].entries {
                assert!(e.p % 2 == 0, "odd E1 column {} populated", e.p);
            }
            // Euler characteristic constant across pages
            let chi = run.pages[0].euler_characteristic();
            for page in &run.pages {
                assert_eq!(page.euler_characteristic(), chi, "page {}", page.r);
            }
        }
    }

    #[test]
    fn disjoint_union_pages_are_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (a, w) = random_complex(&mut rng, 15);
        let (b, _) = random_complex(&mut rng, 15);
        let mut gens = a.generators.clone();
        let offset = gens.len();
        for g in &b.generators {
            gens.push(Generator { id: format!("b_{}", g.id), ..g.clone() });
        }
        let mut edges = a.edges().to_vec();
        for &(f, t) in b.edges() {
            edges.push((f + offset, t + offset));
        }
        let union = FilteredComplex::new(gens, edges).unwrap();
        let ra = run_to_einfty(&a, &w).unwrap();
        let rb = run_to_einfty(&b, &w).unwrap();
        let ru = run_to_einfty(&union, &w).unwrap();
        for (pa, pb, pu) in
            ru.pages.iter().enumerate().map(|(i, p)| (&ra.pages[i], &rb.pages[i], p))
        {
            for e in &pu.entries {
                assert_eq!(e.dim, pa.dim(e.p, e.q + e.p as i32) + pb.dim(e.p, e.q + e.p as i32));
            }
        }
    }

    #[test]
    fn truncation_reproduces_the_full_e1_columnwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let (cx, w) = random_complex(&mut rng, 25);
            // chop below a window boundary: generators of low action form
            // a subcomplex, the kept ones a quotient complex
            for cut in [4.5, 2.5, 0.5, -0.5] {
                let kept: Vec<usize> = (0..cx.len())
                    .filter(|&i| cx.generators[i].action >= cut)
                    .collect();
                let remap: HashMap<usize, usize> =
                    kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
                let gens = kept.iter().map(|&i| cx.generators[i].clone()).collect();
                let edges = cx
                    .edges()
                    .iter()
                    .filter_map(|&(f, t)| Some((*remap.get(&f)?, *remap.get(&t)?)))
                    .collect();
                let trunc = FilteredComplex::new(gens, edges).unwrap();
                let full = e1_page(&cx, &w).unwrap();
                let small = e1_page(&trunc, &w).unwrap();
                let p_cut = w.boundaries.partition_point(|a| *a < cut);
                for e in full.entries.iter().filter(|e| e.p >= p_cut) {
                    assert_eq!(
                        e.dim,
                        small.dim(e.p, e.q + e.p as i32),
                        "cut {cut} column {}",
                        e.p
                    );
                }
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let (cx, _) = two_generator_complex();
        let text = format_complex(&cx);
        let back = parse_complex(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.edges(), cx.edges());
        assert_eq!(back.generators[0].id, "x");
        assert!(parse_complex("generator,a,zero,0.0").is_err());
        assert!(parse_complex("differential,a,b").is_err()); // unknown ids
        let commented = "# a comment\n\ngenerator,a,0,1.0\ngenerator,b,1,0.0\ndifferential,a,b\n";
        assert_eq!(parse_complex(commented).unwrap().edges().len(), 1);
    }
}
