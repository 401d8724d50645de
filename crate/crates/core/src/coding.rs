//! The coding map between the subshift of a Markov partition and the
//! torus: exact cylinder regions, itineraries of points, and sampled checks
//! that cylinder diameters scale like `λ^{-m}` and that the coding map is
//! Lipschitz.
//!
//! A window `x_lo..x_hi` codes the points `y` with `Tʲy ∈ P_{x_j}` for every
//! `j` in the window, so that shifting the window corresponds to applying
//! `T` once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{iterate_point_signed, QuadNum, TorusPoint};
use crate::exec::{map_indices, Execution};
use crate::partition::{geometry_constants, EigenFrame, EigenRect, GeometryConstants, Interval, MarkovPartition, Parallelogram};
use crate::shift::{Sft, ShiftError, SymbolicWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("window is inadmissible for the partition: no region survives at position {position}")]
    InadmissibleWindow { position: i64 },
    #[error("iterate at position {0} lies on a partition boundary")]
    BoundaryHit(i64),
    #[error("image meets element {symbol} in more than one strip at position {position}; the cylinder is not connected")]
    MultipleCrossings { position: i64, symbol: u8 },
    #[error("iterate at position {0} is not covered by any element")]
    NotCovered(i64),
    #[error("iterate at position {0} lies in the interior of several elements")]
    Ambiguous(i64),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// The set of torus points coded by a window, as one lift in eigencoordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricCylinder {
    pub window: SymbolicWindow,
    pub rect: EigenRect,
    pub region: Parallelogram,
    pub diameter: f64,
}

/// Affine map `t ↦ scale·t + offset` on one eigen-axis.
#[derive(Clone, Debug)]
struct AxisMap {
    scale: QuadNum,
    offset: QuadNum,
}

impl AxisMap {
    fn apply(&self, i: &Interval) -> Interval {
        i.scale(&self.scale).shift(&self.offset)
    }
}

fn symbol_rect<'a>(p: &'a MarkovPartition, w: &SymbolicWindow, j: i64) -> Result<&'a EigenRect, CodingError> {
    let s = w.get(j).expect("position inside window");
    p.rects().get(s as usize).ok_or(CodingError::InadmissibleWindow { position: j })
}

/// Successive constraint sets from the root position outward in one
/// direction, each written in the root's own lift. Entry `k` accounts for
/// the `k` positions after (or before) the root.
/// Translates under which the image of a whole element meets another
/// element, per direction and symbol pair. A sub-rectangle's image can only
/// meet a subset of these.
struct CrossingTable {
    forward: Vec<Vec<Vec<(i64, i64)>>>,
    backward: Vec<Vec<Vec<(i64, i64)>>>,
}

impl CrossingTable {
    fn new(p: &MarkovPartition) -> Self {
        let frame = p.frame();
        let rects = p.rects();
        let table = |fwd: bool| {
            rects
                .iter()
                .map(|a| {
                    let img = if fwd { frame.forward(a) } else { frame.backward(a) };
                    rects.iter().map(|b| frame.meeting_translates(&img, b)).collect()
                })
                .collect()
        };
        CrossingTable { forward: table(true), backward: table(false) }
    }
}

fn one_sided_with(
    p: &MarkovPartition,
    table: Option<&CrossingTable>,
    w: &SymbolicWindow,
    root: i64,
    forward: bool,
) -> Result<Vec<EigenRect>, CodingError> {
    let frame: &EigenFrame = p.frame();
    let mut cur = symbol_rect(p, w, root)?.clone();
    let one = frame.field.one();
    let zero = frame.field.zero();
    let mut mu = AxisMap { scale: one.clone(), offset: zero.clone() };
    let mut mv = AxisMap { scale: one, offset: zero };
    let (step_u, step_v) = if forward {
        (&frame.lambda_inv, &frame.stable_inv)
    } else {
        (&frame.lambda, &frame.stable)
    };
    let mut out = vec![cur.clone()];
    let positions: Vec<i64> = if forward { (root + 1..=w.hi()).collect() } else { (w.lo()..root).rev().collect() };
    for j in positions {
        let img = if forward { frame.forward(&cur) } else { frame.backward(&cur) };
        let target = symbol_rect(p, w, j)?;
        let hits: Vec<(i64, i64)> = match table {
            Some(t) => {
                let (a, b) = (w.get(if forward { j - 1 } else { j + 1 }).unwrap() as usize, w.get(j).unwrap() as usize);
                let cands = if forward { &t.forward[a][b] } else { &t.backward[a][b] };
                cands
                    .iter()
                    .copied()
                    .filter(|&(m, n)| img.interiors_meet(&target.translate(&frame.lattice(m, n))))
                    .collect()
            }
            None => frame.meeting_translates(&img, target),
        };
        let shift = match hits.as_slice() {
            [] => return Err(CodingError::InadmissibleWindow { position: j }),
            [one] => frame.lattice(one.0, one.1),
            _ => return Err(CodingError::MultipleCrossings { position: j, symbol: w.get(j).unwrap() }),
        };
        let piece = img.intersect(&target.translate(&shift)).expect("translate was filtered for overlap");
        cur = piece.translate(&(-&shift.0, -&shift.1));
        mu.scale = &mu.scale * step_u;
        mv.scale = &mv.scale * step_v;
        mu.offset = &mu.offset + &(&mu.scale * &shift.0);
        mv.offset = &mv.offset + &(&mv.scale * &shift.1);
        out.push(EigenRect { u: mu.apply(&cur.u), v: mv.apply(&cur.v) });
    }
    Ok(out)
}

fn to_origin_lift(frame: &EigenFrame, mut r: EigenRect, root: i64) -> EigenRect {
    for _ in 0..root.unsigned_abs() {
        r = if root > 0 { frame.backward(&r) } else { frame.forward(&r) };
    }
    r
}

fn build(p: &MarkovPartition, w: &SymbolicWindow, rect: EigenRect) -> GeometricCylinder {
    let frame = p.frame();
    GeometricCylinder {
        window: w.clone(),
        diameter: frame.diameter(&rect),
        region: Parallelogram::from_rect(&rect, frame),
        rect,
    }
}

/// Exact region coded by `w`. When the window contains position 0 the
/// region lies inside the lift of `P_{x_0}` stored in the partition.
pub fn cylinder_region(p: &MarkovPartition, w: &SymbolicWindow) -> Result<GeometricCylinder, CodingError> {
    cylinder_region_with(p, None, w)
}

fn cylinder_region_with(p: &MarkovPartition, table: Option<&CrossingTable>, w: &SymbolicWindow) -> Result<GeometricCylinder, CodingError> {
    let root = 0.clamp(w.lo(), w.hi());
    let fwd = one_sided_with(p, table, w, root, true)?;
    let bwd = one_sided_with(p, table, w, root, false)?;
    let rect = fwd
        .last()
        .unwrap()
        .intersect(bwd.last().unwrap())
        .ok_or(CodingError::InadmissibleWindow { position: root })?;
    Ok(build(p, w, to_origin_lift(p.frame(), rect, root)))
}

/// Regions of the symmetric sub-windows `[-m, m]` for `m = 0..=radius`,
/// sharing one outward pass. `w` must contain `[-radius, radius]`.
pub fn nested_regions(p: &MarkovPartition, w: &SymbolicWindow, radius: i64) -> Result<Vec<EigenRect>, CodingError> {
    nested_regions_with(p, None, w, radius)
}

fn nested_regions_with(
    p: &MarkovPartition,
    table: Option<&CrossingTable>,
    w: &SymbolicWindow,
    radius: i64,
) -> Result<Vec<EigenRect>, CodingError> {
    let w = w.restrict(-radius, radius).ok_or(ShiftError::DomainMismatch { lo: w.lo(), hi: w.hi() })?;
    let fwd = one_sided_with(p, table, &w, 0, true)?;
    let bwd = one_sided_with(p, table, &w, 0, false)?;
    fwd.iter()
        .zip(&bwd)
        .enumerate()
        .map(|(m, (f, b))| f.intersect(b).ok_or(CodingError::InadmissibleWindow { position: m as i64 }))
        .collect()
}

/// Index of the element whose interior contains `x`.
fn locate_point(p: &MarkovPartition, x: &TorusPoint, position: i64) -> Result<u8, CodingError> {
    let frame = p.frame();
    let f = frame.field;
    let (rx, ry) = x.coords_exact();
    let (qx, qy) = (f.rational(rx), f.rational(ry));
    let (px, py) = x.coords_f64();
    let (u, v) = frame.to_eigen(&qx, &qy);
    let mut found = None;
    let mut boundary = false;
    for (i, r) in p.rects().iter().enumerate() {
        let b = frame.bbox(r);
        let (m_lo, m_hi) = ((px - b[1]).floor() as i64 - 1, (px - b[0]).ceil() as i64 + 1);
        let (n_lo, n_hi) = ((py - b[3]).floor() as i64 - 1, (py - b[2]).ceil() as i64 + 1);
        for m in m_lo..=m_hi {
            for n in n_lo..=n_hi {
                let (gu, gv) = frame.lattice(m, n);
                let lu = r.u.locate(&(&u - &gu));
                let lv = r.v.locate(&(&v - &gv));
                if lu < 0 || lv < 0 {
                    continue;
                }
                if lu == 0 || lv == 0 {
                    boundary = true;
                } else if found.replace(i).is_some_and(|prev| prev != i) {
                    return Err(CodingError::Ambiguous(position));
                }
            }
        }
    }
    if boundary {
        return Err(CodingError::BoundaryHit(position));
    }
    found.map(|i| i as u8).ok_or(CodingError::NotCovered(position))
}

/// The window on `[-m, m]` recording which element each `Tʲx` visits.
/// Iteration is exact for rational points; floating points are first
/// converted to the rational they represent.
pub fn itinerary(p: &MarkovPartition, x: &TorusPoint, m: u64) -> Result<SymbolicWindow, CodingError> {
    let a = p.automorphism();
    let m = m as i64;
    let start = TorusPoint::exact(x.coords_exact().0, x.coords_exact().1);
    let mut symbols = Vec::with_capacity((2 * m + 1) as usize);
    let mut y = iterate_point_signed(a, &start, -m);
    for j in -m..=m {
        symbols.push(locate_point(p, &y, j)?);
        y = iterate_point_signed(a, &y, 1);
    }
    Ok(SymbolicWindow::new(-m, symbols)?)
}

/// One row of the diameter report: cylinders of radius `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub m: u32,
    pub samples: usize,
    /// Smallest and largest `diam · λ^m`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiameterReport {
    pub constants: GeometryConstants,
    pub rows: Vec<RatioRow>,
    pub lipschitz_pairs: usize,
    /// Largest `|π(x) − π(y)| / d(x, y)` seen over the sampled pairs.
    pub worst_lipschitz_ratio: f64,
    pub lipschitz_violations: usize,
}

impl DiameterReport {
    pub fn total_violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum::<usize>() + self.lipschitz_violations
    }
}

const RATIO_SLACK: f64 = 1e-9;

struct SampleOutcome {
    ratios: Vec<f64>,
    lipschitz: Option<f64>,
}

fn max_corner_distance(frame: &EigenFrame, a: &EigenRect, b: &EigenRect) -> f64 {
    let ca = frame.corners_f64(a);
    let cb = frame.corners_f64(b);
    let mut best = 0.0f64;
    for p in &ca {
        for q in &cb {
            best = best.max((p.0 - q.0).hypot(p.1 - q.1));
        }
    }
    best
}

/// A window agreeing with `x` on `|i| < k` and differing at `i = k` or
/// `i = -k`, filled out randomly to the radius of `x`.
fn partner_window<R: Rng>(s: &Sft, x: &SymbolicWindow, k: i64, rng: &mut R) -> Option<SymbolicWindow> {
    let radius = x.hi();
    let d = s.alphabet_size() as u8;
    let sides: [i64; 2] = if rng.random_bool(0.5) { [1, -1] } else { [-1, 1] };
    for side in sides {
        let inner = x.get(side * (k - 1)).unwrap();
        let current = x.get(side * k).unwrap();
        let options: Vec<u8> = (0..d)
            .filter(|&b| b != current && if side > 0 { s.allowed(inner, b) } else { s.allowed(b, inner) })
            .collect();
        if options.is_empty() {
            continue;
        }
        let mut y: Vec<u8> = x.symbols().to_vec();
        let idx = |i: i64| (i + radius) as usize;
        y[idx(side * k)] = options[rng.random_range(0..options.len())];
        // refill outward on the changed side
        for step in k + 1..=radius {
            let prev = y[idx(side * (step - 1))];
            let next: Vec<u8> = (0..d).filter(|&b| if side > 0 { s.allowed(prev, b) } else { s.allowed(b, prev) }).collect();
            if next.is_empty() {
                return None;
            }
            y[idx(side * step)] = next[rng.random_range(0..next.len())];
        }
        return SymbolicWindow::new(-radius, y).ok();
    }
    None
}

/// Samples admissible windows on `[-m_max, m_max]` and checks, for every
/// `m ≤ m_max`, that `c_min·λ^{-m} ≤ diam C_m ≤ c_max·λ^{-m}`; for each
/// sample also checks the Lipschitz bound `|π(x) − π(y)| ≤ c_max·d(x, y)`
/// on a partner window that first differs at a random radius.
pub fn diameter_ratio_check(
    p: &MarkovPartition,
    samples: usize,
    m_max: u32,
    seed: u64,
    exec: Execution,
) -> Result<DiameterReport, CodingError> {
    let constants = geometry_constants(p);
    let sft = Sft::from_partition(p)?;
    let frame = p.frame();
    let lambda = frame.lambda_f64.abs();
    let radius = m_max as i64;
    let table = CrossingTable::new(p);
    let outcomes: Vec<Result<SampleOutcome, CodingError>> = map_indices(exec, samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let x = sft
            .sample_window(-radius, radius, 0, &mut rng)
            .ok_or(CodingError::InadmissibleWindow { position: 0 })?;
        let regions = nested_regions_with(p, Some(&table), &x, radius)?;
        let ratios = regions
            .iter()
            .enumerate()
            .map(|(m, r)| frame.diameter(r) * lambda.powi(m as i32))
            .collect();
        let mut lipschitz = None;
        if radius >= 1 {
            let k = rng.random_range(1..=radius);
            if let Some(y) = partner_window(&sft, &x, k, &mut rng) {
                let ry = cylinder_region_with(p, Some(&table), &y)?;
                let dist = max_corner_distance(frame, regions.last().unwrap(), &ry.rect);
                let metric = lambda.powi(-(k as i32 - 1));
                lipschitz = Some(dist / metric);
            }
        }
        Ok(SampleOutcome { ratios, lipschitz })
    });
    let outcomes: Vec<SampleOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let lo_bound = constants.c_min * (1.0 - RATIO_SLACK);
    let hi_bound = constants.c_max * (1.0 + RATIO_SLACK);
    let rows = (0..=m_max)
        .map(|m| {
            let vals: Vec<f64> = outcomes.iter().map(|o| o.ratios[m as usize]).collect();
            RatioRow {
                m,
                samples: vals.len(),
                min_ratio: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                max_ratio: vals.iter().cloned().fold(0.0, f64::max),
                violations: vals.iter().filter(|&&r| r < lo_bound || r > hi_bound).count(),
            }
        })
        .collect();
    let lips: Vec<f64> = outcomes.iter().filter_map(|o| o.lipschitz).collect();
    let lip_bound = constants.lipschitz * (1.0 + RATIO_SLACK);
    Ok(DiameterReport {
        constants,
        rows,
        lipschitz_pairs: lips.len(),
        worst_lipschitz_ratio: lips.iter().cloned().fold(0.0, f64::max),
        lipschitz_violations: lips.iter().filter(|&&r| r > lip_bound).count(),
    })
}

/// Whether `A·R₁` equals `R₂` up to a lattice translate.
pub fn images_match(p: &MarkovPartition, r1: &EigenRect, r2: &EigenRect) -> bool {
    let frame = p.frame();
    let img = frame.forward(r1);
    frame.meeting_translates(&img, r2).into_iter().any(|(m, n)| {
        let shifted = r2.translate(&frame.lattice(m, n));
        shifted == img
    })
}
