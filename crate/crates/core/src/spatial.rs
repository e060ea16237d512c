//! Network geometry: base-station process, cell membership by nearest-BS
//! tests, device placement and the distances the SIR expressions need.
//!
//! Cells are never constructed explicitly. A device is placed uniformly in
//! its cell by rejection from a disk that provably covers the cell, so the
//! accepted point is exactly uniform on the cell (intersected with the
//! simulation window).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::config::{SystemParams, MIN_LINK_DISTANCE};
use crate::rng::{substream, Purpose, StreamRng};
use crate::Error;

/// A point in the plane, metres.
pub type Point = [f64; 2];

/// Proposals tried in one covering disk before giving up on a cell.
const MAX_PROPOSALS: usize = 1_000_000;

#[inline]
fn dist2(a: Point, b: Point) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Default window radius: `max(5, sqrt(500)) / sqrt(pi lambda_b)`, about 500
/// base stations in expectation.
pub fn default_window_radius(lambda_b: f64) -> f64 {
    let unit = 1.0 / Float::sqrt(PI * lambda_b);
    Float::max(5.0 * unit, Float::sqrt(500.0) * unit)
}

/// Homogeneous PPP of density `lambda_b` in the disk of radius
/// `window_radius`, with an extra point at the origin stored first.
pub fn sample_bs_process<R: Rng + ?Sized>(
    lambda_b: f64,
    window_radius: f64,
    rng: &mut R,
) -> Vec<Point> {
    let mean = lambda_b * PI * window_radius * window_radius;
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0)
    } else {
        0
    };
    let mut pts = Vec::with_capacity(n + 1);
    pts.push([0.0, 0.0]);
    for _ in 0..n {
        pts.push(uniform_in_disk([0.0, 0.0], window_radius, rng));
    }
    pts
}

fn uniform_in_disk<R: Rng + ?Sized>(c: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * Float::sqrt(rng.random::<f64>());
    let th = 2.0 * PI * rng.random::<f64>();
    [c[0] + r * Float::cos(th), c[1] + r * Float::sin(th)]
}

/// Which region of a cell a device is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellConstraint {
    /// The whole Poisson-Voronoi cell.
    Voronoi,
    /// The Johnson-Mehl cell: Voronoi cell within `L` of the BS.
    JohnsonMehl(f64),
}

/// Base stations with a bucket grid for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct BsField {
    points: Vec<Point>,
    window_radius: f64,
    cell: f64,
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl BsField {
    /// Indexes `points`, all of which lie in the disk of `window_radius`.
    pub fn new(points: Vec<Point>, window_radius: f64) -> Self {
        let n = points.len().max(1) as f64;
        // About two points per bucket.
        let density = n / (PI * window_radius * window_radius);
        let cell = Float::max(Float::sqrt(2.0 / density), window_radius / 512.0);
        let side = (Float::ceil(2.0 * window_radius / cell) as usize).max(1);
        let mut buckets = vec![Vec::new(); side * side];
        let mut field = BsField {
            points: Vec::new(),
            window_radius,
            cell,
            side,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (bx, by) = field.bucket_of(*p);
            buckets[by * side + bx].push(i as u32);
        }
        field.points = points;
        field.buckets = buckets;
        field
    }

    /// All base stations; index 0 is the typical BS at the origin.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Window radius.
    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    fn coord(&self, v: f64) -> usize {
        let k = Float::floor((v + self.window_radius) / self.cell);
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.side - 1)
        }
    }

    fn bucket_of(&self, p: Point) -> (usize, usize) {
        (self.coord(p[0]), self.coord(p[1]))
    }

    /// Calls `f(index, squared distance)` for every BS within `radius` of `p`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, p: Point, radius: f64, mut f: F) {
        let (x0, x1) = (self.coord(p[0] - radius), self.coord(p[0] + radius));
        let (y0, y1) = (self.coord(p[1] - radius), self.coord(p[1] + radius));
        let r2 = radius * radius;
        for by in y0..=y1 {
            for bx in x0..=x1 {
                for &i in &self.buckets[by * self.side + bx] {
                    let d2 = dist2(self.points[i as usize], p);
                    if d2 <= r2 {
                        f(i as usize, d2);
                    }
                }
            }
        }
    }

    /// Nearest BS to `p` and the squared distance; ties go to the lower index.
    pub fn nearest(&self, p: Point) -> (usize, f64) {
        let (bx, by) = self.bucket_of(p);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0usize;
        loop {
            let lo_x = bx.saturating_sub(ring);
            let hi_x = (bx + ring).min(self.side - 1);
            let lo_y = by.saturating_sub(ring);
            let hi_y = (by + ring).min(self.side - 1);
            for y in lo_y..=hi_y {
                for x in lo_x..=hi_x {
                    let on_ring =
                        x + ring == bx || x == bx + ring || y + ring == by || y == by + ring;
                    if !on_ring {
                        continue;
                    }
                    for &i in &self.buckets[y * self.side + x] {
                        let d2 = dist2(self.points[i as usize], p);
                        if d2 < best.1 || (d2 == best.1 && (i as usize) < best.0) {
                            best = (i as usize, d2);
                        }
                    }
                }
            }
            // Everything beyond this ring is at least `ring * cell` away
            // (for points inside the grid; outside points only get closer
            // buckets clamped, which keeps the bound valid).
            let reach = ring as f64 * self.cell;
            let covered_all =
                lo_x == 0 && lo_y == 0 && hi_x == self.side - 1 && hi_y == self.side - 1;
            if (best.0 != usize::MAX && reach * reach >= best.1) || covered_all {
                return best;
            }
            ring += 1;
        }
    }

    /// `true` when no other BS is strictly closer to `p` than BS `idx`.
    pub fn owns(&self, idx: usize, p: Point) -> bool {
        let own = dist2(self.points[idx], p);
        let mut ok = true;
        self.for_each_within(p, Float::sqrt(own), |j, d2| {
            if j != idx && d2 < own {
                ok = false;
            }
        });
        ok
    }

    /// Exhaustive version of [`BsField::owns`], for testing.
    pub fn owns_exhaustive(&self, idx: usize, p: Point) -> bool {
        let own = dist2(self.points[idx], p);
        self.points
            .iter()
            .enumerate()
            .all(|(j, q)| j == idx || dist2(*q, p) >= own)
    }

    /// Smallest radius in `r0, 2 r0, ...` (up to `cap`) whose disk around BS
    /// `idx` contains the cell of `idx` clipped to the window.
    ///
    /// The clipped cell is convex and contains its BS, so it lies inside the
    /// disk as soon as every point of the bounding circle belongs to another
    /// cell or to the window exterior. Neighbour `z` at distance `d < 2R`
    /// claims the arc of half-width `acos(d / 2R)` facing it.
    pub fn covering_radius(&self, idx: usize, r0: f64, cap: f64) -> Option<f64> {
        let x = self.points[idx];
        let mut r = r0;
        let mut arcs: Vec<(f64, f64)> = Vec::new();
        while r <= cap * (1.0 + 1e-12) {
            arcs.clear();
            self.for_each_within(x, 2.0 * r, |j, d2| {
                if j == idx {
                    return;
                }
                let d = Float::sqrt(d2);
                let half = Float::acos(Float::min(d / (2.0 * r), 1.0));
                let centre = Float::atan2(self.points[j][1] - x[1], self.points[j][0] - x[0]);
                arcs.push((centre, half));
            });
            // Window exterior: |x + r e(t)| > W.
            let rx = Float::sqrt(dist2(x, [0.0, 0.0]));
            let w = self.window_radius;
            if rx + r > w {
                if r > rx + w {
                    // Whole circle outside the window.
                    return Some(r);
                }
                if rx > 0.0 {
                    let c = (w * w - rx * rx - r * r) / (2.0 * rx * r);
                    if c < 1.0 {
                        let half = Float::acos(Float::max(c, -1.0));
                        arcs.push((Float::atan2(x[1], x[0]), half));
                    }
                }
            }
            if circle_covered(&mut arcs) {
                return Some(r);
            }
            r *= 2.0;
        }
        None
    }

    /// Uniform point of the cell of BS `idx` (clipped to the window).
    ///
    /// The proposal disk is the covering disk found by
    /// [`BsField::covering_radius`], starting at `2 / sqrt(pi lambda_b)` and
    /// capped at ten times that; for Johnson-Mehl cells it is further
    /// intersected with the pairing ball.
    pub fn sample_uniform_in_cell<R: Rng + ?Sized>(
        &self,
        idx: usize,
        lambda_b: f64,
        constraint: CellConstraint,
        rng: &mut R,
    ) -> Result<Point, Error> {
        let unit = 1.0 / Float::sqrt(PI * lambda_b);
        let cap = 20.0 * unit;
        let cover = self
            .covering_radius(idx, 2.0 * unit, cap)
            .ok_or(Error::CellSampling {
                bs: idx,
                radius_cap: cap,
            })?;
        let radius = match constraint {
            CellConstraint::Voronoi => cover,
            CellConstraint::JohnsonMehl(l) => Float::min(cover, l),
        };
        let x = self.points[idx];
        let w2 = self.window_radius * self.window_radius;
        for _ in 0..MAX_PROPOSALS {
            let y = uniform_in_disk(x, radius, rng);
            if dist2(y, [0.0, 0.0]) <= w2 && self.owns(idx, y) {
                return Ok(y);
            }
        }
        Err(Error::CellSampling {
            bs: idx,
            radius_cap: radius,
        })
    }
}

/// `true` when the arcs `(centre, half_width)` cover the whole circle.
fn circle_covered(arcs: &mut [(f64, f64)]) -> bool {
    const TWO_PI: f64 = 2.0 * PI;
    // A small inward margin keeps the test conservative.
    const MARGIN: f64 = 1e-9;
    let mut iv: Vec<(f64, f64)> = Vec::with_capacity(arcs.len() + 4);
    for &(c, h) in arcs.iter() {
        let h = h - MARGIN;
        if h <= 0.0 {
            continue;
        }
        if h >= PI {
            return true;
        }
        let start = num_traits::Euclid::rem_euclid(&(c - h), &TWO_PI);
        let end = start + 2.0 * h;
        if end > TWO_PI {
            iv.push((start, TWO_PI));
            iv.push((0.0, end - TWO_PI));
        } else {
            iv.push((start, end));
        }
    }
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = 0.0;
    for (s, e) in iv {
        if s > reach {
            return false;
        }
        reach = Float::max(reach, e);
    }
    reach >= TWO_PI
}

/// Link distance and distance to the typical BS of one interferer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Distance to its own BS, m.
    pub link: f64,
    /// Distance to the typical BS at the origin, m.
    pub to_origin: f64,
}

/// One sampled network geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    /// Base stations; index 0 is the typical BS at the origin.
    pub bs_points: Vec<Point>,
    /// Mobile user of each cell, same indexing as `bs_points`.
    pub mobile_positions: Vec<Point>,
    /// IoT device of each cell.
    pub iot_positions: Vec<Point>,
    /// Serving distance of the typical mobile user.
    pub typical_mobile: f64,
    /// Serving distance of the typical IoT device.
    pub typical_iot: f64,
    /// One mobile interferer per non-typical cell (cell `i + 1`).
    pub interferers_mobile: Vec<Interferer>,
    /// One IoT interferer per non-typical cell.
    pub interferers_iot: Vec<Interferer>,
    /// Simulation window radius, m.
    pub window_radius: f64,
    /// Master seed and index the snapshot was drawn from.
    pub seed: (u64, u64),
    /// Distances raised to the minimum link distance.
    pub clamped: usize,
}

/// Builds snapshot `index` of the batch seeded by `master`.
///
/// Every cell gets one Johnson-Mehl mobile user and one Voronoi IoT device.
/// The geometry depends on the parameters only through `lambda_b` and `L`,
/// so one snapshot serves every power-control setting and threshold.
pub fn build_snapshot(
    params: &SystemParams,
    window_radius: f64,
    master: u64,
    index: u64,
) -> Result<NetworkSnapshot, Error> {
    let mut rng: StreamRng = substream(master, Purpose::Snapshot, index);
    let lambda_b = params.lambda_b();
    let field = BsField::new(
        sample_bs_process(lambda_b, window_radius, &mut rng),
        window_radius,
    );
    let n = field.points().len();
    let jm = CellConstraint::JohnsonMehl(params.pairing_radius());
    let mut mobile_positions = Vec::with_capacity(n);
    let mut iot_positions = Vec::with_capacity(n);
    for i in 0..n {
        mobile_positions.push(field.sample_uniform_in_cell(i, lambda_b, jm, &mut rng)?);
        iot_positions.push(field.sample_uniform_in_cell(
            i,
            lambda_b,
            CellConstraint::Voronoi,
            &mut rng,
        )?);
    }
    let mut clamped = 0usize;
    let mut clamp = |d: f64| {
        if d < MIN_LINK_DISTANCE {
            clamped += 1;
            MIN_LINK_DISTANCE
        } else {
            d
        }
    };
    let pts = field.points();
    let typical_mobile = clamp(Float::sqrt(dist2(mobile_positions[0], pts[0])));
    let typical_iot = clamp(Float::sqrt(dist2(iot_positions[0], pts[0])));
    let mut interferers_mobile = Vec::with_capacity(n.saturating_sub(1));
    let mut interferers_iot = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        interferers_mobile.push(Interferer {
            link: clamp(Float::sqrt(dist2(mobile_positions[i], pts[i]))),
            to_origin: clamp(Float::sqrt(dist2(mobile_positions[i], [0.0, 0.0]))),
        });
        interferers_iot.push(Interferer {
            link: clamp(Float::sqrt(dist2(iot_positions[i], pts[i]))),
            to_origin: clamp(Float::sqrt(dist2(iot_positions[i], [0.0, 0.0]))),
        });
    }
    if clamped > 0 {
        log::debug!(
            "snapshot {master}/{index}: {clamped} distances clamped to {MIN_LINK_DISTANCE} m"
        );
    }
    let bs_points = field.points.clone();
    Ok(NetworkSnapshot {
        bs_points,
        mobile_positions,
        iot_positions,
        typical_mobile,
        typical_iot,
        interferers_mobile,
        interferers_iot,
        window_radius,
        seed: (master, index),
        clamped,
    })
}

/// Unit-mean exponential gains for every link of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    /// Typical mobile user.
    pub h_m: f64,
    /// Typical IoT device.
    pub h_t: f64,
    /// Mobile interferers, aligned with `interferers_mobile`.
    pub h_xm: Vec<f64>,
    /// IoT interferers, aligned with `interferers_iot`.
    pub h_xt: Vec<f64>,
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Exp1 can return exactly 0 only with probability ~2^-64; keep gains
    // strictly positive.
    let h: f64 = Exp1.sample(rng);
    Float::max(h, f64::MIN_POSITIVE)
}

/// Independent Rayleigh fading for every link of `snapshot`.
pub fn draw_fading<R: Rng + ?Sized>(snapshot: &NetworkSnapshot, rng: &mut R) -> FadingDraw {
    let h_m = exp1(rng);
    let h_t = exp1(rng);
    let h_xm = snapshot
        .interferers_mobile
        .iter()
        .map(|_| exp1(rng))
        .collect();
    let h_xt = snapshot.interferers_iot.iter().map(|_| exp1(rng)).collect();
    FadingDraw {
        h_m,
        h_t,
        h_xm,
        h_xt,
    }
}

/// Distance of a device placed uniformly in the typical cell (origin BS) of
/// a fresh PPP of radius `window_radius`; used to check link-distance laws.
pub fn sample_typical_link_distance<R: Rng + ?Sized>(
    lambda_b: f64,
    window_radius: f64,
    constraint: CellConstraint,
    rng: &mut R,
) -> Result<f64, Error> {
    let field = BsField::new(
        sample_bs_process(lambda_b, window_radius, rng),
        window_radius,
    );
    let y = field.sample_uniform_in_cell(0, lambda_b, constraint, rng)?;
    Ok(Float::sqrt(dist2(y, [0.0, 0.0])))
}
