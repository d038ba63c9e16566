//! Random network deployments: PPP sampling, nearest-BS association, two-user
//! clustering, ordering by the interference-ratio statistic and hole carving.
//!
//! Randomness is split into independent ChaCha streams keyed off one realization
//! seed: base stations, the tagged-cluster draw, one stream per spatial tile for the
//! user and attacker processes, and one stream per cell for cluster selection. Tiling
//! the user and attacker processes means a realization can be evaluated around the
//! tagged cell only ([`tagged_sample`]) while remaining bit-identical to the full
//! construction ([`NetworkRealization::sample`]).

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn dist2(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2D) -> f64 {
        self.dist2(other).sqrt()
    }
}

const STREAM_BS: u64 = 0;
const STREAM_TAG: u64 = 1;
const STREAM_USER_TILE: u64 = 1 << 40;
const STREAM_ATTACKER_TILE: u64 = 2 << 40;
const STREAM_CLUSTER: u64 = 3 << 40;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn poisson_count<R: RngCore>(mean: f64, rng: &mut R) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => {
            let n: f64 = d.sample(rng);
            n as usize
        }
        Err(_) => 0,
    }
}

/// Homogeneous PPP on `[x0, x0 + w) x [y0, y0 + h)`.
pub fn sample_ppp_in_rect<R: RngCore>(
    density: f64,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    rng: &mut R,
) -> Vec<Point2D> {
    let n = poisson_count(density * w * h, rng);
    (0..n)
        .map(|_| {
            let x = x0 + w * rng.random::<f64>();
            let y = y0 + h * rng.random::<f64>();
            Point2D::new(x, y)
        })
        .collect()
}

/// Homogeneous PPP of the given density (nodes/m²) on the square `[0, side)²`.
pub fn sample_ppp<R: RngCore>(density: f64, side: f64, rng: &mut R) -> Vec<Point2D> {
    sample_ppp_in_rect(density, 0.0, 0.0, side, side, rng)
}

/// Uniform bucket grid over the region for nearest-BS queries.
#[derive(Debug, Clone)]
pub struct BsIndex {
    points: Vec<Point2D>,
    buckets: Vec<Vec<u32>>,
    cells: usize,
    cell_size: f64,
}

impl BsIndex {
    pub fn new(points: &[Point2D], side: f64) -> Self {
        let density = points.len() as f64 / (side * side);
        let cells = ((side * density.sqrt()).ceil() as usize).clamp(1, 2048);
        let cell_size = side / cells as f64;
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::coords(p, cell_size, cells);
            buckets[cy * cells + cx].push(i as u32);
        }
        BsIndex {
            points: points.to_vec(),
            buckets,
            cells,
            cell_size,
        }
    }

    fn coords(p: &Point2D, cell_size: f64, cells: usize) -> (usize, usize) {
        let f = |v: f64| ((v / cell_size).floor().max(0.0) as usize).min(cells - 1);
        (f(p.x), f(p.y))
    }

    pub fn points(&self) -> &[Point2D] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest BS, lowest index on ties.
    pub fn nearest(&self, p: &Point2D) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (cx, cy) = Self::coords(p, self.cell_size, self.cells);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..self.cells {
            if let Some((_, d2)) = best {
                // every cell in this ring is at least (ring - 1) cells away
                let gap = (ring as f64 - 1.0).max(0.0) * self.cell_size;
                if gap * gap > d2 {
                    break;
                }
            }
            self.for_ring(cx, cy, ring, |i| {
                let d2 = self.points[i].dist2(p);
                match best {
                    Some((bi, bd)) if d2 > bd || (d2 == bd && i > bi) => {}
                    _ => best = Some((i, d2)),
                }
            });
        }
        best
    }

    /// Whether some BS lies strictly closer than `radius` to `p`.
    pub fn any_within(&self, p: &Point2D, radius: f64) -> bool {
        if radius <= 0.0 {
            return false;
        }
        let r2 = radius * radius;
        let reach = (radius / self.cell_size).ceil() as usize + 1;
        let (cx, cy) = Self::coords(p, self.cell_size, self.cells);
        let mut hit = false;
        for ring in 0..=reach.min(self.cells) {
            self.for_ring(cx, cy, ring, |i| {
                if self.points[i].dist2(p) < r2 {
                    hit = true;
                }
            });
            if hit {
                return true;
            }
        }
        false
    }

    /// Sum of `(d2_ref / d2_l)^(beta/2)` over BSs in the 3x3 bucket block around `p`,
    /// skipping `skip`. A cheap lower bound on the full interference ratio.
    fn local_ratio_sum(&self, p: &Point2D, d2_ref: f64, skip: usize, pow: &RatioPow) -> f64 {
        let (cx, cy) = Self::coords(p, self.cell_size, self.cells);
        let mut s = 0.0;
        for ring in 0..2 {
            self.for_ring(cx, cy, ring, |i| {
                if i != skip {
                    s += pow.apply(d2_ref / self.points[i].dist2(p));
                }
            });
        }
        s
    }

    fn for_ring<F: FnMut(usize)>(&self, cx: usize, cy: usize, ring: usize, mut f: F) {
        let n = self.cells as isize;
        let (cx, cy, r) = (cx as isize, cy as isize, ring as isize);
        let mut visit = |x: isize, y: isize| {
            if x >= 0 && y >= 0 && x < n && y < n {
                for &i in &self.buckets[(y * n + x) as usize] {
                    f(i as usize);
                }
            }
        };
        if r == 0 {
            visit(cx, cy);
            return;
        }
        for x in (cx - r)..=(cx + r) {
            visit(x, cy - r);
            visit(x, cy + r);
        }
        for y in (cy - r + 1)..=(cy + r - 1) {
            visit(cx - r, y);
            visit(cx + r, y);
        }
    }
}

/// `x^(beta/2)` for squared-distance ratios, using repeated squaring when the
/// exponent is a small integer.
#[derive(Debug, Clone, Copy)]
struct RatioPow {
    half_beta: f64,
    int: Option<i32>,
}

impl RatioPow {
    fn new(beta: f64) -> Self {
        let half_beta = 0.5 * beta;
        let int = (half_beta.fract() == 0.0 && half_beta.abs() <= 64.0).then_some(half_beta as i32);
        RatioPow { half_beta, int }
    }

    fn apply(&self, x: f64) -> f64 {
        match self.int {
            Some(k) => x.powi(k),
            None => x.powf(self.half_beta),
        }
    }
}

/// `sum_{l != serving} (|p - b_serving| / |p - b_l|)^beta`, summed in BS index order.
fn interference_ratio_at(p: &Point2D, serving: usize, bs: &[Point2D], pow: &RatioPow) -> f64 {
    let d2k = p.dist2(&bs[serving]);
    let mut s = 0.0;
    for (l, b) in bs.iter().enumerate() {
        if l != serving {
            s += pow.apply(d2k / p.dist2(b));
        }
    }
    s
}

/// Same as [`interference_ratio_at`] but gives up once the sum reaches `limit`.
fn interference_ratio_bounded(
    p: &Point2D,
    serving: usize,
    bs: &[Point2D],
    pow: &RatioPow,
    limit: f64,
) -> Option<f64> {
    let d2k = p.dist2(&bs[serving]);
    let mut s = 0.0;
    for (l, b) in bs.iter().enumerate() {
        if l != serving {
            s += pow.apply(d2k / p.dist2(b));
            if s > limit {
                return None;
            }
        }
    }
    Some(s)
}

fn nearest_brute(p: &Point2D, bs: &[Point2D]) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, b) in bs.iter().enumerate() {
        let d = p.dist2(b);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// Ordering statistic of a user served by its nearest BS in `bs`.
pub fn user_statistic(u: &Point2D, bs: &[Point2D], alpha: f64) -> f64 {
    let k = nearest_brute(u, bs);
    statistic_with_serving(u, k, bs, &RatioPow::new(2.0 * alpha))
}

fn statistic_with_serving(u: &Point2D, serving: usize, bs: &[Point2D], pow: &RatioPow) -> f64 {
    let q = interference_ratio_at(u, serving, bs, pow);
    if q > 0.0 {
        1.0 / q
    } else {
        f64::INFINITY
    }
}

/// Returns `(central, second)`: the user with the larger ordering statistic first,
/// `u0` on ties. Each user is served by its own nearest BS.
pub fn order_pair(
    u0: Point2D,
    u1: Point2D,
    bs: &[Point2D],
    alpha: f64,
) -> Result<(Point2D, Point2D)> {
    if bs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "ordering needs at least 2 base stations, got {}",
            bs.len()
        )));
    }
    let s0 = user_statistic(&u0, bs, alpha);
    let s1 = user_statistic(&u1, bs, alpha);
    Ok(if s0 >= s1 { (u0, u1) } else { (u1, u0) })
}

/// Keeps the attackers at distance `>= r0` from every BS.
pub fn carve_holes(attackers: &[Point2D], bs: &[Point2D], r0: f64) -> Vec<Point2D> {
    if r0 <= 0.0 {
        return attackers.to_vec();
    }
    let r2 = r0 * r0;
    attackers
        .iter()
        .copied()
        .filter(|a| bs.iter().all(|b| a.dist2(b) >= r2))
        .collect()
}

/// Groups users by nearest BS (in input order) and draws `clusters` disjoint pairs
/// per cell. Cells with fewer than `2 * clusters` users come back as `None`.
pub fn associate_and_cluster(
    bs: &[Point2D],
    users: &[Point2D],
    clusters: usize,
    seed: u64,
) -> Vec<Option<Vec<(Point2D, Point2D)>>> {
    let mut members: Vec<Vec<Point2D>> = vec![Vec::new(); bs.len()];
    if bs.is_empty() {
        return Vec::new();
    }
    for u in users {
        members[nearest_brute(u, bs)].push(*u);
    }
    members
        .iter()
        .enumerate()
        .map(|(c, m)| draw_clusters(m, clusters, seed, c))
        .collect()
}

fn draw_clusters(
    members: &[Point2D],
    clusters: usize,
    seed: u64,
    cell: usize,
) -> Option<Vec<(Point2D, Point2D)>> {
    let need = 2 * clusters;
    if members.len() < need {
        return None;
    }
    let mut rng = stream(seed, STREAM_CLUSTER | cell as u64);
    let picked = index::sample(&mut rng, members.len(), need).into_vec();
    Some(
        picked
            .chunks_exact(2)
            .map(|w| (members[w[0]], members[w[1]]))
            .collect(),
    )
}

/// Square tiling used to key the user and attacker streams.
#[derive(Debug, Clone, Copy)]
struct Tiling {
    per_side: usize,
    size: f64,
}

impl Tiling {
    fn new(lambda_b: f64, side: f64) -> Self {
        let target = if lambda_b > 0.0 {
            0.5 / lambda_b.sqrt()
        } else {
            side
        };
        let per_side = ((side / target).ceil() as usize).clamp(1, 4096);
        Tiling {
            per_side,
            size: side / per_side as f64,
        }
    }

    fn count(&self) -> usize {
        self.per_side * self.per_side
    }

    fn origin(&self, t: usize) -> (f64, f64) {
        let (ix, iy) = (t % self.per_side, t / self.per_side);
        (ix as f64 * self.size, iy as f64 * self.size)
    }

    fn tile_of(&self, p: &Point2D) -> usize {
        let f = |v: f64| ((v / self.size).floor().max(0.0) as usize).min(self.per_side - 1);
        f(p.y) * self.per_side + f(p.x)
    }

    fn corners(&self, t: usize) -> [Point2D; 4] {
        let (x, y) = self.origin(t);
        let s = self.size;
        [
            Point2D::new(x, y),
            Point2D::new(x + s, y),
            Point2D::new(x, y + s),
            Point2D::new(x + s, y + s),
        ]
    }

    fn sample(&self, density: f64, t: usize, seed: u64, base: u64) -> Vec<Point2D> {
        let mut rng = stream(seed, base | t as u64);
        let (x, y) = self.origin(t);
        sample_ppp_in_rect(density, x, y, self.size, self.size, &mut rng)
    }
}

/// One sampled deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub bs_points: Vec<Point2D>,
    /// Per cell, `Some` list of `(central, second)` pairs or `None` if the cell had
    /// too few users.
    pub clusters: Vec<Option<Vec<(Point2D, Point2D)>>>,
    /// Attackers surviving hole carving.
    pub attacker_points: Vec<Point2D>,
    pub region_side: f64,
    pub seed: u64,
}

/// The measured cell and cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedCell {
    pub cell: usize,
    pub cluster: usize,
}

fn sample_bs(p: &SystemParams, seed: u64) -> Vec<Point2D> {
    sample_ppp(p.lambda_b, p.region_side, &mut stream(seed, STREAM_BS))
}

fn tagged_cluster_index(seed: u64, clusters: usize) -> usize {
    stream(seed, STREAM_TAG).random_range(0..clusters)
}

/// BS indices inside the central window, ordered by distance to the region centre
/// (index breaks ties).
fn interior_candidates(bs: &[Point2D], side: f64, fraction: f64) -> Vec<usize> {
    let c = Point2D::new(0.5 * side, 0.5 * side);
    let half = 0.5 * fraction * side;
    let mut idx: Vec<usize> = (0..bs.len())
        .filter(|&i| (bs[i].x - c.x).abs() <= half && (bs[i].y - c.y).abs() <= half)
        .collect();
    idx.sort_by(|&a, &b| bs[a].dist2(&c).total_cmp(&bs[b].dist2(&c)).then(a.cmp(&b)));
    idx
}

impl NetworkRealization {
    /// Samples every node in the region. Intended for tests, dumps and small
    /// regions; Monte-Carlo runs use [`tagged_sample`].
    pub fn sample(p: &SystemParams, seed: u64) -> Self {
        let bs = sample_bs(p, seed);
        let tiling = Tiling::new(p.lambda_b, p.region_side);
        let mut users = Vec::new();
        let mut attackers = Vec::new();
        for t in 0..tiling.count() {
            users.extend(tiling.sample(p.lambda_u, t, seed, STREAM_USER_TILE));
            attackers.extend(tiling.sample(p.lambda_e, t, seed, STREAM_ATTACKER_TILE));
        }
        let pow = RatioPow::new(p.beta());
        let clusters = associate_and_cluster(&bs, &users, p.clusters, seed)
            .into_iter()
            .enumerate()
            .map(|(k, cell)| {
                cell.map(|pairs| {
                    pairs
                        .into_iter()
                        .map(|(u0, u1)| order_in_cell(u0, u1, k, &bs, &pow))
                        .collect()
                })
            })
            .collect();
        NetworkRealization {
            attacker_points: carve_holes(&attackers, &bs, p.r0),
            bs_points: bs,
            clusters,
            region_side: p.region_side,
            seed,
        }
    }

    /// Usable cell whose BS lies in the central window and is closest to the centre.
    pub fn select_tagged_cell(&self, interior_fraction: f64) -> Result<TaggedCell> {
        let n_clusters = self
            .clusters
            .iter()
            .flatten()
            .map(|c| c.len())
            .next()
            .unwrap_or(1);
        for k in interior_candidates(&self.bs_points, self.region_side, interior_fraction) {
            if self.clusters[k].is_some() {
                return Ok(TaggedCell {
                    cell: k,
                    cluster: tagged_cluster_index(self.seed, n_clusters),
                });
            }
        }
        Err(Error::RealizationRejected(
            "no usable cell inside the interior window".into(),
        ))
    }

    /// Text dump: one line per node, coordinates in metres with 6 decimals.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "realization seed={} side={:.6} bs={} attackers={}",
            self.seed,
            self.region_side,
            self.bs_points.len(),
            self.attacker_points.len()
        );
        for b in &self.bs_points {
            let _ = writeln!(s, "bs {:.6} {:.6}", b.x, b.y);
        }
        for (k, cell) in self.clusters.iter().enumerate() {
            if let Some(pairs) = cell {
                for (j, (c, u)) in pairs.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "cluster {k} {j} {:.6} {:.6} {:.6} {:.6}",
                        c.x, c.y, u.x, u.y
                    );
                }
            }
        }
        for a in &self.attacker_points {
            let _ = writeln!(s, "attacker {:.6} {:.6}", a.x, a.y);
        }
        s
    }
}

fn order_in_cell(
    u0: Point2D,
    u1: Point2D,
    serving: usize,
    bs: &[Point2D],
    pow: &RatioPow,
) -> (Point2D, Point2D) {
    let s0 = statistic_with_serving(&u0, serving, bs, pow);
    let s1 = statistic_with_serving(&u1, serving, bs, pow);
    if s0 >= s1 {
        (u0, u1)
    } else {
        (u1, u0)
    }
}

/// Geometry of the tagged cluster: what the SINR evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedGeometry {
    pub tagged: TaggedCell,
    pub central: Point2D,
    pub second: Point2D,
    pub s_central: f64,
    pub s_second: f64,
    /// Smallest attacker interference ratio `sum_{l != k} (r_k / r_l)^beta`, or
    /// `None` when no attacker survives.
    pub best_attacker_ratio: Option<f64>,
}

impl NetworkRealization {
    /// Tagged-cluster geometry computed from the full realization.
    pub fn tagged_geometry(&self, p: &SystemParams, interior_fraction: f64) -> Result<TaggedGeometry> {
        if self.bs_points.len() < 2 {
            return Err(Error::RealizationRejected("fewer than 2 base stations".into()));
        }
        let tagged = self.select_tagged_cell(interior_fraction)?;
        let pairs = self.clusters[tagged.cell].as_ref().expect("usable cell");
        let (central, second) = pairs[tagged.cluster];
        let pow = RatioPow::new(p.beta());
        let bs = &self.bs_points;
        let best = self
            .attacker_points
            .iter()
            .map(|a| interference_ratio_at(a, tagged.cell, bs, &pow))
            .min_by(|a, b| a.total_cmp(b));
        Ok(TaggedGeometry {
            tagged,
            central,
            second,
            s_central: statistic_with_serving(&central, tagged.cell, bs, &pow),
            s_second: statistic_with_serving(&second, tagged.cell, bs, &pow),
            best_attacker_ratio: best,
        })
    }
}

/// Tiles that may contain points of cell `k`, in ascending tile order. A tile is
/// dropped when all four corners are strictly closer to a single other BS, which
/// puts the whole (convex) tile in that BS's half-plane.
fn cell_tiles(k: usize, index: &BsIndex, tiling: &Tiling) -> Vec<usize> {
    let bs = index.points();
    let start = tiling.tile_of(&bs[k]);
    let mut seen = vec![false; tiling.count()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let n = tiling.per_side as isize;
    while let Some(t) = queue.pop_front() {
        let corners = tiling.corners(t);
        let excluded = corners.iter().any(|c| {
            let (l, _) = index.nearest(c).expect("non-empty");
            l != k && corners.iter().all(|q| q.dist2(&bs[l]) < q.dist2(&bs[k]))
        });
        if excluded && t != start {
            continue;
        }
        out.push(t);
        let (ix, iy) = ((t % tiling.per_side) as isize, (t / tiling.per_side) as isize);
        for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (x, y) = (ix + dx, iy + dy);
            if x >= 0 && y >= 0 && x < n && y < n {
                let nt = (y * n + x) as usize;
                if !seen[nt] {
                    seen[nt] = true;
                    queue.push_back(nt);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn users_of_cell(
    k: usize,
    tiles: &[usize],
    index: &BsIndex,
    tiling: &Tiling,
    p: &SystemParams,
    seed: u64,
) -> Vec<Point2D> {
    let mut out = Vec::new();
    for &t in tiles {
        for u in tiling.sample(p.lambda_u, t, seed, STREAM_USER_TILE) {
            if index.nearest(&u).map(|(i, _)| i) == Some(k) {
                out.push(u);
            }
        }
    }
    out
}

/// Samples only what the tagged cluster and the best attacker depend on. Produces
/// the same [`TaggedGeometry`] as the full realization for the same seed.
pub fn tagged_sample(
    p: &SystemParams,
    seed: u64,
    interior_fraction: f64,
) -> Result<TaggedGeometry> {
    let bs = sample_bs(p, seed);
    if bs.len() < 2 {
        return Err(Error::RealizationRejected("fewer than 2 base stations".into()));
    }
    let index = BsIndex::new(&bs, p.region_side);
    let tiling = Tiling::new(p.lambda_b, p.region_side);
    let pow = RatioPow::new(p.beta());

    let mut chosen = None;
    for k in interior_candidates(&bs, p.region_side, interior_fraction) {
        let tiles = cell_tiles(k, &index, &tiling);
        let members = users_of_cell(k, &tiles, &index, &tiling, p, seed);
        if let Some(pairs) = draw_clusters(&members, p.clusters, seed, k) {
            chosen = Some((k, tiles, pairs));
            break;
        }
    }
    let (k, tiles, pairs) = chosen.ok_or_else(|| {
        Error::RealizationRejected("no usable cell inside the interior window".into())
    })?;
    let cluster = tagged_cluster_index(seed, p.clusters);
    let (central, second) = order_in_cell(pairs[cluster].0, pairs[cluster].1, k, &bs, &pow);

    let best_attacker_ratio = best_attacker(k, &tiles, &index, &tiling, p, seed, &pow);
    Ok(TaggedGeometry {
        tagged: TaggedCell { cell: k, cluster },
        central,
        second,
        s_central: statistic_with_serving(&central, k, &bs, &pow),
        s_second: statistic_with_serving(&second, k, &bs, &pow),
        best_attacker_ratio,
    })
}

/// Minimum attacker interference ratio relative to BS `k`.
///
/// Attackers outside cell `k` have a ratio of at least 1 (their nearest BS alone
/// contributes `>= 1`), so if the tiles covering cell `k` already hold an attacker
/// below 1 nothing else needs sampling.
fn best_attacker(
    k: usize,
    cell_tiles: &[usize],
    index: &BsIndex,
    tiling: &Tiling,
    p: &SystemParams,
    seed: u64,
    pow: &RatioPow,
) -> Option<f64> {
    if !(p.lambda_e > 0.0) {
        return None;
    }
    let bs = index.points();
    let mut best = f64::INFINITY;
    let scan = |tiles: &mut dyn Iterator<Item = usize>, best: &mut f64| {
        for t in tiles {
            let mut cands = tiling.sample(p.lambda_e, t, seed, STREAM_ATTACKER_TILE);
            cands.retain(|a| !index.any_within(a, p.r0));
            // nearer attackers first: they tend to have small ratios and tighten pruning
            cands.sort_by(|a, b| a.dist2(&bs[k]).total_cmp(&b.dist2(&bs[k])));
            for a in cands {
                let d2k = a.dist2(&bs[k]);
                let (nn, nn_d2) = index.nearest(&a).expect("non-empty");
                if nn != k && pow.apply(d2k / nn_d2) >= *best {
                    continue;
                }
                if index.local_ratio_sum(&a, d2k, k, pow) > *best {
                    continue;
                }
                if let Some(q) = interference_ratio_bounded(&a, k, bs, pow, *best) {
                    if q < *best {
                        *best = q;
                    }
                }
            }
        }
    };
    scan(&mut cell_tiles.iter().copied(), &mut best);
    if best >= 1.0 {
        let covered: std::collections::HashSet<usize> = cell_tiles.iter().copied().collect();
        scan(
            &mut (0..tiling.count()).filter(|t| !covered.contains(t)),
            &mut best,
        );
    }
    best.is_finite().then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn small_params() -> SystemParams {
        SystemParams {
            region_side: 600.0,
            lambda_b: 1e-4,
            lambda_u: 1e-2,
            lambda_e: 3e-4,
            ..SystemParams::default()
        }
    }

    #[test]
    fn empty_process() {
        let mut rng = stream(1, 0);
        assert!(sample_ppp(0.0, 3000.0, &mut rng).is_empty());
    }

    #[test]
    fn ppp_mean_count() {
        let n = 1000;
        let total: usize = (0..n)
            .map(|s| sample_ppp(1e-4, 3000.0, &mut stream(s, 0)).len())
            .sum();
        let mean = total as f64 / n as f64;
        // standard error of the mean is 30/sqrt(1000); 3 sigma of a single draw is 90
        assert!((mean - 900.0).abs() < 90.0 / (n as f64).sqrt() * 3.0 + 1.0, "{mean}");
    }

    #[test]
    fn subrectangle_counts() {
        let (lam, side) = (1e-4, 3000.0);
        let area = 1000.0 * 500.0;
        let draws = 1000;
        let inside: usize = (0..draws)
            .map(|s| {
                sample_ppp(lam, side, &mut stream(s, 7))
                    .iter()
                    .filter(|p| p.x < 1000.0 && p.y < 500.0)
                    .count()
            })
            .sum();
        let mean = inside as f64 / draws as f64;
        assert!((mean - lam * area).abs() <= 4.0 * (lam * area).sqrt());
    }

    #[test]
    fn ppp_deterministic() {
        let a = sample_ppp(1e-4, 3000.0, &mut stream(42, 0));
        let b = sample_ppp(1e-4, 3000.0, &mut stream(42, 0));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.x >= 0.0 && p.x < 3000.0 && p.y >= 0.0 && p.y < 3000.0));
    }

    #[test]
    fn exact_fit_cluster() {
        let bs = vec![Point2D::new(0.0, 0.0)];
        let users: Vec<_> = (0..10).map(|i| Point2D::new(i as f64 + 1.0, 0.0)).collect();
        let cells = associate_and_cluster(&bs, &users, 5, 3);
        let pairs = cells[0].as_ref().unwrap();
        let mut all: Vec<f64> = pairs.iter().flat_map(|(a, b)| [a.x, b.x]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (1..=10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn discards_surplus_users() {
        let bs = vec![Point2D::new(0.0, 0.0)];
        let users: Vec<_> = (0..100).map(|i| Point2D::new(i as f64, 1.0)).collect();
        let pairs = associate_and_cluster(&bs, &users, 5, 9)[0].clone().unwrap();
        assert_eq!(pairs.len(), 5);
        let mut xs: Vec<f64> = pairs.iter().flat_map(|(a, b)| [a.x, b.x]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        assert_eq!(xs.len(), 10);
    }

    #[test]
    fn sparse_cell_flagged() {
        let bs = vec![Point2D::new(0.0, 0.0), Point2D::new(1000.0, 0.0)];
        let users: Vec<_> = (0..12).map(|i| Point2D::new(i as f64, 0.0)).collect();
        let cells = associate_and_cluster(&bs, &users, 5, 1);
        assert!(cells[0].is_some());
        assert!(cells[1].is_none());
    }

    #[test]
    fn association_matches_brute_force() {
        let bs = vec![Point2D::new(100.0, 500.0), Point2D::new(900.0, 500.0)];
        let users = sample_ppp(1e-3, 1000.0, &mut stream(5, 1));
        let index = BsIndex::new(&bs, 1000.0);
        for u in &users {
            let brute = if u.dist2(&bs[0]) <= u.dist2(&bs[1]) { 0 } else { 1 };
            assert_eq!(index.nearest(u).unwrap().0, brute);
            assert_eq!(nearest_brute(u, &bs), brute);
            assert_eq!(brute == 0, u.x <= 500.0);
        }
    }

    #[test]
    fn index_nearest_random() {
        let bs = sample_ppp(3e-4, 3000.0, &mut stream(11, 0));
        let index = BsIndex::new(&bs, 3000.0);
        let probes = sample_ppp(1e-4, 3000.0, &mut stream(12, 0));
        for q in &probes {
            let (i, d2) = index.nearest(q).unwrap();
            assert_eq!(i, nearest_brute(q, &bs));
            assert_eq!(d2, q.dist2(&bs[i]));
            let r = 25.0;
            assert_eq!(index.any_within(q, r), bs.iter().any(|b| q.dist(b) < r));
        }
    }

    #[test]
    fn dominant_user_is_central() {
        let bs = vec![Point2D::new(0.0, 0.0), Point2D::new(100.0, 0.0)];
        let near = Point2D::new(-5.0, 0.0);
        let far = Point2D::new(30.0, 0.0);
        assert_eq!(order_pair(far, near, &bs, 4.0).unwrap(), (near, far));
        assert_eq!(order_pair(near, far, &bs, 4.0).unwrap(), (near, far));
    }

    #[test]
    fn tie_keeps_first() {
        let bs = vec![Point2D::new(0.0, 0.0), Point2D::new(100.0, 0.0)];
        let u = Point2D::new(10.0, 3.0);
        let same = Point2D::new(10.0, 3.0);
        let (c, s) = order_pair(u, same, &bs, 4.0).unwrap();
        assert_eq!((c, s), (u, same));
    }

    #[test]
    fn order_needs_two_bs() {
        let bs = vec![Point2D::new(0.0, 0.0)];
        assert!(order_pair(Point2D::new(1.0, 0.0), Point2D::new(2.0, 0.0), &bs, 4.0).is_err());
    }

    #[test]
    fn order_pair_agrees_with_raw_statistic() {
        let mut rng = stream(77, 0);
        for _ in 0..1000 {
            let bs = sample_ppp_in_rect(2e-4, 0.0, 0.0, 500.0, 500.0, &mut rng);
            if bs.len() < 2 {
                continue;
            }
            let u0 = Point2D::new(500.0 * rng.random::<f64>(), 500.0 * rng.random::<f64>());
            let u1 = Point2D::new(500.0 * rng.random::<f64>(), 500.0 * rng.random::<f64>());
            let raw = |u: &Point2D| {
                let k = nearest_brute(u, &bs);
                let others: Vec<f64> = (0..bs.len()).filter(|&l| l != k).map(|l| u.dist(&bs[l])).collect();
                crate::sinr::ordering_statistic(u.dist(&bs[k]), &others, 4.0).unwrap()
            };
            let (c, _) = order_pair(u0, u1, &bs, 4.0).unwrap();
            let expect = if raw(&u0) >= raw(&u1) { u0 } else { u1 };
            assert_eq!(c, expect);
        }
    }

    #[test]
    fn holes_boundary_inclusive() {
        let bs = vec![Point2D::new(0.0, 0.0)];
        let att = vec![
            Point2D::new(3.0, 0.0),
            Point2D::new(0.0, 6.0),
            Point2D::new(-9.0, 0.0),
        ];
        let kept = carve_holes(&att, &bs, 6.0);
        assert_eq!(kept, vec![att[1], att[2]]);
        assert_eq!(carve_holes(&att, &bs, 0.0), att);
    }

    #[test]
    fn hole_survivor_count() {
        // widely spaced BSs so holes never overlap
        let bs: Vec<Point2D> = (0..5)
            .flat_map(|i| (0..5).map(move |j| Point2D::new(100.0 + 200.0 * i as f64, 100.0 + 200.0 * j as f64)))
            .collect();
        let (lam, side, r0) = (1e-3, 1000.0, 30.0);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|s| carve_holes(&sample_ppp(lam, side, &mut stream(s, 3)), &bs, r0).len())
            .sum();
        let mean = total as f64 / draws as f64;
        let expect = lam * (side * side - 25.0 * std::f64::consts::PI * r0 * r0);
        let se = (expect / draws as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "{mean} vs {expect}");
    }

    #[test]
    fn single_interior_bs_tagged() {
        let users: Vec<Point2D> = (0..10).map(|i| Point2D::new(1400.0 + i as f64, 1500.0)).collect();
        let bs = vec![Point2D::new(1500.0, 1500.0), Point2D::new(100.0, 100.0)];
        let real = NetworkRealization {
            clusters: associate_and_cluster(&bs, &users, 5, 4),
            bs_points: bs,
            attacker_points: vec![],
            region_side: 3000.0,
            seed: 4,
        };
        let t = real.select_tagged_cell(1.0 / 3.0).unwrap();
        assert_eq!(t.cell, 0);
        assert!(t.cluster < 5);
    }

    #[test]
    fn no_interior_bs_rejected() {
        let bs = vec![Point2D::new(10.0, 10.0), Point2D::new(2990.0, 2990.0)];
        let users: Vec<Point2D> = (0..40).map(|i| Point2D::new(5.0 + i as f64, 5.0)).collect();
        let real = NetworkRealization {
            clusters: associate_and_cluster(&bs, &users, 5, 4),
            bs_points: bs,
            attacker_points: vec![],
            region_side: 3000.0,
            seed: 4,
        };
        assert!(matches!(
            real.select_tagged_cell(1.0 / 3.0),
            Err(Error::RealizationRejected(_))
        ));
    }

    #[test]
    fn full_realization_invariants() {
        let p = small_params();
        for seed in 0..5 {
            let real = NetworkRealization::sample(&p, seed);
            let r2 = p.r0 * p.r0;
            for a in &real.attacker_points {
                assert!(real.bs_points.iter().all(|b| a.dist2(b) >= r2));
            }
            let mut seen = Vec::new();
            for (k, cell) in real.clusters.iter().enumerate() {
                for (c, s) in cell.iter().flatten() {
                    assert_eq!(nearest_brute(c, &real.bs_points), k);
                    assert_eq!(nearest_brute(s, &real.bs_points), k);
                    assert!(user_statistic(c, &real.bs_points, p.alpha) >= user_statistic(s, &real.bs_points, p.alpha));
                    seen.push((c.x.to_bits(), c.y.to_bits()));
                    seen.push((s.x.to_bits(), s.y.to_bits()));
                }
            }
            let n = seen.len();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), n, "a user appears in two clusters");
        }
    }

    #[test]
    fn attacker_stream_independent_of_bs_and_users() {
        let p = small_params();
        let a = NetworkRealization::sample(&p, 3);
        let q = SystemParams { lambda_e: 2.0 * p.lambda_e, ..p.clone() };
        let b = NetworkRealization::sample(&q, 3);
        assert_eq!(a.bs_points, b.bs_points);
        assert_eq!(a.clusters, b.clusters);
    }

    #[test]
    fn fast_path_matches_full() {
        let p = small_params();
        let mut matched = 0;
        for seed in 0..40 {
            let full = NetworkRealization::sample(&p, seed).tagged_geometry(&p, 1.0 / 3.0);
            let fast = tagged_sample(&p, seed, 1.0 / 3.0);
            match (full, fast) {
                (Ok(f), Ok(g)) => {
                    assert_eq!(f, g, "seed {seed}");
                    matched += 1;
                }
                (Err(_), Err(_)) => {}
                (f, g) => panic!("seed {seed}: {f:?} vs {g:?}"),
            }
        }
        assert!(matched > 20);
    }

    #[test]
    fn fast_path_matches_full_dense_attackers() {
        let p = SystemParams {
            lambda_e: 0.01,
            r0: 0.0,
            ..small_params()
        };
        for seed in 0..5 {
            let f = NetworkRealization::sample(&p, seed).tagged_geometry(&p, 1.0 / 3.0);
            let g = tagged_sample(&p, seed, 1.0 / 3.0);
            assert_eq!(f.ok(), g.ok(), "seed {seed}");
        }
    }

    #[test]
    fn dump_format() {
        let p = SystemParams { region_side: 300.0, ..small_params() };
        let real = NetworkRealization::sample(&p, 1);
        let text = real.dump();
        assert!(text.starts_with("realization seed=1 side=300.000000"));
        let bs_line = text.lines().find(|l| l.starts_with("bs ")).unwrap();
        let coord = bs_line.split(' ').nth(1).unwrap();
        assert_eq!(coord.split('.').nth(1).unwrap().len(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn holes_exact(seed in 0u64..1000, r0 in 0.0f64..80.0) {
            let bs = sample_ppp(1e-4, 1000.0, &mut stream(seed, 0));
            let att = sample_ppp(1e-3, 1000.0, &mut stream(seed, 1));
            let kept = carve_holes(&att, &bs, r0);
            for a in &kept {
                prop_assert!(bs.iter().all(|b| a.dist(b) >= r0 * (1.0 - 1e-12)));
            }
            let index = BsIndex::new(&bs, 1000.0);
            let via_index: Vec<Point2D> = att.iter().copied().filter(|a| !index.any_within(a, r0)).collect();
            prop_assert_eq!(kept, via_index);
        }
    }
}
