//! Min-sum loopy belief propagation on the 4-connected pixel grid with a
//! truncated-absolute smoothness prior.
//!
//! Messages and beliefs are costs; the MAP label at a pixel is the argmin
//! of its belief. Message vectors are normalized so their minimum entry
//! is zero, which leaves the argmin structure unchanged.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cost::CostVolume;
use crate::error::{Error, Result};

/// Truncated-absolute prior: `lambda * min(|l_a - l_b|, truncation)`,
/// with label distance measured in label-index steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    truncation: f64,
    lambda: f64,
}

impl PriorParams {
    pub fn new(truncation: f64, lambda: f64) -> Result<Self> {
        if !truncation.is_finite() || truncation <= 0.0 {
            return Err(Error::Domain(format!(
                "truncation must be finite and positive, got {truncation}"
            )));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Domain(format!(
                "smoothness weight must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(Self { truncation, lambda })
    }

    #[inline]
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Pairwise smoothness cost between two label indices.
#[inline]
pub fn pairwise_cost(l_a: usize, l_b: usize, prior: &PriorParams) -> f64 {
    let d = (l_a as f64 - l_b as f64).abs();
    prior.lambda * d.min(prior.truncation)
}

/// Message update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// All messages recomputed from the previous iteration's values.
    Synchronous,
    /// Checkerboard in-place sweeps; within one color class results are
    /// independent of pixel order.
    RedBlack,
}

/// Per-pixel label-index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Structural(format!(
                "label map length {} does not match {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// Sides of a pixel; the incoming message slot `side` of pixel `p` holds
/// the message from the neighbor on that side.
pub const SIDE_LEFT: usize = 0;
pub const SIDE_RIGHT: usize = 1;
pub const SIDE_UP: usize = 2;
pub const SIDE_DOWN: usize = 3;

const SIDE_OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[inline]
fn opposite(side: usize) -> usize {
    side ^ 1
}

/// All directed-edge message vectors on the grid, plus the iteration
/// counter. Slots for edges that leave the grid stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageField {
    width: usize,
    height: usize,
    label_count: usize,
    iteration: usize,
    data: Vec<f64>,
}

impl MessageField {
    pub fn zeros(width: usize, height: usize, label_count: usize) -> Self {
        Self {
            width,
            height,
            label_count,
            iteration: 0,
            data: vec![0.0; 4 * width * height * label_count],
        }
    }

    #[inline]
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    #[inline]
    fn base(&self, side: usize, x: usize, y: usize) -> usize {
        ((side * self.height + y) * self.width + x) * self.label_count
    }

    /// Message arriving at `(x, y)` from the neighbor on `side`.
    #[inline]
    pub fn incoming(&self, side: usize, x: usize, y: usize) -> &[f64] {
        let b = self.base(side, x, y);
        &self.data[b..b + self.label_count]
    }

    pub fn set_incoming(&mut self, side: usize, x: usize, y: usize, values: &[f64]) {
        let b = self.base(side, x, y);
        self.data[b..b + self.label_count].copy_from_slice(values);
    }

    /// Data cost plus all incoming messages at one pixel (the belief).
    pub fn belief(&self, costs: &CostVolume, x: usize, y: usize) -> Vec<f64> {
        let mut b: Vec<f64> = costs.costs_at(x, y).to_vec();
        for side in 0..4 {
            let m = self.incoming(side, x, y);
            for (bi, mi) in b.iter_mut().zip(m) {
                *bi += mi;
            }
        }
        b
    }
}

/// O(L^2) reference message kernel: `work` holds the sending pixel's data
/// cost plus its incoming messages (excluding the recipient's).
pub fn message_min_naive(work: &[f64], prior: &PriorParams, normalize: bool) -> Vec<f64> {
    let l_count = work.len();
    let mut out = Vec::with_capacity(l_count);
    for fq in 0..l_count {
        let mut best = f64::INFINITY;
        for (fp, w) in work.iter().enumerate() {
            let c = w + pairwise_cost(fp, fq, prior);
            if c < best {
                best = c;
            }
        }
        out.push(best);
    }
    if normalize {
        normalize_min_zero(&mut out);
    }
    out
}

/// O(L) message kernel for the truncated-linear prior via the
/// lower-envelope (distance transform) recurrence, capped at the global
/// minimum plus `lambda * truncation`.
pub fn message_min_fast(work: &[f64], prior: &PriorParams, normalize: bool) -> Vec<f64> {
    let l_count = work.len();
    let lambda = prior.lambda;
    if lambda == 0.0 {
        if normalize {
            return vec![0.0; l_count];
        }
        let m = work.iter().cloned().fold(f64::INFINITY, f64::min);
        return vec![m; l_count];
    }
    let mut out: Vec<f64> = work.to_vec();
    for i in 1..l_count {
        let c = out[i - 1] + lambda;
        if c < out[i] {
            out[i] = c;
        }
    }
    for i in (0..l_count - 1).rev() {
        let c = out[i + 1] + lambda;
        if c < out[i] {
            out[i] = c;
        }
    }
    let cap = out.iter().cloned().fold(f64::INFINITY, f64::min) + lambda * prior.truncation;
    for v in out.iter_mut() {
        if *v > cap {
            *v = cap;
        }
    }
    if normalize {
        normalize_min_zero(&mut out);
    }
    out
}

fn normalize_min_zero(v: &mut [f64]) {
    let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
    for x in v.iter_mut() {
        *x -= m;
    }
}

fn assemble_work(
    costs: &CostVolume,
    field: &MessageField,
    x: usize,
    y: usize,
    exclude_side: usize,
) -> Vec<f64> {
    let mut work: Vec<f64> = costs.costs_at(x, y).to_vec();
    for side in 0..4 {
        if side == exclude_side {
            continue;
        }
        let m = field.incoming(side, x, y);
        for (w, mi) in work.iter_mut().zip(m) {
            *w += mi;
        }
    }
    work
}

fn check_edge(costs: &CostVolume, p: (usize, usize), q: (usize, usize)) -> Result<usize> {
    let (w, h) = (costs.width(), costs.height());
    if p.0 >= w || p.1 >= h || q.0 >= w || q.1 >= h {
        return Err(Error::Usage(format!(
            "edge {p:?} -> {q:?} outside {w}x{h} grid"
        )));
    }
    let dx = q.0 as isize - p.0 as isize;
    let dy = q.1 as isize - p.1 as isize;
    SIDE_OFFSETS
        .iter()
        .position(|&o| o == (dx, dy))
        .ok_or_else(|| Error::Usage(format!("{p:?} and {q:?} are not 4-neighbors")))
}

/// Message from pixel `p` to its 4-neighbor `q`, via the O(L^2) kernel.
pub fn update_message_naive(
    costs: &CostVolume,
    field: &MessageField,
    prior: &PriorParams,
    p: (usize, usize),
    q: (usize, usize),
) -> Result<Vec<f64>> {
    let side = check_edge(costs, p, q)?;
    let work = assemble_work(costs, field, p.0, p.1, side);
    Ok(message_min_naive(&work, prior, true))
}

/// Message from pixel `p` to its 4-neighbor `q`, via the O(L) kernel.
/// Identical contract to [`update_message_naive`].
pub fn update_message_fast(
    costs: &CostVolume,
    field: &MessageField,
    prior: &PriorParams,
    p: (usize, usize),
    q: (usize, usize),
) -> Result<Vec<f64>> {
    let side = check_edge(costs, p, q)?;
    let work = assemble_work(costs, field, p.0, p.1, side);
    Ok(message_min_fast(&work, prior, true))
}

/// Run diagnostics: iterations actually executed, the final maximum
/// absolute message change, and the energy of the output labeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpDiagnostics {
    pub iterations: usize,
    pub final_delta: f64,
    pub energy: f64,
}

/// Energy of a labeling: data costs plus the truncated-absolute prior
/// over all 4-neighbor edges.
pub fn labeling_energy(labels: &LabelMap, costs: &CostVolume, prior: &PriorParams) -> Result<f64> {
    if labels.width() != costs.width() || labels.height() != costs.height() {
        return Err(Error::Structural(format!(
            "label map {}x{} and cost volume {}x{} disagree",
            labels.width(),
            labels.height(),
            costs.width(),
            costs.height()
        )));
    }
    let (w, h) = (costs.width(), costs.height());
    let mut e = 0.0;
    for y in 0..h {
        for x in 0..w {
            let l = labels.at(x, y);
            if l >= costs.label_count() {
                return Err(Error::Structural(format!(
                    "label {l} at ({x},{y}) outside {} labels",
                    costs.label_count()
                )));
            }
            e += costs.at(x, y, l);
            if x + 1 < w {
                e += pairwise_cost(l, labels.at(x + 1, y), prior);
            }
            if y + 1 < h {
                e += pairwise_cost(l, labels.at(x, y + 1), prior);
            }
        }
    }
    Ok(e)
}

/// Min-sum BP until the maximum message change drops below
/// `convergence_eps` or `max_iters` is reached. Ties in the belief argmin
/// break toward the smaller label index.
pub fn run_bp(
    costs: &CostVolume,
    prior: &PriorParams,
    schedule: Schedule,
    max_iters: usize,
    convergence_eps: f64,
) -> Result<(LabelMap, BpDiagnostics)> {
    run_bp_opts(costs, prior, schedule, max_iters, convergence_eps, true)
}

/// [`run_bp`] with message normalization switchable; normalization does
/// not change the output labeling, only keeps message magnitudes bounded.
pub fn run_bp_opts(
    costs: &CostVolume,
    prior: &PriorParams,
    schedule: Schedule,
    max_iters: usize,
    convergence_eps: f64,
    normalize: bool,
) -> Result<(LabelMap, BpDiagnostics)> {
    if max_iters == 0 {
        return Err(Error::Usage("max_iters must be at least 1".into()));
    }
    if !convergence_eps.is_finite() || convergence_eps < 0.0 {
        return Err(Error::Usage(format!(
            "convergence_eps must be finite and non-negative, got {convergence_eps}"
        )));
    }
    let (w, h) = (costs.width(), costs.height());
    if w == 0 || h == 0 || costs.label_count() == 0 {
        return Err(Error::Structural("empty cost volume".into()));
    }
    let mut field = MessageField::zeros(w, h, costs.label_count());
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        delta = match schedule {
            Schedule::Synchronous => sweep_synchronous(costs, prior, &mut field, normalize),
            Schedule::RedBlack => {
                let d0 = sweep_color(costs, prior, &mut field, 0, normalize);
                let d1 = sweep_color(costs, prior, &mut field, 1, normalize);
                d0.max(d1)
            }
        };
        field.iteration += 1;
        iterations += 1;
        if delta < convergence_eps {
            break;
        }
    }
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let belief = field.belief(costs, x, y);
            let mut best = 0usize;
            let mut best_cost = belief[0];
            for (l, b) in belief.iter().enumerate().skip(1) {
                if *b < best_cost {
                    best_cost = *b;
                    best = l;
                }
            }
            labels.push(best);
        }
    }
    let map = LabelMap::new(w, h, labels)?;
    let energy = labeling_energy(&map, costs, prior)?;
    Ok((
        map,
        BpDiagnostics {
            iterations,
            final_delta: delta,
            energy,
        },
    ))
}

/// One full synchronous sweep; reads the old field, writes a fresh one.
fn sweep_synchronous(
    costs: &CostVolume,
    prior: &PriorParams,
    field: &mut MessageField,
    normalize: bool,
) -> f64 {
    let (w, h) = (costs.width(), costs.height());
    let mut next = field.clone();
    let mut delta: f64 = 0.0;
    for y in 0..h {
        for x in 0..w {
            delta = delta.max(send_from_pixel(
                costs, prior, field, &mut next, x, y, normalize,
            ));
        }
    }
    next.iteration = field.iteration;
    *field = next;
    delta
}

/// In-place sweep over one checkerboard color. Messages written go to
/// pixels of the other color, so reads and writes never overlap within
/// the sweep.
fn sweep_color(
    costs: &CostVolume,
    prior: &PriorParams,
    field: &mut MessageField,
    color: usize,
    normalize: bool,
) -> f64 {
    let (w, h) = (costs.width(), costs.height());
    let src = field.clone();
    let mut delta: f64 = 0.0;
    for y in 0..h {
        for x in 0..w {
            if (x + y) % 2 != color {
                continue;
            }
            delta = delta.max(send_from_pixel(costs, prior, &src, field, x, y, normalize));
        }
    }
    delta
}

/// Computes all outgoing messages of one pixel and writes them into the
/// neighbors' incoming slots of `dst`. Returns the largest entry change.
fn send_from_pixel(
    costs: &CostVolume,
    prior: &PriorParams,
    src: &MessageField,
    dst: &mut MessageField,
    x: usize,
    y: usize,
    normalize: bool,
) -> f64 {
    let (w, h) = (costs.width(), costs.height());
    let mut total: Vec<f64> = costs.costs_at(x, y).to_vec();
    for side in 0..4 {
        let m = src.incoming(side, x, y);
        for (t, mi) in total.iter_mut().zip(m) {
            *t += mi;
        }
    }
    let mut delta: f64 = 0.0;
    let mut work = vec![0.0; total.len()];
    for (side, (dx, dy)) in SIDE_OFFSETS.iter().enumerate() {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
            continue;
        }
        let excluded = src.incoming(side, x, y);
        for ((wk, t), m) in work.iter_mut().zip(&total).zip(excluded) {
            *wk = t - m;
        }
        let msg = message_min_fast(&work, prior, normalize);
        let (nx, ny) = (nx as usize, ny as usize);
        let old = dst.incoming(opposite(side), nx, ny);
        for (o, n) in old.iter().zip(&msg) {
            delta = delta.max((o - n).abs());
        }
        dst.set_incoming(opposite(side), nx, ny, &msg);
    }
    delta
}
