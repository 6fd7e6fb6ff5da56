//! Deterministic, probabilistic and feedback logic gates.
//!
//! Gene payload layout (all bytes read in order):
//!
//! | field            | bytes            | decoding                         |
//! |------------------|------------------|----------------------------------|
//! | input count      | 1                | `1 + b % 4`                      |
//! | output count     | 1                | `1 + b % 4`                      |
//! | input addresses  | nIns             | `b % 16`                         |
//! | output addresses | nOuts            | `b % 16`                         |
//! | positive source  | 1 (feedback)     | `b % 16`                         |
//! | negative source  | 1 (feedback)     | `b % 16`                         |
//! | buffer depth     | 1 (feedback)     | `1 + b % 4`                      |
//! | step sizes       | 4 (feedback)     | `b / 255 * 0.5`                  |
//! | table            | see below        |                                  |
//!
//! Deterministic tables hold one byte per input pattern (`b % 2^nOuts`).
//! Probabilistic and feedback tables hold `2^nOuts` bytes per input pattern,
//! normalised as `(b_k + 1) / sum_j (b_j + 1)`.
//!
//! Input patterns read the first wired input as the most significant bit;
//! output patterns write their most significant bit to the first output.

use std::fmt::Write as _;

use rand::Rng;

use crate::genome::{GateKind, GeneSpan};

pub const N_NODES: usize = 16;
pub const MAX_ARITY: usize = 4;
pub const MAX_DEPTH: usize = 4;
pub const PROB_MIN: f64 = 0.01;
pub const PROB_MAX: f64 = 0.99;
pub const MAX_DELTA: f64 = 0.5;

fn arity(b: u8) -> usize {
    1 + (b as usize % MAX_ARITY)
}

/// Number of payload bytes a gene of `kind` occupies, given its first two
/// payload bytes.
pub fn payload_len(kind: GateKind, n_ins_byte: u8, n_outs_byte: u8) -> usize {
    let n_in = arity(n_ins_byte);
    let n_out = arity(n_outs_byte);
    let rows = 1 << n_in;
    match kind {
        GateKind::Deterministic => 2 + n_in + n_out + rows,
        GateKind::Probabilistic => 2 + n_in + n_out + rows * (1 << n_out),
        GateKind::Feedback => 2 + n_in + n_out + 3 + MAX_DEPTH + rows * (1 << n_out),
    }
}

/// Node addresses a gate reads from and writes to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wiring {
    inputs: [u8; MAX_ARITY],
    outputs: [u8; MAX_ARITY],
    n_in: u8,
    n_out: u8,
}

impl Wiring {
    pub fn new(inputs: &[u8], outputs: &[u8]) -> Self {
        assert!((1..=MAX_ARITY).contains(&inputs.len()));
        assert!((1..=MAX_ARITY).contains(&outputs.len()));
        assert!(inputs.iter().chain(outputs).all(|&a| (a as usize) < N_NODES));
        let mut w = Wiring {
            inputs: [0; MAX_ARITY],
            outputs: [0; MAX_ARITY],
            n_in: inputs.len() as u8,
            n_out: outputs.len() as u8,
        };
        w.inputs[..inputs.len()].copy_from_slice(inputs);
        w.outputs[..outputs.len()].copy_from_slice(outputs);
        w
    }

    pub fn inputs(&self) -> &[u8] {
        &self.inputs[..self.n_in as usize]
    }

    pub fn outputs(&self) -> &[u8] {
        &self.outputs[..self.n_out as usize]
    }

    pub fn n_rows(&self) -> usize {
        1 << self.n_in
    }

    pub fn n_cols(&self) -> usize {
        1 << self.n_out
    }

    #[inline]
    pub fn input_pattern(&self, image: u16) -> usize {
        self.inputs()
            .iter()
            .fold(0, |acc, &a| (acc << 1) | ((image >> a) & 1) as usize)
    }

    pub fn output_mask(&self, pattern: usize) -> u16 {
        let n = self.n_out as usize;
        self.outputs()
            .iter()
            .enumerate()
            .filter(|(j, _)| (pattern >> (n - 1 - j)) & 1 == 1)
            .fold(0u16, |m, (_, &a)| m | (1 << a))
    }

    fn column_masks(&self) -> Vec<u16> {
        (0..self.n_cols()).map(|c| self.output_mask(c)).collect()
    }
}

/// Row-stochastic matrix: rows are input patterns, columns output patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Self {
        assert_eq!(p.len(), rows * cols);
        Self { rows, cols, p }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols));
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    /// Normalises each row of genome bytes as `(b + 1) / sum(b + 1)`.
    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Self {
        assert_eq!(bytes.len(), rows * cols);
        let mut p = Vec::with_capacity(rows * cols);
        for row in bytes.chunks_exact(cols) {
            let total: f64 = row.iter().map(|&b| b as f64 + 1.0).sum();
            p.extend(row.iter().map(|&b| (b as f64 + 1.0) / total));
        }
        Self::new(rows, cols, p)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, o: usize) -> f64 {
        self.p[i * self.cols + o]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Inverse-CDF lookup of `u` in `[0, 1)` over row `i`.
    #[inline]
    pub fn sample_with(&self, i: usize, u: f64) -> usize {
        let row = self.row(i);
        let mut acc = 0.0;
        for (o, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return o;
            }
        }
        // u fell into the rounding gap above the last cumulative sum
        row.iter().rposition(|&p| p > 0.0).unwrap_or(self.cols - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        self.sample_with(i, rng.random::<f64>())
    }

    /// Mutual information in bits between a uniformly distributed input row
    /// and the output column it produces.
    pub fn mutual_information(&self) -> f64 {
        let r = self.rows as f64;
        let mut marginal = vec![0.0; self.cols];
        let mut conditional = 0.0;
        for i in 0..self.rows {
            let row = self.row(i);
            for (m, &p) in marginal.iter_mut().zip(row) {
                *m += p / r;
            }
            conditional += entropy(row) / r;
        }
        (entropy(&marginal) - conditional).max(0.0)
    }

    /// Adds the buffered adjustments to their entries, then clamps and
    /// renormalises each touched row. Zero adjustments touch nothing. `adjustments` holds
    /// `(row, column, signed amount)`.
    pub fn adjust(&mut self, adjustments: &[(usize, usize, f64)]) {
        let cols = self.cols;
        for &(i, o, amount) in adjustments {
            if amount != 0.0 {
                self.p[i * cols + o] += amount;
            }
        }
        // Renormalise each touched row once, in order of first appearance.
        for (k, &(i, _, amount)) in adjustments.iter().enumerate() {
            if amount == 0.0 || adjustments[..k].iter().any(|a| a.0 == i && a.2 != 0.0) {
                continue;
            }
            let mut mask = 0u32;
            for a in &adjustments[k..] {
                if a.0 == i && a.2 != 0.0 {
                    mask |= 1 << a.1;
                }
            }
            clamp_renormalize(&mut self.p[i * cols..(i + 1) * cols], mask);
        }
    }
}

fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Scales the entries not in `pinned` so the row sums to one.
fn rescale_free(row: &mut [f64], pinned: u32) {
    let is_free = |c: usize| pinned & (1 << c) == 0;
    let (mut fixed, mut free, mut n_free) = (0.0, 0.0, 0usize);
    for (c, &x) in row.iter().enumerate() {
        if is_free(c) {
            free += x;
            n_free += 1;
        } else {
            fixed += x;
        }
    }
    if n_free == 0 {
        return;
    }
    let target = 1.0 - fixed;
    let scale = target / free;
    for (c, x) in row.iter_mut().enumerate() {
        if is_free(c) {
            *x = if free > 0.0 { *x * scale } else { target / n_free as f64 };
        }
    }
}

/// Clamp targeted entries to `[PROB_MIN, PROB_MAX]`, rescale the untouched
/// entries to fill the rest of the row, then repeatedly pin out-of-range
/// entries to the nearest bound and rescale the others. Every pass pins at
/// least one entry, so the loop ends within `row.len()` passes.
fn range_violations(row: &[f64], pinned: u32) -> (u32, u32) {
    let (mut low, mut high) = (0u32, 0u32);
    for (c, &x) in row.iter().enumerate() {
        if pinned & (1 << c) == 0 {
            if x < PROB_MIN {
                low |= 1 << c;
            } else if x > PROB_MAX {
                high |= 1 << c;
            }
        }
    }
    (low, high)
}

fn clamp_renormalize(row: &mut [f64], targeted: u32) {
    // First pass fused and branch-free: clamp targeted entries, rescale the
    // rest, and note whether anything ended up out of range. Adding 0.0 to
    // a sum leaves it unchanged, so the sums match a filtered accumulation.
    let (mut fixed, mut free, mut n_free) = (0.0, 0.0, 0usize);
    for (c, x) in row.iter_mut().enumerate() {
        let t = targeted & (1 << c) != 0;
        let v = if t { x.clamp(PROB_MIN, PROB_MAX) } else { *x };
        *x = v;
        fixed += if t { v } else { 0.0 };
        free += if t { 0.0 } else { v };
        n_free += !t as usize;
    }
    if n_free > 0 {
        let target = 1.0 - fixed;
        let mut out_of_range = false;
        if free > 0.0 {
            let scale = target / free;
            for (c, x) in row.iter_mut().enumerate() {
                let t = targeted & (1 << c) != 0;
                let v = if t { *x } else { *x * scale };
                *x = v;
                out_of_range |= !t & !(PROB_MIN..=PROB_MAX).contains(&v);
            }
        } else {
            rescale_free(row, targeted);
            out_of_range = true;
        }
        if !out_of_range {
            return;
        }
    }

    // Pin entries that left the range, low ones first, and rescale the
    // rest. Each pass pins and sums in one sweep, then rescales and looks
    // for the next offenders in a second.
    let mut pinned = 0u32;
    let (mut low, mut high) = range_violations(row, pinned);
    for _ in 0..=row.len() {
        let (pin, bound) = if low != 0 { (low, PROB_MIN) } else { (high, PROB_MAX) };
        if pin == 0 {
            break;
        }
        pinned |= pin;
        let (mut fixed, mut free, mut n_free) = (0.0, 0.0, 0usize);
        for (c, x) in row.iter_mut().enumerate() {
            if pin & (1 << c) != 0 {
                *x = bound;
            }
            if pinned & (1 << c) == 0 {
                free += *x;
                n_free += 1;
            } else {
                fixed += *x;
            }
        }
        if n_free == 0 {
            break;
        }
        let target = 1.0 - fixed;
        let scale = target / free;
        (low, high) = (0, 0);
        for (c, x) in row.iter_mut().enumerate() {
            if pinned & (1 << c) == 0 {
                *x = if free > 0.0 { *x * scale } else { target / n_free as f64 };
                if *x < PROB_MIN {
                    low |= 1 << c;
                } else if *x > PROB_MAX {
                    high |= 1 << c;
                }
            }
        }
    }

    // Fixed and pinned entries can leave nothing free to absorb the rest,
    // e.g. when every column of the row was adjusted. Then the adjusted
    // entries give way too and the whole row is renormalised.
    if targeted != 0 && (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        clamp_renormalize(row, 0);
    }
}

/// Fixed truth table.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicGate {
    wiring: Wiring,
    table: Vec<u8>,
    row_masks: Vec<u16>,
}

impl DeterministicGate {
    pub fn new(wiring: Wiring, table: Vec<u8>) -> Self {
        assert_eq!(table.len(), wiring.n_rows());
        assert!(table.iter().all(|&o| (o as usize) < wiring.n_cols()));
        let row_masks = table.iter().map(|&o| wiring.output_mask(o as usize)).collect();
        Self {
            wiring,
            table,
            row_masks,
        }
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn eval(&self, input: usize) -> usize {
        self.table[input] as usize
    }
}

/// Fixed probability table sampled on every update.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticGate {
    wiring: Wiring,
    table: ProbabilityTable,
    col_masks: Vec<u16>,
}

impl ProbabilisticGate {
    pub fn new(wiring: Wiring, table: ProbabilityTable) -> Self {
        assert_eq!(table.rows(), wiring.n_rows());
        assert_eq!(table.cols(), wiring.n_cols());
        let col_masks = wiring.column_masks();
        Self {
            wiring,
            table,
            col_masks,
        }
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn table(&self) -> &ProbabilityTable {
        &self.table
    }

    pub fn eval<R: Rng + ?Sized>(&self, input: usize, rng: &mut R) -> usize {
        self.table.sample(input, rng)
    }
}

/// A probabilistic gate that rewrites its own table when its positive or
/// negative feedback node reads 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGate {
    wiring: Wiring,
    birth: ProbabilityTable,
    table: ProbabilityTable,
    col_masks: Vec<u16>,
    pos_src: u8,
    neg_src: u8,
    depth: usize,
    deltas: [f64; MAX_DEPTH],
    // newest first
    buffer: [(u8, u8); MAX_DEPTH],
    buffered: usize,
    frozen: bool,
}

impl FeedbackGate {
    pub fn new(
        wiring: Wiring,
        table: ProbabilityTable,
        pos_src: u8,
        neg_src: u8,
        depth: usize,
        deltas: [f64; MAX_DEPTH],
    ) -> Self {
        assert_eq!(table.rows(), wiring.n_rows());
        assert_eq!(table.cols(), wiring.n_cols());
        assert!((1..=MAX_DEPTH).contains(&depth));
        assert!(deltas.iter().all(|d| (0.0..=MAX_DELTA).contains(d)));
        assert!((pos_src as usize) < N_NODES && (neg_src as usize) < N_NODES);
        let col_masks = wiring.column_masks();
        Self {
            wiring,
            birth: table.clone(),
            table,
            col_masks,
            pos_src,
            neg_src,
            depth,
            deltas,
            buffer: [(0, 0); MAX_DEPTH],
            buffered: 0,
            frozen: false,
        }
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn table(&self) -> &ProbabilityTable {
        &self.table
    }

    pub fn birth_table(&self) -> &ProbabilityTable {
        &self.birth
    }

    pub fn pos_src(&self) -> u8 {
        self.pos_src
    }

    pub fn neg_src(&self) -> u8 {
        self.neg_src
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn deltas(&self) -> &[f64; MAX_DEPTH] {
        &self.deltas
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Buffered `(row, column)` pairs, newest first.
    pub fn buffer(&self) -> &[(u8, u8)] {
        &self.buffer[..self.buffered]
    }

    pub fn freeze(&self) -> FeedbackGate {
        let mut g = self.clone();
        g.frozen = true;
        g
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn push_buffer(&mut self, input: usize, output: usize) {
        self.buffer.copy_within(0..MAX_DEPTH - 1, 1);
        self.buffer[0] = (input as u8, output as u8);
        self.buffered = (self.buffered + 1).min(self.depth);
        self.buffer[self.buffered..].fill((0, 0));
    }

    /// Restores the birth table and empties the buffer.
    pub fn reset(&mut self) {
        self.table.clone_from(&self.birth);
        self.buffered = 0;
        self.buffer = [(0, 0); MAX_DEPTH];
    }

    /// Draws `u_k ~ U[0, delta_k]` for each buffered pair and applies it
    /// with the given sign. No-op (and no draws) when frozen.
    pub fn apply_feedback<R: Rng + ?Sized>(&mut self, sign: f64, rng: &mut R) {
        if self.frozen || self.buffered == 0 {
            return;
        }
        let mut draws = [0.0; MAX_DEPTH];
        for (k, u) in draws.iter_mut().enumerate().take(self.buffered) {
            *u = rng.random::<f64>() * self.deltas[k];
        }
        self.apply_feedback_with(sign, &draws[..self.buffered]);
    }

    /// Applies explicit step sizes, `draws[k]` for the k-th newest pair.
    pub fn apply_feedback_with(&mut self, sign: f64, draws: &[f64]) {
        if self.frozen {
            return;
        }
        let mut adj = [(0usize, 0usize, 0.0f64); MAX_DEPTH];
        let n = draws.len().min(self.buffered);
        for k in 0..n {
            let (i, o) = self.buffer[k];
            adj[k] = (i as usize, o as usize, sign * draws[k]);
        }
        self.table.adjust(&adj[..n]);
    }

    /// Feedback from the previous update first (positive, then negative),
    /// then sample and remember the pair just used.
    pub fn eval<R: Rng + ?Sized>(&mut self, input: usize, pos: bool, neg: bool, rng: &mut R) -> usize {
        if pos {
            self.apply_feedback(1.0, rng);
        }
        if neg {
            self.apply_feedback(-1.0, rng);
        }
        let output = self.table.sample(input, rng);
        self.push_buffer(input, output);
        output
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Deterministic(DeterministicGate),
    Probabilistic(ProbabilisticGate),
    Feedback(FeedbackGate),
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Deterministic(_) => GateKind::Deterministic,
            Gate::Probabilistic(_) => GateKind::Probabilistic,
            Gate::Feedback(_) => GateKind::Feedback,
        }
    }

    pub fn wiring(&self) -> &Wiring {
        match self {
            Gate::Deterministic(g) => &g.wiring,
            Gate::Probabilistic(g) => &g.wiring,
            Gate::Feedback(g) => &g.wiring,
        }
    }

    /// Evaluates against the read image and returns the node bits to set.
    #[inline]
    pub fn update<R: Rng + ?Sized>(&mut self, image: u16, rng: &mut R) -> u16 {
        match self {
            Gate::Deterministic(g) => g.row_masks[g.wiring.input_pattern(image)],
            Gate::Probabilistic(g) => {
                let o = g.table.sample(g.wiring.input_pattern(image), rng);
                g.col_masks[o]
            }
            Gate::Feedback(g) => {
                let input = g.wiring.input_pattern(image);
                let pos = (image >> g.pos_src) & 1 == 1;
                let neg = (image >> g.neg_src) & 1 == 1;
                let o = g.eval(input, pos, neg, rng);
                g.col_masks[o]
            }
        }
    }

    /// One line: kind, wiring and the full table with 9 decimals.
    pub fn dump(&self) -> String {
        let join = |xs: &[u8]| {
            xs.iter()
                .map(u8::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let w = self.wiring();
        let mut s = format!("kind={} in={} out={}", self.kind(), join(w.inputs()), join(w.outputs()));
        let table = |s: &mut String, t: &ProbabilityTable| {
            s.push_str(" table=");
            for i in 0..t.rows() {
                if i > 0 {
                    s.push(';');
                }
                let row: Vec<String> = t.row(i).iter().map(|p| format!("{p:.9}")).collect();
                s.push_str(&row.join(","));
            }
        };
        match self {
            Gate::Deterministic(g) => {
                let _ = write!(s, " table={}", join(&g.table));
            }
            Gate::Probabilistic(g) => table(&mut s, &g.table),
            Gate::Feedback(g) => {
                let deltas: Vec<String> = g.deltas.iter().map(|d| format!("{d:.9}")).collect();
                let _ = write!(
                    s,
                    " pos={} neg={} depth={} deltas={}",
                    g.pos_src,
                    g.neg_src,
                    g.depth,
                    deltas.join(",")
                );
                table(&mut s, &g.table);
            }
        }
        s
    }
}

/// Builds a gate from a located gene.
pub fn decode_gate(span: &GeneSpan) -> Gate {
    let mut bytes = span.payload.iter().copied();
    let mut next = || bytes.next().expect("payload shorter than its layout");
    let n_in = arity(next());
    let n_out = arity(next());
    let mut addr = |n: usize| -> Vec<u8> { (0..n).map(|_| next() % N_NODES as u8).collect() };
    let inputs = addr(n_in);
    let outputs = addr(n_out);
    let wiring = Wiring::new(&inputs, &outputs);
    let rows = wiring.n_rows();
    let cols = wiring.n_cols();
    let header = 2 + n_in + n_out;
    match span.kind {
        GateKind::Deterministic => {
            let table = span.payload[header..header + rows]
                .iter()
                .map(|&b| b % cols as u8)
                .collect();
            Gate::Deterministic(DeterministicGate::new(wiring, table))
        }
        GateKind::Probabilistic => {
            let table = ProbabilityTable::from_bytes(rows, cols, &span.payload[header..header + rows * cols]);
            Gate::Probabilistic(ProbabilisticGate::new(wiring, table))
        }
        GateKind::Feedback => {
            let p = &span.payload[header..];
            let pos_src = p[0] % N_NODES as u8;
            let neg_src = p[1] % N_NODES as u8;
            let depth = arity(p[2]);
            let mut deltas = [0.0; MAX_DEPTH];
            for (d, &b) in deltas.iter_mut().zip(&p[3..3 + MAX_DEPTH]) {
                *d = b as f64 / 255.0 * MAX_DELTA;
            }
            let t = 3 + MAX_DEPTH;
            let table = ProbabilityTable::from_bytes(rows, cols, &p[t..t + rows * cols]);
            Gate::Feedback(FeedbackGate::new(wiring, table, pos_src, neg_src, depth, deltas))
        }
    }
}
