//! A 16-node Markov Brain: 4 sensors, 2 outputs, 10 hidden nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gates::{decode_gate, FeedbackGate, Gate, ProbabilityTable};
use crate::genome::{GateKind, Genome};

pub const N_SENSORS: usize = 4;
pub const N_OUTPUTS: usize = 2;
pub const N_HIDDEN: usize = 10;
pub const OUTPUT_NODES: [usize; N_OUTPUTS] = [4, 5];

const SENSOR_MASK: u16 = 0b1111;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub deterministic: u32,
    pub probabilistic: u32,
    pub feedback: u32,
}

impl GateCounts {
    pub fn get(&self, kind: GateKind) -> u32 {
        match kind {
            GateKind::Deterministic => self.deterministic,
            GateKind::Probabilistic => self.probabilistic,
            GateKind::Feedback => self.feedback,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Brain {
    nodes: u16,
    gates: Vec<Gate>,
}

impl Brain {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { nodes: 0, gates }
    }

    /// Decodes every enabled gene, in genome order.
    pub fn build(genome: &Genome, enabled: &[GateKind]) -> Self {
        let gates = genome
            .extract_genes(enabled)
            .iter()
            .map(decode_gate)
            .collect();
        Self::new(gates)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// All 16 node states, bit `k` for node `k`.
    pub fn nodes(&self) -> u16 {
        self.nodes
    }

    pub fn node(&self, k: usize) -> bool {
        (self.nodes >> k) & 1 == 1
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            match g.kind() {
                GateKind::Deterministic => c.deterministic += 1,
                GateKind::Probabilistic => c.probabilistic += 1,
                GateKind::Feedback => c.feedback += 1,
            }
        }
        c
    }

    pub fn feedback_gates(&self) -> impl Iterator<Item = &FeedbackGate> {
        self.gates.iter().filter_map(|g| match g {
            Gate::Feedback(f) => Some(f),
            _ => None,
        })
    }

    /// `(birth, current)` table of every feedback gate.
    pub fn feedback_tables(&self) -> Vec<(ProbabilityTable, ProbabilityTable)> {
        self.feedback_gates()
            .map(|g| (g.birth_table().clone(), g.table().clone()))
            .collect()
    }

    /// Disables table updates on every feedback gate.
    pub fn freeze(&mut self) {
        for g in &mut self.gates {
            if let Gate::Feedback(f) = g {
                f.set_frozen(true);
            }
        }
    }

    pub fn frozen(&self) -> Brain {
        let mut b = self.clone();
        b.freeze();
        b
    }

    /// Zeroes nodes, empties buffers and restores birth tables.
    pub fn reset(&mut self) {
        self.nodes = 0;
        for g in &mut self.gates {
            if let Gate::Feedback(f) = g {
                f.reset();
            }
        }
    }

    /// One network update. Gates read a snapshot taken after the sensors
    /// are written; their writes are OR-ed into a cleared next state.
    pub fn step<R: Rng + ?Sized>(&mut self, sensors: [bool; N_SENSORS], rng: &mut R) -> [bool; N_OUTPUTS] {
        let sensor_bits = sensors
            .iter()
            .enumerate()
            .fold(0u16, |m, (k, &s)| m | ((s as u16) << k));
        let image = (self.nodes & !SENSOR_MASK) | sensor_bits;
        let mut next = 0u16;
        for g in &mut self.gates {
            next |= g.update(image, rng);
        }
        self.nodes = next;
        [self.node(OUTPUT_NODES[0]), self.node(OUTPUT_NODES[1])]
    }

    pub fn dump(&self) -> String {
        self.gates
            .iter()
            .map(|g| g.dump() + "\n")
            .collect()
    }
}
