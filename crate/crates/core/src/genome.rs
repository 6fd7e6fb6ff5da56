//! Byte-string genomes, their mutation operators, and gene extraction.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenomeError {
    #[error("cannot place {codons} start codons in a genome of {length} sites")]
    InvalidLength { length: usize, codons: usize },
    #[error("invalid genome hex: {0}")]
    InvalidHex(String),
}

/// The three gate families a gene can code for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Deterministic,
    Probabilistic,
    Feedback,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [
        GateKind::Deterministic,
        GateKind::Probabilistic,
        GateKind::Feedback,
    ];

    /// Two-byte start codon; the second byte is the complement of the first.
    pub const fn codon(self) -> [u8; 2] {
        match self {
            GateKind::Deterministic => [42, 213],
            GateKind::Probabilistic => [43, 212],
            GateKind::Feedback => [44, 211],
        }
    }

    pub fn from_codon(a: u8, b: u8) -> Option<GateKind> {
        if a ^ b != 0xFF {
            return None;
        }
        match a {
            42 => Some(GateKind::Deterministic),
            43 => Some(GateKind::Probabilistic),
            44 => Some(GateKind::Feedback),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            GateKind::Deterministic => 'd',
            GateKind::Probabilistic => 'p',
            GateKind::Feedback => 'f',
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Deterministic => "deterministic",
            GateKind::Probabilistic => "probabilistic",
            GateKind::Feedback => "feedback",
        };
        f.write_str(s)
    }
}

/// Heritable material: a variable-length string of byte sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    sites: Vec<u8>,
}

/// A located gene. `payload` starts right after the two codon bytes and is
/// read circularly, so it can extend past the end of the genome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSpan {
    pub kind: GateKind,
    pub start_index: usize,
    pub payload: Vec<u8>,
}

/// Founder shape, mutation rates and length bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenomeParams {
    pub initial_length: usize,
    pub initial_codons: usize,
    pub point_rate: f64,
    pub duplication_rate: f64,
    pub deletion_rate: f64,
    pub duplication_min: usize,
    pub duplication_max: usize,
    pub deletion_min: usize,
    pub deletion_max: usize,
    pub min_length: usize,
    pub max_length: usize,
}

impl Default for GenomeParams {
    fn default() -> Self {
        Self {
            initial_length: 5000,
            initial_codons: 12,
            point_rate: 0.003,
            duplication_rate: 0.02,
            deletion_rate: 0.02,
            duplication_min: 128,
            duplication_max: 512,
            deletion_min: 128,
            deletion_max: 255,
            min_length: 1000,
            max_length: 20000,
        }
    }
}

impl GenomeParams {
    pub fn none() -> Self {
        Self {
            point_rate: 0.0,
            duplication_rate: 0.0,
            deletion_rate: 0.0,
            ..Self::default()
        }
    }
}

/// One change made during a reproduction event, in application order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum MutationEvent {
    Point { index: usize, value: u8 },
    Duplication { source: usize, len: usize, insert_at: usize },
    Deletion { start: usize, len: usize },
}

impl MutationEvent {
    pub fn apply(&self, sites: &mut Vec<u8>) {
        match *self {
            MutationEvent::Point { index, value } => sites[index] = value,
            MutationEvent::Duplication {
                source,
                len,
                insert_at,
            } => {
                let stretch = sites[source..source + len].to_vec();
                sites.splice(insert_at..insert_at, stretch);
            }
            MutationEvent::Deletion { start, len } => {
                sites.drain(start..start + len);
            }
        }
    }
}

impl Genome {
    pub fn from_sites(sites: Vec<u8>) -> Self {
        Self { sites }
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Uniform random bytes with `n_codons` start codons written at distinct
    /// two-byte slots, cycling through `kinds`.
    pub fn random<R: Rng + ?Sized>(
        length: usize,
        n_codons: usize,
        kinds: &[GateKind],
        rng: &mut R,
    ) -> Result<Genome, GenomeError> {
        let slots = length / 2;
        if length == 0 || n_codons > slots || (n_codons > 0 && kinds.is_empty()) {
            return Err(GenomeError::InvalidLength {
                length,
                codons: n_codons,
            });
        }
        let mut sites = vec![0u8; length];
        rng.fill(&mut sites[..]);
        let mut positions = index::sample(rng, slots, n_codons).into_vec();
        positions.sort_unstable();
        for (i, slot) in positions.into_iter().enumerate() {
            let codon = kinds[i % kinds.len()].codon();
            sites[2 * slot] = codon[0];
            sites[2 * slot + 1] = codon[1];
        }
        Ok(Genome { sites })
    }

    pub fn mutate<R: Rng + ?Sized>(&self, params: &GenomeParams, rng: &mut R) -> Genome {
        self.mutate_logged(params, rng).0
    }

    /// Point mutation, then duplication, then deletion. Point mutations use
    /// geometric skips between hits, which is distributed exactly like an
    /// independent Bernoulli trial per site.
    pub fn mutate_logged<R: Rng + ?Sized>(
        &self,
        params: &GenomeParams,
        rng: &mut R,
    ) -> (Genome, Vec<MutationEvent>) {
        let mut sites = self.sites.clone();
        let mut events = Vec::new();

        if params.point_rate > 0.0 && !sites.is_empty() {
            if params.point_rate >= 1.0 {
                for (index, site) in sites.iter_mut().enumerate() {
                    let value = rng.random();
                    *site = value;
                    events.push(MutationEvent::Point { index, value });
                }
            } else {
                let skip = Geometric::new(params.point_rate).expect("rate in (0,1)");
                let mut index = skip.sample(rng);
                while index < sites.len() as u64 {
                    let value = rng.random();
                    sites[index as usize] = value;
                    events.push(MutationEvent::Point {
                        index: index as usize,
                        value,
                    });
                    index = index.saturating_add(1).saturating_add(skip.sample(rng));
                }
            }
        }

        let len = sites.len();
        if len < params.max_length && rng.random::<f64>() < params.duplication_rate {
            let stretch = rng.random_range(params.duplication_min..=params.duplication_max);
            if stretch <= len && len + stretch <= params.max_length {
                let source = rng.random_range(0..=len - stretch);
                let insert_at = rng.random_range(0..=len);
                let event = MutationEvent::Duplication {
                    source,
                    len: stretch,
                    insert_at,
                };
                event.apply(&mut sites);
                events.push(event);
            }
        }

        let len = sites.len();
        if len > params.min_length && rng.random::<f64>() < params.deletion_rate {
            let stretch = rng.random_range(params.deletion_min..=params.deletion_max);
            if stretch <= len && len - stretch >= params.min_length {
                let start = rng.random_range(0..=len - stretch);
                let event = MutationEvent::Deletion { start, len: stretch };
                event.apply(&mut sites);
                events.push(event);
            }
        }

        (Genome { sites }, events)
    }

    /// Replays a mutation log on this genome.
    pub fn apply_events(&self, events: &[MutationEvent]) -> Genome {
        let mut sites = self.sites.clone();
        for event in events {
            event.apply(&mut sites);
        }
        Genome { sites }
    }

    /// All genes whose codon kind is in `enabled`, in genome order.
    pub fn extract_genes(&self, enabled: &[GateKind]) -> Vec<GeneSpan> {
        let n = self.sites.len();
        let mut genes = Vec::new();
        if n < 2 {
            return genes;
        }
        for i in 0..n - 1 {
            let Some(kind) = GateKind::from_codon(self.sites[i], self.sites[i + 1]) else {
                continue;
            };
            if !enabled.contains(&kind) {
                continue;
            }
            let start = i + 2;
            let at = |k: usize| self.sites[(start + k) % n];
            let len = gates::payload_len(kind, at(0), at(1));
            genes.push(GeneSpan {
                kind,
                start_index: i,
                payload: (0..len).map(at).collect(),
            });
        }
        genes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.sites)
    }

    pub fn from_hex(s: &str) -> Result<Genome, GenomeError> {
        hex::decode(s.trim())
            .map(Genome::from_sites)
            .map_err(|e| GenomeError::InvalidHex(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamKey};
    use proptest::prelude::*;

    fn rng(i: u64) -> crate::rng::SimRng {
        StreamKey::new(99, Purpose::Testbed).individual(i).rng()
    }

    #[test]
    fn default_founder_has_four_codons_per_kind() {
        let g = Genome::random(5000, 12, &GateKind::ALL, &mut rng(0)).unwrap();
        assert_eq!(g.len(), 5000);
        for kind in GateKind::ALL {
            let n = g.extract_genes(&[kind]).len();
            assert!(n >= 4, "{kind}: {n}");
        }
    }

    #[test]
    fn no_codon_genome() {
        let g = Genome::random(100, 0, &GateKind::ALL, &mut rng(1)).unwrap();
        assert_eq!(g.len(), 100);
    }

    #[test]
    fn codons_must_fit() {
        let err = Genome::random(10, 6, &GateKind::ALL, &mut rng(2)).unwrap_err();
        assert_eq!(err, GenomeError::InvalidLength { length: 10, codons: 6 });
        assert!(Genome::random(0, 0, &GateKind::ALL, &mut rng(2)).is_err());
    }

    #[test]
    fn founder_bytes_are_uniform() {
        let mut r = rng(3);
        let mut sum = 0u64;
        let mut count = 0u64;
        for _ in 0..10_000 {
            let g = Genome::random(5000, 12, &GateKind::ALL, &mut r).unwrap();
            sum += g.sites().iter().map(|&b| b as u64).sum::<u64>();
            count += g.len() as u64;
        }
        let mean = sum as f64 / count as f64;
        assert!((mean - 127.5).abs() <= 1.0, "mean {mean}");
    }

    #[test]
    fn all_zero_genome_has_no_genes() {
        let g = Genome::from_sites(vec![0; 2000]);
        assert!(g.extract_genes(&GateKind::ALL).is_empty());
    }

    #[test]
    fn hand_crafted_gene() {
        let mut sites = vec![0u8; 1000];
        sites[10] = 42;
        sites[11] = 213;
        // 2 inputs, 1 output: header of 5 bytes, 4 table bytes
        sites[12..21].copy_from_slice(&[1, 0, 3, 7, 5, 0, 0, 0, 1]);
        let genes = Genome::from_sites(sites).extract_genes(&GateKind::ALL);
        assert_eq!(genes.len(), 1);
        assert_eq!(genes[0].start_index, 10);
        assert_eq!(genes[0].kind, GateKind::Deterministic);
        assert_eq!(genes[0].payload, vec![1, 0, 3, 7, 5, 0, 0, 0, 1]);
    }

    #[test]
    fn payload_wraps_past_the_end() {
        let mut sites = vec![0u8; 50];
        sites[47] = 42;
        sites[48] = 213;
        sites[49] = 1; // nIns = 2
        sites[0] = 0; // nOuts = 1
        sites[1] = 9;
        sites[2] = 4;
        let genes = Genome::from_sites(sites).extract_genes(&GateKind::ALL);
        assert_eq!(genes.len(), 1);
        assert_eq!(genes[0].start_index, 47);
        assert_eq!(&genes[0].payload[..4], &[1, 0, 9, 4]);
        assert_eq!(genes[0].payload.len(), 2 + 2 + 1 + 4);
    }

    #[test]
    fn disabled_kinds_are_not_recognised() {
        let g = Genome::random(5000, 12, &GateKind::ALL, &mut rng(4)).unwrap();
        let genes = g.extract_genes(&[GateKind::Deterministic]);
        assert!(genes.iter().all(|s| s.kind == GateKind::Deterministic));
    }

    #[test]
    fn saturated_genome_never_grows() {
        let mut r = rng(5);
        let params = GenomeParams {
            duplication_rate: 1.0,
            ..GenomeParams::default()
        };
        let g = Genome::random(20000, 0, &[], &mut r).unwrap();
        for _ in 0..200 {
            let (child, events) = g.mutate_logged(&params, &mut r);
            assert!(child.len() <= 20000);
            assert!(!events
                .iter()
                .any(|e| matches!(e, MutationEvent::Duplication { .. })));
        }
    }

    #[test]
    fn minimal_genome_never_shrinks() {
        let mut r = rng(6);
        let params = GenomeParams {
            deletion_rate: 1.0,
            ..GenomeParams::default()
        };
        let g = Genome::random(1000, 0, &[], &mut r).unwrap();
        for _ in 0..200 {
            let child = g.mutate(&params, &mut r);
            assert!(child.len() >= 1000);
        }
    }

    #[test]
    fn point_mutation_count_is_binomial() {
        let mut r = rng(7);
        let params = GenomeParams {
            duplication_rate: 0.0,
            deletion_rate: 0.0,
            ..GenomeParams::default()
        };
        let g = Genome::random(10_000, 0, &[], &mut r).unwrap();
        let hits: usize = (0..100)
            .map(|_| g.mutate_logged(&params, &mut r).1.len())
            .sum();
        let sd = (1e6f64 * 0.003 * 0.997).sqrt();
        assert!((hits as f64 - 3000.0).abs() <= 3.0 * sd, "hits {hits}");
    }

    #[test]
    fn hex_round_trip() {
        let g = Genome::from_sites(vec![0, 15, 16, 255]);
        assert_eq!(g.to_hex(), "000f10ff");
        assert_eq!(Genome::from_hex("000f10ff\n").unwrap(), g);
        assert!(Genome::from_hex("zz").is_err());
    }

    proptest! {
        #[test]
        fn mutation_stays_in_bounds(seed in any::<u64>(), len in 1000usize..=20000) {
            let mut r = StreamKey::new(seed, Purpose::Mutation).rng();
            let params = GenomeParams {
                duplication_rate: 0.5,
                deletion_rate: 0.5,
                ..GenomeParams::default()
            };
            let mut g = Genome::random(len, 0, &[], &mut r).unwrap();
            for _ in 0..20 {
                let (child, events) = g.mutate_logged(&params, &mut r);
                prop_assert!((1000..=20000).contains(&child.len()));
                prop_assert_eq!(&g.apply_events(&events), &child);
                g = child;
            }
        }

        #[test]
        fn zero_rates_are_identity(seed in any::<u64>()) {
            let mut r = StreamKey::new(seed, Purpose::Mutation).rng();
            let g = Genome::random(3000, 6, &GateKind::ALL, &mut r).unwrap();
            prop_assert_eq!(g.mutate(&GenomeParams::none(), &mut r), g);
        }

        #[test]
        fn extraction_is_pure(seed in any::<u64>()) {
            let mut r = StreamKey::new(seed, Purpose::Founders).rng();
            let g = Genome::random(2000, 6, &GateKind::ALL, &mut r).unwrap();
            prop_assert_eq!(g.extract_genes(&GateKind::ALL), g.clone().extract_genes(&GateKind::ALL));
        }
    }
}
