//! The cluster-state machine gun: a noisy linear-cluster source whose photons
//! are routed at random to X/Y/Z detectors or lost.
//!
//! The frontier is pipelined by one photon: photon `i` is finalized only after
//! photon `i + 1` has been emitted, so every recorded photon has both of its
//! controlled-phase bonds in place and the `Z_i Z_{i+1}` error on its right
//! bond is applied before it is measured.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Basis, FrameError, StabilizerFrame};
use crate::pauli::PauliLetter;
use crate::record::{ClickRecord, Event};

/// Tolerance on `q_x + q_y + q_z = 1`.
pub const ROUTING_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("splitter probabilities sum to {0}, expected 1")]
    RoutingSum(f64),
    #[error("burn-in {burn_in} exceeds photon count {n_photons}")]
    BurnIn { burn_in: u64, n_photons: u64 },
    #[error("emission period must be positive, got {0}")]
    EmissionPeriod(f64),
}

/// Full description of one simulated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Joint collection and detection probability.
    pub p_d: f64,
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
    /// Per-photon single-Pauli error probability.
    pub p_sigma: f64,
    /// Per-bond `Z Z` error probability.
    pub p_zz: f64,
    pub n_photons: u64,
    pub seed: u64,
    pub burn_in: u64,
    /// Emission period in seconds.
    pub tau_em: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p_d: 1.0,
            q_x: 1.0 / 3.0,
            q_y: 1.0 / 3.0,
            q_z: 1.0 / 3.0,
            p_sigma: 0.0,
            p_zz: 0.0,
            n_photons: 1_000_000,
            seed: 0,
            burn_in: 100,
            tau_em: 1e-9,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("p_d", self.p_d),
            ("q_x", self.q_x),
            ("q_y", self.q_y),
            ("q_z", self.q_z),
            ("p_sigma", self.p_sigma),
            ("p_zz", self.p_zz),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::NotAProbability { name, value });
            }
        }
        let sum = self.q_x + self.q_y + self.q_z;
        if (sum - 1.0).abs() > ROUTING_SUM_TOLERANCE {
            return Err(ConfigError::RoutingSum(sum));
        }
        if self.burn_in > self.n_photons {
            return Err(ConfigError::BurnIn {
                burn_in: self.burn_in,
                n_photons: self.n_photons,
            });
        }
        if !(self.tau_em > 0.0) {
            return Err(ConfigError::EmissionPeriod(self.tau_em));
        }
        Ok(())
    }

    pub fn routing(&self) -> [f64; 3] {
        [self.q_x, self.q_y, self.q_z]
    }

    pub fn noise(&self) -> NoiseLaw {
        NoiseLaw::new(self.p_sigma, self.p_zz)
    }
}

/// Bernoulli trial on a raw `u64` draw; exact at 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Coin {
    Never,
    Always,
    Below(u64),
}

impl Coin {
    fn new(p: f64) -> Coin {
        if p <= 0.0 {
            Coin::Never
        } else if p >= 1.0 {
            Coin::Always
        } else {
            // p * 2^64, exact in f64 arithmetic for the conversion range we use.
            Coin::Below((p * 18_446_744_073_709_551_616.0) as u64)
        }
    }

    /// Degenerate coins consume no randomness.
    #[inline]
    fn flip<R: RngCore + ?Sized>(self, rng: &mut R) -> bool {
        match self {
            Coin::Never => false,
            Coin::Always => true,
            Coin::Below(t) => rng.next_u64() < t,
        }
    }
}

/// Pauli noise rates with precomputed thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseLaw {
    pub p_sigma: f64,
    pub p_zz: f64,
    sigma: Coin,
    zz: Coin,
}

impl NoiseLaw {
    pub fn new(p_sigma: f64, p_zz: f64) -> Self {
        NoiseLaw {
            p_sigma,
            p_zz,
            sigma: Coin::new(p_sigma),
            zz: Coin::new(p_zz),
        }
    }

    pub fn noiseless() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// Which errors fired during one noise step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseEvents {
    /// Single-qubit Pauli applied to the photon being finalized.
    pub pauli: Option<PauliLetter>,
    /// Whether `Z_{i-1} Z_i` fired on the freshly created bond.
    pub zz: bool,
}

/// Noise for the step in which photon `i` has just been emitted and photon
/// `i - 1` is about to be finalized: with probability `p_zz` apply
/// `Z_{i-1} Z_i`, then with probability `p_sigma` a uniformly random Pauli on
/// photon `i - 1`. Both photons must be active; `i = 0` is a no-op.
///
/// The single-qubit error lands after photon `i - 1` has received both of its
/// controlled-phase bonds, so it acts on the output cluster state rather than
/// being spread to a neighbour by a later bond.
pub fn apply_noise_step<R: Rng + ?Sized>(
    frame: &mut StabilizerFrame,
    i: usize,
    law: &NoiseLaw,
    rng: &mut R,
) -> Result<NoiseEvents, FrameError> {
    let mut ev = NoiseEvents::default();
    if i == 0 {
        return Ok(ev);
    }
    if law.zz.flip(rng) {
        frame.apply_zz(i - 1, i)?;
        ev.zz = true;
    }
    if law.sigma.flip(rng) {
        let letter = PauliLetter::NON_IDENTITY[rng.random_range(0..3)];
        frame.apply_letter(i - 1, letter)?;
        ev.pauli = Some(letter);
    }
    Ok(ev)
}

/// What happens to a photon at the detector stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fate {
    Lost,
    Measure(Basis),
}

/// Photon source driving a [`StabilizerFrame`] one photon at a time.
#[derive(Clone, Debug)]
pub struct MachineGun<R> {
    frame: StabilizerFrame,
    law: NoiseLaw,
    rng: R,
    head: usize,
}

/// Largest frontier the machine gun is allowed to hold.
pub const MAX_FRONTIER: usize = 4;

impl<R: Rng> MachineGun<R> {
    pub fn new(law: NoiseLaw, rng: R) -> Self {
        let mut frame = StabilizerFrame::new();
        frame.emit_cluster_qubit(0).expect("empty frame accepts any index");
        MachineGun {
            frame,
            law,
            rng,
            head: 0,
        }
    }

    /// Index of the next photon to be finalized.
    pub fn position(&self) -> usize {
        self.head
    }

    pub fn frame(&self) -> &StabilizerFrame {
        &self.frame
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    /// Emits the successor, applies noise, and finalizes the head photon.
    pub fn fire(&mut self, fate: Fate) -> (Event, NoiseEvents) {
        let i = self.head;
        self.frame
            .emit_cluster_qubit(i + 1)
            .expect("head and successor are consecutive");
        let noise = apply_noise_step(&mut self.frame, i + 1, &self.law, &mut self.rng)
            .expect("head and successor are active");
        let event = match fate {
            Fate::Lost => {
                self.frame
                    .discard(i, Basis::Z, &mut self.rng)
                    .expect("head is active");
                Event::LOST
            }
            Fate::Measure(b) => {
                let o = self
                    .frame
                    .finalize(i, b, &mut self.rng)
                    .expect("head is active");
                Event::click(b, o)
            }
        };
        debug_assert!(self.frame.active_qubits().len() <= MAX_FRONTIER);
        self.head += 1;
        (event, noise)
    }
}

/// Random detector routing: loss with probability `1 - p_d`, then a basis
/// drawn from `(q_x, q_y, q_z)`.
#[derive(Clone, Copy, Debug)]
pub struct Router {
    detect: Coin,
    x: Coin,
    y_given_not_x: Coin,
}

impl Router {
    pub fn new(p_d: f64, q: [f64; 3]) -> Self {
        let rest = 1.0 - q[0];
        Router {
            detect: Coin::new(p_d),
            x: Coin::new(q[0]),
            y_given_not_x: if rest <= 0.0 {
                Coin::Never
            } else {
                Coin::new(q[1] / rest)
            },
        }
    }

    #[inline]
    pub fn route<R: RngCore + ?Sized>(&self, rng: &mut R) -> Fate {
        if !self.detect.flip(rng) {
            Fate::Lost
        } else if self.x.flip(rng) {
            Fate::Measure(Basis::X)
        } else if self.y_given_not_x.flip(rng) {
            Fate::Measure(Basis::Y)
        } else {
            Fate::Measure(Basis::Z)
        }
    }
}

/// Seeded substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Incremental simulator for one stream; yields events in chunks so long
/// runs can be scanned without materialising the record.
pub struct Simulator {
    gun: MachineGun<ChaCha8Rng>,
    router: Router,
    remaining: u64,
    buf: Vec<Event>,
}

impl Simulator {
    pub fn new(config: &ExperimentConfig, stream: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Simulator {
            gun: MachineGun::new(config.noise(), stream_rng(config.seed, stream)),
            router: Router::new(config.p_d, config.routing()),
            remaining: config.n_photons,
            buf: Vec::new(),
        })
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Next at most `max` events, or `None` once the stream is exhausted.
    pub fn next_chunk(&mut self, max: usize) -> Option<&[Event]> {
        if self.remaining == 0 {
            return None;
        }
        let n = self.remaining.min(max.max(1) as u64) as usize;
        self.buf.clear();
        self.buf.reserve(n);
        for _ in 0..n {
            let fate = self.router.route(self.gun.rng_mut());
            self.buf.push(self.gun.fire(fate).0);
        }
        self.remaining -= n as u64;
        Some(&self.buf)
    }
}

/// Stream 0 of `config`.
pub fn simulate(config: &ExperimentConfig) -> Result<ClickRecord, ConfigError> {
    simulate_stream(config, 0)
}

pub fn simulate_stream(config: &ExperimentConfig, stream: u64) -> Result<ClickRecord, ConfigError> {
    let mut sim = Simulator::new(config, stream)?;
    let mut events = Vec::with_capacity(config.n_photons as usize);
    while let Some(chunk) = sim.next_chunk(1 << 16) {
        events.extend_from_slice(chunk);
    }
    Ok(ClickRecord::new(events, config.burn_in).expect("burn-in validated"))
}

/// Independent streams `0..n_streams`, each `n_photons` long, simulated in
/// parallel. Output order and content do not depend on the thread count.
pub fn simulate_streams(
    config: &ExperimentConfig,
    n_streams: u64,
) -> Result<Vec<ClickRecord>, ConfigError> {
    config.validate()?;
    (0..n_streams)
        .into_par_iter()
        .map(|s| simulate_stream(config, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_photons: 2000,
            burn_in: 0,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().is_ok());
        let bad = ExperimentConfig { p_d: 1.5, ..cfg() };
        assert!(matches!(
            bad.validate(),
            Err(ConfigError::NotAProbability { name: "p_d", .. })
        ));
        let bad = ExperimentConfig { q_x: 0.5, ..cfg() };
        assert!(matches!(bad.validate(), Err(ConfigError::RoutingSum(_))));
        let bad = ExperimentConfig {
            burn_in: 5000,
            ..cfg()
        };
        assert!(matches!(bad.validate(), Err(ConfigError::BurnIn { .. })));
    }

    #[test]
    fn all_y_when_fully_detected_and_routed_to_y() {
        let c = ExperimentConfig {
            q_x: 0.0,
            q_y: 1.0,
            q_z: 0.0,
            ..cfg()
        };
        let r = simulate(&c).unwrap();
        assert_eq!(r.len(), 2000);
        assert!(r.events().iter().all(|e| e.basis() == Some(Basis::Y)));
    }

    #[test]
    fn zero_detection_loses_everything() {
        let r = simulate(&ExperimentConfig { p_d: 0.0, ..cfg() }).unwrap();
        assert_eq!(r.lost_count(), 2000);
    }

    #[test]
    fn same_seed_same_record() {
        let c = ExperimentConfig {
            p_d: 0.7,
            p_sigma: 0.05,
            p_zz: 0.05,
            ..cfg()
        };
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = simulate(&ExperimentConfig { seed: 1, ..c.clone() }).unwrap();
        assert_ne!(simulate(&c).unwrap(), other);
        let streams = simulate_streams(&c, 3).unwrap();
        assert_eq!(streams[0], simulate(&c).unwrap());
        assert_ne!(streams[1], streams[0]);
    }

    #[test]
    fn degenerate_noise_rates() {
        let mut rng = stream_rng(4, 0);
        let law = NoiseLaw::new(1.0, 1.0);
        let mut frame = StabilizerFrame::new();
        frame.emit_cluster_qubit(0).unwrap();
        let mut counts = [0usize; 3];
        for i in 1..3000 {
            frame.emit_cluster_qubit(i).unwrap();
            let ev = apply_noise_step(&mut frame, i, &law, &mut rng).unwrap();
            assert!(ev.zz);
            let l = ev.pauli.expect("p_sigma = 1 always fires");
            counts[PauliLetter::NON_IDENTITY.iter().position(|&x| x == l).unwrap()] += 1;
            frame.finalize(i - 1, Basis::Z, &mut rng).unwrap();
        }
        assert!(counts.iter().all(|&c| c > 850), "{counts:?}");
    }

    #[test]
    fn first_photon_gets_no_noise() {
        let mut rng = stream_rng(0, 0);
        let mut frame = StabilizerFrame::new();
        frame.emit_cluster_qubit(0).unwrap();
        let ev = apply_noise_step(&mut frame, 0, &NoiseLaw::new(1.0, 1.0), &mut rng).unwrap();
        assert_eq!(ev, NoiseEvents::default());
    }

    #[test]
    fn coin_edges() {
        let mut rng = stream_rng(1, 0);
        assert!(!Coin::new(0.0).flip(&mut rng));
        assert!(Coin::new(1.0).flip(&mut rng));
        assert_eq!(Coin::new(0.5), Coin::Below(1 << 63));
    }
}
