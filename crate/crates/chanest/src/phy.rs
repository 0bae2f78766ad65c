//! OFDM frame geometry, preamble construction, data modulation and
//! demodulation, equalization, and bit-error accounting.
//!
//! The default geometry is the 802.11p symbol: 64 FFT bins of which 52 are
//! active (logical subcarriers −26..−1 and +1..+26, DC unused), 4 pilots at
//! ±7 and ±21, 48 data bins, and a 16-sample cyclic prefix carried as
//! metadata only. The simulation itself works purely in the frequency
//! domain; the CP length matters only as the bound on channel tap delays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{cplx_div, Cplx, NumericsError};
use crate::real::Real;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("invalid frame geometry: {0}")]
    BadGeometry(String),
    #[error("preamble sequence length {got}, expected {expected}")]
    BadSequenceLength { expected: usize, got: usize },
    #[error("preamble entry {index} is not +1 or -1")]
    NonBpskEntry { index: usize },
    #[error("bit count {got}, expected {expected}")]
    BitCountMismatch { expected: usize, got: usize },
    #[error("pilot value count {got}, expected {expected}")]
    PilotCountMismatch { expected: usize, got: usize },
    #[error("vector length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("equalizer division by zero at active position {bin}")]
    DivisionByZero { bin: usize },
}

/// The 802.11 L-LTF sign pattern on logical subcarriers −26..−1, +1..+26
/// (row order matches `active_indices` of the default frame).
const LLTF: [i8; 52] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, //
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// OFDM frame geometry. Indices are FFT bin numbers in [0, fft_size);
/// `active_indices` fixes the logical subcarrier order used by every
/// length-`K_on` vector in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub fft_size: usize,
    pub cp_len: usize,
    pub preamble_count: usize,
    pub active_indices: Vec<usize>,
    pub pilot_indices: Vec<usize>,
    pub data_indices: Vec<usize>,
}

impl FrameConfig {
    /// Validated constructor; see [`FrameConfig::validate`].
    pub fn new(
        fft_size: usize,
        cp_len: usize,
        preamble_count: usize,
        active_indices: Vec<usize>,
        pilot_indices: Vec<usize>,
    ) -> Result<Self, PhyError> {
        let data_indices: Vec<usize> =
            active_indices.iter().copied().filter(|k| !pilot_indices.contains(k)).collect();
        let cfg =
            Self { fft_size, cp_len, preamble_count, active_indices, pilot_indices, data_indices };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the geometry invariants: indices in range and unique, pilots a
    /// subset of active, data = active minus pilots, at least one preamble
    /// symbol.
    pub fn validate(&self) -> Result<(), PhyError> {
        if self.preamble_count == 0 {
            return Err(PhyError::BadGeometry("preamble_count must be >= 1".into()));
        }
        if self.active_indices.is_empty() {
            return Err(PhyError::BadGeometry("no active subcarriers".into()));
        }
        let mut seen = vec![false; self.fft_size];
        for &k in &self.active_indices {
            if k >= self.fft_size {
                return Err(PhyError::BadGeometry(format!("active index {k} >= fft_size")));
            }
            if seen[k] {
                return Err(PhyError::BadGeometry(format!("duplicate active index {k}")));
            }
            seen[k] = true;
        }
        for &k in &self.pilot_indices {
            if !self.active_indices.contains(&k) {
                return Err(PhyError::BadGeometry(format!("pilot index {k} not active")));
            }
        }
        let expect_data: Vec<usize> = self
            .active_indices
            .iter()
            .copied()
            .filter(|k| !self.pilot_indices.contains(k))
            .collect();
        if self.data_indices != expect_data {
            return Err(PhyError::BadGeometry(
                "data_indices must be active_indices minus pilot_indices, in order".into(),
            ));
        }
        Ok(())
    }

    /// Number of active subcarriers (`K_on`).
    pub fn active_count(&self) -> usize {
        self.active_indices.len()
    }

    pub fn data_count(&self) -> usize {
        self.data_indices.len()
    }

    pub fn pilot_count(&self) -> usize {
        self.pilot_indices.len()
    }

    /// Positions of the data bins within the active-index order.
    pub fn data_positions(&self) -> Vec<usize> {
        self.positions_of(&self.data_indices)
    }

    /// Positions of the pilot bins within the active-index order.
    pub fn pilot_positions(&self) -> Vec<usize> {
        self.positions_of(&self.pilot_indices)
    }

    fn positions_of(&self, subset: &[usize]) -> Vec<usize> {
        subset
            .iter()
            .map(|k| {
                self.active_indices
                    .iter()
                    .position(|a| a == k)
                    .expect("validated subset of active_indices")
            })
            .collect()
    }
}

/// The standard 64/52/16 geometry with two preamble symbols: logical
/// subcarriers −26..−1, +1..+26 mapped onto FFT bins, pilots at ±7 and ±21.
pub fn build_default_frame() -> FrameConfig {
    let logical: Vec<i32> = (-26..=26).filter(|&l| l != 0).collect();
    let to_bin = |l: i32| ((l + 64) % 64) as usize;
    let active: Vec<usize> = logical.iter().map(|&l| to_bin(l)).collect();
    let pilots: Vec<usize> = [-21, -7, 7, 21].iter().map(|&l| to_bin(l)).collect();
    FrameConfig::new(64, 16, 2, active, pilots).expect("default geometry is valid")
}

/// Known training symbols: `preamble_count` identical BPSK vectors plus
/// their per-symbol energy `E_p = Σ_k |D[k]|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreambleSpec<T> {
    pub symbols: Vec<Vec<Cplx<T>>>,
    pub per_symbol_energy: T,
}

/// Builds the preamble from a ±1 sequence in active-index order. With no
/// custom sequence the 802.11 L-LTF pattern is used, which requires the
/// 52-subcarrier default geometry.
pub fn build_preamble<T: Real>(
    cfg: &FrameConfig,
    custom: Option<&[i8]>,
) -> Result<PreambleSpec<T>, PhyError> {
    let k_on = cfg.active_count();
    let seq: Vec<i8> = match custom {
        Some(s) => {
            if s.len() != k_on {
                return Err(PhyError::BadSequenceLength { expected: k_on, got: s.len() });
            }
            s.to_vec()
        }
        None => {
            if k_on != LLTF.len() {
                return Err(PhyError::BadSequenceLength { expected: LLTF.len(), got: k_on });
            }
            LLTF.to_vec()
        }
    };
    for (i, &v) in seq.iter().enumerate() {
        if v != 1 && v != -1 {
            return Err(PhyError::NonBpskEntry { index: i });
        }
    }
    let symbol: Vec<Cplx<T>> = seq.iter().map(|&v| Cplx::new(T::of(v as f64), T::zero())).collect();
    let energy = symbol.iter().map(|d| d.norm_sqr()).fold(T::zero(), |a, b| a + b);
    Ok(PreambleSpec { symbols: vec![symbol; cfg.preamble_count], per_symbol_energy: energy })
}

/// Data modulation family. All constellations are Gray mapped with unit
/// average energy; the symbol index is the bit group read MSB first.
///
/// Gray tables (scale factors 1/√2 and 1/√10 restore unit energy):
///
/// * BPSK: `0 → +1`, `1 → −1`.
/// * QPSK: first bit picks the real sign, second the imaginary
///   (`0 → +`, `1 → −`), e.g. `00 → (+1+j)/√2`.
/// * 16-QAM: bits (b0 b1) set the real level through the Gray sequence
///   `00→+3, 01→+1, 11→−1, 10→−3`, bits (b2 b3) the imaginary level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl std::str::FromStr for Modulation {
    type Err = PhyError;
    fn from_str(s: &str) -> Result<Self, PhyError> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" | "16qam" => Ok(Self::Qam16),
            other => Err(PhyError::BadGeometry(format!("unknown modulation '{other}'"))),
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
        })
    }
}

/// A modulation with its materialized constellation table, indexed by the
/// MSB-first bit group.
#[derive(Debug, Clone, PartialEq)]
pub struct ModScheme<T> {
    pub modulation: Modulation,
    pub bits_per_symbol: usize,
    pub constellation: Vec<Cplx<T>>,
}

impl<T: Real> ModScheme<T> {
    pub fn new(modulation: Modulation) -> Self {
        let (bits, table): (usize, Vec<Cplx<T>>) = match modulation {
            Modulation::Bpsk => {
                (1, vec![Cplx::new(T::one(), T::zero()), Cplx::new(-T::one(), T::zero())])
            }
            Modulation::Qpsk => {
                let s = T::of(1.0 / 2f64.sqrt());
                let sign = |b: usize| if b == 0 { s } else { -s };
                (2, (0..4).map(|i| Cplx::new(sign(i >> 1), sign(i & 1))).collect())
            }
            Modulation::Qam16 => {
                let s = T::of(1.0 / 10f64.sqrt());
                // Gray levels for the two bits of one axis.
                let level = |b: usize| T::of([3.0, 1.0, -3.0, -1.0][b]) * s;
                (4, (0..16).map(|i| Cplx::new(level(i >> 2), level(i & 3))).collect())
            }
        };
        Self { modulation, bits_per_symbol: bits, constellation: table }
    }
}

/// Maps data bits and pilot signs onto one active-order OFDM symbol.
pub fn modulate<T: Real>(
    bits: &[u8],
    scheme: &ModScheme<T>,
    cfg: &FrameConfig,
    pilot_values: &[i8],
) -> Result<Vec<Cplx<T>>, PhyError> {
    let need = cfg.data_count() * scheme.bits_per_symbol;
    if bits.len() != need {
        return Err(PhyError::BitCountMismatch { expected: need, got: bits.len() });
    }
    if pilot_values.len() != cfg.pilot_count() {
        return Err(PhyError::PilotCountMismatch {
            expected: cfg.pilot_count(),
            got: pilot_values.len(),
        });
    }
    let mut sym = vec![Cplx::new(T::zero(), T::zero()); cfg.active_count()];
    for (pos, &v) in cfg.pilot_positions().iter().zip(pilot_values) {
        sym[*pos] = Cplx::new(T::of(v as f64), T::zero());
    }
    for (i, pos) in cfg.data_positions().into_iter().enumerate() {
        let group = &bits[i * scheme.bits_per_symbol..(i + 1) * scheme.bits_per_symbol];
        let idx = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        sym[pos] = scheme.constellation[idx];
    }
    Ok(sym)
}

/// Per-bin zero-forcing equalizer `x̂[k] = y[k] / ĥ[k]`.
pub fn equalize<T: Real>(y: &[Cplx<T>], h_hat: &[Cplx<T>]) -> Result<Vec<Cplx<T>>, PhyError> {
    if y.len() != h_hat.len() {
        return Err(PhyError::LengthMismatch { expected: y.len(), got: h_hat.len() });
    }
    y.iter()
        .zip(h_hat)
        .enumerate()
        .map(|(bin, (&yv, &hv))| {
            cplx_div(yv, hv).map_err(|_: NumericsError| PhyError::DivisionByZero { bin })
        })
        .collect()
}

/// [`equalize`] for receiver chains: a bin whose estimate is exactly zero
/// equalizes to zero instead of erroring, so demapping falls back to its
/// deterministic tie-break there. Narrow fixed-point formats do round whole
/// bins to zero, and a Monte Carlo run has to count those bit errors, not
/// abort.
pub fn equalize_or_zero<T: Real>(
    y: &[Cplx<T>],
    h_hat: &[Cplx<T>],
) -> Result<Vec<Cplx<T>>, PhyError> {
    if y.len() != h_hat.len() {
        return Err(PhyError::LengthMismatch { expected: y.len(), got: h_hat.len() });
    }
    Ok(y.iter()
        .zip(h_hat)
        .map(|(&yv, &hv)| cplx_div(yv, hv).unwrap_or(Cplx::new(T::zero(), T::zero())))
        .collect())
}

/// Hard-decision demapping of the data bins: nearest constellation point,
/// ties resolved toward the lexicographically smallest bit pattern.
pub fn demap<T: Real>(
    x_hat: &[Cplx<T>],
    scheme: &ModScheme<T>,
    cfg: &FrameConfig,
) -> Result<Vec<u8>, PhyError> {
    if x_hat.len() != cfg.active_count() {
        return Err(PhyError::LengthMismatch { expected: cfg.active_count(), got: x_hat.len() });
    }
    let mut bits = Vec::with_capacity(cfg.data_count() * scheme.bits_per_symbol);
    for pos in cfg.data_positions() {
        let v = x_hat[pos];
        let mut best = 0usize;
        let mut best_d = T::infinity();
        // Ascending index scan with strict `<` makes the smallest bit
        // pattern win ties.
        for (idx, &p) in scheme.constellation.iter().enumerate() {
            let d = (v - p).norm_sqr();
            if d < best_d {
                best = idx;
                best_d = d;
            }
        }
        for shift in (0..scheme.bits_per_symbol).rev() {
            bits.push(((best >> shift) & 1) as u8);
        }
    }
    Ok(bits)
}

/// Hamming distance and length.
pub fn bit_errors(tx: &[u8], rx: &[u8]) -> Result<(u64, u64), PhyError> {
    if tx.len() != rx.len() {
        return Err(PhyError::LengthMismatch { expected: tx.len(), got: rx.len() });
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count() as u64;
    Ok((errors, tx.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn default_frame_geometry() {
        let cfg = build_default_frame();
        assert_eq!(cfg.fft_size, 64);
        assert_eq!(cfg.active_count(), 52);
        assert_eq!(cfg.cp_len, 16);
        assert_eq!(cfg.preamble_count, 2);
        assert_eq!(cfg.data_count(), 48);
        assert_eq!(cfg.pilot_count(), 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn default_frame_bin_map() {
        let cfg = build_default_frame();
        // Logical -26 is FFT bin 38; logical +26 is bin 26; DC absent.
        assert_eq!(cfg.active_indices[0], 38);
        assert_eq!(cfg.active_indices[25], 63);
        assert_eq!(cfg.active_indices[26], 1);
        assert_eq!(cfg.active_indices[51], 26);
        assert!(!cfg.active_indices.contains(&0));
        assert_eq!(cfg.pilot_indices, vec![43, 57, 7, 21]);
        assert_eq!(cfg.pilot_positions(), vec![5, 19, 32, 46]);
    }

    #[test]
    fn default_preamble() {
        let cfg = build_default_frame();
        let p: PreambleSpec<f64> = build_preamble(&cfg, None).unwrap();
        assert_eq!(p.symbols.len(), 2);
        assert_eq!(p.symbols[0].len(), 52);
        assert_eq!(p.symbols[0], p.symbols[1]);
        assert!(p.symbols[0].iter().all(|d| (d.norm() - 1.0).abs() < 1e-15 && d.im == 0.0));
        assert_eq!(p.per_symbol_energy, 52.0);
    }

    #[test]
    fn custom_preamble_all_ones() {
        let cfg = build_default_frame();
        let seq = [1i8; 52];
        let p: PreambleSpec<f64> = build_preamble(&cfg, Some(&seq)).unwrap();
        for s in &p.symbols {
            assert!(s.iter().all(|d| *d == C64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn preamble_rejects_bad_input() {
        let cfg = build_default_frame();
        let short = [1i8; 51];
        assert_eq!(
            build_preamble::<f64>(&cfg, Some(&short)),
            Err(PhyError::BadSequenceLength { expected: 52, got: 51 })
        );
        let mut bad = [1i8; 52];
        bad[7] = 0;
        assert_eq!(
            build_preamble::<f64>(&cfg, Some(&bad)),
            Err(PhyError::NonBpskEntry { index: 7 })
        );
    }

    #[test]
    fn qpsk_gray_table() {
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qpsk);
        let r = 1.0 / 2f64.sqrt();
        assert_eq!(s.constellation[0], C64::new(r, r)); // 00
        assert_eq!(s.constellation[1], C64::new(r, -r)); // 01
        assert_eq!(s.constellation[2], C64::new(-r, r)); // 10
        assert_eq!(s.constellation[3], C64::new(-r, -r)); // 11
    }

    #[test]
    fn constellations_unit_energy_and_gray() {
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            let s: ModScheme<f64> = ModScheme::new(m);
            let mean: f64 = s.constellation.iter().map(|p| p.norm_sqr()).sum::<f64>()
                / s.constellation.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{m}: mean energy {mean}");

            // Gray adjacency: minimum-distance neighbors differ in one bit.
            let n = s.constellation.len();
            let mut dmin = f64::INFINITY;
            for i in 0..n {
                for j in 0..i {
                    let d = (s.constellation[i] - s.constellation[j]).norm();
                    if d < dmin {
                        dmin = d;
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    let d = (s.constellation[i] - s.constellation[j]).norm();
                    if d < dmin * 1.001 {
                        assert_eq!((i ^ j).count_ones(), 1, "{m}: {i} vs {j} not Gray");
                    }
                }
            }
        }
    }

    #[test]
    fn modulate_places_bits_and_pilots() {
        let cfg = build_default_frame();
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qpsk);
        let bits = vec![0u8; 96];
        let sym = modulate(&bits, &s, &cfg, &[1, 1, 1, -1]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        for pos in cfg.data_positions() {
            assert_eq!(sym[pos], C64::new(r, r));
        }
        let pp = cfg.pilot_positions();
        assert_eq!(sym[pp[0]], C64::new(1.0, 0.0));
        assert_eq!(sym[pp[3]], C64::new(-1.0, 0.0));
    }

    #[test]
    fn modulate_wrong_bit_count() {
        let cfg = build_default_frame();
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qpsk);
        let e = modulate(&[0u8; 95], &s, &cfg, &[1, 1, 1, -1]);
        assert_eq!(e, Err(PhyError::BitCountMismatch { expected: 96, got: 95 }));
    }

    #[test]
    fn mod_demap_round_trip() {
        let cfg = build_default_frame();
        let mut rng = crate::numerics::RngStream::new(77, 0);
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            let s: ModScheme<f64> = ModScheme::new(m);
            let bits = rng.bits(cfg.data_count() * s.bits_per_symbol);
            let sym = modulate(&bits, &s, &cfg, &[1, 1, 1, -1]).unwrap();
            let back = demap(&sym, &s, &cfg).unwrap();
            assert_eq!(bits, back, "{m} round trip");
        }
    }

    #[test]
    fn demap_tie_break_lowest_bits() {
        let cfg = build_default_frame();
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qpsk);
        let zeros = vec![C64::new(0.0, 0.0); cfg.active_count()];
        let bits = demap(&zeros, &s, &cfg).unwrap();
        assert!(bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn demap_nearest_quadrant() {
        let cfg = build_default_frame();
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qpsk);
        let mut sym = vec![C64::new(0.7, -0.7); cfg.active_count()];
        for pos in cfg.pilot_positions() {
            sym[pos] = C64::new(1.0, 0.0);
        }
        let bits = demap(&sym, &s, &cfg).unwrap();
        // Quadrant (+, -) is bit pattern 01 for every data symbol.
        for pair in bits.chunks(2) {
            assert_eq!(pair, &[0, 1]);
        }
    }

    #[test]
    fn equalize_perfect_csi() {
        let cfg = build_default_frame();
        let s: ModScheme<f64> = ModScheme::new(Modulation::Qam16);
        let mut rng = crate::numerics::RngStream::new(5, 0);
        let bits = rng.bits(cfg.data_count() * 4);
        let x = modulate(&bits, &s, &cfg, &[1, 1, 1, -1]).unwrap();
        let h: Vec<C64> = (0..x.len())
            .map(|_| {
                let (a, b) = crate::numerics::gaussian_pair(&mut rng);
                C64::new(a, b)
            })
            .collect();
        let y: Vec<C64> = x.iter().zip(&h).map(|(xv, hv)| xv * hv).collect();
        let xh = equalize(&y, &h).unwrap();
        for (a, b) in xh.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(demap(&xh, &s, &cfg).unwrap(), bits);
    }

    #[test]
    fn equalize_reports_zero_bin() {
        let y = vec![C64::new(1.0, 0.0); 3];
        let mut h = vec![C64::new(1.0, 0.0); 3];
        h[2] = C64::new(0.0, 0.0);
        assert_eq!(equalize(&y, &h), Err(PhyError::DivisionByZero { bin: 2 }));
    }

    #[test]
    fn equalize_or_zero_passes_zero_bins_through() {
        let y = vec![C64::new(3.0, 0.0); 3];
        let mut h = vec![C64::new(1.0, 0.0); 3];
        h[2] = C64::new(0.0, 0.0);
        let x = equalize_or_zero(&y, &h).unwrap();
        assert_eq!(x[0], C64::new(3.0, 0.0));
        assert_eq!(x[2], C64::new(0.0, 0.0));
    }

    #[test]
    fn bit_error_counts() {
        assert_eq!(bit_errors(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), (0, 4));
        assert_eq!(bit_errors(&[0, 1, 1, 0], &[1, 0, 0, 1]).unwrap(), (4, 4));
        assert_eq!(bit_errors(&[0, 1, 1, 0], &[0, 0, 1, 0]).unwrap(), (1, 4));
        assert!(bit_errors(&[0], &[0, 1]).is_err());
    }
}
