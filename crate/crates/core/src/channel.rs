//! Flat MIMO channel with per-antenna precoder weights and receiver noise.
//!
//! Receive antenna `i` sees `y_i[n] = Σ_j h_ij w_j x_j[n] + n_i[n]`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::waveform::IqBuffer;

/// Row-major `n_r × n_t` channel coefficients, constant over one sub-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_r: usize,
    n_t: usize,
    h: Vec<Complex64>,
    pub subframe_index: u64,
}

impl ChannelMatrix {
    pub fn new(rows: Vec<Vec<Complex64>>, subframe_index: u64) -> Result<Self> {
        let n_r = rows.len();
        let n_t = rows.first().map_or(0, Vec::len);
        if n_r == 0 || n_t == 0 || rows.iter().any(|r| r.len() != n_t) {
            return Err(Error::Validation(
                "channel matrix must be a non-empty rectangle".into(),
            ));
        }
        let h: Vec<Complex64> = rows.into_iter().flatten().collect();
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(
                "channel coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            n_r,
            n_t,
            h,
            subframe_index,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.h[i * self.n_t + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.h[i * self.n_t..(i + 1) * self.n_t]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Fixed(Vec<Vec<Complex64>>),
    RayleighIid { seed: u64 },
}

/// Circularly-symmetric complex Gaussian sample with `E|z|² = variance`.
pub(crate) fn complex_gaussian<R: rand::Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn gen_channel(kind: &ChannelKind, n_r: usize, n_t: usize) -> Result<ChannelMatrix> {
    if n_r == 0 || n_t == 0 {
        return Err(Error::Validation(
            "channel needs at least one antenna per side".into(),
        ));
    }
    match kind {
        ChannelKind::Fixed(rows) => {
            let m = ChannelMatrix::new(rows.clone(), 0)?;
            if (m.n_r, m.n_t) != (n_r, n_t) {
                return Err(Error::InputShape(format!(
                    "fixed channel is {}x{}, expected {n_r}x{n_t}",
                    m.n_r, m.n_t
                )));
            }
            Ok(m)
        }
        ChannelKind::RayleighIid { seed } => {
            let mut rng = seed::rng(*seed);
            let rows = (0..n_r)
                .map(|_| (0..n_t).map(|_| complex_gaussian(&mut rng, 1.0)).collect())
                .collect();
            ChannelMatrix::new(rows, 0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Power per complex sample.
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn silent() -> Self {
        Self {
            variance: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderWeights(pub Vec<Complex64>);

impl PrecoderWeights {
    pub fn identity(n_t: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); n_t])
    }
}

/// White complex Gaussian noise buffer.
pub fn awgn(len: usize, variance: f64, seed: u64, sample_rate: f64) -> Result<IqBuffer> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(Error::Validation(format!(
            "noise variance must be non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(IqBuffer::zeros(len, sample_rate));
    }
    let mut rng = seed::rng(seed);
    Ok(IqBuffer::new(
        (0..len)
            .map(|_| complex_gaussian(&mut rng, variance))
            .collect(),
        sample_rate,
    ))
}

pub fn apply_channel(
    tx: &[IqBuffer],
    h: &ChannelMatrix,
    w: &PrecoderWeights,
    noise: &NoiseSpec,
) -> Result<Vec<IqBuffer>> {
    if tx.len() != h.n_t || w.0.len() != h.n_t {
        return Err(Error::InputShape(format!(
            "{} transmit buffers and {} weights for a channel with {} transmit antennas",
            tx.len(),
            w.0.len(),
            h.n_t
        )));
    }
    if w.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Validation("precoder weights must be finite".into()));
    }
    let len = tx[0].len();
    if tx.iter().any(|b| b.len() != len) {
        return Err(Error::InputShape(
            "transmit buffers differ in length".into(),
        ));
    }
    let rate = tx[0].sample_rate;
    (0..h.n_r)
        .map(|i| {
            let coeff: Vec<Complex64> = h.row(i).iter().zip(&w.0).map(|(h, w)| h * w).collect();
            let mut y = awgn(
                len,
                noise.variance,
                seed::derive(noise.seed, &[i as u64]),
                rate,
            )?;
            for (c, x) in coeff.iter().zip(tx) {
                for (out, s) in y.samples.iter_mut().zip(&x.samples) {
                    *out += c * s;
                }
            }
            Ok(y)
        })
        .collect()
}
