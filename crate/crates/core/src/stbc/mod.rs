//! Alamouti 2×1 transmit diversity.
//!
//! Two symbols `(x1, x2)` occupy two symbol intervals:
//!
//! ```text
//! antenna 1: [ x1, -conj(x2) ]
//! antenna 2: [ x2,  conj(x1) ]
//! ```
//!
//! The receiver stacks the first-interval sample and the conjugate of the
//! second, `[y1, conj(y2)]`, which equals `H·[x1, x2] + n` with
//! `H = [[h11, h12], [conj(h12), -conj(h11)]]`. Noise and interference
//! arguments of this module live in that stacked domain, i.e. the second
//! component is already conjugated.

mod link;

pub use link::{run_stbc_link, run_stbc_subframe, EstimationMode, LinkFrameResult, StbcLinkConfig};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Pair = (Complex64, Complex64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StbcPair {
    pub antenna1: [Complex64; 2],
    pub antenna2: [Complex64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    Known,
    PilotClean,
    PilotContaminated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub h11: Complex64,
    pub h12: Complex64,
    pub source: EstimateSource,
}

impl ChannelEstimate {
    pub fn known(h11: Complex64, h12: Complex64) -> Self {
        Self {
            h11,
            h12,
            source: EstimateSource::Known,
        }
    }

    pub fn gain(&self) -> f64 {
        self.h11.norm_sqr() + self.h12.norm_sqr()
    }
}

pub fn alamouti_encode(x1: Complex64, x2: Complex64) -> StbcPair {
    StbcPair {
        antenna1: [x1, -x2.conj()],
        antenna2: [x2, x1.conj()],
    }
}

/// Stacked receive vector `[y1, conj(y2)]` for one pair, with optional
/// additive interference.
pub fn alamouti_receive(
    pair: &StbcPair,
    h11: Complex64,
    h12: Complex64,
    noise: Pair,
    interference: Option<Pair>,
) -> Pair {
    let (i1, i2) = interference.unwrap_or_default();
    let y1 = h11 * pair.antenna1[0] + h12 * pair.antenna2[0];
    let y2 = h11 * pair.antenna1[1] + h12 * pair.antenna2[1];
    (y1 + i1 + noise.0, y2.conj() + i2 + noise.1)
}

/// Matched combining `r = Hᴴ·y`. Returns `(r1, r2, gain)`; `r_k / gain`
/// estimates `x_k`.
pub fn alamouti_combine(
    received: Pair,
    est: &ChannelEstimate,
) -> Result<(Complex64, Complex64, f64)> {
    let gain = est.gain();
    if !(gain > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let (y1, y2c) = received;
    let r1 = est.h11.conj() * y1 + est.h12 * y2c;
    let r2 = est.h12.conj() * y1 - est.h11 * y2c;
    Ok((r1, r2, gain))
}

/// Least-squares channel estimate from known pilot pairs.
///
/// Each pair gives `[y1, conj(y2c)] = X·[h11, h12]` with
/// `X = [[x1, x2], [-conj(x2), conj(x1)]]`, and `XᴴX = (|x1|²+|x2|²)·I`,
/// so the stacked normal equations reduce to `Σ Xᴴ·obs / Σ (|x1|²+|x2|²)`.
/// `contamination`, when given, is added to the observations.
pub fn estimate_channel_pilots(
    rx: &[Pair],
    known: &[Pair],
    contamination: Option<&[Pair]>,
) -> Result<ChannelEstimate> {
    if rx.is_empty() || rx.len() != known.len() {
        return Err(Error::Estimation(format!(
            "{} received pilot pairs for {} known pairs",
            rx.len(),
            known.len()
        )));
    }
    if let Some(c) = contamination {
        if c.len() != rx.len() {
            return Err(Error::Estimation(
                "contamination length differs from pilot count".into(),
            ));
        }
    }
    let mut num11 = Complex64::new(0.0, 0.0);
    let mut num12 = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for (idx, (&(y1, y2c), &(x1, x2))) in rx.iter().zip(known).enumerate() {
        let (i1, i2) = contamination.map_or_else(Default::default, |c| c[idx]);
        let o1 = y1 + i1;
        let o2 = (y2c + i2).conj();
        num11 += x1.conj() * o1 - x2 * o2;
        num12 += x2.conj() * o1 + x1 * o2;
        energy += x1.norm_sqr() + x2.norm_sqr();
    }
    if !(energy > 0.0) {
        return Err(Error::Estimation("pilot pairs carry no energy".into()));
    }
    let source = if contamination.is_some() {
        EstimateSource::PilotContaminated
    } else {
        EstimateSource::PilotClean
    };
    Ok(ChannelEstimate {
        h11: num11 / energy,
        h12: num12 / energy,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::seed;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const Z: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    #[test]
    fn encode_examples() {
        let p = alamouti_encode(c(1., 0.), c(0., 1.));
        assert_eq!(p.antenna1, [c(1., 0.), c(0., 1.)]);
        assert_eq!(p.antenna2, [c(0., 1.), c(1., 0.)]);
        let z = alamouti_encode(Z, Z);
        assert_eq!(z.antenna1, [Z, Z]);
        assert_eq!(z.antenna2, [Z, Z]);
    }

    #[test]
    fn encode_power_and_orthogonality() {
        let mut rng = seed::rng(1);
        for _ in 0..100 {
            let (x1, x2) = (
                complex_gaussian(&mut rng, 1.0),
                complex_gaussian(&mut rng, 1.0),
            );
            let p = alamouti_encode(x1, x2);
            let pw = x1.norm_sqr() + x2.norm_sqr();
            for t in 0..2 {
                let it = p.antenna1[t].norm_sqr() + p.antenna2[t].norm_sqr();
                assert!((it - pw).abs() < 1e-12);
            }
            let dot = p.antenna1[0] * p.antenna2[0].conj() + p.antenna1[1] * p.antenna2[1].conj();
            assert_eq!(dot, Z);
        }
    }

    #[test]
    fn receive_with_single_path() {
        let (x1, x2) = (c(0.3, -0.2), c(-1.0, 0.5));
        let y = alamouti_receive(&alamouti_encode(x1, x2), c(1., 0.), Z, (Z, Z), None);
        // Second stacked row is [conj(h12), -conj(h11)]·x.
        assert_eq!(y, (x1, -x2));
        let (r1, r2, g) = alamouti_combine(y, &ChannelEstimate::known(c(1., 0.), Z)).unwrap();
        assert_eq!((r1 / g, r2 / g), (x1, x2));
    }

    #[test]
    fn receive_noise_only() {
        let n = (c(0.1, 0.2), c(-0.3, 0.4));
        assert_eq!(
            alamouti_receive(&alamouti_encode(Z, Z), c(0.7, 0.1), c(0.2, -0.9), n, None),
            n
        );
    }

    #[test]
    fn receive_matches_matrix_product() {
        let mut rng = seed::rng(2);
        for _ in 0..200 {
            let mut g = || complex_gaussian(&mut rng, 1.0);
            let (x1, x2, h11, h12, n1, n2, i1, i2) = (g(), g(), g(), g(), g(), g(), g(), g());
            let y = alamouti_receive(&alamouti_encode(x1, x2), h11, h12, (n1, n2), Some((i1, i2)));
            let e1 = h11 * x1 + h12 * x2 + i1 + n1;
            let e2 = h12.conj() * x1 - h11.conj() * x2 + i2 + n2;
            assert!((y.0 - e1).norm() < 1e-14 && (y.1 - e2).norm() < 1e-14);
        }
    }

    #[test]
    fn unit_gain_channel_recovers_symbols() {
        let (h11, h12) = (c(0.6, 0.), c(0., 0.8));
        let (x1, x2) = (c(0.7, -0.7), c(-0.2, 0.9));
        let y = alamouti_receive(&alamouti_encode(x1, x2), h11, h12, (Z, Z), None);
        let (r1, r2, g) = alamouti_combine(y, &ChannelEstimate::known(h11, h12)).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert!((r1 - x1).norm() < 1e-14 && (r2 - x2).norm() < 1e-14);
    }

    #[test]
    fn zero_channel_is_degenerate() {
        assert!(matches!(
            alamouti_combine((Z, Z), &ChannelEstimate::known(Z, Z)),
            Err(Error::DegenerateChannel)
        ));
    }

    #[test]
    fn combine_noise_expansion() {
        let mut rng = seed::rng(3);
        for _ in 0..200 {
            let mut g = || complex_gaussian(&mut rng, 1.0);
            let (x1, x2, h11, h12, n1, n2) = (g(), g(), g(), g(), g(), g());
            let y = alamouti_receive(&alamouti_encode(x1, x2), h11, h12, (n1, n2), None);
            let (r1, r2, gain) = alamouti_combine(y, &ChannelEstimate::known(h11, h12)).unwrap();
            assert!((r1 - (gain * x1 + h11.conj() * n1 + h12 * n2)).norm() < 1e-13);
            assert!((r2 - (gain * x2 + h12.conj() * n1 - h11 * n2)).norm() < 1e-13);
        }
    }

    #[test]
    fn clean_pilots_give_exact_channel() {
        let (h11, h12) = (c(0.4, -1.2), c(-0.3, 0.25));
        let x = (c(1., 1.) / 2f64.sqrt(), c(1., -1.) / 2f64.sqrt());
        let y = alamouti_receive(&alamouti_encode(x.0, x.1), h11, h12, (Z, Z), None);
        let e = estimate_channel_pilots(&[y], &[x], None).unwrap();
        assert!((e.h11 - h11).norm() < 1e-12 && (e.h12 - h12).norm() < 1e-12);
        assert_eq!(e.source, EstimateSource::PilotClean);
    }

    #[test]
    fn contamination_error_scales_linearly() {
        let (h11, h12) = (c(0.9, 0.1), c(-0.2, 0.6));
        let x = (c(1., 0.), c(1., 0.));
        let y = alamouti_receive(&alamouti_encode(x.0, x.1), h11, h12, (Z, Z), None);
        let dev = |eps: f64| {
            let e = estimate_channel_pilots(&[y], &[x], Some(&[(c(eps, 0.), Z)])).unwrap();
            assert_eq!(e.source, EstimateSource::PilotContaminated);
            ((e.h11 - h11).norm_sqr() + (e.h12 - h12).norm_sqr()).sqrt()
        };
        let d: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| dev(e)).collect();
        assert!(d[2] < 1e-2);
        for w in d.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 10.0).abs() < 0.5, "{ratio}");
        }
    }

    #[test]
    fn averaging_pilots_reduces_error() {
        let mut rng = seed::rng(4);
        let (h11, h12) = (c(0.5, 0.5), c(-0.7, 0.1));
        let sigma2 = 0.01;
        let trials = 2000;
        let mut run = |n: usize| {
            let mut acc = 0.0;
            for _ in 0..trials {
                let known: Vec<Pair> = (0..n)
                    .map(|_| {
                        (
                            complex_gaussian(&mut rng, 1.0),
                            complex_gaussian(&mut rng, 1.0),
                        )
                    })
                    .map(|(a, b)| (a / a.norm(), b / b.norm()))
                    .collect();
                let rx: Vec<Pair> = known
                    .iter()
                    .map(|&(a, b)| {
                        let n = (
                            complex_gaussian(&mut rng, sigma2),
                            complex_gaussian(&mut rng, sigma2),
                        );
                        alamouti_receive(&alamouti_encode(a, b), h11, h12, n, None)
                    })
                    .collect();
                let e = estimate_channel_pilots(&rx, &known, None).unwrap();
                acc += (e.h11 - h11).norm_sqr() + (e.h12 - h12).norm_sqr();
            }
            acc / trials as f64
        };
        let single = run(1);
        let hundred = run(100);
        let ratio = hundred / (single / 100.0);
        assert!(ratio > 1.0 / 3.0 && ratio < 3.0, "{ratio}");
    }

    #[test]
    fn singular_pilots() {
        assert!(matches!(
            estimate_channel_pilots(&[(Z, Z)], &[(Z, Z)], None),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn noiseless_estimate_converges() {
        let (h11, h12) = (c(-0.1, 0.3), c(1.1, -0.4));
        let x = (c(0.6, 0.8), c(-1.0, 0.0));
        let n = (c(1e-12, 0.0), c(0.0, -1e-12));
        let y = alamouti_receive(&alamouti_encode(x.0, x.1), h11, h12, n, None);
        let e = estimate_channel_pilots(&[y], &[x], None).unwrap();
        assert!((e.h11 - h11).norm() < 1e-10 && (e.h12 - h12).norm() < 1e-10);
    }
}
