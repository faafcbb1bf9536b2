//! Sub-frame resource layout: data, pilot and PSS resource elements.

use num_complex::Complex64;
use rand::Rng;

use super::ofdm::{OfdmParams, ResourceGrid};
use super::qam::{map_symbols, ConstellationOrder};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReRole {
    Data,
    Pilot,
    Pss,
    Null,
}

/// Role of every resource element of one sub-frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    n_symbols: usize,
    n_subcarriers: usize,
    roles: Vec<ReRole>,
}

impl Layout {
    /// Deterministic layout of sub-frame `subframe_index`.
    ///
    /// The PSS symbol (present when `subframe_index % pss_period == 0`) holds
    /// the PSS on its `pss_len` central subcarriers and nothing else. Every
    /// other symbol carries pilots on the resource elements whose row-major
    /// index is a multiple of `pilot_spacing`, and data elsewhere.
    pub fn new(params: &OfdmParams, subframe_index: u64) -> Result<Self> {
        params.validate()?;
        let (ns, nk) = (params.symbols_per_subframe, params.active_subcarriers);
        let has_pss = subframe_index.is_multiple_of(params.pss_period as u64) && params.pss_len > 0;
        let pss_start = (nk - params.pss_len) / 2;
        let roles = (0..ns * nk)
            .map(|idx| {
                let (l, k) = (idx / nk, idx % nk);
                if has_pss && l == params.pss_symbol_index {
                    if (pss_start..pss_start + params.pss_len).contains(&k) {
                        ReRole::Pss
                    } else {
                        ReRole::Null
                    }
                } else if idx % params.pilot_spacing == 0 {
                    ReRole::Pilot
                } else {
                    ReRole::Data
                }
            })
            .collect();
        Ok(Self {
            n_symbols: ns,
            n_subcarriers: nk,
            roles,
        })
    }

    pub fn role(&self, l: usize, k: usize) -> ReRole {
        self.roles[l * self.n_subcarriers + k]
    }

    pub fn roles(&self) -> &[ReRole] {
        &self.roles
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_symbols, self.n_subcarriers)
    }

    pub fn count(&self, role: ReRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    /// Row-major positions holding `role`.
    pub fn positions(&self, role: ReRole) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nk = self.n_subcarriers;
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r == role)
            .map(move |(i, _)| (i / nk, i % nk))
    }
}

/// One sub-frame of symbols together with the role of each element.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub grid: ResourceGrid,
    pub roles: Layout,
}

impl SymbolFrame {
    /// Values at the elements of `role`, row-major.
    pub fn values(&self, role: ReRole) -> Vec<Complex64> {
        self.roles
            .positions(role)
            .map(|(l, k)| self.grid.get(l, k))
            .collect()
    }
}

/// Seeded pseudo-random QPSK pilot sequence for one sub-frame.
pub fn pilot_sequence(subframe_index: u64, len: usize) -> Vec<Complex64> {
    let mut rng = seed::rng(seed::derive(seed::STREAM_PILOTS, &[subframe_index]));
    let v = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re = if rng.random::<bool>() { -v } else { v };
            let im = if rng.random::<bool>() { -v } else { v };
            Complex64::new(re, im)
        })
        .collect()
}

/// Unit-modulus Zadoff-Chu sequence `exp(-jπ u n(n+1) / len)`.
pub fn pss_sequence(root: u32, len: usize) -> Vec<Complex64> {
    let nzc = len.max(1) as f64;
    (0..len)
        .map(|n| {
            let n = n as f64;
            Complex64::from_polar(
                1.0,
                -std::f64::consts::PI * root as f64 * n * (n + 1.0) / nzc,
            )
        })
        .collect()
}

/// Fills a sub-frame: mapped payload on data elements (in row-major order),
/// seeded pilots and the PSS. Data elements beyond the payload stay empty and
/// are marked [`ReRole::Null`].
pub fn build_subframe(
    payload_bits: &[u8],
    order: ConstellationOrder,
    params: &OfdmParams,
    subframe_index: u64,
) -> Result<SymbolFrame> {
    let mut layout = Layout::new(params, subframe_index)?;
    let capacity = layout.count(ReRole::Data) * order.bits_per_symbol();
    if payload_bits.is_empty() {
        return Err(Error::Capacity("payload is empty".into()));
    }
    if payload_bits.len() > capacity {
        return Err(Error::Capacity(format!(
            "{} payload bits exceed the {capacity}-bit data capacity",
            payload_bits.len()
        )));
    }
    let symbols = map_symbols(payload_bits, order)?;
    let (ns, nk) = layout.shape();
    let mut grid = ResourceGrid::zeros(ns, nk);

    let pilots = pilot_sequence(subframe_index, layout.count(ReRole::Pilot));
    let pss = pss_sequence(params.pss_root, layout.count(ReRole::Pss));
    let mut data = symbols.into_iter();
    let (mut pi, mut si) = (pilots.into_iter(), pss.into_iter());
    for idx in 0..ns * nk {
        let (l, k) = (idx / nk, idx % nk);
        match layout.roles[idx] {
            ReRole::Data => match data.next() {
                Some(v) => grid.set(l, k, v),
                None => layout.roles[idx] = ReRole::Null,
            },
            ReRole::Pilot => grid.set(l, k, pi.next().expect("pilot count")),
            ReRole::Pss => grid.set(l, k, si.next().expect("pss count")),
            ReRole::Null => {}
        }
    }
    Ok(SymbolFrame {
        grid,
        roles: layout,
    })
}

/// Data capacity of sub-frame `subframe_index`, in bits.
pub fn data_capacity(
    params: &OfdmParams,
    order: ConstellationOrder,
    subframe_index: u64,
) -> Result<usize> {
    Ok(Layout::new(params, subframe_index)?.count(ReRole::Data) * order.bits_per_symbol())
}
