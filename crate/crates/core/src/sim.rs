//! Joint channel and backhaul draws shared by every estimator.

use rayon::prelude::*;

use crate::backhaul::{sample_backhaul, BackhaulState};
use crate::channel::{sample_channels, ChannelRealization};
use crate::config::SystemConfig;
use crate::rng;

/// One realization of the network: fading coefficients plus backhaul state.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub channels: ChannelRealization,
    pub backhaul: BackhaulState,
}

/// Draws channels first, then backhaul indicators, from the same generator.
pub fn sample_draw<R: rand::Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Draw {
    let channels = sample_channels(cfg, rng);
    let backhaul = sample_backhaul(&cfg.delta, rng);
    Draw { channels, backhaul }
}

/// The draws of one chunk of the stream identified by `seed`.
pub fn draw_chunk(cfg: &SystemConfig, seed: u64, chunk: usize, len: usize) -> Vec<Draw> {
    let mut rng = rng::chunk_rng(seed, chunk);
    (0..len).map(|_| sample_draw(cfg, &mut rng)).collect()
}

/// Maps every chunk of an `n`-draw stream in parallel; results come back in
/// chunk order.
pub fn map_chunks<T, F>(cfg: &SystemConfig, n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Vec<Draw>) -> T + Sync + Send,
{
    rng::chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| f(draw_chunk(cfg, seed, chunk, len)))
        .collect()
}
