//! Fixed inputs shared by the benchmarks.

use cfmimo_core::channel::ChannelStats;
use cfmimo_core::grouping::lsf_ranking;
use cfmimo_core::scenario::generate_drop;
use cfmimo_core::{FronthaulParams, Grouping, SystemParams};

pub struct Fixture {
    pub params: SystemParams,
    pub fp: FronthaulParams,
    pub stats: ChannelStats,
    pub grouping: Grouping,
}

/// Reference network, one drop, the strongest `k_c` users centralized and
/// the next `k_d` distributed.
pub fn fixture(k_c: usize, k_d: usize, seed: u64) -> Fixture {
    let params = SystemParams::reference();
    let fp = FronthaulParams::reference(params.antennas as u32);
    let drop = generate_drop(&params, seed);
    let stats = ChannelStats::new(drop.beta.clone(), params.tau_u, params.rho_u);
    let top = lsf_ranking(&drop.beta);
    let grouping = Grouping::new(top[..k_c].to_vec(), top[k_c..k_c + k_d].to_vec());
    Fixture {
        params,
        fp,
        stats,
        grouping,
    }
}
