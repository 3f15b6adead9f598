//! Grassmannian packing of per-user beam directions against a random
//! codebook with the same random power splits.

use mac_codebook::bf_codebook::{grassmann_codebook, grassmann_design, random_codebook, GrassmannOptions};
use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::rates::expected_selected_rate;

fn main() -> mac_codebook::Result<()> {
    let dims = SystemDims::new(2, 2, 3)?;
    let eval = ChannelModel::iid(dims).sample_many(4000, &mut seeded_rng(3, 1));
    let power = 10.0;

    for bits in 1..=3 {
        let opts = GrassmannOptions {
            seed: 3,
            ..GrassmannOptions::default()
        };
        let packing = grassmann_design(bits, dims, &opts)?;
        let grass = grassmann_codebook(&packing, power)?;
        let random = random_codebook(bits, dims, power, 3)?;
        let (g, r) = (
            expected_selected_rate(&eval, &grass, 1.0),
            expected_selected_rate(&eval, &random, 1.0),
        );
        println!(
            "B = {bits}: min distance {:.4} vs {:.4}; sum rate {:.4} vs {:.4}",
            packing.min_distance,
            random.meta().min_distance.unwrap(),
            g.mean,
            r.mean
        );
    }
    Ok(())
}
