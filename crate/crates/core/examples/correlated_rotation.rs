//! Correlated transmitters: a packing rotated onto the statistical beams
//! against statistical beamforming alone.

use mac_codebook::bf_codebook::{
    grassmann_codebook, grassmann_design, rotate_codebook, statistical_beams, statistical_codebook,
    GrassmannOptions,
};
use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::rates::expected_selected_rate;

fn main() -> mac_codebook::Result<()> {
    let dims = SystemDims::new(2, 2, 3)?;
    let model = ChannelModel::kronecker_diagonal(dims, &[1.2, 0.8])?;
    let eval = model.sample_many(4000, &mut seeded_rng(4, 1));
    let target = statistical_beams(&model.correlations());

    let packing = grassmann_design(3, dims, &GrassmannOptions::default())?;
    let rotated = rotate_codebook(&packing, &target)?;
    println!(
        "min distance before {:.4}, after {:.4}",
        packing.min_distance, rotated.min_distance
    );

    for snr_db in [0.0, 10.0, 20.0] {
        let power = 10f64.powf(snr_db / 10.0);
        let grass = grassmann_codebook(&rotated, power)?;
        let stat = statistical_codebook(&model.correlations(), dims, power)?;
        println!(
            "{snr_db:>4} dB: rotated B = 3 {:.4}, statistical {:.4}",
            expected_selected_rate(&eval, &grass, 1.0).mean,
            expected_selected_rate(&eval, &stat, 1.0).mean
        );
    }
    Ok(())
}
