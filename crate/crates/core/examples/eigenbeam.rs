//! Eigenbeamforming codebooks: one beam per user, trained with Lloyd's
//! algorithm on channel draws.

use mac_codebook::bf_codebook::{eigenbeam_design, eigenbeam_design_grown};
use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::cov_codebook::TrainingSet;
use mac_codebook::lloyd::DesignOptions;
use mac_codebook::rates::{expected_selected_rate, monte_carlo, no_feedback_rate};
use mac_codebook::waterfill::PowerBudget;

fn main() -> mac_codebook::Result<()> {
    let dims = SystemDims::new(3, 3, 3)?;
    let model = ChannelModel::iid(dims);
    let power = 10f64.powf(0.5);
    let training = TrainingSet::sample(&model, 1000, 1.0, &mut seeded_rng(2, 2))?;
    let eval = model.sample_many(3000, &mut seeded_rng(2, 1));
    let opts = DesignOptions {
        restarts: 2,
        max_rounds: 20,
        seed: 2,
        ..DesignOptions::default()
    };

    let nf = monte_carlo(&eval, |h| no_feedback_rate(h, &PowerBudget::sum(power), 1.0))?;
    println!("5 dB, (3, 3, 3)\nno feedback {:.4}", nf.mean);
    let mut book = eigenbeam_design(&training, 1, power, &opts)?;
    for bits in 1..=3 {
        if bits > 1 {
            book = eigenbeam_design_grown(&training, &book, bits, &opts)?;
        }
        let est = expected_selected_rate(&eval, &book, 1.0);
        println!("B = {bits}       {:.4} +/- {:.4}", est.mean, est.stderr);
    }
    let first = &book.entries()[0];
    println!("first codeword amplitudes {:.3?}", first.amplitudes());
    Ok(())
}
