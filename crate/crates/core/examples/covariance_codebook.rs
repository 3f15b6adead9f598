//! Lloyd design of nested covariance codebooks for a (2, 2, 4) uplink,
//! compared against no feedback and full CSI, then saved as JSON.

use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::codebook_io::AnyCodebook;
use mac_codebook::cov_codebook::{design, design_grown, TrainingSet};
use mac_codebook::lloyd::DesignOptions;
use mac_codebook::rates::{expected_selected_rate, full_csi_rate, monte_carlo, no_feedback_rate};
use mac_codebook::waterfill::PowerBudget;

fn main() -> mac_codebook::Result<()> {
    let dims = SystemDims::new(2, 2, 4)?;
    let model = ChannelModel::iid(dims);
    let budget = PowerBudget::sum(10.0); // 10 dB with unit noise
    let training = TrainingSet::sample(&model, 1000, 1.0, &mut seeded_rng(1, 2))?;
    let eval = model.sample_many(3000, &mut seeded_rng(1, 1));
    let opts = DesignOptions {
        restarts: 2,
        max_rounds: 20,
        seed: 1,
        ..DesignOptions::default()
    };

    let nf = monte_carlo(&eval, |h| no_feedback_rate(h, &budget, 1.0))?;
    let full = monte_carlo(&eval, |h| full_csi_rate(h, &budget, 1.0))?;
    println!("no feedback  {:.4} +/- {:.4}", nf.mean, nf.stderr);

    let mut book = design(&training, 1, &budget, &opts)?;
    for bits in 1..=4 {
        if bits > 1 {
            book = design_grown(&training, &book, bits, &opts)?;
        }
        let est = expected_selected_rate(&eval, book.entries(), 1.0);
        println!(
            "B = {bits}        {:.4} +/- {:.4}  (training {:.4}, {} rounds)",
            est.mean,
            est.stderr,
            book.meta().training_objective,
            book.meta().rounds
        );
    }
    println!("full CSI     {:.4} +/- {:.4}", full.mean, full.stderr);

    let path = std::env::temp_dir().join("covariance_B4.json");
    AnyCodebook::Covariance(book).save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}
