//! Expected two-user rate regions of a 2-entry codebook and a 4-entry
//! extension of it, printed as polygon vertices.

use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::cov_codebook::{design, design_extension, TrainingSet};
use mac_codebook::lloyd::DesignOptions;
use mac_codebook::rates::region_2user;
use mac_codebook::waterfill::PowerBudget;

fn main() -> mac_codebook::Result<()> {
    let dims = SystemDims::new(2, 2, 2)?;
    let model = ChannelModel::iid(dims);
    let budget = PowerBudget::individual(vec![10.0, 10.0]);
    let training = TrainingSet::sample(&model, 1000, 1.0, &mut seeded_rng(5, 2))?;
    let eval = model.sample_many(4000, &mut seeded_rng(5, 1));
    let opts = DesignOptions {
        seed: 5,
        ..DesignOptions::default()
    };

    let u2 = design(&training, 1, &budget, &opts)?;
    let u4 = design_extension(&training, &u2, 2, &opts)?;
    for (name, book) in [("U2", &u2), ("U4", &u4)] {
        let region = region_2user(&eval, book.entries(), 10.0, 10.0, 1.0, 21)?;
        println!("{name}: area {:.3}, max sum rate {:.3}", region.polygon.area(), region.polygon.max_sum_rate());
        for v in region.polygon.vertices() {
            println!("  ({:.3}, {:.3})", v.r1, v.r2);
        }
    }
    Ok(())
}
