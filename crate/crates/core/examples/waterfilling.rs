//! Single-user waterfilling and the two iterative MAC solvers on one
//! random channel.

use mac_codebook::channel::{seeded_rng, ChannelModel, SystemDims};
use mac_codebook::waterfill::{iwf_individual, iwf_sum_power, waterfill_single, IwfOptions};

fn main() -> mac_codebook::Result<()> {
    let lambda = [2.0, 0.7, 0.05];
    let p = waterfill_single(&lambda, 1.5, 1.0)?;
    println!("modes {lambda:?} with P = 1.5 get powers {p:.4?}");

    let dims = SystemDims::new(3, 2, 2)?;
    let h = ChannelModel::iid(dims).sample(&mut seeded_rng(7, 0));
    let opts = IwfOptions::default();

    let sum = iwf_sum_power(h.blocks(), 10.0, 1.0, &opts)?;
    println!(
        "sum power 10: {:.4} bits after {} iterations, traces {:.3?}",
        sum.objective,
        sum.iterations,
        sum.covariances.traces()
    );

    let ind = iwf_individual(h.blocks(), &[4.0, 3.0, 3.0], 1.0, &opts)?;
    println!(
        "individual (4, 3, 3): {:.4} bits after {} iterations",
        ind.objective, ind.iterations
    );
    for (i, f) in ind.history.iter().take(6).enumerate() {
        println!("  iteration {i}: {f:.6}");
    }
    Ok(())
}
