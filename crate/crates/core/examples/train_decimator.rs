//! Two-stage training on the (32,16) code: NBP weights first, then the
//! decimation MLP on the frozen weights along the genie path. Both are
//! written as JSON.

use nbpd::decimation::DecimatorParams;
use nbpd::training::{train_decimator, train_nbp, TrainConfig};
use nbpd::{parse_alist, NbpdConfig, WeightSet};

fn main() -> nbpd::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let g = parse_alist(include_str!("../codes/ldpc_32_16.alist"))?;
    let out = std::env::temp_dir();

    let (weights, _) = train_nbp(
        &g,
        &TrainConfig {
            l_max: 10,
            steps: 50,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        },
    )?;
    let wpath = out.join("nbp10_32_16.json");
    weights.save(&g, &wpath)?;

    let nbpd = NbpdConfig::new(10, 2, 1);
    let cfg = TrainConfig {
        steps: 50,
        learning_rate: 1e-2,
        ..TrainConfig::for_decimator()
    };
    let (params, report) = train_decimator(&g, &weights, &cfg, &nbpd)?;
    println!(
        "{nbpd}: held-out loss {:.5} -> {:.5} (no learned decimation: {:.5})",
        report.initial_heldout_loss, report.final_heldout_loss, report.baseline_heldout_loss
    );
    let mpath = out.join("mlp_32_16.json");
    params.save(&mpath)?;

    // Round trip.
    assert_eq!(WeightSet::load(&g, &wpath)?, weights);
    assert_eq!(DecimatorParams::load(&mpath)?, params);
    println!("wrote {} and {}", wpath.display(), mpath.display());
    Ok(())
}
