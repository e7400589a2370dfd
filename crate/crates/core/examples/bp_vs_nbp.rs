//! Train NBP weights on the (32,16) code and compare with plain BP at the
//! same iteration count.

use nbpd::harness::{Code, Decoder, Simulator, StopRule};
use nbpd::training::{train_nbp, TrainConfig};

fn main() -> nbpd::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let code = Code::from_alist_file(concat!(env!("CARGO_MANIFEST_DIR"), "/codes/ldpc_32_16.alist"))?;
    let l_max = 5;
    let cfg = TrainConfig {
        l_max,
        steps: 100,
        learning_rate: 3e-3,
        ..TrainConfig::default()
    };
    let (weights, report) = train_nbp(&code.graph, &cfg)?;
    println!(
        "held-out multiloss {:.5} -> {:.5}",
        report.initial_heldout_loss, report.final_heldout_loss
    );

    let stop = StopRule {
        min_errors: 300,
        max_frames: 200_000,
    };
    for dec in [Decoder::Bp { l_max }, Decoder::Nbp { weights, l_max }] {
        let mut sim = Simulator::new(&code, &dec);
        sim.stop = stop;
        let r = sim.run_point(4.0)?;
        println!(
            "{:<7} BLER {:.3e}  95% [{:.3e}, {:.3e}]  ({} frames)",
            r.decoder, r.bler, r.ci95_low, r.ci95_high, r.frames
        );
    }
    Ok(())
}
