//! A BLER sweep written as CSV, the same as `nbpd simulate`.
//!
//! cargo run --release --example bler_sweep -- out.csv

use nbpd::code_graph::ccsds_128_64;
use nbpd::harness::{to_csv, write_csv, Code, Decoder, Simulator, StopRule};

fn main() -> nbpd::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let code = Code::new(ccsds_128_64())?;
    let dec = Decoder::Bp { l_max: 20 };
    let mut sim = Simulator::new(&code, &dec);
    sim.stop = StopRule {
        min_errors: 50,
        max_frames: 20_000,
    };
    sim.seed = 7;
    let records = sim.run_sweep(&[1.0, 1.5, 2.0, 2.5, 3.0])?;
    match std::env::args().nth(1) {
        Some(path) => write_csv(&path, &records)?,
        None => print!("{}", to_csv(&records)),
    }
    Ok(())
}
