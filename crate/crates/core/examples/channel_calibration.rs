//! Uncoded BPSK over AWGN against the textbook bit error rate.

use nbpd::harness::{Code, Decoder, Simulator, StopRule};

fn q(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / 2f64.sqrt())
}

fn main() -> nbpd::Result<()> {
    let code = Code::uncoded(1000)?;
    let mut sim = Simulator::new(&code, &Decoder::Uncoded);
    sim.stop = StopRule {
        min_errors: u64::MAX,
        max_frames: 500,
    };
    println!("Eb/N0   simulated BER   Q(sqrt(2 Eb/N0))");
    for db in [0.0, 2.0, 4.0, 6.0] {
        let r = sim.run_point(db)?;
        let theory = q((2.0 * 10f64.powf(db / 10.0)).sqrt());
        println!("{db:>4.1}   {:.4e}      {:.4e}", r.ber, theory);
    }
    Ok(())
}
