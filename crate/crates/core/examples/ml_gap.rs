//! Brute-force ML against BP and NBP-D on the (32,16) code. With `n_D`
//! growing the decoding tree approaches ML.

use nbpd::decimation::Selection;
use nbpd::harness::{Code, Decoder, Simulator, StopRule};
use nbpd::oracle::Codebook;
use nbpd::{NbpdConfig, WeightSet};

fn main() -> nbpd::Result<()> {
    let code = Code::from_alist_file(concat!(env!("CARGO_MANIFEST_DIR"), "/codes/ldpc_32_16.alist"))?;
    let w = WeightSet::uniform(&code.graph);
    let nbpd = |n_d| Decoder::Nbpd {
        weights: w.clone(),
        params: None,
        cfg: NbpdConfig::new(10, n_d, 0),
        selection: Selection::CodewordFirst,
    };
    let decoders = [
        Decoder::Bp { l_max: 50 },
        nbpd(1),
        nbpd(2),
        nbpd(4),
        nbpd(6),
        Decoder::Ml {
            codebook: Codebook::from_generator(&code.gen)?,
        },
    ];
    let db = 3.5;
    println!("BLER at {db} dB");
    for dec in &decoders {
        let mut sim = Simulator::new(&code, dec);
        sim.stop = StopRule {
            min_errors: 100,
            max_frames: 50_000,
        };
        let r = sim.run_point(db)?;
        println!("{:<14} {:.3e} ({} / {})", r.decoder, r.bler, r.block_errors, r.frames);
    }
    Ok(())
}
