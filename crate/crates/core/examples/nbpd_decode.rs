//! Decode one noisy CCSDS frame with NBP-D(10,3,0) and show the tree.

use nbpd::channel::{ebn0_to_sigma, transmit};
use nbpd::code_graph::ccsds_128_64;
use nbpd::{decode_nbp, nbp_d_decode, NbpdConfig, WeightSet};

fn main() -> nbpd::Result<()> {
    let g = ccsds_128_64();
    let w = WeightSet::uniform(&g);
    let sigma = ebn0_to_sigma(2.5, 0.5)?;

    let cfg = NbpdConfig::new(10, 3, 0);
    // Find a frame that plain BP(10) gets wrong and NBP-D recovers.
    let (seed, out) = (0u64..)
        .map(|s| (s, transmit(&vec![1.0; g.n()], sigma, s).unwrap()))
        .filter(|(_, o)| {
            let r = decode_nbp(&g, &w, &o.llr, 10, false).unwrap();
            r.final_hard_decision.iter().any(|&b| b != 0)
        })
        .map(|(s, o)| {
            let out = nbp_d_decode(&g, &w, None, &o.llr, &o.y, cfg).unwrap();
            (s, out)
        })
        .find(|(_, out)| out.codeword.iter().all(|&b| b == 0))
        .unwrap();
    println!("frame {seed}: BP(10) fails, NBP-D recovers it");

    for (j, (b, c)) in out.branches.iter().zip(&out.candidates).enumerate() {
        let decisions: Vec<String> = b
            .decimation_bits()
            .map(|(v, bit)| format!("v{v}={bit}"))
            .collect();
        println!(
            "branch {j}: {:<24} codeword {:<5} bit errors {}",
            decisions.join(" "),
            g.syndrome_ok(c)?,
            c.iter().filter(|&&x| x != 0).count()
        );
    }
    let errs = out.codeword.iter().filter(|&&x| x != 0).count();
    println!("{cfg} selects branch {} with {errs} bit errors", out.selected);
    Ok(())
}
