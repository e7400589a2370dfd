//! Reverse-mode gradient of the NBP multiloss against central differences
//! for a handful of weights.

use nbpd::channel::{ebn0_to_sigma, transmit};
use nbpd::decoder::count_weights;
use nbpd::training::{multiloss, nbp_forward_with_tape};
use nbpd::{decode_nbp, parse_alist, WeightSet};

fn main() -> nbpd::Result<()> {
    let g = parse_alist(include_str!("../codes/ldpc_32_16.alist"))?;
    let w = WeightSet::uniform(&g);
    let obs = transmit(&vec![1.0; g.n()], ebn0_to_sigma(1.5, 0.5)?, 11)?;
    let bits = vec![0u8; g.n()];
    let l_max = 5;

    let mut un = nbp_forward_with_tape(&g, &w, &obs.llr, l_max)?;
    let loss = un.loss(&bits)?;
    let grad = un.gradient(loss);
    println!("loss {:.6}, {} weights", un.tape.value(loss), count_weights(&g));

    let flat = w.to_flat();
    let h = 1e-5;
    let eval = |p: &[f64]| -> nbpd::Result<f64> {
        let w = WeightSet::from_flat(&g, p)?;
        multiloss(&decode_nbp(&g, &w, &obs.llr, l_max, false)?.posteriors_per_iteration, &bits)
    };
    println!("{:>5} {:>13} {:>13}", "slot", "reverse", "central diff");
    for i in (0..flat.len()).step_by(37) {
        let (mut up, mut down) = (flat.clone(), flat.clone());
        up[i] += h;
        down[i] -= h;
        let fd = (eval(&up)? - eval(&down)?) / (2.0 * h);
        println!("{i:>5} {:>13.6e} {fd:>13.6e}", grad[i]);
    }
    Ok(())
}
