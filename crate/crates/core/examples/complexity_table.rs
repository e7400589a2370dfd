//! Check-node update counts and parameter counts for the CCSDS decoders.

use nbpd::code_graph::ccsds_128_64;
use nbpd::decimation::{complexity, count_decimator_params};
use nbpd::decoder::count_weights;

fn main() {
    let g = ccsds_128_64();
    let (dc, m) = (g.avg_cn_degree(), g.m());
    let weights = count_weights(&g);
    let mlp = count_decimator_params(g.max_vn_degree());
    let base = complexity(50, 0, 0, dc, m);
    println!("{:<16} {:>10} {:>8} {:>8}", "decoder", "CN updates", "x NBP50", "weights");
    for (name, l, nd, nld) in [
        ("NBP(50)", 50, 0, 0),
        ("NBP-D(10,4,0)", 10, 4, 0),
        ("NBP-D(10,4,1)", 10, 4, 1),
        ("NBP-D(10,4,4)", 10, 4, 4),
    ] {
        let c = complexity(l, nd, nld, dc, m);
        let params = weights + if nld > 0 { mlp } else { 0 };
        println!("{name:<16} {c:>10} {:>8.2} {params:>8}", c / base);
    }
}
