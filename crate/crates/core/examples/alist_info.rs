//! Load a parity-check matrix from an alist file and print its structure.
//!
//! cargo run --example alist_info -- codes/ccsds_128_64.alist

use nbpd::decimation::count_decimator_params;
use nbpd::decoder::count_weights;
use nbpd::{derive_generator, parse_alist};

fn main() -> nbpd::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/codes/ccsds_128_64.alist").into());
    let g = parse_alist(&std::fs::read_to_string(&path)?)?;
    let gen = derive_generator(&g)?;
    println!("{path}");
    println!("  n = {}, m = {}, k = {}, E = {}", g.n(), g.m(), gen.k(), g.num_edges());
    println!("  VN degrees {:?}", g.vn_degree_profile());
    println!("  CN degrees {:?}", g.cn_degree_profile());
    println!("  NBP weights: {}", count_weights(&g));
    println!("  decimation MLP parameters: {}", count_decimator_params(g.max_vn_degree()));
    // Systematic positions of the derived generator.
    println!("  information set: {:?}", &gen.systematic_positions()[..gen.k().min(16)]);
    Ok(())
}
