//! Prints the `2^M x 2^M` table of `P(x | n, s)` for a small array; its
//! support traces a Sierpinski-like triangle.
//!
//! `cargo run --example sierpinski_matrix -- 4 3`

use qrng_entropy::conditional::sierpinski_matrix;

fn main() -> qrng_entropy::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let pixels = args.next().map_or(3, |a| a.parse().expect("pixel count"));
    let photons = args.next().map_or(2, |a| a.parse().expect("photon count"));
    let mat = sierpinski_matrix(pixels, photons)?;
    println!("rows: s (activation pattern), columns: x (outcome), M = {pixels}, n = {photons}");
    for s in 0..mat.dim() {
        let row: String = mat.row(s).iter().map(|&p| if p > 0.0 { '#' } else { '.' }).collect();
        println!("{s:0width$b} {row}", width = pixels);
    }
    println!();
    mat.write_csv(std::io::stdout().lock())?;
    Ok(())
}
