//! The six-pixel, four-photon configuration worked by hand: which photon
//! arrangements produce `x = 111000` when pixels 5 and 6 are switched off.

use qrng_entropy::bits::PixelBits;
use qrng_entropy::combinatorics::{count_partitions_oracle, ordered_r_stirling2, r_stirling2, r_stirling2_recurrence};
use qrng_entropy::conditional::{cond_prob, cond_prob_oracle, NumericMode};

fn main() -> qrng_entropy::error::Result<()> {
    let (n, k, r) = (4, 3, 2);
    println!("{{6 brace 5}}_2 explicit    = {}", r_stirling2(n, k, r));
    println!("{{6 brace 5}}_2 enumerated  = {}", count_partitions_oracle(n, k, r)?);
    for p in 0..=r {
        println!("{{6 brace 5}}_2 shift p = {p}  = {}", r_stirling2_recurrence(n + r, k + r, r, p)?);
    }
    println!("k! {{6 brace 5}}_2          = {}", ordered_r_stirling2(n, k, r));

    let x = PixelBits::from_digits(&[1, 1, 1, 0, 0, 0]);
    let s = PixelBits::from_digits(&[1, 1, 1, 1, 0, 0]);
    let closed = cond_prob(&x, n, &s, NumericMode::Exact)?;
    println!("P(x | n, s) closed form   = {}", closed.exact().expect("exact mode"));
    println!("P(x | n, s) arrangements  = {}", cond_prob_oracle(&x, n, &s)?);
    println!("P(x | n, s) log mode      = {:.16e}", cond_prob(&x, n, &s, NumericMode::Log)?.to_f64());
    Ok(())
}
