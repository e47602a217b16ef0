//! The four output distances on one pair of distributions.

use num_bigint::BigInt;
use num_rational::BigRational;
use privspec::value::format_rational;
use privspec::{
    hockey_stick, max_divergence, renyi_divergence, smoothed_max_divergence, total_variation,
    Distribution, ExtReal,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    let p = Distribution::new(vec![rat(3, 4), rat(1, 4)]).unwrap();
    let q = Distribution::new(vec![rat(1, 4), rat(3, 4)]).unwrap();
    println!("P = (3/4, 1/4), Q = (1/4, 3/4)");

    let md = max_divergence(&p, &q).unwrap();
    println!("max divergence:        {md} ≈ {:.6}", md.to_f64());

    let tv = total_variation(&p, &q).unwrap();
    println!("total variation:       {}", format_rational(&tv));

    for eps in [ExtReal::zero(), ExtReal::ln_of_rational(&rat(2, 1)).unwrap()] {
        let h = hockey_stick(&p, &q, &eps).unwrap();
        println!("hockey-stick at ε={eps}: {}", format_rational(&h));
    }

    for dn in [0, 3, 6] {
        let delta = rat(dn, 12);
        let s = smoothed_max_divergence(&p, &q, &delta).unwrap();
        println!(
            "smoothed-max at δ={}:  {s} ≈ {:.6}",
            format_rational(&delta),
            s.to_f64()
        );
    }

    // Rényi orders interpolate between gentle averages and the worst case;
    // integer orders are computed in exact rationals.
    for (num, den) in [(3i64, 2i64), (2, 1), (4, 1), (16, 1), (256, 1)] {
        let alpha = rat(num, den);
        let r = renyi_divergence(&p, &q, &alpha).unwrap();
        println!("rényi α={}:           {r} ≈ {:.6}", format_rational(&alpha), r.to_f64());
    }
    println!("(max divergence is the α → ∞ limit)");
}
