//! Block-design arithmetic for planning a judging session.
//!
//! ```text
//! cargo run --example feasibility -- [posters] [block_size] [reviews_per_poster]
//! ```

use nbibd::{lambda_of, max_faculty_reviews, min_connect_blocks, required_blocks};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().expect("integer argument"));
    let t = args.next().unwrap_or(201);
    let k = args.next().unwrap_or(5);
    let r = args.next().unwrap_or(50);

    let lambda = lambda_of(r, k, t).expect("valid parameters");
    let blocks = required_blocks(t, r, k).expect("valid parameters");
    println!("{t} posters, {k} per judge, {r} reviews per poster");
    println!("  judges needed, b = tr/k: {blocks}");
    println!("  pair concurrence, λ = r(k-1)/(t-1): {lambda}");
    if lambda.is_integer() && blocks.is_integer() {
        println!("  a balanced incomplete block design is arithmetically possible");
    } else {
        println!("  no balanced design exists; a near-balanced one is the best available");
    }

    let b_min = min_connect_blocks(t as usize, k as usize);
    let r_f = max_faculty_reviews(t as usize, k as usize);
    println!("  fewest judges that can connect every poster: {b_min}");
    println!("  reviews per poster from those judges: at most {r_f}");

    println!("\nsmallest balanced designs with {k} posters per judge and up to {t} posters:");
    let mut shown = 0;
    for posters in k + 1..=t {
        if let Some(reps) = (1..=posters).find(|&reps| {
            lambda_of(reps, k, posters).is_ok_and(|l| l.is_integer())
                && required_blocks(posters, reps, k).is_ok_and(|b| b.is_integer())
        }) {
            let b = required_blocks(posters, reps, k).unwrap();
            println!("  t={posters:<4} r={reps:<3} b={b:<5} λ={}", lambda_of(reps, k, posters).unwrap());
            shown += 1;
            if shown == 8 {
                break;
            }
        }
    }
}
