use std::time::Instant;
use tropgon::enumerate::{enumerate_datums, free_trees, EnumerateOptions};

fn main() {
    let t0 = Instant::now();
    let mut total = 0usize;
    for n in 1..=4 {
        for tree in free_trees(n, None) {
            let out = enumerate_datums(&tree, 2, &EnumerateOptions::default(), |_, _| true).unwrap();
            total += out.len();
        }
    }
    println!("d=2, trees <= 4 edges: {total} datum classes in {:?}", t0.elapsed());
    let t0 = Instant::now();
    let mut total3 = 0usize;
    for n in 1..=6 {
        for tree in free_trees(n, None) {
            let out = enumerate_datums(&tree, 3, &EnumerateOptions::default(), |_, _| true).unwrap();
            total3 += out.len();
        }
    }
    println!("d=3, trees <= 6 edges: {total3} datum classes in {:?}", t0.elapsed());
}
