use cliffdual_core::decompose::*;

fn modp_rank_of_gram(n: usize, p: u64) -> (usize, usize) {
    let frame = t5_frame(n);
    let f = 5 * (1usize << (3 * n));
    let g = frame.gram_dense();
    let mut rref = ModPRref::new(p);
    for row in 0..f {
        let v: Vec<u64> = g[row * f..(row + 1) * f]
            .iter()
            .map(|&x| (x as i64).rem_euclid(p as i64) as u64)
            .collect();
        rref.insert(v);
    }
    // also the stacked 0/1 coset vectors themselves
    let mut rref2 = ModPRref::new(p);
    for sup in &frame.supports {
        let mut v = vec![0u64; frame.dim];
        for &l in sup {
            v[l as usize] = 1;
        }
        rref2.insert(v);
    }
    (rref.rank(), rref2.rank())
}

#[test]
fn gram_ranks() {
    for n in 1..=3 {
        let f = 5 * (1usize << (3 * n));
        let (rg, rv) = modp_rank_of_gram(n, 1_048_583);
        println!("n={n}: frames {f}, gram rank {rg}, stacked rank {rv}");
        let frame = t5_frame(n);
        let spec = q_span_spectrum(&frame);
        println!("  adj eig in [{:.6}, {:.6}]", spec.adj_min, spec.adj_max);
    }
}
