use cliffdual_core::decompose::*;
use cliffdual_core::orthostoch::enumerate_o1;

// Cross-sector inner products at n = 2, straight from the integer data:
// spanning vectors w_{mu,(i,c)} = sum_h chi_mu(h) e_{(i, h.c)}, inner
// products through the frame Gram.
#[test]
fn sector_orthogonality_n2() {
    let n = 2usize;
    let frame = t5_frame(n);
    let block = 1usize << (3 * n);
    let group = enumerate_o1(5, 0, 2);
    // subgroup fixing code hole i and the smallest other coordinate
    let sigma: Vec<[usize; 5]> = group
        .elements
        .iter()
        .map(|m| {
            let mut s = [0usize; 5];
            for k in 0..5 {
                for i in 0..5 {
                    if m.at(i, k) == 1 {
                        s[k] = i;
                    }
                }
            }
            s
        })
        .collect();
    let chi3: [[i64; 3]; 3] = [[1, 1, 1], [1, -1, 1], [2, 0, -1]];

    // spanning vectors as dense coefficient vectors over all 320 frames
    let mut w: Vec<Vec<Vec<i64>>> = vec![Vec::new(); 3]; // [mu][vec][frame]
    for i in 0..5 {
        let anchor = (0..5).find(|&p| p != i).unwrap();
        let subs: Vec<usize> = (0..group.len())
            .filter(|&o| sigma[o][i] == i && sigma[o][anchor] == anchor)
            .collect();
        assert_eq!(subs.len(), 6);
        for c in 0..block {
            for mu in 0..3 {
                let mut dense = vec![0i64; 5 * block];
                for &o in &subs {
                    let s = &sigma[o];
                    let fixed = (0..5)
                        .filter(|&p| p != i && p != anchor && s[p] == p)
                        .count();
                    let cls = match fixed { 3 => 0, 1 => 1, 0 => 2, _ => unreachable!() };
                    // coset image: per column, lift -> permute bits -> project
                    let mut cimg = 0usize;
                    for j in 0..n {
                        let c3 = (c >> (3 * j)) & 7;
                        // recompute lift/proj through public frame pieces:
                        // walk supports instead: use any label of coset (i,c)
                        let _ = c3;
                    }
                    // easier: permute an actual support label and look up its coset
                    let lab = frame.supports[i * block + c][0] as usize;
                    let mut img = 0usize;
                    let mask = (1usize << n) - 1;
                    for k in 0..5 {
                        img |= ((lab >> (k * n)) & mask) << (s[k] * n);
                    }
                    cimg = frame.coset_of[img][i] as usize;
                    dense[cimg] += chi3[mu][cls];
                }
                w[mu].push(dense);
            }
        }
    }
    // gram products
    let g = frame.gram_dense();
    let f = 5 * block;
    let dot_g = |a: &[i64], b: &[i64]| -> i64 {
        let mut acc = 0i64;
        for x in 0..f {
            if a[x] == 0 { continue; }
            for y in 0..f {
                if b[y] != 0 { acc += a[x] * g[x * f + y] * b[y]; }
            }
        }
        acc
    };
    for mu in 0..3 {
        for nu in (mu + 1)..3 {
            let mut maxabs = 0i64;
            for a in &w[mu] {
                for b in &w[nu] {
                    maxabs = maxabs.max(dot_g(a, b).abs());
                }
            }
            println!("max |<S_{mu}, S_{nu}>| = {maxabs}");
        }
    }
}
