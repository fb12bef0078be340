use gossip_aoi::lattice::{build_box, time_constant_estimate, BoxRecursion, LatticeBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coordinate permutations composed with sign flips (the hyperoctahedral group).
fn symmetries(d: usize) -> Vec<(Vec<usize>, Vec<i32>)> {
    fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(i);
            for mut p in perms(rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }
    let mut out = Vec::new();
    for p in perms((0..d).collect()) {
        for signs in 0..1u32 << d {
            out.push((p.clone(), (0..d).map(|i| if signs >> i & 1 == 1 { -1 } else { 1 }).collect()));
        }
    }
    out
}

fn image(lattice: &LatticeBox, vertex: usize, map: &(Vec<usize>, Vec<i32>)) -> usize {
    let p = lattice.point(vertex);
    let q: Vec<i32> = (0..p.len()).map(|i| map.1[i] * p[map.0[i]]).collect();
    lattice.vertex(&q).expect("box is symmetric")
}

#[test]
fn raw_value_grows_with_radius() {
    for (d, max_ell) in [(1, 10), (2, 3), (3, 2)] {
        let mut prev = 0.0;
        for ell in 1..=max_ell {
            let tc = time_constant_estimate(d, ell).unwrap();
            assert!(tc.raw > prev, "d={d} ell={ell}: {} after {prev}", tc.raw);
            assert!(tc.normalized > 0.0 && tc.normalized <= 1.0, "d={d} ell={ell}: {}", tc.normalized);
            prev = tc.raw;
        }
    }
}

#[test]
fn invariant_under_lattice_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (d, ell) in [(2, 3), (3, 2), (2, 2)] {
        let lattice = build_box(d, ell).unwrap();
        let mut rec = BoxRecursion::new(&lattice).unwrap();
        let maps = symmetries(d);
        assert_eq!(maps.len(), (1..=d).product::<usize>() << d);
        for _ in 0..25 {
            let size = rng.random_range(1..=3);
            let set: Vec<usize> = (0..size).map(|_| rng.random_range(0..lattice.interior_count())).collect();
            let base = rec.value(&set).unwrap();
            for map in &maps {
                let moved: Vec<usize> = set.iter().map(|&v| image(&lattice, v, map)).collect();
                let v = rec.value(&moved).unwrap();
                assert!((v - base).abs() <= 1e-12 * base, "{set:?} -> {moved:?}: {v} vs {base}");
            }
        }
    }
}

#[test]
fn larger_clusters_finish_sooner() {
    let lattice = build_box(2, 3).unwrap();
    let mut rec = BoxRecursion::new(&lattice).unwrap();
    let origin = rec.value(&[0]).unwrap();
    for v in 1..lattice.interior_count() {
        assert!(rec.value(&[0, v]).unwrap() < origin);
    }
    assert_eq!(rec.value(&[0, lattice.interior_count()]).unwrap(), 0.0);
}
