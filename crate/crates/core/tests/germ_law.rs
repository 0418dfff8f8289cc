use fliplab::tree::{haar_germ, sphere_vertices, TreeIsometry, Vertex};

// Chi-square survival function for an even number of degrees of freedom.
fn chi2_sf_even(x: f64, dof: usize) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..dof / 2 {
        term *= half / i as f64;
        sum += term;
    }
    (-half).exp() * sum
}

fn chi2(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

#[test]
fn base_image_is_uniform_on_the_first_sphere() {
    let mut counts = [0u64; 3];
    for seed in 0..30_000u64 {
        let g = haar_germ(2, 1, seed).unwrap();
        counts[g.u().word()[0] as usize] += 1;
    }
    let p = chi2_sf_even(chi2(&counts), 2);
    assert!(p > 1e-3, "counts {counts:?}, p = {p}");
}

#[test]
fn image_of_a_neighbour_is_uniform() {
    // g(0) ranges over the 3 neighbours of g(root), so (g(root), g(0)) is
    // uniform on 9 ordered pairs.
    let firsts = sphere_vertices(2, 1);
    let mut counts = [0u64; 9];
    for seed in 0..30_000u64 {
        let mut g = haar_germ(2, 1, seed).unwrap();
        let u = g.image(&Vertex::root());
        let gv = g.image(&firsts[0]);
        let i = u.word()[0] as usize;
        let j = u.slot_of(&gv).expect("adjacent") as usize;
        counts[3 * i + j] += 1;
    }
    let p = chi2_sf_even(chi2(&counts), 8);
    assert!(p > 1e-3, "counts {counts:?}, p = {p}");
}

#[test]
fn sphere_two_images_are_uniform() {
    let mut counts = [0u64; 6];
    let sphere = sphere_vertices(2, 2);
    for seed in 0..30_000u64 {
        let g = haar_germ(2, 2, seed).unwrap();
        counts[sphere.iter().position(|v| v == g.u()).unwrap()] += 1;
    }
    // 5 degrees of freedom; the 4-dof tail is smaller, so this is stricter.
    let x = chi2(&counts);
    assert!(chi2_sf_even(x, 4) > 1e-3, "counts {counts:?}");
}
