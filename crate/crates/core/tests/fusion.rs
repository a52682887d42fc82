use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmref::fusion::{Fusion, FusionConfig};
use mmref::numerics::{finite_difference_check, Graph, ParamStore, Tensor};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn setup(seed: u64, blocks: usize) -> (Fusion, ParamStore) {
    let f = Fusion::new(FusionConfig {
        d_model: 8,
        d_text: 6,
        d_object: 5,
        blocks,
        heads: 2,
    });
    let mut s = ParamStore::new();
    f.init(&mut s, &mut ChaCha8Rng::seed_from_u64(seed));
    // Larger weights than the initializer so the blocks mix non-trivially.
    for (_, t) in s.iter_mut() {
        *t = t.map(|v| v * 20.0);
    }
    (f, s)
}

fn fuse(f: &Fusion, s: &ParamStore, text: &Tensor, objects: &Tensor, mask: Option<&[bool]>) -> Tensor {
    let mut g = Graph::new();
    let (t, x) = (g.constant(text.clone()), g.constant(objects.clone()));
    let (tp, xp) = f.project_inputs(&mut g, s, t, x).unwrap();
    let out = f.decode(&mut g, s, xp, tp, mask).unwrap();
    g.value(out).clone()
}

fn permute_rows(t: &Tensor, perm: &[usize]) -> Tensor {
    let rows: Vec<Vec<f64>> = perm.iter().map(|&i| t.row(i).to_vec()).collect();
    Tensor::from_rows(&rows)
}

proptest! {
    #[test]
    fn fusion_is_equivariant_to_object_order(seed in any::<u64>(), q in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, s) = setup(seed, 2);
        let text = random(&mut rng, 5, 6);
        let objects = random(&mut rng, q, 5);
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut rng);
        let a = permute_rows(&fuse(&f, &s, &text, &objects, None), &perm);
        let b = fuse(&f, &s, &text, &permute_rows(&objects, &perm), None);
        prop_assert!(a.max_abs_diff(&b) < 1e-6);
    }

    #[test]
    fn fusion_is_invariant_to_text_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, s) = setup(seed, 2);
        let text = random(&mut rng, 5, 6);
        let objects = random(&mut rng, 3, 5);
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        let a = fuse(&f, &s, &text, &objects, None);
        let b = fuse(&f, &s, &permute_rows(&text, &perm), &objects, None);
        prop_assert!(a.max_abs_diff(&b) < 1e-6);
    }
}

#[test]
fn masked_text_rows_are_ignored() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (f, s) = setup(2, 2);
    let text = random(&mut rng, 4, 6);
    let objects = random(&mut rng, 3, 5);
    let mut other = text.clone();
    for c in 0..6 {
        other.set(3, c, 50.0);
    }
    let mask = [true, true, true, false];
    let a = fuse(&f, &s, &text, &objects, Some(&mask));
    let b = fuse(&f, &s, &other, &objects, Some(&mask));
    assert_eq!(a, b);
}

#[test]
fn fusion_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = Fusion::new(FusionConfig {
        d_model: 4,
        d_text: 3,
        d_object: 5,
        blocks: 2,
        heads: 2,
    });
    let mut s = ParamStore::new();
    f.init(&mut s, &mut rng);
    for (_, t) in s.iter_mut() {
        *t = t.map(|v| v * 5.0);
    }
    let text = random(&mut rng, 3, 3);
    let objects = random(&mut rng, 2, 5);
    let build = |g: &mut Graph, s: &ParamStore| {
        let (t, x) = (g.constant(text.clone()), g.constant(objects.clone()));
        let (tp, xp) = f.project_inputs(g, s, t, x).unwrap();
        let out = f.decode(g, s, xp, tp, None).unwrap();
        let sim = g.matmul_t(out, tp).unwrap();
        g.sum_squares(sim)
    };
    let mut g = Graph::new();
    let loss = build(&mut g, &s);
    let analytic = g.backward(loss).unwrap().params(&g);
    assert_eq!(analytic.len(), s.len());
    let r = finite_difference_check(
        |s| {
            let mut g = Graph::new();
            let l = build(&mut g, s);
            g.value(l).item()
        },
        &s,
        &analytic,
        1e-5,
    );
    assert!(r.max_relative_error < 1e-4, "{r:?}");
}

#[test]
fn single_candidate_frames_fuse() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (f, s) = setup(4, 2);
    let out = fuse(&f, &s, &random(&mut rng, 3, 6), &random(&mut rng, 1, 5), None);
    assert_eq!(out.shape(), &[1, 8]);
    assert!(out.all_finite());
}

#[test]
fn invalid_fusion_configs_are_rejected() {
    let bad = FusionConfig {
        d_model: 6,
        d_text: 6,
        d_object: 6,
        blocks: 2,
        heads: 4,
    };
    assert!(bad.validate().is_err());
}
