use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmref::datamodel::{MmGroundTruth, PerLabel, RelationLabel, TextGroundTruth};
use mmref::heads::*;
use mmref::numerics::{finite_difference_check, Graph, ParamStore, Tensor};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn trr_store(seed: u64, d: usize) -> ParamStore {
    let mut s = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TrrHead::new(d).init(&mut s, &mut rng);
    for (_, t) in s.iter_mut() {
        *t = t.map(|v| v * 30.0);
    }
    s.insert(TRR_NULL, random(&mut rng, 1, RelationLabel::COUNT));
    s
}

fn mrr_store(seed: u64, d: usize) -> ParamStore {
    let mut s = ParamStore::new();
    MrrHead::new(d).init(&mut s, &mut ChaCha8Rng::seed_from_u64(seed));
    for (_, t) in s.iter_mut() {
        *t = t.map(|v| v * 30.0);
    }
    s
}

fn weights(s: &ParamStore, name: fn(RelationLabel) -> String) -> PerLabel<Tensor> {
    let mut w = PerLabel::new();
    for l in RelationLabel::ALL {
        w.insert(l, s.get(&name(l)).unwrap().clone());
    }
    w
}

proptest! {
    #[test]
    fn trr_similarity_is_an_exactly_symmetric_gram_matrix(seed in any::<u64>(), m in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 5;
        let t = random(&mut rng, m, d);
        let s = trr_store(seed, d);
        let w = weights(&s, trr_weight_name);
        let sim = trr_similarity(&trr_expand(&t, &w).unwrap());
        for (l, sl) in sim.iter() {
            prop_assert_eq!(sl, &sl.transpose());
            let e = t.matmul(w.get(l).unwrap()).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let dot: f64 = (0..d).map(|k| e.at(i, k) * e.at(j, k)).sum();
                    prop_assert!((sl.at(i, j) - dot).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mrr_similarity_matches_bilinear_oracle(seed in any::<u64>(), m in 1usize..6, q in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 4;
        let (t, x) = (random(&mut rng, m, d), random(&mut rng, q, d));
        let s = mrr_store(seed, d);
        let (wt, wo) = (weights(&s, mrr_text_weight_name), weights(&s, mrr_object_weight_name));
        let (te, xe) = mrr_expand(&t, &x, &wt, &wo).unwrap();
        let u = mrr_similarity(&te, &xe).unwrap();
        for (l, ul) in u.iter() {
            let (a, b) = (wt.get(l).unwrap(), wo.get(l).unwrap());
            for i in 0..m {
                for j in 0..q {
                    let ti: Vec<f64> = (0..d).map(|c| (0..d).map(|k| t.at(i, k) * a.at(k, c)).sum()).collect();
                    let xj: Vec<f64> = (0..d).map(|c| (0..d).map(|k| x.at(j, k) * b.at(k, c)).sum()).collect();
                    let v: f64 = ti.iter().zip(&xj).map(|(p, q)| p * q).sum::<f64>();
                    prop_assert!((ul.at(i, j) - v).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn predictions_follow_a_sort_oracle(seed in any::<u64>(), m in 1usize..5, q in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = random(&mut rng, m, q);
        if q > 2 {
            u.set(0, 1, u.at(0, 2));
        }
        let ids: Vec<u32> = (0..m as u32).map(|i| i * 3).collect();
        let preds = predict_objects(&u, &ids, RelationLabel::Acc).unwrap();
        for (i, p) in preds.iter().enumerate() {
            let mut order: Vec<usize> = (0..q).collect();
            order.sort_by(|&a, &b| u.at(i, b).partial_cmp(&u.at(i, a)).unwrap().then(a.cmp(&b)));
            prop_assert_eq!(p.ranked.iter().map(|r| r.index).collect::<Vec<_>>(), order);
            let total: f64 = p.ranked.iter().map(|r| r.confidence).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn antecedent_rankings_follow_a_sort_oracle(seed in any::<u64>(), m in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = random(&mut rng, m, m + 1);
        let ids: Vec<u32> = (10..10 + m as u32).collect();
        let preds = predict_antecedents(&logits, &ids, RelationLabel::Direct).unwrap();
        for (i, p) in preds.iter().enumerate() {
            let mut cols: Vec<usize> = (0..=m).filter(|&j| j != i).collect();
            cols.sort_by(|&a, &b| logits.at(i, b).partial_cmp(&logits.at(i, a)).unwrap().then(a.cmp(&b)));
            let expect: Vec<Option<u32>> = cols.iter().map(|&j| (j < m).then(|| ids[j])).collect();
            prop_assert_eq!(p.ranked.iter().map(|r| r.0).collect::<Vec<_>>(), expect);
        }
    }
}

#[test]
fn graph_logits_match_plain_similarities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 4;
    let t = random(&mut rng, 3, d);
    let s = trr_store(1, d);
    let mut g = Graph::new();
    let tv = g.constant(t.clone());
    let logits = TrrHead::new(d).logits(&mut g, &s, tv, &RelationLabel::ALL).unwrap();
    let plain = trr_similarity(&trr_expand(&t, &weights(&s, trr_weight_name)).unwrap());
    let null = s.get(TRR_NULL).unwrap();
    for (l, &v) in logits.iter() {
        let lt = g.value(v);
        assert_eq!(lt.shape(), &[3, 4]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(lt.at(i, j), plain.get(l).unwrap().at(i, j));
            }
            assert_eq!(lt.at(i, 3), null.at(0, l.index()));
        }
    }
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = xs.iter().map(|x| (x - mx).exp()).sum();
    xs.iter().map(|x| (x - mx).exp() / z).collect()
}

#[test]
fn trr_loss_matches_scalar_arithmetic() {
    // Two labels over three mentions; logits are given directly.
    let direct = Tensor::from_rows(&[[0.0, 1.0, -1.0, 0.5], [1.0, 0.0, 2.0, 0.0], [-1.0, 2.0, 0.0, 1.5]]);
    let acc = Tensor::from_rows(&[[0.0, 0.3, 0.2, -0.4], [0.3, 0.0, 0.1, 0.9], [0.2, 0.1, 0.0, 0.0]]);
    let gt_direct = Tensor::from_rows(&[[0.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    let gt_acc = Tensor::from_rows(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);

    let ce = |logits: &Tensor, gt: &Tensor| {
        let mut total = 0.0;
        for i in 0..3 {
            let cols: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            let p = softmax(&cols.iter().map(|&j| logits.at(i, j)).collect::<Vec<_>>());
            let pos: Vec<usize> = (0..3).filter(|&j| gt.at(i, j) > 0.0).collect();
            let targets: Vec<usize> = if pos.is_empty() { vec![3] } else { pos };
            let w = 1.0 / targets.len() as f64;
            for t in targets {
                let k = cols.iter().position(|&c| c == t).unwrap();
                total -= w * p[k].ln();
            }
        }
        total / 3.0
    };
    let expect = ce(&direct, &gt_direct) + ce(&acc, &gt_acc);

    let mut g = Graph::new();
    let mut logits = PerLabel::new();
    logits.insert(RelationLabel::Direct, g.constant(direct));
    logits.insert(RelationLabel::Acc, g.constant(acc));
    let mut matrices = PerLabel::new();
    matrices.insert(RelationLabel::Direct, gt_direct);
    matrices.insert(RelationLabel::Acc, gt_acc);
    let gt = TextGroundTruth { matrices };
    let loss = loss_trr(&mut g, &logits, &gt, &[RelationLabel::Direct, RelationLabel::Acc]).unwrap();
    assert!((g.value(loss).item() - expect).abs() < 1e-12);
}

#[test]
fn mrr_loss_matches_scalar_arithmetic_and_masks_empty_rows() {
    let u = Tensor::from_rows(&[[1.0, 0.0, -1.0], [0.5, 0.5, 2.0], [3.0, 1.0, 0.0]]);
    let truth = Tensor::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
    let p0 = softmax(u.row(0));
    let p2 = softmax(u.row(2));
    let expect = (-(0.5 * p0[0].ln() + 0.5 * p0[1].ln()) - p2[2].ln()) / 2.0;

    let mut g = Graph::new();
    let mut logits = PerLabel::new();
    logits.insert(RelationLabel::Dat, g.constant(u));
    let mut matrices = PerLabel::new();
    matrices.insert(RelationLabel::Dat, truth);
    let mut row_mask = PerLabel::new();
    row_mask.insert(RelationLabel::Dat, vec![true, false, true]);
    let gt = MmGroundTruth { matrices, row_mask };
    let loss = loss_mrr(&mut g, &logits, &gt, &[RelationLabel::Dat]).unwrap();
    assert!((g.value(loss).item() - expect).abs() < 1e-12);

    let mut g = Graph::new();
    let mut logits = PerLabel::new();
    logits.insert(RelationLabel::Dat, g.constant(Tensor::zeros(&[2, 3])));
    let mut matrices = PerLabel::new();
    matrices.insert(RelationLabel::Dat, Tensor::zeros(&[2, 3]));
    let mut row_mask = PerLabel::new();
    row_mask.insert(RelationLabel::Dat, vec![false, false]);
    let gt = MmGroundTruth { matrices, row_mask };
    let loss = loss_mrr(&mut g, &logits, &gt, &[RelationLabel::Dat]).unwrap();
    assert_eq!(g.value(loss).item(), 0.0);
}

#[test]
fn targets_spread_over_positives_or_fall_to_null() {
    let gt = Tensor::from_rows(&[[0.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    let t = trr_targets(&gt);
    assert_eq!(t.row(0), &[0.0, 0.5, 0.5, 0.0]);
    assert_eq!(t.row(1), &[0.0, 0.0, 0.0, 1.0]);
    assert_eq!(t.row(2), &[0.0, 1.0, 0.0, 0.0]);
    let m = mrr_targets(&Tensor::from_rows(&[[1.0, 0.0, 1.0, 1.0], [0.0; 4]]));
    assert_eq!(m.row(0), &[1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]);
    assert_eq!(m.row(1), &[0.0; 4]);
}

fn random_text_gt(rng: &mut ChaCha8Rng, m: usize) -> TextGroundTruth {
    let mut matrices = PerLabel::new();
    for l in RelationLabel::ALL {
        let mut t = Tensor::zeros(&[m, m]);
        for i in 0..m {
            for j in 0..m {
                if i != j && rng.random::<f64>() < 0.3 {
                    t.set(i, j, 1.0);
                }
            }
        }
        matrices.insert(l, t);
    }
    TextGroundTruth { matrices }
}

#[test]
fn direct_only_loss_equals_single_label_run_and_leaves_other_slices_untouched() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 4;
    let t = random(&mut rng, 4, d);
    let s = trr_store(6, d);
    let gt = random_text_gt(&mut rng, 4);
    let head = TrrHead::new(d);

    let mut g = Graph::new();
    let tv = g.constant(t.clone());
    let all = head.logits(&mut g, &s, tv, &RelationLabel::ALL).unwrap();
    let loss_all = loss_trr(&mut g, &all, &gt, &[RelationLabel::Direct]).unwrap();
    let grads = g.backward(loss_all).unwrap().params(&g);

    let mut g1 = Graph::new();
    let tv = g1.constant(t);
    let one = head.logits(&mut g1, &s, tv, &[RelationLabel::Direct]).unwrap();
    let loss_one = loss_trr(&mut g1, &one, &gt, &[RelationLabel::Direct]).unwrap();
    assert_eq!(g.value(loss_all).item(), g1.value(loss_one).item());

    for l in RelationLabel::INDIRECT {
        let gw = &grads[&trr_weight_name(l)];
        assert!(gw.data().iter().all(|&v| v == 0.0), "{l}");
    }
    assert!(grads[&trr_weight_name(RelationLabel::Direct)].data().iter().any(|&v| v != 0.0));
    let null = &grads[TRR_NULL];
    for l in RelationLabel::INDIRECT {
        assert_eq!(null.at(0, l.index()), 0.0);
    }
}

#[test]
fn head_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 3;
    let mut s = trr_store(7, d);
    for (name, t) in mrr_store(8, d).iter() {
        s.insert(name.clone(), t.clone());
    }
    for (_, t) in s.iter_mut() {
        *t = t.map(|v| v / 30.0 * 8.0);
    }
    let t = random(&mut rng, 3, d);
    let x = random(&mut rng, 4, d);
    let tgt = random_text_gt(&mut rng, 3);
    let mut matrices = PerLabel::new();
    let mut row_mask = PerLabel::new();
    for l in RelationLabel::ALL {
        let mut m = Tensor::zeros(&[3, 4]);
        m.set(0, (l.index()) % 4, 1.0);
        m.set(2, (l.index() + 1) % 4, 1.0);
        matrices.insert(l, m);
        row_mask.insert(l, vec![true, false, true]);
    }
    let mgt = MmGroundTruth { matrices, row_mask };
    let build = |g: &mut Graph, s: &ParamStore| {
        let tv = g.constant(t.clone());
        let xv = g.constant(x.clone());
        let tl = TrrHead::new(d).logits(g, s, tv, &RelationLabel::ALL).unwrap();
        let ml = MrrHead::new(d).logits(g, s, tv, xv, &RelationLabel::ALL).unwrap();
        let a = loss_trr(g, &tl, &tgt, &RelationLabel::ALL).unwrap();
        let b = loss_mrr(g, &ml, &mgt, &RelationLabel::ALL).unwrap();
        g.add(a, b).unwrap()
    };
    let mut g = Graph::new();
    let loss = build(&mut g, &s);
    let analytic = g.backward(loss).unwrap().params(&g);
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
fn pooling_the_token_stack_equals_gathering_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = 4;
    let p = 10;
    let tokens = random(&mut rng, p, d);
    let s = trr_store(9, d);
    let w = weights(&s, trr_weight_name);
    let first = [1usize, 4, 5, 8];
    let full = SimilarityStack::new(trr_similarity(&trr_expand(&tokens, &w).unwrap()));
    let pooled = full.pool_first_subword(&first, true).unwrap();
    let rows: Vec<Vec<f64>> = first.iter().map(|&i| tokens.row(i).to_vec()).collect();
    let gathered = trr_similarity(&trr_expand(&Tensor::from_rows(&rows), &w).unwrap());
    for (l, t) in gathered.iter() {
        assert!(pooled.matrices.get(l).unwrap().max_abs_diff(t) < 1e-12);
    }
    assert_eq!(pooled.row_mask, vec![true; 4]);
}

#[test]
fn symmetric_pair_ranks_each_other_above_null() {
    let logits = Tensor::from_rows(&[[0.0, 2.0, -1.0], [2.0, 0.0, -1.0]]);
    let p = predict_antecedents(&logits, &[5, 9], RelationLabel::Direct).unwrap();
    assert_eq!(p[0].ranked[0].0, Some(9));
    assert_eq!(p[1].ranked[0].0, Some(5));
    assert_eq!(p[0].ranked[1].0, None);
}

#[test]
fn lone_mention_resolves_to_null() {
    let p = predict_antecedents(&Tensor::from_rows(&[[4.0, -3.0]]), &[1], RelationLabel::Direct).unwrap();
    assert_eq!(p[0].ranked, vec![(None, 1.0)]);
}
