use gridcomp_core::episodes::{generate_dataset, GenConfig, Setup};
use gridcomp_core::grid::{Grid, GRID_SIZE};
use gridcomp_mlc::model::{Model, ModelConfig};
use gridcomp_mlc::tape::{Tape, Tensor};
use gridcomp_mlc::vocab::{
    apply_noise, encode_source, encode_target, grid_to_patches, patches_to_grid, tokenize_episode, Item,
    EOS, SOS, VOCAB_SIZE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn any_grid() -> impl Strategy<Value = Grid> {
    prop::collection::vec(0i64..10, GRID_SIZE * GRID_SIZE).prop_map(|v| {
        let rows: Vec<Vec<i64>> = v.chunks(GRID_SIZE).map(|c| c.to_vec()).collect();
        Grid::from_rows(&rows).unwrap()
    })
}

fn small_config() -> ModelConfig {
    ModelConfig { d_model: 16, heads: 2, enc_layers: 1, dec_layers: 1, ff_dim: 32, ..ModelConfig::default() }
}

proptest! {
    #[test]
    fn patches_round_trip(g in any_grid()) {
        let toks = grid_to_patches(&g);
        prop_assert_eq!(toks.len(), 25);
        prop_assert_eq!(patches_to_grid(&toks), Some(g));
        let target = encode_target(&g);
        prop_assert_eq!(target[0], SOS);
        prop_assert_eq!(target[26], EOS);
        prop_assert_eq!(patches_to_grid(&target[1..26]), Some(g));
    }

    #[test]
    fn patch_tokens_read_cells_directly(g in any_grid(), pr in 0usize..5, pc in 0usize..5) {
        let rows = g.rows();
        let (r, c) = (2 * pr, 2 * pc);
        let want = 1000 * rows[r][c] as u32 + 100 * rows[r][c + 1] as u32 + 10 * rows[r + 1][c] as u32 + rows[r + 1][c + 1] as u32;
        prop_assert_eq!(grid_to_patches(&g)[5 * pr + pc], want);
    }
}

#[test]
fn uniform_logits_give_log_vocab() {
    let cfg = small_config();
    let model: Model<f64> = Model::new(cfg, 0);
    let mut tape = Tape::new(&model.params, false);
    let n = 27;
    let logits = tape.input(Tensor::zeros(n, VOCAB_SIZE));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let targets: Vec<u32> = (0..n).map(|_| rng.gen_range(0..VOCAB_SIZE as u32)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let loss = tape.weighted_ce(logits, targets, weights);
    let v = tape.value(loss).data[0];
    assert!((v - (VOCAB_SIZE as f64).ln()).abs() < 1e-9, "{v}");
}

#[test]
fn weighted_ce_matches_direct_formula() {
    let cfg = small_config();
    let model: Model<f64> = Model::new(cfg, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, v) = (6, 11);
    let data: Vec<f64> = (0..n * v).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let targets: Vec<u32> = (0..n).map(|_| rng.gen_range(0..v as u32)).collect();
    let weights: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.2 } else { 1.0 }).collect();
    let mut num = 0.0;
    for i in 0..n {
        let row = &data[i * v..(i + 1) * v];
        let z: f64 = row.iter().map(|x| x.exp()).sum();
        num += weights[i] * -(row[targets[i] as usize].exp() / z).ln();
    }
    let want = num / weights.iter().sum::<f64>();
    let mut tape = Tape::new(&model.params, false);
    let logits = tape.input(Tensor::from_vec(n, v, data));
    let loss = tape.weighted_ce(logits, targets, weights);
    assert!((tape.value(loss).data[0] - want).abs() < 1e-12);
}

#[test]
fn lighter_blank_weight_shifts_loss_toward_content_positions() {
    let gc = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
    let eps = generate_dataset(3, 1, &gc).unwrap();
    let items = tokenize_episode(&eps[0], false);
    let refs: Vec<&Item> = items.iter().take(3).collect();
    let model: Model<f64> = Model::new(small_config(), 1);
    // Loss as a function of the blank weight is a weighted mean of the mean
    // blank and the mean content cross-entropy, so it is monotone in w.
    let at = |w: f64| model.loss_value(&refs, w);
    let (l0, l1, l2) = (at(0.05), at(0.5), at(1.0));
    assert!((l0 <= l1 && l1 <= l2) || (l0 >= l1 && l1 >= l2), "{l0} {l1} {l2}");
}

#[test]
fn batch_order_does_not_change_loss_or_decoding() {
    let gc = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
    let eps = generate_dataset(5, 1, &gc).unwrap();
    let items = tokenize_episode(&eps[0], false);
    let model: Model<f64> = Model::new(small_config(), 2);
    let fwd: Vec<&Item> = items.iter().take(4).collect();
    let rev: Vec<&Item> = fwd.iter().rev().copied().collect();
    let (a, b) = (model.loss_value(&fwd, 0.2), model.loss_value(&rev, 0.2));
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    let da = model.greedy_decode(&fwd.iter().map(|i| &i.source).collect::<Vec<_>>());
    let mut db = model.greedy_decode(&rev.iter().map(|i| &i.source).collect::<Vec<_>>());
    db.reverse();
    assert_eq!(da, db);
}

#[test]
fn each_item_is_scored_independently() {
    let gc = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
    let eps = generate_dataset(6, 1, &gc).unwrap();
    let items = tokenize_episode(&eps[0], false);
    let model: Model<f64> = Model::new(small_config(), 3);
    let one = model.greedy_decode(&[&items[0].source]);
    let many = model.greedy_decode(&items.iter().map(|i| &i.source).collect::<Vec<_>>());
    assert_eq!(one[0], many[0]);
}

#[test]
fn noise_rate_is_binomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(1860);
    let mut changed = 0usize;
    for i in 0..10_000 {
        let g = if i % 2 == 0 { Grid::empty() } else { Grid::from_rows(&vec![vec![(i % 10) as i64; 10]; 10]).unwrap() };
        let n = apply_noise(&g, &mut rng, 0.001);
        for ((_, a), (_, b)) in g.iter_cells().zip(n.iter_cells()) {
            changed += (a != b) as usize;
        }
    }
    // 1e6 cells at p = 0.001: mean 1000, standard deviation about 31.6.
    assert!((900..=1100).contains(&changed), "{changed}");
}

#[test]
fn source_layout_has_expected_length() {
    for (setup, want) in [(Setup::ThreeShot, 181), (Setup::Systematicity, 649)] {
        let gc = GenConfig { setup, ..GenConfig::default() };
        let ep = &generate_dataset(11, 1, &gc).unwrap()[0];
        assert_eq!(encode_source(&ep.study, &ep.queries[0].input).len(), want);
    }
}
