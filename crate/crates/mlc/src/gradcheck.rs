//! Finite-difference check of the analytic gradients on a miniature model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Model, ModelConfig};
use crate::vocab::{Item, Role, Source};

/// Width 8, one layer each side, vocabulary of 20.
pub fn miniature_config() -> ModelConfig {
    ModelConfig {
        vocab_size: 20,
        d_model: 8,
        heads: 2,
        enc_layers: 1,
        dec_layers: 1,
        ff_dim: 16,
        max_pairs: 4,
        grid_side: 3,
        max_target_len: 6,
        ..ModelConfig::default()
    }
}

/// Random items whose ids fit `config`. Token 0 plays the blank patch.
pub fn random_items<R: Rng>(config: &ModelConfig, rng: &mut R, n: usize, src_len: usize, tgt_len: usize) -> Vec<Item> {
    (0..n)
        .map(|_| {
            let mut s = Source { tokens: Vec::new(), pair: Vec::new(), row: Vec::new(), col: Vec::new(), role: Vec::new() };
            for _ in 0..src_len {
                let sep = rng.gen_bool(0.2);
                s.tokens.push(rng.gen_range(0..config.vocab_size as u32));
                s.pair.push(rng.gen_range(0..config.max_pairs as u32));
                let cell = |rng: &mut R| (!sep).then(|| rng.gen_range(0..config.grid_side as u32));
                s.row.push(cell(rng));
                s.col.push(cell(rng));
                s.role.push(if sep { Role::Separator } else { Role::StudyInput });
            }
            let target = (0..tgt_len).map(|_| rng.gen_range(0..config.vocab_size as u32)).collect();
            Item { source: s, target }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Entries where both gradients are below the noise floor.
    pub skipped: usize,
}

/// Compares analytic gradients with central differences on `samples`
/// randomly chosen parameter entries (tensor first, then entry).
pub fn grad_check(config: ModelConfig, seed: u64, samples: usize) -> GradCheckReport {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-7;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model: Model<f64> = Model::new(config.clone(), seed);
    let items = random_items(&config, &mut rng, 2, 7, config.max_target_len);
    let refs: Vec<&Item> = items.iter().collect();
    let blank = 0.2;
    let mut grads = model.params.zeros_like();
    model.loss_and_grads(&refs, blank, 1.0, &mut grads);
    let mut report = GradCheckReport { max_rel_err: 0.0, checked: 0, skipped: 0 };
    for _ in 0..samples {
        let p = rng.gen_range(0..model.params.list.len());
        let j = rng.gen_range(0..model.params.list[p].value.len());
        let orig = model.params.list[p].value.data[j];
        model.params.list[p].value.data[j] = orig + H;
        let up = model.loss_value(&refs, blank);
        model.params.list[p].value.data[j] = orig - H;
        let down = model.loss_value(&refs, blank);
        model.params.list[p].value.data[j] = orig;
        let numeric = (up - down) / (2.0 * H);
        let analytic = grads[p].data[j];
        let scale = numeric.abs().max(analytic.abs());
        if scale < FLOOR {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        report.max_rel_err = report.max_rel_err.max((numeric - analytic).abs() / scale);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miniature_gradients_match() {
        let r = grad_check(miniature_config(), 3, 300);
        assert!(r.checked > 150, "{r:?}");
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn tied_and_role_variants_match() {
        let c = ModelConfig { tie_output: true, role_embedding: true, ..miniature_config() };
        let r = grad_check(c, 4, 200);
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn unused_source_tokens_get_zero_gradient() {
        let c = miniature_config();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut items = random_items(&c, &mut rng, 2, 5, 4);
        for it in items.iter_mut() {
            for t in it.source.tokens.iter_mut() {
                *t %= 10;
            }
        }
        let model: Model<f64> = Model::new(c, 1);
        let mut grads = model.params.zeros_like();
        let refs: Vec<&Item> = items.iter().collect();
        model.loss_and_grads(&refs, 0.2, 1.0, &mut grads);
        let idx = model.params.list.iter().position(|p| p.name == "src.tok").unwrap();
        let g = &grads[idx];
        assert!((10..20).all(|t| g.row(t).iter().all(|&v| v == 0.0)));
        assert!((0..10).any(|t| g.row(t).iter().any(|&v| v != 0.0)));
    }
}
