//! Encoder-decoder transformer over patch tokens.

use gridcomp_core::grid::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::float::{gemm, Float, View};
use crate::tape::{AttnShape, Grads, Params, Tape, Tensor, Var};
use crate::vocab::{self, Item, Source, BLANK_PATCH, EOS, PATCHES_PER_GRID, PATCHES_PER_SIDE, SOS, TARGET_LEN, VOCAB_SIZE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub ff_dim: usize,
    /// Only 0.0 is supported.
    pub dropout: f64,
    /// Size of the pair-index table (study pairs plus the query).
    pub max_pairs: usize,
    /// Patch rows and columns per grid.
    pub grid_side: usize,
    pub max_target_len: usize,
    /// Adds a learned input/output/separator embedding to source tokens.
    pub role_embedding: bool,
    /// Reuses the decoder token table as the output projection.
    pub tie_output: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: VOCAB_SIZE,
            d_model: 128,
            heads: 8,
            enc_layers: 3,
            dec_layers: 3,
            ff_dim: 768,
            dropout: 0.0,
            max_pairs: 16,
            grid_side: PATCHES_PER_SIDE,
            max_target_len: TARGET_LEN,
            role_embedding: false,
            tie_output: false,
        }
    }
}

impl ModelConfig {
    /// Trainable scalars implied by the configuration.
    pub fn param_count(&self) -> usize {
        let d = self.d_model;
        let linear = |i: usize, o: usize| i * o + o;
        let norm = 2 * d;
        let attn = 4 * linear(d, d);
        let ff = linear(d, self.ff_dim) + linear(self.ff_dim, d);
        let enc = self.enc_layers * (attn + ff + 2 * norm);
        let dec = self.dec_layers * (2 * attn + ff + 3 * norm);
        let emb = (2 * self.vocab_size + self.max_pairs + 2 * self.grid_side + self.max_target_len) * d
            + if self.role_embedding { 3 * d } else { 0 };
        let out = if self.tie_output { self.vocab_size } else { linear(d, self.vocab_size) };
        emb + enc + dec + 2 * norm + out
    }
}

#[derive(Clone, Copy, Debug)]
struct Linear {
    w: Var,
    b: Var,
}

#[derive(Clone, Copy, Debug)]
struct Norm {
    g: Var,
    b: Var,
}

#[derive(Clone, Copy, Debug)]
struct Attn {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
}

#[derive(Clone, Copy, Debug)]
struct EncLayer {
    ln1: Norm,
    attn: Attn,
    ln2: Norm,
    ff1: Linear,
    ff2: Linear,
}

#[derive(Clone, Copy, Debug)]
struct DecLayer {
    ln1: Norm,
    self_attn: Attn,
    ln2: Norm,
    cross: Attn,
    ln3: Norm,
    ff1: Linear,
    ff2: Linear,
}

#[derive(Clone, Debug)]
struct Handles {
    src_tok: Var,
    pair: Var,
    row: Var,
    col: Var,
    role: Option<Var>,
    tgt_tok: Var,
    tgt_pos: Var,
    enc: Vec<EncLayer>,
    dec: Vec<DecLayer>,
    enc_norm: Norm,
    dec_norm: Norm,
    out_w: Option<Var>,
    out_b: Var,
}

struct Init<'a, T> {
    params: &'a mut Params<T>,
    rng: ChaCha8Rng,
}

impl<T: Float> Init<'_, T> {
    fn embedding(&mut self, name: &str, rows: usize, cols: usize) -> Var {
        let dist = Normal::new(0.0, 0.02).expect("valid std");
        let data = (0..rows * cols).map(|_| T::of(dist.sample(&mut self.rng))).collect();
        self.params.add(name, Tensor::from_vec(rows, cols, data))
    }

    fn linear(&mut self, name: &str, i: usize, o: usize) -> Linear {
        let limit = (6.0 / (i + o) as f64).sqrt();
        let data = (0..i * o).map(|_| T::of(self.rng.gen_range(-limit..limit))).collect();
        let w = self.params.add(format!("{name}.w"), Tensor::from_vec(i, o, data));
        let b = self.params.add(format!("{name}.b"), Tensor::zeros(1, o));
        Linear { w, b }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        let g = self.params.add(format!("{name}.g"), Tensor::from_vec(1, d, vec![T::one(); d]));
        let b = self.params.add(format!("{name}.b"), Tensor::zeros(1, d));
        Norm { g, b }
    }

    fn attn(&mut self, name: &str, d: usize) -> Attn {
        Attn {
            q: self.linear(&format!("{name}.q"), d, d),
            k: self.linear(&format!("{name}.k"), d, d),
            v: self.linear(&format!("{name}.v"), d, d),
            o: self.linear(&format!("{name}.o"), d, d),
        }
    }
}

/// Items of one batch, all with the same source length.
#[derive(Clone, Debug)]
pub struct Batch {
    pub size: usize,
    pub src_len: usize,
    pub src_tok: Vec<Option<u32>>,
    pub pair: Vec<Option<u32>>,
    pub row: Vec<Option<u32>>,
    pub col: Vec<Option<u32>>,
    pub role: Vec<Option<u32>>,
}

impl Batch {
    pub fn new(sources: &[&Source]) -> Batch {
        assert!(!sources.is_empty(), "empty batch");
        let src_len = sources[0].len();
        assert!(sources.iter().all(|s| s.len() == src_len), "sources in a batch must have equal length");
        let mut b = Batch {
            size: sources.len(),
            src_len,
            src_tok: Vec::new(),
            pair: Vec::new(),
            row: Vec::new(),
            col: Vec::new(),
            role: Vec::new(),
        };
        for s in sources {
            b.src_tok.extend(s.tokens.iter().map(|&t| Some(t)));
            b.pair.extend(s.pair.iter().map(|&p| Some(p)));
            b.row.extend(&s.row);
            b.col.extend(&s.col);
            b.role.extend(s.role.iter().map(|r| Some(r.slot())));
        }
        b
    }
}

/// Per-position loss weights: `blank_weight` where the expected token is the
/// all-background patch, 1 elsewhere.
pub fn target_weights<T: Float>(expected: &[u32], blank_weight: f64) -> Vec<T> {
    expected.iter().map(|&t| if t == BLANK_PATCH { T::of(blank_weight) } else { T::one() }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<u32>,
    /// `None` when decoding stopped or strayed before 25 patches.
    pub grid: Option<Grid>,
}

pub struct Model<T> {
    pub config: ModelConfig,
    pub params: Params<T>,
    h: Handles,
}

impl<T: Float> Model<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        assert_eq!(config.dropout, 0.0, "dropout is not implemented");
        assert_eq!(config.d_model % config.heads, 0, "d_model must be divisible by heads");
        let mut params = Params::default();
        let mut init = Init { params: &mut params, rng: ChaCha8Rng::seed_from_u64(seed) };
        let (d, c) = (config.d_model, &config);
        let src_tok = init.embedding("src.tok", c.vocab_size, d);
        let pair = init.embedding("src.pair", c.max_pairs, d);
        let row = init.embedding("src.row", c.grid_side, d);
        let col = init.embedding("src.col", c.grid_side, d);
        let role = c.role_embedding.then(|| init.embedding("src.role", 3, d));
        let tgt_tok = init.embedding("tgt.tok", c.vocab_size, d);
        let tgt_pos = init.embedding("tgt.pos", c.max_target_len, d);
        let enc = (0..c.enc_layers)
            .map(|i| EncLayer {
                ln1: init.norm(&format!("enc{i}.ln1"), d),
                attn: init.attn(&format!("enc{i}.attn"), d),
                ln2: init.norm(&format!("enc{i}.ln2"), d),
                ff1: init.linear(&format!("enc{i}.ff1"), d, c.ff_dim),
                ff2: init.linear(&format!("enc{i}.ff2"), c.ff_dim, d),
            })
            .collect();
        let dec = (0..c.dec_layers)
            .map(|i| DecLayer {
                ln1: init.norm(&format!("dec{i}.ln1"), d),
                self_attn: init.attn(&format!("dec{i}.self"), d),
                ln2: init.norm(&format!("dec{i}.ln2"), d),
                cross: init.attn(&format!("dec{i}.cross"), d),
                ln3: init.norm(&format!("dec{i}.ln3"), d),
                ff1: init.linear(&format!("dec{i}.ff1"), d, c.ff_dim),
                ff2: init.linear(&format!("dec{i}.ff2"), c.ff_dim, d),
            })
            .collect();
        let enc_norm = init.norm("enc.norm", d);
        let dec_norm = init.norm("dec.norm", d);
        let (out_w, out_b) = if c.tie_output {
            (None, init.params.add("out.b", Tensor::zeros(1, c.vocab_size)))
        } else {
            let l = init.linear("out", d, c.vocab_size);
            (Some(l.w), l.b)
        };
        let h = Handles { src_tok, pair, row, col, role, tgt_tok, tgt_pos, enc, dec, enc_norm, dec_norm, out_w, out_b };
        Model { config, params, h }
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    fn linear(&self, tape: &mut Tape<T>, x: Var, l: Linear) -> Var {
        let y = tape.matmul(x, l.w, false);
        tape.add_bias(y, l.b)
    }

    fn mha(&self, tape: &mut Tape<T>, xq: Var, xkv: Var, a: &Attn, shape: AttnShape) -> Var {
        let k = self.linear(tape, xkv, a.k);
        let v = self.linear(tape, xkv, a.v);
        self.mha_kv(tape, xq, (k, v), a, shape)
    }

    fn mha_kv(&self, tape: &mut Tape<T>, xq: Var, (k, v): (Var, Var), a: &Attn, shape: AttnShape) -> Var {
        let q = self.linear(tape, xq, a.q);
        let o = tape.attention(q, k, v, shape);
        self.linear(tape, o, a.o)
    }

    /// Cross-attention keys and values of every decoder layer.
    pub fn cross_kv(&self, tape: &mut Tape<T>, memory: Var) -> Vec<(Var, Var)> {
        self.h.dec.iter().map(|l| (self.linear(tape, memory, l.cross.k), self.linear(tape, memory, l.cross.v))).collect()
    }

    fn feed_forward(&self, tape: &mut Tape<T>, x: Var, ff1: Linear, ff2: Linear) -> Var {
        let h = self.linear(tape, x, ff1);
        let h = tape.gelu(h);
        self.linear(tape, h, ff2)
    }

    /// Encoder states, `size * src_len` rows.
    pub fn encode(&self, tape: &mut Tape<T>, batch: &Batch) -> Var {
        let h = &self.h;
        let mut x = tape.gather(h.src_tok, batch.src_tok.clone());
        for (table, ids) in [(h.pair, &batch.pair), (h.row, &batch.row), (h.col, &batch.col)] {
            let e = tape.gather(table, ids.clone());
            x = tape.add(x, e);
        }
        if let Some(role) = h.role {
            let e = tape.gather(role, batch.role.clone());
            x = tape.add(x, e);
        }
        let shape = AttnShape {
            batch: batch.size,
            tq: batch.src_len,
            tk: batch.src_len,
            heads: self.config.heads,
            causal: false,
        };
        for l in &h.enc {
            let n = tape.layer_norm(x, l.ln1.g, l.ln1.b);
            let a = self.mha(tape, n, n, &l.attn, shape);
            x = tape.add(x, a);
            let n = tape.layer_norm(x, l.ln2.g, l.ln2.b);
            let f = self.feed_forward(tape, n, l.ff1, l.ff2);
            x = tape.add(x, f);
        }
        tape.layer_norm(x, h.enc_norm.g, h.enc_norm.b)
    }

    /// Final decoder states for `tgt_in` (`size * t` tokens), attending to
    /// the per-layer keys and values from [`Model::cross_kv`].
    pub fn decode_states(&self, tape: &mut Tape<T>, cross: &[(Var, Var)], batch: &Batch, tgt_in: &[u32], t: usize) -> Var {
        let h = &self.h;
        assert_eq!(tgt_in.len(), batch.size * t);
        assert!(t <= self.config.max_target_len, "target longer than the position table");
        let mut y = tape.gather(h.tgt_tok, tgt_in.iter().map(|&v| Some(v)).collect());
        let pos = tape.gather(h.tgt_pos, (0..batch.size).flat_map(|_| (0..t as u32).map(Some)).collect());
        y = tape.add(y, pos);
        let heads = self.config.heads;
        let self_shape = AttnShape { batch: batch.size, tq: t, tk: t, heads, causal: true };
        let cross_shape = AttnShape { batch: batch.size, tq: t, tk: batch.src_len, heads, causal: false };
        for (l, &kv) in h.dec.iter().zip(cross) {
            let n = tape.layer_norm(y, l.ln1.g, l.ln1.b);
            let a = self.mha(tape, n, n, &l.self_attn, self_shape);
            y = tape.add(y, a);
            let n = tape.layer_norm(y, l.ln2.g, l.ln2.b);
            let a = self.mha_kv(tape, n, kv, &l.cross, cross_shape);
            y = tape.add(y, a);
            let n = tape.layer_norm(y, l.ln3.g, l.ln3.b);
            let f = self.feed_forward(tape, n, l.ff1, l.ff2);
            y = tape.add(y, f);
        }
        tape.layer_norm(y, h.dec_norm.g, h.dec_norm.b)
    }

    pub fn project(&self, tape: &mut Tape<T>, states: Var) -> Var {
        let logits = match self.h.out_w {
            Some(w) => tape.matmul(states, w, false),
            None => tape.matmul(states, self.h.tgt_tok, true),
        };
        tape.add_bias(logits, self.h.out_b)
    }

    /// Next-token logits for every target position, `size * (len - 1)` rows.
    pub fn logits(&self, tape: &mut Tape<T>, batch: &Batch, targets: &[Vec<u32>]) -> Var {
        let t = targets[0].len() - 1;
        let tgt_in: Vec<u32> = targets.iter().flat_map(|s| s[..t].iter().copied()).collect();
        let memory = self.encode(tape, batch);
        let cross = self.cross_kv(tape, memory);
        let states = self.decode_states(tape, &cross, batch, &tgt_in, t);
        self.project(tape, states)
    }

    /// Weighted next-token cross-entropy of a batch of items.
    pub fn loss(&self, tape: &mut Tape<T>, items: &[&Item], blank_weight: f64) -> Var {
        let sources: Vec<&Source> = items.iter().map(|i| &i.source).collect();
        let batch = Batch::new(&sources);
        let targets: Vec<Vec<u32>> = items.iter().map(|i| i.target.clone()).collect();
        let logits = self.logits(tape, &batch, &targets);
        let expected: Vec<u32> = targets.iter().flat_map(|s| s[1..].iter().copied()).collect();
        let weights = target_weights(&expected, blank_weight);
        tape.weighted_ce(logits, expected, weights)
    }

    /// Loss value of a batch; gradients of `scale * loss` are added to `grads`.
    pub fn loss_and_grads(&self, items: &[&Item], blank_weight: f64, scale: T, grads: &mut Grads<T>) -> T {
        let mut tape = Tape::new(&self.params, true);
        let loss = self.loss(&mut tape, items, blank_weight);
        let value = tape.value(loss).data[0];
        tape.backward_scaled(loss, scale, grads);
        value
    }

    pub fn loss_value(&self, items: &[&Item], blank_weight: f64) -> T {
        let mut tape = Tape::new(&self.params, false);
        let loss = self.loss(&mut tape, items, blank_weight);
        tape.value(loss).data[0]
    }

    /// Argmax decoding from SOS. Stops after 25 patch tokens, at EOS, or at
    /// the first token that is not a patch.
    pub fn greedy_decode(&self, sources: &[&Source]) -> Vec<Decoded> {
        let batch = Batch::new(sources);
        let cross: Vec<(Tensor<T>, Tensor<T>)> = {
            let mut tape = Tape::new(&self.params, false);
            let m = self.encode(&mut tape, &batch);
            let kv = self.cross_kv(&mut tape, m);
            kv.into_iter().map(|(k, v)| (tape.value(k).clone(), tape.value(v).clone())).collect()
        };
        let n = batch.size;
        let mut seqs: Vec<Vec<u32>> = vec![vec![SOS]; n];
        let mut done = vec![false; n];
        let vocab = self.config.vocab_size;
        let d = self.config.d_model;
        for t in 1..=PATCHES_PER_GRID {
            if done.iter().all(|&x| x) {
                break;
            }
            let mut tape = Tape::new(&self.params, false);
            let kv: Vec<(Var, Var)> = cross.iter().map(|(k, v)| (tape.input(k.clone()), tape.input(v.clone()))).collect();
            let tgt_in: Vec<u32> = seqs.iter().flat_map(|s| s.iter().copied()).collect();
            let states = self.decode_states(&mut tape, &kv, &batch, &tgt_in, t);
            let sv = tape.value(states);
            let last: Vec<T> = (0..n).flat_map(|b| sv.row(b * t + t - 1).iter().copied()).collect();
            let mut logits = vec![T::zero(); n * vocab];
            for row in logits.chunks_mut(vocab) {
                row.copy_from_slice(&tape.value(self.h.out_b).data);
            }
            match self.h.out_w {
                Some(w) => {
                    gemm(n, d, vocab, T::one(), &last, View::rows(0, d), &tape.value(w).data, View::rows(0, vocab), T::one(), &mut logits, View::rows(0, vocab))
                }
                None => gemm(n, d, vocab, T::one(), &last, View::rows(0, d), &tape.value(self.h.tgt_tok).data, View::t(0, d), T::one(), &mut logits, View::rows(0, vocab)),
            }
            for b in 0..n {
                if done[b] {
                    continue;
                }
                let row = &logits[b * vocab..(b + 1) * vocab];
                let best = row.iter().enumerate().fold(0, |best, (i, &v)| if v > row[best] { i } else { best }) as u32;
                seqs[b].push(best);
                if !vocab::is_patch(best) {
                    done[b] = true;
                }
            }
            // Sequences that already stopped keep a padding token so shapes stay aligned.
            for s in seqs.iter_mut() {
                if s.len() < t + 1 {
                    s.push(EOS);
                }
            }
        }
        seqs.into_iter()
            .map(|s| {
                let body: Vec<u32> = s[1..].iter().copied().take_while(|&t| vocab::is_patch(t)).collect();
                let grid = vocab::patches_to_grid(&body);
                Decoded { tokens: s, grid }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
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

    #[test]
    fn default_parameter_count() {
        let c = ModelConfig::default();
        let m: Model<f32> = Model::new(c.clone(), 0);
        assert_eq!(m.param_count(), c.param_count());
        assert!((5_200_000..=6_200_000).contains(&m.param_count()), "{}", m.param_count());
    }

    #[test]
    fn tied_and_role_counts_match_formula() {
        for (tie, role) in [(true, false), (false, true), (true, true)] {
            let c = ModelConfig { tie_output: tie, role_embedding: role, ..tiny() };
            let m: Model<f64> = Model::new(c.clone(), 1);
            assert_eq!(m.param_count(), c.param_count());
        }
    }
}
