//! The retrieval model family: every method shares this structure and
//! differs only in user mode (single or bilateral branches), item mode
//! (plain MLP, memorization/generalization expert mixture, or the two-expert
//! ablation designs), and training schedule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Catalog, CatalogStats, Slice};
use crate::error::{CdnError, Result};
use crate::model::config::{freq_bucket, ItemFeatureSplit, ItemTowerConfig, UserTowerConfig, ITEM_ID_FEATURE};
use crate::numerics::{Matrix, NodeId, ParamId, ParamStore, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserMode {
    /// Single user tower: shared trunk plus the main head only.
    MainOnly,
    /// Shared trunk with separate main and regularizer heads.
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemMode {
    /// One MLP over all features concatenated.
    PlainMlp,
    /// Memorization experts over id-like features, generalization experts
    /// over content features, mixed by a frequency-softmax gate.
    MoeFreqGate,
    /// Two full-feature experts; expert 1 sees main-branch items, expert 2
    /// sees regularizer-branch items, frequency gate aggregates at serving.
    TwoExpertBranch,
    /// Two full-feature experts routed by the hard head/tail tag.
    TwoExpertHeadTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Main,
    Regularizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemContext {
    TrainMain,
    TrainReg,
    Serve,
}

/// Row-aligned positive pairs: row k of a main batch and row k of a
/// regularizer batch form one training pair.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub users: Vec<u32>,
    pub items: Vec<u32>,
}

impl Batch {
    pub fn new(users: Vec<u32>, items: Vec<u32>) -> Result<Self> {
        if users.len() != items.len() {
            return Err(CdnError::Model(format!(
                "batch has {} users but {} items",
                users.len(),
                items.len()
            )));
        }
        Ok(Batch { users, items })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Optional loss adjustments used by the re-balancing baselines.
#[derive(Debug, Clone, Default)]
pub struct LossPlugins {
    /// Per-row positive weights (class-balanced training).
    pub row_weights: Option<Vec<f64>>,
    /// Per-column `-log q` corrections added to the logits before the
    /// softmax (logQ training).
    pub neg_log_q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct Mlp {
    hidden: Vec<Linear>,
    out: Linear,
}

struct MemField {
    table: ParamId,
    /// Exactly one value per item (uniqueness holds by construction).
    values: Vec<u32>,
}

struct GenField {
    table: ParamId,
    bags: Vec<Vec<u32>>,
}

enum ItemNet {
    Plain(Mlp),
    Moe {
        mem_experts: Vec<Mlp>,
        gen_experts: Vec<Mlp>,
        gate_w: ParamId,
    },
    TwoExpert {
        experts: [Mlp; 2],
        /// Soft frequency gate for the branch-routed design; the head/tail
        /// design routes on tags and has no learned gate.
        gate_w: Option<ParamId>,
    },
}

pub struct Retriever {
    pub user_mode: UserMode,
    pub item_mode: ItemMode,
    pub user_cfg: UserTowerConfig,
    pub item_cfg: ItemTowerConfig,
    pub params: ParamStore,
    n_users: usize,
    n_items: usize,
    mem_fields: Vec<MemField>,
    gen_fields: Vec<GenField>,
    bucket_of_item: Vec<usize>,
    head_col: Vec<f64>,
    user_emb: ParamId,
    f_layers: Vec<Linear>,
    hm: Mlp,
    hr: Option<Mlp>,
    item_net: ItemNet,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.gen_range(-limit..limit);
    }
    m
}

fn embedding_init(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.gen_range(-0.1..0.1);
    }
    m
}

fn register_linear(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    in_dim: usize,
    out_dim: usize,
) -> Result<Linear> {
    let w = store.register(&format!("{name}.w"), xavier(rng, out_dim, in_dim))?;
    let b = store.register(&format!("{name}.b"), Matrix::zeros(1, out_dim))?;
    Ok(Linear { w, b })
}

fn register_mlp(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    in_dim: usize,
    hidden_dims: &[usize],
    out_dim: usize,
) -> Result<Mlp> {
    let mut hidden = Vec::new();
    let mut cur = in_dim;
    for (i, &dim) in hidden_dims.iter().enumerate() {
        hidden.push(register_linear(store, rng, &format!("{prefix}.{i}"), cur, dim)?);
        cur = dim;
    }
    let out = register_linear(store, rng, &format!("{prefix}.out"), cur, out_dim)?;
    Ok(Mlp { hidden, out })
}

fn mlp_param_count(in_dim: usize, hidden_dims: &[usize], out_dim: usize) -> usize {
    let mut total = 0;
    let mut cur = in_dim;
    for &dim in hidden_dims {
        total += cur * dim + dim;
        cur = dim;
    }
    total + cur * out_dim + out_dim
}

/// Hidden widths for the full-feature two-expert designs, chosen so their
/// total parameter count matches the expert-mixture budget within rounding.
fn parity_hidden_dims(item_cfg: &ItemTowerConfig, mem_in: usize, gen_in: usize, full_in: usize) -> Vec<usize> {
    let moe_total = item_cfg.n_mem_experts
        * mlp_param_count(mem_in, &item_cfg.expert_hidden_dims, item_cfg.output_dim)
        + item_cfg.n_gen_experts
            * mlp_param_count(gen_in, &item_cfg.expert_hidden_dims, item_cfg.output_dim);
    if item_cfg.expert_hidden_dims.len() == 1 {
        let target = moe_total as f64 / 2.0;
        let h = ((target - item_cfg.output_dim as f64)
            / (full_in + 1 + item_cfg.output_dim) as f64)
            .round()
            .max(1.0) as usize;
        vec![h]
    } else {
        // deeper stacks keep the configured widths; parity is approximate
        item_cfg.expert_hidden_dims.clone()
    }
}

/// Gate-weighted sum of expert outputs: `y = sum_k gate[:, k] * experts[k]`.
pub fn gated_sum(tape: &mut Tape, experts: &[NodeId], gate: NodeId) -> Result<NodeId> {
    if experts.is_empty() {
        return Err(CdnError::Model("gated_sum needs at least one expert".into()));
    }
    if tape.value(gate).cols() != experts.len() {
        return Err(CdnError::Shape {
            op: "gated_sum",
            details: format!(
                "gate has {} columns for {} experts",
                tape.value(gate).cols(),
                experts.len()
            ),
        });
    }
    let mut acc: Option<NodeId> = None;
    for (k, &expert) in experts.iter().enumerate() {
        let g = tape.slice_cols(gate, k, 1)?;
        let term = tape.scale_rows(expert, g)?;
        acc = Some(match acc {
            None => term,
            Some(prev) => tape.add(prev, term)?,
        });
    }
    Ok(acc.unwrap())
}

impl Retriever {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        catalog: &Catalog,
        stats: &CatalogStats,
        split: &ItemFeatureSplit,
        user_cfg: UserTowerConfig,
        item_cfg: ItemTowerConfig,
        user_mode: UserMode,
        item_mode: ItemMode,
        seed: u64,
    ) -> Result<Self> {
        item_cfg.validate()?;
        user_cfg.validate(&item_cfg)?;
        split.validate(catalog)?;
        if stats.freq.len() != catalog.n_items() {
            return Err(CdnError::Model(format!(
                "stats cover {} items, catalog has {}",
                stats.freq.len(),
                catalog.n_items()
            )));
        }

        let n_users = catalog.n_users();
        let n_items = catalog.n_items();
        let d = item_cfg.embedding_dim;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let user_emb = store.register("user.emb", embedding_init(&mut rng, n_users.max(1), user_cfg.embedding_dim))?;
        let item_emb = store.register("item.emb", embedding_init(&mut rng, n_items.max(1), d))?;

        let mut mem_fields = Vec::new();
        for name in &split.memorization {
            if name == ITEM_ID_FEATURE {
                mem_fields.push(MemField {
                    table: item_emb,
                    values: (0..n_items as u32).collect(),
                });
            } else {
                let field = catalog.field(name).expect("validated");
                let table = store.register(
                    &format!("item.mem.{name}.emb"),
                    embedding_init(&mut rng, field.vocab.len().max(1), d),
                )?;
                mem_fields.push(MemField {
                    table,
                    values: field.bags.iter().map(|bag| bag[0]).collect(),
                });
            }
        }

        let mut gen_fields = Vec::new();
        for name in &split.generalization {
            let field = catalog.field(name).expect("validated");
            let table = store.register(
                &format!("item.gen.{name}.emb"),
                embedding_init(&mut rng, field.vocab.len().max(1), d),
            )?;
            gen_fields.push(GenField {
                table,
                bags: field.bags.clone(),
            });
        }

        if matches!(item_mode, ItemMode::MoeFreqGate) && gen_fields.is_empty() {
            return Err(CdnError::Config(
                "the expert mixture needs at least one generalization feature".into(),
            ));
        }

        let mut f_layers = Vec::new();
        let mut cur = user_cfg.embedding_dim;
        for (i, &dim) in user_cfg.shared_dims.iter().enumerate() {
            f_layers.push(register_linear(&mut store, &mut rng, &format!("user.f.{i}"), cur, dim)?);
            cur = dim;
        }
        let hm = register_mlp(&mut store, &mut rng, "user.hm", cur, &user_cfg.branch_dims, user_cfg.output_dim)?;

        let mem_in = mem_fields.len() * d;
        let gen_in = gen_fields.len() * d;
        let full_in = mem_in + gen_in;
        let item_net = match item_mode {
            ItemMode::PlainMlp => ItemNet::Plain(register_mlp(
                &mut store,
                &mut rng,
                "item.mlp",
                full_in,
                &item_cfg.expert_hidden_dims,
                item_cfg.output_dim,
            )?),
            ItemMode::MoeFreqGate => {
                let mut mem_experts = Vec::new();
                for k in 0..item_cfg.n_mem_experts {
                    mem_experts.push(register_mlp(
                        &mut store,
                        &mut rng,
                        &format!("item.mem_expert{k}"),
                        mem_in,
                        &item_cfg.expert_hidden_dims,
                        item_cfg.output_dim,
                    )?);
                }
                let mut gen_experts = Vec::new();
                for k in 0..item_cfg.n_gen_experts {
                    gen_experts.push(register_mlp(
                        &mut store,
                        &mut rng,
                        &format!("item.gen_expert{k}"),
                        gen_in,
                        &item_cfg.expert_hidden_dims,
                        item_cfg.output_dim,
                    )?);
                }
                // zero init: the untrained gate is exactly uniform
                let n_experts = item_cfg.n_mem_experts + item_cfg.n_gen_experts;
                let gate_w = store.register("item.gate.w", Matrix::zeros(n_experts, item_cfg.freq_buckets))?;
                ItemNet::Moe {
                    mem_experts,
                    gen_experts,
                    gate_w,
                }
            }
            ItemMode::TwoExpertBranch | ItemMode::TwoExpertHeadTail => {
                let dims = parity_hidden_dims(&item_cfg, mem_in, gen_in, full_in);
                let e1 = register_mlp(&mut store, &mut rng, "item.expert1", full_in, &dims, item_cfg.output_dim)?;
                let e2 = register_mlp(&mut store, &mut rng, "item.expert2", full_in, &dims, item_cfg.output_dim)?;
                let gate_w = if item_mode == ItemMode::TwoExpertBranch {
                    Some(store.register("item.gate.w", Matrix::zeros(2, item_cfg.freq_buckets))?)
                } else {
                    None
                };
                ItemNet::TwoExpert {
                    experts: [e1, e2],
                    gate_w,
                }
            }
        };

        // registered last so main-only and bilateral models share the same
        // initialization for every common slot
        let hr = match user_mode {
            UserMode::Bilateral => Some(register_mlp(
                &mut store,
                &mut rng,
                "user.hr",
                cur,
                &user_cfg.branch_dims,
                user_cfg.output_dim,
            )?),
            UserMode::MainOnly => None,
        };

        let bucket_of_item = stats
            .freq
            .iter()
            .map(|&f| freq_bucket(f, item_cfg.freq_buckets))
            .collect();
        let head_col = stats
            .slice
            .iter()
            .map(|s| if *s == Slice::Head { 1.0 } else { 0.0 })
            .collect();

        Ok(Retriever {
            user_mode,
            item_mode,
            user_cfg,
            item_cfg,
            params: store,
            n_users,
            n_items,
            mem_fields,
            gen_fields,
            bucket_of_item,
            head_col,
            user_emb,
            f_layers,
            hm,
            hr,
            item_net,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// (memorization expert count, generalization expert count) when the
    /// item tower is the gated expert mixture.
    pub fn gate_groups(&self) -> Option<(usize, usize)> {
        match &self.item_net {
            ItemNet::Moe {
                mem_experts,
                gen_experts,
                ..
            } => Some((mem_experts.len(), gen_experts.len())),
            _ => None,
        }
    }

    fn check_users(&self, users: &[u32]) -> Result<()> {
        match users.iter().find(|&&u| u as usize >= self.n_users) {
            Some(&u) => Err(CdnError::Model(format!("unknown user index {u}"))),
            None => Ok(()),
        }
    }

    fn check_items(&self, items: &[u32]) -> Result<()> {
        match items.iter().find(|&&i| i as usize >= self.n_items) {
            Some(&i) => Err(CdnError::Model(format!("unknown item index {i}"))),
            None => Ok(()),
        }
    }

    fn mlp_forward(&self, tape: &mut Tape, mlp: &Mlp, mut x: NodeId) -> Result<NodeId> {
        for lin in &mlp.hidden {
            let w = tape.param(&self.params, lin.w);
            let b = tape.param(&self.params, lin.b);
            x = tape.matmul_nt(x, w)?;
            x = tape.add_bias(x, b)?;
            x = tape.relu(x);
        }
        let w = tape.param(&self.params, mlp.out.w);
        let b = tape.param(&self.params, mlp.out.b);
        let x = tape.matmul_nt(x, w)?;
        tape.add_bias(x, b)
    }

    /// `x = h_branch(f(u))`: shared trunk, branch-specific head.
    pub fn user_forward(&self, tape: &mut Tape, users: &[u32], branch: Branch) -> Result<NodeId> {
        self.check_users(users)?;
        let mut x = tape.gather_rows(&self.params, self.user_emb, users)?;
        for lin in &self.f_layers {
            let w = tape.param(&self.params, lin.w);
            let b = tape.param(&self.params, lin.b);
            x = tape.matmul_nt(x, w)?;
            x = tape.add_bias(x, b)?;
            x = tape.relu(x);
        }
        let head = match branch {
            Branch::Main => &self.hm,
            Branch::Regularizer => self
                .hr
                .as_ref()
                .ok_or_else(|| CdnError::Model("model has no regularizer branch".into()))?,
        };
        self.mlp_forward(tape, head, x)
    }

    fn mem_input(&self, tape: &mut Tape, items: &[u32]) -> Result<NodeId> {
        let mut acc: Option<NodeId> = None;
        for field in &self.mem_fields {
            let rows: Vec<u32> = items.iter().map(|&i| field.values[i as usize]).collect();
            let part = tape.gather_rows(&self.params, field.table, &rows)?;
            acc = Some(match acc {
                None => part,
                Some(prev) => tape.concat_rows(prev, part)?,
            });
        }
        acc.ok_or_else(|| CdnError::Model("no memorization features configured".into()))
    }

    fn gen_input(&self, tape: &mut Tape, items: &[u32]) -> Result<NodeId> {
        let mut acc: Option<NodeId> = None;
        for field in &self.gen_fields {
            let bags: Vec<Vec<u32>> = items.iter().map(|&i| field.bags[i as usize].clone()).collect();
            let part = tape.gather_rows_mean(&self.params, field.table, &bags)?;
            acc = Some(match acc {
                None => part,
                Some(prev) => tape.concat_rows(prev, part)?,
            });
        }
        acc.ok_or_else(|| CdnError::Model("no generalization features configured".into()))
    }

    fn full_input(&self, tape: &mut Tape, items: &[u32]) -> Result<NodeId> {
        let mem = self.mem_input(tape, items)?;
        if self.gen_fields.is_empty() {
            return Ok(mem);
        }
        let gen = self.gen_input(tape, items)?;
        tape.concat_rows(mem, gen)
    }

    fn freq_onehot(&self, items: &[u32]) -> Matrix {
        let mut m = Matrix::zeros(items.len(), self.item_cfg.freq_buckets);
        for (r, &i) in items.iter().enumerate() {
            m.set(r, self.bucket_of_item[i as usize], 1.0);
        }
        m
    }

    fn gate_forward(&self, tape: &mut Tape, items: &[u32], gate_w: ParamId) -> Result<NodeId> {
        let onehot = self.freq_onehot(items);
        let x = tape.input(onehot);
        let w = tape.param(&self.params, gate_w);
        let logits = tape.matmul_nt(x, w)?;
        Ok(tape.softmax_rows(logits))
    }

    /// Frequency-gate weights for `items`; each row is a simplex vector over
    /// experts. Errors for item towers without a learned gate.
    pub fn gate_weights(&self, items: &[u32]) -> Result<Matrix> {
        self.check_items(items)?;
        let gate_w = match &self.item_net {
            ItemNet::Moe { gate_w, .. } => *gate_w,
            ItemNet::TwoExpert { gate_w: Some(g), .. } => *g,
            _ => {
                return Err(CdnError::Model(
                    "this method's item tower has no frequency gate".into(),
                ))
            }
        };
        let mut tape = Tape::new();
        let gate = self.gate_forward(&mut tape, items, gate_w)?;
        Ok(tape.value(gate).clone())
    }

    /// Item embedding `y` per Eq.-style gated expert mixing; the context
    /// selects branch routing for the two-expert ablation designs and is
    /// irrelevant for the other towers.
    pub fn item_forward(&self, tape: &mut Tape, items: &[u32], ctx: ItemContext) -> Result<NodeId> {
        self.check_items(items)?;
        match &self.item_net {
            ItemNet::Plain(mlp) => {
                let x = self.full_input(tape, items)?;
                self.mlp_forward(tape, mlp, x)
            }
            ItemNet::Moe {
                mem_experts,
                gen_experts,
                gate_w,
            } => {
                let mem = self.mem_input(tape, items)?;
                let gen = self.gen_input(tape, items)?;
                let mut outs = Vec::with_capacity(mem_experts.len() + gen_experts.len());
                for expert in mem_experts {
                    outs.push(self.mlp_forward(tape, expert, mem)?);
                }
                for expert in gen_experts {
                    outs.push(self.mlp_forward(tape, expert, gen)?);
                }
                let gate = self.gate_forward(tape, items, *gate_w)?;
                gated_sum(tape, &outs, gate)
            }
            ItemNet::TwoExpert { experts, gate_w } => {
                let x = self.full_input(tape, items)?;
                match gate_w {
                    None => {
                        // hard 0-1 routing on head/tail tags
                        let col: Vec<f64> = items.iter().map(|&i| self.head_col[i as usize]).collect();
                        let head = tape.input(Matrix::from_vec(items.len(), 1, col.clone())?);
                        let tail = tape.input(Matrix::from_vec(
                            items.len(),
                            1,
                            col.iter().map(|&h| 1.0 - h).collect(),
                        )?);
                        let e1 = self.mlp_forward(tape, &experts[0], x)?;
                        let e2 = self.mlp_forward(tape, &experts[1], x)?;
                        let a = tape.scale_rows(e1, head)?;
                        let b = tape.scale_rows(e2, tail)?;
                        tape.add(a, b)
                    }
                    Some(gate_w) => {
                        let gate = self.gate_forward(tape, items, *gate_w)?;
                        match ctx {
                            ItemContext::TrainMain => {
                                let e1 = self.mlp_forward(tape, &experts[0], x)?;
                                let g = tape.slice_cols(gate, 0, 1)?;
                                tape.scale_rows(e1, g)
                            }
                            ItemContext::TrainReg => {
                                let e2 = self.mlp_forward(tape, &experts[1], x)?;
                                let g = tape.slice_cols(gate, 1, 1)?;
                                tape.scale_rows(e2, g)
                            }
                            ItemContext::Serve => {
                                let e1 = self.mlp_forward(tape, &experts[0], x)?;
                                let e2 = self.mlp_forward(tape, &experts[1], x)?;
                                gated_sum(tape, &[e1, e2], gate)
                            }
                        }
                    }
                }
            }
        }
    }

    /// Memorization-expert and generalization-expert outputs for analysis;
    /// only defined for the gated expert mixture.
    pub fn item_expert_outputs(&self, items: &[u32]) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
        self.check_items(items)?;
        let ItemNet::Moe {
            mem_experts,
            gen_experts,
            ..
        } = &self.item_net
        else {
            return Err(CdnError::Model("item tower is not an expert mixture".into()));
        };
        let mut tape = Tape::new();
        let mem = self.mem_input(&mut tape, items)?;
        let gen = self.gen_input(&mut tape, items)?;
        let mut mem_out = Vec::new();
        for expert in mem_experts {
            let node = self.mlp_forward(&mut tape, expert, mem)?;
            mem_out.push(tape.value(node).clone());
        }
        let mut gen_out = Vec::new();
        for expert in gen_experts {
            let node = self.mlp_forward(&mut tape, expert, gen)?;
            gen_out.push(tape.value(node).clone());
        }
        Ok((mem_out, gen_out))
    }

    /// Mixed in-batch logit matrix `alpha * X_m Y_m^T + (1-alpha) * X_r Y_r^T`.
    pub fn training_logits(
        &self,
        tape: &mut Tape,
        batch_m: &Batch,
        batch_r: Option<&Batch>,
        alpha: f64,
    ) -> Result<NodeId> {
        if let Some(br) = batch_r {
            if br.len() != batch_m.len() {
                return Err(CdnError::Model(format!(
                    "main batch has {} pairs, regularizer batch {}",
                    batch_m.len(),
                    br.len()
                )));
            }
        }
        let xm = self.user_forward(tape, &batch_m.users, Branch::Main)?;
        let ym = self.item_forward(tape, &batch_m.items, ItemContext::TrainMain)?;
        let lm = tape.matmul_nt(xm, ym)?;
        match (self.user_mode, batch_r) {
            (UserMode::MainOnly, _) => Ok(lm),
            (UserMode::Bilateral, Some(br)) => {
                let xr = self.user_forward(tape, &br.users, Branch::Regularizer)?;
                let yr = self.item_forward(tape, &br.items, ItemContext::TrainReg)?;
                let lr = tape.matmul_nt(xr, yr)?;
                let main_term = tape.scale(lm, alpha);
                let reg_term = tape.scale(lr, 1.0 - alpha);
                tape.add(main_term, reg_term)
            }
            (UserMode::Bilateral, None) => Err(CdnError::Model(
                "bilateral model needs a regularizer batch".into(),
            )),
        }
    }

    /// In-batch sampled-softmax loss over the mixed logits. Row-aligned
    /// batches put both branches' positives on the diagonal, so the
    /// two-term loss collapses to one cross entropy over the mixed matrix.
    pub fn training_loss(
        &self,
        tape: &mut Tape,
        batch_m: &Batch,
        batch_r: Option<&Batch>,
        alpha: f64,
        plugins: &LossPlugins,
    ) -> Result<NodeId> {
        let mut logits = self.training_logits(tape, batch_m, batch_r, alpha)?;
        if let Some(neg_log_q) = &plugins.neg_log_q {
            if neg_log_q.len() != batch_m.len() {
                return Err(CdnError::Model(format!(
                    "{} logQ corrections for batch of {}",
                    neg_log_q.len(),
                    batch_m.len()
                )));
            }
            let row = tape.input(Matrix::from_vec(1, neg_log_q.len(), neg_log_q.clone())?);
            logits = tape.add_bias(logits, row)?;
        }
        match &plugins.row_weights {
            Some(w) => tape.softmax_xent_inbatch(logits, w),
            None => tape.softmax_xent_inbatch(logits, &vec![1.0; batch_m.len()]),
        }
    }

    /// Serving score: main-branch user embedding dotted with the item
    /// embedding. No regularizer-branch parameter is touched.
    pub fn score(&self, user: u32, item: u32) -> Result<f64> {
        let mut tape = Tape::new();
        let x = self.user_forward(&mut tape, &[user], Branch::Main)?;
        let y = self.item_forward(&mut tape, &[item], ItemContext::Serve)?;
        let s = tape.matmul_nt(x, y)?;
        Ok(tape.scalar(s))
    }

    /// Main-branch user embeddings, one row per user.
    pub fn user_embeddings(&self, users: &[u32]) -> Result<Matrix> {
        let mut tape = Tape::new();
        let x = self.user_forward(&mut tape, users, Branch::Main)?;
        Ok(tape.value(x).clone())
    }

    /// Serving item embeddings for the whole catalog, computed in chunks.
    pub fn item_embeddings_all(&self) -> Result<Matrix> {
        const CHUNK: usize = 1024;
        let mut out = Matrix::zeros(self.n_items, self.item_cfg.output_dim);
        let items: Vec<u32> = (0..self.n_items as u32).collect();
        for chunk in items.chunks(CHUNK) {
            let mut tape = Tape::new();
            let y = self.item_forward(&mut tape, chunk, ItemContext::Serve)?;
            let value = tape.value(y);
            for (k, &item) in chunk.iter().enumerate() {
                out.row_mut(item as usize).copy_from_slice(value.row(k));
            }
        }
        Ok(out)
    }

    pub fn backward(&mut self, tape: &Tape, loss: NodeId) -> Result<()> {
        tape.backward(loss, &mut self.params)
    }

    /// Every user-tower slot (embedding, trunk, both heads); the set NDP
    /// freezes in its second stage.
    pub fn user_param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.user_emb];
        for lin in &self.f_layers {
            ids.push(lin.w);
            ids.push(lin.b);
        }
        let mut push_mlp = |mlp: &Mlp, ids: &mut Vec<ParamId>| {
            for lin in &mlp.hidden {
                ids.push(lin.w);
                ids.push(lin.b);
            }
            ids.push(mlp.out.w);
            ids.push(mlp.out.b);
        };
        push_mlp(&self.hm, &mut ids);
        if let Some(hr) = &self.hr {
            push_mlp(hr, &mut ids);
        }
        ids
    }

    pub fn set_user_tower_trainable(&mut self, trainable: bool) {
        for id in self.user_param_ids() {
            self.params.set_trainable(id, trainable);
        }
    }

    /// Copy main-head parameters into the regularizer head (test and
    /// initialization aid).
    pub fn copy_main_head_to_regularizer(&mut self) -> Result<()> {
        let hr = self
            .hr
            .clone()
            .ok_or_else(|| CdnError::Model("model has no regularizer branch".into()))?;
        let hm = self.hm.clone();
        let mut pairs: Vec<(ParamId, ParamId)> = hm
            .hidden
            .iter()
            .zip(&hr.hidden)
            .flat_map(|(src, dst)| [(src.w, dst.w), (src.b, dst.b)])
            .collect();
        pairs.push((hm.out.w, hr.out.w));
        pairs.push((hm.out.b, hr.out.b));
        for (src, dst) in pairs {
            let value = self.params.value(src).clone();
            *self.params.value_mut(dst) = value;
        }
        Ok(())
    }
}
