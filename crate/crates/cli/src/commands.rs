use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use readorder_core::adaptation::{adapt_page, LineBox, LineOrder};
use readorder_core::colorkey::{align_page, LayoutRecord, SequenceRecord};
use readorder_core::heuristic::heuristic_order;
use readorder_core::jsonl::{read_jsonl, write_jsonl};
use readorder_core::metrics::{dataset_stats, evaluate, index_predictions};
use readorder_core::synthgen::{generate_page, LayoutKind};
use readorder_core::{OrderPrediction, Page};
use readorder_model::train::{presentation_orders, train};
use readorder_model::{checkpoint, DecodeOptions, Mode, Model};
use serde::Serialize;

use crate::args::*;
use crate::config::FileConfig;
use crate::failure::Failure;
use crate::render::{render_gold, render_prediction};

pub struct RunContext {
    pub file: FileConfig,
    pub seed: Option<u64>,
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

fn write<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_jsonl(path, items).with_context(|| format!("writing {}", path.display()))
}

fn parse_kind(s: &str) -> Result<LayoutKind> {
    s.parse().map_err(|_| {
        Failure::usage(format!(
            "unknown layout kind {s:?}; expected single_column, two_column, three_column, table or mixed"
        ))
        .into()
    })
}

fn check_rate(name: &str, r: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(Failure::usage(format!("{name} must lie in [0, 1], got {r}")).into())
    }
}

pub fn gen(ctx: &RunContext, a: &GenArgs) -> Result<()> {
    let mut spec = ctx.file.gen.clone();
    if let Some(k) = &a.kind {
        spec.layout_kind = parse_kind(k)?;
    }
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = a.$f { spec.$f = v; })* };
    }
    set!(tokens_min, tokens_max, width, height, font_height, column_gap);
    if let Some(s) = ctx.seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let generated = (0..a.count as u64)
        .into_par_iter()
        .map(|k| generate_page(&spec, k))
        .collect::<readorder_core::Result<Vec<_>>>()?;
    let pages: Vec<&Page> = generated.iter().map(|g| &g.page).collect();
    write(&a.output, &pages)?;
    if let Some(path) = &a.lines_out {
        let lines: Vec<&LineBox> = generated.iter().flat_map(|g| &g.lines).collect();
        write(path, &lines)?;
    }
    if a.sequence_out.is_some() || a.layout_out.is_some() {
        let (mut seq, mut layout) = (Vec::new(), Vec::new());
        for (k, g) in generated.iter().enumerate() {
            let (s, l) = g.alignment_streams(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
            seq.extend(s);
            layout.extend(l);
        }
        if let Some(path) = &a.sequence_out {
            write(path, &seq)?;
        }
        if let Some(path) = &a.layout_out {
            write(path, &layout)?;
        }
    }
    Ok(())
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let pages: Vec<Page> = read(&a.input)?;
    write_json(&dataset_stats(&pages)?, a.output.as_deref())
}

/// Groups records by page id, keeping the order in which pages first appear.
fn group_by_page<T>(items: Vec<T>, id: impl Fn(&T) -> &str) -> (Vec<String>, HashMap<String, Vec<T>>) {
    let mut order = Vec::new();
    let mut groups: HashMap<String, Vec<T>> = HashMap::new();
    for item in items {
        let key = id(&item).to_string();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(item);
    }
    (order, groups)
}

pub fn align(a: &AlignArgs) -> Result<()> {
    let seq: Vec<SequenceRecord> = read(&a.sequence)?;
    let layout: Vec<LayoutRecord> = read(&a.layout)?;
    let (order, seq_groups) = group_by_page(seq, |r| &r.page_id);
    let (_, mut layout_groups) = group_by_page(layout, |r| &r.page_id);
    let mut pages = Vec::with_capacity(order.len());
    for id in &order {
        let l = layout_groups
            .remove(id)
            .ok_or_else(|| Failure::data(format!("page {id:?} has no layout records")))?;
        pages.push(align_page(id, &seq_groups[id], &l).with_context(|| format!("aligning page {id:?}"))?);
    }
    if let Some(id) = layout_groups.keys().min() {
        return Err(Failure::data(format!("layout records for page {id:?} have no reading sequence")).into());
    }
    write(&a.output, &pages)
}

pub fn train_cmd(ctx: &RunContext, a: &TrainArgs) -> Result<()> {
    let mut model_cfg = ctx.file.model.clone();
    let mut train_cfg = ctx.file.train.clone();
    if let Some(m) = &a.mode {
        model_cfg.mode = m.parse::<Mode>()?;
    }
    macro_rules! set {
        ($target:ident: $($flag:ident => $field:ident),*) => { $(if let Some(v) = a.$flag { $target.$field = v; })* };
    }
    set!(model_cfg: layers => layers, hidden_dim => hidden_dim, heads => heads, ffn_dim => ffn_dim,
        max_tokens => max_tokens_per_page, coord_grid => coord_grid, vocab_size => vocab_size, dropout => dropout);
    set!(train_cfg: epochs => epochs, batch_size => batch_size, clip_norm => clip_norm, shuffle_rate => shuffle_rate);
    if let Some(v) = a.lr {
        train_cfg.optimizer.lr = v;
    }
    if let Some(v) = a.warmup {
        train_cfg.optimizer.warmup_steps = v;
    }
    if let Some(v) = a.weight_decay {
        train_cfg.optimizer.weight_decay = v;
    }
    if let Some(s) = ctx.seed {
        model_cfg.seed = s;
        train_cfg.seed = s;
    }
    check_rate("shuffle rate", train_cfg.shuffle_rate)?;
    let pages: Vec<Page> = read(&a.input)?;
    let mut model = Model::new(model_cfg)?;
    let report = train(&mut model, &pages, &train_cfg)?;
    checkpoint::save(&model, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    if let Some(path) = &a.report_out {
        write_json(&report, Some(path))?;
    }
    Ok(())
}

pub fn predict(ctx: &RunContext, a: &PredictArgs) -> Result<()> {
    let pages: Vec<Page> = read(&a.input)?;
    let preds: Vec<OrderPrediction> = if a.heuristic {
        pages
            .par_iter()
            .map(|p| OrderPrediction::new(p.id.clone(), heuristic_order(&p.tokens)))
            .collect()
    } else {
        let path = a.model.as_ref().expect("clap requires --model without --heuristic");
        let model = checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        let opts = DecodeOptions {
            beam: a.beam.unwrap_or(ctx.file.decode.beam),
            constrained: !a.unconstrained && ctx.file.decode.constrained,
        };
        if opts.beam == 0 {
            return Err(Failure::usage("beam width must be at least 1").into());
        }
        let rate = check_rate("shuffle rate", a.shuffle_rate.unwrap_or(ctx.file.decode.shuffle_rate))?;
        let orders = presentation_orders(&pages, rate, ctx.seed.unwrap_or(0));
        pages
            .par_iter()
            .zip(&orders)
            .map(|(p, o)| model.predict(p, o, opts).with_context(|| format!("page {:?}", p.id)))
            .collect::<Result<_>>()?
    };
    write(&a.output, &preds)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let mut pages: Vec<Page> = read(&a.gold)?;
    let preds: Vec<OrderPrediction> = read(&a.pred)?;
    if let Some(k) = &a.kind {
        let kind = parse_kind(k)?;
        pages.retain(|p| LayoutKind::from_page_id(&p.id) == Some(kind));
    }
    write_json(&evaluate(&pages, &preds)?, a.output.as_deref())
}

pub fn adapt_lines(a: &AdaptArgs) -> Result<()> {
    let pages: Vec<Page> = read(&a.input)?;
    let lines: Vec<LineBox> = read(&a.lines)?;
    let (_, by_page) = group_by_page(lines, |l| &l.page_id);
    let preds: Vec<OrderPrediction> = match &a.pred {
        Some(p) => read(p)?,
        None => pages.iter().map(|p| OrderPrediction::new(p.id.clone(), (0..p.len()).collect())).collect(),
    };
    let by_id = index_predictions(&preds)?;
    let orders = pages
        .iter()
        .map(|p| {
            let lines = by_page
                .get(&p.id)
                .ok_or_else(|| Failure::data(format!("no text lines for page {:?}", p.id)))?;
            let pred = by_id
                .get(p.id.as_str())
                .ok_or_else(|| Failure::data(format!("no prediction for page {:?}", p.id)))?;
            pred.validate(p.len())?;
            Ok(adapt_page(&p.id, &p.tokens, lines, &pred.deduplicated())?)
        })
        .collect::<Result<Vec<LineOrder>>>()?;
    write(&a.output, &orders)
}

pub fn render(a: &RenderArgs) -> Result<()> {
    let pages: Vec<Page> = read(&a.input)?;
    let page = match &a.page_id {
        Some(id) => pages
            .iter()
            .find(|p| &p.id == id)
            .ok_or_else(|| Failure::data(format!("page {id:?} not found")))?,
        None => pages.first().ok_or_else(|| Failure::data("page file is empty"))?,
    };
    let svg = match &a.pred {
        Some(path) => {
            let preds: Vec<OrderPrediction> = read(path)?;
            let pred = preds
                .iter()
                .find(|p| p.page_id == page.id)
                .ok_or_else(|| Failure::data(format!("no prediction for page {:?}", page.id)))?;
            render_prediction(page, pred)?
        }
        None => render_gold(page),
    };
    fs::write(&a.output, svg).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}
