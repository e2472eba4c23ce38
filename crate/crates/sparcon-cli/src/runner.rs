use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;

use sparcon::eval::{homophily_csv, homophily_stats, metrics_report, roc_csv};
use sparcon::graph::{load_graph, load_labels, save_attrs, save_edges, save_labels};
use sparcon::pipeline::{
    fuse_scores, infer_contrast_scores, loss_trace_csv, run_pipeline, train, ScoreTable,
};
use sparcon::sparsify::{edge_similarities, similarity_dump_csv, spar_scores, sparsify};
use sparcon::{AnomalyLabels, AttributedGraph, ContrastModel};

use crate::config::RunConfig;

fn load_dataset(cfg: &RunConfig) -> anyhow::Result<AttributedGraph> {
    let (graph, stats) = load_graph(&cfg.edges_path, &cfg.attrs_path)?;
    if stats.self_loops_dropped > 0 {
        eprintln!(
            "warning: dropped {} self-loop line(s)",
            stats.self_loops_dropped
        );
    }
    Ok(graph)
}

fn load_dataset_labels(cfg: &RunConfig, n: usize) -> anyhow::Result<AnomalyLabels> {
    match &cfg.labels_path {
        Some(path) => {
            let labels = load_labels(path)?;
            if labels.len() != n {
                bail!(
                    "labels file {} covers {} nodes, graph has {n}",
                    path.display(),
                    labels.len()
                );
            }
            Ok(labels)
        }
        None => bail!("this command needs labels_path in the config (run `inject` first)"),
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_inject(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let (injected, labels) = sparcon::inject::inject(&graph, &cfg.injection)?;
    save_edges(cfg.out("injected.edges"), injected.adjacency())?;
    save_attrs(cfg.out("injected.attrs.csv"), injected.attributes())?;
    save_labels(cfg.out("labels.csv"), &labels)?;
    println!(
        "wrote {} ({} nodes, {} edges, {} anomalies)",
        cfg.out("injected.edges").display(),
        injected.n(),
        injected.m(),
        labels.anomaly_count()
    );

    // companion config pointing at the injected artifacts, ready for the
    // pipeline commands
    let mut next = cfg.clone();
    next.edges_path = cfg.out("injected.edges");
    next.attrs_path = cfg.out("injected.attrs.csv");
    next.labels_path = Some(cfg.out("labels.csv"));
    let text = serde_json::to_string_pretty(&next)?;
    write(&cfg.out("injected.config.json"), &text)
}

pub fn cmd_sparsify(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let sim = edge_similarities(&graph);
    let view = sparsify(&graph, &sim, cfg.train.epsilon)?;
    write(&cfg.out("similarities.csv"), &similarity_dump_csv(&sim))?;
    save_edges(cfg.out("spar.edges"), view.adjacency())?;
    let scores = spar_scores(&view);
    let mut csv = String::from("node_id,removed_count,score_spar\n");
    for (i, s) in scores.iter().enumerate() {
        csv.push_str(&format!("{i},{},{s}\n", view.removed_count(i)));
    }
    write(&cfg.out("spar_scores.csv"), &csv)?;
    println!(
        "kept {} of {} edges at epsilon {}",
        view.adjacency().m(),
        graph.m(),
        cfg.train.epsilon
    );
    Ok(())
}

pub fn cmd_train(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let sim = edge_similarities(&graph);
    let view = sparsify(&graph, &sim, cfg.train.epsilon)?;
    let (model, trace) = train(&graph, &view, &cfg.train)?;
    model.save(cfg.out("model.json"))?;
    println!("wrote {}", cfg.out("model.json").display());
    write(&cfg.out("loss_trace.csv"), &loss_trace_csv(&trace))?;
    if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
        println!("loss {first:.6} → {last:.6} over {} epochs", trace.len());
    }
    Ok(())
}

pub fn cmd_score(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let labels = load_dataset_labels(&cfg, graph.n())?;
    let model = ContrastModel::load(cfg.out("model.json"))?;
    let sim = edge_similarities(&graph);
    let view = sparsify(&graph, &sim, cfg.train.epsilon)?;
    let con = infer_contrast_scores(&graph, &view, &model, &cfg.train)?;
    let table = fuse_scores(&con, &spar_scores(&view), &labels, cfg.train.lambda)?;
    write(&cfg.out("scores.csv"), &table.csv())
}

pub fn cmd_eval(cfg: RunConfig) -> anyhow::Result<()> {
    let text = fs::read_to_string(cfg.out("scores.csv"))
        .with_context(|| format!("reading {}", cfg.out("scores.csv").display()))?;
    let table = ScoreTable::from_csv(&text)?;
    emit_metrics(&cfg, &table)
}

pub fn cmd_pipeline(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let labels = load_dataset_labels(&cfg, graph.n())?;
    let output = run_pipeline(&graph, &labels, &cfg.train)?;
    output.model.save(cfg.out("model.json"))?;
    println!("wrote {}", cfg.out("model.json").display());
    write(
        &cfg.out("loss_trace.csv"),
        &loss_trace_csv(&output.loss_trace),
    )?;
    write(&cfg.out("scores.csv"), &output.table.csv())?;
    emit_metrics(&cfg, &output.table)
}

pub fn cmd_homophily(cfg: RunConfig) -> anyhow::Result<()> {
    let graph = load_dataset(&cfg)?;
    let labels = load_dataset_labels(&cfg, graph.n())?;
    let sim = edge_similarities(&graph);
    let stats = homophily_stats(&sim, &labels);
    write(&cfg.out("homophily.csv"), &homophily_csv(&stats))?;
    match (stats.normal_mean, stats.anomalous_mean) {
        (Some(n), Some(a)) => {
            println!("mean neighbor similarity: normal {n:.4}, anomalous {a:.4}")
        }
        _ => println!("one class has no non-isolated members"),
    }
    Ok(())
}

pub fn cmd_generate(preset: &str, seed: u64, out: &Path) -> anyhow::Result<()> {
    let synth_cfg = match preset {
        "citation-scale" => sparcon::synth::citation_scale(seed),
        "small" => sparcon::synth::small_benchmark(seed),
        "toy" => sparcon::synth::toy_benchmark(seed),
        other => bail!("unknown preset {other:?} (expected citation-scale, small or toy)"),
    };
    fs::create_dir_all(out)?;
    let graph = sparcon::synth::community_graph(&synth_cfg)?;
    save_edges(out.join("graph.edges"), graph.adjacency())?;
    save_attrs(out.join("graph.attrs.csv"), graph.attributes())?;
    println!(
        "wrote {} and graph.attrs.csv ({} nodes, {} edges, {} attributes)",
        out.join("graph.edges").display(),
        graph.n(),
        graph.m(),
        graph.f()
    );
    Ok(())
}

fn emit_metrics(cfg: &RunConfig, table: &ScoreTable) -> anyhow::Result<()> {
    let scores = table.final_scores();
    let labels = table.binary_labels();
    let report = metrics_report(&scores, &labels)?;
    write(&cfg.out("roc.csv"), &roc_csv(&report.roc_points))?;
    let metrics = json!({
        "auc": report.auc,
        "n_pos": report.n_pos,
        "n_neg": report.n_neg,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "config": cfg,
    });
    write(
        &cfg.out("metrics.json"),
        &serde_json::to_string_pretty(&metrics)?,
    )?;
    println!(
        "AUC {:.4} ({} anomalies / {} nodes)",
        report.auc,
        report.n_pos,
        labels.len()
    );
    Ok(())
}
