use std::path::{Path, PathBuf};
use std::time::Instant;

use kgr_core::ingest::serialize_as;
use kgr_core::prompt::{build_prompt, GenerationRequest, Generator, GEN_TOKEN_VAR, GEN_URL_VAR};
use kgr_core::{PerturbationSpec, PromptTemplate, SimilarityReport, TripleFormat};
use serde_json::json;

use crate::args::{Cli, Command, InputArgs, RetrievalArgs};
use crate::config::RunConfig;
use crate::output::{jsonl, Outputs};
use crate::pipeline::{
    check_seeds, embedding_provider, extract, load_graph, require_graph, require_queries,
    retrieve_for, retry, seeds_for, Query, Scorer,
};
use crate::sweep::{curve_csv, run_sweep};
use crate::CliError;

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

fn apply_input(cfg: &mut RunConfig, input: &InputArgs) {
    if let Some(g) = &input.graph {
        cfg.input.graph = Some(g.clone());
    }
    if let Some(q) = &input.queries {
        cfg.input.queries = Some(q.clone());
    }
    if let Some(s) = &input.seeds {
        cfg.input.seeds = s.clone();
    }
}

fn apply_retrieval(cfg: &mut RunConfig, r: &RetrievalArgs) {
    if let Some(k) = r.k {
        cfg.retrieval.k = k;
    }
    if let Some(c) = r.edge_cost {
        cfg.retrieval.edge_cost = c;
    }
    if let Some(v) = r.variant {
        cfg.retrieval.variant = v;
    }
    if let Some(h) = r.hops {
        cfg.extract.hops = h;
    }
}

/// Defaults < config file < `--set` < dedicated flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.sets)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(f) = cli.format {
        cfg.format = f.into();
    }
    match &cli.command {
        Command::Extract { input, hops } => {
            apply_input(&mut cfg, input);
            if let Some(h) = hops {
                cfg.extract.hops = *h;
            }
        }
        Command::Retrieve { input, retrieval } => {
            apply_input(&mut cfg, input);
            apply_retrieval(&mut cfg, retrieval);
        }
        Command::Perturb {
            graph,
            method,
            level,
        } => {
            if let Some(g) = graph {
                cfg.input.graph = Some(g.clone());
            }
            if let Some(m) = method {
                cfg.perturb.method = *m;
            }
            if let Some(l) = level {
                cfg.perturb.level = *l;
            }
        }
        Command::Measure { graph, perturbed } => {
            if let Some(g) = graph {
                cfg.input.graph = Some(g.clone());
            }
            if let Some(p) = perturbed {
                cfg.input.perturbed = Some(p.clone());
            }
        }
        Command::Sweep {
            input,
            retrieval,
            methods,
            levels,
            replicates,
        } => {
            apply_input(&mut cfg, input);
            apply_retrieval(&mut cfg, retrieval);
            if let Some(m) = methods {
                cfg.sweep.methods = m.clone();
            }
            if let Some(l) = levels {
                cfg.sweep.levels = l.clone();
            }
            if let Some(r) = replicates {
                cfg.sweep.replicates = *r;
            }
        }
        Command::Generate {
            input,
            retrieval,
            gen_url,
            template,
        } => {
            apply_input(&mut cfg, input);
            apply_retrieval(&mut cfg, retrieval);
            if let Some(u) = gen_url {
                cfg.generate.url = Some(u.clone());
            }
            if let Some(t) = template {
                cfg.generate.template = Some(t.clone());
            }
        }
        Command::Stats { graph } => {
            if let Some(g) = graph {
                cfg.input.graph = Some(g.clone());
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let started = Instant::now();
    let name = cli.command.name();
    let mut outputs = Outputs::default();
    let mut extra = json!({});
    let outcome = match &cli.command {
        Command::Extract { .. } => cmd_extract(&cfg, &mut outputs),
        Command::Retrieve { .. } => cmd_retrieve(&cfg, &mut outputs),
        Command::Perturb { .. } => cmd_perturb(&cfg, &mut outputs),
        Command::Measure { .. } => cmd_measure(&cfg, &mut outputs),
        Command::Sweep { .. } => cmd_sweep(&cfg, &mut outputs),
        Command::Generate { .. } => cmd_generate(&cfg, &mut outputs, &mut extra),
        Command::Stats { .. } => cmd_stats(&cfg, &mut outputs),
    };
    // a partial sweep still writes its records
    if let Err(e) = &outcome {
        if !matches!(e, CliError::PartialSweep { .. }) {
            return outcome;
        }
    }
    let files: Vec<String> = outputs.paths().map(|p| p.display().to_string()).collect();
    let meta = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "root_seed": cfg.seed,
        "config": cfg,
        "elapsed_ms": started.elapsed().as_millis() as u64,
        "files": files,
        "details": extra,
    });
    outputs.add(
        cfg.out.join(format!("{name}.meta.json")),
        serde_json::to_string_pretty(&meta).map_err(anyhow::Error::from)?,
    );
    for path in outputs.commit()? {
        log::info!("wrote {}", path.display());
    }
    outcome
}

fn extension(format: TripleFormat) -> &'static str {
    match format {
        TripleFormat::Tsv => "tsv",
        TripleFormat::Nt => "nt",
    }
}

fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Queries from the query file, or one pseudo-query for the configured seeds.
fn extraction_queries(cfg: &RunConfig) -> Result<Vec<Query>, CliError> {
    if cfg.input.queries.is_some() {
        require_queries(cfg)
    } else if !cfg.input.seeds.is_empty() {
        Ok(vec![Query {
            id: "seeds".into(),
            question: String::new(),
            seeds: cfg.input.seeds.clone(),
        }])
    } else {
        Err(config_err(
            "extract needs seeds (input.seeds / --seeds) or a query file",
        ))
    }
}

fn cmd_extract(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let queries = extraction_queries(cfg)?;
    for q in &queries {
        let seeds = seeds_for(cfg, q);
        if seeds.is_empty() {
            return Err(config_err(format!(
                "query `{}` has no seeds and no default seeds are set",
                q.id
            )));
        }
        check_seeds(&g, seeds, &format!("query `{}`", q.id))?;
    }
    let mut rows = Vec::new();
    for q in &queries {
        let seeds = seeds_for(cfg, q);
        let (sub, scores) = extract(cfg, &g, seeds)?;
        let file =
            cfg.out
                .join("extract")
                .join(format!("{}.{}", safe_name(&q.id), extension(cfg.format)));
        out.add(file.clone(), serialize_as(&sub, cfg.format));
        rows.push(json!({
            "id": q.id,
            "seeds": seeds,
            "entities": sub.entity_count(),
            "triples": sub.triple_count(),
            "ppr_iterations": scores.as_ref().map(|s| s.iterations_used),
            "ppr_converged": scores.as_ref().map(|s| s.converged),
            "file": file.file_name().map(|f| f.to_string_lossy().into_owned()),
        }));
    }
    out.add(cfg.out.join("extract.jsonl"), jsonl(rows)?);
    Ok(())
}

fn checked_queries(cfg: &RunConfig, g: &kgr_core::KnowledgeGraph) -> Result<Vec<Query>, CliError> {
    let queries = require_queries(cfg)?;
    for q in &queries {
        check_seeds(g, seeds_for(cfg, q), &format!("query `{}`", q.id))?;
    }
    Ok(queries)
}

fn cmd_retrieve(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let queries = checked_queries(cfg, &g)?;
    let provider = embedding_provider(cfg);
    let mut rows = Vec::new();
    for q in &queries {
        let rk = retrieve_for(cfg, &provider, &g, q)?;
        let mut row = rk.to_json();
        row["id"] = json!(q.id);
        row["question"] = json!(q.question);
        rows.push(row);
    }
    out.add(cfg.out.join("retrieve.jsonl"), jsonl(rows)?);
    Ok(())
}

fn cmd_perturb(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let spec = PerturbationSpec {
        replace_mode: cfg.perturb.replace_mode,
        ..PerturbationSpec::new(cfg.perturb.method, cfg.perturb.level, cfg.seed)
    };
    let p = kgr_core::perturb(&g, &spec).map_err(config_err)?;
    out.add(
        cfg.out.join(format!("perturbed.{}", extension(cfg.format))),
        serialize_as(&p.graph, cfg.format),
    );
    out.add(cfg.out.join("edits.jsonl"), p.edit_log_jsonl());
    Ok(())
}

fn require_path<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| config_err(format!("no {what} given")))
}

fn cmd_measure(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let h = load_graph(require_path(
        &cfg.input.perturbed,
        "perturbed graph (input.perturbed / --perturbed)",
    )?)?;
    // the perturbed graph may lack isolated entities or relations of the original
    let h = g
        .with_triples(&h.triples().collect::<Vec<_>>())
        .map_err(config_err)?;
    let scorer = Scorer::fit(cfg, &g)?;
    let report = SimilarityReport::compute(&g, &h, scorer.as_dyn())?;
    out.add(
        cfg.out.join("measure.json"),
        serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n",
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let queries = match &cfg.input.queries {
        Some(_) => checked_queries(cfg, &g)?,
        None => Vec::new(),
    };
    if g.triple_count() == 0 {
        return Err(config_err("sweep needs a graph with at least one triple"));
    }
    let provider = embedding_provider(cfg);
    let scorer = Scorer::fit(cfg, &g)?;
    let records = run_sweep(cfg, &g, &queries, &provider, &scorer)?;
    out.add(cfg.out.join("sweep.jsonl"), jsonl(&records)?);
    out.add(cfg.out.join("sweep.csv"), curve_csv(&records)?);
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::PartialSweep {
            failed,
            total: records.len(),
        });
    }
    Ok(())
}

fn cmd_generate(
    cfg: &RunConfig,
    out: &mut Outputs,
    extra: &mut serde_json::Value,
) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let queries = checked_queries(cfg, &g)?;
    let template = match &cfg.generate.template {
        Some(p) => {
            PromptTemplate::load(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
        None => PromptTemplate::default(),
    };
    let gc = &cfg.generate;
    let url = gc
        .url
        .clone()
        .or_else(|| std::env::var(GEN_URL_VAR).ok().filter(|u| !u.is_empty()))
        .ok_or_else(|| {
            config_err(format!(
                "no generation endpoint (generate.url, --gen-url or {GEN_URL_VAR})"
            ))
        })?;
    let mut endpoint = kgr_core::http::Endpoint::new(url)
        .with_timeout(std::time::Duration::from_secs_f64(gc.timeout_secs));
    let token_var = gc.token_env.as_deref().unwrap_or(GEN_TOKEN_VAR);
    endpoint.token = std::env::var(token_var).ok().filter(|t| !t.is_empty());

    let provider = embedding_provider(cfg);
    let mut prompts = Vec::new();
    for q in &queries {
        let rk = retrieve_for(cfg, &provider, &g, q)?;
        prompts.push(build_prompt(&q.question, &rk, &template));
    }
    let reqs: Vec<GenerationRequest> = prompts
        .iter()
        .map(|p| GenerationRequest {
            temperature: gc.temperature,
            top_p: gc.top_p,
            ..GenerationRequest::new(p.clone())
        })
        .collect();
    let generator = Generator::new(endpoint, retry(gc.attempts))?;
    let answers = generator
        .generate_batch(&reqs, gc.in_flight)
        .into_iter()
        .collect::<kgr_core::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut latency = Vec::new();
    for ((q, prompt), a) in queries.iter().zip(&prompts).zip(&answers) {
        rows.push(json!({
            "query": q,
            "prompt": prompt,
            "answer": { "text": a.text, "model_id": a.model_id },
        }));
        latency.push(json!({ "id": q.id, "latency_ms": a.latency.as_secs_f64() * 1e3, "retry_count": a.retry_count }));
    }
    *extra = json!({ "generation": latency });
    out.add(cfg.out.join("generate.jsonl"), jsonl(rows)?);
    Ok(())
}

fn cmd_stats(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let g = require_graph(cfg)?;
    let s = g.stats();
    let value = json!({
        "entities": s.node_count,
        "triples": s.edge_count,
        "relations": g.used_relations().len(),
        "avg_degree": s.avg_degree,
        "clustering_coefficient": s.clustering_coefficient,
        "density": s.density,
    });
    let text = serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)? + "\n";
    print!("{text}");
    out.add(cfg.out.join("stats.json"), text);
    Ok(())
}
