use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use log::{info, warn};
use pd_it2fnn::evaluation::{
    compute_metrics, evaluate_model, loocv, noise_experiment, sweep_rule_count, MetricsReport,
    NoiseConfig,
};
use pd_it2fnn::gait_features::{
    extract_recording, read_feature_csv, write_feature_csv, write_raw_feature_csv,
};
use pd_it2fnn::learning::train_from_records;
use pd_it2fnn::rule_report::{
    explain, export_fuzzy_sets, export_rule_grid, write_fuzzy_sets_csv, write_rule_grid_csv,
};
use pd_it2fnn::vgrf_io::{load_dataset, LabelTable};
use pd_it2fnn::{online_update, Class, Dataset, Error, FeatureRecord, RuleBase, UpdateOutcome};
use serde_json::json;

use crate::output::{write_atomic, write_text};
use crate::{
    CrossvalArgs, ExportArgs, ExtractArgs, FeatureInput, NoiseArgs, PredictArgs, SweepArgs,
    TrainArgs, UpdateArgs,
};

fn log_config(command: &str, config: serde_json::Value) {
    info!("{command} config {config}");
}

fn load_features(input: &FeatureInput) -> anyhow::Result<Vec<FeatureRecord>> {
    let mut records = read_feature_csv(&input.features)?;
    if !input.dataset.is_empty() {
        records.retain(|r| input.dataset.contains(&r.dataset));
    }
    if records.is_empty() {
        bail!("no feature rows in {} match the dataset filter", input.features.display());
    }
    info!("{} feature rows from {}", records.len(), input.features.display());
    Ok(records)
}

fn load_model(path: &Path) -> anyhow::Result<RuleBase> {
    let rb = RuleBase::load(path)?;
    info!("model {} with {} rules", path.display(), rb.len());
    Ok(rb)
}

fn datasets_in(records: &[FeatureRecord]) -> Vec<Dataset> {
    Dataset::ALL.into_iter().filter(|d| records.iter().any(|r| r.dataset == *d)).collect()
}

pub fn extract(a: &ExtractArgs) -> anyhow::Result<()> {
    let cfg = a.preprocess.config();
    log_config(
        "extract",
        json!({
            "data_dir": a.data_dir,
            "out": a.out,
            "raw_out": a.raw_out,
            "dataset": a.dataset,
            "labels": a.labels,
            "extract": cfg,
        }),
    );
    cfg.preprocess.validate()?;
    let labels = a.labels.as_deref().map(LabelTable::from_csv).transpose()?;
    let recordings = load_dataset(&a.data_dir, &a.dataset, labels.as_ref())?;

    let mut extractions = Vec::new();
    for rec in &recordings {
        match extract_recording(rec, &cfg) {
            Ok(ex) => {
                for cut in &ex.removed {
                    info!(
                        "{}: removed {:?} stride {:.2}-{:.2} s",
                        rec.record_id, cut.foot, cut.start_s, cut.end_s
                    );
                }
                extractions.push(ex);
            }
            Err(e) => warn!("skipping {}: {e}", rec.record_id),
        }
    }
    if extractions.is_empty() {
        bail!("none of the {} recordings produced features", recordings.len());
    }
    info!("extracted {} of {} recordings", extractions.len(), recordings.len());

    let rows: Vec<FeatureRecord> = extractions.iter().map(|e| e.features.clone()).collect();
    write_atomic(&a.out, |w| Ok(write_feature_csv(w, &rows)?))?;
    if let Some(raw) = &a.raw_out {
        write_atomic(raw, |w| Ok(write_raw_feature_csv(w, &extractions)?))?;
    }
    Ok(())
}

pub fn train(a: &TrainArgs) -> anyhow::Result<()> {
    let cfg = a.fit.config(a.rules);
    log_config(
        "train",
        json!({
            "features": a.input.features,
            "dataset": a.input.dataset,
            "model_out": a.model_out,
            "batch": cfg,
        }),
    );
    let records = load_features(&a.input)?;
    let rb = train_from_records(&records, &cfg)?;
    let fit = evaluate_model(&rb, &records)?;
    info!(
        "trained {} rules; training accuracy {:.2}",
        rb.len(),
        100.0 * fit.accuracy
    );
    write_atomic(&a.model_out, |w| Ok(rb.to_json_writer(w)?))
}

pub fn predict(a: &PredictArgs) -> anyhow::Result<()> {
    log_config(
        "predict",
        json!({
            "model": a.model,
            "features": a.input.features,
            "dataset": a.input.dataset,
            "explain": a.explain,
            "out": a.out,
        }),
    );
    let rb = load_model(&a.model)?;
    let records = load_features(&a.input)?;
    let mut rows = Vec::with_capacity(records.len());
    let mut decisions = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let x = rb.normalize(&r.values);
        let t = rb.infer(&x)?;
        decisions.push(t.decision);
        let mut row = json!({
            "row": i,
            "subject_id": r.subject_id,
            "dataset": r.dataset,
            "label": r.label,
            "y_lower": t.y_lower,
            "y_upper": t.y_upper,
            "y": t.y,
            "decision": t.decision,
            "no_coverage": t.no_coverage(),
        });
        if a.explain {
            row["explanation"] = serde_json::to_value(explain(&x, &rb)?)?;
        }
        rows.push(row);
    }
    let truths: Vec<Class> = records.iter().map(|r| r.label).collect();
    let m = compute_metrics(&truths, &decisions)?;
    info!("accuracy against the CSV labels {:.2}", 100.0 * m.accuracy);

    let mut text = serde_json::to_string_pretty(&rows)?;
    text.push('\n');
    match &a.out {
        Some(path) => write_text(path, &text),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn metrics_row(scope: &str, m: &MetricsReport) -> Vec<String> {
    vec![
        scope.to_string(),
        m.total().to_string(),
        m.tp.to_string(),
        m.tn.to_string(),
        m.fp.to_string(),
        m.fn_.to_string(),
        format!("{:.4}", m.accuracy),
        format!("{:.4}", m.precision),
        format!("{:.4}", m.recall),
        format!("{:.4}", m.f1),
    ]
}

pub fn crossval(a: &CrossvalArgs) -> anyhow::Result<()> {
    let cfg = a.fit.config(a.rules);
    log_config(
        "crossval",
        json!({
            "features": a.input.features,
            "dataset": a.input.dataset,
            "group_by": a.group_by,
            "batch": cfg,
            "metrics_out": a.metrics_out,
            "predictions_out": a.predictions_out,
        }),
    );
    let records = load_features(&a.input)?;
    let cv = loocv(&records, &cfg, a.group_by)?;

    let mut scopes = vec![("all".to_string(), cv.report)];
    let present = datasets_in(&records);
    if present.len() > 1 {
        for d in present {
            if let Some(m) = cv.report_for(&records, d) {
                scopes.push((d.to_string(), m));
            }
        }
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} records, {} folds, {} rules, seed {}", records.len(), cv.folds, cfg.rules, cfg.seed)?;
    for (scope, m) in &scopes {
        writeln!(out, "\n[{scope}]\n{m}")?;
    }

    if let Some(path) = &a.metrics_out {
        write_atomic(path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["scope", "records", "tp", "tn", "fp", "fn", "accuracy", "precision", "recall", "f1"])?;
            for (scope, m) in &scopes {
                csv.write_record(metrics_row(scope, m))?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    if let Some(path) = &a.predictions_out {
        write_atomic(path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["row", "subject_id", "dataset", "label", "y", "predicted"])?;
            for p in &cv.predictions {
                let r = &records[p.index];
                csv.write_record([
                    p.index.to_string(),
                    r.subject_id.clone(),
                    r.dataset.to_string(),
                    p.truth.to_string(),
                    p.y.to_string(),
                    p.predicted.to_string(),
                ])?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

pub fn update(a: &UpdateArgs) -> anyhow::Result<()> {
    let cfg = a.config();
    log_config(
        "update",
        json!({
            "model": a.model,
            "features": a.input.features,
            "dataset": a.input.dataset,
            "online": cfg,
            "model_out": a.model_out,
            "changelog_out": a.changelog_out,
        }),
    );
    cfg.validate()?;
    let mut rb = load_model(&a.model)?;
    let records = load_features(&a.input)?;
    let before = rb.len();
    let mut log = String::new();
    let mut covered = 0;
    for (i, r) in records.iter().enumerate() {
        let x = rb.normalize(&r.values);
        match online_update(&mut rb, &x, r.label, &cfg)? {
            UpdateOutcome::RuleAdded { coverage, rule_index } => {
                let line = format!(
                    "row {i} sample {} ({}) S={coverage:.6e} added R{}",
                    r.subject_id,
                    r.label,
                    rule_index + 1
                );
                info!("{line}");
                log.push_str(&line);
                log.push('\n');
            }
            UpdateOutcome::MisclassifiedButCovered { .. } => covered += 1,
            UpdateOutcome::NoChange => {}
        }
    }
    info!(
        "rules {before} -> {}; {covered} misclassified samples were already covered",
        rb.len()
    );
    std::io::stdout().lock().write_all(log.as_bytes())?;
    write_atomic(&a.model_out, |w| Ok(rb.to_json_writer(w)?))?;
    if let Some(path) = &a.changelog_out {
        write_text(path, &log)?;
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let base = a.fit.config(a.min_rules);
    log_config(
        "sweep-rules",
        json!({
            "features": a.input.features,
            "dataset": a.input.dataset,
            "min_rules": a.min_rules,
            "max_rules": a.max_rules,
            "seeds": a.seeds,
            "group_by": a.group_by,
            "batch": base,
            "out": a.out,
            "long_out": a.long_out,
        }),
    );
    if a.min_rules == 0 || a.min_rules > a.max_rules {
        return Err(Error::Config(format!(
            "rule range {}..={} is empty or starts at 0",
            a.min_rules, a.max_rules
        ))
        .into());
    }
    let records = load_features(&a.input)?;
    let counts: Vec<usize> = (a.min_rules..=a.max_rules).collect();
    let res = sweep_rule_count(&records, &counts, a.seeds, &base, a.group_by)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "rules  mean_f1  std_f1")?;
    for r in &res.rows {
        let mark = if r.rules == res.recommended_rules { "  <- recommended" } else { "" };
        writeln!(out, "{:5}  {:7.2}  {:6.2}{mark}", r.rules, 100.0 * r.mean_f1, 100.0 * r.std_f1)?;
    }
    info!("recommended rule count {}", res.recommended_rules);
    if let Some(path) = &a.out {
        write_atomic(path, |w| Ok(res.write_summary_csv(w)?))?;
    }
    if let Some(path) = &a.long_out {
        write_atomic(path, |w| Ok(res.write_long_csv(w)?))?;
    }
    Ok(())
}

pub fn noise(a: &NoiseArgs) -> anyhow::Result<()> {
    let cfg = NoiseConfig {
        batch: a.fit.config(a.rules),
        noise_sigmas: a.noise.clone(),
        noise_seed: a.noise_seed,
        grouping: a.group_by,
    };
    log_config(
        "noise-exp",
        json!({
            "features": a.input.features,
            "dataset": a.input.dataset,
            "noise": cfg,
            "out": a.out,
        }),
    );
    let records = load_features(&a.input)?;
    let res = noise_experiment(&records, &cfg)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "noise  dataset  method  accuracy  precision  recall      f1")?;
    for r in &res.rows {
        let m = &r.metrics;
        writeln!(
            out,
            "{:5}  {:7}  {:6}  {:8.2}  {:9.2}  {:6.2}  {:6.2}",
            r.noise_sigma,
            r.dataset.map_or("all".to_string(), |d| d.to_string()),
            r.variant.to_string(),
            100.0 * m.accuracy,
            100.0 * m.precision,
            100.0 * m.recall,
            100.0 * m.f1
        )?;
    }
    if let Some(path) = &a.out {
        write_atomic(path, |w| Ok(res.write_csv(w)?))?;
    }
    Ok(())
}

pub fn export(a: &ExportArgs) -> anyhow::Result<()> {
    log_config(
        "export-rules",
        json!({
            "model": a.model,
            "sets_out": a.sets_out,
            "grid_out": a.grid_out,
            "samples": a.samples,
        }),
    );
    let rb = load_model(&a.model)?;
    if let Some(path) = &a.sets_out {
        let points = export_fuzzy_sets(&rb, a.samples)?;
        write_atomic(path, |w| Ok(write_fuzzy_sets_csv(w, &points)?))
            .with_context(|| "exporting fuzzy sets")?;
    }
    if let Some(path) = &a.grid_out {
        let rows = export_rule_grid(&rb);
        write_atomic(path, |w| Ok(write_rule_grid_csv(w, &rows)?))?;
    }
    Ok(())
}
