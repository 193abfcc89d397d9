use std::fs;
use std::path::{Path, PathBuf};

use lsem_core::analysis::{
    attribute_correlation, boundary_correlation, identity_discrepancy, layerwise_rescoring,
    rescoring_matrix, RescoringOptions,
};
use lsem_core::concentration::{self, MonteCarlo};
use lsem_core::geometry;
use lsem_core::io::{self, LatentLayout, ScoreTable};
use lsem_core::oracle::{
    self, IdentityExtractor, LayerGroupMap, LayeredOracle, ModelSpec, Scorer, SemanticModel,
};
use lsem_core::rng::seeded_rng;
use lsem_core::trainer::{self, TrainerConfig};
use lsem_core::{Boundary, LatentCode, ScoredSet, Space};
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::provenance::{write_sidecar, Envelope, Provenance};
use crate::reports::*;

fn read_codes(path: &Path) -> CliResult<(LatentLayout, Vec<LatentCode>)> {
    CliError::check_readable(path)?;
    Ok(io::read_latents_file_with_layout(path)?)
}

fn non_empty(path: &Path, codes: &[LatentCode]) -> CliResult<()> {
    if codes.is_empty() {
        return Err(CliError::Input { path: path.display().to_string(), message: "file holds no codes".into() });
    }
    Ok(())
}

fn read_model(path: &Path) -> CliResult<(ModelSpec, SemanticModel)> {
    CliError::check_readable(path)?;
    let text = fs::read_to_string(path)?;
    let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: format!("invalid model description: {e}"),
    })?;
    let built = spec.build()?;
    for w in &built.warnings {
        log::warn!("{}: {w:?}", path.display());
    }
    Ok((spec, built.model))
}

fn group_map(spec: &ModelSpec, model: &SemanticModel, layers: usize) -> CliResult<LayerGroupMap> {
    Ok(match &spec.layer_groups {
        Some(g) => LayerGroupMap::from_spec(g)?,
        None => LayerGroupMap::single(layers, model.attributes())?,
    })
}

fn read_boundaries(paths: &[PathBuf]) -> CliResult<Vec<Boundary>> {
    paths.iter().map(|p| read_boundary(p)).collect()
}

fn read_boundary(path: &Path) -> CliResult<Boundary> {
    CliError::check_readable(path)?;
    Ok(io::read_boundary_file(path)?)
}

fn scored_set(codes_path: &Path, scores_path: &Path) -> CliResult<ScoredSet> {
    let (_, codes) = read_codes(codes_path)?;
    CliError::check_readable(scores_path)?;
    let table = io::read_scores_file(scores_path)?;
    Ok(ScoredSet::from_parts(table.attributes, codes, table.rows)?)
}

/// Applies `alpha·n` to every code; layered codes are edited on `layers`
/// (all layers when `None`).
fn edit_codes(
    codes: &[LatentCode],
    b: &Boundary,
    alpha: f64,
    layers: Option<&[usize]>,
) -> CliResult<Vec<LatentCode>> {
    codes
        .iter()
        .map(|z| {
            Ok(match (z.space(), layers) {
                (Space::WPlus, Some(set)) => geometry::edit_layered(z, b, alpha, set)?,
                (Space::WPlus, None) => {
                    let all: Vec<usize> = (0..z.layers()).collect();
                    geometry::edit_layered(z, b, alpha, &all)?
                }
                (_, Some(_)) => {
                    return Err(CliError::usage("--layers only applies to WPlus codes"));
                }
                _ => geometry::edit(z, b, alpha)?,
            })
        })
        .collect()
}

/// Parses `0-1,8-17,5` into sorted unique layer indices.
pub fn parse_layers(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::usage(format!("invalid layer list '{spec}'"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn sample(a: &SampleArgs) -> CliResult<()> {
    let space = Space::from(a.space);
    if space == Space::W {
        return Err(lsem_core::Error::Unsupported(
            "W codes come from a generator's mapping network; only Z and WPlus can be sampled".into(),
        )
        .into());
    }
    if a.count == 0 || a.dim == 0 || a.layers == 0 {
        return Err(CliError::usage("--dim, --count and --layers must be >= 1"));
    }
    let mc = MonteCarlo::new(a.count, a.seed).with_chunk_size(a.chunk_size);
    let mut codes = concentration::sample_gaussian(a.dim, &mc)?;
    if space == Space::WPlus {
        codes = codes
            .iter()
            .map(|z| LatentCode::broadcast(a.layers, z.values()))
            .collect::<Result<_, _>>()?;
    }
    io::write_latents_file(&a.out, &codes)?;
    let layers = if space == Space::WPlus { a.layers } else { 1 };
    let prov = Provenance::new("sample", Some(a.seed), a);
    write_sidecar(
        &a.out,
        "latents",
        &prov,
        json!({"space": space, "dim": a.dim, "layers": layers, "count": a.count}),
    )?;
    log::info!("wrote {} {space} codes of dim {} to {}", a.count, a.dim, a.out.display());
    Ok(())
}

pub fn oracle_score(a: &OracleScoreArgs) -> CliResult<()> {
    let (spec, model) = read_model(&a.model)?;
    let (layout, codes) = read_codes(&a.input)?;
    if layout.dim != model.dim() {
        return Err(lsem_core::Error::DimMismatch { expected: model.dim(), actual: layout.dim }.into());
    }
    let mut rng = seeded_rng(a.seed);
    let rows = if layout.space == Space::WPlus {
        let map = group_map(&spec, &model, layout.layers)?;
        codes
            .iter()
            .map(|z| oracle::layered_score(&model, z, &map, &mut rng))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        codes.iter().map(|z| oracle::score(&model, z, &mut rng)).collect::<Result<Vec<_>, _>>()?
    };
    let table = ScoreTable::new(model.attributes().to_vec(), rows)?;
    io::write_scores_file(&a.out, &table)?;
    let prov = Provenance::new("oracle-score", Some(a.seed), &json!({"args": a, "model": spec}));
    write_sidecar(&a.out, "scores", &prov, json!({"attributes": model.attributes(), "count": table.len()}))?;

    if let Some(dir) = &a.emit_truth {
        fs::create_dir_all(dir)?;
        for b in model.boundaries(layout.space) {
            let path = dir.join(format!("{}.json", b.attribute()));
            io::write_boundary_file(&path, &b, Some(json!({"provenance": prov, "source": "oracle"})))?;
        }
    }
    Ok(())
}

fn trainer_config(split: &SplitArgs) -> TrainerConfig {
    TrainerConfig {
        candidate_fraction: split.candidate_fraction,
        val_fraction: split.val_fraction,
        seed: split.seed,
        ..TrainerConfig::default()
    }
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let set = scored_set(&a.input, &a.scores)?;
    let cfg = TrainerConfig {
        regularization: a.regularization,
        epochs: a.epochs,
        fit_bias: a.fit_bias,
        ..trainer_config(&a.split)
    };
    let t = trainer::train_boundary(&set, &a.attribute, &cfg, a.split.threshold)?;
    let prov = Provenance::new("train", Some(a.split.seed), a);
    io::write_boundary_file(&a.out, &t.boundary, Some(serde_json::to_value(&prov)?))?;
    log::info!(
        "{}: val accuracy {:.4}, lambda {:.4}",
        a.attribute,
        t.report.val_accuracy,
        t.lambda.slope.abs()
    );
    if let Some(path) = &a.report {
        let report = TrainingReport {
            attribute: a.attribute.clone(),
            accuracy: t.report.clone(),
            lambda: t.lambda.slope.abs(),
            flipped: t.lambda.needs_flip(),
            n_positives: t.candidates.positives.len(),
            n_negatives: t.candidates.negatives.len(),
        };
        Envelope::new(KIND_TRAINING, prov, &report)?.emit(Some(path))?;
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let b = read_boundary(&a.boundary)?;
    let set = scored_set(&a.input, &a.scores)?;
    let attribute = a.attribute.clone().unwrap_or_else(|| b.attribute().to_string());
    let cfg = trainer_config(&a.split);
    cfg.validate()?;
    let candidates = trainer::select_candidates(&set, &attribute, &cfg)?;
    let (train, val) = trainer::split_train_val(&set, &attribute, &candidates, &cfg)?;
    let full = trainer::remaining_set(&set, &attribute, &candidates, a.split.threshold)?;
    let full = (!full.is_empty()).then_some(full);
    let mut accuracy = trainer::evaluate_boundary(&b, &val, full.as_ref(), train.len())?;
    accuracy.train_accuracy = Some(trainer::accuracy(&b, &train)?);
    let cosine_to_truth = match &a.truth {
        Some(p) => Some(geometry::boundary_cosine(&b, &read_boundary(p)?)?),
        None => None,
    };
    let report = EvaluationReport { attribute, accuracy, cosine_to_truth };
    let prov = Provenance::new("eval", Some(a.split.seed), a);
    Envelope::new(KIND_EVALUATION, prov, &report)?.emit(a.out.as_deref())
}

pub fn edit(a: &EditArgs) -> CliResult<()> {
    let (layout, codes) = read_codes(&a.input)?;
    let primal = read_boundary(&a.boundary)?;
    let conditions = read_boundaries(&a.conditions)?;
    let direction = geometry::project_conditional(&primal, &conditions)?;
    let layers = a.layers.as_deref().map(parse_layers).transpose()?;
    let edited = edit_codes(&codes, &direction, a.alpha, layers.as_deref())?;
    io::write_latents_file_as(&a.out, &layout, &edited)?;
    let prov = Provenance::new("edit", None, &json!({"args": a, "direction": direction.normal()}));
    write_sidecar(
        &a.out,
        "latents",
        &prov,
        json!({
            "space": layout.space,
            "dim": layout.dim,
            "layers": layout.layers,
            "count": edited.len(),
            "boundary": primal.attribute(),
            "conditions": conditions.iter().map(|c| c.attribute()).collect::<Vec<_>>(),
            "alpha": a.alpha,
        }),
    )?;
    Ok(())
}

pub fn project(a: &ProjectArgs) -> CliResult<()> {
    let primal = read_boundary(&a.boundary)?;
    let conditions = read_boundaries(&a.conditions)?;
    let projected = geometry::project_conditional(&primal, &conditions)?;
    let cos = geometry::boundary_cosine(&primal, &projected)?;
    log::info!("{}: cosine to the unconditioned normal {cos:.6}", primal.attribute());
    let prov = Provenance::new(
        "project",
        None,
        &json!({
            "primal": primal.normal(),
            "conditions": conditions.iter().map(|c| c.normal()).collect::<Vec<_>>(),
        }),
    );
    let meta = json!({
        "provenance": prov,
        "conditions": conditions.iter().map(|c| c.attribute()).collect::<Vec<_>>(),
    });
    io::write_boundary_file(&a.out, &projected, Some(meta))?;
    Ok(())
}

/// Scorer matching the layout of the codes: the flat model for `Z`, the
/// layered oracle for `WPlus`.
fn scorer_for(spec: &ModelSpec, model: &SemanticModel, layout: &LatentLayout) -> CliResult<Box<dyn Scorer>> {
    if layout.dim != model.dim() {
        return Err(lsem_core::Error::DimMismatch { expected: model.dim(), actual: layout.dim }.into());
    }
    Ok(match layout.space {
        Space::WPlus => {
            Box::new(LayeredOracle::new(model.clone(), group_map(spec, model, layout.layers)?)?)
        }
        _ => Box::new(model.clone()),
    })
}

fn boundaries_or_truth(paths: &[PathBuf], model: &SemanticModel, space: Space) -> CliResult<Vec<Boundary>> {
    if paths.is_empty() {
        Ok(model.boundaries(space))
    } else {
        read_boundaries(paths)
    }
}

pub fn rescore(a: &RescoreArgs) -> CliResult<()> {
    let (spec, model) = read_model(&a.model)?;
    let (layout, codes) = read_codes(&a.input)?;
    non_empty(&a.input, &codes)?;
    let scorer = scorer_for(&spec, &model, &layout)?;
    let boundaries = boundaries_or_truth(&a.boundaries, &model, layout.space)?;
    let opts = RescoringOptions { sigmoid: a.sigmoid };
    let matrix = if layout.space == Space::WPlus {
        rescoring_layered(scorer.as_ref(), &boundaries, &codes, a.alpha, opts)?
    } else {
        rescoring_matrix(scorer.as_ref(), &boundaries, &codes, a.alpha, opts)?
    };
    let prov = Provenance::new("rescore", None, &json!({"args": a, "model": spec}));
    Envelope::new(KIND_RESCORING, prov, &matrix)?.emit(a.out.as_deref())
}

/// Re-scoring for layered codes edits every layer at once.
fn rescoring_layered(
    scorer: &dyn Scorer,
    boundaries: &[Boundary],
    codes: &[LatentCode],
    alpha: f64,
    opts: RescoringOptions,
) -> CliResult<lsem_core::analysis::RescoringMatrix> {
    let mut values = Vec::with_capacity(boundaries.len());
    for b in boundaries {
        let edited = edit_codes(codes, b, alpha, None)?;
        let mut acc = vec![0.0; scorer.attributes().len()];
        for (z, e) in codes.iter().zip(&edited) {
            let (mut before, mut after) = (scorer.score(z)?, scorer.score(e)?);
            if opts.sigmoid {
                for v in before.iter_mut().chain(after.iter_mut()) {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            for (k, v) in acc.iter_mut().enumerate() {
                *v += after[k] - before[k];
            }
        }
        values.push(acc.into_iter().map(|v| v / codes.len() as f64).collect());
    }
    Ok(lsem_core::analysis::RescoringMatrix {
        manipulated: boundaries.iter().map(|b| b.attribute().to_string()).collect(),
        measured: scorer.attributes().to_vec(),
        values,
        alpha,
        n_codes: codes.len(),
        aggregation: "mean".into(),
        sigmoid: opts.sigmoid,
    })
}

pub fn correlate(a: &CorrelateArgs) -> CliResult<()> {
    let (report, config) = match &a.scores {
        Some(path) => {
            CliError::check_readable(path)?;
            let table = io::read_scores_file(path)?;
            let m = attribute_correlation(&table)?;
            let r = CorrelationReport { source: "scores".into(), attributes: m.attributes, values: m.values };
            (r, json!({"source": "scores", "rows": table.len()}))
        }
        None => {
            if a.boundaries.len() < 2 {
                return Err(CliError::usage("--boundaries needs at least two files"));
            }
            let bs = read_boundaries(&a.boundaries)?;
            let m = boundary_correlation(&bs)?;
            let normals: Vec<&[f64]> = bs.iter().map(Boundary::normal).collect();
            let r = CorrelationReport { source: "boundaries".into(), attributes: m.attributes, values: m.values };
            (r, json!({"source": "boundaries", "normals": normals}))
        }
    };
    let prov = Provenance::new("correlate", None, &config);
    Envelope::new(KIND_CORRELATION, prov, &report)?.emit(a.out.as_deref())
}

pub fn layerwise(a: &LayerwiseArgs) -> CliResult<()> {
    let (spec, model) = read_model(&a.model)?;
    let groups = spec.layer_groups.as_ref().ok_or_else(|| CliError::Input {
        path: a.model.display().to_string(),
        message: "model description has no layer_groups".into(),
    })?;
    let map = LayerGroupMap::from_spec(groups)?;
    let (layout, codes) = read_codes(&a.input)?;
    non_empty(&a.input, &codes)?;
    if layout.space != Space::WPlus {
        return Err(lsem_core::Error::SpaceMismatch {
            expected: Space::WPlus.to_string(),
            actual: layout.space.to_string(),
        }
        .into());
    }
    let oracle = LayeredOracle::new(model.clone(), map.clone())?;
    let boundaries = boundaries_or_truth(&a.boundaries, &model, Space::WPlus)?;
    let table = layerwise_rescoring(&oracle, &boundaries, &codes, a.alpha, &map)?;
    let prov = Provenance::new("layerwise", None, &json!({"args": a, "model": spec}));
    Envelope::new(KIND_LAYERWISE, prov, &table)?.emit(a.out.as_deref())
}

pub fn identity(a: &IdentityArgs) -> CliResult<()> {
    let (layout, codes) = read_codes(&a.input)?;
    non_empty(&a.input, &codes)?;
    let b = read_boundary(&a.boundary)?;
    let extractor = IdentityExtractor::new(layout.layers * layout.dim, a.seed)?;
    let discrepancy = a
        .alphas
        .iter()
        .map(|&alpha| {
            let edited = edit_codes(&codes, &b, alpha, None)?;
            Ok(identity_discrepancy(&extractor, &codes, &edited)?)
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..a.alphas.len()).collect();
    order.sort_by(|&i, &j| a.alphas[i].abs().total_cmp(&a.alphas[j].abs()));
    let nondecreasing = order.windows(2).all(|w| discrepancy[w[0]] <= discrepancy[w[1]]);
    let report = IdentityReport {
        attribute: b.attribute().to_string(),
        alphas: a.alphas.clone(),
        discrepancy,
        n_codes: codes.len(),
        extractor_seed: a.seed,
        nondecreasing,
    };
    let prov = Provenance::new("identity", Some(a.seed), &json!({"args": a, "normal": b.normal()}));
    Envelope::new(KIND_IDENTITY, prov, &report)?.emit(a.out.as_deref())
}

pub fn verify(v: &VerifyCommand) -> CliResult<()> {
    let m = v.mc();
    let mc = MonteCarlo::new(m.samples, m.seed).with_chunk_size(m.chunk_size);
    let report = match v {
        VerifyCommand::Tail { threshold, .. } => concentration::tail_probability(m.dim, *threshold, &mc)?,
        VerifyCommand::Property2 { alpha, .. } => concentration::check_property2(m.dim, *alpha, &mc)?,
        VerifyCommand::Annulus { beta, .. } => concentration::check_annulus(m.dim, *beta, &mc)?,
        VerifyCommand::SphereCap { alpha, .. } => concentration::check_sphere_cap(m.dim, *alpha, &mc)?,
        VerifyCommand::Ks { .. } => concentration::ks_projection(m.dim, &mc)?,
    };
    if !report.passed {
        log::warn!("{:?} check did not pass", report.statistic);
    }
    let prov = Provenance::new("verify", Some(m.seed), v);
    Envelope::new(KIND_CONCENTRATION, prov, &report)?.emit(m.out.as_deref())
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    if a.inputs.is_empty() {
        return Err(CliError::usage("report needs at least one input file"));
    }
    let mut parsed = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        CliError::check_readable(path)?;
        let text = fs::read_to_string(path)?;
        parsed.push((path.display().to_string(), parse(&path.display().to_string(), &text)?));
    }
    let mut out = String::new();
    for (path, p) in &parsed {
        if parsed.len() > 1 {
            out.push_str(&format!("== {path} ==\n"));
        }
        out.push_str(&p.render());
    }
    print!("{out}");

    if let Some(csv_path) = &a.csv {
        let mut csv = String::from("file,kind,row,column,value\n");
        for (path, p) in &parsed {
            for c in p.cells() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    quote(path),
                    p.kind(),
                    quote(&c.row),
                    quote(&c.column),
                    c.value
                ));
            }
        }
        fs::write(csv_path, csv)?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_lists_parse() {
        assert_eq!(parse_layers("0-1,8-10").unwrap(), vec![0, 1, 8, 9, 10]);
        assert_eq!(parse_layers("3,2,3").unwrap(), vec![2, 3]);
        assert!(parse_layers("5-2").is_err());
        assert!(parse_layers("x").is_err());
        assert!(parse_layers("").is_err());
    }

    #[test]
    fn quoting_escapes_commas() {
        assert_eq!(quote("a,b"), "\"a,b\"");
        assert_eq!(quote("plain"), "plain");
    }
}
