use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use clinbias::bias::{records_table, score_lexicon, summarize, summary_table};
use clinbias::demographics::{
    chapter_distribution, crosstab, length_of_stay, summarize_categorical, ChapterMap, CohortTable,
};
use clinbias::embed_io::{load_store, save_word2vec_binary, save_word2vec_text, StoreFormat};
use clinbias::gender::gender_direction;
use clinbias::lexicon::{read_lexicon, read_templates, render_templates};
use clinbias::linalg::norm;
use clinbias::maskprob::{load_mask_ndjson, mask_report as build_mask_report, TokenSets};
use clinbias::reference;
use clinbias::table::{Format, Table};

use crate::config::{config_error, require_file, resolve, ConfigFile};
use crate::inputs::{infer_format, power_options, resolve_path, Inputs};
use crate::{
    ConvertArgs, DemographicsArgs, DirectBiasArgs, DirectionArgs, MaskArgs, OutputArgs, RenderArgs,
};

fn output_format(out: &OutputArgs, cfg: &ConfigFile) -> anyhow::Result<Format> {
    Ok(resolve(out.format, cfg, "format")?.unwrap_or(Format::Csv))
}

/// Writes rendered text to `--out`, or stdout when no path is set.
fn emit(out: &OutputArgs, cfg: &ConfigFile, text: &str) -> anyhow::Result<()> {
    match resolve_path(out.out.clone(), cfg, "out") {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn render_all(tables: &[Table], format: Format) -> String {
    tables
        .iter()
        .map(|t| t.render(format))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn gender_direction_cmd(args: &DirectionArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    let mut inputs = Inputs::default();
    let (pairs, _) = inputs.pairs(&args.store, cfg)?;
    let loaded = inputs.store(&args.store, cfg)?;
    let g = gender_direction(&loaded.store, &pairs, &power_options(&args.store, cfg)?)
        .context("deriving gender direction")?;
    let d = &g.diagnostics;

    let mut t = Table::new(["component", "value"]);
    t.preamble = vec![
        format!("norm: {:.12}", norm(g.as_slice())),
        format!("top_eigenvalue: {}", d.top_eigenvalue),
        format!("second_eigenvalue: {}", d.second_eigenvalue),
        format!("eigenvalue_ratio: {}", d.eigenvalue_ratio),
        format!("iterations: {}", d.iterations),
        format!("pairs_used: {}", d.pairs_used.len()),
        format!("pairs_skipped: {}", d.pairs_skipped.len()),
    ];
    t.preamble
        .extend(d.warnings.iter().map(|w| format!("warning: {w}")));
    for (i, x) in g.as_slice().iter().enumerate() {
        t.push_row([i.to_string(), x.to_string()]);
    }
    eprintln!(
        "norm = {:.12}, eigenvalue ratio = {:.6}, {} of {} pairs used",
        norm(g.as_slice()),
        d.eigenvalue_ratio,
        d.pairs_used.len(),
        pairs.len()
    );
    emit(
        &args.output,
        cfg,
        &t.render(output_format(&args.output, cfg)?),
    )
}

pub fn direct_bias(args: &DirectBiasArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    let mut inputs = Inputs::default();
    let lexicon_path = resolve_path(args.lexicon.clone(), cfg, "lexicon");
    let lexicon = inputs.table(
        "lexicon",
        lexicon_path.as_deref(),
        reference::LEXICON_CSV,
        |b: &[u8]| read_lexicon(b),
    )?;
    let (pairs, _) = inputs.pairs(&args.store, cfg)?;
    let loaded = inputs.store(&args.store, cfg)?;
    let g = gender_direction(&loaded.store, &pairs, &power_options(&args.store, cfg)?)
        .context("deriving gender direction")?;
    let records = score_lexicon(&loaded.store, &lexicon, &g).context("scoring lexicon")?;
    let format = output_format(&args.output, cfg)?;
    if let Some(path) = &args.records {
        fs::write(path, records_table(&records).render(format))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    emit(
        &args.output,
        cfg,
        &summary_table(&summarize(&records)).render(format),
    )
}

pub fn mask_report(args: &MaskArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    require_file("mask input", &args.input)?;
    if args.k == 0 {
        return Err(config_error("k must be at least 1"));
    }
    let results = load_mask_ndjson(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let defaults = TokenSets::default();
    let female: Vec<String> = args
        .female_tokens
        .clone()
        .unwrap_or_else(|| defaults.female().iter().cloned().collect());
    let male: Vec<String> = args
        .male_tokens
        .clone()
        .unwrap_or_else(|| defaults.male().iter().cloned().collect());
    let sets = TokenSets::new(female, male).map_err(|e| config_error(e.to_string()))?;
    let report = build_mask_report(&results, &sets, args.k);
    emit(
        &args.output,
        cfg,
        &report.table().render(output_format(&args.output, cfg)?),
    )
}

fn split_pair<'a>(flag: &str, value: &'a str) -> anyhow::Result<(&'a str, &'a str)> {
    value
        .split_once(',')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| {
            config_error(format!(
                "--{flag} expects two comma-separated columns, got '{value}'"
            ))
        })
}

pub fn demographics(args: &DemographicsArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    require_file("cohort", &args.input)?;
    if let Some(p) = &args.chapter_map {
        require_file("chapter map", p)?;
    }
    let mut cohort = CohortTable::load(&args.input, &args.key)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if let Some(missing) = &args.missing {
        cohort = cohort.with_missing(missing);
    }

    let mut tables = Vec::new();
    for column in &args.columns {
        tables.push(summarize_categorical(&cohort, column)?.table(args.decimals));
    }
    for spec in &args.crosstab {
        let (row, col) = split_pair("crosstab", spec)?;
        tables.push(crosstab(&cohort, row, col)?.table(args.decimals));
    }
    if let Some(code_col) = &args.code_column {
        let mut inputs = Inputs::default();
        let map = inputs.table(
            "chapter map",
            args.chapter_map.as_deref(),
            reference::ICD9_CHAPTERS_CSV,
            |b: &[u8]| ChapterMap::read(b),
        )?;
        let dist = chapter_distribution(&cohort, code_col, args.admission_column.as_deref(), &map)?;
        tables.push(dist.table(args.decimals));
    }
    if let Some(spec) = &args.stay {
        let (admit, discharge) = split_pair("stay", spec)?;
        let stay = length_of_stay(&cohort, admit, discharge)?;
        for w in stay.warnings() {
            eprintln!("warning: {w}");
        }
        tables.push(stay.table());
    }
    if tables.is_empty() {
        return Err(config_error(
            "nothing to report: give --column, --crosstab, --code-column or --stay",
        ));
    }
    emit(
        &args.output,
        cfg,
        &render_all(&tables, output_format(&args.output, cfg)?),
    )
}

pub fn convert(args: &ConvertArgs) -> anyhow::Result<()> {
    require_file("input", &args.input)?;
    let from = args.from.unwrap_or_else(|| infer_format(&args.input));
    let store = load_store(&args.input, from)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let out: &Path = &args.output;
    match args.to {
        StoreFormat::Word2VecText => save_word2vec_text(&store, out),
        StoreFormat::Word2VecBinary => save_word2vec_binary(&store, out),
        StoreFormat::ContextualNdjson => {
            return Err(config_error(
                "conversion to ndjson is not supported; contextual files come from the extractor",
            ))
        }
    }
    .with_context(|| format!("writing {}", out.display()))?;
    eprintln!("{} entries, dimension {}", store.len(), store.dimension());
    Ok(())
}

pub fn render_templates_cmd(args: &RenderArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    let mut inputs = Inputs::default();
    let lexicon_path = resolve_path(args.lexicon.clone(), cfg, "lexicon");
    let templates_path = resolve_path(args.templates.clone(), cfg, "templates");
    let lexicon = inputs.table(
        "lexicon",
        lexicon_path.as_deref(),
        reference::LEXICON_CSV,
        |b: &[u8]| read_lexicon(b),
    )?;
    let templates = inputs.table(
        "templates",
        templates_path.as_deref(),
        reference::TEMPLATES_TXT,
        |b| read_templates(b),
    )?;
    let mut text = String::new();
    for s in render_templates(&lexicon, &templates)? {
        text.push_str(&serde_json::to_string(&s)?);
        text.push('\n');
    }
    let out = OutputArgs {
        out: args.out.clone(),
        format: None,
    };
    emit(&out, cfg, &text)
}
