use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clinbias::bias::{records_table, score_lexicon, summarize, summary_table};
use clinbias::conflict::{classify, read_prevalence, verdicts_table, DEFAULT_THRESHOLD};
use clinbias::embed_io::SourceKind;
use clinbias::gender::gender_direction;
use clinbias::lexicon::{check_reference_counts, read_lexicon, read_templates};
use clinbias::reference;

use crate::config::{config_error, require_file, resolve, resolve_paths, ConfigFile};
use crate::inputs::{power_options, resolve_path, Inputs};
use crate::AuditArgs;

pub const MANIFEST: &str = "run_manifest.txt";

struct Settings {
    lexicon: Option<PathBuf>,
    templates: Option<PathBuf>,
    prevalence: Option<PathBuf>,
    threshold: f64,
    out: PathBuf,
}

fn settings(args: &AuditArgs, cfg: &ConfigFile) -> anyhow::Result<Settings> {
    let threshold = resolve(args.threshold, cfg, "threshold")?.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(config_error(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let out = resolve_path(args.out.clone(), cfg, "out")
        .ok_or_else(|| config_error("no output directory given (use --out)"))?;
    let s = Settings {
        lexicon: resolve_path(args.lexicon.clone(), cfg, "lexicon"),
        templates: resolve_path(args.templates.clone(), cfg, "templates"),
        prevalence: resolve_path(args.prevalence.clone(), cfg, "prevalence"),
        threshold,
        out,
    };
    // Every configured path must exist before any heavy loading starts.
    let pairs = resolve_path(args.store.pairs.clone(), cfg, "pairs");
    for (what, path) in [
        ("lexicon", &s.lexicon),
        ("templates", &s.templates),
        ("prevalence", &s.prevalence),
        ("pairs", &pairs),
    ] {
        if let Some(p) = path {
            require_file(what, p)?;
        }
    }
    for p in resolve_paths(&args.store.store, cfg, "store") {
        require_file("store", &p)?;
    }
    Ok(s)
}

pub fn run(args: &AuditArgs, cfg: &ConfigFile) -> anyhow::Result<()> {
    let s = settings(args, cfg)?;
    let opts = power_options(&args.store, cfg)?;
    let mut inputs = Inputs::default();

    let lexicon = inputs.table(
        "lexicon",
        s.lexicon.as_deref(),
        reference::LEXICON_CSV,
        |b: &[u8]| read_lexicon(b),
    )?;
    let prevalence = inputs.table(
        "prevalence",
        s.prevalence.as_deref(),
        reference::PREVALENCE_CSV,
        |b: &[u8]| read_prevalence(b),
    )?;
    let (pairs, pairs_path) = inputs.pairs(&args.store, cfg)?;
    let loaded = inputs.store(&args.store, cfg)?;
    let store = &loaded.store;

    let mut warnings = check_reference_counts(&lexicon);
    match store.source_kind() {
        SourceKind::Contextual => {
            let templates = inputs.table(
                "templates",
                s.templates.as_deref(),
                reference::TEMPLATES_TXT,
                |b| read_templates(b),
            )?;
            templates
                .check_gender_neutral(&pairs)
                .context("templates")?;
            for (category, _) in lexicon.categories() {
                if templates.get(category).is_none() {
                    warnings.push(format!("no template for category '{category}'"));
                }
            }
        }
        SourceKind::Static => {
            if s.templates.is_some() {
                warnings.push("templates are only used with contextual stores; ignored".into());
            }
        }
    }
    let gendered = lexicon.gendered_terms(&pairs);
    if !gendered.is_empty() {
        let names: Vec<&str> = gendered.iter().map(|t| t.term.as_str()).collect();
        warnings.push(format!(
            "{} lexicon terms contain a definitional gender word: {}",
            names.len(),
            names.join(", ")
        ));
    }

    let g = gender_direction(store, &pairs, &opts).context("deriving gender direction")?;
    let records = score_lexicon(store, &lexicon, &g).context("scoring lexicon")?;
    let reports = summarize(&records);
    let verdicts = classify(&records, &prevalence, s.threshold)?;

    fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;
    let summary = summary_table(&reports);
    write(
        &s.out,
        "bias_records.csv",
        &records_table(&records).to_csv(),
    )?;
    write(&s.out, "category_report.csv", &summary.to_csv())?;
    write(&s.out, "category_report.md", &summary.to_markdown())?;
    write(&s.out, "verdicts.csv", &verdicts_table(&verdicts).to_csv())?;

    let mut m = String::new();
    writeln!(m, "# clinbias run manifest").unwrap();
    writeln!(m, "# version: clinbias {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(
        m,
        "# replay: clinbias --config {} audit",
        s.out.join(MANIFEST).display()
    )
    .unwrap();
    for p in &loaded.paths {
        writeln!(m, "store = {}", p.display()).unwrap();
    }
    writeln!(m, "store_format = {}", loaded.format).unwrap();
    for (key, path) in [
        ("pairs", &pairs_path),
        ("lexicon", &s.lexicon),
        ("templates", &s.templates),
        ("prevalence", &s.prevalence),
    ] {
        match path {
            Some(p) => writeln!(m, "{key} = {}", p.display()).unwrap(),
            None => writeln!(m, "# {key}: built-in").unwrap(),
        }
    }
    writeln!(m, "threshold = {}", s.threshold).unwrap();
    writeln!(m, "seed = {}", opts.seed).unwrap();
    writeln!(m, "out = {}", s.out.display()).unwrap();
    for r in &inputs.records {
        let shown = r
            .path
            .as_ref()
            .map_or_else(|| "built-in".to_string(), |p| p.display().to_string());
        writeln!(m, "# input {} {} sha256={}", r.role, shown, r.sha256).unwrap();
    }

    let d = &g.diagnostics;
    let mut diag: Vec<(String, String)> = vec![
        ("store_kind".into(), store.source_kind().to_string()),
        ("dimension".into(), store.dimension().to_string()),
        ("entries".into(), store.len().to_string()),
        ("top_eigenvalue".into(), d.top_eigenvalue.to_string()),
        ("second_eigenvalue".into(), d.second_eigenvalue.to_string()),
        ("eigenvalue_ratio".into(), d.eigenvalue_ratio.to_string()),
        ("iterations".into(), d.iterations.to_string()),
        ("degenerate".into(), d.degenerate.to_string()),
        ("pairs_used".into(), pair_list(&d.pairs_used)),
        ("pairs_skipped".into(), pair_list(&d.pairs_skipped)),
    ];
    if let Some(p) = &d.pooling {
        diag.push(("pooling".into(), p.clone()));
    }
    for r in &reports {
        diag.push((
            format!("scored.{}", r.category),
            format!("{} of {}", r.n_scored, r.n_scored + r.n_skipped),
        ));
    }
    for w in d.warnings.iter().chain(&warnings) {
        diag.push(("warning".into(), w.clone()));
    }
    for (k, v) in &diag {
        writeln!(m, "# diagnostic {k}: {v}").unwrap();
    }
    write(&s.out, MANIFEST, &m)?;

    for w in d.warnings.iter().chain(&warnings) {
        eprintln!("warning: {w}");
    }
    eprint!("{}", summary.render(clinbias::table::Format::Markdown));
    Ok(())
}

fn pair_list(pairs: &[clinbias::GenderPair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{}/{}", p.female, p.male))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}
