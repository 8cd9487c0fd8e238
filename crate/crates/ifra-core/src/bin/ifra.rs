//! Command-line front end: the pipeline as composable, seeded, file-based
//! subcommands. Every output file gets a `<file>.manifest.json` recording
//! inputs, configuration, and the master seed, so runs reproduce byte for
//! byte.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ifra_core::augment::{augment_fallers, AugmentationConfig};
use ifra_core::catalog::{load_catalog, FeatureCatalog};
use ifra_core::dataset::{
    load_dataset, make_splits, save_dataset, Dataset, Split, SplitPlan,
};
use ifra_core::demo::{run_demo, DemoConfig};
use ifra_core::error::Error;
use ifra_core::evaluation::{compare_scales, comparison_markdown, evaluate_scale};
use ifra_core::manifest::RunManifest;
use ifra_core::scale::{assess, derive_scale, load_scales, save_scale, RiskScale};
use ifra_core::selection::{
    run_selection, FeatureKindFilter, SelectionConfig, SelectionDenominator, SelectionReport,
};
use ifra_core::svm::SvmConfig;
use indexmap::IndexMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ifra",
    version,
    about = "Derive, apply, and evaluate three-stratum fall-risk assessment scales from ITUG features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a cohort CSV; report composition and exclusions.
    Ingest(IngestArgs),
    /// Append Gaussian-perturbed synthetic fallers to the training split.
    Augment(AugmentArgs),
    /// Reassign splits by seeded stratified sampling.
    MakeSplits(MakeSplitsArgs),
    /// Run the SVM-gated subsampled feature-selection loop.
    Select(SelectArgs),
    /// Derive tertile thresholds for the selected features.
    Derive(DeriveArgs),
    /// Stratify subjects with a scale; one JSON line per subject.
    Assess(AssessArgs),
    /// Evaluate one scale against faller outcomes with the exact test.
    Evaluate(EvaluateArgs),
    /// Evaluate several scales side by side.
    Compare(CompareArgs),
    /// Generate a synthetic cohort and run the full pipeline end to end.
    Demo(DemoArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Cohort CSV.
    #[arg(long)]
    data: PathBuf,
    /// Feature catalog JSON.
    #[arg(long)]
    catalog: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Re-emit the normalized CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Synthetic fallers to append.
    #[arg(long, default_value_t = 15)]
    count: usize,
    /// Noise sigma as a multiple of each feature's faller std.
    #[arg(long, default_value_t = 0.1)]
    noise_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MakeSplitsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    validation_fallers: usize,
    #[arg(long, default_value_t = 12)]
    validation_non_fallers: usize,
    #[arg(long, default_value_t = 10)]
    test_fallers: usize,
    #[arg(long, default_value_t = 22)]
    test_non_fallers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindFilterArg {
    Itug,
    Clinical,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenominatorArg {
    /// Iterations that cleared the accuracy gate.
    Gated,
    /// All iterations run.
    Total,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Validation accuracy the per-subset SVM must reach (inclusive).
    #[arg(long, default_value_t = 0.80)]
    accuracy_gate: f64,
    /// Significance level for normality and comparison tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Minimum selection percentage for a feature to be selected.
    #[arg(long, default_value_t = 0.50)]
    relevance_threshold: f64,
    #[arg(long, value_enum, default_value_t = KindFilterArg::Itug)]
    feature_kind: KindFilterArg,
    #[arg(long, value_enum, default_value_t = DenominatorArg::Gated)]
    denominator: DenominatorArg,
    /// SVM soft-margin constant.
    #[arg(long, default_value_t = 1.0)]
    svm_c: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DeriveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Selection report JSON produced by `select`.
    #[arg(long)]
    report: PathBuf,
    /// Name recorded on the derived scale.
    #[arg(long, default_value = "derived")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
    All,
}

impl SplitArg {
    fn filter(self, dataset: &Dataset) -> Vec<&ifra_core::dataset::SubjectRecord> {
        match self {
            SplitArg::Train => dataset.subjects_in(Split::Train),
            SplitArg::Validation => dataset.subjects_in(Split::Validation),
            SplitArg::Test => dataset.subjects_in(Split::Test),
            SplitArg::All => dataset.subjects().iter().collect(),
        }
    }
}

#[derive(Args)]
struct AssessArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scale JSON (single scale).
    #[arg(long)]
    scale: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    split: SplitArg,
    /// Output JSONL; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    scale: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scale JSON file(s); each may hold one scale or an array.
    #[arg(long = "scale", required = true)]
    scales: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// JSON report array output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Markdown comparison table output.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 20)]
    features: usize,
    #[arg(long, default_value_t = 3)]
    planted: usize,
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    #[arg(long, default_value_t = 15)]
    count: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_scale: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write the full pipeline outcome here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through this same path.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> ifra_core::Result<()> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Augment(args) => cmd_augment(args),
        Command::MakeSplits(args) => cmd_make_splits(args),
        Command::Select(args) => cmd_select(args),
        Command::Derive(args) => cmd_derive(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Demo(args) => cmd_demo(args),
    }
}

fn load_inputs(args: &DataArgs) -> ifra_core::Result<(FeatureCatalog, Dataset)> {
    let catalog = load_catalog(&args.catalog)?;
    let (dataset, log) = load_dataset(&args.data, &catalog)?;
    for row in &log.excluded {
        eprintln!(
            "excluded line {} (subject {}): {}",
            row.line, row.subject_id, row.reason
        );
    }
    Ok((catalog, dataset))
}

fn load_one_scale(path: &Path) -> ifra_core::Result<RiskScale> {
    let mut scales = load_scales(path)?;
    if scales.len() != 1 {
        return Err(Error::Scale(format!(
            "{}: expected a single scale, found {}",
            path.display(),
            scales.len()
        )));
    }
    Ok(scales.remove(0))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> ifra_core::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> ifra_core::Result<()> {
    let catalog = load_catalog(&args.data.catalog)?;
    let (dataset, log) = load_dataset(&args.data.data, &catalog)?;
    let summary = serde_json::json!({
        "subjects": dataset.len(),
        "excluded": log.excluded,
        "splits": dataset.split_summary().to_json(),
        "direction_warnings": dataset.direction_lint(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(out) = args.out {
        save_dataset(&dataset, &out)?;
        let mut manifest = RunManifest::new("ingest", None, serde_json::json!({}));
        manifest.add_input(&args.data.catalog)?;
        manifest.add_input(&args.data.data)?;
        manifest.add_output(&out);
        manifest.write_alongside(&out)?;
    }
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let config = AugmentationConfig {
        count: args.count,
        noise_scale: args.noise_scale,
        seed: args.seed,
    };
    let augmented = augment_fallers(&dataset, &config)?;
    save_dataset(&augmented, &args.out)?;
    let mut manifest = RunManifest::new("augment", Some(args.seed), serde_json::to_value(config)?);
    manifest.add_input(&args.data.catalog)?;
    manifest.add_input(&args.data.data)?;
    manifest.add_output(&args.out);
    manifest.write_alongside(&args.out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&augmented.split_summary().to_json())?
    );
    Ok(())
}

fn cmd_make_splits(args: MakeSplitsArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let plan = SplitPlan {
        validation_fallers: args.validation_fallers,
        validation_non_fallers: args.validation_non_fallers,
        test_fallers: args.test_fallers,
        test_non_fallers: args.test_non_fallers,
    };
    let split = make_splits(&dataset, &plan, args.seed)?;
    save_dataset(&split, &args.out)?;
    let mut manifest = RunManifest::new("make-splits", Some(args.seed), serde_json::to_value(plan)?);
    manifest.add_input(&args.data.catalog)?;
    manifest.add_input(&args.data.data)?;
    manifest.add_output(&args.out);
    manifest.write_alongside(&args.out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&split.split_summary().to_json())?
    );
    Ok(())
}

fn cmd_select(args: SelectArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let config = SelectionConfig {
        iterations: args.iterations,
        accuracy_gate: args.accuracy_gate,
        alpha: args.alpha,
        relevance_fraction: args.relevance_threshold,
        seed: args.seed,
        feature_kind: match args.feature_kind {
            KindFilterArg::Itug => FeatureKindFilter::Itug,
            KindFilterArg::Clinical => FeatureKindFilter::Clinical,
            KindFilterArg::All => FeatureKindFilter::All,
        },
        denominator: match args.denominator {
            DenominatorArg::Gated => SelectionDenominator::GatedIterations,
            DenominatorArg::Total => SelectionDenominator::TotalIterations,
        },
    };
    let svm_config = SvmConfig {
        c: args.svm_c,
        ..SvmConfig::default()
    };
    let report = run_selection(&dataset, &svm_config, &config)?;
    write_json(&args.out, &report)?;
    let mut manifest = RunManifest::new(
        "select",
        Some(args.seed),
        serde_json::json!({"selection": config, "svm": svm_config}),
    );
    manifest.add_input(&args.data.catalog)?;
    manifest.add_input(&args.data.data)?;
    manifest.add_output(&args.out);
    manifest.write_alongside(&args.out)?;
    eprintln!(
        "{} of {} iterations passed the gate; {} features selected",
        report.iterations_passed_gate,
        report.iterations_run,
        report.selected.len()
    );
    Ok(())
}

fn cmd_derive(args: DeriveArgs) -> ifra_core::Result<()> {
    let (catalog, dataset) = load_inputs(&args.data)?;
    let report: SelectionReport = serde_json::from_str(&std::fs::read_to_string(&args.report)?)?;
    let train = dataset.subjects_in(Split::Train);
    let derivation = derive_scale(&train, &report, &catalog, args.name.clone())?;
    for w in &derivation.warnings {
        eprintln!("warning: {}: {}", w.feature, w.detail);
    }
    save_scale(&derivation.scale, &args.out)?;
    let mut manifest = RunManifest::new(
        "derive",
        None,
        serde_json::json!({"name": args.name, "report": args.report.display().to_string()}),
    );
    manifest.add_input(&args.data.catalog)?;
    manifest.add_input(&args.data.data)?;
    manifest.add_input(&args.report)?;
    manifest.add_output(&args.out);
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn cmd_assess(args: AssessArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let scale = load_one_scale(&args.scale)?;
    let subjects = args.split.filter(&dataset);
    let mut lines = String::new();
    for s in subjects {
        let assessment = assess(s, &scale)?;
        let votes: IndexMap<&str, &str> = assessment
            .votes
            .iter()
            .map(|v| (v.feature.as_str(), v.stratum.as_str()))
            .collect();
        let line = serde_json::json!({
            "subject_id": s.subject_id,
            "stratum": assessment.stratum.as_str(),
            "votes": votes,
            "skipped": assessment.skipped,
        });
        lines.push_str(&serde_json::to_string(&line)?);
        lines.push('\n');
    }
    match args.out {
        Some(out) => {
            std::fs::write(&out, lines)?;
            let mut manifest = RunManifest::new(
                "assess",
                None,
                serde_json::json!({"scale": args.scale.display().to_string()}),
            );
            manifest.add_input(&args.data.catalog)?;
            manifest.add_input(&args.data.data)?;
            manifest.add_input(&args.scale)?;
            manifest.add_output(&out);
            manifest.write_alongside(&out)?;
        }
        None => print!("{lines}"),
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let scale = load_one_scale(&args.scale)?;
    let subjects = args.split.filter(&dataset);
    let report = evaluate_scale(&subjects, &scale, args.alpha)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = args.out {
        write_json(&out, &report)?;
        let mut manifest = RunManifest::new(
            "evaluate",
            None,
            serde_json::json!({"alpha": args.alpha, "scale": args.scale.display().to_string()}),
        );
        manifest.add_input(&args.data.catalog)?;
        manifest.add_input(&args.data.data)?;
        manifest.add_input(&args.scale)?;
        manifest.add_output(&out);
        manifest.write_alongside(&out)?;
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> ifra_core::Result<()> {
    let (_, dataset) = load_inputs(&args.data)?;
    let mut scales = Vec::new();
    for path in &args.scales {
        scales.extend(load_scales(path)?);
    }
    let subjects = args.split.filter(&dataset);
    let reports = compare_scales(&subjects, &scales, args.alpha)?;
    let markdown = comparison_markdown(&reports);
    println!("{markdown}");
    let manifest_for = |command: &str| -> ifra_core::Result<RunManifest> {
        let mut manifest = RunManifest::new(
            command,
            None,
            serde_json::json!({
                "alpha": args.alpha,
                "scales": args.scales.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }),
        );
        manifest.add_input(&args.data.catalog)?;
        manifest.add_input(&args.data.data)?;
        for path in &args.scales {
            manifest.add_input(path)?;
        }
        Ok(manifest)
    };
    if let Some(out) = &args.out {
        write_json(out, &reports)?;
        let mut manifest = manifest_for("compare")?;
        manifest.add_output(out);
        manifest.write_alongside(out)?;
    }
    if let Some(md) = &args.markdown {
        std::fs::write(md, &markdown)?;
        let mut manifest = manifest_for("compare")?;
        manifest.add_output(md);
        manifest.write_alongside(md)?;
    }
    Ok(())
}

fn cmd_demo(args: DemoArgs) -> ifra_core::Result<()> {
    let config = DemoConfig {
        seed: args.seed,
        features: args.features,
        planted: args.planted,
        separation: args.separation,
        iterations: args.iterations,
        alpha: args.alpha,
        augment_count: args.count,
        noise_scale: args.noise_scale,
    };
    let outcome = run_demo(&config)?;
    println!("derived scale:");
    println!("{}", serde_json::to_string_pretty(&outcome.scale)?);
    println!("evaluation on the held-out test split:");
    println!("{}", serde_json::to_string_pretty(&outcome.evaluation)?);
    println!(
        "fallers assigned high risk: {:.0}%",
        100.0 * outcome.faller_high_fraction
    );
    if let Some(dir) = args.out_dir {
        std::fs::create_dir_all(&dir)?;
        let out = dir.join("demo.json");
        write_json(&out, &outcome)?;
        let mut manifest =
            RunManifest::new("demo", Some(args.seed), serde_json::to_value(config)?);
        manifest.add_output(&out);
        manifest.write_alongside(&out)?;
    }
    Ok(())
}
