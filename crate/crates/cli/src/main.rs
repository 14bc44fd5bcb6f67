mod io;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use accpulse::case_io;
use accpulse::dataset::{
    process_recording, read_feature_csv, write_feature_csv, write_rejection_csv, Dataset, Extraction,
};
use accpulse::eval::{run_protocol, timeline, ProtocolConfig};
use accpulse::svm::{grid_search_cv, HyperGrid, SvmParams, TrainedModel};
use accpulse::synth::CorpusConfig;
use accpulse::{Error, FeatureSet, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "accpulse",
    version,
    about = "Circulation-state classification from ECG and accelerometry"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of case directories.
    Synth {
        /// JSON corpus description.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut, screen and featurize case directories into a feature CSV.
    Extract {
        /// Case directories, or directories whose subdirectories are cases.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Rejection log; defaults to `<out stem>.rejected.csv`.
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// Train a calibrated model at fixed hyperparameters or by grid search.
    Train(TrainArgs),
    /// Run the repeated patient-wise evaluation protocol.
    Evaluate(EvaluateArgs),
    /// Probability timeline for one case.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "case")]
        case_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with = "grid", requires = "c")]
    gamma: Option<f64>,
    #[arg(long = "c", conflicts_with = "grid", requires = "gamma")]
    c: Option<f64>,
    /// Select (gamma, C) by cross-validation over the 240-point grid.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 20)]
    folds: usize,
    /// `all`, `ecg-only` or a list such as `v8,v15,v36`.
    #[arg(long = "feature-set", alias = "subset", default_value = "all")]
    feature_set: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the CV table as CSV.
    #[arg(long)]
    cv_table: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 50)]
    splits: usize,
    #[arg(long, default_value_t = 20)]
    folds: usize,
    #[arg(long = "feature-set", default_value = "all")]
    feature_set: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    roc: Option<PathBuf>,
    #[arg(long)]
    roc_svg: Option<PathBuf>,
}

fn case_dirs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.join(case_io::ANNOTATIONS_FILE).is_file() {
            out.push(p.clone());
            continue;
        }
        let entries = fs::read_dir(p).map_err(|e| Error::Data {
            path: p.clone(),
            message: e.to_string(),
        })?;
        let mut sub: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join(case_io::ANNOTATIONS_FILE).is_file())
            .collect();
        if sub.is_empty() {
            return Err(Error::Data {
                path: p.clone(),
                message: "no case directories found".into(),
            });
        }
        sub.sort();
        out.extend(sub);
    }
    Ok(out)
}

fn load_features(path: &Path) -> Result<Vec<accpulse::dataset::FeatureRow>> {
    let bytes = io::read(path)?;
    read_feature_csv(bytes.as_slice(), path)
}

fn synth(config: &Path, out: &Path) -> Result<()> {
    let text = String::from_utf8_lossy(&io::read(config)?).into_owned();
    let cfg: CorpusConfig = serde_json::from_str(&text).map_err(|e| Error::Data {
        path: config.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let indices: Vec<usize> = (0..cfg.cases).collect();
    let cases = accpulse::par::map(&indices, |&i| {
        cfg.case_params(i)
            .and_then(|p| accpulse::synth::generate_case(&p))
    });
    for case in cases {
        let (rec, truth) = case?;
        let dir = out.join(&rec.patient_id);
        io::write_atomic(&dir.join(case_io::SIGNALS_FILE), &case_io::signals_csv(&rec)?)?;
        io::write_atomic(
            &dir.join(case_io::ANNOTATIONS_FILE),
            case_io::annotations_json(&rec)?.as_bytes(),
        )?;
        let truth_json = serde_json::to_string_pretty(&truth)? + "\n";
        io::write_atomic(&dir.join(case_io::TRUTH_FILE), truth_json.as_bytes())?;
    }
    eprintln!("wrote {} cases to {}", cfg.cases, out.display());
    Ok(())
}

fn extract(inputs: &[PathBuf], out: &Path, rejections: Option<&Path>) -> Result<()> {
    let dirs = case_dirs(inputs)?;
    let recs: Vec<Result<Extraction>> = accpulse::par::map(&dirs, |d| {
        case_io::read_case(d).and_then(|r| process_recording(&r))
    });
    let mut all = Extraction::default();
    for r in recs {
        all.extend(r?);
    }
    let mut buf = Vec::new();
    write_feature_csv(&all.rows, &mut buf)?;
    io::write_atomic(out, &buf)?;
    let rej_path = rejections
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("rejected.csv"));
    let mut buf = Vec::new();
    write_rejection_csv(&all.rejections, &mut buf)?;
    io::write_atomic(&rej_path, &buf)?;
    eprintln!(
        "{} cases: {} snippets accepted, {} rejected",
        dirs.len(),
        all.rows.len(),
        all.rejections.len()
    );
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let rows = load_features(&a.features)?;
    let set = FeatureSet::parse(&a.feature_set)?;
    let data = Dataset::from_rows(&rows, &set);
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let (gamma, c) = match (a.gamma, a.c, a.grid) {
        (Some(g), Some(c), false) => (g, c),
        (None, None, true) => {
            let grid = HyperGrid::default();
            let search = grid_search_cv(
                &data.x,
                &data.y,
                &data.groups,
                &grid,
                a.folds,
                a.seed,
                &SvmParams::new(1.0, 1.0),
            )?;
            println!("gamma,C,mean_balanced_accuracy");
            let mut table = String::from("gamma,C,mean_balanced_accuracy\n");
            for row in &search.table {
                let line = format!("{},{},{}", row.gamma, row.c, row.mean_balanced_accuracy);
                println!("{line}");
                table.push_str(&line);
                table.push('\n');
            }
            if let Some(p) = &a.cv_table {
                io::write_atomic(p, table.as_bytes())?;
            }
            (search.gamma, search.c)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "pass either --gamma and --c, or --grid".into(),
            ));
        }
    };
    println!("selected gamma={gamma} C={c}");
    let model = TrainedModel::fit(
        &data.x,
        &data.y,
        data.feature_names.clone(),
        &SvmParams::new(gamma, c),
        a.seed,
    )?;
    for f in &model.flags {
        eprintln!("warning: {f}");
    }
    let mut buf = Vec::new();
    model.write_to(&mut buf)?;
    io::write_atomic(&a.out, &buf)?;
    eprintln!(
        "{} support vectors, model written to {}",
        model.support_vectors.len(),
        a.out.display()
    );
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let rows = load_features(&a.features)?;
    let set = FeatureSet::parse(&a.feature_set)?;
    let data = Dataset::from_rows(&rows, &set);
    let cfg = ProtocolConfig {
        splits: a.splits,
        folds: a.folds,
        master_seed: a.seed,
        ..ProtocolConfig::default()
    };
    let report = run_protocol(&data, &cfg)?;
    for f in &report.failed_splits {
        eprintln!("warning: split with seed {} excluded: {}", f.seed, f.error);
    }
    for (name, s) in &report.aggregate {
        println!("{name:>18} {:.3} [{:.3}, {:.3}]", s.mean, s.ci_low, s.ci_high);
    }
    io::write_atomic(&a.out, report.to_json()?.as_bytes())?;
    if let Some(p) = &a.roc {
        io::write_atomic(p, &report.roc_csv()?)?;
    }
    if let Some(p) = &a.roc_svg {
        io::write_atomic(p, plot::roc_svg(&report).as_bytes())?;
    }
    Ok(())
}

fn predict(model: &Path, case_dir: &Path, out: &Path, svg: Option<&Path>) -> Result<()> {
    let bytes = io::read(model)?;
    let model = TrainedModel::read_from(bytes.as_slice()).map_err(|e| Error::Data {
        path: model.to_path_buf(),
        message: e.to_string(),
    })?;
    let rec = case_io::read_case(case_dir)?;
    let tl = timeline(&model, &rec)?;
    for w in &tl.warnings {
        eprintln!("warning: {w}");
    }
    io::write_atomic(out, &tl.to_csv()?)?;
    if let Some(p) = svg {
        let span = rec
            .joint_support()
            .map(|s| (s.start_s, s.end_s))
            .unwrap_or((0.0, 1.0));
        io::write_atomic(p, plot::timeline_svg(&tl, &rec.circulation, span).as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match cli.command {
        Command::Synth { config, out } => synth(&config, &out),
        Command::Extract {
            inputs,
            out,
            rejections,
        } => extract(&inputs, &out, rejections.as_deref()),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Predict {
            model,
            case_dir,
            out,
            svg,
        } => predict(&model, &case_dir, &out, svg.as_deref()),
    }
}

/// 2 for bad input or usage, 3 for broken internal invariants.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Leakage(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
