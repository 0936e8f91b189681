use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anura_core::eval::run_grid_with;
use anura_core::ingest::{load_columns, load_csv, write_csv, write_matrix_csv, SchemaConfig};
use anura_core::preprocess::{remove_outliers, OutlierRemoval, OutlierRule};
use anura_core::stats::{correlation_matrix, describe, write_describe_csv};
use anura_core::transform::{
    read_envelope, write_envelope, FittedTransform, ModelArtifact, MODEL_KIND, TRANSFORM_KIND,
};
use anura_core::{DataForm, Dataset, Metric};
use anyhow::Context;
use clap::Args;
use log::info;

use crate::settings::{Format, Resolved, Settings};

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Flat TOML file with the same keys as the flags. Flags win.
    #[arg(long, value_name = "TOML")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl PipelineArgs {
    fn resolve(&self) -> anyhow::Result<Resolved> {
        match &self.config {
            Some(path) => self.settings.clone().over(Settings::from_file(path)?).resolve(),
            None => self.settings.resolve(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    /// CSV with the feature columns the artifact was trained on.
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    /// Output CSV [default: standard output].
    #[arg(long, value_name = "CSV")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "Species")]
    pub label_column: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl ApplyArgs {
    fn schema(&self) -> anyhow::Result<SchemaConfig> {
        let settings = Settings {
            label_column: Some(self.label_column.clone()),
            delimiter: Some(self.delimiter),
            ..Settings::default()
        };
        settings.schema()
    }

    fn sink(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn load(r: &Resolved) -> anyhow::Result<Dataset> {
    info!("loading {}", r.data.display());
    let ds = load_csv(&r.data, &r.config.schema)?;
    info!("{} rows, {} feature columns, {} classes", ds.n_rows(), ds.n_cols(), ds.class_count());
    Ok(ds)
}

fn clean(raw: &Dataset, r: &Resolved) -> anyhow::Result<OutlierRemoval> {
    let rule = OutlierRule {
        k_sigma: r.config.k_sigma,
        std: r.config.std_convention,
    };
    Ok(remove_outliers(raw, &rule)?)
}

fn write_stats(cleaned: &Dataset, out: &Path) -> anyhow::Result<()> {
    let summary = describe(cleaned)?;
    write_with(&out.join("describe.csv"), |w| Ok(write_describe_csv(&summary, w)?))?;
    let corr = correlation_matrix(cleaned)?;
    write_with(&out.join("correlation.csv"), |w| Ok(corr.write_csv(w)?))
}

fn write_manifest(r: &Resolved) -> anyhow::Result<()> {
    let text = Settings::effective(r).to_manifest();
    write_with(&r.out.join("manifest.toml"), |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn stats(args: &PipelineArgs) -> anyhow::Result<()> {
    let r = args.resolve()?;
    let raw = load(&r)?;
    let removal = clean(&raw, &r)?;
    println!("input rows: {}", raw.n_rows());
    println!("removed: {}", removal.removed_count);
    println!("output rows: {}", removal.dataset.n_rows());
    if !removal.degenerate_columns.is_empty() {
        println!("constant columns: {}", removal.degenerate_columns.join(", "));
    }
    write_stats(&removal.dataset, &r.out)?;
    write_manifest(&r)?;
    info!("wrote describe.csv and correlation.csv to {}", r.out.display());
    Ok(())
}

const TABLES: [(Metric, &str, &str); 2] = [
    (Metric::CrossValidation, "table1", "Cross-validation accuracy"),
    (Metric::Test, "table2", "Test-split accuracy"),
];

pub fn run(args: &PipelineArgs) -> anyhow::Result<()> {
    let r = args.resolve()?;
    let raw = load(&r)?;
    let removal = clean(&raw, &r)?;
    info!(
        "cleaning removed {} of {} rows; running {} forms × {} models with {} thread(s)",
        removal.removed_count,
        raw.n_rows(),
        r.config.forms.len(),
        r.config.models.len(),
        r.config.jobs
    );
    let output = run_grid_with(&raw, &r.config, &())?;
    let report = &output.report;
    let out = &r.out;

    if r.wants(Format::Json) {
        write_with(&out.join("report.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, report)?;
            Ok(w.write_all(b"\n")?)
        })?;
        let artifacts = &output.artifacts;
        for t in &artifacts.transforms {
            let path = out.join("transforms").join(format!("{}.json", t.form.tag()));
            write_with(&path, |w| Ok(write_envelope(w, TRANSFORM_KIND, &t.input_columns, t)?))?;
        }
        for (form, kind, model) in &artifacts.models {
            let transform = artifacts
                .transforms
                .iter()
                .find(|t| t.form == *form)
                .expect("every model's form has a transform");
            let artifact = ModelArtifact {
                form: *form,
                label_names: artifacts.label_names.clone(),
                transform: transform.clone(),
                model: model.clone(),
            };
            let name = format!("{}_{}.json", form.tag(), kind.label().to_lowercase());
            write_with(&out.join("models").join(name), |w| {
                Ok(write_envelope(w, MODEL_KIND, &transform.input_columns, &artifact)?)
            })?;
        }
    }
    for (metric, stem, _) in TABLES {
        if r.wants(Format::Csv) {
            write_with(&out.join(format!("{stem}.csv")), |w| Ok(report.write_table_csv(metric, w)?))?;
        }
        if r.wants(Format::Markdown) {
            let md = report.table_markdown(metric);
            write_with(&out.join(format!("{stem}.md")), |w| Ok(w.write_all(md.as_bytes())?))?;
        }
    }
    if r.wants(Format::Csv) {
        write_stats(&removal.dataset, out)?;
    }
    write_manifest(&r)?;

    for (metric, _, title) in TABLES {
        println!("{title}\n\n{}", report.table_markdown(metric));
    }
    info!("wrote outputs to {}", out.display());
    Ok(())
}

fn with_labels(features: ndarray::Array2<f64>, columns: Vec<String>, classes: Vec<String>) -> anyhow::Result<Dataset> {
    let mut names: Vec<String> = Vec::new();
    let labels = classes
        .into_iter()
        .map(|c| match names.iter().position(|n| *n == c) {
            Some(i) => i,
            None => {
                names.push(c);
                names.len() - 1
            }
        })
        .collect();
    Ok(Dataset::new(features, columns, labels, names, DataForm::Raw)?)
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Transform JSON written by `run` (transforms/<form>.json).
    #[arg(long, value_name = "JSON")]
    pub transform: PathBuf,
    #[command(flatten)]
    pub apply: ApplyArgs,
}

pub fn transform(args: &TransformArgs) -> anyhow::Result<()> {
    let file = File::open(&args.transform).with_context(|| format!("cannot open {}", args.transform.display()))?;
    let env = read_envelope::<FittedTransform, _>(io::BufReader::new(file), TRANSFORM_KIND)?;
    let schema = args.apply.schema()?;
    let rows = load_columns(&args.apply.input, &schema, &env.columns)?;
    let z = env.values.apply_matrix(rows.features.view())?;
    let mut buf = Vec::new();
    match rows.classes {
        Some(classes) => {
            let ds = with_labels(z, env.values.output_columns.clone(), classes)?;
            write_csv(&ds, &mut buf, &schema.label_column)?;
        }
        None => write_matrix_csv(&z, &env.values.output_columns, &mut buf)?,
    }
    let mut sink = args.apply.sink()?;
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `run` (models/<form>_<model>.json).
    #[arg(long, value_name = "JSON")]
    pub model: PathBuf,
    #[command(flatten)]
    pub apply: ApplyArgs,
}

pub fn predict(args: &PredictArgs) -> anyhow::Result<()> {
    let file = File::open(&args.model).with_context(|| format!("cannot open {}", args.model.display()))?;
    let env = read_envelope::<ModelArtifact, _>(io::BufReader::new(file), MODEL_KIND)?;
    let schema = args.apply.schema()?;
    let rows = load_columns(&args.apply.input, &schema, &env.columns)?;
    let predicted = env.values.predict_names(rows.features.view())?;
    if let Some(actual) = &rows.classes {
        let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
        info!("{hits} of {} predictions match the file's labels", predicted.len());
    }
    let mut sink = args.apply.sink()?;
    writeln!(sink, "predicted")?;
    for name in &predicted {
        if name.contains([',', '"', '\n']) {
            writeln!(sink, "\"{}\"", name.replace('"', "\"\""))?;
        } else {
            writeln!(sink, "{name}")?;
        }
    }
    sink.flush()?;
    Ok(())
}
