//! `glyphline` command-line tool.
//!
//! Each stage reads scene documents given on the command line and the
//! previous stage's documents from `--from` (default: the output directory),
//! so running the stages one after another reproduces `pipeline`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use glyphline::evalkit::{report_csv, EvalRow};
use glyphline::ingest::{parse_document, parse_scene, to_document, Scene};
use glyphline::maskgen::generate_masks;
use glyphline::pipeline::{
    process_all, run_eval, run_fitline, run_group, run_partition, run_rectify, with_pool, GroupRecord, LineRecord,
    PipelineConfig, Predictions, SceneInput, SceneOutput, StripRecord, WordRecord,
};
use glyphline::raster::RasterImage;
use glyphline::synthlab::{generate_scenes_with, simulate_weak_training, SceneSpec, SynthScene};

#[derive(Debug, Parser)]
#[command(name = "glyphline", version, about = "Text line structure analysis over character candidates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Pipeline configuration document (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Directory holding the previous stage's documents (defaults to --out).
    #[arg(long, global = true)]
    from: Option<PathBuf>,
    /// Coverage/straightness balance of the mask score.
    #[arg(long, global = true)]
    w: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long = "entry-exit", global = true)]
    entry_exit: Option<f64>,
    /// Neighbour count for both the candidate graph and pair-node search.
    #[arg(long = "knn-k", global = true)]
    knn_k: Option<usize>,
    #[arg(long, global = true)]
    iou: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate seeded synthetic scenes with rendered images and ground truth.
    Synth {
        /// Number of scenes (defaults to the configuration's `scenes`).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Select character masks inside annotated words.
    Maskgen { scenes: Vec<PathBuf> },
    /// Run the weak-supervision loop; synthesizes scenes when none are given.
    Simulate {
        scenes: Vec<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Group candidates into text lines.
    Group { scenes: Vec<PathBuf> },
    /// Fit center-line models and text polygons to groups.
    Fitline { scenes: Vec<PathBuf> },
    /// Rectify text polygons to 32-pixel strips.
    Rectify { scenes: Vec<PathBuf> },
    /// Split rectified strips into words.
    Partition { scenes: Vec<PathBuf> },
    /// Evaluate word predictions against annotations.
    Eval {
        scenes: Vec<PathBuf>,
        /// Prediction document for a single scene instead of `<scene>.words.json`.
        #[arg(long)]
        preds: Option<PathBuf>,
    },
    /// group, fitline, rectify, partition and eval in one run; synthesizes
    /// scenes when none are given.
    Pipeline { scenes: Vec<PathBuf> },
}

impl GlobalArgs {
    fn load_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let bytes = fs::read(p).with_context(|| format!("reading config {}", p.display()))?;
                parse_document::<PipelineConfig>(&bytes).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.w {
            cfg.mask.w = w;
        }
        if let Some(a) = self.alpha {
            cfg.grouping.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.grouping.beta = b;
        }
        if let Some(e) = self.entry_exit {
            cfg.grouping.entry_exit_cost = e;
        }
        if let Some(k) = self.knn_k {
            cfg.mask.knn_k = k;
            cfg.grouping.k = k;
        }
        if let Some(i) = self.iou {
            cfg.iou = i;
        }
        if !(cfg.iou > 0.0 && cfg.iou <= 1.0) {
            bail!("iou threshold must lie in (0, 1], got {}", cfg.iou);
        }
        if self.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        Ok(cfg)
    }

    fn from_dir(&self) -> &Path {
        self.from.as_deref().unwrap_or(&self.out)
    }
}

/// Files to write, collected before anything touches the disk.
#[derive(Default)]
struct Artifacts(Vec<(PathBuf, Vec<u8>)>);

impl Artifacts {
    fn doc<D: serde::Serialize>(&mut self, path: PathBuf, doc: &D) -> Result<()> {
        let mut text = to_document(doc)?;
        text.push('\n');
        self.0.push((path, text.into_bytes()));
        Ok(())
    }

    fn bytes(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.0.push((path, bytes));
    }

    fn write(self, out: &Path) -> Result<()> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        for (path, bytes) in self.0 {
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn scene_name(path: &Path) -> Result<String> {
    let name = path.file_name().and_then(|n| n.to_str()).context("scene path has no file name")?;
    Ok(name.strip_suffix(".json").unwrap_or(name).to_string())
}

struct LoadedScene {
    name: String,
    path: PathBuf,
    scene: Scene<f64>,
}

fn load_scenes(paths: &[PathBuf]) -> Result<Vec<LoadedScene>> {
    if paths.is_empty() {
        bail!("no scene documents given");
    }
    paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("reading scene {}", p.display()))?;
            let scene = parse_scene(&bytes).with_context(|| format!("parsing scene {}", p.display()))?;
            Ok(LoadedScene { name: scene_name(p)?, path: p.clone(), scene })
        })
        .collect()
}

fn load_image(s: &LoadedScene) -> Result<RasterImage> {
    let rel = s.scene.image.as_deref().with_context(|| format!("scene {} names no image", s.path.display()))?;
    let path = s.path.parent().unwrap_or(Path::new(".")).join(rel);
    let bytes = fs::read(&path).with_context(|| format!("reading image {}", path.display()))?;
    RasterImage::from_pgm_bytes(&bytes).with_context(|| format!("decoding image {}", path.display()))
}

fn read_doc<D: serde::de::DeserializeOwned>(dir: &Path, file: &str) -> Result<D> {
    let path = dir.join(file);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    parse_document(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn synthesize(cfg: &PipelineConfig, count: usize, jobs: usize) -> Result<Vec<(String, SynthScene)>> {
    let spec = SceneSpec { seed: cfg.seed, render: true, ..cfg.synth.clone() };
    let scenes = with_pool(jobs, || generate_scenes_with(&spec, &cfg.detector, count))??;
    Ok(scenes
        .into_iter()
        .enumerate()
        .map(|(i, mut s)| {
            let name = format!("scene_{i:03}");
            s.scene.image = Some(format!("{name}.pgm"));
            (name, s)
        })
        .collect())
}

fn add_synth_artifacts(art: &mut Artifacts, out: &Path, scenes: &[(String, SynthScene)]) -> Result<()> {
    for (name, s) in scenes {
        art.doc(out.join(format!("{name}.json")), &s.scene)?;
        art.doc(out.join(format!("{name}.truth.json")), &s.truth)?;
        if let Some(img) = &s.image {
            art.bytes(out.join(format!("{name}.pgm")), img.to_pgm_bytes());
        }
    }
    Ok(())
}

fn add_stage_artifacts(art: &mut Artifacts, out: &Path, outputs: &[SceneOutput]) -> Result<()> {
    for o in outputs {
        art.doc(out.join(format!("{}.groups.json", o.name)), &o.groups)?;
        art.doc(out.join(format!("{}.lines.json", o.name)), &o.lines)?;
        add_strip_artifacts(art, out, &o.name, &o.strips)?;
        art.doc(out.join(format!("{}.words.json", o.name)), &o.words)?;
    }
    let rows: Vec<EvalRow> = outputs.iter().map(|o| o.eval.clone()).collect();
    art.bytes(out.join("eval.csv"), report_csv(&rows).into_bytes());
    Ok(())
}

fn add_strip_artifacts(art: &mut Artifacts, out: &Path, name: &str, strips: &[(StripRecord, Option<RasterImage>)]) -> Result<()> {
    let records: Vec<&StripRecord> = strips.iter().map(|(r, _)| r).collect();
    art.doc(out.join(format!("{name}.strips.json")), &records)?;
    for (rec, raster) in strips {
        if let Some(r) = raster {
            art.bytes(out.join(&rec.file), r.to_pgm_bytes());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = g.load_config()?;
    let out = g.out.as_path();
    let mut art = Artifacts::default();
    match &cli.command {
        Command::Synth { count } => {
            let scenes = synthesize(&cfg, count.unwrap_or(cfg.scenes), g.jobs)?;
            add_synth_artifacts(&mut art, out, &scenes)?;
        }
        Command::Maskgen { scenes } => {
            for s in load_scenes(scenes)? {
                let masks = generate_masks(&s.scene, &cfg.mask);
                art.doc(out.join(format!("{}.masks.json", s.name)), &masks)?;
            }
        }
        Command::Simulate { scenes, iters } => {
            let docs: Vec<Scene<f64>> = if scenes.is_empty() {
                synthesize(&cfg, cfg.scenes, g.jobs)?.into_iter().map(|(_, s)| s.scene).collect()
            } else {
                load_scenes(scenes)?.into_iter().map(|s| s.scene).collect()
            };
            let iters = iters.unwrap_or(cfg.sim_iters);
            let report = with_pool(g.jobs, || simulate_weak_training(&docs, &cfg.scorer, iters, &cfg.mask))?;
            art.bytes(out.join("sim.csv"), report.to_csv().into_bytes());
            art.doc(out.join("scorer.json"), &report.final_scorer)?;
        }
        Command::Group { scenes } => {
            for s in load_scenes(scenes)? {
                art.doc(out.join(format!("{}.groups.json", s.name)), &run_group(&s.scene, &cfg.grouping))?;
            }
        }
        Command::Fitline { scenes } => {
            for s in load_scenes(scenes)? {
                let groups: Vec<GroupRecord> = read_doc(g.from_dir(), &format!("{}.groups.json", s.name))?;
                let lines = run_fitline(&s.scene, &groups)?;
                art.doc(out.join(format!("{}.lines.json", s.name)), &lines)?;
            }
        }
        Command::Rectify { scenes } => {
            for s in load_scenes(scenes)? {
                let lines: Vec<LineRecord> = read_doc(g.from_dir(), &format!("{}.lines.json", s.name))?;
                let image = load_image(&s)?;
                add_strip_artifacts(&mut art, out, &s.name, &run_rectify(&s.name, &image, &lines))?;
            }
        }
        Command::Partition { scenes } => {
            for s in load_scenes(scenes)? {
                let records: Vec<StripRecord> = read_doc(g.from_dir(), &format!("{}.strips.json", s.name))?;
                let strips = records
                    .into_iter()
                    .map(|r| {
                        if r.file.is_empty() {
                            return Ok((r, None));
                        }
                        let path = g.from_dir().join(&r.file);
                        let bytes = fs::read(&path).with_context(|| format!("reading strip {}", path.display()))?;
                        let raster = RasterImage::from_pgm_bytes(&bytes)?;
                        Ok((r, Some(raster)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let words: Vec<WordRecord> = run_partition(&strips, &cfg.partition);
                art.doc(out.join(format!("{}.words.json", s.name)), &words)?;
            }
        }
        Command::Eval { scenes, preds } => {
            let loaded = load_scenes(scenes)?;
            if preds.is_some() && loaded.len() != 1 {
                bail!("--preds applies to exactly one scene");
            }
            let mut rows = Vec::new();
            for s in &loaded {
                let doc: Predictions = match preds {
                    Some(p) => {
                        let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                        parse_document(&bytes).with_context(|| format!("parsing {}", p.display()))?
                    }
                    None => read_doc(g.from_dir(), &format!("{}.words.json", s.name))?,
                };
                rows.push(run_eval(&s.name, &s.scene, &doc.detections(), cfg.iou));
            }
            art.bytes(out.join("eval.csv"), report_csv(&rows).into_bytes());
        }
        Command::Pipeline { scenes } => {
            let inputs: Vec<SceneInput> = if scenes.is_empty() {
                let synth = synthesize(&cfg, cfg.scenes, g.jobs)?;
                add_synth_artifacts(&mut art, out, &synth)?;
                synth
                    .into_iter()
                    .map(|(name, s)| SceneInput { name, scene: s.scene, image: s.image.expect("rendered") })
                    .collect()
            } else {
                load_scenes(scenes)?
                    .into_iter()
                    .map(|s| Ok(SceneInput { image: load_image(&s)?, name: s.name, scene: s.scene }))
                    .collect::<Result<_>>()?
            };
            let outputs = process_all(&inputs, &cfg, g.jobs)?;
            add_stage_artifacts(&mut art, out, &outputs)?;
        }
    }
    art.write(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
