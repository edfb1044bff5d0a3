//! `tableware` command-line front end.

mod frames;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use tableware::evaluation::{evaluate, render_training_scenes, train_models, EvalConfig, TrainingConfig};
use tableware::feedback::{verify_grasp, VerificationRecord};
use tableware::grasp::{plan_grasp, select_target};
use tableware::synthscene::{remove_object, render, sample_scene};
use tableware::{io, ClassModel, ColorRangeModel, NoiseParams, ObjectClass, Perception, PipelineConfig, RandomizerConfig, SceneSpec};

use frames::{DetectionRecord, ObservationFile};

#[derive(Parser)]
#[command(name = "tableware", version, about = "Tableware detection, classification and grasp planning")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report angles in degrees instead of radians.
    #[arg(long, global = true)]
    degrees: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic frame directory.
    Render {
        /// Render this scene description instead of sampling one.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Randomizer settings (JSON) used when sampling.
        #[arg(long)]
        randomizer: Option<PathBuf>,
        /// Drop this object before rendering.
        #[arg(long)]
        remove: Option<u16>,
        #[arg(long)]
        noise_free: bool,
    },
    /// Learn colour ranges and class gates from labelled scenes.
    Train {
        /// Number of synthetic scenes to generate.
        #[arg(long, conflicts_with = "scenes")]
        synth: Option<usize>,
        /// Directory of rendered scene directories.
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Training settings (JSON).
        #[arg(long)]
        training: Option<PathBuf>,
        #[arg(long)]
        noise_free: bool,
    },
    /// Colour segmentation of one frame directory.
    Detect { frame: PathBuf },
    /// Detection plus 3D descriptors and classes.
    Classify { frame: PathBuf },
    /// Pick a target from an observation and plan its grasp.
    Plan {
        observation: PathBuf,
        /// Plan for this object id instead of the selected target.
        #[arg(long)]
        target: Option<usize>,
    },
    /// Compare observations before and after a grasp.
    Verify {
        before: PathBuf,
        after: PathBuf,
        #[arg(long)]
        target: usize,
    },
    /// Confusion matrix over randomly sampled scenes.
    Evaluate {
        #[arg(long, default_value_t = 1500)]
        trials: usize,
        #[arg(long)]
        randomizer: Option<PathBuf>,
        /// Sensor noise settings (JSON).
        #[arg(long, conflicts_with = "noise_free")]
        noise: Option<PathBuf>,
        #[arg(long)]
        noise_free: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Render {
            scene,
            randomizer,
            remove,
            noise_free,
        } => cmd_render(cli, scene.as_deref(), randomizer.as_deref(), *remove, *noise_free),
        Command::Train {
            synth,
            scenes,
            training,
            noise_free,
        } => cmd_train(cli, *synth, scenes.as_deref(), training.as_deref(), *noise_free),
        Command::Detect { frame } => cmd_detect(cli, frame),
        Command::Classify { frame } => cmd_classify(cli, frame),
        Command::Plan { observation, target } => cmd_plan(cli, observation, *target),
        Command::Verify { before, after, target } => cmd_verify(cli, before, after, *target),
        Command::Evaluate {
            trials,
            randomizer,
            noise,
            noise_free,
        } => cmd_evaluate(cli, *trials, randomizer.as_deref(), noise.as_deref(), *noise_free),
    }
}

fn pipeline_config(cli: &Cli) -> Result<PipelineConfig> {
    match &cli.config {
        Some(p) => PipelineConfig::load(p).context("config"),
        None => Ok(PipelineConfig::default()),
    }
}

fn out_dir(cli: &Cli, config: Option<&PipelineConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Loads the models named in the config.
fn perception(config: PipelineConfig, need_classes: bool) -> Result<Perception> {
    let path = config
        .color_model
        .clone()
        .ok_or_else(|| anyhow!("config: no color_model configured (run `train` first)"))?;
    let colors: ColorRangeModel = io::read_json(&path).context("segmentation")?;
    let classes: Option<ClassModel> = match &config.class_model {
        Some(p) => Some(io::read_json(p).context("classification")?),
        None if need_classes => bail!("config: no class_model configured (run `train` first)"),
        None => None,
    };
    Ok(Perception::new(colors, classes, config)?)
}

fn randomizer(path: Option<&Path>) -> Result<RandomizerConfig> {
    let r: RandomizerConfig = match path {
        Some(p) => io::read_json(p).context("synthscene")?,
        None => RandomizerConfig::default(),
    };
    r.validate().context("synthscene")?;
    Ok(r)
}

fn cmd_render(cli: &Cli, scene: Option<&Path>, rand: Option<&Path>, remove: Option<u16>, noise_free: bool) -> Result<()> {
    let mut spec: SceneSpec = match scene {
        Some(p) => io::read_json(p).context("synthscene")?,
        None => sample_scene(&randomizer(rand)?, cli.seed.unwrap_or(0)).context("synthscene")?,
    };
    if let (Some(seed), Some(_)) = (cli.seed, scene) {
        spec.seed = seed;
    }
    if noise_free {
        spec.noise = NoiseParams::zero();
    }
    if let Some(id) = remove {
        spec = remove_object(&spec, id).context("synthscene")?;
    }
    let rendering = render(&spec).context("synthscene")?;
    let dir = out_dir(cli, None);
    frames::save_rendering(&dir, &spec, &rendering)?;
    println!("rendered {} object(s) to {}", spec.objects.len(), dir.display());
    for o in &spec.objects {
        println!(
            "  #{} {} {} at ({:.3}, {:.3})",
            o.id,
            o.class(),
            o.color_label(),
            o.pose.x,
            o.pose.y
        );
    }
    Ok(())
}

fn cmd_train(
    cli: &Cli,
    synth: Option<usize>,
    scenes_dir: Option<&Path>,
    training: Option<&Path>,
    noise_free: bool,
) -> Result<()> {
    let pipeline = pipeline_config(cli)?;
    let mut config: TrainingConfig = match training {
        Some(p) => io::read_json(p).context("training config")?,
        None => TrainingConfig::default(),
    };
    if let Some(n) = synth {
        config.scenes = n;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if noise_free {
        config.randomizer.noise = NoiseParams::zero();
    }
    let scenes = match scenes_dir {
        Some(dir) => frames::load_labelled_dir(dir).context("training")?,
        None => render_training_scenes(&config).context("synthscene")?,
    };
    if scenes.is_empty() {
        bail!("training: no training samples");
    }
    let models = train_models(&scenes, &config, &pipeline).context("training")?;

    let dir = out_dir(cli, Some(&pipeline));
    io::write_json(dir.join("colors.json"), &models.colors)?;
    io::write_json(dir.join("classes.json"), &models.classes)?;
    let trained = PipelineConfig {
        color_model: Some(PathBuf::from("colors.json")),
        class_model: Some(PathBuf::from("classes.json")),
        output_dir: None,
        ..pipeline
    };
    io::write_json(dir.join("pipeline.json"), &trained)?;

    println!("trained on {} scene(s), {} matched object(s)", scenes.len(), models.examples.len());
    for class in ObjectClass::KNOWN {
        let n = models.examples.iter().filter(|(_, c)| *c == class).count();
        let area = models.classes.area.get(class).copied().unwrap_or_default();
        let points = models.classes.point_count.get(class).copied().unwrap_or_default();
        println!(
            "  {:<8} n={n:<5} area [{:.0}, {:.0}]  points [{:.0}, {:.0}]",
            class.as_str(),
            area[0],
            area[1],
            points[0],
            points[1]
        );
    }
    for w in &models.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote colors.json, classes.json and pipeline.json to {}", dir.display());
    Ok(())
}

fn cmd_detect(cli: &Cli, frame_dir: &Path) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dir = out_dir(cli, Some(&config));
    let perception = perception(config, false)?;
    let (frame, _) = frames::load_frame(frame_dir).context("scene")?;
    let detections = perception.detect(&frame);
    let records: Vec<_> = detections
        .iter()
        .enumerate()
        .map(|(id, detection)| DetectionRecord { id, detection })
        .collect();
    let annotated = frames::annotate(&frame, &detections);
    io::write_json(dir.join("detections.json"), &records)?;
    io::save_rgb_png(dir.join("annotated.png"), frame.width(), frame.height(), &annotated)?;
    println!("{} detection(s)", detections.len());
    for r in &records {
        let b = r.detection.bbox;
        println!(
            "  #{} {} px at ({}, {}) {}x{} {}",
            r.id,
            r.detection.pixel_count,
            b.u,
            b.v,
            b.width,
            b.height,
            r.detection.color_label.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}

fn cmd_classify(cli: &Cli, frame_dir: &Path) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dir = out_dir(cli, Some(&config));
    let perception = perception(config, true)?;
    let (frame, camera) = frames::load_frame(frame_dir).context("scene")?;
    let obs = perception.observe(&frame, &camera).context("classification")?;
    let mut objects = obs.descriptors;
    if cli.degrees {
        for d in &mut objects {
            for a in [&mut d.roll, &mut d.pitch, &mut d.yaw].into_iter().flatten() {
                *a = a.to_degrees();
            }
        }
    }
    for d in &objects {
        println!(
            "#{} {:<8} at ({:.3}, {:.3}, {:.3}) height {:.3} m",
            d.id, d.class, d.centroid.x, d.centroid.y, d.centroid.z, d.height
        );
    }
    io::write_json(dir.join("observation.json"), &ObservationFile { plane: obs.plane, objects })?;
    Ok(())
}

fn read_observation(path: &Path) -> Result<ObservationFile> {
    io::read_json(path).with_context(|| format!("observation {}", path.display()))
}

fn cmd_plan(cli: &Cli, observation: &Path, target: Option<usize>) -> Result<()> {
    let config = pipeline_config(cli)?;
    let obs = read_observation(observation)?;
    let g = &config.grasp;
    let chosen = match target {
        Some(id) => obs
            .objects
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| anyhow!("grasp: no object with id {id}"))?,
        None => select_target(&obs.objects, &g.robot_position, g.weight(), &config.priorities).context("grasp")?,
    };
    let plan = plan_grasp(chosen, &obs.plane, g).context("grasp")?;
    let record = plan.record(cli.degrees);
    io::write_json(out_dir(cli, Some(&config)).join("plan.json"), &record)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn cmd_verify(cli: &Cli, before: &Path, after: &Path, target: usize) -> Result<()> {
    let config = pipeline_config(cli)?;
    let before = read_observation(before)?;
    let after = read_observation(after)?;
    let t = before
        .objects
        .iter()
        .find(|d| d.id == target)
        .ok_or_else(|| anyhow!("feedback: no object with id {target} before the grasp"))?;
    let f = &config.feedback;
    let v = verify_grasp(t, &after.objects, f.dist_tol, f.color_tol);
    let record = VerificationRecord::new(target, 1, v);
    io::write_json(out_dir(cli, Some(&config)).join("verification.json"), &record)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn cmd_evaluate(cli: &Cli, trials: usize, rand: Option<&Path>, noise: Option<&Path>, noise_free: bool) -> Result<()> {
    let config = pipeline_config(cli)?;
    let dir = out_dir(cli, Some(&config));
    let perception = perception(config, true)?;
    let mut eval = EvalConfig {
        trials,
        randomizer: randomizer(rand)?,
        ..EvalConfig::default()
    };
    if let Some(s) = cli.seed {
        eval.seed = s;
    }
    if let Some(p) = noise {
        let n: NoiseParams = io::read_json(p).context("synthscene")?;
        n.validate().context("synthscene")?;
        eval.randomizer.noise = n;
    }
    if noise_free {
        eval.randomizer.noise = NoiseParams::zero();
    }
    let cm = evaluate(&perception, &eval).context("evaluation")?;
    let table = cm.table();
    io::write_atomic(dir.join("confusion.csv"), cm.to_csv().as_bytes())?;
    io::write_atomic(dir.join("confusion_counts.csv"), cm.counts_csv().as_bytes())?;
    io::write_atomic(dir.join("confusion.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}
