//! Command-line interface.
//!
//! Subcommands: `synth` (generate + refine a synthetic corpus), `refine`
//! (refine one scene file), `eval` (metric table over scene files),
//! `voxelize` (dump one hand's interior-distance grid as binary), and
//! `export-obj` (write a posed pair as OBJ).
//!
//! Exit codes: 0 on success, 1 on runtime errors (with a diagnostic on
//! stderr), 2 on usage errors. Every report embeds the fully resolved
//! configuration. Relative `--config` paths that don't exist are also
//! tried against `$BIMANUAL_CONFIG_DIR`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::harness::{
    run_experiment_detailed, run_noise_sweep, CorpusReport, CorpusSpec, InteractionPreset,
};
use crate::kinematics::forward;
use crate::metrics::{classify_interaction, i_mpjpe_mm, mpjpe_mm};
use crate::params::Factor;
use crate::refine::{factorized_refine, RefineConfig};
use crate::scene_io::{
    export_obj, load_corpus_spec, load_refine_config, load_scene, save_scene_doc, write_json,
    ObjExportOptions, ParamsDoc, SceneDoc,
};
use crate::sdf::VoxelSdf;
use crate::template::build_template;

/// Environment variable naming the default config directory.
pub const CONFIG_DIR_ENV: &str = "BIMANUAL_CONFIG_DIR";

#[derive(Parser)]
#[command(
    name = "bimanual",
    version,
    about = "Collision-aware refinement for interacting two-hand meshes",
    after_help = "Config search: a relative --config path that does not exist is also \
                  resolved against $BIMANUAL_CONFIG_DIR."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus, refine it, and write scenes plus an
    /// aggregate report.
    Synth(SynthArgs),
    /// Refine one scene file and write the refined scene and report.
    Refine(RefineArgs),
    /// Evaluate scene files against their ground truth and print a
    /// metric table.
    Eval(EvalArgs),
    /// Voxelize one hand of a scene into a binary grid dump.
    Voxelize(VoxelizeArgs),
    /// Export the posed hands of a scene as an OBJ file.
    ExportObj(ExportObjArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus spec file (JSON); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the corpus base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of scenes.
    #[arg(long)]
    count: Option<usize>,
    /// Override the target joint noise (millimeters); `--sweep` ignores
    /// this.
    #[arg(long)]
    noise_std_mm: Option<f64>,
    /// Run the 0/10/20/30/40 mm noise sweep instead of a single level.
    #[arg(long)]
    sweep: bool,
    /// Grid resolution used by refinement and metrics.
    #[arg(long)]
    grid_res: Option<usize>,
    /// Refinement stage order, comma separated.
    #[arg(long, value_parser = parse_stage_order)]
    stage_order: Option<StageOrder>,
    /// Output directory (scene files + report.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    /// Scene file to refine.
    scene: PathBuf,
    /// Refinement config file (JSON); Table-style defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid_res: Option<usize>,
    #[arg(long, value_parser = parse_stage_order)]
    stage_order: Option<StageOrder>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also export before/after OBJ meshes.
    #[arg(long)]
    obj: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Scene files to evaluate (ground truth required).
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
    #[arg(long)]
    grid_res: Option<usize>,
    /// Optional JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HandChoice {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WhichParams {
    Initial,
    Gt,
}

#[derive(Args)]
struct VoxelizeArgs {
    /// Scene file providing the hand pose.
    scene: PathBuf,
    /// Which hand's grid to build.
    #[arg(long, value_enum, default_value_t = HandChoice::Right)]
    hand: HandChoice,
    /// Pose the initial or the ground-truth parameters.
    #[arg(long, value_enum, default_value_t = WhichParams::Initial)]
    which: WhichParams,
    /// Grid resolution.
    #[arg(long)]
    grid_res: Option<usize>,
    /// Output file for the binary grid.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportObjArgs {
    /// Scene file providing the pose.
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = WhichParams::Initial)]
    which: WhichParams,
    /// Output OBJ path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct StageOrder(Vec<Factor>);

fn parse_stage_order(s: &str) -> Result<StageOrder, String> {
    let factors: Result<Vec<Factor>, _> = s.split(',').map(|p| p.parse::<Factor>()).collect();
    factors.map(StageOrder).map_err(|e| e.to_string())
}

/// Resolve a config path, falling back to `$BIMANUAL_CONFIG_DIR`.
fn resolve_config_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(CONFIG_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// Run the CLI and return a process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout (exit 0) and usage
            // errors to stderr (exit 2)
            let is_usage_error = e.use_stderr();
            let _ = e.print();
            return if is_usage_error { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Refine(args) => cmd_refine(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Voxelize(args) => cmd_voxelize(args),
        Command::ExportObj(args) => cmd_export_obj(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn apply_refine_overrides(
    config: &mut RefineConfig,
    grid_res: Option<usize>,
    stage_order: &Option<StageOrder>,
) {
    if let Some(res) = grid_res {
        config.grid.resolution = res;
    }
    if let Some(order) = stage_order {
        config.stage_order = order.0.clone();
    }
}

fn load_refine_or_default(
    path: &Option<PathBuf>,
    grid_res: Option<usize>,
    stage_order: &Option<StageOrder>,
) -> crate::Result<RefineConfig> {
    let mut config = match path {
        Some(p) => load_refine_config(&resolve_config_path(p))?,
        None => RefineConfig::default(),
    };
    apply_refine_overrides(&mut config, grid_res, stage_order);
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct SynthReport<'a> {
    resolved_corpus: &'a CorpusSpec,
    resolved_refine: &'a RefineConfig,
    report: &'a CorpusReport,
}

fn cmd_synth(args: SynthArgs) -> crate::Result<()> {
    let mut corpus = match &args.config {
        Some(p) => load_corpus_spec(&resolve_config_path(p))?,
        None => CorpusSpec::default(),
    };
    if let Some(seed) = args.seed {
        corpus.base_seed = seed;
    }
    if let Some(count) = args.count {
        corpus.scene_count = count;
    }
    if let Some(noise) = args.noise_std_mm {
        corpus.joint_noise_std_mm = noise;
    }
    corpus.validate()?;
    let config = load_refine_or_default(&None, args.grid_res, &args.stage_order)?;

    let template_config = crate::template::TemplateConfig::default();
    let template = build_template(&template_config)?;

    let scenes_dir = args.out.join("scenes");
    std::fs::create_dir_all(&scenes_dir)?;

    let report = if args.sweep {
        run_noise_sweep(&corpus, &[0.0, 10.0, 20.0, 30.0, 40.0], &config, &template)?
    } else {
        let (outcomes, row) = run_experiment_detailed(&corpus, &config, &template)?;
        for (i, outcome) in outcomes.iter().enumerate() {
            let path = scenes_dir.join(format!("scene_{i:04}.json"));
            crate::scene_io::save_scene(&path, &outcome.scene, &template_config)?;
            let refined_path = scenes_dir.join(format!("scene_{i:04}.refined.json"));
            let mut doc = SceneDoc::from_scene(&outcome.scene, &template_config);
            doc.initial_params = ParamsDoc::from_params(&outcome.refined_params);
            save_scene_doc(&refined_path, &doc)?;
        }
        CorpusReport { rows: vec![row] }
    };

    write_json(
        &args.out.join("report.json"),
        &SynthReport {
            resolved_corpus: &corpus,
            resolved_refine: &config,
            report: &report,
        },
    )?;
    for row in &report.rows {
        println!(
            "{} scenes={} noise={}mm  AVE-P {:.3} -> {:.3} mm  I-MPJPE {:.2} -> {:.2} mm",
            row.label,
            row.scene_count,
            row.joint_noise_std_mm,
            row.initial.ave_p_mm,
            row.refined.ave_p_mm,
            row.initial.i_mpjpe_mm,
            row.refined.i_mpjpe_mm
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct RefineCliReport<'a> {
    resolved_config: &'a RefineConfig,
    report: &'a crate::refine::RefineReport,
}

fn cmd_refine(args: RefineArgs) -> crate::Result<()> {
    let scene = load_scene(&args.scene)?;
    let config = load_refine_or_default(&args.config, args.grid_res, &args.stage_order)?;
    let template = build_template(&scene.template)?;

    let (refined, report) =
        factorized_refine(&scene.initial_params, &scene.targets, &template, &config)?;

    std::fs::create_dir_all(&args.out)?;
    if args.obj {
        let before = forward(&template, &scene.initial_params)?;
        let after = forward(&template, &refined)?;
        export_obj(&before, &args.out.join("before.obj"), &ObjExportOptions::default())?;
        export_obj(&after, &args.out.join("after.obj"), &ObjExportOptions::default())?;
    }

    // refined scene document: same targets/gt, refined initial params
    let text = std::fs::read_to_string(&args.scene)?;
    let mut doc: SceneDoc =
        serde_json::from_str(&text).map_err(|e| crate::error::Error::Malformed(e.to_string()))?;
    doc.initial_params = ParamsDoc::from_params(&refined);
    save_scene_doc(&args.out.join("refined_scene.json"), &doc)?;
    write_json(
        &args.out.join("refine_report.json"),
        &RefineCliReport {
            resolved_config: &config,
            report: &report,
        },
    )?;

    println!(
        "e_col {:.6e} -> {:.6e}   e_3d {:.6e} -> {:.6e}   accepted {}/{}",
        report.initial_errors.e_col,
        report.final_errors.e_col,
        report.initial_errors.e_3d,
        report.final_errors.e_3d,
        report.accepted_stages,
        report.stages.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    scene: String,
    interaction: crate::metrics::InteractionClass,
    mpjpe_mm: f64,
    i_mpjpe_mm: f64,
    ave_p_mm: f64,
    max_p_mm: f64,
}

#[derive(Serialize)]
struct EvalReport {
    resolved_grid: crate::sdf::GridConfig,
    rows: Vec<EvalRow>,
    mean_mpjpe_mm: f64,
    mean_i_mpjpe_mm: f64,
    mean_ave_p_mm: f64,
    mean_max_p_mm: f64,
}

fn cmd_eval(args: EvalArgs) -> crate::Result<()> {
    let mut grid = crate::sdf::GridConfig::default();
    if let Some(res) = args.grid_res {
        grid.resolution = res;
    }
    grid.validate()?;

    let mut rows = Vec::new();
    for path in &args.scenes {
        let scene = load_scene(path)?;
        let gt = scene.gt_params.as_ref().ok_or_else(|| {
            crate::error::Error::MissingField(format!(
                "gt_params (required by eval) in {}",
                path.display()
            ))
        })?;
        let template = build_template(&scene.template)?;
        let pred_mesh = forward(&template, &scene.initial_params)?;
        let gt_mesh = forward(&template, gt)?;
        let valid = [true; crate::kinematics::TOTAL_KEYPOINTS];
        let pen = crate::collision::penetration_metrics(&pred_mesh, &grid)?;
        rows.push(EvalRow {
            scene: path.display().to_string(),
            interaction: classify_interaction(&gt_mesh.joints_3d, &valid),
            mpjpe_mm: mpjpe_mm(&pred_mesh.joints_3d, &gt_mesh.joints_3d, &valid)?,
            i_mpjpe_mm: i_mpjpe_mm(&pred_mesh.joints_3d, &gt_mesh.joints_3d, &valid)?,
            ave_p_mm: pen.ave_p_mm,
            max_p_mm: pen.max_p_mm,
        });
    }
    let n = rows.len() as f64;
    let report = EvalReport {
        resolved_grid: grid,
        mean_mpjpe_mm: rows.iter().map(|r| r.mpjpe_mm).sum::<f64>() / n,
        mean_i_mpjpe_mm: rows.iter().map(|r| r.i_mpjpe_mm).sum::<f64>() / n,
        mean_ave_p_mm: rows.iter().map(|r| r.ave_p_mm).sum::<f64>() / n,
        mean_max_p_mm: rows.iter().map(|r| r.max_p_mm).sum::<f64>() / n,
        rows,
    };

    println!("{:<40} {:>13} {:>9} {:>9} {:>8} {:>8}", "scene", "class", "MPJPE", "I-MPJPE", "AVE-P", "MAX-P");
    for r in &report.rows {
        println!(
            "{:<40} {:>13} {:>9.3} {:>9.3} {:>8.3} {:>8.3}",
            r.scene,
            format!("{:?}", r.interaction),
            r.mpjpe_mm,
            r.i_mpjpe_mm,
            r.ave_p_mm,
            r.max_p_mm
        );
    }
    println!(
        "{:<40} {:>13} {:>9.3} {:>9.3} {:>8.3} {:>8.3}",
        "mean", "", report.mean_mpjpe_mm, report.mean_i_mpjpe_mm, report.mean_ave_p_mm, report.mean_max_p_mm
    );
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn cmd_voxelize(args: VoxelizeArgs) -> crate::Result<()> {
    let scene = load_scene(&args.scene)?;
    let mut grid = crate::sdf::GridConfig::default();
    if let Some(res) = args.grid_res {
        grid.resolution = res;
    }
    grid.validate()?;
    let template = build_template(&scene.template)?;
    let params = match args.which {
        WhichParams::Initial => scene.initial_params.clone(),
        WhichParams::Gt => scene
            .gt_params
            .clone()
            .ok_or_else(|| crate::error::Error::MissingField("gt_params".into()))?,
    };
    let mesh = forward(&template, &params)?;
    let vertices = match args.hand {
        HandChoice::Left => &mesh.left_vertices,
        HandChoice::Right => &mesh.right_vertices,
    };
    let sdf = VoxelSdf::voxelize(vertices, &mesh.faces, &grid)?;
    let mut bytes = Vec::new();
    sdf.write_binary(&mut bytes)?;
    crate::scene_io::atomic_write(&args.out, &bytes)?;
    println!(
        "grid resolution {} cell {:.6} m origin ({:.6}, {:.6}, {:.6})",
        sdf.resolution(),
        sdf.cell_size(),
        sdf.origin().x,
        sdf.origin().y,
        sdf.origin().z
    );
    Ok(())
}

fn cmd_export_obj(args: ExportObjArgs) -> crate::Result<()> {
    let scene = load_scene(&args.scene)?;
    let template = build_template(&scene.template)?;
    let params = match args.which {
        WhichParams::Initial => scene.initial_params.clone(),
        WhichParams::Gt => scene
            .gt_params
            .clone()
            .ok_or_else(|| crate::error::Error::MissingField("gt_params".into()))?,
    };
    let mesh = forward(&template, &params)?;
    export_obj(&mesh, &args.out, &ObjExportOptions::default())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

// keep the preset parser reachable from configs
impl InteractionPreset {
    pub fn parse_cli(s: &str) -> crate::Result<Self> {
        s.parse()
    }
}
