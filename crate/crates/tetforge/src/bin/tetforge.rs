use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tetforge::io::{self, MeshFormat, RunMeta, RunReport};
use tetforge::parallel::{parallel_triangulate, ParallelOptions};
use tetforge::refine::{cube_surface, refine, RefineOptions, SizeField};
use tetforge::{Error, Result};
use tetforge_core::mesh::{audit, AuditOptions, DelaunayCheck};
use tetforge_core::{MeshStore, Point3};

#[derive(Parser, Debug)]
#[command(name = "tetforge", version, about = "Parallel 3D Delaunay triangulation and mesh refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Delaunay tetrahedralization of a point file.
    Triangulate {
        /// Points as `x y z` text or the binary point format.
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Meshes the volume enclosed by a closed triangulated surface.
    Refine {
        /// Surface as Wavefront OBJ; omit with --cube.
        input: Option<PathBuf>,
        /// Use the surface of the unit cube with this many divisions per edge.
        #[arg(long, conflicts_with = "input")]
        cube: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Uniform target size; defaults to the surface edge lengths.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_rounds: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Audits a mesh file: adjacency, orientation, hull and the empty
    /// circumsphere property.
    Verify {
        input: PathBuf,
        /// Largest vertex count for the all-pairs circumsphere check.
        #[arg(long, default_value_t = 5000)]
        exhaustive_max: usize,
    },
    /// Times triangulation of random points on one worker and on --workers.
    Bench {
        #[arg(short, long, default_value_t = 100_000)]
        n: usize,
        /// Repetitions; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[command(flatten)]
        run: RunArgs,
        /// Report file, CSV for `.csv` and JSON otherwise; stdout if omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, env = "TETFORGE_WORKERS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[arg(long, default_value_t = ParallelOptions::default().seed)]
    seed: u64,
    /// Curve depth coefficient of the insertion order.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, value_enum, default_value_t = AuditLevel::Off)]
    audit: AuditLevel,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Mesh format; by default from the output extension.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write ghost tetrahedra too, with the ghost vertex as the largest id.
    #[arg(long)]
    ghosts: bool,
    /// Run report, CSV for `.csv` and JSON otherwise.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AuditLevel {
    Off,
    /// Occasional audits during insertion and a linear-time check at the end.
    Sample,
    /// The complete audit at the end.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Txt,
    Bin,
    Msh,
}

impl From<Format> for MeshFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Txt => MeshFormat::Text,
            Format::Bin => MeshFormat::Binary,
            Format::Msh => MeshFormat::Msh,
        }
    }
}

impl RunArgs {
    fn parallel(&self) -> ParallelOptions {
        ParallelOptions {
            workers: self.workers as usize,
            seed: self.seed,
            k: self.k,
            audit_rate: if self.audit == AuditLevel::Sample { 0.01 } else { 0.0 },
            ..ParallelOptions::default()
        }
    }

    fn meta(&self, command: &str) -> RunMeta {
        RunMeta {
            command: command.into(),
            workers: self.workers as usize,
            seed: self.seed,
            k: self.k,
            audit: format!("{:?}", self.audit).to_lowercase(),
            version: env!("CARGO_PKG_VERSION").into(),
            ..RunMeta::default()
        }
    }
}

fn display(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

fn final_audit(mesh: &MeshStore, level: AuditLevel, report: &mut RunReport) -> Result<()> {
    let opts = match level {
        AuditLevel::Off => return Ok(()),
        AuditLevel::Sample => AuditOptions::local(),
        AuditLevel::Full => AuditOptions::full(),
    };
    let t = Instant::now();
    audit(mesh, &opts)?;
    report.phase("audit", t.elapsed().as_secs_f64());
    Ok(())
}

fn finish(mesh: &MeshStore, output: Option<&Path>, out: &OutputArgs, report: &mut RunReport) -> Result<()> {
    if let Some(path) = output {
        let format = out.format.map_or_else(|| MeshFormat::from_extension(path), MeshFormat::from);
        let t = Instant::now();
        io::write_mesh(path, mesh, format, out.ghosts)?;
        report.phase("write", t.elapsed().as_secs_f64());
    }
    if let Some(path) = &out.report {
        report.write(path)?;
    }
    Ok(())
}

fn summary(report: &RunReport) {
    let m = &report.mesh;
    eprintln!(
        "{}: {} vertices, {} tetrahedra, {:.0} tets/s, seed {}, {} workers",
        report.meta.command, m.vertices, m.real_tets, report.tets_per_second, report.meta.seed, report.meta.workers
    );
}

fn triangulate_cmd(input: &Path, output: Option<&Path>, run: &RunArgs, out: &OutputArgs) -> Result<()> {
    let mut report =
        RunReport::new(RunMeta { input: display(input), output: output.and_then(display), ..run.meta("triangulate") });
    let t = Instant::now();
    let points = io::read_points(input, None)?;
    report.phase("read", t.elapsed().as_secs_f64());
    let t = Instant::now();
    let (mesh, pr) = parallel_triangulate(points, &run.parallel())?;
    report.phase("triangulate", t.elapsed().as_secs_f64());
    report.set_insertion(&pr);
    report.set_mesh(&mesh, "triangulate");
    final_audit(&mesh, run.audit, &mut report)?;
    finish(&mesh, output, out, &mut report)?;
    summary(&report);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn refine_cmd(
    input: Option<&Path>,
    cube: Option<usize>,
    output: Option<&Path>,
    h: Option<f64>,
    max_rounds: usize,
    run: &RunArgs,
    out: &OutputArgs,
) -> Result<()> {
    let mut report = RunReport::new(RunMeta {
        input: input.and_then(display).or_else(|| cube.map(|d| format!("cube:{d}"))),
        output: output.and_then(display),
        h,
        max_rounds: Some(max_rounds),
        ..run.meta("refine")
    });
    let t = Instant::now();
    let surface = match (input, cube) {
        (Some(p), _) => io::read_obj(p)?,
        (None, Some(d)) => cube_surface(d, run.workers as usize)?,
        (None, None) => return Err(Error::Invalid("give a surface file or --cube".into())),
    };
    report.phase("read", t.elapsed().as_secs_f64());
    let size = match h {
        Some(h) => SizeField::Uniform(h),
        None => SizeField::from_surface(&surface),
    };
    let popts = run.parallel();
    let opts = RefineOptions { workers: popts.workers, seed: popts.seed, max_rounds, audit_rate: popts.audit_rate };
    let t = Instant::now();
    let refined = refine(&surface, &size, &opts)?;
    report.phase("refine", t.elapsed().as_secs_f64());
    report.set_insertion(&refined.report.insertion);
    report.refine_rounds = refined.report.rounds.clone();
    report.set_mesh(&refined.mesh, "refine");
    if refined.report.hit_round_cap {
        eprintln!("warning: round cap reached with {} oversized tetrahedra left", refined.report.residual);
    }
    final_audit(&refined.mesh, run.audit, &mut report)?;
    finish(&refined.mesh, output, out, &mut report)?;
    summary(&report);
    Ok(())
}

fn verify_cmd(input: &Path, exhaustive_max: usize) -> Result<()> {
    let mesh = io::read_mesh(input)?;
    let opts =
        AuditOptions { delaunay: DelaunayCheck::Exhaustive { max_vertices: exhaustive_max }, ..AuditOptions::full() };
    match audit(&mesh, &opts) {
        Ok(r) => {
            let how = if r.exhaustive { "all pairs" } else { "local" };
            println!(
                "PASS {}: {} tetrahedra, {} hull facets, empty circumspheres checked ({how})",
                input.display(),
                r.real_tets,
                r.ghost_tets
            );
            Ok(())
        }
        Err(e) => {
            println!("FAIL {}: {e}", input.display());
            Err(e.into())
        }
    }
}

fn bench_cmd(n: usize, repeat: usize, run: &RunArgs, report_path: Option<&Path>) -> Result<()> {
    let mut rng = tetforge_core::rng::stream(run.seed, &[n as u64]);
    let points: Vec<Point3> = (0..n)
        .map(|_| Point3::new(rand::Rng::random(&mut rng), rand::Rng::random(&mut rng), rand::Rng::random(&mut rng)))
        .collect();
    let mut report = RunReport::new(RunMeta { input: Some(format!("uniform:{n}")), ..run.meta("bench") });
    let time = |workers: usize| -> Result<(f64, MeshStore, tetforge::parallel::ParallelReport)> {
        let opts = ParallelOptions { workers, ..run.parallel() };
        let mut best: Option<(f64, MeshStore, tetforge::parallel::ParallelReport)> = None;
        for _ in 0..repeat.max(1) {
            let t = Instant::now();
            let (m, r) = parallel_triangulate(points.clone(), &opts)?;
            let s = t.elapsed().as_secs_f64();
            if best.as_ref().is_none_or(|b| s < b.0) {
                best = Some((s, m, r));
            }
        }
        Ok(best.expect("at least one run"))
    };
    let (one, base, _) = time(1)?;
    report.phase("triangulate_1", one);
    let workers = run.workers as usize;
    let (many, mesh, pr) = if workers > 1 { time(workers)? } else { (one, base, Default::default()) };
    report.phase(&format!("triangulate_{workers}"), many);
    report.set_insertion(&pr);
    report.set_mesh(&mesh, &format!("triangulate_{workers}"));
    report.extra.push(("tets_per_second_1".into(), mesh.real_tet_count() as f64 / one));
    report.extra.push(("speedup".into(), one / many));
    report.extra.push(("share_at_full_workers".into(), pr.share_at(workers)));
    final_audit(&mesh, run.audit, &mut report)?;
    eprintln!(
        "bench: n = {n}, 1 worker {one:.3} s, {workers} workers {many:.3} s, speedup {:.2}, {:.0} tets/s",
        one / many,
        report.tets_per_second
    );
    match report_path {
        Some(p) => report.write(p)?,
        None => println!("{}", report.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Triangulate { input, output, run, out } => triangulate_cmd(input, output.as_deref(), run, out),
        Command::Refine { input, cube, output, h, max_rounds, run, out } => {
            refine_cmd(input.as_deref(), *cube, output.as_deref(), *h, *max_rounds, run, out)
        }
        Command::Verify { input, exhaustive_max } => verify_cmd(input, *exhaustive_max),
        Command::Bench { n, repeat, run, report } => bench_cmd(*n, *repeat, run, report.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
