use anyhow::{Context, Result};
use clap::Parser;
use pahom::io::write_pamesh;
use pahom::lebesgue::write_classification;
use pahom::maps::parse_map_spec;
use pahom::pipeline::{emit, run, Params, RunFailure};
use pahom::Domain;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Approximates a planar bi-Lipschitz map by a piecewise-affine
/// homeomorphism and reports how well the approximation holds up.
#[derive(Parser, Debug)]
#[command(name = "pahom", version, about)]
struct Args {
    /// Map to approximate: name or name:args, e.g. "identity",
    /// "affine:2,0,0,0.5,0,0", "shear_sine:0.1,1", "polar_twist",
    /// "fold_candidate".
    #[arg(long, default_value = "shear_sine:0.1,1")]
    map: String,

    /// Domain: unit | lshape | disk.
    #[arg(long, default_value = "unit")]
    domain: String,

    /// Target bound for the four error terms.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,

    /// Sobolev exponent for the derivative error norms.
    #[arg(long, default_value_t = 1.0)]
    p: f64,

    /// Initial grid cell side.
    #[arg(long, default_value_t = 0.125)]
    r0: f64,

    /// How many times the cell side may be halved.
    #[arg(long, default_value_t = 6)]
    max_halvings: u32,

    /// Quadrature resolution per cell for the classification integrals.
    #[arg(long, default_value_t = 16)]
    quad_n: usize,

    /// Maximum quadtree refinement depth outside the accepted region.
    #[arg(long, default_value_t = 8)]
    max_depth: u32,

    /// Random point pairs for the skeleton distortion check.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,

    /// Seed for every randomized check.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory the artifacts are written into.
    #[arg(long, default_value = "pahom-out")]
    out: PathBuf,

    /// Also render the two-panel figure.
    #[arg(long)]
    svg: bool,

    /// Skip all adjustment and interpolate the map on the plain grid;
    /// the variant that can fold.
    #[arg(long)]
    naive: bool,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn real_main() -> Result<ExitCode> {
    let args = Args::parse();
    let oracle = parse_map_spec(&args.map).map_err(anyhow::Error::msg)?;
    let domain = Domain::parse(&args.domain).map_err(anyhow::Error::msg)?;
    let params = Params {
        eps: args.eps,
        p: args.p,
        r0: args.r0,
        max_halvings: args.max_halvings,
        quad_n: args.quad_n,
        max_depth: args.max_depth,
        pairs: args.pairs,
        seed: args.seed,
        naive: args.naive,
    };
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    match run(oracle.as_ref(), &domain, &params) {
        Ok(out) => {
            let report = emit::render_report(&out.report);
            write(&args.out, "report.txt", &report)?;
            write(&args.out, "timings.txt", &emit::render_timings(&out.timings))?;
            write(
                &args.out,
                "mesh.pamesh",
                &write_pamesh(&out.mesh.vertices, &out.mesh.images, &out.mesh.triangles),
            )?;
            if let Some(class) = &out.classification {
                write(&args.out, "classification.txt", &write_classification(class))?;
            }
            if !out.grid_dump.is_empty() {
                write(&args.out, "grid.txt", &out.grid_dump)?;
            }
            if args.svg {
                write(&args.out, "figure.svg", &emit::render_svg(&out))?;
            }
            print!("{report}");
            Ok(if out.report.exit_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Err(RunFailure { stage, message, classification_dump, grid_dump }) => {
            let text = format!("stage {stage}\nerror {message}\n");
            write(&args.out, "failure.txt", &text)?;
            if let Some(c) = classification_dump {
                write(&args.out, "classification.txt", &c)?;
            }
            if let Some(g) = grid_dump {
                write(&args.out, "grid.txt", &g)?;
            }
            eprint!("{text}");
            Ok(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
