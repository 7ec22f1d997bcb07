use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use printmesh::heightfield::{
    self, DepthOptions, DEFAULT_DEPTH_HI, DEFAULT_DEPTH_LO, DEFAULT_DEPTH_SCALE,
    DEFAULT_ELEVATION_SCALE, DEFAULT_IMAGE_HEIGHT, DEFAULT_PAD_WIDTH,
};
use printmesh::mesh::DEFAULT_MIN_THICKNESS;
use printmesh::preview::{layer_extent, layer_file_name};
use printmesh::slicer::{ContourFinding, DEFAULT_STITCH_TOL};
use printmesh::stl::{header_from_name, write_ascii, write_binary};
use printmesh::toolpath::{detect_overhangs, GcodeOptions, LayerKind};
use printmesh::{
    emit_gcode, plan_print, read_stl, render_layer_svg, slice_mesh, tessellate_heightfield_with,
    validate_contours, validate_watertight, Bounds2, ContourReport, Domain, Expression,
    GridSourceSpec, HeightField, Layer, PrintConfig, Raster, SliceOptions, TessellateOptions,
    TriangleMesh, WatertightReport,
};
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "printmesh",
    version,
    about = "Build printable meshes, slice them and write G-code"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solid under z = f(x, y) over a rectangle.
    Surface(SurfaceArgs),
    /// Relief from a grayscale image, an elevation grid or a depth grid.
    Relief(ReliefArgs),
    /// Slice an STL into layers, toolpaths and G-code.
    Slice(SliceArgs),
    /// Check an STL for watertightness and closed slices.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct MeshOut {
    /// Output STL path.
    #[arg(short, long)]
    output: PathBuf,
    /// Write binary STL instead of ASCII.
    #[arg(long)]
    binary: bool,
    /// Lowest top-surface height of the closed solid (mm).
    #[arg(long, default_value_t = DEFAULT_MIN_THICKNESS, value_parser = positive)]
    min_thickness: f64,
    /// Write only the open top surface, without walls or base.
    #[arg(long)]
    shell_only: bool,
}

#[derive(Args)]
struct SurfaceArgs {
    /// Height function of x and y, e.g. "10*sqrt(max(0, 1-(x/10)^2-(y/10)^2))".
    #[arg(long = "fn", value_name = "EXPR")]
    function: String,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    xmin: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    xmax: f64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    ymin: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    ymax: f64,
    /// Samples per millimetre.
    #[arg(long, default_value_t = 5.0, value_parser = positive)]
    res: f64,
    /// Keep only points where this expression is positive.
    #[arg(long, value_name = "EXPR")]
    region: Option<String>,
    /// Heights at or below this are dropped to the base.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    floor: f64,
    #[command(flatten)]
    out: MeshOut,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Image,
    Elevation,
    Depth,
}

#[derive(Args)]
struct ReliefArgs {
    /// Grayscale PGM image (P2 or P5).
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    image: Option<PathBuf>,
    /// Text grid of numbers, optionally with `Width`/`Height` header lines.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Defaults to `image` for --image and `elevation` for --grid.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Height of white pixels (image) or value multiplier (elevation, depth).
    #[arg(long, value_parser = positive)]
    scale: Option<f64>,
    /// Binarization threshold in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Nearest accepted depth.
    #[arg(long, default_value_t = DEFAULT_DEPTH_LO)]
    lo: f64,
    /// Farthest accepted depth; also the value given to rejected readings.
    #[arg(long, default_value_t = DEFAULT_DEPTH_HI)]
    hi: f64,
    /// Border rings added around the grid.
    #[arg(long, default_value_t = DEFAULT_PAD_WIDTH)]
    pad: usize,
    /// Reverse each row (depth cameras see a mirror image).
    #[arg(long)]
    mirror: bool,
    /// Keep raw depth values instead of turning near into tall.
    #[arg(long)]
    no_invert: bool,
    /// Values per row when the grid file has no `Width` line.
    #[arg(long)]
    length_x: Option<usize>,
    #[command(flatten)]
    out: MeshOut,
}

#[derive(Args)]
struct SliceArgs {
    input: PathBuf,
    /// `key = value` profile with print settings; flags override it.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_parser = positive)]
    layer_height: Option<f64>,
    #[arg(long, value_parser = positive)]
    extrusion_width: Option<f64>,
    /// Infill fraction in [0, 1].
    #[arg(long)]
    fill: Option<f64>,
    /// Raft layers under the model.
    #[arg(long)]
    raft: Option<u32>,
    /// Add support pillars under overhangs.
    #[arg(long)]
    supports: bool,
    #[arg(long)]
    gcode: Option<PathBuf>,
    /// Write one SVG per layer into this directory.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    /// Continue past watertightness and open-contour failures.
    #[arg(long)]
    force: bool,
    /// Leave the generation time out of the G-code header.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct ValidateArgs {
    input: PathBuf,
    /// Layer height of the trial slice.
    #[arg(long, default_value_t = 0.2, value_parser = positive)]
    layer_height: f64,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Expr(#[from] printmesh::ExprError),
    #[error(transparent)]
    HeightField(#[from] printmesh::HeightFieldError),
    #[error(transparent)]
    Mesh(#[from] printmesh::MeshError),
    #[error(transparent)]
    Stl(#[from] printmesh::StlError),
    #[error(transparent)]
    Slice(#[from] printmesh::SliceError),
    #[error(transparent)]
    Toolpath(#[from] printmesh::ToolpathError),
    #[error(transparent)]
    Preview(#[from] printmesh::PreviewError),
    /// Report already printed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

fn write_mesh(h: &HeightField, out: &MeshOut) -> Result<()> {
    let mesh = tessellate_heightfield_with(
        h,
        TessellateOptions {
            min_thickness: out.min_thickness,
            shell_only: out.shell_only,
        },
    )?;
    let name = out
        .output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let bytes = if out.binary {
        write_binary(&mesh, &header_from_name(&name))?
    } else {
        write_ascii(&mesh, &name).into_bytes()
    };
    write(&out.output, &bytes)?;
    let b = mesh.bounds().expect("tessellation is never empty");
    println!(
        "{}: {} facets, {}x{} grid, z {:.3}..{:.3}",
        out.output.display(),
        mesh.len(),
        h.rows(),
        h.cols(),
        b.min.z,
        b.max.z
    );
    Ok(())
}

fn surface(a: &SurfaceArgs) -> Result<()> {
    let f = Expression::parse(&a.function)?;
    let region = a.region.as_deref().map(Expression::parse).transpose()?;
    let h = heightfield::from_function(
        &f,
        Domain::new(a.xmin, a.xmax, a.ymin, a.ymax),
        a.res,
        region.as_ref(),
        a.floor,
    )?;
    write_mesh(&h, &a.out)
}

fn grid_values(path: &Path, length_x: Option<usize>) -> Result<(Vec<f64>, usize)> {
    let text = String::from_utf8(read(path)?).map_err(|e| input_err(path, e))?;
    let g = heightfield::parse_grid_text(&text).map_err(|e| input_err(path, e))?;
    let width = length_x.or(g.width).ok_or_else(|| {
        CliError::Usage(format!(
            "{}: no Width line; pass --length-x",
            path.display()
        ))
    })?;
    if let (Some(w), Some(h)) = (g.width, g.height) {
        if w * h != g.values.len() {
            return Err(input_err(
                path,
                format!(
                    "header says {w}x{h} = {} values, found {}",
                    w * h,
                    g.values.len()
                ),
            ));
        }
    }
    Ok((g.values, width))
}

fn relief(a: &ReliefArgs) -> Result<()> {
    let mode = a.mode.unwrap_or(if a.image.is_some() {
        Mode::Image
    } else {
        Mode::Elevation
    });
    let h = match (mode, &a.image, &a.grid) {
        (Mode::Image, Some(path), _) => {
            let raster = Raster::from_pgm(&read(path)?).map_err(|e| input_err(path, e))?;
            heightfield::from_image(
                &raster,
                a.threshold,
                a.scale.unwrap_or(DEFAULT_IMAGE_HEIGHT),
            )?
        }
        (Mode::Image, None, _) => return Err(CliError::Usage("--mode image needs --image".into())),
        (_, _, None) => {
            return Err(CliError::Usage(
                "--mode elevation and depth need --grid".into(),
            ))
        }
        (Mode::Elevation, _, Some(path)) => {
            let (values, length_x) = grid_values(path, a.length_x)?;
            let scale = a.scale.unwrap_or(DEFAULT_ELEVATION_SCALE);
            let spec = GridSourceSpec {
                length_x,
                total: values.len(),
                scale,
                pad_width: a.pad,
                pad_value: heightfield::apply_scale(
                    values.iter().copied().fold(f64::INFINITY, f64::min),
                    scale,
                ),
            };
            heightfield::from_flat_grid(&values, &spec)?
        }
        (Mode::Depth, _, Some(path)) => {
            let (values, length_x) = grid_values(path, a.length_x)?;
            let spec = GridSourceSpec {
                length_x,
                total: values.len(),
                scale: a.scale.unwrap_or(DEFAULT_DEPTH_SCALE),
                pad_width: a.pad,
                pad_value: 0.0,
            };
            let opts = DepthOptions {
                lo: a.lo,
                hi: a.hi,
                mirror: a.mirror,
                invert: !a.no_invert,
            };
            heightfield::from_depth_grid(&values, &spec, opts)?
        }
    };
    write_mesh(&h, &a.out)
}

fn print_watertight(r: &WatertightReport) {
    println!(
        "facets: {}, edges: {}, boundary edges: {}, non-manifold edges: {}, degenerate facets: {}",
        r.facet_count,
        r.edge_count,
        r.boundary_edges.len(),
        r.non_manifold_edges.len(),
        r.degenerate_facets.len()
    );
    for e in r.boundary_edges.iter().take(10) {
        println!("  boundary edge {:?} - {:?}", e.a, e.b);
    }
    for e in r.non_manifold_edges.iter().take(10) {
        println!(
            "  edge {:?} - {:?} shared by {} facets",
            e.a, e.b, e.facet_count
        );
    }
    if !r.normal_deviations.is_empty() {
        println!(
            "warning: {} stored normal(s) disagree with the vertex winding",
            r.normal_deviations.len()
        );
    }
}

fn print_contours(r: &ContourReport, layers: &[Layer]) {
    println!(
        "layers: {}, contours: {}, findings: {}",
        r.layers_checked,
        r.contours_checked,
        r.findings.len()
    );
    for f in r.findings.iter().take(20) {
        let z = |l: usize| layers[l].z;
        match f {
            ContourFinding::SimplicityViolation {
                layer,
                contour,
                edges,
                at,
            } => println!(
                "  SimplicityViolation z={:.3} contour {contour}: edges {} and {} meet at ({:.4}, {:.4})",
                z(*layer),
                edges.0,
                edges.1,
                at.x,
                at.y
            ),
            ContourFinding::ContourCrossing { layer, contours, at } => println!(
                "  ContourCrossing z={:.3} contours {} and {} at ({:.4}, {:.4})",
                z(*layer),
                contours.0,
                contours.1,
                at.x,
                at.y
            ),
            ContourFinding::OpenContour { layer, endpoints } => {
                println!("  OpenContour z={:.3}: {} dangling endpoint(s)", z(*layer), endpoints.len())
            }
            ContourFinding::TooFewVertices { layer, contour, count } => {
                println!("  TooFewVertices z={:.3} contour {contour}: {count}", z(*layer))
            }
            ContourFinding::TooSmall { layer, contour, area } => {
                println!("  TooSmall z={:.3} contour {contour}: area {area:e}", z(*layer))
            }
            ContourFinding::NestingViolation { layer, contour } => {
                println!("  NestingViolation z={:.3} contour {contour}", z(*layer))
            }
        }
    }
}

fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    read_stl(&read(path)?).map_err(|e| input_err(path, e))
}

fn slice(a: &SliceArgs) -> Result<()> {
    let mut cfg = PrintConfig::default();
    if let Some(p) = &a.profile {
        let text = String::from_utf8(read(p)?).map_err(|e| input_err(p, e))?;
        cfg = cfg.apply_profile(&text).map_err(|e| input_err(p, e))?;
    }
    if let Some(v) = a.layer_height {
        cfg.layer_thickness = v;
    }
    if let Some(v) = a.extrusion_width {
        cfg.extrusion_width = v;
    }
    if let Some(v) = a.fill {
        cfg.fill_fraction = v;
    }
    if let Some(v) = a.raft {
        cfg.raft_layers = v;
    }
    cfg.validate()?;

    let mesh = load_mesh(&a.input)?;
    let report = validate_watertight(&mesh);
    if !report.is_sound() {
        print_watertight(&report);
        if !a.force {
            return Err(CliError::Failed(
                "mesh is not watertight (use --force to slice anyway)".into(),
            ));
        }
    }
    let sliced = slice_mesh(
        &mesh,
        SliceOptions {
            layer_thickness: cfg.layer_thickness,
            z_offset: None,
            stitch_tol: DEFAULT_STITCH_TOL,
            require_watertight: !a.force,
        },
    )?;
    if !sliced.warnings.is_empty() {
        println!("warning: no layer falls inside the mesh height");
    }
    let contours = validate_contours(&sliced.layers);
    if !contours.is_clean() {
        print_contours(&contours, &sliced.layers);
        let open = contours.count(|f| matches!(f, ContourFinding::OpenContour { .. }));
        if open > 0 && !a.force {
            return Err(CliError::Failed(format!(
                "{open} layer(s) have open contours"
            )));
        }
    }
    let overhangs = a.supports.then(|| detect_overhangs(&mesh, &cfg));
    let plan = plan_print(&sliced.layers, overhangs.as_ref(), &cfg)?;
    for w in &plan.warnings {
        println!("warning: {w:?}");
    }
    let tp = &plan.toolpath;

    if let Some(path) = &a.gcode {
        let mut header = vec![format!("printmesh {}", env!("CARGO_PKG_VERSION"))];
        if !a.no_timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            header.push(format!("generated at unix time {secs}"));
        }
        let text = emit_gcode(tp, &cfg, &GcodeOptions { header })?;
        write(path, text.as_bytes())?;
    }

    if let Some(dir) = &a.svg_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        let empty: Vec<Layer> = tp
            .layers
            .iter()
            .map(|l| Layer::new(l.z, Vec::new()))
            .collect();
        let layer_for = |k: usize| match tp.layers[k].kind {
            LayerKind::Model(i) => &sliced.layers[i],
            _ => &empty[k],
        };
        let canvas = (0..tp.layers.len())
            .filter_map(|k| layer_extent(layer_for(k), Some(&tp.layers[k])))
            .reduce(Bounds2::union)
            .map(|b| b.expand(2.0))
            .unwrap_or(Bounds2::new(Default::default(), Default::default()));
        for k in 0..tp.layers.len() {
            let svg = render_layer_svg(layer_for(k), Some(&tp.layers[k]), canvas)?;
            write(&dir.join(layer_file_name(k)), svg.as_bytes())?;
        }
    }

    let raft = tp
        .layers
        .iter()
        .filter(|l| l.kind == LayerKind::Raft)
        .count();
    println!(
        "layers: {} ({} model, {} raft)",
        tp.layers.len(),
        sliced.layers.len(),
        raft
    );
    println!("extrusion path: {:.1} mm", tp.extrude_length());
    println!("travel: {:.1} mm", tp.travel_length());
    println!("filament: {:.1} mm", tp.filament_length());
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let mesh = load_mesh(&a.input)?;
    let report = validate_watertight(&mesh);
    print_watertight(&report);
    let sliced = slice_mesh(
        &mesh,
        SliceOptions {
            require_watertight: false,
            ..SliceOptions::new(a.layer_height)
        },
    )?;
    let contours = validate_contours(&sliced.layers);
    print_contours(&contours, &sliced.layers);
    if report.is_sound() && contours.is_clean() {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::Failed("validation failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Surface(a) => surface(a),
        Command::Relief(a) => relief(a),
        Command::Slice(a) => slice(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
