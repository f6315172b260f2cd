//! The `dilsurf` command line.

use std::fmt::{Debug, Display, Write as _};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dilation::constructions::{
    double_hopf, exotic_dehn_surface, hopf_torus, l_curve_system, octagon_curve_system,
    one_point_genus2_surface, square_torus,
};
use dilation::flow::{
    certify_multitwist, directional_decomposition, shear_data, Certificate, CylinderKind,
    Direction, FlowContext, FlowOptions, Start, TraceOutcome,
};
use dilation::homology::{
    annihilator, check_compatible_prop, compatible_holonomy_space, l_example_classes,
    octagon_classes, same_span, standard_form, twist_action, HomologyClass, PropCheck,
};
use dilation::thurston::{thurston_construct, ModulusSpec, ThurstonOptions};
use dilation::witness::{is_affine_automorphism, search_isomorphism, Automorphism, SearchBudget};
use dilation::{
    apply_matrix, classify_trace, euler_genus, holonomy_basis, validate, DilationSurface, Mat2,
    Vec2,
};

use crate::format::{self, parse_csys, parse_surface, write_csys, write_surface, SurfaceFile};
use crate::{random_det1, svg};

#[derive(Parser, Debug)]
#[command(
    name = "dilsurf",
    version,
    about = "Dilation surfaces: validate, trace, certify, construct"
)]
pub struct Cli {
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Step budget for straight-line flow.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_steps: usize,
    /// Search budget for isomorphism search.
    #[arg(long, global = true, default_value_t = 64)]
    pub max_flips: usize,
    /// Seed for random matrix sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check gluings, cone angles and link holonomy.
    Validate { path: Option<PathBuf> },
    /// Vertex classes, genus and holonomy values.
    Info { path: Option<PathBuf> },
    /// Act by a matrix; writes the new surface.
    Apply {
        path: Option<PathBuf>,
        #[arg(long, value_parser = parse_matrix)]
        matrix: Mat2,
    },
    /// Follow a straight ray.
    Trace(TraceArgs),
    /// Cylinder decomposition in a direction.
    Decompose {
        path: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        dir: f64,
    },
    /// Build the surface of a curve system.
    Thurston {
        path: Option<PathBuf>,
        /// Write the assembled surface here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Certify that a matrix is the derivative of an affine automorphism.
    Certify {
        path: Option<PathBuf>,
        #[arg(long, value_parser = parse_matrix)]
        matrix: Option<Mat2>,
        /// Also test this many random det-1 matrices (see --seed).
        #[arg(long, default_value_t = 0)]
        random: usize,
    },
    /// Search for an equivalence between two surfaces.
    Isom { first: PathBuf, second: PathBuf },
    /// Write a built-in surface or curve system.
    Gen(GenArgs),
    /// Holonomy characters compatible with a twist product.
    Compat(CompatArgs),
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    pub path: Option<PathBuf>,
    /// Heading angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub dir: f64,
    #[arg(long, default_value_t = 0)]
    pub polygon: usize,
    /// Start point `x,y` in the polygon's chart (default: its centroid).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: Option<Vec2>,
    /// Start at a cone point instead: `class,sector`.
    #[arg(long, value_parser = parse_pair, conflicts_with = "point")]
    pub vertex: Option<(usize, usize)>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    SquareTorus,
    Hopf,
    /// The genus-two surface with one 6 pi cone point.
    Genus2,
    DoubleHopf,
    Exotic,
    /// Surface of the octagon curve system.
    Octagon,
    /// Surface of the L curve system.
    LSurface,
    OctagonCsys,
    LCsys,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    pub kind: GenKind,
    #[arg(long, default_value_t = 3)]
    pub genus: usize,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub height: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    Octagon,
    L,
}

#[derive(Args, Debug)]
pub struct CompatArgs {
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub example: Option<Example>,
    /// Genus for the standard intersection form.
    #[arg(long)]
    pub genus: Option<usize>,
    /// Intersection form, row-major, comma separated (overrides --genus).
    #[arg(long, allow_hyphen_values = true)]
    pub form: Option<String>,
    #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
    pub alpha: Option<HomologyClass>,
    /// Repeat for a multicurve.
    #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
    pub beta: Vec<HomologyClass>,
}

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect()
}

fn parse_matrix(s: &str) -> Result<Mat2, String> {
    match floats(s)?.as_slice() {
        [a, b, c, d] => Ok(Mat2::new(*a, *b, *c, *d)),
        _ => Err("expected a,b,c,d".into()),
    }
}

fn parse_point(s: &str) -> Result<Vec2, String> {
    match floats(s)?.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err("expected x,y".into()),
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected class,sector")?;
    Ok((
        a.trim().parse().map_err(|_| "bad class")?,
        b.trim().parse().map_err(|_| "bad sector")?,
    ))
}

fn parse_ints(s: &str) -> Result<HomologyClass, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("`{t}` is not an integer"))
        })
        .collect()
}

/// A failed operation: library error name and message.
#[derive(Debug)]
pub struct Failure {
    pub name: String,
    pub message: String,
}

impl Failure {
    fn new(name: &str, message: impl Into<String>) -> Self {
        Failure {
            name: name.into(),
            message: message.into(),
        }
    }

    fn from_err<E: Debug + Display>(e: E) -> Self {
        let dbg = format!("{e:?}");
        let name = dbg
            .split(['(', ' ', '{'])
            .next()
            .unwrap_or("Error")
            .to_string();
        Failure {
            name,
            message: e.to_string(),
        }
    }
}

/// What a command produced. `code` is 0 or 1.
struct Report {
    text: String,
    json: Value,
    code: i32,
    /// Raw output (surface files) bypasses text/json rendering.
    raw: Option<String>,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            code: 0,
            raw: None,
        }
    }

    fn raw(s: String) -> Self {
        Report {
            text: String::new(),
            json: Value::Null,
            code: 0,
            raw: Some(s),
        }
    }
}

/// Rounds to 12 significant digits for display.
pub fn num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{r}")
}

fn mat(m: &Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        num(m.a),
        num(m.b),
        num(m.c),
        num(m.d)
    )
}

fn mat_json(m: &Mat2) -> Value {
    json!([[m.a, m.b], [m.c, m.d]])
}

struct Ctx<'a> {
    stdin: &'a mut dyn Read,
    tol: f64,
    flow: FlowOptions,
    budget: SearchBudget,
    seed: u64,
}

impl Ctx<'_> {
    fn read(&mut self, path: Option<&Path>) -> Result<String, Failure> {
        let mut s = String::new();
        match path {
            Some(p) if p != Path::new("-") => {
                s = std::fs::read_to_string(p)
                    .map_err(|e| Failure::new("Io", format!("{}: {e}", p.display())))?
            }
            _ => {
                self.stdin
                    .read_to_string(&mut s)
                    .map_err(|e| Failure::new("Io", format!("stdin: {e}")))?;
            }
        }
        Ok(s)
    }

    fn surface(&mut self, path: Option<&Path>) -> Result<SurfaceFile, Failure> {
        let text = self.read(path)?;
        let name = path.map_or("<stdin>".to_string(), |p| p.display().to_string());
        let mut f =
            parse_surface(&text).map_err(|e| Failure::new("ParseError", format!("{name}: {e}")))?;
        f.surface = f.surface.with_tolerance(self.tol);
        Ok(f)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
}

/// Runs the CLI; returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let msg = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(msg.as_bytes())
            } else {
                stderr.write_all(msg.as_bytes())
            };
            return code;
        }
    };
    let json = cli.json;
    let mut ctx = Ctx {
        stdin,
        tol: cli.tol,
        flow: FlowOptions {
            max_steps: cli.max_steps,
            tol: cli.tol,
            ..FlowOptions::default()
        },
        budget: SearchBudget {
            max_flips: cli.max_flips,
            ..SearchBudget::default()
        },
        seed: cli.seed,
    };
    match dispatch(&mut ctx, cli.command) {
        Ok(r) => {
            let out = match (&r.raw, json) {
                (Some(raw), _) => raw.clone(),
                (None, true) => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&r.json).unwrap_or_default()
                ),
                (None, false) => r.text.clone(),
            };
            let _ = stdout.write_all(out.as_bytes());
            r.code
        }
        Err(f) => {
            if json {
                let v = json!({ "error": f.name, "message": f.message });
                let _ = writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&v).unwrap_or_default()
                );
            }
            let _ = writeln!(stderr, "error: {}: {}", f.name, f.message);
            1
        }
    }
}

fn dispatch(ctx: &mut Ctx, cmd: Command) -> Result<Report, Failure> {
    match cmd {
        Command::Validate { path } => cmd_validate(ctx, path.as_deref()),
        Command::Info { path } => cmd_info(ctx, path.as_deref()),
        Command::Apply { path, matrix } => {
            let f = ctx.surface(path.as_deref())?;
            let s = apply_matrix(&f.surface, &matrix).map_err(Failure::from_err)?;
            Ok(Report::raw(write_surface(&s)))
        }
        Command::Trace(a) => cmd_trace(ctx, a),
        Command::Decompose { path, dir } => cmd_decompose(ctx, path.as_deref(), dir),
        Command::Thurston { path, out, svg } => {
            cmd_thurston(ctx, path.as_deref(), out.as_deref(), svg.as_deref())
        }
        Command::Certify {
            path,
            matrix,
            random,
        } => cmd_certify(ctx, path.as_deref(), matrix, random),
        Command::Isom { first, second } => {
            let a = ctx.surface(Some(&first))?.surface;
            let b = ctx.surface(Some(&second))?.surface;
            match search_isomorphism(&a, &b, ctx.budget) {
                Ok(w) => Ok(Report::ok(
                    format!("Verified: {} pieces, root map {}\n", w.len(), w.global),
                    json!({ "result": "Verified", "pieces": w.len(),
                            "root_map": { "scale": w.global.scale, "shift": [w.global.shift.x, w.global.shift.y] } }),
                )),
                Err(e) => Err(Failure::from_err(e)),
            }
        }
        Command::Gen(a) => cmd_gen(ctx, a),
        Command::Compat(a) => cmd_compat(a),
    }
}

fn cmd_validate(ctx: &mut Ctx, path: Option<&Path>) -> Result<Report, Failure> {
    let s = ctx.surface(path)?.surface;
    let r = validate(&s);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "polygons {}, gluings {}",
        s.polygons().len(),
        s.gluings().len()
    );
    for v in &r.vertices {
        let _ = writeln!(
            text,
            "vertex class {}: {} corners, cone angle {} pi, link holonomy {}",
            v.class,
            v.corners.len(),
            v.multiple,
            num(v.link_holonomy)
        );
    }
    for p in &r.problems {
        let _ = writeln!(text, "problem: {p}");
    }
    let _ = writeln!(text, "{}", if r.pass { "PASS" } else { "FAIL" });
    let json = json!({
        "pass": r.pass,
        "edges": r.edges.iter().map(|e| json!({
            "edge": e.edge.to_string(), "gluing": e.gluing, "matches": e.matches })).collect::<Vec<_>>(),
        "vertices": r.vertices.iter().map(|v| json!({
            "class": v.class, "corners": v.corners.len(), "cone_angle": v.cone_angle,
            "multiple": v.multiple, "link_holonomy": v.link_holonomy, "regular": v.regular })).collect::<Vec<_>>(),
        "problems": r.problems.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
    });
    Ok(Report {
        text,
        json,
        code: if r.pass { 0 } else { 1 },
        raw: None,
    })
}

fn cmd_info(ctx: &mut Ctx, path: Option<&Path>) -> Result<Report, Failure> {
    let s = ctx.surface(path)?.surface;
    let classes = s.vertex_classes().map_err(Failure::from_err)?;
    let e = euler_genus(&s).map_err(Failure::from_err)?;
    let h = holonomy_basis(&s).map_err(Failure::from_err)?;
    let values = h.homology_values();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "polygons {}, gluings {}, area {}",
        s.polygons().len(),
        s.gluings().len(),
        num(s.area())
    );
    let _ = writeln!(text, "V {} E {} F {}, genus {}", e.v, e.e, e.f, e.genus);
    for (i, c) in classes.iter().enumerate() {
        let _ = writeln!(text, "vertex class {i}: cone angle {} pi", c.multiple);
    }
    let _ = writeln!(text, "half-translation: {}", s.is_half_translation());
    let vals: Vec<String> = values.iter().map(|v| num(*v)).collect();
    let _ = writeln!(text, "holonomy values: [{}]", vals.join(", "));
    let json = json!({
        "polygons": s.polygons().len(), "gluings": s.gluings().len(), "area": s.area(),
        "vertices": e.v, "edges": e.e, "faces": e.f, "genus": e.genus,
        "cone_multiples": classes.iter().map(|c| c.multiple).collect::<Vec<_>>(),
        "half_translation": s.is_half_translation(),
        "holonomy_values": values,
        "generators": h.generators.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    });
    Ok(Report::ok(text, json))
}

fn outcome_json(o: &TraceOutcome) -> Value {
    match o {
        TraceOutcome::SaddleConnection {
            end_class,
            length,
            segments,
            ..
        } => json!({
            "outcome": "SaddleConnection", "end_class": end_class, "length": length, "segments": segments.len() }),
        TraceOutcome::ClosedOrbit {
            alpha,
            kind,
            core,
            cycle_length,
            segments,
            ..
        } => json!({
            "outcome": "ClosedOrbit", "alpha": alpha, "kind": kind.to_string(), "core": core.to_string(),
            "cycle_length": cycle_length, "segments": segments.len() }),
        TraceOutcome::Budget { steps, segments } => json!({
            "outcome": "Budget", "steps": steps, "segments": segments.len() }),
    }
}

fn outcome_text(o: &TraceOutcome) -> String {
    match o {
        TraceOutcome::SaddleConnection {
            end_class,
            length,
            segments,
            ..
        } => format!(
            "SaddleConnection to vertex class {end_class}, length {}, {} segments\n",
            num(*length),
            segments.len()
        ),
        TraceOutcome::ClosedOrbit {
            alpha,
            kind,
            core,
            cycle_length,
            segments,
            ..
        } => format!(
            "ClosedOrbit alpha = {} ({kind}), core {core}, cycle length {}, {} segments\n",
            num(*alpha),
            num(*cycle_length),
            segments.len()
        ),
        TraceOutcome::Budget { steps, segments } => {
            format!(
                "Budget exhausted after {steps} steps, {} segments\n",
                segments.len()
            )
        }
    }
}

fn cmd_trace(ctx: &mut Ctx, a: TraceArgs) -> Result<Report, Failure> {
    let s = ctx.surface(a.path.as_deref())?.surface;
    let fc = FlowContext::new(&s).map_err(Failure::from_err)?;
    let start = match (a.vertex, a.point) {
        (Some((class, sector)), _) => Start::Vertex { class, sector },
        (None, p) => {
            if a.polygon >= s.polygons().len() {
                return Err(Failure::new(
                    "BadStart",
                    format!("no polygon {}", a.polygon),
                ));
            }
            Start::Point {
                polygon: a.polygon,
                point: p.unwrap_or_else(|| s.polygon(a.polygon).centroid()),
            }
        }
    };
    let o = fc
        .trace(start, a.dir, &ctx.flow)
        .map_err(Failure::from_err)?;
    if let Some(path) = &a.svg {
        write_file(path, &svg::render(&s, &[o.segments()]))?;
    }
    Ok(Report::ok(outcome_text(&o), outcome_json(&o)))
}

fn cmd_decompose(ctx: &mut Ctx, path: Option<&Path>, dir: f64) -> Result<Report, Failure> {
    let s = ctx.surface(path)?.surface;
    let d =
        directional_decomposition(&s, Direction::new(dir), &ctx.flow).map_err(Failure::from_err)?;
    let mut text = String::new();
    let _ = writeln!(text, "direction {}", num(d.direction.angle()));
    let _ = writeln!(text, "saddle connections: {}", d.saddle_connections.len());
    let mut cyl = Vec::new();
    for (i, c) in d.cylinders.iter().enumerate() {
        let hol = dilation::loop_holonomy(&s, &c.core)
            .map(|h| h.0)
            .unwrap_or(f64::NAN);
        match c.kind {
            CylinderKind::Euclidean {
                modulus,
                circumference,
                height,
            } => {
                let _ = writeln!(
                    text,
                    "cylinder {i}: Euclidean, modulus {}, circumference {}, height {}, core {}",
                    num(modulus),
                    num(circumference),
                    num(height),
                    c.core
                );
                cyl.push(json!({ "kind": "Euclidean", "modulus": modulus, "circumference": circumference,
                                 "height": height, "core": c.core.to_string(), "core_holonomy": hol }));
            }
            CylinderKind::Dilation { holonomy, multiple } => {
                let _ = writeln!(
                    text,
                    "cylinder {i}: Dilation, holonomy {}, angle {multiple} pi, core {}",
                    num(holonomy),
                    c.core
                );
                cyl.push(
                    json!({ "kind": "Dilation", "holonomy": holonomy, "multiple": multiple,
                                 "core": c.core.to_string(), "core_holonomy": hol }),
                );
            }
        }
    }
    let json = json!({ "direction": d.direction.angle(), "saddle_connections": d.saddle_connections.len(),
                       "cylinders": cyl });
    Ok(Report::ok(text, json))
}

fn cert_text(name: &str, c: &Result<Certificate, dilation::flow::CertifyError>) -> (String, Value) {
    match c {
        Ok(c) => {
            let twists: Vec<Value> = c.cylinders.iter().map(|k| json!(k.twists)).collect();
            let t: Vec<String> = c
                .cylinders
                .iter()
                .map(|k| k.twists.map_or("dilation".to_string(), |n| n.to_string()))
                .collect();
            (
                format!(
                    "certificate {name}: multitwist, direction {}, {} cylinders, twists [{}]\n",
                    num(c.direction.angle()),
                    c.cylinders.len(),
                    t.join(", ")
                ),
                json!({ "ok": true, "direction": c.direction.angle(), "shear": c.shear, "twists": twists }),
            )
        }
        Err(e) => {
            let f = Failure::from_err(e);
            (
                format!("certificate {name}: {}: {}\n", f.name, f.message),
                json!({ "ok": false, "error": f.name }),
            )
        }
    }
}

fn cmd_thurston(
    ctx: &mut Ctx,
    path: Option<&Path>,
    out: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<Report, Failure> {
    let text_in = ctx.read(path)?;
    let cf = parse_csys(&text_in).map_err(|e| Failure::new("ParseError", e.to_string()))?;
    let opts = ThurstonOptions {
        flow: ctx.flow,
        ..ThurstonOptions::default()
    };
    let o = thurston_construct(&cf.system, &cf.moduli, &opts).map_err(Failure::from_err)?;
    let genus = euler_genus(&o.surface).map_err(Failure::from_err)?.genus;
    let (ta, ja) = cert_text("T_alpha", &o.cert_alpha);
    let (tb, jb) = cert_text("T_beta", &o.cert_beta);
    let mut text = String::new();
    let _ = writeln!(text, "lambda_pf = {}", num(o.pf.lambda_pf));
    let _ = writeln!(
        text,
        "residual = {:e}, iterations = {}",
        o.pf.residual, o.pf.iterations
    );
    let _ = writeln!(text, "mu = {}", num(o.shear));
    let _ = writeln!(text, "D(T_alpha) = {}", mat(&o.d_talpha));
    let _ = writeln!(text, "D(T_beta) = {}", mat(&o.d_tbeta));
    let names = cf.alpha_names.iter().chain(&cf.beta_names);
    let w: Vec<String> = names
        .zip(&o.pf.v)
        .map(|(n, v)| format!("{n}={}", num(*v)))
        .collect();
    let _ = writeln!(text, "widths: {}", w.join(" "));
    let _ = writeln!(text, "genus = {genus}");
    text.push_str(&ta);
    text.push_str(&tb);
    if let Some(p) = out {
        write_file(p, &write_surface(&o.surface))?;
    }
    if let Some(p) = svg_path {
        write_file(p, &svg::render(&o.surface, &[]))?;
    }
    let code = if o.cert_alpha.is_ok() && o.cert_beta.is_ok() {
        0
    } else {
        1
    };
    let json = json!({
        "lambda_pf": o.pf.lambda_pf, "residual": o.pf.residual, "iterations": o.pf.iterations,
        "eigenvector": o.pf.v, "mu": o.shear, "genus": genus,
        "d_talpha": mat_json(&o.d_talpha), "d_tbeta": mat_json(&o.d_tbeta),
        "cert_alpha": ja, "cert_beta": jb,
    });
    Ok(Report {
        text,
        json,
        code,
        raw: None,
    })
}

/// Parabolic matrices go through the multitwist certificate first; anything
/// else (or a failed certificate) through a witness, from the file if it
/// carries one for this matrix, otherwise from search.
fn certify_one(ctx: &Ctx, f: &SurfaceFile, m: &Mat2) -> Result<(String, Value, bool), Failure> {
    let s = &f.surface;
    let class = classify_trace(m, ctx.tol.max(1e-9)).map_err(Failure::from_err)?;
    let mut notes = Vec::new();
    if shear_data(m, ctx.tol.max(1e-9)).is_ok() {
        let c = certify_multitwist(s, m, &ctx.flow, 1e-6);
        let (t, j) = cert_text("multitwist", &c);
        if c.is_ok() {
            return Ok((
                format!("{}: Verified (multitwist)\n{t}", mat(m)),
                json!({ "matrix": mat_json(m),
                "trace_class": class.to_string(), "result": "Verified", "path": "multitwist", "certificate": j }),
                true,
            ));
        }
        notes.push(t.trim_end().to_string());
    }
    let stored = f.witness.as_ref().filter(|(wm, _)| {
        [wm.a - m.a, wm.b - m.b, wm.c - m.c, wm.d - m.d]
            .iter()
            .all(|d| d.abs() <= 1e-12)
    });
    let (path, r) = match stored {
        Some((_, w)) => ("witness", is_affine_automorphism(s, m, Some(w), ctx.budget)),
        None => ("search", is_affine_automorphism(s, m, None, ctx.budget)),
    };
    match r.map_err(Failure::from_err)? {
        Automorphism::Verified(w) => Ok((
            format!("{}: Verified ({path}), {} pieces\n", mat(m), w.len()),
            json!({ "matrix": mat_json(m), "trace_class": class.to_string(), "result": "Verified",
                    "path": path, "pieces": w.len() }),
            true,
        )),
        Automorphism::NotFound(why) => {
            notes.push(why);
            Ok((
                format!("{}: NotFound ({path}): {}\n", mat(m), notes.join("; ")),
                json!({ "matrix": mat_json(m), "trace_class": class.to_string(), "result": "NotFound",
                        "path": path, "reason": notes.join("; ") }),
                false,
            ))
        }
    }
}

fn cmd_certify(
    ctx: &mut Ctx,
    path: Option<&Path>,
    matrix: Option<Mat2>,
    random: usize,
) -> Result<Report, Failure> {
    let f = ctx.surface(path)?;
    let mut mats: Vec<Mat2> = matrix.into_iter().collect();
    if random > 0 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
        mats.extend((0..random).map(|_| random_det1(&mut rng)));
    }
    if mats.is_empty() {
        return Err(Failure::new("Usage", "give --matrix or --random"));
    }
    let mut text = String::new();
    let mut results = Vec::new();
    let mut all = true;
    for m in &mats {
        let (t, j, ok) = certify_one(ctx, &f, m)?;
        text.push_str(&t);
        results.push(j);
        all &= ok;
    }
    Ok(Report {
        text,
        json: json!({ "results": results }),
        code: if all { 0 } else { 1 },
        raw: None,
    })
}

fn cmd_gen(ctx: &mut Ctx, a: GenArgs) -> Result<Report, Failure> {
    let thurston = |cs, n: usize| -> Result<DilationSurface, Failure> {
        let opts = ThurstonOptions {
            flow: ctx.flow,
            ..ThurstonOptions::default()
        };
        thurston_construct(cs, &ModulusSpec::ones(n), &opts)
            .map(|o| o.surface)
            .map_err(Failure::from_err)
    };
    let positive = |name: &str, x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Failure::new("Usage", format!("--{name} must be positive")))
        }
    };
    let s = match a.kind {
        GenKind::SquareTorus => {
            positive("width", a.width)?;
            positive("height", a.height)?;
            square_torus(a.width, a.height)
        }
        GenKind::Hopf => {
            positive("lambda", a.lambda)?;
            hopf_torus(a.lambda)
        }
        GenKind::Genus2 => one_point_genus2_surface(),
        GenKind::DoubleHopf => {
            positive("lambda", a.lambda)?;
            double_hopf(a.lambda)
        }
        GenKind::Exotic => {
            if a.genus < 3 {
                return Err(Failure::new("Usage", "--genus must be at least 3"));
            }
            let e = exotic_dehn_surface(a.genus).map_err(Failure::from_err)?;
            let f = SurfaceFile {
                surface: e.surface,
                witness: Some((e.matrix, e.witness)),
            };
            return Ok(Report::raw(format::write_surface_file(&f)));
        }
        GenKind::Octagon => {
            let cs = octagon_curve_system();
            thurston(&cs, cs.size())?
        }
        GenKind::LSurface => {
            positive("a", a.a)?;
            let cs = l_curve_system(a.a);
            thurston(&cs, cs.size())?
        }
        GenKind::OctagonCsys => return Ok(Report::raw(write_csys(&octagon_curve_system(), None))),
        GenKind::LCsys => {
            positive("a", a.a)?;
            return Ok(Report::raw(write_csys(&l_curve_system(a.a), None)));
        }
    };
    Ok(Report::raw(write_surface(&s)))
}

fn cmd_compat(a: CompatArgs) -> Result<Report, Failure> {
    let (alpha, betas, j) = match a.example {
        Some(Example::Octagon) => {
            let (al, b, j) = octagon_classes();
            (al, vec![b], j)
        }
        Some(Example::L) => {
            let (al, [b1, b2], j) = l_example_classes();
            (al, vec![b1, b2], j)
        }
        None => {
            let alpha = a
                .alpha
                .ok_or_else(|| Failure::new("Usage", "give --example or --alpha/--beta"))?;
            if a.beta.is_empty() {
                return Err(Failure::new("Usage", "give at least one --beta"));
            }
            let j = match (&a.form, a.genus) {
                (Some(f), _) => {
                    let v = parse_ints(f).map_err(|e| Failure::new("Usage", e))?;
                    let n = (v.len() as f64).sqrt() as usize;
                    if n * n != v.len() {
                        return Err(Failure::new("Usage", "--form must be a square matrix"));
                    }
                    v.chunks(n).map(|r| r.to_vec()).collect()
                }
                (None, Some(g)) => standard_form(g),
                (None, None) => standard_form(alpha.len() / 2),
            };
            (alpha, a.beta, j)
        }
    };
    let mut word = vec![(alpha.clone(), 1)];
    word.extend(betas.iter().map(|b| (b.clone(), -1)));
    let psi = twist_action(&word, &j).map_err(Failure::from_err)?;
    let comp = compatible_holonomy_space(&psi);
    let n = j.len();
    let mut curves = vec![alpha.clone()];
    curves.extend(betas.iter().cloned());
    let ann = annihilator(&curves, n);
    let equal = same_span(&comp, &ann, n);
    let prop = if betas.len() == 1 {
        match check_compatible_prop(&alpha, &betas[0], &j).map_err(Failure::from_err)? {
            PropCheck::NotApplicable => "not applicable (zero intersection)".to_string(),
            p => (if p.holds() { "holds" } else { "fails" }).to_string(),
        }
    } else {
        "not applicable (multicurve)".to_string()
    };
    let rows = |v: &[HomologyClass]| {
        v.iter()
            .map(|r| format!("{r:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut text = String::new();
    let _ = writeln!(text, "psi = {:?}", psi);
    let _ = writeln!(
        text,
        "compatible space: dimension {} basis {}",
        comp.len(),
        rows(&comp)
    );
    let _ = writeln!(
        text,
        "annihilator of curves: dimension {} basis {}",
        ann.len(),
        rows(&ann)
    );
    let _ = writeln!(text, "equal: {equal}");
    let _ = writeln!(text, "proposition: {prop}");
    let json = json!({ "psi": psi, "compatible": comp, "annihilator": ann, "equal": equal, "proposition": prop });
    Ok(Report::ok(text, json))
}
