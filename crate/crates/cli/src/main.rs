mod body;
mod svg;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hilbert_core::discretization::{
    build_graph, build_net, certify, default_rho, quasi_isometry_report, DiscretizationGraph,
};
use hilbert_core::hilbert_measure::{folner_ratio, growth_curve};
use hilbert_core::hilbert_metric::{
    distance_with_error, horosphere_polyline, sphere_polyline_adaptive, BallSpec, HoroballSpec,
};
use hilbert_core::spectral::{
    amenability_verdict, ball_dirichlet_mask, lambda1_upper_estimate, spectral_radius, MarkovSystem, VerdictConfig,
    SPECTRAL_MAX_ITER, SPECTRAL_TOL,
};
use hilbert_core::{selftest, ConvexBody, Point};
use serde_json::{json, Value};

use body::{parse_list, parse_point, List, Shape};

/// Hilbert geometry experiments on bounded convex bodies.
///
/// Every subcommand prints a JSON summary on stdout. With --out DIR it also
/// writes its artifacts (CSV, SVG, DOT) there. CSV files start with a
/// `# seed,N` line. Exit codes: 0 success, 1 invalid input, 2 numerical
/// non-convergence; errors are reported as JSON on stderr.
#[derive(Parser, Debug)]
#[command(name = "hilbert", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON body file, e.g. {"type":"polygon","vertices":[[0,0],[1,0],[0,1]]}.
    /// Types: polygon, regular_polygon, ellipsoid, ball, simplex, superellipse.
    #[arg(long, global = true)]
    body: Option<PathBuf>,
    /// Built-in body used when --body is absent.
    #[arg(long, global = true, value_enum, default_value = "triangle")]
    shape: Shape,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Directory for artifacts (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Convergence tolerance for the spectral solvers.
    #[arg(long, global = true, default_value_t = SPECTRAL_TOL)]
    tol: f64,
    /// Worker threads (default: available parallelism). Results do not
    /// depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Hilbert distance between two points. Summary: distance, error.
    Distance {
        #[arg(long, value_parser = parse_point)]
        p: Point,
        #[arg(long, value_parser = parse_point)]
        q: Point,
    },
    /// Metric spheres around a centre. Writes ball.csv (radius,index,x,y)
    /// and ball.svg.
    Ball {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, value_parser = parse_list, default_value = "0.5,1,2,3")]
        radii: List,
        /// Largest Hilbert length of a polyline segment.
        #[arg(long, default_value_t = 0.05)]
        max_segment: f64,
    },
    /// Horospheres at a boundary point through one or more anchors. Writes
    /// horosphere.csv (anchor,index,x,y) and horosphere.svg.
    Horosphere {
        /// Boundary point (default: first polygon vertex, or the exit of the
        /// ray from the centre along +x).
        #[arg(long, value_parser = parse_point)]
        base: Option<Point>,
        /// Interior anchors; repeatable (default: three points between the
        /// centre and the base).
        #[arg(long, value_parser = parse_point)]
        anchor: Vec<Point>,
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// ε-separated net of a ball. Writes net.csv; summary includes the
    /// net certificate.
    Net {
        #[command(flatten)]
        net: NetArgs,
    },
    /// Net plus its 3ρ-proximity graph. Writes net.csv, graph.dot and
    /// graph.txt (adjacency lists).
    Graph {
        #[command(flatten)]
        net: NetArgs,
        /// Graph scale ρ (default: max(ε, covering estimate)).
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Ball measures μ(B(x0,R)) and growth fits. Writes growth.csv.
    Growth {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, value_parser = parse_list, default_value = "1,2,3,4,5,6,7,8,9,10,11,12")]
        radii: List,
    },
    /// Sphere length over ball measure. Writes folner.csv.
    Folner {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, value_parser = parse_list, default_value = "2,4,6,8,10")]
        radii: List,
    },
    /// Dirichlet spectral radii of the walk on a net graph, one per ball
    /// radius. Writes spectrum.csv.
    Spectrum {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, value_parser = parse_list, default_value = "4,6,8")]
        radii: List,
    },
    /// Rayleigh-quotient upper estimate of λ₁. Writes rayleigh.csv.
    Rayleigh {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        /// Negative entries need the `--eps-grid=-0.5,0` form.
        #[arg(long, value_parser = parse_list, default_value = "0.02,0.05,0.1")]
        eps_grid: List,
        #[arg(long, value_parser = parse_list, default_value = "12,14,16")]
        radii: List,
    },
    /// Amenability verdict from growth, Følner, spectral and λ₁ indicators.
    /// Writes verdict.csv.
    Verdict {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
    },
    /// Runs the numbered acceptance criteria (all by default) and prints
    /// one line per criterion on stderr. Writes selftest.csv.
    Selftest {
        /// Comma-separated criterion numbers.
        #[arg(long, value_parser = parse_list)]
        only: Option<List>,
    },
}

#[derive(Args, Debug)]
struct NetArgs {
    #[arg(long, value_parser = parse_point)]
    center: Option<Point>,
    #[arg(long, default_value_t = 4.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<hilbert_core::Error> for Failure {
    fn from(e: hilbert_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(format!("{e:#}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// What a subcommand produced: artifacts by file name, and the summary.
struct Output {
    files: Vec<(String, String)>,
    summary: Value,
    /// Set when a solver stopped before its tolerance; the output is still
    /// written and the exit code is 2.
    unconverged: Option<String>,
}

impl Output {
    fn new(summary: Value) -> Self {
        Output { files: Vec::new(), summary, unconverged: None }
    }

    fn csv(mut self, name: &str, seed: u64, body: &str) -> Self {
        self.files.push((name.into(), format!("# seed,{seed}\n{body}")));
        self
    }

    fn file(mut self, name: &str, body: String) -> Self {
        self.files.push((name.into(), body));
        self
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail("validation", &e.to_string(), 1);
        }
    };
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return fail("validation", "--threads must be at least 1", 1);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&cli) {
        Ok(out) => {
            if let Some(dir) = &cli.common.out {
                let written = std::fs::create_dir_all(dir)
                    .and_then(|_| out.files.iter().try_for_each(|(name, body)| std::fs::write(dir.join(name), body)));
                if let Err(e) = written {
                    return fail("io", &e.to_string(), 1);
                }
            }
            let mut summary = out.summary;
            summary["seed"] = json!(cli.common.seed);
            summary["files"] = json!(out.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>());
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
            match out.unconverged {
                Some(msg) => fail("non_convergence", &msg, 2),
                None => ExitCode::SUCCESS,
            }
        }
        Err(Failure::Invalid(m)) => fail("validation", &m, 1),
        Err(Failure::Numerical(m)) => fail("non_convergence", &m, 2),
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message.trim_end() }));
    ExitCode::from(code)
}

fn planar(body: &ConvexBody, what: &str) -> Result<(), Failure> {
    if body.dim() != 2 {
        return Err(Failure::Invalid(format!("{what} needs a planar body")));
    }
    Ok(())
}

fn positive(x: f64, name: &str) -> Result<(), Failure> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Failure::Invalid(format!("{name} must be positive")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let c = &cli.common;
    let spec = match &c.body {
        Some(path) => body::read_spec(path)?,
        None => c.shape.spec(),
    };
    let body = spec.build()?;
    positive(c.tol, "--tol")?;
    let center_or = |p: &Option<Point>| -> Result<Point, Failure> {
        let x = p.clone().unwrap_or_else(|| body::default_center(&spec, &body));
        if x.dim() != body.dim() {
            return Err(Failure::Invalid(format!("point has {} coordinates, body dimension is {}", x.dim(), body.dim())));
        }
        if !body.contains(&x)? {
            return Err(Failure::Invalid("point is not in the open body".into()));
        }
        Ok(x)
    };
    let described = json!({ "body": body.describe(), "spec": format!("{spec:?}") });
    let summary = |extra: Value| {
        let mut v = described.clone();
        if let (Some(a), Value::Object(b)) = (v.as_object_mut(), extra) {
            a.extend(b);
        }
        v
    };

    Ok(match &cli.cmd {
        Cmd::Distance { p, q } => {
            let (d, err) = distance_with_error(&body, p, q)?;
            Output::new(summary(json!({ "command": "distance", "distance": d, "error": err })))
        }
        Cmd::Ball { center, radii, max_segment } => {
            planar(&body, "ball")?;
            positive(*max_segment, "--max-segment")?;
            let x0 = center_or(center)?;
            let mut csv = String::from("radius,index,x,y\n");
            let mut layers = Vec::new();
            let mut lengths = Vec::new();
            for (k, &r) in radii.iter().enumerate() {
                positive(r, "radius")?;
                let pts = sphere_polyline_adaptive(&body, &BallSpec::new(x0.clone(), r), *max_segment)?;
                for (i, p) in pts.iter().enumerate() {
                    let _ = writeln!(csv, "{r},{i},{:.15e},{:.15e}", p[0], p[1]);
                }
                lengths.push(json!({ "radius": r, "vertices": pts.len() }));
                layers.push(svg::Layer { points: pts, closed: true, stroke: svg::PALETTE[k % svg::PALETTE.len()] });
            }
            let picture = svg::render(&svg::outline(&body, 512)?, &layers, &[x0.clone()]);
            Output::new(summary(json!({ "command": "ball", "center": x0, "spheres": lengths })))
                .csv("ball.csv", c.seed, &csv)
                .file("ball.svg", picture)
        }
        Cmd::Horosphere { base, anchor, points } => {
            planar(&body, "horosphere")?;
            let x0 = body::default_center(&spec, &body);
            let base = match base {
                Some(b) => b.clone(),
                None => match body.as_polytope() {
                    Some(p) => p.vertices[0].clone(),
                    None => {
                        let t = body.chord_params(&x0, &[1.0, 0.0])?.t_plus;
                        Point::xy(x0[0] + t, x0[1])
                    }
                },
            };
            let anchors: Vec<Point> = if anchor.is_empty() {
                // the base itself is on the boundary, so stay strictly inside
                [0.0, 0.4, 0.7]
                    .iter()
                    .map(|&s| Point::xy(x0[0] + s * (base[0] - x0[0]), x0[1] + s * (base[1] - x0[1])))
                    .collect()
            } else {
                anchor.iter().map(|a| center_or(&Some(a.clone()))).collect::<Result<_, _>>()?
            };
            let mut csv = String::from("anchor,index,x,y\n");
            let mut layers = Vec::new();
            for (k, a) in anchors.iter().enumerate() {
                let pts = horosphere_polyline(&body, &HoroballSpec::new(base.clone(), a.clone()), *points)?;
                for (i, p) in pts.iter().enumerate() {
                    let _ = writeln!(csv, "{k},{i},{:.15e},{:.15e}", p[0], p[1]);
                }
                layers.push(svg::Layer { points: pts, closed: false, stroke: svg::PALETTE[k % svg::PALETTE.len()] });
            }
            let mut marks = anchors.clone();
            marks.push(base.clone());
            let picture = svg::render(&svg::outline(&body, 512)?, &layers, &marks);
            Output::new(summary(json!({ "command": "horosphere", "base": base, "anchors": anchors })))
                .csv("horosphere.csv", c.seed, &csv)
                .file("horosphere.svg", picture)
        }
        Cmd::Net { net } => {
            let dg = net_graph(&body, net, None, &center_or(&net.center)?, c.seed)?;
            let cert = certify(&dg, 10_000, c.seed)?;
            let out = Output::new(summary(json!({
                "command": "net",
                "points": dg.net.len(),
                "epsilon": net.epsilon,
                "radius": net.radius,
                "certificate": cert,
                "passed": cert.passed(),
            })));
            out.csv("net.csv", c.seed, &dg.net.to_csv())
        }
        Cmd::Graph { net, rho } => {
            let dg = net_graph(&body, net, *rho, &center_or(&net.center)?, c.seed)?;
            let qi = quasi_isometry_report(&dg, 200, c.seed)?;
            let degrees = dg.graph.degrees();
            Output::new(summary(json!({
                "command": "graph",
                "vertices": dg.graph.len(),
                "edges": dg.graph.edge_count(),
                "rho": dg.rho,
                "max_degree": degrees.iter().max(),
                "connected": dg.graph.is_connected(),
                "quasi_isometry": qi,
            })))
            .csv("net.csv", c.seed, &dg.net.to_csv())
            .file("graph.dot", dg.graph.to_dot())
            .file("graph.txt", dg.graph.to_adjacency_text())
        }
        Cmd::Growth { center, radii } => {
            let x0 = center_or(center)?;
            let g = growth_curve(&body, &x0, radii)?;
            let mut csv = String::from("radius,volume,std_error\n");
            for (r, v) in g.radii.iter().zip(&g.volumes) {
                let _ = writeln!(csv, "{r},{:.12e},{:.3e}", v.value, v.std_error);
            }
            Output::new(summary(json!({
                "command": "growth",
                "center": x0,
                "fit_poly_exponent": g.fit_poly_exponent,
                "fit_exp_rate": g.fit_exp_rate,
                "poly_residual": g.poly_residual,
                "exp_residual": g.exp_residual,
                "classification": g.classification,
            })))
            .csv("growth.csv", c.seed, &csv)
        }
        Cmd::Folner { center, radii } => {
            planar(&body, "folner")?;
            let x0 = center_or(center)?;
            let mut csv = String::from("radius,boundary_length,volume,ratio\n");
            let mut ratios = Vec::new();
            for &r in radii.iter() {
                let f = folner_ratio(&body, &x0, r)?;
                let _ = writeln!(csv, "{r},{:.12e},{:.12e},{:.12e}", f.boundary_length, f.volume, f.ratio);
                ratios.push(f.ratio);
            }
            Output::new(summary(json!({ "command": "folner", "center": x0, "radii": radii.0, "ratios": ratios })))
                .csv("folner.csv", c.seed, &csv)
        }
        Cmd::Spectrum { center, epsilon, radii } => {
            let x0 = center_or(center)?;
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return Err(Failure::Invalid("radii must be positive".into()));
            }
            let r_max = radii.iter().cloned().fold(0.0, f64::max);
            let args = NetArgs { center: None, radius: r_max + 3.0 * epsilon, epsilon: *epsilon };
            let dg = net_graph(&body, &args, None, &x0, c.seed)?;
            let mut csv = String::from("radius,interior,rho,residual,iterations,converged\n");
            let mut rows = Vec::new();
            let mut unconverged = None;
            for &r in radii.iter() {
                let sys = MarkovSystem::from_mask(&dg.graph, ball_dirichlet_mask(&dg, r))?;
                let rep = spectral_radius(&sys, c.tol, SPECTRAL_MAX_ITER)?;
                let _ = writeln!(
                    csv,
                    "{r},{},{:.15e},{:.3e},{},{}",
                    rep.interior, rep.rho, rep.residual, rep.iterations, rep.converged
                );
                if !rep.converged {
                    unconverged = Some(format!("spectral radius at R={r} stopped at residual {:.3e}", rep.residual));
                }
                rows.push(json!({ "radius": r, "rho": rep.rho, "interior": rep.interior, "converged": rep.converged }));
            }
            let mut out = Output::new(summary(json!({
                "command": "spectrum",
                "center": x0,
                "net_points": dg.net.len(),
                "rows": rows,
            })))
            .csv("spectrum.csv", c.seed, &csv);
            out.unconverged = unconverged;
            out
        }
        Cmd::Rayleigh { center, eps_grid, radii } => {
            let x0 = center_or(center)?;
            let rep = lambda1_upper_estimate(&body, &x0, eps_grid, radii)?;
            let mut csv = String::from("epsilon,radius,value,quadrature_error\n");
            for g in &rep.grid {
                let _ = writeln!(csv, "{},{},{:.15e},{:.3e}", g.epsilon, g.radius, g.value, g.quadrature_error);
            }
            Output::new(summary(json!({
                "command": "rayleigh",
                "center": x0,
                "lambda_estimate": rep.lambda_estimate,
                "epsilon": rep.epsilon,
                "radius": rep.radius,
                "quadrature_error": rep.quadrature_error,
            })))
            .csv("rayleigh.csv", c.seed, &csv)
        }
        Cmd::Verdict { center, epsilon } => {
            let config = VerdictConfig {
                x0: Some(center_or(center)?),
                epsilon: *epsilon,
                seed: c.seed,
                ..Default::default()
            };
            let rep = amenability_verdict(&body, &config)?;
            let mut out = Output::new(summary(json!({
                "command": "verdict",
                "verdict": rep.verdict.as_str(),
                "indicators": rep.indicators,
                "net_points": rep.net_points,
            })))
            .csv("verdict.csv", c.seed, &rep.csv());
            if let Some(s) = rep.spectral.iter().find(|s| !s.converged) {
                out.unconverged = Some(format!("spectral radius at R={} did not converge", s.radius));
            }
            out
        }
        Cmd::Selftest { only } => {
            let ids: Vec<usize> = match only {
                None => Vec::new(),
                Some(v) => v
                    .iter()
                    .map(|&x| {
                        if x.fract() == 0.0 && (1.0..=selftest::CRITERIA as f64).contains(&x) {
                            Ok(x as usize)
                        } else {
                            Err(Failure::Invalid(format!("no criterion {x}")))
                        }
                    })
                    .collect::<Result<_, _>>()?,
            };
            let results = selftest::run(&ids, |r| eprintln!("{}", r.line()));
            let mut csv = String::from("criterion,pass,expected_failure,seconds,detail\n");
            for r in &results {
                let _ = writeln!(csv, "{},{},{},{:.1},\"{}\"", r.id, r.pass, r.expected_failure, r.seconds, r.detail.replace('"', "'"));
            }
            let unexpected: Vec<usize> = results.iter().filter(|r| !r.pass && !r.expected_failure).map(|r| r.id).collect();
            let out = Output::new(summary(json!({
                "command": "selftest",
                "passed": results.iter().filter(|r| r.pass).count(),
                "run": results.len(),
                "known_failures": results.iter().filter(|r| !r.pass && r.expected_failure).map(|r| r.id).collect::<Vec<_>>(),
                "unexpected_failures": unexpected,
            })))
            .csv("selftest.csv", c.seed, &csv);
            if !unexpected.is_empty() {
                // the summary is the useful output even on failure
                println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serialises"));
                return Err(Failure::Invalid(format!("criteria failed: {unexpected:?}")));
            }
            out
        }
    })
}

fn net_graph(body: &ConvexBody, a: &NetArgs, rho: Option<f64>, x0: &Point, seed: u64) -> Result<DiscretizationGraph, Failure> {
    positive(a.epsilon, "--epsilon")?;
    if !(a.radius >= 0.0 && a.radius.is_finite()) {
        return Err(Failure::Invalid("--radius must be finite and ≥ 0".into()));
    }
    let net = build_net(body, x0, a.radius, a.epsilon, seed)?;
    let rho = rho.unwrap_or_else(|| default_rho(&net));
    Ok(build_graph(net, rho)?)
}
