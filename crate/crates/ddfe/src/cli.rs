//! Command-line front end. One subcommand per pipeline:
//!
//! * `gen-data`          sample a material data set from a model
//! * `certify`           falsification search for a structural property
//! * `solve-classical`   Newton reference solve
//! * `solve-dd`          alternating data-driven solve
//! * `study-convergence` data-density sweep against the classical solution
//! * `report`            summarize report/study files as a table
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 certificate violation,
//! 3 solver non-convergence. All file outputs are atomic and reproducible
//! byte for byte under a fixed seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::certify::{self, Certificate, Property, QuasiGap, Verdict};
use crate::data::{sample_graph, DeviationPair, LocalDataSet, PhasePoint};
use crate::fem::{
    solve_classical, AffineMap, BcFile, ElementFields, Mesh, MeshFile, MeshProblem,
    SquareBoundary,
};
use crate::io;
use crate::model::{EnergyModel, ModelSpec};
use crate::solver::{solve_dd, study_convergence, Classification, DDConfig, ReportSummary, StudyTable};
use crate::tensor::Mat;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATED: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

const USAGE: &str = "\
ddfe — data-driven finite elasticity toolkit

USAGE:
    ddfe <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
    gen-data           sample a material data set from a model
    certify            run a falsification search for a material property
    solve-classical    Newton solve of the classical boundary-value problem
    solve-dd           alternating data-driven solve
    study-convergence  data-density sweep against the classical solution
    report             summarize report/study JSON files as a table

Run `ddfe <SUBCOMMAND> --help` for the flags of each subcommand.
";

const USAGE_GEN_DATA: &str = "\
ddfe gen-data — sample graph points (F, T(F) + noise) from a model

    --model <file.json>   model spec, e.g. {\"flavor\":\"hatW2\",\"n\":2,\"a\":0.25,\"beta\":0.4}
    --count <N>           number of points (required)
    --seed <k>            sampling seed (required)
    --noise <s>           relative stress noise level        [default: 0]
    --box <R>             Frobenius-norm sampling bound       [default: 3]
    --filter-det          keep only det F > 0 samples
    --filter-mb           drop points violating moment equilibrium
    --mb-tol <t>          moment-equilibrium tolerance        [default: 1e-10]
    --augment <m>         orbit augmentation factor           [default: 1]
    --out <file.csv>      output data set                     [default: data.csv]
";

const USAGE_CERTIFY: &str = "\
ddfe certify — search for violations of a material-law property

    --property <name>     one of: coercivity, polymonotonicity_2d,
                          polymonotonicity_3d, quasimonotonicity, growth,
                          frame_indifference, moment_equilibrium (required)
    --model <file.json>   model spec (graph-based checks)
    --data <file.csv>     data set (frame_indifference, moment_equilibrium)
    --budget <B>          sample budget (required)
    --seed <k>            sampling seed (required)
    --p <x>               growth/coercivity exponent   [default: from model]
    --grid <g>            quasimonotonicity grid       [default: 16]
    --c-prime <v>         3D gap constant              [default: estimated]
    --modulus <C>         deviation modulus for data-set checks [default: 1]
    --out <file.json>     certificate output           [default: cert.json]

Exit code 2 when the verdict is `violated`.
";

const USAGE_SOLVE_CLASSICAL: &str = "\
ddfe solve-classical — damped Newton solve of the classical problem

    --mesh <file.json>    mesh file, or:
    --square <N>          structured N x N unit-square mesh
    --square-boundary <b> all-dirichlet | clamped-ends  [default: clamped-ends]
    --bc <file.json>      boundary conditions (required)
    --model <file.json>   model spec (required)
    --tol <t>             residual tolerance            [default: 1e-11]
    --max-iter <m>        Newton iteration cap          [default: 60]
    --out <base>          writes <base>_elements.csv, <base>_nodes.csv
                                                        [default: fields]

Exit code 3 when Newton does not converge.
";

const USAGE_SOLVE_DD: &str = "\
ddfe solve-dd — alternating data-driven solve

    --mesh <file.json> | --square <N> [--square-boundary <b>]
    --bc <file.json>      boundary conditions (required)
    --data <file.csv>     material data set (required)
    --config <file.json>  solver config, e.g.
                          {\"dev\":{\"form\":\"quadratic\",\"modulus\":1.0},
                           \"max_outer\":200,\"seed\":1,\"init\":\"auto\"}
    --out <file.json>     report output                 [default: report.json]
    --fields <base>       also write field CSVs

Exit code 3 when the solve does not converge.
";

const USAGE_STUDY: &str = "\
ddfe study-convergence — J(N) sweep over data-set sizes

    --model <file.json>   model spec (required)
    --counts <a,b,c>      data-set sizes (required)
    --noise <s>           relative stress noise          [default: 0]
    --seed <k>            sampling seed                  [default: 1]
    --square <N>          structured mesh size           [default: 8]
    --mesh <file.json>    explicit mesh instead of --square
    --bc <file.json>      boundary conditions [default: 4% uniaxial stretch]
    --out <file.json>     study table output             [default: study.json]
";

const USAGE_REPORT: &str = "\
ddfe report — tabulate solve reports and study tables

    ddfe report <file.json> [<file.json> ...] [--out summary.csv]

Prints a Markdown table; rows from study tables are sorted by data count
and the J column is checked for monotone decrease.
";

struct Args {
    flags: BTreeMap<String, String>,
    positional: Vec<String>,
    help: bool,
}

impl Args {
    fn parse(tokens: &[String]) -> Args {
        let mut flags = BTreeMap::new();
        let mut positional = Vec::new();
        let mut help = false;
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            if tok == "--help" || tok == "-h" {
                help = true;
                i += 1;
            } else if let Some(name) = tok.strip_prefix("--") {
                let next_is_value = tokens
                    .get(i + 1)
                    .map(|t| !t.starts_with("--"))
                    .unwrap_or(false);
                if next_is_value {
                    flags.insert(name.to_string(), tokens[i + 1].clone());
                    i += 2;
                } else {
                    flags.insert(name.to_string(), String::new());
                    i += 1;
                }
            } else {
                positional.push(tok.clone());
                i += 1;
            }
        }
        Args {
            flags,
            positional,
            help,
        }
    }

    fn has(&self, name: &str) -> bool {
        self.flags.contains_key(name)
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags.get(name).map(String::as_str)
    }

    fn required(&self, name: &str) -> Result<&str> {
        self.get(name)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::InvalidParameter(format!("missing required flag --{name}")))
    }

    fn parse_num<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("flag --{name}: cannot parse {v:?}"))
            }),
        }
    }

    fn num_or<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T> {
        Ok(self.parse_num(name)?.unwrap_or(default))
    }

    fn required_num<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        self.required(name)?.parse::<T>().map_err(|_| {
            Error::InvalidParameter(format!(
                "flag --{name}: cannot parse {:?}",
                self.get(name).unwrap_or("")
            ))
        })
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let Some(subcommand) = argv.first() else {
        eprint!("{USAGE}");
        return EXIT_USAGE;
    };
    let args = Args::parse(&argv[1..]);
    let outcome = match subcommand.as_str() {
        "gen-data" => with_usage(&args, USAGE_GEN_DATA, cmd_gen_data),
        "certify" => with_usage(&args, USAGE_CERTIFY, cmd_certify),
        "solve-classical" => with_usage(&args, USAGE_SOLVE_CLASSICAL, cmd_solve_classical),
        "solve-dd" => with_usage(&args, USAGE_SOLVE_DD, cmd_solve_dd),
        "study-convergence" => with_usage(&args, USAGE_STUDY, cmd_study),
        "report" => with_usage(&args, USAGE_REPORT, cmd_report),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return EXIT_OK;
        }
        other => {
            eprintln!("error: unknown subcommand {other:?}\n");
            eprint!("{USAGE}");
            return EXIT_USAGE;
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn with_usage(args: &Args, usage: &str, f: impl Fn(&Args) -> Result<i32>) -> Result<i32> {
    if args.help {
        print!("{usage}");
        return Ok(EXIT_OK);
    }
    f(args)
}

fn load_model(path: &str) -> Result<EnergyModel> {
    let spec: ModelSpec = io::read_json(Path::new(path))?;
    spec.build()
}

fn cmd_gen_data(args: &Args) -> Result<i32> {
    let model = load_model(args.required("model")?)?;
    let count: usize = args.required_num("count")?;
    let seed: u64 = args.required_num("seed")?;
    let noise: f64 = args.num_or("noise", 0.0)?;
    let box_bound: f64 = args.num_or("box", 3.0)?;
    let mut data = sample_graph(&model, box_bound, count, noise, seed, args.has("filter-det"))?;
    if args.has("filter-mb") {
        let tol: f64 = args.num_or("mb-tol", 1e-10)?;
        data = data.filter_moment_equilibrium(tol)?;
    }
    let augment: usize = args.num_or("augment", 1)?;
    if augment > 1 {
        data = data.augment_orbit(augment)?;
    }
    let out = PathBuf::from(args.get("out").unwrap_or("data.csv"));
    data.write_csv(&out)?;
    println!(
        "wrote {} points to {} (metadata sidecar {}.meta.json)",
        data.len(),
        out.display(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_certify(args: &Args) -> Result<i32> {
    let property = Property::parse(args.required("property")?).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "unknown property {:?}",
            args.get("property").unwrap_or("")
        ))
    })?;
    let budget: u64 = args.required_num("budget")?;
    let seed: u64 = args.required_num("seed")?;
    let out = PathBuf::from(args.get("out").unwrap_or("cert.json"));

    let model = match args.get("model") {
        Some(path) => Some(load_model(path)?),
        None => None,
    };
    let need_model = || {
        model
            .clone()
            .ok_or_else(|| Error::InvalidParameter("this property needs --model".into()))
    };

    let cert: Certificate = match property {
        Property::Coercivity => {
            let m = need_model()?;
            let p: f64 = args.num_or("p", m.coercivity_exponent())?;
            certify::check_coercivity(|x| m.stress(x), m.n(), p, budget, seed)?
        }
        Property::Polymonotonicity2d => certify::check_polymonotone_2d(&need_model()?, budget, seed)?,
        Property::Polymonotonicity3d => {
            let c_prime: Option<f64> = args.parse_num("c-prime")?;
            certify::check_polymonotone_3d(&need_model()?, budget, seed, c_prime)?
        }
        Property::Quasimonotonicity => {
            let m = need_model()?;
            let grid: usize = args.num_or("grid", 16)?;
            let c_prime: Option<f64> = args.parse_num("c-prime")?;
            let gap = if m.n() == 3 && c_prime.is_none() {
                let est = certify::estimate_cstar_constants(seed, 4000);
                QuasiGap::for_model(&m, Some(est["c_prime"]))
            } else {
                QuasiGap::for_model(&m, c_prime)
            };
            certify::check_quasimonotone(|x| m.stress(x), m.n(), gap, grid, budget, seed)?
        }
        Property::Growth => {
            let m = need_model()?;
            let p: f64 = args.num_or("p", m.coercivity_exponent())?;
            certify::check_growth(|x| m.stress(x), m.n(), p, budget, seed)?
        }
        Property::FrameIndifference | Property::MomentEquilibrium => {
            let data = match args.get("data") {
                Some(path) => LocalDataSet::read_csv(Path::new(path))?,
                None => LocalDataSet::graph(need_model()?),
            };
            let modulus: f64 = args.num_or("modulus", 1.0)?;
            let dev = DeviationPair::quadratic(modulus)?;
            match property {
                Property::FrameIndifference => {
                    certify::check_frame_indifference(&data, &dev, budget, seed)?
                }
                _ => certify::check_moment_equilibrium(&data, budget, seed)?,
            }
        }
    };
    io::write_json(&out, &cert)?;
    let verdict = match cert.verdict {
        Verdict::NoViolationFound => "no-violation-found",
        Verdict::Violated => "violated",
    };
    println!(
        "{verdict} after {} samples (certificate: {})",
        cert.samples_tested,
        out.display()
    );
    Ok(if cert.verdict == Verdict::Violated {
        EXIT_VIOLATED
    } else {
        EXIT_OK
    })
}

fn load_problem(args: &Args) -> Result<MeshProblem> {
    let bc: BcFile = match args.get("bc") {
        Some(path) => io::read_json(Path::new(path))?,
        None => BcFile {
            g_dirichlet: AffineMap::stretch_x(0.04),
            h_neumann: Default::default(),
            body_force: Default::default(),
        },
    };
    let mesh = if let Some(path) = args.get("mesh") {
        Mesh::from_file(io::read_json::<MeshFile>(Path::new(path))?)?
    } else {
        let n: usize = args.num_or("square", 8)?;
        let boundary = match args.get("square-boundary").unwrap_or("clamped-ends") {
            "all-dirichlet" => SquareBoundary::AllDirichlet,
            "clamped-ends" => SquareBoundary::ClampedEnds,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown boundary layout {other:?}"
                )))
            }
        };
        Mesh::unit_square(n, boundary)
    };
    MeshProblem::new(mesh, &bc)
}

fn cmd_solve_classical(args: &Args) -> Result<i32> {
    args.required("bc")?;
    let model = load_model(args.required("model")?)?;
    let mp = load_problem(args)?;
    let tol: f64 = args.num_or("tol", 1e-11)?;
    let max_iter: usize = args.num_or("max-iter", 60)?;
    match solve_classical(&mp, &model, tol, max_iter) {
        Ok(sol) => {
            let base = args.get("out").unwrap_or("fields");
            let fields = ElementFields {
                u: sol.u.clone(),
                f: sol.f.clone(),
                p: sol.p.clone(),
                lambda: vec![[0.0; 2]; mp.mesh.n_nodes()],
            };
            write_fields_csv(base, &mp, &fields, None)?;
            println!(
                "converged in {} Newton steps, residual {:e}, energy {:.12e}",
                sol.iterations,
                sol.residual_history.last().unwrap(),
                sol.energy
            );
            Ok(EXIT_OK)
        }
        Err(Error::NonConvergence {
            iterations,
            residual,
            history,
        }) => {
            eprintln!(
                "non-convergence after {iterations} iterations (residual {residual:e}, history {history:?})"
            );
            Ok(EXIT_NONCONVERGED)
        }
        Err(e) => Err(e),
    }
}

fn cmd_solve_dd(args: &Args) -> Result<i32> {
    args.required("bc")?;
    let mp = load_problem(args)?;
    let data = LocalDataSet::read_csv(Path::new(args.required("data")?))?;
    let cfg: DDConfig = io::read_json(Path::new(args.required("config")?))?;
    let report = solve_dd(&mp, &data, &cfg)?;
    let out = PathBuf::from(args.get("out").unwrap_or("report.json"));
    io::write_json(&out, &report.summary)?;
    if let Some(base) = args.get("fields") {
        write_fields_csv(base, &mp, &report.fields, Some(&report.data_branch))?;
    }
    eprintln!("wall time: {:.3}s", report.wall_time_s);
    println!(
        "{:?}: J = {:e} after {} iterations ({})",
        report.summary.classification,
        report.summary.final_j,
        report.summary.iterations,
        out.display()
    );
    Ok(match report.summary.classification {
        Classification::NonConverged => EXIT_NONCONVERGED,
        _ => EXIT_OK,
    })
}

fn cmd_study(args: &Args) -> Result<i32> {
    let model = load_model(args.required("model")?)?;
    let counts: Vec<usize> = args
        .required("counts")?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad count {s:?}")))
        })
        .collect::<Result<_>>()?;
    let noise: f64 = args.num_or("noise", 0.0)?;
    let seed: u64 = args.num_or("seed", 1)?;
    let mp = load_problem(args)?;
    let table = study_convergence(&mp, &model, &counts, noise, seed)?;
    let out = PathBuf::from(args.get("out").unwrap_or("study.json"));
    io::write_json(&out, &table)?;
    print!("{}", study_markdown(&table));
    Ok(EXIT_OK)
}

fn study_markdown(table: &StudyTable) -> String {
    let mut s = String::new();
    s.push_str("| N | J | u error (rel) | delta-gap | curl(F') | div(P') | class | iters |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for row in &table.rows {
        s.push_str(&format!(
            "| {} | {:.6e} | {:.6e} | {:.6e} | {:.6e} | {:.6e} | {:?} | {} |\n",
            row.count,
            row.j,
            row.u_err_rel,
            row.delta_gap,
            row.curl_residual_data,
            row.div_residual_data,
            row.classification,
            row.iterations
        ));
    }
    let decreasing = table.rows.windows(2).all(|w| w[1].j <= w[0].j);
    s.push_str(&format!(
        "\nJ non-increasing in N: {}\n",
        if decreasing { "yes" } else { "NO" }
    ));
    s
}

#[derive(Debug)]
struct ReportRow {
    source: String,
    count: Option<usize>,
    j: f64,
    classification: Classification,
    delta_gap: f64,
    iterations: usize,
}

fn cmd_report(args: &Args) -> Result<i32> {
    if args.positional.is_empty() {
        return Err(Error::InvalidParameter(
            "report needs at least one input file".into(),
        ));
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for path in &args.positional {
        let text = io::read_to_string(Path::new(path))?;
        if let Ok(summary) = serde_json::from_str::<ReportSummary>(&text) {
            rows.push(ReportRow {
                source: path.clone(),
                count: summary.data_count,
                j: summary.final_j,
                classification: summary.classification,
                delta_gap: summary.diagnostics.delta_gap,
                iterations: summary.iterations,
            });
        } else if let Ok(table) = serde_json::from_str::<StudyTable>(&text) {
            for row in table.rows {
                rows.push(ReportRow {
                    source: path.clone(),
                    count: Some(row.count),
                    j: row.j,
                    classification: row.classification,
                    delta_gap: row.delta_gap,
                    iterations: row.iterations,
                });
            }
        } else {
            return Err(Error::Parse {
                path: path.clone(),
                line: 0,
                message: "neither a solve report nor a study table".into(),
            });
        }
    }
    rows.sort_by(|a, b| match (a.count, b.count) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });

    let mut md = String::new();
    md.push_str("| source | N | J | class | delta-gap | iters |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for r in &rows {
        md.push_str(&format!(
            "| {} | {} | {:.6e} | {:?} | {:.6e} | {} |\n",
            r.source,
            r.count.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            r.j,
            r.classification,
            r.delta_gap,
            r.iterations
        ));
    }
    let counted: Vec<&ReportRow> = rows.iter().filter(|r| r.count.is_some()).collect();
    if counted.len() >= 2 {
        let ok = counted.windows(2).all(|w| w[1].j <= w[0].j);
        md.push_str(&format!(
            "\nJ non-increasing in N: {}\n",
            if ok { "yes" } else { "NO" }
        ));
    }
    print!("{md}");

    if let Some(out) = args.get("out") {
        let mut csv = String::from("source,count,j,classification,delta_gap,iterations\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{:?},{},{}\n",
                r.source,
                r.count.map(|c| c.to_string()).unwrap_or_default(),
                io::fmt_f64(r.j),
                r.classification,
                io::fmt_f64(r.delta_gap),
                r.iterations
            ));
        }
        io::atomic_write(Path::new(out), csv.as_bytes())?;
    }
    Ok(EXIT_OK)
}

/// Per-element states (and optionally the data branch) plus nodal fields.
pub fn write_fields_csv(
    base: &str,
    mp: &MeshProblem,
    fields: &ElementFields,
    branch: Option<&[PhasePoint]>,
) -> Result<()> {
    let mesh = &mp.mesh;
    let mut elems = String::from("elem,area");
    for name in ["F", "P"] {
        for k in ["11", "12", "21", "22"] {
            elems.push_str(&format!(",{name}{k}"));
        }
    }
    if branch.is_some() {
        for name in ["Fd", "Pd"] {
            for k in ["11", "12", "21", "22"] {
                elems.push_str(&format!(",{name}{k}"));
            }
        }
    }
    elems.push('\n');
    let push_mat = |s: &mut String, m: &Mat| {
        for v in m.entries() {
            s.push(',');
            s.push_str(&io::fmt_f64(*v));
        }
    };
    for e in 0..mesh.n_elements() {
        elems.push_str(&format!("{e},{}", io::fmt_f64(mesh.area(e))));
        push_mat(&mut elems, &fields.f[e]);
        push_mat(&mut elems, &fields.p[e]);
        if let Some(b) = branch {
            push_mat(&mut elems, &b[e].f);
            push_mat(&mut elems, &b[e].p);
        }
        elems.push('\n');
    }
    io::atomic_write(&PathBuf::from(format!("{base}_elements.csv")), elems.as_bytes())?;

    let mut nodes = String::from("node,x,y,u1,u2,lambda1,lambda2\n");
    for (i, x) in mesh.nodes.iter().enumerate() {
        nodes.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            io::fmt_f64(x[0]),
            io::fmt_f64(x[1]),
            io::fmt_f64(fields.u[i][0]),
            io::fmt_f64(fields.u[i][1]),
            io::fmt_f64(fields.lambda[i][0]),
            io::fmt_f64(fields.lambda[i][1]),
        ));
    }
    io::atomic_write(&PathBuf::from(format!("{base}_nodes.csv")), nodes.as_bytes())
}
