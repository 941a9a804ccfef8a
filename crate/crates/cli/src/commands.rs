use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value as Json};

use lfic_core::geometry::{self, format, PolytopeH};
use lfic_core::models::{self, ModelKind, Verdict};
use lfic_core::npa::{self, Level, Relations, SeesawOptions};
use lfic_core::rational::format_q;
use lfic_core::simulator::{self, Protocol, RunConfig};
use lfic_core::slice::{self, Section};
use lfic_core::{presets, schema, symmetry, Scenario};

use crate::io::{self, check_outputs, header, write_output};
use crate::{CliError, CliResult, NpaArgs, SectionArgs, SimulateArgs};

fn model_kind(name: &str) -> CliResult<ModelKind> {
    name.parse::<ModelKind>().map_err(CliError::from_core)
}

fn json_text(v: &Json) -> String {
    let mut v = v.clone();
    if let Some(o) = v.as_object_mut() {
        o.insert("generator".into(), json!(format!("lfic-core {}", env!("CARGO_PKG_VERSION"))));
    }
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn write_json(path: Option<&Path>, v: &Json, force: bool) -> CliResult<()> {
    match path {
        Some(p) => write_output(p, &json_text(v), force),
        None => Ok(()),
    }
}

pub fn enumerate(model: &str, out_dir: &Path, force: bool) -> CliResult<()> {
    let kind = model_kind(model)?;
    let s = Scenario::main();
    let m = kind.model();
    let paths: Vec<PathBuf> = ["facets.ine", "equalities.ine", "vertices.ext"]
        .iter()
        .map(|suffix| out_dir.join(format!("{}.{suffix}", kind.name())))
        .collect();
    check_outputs(&paths, force)?;
    let v = m.vertices(&s)?;
    let h = m.hrep(&s)?;
    let hdr = |what: &str| {
        header(
            "enumerate",
            &[
                ("model", kind.name().to_string()),
                ("description", m.description().to_string()),
                ("scenario", format!("{:?}", s)),
                ("contents", what.to_string()),
                ("coordinates", "p(a,b|x,y) at index ((x*Y+y)*A+a)*B+b".to_string()),
            ],
        )
    };
    let facets = PolytopeH { dim: h.dim, inequalities: h.inequalities.clone(), equalities: vec![] };
    let equalities = PolytopeH { dim: h.dim, inequalities: vec![], equalities: h.equalities.clone() };
    write_output(&paths[0], &format::write_h(&facets, &hdr(&format!("{} facet inequalities", facets.inequalities.len()))), force)?;
    write_output(&paths[1], &format::write_h(&equalities, &hdr(&format!("{} affine-hull equalities", equalities.equalities.len()))), force)?;
    write_output(&paths[2], &format::write_v(&v, &hdr(&format!("{} vertices", v.vertices.len()))), force)?;
    println!(
        "{}: {} vertices, {} facets, {} equalities -> {}",
        kind.name(),
        v.vertices.len(),
        h.inequalities.len(),
        h.equalities.len(),
        out_dir.display()
    );
    Ok(())
}

pub fn classify(out: &Path, force: bool) -> CliResult<()> {
    check_outputs(&[out.to_path_buf()], force)?;
    let s = Scenario::main();
    let census = models::facet_census(&s)?;
    let v = ModelKind::Lfic.model().vertices(&s)?;
    let chart = geometry::affine_hull(&v)?;
    let group = symmetry::stabilizer_group(&v, &s);
    let strict: Vec<_> = census.ns_invalid.iter().map(|&i| census.facets.inequalities[i].clone()).collect();
    let orbits = symmetry::classify_facets(&s, &strict, &chart, &group);
    let classes: Vec<(usize, Option<usize>)> = (1..=4)
        .map(|k| {
            let f = presets::facet_class(k)?;
            let c = geometry::Constraint::new(f.as_lower_bound().coefficients().to_vec(), f.as_lower_bound().offset().clone());
            Ok((k, symmetry::locate(&orbits, &chart, &c)))
        })
        .collect::<lfic_core::Result<_>>()?;
    let orbit_json: Vec<Json> = orbits
        .iter()
        .enumerate()
        .map(|(i, o)| {
            json!({
                "size": o.size(),
                "representative": symmetry::describe(&s, &o.representative),
                "members": o.members.iter().map(|&m| census.ns_invalid[m]).collect::<Vec<_>>(),
                "classes": classes.iter().filter(|c| c.1 == Some(i)).map(|c| format!("A{}", c.0)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = json!({
        "version": schema::VERSION,
        "kind": "facet-classification",
        "scenario": schema::scenario_json(&s),
        "facets": census.facets.inequalities.len(),
        "equalities": census.facets.equalities.len(),
        "ns_invalid": census.ns_invalid,
        "ns_invalid_every_form": census.ns_invalid_every_form,
        "group_order": group.len(),
        "orbits": orbit_json,
        "facet_list": census.facets.inequalities.iter().map(|c| symmetry::describe(&s, c)).collect::<Vec<_>>(),
    });
    write_output(out, &json_text(&doc), force)?;
    println!(
        "{} facets, {} not valid on NS ({} for every representative), group order {}, {} orbits",
        census.facets.inequalities.len(),
        census.ns_invalid.len(),
        census.ns_invalid_every_form.len(),
        group.len(),
        orbits.len()
    );
    for (i, o) in orbits.iter().enumerate() {
        println!("  orbit {i}: {} facets, {}", o.size(), symmetry::describe(&s, &o.representative));
    }
    Ok(())
}

pub fn evaluate(functional: &str, behavior: &str, out: Option<&Path>, force: bool) -> CliResult<()> {
    let f = io::functional(functional)?;
    let p = io::behavior(behavior)?;
    let v = f.evaluate(&p)?;
    println!("{v}");
    write_json(
        out,
        &json!({
            "version": schema::VERSION,
            "kind": "evaluation",
            "functional": functional,
            "behavior": behavior,
            "exact": v.exact().map(format_q),
            "value": v.to_f64(),
        }),
        force,
    )
}

pub fn membership(behavior: &str, model: &str, out: Option<&Path>, force: bool) -> CliResult<()> {
    let kind = model_kind(model)?;
    let p = io::behavior(behavior)?;
    let r = models::membership(&p, kind)?;
    let certificate = match &r.verdict {
        Verdict::Inside { weights } => {
            println!("inside {kind}: convex combination of {} vertices", weights.len());
            for (vertex, w) in weights {
                println!("  {} x {}", format_q(w), vertex.iter().map(format_q).collect::<Vec<_>>().join(" "));
            }
            json!({
                "weights": weights.iter().map(|(vertex, w)| json!({
                    "weight": format_q(w),
                    "vertex": vertex.iter().map(format_q).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })
        }
        Verdict::Outside { functional, value } => {
            let c = geometry::Constraint::new(functional.coefficients().to_vec(), functional.offset().clone());
            println!(
                "outside {kind}: {} >= 0 holds on {kind}, value here {:.12}",
                symmetry::describe(p.scenario(), &c),
                lfic_core::rational::to_f64(value)
            );
            json!({ "functional": schema::functional_json(functional), "value": format_q(value) })
        }
    };
    if r.rounded {
        println!("(float input rounded to an exact point before testing)");
    }
    write_json(
        out,
        &json!({
            "version": schema::VERSION,
            "kind": "membership",
            "behavior": behavior,
            "model": kind.name(),
            "inside": r.is_inside(),
            "rounded": r.rounded,
            "tolerances": {
                "projection": models::PROJECTION_TOLERANCE,
                "contraction": format!("{}/{}", models::CONTRACTION.0, models::CONTRACTION.1),
            },
            "certificate": certificate,
        }),
        force,
    )
}

fn relations_for(name: &str, s: &Scenario) -> CliResult<Relations> {
    match name {
        "auto" if s.is_query_shaped() => Ok(Relations::QueryComplete),
        "auto" => Ok(Relations::Standard),
        other => other.parse().map_err(CliError::from_core),
    }
}

pub fn npa_bound(a: &NpaArgs, force: bool) -> CliResult<()> {
    let f = io::functional(&a.functional)?;
    let level: Level = a.level.parse().map_err(CliError::from_core)?;
    let s = *f.scenario();
    let relations = relations_for(&a.relations, &s)?;
    let prog = npa::build_moment_program(&s, Some(&f), level, relations)?;
    let sol = npa::sdp_solve(&prog)?;
    println!(
        "{} bound at level {level} ({}): {:.8} (attained {:.8}, relative gap {:.1e}, matrix size {})",
        if f.sense() == lfic_core::Sense::LowerBound { "lower" } else { "upper" },
        relations.name(),
        sol.bound,
        sol.attained,
        sol.relative_gap,
        prog.dim()
    );
    let seesaw = if a.seesaw {
        let opts = SeesawOptions { seed: a.seed, relations, ..SeesawOptions::default() };
        let r = npa::seesaw_lower_bound(&f, &opts)?;
        println!("see-saw value {:.8} (restart {}, dims {}x{})", r.value, r.restart, opts.dim_a, opts.dim_b);
        json!({
            "value": r.value, "seed": r.seed, "restart": r.restart,
            "dim_a": opts.dim_a, "dim_b": opts.dim_b, "restarts": opts.restarts,
            "max_iterations": opts.max_iterations, "tolerance": opts.tolerance,
        })
    } else {
        Json::Null
    };
    write_json(
        a.out.as_deref(),
        &json!({
            "version": schema::VERSION,
            "kind": "npa-bound",
            "functional": a.functional,
            "level": level.name(),
            "relations": relations.name(),
            "bound": sol.bound,
            "attained": sol.attained,
            "relative_gap": sol.relative_gap,
            "iterations": sol.iterations,
            "moment_matrix_size": prog.dim(),
            "feasibility_tolerance": npa::FEASIBILITY_TOLERANCE,
            "seesaw": seesaw,
        }),
        force,
    )
}

fn section_paths(dir: &Path, models: &[String]) -> (Vec<PathBuf>, PathBuf, PathBuf) {
    let csvs = models.iter().map(|m| dir.join(format!("section-{m}.csv"))).collect();
    (csvs, dir.join("markers.csv"), dir.join("section.svg"))
}

fn markers_csv(markers: &[(String, f64, f64)], hdr: &[String]) -> String {
    let mut s: String = hdr.iter().map(|l| format!("# {l}\n")).collect();
    s.push_str("marker,x,y\n");
    for (name, x, y) in markers {
        s.push_str(&format!("{name},{x:.9},{y:.9}\n"));
    }
    s
}

fn parse_markers(text: &str) -> CliResult<Vec<(String, f64, f64)>> {
    let bad = |l: &str| CliError::Usage(format!("malformed marker line '{l}'"));
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty() && *l != "marker,x,y")
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(bad(l));
            }
            Ok((f[0].to_string(), f[1].parse().map_err(|_| bad(l))?, f[2].parse().map_err(|_| bad(l))?))
        })
        .collect()
}

pub fn section(a: &SectionArgs, force: bool) -> CliResult<()> {
    let (csv_paths, marker_path, svg_path) = section_paths(&a.out_dir, &a.models);
    if a.replot {
        check_outputs(&[svg_path.clone()], force)?;
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())));
        let mut curves = Vec::new();
        for p in &csv_paths {
            curves.extend(slice::parse_csv(&read(p)?)?);
        }
        let markers = parse_markers(&read(&marker_path)?)?;
        write_output(&svg_path, &slice::render_svg(&curves, &markers), force)?;
        println!("replotted {} curves -> {}", curves.len(), svg_path.display());
        return Ok(());
    }
    let level: Level = a.quantum_level.parse().map_err(CliError::from_core)?;
    let relations: Relations = a.relations.parse().map_err(CliError::from_core)?;
    slice::ray_directions(a.rays)?;
    let mut all = csv_paths.clone();
    all.push(marker_path.clone());
    all.push(svg_path.clone());
    check_outputs(&all, force)?;
    let plane = slice::table_plane()?;
    let mut sections: Vec<Section> = Vec::new();
    for m in &a.models {
        let sec = if m == "quantum" {
            slice::quantum_section(&plane, level, relations, a.rays)?
        } else {
            slice::polytope_section(&plane, model_kind(m)?, a.rays)?
        };
        sections.push(sec);
    }
    let hdr = header(
        "section",
        &[
            ("plane", "through N0, Q1, Q2 (exact tables), origin at their centroid".to_string()),
            ("rays", a.rays.to_string()),
            ("quantum level", level.name().to_string()),
            ("quantum relations", relations.name().to_string()),
            ("bisection width", npa::BISECTION_WIDTH.to_string()),
            ("feasibility tolerance", npa::FEASIBILITY_TOLERANCE.to_string()),
        ],
    );
    let markers = plane.marker_coordinates();
    let (svg, csvs) = slice::render(&sections, &markers, &hdr)?;
    for ((_, text), path) in csvs.iter().zip(&csv_paths) {
        write_output(path, text, force)?;
    }
    write_output(&marker_path, &markers_csv(&markers, &hdr), force)?;
    write_output(&svg_path, &svg, force)?;
    for s in &sections {
        let shape = match (&s.shape, s.polygon()) {
            (_, Some(p)) => format!("polygon with {} vertices", p.len()),
            (slice::SectionShape::Empty(_), _) => format!("empty (certificate verified: {})", s.verify_certificate()),
            _ => format!("{} boundary points", s.rays.len()),
        };
        println!("{}: {shape}", s.model);
    }
    println!("wrote {} section files to {}", csvs.len() + 2, a.out_dir.display());
    Ok(())
}

fn t_distribution(spec: &str, k: usize) -> CliResult<Option<Vec<f64>>> {
    match spec {
        "uniform" => Ok(Some(vec![1.0 / k as f64; k])),
        "never" => Ok(None),
        w => w
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad --t-query weight '{x}'"))))
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
    }
}

pub fn simulate(a: &SimulateArgs, force: bool) -> CliResult<()> {
    check_outputs(&[a.out.clone()], force)?;
    let r = io::realization(&a.preset)?;
    simulator::tree::policy(&a.policy)?;
    simulator::device(&a.device)?;
    let protocol = match a.protocol.as_str() {
        "main" => Protocol::Main,
        "protocol2" => {
            Protocol::Two { t_distribution: t_distribution(&a.t_query, r.scenario().charlie_outputs)? }
        }
        other => return Err(CliError::Usage(format!("unknown protocol '{other}' (available: main, protocol2)"))),
    };
    let cfg = RunConfig::new(&a.preset, r, a.runs, a.seed)
        .with_policy(&a.policy)
        .with_device(&a.device)
        .with_protocol(protocol);
    let counts = simulator::simulate_runs(&cfg)?;
    let est = simulator::estimate_behavior(&counts);
    let expected = simulator::expected_behavior(&cfg)?;
    let mut doc = counts.to_json(&cfg);
    let mut functionals = Vec::new();
    if counts.scenario == Scenario::main() {
        for (name, f) in [("Z1", presets::z1()), ("Z2", presets::z2())] {
            let exact = f.evaluate(&expected)?.to_f64();
            if let Some((v, se)) = est.functional(&f) {
                println!("{name}: estimate {v:.6} +- {se:.6} (exact expectation {exact:.6})");
                functionals.push(json!({"name": name, "estimate": v, "std_error": se, "expected": exact}));
            }
        }
    }
    doc["estimate"] = json!({
        "frequencies": est.frequencies,
        "std_errors": est.std_errors,
        "missing_cells": est.missing,
        "functionals": functionals,
    });
    doc["underflow_threshold"] = json!(simulator::UNDERFLOW);
    if !counts.strata.is_empty() && matches!(cfg.protocol, Protocol::Two { t_distribution: Some(_) }) {
        let rep = simulator::reduction_report(&cfg, &counts)?;
        println!(
            "reduction check: chi-square {:.2} on {} dof, p = {:.4}, impossible events {} -> {}",
            rep.combined.chi_square,
            rep.combined.dof,
            rep.combined.p_value,
            rep.combined.impossible_events,
            if rep.consistent() { "consistent" } else { "inconsistent" }
        );
        doc["reduction"] = rep.to_json();
    }
    println!("{} runs ({} resampled) -> {}", counts.runs, counts.resampled, a.out.display());
    write_output(&a.out, &json_text(&doc), force)
}

pub fn presets(list: bool, show: Option<&str>) -> CliResult<()> {
    match show {
        Some(name) => {
            let text = match presets::preset(name).map_err(CliError::from_core)? {
                presets::Preset::Functional(f) => schema::serialize_functional(&f),
                p => schema::serialize_behavior(&p.behavior().expect("point presets have behaviours")),
            };
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
        None if list => {
            for (name, _) in presets::describe() {
                println!("{name}");
            }
        }
        None => {
            for (name, d) in presets::describe() {
                println!("{name:4} {d}");
            }
        }
    }
    Ok(())
}
