use std::collections::BTreeMap;
use std::sync::Arc;

use num::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use snf_core::budget::Budget;
use snf_core::complexes::{Point, Window};
use snf_core::geometry::validate_spec;
use snf_core::labeling::{check_glp, identity_seed, propagate_labels, Alphabet, Propagation};
use snf_core::metric::{graph_distance, metric_constants, shells, verify_comparison};
use snf_core::projection::FoldingMap;
use snf_core::verify::{run_suite, SuiteOptions};
use snf_core::walk::{
    build_quotient, estimate_gamma, expected_hitting_steps, fold_table, folded_kernel, hitting_law,
    kernel, simulate_histogram, simulate_paths, GridGraph, Mode, PathRecord, SimConfig,
};
use snf_core::{Error, FieldElement, FractalSpec, Rational, Result};

use crate::svg::{render_svg, Drawing, Style};
use crate::{load_spec, Command, LabelCommand, Produced, SpecCommand, WalkCommand};

fn params<T: Serialize>(a: &T) -> Value {
    serde_json::to_value(a).expect("serializable arguments")
}

/// Command name, parameter echo and artifact path.
pub(crate) fn describe(c: &Command) -> (String, Value, Option<String>) {
    let (name, p, out) = match c {
        Command::Spec(SpecCommand::Validate(a)) => ("spec validate", params(a), None),
        Command::Spec(SpecCommand::Info(a)) => ("spec info", params(a), None),
        Command::Glp(a) => ("glp", params(a), None),
        Command::Label(LabelCommand::Render(a)) => ("label render", params(a), a.out.out.clone()),
        Command::Project(a) => ("project", params(a), None),
        Command::Fiber(a) => ("fiber", params(a), a.out.out.clone()),
        Command::Dist(a) => ("dist", params(a), a.out.out.clone()),
        Command::Shells(a) => ("shells", params(a), a.out.out.clone()),
        Command::Constants(a) => ("constants", params(a), None),
        Command::Walk(WalkCommand::Kernel(a)) => ("walk kernel", params(a), a.out.out.clone()),
        Command::Walk(WalkCommand::Hitting(a)) => ("walk hitting", params(a), a.out.out.clone()),
        Command::Walk(WalkCommand::Gamma(a)) => ("walk gamma", params(a), None),
        Command::Walk(WalkCommand::Quotient(a)) => ("walk quotient", params(a), None),
        Command::Walk(WalkCommand::Simulate(a)) => (
            "walk simulate",
            params(a),
            if a.histogram { None } else { a.out.out.clone() },
        ),
        Command::Verify(a) => ("verify", params(a), None),
    };
    (name.to_string(), p, out)
}

fn report(verdicts: BTreeMap<String, bool>, result: Value) -> Result<Produced> {
    Ok(Produced::Report { verdicts, result })
}

fn artifact(text: String, summary: Value) -> Result<Produced> {
    Ok(Produced::Artifact {
        text,
        summary,
        verdicts: BTreeMap::new(),
    })
}

fn verdicts<const N: usize>(items: [(&str, bool); N]) -> BTreeMap<String, bool> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn point(spec: &FractalSpec, s: &str, level: i32) -> Result<Point> {
    Ok(Point::new(FieldElement::parse(spec.k(), s)?, level))
}

/// Quotes a CSV field when it contains a separator or quote.
fn csv(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn float_pair(v: &FieldElement) -> [f64; 2] {
    let (x, y) = v.to_complex();
    [x, y]
}

fn ratio_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn dispatch(c: &Command, timing: bool) -> Result<Produced> {
    let budget = Budget::from_env();
    match c {
        Command::Spec(SpecCommand::Validate(a)) => {
            let spec = load_spec(&a.spec.spec)?;
            let r = validate_spec(&spec, a.nesting_depth, &budget)?;
            report(
                verdicts([
                    ("regular_polygon", r.regular_polygon.pass),
                    ("symmetry", r.symmetry.pass),
                    ("nesting", r.nesting.pass),
                    ("connectivity", r.connectivity.pass),
                    ("koch_uniqueness", r.koch_uniqueness.pass),
                ]),
                params(&r),
            )
        }
        Command::Spec(SpecCommand::Info(a)) => {
            let s = load_spec(&a.spec)?;
            report(
                BTreeMap::new(),
                json!({
                    "name": s.name(),
                    "k": s.k(),
                    "L": s.scale(),
                    "N": s.n(),
                    "d_f": s.d_f(),
                    "d_f_exact": format!("log {} / log {}", s.n(), s.scale()),
                    "essential_fixed_points": s.v0().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "essential_indices": s.v0_source().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "barycenter": s.barycenter().to_string(),
                    "exponents": s.exponents(),
                    "spec_file": s.to_file(),
                }),
            )
        }
        Command::Glp(a) => {
            let s = load_spec(&a.spec)?;
            let v = check_glp(&s)?;
            let alpha = Alphabet::new(s.k());
            let mut out = json!({ "spec": s.name(), "glp": v.glp });
            let mut checks = BTreeMap::new();
            match &v.outcome {
                Propagation::Labelled(l) => {
                    let w = l.window();
                    let rot: BTreeMap<String, u32> = (0..w.num_complexes())
                        .map(|c| (w.address(c).to_string(), l.rotation(c)))
                        .collect();
                    out["rotations"] = json!(rot);
                    out["labels"] = json!(w
                        .vertices()
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.to_string(), alpha.name(l.label(i))))
                        .collect::<BTreeMap<_, _>>());
                }
                Propagation::Conflict(c) => {
                    let replayed = c.replay(&s, &identity_seed(s.k()))?;
                    checks.insert(
                        "conflict_replays".to_string(),
                        replayed == (c.label_a, c.label_b),
                    );
                    out["conflict"] = json!({
                        "vertex": c.vertex.to_string(),
                        "vertex_float": float_pair(&c.vertex),
                        "labels": [alpha.name(c.label_a), alpha.name(c.label_b)],
                        "chains": [params(&c.chain_a), params(&c.chain_b)],
                        "complexes": [c.complex_a().to_string(), c.complex_b().to_string()],
                    });
                }
            }
            report(checks, out)
        }
        Command::Label(LabelCommand::Render(a)) => {
            let s = load_spec(&a.spec.spec)?;
            let style = Style {
                size: a.size,
                precision: a.precision,
                fill: a.fill.clone(),
                stroke: a.stroke.clone(),
                highlight: a.highlight.clone(),
                ..Style::default()
            };
            let (kind, drawing) = match &a.paths {
                Some(path) => ("paths", Drawing::paths(&read_archive(&s, path)?)),
                None => {
                    let w = Arc::new(Window::new(&s, a.order, a.depth, &budget)?);
                    let alpha = Alphabet::new(s.k());
                    match propagate_labels(w.clone(), &identity_seed(s.k()))? {
                        Propagation::Labelled(l) => {
                            let names: Vec<String> =
                                l.labels().iter().map(|&x| alpha.name(x)).collect();
                            ("labelled", Drawing::labelled(&w, &names))
                        }
                        Propagation::Conflict(c) => ("conflict", Drawing::conflict(&w, &c, &alpha)),
                    }
                }
            };
            let summary = json!({
                "kind": kind,
                "polygons": drawing.num_polygons(),
                "annotations": drawing.num_texts(),
            });
            artifact(render_svg(&drawing, &style), summary)
        }
        Command::Project(a) => {
            let s = load_spec(&a.spec.spec)?;
            let f = FoldingMap::for_spec(&s, a.order)?;
            let x = point(&s, &a.point, a.point_level)?;
            let y = f.project(&x)?;
            let complexes = f.containing(&x)?;
            let rotations = complexes
                .iter()
                .map(|c| f.labelling().rotation_of(c))
                .collect::<Result<Vec<_>>>()?;
            report(
                BTreeMap::new(),
                json!({
                    "point": x.pos.to_string(),
                    "point_float": float_pair(&x.pos),
                    "image": y.pos.to_string(),
                    "image_float": float_pair(&y.pos),
                    "complexes": complexes.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "rotations": rotations,
                }),
            )
        }
        Command::Fiber(a) => {
            let p = &a.point;
            let s = load_spec(&p.spec.spec)?;
            let f = FoldingMap::for_spec(&s, p.order)?;
            let y = point(&s, &p.point, p.point_level)?;
            let w = Window::new(&s, p.order, a.depth, &budget)?;
            let mut text = String::from("point,x,y,rank\n");
            let fiber = f.fiber(&y, &w)?;
            for q in &fiber {
                let [fx, fy] = float_pair(&q.pos);
                let rank = f.containing(q)?.len();
                text.push_str(&format!(
                    "{},{fx:.17e},{fy:.17e},{rank}\n",
                    csv(&q.pos.to_string())
                ));
            }
            artifact(text, json!({ "points": fiber.len() }))
        }
        Command::Dist(a) => {
            let s = load_spec(&a.spec.spec)?;
            let w = Window::new(&s, a.level, a.depth, &budget)?;
            let x = point(&s, &a.from, a.point_level)?;
            let targets = match &a.to {
                Some(t) => vec![point(&s, t, a.point_level)?],
                None => w
                    .vertices()
                    .iter()
                    .map(|v| Point::new(v.clone(), a.level))
                    .collect(),
            };
            let mut text = String::from("x,y,d_M,euclidean\n");
            for y in &targets {
                let d = graph_distance(&w, &x, y)?;
                let e = (&x.pos - &y.pos).abs_f64();
                text.push_str(&format!(
                    "{},{},{d},{e:.17e}\n",
                    csv(&x.pos.to_string()),
                    csv(&y.pos.to_string())
                ));
            }
            artifact(text, json!({ "pairs": targets.len() }))
        }
        Command::Shells(a) => {
            let s = load_spec(&a.spec.spec)?;
            let w = Window::new(&s, a.level, a.depth, &budget)?;
            let t = shells(&w, &point(&s, &a.point, a.point_level)?, a.nmax)?;
            let mut text = String::from("n,count,exact,members\n");
            for (i, (c, m)) in t.counts.iter().zip(&t.members).enumerate() {
                let members: Vec<String> = m.iter().map(|a| a.to_string()).collect();
                text.push_str(&format!(
                    "{},{c},{},{}\n",
                    i + 1,
                    i < t.exact_through,
                    csv(&members.join(";"))
                ));
            }
            artifact(
                text,
                json!({ "exact_through": t.exact_through, "counts": t.counts }),
            )
        }
        Command::Constants(a) => {
            let s = load_spec(&a.spec.spec)?;
            let c = metric_constants(&s, a.level, a.tol, &budget)?;
            let r = verify_comparison(&c, &s, a.samples, a.seed, &budget)?;
            let overlap = c
                .c5_level_check
                .is_none_or(|l3| c.c5.overlaps(&l3, 2.0 * a.tol));
            report(
                verdicts([("comparison", r.passed()), ("c5_levels_overlap", overlap)]),
                json!({
                    "C5": [c.c5.lo, c.c5.hi],
                    "C5_level3": c.c5_level_check.map(|i| [i.lo, i.hi]),
                    "diam": [c.diam.lo, c.diam.hi],
                    "C6": c.c6,
                    "C7": c.c7,
                    "C8": c.c8,
                    "n_uniform": c.n_uniform,
                    "d_f": c.d_f,
                    "pairs_checked": r.pairs_checked,
                    "bases_checked": r.bases_checked,
                    "shells_checked": r.shells_checked,
                    "max_lower_ratio": r.max_lower_ratio,
                    "max_upper_ratio": r.max_upper_ratio,
                    "violations": params(&r.violations),
                }),
            )
        }
        Command::Walk(WalkCommand::Kernel(a)) => {
            let s = load_spec(&a.walk.spec.spec)?;
            let mode: Mode = a.mode.parse()?;
            let g = GridGraph::new(&s, a.walk.m, a.depth, &budget)?;
            let start = FieldElement::parse(s.k(), &a.start)?;
            let x0 = g.window().vertex_id(&start).ok_or_else(|| {
                Error::Domain(format!("start {start} is not a vertex of the grid window"))
            })?;
            let t = kernel(&g, x0, a.steps, mode)?;
            let text = if a.folded {
                let f = FoldingMap::for_spec(&s, a.walk.big_m)?;
                let q = Window::new(
                    &s,
                    a.walk.m,
                    (a.walk.big_m - a.walk.m).max(0) as usize,
                    &budget,
                )?;
                let map = fold_table(&g, &f, &q)?;
                let nq = q.vertices().len();
                let mut out = String::from("step,vertex,prob,exact\n");
                for step in 0..=a.steps {
                    let p = t.pushforward(step, &map, nq);
                    let exact = t.pushforward_exact(step, &map, nq);
                    for (v, pv) in p.iter().enumerate() {
                        if *pv != 0.0 {
                            let e = exact.as_ref().map(|e| e[v].to_string()).unwrap_or_default();
                            out.push_str(&format!(
                                "{step},{},{pv:.17e},{e}\n",
                                csv(&q.vertex(v).to_string())
                            ));
                        }
                    }
                    let e = t
                        .escape_exact(step)
                        .map(|r| r.to_string())
                        .unwrap_or_default();
                    out.push_str(&format!("{step},escape,{:.17e},{e}\n", t.escape(step)));
                }
                out
            } else {
                let names: Vec<String> = g
                    .window()
                    .vertices()
                    .iter()
                    .map(|v| csv(&v.to_string()))
                    .collect();
                t.to_csv(&names)
            };
            artifact(
                text,
                json!({
                    "vertices": g.num_vertices(),
                    "escape": t.escape(a.steps),
                    "escape_exact": t.escape_exact(a.steps).map(|r| r.to_string()),
                }),
            )
        }
        Command::Walk(WalkCommand::Hitting(a)) => {
            let s = load_spec(&a.walk.spec.spec)?;
            let f = FoldingMap::for_spec(&s, a.walk.big_m)?;
            let law = hitting_law(
                &f,
                &FieldElement::parse(s.k(), &a.start)?,
                a.walk.m,
                a.horizon,
                a.j,
            )?;
            let alpha = Alphabet::new(s.k());
            let names: Vec<String> = (0..s.k()).map(|l| alpha.name(l)).collect();
            artifact(law.to_csv(&names), params(&law.summary()))
        }
        Command::Walk(WalkCommand::Gamma(a)) => {
            let s = load_spec(&a.spec.spec)?;
            let g = estimate_gamma(&s, a.m)?;
            let steps = expected_hitting_steps(&s, a.m + 1, a.m)?;
            report(
                BTreeMap::new(),
                json!({
                    "gamma": g.to_string(),
                    "gamma_float": ratio_f64(&g),
                    "expected_steps": steps.to_string(),
                    "time_exponent": ratio_f64(&g).ln() / (s.scale() as f64).ln(),
                }),
            )
        }
        Command::Walk(WalkCommand::Quotient(a)) => {
            let s = load_spec(&a.walk.spec.spec)?;
            let f = FoldingMap::for_spec(&s, a.walk.big_m)?;
            let r = build_quotient(&f, a.walk.m, &budget)?.report(a.steps);
            report(
                verdicts([
                    ("rows_stochastic", r.rows_stochastic),
                    ("detailed_balance", r.detailed_balance_violations == 0),
                    ("chapman_kolmogorov", r.chapman_kolmogorov_violations == 0),
                ]),
                params(&r),
            )
        }
        Command::Walk(WalkCommand::Simulate(a)) => {
            let s = load_spec(&a.walk.spec.spec)?;
            let f = FoldingMap::for_spec(&s, a.walk.big_m)?;
            let start = FieldElement::parse(s.k(), &a.start)?;
            let cfg = SimConfig {
                m: a.walk.m,
                start: start.clone(),
                seed: a.seed,
                count: a.count,
                steps: a.steps,
                depth: a.depth,
            };
            if a.histogram {
                let horizon = snf_core::verify::HITTING_HORIZON;
                let h = simulate_histogram(&f, &cfg, horizon, &budget)?;
                let q = build_quotient(&f, a.walk.m, &budget)?;
                let xbar = f.project(&Point::new(start.clone(), a.walk.m))?;
                let i = q.vertex_id(&xbar.pos).ok_or_else(|| {
                    Error::Domain(format!("{} is not a quotient vertex", xbar.pos))
                })?;
                let exact = folded_kernel(&q, i, a.steps)?;
                let law = hitting_law(&f, &start, a.walk.m, horizon, 1)?;
                let tv = h.tv_against(&exact.dist);
                let z = h.label_z_scores(&law.label_marginal(1));
                let limit = 4.0 / (a.count.max(1) as f64).sqrt();
                return Ok(Produced::Report {
                    verdicts: verdicts([
                        ("folded_tv", tv <= limit),
                        ("hitting_labels", z.iter().all(|v| v.abs() <= 3.0)),
                    ]),
                    result: json!({
                        "histogram": params(&h),
                        "exact": exact.dist.iter().map(ratio_f64).collect::<Vec<_>>(),
                        "tv": tv,
                        "tv_limit": limit,
                        "label_law": law.label_marginal(1).iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "label_z": z,
                    }),
                });
            }
            let archive = simulate_paths(&f, &cfg, &budget)?;
            let mut buf = Vec::new();
            archive
                .write_jsonl(&mut buf)
                .map_err(|e| Error::Parse(e.to_string()))?;
            let escaped = (0..archive.len()).filter(|&i| archive.escaped(i)).count();
            artifact(
                String::from_utf8(buf).expect("utf-8 archive"),
                json!({ "paths": archive.len(), "escaped": escaped }),
            )
        }
        Command::Verify(a) => {
            let names = if a.spec.is_empty() {
                snf_core::geometry::builtin_names()
                    .iter()
                    .map(|n| format!("builtin:{n}"))
                    .collect()
            } else {
                a.spec.clone()
            };
            let specs = names
                .iter()
                .map(|n| load_spec(n))
                .collect::<Result<Vec<_>>>()?;
            let results = run_suite(
                &specs,
                SuiteOptions {
                    quick: a.quick,
                    seed: a.seed,
                },
            );
            let verdicts = results
                .iter()
                .map(|r| {
                    (
                        format!("{}/{:02}", r.spec, r.id),
                        r.status != snf_core::verify::Status::Fail,
                    )
                })
                .collect();
            let mut checks = params(&results);
            if !timing {
                for c in checks.as_array_mut().expect("array") {
                    c.as_object_mut().expect("object").remove("seconds");
                }
            }
            report(
                verdicts,
                json!({ "tier": if a.quick { "quick" } else { "full" }, "checks": checks }),
            )
        }
    }
}

/// Raw paths of a JSONL archive, in path order.
fn read_archive(spec: &FractalSpec, path: &str) -> Result<Vec<Vec<FieldElement>>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("reading {path}: {e}")))?;
    let mut paths: BTreeMap<u64, Vec<(usize, FieldElement)>> = BTreeMap::new();
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let r: PathRecord = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("{path}:{}: {e}", n + 1)))?;
        paths
            .entry(r.path_id)
            .or_default()
            .push((r.step, FieldElement::parse(spec.k(), &r.raw_vertex)?));
    }
    Ok(paths
        .into_values()
        .map(|mut p| {
            p.sort_by_key(|(s, _)| *s);
            p.into_iter().map(|(_, v)| v).collect()
        })
        .collect())
}
