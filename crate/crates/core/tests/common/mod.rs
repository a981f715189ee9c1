//! Helpers shared by the integration tests: fixture access, CLI invocation
//! and a seeded generator of valid random models.

#![allow(dead_code)]

use std::path::PathBuf;

use adapt_kit::aadl::ArchitectureModel;
use adapt_kit::parser::parse_model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn fixture_model(name: &str) -> ArchitectureModel {
    parse_model(&fixture_text(name), name).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

/// Run the CLI in-process; returns `(exit code, stdout, stderr)`.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["adapt-kit"];
    argv.extend_from_slice(args);
    let code = adapt_kit::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

/// Receiver-side handling of the `Err` propagation in a generated model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reception {
    /// No in propagation and no guard: no link.
    Deaf,
    /// `Err : in` matched by name.
    ByName,
    /// `guard_in (Err) on i => raise Hit`.
    GuardRaise,
    /// `guard_in (Err) on i => mask`.
    GuardMask,
}

#[derive(Clone, Debug)]
pub struct GenTransition {
    pub source: usize,
    pub dest: usize,
    /// `Some(occurrence text)` for events; `None` marks the `out Err` trigger.
    pub event: Option<String>,
    /// `in` propagation name for in-triggered transitions.
    pub in_prop: Option<&'static str>,
}

#[derive(Clone, Debug)]
pub struct GenComponent {
    pub states: usize,
    pub sends: bool,
    pub reception: Reception,
    pub transitions: Vec<GenTransition>,
}

impl GenComponent {
    /// Name of the in propagation a link into this component raises.
    pub fn raised(&self) -> Option<&'static str> {
        match self.reception {
            Reception::Deaf | Reception::GuardMask => None,
            Reception::ByName => Some("Err"),
            Reception::GuardRaise => Some("Hit"),
        }
    }
}

/// A random valid model together with the structure it was built from.
#[derive(Clone, Debug)]
pub struct GenModel {
    pub text: String,
    pub components: Vec<GenComponent>,
    /// Connections `(sender, receiver)` between component indices.
    pub connections: Vec<(usize, usize)>,
}

impl GenModel {
    /// Links that produce a dependency subnet.
    pub fn active_links(&self) -> Vec<(usize, usize)> {
        self.connections
            .iter()
            .copied()
            .filter(|&(s, r)| self.components[s].sends && self.components[r].raised().is_some())
            .collect()
    }

    /// Place count from the counting formula.
    pub fn expected_places(&self) -> usize {
        self.components.iter().map(|c| c.states).sum::<usize>() + self.active_links().len()
    }

    /// Transition count from the counting formula.
    pub fn expected_transitions(&self) -> usize {
        let own: usize = self
            .components
            .iter()
            .map(|c| c.transitions.iter().filter(|t| t.in_prop.is_none()).count())
            .sum();
        let deps: usize = self
            .active_links()
            .iter()
            .map(|&(_, r)| {
                let c = &self.components[r];
                let n = c.raised().unwrap();
                let consumes = c
                    .transitions
                    .iter()
                    .filter(|t| t.in_prop == Some(n))
                    .count();
                let reacting: std::collections::BTreeSet<usize> = c
                    .transitions
                    .iter()
                    .filter(|t| t.in_prop == Some(n))
                    .map(|t| t.source)
                    .collect();
                consumes + (c.states - reacting.len())
            })
            .sum();
        own + deps
    }
}

/// Generate a valid model with at most 5 components, 4 states per
/// component and 3 connections.
///
/// Immediate moves (fixed occurrences, default `out` occurrences and `in`
/// reactions) only go from a lower to a higher state index, so every
/// sequence of immediate firings is finite and the net stays bounded.
pub fn random_model(seed: u64) -> GenModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=5usize);
    let mut components = Vec::new();
    for _ in 0..n {
        let states = rng.random_range(2..=4usize);
        let sends = rng.random_bool(0.6);
        let reception = match rng.random_range(0..4) {
            0 => Reception::Deaf,
            1 => Reception::ByName,
            2 => Reception::GuardRaise,
            _ => Reception::GuardMask,
        };
        let mut transitions = Vec::new();
        let count = rng.random_range(1..=4usize);
        for k in 0..count {
            let source = rng.random_range(0..states);
            let mut dest = rng.random_range(0..states - 1);
            if dest >= source {
                dest += 1;
            }
            let forward = dest > source;
            let out_trigger = sends && (k == 0 || rng.random_bool(0.3));
            let event = if out_trigger {
                None
            } else if forward && rng.random_bool(0.3) {
                Some(format!("fixed {:.2}", rng.random_range(0.1..=1.0f64)))
            } else {
                Some(format!("poisson {:e}", rng.random_range(1.0e-4..1.0f64)))
            };
            transitions.push(GenTransition {
                source,
                dest,
                event,
                in_prop: None,
            });
        }
        if let Some(prop) = match reception {
            Reception::ByName => Some("Err"),
            Reception::GuardRaise => Some("Hit"),
            _ => None,
        } {
            for _ in 0..rng.random_range(0..=2usize) {
                let source = rng.random_range(0..states - 1);
                let dest = rng.random_range(source + 1..states);
                if !transitions
                    .iter()
                    .any(|t| t.in_prop == Some(prop) && t.source == source && t.dest == dest)
                {
                    transitions.push(GenTransition {
                        source,
                        dest,
                        event: None,
                        in_prop: Some(prop),
                    });
                }
            }
        }
        components.push(GenComponent {
            states,
            sends,
            reception,
            transitions,
        });
    }

    // A component both sending and receiving `Err` by name would declare
    // `Err` twice; such receivers become deaf.
    for c in &mut components {
        if c.sends && c.reception == Reception::ByName {
            c.reception = Reception::Deaf;
            c.transitions.retain(|t| t.in_prop.is_none());
        }
    }

    let mut connections = Vec::new();
    if n > 1 {
        for _ in 0..rng.random_range(0..=3usize) {
            let s = rng.random_range(0..n);
            let mut r = rng.random_range(0..n - 1);
            if r >= s {
                r += 1;
            }
            if !connections.contains(&(s, r)) {
                connections.push((s, r));
            }
        }
    }

    let mut text = String::new();
    for (i, c) in components.iter().enumerate() {
        // A sender whose `out Err` moves backward gets a timed occurrence;
        // otherwise the default fixed 1.0 applies.
        let backward_out = c
            .transitions
            .iter()
            .any(|t| t.event.is_none() && t.in_prop.is_none() && t.dest < t.source);
        text.push_str(&format!("error model E{i} {{\n  states {{"));
        for s in 0..c.states {
            if s == 0 {
                text.push_str(" S0 : initial;");
            } else {
                text.push_str(&format!(" S{s};"));
            }
        }
        text.push_str(" }\n  events {");
        for (k, t) in c.transitions.iter().enumerate() {
            if let Some(occ) = &t.event {
                text.push_str(&format!(" V{k} occurrence {occ};"));
            }
        }
        text.push_str(" }\n  propagations {");
        if c.sends {
            if backward_out {
                text.push_str(" Err : out occurrence poisson 2.5e-1;");
            } else {
                text.push_str(" Err : out;");
            }
        }
        match c.reception {
            Reception::ByName => text.push_str(" Err : in;"),
            Reception::GuardRaise => text.push_str(" Hit : in;"),
            _ => {}
        }
        text.push_str(" }\n  transitions {\n");
        for (k, t) in c.transitions.iter().enumerate() {
            let trig = match (&t.event, t.in_prop) {
                (_, Some(p)) => format!("in {p}"),
                (Some(_), None) => format!("V{k}"),
                (None, None) => "out Err".to_string(),
            };
            text.push_str(&format!("    S{} -[{trig}]-> S{};\n", t.source, t.dest));
        }
        text.push_str("  }\n}\n");
    }
    for (i, c) in components.iter().enumerate() {
        text.push_str(&format!(
            "process P{i} {{\n  feature o : out port;\n  feature i : in port;\n  annex error_model {{ use E{i};"
        ));
        match c.reception {
            Reception::GuardRaise => text.push_str(" guard_in (Err) on i => raise Hit;"),
            Reception::GuardMask => text.push_str(" guard_in (Err) on i => mask;"),
            _ => {}
        }
        text.push_str(" }\n}\n");
    }
    text.push_str("system Top {\n");
    for i in 0..n {
        text.push_str(&format!("  sub C{i} : P{i};\n"));
    }
    for (s, r) in &connections {
        text.push_str(&format!("  connect C{s}.o -> C{r}.i;\n"));
    }
    text.push_str(&format!(
        "  state_mapping failed => C0[S{}];\n}}\nroot Top;\n",
        components[0].states - 1
    ));

    GenModel {
        text,
        components,
        connections,
    }
}

/// Structural checks of the transform of a generated model: validity,
/// counting formula, one token per component subnet in every reachable
/// marking and empty pending places in every tangible marking. Returns a
/// description of each violation.
pub fn structural_violations(g: &GenModel) -> Vec<String> {
    use adapt_kit::gspn::{reachability, validate_gspn, MarkingKind};
    use adapt_kit::transform::transform;

    let mut out = Vec::new();
    let model = match parse_model(&g.text, "gen.adm") {
        Ok(m) => m,
        Err(d) => return vec![format!("parse failed: {d:?}")],
    };
    let diags = adapt_kit::aadl::validate_architecture(&model);
    if adapt_kit::diagnostic::has_errors(&diags) {
        return vec![format!("validation failed: {diags:?}")];
    }
    let t = match transform(&model) {
        Ok(t) => t,
        Err(e) => return vec![format!("transform failed: {e}")],
    };
    let problems = validate_gspn(&t.net);
    if !problems.is_empty() {
        out.push(format!("validate_gspn: {problems:?}"));
    }
    if t.net.places.len() != g.expected_places() {
        out.push(format!(
            "places {} != expected {}",
            t.net.places.len(),
            g.expected_places()
        ));
    }
    if t.net.transitions.len() != g.expected_transitions() {
        out.push(format!(
            "transitions {} != expected {}",
            t.net.transitions.len(),
            g.expected_transitions()
        ));
    }
    let graph = match reachability(&t.net, 8) {
        Ok(gr) => gr,
        Err(e) => {
            out.push(format!("reachability failed: {e}"));
            return out;
        }
    };
    // Group places by the `C<i>/` prefix of their names.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); g.components.len()];
    let mut pending = Vec::new();
    for (ix, p) in t.net.places.iter().enumerate() {
        if p.name.starts_with("pend(") {
            pending.push(ix);
        } else {
            let comp: usize = p.name[1..p.name.find('/').unwrap()].parse().unwrap();
            groups[comp].push(ix);
        }
    }
    for (k, m) in graph.markings.iter().enumerate() {
        for (c, places) in groups.iter().enumerate() {
            let tokens: u32 = places.iter().map(|&p| m.0[p]).sum();
            if tokens != 1 {
                out.push(format!(
                    "marking {m} holds {tokens} tokens in component C{c}"
                ));
            }
        }
        if graph.kinds[k] == MarkingKind::Tangible && pending.iter().any(|&p| m.0[p] > 0) {
            out.push(format!("tangible marking {m} has a pending token"));
        }
    }
    out
}

/// Multiply every Poisson rate in the model (type defaults and binding
/// overrides) by `c`.
pub fn scale_rates(model: &ArchitectureModel, c: f64) -> ArchitectureModel {
    use adapt_kit::aadl::{ComponentInstance, Occurrence};
    fn scale(o: &mut Option<Occurrence>, c: f64) {
        if let Some(Occurrence::Poisson(r)) = o {
            *r *= c;
        }
    }
    fn walk(ci: &mut ComponentInstance, c: f64) {
        if let Some(b) = &mut ci.error_model {
            for o in b.occurrence_overrides.values_mut() {
                if let Occurrence::Poisson(r) = o {
                    *r *= c;
                }
            }
        }
        for s in &mut ci.subcomponents {
            walk(s, c);
        }
    }
    let mut m = model.clone();
    for ty in m.error_types.values_mut() {
        for e in &mut ty.events {
            scale(&mut e.occurrence, c);
        }
        for p in &mut ty.propagations {
            scale(&mut p.occurrence, c);
        }
    }
    walk(&mut m.root, c);
    m
}

// Independent dense oracles, written without the library's solvers.

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + offset] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Stationary distribution of an irreducible generator: `π Q = 0`,
/// `Σπ = 1`, with the last balance equation replaced by normalization.
pub fn stationary(q: &[Vec<f64>]) -> Vec<f64> {
    let n = q.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = q[j][i];
        }
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    gauss_solve(a, b)
}

/// Mean time to reach `target` from `initial`, by first-step analysis over
/// the non-target states.
pub fn mean_time_to_target(q: &[Vec<f64>], initial: &[f64], target: &[bool]) -> f64 {
    let live: Vec<usize> = (0..q.len()).filter(|&i| !target[i]).collect();
    let a: Vec<Vec<f64>> = live
        .iter()
        .map(|&i| live.iter().map(|&j| q[i][j]).collect())
        .collect();
    let t = gauss_solve(a, vec![-1.0; live.len()]);
    live.iter().zip(t).map(|(&i, ti)| initial[i] * ti).sum()
}

/// `p0 · exp(Q t)` by scaling and squaring with a Taylor series.
pub fn expm_transient(q: &[Vec<f64>], p0: &[f64], t: f64) -> Vec<f64> {
    let n = q.len();
    let norm = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let h = t / 2f64.powi(squarings as i32);
    let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let a: Vec<Vec<f64>> = q
        .iter()
        .map(|r| r.iter().map(|v| v * h).collect())
        .collect();
    let mut e: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = e.clone();
    for k in 1..30 {
        term = mul(&term, &a)
            .into_iter()
            .map(|r| r.into_iter().map(|v| v / k as f64).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                e[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        e = mul(&e, &e);
    }
    (0..n)
        .map(|j| (0..n).map(|i| p0[i] * e[i][j]).sum())
        .collect()
}

/// Read a generic XML document back into a net and the number of trace
/// entries. Panics on malformed input.
pub fn read_generic_xml(xml: &str) -> (adapt_kit::gspn::Gspn, usize, usize) {
    use adapt_kit::gspn::{Arc, ArcDirection, Gspn, Place, Transition, TransitionKind};
    let doc = roxmltree::Document::parse(xml).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "gspn");
    let section = |name: &str| {
        root.children()
            .find(|n| n.tag_name().name() == name)
            .unwrap_or_else(|| panic!("missing <{name}>"))
    };
    let attr = |n: roxmltree::Node, a: &str| {
        n.attribute(a)
            .unwrap_or_else(|| panic!("missing {a}"))
            .to_string()
    };
    let elements = |name: &str| {
        section(name)
            .children()
            .filter(|n| n.is_element())
            .collect::<Vec<_>>()
    };

    let places = elements("places")
        .into_iter()
        .map(|n| Place {
            id: attr(n, "id"),
            name: attr(n, "name"),
            initial_marking: attr(n, "initial_marking").parse().unwrap(),
        })
        .collect();
    let transitions = elements("transitions")
        .into_iter()
        .map(|n| {
            let kind = match attr(n, "kind").as_str() {
                "timed_exponential" => TransitionKind::Timed {
                    rate: attr(n, "rate").parse().unwrap(),
                },
                "immediate" => TransitionKind::Immediate {
                    weight: attr(n, "weight").parse().unwrap(),
                },
                k => panic!("unknown kind {k}"),
            };
            Transition {
                id: attr(n, "id"),
                name: attr(n, "name"),
                kind,
            }
        })
        .collect();
    let arcs = elements("arcs")
        .into_iter()
        .map(|n| Arc {
            id: attr(n, "id"),
            direction: match attr(n, "direction").as_str() {
                "place_to_transition" => ArcDirection::PlaceToTransition,
                "transition_to_place" => ArcDirection::TransitionToPlace,
                d => panic!("unknown direction {d}"),
            },
            place: attr(n, "place"),
            transition: attr(n, "transition"),
            weight: attr(n, "weight").parse().unwrap(),
        })
        .collect();
    let trace = elements("trace");
    let place_origins = trace
        .iter()
        .filter(|n| n.tag_name().name() == "place_origin")
        .count();
    let transition_origins = trace
        .iter()
        .filter(|n| n.tag_name().name() == "transition_origin")
        .count();
    (
        Gspn {
            places,
            transitions,
            arcs,
        },
        place_origins,
        transition_origins,
    )
}

/// Structural summary of a PNML document: place, transition and arc counts,
/// after checking every arc joins a place and a transition.
pub fn pnml_counts(xml: &str) -> (usize, usize, usize) {
    let doc = roxmltree::Document::parse(xml).unwrap();
    let count = |name: &str| {
        doc.descendants()
            .filter(|n| n.tag_name().name() == name)
            .count()
    };
    let ids = |name: &str| -> std::collections::BTreeSet<String> {
        doc.descendants()
            .filter(|n| n.tag_name().name() == name)
            .map(|n| n.attribute("id").unwrap().to_string())
            .collect()
    };
    let (places, transitions) = (ids("place"), ids("transition"));
    for a in doc.descendants().filter(|n| n.tag_name().name() == "arc") {
        let (s, t) = (
            a.attribute("source").unwrap(),
            a.attribute("target").unwrap(),
        );
        assert!(
            (places.contains(s) && transitions.contains(t))
                || (transitions.contains(s) && places.contains(t)),
            "arc {s} -> {t} does not join a place and a transition"
        );
    }
    (count("place"), count("transition"), count("arc"))
}

/// Run `check` on every file of the diagnostics corpus and compare exit code
/// and the ordered diagnostics with the `// exit:` and `// expect:` header
/// lines. Returns the number of files checked and one line per mismatch.
pub fn check_diagnostics_corpus() -> (usize, Vec<String>) {
    let dir = fixture_path("diagnostics");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "adm"))
        .collect();
    files.sort();
    let mut failures = Vec::new();
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let exit: i32 = text
            .lines()
            .find_map(|l| l.strip_prefix("// exit: "))
            .unwrap_or_else(|| panic!("{name}: missing exit header"))
            .trim()
            .parse()
            .unwrap();
        let expects: Vec<&str> = text
            .lines()
            .filter_map(|l| l.strip_prefix("// expect: "))
            .map(str::trim)
            .collect();
        let (code, _, err) = run_cli(&["check", path.to_str().unwrap()]);
        let got: Vec<&str> = err
            .lines()
            .filter_map(|l| {
                ["error: ", "warning: "]
                    .iter()
                    .filter_map(|s| {
                        l.find(&format!(": {s}"))
                            .map(|i| &l[i + 2..])
                            .or_else(|| l.starts_with(s).then_some(l))
                    })
                    .next()
            })
            .collect();
        if code != exit {
            failures.push(format!("{name}: exit {code}, expected {exit}"));
        }
        let matches =
            got.len() == expects.len() && got.iter().zip(&expects).all(|(g, e)| g.starts_with(e));
        if !matches {
            failures.push(format!("{name}: got {got:?}, expected {expects:?}"));
        }
    }
    (files.len(), failures)
}
