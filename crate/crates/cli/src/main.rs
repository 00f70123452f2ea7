//! `coarsekit`: command-line surface over the coarse geometry toolkit.
//! Every command reads JSON, computes deterministically, and writes a JSON
//! report with an embedded run manifest and a certificate of the
//! inequalities it verified. Exit codes: 0 ok, 2 schema, 3 precondition,
//! 4 capacity.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use coarsekit_core::arith::{rat_from_str, rat_to_string, Rat};
use coarsekit_core::coarse::{
    bounded_bound, classify_c0, classify_fusion, classify_hybrid, control_profile,
    LevelAssignment,
};
use coarsekit_core::coarsening::{
    check_swindle_hypotheses, swindle_sequence, CoarseningRepr, CoarseningSpace,
};
use coarsekit_core::complexes::{nerve, ComplexRepr, SubComplex};
use coarsekit_core::decomposition::{
    admissibility_report, build_canonical_tree, verify_tree_labels, DecompositionTree, LabelCoords,
    TreeNode,
};
use coarsekit_core::json::{CoverRepr, EntourageRepr, LevelsRepr, SpaceRepr};
use coarsekit_core::kgroups::quotient_tower_report;
use coarsekit_core::spaces::{build_anticech, cover_diameter, degree, FilteredMetricSpace};
use coarsekit_core::FailureClass;

#[derive(Parser)]
#[command(name = "coarsekit", version, about = "finite-scale coarse geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed recorded in the run manifest (all computations are
    /// deterministic; the seed only tags the report).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Nerve of a cover.
    Nerve {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Certified anti-Cech cover sequence from a radius schedule.
    Anticech {
        #[arg(long)]
        space: PathBuf,
        /// Comma-separated increasing radii, e.g. 1,4,16.
        #[arg(long)]
        schedule: String,
        #[command(flatten)]
        common: Common,
    },
    /// Coarsening space from an anti-Cech sequence.
    Coarsen {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        schedule: String,
        /// Barycentric subdivision depth of each level graph.
        #[arg(long, default_value_t = 0)]
        depth: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Swindle sequence tables on a coarsening space.
    CheckSwindle {
        #[arg(long)]
        coarsening: PathBuf,
        /// Base node label, e.g. L1:0; defaults to the first node.
        #[arg(long)]
        basepoint: Option<String>,
        #[arg(long, default_value_t = 20)]
        kmax: usize,
        /// Comma-separated ball radii for the escape table.
        #[arg(long, default_value = "1,2,4")]
        radii: String,
        #[command(flatten)]
        common: Common,
    },
    /// Entourage control classification.
    Classify {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
        /// Decay tolerances per filtration stage, nonincreasing.
        #[arg(long)]
        c0_schedule: String,
        /// Level assignment JSON; filtration levels when omitted.
        #[arg(long)]
        levels: Option<PathBuf>,
        /// Tolerances per level for the hybrid check.
        #[arg(long)]
        hybrid_schedule: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Collapse-tower report over a finite point set and a chain of subsets.
    Kpipeline {
        /// Comma-separated point ids.
        #[arg(long)]
        points: String,
        /// Semicolon-separated chain of comma-separated subsets.
        #[arg(long)]
        chain: String,
        #[command(flatten)]
        common: Common,
    },
    /// Canonical decomposition tree with admissibility report.
    Decompose {
        #[arg(long)]
        complex: PathBuf,
        /// Comma-separated scales in quarter turns.
        #[arg(long, default_value = "1,2,3,4")]
        scales: String,
        #[arg(long)]
        c0_schedule: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    class: FailureClass,
    message: String,
}

impl Failure {
    fn schema(message: impl Into<String>) -> Self {
        Failure { class: FailureClass::Schema, message: message.into() }
    }
}

trait IntoFailure {
    fn fail(self) -> Failure;
}

macro_rules! classed_error {
    ($($ty:ty),* $(,)?) => {$(
        impl IntoFailure for $ty {
            fn fail(self) -> Failure {
                Failure { class: self.class(), message: self.to_string() }
            }
        }
    )*};
}
classed_error!(
    coarsekit_core::spaces::SpaceError,
    coarsekit_core::complexes::ComplexError,
    coarsekit_core::coarse::CoarseError,
    coarsekit_core::coarsening::CoarseningError,
    coarsekit_core::kgroups::KGroupError,
    coarsekit_core::decomposition::DecompositionError,
);

trait Ctx<T> {
    fn ctx(self) -> Result<T, Failure>;
}

impl<T, E: IntoFailure> Ctx<T> for Result<T, E> {
    fn ctx(self) -> Result<T, Failure> {
        self.map_err(IntoFailure::fail)
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("COARSEKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let class = match f.class {
                FailureClass::Schema => "schema",
                FailureClass::Precondition => "precondition",
                FailureClass::Capacity => "capacity",
            };
            eprintln!("{}", json!({ "error": f.message, "class": class }));
            ExitCode::from(f.class.exit_code() as u8)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::schema(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::schema(format!("{}: {e}", path.display())))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in bytes {
        h = (h ^ *b as u64).wrapping_mul(0x100000001b3);
    }
    h
}

fn manifest(command: &str, inputs: &[(&str, &Path)], seed: u64) -> Result<Value, Failure> {
    let mut hashes = serde_json::Map::new();
    for (name, path) in inputs {
        let bytes =
            fs::read(path).map_err(|e| Failure::schema(format!("{}: {e}", path.display())))?;
        hashes.insert(name.to_string(), json!(format!("fnv1a:{:016x}", fnv1a(&bytes))));
    }
    Ok(json!({
        "command": command,
        "inputs": hashes,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

fn emit(common: &Common, report: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize");
    match &common.out {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| Failure::schema(format!("{}: {e}", path.display()))),
    }
}

fn parse_schedule(s: &str) -> Result<Vec<Rat>, Failure> {
    s.split(',')
        .map(|part| rat_from_str(part).map_err(Failure::schema))
        .collect()
}

fn load_space(path: &Path) -> Result<FilteredMetricSpace, Failure> {
    parse_json::<SpaceRepr>(path)?.into_space().ctx()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Nerve { space, cover, common } => {
            let m = manifest("nerve", &[("space", &space), ("cover", &cover)], common.seed)?;
            let sp = load_space(&space)?;
            let cv = parse_json::<CoverRepr>(&cover)?.into_cover(&sp).ctx()?;
            let nv = nerve(&cv).ctx()?;
            let deg = degree(&sp, &cv).ctx()?;
            let diam = cover_diameter(&sp, &cv).ctx()?;
            let report = json!({
                "manifest": m,
                "complex": to_value(&ComplexRepr::from_complex(&nv)),
                "dimension": nv.dim(),
                "degree": deg,
                "cover_diameter": rat_to_string(&diam),
                "certificate": [
                    format!("dim(nerve) + 1 = {} <= degree = {}", nv.dim() + 1, deg),
                    "downward closure verified on construction".to_string(),
                ],
            });
            emit(&common, &report)
        }
        Command::Anticech { space, schedule, common } => {
            let m = manifest("anticech", &[("space", &space)], common.seed)?;
            let sp = load_space(&space)?;
            let radii = parse_schedule(&schedule)?;
            let ac = build_anticech(&sp, &radii).ctx()?;
            let covers: Vec<Value> = ac
                .covers
                .iter()
                .map(|c| {
                    json!({
                        "members": c
                            .members()
                            .iter()
                            .map(|mbr| {
                                mbr.iter().map(|&i| sp.point_ids()[i].clone()).collect::<Vec<_>>()
                            })
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            let cert: Vec<String> = ac
                .certificate
                .steps
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    s.next_lebesgue_lower_bound.as_ref().map(|leb| {
                        format!(
                            "diam(U_{}) = {} <= lebesgue_lower_bound(U_{}) = {} : {}",
                            i + 1,
                            s.diameter,
                            i + 2,
                            leb,
                            if s.chain_inequality_holds == Some(true) { "ok" } else { "VIOLATED" }
                        )
                    })
                })
                .collect();
            let report = json!({
                "manifest": m,
                "covers": covers,
                "steps": to_value(&ac.certificate.steps),
                "certificate": cert,
            });
            emit(&common, &report)
        }
        Command::Coarsen { space, schedule, depth, common } => {
            let m = manifest("coarsen", &[("space", &space)], common.seed)?;
            let sp = load_space(&space)?;
            let radii = parse_schedule(&schedule)?;
            let ac = build_anticech(&sp, &radii).ctx()?;
            let x = CoarseningSpace::build(&sp, &ac.covers, depth).ctx()?;
            let report = json!({
                "manifest": m,
                "coarsening": to_value(&CoarseningRepr::from_space(&x)),
                "levels": x.level_count(),
                "nodes": x.node_count(),
                "certificate": [
                    "anti-Cech chain inequalities verified on construction",
                    "level-internal vertex distances equal pi/2 times skeleton hops",
                    "vertical edges respect the connecting maps",
                ],
            });
            emit(&common, &report)
        }
        Command::CheckSwindle { coarsening, basepoint, kmax, radii, common } => {
            let m = manifest("check-swindle", &[("coarsening", &coarsening)], common.seed)?;
            // accept either a bare coarsening schema or a coarsen report
            let repr: CoarseningRepr = {
                let text = read_file(&coarsening)?;
                let value: Value = serde_json::from_str(&text)
                    .map_err(|e| Failure::schema(format!("{}: {e}", coarsening.display())))?;
                let inner = value.get("coarsening").cloned().unwrap_or(value);
                serde_json::from_value(inner)
                    .map_err(|e| Failure::schema(format!("{}: {e}", coarsening.display())))?
            };
            let x = repr.into_space().ctx()?;
            let base = match basepoint {
                None => 0,
                Some(label) => x
                    .node_by_label(&label)
                    .ok_or_else(|| Failure::schema(format!("unknown node {label:?}")))?,
            };
            let maps = swindle_sequence(&x, base, kmax).ctx()?;
            let ball_radii = parse_schedule(&radii)?;
            let rep = check_swindle_hypotheses(&x, &maps, base, &ball_radii).ctx()?;
            let report = json!({
                "manifest": m,
                "basepoint": x.node_label(base),
                "kmax": kmax,
                "report": to_value(&rep),
                "certificate": [
                    format!("uniform step bound finite: {}", rep.step_bound),
                    format!("control table entries: {}", rep.control.len()),
                ],
            });
            emit(&common, &report)
        }
        Command::Classify { space, entourage, c0_schedule, levels, hybrid_schedule, common } => {
            let mut inputs: Vec<(&str, &Path)> =
                vec![("space", space.as_path()), ("entourage", entourage.as_path())];
            if let Some(l) = &levels {
                inputs.push(("levels", l.as_path()));
            }
            let m = manifest("classify", &inputs, common.seed)?;
            let sp = load_space(&space)?;
            let e = parse_json::<EntourageRepr>(&entourage)?.into_entourage(&sp).ctx()?;
            let schedule = parse_schedule(&c0_schedule)?;
            let bound = bounded_bound(&sp, &e).ctx()?;
            let profile = control_profile(&sp, &e).ctx()?;
            let c0 = classify_c0(&sp, &e, &schedule).ctx()?;
            let level_assignment = match &levels {
                None => LevelAssignment::from_filtration(&sp),
                Some(path) => parse_json::<LevelsRepr>(path)?.into_levels(&sp).ctx()?,
            };
            let fusion = classify_fusion(&sp, &e, &level_assignment, &schedule).ctx()?;
            let hybrid = match hybrid_schedule {
                None => None,
                Some(h) => {
                    let tol = parse_schedule(&h)?;
                    Some(classify_hybrid(&sp, &e, &level_assignment, &tol).ctx()?)
                }
            };
            let monotone = profile.sups.windows(2).all(|w| w[0] >= w[1]);
            let report = json!({
                "manifest": m,
                "bounded_bound": rat_to_string(&bound),
                "control_profile": profile.to_strings(),
                "c0": to_value(&c0),
                "fusion": to_value(&fusion),
                "hybrid": hybrid.as_ref().map(to_value),
                "certificate": [
                    format!("control profile nonincreasing: {monotone}"),
                    format!("sup d over entourage = {}", rat_to_string(&bound)),
                ],
            });
            emit(&common, &report)
        }
        Command::Kpipeline { points, chain, common } => {
            let m = manifest("kpipeline", &[], common.seed)?;
            let point_list: Vec<String> =
                points.split(',').map(|s| s.trim().to_string()).collect();
            let chain_sets: Vec<BTreeSet<String>> = chain
                .split(';')
                .map(|set| set.split(',').map(|s| s.trim().to_string()).collect())
                .collect();
            let rep = quotient_tower_report(&point_list, &chain_sets).ctx()?;
            let all_surjective = rep.stages.iter().all(|s| s.surjective);
            let all_kernels = rep.stages.iter().all(|s| s.kernel_matches_model);
            let report = json!({
                "manifest": m,
                "report": to_value(&rep),
                "certificate": [
                    format!("every stage map surjective: {all_surjective}"),
                    format!("every stage kernel matches the collapse model: {all_kernels}"),
                    format!("composite kernel equals direct kernel: {}", rep.kernels_equal),
                    format!("quotient matches the expected free rank: {}", rep.quotient_matches),
                ],
            });
            emit(&common, &report)
        }
        Command::Decompose { complex, scales, c0_schedule, common } => {
            let m = manifest("decompose", &[("complex", &complex)], common.seed)?;
            let k = parse_json::<ComplexRepr>(&complex)?.into_complex().ctx()?;
            let tree = build_canonical_tree(&k).ctx()?;
            let labels = verify_tree_labels(&tree);
            let scale_list = parse_schedule(&scales)?;
            let schedule = match c0_schedule {
                None => None,
                Some(s) => Some(parse_schedule(&s)?),
            };
            let admissibility =
                admissibility_report(&tree, &scale_list, schedule.as_deref()).ctx()?;
            let separations_positive = admissibility
                .leaves
                .iter()
                .all(|l| l.min_separation_quarters.as_deref() != Some("0"));
            let report = json!({
                "manifest": m,
                "tree": tree_to_json(&tree, &tree.root),
                "admissibility": to_value(&admissibility),
                "certificate": [
                    format!("label laws hold: {}", labels.pass),
                    format!("all leaf family separations positive: {separations_positive}"),
                ],
            });
            emit(&common, &report)
        }
    }
}

fn tree_to_json(tree: &DecompositionTree, node: &TreeNode) -> Value {
    let complex = match node.coords {
        LabelCoords::Base => &tree.base,
        LabelCoords::Refined => &tree.refined,
    };
    let label_names = |label: &SubComplex| -> Vec<Vec<String>> {
        label
            .maximal_simplices()
            .into_iter()
            .map(|s| s.iter().map(|&v| complex.labels()[v as usize].clone()).collect())
            .collect()
    };
    let mut obj = json!({
        "name": node.name,
        "coords": to_value(&node.coords),
        "label": label_names(&node.label),
    });
    if let Some(children) = &node.children {
        obj["children"] =
            json!([tree_to_json(tree, &children.0), tree_to_json(tree, &children.1)]);
    }
    obj
}
