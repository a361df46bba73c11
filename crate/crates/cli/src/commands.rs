use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clm_core::io::{
    load_target, read_layout, read_mechanism, read_text, to_json_pretty, trajectory_from_csv,
    trajectory_to_csv, write_atomic, MechanismFile, TargetFile,
};
use clm_core::linkage::{trace_bt, Branch, Linkage, ParamVector, Topology};
use clm_core::metrics::{evaluate_bt, PerformanceReport};
use clm_core::moo::ParetoArchive;
use clm_core::pipeline::{run_hierarchical_partial, run_single_level, PipelineConfig};
use clm_core::plot::{overlay_svg, scatter_svg, trajectory_svg, Series};
use clm_core::rtclm::{orient, stepwise_optimize, Mode, StepwiseConfig, Targets};
use clm_core::trajectory::{bt_to_wt, find_feature_points, multi_wt_layout, LegLayout, Trajectory};
use clm_core::Error;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{resolve_seed, RunManifest};
use crate::ModeArg;

const BRANCH_CANDIDATES: [[Branch; 2]; 4] = [
    [Branch::Positive, Branch::Positive],
    [Branch::Negative, Branch::Positive],
    [Branch::Positive, Branch::Negative],
    [Branch::Negative, Branch::Negative],
];

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Primary => Mode::Primary,
        ModeArg::Auxiliary => Mode::Auxiliary,
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Primary => "primary",
        Mode::Auxiliary => "auxiliary",
    }
}

/// Declared branches, else the first assembly that traces a whole cycle
/// (with a target: the one closest to it).
fn single_crank_bt(
    file: &MechanismFile,
    params: &ParamVector,
    n: usize,
    period: f64,
    target: Option<&Trajectory>,
) -> Result<(Vec<Branch>, Trajectory)> {
    let k = params.topology.dyad_count();
    if let Some(b) = &file.branches {
        let linkage = Linkage::new(params, b)?;
        return Ok((b.clone(), trace_bt(&linkage, n, period)?));
    }
    let mut best: Option<(f64, Vec<Branch>, Trajectory)> = None;
    let mut first_err = None;
    let mut seen = Vec::new();
    for cand in BRANCH_CANDIDATES {
        let b = cand[..k].to_vec();
        if seen.contains(&b) {
            continue;
        }
        seen.push(b.clone());
        let traced = Linkage::new(params, &b).and_then(|l| trace_bt(&l, n, period));
        match traced {
            Ok(bt) => {
                let score = match target {
                    Some(t) => evaluate_bt(&bt, Some(t), &LegLayout::biped())
                        .ok()
                        .and_then(|e| e.report.mse)
                        .unwrap_or(f64::INFINITY),
                    None => 0.0,
                };
                if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                    best = Some((score, b, bt));
                }
                if target.is_none() {
                    break;
                }
            }
            Err(e) if e.is_kinematic() => {
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    match best {
        Some((_, b, bt)) => Ok((b, bt)),
        None => Err(first_err.expect("a branch was tried").into()),
    }
}

fn seven_bar_bt(params: &ParamVector, mode: Mode, n: usize, period: f64) -> Result<Trajectory> {
    let linkage = Linkage::with_default_branches(params)?;
    let design = linkage.rtclm().expect("seven-bar linkage");
    Ok(design.trace(mode, n, period)?)
}

pub fn eval(
    path: &Path,
    target: Option<&Path>,
    csv: bool,
    mode: Option<ModeArg>,
    n: usize,
    period: f64,
    layout: Option<&Path>,
) -> Result<u8> {
    let file = read_mechanism(path)?;
    let params = file.param_vector()?;
    let layout = layout.map(read_layout).transpose()?;
    if params.topology == Topology::RtclmSevenBar {
        if target.is_some() {
            bail!("--target applies to single-crank mechanisms only");
        }
        let layout = layout.unwrap_or_else(LegLayout::quad_trot);
        let modes: Vec<Mode> = match mode {
            Some(m) => vec![mode_of(m)],
            None => vec![Mode::Primary, Mode::Auxiliary],
        };
        let mut rows = Vec::new();
        for m in modes {
            let bt = seven_bar_bt(&params, m, n, period)?;
            let (e, clockwise) = orient(&bt, &layout)?;
            rows.push((m, clockwise, e.report));
        }
        if csv {
            println!("mode,{}", PerformanceReport::CSV_HEADER);
            for (m, _, r) in &rows {
                println!("{},{}", mode_name(*m), r.csv_row());
            }
            return Ok(0);
        }
        let height = |m: Mode| rows.iter().find(|r| r.0 == m).map(|r| r.2.h_m);
        let out = json!({
            "schema": 1,
            "topology": params.topology,
            "h6": height(Mode::Primary),
            "h4": height(Mode::Auxiliary),
            "modes": rows.iter().map(|(m, cw, r)| json!({"mode": mode_name(*m), "clockwise": cw, "report": r})).collect::<Vec<_>>(),
            "reported": file.reported,
        });
        print!("{}", to_json_pretty(&out));
        return Ok(0);
    }
    if mode.is_some() {
        bail!("--mode applies to seven-bar legs only");
    }
    let target = target.map(|t| load_target(t, n)).transpose()?;
    if let Some(t) = &target {
        if t.len() != n {
            bail!("target has {} samples, --n is {n}", t.len());
        }
    }
    let (branches, bt) = single_crank_bt(&file, &params, n, period, target.as_ref())?;
    let layout = layout.unwrap_or_else(LegLayout::biped);
    let e = evaluate_bt(&bt, target.as_ref(), &layout)?;
    if csv {
        println!("{}", PerformanceReport::CSV_HEADER);
        println!("{}", e.report.csv_row());
        return Ok(0);
    }
    let out = json!({
        "schema": 1,
        "topology": params.topology,
        "branches": branches,
        "samples": n,
        "period": period,
        "report": e.report,
        "reported": file.reported,
    });
    print!("{}", to_json_pretty(&out));
    Ok(0)
}

#[derive(Serialize)]
struct LayoutSummary<'a> {
    schema: u32,
    stride: f64,
    dx_ab: Option<f64>,
    dx_bc: Option<f64>,
    dx_cd: Option<f64>,
    layout: &'a LegLayout,
}

pub fn trace(
    path: &Path,
    n: usize,
    period: f64,
    wt: bool,
    layout: Option<&Path>,
    mode: Option<ModeArg>,
    out: Option<&Path>,
) -> Result<u8> {
    let started = Instant::now();
    let file = read_mechanism(path)?;
    let params = file.param_vector()?;
    let bt = if params.topology == Topology::RtclmSevenBar {
        let m = mode_of(mode.unwrap_or(ModeArg::Primary));
        seven_bar_bt(&params, m, n, period)?
    } else {
        if mode.is_some() {
            bail!("--mode applies to seven-bar legs only");
        }
        single_crank_bt(&file, &params, n, period, None)?.1
    };
    let Some(dir) = out else {
        if wt || layout.is_some() {
            bail!("--wt and --layout need --out");
        }
        print!("{}", trajectory_to_csv(&bt));
        return Ok(0);
    };
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        write_atomic(&dir.join(&name), body.as_bytes())?;
        written.push(name);
        Ok(())
    };
    put("bt.csv".into(), trajectory_to_csv(&bt))?;
    let fp = find_feature_points(&bt)?;
    if wt || layout.is_some() {
        put(
            "wt.csv".into(),
            trajectory_to_csv(&bt_to_wt(&bt, &fp)?.rebased()),
        )?;
    }
    if let Some(lp) = layout {
        let layout = read_layout(lp)?;
        let placed = multi_wt_layout(&bt, &fp, &layout)?;
        let base = bt_to_wt(&bt, &fp)?;
        for leg in &placed.legs {
            let t = Trajectory::open(leg.points.clone(), base.dt, base.period)?;
            put(format!("wt_{}.csv", leg.id), trajectory_to_csv(&t))?;
        }
        let summary = LayoutSummary {
            schema: 1,
            stride: placed.stride,
            dx_ab: placed.dx_ab,
            dx_bc: placed.dx_bc,
            dx_cd: placed.dx_cd,
            layout: &layout,
        };
        put("layout.json".into(), to_json_pretty(&summary))?;
    }
    let config = json!({"mechanism": file, "n": n, "period": period, "wt": wt, "mode": mode.map(|m| mode_name(mode_of(m)))});
    RunManifest::new("trace", &config, None, false).finish(dir, started, written)?;
    Ok(0)
}

pub struct SynthArgs {
    pub topology: String,
    pub target: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub single_level: bool,
    pub full_budget: bool,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub jobs: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(clm_core::io::parse_json(
        &read_text(path)?,
        &path.display().to_string(),
    )?)
}

pub fn synth(a: SynthArgs) -> Result<u8> {
    let started = Instant::now();
    let mut cfg = match &a.config {
        Some(p) => read_json::<PipelineConfig>(p)?,
        None if a.full_budget => PipelineConfig::full_budget(),
        None => PipelineConfig::default(),
    };
    if a.full_budget {
        cfg.population = PipelineConfig::full_budget().population;
    }
    cfg.topology = a.topology.parse()?;
    if cfg.topology == Topology::RtclmSevenBar {
        bail!("synth designs single-crank legs; use `clm rtclm` for the seven-bar");
    }
    if let Some(t) = &a.target {
        let t: TargetFile = read_json(t)?;
        if t.kind != "cycloid" {
            bail!("synth targets must be cycloids, got {:?}", t.kind);
        }
        t.cycloid.validate()?;
        cfg.cycloid = t.cycloid;
    }
    if let Some(p) = a.population {
        cfg.population = p;
    }
    if let Some(g) = a.generations {
        cfg.generations = g;
    }
    let (seed, entropy) = resolve_seed(a.seed.or(a.config.as_ref().map(|_| cfg.seed)));
    cfg.seed = seed;
    cfg.jobs = a.jobs;
    cfg.algo(seed).validate()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let mut manifest = RunManifest::new(
        if a.single_level {
            "synth --single-level"
        } else {
            "synth"
        },
        &cfg,
        Some(seed),
        entropy,
    );
    if a.single_level {
        let run = run_single_level(&cfg)?;
        let written = run.write_dir(&a.out)?;
        for x in &run.selected {
            print_design(&x.label, &x.report);
        }
        manifest.finish(&a.out, started, written)?;
        return Ok(0);
    }
    let (run, failure) = run_hierarchical_partial(&cfg)?;
    let written = run.write_dir(&a.out)?;
    for x in &run.incumbents {
        print_design(&x.label, &x.report);
    }
    match failure {
        None => {
            manifest.finish(&a.out, started, written)?;
            Ok(0)
        }
        Some(e) => {
            manifest.error = Some(e.to_string());
            manifest.finish(&a.out, started, written)?;
            Err(e.into())
        }
    }
}

fn print_design(label: &str, r: &PerformanceReport) {
    println!(
        "{label}: MSE {} mm, h_s {:.3} mm, S {:.3} %, I {:.3} mm/s, l_s {:.2} mm",
        r.mse.map_or("-".into(), |m| format!("{m:.3}")),
        r.h_s,
        r.s,
        r.i,
        r.l_s
    );
}

pub fn rtclm(
    h6: f64,
    h4: f64,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    jobs: Option<usize>,
) -> Result<u8> {
    let started = Instant::now();
    let mut cfg = match config {
        Some(p) => read_json::<StepwiseConfig>(p)?,
        None => StepwiseConfig::default(),
    };
    let (seed, entropy) = resolve_seed(seed.or(config.map(|_| cfg.seed)));
    cfg.seed = seed;
    cfg.jobs = jobs;
    let targets = Targets { h6, h4 };
    if targets.is_extrapolation() {
        eprintln!("warning: targets outside the demonstrated range (h6 = 50, h4 in [220, 300])");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = RunManifest::new(
        "rtclm",
        &json!({"targets": targets, "config": cfg}),
        Some(seed),
        entropy,
    );
    manifest.extrapolation = Some(targets.is_extrapolation());
    let run = match stepwise_optimize(targets, &cfg) {
        Ok(run) => run,
        Err(e) => {
            manifest.error = Some(e.to_string());
            manifest.finish(out, started, Vec::new())?;
            return Err(e.into());
        }
    };

    let params = ParamVector::new(Topology::RtclmSevenBar, run.genome.clone())?;
    let mut design = MechanismFile::new(&params, None);
    design.derived = Linkage::with_default_branches(&params)
        .ok()
        .and_then(|l| l.rtclm().map(|d| d.derived));
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        write_atomic(&out.join(name), body.as_bytes())?;
        written.push(name.to_string());
        Ok(())
    };
    put("design.json", design.to_json())?;
    put("config.json", to_json_pretty(&cfg))?;
    put("archive_stage1.jsonl", run.stage1.to_jsonl())?;
    put("archive_stage2.jsonl", run.stage2.to_jsonl())?;
    let summary = json!({
        "schema": 1,
        "targets": run.targets,
        "h6": run.evaluation.h6,
        "h4": run.evaluation.h4,
        "deviations": run.deviations(),
        "reached": run.reached,
        "stopped_early": run.stage2.stopped_early,
        "extrapolation": run.extrapolation,
        "evaluation": run.evaluation,
        "audit": run.audit,
    });
    put("result.json", to_json_pretty(&summary))?;

    manifest.extrapolation = Some(run.extrapolation);
    match (run.evaluation.h6, run.evaluation.h4, run.deviations()) {
        (Some(a), Some(b), Some((d6, d4))) => {
            println!("h6 {a:.3} mm (deviation {d6:+.3}), h4 {b:.3} mm (deviation {d4:+.3})")
        }
        _ => println!("no kinematically valid design"),
    }
    if !run.reached {
        manifest.error = Some("target heights not reached within 0.5 mm".into());
    }
    manifest.finish(out, started, written)?;
    if run.reached {
        Ok(0)
    } else {
        eprintln!("error: target heights not reached within 0.5 mm; best design written");
        Ok(3)
    }
}

pub fn plot(inputs: &[PathBuf], svg: &Path, title: Option<&str>) -> Result<u8> {
    let is = |p: &Path, ext: &str| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext));
    let body = if inputs.iter().any(|p| is(p, "jsonl")) {
        if inputs.len() != 1 {
            bail!("plot one archive at a time");
        }
        let f = fs::File::open(&inputs[0])
            .with_context(|| format!("reading {}", inputs[0].display()))?;
        let archive = ParetoArchive::read_jsonl(BufReader::new(f))?;
        if archive.is_empty() {
            return Err(Error::EmptyArchive.into());
        }
        let name = title
            .map(str::to_string)
            .unwrap_or_else(|| stem(&inputs[0]));
        scatter_svg(&archive.population, &name)?
    } else {
        let curves = inputs
            .iter()
            .map(|p| Ok((stem(p), trajectory_from_csv(&read_text(p)?)?)))
            .collect::<Result<Vec<_>>>()?;
        let name = title
            .map(str::to_string)
            .unwrap_or_else(|| curves[0].0.clone());
        match curves.as_slice() {
            [(_, bt)] if bt.closed => overlay_svg(bt, None, &name)?,
            [(_, bt), (_, target)] if bt.closed && target.closed => {
                overlay_svg(bt, Some(target), &name)?
            }
            _ => {
                let series: Vec<Series> = curves
                    .iter()
                    .map(|(l, t)| Series::from_trajectory(l, t))
                    .collect();
                trajectory_svg(&series, &[], &name)
            }
        }
    };
    write_atomic(svg, body.as_bytes())?;
    Ok(0)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
