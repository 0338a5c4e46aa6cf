use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use tlnmf::analysis::{energy_profile, match_atoms, top_atoms};
use tlnmf::audio::{frame_signal, read_wav};
use tlnmf::driver::{run_tlnmf, run_transform_only};
use tlnmf::linalg::{dct_matrix, random_orthogonal, OrthogonalTransform};
use tlnmf::manifold::{LineSearchParams, TransformAlgorithm};
use tlnmf::synthetic::SyntheticProblem;

use crate::artifacts::{
    read_matrix, write_energy, write_log, write_matrix, write_permutation, write_similarity, write_synth_log,
    Manifest,
};
use crate::config::{Overrides, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}

pub struct SynthBench {
    pub dims: Vec<usize>,
    pub frames: usize,
    pub perturbation: f64,
    pub algorithms: Vec<String>,
    pub iters: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Serialize)]
struct SynthConfig<'a> {
    algorithms: &'a [TransformAlgorithm],
    iters: usize,
    line_search: LineSearchParams,
}

pub fn synth_bench(args: &SynthBench) -> Result<()> {
    let algorithms = args
        .algorithms
        .iter()
        .map(|a| a.parse::<TransformAlgorithm>())
        .collect::<tlnmf::Result<Vec<_>>>()?;
    if args.iters == 0 {
        bail!("config error: --iters must be >= 1");
    }
    prepare_dir(&args.out_dir)?;
    let params = LineSearchParams::default();
    let mut outputs = Vec::new();
    for &m in &args.dims {
        let problem = SyntheticProblem::generate(m, args.frames, args.perturbation, args.seed)?;
        for &algorithm in &algorithms {
            let run = run_transform_only(
                problem.frames.view(),
                problem.model.view(),
                &problem.start,
                algorithm,
                args.iters,
                params,
            )?;
            let path = args.out_dir.join(format!("synth_m{m}_{}.csv", algorithm.name()));
            write_synth_log(&path, &run.log)?;
            outputs.push(relative(&args.out_dir, &path));
            let first = &run.log.records[0];
            let last = run.log.last().expect("log holds the initial state");
            println!(
                "M={m} {algorithm}: L {:.3e} -> {:.3e} after {} iterations ({:.2} s)",
                first.objective, last.objective, last.iteration, last.elapsed_s
            );
        }
    }
    let manifest = Manifest {
        command: "synth-bench",
        version: VERSION,
        seed: args.seed,
        threads: args.threads,
        input: json!({
            "synthetic": {
                "m": args.dims,
                "n": args.frames,
                "perturbation": args.perturbation,
            }
        }),
        config: SynthConfig {
            algorithms: &algorithms,
            iters: args.iters,
            line_search: params,
        },
        outputs,
    };
    manifest.write(&args.out_dir, "manifest.json")?;
    Ok(())
}

pub struct Run {
    pub input: PathBuf,
    pub config: Option<PathBuf>,
    pub overrides: Overrides,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

pub fn run(args: &Run) -> Result<()> {
    let config = RunConfig::load(args.config.as_deref())?.apply(&args.overrides)?;
    let signal = read_wav(&args.input)?;
    let frames = frame_signal(&signal, &config.framing)?;
    eprintln!(
        "{}: {:.2} s at {} Hz -> {} frames of {} samples",
        args.input.display(),
        signal.duration_s(),
        signal.sample_rate,
        frames.count(),
        frames.frame_len()
    );
    let result = run_tlnmf(frames.view(), &config.tlnmf)?;

    prepare_dir(&args.out_dir)?;
    let dir = &args.out_dir;
    let artifacts = [
        ("log.csv", None),
        ("transform.bin", Some(result.transform.view())),
        ("w.bin", Some(result.factors.w.view())),
        ("h.bin", Some(result.factors.h.view())),
        ("frames.bin", Some(frames.view())),
    ];
    let mut outputs = Vec::new();
    for (name, matrix) in artifacts {
        let path = dir.join(name);
        match matrix {
            Some(m) => write_matrix(&path, m)?,
            None => write_log(&path, &result.log)?,
        }
        outputs.push(name.to_string());
    }
    let manifest = Manifest {
        command: "run",
        version: VERSION,
        seed: config.tlnmf.seed,
        threads: args.threads,
        input: json!({
            "wav": args.input.display().to_string(),
            "sample_rate": signal.sample_rate,
            "samples": signal.samples.len(),
        }),
        config: &config,
        outputs,
    };
    manifest.write(dir, "manifest.json")?;
    let last = result.log.last().expect("log holds the initial state");
    println!(
        "objective {:.6e} -> {:.6e} after {} outer iterations ({:.2} s)",
        result.log.records[0].objective, last.objective, last.iteration, last.elapsed_s
    );
    Ok(())
}

pub struct Analyze {
    pub run_dir: PathBuf,
    pub second_run_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub count: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

fn load_run(dir: &Path) -> Result<(OrthogonalTransform, ndarray::Array2<f64>)> {
    let phi = read_matrix(&dir.join("transform.bin"))?;
    let frames = read_matrix(&dir.join("frames.bin"))?;
    let phi = OrthogonalTransform::new(phi).with_context(|| format!("{}/transform.bin", dir.display()))?;
    if frames.nrows() != phi.dim() {
        bail!(
            "{}: frames have {} rows but the transform is {}x{}",
            dir.display(),
            frames.nrows(),
            phi.dim(),
            phi.dim()
        );
    }
    Ok((phi, frames))
}

pub fn analyze(args: &Analyze) -> Result<()> {
    let out_dir = args.out_dir.clone().unwrap_or_else(|| args.run_dir.clone());
    prepare_dir(&out_dir)?;
    let (phi, frames) = load_run(&args.run_dir)?;
    let m = phi.dim();
    let learned = energy_profile(&phi, frames.view())?;
    let dct = energy_profile(&dct_matrix(m)?, frames.view())?;
    let random = energy_profile(&random_orthogonal(m, args.seed)?, frames.view())?;
    let energy_path = out_dir.join("energy.csv");
    write_energy(&energy_path, &[("learned", &learned), ("dct", &dct), ("random", &random)])?;
    let mut outputs = vec![relative(&out_dir, &energy_path)];
    let top = m.div_ceil(10);
    println!(
        "top {top} of {m} atoms carry {:.4} (learned), {:.4} (dct), {:.4} (random) of the energy",
        learned.share_of_top(top),
        dct.share_of_top(top),
        random.share_of_top(top)
    );

    let count = args.count.min(m);
    if let Some(second) = &args.second_run_dir {
        let (phi2, frames2) = load_run(second)?;
        if phi2.dim() != m {
            bail!("runs have different frame lengths ({m} and {})", phi2.dim());
        }
        let a = top_atoms(&phi, frames.view(), count)?;
        let b = top_atoms(&phi2, frames2.view(), count)?;
        let report = match_atoms(a.view(), b.view())?;
        let sim = out_dir.join("similarity.csv");
        let perm = out_dir.join("permutation.csv");
        write_similarity(&sim, &report)?;
        write_permutation(&perm, &report)?;
        outputs.push(relative(&out_dir, &sim));
        outputs.push(relative(&out_dir, &perm));
        println!(
            "matched {count} atoms: mean similarity {:.4}",
            report.matched_trace() / count as f64
        );
    }
    let manifest = Manifest {
        command: "analyze",
        version: VERSION,
        seed: args.seed,
        threads: args.threads,
        input: json!({
            "run_dir": args.run_dir.display().to_string(),
            "second_run_dir": args.second_run_dir.as_ref().map(|p| p.display().to_string()),
        }),
        config: json!({ "count": count }),
        outputs,
    };
    manifest.write(&out_dir, "analysis_manifest.json")?;
    Ok(())
}
