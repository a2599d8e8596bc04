use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ballconv::conv::{conv_b3, conv_s2, B3Options, DirectionGrid, Kernel, ShellDecomposition, ShellFrame};
use ballconv::moments::{
    complex_to_real, fit_moments, quadrature_moments, read_moments, real_to_complex, reconstruction_error,
    write_moments, Alpha, MomentVector, PinvConfig, SampleSet,
};
use ballconv::net::{
    accuracy, extract_features, labeled_features, load_checkpoint, mean_average_precision, nearest_neighbor_accuracy,
    read_descriptors, retrieve, save_checkpoint, train, write_descriptors, Checkpoint, DescriptorRecord, FeatureMode,
    Model, Params, PipelineConfig,
};
use ballconv::shape::{drop_points, load_shape};
use ballconv::symmetry::{normalized_symmetry, symmetry_power, Axis};
use ballconv::verify::{reconstruction_series, run_suite, Suite, VerifyOptions};

use crate::cli::*;
use crate::config::{pick, FileConfig};
use crate::data::{parent_label, DataSpec, DEFAULT_K};

const DEFAULT_ORDER: usize = 6;

pub struct Session {
    pub seed: u64,
    pub file: FileConfig,
}

impl Session {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn header(&self, command: &str) -> String {
        format!("ballconv {command} {}  seed {}", env!("CARGO_PKG_VERSION"), self.seed)
    }

    fn order(&self, flag: Option<usize>) -> usize {
        pick(flag, &self.file.n_order, DEFAULT_ORDER)
    }

    fn k_samples(&self, flag: Option<usize>) -> usize {
        pick(flag, &self.file.k_samples, DEFAULT_K)
    }

    fn load(&self, path: &Path, k: usize, rng: &mut ChaCha8Rng) -> Result<SampleSet> {
        load_shape(path, k, rng).with_context(|| format!("loading {}", path.display()))
    }

    fn pipeline_config(&self, m: &ModelArgs) -> Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let conv = m.conv.or(self.file.conv);
        let features = pick(m.features, &self.file.features, FeatureKind::Conv);
        let mode = match (features, conv) {
            (FeatureKind::AxialSymmetry, Some(ConvKind::Spherical)) => {
                bail!("--features axial-symmetry bypasses the convolution layer; drop --conv spherical")
            }
            (FeatureKind::AxialSymmetry, _) => FeatureMode::AxialSymmetry,
            (FeatureKind::Conv, Some(ConvKind::Spherical)) => FeatureMode::Spherical,
            (FeatureKind::Conv, _) => FeatureMode::Volumetric,
        };
        let config = PipelineConfig {
            order: self.order(m.n_order),
            n_kernels: pick(m.kernels, &self.file.kernels, d.n_kernels),
            n_shells: pick(m.shells, &self.file.shells, d.n_shells),
            frame: shell_frame(pick(m.frame, &self.file.frame, Frame::Local)),
            mode,
            pinv_iters: pick(m.pinv_iters, &self.file.pinv_iters, d.pinv_iters),
            lr: pick(m.lr, &self.file.lr, d.lr),
            batch_size: pick(m.batch_size, &self.file.batch_size, d.batch_size),
            epochs: pick(m.epochs, &self.file.epochs, d.epochs),
            seed: self.seed,
            ..d
        };
        config.validate()?;
        Ok(config)
    }
}

fn shell_frame(f: Frame) -> ShellFrame {
    match f {
        Frame::Local => ShellFrame::Local,
        Frame::Global => ShellFrame::Global,
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_trained(path: &Path) -> Result<(Checkpoint, Model)> {
    let ck = load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let model = ck.model().with_context(|| format!("checkpoint {} is inconsistent", path.display()))?;
    Ok((ck, model))
}

pub fn run(command: &Command, ctx: &Session) -> Result<()> {
    match command {
        Command::Moments(a) => moments(ctx, a),
        Command::Convolve(a) => convolve(ctx, a),
        Command::Symmetry(a) => symmetry(ctx, a),
        Command::Train(a) => train_cmd(ctx, a),
        Command::Classify(a) => classify(ctx, a),
        Command::Descriptor(a) => descriptor(ctx, a),
        Command::Retrieve(a) => retrieve_cmd(ctx, a),
        Command::Verify(a) => verify(ctx, a),
        Command::PlotData(a) => plot_data(ctx, a),
    }
}

/// Squared coefficient mass grouped by degree `l`.
fn power_by_degree(c: &MomentVector) -> Vec<f64> {
    let layout = c.layout();
    let mut power = vec![0.0; c.order() + 1];
    for (i, e) in layout.entries().iter().enumerate() {
        power[e.l] += c.coeffs()[i].powi(2) + c.coeffs()[layout.len() + i].powi(2);
    }
    power
}

fn moments(ctx: &Session, a: &MomentsArgs) -> Result<()> {
    let order = ctx.order(a.sampling.n_order);
    let k = ctx.k_samples(a.sampling.k_samples);
    let method = pick(a.method, &ctx.file.method, Method::Lsq);
    let alpha: Alpha = pick(a.alpha.clone(), &ctx.file.alpha, "auto".to_string()).parse()?;
    let iters = pick(a.iters, &ctx.file.iters, 30);
    let samples = ctx.load(&a.input, k, &mut ctx.rng())?;
    let c = match method {
        Method::Lsq => fit_moments(&samples, order, &PinvConfig { alpha, iters })?,
        // equal weights treat the samples as a uniform Monte Carlo rule
        Method::Quadrature => complex_to_real(&quadrature_moments(&samples.clone().with_monte_carlo_weights(), order)?),
    };
    let err = reconstruction_error(&c, &samples)?;
    write_moments(&a.out, &c).with_context(|| format!("writing {}", a.out.display()))?;

    println!("{}", ctx.header("moments"));
    println!("input          {} ({} samples)", a.input.display(), samples.len());
    println!("order          {order}");
    println!("method         {}", if method == Method::Lsq { "lsq" } else { "quadrature" });
    println!("recon error    {:.6e} mean abs ({:.4}%)", err.mean_abs, err.percent);
    let power = power_by_degree(&c);
    let total: f64 = power.iter().sum();
    let shares: Vec<String> =
        power.iter().enumerate().map(|(l, p)| format!("l{l}={:.3}", p / total.max(f64::MIN_POSITIVE))).collect();
    println!("power share    {}", shares.join(" "));
    println!("wrote          {}", a.out.display());
    Ok(())
}

fn convolve(ctx: &Session, a: &ConvolveArgs) -> Result<()> {
    let base = read_moments(&a.kernel).with_context(|| format!("reading kernel {}", a.kernel.display()))?;
    let order = base.order();
    if let Some(n) = a.sampling.n_order.filter(|&n| n != order) {
        bail!("--n-order {n} differs from the kernel order {order}");
    }
    let kernel = if a.project {
        Kernel::project(&base)
    } else {
        Kernel::new(base).context("kernel has non-zonal content; pass --project to keep only its m = 0 part")?
    };
    let samples = ctx.load(&a.input, ctx.k_samples(a.sampling.k_samples), &mut ctx.rng())?;
    let grid = DirectionGrid::equiangular(a.grid.azimuth, a.grid.polar)?;
    eprintln!("{}", ctx.header("convolve"));
    let mut out = output(&a.out)?;
    match a.shells {
        None => {
            let c = fit_moments(&samples, order, &PinvConfig::offline_auto())?;
            conv_s2(&real_to_complex(&c), &kernel, &grid)?.write_csv(&mut out)?;
        }
        Some(n) => {
            let options =
                B3Options { frame: shell_frame(pick(a.frame, &ctx.file.frame, Frame::Local)), ..Default::default() };
            let map = conv_b3(&samples, &kernel, &grid, &ShellDecomposition::new(n)?, &options)?;
            if !map.empty_shells.is_empty() {
                log::warn!("shells {:?} contain no samples; their slices are zero", map.empty_shells);
            }
            map.write_csv(&mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn symmetry(ctx: &Session, a: &SymmetryArgs) -> Result<()> {
    let c = if a.moments {
        read_moments(&a.input).with_context(|| format!("reading {}", a.input.display()))?
    } else {
        let samples = ctx.load(&a.input, ctx.k_samples(a.sampling.k_samples), &mut ctx.rng())?;
        fit_moments(&samples, ctx.order(a.sampling.n_order), &PinvConfig::offline_auto())?
    };
    let omega = real_to_complex(&c);
    let axes: Vec<Axis> = match a.axes {
        AxisSet::Tetrahedral => Axis::tetrahedral(),
        AxisSet::Pole => vec![Axis::NORTH_POLE],
        AxisSet::Grid => DirectionGrid::equiangular(a.grid.azimuth, a.grid.polar)?
            .directions()
            .iter()
            .map(|&(alpha, beta)| Axis::new(alpha, beta))
            .collect::<ballconv::Result<_>>()?,
    };
    eprintln!("{}", ctx.header("symmetry"));
    let mut out = output(&a.out)?;
    writeln!(out, "alpha,beta,power,normalized")?;
    let mut best = (Axis::NORTH_POLE, f64::NEG_INFINITY);
    for axis in axes {
        let s = normalized_symmetry(&omega, axis)?;
        writeln!(out, "{},{},{},{}", axis.alpha, axis.beta, symmetry_power(&omega, axis), s)?;
        if s > best.1 {
            best = (axis, s);
        }
    }
    out.flush()?;
    eprintln!("most symmetric axis: alpha {:.6} beta {:.6} normalized {:.6}", best.0.alpha, best.0.beta, best.1);
    Ok(())
}

fn train_cmd(ctx: &Session, a: &TrainArgs) -> Result<()> {
    let config = ctx.pipeline_config(&a.model)?;
    let data = DataSpec::resolve(&a.data, &ctx.file)?.load(ctx.seed)?;
    println!("{}", ctx.header("train"));
    println!(
        "{} classes, {} train / {} test shapes, mode {:?}, order {}, {} kernels, {} shells",
        data.n_classes(),
        data.train.len(),
        data.test.len(),
        config.mode,
        config.order,
        config.n_kernels,
        config.n_shells
    );
    let train_set = labeled_features(&data.train, &config)?;
    let test_set = labeled_features(&data.test, &config)?;
    let outcome = train(&config, &data.class_names, &train_set, &test_set)?;
    for e in &outcome.history.epochs {
        let test = e.test_accuracy.map_or("-".to_string(), |t| format!("{t:.4}"));
        println!(
            "epoch {:>3}  lr {:.5}  loss {:.5}  train {:.4}  test {test}",
            e.epoch, e.learning_rate, e.loss, e.train_accuracy
        );
    }
    save_checkpoint(&a.out, &Checkpoint::new(config, data.class_names.clone(), outcome.params))
        .with_context(|| format!("writing checkpoint {}", a.out.display()))?;
    println!("wrote {}", a.out.display());
    if let Some(h) = &a.history {
        fs::write(h, serde_json::to_string_pretty(&outcome.history)?)
            .with_context(|| format!("writing {}", h.display()))?;
        println!("wrote {}", h.display());
    }
    Ok(())
}

fn classify(ctx: &Session, a: &ClassifyArgs) -> Result<()> {
    let (ck, model) = load_trained(&a.checkpoint)?;
    let spec = DataSpec::resolve(&a.data, &ctx.file)?;
    if a.inputs.is_empty() {
        let data = spec.load(ctx.seed)?;
        if data.class_names != ck.class_names {
            bail!("dataset classes {:?} do not match the checkpoint's {:?}", data.class_names, ck.class_names);
        }
        let test = labeled_features(&data.test, model.config())?;
        let acc = accuracy(&model, &ck.params, &test)?;
        println!("{}", ctx.header("classify"));
        println!("test accuracy {acc} on {} shapes", test.len());
        return Ok(());
    }
    eprintln!("{}", ctx.header("classify"));
    let mut rng = ctx.rng();
    let mut out = output(&None)?;
    writeln!(out, "path,label")?;
    for path in &a.inputs {
        let samples = ctx.load(path, spec.k_samples, &mut rng)?;
        let f = extract_features(&samples, model.config())?;
        writeln!(out, "{},{}", path.display(), ck.class_names[model.predict(&ck.params, &f)?])?;
    }
    out.flush()?;
    Ok(())
}

fn describe(model: &Model, params: &Params, samples: &SampleSet) -> Result<Vec<f64>> {
    Ok(model.descriptor(params, &extract_features(samples, model.config())?)?)
}

fn descriptor(ctx: &Session, a: &DescriptorArgs) -> Result<()> {
    let (ck, model) = load_trained(&a.checkpoint)?;
    let spec = DataSpec::resolve(&a.data, &ctx.file)?;
    let records: Vec<DescriptorRecord> = if a.inputs.is_empty() {
        let data = spec.load(ctx.seed)?;
        let shapes: Vec<_> = data.train.iter().chain(&data.test).cloned().collect();
        let features = labeled_features(&shapes, model.config())?;
        shapes
            .iter()
            .zip(&features)
            .map(|(s, (f, label))| {
                Ok(DescriptorRecord {
                    id: s.id.clone(),
                    label: data.class_names[*label].clone(),
                    vector: model.descriptor(&ck.params, f)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        let mut rng = ctx.rng();
        a.inputs
            .iter()
            .map(|p| {
                let samples = ctx.load(p, spec.k_samples, &mut rng)?;
                Ok(DescriptorRecord {
                    id: p.display().to_string(),
                    label: parent_label(p),
                    vector: describe(&model, &ck.params, &samples)?,
                })
            })
            .collect::<Result<_>>()?
    };
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    write_descriptors(&mut w, &records)?;
    w.flush()?;
    println!("{}", ctx.header("descriptor"));
    println!(
        "wrote {} descriptors of width {} to {}",
        records.len(),
        records.first().map_or(0, |r| r.vector.len()),
        a.out.display()
    );
    Ok(())
}

fn retrieve_cmd(ctx: &Session, a: &RetrieveArgs) -> Result<()> {
    let file = File::open(&a.store).with_context(|| format!("opening store {}", a.store.display()))?;
    let store = read_descriptors(BufReader::new(file))?;
    let query = match (&a.query_id, &a.query, &a.checkpoint) {
        (Some(id), _, _) => store
            .iter()
            .find(|r| &r.id == id)
            .with_context(|| format!("no descriptor with id '{id}' in {}", a.store.display()))?
            .vector
            .clone(),
        (None, Some(path), Some(ck_path)) => {
            let (ck, model) = load_trained(ck_path)?;
            let samples = ctx.load(path, ctx.k_samples(a.k_samples), &mut ctx.rng())?;
            describe(&model, &ck.params, &samples)?
        }
        _ => bail!("give a query with --query-id, or --query together with --checkpoint"),
    };
    let ranked = retrieve(&query, &store, a.top)?;
    println!("{}", ctx.header("retrieve"));
    println!("rank,id,label,score");
    for (i, r) in ranked.iter().enumerate() {
        println!("{},{},{},{:.6}", i + 1, r.id, r.label, r.score);
    }
    if store.len() >= 2 {
        println!("nearest-neighbor accuracy {:.4}", nearest_neighbor_accuracy(&store)?);
        println!("mean average precision    {:.4}", mean_average_precision(&store)?);
    }
    Ok(())
}

fn verify(ctx: &Session, a: &VerifyArgs) -> Result<()> {
    let suite: Suite = a.suite.parse()?;
    let report = run_suite(suite, &VerifyOptions { seed: ctx.seed, corrupt_q: a.corrupt_q })?;
    println!("{}", ctx.header("verify"));
    println!("{report}");
    if let Some(p) = &a.report {
        fs::write(p, report.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    if !report.passed {
        return Err(VerificationFailed.into());
    }
    Ok(())
}

/// Marker error for a failed verification, mapped to exit code 1.
#[derive(Debug)]
pub struct VerificationFailed;

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for VerificationFailed {}

fn plot_data(ctx: &Session, a: &PlotDataArgs) -> Result<()> {
    let mut rows: Vec<(&str, f64, f64)> = Vec::new();
    match a.experiment {
        Experiment::ReconVsN => {
            for p in reconstruction_series(ctx.seed, &a.orders, a.shapes)? {
                rows.push(("recon_lsq", p.order as f64, p.lsq));
                rows.push(("recon_quadrature", p.order as f64, p.quadrature));
            }
        }
        Experiment::Dataloss => {
            let Some(ck_path) = &a.checkpoint else {
                bail!("--experiment dataloss re-scores a trained model; pass --checkpoint");
            };
            let (ck, model) = load_trained(ck_path)?;
            let data = DataSpec::resolve(&a.data, &ctx.file)?.load(ctx.seed)?;
            if data.class_names != ck.class_names {
                bail!("dataset classes {:?} do not match the checkpoint's {:?}", data.class_names, ck.class_names);
            }
            for &pct in &a.percents {
                if pct >= 100 {
                    bail!("removal percentage must be below 100, got {pct}");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x6c6f_7373 ^ u64::from(pct) << 32);
                let mut shapes = data.test.clone();
                for s in shapes.iter_mut() {
                    s.samples = drop_points(&s.samples, f64::from(pct) / 100.0, &mut rng)?;
                }
                let set = labeled_features(&shapes, model.config())?;
                rows.push(("dataloss", f64::from(pct), accuracy(&model, &ck.params, &set)?));
            }
        }
    }
    eprintln!("{}", ctx.header("plot-data"));
    let mut out = output(&a.out)?;
    writeln!(out, "experiment,param,value")?;
    for (e, p, v) in rows {
        writeln!(out, "{e},{p},{v}")?;
    }
    out.flush()?;
    Ok(())
}
