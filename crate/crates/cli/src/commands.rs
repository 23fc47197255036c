use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rcl_core::harness::{
    contaminate, contaminate_windows, gen_synthetic, ingest_demand_csv, reduce_ev, run_suite, write_histogram_csv,
    AdvisorChoice, Algorithm, BenchReport, EvConfig, ExpertChoice, Family, SuiteOptions, SyntheticSpec,
};
use rcl_core::predictor::{load_checkpoint, save_checkpoint, train as train_predictor, write_loss_curve};
use rcl_core::predictor::{Architecture, Predictor, Sample, TrainHyper, TrainMode};
use rcl_core::soco::{CostModel, DelaySchedule, ProblemInstance};
use rcl_core::{ExpertKind, RclConfig, RobdParams};

use crate::config::{RunConfig, Split};
use crate::dataset::{read_dataset, write_dataset, DatasetMeta, ModelSpec};
use crate::error::{CliError, CliResult, IoContext};
use crate::{EvalArgs, GenArgs, ReportArgs, TrainArgs};

const EXPERTS: [&str; 4] = ["hitmin", "robd", "irobd", "robd-predicted"];
const ADVISORS: [&str; 4] = ["zero", "uniform", "expert", "opt"];

fn require<T: Clone>(flag: &Option<T>, file: &Option<T>, name: &str) -> CliResult<T> {
    flag.clone()
        .or_else(|| file.clone())
        .ok_or_else(|| CliError::usage(format!("missing --{name}")))
}

fn ensure_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Io {
            path: path.to_path_buf(),
            source: std::io::ErrorKind::NotFound.into(),
        })
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).at(parent)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn schedule(horizon: usize, q: usize, random: bool, rng: &mut ChaCha8Rng) -> DelaySchedule {
    if random {
        DelaySchedule::random(horizon, q, rng)
    } else {
        DelaySchedule::identical(horizon, q)
    }
}

pub fn gen(a: &GenArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let g = &cfg.gen;
    let out = require(&a.out, &cfg.out, "out")?;
    let q = a.delay.or(cfg.delay).unwrap_or(0);
    let random_delay = a.random_delay || g.random_delay.unwrap_or(false);
    let p_c = a.contaminate.or(g.contaminate).unwrap_or(0.0);
    let sigma = a.sigma.or(g.sigma).unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);

    let (model, instances): (ModelSpec, Vec<ProblemInstance>) = if let Some(csv) = a.ev.clone().or(g.ev.clone()) {
        ensure_exists(&csv)?;
        let window = a.window.or(g.window).unwrap_or(25);
        let stride = a.stride.or(g.stride).unwrap_or(1);
        let mut windows = ingest_demand_csv(&csv, window, stride)?;
        if p_c > 0.0 || a.contaminate.is_some() {
            windows = contaminate_windows(&windows, p_c, sigma, seed)?;
        }
        let dim = windows.first().map_or(1, |w| w.initial.len());
        let mut ev = EvConfig::standard(dim);
        if let Some(b) = a.b.or(g.b) {
            ev.b = b;
        }
        let insts = windows
            .iter()
            .map(|w| Ok(reduce_ev(w, &ev)?.0))
            .collect::<CliResult<Vec<_>>>()?;
        (ModelSpec::Ev(ev), insts)
    } else {
        let family_name = require(&a.family, &g.family, "family")?;
        let family = Family::parse(&family_name).ok_or_else(|| {
            CliError::usage(format!(
                "unknown family {family_name:?}; expected one of {}",
                Family::ALL.map(|f| f.name()).join(", ")
            ))
        })?;
        let dim = a.dim.or(g.dim).unwrap_or(1);
        let memory = a.memory.clone().or(g.memory.clone()).unwrap_or_else(|| vec![1.0]);
        let mut spec = SyntheticSpec::new(
            family,
            a.count.or(g.count).unwrap_or(100),
            a.horizon.or(g.horizon).unwrap_or(24),
            dim,
        );
        spec.lo = a.lower.or(g.lower).unwrap_or(0.0);
        spec.hi = a.upper.or(g.upper).unwrap_or(1.0);
        if !(spec.hi > spec.lo) || spec.dim == 0 || spec.horizon == 0 {
            return Err(CliError::usage("need upper > lower, dim ≥ 1 and horizon ≥ 1"));
        }
        let mut insts = gen_synthetic(seed, &spec)
            .iter()
            .map(|w| Ok(w.to_tracking_instance(memory.len())?))
            .collect::<CliResult<Vec<_>>>()?;
        if p_c > 0.0 || a.contaminate.is_some() {
            insts = contaminate(&insts, p_c, sigma, seed)?;
        }
        let model = ModelSpec::Tracking {
            dim,
            b: a.b.or(g.b).unwrap_or(10.0),
            lower: spec.lo,
            upper: spec.hi,
            memory,
        };
        (model, insts)
    };
    model.build()?;
    let items: Vec<(ProblemInstance, DelaySchedule)> = instances
        .into_iter()
        .map(|inst| {
            let s = schedule(inst.horizon(), q, random_delay, &mut rng);
            (inst, s)
        })
        .collect();
    let meta = DatasetMeta {
        model,
        delay: q,
        count: items.len(),
    };
    write_dataset(&out, &meta, &items)?;
    println!("wrote {} instances to {}", items.len(), out.display());
    Ok(())
}

fn parse_expert(name: &str, model: &CostModel, error: f64, seed: u64) -> CliResult<ExpertChoice> {
    let params = RobdParams::optimal_for(model);
    Ok(match name {
        "hitmin" => ExpertChoice::HitMin,
        "robd" => ExpertChoice::Robd(params),
        "irobd" => ExpertChoice::IRobd(params),
        "robd-predicted" => ExpertChoice::RobdPredicted { params, error, seed },
        _ => {
            return Err(CliError::usage(format!(
                "unknown expert {name:?}; expected one of {}",
                EXPERTS.join(", ")
            )))
        }
    })
}

fn valid_algorithm_names() -> String {
    let mut names = vec!["opt".to_string(), "ml".into(), "zero".into(), "uniform".into()];
    names.extend(EXPERTS.iter().map(|e| e.to_string()));
    for e in EXPERTS {
        names.push(format!("rcl-{e}"));
        names.extend(ADVISORS.iter().map(|a| format!("rcl-{e}-{a}")));
    }
    names.join(", ")
}

struct AlgContext<'a> {
    model: &'a CostModel,
    predictor: Option<Arc<Predictor>>,
    prediction_error: f64,
    seed: u64,
}

impl AlgContext<'_> {
    fn advisor(&self, name: &str) -> CliResult<AdvisorChoice> {
        Ok(match name {
            "ml" => AdvisorChoice::Predictor(
                self.predictor
                    .clone()
                    .ok_or_else(|| CliError::usage("learned advice needs --checkpoint"))?,
            ),
            "zero" => AdvisorChoice::Zero,
            "uniform" => AdvisorChoice::Uniform { seed: self.seed },
            "expert" => AdvisorChoice::Expert,
            "opt" => AdvisorChoice::Opt,
            _ => unreachable!("advisor names are matched by the caller"),
        })
    }

    fn parse(&self, name: &str) -> CliResult<Algorithm> {
        let expert = |n: &str| parse_expert(n, self.model, self.prediction_error, self.seed);
        if name == "opt" {
            return Ok(Algorithm::Opt);
        }
        if matches!(name, "ml" | "zero" | "uniform") {
            return Ok(Algorithm::Ml(self.advisor(name)?));
        }
        if EXPERTS.contains(&name) {
            return Ok(Algorithm::Expert(expert(name)?));
        }
        if let Some(rest) = name.strip_prefix("rcl-") {
            // Longest expert names first so "robd-predicted" is not read as "robd".
            let mut experts = EXPERTS;
            experts.sort_by_key(|e| std::cmp::Reverse(e.len()));
            for e in experts {
                if rest == e {
                    return Ok(Algorithm::Rcl {
                        expert: expert(e)?,
                        advisor: self.advisor("ml")?,
                    });
                }
                if let Some(adv) = rest.strip_prefix(e).and_then(|s| s.strip_prefix('-')) {
                    if ADVISORS.contains(&adv) {
                        return Ok(Algorithm::Rcl {
                            expert: expert(e)?,
                            advisor: self.advisor(adv)?,
                        });
                    }
                }
            }
        }
        Err(CliError::usage(format!(
            "unknown algorithm {name:?}; valid names: {}",
            valid_algorithm_names()
        )))
    }
}

pub fn train(a: &TrainArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let t = &cfg.train;
    let mode_name = a.mode.clone().or(t.mode.clone()).unwrap_or_else(|| "oblivious".into());
    let lambda0 = a.lambda0.or(cfg.lambda0);
    let mode = match mode_name.as_str() {
        "oblivious" => TrainMode::Oblivious,
        "aware" => {
            let lambda = a
                .lambda
                .or(t.lambda)
                .ok_or_else(|| CliError::usage("--mode aware requires --lambda"))?;
            RunConfig::check_lambdas(&[lambda], lambda0)?;
            let config = match lambda0 {
                Some(l0) => RclConfig::with_lambda0(lambda, l0)?,
                None => RclConfig::new(lambda)?,
            };
            TrainMode::Aware { config }
        }
        m => return Err(CliError::usage(format!("unknown mode {m:?}; expected oblivious or aware"))),
    };
    let data = require(&a.data, &cfg.data, "data")?;
    ensure_exists(&data)?;
    let out = require(&a.out, &cfg.checkpoint, "out")?;
    let split = Split::parse(&a.split.clone().or(cfg.split.clone()).unwrap_or_else(|| "train".into()))?;

    let ds = read_dataset(&data)?;
    let expert_name = a.expert.clone().or(t.expert.clone()).unwrap_or_else(|| "irobd".into());
    let expert = match parse_expert(&expert_name, &ds.model, 0.0, seed)? {
        ExpertChoice::HitMin => ExpertKind::HitMin,
        ExpertChoice::Robd(p) => ExpertKind::Robd(p),
        ExpertChoice::IRobd(p) => ExpertKind::IRobd(p),
        ExpertChoice::RobdPredicted { .. } => {
            return Err(CliError::usage("training supports hitmin, robd or irobd as expert"))
        }
    };
    let items = split.select(&ds.items);
    if items.is_empty() {
        return Err(CliError::usage(format!("the selected split of {} is empty", data.display())));
    }
    let samples = items
        .par_iter()
        .map(|it| Sample::new(it.instance.clone(), it.schedule.clone(), &ds.model, &expert))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &items[0].instance;
    let mut arch = Architecture::new(first.dim(), first.context_dim(), ds.model.p(), ds.meta.delay);
    if let Some(h) = a.hidden.or(t.hidden) {
        arch.hidden = h;
    }
    let mut predictor = Predictor::centered(arch, seed, &ds.model.space);
    let defaults = TrainHyper::default();
    let hyper = TrainHyper {
        epochs: a.epochs.or(t.epochs).unwrap_or(defaults.epochs),
        batch: a.batch.or(t.batch).unwrap_or(defaults.batch),
        lr: a.lr.or(t.lr).unwrap_or(defaults.lr),
        seed,
        clip_norm: a.clip_norm.or(t.clip_norm).unwrap_or(defaults.clip_norm),
        momentum: a.momentum.or(t.momentum).unwrap_or(defaults.momentum),
    };
    info!("training {} on {} samples for {} epochs", mode.name(), samples.len(), hyper.epochs);
    let curve = train_predictor(&mut predictor, &samples, &ds.model, mode, &hyper)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).at(parent)?;
    }
    save_checkpoint(&predictor, mode.name(), &out)?;
    let loss_path = a
        .loss_csv
        .clone()
        .or(t.loss_csv.clone())
        .unwrap_or_else(|| out.with_extension("loss.csv"));
    write_loss_curve(&curve, create(&loss_path)?)?;
    match curve.last() {
        Some(p) => println!("final train loss {:.6}", p.loss),
        None => println!("no epochs run; checkpoint holds the initial weights"),
    }
    Ok(())
}

fn label_file(algorithm: &str, lambda: Option<f64>) -> String {
    match lambda {
        Some(l) => format!("{algorithm}_lambda{l}.csv"),
        None => format!("{algorithm}.csv"),
    }
}

fn write_report(report: &BenchReport, out: &Path, bin_width: f64) -> CliResult<()> {
    fs::create_dir_all(out).at(out)?;
    report.write_csv(create(&out.join("report.csv"))?)?;
    report.write_json(create(&out.join("report.json"))?)?;
    report.write_pairs_csv(create(&out.join("pairs.csv"))?)?;
    report.write_failures_csv(create(&out.join("failures.csv"))?)?;
    let hist = out.join("hist");
    for c in &report.cells {
        let name = label_file(&c.algorithm, c.lambda);
        let name = if report.cells.iter().filter(|o| o.algorithm == c.algorithm && o.lambda == c.lambda).count() > 1 {
            format!("{}_{name}", c.dataset)
        } else {
            name
        };
        write_histogram_csv(&c.ratios, bin_width, create(&hist.join(name))?)?;
    }
    Ok(())
}

fn print_summary(report: &BenchReport) {
    println!("{:<28} {:>8} {:>10} {:>10} {:>10}", "algorithm", "lambda", "AVG", "CR", "projected");
    for c in &report.cells {
        println!(
            "{:<28} {:>8} {:>10.4} {:>10.4} {:>10}",
            c.algorithm,
            c.lambda.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            c.avg,
            c.cr,
            c.frac_projected.map(|f| format!("{f:.3}")).unwrap_or_else(|| "-".into()),
        );
    }
}

pub fn eval(a: &EvalArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let data = require(&a.data, &cfg.data, "data")?;
    ensure_exists(&data)?;
    let out = require(&a.out, &cfg.out, "out")?;
    let names = a
        .algorithms
        .clone()
        .or(cfg.algorithms.clone())
        .ok_or_else(|| CliError::usage(format!("missing --algorithms; valid names: {}", valid_algorithm_names())))?;
    let lambdas = a.lambdas.clone().or(cfg.lambdas.clone()).unwrap_or_else(|| vec![1.0]);
    let lambda0 = a.lambda0.or(cfg.lambda0);
    RunConfig::check_lambdas(&lambdas, lambda0)?;
    let split = Split::parse(&a.split.clone().or(cfg.split.clone()).unwrap_or_else(|| "test".into()))?;

    let ds = read_dataset(&data)?;
    let predictor = match a.checkpoint.clone().or(cfg.checkpoint.clone()) {
        Some(p) => {
            ensure_exists(&p)?;
            Some(Arc::new(load_checkpoint(&p)?.0))
        }
        None => None,
    };
    let ctx = AlgContext {
        model: &ds.model,
        predictor,
        prediction_error: a.prediction_error,
        seed,
    };
    let algorithms = names.iter().map(|n| ctx.parse(n)).collect::<CliResult<Vec<_>>>()?;
    let items = split.select(&ds.items);
    let name = data
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    let dataset = ds.into_dataset(&name, items);
    let opts = SuiteOptions {
        lambdas,
        lambda0,
        jobs: None,
    };
    let report = run_suite(&[dataset], &algorithms, &opts)?;
    write_report(&report, &out, a.bin_width)?;
    print_summary(&report);
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::PartialFailure(report.failures.len()))
    }
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    ensure_exists(&a.input)?;
    let text = fs::read_to_string(&a.input).at(&a.input)?;
    let report: BenchReport = serde_json::from_str(&text).map_err(|source| CliError::Config {
        path: a.input.clone(),
        source,
    })?;
    let out: PathBuf = a
        .out
        .clone()
        .unwrap_or_else(|| a.input.parent().map(Path::to_path_buf).unwrap_or_default());
    write_report(&report, &out, a.bin_width)?;
    print_summary(&report);
    Ok(())
}
