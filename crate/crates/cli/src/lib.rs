//! Batch drivers behind the `fracfuse` binary.
//!
//! Each `run_*` function processes its inputs in order, writes one report line
//! per image to the supplied writer and returns a [`BatchSummary`] whose
//! [`exit_code`](BatchSummary::exit_code) the binary passes to the shell.

use fracfuse::imstats::{export_stats_csv, histogram, image_record, percentile_span, StatsRecord};
use fracfuse::pipeline::{dehaze, estimate_params, DehazeParams, Variant};
use fracfuse::{load_image, save_image, RasterImage};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Dehaze,
    Stats,
    Hist,
    Bench,
}

/// Invalid invocation: bad flag values, unreadable config file, no inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Optional settings from flags or a config file. `None` leaves the
/// estimated or default value in place.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub variant: Option<Variant>,
    pub k: Option<f64>,
    pub nu: Option<f64>,
    pub scales: Option<Vec<f64>>,
    pub gocs: Option<bool>,
    pub jobs: Option<usize>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ParamOverrides {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: ParamOverrides) -> ParamOverrides {
        ParamOverrides {
            variant: self.variant.or(base.variant),
            k: self.k.or(base.k),
            nu: self.nu.or(base.nu),
            scales: self.scales.or(base.scales),
            gocs: self.gocs.or(base.gocs),
            jobs: self.jobs.or(base.jobs),
            reps: self.reps.or(base.reps),
            out: self.out.or(base.out),
        }
    }

    pub fn apply(&self, params: &mut DehazeParams) {
        if let Some(v) = self.variant {
            params.variant = v;
        }
        if let Some(k) = self.k {
            params.k = k;
        }
        if let Some(nu) = self.nu {
            params.nu = nu;
        }
        if let Some(s) = &self.scales {
            params.scales = s.clone();
        }
        if let Some(g) = self.gocs {
            params.gocs_enabled = g;
        }
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    /// Keys: variant, k, nu, scales, gocs, jobs, reps, out.
    pub fn parse_config(text: &str) -> Result<ParamOverrides, UsageError> {
        let mut o = ParamOverrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| usage(format!("config line {}: {key}: {e}", n + 1));
            match key {
                "variant" => o.variant = Some(value.parse().map_err(|e: fracfuse::Error| bad(e.to_string()))?),
                "k" => o.k = Some(parse_real(value).map_err(bad)?),
                "nu" => o.nu = Some(parse_real(value).map_err(bad)?),
                "scales" => o.scales = Some(parse_scales(value).map_err(bad)?),
                "gocs" => o.gocs = Some(value.parse().map_err(|_| bad(format!("expected true or false, got {value}")))?),
                "jobs" => o.jobs = Some(parse_count(value).map_err(bad)?),
                "reps" => o.reps = Some(parse_count(value).map_err(bad)?),
                "out" => o.out = Some(PathBuf::from(value)),
                other => return Err(usage(format!("config line {}: unknown key {other}", n + 1))),
            }
        }
        Ok(o)
    }

    pub fn load_config(path: &Path) -> Result<ParamOverrides, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("not a number: {s}"))
}

fn parse_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected an integer >= 1, got {s}")),
    }
}

/// Parses a comma-separated scale list such as `1,2,4`.
pub fn parse_scales(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| parse_real(t.trim())).collect()
}

/// A validated invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub overrides: ParamOverrides,
    pub reps: usize,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(command: Command, inputs: Vec<PathBuf>, overrides: ParamOverrides) -> Result<Self, UsageError> {
        if inputs.is_empty() {
            return Err(usage("at least one input path is required"));
        }
        // Probe the overrides against the defaults so bad values fail before any work.
        let mut probe = DehazeParams::default();
        overrides.apply(&mut probe);
        probe.validate().map_err(|e| usage(e.to_string()))?;
        Ok(Self {
            command,
            inputs,
            out_dir: overrides.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            reps: overrides.reps.unwrap_or(1),
            jobs: overrides.jobs.unwrap_or(1),
            overrides,
        })
    }

    /// Parameters for one image: estimated from its content, then overridden.
    pub fn params_for(&self, img: &RasterImage) -> fracfuse::Result<DehazeParams> {
        let mut p = estimate_params(img)?;
        self.overrides.apply(&mut p);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Default)]
pub struct BatchSummary {
    pub succeeded: usize,
    pub failures: Vec<(PathBuf, String)>,
}

impl BatchSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }

    fn record<T>(&mut self, path: &Path, r: &Result<T, String>, log: &mut dyn Write) {
        match r {
            Ok(_) => self.succeeded += 1,
            Err(e) => {
                let _ = writeln!(log, "error: {}: {e}", path.display());
                self.failures.push((path.to_path_buf(), e.clone()));
            }
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into())
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

/// Output path `<out>/<stem>_pa.<ext>`, keeping the input's extension.
pub fn dehaze_output_path(input: &Path, out_dir: &Path) -> PathBuf {
    let ext = input.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "png".into());
    out_dir.join(format!("{}_pa.{ext}", stem(input)))
}

/// Runs the pipeline on RGB or gray input; gray images are replicated to
/// three channels and collapsed back to one.
pub fn dehaze_any(img: &RasterImage, config: &RunConfig) -> fracfuse::Result<RasterImage> {
    let rgb = img.to_rgb();
    let out = dehaze(&rgb, &config.params_for(&rgb)?)?;
    if img.channels() == 1 {
        RasterImage::gray(out.plane(0).clone())
    } else {
        Ok(out)
    }
}

struct Processed {
    output: PathBuf,
    size: (usize, usize),
    seconds: f64,
}

fn dehaze_one(input: &Path, config: &RunConfig) -> Result<Processed, String> {
    let img = load_image(input).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = dehaze_any(&img, config).map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let output = dehaze_output_path(input, &config.out_dir);
    save_image(&out, &output).map_err(|e| e.to_string())?;
    Ok(Processed {
        output,
        size: (img.width(), img.height()),
        seconds,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| format!("cannot start worker pool: {e}"))
}

/// De-hazes every input, up to `jobs` at a time. Report lines follow input order.
pub fn run_dehaze(config: &RunConfig, log: &mut dyn Write) -> BatchSummary {
    let mut summary = BatchSummary::default();
    let results: Vec<Result<Processed, String>> = match ensure_dir(&config.out_dir).and_then(|_| pool(config.jobs)) {
        Ok(pool) => pool.install(|| config.inputs.par_iter().map(|p| dehaze_one(p, config)).collect()),
        Err(e) => config.inputs.iter().map(|_| Err(e.clone())).collect(),
    };
    for (input, r) in config.inputs.iter().zip(&results) {
        if let Ok(p) = r {
            let _ = writeln!(
                log,
                "{} -> {} {}x{} {:.3}s",
                input.display(),
                p.output.display(),
                p.size.0,
                p.size.1,
                p.seconds
            );
        }
        summary.record(input, r, log);
    }
    summary
}

/// Writes `stats.csv` in the output directory with one row per readable input.
pub fn run_stats(config: &RunConfig, log: &mut dyn Write) -> BatchSummary {
    let mut summary = BatchSummary::default();
    let results: Vec<Result<StatsRecord, String>> = config
        .inputs
        .iter()
        .map(|p| {
            let img = load_image(p).map(|i| i.to_rgb()).map_err(|e| e.to_string())?;
            image_record(stem(p), &img).map_err(|e| e.to_string())
        })
        .collect();
    let mut rows = Vec::new();
    for (input, r) in config.inputs.iter().zip(results) {
        summary.record(input, &r, log);
        if let Ok(row) = r {
            rows.push(row);
        }
    }
    if !rows.is_empty() {
        let path = config.out_dir.join("stats.csv");
        let written = ensure_dir(&config.out_dir).and_then(|_| export_stats_csv(&rows, &path).map_err(|e| e.to_string()));
        match written {
            Ok(()) => {
                let _ = writeln!(log, "{} rows -> {}", rows.len(), path.display());
            }
            Err(e) => {
                let _ = writeln!(log, "error: {}: {e}", path.display());
                summary.failures.push((path, e));
            }
        }
    }
    summary
}

fn write_hist(input: &Path, out_dir: &Path, log: &mut dyn Write) -> Result<(), String> {
    let img = load_image(input).map_err(|e| e.to_string())?;
    let labels: &[&str] = if img.channels() == 1 { &["gray"] } else { &["r", "g", "b"] };
    let hists: Vec<_> = img.planes().iter().map(histogram).collect();
    let path = out_dir.join(format!("{}_hist.csv", stem(input)));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header: Vec<&str> = std::iter::once("bin").chain(labels.iter().copied()).collect();
    w.write_record(&header).map_err(|e| e.to_string())?;
    for bin in 0..hists[0].counts().len() {
        let mut row = vec![bin.to_string()];
        row.extend(hists.iter().map(|h| h.counts()[bin].to_string()));
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    let spans = labels
        .iter()
        .zip(&hists)
        .map(|(l, h)| percentile_span(h, 1.0, 99.0).map(|s| format!("{l}={s}")).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let _ = writeln!(log, "{} -> {} span(1-99) {}", input.display(), path.display(), spans.join(" "));
    Ok(())
}

/// Writes `<stem>_hist.csv` (256 bins per channel) for every input.
pub fn run_hist(config: &RunConfig, log: &mut dyn Write) -> BatchSummary {
    let mut summary = BatchSummary::default();
    let dir = ensure_dir(&config.out_dir);
    for input in &config.inputs {
        let r = dir.clone().and_then(|_| write_hist(input, &config.out_dir, log));
        summary.record(input, &r, log);
    }
    summary
}

/// Timing results. `mean_seconds` is the arithmetic mean of `seconds`.
#[derive(Clone, Debug)]
pub struct BenchReport {
    pub images: Vec<String>,
    pub seconds: Vec<f64>,
    pub mean_seconds: f64,
    pub count: usize,
    pub reps: usize,
    pub params: ParamOverrides,
}

impl BenchReport {
    pub fn new(images: Vec<String>, seconds: Vec<f64>, reps: usize, params: ParamOverrides) -> Self {
        let count = seconds.len();
        let mean_seconds = if count == 0 { 0.0 } else { seconds.iter().sum::<f64>() / count as f64 };
        Self {
            images,
            seconds,
            mean_seconds,
            count,
            reps,
            params,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["image", "seconds"]).expect("in-memory write");
        for (name, s) in self.images.iter().zip(&self.seconds) {
            w.write_record([name.as_str(), &format!("{s:.6}")]).expect("in-memory write");
        }
        w.write_record(["mean", &format!("{:.6}", self.mean_seconds)]).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Best-of-`reps` wall time of `dehaze` per image, one image at a time on a
/// single worker thread. Decoding happens before timing starts.
pub fn run_bench(config: &RunConfig, log: &mut dyn Write) -> (BenchReport, BatchSummary) {
    let mut summary = BatchSummary::default();
    let (mut names, mut times) = (Vec::new(), Vec::new());
    let single = pool(1);
    for input in &config.inputs {
        let r = single.as_ref().map_err(|e| e.clone()).and_then(|pool| {
            let img = load_image(input).map(|i| i.to_rgb()).map_err(|e| e.to_string())?;
            let params = config.params_for(&img).map_err(|e| e.to_string())?;
            pool.install(|| {
                let mut best = f64::INFINITY;
                for _ in 0..config.reps {
                    let start = Instant::now();
                    std::hint::black_box(dehaze(&img, &params).map_err(|e| e.to_string())?);
                    best = best.min(start.elapsed().as_secs_f64());
                }
                Ok::<_, String>((img.width(), img.height(), best))
            })
        });
        if let Ok((w, h, s)) = &r {
            let _ = writeln!(log, "{} {w}x{h} best of {} {s:.3}s", input.display(), config.reps);
            names.push(stem(input));
            times.push(*s);
        }
        summary.record(input, &r, log);
    }
    let report = BenchReport::new(names, times, config.reps, config.overrides.clone());
    let path = config.out_dir.join("bench.csv");
    let written = ensure_dir(&config.out_dir)
        .and_then(|_| std::fs::write(&path, report.to_csv()).map_err(|e| format!("{}: {e}", path.display())));
    match written {
        Ok(()) => {
            let _ = writeln!(log, "mean {:.3}s over {} images -> {}", report.mean_seconds, report.count, path.display());
        }
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            summary.failures.push((path, e));
        }
    }
    (report, summary)
}

pub fn run(config: &RunConfig, log: &mut dyn Write) -> BatchSummary {
    match config.command {
        Command::Dehaze => run_dehaze(config, log),
        Command::Stats => run_stats(config, log),
        Command::Hist => run_hist(config, log),
        Command::Bench => run_bench(config, log).1,
    }
}
