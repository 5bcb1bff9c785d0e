use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use mfdim::estimators::{
    box_series, conv_series, coarse_spectrum, cover_proxy_with, legendre_transform, s_energy,
    tau_box, tau_conv, to_json_with_meta, write_estimates_csv, write_proxies_csv,
    write_series_csv, write_spectrum_csv, BoxTables, ConvTables, HolderBall, MomentMode,
    ProxyKind, ProxyTables, ScaleSpec, TauOptions, ESTIMATE_HEADER,
};
use mfdim::experiments::{catalog_entry, run_suite, MeasureSpec, SuiteSpec};
use mfdim::geometry::{project_measure, sample_grassmannian};
use mfdim::measure::{from_ifs_with, write_measure_csv, IfsOptions, MeasureCsvHeader};
use mfdim::provenance::Provenance;
use mfdim::{DiscreteMeasure, IfsSpec, RandomSource, Subspace};

use crate::grid::{parse_grid, parse_scales};
use crate::plot::render;
use crate::{
    CheckArgs, Cli, Command, EnergyArgs, EstimateArgs, EstimateMethod, GenArgs, MeasureArgs,
    PlotArgs, ProjectArgs, ProxyArg, SpectrumArgs, SpectrumMode, TauColumn,
};

/// Seed used when neither --seed nor MFDIM_SEED is given.
pub const DEFAULT_SEED: u64 = 0;

/// A configuration or input problem; reported on one line, exit status 2.
#[derive(Debug)]
pub struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<mfdim::Error> for Failure {
    fn from(e: mfdim::Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure(s)
    }
}

fn keyed<E: fmt::Display>(key: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure(format!("{key}: {e}"))
}

type Res<T> = Result<T, Failure>;

/// Dispatches a parsed command line; the value is the exit status.
pub fn run(cli: &Cli) -> Res<u8> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let ctx = Ctx { seed, stream: cli.streams };
    match &cli.command {
        Command::Gen(a) => gen(&ctx, a),
        Command::Estimate(a) => estimate(&ctx, a),
        Command::Project(a) => project(&ctx, a),
        Command::Energy(a) => energy(&ctx, a),
        Command::Spectrum(a) => spectrum(&ctx, a),
        Command::Check(a) => check(&ctx, a),
        Command::Plot(a) => plot(a),
    }
    .map(|ok| if ok { 0 } else { 1 })
}

struct Ctx {
    seed: u64,
    stream: u64,
}

impl Ctx {
    fn rng(&self) -> RandomSource {
        RandomSource::new(self.seed, self.stream)
    }

    /// Provenance with a hash of the command, its non-output arguments, the
    /// seed and the contents of the input files.
    fn provenance(&self, command: &str, args: &impl Serialize, inputs: &[&Path]) -> Res<Provenance> {
        let mut files = Vec::new();
        for p in inputs {
            let bytes = fs::read(p).map_err(keyed(&p.display().to_string()))?;
            files.push(hex(&Sha256::digest(&bytes)));
        }
        let canonical = serde_json::json!({
            "command": command,
            "args": args,
            "inputs": files,
            "seed": self.seed,
            "stream": self.stream,
        });
        let hash = hex(&Sha256::digest(canonical.to_string().as_bytes()));
        Ok(Provenance::new(Some(self.seed), Some(hash[..16].to_string())))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to `out`, or standard output when absent.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Res<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(keyed(&format!("--out {}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(keyed("stdout")),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

impl MeasureArgs {
    fn spec(&self) -> Res<MeasureSpec> {
        match (&self.measure, &self.catalog) {
            (Some(path), None) => Ok(MeasureSpec::Csv { path: path.clone() }),
            (None, Some(name)) => {
                catalog_entry(name).map_err(keyed("--catalog"))?;
                Ok(MeasureSpec::Catalog { name: name.clone(), depth: self.depth })
            }
            _ => Err(Failure("--measure or --catalog: exactly one measure source is required".into())),
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        self.measure.iter().map(PathBuf::as_path).collect()
    }

    fn load(&self) -> Res<(DiscreteMeasure, MeasureSpec)> {
        let spec = self.spec()?;
        let mu = spec.build().map_err(keyed(if self.measure.is_some() { "--measure" } else { "--catalog" }))?;
        Ok((mu, spec))
    }
}

fn scales_for(text: Option<&str>, spec: &MeasureSpec) -> Res<ScaleSpec> {
    match text {
        Some(t) => parse_scales(t).map_err(keyed("--scales")),
        None => Ok(spec.recommended_scales()),
    }
}

fn gen(ctx: &Ctx, a: &GenArgs) -> Res<bool> {
    let (spec, default_depth) = match (&a.ifs, &a.catalog) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(keyed("--ifs"))?;
            (IfsSpec::from_json(&text).map_err(keyed("--ifs"))?, None)
        }
        (None, Some(name)) => {
            let e = catalog_entry(name).map_err(keyed("--catalog"))?;
            (e.spec, Some(e.depth))
        }
        (None, None) => return Err(Failure("--ifs: required".into())),
    };
    let depth = a
        .depth
        .or(default_depth)
        .ok_or_else(|| Failure("--depth: required with --ifs".into()))?;
    if a.atom_budget == 0 {
        return Err(Failure("--atom-budget: must be positive".into()));
    }
    if a.samples == Some(0) {
        return Err(Failure("--samples: must be positive".into()));
    }
    let inputs: Vec<&Path> = a.ifs.iter().map(PathBuf::as_path).collect();
    let prov = ctx.provenance("gen", a, &inputs)?;
    let opts = IfsOptions {
        atom_budget: a.atom_budget,
        seed_point: None,
        sampling: a.samples.map(|s| (ctx.rng(), s)),
    };
    let mu = from_ifs_with(&spec, depth, &opts).map_err(keyed("--depth"))?;
    log::info!("generated {} atoms in R^{}", mu.len(), mu.dim());
    let header = MeasureCsvHeader { provenance: prov };
    emit(a.out.as_deref(), &csv_bytes(|b| write_measure_csv(&mu, &header, b)))?;
    Ok(true)
}

fn estimate(ctx: &Ctx, a: &EstimateArgs) -> Res<bool> {
    let q = parse_grid(&a.q).map_err(keyed("--q"))?;
    if a.max_depth > 12 {
        return Err(Failure(format!("--max-depth: at most 12, got {}", a.max_depth)));
    }
    if let Some(t) = a.conv_tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure(format!("--conv-tolerance: must lie in (0, 1), got {t}")));
        }
    }
    let spec = a.source.spec()?;
    let scales = scales_for(a.scales.as_deref(), &spec)?;
    let prov = ctx.provenance("estimate", a, &a.source.inputs())?;
    let (mu, _) = a.source.load()?;
    let s = a.s.unwrap_or(mu.dim() as f64);
    let grid = scales
        .grid(mu.diameter(), mu.resolution(), q.clone())
        .map_err(keyed("--scales"))?;
    let opts = TauOptions {
        mode: if a.method == EstimateMethod::Integral { MomentMode::Integral } else { MomentMode::Packing },
        exact_masses: a.exact_masses,
        conv_tolerance: a.conv_tolerance,
    };
    let view = mu.view();

    if let Some(kind) = a.proxy {
        let kind = match kind {
            ProxyArg::BoxLower => ProxyKind::BoxLower,
            ProxyArg::BoxUpper => ProxyKind::BoxUpper,
            ProxyArg::ConvLower => ProxyKind::ConvLower,
            ProxyArg::ConvUpper => ProxyKind::ConvUpper,
        };
        let proxies = if kind.is_conv() {
            let t = ConvTables::new(&view, grid.window_radii(), s, opts.conv_tolerance).map_err(keyed("--s"))?;
            cover_proxy_with(&view, ProxyTables::Conv(&t), &q, kind, a.max_depth)
        } else {
            let t = BoxTables::new(&view, grid.window_radii(), opts.exact_masses);
            cover_proxy_with(&view, ProxyTables::Box(&t, opts.mode), &q, kind, a.max_depth)
        }
        .map_err(keyed("--proxy"))?;
        emit(a.out.as_deref(), &csv_bytes(|b| write_proxies_csv(b, &prov, &proxies)))?;
        return Ok(true);
    }

    let (estimates, series) = match a.method {
        EstimateMethod::Conv => {
            let est = tau_conv(&view, s, &grid, &opts).map_err(keyed("--method conv"))?;
            let series = match &a.series_out {
                Some(_) => conv_series(&view, s, &grid, &opts)?,
                None => Vec::new(),
            };
            (est, series)
        }
        _ => {
            let est = tau_box(&view, &grid, &opts).map_err(keyed("--scales"))?;
            let series = match &a.series_out {
                Some(_) => box_series(&view, &grid, &opts).into_iter().map(|(s, _)| s).collect(),
                None => Vec::new(),
            };
            (est, series)
        }
    };
    if let Some(p) = &a.series_out {
        emit(Some(p), &csv_bytes(|b| write_series_csv(b, &prov, &series)))?;
    }
    emit(a.out.as_deref(), &csv_bytes(|b| write_estimates_csv(b, &prov, &estimates)))?;
    Ok(true)
}

fn project(ctx: &Ctx, a: &ProjectArgs) -> Res<bool> {
    let mut inputs = a.source.inputs();
    if let Some(p) = &a.subspace {
        inputs.push(p);
    }
    a.source.spec()?;
    let prov = ctx.provenance("project", a, &inputs)?;
    let (mu, _) = a.source.load()?;
    let v = match (&a.subspace, a.random_subspace) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(keyed("--subspace"))?;
            Subspace::from_json(&text).map_err(keyed("--subspace"))?
        }
        (None, Some(m)) => sample_grassmannian(mu.dim(), m, 1, &ctx.rng())
            .map_err(keyed("--random-subspace"))?
            .remove(0),
        (None, None) => return Err(Failure("--subspace: required".into())),
    };
    let proj = project_measure(&mu, &v).map_err(keyed("--subspace"))?;
    if let Some(p) = &a.subspace_out {
        let mut json = serde_json::to_string_pretty(&v).expect("subspace serialises");
        json.push('\n');
        emit(Some(p), json.as_bytes())?;
    }
    let header = MeasureCsvHeader { provenance: prov };
    emit(a.out.as_deref(), &csv_bytes(|b| write_measure_csv(&proj, &header, b)))?;
    Ok(true)
}

fn energy(ctx: &Ctx, a: &EnergyArgs) -> Res<bool> {
    let s_values = parse_grid(&a.s).map_err(keyed("--s"))?;
    if let Some(s) = s_values.iter().find(|s| **s <= 0.0) {
        return Err(Failure(format!("--s: exponents must be positive, got {s}")));
    }
    a.source.spec()?;
    let prov = ctx.provenance("energy", a, &a.source.inputs())?;
    let (mu, _) = a.source.load()?;
    let mut out = format!("{}\ns,energy\n", prov.comment_line(&[]));
    for &s in &s_values {
        let e = s_energy(&mu, s)?;
        out.push_str(&format!("{},{}\n", mfdim::csv_f64(s), mfdim::csv_f64(e)));
    }
    emit(a.out.as_deref(), out.as_bytes())?;
    Ok(true)
}

fn spectrum(ctx: &Ctx, a: &SpectrumArgs) -> Res<bool> {
    let alpha = parse_grid(&a.alpha).map_err(keyed("--alpha"))?;
    let mut inputs = a.source.inputs();
    if let Some(p) = &a.tau {
        inputs.push(p);
    }
    let curve = match a.mode {
        SpectrumMode::Legendre => {
            let (prov, f) = match (&a.tau, &a.q) {
                (Some(path), None) => {
                    let prov = ctx.provenance("spectrum", a, &inputs)?;
                    (prov, read_tau_csv(path, a.column)?)
                }
                (None, Some(q)) => {
                    let q = parse_grid(q).map_err(keyed("--q"))?;
                    let spec = a.source.spec()?;
                    let scales = scales_for(a.scales.as_deref(), &spec)?;
                    let prov = ctx.provenance("spectrum", a, &inputs)?;
                    let (mu, _) = a.source.load()?;
                    let grid = scales.grid(mu.diameter(), mu.resolution(), q).map_err(keyed("--scales"))?;
                    let est = tau_box(&mu.view(), &grid, &TauOptions::default()).map_err(keyed("--scales"))?;
                    let f = est
                        .iter()
                        .map(|e| {
                            let v = match a.column {
                                TauColumn::Lower => e.lower,
                                TauColumn::Ols => e.ols,
                                TauColumn::Upper => e.upper,
                            };
                            (e.q, v)
                        })
                        .collect();
                    (prov, f)
                }
                _ => return Err(Failure("--tau or --q: legendre mode needs exactly one of them".into())),
            };
            (prov, legendre_transform(&f, &alpha).map_err(keyed("--tau"))?)
        }
        SpectrumMode::Coarse => {
            if !(a.epsilon > 0.0 && a.epsilon.is_finite()) {
                return Err(Failure(format!("--epsilon: must be positive, got {}", a.epsilon)));
            }
            let spec = a.source.spec()?;
            let scales = scales_for(a.scales.as_deref(), &spec)?;
            let prov = ctx.provenance("spectrum", a, &inputs)?;
            let (mu, _) = a.source.load()?;
            let radii = scales.radii(mu.diameter()).map_err(keyed("--scales"))?;
            let ball = if a.plain_ball { HolderBall::Plain } else { HolderBall::Triple };
            (prov, coarse_spectrum(&mu, &alpha, &radii, a.epsilon, ball).map_err(keyed("--scales"))?)
        }
    };
    let (prov, curve) = curve;
    emit(a.out.as_deref(), &csv_bytes(|b| write_spectrum_csv(b, &prov, &curve)))?;
    Ok(true)
}

/// (q, value) pairs of one estimate kind; non-finite values are dropped.
fn read_tau_csv(path: &Path, column: TauColumn) -> Res<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(keyed("--tau"))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(ESTIMATE_HEADER) {
        return Err(Failure(format!("--tau: {} is not an estimate csv", path.display())));
    }
    let col = match column {
        TauColumn::Lower => 2,
        TauColumn::Ols => 3,
        TauColumn::Upper => 4,
    };
    let mut kind: Option<String> = None;
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Failure(format!("--tau: row {} is malformed", k + 1));
        if fields.len() != 9 {
            return Err(bad());
        }
        match &kind {
            None => kind = Some(fields[1].to_string()),
            Some(prev) if prev != fields[1] => {
                return Err(Failure("--tau: file mixes estimate kinds".into()));
            }
            _ => {}
        }
        let q: f64 = fields[0].parse().map_err(|_| bad())?;
        let v: f64 = fields[col].parse().map_err(|_| bad())?;
        if v.is_finite() {
            out.push((q, v));
        }
    }
    Ok(out)
}

fn check(ctx: &Ctx, a: &CheckArgs) -> Res<bool> {
    let text = fs::read_to_string(&a.suite).map_err(keyed("suite"))?;
    let mut suite = SuiteSpec::from_json(&text).map_err(keyed(&a.suite.display().to_string()))?;
    suite.resolve_paths(a.suite.parent().unwrap_or(Path::new(".")));
    let mut inputs = vec![a.suite.as_path()];
    inputs.extend(suite.input_paths());
    let prov = ctx.provenance("check", a, &inputs)?;
    let report = run_suite(&suite.specs, &ctx.rng());
    print!("{}", report.table());
    if let Some(p) = &a.out {
        let json = to_json_with_meta(&prov, &report).map_err(keyed("report"))?;
        emit(Some(p), json.as_bytes())?;
    }
    Ok(!report.any_failure())
}

fn plot(a: &PlotArgs) -> Res<bool> {
    let text = fs::read_to_string(&a.input).map_err(keyed(&a.input.display().to_string()))?;
    let (_, svg) = render(&text).map_err(keyed(&a.input.display().to_string()))?;
    let out = a.out.clone().unwrap_or_else(|| a.input.with_extension("svg"));
    emit(Some(&out), svg.as_bytes())?;
    Ok(true)
}
