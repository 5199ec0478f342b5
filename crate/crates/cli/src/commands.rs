use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C64;
use patchpeps::estimator::{adaptive_estimate_with, patch_expectation_with};
use patchpeps::format::{self, to_json};
use patchpeps::generators::{aklt_chain, product_peps, random_injective_peps};
use patchpeps::lattice::Coord;
use patchpeps::oracle::{exact_expectation_with, OracleConfig, OracleResult};
use patchpeps::parent::{assemble_and_gap, parent_terms, uniform_gap_scan, GapReport};
use patchpeps::peps::{default_blocking, kappa_star};
use patchpeps::sampling::{sampling_estimate, SampleEstimate};
use patchpeps::transfer::{
    connected_correlation, decay_fit, site_transfer_operator, spectrum, strip_transfer_operator, strip_with,
    transfer_correlation, DecayFit, Origin, SpectrumReport, TransferOperator,
};
use patchpeps::{choose_radius, par, DenseTensor, Error, Estimate, EstimatorConfig, Observable, PepsState, Result};
use serde::Serialize;

use crate::args::*;
use crate::doc::{emit, error_doc, exit_code, result_doc, Runtime};

const THREADS_VAR: &str = "PATCHPEPS_THREADS";

fn configure(cli: &Cli) -> Result<Runtime> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Argument(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(e.to_string()))?;
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    if cli.sequential {
        par::set_parallel(false);
    }
    #[cfg(feature = "parallel")]
    let threads = if par::parallel_enabled() { rayon::current_num_threads() } else { 1 };
    #[cfg(not(feature = "parallel"))]
    let threads = 1;
    Ok(Runtime { parallel: par::parallel_enabled(), threads })
}

pub fn run(cli: &Cli) -> i32 {
    let name = cli.command.name();
    let runtime = match configure(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("patchpeps {name}: {e}");
            return exit_code(&e);
        }
    };
    let start = Instant::now();
    match &cli.command {
        Command::Gen(a) => plain(name, gen(a)),
        Command::Estimate(a) => document(name, a, a.out.as_deref(), runtime, start, estimate(a)),
        Command::Oracle(a) => document(name, a, a.out.as_deref(), runtime, start, oracle(a)),
        Command::Sample(a) => document(name, a, a.out.as_deref(), runtime, start, sample(a)),
        Command::Transfer(a) => document(name, a, a.out.as_deref(), runtime, start, transfer(a)),
        Command::ParentGap(a) => document(name, a, a.out.as_deref(), runtime, start, parent_gap(a)),
        Command::BenchScaling(a) => plain(name, bench_scaling(a).and_then(|csv| emit(a.out.as_deref(), &csv))),
    }
}

fn plain(name: &str, r: Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("patchpeps {name}: {e}");
            exit_code(&e)
        }
    }
}

fn document<C: Serialize, R: Serialize>(name: &str, config: &C, out: Option<&Path>, runtime: Runtime, start: Instant, r: Result<R>) -> i32 {
    let written = r.and_then(|res| {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        emit(out, &to_json(&result_doc(name, config, runtime, res, ms))?)
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("patchpeps {name}: {e}");
            if let Ok(text) = to_json(&error_doc(name, config, &e)) {
                let _ = emit(out, &text);
            }
            exit_code(&e)
        }
    }
}

fn gen(a: &GenArgs) -> Result<()> {
    let peps = match a.kind {
        GenKind::Product => {
            let lat = a.lattice.as_ref().expect("required by clap").spec()?;
            let mut chi = a.chi.clone().unwrap_or_else(|| {
                let mut v = vec![0.0; a.phys_dim];
                v[0] = 1.0;
                v
            });
            let norm = chi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= 0.0 || !norm.is_finite() {
                return Err(Error::Argument("--chi must be a nonzero vector".into()));
            }
            chi.iter_mut().for_each(|x| *x /= norm);
            let chi: Vec<C64> = chi.into_iter().map(|x| C64::new(x, 0.0)).collect();
            product_peps(&lat, &chi)?
        }
        GenKind::Perturbed => {
            let lat = a.lattice.as_ref().expect("required by clap").spec()?;
            let seed = a.seed.expect("required by clap");
            random_injective_peps(&lat, a.bond_dim, a.phys_dim, a.eta, seed)?
        }
        GenKind::Aklt => aklt_chain(a.n.expect("required by clap"))?,
    };
    std::fs::write(&a.out, format::write_peps(&peps)?)?;
    Ok(())
}

/// `name@i,j` presets joined by `*`, or a path to an observable file.
pub fn parse_observable(spec: &str, phys_dim: usize) -> Result<Observable> {
    if !spec.contains('@') {
        return format::load_observable(Path::new(spec));
    }
    let mut factors = spec.split('*').map(|part| {
        let (name, site) = part
            .trim()
            .split_once('@')
            .ok_or_else(|| Error::Argument(format!("observable factor {part:?} needs a site, as in pauli-z@1,1")))?;
        let coord = site
            .split(',')
            .map(|c| c.trim().parse::<usize>().map_err(|_| Error::Argument(format!("bad coordinate in {part:?}"))))
            .collect::<Result<Coord>>()?;
        Observable::preset(name.trim(), coord, phys_dim)
    });
    let first = factors.next().expect("split yields at least one part")?;
    factors.try_fold(first, |acc, f| Observable::product(&acc, &f?))
}

fn load(peps: &Path, obs: &str) -> Result<(PepsState, Observable)> {
    let peps = format::load_peps(peps)?;
    let obs = parse_observable(obs, peps.phys_dim())?;
    Ok((peps, obs))
}

#[derive(Debug, Serialize)]
struct ObservableInfo {
    sites: Vec<Coord>,
    hermitian: bool,
    op_norm: f64,
}

impl From<&Observable> for ObservableInfo {
    fn from(o: &Observable) -> Self {
        ObservableInfo { sites: o.sites().to_vec(), hermitian: o.is_hermitian(), op_norm: o.op_norm() }
    }
}

#[derive(Debug, Serialize)]
struct EstimateResult {
    observable: ObservableInfo,
    estimate: Estimate,
}

fn estimate(a: &EstimateArgs) -> Result<EstimateResult> {
    let (peps, obs) = load(&a.peps, &a.obs)?;
    let mut cfg = EstimatorConfig { c: a.constant, gap: a.gap, kappa_star: a.kappa_star, budget: a.budget };
    let est = match (a.ell, a.epsilon) {
        (Some(ell), _) => patch_expectation_with(&peps, &obs, ell, &cfg)?,
        (None, Some(eps)) if a.from_bound => {
            let kappa = match a.kappa_star {
                Some(k) => k,
                None => kappa_star(&peps, &default_blocking(&peps))?,
            };
            let lat = peps.lattice();
            let ell = choose_radius(eps, kappa, a.gap, obs.op_norm(), a.constant, lat.dimension, lat.diameter())?;
            cfg.kappa_star = Some(kappa);
            patch_expectation_with(&peps, &obs, ell, &cfg)?
        }
        (None, Some(eps)) => adaptive_estimate_with(&peps, &obs, eps, &cfg)?,
        (None, None) => unreachable!("clap requires --ell or --epsilon"),
    };
    Ok(EstimateResult { observable: (&obs).into(), estimate: est })
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    observable: ObservableInfo,
    oracle: OracleResult,
}

fn oracle(a: &OracleArgs) -> Result<OracleOutput> {
    let (peps, obs) = load(&a.peps, &a.obs)?;
    let cfg = OracleConfig { state_vector_cutoff: a.state_vector_cutoff, budget: a.budget, cross_check: !a.no_cross_check };
    let r = exact_expectation_with(&peps, &obs, &cfg)?;
    Ok(OracleOutput { observable: (&obs).into(), oracle: r })
}

#[derive(Debug, Serialize)]
struct SampleOutput {
    observable: ObservableInfo,
    sample: SampleEstimate,
    patch_value: C64,
}

fn sample(a: &SampleArgs) -> Result<SampleOutput> {
    let (peps, obs) = load(&a.peps, &a.obs)?;
    let s = sampling_estimate(&peps, &obs, a.ell, a.epsilon, a.delta, a.seed)?;
    let exact = patch_expectation_with(&peps, &obs, a.ell, &EstimatorConfig::default())?;
    Ok(SampleOutput { observable: (&obs).into(), sample: s, patch_value: exact.value })
}

#[derive(Debug, Serialize)]
struct CorrelationPoint {
    x: usize,
    joint: C64,
    connected: C64,
}

#[derive(Debug, Serialize)]
struct TransferOutput {
    origin: Origin,
    d_eff: usize,
    swap_conj_defect: f64,
    spectrum: SpectrumReport,
    correlations: Vec<CorrelationPoint>,
    decay_fit: Option<DecayFit>,
    warnings: Vec<String>,
}

fn transfer(a: &TransferArgs) -> Result<TransferOutput> {
    let peps = format::load_peps(&a.peps)?;
    let d = peps.phys_dim();
    let op = |name: &str| -> Result<DenseTensor> { Ok(Observable::preset(name, vec![0], d)?.matrix().clone()) };
    let dressed = |o: &DenseTensor| -> Result<TransferOperator> {
        match a.column {
            Some(col) => strip_with(&peps, col, a.width.expect("clap pairs --column with --width"), Some((a.row, o))),
            None => patchpeps::transfer::dressed_transfer(peps.site(a.site.unwrap_or(1)), o),
        }
    };
    let e = match a.column {
        Some(col) => strip_transfer_operator(&peps, col, a.width.expect("clap pairs --column with --width"))?,
        None => {
            if peps.lattice().dimension != 1 {
                return Err(Error::Argument("a 2D state needs --column and --width".into()));
            }
            let site = a.site.unwrap_or(1);
            if site >= peps.num_sites() {
                return Err(Error::Argument(format!("site {site} outside a chain of {}", peps.num_sites())));
            }
            site_transfer_operator(peps.site(site))?
        }
    };
    let report = spectrum(&e)?;
    let mut out = TransferOutput {
        origin: e.origin,
        d_eff: e.d_eff,
        swap_conj_defect: e.swap_conj_defect(),
        spectrum: report,
        correlations: Vec::new(),
        decay_fit: None,
        warnings: Vec::new(),
    };
    if let Some(name_a) = &a.op_a {
        let ea = dressed(&op(name_a)?)?;
        let eb = dressed(&op(a.op_b.as_deref().unwrap_or(name_a))?)?;
        for x in a.x_range.start..=a.x_range.end {
            out.correlations.push(CorrelationPoint {
                x,
                joint: transfer_correlation(&e, &ea, &eb, x, a.length)?,
                connected: connected_correlation(&e, &ea, &eb, x, a.length)?,
            });
        }
        match decay_fit(&e, &ea, &eb, a.x_range.start..=a.x_range.end, a.length) {
            Ok(f) => out.decay_fit = Some(f),
            Err(err @ Error::DegenerateFit(_)) => out.warnings.push(err.to_string()),
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}

fn parent_gap(a: &ParentGapArgs) -> Result<GapReport> {
    let peps = format::load_peps(&a.peps)?;
    if peps.lattice().dimension != 1 {
        return Err(Error::Unsupported("parent-Hamiltonian gaps are computed for chains only".into()));
    }
    match a.window {
        Some(w) => assemble_and_gap(&parent_terms(&peps, w)?, peps.num_sites(), &peps),
        None => uniform_gap_scan(&peps, a.max_n.unwrap_or(peps.num_sites())),
    }
}

fn bench_scaling(a: &BenchArgs) -> Result<String> {
    if a.repeats == 0 {
        return Err(Error::Argument("--repeats must be at least 1".into()));
    }
    let mut csv = String::from("N,ell,D,d,patch_size,wall_time_ms,value\n");
    let cfg = EstimatorConfig { budget: a.budget, ..EstimatorConfig::default() };
    for size in &a.lattice_sizes {
        let lat = size.spec()?;
        let peps = random_injective_peps(&lat, a.bond_dim, a.phys_dim, a.eta, a.seed)?;
        let centre: Coord = lat.extents.iter().map(|e| e / 2).collect();
        let obs = Observable::preset(&a.obs, centre, a.phys_dim)?;
        let n = lat.num_sites();
        for &ell in &a.ells {
            let mut best: Option<(f64, Estimate)> = None;
            let mut failure = None;
            for _ in 0..a.repeats {
                let t = Instant::now();
                match patch_expectation_with(&peps, &obs, ell, &cfg) {
                    Ok(est) => {
                        let ms = t.elapsed().as_secs_f64() * 1e3;
                        if best.as_ref().is_none_or(|b| ms < b.0) {
                            best = Some((ms, est));
                        }
                    }
                    Err(e) if e.class() == patchpeps::ErrorClass::Resource => {
                        failure = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let (big_d, d) = (a.bond_dim, a.phys_dim);
            match (best, failure) {
                (_, Some(e)) => writeln!(csv, "{n},{ell},{big_d},{d},,,error:{}", e.code()),
                (Some((ms, est)), None) => writeln!(
                    csv,
                    "{n},{ell},{big_d},{d},{},{ms:.6},{:.16e}",
                    est.patch_size, est.value.re
                ),
                (None, None) => unreachable!("repeats is positive"),
            }
            .expect("writing to a String");
        }
    }
    Ok(csv)
}
