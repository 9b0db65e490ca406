use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use koblab::analysis::fit::{log_grid, PowerFit};
use koblab::analysis::mapping::{map_regularity as run_map_regularity, MapRegularityReport, MapSampleOptions};
use koblab::analysis::probe::{pseudoconvexity_probe, ProbeOptions, ProbeReport, Verdict};
use koblab::analysis::sweep::{normal_ray_sweep, DirectionRule, LowerMethod, SweepConfig, SweepReport, UpperMethod};
use koblab::bound::{bound_canonical, bound_domain, BoundOptions, BoundResult};
use koblab::canonical::CanonicalDomain;
use koblab::distance::boundary_projection;
use koblab::domain::DomainSpec;
use koblab::envelope::EnvelopeOptions;
use koblab::holomap::HoloMapSpec;
use koblab::lower::Cone;
use koblab::optimize::OptimizeOptions;
use koblab::CVector;
use serde::Serialize;

use crate::files::{load_domain, load_map, parse_vector};
use crate::output::{gnuplot_table, Sink};
use crate::presets::{builtin_domain, probe_preset, sweep_preset, Window};
use crate::{BoundArgs, MapArgs, OptimizerArgs, ProbeArgs, Status, SweepArgs};

/// Certified samples a sweep needs before its fits are judged.
const MIN_CERTIFIED: usize = 4;

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
}

/// A file path, or a built-in name when no such file exists.
pub fn resolve_domain(arg: &str) -> Result<DomainSpec> {
    let path = Path::new(arg);
    if path.exists() {
        return load_domain(path);
    }
    match builtin_domain(arg) {
        Some(d) => d,
        None => bail!("no domain file or built-in domain named '{arg}'"),
    }
}

fn resolve_map(arg: &str, dim: usize) -> Result<(String, HoloMapSpec)> {
    let path = Path::new(arg);
    if path.exists() {
        return load_map(path);
    }
    if arg == "identity" {
        return Ok(("identity".into(), HoloMapSpec::identity(dim)));
    }
    if let Some(a) = arg.strip_prefix("automorphism:") {
        let a: f64 = a.parse().map_err(|_| anyhow!("bad automorphism parameter '{a}'"))?;
        if !(a.abs() < 1.0) {
            bail!("automorphism parameter must satisfy |a| < 1");
        }
        return Ok((format!("automorphism-{a}"), HoloMapSpec::ball_automorphism(dim, a)));
    }
    bail!("no map file or built-in map named '{arg}'")
}

fn parse_canonical(s: &str) -> Result<CanonicalDomain> {
    let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
    let radii = |a: &str| -> Result<Vec<f64>> {
        a.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("bad radius '{t}'")))
            .collect()
    };
    let d = match (kind, arg) {
        ("disc", None) => CanonicalDomain::UnitDisc,
        ("half-plane", None) => CanonicalDomain::RightHalfPlane,
        ("ball", None) => CanonicalDomain::Ball(1.0),
        ("ball", Some(a)) => match radii(a)?.as_slice() {
            [r] => CanonicalDomain::Ball(*r),
            _ => bail!("ball takes one radius"),
        },
        ("polydisc", Some(a)) => CanonicalDomain::Polydisc(radii(a)?),
        _ => bail!("unknown canonical domain '{s}' (disc, half-plane, ball[:R], polydisc:R1,...)"),
    };
    match &d {
        CanonicalDomain::Ball(r) if !(*r > 0.0) => bail!("radius must be positive"),
        CanonicalDomain::Polydisc(rs) if rs.is_empty() || rs.iter().any(|r| !(*r > 0.0)) => {
            bail!("radii must be positive")
        }
        _ => Ok(d),
    }
}

fn canonical_dim(d: &CanonicalDomain, point: &str) -> usize {
    match d {
        CanonicalDomain::Polydisc(rs) => rs.len(),
        CanonicalDomain::Ball(_) => point.split(',').count().max(1),
        _ => 1,
    }
}

/// `HI:LO:COUNT` or a comma list; must be strictly decreasing and positive.
pub fn parse_deltas(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| anyhow!("bad depth '{t}'"));
    let ds = match s.split(':').collect::<Vec<_>>().as_slice() {
        [hi, lo, n] => {
            let n: usize = n.trim().parse().map_err(|_| anyhow!("bad count '{n}'"))?;
            if n < 2 {
                bail!("a depth grid needs at least two points");
            }
            log_grid(num(hi)?, num(lo)?, n)
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => bail!("depths must be HI:LO:COUNT or a comma list"),
    };
    if ds.iter().any(|d| !(*d > 0.0)) || ds.windows(2).any(|w| w[1] >= w[0]) {
        bail!("depths must be positive and strictly decreasing");
    }
    Ok(ds)
}

fn optimize_options(a: &OptimizerArgs) -> OptimizeOptions {
    OptimizeOptions {
        degree: a.degree,
        effort: a.effort,
    }
}

fn fmt_side(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| format!("{x:.10e}"))
}

pub fn bound(ctx: &Context, a: &BoundArgs) -> Result<Status> {
    let opts = optimize_options(&a.optimizer);
    let (name, res): (String, BoundResult) = match (&a.domain, &a.canonical) {
        (Some(d), _) => {
            let dom = resolve_domain(d)?;
            let n = dom.dim();
            let z = parse_vector(&a.point, n)?;
            let x = parse_vector(&a.direction, n)?;
            let bo = BoundOptions {
                optimize: opts,
                ..BoundOptions::default()
            };
            (dom.name.clone(), bound_domain(&dom, &z, &x, &bo)?)
        }
        (None, Some(cs)) => {
            let cd = parse_canonical(cs)?;
            let n = canonical_dim(&cd, &a.point);
            let z = parse_vector(&a.point, n)?;
            let x = parse_vector(&a.direction, n)?;
            (cs.clone(), bound_canonical(&cd, &z, &x, &opts)?)
        }
        (None, None) => bail!("either --domain or --canonical is required"),
    };
    let mut sink = Sink::new(&ctx.out, &name, "bound")?;
    sink.json(&res)?;
    println!("lower {}", fmt_side(res.lower));
    println!("upper {}", fmt_side(res.upper));
    for d in &res.diagnostics {
        println!("note: {d}");
    }
    sink.report();
    if !res.is_consistent(1e-12) {
        bail!("inconsistent certificates: lower exceeds upper");
    }
    Ok(if res.is_sandwich() { Status::Certified } else { Status::Partial })
}

fn parse_direction(s: &str, n: usize) -> Result<DirectionRule> {
    if s == "normal" {
        return Ok(DirectionRule::Normal);
    }
    if let Some(v) = s.strip_prefix("fixed:") {
        return Ok(DirectionRule::Fixed(parse_vector(v, n)?));
    }
    if let Some(rest) = s.strip_prefix("scaled:") {
        let (e, v) = rest.split_once(':').ok_or_else(|| anyhow!("scaled direction is scaled:EXP:V"))?;
        let exponent: f64 = e.parse().map_err(|_| anyhow!("bad exponent '{e}'"))?;
        return Ok(DirectionRule::Scaled {
            tangential: parse_vector(v, n)?,
            exponent,
        });
    }
    bail!("unknown direction '{s}' (normal, fixed:V, scaled:EXP:V)")
}

fn parse_lower(s: &str) -> Result<LowerMethod> {
    match s {
        "none" => Ok(LowerMethod::None),
        "c11" => Ok(LowerMethod::C11),
        "pseudoconvex" => Ok(LowerMethod::Pseudoconvex),
        _ => bail!("unknown lower method '{s}' (none, c11, pseudoconvex)"),
    }
}

fn parse_upper(s: &str, opts: OptimizeOptions) -> Result<UpperMethod> {
    match s {
        "none" => Ok(UpperMethod::None),
        "optimize" => Ok(UpperMethod::Optimize(opts)),
        "normal-family" => Ok(UpperMethod::NormalFamily),
        _ => bail!("unknown upper method '{s}' (none, optimize, normal-family)"),
    }
}

#[derive(Debug, Serialize)]
struct WindowCheck {
    min: Option<f64>,
    max: Option<f64>,
    slope: Option<f64>,
    met: bool,
}

fn check_window(w: &Window, fit: Option<f64>) -> WindowCheck {
    let finite = |x: f64| x.is_finite().then_some(x);
    WindowCheck {
        min: finite(w.min),
        max: finite(w.max),
        slope: fit,
        met: fit.is_some_and(|s| w.contains(s)),
    }
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    domain: &'a str,
    preset: Option<&'a str>,
    base_point: &'a CVector,
    direction: &'a str,
    lower_method: &'a str,
    upper_method: &'a str,
    samples: usize,
    certified_samples: usize,
    violations: usize,
    lower_fit: Option<PowerFit>,
    upper_fit: Option<PowerFit>,
    lower_window: Option<WindowCheck>,
    upper_window: Option<WindowCheck>,
    status: &'a str,
}

fn base_point(dom: &DomainSpec, a: &SweepArgs, preset: Option<CVector>) -> Result<CVector> {
    let n = dom.dim();
    if let Some(b) = &a.base_point {
        return parse_vector(b, n);
    }
    let seed = match (&a.seed_point, preset) {
        (Some(s), _) => parse_vector(s, n)?,
        (None, Some(p)) => return Ok(p),
        (None, None) => bail!("--base-point or --seed-point is required without a preset"),
    };
    Ok(boundary_projection(dom, &seed)?.point)
}

pub fn sweep(ctx: &Context, a: &SweepArgs) -> Result<Status> {
    let opts = optimize_options(&a.optimizer);
    let preset = a.preset.as_deref().map(sweep_preset).transpose()?;
    let dom = match (&a.domain, &preset) {
        (Some(d), _) => resolve_domain(d)?,
        (None, Some(p)) => p.domain.clone(),
        (None, None) => bail!("either --preset or --domain is required"),
    };
    let n = dom.dim();
    let mut cfg = match &preset {
        Some(p) => p.config.clone(),
        None => SweepConfig {
            base_point: CVector::zeros(n),
            direction: DirectionRule::Normal,
            deltas: log_grid(1e-2, 1e-4, 5),
            lower: LowerMethod::C11,
            upper: UpperMethod::Optimize(opts),
            cone: Cone::default(),
            envelope: EnvelopeOptions::default(),
        },
    };
    if let Some(d) = &a.direction {
        cfg.direction = parse_direction(d, n)?;
    }
    if let Some(d) = &a.deltas {
        cfg.deltas = parse_deltas(d)?;
    }
    if let Some(l) = &a.lower {
        cfg.lower = parse_lower(l)?;
    }
    if let Some(u) = &a.upper {
        cfg.upper = parse_upper(u, opts)?;
    }
    cfg.base_point = base_point(&dom, a, preset.as_ref().map(|p| p.config.base_point.clone()))?;
    let lower_window = match &a.lower_slope {
        Some(s) => Some(Window::parse(s)?),
        None => preset.as_ref().and_then(|p| p.lower_window),
    };
    let upper_window = match &a.upper_slope {
        Some(s) => Some(Window::parse(s)?),
        None => preset.as_ref().and_then(|p| p.upper_window),
    };

    let r: SweepReport = normal_ray_sweep(&dom, &cfg)?;
    let want_lower = !matches!(cfg.lower, LowerMethod::None);
    let want_upper = !matches!(cfg.upper, UpperMethod::None);
    let certified = r
        .samples
        .iter()
        .filter(|s| (!want_lower || s.lower.is_some()) && (!want_upper || s.upper.is_some()))
        .count();
    let lw = lower_window.map(|w| check_window(&w, r.lower_slope()));
    let uw = upper_window.map(|w| check_window(&w, r.upper_slope()));
    let fits_met = lw.as_ref().is_none_or(|c| c.met) && uw.as_ref().is_none_or(|c| c.met);
    let status = if r.violations > 0 {
        "inconsistent"
    } else if certified < MIN_CERTIFIED {
        "too-few-certified"
    } else if fits_met {
        "certified"
    } else {
        "slope-outside-window"
    };

    let mut sink = Sink::new(&ctx.out, &dom.name, "sweep")?;
    sink.text("csv", &r.to_csv()?)?;
    let rows = r.samples.iter().map(|s| vec![Some(s.delta), s.lower, s.upper]);
    sink.text("dat", &gnuplot_table(&["delta", "lower", "upper"], rows))?;
    sink.json(&SweepSummary {
        domain: &r.domain,
        preset: a.preset.as_deref(),
        base_point: &r.base_point,
        direction: &r.direction,
        lower_method: &r.lower_method,
        upper_method: &r.upper_method,
        samples: r.samples.len(),
        certified_samples: certified,
        violations: r.violations,
        lower_fit: r.lower_fit,
        upper_fit: r.upper_fit,
        lower_window: lw,
        upper_window: uw,
        status,
    })?;

    let slope = |f: &Option<PowerFit>| f.map_or_else(|| "none".into(), |p| format!("{:.4} (r2 {:.4})", p.slope, p.r2));
    println!("lower slope {}", slope(&r.lower_fit));
    println!("upper slope {}", slope(&r.upper_fit));
    println!("{certified}/{} samples certified, {} violations: {status}", r.samples.len(), r.violations);
    for s in r.samples.iter().filter(|s| !s.flags.is_empty()) {
        println!("delta {:.3e}: {}", s.delta, s.flags.join("; "));
    }
    sink.report();
    match status {
        "inconsistent" => bail!("{} samples with lower > upper", r.violations),
        "certified" => Ok(Status::Certified),
        _ => Ok(Status::Partial),
    }
}

#[derive(Debug, Serialize)]
struct ProbeSummary<'a> {
    seed: u64,
    report: &'a ProbeReport,
    witness_window: Option<WindowCheck>,
    status: &'a str,
}

pub fn probe(ctx: &Context, a: &ProbeArgs) -> Result<Status> {
    let preset = a.preset.as_deref().map(probe_preset).transpose()?;
    let dom = match (&a.domain, &preset) {
        (Some(d), _) => resolve_domain(d)?,
        (None, Some(p)) => p.domain.clone(),
        (None, None) => bail!("either --preset or --domain is required"),
    };
    let mut opts = preset.as_ref().map_or_else(ProbeOptions::default, |p| p.options.clone());
    opts.seed = ctx.seed;
    if let Some(s) = a.samples {
        if s == 0 {
            bail!("--samples must be positive");
        }
        opts.samples = s;
    }
    let window = match &a.witness_slope {
        Some(s) => Some(Window::parse(s)?),
        None => preset.as_ref().map(|p| p.witness_window),
    };
    let r = pseudoconvexity_probe(&dom, &opts)?;
    let slope = r.witness.as_ref().and_then(|w| w.fit).map(|f| f.slope);
    let check = match r.verdict {
        Verdict::NotPseudoconvex => window.map(|w| check_window(&w, slope)),
        Verdict::LeviNonnegative => None,
    };
    let status = match (r.verdict, &check) {
        (Verdict::NotPseudoconvex, _) if slope.is_none() => "witness-without-fit",
        (_, Some(c)) if !c.met => "slope-outside-window",
        _ => "complete",
    };

    let mut sink = Sink::new(&ctx.out, &dom.name, "probe")?;
    if let Some(w) = &r.witness {
        let mut csv = String::from("delta,upper,normal_pairing\n");
        for s in &w.samples {
            csv.push_str(&format!("{:e},{:e},{:e}\n", s.delta, s.upper, s.normal_pairing));
        }
        sink.text("csv", &csv)?;
    }
    sink.json(&ProbeSummary {
        seed: ctx.seed,
        report: &r,
        witness_window: check,
        status,
    })?;
    println!("{}", r.message);
    println!("least restricted Levi eigenvalue {:.6e} over {} samples", r.min_eigenvalue, r.sampled);
    if let Some(s) = slope {
        println!("witness upper slope {s:.4}");
    }
    sink.report();
    Ok(if status == "complete" { Status::Certified } else { Status::Partial })
}

#[derive(Debug, Serialize)]
struct MapSummary<'a> {
    map: &'a str,
    source: &'a str,
    target: &'a str,
    seed: u64,
    report: &'a MapRegularityReport,
}

pub fn map_regularity(ctx: &Context, a: &MapArgs) -> Result<Status> {
    let source = resolve_domain(&a.source)?;
    let target = match &a.target {
        Some(t) => resolve_domain(t)?,
        None => source.clone(),
    };
    let (name, map) = resolve_map(&a.map, source.dim())?;
    if a.rays == 0 {
        bail!("--rays must be positive");
    }
    let mut opts = MapSampleOptions {
        rays: a.rays,
        seed: ctx.seed,
        ..MapSampleOptions::default()
    };
    if let Some(d) = &a.deltas {
        opts.deltas = parse_deltas(d)?;
    }
    let r = run_map_regularity(&map, &source, &target, &opts)?;

    let mut sink = Sink::new(&ctx.out, &source.name, &format!("map-regularity-{name}"))?;
    sink.text("csv", &r.to_csv()?)?;
    sink.json(&MapSummary {
        map: &name,
        source: &source.name,
        target: &target.name,
        seed: ctx.seed,
        report: &r,
    })?;
    println!("normal preservation sup ratio {:.12}", r.normal_preservation_sup_ratio);
    println!("real normal preservation sup ratio {:.12}", r.real_preservation_sup_ratio);
    println!("alpha {:.6} (constant {:.4e})", r.df_alpha_fit, r.df_constant);
    println!(
        "holder exponent {:.6} (predicted {:.4}, pseudoconvex {:.4})",
        r.holder_exponent_fit, r.predicted_holder, r.predicted_holder_pseudoconvex
    );
    if r.skipped_rays > 0 {
        println!("{} of {} rays skipped", r.skipped_rays, r.rays);
    }
    sink.report();
    let complete = r.normal_preservation_sup_ratio.is_finite() && r.skipped_rays == 0;
    Ok(if complete { Status::Certified } else { Status::Partial })
}
