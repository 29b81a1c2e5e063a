//! `qpb` — batch front end for the quantum principal bundle calculus engine.
//!
//! Subcommands:
//! * `qpb suite <config.json> [--window N] [--q R] [--seed S] [--out report.json]`
//! * `qpb dims --hopf <preset> --calculus <kind> [--window N] [--n-max N]`
//! * `qpb witness --bundle <preset> --element "<word>" [--window N]`
//! * `qpb table --what <sigma|a:N|akl:K,L> --hopf <preset> --calculus <kind> [--window N]`
//!
//! JSON in, JSON out; exit status 0 iff every selected check passed. The
//! `QPB_BUDGET` environment variable raises the factorial-degree budget.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use num_traits::{One, Signed, ToPrimitive};
use serde::Deserialize;

use qpb_core::algebra::{check_local_confluence, AlgElement, Word};
use qpb_core::braided::{BraidOperator, EnvelopeSpace, EnvelopeVariant};
use qpb_core::bundle::{
    canonical_ideal, extend_antiderivation, verify_preconnection_identities, Bundle,
    ConnectionKind, Preconnection,
};
use qpb_core::fodc::{classical_ideal, quotient_build, EpsDerivation, IdealSpec};
use qpb_core::hopf::HopfStructure;
use qpb_core::presets;
use qpb_core::report::Suite;
use qpb_core::scalar::Field;
use qpb_core::vh::{
    auto_multiplets, exterior_variant_suite, verify_chart_suite, verify_gauge_suite,
    verify_gluing_suite, vh_context,
};
use qpb_core::{QScalar, Rat};

#[derive(Parser)]
#[command(
    name = "qpb",
    version,
    about = "exact verification suites for quantum principal bundle calculi"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites described by a JSON config.
    Suite {
        config: PathBuf,
        /// Override the window degree from the config.
        #[arg(long)]
        window: Option<usize>,
        /// Specialize the deformation parameter at a rational value `p/r`.
        #[arg(long)]
        q: Option<String>,
        /// Seed for the randomized spot-checks.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report JSON here (defaults to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print quotient/exterior/envelope dimensions per degree.
    Dims {
        #[arg(long, default_value = "u1")]
        hopf: String,
        #[arg(long, default_value = "classical")]
        calculus: String,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
    },
    /// Print a freeness witness for an element of the structure algebra.
    Witness {
        #[arg(long, default_value = "q_hopf_fibration")]
        bundle: String,
        /// Space-separated generator names, e.g. "z" or "z z".
        #[arg(long)]
        element: String,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Dump a structure matrix (sigma, antisymmetrizers).
    Table {
        /// One of: sigma, a:N (total antisymmetrizer), akl:K,L (shuffle).
        #[arg(long)]
        what: String,
        #[arg(long, default_value = "u1")]
        hopf: String,
        #[arg(long, default_value = "classical")]
        calculus: String,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct SuiteConfig {
    /// Subset of: hopf, calculus, braid, preconnection, vh, gluing, exterior.
    suites: Vec<String>,
    #[serde(default = "default_hopf")]
    hopf: serde_json::Value,
    #[serde(default)]
    bundle: Option<String>,
    #[serde(default = "default_calculus")]
    calculus: serde_json::Value,
    #[serde(default)]
    charts: Vec<ChartConfig>,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default = "default_variant")]
    variant: String,
    #[serde(default)]
    q: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
struct ChartConfig {
    label: String,
    /// Coefficients `[c1, c2]` of the base one-form `c1·th + c2·x th`
    /// (rational strings). Empty for the flat chart.
    #[serde(default)]
    lambda: Vec<String>,
}

fn default_hopf() -> serde_json::Value {
    serde_json::Value::String("u1".into())
}

fn default_calculus() -> serde_json::Value {
    serde_json::Value::String("classical".into())
}

fn default_window() -> usize {
    2
}

fn default_n_max() -> usize {
    3
}

fn default_variant() -> String {
    "wedge".into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Suite {
            config,
            window,
            q,
            seed,
            out,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: SuiteConfig = serde_json::from_str(&text).context("parsing config")?;
            if let Some(w) = window {
                cfg.window = w;
            }
            if let Some(qv) = q {
                cfg.q = Some(qv);
            }
            if let Some(s) = seed {
                cfg.seed = Some(s);
            }
            let report = run_suites(&cfg)?;
            let ok = report.all_passed();
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            Ok(ok)
        }
        Command::Dims {
            hopf,
            calculus,
            window,
            n_max,
        } => {
            let h = presets::hopf_by_name(&hopf)?;
            let ideal = ideal_from_value(&h, &serde_json::Value::String(calculus), window)?;
            let space = Arc::new(quotient_build(&h, ideal, window, None)?);
            let braid = Arc::new(BraidOperator::new(space.clone())?);
            let mut exterior = vec![];
            for n in 0..=n_max {
                exterior.push(braid.exterior_dim(n)?);
            }
            let wedge = EnvelopeSpace::build(&braid, EnvelopeVariant::Quadratic, n_max)?;
            let vee = EnvelopeSpace::build(&braid, EnvelopeVariant::Exterior, n_max)?;
            let dims = serde_json::json!({
                "psi_inv": space.dim(),
                "stabilized": space.is_stabilized(),
                "exterior": exterior,
                "envelope_wedge": (0..=n_max).map(|n| wedge.dim(n)).collect::<Vec<_>>(),
                "envelope_vee": (0..=n_max).map(|n| vee.dim(n)).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&dims)?);
            Ok(true)
        }
        Command::Witness {
            bundle,
            element,
            window,
        } => {
            let b = presets::bundle_by_name(&bundle)?;
            let apres = b.hopf().presentation();
            let mut word = vec![];
            for name in element.split_whitespace() {
                word.push(apres.gen_id(name)?);
            }
            let a = AlgElement::from_terms(apres, vec![(Word(word), QScalar::one())])?;
            let pairs = b.freeness_witness(&a, window)?;
            let json = serde_json::json!({
                "element": a.to_wire_json(),
                "witness": pairs
                    .iter()
                    .map(|(qe, be)| serde_json::json!({
                        "q": qe.to_wire_json(),
                        "b": be.to_wire_json(),
                    }))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
            Ok(true)
        }
        Command::Table {
            what,
            hopf,
            calculus,
            window,
            out,
        } => {
            let h = presets::hopf_by_name(&hopf)?;
            let ideal = ideal_from_value(&h, &serde_json::Value::String(calculus), window)?;
            let space = Arc::new(quotient_build(&h, ideal, window, None)?);
            let braid = Arc::new(BraidOperator::new(space)?);
            let mat = if what == "sigma" {
                braid.matrix().clone()
            } else if let Some(n) = what.strip_prefix("a:") {
                braid.antisymmetrizer(n.parse().context("antisymmetrizer degree")?)?
            } else if let Some(kl) = what.strip_prefix("akl:") {
                let (k, l) = kl
                    .split_once(',')
                    .ok_or_else(|| anyhow!("expected akl:K,L"))?;
                braid.shuffle_antisymmetrizer(k.trim().parse()?, l.trim().parse()?)?
            } else {
                bail!("unknown table `{what}`");
            };
            let mut entries = vec![];
            for (i, row) in mat.rows().iter().enumerate() {
                for (j, c) in row.iter() {
                    entries.push(serde_json::json!([i, j, c.to_wire()]));
                }
            }
            let json = serde_json::json!({
                "rows": mat.nrows(),
                "cols": mat.ncols(),
                "entries": entries,
            });
            let text = serde_json::to_string_pretty(&json)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(true)
        }
    }
}

/// Resolve the configured calculus into an ideal for the given structure.
fn ideal_from_value<K: Field>(
    h: &Arc<HopfStructure<K>>,
    v: &serde_json::Value,
    window: usize,
) -> anyhow::Result<IdealSpec<K>> {
    if let Some(s) = v.as_str() {
        return match s {
            "universal" => Ok(IdealSpec::universal()),
            "classical" => {
                let x = EpsDerivation::from_table(h, &[("z", K::one()), ("z*", -K::one())])
                    .context("classical calculus needs circle generators z, z*")?;
                Ok(classical_ideal(h, &[x], window)?)
            }
            other => {
                bail!("unknown calculus `{other}` (use universal | classical | hatR | {{ideal: ...}})")
            }
        };
    }
    if let Some(obj) = v.get("ideal") {
        return Ok(IdealSpec::from_wire_json(h.presentation(), obj)?);
    }
    bail!("bad calculus config")
}

fn run_suites(cfg: &SuiteConfig) -> anyhow::Result<Suite> {
    match &cfg.q {
        None => {
            let hopf_loader = |name: &str| Ok(presets::hopf_by_name(name)?);
            let bundle_loader = |name: &str| Ok(presets::bundle_by_name(name)?);
            run_pipeline::<QScalar>(cfg, &hopf_loader, &bundle_loader)
        }
        Some(qstr) => {
            let qv = Rat::from_str(qstr).map_err(|e| anyhow!("bad q value `{qstr}`: {e}"))?;
            let eval = move |c: &QScalar| c.eval(&qv);
            let hopf_loader = |name: &str| -> anyhow::Result<Arc<HopfStructure<Rat>>> {
                Ok(presets::hopf_by_name(name)?.map_scalars(&eval)?)
            };
            let bundle_loader = |name: &str| -> anyhow::Result<Arc<Bundle<Rat>>> {
                Ok(presets::bundle_by_name(name)?.map_scalars(&eval)?)
            };
            run_pipeline::<Rat>(cfg, &hopf_loader, &bundle_loader)
        }
    }
}

fn variant_of(cfg: &SuiteConfig) -> anyhow::Result<EnvelopeVariant> {
    match cfg.variant.as_str() {
        "wedge" => Ok(EnvelopeVariant::Quadratic),
        "vee" => Ok(EnvelopeVariant::Exterior),
        "tensor" => Ok(EnvelopeVariant::Tensor),
        other => bail!("unknown variant `{other}`"),
    }
}

/// Embed a small rational into any scalar field.
fn rat_into<K: Field>(r: &Rat) -> anyhow::Result<K> {
    let numer = r
        .numer()
        .abs()
        .to_i64()
        .ok_or_else(|| anyhow!("coefficient too large"))?;
    let sign = if r.numer().is_negative() { -1 } else { 1 };
    let denom = r
        .denom()
        .to_i64()
        .ok_or_else(|| anyhow!("coefficient too large"))?;
    Ok(K::from_int(sign * numer) / K::from_int(denom))
}

/// Build the configured charts on a trivial-style bundle.
fn charts_from_config<K: Field>(
    cfg: &SuiteConfig,
    bundle: &Arc<Bundle<K>>,
) -> anyhow::Result<Vec<Preconnection<K>>> {
    let mut out = vec![];
    for chart in &cfg.charts {
        if chart.lambda.is_empty() {
            // flat chart: base differential only
            let hor = bundle.horizontal();
            let mut values = vec![AlgElement::zero(hor); hor.generators().len()];
            for (g, v) in bundle.base_differential().values().iter().enumerate() {
                values[g] = v.clone();
            }
            out.push(extend_antiderivation(
                bundle,
                chart.label.clone(),
                values,
                ConnectionKind::Preconnection,
                cfg.window,
            )?);
        } else {
            if chart.lambda.len() != 2 {
                bail!("chart `{}` needs two lambda coefficients", chart.label);
            }
            let c1: K = rat_into(&Rat::from_str(&chart.lambda[0])?)?;
            let c2: K = rat_into(&Rat::from_str(&chart.lambda[1])?)?;
            let lam = presets::base_one_form(bundle, c1, c2);
            out.push(presets::trivial_u1_preconnection(
                bundle,
                chart.label.clone(),
                &lam,
                cfg.window,
            )?);
        }
    }
    Ok(out)
}

fn run_pipeline<K: Field>(
    cfg: &SuiteConfig,
    hopf_loader: &dyn Fn(&str) -> anyhow::Result<Arc<HopfStructure<K>>>,
    bundle_loader: &dyn Fn(&str) -> anyhow::Result<Arc<Bundle<K>>>,
) -> anyhow::Result<Suite> {
    let mut report = Suite::new("qpb");
    report.config = serde_json::json!({
        "suites": cfg.suites,
        "hopf": cfg.hopf,
        "bundle": cfg.bundle,
        "calculus": cfg.calculus,
        "charts": cfg.charts.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
        "window": cfg.window,
        "n_max": cfg.n_max,
        "variant": cfg.variant,
        "q": cfg.q,
        "seed": cfg.seed,
    });
    let want = |name: &str| cfg.suites.iter().any(|s| s == name);
    let timed = |report: &mut Suite, suite: Suite, t0: Instant| {
        let mut suite = suite.sorted();
        for c in &mut suite.checks {
            c.timing_ms = Some(t0.elapsed().as_millis());
        }
        report.merge(suite);
    };
    let hopf = match cfg.hopf.as_str() {
        Some(name) => hopf_loader(name)?,
        None => match cfg.hopf.get("file").and_then(|f| f.as_str()) {
            Some(file) => {
                let text =
                    std::fs::read_to_string(file).with_context(|| format!("reading {file}"))?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                HopfStructure::from_wire_json(&v)?
            }
            None => bail!("bad hopf config"),
        },
    };
    if want("hopf") {
        let t0 = Instant::now();
        let mut s = hopf.verify_axioms(cfg.window.max(2))?;
        s.merge(hopf.verify_adjoint_coaction(cfg.window.min(3))?);
        let conf = check_local_confluence(hopf.presentation(), 4)?;
        s.check("rules-locally-confluent", conf.is_confluent(), || {
            conf.unresolved.join("; ")
        });
        s.check("rules-star-consistent", conf.is_star_consistent(), || {
            conf.star_incompatible.join("; ")
        });
        timed(&mut report, s, t0);
    }
    let need_calculus =
        want("calculus") || want("braid") || want("vh") || want("gluing") || want("exterior");
    let bundle = match &cfg.bundle {
        Some(name) => Some(bundle_loader(name)?),
        None => None,
    };
    let charts = match &bundle {
        Some(b) => charts_from_config(cfg, b)?,
        None => vec![],
    };
    let ideal: Option<IdealSpec<K>> = if need_calculus || want("preconnection") {
        if cfg.calculus.as_str() == Some("hatR") {
            let b = bundle
                .as_ref()
                .ok_or_else(|| anyhow!("hatR calculus needs a bundle"))?;
            if charts.is_empty() {
                bail!("hatR calculus needs at least one chart");
            }
            let multiplets = auto_multiplets(b, 2 * cfg.window)?;
            let mut family: Vec<Preconnection<K>> = vec![charts[0].clone()];
            for c in charts.iter().skip(1) {
                family.push(c.difference(&charts[0], format!("{}-{}", c.label, charts[0].label))?);
            }
            let refs: Vec<&Preconnection<K>> = family.iter().collect();
            let t0 = Instant::now();
            let (fam, suite) = canonical_ideal(&refs, &multiplets, 2 * cfg.window, cfg.window)?;
            timed(&mut report, suite, t0);
            Some(fam.ideal)
        } else {
            Some(ideal_from_value(&hopf, &cfg.calculus, cfg.window)?)
        }
    } else {
        None
    };
    if want("calculus") {
        let t0 = Instant::now();
        let space = quotient_build(&hopf, ideal.clone().unwrap(), cfg.window, None)?;
        let s = space.verify_calculus_covariance()?;
        timed(&mut report, s, t0);
    }
    if want("braid") {
        let t0 = Instant::now();
        let space = Arc::new(quotient_build(&hopf, ideal.clone().unwrap(), cfg.window, None)?);
        let braid = BraidOperator::new(space)?;
        let s = braid.verify_braid_identities(cfg.n_max)?;
        timed(&mut report, s, t0);
    }
    if want("preconnection") {
        let b = bundle
            .as_ref()
            .ok_or_else(|| anyhow!("preconnection suite needs a bundle"))?;
        if charts.len() < 2 {
            bail!("preconnection suite needs at least two charts");
        }
        let t0 = Instant::now();
        let multiplets = auto_multiplets(b, 2 * cfg.window)?;
        let d = &charts[0];
        let e = charts[1].difference(d, format!("{}-{}", charts[1].label, d.label))?;
        let mut s = verify_preconnection_identities(d, &e, &multiplets, 2 * cfg.window, cfg.window)?;
        s.merge(b.verify_coaction(cfg.window)?);
        timed(&mut report, s, t0);
    }
    if want("vh") || want("gluing") || want("exterior") {
        let b = bundle
            .as_ref()
            .ok_or_else(|| anyhow!("vertical-horizontal suites need a bundle"))?;
        let ctx = vh_context(
            b,
            ideal.clone().unwrap(),
            charts.clone(),
            variant_of(cfg)?,
            cfg.window,
            cfg.window,
            cfg.n_max,
        )?;
        if want("vh") {
            let t0 = Instant::now();
            let mut s = Suite::new("vh");
            for chart in ctx.charts() {
                s.merge(verify_chart_suite(&ctx, &chart.conn.label)?);
            }
            if ctx.charts().len() >= 2 {
                let l0 = ctx.charts()[0].conn.label.clone();
                let l1 = ctx.charts()[1].conn.label.clone();
                let second = if ctx.charts().len() >= 3 {
                    Some(ctx.chart_difference(&l0, &ctx.charts()[2].conn.label.clone())?)
                } else {
                    None
                };
                s.merge(verify_gauge_suite(&ctx, &l0, &l1, second.as_ref())?);
            }
            timed(&mut report, s, t0);
        }
        if want("gluing") {
            let t0 = Instant::now();
            let s = verify_gluing_suite(&ctx)?;
            timed(&mut report, s, t0);
        }
        if want("exterior") {
            let t0 = Instant::now();
            let (l0, l1) = if ctx.charts().len() >= 2 {
                (
                    ctx.charts()[0].conn.label.clone(),
                    ctx.charts()[1].conn.label.clone(),
                )
            } else {
                let l = ctx.charts()[0].conn.label.clone();
                (l.clone(), l)
            };
            let s = exterior_variant_suite(&ctx, &l0, &l1, cfg.n_max)?;
            timed(&mut report, s, t0);
        }
    }
    // Seeded spot-checks: normalization idempotence and associativity on
    // pseudo-random window combinations.
    if let Some(seed) = cfg.seed {
        use rand::{Rng, SeedableRng};
        let t0 = Instant::now();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let words = hopf.presentation().normal_words(cfg.window.max(2));
        let mut s = Suite::new("spot-checks");
        let mut ok = true;
        for _ in 0..16 {
            let raw: Vec<(Word, K)> = (0..3)
                .map(|_| {
                    let w = words[rng.gen_range(0..words.len())].clone();
                    (w, K::from_int(rng.gen_range(-3..=3)))
                })
                .collect();
            let e = AlgElement::from_terms(hopf.presentation(), raw)?;
            let renorm = AlgElement::from_terms(
                hopf.presentation(),
                e.terms().map(|(w, c)| (w.clone(), c.clone())).collect(),
            )?;
            if renorm != e {
                ok = false;
            }
            let mut pick = || -> anyhow::Result<AlgElement<K>> {
                Ok(AlgElement::from_terms(
                    hopf.presentation(),
                    vec![(words[rng.gen_range(0..words.len())].clone(), K::one())],
                )?)
            };
            let (a, b2, c) = (pick()?, pick()?, pick()?);
            if a.mul(&b2)?.mul(&c)? != a.mul(&b2.mul(&c)?)? {
                ok = false;
            }
        }
        s.check("seeded-normalization-and-associativity", ok, || String::new());
        timed(&mut report, s, t0);
    }
    report.checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(report)
}
