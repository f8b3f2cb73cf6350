//! Batch experiment harness: every module exposed as a subcommand with
//! reproducible seeds and machine-readable output (CSV or JSON lines).
//!
//! Identical config + seed produces byte-identical output. Hypothesis
//! failures are recorded per trial and exit 0; usage errors exit 2;
//! internal invariant breaches exit 1.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde_json::json;
use sl2lab::arith::{floor_log2, fnv1a64, is_prime_u64, primes_in};
use sl2lab::borel::{attac_unipotents, BorelError, Factorizer, TrackedSet};
use sl2lab::cayley::{
    bfs_diameter, free_word_check, girth, mixing_time, offdiag_generators, random_pairs,
    short_loop_threshold, spectral_lambda2_dense, spectral_lambda2_power, CayleyContext,
    CayleyError, DEFAULT_BFS_CAP, DEFAULT_WALK_CAP, DENSE_SPECTRAL_CAP,
};
use sl2lab::growth::{growth_certificate, GrowthParams};
use sl2lab::gset::{
    borel_subgroup, pathological_fixture, product_set, random_generating_set, random_subset,
    triple_product, FixtureKind, GroupSet, DEFAULT_CLOSURE_CAP,
};
use sl2lab::seed::trial_rng;
use sl2lab::sl2::{SL2Ctx, SL2Elem};
use sl2lab::zpadd::{sorge_find_xi, sumproduct_stats, ZpSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sl2lab",
    version,
    about = "Exact SL2(F_p) growth and Cayley-graph laboratory"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SpectralMethod {
    Dense,
    Power,
    Auto,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FixtureArg {
    Coset,
    SubgroupPlusPoint,
}

#[derive(Args)]
struct Common {
    /// Single prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// Inclusive prime range A:B (sweeps every prime in between).
    #[arg(long, value_name = "A:B")]
    p_range: Option<String>,
    /// Root seed; per-trial streams derive from it by trial index.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write records here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Generators: "offdiag1", "offdiag3", "random:K", or space-separated
    /// matrix literals "a,b;c,d".
    #[arg(long, default_value = "offdiag1")]
    gens: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact Cayley-graph diameter by implicit BFS.
    Diameter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gens: GenArgs,
    },
    /// Shortest nontrivial relation length, up to a bound.
    Girth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gens: GenArgs,
        /// Search bound; defaults to floor(log p / (2 log 4)).
        #[arg(long)]
        max_len: Option<u32>,
    },
    /// Lazy-random-walk mixing time.
    Mixing {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gens: GenArgs,
    },
    /// Second-largest eigenvalue of the lazy walk kernel.
    Spectral {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gens: GenArgs,
        #[arg(long, value_enum, default_value_t = SpectralMethod::Auto)]
        method: SpectralMethod,
    },
    /// Growth-certificate chains over random generating sets.
    Growth {
        #[command(flatten)]
        common: Common,
        /// Number of random sets per prime.
        #[arg(long, default_value_t = 5)]
        random_sets: u64,
        /// Cardinality of each random set.
        #[arg(long, default_value_t = 10)]
        size: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Escape-depth cap.
        #[arg(long, default_value_t = 20)]
        depth_cap: usize,
    },
    /// Sum/product cardinalities of random subsets of F_p^*.
    Sumproduct {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 31)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        trials: u64,
    },
    /// Dilate lemma: xi in S maximizing |A + xi A|, with exact certificate.
    Sorge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        size: usize,
        /// |S|; 0 means all of F_p^*.
        #[arg(long, default_value_t = 0)]
        s_size: usize,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(long, default_value_t = 20)]
        trials: u64,
    },
    /// Unipotent production inside the Borel subgroup.
    Attac {
        #[command(flatten)]
        common: Common,
        /// Subset size drawn from H; 0 means use all of H.
        #[arg(long, default_value_t = 0)]
        subset_size: u64,
        #[arg(long, default_value_t = 5)]
        trials: u64,
    },
    /// Bounded-length factorization over a large random set.
    Factorize {
        #[command(flatten)]
        common: Common,
        /// Density of the random source set in the full group.
        #[arg(long, default_value_t = 0.96)]
        density: f64,
        #[arg(long, default_value_t = 100)]
        targets: u64,
        /// Override the size hypothesis when buckets are large enough.
        #[arg(long)]
        force: bool,
    },
    /// Random generator pairs: generation, girth, diameter statistics.
    RandomPairs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// Free-word identity checks for integer generators.
    Freewords {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gens: GenArgs,
        /// Word-length bound; defaults to min(13, floor(log2(p-2))).
        #[arg(long)]
        max_len: Option<u32>,
        #[arg(long, default_value_t = 10000)]
        trials: u64,
    },
    /// The pathological product-set fixtures; --out stores the set itself
    /// (binary when the path ends in .bin, JSON otherwise).
    Fixtures {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = FixtureArg::Coset)]
        kind: FixtureArg,
    },
}

// --------------------------------------------------------------------------

enum CliError {
    Usage(String),
    Internal(String),
}

impl From<CayleyError> for CliError {
    fn from(e: CayleyError) -> Self {
        match e {
            CayleyError::BadParam(_) | CayleyError::Sl2(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SL2LAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn primes_from(common: &Common) -> Result<Vec<u64>, CliError> {
    if let Some(p) = common.p {
        if p < 3 || !is_prime_u64(p) {
            return Err(CliError::Usage(format!("{p} is not an odd prime")));
        }
        return Ok(vec![p]);
    }
    if let Some(range) = &common.p_range {
        let (a, b) = range
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("bad range {range:?}, expected A:B")))?;
        let a: u64 = a
            .parse()
            .map_err(|_| CliError::Usage("bad range start".into()))?;
        let b: u64 = b
            .parse()
            .map_err(|_| CliError::Usage("bad range end".into()))?;
        let ps = primes_in(a.max(3), b);
        if ps.is_empty() {
            return Err(CliError::Usage(format!("no primes in {a}..={b}")));
        }
        return Ok(ps);
    }
    Err(CliError::Usage("one of --p or --p-range is required".into()))
}

fn parse_gens(ctx: SL2Ctx, spec: &str, seed: u64) -> Result<Vec<SL2Elem>, CliError> {
    match spec {
        "offdiag1" => Ok(offdiag_generators(ctx, 1).unwrap()),
        "offdiag3" => offdiag_generators(ctx, 3)
            .map_err(|e| CliError::Usage(format!("offdiag3 invalid at p = {}: {e}", ctx.p()))),
        _ => {
            if let Some(k) = spec.strip_prefix("random:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad random spec {spec:?}")))?;
                if k == 0 || k as u64 > ctx.order() {
                    return Err(CliError::Usage(format!("bad random count {k}")));
                }
                let mut rng = trial_rng(seed, u64::MAX);
                Ok(random_subset(ctx, k, &mut rng).elems().collect())
            } else {
                spec.split_whitespace()
                    .map(|lit| {
                        ctx.parse_elem(lit)
                            .map_err(|e| CliError::Usage(format!("bad matrix {lit:?}: {e}")))
                    })
                    .collect()
            }
        }
    }
}

struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    fn new(path: &Option<String>) -> Result<Sink, CliError> {
        let out: Box<dyn Write> = match path {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                CliError::Usage(format!("cannot open {path}: {e}"))
            })?)),
            None => Box::new(std::io::stdout().lock()),
        };
        Ok(Sink { out })
    }

    fn line(&mut self, s: &str) {
        writeln!(self.out, "{s}").expect("write output");
    }
}

fn config_hash(parts: &[String]) -> String {
    format!("{:016x}", fnv1a64(parts.join("\u{1f}").as_bytes()))
}

/// Unified experiment row for the Cayley-family commands.
struct Row {
    p: u64,
    trial: i64,
    generates: Option<bool>,
    girth: Option<u32>,
    diameter: Option<u32>,
    mixing_n: Option<u32>,
    lambda2: Option<f64>,
}

const CSV_HEADER: &str = "p,trial,generates,girth,diameter,mixing_n,lambda2,seed,config";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn emit_rows(sink: &mut Sink, fmt: Format, seed: u64, config: &str, rows: &[Row]) {
    if fmt == Format::Csv {
        sink.line(CSV_HEADER);
        for r in rows {
            sink.line(&format!(
                "{},{},{},{},{},{},{},{},{}",
                r.p,
                r.trial,
                opt(&r.generates),
                opt(&r.girth),
                opt(&r.diameter),
                opt(&r.mixing_n),
                opt(&r.lambda2),
                seed,
                config
            ));
        }
    } else {
        for r in rows {
            sink.line(
                &json!({
                    "p": r.p,
                    "trial": r.trial,
                    "generates": r.generates,
                    "girth": r.girth,
                    "diameter": r.diameter,
                    "mixing_n": r.mixing_n,
                    "lambda2": r.lambda2,
                    "seed": seed,
                    "config": config,
                })
                .to_string(),
            );
        }
    }
}

fn emit_summary(sink: &mut Sink, fmt: Format, summary: &serde_json::Value) {
    match fmt {
        Format::Json => sink.line(&summary.to_string()),
        // CSV streams keep the summary as a trailing comment line
        Format::Csv => sink.line(&format!("# {summary}")),
    }
}

fn ctx_for(p: u64) -> Result<SL2Ctx, CliError> {
    SL2Ctx::new(p).map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Diameter { common, gens } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "diameter".into(),
                format!("{primes:?}"),
                gens.gens.clone(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            let mut rows = Vec::new();
            let mut ratio_sum = 0.0;
            let mut generating = 0u64;
            for (i, &p) in primes.iter().enumerate() {
                let ctx = ctx_for(p)?;
                let g = parse_gens(ctx, &gens.gens, common.seed)?;
                let cx = CayleyContext::new(ctx, &g)?;
                match bfs_diameter(&cx, DEFAULT_BFS_CAP) {
                    Ok(res) => {
                        ratio_sum += res.diameter as f64 / (p as f64).ln();
                        generating += 1;
                        rows.push(Row {
                            p,
                            trial: i as i64,
                            generates: Some(true),
                            girth: None,
                            diameter: Some(res.diameter),
                            mixing_n: None,
                            lambda2: None,
                        });
                    }
                    Err(CayleyError::NonGenerating { .. }) => rows.push(Row {
                        p,
                        trial: i as i64,
                        generates: Some(false),
                        girth: None,
                        diameter: None,
                        mixing_n: None,
                        lambda2: None,
                    }),
                    Err(e) => return Err(e.into()),
                }
            }
            emit_rows(&mut sink, common.format, common.seed, &config, &rows);
            emit_summary(
                &mut sink,
                common.format,
                &json!({
                    "summary": "diameter",
                    "primes": primes.len(),
                    "generating": generating,
                    "mean_diameter_over_log_p":
                        if generating > 0 { ratio_sum / generating as f64 } else { 0.0 },
                    "config": config,
                }),
            );
            Ok(())
        }

        Cmd::Girth {
            common,
            gens,
            max_len,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "girth".into(),
                format!("{primes:?}"),
                gens.gens.clone(),
                format!("{max_len:?}"),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            let mut rows = Vec::new();
            for (i, &p) in primes.iter().enumerate() {
                let ctx = ctx_for(p)?;
                let g = parse_gens(ctx, &gens.gens, common.seed)?;
                let cx = CayleyContext::new(ctx, &g)?;
                let bound = max_len.unwrap_or_else(|| short_loop_threshold(p));
                let res = girth(&cx, bound, DEFAULT_BFS_CAP)?;
                rows.push(Row {
                    p,
                    trial: i as i64,
                    generates: None,
                    girth: res.relation_len,
                    diameter: None,
                    mixing_n: None,
                    lambda2: None,
                });
            }
            emit_rows(&mut sink, common.format, common.seed, &config, &rows);
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "girth", "primes": primes.len(), "config": config}),
            );
            Ok(())
        }

        Cmd::Mixing { common, gens } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "mixing".into(),
                format!("{primes:?}"),
                gens.gens.clone(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            let mut rows = Vec::new();
            for (i, &p) in primes.iter().enumerate() {
                let ctx = ctx_for(p)?;
                let g = parse_gens(ctx, &gens.gens, common.seed)?;
                let cx = CayleyContext::new(ctx, &g)?;
                let res = mixing_time(&cx, DEFAULT_WALK_CAP)?;
                if !res.monotone {
                    return Err(CliError::Internal(
                        "L1 distance to uniform increased along the walk".into(),
                    ));
                }
                rows.push(Row {
                    p,
                    trial: i as i64,
                    generates: None,
                    girth: None,
                    diameter: None,
                    mixing_n: Some(res.mixing_time),
                    lambda2: None,
                });
            }
            emit_rows(&mut sink, common.format, common.seed, &config, &rows);
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "mixing", "primes": primes.len(), "config": config}),
            );
            Ok(())
        }

        Cmd::Spectral {
            common,
            gens,
            method,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "spectral".into(),
                format!("{primes:?}"),
                gens.gens.clone(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            let mut rows = Vec::new();
            for (i, &p) in primes.iter().enumerate() {
                let ctx = ctx_for(p)?;
                let g = parse_gens(ctx, &gens.gens, common.seed)?;
                let cx = CayleyContext::new(ctx, &g)?;
                let use_dense = match method {
                    SpectralMethod::Dense => true,
                    SpectralMethod::Power => false,
                    SpectralMethod::Auto => ctx.order() <= DENSE_SPECTRAL_CAP,
                };
                let out = if use_dense {
                    spectral_lambda2_dense(&cx)?
                } else {
                    spectral_lambda2_power(&cx, 1e-8, 1_000_000, DEFAULT_WALK_CAP)?
                };
                rows.push(Row {
                    p,
                    trial: i as i64,
                    generates: None,
                    girth: None,
                    diameter: None,
                    mixing_n: None,
                    lambda2: Some(out.lambda2),
                });
            }
            emit_rows(&mut sink, common.format, common.seed, &config, &rows);
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "spectral", "primes": primes.len(), "config": config}),
            );
            Ok(())
        }

        Cmd::Growth {
            common,
            random_sets,
            size,
            delta,
            depth_cap,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "growth".into(),
                format!("{primes:?}"),
                random_sets.to_string(),
                size.to_string(),
                delta.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line("p,trial,explicit_pass,early_exit,tripling_exponent,seed,config");
            }
            let params = GrowthParams {
                escape_depth_cap: depth_cap,
                assume_generating: true,
                ..Default::default()
            };
            let mut all_pass = true;
            let mut min_exp = f64::INFINITY;
            for &p in &primes {
                let ctx = ctx_for(p)?;
                for trial in 0..random_sets {
                    let mut rng = trial_rng(common.seed, trial);
                    let a = random_generating_set(ctx, size, &mut rng, DEFAULT_CLOSURE_CAP)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    match growth_certificate(&a, delta, &params) {
                        Ok(chain) => {
                            all_pass &= chain.explicit_stages_pass;
                            min_exp = min_exp.min(chain.tripling_exponent);
                            if common.format == Format::Csv {
                                sink.line(&format!(
                                    "{},{},{},{},{},{},{}",
                                    p,
                                    trial,
                                    chain.explicit_stages_pass,
                                    chain.early_exit,
                                    chain.tripling_exponent,
                                    common.seed,
                                    config
                                ));
                            } else {
                                let mut v = serde_json::to_value(&chain).unwrap();
                                v["trial"] = json!(trial);
                                v["seed"] = json!(common.seed);
                                v["config"] = json!(config);
                                sink.line(&v.to_string());
                            }
                        }
                        Err(e) => {
                            if common.format == Format::Csv {
                                sink.line(&format!(
                                    "{p},{trial},error,,,{},{}",
                                    common.seed, config
                                ));
                            } else {
                                sink.line(
                                    &json!({
                                        "p": p, "trial": trial, "error": e.to_string(),
                                        "seed": common.seed, "config": config,
                                    })
                                    .to_string(),
                                );
                            }
                        }
                    }
                }
            }
            emit_summary(
                &mut sink,
                common.format,
                &json!({
                    "summary": "growth",
                    "all_explicit_stages_pass": all_pass,
                    "min_tripling_exponent": if min_exp.is_finite() { min_exp } else { 0.0 },
                    "config": config,
                }),
            );
            Ok(())
        }

        Cmd::Sumproduct {
            common,
            size,
            trials,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "sumproduct".into(),
                format!("{primes:?}"),
                size.to_string(),
                trials.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line("p,trial,card,sum_card,prod_card,exponent,seed,config");
            }
            let mut min_exp = f64::INFINITY;
            for &p in &primes {
                if size as u64 >= p {
                    return Err(CliError::Usage(format!("size {size} >= p = {p}")));
                }
                for trial in 0..trials {
                    let mut rng = trial_rng(common.seed, trial);
                    let mut a = ZpSet::empty(p);
                    while (a.card() as usize) < size {
                        a.insert(rng.random_range(1..p));
                    }
                    let st =
                        sumproduct_stats(&a).map_err(|e| CliError::Internal(e.to_string()))?;
                    min_exp = min_exp.min(st.exponent);
                    if common.format == Format::Csv {
                        sink.line(&format!(
                            "{},{},{},{},{},{},{},{}",
                            p,
                            trial,
                            st.card,
                            st.sum_card,
                            st.prod_card,
                            st.exponent,
                            common.seed,
                            config
                        ));
                    } else {
                        sink.line(
                            &json!({
                                "p": p, "trial": trial, "card": st.card,
                                "sum_card": st.sum_card, "prod_card": st.prod_card,
                                "exponent": st.exponent, "seed": common.seed, "config": config,
                            })
                            .to_string(),
                        );
                    }
                }
            }
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "sumproduct", "min_exponent": min_exp, "config": config}),
            );
            Ok(())
        }

        Cmd::Sorge {
            common,
            size,
            s_size,
            c,
            trials,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "sorge".into(),
                format!("{primes:?}"),
                size.to_string(),
                s_size.to_string(),
                c.to_string(),
                trials.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line("p,trial,xi,sumset_card,bound_holds,count_holds,seed,config");
            }
            let mut all_hold = true;
            for &p in &primes {
                for trial in 0..trials {
                    let mut rng = trial_rng(common.seed, trial);
                    let mut a = ZpSet::empty(p);
                    while (a.card() as usize) < size.min(p as usize - 1) {
                        a.insert(rng.random_range(0..p));
                    }
                    let s = if s_size == 0 {
                        ZpSet::full_star(p)
                    } else {
                        let mut s = ZpSet::empty(p);
                        while (s.card() as usize) < s_size.min(p as usize - 1) {
                            s.insert(rng.random_range(1..p));
                        }
                        s
                    };
                    let out = sorge_find_xi(&a, &s, c)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    all_hold &= out.bound_holds && out.count_holds;
                    if common.format == Format::Csv {
                        sink.line(&format!(
                            "{},{},{},{},{},{},{},{}",
                            p,
                            trial,
                            out.xi,
                            out.sumset_card,
                            out.bound_holds,
                            out.count_holds,
                            common.seed,
                            config
                        ));
                    } else {
                        let mut v = serde_json::to_value(&out).unwrap();
                        v["p"] = json!(p);
                        v["trial"] = json!(trial);
                        v["seed"] = json!(common.seed);
                        v["config"] = json!(config);
                        sink.line(&v.to_string());
                    }
                }
            }
            if !all_hold {
                return Err(CliError::Internal(
                    "a dilate certificate failed (proved statement)".into(),
                ));
            }
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "sorge", "all_hold": all_hold, "config": config}),
            );
            Ok(())
        }

        Cmd::Attac {
            common,
            subset_size,
            trials,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "attac".into(),
                format!("{primes:?}"),
                subset_size.to_string(),
                trials.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line(
                    "p,trial,hypothesis_ok,produced,max_word_len,r,t,dilate_card,seed,config",
                );
            }
            for &p in &primes {
                let ctx = ctx_for(p)?;
                let h = borel_subgroup(ctx);
                let h_indices = h.to_sorted_indices();
                for trial in 0..trials {
                    let mut rng = trial_rng(common.seed, trial);
                    let chosen: Vec<u64> = if subset_size == 0 || subset_size >= h.card() {
                        h_indices.clone()
                    } else {
                        sample_indices(&mut rng, h_indices.len(), subset_size as usize)
                            .iter()
                            .map(|i| h_indices[i])
                            .collect()
                    };
                    let tracked = TrackedSet::from_indices(ctx, chosen)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    match attac_unipotents(&tracked) {
                        Ok(out) => {
                            if common.format == Format::Csv {
                                sink.line(&format!(
                                    "{},{},true,{},{},{},{},{},{},{}",
                                    p,
                                    trial,
                                    out.unipotents.len(),
                                    out.unipotents.max_word_len(),
                                    out.r,
                                    out.t,
                                    out.dilate_card,
                                    common.seed,
                                    config
                                ));
                            } else {
                                sink.line(
                                    &json!({
                                        "p": p, "trial": trial, "hypothesis_ok": true,
                                        "produced": out.unipotents.len(),
                                        "max_word_len": out.unipotents.max_word_len(),
                                        "r": out.r, "t": out.t, "u": out.u,
                                        "dilate_card": out.dilate_card,
                                        "dilate_check": out.dilate_check,
                                        "seed": common.seed, "config": config,
                                    })
                                    .to_string(),
                                );
                            }
                        }
                        Err(BorelError::Hypothesis(msg)) => {
                            if common.format == Format::Csv {
                                sink.line(&format!(
                                    "{p},{trial},false,,,,,,{},{}",
                                    common.seed, config
                                ));
                            } else {
                                sink.line(
                                    &json!({
                                        "p": p, "trial": trial, "hypothesis_ok": false,
                                        "error": msg, "seed": common.seed, "config": config,
                                    })
                                    .to_string(),
                                );
                            }
                        }
                        Err(e) => return Err(CliError::Internal(e.to_string())),
                    }
                }
            }
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "attac", "config": config}),
            );
            Ok(())
        }

        Cmd::Factorize {
            common,
            density,
            targets,
            force,
        } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(CliError::Usage("density must lie in [0, 1]".into()));
            }
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "factorize".into(),
                format!("{primes:?}"),
                density.to_string(),
                targets.to_string(),
                force.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line("p,trial,target,word_len,verified,seed,config");
            }
            for &p in &primes {
                let ctx = ctx_for(p)?;
                let mut rng = trial_rng(common.seed, u64::MAX);
                let a = GroupSet::from_index_iter(
                    ctx,
                    (0..ctx.order()).filter(|_| rng.random_bool(density)),
                );
                match Factorizer::new(a, force) {
                    Ok(fac) => {
                        for trial in 0..targets {
                            let mut trng = trial_rng(common.seed, trial);
                            let idx = trng.random_range(0..ctx.order());
                            let target = ctx.decode_unchecked(idx);
                            let word = fac
                                .factorize(target)
                                .map_err(|e| CliError::Internal(e.to_string()))?;
                            if common.format == Format::Csv {
                                sink.line(&format!(
                                    "{},{},{},{},true,{},{}",
                                    p,
                                    trial,
                                    idx,
                                    word.len(),
                                    common.seed,
                                    config
                                ));
                            } else {
                                sink.line(
                                    &json!({
                                        "p": p, "trial": trial, "target": idx,
                                        "word_len": word.len(), "verified": true,
                                        "seed": common.seed, "config": config,
                                    })
                                    .to_string(),
                                );
                            }
                        }
                        emit_summary(
                            &mut sink,
                            common.format,
                            &json!({
                                "summary": "factorize",
                                "stats": serde_json::to_value(&fac.stats).unwrap(),
                                "config": config,
                            }),
                        );
                    }
                    Err(BorelError::Hypothesis(msg)) => {
                        emit_summary(
                            &mut sink,
                            common.format,
                            &json!({
                                "summary": "factorize", "p": p, "hypothesis_ok": false,
                                "error": msg, "seed": common.seed, "config": config,
                            }),
                        );
                    }
                    Err(BorelError::BucketShortfall { side, got }) => {
                        emit_summary(
                            &mut sink,
                            common.format,
                            &json!({
                                "summary": "factorize", "p": p, "hypothesis_ok": false,
                                "error": format!("bucket shortfall on {side}: {got}"),
                                "seed": common.seed, "config": config,
                            }),
                        );
                    }
                    Err(e) => return Err(CliError::Internal(e.to_string())),
                }
            }
            Ok(())
        }

        Cmd::RandomPairs { common, trials } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "random-pairs".into(),
                format!("{primes:?}"),
                trials.to_string(),
                common.seed.to_string(),
            ]);
            let mut sink = Sink::new(&common.out)?;
            let mut rows = Vec::new();
            let mut summaries = Vec::new();
            for &p in &primes {
                let ctx = ctx_for(p)?;
                let stats = random_pairs(ctx, trials, common.seed, DEFAULT_BFS_CAP)?;
                for rec in &stats.records {
                    rows.push(Row {
                        p,
                        trial: rec.trial as i64,
                        generates: Some(rec.generates),
                        girth: rec.girth,
                        diameter: rec.diameter,
                        mixing_n: None,
                        lambda2: None,
                    });
                }
                summaries.push(json!({
                    "p": p,
                    "generating_fraction": stats.generating_fraction,
                    "short_loop_fraction": stats.short_loop_fraction,
                    "girth_threshold": stats.girth_threshold,
                }));
            }
            emit_rows(&mut sink, common.format, common.seed, &config, &rows);
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "random-pairs", "per_p": summaries, "config": config}),
            );
            Ok(())
        }

        Cmd::Freewords {
            common,
            gens,
            max_len,
            trials,
        } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "freewords".into(),
                format!("{primes:?}"),
                gens.gens.clone(),
                format!("{max_len:?}"),
                trials.to_string(),
                common.seed.to_string(),
            ]);
            let int_gens: Vec<[i64; 4]> = match gens.gens.as_str() {
                "offdiag1" => vec![[1, 1, 0, 1], [1, 0, 1, 1]],
                "offdiag3" => vec![[1, 3, 0, 1], [1, 0, 3, 1]],
                other => {
                    return Err(CliError::Usage(format!(
                        "freewords needs a named integer fixture (offdiag1/offdiag3), got {other:?}"
                    )))
                }
            };
            let mut sink = Sink::new(&common.out)?;
            if common.format == Format::Csv {
                sink.line("p,trial,max_len,words_tested,violations,seed,config");
            }
            for &p in &primes {
                let bound =
                    max_len.unwrap_or_else(|| 13u32.min(floor_log2(p.saturating_sub(2).max(2))));
                let report = free_word_check(&int_gens, p, bound, trials, common.seed)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                if report.violations > 0 {
                    return Err(CliError::Internal(format!(
                        "{} free-word violations at p = {p}",
                        report.violations
                    )));
                }
                if common.format == Format::Csv {
                    sink.line(&format!(
                        "{},0,{},{},{},{},{}",
                        p,
                        report.max_len,
                        report.words_tested,
                        report.violations,
                        common.seed,
                        config
                    ));
                } else {
                    let mut v = serde_json::to_value(&report).unwrap();
                    v["seed"] = json!(common.seed);
                    v["config"] = json!(config);
                    sink.line(&v.to_string());
                }
            }
            emit_summary(
                &mut sink,
                common.format,
                &json!({"summary": "freewords", "config": config}),
            );
            Ok(())
        }

        Cmd::Fixtures { common, kind } => {
            let primes = primes_from(&common)?;
            let config = config_hash(&[
                "fixtures".into(),
                format!("{primes:?}"),
                format!("{:?}", matches!(kind, FixtureArg::Coset)),
            ]);
            let kind = match kind {
                FixtureArg::Coset => FixtureKind::Coset,
                FixtureArg::SubgroupPlusPoint => FixtureKind::SubgroupPlusPoint,
            };
            // records go to stdout; --out stores the set itself
            let mut sink = Sink::new(&None)?;
            for &p in &primes {
                let ctx = ctx_for(p)?;
                let fix = pathological_fixture(ctx, kind)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let aainv = product_set(&fix.set, &fix.set.inverse_set())
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                let aa = product_set(&fix.set, &fix.set)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                let aaa =
                    triple_product(&fix.set).map_err(|e| CliError::Internal(e.to_string()))?;
                sink.line(
                    &json!({
                        "p": p,
                        "kind": format!("{kind:?}"),
                        "card": fix.set.card(),
                        "subgroup_card": fix.subgroup.card(),
                        "aainv_card": aainv.card(),
                        "aa_card": aa.card(),
                        "aaa_card": aaa.card(),
                        "config": config,
                    })
                    .to_string(),
                );
                if let Some(path) = &common.out {
                    let mut f = File::create(path)
                        .map_err(|e| CliError::Usage(format!("cannot open {path}: {e}")))?;
                    if path.ends_with(".bin") {
                        fix.set
                            .write_binary(&mut f)
                            .map_err(|e| CliError::Internal(e.to_string()))?;
                    } else {
                        f.write_all(fix.set.to_json().as_bytes())
                            .map_err(|e| CliError::Internal(e.to_string()))?;
                    }
                }
            }
            Ok(())
        }
    }
}
