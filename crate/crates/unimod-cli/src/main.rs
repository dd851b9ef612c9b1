//! Command-line front end: every computation as a reproducible, seeded,
//! JSON- or CSV-emitting subcommand.
//!
//! Scalar results are JSON documents `{ "manifest": ..., "report": ... }`;
//! trajectories and tables are CSV with the manifest in a leading `#`
//! comment line.  Rerunning with identical parameters (and seed) reproduces
//! the numerical payload byte for byte, independent of `--workers`.

// Negated float comparisons double as NaN rejection in argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifest::{emit_csv, emit_json};
use serde_json::json;
use std::process::ExitCode;
use unimod::dani::{
    dirichlet_check_both, dirichlet_check_cf, dirichlet_check_flow, parse_psi_spec,
    parse_rate_spec, r_to_psi, validate_psi, validate_rate, RateFunction,
};
use unimod::dynamics::{bc_experiment, delta_trajectory, thickening_measure_mc, OrbitStart};
use unimod::haar::HaarSampler;
use unimod::lattice::LatticeSpec;
use unimod::moments::{
    kr_measure_asymptotic, kr_measure_exact, kr_measure_mc, mc_moment, second_moment_disc_exact,
    second_moment_general, second_moment_square_exact, siegel_mean_exact, QuadOptions,
};
use unimod::{ConvexRegion, Error, LatticeBasis};

#[derive(Parser)]
#[command(
    name = "unimod",
    version,
    about = "Exact and Monte-Carlo statistics of rank-2 unimodular lattices",
    after_help = "Region specs: square:r=<f> | disc:R=<f> | rect:x0,y0,x1,y1 | poly:x1,y1;x2,y2;...\n\
                  Lattice specs: z2 | shear:x=<f> | diag:s=<f> | basis:b1x,b1y,b2x,b2y | haar\n\
                  Psi specs: psi:pow:a=<f>[,t0=<f>] | psi:mod1[:t0=<f>] | psi:mod2[:t0=<f>] | tab:<path>\n\
                  Rate specs: rate:const:c=<f>[,s0=<f>] | rate:pow:alpha=<f>[,c=<f>,s0=<f>] | rate:logpow:alpha=<f>,beta=<f>,s0=<f>[,c=<f>] | tab:<path>"
)]
struct Cli {
    /// Worker threads for parallel Monte Carlo; the output is independent of
    /// this value [default: all cores]
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MomentRoute {
    Exact,
    Quad,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KrRoute {
    Exact,
    Asymptotic,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Cf,
    Flow,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Start {
    Haar,
    Translate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConvertFrom {
    Psi,
    Rate,
}

#[derive(Subcommand)]
enum Command {
    /// Mean number of primitive lattice points in a region (area / zeta(2))
    SiegelMean {
        /// Region spec, e.g. `square:r=0.1` or `disc:R=1.5`
        region: String,
    },
    /// Second moment of the primitive count in a region
    SecondMoment {
        /// Region spec, e.g. `square:r=0.1` or `disc:R=1.5`
        region: String,
        /// Evaluation route; `exact` needs an origin-centered square or disc
        #[arg(long, value_enum, default_value = "exact")]
        route: MomentRoute,
        /// Relative tolerance of the quadrature route
        #[arg(long, default_value_t = 3e-5)]
        tol: f64,
        /// Cell budget of the quadrature route
        #[arg(long, default_value_t = 1_000_000)]
        max_cells: usize,
        /// Monte Carlo sample count
        #[arg(short = 'N', long = "samples", default_value_t = 1_000_000)]
        samples: u64,
        /// RNG seed (required for the Monte Carlo route)
        #[arg(long, required_if_eq("route", "mc"))]
        seed: Option<u64>,
    },
    /// Haar measure of the compact set K_r
    KrMeasure {
        /// Threshold r >= 0
        r: f64,
        #[arg(long, value_enum, default_value = "exact")]
        route: KrRoute,
        /// Monte Carlo sample count
        #[arg(short = 'N', long = "samples", default_value_t = 1_000_000)]
        samples: u64,
        /// RNG seed (required for the Monte Carlo route)
        #[arg(long, required_if_eq("route", "mc"))]
        seed: Option<u64>,
    },
    /// Monte Carlo measure of the flow thickening of K_r over s in [0, 1)
    Thickening {
        /// Target radius r > 0
        r: f64,
        /// Sample count (at least 10^4)
        #[arg(short = 'N', long = "samples", default_value_t = 1_000_000)]
        samples: u64,
        /// Scan step; must be at most r/4 [default: r/4]
        #[arg(long)]
        delta: Option<f64>,
        /// RNG seed
        #[arg(long, required = true)]
        seed: Option<u64>,
    },
    /// Trajectory of delta along the diagonal flow, as CSV
    FlowTrace {
        /// Lattice spec, e.g. `z2`, `shear:x=0.37`, or `haar`
        lattice: String,
        /// Target rate spec, e.g. `rate:const:c=0.2`
        #[arg(long)]
        rate: String,
        /// Flow horizon
        #[arg(long)]
        smax: f64,
        /// Grid step (at most 0.5)
        #[arg(long)]
        delta: f64,
        /// RNG seed (required for `haar` lattices)
        #[arg(long, required_if_eq("lattice", "haar"))]
        seed: Option<u64>,
    },
    /// Shrinking-target hit statistics over dyadic windows
    BcExperiment {
        /// Target rate spec, e.g. `rate:pow:alpha=2`
        #[arg(long)]
        rate: String,
        /// Number of orbits (at least 100)
        #[arg(short = 'N', long = "orbits", default_value_t = 500)]
        orbits: u64,
        /// Flow horizon
        #[arg(long)]
        smax: f64,
        /// Base scan step
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Orbit start distribution
        #[arg(long, value_enum, default_value = "haar")]
        start: Start,
        /// RNG seed
        #[arg(long, required = true)]
        seed: Option<u64>,
    },
    /// Convert between approximation functions and flow rates, as CSV
    Dani {
        #[command(subcommand)]
        command: DaniCommand,
    },
    /// Decide psi-Dirichlet behavior of a real number up to a horizon
    DirichletCheck {
        /// The real number, in (0, 1)
        x: f64,
        /// Approximation function spec, e.g. `psi:pow:a=0.9`
        #[arg(long)]
        psi: String,
        /// Denominator horizon (convergents up to q <= horizon)
        #[arg(long)]
        horizon: f64,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        /// Flow scan step
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Draw Haar-distributed lattice bases, as CSV
    SampleLattices {
        /// Number of lattices
        #[arg(short = 'N', long = "samples", default_value_t = 100)]
        samples: u64,
        /// RNG seed
        #[arg(long, required = true)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum DaniCommand {
    /// Tabulate the corresponding function on a grid
    Convert(ConvertArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Which side the spec describes; the other side is tabulated
    #[arg(long, value_enum)]
    from: ConvertFrom,
    /// Function spec (`psi:...`, `rate:...`, or `tab:<path>`)
    spec: String,
    /// Output grid `lo:hi:count`, log-spaced [default: three decades from
    /// the domain start, 200 points]
    #[arg(long)]
    grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // Ignore failure: the global pool may already exist.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_convergence() {
                ExitCode::from(3)
            } else if e.is_argument() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::SiegelMean { region } => {
            let reg: ConvexRegion = region.parse()?;
            let params = json!({ "region": region });
            let report = json!({
                "route": "exact",
                "value": siegel_mean_exact(&reg),
                "error": 0.0,
                "n_terms": null,
                "samples": null,
                "seed": null,
                "region": reg.describe(),
                "area": reg.area(),
            });
            emit_json("siegel-mean", params, None, report)
        }
        Command::SecondMoment {
            region,
            route,
            tol,
            max_cells,
            samples,
            seed,
        } => {
            let reg: ConvexRegion = region.parse()?;
            let params = json!({
                "region": region,
                "route": route_name(route),
                "tol": tol,
                "max_cells": max_cells,
                "samples": samples,
            });
            let report = match route {
                MomentRoute::Exact => {
                    let value = exact_second_moment(&region, &reg)?;
                    json!({
                        "route": "exact",
                        "value": value,
                        "error": 0.0,
                        "n_terms": null,
                        "samples": null,
                        "seed": null,
                        "region": reg.describe(),
                    })
                }
                MomentRoute::Quad => {
                    let quad = second_moment_general(
                        &reg,
                        QuadOptions {
                            rel_tol: tol,
                            max_cells,
                        },
                    )?;
                    json!({
                        "route": "quad",
                        "value": quad.value,
                        "error": quad.error,
                        "n_terms": quad.terms.len(),
                        "samples": null,
                        "seed": null,
                        "region": reg.describe(),
                        "terms": quad.terms,
                        "cells": quad.cells,
                    })
                }
                MomentRoute::Mc => {
                    let sampler = HaarSampler::new(seed.expect("clap enforces seed"));
                    let est = mc_moment(&reg, 2, samples, &sampler)?;
                    json!({
                        "route": "mc",
                        "value": est.mean,
                        "error": est.std_error,
                        "n_terms": null,
                        "samples": est.samples,
                        "seed": seed,
                        "region": reg.describe(),
                        "counts": est.counts,
                    })
                }
            };
            emit_json("second-moment", params, seed, report)
        }
        Command::KrMeasure {
            r,
            route,
            samples,
            seed,
        } => {
            let params = json!({
                "r": r,
                "route": kr_route_name(route),
                "samples": samples,
            });
            let report = match route {
                KrRoute::Exact => json!({
                    "route": "exact",
                    "value": kr_measure_exact(r)?,
                    "error": 0.0,
                    "samples": null,
                    "seed": null,
                    "r": r,
                }),
                KrRoute::Asymptotic => json!({
                    "route": "asymptotic",
                    "value": kr_measure_asymptotic(r)?,
                    "error": 0.0,
                    "samples": null,
                    "seed": null,
                    "r": r,
                }),
                KrRoute::Mc => {
                    let sampler = HaarSampler::new(seed.expect("clap enforces seed"));
                    let est = kr_measure_mc(r, samples, &sampler)?;
                    json!({
                        "route": "mc",
                        "value": est.fraction,
                        "error": est.std_error,
                        "samples": est.samples,
                        "seed": seed,
                        "r": r,
                        "hits": est.hits,
                    })
                }
            };
            emit_json("kr-measure", params, seed, report)
        }
        Command::Thickening {
            r,
            samples,
            delta,
            seed,
        } => {
            let step = delta.unwrap_or(r / 4.0);
            let seed_v = seed.expect("clap enforces seed");
            let params = json!({
                "r": r,
                "samples": samples,
                "delta": step,
            });
            let sampler = HaarSampler::new(seed_v);
            let est = thickening_measure_mc(r, samples, step, &sampler)?;
            let report = json!({
                "r": r,
                "delta": step,
                "estimate": est.estimate,
                "std_error": est.std_error,
                "indeterminate_fraction": est.indeterminate_fraction,
                "samples": est.samples,
                "seed": seed_v,
            });
            emit_json("thickening", params, seed, report)
        }
        Command::FlowTrace {
            lattice,
            rate,
            smax,
            delta,
            seed,
        } => {
            let spec: LatticeSpec = lattice.parse()?;
            let rate_fn = parse_rate_spec(&rate)?;
            let basis = resolve_lattice(&spec, seed)?;
            let s0 = rate_fn.domain_start();
            if !(smax > s0) {
                return Err(Error::Precondition(format!(
                    "smax {smax} must exceed the rate domain start {s0}"
                )));
            }
            if !(delta > 0.0 && delta <= 0.5) {
                return Err(Error::Precondition(format!(
                    "trace step must lie in (0, 0.5], got {delta}"
                )));
            }
            if (smax - s0) / delta > 10_000_000.0 {
                return Err(Error::Precondition(
                    "trace would exceed 10^7 grid points; widen --delta or lower --smax".into(),
                ));
            }
            let mut grid = Vec::new();
            let mut s = s0;
            while s < smax {
                grid.push(s);
                s += delta;
            }
            grid.push(smax);
            let mut record = delta_trajectory(&basis, &grid)?;
            record.annotate(&rate_fn);
            let params = json!({
                "lattice": lattice,
                "rate": rate,
                "smax": smax,
                "delta": delta,
            });
            let mut rows = String::from("s,delta,r_of_s,hit,margin\n");
            for sample in &record.samples {
                rows.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sample.s,
                    sample.delta,
                    sample.rate.unwrap_or(f64::NAN),
                    u8::from(sample.hit),
                    sample.margin.unwrap_or(f64::NAN),
                ));
            }
            emit_csv("flow-trace", params, seed, &rows)
        }
        Command::BcExperiment {
            rate,
            orbits,
            smax,
            delta,
            start,
            seed,
        } => {
            let rate_fn = parse_rate_spec(&rate)?;
            let seed_v = seed.expect("clap enforces seed");
            let sampler = HaarSampler::new(seed_v);
            let start_mode = match start {
                Start::Haar => OrbitStart::Haar,
                Start::Translate => OrbitStart::Translate,
            };
            let stats = bc_experiment(&rate_fn, orbits, smax, delta, &sampler, start_mode)?;
            let params = json!({
                "rate": rate,
                "orbits": orbits,
                "smax": smax,
                "delta": delta,
                "start": match start { Start::Haar => "haar", Start::Translate => "translate" },
            });
            let report = serde_json::to_value(&stats).expect("serializable stats");
            emit_json("bc-experiment", params, seed, report)
        }
        Command::Dani { command } => match command {
            DaniCommand::Convert(args) => dani_convert(args),
        },
        Command::DirichletCheck {
            x,
            psi,
            horizon,
            method,
            delta,
        } => {
            let psi_fn = parse_psi_spec(&psi)?;
            let params = json!({
                "x": x,
                "psi": psi,
                "horizon": horizon,
                "method": match method { Method::Cf => "cf", Method::Flow => "flow", Method::Both => "both" },
                "delta": delta,
            });
            let report = match method {
                Method::Cf => {
                    let cf = dirichlet_check_cf(x, &psi_fn, horizon)?;
                    json!({ "x": x, "cf": cf })
                }
                Method::Flow => {
                    let rate = RateFunction::dani_of(psi_fn.clone());
                    let s_max = horizon.ln() + rate.eval(rate.domain_start());
                    let flow = dirichlet_check_flow(x, &psi_fn, s_max, delta)?;
                    json!({
                        "x": x,
                        "flow": flow,
                        "non_dirichlet_evidence": flow.non_dirichlet_evidence(),
                    })
                }
                Method::Both => {
                    let cmp = dirichlet_check_both(x, &psi_fn, horizon, delta)?;
                    json!({
                        "x": x,
                        "cf": cmp.cf,
                        "flow": cmp.flow,
                        "flow_hits_in_horizon": cmp.flow_hits_in_horizon,
                        "agree": cmp.agree,
                        "boundary": cmp.boundary,
                    })
                }
            };
            emit_json("dirichlet-check", params, None, report)
        }
        Command::SampleLattices { samples, seed } => {
            let seed_v = seed.expect("clap enforces seed");
            let mut sampler = HaarSampler::new(seed_v);
            let params = json!({ "samples": samples });
            let mut rows = String::from("index,b1x,b1y,b2x,b2y\n");
            for i in 0..samples {
                let basis = sampler.sample_lattice();
                let (b1, b2) = basis.columns();
                rows.push_str(&format!("{i},{},{},{},{}\n", b1.x, b1.y, b2.x, b2.y));
            }
            emit_csv("sample-lattices", params, seed, &rows)
        }
    }
}

fn route_name(route: MomentRoute) -> &'static str {
    match route {
        MomentRoute::Exact => "exact",
        MomentRoute::Quad => "quad",
        MomentRoute::Mc => "mc",
    }
}

fn kr_route_name(route: KrRoute) -> &'static str {
    match route {
        KrRoute::Exact => "exact",
        KrRoute::Asymptotic => "asymptotic",
        KrRoute::Mc => "mc",
    }
}

/// Closed forms exist for origin-centered squares (`square:r=...`) and discs.
fn exact_second_moment(spec: &str, region: &ConvexRegion) -> Result<f64, Error> {
    if let Some(rest) = spec.strip_prefix("square:r=") {
        let r: f64 = rest.parse().map_err(|_| Error::Spec {
            kind: "region",
            input: spec.to_string(),
            reason: "bad square parameter".into(),
        })?;
        return second_moment_square_exact(r);
    }
    if let Some(radius) = region.disc_radius() {
        return second_moment_disc_exact(radius);
    }
    Err(Error::Precondition(format!(
        "no closed form for `{spec}`; use --route quad or --route mc"
    )))
}

fn resolve_lattice(spec: &LatticeSpec, seed: Option<u64>) -> Result<LatticeBasis, Error> {
    match spec.instantiate()? {
        Some(basis) => Ok(basis),
        None => {
            let seed = seed.ok_or_else(|| {
                Error::Precondition("`haar` lattices need --seed".into())
            })?;
            Ok(HaarSampler::new(seed).sample_lattice())
        }
    }
}

fn dani_convert(args: ConvertArgs) -> Result<(), Error> {
    let params = json!({
        "from": match args.from { ConvertFrom::Psi => "psi", ConvertFrom::Rate => "rate" },
        "spec": args.spec,
        "grid": args.grid,
    });
    match args.from {
        ConvertFrom::Psi => {
            let psi = parse_psi_spec(&args.spec)?;
            let outcome = validate_psi(&psi);
            if !outcome.ok {
                return Err(Error::Validation {
                    subject: "psi function",
                    report: outcome.summary(),
                });
            }
            let rate = RateFunction::dani_of(psi);
            let s0 = rate.domain_start();
            let grid = parse_grid(args.grid.as_deref(), s0.max(1e-6))?;
            let mut rows = String::from("s,r\n");
            for s in grid {
                rows.push_str(&format!("{s},{}\n", rate.eval(s)));
            }
            emit_csv("dani-convert", params, None, &rows)
        }
        ConvertFrom::Rate => {
            let rate = parse_rate_spec(&args.spec)?;
            let outcome = validate_rate(&rate);
            if !outcome.ok {
                return Err(Error::Validation {
                    subject: "rate function",
                    report: outcome.summary(),
                });
            }
            let s0 = rate.domain_start();
            let t0 = (s0 - rate.eval(s0)).exp();
            let grid = parse_grid(args.grid.as_deref(), t0.max(1e-6))?;
            let mut rows = String::from("t,psi\n");
            for t in grid {
                rows.push_str(&format!("{t},{}\n", r_to_psi(&rate, t)?));
            }
            emit_csv("dani-convert", params, None, &rows)
        }
    }
}

fn parse_grid(spec: Option<&str>, lo_default: f64) -> Result<Vec<f64>, Error> {
    let (lo, hi, count) = match spec {
        None => (lo_default * (1.0 + 1e-9), lo_default * 1e3, 200usize),
        Some(text) => {
            let parts: Vec<&str> = text.split(':').collect();
            let bad = |reason: &str| Error::Spec {
                kind: "grid",
                input: text.to_string(),
                reason: reason.to_string(),
            };
            if parts.len() != 3 {
                return Err(bad("expected `lo:hi:count`"));
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad("bad lower bound"))?;
            let hi: f64 = parts[1].parse().map_err(|_| bad("bad upper bound"))?;
            let count: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
            if !(lo > 0.0 && hi > lo) || count < 2 {
                return Err(bad("need 0 < lo < hi and count >= 2"));
            }
            (lo, hi, count)
        }
    };
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let mut grid = Vec::with_capacity(count);
    let mut x = lo;
    for _ in 0..count {
        grid.push(x);
        x *= ratio;
    }
    Ok(grid)
}
