//! One function per subcommand. Each returns the text to print on stdout.

use std::path::Path;

use kentropy::approx::{convergence_table, KernelFunction, DEFAULT_BLOCK_QUADRATURE};
use kentropy::coarse::{dpi_report, dpi_report_supported, ENTROPY_SLACK};
use kentropy::conditional::{conditional_entropies, conditional_entropy, mutual_information};
use kentropy::discrete::{entropy, partition_necessary_condition, typicality};
use kentropy::lift::{markov_dpi_report, realization_check};
use kentropy::taskgain::{
    coarse_gap_bound, envelope_kernels, envelope_ratio_bound, metric_envelopes, rank_designs, BayesModel,
    DesignEstimate, EnvelopePair, EstimatorOptions, FiniteReveal, GaussLocation,
};
use serde_json::{json, Value};

use crate::error::{CliError, ExitCode};
use crate::schema::{read_doc, ChannelDoc, DistDoc, JointDoc, KernelDoc, MapDoc, PmfDoc};

const BOUND_SLACK: f64 = 1e-12;

fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn kernel_json(doc: KernelDoc) -> Value {
    serde_json::to_value(doc).expect("kernel documents serialize")
}

pub fn entropy_cmd(kernel: &Path, pmf: &Path) -> Result<String, CliError> {
    let k = read_doc::<KernelDoc>(kernel)?.to_kernel()?;
    let p = read_doc::<PmfDoc>(pmf)?.to_pmf()?;
    let h = entropy(&k, &p)?;
    let tau = typicality(&k, &p)?;
    Ok(render(&json!({ "H": h, "typicality": tau.values() })))
}

pub fn coarse_cmd(kernel: &Path, pmf: &Path, map: &Path, supported: bool) -> Result<String, CliError> {
    let k = read_doc::<KernelDoc>(kernel)?.to_kernel()?;
    let p = read_doc::<PmfDoc>(pmf)?.to_pmf()?;
    let f = read_doc::<MapDoc>(map)?.to_map()?;
    let rep = if supported {
        dpi_report_supported(&k, &p, &f)?
    } else {
        dpi_report(&k, &p, &f)?
    };
    if !rep.dpi_holds || !rep.backcomp_equal {
        return Err(CliError::invariant(format!(
            "coarse-graining inequality failed: H_X = {}, H_f = {}, H_Y = {}",
            rep.h_x, rep.h_f, rep.h_y
        )));
    }
    Ok(render(&json!({
        "K_Y": kernel_json(KernelDoc::from_kernel(&rep.kernel_y)),
        "H_X": rep.h_x,
        "H_f": rep.h_f,
        "H_Y": rep.h_y,
        "dpi_holds": rep.dpi_holds,
        "backcomp_equal": rep.backcomp_equal,
    })))
}

pub fn conditional_cmd(kernel: &Path, joint: &Path) -> Result<String, CliError> {
    let k = read_doc::<KernelDoc>(kernel)?.to_kernel()?;
    let j = read_doc::<JointDoc>(joint)?.to_joint()?;
    let (px, py) = j.marginals();
    let h_x = entropy(&k, &px)?;
    let h_xy = conditional_entropy(&k, &j)?;
    let i_k = mutual_information(&k, &j)?;
    let per_y: Vec<Value> = conditional_entropies(&k, &j)?
        .into_iter()
        .enumerate()
        .map(|(y, h)| json!({ "y": y, "p_y": py.get(y), "H": h }))
        .collect();
    Ok(render(&json!({
        "H_X": h_x,
        "H_X_given_Y": h_xy,
        "I_K": i_k,
        "per_y": per_y,
    })))
}

pub fn markov_cmd(kernel: &Path, pmf: &Path, channel: &Path, realize: Option<usize>) -> Result<String, CliError> {
    let k = read_doc::<KernelDoc>(kernel)?.to_kernel()?;
    let p = read_doc::<PmfDoc>(pmf)?.to_pmf()?;
    let ch = read_doc::<ChannelDoc>(channel)?.to_channel()?;
    let rep = markov_dpi_report(&k, &p, &ch)?;
    if !rep.holds {
        return Err(CliError::invariant(format!(
            "Markov coarse-graining inequality failed: H_out = {} > H_in = {}",
            rep.h_out, rep.h_in
        )));
    }
    let mut out = json!({
        "K_Y": kernel_json(KernelDoc::from_kernel(&rep.kernel_y)),
        "p_Y": serde_json::to_value(PmfDoc::from_pmf(&rep.output)).expect("pmf documents serialize"),
        "H_in": rep.h_in,
        "H_out": rep.h_out,
        "holds": rep.holds,
    });
    if let Some(r) = realize {
        let check = realization_check(&k, &p, &ch, r)?;
        if !check.equal {
            return Err(CliError::invariant(format!(
                "realized kernel differs from the output kernel by {:e}",
                check.max_abs_diff
            )));
        }
        if (check.h_lifted - rep.h_in).abs() > ENTROPY_SLACK {
            return Err(CliError::invariant(format!(
                "lifting changed the entropy: {} vs {}",
                check.h_lifted, rep.h_in
            )));
        }
        out["realization_check"] = json!({
            "resolution": check.resolution,
            "equal": check.equal,
            "max_abs_diff": check.max_abs_diff,
            "H_lifted": check.h_lifted,
            "realized_K_Y": kernel_json(KernelDoc::from_kernel(&check.realized_kernel)),
        });
    }
    Ok(render(&out))
}

/// `%.12g`-style formatting.
pub fn format_g(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn approx_cmd(spec: &str, ns: &[usize], q: Option<usize>) -> Result<String, CliError> {
    let kernel = KernelFunction::from_spec(spec)?;
    let rows = convergence_table(&kernel, ns, q.unwrap_or(DEFAULT_BLOCK_QUADRATURE))?;
    let mut out = String::from("n\th_block\th_repaired\trepair_gap\trepair_bound\treference\n");
    for row in &rows {
        if row.h_block > row.reference + BOUND_SLACK {
            return Err(CliError::invariant(format!(
                "n = {}: block entropy {} exceeds the reference {}",
                row.n, row.h_block, row.reference
            )));
        }
        if row.repair_gap < -BOUND_SLACK || row.repair_gap > row.repair_bound + BOUND_SLACK {
            return Err(CliError::invariant(format!(
                "n = {}: repair gap {} outside [0, {}]",
                row.n, row.repair_gap, row.repair_bound
            )));
        }
        let cells = [
            row.h_block,
            row.h_repaired,
            row.repair_gap,
            row.repair_bound,
            row.reference,
        ];
        let line: Vec<String> = std::iter::once(row.n.to_string())
            .chain(cells.iter().map(|&v| format_g(v, 12)))
            .collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

/// A built-in model named on the command line.
pub enum Model {
    Gauss(GaussLocation),
    Reveal(FiniteReveal),
}

impl Model {
    /// Parses `gauss-location[:mu0,sigma0,ell[,n_obs]]` or `finite-reveal[:k]`.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = args
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::schema(format!("bad model parameter {s:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        let whole = |v: f64, what: &str| -> Result<usize, CliError> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::schema(format!("{what} must be a positive integer, got {v}")))
            }
        };
        match name {
            "gauss-location" => {
                let m = match nums.as_slice() {
                    [] => GaussLocation::new(0.0, 1.0, 0.5, 1)?,
                    [mu0, s0, ell] => GaussLocation::new(*mu0, *s0, *ell, 1)?,
                    [mu0, s0, ell, n] => GaussLocation::new(*mu0, *s0, *ell, whole(*n, "n_obs")?)?,
                    _ => {
                        return Err(CliError::schema(
                            "expected gauss-location:<mu0>,<sigma0>,<ell>[,<n_obs>]",
                        ))
                    }
                };
                Ok(Model::Gauss(m))
            }
            "finite-reveal" => {
                let m = match nums.as_slice() {
                    [] => FiniteReveal::new(4)?,
                    [k] => FiniteReveal::new(whole(*k, "k")?)?,
                    _ => return Err(CliError::schema("expected finite-reveal:<k>")),
                };
                Ok(Model::Reveal(m))
            }
            other => Err(CliError::new(
                ExitCode::UnknownModel,
                format!("unknown model {other:?} (known: gauss-location, finite-reveal)"),
            )),
        }
    }
}

pub struct DesignArgs<'a> {
    pub model: &'a str,
    pub designs: &'a [f64],
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    pub ridge: f64,
    pub per_dataset: bool,
}

fn ranking_json<B: BayesModel<Design = f64>>(model: &B, args: &DesignArgs<'_>) -> Result<(f64, Vec<Value>), CliError> {
    let options = EstimatorOptions {
        ridge: args.ridge,
        subsample: None,
    };
    let ranked: Vec<DesignEstimate<f64>> =
        rank_designs(model, args.designs, args.outer, args.inner, args.seed, &options)?;
    let prior = ranked[0].prior_entropy;
    let rows = ranked
        .into_iter()
        .map(|e| {
            let mut row = json!({ "design": e.design, "U_hat": e.u_hat, "std_error": e.std_error });
            if args.per_dataset {
                row["per_dataset"] = json!(e.per_dataset);
            }
            row
        })
        .collect();
    Ok((prior, rows))
}

pub fn design_cmd(args: &DesignArgs<'_>) -> Result<String, CliError> {
    let model = Model::parse(args.model)?;
    if !(args.ridge >= 0.0 && args.ridge.is_finite()) {
        return Err(CliError::schema(format!(
            "ridge {} must be a finite nonnegative number",
            args.ridge
        )));
    }
    let (prior, ranking) = match &model {
        Model::Gauss(m) => ranking_json(m, args)?,
        Model::Reveal(m) => ranking_json(m, args)?,
    };
    Ok(render(&json!({
        "model": args.model,
        "outer": args.outer,
        "inner": args.inner,
        "seed": args.seed,
        "ridge": args.ridge,
        "prior_entropy": prior,
        "ranking": ranking,
    })))
}

pub fn invariants_cmd(kernel: &Path, pmf: &Path, tol: f64) -> Result<String, CliError> {
    let k = read_doc::<KernelDoc>(kernel)?.to_kernel()?;
    let p = read_doc::<PmfDoc>(pmf)?.to_pmf()?;
    let check = partition_necessary_condition(&k, &p, tol)?;
    let atoms = |list: &[kentropy::discrete::TypicalityAtom]| -> Vec<Value> {
        list.iter()
            .map(|a| json!({ "value": a.value, "mass": a.mass }))
            .collect()
    };
    Ok(render(&json!({
        "typicality_atoms": atoms(&check.atoms),
        "partition_necessary": check.holds,
        "violations": atoms(&check.violations),
    })))
}

/// Where the envelopes come from.
pub enum EnvelopeSource<'a> {
    Kernel(&'a Path),
    Metric { dist: &'a Path, delta: f64, alpha: f64 },
}

fn bounds_json(env: &EnvelopePair, nu_c: &kentropy::Pmf) -> Result<Value, CliError> {
    let gap = coarse_gap_bound(env, nu_c)?;
    let ratio = envelope_ratio_bound(env, nu_c)?;
    if gap > ratio.per_class + BOUND_SLACK || ratio.per_class > ratio.global + BOUND_SLACK || gap < -BOUND_SLACK {
        return Err(CliError::invariant(format!(
            "bound chain broken: gap {gap}, per-class {}, global {}",
            ratio.per_class, ratio.global
        )));
    }
    Ok(json!({
        "K_max": kernel_json(KernelDoc::from_kernel(&env.k_max)),
        "K_min": kernel_json(KernelDoc::from_symmetric(&env.k_min)),
        "gap_bound": gap,
        "ratio_bounds": {
            "per_class": ratio.per_class,
            "global": ratio.global,
            "class_log_sup": ratio.class_log_sup,
        },
    }))
}

pub fn envelopes_cmd(source: EnvelopeSource<'_>, map: &Path, coarse_pmf: &Path) -> Result<String, CliError> {
    let f = read_doc::<MapDoc>(map)?.to_map()?;
    let nu_c = read_doc::<PmfDoc>(coarse_pmf)?.to_pmf()?;
    let out = match source {
        EnvelopeSource::Kernel(path) => {
            let k = read_doc::<KernelDoc>(path)?.to_kernel()?;
            bounds_json(&envelope_kernels(&k, &f)?, &nu_c)?
        }
        EnvelopeSource::Metric { dist, delta, alpha } => {
            let d = read_doc::<DistDoc>(dist)?.to_dist()?;
            let me = metric_envelopes(&d, &f, delta, alpha)?;
            let mut out = bounds_json(&me.env, &nu_c)?;
            let m = me.stats.m;
            let square = |v: &[f64]| -> Vec<Vec<f64>> { v.chunks(m).map(<[f64]>::to_vec).collect() };
            out["metric"] = json!({
                "diam": me.stats.diam,
                "d_min": square(&me.stats.d_min),
                "d_max": square(&me.stats.d_max),
                "rho": me.rho.iter().map(|r| json!({
                    "c": r.c,
                    "c2": r.c2,
                    "exact": r.exact,
                    "alpha_le_one": r.alpha_le_one,
                    "alpha_ge_one": r.alpha_ge_one,
                })).collect::<Vec<_>>(),
            });
            out
        }
    };
    Ok(render(&out))
}
