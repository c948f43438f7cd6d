//! One function per subcommand, each returning the `result` object.

use polybias::algebra::{Budget, DomainSpec};
use polybias::geometry::{bezout_rough_bound_check, fiber_points, jacobian_smoothness, tau_sequence};
use polybias::harmonic::{bias, fourier_check, gowers_average, nu_table, poly_bias, value_histogram};
use polybias::nullstellensatz::{ideal_membership, nullstellensatz_probe};
use polybias::padic::{mainp_probe, padic_bias, padic_uniformity, rational_singularity_check, PadicCharacter};
use polybias::poly::{MultiPoly, PolyCollection};
use polybias::rank::{collection_rank_bounds, derivative_enrichment_search, nc_rank_bounds, rank_bounds};
use polybias::universality::{
    affine_pullback_search, extend_weakly_polynomial, is_weakly_polynomial, star_a_dimension_compare, PullbackOutcome,
    Subspace,
};
use serde_json::{json, Value};

use crate::instance::Instance;
use crate::report::{bias_value, rank_estimate, rational, real};
use crate::{CliError, Command};

type Out = Result<Value, CliError>;

pub fn dispatch(cmd: &Command, inst: &Instance, budget: &Budget, seed: u64) -> Out {
    match cmd {
        Command::Bias { poly, collection, a } => bias_cmd(inst, poly, collection, a, budget),
        Command::Nu { collection, fourier } => nu_cmd(inst, collection, *fourier, budget),
        Command::Gowers { poly, m } => {
            let p = inst.poly(poly)?;
            let avg = gowers_average(p, *m, budget)?;
            Ok(json!({
                "poly": p.to_string(),
                "m": m,
                "average": real(avg),
                "norm": real(avg.powf(1.0 / (1u64 << m) as f64)),
            }))
        }
        Command::Rank {
            poly,
            collection,
            enrich_trials,
        } => rank_cmd(inst, poly, collection, *enrich_trials, budget, seed),
        Command::Ncrank { poly } => {
            let p = inst.poly(poly)?;
            Ok(json!({ "poly": p.to_string(), "nc_rank": rank_estimate(&nc_rank_bounds(p, budget)?) }))
        }
        Command::Tau { collection, t, levels } => {
            let c = inst.collection(collection)?;
            let t = fiber_value(inst, &c, t)?;
            let tau = tau_sequence(&c, &t, *levels, budget)?;
            Ok(json!({
                "t": t,
                "base": tau.p,
                "dimension": tau.n - tau.c,
                "counts": tau.counts,
                "tau": tau.ratios.iter().map(rational).collect::<Vec<_>>(),
            }))
        }
        Command::Fibers { collection, t, sample } => fibers_cmd(inst, collection, t, *sample, budget),
        Command::Nullstellensatz {
            collection,
            probe,
            a,
            trials,
            extra_degree,
            member,
            degbound,
        } => {
            let c = inst.collection(collection)?;
            match (probe, member) {
                (true, None) => {
                    let r = nullstellensatz_probe(&c, *a, *trials, *extra_degree, budget, seed)?;
                    Ok(json!({
                        "a": r.a,
                        "degbound": r.degbound,
                        "zero_set_size": r.zero_set_size,
                        "monomials": r.monomials,
                        "kernel": r.kernel.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
                        "certified": r.certified,
                        "fraction_certified": r.fraction_certified,
                        "vacuous": r.vacuous,
                        "trials": r.trials,
                        "trials_certified": r.trials_certified,
                        "rank": r.rank.as_ref().map(rank_estimate),
                    }))
                }
                (false, Some(q)) => {
                    let q = inst.poly(q)?;
                    let bound = degbound.unwrap_or_else(|| q.degree().unwrap_or(0).max(c.max_degree()));
                    let cert = ideal_membership(q, &c, bound, budget)?;
                    Ok(json!({
                        "member": q.to_string(),
                        "degbound": bound,
                        "certified": cert.is_some(),
                        "cofactors": cert.map(|c| c.cofactors.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
                    }))
                }
                _ => Err(CliError::Input("give exactly one of --probe or --member".into())),
            }
        }
        Command::Padic { poly, s, character } => padic_cmd(inst, poly, *s, *character, budget),
        Command::Ratsing { poly, levels } => {
            let r = rational_singularity_check(inst.poly(poly)?, *levels, budget)?;
            Ok(json!({
                "p": r.p,
                "all_pass": r.all_pass,
                "levels": r.levels.iter().map(|l| json!({
                    "m": l.m,
                    "count": l.count,
                    "target": l.target,
                    "deviation": l.deviation.to_string(),
                    "passes": l.passes,
                })).collect::<Vec<_>>(),
            }))
        }
        Command::Pullback {
            poly,
            target,
            target_vars,
        } => pullback_cmd(inst, poly, target, *target_vars, budget, seed),
        Command::Weakpoly {
            table,
            collection,
            t,
            a,
            cap,
        } => weak_cmd(inst, table, collection, t, *a, *cap, budget),
        Command::Probe { polys, s } => {
            let batch = polys
                .split(',')
                .map(|n| inst.poly(n.trim()).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let r = mainp_probe(&batch, *s, budget)?;
            Ok(json!({
                "s": r.s,
                "entries": r.entries.iter().map(|e| json!({
                    "poly": e.poly.to_string(),
                    "rank_lower": real(e.rank_lower),
                    "max_normalized_bias": real(e.max_normalized_bias),
                    "degenerate": e.degenerate,
                    "low_characteristic": e.low_characteristic,
                })).collect::<Vec<_>>(),
                "frontier": r.frontier.iter().map(|(r, b)| json!([real(*r), real(*b)])).collect::<Vec<_>>(),
            }))
        }
    }
}

fn fiber_value(inst: &Instance, c: &PolyCollection, t: &Option<String>) -> Result<Vec<u32>, CliError> {
    let t = match t {
        Some(text) => inst.elements(text)?,
        None => vec![0; c.len()],
    };
    if t.len() != c.len() {
        return Err(CliError::Input(format!("--t needs {} values", c.len())));
    }
    Ok(t)
}

fn bias_cmd(inst: &Instance, poly: &Option<String>, collection: &Option<String>, a: &Option<String>, budget: &Budget) -> Out {
    match (poly, collection) {
        (Some(name), None) => {
            let p = inst.poly(name)?;
            let mut out = bias_value(&poly_bias(p, budget)?);
            out["poly"] = json!(p.to_string());
            Ok(out)
        }
        (None, Some(names)) => {
            let c = inst.collection(names)?;
            let a = match a {
                Some(text) => inst.elements(text)?,
                None => return Err(CliError::Input("--collection needs --a".into())),
            };
            if a.len() != c.len() {
                return Err(CliError::Input(format!("--a needs {} values", c.len())));
            }
            let h = value_histogram(&c, budget)?;
            let mut out = bias_value(&bias(&h, &a));
            out["a"] = json!(a);
            out["combination"] = json!(c.combination(&a).to_string());
            Ok(out)
        }
        _ => Err(CliError::Input("give exactly one of --poly or --collection".into())),
    }
}

fn nu_cmd(inst: &Instance, names: &str, fourier: bool, budget: &Budget) -> Out {
    let c = inst.collection(names)?;
    let dual = DomainSpec::new(c.ring().clone(), c.len());
    let table = |nu: &[num_rational::BigRational]| {
        nu.iter()
            .enumerate()
            .map(|(i, v)| json!({ "t": dual.point_at(i as u64), "nu": rational(v) }))
            .collect::<Vec<_>>()
    };
    if !fourier {
        let u = nu_table(&c, budget)?;
        return Ok(json!({
            "counts": u.histogram.counts(),
            "nu": table(&u.nu),
            "deviation": rational(&u.deviation),
            "best_s": u.best_s,
        }));
    }
    let f = fourier_check(&c, budget)?;
    Ok(json!({
        "counts": f.uniformity.histogram.counts(),
        "nu": table(&f.uniformity.nu),
        "deviation": rational(&f.uniformity.deviation),
        "best_s": f.uniformity.best_s,
        "fourier": {
            "max_discrepancy": f.max_discrepancy,
            "reconstruction_error": f.reconstruction_error,
            "reconstruction_exact": f.reconstruction_exact,
            "deviation_bound": f.deviation_bound,
            "max_nontrivial_bias": f.max_nontrivial_bias,
            "all_nontrivial_vanish": f.all_nontrivial_vanish,
            "lemma_s": f.lemma_s,
            "lemma_holds": f.lemma_holds,
        },
    }))
}

fn rank_cmd(
    inst: &Instance,
    poly: &Option<String>,
    collection: &Option<String>,
    enrich: Option<usize>,
    budget: &Budget,
    seed: u64,
) -> Out {
    match (poly, collection) {
        (Some(name), None) => {
            let p = inst.poly(name)?;
            Ok(json!({ "poly": p.to_string(), "rank": rank_estimate(&rank_bounds(p, budget)?) }))
        }
        (None, Some(names)) => {
            let c = inst.collection(names)?;
            let mut out = json!({ "rank": rank_estimate(&collection_rank_bounds(&c, budget)?) });
            if let Some(trials) = enrich {
                let e = derivative_enrichment_search(&c, trials, budget, seed)?;
                out["enrichment"] = json!({
                    "v": e.v,
                    "w": e.w,
                    "extended": e.extended.polys().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    "score": rank_estimate(&e.estimate),
                });
            }
            Ok(out)
        }
        _ => Err(CliError::Input("give exactly one of --poly or --collection".into())),
    }
}

fn fibers_cmd(inst: &Instance, names: &str, t: &Option<String>, sample: usize, budget: &Budget) -> Out {
    let c = inst.collection(names)?;
    if t.is_some() {
        let t = fiber_value(inst, &c, t)?;
        let f = fiber_points(&c, &t, budget, sample)?;
        let s = jacobian_smoothness(&c, &t, sample, budget)?;
        return Ok(json!({
            "t": t,
            "count": f.count,
            "sample": f.sample,
            "smoothness": {
                "inspected": s.inspected,
                "full_rank": s.full_rank,
                "deficient": s.deficient,
                "singular_points": s.singular_points,
            },
        }));
    }
    let r = bezout_rough_bound_check(&c, budget)?;
    Ok(json!({
        "bound": r.bound,
        "degree_product": r.degree_product,
        "fibers": r.fibers.iter().map(|f| json!({
            "t": f.t,
            "count": f.count,
            "margin": f.margin.to_string(),
            "tau1_within_d": f.tau1_within_d,
            "tau2_within_d": f.tau2_within_d,
        })).collect::<Vec<_>>(),
        "violations": r.violations,
    }))
}

fn padic_cmd(inst: &Instance, poly: &str, s: i64, character: Option<u32>, budget: &Budget) -> Out {
    let p = inst.poly(poly)?;
    let (prime, l) = match p.ring().spec() {
        polybias::algebra::RingSpec::PrimePower { p, l } => (*p, *l),
        _ => return Err(CliError::Input("padic needs a ring Z/p^l".into())),
    };
    if let Some(c) = character {
        let chi = PadicCharacter::new(prime, l, c);
        let mut out = bias_value(&padic_bias(p, &chi, budget)?);
        out["character"] = json!({ "c": chi.c, "depth": chi.depth });
        return Ok(out);
    }
    let r = padic_uniformity(p, s, budget)?;
    Ok(json!({
        "poly": p.to_string(),
        "s": r.s,
        "characters": r.characters.iter().map(|c| json!({
            "c": c.character.c,
            "depth": c.character.depth,
            "magnitude": c.magnitude,
            "is_zero": c.is_zero,
            "threshold": c.threshold,
            "below": c.below,
        })).collect::<Vec<_>>(),
        "nu": r.nu.iter().map(rational).collect::<Vec<_>>(),
        "deviation": rational(&r.deviation),
        "hypothesis_holds": r.hypothesis_holds,
        "conclusion_holds": r.conclusion_holds,
    }))
}

fn pullback_cmd(inst: &Instance, poly: &str, target: &str, target_vars: Option<usize>, budget: &Budget, seed: u64) -> Out {
    let p = inst.poly(poly)?;
    let q_full = inst.poly(target)?;
    let m = target_vars.unwrap_or_else(|| q_full.support().last().map_or(1, |&i| i + 1));
    let q: MultiPoly = q_full
        .restrict_vars(0..m)
        .ok_or_else(|| CliError::Input(format!("target uses variables beyond x{m}")))?;
    let outcome = affine_pullback_search(p, &q, budget, seed)?;
    Ok(match outcome {
        PullbackOutcome::Found { map, stage } => json!({
            "outcome": "found",
            "stage": format!("{stage:?}"),
            "source_vars": m,
            "matrix": (0..map.target_dim()).map(|i| map.a.row(i).to_vec()).collect::<Vec<_>>(),
            "translation": map.b,
            "images": map.images().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        }),
        PullbackOutcome::ProvenNonexistent => json!({ "outcome": "proven_nonexistent", "source_vars": m }),
        PullbackOutcome::NoneFound => json!({ "outcome": "none_found", "source_vars": m }),
    })
}

fn subspace(s: &Subspace) -> Value {
    json!({ "base": s.base, "directions": s.directions })
}

fn weak_cmd(
    inst: &Instance,
    table: &Option<String>,
    collection: &Option<String>,
    t: &Option<String>,
    a: usize,
    cap: usize,
    budget: &Budget,
) -> Out {
    match (table, collection) {
        (Some(name), None) => {
            let f = inst.table(name)?;
            let w = is_weakly_polynomial(f, a, cap, budget)?;
            let ext = extend_weakly_polynomial(f, a, budget)?;
            Ok(json!({
                "a": a,
                "points": f.len(),
                "weakly_polynomial": w.holds,
                "witness": w.witness.as_ref().map(subspace),
                "lines_checked": w.lines_checked,
                "planes_checked": w.planes_checked,
                "extension": ext.map(|g| g.to_string()),
            }))
        }
        (None, Some(names)) => {
            let c = inst.collection(names)?;
            let t = fiber_value(inst, &c, t)?;
            let r = star_a_dimension_compare(&c, &t, a, cap, budget)?;
            Ok(json!({
                "a": a,
                "t": t,
                "points": r.points,
                "subspace_cap": r.subspace_cap,
                "dim_global": r.dim_global,
                "dim_weak_upper": r.dim_weak_upper,
                "equal": r.equal,
                "gap": r.gap.iter().map(|g| g.values().to_vec()).collect::<Vec<_>>(),
                "admissibility": r.admissibility.map(|a| json!({ "e": a.e, "holds": a.holds })),
            }))
        }
        _ => Err(CliError::Input("give exactly one of --table or --collection".into())),
    }
}
