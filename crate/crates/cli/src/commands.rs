//! Command implementations. Each returns a JSON report and a process exit
//! code: 0 for success, 1 when the tested hypothesis is rejected.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use ramkit::attention::{build_attention, sample_dataset, synthesize_choice_rule, SamplingDesign};
use ramkit::constraints::RowKind;
use ramkit::domain::{GrandSet, MenuIndex, Preference};
use ramkit::estimation::{estimate_choice_rule, EstimatedChoice};
use ramkit::inference::{collection_test, confidence_set, specification_test, test_preference, Collection, InferenceOptions, TestResult};
use ramkit::revelation::{constraint_system, identified_set, DEFAULT_TOL, IDENTIFIED_SET_MAX_K};

use crate::bench::{bench_data, run_bench, DEFAULT_SIZES};
use crate::config::Settings;
use crate::io::{ingest_csv, write_dataset_file};
use crate::mc::{default_hypotheses, phi_grid, report_json, run_grid, write_long_csv, ExperimentGrid};

pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

fn ok(report: Value) -> Outcome {
    Outcome { report, exit_code: 0 }
}

fn pref_label(p: &Preference, grand: &GrandSet) -> String {
    p.display(grand)
}

struct Loaded {
    grand: GrandSet,
    est: EstimatedChoice,
}

fn load(settings: &Settings) -> Result<Loaded> {
    let path = PathBuf::from(settings.get("data").ok_or_else(|| anyhow!("missing --data"))?);
    let ing = ingest_csv(&path)?;
    let min_count: usize = settings.parsed_or("min_count", 1)?;
    let complete = MenuIndex::complete(ing.grand.size())?;
    let mode = settings.get("mode").unwrap_or("auto");
    let index = match mode {
        "complete" => Arc::new(complete),
        "limited" => Arc::new(ramkit::estimation::observed_index(&ing.dataset, min_count)?),
        "auto" if ing.index.len() == complete.len() => Arc::new(complete),
        "auto" => Arc::new(ramkit::estimation::observed_index(&ing.dataset, min_count)?),
        other => bail!("unknown mode `{other}` (expected complete or limited)"),
    };
    let est = estimate_choice_rule(&ing.dataset, index).context("estimating choice probabilities")?;
    Ok(Loaded { grand: ing.grand, est })
}

fn row_text(kind: RowKind, grand: &GrandSet) -> String {
    match kind {
        RowKind::Monotonicity { menu, sub, alt } => {
            let sub = if sub.len() == 1 { format!("{{{}}}", grand.format_menu(sub)) } else { grand.format_menu(sub) };
            format!("pi({}|{}) <= pi({}|{})", grand.label(alt), grand.format_menu(menu), grand.label(alt), sub)
        }
        RowKind::BinaryAttentive { menu, better, worse } => format!(
            "attentive at {}: {} preferred to {}",
            grand.format_menu(menu),
            grand.label(better),
            grand.label(worse)
        ),
    }
}

fn result_json(t: &TestResult, kinds: &[RowKind], grand: &GrandSet) -> Value {
    let worst: Vec<Value> = t
        .worst_rows(5)
        .into_iter()
        .filter(|&i| t.diagnostics.studentized[i] > f64::NEG_INFINITY)
        .map(|i| {
            json!({
                "row": i,
                "constraint": row_text(kinds[i], grand),
                "moment": t.diagnostics.moments[i],
                "sigma_hat": t.diagnostics.sigma_hat[i],
                "studentized": t.diagnostics.studentized[i],
            })
        })
        .collect();
    json!({
        "statistic": t.statistic,
        "critical_value": t.critical_value,
        "p_value": t.p_value,
        "reject": t.reject,
        "worst_rows": worst,
        "pilot_critical_value": t.diagnostics.pilot,
        "active_rows": t.diagnostics.active_rows.as_ref().map(Vec::len),
    })
}

fn options_json(opts: &InferenceOptions, phi: Option<f64>, est: &EstimatedChoice) -> Value {
    json!({
        "method": opts.method.name(),
        "alpha": opts.alpha,
        "draws": opts.draws,
        "beta": opts.beta(),
        "sigma_floor": opts.sigma_floor,
        "seed": opts.seed,
        "phi": phi,
        "n_total": est.n_total,
        "menus": est.index().len(),
        "mode": if est.index().is_complete() { "complete" } else { "limited" },
    })
}

pub fn cmd_simulate(settings: &Settings) -> Result<Outcome> {
    let k: usize = settings.parsed_or("k", 5)?;
    let grand = GrandSet::numbered(k)?;
    let pref = match settings.get("pref") {
        Some(_) => settings.preference(&grand)?,
        None => Preference::identity(k),
    };
    let index = Arc::new(MenuIndex::complete(k)?);
    let mu = build_attention(&settings.attention(k)?, index.clone())?;
    let mut pi = synthesize_choice_rule(&pref, &mu);
    let perturb: f64 = settings.parsed_or("perturb", 0.0)?;
    let seed: u64 = settings.parsed_or("seed", 0)?;
    if perturb > 0.0 {
        pi = crate::mc::perturb_rule(&pi, perturb, seed);
    }
    let design = match settings.parsed::<usize>("total")? {
        Some(total) => SamplingDesign::Random { menu_weights: vec![1.0; index.len()], total },
        None => SamplingDesign::Fixed { per_menu: settings.parsed_or("n", 400)? },
    };
    let data = sample_dataset(&pi, &design, seed)?;
    let out = PathBuf::from(settings.get("out").ok_or_else(|| anyhow!("missing --out"))?);
    write_dataset_file(&grand, &data, &out)?;
    let phi = settings.phi()?;
    let identified = if k <= IDENTIFIED_SET_MAX_K {
        let set = identified_set(&pi, phi, DEFAULT_TOL)?;
        Some(set.preferences.iter().map(|p| pref_label(p, &grand)).collect::<Vec<_>>())
    } else {
        None
    };
    Ok(ok(json!({
        "schema": "ramkit.simulate/1",
        "out": out.display().to_string(),
        "observations": data.len(),
        "preference": pref_label(&pref, &grand),
        "phi": phi,
        "identified_set": identified,
    })))
}

pub fn cmd_test(settings: &Settings) -> Result<Outcome> {
    let Loaded { grand, est } = load(settings)?;
    let pref = settings.preference(&grand)?;
    let phi = settings.phi()?;
    let opts = settings.inference_options()?;
    let r = constraint_system(&pref, est.index(), phi)?;
    let kinds: Vec<RowKind> = r.rows().iter().map(|r| r.kind()).collect();
    let t = test_preference(&est, &pref, phi, &opts)?;
    let mut report = json!({
        "schema": "ramkit.test/1",
        "preference": pref_label(&pref, &grand),
        "options": options_json(&opts, phi, &est),
    });
    merge(&mut report, result_json(&t, &kinds, &grand));
    Ok(Outcome { report, exit_code: i32::from(t.reject) })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn confset_json(cs: &ramkit::inference::ConfidenceSet, grand: &GrandSet) -> Value {
    let rows: Vec<Value> = cs
        .results
        .iter()
        .map(|(p, t)| {
            json!({
                "preference": pref_label(p, grand),
                "statistic": t.statistic,
                "critical_value": t.critical_value,
                "p_value": t.p_value,
                "in_set": !t.reject,
            })
        })
        .collect();
    json!({
        "members": cs.set.preferences.iter().map(|p| pref_label(p, grand)).collect::<Vec<_>>(),
        "size": cs.set.len(),
        "preferences": rows,
    })
}

pub fn cmd_confset(settings: &Settings) -> Result<Outcome> {
    let Loaded { grand, est } = load(settings)?;
    let phi = settings.phi()?;
    let opts = settings.inference_options()?;
    let cs = confidence_set(&est, phi, &opts)?;
    let mut report = json!({ "schema": "ramkit.confset/1", "options": options_json(&opts, phi, &est) });
    merge(&mut report, confset_json(&cs, &grand));
    Ok(ok(report))
}

pub fn cmd_spectest(settings: &Settings) -> Result<Outcome> {
    let Loaded { grand, est } = load(settings)?;
    let phi = settings.phi()?;
    let opts = settings.inference_options()?;
    let (reject, cs) = specification_test(&est, phi, &opts)?;
    let best = cs.results.iter().max_by(|a, b| a.1.p_value.total_cmp(&b.1.p_value));
    let report = json!({
        "schema": "ramkit.spectest/1",
        "reject": reject,
        "confidence_set_size": cs.set.len(),
        "largest_p_value": best.map(|(_, t)| t.p_value),
        "most_compatible": best.map(|(p, _)| pref_label(p, &grand)),
        "options": options_json(&opts, phi, &est),
    });
    Ok(Outcome { report, exit_code: i32::from(reject) })
}

pub fn cmd_collection(settings: &Settings) -> Result<Outcome> {
    let Loaded { grand, est } = load(settings)?;
    let phi = settings.phi()?;
    let opts = settings.inference_options()?;
    let collection = match (settings.get("prefers"), settings.get("collection")) {
        (Some(pair), None) => {
            let (a, b) = pair.split_once('>').ok_or_else(|| anyhow!("--set prefers expects `a>b`"))?;
            Collection::prefers(grand.id_of(a.trim())?, grand.id_of(b.trim())?)
        }
        (None, Some(list)) => Collection::List(
            list.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Preference::parse(s, &grand))
                .collect::<ramkit::Result<_>>()?,
        ),
        _ => bail!("give exactly one of `prefers` or `collection`"),
    };
    let res = collection_test(&est, &collection, phi, &opts)?;
    let report = json!({
        "schema": "ramkit.collection/1",
        "reject": res.reject,
        "members": res.results.len(),
        "not_rejected": res.results.iter().filter(|(_, t)| !t.reject).map(|(p, _)| pref_label(p, &grand)).collect::<Vec<_>>(),
        "options": options_json(&opts, phi, &est),
    });
    Ok(Outcome { report, exit_code: i32::from(res.reject) })
}

pub fn grid_from_settings(settings: &Settings) -> Result<ExperimentGrid> {
    let k: usize = settings.parsed_or("k", 5)?;
    let grand = GrandSet::numbered(k)?;
    let hypotheses = match settings.get("hypotheses") {
        Some(text) => text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(i, s)| Ok((format!("H{}", i + 1), Preference::parse(s, &grand)?)))
            .collect::<Result<Vec<_>>>()?,
        None if k == 5 => default_hypotheses(),
        None => bail!("`hypotheses` is required unless k = 5"),
    };
    let dgp_pref = match settings.get("pref") {
        Some(_) => settings.preference(&grand)?,
        None => Preference::identity(k),
    };
    Ok(ExperimentGrid {
        k,
        dgp_pref,
        attention: settings.attention(k)?,
        perturb: settings.parsed_or("perturb", 0.0)?,
        phis: settings.list("phis")?.unwrap_or_else(phi_grid),
        ns: settings.list("ns")?.unwrap_or_else(|| vec![50, 100, 200, 300, 400]),
        hypotheses,
        replications: settings.parsed_or("replications", 500)?,
        options: settings.inference_options()?,
    })
}

pub fn cmd_mc(settings: &Settings) -> Result<Outcome> {
    let grid = grid_from_settings(settings)?;
    let report = run_grid(&grid)?;
    let json = report_json(&report);
    match settings.get("out") {
        Some(out) => {
            let path = PathBuf::from(out);
            let file = std::fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
            write_long_csv(&report, file)?;
            let sidecar = path.with_extension("json");
            std::fs::write(&sidecar, serde_json::to_string_pretty(&json)?)?;
        }
        None => write_long_csv(&report, std::io::stdout().lock())?,
    }
    Ok(ok(json))
}

pub fn cmd_bench(settings: &Settings) -> Result<Outcome> {
    let k: usize = settings.parsed_or("k", 6)?;
    let total: usize = settings.parsed_or("total", 12_600)?;
    let sizes: Vec<usize> = settings.list("sizes")?.unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let opts = settings.inference_options()?;
    let est = bench_data(k, total, opts.seed)?;
    let rows = run_bench(&est, &sizes, &opts)?;
    Ok(ok(json!({
        "schema": "ramkit.bench/1",
        "k": k,
        "n_total": est.n_total,
        "draws": opts.draws,
        "method": opts.method.name(),
        "rows": rows.iter().map(|r| json!({"preferences": r.preferences, "seconds": r.seconds})).collect::<Vec<_>>(),
    })))
}
