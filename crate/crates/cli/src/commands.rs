use std::fmt::{self, Write};

use doflab_core::channel::DEFAULT_RANGE;
use doflab_core::region::{nontrivial_vertices, MAX_REGION_K, MAX_VERTEX_K};
use doflab_core::{
    assemble, build_region, format_rational, kuser_d1_scheme, outer_bound_sumdof, pdd_scheme, prop1_bounds,
    prop2_value, run_suite, sample_channel, sumdof, table1_report, validate_csit_compliance, vertices,
    zero_forcing_scheme, ChannelRealization, CsitConfig, LinearStrategy, RandomKind, Rational, RegionError,
    SchemeError, SchemeSpec, SuiteOptions,
};
use serde_json::json;

use crate::render::{approx, strings, tuple};
use crate::{Format, SchemeArg, Settings};

/// Replay trials for the compliance audit in `simulate`.
const AUDIT_TRIALS: usize = 3;
const VERIFY_TRIALS: usize = 100;
/// Block length for zero-forcing runs.
const ZF_SLOTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Mismatch(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Mismatch(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Verification(m) | Failure::Mismatch(m) => f.write_str(m),
        }
    }
}

/// A finished report. A nonzero `code` still prints `body`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub code: u8,
    pub dump: Option<serde_json::Value>,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, code: 0, dump: None, diagnostic: None }
    }
}

fn json_body(value: serde_json::Value) -> String {
    serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n"
}

fn region_failure(e: RegionError) -> Failure {
    Failure::Mismatch(format!("region computation failed: {e}"))
}

fn parse_csit(s: &Settings) -> Result<CsitConfig, Failure> {
    let text = s.csit.as_deref().ok_or_else(|| Failure::Usage("a CSIT string such as PDD is required".into()))?;
    text.parse().map_err(|_| Failure::Usage(format!("malformed CSIT string {text:?}: use the letters P, D, N")))
}

/// Known exact sum-DoF: one delayed receiver and no blind ones.
fn exact_note(config: &CsitConfig) -> Option<(Rational, String)> {
    let (np, nd, nn) = (config.p_set().len(), config.d_set().len(), config.n_set().len());
    (nd == 1 && nn == 0 && config.k() != 3).then(|| (prop2_value(np), "sum-DoF exact (|D| = 1)".to_string()))
}

pub fn region(s: &Settings) -> Result<Outcome, Failure> {
    let config = parse_csit(s)?;
    let k = config.k();
    let note = exact_note(&config);
    if k > MAX_REGION_K {
        let value = outer_bound_sumdof(&config).map_err(region_failure)?;
        let label = match &note {
            Some((_, n)) => format!("{}; {n}", doflab_core::region::region_label(k)),
            None => doflab_core::region::region_label(k).to_string(),
        };
        let body = match s.format {
            Format::Json => json_body(json!({
                "config": config.to_string(),
                "k": k,
                "label": label,
                "sumdof": format_rational(&value),
            })),
            Format::Csv => format!("config,k,sumdof\n{config},{k},{}\n", format_rational(&value)),
            Format::Text => format!(
                "config: {config} (k = {k})\nlabel: {label}\ninequalities: not listed above k = {MAX_REGION_K}\nsum-DoF: {}\n",
                approx(&value)
            ),
        };
        return check_note(body, &value, note);
    }
    let region = build_region(&config).map_err(region_failure)?;
    let value = sumdof(&region).map_err(region_failure)?;
    let (verts, nontrivial) = if k <= MAX_VERTEX_K {
        (Some(vertices(&region).map_err(region_failure)?), Some(nontrivial_vertices(&region).map_err(region_failure)?))
    } else {
        (None, None)
    };
    let label = match &note {
        Some((_, n)) => format!("{}; {n}", region.label()),
        None => region.label().to_string(),
    };
    let body = match s.format {
        Format::Json => json_body(json!({
            "config": config.to_string(),
            "k": k,
            "label": label,
            "inequalities": region.inequalities().iter().map(|q| json!({
                "family": q.family.name(),
                "coefficients": strings(&q.coefficients),
                "rhs": format_rational(&q.rhs),
                "text": q.to_string(),
            })).collect::<Vec<_>>(),
            "sumdof": format_rational(&value),
            "vertices": verts.as_ref().map(|v| v.iter().map(|p| strings(p)).collect::<Vec<_>>()),
            "nontrivialVertices": nontrivial.as_ref().map(|v| v.iter().map(|p| strings(p)).collect::<Vec<_>>()),
        })),
        Format::Csv => {
            let mut out = String::from("kind,family");
            for j in 1..=k {
                write!(out, ",d{j}").unwrap();
            }
            out.push_str(",rhs\n");
            for q in region.inequalities() {
                writeln!(out, "inequality,{},{},{}", q.family.name(), strings(&q.coefficients).join(","), q.rhs).unwrap();
            }
            for (kind, list) in [("vertex", &verts), ("nontrivial-vertex", &nontrivial)] {
                for p in list.iter().flatten() {
                    writeln!(out, "{kind},,{},", strings(p).join(",")).unwrap();
                }
            }
            writeln!(out, "sumdof,,{}{}", ",".repeat(k), value).unwrap();
            out
        }
        Format::Text => {
            let mut out = format!("config: {config} (k = {k})\nlabel: {label}\n");
            writeln!(out, "inequalities ({}):", region.inequalities().len()).unwrap();
            for q in region.inequalities() {
                writeln!(out, "  {q}").unwrap();
            }
            out.push_str("  dj <= 1, dj >= 0 for every j\n");
            writeln!(out, "sum-DoF: {}", approx(&value)).unwrap();
            match (&verts, &nontrivial) {
                (Some(v), Some(nt)) => {
                    writeln!(out, "vertices ({}):", v.len()).unwrap();
                    for p in v {
                        writeln!(out, "  {}", tuple(p)).unwrap();
                    }
                    writeln!(out, "non-trivial vertices ({}):", nt.len()).unwrap();
                    for p in nt {
                        writeln!(out, "  {}", tuple(p)).unwrap();
                    }
                }
                _ => writeln!(out, "vertices: not enumerated above k = {MAX_VERTEX_K}").unwrap(),
            }
            out
        }
    };
    check_note(body, &value, note)
}

fn check_note(body: String, value: &Rational, note: Option<(Rational, String)>) -> Result<Outcome, Failure> {
    match note {
        Some((exact, _)) if exact != *value => Ok(Outcome {
            body,
            code: 3,
            dump: None,
            diagnostic: Some(format!("sum-DoF {value} disagrees with the closed form {exact}")),
        }),
        _ => Ok(Outcome::ok(body)),
    }
}

pub fn table1(s: &Settings) -> Result<Outcome, Failure> {
    let rows = table1_report().map_err(region_failure)?;
    let body = match s.format {
        Format::Json => json_body(json!({
            "rows": rows.iter().map(|r| json!({
                "config": r.config.to_string(),
                "label": r.label,
                "sumdof": format_rational(&r.sumdof),
                "golden": format_rational(&r.golden),
                "matches": r.matches,
                "inequalities": r.inequalities.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "allMatch": rows.iter().all(|r| r.matches),
        })),
        Format::Csv => {
            let mut out = String::from("config,sumdof,golden,match\n");
            for r in &rows {
                writeln!(out, "{},{},{},{}", r.config, r.sumdof, r.golden, r.matches).unwrap();
            }
            out
        }
        Format::Text => {
            let mut out = format!("{:<6} {:<16} {:<8} {}\n", "config", "sum-DoF", "golden", "match");
            for r in &rows {
                writeln!(out, "{:<6} {:<16} {:<8} {}", r.config.to_string(), approx(&r.sumdof), r.golden.to_string(), if r.matches { "yes" } else { "NO" })
                    .unwrap();
            }
            out
        }
    };
    let bad: Vec<String> = rows.iter().filter(|r| !r.matches).map(|r| r.config.to_string()).collect();
    if bad.is_empty() {
        Ok(Outcome::ok(body))
    } else {
        Ok(Outcome { body, code: 3, dump: None, diagnostic: Some(format!("golden mismatch for {}", bad.join(", "))) })
    }
}

fn scheme_failure(e: SchemeError) -> Failure {
    match e {
        SchemeError::InvalidParameters(m) => Failure::Usage(m),
        other => Failure::Verification(other.to_string()),
    }
}

/// Sampled channels stand in for a continuous distribution; reports say so.
fn channel_note(range: u64) -> String {
    format!("uniform integers in [-{range}, {range}] (stand-in for a continuous distribution)")
}

type Generator = Box<dyn Fn(&ChannelRealization) -> Result<LinearStrategy, SchemeError>>;

pub fn simulate(scheme: SchemeArg, s: &Settings) -> Result<Outcome, Failure> {
    let (config, k, n, generator): (CsitConfig, usize, usize, Generator) = match scheme {
        SchemeArg::Pdd => {
            let spec = SchemeSpec::pdd();
            if s.csit.as_deref().is_some_and(|c| c != "PDD") {
                return Err(Failure::Usage("the pdd scheme runs on PDD only".into()));
            }
            (spec.config, 3, spec.n, Box::new(pdd_scheme))
        }
        SchemeArg::KuserD1 => {
            let k = s.k.ok_or_else(|| Failure::Usage("kuser-d1 needs --K".into()))?;
            let spec = SchemeSpec::kuser_d1(k).map_err(scheme_failure)?;
            (spec.config, k, spec.n, Box::new(kuser_d1_scheme))
        }
        SchemeArg::Zf => {
            let config = parse_csit(s)?;
            if config.p_set().is_empty() {
                return Err(Failure::Usage("zero-forcing needs at least one P receiver".into()));
            }
            let gen_config = config.clone();
            (config.clone(), config.k(), ZF_SLOTS, Box::new(move |r: &ChannelRealization| zero_forcing_scheme(&gen_config, r)))
        }
    };
    let trials = s.trials.unwrap_or(AUDIT_TRIALS);
    let realization =
        sample_channel(k, k, n, s.seed, DEFAULT_RANGE).map_err(|e| Failure::Verification(e.to_string()))?;
    let strategy = generator(&realization).map_err(scheme_failure)?;
    let transcript = assemble(&strategy, &realization).map_err(|e| Failure::Verification(e.to_string()))?;
    let decodable = transcript.decodable();
    let dof = transcript.dof();
    let sum: Rational = dof.iter().sum();
    let compliant = validate_csit_compliance(&generator, &config, &realization, s.seed, trials)
        .map_err(|e| Failure::Verification(format!("compliance audit failed to run: {e}")))?;
    let inside = if k <= MAX_REGION_K {
        Some(build_region(&config).map_err(region_failure)?.contains(&dof))
    } else {
        None
    };

    let name = match scheme {
        SchemeArg::Zf => "zf",
        SchemeArg::Pdd => "pdd",
        SchemeArg::KuserD1 => "kuser-d1",
    };
    let counts = strategy.symbol_counts();
    let body = match s.format {
        Format::Json => json_body(json!({
            "scheme": name,
            "config": config.to_string(),
            "seed": s.seed,
            "channel": channel_note(DEFAULT_RANGE),
            "n": n,
            "symbolCounts": counts,
            "decodable": decodable,
            "dof": strings(&dof),
            "sum": format_rational(&sum),
            "compliant": compliant,
            "auditTrials": trials,
            "insideRegion": inside,
        })),
        Format::Csv => {
            let mut out = String::from("receiver,state,symbols,dof\n");
            for (j, (state, (c, d))) in config.states().iter().zip(counts.iter().zip(&dof)).enumerate() {
                writeln!(out, "{},{},{c},{d}", j + 1, state.as_char()).unwrap();
            }
            out
        }
        Format::Text => {
            let mut out = format!("scheme: {name}\nconfig: {config}\nseed: {}\n", s.seed);
            writeln!(out, "channel: {}", channel_note(DEFAULT_RANGE)).unwrap();
            writeln!(out, "block length n = {n}, symbols {}", tuple(&counts.iter().map(|&c| Rational::from_integer(c.into())).collect::<Vec<_>>())).unwrap();
            writeln!(out, "decodable: {decodable}, dof = {}, sum = {sum}", tuple(&dof)).unwrap();
            writeln!(out, "csit compliance: {} ({trials} replay trials)", if compliant { "pass" } else { "FAIL" }).unwrap();
            if let Some(inside) = inside {
                writeln!(out, "inside outer bound: {inside}").unwrap();
            }
            out
        }
    };
    let mut problems = Vec::new();
    if !decodable {
        let failing: Vec<String> = transcript
            .check_decodability()
            .iter()
            .filter(|r| !r.achieved)
            .map(|r| format!("receiver {}: rank {} of {} needed", r.receiver + 1, r.own_rank, r.symbols))
            .collect();
        problems.push(format!("not decodable ({})", failing.join("; ")));
    }
    if !compliant {
        problems.push("precoders depend on channel state the transmitter cannot see".into());
    }
    if inside == Some(false) {
        problems.push("achieved DoF lies outside the outer bound".into());
    }
    let mut dump = transcript.to_json(true);
    dump["compliant"] = json!(compliant);
    Ok(Outcome {
        body,
        code: if problems.is_empty() { 0 } else { 2 },
        dump: Some(dump),
        diagnostic: (!problems.is_empty()).then(|| problems.join("\n")),
    })
}

pub fn verify(s: &Settings) -> Result<Outcome, Failure> {
    let config = parse_csit(s)?;
    let mut options = SuiteOptions::new(s.trials.unwrap_or(VERIFY_TRIALS), s.seed);
    if !s.kinds.is_empty() {
        options.kinds = s
            .kinds
            .iter()
            .map(|k| k.parse::<RandomKind>().map_err(|e| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    let report = run_suite(&config, &options).map_err(|e| Failure::Verification(e.to_string()))?;
    let violations = report.violation_count();
    let slack = |q: &Option<Rational>| q.as_ref().map_or_else(|| "-".to_string(), format_rational);
    let body = match s.format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["violationCount"] = json!(violations);
            v["channel"] = json!(channel_note(options.range));
            json_body(v)
        }
        Format::Csv => {
            let mut out = String::from("lemma,kind,trials,checks,passes,min_slack,violations\n");
            for e in &report.entries {
                writeln!(out, "{},{},{},{},{},{},{}", e.lemma, e.kind, e.trials, e.checks, e.passes, slack(&e.min_slack), e.violations.len())
                    .unwrap();
            }
            out
        }
        Format::Text => {
            let mut out = format!("config: {}  trials: {}  seed: {}\n", report.config, report.trials, report.seed);
            writeln!(out, "channel: {}", channel_note(options.range)).unwrap();
            writeln!(out, "{:<26} {:<20} {:>7} {:>7} {:>10} {:>10}", "lemma", "kind", "checks", "passes", "min-slack", "violations")
                .unwrap();
            for e in &report.entries {
                writeln!(
                    out,
                    "{:<26} {:<20} {:>7} {:>7} {:>10} {:>10}",
                    e.lemma.name(),
                    e.kind.name(),
                    e.checks,
                    e.passes,
                    slack(&e.min_slack),
                    e.violations.len()
                )
                .unwrap();
            }
            if !report.skipped.is_empty() {
                let names: Vec<&str> = report.skipped.iter().map(|l| l.name()).collect();
                writeln!(out, "skipped (hypotheses never met): {}", names.join(", ")).unwrap();
            }
            writeln!(out, "violations: {violations}").unwrap();
            out
        }
    };
    let dump: Vec<_> = report.entries.iter().flat_map(|e| e.violations.iter()).collect();
    Ok(Outcome {
        body,
        code: if violations == 0 { 0 } else { 2 },
        dump: Some(serde_json::to_value(dump).expect("violations serialize")),
        diagnostic: (violations > 0).then(|| format!("{violations} violations")),
    })
}

pub fn bounds(s: &Settings) -> Result<Outcome, Failure> {
    let (p, d) = (s.p.unwrap_or(0), s.d.unwrap_or(0));
    if p + d == 0 {
        let note = "0 active receivers: sum-DoF is 0";
        let body = match s.format {
            Format::Json => json_body(json!({ "P": 0, "D": 0, "sumdof": "0", "note": note })),
            Format::Csv => "P,D,sumdof,note\n0,0,0,0 active receivers\n".to_string(),
            Format::Text => format!("{note}\n"),
        };
        return Ok(Outcome::ok(body));
    }
    let config = CsitConfig::ordered(p, d, 0);
    let lp = if p + d <= MAX_REGION_K {
        Some(sumdof(&build_region(&config).map_err(region_failure)?).map_err(region_failure)?)
    } else {
        None
    };
    match prop1_bounds(p, d) {
        Ok(b) => {
            let half = Rational::new(1.into(), 2.into());
            let gap_ok = b.gap <= half;
            let consistent = lp.as_ref().is_none_or(|v| {
                b.lower <= *v && *v <= b.upper && b.exact.as_ref().is_none_or(|e| e == v)
            });
            let body = match s.format {
                Format::Json => json_body(json!({
                    "P": p,
                    "D": d,
                    "lower": format_rational(&b.lower),
                    "upper": format_rational(&b.upper),
                    "gap": format_rational(&b.gap),
                    "gapAtMostHalf": gap_ok,
                    "exact": b.exact.as_ref().map(format_rational),
                    "lp": lp.as_ref().map(format_rational),
                    "consistent": consistent,
                })),
                Format::Csv => format!(
                    "P,D,lower,upper,gap,exact,lp\n{p},{d},{},{},{},{},{}\n",
                    b.lower,
                    b.upper,
                    b.gap,
                    b.exact.as_ref().map(format_rational).unwrap_or_default(),
                    lp.as_ref().map(format_rational).unwrap_or_default()
                ),
                Format::Text => {
                    let mut out = format!("|P| = {p}, |D| = {d}\n");
                    if let Some(e) = &b.exact {
                        writeln!(out, "exact {}", approx(e)).unwrap();
                    }
                    writeln!(out, "lower {}", approx(&b.lower)).unwrap();
                    writeln!(out, "upper {}", approx(&b.upper)).unwrap();
                    writeln!(out, "gap {} <= 1/2: {gap_ok}", approx(&b.gap)).unwrap();
                    match &lp {
                        Some(v) => writeln!(out, "LP sum-DoF {} ({})", approx(v), if consistent { "consistent" } else { "INCONSISTENT" }).unwrap(),
                        None => writeln!(out, "LP cross-check skipped above |P| + |D| = {MAX_REGION_K}").unwrap(),
                    }
                    out
                }
            };
            if consistent && gap_ok {
                Ok(Outcome::ok(body))
            } else {
                Ok(Outcome { body, code: 3, dump: None, diagnostic: Some("closed-form bounds disagree with the LP".into()) })
            }
        }
        Err(RegionError::Regime(msg)) => {
            let value = match lp {
                Some(v) => v,
                None => outer_bound_sumdof(&config).map_err(region_failure)?,
            };
            let note = format!("closed-form bounds do not apply ({msg})");
            let body = match s.format {
                Format::Json => json_body(json!({ "P": p, "D": d, "lp": format_rational(&value), "note": note })),
                Format::Csv => format!("P,D,lp,note\n{p},{d},{value},regime\n"),
                Format::Text => format!("|P| = {p}, |D| = {d}\n{note}\nLP sum-DoF {}\n", approx(&value)),
            };
            Ok(Outcome::ok(body))
        }
        Err(e) => Err(region_failure(e)),
    }
}
