use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use contlog::automata::{self, AutomatonSpec, MarginReport};
use contlog::degree::{self, DegreeError, DegreeMode, DegreeReport};
use contlog::evaluator::{EvalError, EvalOptions, Evaluator};
use contlog::formula::Formula;
use contlog::groups::{self, Equivalence, Verdict};
use contlog::interp::{self, InterpError, ReductionOutcome, Scheme};
use contlog::model::io::model_from_json;
use contlog::model::{EqStructure, Model};
use contlog::numeric::rational::{fmt_rational, parse_rational};
use contlog::numeric::{IntervalReport, Rational};
use contlog::parser;

use crate::{
    AutomatonArgs, AutomatonMode, DegreeArgs, DegreeModeArg, EqcheckArgs, EvalArgs, EvalMode, InterpretArgs,
    MfcheckArgs, ParseArgs,
};

pub const BUDGET_ENV: &str = "CONTLOG_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(clap::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }
}

pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub code: u8,
}

/// Input files read during a run, with their SHA-256 digests.
#[derive(Default)]
pub struct Context {
    pub inputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Context {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
    }

    fn formula(&mut self, path: &Path) -> Result<Formula, CliError> {
        let text = self.read(path)?;
        parser::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn model(&mut self, path: &Path) -> Result<Model, CliError> {
        let text = self.read(path)?;
        model_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn rational(flag: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s.trim()).map_err(|e| CliError::Input(format!("--{flag}: {e}")))
}

/// Explicit flag, then the environment, then the command's default.
fn budget(flag: Option<u64>, default: u64) -> Result<u64, CliError> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Input(format!("{BUDGET_ENV}={s:?} is not a count"))),
        Err(_) => Ok(default),
    }
}

fn outcome(report: Value, summary: String, code: u8) -> Result<Outcome, CliError> {
    Ok(Outcome { report, summary, code })
}

fn ivl(iv: &contlog::numeric::RatInterval) -> Value {
    serde_json::to_value(IntervalReport::from(iv)).expect("serializable")
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Budget { .. } => CliError::Internal(format!("unexpected budget error: {e}")),
        other => CliError::Input(other.to_string()),
    }
}

pub fn parse(ctx: &mut Context, a: &ParseArgs) -> Result<Outcome, CliError> {
    let f = ctx.formula(&a.formula)?;
    let canonical = parser::print(&f);
    if parser::parse(&canonical).ok().as_ref() != Some(&f) {
        return Err(CliError::Internal("canonical form does not parse back to the same formula".into()));
    }
    let range = f.range().map_err(|e| CliError::Input(e.to_string()))?;
    let free: Vec<String> = f.free_vars().into_iter().map(|(v, _)| v).collect();
    let report = json!({
        "command": "parse",
        "canonical": canonical,
        "free_variables": free,
        "range": ivl(&range),
    });
    outcome(report, format!("ok: {canonical}"), 0)
}

pub fn eval(ctx: &mut Context, a: &EvalArgs) -> Result<Outcome, CliError> {
    let model = ctx.model(&a.model)?;
    let f = ctx.formula(&a.formula)?;
    let eps = rational("eps", &a.eps)?;
    let mode = match a.mode {
        EvalMode::Certified => "certified",
        EvalMode::Heuristic => "heuristic",
    };
    let result = match a.mode {
        EvalMode::Certified => {
            let options = EvalOptions { budget: budget(a.budget, EvalOptions::default().budget)?, ..Default::default() };
            Evaluator::with_options(&model, options).certified(&f, &eps)
        }
        EvalMode::Heuristic => Evaluator::new(&model).heuristic(&f, budget(a.budget, 20_000)?, a.seed),
    };
    match result {
        Ok(r) => {
            let report = json!({
                "command": "eval",
                "mode": mode,
                "eps": fmt_rational(&eps),
                "interval": ivl(&r.interval),
                "width": fmt_rational(&r.interval.width()),
                "cost": r.cost,
                "witnesses": r.witnesses,
            });
            outcome(report, format!("{mode} value in {}", r.interval), 0)
        }
        Err(EvalError::Budget { best, boxes, estimate_log10 }) => {
            let report = json!({
                "command": "eval",
                "mode": mode,
                "eps": fmt_rational(&eps),
                "status": "budget-exhausted",
                "best": ivl(&best),
                "cost": boxes,
                "uniform_net_log10": format!("{estimate_log10:.1}"),
            });
            outcome(report, format!("budget exhausted after {boxes} boxes; best enclosure {best}"), 1)
        }
        Err(e) => Err(eval_error(e)),
    }
}

fn degree_error(e: DegreeError) -> CliError {
    match e {
        DegreeError::Eval(inner) => eval_error(inner),
        other => CliError::Input(other.to_string()),
    }
}

pub fn degree(ctx: &mut Context, a: &DegreeArgs) -> Result<Outcome, CliError> {
    let f = ctx.formula(&a.formula)?;
    let eps = rational("eps", &a.eps)?;
    let steps = budget(a.budget, degree::default_budget())?;
    match a.mode {
        DegreeModeArg::Certified => {
            let r = match degree::degree_ndim(&f, a.dim, a.ops, &eps, DegreeMode::Certified, steps) {
                Ok(r) => r,
                Err(DegreeError::CostGate { params, limit }) => {
                    let report = json!({
                        "command": "degree",
                        "mode": "certified",
                        "status": "cost-gate",
                        "parameters": params,
                        "limit": limit,
                    });
                    let msg = format!("{params} parameters exceed the certified limit {limit}; try --mode lower-profile");
                    return outcome(report, msg, 1);
                }
                Err(e) => return Err(degree_error(e)),
            };
            let report = json!({
                "command": "degree",
                "mode": "certified",
                "dim": a.dim,
                "ops": a.ops,
                "eps": fmt_rational(&eps),
                "result": DegreeReport::from(&r),
            });
            let summary = if r.success {
                format!("degree in {} (width {})", r.interval, fmt_rational(&r.interval.width()))
            } else {
                format!("budget exhausted after {} steps; degree in {}", r.steps, r.interval)
            };
            outcome(report, summary, if r.success { 0 } else { 1 })
        }
        DegreeModeArg::LowerProfile => {
            let n_max = a.maxdim.unwrap_or(a.dim);
            let profile = degree::degree_fd_lower(&f, n_max, &eps, steps).map_err(degree_error)?;
            let mut summary = String::from("dim  lower  cumulative\n");
            for p in &profile {
                let _ = writeln!(summary, "{:>3}  {}  {}", p.dim, p.lower, p.cumulative);
            }
            let report = json!({
                "command": "degree",
                "mode": "lower-profile",
                "ops": a.ops,
                "eps": fmt_rational(&eps),
                "profile": profile,
            });
            outcome(report, summary.trim_end().to_string(), 0)
        }
    }
}

fn parse_word(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Input(format!("--word: bad letter {t:?}"))))
        .collect()
}

pub fn automaton(ctx: &mut Context, a: &AutomatonArgs) -> Result<Outcome, CliError> {
    let model = ctx.model(&a.model)?;
    let proj = automata::parse_projection(&a.proj).map_err(|e| CliError::Input(e.to_string()))?;
    if proj.len() != model.dim {
        return Err(CliError::Input(format!("projection has {} entries, model dimension is {}", proj.len(), model.dim)));
    }
    let lambda = rational("lambda", &a.lambda)?;
    let spec = AutomatonSpec::from_model(&model, proj, lambda.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    match a.mode {
        AutomatonMode::Acc => {
            let word = parse_word(a.word.as_deref().ok_or_else(|| CliError::Input("--mode acc needs --word".into()))?)?;
            let v = automata::acc(&spec, &word).map_err(|e| CliError::Input(e.to_string()))?;
            let report = json!({
                "command": "automaton",
                "mode": "acc",
                "word": word,
                "acc": v.to_string(),
                "acc_decimal": v.to_f64(),
                "above_lambda": v.cmp_rational(&lambda) == std::cmp::Ordering::Greater,
            });
            outcome(report, format!("ACC{word:?} = {v} ≈ {:.9}", v.to_f64()), 0)
        }
        AutomatonMode::Search => {
            let r = automata::exists_accepted(&spec, a.maxlen);
            let code = if r.word.is_some() { 0 } else { 1 };
            let report = json!({ "command": "automaton", "mode": "search", "lambda": fmt_rational(&lambda), "result": r });
            outcome(report, r.to_string(), code)
        }
        AutomatonMode::Margin => {
            let m = automata::isolation_margin(&spec, a.maxlen);
            let r = MarginReport::from(&m);
            let summary = format!("margin {} ≈ {:.9} at word {:?} (lengths ≤ {})", r.margin, r.margin_decimal, r.argmin, a.maxlen);
            let report = json!({ "command": "automaton", "mode": "margin", "lambda": fmt_rational(&lambda), "result": r });
            outcome(report, summary, 0)
        }
    }
}

pub fn mfcheck(ctx: &mut Context, a: &MfcheckArgs) -> Result<Outcome, CliError> {
    let inst_text = ctx.read(&a.instance)?;
    let inst = groups::instance_from_json(&inst_text).map_err(|e| CliError::Input(format!("{}: {e}", a.instance.display())))?;
    let gamma_text = ctx.read(&a.gamma)?;
    let gamma =
        groups::gamma_from_json(&gamma_text, &inst).map_err(|e| CliError::Input(format!("{}: {e}", a.gamma.display())))?;
    let eps = rational("eps", &a.eps)?;
    let prec = rational("prec", &a.prec)?;
    let r = groups::check_approximation(&inst, &gamma, &eps, &prec).map_err(|e| CliError::Input(e.to_string()))?;
    let fails = r.conditions.iter().filter(|c| c.verdict == Verdict::Fail).count();
    let undecided = r.conditions.iter().filter(|c| c.verdict == Verdict::Undecided).count();
    let summary = format!(
        "{:?}: {} conditions, {fails} failed, {undecided} undecided",
        r.overall,
        r.conditions.len()
    );
    let code = if r.overall == Verdict::Pass { 0 } else { 1 };
    let report = json!({ "command": "mfcheck", "eps": fmt_rational(&eps), "report": r });
    outcome(report, summary, code)
}

pub fn eqcheck(ctx: &mut Context, a: &EqcheckArgs) -> Result<Outcome, CliError> {
    let load = |ctx: &mut Context, p: &Path| -> Result<_, CliError> {
        let text = ctx.read(p)?;
        groups::single_matrix_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    };
    let u = load(ctx, &a.a)?;
    let v = load(ctx, &a.b)?;
    let eps = rational("eps", &a.eps)?;
    let verdict = groups::henson_equiv(&u, &v, &eps).map_err(|e| CliError::Input(e.to_string()))?;
    let code = if verdict == Equivalence::Undecided { 1 } else { 0 };
    let report = json!({ "command": "eqcheck", "verdict": verdict });
    outcome(report, verdict.to_string(), code)
}

fn interp_error(e: InterpError) -> CliError {
    match e {
        InterpError::Eval(EvalError::Budget { .. }) => CliError::Internal(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn strip_comments(text: &str) -> String {
    text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n")
}

pub fn interpret(ctx: &mut Context, a: &InterpretArgs) -> Result<Outcome, CliError> {
    let scheme: Scheme = a.scheme.parse().map_err(CliError::Input)?;
    let tol = a.tol.as_deref().map(|t| rational("tol", t)).transpose()?;
    if a.battery {
        let r = interp::run_battery(scheme, a.maxsize, tol).map_err(interp_error)?;
        let mut by_size: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for row in &r.rows {
            let size = EqStructure::from_json(&row.structure).map(|s| s.size).unwrap_or(0);
            let e = by_size.entry(size).or_default();
            e.0 += 1;
            if !(row.agree && row.dichotomy) {
                e.1 += 1;
            }
        }
        let mut summary = format!("scheme {}: {} pairs, {} failures\nsize  pairs  pass  fail\n", a.scheme, r.pairs, r.failures);
        for (size, (n, f)) in &by_size {
            let _ = writeln!(summary, "{size:>4}  {n:>5}  {:>4}  {f:>4}", n - f);
        }
        let code = if r.failures == 0 { 0 } else { 3 };
        let report = json!({ "command": "interpret", "battery": r });
        return outcome(report, summary.trim_end().to_string(), code);
    }
    let (sp, tp) = (a.structure.as_ref().expect("required by clap"), a.sentence.as_ref().expect("required by clap"));
    let stext = ctx.read(sp)?;
    let s = EqStructure::from_json(&stext).map_err(|e| CliError::Input(format!("{}: {e}", sp.display())))?;
    let ttext = ctx.read(tp)?;
    let rho = interp::parse_sentence(strip_comments(&ttext).trim())
        .map_err(|e| CliError::Input(format!("{}: {e}", tp.display())))?;
    let formula = parser::print(&interp::translate_fo(&rho, scheme));
    match interp::verify_reduction(&s, &rho, scheme, tol).map_err(interp_error)? {
        ReductionOutcome::Checked(c) => {
            let ok = c.agree && c.dichotomy;
            let summary = format!(
                "first-order {}; continuous value {} (tol {}, gap ≥ {}); {}",
                if c.fo_truth { "true" } else { "false" },
                c.value,
                fmt_rational(&c.tol),
                fmt_rational(c.gap.lo()),
                if ok { "agree" } else { "MISMATCH" }
            );
            let report = json!({
                "command": "interpret",
                "scheme": scheme,
                "sentence": rho.to_string(),
                "formula": formula,
                "fo_truth": c.fo_truth,
                "value": ivl(&c.value),
                "gap": ivl(&c.gap),
                "tol": fmt_rational(&c.tol),
                "predicted": c.predicted,
                "agree": c.agree,
                "dichotomy": c.dichotomy,
            });
            outcome(report, summary, if ok { 0 } else { 3 })
        }
        ReductionOutcome::GapDegenerate { gap } => {
            let report = json!({
                "command": "interpret",
                "scheme": scheme,
                "sentence": rho.to_string(),
                "status": "gap-degenerate",
                "gap": ivl(&gap),
            });
            outcome(report, format!("gap {gap} is not certifiably positive; check declined"), 1)
        }
    }
}
