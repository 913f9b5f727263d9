//! Scenario files: spaces, traces, neighborhoods, checks and audits, all
//! resolved against each other before anything runs.

use std::collections::BTreeMap;
use std::path::Path;

use riesz_core::convergence::{CheckerConfig, DoubleMode, Kind, TraceSpec};
use riesz_core::oracle::{AuditClaim, AuditMode, AuditStatus, ClaimId};
use riesz_core::rational::{self, Rational};
use riesz_core::topology::{SolidNbhd, TensorNbhd};
use riesz_core::{Element, Functional, NormTag, Registry, Space, SpaceRef, UnitSpec};
use serde_json::{Map, Value};

use crate::CliError;

pub const DEFAULT_HORIZON: u64 = 200;
pub const DEFAULT_WINDOW: u64 = 10;
pub const DEFAULT_SEED: u64 = 0;

pub fn default_tol() -> Rational {
    rational::frac(1, 100)
}

/// Command-line overrides; they win over anything in the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<u64>,
    pub tol: Option<Rational>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Defaults {
    pub horizon: u64,
    pub window: u64,
    pub tol: Rational,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Nbhd {
    Solid(SolidNbhd),
    Tensor(TensorNbhd),
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Op {
    Single {
        kind: Kind,
        trace: TraceSpec,
        cfg: CheckerConfig,
    },
    Pointwise {
        trace: TraceSpec,
        cfg: CheckerConfig,
    },
    Metric {
        trace: TraceSpec,
        cfg: CheckerConfig,
    },
    Double {
        kind: Kind,
        xs: TraceSpec,
        ys: TraceSpec,
        target: SpaceRef,
        cfg: CheckerConfig,
        mode: DoubleMode,
    },
    Preservation {
        kind: Kind,
        xs: TraceSpec,
        ys: TraceSpec,
        target: SpaceRef,
        cfg_x: CheckerConfig,
        cfg_y: CheckerConfig,
        cfg_t: CheckerConfig,
        mode: DoubleMode,
    },
    TauNull {
        xs: TraceSpec,
        ys: TraceSpec,
        nbhd: TensorNbhd,
        horizon: u64,
    },
    Contains {
        nbhd: SolidNbhd,
        x: Element,
    },
    Membership {
        nbhd: TensorNbhd,
        z: Element,
    },
    Separation {
        z: Element,
    },
    Refinement {
        w_un: SolidNbhd,
        u: SolidNbhd,
        v: SolidNbhd,
        samples: usize,
        seed: u64,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Single { kind: Kind::Norm, .. } => "is_norm_null",
            Op::Single { kind: Kind::Un, .. } => "is_un_null",
            Op::Single { kind: Kind::Uaw, .. } => "is_uaw_null",
            Op::Single { kind: Kind::Uo, .. } => "is_uo_null",
            Op::Pointwise { .. } => "is_pointwise_null",
            Op::Metric { .. } => "is_metric_null",
            Op::Double { .. } => "check_double",
            Op::Preservation { .. } => "preservation_experiment",
            Op::TauNull { .. } => "tau_null",
            Op::Contains { .. } => "nbhd_contains",
            Op::Membership { .. } => "sol_membership",
            Op::Separation { .. } => "hausdorff_separation",
            Op::Refinement { .. } => "un_refinement_check",
        }
    }

    /// What a passing row asserts.
    pub fn property(&self) -> String {
        match self {
            Op::Single { kind: Kind::Norm, .. } => "norm-null: ||x_n|| -> 0".into(),
            Op::Single { kind: Kind::Un, .. } => "un-null: || |x_n| ^ u || -> 0".into(),
            Op::Single { kind: Kind::Uaw, .. } => "uaw-null: f(|x_n| ^ u) -> 0 for every f in the battery".into(),
            Op::Single { kind: Kind::Uo, .. } => "uo-null: |x_n| ^ u -> 0 in order".into(),
            Op::Pointwise { .. } => "pointwise-null: every coordinate of x_n -> 0".into(),
            Op::Metric { .. } => "d-null: d(x_n, 0) -> 0 for the uaw metric".into(),
            Op::Double { kind, .. } => format!("{kind}-null double trace x_m (x) y_n"),
            Op::Preservation { kind, .. } => format!("{kind}-null factors give a {kind}-null tensor double trace"),
            Op::TauNull { .. } => "tau-null: x_a (x) y_b eventually in Sol(U (x) V)".into(),
            Op::Contains { .. } => "rho_u(x) < eps".into(),
            Op::Membership { .. } => "z in Sol(U (x) V): |z| <= a (x) b with a in U, b in V".into(),
            Op::Separation { .. } => "z outside some Sol(U (x) V)".into(),
            Op::Refinement { .. } => "Sol(U (x) V) inside the un-neighborhood W_un".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub id: String,
    pub op: Op,
    /// `fail` marks a check whose failure is the expected finding.
    pub expect: riesz_core::Status,
}

#[derive(Debug, Clone)]
pub struct Audit {
    pub id: String,
    pub claim: AuditClaim,
    pub expect: AuditStatus,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub registry: Registry,
    pub defaults: Defaults,
    pub checks: Vec<Check>,
    pub audits: Vec<Audit>,
    pub csv: String,
    pub json: String,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| bad(format!("{what} must be an object")))
}

fn req<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value, CliError> {
    m.get(key).ok_or_else(|| bad(format!("{what} needs `{key}`")))
}

fn req_str<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a str, CliError> {
    req(m, key, what)?
        .as_str()
        .ok_or_else(|| bad(format!("`{key}` in {what} must be a string")))
}

fn opt_u64(m: &Map<String, Value>, key: &str, what: &str) -> Result<Option<u64>, CliError> {
    match m.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| bad(format!("`{key}` in {what} must be a nonnegative integer"))),
    }
}

fn opt_rat(m: &Map<String, Value>, key: &str) -> Result<Option<Rational>, CliError> {
    m.get(key)
        .map(|v| riesz_core::element::parse_rational_value(v).map_err(CliError::from))
        .transpose()
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<(), CliError> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(bad(format!("unknown field `{k}` in {what}"))),
        None => Ok(()),
    }
}

fn parse_space(v: &Value, reg: &Registry) -> Result<SpaceRef, CliError> {
    let m = obj(v, "space")?;
    let id = req_str(m, "id", "space")?;
    let what = format!("space `{id}`");
    let space = match req_str(m, "kind", &what)? {
        "grid" => {
            check_keys(m, &["id", "kind", "points", "size"], &what)?;
            match (m.get("points"), m.get("size")) {
                (Some(p), None) => {
                    let pts = p
                        .as_array()
                        .ok_or_else(|| bad(format!("`points` in {what} must be a list")))?
                        .iter()
                        .map(|x| {
                            x.as_str()
                                .map(str::to_string)
                                .ok_or_else(|| bad("grid points must be strings"))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Space::grid_owned(id, pts)?
                }
                (None, Some(n)) => {
                    let n = n
                        .as_u64()
                        .ok_or_else(|| bad(format!("`size` in {what} must be an integer")))?;
                    Space::numbered_grid(id, n as usize)?
                }
                _ => return Err(bad(format!("{what} needs exactly one of `points` or `size`"))),
            }
        }
        "seq" => {
            check_keys(m, &["id", "kind", "norm"], &what)?;
            let norm: NormTag = serde_json::from_value(req(m, "norm", &what)?.clone())
                .map_err(|_| bad(format!("`norm` in {what} must be l1, l2 or sup-c0")))?;
            Space::seq(id, norm)
        }
        "linf" => {
            check_keys(m, &["id", "kind"], &what)?;
            Space::linf(id)
        }
        "tensor" => {
            check_keys(m, &["id", "kind", "left", "right"], &what)?;
            let l = reg.get(req_str(m, "left", &what)?)?;
            let r = reg.get(req_str(m, "right", &what)?)?;
            Space::tensor(id, &l, &r)?
        }
        other => return Err(bad(format!("unknown space kind `{other}`"))),
    };
    Ok(space)
}

struct Ctx<'a> {
    registry: &'a Registry,
    traces: BTreeMap<String, TraceSpec>,
    nbhds: BTreeMap<String, Nbhd>,
    defaults: &'a Defaults,
    overrides: &'a Overrides,
}

impl Ctx<'_> {
    fn trace(&self, m: &Map<String, Value>, key: &str, what: &str) -> Result<TraceSpec, CliError> {
        let name = req_str(m, key, what)?;
        self.traces
            .get(name)
            .cloned()
            .ok_or_else(|| bad(format!("{what} refers to unknown trace `{name}`")))
    }

    fn space(&self, m: &Map<String, Value>, key: &str, what: &str) -> Result<SpaceRef, CliError> {
        Ok(self.registry.get(req_str(m, key, what)?)?)
    }

    fn solid(&self, m: &Map<String, Value>, key: &str, what: &str) -> Result<SolidNbhd, CliError> {
        let name = req_str(m, key, what)?;
        match self.nbhds.get(name) {
            Some(Nbhd::Solid(n)) => Ok(n.clone()),
            Some(Nbhd::Tensor(_)) => Err(bad(format!("{what}: `{name}` is a tensor neighborhood"))),
            None => Err(bad(format!("{what} refers to unknown neighborhood `{name}`"))),
        }
    }

    fn tensor(&self, m: &Map<String, Value>, key: &str, what: &str) -> Result<TensorNbhd, CliError> {
        let name = req_str(m, key, what)?;
        match self.nbhds.get(name) {
            Some(Nbhd::Tensor(n)) => Ok(n.clone()),
            Some(Nbhd::Solid(_)) => Err(bad(format!("{what}: `{name}` is not a tensor neighborhood"))),
            None => Err(bad(format!("{what} refers to unknown neighborhood `{name}`"))),
        }
    }

    fn element(
        &self,
        m: &Map<String, Value>,
        key: &str,
        space: Option<&SpaceRef>,
        what: &str,
    ) -> Result<Element, CliError> {
        let v = req(m, key, what)?;
        Ok(match space {
            Some(s) => Element::from_json_in(v, s)?,
            None => Element::from_json(v, self.registry)?,
        })
    }

    /// Flags, then the check's own `config`, then scenario defaults.
    fn config(
        &self,
        m: &Map<String, Value>,
        key: &str,
        space: &SpaceRef,
        what: &str,
    ) -> Result<CheckerConfig, CliError> {
        let empty = Map::new();
        let c = match m.get(key) {
            Some(v) => obj(v, &format!("`{key}` of {what}"))?,
            None => &empty,
        };
        check_keys(
            c,
            &["horizon", "window", "tol", "unit", "battery"],
            &format!("`{key}` of {what}"),
        )?;
        let horizon = self
            .overrides
            .horizon
            .or(opt_u64(c, "horizon", what)?)
            .unwrap_or(self.defaults.horizon);
        let window = opt_u64(c, "window", what)?.unwrap_or(self.defaults.window).min(horizon);
        let tol = match &self.overrides.tol {
            Some(t) => t.clone(),
            None => opt_rat(c, "tol")?.unwrap_or_else(|| self.defaults.tol.clone()),
        };
        let mut cfg = CheckerConfig::new(space, horizon, window, tol);
        if let Some(u) = c.get("unit") {
            cfg.unit = UnitSpec::from_json(u, space)?;
        }
        if let Some(b) = c.get("battery") {
            cfg.battery = b
                .as_array()
                .ok_or_else(|| bad(format!("battery of {what} must be a list")))?
                .iter()
                .map(|f| Functional::from_json(f, space))
                .collect::<Result<Vec<_>, _>>()?;
        }
        cfg.validate(space)?;
        Ok(cfg)
    }

    fn seed(&self, m: &Map<String, Value>, what: &str) -> Result<u64, CliError> {
        Ok(self
            .overrides
            .seed
            .or(opt_u64(m, "seed", what)?)
            .unwrap_or(self.defaults.seed))
    }
}

fn parse_nbhd(v: &Value, ctx: &Ctx) -> Result<(String, Nbhd), CliError> {
    let m = obj(v, "neighborhood")?;
    let id = req_str(m, "id", "neighborhood")?.to_string();
    let what = format!("neighborhood `{id}`");
    let n = match m.get("kind").and_then(Value::as_str).unwrap_or("solid") {
        "solid" => {
            check_keys(m, &["id", "kind", "space", "unit", "eps"], &what)?;
            let space = ctx.space(m, "space", &what)?;
            Nbhd::Solid(SolidNbhd::from_json(v, &space)?)
        }
        "tensor" => {
            check_keys(m, &["id", "kind", "target", "u", "v"], &what)?;
            let target = ctx.space(m, "target", &what)?;
            Nbhd::Tensor(TensorNbhd::new(
                &target,
                ctx.solid(m, "u", &what)?,
                ctx.solid(m, "v", &what)?,
            )?)
        }
        other => return Err(bad(format!("unknown neighborhood kind `{other}`"))),
    };
    Ok((id, n))
}

fn factor_configs(
    ctx: &Ctx,
    m: &Map<String, Value>,
    xs: &TraceSpec,
    ys: &TraceSpec,
    target: &SpaceRef,
    what: &str,
) -> Result<(CheckerConfig, CheckerConfig, CheckerConfig), CliError> {
    let cfg_x = ctx.config(m, "config_x", &xs.space, what)?;
    let cfg_y = ctx.config(m, "config_y", &ys.space, what)?;
    let mut cfg_t = ctx.config(m, "config", target, what)?;
    if !m
        .get("config")
        .is_some_and(|c| c.get("unit").is_some() || c.get("battery").is_some())
    {
        let t = riesz_core::convergence::tensor_config(&cfg_x, &cfg_y, cfg_t.horizon, cfg_t.window, cfg_t.tol.clone());
        cfg_t.unit = t.unit;
        cfg_t.battery = t.battery;
    }
    cfg_t.validate(target)?;
    Ok((cfg_x, cfg_y, cfg_t))
}

fn parse_mode(m: &Map<String, Value>) -> Result<DoubleMode, CliError> {
    match m.get("mode") {
        None => Ok(DoubleMode::Block),
        Some(Value::String(s)) => s.parse().map_err(|_| bad(format!("unknown double-trace mode `{s}`"))),
        Some(_) => Err(bad("`mode` must be a string")),
    }
}

fn parse_kind(m: &Map<String, Value>, what: &str) -> Result<Kind, CliError> {
    let s = req_str(m, "kind", what)?;
    s.parse().map_err(|_| bad(format!("unknown convergence kind `{s}`")))
}

fn parse_check(v: &Value, ctx: &Ctx) -> Result<Check, CliError> {
    let m = obj(v, "check")?;
    let id = req_str(m, "id", "check")?.to_string();
    let what = format!("check `{id}`");
    let expect = match m.get("expect").and_then(Value::as_str) {
        None | Some("pass") => riesz_core::Status::Pass,
        Some("fail") => riesz_core::Status::Fail,
        Some(other) => return Err(bad(format!("{what}: `expect` must be pass or fail, not `{other}`"))),
    };
    let common = ["id", "op", "expect"];
    let keys = |extra: &[&str]| -> Result<(), CliError> {
        let all: Vec<&str> = common.iter().chain(extra).copied().collect();
        check_keys(m, &all, &what)
    };
    let op = match req_str(m, "op", &what)? {
        name @ ("is_norm_null" | "is_un_null" | "is_uaw_null" | "is_uo_null") => {
            keys(&["trace", "config"])?;
            let kind = match name {
                "is_norm_null" => Kind::Norm,
                "is_un_null" => Kind::Un,
                "is_uaw_null" => Kind::Uaw,
                _ => Kind::Uo,
            };
            let trace = ctx.trace(m, "trace", &what)?;
            let cfg = ctx.config(m, "config", &trace.space, &what)?;
            Op::Single { kind, trace, cfg }
        }
        name @ ("is_pointwise_null" | "is_metric_null") => {
            keys(&["trace", "config"])?;
            let trace = ctx.trace(m, "trace", &what)?;
            let cfg = ctx.config(m, "config", &trace.space, &what)?;
            if name == "is_pointwise_null" {
                Op::Pointwise { trace, cfg }
            } else {
                Op::Metric { trace, cfg }
            }
        }
        "check_double" | "preservation_experiment" => {
            keys(&["kind", "target", "xs", "ys", "mode", "config", "config_x", "config_y"])?;
            let kind = parse_kind(m, &what)?;
            let (xs, ys) = (ctx.trace(m, "xs", &what)?, ctx.trace(m, "ys", &what)?);
            let target = ctx.space(m, "target", &what)?;
            let mode = parse_mode(m)?;
            let (cfg_x, cfg_y, cfg_t) = factor_configs(ctx, m, &xs, &ys, &target, &what)?;
            if m.get("op").and_then(Value::as_str) == Some("check_double") {
                Op::Double {
                    kind,
                    xs,
                    ys,
                    target,
                    cfg: cfg_t,
                    mode,
                }
            } else {
                Op::Preservation {
                    kind,
                    xs,
                    ys,
                    target,
                    cfg_x,
                    cfg_y,
                    cfg_t,
                    mode,
                }
            }
        }
        "tau_null" => {
            keys(&["xs", "ys", "nbhd", "horizon"])?;
            Op::TauNull {
                xs: ctx.trace(m, "xs", &what)?,
                ys: ctx.trace(m, "ys", &what)?,
                nbhd: ctx.tensor(m, "nbhd", &what)?,
                horizon: ctx
                    .overrides
                    .horizon
                    .or(opt_u64(m, "horizon", &what)?)
                    .unwrap_or(ctx.defaults.horizon),
            }
        }
        "nbhd_contains" => {
            keys(&["nbhd", "x"])?;
            let nbhd = ctx.solid(m, "nbhd", &what)?;
            let x = ctx.element(m, "x", Some(&nbhd.space), &what)?;
            Op::Contains { nbhd, x }
        }
        "sol_membership" => {
            keys(&["nbhd", "z"])?;
            let nbhd = ctx.tensor(m, "nbhd", &what)?;
            let z = ctx.element(m, "z", Some(&nbhd.target), &what)?;
            Op::Membership { nbhd, z }
        }
        "hausdorff_separation" => {
            keys(&["z"])?;
            Op::Separation {
                z: ctx.element(m, "z", None, &what)?,
            }
        }
        "un_refinement_check" => {
            keys(&["w_un", "u", "v", "samples", "seed"])?;
            Op::Refinement {
                w_un: ctx.solid(m, "w_un", &what)?,
                u: ctx.solid(m, "u", &what)?,
                v: ctx.solid(m, "v", &what)?,
                samples: opt_u64(m, "samples", &what)?.unwrap_or(100) as usize,
                seed: ctx.seed(m, &what)?,
            }
        }
        other => return Err(bad(format!("{what}: unknown op `{other}`"))),
    };
    Ok(Check { id, op, expect })
}

fn parse_audit(v: &Value, ctx: &Ctx) -> Result<Audit, CliError> {
    let m = obj(v, "audit")?;
    let claim_name = req_str(m, "claim", "audit")?;
    let id: ClaimId = claim_name
        .parse()
        .map_err(|_| bad(format!("unknown claim `{claim_name}`")))?;
    let what = format!("audit of `{claim_name}`");
    check_keys(
        m,
        &[
            "id", "claim", "mode", "trials", "seed", "values", "dims", "eps", "expect",
        ],
        &what,
    )?;
    let mut claim = match m.get("mode").and_then(Value::as_str).unwrap_or("exhaustive") {
        "exhaustive" => AuditClaim::exhaustive(id),
        "randomized" => AuditClaim::randomized(id, opt_u64(m, "trials", &what)?.unwrap_or(100), ctx.seed(m, &what)?),
        other => return Err(bad(format!("{what}: unknown mode `{other}`"))),
    };
    let rat_list = |key: &str| -> Result<Option<Vec<Rational>>, CliError> {
        m.get(key)
            .map(|v| {
                v.as_array()
                    .ok_or_else(|| bad(format!("`{key}` in {what} must be a list")))?
                    .iter()
                    .map(|x| riesz_core::element::parse_rational_value(x).map_err(CliError::from))
                    .collect()
            })
            .transpose()
    };
    if let Some(vs) = rat_list("values")? {
        claim.values = vs;
    }
    if let Some(es) = rat_list("eps")? {
        claim.eps = es;
    }
    if let Some(d) = m.get("dims") {
        claim.dims =
            serde_json::from_value(d.clone()).map_err(|_| bad(format!("`dims` in {what} must be [[n, m], ...]")))?;
    }
    claim.validate()?;
    let expect = match m.get("expect").and_then(Value::as_str) {
        None => id.expected(),
        Some(s) => s
            .parse()
            .map_err(|_| bad(format!("{what}: unknown expected status `{s}`")))?,
    };
    let default_id = match claim.mode {
        AuditMode::Exhaustive => format!("audit:{claim_name}"),
        AuditMode::Randomized { .. } => format!("audit:{claim_name}:randomized"),
    };
    let id = m
        .get("id")
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or(default_id);
    Ok(Audit { id, claim, expect })
}

fn list<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a [Value], CliError> {
    match m.get(key) {
        None => Ok(&[]),
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(bad(format!("`{key}` must be a list"))),
    }
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::from_json(&value, stem, overrides)
    }

    pub fn from_json(value: &Value, fallback_name: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let m = obj(value, "scenario")?;
        check_keys(
            m,
            &[
                "name",
                "description",
                "defaults",
                "spaces",
                "traces",
                "nbhds",
                "checks",
                "audits",
                "outputs",
            ],
            "scenario",
        )?;
        let name = match m.get("name") {
            None => fallback_name.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(bad("`name` must be a string")),
        };

        let empty = Map::new();
        let d = match m.get("defaults") {
            Some(v) => obj(v, "`defaults`")?,
            None => &empty,
        };
        check_keys(d, &["horizon", "window", "tol", "seed"], "`defaults`")?;
        let defaults = Defaults {
            horizon: overrides
                .horizon
                .or(opt_u64(d, "horizon", "defaults")?)
                .unwrap_or(DEFAULT_HORIZON),
            window: opt_u64(d, "window", "defaults")?.unwrap_or(DEFAULT_WINDOW),
            tol: overrides.tol.clone().or(opt_rat(d, "tol")?).unwrap_or_else(default_tol),
            seed: overrides
                .seed
                .or(opt_u64(d, "seed", "defaults")?)
                .unwrap_or(DEFAULT_SEED),
        };

        let mut registry = Registry::new();
        for s in list(m, "spaces")? {
            let space = parse_space(s, &registry)?;
            registry.insert(space)?;
        }

        let mut ctx = Ctx {
            registry: &registry,
            traces: BTreeMap::new(),
            nbhds: BTreeMap::new(),
            defaults: &defaults,
            overrides,
        };
        for t in list(m, "traces")? {
            let tm = obj(t, "trace")?;
            let id = req_str(tm, "id", "trace")?.to_string();
            let spec = TraceSpec::from_json(t, &registry)?;
            if ctx.traces.insert(id.clone(), spec).is_some() {
                return Err(bad(format!("duplicate trace id `{id}`")));
            }
        }
        for n in list(m, "nbhds")? {
            let (id, nb) = parse_nbhd(n, &ctx)?;
            if ctx.nbhds.insert(id.clone(), nb).is_some() {
                return Err(bad(format!("duplicate neighborhood id `{id}`")));
            }
        }
        let checks = list(m, "checks")?
            .iter()
            .map(|c| parse_check(c, &ctx))
            .collect::<Result<Vec<_>, _>>()?;
        let audits = list(m, "audits")?
            .iter()
            .map(|a| parse_audit(a, &ctx))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = std::collections::BTreeSet::new();
        for id in checks.iter().map(|c| &c.id).chain(audits.iter().map(|a| &a.id)) {
            if !seen.insert(id) {
                return Err(bad(format!("duplicate check id `{id}`")));
            }
        }

        let o = match m.get("outputs") {
            Some(v) => obj(v, "`outputs`")?,
            None => &empty,
        };
        check_keys(o, &["csv", "json"], "`outputs`")?;
        let out_path = |key: &str, ext: &str| -> Result<String, CliError> {
            let p = match o.get(key) {
                None => format!("{name}.{ext}"),
                Some(Value::String(s)) => s.clone(),
                Some(_) => return Err(bad(format!("`outputs.{key}` must be a string"))),
            };
            if Path::new(&p).is_absolute() || p.split(['/', '\\']).any(|c| c == "..") {
                return Err(bad(format!("output path `{p}` must stay inside the output directory")));
            }
            Ok(p)
        };
        let (csv, json) = (out_path("csv", "csv")?, out_path("json", "json")?);
        drop(ctx);
        Ok(Scenario {
            name,
            registry,
            defaults,
            checks,
            audits,
            csv,
            json,
        })
    }
}
