use std::path::Path as FsPath;

use obtuse_core::chaos::{decompose, reconstruct, ChaosCoefficients, ChaosJson};
use obtuse_core::integrals::VectorProcess;
use obtuse_core::malliavin::{clark_ocone, clark_ocone_from, divergence, gradient, gradient_chaos};
use obtuse_core::market::{
    build_prices, emm_walk, find_emm, hedge_clark_ocone, hedge_replicate, price_claim,
    verify_strategy, Emm, Market, MarketSpec, Prices, Strategy,
};
use obtuse_core::omega::{expectation, variance, Path, PathSpace, PathTable, DEFAULT_CAP};
use obtuse_core::ou::{
    deviation_bound, ou_apply_chaos, ou_apply_kernel, tail_probability, OUKernelMatrix,
};
use obtuse_core::walk::{
    construct_obtuse, structure_equation_residual, validate, StepSpec, ValidationReport, Walk,
    WalkSpec, DEFAULT_WALK_TOL,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{ChaosCmd, Cli, Command, Format, MarketCmd, Method, OuForm, PayoffArg, WalkCmd};
use crate::output::{number, to_csv, to_json};
use crate::payoff::parse_payoff;
use crate::{CliError, Outcome};

type Res<T> = Result<T, CliError>;

const VERIFY_TOL: f64 = 1e-8;

pub fn execute(cli: &Cli) -> Res<Outcome> {
    let ctx = Ctx {
        format: cli.global.format,
        tol: cli.global.tol,
        cap: cli.global.cap.unwrap_or(DEFAULT_CAP),
    };
    match &cli.command {
        Command::Walk(WalkCmd::Validate { spec }) => ctx.walk_validate(spec),
        Command::Walk(WalkCmd::Construct { spec, p, horizon }) => {
            ctx.walk_construct(spec.as_deref(), p.as_deref(), *horizon)
        }
        Command::Chaos(ChaosCmd::Decompose { walk, table }) => {
            ctx.chaos_decompose(walk, &table.table)
        }
        Command::Chaos(ChaosCmd::Reconstruct { walk, coeffs }) => {
            ctx.chaos_reconstruct(walk, coeffs)
        }
        Command::Gradient { walk, table, chaos } => ctx.gradient(walk, &table.table, *chaos),
        Command::ClarkOcone { walk, table, from } => ctx.clark_ocone(walk, &table.table, *from),
        Command::Divergence { walk, process } => ctx.divergence(walk, process),
        Command::Ou {
            walk,
            table,
            t,
            form,
            matrix,
        } => ctx.ou(walk, &table.table, *t, *form, *matrix),
        Command::Deviation {
            walk,
            table,
            x,
            k,
            c,
        } => ctx.deviation(walk, &table.table, *x, *k, *c),
        Command::Market(MarketCmd::Emm { market }) => ctx.market_emm(market),
        Command::Market(MarketCmd::Price { market, payoff }) => ctx.market_price(market, payoff),
        Command::Market(MarketCmd::Hedge {
            market,
            payoff,
            method,
        }) => ctx.market_hedge(market, payoff, *method),
        Command::Market(MarketCmd::Verify {
            market,
            payoff,
            strategy,
            method,
        }) => ctx.market_verify(market, payoff, strategy.as_deref(), *method),
    }
}

fn read_text(path: &FsPath) -> Res<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &FsPath) -> Res<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn table_from(space: PathSpace, values: Vec<f64>, what: &str) -> Res<PathTable> {
    if values.len() != space.len() {
        return Err(CliError::Input(format!(
            "{what} has {} values, expected one per path ({})",
            values.len(),
            space.len()
        )));
    }
    Ok(PathTable::new(space, values)?)
}

fn load_table(path: &FsPath, space: PathSpace) -> Res<PathTable> {
    table_from(space, read_json(path)?, &path.display().to_string())
}

fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| number(x)).collect()
}

fn label(space: PathSpace, idx: usize) -> String {
    space.path(idx).to_string()
}

fn table_rows(t: &PathTable) -> Vec<Vec<String>> {
    let space = t.space();
    (0..space.len())
        .map(|idx| vec![idx.to_string(), label(space, idx), number(t.get(idx))])
        .collect()
}

/// `(time, coordinate, table)` rows for component processes.
#[derive(Serialize)]
struct Component<'a> {
    #[serde(rename = "n")]
    time: usize,
    j: usize,
    values: &'a [f64],
}

fn components(tables: &[Vec<PathTable>]) -> Vec<Component<'_>> {
    tables
        .iter()
        .enumerate()
        .flat_map(|(n, row)| {
            row.iter().enumerate().map(move |(j, t)| Component {
                time: n,
                j: j + 1,
                values: t.values(),
            })
        })
        .collect()
}

fn component_rows(tables: &[Vec<PathTable>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (n, row) in tables.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            for idx in 0..t.space().len() {
                rows.push(vec![
                    n.to_string(),
                    (j + 1).to_string(),
                    idx.to_string(),
                    number(t.get(idx)),
                ]);
            }
        }
    }
    rows
}

struct Ctx {
    format: Format,
    tol: Option<f64>,
    cap: u64,
}

impl Ctx {
    fn emit<T: Serialize>(
        &self,
        json: &T,
        header: &[&str],
        rows: impl FnOnce() -> Vec<Vec<String>>,
        ok: bool,
    ) -> Outcome {
        let text = match self.format {
            Format::Json => to_json(json),
            Format::Csv => to_csv(header, rows()),
        };
        Outcome { text, ok }
    }

    fn load_walk(&self, path: &FsPath) -> Res<Walk> {
        let spec: WalkSpec = read_json(path)?;
        Ok(Walk::with_options(
            &spec.resolve()?,
            DEFAULT_WALK_TOL,
            self.cap,
        )?)
    }

    fn load_market(&self, path: &FsPath) -> Res<Market> {
        let spec: MarketSpec = read_json(path)?;
        Ok(Market::with_cap(&spec, self.cap)?)
    }

    fn walk_validate(&self, path: &FsPath) -> Res<Outcome> {
        #[derive(Serialize)]
        struct Report {
            #[serde(flatten)]
            report: ValidationReport,
            /// Worst pointwise structure-equation residual per step.
            structure: Vec<f64>,
        }
        let tol = self.tol.unwrap_or(DEFAULT_WALK_TOL);
        let spec: WalkSpec = read_json(path)?;
        let spec = spec.resolve()?;
        let report = validate(&spec, tol);
        let structure = if report.pass {
            let w = Walk::with_options(&spec, tol, self.cap)?;
            (0..=w.horizon())
                .map(|n| structure_equation_residual(&w, n))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        let ok = report.pass;
        let out = Report { report, structure };
        Ok(self.emit(
            &out,
            &["check", "value", "step", "j", "l"],
            || {
                let r = &out.report;
                let mut rows = vec![
                    vec![
                        "mean".into(),
                        number(r.mean.value),
                        r.mean.step.to_string(),
                        r.mean.j.to_string(),
                        String::new(),
                    ],
                    vec![
                        "moment".into(),
                        number(r.moment.value),
                        r.moment.step.to_string(),
                        r.moment.j.to_string(),
                        r.moment.l.to_string(),
                    ],
                ];
                for (n, s) in out.structure.iter().enumerate() {
                    rows.push(vec![
                        "structure".into(),
                        number(*s),
                        n.to_string(),
                        String::new(),
                        String::new(),
                    ]);
                }
                for e in &r.errors {
                    rows.push(vec![
                        "error".into(),
                        e.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
                rows
            },
            ok,
        ))
    }

    fn walk_construct(
        &self,
        path: Option<&FsPath>,
        p: Option<&[f64]>,
        horizon: Option<usize>,
    ) -> Res<Outcome> {
        let spec = match (path, p) {
            (Some(path), _) => read_json::<WalkSpec>(path)?.resolve()?,
            (None, Some(p)) => {
                let horizon =
                    horizon.ok_or_else(|| CliError::Input("--p requires --horizon".into()))?;
                construct_obtuse(&vec![p.to_vec(); horizon + 1])?
            }
            (None, None) => return Err(CliError::Input("give a walk spec or --p".into())),
        };
        // reject the result through the same checks a loaded walk gets
        Walk::with_options(&spec, DEFAULT_WALK_TOL, self.cap)?;
        let d = spec.d;
        let mut header = vec!["step".to_string(), "outcome".into(), "p".into()];
        header.extend((1..=d).map(|j| format!("v_{j}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        Ok(self.emit(
            &spec,
            &header,
            || {
                let mut rows = Vec::new();
                for (n, StepSpec { p, v }) in spec.steps.iter().enumerate() {
                    let v = v.as_ref().expect("resolved");
                    for i in 0..p.len() {
                        let mut row = vec![n.to_string(), i.to_string(), number(p[i])];
                        row.extend(nums(&v[i]));
                        rows.push(row);
                    }
                }
                rows
            },
            true,
        ))
    }

    fn chaos_decompose(&self, walk: &FsPath, table: &FsPath) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let f = load_table(table, w.space())?;
        let json = decompose(&w, &f)?.to_json();
        Ok(self.emit(
            &json,
            &["order", "times", "coords", "value"],
            || {
                let mut rows = Vec::new();
                for (order, k) in &json.orders {
                    for e in &k.entries {
                        let join = |xs: &[usize]| {
                            xs.iter()
                                .map(usize::to_string)
                                .collect::<Vec<_>>()
                                .join(";")
                        };
                        rows.push(vec![
                            order.clone(),
                            join(&e.times),
                            join(&e.coords),
                            number(e.value),
                        ]);
                    }
                }
                rows
            },
            true,
        ))
    }

    fn chaos_reconstruct(&self, walk: &FsPath, coeffs: &FsPath) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let json: ChaosJson = read_json(coeffs)?;
        let f = reconstruct(&w, &ChaosCoefficients::from_json(&json)?)?;
        Ok(self.emit(
            &f.values(),
            &["index", "path", "value"],
            || table_rows(&f),
            true,
        ))
    }

    fn gradient(&self, walk: &FsPath, table: &FsPath, via_chaos: bool) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let f = load_table(table, w.space())?;
        let tables: Vec<Vec<PathTable>> = if via_chaos {
            let c = decompose(&w, &f)?;
            (0..=w.horizon())
                .map(|k| {
                    (1..=w.dim())
                        .map(|j| gradient_chaos(&w, &c, k, j))
                        .collect::<Result<_, _>>()
                })
                .collect::<Result<_, _>>()?
        } else {
            gradient(&w, &f)?.tables().to_vec()
        };
        #[derive(Serialize)]
        struct Out<'a> {
            d: usize,
            #[serde(rename = "N")]
            horizon: usize,
            method: &'static str,
            gradient: Vec<Component<'a>>,
        }
        let out = Out {
            d: w.dim(),
            horizon: w.horizon(),
            method: if via_chaos {
                "chaos"
            } else {
                "finite-difference"
            },
            gradient: components(&tables),
        };
        Ok(self.emit(
            &out,
            &["k", "j", "path", "value"],
            || component_rows(&tables),
            true,
        ))
    }

    fn clark_ocone(&self, walk: &FsPath, table: &FsPath, from: Option<isize>) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let f = load_table(table, w.space())?;
        #[derive(Serialize)]
        struct Out<'a> {
            mean: f64,
            variance: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            from: Option<isize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            head: Option<&'a [f64]>,
            /// `E[Σ_k |ξ_k|²]` over the represented steps.
            energy: f64,
            integrand: Vec<Component<'a>>,
        }
        let (head, xi) = match from {
            None => {
                let (_, xi) = clark_ocone(&w, &f)?;
                (None, xi)
            }
            Some(n) => {
                let split = clark_ocone_from(&w, &f, n)?;
                (Some(split.head), split.tail)
            }
        };
        let energy = expectation(&w, &xi.squared_norm())?;
        let out = Out {
            mean: expectation(&w, &f)?,
            variance: variance(&w, &f)?,
            from,
            head: head.as_ref().map(PathTable::values),
            energy,
            integrand: components(xi.components()),
        };
        Ok(self.emit(
            &out,
            &["n", "j", "path", "value"],
            || component_rows(xi.components()),
            true,
        ))
    }

    fn divergence(&self, walk: &FsPath, process: &FsPath) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let raw: Vec<Vec<Vec<f64>>> = read_json(process)?;
        if raw.len() != w.space().steps() || raw.iter().any(|r| r.len() != w.dim()) {
            return Err(CliError::Input(format!(
                "{}: expected {} × {} tables",
                process.display(),
                w.space().steps(),
                w.dim()
            )));
        }
        let comps = raw
            .into_iter()
            .enumerate()
            .map(|(n, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, v)| table_from(w.space(), v, &format!("component ({n}, {})", j + 1)))
                    .collect::<Res<Vec<_>>>()
            })
            .collect::<Res<Vec<_>>>()?;
        let x = VectorProcess::new(w.space(), comps)?;
        let div = divergence(&w, &x)?;
        #[derive(Serialize)]
        struct Out<'a> {
            predictable: bool,
            values: &'a [f64],
        }
        let out = Out {
            predictable: x.is_predictable(),
            values: div.values(),
        };
        Ok(self.emit(&out, &["index", "path", "value"], || table_rows(&div), true))
    }

    fn ou(
        &self,
        walk: &FsPath,
        table: &FsPath,
        t: f64,
        form: OuForm,
        matrix: bool,
    ) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        if matrix {
            let q = OUKernelMatrix::new(&w, t)?;
            #[derive(Serialize)]
            struct Out {
                t: f64,
                min_entry: f64,
                row_stochastic_residual: f64,
                matrix: Vec<Vec<f64>>,
            }
            let out = Out {
                t,
                min_entry: q.min_entry(),
                row_stochastic_residual: q.row_stochastic_residual(&w),
                matrix: (0..w.space().len()).map(|r| q.row(r).to_vec()).collect(),
            };
            return Ok(self.emit(
                &out,
                &["row", "col", "value"],
                || {
                    q.rows()
                        .map(|(r, c, v)| vec![r.to_string(), c.to_string(), number(v)])
                        .collect()
                },
                true,
            ));
        }
        let f = load_table(table, w.space())?;
        let g = match form {
            OuForm::Chaos => ou_apply_chaos(&w, &f, t)?,
            OuForm::Kernel => ou_apply_kernel(&w, &f, t)?,
        };
        #[derive(Serialize)]
        struct Out<'a> {
            t: f64,
            form: &'static str,
            values: &'a [f64],
        }
        let out = Out {
            t,
            form: match form {
                OuForm::Chaos => "chaos",
                OuForm::Kernel => "kernel",
            },
            values: g.values(),
        };
        Ok(self.emit(&out, &["index", "path", "value"], || table_rows(&g), true))
    }

    fn deviation(
        &self,
        walk: &FsPath,
        table: &FsPath,
        x: f64,
        k: Option<f64>,
        c: Option<f64>,
    ) -> Res<Outcome> {
        let w = self.load_walk(walk)?;
        let f = load_table(table, w.space())?;
        let b = deviation_bound(&w, &f, x, k, c)?;
        #[derive(Serialize)]
        struct Out {
            x: f64,
            mean: f64,
            #[serde(rename = "K")]
            k: f64,
            #[serde(rename = "C")]
            c: f64,
            dfnorm: f64,
            #[serde(rename = "M")]
            m: f64,
            bound_g: f64,
            bound_log: f64,
            tail_probability: f64,
        }
        let out = Out {
            x,
            mean: expectation(&w, &f)?,
            k: b.k,
            c: b.c,
            dfnorm: b.dfnorm,
            m: b.m,
            bound_g: b.bound_g,
            bound_log: b.bound_log,
            tail_probability: tail_probability(&w, &f, x)?,
        };
        Ok(self.emit(
            &out,
            &["quantity", "value"],
            || {
                [
                    ("x", out.x),
                    ("mean", out.mean),
                    ("K", out.k),
                    ("C", out.c),
                    ("dfnorm", out.dfnorm),
                    ("M", out.m),
                    ("bound_g", out.bound_g),
                    ("bound_log", out.bound_log),
                    ("tail_probability", out.tail_probability),
                ]
                .iter()
                .map(|(n, v)| vec![n.to_string(), number(*v)])
                .collect()
            },
            true,
        ))
    }

    fn market_emm(&self, path: &FsPath) -> Res<Outcome> {
        let m = self.load_market(path)?;
        let emm = find_emm(&m)?;
        #[derive(Serialize)]
        struct Out<'a> {
            q: &'a [Vec<f64>],
            walk: WalkSpec,
        }
        let out = Out {
            q: &emm.q,
            walk: emm_walk(&m, &emm)?,
        };
        Ok(self.emit(
            &out,
            &["step", "outcome", "q"],
            || {
                let mut rows = Vec::new();
                for (k, q) in emm.q.iter().enumerate() {
                    for (i, x) in q.iter().enumerate() {
                        rows.push(vec![k.to_string(), i.to_string(), number(*x)]);
                    }
                }
                rows
            },
            true,
        ))
    }

    /// Market, its prices and the claim, with the canonical payoff text.
    fn claim(&self, path: &FsPath, payoff: &PayoffArg) -> Res<(Market, Prices, PathTable, String)> {
        let m = self.load_market(path)?;
        let prices = build_prices(&m);
        let (f, text) = match (&payoff.payoff, &payoff.table) {
            (Some(src), _) => {
                let e = parse_payoff(src, m.dim(), m.horizon())?;
                (e.eval(m.space(), &prices)?, e.to_string())
            }
            (None, Some(t)) => (load_table(t, m.space())?, "table".to_string()),
            (None, None) => return Err(CliError::Input("give --payoff or --payoff-table".into())),
        };
        Ok((m, prices, f, text))
    }

    fn market_price(&self, path: &FsPath, payoff: &PayoffArg) -> Res<Outcome> {
        let (m, _, f, text) = self.claim(path, payoff)?;
        let emm = find_emm(&m)?;
        #[derive(Serialize)]
        struct Out {
            payoff: String,
            price: f64,
        }
        let out = Out {
            payoff: text,
            price: price_claim(&m, &emm, &f)?,
        };
        Ok(self.emit(
            &out,
            &["payoff", "price"],
            || vec![vec![out.payoff.clone(), number(out.price)]],
            true,
        ))
    }

    fn strategy(m: &Market, emm: &Emm, f: &PathTable, method: Method) -> Res<Strategy> {
        Ok(match method {
            Method::Replicate => hedge_replicate(m, emm, f)?,
            Method::ClarkOcone => hedge_clark_ocone(m, emm, f)?,
        })
    }

    fn market_hedge(&self, path: &FsPath, payoff: &PayoffArg, method: Method) -> Res<Outcome> {
        let (m, prices, f, text) = self.claim(path, payoff)?;
        let emm = find_emm(&m)?;
        let s = Self::strategy(&m, &emm, &f, method)?;
        let rows = s.rows(&prices);
        let file = StrategyFile {
            payoff: text,
            method: method_name(method).into(),
            price: price_claim(&m, &emm, &f)?,
            rows: rows.iter().map(FileRow::from).collect(),
        };
        Ok(self.emit(
            &file,
            &strategy_header(m.dim())
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>(),
            || {
                file.rows
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.time.to_string(), r.atom.clone(), number(r.beta)];
                        row.extend(nums(&r.gamma));
                        row.push(number(r.value));
                        row
                    })
                    .collect()
            },
            true,
        ))
    }

    fn market_verify(
        &self,
        path: &FsPath,
        payoff: &PayoffArg,
        strategy: Option<&FsPath>,
        method: Method,
    ) -> Res<Outcome> {
        let (m, _, f, _) = self.claim(path, payoff)?;
        let s = match strategy {
            Some(p) => load_strategy(p, m.space())?,
            None => Self::strategy(&m, &find_emm(&m)?, &f, method)?,
        };
        let report = verify_strategy(&m, &s, &f)?;
        let tol = self.tol.unwrap_or(VERIFY_TOL);
        let ok = report.passes(tol);
        #[derive(Serialize)]
        struct Out {
            pass: bool,
            tol: f64,
            #[serde(flatten)]
            report: obtuse_core::market::VerifyReport,
        }
        let out = Out {
            pass: ok,
            tol,
            report,
        };
        Ok(self.emit(
            &out,
            &["check", "residual", "pass"],
            || {
                report
                    .checks()
                    .iter()
                    .map(|(n, r)| vec![n.to_string(), number(*r), (*r <= tol).to_string()])
                    .collect()
            },
            ok,
        ))
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Replicate => "replicate",
        Method::ClarkOcone => "clark-ocone",
    }
}

fn strategy_header(d: usize) -> Vec<String> {
    let mut h = vec!["time".to_string(), "atom".into(), "beta".into()];
    h.extend((1..=d).map(|j| format!("gamma_{j}")));
    h.push("V".into());
    h
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    payoff: String,
    method: String,
    price: f64,
    rows: Vec<FileRow>,
}

#[derive(Serialize, Deserialize)]
struct FileRow {
    time: isize,
    atom: String,
    beta: f64,
    gamma: Vec<f64>,
    #[serde(rename = "V")]
    value: f64,
}

impl From<&obtuse_core::market::StrategyRow> for FileRow {
    fn from(r: &obtuse_core::market::StrategyRow) -> Self {
        FileRow {
            time: r.time,
            atom: r.atom.clone(),
            beta: r.beta,
            gamma: r.gamma.clone(),
            value: r.value,
        }
    }
}

fn parse_atom(label: &str) -> Option<Vec<usize>> {
    let inner = label.trim().strip_prefix('(')?.strip_suffix(')')?;
    if inner.trim().is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn read_strategy_rows(path: &FsPath, d: usize) -> Res<Vec<FileRow>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let file: StrategyFile = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok(file.rows);
    }
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |what: String| CliError::Input(format!("{}: {what}", path.display()));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    if header != strategy_header(d) {
        return Err(bad(format!(
            "expected columns {}",
            strategy_header(d).join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Res<f64> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| bad(format!("'{}' is not a number", &rec[k])))
        };
        rows.push(FileRow {
            time: rec[0]
                .trim()
                .parse()
                .map_err(|_| bad(format!("'{}' is not a time", &rec[0])))?,
            atom: rec[1].to_string(),
            beta: num(2)?,
            gamma: (0..d).map(|j| num(3 + j)).collect::<Res<_>>()?,
            value: num(3 + d)?,
        });
    }
    Ok(rows)
}

/// Strategy from per-atom rows; every `(time, atom)` must be present.
fn load_strategy(path: &FsPath, space: PathSpace) -> Res<Strategy> {
    let d = space.dim();
    let rows = read_strategy_rows(path, d)?;
    let bad = |what: String| CliError::Input(format!("{}: {what}", path.display()));
    let times = space.steps() + 1;
    let mut beta = vec![vec![f64::NAN; space.len()]; times];
    let mut gamma = vec![vec![vec![f64::NAN; space.len()]; d]; times];
    for r in &rows {
        if r.time < -1 || r.time > space.horizon() as isize {
            return Err(bad(format!(
                "time {} outside [-1, {}]",
                r.time,
                space.horizon()
            )));
        }
        let prefix =
            parse_atom(&r.atom).ok_or_else(|| bad(format!("bad atom label '{}'", r.atom)))?;
        if prefix.len() != (r.time + 1) as usize || prefix.iter().any(|&i| i > d) {
            return Err(bad(format!(
                "atom '{}' is not an F_{} atom",
                r.atom, r.time
            )));
        }
        if r.gamma.len() != d {
            return Err(bad(format!(
                "row at time {} has {} gamma entries",
                r.time,
                r.gamma.len()
            )));
        }
        let mut full = prefix.clone();
        full.resize(space.steps(), 0);
        let start = space.index_of(&Path(full))?;
        let size = space.atom_size(r.time)?;
        let n = (r.time + 1) as usize;
        for idx in start..start + size {
            beta[n][idx] = r.beta;
            for (col, g) in gamma[n].iter_mut().zip(&r.gamma) {
                col[idx] = *g;
            }
        }
    }
    if beta
        .iter()
        .chain(gamma.iter().flatten())
        .any(|t| t.iter().any(|x| x.is_nan()))
    {
        return Err(bad("strategy does not cover every time and atom".into()));
    }
    let table = |v: Vec<f64>| PathTable::new(space, v).expect("sized to the space");
    Ok(Strategy::new(
        space,
        beta.into_iter().map(table).collect(),
        gamma
            .into_iter()
            .map(|g| g.into_iter().map(table).collect())
            .collect(),
    )?)
}
