use std::path::PathBuf;

use blockspt_core::deviation_bounds::{finite_pcor_upper, finite_perr_upper, rate_lower, rate_upper, RateBound};
use blockspt_core::finite_prob::p_ub_ag_from;
use blockspt_core::integral_geometry::{cap_bound_grid, perr_pipeline, v_last, CapInput, PerrCurve, RegressionParams};
use blockspt_core::monte_carlo::{cap_measure_sim_grid, estimate_perr, SimReport};
use blockspt_core::phase_transition::pt_curve;
use blockspt_core::BlockShape;
use rayon::prelude::*;

use crate::config::{parse_eps_range, parse_m_range, thread_count, FileConfig};
use crate::output::{write_csv, Row};
use crate::plot::{emit_plot, Plot, Series};
use crate::{Cli, Command, Fail};

const TABLE_BETA: f64 = 1.0 / 3.0;
const TABLE_ALPHAS: [[f64; 5]; 4] = [
    [0.65, 0.71, 0.77, 0.83, 0.89],
    [0.59, 0.64, 0.69, 0.74, 0.79],
    [0.57, 0.53, 0.49, 0.45, 0.41],
    [0.55, 0.51, 0.47, 0.43, 0.39],
];
const TABLE_EPS: [[f64; 5]; 2] = [[0.5, 0.6, 0.7, 0.8, 0.9], [0.6, 0.65, 0.7, 0.75, 0.8]];
const CAP_TRIALS: u64 = 100_000;

/// Flags merged over the config file, with defaults filled in.
struct Settings {
    out: PathBuf,
    trials: Option<u64>,
    seed: u64,
    d: usize,
    k: usize,
    n: usize,
    m_range: Option<(usize, usize)>,
    alpha: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    eps: Option<Vec<f64>>,
    source: Source,
    regression: RegressionParams,
    plot: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Source {
    Analytic,
    Simulated,
    Both,
}

impl Settings {
    fn resolve(cli: &Cli) -> Result<(Self, Option<usize>), Fail> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let m_range = cli.m_range.clone().or(file.m_range).map(|s| parse_m_range(&s)).transpose()?;
        let eps = cli.eps_range.clone().or(file.eps_range).map(|s| parse_eps_range(&s)).transpose()?;
        let source = match cli.source.clone().or(file.source).as_deref() {
            None | Some("both") => Source::Both,
            Some("analytic") => Source::Analytic,
            Some("simulated") => Source::Simulated,
            Some(other) => return Err(Fail::Config(format!("unknown source '{other}' (analytic, simulated, both)"))),
        };
        let mut regression = RegressionParams::default();
        if let Some(l) = cli.lambda_reg.or(file.lambda_reg) {
            if !(l > 0.0) {
                return Err(Fail::Config(format!("lambda_reg={l} must be positive")));
            }
            regression.lambda_reg = l;
        }
        if let Some(t) = cli.kkt_tol.or(file.kkt_tol) {
            if !(t > 0.0) {
                return Err(Fail::Config(format!("kkt_tol={t} must be positive")));
            }
            regression.kkt_tol = t;
        }
        let grid = |name: &str, g: Option<Vec<f64>>| -> Result<Option<Vec<f64>>, Fail> {
            match g {
                Some(v) if v.is_empty() => Err(Fail::Config(format!("empty {name} grid"))),
                Some(v) if v.iter().any(|&x| !(x > 0.0 && x <= 1.0)) => {
                    Err(Fail::Config(format!("{name} values must lie in (0, 1]")))
                }
                g => Ok(g),
            }
        };
        let s = Settings {
            out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            trials: cli.trials.or(file.trials),
            seed: cli.seed.or(file.seed).unwrap_or(1),
            d: cli.d.or(file.d).unwrap_or(2),
            k: cli.k.or(file.k).unwrap_or(6),
            n: cli.n.or(file.n).unwrap_or(18),
            m_range,
            alpha: grid("alpha", cli.alpha.clone().or(file.alpha))?,
            beta: grid("beta", cli.beta.clone().or(file.beta))?,
            eps,
            source,
            regression,
            plot: !cli.no_plot && file.plot.unwrap_or(true),
        };
        Ok((s, thread_count(cli.threads.or(file.threads))?))
    }

    fn shape_at(&self, m: usize) -> Result<BlockShape, Fail> {
        BlockShape::new(self.d, self.k, self.n, m).map_err(|e| Fail::Config(e.to_string()))
    }

    fn ms(&self) -> Result<Vec<BlockShape>, Fail> {
        let (lo, hi) = self.m_range.unwrap_or((self.d * self.k + 1, self.d * self.n - 1));
        (lo..=hi).map(|m| self.shape_at(m)).collect()
    }

    fn beta_single(&self) -> Result<f64, Fail> {
        match self.beta.as_deref() {
            None => Ok(TABLE_BETA),
            Some([b]) => Ok(*b),
            Some(_) => Err(Fail::Config("this command takes a single --beta".into())),
        }
    }

    fn trials_or(&self, default: u64) -> Result<u64, Fail> {
        match self.trials.unwrap_or(default) {
            0 => Err(Fail::Config("--trials must be positive".into())),
            t => Ok(t),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, Fail> {
    let (s, threads) = Settings::resolve(cli)?;
    if let Some(t) = threads {
        // a second initialization only happens in tests; keep the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    std::fs::create_dir_all(&s.out).map_err(|e| Fail::Io(format!("{}: {e}", s.out.display())))?;
    let mut out = Output { settings: &s, written: Vec::new() };
    match cli.command {
        Command::PtCurve => pt_curve_cmd(&mut out)?,
        Command::LdpUpper => ldp_cmd(&mut out, true)?,
        Command::LdpLower => ldp_cmd(&mut out, false)?,
        Command::FiniteBound => finite_cmd(&mut out)?,
        Command::CapMeasure => cap_cmd(&mut out)?,
        Command::Crofton => crofton_cmd(&mut out)?,
        Command::AgBound => ag_cmd(&mut out)?,
        Command::Simulate => simulate_cmd(&mut out)?,
        Command::ReproduceTable { number } => table_cmd(&mut out, number)?,
        Command::ReproduceFigure { number } => figure_cmd(&mut out, number)?,
    }
    Ok(out.written)
}

struct Output<'a> {
    settings: &'a Settings,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    fn csv(&mut self, name: &str, rows: &[Row]) -> Result<(), Fail> {
        let p = self.settings.path(name);
        write_csv(&p, rows)?;
        self.written.push(p);
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: &Plot) -> Result<(), Fail> {
        if !self.settings.plot {
            return Ok(());
        }
        let p = self.settings.path(name);
        emit_plot(plot, &p)?;
        self.written.push(p);
        Ok(())
    }
}

fn rate_row(r: &RateBound, upper: bool) -> Row {
    let mut row = Row::new(if upper { "rate_upper" } else { "rate_lower" }, r.exponent);
    (row.d, row.alpha, row.beta) = (Some(r.d), Some(r.alpha), Some(r.beta));
    (row.param_c3s, row.param_gammas, row.param_lambda) = (Some(r.params.c3s), Some(r.params.gammas), Some(r.params.lambda));
    row
}

fn rates(alphas: &[f64], beta: f64, d: usize, upper: bool) -> Result<Vec<RateBound>, Fail> {
    alphas
        .par_iter()
        .map(|&a| {
            if !(beta < a) {
                return Err(Fail::Config(format!("need beta < alpha, got beta={beta} alpha={a}")));
            }
            let r = if upper { rate_upper(a, beta, d) } else { rate_lower(a, beta, d) };
            r.map_err(Fail::numeric(if upper { "rate_upper" } else { "rate_lower" }))
        })
        .collect()
}

fn sim_row(quantity: &str, shape: &BlockShape, r: &SimReport) -> Row {
    let mut row = Row::new(quantity, r.p_hat).shape(shape.d, shape.k, shape.n, Some(shape.m)).ci(r.ci_low, r.ci_high);
    row.seed = Some(r.seed);
    row
}

fn series(name: &str, points: Vec<(f64, f64)>) -> Series {
    Series { name: name.into(), points }
}

fn pt_rows(d: usize, betas: &[f64]) -> Result<Vec<Row>, Fail> {
    let (points, failures) = pt_curve(d, betas);
    for (b, e) in &failures {
        eprintln!("warning: alpha_weak failed at beta={b}: {e}");
    }
    if points.is_empty() {
        return Err(Fail::Numeric { op: "pt_curve", msg: "no grid point succeeded".into() });
    }
    Ok(points
        .iter()
        .flat_map(|p| {
            let mut a = Row::new("alpha_w", p.alpha_w);
            (a.d, a.alpha, a.beta) = (Some(d), Some(p.alpha_w), Some(p.beta_w));
            let mut t = Row::new("theta_hat", p.theta_hat);
            (t.d, t.alpha, t.beta) = (Some(d), Some(p.alpha_w), Some(p.beta_w));
            [a, t]
        })
        .collect())
}

fn default_betas() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn pt_curve_cmd(out: &mut Output) -> Result<(), Fail> {
    let s = out.settings;
    let betas = s.beta.clone().unwrap_or_else(default_betas);
    if betas.windows(2).any(|w| w[1] <= w[0]) || betas.iter().any(|&b| b >= 1.0) {
        return Err(Fail::Config("beta grid must be strictly increasing inside (0, 1)".into()));
    }
    let rows = pt_rows(s.d, &betas)?;
    out.csv("pt_curve.csv", &rows)?;
    let pts = rows.iter().filter(|r| r.quantity == "alpha_w").map(|r| (r.value, r.beta.unwrap_or(0.0))).collect();
    out.svg(
        "pt_curve.svg",
        &Plot {
            title: format!("Weak threshold, d={}", s.d),
            x_label: "alpha".into(),
            y_label: "beta".into(),
            series: vec![series(&format!("d={}", s.d), pts)],
        },
    )
}

fn ldp_cmd(out: &mut Output, upper: bool) -> Result<(), Fail> {
    let s = out.settings;
    let alphas = s.alpha.clone().ok_or_else(|| Fail::Config("--alpha is required".into()))?;
    let beta = s.beta_single()?;
    let rows: Vec<Row> = rates(&alphas, beta, s.d, upper)?.iter().map(|r| rate_row(r, upper)).collect();
    out.csv(if upper { "ldp_upper.csv" } else { "ldp_lower.csv" }, &rows)
}

fn finite_rows(shapes: &[BlockShape]) -> Result<Vec<Row>, Fail> {
    let parts: Vec<Vec<Row>> = shapes
        .par_iter()
        .map(|sh| {
            let e = finite_perr_upper(sh).map_err(Fail::numeric("finite_perr_upper"))?;
            let c = finite_pcor_upper(sh).map_err(Fail::numeric("finite_pcor_upper"))?;
            let row = |q: &str, b: &blockspt_core::deviation_bounds::FiniteBound| {
                let mut r = Row::new(q, b.bound).shape(sh.d, sh.k, sh.n, Some(sh.m));
                (r.param_c3s, r.param_gammas, r.param_lambda) = (Some(b.params.c3s), Some(b.params.gammas), Some(b.params.lambda));
                r.param_t1 = Some(b.params.t1);
                r
            };
            Ok(vec![row("p_ub_ldp", &e), row("p_cor_ub", &c)])
        })
        .collect::<Result<_, Fail>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn finite_cmd(out: &mut Output) -> Result<(), Fail> {
    let rows = finite_rows(&out.settings.ms()?)?;
    out.csv("finite_bound.csv", &rows)
}

fn cap_rows(shape: &BlockShape, eps: &[f64], trials: u64, seed: u64) -> Result<Vec<Row>, Fail> {
    let bounds = cap_bound_grid(shape, eps).map_err(Fail::numeric("cap_bound"))?;
    let mut rows: Vec<Row> = bounds
        .iter()
        .map(|b| {
            let mut r = Row::new("cap_bound", b.bound).shape(shape.d, shape.k, shape.n, None);
            (r.eps, r.param_lambda) = (Some(b.eps), Some(b.lambda));
            r
        })
        .collect();
    if trials > 0 {
        let sims = cap_measure_sim_grid(shape, eps, trials, seed).map_err(Fail::numeric("cap_measure_sim"))?;
        for (e, r) in eps.iter().zip(&sims) {
            let mut row = Row::new("cap_sim", r.p_hat).shape(shape.d, shape.k, shape.n, None).ci(r.ci_low, r.ci_high);
            (row.eps, row.seed) = (Some(*e), Some(r.seed));
            rows.push(row);
        }
    }
    Ok(rows)
}

fn cap_cmd(out: &mut Output) -> Result<(), Fail> {
    let s = out.settings;
    let eps = s.eps.clone().ok_or_else(|| Fail::Config("--eps-range is required".into()))?;
    let shape = s.shape_at(s.d * s.n)?;
    let trials = s.trials.unwrap_or(0);
    out.csv("cap_measure.csv", &cap_rows(&shape, &eps, trials, s.seed)?)
}

fn default_eps(step: f64) -> Vec<f64> {
    let count = (0.6 / step + 1e-9).round() as usize;
    (0..=count).map(|i| 0.4 + step * i as f64).collect()
}

fn pipeline(s: &Settings, base: &BlockShape, eps: &[f64], input: CapInput, ms: (usize, usize)) -> Result<PerrCurve, Fail> {
    perr_pipeline(base, eps, input, ms.0..=ms.1, &s.regression).map_err(Fail::numeric("perr_pipeline"))
}

fn curve_rows(quantity: &str, base: &BlockShape, c: &PerrCurve) -> Vec<Row> {
    if c.flagged() {
        eprintln!("warning: {quantity} raw curve rises by {:.3} somewhere; isotonic values reported", c.max_raw_violation);
    }
    c.points
        .iter()
        .flat_map(|p| {
            let sm = Row::new(quantity, p.monotone).shape(base.d, base.k, base.n, Some(p.m));
            let raw = Row::new(&format!("{quantity}_raw"), p.raw).shape(base.d, base.k, base.n, Some(p.m));
            [sm, raw]
        })
        .collect()
}

fn crofton_cmd(out: &mut Output) -> Result<(), Fail> {
    let s = out.settings;
    let shapes = s.ms()?;
    let base = shapes[0];
    let ms = (shapes[0].m, shapes[shapes.len() - 1].m);
    let eps = s.eps.clone().unwrap_or_else(|| default_eps(0.01));
    let mut rows = vec![Row::new("v_last", v_last(&base).map_err(Fail::numeric("v_last"))?).shape(base.d, base.k, base.n, None)];
    if s.source != Source::Analytic {
        let input = CapInput::Simulated { trials: s.trials_or(CAP_TRIALS)?, seed: s.seed };
        let mut r = curve_rows("p_num", &base, &pipeline(s, &base, &eps, input, ms)?);
        r.iter_mut().for_each(|x| x.seed = Some(s.seed));
        rows.extend(r);
    }
    if s.source != Source::Simulated {
        rows.extend(curve_rows("p_apx", &base, &pipeline(s, &base, &eps, CapInput::Analytic, ms)?));
    }
    out.csv("crofton.csv", &rows)
}

fn ag_rows(shapes: &[BlockShape]) -> Result<Vec<Row>, Fail> {
    // sequential so each point starts from its neighbour's optimum
    let mut start = None;
    let mut rows = Vec::with_capacity(shapes.len());
    for sh in shapes {
        let r = p_ub_ag_from(sh, start).map_err(Fail::numeric("p_ub_ag"))?;
        start = Some((r.t1, r.lambda));
        let mut row = Row::new("p_ub_ag", r.p_ub_ag).shape(sh.d, sh.k, sh.n, Some(sh.m));
        (row.param_lambda, row.param_t1) = (Some(r.lambda), Some(r.t1));
        rows.push(row);
    }
    Ok(rows)
}

fn ag_cmd(out: &mut Output) -> Result<(), Fail> {
    let rows = ag_rows(&out.settings.ms()?)?;
    out.csv("ag_bound.csv", &rows)
}

fn sim_rows(shapes: &[BlockShape], trials: u64, seed: u64) -> Result<Vec<Row>, Fail> {
    let mut rows = Vec::with_capacity(shapes.len());
    for sh in shapes {
        let r = estimate_perr(sh, trials, seed).map_err(Fail::numeric("estimate_perr"))?;
        if r.indeterminate > 0 {
            eprintln!("note: M={}: {} of {trials} solves indeterminate, excluded", sh.m, r.indeterminate);
        }
        rows.push(sim_row("p_sim", sh, &r));
    }
    Ok(rows)
}

fn simulate_cmd(out: &mut Output) -> Result<(), Fail> {
    let s = out.settings;
    let rows = sim_rows(&s.ms()?, s.trials_or(1000)?, s.seed)?;
    out.csv("simulate.csv", &rows)
}

fn table_cmd(out: &mut Output, number: u8) -> Result<(), Fail> {
    let s = out.settings;
    let rows = match number {
        1..=4 => {
            let upper = number <= 2;
            let d = if number % 2 == 1 { 2 } else { 10 };
            let alphas = &TABLE_ALPHAS[number as usize - 1];
            rates(alphas, TABLE_BETA, d, upper)?.iter().map(|r| rate_row(r, upper)).collect()
        }
        _ => {
            let d = if number == 5 { 2 } else { 10 };
            let shape = BlockShape::new(d, 6, 18, 18 * d).map_err(|e| Fail::Config(e.to_string()))?;
            cap_rows(&shape, &TABLE_EPS[number as usize - 5], s.trials_or(CAP_TRIALS)?, s.seed)?
        }
    };
    out.csv(&format!("table{number}.csv"), &rows)
}

fn xy(rows: &[Row], quantity: &str, x: impl Fn(&Row) -> f64) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.quantity == quantity).map(|r| (x(r), r.value)).collect()
}

fn by_m(r: &Row) -> f64 {
    r.m.unwrap_or(0) as f64
}

fn alpha_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6).collect()
}

fn rate_curves(lo: f64, hi: f64, upper: bool) -> Result<Vec<Row>, Fail> {
    let mut rows = Vec::new();
    for d in [2, 10] {
        rows.extend(rates(&alpha_grid(lo, hi, 0.025), TABLE_BETA, d, upper)?.iter().map(|r| rate_row(r, upper)));
    }
    Ok(rows)
}

fn rate_series(rows: &[Row], quantity: &str, label: &str) -> Vec<Series> {
    [2, 10]
        .iter()
        .map(|&d| {
            let pts = rows
                .iter()
                .filter(|r| r.quantity == quantity && r.d == Some(d))
                .map(|r| (r.alpha.unwrap_or(0.0), r.value))
                .collect();
            series(&format!("{label}, d={d}"), pts)
        })
        .collect()
}

/// p_sim, p_num, p_apx and p_ub_ldp for one shape over an M range.
fn error_panel(s: &Settings, base: &BlockShape, ms: (usize, usize), eps: &[f64], trials: u64) -> Result<Vec<Row>, Fail> {
    let shapes: Vec<BlockShape> = (ms.0..=ms.1).map(|m| base.with_m(m).map_err(|e| Fail::Config(e.to_string()))).collect::<Result<_, _>>()?;
    let mut rows = sim_rows(&shapes, trials, s.seed)?;
    let num = pipeline(s, base, eps, CapInput::Simulated { trials: CAP_TRIALS, seed: s.seed }, ms)?;
    rows.extend(curve_rows("p_num", base, &num));
    rows.extend(curve_rows("p_apx", base, &pipeline(s, base, eps, CapInput::Analytic, ms)?));
    rows.extend(finite_rows(&shapes)?.into_iter().filter(|r| r.quantity == "p_ub_ldp"));
    Ok(rows)
}

fn error_plot(title: String, rows: &[Row], quantities: &[&str]) -> Plot {
    Plot {
        title,
        x_label: "M".into(),
        y_label: "probability of error".into(),
        series: quantities.iter().map(|q| series(q, xy(rows, q, by_m))).collect(),
    }
}

fn figure_cmd(out: &mut Output, number: u8) -> Result<(), Fail> {
    let s = out.settings;
    match number {
        1 => {
            let betas = default_betas();
            let mut rows = pt_rows(2, &betas)?;
            rows.extend(pt_rows(10, &betas)?);
            out.csv("figure1.csv", &rows)?;
            let curve = |d: usize| {
                let pts = rows
                    .iter()
                    .filter(|r| r.quantity == "alpha_w" && r.d == Some(d))
                    .map(|r| (r.value, r.beta.unwrap_or(0.0)))
                    .collect();
                series(&format!("d={d}"), pts)
            };
            out.svg(
                "figure1.svg",
                &Plot {
                    title: "Weak threshold curves".into(),
                    x_label: "alpha".into(),
                    y_label: "beta".into(),
                    series: vec![curve(2), curve(10)],
                },
            )
        }
        2 => {
            let rows = rate_curves(0.5, 0.95, true)?;
            out.csv("figure2.csv", &rows)?;
            out.svg(
                "figure2.svg",
                &Plot {
                    title: "Failure exponent bound, beta=1/3".into(),
                    x_label: "alpha".into(),
                    y_label: "exponent".into(),
                    series: rate_series(&rows, "rate_upper", "upper"),
                },
            )
        }
        3 => {
            let mut rows = rate_curves(0.5, 0.95, true)?;
            rows.extend(rate_curves(0.3, 0.65, false)?);
            out.csv("figure3.csv", &rows)?;
            let mut ser = rate_series(&rows, "rate_upper", "upper");
            ser.extend(rate_series(&rows, "rate_lower", "lower"));
            out.svg(
                "figure3.svg",
                &Plot { title: "Exponent bounds, beta=1/3".into(), x_label: "alpha".into(), y_label: "exponent".into(), series: ser },
            )
        }
        4 => {
            let base = BlockShape::new(2, 6, 18, 12).map_err(|e| Fail::Config(e.to_string()))?;
            let rows = error_panel(s, &base, (13, 35), &default_eps(0.01), s.trials_or(1000)?)?;
            out.csv("figure4.csv", &rows)?;
            out.svg("figure4.svg", &error_plot("d=2, k=6, n=18".into(), &rows, &["p_sim", "p_num", "p_apx", "p_ub_ldp"]))
        }
        5 => {
            let base = BlockShape::new(2, 24, 72, 48).map_err(|e| Fail::Config(e.to_string()))?;
            let rows = error_panel(s, &base, (48, 120), &default_eps(0.004), s.trials_or(200)?)?;
            out.csv("figure5.csv", &rows)?;
            out.svg("figure5.svg", &error_plot("d=2, k=24, n=72".into(), &rows, &["p_sim", "p_num", "p_apx", "p_ub_ldp"]))
        }
        _ => {
            let mut all = Vec::new();
            for (k, n, ms, trials) in [(6, 18, (13, 35), 1000), (24, 72, (48, 120), 200)] {
                let shapes: Vec<BlockShape> =
                    (ms.0..=ms.1).map(|m| BlockShape::new(2, k, n, m).map_err(|e| Fail::Config(e.to_string()))).collect::<Result<_, _>>()?;
                let mut rows = sim_rows(&shapes, s.trials_or(trials)?, s.seed)?;
                rows.extend(ag_rows(&shapes)?);
                rows.extend(finite_rows(&shapes)?.into_iter().filter(|r| r.quantity == "p_ub_ldp"));
                out.svg(
                    &format!("figure6_n{n}.svg"),
                    &error_plot(format!("d=2, k={k}, n={n}"), &rows, &["p_sim", "p_ub_ag", "p_ub_ldp"]),
                )?;
                all.extend(rows);
            }
            out.csv("figure6.csv", &all)
        }
    }
}
