//! `mvledger`: adjusted closing prices, portfolio paths, and the two
//! mean-variance models from the command line.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use mvledger::bundle::{load_bundle, save_bundle, Bundle};
use mvledger::linear::{linear_moments, orthogonalize, Pivot};
use mvledger::market_data::{
    align_panel, build_adjusted_closes, parse_distribution_csv, parse_quote_csv, parse_split_csv, read_panel_csv,
    write_panel_csv, PricePanel, PriceSeries, DEFAULT_BASE, PANEL_DECIMALS,
};
use mvledger::portfolio::{parse_weights_csv, parse_weights_inline, reallocated_path_from, unattended_path, Weights};
use mvledger::report::{frontier_csv, identity_csv, linear_csv, moments_csv, parse_moments_csv};
use mvledger::returns::interest_identity_report;
use mvledger::traditional::{
    efficient_frontier, estimate_moments, reallocated_esig_path, unattended_esig_path, MomentTable,
};

use svg::{Chart, Marker, Series};

const TABLE_DECIMALS: usize = 4;

#[derive(Parser)]
#[command(
    name = "mvledger",
    version,
    about = "Ex-post mean-variance analysis on adjusted closing prices"
)]
struct Cli {
    /// Directory that relative input paths fall back to.
    #[arg(long, env = "MVLEDGER_DATA_DIR", global = true)]
    data_dir: Option<PathBuf>,
    /// Normalization date (YYYY-MM-DD).
    #[arg(long, global = true)]
    anchor: Option<NaiveDate>,
    /// Value every series takes on the anchor date.
    #[arg(long, global = true, default_value_t = DEFAULT_BASE)]
    base: f64,
    /// Periods per year used for annualization.
    #[arg(long, global = true, default_value_t = 252)]
    ppy: u32,
    /// Write here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Decimal places (default 5 for panels, 4 for tables).
    #[arg(long, global = true)]
    precision: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a normalized adjusted-close column from closes and distributions.
    Adjust {
        /// Quote CSV (Date,...,Close,... or date,close).
        quotes: PathBuf,
        /// Distribution CSV (ex_date,amount).
        #[arg(long)]
        dividends: Option<PathBuf>,
        /// Split CSV (ex_date,ratio).
        #[arg(long)]
        splits: Option<PathBuf>,
        /// Column label (defaults to the file stem).
        #[arg(long)]
        label: Option<String>,
    },
    /// Rescale every column of a panel to `--base` on `--anchor`.
    Normalize { panel: PathBuf },
    /// Align quote files into one normalized panel (`LABEL=path` or `path`).
    Panel {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Append a portfolio price path to a panel.
    Paths {
        panel: PathBuf,
        /// Weights file (label,proportion) or inline `FBT=0.75,XBI=0.25`.
        #[arg(long)]
        weights: String,
        #[arg(long, value_enum, default_value_t = Mode::Unattended)]
        mode: Mode,
        /// Label of the new column.
        #[arg(long, default_value = "P")]
        label: String,
        /// Starting value of a reallocated path (defaults to the anchor base).
        #[arg(long)]
        start: Option<f64>,
    },
    /// Moment table of a panel.
    Moments {
        panel: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Traditional)]
        model: Model,
    },
    /// Long-only efficient frontier from a panel or a traditional moment table.
    Frontier {
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Orthogonal risk decomposition, written as a bundle.
    Decompose {
        panel: PathBuf,
        /// Comma-separated pivots, each a label or `A-B` (default: every column).
        #[arg(long)]
        pivots: Option<String>,
        /// Columns to store (default: all).
        #[arg(long)]
        keep: Option<String>,
        /// Legend lines stored with the bundle.
        #[arg(long)]
        legend: Vec<String>,
    },
    /// Rebuild the stored price histories of a bundle.
    Reconstruct { bundle: PathBuf },
    /// Mean-return versus total-return diagnostics per column.
    IdentityCheck { panel: PathBuf },
    /// Render a chart as SVG.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        /// Panel CSV (prices, esig), moment table (esig), or bundle / panel (riskplane).
        input: PathBuf,
        /// Samples along each path.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Pivots when `riskplane` is given a panel.
        #[arg(long)]
        pivots: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Buy and hold; long-only weights.
    Unattended,
    /// Rebalanced every period; long-only weights.
    Reallocated,
    /// Buy and hold; short positions allowed.
    Longshort,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Traditional,
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Prices,
    Esig,
    Riskplane,
}

struct Ctx {
    data_dir: Option<PathBuf>,
    anchor: Option<NaiveDate>,
    base: f64,
    ppy: f64,
    precision: Option<usize>,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if p.is_relative() && !p.exists() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn read(&self, p: &Path) -> Result<String> {
        let path = self.resolve(p);
        fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))
    }

    fn decimals(&self, default: usize) -> usize {
        self.precision.unwrap_or(default)
    }

    /// A panel, renormalized at `--anchor` when given, otherwise carrying the
    /// first date on which every column equals `--base`, if any.
    fn panel(&self, p: &Path) -> Result<PricePanel> {
        let panel = read_panel_csv(&self.read(p)?).with_context(|| format!("in {}", p.display()))?;
        Ok(match self.anchor {
            Some(date) => panel.normalized(date, self.base)?,
            None => match panel.detect_anchor(self.base) {
                Some(a) => panel.with_anchor(a)?,
                None => panel,
            },
        })
    }

    fn weights(&self, spec: &str) -> Result<Weights> {
        let path = self.resolve(Path::new(spec));
        if path.is_file() {
            return parse_weights_csv(&self.read(&path)?).with_context(|| format!("in {}", path.display()));
        }
        parse_weights_inline(spec).with_context(|| format!("weights {spec:?} are neither a file nor inline pairs"))
    }
}

fn label_of(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "X".into(), |s| s.to_string_lossy().into_owned())
}

fn list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

fn adjust(
    ctx: &Ctx,
    quotes: &Path,
    dividends: Option<&Path>,
    splits: Option<&Path>,
    label: Option<String>,
) -> Result<String> {
    let q = parse_quote_csv(&ctx.read(quotes)?).with_context(|| format!("in {}", quotes.display()))?;
    let Some(first) = q.first() else {
        bail!("{} has no quotes", quotes.display())
    };
    let events = match dividends {
        Some(p) => parse_distribution_csv(&ctx.read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    let sp = match splits {
        Some(p) => parse_split_csv(&ctx.read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    let label = label.unwrap_or_else(|| label_of(quotes));
    let anchor = ctx.anchor.unwrap_or(first.date);
    let s = build_adjusted_closes(&label, &q, &events, &sp, anchor, ctx.base)?;
    series_panel(&[s], ctx)
}

fn series_panel(series: &[PriceSeries], ctx: &Ctx) -> Result<String> {
    let panel = align_panel(series)?;
    Ok(write_panel_csv(&panel, ctx.decimals(PANEL_DECIMALS)))
}

fn build_panel(ctx: &Ctx, inputs: &[String]) -> Result<String> {
    let mut raw = Vec::new();
    for input in inputs {
        let (label, path) = match input.split_once('=') {
            Some((l, p)) => (l.trim().to_string(), PathBuf::from(p.trim())),
            None => (label_of(Path::new(input)), PathBuf::from(input)),
        };
        let q = parse_quote_csv(&ctx.read(&path)?).with_context(|| format!("in {}", path.display()))?;
        let values = q.iter().map(|x| x.adj_close.unwrap_or(x.close)).collect();
        raw.push(
            PriceSeries::new(label, q.iter().map(|x| x.date).collect(), values)
                .with_context(|| format!("in {}", path.display()))?,
        );
    }
    let panel = align_panel(&raw)?;
    let anchor = ctx.anchor.unwrap_or(panel.dates()[0]);
    Ok(write_panel_csv(
        &panel.normalized(anchor, ctx.base)?,
        ctx.decimals(PANEL_DECIMALS),
    ))
}

fn paths(ctx: &Ctx, panel: &Path, weights: &str, mode: Mode, label: &str, start: Option<f64>) -> Result<String> {
    let mut panel = ctx.panel(panel)?;
    let w = ctx.weights(weights)?;
    if mode != Mode::Longshort && !w.is_long_only() {
        bail!(
            "{} mode needs long-only weights; use --mode longshort for short positions",
            mode_name(mode)
        );
    }
    let path = match mode {
        Mode::Unattended | Mode::Longshort => unattended_path(&panel, &w, label)?,
        Mode::Reallocated => {
            let start = start.unwrap_or_else(|| panel.anchor().map_or(DEFAULT_BASE, |a| a.base));
            reallocated_path_from(&panel, &w, label, start)?
        }
    };
    if path.nonpositive {
        eprintln!("warning: {label} is not positive on every date");
    }
    panel.push_column(label, path.values)?;
    Ok(write_panel_csv(&panel, ctx.decimals(PANEL_DECIMALS)))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Unattended => "unattended",
        Mode::Reallocated => "reallocated",
        Mode::Longshort => "longshort",
    }
}

fn moment_table(ctx: &Ctx, input: &Path) -> Result<MomentTable> {
    let text = ctx.read(input)?;
    if text.trim_start().starts_with("row,") {
        return parse_moments_csv(&text).with_context(|| format!("in {}", input.display()));
    }
    Ok(estimate_moments(&ctx.panel(input)?, ctx.ppy)?)
}

fn pivots_for(spec: Option<&str>, labels: &[String]) -> Result<Vec<Pivot>> {
    match spec {
        Some(s) => Ok(list(s)
            .iter()
            .map(|p| Pivot::parse(p, labels))
            .collect::<mvledger::Result<_>>()?),
        None => Ok(labels.iter().map(|l| Pivot::Column(l.clone())).collect()),
    }
}

fn decompose(ctx: &Ctx, panel: &Path, pivots: Option<&str>, keep: Option<&str>, legend: Vec<String>) -> Result<String> {
    let panel = ctx.panel(panel)?;
    let rt = linear_moments(&panel)?;
    let basis = orthogonalize(&rt, &pivots_for(pivots, &rt.labels)?)?;
    for s in &basis.skipped {
        eprintln!(
            "note: pivot {} skipped (residual ratio {:.1e})",
            s.pivot, s.residual_ratio
        );
    }
    let keep = keep.map_or_else(|| rt.labels.clone(), list);
    let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
    let b = Bundle::from_basis(&basis, &rt, &keep, legend)?;
    Ok(save_bundle(&b))
}

fn identity(ctx: &Ctx, panel: &Path) -> Result<String> {
    let panel = ctx.panel(panel)?;
    let rows = panel
        .labels()
        .iter()
        .zip(panel.columns())
        .map(|(l, c)| Ok((l.clone(), interest_identity_report(c, ctx.ppy)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(identity_csv(&rows, ctx.decimals(TABLE_DECIMALS)))
}

fn plot(ctx: &Ctx, kind: PlotKind, input: &Path, points: usize, pivots: Option<&str>) -> Result<String> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let chart = match kind {
        PlotKind::Prices => {
            let panel = ctx.panel(input)?;
            let dates = panel.dates();
            let t0 = dates[0];
            Chart {
                title: "Normalized adjusted closing prices".into(),
                x_label: "days".into(),
                y_label: "price".into(),
                lines: panel
                    .labels()
                    .iter()
                    .zip(panel.columns())
                    .map(|(l, c)| Series {
                        label: l.clone(),
                        points: dates
                            .iter()
                            .zip(c)
                            .map(|(d, v)| ((*d - t0).num_days() as f64, *v))
                            .collect(),
                    })
                    .collect(),
                x_tick_labels: Some((t0.to_string(), dates[dates.len() - 1].to_string())),
                ..Chart::default()
            }
        }
        PlotKind::Esig => {
            let text = ctx.read(input)?;
            let from_table = text.trim_start().starts_with("row,");
            let mt = moment_table(ctx, input)?;
            let mut lines = Vec::new();
            if mt.labels.len() >= 2 {
                let (a, b) = (&mt.labels[0], &mt.labels[1]);
                let re = reallocated_esig_path(&mt, a, b, points)?;
                lines.push(Series {
                    label: format!("reallocated {a}-{b}"),
                    points: re.iter().map(|p| (p.sigma, p.e)).collect(),
                });
                if !from_table {
                    let un = unattended_esig_path(&ctx.panel(input)?, a, b, points, ctx.ppy)?;
                    lines.push(Series {
                        label: format!("unattended {a}-{b}"),
                        points: un.iter().map(|p| (p.sigma, p.e)).collect(),
                    });
                }
            }
            Chart {
                title: "Obtainable (e, sigma)".into(),
                x_label: "sigma".into(),
                y_label: "e".into(),
                lines,
                markers: mt
                    .labels
                    .iter()
                    .zip(mt.sigma.iter().zip(&mt.mean))
                    .map(|(l, (s, e))| Marker {
                        label: l.clone(),
                        at: (*s, *e),
                    })
                    .collect(),
                ..Chart::default()
            }
        }
        PlotKind::Riskplane => {
            let text = ctx.read(input)?;
            let b = if text.starts_with("#U") {
                load_bundle(&text).with_context(|| format!("in {}", input.display()))?
            } else {
                let panel = ctx.panel(input)?;
                let rt = linear_moments(&panel)?;
                let basis = orthogonalize(&rt, &pivots_for(pivots, &rt.labels)?)?;
                let keep: Vec<&str> = rt.labels.iter().map(String::as_str).collect();
                Bundle::from_basis(&basis, &rt, &keep, Vec::new())?
            };
            if b.ztilde.nrows() < 2 {
                bail!(
                    "the risk plane needs at least two basis vectors, found {}",
                    b.ztilde.nrows()
                );
            }
            Chart {
                title: "The xy-plane in risk space".into(),
                x_label: "x".into(),
                y_label: "y".into(),
                markers: b
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(j, l)| Marker {
                        label: l.clone(),
                        at: (b.ztilde[(0, j)], b.ztilde[(1, j)]),
                    })
                    .collect(),
                origin_axes: true,
                ..Chart::default()
            }
        }
    };
    Ok(chart.render())
}

fn run(cli: Cli) -> Result<()> {
    if !(cli.base.is_finite() && cli.base > 0.0) {
        bail!("--base must be positive");
    }
    if cli.ppy == 0 {
        bail!("--ppy must be positive");
    }
    let ctx = Ctx {
        data_dir: cli.data_dir,
        anchor: cli.anchor,
        base: cli.base,
        ppy: f64::from(cli.ppy),
        precision: cli.precision,
    };
    let output = match cli.command {
        Command::Adjust {
            quotes,
            dividends,
            splits,
            label,
        } => adjust(&ctx, &quotes, dividends.as_deref(), splits.as_deref(), label)?,
        Command::Normalize { panel } => {
            let p = read_panel_csv(&ctx.read(&panel)?).with_context(|| format!("in {}", panel.display()))?;
            let date = ctx.anchor.unwrap_or(p.dates()[0]);
            write_panel_csv(&p.normalized(date, ctx.base)?, ctx.decimals(PANEL_DECIMALS))
        }
        Command::Panel { inputs } => build_panel(&ctx, &inputs)?,
        Command::Paths {
            panel,
            weights,
            mode,
            label,
            start,
        } => paths(&ctx, &panel, &weights, mode, &label, start)?,
        Command::Moments { panel, model } => {
            let p = ctx.panel(&panel)?;
            match model {
                Model::Traditional => moments_csv(&estimate_moments(&p, ctx.ppy)?, ctx.decimals(TABLE_DECIMALS)),
                Model::Linear => linear_csv(&linear_moments(&p)?, ctx.decimals(TABLE_DECIMALS)),
            }
        }
        Command::Frontier { input, k } => frontier_csv(
            &efficient_frontier(&moment_table(&ctx, &input)?, k)?,
            ctx.decimals(TABLE_DECIMALS),
        ),
        Command::Decompose {
            panel,
            pivots,
            keep,
            legend,
        } => decompose(&ctx, &panel, pivots.as_deref(), keep.as_deref(), legend)?,
        Command::Reconstruct { bundle } => {
            let b = load_bundle(&ctx.read(&bundle)?).with_context(|| format!("in {}", bundle.display()))?;
            if b.dates.is_empty() {
                bail!("bundle has no dates to rebuild prices on");
            }
            write_panel_csv(&b.reconstruct(ctx.base)?, ctx.decimals(PANEL_DECIMALS))
        }
        Command::IdentityCheck { panel } => identity(&ctx, &panel)?,
        Command::Plot {
            kind,
            input,
            points,
            pivots,
        } => plot(&ctx, kind, &input, points, pivots.as_deref())?,
    };
    match cli.out {
        Some(path) => fs::write(&path, output).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(output.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
