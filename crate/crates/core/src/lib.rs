//! Ex-post mean-variance analysis on adjusted closing prices.
//!
//! The crate builds normalized adjusted-closing-price panels, simulates
//! unattended (buy-and-hold) and continually reallocated portfolios, and
//! computes two moment models side by side:
//!
//! * the traditional model ([`traditional`]): annualized means and covariances
//!   of periodic returns, with an exact long-only efficient frontier;
//! * the linear model ([`linear`]): total returns `E0`, zero-sum risk vectors
//!   `Z0`, the Gram covariance `Z0'Z0`, and an orthonormal factorization.
//!
//! [`returns`] holds the return/discount calculus used to check which model
//! respects `(1 + r)(1 - d) = 1`.

pub mod bundle;
pub mod error;
pub mod fmt;
pub mod linear;
pub mod market_data;
pub mod portfolio;
pub mod report;
pub mod returns;
pub mod traditional;

pub use bundle::{load_bundle, save_bundle, Bundle};
pub use error::{Error, Result};
pub use linear::{gram, linear_moments, orthogonalize, OrthoBasis, Pivot, RiskTable};
pub use market_data::{
    align_panel, build_adjusted_closes, normalize, parse_quote_csv, read_panel_csv, write_panel_csv, Anchor,
    DistributionEvent, PricePanel, PriceSeries, RawQuote, SplitEvent,
};
pub use portfolio::{
    holdings_proportions, reallocated_path, reconstruct_from_risk, unattended_path, PortfolioPath, RiskCoordinates,
    Weights,
};
pub use traditional::{efficient_frontier, estimate_moments, portfolio_stats, FrontierResult, MomentTable};
