//! Occupation payoffs, Monte Carlo prices, Black-Scholes utilities,
//! calibration losses and static replication from vanilla prices.

mod bs;
mod calibration;
mod mc;
mod payoff;
mod replication;

pub use bs::{bs_price, bs_vega, implied_vol, norm_cdf, norm_pdf, OptionType};
pub use calibration::{calibration_loss, read_quotes, synthetic_quotes, write_quotes, CalibrationLoss, QuoteRow};
pub use mc::{corridor_var_strike_mc, mc_price, timer_price_mc, PriceEstimate, TimerEstimate};
pub use payoff::{evaluate_payoff, timer_step, PayoffSpec};
pub use replication::{bl_occupation_strike, range_accrual_static, PriceSurface};
