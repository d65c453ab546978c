use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::bs::{bs_price, bs_vega, implied_vol, OptionType};
use crate::error::{OccError, Result};

/// One quoted vanilla option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteRow {
    pub strike: f64,
    pub maturity: f64,
    #[serde(rename = "type")]
    pub kind: OptionType,
    pub bid: f64,
    pub ask: f64,
}

impl QuoteRow {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.maturity > 0.0) {
            return Err(OccError::Format(format!(
                "quote needs positive strike and maturity: {self:?}"
            )));
        }
        if !(0.0 <= self.bid && self.bid <= self.ask) {
            return Err(OccError::Format(format!("quote needs 0 <= bid <= ask: {self:?}")));
        }
        Ok(())
    }
}

/// Reads `strike,maturity,type,bid,ask` rows.
pub fn read_quotes<R: Read>(input: R) -> Result<Vec<QuoteRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<QuoteRow>().enumerate() {
        let q = row.map_err(|e| OccError::Format(format!("quote row {}: {e}", i + 1)))?;
        q.validate()?;
        out.push(q);
    }
    Ok(out)
}

pub fn write_quotes<W: Write>(quotes: &[QuoteRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for q in quotes {
        w.serialize(q).map_err(|e| OccError::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| OccError::Format(e.to_string()))
}

/// Black-Scholes quotes with implied vols `sigma -/+ vol_spread / 2`;
/// puts below the forward, calls at or above.
pub fn synthetic_quotes(
    s0: f64,
    r: f64,
    q: f64,
    sigma: f64,
    strikes: &[f64],
    maturities: &[f64],
    vol_spread: f64,
) -> Result<Vec<QuoteRow>> {
    if !(sigma > 0.5 * vol_spread && vol_spread >= 0.0) {
        return Err(OccError::Config(format!(
            "vol spread {vol_spread} must lie in [0, 2 sigma), sigma={sigma}"
        )));
    }
    let mut out = Vec::with_capacity(strikes.len() * maturities.len());
    for &t in maturities {
        let fwd = s0 * ((r - q) * t).exp();
        for &k in strikes {
            let kind = if k < fwd { OptionType::Put } else { OptionType::Call };
            let quote = QuoteRow {
                strike: k,
                maturity: t,
                kind,
                bid: bs_price(s0, k, t, r, q, sigma - 0.5 * vol_spread, kind),
                ask: bs_price(s0, k, t, r, q, sigma + 0.5 * vol_spread, kind),
            };
            quote.validate()?;
            out.push(quote);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationLoss {
    /// `sqrt(mean |w_i (model_i - mid_i)|^2)`.
    pub loss: f64,
    /// `sqrt(mean |w_i (ask_i - bid_i)|^2) / 2`; a loss below it sits inside the spread on average.
    pub threshold: f64,
    /// `(max(vega_mid, vega_floor))^-1 sigma_bid / sigma_ask`.
    pub weights: Vec<f64>,
}

/// Vega-weighted root mean square distance between model and mid prices.
pub fn calibration_loss(
    model: &[f64],
    quotes: &[QuoteRow],
    s0: f64,
    r: f64,
    q: f64,
    vega_floor: f64,
) -> Result<CalibrationLoss> {
    if model.len() != quotes.len() || quotes.is_empty() {
        return Err(OccError::Dimension(format!(
            "{} model prices for {} quotes",
            model.len(),
            quotes.len()
        )));
    }
    if !(vega_floor > 0.0) {
        return Err(OccError::Config(format!("vega floor must be > 0, got {vega_floor}")));
    }
    let weights: Vec<f64> = quotes
        .iter()
        .map(|qt| {
            let iv = |p: f64| implied_vol(p, s0, qt.strike, qt.maturity, r, q, qt.kind);
            let ask = iv(qt.ask)?;
            if ask <= 0.0 {
                return Err(OccError::Domain(format!(
                    "zero ask implied vol for strike {} maturity {}",
                    qt.strike, qt.maturity
                )));
            }
            let bid = iv(qt.bid)?;
            let vega = bs_vega(s0, qt.strike, qt.maturity, r, q, iv(qt.mid())?);
            Ok(bid / ask / vega.max(vega_floor))
        })
        .collect::<Result<_>>()?;
    let n = quotes.len() as f64;
    let rms = |f: &dyn Fn(usize) -> f64| ((0..quotes.len()).map(|i| f(i).powi(2)).sum::<f64>() / n).sqrt();
    let loss = rms(&|i| weights[i] * (model[i] - quotes[i].mid()));
    let threshold = 0.5 * rms(&|i| weights[i] * (quotes[i].ask - quotes[i].bid));
    Ok(CalibrationLoss { loss, threshold, weights })
}
