//! Married-put backtest: a share position plus protective puts, switched
//! between half and full coverage on weekly direction predictions.
//!
//! Puts are European, priced with the lognormal closed form, struck
//! at-the-money on purchase and rolled at-the-money on expiry. Equity is
//! cash + shares · spot + Σ put values, so every weekly equity change splits
//! exactly into share P/L, option revaluation and cash flow.

use std::fmt;

use chrono::NaiveDate;

use crate::classify::Direction;
use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Year fraction of one calendar day (52 weeks of 7 days).
pub const YEAR_DAYS: f64 = 364.0;

/// European put value per share. At expiry, or with zero volatility, the
/// value is the (discounted) intrinsic value.
pub fn put_value(strike: f64, spot: f64, time_to_expiry: f64, vol: f64, rate: f64) -> Result<f64> {
    if vol < 0.0 {
        return Err(Error::NegativeVolatility(vol));
    }
    if !(strike > 0.0 && spot > 0.0 && rate >= 0.0 && time_to_expiry >= 0.0 && vol.is_finite()) {
        return Err(Error::Precondition(format!(
            "put inputs out of range: strike={strike} spot={spot} t={time_to_expiry} vol={vol} rate={rate}"
        )));
    }
    if time_to_expiry == 0.0 {
        return Ok((strike - spot).max(0.0));
    }
    let discounted = strike * (-rate * time_to_expiry).exp();
    if vol == 0.0 {
        return Ok((discounted - spot).max(0.0));
    }
    let sd = vol * time_to_expiry.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * time_to_expiry) / sd;
    let d2 = d1 - sd;
    let v = discounted * normal_cdf(-d2) - spot * normal_cdf(-d1);
    Ok(v.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HedgeMode {
    Partial,
    Full,
}

impl fmt::Display for HedgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HedgeMode::Partial => "partial",
            HedgeMode::Full => "full",
        })
    }
}

impl std::str::FromStr for HedgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partial" => Ok(HedgeMode::Partial),
            "full" => Ok(HedgeMode::Full),
            other => Err(Error::InvalidInput(format!("unknown hedge mode '{other}' (expected partial or full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PutPosition {
    pub strike: f64,
    pub shares: u64,
    /// Premium paid per share.
    pub premium: f64,
    pub purchased: NaiveDate,
    pub expiry: NaiveDate,
}

impl PutPosition {
    pub fn time_to_expiry(&self, date: NaiveDate) -> f64 {
        ((self.expiry - date).num_days().max(0)) as f64 / YEAR_DAYS
    }

    pub fn value(&self, date: NaiveDate, spot: f64, vol: f64, rate: f64) -> Result<f64> {
        Ok(self.shares as f64 * put_value(self.strike, spot, self.time_to_expiry(date), vol, rate)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub shares: u64,
    pub puts: Vec<PutPosition>,
    pub cash: f64,
    pub mode: HedgeMode,
}

impl PortfolioState {
    pub fn covered(&self) -> u64 {
        self.puts.iter().map(|p| p.shares).sum()
    }

    pub fn put_value(&self, ctx: &PricingContext) -> Result<f64> {
        self.puts.iter().map(|p| p.value(ctx.date, ctx.spot, ctx.vol, ctx.rate)).sum()
    }

    pub fn equity(&self, ctx: &PricingContext) -> Result<f64> {
        Ok(self.cash + self.shares as f64 * ctx.spot + self.put_value(ctx)?)
    }
}

/// Market state and trading terms at one decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingContext {
    pub date: NaiveDate,
    pub spot: f64,
    /// Annualized volatility.
    pub vol: f64,
    pub rate: f64,
    pub expiry_weeks: u32,
    pub block: u64,
    /// Fraction of model value given up when selling puts.
    pub haircut: f64,
}

impl PricingContext {
    fn buy_blocks(&self, shares: u64) -> Result<(Vec<PutPosition>, f64)> {
        let expiry = self.date + chrono::Days::new(7 * self.expiry_weeks as u64);
        let t = (expiry - self.date).num_days() as f64 / YEAR_DAYS;
        let premium = put_value(self.spot, self.spot, t, self.vol, self.rate)?;
        let blocks = shares / self.block;
        let puts = (0..blocks)
            .map(|_| PutPosition {
                strike: self.spot,
                shares: self.block,
                premium,
                purchased: self.date,
                expiry,
            })
            .collect();
        Ok((puts, premium * (blocks * self.block) as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// Bullish → bearish: puts bought to cover the whole position.
    ToFull,
    /// Bearish → bullish: the most recent put blocks sold.
    ToPartial,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::ToFull => "partial->full",
            TransitionKind::ToPartial => "full->partial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFlows {
    pub kind: Option<TransitionKind>,
    /// Signed cash change: −premiums bought + proceeds sold.
    pub cash: f64,
    pub premiums_paid: f64,
}

/// Apply one weekly prediction. Down while partial buys ATM puts on the
/// uncovered half; up while full sells the most recently bought half.
pub fn transition(state: &PortfolioState, prediction: Direction, ctx: &PricingContext) -> Result<(PortfolioState, TransitionFlows)> {
    let mut next = state.clone();
    let half = state.shares / 2;
    let flows = match (state.mode, prediction) {
        (HedgeMode::Partial, Direction::Down) => {
            let (puts, cost) = ctx.buy_blocks(half)?;
            next.puts.extend(puts);
            next.cash -= cost;
            next.mode = HedgeMode::Full;
            TransitionFlows {
                kind: Some(TransitionKind::ToFull),
                cash: -cost,
                premiums_paid: cost,
            }
        }
        (HedgeMode::Full, Direction::Up) => {
            let mut proceeds = 0.0;
            let mut released = 0;
            while released < half {
                let Some(p) = next.puts.pop() else { break };
                released += p.shares;
                proceeds += p.value(ctx.date, ctx.spot, ctx.vol, ctx.rate)? * (1.0 - ctx.haircut);
            }
            next.cash += proceeds;
            next.mode = HedgeMode::Partial;
            TransitionFlows {
                kind: Some(TransitionKind::ToPartial),
                cash: proceeds,
                premiums_paid: 0.0,
            }
        }
        _ => TransitionFlows {
            kind: None,
            cash: 0.0,
            premiums_paid: 0.0,
        },
    };
    Ok((next, flows))
}

/// Per-week annualized volatility source for pricing.
#[derive(Debug, Clone, PartialEq)]
pub enum VolSource {
    Constant(f64),
    Series(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub shares: u64,
    pub block: u64,
    pub vol: VolSource,
    pub rate: f64,
    pub expiry_weeks: u32,
    pub initial_mode: HedgeMode,
    pub haircut: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            shares: 1000,
            block: 500,
            vol: VolSource::Constant(0.2),
            rate: 0.0,
            expiry_weeks: 8,
            initial_mode: HedgeMode::Partial,
            haircut: 0.0,
        }
    }
}

impl BacktestConfig {
    fn validate(&self, weeks: usize) -> Result<()> {
        if self.block == 0 || self.shares == 0 || self.shares % 2 != 0 || (self.shares / 2) % self.block != 0 {
            return Err(Error::Precondition(format!(
                "shares/2 must be a positive multiple of the block size (shares={}, block={})",
                self.shares, self.block
            )));
        }
        if self.expiry_weeks == 0 {
            return Err(Error::Precondition("expiry horizon must be at least one week".into()));
        }
        if !(0.0..1.0).contains(&self.haircut) {
            return Err(Error::Precondition(format!("haircut must be in [0, 1), got {}", self.haircut)));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::Precondition(format!("rate must be >= 0, got {}", self.rate)));
        }
        if let VolSource::Series(v) = &self.vol {
            if v.len() != weeks {
                return Err(Error::LengthMismatch {
                    expected: weeks,
                    actual: v.len(),
                });
            }
        }
        Ok(())
    }

    fn vol_at(&self, week: usize) -> f64 {
        match &self.vol {
            VolSource::Constant(v) => *v,
            VolSource::Series(s) => s[week],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub date: NaiveDate,
    /// Prediction acted on this week; `None` on the opening row.
    pub prediction: Option<Direction>,
    pub mode: HedgeMode,
    pub spot: f64,
    pub equity: f64,
    pub share_pnl: f64,
    /// Change in total put value, including puts bought, sold, expired or rolled.
    pub option_change: f64,
    pub cash_flow: f64,
    pub premiums_paid: f64,
    pub cumulative_pnl: f64,
    pub transition: Option<TransitionKind>,
    pub rolled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestLedger {
    pub rows: Vec<LedgerRow>,
    pub initial_equity: f64,
    pub final_equity: f64,
    pub total_premiums: f64,
    pub final_state: PortfolioState,
}

/// Run the strategy over a weekly index. `predictions[t]` is acted on in
/// week `t` after marking to market; the last row's equity is the
/// liquidation value at model prices.
pub fn run_backtest(
    dates: &[NaiveDate],
    levels: &[f64],
    predictions: &[Direction],
    config: &BacktestConfig,
) -> Result<BacktestLedger> {
    if dates.len() != levels.len() {
        return Err(Error::LengthMismatch {
            expected: dates.len(),
            actual: levels.len(),
        });
    }
    if predictions.len() != levels.len() {
        return Err(Error::LengthMismatch {
            expected: levels.len(),
            actual: predictions.len(),
        });
    }
    if levels.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::UnorderedIndex(w[1]));
    }
    if let Some(i) = levels.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::NonPositivePrice(dates[i]));
    }
    config.validate(levels.len())?;

    let ctx_at = |t: usize| PricingContext {
        date: dates[t],
        spot: levels[t],
        vol: config.vol_at(t),
        rate: config.rate,
        expiry_weeks: config.expiry_weeks,
        block: config.block,
        haircut: config.haircut,
    };

    let ctx0 = ctx_at(0);
    let initial_cover = match config.initial_mode {
        HedgeMode::Partial => config.shares / 2,
        HedgeMode::Full => config.shares,
    };
    let (puts, cost) = ctx0.buy_blocks(initial_cover)?;
    let mut state = PortfolioState {
        shares: config.shares,
        puts,
        cash: 0.0,
        mode: config.initial_mode,
    };
    let mut total_premiums = cost;
    let initial_equity = state.equity(&ctx0)?;
    let mut rows = vec![LedgerRow {
        date: dates[0],
        prediction: None,
        mode: state.mode,
        spot: levels[0],
        equity: initial_equity,
        share_pnl: 0.0,
        option_change: 0.0,
        cash_flow: 0.0,
        premiums_paid: cost,
        cumulative_pnl: 0.0,
        transition: None,
        rolled: 0,
    }];

    // the opening prediction sets the first week's hedge
    let (s, f) = transition(&state, predictions[0], &ctx0)?;
    state = s;
    total_premiums += f.premiums_paid;
    {
        let row = rows.last_mut().unwrap();
        row.prediction = Some(predictions[0]);
        row.mode = state.mode;
        row.transition = f.kind;
        row.premiums_paid += f.premiums_paid;
        row.cash_flow = f.cash;
        row.equity = state.equity(&ctx0)?;
        row.option_change = row.equity - initial_equity - row.cash_flow;
        row.cumulative_pnl = row.equity - initial_equity;
    }

    let mut prev_equity = rows[0].equity;
    for t in 1..levels.len() {
        let ctx = ctx_at(t);
        let cash_before = state.cash;
        let mut premiums = 0.0;

        // settle expired puts at intrinsic and roll them at-the-money
        let mut rolled = 0;
        let mut kept = Vec::with_capacity(state.puts.len());
        for p in std::mem::take(&mut state.puts) {
            if p.expiry <= ctx.date {
                state.cash += p.shares as f64 * (p.strike - ctx.spot).max(0.0);
                let (mut fresh, cost) = ctx.buy_blocks(p.shares)?;
                let mut np = fresh.pop().expect("one block per expired position");
                np.shares = p.shares;
                state.cash -= cost;
                premiums += cost;
                kept.push(np);
                rolled += 1;
            } else {
                kept.push(p);
            }
        }
        state.puts = kept;

        let (s, f) = transition(&state, predictions[t], &ctx)?;
        state = s;
        premiums += f.premiums_paid;
        total_premiums += premiums;

        let equity = state.equity(&ctx)?;
        let share_pnl = config.shares as f64 * (levels[t] - levels[t - 1]);
        let cash_flow = state.cash - cash_before;
        // the put revaluation takes the mark's rounding residual so the
        // weekly decomposition stays exact at index-sized notionals
        let option_change = equity - prev_equity - share_pnl - cash_flow;
        rows.push(LedgerRow {
            date: dates[t],
            prediction: Some(predictions[t]),
            mode: state.mode,
            spot: levels[t],
            equity,
            share_pnl,
            option_change,
            cash_flow,
            premiums_paid: premiums,
            cumulative_pnl: equity - initial_equity,
            transition: f.kind,
            rolled,
        });
        prev_equity = equity;
    }
    Ok(BacktestLedger {
        rows,
        initial_equity,
        final_equity: prev_equity,
        total_premiums,
        final_state: state,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;

    fn path() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(-0.1f64..0.1, n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
    }

    fn ledger(steps: &[f64], ups: &[bool], cfg: &BacktestConfig) -> BacktestLedger {
        let d0 = NaiveDate::from_ymd_opt(2011, 1, 7).unwrap();
        let dates: Vec<NaiveDate> = (0..steps.len()).map(|i| d0 + Days::new(7 * i as u64)).collect();
        let mut s = 11_000.0;
        let levels: Vec<f64> = steps.iter().map(|r| { s *= r.exp(); s }).collect();
        let preds: Vec<Direction> = ups.iter().map(|&u| if u { Direction::Up } else { Direction::Down }).collect();
        run_backtest(&dates, &levels, &preds, cfg).unwrap()
    }

    proptest! {
        #[test]
        fn weekly_change_decomposes((steps, ups) in path(), rate in 0.0f64..0.08, expiry in 1u32..10) {
            let cfg = BacktestConfig { rate, expiry_weeks: expiry, ..Default::default() };
            let l = ledger(&steps, &ups, &cfg);
            for w in l.rows.windows(2) {
                let parts = w[1].share_pnl + w[1].option_change + w[1].cash_flow;
                prop_assert!((w[1].equity - w[0].equity - parts).abs() < 1e-9);
            }
        }

        #[test]
        fn full_hedge_loss_bounded_by_premiums((steps, _) in path()) {
            let cfg = BacktestConfig { initial_mode: HedgeMode::Full, ..Default::default() };
            let downs = vec![false; steps.len()];
            let l = ledger(&steps, &downs, &cfg);
            prop_assert!(l.final_equity - l.initial_equity >= -l.total_premiums - 1e-6);
        }

        #[test]
        fn cover_matches_mode((steps, ups) in path()) {
            let l = ledger(&steps, &ups, &BacktestConfig::default());
            let s = &l.final_state;
            let want = match s.mode { HedgeMode::Partial => s.shares / 2, HedgeMode::Full => s.shares };
            prop_assert_eq!(s.covered(), want);
        }
    }
}
