//! Replay of recorded candle and combo-trade streams through the shared
//! belief state: all-YES canonicalization with fee cancellation, field
//! initialization from candles, and the full-market and standalone modes.

mod canon;
mod run;
mod stream;
mod synth;

pub use canon::{canonicalize, expansion_prob, expansion_terms, grad_expansion, init_from_candles, CanonicalTarget};
pub use run::{bucket_returns, replay, sharpe, FillRecord, ReplayConfig, ReplayEngine, ReplayMode, ReplayReport, TradeTruth};
pub use stream::{check_sorted, read_stream, write_stream, CandleRecord, ComboTrade, MarketIndex, Side, StreamEvent};
pub use synth::{market_key, synthetic_stream, SyntheticConfig, SyntheticStream};
