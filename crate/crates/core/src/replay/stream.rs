use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::ReplayError;
use crate::ising::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandleRecord {
    pub market_key: String,
    /// Milliseconds.
    pub timestamp: i64,
    pub mid: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboTrade {
    pub timestamp: i64,
    pub legs: Vec<(String, Side)>,
    pub exec_price: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    Candle(CandleRecord),
    Trade(ComboTrade),
}

impl StreamEvent {
    pub fn timestamp(&self) -> i64 {
        match self {
            StreamEvent::Candle(c) => c.timestamp,
            StreamEvent::Trade(t) => t.timestamp,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireLeg {
    market: String,
    side: Side,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Wire {
    Candle {
        market: String,
        ts: i64,
        mid: f64,
    },
    Trade {
        ts: i64,
        legs: Vec<WireLeg>,
        price: f64,
        size: f64,
    },
}

fn open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

impl CandleRecord {
    pub fn validate(&self) -> Result<(), String> {
        if !open_unit(self.mid) {
            return Err(format!("candle mid {} outside (0, 1)", self.mid));
        }
        Ok(())
    }
}

impl ComboTrade {
    pub fn validate(&self) -> Result<(), String> {
        if self.legs.is_empty() {
            return Err("trade has no legs".into());
        }
        if !open_unit(self.exec_price) {
            return Err(format!("exec price {} outside (0, 1)", self.exec_price));
        }
        if !(self.size > 0.0) || !self.size.is_finite() {
            return Err(format!("size {} must be positive", self.size));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, _) in &self.legs {
            if !seen.insert(k) {
                return Err(format!("market {k:?} appears twice"));
            }
        }
        Ok(())
    }
}

impl From<&StreamEvent> for Wire {
    fn from(e: &StreamEvent) -> Self {
        match e {
            StreamEvent::Candle(c) => Wire::Candle {
                market: c.market_key.clone(),
                ts: c.timestamp,
                mid: c.mid,
            },
            StreamEvent::Trade(t) => Wire::Trade {
                ts: t.timestamp,
                legs: t
                    .legs
                    .iter()
                    .map(|(m, s)| WireLeg {
                        market: m.clone(),
                        side: *s,
                    })
                    .collect(),
                price: t.exec_price,
                size: t.size,
            },
        }
    }
}

impl From<Wire> for StreamEvent {
    fn from(w: Wire) -> Self {
        match w {
            Wire::Candle { market, ts, mid } => StreamEvent::Candle(CandleRecord {
                market_key: market,
                timestamp: ts,
                mid,
            }),
            Wire::Trade { ts, legs, price, size } => StreamEvent::Trade(ComboTrade {
                timestamp: ts,
                legs: legs.into_iter().map(|l| (l.market, l.side)).collect(),
                exec_price: price,
                size,
            }),
        }
    }
}

/// Parse line-delimited JSON events; blank lines are skipped. Order is not
/// checked here.
pub fn read_stream(reader: impl BufRead) -> Result<Vec<StreamEvent>, ReplayError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| ReplayError::Parse { line: n + 1, message };
        let wire: Wire = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let event = StreamEvent::from(wire);
        match &event {
            StreamEvent::Candle(c) => c.validate(),
            StreamEvent::Trade(t) => t.validate(),
        }
        .map_err(parse_err)?;
        out.push(event);
    }
    Ok(out)
}

pub fn write_stream(events: &[StreamEvent], mut writer: impl Write) -> Result<(), ReplayError> {
    for e in events {
        let line = serde_json::to_string(&Wire::from(e)).expect("wire records serialize");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn check_sorted(events: &[StreamEvent]) -> Result<(), ReplayError> {
    for w in events.windows(2) {
        let (prev, ts) = (w[0].timestamp(), w[1].timestamp());
        if ts < prev {
            return Err(ReplayError::OutOfOrder { ts, prev });
        }
    }
    Ok(())
}

/// Market keys in sorted order, one bit each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarketIndex {
    keys: Vec<String>,
    bits: BTreeMap<String, usize>,
}

impl MarketIndex {
    pub fn new(keys: impl IntoIterator<Item = String>) -> Result<Self, ReplayError> {
        let mut keys: Vec<String> = keys.into_iter().collect();
        keys.sort();
        keys.dedup();
        if keys.len() > Mask::BITS as usize {
            return Err(ReplayError::Parse {
                line: 0,
                message: format!("{} markets exceed the {}-market cluster limit", keys.len(), Mask::BITS),
            });
        }
        let bits = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Ok(Self { keys, bits })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn get(&self, key: &str) -> Result<usize, ReplayError> {
        self.bits
            .get(key)
            .copied()
            .ok_or_else(|| ReplayError::UnknownMarket(key.to_string()))
    }

    /// `(YES mask, NO mask)` of a trade.
    pub fn split(&self, trade: &ComboTrade) -> Result<(Mask, Mask), ReplayError> {
        let (mut yes, mut no) = (0, 0);
        for (k, side) in &trade.legs {
            let bit = 1 << self.get(k)?;
            match side {
                Side::Yes => yes |= bit,
                Side::No => no |= bit,
            }
        }
        Ok((yes, no))
    }

    pub fn names(&self, mask: Mask) -> Vec<String> {
        (0..self.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.keys[i].clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"type":"candle","market":"LAL","ts":1000,"mid":0.55}
{"type":"trade","ts":2000,"legs":[{"market":"LAL","side":"YES"},{"market":"BOS","side":"NO"}],"price":0.21,"size":40.0}
"#;

    #[test]
    fn jsonl_round_trip() {
        let events = read_stream(SAMPLE.as_bytes()).unwrap();
        assert_eq!(events.len(), 2);
        assert!(matches!(&events[1], StreamEvent::Trade(t) if t.legs[1] == ("BOS".into(), Side::No)));
        let mut buf = Vec::new();
        write_stream(&events, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SAMPLE);
    }

    #[test]
    fn bad_records_report_their_line() {
        let text = "{\"type\":\"candle\",\"market\":\"A\",\"ts\":1,\"mid\":0.5}\n\n{\"type\":\"candle\",\"market\":\"A\",\"ts\":2,\"mid\":1.5}\n";
        match read_stream(text.as_bytes()) {
            Err(ReplayError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = r#"{"type":"trade","ts":1,"legs":[{"market":"A","side":"YES"},{"market":"A","side":"NO"}],"price":0.2,"size":1}"#;
        assert!(read_stream(dup.as_bytes()).is_err());
        assert!(read_stream(r#"{"type":"quote","ts":1}"#.as_bytes()).is_err());
    }

    #[test]
    fn order_check() {
        let c = |ts| {
            StreamEvent::Candle(CandleRecord {
                market_key: "A".into(),
                timestamp: ts,
                mid: 0.5,
            })
        };
        assert!(check_sorted(&[c(1), c(1), c(2)]).is_ok());
        assert!(matches!(
            check_sorted(&[c(2), c(1)]),
            Err(ReplayError::OutOfOrder { ts: 1, prev: 2 })
        ));
    }

    #[test]
    fn index_is_sorted_and_splits_sides() {
        let idx = MarketIndex::new(["b".to_string(), "a".into(), "c".into(), "a".into()]).unwrap();
        assert_eq!(idx.keys(), ["a", "b", "c"]);
        let t = ComboTrade {
            timestamp: 0,
            legs: vec![("c".into(), Side::Yes), ("a".into(), Side::No)],
            exec_price: 0.3,
            size: 1.0,
        };
        assert_eq!(idx.split(&t).unwrap(), (0b100, 0b001));
        assert!(matches!(idx.get("z"), Err(ReplayError::UnknownMarket(_))));
    }
}
