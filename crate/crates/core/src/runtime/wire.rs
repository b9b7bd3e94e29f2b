//! Text wire format for round messages.
//!
//! A frame is a decimal byte length on its own line followed by the record:
//!
//! ```text
//! v1 <round> <phase> <sender> <receiver> <kind>
//! key=value
//! ...
//! ```
//!
//! Numbers use 17 significant digits so values survive the trip bit-exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    ThetaShare,
    ViolationShare,
    UboundShare,
    ConvFlag,
}

impl Kind {
    pub const ALL: [Kind; 4] = [
        Kind::ThetaShare,
        Kind::ViolationShare,
        Kind::UboundShare,
        Kind::ConvFlag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ThetaShare => "THETA_SHARE",
            Kind::ViolationShare => "VIOLATION_SHARE",
            Kind::UboundShare => "UBOUND_SHARE",
            Kind::ConvFlag => "CONV_FLAG",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// (bus index, θ per step)
    Theta(Vec<(usize, Vec<f64>)>),
    /// φ_viol per step
    Violation(Vec<f64>),
    /// Regional exact objective and gross cost.
    Bound {
        upper: f64,
        gross: f64,
    },
    Flag(bool),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Theta(_) => Kind::ThetaShare,
            Payload::Violation(_) => Kind::ViolationShare,
            Payload::Bound { .. } => Kind::UboundShare,
            Payload::Flag(_) => Kind::ConvFlag,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub round: usize,
    pub phase: String,
    pub sender: usize,
    pub receiver: usize,
    pub payload: Payload,
}

impl RoundMessage {
    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Record text without the length line.
pub fn encode(msg: &RoundMessage) -> String {
    let mut out = format!(
        "v1 {} {} {} {} {}\n",
        msg.round,
        msg.phase,
        msg.sender,
        msg.receiver,
        msg.kind().as_str()
    );
    match &msg.payload {
        Payload::Theta(rows) => {
            for (bus, vals) in rows {
                for (t, v) in vals.iter().enumerate() {
                    let _ = writeln!(out, "th.{bus}.{t}={}", num(*v));
                }
            }
        }
        Payload::Violation(vals) => {
            for (t, v) in vals.iter().enumerate() {
                let _ = writeln!(out, "viol.{t}={}", num(*v));
            }
        }
        Payload::Bound { upper, gross } => {
            let _ = writeln!(out, "ub={}", num(*upper));
            let _ = writeln!(out, "gross={}", num(*gross));
        }
        Payload::Flag(f) => {
            let _ = writeln!(out, "conv={}", u8::from(*f));
        }
    }
    out
}

pub fn decode(text: &str) -> Result<RoundMessage, WireError> {
    let bad = |m: &str| WireError::Malformed(m.to_string());
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty record"))?.split(' ').collect();
    if header.len() != 6 || header[0] != "v1" {
        return Err(bad("header must be `v1 <round> <phase> <sender> <receiver> <kind>`"));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad("non-integer header field"));
    let round = int(header[1])?;
    let phase = header[2].to_string();
    let sender = int(header[3])?;
    let receiver = int(header[4])?;
    let kind = Kind::parse(header[5]).ok_or_else(|| bad("unknown record kind"))?;
    let mut rows = Vec::new();
    for line in lines {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("row without `=`"))?;
        let v: f64 = v.parse().map_err(|_| bad("non-numeric value"))?;
        rows.push((k, v));
    }
    let payload = match kind {
        Kind::ThetaShare => {
            let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
            for (k, v) in rows {
                let mut it = k.split('.');
                if it.next() != Some("th") {
                    return Err(bad("theta rows are `th.<bus>.<t>`"));
                }
                let bus = int(it.next().unwrap_or(""))?;
                let t = int(it.next().unwrap_or(""))?;
                if it.next().is_some() {
                    return Err(bad("theta rows are `th.<bus>.<t>`"));
                }
                match out.last_mut() {
                    Some((b, vals)) if *b == bus && vals.len() == t => vals.push(v),
                    _ if t == 0 => out.push((bus, vec![v])),
                    _ => return Err(bad("theta rows out of order")),
                }
            }
            Payload::Theta(out)
        }
        Kind::ViolationShare => {
            let mut out = Vec::new();
            for (k, v) in rows {
                if k != format!("viol.{}", out.len()) {
                    return Err(bad("violation rows are `viol.<t>` in order"));
                }
                out.push(v);
            }
            Payload::Violation(out)
        }
        Kind::UboundShare => match rows.as_slice() {
            [("ub", u), ("gross", g)] => Payload::Bound { upper: *u, gross: *g },
            _ => return Err(bad("bound record needs `ub` then `gross`")),
        },
        Kind::ConvFlag => match rows.as_slice() {
            [("conv", f)] if *f == 0.0 || *f == 1.0 => Payload::Flag(*f == 1.0),
            _ => return Err(bad("flag record needs `conv=0|1`")),
        },
    };
    Ok(RoundMessage {
        round,
        phase,
        sender,
        receiver,
        payload,
    })
}

/// Length-prefixed frame around an encoded record.
pub fn frame(record: &str) -> Vec<u8> {
    let mut out = format!("{}\n", record.len()).into_bytes();
    out.extend_from_slice(record.as_bytes());
    out
}

pub fn write_frame(w: &mut impl Write, record: &str) -> std::io::Result<()> {
    w.write_all(&frame(record))?;
    w.flush()
}

/// Read one frame; `Ok(None)` at a clean end of stream.
pub fn read_frame(r: &mut impl BufRead) -> Result<Option<String>, WireError> {
    let mut len = String::new();
    if r.read_line(&mut len)? == 0 {
        return Ok(None);
    }
    let n: usize = len
        .trim_end()
        .parse()
        .map_err(|_| WireError::Malformed("bad frame length".into()))?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf)
        .map(Some)
        .map_err(|_| WireError::Malformed("frame is not UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(payload: Payload) -> RoundMessage {
        RoundMessage {
            round: 7,
            phase: "FMBC".into(),
            sender: 1,
            receiver: 2,
            payload,
        }
    }

    #[test]
    fn round_trips_bit_exactly() {
        let awkward = [0.1 + 0.2, -1.0 / 3.0, 1e-300, 12345.678901234567, 0.0, -0.0];
        for p in [
            Payload::Theta(vec![(3, awkward.to_vec()), (9, vec![1.5])]),
            Payload::Violation(awkward.to_vec()),
            Payload::Bound {
                upper: 1.0 / 7.0,
                gross: 2.0f64.sqrt(),
            },
            Payload::Flag(true),
            Payload::Flag(false),
        ] {
            let m = msg(p);
            let text = encode(&m);
            let back = decode(&text).unwrap();
            assert_eq!(encode(&back), text);
            match (&m.payload, &back.payload) {
                (Payload::Violation(a), Payload::Violation(b)) => {
                    assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
                }
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn header_layout() {
        let text = encode(&msg(Payload::Flag(true)));
        assert_eq!(text, "v1 7 FMBC 1 2 CONV_FLAG\nconv=1\n");
        let text = encode(&msg(Payload::Violation(vec![0.5])));
        assert_eq!(text.lines().nth(1), Some("viol.0=5.0000000000000000e-1"));
    }

    #[test]
    fn rejects_unknown_kinds_and_rows() {
        assert!(decode("v1 1 FMRC 0 1 COST_CURVE\nomega=1\n").is_err());
        assert!(decode("v1 1 FMRC 0 1 CONV_FLAG\nomega=1\n").is_err());
        assert!(decode("v2 1 FMRC 0 1 CONV_FLAG\nconv=1\n").is_err());
    }

    #[test]
    fn frames_stream() {
        let a = encode(&msg(Payload::Flag(true)));
        let b = encode(&msg(Payload::Violation(vec![1.0, 2.0])));
        let mut bytes = frame(&a);
        bytes.extend(frame(&b));
        let mut r = std::io::Cursor::new(bytes);
        assert_eq!(read_frame(&mut r).unwrap().as_deref(), Some(a.as_str()));
        assert_eq!(read_frame(&mut r).unwrap().as_deref(), Some(b.as_str()));
        assert!(read_frame(&mut r).unwrap().is_none());
    }
}
