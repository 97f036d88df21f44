use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const BLOCK: usize = 2880;
pub const CARD: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Logical(bool),
    Integer(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Integer(i) => Some(*i),
            Value::Real(r) if r.fract() == 0.0 => Some(*r as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Card {
    pub keyword: String,
    pub value: Option<Value>,
    pub comment: Option<String>,
}

impl Card {
    pub fn new(keyword: &str, value: Value, comment: Option<&str>) -> Self {
        Self { keyword: keyword.to_string(), value: Some(value), comment: comment.map(str::to_string) }
    }

    pub fn parse(raw: &[u8]) -> Result<Self> {
        if raw.len() != CARD || raw.iter().any(|b| !(0x20..=0x7e).contains(b)) {
            return Err(Error::Parse("header card is not 80 printable ASCII characters".into()));
        }
        let text = std::str::from_utf8(raw).expect("ascii");
        let keyword = text[..8].trim_end().to_string();
        if &text[8..10] != "= " || keyword == "COMMENT" || keyword == "HISTORY" {
            let rest = text[8..].trim_end();
            let comment = (!rest.is_empty()).then(|| rest.trim_start().to_string());
            return Ok(Self { keyword, value: None, comment });
        }
        let (value, comment) = parse_value(&text[10..])
            .map_err(|e| Error::Parse(format!("card {keyword}: {e}")))?;
        Ok(Self { keyword, value, comment })
    }

    pub fn render(&self) -> Result<[u8; CARD]> {
        let mut s = format!("{:<8}", self.keyword);
        if let Some(v) = &self.value {
            s.push_str("= ");
            match v {
                Value::Logical(b) => write!(s, "{:>20}", if *b { "T" } else { "F" }),
                Value::Integer(i) => write!(s, "{i:>20}"),
                Value::Real(r) => write!(s, "{:>20}", format_real(*r)),
                Value::Text(t) => write!(s, "{:<20}", format!("'{:<8}'", t.replace('\'', "''"))),
            }
            .expect("write to string");
            if let Some(c) = &self.comment {
                write!(s, " / {c}").expect("write to string");
            }
        } else if let Some(c) = &self.comment {
            write!(s, "  {c}").expect("write to string");
        }
        if s.len() > CARD || !s.is_ascii() {
            return Err(Error::Format(format!("card {} does not fit in 80 ASCII characters", self.keyword)));
        }
        let mut out = [b' '; CARD];
        out[..s.len()].copy_from_slice(s.as_bytes());
        Ok(out)
    }
}

fn format_real(r: f64) -> String {
    let s = format!("{r:E}");
    if s.contains('.') {
        s
    } else {
        s.replacen('E', ".0E", 1)
    }
}

fn parse_value(field: &str) -> std::result::Result<(Option<Value>, Option<String>), String> {
    let trimmed = field.trim_start();
    if let Some(body) = trimmed.strip_prefix('\'') {
        let mut text = String::new();
        let mut chars = body.char_indices().peekable();
        let mut end = None;
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if chars.peek().map(|&(_, n)| n) == Some('\'') {
                    text.push('\'');
                    chars.next();
                } else {
                    end = Some(i + 1);
                    break;
                }
            } else {
                text.push(c);
            }
        }
        let end = end.ok_or("unterminated string")?;
        let comment = body[end..].trim().strip_prefix('/').map(|c| c.trim().to_string());
        return Ok((Some(Value::Text(text.trim_end().to_string())), comment));
    }
    let (raw, comment) = match trimmed.split_once('/') {
        Some((v, c)) => (v.trim(), Some(c.trim().to_string())),
        None => (trimmed.trim(), None),
    };
    let value = match raw {
        "" => None,
        "T" => Some(Value::Logical(true)),
        "F" => Some(Value::Logical(false)),
        _ => Some(if let Ok(i) = raw.parse::<i64>() {
            Value::Integer(i)
        } else {
            Value::Real(raw.replace(['D', 'd'], "E").parse::<f64>().map_err(|_| format!("bad value {raw:?}"))?)
        }),
    };
    Ok((value, comment))
}

/// An ordered list of header cards, without the END card.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Header {
    pub cards: Vec<Card>,
}

impl Header {
    pub fn get(&self, keyword: &str) -> Option<&Value> {
        self.cards.iter().find(|c| c.keyword == keyword).and_then(|c| c.value.as_ref())
    }

    pub fn int(&self, keyword: &str) -> Option<i64> {
        self.get(keyword).and_then(Value::as_i64)
    }

    pub fn text(&self, keyword: &str) -> Option<&str> {
        self.get(keyword).and_then(Value::as_str)
    }

    pub fn require_int(&self, keyword: &str) -> Result<i64> {
        self.int(keyword).ok_or_else(|| Error::Format(format!("missing integer card {keyword}")))
    }

    pub fn push(&mut self, keyword: &str, value: Value, comment: Option<&str>) {
        self.cards.push(Card::new(keyword, value, comment));
    }

    /// Cards plus END, padded with blanks to whole blocks.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity((self.cards.len() + 1) * CARD);
        for c in &self.cards {
            out.extend_from_slice(&c.render()?);
        }
        let mut end = [b' '; CARD];
        end[..3].copy_from_slice(b"END");
        out.extend_from_slice(&end);
        out.resize(out.len().div_ceil(BLOCK) * BLOCK, b' ');
        Ok(out)
    }

    /// Parses one block; returns true once END has been seen.
    pub(crate) fn extend_from_block(&mut self, block: &[u8]) -> Result<bool> {
        for raw in block.chunks(CARD) {
            if raw.starts_with(b"END") && raw[3..].iter().all(|&b| b == b' ') {
                return Ok(true);
            }
            if raw.iter().all(|&b| b == b' ') {
                continue;
            }
            self.cards.push(Card::parse(raw)?);
        }
        Ok(false)
    }

    /// Bytes of data following this header, before block padding.
    pub(crate) fn data_bytes(&self) -> Result<u64> {
        let naxis = self.require_int("NAXIS")?;
        if naxis == 0 {
            return Ok(0);
        }
        let bitpix = self.require_int("BITPIX")?;
        let mut n: u64 = 1;
        for k in 1..=naxis {
            let len = self.require_int(&format!("NAXIS{k}"))?;
            n = n.checked_mul(u64::try_from(len).map_err(|_| Error::Format(format!("negative NAXIS{k}")))?)
                .ok_or_else(|| Error::Format("data size overflows".into()))?;
        }
        let pcount = self.int("PCOUNT").unwrap_or(0) as u64;
        let gcount = self.int("GCOUNT").unwrap_or(1) as u64;
        Ok(bitpix.unsigned_abs() / 8 * gcount * (pcount + n))
    }
}

pub(crate) fn padded(bytes: u64) -> u64 {
    bytes.div_ceil(BLOCK as u64) * BLOCK as u64
}
