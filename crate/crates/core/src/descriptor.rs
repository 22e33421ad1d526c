//! Text form of mean and generator descriptors.
//!
//! ```text
//! mean := "power:" REAL
//!       | "qa:" gen
//!       | "gini:" REAL "," REAL
//!       | "conj(" gen "," mean ")"
//!       | "ext(" mean ")"
//!       | "min" | "max"
//! gen  := "power:" REAL | "log" | "exp:" REAL
//! REAL := ["+" | "-"] DIGITS ["." DIGITS] [("e" | "E") ["+" | "-"] DIGITS]
//! ```
//!
//! `log` is `power:0`. Whitespace is allowed around the whole string only.

use std::fmt;

use crate::error::{Error, Result};
use crate::generator::GeneratorDescriptor;
use crate::means::{MeanDescriptor, MeanKind};

pub fn parse_mean(input: &str) -> Result<MeanDescriptor> {
    let mut p = Parser::new(input);
    let m = p.mean()?;
    p.finish()?;
    Ok(m)
}

pub fn parse_generator(input: &str) -> Result<GeneratorDescriptor> {
    let mut p = Parser::new(input);
    let g = p.generator()?;
    p.finish()?;
    Ok(g)
}

impl std::str::FromStr for MeanDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_mean(s)
    }
}

impl std::str::FromStr for GeneratorDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_generator(s)
    }
}

impl fmt::Display for MeanDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            MeanKind::Power(r) => write!(f, "power:{r}"),
            MeanKind::QuasiArithmetic(g) => write!(f, "qa:{g}"),
            MeanKind::Gini(r, s) => write!(f, "gini:{r},{s}"),
            MeanKind::Conjugate { base, gen } => write!(f, "conj({gen},{base})"),
            MeanKind::Custom(c) => f.write_str(c.name()),
            MeanKind::Extended(base) => write!(f, "ext({base})"),
        }
    }
}

struct Parser<'a> {
    input: &'a str,
    start: usize,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        let start = input.len() - input.trim_start().len();
        Self {
            input,
            start,
            pos: start,
        }
    }

    fn error(&self, pos: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            input: self.input.to_string(),
            pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(self.pos, format!("expected {token:?}")))
        }
    }

    fn finish(&mut self) -> Result<()> {
        let trailing = self.rest().trim_end();
        if trailing.is_empty() {
            Ok(())
        } else if self.pos == self.start {
            Err(self.error(self.pos, "empty descriptor"))
        } else {
            Err(self.error(self.pos, format!("unexpected trailing input {trailing:?}")))
        }
    }

    fn real(&mut self) -> Result<f64> {
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        let digits = |i: &mut usize| {
            let from = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > from
        };
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if !digits(&mut i) {
            return Err(self.error(self.pos + i, "expected a decimal number"));
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            if !digits(&mut i) {
                return Err(self.error(self.pos + i, "expected digits after '.'"));
            }
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            i += 1;
            if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                i += 1;
            }
            if !digits(&mut i) {
                return Err(self.error(self.pos + i, "expected exponent digits"));
            }
        }
        let text = &self.rest()[..i];
        let v: f64 = text
            .parse()
            .map_err(|_| self.error(self.pos, format!("invalid number {text:?}")))?;
        if !v.is_finite() {
            return Err(self.error(self.pos, format!("number {text:?} is out of range")));
        }
        self.pos += i;
        Ok(v)
    }

    fn generator(&mut self) -> Result<GeneratorDescriptor> {
        let at = self.pos;
        let g = if self.eat("power:") {
            GeneratorDescriptor::power(self.real()?)
        } else if self.eat("exp:") {
            GeneratorDescriptor::exp(self.real()?)
        } else if self.eat("log") {
            Ok(GeneratorDescriptor::log())
        } else {
            return Err(self.error(at, "expected a generator: power:R, log or exp:A"));
        };
        g.map_err(|e| self.error(at, e.to_string()))
    }

    fn mean(&mut self) -> Result<MeanDescriptor> {
        let at = self.pos;
        if self.eat("power:") {
            let r = self.real()?;
            return MeanDescriptor::power(r).map_err(|e| self.error(at, e.to_string()));
        }
        if self.eat("qa:") {
            return Ok(MeanDescriptor::quasi_arithmetic(self.generator()?));
        }
        if self.eat("gini:") {
            let r = self.real()?;
            self.expect(",")?;
            let s = self.real()?;
            return MeanDescriptor::gini(r, s).map_err(|e| self.error(at, e.to_string()));
        }
        if self.eat("conj(") {
            let gen = self.generator()?;
            self.expect(",")?;
            let base = self.mean()?;
            self.expect(")")?;
            return Ok(MeanDescriptor::conjugate(base, gen));
        }
        if self.eat("ext(") {
            let base = self.mean()?;
            self.expect(")")?;
            return MeanDescriptor::extended(base).map_err(|e| self.error(at, e.to_string()));
        }
        if self.eat("min") {
            return Ok(MeanDescriptor::min());
        }
        if self.eat("max") {
            return Ok(MeanDescriptor::max());
        }
        Err(self.error(
            at,
            "expected a mean: power:R, qa:GEN, gini:R,S, conj(GEN,MEAN), ext(MEAN), min or max",
        ))
    }
}
