//! Text interchange format: a strict subset of OpenQASM 2.
//!
//! ```text
//! OPENQASM 2.0;
//! qreg q[3];
//! creg c[3];
//! // @output_permutation 1,0,2
//! u3(5.0000000000000000e-1,2.5000000000000000e-1,-1.2500000000000000e-1) q[1];
//! cx q[0],q[1];
//! measure q[2] -> c[2];
//! ```
//!
//! Supported statements: `u1 u2 u3 cx h swap barrier measure`. Angles are
//! plain decimal literals written with 17 significant digits. The optional
//! `@output_permutation` comment carries the circuit's output relabeling.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

pub const HEADER: &str = "OPENQASM 2.0;";
const PERMUTATION_PRAGMA: &str = "// @output_permutation";

fn gate_name(kind: GateKind) -> &'static str {
    match kind {
        GateKind::U1 => "u1",
        GateKind::U2 => "u2",
        GateKind::U3 => "u3",
        GateKind::CX => "cx",
        GateKind::H => "h",
        GateKind::Swap => "swap",
        GateKind::Barrier => "barrier",
        GateKind::Measure => "measure",
        GateKind::Su4 => "su4",
    }
}

fn kind_of(name: &str) -> Option<GateKind> {
    Some(match name {
        "u1" => GateKind::U1,
        "u2" => GateKind::U2,
        "u3" => GateKind::U3,
        "cx" => GateKind::CX,
        "h" => GateKind::H,
        "swap" => GateKind::Swap,
        "barrier" => GateKind::Barrier,
        _ => return None,
    })
}

pub fn emit_qasm(c: &Circuit) -> Result<String> {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&format!("qreg q[{}];\ncreg c[{}];\n", c.width(), c.width()));
    if !crate::circuit::is_identity_permutation(c.output_permutation()) {
        let perm: Vec<String> = c.output_permutation().iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("{PERMUTATION_PRAGMA} {}\n", perm.join(",")));
    }
    for g in c.gates() {
        match g.kind() {
            GateKind::Su4 => {
                return Err(Error::Unserializable("su4 blocks must be expanded before emission".into()));
            }
            GateKind::Measure => {
                let q = g.qubits()[0];
                out.push_str(&format!("measure q[{q}] -> c[{q}];\n"));
            }
            kind => {
                out.push_str(gate_name(kind));
                if !g.params().is_empty() {
                    let ps: Vec<String> = g.params().iter().map(|p| format!("{p:.16e}")).collect();
                    out.push_str(&format!("({})", ps.join(",")));
                }
                let qs: Vec<String> = g.qubits().iter().map(|q| format!("q[{q}]")).collect();
                out.push_str(&format!(" {};\n", qs.join(",")));
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.line, column: self.pos + 1, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with([' ', '\t']) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
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
            self.err(format!("expected `{token}`"))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, ch)| !(ch.is_ascii_alphanumeric() || ch == '_') || (i == 0 && ch.is_ascii_digit()))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return self.err("expected identifier");
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected integer");
        }
        let value = rest[..len].parse().or_else(|_| self.err("integer out of range"))?;
        self.pos += len;
        Ok(value)
    }

    fn real(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|ch: char| !(ch.is_ascii_digit() || matches!(ch, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(rest.len());
        match rest[..len].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => self.err("expected real literal"),
        }
    }

    fn indexed(&mut self, register: &str) -> Result<usize> {
        let start = self.pos;
        let name = self.ident()?;
        if name != register {
            self.pos = start;
            return self.err(format!("unknown register `{name}`"));
        }
        self.expect("[")?;
        let i = self.integer()?;
        self.expect("]")?;
        Ok(i)
    }

    fn end(&mut self) -> Result<()> {
        self.expect(";")?;
        self.skip_ws();
        let rest = &self.text[self.pos..];
        if rest.is_empty() || rest.starts_with("//") {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }
}

pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let mut header_seen = false;
    let mut qreg: Option<(String, usize)> = None;
    let mut creg: Option<(String, usize)> = None;
    let mut permutation: Option<(usize, Vec<usize>)> = None;
    let mut gates: Vec<(usize, usize, Gate)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let indent = raw.len() - raw.trim_start().len();
        let body = raw.trim_end();
        let mut cur = Cursor { text: body, pos: indent, line };
        let stmt = &body[indent..];
        if stmt.is_empty() {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix(PERMUTATION_PRAGMA) {
            let parsed: std::result::Result<Vec<usize>, _> =
                rest.split(',').map(|s| s.trim().parse::<usize>()).collect();
            match parsed {
                Ok(p) => permutation = Some((line, p)),
                Err(_) => return cur.err("malformed output permutation"),
            }
            continue;
        }
        if stmt.starts_with("//") {
            continue;
        }
        if !header_seen {
            if stmt != HEADER {
                return cur.err(format!("expected `{HEADER}`"));
            }
            header_seen = true;
            continue;
        }
        let word_start = cur.pos;
        let word = cur.ident()?;
        match word {
            "include" => {
                cur.skip_ws();
                if !cur.eat("\"qelib1.inc\"") {
                    return cur.err("only qelib1.inc may be included");
                }
                cur.end()?;
            }
            "qreg" | "creg" => {
                let name = cur.ident()?.to_string();
                cur.expect("[")?;
                let size = cur.integer()?;
                cur.expect("]")?;
                cur.end()?;
                let slot = if word == "qreg" { &mut qreg } else { &mut creg };
                if slot.is_some() {
                    cur.pos = word_start;
                    return cur.err(format!("second {word} declaration"));
                }
                *slot = Some((name, size));
            }
            _ => {
                let Some((qname, width)) = qreg.clone() else {
                    cur.pos = word_start;
                    return cur.err("gate before qreg declaration");
                };
                if word == "measure" {
                    let col = cur.pos + 1;
                    let q = cur.indexed(&qname)?;
                    cur.expect("->")?;
                    let Some((cname, _)) = creg.clone() else {
                        return cur.err("measure without creg declaration");
                    };
                    let bit = cur.indexed(&cname)?;
                    if bit != q {
                        return cur.err("measurement must target the classical bit with the qubit's index");
                    }
                    cur.end()?;
                    if q >= width {
                        return Err(Error::Parse { line, column: col, message: format!("qubit {q} out of range") });
                    }
                    gates.push((line, col, Gate::measure(q)));
                    continue;
                }
                let Some(kind) = kind_of(word) else {
                    cur.pos = word_start;
                    return cur.err(format!("unknown gate `{word}`"));
                };
                let mut params = Vec::new();
                if cur.eat("(") {
                    loop {
                        params.push(cur.real()?);
                        if cur.eat(")") {
                            break;
                        }
                        cur.expect(",")?;
                    }
                }
                let args_col = cur.pos + 1;
                let mut qubits = Vec::new();
                loop {
                    let col = cur.pos + 1;
                    let q = cur.indexed(&qname)?;
                    if q >= width {
                        return Err(Error::Parse { line, column: col, message: format!("qubit {q} out of range") });
                    }
                    qubits.push(q);
                    if !cur.eat(",") {
                        break;
                    }
                }
                cur.end()?;
                let gate = Gate::new(kind, params, qubits).map_err(|e| Error::Parse {
                    line,
                    column: args_col,
                    message: e.to_string(),
                })?;
                gates.push((line, word_start + 1, gate));
            }
        }
    }
    let Some((_, width)) = qreg else {
        return Err(Error::Parse { line: text.lines().count().max(1), column: 1, message: "missing qreg".into() });
    };
    match &creg {
        Some((_, n)) if *n == width => {}
        _ => {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                column: 1,
                message: format!("expected creg of size {width}"),
            })
        }
    }
    let mut c = Circuit::new(width);
    for (line, column, g) in gates {
        c.push(g).map_err(|e| Error::Parse { line, column, message: e.to_string() })?;
    }
    if let Some((line, p)) = permutation {
        c.set_output_permutation(p).map_err(|e| Error::Parse { line, column: 1, message: e.to_string() })?;
    }
    Ok(c)
}
