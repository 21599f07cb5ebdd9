//! AIGER reader and writer (combinational subset).
//!
//! Both the ASCII (`aag`) and binary (`aig`) variants are supported. A literal
//! `l` encodes variable `l / 2` with complement bit `l & 1`; variable 0 is the
//! constant false. Anything after the AND section (symbol table, comments) is
//! kept verbatim as a trailer and written back unchanged.

use std::collections::{HashMap, HashSet};

use super::{Aig, NodeKind};
use crate::error::AigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AigerFormat {
    Ascii,
    Binary,
}

impl AigerFormat {
    pub fn from_extension(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "aag" => Some(AigerFormat::Ascii),
            "aig" => Some(AigerFormat::Binary),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            AigerFormat::Ascii => "aag",
            AigerFormat::Binary => "aig",
        }
    }
}

pub fn variable(literal: u64) -> u64 {
    literal >> 1
}

pub fn is_complemented(literal: u64) -> bool {
    literal & 1 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AndGate {
    pub lhs: u64,
    pub rhs0: u64,
    pub rhs1: u64,
}

/// Literal-level AIG exactly as stored in an AIGER file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralAig {
    pub max_var: u64,
    pub inputs: Vec<u64>,
    pub outputs: Vec<u64>,
    /// AND gates in topological order.
    pub ands: Vec<AndGate>,
    /// Symbol table and comment section, passed through untouched.
    pub trailer: Vec<u8>,
}

const LITERAL_LIMIT: u64 = u32::MAX as u64;

struct Header {
    m: u64,
    i: u64,
    l: u64,
    o: u64,
    a: u64,
}

fn parse_header(line: &str, magic: &str) -> Result<Header, AigError> {
    let mut parts = line.split(' ');
    if parts.next() != Some(magic) {
        return Err(AigError::MalformedHeader(format!("expected '{magic}' in {line:?}")));
    }
    let nums: Vec<u64> = parts
        .map(|p| p.parse::<u64>().map_err(|_| AigError::MalformedHeader(format!("bad field {p:?} in {line:?}"))))
        .collect::<Result<_, _>>()?;
    if nums.len() < 5 {
        return Err(AigError::MalformedHeader(format!("expected 'M I L O A', got {line:?}")));
    }
    // AIGER 1.9 extension fields B C J F describe sequential properties.
    if nums.len() > 9 {
        return Err(AigError::MalformedHeader(format!("too many header fields in {line:?}")));
    }
    let h = Header { m: nums[0], i: nums[1], l: nums[2], o: nums[3], a: nums[4] };
    if h.l > 0 {
        return Err(AigError::UnsupportedSequential(h.l as usize));
    }
    if nums[5..].iter().any(|&x| x > 0) {
        return Err(AigError::UnsupportedSequential(0));
    }
    if h.i.checked_add(h.a).map_or(true, |s| s > h.m) {
        return Err(AigError::MalformedHeader(format!("M={} smaller than I+L+A", h.m)));
    }
    Ok(h)
}

/// Cursor over newline-terminated ASCII lines of a byte buffer.
struct Lines<'a> {
    bytes: &'a [u8],
    pos: usize,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Lines { bytes, pos: 0, line_no: 0 }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        self.pos += (end + 1).min(rest.len());
        self.line_no += 1;
        let line = std::str::from_utf8(&rest[..end]).ok()?;
        Some(line.strip_suffix('\r').unwrap_or(line))
    }

    fn expect_line(&mut self, what: &str) -> Result<&'a str, AigError> {
        let line_no = self.line_no + 1;
        self.next_line().ok_or_else(|| AigError::MalformedBody { line: line_no, msg: format!("missing {what} line") })
    }

    fn literals(&mut self, what: &str, count: usize) -> Result<Vec<u64>, AigError> {
        let line = self.expect_line(what)?;
        let line_no = self.line_no;
        let lits: Vec<u64> = line
            .split(' ')
            .map(|t| t.parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| AigError::MalformedBody { line: line_no, msg: format!("bad {what} line {line:?}") })?;
        if lits.len() != count {
            return Err(AigError::MalformedBody {
                line: line_no,
                msg: format!("{what} line needs {count} literal(s), got {line:?}"),
            });
        }
        Ok(lits)
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos.min(self.bytes.len())..]
    }
}

/// Parses an ASCII (`aag`) file.
pub fn parse_aiger_ascii(bytes: &[u8]) -> Result<LiteralAig, AigError> {
    let mut lines = Lines::new(bytes);
    let header_line = lines.next_line().ok_or_else(|| AigError::MalformedHeader("empty input".into()))?;
    let h = parse_header(header_line, "aag")?;
    let max_lit = 2 * h.m + 1;
    let mut defined = HashSet::new();

    let mut inputs = Vec::with_capacity(h.i as usize);
    for _ in 0..h.i {
        let lit = lines.literals("input", 1)?[0];
        if lit < 2 || is_complemented(lit) || lit > max_lit || !defined.insert(variable(lit)) {
            return Err(AigError::MalformedBody { line: lines.line_no, msg: format!("invalid input literal {lit}") });
        }
        inputs.push(lit);
    }
    let mut outputs = Vec::with_capacity(h.o as usize);
    for _ in 0..h.o {
        let lit = lines.literals("output", 1)?[0];
        if lit > max_lit {
            return Err(AigError::UndefinedVariable { literal: lit, variable: variable(lit) });
        }
        outputs.push(lit);
    }
    let mut ands = Vec::with_capacity(h.a as usize);
    for _ in 0..h.a {
        let l = lines.literals("and", 3)?;
        let gate = AndGate { lhs: l[0], rhs0: l[1], rhs1: l[2] };
        if gate.lhs < 2 || is_complemented(gate.lhs) || gate.lhs > max_lit || !defined.insert(variable(gate.lhs)) {
            return Err(AigError::MalformedBody { line: lines.line_no, msg: format!("invalid AND lhs {}", gate.lhs) });
        }
        ands.push(gate);
    }
    let trailer = lines.rest().to_vec();

    for &lit in outputs.iter().chain(ands.iter().flat_map(|g| [&g.rhs0, &g.rhs1])) {
        let var = variable(lit);
        if var != 0 && !defined.contains(&var) {
            return Err(AigError::UndefinedVariable { literal: lit, variable: var });
        }
    }
    let ands = topo_sort_ands(ands)?;
    Ok(LiteralAig { max_var: h.m, inputs, outputs, ands, trailer })
}

/// Stable topological order of AND gates; gates already in order keep it.
fn topo_sort_ands(ands: Vec<AndGate>) -> Result<Vec<AndGate>, AigError> {
    let index: HashMap<u64, usize> = ands.iter().enumerate().map(|(i, g)| (variable(g.lhs), i)).collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; ands.len()];
    let mut order = Vec::with_capacity(ands.len());
    for root in 0..ands.len() {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let g = top.0;
            if top.1 < 2 {
                let lit = if top.1 == 0 { ands[g].rhs0 } else { ands[g].rhs1 };
                top.1 += 1;
                if let Some(&dep) = index.get(&variable(lit)) {
                    match mark[dep] {
                        Mark::Active => return Err(AigError::Cycle(variable(lit))),
                        Mark::New => {
                            mark[dep] = Mark::Active;
                            stack.push((dep, 0));
                        }
                        Mark::Done => {}
                    }
                }
            } else {
                mark[g] = Mark::Done;
                order.push(ands[g]);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Reads one unsigned LEB-style integer (7-bit groups, low group first).
fn read_varint(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    let mut value = 0u64;
    let mut shift = 0;
    loop {
        let b = *bytes.get(*pos)?;
        *pos += 1;
        if shift >= 64 {
            return None;
        }
        value |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            return Some(value);
        }
        shift += 7;
    }
}

fn write_varint(out: &mut Vec<u8>, mut value: u64) {
    while value >= 0x80 {
        out.push((value as u8 & 0x7f) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

/// Decodes `count` delta-encoded AND gates starting at `first_lhs`, without
/// checking that fanins precede their gate. Returns the gates and the number
/// of bytes consumed.
pub fn decode_and_deltas(bytes: &[u8], first_lhs: u64, count: usize) -> Result<(Vec<AndGate>, usize), AigError> {
    let mut pos = 0;
    let mut ands = Vec::with_capacity(count);
    for gate in 0..count {
        let lhs = first_lhs + 2 * gate as u64;
        let d0 = read_varint(bytes, &mut pos).ok_or(AigError::TruncatedDelta(gate))?;
        let d1 = read_varint(bytes, &mut pos).ok_or(AigError::TruncatedDelta(gate))?;
        let rhs0 = lhs
            .checked_sub(d0)
            .ok_or_else(|| AigError::InvalidDelta { gate, msg: format!("delta {d0} exceeds lhs {lhs}") })?;
        let rhs1 = rhs0.checked_sub(d1).ok_or_else(|| AigError::InvalidDelta {
            gate,
            msg: format!("delta {d1} exceeds rhs0 {rhs0} (would need rhs0 < rhs1)"),
        })?;
        ands.push(AndGate { lhs, rhs0, rhs1 });
    }
    Ok((ands, pos))
}

/// Parses a binary (`aig`) file.
pub fn parse_aiger_binary(bytes: &[u8]) -> Result<LiteralAig, AigError> {
    let mut lines = Lines::new(bytes);
    let header_line = lines.next_line().ok_or_else(|| AigError::MalformedHeader("empty input".into()))?;
    let h = parse_header(header_line, "aig")?;
    if h.m != h.i + h.l + h.a {
        return Err(AigError::InvalidDelta {
            gate: 0,
            msg: format!("M={} but I+L+A={}: AND lhs values cannot be strictly increasing", h.m, h.i + h.l + h.a),
        });
    }
    let max_lit = 2 * h.m + 1;
    let inputs: Vec<u64> = (1..=h.i).map(|v| 2 * v).collect();
    let mut outputs = Vec::with_capacity(h.o as usize);
    for _ in 0..h.o {
        let lit = lines.literals("output", 1)?[0];
        if lit > max_lit {
            return Err(AigError::UndefinedVariable { literal: lit, variable: variable(lit) });
        }
        outputs.push(lit);
    }
    let body = lines.rest();
    let (ands, used) = decode_and_deltas(body, 2 * (h.i + h.l + 1), h.a as usize)?;
    for (gate, g) in ands.iter().enumerate() {
        if g.rhs0 >= g.lhs {
            return Err(AigError::InvalidDelta { gate, msg: format!("zero delta makes gate {} its own fanin", g.lhs) });
        }
    }
    Ok(LiteralAig { max_var: h.m, inputs, outputs, ands, trailer: body[used..].to_vec() })
}

/// Parses either variant, dispatching on the magic word.
pub fn parse_aiger(bytes: &[u8]) -> Result<LiteralAig, AigError> {
    if bytes.starts_with(b"aag") {
        parse_aiger_ascii(bytes)
    } else if bytes.starts_with(b"aig") {
        parse_aiger_binary(bytes)
    } else {
        Err(AigError::MalformedHeader("missing 'aag' or 'aig' magic".into()))
    }
}

/// Parses and expands inverters in one step.
pub fn read_aig(bytes: &[u8], name: &str) -> Result<Aig, AigError> {
    super::expand_inverters(&parse_aiger(bytes)?, name)
}

impl LiteralAig {
    /// Edge-encoded view of a node-typed AIG: the constant maps to variable 0,
    /// PIs to variables 1..=I in order, AND gates follow in node order and
    /// NOT nodes become complemented literals.
    pub fn from_aig(aig: &Aig) -> Result<LiteralAig, AigError> {
        let mut lit = vec![u64::MAX; aig.len()];
        if let Some(c) = aig.constant {
            lit[c] = 0;
        }
        let mut next_var = 1u64;
        for &p in &aig.pis {
            lit[p] = 2 * next_var;
            next_var += 1;
        }
        let inputs: Vec<u64> = aig.pis.iter().map(|&p| lit[p]).collect();
        let mut ands = Vec::new();
        for (id, node) in aig.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Pi => {
                    if lit[id] == u64::MAX {
                        return Err(AigError::Invalid(format!("PI node {id} is neither an input nor the constant")));
                    }
                }
                NodeKind::Not => lit[id] = lit[node.fanins[0]] ^ 1,
                NodeKind::And => {
                    lit[id] = 2 * next_var;
                    next_var += 1;
                    ands.push(AndGate { lhs: lit[id], rhs0: lit[node.fanins[0]], rhs1: lit[node.fanins[1]] });
                }
            }
            if lit[id] != u64::MAX && lit[id] > LITERAL_LIMIT {
                return Err(AigError::FormatLimit(format!("literal {} exceeds {}", lit[id], LITERAL_LIMIT)));
            }
        }
        Ok(LiteralAig {
            max_var: next_var - 1,
            inputs,
            outputs: aig.pos.iter().map(|&o| lit[o]).collect(),
            ands,
            trailer: Vec::new(),
        })
    }

    /// Renumbers variables so inputs are 1..=I and AND gates follow in
    /// order, as the binary format requires.
    pub fn normalized(&self) -> LiteralAig {
        let mut map: HashMap<u64, u64> = HashMap::new();
        map.insert(0, 0);
        let mut next = 1;
        for &i in &self.inputs {
            map.insert(variable(i), next);
            next += 1;
        }
        for g in &self.ands {
            map.insert(variable(g.lhs), next);
            next += 1;
        }
        let remap = |l: u64| 2 * map[&variable(l)] + (l & 1);
        LiteralAig {
            max_var: next - 1,
            inputs: self.inputs.iter().map(|&l| remap(l)).collect(),
            outputs: self.outputs.iter().map(|&l| remap(l)).collect(),
            ands: self.ands.iter().map(|g| AndGate { lhs: remap(g.lhs), rhs0: remap(g.rhs0), rhs1: remap(g.rhs1) }).collect(),
            trailer: self.trailer.clone(),
        }
    }

    pub fn write(&self, format: AigerFormat) -> Result<Vec<u8>, AigError> {
        if 2 * self.max_var + 1 > LITERAL_LIMIT {
            return Err(AigError::FormatLimit(format!("max variable {} too large", self.max_var)));
        }
        let mut out = Vec::new();
        match format {
            AigerFormat::Ascii => {
                out.extend_from_slice(
                    format!("aag {} {} 0 {} {}\n", self.max_var, self.inputs.len(), self.outputs.len(), self.ands.len())
                        .as_bytes(),
                );
                for l in self.inputs.iter().chain(&self.outputs) {
                    out.extend_from_slice(format!("{l}\n").as_bytes());
                }
                for g in &self.ands {
                    out.extend_from_slice(format!("{} {} {}\n", g.lhs, g.rhs0, g.rhs1).as_bytes());
                }
            }
            AigerFormat::Binary => {
                let n = self.normalized();
                out.extend_from_slice(
                    format!("aig {} {} 0 {} {}\n", n.max_var, n.inputs.len(), n.outputs.len(), n.ands.len()).as_bytes(),
                );
                for l in &n.outputs {
                    out.extend_from_slice(format!("{l}\n").as_bytes());
                }
                for g in &n.ands {
                    let (hi, lo) = if g.rhs0 >= g.rhs1 { (g.rhs0, g.rhs1) } else { (g.rhs1, g.rhs0) };
                    write_varint(&mut out, g.lhs - hi);
                    write_varint(&mut out, hi - lo);
                }
            }
        }
        out.extend_from_slice(&self.trailer);
        Ok(out)
    }
}

/// Serializes a node-typed AIG; NOT nodes become complemented edges.
pub fn write_aiger(aig: &Aig, format: AigerFormat) -> Result<Vec<u8>, AigError> {
    LiteralAig::from_aig(aig)?.write(format)
}
