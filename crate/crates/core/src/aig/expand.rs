use std::collections::HashMap;

use super::aiger::{is_complemented, variable, LiteralAig};
use super::{validate_and_levelize, Aig, NodeId};
use crate::error::AigError;

/// Materializes complemented edges as explicit NOT nodes.
///
/// Each driven signal gets at most one inverter, created just before its
/// first consumer. References to variable 0 introduce a constant-false node
/// with id 0.
pub fn expand_inverters(lit: &LiteralAig, name: &str) -> Result<Aig, AigError> {
    let mut aig = Aig::new(name);
    let mut var_node: HashMap<u64, NodeId> = HashMap::new();
    let uses_constant = lit
        .outputs
        .iter()
        .chain(lit.ands.iter().flat_map(|g| [&g.rhs0, &g.rhs1]))
        .any(|&l| variable(l) == 0);
    if uses_constant {
        aig.nodes.push(super::AigNode::pi());
        aig.constant = Some(0);
        var_node.insert(0, 0);
    }
    for &i in &lit.inputs {
        let id = aig.add_pi();
        var_node.insert(variable(i), id);
    }

    let mut inverter: HashMap<NodeId, NodeId> = HashMap::new();
    for g in &lit.ands {
        let a = resolve(&mut aig, &var_node, &mut inverter, g.rhs0)?;
        let b = resolve(&mut aig, &var_node, &mut inverter, g.rhs1)?;
        let id = aig.add_and(a, b);
        var_node.insert(variable(g.lhs), id);
    }
    for &o in &lit.outputs {
        let id = resolve(&mut aig, &var_node, &mut inverter, o)?;
        aig.pos.push(id);
    }
    validate_and_levelize(&aig)
}

fn resolve(
    aig: &mut Aig,
    var_node: &HashMap<u64, NodeId>,
    inverter: &mut HashMap<NodeId, NodeId>,
    l: u64,
) -> Result<NodeId, AigError> {
    let base = *var_node.get(&variable(l)).ok_or(AigError::UndefinedVariable { literal: l, variable: variable(l) })?;
    if !is_complemented(l) {
        return Ok(base);
    }
    Ok(*inverter.entry(base).or_insert_with(|| aig.add_not(base)))
}
