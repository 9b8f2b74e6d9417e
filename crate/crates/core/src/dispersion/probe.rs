//! Parallel probing of the head's unexplored ports.

use crate::agents::{Agent, AgentId, Phase, ProbeTuple, Role, Task};
use crate::graph::{edge_type, EdgeType, Port};
use crate::p1tree::DfsNodeType;
use crate::runtime::{Action, Local, Marker, ProbeOutcome};

use super::{general, needs_home, rooted, scan, Scan};

/// A vacated agent's record of where it lived, as seen by the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evidence {
    pub id: AgentId,
    pub p1_neighbor: AgentId,
    pub port_at_p1_neighbor: Port,
    pub node_type: DfsNodeType,
}

fn lookup(pool: &[Evidence], p1: AgentId, port: Port) -> Option<&Evidence> {
    pool.iter().find(|e| e.p1_neighbor == p1 && e.port_at_p1_neighbor == port)
}

/// Decides what a returned scout saw, matching its walk against the pool's
/// `(P1Neighbor, portAtP1Neighbor)` records. `x` is the ID owning the head node.
pub fn resolve(x: AgentId, scout: &Agent, pool: &[Evidence]) -> (ProbeOutcome, Option<DfsNodeType>) {
    if let Some(id) = scout.scout_found {
        return (ProbeOutcome::Occupied(id), scout.scout_found_type);
    }
    let vacated = |e: Option<&Evidence>| match e {
        Some(e) => (ProbeOutcome::Vacated(e.id), Some(e.node_type)),
        None => (ProbeOutcome::Empty, None),
    };
    let (Some(p_xy), Some(p_yx)) = (scout.scout_port, scout.scout_return_port) else {
        return (ProbeOutcome::Empty, None);
    };
    if p_yx == 1 {
        return vacated(lookup(pool, x, p_xy));
    }
    let Some(p_zy) = scout.scout_port_at_p1_neighbor else {
        return (ProbeOutcome::Empty, None);
    };
    if let Some(z) = scout.scout_p1_neighbor {
        return vacated(lookup(pool, z, p_zy));
    }
    if p_zy == 1 {
        return (ProbeOutcome::Empty, None);
    }
    match (scout.scout_p1p1_neighbor, scout.scout_port_at_p1p1_neighbor) {
        (Some(w), Some(p_wz)) => match lookup(pool, w, p_wz) {
            Some(c) => vacated(lookup(pool, c.id, p_zy)),
            None => (ProbeOutcome::Empty, None),
        },
        _ => (ProbeOutcome::Empty, None),
    }
}

/// Looks for a settled agent of the scout's own tree; notes foreign ones.
fn observe(l: &Local<'_>) -> (Option<(AgentId, DfsNodeType)>, bool, bool) {
    let me = l.me();
    let (mut own, mut foreign, mut higher) = (None, false, false);
    for &i in l.here() {
        let a = l.get(i);
        // a larger traversal's group may be vacating the evidence chain
        higher |= a.tree_label > me.tree_label && !a.tree_label.same_tree(&me.tree_label);
        if a.role != Role::Home {
            continue;
        }
        if a.tree_label.same_tree(&me.tree_label) {
            own = Some((a.id, a.node_type));
        } else {
            foreign = true;
        }
    }
    (own, foreign, higher)
}

/// One cycle of a scout trip: out to y, possibly on to y's port-1 neighbor z
/// and z's port-1 neighbor w, then back the same way.
pub(super) fn scout_step(l: &mut Local<'_>) -> Action {
    let phase = l.me().scout_phase;
    let arrival = l.me().arrival_port.unwrap_or(0);
    match phase {
        0 => {
            let me = l.me_mut();
            me.scout_phase = 1;
            Action::Move(me.scout_port.expect("scout without port"))
        }
        1 => {
            let (own, foreign, higher) = observe(l);
            let me = l.me_mut();
            let p_xy = me.scout_port.expect("scout without port");
            me.scout_return_port = Some(arrival);
            me.scout_edge_type = Some(edge_type(p_xy, arrival));
            me.scout_foreign = foreign;
            me.saw_higher = higher;
            if let Some((id, t)) = own {
                me.scout_found = Some(id);
                me.scout_found_type = Some(t);
            }
            if own.is_some() || arrival == 1 {
                me.scout_phase = 0;
                me.task = Task::Idle;
                Action::Move(arrival)
            } else {
                me.scout_phase = 2;
                Action::Move(1)
            }
        }
        2 => {
            let (own, _, higher) = observe(l);
            let me = l.me_mut();
            me.saw_higher |= higher;
            me.scout_port_at_p1_neighbor = Some(arrival);
            me.scout_p1_neighbor = own.map(|o| o.0);
            if own.is_some() || arrival == 1 {
                me.scout_phase = 5;
                Action::Move(arrival)
            } else {
                me.scout_phase = 3;
                Action::Move(1)
            }
        }
        3 => {
            let (own, _, higher) = observe(l);
            let me = l.me_mut();
            me.saw_higher |= higher;
            me.scout_port_at_p1p1_neighbor = Some(arrival);
            me.scout_p1p1_neighbor = own.map(|o| o.0);
            me.scout_phase = 4;
            Action::Move(arrival)
        }
        4 => {
            let me = l.me_mut();
            me.scout_phase = 5;
            Action::Move(me.scout_port_at_p1_neighbor.expect("walked past z"))
        }
        _ => {
            let me = l.me_mut();
            me.scout_phase = 0;
            me.task = Task::Idle;
            Action::Move(me.scout_return_port.expect("walked past y"))
        }
    }
}

/// The agent owning the head node, settled or travelling in the pool.
pub(super) fn psi(l: &Local<'_>, s: &Scan) -> Option<usize> {
    let id = l.me().ctx.prev_id?;
    s.own.filter(|&i| l.get(i).id == id).or_else(|| super::find_by_id(l, &s.members, Some(id)))
}

/// First port after `checked` that is neither the parent port nor past `limit`.
fn next_port(checked: u32, parent: Option<Port>, limit: Port) -> Option<Port> {
    let mut p = checked + 1;
    if Some(p) == parent {
        p += 1;
    }
    (p <= limit).then_some(p)
}

pub(super) fn start(l: &mut Local<'_>, s: &Scan, x: usize, shortcut: bool) -> Action {
    let degree = l.degree() as Port;
    let (has_parent, weight) = (l.get(x).parent_port.is_some(), l.me().tree_label.weight);
    let limit = if shortcut {
        // the first weight-1 ports, not counting the parent's
        let want = weight.saturating_sub(1 + has_parent as u32);
        let extra = matches!(l.get(x).parent_port, Some(p) if p <= want + 1) as u32;
        (want + extra).min(degree)
    } else {
        degree
    };
    {
        let psi = l.get_mut(x);
        psi.checked = 0;
        psi.probe_result = None;
    }
    let tree = l.me().tree_label;
    l.mark(Marker::ProbeStart { tree, pool: s.members.len() as u32 });
    let me = l.me_mut();
    me.ctx.phase = if shortcut { Phase::ProbeShortcut } else { Phase::Probe };
    me.ctx.next_port = Some(limit);
    match issue_batch(l, s, x) {
        Some(a) => a,
        None => finish(l, s, x),
    }
}

/// Hands the next ports to the pool in ID order. `None` when nothing is left.
fn issue_batch(l: &mut Local<'_>, s: &Scan, x: usize) -> Option<Action> {
    let limit = l.me().ctx.next_port.unwrap_or(0);
    let parent = l.get(x).parent_port;
    let mut checked = l.get(x).checked;
    let me = l.index();
    let mut lead_scouts = false;
    for &i in &s.members {
        let Some(p) = next_port(checked, parent, limit) else { break };
        checked = p;
        let a = l.get_mut(i);
        a.clear_scout_fields();
        a.scout_port = Some(p);
        a.task = Task::Scout;
        lead_scouts |= i == me;
    }
    if checked == l.get(x).checked {
        return None;
    }
    l.get_mut(x).checked = checked;
    Some(if lead_scouts { scout_step(l) } else { Action::Stay })
}

fn better(a: &ProbeTuple, b: &ProbeTuple) -> bool {
    (a.edge_type.priority(), a.port_at_x) < (b.edge_type.priority(), b.port_at_x)
}

/// Runs once the batch is back: resolves every report, keeps the best
/// candidate in ψ(x).probeResult, then issues the next batch or decides.
pub(super) fn aggregate(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let Some(x) = psi(l, &s) else {
        // a larger traversal took the node's agent meanwhile
        return general::lose(l, None, None);
    };
    let x_id = l.get(x).id;
    let pool: Vec<Evidence> = s
        .members
        .iter()
        .map(|&i| l.get(i))
        .filter(|a| a.state == crate::agents::AgentState::SettledScout && !a.free)
        .filter_map(|a| {
            Some(Evidence {
                id: a.id,
                p1_neighbor: a.p1_neighbor?,
                port_at_p1_neighbor: a.port_at_p1_neighbor?,
                node_type: a.node_type,
            })
        })
        .collect();
    let tree = l.me().tree_label;
    let shortcut = l.me().ctx.phase == Phase::ProbeShortcut;
    // a larger traversal next door ends ours
    let chase_port = s.members.iter().map(|&i| l.get(i)).find(|a| a.saw_higher).and_then(|a| a.scout_port);
    if chase_port.is_some() {
        for &i in &s.members {
            l.get_mut(i).clear_scout_fields();
        }
        return general::lose(l, None, chase_port);
    }
    for &i in &s.members {
        let a = l.get(i);
        let Some(port) = a.scout_port else { continue };
        let remote = a.scout_return_port.unwrap_or(0);
        let (outcome, ntype) = resolve(x_id, a, &pool);
        let et = a.scout_edge_type.unwrap_or(EdgeType::Tpq);
        let truly_empty = outcome == ProbeOutcome::Empty && !a.scout_foreign;
        l.mark(Marker::Probe { tree, port, remote_port: remote, outcome });
        let neighbor = match outcome {
            ProbeOutcome::Empty => None,
            ProbeOutcome::Occupied(id) | ProbeOutcome::Vacated(id) => Some(id),
        };
        let candidate = match outcome {
            ProbeOutcome::Empty => true,
            _ => ntype == Some(DfsNodeType::PartiallyVisited) && matches!(et, EdgeType::Tp1 | EdgeType::T11),
        };
        let psi = l.get_mut(x);
        if port == 1 {
            if let Some(id) = neighbor {
                psi.p1_neighbor = Some(id);
                psi.port_at_p1_neighbor = Some(remote);
            }
        }
        if candidate {
            let t = ProbeTuple {
                port_at_x: port,
                edge_type: et,
                neighbor_node_type: ntype,
                neighbor_settled_agent: neighbor,
            };
            if psi.probe_result.is_none_or(|b| better(&t, &b)) {
                psi.probe_result = Some(t);
            }
        }
        l.get_mut(i).clear_scout_fields();
        if shortcut && truly_empty {
            // reserve this port for one agent that still needs a home
            if let Some(&j) = s.members.iter().find(|&&j| needs_home(l.get(j)) && l.get(j).recent_port.is_none()) {
                l.get_mut(j).recent_port = Some(port);
            }
        }
    }
    if let Some(a) = issue_batch(l, &s, x) {
        return a;
    }
    finish(l, &s, x)
}

fn finish(l: &mut Local<'_>, s: &Scan, x: usize) -> Action {
    let tree = l.me().tree_label;
    l.mark(Marker::ProbeEnd { tree });
    if l.me().ctx.phase == Phase::ProbeShortcut {
        let waiting: Vec<usize> = s.members.iter().copied().filter(|&j| needs_home(l.get(j))).collect();
        if waiting.iter().all(|&j| l.get(j).recent_port.is_some()) {
            return rooted::shortcut(l, s, x, &waiting);
        }
        for &j in &waiting {
            l.get_mut(j).recent_port = None;
        }
    }
    l.me_mut().ctx.next_port = None;
    rooted::decide(l, s, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scout(port: Port, back: Port) -> Agent {
        let mut a = Agent::new(9);
        a.scout_port = Some(port);
        a.scout_return_port = Some(back);
        a
    }

    fn ev(id: AgentId, p1: AgentId, port: Port) -> Evidence {
        Evidence { id, p1_neighbor: p1, port_at_p1_neighbor: port, node_type: DfsNodeType::Visited }
    }

    #[test]
    fn occupied_wins() {
        let mut a = scout(2, 3);
        a.scout_found = Some(4);
        a.scout_found_type = Some(DfsNodeType::FullyVisited);
        assert_eq!(resolve(1, &a, &[]), (ProbeOutcome::Occupied(4), Some(DfsNodeType::FullyVisited)));
    }

    #[test]
    fn port_one_back_matches_head() {
        let a = scout(3, 1);
        assert_eq!(resolve(6, &a, &[]).0, ProbeOutcome::Empty);
        assert_eq!(resolve(6, &a, &[ev(5, 6, 3)]).0, ProbeOutcome::Vacated(5));
        assert_eq!(resolve(6, &a, &[ev(5, 6, 2)]).0, ProbeOutcome::Empty);
    }

    #[test]
    fn one_and_two_level_matches() {
        let mut a = scout(1, 2);
        a.scout_port_at_p1_neighbor = Some(3);
        a.scout_p1_neighbor = Some(7);
        assert_eq!(resolve(1, &a, &[ev(5, 7, 3)]).0, ProbeOutcome::Vacated(5));

        let mut b = scout(1, 2);
        b.scout_port_at_p1_neighbor = Some(3);
        b.scout_p1p1_neighbor = Some(8);
        b.scout_port_at_p1p1_neighbor = Some(4);
        let pool = [ev(5, 2, 3), ev(2, 8, 4)];
        assert_eq!(resolve(1, &b, &pool).0, ProbeOutcome::Vacated(5));
        assert_eq!(resolve(1, &b, &pool[..1]).0, ProbeOutcome::Empty);

        let mut c = scout(1, 2);
        c.scout_port_at_p1_neighbor = Some(1);
        assert_eq!(resolve(1, &c, &pool).0, ProbeOutcome::Empty);
    }

    /// The probe-rules figure: x has twelve neighbors, each resolved by one rule.
    #[test]
    fn probe_rules_figure() {
        use DfsNodeType::{FullyVisited, PartiallyVisited, Visited};
        // port at x, then (xi(z), p_zy) and (xi(w), p_wz) as far as the scout walked
        let walk = |p_xy: Port, z: Option<(Option<AgentId>, Port)>, w: Option<(Option<AgentId>, Port)>| {
            let mut a = scout(p_xy, if z.is_some() { 2 } else { 1 });
            if let Some((id, p)) = z {
                a.scout_p1_neighbor = id;
                a.scout_port_at_p1_neighbor = Some(p);
            }
            if let Some((id, p)) = w {
                a.scout_p1p1_neighbor = id;
                a.scout_port_at_p1p1_neighbor = Some(p);
            }
            a
        };
        let typed = |id, p1, port, t| Evidence { id, p1_neighbor: p1, port_at_p1_neighbor: port, node_type: t };
        let pool = [
            typed(10, 20, 2, Visited),
            typed(11, 21, 2, PartiallyVisited),
            typed(12, 22, 1, FullyVisited),
            typed(40, 31, 1, Visited),
            typed(41, 32, 1, Visited),
            typed(13, 41, 2, PartiallyVisited),
            typed(42, 33, 1, Visited),
            typed(14, 42, 2, FullyVisited),
        ];
        let mut y1 = scout(1, 1);
        y1.scout_found = Some(1);
        let cases = [
            ("R1", y1, ProbeOutcome::Occupied(1)),
            ("R2", scout(7, 1), ProbeOutcome::Empty),
            ("R3a-i", walk(3, Some((Some(20), 2)), None), ProbeOutcome::Vacated(10)),
            ("R3a-i'", walk(4, Some((Some(21), 2)), None), ProbeOutcome::Vacated(11)),
            ("R3a-i''", walk(5, Some((Some(22), 1)), None), ProbeOutcome::Vacated(12)),
            ("R3a-ii", walk(6, Some((Some(23), 1)), None), ProbeOutcome::Empty),
            ("R3b", walk(2, Some((None, 1)), None), ProbeOutcome::Empty),
            ("R3c-i", walk(8, Some((None, 2)), Some((None, 1))), ProbeOutcome::Empty),
            ("R3c-ii beta", walk(9, Some((None, 2)), Some((Some(30), 1))), ProbeOutcome::Empty),
            ("R3c-ii beta'", walk(10, Some((None, 2)), Some((Some(31), 1))), ProbeOutcome::Empty),
            ("R3c-ii alpha", walk(11, Some((None, 2)), Some((Some(32), 1))), ProbeOutcome::Vacated(13)),
            ("R3c-ii alpha'", walk(12, Some((None, 2)), Some((Some(33), 1))), ProbeOutcome::Vacated(14)),
        ];
        for (rule, a, want) in cases {
            assert_eq!(resolve(100, &a, &pool).0, want, "{rule}");
        }
        assert_eq!(resolve(100, &walk(4, Some((Some(21), 2)), None), &pool).1, Some(PartiallyVisited));
        assert_eq!(resolve(100, &walk(12, Some((None, 2)), Some((Some(33), 1))), &pool).1, Some(FullyVisited));
    }

    #[test]
    fn port_skipping() {
        assert_eq!(next_port(0, Some(1), 3), Some(2));
        assert_eq!(next_port(2, Some(3), 3), None);
        assert_eq!(next_port(2, Some(3), 4), Some(4));
        assert_eq!(next_port(0, None, 0), None);
    }
}
